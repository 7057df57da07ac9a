//! Triangular density matching three given moments. The abscissae are the
//! roots of a cubic whose coefficients are elementary symmetric polynomials
//! recovered from the moments.

use serde::Serialize;

pub use crate::cubic::solve_cubic_real;
use crate::error::{Error, Result};

/// Values of `x1` in `[-NEGATIVE_CLAMP_RTOL * M1, 0)` are rounded to zero.
pub const NEGATIVE_CLAMP_RTOL: f64 = 1e-9;

/// Hat-shaped density on `[x1, x3]` peaking at `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangularFit {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub height: f64,
}

impl TriangularFit {
    /// Fit from abscissae in any order.
    pub fn from_abscissae(mut xs: [f64; 3]) -> Self {
        xs.sort_by(f64::total_cmp);
        let width = xs[2] - xs[0];
        let height = if width > 0.0 { 2.0 / width } else { f64::INFINITY };
        Self { x1: xs[0], x2: xs[1], x3: xs[2], height }
    }

    pub fn abscissae(&self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn density(&self, lambda: f64) -> f64 {
        triangle_density(self, lambda)
    }

    /// `samples` evenly spaced `(λ, t(λ))` rows over the support.
    pub fn density_csv(&self, samples: usize) -> String {
        let mut out = String::from("lambda,density\n");
        let n = samples.max(2);
        for i in 0..n {
            let l = self.x1 + (self.x3 - self.x1) * i as f64 / (n - 1) as f64;
            out.push_str(&format!("{l},{}\n", self.density(l)));
        }
        out
    }
}

/// Elementary symmetric polynomials of the abscissae from the moments.
fn symmetric_polys(m1: f64, m2: f64, m3: f64) -> [f64; 3] {
    [3.0 * m1, 9.0 * m1 * m1 - 6.0 * m2, 27.0 * m1 * m1 * m1 - 36.0 * m1 * m2 + 10.0 * m3]
}

pub fn fit_triangle(m1: f64, m2: f64, m3: f64) -> Result<TriangularFit> {
    if !(m1 > 0.0) {
        return Err(Error::InvalidParams(format!("first moment must be positive, got {m1}")));
    }
    let [p1, p2, p3] = symmetric_polys(m1, m2, m3);
    let mut roots = solve_cubic_real(-p1, p2, -p3).map_err(|_| Error::NotRealizable)?;
    if roots[0] < 0.0 {
        if roots[0] >= -NEGATIVE_CLAMP_RTOL * m1 {
            roots[0] = 0.0;
        } else {
            return Err(Error::NegativeSupport { x1: roots[0] });
        }
    }
    Ok(TriangularFit::from_abscissae(roots))
}

/// First three moments of the triangular density.
pub fn triangle_moments(fit: &TriangularFit) -> (f64, f64, f64) {
    let (a, b, c) = (fit.x1, fit.x2, fit.x3);
    let m1 = (a + b + c) / 3.0;
    let m2 = (a * a + b * b + c * c + a * b + a * c + b * c) / 6.0;
    let m3 = (a.powi(3)
        + a * a * b
        + a * a * c
        + b.powi(3)
        + b * b * a
        + b * b * c
        + c.powi(3)
        + c * c * a
        + c * c * b
        + a * b * c)
        / 10.0;
    (m1, m2, m3)
}

pub fn triangle_density(fit: &TriangularFit, lambda: f64) -> f64 {
    let TriangularFit { x1, x2, x3, height } = *fit;
    if lambda < x1 || lambda > x3 {
        0.0
    } else if lambda < x2 {
        height * (lambda - x1) / (x2 - x1)
    } else if x3 > x2 {
        height * (x3 - lambda) / (x3 - x2)
    } else {
        height
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_abscissae() {
        let fit = fit_triangle(10.0, 114.0, 1431.0).unwrap();
        assert!((fit.x1 - 1.577).abs() < 1e-2);
        assert!((fit.x2 - 8.662).abs() < 1e-2);
        assert!((fit.x3 - 19.76).abs() < 1e-2);
        assert!((fit.height - 2.0 / (fit.x3 - fit.x1)).abs() < 1e-15);
    }

    #[test]
    fn reference_abscissae_round_trip() {
        let fit = TriangularFit::from_abscissae([1.577, 8.662, 19.76]);
        let (m1, m2, m3) = triangle_moments(&fit);
        assert!((m1 - 10.0).abs() <= 1e-3 * 10.0);
        assert!((m2 - 114.0).abs() <= 1e-3 * 114.0);
        assert!((m3 - 1431.0).abs() <= 1e-3 * 1431.0);
    }

    #[test]
    fn point_mass() {
        let c: f64 = 5.0;
        let fit = fit_triangle(c, c * c, c.powi(3)).unwrap();
        for x in fit.abscissae() {
            assert!((x - c).abs() < 1e-4, "{fit:?}");
        }
        let fit = TriangularFit::from_abscissae([5.0; 3]);
        assert_eq!(triangle_moments(&fit), (5.0, 25.0, 125.0));
    }

    #[test]
    fn unit_triangle() {
        let fit = TriangularFit::from_abscissae([0.0, 1.0, 2.0]);
        let (m1, m2, m3) = triangle_moments(&fit);
        assert!((m1 - 1.0).abs() < 1e-15);
        assert!((m2 - 7.0 / 6.0).abs() < 1e-15);
        assert!((m3 - 1.5).abs() < 1e-15);
        let back = fit_triangle(1.0, 7.0 / 6.0, 1.5).unwrap();
        assert_eq!(back.x1, 0.0);
        assert!((back.x2 - 1.0).abs() < 1e-12 && (back.x3 - 2.0).abs() < 1e-12);
        assert_eq!(fit.density(1.0), 1.0);
        assert_eq!(fit.density(-0.5), 0.0);
        assert_eq!(fit.density(3.0), 0.0);
    }

    #[test]
    fn moments_by_quadrature() {
        // trapezoid oracle on the piecewise-linear density
        let fit = TriangularFit::from_abscissae([0.7, 3.1, 9.4]);
        let n = 200_000;
        let h = (fit.x3 - fit.x1) / n as f64;
        let mut m = [0.0; 4];
        for i in 0..=n {
            let l = fit.x1 + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 } * h * fit.density(l);
            m[0] += w;
            m[1] += w * l;
            m[2] += w * l * l;
            m[3] += w * l * l * l;
        }
        let (m1, m2, m3) = triangle_moments(&fit);
        assert!((m[0] - 1.0).abs() < 1e-6);
        assert!((m[1] - m1).abs() < 1e-5 * m1);
        assert!((m[2] - m2).abs() < 1e-5 * m2);
        assert!((m[3] - m3).abs() < 1e-5 * m3);
    }

    #[test]
    fn complex_abscissae_rejected() {
        // moments of the expected spectrum at k = 3, r = 0
        let err = fit_triangle(6.0, 42.0, 294.0).unwrap_err();
        assert!(matches!(err, Error::NotRealizable | Error::NegativeSupport { .. }), "{err}");
        assert!(matches!(fit_triangle(1.0, 2.0, 1.0), Err(Error::NotRealizable | Error::NegativeSupport { .. })));
    }

    #[test]
    fn negative_support_rejected() {
        let fit = TriangularFit::from_abscissae([-1.0, 2.0, 4.0]);
        let (m1, m2, m3) = triangle_moments(&fit);
        assert!(matches!(fit_triangle(m1, m2, m3), Err(Error::NegativeSupport { .. })));
        assert!(fit_triangle(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for xs in [[0.0, 1.0, 2.0], [1.577, 8.662, 19.76], [0.0, 0.0, 3.0], [2.0, 5.0, 5.0]] {
            let fit = TriangularFit::from_abscissae(xs);
            let n = 10_000;
            let h = (fit.x3 - fit.x1) / n as f64;
            let integral: f64 = (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * h * fit.density(fit.x1 + i as f64 * h)
                })
                .sum();
            assert!((integral - 1.0).abs() < 1e-6, "{xs:?}: {integral}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip(a in 0.0f64..100.0, b in 0.0f64..100.0, c in 0.0f64..100.0) {
            let fit = TriangularFit::from_abscissae([a, b, c]);
            let (m1, m2, m3) = triangle_moments(&fit);
            prop_assume!(m1 > 0.0);
            let back = fit_triangle(m1, m2, m3).unwrap();
            for (x, y) in back.abscissae().iter().zip(fit.abscissae()) {
                prop_assert!((x - y).abs() <= 1e-8 * (1.0 + fit.x3), "{:?} vs {:?}", back, fit);
            }
        }

        #[test]
        fn scale_equivariance(a in 0.0f64..50.0, g1 in 0.01f64..50.0, g2 in 0.01f64..50.0, s in 0.1f64..10.0) {
            let fit = TriangularFit::from_abscissae([a, a + g1, a + g1 + g2]);
            let (m1, m2, m3) = triangle_moments(&fit);
            let base = fit_triangle(m1, m2, m3).unwrap();
            let scaled = fit_triangle(s * m1, s * s * m2, s * s * s * m3).unwrap();
            for (x, y) in scaled.abscissae().iter().zip(base.abscissae()) {
                prop_assert!((x - s * y).abs() <= 1e-8 * s * (1.0 + base.x3));
            }
        }
    }
}
