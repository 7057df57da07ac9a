//! Real cubic root finding: trigonometric form for three real roots,
//! Cardano for a single real root, Newton polish on the real roots.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative tolerance on the discriminant, scaled by the root magnitude.
const DISCRIMINANT_RTOL: f64 = 1e-12;
const NEWTON_POLISH_STEPS: usize = 2;

/// Roots of a monic cubic `x^3 + a2 x^2 + a1 x + a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CubicRoots {
    /// Three real roots, ascending.
    Real([f64; 3]),
    /// One real root and a complex-conjugate pair `re ± i·im` (`im > 0`).
    OneReal { real: f64, re: f64, im: f64 },
}

fn eval(a2: f64, a1: f64, a0: f64, x: f64) -> f64 {
    ((x + a2) * x + a1) * x + a0
}

fn polish(a2: f64, a1: f64, a0: f64, mut x: f64) -> f64 {
    for _ in 0..NEWTON_POLISH_STEPS {
        let fx = eval(a2, a1, a0, x);
        let dfx = (3.0 * x + 2.0 * a2) * x + a1;
        if dfx == 0.0 || !dfx.is_finite() {
            break;
        }
        let next = x - fx / dfx;
        // near multiple roots Newton can overshoot; keep only improvements
        if eval(a2, a1, a0, next).abs() < fx.abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

pub fn solve_cubic(a2: f64, a1: f64, a0: f64) -> CubicRoots {
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let root_scale = a2.abs().max(a1.abs().sqrt()).max(a0.abs().cbrt());
    let tol = DISCRIMINANT_RTOL * root_scale.powi(6);

    if disc > tol {
        let sqrt_d = disc.sqrt();
        let u = (-half_q - half_q.signum() * sqrt_d).cbrt();
        let v = if u != 0.0 { -third_p / u } else { 0.0 };
        let real = polish(a2, a1, a0, u + v - shift);
        let re = -(u + v) / 2.0 - shift;
        let im = (3.0_f64.sqrt() / 2.0) * (u - v).abs();
        return CubicRoots::OneReal { real, re, im };
    }

    let mut roots = if p < 0.0 {
        let m = 2.0 * (-third_p).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        [0, 1, 2].map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() - shift)
    } else {
        // p and q are both at noise level: (near-)triple root
        let t = -q.cbrt();
        [t - shift; 3]
    };
    for r in roots.iter_mut() {
        *r = polish(a2, a1, a0, *r);
    }
    roots.sort_by(f64::total_cmp);
    CubicRoots::Real(roots)
}

/// Three sorted real roots of `x^3 + a2 x^2 + a1 x + a0`, or
/// [`Error::ComplexRoots`] when the cubic has a complex pair.
pub fn solve_cubic_real(a2: f64, a1: f64, a0: f64) -> Result<[f64; 3]> {
    match solve_cubic(a2, a1, a0) {
        CubicRoots::Real(r) => Ok(r),
        CubicRoots::OneReal { .. } => Err(Error::ComplexRoots),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn triple_root() {
        let r = solve_cubic_real(-3.0, 3.0, -1.0).unwrap();
        assert!(close(r, [1.0; 3], 1e-5), "{r:?}");
    }

    #[test]
    fn odd_cubic() {
        let r = solve_cubic_real(0.0, -1.0, 0.0).unwrap();
        assert!(close(r, [-1.0, 0.0, 1.0], 1e-14), "{r:?}");
    }

    #[test]
    fn triangle_example_coefficients() {
        let r = solve_cubic_real(-30.0, 216.0, -270.0).unwrap();
        assert!(close(r, [1.577, 8.662, 19.76], 1e-3), "{r:?}");
    }

    #[test]
    fn complex_pair_is_reported() {
        // (x - 2)(x^2 + 1)
        match solve_cubic(-2.0, 1.0, -2.0) {
            CubicRoots::OneReal { real, re, im } => {
                assert!((real - 2.0).abs() < 1e-12);
                assert!(re.abs() < 1e-12);
                assert!((im - 1.0).abs() < 1e-12);
            }
            other => panic!("expected complex pair, got {other:?}"),
        }
        assert!(matches!(solve_cubic_real(-2.0, 1.0, -2.0), Err(Error::ComplexRoots)));
    }

    #[test]
    fn residual_contract() {
        for &(a2, a1, a0) in &[(-30.0_f64, 216.0_f64, -270.0_f64), (1.5, -7.0, 0.3), (-120.0, 3000.0, -1.0e4)] {
            let scale = 1.0_f64.max(a2.abs()).max(a1.abs()).max(a0.abs());
            if let Ok(r) = solve_cubic_real(a2, a1, a0) {
                for x in r {
                    assert!(eval(a2, a1, a0, x).abs() <= 1e-9 * scale);
                }
            }
        }
    }

    /// Sign-scanning bisection oracle on a bracketing grid.
    fn bisection_roots(a2: f64, a1: f64, a0: f64, lo: f64, hi: f64) -> Vec<f64> {
        let f = |x: f64| eval(a2, a1, a0, x);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let mut roots = Vec::new();
        for i in 0..steps {
            let (mut a, mut b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
            let (fa, fb) = (f(a), f(b));
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa * fb < 0.0 {
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if f(a) * f(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        roots
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn agrees_with_bisection(
            r1 in -50.0f64..50.0,
            g1 in 0.05f64..30.0,
            g2 in 0.05f64..30.0,
        ) {
            let roots = [r1, r1 + g1, r1 + g1 + g2];
            let a2 = -(roots[0] + roots[1] + roots[2]);
            let a1 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
            let a0 = -roots[0] * roots[1] * roots[2];
            let got = solve_cubic_real(a2, a1, a0).unwrap();
            let oracle = bisection_roots(a2, a1, a0, roots[0] - 1.0, roots[2] + 1.0);
            prop_assert_eq!(oracle.len(), 3);
            for (g, o) in got.iter().zip(&oracle) {
                prop_assert!((g - o).abs() <= 1e-8 * (1.0 + o.abs()), "{:?} vs {:?}", got, oracle);
            }
        }
    }
}
