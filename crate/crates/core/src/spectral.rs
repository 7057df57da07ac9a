//! Laplacian spectral moments: exact trace identities from degrees and
//! triangles, closed-form small-world expectations, and eigenvalue-based
//! ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{count_triangles, laplacian, Graph};
use crate::linalg::{symmetric_eigen, JacobiOptions, Matrix};

/// First three raw Laplacian moments and their degree-normalized forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralMoments {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub mean_degree: f64,
    /// `q_k / mean_degree^k` for k = 1, 2, 3.
    pub normalized: [f64; 3],
}

impl SpectralMoments {
    /// Builds moments from raw values; the mean degree equals `q1`.
    pub fn from_raw(q1: f64, q2: f64, q3: f64) -> Result<Self> {
        if !(q1 > 0.0) {
            return Err(Error::EmptyGraph);
        }
        let d = q1;
        Ok(Self { q1, q2, q3, mean_degree: d, normalized: [q1 / d, q2 / (d * d), q3 / (d * d * d)] })
    }

    pub fn raw(&self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }
}

/// Which triangle density enters the closed-form third moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MomentVariant {
    /// Triangle density `(1/3) C(2k, 2)` per node.
    Paper,
    /// Triangle density `k(k-1)/2` per node, the exact ring-lattice count.
    #[default]
    Corrected,
}

impl std::str::FromStr for MomentVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Self::Paper),
            "corrected" => Ok(Self::Corrected),
            other => Err(format!("unknown moment variant {other:?} (expected paper|corrected)")),
        }
    }
}

impl std::fmt::Display for MomentVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Corrected => "corrected",
        })
    }
}

/// Exact q1..q3 from the degree sequence and triangle count:
/// `q1 = Σd/N`, `q2 = (Σd² + Σd)/N`, `q3 = (Σd³ + 3Σd² - 6T)/N`.
pub fn exact_moments(g: &Graph) -> Result<SpectralMoments> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let (mut s1, mut s2, mut s3) = (0u128, 0u128, 0u128);
    for i in 0..n {
        let d = g.degree(i) as u128;
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
    }
    let t = count_triangles(g) as u128;
    let nf = n as f64;
    let q3 = (s3 + 3 * s2) as f64 - (6 * t) as f64;
    SpectralMoments::from_raw(s1 as f64 / nf, (s2 + s1) as f64 / nf, q3 / nf)
}

/// `E[d], E[d^2], E[d^3]` for a Poisson(r) degree shifted by `2k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeMoments {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

pub fn expected_degree_moments(half_degree: usize, rate: f64) -> DegreeMoments {
    let k = half_degree as f64;
    let r = rate;
    DegreeMoments {
        first: r + 2.0 * k,
        second: r * r + (1.0 + 4.0 * k) * r + 4.0 * k * k,
        third: r.powi(3) + (3.0 + 6.0 * k) * r * r + (1.0 + 6.0 * k + 12.0 * k * k) * r + 8.0 * k.powi(3),
    }
}

/// Large-N expected Laplacian moments of the small-world model.
pub fn expected_moments(half_degree: usize, rate: f64, variant: MomentVariant) -> Result<SpectralMoments> {
    if half_degree == 0 || !(rate >= 0.0) {
        return Err(Error::InvalidParams(format!("need k >= 1 and r >= 0, got k = {half_degree}, r = {rate}")));
    }
    let k = half_degree as f64;
    let r = rate;
    let q1 = r + 2.0 * k;
    let q2 = r * r + (4.0 * k + 2.0) * r + 4.0 * k * k + 2.0 * k;
    let shared = r.powi(3) + (6.0 * k + 6.0) * r * r + (12.0 * k * k + 18.0 * k + 4.0) * r + 8.0 * k.powi(3);
    let q3 = match variant {
        MomentVariant::Paper => shared + 8.0 * k * k + 2.0 * k,
        MomentVariant::Corrected => shared + 9.0 * k * k + 3.0 * k,
    };
    SpectralMoments::from_raw(q1, q2, q3)
}

/// Eigenvalues of a symmetric matrix, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSpectrum {
    pub eigenvalues: Vec<f64>,
}

impl EigenSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// Second-smallest eigenvalue (algebraic connectivity for a Laplacian).
    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    /// `(1/N) Σ λ^k` for k = 1, 2, 3.
    pub fn power_moments(&self) -> [f64; 3] {
        let n = self.eigenvalues.len() as f64;
        let mut m = [0.0; 3];
        for &l in &self.eigenvalues {
            m[0] += l;
            m[1] += l * l;
            m[2] += l * l * l;
        }
        m.map(|s| s / n)
    }

    pub fn moments(&self) -> Result<SpectralMoments> {
        let [q1, q2, q3] = self.power_moments();
        SpectralMoments::from_raw(q1, q2, q3)
    }

    /// Count of eigenvalues with `|λ| <= tol`.
    pub fn zero_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.abs() <= tol).count()
    }

    /// Header `lambda`, then one eigenvalue per line in ascending order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda\n");
        out.extend(self.eigenvalues.iter().map(|l| format!("{l}\n")));
        out
    }
}

pub fn eigenvalues(sym: &Matrix) -> Result<EigenSpectrum> {
    let eig = symmetric_eigen(sym, false, JacobiOptions::default())?;
    Ok(EigenSpectrum { eigenvalues: eig.values })
}

pub fn laplacian_spectrum(g: &Graph) -> Result<EigenSpectrum> {
    eigenvalues(&laplacian(g))
}

/// Equal-width histogram of an eigenvalue sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Normalized so that `Σ density * width = 1`.
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,count,density\n");
        for (i, (&c, &d)) in self.counts.iter().zip(&self.densities).enumerate() {
            out.push_str(&format!("{},{},{},{}\n", self.edges[i], self.edges[i + 1], c, d));
        }
        out
    }
}

/// Histogram on `[λ_1, λ_N]`.
pub fn esd_histogram(spectrum: &EigenSpectrum, bin_count: usize) -> Result<Histogram> {
    esd_histogram_on(spectrum, bin_count, spectrum.min(), spectrum.max())
}

/// Histogram on an explicit range `[lo, hi]`; values outside are ignored.
/// A zero-width range collapses to one unit-width bin centred on `lo`.
pub fn esd_histogram_on(spectrum: &EigenSpectrum, bin_count: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bin_count == 0 {
        return Err(Error::InvalidParams("histogram needs at least one bin".into()));
    }
    if spectrum.is_empty() || !(hi >= lo) {
        return Err(Error::InvalidParams(format!("bad histogram range [{lo}, {hi}]")));
    }
    let n = spectrum.len() as f64;
    if hi == lo {
        let inside = spectrum.eigenvalues.iter().filter(|&&l| l == lo).count();
        return Ok(Histogram {
            edges: vec![lo - 0.5, lo + 0.5],
            counts: vec![inside],
            densities: vec![inside as f64 / n],
        });
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0usize; bin_count];
    for &l in &spectrum.eigenvalues {
        if l < lo || l > hi {
            continue;
        }
        let bin = (((l - lo) / width) as usize).min(bin_count - 1);
        counts[bin] += 1;
    }
    let edges = (0..=bin_count).map(|i| lo + i as f64 * width).collect();
    let densities = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(Histogram { edges, counts, densities })
}
