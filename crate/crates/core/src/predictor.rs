//! End-to-end coupling prediction: stability region of the master stability
//! function, Laplacian moments, triangular support estimate, and the
//! resulting admissible coupling interval `(0, σ_max / x3)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{find_limit_cycle, CycleOptions, Oscillator};
use crate::error::{Error, Result};
use crate::graph::{generate_small_world, SmallWorldParams};
use crate::msf::{stability_interval, IntervalOptions};
use crate::netsim::{perturbed_initials, simulate_network, sync_verdict, SimOptions, Verdict, SYNC_TOL, SYNC_WINDOW};
use crate::spectral::{exact_moments, expected_moments, MomentVariant, SpectralMoments};
use crate::triangle::{fit_triangle, TriangularFit};

/// Where the three Laplacian moments come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MomentSource {
    /// Closed-form ensemble expectation.
    Expected {
        variant: MomentVariant,
    },
    /// Trace identities on the realization drawn with `params.seed`.
    Exact,
    Literal {
        m1: f64,
        m2: f64,
        m3: f64,
    },
}

impl MomentSource {
    pub fn moments(&self, params: &SmallWorldParams) -> Result<SpectralMoments> {
        match *self {
            Self::Expected { variant } => {
                params.validate()?;
                expected_moments(params.half_degree, params.shortcut_rate, variant)
            }
            Self::Exact => exact_moments(&generate_small_world(params)?),
            Self::Literal { m1, m2, m3 } => SpectralMoments::from_raw(m1, m2, m3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub sigma_max: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    /// Upper end of the coupling interval, `sigma_max / x3`.
    pub gamma_max: f64,
    pub moments: [f64; 3],
    pub source: MomentSource,
    pub params: SmallWorldParams,
}

impl Prediction {
    pub fn fit(&self) -> TriangularFit {
        TriangularFit::from_abscissae([self.x1, self.x2, self.x3])
    }

    /// Whether `γ` lies in the predicted interval `(0, gamma_max)`.
    pub fn contains(&self, gamma: f64) -> bool {
        gamma > 0.0 && gamma < self.gamma_max
    }
}

/// Moments, triangle fit and coupling interval for a known `σ_max`.
pub fn predict_from_sigma_max(params: &SmallWorldParams, sigma_max: f64, source: MomentSource) -> Result<Prediction> {
    if !(sigma_max > 0.0) || !sigma_max.is_finite() {
        return Err(Error::InvalidParams(format!("sigma_max must be positive and finite, got {sigma_max}")));
    }
    let moments = source.moments(params)?;
    let fit = fit_triangle(moments.q1, moments.q2, moments.q3)?;
    if !(fit.x1 > 0.0) {
        return Err(Error::EmptyPrediction { x1: fit.x1 });
    }
    Ok(Prediction {
        sigma_max,
        x1: fit.x1,
        x2: fit.x2,
        x3: fit.x3,
        gamma_max: sigma_max / fit.x3,
        moments: moments.raw(),
        source,
        params: *params,
    })
}

/// Full pipeline: limit cycle from `guess`, stability interval, then
/// [`predict_from_sigma_max`].
pub fn predict_sync<M: Oscillator + ?Sized>(
    params: &SmallWorldParams,
    model: &M,
    guess: &[f64],
    source: MomentSource,
    cycle_opts: CycleOptions,
    interval_opts: IntervalOptions,
) -> Result<Prediction> {
    let cycle = find_limit_cycle(model, guess, cycle_opts)?;
    let interval = stability_interval(model, &cycle, interval_opts)?;
    predict_from_sigma_max(params, interval.sigma_max, source)
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub amplitude: f64,
    pub sim: SimOptions,
    pub tol: f64,
    pub window: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { amplitude: 2.0, sim: SimOptions::default(), tol: SYNC_TOL, window: SYNC_WINDOW }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationRow {
    pub gamma: f64,
    pub seed: u64,
    pub verdict: Verdict,
    /// `err_max` at the end of the run; infinite if the run blew up.
    pub final_err: f64,
    /// Time of divergence, if any.
    pub blow_up: Option<f64>,
}

/// CSV with header `gamma,seed,verdict,final_err`.
pub fn validation_csv(rows: &[ValidationRow]) -> String {
    let mut out = String::from("gamma,seed,verdict,final_err\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.gamma, r.seed, r.verdict, r.final_err));
    }
    out
}

/// Simulates every `(γ, seed)` pair on the realization drawn with `seed`,
/// starting from `anchor` perturbed with the same seed. Rows come back in
/// `gammas`-major order. A diverging run counts as not synchronized.
pub fn validate_prediction<M: Oscillator + ?Sized>(
    params: &SmallWorldParams,
    model: &M,
    anchor: &[f64],
    gammas: &[f64],
    seeds: &[u64],
    opts: ValidationOptions,
) -> Result<Vec<ValidationRow>> {
    if anchor.len() != model.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: anchor.len() });
    }
    let graphs = seeds
        .iter()
        .map(|&seed| generate_small_world(&SmallWorldParams { seed, ..*params }))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, usize)> = gammas.iter().flat_map(|&g| (0..seeds.len()).map(move |s| (g, s))).collect();
    jobs.par_iter()
        .map(|&(gamma, s)| {
            let seed = seeds[s];
            let init = perturbed_initials(anchor, opts.amplitude, params.node_count, seed);
            match simulate_network(&graphs[s], model, gamma, &init, opts.sim) {
                Ok(trace) => {
                    let report = sync_verdict(&trace, opts.tol, opts.window)?;
                    Ok(ValidationRow {
                        gamma,
                        seed,
                        verdict: report.verdict,
                        final_err: report.final_err,
                        blow_up: None,
                    })
                }
                Err(Error::BlowUp { time }) => Ok(ValidationRow {
                    gamma,
                    seed,
                    verdict: Verdict::NotSynchronized,
                    final_err: f64::INFINITY,
                    blow_up: Some(time),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
