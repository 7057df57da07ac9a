//! Master stability function of the variational equation
//! `ξ' = (Df(φ(t)) - σΓ) ξ` along a periodic orbit `φ`.

use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{LimitCycle, Oscillator, Rk4};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_general, Matrix};

/// Steps per period for the fundamental-matrix integration.
pub const FLOQUET_STEPS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetResult {
    pub sigma: f64,
    pub period: f64,
    pub monodromy: Matrix,
    pub multipliers: Vec<Complex<f64>>,
    /// `ln|μ| / T`, sorted descending.
    pub exponents: Vec<f64>,
    /// `∫₀ᵀ tr(Df - σΓ) dt`, accumulated alongside the orbit.
    pub trace_integral: f64,
}

impl FloquetResult {
    /// Largest exponent after removing the along-flow multiplier when
    /// `σ = 0`. For `σ > 0` every exponent is kept.
    pub fn max_nontrivial(&self) -> f64 {
        let mut mult = self.multipliers.clone();
        if self.sigma == 0.0 && mult.len() > 1 {
            let nearest = mult
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            mult.remove(nearest);
        }
        mult.iter().map(|m| m.norm().ln() / self.period).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn shifted_jacobian<M: Oscillator + ?Sized>(model: &M, gamma: &Matrix, sigma: f64, x: &[f64], j: &mut Matrix) {
    model.jacobian(x, j);
    let n = model.dim();
    for r in 0..n {
        for c in 0..n {
            j[(r, c)] -= sigma * gamma[(r, c)];
        }
    }
}

/// Monodromy of the variational equation over one period, integrated
/// together with the orbit itself from `cycle.anchor`.
pub fn floquet<M: Oscillator + ?Sized>(
    model: &M,
    cycle: &LimitCycle,
    sigma: f64,
    steps: usize,
) -> Result<FloquetResult> {
    let n = model.dim();
    if cycle.anchor.len() != n {
        return Err(Error::Dimension { expected: n, got: cycle.anchor.len() });
    }
    let gamma = model.coupling();
    // layout: orbit state, fundamental matrix row-major, trace integral
    let len = n + n * n + 1;
    let mut y = vec![0.0; len];
    y[..n].copy_from_slice(&cycle.anchor);
    for i in 0..n {
        y[n + i * n + i] = 1.0;
    }
    let mut j = Matrix::zeros(n, n);
    let mut field = |s: &[f64], out: &mut [f64]| {
        let (x, rest) = s.split_at(n);
        model.field(x, &mut out[..n]);
        shifted_jacobian(model, &gamma, sigma, x, &mut j);
        let phi = &rest[..n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += j[(r, k)] * phi[k * n + c];
                }
                out[n + r * n + c] = acc;
            }
        }
        out[len - 1] = j.trace();
    };
    let mut rk = Rk4::new(len);
    let dt = cycle.period / steps as f64;
    for _ in 0..steps {
        rk.step(&mut field, &mut y, dt);
    }
    let mut monodromy = Matrix::zeros(n, n);
    monodromy.as_mut_slice().copy_from_slice(&y[n..n + n * n]);
    if !monodromy.is_finite() {
        return Err(Error::Overflow { sigma });
    }
    let multipliers = eigenvalues_general(&monodromy);
    let mut exponents: Vec<f64> = multipliers.iter().map(|m| m.norm().ln() / cycle.period).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(FloquetResult { sigma, period: cycle.period, monodromy, multipliers, exponents, trace_integral: y[len - 1] })
}

/// Floquet exponents at `σ`, sorted descending.
pub fn floquet_exponents<M: Oscillator + ?Sized>(model: &M, cycle: &LimitCycle, sigma: f64) -> Result<Vec<f64>> {
    Ok(floquet(model, cycle, sigma, FLOQUET_STEPS)?.exponents)
}

/// `F(σ)`: the maximal nontrivial Floquet exponent.
pub fn msf_value<M: Oscillator + ?Sized>(model: &M, cycle: &LimitCycle, sigma: f64) -> Result<f64> {
    Ok(floquet(model, cycle, sigma, FLOQUET_STEPS)?.max_nontrivial())
}

#[derive(Debug, Clone, Copy)]
pub struct LyapunovOptions {
    pub horizon: f64,
    pub transient: f64,
    pub dt: f64,
    pub renorm_interval: f64,
    /// Allowed drift of the running estimate over the last tenth of the run.
    pub tol: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self { horizon: 2000.0, transient: 200.0, dt: 0.01, renorm_interval: 1.0, tol: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    pub converged: bool,
    /// Largest deviation of the running estimate from the final value over
    /// the last tenth of the accumulation window.
    pub drift: f64,
}

/// Largest Lyapunov exponent of the variational equation, by repeated
/// renormalization of one tangent vector carried along a trajectory.
pub fn max_lyapunov<M: Oscillator + ?Sized>(
    model: &M,
    initial: &[f64],
    sigma: f64,
    opts: LyapunovOptions,
) -> Result<LyapunovEstimate> {
    let n = model.dim();
    if initial.len() != n {
        return Err(Error::Dimension { expected: n, got: initial.len() });
    }
    if !(opts.horizon > opts.transient) || !(opts.dt > 0.0) || !(opts.renorm_interval >= opts.dt) {
        return Err(Error::InvalidParams(format!("bad Lyapunov settings {opts:?}")));
    }
    let gamma = model.coupling();
    let mut j = Matrix::zeros(n, n);
    let mut field = |s: &[f64], out: &mut [f64]| {
        let (x, xi) = s.split_at(n);
        model.field(x, &mut out[..n]);
        shifted_jacobian(model, &gamma, sigma, x, &mut j);
        for r in 0..n {
            out[n + r] = (0..n).map(|k| j[(r, k)] * xi[k]).sum();
        }
    };
    let mut y = vec![0.0; 2 * n];
    y[..n].copy_from_slice(initial);
    y[n..].fill(1.0 / (n as f64).sqrt());
    let mut rk = Rk4::new(2 * n);
    let per_block = (opts.renorm_interval / opts.dt).round().max(1.0) as usize;
    let block = per_block as f64 * opts.dt;
    let blocks = (opts.horizon / block).round() as usize;
    let skip = (opts.transient / block).round() as usize;

    let mut log_sum = 0.0;
    let mut running = Vec::with_capacity(blocks.saturating_sub(skip));
    for b in 0..blocks {
        for _ in 0..per_block {
            rk.step(&mut field, &mut y, opts.dt);
        }
        let norm = y[n..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || y[..n].iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: (b + 1) as f64 * block });
        }
        if norm == 0.0 {
            return Ok(LyapunovEstimate { exponent: f64::NEG_INFINITY, converged: true, drift: 0.0 });
        }
        y[n..].iter_mut().for_each(|v| *v /= norm);
        if b >= skip {
            log_sum += norm.ln();
            running.push(log_sum / ((b + 1 - skip) as f64 * block));
        }
    }
    let exponent = *running.last().ok_or_else(|| Error::InvalidParams("empty accumulation window".into()))?;
    let tail = &running[running.len() - (running.len() / 10).max(1)..];
    let drift = tail.iter().map(|v| (v - exponent).abs()).fold(0.0, f64::max);
    Ok(LyapunovEstimate { exponent, converged: drift <= opts.tol, drift })
}

/// `F` sampled on a uniform `σ` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsfCurve {
    pub sigma: Vec<f64>,
    pub values: Vec<f64>,
}

impl MsfCurve {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,F\n");
        for (s, f) in self.sigma.iter().zip(&self.values) {
            out.push_str(&format!("{s},{f}\n"));
        }
        out
    }

    /// Indices `i` with `sign(F[i]) != sign(F[i+1])`, zero counted as positive.
    pub fn sign_changes(&self) -> Vec<usize> {
        self.values.windows(2).enumerate().filter(|(_, w)| (w[0] < 0.0) != (w[1] < 0.0)).map(|(i, _)| i).collect()
    }
}

/// Grid `start, start + step, ...` up to and including `end` (with a small
/// tolerance so that `[0, 15]` at `0.2` has 76 points).
pub fn sigma_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidParams(format!("bad sigma grid [{start}, {end}] step {step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Evaluates `F` over the grid in parallel; output order follows the grid.
pub fn msf_sweep<M: Oscillator + ?Sized>(
    model: &M,
    cycle: &LimitCycle,
    start: f64,
    end: f64,
    step: f64,
) -> Result<MsfCurve> {
    let sigma = sigma_grid(start, end, step)?;
    let values = sigma.par_iter().map(|&s| msf_value(model, cycle, s)).collect::<Result<Vec<_>>>()?;
    Ok(MsfCurve { sigma, values })
}

#[derive(Debug, Clone, Copy)]
pub struct IntervalOptions {
    pub start: f64,
    pub end: f64,
    pub coarse_step: f64,
    pub refine_tol: f64,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        Self { start: 0.0, end: 15.0, coarse_step: 0.2, refine_tol: 1e-3 }
    }
}

/// Upper end of the stability region `(0, σ_max)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityInterval {
    pub sigma_max: f64,
    /// Final bisection bracket, `F(lo) < 0 <= F(hi)`.
    #[serde(skip)]
    pub bracket: (f64, f64),
    #[serde(skip)]
    pub curve: MsfCurve,
}

impl StabilityInterval {
    pub fn to_json(&self) -> String {
        format!("{{\"sigma_max\":{}}}", self.sigma_max)
    }
}

/// Coarse sweep followed by bisection on the single `-` to `+` crossing.
pub fn stability_interval<M: Oscillator + ?Sized>(
    model: &M,
    cycle: &LimitCycle,
    opts: IntervalOptions,
) -> Result<StabilityInterval> {
    if !(opts.refine_tol > 0.0) {
        return Err(Error::InvalidParams(format!("refine_tol must be positive, got {}", opts.refine_tol)));
    }
    let curve = msf_sweep(model, cycle, opts.start, opts.end, opts.coarse_step)?;
    let changes = curve.sign_changes();
    let i = match changes.as_slice() {
        [] => return Err(Error::NoSigmaMax { start: opts.start, end: opts.end }),
        [i] if curve.values[*i] < 0.0 => *i,
        [_] => {
            return Err(Error::InvalidParams("master stability function is positive at the start of the sweep".into()))
        }
        many => return Err(Error::MultipleSignChanges { count: many.len() }),
    };
    let (mut lo, mut hi) = (curve.sigma[i], curve.sigma[i + 1]);
    while hi - lo > opts.refine_tol {
        let mid = 0.5 * (lo + hi);
        if msf_value(model, cycle, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(StabilityInterval { sigma_max: 0.5 * (lo + hi), bracket: (lo, hi), curve })
}
