//! Diffusively coupled network simulation
//! `x_i' = f(x_i) + γ Σ_j a_ij Γ (x_j - x_i)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Oscillator, Rk4};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;

/// `anchor + e_i` with `e_i` uniform on `[-amplitude, amplitude]^n`.
pub fn perturbed_initials(anchor: &[f64], amplitude: f64, node_count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..node_count).map(|_| anchor.iter().map(|a| a + amplitude * rng.gen_range(-1.0..=1.0)).collect()).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Record a sample every this many steps (the last step is always kept).
    pub sample_every: usize,
    /// Keep the first coordinate of every node at each sample.
    pub record_nodes: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { t_end: 40.0, dt: 0.01, sample_every: 10, record_nodes: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    /// `max_i |x_i - x̄|`.
    pub err_max: Vec<f64>,
    /// `sqrt(mean_i |x_i - x̄|²)`.
    pub err_rms: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub nodes: Option<Vec<Vec<f64>>>,
    /// Final states, node-major.
    pub final_state: Vec<f64>,
    /// Neighbour differences evaluated, summed over all field evaluations.
    pub neighbor_terms: u64,
}

impl SimTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,err_max,err_rms");
        if let Some(first) = self.nodes.as_ref().and_then(|n| n.first()) {
            for i in 0..first.len() {
                out.push_str(&format!(",x_{i}"));
            }
        }
        out.push('\n');
        for k in 0..self.times.len() {
            out.push_str(&format!("{},{},{}", self.times[k], self.err_max[k], self.err_rms[k]));
            if let Some(nodes) = &self.nodes {
                for v in &nodes[k] {
                    out.push(',');
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `γ Γ Σ_j (x_j - x_i)` for every node, written node-major into `out`.
/// Returns the number of neighbour differences formed.
pub fn coupling_terms(g: &Graph, gamma: f64, coupling: &Matrix, state: &[f64], out: &mut [f64]) -> u64 {
    let n = coupling.rows();
    let mut diff = vec![0.0; n];
    let mut count = 0u64;
    for i in 0..g.node_count() {
        let xi = &state[i * n..(i + 1) * n];
        diff.fill(0.0);
        for &j in g.neighbors(i) {
            let xj = &state[j * n..(j + 1) * n];
            for c in 0..n {
                diff[c] += xj[c] - xi[c];
            }
        }
        count += g.neighbors(i).len() as u64;
        let o = &mut out[i * n..(i + 1) * n];
        for r in 0..n {
            o[r] = gamma * (0..n).map(|c| coupling[(r, c)] * diff[c]).sum::<f64>();
        }
    }
    count
}

fn sync_errors(state: &[f64], nodes: usize, n: usize) -> (f64, f64, Vec<f64>) {
    let mut mean = vec![0.0; n];
    for i in 0..nodes {
        for c in 0..n {
            mean[c] += state[i * n + c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= nodes as f64);
    let mut max: f64 = 0.0;
    let mut sq = 0.0;
    for i in 0..nodes {
        let d2: f64 = (0..n).map(|c| (state[i * n + c] - mean[c]).powi(2)).sum();
        max = max.max(d2.sqrt());
        sq += d2;
    }
    (max, (sq / nodes as f64).sqrt(), mean)
}

/// Fixed-step RK4 integration of the coupled network. Coupling is summed
/// over adjacency lists, so each field evaluation costs `O(|E| n + N n)`.
pub fn simulate_network<M: Oscillator + ?Sized>(
    g: &Graph,
    model: &M,
    gamma: f64,
    initial: &[Vec<f64>],
    opts: SimOptions,
) -> Result<SimTrace> {
    let n = model.dim();
    let nodes = g.node_count();
    if initial.len() != nodes {
        return Err(Error::Dimension { expected: nodes, got: initial.len() });
    }
    if let Some(bad) = initial.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension { expected: n, got: bad.len() });
    }
    if !(opts.dt > 0.0) || !(opts.t_end > 0.0) || opts.sample_every == 0 {
        return Err(Error::InvalidParams(format!("need dt > 0, t_end > 0 and sample_every > 0, got {opts:?}")));
    }
    let coupling = model.coupling();
    let mut state: Vec<f64> = initial.iter().flatten().copied().collect();
    let mut neighbor_terms = 0u64;
    let mut field = |s: &[f64], out: &mut [f64]| {
        neighbor_terms += coupling_terms(g, gamma, &coupling, s, out);
        let mut fx = vec![0.0; n];
        for i in 0..nodes {
            model.field(&s[i * n..(i + 1) * n], &mut fx);
            for c in 0..n {
                out[i * n + c] += fx[c];
            }
        }
    };

    let steps = ((opts.t_end / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut trace = SimTrace {
        times: Vec::new(),
        err_max: Vec::new(),
        err_rms: Vec::new(),
        mean: Vec::new(),
        nodes: opts.record_nodes.then(Vec::new),
        final_state: Vec::new(),
        neighbor_terms: 0,
    };
    let record = |t: f64, s: &[f64], trace: &mut SimTrace| {
        let (max, rms, mean) = sync_errors(s, nodes, n);
        trace.times.push(t);
        trace.err_max.push(max);
        trace.err_rms.push(rms);
        trace.mean.push(mean);
        if let Some(series) = trace.nodes.as_mut() {
            series.push((0..nodes).map(|i| s[i * n]).collect());
        }
    };
    record(0.0, &state, &mut trace);
    let mut rk = Rk4::new(state.len());
    for step in 1..=steps {
        let h = if step == steps { opts.t_end - (steps - 1) as f64 * opts.dt } else { opts.dt };
        rk.step(&mut field, &mut state, h);
        let t = if step == steps { opts.t_end } else { step as f64 * opts.dt };
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: t });
        }
        if step % opts.sample_every == 0 || step == steps {
            record(t, &state, &mut trace);
        }
    }
    trace.final_state = state;
    trace.neighbor_terms = neighbor_terms;
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Synchronized,
    NotSynchronized,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Synchronized => "synchronized",
            Self::NotSynchronized => "not_synchronized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncReport {
    pub verdict: Verdict,
    pub final_err: f64,
}

pub const SYNC_TOL: f64 = 1e-3;
pub const SYNC_WINDOW: f64 = 10.0;

/// Synchronized iff `err_max < tol` over the trailing `window` and the
/// error at the end of the window does not exceed the error at its start.
pub fn sync_verdict(trace: &SimTrace, tol: f64, window: f64) -> Result<SyncReport> {
    let (Some(&t_last), Some(&t_first)) = (trace.times.last(), trace.times.first()) else {
        return Err(Error::InvalidParams("empty trace".into()));
    };
    if t_last - t_first < window - 1e-9 {
        return Err(Error::InvalidParams(format!("trace spans {} < window {window}", t_last - t_first)));
    }
    let start = trace.times.iter().position(|&t| t >= t_last - window - 1e-9).unwrap_or(0);
    let tail = &trace.err_max[start..];
    let final_err = *tail.last().unwrap_or(&f64::INFINITY);
    let below = tail.iter().all(|&e| e < tol);
    let non_increasing = final_err <= tail[0];
    let verdict = if below && non_increasing { Verdict::Synchronized } else { Verdict::NotSynchronized };
    Ok(SyncReport { verdict, final_err })
}
