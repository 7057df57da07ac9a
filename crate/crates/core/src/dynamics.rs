//! Node dynamics, a fixed-step fourth-order integrator and a Poincaré
//! section limit-cycle finder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Isolated node dynamics `x' = f(x)` together with its Jacobian and the
/// inner coupling matrix `Γ`.
pub trait Oscillator: Send + Sync {
    fn dim(&self) -> usize;

    fn field(&self, state: &[f64], out: &mut [f64]);

    /// Matrix used in the variational equation along a trajectory.
    fn jacobian(&self, state: &[f64], out: &mut Matrix);

    /// Which state components couple between neighbouring nodes.
    fn coupling(&self) -> Matrix;
}

/// How the Rössler variational equation is linearized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linearization {
    /// True Jacobian of the vector field; entry (3,3) is `x - c`.
    #[default]
    Exact,
    /// Entry (3,3) frozen at `-c`, dropping the `x` dependence. For
    /// `a = b = 0.2, c = 2.5` the stability threshold moves from about 4.08
    /// to about 4.74.
    FixedZDecay,
}

impl std::str::FromStr for Linearization {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "fixed-z-decay" => Ok(Self::FixedZDecay),
            other => Err(format!("unknown linearization {other:?} (expected exact|fixed-z-decay)")),
        }
    }
}

impl std::fmt::Display for Linearization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::FixedZDecay => "fixed-z-decay",
        })
    }
}

/// Rössler oscillator coupled through its `x` component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rossler {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub linearization: Linearization,
}

impl Rossler {
    /// A point on the stable cycle of the reference parameter set.
    pub const REFERENCE_ANCHOR: [f64; 3] = [3.5119, -3.5332, 0.2006];

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c, linearization: Linearization::Exact }
    }

    /// `a = b = 0.2, c = 2.5`: a stable period-one cycle with `T ≈ 5.749`.
    pub fn reference() -> Self {
        Self::new(0.2, 0.2, 2.5)
    }

    pub fn with_linearization(mut self, linearization: Linearization) -> Self {
        self.linearization = linearization;
        self
    }
}

pub fn rossler_field(state: [f64; 3], a: f64, b: f64, c: f64) -> [f64; 3] {
    let [x, y, z] = state;
    [-(y + z), x + a * y, b + z * (x - c)]
}

/// Analytic Jacobian of [`rossler_field`].
pub fn rossler_jacobian(state: [f64; 3], a: f64, c: f64) -> Matrix {
    let [x, _, z] = state;
    Matrix::from_rows(&[&[0.0, -1.0, -1.0], &[1.0, a, 0.0], &[z, 0.0, x - c]])
}

impl Oscillator for Rossler {
    fn dim(&self) -> usize {
        3
    }

    fn field(&self, s: &[f64], out: &mut [f64]) {
        out[0] = -(s[1] + s[2]);
        out[1] = s[0] + self.a * s[1];
        out[2] = self.b + s[2] * (s[0] - self.c);
    }

    fn jacobian(&self, s: &[f64], j: &mut Matrix) {
        let d = j.as_mut_slice();
        d.copy_from_slice(&[0.0, -1.0, -1.0, 1.0, self.a, 0.0, s[2], 0.0, 0.0]);
        d[8] = match self.linearization {
            Linearization::Exact => s[0] - self.c,
            Linearization::FixedZDecay => -self.c,
        };
    }

    fn coupling(&self) -> Matrix {
        Matrix::from_diagonal(&[1.0, 0.0, 0.0])
    }
}

/// Scratch buffers for one classical RK4 step on an `n`-vector.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }

    /// Advances `state` in place by `dt`.
    pub fn step<F>(&mut self, f: &mut F, state: &mut [f64], dt: f64)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = state.len();
        debug_assert_eq!(n, self.k1.len());
        f(state, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = state[i] + 0.5 * dt * self.k1[i];
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = state[i] + 0.5 * dt * self.k2[i];
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = state[i] + dt * self.k3[i];
        }
        f(&self.tmp, &mut self.k4);
        for i in 0..n {
            state[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Uniformly stepped trajectory; `states[i]` is the state at `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// CSV with header `t,x,y,z` for three-dimensional states and
    /// `t,x0,x1,...` otherwise.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        if dim == 3 {
            out.push_str(",x,y,z");
        } else {
            for i in 0..dim {
                out.push_str(&format!(",x{i}"));
            }
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for v in s {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn step_count(t_end: f64, dt: f64) -> usize {
    ((t_end / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Classical fourth-order fixed-step integration of an autonomous field,
/// sampled at every step. The last step is shortened to land on `t_end`.
pub fn integrate_fixed_step<F>(mut field: F, initial: &[f64], t_end: f64, dt: f64) -> Result<Trajectory>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParams(format!("need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}")));
    }
    let steps = step_count(t_end, dt);
    let mut rk = Rk4::new(initial.len());
    let mut state = initial.to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(state.clone());
    for i in 1..=steps {
        let t_prev = (i - 1) as f64 * dt;
        let h = if i == steps { t_end - t_prev } else { dt };
        rk.step(&mut field, &mut state, h);
        let t = if i == steps { t_end } else { i as f64 * dt };
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: t });
        }
        times.push(t);
        states.push(state.clone());
    }
    Ok(Trajectory { times, states })
}

/// Settings for [`find_limit_cycle`].
#[derive(Debug, Clone, Copy)]
pub struct CycleOptions {
    /// Transient discarded before the section is placed.
    pub settle_time: f64,
    pub dt: f64,
    /// Number of section returns averaged into the period.
    pub returns: usize,
    /// Required closure `|φ(T) - φ(0)|`.
    pub closure_tol: f64,
    /// Largest allowed spread between individual return times.
    pub period_tol: f64,
    /// Integration budget for collecting the returns.
    pub horizon: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self { settle_time: 500.0, dt: 1e-3, returns: 10, closure_tol: 1e-6, period_tol: 1e-4, horizon: 1000.0 }
    }
}

/// One period of a periodic orbit, sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycle {
    pub period: f64,
    /// Start of the sampled period, on the Poincaré section.
    pub anchor: Vec<f64>,
    /// `period` split into `samples.times.len() - 1` equal steps.
    pub samples: Trajectory,
    /// Individual return times that were averaged.
    pub return_times: Vec<f64>,
}

impl LimitCycle {
    pub fn closure_gap(&self) -> f64 {
        distance(self.samples.last(), &self.anchor)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Locates an attracting periodic orbit reachable from `guess`.
///
/// After the transient the section is the hyperplane through the current
/// state, normal to the flow there. Each same-direction crossing near the
/// anchor is refined by Newton iteration on the step length, and the period
/// is the mean of `returns` consecutive return times.
pub fn find_limit_cycle<M: Oscillator + ?Sized>(model: &M, guess: &[f64], opts: CycleOptions) -> Result<LimitCycle> {
    let n = model.dim();
    if guess.len() != n {
        return Err(Error::Dimension { expected: n, got: guess.len() });
    }
    let dt = opts.dt;
    let mut field = |s: &[f64], out: &mut [f64]| model.field(s, out);
    let mut rk = Rk4::new(n);
    let mut state = guess.to_vec();

    let settle_steps = (opts.settle_time / dt).round() as usize;
    for i in 0..settle_steps {
        rk.step(&mut field, &mut state, dt);
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: (i + 1) as f64 * dt });
        }
    }

    let anchor = state.clone();
    let mut normal = vec![0.0; n];
    field(&anchor, &mut normal);
    let speed = dot(&normal, &normal).sqrt();
    if speed == 0.0 {
        return Err(Error::NoCrossing { horizon: opts.horizon });
    }
    normal.iter_mut().for_each(|v| *v /= speed);
    let side = |s: &[f64]| -> f64 { normal.iter().zip(s.iter().zip(&anchor)).map(|(nv, (x, a))| nv * (x - a)).sum() };

    let mut crossings: Vec<(f64, Vec<f64>)> = Vec::with_capacity(opts.returns);
    let mut max_dist: f64 = 0.0;
    let mut prev = state.clone();
    let mut t = 0.0;
    let max_steps = (opts.horizon / dt).ceil() as usize;
    let mut trial = vec![0.0; n];
    let mut flow = vec![0.0; n];
    for _ in 0..max_steps {
        let g_prev = side(&prev);
        state.copy_from_slice(&prev);
        rk.step(&mut field, &mut state, dt);
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: opts.settle_time + t + dt });
        }
        let g_next = side(&state);
        let dist = distance(&state, &anchor);
        max_dist = max_dist.max(dist);
        if g_prev <= 0.0 && g_next > 0.0 && t > 0.0 && dist < 0.1 * max_dist {
            // Newton on the partial step h so the refined point lies on the section
            let mut h = dt * g_prev / (g_prev - g_next);
            for _ in 0..6 {
                trial.copy_from_slice(&prev);
                rk.step(&mut field, &mut trial, h);
                field(&trial, &mut flow);
                let rate = dot(&normal, &flow);
                if rate == 0.0 {
                    break;
                }
                h -= side(&trial) / rate;
            }
            trial.copy_from_slice(&prev);
            rk.step(&mut field, &mut trial, h);
            crossings.push((t + h, trial.clone()));
            if crossings.len() == opts.returns {
                break;
            }
        }
        prev.copy_from_slice(&state);
        t += dt;
    }
    if crossings.len() < opts.returns.max(1) {
        return Err(Error::NoCrossing { horizon: opts.horizon });
    }

    let mut last = 0.0;
    let return_times: Vec<f64> = crossings
        .iter()
        .map(|(tc, _)| {
            let d = tc - last;
            last = *tc;
            d
        })
        .collect();
    let lo = return_times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = return_times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > opts.period_tol {
        return Err(Error::NotPeriodic { spread: hi - lo });
    }
    let period = return_times.iter().sum::<f64>() / return_times.len() as f64;

    let start = crossings.pop().map(|(_, s)| s).unwrap_or(anchor);
    let steps = (period / dt).ceil() as usize;
    let h = period / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut s = start.clone();
    times.push(0.0);
    states.push(s.clone());
    for i in 1..=steps {
        rk.step(&mut field, &mut s, h);
        times.push(if i == steps { period } else { i as f64 * h });
        states.push(s.clone());
    }
    let cycle = LimitCycle { period, anchor: start, samples: Trajectory { times, states }, return_times };
    let gap = cycle.closure_gap();
    if gap > opts.closure_tol {
        return Err(Error::NotClosed { gap });
    }
    Ok(cycle)
}
