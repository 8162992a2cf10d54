//! Levelwise integration of fuzzy Caputo systems.
//!
//! Every α-cut endpoint (level k, lower or upper side) is a *lane*: an
//! n-dimensional crisp IVP driven by the same right-hand side. Lanes with
//! identical initial data are solved once. After every accepted step the
//! lanes are reassembled and checked for ordering and nesting; rounding-size
//! violations are repaired, real ones raise [`Error::OrderingViolation`].

mod abm;
mod linear;

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Env, EvalError, Expr};
use crate::fuzzy::{vector_norm, FuzzyNumber};

pub use abm::WorkStats;
pub use linear::exact_linear;

/// Relative size of ordering defects repaired silently.
const REPAIR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    /// Scalar right-hand side f(t, u, ud).
    Scalar(Expr),
    /// Linear system x' = A x.
    Linear(DMatrix<f64>),
}

impl System {
    pub fn dim(&self) -> usize {
        match self {
            System::Scalar(_) => 1,
            System::Linear(a) => a.nrows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delay {
    pub tau: f64,
    /// History on [−τ, 0] as an expression in `t`; `u` is bound to the
    /// initial endpoint value, so `"u"` is a constant history.
    pub history: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub sigma: f64,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub q: f64,
    pub horizon: f64,
    pub step: f64,
    pub system: System,
    pub params: BTreeMap<String, f64>,
    /// One fuzzy number per state component, all on the same level grid.
    pub initial: Vec<FuzzyNumber>,
    /// Additive crisp disturbance g(t), one expression per component.
    pub disturbance: Option<Vec<Expr>>,
    pub delay: Option<Delay>,
    pub noise: Option<Noise>,
}

impl Scenario {
    pub fn scalar(q: f64, rhs: Expr, initial: FuzzyNumber, horizon: f64, step: f64) -> Self {
        Scenario {
            q,
            horizon,
            step,
            system: System::Scalar(rhs),
            params: BTreeMap::new(),
            initial: vec![initial],
            disturbance: None,
            delay: None,
            noise: None,
        }
    }

    pub fn linear(q: f64, a: DMatrix<f64>, initial: Vec<FuzzyNumber>, horizon: f64, step: f64) -> Self {
        Scenario {
            q,
            horizon,
            step,
            system: System::Linear(a),
            params: BTreeMap::new(),
            initial,
            disturbance: None,
            delay: None,
            noise: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn levels(&self) -> &[f64] {
        self.initial[0].levels()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::arg("q", format!("order must lie in (0, 1], got {}", self.q)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::arg("horizon", format!("must be finite and > 0, got {}", self.horizon)));
        }
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= self.horizon) {
            return Err(Error::arg("step", format!("must lie in (0, horizon], got {}", self.step)));
        }
        if let System::Linear(a) = &self.system {
            if a.nrows() != a.ncols() || a.nrows() == 0 {
                return Err(Error::arg("matrix", "must be square and non-empty"));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg("matrix", "entries must be finite"));
            }
        }
        if self.initial.len() != self.dim() {
            return Err(Error::arg(
                "initial",
                format!("{} components for a system of dimension {}", self.initial.len(), self.dim()),
            ));
        }
        if self.initial.iter().any(|u| u.levels() != self.levels()) {
            return Err(Error::GridMismatch {
                left: self.levels().len(),
                right: self.initial.iter().map(|u| u.num_levels()).find(|&n| n != self.levels().len()).unwrap_or(0),
            });
        }
        if let Some(g) = &self.disturbance {
            if g.len() != self.dim() {
                return Err(Error::arg("disturbance", format!("need {} expressions", self.dim())));
            }
            if g.iter().any(Expr::uses_state) {
                return Err(Error::arg("disturbance", "may depend on t and parameters only"));
            }
        }
        if let Some(d) = &self.delay {
            if !(d.tau.is_finite() && d.tau > 0.0) {
                return Err(Error::arg("tau", format!("must be finite and > 0, got {}", d.tau)));
            }
            if !matches!(self.system, System::Scalar(_)) {
                return Err(Error::arg("delay", "only scalar right-hand sides take a delay"));
            }
            if d.history.uses_delay() {
                return Err(Error::arg("history", "may not refer to ud"));
            }
        } else if let System::Scalar(e) = &self.system {
            if e.uses_delay() {
                return Err(Error::MissingHistory);
            }
        }
        if let Some(n) = &self.noise {
            if !(n.sigma.is_finite() && n.sigma >= 0.0) {
                return Err(Error::arg("sigma", format!("must be finite and >= 0, got {}", n.sigma)));
            }
            if n.paths == 0 {
                return Err(Error::arg("paths", "need at least one path"));
            }
        }
        Ok(())
    }

    fn steps(&self, warnings: &mut Vec<String>) -> usize {
        let n = (self.horizon / self.step).round().max(1.0) as usize;
        let t_eff = n as f64 * self.step;
        if (t_eff - self.horizon).abs() > 1e-9 * self.horizon {
            warnings.push(format!(
                "horizon {} is not a multiple of step {}; using {}",
                self.horizon, self.step, t_eff
            ));
        }
        n
    }
}

/// Solution on the grid t_i = i·h; delayed solves prepend the history.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyTrajectory {
    /// Derivative order the trajectory was computed with.
    pub q: f64,
    pub times: Vec<f64>,
    levels: Vec<f64>,
    dim: usize,
    /// Per node: for each component, for each level, (lower, upper).
    data: Vec<f64>,
    /// Fuzzy (vector) norm per node.
    pub norm: Vec<f64>,
    /// Number of leading history nodes (t < 0).
    pub history_len: usize,
    pub warnings: Vec<String>,
    pub stats: WorkStats,
}

impl FuzzyTrajectory {
    fn stride(&self) -> usize {
        self.dim * self.levels.len() * 2
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn lower(&self, node: usize, comp: usize, level: usize) -> f64 {
        self.data[node * self.stride() + (comp * self.levels.len() + level) * 2]
    }

    pub fn upper(&self, node: usize, comp: usize, level: usize) -> f64 {
        self.data[node * self.stride() + (comp * self.levels.len() + level) * 2 + 1]
    }

    pub fn component(&self, node: usize, comp: usize) -> Result<FuzzyNumber> {
        let k = self.levels.len();
        let lower = (0..k).map(|l| self.lower(node, comp, l)).collect();
        let upper = (0..k).map(|l| self.upper(node, comp, l)).collect();
        FuzzyNumber::new(self.levels.clone(), lower, upper)
    }

    pub fn state(&self, node: usize) -> Result<Vec<FuzzyNumber>> {
        (0..self.dim).map(|c| self.component(node, c)).collect()
    }

    #[cfg(test)]
    pub(crate) fn scale_node(&mut self, node: usize, c: f64) {
        let st = self.stride();
        for x in &mut self.data[node * st..(node + 1) * st] {
            *x *= c;
        }
        self.norm[node] *= c;
    }

    /// Index of the node at t = 0.
    pub fn origin(&self) -> usize {
        self.history_len
    }

    /// Largest diameter over levels and components at a node.
    pub fn max_diam(&self, node: usize) -> f64 {
        let mut d = 0.0f64;
        for c in 0..self.dim {
            for l in 0..self.levels.len() {
                d = d.max(self.upper(node, c, l) - self.lower(node, c, l));
            }
        }
        d
    }

    pub fn min_diam(&self, node: usize) -> f64 {
        let mut d = f64::INFINITY;
        for c in 0..self.dim {
            for l in 0..self.levels.len() {
                d = d.min(self.upper(node, c, l) - self.lower(node, c, l));
            }
        }
        d
    }

    /// CSV with columns `t, l_0, u_0, …, norm` (components prefixed
    /// `x{i}_` when the state is a vector).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for c in 0..self.dim {
            let prefix = if self.dim > 1 { format!("x{c}_") } else { String::new() };
            for l in 0..self.levels.len() {
                header.push(format!("{prefix}l_{l}"));
                header.push(format!("{prefix}u_{l}"));
            }
        }
        header.push("norm".into());
        w.write_record(&header).map_err(csv_err)?;
        let stride = self.stride();
        for i in 0..self.len() {
            let mut row = Vec::with_capacity(stride + 2);
            row.push(fmt_num(self.times[i]));
            row.extend(self.data[i * stride..(i + 1) * stride].iter().map(|v| fmt_num(*v)));
            row.push(fmt_num(self.norm[i]));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Shortest representation that round-trips, always with a `.`-style
/// decimal point (never locale-dependent).
pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Monte-Carlo estimate of E[Ď(u(t), 0)^a].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub q: f64,
    pub times: Vec<f64>,
    pub moment: Vec<f64>,
    pub stderr: Vec<f64>,
    pub a: f64,
    pub paths: usize,
    pub warnings: Vec<String>,
    pub stats: WorkStats,
}

impl MomentTrajectory {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "moment", "stderr"]).map_err(csv_err)?;
        for i in 0..self.times.len() {
            w.write_record([fmt_num(self.times[i]), fmt_num(self.moment[i]), fmt_num(self.stderr[i])])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distinct lanes and the map from (component-major) lane slots to them.
struct Lanes {
    n_levels: usize,
    dim: usize,
    /// Initial n-vectors of the distinct lanes, concatenated.
    x0: Vec<f64>,
    /// For level k and side s (0 lower, 1 upper): distinct lane index.
    slot: Vec<usize>,
}

impl Lanes {
    fn new(initial: &[FuzzyNumber]) -> Self {
        let n_levels = initial[0].num_levels();
        let dim = initial.len();
        let mut x0: Vec<f64> = Vec::new();
        let mut slot = Vec::with_capacity(2 * n_levels);
        let mut seen: Vec<Vec<u64>> = Vec::new();
        for k in 0..n_levels {
            for side in 0..2 {
                let v: Vec<f64> = initial
                    .iter()
                    .map(|u| if side == 0 { u.lower()[k] } else { u.upper()[k] })
                    .collect();
                let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
                let idx = match seen.iter().position(|s| *s == key) {
                    Some(i) => i,
                    None => {
                        seen.push(key);
                        x0.extend_from_slice(&v);
                        seen.len() - 1
                    }
                };
                slot.push(idx);
            }
        }
        Lanes {
            n_levels,
            dim,
            x0,
            slot,
        }
    }

    fn count(&self) -> usize {
        self.x0.len() / self.dim
    }

    fn value(&self, x: &[f64], comp: usize, level: usize, side: usize) -> f64 {
        x[self.slot[2 * level + side] * self.dim + comp]
    }

    /// Expand distinct-lane values at one node into trajectory layout.
    fn expand(&self, x: &[f64], out: &mut Vec<f64>) {
        for c in 0..self.dim {
            for k in 0..self.n_levels {
                out.push(self.value(x, c, k, 0));
                out.push(self.value(x, c, k, 1));
            }
        }
    }

    fn norm(&self, x: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for k in 0..self.n_levels {
            for side in 0..2 {
                let s: f64 = (0..self.dim).map(|c| self.value(x, c, k, side).powi(2)).sum();
                best = best.max(s.sqrt());
            }
        }
        best
    }

    /// Validate ordering and nesting; repair rounding-size defects in place.
    fn check(&self, t: f64, x: &mut [f64]) -> Result<()> {
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = REPAIR_TOL * scale;
        for c in 0..self.dim {
            for k in 0..self.n_levels {
                let il = self.slot[2 * k] * self.dim + c;
                let iu = self.slot[2 * k + 1] * self.dim + c;
                if x[il] > x[iu] {
                    if x[il] - x[iu] > tol {
                        return Err(Error::OrderingViolation {
                            t,
                            detail: format!(
                                "component {c}, level {k}: lower {} > upper {}",
                                x[il], x[iu]
                            ),
                        });
                    }
                    let mid = 0.5 * (x[il] + x[iu]);
                    x[il] = mid;
                    x[iu] = mid;
                }
                if k > 0 {
                    let pl = self.slot[2 * (k - 1)] * self.dim + c;
                    let pu = self.slot[2 * (k - 1) + 1] * self.dim + c;
                    if x[il] < x[pl] {
                        if x[pl] - x[il] > tol {
                            return Err(Error::OrderingViolation {
                                t,
                                detail: format!("component {c}: lower endpoint decreases at level {k}"),
                            });
                        }
                        x[il] = x[pl];
                    }
                    if x[iu] > x[pu] {
                        if x[iu] - x[pu] > tol {
                            return Err(Error::OrderingViolation {
                                t,
                                detail: format!("component {c}: upper endpoint increases at level {k}"),
                            });
                        }
                        x[iu] = x[pu];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Everything needed to evaluate f on the distinct lanes.
struct LaneRhs<'a> {
    s: &'a Scenario,
    lanes: &'a Lanes,
    h: f64,
    /// Delay in steps and the history per distinct lane.
    delay_steps: usize,
    history: Option<&'a Expr>,
}

impl LaneRhs<'_> {
    fn eval(&self, n: usize, t: f64, states: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.lanes.dim;
        let width = self.lanes.count() * d;
        let cur = &states[n * width..(n + 1) * width];
        match &self.s.system {
            System::Scalar(e) => {
                let mut env = Env::new(&self.s.params).t(t);
                for lane in 0..self.lanes.count() {
                    env.u = Some(cur[lane]);
                    if let Some(hist) = self.history {
                        let ud = if n >= self.delay_steps {
                            states[(n - self.delay_steps) * width + lane]
                        } else {
                            let th = (n as f64 - self.delay_steps as f64) * self.h;
                            let henv = Env::new(&self.s.params).t(th).u(self.lanes.x0[lane]);
                            hist.eval(&henv)?
                        };
                        env.ud = Some(ud);
                    }
                    out[lane] = e.eval(&env)?;
                }
            }
            System::Linear(a) => {
                for lane in 0..self.lanes.count() {
                    let x = &cur[lane * d..(lane + 1) * d];
                    for i in 0..d {
                        let mut acc = 0.0;
                        for j in 0..d {
                            acc += a[(i, j)] * x[j];
                        }
                        out[lane * d + i] = acc;
                    }
                }
            }
        }
        if let Some(g) = &self.s.disturbance {
            let env = Env::new(&self.s.params).t(t);
            for (i, gi) in g.iter().enumerate() {
                let v = gi.eval(&env)?;
                for lane in 0..self.lanes.count() {
                    out[lane * d + i] += v;
                }
            }
        }
        Ok(())
    }
}

/// Raw solve on the distinct lanes; returns (node-major states, steps).
fn integrate(
    s: &Scenario,
    lanes: &Lanes,
    n_steps: usize,
    delay_steps: usize,
    forcing: Option<&[f64]>,
    weights: &abm::Weights,
    stats: &mut WorkStats,
) -> Result<Vec<f64>> {
    let rhs = LaneRhs {
        s,
        lanes,
        h: s.step,
        delay_steps,
        history: s.delay.as_ref().map(|d| &d.history),
    };
    // overflow inside the expression is a blow-up of the state
    let f = |n: usize, t: f64, states: &[f64], out: &mut [f64]| match rhs.eval(n, t, states, out) {
        Err(Error::Eval(EvalError::NonFinite)) => Err(Error::NonFinite { t }),
        r => r,
    };
    let accept = |_n: usize, t: f64, x: &mut [f64]| lanes.check(t, x);
    let p = abm::Problem {
        q: s.q,
        h: s.step,
        n_steps,
        x0: &lanes.x0,
        forcing,
    };
    abm::solve(&p, weights, &f, &accept, stats)
}

fn assemble(
    s: &Scenario,
    lanes: &Lanes,
    raw: &[f64],
    n_steps: usize,
    history: Vec<Vec<f64>>,
    warnings: Vec<String>,
    stats: WorkStats,
) -> FuzzyTrajectory {
    let width = lanes.count() * lanes.dim;
    let history_len = history.len();
    let mut times = Vec::with_capacity(history_len + n_steps + 1);
    let mut data = Vec::new();
    let mut norm = Vec::new();
    for (i, x) in history.iter().enumerate() {
        times.push((i as f64 - history_len as f64) * s.step);
        lanes.expand(x, &mut data);
        norm.push(lanes.norm(x));
    }
    for n in 0..=n_steps {
        let x = &raw[n * width..(n + 1) * width];
        times.push(n as f64 * s.step);
        lanes.expand(x, &mut data);
        norm.push(lanes.norm(x));
    }
    FuzzyTrajectory {
        q: s.q,
        times,
        levels: s.levels().to_vec(),
        dim: lanes.dim,
        data,
        norm,
        history_len,
        warnings,
        stats,
    }
}

/// Solve a scenario without delay or noise.
pub fn solve_caputo(s: &Scenario) -> Result<FuzzyTrajectory> {
    s.validate()?;
    if s.delay.is_some() || s.noise.is_some() {
        return Err(Error::arg("scenario", "use solve_delay / solve_stochastic for delay or noise"));
    }
    let mut warnings = Vec::new();
    let n_steps = s.steps(&mut warnings);
    let lanes = Lanes::new(&s.initial);
    let weights = abm::Weights::new(s.q, n_steps)?;
    let mut stats = WorkStats::default();
    let raw = integrate(s, &lanes, n_steps, 0, None, &weights, &mut stats)?;
    Ok(assemble(s, &lanes, &raw, n_steps, Vec::new(), warnings, stats))
}

/// τ rounded to the step grid.
pub fn delay_steps(tau: f64, h: f64, warnings: &mut Vec<String>) -> Result<usize> {
    let k = (tau / h).round();
    if k < 1.0 {
        return Err(Error::arg("tau", format!("delay {tau} is shorter than half a step {h}")));
    }
    let eff = k * h;
    if (eff - tau).abs() > 1e-9 * tau {
        warnings.push(format!("tau {tau} rounded to the grid: using {eff}"));
    }
    Ok(k as usize)
}

/// Solve a delayed scalar scenario; the history segment on [−τ, 0) is
/// prepended to the output.
pub fn solve_delay(s: &Scenario) -> Result<FuzzyTrajectory> {
    s.validate()?;
    let Some(delay) = &s.delay else {
        return Err(Error::MissingHistory);
    };
    if s.noise.is_some() {
        return Err(Error::arg("scenario", "delay with noise is not supported"));
    }
    let mut warnings = Vec::new();
    let n_steps = s.steps(&mut warnings);
    let d_steps = delay_steps(delay.tau, s.step, &mut warnings)?;
    let lanes = Lanes::new(&s.initial);
    // history nodes −d..−1
    let mut history = Vec::with_capacity(d_steps);
    for i in 0..d_steps {
        let t = (i as f64 - d_steps as f64) * s.step;
        let mut x = Vec::with_capacity(lanes.count());
        for lane in 0..lanes.count() {
            let env = Env::new(&s.params).t(t).u(lanes.x0[lane]);
            x.push(delay.history.eval(&env)?);
        }
        lanes.check(t, &mut x)?;
        history.push(x);
    }
    let weights = abm::Weights::new(s.q, n_steps)?;
    let mut stats = WorkStats::default();
    let raw = integrate(s, &lanes, n_steps, d_steps, None, &weights, &mut stats)?;
    Ok(assemble(s, &lanes, &raw, n_steps, history, warnings, stats))
}

/// Monte-Carlo moments of Ď(u(t), 0)^a under additive crisp noise σ dW,
/// shared by all endpoints of a path. The noise enters through the
/// product-rectangle fractional integral of its increments, so σ = 0
/// reproduces [`solve_caputo`] exactly.
pub fn solve_stochastic(s: &Scenario, a: f64, workers: usize) -> Result<MomentTrajectory> {
    s.validate()?;
    let Some(noise) = s.noise else {
        return Err(Error::arg("noise", "scenario has no noise section"));
    };
    if s.delay.is_some() {
        return Err(Error::arg("scenario", "delay with noise is not supported"));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::arg("a", format!("moment exponent must be > 0, got {a}")));
    }
    let mut warnings = Vec::new();
    let n_steps = s.steps(&mut warnings);
    let lanes = Lanes::new(&s.initial);
    let weights = abm::Weights::new(s.q, n_steps)?;
    let dim = lanes.dim;
    let width = lanes.count() * dim;
    let h = s.step;
    let q = s.q;
    // product-rectangle weights of the noise convolution
    let g1 = crate::special::rgamma(q + 1.0);
    let hq = h.powf(q);
    let bq: Vec<f64> = (0..=n_steps).map(|k| (k as f64).powf(q)).collect();

    let run_path = |path: usize| -> Result<(Vec<f64>, WorkStats)> {
        let mut stats = WorkStats::default();
        let forcing = if noise.sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(path as u64);
            // ξ_j per component, ΔW_j = √h ξ_j
            let xi: Vec<f64> = (0..n_steps * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut fr = vec![0.0; (n_steps + 1) * width];
            let coef = noise.sigma * hq * g1 / h.sqrt();
            for n in 1..=n_steps {
                for c in 0..dim {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += (bq[n - j] - bq[n - 1 - j]) * xi[j * dim + c];
                    }
                    for lane in 0..lanes.count() {
                        fr[n * width + lane * dim + c] = coef * acc;
                    }
                }
            }
            Some(fr)
        } else {
            None
        };
        let raw = integrate(s, &lanes, n_steps, 0, forcing.as_deref(), &weights, &mut stats)?;
        let norms = (0..=n_steps)
            .map(|n| lanes.norm(&raw[n * width..(n + 1) * width]).powf(a))
            .collect();
        Ok((norms, stats))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Vec<f64>, WorkStats)>> =
        pool.install(|| (0..noise.paths).into_par_iter().map(run_path).collect());

    // Welford in path order: deterministic, and exact when all paths agree
    let mut mean = vec![0.0; n_steps + 1];
    let mut m2 = vec![0.0; n_steps + 1];
    let mut stats = WorkStats::default();
    for (k, r) in results.into_iter().enumerate() {
        let (v, st) = r?;
        stats.rhs_evals += st.rhs_evals;
        stats.newton_iters += st.newton_iters;
        let kf = (k + 1) as f64;
        for i in 0..=n_steps {
            let delta = v[i] - mean[i];
            mean[i] += delta / kf;
            m2[i] += delta * (v[i] - mean[i]);
        }
    }
    let p = noise.paths as f64;
    let stderr = m2
        .iter()
        .map(|&m| if noise.paths > 1 { (m / (p - 1.0)).max(0.0).sqrt() / p.sqrt() } else { 0.0 })
        .collect();
    Ok(MomentTrajectory {
        q: s.q,
        times: (0..=n_steps).map(|n| n as f64 * h).collect(),
        moment: mean,
        stderr,
        a,
        paths: noise.paths,
        warnings,
        stats,
    })
}

/// Dispatch on the scenario's optional sections (noise excluded).
pub fn solve(s: &Scenario) -> Result<FuzzyTrajectory> {
    if s.delay.is_some() {
        solve_delay(s)
    } else {
        solve_caputo(s)
    }
}

/// Fuzzy norm of a state vector (re-exported for callers building states).
pub fn state_norm(x: &[FuzzyNumber]) -> f64 {
    vector_norm(x)
}
