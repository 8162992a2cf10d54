//! Stability certificates: explicit constants and envelope curves
//! t ↦ B(t), the converse construction and the LaSalle diagnostic.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzzy::{hausdorff, FuzzyNumber};
use crate::mlf::ml_one;
use crate::solver::{self, FuzzyTrajectory, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeKind {
    Ml,
    Iss,
    Ultimate,
    Delay,
    SmallGain,
    Stochastic,
}

impl EnvelopeKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvelopeKind::Ml => "ML",
            EnvelopeKind::Iss => "ISS",
            EnvelopeKind::Ultimate => "Ultimate",
            EnvelopeKind::Delay => "Delay",
            EnvelopeKind::SmallGain => "SmallGain",
            EnvelopeKind::Stochastic => "Stochastic",
        }
    }
}

/// How the additive term evolves in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OffsetProfile {
    /// `offset` at every t.
    Constant,
    /// `offset · (1 − E_q(−λ t^q))`.
    Saturating,
    /// `gain · sup_{s ≤ t} |g(s)|`, sampled on a grid; `offset` holds the
    /// value at the last sample.
    RunningSup {
        gain: f64,
        #[serde(skip)]
        times: Vec<f64>,
        #[serde(skip)]
        sup: Vec<f64>,
    },
}

/// B(t) = factor · (M · baseline · E_q(−λ t^q)^{1/a} + offset(t)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub q: f64,
    pub a: f64,
    pub m: f64,
    pub lambda: f64,
    pub offset: f64,
    pub baseline: f64,
    pub profile: OffsetProfile,
    /// 2^{1/a−1} on the a < 1 override path, otherwise 1.
    pub factor: f64,
    pub flags: Vec<String>,
}

impl Envelope {
    pub fn new(kind: EnvelopeKind, q: f64, a: f64, m: f64, lambda: f64, baseline: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::arg("q", format!("order {q} outside (0, 1]")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::arg("a", format!("exponent {a} must be positive")));
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::arg("M", format!("{m} must be finite and nonnegative")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::arg("lambda", format!("{lambda} must be finite and nonnegative")));
        }
        if !baseline.is_finite() {
            return Err(Error::arg("baseline", "must be finite"));
        }
        let mut flags = Vec::new();
        if m < 1.0 {
            flags.push(format!("M = {m} < 1: B(0) is below the baseline"));
        }
        Ok(Envelope {
            kind,
            q,
            a,
            m,
            lambda,
            offset: 0.0,
            baseline,
            profile: OffsetProfile::Constant,
            factor: 1.0,
            flags,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        if !(offset >= 0.0 && offset.is_finite()) {
            return Err(Error::arg("offset", format!("{offset} must be finite and nonnegative")));
        }
        self.offset = offset;
        Ok(self)
    }

    /// Replace a constant offset `gain · g_sup` by its running-sup version.
    /// `sup` must be nondecreasing and aligned with `times`.
    pub fn with_running_sup(mut self, gain: f64, times: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        if times.len() != sup.len() || times.is_empty() {
            return Err(Error::arg("sup", "needs one value per sample time"));
        }
        if sup.windows(2).any(|w| w[1] < w[0]) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("sup", "times must increase and sup must not decrease"));
        }
        if !(gain >= 0.0) {
            return Err(Error::arg("gain", "must be nonnegative"));
        }
        self.offset = gain * sup[sup.len() - 1];
        self.profile = OffsetProfile::RunningSup { gain, times, sup };
        Ok(self)
    }

    /// E_q(−λ t^q).
    pub fn decay(&self, t: f64) -> Result<f64> {
        if t <= 0.0 || self.lambda == 0.0 {
            return Ok(1.0);
        }
        ml_one(self.q, -self.lambda * t.powf(self.q))
    }

    pub fn offset_at(&self, t: f64) -> Result<f64> {
        Ok(match &self.profile {
            OffsetProfile::Constant => self.offset,
            OffsetProfile::Saturating => self.offset * (1.0 - self.decay(t)?),
            OffsetProfile::RunningSup { gain, times, sup } => {
                let i = times.partition_point(|&s| s <= t);
                // before the first sample use the first value
                gain * sup[i.saturating_sub(1)]
            }
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let e = self.decay(t)?.max(0.0);
        let head = if self.a == 1.0 { e } else { e.powf(1.0 / self.a) };
        Ok(self.factor * (self.m * self.baseline * head + self.offset_at(t)?))
    }

    pub fn eval_many(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }

    /// Sub-unit exponents: the root is only subadditive after the
    /// 2^{1/a−1} correction.
    fn root_guard(mut self, allow_sub_one: bool) -> Result<Self> {
        if self.a < 1.0 {
            if !allow_sub_one {
                return Err(Error::ExponentBelowOne(self.a));
            }
            self.factor = 2f64.powf(1.0 / self.a - 1.0);
            self.flags.push(format!(
                "WARN a = {} < 1: bound multiplied by 2^(1/a-1) = {}",
                self.a, self.factor
            ));
        }
        Ok(self)
    }
}

/// Constants of a Lyapunov function c1 Ď^a ≤ V ≤ c2 Ď^a with
/// D^q V ≤ −c3 Ď^a + c4 |g|^a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub a: f64,
}

impl LyapConstants {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64, a: f64) -> Result<Self> {
        let lc = LyapConstants { c1, c2, c3, c4, a };
        lc.validate()?;
        Ok(lc)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3), ("c4", self.c4), ("a", self.a)] {
            positive(name, v)?;
        }
        if self.c1 > self.c2 {
            return Err(Error::arg("c1", format!("c1 = {} exceeds c2 = {}", self.c1, self.c2)));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.c3 / self.c2
    }

    pub fn overshoot(&self) -> f64 {
        (self.c2 / self.c1).powf(1.0 / self.a)
    }

    /// Gain C = (c4 / (c1 κ))^{1/a} multiplying sup |g|.
    pub fn gain(&self) -> f64 {
        (self.c4 / (self.c1 * self.kappa())).powf(1.0 / self.a)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(name, format!("{v} must be positive and finite")))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(name, format!("{v} must be nonnegative and finite")))
    }
}

/// y(t) = w0 E_q(−κ t^q) + (R/κ)(1 − E_q(−κ t^q)).
pub fn scalar_comparison_solution(w0: f64, kappa: f64, r: f64, q: f64, t: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    nonnegative("w0", w0)?;
    nonnegative("R", r)?;
    nonnegative("t", t)?;
    let e = if t == 0.0 { 1.0 } else { ml_one(q, -kappa * t.powf(q))? };
    let rest = r / kappa;
    Ok(rest + (w0 - rest) * e)
}

pub fn iss_envelope(lc: &LyapConstants, q: f64, u0_norm: f64, g_sup: f64, allow_sub_one: bool) -> Result<Envelope> {
    lc.validate()?;
    nonnegative("u0_norm", u0_norm)?;
    nonnegative("g_sup", g_sup)?;
    Envelope::new(EnvelopeKind::Iss, q, lc.a, lc.overshoot(), lc.kappa(), u0_norm)?
        .with_offset(lc.gain() * g_sup)?
        .root_guard(allow_sub_one)
}

/// (β g / α)^{1/a}.
pub fn ultimate_bound(alpha: f64, beta: f64, a: f64, g_sup_star: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    positive("a", a)?;
    nonnegative("g_sup_star", g_sup_star)?;
    Ok((beta * g_sup_star / alpha).powf(1.0 / a))
}

/// Envelope for a system with D^q V ≤ −α V + β |g|^a, c1 Ď^a ≤ V ≤ c2 Ď^a.
#[allow(clippy::too_many_arguments)]
pub fn ultimate_envelope(
    alpha: f64,
    beta: f64,
    c1: f64,
    c2: f64,
    a: f64,
    q: f64,
    u0_norm: f64,
    g_sup: f64,
) -> Result<Envelope> {
    let lc = LyapConstants::new(c1, c2, alpha * c2, beta * c2, a)?;
    let mut env = iss_envelope(&lc, q, u0_norm, g_sup, false)?;
    env.kind = EnvelopeKind::Ultimate;
    Ok(env)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmiCertificate {
    #[serde(serialize_with = "ser_matrix")]
    pub p: DMatrix<f64>,
    pub mu: f64,
    pub m: f64,
    pub lambda: f64,
    pub a: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    /// λ_max(AᵀP + PA + μP).
    pub residual: f64,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub const LMI_RESIDUAL_TOL: f64 = 1e-9;

impl LmiCertificate {
    pub fn envelope(&self, q: f64, u0_norm: f64) -> Result<Envelope> {
        nonnegative("u0_norm", u0_norm)?;
        Envelope::new(EnvelopeKind::Ml, q, self.a, self.m, self.lambda, u0_norm)
    }
}

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::arg("A", format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("A", "non-finite entry"));
    }
    Ok(n)
}

/// Solve AᵀP + PA = −Q through the Kronecker form.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a)?;
    let id = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let k = id.kronecker(&at) + at.kronecker(&id);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LyapunovSolve("singular Lyapunov operator".into()))?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::LyapunovSolve("non-finite solution".into()));
    }
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

fn lmi_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, mu: f64) -> f64 {
    let s = a.transpose() * p + p * a + p * mu;
    let s = (&s + s.transpose()) * 0.5;
    s.symmetric_eigenvalues().max()
}

/// Certificate from the identity-forced Lyapunov equation.
pub fn lmi_certificate(a: &DMatrix<f64>) -> Result<LmiCertificate> {
    let n = check_square(a)?;
    let p = match solve_lyapunov(a, &DMatrix::identity(n, n)) {
        Ok(p) => p,
        // eigenvalues summing to zero: some eigenvalue has nonnegative real part
        Err(Error::LyapunovSolve(_)) => return Err(Error::NotHurwitz { min_eig: 0.0 }),
        Err(e) => return Err(e),
    };
    let eig = p.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 1e-12 * hi.abs().max(f64::MIN_POSITIVE)) || !(hi > 0.0) {
        return Err(Error::NotHurwitz { min_eig: lo });
    }
    let mu = 1.0 / hi;
    issue(a, p, mu, lo, hi)
}

/// Certificate for a caller-supplied P: the largest μ with
/// AᵀP + PA + μP ⪯ 0, i.e. −λ_max(L⁻¹(AᵀP + PA)L⁻ᵀ) for P = LLᵀ.
pub fn lmi_certificate_with(a: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<LmiCertificate> {
    let n = check_square(a)?;
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::arg("P", "shape differs from A"));
    }
    if (p - p.transpose()).amax() > 1e-12 * p.amax() {
        return Err(Error::arg("P", "not symmetric"));
    }
    let p = (p + p.transpose()) * 0.5;
    let chol = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::arg("P", "not positive definite"))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::arg("P", "not positive definite"))?;
    let s = a.transpose() * &p + &p * a;
    let g = &l_inv * s * l_inv.transpose();
    let g = (&g + g.transpose()) * 0.5;
    let mu = -g.symmetric_eigenvalues().max();
    if !(mu > 0.0) {
        return Err(Error::arg("P", format!("AᵀP + PA is not negative definite (mu = {mu})")));
    }
    let eig = p.clone().symmetric_eigenvalues();
    issue(a, p, mu, eig.min(), eig.max())
}

fn issue(a: &DMatrix<f64>, p: DMatrix<f64>, mu: f64, lo: f64, hi: f64) -> Result<LmiCertificate> {
    let residual = lmi_residual(a, &p, mu);
    let scale = p.norm() * (a.norm() + mu);
    if residual > LMI_RESIDUAL_TOL * scale.max(1.0) {
        return Err(Error::LyapunovSolve(format!("LMI residual {residual:e} above tolerance")));
    }
    Ok(LmiCertificate {
        p,
        mu,
        m: (hi / lo).sqrt(),
        lambda: mu,
        a: 2.0,
        eig_min: lo,
        eig_max: hi,
        residual,
    })
}

/// Lyapunov-Krasovskii envelope on the history supremum.
pub fn delay_envelope(
    c1: f64,
    c2: f64,
    alpha: f64,
    a: f64,
    q: f64,
    phi_sup: f64,
    allow_sub_one: bool,
) -> Result<Envelope> {
    positive("c1", c1)?;
    positive("c2", c2)?;
    positive("alpha", alpha)?;
    positive("a", a)?;
    nonnegative("phi_sup", phi_sup)?;
    if c1 > c2 {
        return Err(Error::arg("c1", format!("c1 = {c1} exceeds c2 = {c2}")));
    }
    Envelope::new(EnvelopeKind::Delay, q, a, (c2 / c1).powf(1.0 / a), alpha / c2, phi_sup)?.root_guard(allow_sub_one)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallGainCertificate {
    pub x_bound: f64,
    pub y_bound: f64,
    pub envelope: Envelope,
    pub flags: Vec<String>,
}

/// Interconnection of two ML-ISS subsystems with gains γ12 (y into x) and γ21.
#[allow(clippy::too_many_arguments)]
pub fn small_gain(
    m1: f64,
    m2: f64,
    kappa1: f64,
    kappa2: f64,
    gamma12: f64,
    gamma21: f64,
    x0_norm: f64,
    y0_norm: f64,
    q: f64,
) -> Result<SmallGainCertificate> {
    nonnegative("M1", m1)?;
    nonnegative("M2", m2)?;
    positive("kappa1", kappa1)?;
    positive("kappa2", kappa2)?;
    nonnegative("gamma12", gamma12)?;
    nonnegative("gamma21", gamma21)?;
    nonnegative("x0_norm", x0_norm)?;
    nonnegative("y0_norm", y0_norm)?;
    let loop_gain = gamma12 * gamma21;
    if loop_gain >= 1.0 {
        return Err(Error::GainTooLarge(loop_gain));
    }
    let d = 1.0 - loop_gain;
    let x_bound = (m1 * x0_norm + gamma12 * m2 * y0_norm) / d;
    let y_bound = (m2 * y0_norm + gamma21 * m1 * x0_norm) / d;
    let m = (m1 + m2 + gamma12 * m2 + gamma21 * m1) / d;
    let mut flags = Vec::new();
    if m1 < 1.0 || m2 < 1.0 {
        flags.push(format!("subsystem overshoot below 1 (M1 = {m1}, M2 = {m2})"));
    }
    let mut envelope = Envelope::new(EnvelopeKind::SmallGain, q, 1.0, m, kappa1.min(kappa2), x0_norm + y0_norm)?;
    envelope
        .flags
        .push("composite decay rate is heuristic; only X_bound and Y_bound are certified".into());
    Ok(SmallGainCertificate {
        x_bound,
        y_bound,
        envelope,
        flags,
    })
}

fn stochastic_check(alpha: f64, beta: f64, c1: f64, c2: f64, a: f64, w0: f64) -> Result<()> {
    positive("alpha", alpha)?;
    nonnegative("beta", beta)?;
    positive("c1", c1)?;
    positive("c2", c2)?;
    positive("a", a)?;
    nonnegative("w0", w0)
}

/// Bound on E[Ď^a] at time t.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_bound(alpha: f64, beta: f64, c1: f64, c2: f64, a: f64, w0: f64, q: f64, t: f64) -> Result<f64> {
    stochastic_check(alpha, beta, c1, c2, a, w0)?;
    let kappa = alpha / c2;
    Ok(scalar_comparison_solution(w0, kappa, beta, q, t)? / c1)
}

/// The same bound as an envelope on the moment itself (no root is taken).
#[allow(clippy::too_many_arguments)]
pub fn stochastic_envelope(alpha: f64, beta: f64, c1: f64, c2: f64, a: f64, w0: f64, q: f64) -> Result<Envelope> {
    stochastic_check(alpha, beta, c1, c2, a, w0)?;
    let kappa = alpha / c2;
    let mut env = Envelope::new(EnvelopeKind::Stochastic, q, 1.0, 1.0 / c1, kappa, w0)?.with_offset(beta / (c1 * kappa))?;
    env.profile = OffsetProfile::Saturating;
    env.flags.retain(|f| !f.starts_with("M ="));
    env.flags.push(format!("bounds the moment E[norm^{a}] directly"));
    Ok(env)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseSample {
    pub initial_norm: f64,
    pub v: f64,
    /// V / Ď^a, absent for the zero sample.
    pub ratio: Option<f64>,
    /// Largest increase of the shifted-window V along the trajectory,
    /// relative to V(u0).
    pub max_increase: f64,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseReport {
    pub a: f64,
    pub t_trunc: f64,
    pub samples: Vec<ConverseSample>,
    pub c1: f64,
    pub c2: f64,
    pub decreasing: bool,
}

pub const CONVERSE_DECREMENT_TOL: f64 = 1e-6;
const DECAY_SCREEN: f64 = 0.1;

/// V(u0) = ∫₀^T Ď(u(s; u0), 0)^a ds, trapezoidal on the solver grid. Each
/// sample is integrated on [0, 2T] so V can be evaluated along the
/// trajectory as the shifted window ∫_t^{t+T}.
pub fn converse_lyapunov(
    template: &Scenario,
    samples: &[FuzzyNumber],
    t_trunc: f64,
    a: f64,
) -> Result<ConverseReport> {
    positive("a", a)?;
    positive("t_trunc", t_trunc)?;
    if template.dim() != 1 {
        return Err(Error::arg("template", "converse construction needs a scalar system"));
    }
    if samples.is_empty() {
        return Err(Error::arg("samples", "empty"));
    }
    let h = template.step;
    let n = (t_trunc / h).round() as usize;
    if n == 0 || ((n as f64) * h - t_trunc).abs() > 1e-9 * t_trunc {
        return Err(Error::arg("t_trunc", format!("{t_trunc} is not a multiple of the step {h}")));
    }
    let rows: Vec<Result<ConverseSample>> = samples
        .par_iter()
        .map(|u0| {
            let mut s = template.clone();
            s.initial = vec![u0.clone()];
            s.horizon = 2.0 * n as f64 * h;
            let tr = solver::solve(&s)?;
            converse_sample(&tr, n, h, a)
        })
        .collect();
    let samples: Vec<ConverseSample> = rows.into_iter().collect::<Result<_>>()?;
    let ratios: Vec<f64> = samples.iter().filter_map(|s| s.ratio).collect();
    if ratios.is_empty() {
        return Err(Error::ConverseNotApplicable("all samples are at the equilibrium".into()));
    }
    let c1 = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ConverseReport {
        a,
        t_trunc,
        decreasing: samples.iter().all(|s| s.decreasing),
        samples,
        c1,
        c2,
    })
}

fn converse_sample(tr: &FuzzyTrajectory, n: usize, h: f64, a: f64) -> Result<ConverseSample> {
    let o = tr.origin();
    let norms: Vec<f64> = tr.norm[o..].iter().map(|x| x.powf(a)).collect();
    let n0 = tr.norm[o];
    if n0 > 0.0 && !(tr.norm[o + n] < DECAY_SCREEN * n0) {
        return Err(Error::ConverseNotApplicable(format!(
            "norm at T is {} of the initial norm (needs < {DECAY_SCREEN})",
            tr.norm[o + n] / n0
        )));
    }
    // cumulative trapezoid
    let mut cum = vec![0.0; norms.len()];
    for i in 1..norms.len() {
        cum[i] = cum[i - 1] + 0.5 * h * (norms[i - 1] + norms[i]);
    }
    let v = cum[n];
    let mut max_increase = 0.0f64;
    if v > 0.0 {
        let mut prev = v;
        for i in 1..=n {
            let w = cum[i + n] - cum[i];
            max_increase = max_increase.max((w - prev) / v);
            prev = w;
        }
    }
    Ok(ConverseSample {
        initial_norm: n0,
        v,
        ratio: (n0 > 0.0).then(|| v / n0.powf(a)),
        max_increase,
        decreasing: max_increase <= CONVERSE_DECREMENT_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaSalleReport {
    pub max_jump: f64,
    pub first_jump_t: Option<f64>,
    pub terminal_distance: f64,
    pub v_limit: f64,
    pub pass: bool,
}

/// Runtime diagnostic: V nonincreasing along the grid (t ≥ 0) and the
/// distance of the terminal state to the nearest listed equilibrium.
pub fn lasalle_check<F>(traj: &FuzzyTrajectory, v: F, equilibria: &[Vec<FuzzyNumber>], tol: f64) -> Result<LaSalleReport>
where
    F: Fn(&[FuzzyNumber]) -> f64,
{
    nonnegative("tol", tol)?;
    if traj.is_empty() {
        return Err(Error::arg("traj", "empty trajectory"));
    }
    let mut max_jump = 0.0f64;
    let mut first_jump_t = None;
    let mut prev: Option<f64> = None;
    let mut last = 0.0;
    for node in traj.origin()..traj.len() {
        let state = traj.state(node)?;
        let val = v(&state);
        if !val.is_finite() {
            return Err(Error::NonFinite { t: traj.times[node] });
        }
        if let Some(p) = prev {
            let jump = val - p;
            if jump > max_jump {
                max_jump = jump;
            }
            if jump > tol && first_jump_t.is_none() {
                first_jump_t = Some(traj.times[node]);
            }
        }
        prev = Some(val);
        last = val;
    }
    let terminal = traj.state(traj.len() - 1)?;
    let mut terminal_distance = f64::INFINITY;
    for e in equilibria {
        if e.len() != terminal.len() {
            return Err(Error::arg("equilibria", "dimension differs from the trajectory"));
        }
        let mut d = 0.0f64;
        for (x, y) in terminal.iter().zip(e) {
            d = d.max(hausdorff(x, &y.resample(x.levels())?)?);
        }
        terminal_distance = terminal_distance.min(d);
    }
    Ok(LaSalleReport {
        max_jump,
        first_jump_t,
        terminal_distance,
        v_limit: last,
        pass: max_jump <= tol,
    })
}
