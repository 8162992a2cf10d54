//! Simulate → certify → verify pipelines, envelope checks, sweeps and
//! deterministic reports.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{self, Envelope, EnvelopeKind, LyapConstants};
use crate::error::{Error, Result};
use crate::expr::Env;
use crate::fuzzy::FuzzyNumber;
use crate::solver::{self, fmt_num, FuzzyTrajectory, MomentTrajectory, Scenario, System};

pub const DEFAULT_RTOL: f64 = 0.02;
pub const DEFAULT_ATOL: f64 = 1e-9;
pub const MAX_SWEEP_ROWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        }
    }
}

impl VerifyOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rtol >= 0.0 && self.rtol.is_finite()) {
            return Err(Error::arg("rtol", format!("must be finite and >= 0, got {}", self.rtol)));
        }
        if !(self.atol >= 0.0 && self.atol.is_finite()) {
            return Err(Error::arg("atol", format!("must be finite and >= 0, got {}", self.atol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub n_points: usize,
    pub violations: usize,
    /// max over points of (value − inflated bound) / inflated bound.
    pub max_excess: f64,
    pub first_violation_t: Option<f64>,
    pub pass: bool,
    /// B(t) − value per point.
    #[serde(skip)]
    pub margins: Vec<f64>,
}

/// Pointwise check of `values` against `env` on `times`, with optional
/// additive slack on the bound side.
pub fn verify_series(
    times: &[f64],
    values: &[f64],
    slack: Option<&[f64]>,
    env: &Envelope,
    opts: VerifyOptions,
) -> Result<EnvelopeReport> {
    opts.validate()?;
    if times.len() != values.len() || slack.is_some_and(|s| s.len() != times.len()) {
        return Err(Error::arg("trajectory", "times and values differ in length"));
    }
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut first_violation_t = None;
    let mut margins = Vec::with_capacity(times.len());
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { t });
        }
        let b = env.eval(t)? + slack.map_or(0.0, |s| s[i]);
        margins.push(b - v);
        let inflated = b * (1.0 + opts.rtol) + opts.atol;
        let excess = (v - inflated) / inflated.max(f64::MIN_POSITIVE);
        max_excess = max_excess.max(excess);
        if v > inflated {
            violations += 1;
            first_violation_t.get_or_insert(t);
        }
    }
    Ok(EnvelopeReport {
        n_points: times.len(),
        violations,
        max_excess: if times.is_empty() { 0.0 } else { max_excess },
        first_violation_t,
        pass: violations == 0,
        margins,
    })
}

fn same_order(q: f64, env: &Envelope) -> Result<()> {
    if (q - env.q).abs() > 1e-12 {
        return Err(Error::arg("q", format!("trajectory order {q} differs from envelope order {}", env.q)));
    }
    Ok(())
}

/// Fuzzy norm against B(t) on the nodes with t ≥ 0.
pub fn verify_envelope(traj: &FuzzyTrajectory, env: &Envelope, opts: VerifyOptions) -> Result<EnvelopeReport> {
    same_order(traj.q, env)?;
    let o = traj.origin();
    verify_series(&traj.times[o..], &traj.norm[o..], None, env, opts)
}

/// Moment estimate against B(t) with 3·stderr slack.
pub fn verify_moment(traj: &MomentTrajectory, env: &Envelope, opts: VerifyOptions) -> Result<EnvelopeReport> {
    same_order(traj.q, env)?;
    let slack: Vec<f64> = traj.stderr.iter().map(|s| 3.0 * s).collect();
    verify_series(&traj.times, &traj.moment, Some(&slack), env, opts)
}

/// Which certificate to issue and check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateRequest {
    /// Simulate only.
    None,
    Lmi {
        #[serde(default)]
        p: Option<Vec<Vec<f64>>>,
    },
    Iss {
        c1: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        a: f64,
        #[serde(default)]
        allow_sub_one: bool,
    },
    Ultimate {
        alpha: f64,
        beta: f64,
        #[serde(default = "one")]
        c1: f64,
        #[serde(default = "one")]
        c2: f64,
        a: f64,
        /// Terminal norm may exceed the bound by this fraction.
        #[serde(default = "five_percent")]
        terminal_slack: f64,
    },
    Delay {
        c1: f64,
        c2: f64,
        alpha: f64,
        a: f64,
        #[serde(default)]
        allow_sub_one: bool,
    },
    SmallGain {
        m1: f64,
        m2: f64,
        kappa1: f64,
        kappa2: f64,
        gamma12: f64,
        gamma21: f64,
    },
    Stochastic {
        alpha: f64,
        beta: f64,
        c1: f64,
        c2: f64,
        a: f64,
    },
    Converse {
        t_trunc: f64,
        a: f64,
        samples: Vec<f64>,
        #[serde(default = "ratio_limit")]
        max_ratio: f64,
    },
    Lasalle {
        /// V = Ď(u, 0)^power.
        #[serde(default = "two")]
        power: f64,
        #[serde(default = "jump_tol")]
        tol: f64,
        /// Crisp equilibria, one value per component.
        equilibria: Vec<Vec<f64>>,
        #[serde(default = "five_percent")]
        max_distance: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn five_percent() -> f64 {
    0.05
}
fn ratio_limit() -> f64 {
    1.1
}
fn jump_tol() -> f64 {
    1e-9
}

impl CertificateRequest {
    pub fn name(&self) -> &'static str {
        match self {
            CertificateRequest::None => "none",
            CertificateRequest::Lmi { .. } => "lmi",
            CertificateRequest::Iss { .. } => "iss",
            CertificateRequest::Ultimate { .. } => "ultimate",
            CertificateRequest::Delay { .. } => "delay",
            CertificateRequest::SmallGain { .. } => "small_gain",
            CertificateRequest::Stochastic { .. } => "stochastic",
            CertificateRequest::Converse { .. } => "converse",
            CertificateRequest::Lasalle { .. } => "lasalle",
        }
    }
}

/// A parsed scenario plus the certificate to check.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub scenario: Scenario,
    pub certificate: CertificateRequest,
    pub verify: VerifyOptions,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateBlock {
    pub kind: String,
    pub constants: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

/// One verdict in the verification block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Reported but not part of the overall verdict.
    pub informational: bool,
    pub detail: String,
    pub envelope: Option<EnvelopeReport>,
}

impl Check {
    fn envelope(name: &str, rep: EnvelopeReport) -> Self {
        let detail = format!(
            "points {}, violations {}, max excess {}, first violation {}",
            rep.n_points,
            rep.violations,
            fmt_num(rep.max_excess),
            rep.first_violation_t.map_or("none".to_string(), fmt_num)
        );
        Check {
            name: name.to_string(),
            pass: rep.pass,
            informational: false,
            detail,
            envelope: Some(rep),
        }
    }

    fn value(name: &str, value: f64, limit: f64, relation: &str, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            pass,
            informational: false,
            detail: format!("{} {relation} {}", fmt_num(value), fmt_num(limit)),
            envelope: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub nodes: usize,
    pub initial_norm: f64,
    pub terminal_norm: f64,
    pub min_diam: f64,
    pub max_diam: f64,
}

/// Deterministic work counters used in place of wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct Timing {
    pub nodes: usize,
    pub paths: usize,
    pub rhs_evals: u64,
    pub newton_iters: u64,
}

/// Per-point series written next to the report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvelopeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub scenario: Vec<(String, String)>,
    pub certificate: CertificateBlock,
    pub verification: Vec<Check>,
    pub summary: TrajectorySummary,
    pub timing: Timing,
    pub warnings: Vec<String>,
    pub pass: bool,
    #[serde(skip)]
    pub trajectory: Option<FuzzyTrajectory>,
    #[serde(skip)]
    pub moment: Option<MomentTrajectory>,
    #[serde(skip)]
    pub series: Option<EnvelopeSeries>,
}

impl RunReport {
    /// 0 on pass, 1 when a gating check failed.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run {}", self.name);
        let _ = writeln!(s, "[scenario]");
        for (k, v) in &self.scenario {
            let _ = writeln!(s, "  {k} = {v}");
        }
        let _ = writeln!(s, "[certificate]");
        let _ = writeln!(s, "  kind = {}", self.certificate.kind);
        for (k, v) in &self.certificate.constants {
            let _ = writeln!(s, "  {k} = {}", fmt_num(*v));
        }
        for f in &self.certificate.flags {
            let _ = writeln!(s, "  flag: {f}");
        }
        let _ = writeln!(s, "[verification]");
        for c in &self.verification {
            let tag = match (c.informational, c.pass) {
                (true, true) => "info ok",
                (true, false) => "info exceeded",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            let _ = writeln!(s, "  {}: {tag} ({})", c.name, c.detail);
        }
        let _ = writeln!(s, "  result = {}", if self.pass { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "[trajectory]");
        let t = &self.summary;
        let _ = writeln!(s, "  nodes = {}", t.nodes);
        let _ = writeln!(s, "  initial_norm = {}", fmt_num(t.initial_norm));
        let _ = writeln!(s, "  terminal_norm = {}", fmt_num(t.terminal_norm));
        let _ = writeln!(s, "  min_diam = {}", fmt_num(t.min_diam));
        let _ = writeln!(s, "  max_diam = {}", fmt_num(t.max_diam));
        let _ = writeln!(s, "[timing]");
        let _ = writeln!(s, "  nodes = {}", self.timing.nodes);
        let _ = writeln!(s, "  paths = {}", self.timing.paths);
        let _ = writeln!(s, "  rhs_evals = {}", self.timing.rhs_evals);
        let _ = writeln!(s, "  newton_iters = {}", self.timing.newton_iters);
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "[warnings]");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// `t, value, bound, margin` for the main envelope check.
    pub fn write_envelope_csv<W: Write>(&self, out: W) -> Result<()> {
        let Some(series) = &self.series else {
            return Ok(());
        };
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["t", "value", "bound", "margin"]).map_err(err)?;
        for i in 0..series.times.len() {
            w.write_record([
                fmt_num(series.times[i]),
                fmt_num(series.values[i]),
                fmt_num(series.bounds[i]),
                fmt_num(series.bounds[i] - series.values[i]),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn describe_scenario(cfg: &RunConfig) -> Vec<(String, String)> {
    let s = &cfg.scenario;
    let mut out = vec![
        ("name".to_string(), cfg.name.clone()),
        ("q".into(), fmt_num(s.q)),
        ("horizon".into(), fmt_num(s.horizon)),
        ("step".into(), fmt_num(s.step)),
    ];
    match &s.system {
        System::Scalar(e) => out.push(("rhs".into(), e.to_string())),
        System::Linear(a) => {
            let rows: Vec<String> = (0..a.nrows())
                .map(|i| {
                    let r: Vec<String> = a.row(i).iter().map(|&x| fmt_num(x)).collect();
                    format!("[{}]", r.join(", "))
                })
                .collect();
            out.push(("matrix".into(), format!("[{}]", rows.join(", "))));
        }
    }
    for (k, v) in &s.params {
        out.push((format!("param.{k}"), fmt_num(*v)));
    }
    out.push(("levels".into(), s.levels().len().to_string()));
    for (i, u) in s.initial.iter().enumerate() {
        out.push((
            format!("initial[{i}]"),
            format!(
                "support [{}, {}], core [{}, {}]",
                fmt_num(u.lower()[0]),
                fmt_num(u.upper()[0]),
                fmt_num(u.lower()[u.num_levels() - 1]),
                fmt_num(u.upper()[u.num_levels() - 1])
            ),
        ));
    }
    if let Some(g) = &s.disturbance {
        let g: Vec<String> = g.iter().map(|e| e.to_string()).collect();
        out.push(("disturbance".into(), g.join("; ")));
    }
    if let Some(d) = &s.delay {
        out.push(("tau".into(), fmt_num(d.tau)));
        out.push(("history".into(), d.history.to_string()));
    }
    if let Some(n) = &s.noise {
        out.push(("sigma".into(), fmt_num(n.sigma)));
        out.push(("paths".into(), n.paths.to_string()));
        out.push(("seed".into(), n.seed.to_string()));
    }
    out.push(("certificate".into(), cfg.certificate.name().into()));
    out.push(("rtol".into(), fmt_num(cfg.verify.rtol)));
    out.push(("atol".into(), fmt_num(cfg.verify.atol)));
    out
}

fn summarize(tr: &FuzzyTrajectory) -> TrajectorySummary {
    let o = tr.origin();
    let last = tr.len() - 1;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for node in o..tr.len() {
        lo = lo.min(tr.min_diam(node));
        hi = hi.max(tr.max_diam(node));
    }
    TrajectorySummary {
        nodes: tr.len() - o,
        initial_norm: tr.norm[o],
        terminal_norm: tr.norm[last],
        min_diam: lo,
        max_diam: hi,
    }
}

fn envelope_block(env: &Envelope) -> CertificateBlock {
    let mut constants = vec![
        ("q".to_string(), env.q),
        ("a".into(), env.a),
        ("M".into(), env.m),
        ("lambda".into(), env.lambda),
        ("offset".into(), env.offset),
        ("baseline".into(), env.baseline),
    ];
    if env.factor != 1.0 {
        constants.push(("factor".into(), env.factor));
    }
    CertificateBlock {
        kind: env.kind.name().to_string(),
        constants,
        flags: env.flags.clone(),
    }
}

fn series(times: &[f64], values: &[f64], env: &Envelope) -> Result<EnvelopeSeries> {
    Ok(EnvelopeSeries {
        times: times.to_vec(),
        values: values.to_vec(),
        bounds: env.eval_many(times)?,
    })
}

fn fuzzy_series(tr: &FuzzyTrajectory, env: &Envelope) -> Result<EnvelopeSeries> {
    let o = tr.origin();
    series(&tr.times[o..], &tr.norm[o..], env)
}

/// Running sup of the disturbance norm on the t ≥ 0 grid.
fn disturbance_sup(s: &Scenario, times: &[f64]) -> Result<Vec<f64>> {
    let mut sup = Vec::with_capacity(times.len());
    let mut m = 0.0f64;
    for &t in times {
        if let Some(g) = &s.disturbance {
            let env = Env::new(&s.params).t(t);
            let mut sq = 0.0;
            for e in g {
                let v = e.eval(&env)?;
                sq += v * v;
            }
            m = m.max(sq.sqrt());
        }
        sup.push(m);
    }
    Ok(sup)
}

/// Simulate, certify and verify one configuration.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunReport> {
    cfg.scenario.validate()?;
    cfg.verify.validate()?;
    let s = &cfg.scenario;
    let opts = cfg.verify;
    let mut report = RunReport {
        name: cfg.name.clone(),
        scenario: describe_scenario(cfg),
        certificate: CertificateBlock {
            kind: "none".into(),
            constants: Vec::new(),
            flags: Vec::new(),
        },
        verification: Vec::new(),
        summary: TrajectorySummary {
            nodes: 0,
            initial_norm: 0.0,
            terminal_norm: 0.0,
            min_diam: 0.0,
            max_diam: 0.0,
        },
        timing: Timing::default(),
        warnings: Vec::new(),
        pass: true,
        trajectory: None,
        moment: None,
        series: None,
    };

    if let CertificateRequest::Stochastic { alpha, beta, c1, c2, a } = cfg.certificate {
        let m = solver::solve_stochastic(s, a, cfg.workers)?;
        let w0 = solver::state_norm(&s.initial).powf(a);
        let env = certify::stochastic_envelope(alpha, beta, c1, c2, a, w0, s.q)?;
        report.certificate = envelope_block(&env);
        report.certificate.constants.push(("kappa".into(), alpha / c2));
        report.certificate.constants.push(("limit".into(), beta / (c1 * alpha / c2)));
        let rep = verify_moment(&m, &env, opts)?;
        report.verification.push(Check::envelope("mean-square bound (+3 stderr)", rep));
        report.series = Some(series(&m.times, &m.moment, &env)?);
        report.summary = TrajectorySummary {
            nodes: m.times.len(),
            initial_norm: m.moment[0],
            terminal_norm: m.moment[m.moment.len() - 1],
            min_diam: 0.0,
            max_diam: 0.0,
        };
        report.timing = Timing {
            nodes: m.times.len(),
            paths: m.paths,
            rhs_evals: m.stats.rhs_evals,
            newton_iters: m.stats.newton_iters,
        };
        report.warnings = m.warnings.clone();
        report.moment = Some(m);
        report.pass = report.verification.iter().all(|c| c.pass || c.informational);
        return Ok(report);
    }

    let tr = solver::solve(s)?;
    report.summary = summarize(&tr);
    report.timing = Timing {
        nodes: tr.len(),
        paths: 0,
        rhs_evals: tr.stats.rhs_evals,
        newton_iters: tr.stats.newton_iters,
    };
    report.warnings = tr.warnings.clone();
    let o = tr.origin();
    let u0_norm = tr.norm[o];

    match &cfg.certificate {
        CertificateRequest::None | CertificateRequest::Stochastic { .. } => {}
        CertificateRequest::Lmi { p } => {
            let System::Linear(a) = &s.system else {
                return Err(Error::arg("certificate", "lmi needs a linear system (matrix)"));
            };
            let cert = match p {
                None => certify::lmi_certificate(a)?,
                Some(rows) => certify::lmi_certificate_with(a, &matrix(rows)?)?,
            };
            let env = cert.envelope(s.q, u0_norm)?;
            report.certificate = envelope_block(&env);
            report.certificate.kind = "LMI".into();
            report.certificate.constants.push(("mu".into(), cert.mu));
            report.certificate.constants.push(("eig_min(P)".into(), cert.eig_min));
            report.certificate.constants.push(("eig_max(P)".into(), cert.eig_max));
            report.certificate.constants.push(("lmi_residual".into(), cert.residual));
            let rep = verify_envelope(&tr, &env, opts)?;
            report.series = Some(fuzzy_series(&tr, &env)?);
            report.verification.push(Check::envelope("ML envelope", rep));
        }
        CertificateRequest::Iss {
            c1,
            c2,
            c3,
            c4,
            a,
            allow_sub_one,
        } => {
            let lc = LyapConstants::new(*c1, *c2, *c3, *c4, *a)?;
            let times = &tr.times[o..];
            let sup = disturbance_sup(s, times)?;
            let env = certify::iss_envelope(&lc, s.q, u0_norm, sup[sup.len() - 1], *allow_sub_one)?
                .with_running_sup(lc.gain(), times.to_vec(), sup)?;
            report.certificate = envelope_block(&env);
            report.certificate.constants.push(("C".into(), lc.gain()));
            let rep = verify_envelope(&tr, &env, opts)?;
            report.series = Some(fuzzy_series(&tr, &env)?);
            report.verification.push(Check::envelope("ISS envelope", rep));
        }
        CertificateRequest::Ultimate {
            alpha,
            beta,
            c1,
            c2,
            a,
            terminal_slack,
        } => {
            let times = &tr.times[o..];
            let sup = disturbance_sup(s, times)?;
            let g = sup[sup.len() - 1];
            let bound = certify::ultimate_bound(*alpha, *beta, *a, g.powf(*a))?;
            let env = certify::ultimate_envelope(*alpha, *beta, *c1, *c2, *a, s.q, u0_norm, g)?;
            report.certificate = envelope_block(&env);
            report.certificate.constants.push(("ultimate_bound".into(), bound));
            let rep = verify_envelope(&tr, &env, opts)?;
            report.series = Some(fuzzy_series(&tr, &env)?);
            report.verification.push(Check::envelope("ISS-type envelope", rep));
            let terminal = tr.norm[tr.len() - 1];
            let limit = bound * (1.0 + terminal_slack) + opts.atol;
            report
                .verification
                .push(Check::value("terminal norm", terminal, limit, "<=", terminal <= limit));
        }
        CertificateRequest::Delay {
            c1,
            c2,
            alpha,
            a,
            allow_sub_one,
        } => {
            let phi_sup = tr.norm[..=o].iter().copied().fold(0.0, f64::max);
            let env = certify::delay_envelope(*c1, *c2, *alpha, *a, s.q, phi_sup, *allow_sub_one)?;
            report.certificate = envelope_block(&env);
            let rep = verify_envelope(&tr, &env, opts)?;
            report.series = Some(fuzzy_series(&tr, &env)?);
            report.verification.push(Check::envelope("delay envelope", rep));
        }
        CertificateRequest::SmallGain {
            m1,
            m2,
            kappa1,
            kappa2,
            gamma12,
            gamma21,
        } => {
            if s.dim() != 2 {
                return Err(Error::arg("certificate", "small_gain needs a two-component system"));
            }
            let x0 = s.initial[0].norm();
            let y0 = s.initial[1].norm();
            let cert = certify::small_gain(*m1, *m2, *kappa1, *kappa2, *gamma12, *gamma21, x0, y0, s.q)?;
            report.certificate = envelope_block(&cert.envelope);
            report.certificate.constants.push(("X_bound".into(), cert.x_bound));
            report.certificate.constants.push(("Y_bound".into(), cert.y_bound));
            report.certificate.flags.extend(cert.flags.iter().cloned());
            let times = &tr.times[o..];
            for (c, name, bound) in [(0, "x within X_bound", cert.x_bound), (1, "y within Y_bound", cert.y_bound)] {
                let values: Vec<f64> = (o..tr.len()).map(|n| component_norm(&tr, n, c)).collect();
                let flat = Envelope::new(EnvelopeKind::SmallGain, s.q, 1.0, 0.0, 0.0, 0.0)?.with_offset(bound)?;
                let rep = verify_series(times, &values, None, &flat, opts)?;
                report.verification.push(Check::envelope(name, rep));
            }
            let rep = verify_envelope(&tr, &cert.envelope, opts)?;
            let mut composite = Check::envelope("composite envelope", rep);
            composite.informational = true;
            report.verification.push(composite);
            report.series = Some(fuzzy_series(&tr, &cert.envelope)?);
        }
        CertificateRequest::Converse {
            t_trunc,
            a,
            samples,
            max_ratio,
        } => {
            let samples: Vec<FuzzyNumber> = samples
                .iter()
                .map(|&x| FuzzyNumber::crisp_on(x, s.levels()))
                .collect();
            let rep = certify::converse_lyapunov(s, &samples, *t_trunc, *a)?;
            report.certificate = CertificateBlock {
                kind: "Converse".into(),
                constants: vec![
                    ("a".into(), rep.a),
                    ("t_trunc".into(), rep.t_trunc),
                    ("c1".into(), rep.c1),
                    ("c2".into(), rep.c2),
                ],
                flags: vec!["weight Phi(r) = r^a, truncated integral".into()],
            };
            for (i, smp) in rep.samples.iter().enumerate() {
                report.certificate.constants.push((format!("V[{i}]"), smp.v));
            }
            let ratio = rep.c2 / rep.c1;
            report
                .verification
                .push(Check::value("c2/c1", ratio, *max_ratio, "<=", ratio <= *max_ratio));
            let worst = rep.samples.iter().map(|s| s.max_increase).fold(0.0, f64::max);
            report.verification.push(Check::value(
                "V nonincreasing (relative increase)",
                worst,
                certify::CONVERSE_DECREMENT_TOL,
                "<=",
                rep.decreasing,
            ));
        }
        CertificateRequest::Lasalle {
            power,
            tol,
            equilibria,
            max_distance,
        } => {
            let eq: Vec<Vec<FuzzyNumber>> = equilibria
                .iter()
                .map(|e| e.iter().map(|&x| FuzzyNumber::crisp_on(x, s.levels())).collect())
                .collect();
            let p = *power;
            let rep = certify::lasalle_check(&tr, |x| solver::state_norm(x).powf(p), &eq, *tol)?;
            report.certificate = CertificateBlock {
                kind: "LaSalle".into(),
                constants: vec![
                    ("power".into(), p),
                    ("v_limit".into(), rep.v_limit),
                    ("terminal_distance".into(), rep.terminal_distance),
                ],
                flags: Vec::new(),
            };
            report
                .verification
                .push(Check::value("max upward jump of V", rep.max_jump, *tol, "<=", rep.pass));
            report.verification.push(Check::value(
                "terminal distance to equilibria",
                rep.terminal_distance,
                *max_distance,
                "<=",
                rep.terminal_distance <= *max_distance,
            ));
        }
    }
    report.pass = report.verification.iter().all(|c| c.pass || c.informational);
    report.trajectory = Some(tr);
    Ok(report)
}

/// Check an externally produced norm series against the envelope of `cfg`'s
/// certificate. Rows with t < 0 are treated as delay history.
pub fn verify_norms(cfg: &RunConfig, times: &[f64], norms: &[f64]) -> Result<EnvelopeReport> {
    if times.len() != norms.len() {
        return Err(Error::arg("trajectory", "times and norms differ in length"));
    }
    let o = times.iter().position(|&t| t >= 0.0).ok_or_else(|| Error::arg("trajectory", "no node with t >= 0"))?;
    let s = &cfg.scenario;
    let (ts, ns) = (&times[o..], &norms[o..]);
    let u0_norm = ns[0];
    let env = match &cfg.certificate {
        CertificateRequest::Lmi { p } => {
            let System::Linear(a) = &s.system else {
                return Err(Error::arg("certificate", "lmi needs a linear system (matrix)"));
            };
            let cert = match p {
                None => certify::lmi_certificate(a)?,
                Some(rows) => certify::lmi_certificate_with(a, &matrix(rows)?)?,
            };
            cert.envelope(s.q, u0_norm)?
        }
        CertificateRequest::Iss {
            c1,
            c2,
            c3,
            c4,
            a,
            allow_sub_one,
        } => {
            let lc = LyapConstants::new(*c1, *c2, *c3, *c4, *a)?;
            let sup = disturbance_sup(s, ts)?;
            certify::iss_envelope(&lc, s.q, u0_norm, sup[sup.len() - 1], *allow_sub_one)?
                .with_running_sup(lc.gain(), ts.to_vec(), sup)?
        }
        CertificateRequest::Ultimate {
            alpha, beta, c1, c2, a, ..
        } => {
            let sup = disturbance_sup(s, ts)?;
            certify::ultimate_envelope(*alpha, *beta, *c1, *c2, *a, s.q, u0_norm, sup[sup.len() - 1])?
        }
        CertificateRequest::Delay {
            c1,
            c2,
            alpha,
            a,
            allow_sub_one,
        } => {
            let phi_sup = norms[..=o].iter().copied().fold(0.0, f64::max);
            certify::delay_envelope(*c1, *c2, *alpha, *a, s.q, phi_sup, *allow_sub_one)?
        }
        other => {
            return Err(Error::arg(
                "certificate",
                format!("`{}` cannot be checked from a norm series; use `run`", other.name()),
            ))
        }
    };
    verify_series(ts, ns, None, &env, cfg.verify)
}

fn component_norm(tr: &FuzzyTrajectory, node: usize, c: usize) -> f64 {
    (0..tr.levels().len())
        .map(|l| tr.lower(node, c, l).abs().max(tr.upper(node, c, l).abs()))
        .fold(0.0, f64::max)
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::arg("matrix", "rows must be non-empty and equally long"));
    }
    Ok(DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
}

/// Parameter grid: axis names are `q`, `step`, `horizon`, `sigma`, `seed`,
/// `rtol`, `atol` or `params.<name>`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub axes: Vec<(String, Vec<f64>)>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|(_, v)| v.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major combination `index` (last axis fastest).
    fn assignment(&self, mut index: usize) -> Vec<(String, f64)> {
        let mut out = vec![(String::new(), 0.0); self.axes.len()];
        for (k, (name, vals)) in self.axes.iter().enumerate().rev() {
            out[k] = (name.clone(), vals[index % vals.len()]);
            index /= vals.len();
        }
        out
    }
}

fn apply(cfg: &mut RunConfig, name: &str, v: f64) -> Result<()> {
    let s = &mut cfg.scenario;
    match name {
        "q" => s.q = v,
        "step" => s.step = v,
        "horizon" => s.horizon = v,
        "rtol" => cfg.verify.rtol = v,
        "atol" => cfg.verify.atol = v,
        "sigma" | "seed" => {
            let n = s
                .noise
                .as_mut()
                .ok_or_else(|| Error::Config(format!("sweep axis `{name}` needs a noise section")))?;
            if name == "sigma" {
                n.sigma = v;
            } else {
                n.seed = v as u64;
            }
        }
        _ => match name.strip_prefix("params.") {
            Some(p) if s.params.contains_key(p) => {
                s.params.insert(p.to_string(), v);
            }
            _ => return Err(Error::Config(format!("unknown sweep axis `{name}`"))),
        },
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RowStatus {
    Pass,
    Fail,
    Error { kind: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub assignment: Vec<(String, f64)>,
    pub status: RowStatus,
    pub exit_code: i32,
    pub max_excess: Option<f64>,
    pub rhs_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// None when the grid is empty.
    pub pass_rate: Option<f64>,
}

impl SweepReport {
    pub fn exit_code(&self) -> i32 {
        self.rows.iter().map(|r| r.exit_code).max().unwrap_or(0)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sweep rows = {}", self.rows.len());
        for r in &self.rows {
            let a: Vec<String> = r.assignment.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect();
            let status = match &r.status {
                RowStatus::Pass => "PASS".to_string(),
                RowStatus::Fail => "FAIL".to_string(),
                RowStatus::Error { kind, message } => format!("ERROR {kind}: {message}"),
            };
            let _ = writeln!(s, "  [{}] {} -> {status}", r.index, a.join(" "));
        }
        let _ = writeln!(
            s,
            "pass_rate = {}",
            self.pass_rate.map_or("n/a".to_string(), fmt_num)
        );
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["index".to_string()];
        if let Some(r) = self.rows.first() {
            header.extend(r.assignment.iter().map(|(k, _)| k.clone()));
        }
        header.extend(["status", "exit_code", "max_excess", "rhs_evals"].map(String::from));
        w.write_record(&header).map_err(err)?;
        for r in &self.rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.assignment.iter().map(|(_, v)| fmt_num(*v)));
            rec.push(match &r.status {
                RowStatus::Pass => "pass".into(),
                RowStatus::Fail => "fail".into(),
                RowStatus::Error { kind, .. } => format!("error:{kind}"),
            });
            rec.push(r.exit_code.to_string());
            rec.push(r.max_excess.map_or(String::new(), fmt_num));
            rec.push(r.rhs_evals.to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

/// Run every grid combination on a pool of `workers` threads; rows come
/// back in grid order and failures stay in their row.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, workers: usize) -> Result<SweepReport> {
    let n = grid.len();
    if n > MAX_SWEEP_ROWS {
        return Err(Error::Config(format!("sweep grid has {n} combinations (limit {MAX_SWEEP_ROWS})")));
    }
    // reject unknown axes before running anything
    if n > 0 {
        let mut probe = base.clone();
        for (name, v) in grid.assignment(0) {
            apply(&mut probe, &name, v)?;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|index| {
                let assignment = grid.assignment(index);
                let mut cfg = base.clone();
                let outcome = assignment
                    .iter()
                    .try_for_each(|(k, v)| apply(&mut cfg, k, *v))
                    .and_then(|_| run_scenario(&cfg));
                match outcome {
                    Ok(rep) => SweepRow {
                        index,
                        assignment,
                        status: if rep.pass { RowStatus::Pass } else { RowStatus::Fail },
                        exit_code: rep.exit_code(),
                        max_excess: rep
                            .verification
                            .iter()
                            .filter(|c| !c.informational)
                            .filter_map(|c| c.envelope.as_ref().map(|e| e.max_excess))
                            .reduce(f64::max),
                        rhs_evals: rep.timing.rhs_evals,
                    },
                    Err(e) => SweepRow {
                        index,
                        assignment,
                        status: RowStatus::Error {
                            kind: error_kind(&e),
                            message: e.to_string(),
                        },
                        exit_code: e.exit_code(),
                        max_excess: None,
                        rhs_evals: 0,
                    },
                }
            })
            .collect()
    });
    let pass_rate = (n > 0).then(|| rows.iter().filter(|r| r.status == RowStatus::Pass).count() as f64 / n as f64);
    Ok(SweepReport { rows, pass_rate })
}
