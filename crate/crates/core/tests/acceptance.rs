//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracstab::certify::{self, CONVERSE_DECREMENT_TOL};
use fracstab::config::{self, ConfigFile, Overrides};
use fracstab::fuzzy::{uniform_levels, FuzzyNumber};
use fracstab::harness::{run_scenario, CertificateRequest, RunConfig, RunReport, VerifyOptions};
use fracstab::mlf::{ml_conv_integral, ml_one, ml_two};
use fracstab::quad;
use fracstab::solver::{self, exact_linear, Delay, FuzzyTrajectory, Scenario};
use fracstab::{expr, Error};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn demo(name: &str) -> RunConfig {
    config::demo(name).unwrap().build(&Overrides::default()).unwrap()
}

fn gate(rep: &RunReport) -> String {
    rep.verification
        .iter()
        .filter(|c| !c.informational)
        .map(|c| format!("{}={}", c.name, if c.pass { "ok" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join(", ")
}

fn max_excess(rep: &RunReport) -> f64 {
    rep.verification
        .iter()
        .filter_map(|c| c.envelope.as_ref().map(|e| e.max_excess))
        .fold(f64::NEG_INFINITY, f64::max)
}

// E_{1/2}(-x) = exp(x^2) erfc(x); E_{q,b}(z) = 1/Γ(b) + z E_{q,b+q}(z).
fn c1_ml_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: f64 = rng.gen_range(0.0..10.0);
        let want = (x * x).exp() * libm::erfc(x);
        let got = ml_one(0.5, -x).map_err(|e| e.to_string())?;
        worst = worst.max(((got - want) / want).abs());
    }
    for _ in 0..100 {
        let q: f64 = rng.gen_range(0.1..1.0);
        let b: f64 = rng.gen_range(0.5..2.0);
        let z: f64 = -rng.gen_range(0.0..20.0);
        let e0 = ml_two(q, b, z).map_err(|e| e.to_string())?;
        let e1 = ml_two(q, b + q, z).map_err(|e| e.to_string())?;
        let rg = 1.0 / libm::tgamma(b);
        let scale = e0.abs().max((z * e1).abs()).max(rg.abs());
        worst = worst.max((e0 - rg - z * e1).abs() / scale);
    }
    check(worst <= 1e-8, format!("200 points, worst relative error {worst:.2e} (tol 1e-8)"))
}

fn c2_convolution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let q: f64 = rng.gen_range(0.2..1.0);
        let kappa: f64 = rng.gen_range(0.1..5.0);
        let t: f64 = rng.gen_range(0.1..10.0);
        // ∫_0^t s^{q-1} E_{q,q}(-κ s^q) ds, substituting r = s^q
        let f = |r: f64| ml_two(q, q, -kappa * r).unwrap() / q;
        let quad = quad::tanh_sinh(f, 0.0, t.powf(q), 1e-12).value;
        let closed = ml_conv_integral(q, kappa, t).map_err(|e| e.to_string())?;
        let alt = (1.0 - ml_one(q, -kappa * t.powf(q)).unwrap()) / kappa;
        worst = worst.max(((quad - closed) / closed).abs()).max(((alt - closed) / closed).abs());
    }
    check(worst <= 1e-6, format!("20 draws, worst relative gap {worst:.2e} (tol 1e-6)"))
}

fn max_gap(a: &FuzzyTrajectory, b: &FuzzyTrajectory) -> f64 {
    let mut m = 0.0f64;
    for n in 0..a.len() {
        for c in 0..a.dim() {
            for l in 0..a.levels().len() {
                m = m.max((a.lower(n, c, l) - b.lower(n, c, l)).abs());
                m = m.max((a.upper(n, c, l) - b.upper(n, c, l)).abs());
            }
        }
    }
    m
}

fn c3_order() -> Outcome {
    let a = DMatrix::from_element(1, 1, -1.0);
    let u0 = vec![FuzzyNumber::triangular(0.5, 1.0, 1.5).unwrap()];
    let mut parts = Vec::new();
    let mut ok = true;
    for q in [0.3, 0.5, 0.8] {
        let mut pts = Vec::new();
        for k in 7..=10 {
            let h = 2f64.powi(-k);
            let tr = solver::solve(&Scenario::linear(q, a.clone(), u0.clone(), 1.0, h)).map_err(|e| e.to_string())?;
            let ex = exact_linear(&a, &u0, q, &tr.times).map_err(|e| e.to_string())?;
            pts.push((h.log2(), max_gap(&tr, &ex).log2()));
        }
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let need = 1.0 + q - 0.2;
        ok &= slope >= need;
        parts.push(format!("q={q}: {slope:.3} (need {need:.1})"));
    }
    check(ok, format!("fitted orders {}", parts.join("; ")))
}

fn hurwitz_metzler(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    // nonnegative off-diagonal keeps the endpoint systems decoupled;
    // strict diagonal dominance makes it Hurwitz
    let mut a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.0..1.0) });
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -off - rng.gen_range(0.2..2.0);
    }
    a
}

fn c4_lmi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    let mut fails = 0;
    for i in 0..10 {
        let n = if i < 5 { 2 } else { 3 };
        let a = hurwitz_metzler(&mut rng, n);
        let q = rng.gen_range(0.4..1.0);
        let u0 = (0..n)
            .map(|_| {
                let m: f64 = rng.gen_range(-1.5..1.5);
                let w: f64 = rng.gen_range(0.05..0.8);
                FuzzyNumber::triangular_on(m - w, m, m + rng.gen_range(0.05..0.8), &uniform_levels(10))
            })
            .collect::<fracstab::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let run = RunConfig {
            name: format!("lmi-{i}"),
            scenario: Scenario::linear(q, a, u0, 10.0, 0.01),
            certificate: CertificateRequest::Lmi { p: None },
            verify: VerifyOptions::default(),
            workers: 1,
        };
        let rep = run_scenario(&run).map_err(|e| e.to_string())?;
        worst = worst.max(max_excess(&rep));
        fails += usize::from(!rep.pass);
    }
    let bad = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, -1.0]);
    let control = certify::lmi_certificate(&bad);
    let ctl_ok = matches!(control, Err(Error::NotHurwitz { .. }));
    check(
        fails == 0 && ctl_ok,
        format!(
            "10 systems, {fails} failed, worst excess {worst:.4}; unstable control -> {}",
            match control {
                Err(e) => e.to_string(),
                Ok(_) => "certificate issued".into(),
            }
        ),
    )
}

fn c5_iss() -> Outcome {
    let run = demo("iss");
    let rep = run_scenario(&run).map_err(|e| e.to_string())?;
    let mut tight = run.clone();
    tight.certificate = CertificateRequest::Iss {
        c1: 1.0,
        c2: 1.0,
        c3: 2.0,
        c4: 1.0,
        a: 1.0,
        allow_sub_one: false,
    };
    let neg = run_scenario(&tight).map_err(|e| e.to_string())?;
    check(
        rep.pass && !neg.pass,
        format!(
            "demo {} (excess {:.4}); doubled rate {} (excess {:.4})",
            if rep.pass { "passes" } else { "fails" },
            max_excess(&rep),
            if neg.pass { "passes" } else { "fails" },
            max_excess(&neg)
        ),
    )
}

fn c6_ultimate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut parts = Vec::new();
    let mut ok = true;
    for i in 0..5 {
        let q: f64 = rng.gen_range(0.8..=1.0);
        let lam: f64 = rng.gen_range(1.0..2.0);
        let g: f64 = rng.gen_range(0.2..1.0);
        let text = format!(
            "[scenario]\nname = \"ultimate-{i}\"\nq = {q:?}\nhorizon = 50.0\nstep = 0.05\n\
             rhs = \"-lam*u\"\nparams = {{ lam = {lam:?} }}\ndisturbance = [\"{g:?}\"]\n\
             initial = [{{ triangular = [0.0, 0.1, 0.2] }}]\n\n\
             [certificate]\nkind = \"ultimate\"\nalpha = {lam:?}\nbeta = 1.0\na = 1.0\n"
        );
        let run = ConfigFile::parse(&text, "ultimate-draw")
            .and_then(|c| c.build(&Overrides::default()))
            .map_err(|e| e.to_string())?;
        let rep = run_scenario(&run).map_err(|e| e.to_string())?;
        let bound = certify::ultimate_bound(lam, 1.0, 1.0, g).map_err(|e| e.to_string())?;
        let term = rep.summary.terminal_norm;
        let good = term <= bound * 1.05 && rep.pass;
        ok &= good;
        parts.push(format!("{term:.4}/{bound:.4}"));
    }
    check(ok, format!("terminal/bound over 5 draws: {}", parts.join(", ")))
}

fn c7_delay() -> Outcome {
    let run = demo("delay");
    let rep = run_scenario(&run).map_err(|e| e.to_string())?;
    let q_ok = run.scenario.q == 0.7 && run.scenario.delay.as_ref().is_some_and(|d| d.tau == 0.5);

    let u0 = FuzzyNumber::triangular(0.5, 1.0, 1.5).unwrap();
    let plain = Scenario::scalar(0.7, expr::parse("-2*u + 0.3*sin(t)", &[]).unwrap(), u0, 5.0, 0.01);
    let mut delayed = plain.clone();
    delayed.delay = Some(Delay {
        tau: 0.5,
        history: expr::parse("u", &[]).unwrap(),
    });
    let a = solver::solve(&plain).map_err(|e| e.to_string())?;
    let b = solver::solve(&delayed).map_err(|e| e.to_string())?;
    let o = b.origin();
    let mut identical = a.len() == b.len() - o;
    for n in 0..a.len().min(b.len() - o) {
        for l in 0..a.levels().len() {
            identical &= a.lower(n, 0, l).to_bits() == b.lower(n + o, 0, l).to_bits();
            identical &= a.upper(n, 0, l).to_bits() == b.upper(n + o, 0, l).to_bits();
        }
        identical &= a.norm[n].to_bits() == b.norm[n + o].to_bits();
    }
    check(
        rep.pass && q_ok && identical,
        format!(
            "delay envelope {} (excess {:.4}); degenerate delay {}",
            if rep.pass { "holds" } else { "violated" },
            max_excess(&rep),
            if identical { "bit-identical" } else { "differs" }
        ),
    )
}

fn c8_small_gain() -> Outcome {
    let run = demo("small_gain");
    let rep = run_scenario(&run).map_err(|e| e.to_string())?;
    let horizon_ok = run.scenario.horizon >= 20.0;
    let boundary = certify::small_gain(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.8);
    let ctl = matches!(boundary, Err(Error::GainTooLarge(_)));
    check(
        rep.pass && horizon_ok && ctl,
        format!("{}; gamma12*gamma21 = 1 -> {}", gate(&rep), if ctl { "GainTooLarge" } else { "accepted" }),
    )
}

fn c9_stochastic() -> Outcome {
    let run = demo("stochastic");
    let noise = run.scenario.noise.as_ref().ok_or("demo has no noise")?;
    let setup = noise.paths == 2000 && noise.sigma == 0.1;
    let rep = run_scenario(&run).map_err(|e| e.to_string())?;
    check(
        rep.pass && setup,
        format!("{} paths, seed {}: {} (excess {:.4})", noise.paths, noise.seed, gate(&rep), max_excess(&rep)),
    )
}

fn c10_converse() -> Outcome {
    let run = demo("converse");
    let rep = run_scenario(&run).map_err(|e| e.to_string())?;
    let s = &run.scenario;
    let samples: Vec<FuzzyNumber> = [0.5, 1.0, 1.5, 2.0, 4.0]
        .iter()
        .map(|&x| FuzzyNumber::crisp_on(x, s.levels()))
        .collect();
    let cv = certify::converse_lyapunov(s, &samples, 20.0, 2.0).map_err(|e| e.to_string())?;
    let within = cv
        .samples
        .iter()
        .filter_map(|x| x.ratio)
        .all(|r| r >= cv.c1 * (1.0 - 1e-12) && r <= cv.c2 * (1.0 + 1e-12));
    // V(1) = ∫_0^20 E_q(-s^q)^2 ds for u' = -u; the trapezoid on the h = 0.05
    // grid misses the cusp at 0 by a few 1e-3
    let q = s.q;
    let oracle = quad::tanh_sinh(|x| ml_one(q, -x.powf(q)).unwrap().powi(2), 0.0, 20.0, 1e-10).value;
    let v1 = cv.samples[1].v;
    let rel = ((v1 - oracle) / oracle).abs();
    let ratio = cv.c2 / cv.c1;
    check(
        rep.pass && ratio <= 1.1 && cv.decreasing && within && rel < 1e-2,
        format!(
            "c2/c1 = {ratio:.6}, nonincreasing within {CONVERSE_DECREMENT_TOL:e}: {}, V(1) vs quadrature {rel:.1e}",
            cv.decreasing
        ),
    )
}

fn c11_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_fracstab");
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut dirs = Vec::new();
    for (tag, w) in [("a", "4"), ("b", "4"), ("c", "1")] {
        let dir = root.path().join(tag);
        let out = Command::new(exe)
            .args(["demo", "all", "--workers", w, "--out"])
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.code() != Some(0) {
            return Err(format!("demo all exited with {:?}", out.status.code()));
        }
        dirs.push(dir);
    }
    let mut compared = 0;
    for name in config::demo_names() {
        for f in ["report.txt", "report.json"] {
            let base = fs::read(dirs[0].join(name).join(f)).map_err(|e| e.to_string())?;
            for d in &dirs[1..] {
                let other = fs::read(d.join(name).join(f)).map_err(|e| e.to_string())?;
                if other != base {
                    return Err(format!("{name}/{f} differs between runs"));
                }
                compared += 1;
            }
        }
    }
    check(true, format!("{compared} report pairs byte-identical (workers 4, 4, 1)"))
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "ML function accuracy", c1_ml_accuracy, Duration::from_secs(5)),
        (2, "convolution identity", c2_convolution, Duration::from_secs(10)),
        (3, "solver order", c3_order, Duration::from_secs(30)),
        (4, "LMI envelope", c4_lmi, Duration::from_secs(60)),
        (5, "ML-ISS envelope", c5_iss, Duration::from_secs(20)),
        (6, "ultimate bound", c6_ultimate, Duration::from_secs(30)),
        (7, "delay envelope", c7_delay, Duration::from_secs(30)),
        (8, "small-gain", c8_small_gain, Duration::from_secs(30)),
        (9, "stochastic mean-square", c9_stochastic, Duration::from_secs(120)),
        (10, "converse Lyapunov", c10_converse, Duration::from_secs(60)),
        (11, "determinism", c11_determinism, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (id, name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let el = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if el <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{:.2} s / {} s]",
            if pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {}/11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
