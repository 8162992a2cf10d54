use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use fracstab::certify::{self, LyapConstants};
use fracstab::config::{self, ConfigFile, Overrides};
use fracstab::harness::{self, RunConfig, RunReport};
use fracstab::mlf;
use fracstab::solver;
use fracstab::{Error, Result};

#[derive(Parser)]
#[command(name = "fracstab", version, about = "Fuzzy Caputo fractional systems: simulation and Mittag-Leffler stability certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mittag-Leffler function utilities.
    Mlf {
        #[command(subcommand)]
        cmd: MlfCmd,
    },
    /// Integrate a scenario and write its trajectory.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the constants of one certificate.
    Certify {
        #[command(subcommand)]
        cmd: CertifyCmd,
    },
    /// Check a trajectory CSV against the certificate of a config.
    Verify {
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate, certify and verify.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the config's parameter grid.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in golden scenarios; `all` runs every one.
    Demo {
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum MlfCmd {
    /// E_{q,b}(z) to 12 significant digits.
    Eval {
        #[arg(long)]
        q: f64,
        #[arg(long = "beta", alias = "b", default_value_t = 1.0)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
    },
    /// t^q E_{q,q+1}(−κ t^q).
    Conv {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Subcommand)]
enum CertifyCmd {
    /// LMI certificate for x' = A x; rows separated by `;`, entries by `,`.
    Lmi {
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
    },
    Iss {
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        c3: f64,
        #[arg(long)]
        c4: f64,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        #[arg(long, default_value_t = 0.0)]
        g: f64,
        #[arg(long)]
        allow_sub_one: bool,
    },
    Ultimate {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        g: f64,
    },
    Delay {
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        #[arg(long)]
        allow_sub_one: bool,
    },
    SmallGain {
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long)]
        kappa1: f64,
        #[arg(long)]
        kappa2: f64,
        #[arg(long)]
        gamma12: f64,
        #[arg(long)]
        gamma21: f64,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
    },
    Stochastic {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        w0: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Subintervals of the uniform α grid.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Derivative order.
    #[arg(long)]
    q: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            q: self.q,
            seed: self.seed,
            rtol: self.rtol,
            atol: self.atol,
            levels: self.levels,
            step: self.step,
            horizon: self.horizon,
            workers: self.workers,
        }
    }

    fn out_dir(&self, cfg: &ConfigFile, fallback: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output_dir().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(fallback))
    }
}

/// Twelve significant digits, plain notation where reasonable.
fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = 11 - mag;
    if (0..=20).contains(&decimals) {
        format!("{v:.*}", decimals as usize)
    } else {
        format!("{v:.11e}")
    }
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    let p = dir.join(name);
    fs::File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn write_run(dir: &Path, rep: &RunReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    fs::write(dir.join("report.txt"), rep.render_text())?;
    fs::write(dir.join("report.json"), rep.to_json()? + "\n")?;
    if let Some(tr) = &rep.trajectory {
        tr.write_csv(create(dir, "trajectory.csv")?)?;
    }
    if let Some(m) = &rep.moment {
        m.write_csv(create(dir, "moment.csv")?)?;
    }
    if rep.series.is_some() {
        rep.write_envelope_csv(create(dir, "envelope.csv")?)?;
    }
    Ok(())
}

fn run_one(run: &RunConfig, dir: &Path) -> Result<i32> {
    let start = Instant::now();
    let rep = harness::run_scenario(run)?;
    write_run(dir, &rep)?;
    print!("{}", rep.render_text());
    eprintln!("{}: wall time {:.3} s, outputs in {}", run.name, start.elapsed().as_secs_f64(), dir.display());
    Ok(rep.exit_code())
}

fn bad_matrix(reason: String) -> Error {
    Error::InvalidArgument { name: "matrix", reason }
}

fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| {
            r.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| bad_matrix(format!("bad entry `{}`", x.trim())))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(bad_matrix("must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn print_pairs(pairs: &[(&str, f64)]) {
    for (k, v) in pairs {
        println!("{k} = {v:?}");
    }
}

fn certify_cmd(cmd: CertifyCmd) -> Result<i32> {
    match cmd {
        CertifyCmd::Lmi { matrix } => {
            let a = parse_matrix(&matrix)?;
            let c = certify::lmi_certificate(&a)?;
            println!("kind = LMI");
            for i in 0..c.p.nrows() {
                let row: Vec<String> = c.p.row(i).iter().map(|x| format!("{x:?}")).collect();
                println!("P[{i}] = [{}]", row.join(", "));
            }
            print_pairs(&[
                ("mu", c.mu),
                ("M", c.m),
                ("lambda", c.lambda),
                ("a", c.a),
                ("eig_min(P)", c.eig_min),
                ("eig_max(P)", c.eig_max),
                ("lmi_residual", c.residual),
            ]);
        }
        CertifyCmd::Iss {
            c1,
            c2,
            c3,
            c4,
            a,
            q,
            u0,
            g,
            allow_sub_one,
        } => {
            let lc = LyapConstants::new(c1, c2, c3, c4, a)?;
            let env = certify::iss_envelope(&lc, q, u0, g, allow_sub_one)?;
            println!("kind = ISS");
            print_pairs(&[
                ("kappa", lc.kappa()),
                ("M", env.m),
                ("C", lc.gain()),
                ("offset", env.offset),
                ("factor", env.factor),
            ]);
            for f in &env.flags {
                println!("flag: {f}");
            }
        }
        CertifyCmd::Ultimate { alpha, beta, a, g } => {
            println!("kind = Ultimate");
            print_pairs(&[("bound", certify::ultimate_bound(alpha, beta, a, g)?)]);
        }
        CertifyCmd::Delay {
            c1,
            c2,
            alpha,
            a,
            q,
            phi,
            allow_sub_one,
        } => {
            let env = certify::delay_envelope(c1, c2, alpha, a, q, phi, allow_sub_one)?;
            println!("kind = Delay");
            print_pairs(&[("M", env.m), ("lambda", env.lambda), ("baseline", env.baseline)]);
            for f in &env.flags {
                println!("flag: {f}");
            }
        }
        CertifyCmd::SmallGain {
            m1,
            m2,
            kappa1,
            kappa2,
            gamma12,
            gamma21,
            x0,
            y0,
            q,
        } => {
            let c = certify::small_gain(m1, m2, kappa1, kappa2, gamma12, gamma21, x0, y0, q)?;
            println!("kind = SmallGain");
            print_pairs(&[
                ("X_bound", c.x_bound),
                ("Y_bound", c.y_bound),
                ("M", c.envelope.m),
                ("lambda", c.envelope.lambda),
            ]);
            for f in c.flags.iter().chain(&c.envelope.flags) {
                println!("flag: {f}");
            }
        }
        CertifyCmd::Stochastic {
            alpha,
            beta,
            c1,
            c2,
            a,
            w0,
            q,
            t,
        } => {
            println!("kind = Stochastic");
            print_pairs(&[
                ("kappa", alpha / c2),
                ("bound", certify::stochastic_bound(alpha, beta, c1, c2, a, w0, q, t)?),
                ("limit", beta / (c1 * alpha / c2)),
            ]);
        }
    }
    Ok(0)
}

/// `t` and `norm` columns of a trajectory CSV.
fn read_norms(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let headers = r.headers().map_err(bad)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: no `{name}` column", path.display())))
    };
    let (ti, ni) = (col("t")?, col("norm")?);
    let (mut t, mut n) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(bad)?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}:{}: bad number `{}`", path.display(), line + 2, &rec[i])))
        };
        t.push(num(ti)?);
        n.push(num(ni)?);
    }
    Ok((t, n))
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Mlf { cmd } => {
            let v = match cmd {
                MlfCmd::Eval { q, beta, z } => mlf::ml_two(q, beta, z)?,
                MlfCmd::Conv { q, kappa, t } => mlf::ml_conv_integral(q, kappa, t)?,
            };
            println!("{}", sig12(v));
            Ok(0)
        }
        Cmd::Certify { cmd } => certify_cmd(cmd),
        Cmd::Simulate { config, common } => {
            let file = ConfigFile::load(&config)?;
            let run = file.build(&common.overrides())?;
            let dir = common.out_dir(&file, "out");
            fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            if run.scenario.noise.is_some() {
                let a = match run.certificate {
                    harness::CertificateRequest::Stochastic { a, .. } => a,
                    _ => 2.0,
                };
                let m = solver::solve_stochastic(&run.scenario, a, run.workers)?;
                m.write_csv(create(&dir, "moment.csv")?)?;
                println!("nodes = {}, paths = {}, terminal moment = {:?}", m.times.len(), m.paths, m.moment[m.moment.len() - 1]);
            } else {
                let tr = solver::solve(&run.scenario)?;
                tr.write_csv(create(&dir, "trajectory.csv")?)?;
                for w in &tr.warnings {
                    eprintln!("warning: {w}");
                }
                println!("nodes = {}, terminal norm = {:?}", tr.len(), tr.norm[tr.len() - 1]);
            }
            Ok(0)
        }
        Cmd::Verify {
            config,
            trajectory,
            common,
        } => {
            let file = ConfigFile::load(&config)?;
            let run = file.build(&common.overrides())?;
            let (t, n) = read_norms(&trajectory)?;
            let rep = harness::verify_norms(&run, &t, &n)?;
            println!(
                "verification: {} (points {}, violations {}, max excess {:?}, first violation {})",
                if rep.pass { "PASS" } else { "FAIL" },
                rep.n_points,
                rep.violations,
                rep.max_excess,
                rep.first_violation_t.map_or("none".to_string(), |t| format!("{t:?}"))
            );
            Ok(if rep.pass { 0 } else { 1 })
        }
        Cmd::Run { config, common } => {
            let file = ConfigFile::load(&config)?;
            let run = file.build(&common.overrides())?;
            let dir = common.out_dir(&file, "out");
            run_one(&run, &dir)
        }
        Cmd::Sweep { config, common } => {
            let file = ConfigFile::load(&config)?;
            let run = file.build(&common.overrides())?;
            let dir = common.out_dir(&file, "out");
            let start = Instant::now();
            let rep = harness::sweep(&run, &file.sweep_grid(), run.workers)?;
            fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            fs::write(dir.join("sweep.txt"), rep.render_text())?;
            rep.write_csv(create(&dir, "sweep.csv")?)?;
            print!("{}", rep.render_text());
            eprintln!("sweep: wall time {:.3} s", start.elapsed().as_secs_f64());
            Ok(rep.exit_code())
        }
        Cmd::Demo { name, common } => {
            let names: Vec<String> = match name.as_deref() {
                None => {
                    for n in config::demo_names() {
                        println!("{n}");
                    }
                    return Ok(0);
                }
                Some("all") => config::demo_names().into_iter().map(String::from).collect(),
                Some(n) => vec![n.to_string()],
            };
            let base = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let mut code = 0;
            for n in &names {
                let file = config::demo(n)?;
                let run = file.build(&common.overrides())?;
                let dir = if names.len() == 1 { base.clone() } else { base.join(n) };
                code = code.max(run_one(&run, &dir)?);
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
