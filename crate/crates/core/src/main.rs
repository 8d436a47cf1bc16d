use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sbm_potential::cbf::{estimate_default_profile, log_grid, CompleteBernsteinFunction};
use sbm_potential::geometry::{certificate, verify_fatness, OpenSetSpec};
use sbm_potential::harness::{run_experiment, Control, ExperimentConfig, ExperimentId, ExperimentReport};
use sbm_potential::kernels::{build_kernel_table, verify_jg_estimates, FreeGreen};
use sbm_potential::montecarlo::{batch_estimate, simulate_batch, write_exit_csv, PathConfig, Process};
use sbm_potential::potential::estimate_martin_limit;
use sbm_potential::report::Verdict;
use sbm_potential::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "sbm-potential",
    version,
    about = "Kernels, exit simulation and boundary-Harnack experiments for subordinate Brownian motions",
    arg_required_else_help = true
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Laplace exponent id, e.g. `stable:alpha=1.0` or `mix:0.5,1.0+1.5,1.0`.
    #[arg(long, global = true)]
    phi: Option<CompleteBernsteinFunction>,
    /// Open set spec, e.g. `halfspace`, `extball:r=1`, `cone:aperture=0.5`.
    #[arg(long, global = true)]
    domain: Option<OpenSetSpec>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo paths per estimate.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Step-size parameter of the walk.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Dimension.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Output directory; reports go to stdout when unset.
    #[arg(long, global = true, env = "SBM_POTENTIAL_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate φ(r⁻²), j(r) and g(r) on a log grid.
    Kernels {
        #[arg(long, default_value_t = 1e-2)]
        lo: f64,
        #[arg(long, default_value_t = 1e2)]
        hi: f64,
        #[arg(long, default_value_t = 16)]
        per_decade: usize,
    },
    /// Fitted scaling exponents of φ and the j/g comparability scans.
    Scaling {
        #[arg(long, default_value_t = 1e-3)]
        lo: f64,
        #[arg(long, default_value_t = 1e3)]
        hi: f64,
        #[arg(long, default_value_t = 8)]
        per_decade: usize,
    },
    /// Check the fatness certificate of the domain on `[R, 10⁶R]`.
    Fatness {
        #[arg(long, default_value_t = 8)]
        per_decade: usize,
    },
    /// Simulate exits from the domain started at `--x`.
    Exit {
        /// Start point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Run a named experiment, or `all`.
    Verify {
        #[arg(value_parser = parse_targets)]
        experiment: Targets,
        #[arg(long, value_enum)]
        control: Option<ControlArg>,
        /// Skip the θ/2 rerun (verdicts become inconclusive).
        #[arg(long)]
        no_refine: bool,
    },
    /// Martin kernel along a dyadic ray and its limit at infinity.
    Martin {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        /// Ray direction; the certificate witness direction when unset.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        last_shell: u32,
    },
}

/// Experiment ids named on the command line; `all` expands to every one.
#[derive(Clone, Debug)]
struct Targets(Vec<ExperimentId>);

fn parse_targets(s: &str) -> std::result::Result<Targets, String> {
    if s == "all" {
        return Ok(Targets(ExperimentId::ALL.to_vec()));
    }
    s.parse::<ExperimentId>()
        .map(|id| Targets(vec![id]))
        .map_err(|e| e.to_string())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ControlArg {
    None,
    Negative,
    SameFunctions,
    Constant,
    Profile,
}

impl From<ControlArg> for Control {
    fn from(c: ControlArg) -> Self {
        match c {
            ControlArg::None => Control::None,
            ControlArg::Negative => Control::Negative,
            ControlArg::SameFunctions => Control::SameFunctions,
            ControlArg::Constant => Control::Constant,
            ControlArg::Profile => Control::Profile,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(verdicts) if verdicts.iter().any(Verdict::is_violated) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

impl Common {
    fn phi(&self) -> CompleteBernsteinFunction {
        self.phi
            .clone()
            .unwrap_or_else(|| CompleteBernsteinFunction::stable(1.0).expect("valid index"))
    }

    fn d(&self) -> usize {
        self.d.unwrap_or(3)
    }

    fn path(&self, base: PathConfig) -> PathConfig {
        PathConfig {
            seed: self.seed.unwrap_or(base.seed),
            samples: self.samples.unwrap_or(base.samples),
            theta: self.theta.unwrap_or(base.theta),
            ..base
        }
    }
}

/// Writes to `<out>/<name>.<ext>` or stdout.
fn emit(common: &Common, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let ext = match common.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{ext}"));
            let mut w = BufWriter::new(File::create(&path)?);
            write(&mut w)?;
            w.flush()?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn point(v: &[f64], d: usize, what: &str) -> Result<Vec<f64>> {
    if v.len() != d {
        return Err(Error::Domain(format!("{what} needs {d} coordinates, got {}", v.len())));
    }
    Ok(v.to_vec())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn run(cli: &Cli) -> Result<Vec<Verdict>> {
    let c = &cli.common;
    match &cli.command {
        Command::Kernels { lo, hi, per_decade } => {
            let table = build_kernel_table(&c.phi(), c.d(), &log_grid(*lo, *hi, *per_decade))?;
            emit(c, "kernels", |w| match c.format {
                Format::Csv => table.write_csv(w),
                Format::Json => json(w, &table),
            })?;
            Ok(vec![if table.flagged.is_empty() {
                Verdict::Bounded
            } else {
                Verdict::Inconclusive
            }])
        }
        Command::Scaling { lo, hi, per_decade } => {
            let phi = c.phi();
            let profile = estimate_default_profile(&phi)?;
            let [j, g] = verify_jg_estimates(&phi, c.d(), &log_grid(*lo, *hi, *per_decade))?;
            let verdicts = vec![j.verdict, g.verdict];
            emit(c, "scaling", |w| match c.format {
                Format::Csv => {
                    writeln!(w, "statistic,r,ratio")?;
                    for rep in [&j, &g] {
                        for (r, q) in rep.grid.iter().zip(&rep.ratios) {
                            writeln!(
                                w,
                                "{},{},{}",
                                rep.statistic,
                                sbm_potential::report::full(*r),
                                sbm_potential::report::full(*q)
                            )?;
                        }
                    }
                    Ok(())
                }
                Format::Json => json(
                    w,
                    &serde_json::json!({ "phi": phi.id(), "profile": profile, "comparability": [j, g] }),
                ),
            })?;
            Ok(verdicts)
        }
        Command::Fatness { per_decade } => {
            let d = c.d();
            let domains: Vec<OpenSetSpec> = match &c.domain {
                Some(dom) => vec![dom.clone()],
                None => [
                    "halfspace",
                    "extball:r=1",
                    "cone:aperture=0.5",
                    "slab:width=1",
                    "chain:base=4,start=1",
                ]
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?,
            };
            let mut reports = Vec::new();
            for dom in &domains {
                let cert = certificate(dom, d)?;
                let radii = log_grid(cert.big_r, 1e6 * cert.big_r, *per_decade);
                reports.push(verify_fatness(dom, &cert, &radii)?);
            }
            emit(c, "fatness", |w| match c.format {
                Format::Csv => {
                    writeln!(w, "domain,kappa,big_r,pass,violations")?;
                    for r in &reports {
                        writeln!(
                            w,
                            "{},{},{},{},{}",
                            r.domain,
                            r.kappa,
                            r.big_r,
                            r.pass,
                            r.violations.len()
                        )?;
                    }
                    Ok(())
                }
                Format::Json => json(w, &reports),
            })?;
            Ok(reports
                .iter()
                .map(|r| if r.pass { Verdict::Bounded } else { Verdict::Violated })
                .collect())
        }
        Command::Exit { x } => {
            let d = c.d();
            let dom = c.domain.clone().unwrap_or_else(|| OpenSetSpec::ball(1.0));
            let x = if x.is_empty() {
                vec![0.0; d]
            } else {
                point(x, d, "--x")?
            };
            let cfg = c.path(PathConfig::default());
            let process = Process::new(c.phi(), d)?;
            let batch = simulate_batch(&process, &dom, &x, &cfg)?;
            emit(c, "exit", |w| match c.format {
                Format::Csv => write_exit_csv(&batch, d, w),
                Format::Json => {
                    let hit = batch_estimate(&batch, |s| if s.exited() { 1.0 } else { 0.0 });
                    json(
                        w,
                        &serde_json::json!({ "phi": process.phi.id(), "domain": dom.to_string(), "start": x, "seed": cfg.seed, "theta": cfg.theta, "samples": cfg.samples, "exit_probability": hit }),
                    )
                }
            })?;
            Ok(vec![])
        }
        Command::Verify {
            experiment,
            control,
            no_refine,
        } => {
            let mut verdicts = Vec::new();
            for &id in &experiment.0 {
                let mut cfg = match &c.config {
                    Some(p) => {
                        let mut cfg = load_config(p)?;
                        cfg.experiment = id;
                        cfg
                    }
                    None => ExperimentConfig::new(id, c.phi()),
                };
                if let Some(phi) = &c.phi {
                    cfg.phi = phi.clone();
                }
                if let Some(dom) = &c.domain {
                    cfg.domain = dom.clone();
                }
                if let Some(d) = c.d {
                    cfg.d = d;
                }
                if let Some(k) = control {
                    cfg.control = (*k).into();
                }
                if *no_refine {
                    cfg.refine = false;
                }
                cfg.path = c.path(cfg.path);
                let report: ExperimentReport = run_experiment(&cfg)?;
                emit(c, id.name(), |w| match c.format {
                    Format::Csv => report.write_csv(w),
                    Format::Json => {
                        w.write_all(report.to_json()?.as_bytes())?;
                        writeln!(w)?;
                        Ok(())
                    }
                })?;
                eprintln!("{}: {:?}", id.name(), report.verdict);
                verdicts.push(report.verdict);
            }
            Ok(verdicts)
        }
        Command::Martin {
            x,
            x0,
            direction,
            last_shell,
        } => {
            let d = c.d();
            let dom = c.domain.clone().unwrap_or(OpenSetSpec::HalfSpace);
            let cert = certificate(&dom, d)?;
            let x = point(x, d, "--x")?;
            let x0 = point(x0, d, "--x0")?;
            let direction = if direction.is_empty() {
                cert.witness_at(cert.big_r)
            } else {
                point(direction, d, "--direction")?
            };
            let phi = c.phi();
            let process = Process::new(phi.clone(), d)?;
            let free = FreeGreen::new(&phi, d)?;
            let cfg = c.path(PathConfig::default());
            let est = estimate_martin_limit(&process, &free, &dom, &cert, &x, &x0, &direction, *last_shell, &cfg)?;
            emit(c, "martin", |w| match c.format {
                Format::Csv => {
                    writeln!(w, "shell,value,std_error")?;
                    for ((s, v), e) in est.shells.iter().zip(&est.values).zip(&est.std_errors) {
                        writeln!(
                            w,
                            "{},{},{}",
                            sbm_potential::report::full(*s),
                            sbm_potential::report::full(*v),
                            sbm_potential::report::full(*e)
                        )?;
                    }
                    Ok(())
                }
                Format::Json => json(w, &est),
            })?;
            Ok(vec![est.verdict])
        }
    }
}
