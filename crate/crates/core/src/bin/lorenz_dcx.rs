//! Command-line front end: simulate, fixed-points, eigen, lyapunov,
//! classify, ensemble, and reproduce subcommands over the library.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 scenario mismatch in
//! `reproduce`, 3 numeric error (divergence where boundedness is required).

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lorenz_dcx::classifier::{classify, coexisting_attractors, ClassifierConfig, RegimeKind};
use lorenz_dcx::equilibria::{classify_equilibrium, convergence_condition, fixed_points};
use lorenz_dcx::experiments::{run_suite, SuiteOptions};
use lorenz_dcx::lyapunov::{spectrum, SpectrumSettings};
use lorenz_dcx::map::{apply_symmetry, iterate, iterate_real, Termination};
use lorenz_dcx::types::{parse_complex, ComplexScalar, State3};
use lorenz_dcx::{Error, OrbitConfig, SystemParams};

/// Complex flag value using the scenario-file literal grammar.
#[derive(Debug, Clone, Copy)]
struct ComplexArg(ComplexScalar);

impl FromStr for ComplexArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_complex(s)
            .map(ComplexArg)
            .ok_or_else(|| format!("malformed complex literal `{s}`"))
    }
}

#[derive(Debug, Args)]
struct ParamFlags {
    /// Prandtl number a (complex literal, e.g. 10 or 0.5497+0.9172i)
    #[arg(long, allow_hyphen_values = true)]
    a: ComplexArg,
    /// Parameter b (fractions like 8/3 accepted)
    #[arg(long, allow_hyphen_values = true)]
    b: ComplexArg,
    /// Rayleigh number r
    #[arg(long, allow_hyphen_values = true)]
    r: ComplexArg,
    /// Time step (positive real)
    #[arg(long)]
    dt: f64,
}

impl ParamFlags {
    fn build(&self) -> Result<SystemParams, Error> {
        SystemParams::new(self.a.0, self.b.0, self.r.0, self.dt)
    }
}

#[derive(Debug, Args)]
struct InitialFlags {
    #[arg(long, allow_hyphen_values = true, default_value = "0.1+0.2i")]
    x0: ComplexArg,
    #[arg(long, allow_hyphen_values = true, default_value = "0.3+0.4i")]
    y0: ComplexArg,
    #[arg(long, allow_hyphen_values = true, default_value = "1+2i")]
    z0: ComplexArg,
}

impl InitialFlags {
    fn state(&self) -> State3 {
        State3::new(self.x0.0, self.y0.0, self.z0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "lorenz-dcx",
    version,
    about = "Discrete complex Lorenz map: orbits, equilibria, Lyapunov spectra, regime classification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run an orbit and export it as CSV
    Simulate {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        initial: InitialFlags,
        #[arg(long, default_value_t = 2_000_000)]
        steps: u64,
        /// Record every n-th state
        #[arg(long, default_value_t = 200)]
        stride: u64,
        #[arg(long, default_value_t = 1e6)]
        threshold: f64,
        /// Run the real-restricted map (requires real parameters and start)
        #[arg(long)]
        real: bool,
        /// Output directory (default ./out/simulate/<timestamp>)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Print the three closed-form fixed points
    FixedPoints {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Equilibrium report (eigenvalues + both stability criteria) as JSON
    Eigen {
        #[command(flatten)]
        params: ParamFlags,
        /// Which fixed point: 0 (origin), 1 (-s,-s,r-1), 2 (s,s,r-1)
        #[arg(long, default_value_t = 2)]
        point: usize,
    },
    /// Lyapunov spectrum of an orbit as JSON, with a finite-time CSV sidecar
    Lyapunov {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        initial: InitialFlags,
        #[arg(long, default_value_t = 2_000_000)]
        steps: u64,
        /// State-only steps before tangent accumulation (default steps/5)
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long, default_value_t = 10)]
        interval: u64,
        #[arg(long, default_value_t = 10_000)]
        window: u64,
        #[arg(long, default_value_t = 1e6)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify an orbit's regime as JSON
    Classify {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        initial: InitialFlags,
        #[arg(long, default_value_t = 2_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 200)]
        stride: u64,
        #[arg(long, default_value_t = 1e6)]
        threshold: f64,
        #[arg(long)]
        real: bool,
    },
    /// Run an ensemble of initial conditions and group coexisting attractors
    Ensemble {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        initial: InitialFlags,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 2_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 200)]
        stride: u64,
    },
    /// Replay a scenario suite and score it against expected labels
    Reproduce {
        #[arg(long)]
        suite: PathBuf,
        /// Output directory for report.json / summary.txt / per-scenario CSV
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker cap (also: LORENZ_DCX_WORKERS)
        #[arg(long)]
        workers: Option<usize>,
        /// Skip per-scenario orbit CSV exports
        #[arg(long)]
        no_csv: bool,
    },
}

#[derive(Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

impl From<ComplexScalar> for ComplexOut {
    fn from(v: ComplexScalar) -> Self {
        Self { re: v.re, im: v.im }
    }
}

#[derive(Serialize)]
struct StateOut {
    x: ComplexOut,
    y: ComplexOut,
    z: ComplexOut,
}

impl From<State3> for StateOut {
    fn from(s: State3) -> Self {
        Self {
            x: s.x.into(),
            y: s.y.into(),
            z: s.z.into(),
        }
    }
}

fn default_out_dir(subcommand: &str) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ").to_string();
    PathBuf::from("out").join(subcommand).join(stamp)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Simulate {
            params,
            initial,
            steps,
            stride,
            threshold,
            real,
            out,
            format,
        } => {
            let p = params.build()?;
            let cfg = OrbitConfig::with_threshold(initial.state(), steps, stride, threshold)?;
            let orbit = if real {
                iterate_real(&p, &cfg)?
            } else {
                iterate(&p, &cfg)
            };
            let dir = out.unwrap_or_else(|| default_out_dir("simulate"));
            std::fs::create_dir_all(&dir)?;
            let csv_path = dir.join("orbit.csv");
            let mut f = std::fs::File::create(&csv_path)?;
            orbit.write_csv(&mut f)?;

            #[derive(Serialize)]
            struct SimulateOut {
                params: String,
                initial: StateOut,
                steps: u64,
                stride: u64,
                terminated: String,
                divergence_step: Option<u64>,
                final_state: StateOut,
                samples: usize,
                csv: String,
            }
            let (terminated, divergence_step) = match orbit.terminated_by {
                Termination::Completed => ("completed".to_string(), None),
                Termination::Diverged(k) => ("diverged".to_string(), Some(k)),
            };
            let summary = SimulateOut {
                params: p.to_string(),
                initial: initial.state().into(),
                steps,
                stride,
                terminated,
                divergence_step,
                final_state: orbit.final_state.into(),
                samples: orbit.samples.len(),
                csv: csv_path.display().to_string(),
            };
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
                Format::Csv => println!(
                    "wrote {} samples to {}",
                    summary.samples,
                    csv_path.display()
                ),
            }
            if let Termination::Diverged(k) = orbit.terminated_by {
                eprintln!("orbit diverged at step {k}");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }

        Cmd::FixedPoints { params, format } => {
            let p = params.build()?;
            let points = fixed_points(&p);
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct FixedPointsOut {
                        params: String,
                        points: Vec<StateOut>,
                    }
                    let doc = FixedPointsOut {
                        params: p.to_string(),
                        points: points.iter().map(|s| StateOut::from(*s)).collect(),
                    };
                    println!("{}", serde_json::to_string_pretty(&doc)?);
                }
                Format::Csv => {
                    for (name, fp) in ["origin", "minus", "plus"].iter().zip(points) {
                        println!("{name}: {fp}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Eigen { params, point } => {
            let p = params.build()?;
            if point > 2 {
                return Err(Error::InvalidConfig("--point must be 0, 1, or 2".into()));
            }
            let fp = fixed_points(&p)[point];
            let report = classify_equilibrium(&p, &fp)?;
            let condition = convergence_condition(&p).ok();

            #[derive(Serialize)]
            struct ConditionOut {
                r_abs: f64,
                bound: f64,
                holds: bool,
            }
            #[derive(Serialize)]
            struct EigenOut {
                point: StateOut,
                eigenvalues: Vec<lorenz_dcx::equilibria::EigenvalueOut>,
                paper_stable: bool,
                modulus_stable: bool,
                residual: f64,
                convergence_condition: Option<ConditionOut>,
            }
            let doc = EigenOut {
                point: report.point.into(),
                eigenvalues: report
                    .eigenvalues
                    .iter()
                    .map(|l| lorenz_dcx::equilibria::EigenvalueOut {
                        re: l.re,
                        im: l.im,
                        modulus: l.norm(),
                    })
                    .collect(),
                paper_stable: report.paper_stable,
                modulus_stable: report.modulus_stable,
                residual: report.residual,
                convergence_condition: condition.map(|(r_abs, bound, holds)| ConditionOut {
                    r_abs,
                    bound,
                    holds,
                }),
            };
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Lyapunov {
            params,
            initial,
            steps,
            burn_in,
            interval,
            window,
            threshold,
            out,
        } => {
            let p = params.build()?;
            let cfg = OrbitConfig::with_threshold(
                initial.state(),
                steps,
                1.max(steps / 10_000),
                threshold,
            )?;
            let settings = SpectrumSettings {
                burn_in: burn_in.unwrap_or(steps / 5),
                total: steps,
                reorthonormalize_interval: interval,
                window,
            };
            let est = match spectrum(&p, &cfg, &settings) {
                Ok(est) => est,
                Err(Error::DivergentOrbit { step }) => {
                    eprintln!("divergent orbit at step {step}");
                    return Ok(ExitCode::from(3));
                }
                Err(e) => return Err(e),
            };
            let dir = out.unwrap_or_else(|| default_out_dir("lyapunov"));
            std::fs::create_dir_all(&dir)?;
            let series_path = dir.join("finite_time_largest.csv");
            {
                use std::io::Write;
                let mut f = std::fs::File::create(&series_path)?;
                writeln!(f, "window_start,largest")?;
                for (k, v) in &est.finite_time_series {
                    writeln!(f, "{k},{v:.16e}")?;
                }
            }

            #[derive(Serialize)]
            struct LyapunovOut {
                params: String,
                exponents: Vec<f64>,
                largest: f64,
                verdict: String,
                last_quarter_stderr: f64,
                mean_log_det: f64,
                settings: SpectrumSettings,
                finite_time_series_csv: String,
            }
            let doc = LyapunovOut {
                params: p.to_string(),
                exponents: est.exponents.to_vec(),
                largest: est.largest,
                verdict: format!("{:?}", est.verdict).to_lowercase(),
                last_quarter_stderr: est.last_quarter_stderr,
                mean_log_det: est.mean_log_det,
                settings: est.settings,
                finite_time_series_csv: series_path.display().to_string(),
            };
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Classify {
            params,
            initial,
            steps,
            stride,
            threshold,
            real,
        } => {
            let p = params.build()?;
            let cfg = OrbitConfig::with_threshold(initial.state(), steps, stride, threshold)?;
            let orbit = if real {
                iterate_real(&p, &cfg)?
            } else {
                iterate(&p, &cfg)
            };
            let lyap = if orbit.diverged() {
                None
            } else {
                spectrum(
                    &p,
                    &cfg,
                    &SpectrumSettings {
                        burn_in: 0,
                        total: steps,
                        reorthonormalize_interval: 10,
                        window: 10_000,
                    },
                )
                .ok()
            };
            let ccfg = ClassifierConfig::default();
            let label = classify(&orbit, lyap.as_ref(), &ccfg)?;

            #[derive(Serialize)]
            struct LabelOut {
                kind: String,
                target: Option<StateOut>,
                period: Option<u64>,
                divergence_step: Option<u64>,
            }
            #[derive(Serialize)]
            struct TolerancesOut {
                convergence_tol: f64,
                recurrence_tol: f64,
                sink_group_tol: f64,
                cell_size: f64,
                p_max: usize,
                min_positive_windows: usize,
            }
            #[derive(Serialize)]
            struct ClassifyOut {
                params: String,
                initial: StateOut,
                label: LabelOut,
                evidence: lorenz_dcx::classifier::Evidence,
                tolerances: TolerancesOut,
            }
            let label_out = match &label.kind {
                RegimeKind::ConvergesTo(t) => LabelOut {
                    kind: "converges_to".into(),
                    target: Some((*t).into()),
                    period: None,
                    divergence_step: None,
                },
                RegimeKind::Periodic(period) => LabelOut {
                    kind: "periodic".into(),
                    target: None,
                    period: Some(*period),
                    divergence_step: None,
                },
                RegimeKind::Divergent(k) => LabelOut {
                    kind: "divergent".into(),
                    target: None,
                    period: None,
                    divergence_step: Some(*k),
                },
                other => LabelOut {
                    kind: other.tag().into(),
                    target: None,
                    period: None,
                    divergence_step: None,
                },
            };
            let doc = ClassifyOut {
                params: p.to_string(),
                initial: initial.state().into(),
                label: label_out,
                evidence: label.evidence,
                tolerances: TolerancesOut {
                    convergence_tol: ccfg.convergence_tol,
                    recurrence_tol: ccfg.recurrence_tol,
                    sink_group_tol: ccfg.sink_group_tol,
                    cell_size: ccfg.cell_size,
                    p_max: ccfg.p_max,
                    min_positive_windows: ccfg.min_positive_windows,
                },
            };
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Ensemble {
            params,
            initial,
            count,
            steps,
            stride,
        } => {
            let p = params.build()?;
            let base = initial.state();
            let mut ics = vec![base, apply_symmetry(&base)];
            let mut k = 0u64;
            while ics.len() < count.max(2) {
                let mut comps = [0.0f64; 6];
                for (j, c) in comps.iter_mut().enumerate() {
                    *c = (splitmix64(0x5EED + k * 6 + j as u64) as f64 / u64::MAX as f64) * 1.4
                        - 0.7;
                }
                ics.push(State3::new(
                    ComplexScalar::new(comps[0], comps[1]),
                    ComplexScalar::new(comps[2], comps[3]),
                    ComplexScalar::new(comps[4], comps[5]),
                ));
                k += 1;
            }
            ics.truncate(count.max(2));
            let groups =
                coexisting_attractors(&p, &ics, steps, stride, &ClassifierConfig::default())?;

            #[derive(Serialize)]
            struct GroupOut {
                fingerprint: String,
                members: Vec<usize>,
                count: usize,
            }
            #[derive(Serialize)]
            struct EnsembleOut {
                params: String,
                count: usize,
                initials: Vec<StateOut>,
                groups: Vec<GroupOut>,
            }
            let doc = EnsembleOut {
                params: p.to_string(),
                count: ics.len(),
                initials: ics.iter().map(|s| StateOut::from(*s)).collect(),
                groups: groups
                    .iter()
                    .map(|g| GroupOut {
                        fingerprint: g.fingerprint.describe(),
                        members: g.members.clone(),
                        count: g.members.len(),
                    })
                    .collect(),
            };
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }

        Cmd::Reproduce {
            suite,
            out,
            workers,
            no_csv,
        } => {
            let dir = out.unwrap_or_else(|| default_out_dir("reproduce"));
            let options = SuiteOptions {
                workers,
                write_orbit_csv: !no_csv,
                out_dir: Some(&dir),
            };
            let report = run_suite(&suite, &options)?;
            let timestamp = chrono::Utc::now().to_rfc3339();
            print!("{}", report.summary_text(&timestamp));
            if report.failed > 0 {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
