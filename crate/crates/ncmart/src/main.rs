use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ncmart::jones::{jones_decompose, k_curve_hardy, DecompInput};
use ncmart::verify::{
    gen_instance, run_suite, InstanceFile, InstanceSpec, Mode, Report, SuiteConfig,
};

#[derive(Parser)]
#[command(
    name = "ncmart",
    about = "Noncommutative-martingale K-functional toolkit: instance generation, \
             decompositions, K-curves, and inequality suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance and write it as JSON.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        levels: usize,
        /// "noncommutative" or "dyadic"
        #[arg(long, default_value = "noncommutative")]
        mode: String,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the two-sided K-curve of an instance as CSV.
    Kcurve {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.01)]
        tmin: f64,
        #[arg(long, default_value_t = 100.0)]
        tmax: f64,
        #[arg(long, default_value_t = 33)]
        points: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the two-step decomposition at one t and print its certificates.
    Decompose {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one named check on an instance.
    Check {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// One of the suite check names (e.g. k_closedness, hardy, dual_doob)
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full suite from a config file (defaults when omitted).
    Suite {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Summarize a suite report JSON as a table.
    Report {
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "noncommutative" => Ok(Mode::Noncommutative),
        "dyadic" => Ok(Mode::Dyadic),
        other => Err(format!("unknown mode '{other}' (expected noncommutative|dyadic)")),
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn load_instance(path: &PathBuf) -> Result<ncmart::verify::Instance, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    file.to_instance().map_err(|e| e.to_string())
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen {
            seed,
            dim,
            levels,
            mode,
            out,
        } => {
            let spec = InstanceSpec {
                dim,
                levels,
                mode: parse_mode(&mode)?,
                seed,
            };
            let inst = gen_instance(&spec).map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&InstanceFile::from_instance(&inst))
                .map_err(|e| e.to_string())?;
            emit(&out, &json).map_err(|e| e.to_string())?;
            Ok(true)
        }
        Command::Kcurve {
            r#in,
            p,
            tmin,
            tmax,
            points,
            epsilon,
            out,
        } => {
            if !(tmin > 0.0 && tmax > tmin && points >= 2) {
                return Err("need 0 < tmin < tmax and at least 2 points".into());
            }
            let inst = load_instance(&r#in)?;
            let input = DecompInput::from_martingale(&inst.martingale);
            let ts: Vec<f64> = (0..points)
                .map(|i| {
                    tmin * (tmax / tmin).powf(i as f64 / (points - 1) as f64)
                })
                .collect();
            let curve = k_curve_hardy(&input, p, &ts, epsilon).map_err(|e| e.to_string())?;
            emit(&out, &curve.to_csv()).map_err(|e| e.to_string())?;
            Ok(true)
        }
        Command::Decompose {
            r#in,
            t,
            epsilon,
            out,
        } => {
            let inst = load_instance(&r#in)?;
            let input = DecompInput::from_martingale(&inst.martingale);
            let d = jones_decompose(&input, t, epsilon).map_err(|e| e.to_string())?;
            let json =
                serde_json::to_string_pretty(&d.certificate).map_err(|e| e.to_string())?;
            emit(&out, &json).map_err(|e| e.to_string())?;
            Ok(d.certificate.all_ok())
        }
        Command::Check { r#in, name, out } => {
            let inst = load_instance(&r#in)?;
            if !ncmart::verify::ALL_CHECKS.contains(&name.as_str()) {
                return Err(format!(
                    "unknown check '{name}' (known: {})",
                    ncmart::verify::ALL_CHECKS.join(", ")
                ));
            }
            let cfg = SuiteConfig {
                checks: vec![name],
                ..SuiteConfig::default()
            };
            let reports = ncmart::verify::RatioReport::merge(
                ncmart::verify::check_dispatch(&inst, &cfg).map_err(|e| e.to_string())?,
            );
            let pass = reports.iter().all(|r| r.pass);
            let json = serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())?;
            emit(&out, &json).map_err(|e| e.to_string())?;
            Ok(pass)
        }
        Command::Suite {
            config,
            out_json,
            out_csv,
        } => {
            let cfg: SuiteConfig = match config {
                Some(path) => {
                    let text =
                        fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
                }
                None => SuiteConfig::default(),
            };
            let report = run_suite(&cfg).map_err(|e| e.to_string())?;
            if let Some(path) = &out_json {
                let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
                fs::write(path, json).map_err(|e| e.to_string())?;
            }
            if let Some(path) = &out_csv {
                fs::write(path, report.to_csv()).map_err(|e| e.to_string())?;
            }
            print!("{}", report.summary());
            Ok(report.pass)
        }
        Command::Report { r#in } => {
            let text =
                fs::read_to_string(&r#in).map_err(|e| format!("{}: {e}", r#in.display()))?;
            let report: Report =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", r#in.display()))?;
            print!("{}", report.summary());
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
