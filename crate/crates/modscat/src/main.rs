use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modscat::pipeline::{boost_rerun, load_report, run_scenario};
use modscat::RunError;

#[derive(Parser)]
#[command(name = "modscat", version, about = "Asymptotic scattering lab for the relativistic Vlasov-Maxwell system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; artifacts go to $MODSCAT_OUTPUT_ROOT/<output>.
    Run { config: PathBuf },
    /// Re-slice a stored prescribed-field run along boosted hyperboloids.
    Boost {
        artifact_dir: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
    /// Summarise a run's report.json.
    Report { artifact_dir: PathBuf },
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e).unwrap_or_else(|_| e.to_string()));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match run_scenario(&config) {
            Ok((dir, r)) => {
                println!("{}", dir.display());
                println!(
                    "verdict {} (max slope {:e}, tol {:e}; charge indicator {:e}, tol {:e})",
                    r.classifier.verdict, r.classifier.max_slope, r.classifier.tol_slope, r.classifier.charge_indicator, r.classifier.tol_q
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Boost { artifact_dir, phi } => match boost_rerun(&artifact_dir, phi) {
            Ok((dir, r)) => {
                println!("{}", dir.display());
                for c in &r.comparisons {
                    println!("t' = {:e}  weak deviation {:e}  pointwise {:e}", c.time, c.weak_deviation, c.pointwise_deviation);
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                if artifact_dir.is_dir() {
                    let _ = std::fs::write(artifact_dir.join("error.json"), serde_json::to_string_pretty(&e).unwrap_or_default());
                }
                fail(e)
            }
        },
        Command::Report { artifact_dir } => match load_report(&artifact_dir) {
            Ok(v) => {
                println!("{}", serde_json::to_string_pretty(&summary(&v)).unwrap());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}

fn summary(v: &serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "scenario": v["scenario"],
        "version": v["version"],
        "classifier": v["classifier"],
        "extraction": v["extraction"],
        "identity": v["identity"],
        "rest_frame": v["rest_frame"],
        "monitors": v["monitors"],
        "control_max_slope": v["control_max_slope"],
    })
}
