use std::path::PathBuf;
use std::process::ExitCode;

use billiard_core::harness::{self, Mode, RunConfig, ScheduleSpec, Status, SuiteConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "billiard", about = "Billiard trajectories in smooth convex bodies")]
struct Cli {
    /// Run every configuration in a JSON suite file (`{"runs": [...]}`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a built-in suite.
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// Output directory for suites.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Acceptance,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-curve penalty continuation, bounce detection and assembly.
    Solve(Common),
    /// Exact Newton shooting for a (k, j) periodic orbit.
    Shoot(Common),
    /// Open-curve penalty continuation toward a brake trajectory.
    Brake(Common),
    /// Checks the law of reflection for a saved trajectory.
    Verify(Common),
    /// Shortest-orbit estimates and inequality checks.
    Inequalities(Common),
    /// Inradius, width, diameter and penalty defaults.
    Geom(Common),
    /// Summarizes the run summaries below a directory.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Prints the acceptance suite as a JSON config.
    SuiteConfig {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Zoo body name or JSON body file; repeatable.
    #[arg(long = "body", default_value = "disc")]
    bodies: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `start:ratio:steps`.
    #[arg(long = "eps-schedule", default_value = "0.1:0.25:13")]
    schedule: ScheduleSpec,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    perturbation: f64,
    #[arg(long, default_value_t = 0.9)]
    shrink: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long)]
    svg: bool,
}

impl Common {
    fn into_config(self, mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            bodies: self.bodies,
            out: self.out,
            nodes: self.nodes,
            delta: self.delta,
            schedule: self.schedule,
            seed: self.seed,
            perturbation: self.perturbation,
            shrink: self.shrink,
            k: self.k,
            j: self.j,
            trajectory: self.trajectory,
            tolerance: self.tol,
            svg: self.svg,
        }
    }
}

fn print_summaries(status: Status, summaries: &[harness::RunSummary]) -> ExitCode {
    for s in summaries {
        println!("{}: {:?}", s.label, s.status);
        if let Some(e) = &s.error {
            println!("  error: {e}");
        }
        for r in &s.rows {
            let mark = match r.passes {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "    ",
            };
            println!("  [{mark}] {} = {:.9} {}", r.quantity, r.value, r.note);
        }
    }
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(path) = cli.config {
        return match SuiteConfig::load(&path) {
            Ok(suite) => {
                let (status, summaries) = harness::run_suite(&suite);
                print_summaries(status, &summaries)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(Status::ConfigError.code() as u8)
            }
        };
    }
    if let Some(Suite::Acceptance) = cli.suite {
        let (status, summaries) = harness::run_suite(&SuiteConfig::acceptance(&cli.out));
        return print_summaries(status, &summaries);
    }
    let Some(command) = cli.command else {
        eprintln!("error: give a subcommand, --config or --suite");
        return ExitCode::from(Status::ConfigError.code() as u8);
    };
    let config = match command {
        Command::Solve(c) => c.into_config(Mode::Solve),
        Command::Shoot(c) => c.into_config(Mode::Shoot),
        Command::Brake(c) => c.into_config(Mode::Brake),
        Command::Verify(c) => c.into_config(Mode::Verify),
        Command::Inequalities(c) => c.into_config(Mode::Inequalities),
        Command::Geom(c) => c.into_config(Mode::Geom),
        Command::Report { out } => {
            return match harness::report(&out) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(Status::of_error(&e).code() as u8)
                }
            };
        }
        Command::SuiteConfig { out } => {
            let suite = SuiteConfig::acceptance(&out);
            println!("{}", serde_json::to_string_pretty(&suite).expect("serializable"));
            return ExitCode::SUCCESS;
        }
    };
    let (status, summaries) = harness::run(&config);
    print_summaries(status, &summaries)
}
