use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parawork_cli::check::{run_check, CheckSizes};
use parawork_cli::commands::read_config;
use parawork_cli::{cmd_jacobian, cmd_optimize, cmd_workspace, parse_pose, CliError};

/// Workspace analysis and design optimization for 1T2R parallel manipulators.
///
/// Angles are radians in every file and flag (1 rad = 57.2958 deg).
#[derive(Parser)]
#[command(name = "parawork", version)]
struct Cli {
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boundary search and volume; writes boundary.csv and summary.json.
    Workspace {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory, overriding the config's output.directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Jacobian matrices at one pose, printed as JSON.
    Jacobian {
        #[arg(short, long)]
        config: PathBuf,
        /// `z,psi,theta`, z in the mechanism's length unit, angles in radians.
        #[arg(long, allow_hyphen_values = true)]
        pose: String,
        /// Also write jacobian.json here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Maximizes workspace volume; writes opt_trace.csv and opt_result.json.
    Optimize {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Runs the invariant and oracle suite; exit status 0 iff all pass.
    Check {
        #[arg(short, long)]
        config: PathBuf,
        /// Additionally require this pose to be reachable and nonsingular.
        #[arg(long, allow_hyphen_values = true)]
        pose: Option<String>,
    },
}

fn out_dir(flag: Option<PathBuf>, cfg_dir: &Path) -> PathBuf {
    flag.unwrap_or_else(|| cfg_dir.to_path_buf())
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Command::Workspace { config, out } => {
            let cfg = read_config(&config)?;
            let b = cmd_workspace(&cfg, &out_dir(out, &cfg.output.directory))?;
            println!("volume {}", b.volume);
        }
        Command::Jacobian { config, pose, out } => {
            let cfg = read_config(&config)?;
            let pose = parse_pose(&pose)?;
            print!("{}", cmd_jacobian(&cfg, &pose, out.as_deref())?);
        }
        Command::Optimize { config, out } => {
            let cfg = read_config(&config)?;
            let r = cmd_optimize(&cfg, &out_dir(out, &cfg.output.directory))?;
            println!("V_opt {} rho_opt {:?} evaluations {}", r.v_opt, r.rho_opt, r.evaluations);
        }
        Command::Check { config, pose } => {
            let cfg = read_config(&config)?;
            let pose = pose.as_deref().map(parse_pose).transpose()?;
            let report = run_check(&cfg, pose, CheckSizes::default());
            print!("{}", report.render());
            if report.failures() > 0 {
                return Err(CliError::CheckFailed(report.failures(), report.lines.len()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("parawork: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
