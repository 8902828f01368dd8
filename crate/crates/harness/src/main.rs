use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gplimit::output::unix_now;
use gplimit::{parse_config, replay, run, write_result, IneqCase, RunError, Study, StudyKind};

#[derive(Parser)]
#[command(name = "gplimit", version, about = "Numerical laboratory for the dilute Bose gas mean-field limit")]
struct Cli {
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "GPLIMIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to out/<subcommand>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering lengths and Born gaps of radial potentials.
    Scatter(Common),
    /// Minimize the Gross-Pitaevskii functional.
    GpMinimize(Common),
    /// Sweep the cutoff mean-field functional over (ε, s).
    NlStudy(Common),
    /// Exact diagonalization in a truncated mode basis.
    ManybodyEd(Common),
    /// Finite-N convergence towards the mean-field energy.
    Converge(Common),
    /// Numerical checks of the two-particle operator inequalities.
    IneqCheck {
        #[command(flatten)]
        common: Common,
        /// Overrides the case named in the configuration.
        #[arg(long, value_enum)]
        case: Option<IneqCase>,
    },
    /// Rerun a study from its manifest and compare every artifact hash.
    Replay {
        /// Path to a manifest.json written by an earlier run.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let threads = cli.threads.unwrap_or(1).max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| RunError::Compute(format!("thread pool: {e}")))?;

    let (kind, common, case) = match cli.command {
        Command::Replay { manifest, out } => {
            let out = out.unwrap_or_else(|| PathBuf::from("out/replay"));
            let rep = replay(&manifest, &out, threads)?;
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
            return if rep.identical() {
                Ok(())
            } else {
                Err(RunError::Compute(format!(
                    "replay differs: mismatched {:?}, missing {:?}",
                    rep.mismatched, rep.missing
                )))
            };
        }
        Command::Scatter(c) => (StudyKind::Scatter, c, None),
        Command::GpMinimize(c) => (StudyKind::GpMinimize, c, None),
        Command::NlStudy(c) => (StudyKind::NlStudy, c, None),
        Command::ManybodyEd(c) => (StudyKind::ManybodyEd, c, None),
        Command::Converge(c) => (StudyKind::Converge, c, None),
        Command::IneqCheck { common, case } => (StudyKind::IneqCheck, common, case),
    };

    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if cfg.study.kind() != kind {
        return Err(RunError::Config(format!(
            "at `study.kind`: configuration is for `{}`, not `{}`",
            cfg.study.kind().name(),
            kind.name()
        )));
    }
    if let (Study::IneqCheck(c), Some(case)) = (&mut cfg.study, case) {
        c.case = Some(case);
    }
    let out = common.out.unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let started = unix_now();
    let result = run(&cfg)?;
    let manifest = write_result(&out, &cfg, &result, threads, started)?;
    eprintln!(
        "{}: {} cells, {} failed, {} files in {}",
        kind.name(),
        manifest.cells,
        manifest.failed,
        manifest.files.len() + 1,
        out.display()
    );
    if result.total_failure() {
        return Err(RunError::Compute("every cell of the study failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gplimit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
