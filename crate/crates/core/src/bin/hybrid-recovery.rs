use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_recovery::experiment::{Condition, ExperimentConfig, Workspace};
use hybrid_recovery::gate::DetectorKind;
use hybrid_recovery::rnn::CellKind;
use hybrid_recovery::Result;

#[derive(Parser)]
#[command(name = "hybrid-recovery", version, about = "Staged experiments for the gated RNN/LQR pick-and-place controller")]
struct Cli {
    /// TOML configuration; defaults to `<out>/config.toml` when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifacts directory.
    #[arg(long, global = true, default_value = "artifacts")]
    out: PathBuf,
    /// Restrict to one model seed (default: every configured seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse::<DetectorKind>)]
    detector: Option<DetectorKind>,
    #[arg(long, global = true, value_parser = parse::<CellKind>)]
    cell: Option<CellKind>,
    #[arg(long, global = true, value_parser = parse::<Condition>)]
    disturbance: Option<Condition>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scripted demonstrations and the train/validation split.
    GenData,
    /// Image autoencoder.
    TrainCae,
    /// Recurrent task model.
    TrainRnn,
    /// Previous-trajectory head on the frozen task model.
    TrainPrev,
    /// Nominal recall error, window baselines and gate selection.
    Calibrate,
    /// Switching success of each detector.
    EvalSwitching,
    /// Task completion per cell.
    EvalTask,
    /// One evaluation episode, logged to CSV.
    RunTask {
        /// Episode index within the evaluation set.
        #[arg(long, default_value_t = 0)]
        episode: usize,
    },
    /// Context trace of one episode on three principal axes.
    ExportPca {
        #[arg(long, default_value_t = 0)]
        episode: usize,
    },
    /// Markdown summary of every result present.
    Report,
    /// Every stage in order.
    Pipeline,
    /// Print the effective configuration.
    ShowConfig,
}

fn parse<T: std::str::FromStr<Err = hybrid_recovery::Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: hybrid_recovery::Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => {
            let stored = cli.out.join("config.toml");
            if stored.exists() {
                ExperimentConfig::load(&stored)
            } else {
                Ok(ExperimentConfig::default())
            }
        }
    }
}

fn seeds(cli: &Cli, cfg: &ExperimentConfig) -> Vec<u64> {
    cli.seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s])
}

fn cells(cli: &Cli, ws: &Workspace) -> Vec<CellKind> {
    cli.cell.map_or_else(|| ws.cells(), |c| vec![c])
}

fn conditions(cli: &Cli) -> Vec<Condition> {
    cli.disturbance.map_or_else(|| Condition::ALL.to_vec(), |c| vec![c])
}

fn show(path: &Path) {
    println!("{}", path.display());
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    if matches!(cli.command, Command::ShowConfig) {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let ws = Workspace::open(&cli.out, cfg.clone())?;
    let main_cell = cli.cell.unwrap_or(cfg.rnn.model.kind);
    let first_seed = cli.seed.unwrap_or(cfg.seeds[0]);
    match &cli.command {
        Command::GenData => {
            ws.gen_data()?;
        }
        Command::TrainCae => {
            ws.train_cae()?;
        }
        Command::TrainRnn => {
            for cell in cells(cli, &ws) {
                for seed in seeds(cli, &cfg) {
                    ws.train_rnn(seed, cell)?;
                }
            }
        }
        Command::TrainPrev => {
            for cell in cells(cli, &ws) {
                for seed in seeds(cli, &cfg) {
                    ws.train_prev(seed, cell)?;
                }
            }
        }
        Command::Calibrate => {
            for cell in cells(cli, &ws) {
                for seed in seeds(cli, &cfg) {
                    ws.calibrate_stage(seed, cell)?;
                }
            }
        }
        Command::EvalSwitching => {
            let dets = cli.detector.map_or_else(|| DetectorKind::ALL.to_vec(), |d| vec![d]);
            for row in ws.eval_switching(main_cell, &seeds(cli, &cfg), &dets, &conditions(cli))? {
                println!(
                    "{} {} {} {}: {:.1} ± {:.1} %",
                    row.cell.name(),
                    row.detector.name(),
                    row.setting,
                    row.condition.name(),
                    row.mean,
                    row.sd
                );
            }
        }
        Command::EvalTask => {
            let task_cells = cli.cell.map_or_else(|| cfg.rnn.task_cells.clone(), |c| vec![c]);
            for row in ws.eval_task(&task_cells, &seeds(cli, &cfg), &conditions(cli))? {
                println!("{} {}: {:.1} ± {:.1} %", row.cell.name(), row.condition.name(), row.mean, row.sd);
            }
        }
        Command::RunTask { episode } => {
            let det = cli.detector.unwrap_or(cfg.detector);
            let cond = cli.disturbance.unwrap_or(Condition::A);
            let run = ws.run_task(first_seed, main_cell, det, cond, *episode)?;
            println!("{} steps={} {:?}", run.record.id, run.record.steps.len(), run.outcome);
            show(&run.csv);
        }
        Command::ExportPca { episode } => {
            let det = cli.detector.unwrap_or(cfg.detector);
            let cond = cli.disturbance.unwrap_or(Condition::B);
            show(&ws.export_pca(first_seed, main_cell, det, cond, *episode)?);
        }
        Command::Report => print!("{}", ws.report()?),
        Command::Pipeline => print!("{}", ws.run_pipeline()?),
        Command::ShowConfig => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
