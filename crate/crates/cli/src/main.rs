use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semiclassical::harness::{config_template, run_command, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "semiclassical", version, about = "Semiclassical mean-field experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// run calculus checks (or any suite by name or criterion number)
    Calculus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: Option<String>,
    },
    /// TDHF versus the Moyal-corrected Vlasov hierarchy over the h ladder
    Converge(Common),
    /// quantum conjugation against classical transport with W = 0
    Egorov(Common),
    /// classical Vlasov run
    Vlasov(Common),
    /// quantum TDHF run
    Tdhf(Common),
    /// print a commented config template
    EmitConfigTemplate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory, defaults to `output.dir` from the config or `results`
    #[arg(long)]
    out: Option<PathBuf>,
    /// comma-separated ladder overriding `run.h`
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
}

fn load(common: &Common) -> semiclassical::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(h) = &common.h {
        cfg = cfg.with_ladder(h.clone())?;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok((cfg, out))
}

fn run(cmd: Command, common: &Common) -> ExitCode {
    let (cfg, out) = match load(common) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_command(&cmd, &cfg, Some(&out)) {
        Ok(report) => {
            for o in &report.outcomes {
                println!("{}", o.summary());
                log::info!("\n{}", o.details());
            }
            for f in &report.files {
                log::info!("wrote {}", f.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) if e.is_check_failure() => {
            eprintln!("check failed: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Cmd::Calculus { common, suite } => run(Command::Calculus { suite }, &common),
        Cmd::Converge(c) => run(Command::Converge, &c),
        Cmd::Egorov(c) => run(Command::Egorov, &c),
        Cmd::Vlasov(c) => run(Command::Vlasov, &c),
        Cmd::Tdhf(c) => run(Command::Tdhf, &c),
        Cmd::EmitConfigTemplate { out } => match out {
            None => {
                print!("{}", config_template());
                ExitCode::SUCCESS
            }
            Some(dir) => {
                let path = dir.join("config.toml");
                match std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, config_template())) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {}: {e}", path.display());
                        ExitCode::from(2)
                    }
                }
            }
        },
    }
}
