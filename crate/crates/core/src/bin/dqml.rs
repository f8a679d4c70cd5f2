use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dqml::campaign::{
    cmd_chsh, cmd_dnn, cmd_effdim, cmd_report, cmd_synth, load_config, parse_name, ChshCampaign, DnnCampaign,
    EffdimCampaign, Overrides, SynthCampaign, WORKERS_ENV,
};
use dqml::dnn::dnn_param_count;
use dqml::train::LossKind;
use dqml::{Error, Result};

/// Distributed quantum classifier experiments.
#[derive(Parser, Debug)]
#[command(author, version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extended CHSH game: Bell-0/Bell-1, both embeddings, both losses.
    Chsh(RunArgs),
    /// Synthetic 8-feature classification across Bell-n and depth.
    Synth(RunArgs),
    /// Effective-dimension depth sweeps.
    Effdim(RunArgs),
    /// Classical two-branch network baseline.
    Dnn(RunArgs),
    /// Mean and std over repeats from one or more runs CSVs.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "runs/report")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `runs/<command>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Worker threads (default from DQML_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    depth: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    bell: Vec<usize>,
    /// `mse` or `product`.
    #[arg(long, value_delimiter = ',')]
    loss: Vec<String>,
    /// `optimal`/`alternative` for chsh, `feature_map`/`haar_random` otherwise.
    #[arg(long, value_delimiter = ',')]
    embedding: Vec<String>,
    #[arg(long)]
    mixing_depth: Option<usize>,
    #[arg(long)]
    second_stage_depth: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            seed: self.seed,
            repeats: self.repeats,
            workers: self.workers,
            depth: self.depth.clone(),
            bell: self.bell.clone(),
            loss: self.loss.iter().map(|s| parse_name::<LossKind>(s, "loss")).collect::<Result<_>>()?,
            embedding: self.embedding.clone(),
            mixing_depth: self.mixing_depth,
            second_stage_depth: self.second_stage_depth,
        })
    }

    fn out(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new("runs").join(command))
    }
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| Error::Config(format!("{WORKERS_ENV}='{v}' is not a count")))?),
        Err(_) => None,
    };
    if let Some(n) = workers.or(from_env) {
        if n == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<PathBuf> {
    match cli.command {
        Command::Chsh(a) => {
            let mut c: ChshCampaign = load_config(a.config.as_deref())?;
            c.apply(&a.overrides()?)?;
            c.validate()?;
            init_workers(c.workers)?;
            cmd_chsh(&c, &a.out("chsh"))
        }
        Command::Synth(a) => {
            let mut c: SynthCampaign = load_config(a.config.as_deref())?;
            c.apply(&a.overrides()?)?;
            c.validate()?;
            init_workers(c.workers)?;
            cmd_synth(&c, &a.out("synth"))
        }
        Command::Effdim(a) => {
            let mut c: EffdimCampaign = load_config(a.config.as_deref())?;
            c.apply(&a.overrides()?)?;
            c.validate()?;
            init_workers(c.workers)?;
            cmd_effdim(&c, &a.out("effdim"))
        }
        Command::Dnn(a) => {
            let mut c: DnnCampaign = load_config(a.config.as_deref())?;
            c.apply(&a.overrides()?)?;
            c.validate()?;
            init_workers(c.workers)?;
            println!("parameters: {}", dnn_param_count());
            cmd_dnn(&c, &a.out("dnn"))
        }
        Command::Report { inputs, out } => cmd_report(&inputs, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            println!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
