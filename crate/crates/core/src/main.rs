use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use pathprop::config::{ExperimentConfig, Pipeline};
use pathprop::{linalg, pipeline, Error};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PipelineArg {
    Propagate,
    Spectrum,
    Tunnel,
    Normcheck,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Propagate => Pipeline::Propagate,
            PipelineArg::Spectrum => Pipeline::Spectrum,
            PipelineArg::Tunnel => Pipeline::Tunnel,
            PipelineArg::Normcheck => Pipeline::Normcheck,
        }
    }
}

/// Real-time path integral propagators: dynamics, spectra and tunnelling.
#[derive(Debug, Parser)]
#[command(name = "pathprop", version)]
struct Cli {
    pipeline: PipelineArg,
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 or absent uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoTunnelEvent(_) => 4,
        e if e.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        linalg::set_thread_count(n);
        // Ignored if the global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = ExperimentConfig::load(&cli.config)
        .and_then(|cfg| cfg.validate(cli.pipeline.into()))
        .and_then(|mut exp| {
            if let Some(out) = cli.out {
                exp.output_dir = out;
            }
            if let Some(w) = pipeline::chirp_warning(&exp) {
                eprintln!("warning: {w}");
            }
            pipeline::run(&exp)
        });
    match result {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
