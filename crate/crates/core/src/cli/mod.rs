//! Command-line experiment runner.
//!
//! `echo-lab <kind|recipe> [--config FILE] [--set key=value]... [--out PATH]
//! [--workers N] [--seed S]`. Bindings apply in order: recipe, config file,
//! `--set`, then the dedicated flags. Exit status is 0 on success, 1 for
//! configuration errors and 2 for numerical failures.

pub mod config;
pub mod experiments;
pub mod recipes;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use config::{ExperimentConfig, IndexSet, Kind, NoiseMode};
pub use experiments::{execute, RunOutput};
pub use recipes::{Recipe, RECIPES};

use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "echo-lab", version, about = "Fidelity and echo experiments on a kicked two-mode condensate")]
struct Args {
    /// Experiment kind or recipe name; `list` or nothing prints the recipes.
    target: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// What the command line asked for.
#[derive(Clone, Debug, PartialEq)]
pub enum Invocation {
    List,
    Run(ExperimentConfig),
}

/// Resolves arguments (without the program name) into a run.
pub fn resolve<I, T>(args: I) -> std::result::Result<Invocation, ResolveError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("echo-lab")).chain(args.into_iter().map(Into::into));
    let args = Args::try_parse_from(argv).map_err(ResolveError::Usage)?;
    let target = match args.target.as_deref() {
        None | Some("list") => return Ok(Invocation::List),
        Some(t) => t,
    };
    let mut config = if let Some(recipe) = recipes::find(target) {
        recipe.config()?
    } else if let Ok(kind) = target.parse::<Kind>() {
        ExperimentConfig::new(kind)
    } else {
        let mut names: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
        names.extend(Kind::ALL.iter().map(|k| k.name()));
        let hint = config::closest(target, &names)
            .map(|n| format!("; did you mean `{n}`?"))
            .unwrap_or_default();
        return Err(Error::config("target", format!("unknown recipe or experiment kind `{target}`{hint}")).into());
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        config.apply_text(&text)?;
    }
    for binding in &args.set {
        let (k, v) = binding
            .split_once('=')
            .ok_or_else(|| Error::config(binding.as_str(), "--set expects key=value"))?;
        config.set(k.trim(), v)?;
    }
    if let Some(out) = args.out {
        config.out = Some(out);
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(Invocation::Run(config))
}

#[derive(Debug)]
pub enum ResolveError {
    Usage(clap::Error),
    Config(Error),
}

impl From<Error> for ResolveError {
    fn from(e: Error) -> Self {
        ResolveError::Config(e)
    }
}

/// Runs `config` on a dedicated pool of `config.workers` threads.
pub fn run_config(config: &ExperimentConfig) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| execute(config))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Full command-line behaviour; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match resolve(args) {
        Ok(Invocation::List) => {
            print!("{}", recipes::listing());
            return 0;
        }
        Ok(Invocation::Run(c)) => c,
        Err(ResolveError::Usage(e)) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
        Err(ResolveError::Config(e)) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let output = match run_config(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = output.render();
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    0
}
