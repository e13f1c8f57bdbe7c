//! Command-line front end: derive, verify, sample and report.
//!
//! Exit codes: 0 success, 1 input error, 2 solver budget exhausted,
//! 3 verification-domain failure.

mod config;
mod pipeline;

pub use config::{parse_binding, parse_sigma, RunConfig};
pub use pipeline::{
    derive_all, derive_run, domain_failure, load_catalog, read_branches, read_model, sample, summary, verify,
    BranchesFile, DeriveSpec, ALL_CASES,
};

use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("solver budget exhausted in {0} run(s); results are incomplete")]
    Incomplete(usize),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Incomplete(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hermite-wave", version, about = "Travelling-wave candidates from a Hermite auxiliary equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the coefficient systems and write branches.json.
    Derive(Flags),
    /// Check branches.json against the catalog; writes fidelity.json and summary.txt.
    Verify(Flags),
    /// Write u over a grid as CSV.
    Sample(Flags),
    /// Derive and verify every catalog model in one go.
    Report(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    equation: Option<PathBuf>,
    /// constant, kummer, trig, a comma list, or all.
    #[arg(long)]
    case: Option<String>,
    /// strict or paper.
    #[arg(long)]
    mode: Option<String>,
    /// +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// x0:x1:nx,t0:t1:nt
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "bind", value_name = "NAME=VALUE")]
    bind: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated solver unknowns.
    #[arg(long)]
    unknowns: Option<String>,
    /// Ansatz order (default: balance, or the catalog's order).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// branches.json to read (default OUT/branches.json).
    #[arg(long)]
    branches: Option<PathBuf>,
    /// Derived branch id to sample.
    #[arg(long)]
    branch: Option<String>,
    /// Catalog row to sample.
    #[arg(long)]
    entry: Option<String>,
    /// Use finite differences with this step instead of jets.
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    max_branches: Option<usize>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p).map_err(CliError::Input)?,
            None => RunConfig::default(),
        };
        let here = Path::new("");
        let mut set = |k: &str, v: String| cfg.set(k, &v, here).map_err(CliError::Input);
        let path = |p: PathBuf| p.to_string_lossy().into_owned();
        if let Some(v) = self.equation {
            set("equation", path(v))?;
        }
        if let Some(v) = self.case {
            set("case", v)?;
        }
        if let Some(v) = self.mode {
            set("mode", v)?;
        }
        if let Some(v) = self.sigma {
            set("sigma", v)?;
        }
        if let Some(v) = self.grid {
            set("grid", v)?;
        }
        for b in self.bind {
            set("bind", b)?;
        }
        if let Some(v) = self.seed {
            set("seed", v.to_string())?;
        }
        if let Some(v) = self.out {
            set("out", path(v))?;
        }
        if let Some(v) = self.unknowns {
            set("unknowns", v)?;
        }
        if let Some(v) = self.order {
            set("order", v.to_string())?;
        }
        if let Some(v) = self.catalog {
            set("catalog", path(v))?;
        }
        if let Some(v) = self.branches {
            set("branches", path(v))?;
        }
        if let Some(v) = self.branch {
            set("branch", v)?;
        }
        if let Some(v) = self.entry {
            set("entry", v)?;
        }
        if let Some(v) = self.fd_step {
            set("fd-step", v.to_string())?;
        }
        if let Some(v) = self.max_branches {
            set("max-branches", v.to_string())?;
        }
        Ok(cfg)
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn derive_cmd(cfg: &RunConfig) -> Result<BranchesFile, CliError> {
    let catalog = load_catalog(cfg)?;
    let file = derive_all(cfg, &catalog)?;
    write(&cfg.out.join("branches.json"), &json(&file))?;
    Ok(file)
}

fn verify_cmd(cfg: &RunConfig, file: &BranchesFile) -> Result<(), CliError> {
    let catalog = load_catalog(cfg)?;
    let report = verify(file, &catalog, cfg)?;
    let text = summary(&report);
    write(&cfg.out.join("fidelity.json"), &json(&report))?;
    write(&cfg.out.join("summary.txt"), &text)?;
    print!("{text}");
    if domain_failure(&report) {
        return Err(CliError::Domain("some derived branches could not be evaluated on the grid".into()));
    }
    Ok(())
}

fn incomplete(file: &BranchesFile) -> Result<(), CliError> {
    let n = file.runs.iter().filter(|r| r.incomplete).count();
    if n > 0 {
        Err(CliError::Incomplete(n))
    } else {
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Derive(f) => {
            let cfg = f.into_config()?;
            let file = derive_cmd(&cfg)?;
            let n: usize = file.runs.iter().map(|r| r.branches.len()).sum();
            println!(
                "{} run(s), {n} branch(es) -> {}",
                file.runs.len(),
                cfg.out.join("branches.json").display()
            );
            incomplete(&file)
        }
        Command::Verify(f) => {
            let cfg = f.into_config()?;
            let file = read_branches(&cfg.branches_path())?;
            verify_cmd(&cfg, &file)
        }
        Command::Report(f) => {
            let cfg = f.into_config()?;
            let file = derive_cmd(&cfg)?;
            verify_cmd(&cfg, &file)?;
            incomplete(&file)
        }
        Command::Sample(f) => {
            let cfg = f.into_config()?;
            let catalog = load_catalog(&cfg)?;
            let (csv, failures) = sample(&cfg, &catalog)?;
            let path = cfg.out.join("sample.csv");
            write(&path, &csv)?;
            if failures > 0 {
                eprintln!("u could not be evaluated at {failures} grid point(s); written as NaN");
            }
            println!("{} rows -> {}", cfg.grid.len(), path.display());
            Ok(())
        }
    }
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
