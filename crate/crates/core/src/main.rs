use clap::{Parser, Subcommand};
use stark_core::cli::{self, CliError, Exit, Options, RawConfig, ReportFile};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rsverify", version, about = "Verify Rubin-Stark norm relations over abelian fields")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value instance configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory of the L-value cache.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Working precision in bits (overrides the config).
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Seed for the property suites (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write the JSON report (stdout when absent).
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full verification of an instance.
    Verify,
    /// θ^(r) for r = |V| and the vanishing order of every character.
    Stickelberger,
    /// The r = 1 Rubin-Stark element recovered from L-values.
    RsElement,
    /// The inclusion-exclusion lemma suite.
    LemmaSuite,
    /// Property suites over the pure algebra layer.
    AlgebraSuite,
    /// L-value cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    List,
    Clear,
    Warm,
}

fn emit(report: &ReportFile, path: Option<&PathBuf>) -> Result<(), CliError> {
    let text = report.to_json();
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| CliError::Io(format!("{}: {}", p.display(), e))),
        None => {
            println!("{}", text);
            Ok(())
        }
    }
}

fn run(args: &Args) -> Result<Exit, CliError> {
    let opts = Options {
        config: args.config.as_deref().map(RawConfig::read).transpose()?,
        cache: args.cache.clone(),
        precision: args.precision,
        seed: args.seed,
    };
    if let Some(dir) = &args.cache {
        for w in cli::cache_warnings(dir) {
            eprintln!("warning: {}", w);
        }
    }
    let report = match &args.command {
        Command::Verify => cli::verify(&opts)?,
        Command::Stickelberger => cli::stickelberger_cmd(&opts)?,
        Command::RsElement => cli::rs_element_cmd(&opts)?,
        Command::LemmaSuite => cli::lemma_suite(&opts)?,
        Command::AlgebraSuite => cli::algebra_suite_cmd(&opts)?,
        Command::Cache { action } => {
            let dir = args.cache.as_ref().ok_or_else(|| CliError::Missing("--cache".into()))?;
            match action {
                CacheAction::List => cli::cache_list(dir)?.iter().for_each(|l| println!("{}", l)),
                CacheAction::Clear => cli::cache_clear(dir)?,
                CacheAction::Warm => println!("{} leading terms available", cli::cache_warm(&opts)?),
            }
            return Ok(Exit::Pass);
        }
    };
    for c in &report.checks {
        eprintln!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    emit(&report, args.report.as_ref())?;
    Ok(report.exit())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit()
        }
    };
    ExitCode::from(code as u8)
}
