use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use varlp::experiments::{Experiment, ExperimentConfig, Report};

#[derive(Parser)]
#[command(name = "varlp", version, about = "Experiments on weighted variable-exponent Lebesgue spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Wavelet square-function norm equivalence bands.
    Equivalence,
    /// Growth of the projection modular ratio for a step exponent.
    ModularFailure,
    /// Local against global maximal operator on translated indicators.
    Maximal,
    /// Vector-valued local maximal inequality.
    VectorValued,
    /// Oscillation and norm constants of a local Calderón–Zygmund operator.
    Cz,
    /// Local Muckenhoupt constant of the weight.
    Aploc,
    /// Unit-sphere and Hölder checks of the Luxemburg norm.
    Norm,
    /// Every experiment in turn.
    All,
}

#[derive(Args)]
struct Overrides {
    /// TOML or JSON config file; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "L", global = true)]
    half_width: Option<u32>,
    #[arg(long, global = true)]
    r: Option<u32>,
    /// Exponent: const:c, step:p1:p2:x0:delta or table:x=p,...
    #[arg(long, global = true)]
    p: Option<String>,
    /// Weight: one, exp:alpha or pow:A.
    #[arg(long, global = true)]
    w: Option<String>,
    #[arg(long = "N", global = true)]
    order: Option<usize>,
    #[arg(long = "J", global = true, allow_hyphen_values = true)]
    base_level: Option<i32>,
    #[arg(long = "jmax", global = true, allow_hyphen_values = true)]
    j_max: Option<i32>,
    #[arg(long = "rc", global = true)]
    r_c: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "corpus-size", global = true)]
    corpus_size: Option<usize>,
    /// Kernel: hilbert-cut:gamma or wavelet-proj:j.
    #[arg(long, global = true)]
    kernel: Option<String>,
    #[arg(long = "jstar", global = true, allow_hyphen_values = true)]
    j_star: Option<i32>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn config(&self) -> varlp::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        set!(half_width, r, order, base_level, seed, corpus_size, kernel, j_star, out);
        if self.p.is_some() {
            cfg.p = self.p.clone();
        }
        if self.w.is_some() {
            cfg.w = self.w.clone();
        }
        if self.j_max.is_some() {
            cfg.j_max = self.j_max;
        }
        if self.r_c.is_some() {
            cfg.r_c = self.r_c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &Report) {
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    println!("{} {verdict}", report.experiment);
    for a in &report.assertions {
        println!("  [{}] {}: {}", if a.passed { "ok" } else { "FAIL" }, a.name, a.detail);
    }
}

fn run(cli: &Cli) -> varlp::Result<bool> {
    let cfg = cli.overrides.config()?;
    let experiments: Vec<Experiment> = match cli.command {
        Command::Equivalence => vec![Experiment::Equivalence],
        Command::ModularFailure => vec![Experiment::ModularFailure],
        Command::Maximal => vec![Experiment::Maximal],
        Command::VectorValued => vec![Experiment::VectorValued],
        Command::Cz => vec![Experiment::Cz],
        Command::Aploc => vec![Experiment::Aploc],
        Command::Norm => vec![Experiment::Norm],
        Command::All => Experiment::ALL.to_vec(),
    };
    let mut passed = true;
    for e in experiments {
        let report = e.run(&cfg)?;
        report.write(&cfg.out)?;
        print_report(&report);
        passed &= report.passed;
    }
    println!("outputs in {}", cfg.out.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
