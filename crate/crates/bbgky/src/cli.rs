//! `bbgky derive | bench | validate`.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use bbgky_core::{derive, Equation, ExpansionMode, Render, Single};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dsl::{parse_labels, parse_spec, SpecFile};
use crate::error::AppError;
use crate::memo::SharedMemo;
use crate::oracle::{check_equation, self_check, ConcreteSystem, Evaluator, OracleConfig};

#[derive(Debug, Parser)]
#[command(name = "bbgky", version, about = "Derive and check quantum BBGKY hierarchy equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the equation of motion of each target.
    Derive {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Format::Plain)]
        format: Format,
    },
    /// Time cold-memo derivations of each target.
    Bench {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Check derived equations on random dense systems and print a JSON report.
    Validate {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of consecutive seeds, starting at --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Hilbert-space dimension of every subsystem.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Minimum number of members per family.
        #[arg(long, default_value_t = 3)]
        members: u32,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct Input {
    /// System description file, or `-` for standard input.
    spec: PathBuf,
    /// Target labels, e.g. `A1F1` or `"A1 F1"`; repeatable. Defaults to the
    /// file's `derive` lines.
    #[arg(short, long = "target")]
    target: Vec<String>,
    #[arg(long, value_enum, default_value_t = Expansion::SingleCorrelation)]
    expansion: Expansion,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Plain,
    Latex,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Expansion {
    #[value(name = "paper")]
    SingleCorrelation,
    Ursell,
}

impl From<Expansion> for ExpansionMode {
    fn from(e: Expansion) -> Self {
        match e {
            Expansion::SingleCorrelation => ExpansionMode::SingleCorrelation,
            Expansion::Ursell => ExpansionMode::Ursell,
        }
    }
}

struct Loaded {
    file: SpecFile,
    targets: Vec<Vec<Single>>,
    mode: ExpansionMode,
}

fn load(input: &Input, stdin: &mut dyn Read) -> Result<Loaded, AppError> {
    let text = if input.spec.as_os_str() == "-" {
        let mut s = String::new();
        stdin.read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(&input.spec)?
    };
    let file = parse_spec(&text)?;
    let targets = if input.target.is_empty() {
        file.targets.clone()
    } else {
        input.target.iter().map(|t| parse_labels(t)).collect::<Result<_, _>>()?
    };
    if targets.is_empty() {
        return Err(AppError::Usage("no targets: pass --target or add a `derive` line".into()));
    }
    for t in &targets {
        file.spec.check_target(t)?;
    }
    Ok(Loaded { file, targets, mode: input.expansion.into() })
}

/// Derives all targets in parallel over one shared memo; results keep the
/// input order.
fn derive_all(loaded: &Loaded) -> Result<Vec<Equation>, AppError> {
    let memo = SharedMemo::new(loaded.mode);
    let spec = &loaded.file.spec;
    std::thread::scope(|scope| {
        let handles: Vec<_> = loaded
            .targets
            .iter()
            .map(|t| {
                let memo = &memo;
                scope.spawn(move || derive(spec, t, &mut &*memo))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("derivation thread panicked").map_err(AppError::from))
            .collect()
    })
}

fn cmd_derive(loaded: &Loaded, format: Format, out: &mut dyn Write) -> Result<(), AppError> {
    let eqs = derive_all(loaded)?;
    match format {
        Format::Plain => {
            for eq in &eqs {
                writeln!(out, "{}", eq.display())?;
            }
        }
        Format::Latex => {
            for eq in &eqs {
                writeln!(out, "{}", eq.latex())?;
            }
        }
        Format::Json => {
            let doc = json!({
                "expansion": loaded.mode.name(),
                "equations": eqs.iter().map(crate::json::equation).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
    }
    Ok(())
}

fn label(t: &[Single]) -> String {
    t.iter().map(Single::to_string).collect()
}

fn cmd_bench(loaded: &Loaded, reps: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), AppError> {
    if reps == 0 {
        return Err(AppError::Usage("--reps must be at least 1".into()));
    }
    writeln!(out, "target,expansion,reps,mean_s,stddev_s,min_s,max_s,terms")?;
    writeln!(err, "{:<16} {:>8} {:>24} {:>7}", "target", "reps", "time, s", "terms")?;
    for t in &loaded.targets {
        let mut times = Vec::with_capacity(reps);
        let mut terms = 0;
        for _ in 0..reps {
            let mut memo = bbgky_core::DerivationMemo::new(loaded.mode);
            let start = Instant::now();
            let eq = derive(&loaded.file.spec, t, &mut memo)?;
            times.push(start.elapsed().as_secs_f64());
            terms = eq.rhs.len();
        }
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = if times.len() > 1 { times.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let sd = var.sqrt();
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        let max = times.iter().copied().fold(0.0, f64::max);
        writeln!(out, "g_{},{},{reps},{mean:.6},{sd:.6},{min:.6},{max:.6},{terms}", label(t), loaded.mode.name())?;
        writeln!(err, "{:<16} {reps:>8} {:>24} {terms:>7}", format!("g_{}", label(t)), format!("{mean:.3} ± {sd:.3}"))?;
    }
    Ok(())
}

struct ValidateOptions {
    seed: u64,
    seeds: u64,
    config: OracleConfig,
    tol: f64,
}

fn cmd_validate(loaded: &Loaded, opts: &ValidateOptions, out: &mut dyn Write) -> Result<bool, AppError> {
    if opts.seeds == 0 {
        return Err(AppError::Usage("--seeds must be at least 1".into()));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(AppError::Usage("--tol must be positive".into()));
    }
    let eqs = derive_all(loaded)?;
    let mut runs = Vec::new();
    let mut all_passed = true;
    for seed in opts.seed..opts.seed + opts.seeds {
        let config = OracleConfig { seed, ..opts.config };
        let mut reports = Vec::new();
        // One concrete system per target keeps each Hilbert space small.
        for (t, eq) in loaded.targets.iter().zip(&eqs) {
            let sys = ConcreteSystem::new(&loaded.file.spec, std::slice::from_ref(t), config)?;
            let ev = Evaluator::new(&sys, loaded.mode)?;
            let checks = self_check(&ev, std::slice::from_ref(t))?;
            let r = check_equation(eq, &ev, opts.tol)?;
            all_passed &= r.passed;
            reports.push(json!({"report": r, "sites": sys.sites().len(), "self_check": checks}));
        }
        runs.push(json!({"seed": seed, "equations": reports}));
    }
    let doc = json!({
        "expansion": loaded.mode.name(),
        "tol": opts.tol,
        "dims": opts.config.dim,
        "members": opts.config.members,
        "passed": all_passed,
        "runs": runs,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
    Ok(all_passed)
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Derive { input, format } => load(input, stdin).and_then(|l| cmd_derive(&l, *format, out)),
        Command::Bench { input, reps } => load(input, stdin).and_then(|l| cmd_bench(&l, *reps, out, err)),
        Command::Validate { input, seed, seeds, dims, members, tol } => {
            let opts = ValidateOptions {
                seed: *seed,
                seeds: *seeds,
                config: OracleConfig { seed: *seed, dim: *dims, members: *members },
                tol: *tol,
            };
            load(input, stdin).and_then(|l| cmd_validate(&l, &opts, out)).and_then(|passed| {
                if passed {
                    Ok(())
                } else {
                    Err(AppError::Validation("at least one equation exceeds the tolerance".into()))
                }
            })
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "bbgky: {e}");
            e.exit_code()
        }
    }
}
