use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deflate_core::corpus::{self, BenchmarkCase, PowerSystemSpec};
use deflate_core::exec::Execution;
use deflate_core::regularity::ThetaPolicy;
use deflate_core::report::{bench, format_table, run_pipeline, PipelineOptions, RunReport};
use deflate_core::text::{parse_point, parse_system, print_system};
use deflate_core::RankMode;

#[derive(Parser)]
#[command(name = "deflate", version, about = "Deflate, refine and certify isolated singular zeros of polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deflate one system from a file or a built-in case.
    Deflate(DeflateArgs),
    /// Run built-in cases and print a result table.
    Bench(BenchArgs),
    /// List built-in cases.
    List,
    /// Print a built-in case in the text format.
    Export {
        name: String,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct Tolerances {
    /// Fixed regularity tolerance.
    #[arg(long)]
    theta: Option<f64>,
    /// Numerical rank tolerance.
    #[arg(long)]
    eps: Option<f64>,
    /// Residual bound for an exact verdict.
    #[arg(long)]
    theta_prime: Option<f64>,
    /// Trusted digits of the starting point when no fixed theta is given.
    #[arg(long)]
    zero_digits: Option<u32>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    no_verify: bool,
    /// Go straight to rank guessing.
    #[arg(long)]
    rank_guess: bool,
    /// Rank relative to the largest singular value.
    #[arg(long)]
    relative_rank: bool,
    #[arg(long)]
    json: bool,
}

impl Tolerances {
    fn apply(&self, mut o: PipelineOptions) -> PipelineOptions {
        if let Some(d) = self.zero_digits {
            o.refine.theta = ThetaPolicy::Heuristic { digits: d };
        }
        if let Some(t) = self.theta {
            o.refine.theta = ThetaPolicy::Fixed(t);
        }
        if let Some(e) = self.eps {
            o.refine.eps = e;
        }
        if let Some(t) = self.theta_prime {
            o.refine.theta_prime = t;
        }
        if let Some(r) = self.max_retries {
            o.refine.max_retries = r;
        }
        if self.relative_rank {
            o.refine.rank_mode = RankMode::Relative;
        }
        o.refine.force_rank_guess |= self.rank_guess;
        o.no_verify |= self.no_verify;
        o
    }
}

#[derive(Args)]
struct DeflateArgs {
    /// System file; omit when using --case.
    file: Option<PathBuf>,
    /// Built-in case name (see `list`).
    #[arg(long, conflicts_with = "file")]
    case: Option<String>,
    /// Starting point "v1,v2,..." or a file holding one.
    #[arg(long)]
    point: Option<String>,
    /// Start from a seeded perturbation of the case's exact zero.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args)]
struct BenchArgs {
    /// Case names, `breadthN` included; all built-ins when empty.
    names: Vec<String>,
    /// Add this many generated power systems.
    #[arg(long, default_value_t = 0)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the cases one after another.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    tol: Tolerances,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Deflate(a) => deflate(a),
        Command::Bench(a) => run_bench(a),
        Command::List => {
            for name in corpus::list_cases() {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Export { name, output } => export(&name, output),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_point(arg: &str) -> Result<Vec<f64>, String> {
    let text = match fs::read_to_string(arg) {
        Ok(t) => t,
        Err(_) => arg.to_string(),
    };
    parse_point(&text).map_err(|e| format!("point: {e}"))
}

fn deflate(a: DeflateArgs) -> Result<i32, String> {
    let (name, system, case) = match (&a.file, &a.case) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let parsed = parse_system(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            (path.display().to_string(), parsed.system, None)
        }
        (None, Some(n)) => {
            let c = corpus::load_case(n).map_err(|e| e.to_string())?;
            (c.name.clone(), c.system.clone(), Some(c))
        }
        (None, None) => return Err("give a system file or --case".into()),
    };
    let point = match (&a.point, a.seed, &case) {
        (Some(p), _, _) => read_point(p)?,
        (None, Some(s), Some(c)) => {
            let z = c.exact_zero.as_ref().ok_or_else(|| format!("{name} has no stored exact zero to perturb"))?;
            corpus::perturb(z, s)
        }
        (None, None, Some(c)) => c.approx_zero.coords().to_vec(),
        _ => return Err("--point is required for a system file".into()),
    };
    if point.len() != system.nvars() {
        return Err(format!("point has {} coordinates, system has {} unknowns", point.len(), system.nvars()));
    }
    let base = PipelineOptions::default();
    let opts = a.tol.apply(match &case {
        Some(c) => base.for_case(c),
        None => base,
    });
    let run = run_pipeline(&system, &point, &opts).map_err(|e| e.to_string())?;
    let report = run.report(&name, &system, case.as_ref().and_then(|c| c.reference_multiplicity));
    if a.tol.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    } else {
        print_summary(&report, &print_system(&run.outcome.deflated.system));
    }
    Ok(report.exit_code())
}

fn print_summary(r: &RunReport, deflated: &str) {
    if r.no_deflation_needed {
        println!("no deflation needed");
    } else {
        print!("{deflated}");
    }
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
    println!("final size   {} ({} new), {} polynomials", r.final_size.unwrap_or(0), r.n_alpha.unwrap_or(0), r.poly_count.unwrap_or(0));
    if let (Some(v), Some(c), Some(s)) = (r.verdict, r.convergence, r.strategy) {
        println!("verdict      {v:?}, {c:?} convergence, {s:?}, {} retries", r.retries);
    }
    println!("delta        {}", opt(r.delta));
    println!("max err      {}", opt(r.max_err));
    if let Some(p) = r.perturbation {
        println!("perturbation {p:.3e}");
    }
    match (&r.inclusion, &r.verify_error) {
        (Some(b), _) => {
            println!("breadth      {}", opt(r.breadth));
            for (i, x) in b.0.iter().enumerate() {
                println!("  x{} in {x}", i + 1);
            }
        }
        (None, Some(e)) => println!("unverified   {e}"),
        (None, None) => println!("unverified"),
    }
    println!("time         {:.4} s", r.seconds);
}

fn run_bench(a: BenchArgs) -> Result<i32, String> {
    let names: Vec<String> = if a.names.is_empty() && a.random == 0 {
        corpus::list_cases().iter().map(|s| s.to_string()).collect()
    } else {
        a.names.clone()
    };
    let mut cases: Vec<BenchmarkCase> = names
        .iter()
        .map(|n| corpus::load_case(n).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for k in 0..a.random {
        let spec = PowerSystemSpec::unmixed(vec![2, 2], a.seed.wrapping_add(k as u64));
        cases.push(corpus::generate_random_power_system(&spec).map_err(|e| e.to_string())?);
    }
    let opts = a.tol.apply(PipelineOptions::default());
    let execution = if a.sequential { Execution::Sequential } else { Execution::default() };
    if has_overrides(&a.tol) {
        // explicit flags win over the per-case recommendations
        for c in &mut cases {
            c.tolerances = Default::default();
        }
    }
    let reports = bench(&cases, &opts, execution);
    if a.tol.json {
        println!("{}", serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())?);
    } else {
        print!("{}", format_table(&reports));
    }
    Ok(if reports.iter().any(|r| r.error.is_some()) { 1 } else { 0 })
}

fn has_overrides(t: &Tolerances) -> bool {
    t.theta.is_some() || t.eps.is_some() || t.zero_digits.is_some()
}

fn export(name: &str, output: Option<PathBuf>) -> Result<i32, String> {
    let case = corpus::load_case(name).map_err(|e| e.to_string())?;
    let mut text = print_system(&case.system);
    text.push_str(&format!(
        "# start: {}\n",
        case.approx_zero.coords().iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(", ")
    ));
    match output {
        Some(path) => fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}
