//! Command-line front end: dataset analysis, rationalizing-utility
//! export, synthetic data generation, and solver cross-checks.
//!
//! Exit codes: 0 success, 2 input problems, 4 unmet construction
//! preconditions, 3 internal cross-check failures (bug guards).

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pumpkit::dataset::{expenditure_matrix, load_dataset, write_dataset, Dataset, Format};
use pumpkit::indices::{
    full_report, generate_cobb_douglas_dataset, generate_quasilinear_dataset, IndexError,
    RationalityReport, ReportConfig,
};
use pumpkit::lp::solve_afriat_lp;
use pumpkit::money_pump::{tmp, tmp_bruteforce, tmp_constrained};
use pumpkit::utility::{
    build_constrained_rationalizer, build_optimal_permutation_rationalizer,
    build_quasilinear_rationalizer, verify_quasilinear, PiecewiseLinearUtility,
    RationalizationCertificate, UtilityError,
};
use pumpkit::DEFAULT_TOL;

#[derive(Parser)]
#[command(
    name = "pumpkit",
    version,
    about = "Money-pump indices and rationality measurement for consumer purchase data",
    after_help = "The PUMPKIT_TOL environment variable overrides the expenditure \
                  comparison tolerance (default 1e-9)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute every index and consistency check for a dataset
    Analyze(AnalyzeArgs),
    /// Construct a rationalizing utility, verify it, and export it
    Rationalize(RationalizeArgs),
    /// Generate a synthetic dataset from a known-rational consumer
    Generate(GenerateArgs),
    /// Cross-check the assignment solver against brute force and the LP
    Oracle(OracleArgs),
    /// Compute only the pump values and optimal strategies
    Pump(PumpArgs),
    /// Solve only the slack-minimizing linear program
    Lp(LpArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Dataset file
    #[arg(value_name = "DATASET")]
    path: Option<PathBuf>,
    /// Dataset file (alternative to the positional form)
    #[arg(short = 'i', long = "input", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Input format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Emit the full-precision JSON report instead of the table
    #[arg(long)]
    json: bool,
    /// Stop enumerating violating cycles past this count
    #[arg(long = "cycle-cap", value_name = "N", default_value_t = 100_000)]
    cycle_cap: usize,
    /// Random bundles per observation in each certificate
    #[arg(long, value_name = "N", default_value_t = 1000)]
    samples: usize,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Write the output here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RationalizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Use the budget-constrained construction with m^t = p^t . x^t
    #[arg(long)]
    constrained: bool,
    /// Rationalize the optimally permuted dataset instead (always succeeds)
    #[arg(long = "optimal-permutation")]
    optimal_permutation: bool,
    #[arg(long, value_name = "N", default_value_t = 1000)]
    samples: usize,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Write the utility JSON here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Which synthetic consumer to simulate
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Number of observations
    #[arg(long = "T", value_name = "N")]
    t: usize,
    /// Number of goods
    #[arg(long = "L", value_name = "N")]
    l: usize,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write the dataset here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Quasilinear,
    CobbDouglas,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct PumpArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Report only the constrained pump
    #[arg(long)]
    constrained: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LpArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Solve the constrained variant
    #[arg(long)]
    constrained: bool,
    #[arg(long)]
    json: bool,
}

enum CliError {
    Input(String),
    Internal(String),
    Precondition(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
            CliError::Precondition(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Internal(m) | CliError::Precondition(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            // a dataset of all-zero bundles is degenerate input, not a bug
            IndexError::ZeroExpenditure => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn utility_error(e: UtilityError) -> CliError {
    match e {
        UtilityError::NotCyclicallyMonotone { .. }
        | UtilityError::PumpableUnderBudgets { .. }
        | UtilityError::BudgetBelowExpenditure { .. } => CliError::Precondition(e.to_string()),
        UtilityError::BetaSearchFailed(_) | UtilityError::DimensionMismatch { .. } => {
            CliError::Internal(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match tolerance_from_env() {
        Ok(tol) => tol,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args, tol),
        Command::Rationalize(args) => cmd_rationalize(args, tol),
        Command::Generate(args) => cmd_generate(args),
        Command::Oracle(args) => cmd_oracle(args, tol),
        Command::Pump(args) => cmd_pump(args, tol),
        Command::Lp(args) => cmd_lp(args, tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn tolerance_from_env() -> Result<f64, String> {
    match std::env::var("PUMPKIT_TOL") {
        Ok(raw) => {
            let tol: f64 = raw
                .parse()
                .map_err(|_| format!("PUMPKIT_TOL is not a number: {raw}"))?;
            if !tol.is_finite() || tol <= 0.0 {
                return Err(format!("PUMPKIT_TOL must be a positive number, got {raw}"));
            }
            Ok(tol)
        }
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_TOL),
        Err(e) => Err(e.to_string()),
    }
}

impl InputArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        let path = match (&self.path, &self.input) {
            (Some(p), None) | (None, Some(p)) => p,
            (Some(_), Some(_)) => {
                return Err(CliError::Input(
                    "dataset given both positionally and via --input".into(),
                ));
            }
            (None, None) => {
                return Err(CliError::Input("no dataset given".into()));
            }
        };
        let format = match self.format {
            Some(FormatArg::Csv) => Format::Csv,
            Some(FormatArg::Json) => Format::Json,
            None => infer_format(path),
        };
        let mut file =
            File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        load_dataset(bytes.as_slice(), format).map_err(|e| CliError::Input(e.to_string()))
    }
}

fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    }
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut file = File::create(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            file.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                file.write_all(b"\n")?;
            }
        }
        None => println!("{content}"),
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs, tol: f64) -> Result<(), CliError> {
    let dataset = args.input.load()?;
    let cfg = ReportConfig {
        cycle_cap: args.cycle_cap,
        samples: args.samples,
        seed: args.seed,
        tol,
        ..ReportConfig::default()
    };
    let report = full_report(&dataset, &cfg)?;
    let rendered = if args.json {
        serde_json::to_string_pretty(&report).expect("report serializes")
    } else {
        render_report(&dataset, &report)
    };
    write_output(args.out.as_deref(), &rendered)?;
    if !report.all_cross_checks_pass() {
        return Err(CliError::Internal(
            "internal cross-checks failed beyond tolerance; see the report".into(),
        ));
    }
    Ok(())
}

fn render_report(d: &Dataset, r: &RationalityReport) -> String {
    let verdict = |ok: bool| if ok { "satisfied" } else { "violated" };
    let mut out = String::new();
    out.push_str(&format!(
        "dataset: {} observations, {} goods, total expenditure {:.6}\n",
        d.len(),
        d.num_goods,
        r.total_expenditure
    ));
    out.push_str(&format!(
        "GARP: {}    cyclical monotonicity: {}\n",
        verdict(r.garp),
        verdict(r.cm)
    ));
    out.push_str(&format!("TMP   = {:.6}    TMP_c = {:.6}\n", r.tmp, r.tmp_c));
    out.push_str(&format!(
        "A = Q = {:.6}    A_c = Q_c = {:.6}\n",
        r.additive_inefficiency, r.additive_inefficiency_c
    ));
    out.push_str(&format!(
        "epsilon_bar = {:.6}    epsilon_bar_c = {:.6}\n",
        r.epsilon_bar, r.epsilon_bar_c
    ));
    if r.no_violations {
        out.push_str("violating cycles: none\n");
    } else {
        let exactness = if r.cycles_truncated {
            " (truncated at cap; aggregates are lower bounds)"
        } else {
            ""
        };
        out.push_str(&format!(
            "violating cycles: {}{}\nELS mean = {:.6}    ELS median = {:.6}    SCSD max = {:.6}\n",
            r.violation_count, exactness, r.els_mean, r.els_median, r.scsd_max
        ));
    }
    out.push_str(&format!(
        "CCEI waste = {:.6}    efficiency = {:.6}\n",
        r.ccei_waste, r.ccei_efficiency
    ));
    out.push_str(&format!("normalized pump A~ = {:.6}\n", r.a_tilde));
    let checks_passed = r.cross_checks.iter().filter(|c| c.pass).count();
    let certs_passed = r.certificates.iter().filter(|c| c.pass).count();
    out.push_str(&format!(
        "cross-checks: {}/{} pass    certificates: {}/{} pass",
        checks_passed,
        r.cross_checks.len(),
        certs_passed,
        r.certificates.len()
    ));
    out
}

fn render_certificate(c: &RationalizationCertificate) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "certificate over dataset {} ({} samples/observation): {}\n",
        &c.dataset_hash[..12.min(c.dataset_hash.len())],
        c.sample_count,
        if c.pass { "PASS" } else { "FAIL" }
    ));
    for check in &c.checks {
        out.push_str(&format!(
            "  [{}] {} (worst violation {:.3e})\n",
            if check.pass { "ok" } else { "FAIL" },
            check.description,
            check.worst_violation
        ));
    }
    out
}

fn cmd_rationalize(args: RationalizeArgs, tol: f64) -> Result<(), CliError> {
    let dataset = args.input.load()?;

    let (utility, verified_on, note): (PiecewiseLinearUtility, Dataset, String) =
        if args.optimal_permutation {
            let attained = build_optimal_permutation_rationalizer(&dataset, args.constrained, tol)
                .map_err(utility_error)?;
            let permuted = dataset.permuted(&attained.pump.permutation);
            let note = format!(
                "optimal permutation {:?} extracts {:.6}; net-utility gap {:.6}",
                attained.pump.permutation, attained.pump.value, attained.gap
            );
            (attained.utility, permuted, note)
        } else if args.constrained {
            let e = expenditure_matrix(&dataset);
            let budgets: Vec<f64> = (0..dataset.len()).map(|t| e.diag(t)).collect();
            let utility =
                build_constrained_rationalizer(&dataset, &budgets, tol).map_err(utility_error)?;
            (
                utility,
                dataset.clone(),
                "budget-constrained construction".into(),
            )
        } else {
            let utility = build_quasilinear_rationalizer(&dataset, tol).map_err(utility_error)?;
            (utility, dataset.clone(), "quasilinear construction".into())
        };

    let certificate = verify_quasilinear(
        &utility,
        &verified_on,
        args.constrained,
        args.samples,
        args.seed,
        tol,
    );

    let json = serde_json::to_string_pretty(&utility).expect("utility serializes");
    match &args.out {
        Some(path) => {
            write_output(Some(path), &json)?;
            println!("{note}");
            print!("{}", render_certificate(&certificate));
        }
        None => {
            println!("{json}");
            eprintln!("{note}");
            eprint!("{}", render_certificate(&certificate));
        }
    }
    if !certificate.pass {
        return Err(CliError::Internal(
            "rationalization certificate failed; this signals a solver bug".into(),
        ));
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    if args.t < 1 || args.l < 1 {
        return Err(CliError::Input(
            "need at least one observation (--T) and one good (--L)".into(),
        ));
    }
    let dataset = match args.model {
        ModelArg::Quasilinear => {
            generate_quasilinear_dataset(args.seed, args.t, args.l, (0.5, 2.0))
        }
        ModelArg::CobbDouglas => {
            generate_cobb_douglas_dataset(args.seed, args.t, args.l, (1.0, 4.0), (0.5, 2.0))
        }
    };
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let rendered = write_dataset(&dataset, format);
    write_output(args.out.as_deref(), rendered.trim_end())?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs, tol: f64) -> Result<(), CliError> {
    let dataset = args.input.load()?;
    if dataset.len() > 10 {
        return Err(CliError::Input(format!(
            "oracle mode enumerates all permutations and needs T <= 10, got T = {}",
            dataset.len()
        )));
    }
    let fast = tmp(&dataset);
    let slow = tmp_bruteforce(&dataset, false, tol).map_err(|e| CliError::Input(e.to_string()))?;
    let fast_c = tmp_constrained(&dataset, tol);
    let slow_c = tmp_bruteforce(&dataset, true, tol).map_err(|e| CliError::Input(e.to_string()))?;
    let lp =
        solve_afriat_lp(&dataset, false, tol).map_err(|e| CliError::Internal(e.to_string()))?;
    let lp_c =
        solve_afriat_lp(&dataset, true, tol).map_err(|e| CliError::Internal(e.to_string()))?;

    let rows = [
        ("assignment vs brute force", fast.value, slow.value),
        (
            "constrained assignment vs brute force",
            fast_c.value,
            slow_c.value,
        ),
        ("lp vs assignment", lp.epsilon_bar, fast.value),
        (
            "constrained lp vs assignment",
            lp_c.epsilon_bar,
            fast_c.value,
        ),
    ];
    println!(
        "{:<40} {:>14} {:>14} {:>12}",
        "comparison", "lhs", "rhs", "delta"
    );
    let mut worst: f64 = 0.0;
    for (name, lhs, rhs) in rows {
        let delta = (lhs - rhs).abs();
        worst = worst.max(delta);
        println!("{name:<40} {lhs:>14.9} {rhs:>14.9} {delta:>12.3e}");
    }
    if worst > 1e-6 {
        return Err(CliError::Internal(format!(
            "solver routes disagree by {worst:.3e} (> 1e-6)"
        )));
    }
    Ok(())
}

fn cmd_pump(args: PumpArgs, tol: f64) -> Result<(), CliError> {
    let dataset = args.input.load()?;
    let constrained = tmp_constrained(&dataset, tol);
    let unconstrained = if args.constrained {
        None
    } else {
        Some(tmp(&dataset))
    };

    if args.json {
        let mut doc = serde_json::Map::new();
        if let Some(pump) = &unconstrained {
            doc.insert("tmp".into(), serde_json::to_value(pump).unwrap());
        }
        doc.insert("tmp_c".into(), serde_json::to_value(&constrained).unwrap());
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Object(doc)).unwrap()
        );
    } else {
        if let Some(pump) = &unconstrained {
            println!(
                "TMP   = {:.6}  via sigma = {:?}",
                pump.value, pump.permutation
            );
        }
        println!(
            "TMP_c = {:.6}  via sigma = {:?}",
            constrained.value, constrained.permutation
        );
    }
    Ok(())
}

fn cmd_lp(args: LpArgs, tol: f64) -> Result<(), CliError> {
    let dataset = args.input.load()?;
    let solution = solve_afriat_lp(&dataset, args.constrained, tol)
        .map_err(|e| CliError::Internal(e.to_string()))?
        .with_normalized_levels();
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&solution).expect("solution serializes")
        );
    } else {
        let name = if args.constrained {
            "epsilon_bar_c"
        } else {
            "epsilon_bar"
        };
        println!("{name} = {:.6}", solution.epsilon_bar);
        for (t, (u, eps)) in solution.u.iter().zip(&solution.eps).enumerate() {
            println!("  t={:<3} u = {u:>12.6}  eps = {eps:>12.6}", t + 1);
        }
    }
    Ok(())
}
