use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fermidq_core::expr::GenKind;
use fermidq_core::verify::TOL_ENV;
use fermidq_core::{
    evaluate, format_element, parse_expression, run_scenario, run_sweep, verify_suite, ConfigError, Expr,
    GeneratorSet, Grid, Link, Quantity, ScenarioConfig, Star, SweepSpec, SymmetricForm, Tolerances,
    VerifyOptions,
};

#[derive(Parser)]
#[command(name = "fermidq", version, about = "Fermionic deformation quantization engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write its JSON report.
    Scenario {
        #[command(subcommand)]
        which: ScenarioKind,
    },
    /// Sweep a coupling through the full pipeline and write CSV.
    Sweep(SweepArgs),
    /// Evaluate a Grassmann expression.
    Eval(EvalArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum ScenarioKind {
    /// Two fermionic oscillators with non-anticommutative couplings.
    Nac(ScenarioArgs),
}

/// Physical parameters; unset flags fall back to the config file, then to
/// defaults.
#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// key = value or JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    hbar: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
}

impl ParamArgs {
    fn config(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        for (v, slot) in [
            (self.hbar, &mut cfg.hbar),
            (self.omega, &mut cfg.omega),
            (self.c, &mut cfg.c),
            (self.d, &mut cfg.d),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, allow_negative_numbers = true)]
    renyi_alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// c=d, c=-d, c (d fixed) or d (c fixed).
    #[arg(long, default_value = "c=d")]
    link: String,
    /// Start of the swept coupling, in units of hbar.
    #[arg(long, allow_negative_numbers = true, default_value_t = -0.9)]
    from: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.9)]
    to: f64,
    #[arg(long, default_value_t = 181)]
    steps: usize,
    /// Comma list of ep_pp, ep_mm, ep_pm, ep_mp, energies, p1, p2.
    #[arg(long, default_value = "ep_pp,ep_pm")]
    quantities: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
    /// Multiply with the star product of the (hbar, c, d) form.
    #[arg(long)]
    star: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "coarse")]
    grid: String,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    omega: f64,
    /// Extra grid point "c,d" in units of hbar; repeatable.
    #[arg(long = "point", allow_negative_numbers = true)]
    points: Vec<String>,
    /// Flip the Hodge sign in traces; the trace check must then fail.
    #[arg(long)]
    perturb_hodge: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn scenario(args: ScenarioArgs) -> Result<ExitCode, Failure> {
    let mut cfg = args.params.config()?;
    if args.renyi_alpha.is_some() {
        cfg.renyi_alpha = args.renyi_alpha;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args.out.or_else(|| cfg.out.clone().map(PathBuf::from));
    cfg.validate()?;
    let report = run_scenario(&cfg).map_err(runtime)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut json = report.to_json();
    json.push('\n');
    write_out(out.as_ref(), &json)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> Result<ExitCode, Failure> {
    let cfg = args.params.config()?;
    let link = Link::parse(&args.link).ok_or_else(|| Failure::Usage(format!("unknown link '{}'", args.link)))?;
    let quantities = args
        .quantities
        .split(',')
        .map(|q| Quantity::parse(q).ok_or_else(|| Failure::Usage(format!("unknown quantity '{q}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec {
        link,
        from: args.from,
        to: args.to,
        steps: args.steps,
        quantities,
    };
    spec.validate()?;
    cfg.validate()?;
    let csv = run_sweep(&spec, &cfg).map_err(runtime)?;
    write_out(args.out.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

/// Replaces `piN` by `-(i/2) thN`, the constraint surface.
fn impose_constraints(e: &Expr) -> Expr {
    match e {
        Expr::Gen(GenKind::Pi, k) => Expr::Product(vec![Expr::Num(-0.5), Expr::I, Expr::Gen(GenKind::Theta, *k)]),
        Expr::Neg(x) => Expr::Neg(Box::new(impose_constraints(x))),
        Expr::Product(fs) => Expr::Product(fs.iter().map(impose_constraints).collect()),
        Expr::Sum(first, rest) => Expr::Sum(
            Box::new(impose_constraints(first)),
            rest.iter().map(|(op, x)| (*op, impose_constraints(x))).collect(),
        ),
        other => other.clone(),
    }
}

fn eval(args: EvalArgs) -> Result<ExitCode, Failure> {
    let cfg = args.params.config()?;
    let ast = parse_expression(&args.expr).map_err(|e| Failure::Usage(e.to_string()))?;
    let (t, p) = ast.max_generators();
    let value = if args.star {
        if t > 4 || p > 4 {
            return Err(Failure::Usage("the star product acts on th1..th4 (pi1..pi4 are constrained)".into()));
        }
        cfg.validate()?;
        let alg = GeneratorSet::numbered("th", 4).map_err(runtime)?;
        let form = SymmetricForm::nac(&alg, cfg.hbar, cfg.c, cfg.d).map_err(runtime)?;
        let star = Star::new(form);
        evaluate(&impose_constraints(&ast), &alg, &cfg.params(), Some(&star)).map_err(runtime)?
    } else {
        let n = t.max(p).max(1);
        let alg = if p > 0 {
            GeneratorSet::phase_space(n)
        } else {
            GeneratorSet::numbered("th", n)
        }
        .map_err(|e| Failure::Usage(e.to_string()))?;
        evaluate(&ast, &alg, &cfg.params(), None).map_err(runtime)?
    };
    println!("{}", format_element(&value));
    Ok(ExitCode::SUCCESS)
}

fn parse_point(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("point '{s}' must look like c,d"));
    let (c, d) = s.split_once(',').ok_or_else(bad)?;
    let c: f64 = c.trim().parse().map_err(|_| bad())?;
    let d: f64 = d.trim().parse().map_err(|_| bad())?;
    if c.abs() >= 1.0 || d.abs() >= 1.0 {
        return Err(Failure::Usage(format!("point '{s}' must satisfy |c|, |d| < 1 (units of hbar)")));
    }
    Ok((c, d))
}

fn verify(args: VerifyArgs) -> Result<ExitCode, Failure> {
    let grid = Grid::parse(&args.grid).ok_or_else(|| Failure::Usage(format!("unknown grid '{}'", args.grid)))?;
    let tol = Tolerances::from_env().map_err(|e| Failure::Usage(format!("{TOL_ENV}: {e}")))?;
    let check = ScenarioConfig::new(args.hbar, args.omega, 0.0, 0.0);
    check.validate()?;
    let mut opts = VerifyOptions {
        grid,
        tol,
        hbar: args.hbar,
        omega: args.omega,
        perturb_hodge: args.perturb_hodge,
        extra_points: args.points.iter().map(|s| parse_point(s)).collect::<Result<_, _>>()?,
        ..Default::default()
    };
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    let report = verify_suite(&opts).map_err(runtime)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for r in &report.results {
        println!("{}", r.line());
    }
    let failed = report.results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", report.results.len() - failed, report.results.len());
    if let Some(p) = &args.json {
        let text = serde_json::to_string_pretty(&report).map_err(runtime)?;
        write_out(Some(p), &(text + "\n"))?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scenario {
            which: ScenarioKind::Nac(a),
        } => scenario(a),
        Command::Sweep(a) => sweep(a),
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
