//! `bicub`: integrate `G(x, y)` over `a <= x <= b, l(x) <= y <= u(x)` from the
//! command line.
//!
//! Exit codes: 0 on success, 2 on a usage error, 3 on a numerical error.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bicubature::bounds::{BoundOverrides, SamplingConfig};
use bicubature::problem_file::{parse_bounds_file, ProblemSpec};
use bicubature::report::{self, display6};
use bicubature::{controller, engine, get_rule, ControlConfig, Error, Integrand, Prepared, Region, Target, TargetKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "bicub", version, about = "Bivariate cubature with relative error control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a problem and print a report.
    Integrate(IntegrateArgs),
    /// Show a rule's order, error constant, nodes and weights.
    DescribeRule {
        /// One of trapezium, simpson, gauss_legendre_2.
        name: String,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        out: Output,
    },
    /// Normalize a problem and print M, D and the derivative bounds without integrating.
    CheckBounds {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value = "simpson")]
        rule: String,
        /// Also plan the grid for this tolerance.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "1e-16")]
        mu: f64,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        out: Output,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Structured,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Problem file (TOML with a, b, l_expr, u_expr, g_expr and an optional [bounds] table).
    #[arg(long, conflicts_with_all = ["g", "a", "b", "l", "u"])]
    problem: Option<PathBuf>,
    /// Integrand G(x, y).
    #[arg(long)]
    g: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Lower limit l(x).
    #[arg(long, allow_hyphen_values = true)]
    l: Option<String>,
    /// Upper limit u(x).
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    /// TOML file with any of M, D, deriv_sup_x, deriv_sup_y; overrides the estimates.
    #[arg(long)]
    bounds_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SamplingArgs {
    /// Sampling grid points per axis for M, D and the derivative bounds.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Factor applied to the estimated derivative bounds.
    #[arg(long, default_value_t = 1.1)]
    safety: f64,
}

#[derive(Args, Debug)]
struct IntegrateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value = "simpson")]
    rule: String,
    /// Working tolerance on the scaled integral; defaults to the relative target, else 1e-6.
    #[arg(long)]
    eps: Option<f64>,
    /// Unit roundoff bound.
    #[arg(long, default_value = "1e-16")]
    mu: f64,
    /// Refine until the relative error estimate is at most this.
    #[arg(long, conflicts_with = "target_abs")]
    target_rel: Option<f64>,
    /// Choose eps so that the absolute error bound is at most this.
    #[arg(long)]
    target_abs: Option<f64>,
    #[arg(long, default_value_t = 5)]
    max_refine: usize,
    /// Use compensated summation.
    #[arg(long)]
    compensated: bool,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    out: Output,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

struct LoadedProblem {
    spec: ProblemSpec,
    region: Region,
    integrand: Integrand,
    overrides: BoundOverrides,
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_problem(args: &ProblemArgs) -> Result<LoadedProblem, Failure> {
    let spec = match &args.problem {
        Some(path) => ProblemSpec::from_toml(&read(path)?)?,
        None => match (&args.g, args.a, args.b, &args.l, &args.u) {
            (Some(g), Some(a), Some(b), Some(l), Some(u)) => ProblemSpec {
                a,
                b,
                l_expr: l.clone(),
                u_expr: u.clone(),
                g_expr: g.clone(),
                bounds: BoundOverrides::default(),
            },
            _ => return Err(usage("give either --problem FILE or all of --g, --a, --b, --l and --u")),
        },
    };
    let overrides = match &args.bounds_file {
        Some(path) => parse_bounds_file(&read(path)?)?,
        None => BoundOverrides::default(),
    };
    let (region, integrand) = spec.build()?;
    Ok(LoadedProblem {
        spec,
        region,
        integrand,
        overrides,
    })
}

fn sampling(args: &SamplingArgs) -> SamplingConfig {
    SamplingConfig {
        grid_points_per_axis: args.grid,
        safety_factor: args.safety,
        ..Default::default()
    }
}

fn problem_json(spec: &ProblemSpec) -> Value {
    json!({ "a": spec.a, "b": spec.b, "l_expr": spec.l_expr, "u_expr": spec.u_expr, "g_expr": spec.g_expr })
}

fn render(doc: &Value, out: Output) -> String {
    match out {
        Output::Structured => serde_json::to_string_pretty(doc).expect("json serializes") + "\n",
        Output::Text => {
            let mut text = String::new();
            flatten_text("", doc, &mut text);
            text
        }
    }
}

fn flatten_text(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_text(&key, child, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, child) in items.iter().enumerate() {
                flatten_text(&format!("{prefix}[{i}]"), child, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}: {s}\n")),
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

fn integrate(args: IntegrateArgs) -> Result<String, Failure> {
    let started = Instant::now();
    let loaded = load_problem(&args.problem)?;
    let target = match (args.target_rel, args.target_abs) {
        (Some(v), None) => Some(Target {
            kind: TargetKind::Relative,
            value: v,
        }),
        (None, Some(v)) => Some(Target {
            kind: TargetKind::Absolute,
            value: v,
        }),
        _ => None,
    };
    if let Some(t) = target {
        if !(t.value > 0.0 && t.value.is_finite()) {
            return Err(usage(format!("target must be a positive number, got {}", t.value)));
        }
    }
    let eps = args.eps.or(args.target_rel).unwrap_or(1e-6);
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(usage(format!("--eps must be a positive number, got {eps}")));
    }
    let cfg = ControlConfig {
        eps,
        mu: args.mu,
        rule_name: args.rule.clone(),
        target,
        max_refinements: args.max_refine,
        sampling: sampling(&args.sampling),
        overrides: loaded.overrides,
        compensated: args.compensated,
    };
    let rep = controller::refine_until(&loaded.region, &loaded.integrand, &cfg)?;
    let resolved = json!({
        "problem": problem_json(&loaded.spec),
        "control": cfg,
        "problem_file_bounds": loaded.spec.bounds,
    });
    let wall = started.elapsed().as_secs_f64();
    let doc = report::to_structured(
        &rep,
        vec![("config".into(), resolved), ("wall_time_s".into(), json!(wall))],
    );
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    Ok(match args.out {
        Output::Structured => render(&doc, Output::Structured),
        Output::Text => {
            let mut text = format!(
                "value: {} ({:?})\nmode: {}\nabs_bound: {}\nrel_estimate: {}\n---\n",
                display6(rep.value),
                rep.value,
                doc["mode"].as_str().unwrap_or("?"),
                display6(rep.abs_bound),
                display6(rep.rel_estimate)
            );
            text.push_str(&report::to_text(&rep, vec![]));
            flatten_text("config", &doc["config"], &mut text);
            text.push_str(&format!("wall_time_s: {wall:.3}\n"));
            text
        }
    })
}

fn describe_rule(name: &str, out: Output) -> Result<String, Failure> {
    let rule = get_rule(name)?;
    let doc = json!({
        "name": rule.name,
        "order": rule.order,
        "err_const": rule.err_const,
        "panel_nodes": rule.panel_nodes,
        "panel_weights": rule.panel_weights,
        "shares_endpoints": rule.shares_endpoints(),
        "nodes_for_10_panels": rule.composite_len(10),
    });
    Ok(render(&doc, out))
}

fn check_bounds(
    problem: ProblemArgs,
    sampling_args: SamplingArgs,
    rule: String,
    eps: Option<f64>,
    mu: f64,
    out: Output,
) -> Result<String, Failure> {
    let loaded = load_problem(&problem)?;
    let cfg = ControlConfig {
        mu,
        rule_name: rule,
        sampling: sampling(&sampling_args),
        overrides: loaded.overrides,
        ..Default::default()
    };
    let prep = Prepared::new(&loaded.region, &loaded.integrand, &cfg)?;
    let np = &prep.problem;
    let mut doc = json!({
        "problem": problem_json(&loaded.spec),
        "rule": prep.rule.name,
        "M": np.big_m,
        "grid_sup_abs_integrand": np.sup_estimate,
        "m1": np.m1,
        "m2": np.m2,
        "l1": np.l1,
        "u1": np.u1,
        "bounds": prep.bounds,
        "mu": mu,
        "roundoff_floor": prep.roundoff_floor(),
        "sampling": cfg.sampling,
    });
    if let Some(eps) = eps {
        let plan = prep.plan(eps)?;
        doc["plan"] = json!({
            "eps": eps,
            "h": plan.h,
            "n1": plan.n1,
            "h_star": plan.h_star,
            "max_k_star": plan.max_k_star(),
            "total_nodes": plan.total_nodes(&prep.rule),
            "abs_bound": np.big_m * eps,
            "roundoff_bound": engine::roundoff_bound(1.0, prep.bounds.d, mu),
        });
    }
    Ok(render(&doc, out))
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Integrate(args) => integrate(args),
        Command::DescribeRule { name, out } => describe_rule(&name, out),
        Command::CheckBounds {
            problem,
            sampling,
            rule,
            eps,
            mu,
            out,
        } => check_bounds(problem, sampling, rule, eps, mu, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
