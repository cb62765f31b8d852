//! `ropas` command-line tool.
//!
//! Exit codes: 0 success, 1 domain failure (invalid or infeasible input,
//! solver/oracle mismatch), 2 usage, I/O or syntax error. Reports go to
//! stdout, diagnostics to stderr.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ropas_core::decision::rank_alternatives;
use ropas_core::io::{
    parse_decision_model, parse_document, parse_goal_graph, parse_model, parse_trace,
    serialize_model, write_report, ParseErrors, ReportFormat, Scenario,
};
use ropas_core::model::{enumerate_specifications_with_cap, DEFAULT_CAP};
use ropas_core::rop::{brute_force_oracle, encode_rdrp, solve_rop_with_cap, Rop, SolveError};
use ropas_core::runtime::{
    run_simulation, validate_constraints, validate_triggers, SimulationConfig, SimulationStatus,
    Widening,
};

#[derive(Parser)]
#[command(name = "ropas", version, about = "Requirements optimisation and adaptation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Human => ReportFormat::Human,
            Format::Machine => ReportFormat::Machine,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a model, goal graph or decision model document.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
    /// List every feasible specification.
    Enumerate {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
    /// Find all optimal specifications.
    Solve {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        /// Cross-check against exhaustive evaluation; exit 1 on mismatch.
        #[arg(long)]
        oracle: bool,
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
    /// Translate a goal graph into a model whose optima are its
    /// minimum-size satisfying selections.
    EncodeRdrp { goals: PathBuf },
    /// Rank the alternatives of a decision model by expected utility.
    Rank {
        decision: PathBuf,
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
    /// Replay an event trace against a model.
    Simulate {
        model: PathBuf,
        trace: PathBuf,
        /// Ticks spent adapting before a new specification takes effect.
        #[arg(long, default_value_t = 0)]
        duration: u64,
        /// Widen tolerable ranges: `criterion=band` or `criterion=below,above`.
        #[arg(long, value_parser = parse_relax)]
        relax: Vec<(String, Widening)>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(long, value_enum, default_value = "machine")]
        format: Format,
    },
}

fn parse_relax(s: &str) -> Result<(String, Widening), String> {
    let (crit, band) = s
        .split_once('=')
        .ok_or_else(|| format!("expected criterion=band, got `{s}`"))?;
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| format!("`{x}` is not a nonnegative number"))
    };
    let w = match band.split_once(',') {
        Some((b, a)) => Widening {
            below: num(b)?,
            above: num(a)?,
        },
        None => {
            let v = num(band)?;
            Widening { below: v, above: v }
        }
    };
    if crit.is_empty() {
        return Err("empty criterion id".into());
    }
    Ok((crit.to_string(), w))
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn located(path: &Path, errors: &ParseErrors) -> String {
    errors
        .0
        .iter()
        .map(|e| format!("{}: {e}", path.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Syntax errors exit 2; anything only the semantic pass rejects exits 1.
fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = read(path)?;
    parse_document(&text).map_err(|e| usage(located(path, &e)))?;
    parse_model(&text).map_err(|e| domain(located(path, &e)))
}

fn solve_error(e: SolveError) -> Failure {
    match e {
        SolveError::Infeasible => domain("infeasible: no specification satisfies the constraints"),
        other => domain(other.to_string()),
    }
}

fn validate(path: &Path, format: Format) -> Result<String, Failure> {
    let text = read(path)?;
    let doc = parse_document(&text).map_err(|e| usage(located(path, &e)))?;
    let mut parts = Vec::new();
    if doc.model.is_some() {
        let s = parse_model(&text).map_err(|e| domain(located(path, &e)))?;
        validate_triggers(&s.model, &s.triggers).map_err(|e| domain(format!("{}: {e}", path.display())))?;
        validate_constraints(&s.model, &s.constraints)
            .map_err(|e| domain(format!("{}: {e}", path.display())))?;
        let m = &s.model;
        parts.push((
            "model",
            format!(
                "criteria={} parameters={} monitored={} change={} depends={} triggers={} constraints={}",
                m.criteria.len(),
                m.parameters.len(),
                m.monitored.len(),
                m.change_scope.len(),
                m.depends.len(),
                s.triggers.len(),
                s.constraints.len()
            ),
        ));
    }
    if doc.goal_graph.is_some() {
        let g = parse_goal_graph(&text).map_err(|e| domain(located(path, &e)))?;
        parts.push((
            "goalgraph",
            format!(
                "atoms={} refinements={} conflicts={} mandatory={}",
                g.atoms.len(),
                g.refinements.len(),
                g.conflicts.len(),
                g.mandatory.len()
            ),
        ));
    }
    if doc.decision.is_some() {
        let dm = parse_decision_model(&text).map_err(|e| domain(located(path, &e)))?;
        parts.push((
            "decision",
            format!("attributes={} alternatives={}", dm.attributes.len(), dm.alternatives.len()),
        ));
    }
    if parts.is_empty() {
        return Err(domain(format!("{}: nothing to validate", path.display())));
    }
    let mut out = String::new();
    match format {
        Format::Machine => {
            let _ = writeln!(out, "ropas-validate v1");
            for (kind, counts) in &parts {
                let _ = writeln!(out, "{kind} valid {counts}");
            }
        }
        Format::Human => {
            for (kind, counts) in &parts {
                let _ = writeln!(out, "{}: valid {kind} ({})", path.display(), counts.replace(' ', ", "));
            }
        }
    }
    Ok(out)
}

fn enumerate(path: &Path, cap: u128, format: Format) -> Result<String, Failure> {
    let s = load_scenario(path)?;
    let specs = enumerate_specifications_with_cap(&s.model, &s.model.initial_exogenous(), cap)
        .map_err(|e| domain(e.to_string()))?;
    let mut out = String::new();
    match format {
        Format::Machine => {
            let _ = writeln!(out, "ropas-enumerate v1");
            let _ = writeln!(out, "count={}", specs.len());
            for spec in &specs {
                let _ = writeln!(out, "spec {spec}");
            }
        }
        Format::Human => {
            let _ = writeln!(out, "{} feasible specifications", specs.len());
            for (i, spec) in specs.iter().enumerate() {
                let _ = writeln!(out, "  {:>4}  {spec}", i + 1);
            }
        }
    }
    Ok(out)
}

fn solve(path: &Path, cap: u128, oracle: bool, format: Format) -> Result<String, Failure> {
    let s = load_scenario(path)?;
    let rule = s.model.decision_rule.clone();
    let rop = Rop::from_model(s.model);
    let sol = solve_rop_with_cap(&rop, cap).map_err(solve_error)?;
    if oracle {
        let reference = brute_force_oracle(&rop).map_err(solve_error)?;
        if reference != sol {
            return Err(domain(format!(
                "oracle mismatch: solver found {} optima at {}, oracle found {} at {}",
                sol.optima.len(),
                sol.objective,
                reference.optima.len(),
                reference.objective
            )));
        }
    }
    let mut out = String::new();
    match format {
        Format::Machine => {
            let _ = writeln!(out, "ropas-solve v1");
            let _ = writeln!(out, "objective {rule}={}", sol.objective);
            if oracle {
                let _ = writeln!(out, "oracle agree");
            }
            for spec in &sol.optima {
                let _ = writeln!(out, "optimum {spec}");
            }
        }
        Format::Human => {
            let _ = writeln!(
                out,
                "{} optimal specification(s) with {rule} = {}",
                sol.optima.len(),
                sol.objective
            );
            for spec in &sol.optima {
                let _ = writeln!(out, "  {spec}");
            }
            if oracle {
                let _ = writeln!(out, "Exhaustive check agrees.");
            }
        }
    }
    Ok(out)
}

fn encode(path: &Path) -> Result<String, Failure> {
    let text = read(path)?;
    parse_document(&text).map_err(|e| usage(located(path, &e)))?;
    let graph = parse_goal_graph(&text).map_err(|e| domain(located(path, &e)))?;
    let rop = encode_rdrp(&graph).map_err(|e| domain(e.to_string()))?;
    Ok(serialize_model(&Scenario {
        model: rop.model,
        triggers: Vec::new(),
        constraints: Vec::new(),
        goal_graph: None,
    }))
}

fn rank(path: &Path, format: Format) -> Result<String, Failure> {
    let text = read(path)?;
    parse_document(&text).map_err(|e| usage(located(path, &e)))?;
    let dm = parse_decision_model(&text).map_err(|e| domain(located(path, &e)))?;
    let ranking = rank_alternatives(&dm).map_err(|e| domain(e.to_string()))?;
    let mut out = String::new();
    match format {
        Format::Machine => {
            let _ = writeln!(out, "ropas-rank v1");
            for (i, g) in ranking.groups.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "rank position={} eu={:?} alternatives={}",
                    i + 1,
                    g.expected_utility,
                    g.alternatives.join(",")
                );
            }
        }
        Format::Human => {
            for (i, g) in ranking.groups.iter().enumerate() {
                let _ = writeln!(out, "{:>3}. {:<24} EU = {:.6}", i + 1, g.alternatives.join(" = "), g.expected_utility);
            }
        }
    }
    Ok(out)
}

struct SimulateArgs {
    duration: u64,
    relax: Vec<(String, Widening)>,
    horizon: Option<u64>,
    cap: u128,
    format: Format,
}

fn simulate(model: &Path, trace: &Path, args: SimulateArgs) -> Result<String, Failure> {
    let s = load_scenario(model)?;
    let text = read(trace)?;
    let events = parse_trace(&text).map_err(|e| usage(located(trace, &e)))?;
    let config = SimulationConfig {
        adaptation_duration: args.duration,
        triggers: s.triggers,
        constraints: s.constraints,
        relaxation: args.relax.into_iter().collect::<BTreeMap<_, _>>(),
        horizon: args.horizon,
        cap: args.cap,
    };
    let (timeline, metrics) = run_simulation(&s.model, &events, &config).map_err(|e| domain(e.to_string()))?;
    let report = write_report(&timeline, &metrics, args.format.into());
    if let SimulationStatus::NoFeasibleAdaptation { tick } = timeline.status {
        print!("{report}");
        return Err(domain(format!("halted at tick {tick}: no feasible admissible specification")));
    }
    Ok(report)
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Validate { file, format } => validate(&file, format),
        Command::Enumerate { model, cap, format } => enumerate(&model, cap, format),
        Command::Solve {
            model,
            cap,
            oracle,
            format,
        } => solve(&model, cap, oracle, format),
        Command::EncodeRdrp { goals } => encode(&goals),
        Command::Rank { decision, format } => rank(&decision, format),
        Command::Simulate {
            model,
            trace,
            duration,
            relax,
            horizon,
            cap,
            format,
        } => simulate(
            &model,
            &trace,
            SimulateArgs {
                duration,
                relax,
                horizon,
                cap,
                format,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
