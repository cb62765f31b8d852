//! Discrete-time replay of an adaptive system against an event trace.
//!
//! Each tick applies its events. An event is visible when it targets a
//! monitored variable and its value lies in the detectable range; visible
//! events update the perceived exogenous state, every event updates the true
//! one. Tick 0 and every tick with a visible event are analysis ticks: the
//! perceived Problem Instance is evaluated, triggers outside their tolerable
//! range are recorded, and the best admissible specification is selected.
//! When it differs from the running one the system switches, either at once
//! (duration 0) or after an adaptation period during which the old
//! specification keeps running and at whose end selection is redone.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{
    BoolExpr, EvalError, Exogenous, Model, ProblemInstance, Specification, Value, ValueRange,
    VarKind, DEFAULT_CAP, REAL_TOL,
};
use crate::rop::{solve_filtered, solve_rop_with_cap, Rop, SolveError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is not an exogenous variable")]
    NotExogenous(String),
    #[error("line {line}: value `{value}` is outside the domain of `{variable}`")]
    BadValue {
        line: usize,
        variable: String,
        value: String,
    },
    #[error("trigger `{id}`: {message}")]
    BadTrigger { id: String, message: String },
    #[error("widening of `{criterion}` escapes its domain")]
    WideningEscapesDomain { criterion: String },
    #[error("no trigger watches `{0}`")]
    NothingToRelax(String),
    #[error("evolution constraint: {0}")]
    BadConstraint(String),
    #[error("event at tick {tick} lies beyond the horizon {horizon}")]
    BeyondHorizon { tick: u64, horizon: u64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// One line of a trace, before binding to a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub variable: String,
    pub value: String,
    /// Source line, 0 when built in memory.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventTrace {
    pub events: Vec<TraceEvent>,
}

impl EventTrace {
    pub fn push(&mut self, tick: u64, variable: impl Into<String>, value: impl Into<String>) {
        self.events.push(TraceEvent {
            tick,
            variable: variable.into(),
            value: value.into(),
            line: 0,
        });
    }
}

/// Fires when its criterion's value leaves `range` (edges inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct Trigger {
    pub id: String,
    pub criterion: String,
    pub range: ValueRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Widening {
    pub below: f64,
    pub above: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvolutionConstraint {
    /// No switch from a spec matching `from` to one matching `to`. Patterns
    /// are partial assignments.
    ForbiddenTransition { from: Specification, to: Specification },
    /// At most `k` parameters change per switch.
    MaxChanges(usize),
    /// `param` may not take `value` unless `unless` holds on the perceived
    /// exogenous values.
    ForbiddenValue {
        param: String,
        value: Value,
        unless: Option<BoolExpr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Visible,
    Ignored,
}

pub fn apply_monitoring_scope(model: &Model, variable: &str, value: &Value) -> Result<Visibility, RuntimeError> {
    match model.variable(variable) {
        None => Err(RuntimeError::UnknownVariable(variable.to_string())),
        Some((VarKind::Monitored, domain)) => {
            let m = model.monitored_variable(variable).expect("monitored");
            Ok(if m.detectable.contains(domain, value) {
                Visibility::Visible
            } else {
                Visibility::Ignored
            })
        }
        Some((VarKind::Change, _)) => Ok(Visibility::Ignored),
        Some(_) => Err(RuntimeError::NotExogenous(variable.to_string())),
    }
}

pub fn validate_triggers(model: &Model, triggers: &[Trigger]) -> Result<(), RuntimeError> {
    for t in triggers {
        let bad = |m: &str| RuntimeError::BadTrigger {
            id: t.id.clone(),
            message: m.to_string(),
        };
        let c = model
            .criterion(&t.criterion)
            .ok_or_else(|| bad(&format!("unknown criterion `{}`", t.criterion)))?;
        if t.range.is_empty() || !t.range.meets(&c.domain) {
            return Err(bad("tolerable range is empty"));
        }
    }
    Ok(())
}

/// Ids of the triggers whose criterion lies outside its tolerable range.
pub fn check_triggers(model: &Model, instance: &ProblemInstance, triggers: &[Trigger]) -> Vec<String> {
    triggers
        .iter()
        .filter(|t| {
            let domain = &model.criterion(&t.criterion).expect("validated trigger").domain;
            instance
                .get(&t.criterion)
                .map(|v| !t.range.contains(domain, v))
                .unwrap_or(false)
        })
        .map(|t| t.id.clone())
        .collect()
}

/// Widen tolerable ranges per criterion. Intervals grow by the band;
/// value sets gain every domain value within the band around them.
pub fn relax(
    model: &Model,
    triggers: &[Trigger],
    widening: &BTreeMap<String, Widening>,
) -> Result<Vec<Trigger>, RuntimeError> {
    validate_triggers(model, triggers)?;
    for c in widening.keys() {
        if !triggers.iter().any(|t| &t.criterion == c) {
            return Err(RuntimeError::NothingToRelax(c.clone()));
        }
    }
    let mut out = Vec::with_capacity(triggers.len());
    for t in triggers {
        let Some(w) = widening.get(&t.criterion) else {
            out.push(t.clone());
            continue;
        };
        let escapes = || RuntimeError::WideningEscapesDomain {
            criterion: t.criterion.clone(),
        };
        if !(w.below >= 0.0 && w.above >= 0.0) {
            return Err(escapes());
        }
        let domain = &model.criterion(&t.criterion).expect("validated").domain;
        let (dlo, dhi) = domain.bounds();
        let range = match &t.range {
            ValueRange::Interval { lo, hi } => {
                let (lo, hi) = (lo - w.below, hi + w.above);
                if lo < dlo - REAL_TOL || hi > dhi + REAL_TOL {
                    return Err(escapes());
                }
                ValueRange::Interval { lo, hi }
            }
            ValueRange::Set(values) => {
                let ranks: Vec<f64> = values.iter().filter_map(|v| domain.rank(v)).collect();
                let lo = ranks.iter().copied().fold(f64::INFINITY, f64::min) - w.below;
                let hi = ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max) + w.above;
                if lo < dlo - REAL_TOL || hi > dhi + REAL_TOL {
                    return Err(escapes());
                }
                let mut values = values.clone();
                for v in domain.values() {
                    let r = domain.rank(&v).expect("domain value");
                    if r >= lo - REAL_TOL && r <= hi + REAL_TOL {
                        values.insert(v);
                    }
                }
                ValueRange::Set(values)
            }
        };
        out.push(Trigger {
            id: t.id.clone(),
            criterion: t.criterion.clone(),
            range,
        });
    }
    Ok(out)
}

pub fn validate_constraints(model: &Model, constraints: &[EvolutionConstraint]) -> Result<(), RuntimeError> {
    let check_param = |id: &str, v: &Value| -> Result<(), RuntimeError> {
        let p = model
            .parameter(id)
            .ok_or_else(|| RuntimeError::BadConstraint(format!("unknown parameter `{id}`")))?;
        if p.domain.contains(v) {
            Ok(())
        } else {
            Err(RuntimeError::BadConstraint(format!("{v} outside the domain of `{id}`")))
        }
    };
    for c in constraints {
        match c {
            EvolutionConstraint::ForbiddenTransition { from, to } => {
                for (id, v) in from.0.iter().chain(&to.0) {
                    check_param(id, v)?;
                }
            }
            EvolutionConstraint::MaxChanges(k) => {
                if *k == 0 {
                    return Err(RuntimeError::BadConstraint("max_changes must be positive".into()));
                }
            }
            EvolutionConstraint::ForbiddenValue { param, value, unless } => {
                check_param(param, value)?;
                if let Some(e) = unless {
                    for v in e.vars() {
                        if model.monitored_variable(v).is_none() {
                            return Err(RuntimeError::BadConstraint(format!(
                                "`{v}` in unless-condition is not monitored"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn matches(pattern: &Specification, spec: &Specification) -> bool {
    pattern.0.iter().all(|(k, v)| spec.get(k) == Some(v))
}

fn condition_holds(model: &Model, e: &BoolExpr, exo: &Exogenous) -> bool {
    let lookup = |id: &str| {
        let v = exo.get(id)?.clone();
        let rank = model.variable(id).and_then(|(_, d)| d.rank(&v));
        Some((v, rank))
    };
    e.eval(&lookup).unwrap_or(false)
}

/// Whether switching from `current` to `candidate` respects every
/// evolution constraint.
pub fn admissible(
    model: &Model,
    current: &Specification,
    candidate: &Specification,
    constraints: &[EvolutionConstraint],
    perceived: &Exogenous,
) -> bool {
    if candidate == current {
        return true;
    }
    constraints.iter().all(|c| match c {
        EvolutionConstraint::ForbiddenTransition { from, to } => {
            !(matches(from, current) && matches(to, candidate))
        }
        EvolutionConstraint::MaxChanges(k) => current.distance(candidate) <= *k,
        EvolutionConstraint::ForbiddenValue { param, value, unless } => {
            candidate.get(param) != Some(value)
                || unless
                    .as_ref()
                    .map(|e| condition_holds(model, e, perceived))
                    .unwrap_or(false)
        }
    })
}

/// The optimal specification reachable from `current` under the evolution
/// constraints; ties go to the fewest parameter changes, then canonical
/// order. `None` when no admissible feasible specification exists.
pub fn select_adaptation(
    current: &Specification,
    rop: &Rop,
    constraints: &[EvolutionConstraint],
    cap: u128,
) -> Result<Option<Specification>, RuntimeError> {
    let accept = |s: &Specification| admissible(&rop.model, current, s, constraints, &rop.exogenous);
    match solve_filtered(rop, cap, &accept) {
        Ok(sol) => Ok(sol
            .optima
            .into_iter()
            .enumerate()
            .min_by_key(|(i, s)| (current.distance(s), *i))
            .map(|(_, s)| s)),
        Err(SolveError::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub adaptation_duration: u64,
    pub triggers: Vec<Trigger>,
    pub constraints: Vec<EvolutionConstraint>,
    pub relaxation: BTreeMap<String, Widening>,
    /// Ticks simulated; defaults to one past the last event (at least 1).
    pub horizon: Option<u64>,
    pub cap: u128,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            adaptation_duration: 0,
            triggers: Vec::new(),
            constraints: Vec::new(),
            relaxation: BTreeMap::new(),
            horizon: None,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodKind {
    Stability,
    Adaptation,
}

impl fmt::Display for PeriodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodKind::Stability => "stability",
            PeriodKind::Adaptation => "adaptation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerRecord {
    pub tick: u64,
    pub trigger: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgnoredEvent {
    pub tick: u64,
    pub variable: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    pub kind: PeriodKind,
    pub start: u64,
    /// Exclusive.
    pub end: u64,
    pub spec: Specification,
    /// Perceived Problem Instance at the latest analysis in the period.
    pub instance: ProblemInstance,
    pub fired: Vec<TriggerRecord>,
    pub ignored: Vec<IgnoredEvent>,
    /// One flag per tick: the running spec is omnisciently optimal.
    pub optimal: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimulationStatus {
    Completed,
    /// Halted: nothing feasible and admissible at `tick`.
    NoFeasibleAdaptation { tick: u64 },
}

impl fmt::Display for SimulationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulationStatus::Completed => f.write_str("completed"),
            SimulationStatus::NoFeasibleAdaptation { tick } => write!(f, "no-feasible-adaptation@{tick}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTimeline {
    pub horizon: u64,
    pub periods: Vec<Period>,
    pub status: SimulationStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub optimal_time_fraction: f64,
    pub trigger_count: usize,
    pub adaptation_tick_total: u64,
    pub ignored_event_count: usize,
}

struct Bound {
    tick: u64,
    variable: String,
    raw: String,
    value: Value,
}

fn bind(model: &Model, trace: &EventTrace) -> Result<Vec<Bound>, RuntimeError> {
    trace
        .events
        .iter()
        .map(|e| {
            let domain = match model.variable(&e.variable) {
                None => return Err(RuntimeError::UnknownVariable(e.variable.clone())),
                Some((VarKind::Monitored | VarKind::Change, d)) => d,
                Some(_) => return Err(RuntimeError::NotExogenous(e.variable.clone())),
            };
            let value = domain
                .parse_value(&e.value)
                .filter(|v| domain.contains(v))
                .ok_or_else(|| RuntimeError::BadValue {
                    line: e.line,
                    variable: e.variable.clone(),
                    value: e.value.clone(),
                })?;
            Ok(Bound {
                tick: e.tick,
                variable: e.variable.clone(),
                raw: e.value.clone(),
                value,
            })
        })
        .collect()
}

fn open(kind: PeriodKind, start: u64, spec: Specification, instance: ProblemInstance) -> Period {
    Period {
        kind,
        start,
        end: start,
        spec,
        instance,
        fired: Vec::new(),
        ignored: Vec::new(),
        optimal: Vec::new(),
    }
}

/// Replace the open period by `fresh`, which starts at `t`; records made at
/// tick `t` move along with it. Returns the closed period.
fn hand_over(period: &mut Period, mut fresh: Period, t: u64) -> Period {
    fresh.fired = period.fired.iter().filter(|r| r.tick == t).cloned().collect();
    period.fired.retain(|r| r.tick != t);
    fresh.ignored = period.ignored.iter().filter(|r| r.tick == t).cloned().collect();
    period.ignored.retain(|r| r.tick != t);
    std::mem::replace(period, fresh)
}

pub fn run_simulation(
    model: &Model,
    trace: &EventTrace,
    config: &SimulationConfig,
) -> Result<(SimulationTimeline, Metrics), RuntimeError> {
    let triggers = relax(model, &config.triggers, &config.relaxation)?;
    validate_constraints(model, &config.constraints)?;
    let events = bind(model, trace)?;
    let last = events.iter().map(|e| e.tick).max();
    let horizon = config
        .horizon
        .unwrap_or_else(|| last.map(|t| t + 1).unwrap_or(1))
        .max(1);
    if let Some(t) = last.filter(|t| *t >= horizon) {
        return Err(RuntimeError::BeyondHorizon { tick: t, horizon });
    }

    let cap = config.cap;
    let mut perceived = model.initial_exogenous();
    let mut truth = perceived.clone();
    let select = |current: &Specification, exo: &Exogenous| {
        select_adaptation(current, &Rop::new(model.clone(), exo.clone()), &config.constraints, cap)
    };
    let omniscient = |exo: &Exogenous| -> Result<Vec<Specification>, RuntimeError> {
        match solve_rop_with_cap(&Rop::new(model.clone(), exo.clone()), cap) {
            Ok(s) => Ok(s.optima),
            Err(SolveError::Infeasible) => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    };

    let mut periods: Vec<Period> = Vec::new();
    let mut status = SimulationStatus::Completed;
    let mut trigger_count = 0usize;
    let mut ignored_count = 0usize;

    let initial = match model.default_specification() {
        Some(d) => select(&d, &perceived)?,
        None => match solve_rop_with_cap(&Rop::new(model.clone(), perceived.clone()), cap) {
            Ok(s) => s.optima.into_iter().next(),
            Err(SolveError::Infeasible) => None,
            Err(e) => return Err(e.into()),
        },
    };
    let Some(mut current) = initial else {
        let timeline = SimulationTimeline {
            horizon,
            periods,
            status: SimulationStatus::NoFeasibleAdaptation { tick: 0 },
        };
        let metrics = Metrics {
            optimal_time_fraction: 0.0,
            trigger_count: 0,
            adaptation_tick_total: 0,
            ignored_event_count: 0,
        };
        return Ok((timeline, metrics));
    };
    let mut period = open(PeriodKind::Stability, 0, current.clone(), ProblemInstance::default());
    let mut adapt_until: Option<u64> = None;
    let mut optima = omniscient(&truth)?;
    let mut next = 0usize;

    'ticks: for t in 0..horizon {
        let mut visible = false;
        let mut truth_changed = false;
        while next < events.len() && events[next].tick == t {
            let e = &events[next];
            next += 1;
            if truth.get(&e.variable) != Some(&e.value) {
                truth.insert(e.variable.clone(), e.value.clone());
                truth_changed = true;
            }
            match apply_monitoring_scope(model, &e.variable, &e.value)? {
                Visibility::Visible => {
                    perceived.insert(e.variable.clone(), e.value.clone());
                    visible = true;
                }
                Visibility::Ignored => {
                    ignored_count += 1;
                    period.ignored.push(IgnoredEvent {
                        tick: t,
                        variable: e.variable.clone(),
                        value: e.raw.clone(),
                    });
                }
            }
        }
        if truth_changed {
            optima = omniscient(&truth)?;
        }

        if adapt_until == Some(t) {
            adapt_until = None;
            let Some(target) = select(&current, &perceived)? else {
                status = SimulationStatus::NoFeasibleAdaptation { tick: t };
                break 'ticks;
            };
            let instance = period.instance.clone();
            let fresh = open(PeriodKind::Stability, t, target.clone(), instance);
            periods.push(hand_over(&mut period, fresh, t));
            current = target;
        }

        if t == 0 || visible {
            let (instance, fired) = match model.evaluate(&current, &perceived) {
                Ok(instance) => {
                    let fired = check_triggers(model, &instance, &triggers);
                    (instance, fired)
                }
                // the value left the domain, so it is outside every tolerable range
                Err(EvalError::OutOfRange { var, .. }) => {
                    let fired = triggers.iter().filter(|t| t.criterion == var).map(|t| t.id.clone()).collect();
                    (ProblemInstance::default(), fired)
                }
                Err(e) => return Err(e.into()),
            };
            trigger_count += fired.len();
            period
                .fired
                .extend(fired.into_iter().map(|trigger| TriggerRecord { tick: t, trigger }));
            period.instance = instance.clone();
            if adapt_until.is_none() {
                let Some(target) = select(&current, &perceived)? else {
                    status = SimulationStatus::NoFeasibleAdaptation { tick: t };
                    break 'ticks;
                };
                if target != current {
                    let d = config.adaptation_duration;
                    let fresh = if d == 0 {
                        open(PeriodKind::Stability, t, target.clone(), instance)
                    } else {
                        adapt_until = Some(t + d);
                        open(PeriodKind::Adaptation, t, current.clone(), instance)
                    };
                    let done = hand_over(&mut period, fresh, t);
                    if done.start < t {
                        periods.push(done);
                    }
                    if d == 0 {
                        current = target;
                    }
                }
            }
        }

        period.optimal.push(optima.contains(&current));
        period.end = t + 1;
    }
    if period.end > period.start || periods.is_empty() {
        periods.push(period);
    }

    let optimal_ticks: usize = periods
        .iter()
        .map(|p| p.optimal.iter().filter(|b| **b).count())
        .sum();
    let adaptation_tick_total = periods
        .iter()
        .filter(|p| p.kind == PeriodKind::Adaptation)
        .map(|p| p.end - p.start)
        .sum();
    let metrics = Metrics {
        optimal_time_fraction: optimal_ticks as f64 / horizon as f64,
        trigger_count,
        adaptation_tick_total,
        ignored_event_count: ignored_count,
    };
    Ok((
        SimulationTimeline {
            horizon,
            periods,
            status,
        },
        metrics,
    ))
}
