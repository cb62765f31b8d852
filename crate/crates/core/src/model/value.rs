//! Values, domains and value ranges: the atoms every variable is built from.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

/// Grid points and parsed reals are snapped to this many decimals so that
/// `lo + k * step` and a textual `0.3` denote the same value.
const REAL_DECIMALS: f64 = 1e12;

/// Tolerance used when deciding whether a real lies on a grid or in a range.
pub const REAL_TOL: f64 = 1e-9;

pub(crate) fn snap(x: f64) -> f64 {
    let s = (x * REAL_DECIMALS).round() / REAL_DECIMALS;
    // avoid serializing "-0"
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// A single variable value.
///
/// Reals are compared by their bit pattern ordering (`f64::total_cmp`), so
/// `Value` is usable as a map key (lookup tables are keyed by input tuples).
#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Label(String),
}

impl Value {
    fn variant_rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Real(_) => 2,
            Value::Label(_) => 3,
        }
    }

    /// Numeric reading of the value, if it has one. Labels have no
    /// intrinsic number; use [`Domain::rank`] for their position.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::Label(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Int(0) => Some(false),
            Value::Int(1) => Some(true),
            _ => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Label(a), Value::Label(b)) => a.cmp(b),
            _ => self.variant_rank().cmp(&other.variant_rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.variant_rank().hash(state);
        match self {
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Real(r) => r.to_bits().hash(state),
            Value::Label(l) => l.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", u8::from(*b)),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Label(l) => f.write_str(l),
        }
    }
}

/// The finite (or finitely discretized) set of values a variable may take.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Boolean,
    IntegerRange { lo: i64, hi: i64 },
    /// Continuous quantity sampled at `lo, lo + step, ...` up to `hi`.
    RealGrid { lo: f64, hi: f64, step: f64 },
    /// Ordered labels; declaration order is the domain order.
    Enumerated(Vec<String>),
}

impl Domain {
    /// Structural problems with the domain itself.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Domain::Boolean => Ok(()),
            Domain::IntegerRange { lo, hi } => {
                if lo <= hi {
                    Ok(())
                } else {
                    Err(format!("empty integer range {lo}..{hi}"))
                }
            }
            Domain::RealGrid { lo, hi, step } => {
                if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
                    Err("real grid bounds must be finite".into())
                } else if *step <= 0.0 {
                    Err(format!("real grid step must be positive, got {step}"))
                } else if lo > hi {
                    Err(format!("empty real grid {lo}..{hi}"))
                } else {
                    Ok(())
                }
            }
            Domain::Enumerated(labels) => {
                if labels.is_empty() {
                    return Err("enumerated domain has no labels".into());
                }
                let mut seen = BTreeSet::new();
                for l in labels {
                    if !seen.insert(l) {
                        return Err(format!("duplicate label `{l}`"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of points in the domain.
    pub fn size(&self) -> u128 {
        match self {
            Domain::Boolean => 2,
            Domain::IntegerRange { lo, hi } => (*hi as i128 - *lo as i128 + 1).max(0) as u128,
            Domain::RealGrid { lo, hi, step } => grid_points(*lo, *hi, *step) as u128,
            Domain::Enumerated(labels) => labels.len() as u128,
        }
    }

    /// All values in domain order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Boolean => vec![Value::Bool(false), Value::Bool(true)],
            Domain::IntegerRange { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Domain::RealGrid { lo, hi, step } => (0..grid_points(*lo, *hi, *step))
                .map(|k| Value::Real(snap(lo + k as f64 * step)))
                .collect(),
            Domain::Enumerated(labels) => labels.iter().cloned().map(Value::Label).collect(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        !matches!(self, Domain::Enumerated(_))
    }

    /// Position of `v` on the domain's numeric axis: the value itself for
    /// numeric domains, the declaration index for labels.
    pub fn rank(&self, v: &Value) -> Option<f64> {
        match (self, v) {
            (Domain::Enumerated(labels), Value::Label(l)) => {
                labels.iter().position(|x| x == l).map(|i| i as f64)
            }
            (Domain::Enumerated(_), _) => None,
            (_, v) => v.as_f64(),
        }
    }

    /// Smallest and largest numeric rank.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Domain::Boolean => (0.0, 1.0),
            Domain::IntegerRange { lo, hi } => (*lo as f64, *hi as f64),
            Domain::RealGrid { lo, hi, step } => {
                let n = grid_points(*lo, *hi, *step);
                (*lo, snap(lo + (n.saturating_sub(1)) as f64 * step))
            }
            Domain::Enumerated(labels) => (0.0, labels.len().saturating_sub(1) as f64),
        }
    }

    /// Exact membership: grid points only for real grids.
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Boolean, Value::Bool(_)) => true,
            (Domain::IntegerRange { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (Domain::RealGrid { lo, hi, step }, Value::Real(r)) => {
                if *r < lo - REAL_TOL || *r > hi + REAL_TOL {
                    return false;
                }
                let k = ((r - lo) / step).round();
                (lo + k * step - r).abs() <= REAL_TOL * step.max(1.0)
            }
            (Domain::Enumerated(labels), Value::Label(l)) => labels.contains(l),
            _ => false,
        }
    }

    /// Membership for computed (criterion) values: reals only need to fall
    /// inside the grid's bounds.
    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::RealGrid { lo, hi, .. }, Value::Real(r)) => {
                *r >= lo - REAL_TOL && *r <= hi + REAL_TOL
            }
            _ => self.contains(v),
        }
    }

    /// Convert a computed number into this domain's value representation.
    pub fn coerce(&self, x: f64) -> Option<Value> {
        if !x.is_finite() {
            return None;
        }
        let v = match self {
            Domain::Boolean => {
                if x == 0.0 {
                    Value::Bool(false)
                } else if x == 1.0 {
                    Value::Bool(true)
                } else {
                    return None;
                }
            }
            Domain::IntegerRange { .. } => {
                let r = x.round();
                if (r - x).abs() > REAL_TOL {
                    return None;
                }
                Value::Int(r as i64)
            }
            Domain::RealGrid { .. } => Value::Real(x),
            Domain::Enumerated(labels) => {
                let r = x.round();
                if (r - x).abs() > REAL_TOL || r < 0.0 || r as usize >= labels.len() {
                    return None;
                }
                Value::Label(labels[r as usize].clone())
            }
        };
        self.admits(&v).then_some(v)
    }

    /// Parse a textual value in this domain. Reals are snapped to the grid.
    pub fn parse_value(&self, s: &str) -> Option<Value> {
        let v = match self {
            Domain::Boolean => match s {
                "0" | "false" => Value::Bool(false),
                "1" | "true" => Value::Bool(true),
                _ => return None,
            },
            Domain::IntegerRange { .. } => Value::Int(s.parse().ok()?),
            Domain::RealGrid { lo, step, .. } => {
                let r: f64 = s.parse().ok()?;
                if !r.is_finite() {
                    return None;
                }
                let k = ((r - lo) / step).round();
                let g = snap(lo + k * step);
                if (g - r).abs() <= REAL_TOL * step.max(1.0) {
                    Value::Real(g)
                } else {
                    Value::Real(snap(r))
                }
            }
            Domain::Enumerated(_) => Value::Label(s.to_string()),
        };
        self.admits(&v).then_some(v)
    }
}

fn grid_points(lo: f64, hi: f64, step: f64) -> u64 {
    if step <= 0.0 || lo > hi {
        return 0;
    }
    ((hi - lo) / step + REAL_TOL).floor() as u64 + 1
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Boolean => f.write_str("bool"),
            Domain::IntegerRange { lo, hi } => write!(f, "int[{lo}..{hi}]"),
            Domain::RealGrid { lo, hi, step } => write!(f, "real[{lo}..{hi};{step}]"),
            Domain::Enumerated(labels) => write!(f, "enum{{{}}}", labels.join(",")),
        }
    }
}

/// A subset of a domain: either a closed numeric interval over the domain's
/// rank axis, or an explicit value set. Both edges of an interval are
/// inclusive.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueRange {
    Interval { lo: f64, hi: f64 },
    Set(BTreeSet<Value>),
}

impl ValueRange {
    pub fn contains(&self, domain: &Domain, v: &Value) -> bool {
        match self {
            ValueRange::Interval { lo, hi } => match domain.rank(v) {
                Some(x) => x >= lo - REAL_TOL && x <= hi + REAL_TOL,
                None => false,
            },
            ValueRange::Set(set) => set.contains(v),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ValueRange::Interval { lo, hi } => lo > hi,
            ValueRange::Set(set) => set.is_empty(),
        }
    }

    /// Whether every point of the range is inside `domain`.
    pub fn within(&self, domain: &Domain) -> bool {
        match self {
            ValueRange::Interval { lo, hi } => {
                let (dlo, dhi) = domain.bounds();
                *lo >= dlo - REAL_TOL && *hi <= dhi + REAL_TOL
            }
            ValueRange::Set(set) => set.iter().all(|v| domain.contains(v)),
        }
    }

    /// Whether some domain point lies in the range.
    pub fn meets(&self, domain: &Domain) -> bool {
        match self {
            ValueRange::Set(set) => set.iter().any(|v| domain.contains(v)),
            ValueRange::Interval { lo, hi } => {
                if domain.size() <= 1 << 16 {
                    domain.values().iter().any(|v| self.contains(domain, v))
                } else {
                    let (dlo, dhi) = domain.bounds();
                    lo <= hi && *hi >= dlo && *lo <= dhi
                }
            }
        }
    }

    /// Whether `self` contains every point of `other` (checked on the
    /// domain's points).
    pub fn covers(&self, domain: &Domain, other: &ValueRange) -> bool {
        match (self, other) {
            (ValueRange::Interval { lo, hi }, ValueRange::Interval { lo: l2, hi: h2 }) => {
                lo <= l2 && h2 <= hi
            }
            _ => domain
                .values()
                .iter()
                .filter(|v| other.contains(domain, v))
                .all(|v| self.contains(domain, v)),
        }
    }
}

impl fmt::Display for ValueRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueRange::Interval { lo, hi } => write!(f, "[{lo}..{hi}]"),
            ValueRange::Set(set) => {
                let items: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                write!(f, "{{{}}}", items.join(","))
            }
        }
    }
}
