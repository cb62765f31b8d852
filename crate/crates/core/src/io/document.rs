use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{content, ParseError, ParseErrors, MODEL_HEADER};
use crate::decision::{Alternative, DecisionModel, Lottery, Transform, Utility};
use crate::entailment::{GoalGraph, Refinement};
use crate::model::{
    validate_model, BoolExpr, ChangeVariable, Comparator, Criterion, CriterionKind, Depend,
    DependForm, Domain, Model, MonitoredVariable, Parameter, Preference, Specification, Value,
    ValueRange,
};
use crate::runtime::{EvolutionConstraint, Trigger};

const SECTIONS: [&str; 11] = [
    "variables",
    "monitoring",
    "depends",
    "decision",
    "triggers",
    "evolution",
    "goalgraph",
    "attributes",
    "alternatives",
    "utility",
    "transform",
];

/// Everything a model document can carry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub model: Option<Model>,
    pub triggers: Vec<Trigger>,
    pub constraints: Vec<EvolutionConstraint>,
    pub goal_graph: Option<GoalGraph>,
    pub decision: Option<DecisionModel>,
}

/// A validated model with its run-time configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: Model,
    pub triggers: Vec<Trigger>,
    pub constraints: Vec<EvolutionConstraint>,
    pub goal_graph: Option<GoalGraph>,
}

#[derive(Clone, Copy)]
struct Line<'a> {
    no: usize,
    text: &'a str,
}

/// Where ids were declared, for locating semantic errors.
#[derive(Default)]
struct Origins {
    ids: HashMap<String, usize>,
    sections: HashMap<&'static str, usize>,
}

struct Parser<'a> {
    sections: HashMap<&'static str, Vec<Line<'a>>>,
    errors: Vec<ParseError>,
    origins: Origins,
}

impl<'a> Parser<'a> {
    fn split(text: &'a str) -> Self {
        let mut p = Parser {
            sections: HashMap::new(),
            errors: Vec::new(),
            origins: Origins::default(),
        };
        let mut current: Option<&'static str> = None;
        let mut seen_content = false;
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let text = content(raw);
            if text.is_empty() {
                continue;
            }
            if text.starts_with("ropas-") && !seen_content {
                seen_content = true;
                if text != MODEL_HEADER {
                    p.err(no, format!("unsupported header `{text}`, expected `{MODEL_HEADER}`"));
                }
                continue;
            }
            seen_content = true;
            if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                match SECTIONS.iter().find(|s| **s == name) {
                    Some(s) if p.sections.contains_key(s) => {
                        p.err(no, format!("duplicate section [{name}]"));
                        current = None;
                    }
                    Some(s) => {
                        p.sections.insert(s, Vec::new());
                        p.origins.sections.insert(s, no);
                        current = Some(s);
                    }
                    None => {
                        p.err(no, format!("unknown section [{name}]"));
                        current = None;
                    }
                }
                continue;
            }
            match current {
                Some(s) => p.sections.get_mut(s).expect("open section").push(Line { no, text }),
                None => {
                    if !p.errors.last().is_some_and(|e| e.message.starts_with("unknown section")
                        || e.message.starts_with("duplicate section"))
                    {
                        p.err(no, "content outside any section");
                    }
                }
            }
        }
        p
    }

    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ParseError::new(line, message));
    }

    fn lines(&self, section: &str) -> Vec<Line<'a>> {
        self.sections.get(section).cloned().unwrap_or_default()
    }

    fn declare(&mut self, id: &str, line: usize) {
        self.origins.ids.entry(id.to_string()).or_insert(line);
    }
}

// ---------------------------------------------------------------- atoms

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn ident(s: &str) -> Result<&str, String> {
    if is_ident(s) {
        Ok(s)
    } else {
        Err(format!("`{s}` is not a valid identifier"))
    }
}

fn number(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("`{s}` is not a number"))
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    let bad = || format!("`{s}` is not a domain");
    let d = if s == "bool" {
        Domain::Boolean
    } else if let Some(body) = s.strip_prefix("int[").and_then(|b| b.strip_suffix(']')) {
        let (lo, hi) = body.split_once("..").ok_or_else(bad)?;
        Domain::IntegerRange {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
        }
    } else if let Some(body) = s.strip_prefix("real[").and_then(|b| b.strip_suffix(']')) {
        let (range, step) = body.split_once(';').ok_or_else(bad)?;
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        Domain::RealGrid {
            lo: number(lo)?,
            hi: number(hi)?,
            step: number(step)?,
        }
    } else if let Some(body) = s.strip_prefix("enum{").and_then(|b| b.strip_suffix('}')) {
        let labels: Vec<String> = body.split(',').map(|l| l.trim().to_string()).collect();
        for l in &labels {
            if l.is_empty() || l.contains(|c: char| c.is_whitespace() || "{}[],=@;#".contains(c)) {
                return Err(format!("`{l}` is not a valid label"));
            }
        }
        Domain::Enumerated(labels)
    } else {
        return Err(bad());
    };
    d.check()?;
    Ok(d)
}

/// A value of `domain`, required to be one of its points.
fn domain_value(domain: &Domain, s: &str) -> Result<Value, String> {
    domain
        .parse_value(s)
        .filter(|v| domain.contains(v))
        .ok_or_else(|| format!("`{s}` is not a value of {domain}"))
}

/// A literal compared against a variable of `domain`; may lie outside it.
fn literal(domain: &Domain, s: &str) -> Result<Value, String> {
    if let Some(v) = domain.parse_value(s) {
        return Ok(v);
    }
    let bad = || format!("`{s}` is not a literal for {domain}");
    Ok(match domain {
        Domain::Boolean => return Err(bad()),
        Domain::IntegerRange { .. } => Value::Int(s.parse().map_err(|_| bad())?),
        Domain::RealGrid { .. } => Value::Real(number(s)?),
        Domain::Enumerated(_) => Value::Label(s.to_string()),
    })
}

fn parse_range(domain: &Domain, s: &str) -> Result<ValueRange, String> {
    if let Some(body) = s.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
        let (lo, hi) = body
            .split_once("..")
            .ok_or_else(|| format!("`{s}` is not a range"))?;
        Ok(ValueRange::Interval {
            lo: number(lo.trim())?,
            hi: number(hi.trim())?,
        })
    } else if let Some(body) = s.strip_prefix('{').and_then(|b| b.strip_suffix('}')) {
        let mut set = BTreeSet::new();
        for item in body.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            set.insert(domain_value(domain, item)?);
        }
        Ok(ValueRange::Set(set))
    } else {
        Err(format!("`{s}` is not a range"))
    }
}

fn full_range(domain: &Domain) -> ValueRange {
    match domain {
        Domain::Enumerated(_) => ValueRange::Set(domain.values().into_iter().collect()),
        _ => {
            let (lo, hi) = domain.bounds();
            ValueRange::Interval { lo, hi }
        }
    }
}

// ----------------------------------------------------------- expressions

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Cmp(Comparator),
    Word(String),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            '&' => {
                out.push(Tok::And);
                i += 1
            }
            '|' => {
                out.push(Tok::Or);
                i += 1
            }
            '!' if next == Some('=') => {
                out.push(Tok::Cmp(Comparator::Ne));
                i += 2
            }
            '!' => {
                out.push(Tok::Not);
                i += 1
            }
            '<' | '>' | '=' => {
                let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                if let Some(op) = Comparator::from_symbol(&two).filter(|_| two.len() == 2) {
                    out.push(Tok::Cmp(op));
                    i += 2;
                } else {
                    out.push(Tok::Cmp(Comparator::from_symbol(&c.to_string()).expect("single")));
                    i += 1;
                }
            }
            c if c.is_ascii_alphanumeric() || "_.-+".contains(c) => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || "_.-+".contains(chars[i])) {
                    i += 1;
                }
                out.push(Tok::Word(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected `{other}` in expression")),
        }
    }
    Ok(out)
}

struct ExprParser<'t, 'm> {
    toks: &'t [Tok],
    pos: usize,
    domain_of: &'m dyn Fn(&str) -> Option<Domain>,
}

impl ExprParser<'_, '_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn or(&mut self) -> Result<BoolExpr, String> {
        let mut items = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { BoolExpr::Or(items) })
    }

    fn and(&mut self) -> Result<BoolExpr, String> {
        let mut items = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one") } else { BoolExpr::And(items) })
    }

    fn unary(&mut self) -> Result<BoolExpr, String> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(BoolExpr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Word(w)) => {
                self.pos += 1;
                if let Some(Tok::Cmp(op)) = self.peek().cloned() {
                    self.pos += 1;
                    let Some(Tok::Word(lit)) = self.peek().cloned() else {
                        return Err(format!("missing literal after `{w}{op}`"));
                    };
                    self.pos += 1;
                    let var = ident(&w)?.to_string();
                    let domain = (self.domain_of)(&var).ok_or_else(|| format!("unknown variable `{var}`"))?;
                    let value = literal(&domain, &lit)?;
                    return Ok(BoolExpr::Cmp { var, op, value });
                }
                match w.as_str() {
                    "0" => Ok(BoolExpr::Const(false)),
                    "1" => Ok(BoolExpr::Const(true)),
                    _ => {
                        let var = ident(&w)?.to_string();
                        if (self.domain_of)(&var).is_none() {
                            return Err(format!("unknown variable `{var}`"));
                        }
                        Ok(BoolExpr::Var(var))
                    }
                }
            }
            Some(t) => Err(format!("unexpected {t:?} in expression")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

fn parse_expr(s: &str, domain_of: &dyn Fn(&str) -> Option<Domain>) -> Result<BoolExpr, String> {
    let toks = tokenize(s)?;
    let mut p = ExprParser {
        toks: &toks,
        pos: 0,
        domain_of,
    };
    let e = p.or()?;
    if p.pos != toks.len() {
        return Err(format!("trailing input in expression `{s}`"));
    }
    Ok(e)
}

// ---------------------------------------------------------------- model

fn parse_terms(tokens: &[&str]) -> Result<Vec<(String, f64)>, String> {
    tokens
        .iter()
        .map(|t| {
            let (c, v) = t
                .split_once('*')
                .ok_or_else(|| format!("term `{t}` must look like coef*var"))?;
            Ok((ident(v)?.to_string(), number(c)?))
        })
        .collect()
}

fn comparator(s: &str) -> Result<Comparator, String> {
    Comparator::from_symbol(s).ok_or_else(|| format!("`{s}` is not a comparator"))
}

fn parse_variables(p: &mut Parser, model: &mut Model) {
    for line in p.lines("variables") {
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        let r = (|| -> Result<(), String> {
            if toks.len() < 3 {
                return Err("expected `<kind> <id> <domain> ...`".into());
            }
            let id = ident(toks[1])?.to_string();
            let domain = parse_domain(toks[2])?;
            let mut opts: BTreeMap<&str, &str> = BTreeMap::new();
            let mut positional = Vec::new();
            for t in &toks[3..] {
                match t.split_once('=') {
                    Some((k, v)) => {
                        if opts.insert(k, v).is_some() {
                            return Err(format!("`{k}` given twice"));
                        }
                    }
                    None => positional.push(*t),
                }
            }
            match toks[0] {
                "criterion" => {
                    let [kind] = positional[..] else {
                        return Err("criterion needs exactly one kind".into());
                    };
                    let kind = CriterionKind::from_keyword(kind)
                        .ok_or_else(|| format!("unknown criterion kind `{kind}`"))?;
                    let mut c = Criterion::new(id.clone(), domain.clone(), kind);
                    if let Some(pref) = opts.remove("prefer") {
                        c.preference = Preference::from_keyword(pref)
                            .ok_or_else(|| format!("unknown preference `{pref}`"))?;
                    }
                    if let Some(v) = opts.remove("fixed") {
                        c.fixed = Some(literal(&domain, v)?);
                    }
                    model.criteria.push(c);
                }
                "parameter" => {
                    let mut prm = Parameter::new(id.clone(), domain.clone());
                    if let Some(v) = opts.remove("default") {
                        prm.default = Some(literal(&domain, v)?);
                    }
                    if !positional.is_empty() {
                        return Err(format!("unexpected `{}`", positional[0]));
                    }
                    model.parameters.push(prm);
                }
                "monitored" | "change" => {
                    let initial = opts.remove("initial")
                        .ok_or_else(|| format!("`{id}` needs initial=<value>"))?;
                    let initial = literal(&domain, initial)?;
                    if !positional.is_empty() {
                        return Err(format!("unexpected `{}`", positional[0]));
                    }
                    if toks[0] == "monitored" {
                        model.monitored.push(MonitoredVariable {
                            id: id.clone(),
                            detectable: full_range(&domain),
                            domain,
                            initial,
                        });
                    } else {
                        model.change_scope.push(ChangeVariable {
                            id: id.clone(),
                            domain,
                            initial,
                        });
                    }
                }
                other => return Err(format!("unknown variable kind `{other}`")),
            }
            if let Some(k) = opts.keys().next() {
                return Err(format!("unknown key `{k}`"));
            }
            Ok(())
        })();
        match r {
            Ok(()) => {
                let id = toks[1];
                if p.origins.ids.contains_key(id) {
                    p.err(line.no, format!("duplicate variable id `{id}`"));
                }
                p.declare(id, line.no);
            }
            Err(e) => p.err(line.no, e),
        }
    }
}

fn parse_monitoring(p: &mut Parser, model: &mut Model) {
    let mut seen = BTreeSet::new();
    for line in p.lines("monitoring") {
        let r = (|| -> Result<(), String> {
            let (id, range) = line
                .text
                .split_once(char::is_whitespace)
                .ok_or("expected `<monitored id> <range>`")?;
            let m = model
                .monitored
                .iter_mut()
                .find(|m| m.id == id)
                .ok_or_else(|| format!("`{id}` is not a monitored variable"))?;
            if !seen.insert(id.to_string()) {
                return Err(format!("range for `{id}` given twice"));
            }
            m.detectable = parse_range(&m.domain, range.trim())?;
            Ok(())
        })();
        if let Err(e) = r {
            p.err(line.no, e);
        }
    }
}

fn domain_lookup(model: &Model) -> impl Fn(&str) -> Option<Domain> + '_ {
    move |id: &str| model.variable(id).map(|(_, d)| d.clone())
}

fn parse_depend(text: &str, model: &Model) -> Result<Depend, String> {
    let (id, body) = text.split_once(':').ok_or("expected `<id>: <relation>`")?;
    let id = ident(id.trim())?.to_string();
    let body = body.trim();
    let domain_of = domain_lookup(model);
    let (head, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
    let rest = rest.trim();
    let toks: Vec<&str> = rest.split_whitespace().collect();
    match head {
        "linear" => {
            if toks.len() < 3 {
                return Err("expected `linear <terms> <cmp> <bound>`".into());
            }
            let n = toks.len();
            Ok(Depend::constraint(
                id,
                DependForm::Linear {
                    terms: parse_terms(&toks[..n - 2])?,
                    cmp: comparator(toks[n - 2])?,
                    bound: number(toks[n - 1])?,
                },
            ))
        }
        "card" => {
            if toks.len() < 3 {
                return Err("expected `card <vars> <cmp> <bound>`".into());
            }
            let n = toks.len();
            let inputs = toks[..n - 2]
                .iter()
                .map(|v| ident(v).map(str::to_string))
                .collect::<Result<_, _>>()?;
            Ok(Depend::constraint(
                id,
                DependForm::Cardinality {
                    inputs,
                    cmp: comparator(toks[n - 2])?,
                    bound: toks[n - 1]
                        .parse()
                        .map_err(|_| format!("`{}` is not an integer", toks[n - 1]))?,
                },
            ))
        }
        "nand" => match toks[..] {
            [a, b] => Ok(Depend::constraint(
                id,
                DependForm::Incompatible(ident(a)?.to_string(), ident(b)?.to_string()),
            )),
            _ => Err("expected `nand <a> <b>`".into()),
        },
        out => {
            let out = ident(out)?.to_string();
            let rest = rest
                .strip_prefix('=')
                .ok_or("expected `<output> = <form> ...` or a constraint keyword")?
                .trim();
            let (kw, args) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let args = args.trim();
            let toks: Vec<&str> = args.split_whitespace().collect();
            let form = match kw {
                "formula" => DependForm::Formula(parse_expr(args, &domain_of)?),
                "sum" => {
                    let (terms, constant) = match toks.iter().position(|t| *t == "const") {
                        Some(k) => {
                            if k + 2 != toks.len() {
                                return Err("`const` takes one number at the end".into());
                            }
                            (&toks[..k], number(toks[k + 1])?)
                        }
                        None => (&toks[..], 0.0),
                    };
                    DependForm::WeightedSum {
                        terms: parse_terms(terms)?,
                        constant,
                    }
                }
                "step" => match toks[..] {
                    [v, cut] => DependForm::Threshold {
                        input: ident(v)?.to_string(),
                        cut: number(cut)?,
                    },
                    _ => return Err("expected `step <var> <cut>`".into()),
                },
                "table" => {
                    let mut segments = args.split(';');
                    let inputs: Vec<String> = segments
                        .next()
                        .unwrap_or("")
                        .split_whitespace()
                        .map(|v| ident(v).map(str::to_string))
                        .collect::<Result<_, _>>()?;
                    let in_domains: Vec<Domain> = inputs
                        .iter()
                        .map(|v| domain_of(v).ok_or_else(|| format!("unknown variable `{v}`")))
                        .collect::<Result<_, _>>()?;
                    let out_domain = domain_of(&out).ok_or_else(|| format!("unknown variable `{out}`"))?;
                    let mut rows = BTreeMap::new();
                    for seg in segments {
                        let (key, val) = seg
                            .split_once("=>")
                            .ok_or_else(|| format!("table row `{}` needs `=>`", seg.trim()))?;
                        let key: Vec<&str> = key.split_whitespace().collect();
                        if key.len() != inputs.len() {
                            return Err(format!("table row `{}` has the wrong arity", seg.trim()));
                        }
                        let key = key
                            .iter()
                            .zip(&in_domains)
                            .map(|(k, d)| domain_value(d, k))
                            .collect::<Result<Vec<_>, _>>()?;
                        let val = literal(&out_domain, val.trim())?;
                        if rows.insert(key, val).is_some() {
                            return Err(format!("duplicate table row `{}`", seg.trim()));
                        }
                    }
                    DependForm::Table { inputs, rows }
                }
                other => return Err(format!("unknown form `{other}`")),
            };
            Ok(Depend::function(id, out, form))
        }
    }
}

fn parse_depends(p: &mut Parser, model: &mut Model) {
    for line in p.lines("depends") {
        match parse_depend(line.text, model) {
            Ok(d) => {
                p.declare(&d.id, line.no);
                model.depends.push(d);
            }
            Err(e) => p.err(line.no, e),
        }
    }
}

fn parse_decision(p: &mut Parser, model: &mut Model) {
    let mut rule_seen = false;
    for line in p.lines("decision") {
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        let r = match toks.split_first() {
            Some((&"rule", [id])) if !rule_seen => {
                rule_seen = true;
                model.decision_rule = id.to_string();
                p.origins.ids.insert(format!("rule:{id}"), line.no);
                ident(id).map(|_| ())
            }
            Some((&"rule", [_])) => Err("decision rule given twice".into()),
            Some((&"set", ids)) => ids.iter().try_for_each(|id| {
                ident(id)?;
                if !model.decision_set.insert(id.to_string()) {
                    return Err(format!("`{id}` listed twice in the decision set"));
                }
                Ok(())
            }),
            _ => Err("expected `rule <criterion>` or `set <parameters>`".into()),
        };
        if let Err(e) = r {
            p.err(line.no, e);
        }
    }
}

fn parse_triggers(p: &mut Parser, model: &Model) -> Vec<Trigger> {
    let mut out: Vec<Trigger> = Vec::new();
    for line in p.lines("triggers") {
        let r = (|| -> Result<Trigger, String> {
            let (id, body) = line.text.split_once(':').ok_or("expected `<id>: <criterion> in <range>`")?;
            let id = ident(id.trim())?.to_string();
            let (crit, range) = body
                .trim()
                .split_once(" in ")
                .ok_or("expected `<id>: <criterion> in <range>`")?;
            let crit = crit.trim();
            let c = model
                .criterion(crit)
                .ok_or_else(|| format!("`{crit}` is not a criterion"))?;
            let range = parse_range(&c.domain, range.trim())?;
            if range.is_empty() || !range.meets(&c.domain) {
                return Err(format!("tolerable range of `{id}` is empty"));
            }
            if out.iter().any(|t| t.id == id) {
                return Err(format!("duplicate trigger `{id}`"));
            }
            Ok(Trigger {
                id,
                criterion: crit.to_string(),
                range,
            })
        })();
        match r {
            Ok(t) => out.push(t),
            Err(e) => p.err(line.no, e),
        }
    }
    out
}

fn parse_pattern(s: &str, model: &Model) -> Result<Specification, String> {
    let s = s.trim();
    let mut spec = Specification::new();
    if s == "*" {
        return Ok(spec);
    }
    for item in s.split(',') {
        let (id, v) = item
            .trim()
            .split_once('=')
            .ok_or_else(|| format!("pattern item `{item}` must look like param=value"))?;
        let p = model
            .parameter(id.trim())
            .ok_or_else(|| format!("`{}` is not a parameter", id.trim()))?;
        spec.set(p.id.clone(), domain_value(&p.domain, v.trim())?);
    }
    Ok(spec)
}

fn parse_evolution(p: &mut Parser, model: &Model) -> Vec<EvolutionConstraint> {
    let mut out = Vec::new();
    for line in p.lines("evolution") {
        let (head, rest) = line.text.split_once(char::is_whitespace).unwrap_or((line.text, ""));
        let rest = rest.trim();
        let r = match head {
            "forbid_transition" => rest
                .split_once("->")
                .ok_or_else(|| "expected `forbid_transition <pattern> -> <pattern>`".to_string())
                .and_then(|(a, b)| {
                    Ok(EvolutionConstraint::ForbiddenTransition {
                        from: parse_pattern(a, model)?,
                        to: parse_pattern(b, model)?,
                    })
                }),
            "max_changes" => match rest.parse::<usize>() {
                Ok(k) if k > 0 => Ok(EvolutionConstraint::MaxChanges(k)),
                _ => Err(format!("`{rest}` is not a positive integer")),
            },
            "forbid_value" => (|| {
                let (pat, unless) = match rest.split_once(" unless ") {
                    Some((a, b)) => (a, Some(b)),
                    None => (rest, None),
                };
                let (id, v) = pat
                    .trim()
                    .split_once('=')
                    .ok_or("expected `forbid_value <param>=<value> [unless <condition>]`")?;
                let prm = model
                    .parameter(id.trim())
                    .ok_or_else(|| format!("`{}` is not a parameter", id.trim()))?;
                let value = domain_value(&prm.domain, v.trim())?;
                let unless = match unless {
                    Some(c) => {
                        let monitored = |id: &str| model.monitored_variable(id).map(|m| m.domain.clone());
                        Some(parse_expr(c, &monitored).map_err(|e| {
                            if e.starts_with("unknown variable") {
                                format!("{e}: unless-conditions may only read monitored variables")
                            } else {
                                e
                            }
                        })?)
                    }
                    None => None,
                };
                Ok(EvolutionConstraint::ForbiddenValue {
                    param: prm.id.clone(),
                    value,
                    unless,
                })
            })(),
            other => Err(format!("unknown evolution constraint `{other}`")),
        };
        match r {
            Ok(c) => out.push(c),
            Err(e) => p.err(line.no, e),
        }
    }
    out
}

fn parse_goalgraph(p: &mut Parser) -> GoalGraph {
    let mut g = GoalGraph::default();
    let lines = p.lines("goalgraph");
    // declarations first, so rules may precede them
    for line in &lines {
        if line.text.contains("<-") || line.text.contains("><") {
            continue;
        }
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        let r = (|| -> Result<(), String> {
            let (head, atoms) = toks.split_first().ok_or("empty line")?;
            for a in atoms {
                ident(a)?;
            }
            let target = match *head {
                "atoms" => None,
                "r" => Some(&mut g.r_atoms),
                "k" => Some(&mut g.k_atoms),
                "s" => Some(&mut g.s_atoms),
                "mandatory" => Some(&mut g.mandatory),
                other => return Err(format!("unknown goal-graph line `{other}`")),
            };
            if let Some(set) = target {
                set.extend(atoms.iter().map(|a| a.to_string()));
            }
            if *head != "mandatory" {
                g.atoms.extend(atoms.iter().map(|a| a.to_string()));
            }
            Ok(())
        })();
        if let Err(e) = r {
            p.err(line.no, e);
        }
    }
    let mut conflicts = Vec::new();
    for line in &lines {
        let known = |a: &str| -> Result<String, String> {
            ident(a)?;
            if g.atoms.contains(a) {
                Ok(a.to_string())
            } else {
                Err(format!("undeclared atom `{a}`"))
            }
        };
        let r: Result<Option<Refinement>, String> = if let Some((c, ps)) = line.text.split_once("<-") {
            (|| {
                let conclusion = known(c.trim())?;
                let premises = ps
                    .split('&')
                    .map(|a| known(a.trim()))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                Ok(Some(Refinement { conclusion, premises }))
            })()
        } else if let Some((a, b)) = line.text.split_once("><") {
            (|| {
                conflicts.push((known(a.trim())?, known(b.trim())?));
                Ok(None)
            })()
        } else {
            Ok(None)
        };
        match r {
            Ok(Some(rf)) => g.refinements.push(rf),
            Ok(None) => {}
            Err(e) => p.err(line.no, e),
        }
    }
    for (a, b) in conflicts {
        g.add_conflict(a, b);
    }
    g
}

// -------------------------------------------------------- decision model

fn parse_attributes(p: &mut Parser) -> Vec<Criterion> {
    let mut out: Vec<Criterion> = Vec::new();
    for line in p.lines("attributes") {
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        let r = match toks[..] {
            [id, domain] => ident(id).and_then(|id| {
                if out.iter().any(|c| c.id == id) {
                    return Err(format!("duplicate attribute `{id}`"));
                }
                Ok(Criterion::new(id, parse_domain(domain)?, CriterionKind::Quality))
            }),
            _ => Err("expected `<attribute> <domain>`".into()),
        };
        match r {
            Ok(c) => out.push(c),
            Err(e) => p.err(line.no, e),
        }
    }
    out
}

fn parse_alternatives(p: &mut Parser, attrs: &[Criterion]) -> Vec<Alternative> {
    let mut out: Vec<Alternative> = Vec::new();
    for line in p.lines("alternatives") {
        let r = (|| -> Result<Alternative, String> {
            let (id, body) = line.text.split_once(':').ok_or("expected `<id>: <attr> = v@p ... | ...`")?;
            let id = ident(id.trim())?.to_string();
            let mut lotteries = BTreeMap::new();
            for part in body.split('|') {
                let (attr, outcomes) = part
                    .split_once('=')
                    .ok_or_else(|| format!("`{}` must look like <attr> = v@p ...", part.trim()))?;
                let attr = attr.trim();
                let a = attrs
                    .iter()
                    .find(|c| c.id == attr)
                    .ok_or_else(|| format!("`{attr}` is not an attribute"))?;
                let mut lottery = Lottery { outcomes: Vec::new() };
                for o in outcomes.split_whitespace() {
                    let (v, prob) = o
                        .rsplit_once('@')
                        .ok_or_else(|| format!("outcome `{o}` must look like value@probability"))?;
                    lottery.outcomes.push((domain_value(&a.domain, v)?, number(prob)?));
                }
                if lotteries.insert(attr.to_string(), lottery).is_some() {
                    return Err(format!("two lotteries for `{attr}`"));
                }
            }
            if out.iter().any(|a| a.id == id) {
                return Err(format!("duplicate alternative `{id}`"));
            }
            Ok(Alternative { id, lotteries })
        })();
        match r {
            Ok(a) => out.push(a),
            Err(e) => p.err(line.no, e),
        }
    }
    out
}

fn parse_utility(p: &mut Parser, attrs: &[Criterion]) -> Option<Utility> {
    let mut utility: Option<Utility> = None;
    for line in p.lines("utility") {
        let (head, rest) = line.text.split_once(char::is_whitespace).unwrap_or((line.text, ""));
        let r = (|| -> Result<(), String> {
            let mixed = || Err("utility forms cannot be mixed".to_string());
            match head {
                "table" => {
                    let (attr, entries) = rest.split_once(':').ok_or("expected `table <attr>: v=u ...`")?;
                    let attr = attr.trim();
                    let a = attrs
                        .iter()
                        .find(|c| c.id == attr)
                        .ok_or_else(|| format!("`{attr}` is not an attribute"))?;
                    let mut table = BTreeMap::new();
                    for e in entries.split_whitespace() {
                        let (v, u) = e.split_once('=').ok_or_else(|| format!("`{e}` must look like v=u"))?;
                        table.insert(domain_value(&a.domain, v)?, number(u)?);
                    }
                    let tables = match utility.get_or_insert_with(|| Utility::Tables(BTreeMap::new())) {
                        Utility::Tables(t) => t,
                        _ => return mixed(),
                    };
                    if tables.insert(attr.to_string(), table).is_some() {
                        return Err(format!("two tables for `{attr}`"));
                    }
                }
                "weights" => {
                    if utility.is_some() {
                        return mixed();
                    }
                    let mut w = BTreeMap::new();
                    for e in rest.split_whitespace() {
                        let (a, x) = e.split_once('=').ok_or_else(|| format!("`{e}` must look like attr=w"))?;
                        if !attrs.iter().any(|c| c.id == a) {
                            return Err(format!("`{a}` is not an attribute"));
                        }
                        w.insert(a.to_string(), number(x)?);
                    }
                    utility = Some(Utility::WeightedSum(w));
                }
                "joint" => {
                    let table = match utility.get_or_insert_with(|| Utility::Joint(BTreeMap::new())) {
                        Utility::Joint(t) => t,
                        _ => return mixed(),
                    };
                    for e in rest.split_whitespace() {
                        let (key, u) = e.rsplit_once('=').ok_or_else(|| format!("`{e}` must look like v,v=u"))?;
                        let parts: Vec<&str> = key.split(',').collect();
                        if parts.len() != attrs.len() {
                            return Err(format!("`{key}` needs one value per attribute"));
                        }
                        let key = parts
                            .iter()
                            .zip(attrs)
                            .map(|(v, a)| domain_value(&a.domain, v))
                            .collect::<Result<Vec<_>, _>>()?;
                        table.insert(key, number(u)?);
                    }
                }
                other => return Err(format!("unknown utility form `{other}`")),
            }
            Ok(())
        })();
        if let Err(e) = r {
            p.err(line.no, e);
        }
    }
    utility
}

fn parse_transform(p: &mut Parser) -> Transform {
    let mut t = Transform::Identity;
    for (i, line) in p.lines("transform").into_iter().enumerate() {
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        let r = if i > 0 {
            Err("only one transform line is allowed".to_string())
        } else {
            match toks.split_first() {
                Some((&"identity", [])) => Ok(Transform::Identity),
                Some((&"power", [g])) => number(g).map(Transform::Power),
                Some((&"table", pts)) => pts
                    .iter()
                    .map(|pt| {
                        let (a, b) = pt.split_once(':').ok_or_else(|| format!("`{pt}` must look like p:F"))?;
                        Ok((number(a)?, number(b)?))
                    })
                    .collect::<Result<Vec<_>, String>>()
                    .map(Transform::Table),
                _ => Err("expected `identity`, `power <g>` or `table p:F ...`".into()),
            }
        };
        match r.and_then(|x| x.check().map(|_| x).map_err(|e| e.to_string())) {
            Ok(x) => t = x,
            Err(e) => p.err(line.no, e),
        }
    }
    t
}

// ------------------------------------------------------------- entry points

fn parse_all(text: &str) -> (Document, Parser<'_>) {
    let mut p = Parser::split(text);
    let mut doc = Document::default();
    let has = |s: &str| p.sections.contains_key(s);
    let (has_vars, has_graph, has_attrs) = (has("variables"), has("goalgraph"), has("attributes"));
    let model_only = ["monitoring", "depends", "decision", "triggers", "evolution"];
    let decision_only = ["alternatives", "utility", "transform"];

    if has_vars {
        let mut model = Model::default();
        parse_variables(&mut p, &mut model);
        parse_monitoring(&mut p, &mut model);
        parse_depends(&mut p, &mut model);
        parse_decision(&mut p, &mut model);
        doc.triggers = parse_triggers(&mut p, &model);
        doc.constraints = parse_evolution(&mut p, &model);
        doc.model = Some(model);
    } else {
        for s in model_only {
            if let Some(&no) = p.origins.sections.get(s) {
                p.err(no, format!("[{s}] requires a [variables] section"));
            }
        }
    }
    if has_graph {
        doc.goal_graph = Some(parse_goalgraph(&mut p));
    }
    if has_attrs {
        let attributes = parse_attributes(&mut p);
        let alternatives = parse_alternatives(&mut p, &attributes);
        let utility = parse_utility(&mut p, &attributes);
        let transform = parse_transform(&mut p);
        match utility {
            Some(utility) => {
                doc.decision = Some(DecisionModel {
                    attributes,
                    alternatives,
                    utility,
                    transform,
                })
            }
            None => {
                let no = p.origins.sections["attributes"];
                p.err(no, "decision model has no [utility] section");
            }
        }
    } else {
        for s in decision_only {
            if let Some(&no) = p.origins.sections.get(s) {
                p.err(no, format!("[{s}] requires an [attributes] section"));
            }
        }
    }
    if !has_vars && !has_graph && !has_attrs && p.errors.is_empty() {
        p.err(0, "no variables section");
    }
    (doc, p)
}

fn finish<T>(mut p: Parser, value: T) -> Result<T, ParseErrors> {
    if p.errors.is_empty() {
        Ok(value)
    } else {
        p.errors.sort_by_key(|e| e.line);
        Err(ParseErrors(p.errors))
    }
}

/// Parse any document without semantic validation.
pub fn parse_document(text: &str) -> Result<Document, ParseErrors> {
    let (doc, p) = parse_all(text);
    finish(p, doc)
}

/// Parse and validate a model document. Model invariant violations are
/// reported at the line that declares the offending id.
pub fn parse_model(text: &str) -> Result<Scenario, ParseErrors> {
    let (doc, mut p) = parse_all(text);
    let Some(model) = doc.model else {
        p.errors.retain(|e| e.line != 0);
        p.err(0, "no variables section");
        return finish(p, None).map(|x: Option<Scenario>| x.expect("errors present"));
    };
    if p.errors.is_empty() {
        let report = validate_model(&model);
        for v in &report.violations {
            let line = p
                .origins
                .ids
                .get(&v.subject)
                .or_else(|| p.origins.ids.get(&format!("rule:{}", v.subject)))
                .or_else(|| p.origins.sections.get("decision"))
                .copied()
                .unwrap_or(0);
            p.err(line, format!("{}: {}", v.subject, v.message));
        }
        if let Some(g) = &doc.goal_graph {
            if let Err(e) = g.validate() {
                let no = p.origins.sections["goalgraph"];
                p.err(no, e.to_string());
            }
        }
    }
    finish(
        p,
        Scenario {
            model,
            triggers: doc.triggers,
            constraints: doc.constraints,
            goal_graph: doc.goal_graph,
        },
    )
}

/// Parse a document that must carry a valid `[goalgraph]` section.
pub fn parse_goal_graph(text: &str) -> Result<GoalGraph, ParseErrors> {
    let (doc, mut p) = parse_all(text);
    let graph = doc.goal_graph.unwrap_or_default();
    if !p.sections.contains_key("goalgraph") {
        p.err(0, "no goalgraph section");
    } else if p.errors.is_empty() {
        if let Err(e) = graph.validate() {
            let no = p.origins.sections["goalgraph"];
            p.err(no, e.to_string());
        }
    }
    finish(p, graph)
}

/// Parse a document that must carry a valid decision model.
pub fn parse_decision_model(text: &str) -> Result<DecisionModel, ParseErrors> {
    let (doc, mut p) = parse_all(text);
    match doc.decision {
        Some(dm) => {
            if p.errors.is_empty() {
                if let Err(e) = dm.validate() {
                    let no = p.origins.sections.get("alternatives").copied().unwrap_or(0);
                    p.err(no, e.to_string());
                }
            }
            finish(p, dm.clone()).map(|_| dm)
        }
        None => {
            if !p.sections.contains_key("attributes") {
                p.errors.retain(|e| e.line != 0);
                p.err(0, "no attributes section");
            }
            finish(p, None).map(|x: Option<DecisionModel>| x.expect("errors present"))
        }
    }
}

// ------------------------------------------------------------ serializers

fn write_terms(out: &mut String, terms: &[(String, f64)]) {
    for (i, (v, c)) in terms.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{c}*{v}");
    }
}

fn write_model(out: &mut String, m: &Model) {
    out.push_str("[variables]\n");
    for c in &m.criteria {
        let _ = write!(out, "criterion {} {} {}", c.id, c.domain, c.kind.keyword());
        let default_pref = Criterion::new("", Domain::Boolean, c.kind).preference;
        if c.preference != default_pref {
            let _ = write!(out, " prefer={}", c.preference.keyword());
        }
        if let Some(v) = &c.fixed {
            let _ = write!(out, " fixed={v}");
        }
        out.push('\n');
    }
    for p in &m.parameters {
        let _ = write!(out, "parameter {} {}", p.id, p.domain);
        if let Some(v) = &p.default {
            let _ = write!(out, " default={v}");
        }
        out.push('\n');
    }
    for v in &m.monitored {
        let _ = writeln!(out, "monitored {} {} initial={}", v.id, v.domain, v.initial);
    }
    for v in &m.change_scope {
        let _ = writeln!(out, "change {} {} initial={}", v.id, v.domain, v.initial);
    }
    if !m.monitored.is_empty() {
        out.push_str("[monitoring]\n");
        for v in &m.monitored {
            let _ = writeln!(out, "{} {}", v.id, v.detectable);
        }
    }
    if !m.depends.is_empty() {
        out.push_str("[depends]\n");
        for d in &m.depends {
            let _ = write!(out, "{}: ", d.id);
            if let Some(o) = &d.output {
                let _ = write!(out, "{o} = ");
            }
            out.push_str(d.form.keyword());
            match &d.form {
                DependForm::Formula(e) => {
                    let _ = write!(out, " {e}");
                }
                DependForm::Linear { terms, cmp, bound } => {
                    out.push(' ');
                    write_terms(out, terms);
                    let _ = write!(out, " {cmp} {bound}");
                }
                DependForm::WeightedSum { terms, constant } => {
                    if !terms.is_empty() {
                        out.push(' ');
                    }
                    write_terms(out, terms);
                    if *constant != 0.0 {
                        let _ = write!(out, " const {constant}");
                    }
                }
                DependForm::Threshold { input, cut } => {
                    let _ = write!(out, " {input} {cut}");
                }
                DependForm::Cardinality { inputs, cmp, bound } => {
                    let _ = write!(out, " {} {cmp} {bound}", inputs.join(" "));
                }
                DependForm::Incompatible(a, b) => {
                    let _ = write!(out, " {a} {b}");
                }
                DependForm::Table { inputs, rows } => {
                    let _ = write!(out, " {}", inputs.join(" "));
                    for (k, v) in rows {
                        let key: Vec<String> = k.iter().map(Value::to_string).collect();
                        let _ = write!(out, " ; {} => {v}", key.join(" "));
                    }
                }
            }
            out.push('\n');
        }
    }
    if !m.decision_rule.is_empty() || !m.decision_set.is_empty() {
        out.push_str("[decision]\n");
        if !m.decision_rule.is_empty() {
            let _ = writeln!(out, "rule {}", m.decision_rule);
        }
        if !m.decision_set.is_empty() {
            let ids: Vec<&str> = m.decision_set.iter().map(String::as_str).collect();
            let _ = writeln!(out, "set {}", ids.join(" "));
        }
    }
}

fn pattern(s: &Specification) -> String {
    if s.0.is_empty() {
        "*".into()
    } else {
        s.to_string()
    }
}

fn write_runtime(out: &mut String, triggers: &[Trigger], constraints: &[EvolutionConstraint]) {
    if !triggers.is_empty() {
        out.push_str("[triggers]\n");
        for t in triggers {
            let _ = writeln!(out, "{}: {} in {}", t.id, t.criterion, t.range);
        }
    }
    if !constraints.is_empty() {
        out.push_str("[evolution]\n");
        for c in constraints {
            match c {
                EvolutionConstraint::ForbiddenTransition { from, to } => {
                    let _ = writeln!(out, "forbid_transition {} -> {}", pattern(from), pattern(to));
                }
                EvolutionConstraint::MaxChanges(k) => {
                    let _ = writeln!(out, "max_changes {k}");
                }
                EvolutionConstraint::ForbiddenValue { param, value, unless } => {
                    let _ = write!(out, "forbid_value {param}={value}");
                    if let Some(e) = unless {
                        let _ = write!(out, " unless {e}");
                    }
                    out.push('\n');
                }
            }
        }
    }
}

fn write_graph(out: &mut String, g: &GoalGraph) {
    out.push_str("[goalgraph]\n");
    let extra: Vec<&str> = g
        .atoms
        .iter()
        .filter(|a| !g.r_atoms.contains(*a) && !g.k_atoms.contains(*a) && !g.s_atoms.contains(*a))
        .map(String::as_str)
        .collect();
    let lists: [(&str, Vec<&str>); 5] = [
        ("atoms", extra),
        ("r", g.r_atoms.iter().map(String::as_str).collect()),
        ("k", g.k_atoms.iter().map(String::as_str).collect()),
        ("s", g.s_atoms.iter().map(String::as_str).collect()),
        ("mandatory", g.mandatory.iter().map(String::as_str).collect()),
    ];
    for (head, atoms) in lists {
        if !atoms.is_empty() {
            let _ = writeln!(out, "{head} {}", atoms.join(" "));
        }
    }
    for r in &g.refinements {
        let ps: Vec<&str> = r.premises.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{} <- {}", r.conclusion, ps.join(" & "));
    }
    for (a, b) in &g.conflicts {
        let _ = writeln!(out, "{a} >< {b}");
    }
}

fn write_decision(out: &mut String, dm: &DecisionModel) {
    out.push_str("[attributes]\n");
    for a in &dm.attributes {
        let _ = writeln!(out, "{} {}", a.id, a.domain);
    }
    out.push_str("[alternatives]\n");
    for alt in &dm.alternatives {
        let parts: Vec<String> = alt
            .lotteries
            .iter()
            .map(|(attr, l)| {
                let os: Vec<String> = l.outcomes.iter().map(|(v, p)| format!("{v}@{p}")).collect();
                format!("{attr} = {}", os.join(" "))
            })
            .collect();
        let _ = writeln!(out, "{}: {}", alt.id, parts.join(" | "));
    }
    out.push_str("[utility]\n");
    match &dm.utility {
        Utility::Tables(tables) => {
            for (attr, t) in tables {
                let es: Vec<String> = t.iter().map(|(v, u)| format!("{v}={u}")).collect();
                let _ = writeln!(out, "table {attr}: {}", es.join(" "));
            }
        }
        Utility::WeightedSum(w) => {
            let es: Vec<String> = w.iter().map(|(a, x)| format!("{a}={x}")).collect();
            let _ = writeln!(out, "weights {}", es.join(" "));
        }
        Utility::Joint(t) => {
            let es: Vec<String> = t
                .iter()
                .map(|(k, u)| {
                    let k: Vec<String> = k.iter().map(Value::to_string).collect();
                    format!("{}={u}", k.join(","))
                })
                .collect();
            let _ = writeln!(out, "joint {}", es.join(" "));
        }
    }
    match &dm.transform {
        Transform::Identity => {}
        Transform::Power(g) => {
            let _ = writeln!(out, "[transform]\npower {g}");
        }
        Transform::Table(pts) => {
            let es: Vec<String> = pts.iter().map(|(a, b)| format!("{a}:{b}")).collect();
            let _ = writeln!(out, "[transform]\ntable {}", es.join(" "));
        }
    }
}

/// Canonical text of a document.
pub fn serialize_document(doc: &Document) -> String {
    let mut out = format!("{MODEL_HEADER}\n");
    if let Some(m) = &doc.model {
        write_model(&mut out, m);
        write_runtime(&mut out, &doc.triggers, &doc.constraints);
    }
    if let Some(g) = &doc.goal_graph {
        write_graph(&mut out, g);
    }
    if let Some(dm) = &doc.decision {
        write_decision(&mut out, dm);
    }
    out
}

pub fn serialize_model(s: &Scenario) -> String {
    serialize_document(&Document {
        model: Some(s.model.clone()),
        triggers: s.triggers.clone(),
        constraints: s.constraints.clone(),
        goal_graph: s.goal_graph.clone(),
        decision: None,
    })
}

pub fn serialize_goal_graph(g: &GoalGraph) -> String {
    serialize_document(&Document {
        goal_graph: Some(g.clone()),
        ..Default::default()
    })
}

pub fn serialize_decision_model(dm: &DecisionModel) -> String {
    serialize_document(&Document {
        decision: Some(dm.clone()),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_has_no_variables_section() {
        let e = parse_model("").unwrap_err();
        assert_eq!(e.to_string(), "no variables section");
        let e = parse_document("# only a comment\n").unwrap_err();
        assert_eq!(e.to_string(), "no variables section");
    }

    #[test]
    fn expressions_round_trip() {
        let text = "ropas-model v1\n[variables]\ncriterion c bool requirement prefer=higher\nparameter a bool default=0\n\
                    parameter b bool default=1\nparameter n int[0..9] default=3\n[depends]\n\
                    f: c = formula a & (b | n>=4) | !(a & b) | n!=2\n[decision]\nrule c\n";
        let s = parse_model(text).unwrap();
        assert_eq!(serialize_model(&s), text);
    }

    #[test]
    fn duplicate_id_is_located() {
        let text = "[variables]\nparameter a bool default=0\nparameter a bool default=1\n";
        let e = parse_document(text).unwrap_err();
        assert_eq!(e.0[0].line, 3);
        assert!(e.0[0].message.contains("duplicate"));
    }

    #[test]
    fn semantic_errors_are_located() {
        let text = "[variables]\ncriterion u int[0..3] utility prefer=lower\nparameter a int[0..3]\n\
                    [depends]\nf: u = sum 1*a\n[decision]\nrule u\nset a\n";
        let e = parse_model(text).unwrap_err();
        assert_eq!(e.0.len(), 2);
        assert!(e.0.iter().all(|x| x.line == 2));
    }

    #[test]
    fn unknown_section_rejected() {
        let e = parse_document("[variables]\n[colours]\nred\n").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].line, 2);
    }

    #[test]
    fn goal_graph_round_trip() {
        let text = "ropas-model v1\n[goalgraph]\natoms x\nr g\nk f\ns a b\nmandatory g\ng <- a & f\ng <- b\na >< b\n";
        let g = parse_goal_graph(text).unwrap();
        assert_eq!(serialize_goal_graph(&g), text);
        assert_eq!(g.atoms.len(), 5);
    }

    #[test]
    fn decision_model_round_trip() {
        let text = "ropas-model v1\n[attributes]\nx enum{lo,hi}\n[alternatives]\nA: x = hi@0.5 lo@0.5\n\
                    B: x = lo@1\n[utility]\ntable x: hi=1 lo=0\n[transform]\npower 2\n";
        let dm = parse_decision_model(text).unwrap();
        assert_eq!(serialize_decision_model(&dm), text);
    }
}
