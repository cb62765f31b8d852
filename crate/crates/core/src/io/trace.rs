use std::fmt::Write as _;

use super::{content, ParseError, ParseErrors, TRACE_HEADER};
use crate::runtime::{EventTrace, TraceEvent};

/// Parse `t=<tick> <variable>=<value>` lines. Ticks must not decrease.
/// Variable binding is left to the simulator, which knows the model.
pub fn parse_trace(text: &str) -> Result<EventTrace, ParseErrors> {
    let mut trace = EventTrace::default();
    let mut errors = Vec::new();
    let mut seen_content = false;
    let mut last: Option<(u64, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = content(raw);
        if line.is_empty() {
            continue;
        }
        if !seen_content && line.starts_with("ropas-") {
            seen_content = true;
            if line != TRACE_HEADER {
                errors.push(ParseError::new(no, format!("unsupported header `{line}`, expected `{TRACE_HEADER}`")));
            }
            continue;
        }
        seen_content = true;
        let parsed = (|| -> Result<TraceEvent, String> {
            let mut toks = line.split_whitespace();
            let (Some(t), Some(assign), None) = (toks.next(), toks.next(), toks.next()) else {
                return Err("expected `t=<tick> <variable>=<value>`".into());
            };
            let tick = t
                .strip_prefix("t=")
                .and_then(|n| n.parse::<u64>().ok())
                .ok_or_else(|| format!("`{t}` is not a tick, expected t=<n>"))?;
            let (var, value) = assign
                .split_once('=')
                .filter(|(v, x)| !v.is_empty() && !x.is_empty())
                .ok_or_else(|| format!("`{assign}` must look like variable=value"))?;
            Ok(TraceEvent {
                tick,
                variable: var.to_string(),
                value: value.to_string(),
                line: no,
            })
        })();
        match parsed {
            Ok(ev) => {
                if let Some((prev, prev_line)) = last {
                    if ev.tick < prev {
                        errors.push(ParseError::new(
                            no,
                            format!("tick {} is earlier than tick {prev} on line {prev_line}", ev.tick),
                        ));
                        continue;
                    }
                }
                last = Some((ev.tick, no));
                trace.events.push(ev);
            }
            Err(e) => errors.push(ParseError::new(no, e)),
        }
    }
    if errors.is_empty() {
        Ok(trace)
    } else {
        Err(ParseErrors(errors))
    }
}

pub fn serialize_trace(trace: &EventTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for e in &trace.events {
        let _ = writeln!(out, "t={} {}={}", e.tick, e.variable, e.value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "ropas-trace v1\nt=0 a=1\nt=10 rAF4_ok=0\n";
        let tr = parse_trace(text).unwrap();
        assert_eq!(tr.events.len(), 2);
        assert_eq!(tr.events[1].line, 3);
        assert_eq!(serialize_trace(&tr), text);
    }

    #[test]
    fn header_is_optional() {
        assert_eq!(parse_trace("t=3 x=2 # note\n").unwrap().events[0].tick, 3);
    }

    #[test]
    fn decreasing_ticks_name_both_lines() {
        let e = parse_trace("t=5 x=1\n\nt=4 x=0\n").unwrap_err();
        assert_eq!(e.to_string(), "line 3: tick 4 is earlier than tick 5 on line 1");
    }

    #[test]
    fn malformed_lines_are_located() {
        let e = parse_trace("t=1 x=1\nx=1\nt=a y=2\nt=2 y\n").unwrap_err();
        let lines: Vec<usize> = e.0.iter().map(|x| x.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
    }
}
