use std::fmt::Write as _;

use super::REPORT_HEADER;
use crate::runtime::{Metrics, Period, SimulationTimeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Human,
    /// Line-oriented and byte-stable for a given input.
    Machine,
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.iter().map(f).collect::<Vec<_>>().join(";")
    }
}

fn optimal_ticks(p: &Period) -> usize {
    p.optimal.iter().filter(|o| **o).count()
}

pub fn write_report(timeline: &SimulationTimeline, metrics: &Metrics, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Machine => {
            let _ = writeln!(out, "{REPORT_HEADER}");
            let _ = writeln!(out, "horizon={}", timeline.horizon);
            for (i, p) in timeline.periods.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "period index={i} kind={} start={} end={} spec={} triggers={} ignored={} optimal_ticks={}",
                    p.kind,
                    p.start,
                    p.end,
                    p.spec,
                    list(&p.fired, |r| format!("{}:{}", r.tick, r.trigger)),
                    list(&p.ignored, |e| format!("{}:{}={}", e.tick, e.variable, e.value)),
                    optimal_ticks(p),
                );
            }
            let _ = writeln!(
                out,
                "metrics optimal_time_fraction={:.6} trigger_count={} adaptation_tick_total={} ignored_event_count={} status={}",
                metrics.optimal_time_fraction,
                metrics.trigger_count,
                metrics.adaptation_tick_total,
                metrics.ignored_event_count,
                timeline.status,
            );
        }
        ReportFormat::Human => {
            let _ = writeln!(out, "Simulated {} ticks ({}).", timeline.horizon, timeline.status);
            for p in &timeline.periods {
                let _ = writeln!(out, "  [{:>4}, {:>4})  {:<10}  {}", p.start, p.end, p.kind, p.spec);
                for r in &p.fired {
                    let _ = writeln!(out, "      t={} trigger {} fired", r.tick, r.trigger);
                }
                for e in &p.ignored {
                    let _ = writeln!(out, "      t={} ignored {}={} (outside monitoring scope)", e.tick, e.variable, e.value);
                }
                let _ = writeln!(out, "      optimal on {}/{} ticks", optimal_ticks(p), p.optimal.len());
            }
            let _ = writeln!(out, "Optimal-time fraction: {:.6}", metrics.optimal_time_fraction);
            let _ = writeln!(out, "Triggers fired:        {}", metrics.trigger_count);
            let _ = writeln!(out, "Adaptation ticks:      {}", metrics.adaptation_tick_total);
            let _ = writeln!(out, "Ignored events:        {}", metrics.ignored_event_count);
        }
    }
    out
}
