use std::fmt::Write as _;
use std::path::Path;

use super::{CostBreakdown, RestorationPlan, Schedule};
use crate::error::{Error, Result};
use crate::network::Network;

/// Writes `element_id,layer,repair_step`; `element_id` is the canonical index
/// and an unrepaired element has step `never`.
pub fn write_plan_csv(net: &Network, plan: &RestorationPlan, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from("# restoro-plan-v1\nelement_id,layer,repair_step\n");
    for (&e, t) in &plan.repair_time {
        let step = t.map_or_else(|| "never".to_string(), |t| t.to_string());
        let _ = writeln!(s, "{e},{},{step}", net.layers()[net.element_layer(e)]);
    }
    write(path.as_ref(), &s)
}

pub fn read_plan_csv(path: impl AsRef<Path>) -> Result<Schedule> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut schedule = Schedule::new();
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .skip(1);
    for (i, line) in rows {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(i + 1, "expected element_id,layer,repair_step"));
        }
        let e = f[0]
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("invalid element id `{}`", f[0])))?;
        let t = match f[2] {
            "never" => None,
            s => Some(
                s.parse()
                    .map_err(|_| Error::parse(i + 1, format!("invalid repair step `{s}`")))?,
            ),
        };
        schedule.insert(e, t);
    }
    Ok(schedule)
}

/// Writes `t,Cf,Cr,Cu,Cg`, one row per step including `t = 0`.
pub fn write_cost_csv(costs: &CostBreakdown, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from("t,Cf,Cr,Cu,Cg\n");
    for (t, c) in costs.steps.iter().enumerate() {
        let _ = writeln!(s, "{t},{},{},{},{}", c.flow, c.repair, c.imbalance, c.prep);
    }
    write(path.as_ref(), &s)
}

fn write(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
