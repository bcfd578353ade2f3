use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, Encoding, Provenance, Record, ScenarioSet};
use crate::error::{Error, Result};
use crate::flow::FunctionalityState;
use crate::network::Network;
use crate::solver::DamageScenario;

const SCENARIO_TAG: &str = "# restoro-scenarios-v1";
const DATASET_TAG: &str = "# restoro-dataset-v1";

/// One line of comma-separated bits per scenario. Arc bits are appended only
/// when some scenario damages an arc (`elements=all`).
pub fn write_scenarios(set: &ScenarioSet, encoding: Encoding, path: impl AsRef<Path>) -> Result<()> {
    let with_arcs = set.scenarios.iter().any(|s| s.initial.arc_up.iter().any(|u| !u));
    let originals = set.provenance.iter().filter(|p| **p == Provenance::Original).count();
    let mut s = format!("{SCENARIO_TAG}\n");
    let _ = writeln!(
        s,
        "# encoding={encoding} seed={} m={} elements={} originals={originals}",
        set.seed,
        set.magnitude.map_or_else(|| "none".into(), |m| m.to_string()),
        if with_arcs { "all" } else { "nodes" },
    );
    for sc in &set.scenarios {
        let bits = sc.initial.node_up.iter().chain(if with_arcs { &sc.initial.arc_up[..] } else { &[] });
        let line: Vec<String> = bits.map(|&up| encoding.encode(!up).to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    write(path.as_ref(), &s)
}

pub fn read_scenarios(net: &Network, path: impl AsRef<Path>) -> Result<ScenarioSet> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut header: HashMap<String, String> = HashMap::new();
    let mut scenarios = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(c) = line.strip_prefix('#') {
            for kv in c.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let encoding: Encoding = header.get("encoding").map_or(Ok(Encoding::default()), |e| e.parse())?;
        let all = header.get("elements").is_some_and(|e| e == "all");
        let expected = if all { net.n_elements() } else { net.n_nodes() };
        let bits: Vec<u8> = line
            .split(',')
            .map(|b| match b.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::parse(i + 1, format!("expected 0 or 1, found `{other}`"))),
            })
            .collect::<Result<_>>()?;
        if bits.len() != expected {
            return Err(Error::parse(i + 1, format!("expected {expected} bits, found {}", bits.len())));
        }
        let mut state = FunctionalityState::all_up(net);
        for (e, &b) in bits.iter().enumerate() {
            state.set(e, !encoding.is_damaged(b));
        }
        let magnitude = header.get("m").and_then(|m| m.parse().ok());
        scenarios.push(DamageScenario {
            initial: state,
            magnitude,
            metadata: String::new(),
        });
    }
    let originals = match header.get("originals") {
        Some(o) => o
            .parse()
            .map_err(|_| Error::parse(2, format!("invalid originals count `{o}`")))?,
        None => scenarios.len(),
    };
    let provenance = (0..scenarios.len())
        .map(|i| if i < originals { Provenance::Original } else { Provenance::Augmented })
        .collect();
    Ok(ScenarioSet {
        seed: header.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0),
        magnitude: header.get("m").and_then(|m| m.parse().ok()),
        scenarios,
        provenance,
    })
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let n = ds.records.first().map_or(0, |r| r.input.len());
    let mut s = format!("{DATASET_TAG}\n# encoding={}\n", ds.encoding);
    let cols: Vec<String> = (0..n)
        .map(|i| format!("input_{i}"))
        .chain((0..n).map(|i| format!("target_{i}")))
        .chain(["Rc", "m", "provenance"].map(String::from))
        .collect();
    s.push_str(&cols.join(","));
    s.push('\n');
    for r in &ds.records {
        for b in &r.input {
            let _ = write!(s, "{b},");
        }
        for t in &r.target {
            let _ = write!(s, "{t},");
        }
        let m = r.magnitude.map_or_else(String::new, |m| m.to_string());
        let _ = writeln!(s, "{},{m},{}", r.resource_cap, r.provenance);
    }
    write(path.as_ref(), &s)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut encoding = Encoding::default();
    let mut n: Option<usize> = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(c) = line.strip_prefix('#') {
            if let Some(e) = c.trim().strip_prefix("encoding=") {
                encoding = e.parse()?;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let Some(n) = n else {
            if f.len() < 3 || (f.len() - 3) % 2 != 0 {
                return Err(Error::parse(lineno, "malformed dataset header"));
            }
            n = Some((f.len() - 3) / 2);
            continue;
        };
        if f.len() != 2 * n + 3 {
            return Err(Error::parse(lineno, format!("expected {} fields, found {}", 2 * n + 3, f.len())));
        }
        let num = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::parse(lineno, format!("invalid integer `{s}`")))
        };
        let input = f[..n]
            .iter()
            .map(|s| match *s {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::parse(lineno, format!("expected 0 or 1, found `{other}`"))),
            })
            .collect::<Result<_>>()?;
        let target = f[n..2 * n].iter().map(|s| num(s)).collect::<Result<_>>()?;
        let magnitude = match f[2 * n + 1] {
            "" => None,
            m => Some(num(m)? as u8),
        };
        records.push(Record {
            input,
            target,
            resource_cap: num(f[2 * n])?,
            magnitude,
            provenance: f[2 * n + 2]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid provenance `{}`", f[2 * n + 2])))?,
        });
    }
    Ok(Dataset { encoding, records })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
