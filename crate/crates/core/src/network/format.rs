//! Line-oriented network file.
//!
//! ```text
//! [layers]
//! water
//! [nodes]
//! # layer,index,balance,repair_cost,surplus_penalty,deficit_penalty,space,demand_completion,x,y
//! water,0,5,120,5,150,S00,0,0.1,0.4
//! [arcs]
//! # tail_layer,tail_index,head_layer,head_index,capacity,flow_cost,repair_cost,space
//! [links]
//! # parent_layer,parent_index,child_layer,child_index
//! [spaces]
//! # id,prep_cost
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{validate, ArcSpec, InterdependencyLink, NetworkSpec, NodeRef, NodeSpec, SpaceSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Layers,
    Nodes,
    Arcs,
    Links,
    Spaces,
}

/// Reads and validates a network file.
pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = parse_network(&text)?;
    let violations = validate(&spec);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Validation(violations))
    }
}

pub fn save_network(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_network(spec)).map_err(|e| Error::io(path, e))
}

/// Parses the text format without validating cross-references.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let mut spec = NetworkSpec::default();
    let mut section = None;
    let mut seen_nodes = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = Some(match line {
                "[layers]" => Section::Layers,
                "[nodes]" => Section::Nodes,
                "[arcs]" => Section::Arcs,
                "[links]" => Section::Links,
                "[spaces]" => Section::Spaces,
                other => return Err(Error::parse(line_no, format!("unknown section {other}"))),
            });
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let rec = Record {
            fields: &fields,
            line: line_no,
        };
        match section {
            None => return Err(Error::parse(line_no, "record outside of any section")),
            Some(Section::Layers) => {
                rec.expect(1)?;
                spec.layers.push(rec.ident(0)?);
            }
            Some(Section::Nodes) => {
                rec.expect(10)?;
                let node = NodeRef::new(rec.ident(0)?, rec.uint(1)?);
                if !seen_nodes.insert(node.clone()) {
                    return Err(Error::parse(line_no, format!("duplicate node id {node}")));
                }
                spec.nodes.push(NodeSpec {
                    node,
                    balance: rec.num(2)?,
                    repair_cost: rec.num(3)?,
                    surplus_penalty: rec.num(4)?,
                    deficit_penalty: rec.num(5)?,
                    space: rec.ident(6)?,
                    demand_completion: rec.flag(7)?,
                    position: [rec.num(8)?, rec.num(9)?],
                });
            }
            Some(Section::Arcs) => {
                rec.expect(8)?;
                spec.arcs.push(ArcSpec {
                    tail: NodeRef::new(rec.ident(0)?, rec.uint(1)?),
                    head: NodeRef::new(rec.ident(2)?, rec.uint(3)?),
                    capacity: rec.num(4)?,
                    flow_cost: rec.num(5)?,
                    repair_cost: rec.num(6)?,
                    space: rec.ident(7)?,
                });
            }
            Some(Section::Links) => {
                rec.expect(4)?;
                spec.links.push(InterdependencyLink {
                    parent: NodeRef::new(rec.ident(0)?, rec.uint(1)?),
                    child: NodeRef::new(rec.ident(2)?, rec.uint(3)?),
                });
            }
            Some(Section::Spaces) => {
                rec.expect(2)?;
                spec.spaces.push(SpaceSpec {
                    id: rec.ident(0)?,
                    prep_cost: rec.num(1)?,
                });
            }
        }
    }
    Ok(spec)
}

struct Record<'a> {
    fields: &'a [&'a str],
    line: usize,
}

impl Record<'_> {
    fn expect(&self, n: usize) -> Result<()> {
        if self.fields.len() == n {
            Ok(())
        } else {
            Err(Error::parse(
                self.line,
                format!("expected {n} fields, found {}", self.fields.len()),
            ))
        }
    }

    fn ident(&self, i: usize) -> Result<String> {
        let f = self.fields[i];
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_graphic()) {
            return Err(Error::parse(self.line, format!("invalid identifier `{f}`")));
        }
        Ok(f.to_string())
    }

    fn uint(&self, i: usize) -> Result<u32> {
        self.fields[i]
            .parse()
            .map_err(|_| Error::parse(self.line, format!("invalid node index `{}`", self.fields[i])))
    }

    fn num(&self, i: usize) -> Result<f64> {
        self.fields[i]
            .parse()
            .map_err(|_| Error::parse(self.line, format!("invalid number `{}`", self.fields[i])))
    }

    fn flag(&self, i: usize) -> Result<bool> {
        match self.fields[i] {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(Error::parse(self.line, format!("invalid flag `{other}`"))),
        }
    }
}

/// Renders `spec` in declaration order. `f64` values use the shortest
/// representation that parses back to the same bits.
pub fn write_network(spec: &NetworkSpec) -> String {
    let mut s = String::new();
    s.push_str("# restoro-network-v1\n[layers]\n");
    for l in &spec.layers {
        let _ = writeln!(s, "{l}");
    }
    s.push_str("[nodes]\n# layer,index,balance,repair_cost,surplus_penalty,deficit_penalty,space,demand_completion,x,y\n");
    for n in &spec.nodes {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            n.node.layer,
            n.node.index,
            n.balance,
            n.repair_cost,
            n.surplus_penalty,
            n.deficit_penalty,
            n.space,
            u8::from(n.demand_completion),
            n.position[0],
            n.position[1]
        );
    }
    s.push_str("[arcs]\n# tail_layer,tail_index,head_layer,head_index,capacity,flow_cost,repair_cost,space\n");
    for a in &spec.arcs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            a.tail.layer, a.tail.index, a.head.layer, a.head.index, a.capacity, a.flow_cost, a.repair_cost, a.space
        );
    }
    s.push_str("[links]\n# parent_layer,parent_index,child_layer,child_index\n");
    for l in &spec.links {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            l.parent.layer, l.parent.index, l.child.layer, l.child.index
        );
    }
    s.push_str("[spaces]\n# id,prep_cost\n");
    for sp in &spec.spaces {
        let _ = writeln!(s, "{},{}", sp.id, sp.prep_cost);
    }
    s
}
