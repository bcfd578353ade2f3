//! Multilayer interdependent network model.
//!
//! A [`NetworkSpec`] is plain declared data as read from disk. [`Network`] is
//! the validated, indexed form every other module works with: nodes are laid
//! out in canonical order (grouped by layer in declared order, declaration
//! order within a layer), followed by arcs in declaration order. That order
//! defines the element index used by every state vector, scenario, dataset
//! and surrogate input.

mod format;
pub mod synth;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Range;

pub use format::{load_network, parse_network, save_network, write_network};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub layer: String,
    pub index: u32,
}

impl NodeRef {
    pub fn new(layer: impl Into<String>, index: u32) -> Self {
        NodeRef {
            layer: layer.into(),
            index,
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.layer, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub node: NodeRef,
    /// Commodity units per step: positive supply, negative demand.
    pub balance: f64,
    pub repair_cost: f64,
    pub surplus_penalty: f64,
    pub deficit_penalty: f64,
    pub space: String,
    pub demand_completion: bool,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcSpec {
    pub tail: NodeRef,
    pub head: NodeRef,
    pub capacity: f64,
    pub flow_cost: f64,
    pub repair_cost: f64,
    pub space: String,
}

/// `child` is functional only while `parent` is.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterdependencyLink {
    pub parent: NodeRef,
    pub child: NodeRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    pub id: String,
    pub prep_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkSpec {
    pub layers: Vec<String>,
    pub nodes: Vec<NodeSpec>,
    pub arcs: Vec<ArcSpec>,
    pub links: Vec<InterdependencyLink>,
    pub spaces: Vec<SpaceSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateLayer,
    UnknownLayer(String),
    DuplicateNode,
    DuplicateSpace,
    UnknownSpace(String),
    UnknownEndpoint(NodeRef),
    CrossLayerArc,
    IntraLayerLink,
    SelfLoopLink,
    DuplicateLink,
    Negative(&'static str),
    NonFinite(&'static str),
}

/// One broken invariant, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub element: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        write!(f, "{}: ", self.element)?;
        match &self.kind {
            DuplicateLayer => write!(f, "duplicate layer"),
            UnknownLayer(l) => write!(f, "unknown layer `{l}`"),
            DuplicateNode => write!(f, "duplicate node"),
            DuplicateSpace => write!(f, "duplicate space"),
            UnknownSpace(s) => write!(f, "unknown space `{s}`"),
            UnknownEndpoint(n) => write!(f, "endpoint {n} is not a declared node"),
            CrossLayerArc => write!(f, "cross-layer arc"),
            IntraLayerLink => write!(f, "intra-layer interdependency"),
            SelfLoopLink => write!(f, "self-loop interdependency"),
            DuplicateLink => write!(f, "duplicate interdependency"),
            Negative(field) => write!(f, "{field} must be >= 0"),
            NonFinite(field) => write!(f, "{field} is not finite"),
        }
    }
}

/// Checks every structural and numeric invariant of `spec`.
///
/// Returns an empty list iff the spec is acceptable to [`Network::new`].
pub fn validate(spec: &NetworkSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |element: String, kind| out.push(Violation { element, kind });

    let mut layers = HashSet::new();
    for l in &spec.layers {
        if !layers.insert(l.as_str()) {
            push(format!("layer {l}"), ViolationKind::DuplicateLayer);
        }
    }
    let mut spaces = HashSet::new();
    for s in &spec.spaces {
        let name = format!("space {}", s.id);
        if !spaces.insert(s.id.as_str()) {
            push(name.clone(), ViolationKind::DuplicateSpace);
        }
        check_amount(&mut push, &name, "prep_cost", s.prep_cost);
    }

    let mut nodes = HashSet::new();
    for n in &spec.nodes {
        let name = format!("node {}", n.node);
        if !layers.contains(n.node.layer.as_str()) {
            push(name.clone(), ViolationKind::UnknownLayer(n.node.layer.clone()));
        }
        if !nodes.insert(&n.node) {
            push(name.clone(), ViolationKind::DuplicateNode);
        }
        if !n.balance.is_finite() {
            push(name.clone(), ViolationKind::NonFinite("balance"));
        }
        check_amount(&mut push, &name, "repair_cost", n.repair_cost);
        check_amount(&mut push, &name, "surplus_penalty", n.surplus_penalty);
        check_amount(&mut push, &name, "deficit_penalty", n.deficit_penalty);
        if !n.position.iter().all(|p| p.is_finite()) {
            push(name.clone(), ViolationKind::NonFinite("position"));
        }
        if !spaces.contains(n.space.as_str()) {
            push(name, ViolationKind::UnknownSpace(n.space.clone()));
        }
    }

    for (i, a) in spec.arcs.iter().enumerate() {
        let name = format!("arc #{i} ({} -> {})", a.tail, a.head);
        let mut resolved = true;
        for end in [&a.tail, &a.head] {
            if !nodes.contains(end) {
                push(name.clone(), ViolationKind::UnknownEndpoint(end.clone()));
                resolved = false;
            }
        }
        if resolved && a.tail.layer != a.head.layer {
            push(name.clone(), ViolationKind::CrossLayerArc);
        }
        check_amount(&mut push, &name, "capacity", a.capacity);
        check_amount(&mut push, &name, "flow_cost", a.flow_cost);
        check_amount(&mut push, &name, "repair_cost", a.repair_cost);
        if !spaces.contains(a.space.as_str()) {
            push(name, ViolationKind::UnknownSpace(a.space.clone()));
        }
    }

    let mut links = HashSet::new();
    for l in &spec.links {
        let name = format!("link {} -> {}", l.parent, l.child);
        let mut resolved = true;
        for end in [&l.parent, &l.child] {
            if !nodes.contains(end) {
                push(name.clone(), ViolationKind::UnknownEndpoint(end.clone()));
                resolved = false;
            }
        }
        if l.parent == l.child {
            push(name.clone(), ViolationKind::SelfLoopLink);
        } else if resolved && l.parent.layer == l.child.layer {
            push(name.clone(), ViolationKind::IntraLayerLink);
        }
        if !links.insert((&l.parent, &l.child)) {
            push(name, ViolationKind::DuplicateLink);
        }
    }
    out
}

fn check_amount(push: &mut impl FnMut(String, ViolationKind), name: &str, field: &'static str, v: f64) {
    if !v.is_finite() {
        push(name.to_string(), ViolationKind::NonFinite(field));
    } else if v < 0.0 {
        push(name.to_string(), ViolationKind::Negative(field));
    }
}

/// An element of the network as addressed by callers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Node(NodeRef),
    /// Arc by declaration position.
    Arc(usize),
}

/// Validated network with canonical element indexing.
///
/// Immutable once built; share it by reference across workers.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    canonical: NetworkSpec,
    node_lookup: HashMap<NodeRef, usize>,
    node_layer: Vec<usize>,
    layer_nodes: Vec<Range<usize>>,
    layer_arcs: Vec<Vec<usize>>,
    arc_ends: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    element_space: Vec<usize>,
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let violations = validate(&spec);
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }

        let layer_pos: HashMap<&str, usize> = spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let space_pos: HashMap<&str, usize> = spec
            .spaces
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();

        let mut nodes = spec.nodes.clone();
        // stable: keeps declaration order within a layer
        nodes.sort_by_key(|n| layer_pos[n.node.layer.as_str()]);

        let node_layer: Vec<usize> = nodes.iter().map(|n| layer_pos[n.node.layer.as_str()]).collect();
        let mut layer_nodes = vec![0..0; spec.layers.len()];
        let mut start = 0;
        for (k, range) in layer_nodes.iter_mut().enumerate() {
            let len = node_layer.iter().filter(|&&l| l == k).count();
            *range = start..start + len;
            start += len;
        }
        let node_lookup: HashMap<NodeRef, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.node.clone(), i))
            .collect();

        let mut layer_arcs = vec![Vec::new(); spec.layers.len()];
        let arc_ends: Vec<(usize, usize)> = spec
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let t = node_lookup[&a.tail];
                layer_arcs[node_layer[t]].push(i);
                (t, node_lookup[&a.head])
            })
            .collect();

        let mut parents = vec![Vec::new(); nodes.len()];
        for l in &spec.links {
            parents[node_lookup[&l.child]].push(node_lookup[&l.parent]);
        }
        for p in &mut parents {
            p.sort_unstable();
        }

        let element_space = nodes
            .iter()
            .map(|n| space_pos[n.space.as_str()])
            .chain(spec.arcs.iter().map(|a| space_pos[a.space.as_str()]))
            .collect();

        let canonical = NetworkSpec {
            nodes,
            ..spec.clone()
        };
        Ok(Network {
            spec,
            canonical,
            node_lookup,
            node_layer,
            layer_nodes,
            layer_arcs,
            arc_ends,
            parents,
            element_space,
        })
    }

    /// The spec as declared.
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[String] {
        &self.spec.layers
    }

    pub fn n_layers(&self) -> usize {
        self.spec.layers.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.canonical.nodes.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.spec.arcs.len()
    }

    pub fn n_elements(&self) -> usize {
        self.n_nodes() + self.n_arcs()
    }

    /// Node by canonical index.
    pub fn node(&self, i: usize) -> &NodeSpec {
        &self.canonical.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.canonical.nodes
    }

    /// Arc by declaration position (canonical element index minus `n_nodes`).
    pub fn arc(&self, a: usize) -> &ArcSpec {
        &self.spec.arcs[a]
    }

    pub fn arcs(&self) -> &[ArcSpec] {
        &self.spec.arcs
    }

    /// Canonical node indices of the endpoints of arc `a`.
    pub fn arc_ends(&self, a: usize) -> (usize, usize) {
        self.arc_ends[a]
    }

    pub fn node_layer(&self, i: usize) -> usize {
        self.node_layer[i]
    }

    pub fn layer_nodes(&self, k: usize) -> Range<usize> {
        self.layer_nodes[k].clone()
    }

    pub fn layer_arcs(&self, k: usize) -> &[usize] {
        &self.layer_arcs[k]
    }

    /// Interdependency parents of node `i`, sorted.
    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn has_links(&self) -> bool {
        !self.spec.links.is_empty()
    }

    pub fn has_demand_completion(&self) -> bool {
        self.canonical.nodes.iter().any(|n| n.demand_completion)
    }

    pub fn spaces(&self) -> &[SpaceSpec] {
        &self.spec.spaces
    }

    /// Space index (into [`Network::spaces`]) of a canonical element.
    pub fn element_space(&self, e: usize) -> usize {
        self.element_space[e]
    }

    pub fn element_repair_cost(&self, e: usize) -> f64 {
        if e < self.n_nodes() {
            self.canonical.nodes[e].repair_cost
        } else {
            self.spec.arcs[e - self.n_nodes()].repair_cost
        }
    }

    /// Layer index an element belongs to.
    pub fn element_layer(&self, e: usize) -> usize {
        if e < self.n_nodes() {
            self.node_layer[e]
        } else {
            self.node_layer[self.arc_ends[e - self.n_nodes()].0]
        }
    }

    /// Human-readable element label: `layer:index` for nodes, `arc#k` for arcs.
    pub fn element_label(&self, e: usize) -> String {
        if e < self.n_nodes() {
            self.canonical.nodes[e].node.to_string()
        } else {
            format!("arc#{}", e - self.n_nodes())
        }
    }

    pub fn node_index(&self, node: &NodeRef) -> Option<usize> {
        self.node_lookup.get(node).copied()
    }

    /// Position of `element` in the canonical element order.
    pub fn canonical_index(&self, element: &Element) -> Result<usize> {
        match element {
            Element::Node(n) => self
                .node_index(n)
                .ok_or_else(|| Error::UnknownElement(n.to_string())),
            Element::Arc(a) if *a < self.n_arcs() => Ok(self.n_nodes() + a),
            Element::Arc(a) => Err(Error::UnknownElement(format!("arc#{a}"))),
        }
    }

    /// Inverse of [`Network::canonical_index`].
    pub fn element(&self, index: usize) -> Result<Element> {
        if index < self.n_nodes() {
            Ok(Element::Node(self.canonical.nodes[index].node.clone()))
        } else if index < self.n_elements() {
            Ok(Element::Arc(index - self.n_nodes()))
        } else {
            Err(Error::UnknownElement(format!("#{index}")))
        }
    }

    /// Contiguous canonical node ranges per layer, labelled by layer id.
    pub fn layer_partition(&self) -> Vec<(String, Range<usize>)> {
        self.spec
            .layers
            .iter()
            .cloned()
            .zip(self.layer_nodes.iter().cloned())
            .collect()
    }
}

pub fn canonical_index(net: &Network, element: &Element) -> Result<usize> {
    net.canonical_index(element)
}
