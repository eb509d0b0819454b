//! Graph model: the intradomain topology and its extension with peering
//! links, neighbor nodes and virtual destination nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num::Signed;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quantity::{format_quantity, parse_quantity, Q};
use crate::tm::{AggregatedTm, EgressAggregate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Intra,
    Neighbor,
    Virtual,
}

impl NodeKind {
    /// Position along any zero-weight chain; used to order equal-distance nodes.
    pub(crate) fn rank(self) -> u8 {
        match self {
            NodeKind::Intra => 0,
            NodeKind::Neighbor => 1,
            NodeKind::Virtual => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcKind {
    Intra,
    Inter,
    Virtual,
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcKind::Intra => "intra",
            ArcKind::Inter => "inter",
            ArcKind::Virtual => "virtual",
        })
    }
}

/// Virtual arcs carry the `Unbounded` sentinel; their utilization is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacity {
    Finite(Q),
    Unbounded,
}

impl Capacity {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: ArcKind,
    pub capacity: Capacity,
    /// Link id for intra arcs, peering id for inter arcs.
    pub label: String,
}

/// Directed multigraph with name lookup and adjacency in both directions.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
    index: HashMap<String, NodeId>,
}

impl Graph {
    fn add_node(&mut self, name: &str, kind: NodeKind) -> Result<NodeId> {
        if self.index.contains_key(name) {
            return Err(Error::Duplicate(name.to_string()));
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { name: name.to_string(), kind });
        self.out_arcs.push(Vec::new());
        self.in_arcs.push(Vec::new());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    fn add_arc(&mut self, src: NodeId, dst: NodeId, kind: ArcKind, capacity: Capacity, label: &str) -> ArcId {
        let id = ArcId(self.arcs.len());
        self.arcs.push(Arc { src, dst, kind, capacity, label: label.to_string() });
        self.out_arcs[src.0].push(id);
        self.in_arcs[dst.0].push(id);
        id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (ArcId, &Arc)> {
        self.arcs.iter().enumerate().map(|(i, a)| (ArcId(i), a))
    }

    pub fn out_arcs(&self, n: NodeId) -> &[ArcId] {
        &self.out_arcs[n.0]
    }

    pub fn in_arcs(&self, n: NodeId) -> &[ArcId] {
        &self.in_arcs[n.0]
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<NodeId> {
        self.lookup(name).ok_or_else(|| Error::Unknown { kind: "node", id: name.to_string() })
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }
}

/// Integer IGP weight per intra arc, indexed by [`ArcId`]. Arcs beyond the
/// intra range (inter and virtual) implicitly weigh 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector(Vec<u32>);

impl WeightVector {
    pub fn new(weights: Vec<u32>) -> Self {
        WeightVector(weights)
    }

    pub fn uniform(arcs: usize, w: u32) -> Self {
        WeightVector(vec![w; arcs])
    }

    #[inline]
    pub fn get(&self, arc: ArcId) -> u64 {
        self.0.get(arc.0).map_or(0, |&w| u64::from(w))
    }

    pub fn set(&mut self, arc: ArcId, w: u32) {
        self.0[arc.0] = w;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Topology description file

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub id: String,
    pub a: String,
    pub b: String,
    pub capacity: Q,
    pub weight: u32,
}

/// A directed interdomain link from an egress router to a neighbor router.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peering {
    pub id: String,
    pub egress: String,
    pub neighbor: String,
    pub capacity: Q,
}

/// Parsed topology file, prior to validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologySpec {
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
    pub peerings: Vec<Peering>,
}

impl TopologySpec {
    /// Reads the line format:
    ///
    /// ```text
    /// node <id> intra
    /// link <id> <a> <b> <capacity_mbps> <weight>
    /// peering <id> <egress_router> <neighbor_id> <capacity_mbps>
    /// ```
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut spec = TopologySpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let err = |m: String| Error::parse(source_name, lineno, m);
            let qty = |s: &str| parse_quantity(s).ok_or_else(|| err(format!("bad quantity `{s}`")));
            match fields[0] {
                "node" => {
                    if fields.len() != 3 {
                        return Err(err(format!("expected `node <id> intra`, got {} fields", fields.len())));
                    }
                    if fields[2] != "intra" {
                        return Err(err(format!("unsupported node kind `{}`", fields[2])));
                    }
                    spec.nodes.push(fields[1].to_string());
                }
                "link" => {
                    if fields.len() != 6 {
                        return Err(err(format!(
                            "expected `link <id> <a> <b> <capacity> <weight>`, got {} fields",
                            fields.len()
                        )));
                    }
                    let weight = fields[5]
                        .parse::<u32>()
                        .map_err(|_| err(format!("bad weight `{}`", fields[5])))?;
                    spec.links.push(LinkSpec {
                        id: fields[1].to_string(),
                        a: fields[2].to_string(),
                        b: fields[3].to_string(),
                        capacity: qty(fields[4])?,
                        weight,
                    });
                }
                "peering" => {
                    if fields.len() != 5 {
                        return Err(err(format!(
                            "expected `peering <id> <egress> <neighbor> <capacity>`, got {} fields",
                            fields.len()
                        )));
                    }
                    spec.peerings.push(Peering {
                        id: fields[1].to_string(),
                        egress: fields[2].to_string(),
                        neighbor: fields[3].to_string(),
                        capacity: qty(fields[4])?,
                    });
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("node {n} intra\n"));
        }
        for l in &self.links {
            out.push_str(&format!(
                "link {} {} {} {} {}\n",
                l.id,
                l.a,
                l.b,
                format_quantity(&l.capacity),
                l.weight
            ));
        }
        for p in &self.peerings {
            out.push_str(&format!(
                "peering {} {} {} {}\n",
                p.id,
                p.egress,
                p.neighbor,
                format_quantity(&p.capacity)
            ));
        }
        out
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

// ---------------------------------------------------------------------------
// Topology

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub id: String,
    pub forward: ArcId,
    pub reverse: ArcId,
}

/// Validated intradomain topology. Every bidirectional link becomes two
/// directed arcs; arc ids `0..arc_count` are stable in every extension.
#[derive(Debug, Clone)]
pub struct Topology {
    graph: Graph,
    links: Vec<Link>,
    deployed: WeightVector,
    peerings: Vec<Peering>,
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology> {
    let mut graph = Graph::default();
    for n in &spec.nodes {
        graph.add_node(n, NodeKind::Intra)?;
    }
    let mut ids = BTreeSet::new();
    let mut links = Vec::with_capacity(spec.links.len());
    let mut weights = Vec::with_capacity(2 * spec.links.len());
    for l in &spec.links {
        if !ids.insert(l.id.clone()) {
            return Err(Error::Duplicate(l.id.clone()));
        }
        let a = graph.lookup(&l.a).ok_or_else(|| Error::Unknown { kind: "link endpoint", id: l.a.clone() })?;
        let b = graph.lookup(&l.b).ok_or_else(|| Error::Unknown { kind: "link endpoint", id: l.b.clone() })?;
        if a == b {
            return Err(Error::Invalid(format!("link `{}` is a self-loop", l.id)));
        }
        if !l.capacity.is_positive() {
            return Err(Error::Invalid(format!("link `{}` has non-positive capacity", l.id)));
        }
        if l.weight == 0 {
            return Err(Error::Invalid(format!("link `{}` has weight 0", l.id)));
        }
        let cap = Capacity::Finite(l.capacity.clone());
        let forward = graph.add_arc(a, b, ArcKind::Intra, cap.clone(), &l.id);
        let reverse = graph.add_arc(b, a, ArcKind::Intra, cap, &l.id);
        weights.extend([l.weight, l.weight]);
        links.push(Link { id: l.id.clone(), forward, reverse });
    }
    for p in &spec.peerings {
        if !ids.insert(p.id.clone()) {
            return Err(Error::Duplicate(p.id.clone()));
        }
        match graph.lookup(&p.egress) {
            Some(_) => {}
            None => return Err(Error::Unknown { kind: "egress router", id: p.egress.clone() }),
        }
        if graph.lookup(&p.neighbor).is_some() {
            return Err(Error::Invalid(format!(
                "peering `{}` names neighbor `{}`, which is an intradomain node",
                p.id, p.neighbor
            )));
        }
        if !p.capacity.is_positive() {
            return Err(Error::Invalid(format!("peering `{}` has non-positive capacity", p.id)));
        }
    }
    let topo = Topology { graph, links, deployed: WeightVector::new(weights), peerings: spec.peerings.clone() };
    if !topo.is_connected() {
        return Err(Error::Invalid("intradomain topology is not connected".into()));
    }
    Ok(topo)
}

impl Topology {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }

    /// Weights read from the topology file, i.e. the currently deployed IGP.
    pub fn deployed_weights(&self) -> &WeightVector {
        &self.deployed
    }

    pub fn peerings(&self) -> &[Peering] {
        &self.peerings
    }

    pub fn peering(&self, id: &str) -> Option<&Peering> {
        self.peerings.iter().find(|p| p.id == id)
    }

    pub fn arc_count(&self) -> usize {
        self.graph.arc_count()
    }

    fn is_connected(&self) -> bool {
        let n = self.graph.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &a in self.graph.out_arcs(u) {
                let v = self.graph.arc(a).dst;
                if !seen[v.0] {
                    seen[v.0] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

// ---------------------------------------------------------------------------
// Extended topology

/// One routing egress: the router holding the route and the peering over
/// which it was learned.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Egress {
    pub router: String,
    pub peering: String,
}

impl Egress {
    pub fn new(router: &str, peering: &str) -> Self {
        Egress { router: router.to_string(), peering: peering.to_string() }
    }
}

impl fmt::Display for Egress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.router, self.peering)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualDestination {
    pub aggregate: String,
    pub node: NodeId,
    pub egress_set: BTreeSet<Egress>,
}

/// The routing graph the optimizer works on: the base topology plus one
/// neighbor node per peering link, one virtual node per aggregate, and the
/// zero-weight arcs between them.
#[derive(Debug, Clone)]
pub struct ExtendedTopology {
    graph: Graph,
    base: Topology,
    peering_arcs: BTreeMap<String, ArcId>,
    virtuals: Vec<VirtualDestination>,
    simplified: bool,
}

pub fn extend_topology(t: &Topology, peerings: &[Peering], aggregates: &[EgressAggregate]) -> Result<ExtendedTopology> {
    let mut graph = t.graph.clone();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for p in peerings {
        *counts.entry(p.neighbor.as_str()).or_default() += 1;
    }
    let mut neighbor_of = BTreeMap::new();
    let mut peering_arcs = BTreeMap::new();
    let mut by_id = BTreeMap::new();
    for p in peerings {
        let egress = graph.lookup(&p.egress).ok_or_else(|| Error::Unknown { kind: "egress router", id: p.egress.clone() })?;
        if graph.node(egress).kind != NodeKind::Intra {
            return Err(Error::Invalid(format!("peering `{}` does not start at an intradomain router", p.id)));
        }
        let name = if counts[p.neighbor.as_str()] > 1 { format!("{}/{}", p.neighbor, p.id) } else { p.neighbor.clone() };
        let neighbor = graph.add_node(&name, NodeKind::Neighbor)?;
        let arc = graph.add_arc(egress, neighbor, ArcKind::Inter, Capacity::Finite(p.capacity.clone()), &p.id);
        if by_id.insert(p.id.clone(), p).is_some() {
            return Err(Error::Duplicate(p.id.clone()));
        }
        neighbor_of.insert(p.id.clone(), neighbor);
        peering_arcs.insert(p.id.clone(), arc);
    }
    let mut virtuals = Vec::with_capacity(aggregates.len());
    for agg in aggregates {
        if agg.egress_set.is_empty() {
            return Err(Error::Invalid(format!("aggregate `{}` has an empty egress set", agg.id)));
        }
        for e in &agg.egress_set {
            let p = by_id.get(&e.peering).ok_or_else(|| Error::Unknown { kind: "peering link", id: e.peering.clone() })?;
            if p.egress != e.router {
                return Err(Error::Invalid(format!(
                    "aggregate `{}` pairs peering `{}` with router `{}`, but it is attached to `{}`",
                    agg.id, e.peering, e.router, p.egress
                )));
            }
        }
        let node = graph.add_node(&agg.id, NodeKind::Virtual)?;
        for e in &agg.egress_set {
            graph.add_arc(neighbor_of[&e.peering], node, ArcKind::Virtual, Capacity::Unbounded, &agg.id);
        }
        virtuals.push(VirtualDestination { aggregate: agg.id.clone(), node, egress_set: agg.egress_set.clone() });
    }
    let xt = ExtendedTopology { graph, base: t.clone(), peering_arcs, virtuals, simplified: false };
    xt.check_invariants()?;
    Ok(xt)
}

/// Drops peering arcs and neighbor nodes; every virtual node is attached
/// directly to its candidate egress routers. Only valid when interdomain
/// links are not part of the objective.
pub fn simplify_model(xt: &ExtendedTopology) -> ExtendedTopology {
    let mut graph = xt.base.graph.clone();
    let mut virtuals = Vec::with_capacity(xt.virtuals.len());
    for v in &xt.virtuals {
        let node = graph.add_node(&v.aggregate, NodeKind::Virtual).expect("aggregate ids are unique");
        let routers: BTreeSet<&str> = v.egress_set.iter().map(|e| e.router.as_str()).collect();
        for r in routers {
            let src = graph.lookup(r).expect("validated at extension time");
            graph.add_arc(src, node, ArcKind::Virtual, Capacity::Unbounded, &v.aggregate);
        }
        virtuals.push(VirtualDestination { node, ..v.clone() });
    }
    ExtendedTopology { graph, base: xt.base.clone(), peering_arcs: BTreeMap::new(), virtuals, simplified: true }
}

impl ExtendedTopology {
    /// The base topology with no interdomain elements at all.
    pub fn intra_only(t: &Topology) -> Self {
        ExtendedTopology {
            graph: t.graph.clone(),
            base: t.clone(),
            peering_arcs: BTreeMap::new(),
            virtuals: Vec::new(),
            simplified: false,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn base(&self) -> &Topology {
        &self.base
    }

    pub fn virtuals(&self) -> &[VirtualDestination] {
        &self.virtuals
    }

    pub fn peering_arc(&self, peering: &str) -> Option<ArcId> {
        self.peering_arcs.get(peering).copied()
    }

    pub fn peering_arcs(&self) -> &BTreeMap<String, ArcId> {
        &self.peering_arcs
    }

    pub fn has_inter_arcs(&self) -> bool {
        !self.peering_arcs.is_empty()
    }

    pub fn is_simplified(&self) -> bool {
        self.simplified
    }

    /// Intra arcs are the only optimizable ones.
    pub fn optimizable_arcs(&self) -> std::ops::Range<usize> {
        0..self.base.arc_count()
    }

    /// Checks the structural invariants of the node/arc partition.
    pub fn check_invariants(&self) -> Result<()> {
        let g = &self.graph;
        for (id, arc) in g.arcs() {
            let (sk, dk) = (g.node(arc.src).kind, g.node(arc.dst).kind);
            let expected = match (sk, dk) {
                (NodeKind::Intra, NodeKind::Intra) => ArcKind::Intra,
                (NodeKind::Intra, NodeKind::Neighbor) => ArcKind::Inter,
                (NodeKind::Neighbor, NodeKind::Virtual) => ArcKind::Virtual,
                (NodeKind::Intra, NodeKind::Virtual) if self.simplified => ArcKind::Virtual,
                _ => {
                    return Err(Error::Internal(format!(
                        "arc {} joins {:?} to {:?}, which is not a legal pairing",
                        id.0, sk, dk
                    )))
                }
            };
            if arc.kind != expected {
                return Err(Error::Internal(format!("arc {} has kind {} but endpoints imply {}", id.0, arc.kind, expected)));
            }
            if arc.kind == ArcKind::Intra && id.0 >= self.base.arc_count() {
                return Err(Error::Internal(format!("intra arc {} outside the optimizable range", id.0)));
            }
            if (arc.kind == ArcKind::Virtual) != (arc.capacity == Capacity::Unbounded) {
                return Err(Error::Internal(format!("arc {} capacity does not match its kind", id.0)));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Instance transformations

/// Maps capacities through `capacity_map` (identity where unmapped) and
/// multiplies every traffic matrix cell by `demand_factor`.
pub fn scale_instance(
    t: &TopologySpec,
    tm: &AggregatedTm,
    capacity_map: &BTreeMap<Q, Q>,
    demand_factor: &Q,
) -> Result<(TopologySpec, AggregatedTm)> {
    if !demand_factor.is_positive() {
        return Err(Error::Invalid("demand factor must be positive".into()));
    }
    if let Some((from, to)) = capacity_map.iter().find(|(_, to)| !to.is_positive()) {
        return Err(Error::Invalid(format!(
            "capacity map sends {} to non-positive {}",
            format_quantity(from),
            format_quantity(to)
        )));
    }
    let map = |c: &Q| capacity_map.get(c).cloned().unwrap_or_else(|| c.clone());
    let mut spec = t.clone();
    for l in &mut spec.links {
        l.capacity = map(&l.capacity);
    }
    for p in &mut spec.peerings {
        p.capacity = map(&p.capacity);
    }
    let mut scaled = tm.clone();
    for v in scaled.invar.values_mut().chain(scaled.hp.values_mut()).chain(scaled.exits.values_mut()) {
        *v = &*v * demand_factor;
    }
    for a in &mut scaled.aggregates {
        a.volume = &a.volume * demand_factor;
    }
    Ok((spec, scaled))
}

/// Short content hash identifying an instance across output files.
pub fn instance_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}
