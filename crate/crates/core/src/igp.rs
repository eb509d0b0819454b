//! Shortest paths, ECMP DAGs and per-arc load accounting.
//!
//! Splitting follows the per-node rule: traffic arriving at (or injected
//! into) a node is divided evenly over that node's outgoing arcs in the
//! shortest-path DAG toward the destination. On an extended topology the
//! DAG toward a virtual node spans every candidate egress at minimum
//! distance, so ECMP and iBGP multipath are handled by the same recursion.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::model::{ArcId, ArcKind, ExtendedTopology, Graph, NodeId, WeightVector};
use crate::quantity::{Scalar, Q};
use crate::tm::AggregatedTm;

/// Shortest distance from every node to one destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    pub dest: NodeId,
    dist: Vec<Option<u64>>,
}

impl DistanceMap {
    /// `None` when `n` cannot reach the destination.
    #[inline]
    pub fn get(&self, n: NodeId) -> Option<u64> {
        self.dist[n.0]
    }

    pub fn as_slice(&self) -> &[Option<u64>] {
        &self.dist
    }
}

/// Dijkstra over reversed arcs from `dst`.
pub fn shortest_distances(g: &Graph, w: &WeightVector, dst: NodeId) -> DistanceMap {
    let mut dist: Vec<Option<u64>> = vec![None; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[dst.0] = Some(0);
    heap.push(Reverse((0u64, dst.0)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].is_some_and(|best| d > best) {
            continue;
        }
        for &a in g.in_arcs(NodeId(v)) {
            let u = g.arc(a).src.0;
            let nd = d + w.get(a);
            if dist[u].is_none_or(|cur| nd < cur) {
                dist[u] = Some(nd);
                heap.push(Reverse((nd, u)));
            }
        }
    }
    DistanceMap { dest: dst, dist }
}

/// Looks the destination up by name first.
pub fn shortest_distances_to(g: &Graph, w: &WeightVector, dst: &str) -> Result<DistanceMap> {
    Ok(shortest_distances(g, w, g.require(dst)?))
}

/// The arcs lying on at least one shortest path to `dest`.
#[derive(Debug, Clone)]
pub struct EcmpDag {
    pub dest: NodeId,
    next: Vec<Vec<ArcId>>,
    /// Reachable nodes, upstream first.
    order: Vec<NodeId>,
}

impl EcmpDag {
    pub fn out(&self, n: NodeId) -> &[ArcId] {
        &self.next[n.0]
    }

    pub fn out_degree(&self, n: NodeId) -> usize {
        self.next[n.0].len()
    }

    pub fn arcs(&self) -> Vec<ArcId> {
        let mut v: Vec<ArcId> = self.next.iter().flatten().copied().collect();
        v.sort();
        v
    }

    pub fn contains(&self, a: ArcId) -> bool {
        self.next.iter().any(|arcs| arcs.contains(&a))
    }

    /// Processing order for flow propagation: every DAG arc goes from an
    /// earlier node to a later one.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }
}

pub fn ecmp_dag(g: &Graph, w: &WeightVector, dist: &DistanceMap) -> EcmpDag {
    let mut next = vec![Vec::new(); g.node_count()];
    for (id, arc) in g.arcs() {
        if let (Some(du), Some(dv)) = (dist.get(arc.src), dist.get(arc.dst)) {
            if arc.src != dist.dest && du == w.get(id) + dv {
                next[arc.src.0].push(id);
            }
        }
    }
    let mut order: Vec<NodeId> = (0..g.node_count()).map(NodeId).filter(|&n| dist.get(n).is_some()).collect();
    // Positive weights strictly decrease distance along the DAG; zero-weight
    // arcs only run intra -> neighbor -> virtual, which the rank orders.
    order.sort_by_key(|&n| (Reverse(dist.get(n)), g.node(n).kind.rank(), n));
    EcmpDag { dest: dist.dest, next, order }
}

/// Per-arc load, indexed by [`ArcId`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadMap<S> {
    loads: Vec<S>,
}

impl<S: Scalar> LoadMap<S> {
    pub fn zeros(arcs: usize) -> Self {
        LoadMap { loads: vec![S::zero(); arcs] }
    }

    #[inline]
    pub fn get(&self, a: ArcId) -> &S {
        &self.loads[a.0]
    }

    #[inline]
    pub fn add(&mut self, a: ArcId, v: S) {
        self.loads[a.0] += v;
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.loads
    }

    pub fn merge(&mut self, other: &LoadMap<S>) {
        for (a, b) in self.loads.iter_mut().zip(&other.loads) {
            *a += b.clone();
        }
    }

    pub fn to_f64(&self) -> LoadMap<f64> {
        LoadMap { loads: self.loads.iter().map(Scalar::to_f64).collect() }
    }
}

/// Pushes the injected volumes through the DAG, adding to `loads`.
pub fn propagate<S: Scalar>(
    g: &Graph,
    dist: &DistanceMap,
    dag: &EcmpDag,
    injections: &[(NodeId, S)],
    loads: &mut LoadMap<S>,
) -> Result<()> {
    let mut at_node = vec![S::zero(); g.node_count()];
    let mut any = false;
    for (src, v) in injections {
        if dist.get(*src).is_none() {
            return Err(Error::Unreachable { src: g.name(*src).to_string(), dst: g.name(dag.dest).to_string() });
        }
        if *src != dag.dest && !v.is_zero() {
            at_node[src.0] += v.clone();
            any = true;
        }
    }
    if !any {
        return Ok(());
    }
    for &u in dag.topological_order() {
        if u == dag.dest {
            continue;
        }
        let flow = std::mem::replace(&mut at_node[u.0], S::zero());
        if flow.is_zero() {
            continue;
        }
        let out = dag.out(u);
        if out.is_empty() {
            return Err(Error::Internal(format!("node `{}` holds traffic but has no shortest-path successor", g.name(u))));
        }
        let share = flow / S::from_usize(out.len());
        for &a in out {
            loads.add(a, share.clone());
            at_node[g.arc(a).dst.0] += share.clone();
        }
    }
    Ok(())
}

/// Loads produced by one demand.
pub fn route_demand<S: Scalar>(g: &Graph, w: &WeightVector, src: NodeId, dst: NodeId, volume: &Q) -> Result<LoadMap<S>> {
    let dist = shortest_distances(g, w, dst);
    let dag = ecmp_dag(g, w, &dist);
    let mut loads = LoadMap::zeros(g.arc_count());
    propagate(g, &dist, &dag, &[(src, S::from_q(volume))], &mut loads)?;
    Ok(loads)
}

/// Traffic matrix resolved against a routing graph and grouped by
/// destination, ready for repeated evaluation under different weights.
#[derive(Debug, Clone)]
pub struct CompiledDemands<S> {
    pub by_dest: Vec<(NodeId, Vec<(NodeId, S)>)>,
    /// Weight-invariant load on peering arcs.
    pub fixed: Vec<(ArcId, S)>,
}

pub fn compile_demands<S: Scalar>(xt: &ExtendedTopology, tm: &AggregatedTm) -> Result<CompiledDemands<S>> {
    let g = xt.graph();
    let mut grouped: BTreeMap<NodeId, Vec<(NodeId, S)>> = BTreeMap::new();
    let cells = tm.invar.iter().chain(tm.hp.iter());
    for ((src, dst), v) in cells {
        let s = g.require(src)?;
        let d = g.require(dst)?;
        grouped.entry(d).or_default().push((s, S::from_q(v)));
    }
    let mut fixed = Vec::new();
    if xt.has_inter_arcs() {
        for (peering, v) in &tm.exits {
            let arc = xt.peering_arc(peering).ok_or_else(|| Error::Unknown { kind: "peering link", id: peering.clone() })?;
            fixed.push((arc, S::from_q(v)));
        }
    }
    Ok(CompiledDemands { by_dest: grouped.into_iter().collect(), fixed })
}

pub fn route_compiled<S: Scalar>(g: &Graph, w: &WeightVector, demands: &CompiledDemands<S>) -> Result<LoadMap<S>> {
    let mut loads = LoadMap::zeros(g.arc_count());
    for (dst, sources) in &demands.by_dest {
        let dist = shortest_distances(g, w, *dst);
        let dag = ecmp_dag(g, w, &dist);
        propagate(g, &dist, &dag, sources, &mut loads)?;
    }
    for (arc, v) in &demands.fixed {
        loads.add(*arc, v.clone());
    }
    Ok(loads)
}

/// Loads of every cell of `tm` routed on `xt`.
pub fn compute_loads<S: Scalar>(xt: &ExtendedTopology, w: &WeightVector, tm: &AggregatedTm) -> Result<LoadMap<S>> {
    route_compiled(xt.graph(), w, &compile_demands(xt, tm)?)
}

/// `load / capacity` per arc; 0 on virtual arcs.
pub fn utilizations<S: Scalar>(loads: &LoadMap<S>, g: &Graph) -> Vec<S> {
    g.arcs()
        .map(|(id, arc)| match arc.capacity.finite() {
            Some(c) => loads.get(id).clone() / S::from_q(c),
            None => S::zero(),
        })
        .collect()
}

/// Maximum utilization over arcs of the given classes. Virtual arcs never count.
pub fn u_max<S: Scalar>(loads: &LoadMap<S>, g: &Graph, classes: &[ArcKind]) -> S {
    let mut best = S::zero();
    for (id, arc) in g.arcs() {
        if arc.kind == ArcKind::Virtual || !classes.contains(&arc.kind) {
            continue;
        }
        if let Some(c) = arc.capacity.finite() {
            let u = loads.get(id).clone() / S::from_q(c);
            if u > best {
                best = u;
            }
        }
    }
    best
}
