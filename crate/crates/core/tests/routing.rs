//! Routing checked against brute-force oracles: Floyd-Warshall distances and
//! explicit enumeration of shortest paths with per-hop even splitting.

use std::collections::BTreeMap;

use hplwo::igp::{compute_loads, ecmp_dag, route_demand, shortest_distances};
use hplwo::model::{extend_topology, ArcId, ArcKind, ExtendedTopology, Graph, NodeId, NodeKind, WeightVector};
use hplwo::quantity::int;
use hplwo::synth::{random_instance, Instance, RandomParams};
use hplwo::Q;
use num::Zero;
use proptest::prelude::*;

fn instance(seed: u64, with_invar: bool) -> (Instance, ExtendedTopology) {
    let p = RandomParams { max_nodes: 7, with_invar, ..Default::default() };
    let inst = random_instance(seed, &p).unwrap();
    let xt = extend_topology(&inst.topology, inst.topology.peerings(), &inst.tm.aggregates).unwrap();
    (inst, xt)
}

/// Intra weights taken from `raw`, zero on peering and virtual arcs.
fn weights(xt: &ExtendedTopology, raw: &[u32]) -> WeightVector {
    let mut w = WeightVector::uniform(xt.graph().arc_count(), 0);
    for (i, a) in xt.optimizable_arcs().enumerate() {
        w.set(ArcId(a), raw[i % raw.len()]);
    }
    w
}

fn floyd_warshall(g: &Graph, w: &WeightVector) -> Vec<Vec<Option<u64>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (id, arc) in g.arcs() {
        let (s, t) = (arc.src.0, arc.dst.0);
        let c = w.get(id);
        if d[s][t].is_none_or(|x| c < x) {
            d[s][t] = Some(c);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|x| a + b < x) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Walks every shortest path from `src` to `dst`, multiplying the even
/// split factor at each hop.
fn enumerate_paths(g: &Graph, w: &WeightVector, d: &[Vec<Option<u64>>], src: NodeId, dst: NodeId, volume: Q) -> BTreeMap<ArcId, Q> {
    let on_path = |a: ArcId| {
        let arc = g.arc(a);
        match (d[arc.src.0][dst.0], d[arc.dst.0][dst.0]) {
            (Some(x), Some(y)) => x == w.get(a) + y,
            _ => false,
        }
    };
    let mut out = BTreeMap::new();
    let mut stack = vec![(src, volume)];
    while let Some((n, v)) = stack.pop() {
        if n == dst {
            continue;
        }
        let next: Vec<ArcId> = g.out_arcs(n).iter().copied().filter(|&a| on_path(a)).collect();
        let share = v / int(next.len() as i64);
        for a in next {
            *out.entry(a).or_insert_with(Q::zero) += &share;
            stack.push((g.arc(a).dst, share.clone()));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distances_match_floyd_warshall(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=6, 32)) {
        let (_, xt) = instance(seed, true);
        let g = xt.graph();
        let w = weights(&xt, &raw);
        let fw = floyd_warshall(g, &w);
        for (dst, _) in g.nodes() {
            let d = shortest_distances(g, &w, dst);
            for (n, _) in g.nodes() {
                prop_assert_eq!(d.get(n), fw[n.0][dst.0]);
            }
        }
    }

    #[test]
    fn ecmp_dag_is_acyclic_and_tight(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=6, 32)) {
        let (_, xt) = instance(seed, true);
        let g = xt.graph();
        let w = weights(&xt, &raw);
        for (dst, node) in g.nodes() {
            if node.kind != NodeKind::Intra && node.kind != NodeKind::Virtual {
                continue;
            }
            let dist = shortest_distances(g, &w, dst);
            let dag = ecmp_dag(g, &w, &dist);
            let order = dag.topological_order();
            let pos: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            for a in dag.arcs() {
                let arc = g.arc(a);
                let (du, dv) = (dist.get(arc.src).unwrap(), dist.get(arc.dst).unwrap());
                prop_assert_eq!(du, w.get(a) + dv);
                // Sources come before the nodes they feed.
                prop_assert!(pos[&arc.src] < pos[&arc.dst]);
            }
        }
    }

    #[test]
    fn single_demand_split_matches_path_enumeration(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=4, 32), pick in 0usize..1000) {
        let (inst, xt) = instance(seed, true);
        let t = &inst.topology;
        let g = t.graph();
        let w = weights(&xt, &raw);
        let w = WeightVector::new(w.as_slice()[..t.arc_count()].to_vec());
        let n = g.node_count();
        let (src, dst) = (NodeId(pick % n), NodeId((pick / n + 1 + pick % n) % n));
        prop_assume!(src != dst);
        let fw = floyd_warshall(g, &w);
        let loads = route_demand::<Q>(g, &w, src, dst, &int(12)).unwrap();
        let oracle = enumerate_paths(g, &w, &fw, src, dst, int(12));
        for (id, _) in g.arcs() {
            let expected = oracle.get(&id).cloned().unwrap_or_else(Q::zero);
            prop_assert_eq!(loads.get(id), &expected, "arc {:?}", id);
        }
    }

    #[test]
    fn flow_is_conserved(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=6, 32)) {
        let (inst, xt) = instance(seed, false);
        let g = xt.graph();
        let w = weights(&xt, &raw);
        let loads = compute_loads::<Q>(&xt, &w, &inst.tm).unwrap();
        let mut net: BTreeMap<String, Q> = BTreeMap::new();
        for ((s, a), v) in &inst.tm.hp {
            *net.entry(s.clone()).or_insert_with(Q::zero) += v;
            *net.entry(a.clone()).or_insert_with(Q::zero) -= v;
        }
        for (n, node) in g.nodes() {
            let out: Q = g.out_arcs(n).iter().map(|&a| loads.get(a)).sum();
            let inn: Q = g.in_arcs(n).iter().map(|&a| loads.get(a)).sum();
            let expected = net.get(&node.name).cloned().unwrap_or_else(Q::zero);
            prop_assert_eq!(out - inn, expected, "node {}", node.name);
        }
    }

    #[test]
    fn loads_are_linear_in_demand(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=6, 32), k in 1i64..5) {
        let (inst, xt) = instance(seed, true);
        let w = weights(&xt, &raw);
        let base = compute_loads::<Q>(&xt, &w, &inst.tm).unwrap();
        let doubled = compute_loads::<Q>(&xt, &w, &inst.tm.plus(&inst.tm)).unwrap();
        let mut scaled_tm = inst.tm.clone();
        for v in scaled_tm.invar.values_mut().chain(scaled_tm.hp.values_mut()).chain(scaled_tm.exits.values_mut()) {
            *v = &*v * int(k);
        }
        let scaled = compute_loads::<Q>(&xt, &w, &scaled_tm).unwrap();
        for (id, _) in xt.graph().arcs() {
            prop_assert_eq!(doubled.get(id), &(base.get(id) * int(2)));
            prop_assert_eq!(scaled.get(id), &(base.get(id) * int(k)));
        }
    }

    #[test]
    fn exact_and_float_loads_agree(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=6, 32)) {
        let (inst, xt) = instance(seed, true);
        let w = weights(&xt, &raw);
        let exact = compute_loads::<Q>(&xt, &w, &inst.tm).unwrap();
        let float = compute_loads::<f64>(&xt, &w, &inst.tm).unwrap();
        for (id, arc) in xt.graph().arcs() {
            let e = hplwo::Scalar::to_f64(exact.get(id));
            let f = *float.get(id);
            prop_assert!(hplwo::quantity::approx_eq(e, f, 1e-9), "{:?} arc {:?}: {} vs {}", arc.kind, id, e, f);
        }
    }
}

#[test]
fn virtual_arcs_only_leave_neighbors() {
    let (_, xt) = instance(3, true);
    let g = xt.graph();
    for (_, arc) in g.arcs() {
        if arc.kind == ArcKind::Virtual {
            assert_eq!(g.node(arc.src).kind, NodeKind::Neighbor);
            assert_eq!(g.node(arc.dst).kind, NodeKind::Virtual);
        }
    }
    xt.check_invariants().unwrap();
}
