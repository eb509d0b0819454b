//! Small hand-built instances used by tests, the acceptance harness and
//! `hplwo gen toy`.

use std::collections::BTreeSet;

use num::Zero;

use crate::model::{build_topology, extend_topology, ExtendedTopology, Egress, Peering, Topology, TopologySpec, WeightVector};
use crate::quantity::{int, Q};
use crate::tm::{AggregatedTm, EgressAggregate};

/// Triangle R1-R2-R3 with one peering on R2 and one on R3. Deployed weights
/// are inverse to capacity, which makes R2 the nearer egress from R1.
pub const TOY_TOPOLOGY: &str = "\
node R1 intra
node R2 intra
node R3 intra
link R1R2 R1 R2 10 120
link R1R3 R1 R3 8 150
link R3R2 R3 R2 8 150
peering p1 R2 N1 10
peering p2 R3 N2 10
";

/// Prefix P1 is learned at both border routers, so it is hot-potato.
pub const TOY_ROUTES: &str = "\
route R2 P1 R2 p1
route R3 P1 R3 p2
";

pub const TOY_FLOWS: &str = "flow R1 P1 5\n";

pub fn toy_spec() -> TopologySpec {
    TopologySpec::parse(TOY_TOPOLOGY, "toy").expect("fixture parses")
}

pub fn toy_topology() -> Topology {
    build_topology(&toy_spec()).expect("fixture is valid")
}

/// Symmetric toy weights: `w1` on R1-R2, `w2` on R1-R3, `w3` on R3-R2.
pub fn toy_weights(t: &Topology, w1: u32, w2: u32, w3: u32) -> WeightVector {
    let mut w = t.deployed_weights().clone();
    for (id, v) in [("R1R2", w1), ("R1R3", w2), ("R3R2", w3)] {
        let l = t.link(id).expect("toy link");
        w.set(l.forward, v);
        w.set(l.reverse, v);
    }
    w
}

pub fn toy_aggregate() -> EgressAggregate {
    EgressAggregate {
        id: "A0".into(),
        egress_set: [Egress::new("R2", "p1"), Egress::new("R3", "p2")].into(),
        members: BTreeSet::from(["P1".to_string()]),
        volume: int(5),
    }
}

pub fn toy_extended_parts() -> (Topology, Vec<Peering>, Vec<EgressAggregate>) {
    let t = toy_topology();
    let peerings = t.peerings().to_vec();
    (t, peerings, vec![toy_aggregate()])
}

pub fn toy_extended() -> ExtendedTopology {
    let (t, p, a) = toy_extended_parts();
    extend_topology(&t, &p, &a).expect("fixture extends")
}

/// `hp R1 A0 5`, the single demand of the toy.
pub fn toy_tm() -> AggregatedTm {
    let mut agg = toy_aggregate();
    agg.members.clear();
    let mut tm = AggregatedTm { aggregates: vec![agg], ..Default::default() };
    tm.hp.insert(("R1".into(), "A0".into()), int(5));
    tm
}

/// Five routers; R3 holds two peerings toward different neighbors.
pub const MULTI_PEERING_TOPOLOGY: &str = "\
node R0 intra
node R1 intra
node R2 intra
node R3 intra
node R4 intra
link R0R1 R0 R1 100 2
link R0R4 R0 R4 100 1
link R4R1 R4 R1 100 1
link R0R2 R0 R2 100 2
link R2R3 R2 R3 100 1
peering pN1 R1 N1 100
peering pN2 R2 N2 100
peering pN3 R3 N3 100
peering pN4 R3 N4 100
";

pub fn multi_peering_spec() -> TopologySpec {
    TopologySpec::parse(MULTI_PEERING_TOPOLOGY, "multi-peering").expect("fixture parses")
}

fn aggregate(id: &str, set: &[(&str, &str)]) -> EgressAggregate {
    EgressAggregate {
        id: id.into(),
        egress_set: set.iter().map(|(r, p)| Egress::new(r, p)).collect(),
        members: BTreeSet::new(),
        volume: Q::zero(),
    }
}

/// Aggregates P1 = {R1:pN1, R2:pN2}, P3 = {R1:pN1, R2:pN2, R3:pN4} and
/// P4 = {R2:pN2, R3:pN3, R3:pN4}.
pub fn multi_peering() -> (Topology, Vec<Peering>, Vec<EgressAggregate>) {
    let t = build_topology(&multi_peering_spec()).expect("fixture is valid");
    let peerings = t.peerings().to_vec();
    let aggs = vec![
        aggregate("P1", &[("R1", "pN1"), ("R2", "pN2")]),
        aggregate("P3", &[("R1", "pN1"), ("R2", "pN2"), ("R3", "pN4")]),
        aggregate("P4", &[("R2", "pN2"), ("R3", "pN3"), ("R3", "pN4")]),
    ];
    (t, peerings, aggs)
}

/// Only P1, under the file weights: R0 reaches R1 directly, via R4, and
/// reaches R2 directly, all at distance 2.
pub fn multi_peering_p1() -> (ExtendedTopology, WeightVector) {
    let (t, peerings, aggs) = multi_peering();
    let p1: Vec<EgressAggregate> = aggs.into_iter().filter(|a| a.id == "P1").collect();
    let xt = extend_topology(&t, &peerings, &p1).expect("fixture extends");
    let w = t.deployed_weights().clone();
    (xt, w)
}

/// Two candidate peerings with capacities 10 and 5. Under unit weights the
/// short path sends everything out of the larger one.
pub const TWO_PEERING_TOPOLOGY: &str = "\
node R1 intra
node R2 intra
node R3 intra
node R4 intra
node R5 intra
link R1R2 R1 R2 1000 1
link R1R4 R1 R4 1000 1
link R4R2 R4 R2 1000 1
link R1R5 R1 R5 1000 1
link R5R3 R5 R3 1000 1
peering big R2 N1 10
peering small R3 N2 5
";

pub fn two_peering() -> (ExtendedTopology, AggregatedTm) {
    let spec = TopologySpec::parse(TWO_PEERING_TOPOLOGY, "two-peering").expect("fixture parses");
    let t = build_topology(&spec).expect("fixture is valid");
    let agg = aggregate("A", &[("R2", "big"), ("R3", "small")]);
    let xt = extend_topology(&t, t.peerings(), std::slice::from_ref(&agg)).expect("fixture extends");
    let mut tm = AggregatedTm { aggregates: vec![agg], ..Default::default() };
    tm.hp.insert(("R1".into(), "A".into()), int(10));
    (xt, tm)
}
