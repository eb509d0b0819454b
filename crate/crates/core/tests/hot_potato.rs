use std::collections::BTreeSet;

use hplwo::bgp::classify_prefixes;
use hplwo::igp::compute_loads;
use hplwo::model::{build_topology, extend_topology, simplify_model, ArcId, ArcKind, Egress, ExtendedTopology, TopologySpec, WeightVector};
use hplwo::quantity::{int, ratio};
use hplwo::sim::{fold_hot_potato, resulting_loads, select_egresses, TieBreak};
use hplwo::synth::{backbone, random_instance, Instance, BackboneParams, RandomParams};
use hplwo::tm::{aggregate_by_egress_set, attach_volumes, AggregatedTm, EgressAggregate};
use hplwo::Q;
use num::Zero;
use proptest::prelude::*;

fn instance(seed: u64, with_invar: bool) -> (Instance, ExtendedTopology) {
    let p = RandomParams { with_invar, ..Default::default() };
    let inst = random_instance(seed, &p).unwrap();
    let xt = extend_topology(&inst.topology, inst.topology.peerings(), &inst.tm.aggregates).unwrap();
    (inst, xt)
}

fn weights(xt: &ExtendedTopology, raw: &[u32]) -> WeightVector {
    let mut w = WeightVector::uniform(xt.graph().arc_count(), 0);
    for (i, a) in xt.optimizable_arcs().enumerate() {
        w.set(ArcId(a), raw[i % raw.len()]);
    }
    w
}

fn total(map: impl IntoIterator<Item = Q>) -> Q {
    map.into_iter().fold(Q::zero(), |a, b| a + b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Router-by-router forwarding lands on the same loads as routing on the
    /// extended graph, peering arcs included.
    #[test]
    fn simulator_matches_extended_routing(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=5, 40)) {
        let (inst, xt) = instance(seed, true);
        let w = weights(&xt, &raw);
        let model = compute_loads::<Q>(&xt, &w, &inst.tm).unwrap();
        let sim = resulting_loads::<Q>(&xt, &w, &inst.tm, TieBreak::Multipath).unwrap();
        for (id, arc) in xt.graph().arcs() {
            if arc.kind != ArcKind::Virtual {
                prop_assert_eq!(model.get(id), sim.get(id), "arc {}", arc.label);
            }
        }
    }

    #[test]
    fn folding_conserves_volume(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=5, 40), lowest in any::<bool>()) {
        let (inst, xt) = instance(seed, true);
        let tie = if lowest { TieBreak::LowestId } else { TieBreak::Multipath };
        let w = weights(&xt, &raw);
        let folded = fold_hot_potato(&inst.topology, &w, &inst.tm, tie).unwrap();
        prop_assert!(folded.hp.is_empty());
        let hp = total(inst.tm.hp.values().cloned());
        prop_assert_eq!(total(folded.invar.values().cloned()), total(inst.tm.invar.values().cloned()) + &hp);
        prop_assert_eq!(total(folded.exits.values().cloned()), total(inst.tm.exits.values().cloned()) + &hp);
        // Every folded destination is a router of the aggregate's egress set.
        let folded_only = fold_hot_potato(&inst.topology, &w, &AggregatedTm { invar: Default::default(), exits: Default::default(), ..inst.tm.clone() }, tie).unwrap();
        let allowed: BTreeSet<&str> = inst.tm.aggregates.iter().flat_map(|a| a.routers()).collect();
        for (_, e) in folded_only.invar.keys() {
            prop_assert!(allowed.contains(e.as_str()));
        }
    }

    #[test]
    fn lowest_id_uses_one_egress_per_ingress(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=5, 40)) {
        let (inst, xt) = instance(seed, false);
        let w = weights(&xt, &raw);
        for (s, a) in inst.tm.hp.keys() {
            let agg = inst.tm.aggregate(a).unwrap();
            let chosen = select_egresses(&inst.topology, &w, &agg.egress_set, s, TieBreak::LowestId).unwrap();
            let routers: BTreeSet<&str> = chosen.iter().map(|e| e.router.as_str()).collect();
            prop_assert_eq!(routers.len(), 1);
            let all = select_egresses(&inst.topology, &w, &agg.egress_set, s, TieBreak::Multipath).unwrap();
            prop_assert!(chosen.is_subset(&all));
            let lowest = all.iter().map(|e| e.router.as_str()).min().unwrap();
            prop_assert!(routers.contains(lowest));
        }
    }

    /// Dropping the peering arcs does not move any intradomain load.
    #[test]
    fn simplified_model_keeps_intra_loads(seed in 0u64..10_000, raw in prop::collection::vec(1u32..=5, 40)) {
        let (inst, xt) = instance(seed, true);
        let simple = simplify_model(&xt);
        simple.check_invariants().unwrap();
        let w_full = weights(&xt, &raw);
        let w_simple = weights(&simple, &raw);
        let full = compute_loads::<Q>(&xt, &w_full, &inst.tm).unwrap();
        let reduced = compute_loads::<Q>(&simple, &w_simple, &inst.tm).unwrap();
        for a in xt.optimizable_arcs() {
            prop_assert_eq!(full.get(ArcId(a)), reduced.get(ArcId(a)));
        }
    }
}

const TWO_EGRESS: &str = "\
node X intra
node Y1 intra
node Y2 intra
node E1 intra
node E2 intra
link XY1 X Y1 100 1
link XY2 X Y2 100 1
link Y1E1 Y1 E1 100 1
link Y2E1 Y2 E1 100 1
link Y2E2 Y2 E2 100 1
peering p1 E1 N1 100
peering p2 E2 N2 100
";

/// Y2 is as close to E2 as to E1, so hot-potato forwarding sends half of
/// what reaches Y2 toward E2. Routing the folded matrix per destination
/// instead splits X's E1-bound share over both Y1 and Y2.
#[test]
fn per_destination_routing_of_folded_matrix_differs_from_forwarding() {
    let spec = TopologySpec::parse(TWO_EGRESS, "two-egress").unwrap();
    let t = build_topology(&spec).unwrap();
    let agg = EgressAggregate {
        id: "A".into(),
        egress_set: [Egress::new("E1", "p1"), Egress::new("E2", "p2")].into(),
        members: BTreeSet::new(),
        volume: int(8),
    };
    let xt = extend_topology(&t, t.peerings(), std::slice::from_ref(&agg)).unwrap();
    let mut tm = AggregatedTm { aggregates: vec![agg], ..Default::default() };
    tm.hp.insert(("X".into(), "A".into()), int(8));
    let w = t.deployed_weights().clone();
    let w_xt = weights(&xt, &[1]);

    let forwarded = resulting_loads::<Q>(&xt, &w_xt, &tm, TieBreak::Multipath).unwrap();
    let model = compute_loads::<Q>(&xt, &w_xt, &tm).unwrap();
    let xy1 = t.link("XY1").unwrap().forward;
    assert_eq!(forwarded.get(xy1), &int(4));
    assert_eq!(model.get(xy1), &int(4));

    let folded = fold_hot_potato(&t, &w, &tm, TieBreak::Multipath).unwrap();
    assert_eq!(folded.invar[&("X".to_string(), "E1".to_string())], int(6));
    assert_eq!(folded.invar[&("X".to_string(), "E2".to_string())], int(2));
    let per_dest = compute_loads::<Q>(&ExtendedTopology::intra_only(&t), &w, &folded).unwrap();
    assert_eq!(per_dest.get(xy1), &int(3));
    assert_eq!(per_dest.get(t.link("XY2").unwrap().forward), &int(5));
    assert_eq!(forwarded.get(t.link("XY2").unwrap().forward), &int(4));
    assert_eq!(&(per_dest.get(xy1) / int(100)), &ratio(3, 100));
}

#[test]
fn aggregation_partitions_hot_potato_prefixes() {
    let ps = backbone(&BackboneParams::small(11)).unwrap();
    let cls = classify_prefixes(&ps.routes).unwrap();
    let mut aggs = aggregate_by_egress_set(&cls);
    attach_volumes(&mut aggs, &ps.flows);
    let mut seen = BTreeSet::new();
    for a in &aggs {
        for p in &a.members {
            assert!(seen.insert(p.clone()), "{p} in two aggregates");
            assert_eq!(&cls.hot_potato[p], &a.egress_set);
        }
    }
    assert_eq!(seen.len(), cls.hot_potato.len());
    let hp_volume = total(ps.flows.iter().filter(|f| cls.hot_potato.contains_key(&f.prefix)).map(|f| f.volume.clone()));
    assert_eq!(total(aggs.iter().map(|a| a.volume.clone())), hp_volume);
    let sets: BTreeSet<_> = aggs.iter().map(|a| &a.egress_set).collect();
    assert_eq!(sets.len(), aggs.len());
}
