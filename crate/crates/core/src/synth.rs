//! Seeded generators: small random instances for property checks, a
//! route-dump/flow pair with a realistic prefix and volume profile, and
//! batches of perturbed matrices.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bgp::RouteRecord;
use crate::error::Result;
use crate::model::{build_topology, Egress, LinkSpec, Peering, Topology, TopologySpec};
use crate::quantity::{int, ratio};
use crate::tm::{AggregatedTm, EgressAggregate, FlowRecord};

#[derive(Debug, Clone)]
pub struct RandomParams {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Links added on top of a random spanning tree.
    pub max_extra_links: usize,
    /// Upper bound on the total link count.
    pub max_links: usize,
    pub capacities: Vec<i64>,
    pub max_peerings: usize,
    pub max_aggregates: usize,
    /// Weights in the topology file are drawn from `1..=deployed_w_max`.
    pub deployed_w_max: u32,
    pub with_invar: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            min_nodes: 3,
            max_nodes: 10,
            max_extra_links: 6,
            max_links: 16,
            capacities: vec![10, 20, 40, 100],
            max_peerings: 6,
            max_aggregates: 4,
            deployed_w_max: 5,
            with_invar: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: TopologySpec,
    pub topology: Topology,
    pub tm: AggregatedTm,
}

pub fn random_instance(seed: u64, p: &RandomParams) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(p.min_nodes..=p.max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("R{i}")).collect();
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..n {
        pairs.insert((rng.gen_range(0..i), i));
    }
    let extra = rng.gen_range(0..=p.max_extra_links);
    for _ in 0..extra {
        if pairs.len() >= p.max_links || n < 3 {
            break;
        }
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let links = pairs
        .iter()
        .map(|&(a, b)| LinkSpec {
            id: format!("L{a}_{b}"),
            a: nodes[a].clone(),
            b: nodes[b].clone(),
            capacity: int(*p.capacities.choose(&mut rng).expect("capacities")),
            weight: rng.gen_range(1..=p.deployed_w_max),
        })
        .collect();
    let k = rng.gen_range(2..=p.max_peerings.max(2));
    let peerings: Vec<Peering> = (0..k)
        .map(|j| Peering {
            id: format!("p{j}"),
            egress: nodes[rng.gen_range(0..n)].clone(),
            neighbor: format!("N{j}"),
            capacity: int(*p.capacities.choose(&mut rng).expect("capacities")),
        })
        .collect();
    let spec = TopologySpec { nodes: nodes.clone(), links, peerings: peerings.clone() };
    let topology = build_topology(&spec)?;

    let mut tm = AggregatedTm::default();
    let m = rng.gen_range(1..=p.max_aggregates.max(1));
    for i in 0..m {
        let size = rng.gen_range(2..=k);
        let chosen: Vec<&Peering> = peerings.choose_multiple(&mut rng, size).collect();
        let egress_set: BTreeSet<Egress> = chosen.iter().map(|p| Egress::new(&p.egress, &p.id)).collect();
        let agg = EgressAggregate { id: format!("A{i}"), egress_set, members: BTreeSet::new(), volume: int(0) };
        let routers = agg.routers();
        let ingresses: Vec<&String> = nodes.iter().filter(|r| !routers.contains(r.as_str())).collect();
        for _ in 0..rng.gen_range(1..=3) {
            if let Some(s) = ingresses.choose(&mut rng) {
                let v = int(rng.gen_range(1..=20));
                *tm.hp.entry(((*s).clone(), agg.id.clone())).or_insert_with(|| int(0)) += v;
            }
        }
        tm.aggregates.push(agg);
    }
    if p.with_invar {
        for _ in 0..rng.gen_range(0..=3) {
            let s = rng.gen_range(0..n);
            let e = rng.gen_range(0..n);
            if s == e {
                continue;
            }
            let v = int(rng.gen_range(1..=10));
            *tm.invar.entry((nodes[s].clone(), nodes[e].clone())).or_insert_with(|| int(0)) += &v;
            if let Some(p) = peerings.iter().find(|p| p.egress == nodes[e]) {
                *tm.exits.entry(p.id.clone()).or_insert_with(|| int(0)) += v;
            }
        }
    }
    tm.refresh_roster();
    Ok(Instance { spec, topology, tm })
}

/// Copies of `base` with every hot-potato cell scaled by its own factor in
/// [1/4, 7/4] and the weight-invariant part scaled by one common factor in
/// [1/2, 3/2], all in hundredths.
pub fn tm_batch(base: &AggregatedTm, count: usize, seed: u64) -> Vec<(String, AggregatedTm)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = count.saturating_sub(1).to_string().len().max(4);
    (0..count)
        .map(|i| {
            let mut tm = base.clone();
            let f0 = ratio(rng.gen_range(50..=150), 100);
            for v in tm.invar.values_mut().chain(tm.exits.values_mut()) {
                *v = &*v * &f0;
            }
            for v in tm.hp.values_mut() {
                *v = &*v * ratio(rng.gen_range(25..=175), 100);
            }
            tm.refresh_roster();
            (format!("tm{i:0width$}"), tm)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Route dump and flows with a prescribed aggregate profile

#[derive(Debug, Clone)]
pub struct BackboneParams {
    pub seed: u64,
    pub hot_potato_prefixes: usize,
    pub single_egress_prefixes: usize,
}

impl Default for BackboneParams {
    fn default() -> Self {
        BackboneParams { seed: 1, hot_potato_prefixes: 156_407, single_egress_prefixes: 4_566 }
    }
}

impl BackboneParams {
    /// Same profile with few prefixes, for fast tests.
    pub fn small(seed: u64) -> Self {
        BackboneParams { seed, hot_potato_prefixes: 2_600, single_egress_prefixes: 400 }
    }
}

pub const EGRESS_SETS: usize = 26;
pub const ZERO_TRAFFIC_SETS: usize = 8;

/// Hot-potato volume per egress set, largest first: five sets carry 99.94%
/// of it, thirteen share the remaining 0.06%, eight carry nothing.
pub fn hot_potato_profile() -> Vec<i64> {
    let mut v: Vec<i64> = vec![40_000, 25_000, 15_000, 12_000, 7_940];
    v.extend([10, 8, 6, 5, 5, 5, 4, 4, 4, 3, 2, 2, 2]);
    v.extend([0; ZERO_TRAFFIC_SETS]);
    // Scaling by 89 lets the single-egress volume below be an integer while
    // hot-potato traffic stays exactly 35.6% of the total.
    v.into_iter().map(|x| x * 89).collect()
}

pub const SINGLE_EGRESS_VOLUME: i64 = 16_100_000;

#[derive(Debug, Clone)]
pub struct Backbone {
    pub spec: TopologySpec,
    pub routes: Vec<RouteRecord>,
    pub flows: Vec<FlowRecord>,
}

const BACKBONE_TOPOLOGY: &str = "\
node R0 intra
node R1 intra
node R2 intra
node R3 intra
node R4 intra
node R5 intra
node R6 intra
node R7 intra
node R8 intra
node R9 intra
node R10 intra
node R11 intra
link L0 R0 R1 9953 1
link L1 R1 R2 9953 1
link L2 R2 R3 9953 1
link L3 R3 R4 9953 1
link L4 R4 R5 9953 1
link L5 R5 R6 9953 1
link L6 R6 R7 9953 1
link L7 R7 R8 2488 4
link L8 R8 R9 2488 4
link L9 R9 R10 2488 4
link L10 R10 R11 2488 4
link L11 R11 R0 2488 4
link L12 R0 R6 2488 4
link L13 R2 R9 2488 4
link L14 R4 R11 2488 4
link L15 R1 R7 2488 4
peering q0 R0 T1 2488
peering q1 R0 T2 2488
peering q2 R3 T1 2488
peering q3 R5 T3 2488
peering q4 R5 T4 622
peering q5 R7 T2 2488
peering q6 R8 T5 622
peering q7 R9 T3 2488
peering q8 R10 T4 622
peering q9 R11 T5 622
";

fn prefix_name(i: usize) -> String {
    format!("{}.{}.{}.0/24", 10 + i / 65_536, (i / 256) % 256, i % 256)
}

/// Splits `total` into `parts` integers differing by at most one.
fn spread(total: i64, parts: usize) -> impl Iterator<Item = i64> {
    let q = total / parts as i64;
    let r = (total % parts as i64) as usize;
    (0..parts).map(move |i| q + i64::from(i < r))
}

pub fn backbone(p: &BackboneParams) -> Result<Backbone> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let spec = TopologySpec::parse(BACKBONE_TOPOLOGY, "backbone")?;
    let routers: Vec<&str> = spec.nodes.iter().map(String::as_str).collect();
    let all: Vec<Egress> = spec.peerings.iter().map(|q| Egress::new(&q.egress, &q.id)).collect();

    let mut sets: BTreeSet<BTreeSet<Egress>> = BTreeSet::new();
    while sets.len() < EGRESS_SETS {
        let size = rng.gen_range(2..=4);
        sets.insert(all.choose_multiple(&mut rng, size).cloned().collect());
    }
    let mut sets: Vec<BTreeSet<Egress>> = sets.into_iter().collect();
    sets.shuffle(&mut rng);

    let mut routes = Vec::new();
    let mut flows = Vec::new();
    let hp_counts: Vec<i64> = spread(p.hot_potato_prefixes as i64, EGRESS_SETS).collect();
    let mut next = 0usize;
    for (set, (count, volume)) in sets.iter().zip(hp_counts.iter().zip(hot_potato_profile())) {
        let count = (*count).max(1) as usize;
        let volumes: Vec<i64> = spread(volume, count).collect();
        for v in volumes {
            let prefix = prefix_name(next);
            next += 1;
            let mut used: BTreeSet<&str> = BTreeSet::new();
            for e in set {
                let at = if used.contains(e.router.as_str()) {
                    *routers.iter().find(|r| !used.contains(*r)).expect("more routers than egresses")
                } else {
                    e.router.as_str()
                };
                used.insert(at);
                routes.push(RouteRecord { router: at.into(), prefix: prefix.clone(), egress: e.router.clone(), peering: e.peering.clone() });
            }
            if v > 0 {
                let ingress = routers[rng.gen_range(0..routers.len())];
                flows.push(FlowRecord { ingress: ingress.into(), prefix, volume: int(v) });
            }
        }
    }
    let se_volumes: Vec<i64> = spread(SINGLE_EGRESS_VOLUME, p.single_egress_prefixes.max(1)).collect();
    for v in se_volumes {
        let prefix = prefix_name(next);
        next += 1;
        let e = all.choose(&mut rng).expect("peerings");
        routes.push(RouteRecord { router: e.router.clone(), prefix: prefix.clone(), egress: e.router.clone(), peering: e.peering.clone() });
        let other = routers[rng.gen_range(0..routers.len())];
        if other != e.router {
            routes.push(RouteRecord { router: other.into(), prefix: prefix.clone(), egress: e.router.clone(), peering: e.peering.clone() });
        }
        if v > 0 {
            let ingress = routers[rng.gen_range(0..routers.len())];
            flows.push(FlowRecord { ingress: ingress.into(), prefix, volume: int(v) });
        }
    }
    Ok(Backbone { spec, routes, flows })
}

pub fn routes_to_text(routes: &[RouteRecord]) -> String {
    routes.iter().map(|r| format!("route {} {} {} {}\n", r.router, r.prefix, r.egress, r.peering)).collect()
}
