//! Flow records, egress-set aggregation and the aggregated interdomain
//! traffic matrix.
//!
//! The matrix has two parts. `invar` holds traffic whose egress router does
//! not depend on IGP weights: single-egress prefixes, hot-potato traffic that
//! enters at one of its own egress routers (eBGP>iBGP keeps it there), and
//! traffic to truncated aggregates pinned to their current egress. `hp` holds
//! the rest, addressed to aggregate virtual nodes.

use std::collections::{BTreeMap, BTreeSet};

use num::{Signed, Zero};

use crate::bgp::{format_egress_set, parse_egress_set, PrefixClassification};
use crate::error::{Error, Result};
use crate::igp::shortest_distances;
use crate::model::{strip_comment, Egress, Topology, WeightVector};
use crate::quantity::{format_quantity, parse_quantity, Q, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRecord {
    pub ingress: String,
    pub prefix: String,
    pub volume: Q,
}

/// Parses `flow <ingress_router> <prefix> <mbps>` lines.
pub fn parse_flows(text: &str, source_name: &str, topology: &Topology) -> Result<Vec<FlowRecord>> {
    let mut flows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(source_name, i + 1, m);
        if fields[0] != "flow" || fields.len() != 4 {
            return Err(err(format!("expected `flow <ingress> <prefix> <mbps>`, got `{}`", raw.trim())));
        }
        if topology.graph().lookup(fields[1]).is_none() {
            return Err(err(format!("unknown ingress router `{}`", fields[1])));
        }
        let volume = parse_quantity(fields[3]).ok_or_else(|| err(format!("bad volume `{}`", fields[3])))?;
        if volume.is_negative() {
            return Err(err(format!("negative volume `{}`", fields[3])));
        }
        flows.push(FlowRecord { ingress: fields[1].to_string(), prefix: fields[2].to_string(), volume });
    }
    Ok(flows)
}

pub fn flows_to_text(flows: &[FlowRecord]) -> String {
    flows
        .iter()
        .map(|f| format!("flow {} {} {}\n", f.ingress, f.prefix, format_quantity(&f.volume)))
        .collect()
}

/// All hot-potato prefixes sharing one egress set, seen as one destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgressAggregate {
    pub id: String,
    pub egress_set: BTreeSet<Egress>,
    pub members: BTreeSet<String>,
    pub volume: Q,
}

impl EgressAggregate {
    pub fn routers(&self) -> BTreeSet<&str> {
        self.egress_set.iter().map(|e| e.router.as_str()).collect()
    }
}

/// One aggregate per distinct egress set, ids assigned in egress-set order.
pub fn aggregate_by_egress_set(cls: &PrefixClassification) -> Vec<EgressAggregate> {
    let mut groups: BTreeMap<&BTreeSet<Egress>, BTreeSet<String>> = BTreeMap::new();
    for (prefix, set) in &cls.hot_potato {
        groups.entry(set).or_default().insert(prefix.clone());
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, (set, members))| EgressAggregate {
            id: format!("A{i}"),
            egress_set: set.clone(),
            members,
            volume: Q::zero(),
        })
        .collect()
}

/// Sets each aggregate's attracted volume from the flows.
pub fn attach_volumes(aggs: &mut [EgressAggregate], flows: &[FlowRecord]) {
    let owner: BTreeMap<&str, usize> =
        aggs.iter().enumerate().flat_map(|(i, a)| a.members.iter().map(move |p| (p.as_str(), i))).collect();
    let mut volumes = vec![Q::zero(); aggs.len()];
    for f in flows {
        if let Some(&i) = owner.get(f.prefix.as_str()) {
            volumes[i] += &f.volume;
        }
    }
    for (a, v) in aggs.iter_mut().zip(volumes) {
        a.volume = v;
    }
}

/// Keeps the smallest volume-ranked prefix of `aggs` reaching `coverage` of
/// the total hot-potato volume. Zero-volume aggregates are never kept.
pub fn truncate_aggregates(
    aggs: &[EgressAggregate],
    flows: &[FlowRecord],
    coverage: &Q,
) -> Result<(Vec<EgressAggregate>, Vec<EgressAggregate>)> {
    if !coverage.is_positive() || *coverage > Q::from_usize(1) {
        return Err(Error::Invalid(format!("coverage {} outside (0, 1]", format_quantity(coverage))));
    }
    let mut ranked = aggs.to_vec();
    attach_volumes(&mut ranked, flows);
    ranked.sort_by(|a, b| b.volume.cmp(&a.volume).then_with(|| a.id.cmp(&b.id)));
    let total: Q = ranked.iter().map(|a| &a.volume).sum();
    let target = &total * coverage;
    let mut covered = Q::zero();
    let mut keep = 0;
    while covered < target && keep < ranked.len() {
        covered += &ranked[keep].volume;
        keep += 1;
    }
    let remainder = ranked.split_off(keep);
    Ok((ranked, remainder))
}

/// Aggregated interdomain traffic matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregatedTm {
    /// Kept aggregates, i.e. the virtual nodes the matrix addresses.
    pub aggregates: Vec<EgressAggregate>,
    /// (ingress, egress router) -> Mbps.
    pub invar: BTreeMap<(String, String), Q>,
    /// (ingress, aggregate id) -> Mbps.
    pub hp: BTreeMap<(String, String), Q>,
    /// Peering id -> Mbps leaving through it regardless of weights; the
    /// interdomain side of `invar`.
    pub exits: BTreeMap<String, Q>,
}

fn add_cell(map: &mut BTreeMap<(String, String), Q>, src: &str, dst: &str, v: &Q) {
    *map.entry((src.to_string(), dst.to_string())).or_insert_with(Q::zero) += v;
}

fn add_exit(exits: &mut BTreeMap<String, Q>, peering: &str, v: Q) {
    *exits.entry(peering.to_string()).or_insert_with(Q::zero) += v;
}

/// Splits `v` evenly over `router`'s peerings in `set`.
fn add_local_exit(exits: &mut BTreeMap<String, Q>, set: &BTreeSet<Egress>, router: &str, v: &Q) {
    let local: Vec<&Egress> = set.iter().filter(|e| e.router == router).collect();
    let share = v / Q::from_usize(local.len());
    for e in local {
        add_exit(exits, &e.peering, share.clone());
    }
}

pub fn build_aggregated_tm(
    flows: &[FlowRecord],
    cls: &PrefixClassification,
    kept: &[EgressAggregate],
    remainder: &[EgressAggregate],
    topology: &Topology,
    deployed: &WeightVector,
) -> Result<AggregatedTm> {
    let mut tm = AggregatedTm::default();
    let mut owner: BTreeMap<&str, (&EgressAggregate, bool)> = BTreeMap::new();
    for a in kept {
        for p in &a.members {
            owner.insert(p, (a, true));
        }
    }
    for a in remainder {
        for p in &a.members {
            owner.insert(p, (a, false));
        }
    }
    let g = topology.graph();
    let mut distances: BTreeMap<String, crate::igp::DistanceMap> = BTreeMap::new();
    let mut dist_to = |router: &str| -> Result<crate::igp::DistanceMap> {
        if let Some(d) = distances.get(router) {
            return Ok(d.clone());
        }
        let d = shortest_distances(g, deployed, g.require(router)?);
        distances.insert(router.to_string(), d.clone());
        Ok(d)
    };

    for f in flows {
        if let Some(e) = cls.single_egress.get(&f.prefix) {
            add_cell(&mut tm.invar, &f.ingress, &e.router, &f.volume);
            add_exit(&mut tm.exits, &e.peering, f.volume.clone());
            continue;
        }
        let Some(set) = cls.hot_potato.get(&f.prefix) else {
            return Err(Error::Unknown { kind: "prefix (no route in the dump)", id: f.prefix.clone() });
        };
        if set.iter().any(|e| e.router == f.ingress) {
            add_cell(&mut tm.invar, &f.ingress, &f.ingress, &f.volume);
            add_local_exit(&mut tm.exits, set, &f.ingress, &f.volume);
            continue;
        }
        match owner.get(f.prefix.as_str()) {
            Some((agg, true)) => add_cell(&mut tm.hp, &f.ingress, &agg.id, &f.volume),
            Some((agg, false)) => {
                // Pinned to today's hot-potato choice: nearest egress, lowest id on ties.
                let src = g.require(&f.ingress)?;
                let mut best: Option<(u64, &str)> = None;
                for router in agg.routers() {
                    if let Some(d) = dist_to(router)?.get(src) {
                        if best.is_none_or(|(bd, br)| (d, router) < (bd, br)) {
                            best = Some((d, router));
                        }
                    }
                }
                let (_, egress) = best.ok_or_else(|| Error::Unreachable { src: f.ingress.clone(), dst: agg.id.clone() })?;
                add_cell(&mut tm.invar, &f.ingress, egress, &f.volume);
                add_local_exit(&mut tm.exits, &agg.egress_set, egress, &f.volume);
            }
            None => return Err(Error::Unknown { kind: "aggregate for prefix", id: f.prefix.clone() }),
        }
    }
    tm.aggregates = kept.iter().map(|a| roster_entry(a, &tm.hp)).collect();
    let input: Q = flows.iter().map(|f| &f.volume).sum();
    if tm.total_invar() + tm.total_hp() != input {
        return Err(Error::Internal("aggregated matrix does not conserve the input volume".into()));
    }
    Ok(tm)
}

fn roster_entry(a: &EgressAggregate, hp: &BTreeMap<(String, String), Q>) -> EgressAggregate {
    EgressAggregate {
        id: a.id.clone(),
        egress_set: a.egress_set.clone(),
        members: BTreeSet::new(),
        volume: hp.iter().filter(|((_, d), _)| *d == a.id).map(|(_, v)| v).sum(),
    }
}

impl AggregatedTm {
    pub fn total_invar(&self) -> Q {
        self.invar.values().sum()
    }

    pub fn total_hp(&self) -> Q {
        self.hp.values().sum()
    }

    pub fn aggregate(&self, id: &str) -> Option<&EgressAggregate> {
        self.aggregates.iter().find(|a| a.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.invar.is_empty() && self.hp.is_empty()
    }

    /// Recomputes each roster entry's volume from the `hp` cells.
    pub fn refresh_roster(&mut self) {
        let hp = &self.hp;
        self.aggregates = self.aggregates.iter().map(|a| roster_entry(a, hp)).collect();
    }

    /// Cell-wise sum; rosters are merged by id.
    pub fn plus(&self, other: &AggregatedTm) -> AggregatedTm {
        let mut out = self.clone();
        for ((s, d), v) in &other.invar {
            add_cell(&mut out.invar, s, d, v);
        }
        for ((s, d), v) in &other.hp {
            add_cell(&mut out.hp, s, d, v);
        }
        for (p, v) in &other.exits {
            add_exit(&mut out.exits, p, v.clone());
        }
        for a in &other.aggregates {
            if out.aggregate(&a.id).is_none() {
                out.aggregates.push(a.clone());
            }
        }
        let hp = out.hp.clone();
        out.aggregates = out.aggregates.iter().map(|a| roster_entry(a, &hp)).collect();
        out
    }

    /// File body: `aggregate`, `invar`, `hp` and `exit` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.aggregates {
            out.push_str(&format!("aggregate {} {}\n", a.id, format_egress_set(&a.egress_set)));
        }
        for ((s, d), v) in &self.invar {
            out.push_str(&format!("invar {s} {d} {}\n", format_quantity(v)));
        }
        for ((s, d), v) in &self.hp {
            out.push_str(&format!("hp {s} {d} {}\n", format_quantity(v)));
        }
        for (p, v) in &self.exits {
            out.push_str(&format!("exit {p} {}\n", format_quantity(v)));
        }
        out
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut tm = AggregatedTm::default();
        for (i, raw) in text.lines().enumerate() {
            let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(source_name, i + 1, m);
            let qty = |s: &str| -> Result<Q> {
                let q = parse_quantity(s).ok_or_else(|| err(format!("bad volume `{s}`")))?;
                if q.is_negative() {
                    return Err(err(format!("negative volume `{s}`")));
                }
                Ok(q)
            };
            match (fields[0], fields.len()) {
                ("aggregate", 3) => {
                    let set = parse_egress_set(fields[2]).ok_or_else(|| err(format!("bad egress set `{}`", fields[2])))?;
                    if tm.aggregate(fields[1]).is_some() {
                        return Err(err(format!("aggregate `{}` declared twice", fields[1])));
                    }
                    tm.aggregates.push(EgressAggregate {
                        id: fields[1].to_string(),
                        egress_set: set,
                        members: BTreeSet::new(),
                        volume: Q::zero(),
                    });
                }
                ("invar", 4) => add_cell(&mut tm.invar, fields[1], fields[2], &qty(fields[3])?),
                ("hp", 4) => {
                    if tm.aggregate(fields[2]).is_none() {
                        return Err(err(format!("hp cell addresses undeclared aggregate `{}`", fields[2])));
                    }
                    add_cell(&mut tm.hp, fields[1], fields[2], &qty(fields[3])?)
                }
                ("exit", 3) => add_exit(&mut tm.exits, fields[1], qty(fields[2])?),
                (kind, n) => return Err(err(format!("unrecognized `{kind}` record with {n} fields"))),
            }
        }
        let hp = tm.hp.clone();
        tm.aggregates = tm.aggregates.iter().map(|a| roster_entry(a, &hp)).collect();
        Ok(tm)
    }
}
