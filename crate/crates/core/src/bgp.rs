//! Best-route dumps and the single-egress / hot-potato prefix split.
//!
//! A dump lists, per router, the best route it uses toward each prefix.
//! Routes that survive the attribute comparison up to MED are chosen by
//! their own border router through eBGP>iBGP, so when a prefix appears with
//! two or more distinct (egress, peering) values the union of those values
//! is its candidate egress set. A prefix seen with one value everywhere was
//! decided before the IGP distance mattered.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num::Zero;

use crate::error::{Error, Result};
use crate::model::{strip_comment, Egress, Topology};
use crate::quantity::Q;
use crate::tm::FlowRecord;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RouteRecord {
    pub router: String,
    pub prefix: String,
    pub egress: String,
    pub peering: String,
}

/// Parses `route <router> <prefix> <egress_router> <peering_id>` lines,
/// validating ids against `topology`.
pub fn parse_route_dump(text: &str, source_name: &str, topology: &Topology) -> Result<Vec<RouteRecord>> {
    let g = topology.graph();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(source_name, i + 1, m);
        if fields[0] != "route" || fields.len() != 5 {
            return Err(err(format!(
                "expected `route <router> <prefix> <egress_router> <peering_id>`, got `{}`",
                raw.trim()
            )));
        }
        let (router, prefix, egress, peering) = (fields[1], fields[2], fields[3], fields[4]);
        if g.lookup(router).is_none() {
            return Err(err(format!("unknown router `{router}`")));
        }
        if g.lookup(egress).is_none() {
            return Err(err(format!("unknown egress router `{egress}`")));
        }
        let p = topology.peering(peering).ok_or_else(|| err(format!("unknown peering `{peering}`")))?;
        if p.egress != egress {
            return Err(err(format!("peering `{peering}` is attached to `{}`, not `{egress}`", p.egress)));
        }
        if !seen.insert((router.to_string(), prefix.to_string())) {
            return Err(err(format!("duplicate route for router `{router}` and prefix `{prefix}`")));
        }
        records.push(RouteRecord {
            router: router.to_string(),
            prefix: prefix.to_string(),
            egress: egress.to_string(),
            peering: peering.to_string(),
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixClassification {
    pub single_egress: BTreeMap<String, Egress>,
    /// Every set holds at least two distinct peerings.
    pub hot_potato: BTreeMap<String, BTreeSet<Egress>>,
}

pub fn classify_prefixes(records: &[RouteRecord]) -> Result<PrefixClassification> {
    let mut observed: BTreeMap<&str, BTreeSet<Egress>> = BTreeMap::new();
    for r in records {
        observed.entry(&r.prefix).or_default().insert(Egress::new(&r.egress, &r.peering));
    }
    let mut cls = PrefixClassification::default();
    for (prefix, set) in observed {
        match set.len() {
            0 => return Err(Error::Internal(format!("prefix `{prefix}` has no routes"))),
            1 => {
                cls.single_egress.insert(prefix.to_string(), set.into_iter().next().unwrap());
            }
            _ => {
                cls.hot_potato.insert(prefix.to_string(), set);
            }
        }
    }
    Ok(cls)
}

impl PrefixClassification {
    pub fn prefix_count(&self) -> usize {
        self.single_egress.len() + self.hot_potato.len()
    }

    /// Share of the flow volume addressed to hot-potato prefixes.
    pub fn hot_potato_share(&self, flows: &[FlowRecord]) -> Option<Q> {
        let mut total = Q::zero();
        let mut hot = Q::zero();
        for f in flows {
            total += &f.volume;
            if self.hot_potato.contains_key(&f.prefix) {
                hot += &f.volume;
            }
        }
        (!total.is_zero()).then(|| hot / total)
    }

    /// One line per prefix:
    /// `single <prefix> <egress>:<peering>` or `hotpotato <prefix> <egress>:<peering>,...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, e) in &self.single_egress {
            out.push_str(&format!("single {p} {e}\n"));
        }
        for (p, set) in &self.hot_potato {
            out.push_str(&format!("hotpotato {p} {}\n", format_egress_set(set)));
        }
        out
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut cls = PrefixClassification::default();
        for (i, raw) in text.lines().enumerate() {
            let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(source_name, i + 1, m);
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, got {}", fields.len())));
            }
            let set = parse_egress_set(fields[2]).ok_or_else(|| err(format!("bad egress set `{}`", fields[2])))?;
            let prefix = fields[1].to_string();
            if cls.single_egress.contains_key(&prefix) || cls.hot_potato.contains_key(&prefix) {
                return Err(err(format!("prefix `{prefix}` listed twice")));
            }
            match (fields[0], set.len()) {
                ("single", 1) => {
                    cls.single_egress.insert(prefix, set.into_iter().next().unwrap());
                }
                ("hotpotato", n) if n >= 2 => {
                    cls.hot_potato.insert(prefix, set);
                }
                (kind, n) => return Err(err(format!("`{kind}` entry with {n} egresses"))),
            }
        }
        Ok(cls)
    }
}

pub fn format_egress_set(set: &BTreeSet<Egress>) -> String {
    set.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_egress_set(text: &str) -> Option<BTreeSet<Egress>> {
    text.split(',')
        .map(|item| {
            let (r, p) = item.split_once(':')?;
            (!r.is_empty() && !p.is_empty()).then(|| Egress::new(r, p))
        })
        .collect()
}
