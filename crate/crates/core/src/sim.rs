//! Hot-potato forwarding simulator and the three-way optimizer comparison.
//!
//! The simulator never builds virtual nodes. Every router picks the egress
//! routers nearest to itself among an aggregate's candidates and forwards
//! on its shortest-path next hops toward them; candidate egress routers hand
//! the traffic to their own peerings. This is what routers running the BGP
//! decision process with ECMP would do, and it is the reference the
//! extended-topology model is checked against.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::igp::{compute_loads, shortest_distances, u_max, DistanceMap, LoadMap};
use crate::lwo::{optimize, SearchConfig, SearchTrace};
use crate::model::{extend_topology, simplify_model, ArcId, ArcKind, Egress, ExtendedTopology, Graph, NodeId, Topology, WeightVector};
use crate::objective::{phi_total, CostParams};
use crate::quantity::{format_fixed, Scalar, Q};
use crate::tm::AggregatedTm;

/// How a router chooses among equally distant egress routers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Keep them all and share traffic evenly (iBGP multipath).
    #[default]
    Multipath,
    /// Keep only the router with the lowest id.
    LowestId,
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Multipath => "multipath",
            TieBreak::LowestId => "lowest-id",
        })
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multipath" => Ok(TieBreak::Multipath),
            "lowest-id" => Ok(TieBreak::LowestId),
            other => Err(Error::Config(format!("unknown tie-break `{other}`"))),
        }
    }
}

/// Shortest-path state for one weight vector on the base topology.
struct Forwarder<'a> {
    t: &'a Topology,
    w: &'a WeightVector,
    dist: BTreeMap<NodeId, DistanceMap>,
}

/// Result of pushing traffic toward a set of egress routers.
struct Delivery<S> {
    loads: LoadMap<S>,
    absorbed: BTreeMap<NodeId, S>,
}

impl<'a> Forwarder<'a> {
    fn new(t: &'a Topology, w: &'a WeightVector) -> Self {
        Forwarder { t, w, dist: BTreeMap::new() }
    }

    fn graph(&self) -> &'a Graph {
        self.t.graph()
    }

    fn dist_to(&mut self, r: NodeId) -> &DistanceMap {
        let (g, w) = (self.t.graph(), self.w);
        self.dist.entry(r).or_insert_with(|| shortest_distances(g, w, r))
    }

    /// Egress routers each node would select, with its distance to them.
    fn selections(&mut self, routers: &BTreeSet<NodeId>, tie: TieBreak) -> Vec<Option<(u64, Vec<NodeId>)>> {
        let n = self.graph().node_count();
        for &r in routers {
            self.dist_to(r);
        }
        let g = self.graph();
        (0..n)
            .map(|x| {
                let x = NodeId(x);
                let mut best: Option<(u64, Vec<NodeId>)> = None;
                for &r in routers {
                    let Some(d) = self.dist[&r].get(x) else { continue };
                    match &mut best {
                        Some((bd, rs)) if d == *bd => rs.push(r),
                        Some((bd, _)) if d > *bd => {}
                        _ => best = Some((d, vec![r])),
                    }
                }
                if tie == TieBreak::LowestId {
                    if let Some((_, rs)) = &mut best {
                        let low = *rs.iter().min_by_key(|&&r| g.name(r)).expect("nonempty");
                        *rs = vec![low];
                    }
                }
                best
            })
            .collect()
    }

    /// Hop-by-hop forwarding of `injections` toward the routers in `targets`.
    fn deliver<S: Scalar>(
        &mut self,
        targets: &BTreeSet<NodeId>,
        injections: &[(NodeId, S)],
        tie: TieBreak,
        label: &str,
    ) -> Result<Delivery<S>> {
        let sel = self.selections(targets, tie);
        let g = self.graph();
        let mut at = vec![S::zero(); g.node_count()];
        for (s, v) in injections {
            if sel[s.0].is_none() {
                return Err(Error::Unreachable { src: g.name(*s).to_string(), dst: label.to_string() });
            }
            at[s.0] += v.clone();
        }
        let mut order: Vec<NodeId> = (0..g.node_count()).map(NodeId).filter(|x| sel[x.0].is_some()).collect();
        order.sort_by_key(|x| (std::cmp::Reverse(sel[x.0].as_ref().map(|(d, _)| *d)), *x));
        let mut loads = LoadMap::zeros(g.arc_count());
        let mut absorbed = BTreeMap::new();
        for x in order {
            let flow = std::mem::replace(&mut at[x.0], S::zero());
            if flow.is_zero() {
                continue;
            }
            if targets.contains(&x) {
                *absorbed.entry(x).or_insert_with(S::zero) += flow;
                continue;
            }
            let (d, chosen) = sel[x.0].as_ref().expect("filtered");
            let next: Vec<ArcId> = g
                .out_arcs(x)
                .iter()
                .copied()
                .filter(|&a| {
                    let y = g.arc(a).dst;
                    chosen.iter().any(|r| self.dist[r].get(y).is_some_and(|dy| dy + self.w.get(a) == *d))
                })
                .collect();
            if next.is_empty() {
                return Err(Error::Internal(format!("router `{}` has no next hop toward `{label}`", g.name(x))));
            }
            let share = flow / S::from_usize(next.len());
            for a in next {
                loads.add(a, share.clone());
                at[g.arc(a).dst.0] += share.clone();
            }
        }
        Ok(Delivery { loads, absorbed })
    }
}

fn router_ids(g: &Graph, set: &BTreeSet<Egress>) -> Result<BTreeSet<NodeId>> {
    set.iter().map(|e| g.require(&e.router)).collect()
}

/// Peerings of `router` that belong to `set`.
fn local_peerings<'s>(set: &'s BTreeSet<Egress>, router: &str) -> Vec<&'s str> {
    set.iter().filter(|e| e.router == router).map(|e| e.peering.as_str()).collect()
}

/// Egresses `ingress` would use toward a prefix with candidate set `set`.
pub fn select_egresses(
    t: &Topology,
    w: &WeightVector,
    set: &BTreeSet<Egress>,
    ingress: &str,
    tie: TieBreak,
) -> Result<BTreeSet<Egress>> {
    let g = t.graph();
    let src = g.require(ingress)?;
    let routers = router_ids(g, set)?;
    let mut f = Forwarder::new(t, w);
    let sel = f.selections(&routers, tie);
    let (_, chosen) = sel[src.0].as_ref().ok_or_else(|| Error::Unreachable {
        src: ingress.to_string(),
        dst: crate::bgp::format_egress_set(set),
    })?;
    let names: BTreeSet<&str> = chosen.iter().map(|&r| g.name(r)).collect();
    Ok(set.iter().filter(|e| names.contains(e.router.as_str())).cloned().collect())
}

/// Link loads that `tm` actually produces under `w`, indexed like `xt`'s
/// arcs. Peering arcs are filled only when `xt` has them; virtual arcs stay 0.
pub fn resulting_loads<S: Scalar>(xt: &ExtendedTopology, w: &WeightVector, tm: &AggregatedTm, tie: TieBreak) -> Result<LoadMap<S>> {
    let t = xt.base();
    let g = t.graph();
    let mut f = Forwarder::new(t, w);
    let mut loads = LoadMap::<S>::zeros(xt.graph().arc_count());
    let add_intra = |part: &LoadMap<S>, loads: &mut LoadMap<S>| {
        for (i, v) in part.as_slice().iter().enumerate() {
            if !v.is_zero() {
                loads.add(ArcId(i), v.clone());
            }
        }
    };

    let mut invar: BTreeMap<NodeId, Vec<(NodeId, S)>> = BTreeMap::new();
    for ((s, e), v) in &tm.invar {
        invar.entry(g.require(e)?).or_default().push((g.require(s)?, S::from_q(v)));
    }
    for (e, inj) in &invar {
        let d = f.deliver(&BTreeSet::from([*e]), inj, tie, g.name(*e))?;
        add_intra(&d.loads, &mut loads);
    }

    let mut hp: BTreeMap<&str, Vec<(NodeId, S)>> = BTreeMap::new();
    for ((s, a), v) in &tm.hp {
        hp.entry(a.as_str()).or_default().push((g.require(s)?, S::from_q(v)));
    }
    for (id, inj) in &hp {
        let agg = tm.aggregate(id).ok_or_else(|| Error::Unknown { kind: "aggregate", id: id.to_string() })?;
        let d = f.deliver(&router_ids(g, &agg.egress_set)?, inj, tie, id)?;
        add_intra(&d.loads, &mut loads);
        if xt.has_inter_arcs() {
            for (r, v) in d.absorbed {
                let local = local_peerings(&agg.egress_set, g.name(r));
                let share = v / S::from_usize(local.len());
                for p in local {
                    let arc = xt.peering_arc(p).ok_or_else(|| Error::Unknown { kind: "peering link", id: p.to_string() })?;
                    loads.add(arc, share.clone());
                }
            }
        }
    }

    if xt.has_inter_arcs() {
        for (p, v) in &tm.exits {
            let arc = xt.peering_arc(p).ok_or_else(|| Error::Unknown { kind: "peering link", id: p.clone() })?;
            loads.add(arc, S::from_q(v));
        }
    }
    Ok(loads)
}

/// Intradomain matrix seen by a BGP-blind optimizer: every hot-potato cell
/// becomes weight-invariant cells toward the egress routers where its
/// traffic leaves the domain under `w`.
pub fn fold_hot_potato(t: &Topology, w: &WeightVector, tm: &AggregatedTm, tie: TieBreak) -> Result<AggregatedTm> {
    let g = t.graph();
    let mut f = Forwarder::new(t, w);
    let mut out = AggregatedTm { aggregates: Vec::new(), invar: tm.invar.clone(), hp: BTreeMap::new(), exits: tm.exits.clone() };
    for ((s, a), v) in &tm.hp {
        let agg = tm.aggregate(a).ok_or_else(|| Error::Unknown { kind: "aggregate", id: a.clone() })?;
        let d = f.deliver::<Q>(&router_ids(g, &agg.egress_set)?, &[(g.require(s)?, v.clone())], tie, a)?;
        for (r, got) in d.absorbed {
            let router = g.name(r);
            *out.invar.entry((s.clone(), router.to_string())).or_insert_with(Q::zero) += &got;
            let local = local_peerings(&agg.egress_set, router);
            let share = got / Q::from_usize(local.len());
            for p in local {
                *out.exits.entry(p.to_string()).or_insert_with(Q::zero) += &share;
            }
        }
    }
    Ok(out)
}

/// True when every intra and inter arc carries the same load in both maps,
/// up to `rel` relative difference.
pub fn routed_loads_agree<S: Scalar>(a: &LoadMap<S>, b: &LoadMap<S>, g: &Graph, rel: f64) -> bool {
    g.arcs()
        .filter(|(_, arc)| arc.kind != ArcKind::Virtual)
        .all(|(id, _)| crate::quantity::approx_eq(a.get(id).to_f64(), b.get(id).to_f64(), rel))
}

// ---------------------------------------------------------------------------
// Mode comparison

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// BGP-blind optimization, loads as that optimizer expects them.
    Optimistic,
    /// Same weights, loads after hot-potato rerouting.
    Resulting,
    /// Optimization on the extended topology.
    BgpAware,
    /// The weights in the topology file, no optimization.
    Deployed,
    /// Given weights, loads from extended-topology routing.
    Predicted,
}

impl Mode {
    pub const COMPARE: [Mode; 3] = [Mode::Optimistic, Mode::Resulting, Mode::BgpAware];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Optimistic => "optimistic",
            Mode::Resulting => "resulting",
            Mode::BgpAware => "bgp-aware",
            Mode::Deployed => "deployed",
            Mode::Predicted => "predicted",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimistic" => Ok(Mode::Optimistic),
            "resulting" => Ok(Mode::Resulting),
            "bgp-aware" => Ok(Mode::BgpAware),
            "deployed" => Ok(Mode::Deployed),
            "predicted" => Ok(Mode::Predicted),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub search: SearchConfig,
    pub params: CostParams,
    pub tie: TieBreak,
    pub modes: Vec<Mode>,
    /// Route on the simplified model (peering links dropped) when optimizing.
    pub simplify: bool,
    pub timing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            search: SearchConfig::default(),
            params: CostParams::default(),
            tie: TieBreak::Multipath,
            modes: Mode::COMPARE.to_vec(),
            simplify: false,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub umax_intra: Q,
    /// `None` when the routing graph has no peering arcs.
    pub umax_inter: Option<Q>,
    pub phi_total: Q,
}

pub fn metrics(loads: &LoadMap<Q>, xt: &ExtendedTopology, params: &CostParams) -> Metrics {
    let g = xt.graph();
    Metrics {
        umax_intra: u_max(loads, g, &[ArcKind::Intra]),
        umax_inter: xt.has_inter_arcs().then(|| u_max(loads, g, &[ArcKind::Inter])),
        phi_total: phi_total(loads, g, &params.curve()),
    }
}

#[derive(Debug, Clone)]
pub struct ModeResult {
    pub mode: Mode,
    pub weights: WeightVector,
    pub loads: LoadMap<Q>,
    pub metrics: Metrics,
    pub trace: Option<SearchTrace>,
    pub wall_ms: Option<u128>,
}

/// Runs the requested modes for one matrix. Modes sharing an optimization
/// run (optimistic and resulting) reuse it.
pub fn evaluate_modes(t: &Topology, tm: &AggregatedTm, deployed: &WeightVector, cfg: &EvalConfig) -> Result<Vec<ModeResult>> {
    let xt = extend_topology(t, t.peerings(), &tm.aggregates)?;
    let xt_opt = if cfg.simplify { simplify_model(&xt) } else { xt.clone() };
    let want = |m| cfg.modes.contains(&m);
    let mut out = Vec::new();

    if want(Mode::Optimistic) || want(Mode::Resulting) {
        let start = Instant::now();
        let folded = fold_hot_potato(t, deployed, tm, cfg.tie)?;
        let intra = if xt_opt.has_inter_arcs() { extend_topology(t, t.peerings(), &[])? } else { ExtendedTopology::intra_only(t) };
        let (w, trace) = optimize(&intra, &folded, &cfg.params, &cfg.search)?;
        let opt_ms = start.elapsed().as_millis();
        if want(Mode::Optimistic) {
            let loads = compute_loads::<Q>(&intra, &w, &folded)?;
            let metrics = metrics(&loads, &intra, &cfg.params);
            out.push(ModeResult {
                mode: Mode::Optimistic,
                weights: w.clone(),
                loads,
                metrics,
                trace: Some(trace.clone()),
                wall_ms: cfg.timing.then_some(opt_ms),
            });
        }
        if want(Mode::Resulting) {
            let start = Instant::now();
            let loads = resulting_loads::<Q>(&xt, &w, tm, cfg.tie)?;
            let metrics = metrics(&loads, &xt, &cfg.params);
            out.push(ModeResult {
                mode: Mode::Resulting,
                weights: w,
                loads,
                metrics,
                trace: Some(trace),
                wall_ms: cfg.timing.then(|| opt_ms + start.elapsed().as_millis()),
            });
        }
    }

    if want(Mode::BgpAware) {
        let start = Instant::now();
        let (w, trace) = optimize(&xt_opt, tm, &cfg.params, &cfg.search)?;
        let predicted = compute_loads::<Q>(&xt_opt, &w, tm)?;
        let simulated = resulting_loads::<Q>(&xt, &w, tm, cfg.tie)?;
        if cfg.tie == TieBreak::Multipath {
            let compared = if xt_opt.has_inter_arcs() { &xt } else { &xt_opt };
            let mut p = LoadMap::<Q>::zeros(compared.graph().arc_count());
            let mut s = LoadMap::<Q>::zeros(compared.graph().arc_count());
            for (id, arc) in compared.graph().arcs() {
                if arc.kind != ArcKind::Virtual {
                    p.add(id, predicted.get(id).clone());
                    s.add(id, simulated.get(id).clone());
                }
            }
            if !routed_loads_agree(&p, &s, compared.graph(), 1e-9) {
                return Err(Error::Internal("extended-topology loads differ from the hot-potato simulation".into()));
            }
        }
        let metrics = metrics(&simulated, &xt, &cfg.params);
        out.push(ModeResult {
            mode: Mode::BgpAware,
            weights: w,
            loads: simulated,
            metrics,
            trace: Some(trace),
            wall_ms: cfg.timing.then(|| start.elapsed().as_millis()),
        });
    }

    if want(Mode::Deployed) {
        let start = Instant::now();
        let loads = resulting_loads::<Q>(&xt, deployed, tm, cfg.tie)?;
        let metrics = metrics(&loads, &xt, &cfg.params);
        out.push(ModeResult {
            mode: Mode::Deployed,
            weights: deployed.clone(),
            loads,
            metrics,
            trace: None,
            wall_ms: cfg.timing.then(|| start.elapsed().as_millis()),
        });
    }
    out.sort_by_key(|r| r.mode);
    Ok(out)
}

/// Loads of fixed weights `w`: as the extended model predicts them
/// ([`Mode::Predicted`]) and as hot-potato forwarding produces them
/// ([`Mode::Resulting`]).
pub fn evaluate_weights(t: &Topology, tm: &AggregatedTm, w: &WeightVector, cfg: &EvalConfig) -> Result<Vec<ModeResult>> {
    let xt = extend_topology(t, t.peerings(), &tm.aggregates)?;
    let mut out = Vec::new();
    let start = Instant::now();
    let predicted = compute_loads::<Q>(&xt, w, tm)?;
    let predicted_ms = start.elapsed().as_millis();
    let start = Instant::now();
    let resulting = resulting_loads::<Q>(&xt, w, tm, cfg.tie)?;
    let resulting_ms = start.elapsed().as_millis();
    for (mode, loads, ms) in [(Mode::Resulting, resulting, resulting_ms), (Mode::Predicted, predicted, predicted_ms)] {
        let metrics = metrics(&loads, &xt, &cfg.params);
        out.push(ModeResult { mode, weights: w.clone(), loads, metrics, trace: None, wall_ms: cfg.timing.then_some(ms) });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub tm_id: String,
    pub mode: Mode,
    pub metrics: Metrics,
    pub wall_ms: Option<u128>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

/// Per-matrix results, kept for per-arc dumps.
pub type Detailed = Vec<(String, Vec<ModeResult>)>;

/// Evaluates every matrix; rows come out ordered by matrix id then mode
/// whatever the scheduling.
///
/// With `fixed` the weights are only measured ([`evaluate_weights`]);
/// otherwise the configured modes are run against `deployed`.
pub fn evaluate_batch(
    t: &Topology,
    tms: &[(String, AggregatedTm)],
    deployed: &WeightVector,
    fixed: bool,
    cfg: &EvalConfig,
) -> Result<(EvalReport, Detailed)> {
    let run = |(id, tm): &(String, AggregatedTm)| {
        let r = if fixed { evaluate_weights(t, tm, deployed, cfg) } else { evaluate_modes(t, tm, deployed, cfg) };
        r.map(|r| (id.clone(), r))
    };
    let mut detailed: Detailed = if cfg.search.parallel {
        tms.par_iter().map(run).collect::<Result<_>>()?
    } else {
        tms.iter().map(run).collect::<Result<_>>()?
    };
    detailed.sort_by(|a, b| a.0.cmp(&b.0));
    let rows = detailed
        .iter()
        .flat_map(|(id, results)| {
            results.iter().map(move |r| ReportRow {
                tm_id: id.clone(),
                mode: r.mode,
                metrics: r.metrics.clone(),
                wall_ms: r.wall_ms,
            })
        })
        .collect();
    Ok((EvalReport { rows }, detailed))
}

fn meta_lines(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

const PLACES: usize = 6;

impl EvalReport {
    pub fn values(&self, mode: Mode) -> Vec<Q> {
        self.rows.iter().filter(|r| r.mode == mode).map(|r| r.metrics.umax_intra.clone()).collect()
    }

    pub fn modes(&self) -> BTreeSet<Mode> {
        self.rows.iter().map(|r| r.mode).collect()
    }

    /// `tm_id,mode,umax_intra,umax_inter,phi_total,wall_ms`.
    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut out = meta_lines(meta);
        out.push_str("tm_id,mode,umax_intra,umax_inter,phi_total,wall_ms\n");
        for r in &self.rows {
            let m = &r.metrics;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.tm_id,
                r.mode,
                format_fixed(&m.umax_intra, PLACES),
                m.umax_inter.as_ref().map_or("NA".into(), |u| format_fixed(u, PLACES)),
                format_fixed(&m.phi_total, PLACES),
                r.wall_ms.map_or("NA".into(), |ms| ms.to_string()),
            ));
        }
        out
    }
}

/// Right-continuous empirical CDF: one point per distinct value.
pub fn cdf(values: &[Q]) -> Result<Vec<(Q, Q)>> {
    if values.is_empty() {
        return Err(Error::Invalid("CDF of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    let n = Q::from_usize(sorted.len());
    let mut out: Vec<(Q, Q)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = Q::from_usize(i + 1) / &n;
        match out.last_mut() {
            Some((last, f)) if last == v => *f = frac,
            _ => out.push((v.clone(), frac)),
        }
    }
    Ok(out)
}

pub fn cdf_csv(points: &[(Q, Q)], meta: &[(String, String)]) -> String {
    let mut out = meta_lines(meta);
    out.push_str("value,fraction\n");
    for (v, f) in points {
        out.push_str(&format!("{},{}\n", format_fixed(v, PLACES), format_fixed(f, PLACES)));
    }
    out
}

/// Counts per 10-percentage-point utilization bin; the last bin is `>=100`.
pub fn histogram(values: &[Q]) -> Vec<(String, usize)> {
    let mut counts = [0usize; 11];
    for v in values {
        let bin = (v * Q::from_usize(10)).floor().to_integer();
        let i = num::ToPrimitive::to_usize(&bin).unwrap_or(0).min(10);
        counts[i] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (if i == 10 { ">=100".to_string() } else { format!("{}-{}", 10 * i, 10 * (i + 1)) }, c))
        .collect()
}

pub fn histogram_csv(report: &EvalReport, meta: &[(String, String)]) -> String {
    let mut out = meta_lines(meta);
    out.push_str("mode,bin,count,fraction\n");
    for mode in report.modes() {
        let values = report.values(mode);
        let n = values.len();
        for (bin, c) in histogram(&values) {
            out.push_str(&format!("{mode},{bin},{c},{}\n", format_fixed(&(Q::from_usize(c) / Q::from_usize(n)), PLACES)));
        }
    }
    out
}

/// `tm_id,mode,arc,src,dst,kind,load,capacity,utilization` for every
/// non-virtual arc.
pub fn per_arc_csv(t: &Topology, detailed: &Detailed, meta: &[(String, String)]) -> Result<String> {
    let mut out = meta_lines(meta);
    out.push_str("tm_id,mode,arc,src,dst,kind,load,capacity,utilization\n");
    // Peering arcs follow the intra arcs in the same order in every extension.
    let xt = extend_topology(t, t.peerings(), &[])?;
    let g = xt.graph();
    for (id, results) in detailed {
        for r in results {
            for (a, arc) in g.arcs() {
                if a.0 >= r.loads.len() {
                    continue;
                }
                let cap = arc.capacity.finite().expect("intra and inter arcs are finite");
                let load = r.loads.get(a);
                out.push_str(&format!(
                    "{id},{},{},{},{},{},{},{},{}\n",
                    r.mode,
                    arc.label,
                    g.name(arc.src),
                    g.name(arc.dst),
                    arc.kind,
                    format_fixed(load, PLACES),
                    format_fixed(cap, PLACES),
                    format_fixed(&(load / cap), PLACES),
                ));
            }
        }
    }
    Ok(out)
}
