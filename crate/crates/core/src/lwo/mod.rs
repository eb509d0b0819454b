//! Tabu local search over integer IGP weights.
//!
//! Every candidate is scored by routing the whole matrix on the routing
//! graph it is given. On an extended topology that makes the hot-potato
//! egress choice a consequence of the candidate weights; on an intra-only
//! graph the same search is a classical, BGP-blind optimizer.

mod weights;

use std::collections::{BTreeMap, BTreeSet};

use num::{Integer, Signed, ToPrimitive};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::igp::{compile_demands, route_compiled, shortest_distances, u_max, CompiledDemands};
use crate::model::{ArcId, ArcKind, ExtendedTopology, Graph, WeightVector};
use crate::objective::{phi_total, CostCurve, CostParams};
use crate::quantity::{int, Q};
use crate::tm::AggregatedTm;

pub use weights::{parse_weights, weights_to_text};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialStrategy {
    Unit,
    InverseCapacity,
    Given(WeightVector),
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Neighbors evaluated per iteration; `None` means `min(5 * variables, 1000)`.
    pub sample_size: Option<usize>,
    pub tenure: usize,
    /// One variable per bidirectional link instead of one per arc.
    pub symmetric: bool,
    pub w_min: u32,
    pub w_max: u32,
    /// Jump to a random vector after this many non-improving iterations; 0 never.
    pub restart_after: usize,
    pub parallel: bool,
    pub initial: InitialStrategy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 50,
            seed: 0,
            sample_size: None,
            tenure: 8,
            symmetric: true,
            w_min: 1,
            w_max: 150,
            restart_after: 10,
            parallel: true,
            initial: InitialStrategy::Unit,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.w_min == 0 || self.w_min > self.w_max {
            return Err(Error::Config(format!("weight range [{}, {}] is empty or includes 0", self.w_min, self.w_max)));
        }
        if self.sample_size == Some(0) {
            return Err(Error::Config("sample size must be positive".into()));
        }
        Ok(())
    }
}

/// Groups of arcs that always carry the same weight.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    vars: Vec<Vec<ArcId>>,
}

impl SearchSpace {
    pub fn new(xt: &ExtendedTopology, symmetric: bool) -> Self {
        let vars = if symmetric {
            xt.base().links().iter().map(|l| vec![l.forward, l.reverse]).collect()
        } else {
            xt.optimizable_arcs().map(|a| vec![ArcId(a)]).collect()
        };
        SearchSpace { vars }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn arcs(&self, var: usize) -> &[ArcId] {
        &self.vars[var]
    }

    fn read(&self, w: &WeightVector) -> Vec<u32> {
        self.vars.iter().map(|arcs| w.get(arcs[0]) as u32).collect()
    }

    fn write(&self, w: &mut WeightVector, var: usize, value: u32) {
        for &a in &self.vars[var] {
            w.set(a, value);
        }
    }

    /// Upper bound on the neighborhood size.
    pub fn neighbor_count(&self, cfg: &SearchConfig) -> usize {
        self.len() * (cfg.w_max - cfg.w_min) as usize
    }
}

pub fn initial_weights(xt: &ExtendedTopology, strategy: &InitialStrategy, cfg: &SearchConfig) -> Result<WeightVector> {
    let t = xt.base();
    let n = t.arc_count();
    match strategy {
        InitialStrategy::Unit => Ok(WeightVector::uniform(n, cfg.w_min)),
        InitialStrategy::InverseCapacity => {
            let g = t.graph();
            let caps: Vec<&Q> = (0..n).map(|a| g.arc(ArcId(a)).capacity.finite().expect("intra arcs are finite")).collect();
            let Some(c_min) = caps.iter().min().cloned() else {
                return Ok(WeightVector::new(Vec::new()));
            };
            let w_max = int(i64::from(cfg.w_max));
            let half = Q::new(1.into(), 2.into());
            let weights = caps
                .iter()
                .map(|c| {
                    let x = (&w_max * c_min / *c + &half).floor();
                    x.to_integer().to_u32().unwrap_or(cfg.w_max).clamp(cfg.w_min, cfg.w_max)
                })
                .collect();
            Ok(WeightVector::new(weights))
        }
        InitialStrategy::Given(w) => {
            if w.len() != n {
                return Err(Error::Config(format!("given weight vector has {} entries, topology has {n} arcs", w.len())));
            }
            if let Some((i, &v)) = w.as_slice().iter().enumerate().find(|(_, &v)| v < cfg.w_min || v > cfg.w_max) {
                return Err(Error::Config(format!(
                    "weight {v} on arc `{}` outside [{}, {}]",
                    t.graph().arc(ArcId(i)).label,
                    cfg.w_min,
                    cfg.w_max
                )));
            }
            if cfg.symmetric {
                if let Some(l) = t.links().iter().find(|l| w.get(l.forward) != w.get(l.reverse)) {
                    return Err(Error::Config(format!("link `{}` has different weights per direction", l.id)));
                }
            }
            Ok(w.clone())
        }
    }
}

/// One row per iteration; row 0 is the starting vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_cost: f64,
    pub current_cost: f64,
    pub umax_intra: f64,
    pub umax_inter: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    pub rows: Vec<TraceRow>,
    pub evaluations: usize,
    pub restarts: usize,
}

impl SearchTrace {
    pub fn best_is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].best_cost <= w[0].best_cost)
    }

    /// `iteration,best_cost,current_cost,umax_intra,umax_inter`, after
    /// `# key: value` metadata lines.
    pub fn to_csv(&self, meta: &[(String, String)], with_inter: bool) -> String {
        let mut out = String::new();
        for (k, v) in meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str("iteration,best_cost,current_cost,umax_intra,umax_inter\n");
        for r in &self.rows {
            let inter = if with_inter { format!("{:.9}", r.umax_inter) } else { "NA".into() };
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.9},{}\n",
                r.iteration, r.best_cost, r.current_cost, r.umax_intra, inter
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    cost: f64,
    umax_intra: f64,
    umax_inter: f64,
}

struct Evaluator<'a> {
    g: &'a Graph,
    demands: CompiledDemands<f64>,
    curve: CostCurve<f64>,
}

impl Evaluator<'_> {
    fn eval(&self, w: &WeightVector) -> Result<Point> {
        let loads = route_compiled(self.g, w, &self.demands)?;
        Ok(Point {
            cost: phi_total(&loads, self.g, &self.curve),
            umax_intra: u_max(&loads, self.g, &[ArcKind::Intra]),
            umax_inter: u_max(&loads, self.g, &[ArcKind::Inter]),
        })
    }
}

fn improves(candidate: f64, reference: f64) -> bool {
    candidate < reference - 1e-9 * reference.abs()
}

pub fn optimize(
    xt: &ExtendedTopology,
    tm: &AggregatedTm,
    params: &CostParams,
    cfg: &SearchConfig,
) -> Result<(WeightVector, SearchTrace)> {
    cfg.validate()?;
    params.validate()?;
    if params.alpha.is_positive() {
        if xt.is_simplified() {
            return Err(Error::Config("alpha > 0 needs the peering links, but the model was simplified".into()));
        }
        if !xt.has_inter_arcs() {
            return Err(Error::Config("alpha > 0 needs the peering links, but the topology has none".into()));
        }
    }
    let g = xt.graph();
    let eval = Evaluator { g, demands: compile_demands(xt, tm)?, curve: params.curve() };
    let space = SearchSpace::new(xt, cfg.symmetric);
    let mut current = initial_weights(xt, &cfg.initial, cfg)?;
    // Unreachable demands fail here, before any search.
    let mut cur = eval.eval(&current)?;
    let mut best_w = current.clone();
    let mut best = cur;
    let mut trace = SearchTrace { evaluations: 1, ..Default::default() };
    let row = |iteration, best: &Point, cur: &Point| TraceRow {
        iteration,
        best_cost: best.cost,
        current_cost: cur.cost,
        umax_intra: cur.umax_intra,
        umax_inter: cur.umax_inter,
    };
    trace.rows.push(row(0, &best, &cur));
    if space.is_empty() || cfg.w_min == cfg.w_max {
        return Ok((best_w, trace));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sample = cfg.sample_size.unwrap_or_else(|| (5 * space.len()).min(1000));
    let mut tabu: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    let mut stale = 0;
    for it in 1..=cfg.iterations {
        let vars = space.read(&current);
        let moves = neighborhood(&space, &vars, &current, g, &eval.demands, cfg, sample, &mut rng);
        let score = |&(var, value): &(usize, u32)| {
            let mut w = current.clone();
            space.write(&mut w, var, value);
            eval.eval(&w)
        };
        let points: Vec<Point> = if cfg.parallel {
            moves.par_iter().map(score).collect::<Result<_>>()?
        } else {
            moves.iter().map(score).collect::<Result<_>>()?
        };
        trace.evaluations += points.len();

        let admissible = |i: usize| {
            let (var, value) = moves[i];
            tabu.get(&(var, value)).is_none_or(|&until| it > until) || improves(points[i].cost, best.cost)
        };
        let floor = (0..moves.len()).filter(|&i| admissible(i)).map(|i| points[i].cost).fold(f64::INFINITY, f64::min);
        let chosen = (0..moves.len()).find(|&i| admissible(i) && !improves(floor, points[i].cost));
        if let Some(i) = chosen {
            let (var, value) = moves[i];
            if cfg.tenure > 0 {
                tabu.insert((var, vars[var]), it + cfg.tenure);
            }
            space.write(&mut current, var, value);
            cur = points[i];
        }

        if improves(cur.cost, best.cost) {
            best = cur;
            best_w = current.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        trace.rows.push(row(it, &best, &cur));
        if cfg.restart_after > 0 && stale >= cfg.restart_after && it < cfg.iterations {
            for var in 0..space.len() {
                space.write(&mut current, var, rng.gen_range(cfg.w_min..=cfg.w_max));
            }
            cur = eval.eval(&current)?;
            trace.evaluations += 1;
            trace.restarts += 1;
            tabu.clear();
            stale = 0;
            if improves(cur.cost, best.cost) {
                best = cur;
                best_w = current.clone();
            }
        }
    }
    Ok((best_w, trace))
}

/// Candidate single-variable moves for one iteration, sorted by (var, weight).
///
/// If the whole neighborhood fits in the sample it is returned entirely.
/// Otherwise the sample mixes balancing moves, which make an arc join or tie
/// on a shortest path toward some destination, with uniform random moves.
#[allow(clippy::too_many_arguments)]
fn neighborhood(
    space: &SearchSpace,
    vars: &[u32],
    w: &WeightVector,
    g: &Graph,
    demands: &CompiledDemands<f64>,
    cfg: &SearchConfig,
    sample: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, u32)> {
    if space.neighbor_count(cfg) <= sample {
        return (0..space.len())
            .flat_map(|var| (cfg.w_min..=cfg.w_max).filter(move |&v| v != vars[var]).map(move |v| (var, v)))
            .collect();
    }
    let balancing = balancing_moves(space, vars, w, g, demands, cfg);
    let mut moves: BTreeSet<(usize, u32)> = if balancing.len() > sample / 2 {
        balancing.into_iter().choose_multiple(rng, sample / 2).into_iter().collect()
    } else {
        balancing
    };
    let mut attempts = 0;
    while moves.len() < sample && attempts < 20 * sample {
        attempts += 1;
        let var = rng.gen_range(0..space.len());
        let value = rng.gen_range(cfg.w_min..=cfg.w_max);
        if value != vars[var] {
            moves.insert((var, value));
        }
    }
    moves.into_iter().collect()
}

fn balancing_moves(
    space: &SearchSpace,
    vars: &[u32],
    w: &WeightVector,
    g: &Graph,
    demands: &CompiledDemands<f64>,
    cfg: &SearchConfig,
) -> BTreeSet<(usize, u32)> {
    let mut out = BTreeSet::new();
    for (dest, _) in &demands.by_dest {
        let dist = shortest_distances(g, w, *dest);
        for var in 0..space.len() {
            for &a in space.arcs(var) {
                let arc = g.arc(a);
                let (Some(du), Some(dv)) = (dist.get(arc.src), dist.get(arc.dst)) else { continue };
                let target = if w.get(a) + dv > du {
                    // Join the shortest-path DAG as an extra equal-cost branch.
                    du.checked_sub(dv)
                } else {
                    // Already on it: raise until the best alternative ties.
                    g.out_arcs(arc.src)
                        .iter()
                        .filter(|&&b| b != a)
                        .filter_map(|&b| dist.get(g.arc(b).dst).map(|d| w.get(b) + d))
                        .min()
                        .filter(|&alt| alt > du)
                        .map(|alt| alt - dv)
                };
                if let Some(t) = target.and_then(|t| u32::try_from(t).ok()) {
                    if (cfg.w_min..=cfg.w_max).contains(&t) && t != vars[var] {
                        out.insert((var, t));
                    }
                }
            }
        }
    }
    out
}

/// Exact loads and cost of one vector, for reporting.
pub fn exact_cost(xt: &ExtendedTopology, tm: &AggregatedTm, params: &CostParams, w: &WeightVector) -> Result<Q> {
    let loads = crate::igp::compute_loads::<Q>(xt, w, tm)?;
    Ok(phi_total(&loads, xt.graph(), &params.curve()))
}

/// Every vector in `[w_min, w_max]^vars`, in lexicographic order. Used as an
/// exhaustive oracle on tiny instances.
pub fn enumerate_vectors(xt: &ExtendedTopology, symmetric: bool, w_min: u32, w_max: u32) -> Vec<WeightVector> {
    let space = SearchSpace::new(xt, symmetric);
    let base = WeightVector::uniform(xt.base().arc_count(), w_min);
    let span = (w_max - w_min + 1) as usize;
    let total = span.pow(space.len() as u32);
    (0..total)
        .map(|mut k| {
            let mut w = base.clone();
            for var in (0..space.len()).rev() {
                let (q, r) = k.div_rem(&span);
                space.write(&mut w, var, w_min + r as u32);
                k = q;
            }
            w
        })
        .collect()
}

/// Exact minimum of the cost over all vectors of [`enumerate_vectors`].
pub fn exhaustive_optimum(
    xt: &ExtendedTopology,
    tm: &AggregatedTm,
    params: &CostParams,
    symmetric: bool,
    w_min: u32,
    w_max: u32,
) -> Result<(WeightVector, Q)> {
    let mut best: Option<(WeightVector, Q)> = None;
    for w in enumerate_vectors(xt, symmetric, w_min, w_max) {
        let c = exact_cost(xt, tm, params, &w)?;
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((w, c));
        }
    }
    best.ok_or_else(|| Error::Internal("empty search space".into()))
}
