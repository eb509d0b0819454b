//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hplwo::igp::{compute_loads, u_max, LoadMap};
use hplwo::lwo::{exact_cost, exhaustive_optimum, enumerate_vectors, initial_weights, optimize, InitialStrategy, SearchConfig};
use hplwo::model::{extend_topology, ArcKind, ExtendedTopology, Topology, WeightVector};
use hplwo::objective::CostParams;
use hplwo::quantity::{format_quantity, int, ratio};
use hplwo::sim::{fold_hot_potato, resulting_loads, routed_loads_agree, TieBreak};
use hplwo::synth::{backbone, random_instance, tm_batch, Instance, BackboneParams, RandomParams, EGRESS_SETS};
use hplwo::tm::{aggregate_by_egress_set, build_aggregated_tm, truncate_aggregates};
use hplwo::{fixtures, Q};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn umax_intra(loads: &LoadMap<Q>, xt: &ExtendedTopology) -> Q {
    u_max(loads, xt.graph(), &[ArcKind::Intra])
}

fn umax_inter(loads: &LoadMap<Q>, xt: &ExtendedTopology) -> Q {
    u_max(loads, xt.graph(), &[ArcKind::Inter])
}

fn extended(inst: &Instance) -> ExtendedTopology {
    extend_topology(&inst.topology, inst.topology.peerings(), &inst.tm.aggregates).expect("generated instance extends")
}

fn within(start: Instant, budget: Duration) -> Result<Duration, String> {
    let spent = start.elapsed();
    if spent < budget {
        Ok(spent)
    } else {
        Err(format!("took {spent:.2?}, budget {budget:?}"))
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let t = fixtures::toy_topology();
    let xt = fixtures::toy_extended();
    let tm = fixtures::toy_tm();
    let folded = fold_hot_potato(&t, t.deployed_weights(), &tm, TieBreak::Multipath).map_err(|e| e.to_string())?;
    let expected: Vec<((String, String), Q)> = vec![(("R1".into(), "R2".into()), int(5))];
    check(folded.invar.clone().into_iter().collect::<Vec<_>>() == expected, || format!("intradomain TM {:?}", folded.invar))?;

    let w = fixtures::toy_weights(&t, 2, 1, 1);
    let intra = ExtendedTopology::intra_only(&t);
    let optimistic = compute_loads::<Q>(&intra, &w, &folded).map_err(|e| e.to_string())?;
    let resulting = resulting_loads::<Q>(&xt, &w, &tm, TieBreak::Multipath).map_err(|e| e.to_string())?;
    let (uo, ur) = (umax_intra(&optimistic, &intra), umax_intra(&resulting, &xt));
    check(uo == ratio(5, 16), || format!("optimistic u_max {}", format_quantity(&uo)))?;
    check(ur == ratio(5, 8), || format!("resulting u_max {}", format_quantity(&ur)))?;

    let cfg = SearchConfig { seed: 1, ..Default::default() };
    let (wb, _) = optimize(&xt, &tm, &CostParams::default(), &cfg).map_err(|e| e.to_string())?;
    let ub = umax_intra(&compute_loads::<Q>(&xt, &wb, &tm).map_err(|e| e.to_string())?, &xt);
    check(ub == ratio(5, 16), || format!("BGP-aware u_max {}", format_quantity(&ub)))?;
    let spent = within(start, Duration::from_secs(1))?;
    Ok(format!(
        "TM {{R1->R2: 5}}; optimistic {} resulting {} bgp-aware {} ({spent:.2?})",
        format_quantity(&uo),
        format_quantity(&ur),
        format_quantity(&ub)
    ))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let params = RandomParams { max_nodes: 10, max_aggregates: 4, ..Default::default() };
    let cost = CostParams::default();
    let runs = 200;
    for seed in 0..runs {
        let inst = random_instance(seed, &params).map_err(|e| e.to_string())?;
        let xt = extended(&inst);
        let cfg = SearchConfig { iterations: 10, seed, ..Default::default() };
        let (w, _) = optimize(&xt, &inst.tm, &cost, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let predicted = compute_loads::<Q>(&xt, &w, &inst.tm).map_err(|e| e.to_string())?;
        let simulated = resulting_loads::<Q>(&xt, &w, &inst.tm, TieBreak::Multipath).map_err(|e| e.to_string())?;
        check(routed_loads_agree(&predicted, &simulated, xt.graph(), 1e-9), || format!("seed {seed}: predicted != simulated"))?;
    }
    let spent = within(start, Duration::from_secs(60))?;
    Ok(format!("{runs} instances agree within 1e-9 ({spent:.2?})"))
}

fn ac3() -> Outcome {
    let params = RandomParams { min_nodes: 3, max_nodes: 4, max_extra_links: 1, max_links: 3, ..Default::default() };
    let (mut instances, mut vectors) = (0, 0usize);
    for seed in 0..30 {
        let inst = random_instance(1000 + seed, &params).map_err(|e| e.to_string())?;
        let xt = extended(&inst);
        check(xt.optimizable_arcs().len() <= 6, || format!("seed {seed}: {} arcs", xt.optimizable_arcs().len()))?;
        let intra = ExtendedTopology::intra_only(&inst.topology);
        for w in enumerate_vectors(&xt, false, 1, 3) {
            let direct = compute_loads::<Q>(&xt, &w, &inst.tm).map_err(|e| e.to_string())?;
            let folded = fold_hot_potato(&inst.topology, &w, &inst.tm, TieBreak::Multipath).map_err(|e| e.to_string())?;
            let via_fold = compute_loads::<Q>(&intra, &w, &folded).map_err(|e| e.to_string())?;
            for a in xt.optimizable_arcs() {
                let id = hplwo::model::ArcId(a);
                check(direct.get(id) == via_fold.get(id), || format!("seed {seed}: arc {a} differs under {:?}", w.as_slice()))?;
            }
            vectors += 1;
        }
        instances += 1;
    }
    Ok(format!("{instances} instances, {vectors} weight vectors, exact"))
}

fn total_load(loads: &LoadMap<Q>, xt: &ExtendedTopology) -> Q {
    xt.optimizable_arcs().map(|a| loads.get(hplwo::model::ArcId(a)).clone()).sum()
}

fn average_utilization(loads: &LoadMap<Q>, xt: &ExtendedTopology) -> Q {
    let g = xt.graph();
    let arcs = xt.optimizable_arcs();
    let n = arcs.len() as i64;
    let sum: Q = arcs
        .map(hplwo::model::ArcId)
        .map(|a| loads.get(a) / g.arc(a).capacity.finite().expect("intra arcs are finite"))
        .sum();
    sum / int(n)
}

fn ac4() -> Outcome {
    // With capacities 4, 6 and 12 and w_max 3 the inverse-capacity weights are
    // exactly 3, 2 and 1, so they belong to the enumerated set.
    let params = RandomParams { min_nodes: 3, max_nodes: 5, max_extra_links: 3, max_links: 6, capacities: vec![4, 6, 12], ..Default::default() };
    let cfg = SearchConfig { w_max: 3, ..Default::default() };
    let mut count = 0;
    for seed in 0..20u64 {
        let inst = random_instance(2000 + seed, &params).map_err(|e| e.to_string())?;
        let xt = extended(&inst);
        let loads = |w: &WeightVector| compute_loads::<Q>(&xt, w, &inst.tm).map_err(|e| e.to_string());
        let unit = initial_weights(&xt, &InitialStrategy::Unit, &cfg).map_err(|e| e.to_string())?;
        let inv = initial_weights(&xt, &InitialStrategy::InverseCapacity, &cfg).map_err(|e| e.to_string())?;
        let unit_total = total_load(&loads(&unit)?, &xt);
        let inv_avg = average_utilization(&loads(&inv)?, &xt);
        let (mut min_total, mut min_avg) = (unit_total.clone(), inv_avg.clone());
        for w in enumerate_vectors(&xt, false, 1, 3) {
            let l = loads(&w)?;
            min_total = min_total.min(total_load(&l, &xt));
            min_avg = min_avg.min(average_utilization(&l, &xt));
        }
        check(unit_total == min_total, || format!("seed {seed}: unit total {} > {}", format_quantity(&unit_total), format_quantity(&min_total)))?;
        check(inv_avg == min_avg, || format!("seed {seed}: inverse-capacity average {} > {}", format_quantity(&inv_avg), format_quantity(&min_avg)))?;
        count += 1;
    }
    Ok(format!("{count} instances, both oracles exact over {{1..3}} per arc"))
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let params = RandomParams { min_nodes: 3, max_nodes: 4, max_extra_links: 2, max_links: 4, ..Default::default() };
    let cost = CostParams::default();
    let runs = 100u64;
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..runs {
        let inst = random_instance(3000 + seed, &params).map_err(|e| e.to_string())?;
        let xt = extended(&inst);
        check(inst.topology.links().len() <= 4, || format!("seed {seed}: {} links", inst.topology.links().len()))?;
        let (_, best) = exhaustive_optimum(&xt, &inst.tm, &cost, true, 1, 4).map_err(|e| e.to_string())?;
        let cfg = SearchConfig { iterations: 50, seed, w_max: 4, ..Default::default() };
        let (w, _) = optimize(&xt, &inst.tm, &cost, &cfg).map_err(|e| e.to_string())?;
        if exact_cost(&xt, &inst.tm, &cost, &w).map_err(|e| e.to_string())? == best {
            hits += 1;
        } else {
            misses.push(seed);
        }
    }
    let spent = within(start, Duration::from_secs(120))?;
    check(hits * 100 >= 95 * runs, || format!("{hits}/{runs} runs optimal, misses {misses:?}"))?;
    Ok(format!("{hits}/{runs} runs reach the exhaustive minimum ({spent:.2?})"))
}

fn ac6() -> Outcome {
    let ps = backbone(&BackboneParams::default()).map_err(|e| e.to_string())?;
    let t: Topology = hplwo::model::build_topology(&ps.spec).map_err(|e| e.to_string())?;
    let cls = hplwo::bgp::classify_prefixes(&ps.routes).map_err(|e| e.to_string())?;
    let aggs = aggregate_by_egress_set(&cls);
    check(aggs.len() == EGRESS_SETS, || format!("{} aggregates", aggs.len()))?;
    let (kept, rest) = truncate_aggregates(&aggs, &ps.flows, &ratio(999, 1000)).map_err(|e| e.to_string())?;
    check(kept.len() == 5, || format!("{} kept", kept.len()))?;
    let kept_v: Q = kept.iter().map(|a| &a.volume).sum();
    let rest_v: Q = rest.iter().map(|a| &a.volume).sum();
    let excluded = &rest_v / (&kept_v + &rest_v);
    check(excluded <= ratio(1, 1000), || format!("excluded share {}", format_quantity(&excluded)))?;
    let zero = rest.iter().filter(|a| a.volume == int(0)).count();
    check(zero == 8, || format!("{zero} zero-traffic sets"))?;
    let tm = build_aggregated_tm(&ps.flows, &cls, &kept, &rest, &t, t.deployed_weights()).map_err(|e| e.to_string())?;
    let batch = tm_batch(&tm, 2512, 2005);
    check(batch.len() == 2512, || format!("batch of {}", batch.len()))?;
    Ok(format!(
        "26 aggregates, 5 kept, excluded {:.4}%, batch of {}",
        hplwo::Scalar::to_f64(&excluded) * 100.0,
        batch.len()
    ))
}

fn ac7() -> Outcome {
    let (xt, tm) = fixtures::two_peering();
    let run = |alpha: i64| -> Result<(Q, Q), String> {
        let params = CostParams::default().with_alpha(int(alpha)).map_err(|e| e.to_string())?;
        let cfg = SearchConfig { iterations: 100, seed: 1, ..Default::default() };
        let (w, _) = optimize(&xt, &tm, &params, &cfg).map_err(|e| e.to_string())?;
        let loads = compute_loads::<Q>(&xt, &w, &tm).map_err(|e| e.to_string())?;
        Ok((umax_intra(&loads, &xt), umax_inter(&loads, &xt)))
    };
    let (intra0, inter0) = run(0)?;
    let (intra1, inter1) = run(1)?;
    check(inter1 < inter0, || format!("inter u_max {} -> {}", format_quantity(&inter0), format_quantity(&inter1)))?;
    check(&intra1 - &intra0 <= ratio(5, 100), || format!("intra u_max {} -> {}", format_quantity(&intra0), format_quantity(&intra1)))?;
    Ok(format!(
        "inter u_max {} -> {}, intra u_max {} -> {}",
        format_quantity(&inter0),
        format_quantity(&inter1),
        format_quantity(&intra0),
        format_quantity(&intra1)
    ))
}

fn ac8() -> Outcome {
    let t = fixtures::toy_topology();
    let xt = fixtures::toy_extended();
    let tm = fixtures::toy_tm();
    let deployed = resulting_loads::<Q>(&xt, t.deployed_weights(), &tm, TieBreak::Multipath).map_err(|e| e.to_string())?;
    let tuned = resulting_loads::<Q>(&xt, &fixtures::toy_weights(&t, 2, 1, 1), &tm, TieBreak::Multipath).map_err(|e| e.to_string())?;
    let (ud, ur) = (umax_intra(&deployed, &xt), umax_intra(&tuned, &xt));
    check(ud == ratio(1, 2), || format!("unoptimized u_max {}", format_quantity(&ud)))?;
    check(ur == ratio(5, 8), || format!("resulting u_max {}", format_quantity(&ur)))?;
    check(ur > ud, || "resulting does not exceed unoptimized".into())?;
    Ok(format!("resulting {} > unoptimized {}", format_quantity(&ur), format_quantity(&ud)))
}

fn hplwo(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hplwo"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || format!("hplwo {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
}

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(n)).map_err(|e| format!("{}: {e}", n.to_string_lossy()))?;
        check(x == y, || format!("{} differs", n.to_string_lossy()))?;
    }
    let other = std::fs::read_dir(b).map_err(|e| e.to_string())?.count();
    check(other == names.len(), || "different file sets".into())?;
    Ok(names.len())
}

fn ac9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    hplwo(d, &["--seed", "7", "--out", "inst", "gen", "backbone", "--hot-potato-prefixes", "2600", "--single-egress-prefixes", "400"])?;
    let base = ["--topology", "inst/backbone_topology.txt"];
    hplwo(d, &[&["--out", "inst", "build-tm"][..], &base, &["--routes", "inst/backbone_routes.txt", "--flows", "inst/backbone_flows.txt"]].concat())?;
    hplwo(d, &["--seed", "3", "--out", "batch", "gen", "batch", "--tm", "inst/tm.txt", "--count", "12"])?;
    for (name, extra) in [("seq", vec!["--sequential"]), ("par", vec![]), ("par2", vec![])] {
        let common = [&["--seed", "11", "--out", name][..], &extra].concat();
        hplwo(d, &[&common[..], &["--iterations", "15", "optimize"], &base, &["--tm", "inst/tm.txt"]].concat())?;
        hplwo(d, &[&common[..], &["--iterations", "5", "compare"], &base, &["--tm-dir", "batch", "--per-arc"]].concat())?;
    }
    let n = same_files(&d.join("seq"), &d.join("par"))?;
    same_files(&d.join("par"), &d.join("par2"))?;
    Ok(format!("{n} output files byte-identical across sequential, parallel and repeated runs"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "toy reproduction", ac1),
        ("AC2", "predicted loads equal simulated loads", ac2),
        ("AC3", "folding equivalence", ac3),
        ("AC4", "unit and inverse-capacity optimality", ac4),
        ("AC5", "tabu search vs exhaustive minimum", ac5),
        ("AC6", "aggregation and coverage", ac6),
        ("AC7", "alpha trades intra for inter utilization", ac7),
        ("AC8", "resulting exceeds unoptimized", ac8),
        ("AC9", "determinism", ac9),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        match f() {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
