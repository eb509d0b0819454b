use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use hplwo::bgp::{classify_prefixes, parse_route_dump, PrefixClassification};
use hplwo::igp::compute_loads;
use hplwo::lwo::{optimize, parse_weights, weights_to_text, InitialStrategy, SearchConfig};
use hplwo::model::{build_topology, extend_topology, instance_hash, scale_instance, simplify_model, Topology, TopologySpec, WeightVector};
use hplwo::objective::CostParams;
use hplwo::quantity::{format_fixed, format_quantity, parse_quantity};
use hplwo::sim::{cdf, cdf_csv, evaluate_batch, histogram_csv, metrics, per_arc_csv, EvalConfig, Mode, TieBreak};
use hplwo::synth::{backbone, random_instance, routes_to_text, tm_batch, BackboneParams, RandomParams};
use hplwo::tm::{aggregate_by_egress_set, build_aggregated_tm, flows_to_text, parse_flows, truncate_aggregates, AggregatedTm};
use hplwo::{fixtures, Error, Q};

#[derive(Parser, Debug)]
#[command(name = "hplwo", version, about = "Hot-potato aware IGP link weight optimization")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Seed for the search and the generators.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Weight of peering-link costs in the objective.
    #[arg(long, global = true, default_value = "0")]
    alpha: String,
    /// Share of hot-potato volume the kept aggregates must cover.
    #[arg(long, global = true, default_value = "0.999")]
    coverage: String,
    #[arg(long, global = true, default_value_t = 50)]
    iterations: usize,
    #[arg(long, global = true, default_value_t = 150)]
    wmax: u32,
    /// One weight per link (true) or per direction (false).
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    symmetric: bool,
    /// Attach aggregates directly to egress routers; only with alpha 0.
    #[arg(long, global = true)]
    simplify: bool,
    #[arg(long, global = true, value_enum, default_value_t = TieArg::Multipath)]
    tie_break: TieArg,
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Evaluate candidates on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Record wall-clock times in reports (otherwise `NA`).
    #[arg(long, global = true)]
    timing: bool,
    /// Cost breakpoints as `threshold:slope,...`.
    #[arg(long, global = true)]
    breakpoints: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TieArg {
    Multipath,
    LowestId,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum InitArg {
    Unit,
    InverseCapacity,
    Deployed,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split prefixes into single-egress and hot-potato.
    Classify {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        routes: PathBuf,
        #[arg(long)]
        flows: Option<PathBuf>,
    },
    /// Build the aggregated traffic matrix.
    BuildTm {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        routes: PathBuf,
        #[arg(long)]
        flows: PathBuf,
        /// Weights that pin the dropped aggregates (default: topology file weights).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Search link weights on the extended topology.
    Optimize {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        tm: PathBuf,
        #[arg(long, value_enum, default_value_t = InitArg::Unit)]
        init: InitArg,
        /// Starting weights file; overrides --init.
        #[arg(long)]
        initial_weights: Option<PathBuf>,
    },
    /// Loads of fixed weights, predicted and after hot-potato forwarding.
    Evaluate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long, num_args = 1..)]
        tm: Vec<PathBuf>,
        #[arg(long)]
        tm_dir: Option<PathBuf>,
        /// Default: topology file weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        per_arc: bool,
    },
    /// Optimistic / resulting / BGP-aware comparison per matrix.
    Compare {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long, num_args = 1..)]
        tm: Vec<PathBuf>,
        #[arg(long)]
        tm_dir: Option<PathBuf>,
        /// Comma-separated subset of optimistic,resulting,bgp-aware,deployed.
        #[arg(long, default_value = "optimistic,resulting,bgp-aware")]
        modes: String,
        /// Weights the hot-potato choice is frozen at (default: topology file weights).
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        per_arc: bool,
    },
    /// Map capacities and scale demands.
    Scale {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        tm: PathBuf,
        /// `from:to,...` capacity substitutions, e.g. `155:622`.
        #[arg(long, default_value = "")]
        capacity_map: String,
        #[arg(long, default_value = "1")]
        factor: String,
    },
    /// Write synthetic instances.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// The three-router example.
    Toy,
    /// Route dump and flows with 26 egress sets and a 5-aggregate cover.
    Backbone {
        #[arg(long, default_value_t = 156_407)]
        hot_potato_prefixes: usize,
        #[arg(long, default_value_t = 4_566)]
        single_egress_prefixes: usize,
    },
    /// Small random instances (topology and matrix per instance).
    Random {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Perturbed copies of one matrix.
    Batch {
        #[arg(long)]
        tm: PathBuf,
        #[arg(long, default_value_t = 2512)]
        count: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("cannot write `{}`", path.display()))?;
    Ok(path)
}

fn meta_text(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

struct Ctx {
    g: Global,
    params: CostParams,
    coverage: Q,
}

impl Ctx {
    fn new(g: Global) -> Result<Self> {
        let alpha = parse_quantity(&g.alpha).with_context(|| format!("bad --alpha `{}`", g.alpha))?;
        let coverage = parse_quantity(&g.coverage).with_context(|| format!("bad --coverage `{}`", g.coverage))?;
        let breakpoints = match &g.breakpoints {
            Some(text) => CostParams::parse_breakpoints(text)?,
            None => CostParams::default().breakpoints,
        };
        let params = CostParams::new(breakpoints, alpha)?;
        Ok(Ctx { g, params, coverage })
    }

    fn tie(&self) -> TieBreak {
        match self.g.tie_break {
            TieArg::Multipath => TieBreak::Multipath,
            TieArg::LowestId => TieBreak::LowestId,
        }
    }

    fn search(&self, initial: InitialStrategy) -> SearchConfig {
        SearchConfig {
            iterations: self.g.iterations,
            seed: self.g.seed,
            symmetric: self.g.symmetric,
            w_max: self.g.wmax,
            parallel: !self.g.sequential,
            initial,
            ..Default::default()
        }
    }

    /// Parameter echo shared by every output file. Execution-only flags
    /// (`--sequential`, `--out`) are left out so they cannot change bytes.
    fn meta(&self, command: &str, hash: &str) -> Vec<(String, String)> {
        let mut m = vec![
            ("hplwo".to_string(), format!("{} {command}", env!("CARGO_PKG_VERSION"))),
            ("instance".to_string(), hash.to_string()),
            ("seed".to_string(), self.g.seed.to_string()),
            ("alpha".to_string(), format_quantity(&self.params.alpha)),
            ("cost".to_string(), format!("load-denominated, thresholds on utilization: {}", self.params.breakpoints_text())),
            ("iterations".to_string(), self.g.iterations.to_string()),
            ("wmax".to_string(), self.g.wmax.to_string()),
            ("symmetric".to_string(), self.g.symmetric.to_string()),
            ("simplify".to_string(), self.g.simplify.to_string()),
            ("tie-break".to_string(), self.tie().to_string()),
        ];
        if command == "build-tm" {
            m.push(("coverage".to_string(), format_quantity(&self.coverage)));
        }
        m
    }

    fn eval_config(&self, modes: Vec<Mode>) -> EvalConfig {
        EvalConfig {
            search: self.search(InitialStrategy::Unit),
            params: self.params.clone(),
            tie: self.tie(),
            modes,
            simplify: self.g.simplify,
            timing: self.g.timing,
        }
    }
}

fn load_topology(path: &Path) -> Result<(String, Topology)> {
    let text = read(path)?;
    let spec = TopologySpec::parse(&text, &source_name(path))?;
    Ok((text, build_topology(&spec)?))
}

fn load_weights(path: Option<&PathBuf>, t: &Topology) -> Result<(String, WeightVector)> {
    match path {
        Some(p) => {
            let text = read(p)?;
            let w = parse_weights(&text, &source_name(p), t)?;
            Ok((text, w))
        }
        None => Ok((String::new(), t.deployed_weights().clone())),
    }
}

fn load_tms(files: &[PathBuf], dir: Option<&PathBuf>) -> Result<Vec<(String, String, AggregatedTm)>> {
    let mut paths = files.to_vec();
    if let Some(d) = dir {
        let mut found: Vec<PathBuf> = fs::read_dir(d)
            .with_context(|| format!("cannot read `{}`", d.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        bail!(Error::Config("no traffic matrix given (--tm or --tm-dir)".into()));
    }
    let mut out = Vec::new();
    for p in &paths {
        let text = read(p)?;
        let tm = AggregatedTm::parse(&text, &source_name(p))?;
        let id = p.file_stem().map_or_else(|| source_name(p), |s| s.to_string_lossy().into_owned());
        if out.iter().any(|(i, _, _): &(String, String, AggregatedTm)| *i == id) {
            bail!(Error::Config(format!("two matrices share the id `{id}`")));
        }
        out.push((id, text, tm));
    }
    Ok(out)
}

fn pct(q: &Q) -> String {
    let hundred = Q::from_integer(100.into());
    format!("{}%", format_fixed(&(q * hundred), 1))
}

fn cmd_classify(ctx: &Ctx, topology: &Path, routes: &Path, flows: Option<&PathBuf>) -> Result<()> {
    let (topo_text, t) = load_topology(topology)?;
    let routes_text = read(routes)?;
    let records = parse_route_dump(&routes_text, &source_name(routes), &t)?;
    let cls = classify_prefixes(&records)?;
    let hash = instance_hash(&[&topo_text, &routes_text]);
    let body = format!("{}{}", meta_text(&ctx.meta("classify", &hash)), cls.to_text());
    let path = write(&ctx.g.out, "classification.txt", &body)?;
    println!("prefixes: {}", cls.prefix_count());
    println!("hot-potato: {}", cls.hot_potato.len());
    println!("single-egress: {}", cls.single_egress.len());
    if let Some(f) = flows {
        let flows = parse_flows(&read(f)?, &source_name(f), &t)?;
        match cls.hot_potato_share(&flows) {
            Some(share) => println!("hot-potato traffic share: {}", pct(&share)),
            None => println!("hot-potato traffic share: NA (no traffic)"),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_build_tm(ctx: &Ctx, topology: &Path, routes: &Path, flows: &Path, weights: Option<&PathBuf>) -> Result<()> {
    let (topo_text, t) = load_topology(topology)?;
    let routes_text = read(routes)?;
    let flows_text = read(flows)?;
    let cls: PrefixClassification = classify_prefixes(&parse_route_dump(&routes_text, &source_name(routes), &t)?)?;
    let flows = parse_flows(&flows_text, &source_name(flows), &t)?;
    let (w_text, deployed) = load_weights(weights, &t)?;
    if flows.is_empty() {
        eprintln!("warning: no flows; the traffic matrix is empty");
    }
    let aggs = aggregate_by_egress_set(&cls);
    let (kept, rest) = truncate_aggregates(&aggs, &flows, &ctx.coverage)?;
    let tm = build_aggregated_tm(&flows, &cls, &kept, &rest, &t, &deployed)?;
    let hash = instance_hash(&[&topo_text, &routes_text, &flows_text, &w_text]);
    let body = format!("{}{}", meta_text(&ctx.meta("build-tm", &hash)), tm.to_text());
    let path = write(&ctx.g.out, "tm.txt", &body)?;
    let hp_total: Q = kept.iter().chain(rest.iter()).map(|a| &a.volume).sum();
    let kept_total: Q = kept.iter().map(|a| &a.volume).sum();
    println!("aggregates: {}", aggs.len());
    println!("kept: {}", kept.len());
    if hp_total > Q::from_integer(0.into()) {
        println!("coverage achieved: {}", pct(&(kept_total / hp_total)));
    } else {
        println!("coverage achieved: NA (no hot-potato traffic)");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_optimize(ctx: &Ctx, topology: &Path, tm_path: &Path, init: InitArg, initial: Option<&PathBuf>) -> Result<()> {
    let (topo_text, t) = load_topology(topology)?;
    let tm_text = read(tm_path)?;
    let tm = AggregatedTm::parse(&tm_text, &source_name(tm_path))?;
    let (w_text, given) = load_weights(initial, &t)?;
    let strategy = match (initial, init) {
        (Some(_), _) | (None, InitArg::Deployed) => InitialStrategy::Given(given),
        (None, InitArg::Unit) => InitialStrategy::Unit,
        (None, InitArg::InverseCapacity) => InitialStrategy::InverseCapacity,
    };
    let xt = extend_topology(&t, t.peerings(), &tm.aggregates)?;
    let xt = if ctx.g.simplify { simplify_model(&xt) } else { xt };
    let (w, trace) = optimize(&xt, &tm, &ctx.params, &ctx.search(strategy))?;
    let hash = instance_hash(&[&topo_text, &tm_text, &w_text]);
    let meta = ctx.meta("optimize", &hash);
    let wpath = write(&ctx.g.out, "weights.txt", &weights_to_text(&t, &w, &meta))?;
    let tpath = write(&ctx.g.out, "trace.csv", &trace.to_csv(&meta, xt.has_inter_arcs()))?;
    let loads = compute_loads::<Q>(&xt, &w, &tm)?;
    let m = metrics(&loads, &xt, &ctx.params);
    println!("umax_intra: {}", format_quantity(&m.umax_intra));
    if let Some(u) = &m.umax_inter {
        println!("umax_inter: {}", format_quantity(u));
    }
    println!("phi_total: {}", format_fixed(&m.phi_total, 6));
    println!("wrote {}", wpath.display());
    println!("wrote {}", tpath.display());
    Ok(())
}

fn parse_modes(text: &str) -> Result<Vec<Mode>> {
    let mut modes: Vec<Mode> = text.split(',').map(|m| m.trim().parse::<Mode>()).collect::<hplwo::Result<_>>()?;
    if modes.contains(&Mode::Predicted) {
        bail!(Error::Config("`predicted` rows come from `evaluate`".into()));
    }
    modes.sort();
    modes.dedup();
    Ok(modes)
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    ctx: &Ctx,
    command: &str,
    topology: &Path,
    tm_files: &[PathBuf],
    tm_dir: Option<&PathBuf>,
    weights: Option<&PathBuf>,
    modes: Vec<Mode>,
    fixed: bool,
    per_arc: bool,
) -> Result<()> {
    let (topo_text, t) = load_topology(topology)?;
    let tms = load_tms(tm_files, tm_dir)?;
    let (w_text, w) = load_weights(weights, &t)?;
    let mut parts: Vec<&str> = vec![&topo_text, &w_text];
    parts.extend(tms.iter().map(|(_, text, _)| text.as_str()));
    let hash = instance_hash(&parts);
    let meta = ctx.meta(command, &hash);
    let cfg = ctx.eval_config(modes);
    let batch: Vec<(String, AggregatedTm)> = tms.into_iter().map(|(id, _, tm)| (id, tm)).collect();
    let (report, detailed) = evaluate_batch(&t, &batch, &w, fixed, &cfg)?;

    let mut written = vec![write(&ctx.g.out, "report.csv", &report.to_csv(&meta))?];
    for mode in report.modes() {
        let points = cdf(&report.values(mode))?;
        written.push(write(&ctx.g.out, &format!("cdf_{mode}.csv"), &cdf_csv(&points, &meta))?);
    }
    written.push(write(&ctx.g.out, "histogram.csv", &histogram_csv(&report, &meta))?);
    if per_arc {
        written.push(write(&ctx.g.out, "per_arc.csv", &per_arc_csv(&t, &detailed, &meta)?)?);
    }
    if !fixed {
        for (id, results) in &detailed {
            for r in results.iter().filter(|r| matches!(r.mode, Mode::Optimistic | Mode::BgpAware)) {
                let name = format!("weights_{id}_{}.txt", r.mode);
                written.push(write(&ctx.g.out, &name, &weights_to_text(&t, &r.weights, &meta))?);
            }
        }
    }
    let batch_len = batch.len();
    println!("matrices: {batch_len}");
    for mode in report.modes() {
        let values = report.values(mode);
        let max = values.iter().max().expect("one row per matrix");
        if batch_len == 1 {
            println!("{mode}: umax_intra {}", format_quantity(max));
        } else {
            let mean: Q = values.iter().sum::<Q>() / Q::from_integer((values.len() as i64).into());
            println!("{mode}: mean umax_intra {}, worst {}", format_fixed(&mean, 6), format_fixed(max, 6));
        }
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_scale(ctx: &Ctx, topology: &Path, tm_path: &Path, capacity_map: &str, factor: &str) -> Result<()> {
    let topo_text = read(topology)?;
    let spec = TopologySpec::parse(&topo_text, &source_name(topology))?;
    let tm_text = read(tm_path)?;
    let tm = AggregatedTm::parse(&tm_text, &source_name(tm_path))?;
    let mut map = BTreeMap::new();
    for item in capacity_map.split(',').filter(|s| !s.trim().is_empty()) {
        let (from, to) = item.split_once(':').with_context(|| format!("capacity map entry `{item}` is not `from:to`"))?;
        let from = parse_quantity(from).with_context(|| format!("bad capacity `{from}`"))?;
        let to = parse_quantity(to).with_context(|| format!("bad capacity `{to}`"))?;
        map.insert(from, to);
    }
    let factor = parse_quantity(factor).with_context(|| format!("bad --factor `{factor}`"))?;
    let (spec, tm) = scale_instance(&spec, &tm, &map, &factor)?;
    build_topology(&spec)?;
    let meta = ctx.meta("scale", &instance_hash(&[&topo_text, &tm_text]));
    let a = write(&ctx.g.out, "topology.txt", &format!("{}{}", meta_text(&meta), spec.to_text()))?;
    let b = write(&ctx.g.out, "tm.txt", &format!("{}{}", meta_text(&meta), tm.to_text()))?;
    println!("wrote {}", a.display());
    println!("wrote {}", b.display());
    Ok(())
}

fn cmd_gen(ctx: &Ctx, what: &GenCommand) -> Result<()> {
    let out = &ctx.g.out;
    let mut written = Vec::new();
    match what {
        GenCommand::Toy => {
            written.push(write(out, "toy_topology.txt", fixtures::TOY_TOPOLOGY)?);
            written.push(write(out, "toy_routes.txt", fixtures::TOY_ROUTES)?);
            written.push(write(out, "toy_flows.txt", fixtures::TOY_FLOWS)?);
        }
        GenCommand::Backbone { hot_potato_prefixes, single_egress_prefixes } => {
            let p = BackboneParams {
                seed: ctx.g.seed,
                hot_potato_prefixes: *hot_potato_prefixes,
                single_egress_prefixes: *single_egress_prefixes,
            };
            let ps = backbone(&p)?;
            let header = format!("# generator: backbone, seed {}\n", ctx.g.seed);
            written.push(write(out, "backbone_topology.txt", &format!("{header}{}", ps.spec.to_text()))?);
            written.push(write(out, "backbone_routes.txt", &format!("{header}{}", routes_to_text(&ps.routes)))?);
            written.push(write(out, "backbone_flows.txt", &format!("{header}{}", flows_to_text(&ps.flows)))?);
        }
        GenCommand::Random { count } => {
            for i in 0..*count {
                let seed = ctx.g.seed.wrapping_add(i as u64);
                let inst = random_instance(seed, &RandomParams::default())?;
                let header = format!("# generator: random, seed {seed}\n");
                written.push(write(out, &format!("random{i:03}_topology.txt"), &format!("{header}{}", inst.spec.to_text()))?);
                written.push(write(out, &format!("random{i:03}_tm.txt"), &format!("{header}{}", inst.tm.to_text()))?);
            }
        }
        GenCommand::Batch { tm, count } => {
            let text = read(tm)?;
            let base = AggregatedTm::parse(&text, &source_name(tm))?;
            let header = format!("# generator: batch, seed {}, base {}\n", ctx.g.seed, instance_hash(&[&text]));
            for (id, t) in tm_batch(&base, *count, ctx.g.seed) {
                write(out, &format!("{id}.txt"), &format!("{header}{}", t.to_text()))?;
            }
            println!("wrote {count} matrices to {}", out.display());
        }
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(cli.global)?;
    match &cli.command {
        Command::Classify { topology, routes, flows } => cmd_classify(&ctx, topology, routes, flows.as_ref()),
        Command::BuildTm { topology, routes, flows, weights } => cmd_build_tm(&ctx, topology, routes, flows, weights.as_ref()),
        Command::Optimize { topology, tm, init, initial_weights } => {
            cmd_optimize(&ctx, topology, tm, *init, initial_weights.as_ref())
        }
        Command::Evaluate { topology, tm, tm_dir, weights, per_arc } => cmd_report(
            &ctx,
            "evaluate",
            topology,
            tm,
            tm_dir.as_ref(),
            weights.as_ref(),
            vec![Mode::Resulting, Mode::Predicted],
            true,
            *per_arc,
        ),
        Command::Compare { topology, tm, tm_dir, modes, weights, per_arc } => cmd_report(
            &ctx,
            "compare",
            topology,
            tm,
            tm_dir.as_ref(),
            weights.as_ref(),
            parse_modes(modes)?,
            false,
            *per_arc,
        ),
        Command::Scale { topology, tm, capacity_map, factor } => cmd_scale(&ctx, topology, tm, capacity_map, factor),
        Command::Gen { what } => cmd_gen(&ctx, what),
    }
}

/// 1 for instances that cannot be routed or evaluated, 2 for everything
/// the user can fix in the invocation or the input files.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_infeasible() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
