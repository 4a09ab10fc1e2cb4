use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use roadpriv_core::graph::{make_cross_map, make_lattice, make_line, make_two_vertex};
use roadpriv_core::mechanism::{gem_row, sample_index};
use roadpriv_core::metrics::attack_strategy;
use roadpriv_core::scenarios::{self, CrossMapConfig, HotspotConfig, Table, PLMG_PADDING_SCALE};
use roadpriv_core::*;

use crate::args::*;
use crate::output::{read, sibling, write, CliError, CliResult, Sink, Timer};

const DEFAULT_SWEEP_EPS: [f64; 5] = [0.002, 0.005, 0.01, 0.02, 0.05];
const DEFAULT_CROSS_EPS: [f64; 3] = [0.005, 0.01, 0.02];
const DEFAULT_EPS: f64 = 0.01;

pub fn run(cli: &Cli) -> CliResult {
    let g = &cli.global;
    let mut timer = Timer::new(g.timing);
    let sink = |command| Sink { out: g.out.as_deref(), command, seed: g.seed };
    match &cli.command {
        Command::Generate { shape } => generate(shape, &sink("generate")),
        Command::Perturb(a) => perturb(a, g.seed, &sink("perturb"), &mut timer),
        Command::Mechanism(a) => mechanism(a, &sink("mechanism"), &mut timer),
        Command::Evaluate(a) => evaluate(a, &sink("evaluate"), &mut timer),
        Command::Attack(a) => attack(a, &sink("attack"), &mut timer),
        Command::Optimize(a) => optimize(a, &sink("optimize"), &mut timer),
        Command::Scenario(a) => scenario(a, &sink("scenario"), &mut timer),
    }
}

fn generate(shape: &Shape, sink: &Sink) -> CliResult {
    let (g, params) = match *shape {
        Shape::Line { nodes, length } => (make_line(nodes, length)?, json!({"shape": "line", "nodes": nodes, "length": length})),
        Shape::TwoVertex { euclid, shortest } => {
            (make_two_vertex(euclid, shortest)?, json!({"shape": "two-vertex", "euclid": euclid, "shortest": shortest}))
        }
        Shape::Lattice { rows, cols, spacing } => {
            (make_lattice(rows, cols, spacing)?, json!({"shape": "lattice", "rows": rows, "cols": cols, "spacing": spacing}))
        }
        Shape::Cross { arm, spacing } => (make_cross_map(arm, spacing)?, json!({"shape": "cross", "arm": arm, "spacing": spacing})),
    };
    sink.emit(&g.to_text(), params)
}

fn load_graph_file(path: &Path) -> CliResult<RoadGraph> {
    load_graph(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_range(path: Option<&Path>, n: usize) -> CliResult<OutputRange> {
    match path {
        None => Ok(OutputRange::full(n)),
        Some(p) => OutputRange::from_text(&read(p)?, n).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
    }
}

fn load_prior(path: Option<&Path>, n: usize) -> CliResult<Prior> {
    match path {
        None => Ok(Prior::uniform(n)),
        Some(p) => Prior::from_csv(&read(p)?, n).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
    }
}

fn check_eps(eps: f64) -> CliResult {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("--eps must be positive and finite, got {eps}")))
    }
}

fn path_str(p: Option<&Path>) -> Value {
    p.map_or(Value::Null, |p| Value::String(p.display().to_string()))
}

fn build_mechanism(g: &RoadGraph, d: &DistanceMatrix, input: &GraphInput, kind: &KindArgs) -> CliResult<MechanismMatrix> {
    check_eps(input.eps)?;
    match kind.kind {
        Kind::Gem => Ok(gem_matrix(d, &load_range(input.range.as_deref(), g.len())?, input.eps)?),
        Kind::Plmg => {
            if input.range.is_some() {
                return Err(CliError::Input("--range applies only to --kind gem".into()));
            }
            let padding = kind.padding.unwrap_or(PLMG_PADDING_SCALE / input.eps);
            Ok(plmg_matrix(g, input.eps, kind.grid_step, padding)?)
        }
    }
}

fn mechanism_params(input: &GraphInput, kind: &KindArgs) -> Value {
    json!({
        "graph": path_str(Some(&input.graph)),
        "eps": input.eps,
        "range": path_str(input.range.as_deref()),
        "kind": format!("{:?}", kind.kind).to_lowercase(),
        "grid_step": kind.grid_step,
        "padding": kind.padding.unwrap_or(PLMG_PADDING_SCALE / input.eps),
    })
}

fn perturb(a: &PerturbArgs, seed: u64, sink: &Sink, timer: &mut Timer) -> CliResult {
    check_eps(a.input.eps)?;
    if a.samples == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let g = load_graph_file(&a.input.graph)?;
    let range = load_range(a.input.range.as_deref(), g.len())?;
    let v = match (a.vertex, a.x, a.y) {
        (Some(v), _, _) if v < g.len() => v,
        (Some(v), _, _) => return Err(CliError::Input(format!("vertex {v} out of range (graph has {} vertices)", g.len()))),
        (None, Some(x), Some(y)) if x.is_finite() && y.is_finite() => nearest_vertex(&g, PlanarPoint::new(x, y)),
        _ => return Err(CliError::Input("need --vertex or finite --x and --y".into())),
    };
    timer.lap("load");
    let row = gem_row(&g.shortest_from(v), &range, a.input.eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..a.samples {
        text.push_str(&range.as_slice()[sample_index(&row, &mut rng)].to_string());
        text.push('\n');
    }
    timer.lap("sample");
    let params = json!({
        "graph": path_str(Some(&a.input.graph)),
        "eps": a.input.eps,
        "range": path_str(a.input.range.as_deref()),
        "vertex": v,
        "samples": a.samples,
    });
    sink.emit(&text, params)
}

fn mechanism(a: &MechanismArgs, sink: &Sink, timer: &mut Timer) -> CliResult {
    let g = load_graph_file(&a.input.graph)?;
    let d = all_pairs(&g);
    timer.lap("distances");
    let m = build_mechanism(&g, &d, &a.input, &a.kind)?;
    timer.lap("mechanism");
    sink.emit(&m.to_csv(), mechanism_params(&a.input, &a.kind))
}

fn evaluate(a: &EvaluateArgs, sink: &Sink, timer: &mut Timer) -> CliResult {
    let g = load_graph_file(&a.input.graph)?;
    let prior = load_prior(a.prior.prior.as_deref(), g.len())?;
    let d = all_pairs(&g);
    timer.lap("distances");
    let m = build_mechanism(&g, &d, &a.input, &a.kind)?;
    timer.lap("mechanism");
    let r = EvaluationReport::evaluate(&prior, &m, &d, a.metric.into(), a.attack.into())?;
    timer.lap("evaluate");
    if r.pc.is_none() {
        eprintln!("warning: quality loss is zero, so PC is undefined and reported as NA");
    }
    let mut params = mechanism_params(&a.input, &a.kind);
    params["prior"] = path_str(a.prior.prior.as_deref());
    sink.emit(&format!("{}\n{}\n", EvaluationReport::CSV_HEADER, r.to_csv_row()), params)
}

fn attack(a: &AttackArgs, sink: &Sink, timer: &mut Timer) -> CliResult {
    let g = load_graph_file(&a.input.graph)?;
    let prior = load_prior(a.prior.prior.as_deref(), g.len())?;
    let d = all_pairs(&g);
    timer.lap("distances");
    let m = build_mechanism(&g, &d, &a.input, &a.kind)?;
    timer.lap("mechanism");
    let h = match a.attack {
        StrategyArg::Optimal => attack_strategy(&prior, &m, &d, a.metric.into(), Attack::Optimal)?,
        StrategyArg::Posterior => posterior_strategy(&prior, &m)?,
        StrategyArg::Map => map_attack(&prior, &m)?,
    };
    timer.lap("attack");
    let mut params = mechanism_params(&a.input, &a.kind);
    params["prior"] = path_str(a.prior.prior.as_deref());
    params["attack"] = json!(format!("{:?}", a.attack).to_lowercase());
    params["metric"] = json!(Metric::from(a.metric).as_str());
    sink.emit(&h.to_csv(), params)
}

fn optimize(a: &OptimizeArgs, sink: &Sink, timer: &mut Timer) -> CliResult {
    check_eps(a.eps)?;
    let g = load_graph_file(&a.graph)?;
    let prior = load_prior(a.prior.prior.as_deref(), g.len())?;
    let d = all_pairs(&g);
    timer.lap("distances");
    let w0 = match (&a.w0, a.init) {
        (Some(p), _) => load_range(Some(p), g.len())?,
        (None, InitArg::Full) => OutputRange::full(g.len()),
        (None, InitArg::Qloss) => init_range_by_qloss(&d, &prior, a.eps)?,
    };
    timer.lap("init");
    let mut cfg = OptimizationConfig::new(a.eps, a.objective.into());
    cfg.theta = match (a.unconstrained, a.theta) {
        (true, _) => Theta::Unconstrained,
        (false, Some(t)) => Theta::Fixed(t),
        (false, None) => Theta::InitialQloss,
    };
    cfg.attack = a.attack.into();
    cfg.metric = a.metric.into();
    cfg.topk = a.topk;
    cfg.max_sweeps = a.max_sweeps;
    cfg.reports = !a.no_reports;
    let r = greedy_optimize(&d, &prior, &cfg, &w0)?;
    timer.lap("search");
    if r.hit_sweep_cap {
        eprintln!("warning: stopped at the sweep cap ({}) before reaching a fixed point", a.max_sweeps);
    }
    let report = |rep: &Option<EvaluationReport>| rep.as_ref().map_or(Value::Null, |x| json!(x.to_csv_row()));
    let params = json!({
        "graph": path_str(Some(&a.graph)),
        "eps": a.eps,
        "prior": path_str(a.prior.prior.as_deref()),
        "objective": r.objective.as_str(),
        "theta": r.theta,
        "attack": cfg.attack.as_str(),
        "metric": cfg.metric.as_str(),
        "topk": a.topk,
        "w0": path_str(a.w0.as_deref()),
        "init": format!("{:?}", a.init).to_lowercase(),
        "max_sweeps": a.max_sweeps,
        "report_header": EvaluationReport::CSV_HEADER,
        "initial_report": report(&r.initial_report),
        "final_report": report(&r.final_report),
    });
    sink.emit(&r.final_range.to_text(), params)?;
    match sink.out {
        Some(out) => {
            write(&sibling(out, ".trace.csv"), &r.trace_csv())?;
            println!("{}", r.summary_line());
        }
        // stdout carries the range; keep it parseable
        None => eprintln!("{}", r.summary_line()),
    }
    Ok(())
}

fn one_eps(list: &[f64]) -> CliResult<f64> {
    match list {
        [] => Ok(DEFAULT_EPS),
        [e] => Ok(*e),
        _ => Err(CliError::Input("this scenario takes a single --eps".into())),
    }
}

fn eps_list(list: &[f64], default: &[f64]) -> Vec<f64> {
    if list.is_empty() {
        default.to_vec()
    } else {
        list.to_vec()
    }
}

fn scenario(a: &ScenarioArgs, sink: &Sink, timer: &mut Timer) -> CliResult {
    a.eps.iter().try_for_each(|&e| check_eps(e))?;
    let table: Table = match a.name {
        ScenarioName::LineSweep => scenarios::run_line_sweep(&a.counts, a.length, one_eps(&a.eps)?)?,
        ScenarioName::TpSweep => scenarios::run_tp_sweep(a.euclid, &a.shortest, one_eps(&a.eps)?)?,
        ScenarioName::CrossMap => {
            let cfg = CrossMapConfig { spacing: a.spacing, ..CrossMapConfig::default() };
            scenarios::run_cross_map_study(&eps_list(&a.eps, &DEFAULT_CROSS_EPS), cfg)?
        }
        ScenarioName::EpsilonSweep => {
            let (d, prior) = match &a.graph {
                Some(path) => {
                    let g = load_graph_file(path)?;
                    let prior = load_prior(a.prior.as_deref(), g.len())?;
                    (all_pairs(&g), prior)
                }
                None => {
                    let cfg = HotspotConfig { side: a.side, spacing: a.spacing, eps: DEFAULT_EPS, share: a.share };
                    let (_, d, prior) = cfg.build()?;
                    (d, prior)
                }
            };
            scenarios::run_epsilon_sweep(&d, &prior, &eps_list(&a.eps, &DEFAULT_SWEEP_EPS), a.optimize)?
        }
        ScenarioName::HotspotOpt => {
            let cfg = HotspotConfig { side: a.side, spacing: a.spacing, eps: one_eps(&a.eps)?, share: a.share };
            let outcome = scenarios::run_hotspot_optimization(cfg)?;
            eprintln!("{}", outcome.result.summary_line());
            outcome.table
        }
    };
    timer.lap("scenario");
    let mut params = Map::new();
    for (k, v) in &table.params {
        params.insert(k.clone(), json!(v));
    }
    if let Some(p) = &a.graph {
        params.insert("graph".into(), json!(p.display().to_string()));
    }
    sink.emit(&table.to_csv(), Value::Object(params))
}
