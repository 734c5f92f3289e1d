use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use critfail::failure::{
    classify, classify_impacts, enumerate_failures, format_impact_csv, parse_impact_csv,
    select_critical, select_critical_predicted, sweep_impacts, Baseline, FailureScenario,
    ImpactMethod, ImpactRecord, Prediction, SweepOptions,
};
use critfail::graphenc::{encode, format_label_csv, parse_predictions_csv};
use critfail::netmodel::io::{load_traffic_matrix, save_topology, save_traffic_matrix};
use critfail::netmodel::{
    assign_random_capacities, generate_gravity_tm, generate_random_topology, load_topology,
    LoadOptions, NetworkInstance, Topology, TopologyFormat, WaxmanParams,
};
use critfail::robustdesign::{
    predict, robust_validate, te_certify_and_iterate, te_solve, upgrade_optimize,
    Certification, CertifyTarget, Predictor, PredictorSpec, TeOptions, UpgradeMode,
    UpgradeOptions,
};
use critfail::routing::{compute_loads, route, Scheme};
use serde::Serialize;
use serde_json::json;

use crate::exit::{CheckFailed, UsageError};
use crate::{report, Cli, Command, InstanceArgs, Method};

pub fn dispatch(cli: &Cli) -> Result<()> {
    let out = Output::new(&cli.out_dir)?;
    match &cli.command {
        Command::Gen(a) => gen(&out, a),
        Command::Route(a) => route_cmd(&out, a),
        Command::Failures(a) => failures(&out, a),
        Command::Impact(a) => impact(cli, &out, a),
        Command::Critical(a) => critical(&out, a),
        Command::Encode(a) => encode_cmd(cli, &out, a),
        Command::Validate(a) => validate(cli, &out, a),
        Command::Upgrade(a) => upgrade(cli, &out, a),
        Command::Te(a) => te(cli, &out, a),
        Command::Report(a) => report::run(&out, a),
    }
}

pub struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Pretty JSON with a `kind` tag so `report` can tell summaries apart.
    pub fn write_json<T: Serialize>(&self, name: &str, kind: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        v["kind"] = json!(kind);
        self.write(name, &(serde_json::to_string_pretty(&v)? + "\n"))
    }

    pub fn write_csv<R>(&self, name: &str, header: &[&str], rows: R) -> Result<PathBuf>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        self.write(name, &String::from_utf8(bytes)?)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_topo(path: &Path, format: Option<TopologyFormat>) -> Result<Topology> {
    let format = format.unwrap_or_else(|| TopologyFormat::from_path(path));
    load_topology(path, format, LoadOptions::default())
        .with_context(|| format!("loading topology {}", path.display()))
}

fn load_instance(a: &InstanceArgs) -> Result<NetworkInstance> {
    let topo = load_topo(&a.topology, a.format)?;
    let tm = match (&a.tm, a.tm_total, a.seed) {
        (Some(p), _, _) => load_traffic_matrix(p, topo.num_nodes())
            .with_context(|| format!("loading traffic matrix {}", p.display()))?,
        (None, Some(total), Some(seed)) => generate_gravity_tm(&topo, total, a.masses, seed)?,
        _ => {
            return Err(UsageError(
                "a traffic matrix is required: --tm <file> or --tm-total <volume> --seed <n>".into(),
            )
            .into())
        }
    };
    let inst = NetworkInstance::new(topo, tm)?;
    Ok(match a.seed {
        Some(s) => inst.with_seed(s),
        None => inst,
    })
}

fn predictor(spec: &PredictorSpec, scheme: Scheme) -> Result<Predictor> {
    Ok(match spec {
        PredictorSpec::Oracle(s) => Predictor::Oracle(s.unwrap_or(scheme)),
        PredictorSpec::Simplified => Predictor::Simplified,
        PredictorSpec::File(p) => {
            let text = read(Path::new(p))?;
            Predictor::File(parse_predictions_csv(&text).with_context(|| format!("parsing {p}"))?)
        }
    })
}

fn join(links: &[usize]) -> String {
    links.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";")
}

fn gen(out: &Output, a: &crate::GenArgs) -> Result<()> {
    let params = WaxmanParams {
        mean_degree: a.mean_degree,
        beta: a.beta,
        capacity: a.capacity,
        ..Default::default()
    };
    let mut topo = generate_random_topology(a.nodes, &params, a.seed)?;
    if a.random_capacities {
        topo = assign_random_capacities(&topo, a.capacity, a.seed.wrapping_add(1))?;
    }
    let tm = generate_gravity_tm(&topo, a.tm_total, a.masses, a.seed.wrapping_add(2))?;
    let tp = out.dir.join("topology.txt");
    let mp = out.dir.join("tm.txt");
    save_topology(&topo, &tp)?;
    save_traffic_matrix(&tm, &mp)?;
    println!(
        "generated {} nodes, {} links, {} demands -> {}, {}",
        topo.num_nodes(),
        topo.num_links(),
        tm.demands().len(),
        tp.display(),
        mp.display()
    );
    Ok(())
}

fn route_cmd(out: &Output, a: &crate::RouteArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let (decision, mlu) = route(&inst, a.routing, &[])?;
    out.write("routing.json", &(decision.to_json() + "\n"))?;
    let loads = compute_loads(&inst.topology, &decision);
    out.write_csv(
        "link_loads.csv",
        &["link", "u", "v", "capacity", "utilization", "volume"],
        inst.topology.links().iter().enumerate().map(|(i, l)| {
            vec![
                i.to_string(),
                l.u.to_string(),
                l.v.to_string(),
                l.capacity.to_string(),
                loads.link_utilization[i].to_string(),
                loads.link_volume[i].to_string(),
            ]
        }),
    )?;
    println!("{} routing: mlu {mlu}, {} paths", a.routing, decision.num_paths());
    Ok(())
}

fn failures(out: &Output, a: &crate::FailuresArgs) -> Result<()> {
    let topo = load_topo(&a.topology, a.format)?;
    let scen = enumerate_failures(&topo, a.f);
    out.write_csv(
        "scenarios.csv",
        &["scenario_id", "links"],
        scen.iter().map(|s| vec![s.id.to_string(), join(&s.links)]),
    )?;
    println!("{} scenarios", scen.len());
    Ok(())
}

fn sweep(
    cli: &Cli,
    inst: &NetworkInstance,
    baseline: &Baseline,
    scen: &[FailureScenario],
    method: ImpactMethod,
) -> Result<Vec<ImpactRecord>> {
    let opts = SweepOptions {
        method,
        backend: cli.backend,
        parallel: true,
    };
    Ok(sweep_impacts(inst, baseline, scen, &opts)?)
}

fn impact(cli: &Cli, out: &Output, a: &crate::ImpactArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let baseline = Baseline::compute(&inst, a.routing)?;
    let scen = enumerate_failures(&inst.topology, a.f);
    let method = match a.method {
        Method::Oracle => ImpactMethod::Oracle,
        Method::Simplified => ImpactMethod::Simplified,
    };
    let records = sweep(cli, &inst, &baseline, &scen, method)?;
    let labels = classify(&records)?;
    let path = out.write(&a.output, &format_impact_csv(&scen, &records, &labels)?)?;
    let max = records.iter().map(|r| r.impact).fold(0.0, f64::max);
    let critical = labels.iter().filter(|l| l.class.is_critical()).count();
    println!(
        "{} scenarios, mlu_base {}, max impact {max}, {critical} critical -> {}",
        records.len(),
        baseline.mlu_base,
        path.display()
    );
    Ok(())
}

fn critical(out: &Output, a: &crate::CriticalArgs) -> Result<()> {
    if let Some(p) = &a.predictions {
        let table = parse_predictions_csv(&read(p)?)
            .with_context(|| format!("parsing {}", p.display()))?;
        let preds: Vec<Prediction> = table.iter().copied().collect();
        let set = select_critical_predicted(&preds);
        out.write_csv(
            &a.output,
            &["rank", "scenario_id", "impact_pred", "critical_prob"],
            set.scenario_ids.iter().enumerate().map(|(rank, &id)| {
                let p = table.get(id).expect("selected from the table");
                vec![
                    (rank + 1).to_string(),
                    id.to_string(),
                    p.impact_pred.to_string(),
                    p.critical_prob.to_string(),
                ]
            }),
        )?;
        println!("{} critical of {} scenarios", set.len(), set.population);
        return Ok(());
    }
    let p = a.impact.as_ref().expect("clap requires --impact or --predictions");
    let rows = parse_impact_csv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
    let records: Vec<ImpactRecord> = rows.iter().map(|r| r.record.clone()).collect();
    let labels = classify(&records)?;
    let set = select_critical(&records, &labels);
    let by_id = |id: usize| rows.iter().position(|r| r.record.scenario_id == id).expect("selected from rows");
    out.write_csv(
        &a.output,
        &["rank", "scenario_id", "links", "impact", "ratio", "label"],
        set.scenario_ids.iter().enumerate().map(|(rank, &id)| {
            let i = by_id(id);
            vec![
                (rank + 1).to_string(),
                id.to_string(),
                join(&rows[i].scenario.links),
                records[i].impact.to_string(),
                labels[i].ratio.to_string(),
                labels[i].class.to_string(),
            ]
        }),
    )?;
    let names: Vec<String> = labels.iter().map(|l| l.class.to_string()).collect();
    println!("labels: {}", names.join(","));
    println!("{} critical of {} scenarios", set.len(), set.population);
    Ok(())
}

fn encode_cmd(cli: &Cli, out: &Output, a: &crate::EncodeArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let baseline = Baseline::compute(&inst, a.routing)?;
    let scen = enumerate_failures(&inst.topology, a.f);
    let graph = encode(&inst, &baseline.decision, &scen)?;
    out.write("graph.json", &(graph.to_json() + "\n"))?;
    let records = match &a.impact {
        Some(p) => {
            let rows = parse_impact_csv(&read(p)?)
                .with_context(|| format!("parsing {}", p.display()))?;
            let ids: Vec<usize> = rows.iter().map(|r| r.scenario.id).collect();
            let want: Vec<usize> = scen.iter().map(|s| s.id).collect();
            if ids != want {
                return Err(CheckFailed(format!(
                    "{} does not cover the {} enumerated scenarios in order",
                    p.display(),
                    scen.len()
                ))
                .into());
            }
            rows.into_iter().map(|r| r.record).collect()
        }
        None => sweep(cli, &inst, &baseline, &scen, ImpactMethod::Oracle)?,
    };
    let labels = classify(&records)?;
    out.write("labels.csv", &format_label_csv(&records, &labels))?;
    println!(
        "graph: {} nodes, {} edges, {} scenarios",
        graph.nodes.len(),
        graph.edges.len(),
        scen.len()
    );
    Ok(())
}

fn validate(cli: &Cli, out: &Output, a: &crate::ValidateArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let baseline = Baseline::compute(&inst, a.routing)?;
    let scen = enumerate_failures(&inst.topology, a.f);
    let pred = predictor(&a.predictor, a.routing)?;
    let report = robust_validate(&inst, &baseline, &scen, &pred, a.k, cli.backend)?;
    out.write_json("validation.json", "validate", &report)?;
    println!(
        "worst scenario {} (links {}): mlu {}, impact {}; {} of {} scenarios verified",
        report.worst_scenario_id,
        join(&report.worst_links),
        report.worst_mlu,
        report.worst_impact,
        report.verified.len(),
        report.total_scenarios
    );
    Ok(())
}

fn upgrade(cli: &Cli, out: &Output, a: &crate::UpgradeArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let scen = enumerate_failures(&inst.topology, a.f);
    let pred = predictor(&a.predictor, Scheme::Mcf)?;
    let options = UpgradeOptions {
        mode: a.mode,
        backend: cli.backend,
        certify: !a.no_certify,
        max_iterations: a.max_iterations,
        rounding: a.rounding,
    };
    let plan = upgrade_optimize(&inst, &scen, &pred, &options)?;
    out.write_csv(
        "upgrade_plan.csv",
        &["link", "a_e"],
        plan.added
            .iter()
            .enumerate()
            .map(|(l, a)| vec![l.to_string(), a.to_string()]),
    )?;
    out.write_json("upgrade.json", "upgrade", &plan)?;
    println!(
        "cost {}, worst mlu {}, {} of {} scenarios constrained, {} solves",
        plan.cost,
        plan.worst_mlu,
        plan.constrained.len(),
        plan.total_scenarios,
        plan.solves
    );
    if options.certify && a.mode == UpgradeMode::Pruned && !plan.certified {
        return Err(CheckFailed("upgrade plan still congests some scenario".into()).into());
    }
    Ok(())
}

fn parse_target(s: &str) -> Result<CertifyTarget> {
    if s == "critical" {
        return Ok(CertifyTarget::Critical);
    }
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(CertifyTarget::Fixed(t)),
        _ => Err(UsageError(format!("--target must be a positive number or `critical`, got `{s}`")).into()),
    }
}

/// Critical set of the TE program: scenarios labelled Worst or Significant
/// by the predictor's impacts, or flagged by a predictions file.
fn te_critical(
    cli: &Cli,
    inst: &NetworkInstance,
    scen: &[FailureScenario],
    pred: &Predictor,
    routing: Scheme,
) -> Result<Vec<usize>> {
    if let Predictor::File(table) = pred {
        let preds = table.select(scen.iter().map(|s| s.id))?;
        return Ok(select_critical_predicted(&preds).scenario_ids);
    }
    let baseline = Baseline::compute(inst, routing)?;
    let est = predict(inst, &baseline, pred, scen, cli.backend)?;
    let impacts: Vec<f64> = est.iter().map(|e| e.impact).collect();
    let labels = classify_impacts(&impacts)?;
    Ok(est
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.class.is_critical())
        .map(|(e, _)| e.scenario_id)
        .collect())
}

fn te(cli: &Cli, out: &Output, a: &crate::TeArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let scen = enumerate_failures(&inst.topology, a.f);
    let pred = predictor(&a.predictor, a.routing)?;
    let options = TeOptions {
        backend: cli.backend,
        max_iterations: a.max_iterations,
        target: parse_target(&a.target)?,
    };
    let critical = te_critical(cli, &inst, &scen, &pred, a.routing)?;
    let plan = te_solve(&inst, &scen, &critical, &options)?;
    let plan = te_certify_and_iterate(&inst, plan, &scen, &options)?;
    out.write_json("te.json", "te", &plan)?;
    out.write("te_routing.json", &(plan.base.to_json() + "\n"))?;
    let topo = &inst.topology;
    out.write_csv(
        "te_protection.csv",
        &["protected_tail", "protected_head", "tail", "head", "flow"],
        plan.protection.iter().enumerate().flat_map(|(p, flows)| {
            let pa = topo.arc(p);
            flows.iter().map(move |&(e, f)| {
                let ea = topo.arc(e);
                vec![
                    pa.tail.to_string(),
                    pa.head.to_string(),
                    ea.tail.to_string(),
                    ea.head.to_string(),
                    f.to_string(),
                ]
            })
        }),
    )?;
    println!(
        "objective {}, worst mlu {}, {} critical, {} re-solves, congestion rows {} of {}",
        plan.objective,
        plan.worst_mlu.unwrap_or(f64::NAN),
        plan.critical.len(),
        plan.iterations,
        plan.congestion_rows,
        plan.full_congestion_rows
    );
    if let Certification::CertifiedSubset { violations } = &plan.certification {
        return Err(CheckFailed(format!(
            "{} scenarios still exceed the target after {} re-solves",
            violations.len(),
            plan.iterations
        ))
        .into());
    }
    Ok(())
}
