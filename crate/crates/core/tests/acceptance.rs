//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{brute_force_mlu, dense_instance, random_instance};
use critfail::failure::{
    classify, enumerate_failures, sweep_impacts, Baseline, Criticality, ImpactMethod,
    Prediction, SweepOptions,
};
use critfail::graphenc::{format_predictions_csv, parse_predictions_csv};
use critfail::lp::Backend;
use critfail::netmodel::{load_topology, LoadOptions, NetworkInstance, Topology, TopologyFormat};
use critfail::robustdesign::{
    robust_validate, te_certify_and_iterate, te_solve, te_solve_full, upgrade_optimize,
    upgrade_threshold, Certification, DesignError, Predictor, TeOptions, TePlan, UpgradeMode,
    UpgradeOptions,
};
use critfail::routing::{solve_mcf_min_mlu, Scheme};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data(name: &str) -> Topology {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name);
    load_topology(&path, TopologyFormat::GraphMl, LoadOptions::default()).unwrap()
}

fn within(t0: Instant, limit: Duration) -> (bool, String) {
    let e = t0.elapsed();
    (e <= limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn scenario_counts() -> Outcome {
    let t0 = Instant::now();
    let a = enumerate_failures(&data("Abilene.graphml"), 2).len();
    let g = enumerate_failures(&data("Geant2010.graphml"), 2).len();
    let (fast, time) = within(t0, Duration::from_secs(10));
    outcome(
        a == 94 && g == 1255 && fast,
        format!("Abilene {a}/94, Geant2010 {g}/1255, {time}"),
    )
}

fn mcf_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut worst_gap: f64 = 0.0;
    let mut min_impact = f64::INFINITY;
    let mut scenarios = 0;
    for i in 0..50u64 {
        let n = 4 + (i % 5) as usize;
        let inst = random_instance(n, 1000 + i);
        let (_, mlu) = solve_mcf_min_mlu(&inst, &[]).unwrap();
        worst_gap = worst_gap.max((mlu - brute_force_mlu(&inst, &[])).abs());
        let base = Baseline::compute(&inst, Scheme::Mcf).unwrap();
        let scen = enumerate_failures(&inst.topology, 2);
        let recs = sweep_impacts(&inst, &base, &scen, &SweepOptions::default()).unwrap();
        scenarios += recs.len();
        for r in recs {
            min_impact = min_impact.min(r.impact);
        }
    }
    let (fast, time) = within(t0, Duration::from_secs(120));
    outcome(
        worst_gap <= 1e-5 && min_impact >= 1.0 - 1e-9 && fast,
        format!(
            "50 instances: max |mcf - brute force| = {worst_gap:.2e}, min impact {min_impact:.9} over {scenarios} scenarios, {time}"
        ),
    )
}

fn simplified_fidelity() -> Outcome {
    let t0 = Instant::now();
    let (mut close, mut total) = (0usize, 0usize);
    for seed in 0..20u64 {
        let inst = random_instance(10, seed);
        let scen: Vec<_> = enumerate_failures(&inst.topology, 2)
            .into_iter()
            .filter(|s| s.links.len() == 2)
            .collect();
        let base = Baseline::compute(&inst, Scheme::Mcf).unwrap();
        let oracle = sweep_impacts(&inst, &base, &scen, &SweepOptions::default()).unwrap();
        let simple = sweep_impacts(
            &inst,
            &base,
            &scen,
            &SweepOptions {
                method: ImpactMethod::Simplified,
                ..Default::default()
            },
        )
        .unwrap();
        for (o, s) in oracle.iter().zip(&simple) {
            if ((s.impact - o.impact) / o.impact).abs() < 0.10 {
                close += 1;
            }
        }
        total += scen.len();
    }
    let frac = close as f64 / total as f64;
    let (fast, time) = within(t0, Duration::from_secs(600));
    outcome(
        frac >= 0.80 && fast,
        format!("{close}/{total} two-link scenarios within 10% ({:.1}%), {time}", 100.0 * frac),
    )
}

/// Random instance scaled so the failure-free MCF MLU is `mlu`.
fn scaled(inst: NetworkInstance, mlu: f64) -> NetworkInstance {
    let base = Baseline::compute(&inst, Scheme::Mcf).unwrap();
    let tm = inst.tm.scaled(mlu / base.mlu_base).unwrap();
    inst.with_tm(tm).unwrap()
}

fn pruned_upgrade() -> Outcome {
    let t0 = Instant::now();
    let (mut done, mut seed) = (0, 0u64);
    let (mut cost_gap, mut thr_gap): (f64, f64) = (0.0, 0.0);
    let (mut kept, mut total) = (0usize, 0usize);
    while done < 20 {
        seed += 1;
        let inst = random_instance(6 + (seed % 3) as usize, 2000 + seed);
        if inst.topology.num_links() > 20 {
            continue;
        }
        let inst = scaled(inst, 0.7);
        let scen = enumerate_failures(&inst.topology, 2);
        let base = Baseline::compute(&inst, Scheme::Mcf).unwrap();
        let recs = sweep_impacts(&inst, &base, &scen, &SweepOptions::default()).unwrap();
        let thr = upgrade_threshold(&recs).unwrap();
        thr_gap = thr_gap.max((thr - 1.0 / base.mlu_base).abs() * base.mlu_base);
        let oracle = Predictor::Oracle(Scheme::Mcf);
        let pruned = upgrade_optimize(&inst, &scen, &oracle, &UpgradeOptions::default()).unwrap();
        let full = upgrade_optimize(
            &inst,
            &scen,
            &oracle,
            &UpgradeOptions {
                mode: UpgradeMode::Full,
                ..Default::default()
            },
        )
        .unwrap();
        cost_gap = cost_gap.max((pruned.cost - full.cost).abs());
        kept += pruned.constrained.len();
        total += scen.len();
        done += 1;
    }
    let (fast, time) = within(t0, Duration::from_secs(600));
    outcome(
        cost_gap <= 1e-5 && thr_gap <= 1e-9 && fast,
        format!(
            "20 instances <= 20 links: max cost gap {cost_gap:.2e}, max relative threshold gap {thr_gap:.2e}, {kept}/{total} scenarios constrained, {time}"
        ),
    )
}

fn robust_validation() -> Outcome {
    let mut exact = true;
    let mut perfect_err: f64 = 0.0;
    let mut cases = 0;
    for seed in 0..10u64 {
        let inst = random_instance(6 + (seed % 3) as usize, 3000 + seed);
        let scen = enumerate_failures(&inst.topology, 2);
        for scheme in [Scheme::Mcf, Scheme::Ospf] {
            let base = Baseline::compute(&inst, scheme).unwrap();
            let recs = sweep_impacts(&inst, &base, &scen, &SweepOptions::default()).unwrap();
            let exhaustive = recs.iter().map(|r| r.mlu_failed).fold(f64::MIN, f64::max);
            let r = robust_validate(&inst, &base, &scen, &Predictor::Oracle(scheme), None, Backend::Sparse)
                .unwrap();
            exact &= r.worst_mlu == exhaustive;

            let labels = classify(&recs).unwrap();
            let preds: Vec<Prediction> = recs
                .iter()
                .zip(&labels)
                .map(|(r, l)| Prediction {
                    scenario_id: r.scenario_id,
                    impact_pred: r.impact,
                    critical_prob: if l.class == Criticality::Normal { 0.0 } else { 1.0 },
                })
                .collect();
            let k = labels.iter().filter(|l| l.class.is_critical()).count();
            let table = parse_predictions_csv(&format_predictions_csv(&preds)).unwrap();
            let r = robust_validate(&inst, &base, &scen, &Predictor::File(table), Some(k), Backend::Sparse)
                .unwrap();
            perfect_err = perfect_err.max((r.worst_mlu - exhaustive).abs() / exhaustive);
            cases += 1;
        }
    }
    outcome(
        exact && perfect_err == 0.0,
        format!(
            "{cases} instance/scheme pairs: oracle equals exhaustive = {exact}, perfect-file worst-MLU error {perfect_err:e}"
        ),
    )
}

/// Post-failure MLU recomputed from the plan's paths and protection flows.
fn reevaluate(topo: &Topology, plan: &TePlan, failed: &[usize]) -> f64 {
    let mut load = vec![0.0; topo.num_arcs()];
    for d in &plan.base.demands {
        for p in &d.paths {
            for w in p.nodes.windows(2) {
                load[topo.arc_between(w[0], w[1]).unwrap()] += p.ratio * d.volume;
            }
        }
    }
    for &l in failed {
        for &(a, f) in plan.protection[2 * l].iter().chain(&plan.protection[2 * l + 1]) {
            load[a] += f;
        }
    }
    (0..topo.num_arcs())
        .map(|a| load[a] / topo.capacity(a / 2))
        .fold(0.0, f64::max)
}

/// Protection flow of every arc carries its link's capacity from tail to
/// head and never uses the link itself.
fn protection_ok(topo: &Topology, plan: &TePlan) -> bool {
    (0..topo.num_arcs()).all(|p| {
        let arc = topo.arc(p);
        let mut net = vec![0.0; topo.num_nodes()];
        for &(a, f) in &plan.protection[p] {
            if a / 2 == p / 2 {
                return false;
            }
            let x = topo.arc(a);
            net[x.tail] += f;
            net[x.head] -= f;
        }
        let cap = topo.capacity(arc.link);
        net.iter().enumerate().all(|(v, &x)| {
            let want = if v == arc.tail {
                cap
            } else if v == arc.head {
                -cap
            } else {
                0.0
            };
            (x - want).abs() <= 1e-6 * cap.max(1.0)
        })
    })
}

fn critical_ids(inst: &NetworkInstance, scen: &[critfail::failure::FailureScenario]) -> Vec<usize> {
    let base = Baseline::compute(inst, Scheme::Mcf).unwrap();
    let recs = sweep_impacts(inst, &base, scen, &SweepOptions::default()).unwrap();
    let labels = classify(&recs).unwrap();
    critfail::failure::select_critical(&recs, &labels).scenario_ids
}

fn fault_tolerant_te() -> Outcome {
    let t0 = Instant::now();
    let opts = TeOptions::default();
    let (mut certified, mut unprotectable, mut violations) = (0, 0, 0);
    let mut protection_bad = 0;
    let (mut rows, mut full_rows) = (0usize, 0usize);
    let mut rows_ok = true;
    let mut worst_gap: f64 = 0.0;
    let mut compared = 0;
    // (nodes, dropped links, solve the unpruned program too)
    let mut cases: Vec<(usize, usize, bool, u64)> = Vec::new();
    for seed in 0..8u64 {
        cases.push((6, (seed % 2) as usize, true, 4000 + seed));
    }
    for seed in 0..3u64 {
        cases.push((7, 1 + seed as usize, false, 5000 + seed));
    }
    for (n, drop, full, seed) in cases {
        let inst = dense_instance(n, drop, 0.3, seed);
        assert!(inst.topology.num_links() <= 30);
        let scen = enumerate_failures(&inst.topology, 2);
        let xc = critical_ids(&inst, &scen);
        let plan = match te_solve(&inst, &scen, &xc, &opts) {
            Ok(p) => p,
            Err(DesignError::Unprotectable { .. }) => {
                unprotectable += 1;
                continue;
            }
            Err(e) => panic!("te_solve: {e}"),
        };
        let plan = te_certify_and_iterate(&inst, plan, &scen, &opts).unwrap();
        rows += plan.congestion_rows;
        full_rows += plan.full_congestion_rows;
        rows_ok &= plan.congestion_rows <= plan.full_congestion_rows;
        if !protection_ok(&inst.topology, &plan) {
            protection_bad += 1;
        }
        if plan.certification != Certification::CertifiedAll {
            continue;
        }
        certified += 1;
        let worst = scen
            .iter()
            .map(|s| reevaluate(&inst.topology, &plan, &s.links))
            .fold(0.0, f64::max);
        if worst > 1.0 + 1e-6 {
            violations += 1;
        }
        if full {
            let u = te_solve_full(&inst, &scen, &opts).unwrap().objective;
            worst_gap = worst_gap.max((worst - u) / u);
            compared += 1;
        }
    }
    let (fast, time) = within(t0, Duration::from_secs(900));
    outcome(
        certified > 0
            && violations == 0
            && protection_bad == 0
            && rows_ok
            && compared > 0
            && worst_gap <= 0.05
            && fast,
        format!(
            "{certified} certified ({unprotectable} unprotectable), {violations} violations on re-evaluation, congestion rows {rows}/{full_rows} (ratio {:.3}), worst-case MLU vs unpruned optimum +{:.2}% over {compared} instances, {time}",
            rows as f64 / full_rows.max(1) as f64,
            100.0 * worst_gap
        ),
    )
}

fn scarcity() -> Outcome {
    let mut fracs = Vec::new();
    for seed in 0..3u64 {
        let inst = random_instance(30, seed);
        for (scheme, f) in [(Scheme::Ospf, 2), (Scheme::Mcf, 1)] {
            let base = Baseline::compute(&inst, scheme).unwrap();
            let scen = enumerate_failures(&inst.topology, f);
            let recs = sweep_impacts(&inst, &base, &scen, &SweepOptions::default()).unwrap();
            let labels = classify(&recs).unwrap();
            let high = labels.iter().filter(|l| l.ratio >= 0.8).count();
            fracs.push((scheme, f, high as f64 / labels.len() as f64));
        }
    }
    let max = fracs.iter().map(|f| f.2).fold(0.0, f64::max);
    let list: Vec<String> = fracs
        .iter()
        .map(|(s, f, x)| format!("{s}/f={f}: {:.2}%", 100.0 * x))
        .collect();
    outcome(
        max < 0.20,
        format!("30-node instances, ratio >= 0.8 fraction {}", list.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("scenario-counts", scenario_counts),
        ("mcf-oracle", mcf_oracle),
        ("simplified-fidelity", simplified_fidelity),
        ("pruned-upgrade", pruned_upgrade),
        ("robust-validation", robust_validation),
        ("fault-tolerant-te", fault_tolerant_te),
        ("criticality-scarcity", scarcity),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!("{} [{name}] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
