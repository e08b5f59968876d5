//! Release acceptance gate.
//!
//! One test per criterion, each printing a single
//! `acceptance [N/8] <name>: PASS/FAIL (numbers)` line before asserting.
//! Criteria 1-5 measure a shared 20-topology x 3-seed x 6-strategy batch
//! (100 nodes on a 100x100 m field, base at the origin, default energy
//! parameters); every run in that batch is audited by the trace replay
//! checker and re-run to confirm byte-identical exports.

use std::sync::LazyLock;

use rayon::prelude::*;

use wsnsim_core::batch::{run_seed, topology_seed};
use wsnsim_core::config::Settings;
use wsnsim_core::engine::run_simulation;
use wsnsim_core::export::{curve_csv, nodes_csv, summary_csv};
use wsnsim_core::metrics::{death_distance_correlation, lifetime_summary, LifetimeSummary};
use wsnsim_core::replay::ReplayChecker;
use wsnsim_core::rng::SplitMix64;
use wsnsim_core::strategies::{
    best_parent, ideal_cluster_assign, ideal_diffusion_plan, Destination, StrategyKind,
};
use wsnsim_core::topology::{Position, Topology};
use wsnsim_core::trace::NullSink;

const TOPOLOGIES: usize = 20;
const SEEDS_PER_TOPOLOGY: usize = 3;
const BASE_SEED: u64 = 1;

struct Run {
    strategy: StrategyKind,
    label: String,
    summary: LifetimeSummary,
    correlation: Option<f64>,
    exceptions: u64,
    violations: Vec<String>,
}

static BATCH: LazyLock<Vec<Run>> = LazyLock::new(|| {
    let settings = Settings::default();
    let topologies: Vec<Topology> = (0..TOPOLOGIES)
        .map(|ti| {
            Topology::generate(
                settings.nodes,
                settings.width,
                settings.height,
                settings.base(),
                topology_seed(BASE_SEED, ti),
            )
            .expect("valid batch topology")
        })
        .collect();

    let mut keys = Vec::new();
    for ti in 0..TOPOLOGIES {
        for si in 0..SEEDS_PER_TOPOLOGY {
            for &strategy in &StrategyKind::ALL {
                keys.push((ti, si, strategy));
            }
        }
    }

    keys.par_iter()
        .map(|&(ti, si, strategy)| {
            let topo = &topologies[ti];
            let cfg = settings.sim_config(strategy, run_seed(BASE_SEED, ti, si, strategy));
            let mut checker = ReplayChecker::new(topo, &cfg);
            let result = run_simulation(topo, &cfg, &mut checker);
            let exceptions = checker.exceptions_seen;
            let mut violations = checker.finish(&result);

            // Determinism: an identical second run must export the same bytes.
            let again = run_simulation(topo, &cfg, &mut NullSink);
            if nodes_csv(topo, &result) != nodes_csv(topo, &again)
                || curve_csv(&result) != curve_csv(&again)
                || summary_csv(&result) != summary_csv(&again)
            {
                violations.push("exports differ between two identical runs".into());
            }

            Run {
                strategy,
                label: format!("t{ti:03} s{si:02} {strategy}"),
                summary: lifetime_summary(&result),
                correlation: death_distance_correlation(&result, topo),
                exceptions,
                violations,
            }
        })
        .collect()
});

fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "no values to average");
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_of(strategy: StrategyKind, pick: impl Fn(&Run) -> Option<f64>) -> f64 {
    let values: Vec<f64> = BATCH
        .iter()
        .filter(|r| r.strategy == strategy)
        .filter_map(pick)
        .collect();
    mean(&values)
}

fn mean_lifetime(strategy: StrategyKind) -> f64 {
    mean_of(strategy, |r| r.summary.system_lifetime.map(|v| v as f64))
}

/// Print the criterion's line and fail the test if any clause missed.
fn verdict(index: usize, name: &str, detail: String, failures: Vec<String>) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance [{index}/8] {name}: {status} ({detail})");
    assert!(
        failures.is_empty(),
        "acceptance [{index}/8] {name}: FAIL ({detail}) - unmet: {}",
        failures.join("; ")
    );
}

#[test]
fn criterion_1_strategy_ordering_by_mean_system_lifetime() {
    let direct = mean_lifetime(StrategyKind::Direct);
    let bd = mean_lifetime(StrategyKind::BasicDiffusion);
    let e3d = mean_lifetime(StrategyKind::E3d);
    let ideal_d = mean_lifetime(StrategyKind::IdealDiffusion);
    let rc = mean_lifetime(StrategyKind::RandomClustering);
    let ideal_c = mean_lifetime(StrategyKind::IdealClustering);

    let mut failures = Vec::new();
    if ideal_d < e3d {
        failures.push(format!("ideal-diffusion {ideal_d:.0} < e3d {e3d:.0}"));
    }
    if e3d < 1.10 * bd {
        failures.push(format!("e3d {e3d:.0} not >= 1.10 x diffusion {bd:.0}"));
    }
    if bd < 1.10 * direct {
        failures.push(format!("diffusion {bd:.0} not >= 1.10 x direct {direct:.0}"));
    }
    if (rc - direct).abs() > 0.30 * direct {
        failures.push(format!(
            "random-cluster {rc:.0} outside direct {direct:.0} +/-30%"
        ));
    }
    if ideal_d < 0.95 * ideal_c {
        failures.push(format!(
            "ideal-diffusion {ideal_d:.0} < 0.95 x ideal-cluster {ideal_c:.0}"
        ));
    }
    verdict(
        1,
        "strategy ordering by mean system lifetime",
        format!(
            "direct={direct:.0} diffusion={bd:.0} e3d={e3d:.0} ideal-diffusion={ideal_d:.0} \
             random-cluster={rc:.0} ideal-cluster={ideal_c:.0}"
        ),
        failures,
    );
}

#[test]
fn criterion_2_utility_fraction_bounds() {
    let pick = |r: &Run| r.summary.utility_fraction;
    let direct = mean_of(StrategyKind::Direct, pick);
    let e3d = mean_of(StrategyKind::E3d, pick);
    let ideal_d = mean_of(StrategyKind::IdealDiffusion, pick);
    let ideal_c = mean_of(StrategyKind::IdealClustering, pick);

    let mut failures = Vec::new();
    if e3d < 0.60 {
        failures.push(format!("e3d {e3d:.3} < 0.60"));
    }
    if ideal_d < 0.80 {
        failures.push(format!("ideal-diffusion {ideal_d:.3} < 0.80"));
    }
    if ideal_c < 0.80 {
        failures.push(format!("ideal-cluster {ideal_c:.3} < 0.80"));
    }
    if direct > 0.25 {
        failures.push(format!("direct {direct:.3} > 0.25"));
    }
    verdict(
        2,
        "utility fraction bounds",
        format!(
            "direct={direct:.3} e3d={e3d:.3} ideal-diffusion={ideal_d:.3} ideal-cluster={ideal_c:.3}"
        ),
        failures,
    );
}

#[test]
fn criterion_3_die_off_geography() {
    let pick = |r: &Run| r.correlation;
    let direct = mean_of(StrategyKind::Direct, pick);
    let bd = mean_of(StrategyKind::BasicDiffusion, pick);
    let e3d = mean_of(StrategyKind::E3d, pick);

    let mut failures = Vec::new();
    if direct > -0.6 {
        failures.push(format!("direct correlation {direct:.3} not <= -0.6"));
    }
    if bd < 0.6 {
        failures.push(format!("diffusion correlation {bd:.3} not >= +0.6"));
    }
    if e3d.abs() > 0.4 {
        failures.push(format!("e3d |correlation| {:.3} not <= 0.4", e3d.abs()));
    }
    verdict(
        3,
        "die-off geography (death-distance correlation)",
        format!("direct={direct:.3} diffusion={bd:.3} e3d={e3d:.3}"),
        failures,
    );
}

#[test]
fn criterion_4_sharp_drop_death_spread() {
    let pick = |r: &Run| r.summary.death_spread;
    let direct = mean_of(StrategyKind::Direct, pick);
    let e3d = mean_of(StrategyKind::E3d, pick);
    let ideal_d = mean_of(StrategyKind::IdealDiffusion, pick);
    let ideal_c = mean_of(StrategyKind::IdealClustering, pick);

    let mut failures = Vec::new();
    for (name, value) in [
        ("e3d", e3d),
        ("ideal-diffusion", ideal_d),
        ("ideal-cluster", ideal_c),
    ] {
        if value > 0.40 {
            failures.push(format!("{name} spread {value:.3} > 0.40"));
        }
    }
    if direct < 0.60 {
        failures.push(format!("direct spread {direct:.3} < 0.60"));
    }
    verdict(
        4,
        "sharp drop (death spread)",
        format!(
            "direct={direct:.3} e3d={e3d:.3} ideal-diffusion={ideal_d:.3} ideal-cluster={ideal_c:.3}"
        ),
        failures,
    );
}

#[test]
fn criterion_5_random_clustering_seed_variance() {
    let settings = Settings::default();
    let topo = Topology::generate(
        settings.nodes,
        settings.width,
        settings.height,
        settings.base(),
        topology_seed(BASE_SEED, 0),
    )
    .expect("valid topology");

    let lifetimes: Vec<u64> = (0..50usize)
        .into_par_iter()
        .map(|si| {
            let seed = run_seed(BASE_SEED, 0, si, StrategyKind::RandomClustering);
            let cfg = settings.sim_config(StrategyKind::RandomClustering, seed);
            let result = run_simulation(&topo, &cfg, &mut NullSink);
            lifetime_summary(&result)
                .system_lifetime
                .expect("run completes within the iteration cap")
        })
        .collect();
    let max = *lifetimes.iter().max().expect("50 runs");
    let min = *lifetimes.iter().min().expect("50 runs");
    let ratio = max as f64 / min as f64;

    let mut failures = Vec::new();
    if ratio < 2.0 {
        failures.push(format!("max/min lifetime ratio {ratio:.2} < 2"));
    }
    verdict(
        5,
        "random clustering seed variance",
        format!("min={min} max={max} ratio={ratio:.2} over 50 seeds"),
        failures,
    );
}

/// Exhaustive re-derivation of the ideal-diffusion parent rule: score every
/// legal candidate with the documented cost and keep the first strict win.
fn oracle_parent(topo: &Topology, alive: &[bool], pf: &[f64], s: usize) -> Destination {
    let d_base = topo.dist_to_base(s);
    let mut best_cost = d_base * d_base;
    let mut best = Destination::Base;
    for c in 0..topo.node_count() {
        if c == s || !alive[c] || pf[c] <= 0.0 {
            continue;
        }
        let c_base = topo.dist_to_base(c);
        if c_base >= d_base {
            continue;
        }
        let d = topo.distance(s, c).expect("node exists");
        let cost = d * d / pf[c] + c_base * c_base;
        if cost < best_cost {
            best_cost = cost;
            best = Destination::Node(c);
        }
    }
    best
}

/// Exhaustive re-derivation of the clustroid rule: sum of squared member
/// distances over the candidate's power fraction, lowest id on ties.
fn oracle_clustroid(topo: &Topology, cluster: &[usize], pf: &[f64]) -> usize {
    let mut best = None;
    for &candidate in cluster {
        let cost = if pf[candidate] <= 0.0 {
            f64::INFINITY
        } else {
            cluster
                .iter()
                .filter(|&&m| m != candidate)
                .map(|&m| {
                    let d = topo.distance(m, candidate).expect("node exists");
                    d * d
                })
                .sum::<f64>()
                / pf[candidate]
        };
        match best {
            None => best = Some((cost, candidate)),
            Some((best_cost, _)) if cost < best_cost => best = Some((cost, candidate)),
            _ => {}
        }
    }
    best.expect("cluster is never empty").1
}

#[test]
fn criterion_6_planner_oracle_equivalence() {
    let mut rng = SplitMix64::new(0xACCE55);
    let mut parent_checks = 0u64;
    let mut clustroid_checks = 0u64;
    for case in 0..200 {
        let n = 2 + (rng.next_index(5));
        let positions: Vec<Position> = (0..n)
            .map(|_| Position {
                x: rng.next_f64() * 50.0,
                y: rng.next_f64() * 50.0,
            })
            .collect();
        let topo = Topology::from_parts(positions, Position { x: 0.0, y: 0.0 }, 50.0, 50.0, 0)
            .expect("valid case topology");
        let mut alive: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.7).collect();
        if !alive.iter().any(|&a| a) {
            alive[rng.next_index(n)] = true;
        }
        let pf: Vec<f64> = (0..n).map(|_| 0.05 + 0.95 * rng.next_f64()).collect();

        // Routing plan against the oracle, both per node and via the tree.
        let plan = ideal_diffusion_plan(&topo, &alive, &pf);
        for s in 0..n {
            if !alive[s] {
                assert_eq!(plan.parent(s), None, "case {case}: dead node {s} has a parent");
                continue;
            }
            let expected = oracle_parent(&topo, &alive, &pf, s);
            assert_eq!(
                best_parent(&topo, &alive, &pf, s),
                expected,
                "case {case}: parent of {s} diverges from the oracle"
            );
            assert_eq!(plan.parent(s), Some(expected), "case {case}: plan vs oracle");
            parent_checks += 1;
        }

        // Clustroid election against the oracle for every cluster.
        let alive_ids: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        let k = 1 + rng.next_index(3);
        let assignment = ideal_cluster_assign(&topo, &alive_ids, &pf, k, &mut rng);
        for &head in assignment.heads() {
            let mut cluster = assignment.members_of(head);
            cluster.push(head);
            cluster.sort_unstable();
            assert_eq!(
                head,
                oracle_clustroid(&topo, &cluster, &pf),
                "case {case}: head of cluster {cluster:?} diverges from the oracle"
            );
            clustroid_checks += 1;
        }
    }
    verdict(
        6,
        "planner oracle equivalence",
        format!("{parent_checks} parent choices and {clustroid_checks} clustroid elections matched over 200 cases"),
        Vec::new(),
    );
}

#[test]
fn criterion_7_invariant_suite() {
    let dirty: Vec<String> = BATCH
        .iter()
        .filter(|r| !r.violations.is_empty())
        .map(|r| format!("{}: {}", r.label, r.violations.join(" | ")))
        .collect();
    let mut failures = Vec::new();
    if !dirty.is_empty() {
        failures.push(format!("{} runs with violations: {}", dirty.len(), dirty.join(" ;; ")));
    }
    verdict(
        7,
        "invariant suite (replay audit + export determinism)",
        format!("{} runs audited, {} clean", BATCH.len(), BATCH.len() - dirty.len()),
        failures,
    );
}

#[test]
fn criterion_8_exception_soundness() {
    let e3d_runs: Vec<&Run> = BATCH
        .iter()
        .filter(|r| r.strategy == StrategyKind::E3d)
        .collect();
    let exceptions: u64 = e3d_runs.iter().map(|r| r.exceptions).sum();
    let dirty = e3d_runs
        .iter()
        .filter(|r| !r.violations.is_empty())
        .count();

    let mut failures = Vec::new();
    if exceptions == 0 {
        failures.push("no exceptions raised anywhere in the batch".into());
    }
    if dirty > 0 {
        failures.push(format!("{dirty} e3d runs failed their replay audit"));
    }
    verdict(
        8,
        "exception soundness under replay",
        format!(
            "{exceptions} exceptions across {} e3d runs, all audited",
            e3d_runs.len()
        ),
        failures,
    );
}
