mod common;

use fastfuzz::bench::{csv, mean_ci, run_plan, BenchGrammar, BenchPlan, BenchSink, CSV_HEADER};
use fastfuzz::engine::Engine;

fn plan(engines: Vec<Engine>) -> BenchPlan {
    let grammars = common::corpus()
        .into_iter()
        .map(|(name, ag)| BenchGrammar { name: name.to_string(), ag })
        .collect();
    BenchPlan { depths: vec![4, 16], seeds: (0..4).collect(), inputs: 40, warmup: 10, ..BenchPlan::new(grammars, engines) }
}

fn bytes(plan: &BenchPlan) -> Vec<(String, u64)> {
    run_plan(plan)
        .unwrap()
        .rows
        .into_iter()
        .map(|r| (format!("{},{},{},{}", r.engine, r.grammar, r.depth, r.seed), r.outcome.unwrap().bytes))
        .collect()
}

#[test]
fn header_is_stable() {
    assert_eq!(CSV_HEADER, "engine,grammar,depth,seed,inputs,bytes,seconds,kibps");
    let text = csv(&run_plan(&plan(vec![Engine::Pooled])).unwrap().rows);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# timing: monotonic"));
    assert_eq!(lines.next(), Some(CSV_HEADER));
    for line in lines {
        assert_eq!(line.split(',').count(), 8, "{line}");
    }
}

#[test]
fn bytes_reproduce_across_runs_and_workers() {
    let engines = vec![Engine::Limit, Engine::Pooled, Engine::VmSwitch, Engine::VmThreaded, Engine::Compiled];
    let first = bytes(&plan(engines.clone()));
    assert_eq!(first, bytes(&plan(engines.clone())));
    assert_eq!(first, bytes(&BenchPlan { parallel: 4, ..plan(engines.clone()) }));
    assert_eq!(first, bytes(&BenchPlan { warmup: 20, ..plan(engines.clone()) }));
    assert_eq!(first, bytes(&BenchPlan { sink: BenchSink::File, ..plan(engines) }));
}

#[test]
fn equivalent_engines_report_equal_bytes() {
    let rows = bytes(&plan(vec![Engine::Pooled, Engine::VmSwitch, Engine::VmThreaded, Engine::Compiled]));
    let strip = |k: &str| k.split_once(',').unwrap().1.to_string();
    let pooled: Vec<_> = rows.iter().filter(|(k, _)| k.starts_with("pooled,")).map(|(k, b)| (strip(k), *b)).collect();
    for e in ["vm-switch", "vm-threaded", "compiled"] {
        let other: Vec<_> =
            rows.iter().filter(|(k, _)| k.starts_with(&format!("{e},"))).map(|(k, b)| (strip(k), *b)).collect();
        assert_eq!(pooled, other, "{e}");
    }
}

#[test]
fn summary_uses_every_seed() {
    let report = run_plan(&plan(vec![Engine::VmSwitch])).unwrap();
    assert_eq!(report.summary.len(), 8);
    for s in &report.summary {
        assert_eq!(s.runs, 4);
        let values: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.grammar == s.grammar && r.depth == s.depth)
            .map(|r| r.outcome.as_ref().unwrap().kibps)
            .collect();
        assert_eq!(mean_ci(&values), (s.mean_kibps, s.ci_half_width));
    }
}

#[test]
fn t_interval_oracle() {
    // Frozen from scipy.stats.t.ppf(0.975, 9) * stdev / sqrt(10).
    let values: Vec<f64> = (0..10).map(|i| 100.0 + 10.0 * i as f64).collect();
    let (mean, half) = mean_ci(&values);
    assert_eq!(mean, 145.0);
    assert!((half - 21.658_505_897_216_834).abs() < 1e-9);
}
