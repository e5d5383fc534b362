use proptest::prelude::*;

use rpr::estimators::EstimatorSpec;
use rpr::simulation::{exhaustive_oracle, run_simulation, run_simulation_with_threads, SimConfig};
use rpr::stats::Population;

fn toy() -> Population {
    Population::new(vec![3.1, 4.7, 2.2, 5.9, 4.0, 3.3], vec![6.0, 9.5, 4.1, 11.8, 7.7, 6.9]).unwrap()
}

fn specs() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::SampleMean,
        EstimatorSpec::Ratio,
        EstimatorSpec::Product,
        EstimatorSpec::RatioProductRatio { alpha: -0.4, beta: 0.3 },
        EstimatorSpec::UnbiasedAoe { c: 0.8 },
    ]
}

#[test]
fn monte_carlo_converges_to_exhaustive_values() {
    let pop = toy();
    let cfg = SimConfig {
        reps: 50_000,
        n: 3,
        seed: 314,
        confidence: 0.9,
        estimators: specs(),
    };
    let run = run_simulation(&pop, &cfg).unwrap();
    for (j, spec) in specs().into_iter().enumerate() {
        let exact = exhaustive_oracle(&pop, 3, spec).unwrap();
        let values: Vec<f64> = run.replications.iter().map(|r| r.estimates[j].unwrap()).collect();
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        assert!(
            (mean - exact.exact_expectation).abs() < 4.5 * se,
            "{spec}: {mean} vs {}",
            exact.exact_expectation
        );
        let report = &run.report.estimators[j];
        assert!(
            (report.mse_empirical - exact.exact_mse).abs() < 0.03 * exact.exact_mse,
            "{spec}"
        );
    }
}

#[test]
fn report_independent_of_thread_count() {
    let pop = toy();
    let cfg = SimConfig {
        reps: 3000,
        n: 2,
        seed: 77,
        confidence: 0.95,
        estimators: specs(),
    };
    let one = run_simulation_with_threads(&pop, &cfg, 1).unwrap();
    let many = run_simulation_with_threads(&pop, &cfg, 3).unwrap();
    assert_eq!(one.replications, many.replications);
    assert_eq!(
        serde_json::to_string(&one.report).unwrap(),
        serde_json::to_string(&many.report).unwrap()
    );
}

#[test]
fn report_json_shape() {
    let cfg = SimConfig {
        reps: 100,
        n: 3,
        seed: 1,
        confidence: 0.9,
        estimators: vec![EstimatorSpec::SampleMean, EstimatorSpec::UnbiasedAoe { c: 0.8 }],
    };
    let run = run_simulation(&toy(), &cfg).unwrap();
    let v: serde_json::Value = serde_json::to_value(&run.report).unwrap();
    assert_eq!(v["metadata"]["reps"], 100);
    assert!(v["metadata"].get("wall_time_secs").is_none());
    assert_eq!(v["estimators"][1]["estimator"], "aoe:0.8");
    let rows = v["ranking"].as_array().unwrap();
    let total: u64 = rows.iter().map(|r| r["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 100);
    assert_eq!(rows[0]["order"].as_array().unwrap().len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rates_partition_and_counts_add_up(seed in any::<u64>(), reps in 1usize..300, n in 1usize..6,
                                         confidence in 0.5..0.99f64) {
        // x crosses zero, so some estimators are undefined on some draws
        let pop = Population::new(vec![1.0, 2.5, 3.0, 4.5, 2.0, 3.5], vec![-1.0, 1.0, 2.0, 3.0, -2.0, 0.5]).unwrap();
        let cfg = SimConfig { reps, n, seed, confidence, estimators: specs() };
        let run = run_simulation(&pop, &cfg).unwrap();
        let any_singular = run
            .replications
            .iter()
            .filter(|r| r.estimates.iter().any(Option::is_none))
            .count() as u64;
        prop_assert_eq!(run.report.ranking.total() + any_singular, reps as u64);
        for e in &run.report.estimators {
            prop_assert_eq!(e.valid_draws + e.singular_count, reps);
            if e.valid_draws > 0 {
                prop_assert!((e.coverage + e.neg_bias_rate + e.pos_bias_rate - 1.0).abs() < 1e-12);
                prop_assert!(e.q1 <= e.median && e.median <= e.q3);
            }
        }
    }
}
