use proptest::prelude::*;

use sensorq::exec::Execution;
use sensorq::fisher::{
    equicorrelated_fisher, expected_information, fi_pointwise, posterior_fisher, FisherReport,
};
use sensorq::io::{quantizer_csv, read_two_column};
use sensorq::pbpo::{
    bayes_risk, best_response_dependent, best_response_independent, grouping_check, pbpo_sweep,
    random, DiscreteProblem, Mode, Strategy as Rules,
};
use sensorq::prob::{NoiseModel, ParamPrior};
use sensorq::quadrature::Grid;
use sensorq::quantizer::{apply_multilevel, response_curve, BinaryQuantizer, MultiLevelQuantizer};
use sensorq::rate::multilevel_gaussian_fisher;
use sensorq::simulate::{mle_estimate, run_mse_experiment_with, SimConfig};

fn noise_model() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        Just(NoiseModel::delta()),
        (0.01f64..4.0).prop_map(|v| NoiseModel::gaussian(v).unwrap()),
        (-0.5f64..0.5).prop_map(|c| NoiseModel::raised_cosine(c).unwrap()),
    ]
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    v
}

fn sweep_strategy(p: &DiscreteProblem, seed: u64) -> Rules {
    Rules {
        rules: (0..p.sensor_count())
            .map(|i| {
                let d = p.levels()[i] as u64;
                (0..p.y_count(i))
                    .map(|y| {
                        ((seed
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(y as u64 * 1442695040888963407 + i as u64))
                            >> 33)
                            % d
                    })
                    .map(|s| s as usize)
                    .collect()
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn information_is_symmetric_under_relabeling(g in 1e-9f64..(1.0 - 1e-9), gp in -50.0f64..50.0) {
        let a = fi_pointwise(g, gp).unwrap();
        let b = fi_pointwise(1.0 - g, -gp).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn multilevel_quantizer_is_monotone(bps in prop::collection::vec(-3.0f64..3.0, 1..6), ys in prop::collection::vec(-4.0f64..4.0, 2..40)) {
        let bps = sorted(bps);
        let q = MultiLevelQuantizer::new(bps.clone()).unwrap();
        prop_assert_eq!(q.levels(), bps.len() + 1);
        let ys = sorted(ys);
        let out: Vec<usize> = ys.iter().map(|&y| apply_multilevel(&q, y)).collect();
        prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(out.iter().all(|&u| (1..=q.levels()).contains(&u)));
    }

    #[test]
    fn equicorrelated_information_decreases_in_rho(n in 2usize..60, var in 0.1f64..5.0, a in 0.0f64..0.99, b in 0.0f64..0.99) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(equicorrelated_fisher(n, var, lo).unwrap() > equicorrelated_fisher(n, var, hi).unwrap());
    }

    #[test]
    fn fisher_report_components_add_up(per in prop::collection::vec(0.0f64..10.0, 0..20), f0 in 0.0f64..5.0, fp in 0.0f64..5.0) {
        let r = FisherReport::new(per.clone(), f0, fp).unwrap();
        prop_assert_eq!(r.f_total, r.f_d + r.f_0 + r.f_p);
        prop_assert!((r.f_d - per.iter().sum::<f64>()).abs() <= 1e-12 * r.f_d.max(1.0));
        prop_assert!(r.f_d >= 0.0 && r.f_0 >= 0.0 && r.f_p >= 0.0);
    }

    #[test]
    fn mle_estimate_stays_in_range(n in 1usize..100_000, frac in 0.0f64..=1.0) {
        let ones = ((n as f64) * frac).round() as usize;
        let t = mle_estimate(ones.min(n), n);
        prop_assert!((-1.0..=1.0).contains(&t));
    }

    #[test]
    fn tabulated_quantizer_round_trips_through_csv(rs in prop::collection::vec(0.0f64..=1.0, 2..50), lo in -3.0f64..0.0, w in 0.1f64..6.0) {
        let n = rs.len();
        let ys: Vec<f64> = (0..n).map(|k| lo + w * k as f64 / (n - 1) as f64).collect();
        let q = BinaryQuantizer::tabulated(ys.clone(), rs.clone()).unwrap();
        let text = quantizer_csv(&q, &[]).unwrap();
        let (ys2, rs2) = read_two_column(text.as_bytes()).unwrap();
        prop_assert_eq!(ys2, ys);
        prop_assert_eq!(rs2, rs);
        for k in 0..=200 {
            let r = q.response(lo - 1.0 + (w + 2.0) * k as f64 / 200.0);
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn threshold_response_is_nondecreasing(noise in noise_model(), t in -0.5f64..0.5) {
        let q = BinaryQuantizer::threshold(t).unwrap();
        let c = response_curve(&q, &noise, Grid::new(-1.0, 1.0, 257).unwrap()).unwrap();
        prop_assert!(c.values().windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(c.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn noise_cdf_is_nondecreasing(noise in noise_model(), xs in prop::collection::vec(-10.0f64..10.0, 2..50)) {
        let xs = sorted(xs);
        let f: Vec<f64> = xs.iter().map(|&x| noise.cdf(x)).collect();
        prop_assert!(f.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn multilevel_information_is_bounded_by_unquantized(bps in prop::collection::vec(-2.0f64..2.0, 1..5), var in 0.2f64..3.0, pv in 0.05f64..1.0) {
        let prior = ParamPrior::gaussian(0.0, pv).unwrap();
        let f = multilevel_gaussian_fisher(&prior, var, &sorted(bps)).unwrap();
        prop_assert!(f >= 0.0 && f <= 1.0 / var * (1.0 + 1e-9), "{} > {}", f, 1.0 / var);
    }

    #[test]
    fn sensor_information_is_additive(k in 1usize..40, var in 0.05f64..2.0) {
        let prior = ParamPrior::uniform(-1.0, 1.0).unwrap();
        let noise = NoiseModel::gaussian(var).unwrap();
        let q = BinaryQuantizer::threshold(0.0).unwrap();
        let c = response_curve(&q, &noise, Grid::new(-1.0, 1.0, 1025).unwrap()).unwrap();
        let one = expected_information(&c, &prior).unwrap();
        let r = posterior_fisher(&c, &prior, k, None).unwrap();
        prop_assert!((r.f_d - k as f64 * one).abs() <= 1e-12 * r.f_d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn best_responses_never_increase_risk(seed in any::<u64>()) {
        let ind = random::independent(seed, 3, 4, 3, 2);
        let dep = random::hci(seed, 2, 3, 2, 3, 2);
        for (p, mode) in [(ind, Mode::Independent), (dep, Mode::Dependent)] {
            let mut s = sweep_strategy(&p, seed);
            for i in 0..p.sensor_count() {
                let before = bayes_risk(&p, &s).unwrap();
                s.rules[i] = match mode {
                    Mode::Independent => best_response_independent(&p, &s, i).unwrap(),
                    Mode::Dependent => best_response_dependent(&p, &s, i).unwrap(),
                };
                let after = bayes_risk(&p, &s).unwrap();
                prop_assert!(after <= before + 1e-12 * before.abs().max(1e-12), "{} > {}", after, before);
            }
        }
    }

    #[test]
    fn sweeps_end_at_fixed_points(seed in any::<u64>()) {
        let p = random::independent(seed, 2, 4, 4, 3);
        let init = sweep_strategy(&p, seed);
        let run = pbpo_sweep(&p, &init, Mode::Independent, 200).unwrap();
        prop_assert!(run.converged);
        prop_assert!(run.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1e-12)));
        let again = pbpo_sweep(&p, &run.strategy, Mode::Independent, 1).unwrap();
        prop_assert_eq!(again.strategy, run.strategy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identical_rules_suffice_on_symmetric_instances(seed in any::<u64>(), three in any::<bool>()) {
        let levels: &[usize] = if three { &[2, 2, 2] } else { &[2, 2] };
        let r = grouping_check(&random::symmetric(seed, levels, 3, 4)).unwrap();
        prop_assert!(r.identical_optimal, "{} vs {}", r.identical_best, r.free_best);
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>()) {
        let cfg = SimConfig { sensors: vec![8, 32], runs: 200, seed, ..SimConfig::reference() };
        let a = run_mse_experiment_with(&cfg, Execution::Parallel).unwrap();
        let b = run_mse_experiment_with(&cfg, Execution::Sequential).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.rows.iter().all(|r| r.mse >= 0.0 && r.stderr >= 0.0));
    }
}
