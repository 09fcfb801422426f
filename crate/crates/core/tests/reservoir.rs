use std::f64::consts::PI;

use squeezelab::fock::{thermal_state, DensityOperator, HilbertLayout};
use squeezelab::reservoir::{run_ensemble, trajectory_rng, CycleConfig, ReservoirEngine};
use squeezelab::squeeze::TruncationPolicy;

const OMEGA: f64 = 2.0 * PI * 6.8e3;

#[test]
fn target_state_is_a_fixed_point_of_a_cycle() {
    for (r, n) in [(0.5, 14), (0.79, 18)] {
        let layout = HilbertLayout::new(2, n, 0).unwrap();
        let engine = ReservoirEngine::new(&layout, &CycleConfig::ideal(r, OMEGA, 2, 1)).unwrap();
        let rho = DensityOperator::pure(engine.target()).unwrap();
        let next = engine.cycle(&rho, &mut trajectory_rng(0, 0)).unwrap();
        let d = next.trace_distance(&rho).unwrap();
        assert!(d <= 1e-6, "r = {r}: {d}");
    }
}

#[test]
fn pumping_is_monotone_and_bounded() {
    // r = 1.1 runs below its tail-rule cutoff; the edge population is checked.
    for (r, n) in [(0.3, 12), (0.79, 20), (1.1, 22)] {
        let layout = HilbertLayout::new(2, n, 0).unwrap();
        let mut cfg = CycleConfig::ideal(r, OMEGA, 2, 12);
        cfg.truncation = TruncationPolicy::Warn;
        let run = ReservoirEngine::new(&layout, &cfg)
            .unwrap()
            .run(&thermal_state(&layout, 0.2).unwrap())
            .unwrap();
        let rec = &run.trajectory.records;
        for w in rec.windows(2) {
            assert!(
                w[1].f_exact >= w[0].f_exact - 1e-3,
                "r = {r}: cycle {} fidelity {} after {}",
                w[1].cycle,
                w[1].f_exact,
                w[0].f_exact
            );
        }
        for c in rec {
            assert!(c.f_lower <= c.f_exact + 1e-12, "r = {r}, cycle {}", c.cycle);
        }
    }
}

#[test]
fn drift_degrades_gracefully() {
    let layout = HilbertLayout::new(2, 12, 0).unwrap();
    let rho0 = thermal_state(&layout, 0.2).unwrap();
    let sigmas = [0.0, 2.0 * PI * 50.0, 2.0 * PI * 100.0, 2.0 * PI * 200.0];
    let means: Vec<f64> = sigmas
        .iter()
        .map(|&sigma| {
            let mut cfg = CycleConfig::ideal(0.5, OMEGA, 2, 10);
            cfg.drift_sigma = sigma;
            cfg.seed = 17;
            let runs = run_ensemble(&rho0, &cfg, 20).unwrap();
            runs.iter().map(|r| r.trajectory.last().unwrap().f_exact).sum::<f64>() / runs.len() as f64
        })
        .collect();
    for i in 0..sigmas.len() {
        for j in i..sigmas.len() {
            assert!(means[i] >= means[j] - 0.05, "sigma {} -> {}, sigma {} -> {}", sigmas[i], means[i], sigmas[j], means[j]);
        }
    }
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let layout = HilbertLayout::new(2, 8, 0).unwrap();
    let rho0 = thermal_state(&layout, 0.2).unwrap();
    let mut cfg = CycleConfig::ideal(0.3, OMEGA, 2, 3);
    cfg.drift_sigma = 2.0 * PI * 300.0;
    let fidelities = |threads: usize| -> Vec<f64> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&rho0, &cfg, 6).unwrap())
            .iter()
            .map(|r| r.trajectory.last().unwrap().f_exact)
            .collect()
    };
    assert_eq!(fidelities(1), fidelities(4));
}
