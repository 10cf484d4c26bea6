use avgsearch::analysis::{
    self, integration_error, pair_energy_direct, pair_energy_spectral, qmc_evaluate, wce_l1_class,
    ErrorReport,
};
use avgsearch::grid::TorusGrid;
use avgsearch::kernel::FourierKernel;
use avgsearch::pointset::{baseline_equispaced, baseline_random, PointSet, Provenance};
use avgsearch::rng::UniformStream;
use avgsearch::search::{
    averaging_search, greedy_averaging_search, partial_sum, run_search, GreedyStepper, SearchConfig,
};
use proptest::prelude::*;

fn korobov_strategy() -> impl Strategy<Value = FourierKernel> {
    (1usize..=3, 1.05f64..4.0, 1u32..=6)
        .prop_map(|(d, r, k)| FourierKernel::korobov(d, r, k).unwrap())
}

fn explicit_strategy() -> impl Strategy<Value = FourierKernel> {
    (1usize..=3).prop_flat_map(|d| {
        prop::collection::vec((prop::collection::vec(-4i32..=4, d), 0.0f64..2.0), 1..12).prop_map(
            move |terms| {
                let mut seen = std::collections::BTreeSet::new();
                let terms: Vec<(Vec<i32>, f64)> = terms
                    .into_iter()
                    .filter(|(k, _)| k.iter().any(|&c| c != 0))
                    .filter(|(k, _)| {
                        let neg: Vec<i32> = k.iter().map(|c| -c).collect();
                        seen.insert(k.clone()) && !seen.contains(&neg)
                    })
                    .collect();
                FourierKernel::explicit(d, 1.0, terms).unwrap()
            },
        )
    })
}

fn any_kernel() -> impl Strategy<Value = FourierKernel> {
    prop_oneof![korobov_strategy(), explicit_strategy()]
}

fn random_points(stream: &mut UniformStream, d: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut p = vec![0.0; d];
            stream.fill_point(&mut p);
            p
        })
        .collect()
}

#[test]
fn kernel_evenness_and_maximum_at_origin() {
    let kernels = [
        FourierKernel::korobov(1, 2.0, 8).unwrap(),
        FourierKernel::korobov(2, 1.5, 6).unwrap(),
        FourierKernel::korobov(3, 2.0, 4).unwrap(),
        FourierKernel::explicit(
            2,
            0.5,
            [(vec![1, 1], 0.3), (vec![2, -1], 0.7), (vec![0, 3], 0.1)],
        )
        .unwrap(),
    ];
    let mut stream = UniformStream::new(31);
    for k in &kernels {
        let norm = k.sup_norm_centered();
        let at_origin = k.evaluate_centered(&vec![0.0; k.dim()]).unwrap();
        for x in random_points(&mut stream, k.dim(), 1000) {
            let mirrored: Vec<f64> = x.iter().map(|&t| (1.0 - t).rem_euclid(1.0)).collect();
            let a = k.evaluate_centered(&x).unwrap();
            let b = k.evaluate_centered(&mirrored).unwrap();
            assert!((a - b).abs() < 1e-12 * norm, "{} at {x:?}", k.describe());
            assert!(a <= at_origin + 1e-12);
        }
    }
}

#[test]
fn kernel_mean_zero_on_fine_grid() {
    for k in [
        FourierKernel::korobov(1, 2.0, 8).unwrap(),
        FourierKernel::korobov(2, 2.0, 5).unwrap(),
        FourierKernel::korobov(3, 3.0, 3).unwrap(),
    ] {
        let limit = k.truncation_limit() as usize;
        let grid = TorusGrid::new(k.dim(), 2 * limit + 1);
        let mean = (0..grid.len())
            .map(|i| k.evaluate_centered(&grid.point(i)).unwrap())
            .sum::<f64>()
            / grid.len() as f64;
        assert!(mean.abs() < 1e-10, "{}: {mean}", k.describe());
    }
}

#[test]
fn factorized_matches_spectral_sum() {
    let mut stream = UniformStream::new(5);
    for (d, r, limit) in [(1, 2.0, 8), (2, 1.7, 8), (3, 2.0, 8)] {
        let k = FourierKernel::korobov(d, r, limit).unwrap();
        for x in random_points(&mut stream, d, 200) {
            let a = k.evaluate_centered(&x).unwrap();
            let b = k.evaluate_centered_spectral(&x).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn partial_sum_mean_zero_on_grid() {
    let k = FourierKernel::korobov(2, 2.0, 4).unwrap();
    let mut stream = UniformStream::new(77);
    let prefix =
        PointSet::from_points(2, &random_points(&mut stream, 2, 9), Provenance::External).unwrap();
    let grid = TorusGrid::new(2, 9);
    let mean = (0..grid.len())
        .map(|i| partial_sum(&k, &prefix, &grid.point(i)).unwrap())
        .sum::<f64>()
        / grid.len() as f64;
    assert!(mean.abs() < 1e-8);
}

#[test]
fn energy_telescoping_on_search_sets() {
    for d in 1..=3 {
        let k = FourierKernel::korobov(d, 2.0, 5).unwrap();
        for config in [SearchConfig::averaging(d as u64), SearchConfig::greedy()] {
            let (set, trace) = run_search(&k, 24, &config).unwrap();
            let f0 = k.sup_norm_centered();
            let sum_s: f64 = trace.objectives().sum();
            let telescoped = set.len() as f64 * f0 + 2.0 * sum_s;
            let direct = pair_energy_direct(&k, &set).unwrap();
            assert!((direct - telescoped).abs() <= 1e-9 * direct.abs().max(1.0));
            assert!(direct <= set.len() as f64 * f0 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn equispaced_survivor_oracle() {
    for limit in [4u32, 8, 16] {
        let k = FourierKernel::korobov(1, 2.0, limit).unwrap();
        for m in [2usize, 3, 4, 8] {
            let set = baseline_equispaced(1, m).unwrap();
            // survivors: k = ±l·m with l·m ≤ K
            let mut expected = 0.0;
            let mut l = 1;
            while l * m <= limit as usize {
                expected += 2.0 / ((l * m) as f64).powi(2);
                l += 1;
            }
            expected *= (m * m) as f64;
            let got = pair_energy_spectral(&k, &set).unwrap();
            assert!(
                (got - expected).abs() <= 1e-10 * expected.max(1.0),
                "K={limit} m={m}"
            );
        }
    }
}

#[test]
fn integration_error_bounded_by_refined_estimate() {
    let k = FourierKernel::korobov(2, 2.0, 4).unwrap();
    let (set, _) = averaging_search(&k, 20, &SearchConfig::averaging(8)).unwrap();
    let grid = 32;
    let wce = wce_l1_class(&k, &set, grid).unwrap();
    let cs = analysis::cs_bound(&k, &set).unwrap();
    let mut stream = UniformStream::new(99);
    for y0 in random_points(&mut stream, 2, 100) {
        let f = |x: &[f64]| {
            let diff: Vec<f64> = x.iter().zip(&y0).map(|(a, b)| a - b).collect();
            k.evaluate_centered(&diff).unwrap()
        };
        let err = qmc_evaluate(&set, f).abs();
        assert!((err - integration_error(&k, &y0, &set).unwrap()).abs() < 1e-13);
        // grid refined around y0: 11×11 points at spacing 1/(10G)
        let h = 1.0 / (10.0 * grid as f64);
        let mut local = wce.value;
        for a in -5..=5 {
            for b in -5..=5 {
                let y = [y0[0] + a as f64 * h, y0[1] + b as f64 * h];
                local = local.max(integration_error(&k, &y, &set).unwrap());
            }
        }
        assert!(err <= local);
        assert!(local <= cs * (1.0 + 1e-9));
    }
}

#[test]
fn greedy_dominates_averaging_on_replayed_prefix() {
    let k = FourierKernel::korobov(2, 2.0, 4).unwrap();
    let (set, trace) = averaging_search(&k, 24, &SearchConfig::averaging(4)).unwrap();
    let greedy = SearchConfig::greedy();
    for rec in &trace.steps[1..] {
        let prefix = &set.coords()[..(rec.step - 1) * 2];
        let stepper = GreedyStepper::with_prefix(&k, &greedy, prefix).unwrap();
        let g = stepper.step().unwrap().objective.unwrap();
        assert!(g <= rec.objective.unwrap(), "step {}", rec.step);
    }
}

#[test]
fn search_prefix_property() {
    let k = FourierKernel::korobov(1, 2.0, 6).unwrap();
    for config in [SearchConfig::averaging(12), SearchConfig::greedy()] {
        let (long, _) = run_search(&k, 40, &config).unwrap();
        let (short, _) = run_search(&k, 17, &config).unwrap();
        assert_eq!(short.coords(), &long.coords()[..17]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_identity_holds(kernel in any_kernel(), m in 1usize..=40, seed in any::<u64>()) {
        let set = baseline_random(kernel.dim(), m, seed).unwrap();
        let direct = pair_energy_direct(&kernel, &set).unwrap();
        let spectral = pair_energy_spectral(&kernel, &set).unwrap();
        prop_assert!(spectral >= 0.0);
        prop_assert!((direct - spectral).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn search_invariants(kernel in korobov_strategy(), m in 1usize..=20, seed in any::<u64>(), greedy in any::<bool>()) {
        let config = if greedy {
            SearchConfig { grid_resolution: Some(12), refinement_steps: 8, ..SearchConfig::greedy() }
        } else {
            SearchConfig::averaging(seed)
        };
        let (set, trace) = run_search(&kernel, m, &config).unwrap();
        prop_assert_eq!(set.len(), m);
        prop_assert!(trace.violations().is_empty());
        for rec in trace.steps.iter().skip(1) {
            let prefix = set.prefix(rec.step - 1).unwrap();
            let s = partial_sum(&kernel, &prefix, set.point(rec.step - 1)).unwrap();
            prop_assert!(s <= 0.0);
            prop_assert_eq!(s.to_bits(), rec.objective.unwrap().to_bits());
        }
        let grid = 2 * kernel.truncation_limit() as usize + 1;
        let report = ErrorReport::compute(&kernel, &set, grid.min(24)).unwrap();
        prop_assert!(report.chain_violations(true).is_empty(), "{:?}", report);
    }

    #[test]
    fn point_file_round_trip(d in 1usize..=5, m in 1usize..=1000, seed in any::<u64>()) {
        let set = baseline_random(d, m, seed).unwrap();
        let back = PointSet::from_text(&set.to_text()).unwrap();
        prop_assert_eq!(back.len(), m);
        for (a, b) in set.coords().iter().zip(back.coords()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert!(back.coords().iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn ingest_reduces_mod_one(coords in prop::collection::vec(-1e6f64..1e6, 1..60)) {
        let set = PointSet::new(1, coords, Provenance::External).unwrap();
        prop_assert!(set.coords().iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn greedy_step_not_worse_than_any_grid_point(seed in any::<u64>()) {
        let kernel = FourierKernel::korobov(1, 2.0, 8).unwrap();
        let prefix = baseline_random(1, 6, seed).unwrap();
        let stepper = GreedyStepper::with_prefix(&kernel, &SearchConfig::greedy(), prefix.coords()).unwrap();
        let s = stepper.step().unwrap().objective.unwrap();
        let min_field = stepper.field().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(s <= min_field);
    }
}

#[test]
fn greedy_search_matches_stepper_replay() {
    let k = FourierKernel::korobov(1, 2.0, 8).unwrap();
    let config = SearchConfig::greedy();
    let (set, trace) = greedy_averaging_search(&k, 10, &config).unwrap();
    for rec in &trace.steps[1..] {
        let stepper =
            GreedyStepper::with_prefix(&k, &config, &set.coords()[..rec.step - 1]).unwrap();
        assert_eq!(stepper.step().unwrap(), *rec);
    }
}
