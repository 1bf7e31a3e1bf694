use proptest::prelude::*;

use itergodic::lab::{
    as_sweep_words, max_window_increment, max_window_increment_naive, SweepOptions,
};
use itergodic::large_deviations::{perron_root, RateFunction};
use itergodic::processes::{
    generate, stationary_distribution, stationary_residual, MixingDiagnostic, ProcessModel,
    TransitionMatrix, TrigObservable,
};
use itergodic::sums::coordinate_track;
use itergodic::tensor::Word;

fn fixture_chains() -> Vec<TransitionMatrix> {
    [
        vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.6, 0.2],
            vec![0.3, 0.3, 0.4],
        ],
        vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
        ],
        vec![
            vec![0.1, 0.9, 0.0, 0.0],
            vec![0.0, 0.2, 0.8, 0.0],
            vec![0.0, 0.0, 0.3, 0.7],
            vec![0.6, 0.0, 0.0, 0.4],
        ],
    ]
    .into_iter()
    .map(|rows| TransitionMatrix::new(rows).unwrap())
    .collect()
}

fn chain() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|m| {
        (
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, m), m),
            prop::collection::vec(-2.0f64..2.0, m),
        )
    })
}

fn normalize(mut rows: Vec<Vec<f64>>) -> TransitionMatrix {
    for row in &mut rows {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    TransitionMatrix::new(rows).unwrap()
}

#[test]
fn empirical_means_converge() {
    let n = 1_000_000;
    let iid = ProcessModel::iid(
        vec![vec![0.0, 1.0], vec![1.0, -1.0], vec![3.0, 0.5]],
        vec![0.5, 0.3, 0.2],
    )
    .unwrap();
    let markov = ProcessModel::markov(
        fixture_chains().remove(1),
        vec![vec![1.0], vec![2.0], vec![-1.0]],
    )
    .unwrap();
    for model in [&iid, &markov] {
        let means = generate(model, n, 2024).unwrap().empirical_mean();
        for (got, want) in means.iter().zip(model.mean()) {
            assert!(
                (got - want).abs() <= 5.0 / (n as f64).sqrt(),
                "{got} vs {want}"
            );
        }
    }
    let obs = vec![TrigObservable {
        constant: 0.3,
        cos: vec![1.0, 0.5],
        sin: vec![0.0, -0.25],
    }];
    let rotation = ProcessModel::rotation((5f64.sqrt() - 1.0) / 2.0, 0.37, obs).unwrap();
    let got = generate(&rotation, n, 0).unwrap().empirical_mean()[0];
    assert!((got - 0.3).abs() <= 10.0 / n as f64, "{got}");
}

#[test]
fn fixture_chains_mix() {
    for p in fixture_chains() {
        let lags: Vec<u32> = (1..=30).collect();
        let diag = MixingDiagnostic::compute(&p, &lags).unwrap();
        assert!(diag.decay_rate.unwrap() > 0.0);
        let pi = stationary_distribution(&p).unwrap();
        assert!(stationary_residual(&p, &pi) <= 1e-12);
        let flat: Vec<f64> = p.rows().concat();
        assert!((perron_root(&flat, p.size()).unwrap().root - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn as_errors_shrink_on_shipped_fixtures() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["as_constant", "as_rotation", "as_markov"] {
        let path = dir.join(format!("{name}.toml"));
        let exp = itergodic::runner::validate_file(&path).unwrap();
        assert!(exp.checkpoints.last().unwrap() / exp.checkpoints[0] >= 100);
        let opts = SweepOptions {
            depth: Some(exp.depth),
            kahan: exp.config.kahan,
        };
        let reports = as_sweep_words(
            exp.model.as_ref().unwrap(),
            &exp.words,
            &exp.checkpoints,
            exp.config.seed,
            &opts,
        )
        .unwrap();
        for r in reports {
            let (first, last) = (r.errors[0], *r.errors.last().unwrap());
            assert!(last < first, "{name} {}: {first} -> {last}", r.word);
        }
    }
}

#[test]
fn window_max_routes_agree_on_long_series() {
    let model = ProcessModel::iid(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
    let series = generate(&model, 100_000, 3).unwrap();
    for letters in [vec![1], vec![1, 1]] {
        let track = coordinate_track(&series, &Word::new(letters, 1).unwrap()).unwrap();
        for ell in [1, 17, 90, 1000] {
            let fast = max_window_increment(track.values(), ell);
            let slow = max_window_increment_naive(track.values(), ell);
            assert!(
                (fast - slow).abs() <= 1e-12 * fast.abs().max(1.0),
                "{fast} vs {slow}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_chains_are_stationary((rows, _) in chain()) {
        let p = normalize(rows);
        let pi = stationary_distribution(&p).unwrap();
        prop_assert!(stationary_residual(&p, &pi) <= 1e-12);
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rate_is_convex((rows, values) in chain(), a in 0.0f64..1.0, b in 0.0f64..1.0, theta in 0.0f64..1.0) {
        let p = normalize(rows);
        let model = ProcessModel::markov(p, values.iter().map(|&v| vec![v]).collect()).unwrap();
        let rate = RateFunction::new(&model, 0).unwrap();
        let (q, c) = (rate.mean(), rate.sup());
        prop_assume!(c - q > 1e-3);
        // Stay clear of the saturated end of the domain.
        let at = |u: f64| q + (c - q) * 0.9 * u;
        let (a1, a2) = (at(a), at(b));
        let mid = theta * a1 + (1.0 - theta) * a2;
        let lhs = rate.eval(mid).unwrap();
        let rhs = theta * rate.eval(a1).unwrap() + (1.0 - theta) * rate.eval(a2).unwrap();
        prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }

    #[test]
    fn rate_is_strictly_increasing((rows, values) in chain(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = normalize(rows);
        let model = ProcessModel::markov(p, values.iter().map(|&v| vec![v]).collect()).unwrap();
        let rate = RateFunction::new(&model, 0).unwrap();
        let (q, c) = (rate.mean(), rate.sup());
        let at = |u: f64| q + (c - q) * 0.9 * u;
        let (lo, hi) = (at(a.min(b)), at(a.max(b)));
        prop_assume!(hi > lo + 1e-3);
        prop_assert!(rate.eval(hi).unwrap() > rate.eval(lo).unwrap() + 1e-12);
    }

    #[test]
    fn optimal_tilt_inverts_the_slope((rows, values) in chain(), u in 0.01f64..0.9) {
        let p = normalize(rows);
        let model = ProcessModel::markov(p, values.iter().map(|&v| vec![v]).collect()).unwrap();
        let rate = RateFunction::new(&model, 0).unwrap();
        let alpha = rate.mean() + (rate.sup() - rate.mean()) * u;
        prop_assume!(rate.sup() - rate.mean() > 1e-3);
        let lambda = rate.optimal_tilt(alpha).unwrap();
        prop_assert!((rate.cgf_slope(lambda).unwrap() - alpha).abs() <= 1e-8);
    }

    #[test]
    fn iid_rate_matches_legendre_grid(p in 0.05f64..0.95, u in 0.01f64..0.95) {
        let model = ProcessModel::iid(vec![vec![0.0], vec![1.0]], vec![1.0 - p, p]).unwrap();
        let rate = RateFunction::new(&model, 0).unwrap();
        let alpha = p + (1.0 - p) * u;
        let got = rate.eval(alpha).unwrap();
        // Crude sup over a lambda grid never exceeds the exact transform.
        let grid_sup = (0..=4000)
            .map(|k| k as f64 * 0.005)
            .map(|l| l * alpha - (1.0 - p + p * f64::exp(l)).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(grid_sup <= got + 1e-12);
        prop_assert!(got - grid_sup <= 1e-4);
    }
}
