use nalgebra::{DMatrix, DVector};
use outlyingness::snipls::snipls_fit;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn centered(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    let x: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng));
    let mean = x.row_mean();
    DMatrix::from_fn(n, p, |i, j| x[(i, j)] - mean[j])
}

#[test]
fn mean_support_shrinks_as_eta_rises() {
    let etas: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut totals = vec![0usize; etas.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..200 {
        let x = centered(&mut rng, 30, 20);
        let y = DVector::from_fn(30, |_, _| StandardNormal.sample(&mut rng));
        for (k, &eta) in etas.iter().enumerate() {
            totals[k] += snipls_fit(&x, &y, 1, eta).unwrap().selected.len();
        }
    }
    assert!(totals.windows(2).all(|w| w[1] <= w[0]), "{totals:?}");
    assert!(totals[8] < totals[0]);
}

#[test]
fn single_component_equals_pls1() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..20 {
        let x = centered(&mut rng, 25, 7);
        let y = DVector::from_fn(25, |_, _| StandardNormal.sample(&mut rng));
        let w = (x.transpose() * &y).normalize();
        let t = &x * &w;
        let expected = &w * (t.dot(&y) / t.norm_squared());
        let fit = snipls_fit(&x, &y, 1, 0.0).unwrap();
        assert!((fit.coefficients - &expected).amax() <= 1e-10 * expected.amax().max(1.0));
    }
}

#[test]
fn all_components_equal_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..20 {
        let x = centered(&mut rng, 40, 6);
        let y = DVector::from_fn(40, |_, _| StandardNormal.sample(&mut rng));
        let ols = (x.transpose() * &x)
            .cholesky()
            .unwrap()
            .solve(&(x.transpose() * &y));
        let fit = snipls_fit(&x, &y, 6, 0.0).unwrap();
        assert!((fit.coefficients - ols).amax() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_is_scale_equivariant_in_y(seed in any::<u64>(), c in 0.01f64..100.0, eta in 0.0f64..0.95, h in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = centered(&mut rng, 20, 8);
        let y = DVector::from_fn(20, |_, _| StandardNormal.sample(&mut rng));
        let (Ok(a), Ok(b)) = (snipls_fit(&x, &y, h, eta), snipls_fit(&x, &(&y * c), h, eta)) else {
            return Ok(());
        };
        prop_assert_eq!(&a.selected, &b.selected);
        let scale = a.coefficients.amax().max(1e-300);
        prop_assert!((a.coefficients * c - b.coefficients).amax() <= 1e-9 * scale * c);
    }

    #[test]
    fn scores_are_mutually_orthogonal(seed in any::<u64>(), eta in 0.0f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = centered(&mut rng, 30, 10);
        let y = DVector::from_fn(30, |_, _| StandardNormal.sample(&mut rng));
        if let Ok(fit) = snipls_fit(&x, &y, 3, eta) {
            for a in 0..3 {
                for b in (a + 1)..3 {
                    let (ta, tb) = (&fit.scores[a], &fit.scores[b]);
                    prop_assert!(ta.dot(tb).abs() <= 1e-8 * ta.norm() * tb.norm());
                }
            }
        }
    }
}
