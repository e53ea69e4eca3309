use dpsvm::data::{fit_normalizer, split_indices, Dataset, Label, SplitSpec};
use dpsvm::explain::{
    constraint_value, explain_nonrobust_linear, explain_robust_bisection, explain_robust_linear,
    project_onto_circular_cone, robust_coefficient, BisectionConfig, ExplanationRequest, Prototype,
    PrototypeSet, PrototypeSource,
};
use dpsvm::features::make_identity;
use dpsvm::privacy::{laplace_inverse_cdf, PrivateRelease};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn release(w: Array1<f64>, lambda: f64) -> PrivateRelease {
    let dim = w.len();
    PrivateRelease {
        w_tilde: w,
        lambda,
        beta: 1.0,
        map: make_identity(dim).unwrap(),
    }
}

fn vector(dim: usize, scale: f64) -> impl Strategy<Value = Array1<f64>> {
    prop::collection::vec(-scale..scale, dim).prop_map(Array1::from)
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Points of `{z : <z, c> >= α |z|}` built from an axis component and an
/// orthogonal component no longer than the aperture allows.
fn cone_point(axis: &Array1<f64>, alpha: f64, a: f64, raw: &Array1<f64>, frac: f64) -> Array1<f64> {
    let mut v = raw - &(raw.dot(axis) * axis);
    let vn = norm(&v);
    if vn > 0.0 {
        v /= vn;
    }
    let max_rho = if alpha > 0.0 {
        a * (1.0 - alpha * alpha).sqrt() / alpha
    } else {
        10.0 * (a + 1.0)
    };
    // shrink slightly so rounding cannot push the probe outside
    a * axis + &(frac * max_rho * (1.0 - 1e-12) * v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalizer_round_trip(n in 2usize..20, l in 1usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, l), |_| rng.random_range(-100.0..100.0));
        let labels = (0..n).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        let data = Dataset::new(x, labels).unwrap();
        let params = fit_normalizer(&data).unwrap();
        for i in 0..n {
            let row = data.row(i);
            let back = params.denormalize(params.normalize(row).unwrap().view()).unwrap();
            for (a, b) in back.iter().zip(row.iter()) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn split_partitions_the_rows(n in 2usize..500, f in 0.05f64..0.95, seed in any::<u64>()) {
        let spec = SplitSpec { train_fraction: f, seed };
        let expected_train = (f * n as f64).round() as usize;
        prop_assume!(expected_train >= 1 && expected_train < n);
        let (train, test) = split_indices(n, &spec).unwrap();
        prop_assert_eq!(train.len(), expected_train);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn laplace_inverse_cdf_is_odd(u in 1e-9f64..0.5, lambda in 0.01f64..10.0) {
        let a = laplace_inverse_cdf(u, lambda);
        let b = laplace_inverse_cdf(1.0 - u, lambda);
        prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert!(a <= 0.0);
    }

    #[test]
    fn robust_coefficient_grows_with_confidence(p in 0.5f64..0.99, dp in 0.001f64..0.009, lambda in 0.01f64..5.0) {
        let lo = robust_coefficient(p, lambda).unwrap();
        let hi = robust_coefficient(p + dp, lambda).unwrap();
        prop_assert!(lo >= 0.0 && hi > lo);
    }

    #[test]
    fn cone_projection_is_feasible_and_minimal(
        dim in 2usize..6,
        seed in any::<u64>(),
        alpha in 0.0f64..1.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw: Array1<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        prop_assume!(norm(&raw) > 1e-3);
        let axis = &raw / norm(&raw);
        let x: Array1<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let proj = project_onto_circular_cone(x.view(), axis.view(), alpha);
        let p = &proj.point;
        prop_assert!(p.dot(&axis) >= alpha * norm(p) - 1e-9);
        let d = norm(&(&x - p));
        for _ in 0..200 {
            let a = rng.random_range(0.0..2.0 * norm(&x) + 1.0);
            let dir: Array1<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = cone_point(&axis, alpha, a, &dir, rng.random_range(0.0..1.0));
            prop_assert!(d <= norm(&(&x - &z)) + 1e-9);
        }
    }

    #[test]
    fn half_confidence_collapses_to_nonrobust(
        dim in 1usize..6,
        w in vector(5, 3.0),
        x in vector(5, 5.0),
        lambda in 0.0f64..3.0,
    ) {
        let w = w.slice(ndarray::s![..dim]).to_owned();
        let x = x.slice(ndarray::s![..dim]).to_owned();
        prop_assume!(norm(&w) > 1e-3);
        let rel = release(w, lambda);
        let req = ExplanationRequest::new(x, &rel, 0.5).unwrap();
        let robust = explain_robust_linear(&req, &rel).unwrap();
        let plain = explain_nonrobust_linear(&req, &rel).unwrap();
        for (a, b) in robust.x.iter().zip(plain.x.iter()) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn bisection_contract(
        w in vector(3, 2.0),
        dir in vector(3, 1.0),
        far in 0.5f64..20.0,
        p in 0.5f64..0.95,
        lambda in 0.0f64..0.3,
        eps_exp in -8i32..0,
    ) {
        prop_assume!(norm(&w) > 0.5);
        let r = robust_coefficient(p, lambda).unwrap();
        prop_assume!(r < 0.9 * norm(&w));
        let rel = release(w.clone(), lambda);
        let w_hat = &w / norm(&w);
        // instance deep on the positive side, prototype deep on the negative side
        let x_prime = 3.0 * &w_hat + &(0.2 * &dir);
        let z = -far * &w_hat + &(0.2 * &dir);
        let req = ExplanationRequest::new(x_prime.clone(), &rel, p).unwrap();
        prop_assume!(req.label == Label::Positive);
        prop_assume!(constraint_value(x_prime.view(), &rel, Label::Positive, p).unwrap() > 0.0);
        prop_assume!(constraint_value(z.view(), &rel, Label::Positive, p).unwrap() < 0.0);
        let proto = |point: Array1<f64>| Prototype { point, source: PrototypeSource::ClassMean };
        let set = PrototypeSet { plus: proto(x_prime.clone()), minus: proto(z.clone()) };
        let epsilon = 10f64.powi(eps_exp);
        let cfg = BisectionConfig { epsilon, ..Default::default() };
        let ex = explain_robust_bisection(&req, &rel, &set, &cfg).unwrap();

        let d0 = norm(&(&z - &x_prime));
        let ratio = d0 / epsilon;
        // exact powers of two sit on the stopping boundary; skip them
        prop_assume!((ratio.log2() - ratio.log2().round()).abs() > 1e-9);
        let expected = if ratio <= 1.0 { 0 } else { ratio.log2().ceil() as usize };
        prop_assert_eq!(ex.iterations, expected);
        prop_assert!(ex.g_value < 0.0);
        prop_assert!(constraint_value(ex.x.view(), &rel, Label::Positive, p).unwrap() < 0.0);
        let t = ex.segment_coefficient.unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        let on_segment = &x_prime + &(t * &(&z - &x_prime));
        prop_assert_eq!(&ex.x, &on_segment);
    }
}
