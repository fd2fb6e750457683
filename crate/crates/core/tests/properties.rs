use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use rolf::dr::pseudo_action_probs;
use rolf::env::ProblemInstance;
use rolf::harness::{aggregate, RunRecord};
use rolf::linalg::{augment, complement_basis, lasso_kkt_violation, reduce_rank, solve_lasso_gram, LassoOptions};
use rolf::policy::{cumulative_regret, Algorithm};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn observed() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..12)
        .prop_flat_map(|k| (1usize..k, Just(k)))
        .prop_flat_map(|(d, k)| matrix(d, k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_is_orthonormal_and_orthogonal_to_rows(x in observed()) {
        let obs = reduce_rank(&x, 1e-10).unwrap();
        let basis = complement_basis(&obs).unwrap();
        prop_assert_eq!(basis.len() + obs.dim(), x.ncols());
        let b = basis.matrix();
        prop_assert!((b * x.transpose()).amax() <= 1e-10);
        let bbt = b * b.transpose() - DMatrix::identity(basis.len(), basis.len());
        prop_assert!(bbt.amax() <= 1e-10);
    }

    #[test]
    fn gram_eigenvalues_lie_between_bounds(x in observed()) {
        let obs = reduce_rank(&x, 1e-10).unwrap();
        let basis = complement_basis(&obs).unwrap();
        let aug = augment(&obs, &basis).unwrap();
        let g = aug.gram();
        let eig = g.clone().symmetric_eigen().eigenvalues;
        let tol = 1e-9 * (1.0 + aug.sigma_max_sq());
        prop_assert!(aug.sigma_min_sq() > 0.0);
        prop_assert!((eig.min() - aug.sigma_min_sq()).abs() <= tol);
        for j in 0..g.nrows() {
            prop_assert!(g[(j, j)] <= aug.sigma_max_sq() + tol);
            prop_assert!(g[(j, j)] >= aug.sigma_min_sq() - tol);
        }
        // Observed rows are orthogonal to the basis rows, so the Gram is
        // block diagonal with an identity lower block.
        let d = aug.observed_dim();
        let m = g.nrows() - d;
        prop_assert!(g.view((0, d), (d, m)).amax() <= 1e-10);
        prop_assert!((g.view((d, d), (m, m)) - DMatrix::<f64>::identity(m, m)).amax() <= 1e-10);
    }

    #[test]
    fn pseudo_action_probs_form_distribution(k in 2usize..40, chosen in 0usize..40, p in 0.5001f64..0.9999) {
        let chosen = chosen % k;
        let probs = pseudo_action_probs(chosen, k, p).unwrap();
        prop_assert_eq!(probs.len(), k);
        prop_assert!(probs.iter().all(|&q| q >= 0.0));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((probs[chosen] - p).abs() < 1e-15);
        prop_assert!(probs.iter().enumerate().all(|(i, &q)| i == chosen || q < p));
    }

    #[test]
    fn cumulative_regret_never_decreases(
        z in matrix(3, 6),
        theta in prop::collection::vec(-1.0f64..1.0, 3),
        arms in prop::collection::vec(0usize..6, 1..200),
    ) {
        let inst = ProblemInstance::from_parts(
            &z.rows(0, 2).into_owned(),
            &z.rows(2, 1).into_owned(),
            DVector::from_vec(theta),
            0.1,
        ).unwrap();
        let r = cumulative_regret(&arms, &inst);
        prop_assert!(r[0] >= 0.0);
        prop_assert!(r.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn lasso_solution_satisfies_kkt(x in matrix(20, 5), y in prop::collection::vec(-2.0f64..2.0, 20), lambda in 0.0f64..10.0) {
        let g = x.transpose() * &x + DMatrix::identity(5, 5) * 1e-3;
        let c = x.transpose() * DVector::from_vec(y);
        let opts = LassoOptions { tol: 1e-12, ..LassoOptions::default() };
        let fit = solve_lasso_gram(&g, &c, lambda, opts, None).unwrap();
        prop_assert!(lasso_kkt_violation(&g, &c, &fit.coef, lambda) < 1e-5);
    }

    #[test]
    fn aggregate_is_bounded_and_order_free(
        finals in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 1..6),
        rotate in 0usize..6,
    ) {
        let records = |order: &[usize]| -> Vec<RunRecord> {
            order.iter().flat_map(|&s| {
                let mut cum = 0.0;
                finals[s].iter().enumerate().map(move |(i, &r)| {
                    cum += r;
                    RunRecord {
                        run_id: s, seed: s as u64, algorithm: Algorithm::LinUcb, t: i + 1,
                        explored: false, matched: false, arm: 0, reward: 0.0, regret: r,
                        cumulative_regret: cum,
                    }
                }).collect::<Vec<_>>()
            }).collect()
        };
        let n = finals.len();
        let forward: Vec<usize> = (0..n).collect();
        let mut shuffled = forward.clone();
        shuffled.rotate_left(rotate % n);
        shuffled.reverse();
        let a = aggregate(&records(&forward));
        let b = aggregate(&records(&shuffled));
        prop_assert_eq!(&a, &b);
        for row in &a {
            prop_assert!(row.min <= row.mean + 1e-12 && row.mean <= row.max + 1e-12);
            prop_assert!(row.std >= 0.0);
            prop_assert_eq!(row.seeds, n);
        }
    }
}
