//! Coordinate-descent Lasso on a small sparse regression, along a penalty path.
//!
//! ```bash
//! cargo run -p rolf --example lasso_solver
//! ```

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rolf::linalg::{lasso_kkt_violation, solve_lasso_gram, LassoOptions, RidgeAccumulator};
use rolf::rng;

fn main() -> rolf::Result<()> {
    let mut r = rng::from_seed(11);
    let dim = 8;
    let truth = DVector::from_vec(vec![1.5, 0.0, 0.0, -2.0, 0.0, 0.0, 0.5, 0.0]);
    let mut stats = RidgeAccumulator::new(dim, 0.0);
    for _ in 0..200 {
        let x = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut r));
        let noise: f64 = StandardNormal.sample(&mut r);
        stats.update(&x, x.dot(&truth) + 0.3 * noise, 1.0);
    }
    let (gram, xty) = (stats.matrix(), stats.rhs());

    let mut warm: Option<DVector<f64>> = None;
    for lambda in [1000.0, 300.0, 100.0, 30.0, 10.0, 1.0, 0.0] {
        let fit = solve_lasso_gram(gram, xty, lambda, LassoOptions::default(), warm.as_ref())?;
        let nonzero = fit.coef.iter().filter(|c| **c != 0.0).count();
        println!(
            "lambda {lambda:>7.1}: {nonzero} nonzero, {} sweeps, KKT violation {:.1e}, coef {:?}",
            fit.sweeps,
            lasso_kkt_violation(gram, xty, &fit.coef, lambda),
            fit.coef.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>()
        );
        warm = Some(fit.coef);
    }
    Ok(())
}
