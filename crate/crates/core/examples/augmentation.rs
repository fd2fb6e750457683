//! Feature augmentation on a Scenario-1 instance.
//!
//! Reduces the observed features, builds the complement basis, stacks the
//! augmented features and checks that the true reward vector is exactly
//! linear in them.
//!
//! ```bash
//! cargo run -p rolf --example augmentation -- 3
//! ```

use rolf::env::{generate_instance, true_dh, true_mu_star, FeatureCase, ScenarioConfig};
use rolf::linalg::augment_observed;

fn main() -> rolf::Result<()> {
    let case: u8 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("case must be 1, 2 or 3"))
        .unwrap_or(1);
    let cfg = ScenarioConfig::partially_observed(FeatureCase::from_number(case)?, 7);
    let inst = generate_instance(&cfg)?;
    let (obs, basis, aug) = augment_observed(&inst.x())?;

    println!("case {case}: K = {}, d = {}, d_u = {}", inst.arms(), inst.observed_dim(), inst.latent_dim());
    println!("observed rank {}, complement basis has {} rows", obs.dim(), basis.len());
    println!(
        "augmented Gram: sigma_min^2 = {:.4}, sigma_max^2 = {:.3}",
        aug.sigma_min_sq(),
        aug.sigma_max_sq()
    );

    let orth = (basis.matrix() * obs.matrix().transpose()).amax();
    let ortho = (basis.matrix() * basis.matrix().transpose()
        - nalgebra::DMatrix::identity(basis.len(), basis.len()))
    .amax();
    println!("|B X^T|_max = {orth:.2e}, |B B^T - I|_max = {ortho:.2e}");

    let mu = true_mu_star(&inst, &basis)?;
    let recon = (aug.values(&mu) - inst.expected_rewards()).amax();
    println!("reconstruction error of expected rewards: {recon:.2e}");
    println!("d_h = {} (latent coefficients above 1e-8)", true_dh(&inst, &basis, 1e-8)?);
    Ok(())
}
