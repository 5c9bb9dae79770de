//! Self-consistency of a simulated ensemble against the martingale
//! identity behind the transform: the Monte-Carlo residual must vanish
//! within its own noise plus a small quadrature/span allowance.

use rayon::prelude::*;

use cbilab::mechanisms::{BranchingMechanism, ImmigrationMechanism};
use cbilab::montecarlo::simulate_cbi_path_rep;
use cbilab::semigroup::{check_characterization, PathEnsemble};

#[test]
fn besq_ensemble_residual_is_consistent() {
    let psi = BranchingMechanism::besq();
    let phi = ImmigrationMechanism::besq();
    let (x, t, lambda, sigma) = (1.0, 1.0, 1.0, 1e-3);
    let n = 10_000u64;

    let paths: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|rep| {
            simulate_cbi_path_rep(&psi, &phi, x, t, sigma, 0xCA11, rep)
                .unwrap()
                .values
        })
        .collect();
    let times: Vec<f64> = (0..paths[0].len()).map(|i| i as f64 * sigma).collect();

    let res = check_characterization(
        PathEnsemble {
            times: &times,
            initial_value: x,
            paths: &paths,
        },
        &psi,
        &phi,
        lambda,
        t,
    )
    .unwrap();
    assert_eq!(res.n_paths, n as usize);
    assert!(
        res.residual.abs() <= 3.0 * res.stderr + 1e-2,
        "residual {} with stderr {}",
        res.residual,
        res.stderr
    );
}
