mod common;

use common::{random_hurwitz, random_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vsmtune_core::{lyapunov_residual, solve_lyapunov, DMatrix, LyapunovSolver};

/// Dense Kronecker solve of `(I⊗A + A⊗I) vec(X) = -vec(W)`.
fn kronecker_solve(a: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, w.as_slice());
    let x = k.lu().solve(&rhs).expect("Kronecker system is nonsingular");
    DMatrix::from_column_slice(n, n, x.as_slice())
}

#[test]
fn matches_kronecker_vectorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.gen_range(1..=12);
        let a = random_hurwitz(&mut rng, n);
        let g = random_matrix(&mut rng, n, n);
        let w = &g * g.transpose();
        let x = solve_lyapunov(&a, &w).unwrap();
        let x_ref = kronecker_solve(&a, &w);
        assert!((&x - &x_ref).norm() <= 1e-9 * x_ref.norm().max(1.0));
    }
}

#[test]
fn residual_symmetry_and_psd_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let n = rng.gen_range(2..=40);
        let a = random_hurwitz(&mut rng, n);
        let cols = rng.gen_range(1..=n);
        let g = random_matrix(&mut rng, n, cols);
        let w = &g * g.transpose();
        let x = solve_lyapunov(&a, &w).unwrap();
        assert!(lyapunov_residual(&a, &x, &w) <= 1e-8 * w.norm().max(1.0));
        assert_eq!(x, x.transpose());
        let min_eig = x.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig >= -1e-9 * x.norm());
    }
}

#[test]
fn solution_is_linear_in_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = random_hurwitz(&mut rng, 9);
    let solver = LyapunovSolver::new(&a).unwrap();
    let w1 = random_matrix(&mut rng, 9, 9);
    let w2 = random_matrix(&mut rng, 9, 9);
    let x = solver.solve(&(&w1 * 2.5 - &w2)).unwrap();
    let y = solver.solve(&w1).unwrap() * 2.5 - solver.solve(&w2).unwrap();
    assert!((&x - &y).norm() <= 1e-10 * y.norm());
}

#[test]
fn dual_solve_matches_transposed_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in [3, 8, 17] {
        let a = random_hurwitz(&mut rng, n);
        let g = random_matrix(&mut rng, n, n);
        let w = &g * g.transpose();
        let q = LyapunovSolver::new(&a).unwrap().solve_dual(&w).unwrap();
        let at = a.transpose();
        assert!(lyapunov_residual(&at, &q, &w) <= 1e-8 * w.norm().max(1.0));
    }
}
