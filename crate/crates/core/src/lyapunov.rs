//! Dense continuous-time Lyapunov solver.
//!
//! Solves `A X + X Aᵀ + W = 0` and the dual `Aᵀ X + X A + W = 0` with the
//! Bartels–Stewart method: one real Schur factorization `A = Z T Zᵀ`, then
//! block back-substitution on the quasi-triangular factor. The factorization
//! is kept in [`LyapunovSolver`] so both equations can be solved against the
//! same `A` for the price of one decomposition.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Matrices with spectral abscissa at or above `-STABILITY_MARGIN` are
/// rejected as not Hurwitz.
pub const STABILITY_MARGIN: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 10_000;

/// Outcome of a Hurwitz test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub hurwitz: bool,
    /// Largest real part over the spectrum.
    pub abscissa: f64,
}

fn check_square(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn real_schur(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix, f64)> {
    let schur = a
        .clone()
        .try_schur(f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("real Schur iteration did not converge".into()))?;
    let abscissa = schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let (z, t) = schur.unpack();
    Ok((z, t, abscissa))
}

/// Returns whether every eigenvalue of `a` has negative real part, along
/// with the spectral abscissa `max Re λ`.
pub fn is_hurwitz(a: &DenseMatrix) -> Result<Stability> {
    check_square(a, "A")?;
    if a.nrows() == 0 {
        return Err(Error::Dimension("A is empty".into()));
    }
    let (_, _, abscissa) = real_schur(a)?;
    Ok(Stability {
        hurwitz: abscissa < 0.0,
        abscissa,
    })
}

/// Diagonal blocks of a quasi-upper-triangular matrix as `(start, size)`.
/// Consecutive indices linked by a nonzero subdiagonal entry share a block.
fn diagonal_blocks(t: &DenseMatrix) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 0..n {
        let coupled = i + 1 < n && t[(i + 1, i)] != 0.0;
        if !coupled {
            blocks.push((start, i + 1 - start));
            start = i + 1;
        }
    }
    blocks
}

/// Solves `T_ii Y + Y T_jjᵀ = R` for a small block via its Kronecker form.
fn solve_block(
    tii: nalgebra::DMatrixView<'_, f64>,
    tjj: nalgebra::DMatrixView<'_, f64>,
    r: &DenseMatrix,
) -> Result<DenseMatrix> {
    let p = tii.nrows();
    let q = tjj.nrows();
    if p == 1 && q == 1 {
        let denom = tii[(0, 0)] + tjj[(0, 0)];
        if denom == 0.0 {
            return Err(Error::Numerical("singular Lyapunov block".into()));
        }
        return Ok(DenseMatrix::from_element(1, 1, r[(0, 0)] / denom));
    }
    let dim = p * q;
    let mut k = DenseMatrix::zeros(dim, dim);
    for b in 0..q {
        for a in 0..p {
            let row = a + b * p;
            for a2 in 0..p {
                k[(row, a2 + b * p)] += tii[(a, a2)];
            }
            for b2 in 0..q {
                k[(row, a + b2 * p)] += tjj[(b, b2)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(r.as_slice());
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov block".into()))?;
    Ok(DenseMatrix::from_column_slice(p, q, sol.as_slice()))
}

/// Solves `T Y + Y Tᵀ = C` for upper quasi-triangular `T`.
fn solve_quasi_triangular(
    t: &DenseMatrix,
    blocks: &[(usize, usize)],
    c: &DenseMatrix,
) -> Result<DenseMatrix> {
    let n = t.nrows();
    let mut y = DenseMatrix::zeros(n, n);
    for &(i0, p) in blocks.iter().rev() {
        let i_end = i0 + p;
        for &(j0, q) in blocks.iter().rev() {
            let j_end = j0 + q;
            let mut r = c.view((i0, j0), (p, q)).clone_owned();
            if i_end < n {
                r -= t.view((i0, i_end), (p, n - i_end)) * y.view((i_end, j0), (n - i_end, q));
            }
            if j_end < n {
                r -= y.view((i0, j_end), (p, n - j_end))
                    * t.view((j0, j_end), (q, n - j_end)).transpose();
            }
            let blk = solve_block(t.view((i0, i0), (p, p)), t.view((j0, j0), (q, q)), &r)?;
            y.view_mut((i0, j0), (p, q)).copy_from(&blk);
        }
    }
    Ok(y)
}

fn reverse_both(m: &DenseMatrix) -> DenseMatrix {
    let (r, c) = m.shape();
    DenseMatrix::from_fn(r, c, |i, j| m[(r - 1 - i, c - 1 - j)])
}

fn is_symmetric(w: &DenseMatrix) -> bool {
    let scale = w.norm().max(1.0);
    (w - w.transpose()).norm() <= 1e-12 * scale
}

/// Schur-factored state matrix, ready to solve Lyapunov equations.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    z: DenseMatrix,
    t: DenseMatrix,
    blocks: Vec<(usize, usize)>,
    // J Tᵀ J, the dual equation rewritten in primal (upper) form.
    t_rev: DenseMatrix,
    blocks_rev: Vec<(usize, usize)>,
    abscissa: f64,
}

impl LyapunovSolver {
    /// Factors `a`. Fails with [`Error::Stability`] when `a` is not Hurwitz
    /// with margin [`STABILITY_MARGIN`].
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        check_square(a, "A")?;
        if a.nrows() == 0 {
            return Err(Error::Dimension("A is empty".into()));
        }
        let (z, t, abscissa) = real_schur(a)?;
        if !(abscissa < -STABILITY_MARGIN) {
            return Err(Error::Stability { abscissa });
        }
        let blocks = diagonal_blocks(&t);
        let n = t.nrows();
        let t_rev = DenseMatrix::from_fn(n, n, |i, j| t[(n - 1 - j, n - 1 - i)]);
        let blocks_rev = blocks.iter().rev().map(|&(s, p)| (n - s - p, p)).collect();
        Ok(Self {
            z,
            t,
            blocks,
            t_rev,
            blocks_rev,
            abscissa,
        })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    fn check_rhs(&self, w: &DenseMatrix) -> Result<()> {
        let n = self.dim();
        if w.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "W must be {n}x{n}, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("W has non-finite entries".into()));
        }
        Ok(())
    }

    /// Solves `A X + X Aᵀ + W = 0`.
    pub fn solve(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(w)?;
        let c = -(self.z.transpose() * w * &self.z);
        let y = solve_quasi_triangular(&self.t, &self.blocks, &c)?;
        Ok(self.finish(y, w))
    }

    /// Solves the dual equation `Aᵀ X + X A + W = 0`.
    pub fn solve_dual(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(w)?;
        // Tᵀ Y + Y T = C  <=>  (J Tᵀ J)(J Y J) + (J Y J)(J T J) = J C J
        let c = -(self.z.transpose() * w * &self.z);
        let y_rev = solve_quasi_triangular(&self.t_rev, &self.blocks_rev, &reverse_both(&c))?;
        Ok(self.finish(reverse_both(&y_rev), w))
    }

    fn finish(&self, y: DenseMatrix, w: &DenseMatrix) -> DenseMatrix {
        let x = &self.z * y * self.z.transpose();
        if is_symmetric(w) {
            (&x + x.transpose()) * 0.5
        } else {
            x
        }
    }
}

/// Solves `A X + X Aᵀ + W = 0` for Hurwitz `A`.
///
/// The dual equation `Aᵀ Q + Q A + CᵀC = 0` is `solve_lyapunov(&a.transpose(), &(cᵀc))`.
pub fn solve_lyapunov(a: &DenseMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    LyapunovSolver::new(a)?.solve(w)
}

/// Frobenius norm of `A X + X Aᵀ + W`.
pub fn lyapunov_residual(a: &DenseMatrix, x: &DenseMatrix, w: &DenseMatrix) -> f64 {
    (a * x + x * a.transpose() + w).norm()
}
