//! Regularized H2 objective `J_T(m, d) = ‖G‖₂² + β‖m‖²` and its gradient.
//!
//! The gradient uses the trace identity
//! `∂J/∂α = 2 tr(∂A/∂α · P Q) + tr(∂(BBᵀ)/∂α · Q) + tr(P · ∂(CᵀC)/∂α)`
//! with `P`, `Q` the two gramians, so one pair of Lyapunov solves serves
//! every partial derivative.

use nalgebra::DVector;

use crate::error::Result;
use crate::lyapunov::{DenseMatrix, LyapunovSolver};
use crate::netmodel::{assemble_state_space, DeviceParams, ReducedNetwork, StateSpace};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectiveConfig {
    /// Weight of `‖m‖²`. Negative values reward inertia; the problem is
    /// then bounded only through the box constraints.
    pub beta: f64,
    /// Known disturbance direction; `None` means one impulse channel per bus.
    pub eta: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub j_h2: f64,
    pub j_reg: f64,
    pub j_total: f64,
    pub grad_m: DVector<f64>,
    pub grad_d: DVector<f64>,
    /// Solution of `A P + P Aᵀ + B Bᵀ = 0`.
    pub p: DenseMatrix,
    /// Solution of `Aᵀ Q + Q A + Cᵀ C = 0`.
    pub q: DenseMatrix,
}

impl ObjectiveEval {
    /// Stacked gradient `[∂J/∂m; ∂J/∂d]`.
    pub fn grad(&self) -> DVector<f64> {
        let n = self.grad_m.len();
        DVector::from_fn(2 * n, |k, _| {
            if k < n {
                self.grad_m[k]
            } else {
                self.grad_d[k - n]
            }
        })
    }
}

/// Both gramians of `ss` from a single Schur factorization of `A`.
pub fn gramians(ss: &StateSpace) -> Result<(DenseMatrix, DenseMatrix)> {
    let solver = LyapunovSolver::new(&ss.a)?;
    let p = solver.solve(&(&ss.b * ss.b.transpose()))?;
    let q = solver.solve_dual(&(ss.c.transpose() * &ss.c))?;
    Ok((p, q))
}

/// `‖G‖₂² = tr(C P Cᵀ)`.
pub fn h2_norm_sq(ss: &StateSpace) -> Result<f64> {
    let p = LyapunovSolver::new(&ss.a)?.solve(&(&ss.b * ss.b.transpose()))?;
    Ok((&ss.c * p * ss.c.transpose()).trace())
}

/// `‖G‖₂² = tr(Bᵀ Q B)`, the observability-side route.
pub fn h2_norm_sq_dual(ss: &StateSpace) -> Result<f64> {
    let q = LyapunovSolver::new(&ss.a)?.solve_dual(&(ss.c.transpose() * &ss.c))?;
    Ok((ss.b.transpose() * q * &ss.b).trace())
}

/// Exact partials of `‖G‖₂²` with respect to every `m_i` and `d_i`.
pub fn grad_h2(ss: &StateSpace, params: &DeviceParams) -> Result<(DVector<f64>, DVector<f64>)> {
    let (p, q) = gramians(ss)?;
    Ok(grad_from_gramians(ss, params, &p, &q))
}

fn grad_from_gramians(
    ss: &StateSpace,
    params: &DeviceParams,
    p: &DenseMatrix,
    q: &DenseMatrix,
) -> (DVector<f64>, DVector<f64>) {
    let n = params.n();
    let m_tot = params.total_inertia();
    let pq = p * q;
    let qb = q * &ss.b;
    let mut grad_m = DVector::zeros(n);
    let mut grad_d = DVector::zeros(n);
    for i in 0..n {
        let w = ss.omega_index(i);
        let scale = -1.0 / m_tot[i];
        // ∂A/∂m_i = e_w · (-A[w,:] / M_i): only row w of A depends on m_i.
        let a_term: f64 =
            ss.a.row(w)
                .iter()
                .zip(pq.column(w).iter())
                .map(|(x, y)| x * y)
                .sum();
        // ∂B/∂m_i = e_w · (-B[w,:] / M_i), and tr(∂(BBᵀ) Q) = 2 tr(Bᵀ Q ∂B).
        let b_term: f64 =
            ss.b.row(w)
                .iter()
                .zip(qb.row(w).iter())
                .map(|(x, y)| x * y)
                .sum();
        // ∂(CᵀC)/∂m_i = e_w e_wᵀ.
        grad_m[i] = 2.0 * scale * (a_term + b_term) + p[(w, w)];
        // ∂A/∂d_i = -1/M_i at (w, w).
        grad_d[i] = 2.0 * scale * pq[(w, w)];
    }
    (grad_m, grad_d)
}

/// Evaluates `J_T` and its gradient at `params`.
pub fn eval_objective(
    params: &DeviceParams,
    cfg: &ObjectiveConfig,
    net: &ReducedNetwork,
    ref_bus: usize,
) -> Result<ObjectiveEval> {
    let ss = assemble_state_space(net, params, ref_bus, cfg.eta.as_ref())?;
    let (p, q) = gramians(&ss)?;
    let j_h2 = (&ss.c * &p * ss.c.transpose()).trace();
    let (grad_h2_m, grad_d) = grad_from_gramians(&ss, params, &p, &q);
    let j_reg = cfg.beta * params.m.norm_squared();
    let grad_m = grad_h2_m + &params.m * (2.0 * cfg.beta);
    Ok(ObjectiveEval {
        j_h2,
        j_reg,
        j_total: j_h2 + j_reg,
        grad_m,
        grad_d,
        p,
        q,
    })
}

/// Objective value only; skips the dual solve.
pub fn objective_value(
    params: &DeviceParams,
    cfg: &ObjectiveConfig,
    net: &ReducedNetwork,
    ref_bus: usize,
) -> Result<f64> {
    let ss = assemble_state_space(net, params, ref_bus, cfg.eta.as_ref())?;
    Ok(h2_norm_sq(&ss)? + cfg.beta * params.m.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{basis, Bounds};
    use nalgebra::{dmatrix, dvector};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn single_machine(m_hat: f64, d_hat: f64, b: Bounds) -> (ReducedNetwork, DeviceParams) {
        let net = ReducedNetwork {
            gen_ids: vec![1],
            laplacian: dmatrix![0.0],
        };
        let p = DeviceParams::new(dvector![m_hat], dvector![d_hat], &[b]).unwrap();
        (net, p)
    }

    #[test]
    fn scalar_h2() {
        let ss = StateSpace::from_matrices(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0]).unwrap();
        assert!((h2_norm_sq(&ss).unwrap() - 0.5).abs() < 1e-15);
        assert!((h2_norm_sq_dual(&ss).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oscillator_h2_independent_of_stiffness_and_inertia() {
        // A = [0 1; -k/m -D/m], B = [0; 1/m], C = [0 √m]: J = 1/(2D).
        for &k in &[0.5, 1.0, 2.0] {
            for &m in &[0.5f64, 1.0, 2.0] {
                let damping = 1.0;
                let a = dmatrix![0.0, 1.0; -k / m, -damping / m];
                let b = dmatrix![0.0; 1.0 / m];
                let c = dmatrix![0.0, m.sqrt()];
                let ss = StateSpace::from_matrices(a, b, c).unwrap();
                assert!(rel(h2_norm_sq(&ss).unwrap(), 0.5 / damping) < 1e-12);
            }
        }
    }

    #[test]
    fn single_machine_closed_form_gradient() {
        let b = Bounds {
            m_lb: 0.0,
            m_ub: 2.0,
            d_lb: 0.0,
            d_ub: 2.0,
        };
        let (net, params) = single_machine(1.5, 0.5, b);
        let cfg = ObjectiveConfig::default();
        let ev = eval_objective(&params, &cfg, &net, 0).unwrap();
        let dt = 0.5 + params.d[0];
        assert!(rel(ev.j_h2, 0.5 / dt) < 1e-12);
        assert!(ev.grad_m[0].abs() < 1e-12);
        assert!(rel(ev.grad_d[0], -0.5 / (dt * dt)) < 1e-12);
    }

    #[test]
    fn regularizer_arithmetic() {
        let b = Bounds {
            m_lb: 1.0,
            m_ub: 1.0,
            d_lb: 0.0,
            d_ub: 1.0,
        };
        let net = ReducedNetwork {
            gen_ids: vec![1, 2],
            laplacian: dmatrix![2.0, -2.0; -2.0, 2.0],
        };
        let params = DeviceParams::new(dvector![1.0, 2.0], dvector![0.5, 0.7], &[b; 2]).unwrap();
        let off = eval_objective(&params, &ObjectiveConfig::default(), &net, 0).unwrap();
        assert_eq!(off.j_reg, 0.0);
        assert_eq!(off.j_total, off.j_h2);

        let cfg = ObjectiveConfig {
            beta: -0.1,
            eta: None,
        };
        let on = eval_objective(&params, &cfg, &net, 0).unwrap();
        assert!((on.j_reg + 0.2).abs() < 1e-15);
        for i in 0..2 {
            assert!((on.grad_m[i] - off.grad_m[i] + 0.2).abs() < 1e-12);
            assert_eq!(on.grad_d[i], off.grad_d[i]);
        }

        let zero = Bounds {
            m_lb: 0.0,
            m_ub: 0.0,
            ..b
        };
        let params = DeviceParams::new(dvector![1.0, 2.0], dvector![0.5, 0.7], &[zero; 2]).unwrap();
        let cfg = ObjectiveConfig {
            beta: 1.0,
            eta: None,
        };
        let ev = eval_objective(&params, &cfg, &net, 0).unwrap();
        let base = eval_objective(&params, &ObjectiveConfig::default(), &net, 0).unwrap();
        assert_eq!(ev.j_reg, 0.0);
        assert_eq!(ev.grad_m, base.grad_m);
    }

    #[test]
    fn symmetric_two_bus_gradient() {
        let b = Bounds {
            m_lb: 0.0,
            m_ub: 1.0,
            d_lb: 0.0,
            d_ub: 1.0,
        };
        let net = ReducedNetwork {
            gen_ids: vec![1, 2],
            laplacian: dmatrix![3.0, -3.0; -3.0, 3.0],
        };
        let params = DeviceParams::new(dvector![1.0, 1.0], dvector![0.4, 0.4], &[b; 2]).unwrap();
        for eta in [None, Some(dvector![1.0, 1.0])] {
            let cfg = ObjectiveConfig { beta: 0.0, eta };
            let ev = eval_objective(&params, &cfg, &net, 0).unwrap();
            assert!((ev.grad_m[0] - ev.grad_m[1]).abs() < 1e-12);
            assert!(rel(ev.grad_d[0], ev.grad_d[1]) < 1e-10);
        }
    }

    #[test]
    fn known_disturbance_is_sub_system() {
        let b = Bounds {
            m_lb: 0.0,
            m_ub: 1.0,
            d_lb: 0.0,
            d_ub: 1.0,
        };
        let net = ReducedNetwork {
            gen_ids: vec![1, 2, 3],
            laplacian: dmatrix![3.0, -2.0, -1.0; -2.0, 2.5, -0.5; -1.0, -0.5, 1.5],
        };
        let params =
            DeviceParams::new(dvector![1.0, 2.0, 0.5], dvector![0.4, 0.3, 0.2], &[b; 3]).unwrap();
        let full = objective_value(&params, &ObjectiveConfig::default(), &net, 0).unwrap();
        let mut sum = 0.0;
        for i in 0..3 {
            let cfg = ObjectiveConfig {
                beta: 0.0,
                eta: Some(basis(3, i)),
            };
            let part = objective_value(&params, &cfg, &net, 0).unwrap();
            assert!(part <= full);
            sum += part;
        }
        assert!(rel(sum, full) < 1e-10);
    }
}
