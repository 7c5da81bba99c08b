//! Projected gradient descent over the coefficient box
//! `α = [m; d] ∈ [lb, ub]` with Armijo backtracking along the projection arc.

use log::{debug, info};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{DeviceParams, ReducedNetwork};
use crate::objective::{eval_objective, objective_value, ObjectiveConfig, ObjectiveEval};

/// Steps below this size end the run with [`Termination::StepCollapse`].
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    /// Initial step size; also the fixed step of the stationarity residual.
    pub gamma0: f64,
    /// Cap on the step after successive expansions.
    pub gamma_max: f64,
    pub max_iter: usize,
    /// Stop when `‖α - Proj(α - γ0 ∇J)‖ ≤ grad_tol · (1 + ‖α⁰‖)`.
    pub grad_tol: f64,
    pub armijo_c: f64,
    /// Shrink factor on rejection; its inverse grows the step after a success.
    pub backtrack: f64,
    pub init_m: Option<DVector<f64>>,
    pub init_d: Option<DVector<f64>>,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            gamma0: 1e-2,
            gamma_max: 1e6,
            max_iter: 5000,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack: 0.5,
            init_m: None,
            init_d: None,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::Config("gamma0 must be positive".into()));
        }
        if !(self.gamma_max >= self.gamma0) {
            return Err(Error::Config("gamma_max must be at least gamma0".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config("backtrack must lie in (0, 1)".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Config("armijo_c must lie in (0, 1)".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config("grad_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTol,
    MaxIter,
    StepCollapse,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::GradientTol => "gradient_tol",
            Termination::MaxIter => "max_iter",
            Termination::StepCollapse => "step_collapse",
        })
    }
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub m_star: DVector<f64>,
    pub d_star: DVector<f64>,
    /// Objective at the start point followed by one entry per accepted step.
    pub j_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Projected-gradient residual at the returned point.
    pub residual: f64,
    /// Threshold the residual was compared against.
    pub tolerance: f64,
    /// Input parameters with the optimal coefficients filled in.
    pub params: DeviceParams,
}

/// Componentwise clamp of `alpha` to `[lb, ub]`.
pub fn project(alpha: &DVector<f64>, lb: &DVector<f64>, ub: &DVector<f64>) -> Result<DVector<f64>> {
    if alpha.len() != lb.len() || alpha.len() != ub.len() {
        return Err(Error::Dimension("alpha and bounds differ in length".into()));
    }
    for i in 0..lb.len() {
        if !(lb[i] <= ub[i]) {
            return Err(Error::Config(format!(
                "component {i}: lower bound {} exceeds upper bound {}",
                lb[i], ub[i]
            )));
        }
    }
    Ok(DVector::from_fn(alpha.len(), |i, _| {
        alpha[i].clamp(lb[i], ub[i])
    }))
}

fn clamp(x: &DVector<f64>, lb: &DVector<f64>, ub: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| x[i].clamp(lb[i], ub[i]))
}

fn starting_point(params: &DeviceParams, dcfg: &DescentConfig) -> Result<DeviceParams> {
    let mid_m = (&params.m_lb + &params.m_ub) * 0.5;
    let mid_d = (&params.d_lb + &params.d_ub) * 0.5;
    let m = dcfg.init_m.clone().unwrap_or(mid_m);
    let d = dcfg.init_d.clone().unwrap_or(mid_d);
    params.with_coefficients(m, d).map_err(|e| match e {
        Error::Parameter(msg) => Error::Config(format!("infeasible starting point: {msg}")),
        other => other,
    })
}

/// Minimizes `J_T` over the box from `dcfg`'s starting point (box midpoint
/// by default).
pub fn optimize(
    net: &ReducedNetwork,
    params: &DeviceParams,
    cfg: &ObjectiveConfig,
    dcfg: &DescentConfig,
    ref_bus: usize,
) -> Result<OptResult> {
    dcfg.validate()?;
    let lb = params.lower();
    let ub = params.upper();
    project(&lb, &lb, &ub)?;

    let mut current = starting_point(params, dcfg)?;
    let mut alpha = current.alpha();
    let tolerance = dcfg.grad_tol * (1.0 + alpha.norm());
    let mut eval: ObjectiveEval = eval_objective(&current, cfg, net, ref_bus)?;
    let mut j_history = vec![eval.j_total];
    let mut gamma = dcfg.gamma0;
    let mut iterations = 0;
    let mut termination = Termination::MaxIter;

    let residual_at = |alpha: &DVector<f64>, grad: &DVector<f64>| {
        (alpha - clamp(&(alpha - grad * dcfg.gamma0), &lb, &ub)).norm()
    };

    let mut residual = residual_at(&alpha, &eval.grad());
    loop {
        if residual <= tolerance {
            termination = Termination::GradientTol;
            break;
        }
        if iterations >= dcfg.max_iter {
            break;
        }
        let grad = eval.grad();
        let accepted = loop {
            if gamma < MIN_STEP {
                break None;
            }
            let trial = clamp(&(&alpha - &grad * gamma), &lb, &ub);
            let step = &trial - &alpha;
            let trial_params = current.with_alpha(&trial)?;
            match objective_value(&trial_params, cfg, net, ref_bus) {
                Ok(j) if j <= eval.j_total + dcfg.armijo_c * grad.dot(&step) => {
                    break Some((trial, trial_params));
                }
                Ok(_) | Err(Error::Stability { .. }) => gamma *= dcfg.backtrack,
                Err(e) => return Err(e),
            }
        };
        let Some((trial, trial_params)) = accepted else {
            termination = Termination::StepCollapse;
            break;
        };
        alpha = trial;
        current = trial_params;
        eval = eval_objective(&current, cfg, net, ref_bus)?;
        j_history.push(eval.j_total);
        iterations += 1;
        residual = residual_at(&alpha, &eval.grad());
        if iterations % 500 == 0 {
            debug!(
                "iter {iterations}: J = {:.12e}, residual = {residual:.3e}, gamma = {gamma:.3e}",
                eval.j_total
            );
        }
        gamma = (gamma / dcfg.backtrack).min(dcfg.gamma_max);
    }

    info!(
        "descent finished after {iterations} iterations ({termination}), J = {:.12e}",
        eval.j_total
    );
    Ok(OptResult {
        m_star: current.m.clone(),
        d_star: current.d.clone(),
        j_history,
        iterations,
        converged: termination == Termination::GradientTol,
        termination,
        residual,
        tolerance,
        params: current,
    })
}
