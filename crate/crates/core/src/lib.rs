//! Optimal virtual inertia and damping for inverter-based virtual
//! synchronous machines.
//!
//! The pipeline is: describe the grid ([`NetworkSpec`]), eliminate load buses
//! by Kron reduction ([`ReducedNetwork`]), assemble the grounded swing
//! model ([`assemble_state_space`]), minimize the regularized H2 objective
//! over box-bounded coefficients ([`optimize`]) and check the design in the
//! time domain ([`simulate`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lyapunov;
pub mod netmodel;
pub mod objective;
pub mod optimizer;
pub mod simulator;

pub use error::{Error, Result};
pub use lyapunov::{
    is_hurwitz, lyapunov_residual, solve_lyapunov, DenseMatrix, LyapunovSolver, Stability,
};
pub use netmodel::{
    assemble_state_space, basis, build_laplacian, check_laplacian, kron_reduce, Bounds, Bus,
    BusKind, DeviceParams, Line, NetworkSpec, ReducedNetwork, StateSpace,
};
pub use objective::{
    eval_objective, grad_h2, gramians, h2_norm_sq, h2_norm_sq_dual, objective_value,
    ObjectiveConfig, ObjectiveEval,
};
pub use optimizer::{optimize, project, DescentConfig, OptResult, Termination};
pub use simulator::{
    compare_designs, output_energy, simulate, simulate_design, Disturbance, DisturbanceKind,
    SimResult,
};

pub use nalgebra::{DMatrix, DVector};
