//! Time-domain response of the linear model to step and impulse power
//! disturbances, with the frequency metrics used to compare designs.
//!
//! Integration is exact for piecewise-constant inputs: the state is
//! propagated with `Φ = exp(A·dt)` and `Γ = A⁻¹(Φ - I)·b`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{is_hurwitz, STABILITY_MARGIN};
use crate::netmodel::{assemble_state_space, DeviceParams, ReducedNetwork, StateSpace};

/// Settling band as a fraction of `max(|ω_ss|, nadir)`.
pub const SETTLE_FRACTION: f64 = 0.02;
pub const DEFAULT_HORIZON: f64 = 25.0;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceKind {
    Step,
    Impulse,
}

impl std::str::FromStr for DisturbanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Self::Step),
            "impulse" => Ok(Self::Impulse),
            other => Err(Error::Config(format!(
                "unknown disturbance kind '{other}' (expected step or impulse)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    pub kind: DisturbanceKind,
    /// Generator index in the reduced network.
    pub node: usize,
    /// Power imbalance (p.u.).
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub t: Vec<f64>,
    /// Δω trajectories, one row per bus.
    pub omega: DMatrix<f64>,
    pub rocof_max: DVector<f64>,
    pub nadir: DVector<f64>,
    /// Time after which each bus stays in its settling band; infinite when
    /// the band is not reached within the horizon.
    pub settle_time: DVector<f64>,
    pub omega_ss: DVector<f64>,
    /// `‖A x_ss + B u‖` at the reported steady state.
    pub steady_state_residual: f64,
    pub warnings: Vec<String>,
}

/// Largest sample of `|v|`, refined by a parabola through the neighbours
/// when the peak is interior.
fn peak_abs(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.map(f64::abs).collect();
    let Some((k, &peak)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
    else {
        return 0.0;
    };
    if k == 0 || k + 1 == v.len() {
        return peak;
    }
    let (y0, y1, y2) = (v[k - 1], peak, v[k + 1]);
    let curv = y0 - 2.0 * y1 + y2;
    if curv >= 0.0 {
        return peak;
    }
    let shift = 0.5 * (y0 - y2) / curv;
    (y1 - 0.25 * (y0 - y2) * shift).max(peak)
}

fn settle_time(t: &[f64], w: impl Iterator<Item = f64>, target: f64, band: f64) -> f64 {
    let excess: Vec<f64> = w.map(|x| (x - target).abs() - band).collect();
    match excess.iter().rposition(|&e| e > 0.0) {
        None => 0.0,
        Some(k) if k + 1 == excess.len() => f64::INFINITY,
        Some(k) => {
            let (e0, e1) = (excess[k], excess[k + 1]);
            t[k] + (t[k + 1] - t[k]) * e0 / (e0 - e1)
        }
    }
}

/// Integrates `ss` under `dist` over `[0, horizon]` with step `dt`.
///
/// The input column is `B[:, node]` when `B` has one column per bus and
/// the single column of a known-disturbance model otherwise.
pub fn simulate(ss: &StateSpace, dist: &Disturbance, horizon: f64, dt: f64) -> Result<SimResult> {
    let n_states = ss.n_states();
    let n = ss.n_buses();
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config("dt must be positive".into()));
    }
    if !(horizon >= 20.0 * dt && horizon.is_finite()) {
        return Err(Error::Config("horizon must be at least 20 dt".into()));
    }
    if dist.node >= n {
        return Err(Error::Config(format!(
            "disturbance node {} out of range for {n} buses",
            dist.node
        )));
    }
    if !dist.magnitude.is_finite() {
        return Err(Error::Config("disturbance magnitude must be finite".into()));
    }
    let stab = is_hurwitz(&ss.a)?;
    if !(stab.abscissa < -STABILITY_MARGIN) {
        return Err(Error::Stability {
            abscissa: stab.abscissa,
        });
    }
    let b_in: DVector<f64> = match ss.b.ncols() {
        c if c == n => ss.b.column(dist.node).into_owned(),
        1 => ss.b.column(0).into_owned(),
        c => {
            return Err(Error::Dimension(format!(
                "B has {c} columns; expected 1 or {n}"
            )))
        }
    };

    let mut warnings = Vec::new();
    let fastest =
        ss.a.complex_eigenvalues()
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max);
    if fastest > 0.0 && dt >= 1.0 / fastest {
        warnings.push(format!(
            "dt = {dt} is not below the fastest time constant {:.3e} s",
            1.0 / fastest
        ));
    }

    let a_inv =
        ss.a.clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("state matrix is singular".into()))?;
    let phi = (&ss.a * dt).exp();
    let gamma = &a_inv * (&phi - DMatrix::identity(n_states, n_states)) * &b_in;

    let (mut x, u) = match dist.kind {
        DisturbanceKind::Step => (DVector::zeros(n_states), dist.magnitude),
        DisturbanceKind::Impulse => (&b_in * dist.magnitude, 0.0),
    };
    let steps = (horizon / dt).round() as usize;
    let w0 = n - 1;
    let mut t = Vec::with_capacity(steps + 1);
    let mut omega = DMatrix::zeros(n, steps + 1);
    let mut rocof = DMatrix::zeros(n, steps + 1);
    let drive = &b_in * u;
    for k in 0..=steps {
        t.push(k as f64 * dt);
        let xdot = &ss.a * &x + &drive;
        for i in 0..n {
            omega[(i, k)] = x[w0 + i];
            rocof[(i, k)] = xdot[w0 + i];
        }
        if k < steps {
            x = &phi * &x + &gamma * u;
        }
    }
    if omega.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("trajectory diverged".into()));
    }

    let x_ss = -(&a_inv * &drive);
    let steady_state_residual = (&ss.a * &x_ss + &drive).norm();
    let omega_ss = DVector::from_fn(n, |i, _| x_ss[w0 + i]);

    let rocof_max = DVector::from_fn(n, |i, _| peak_abs(rocof.row(i).iter().copied()));
    let nadir = DVector::from_fn(n, |i, _| peak_abs(omega.row(i).iter().copied()));
    let settle = DVector::from_fn(n, |i, _| {
        let band = SETTLE_FRACTION * omega_ss[i].abs().max(nadir[i]);
        settle_time(&t, omega.row(i).iter().copied(), omega_ss[i], band)
    });
    if settle.iter().any(|s| s.is_infinite()) {
        warnings.push("some buses do not settle within the horizon".into());
    }

    Ok(SimResult {
        t,
        omega,
        rocof_max,
        nadir,
        settle_time: settle,
        omega_ss,
        steady_state_residual,
        warnings,
    })
}

/// Trapezoidal estimate of `∫ Σ_i w_i Δω_i(t)² dt` over the simulated horizon.
pub fn output_energy(res: &SimResult, weights: &DVector<f64>) -> f64 {
    let power: Vec<f64> = (0..res.t.len())
        .map(|k| {
            (0..res.omega.nrows())
                .map(|i| weights[i] * res.omega[(i, k)].powi(2))
                .sum()
        })
        .collect();
    res.t
        .windows(2)
        .zip(power.windows(2))
        .map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1]))
        .sum()
}

/// Simulates one coefficient design on the per-bus input model.
pub fn simulate_design(
    net: &ReducedNetwork,
    params: &DeviceParams,
    ref_bus: usize,
    dist: &Disturbance,
    horizon: f64,
    dt: f64,
) -> Result<SimResult> {
    let ss = assemble_state_space(net, params, ref_bus, None)?;
    simulate(&ss, dist, horizon, dt)
}

/// Simulates every labelled design under the same disturbance, preserving
/// the input order.
pub fn compare_designs(
    net: &ReducedNetwork,
    variants: &[(String, DeviceParams)],
    ref_bus: usize,
    dist: &Disturbance,
    horizon: f64,
    dt: f64,
) -> Result<Vec<(String, SimResult)>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(label, params)| {
                scope.spawn(move || {
                    simulate_design(net, params, ref_bus, dist, horizon, dt)
                        .map(|r| (label.clone(), r))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
