//! Workflows shared by the subcommands: optimize, compare designs, sweep β.

use rayon::prelude::*;
use vsmtune_core::{
    basis, compare_designs, optimize, simulate_design, Bounds, DVector, DescentConfig,
    DeviceParams, Disturbance, ObjectiveConfig, OptResult, ReducedNetwork, SimResult,
};

use crate::network_file::{DisturbanceSpec, NetworkFile};
use crate::CliError;

pub const LABEL_MIN_INERTIA: &str = "dmax_mmin";
pub const LABEL_OPTIMAL: &str = "dopt_mopt";
pub const LABEL_MAX_INERTIA: &str = "dmax_mmax";

/// Where projected gradient descent starts inside the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedPoint {
    Midpoint,
    Lower,
    Upper,
    /// `lb + t (ub - lb)` for `t` in `[0, 1]`.
    Fraction(f64),
}

impl std::str::FromStr for SeedPoint {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "midpoint" | "mid" => Ok(Self::Midpoint),
            "lower" | "lb" => Ok(Self::Lower),
            "upper" | "ub" => Ok(Self::Upper),
            other => match other.parse::<f64>() {
                Ok(t) if (0.0..=1.0).contains(&t) => Ok(Self::Fraction(t)),
                _ => Err(CliError::Input(format!(
                    "invalid seed point '{other}' (midpoint, lower, upper or a number in [0, 1])"
                ))),
            },
        }
    }
}

impl SeedPoint {
    fn fraction(self) -> f64 {
        match self {
            SeedPoint::Midpoint => 0.5,
            SeedPoint::Lower => 0.0,
            SeedPoint::Upper => 1.0,
            SeedPoint::Fraction(t) => t,
        }
    }

    /// Sets the starting point of `dcfg` for the box of `params`.
    pub fn apply(self, params: &DeviceParams, dcfg: &mut DescentConfig) {
        let t = self.fraction();
        dcfg.init_m = Some(&params.m_lb + (&params.m_ub - &params.m_lb) * t);
        dcfg.init_d = Some(&params.d_lb + (&params.d_ub - &params.d_lb) * t);
    }
}

/// A parsed network with its reduced model and coefficient bounds.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: NetworkFile,
    pub net: ReducedNetwork,
    /// Decision variables at the box midpoint.
    pub base: DeviceParams,
    /// Index of the reference generator in the reduced ordering.
    pub ref_index: usize,
}

impl Scenario {
    /// `bounds` replaces the file's default bounds; per-bus overrides in the
    /// file still take precedence. `ref_bus` is a bus id.
    pub fn new(
        file: NetworkFile,
        bounds: Option<Bounds>,
        ref_bus: Option<u32>,
    ) -> Result<Self, CliError> {
        let net = ReducedNetwork::from_spec(&file.spec)?;
        let bounds = bounds.unwrap_or(file.defaults.bounds);
        let base = DeviceParams::from_spec(&file.spec, &bounds)?;
        let ref_id = ref_bus.or(file.defaults.ref_bus).unwrap_or(net.gen_ids[0]);
        let ref_index = net.index_of(ref_id).ok_or_else(|| {
            CliError::Input(format!("reference bus {ref_id} is not a generator bus"))
        })?;
        Ok(Self {
            file,
            net,
            base,
            ref_index,
        })
    }

    pub fn bundled() -> Result<Self, CliError> {
        Self::new(NetworkFile::bundled()?, None, None)
    }

    pub fn n(&self) -> usize {
        self.net.n()
    }

    /// Reduced index of generator bus `id`.
    pub fn index_of(&self, id: u32) -> Result<usize, CliError> {
        self.net
            .index_of(id)
            .ok_or_else(|| CliError::Input(format!("bus {id} is not a generator bus")))
    }

    pub fn disturbance(&self, spec: &DisturbanceSpec) -> Result<Disturbance, CliError> {
        Ok(Disturbance {
            kind: spec.kind,
            node: self.index_of(spec.node)?,
            magnitude: spec.magnitude,
        })
    }

    /// Objective settings; `known_node` selects the single-channel `B·e_node`
    /// formulation.
    pub fn objective_config(&self, beta: f64, known_node: Option<usize>) -> ObjectiveConfig {
        ObjectiveConfig {
            beta,
            eta: known_node.map(|k| basis(self.n(), k)),
        }
    }

    pub fn optimize(
        &self,
        beta: f64,
        known_node: Option<usize>,
        dcfg: &DescentConfig,
    ) -> Result<OptResult, CliError> {
        if !beta.is_finite() {
            return Err(CliError::Input("beta must be finite".into()));
        }
        let cfg = self.objective_config(beta, known_node);
        Ok(optimize(&self.net, &self.base, &cfg, dcfg, self.ref_index)?)
    }

    /// Maximum damping with minimum inertia.
    pub fn min_inertia_design(&self) -> DeviceParams {
        self.base
            .with_coefficients(self.base.m_lb.clone(), self.base.d_ub.clone())
            .expect("bounds are feasible")
    }

    /// Maximum damping with maximum inertia.
    pub fn max_inertia_design(&self) -> DeviceParams {
        self.base
            .with_coefficients(self.base.m_ub.clone(), self.base.d_ub.clone())
            .expect("bounds are feasible")
    }

    /// Coefficients read from a file, checked against the bounds.
    pub fn design(&self, m: DVector<f64>, d: DVector<f64>) -> Result<DeviceParams, CliError> {
        Ok(self.base.with_coefficients(m, d)?)
    }

    pub fn simulate(
        &self,
        params: &DeviceParams,
        dist: &Disturbance,
        horizon: f64,
        dt: f64,
    ) -> Result<SimResult, CliError> {
        Ok(simulate_design(
            &self.net,
            params,
            self.ref_index,
            dist,
            horizon,
            dt,
        )?)
    }

    /// Simulates the minimum-inertia, optimal and maximum-inertia designs.
    pub fn compare(
        &self,
        optimal: &DeviceParams,
        dist: &Disturbance,
        horizon: f64,
        dt: f64,
    ) -> Result<Vec<(String, SimResult)>, CliError> {
        let variants = vec![
            (LABEL_MIN_INERTIA.to_string(), self.min_inertia_design()),
            (LABEL_OPTIMAL.to_string(), optimal.clone()),
            (LABEL_MAX_INERTIA.to_string(), self.max_inertia_design()),
        ];
        Ok(compare_designs(
            &self.net,
            &variants,
            self.ref_index,
            dist,
            horizon,
            dt,
        )?)
    }

    /// One optimize + simulate per β, run in parallel; failures are kept
    /// per row and do not stop the sweep.
    pub fn sweep_beta(
        &self,
        betas: &[f64],
        known_node: Option<usize>,
        dcfg: &DescentConfig,
        dist: &Disturbance,
        horizon: f64,
        dt: f64,
    ) -> Vec<SweepRow> {
        betas
            .par_iter()
            .map(|&beta| {
                let outcome = self.optimize(beta, known_node, dcfg).and_then(|opt| {
                    let sim = self.simulate(&opt.params, dist, horizon, dt)?;
                    Ok(SweepPoint { opt, sim })
                });
                SweepRow {
                    beta,
                    outcome: outcome.map_err(|e| e.to_string()),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub opt: OptResult,
    pub sim: SimResult,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub beta: f64,
    pub outcome: Result<SweepPoint, String>,
}
