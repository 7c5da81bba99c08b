//! Network description, DC power-flow Laplacian, Kron reduction of load
//! buses and the grounded swing-equation state-space model.
//!
//! State ordering of the assembled model is
//! `[δ_1 - δ_r, …, δ_n - δ_r (skipping r), ω_1, …, ω_n]`, so a network with
//! `n` generators has `2n - 1` states.

use std::collections::{HashMap, VecDeque};

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Generator,
    Load,
}

/// Box bounds on the virtual inertia and damping of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub m_lb: f64,
    pub m_ub: f64,
    pub d_lb: f64,
    pub d_ub: f64,
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m_lb, self.m_ub, self.d_lb, self.d_ub];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("bounds must be finite".into()));
        }
        if self.m_lb < 0.0 || self.d_lb < 0.0 {
            return Err(Error::Config("lower bounds must be non-negative".into()));
        }
        if self.m_lb > self.m_ub || self.d_lb > self.d_ub {
            return Err(Error::Config(format!(
                "lower bound exceeds upper bound in {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    /// Synchronous inertia constant (s·p.u.); zero for load buses.
    #[serde(default)]
    pub m_hat: f64,
    /// Generator plus load damping (p.u./(rad/s)).
    #[serde(default)]
    pub d_hat: f64,
    /// Per-bus override of the default coefficient bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: u32,
    pub to: u32,
    /// Susceptance magnitude (p.u.).
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

impl NetworkSpec {
    /// Map from bus id to position in `buses`.
    fn index_map(&self) -> Result<HashMap<u32, usize>> {
        let mut map = HashMap::with_capacity(self.buses.len());
        for (i, bus) in self.buses.iter().enumerate() {
            if map.insert(bus.id, i).is_some() {
                return Err(Error::Validation(format!("duplicate bus id {}", bus.id)));
            }
        }
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::Validation("network has no buses".into()));
        }
        let index = self.index_map()?;
        for bus in &self.buses {
            if !bus.m_hat.is_finite() || !bus.d_hat.is_finite() {
                return Err(Error::Validation(format!(
                    "bus {}: non-finite coefficients",
                    bus.id
                )));
            }
            match bus.kind {
                BusKind::Generator => {
                    if bus.m_hat <= 0.0 {
                        return Err(Error::Validation(format!(
                            "generator bus {}: m_hat must be positive",
                            bus.id
                        )));
                    }
                    if bus.d_hat < 0.0 {
                        return Err(Error::Validation(format!(
                            "generator bus {}: d_hat must be non-negative",
                            bus.id
                        )));
                    }
                }
                BusKind::Load => {
                    if bus.m_hat != 0.0 {
                        return Err(Error::Validation(format!(
                            "load bus {}: m_hat must be zero",
                            bus.id
                        )));
                    }
                }
            }
            if let Some(b) = &bus.bounds {
                b.validate()
                    .map_err(|e| Error::Validation(format!("bus {}: {e}", bus.id)))?;
            }
        }
        if !self.buses.iter().any(|b| b.kind == BusKind::Generator) {
            return Err(Error::Validation("network has no generator bus".into()));
        }
        for (k, line) in self.lines.iter().enumerate() {
            for end in [line.from, line.to] {
                if !index.contains_key(&end) {
                    return Err(Error::Validation(format!(
                        "line {k} ({} -> {}): unknown bus {end}",
                        line.from, line.to
                    )));
                }
            }
            if line.from == line.to {
                return Err(Error::Validation(format!(
                    "line {k}: self-loop at bus {}",
                    line.from
                )));
            }
            if !(line.b > 0.0 && line.b.is_finite()) {
                return Err(Error::Validation(format!(
                    "line {k} ({} -> {}): susceptance must be positive",
                    line.from, line.to
                )));
            }
        }
        self.check_connected(&index)
    }

    fn check_connected(&self, index: &HashMap<u32, usize>) -> Result<()> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for line in &self.lines {
            let (i, j) = (index[&line.from], index[&line.to]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!(
                "network is disconnected: bus {} unreachable from bus {}",
                self.buses[k].id, self.buses[0].id
            )));
        }
        Ok(())
    }

    pub fn generator_indices(&self) -> Vec<usize> {
        self.indices_of(BusKind::Generator)
    }

    pub fn load_indices(&self) -> Vec<usize> {
        self.indices_of(BusKind::Load)
    }

    fn indices_of(&self, kind: BusKind) -> Vec<usize> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn generators(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.kind == BusKind::Generator)
    }
}

/// Full bus susceptance Laplacian, rows ordered as `spec.buses`.
pub fn build_laplacian(spec: &NetworkSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let index = spec.index_map()?;
    let n = spec.buses.len();
    let mut l = DMatrix::zeros(n, n);
    for line in &spec.lines {
        let (i, j) = (index[&line.from], index[&line.to]);
        l[(i, i)] += line.b;
        l[(j, j)] += line.b;
        l[(i, j)] -= line.b;
        l[(j, i)] -= line.b;
    }
    Ok(l)
}

/// Schur complement `L_gg - L_gl L_ll⁻¹ L_lg` eliminating `load_indices`.
///
/// Returns the reduced matrix with the kept rows in ascending index order.
pub fn kron_reduce(l_full: &DenseMatrix, load_indices: &[usize]) -> Result<DenseMatrix> {
    let n = l_full.nrows();
    if l_full.ncols() != n {
        return Err(Error::Dimension("Laplacian must be square".into()));
    }
    let mut is_load = vec![false; n];
    for &k in load_indices {
        if k >= n {
            return Err(Error::Dimension(format!("load index {k} out of range")));
        }
        if is_load[k] {
            return Err(Error::Validation(format!("load index {k} repeated")));
        }
        is_load[k] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !is_load[i]).collect();
    let loads: Vec<usize> = (0..n).filter(|&i| is_load[i]).collect();
    if loads.is_empty() {
        return Ok(l_full.clone());
    }
    if keep.is_empty() {
        return Err(Error::SingularLoadBlock);
    }

    // Every load bus must reach a kept bus through nonzero couplings,
    // otherwise L_ll has a zero eigenvalue.
    let mut reaches = is_load.iter().map(|l| !l).collect::<Vec<_>>();
    let mut queue: VecDeque<usize> = keep.iter().copied().collect();
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !reaches[j] && l_full[(i, j)] != 0.0 {
                reaches[j] = true;
                queue.push_back(j);
            }
        }
    }
    if reaches.iter().any(|r| !r) {
        return Err(Error::SingularLoadBlock);
    }

    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| l_full[(rows[i], cols[j])])
    };
    let l_gg = pick(&keep, &keep);
    let l_gl = pick(&keep, &loads);
    let l_ll = pick(&loads, &loads);
    let chol = l_ll.cholesky().ok_or(Error::SingularLoadBlock)?;
    let x = chol.solve(&l_gl.transpose());
    let mut red = l_gg - l_gl * x;
    red = (&red + red.transpose()) * 0.5;
    // Restore exact zero row sums lost to rounding.
    for i in 0..red.nrows() {
        let off: f64 = (0..red.ncols())
            .filter(|&j| j != i)
            .map(|j| red[(i, j)])
            .sum();
        red[(i, i)] = -off;
    }
    Ok(red)
}

/// Checks the Laplacian structure: symmetric, zero row sums and
/// non-positive off-diagonals, all to `tol`.
pub fn check_laplacian(l: &DenseMatrix, tol: f64) -> Result<()> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::Dimension("Laplacian must be square".into()));
    }
    for i in 0..n {
        let row_sum: f64 = l.row(i).iter().sum();
        if row_sum.abs() > tol {
            return Err(Error::Validation(format!("row {i} sums to {row_sum:e}")));
        }
        for j in 0..n {
            if (l[(i, j)] - l[(j, i)]).abs() > tol {
                return Err(Error::Validation(format!("asymmetric at ({i},{j})")));
            }
            if i != j && l[(i, j)] > tol {
                return Err(Error::Validation(format!(
                    "positive off-diagonal at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Generator-only network after Kron reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    pub gen_ids: Vec<u32>,
    pub laplacian: DenseMatrix,
}

impl ReducedNetwork {
    pub fn from_spec(spec: &NetworkSpec) -> Result<Self> {
        let l_full = build_laplacian(spec)?;
        for bus in spec.buses.iter().filter(|b| b.kind == BusKind::Load) {
            if bus.d_hat != 0.0 {
                warn!(
                    "load bus {}: d_hat = {} is dropped by Kron reduction",
                    bus.id, bus.d_hat
                );
            }
        }
        let laplacian = kron_reduce(&l_full, &spec.load_indices())?;
        let gen_ids = spec.generators().map(|b| b.id).collect();
        Ok(Self { gen_ids, laplacian })
    }

    pub fn n(&self) -> usize {
        self.gen_ids.len()
    }

    /// Position of generator bus `id` in the reduced ordering.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.gen_ids.iter().position(|&g| g == id)
    }
}

/// Fixed synchronous coefficients plus the designed virtual coefficients
/// and their bounds, one entry per generator of the reduced network.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub m_hat: DVector<f64>,
    pub d_hat: DVector<f64>,
    pub m: DVector<f64>,
    pub d: DVector<f64>,
    pub m_lb: DVector<f64>,
    pub m_ub: DVector<f64>,
    pub d_lb: DVector<f64>,
    pub d_ub: DVector<f64>,
}

impl DeviceParams {
    /// Builds parameters with the decision variables at the box midpoint.
    pub fn new(m_hat: DVector<f64>, d_hat: DVector<f64>, bounds: &[Bounds]) -> Result<Self> {
        let n = m_hat.len();
        if d_hat.len() != n || bounds.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} entries for m_hat, d_hat and bounds"
            )));
        }
        for b in bounds {
            b.validate()?;
        }
        let col = |f: &dyn Fn(&Bounds) -> f64| DVector::from_iterator(n, bounds.iter().map(f));
        let m_lb = col(&|b| b.m_lb);
        let m_ub = col(&|b| b.m_ub);
        let d_lb = col(&|b| b.d_lb);
        let d_ub = col(&|b| b.d_ub);
        let m = (&m_lb + &m_ub) * 0.5;
        let d = (&d_lb + &d_ub) * 0.5;
        let params = Self {
            m_hat,
            d_hat,
            m,
            d,
            m_lb,
            m_ub,
            d_lb,
            d_ub,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for the generators of `spec`, with per-bus bound
    /// overrides taking precedence over `default_bounds`.
    pub fn from_spec(spec: &NetworkSpec, default_bounds: &Bounds) -> Result<Self> {
        let gens: Vec<&Bus> = spec.generators().collect();
        let n = gens.len();
        let m_hat = DVector::from_iterator(n, gens.iter().map(|b| b.m_hat));
        let d_hat = DVector::from_iterator(n, gens.iter().map(|b| b.d_hat));
        let bounds: Vec<Bounds> = gens
            .iter()
            .map(|b| b.bounds.unwrap_or(*default_bounds))
            .collect();
        Self::new(m_hat, d_hat, &bounds)
    }

    pub fn n(&self) -> usize {
        self.m_hat.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for v in [
            &self.d_hat,
            &self.m,
            &self.d,
            &self.m_lb,
            &self.m_ub,
            &self.d_lb,
            &self.d_ub,
        ] {
            if v.len() != n {
                return Err(Error::Dimension(
                    "parameter vectors differ in length".into(),
                ));
            }
        }
        for i in 0..n {
            let within = |lb: f64, x: f64, ub: f64| 0.0 <= lb && lb <= x && x <= ub;
            if !within(self.m_lb[i], self.m[i], self.m_ub[i]) {
                return Err(Error::Parameter(format!(
                    "bus {i}: m = {} outside [{}, {}]",
                    self.m[i], self.m_lb[i], self.m_ub[i]
                )));
            }
            if !within(self.d_lb[i], self.d[i], self.d_ub[i]) {
                return Err(Error::Parameter(format!(
                    "bus {i}: d = {} outside [{}, {}]",
                    self.d[i], self.d_lb[i], self.d_ub[i]
                )));
            }
        }
        self.check_totals()
    }

    fn check_totals(&self) -> Result<()> {
        for i in 0..self.n() {
            let (mt, dt) = (self.m_hat[i] + self.m[i], self.d_hat[i] + self.d[i]);
            if !(mt > 0.0) || !(dt > 0.0) {
                return Err(Error::Parameter(format!(
                    "bus {i}: total inertia {mt} and damping {dt} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn total_inertia(&self) -> DVector<f64> {
        &self.m_hat + &self.m
    }

    pub fn total_damping(&self) -> DVector<f64> {
        &self.d_hat + &self.d
    }

    /// Copy with new decision variables, checked against the bounds.
    pub fn with_coefficients(&self, m: DVector<f64>, d: DVector<f64>) -> Result<Self> {
        let next = Self {
            m,
            d,
            ..self.clone()
        };
        next.validate()?;
        Ok(next)
    }

    /// Stacked decision vector `[m; d]`.
    pub fn alpha(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(2 * n, |k, _| if k < n { self.m[k] } else { self.d[k - n] })
    }

    pub fn lower(&self) -> DVector<f64> {
        stack(&self.m_lb, &self.d_lb)
    }

    pub fn upper(&self) -> DVector<f64> {
        stack(&self.m_ub, &self.d_ub)
    }

    /// Copy with decision variables taken from a stacked `[m; d]` vector.
    pub fn with_alpha(&self, alpha: &DVector<f64>) -> Result<Self> {
        let n = self.n();
        if alpha.len() != 2 * n {
            return Err(Error::Dimension(format!(
                "alpha must have length {}",
                2 * n
            )));
        }
        self.with_coefficients(alpha.rows(0, n).into_owned(), alpha.rows(n, n).into_owned())
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.len();
    DVector::from_fn(n + b.len(), |k, _| if k < n { a[k] } else { b[k - n] })
}

/// Grounded linear swing-equation model `ẋ = A x + B u`, `z = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
    pub ref_bus: usize,
    pub eta: Option<DVector<f64>>,
}

impl StateSpace {
    /// Wraps arbitrary matrices; used for generic systems outside the
    /// network model.
    pub fn from_matrices(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "incompatible shapes A {:?}, B {:?}, C {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            ref_bus: 0,
            eta: None,
        })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    /// Number of buses, assuming the grounded swing layout.
    pub fn n_buses(&self) -> usize {
        self.n_states().div_ceil(2)
    }

    /// State index of `ω_i`.
    pub fn omega_index(&self, bus: usize) -> usize {
        self.n_buses() - 1 + bus
    }
}

/// Assembles the grounded state-space model with `ref_bus` as the angle
/// reference. `eta` selects the known-disturbance single-input variant.
pub fn assemble_state_space(
    net: &ReducedNetwork,
    params: &DeviceParams,
    ref_bus: usize,
    eta: Option<&DVector<f64>>,
) -> Result<StateSpace> {
    let n = net.n();
    if params.n() != n || net.laplacian.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "network has {n} generators but parameters have {}",
            params.n()
        )));
    }
    if ref_bus >= n {
        return Err(Error::Config(format!(
            "reference bus index {ref_bus} out of range for {n} generators"
        )));
    }
    if let Some(eta) = eta {
        if eta.len() != n {
            return Err(Error::Dimension(format!("eta must have length {n}")));
        }
    }
    params.check_totals()?;
    let m_tot = params.total_inertia();
    let d_tot = params.total_damping();

    let ns = 2 * n - 1;
    let na = n - 1;
    let angle_col = |j: usize| if j < ref_bus { j } else { j - 1 };

    let mut a = DMatrix::zeros(ns, ns);
    for i in (0..n).filter(|&i| i != ref_bus) {
        let row = angle_col(i);
        a[(row, na + i)] = 1.0;
        a[(row, na + ref_bus)] = -1.0;
    }
    for i in 0..n {
        let row = na + i;
        let inv_m = 1.0 / m_tot[i];
        for j in (0..n).filter(|&j| j != ref_bus) {
            a[(row, angle_col(j))] = -inv_m * net.laplacian[(i, j)];
        }
        a[(row, row)] = -inv_m * d_tot[i];
    }

    let b = match eta {
        None => {
            let mut b = DMatrix::zeros(ns, n);
            for i in 0..n {
                b[(na + i, i)] = 1.0 / m_tot[i];
            }
            b
        }
        Some(eta) => {
            let mut b = DMatrix::zeros(ns, 1);
            for i in 0..n {
                b[(na + i, 0)] = eta[i] / m_tot[i];
            }
            b
        }
    };

    let mut c = DMatrix::zeros(n, ns);
    for i in 0..n {
        c[(i, na + i)] = m_tot[i].sqrt();
    }

    Ok(StateSpace {
        a,
        b,
        c,
        ref_bus,
        eta: eta.cloned(),
    })
}

/// Standard basis vector `e_i` of length `n`.
pub fn basis(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}
