//! CSV serialization. Every table has a header row and floats are written
//! with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use vsmtune_core::{DVector, DeviceParams, OptResult, ReducedNetwork, SimResult};

use crate::scenario::SweepRow;
use crate::CliError;

pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

pub fn create(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

/// Reduced Laplacian with generator ids as row and column labels.
pub fn write_reduced<W: Write>(net: &ReducedNetwork, w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    let mut header = vec!["bus".to_string()];
    header.extend(net.gen_ids.iter().map(|id| id.to_string()));
    out.write_record(&header).map_err(io_err)?;
    for (i, id) in net.gen_ids.iter().enumerate() {
        let mut row = vec![id.to_string()];
        row.extend(net.laplacian.row(i).iter().map(|&v| fmt(v)));
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_coefficients<W: Write>(
    ids: &[u32],
    params: &DeviceParams,
    w: W,
) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(["bus", "m_hat", "d_hat", "m", "d", "m_total", "d_total"])
        .map_err(io_err)?;
    for (i, id) in ids.iter().enumerate() {
        out.write_record([
            id.to_string(),
            fmt(params.m_hat[i]),
            fmt(params.d_hat[i]),
            fmt(params.m[i]),
            fmt(params.d[i]),
            fmt(params.m_hat[i] + params.m[i]),
            fmt(params.d_hat[i] + params.d[i]),
        ])
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads the `bus`, `m` and `d` columns of a coefficients table, ordered
/// as `ids`.
pub fn read_coefficients<R: Read>(
    ids: &[u32],
    r: R,
) -> Result<(DVector<f64>, DVector<f64>), CliError> {
    let bad = |msg: String| CliError::Input(format!("coefficients file: {msg}"));
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let (c_bus, c_m, c_d) = (col("bus")?, col("m")?, col("d")?);
    let mut m = vec![None; ids.len()];
    let mut d = vec![None; ids.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let id: u32 = field(c_bus)
            .parse()
            .map_err(|_| bad(format!("row {}: bad bus id", line + 1)))?;
        let k = ids
            .iter()
            .position(|&g| g == id)
            .ok_or_else(|| bad(format!("row {}: bus {id} is not a generator", line + 1)))?;
        let num = |c: usize| {
            field(c)
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad number", line + 1)))
        };
        m[k] = Some(num(c_m)?);
        d[k] = Some(num(c_d)?);
    }
    let collect = |v: Vec<Option<f64>>| -> Result<DVector<f64>, CliError> {
        let vals: Option<Vec<f64>> = v.into_iter().collect();
        vals.map(DVector::from_vec)
            .ok_or_else(|| bad("not every generator bus has a row".into()))
    };
    Ok((collect(m)?, collect(d)?))
}

pub fn write_convergence<W: Write>(opt: &OptResult, w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(["iteration", "j_total"]).map_err(io_err)?;
    for (k, j) in opt.j_history.iter().enumerate() {
        out.write_record([k.to_string(), fmt(*j)]).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_key_values<W: Write>(rows: &[(&str, String)], w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(["key", "value"]).map_err(io_err)?;
    for (k, v) in rows {
        out.write_record([*k, v.as_str()]).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// `t` followed by one `omega_<bus>` column per generator.
pub fn write_trajectory<W: Write>(ids: &[u32], sim: &SimResult, w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(ids.iter().map(|id| format!("omega_{id}")));
    out.write_record(&header).map_err(io_err)?;
    for (k, t) in sim.t.iter().enumerate() {
        let mut row = Vec::with_capacity(ids.len() + 1);
        row.push(fmt(*t));
        row.extend(sim.omega.column(k).iter().map(|&v| fmt(v)));
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Per-bus metrics; one block per labelled result.
pub fn write_metrics<W: Write>(
    ids: &[u32],
    results: &[(String, SimResult)],
    w: W,
) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record([
        "label",
        "bus",
        "rocof_max",
        "nadir",
        "settle_time",
        "omega_ss",
    ])
    .map_err(io_err)?;
    for (label, sim) in results {
        for (i, id) in ids.iter().enumerate() {
            out.write_record([
                label.clone(),
                id.to_string(),
                fmt(sim.rocof_max[i]),
                fmt(sim.nadir[i]),
                fmt(sim.settle_time[i]),
                fmt(sim.omega_ss[i]),
            ])
            .map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Sweep summary, metrics taken at reduced index `node`.
pub fn write_sweep<W: Write>(rows: &[SweepRow], node: usize, w: W) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record([
        "beta",
        "sum_m",
        "sum_d",
        "rocof_max",
        "nadir",
        "settle_time",
        "iterations",
        "termination",
        "status",
    ])
    .map_err(io_err)?;
    for row in rows {
        let rec = match &row.outcome {
            Ok(p) => vec![
                fmt(row.beta),
                fmt(p.opt.m_star.sum()),
                fmt(p.opt.d_star.sum()),
                fmt(p.sim.rocof_max[node]),
                fmt(p.sim.nadir[node]),
                fmt(p.sim.settle_time[node]),
                p.opt.iterations.to_string(),
                p.opt.termination.to_string(),
                "ok".to_string(),
            ],
            Err(msg) => {
                let mut r = vec![fmt(row.beta)];
                r.extend(std::iter::repeat_n(String::new(), 7));
                r.push(format!("error: {msg}"));
                r
            }
        };
        out.write_record(&rec).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
