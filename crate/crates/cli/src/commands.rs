//! Subcommand definitions and drivers.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use vsmtune_core::{Bounds, DescentConfig, DeviceParams, Disturbance, DisturbanceKind, OptResult};

use crate::network_file::{DisturbanceSpec, NetworkFile};
use crate::output::{self, create, fmt};
use crate::scenario::{Scenario, SeedPoint, LABEL_OPTIMAL};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "vsmtune",
    version,
    about = "Optimal virtual inertia and damping design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kron-reduce load buses and print the generator Laplacian.
    Reduce {
        #[arg(long)]
        network: Option<PathBuf>,
        /// Also write reduced_laplacian.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize the virtual coefficients. Passing --disturb-node switches
    /// to the known-disturbance-location formulation.
    Optimize(RunArgs),
    /// Simulate one design.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Coefficients CSV (as written by `optimize`).
        #[arg(long, conflicts_with = "variant")]
        coeffs: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Variant::Opt)]
        variant: Variant,
        /// Optimize for the disturbance location when the variant is `opt`.
        #[arg(long)]
        known_location: bool,
    },
    /// Simulate the minimum-inertia, optimal and maximum-inertia designs.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Use these optimal coefficients instead of optimizing.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long)]
        known_location: bool,
    },
    /// Optimize and simulate for each β.
    SweepBeta {
        #[command(flatten)]
        run: RunArgs,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-0.2,-0.1,0,0.1,0.2"
        )]
        betas: Vec<f64>,
        #[arg(long)]
        known_location: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Opt,
    DmaxMmin,
    DmaxMmax,
    Midpoint,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Network JSON file; the bundled twelve-bus case when omitted.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Reference generator bus id.
    #[arg(long)]
    pub ref_bus: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Global bounds as m_lb,m_ub,d_lb,d_ub.
    #[arg(long)]
    pub bounds: Option<String>,
    #[arg(long)]
    pub disturb_node: Option<u32>,
    #[arg(long)]
    pub disturb_kind: Option<DisturbanceKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// midpoint, lower, upper or a fraction in [0, 1] of the box.
    #[arg(long)]
    pub seed_point: Option<SeedPoint>,
}

pub fn parse_bounds(s: &str) -> Result<Bounds, CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("invalid --bounds '{s}'")))?;
    let [m_lb, m_ub, d_lb, d_ub] = vals[..] else {
        return Err(CliError::Input(
            "--bounds expects four values m_lb,m_ub,d_lb,d_ub".into(),
        ));
    };
    let b = Bounds {
        m_lb,
        m_ub,
        d_lb,
        d_ub,
    };
    b.validate()?;
    Ok(b)
}

/// Resolved settings for one run.
pub struct RunContext {
    pub scenario: Scenario,
    pub beta: f64,
    pub descent: DescentConfig,
    /// Disturbance given on the command line.
    pub cli_disturbance: Option<DisturbanceSpec>,
    pub horizon: f64,
    pub dt: f64,
    pub out: PathBuf,
}

impl RunContext {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let file = NetworkFile::load_or_bundled(args.network.as_deref())?;
        let bounds = args.bounds.as_deref().map(parse_bounds).transpose()?;
        let defaults = file.defaults.clone();
        let scenario = Scenario::new(file, bounds, args.ref_bus)?;

        let mut descent = DescentConfig::default();
        if let Some(k) = args.max_iter {
            descent.max_iter = k;
        }
        if let Some(g) = args.gamma0 {
            descent.gamma0 = g;
        }
        if let Some(seed) = args.seed_point {
            seed.apply(&scenario.base, &mut descent);
        }
        descent.validate()?;

        let cli_disturbance = match (args.disturb_node, args.disturb_kind, args.magnitude) {
            (None, None, None) => None,
            (node, kind, magnitude) => {
                let base = defaults.disturbance;
                let node = node.or(base.map(|d| d.node)).ok_or_else(|| {
                    CliError::Input("--disturb-node is required for a disturbance".into())
                })?;
                Some(DisturbanceSpec {
                    node,
                    kind: kind
                        .or(base.map(|d| d.kind))
                        .unwrap_or(DisturbanceKind::Step),
                    magnitude: magnitude.or(base.map(|d| d.magnitude)).unwrap_or(0.1),
                })
            }
        };
        let horizon = args.horizon.unwrap_or(defaults.horizon);
        let dt = args.dt.unwrap_or(defaults.dt);
        Ok(Self {
            scenario,
            beta: args.beta.unwrap_or(defaults.beta),
            descent,
            cli_disturbance,
            horizon,
            dt,
            out: args.out.clone(),
        })
    }

    /// Disturbance for simulations: command line first, then file defaults.
    pub fn sim_disturbance(&self) -> Result<Disturbance, CliError> {
        let spec = self
            .cli_disturbance
            .or(self.scenario.file.defaults.disturbance)
            .ok_or_else(|| CliError::Input("no disturbance given (use --disturb-node)".into()))?;
        self.scenario.disturbance(&spec)
    }

    fn out_file(&self, name: &str) -> Result<std::fs::File, CliError> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.out.display())))?;
        create(&self.out.join(name))
    }

    fn optimize(&self, known_node: Option<usize>) -> Result<OptResult, CliError> {
        let opt = self
            .scenario
            .optimize(self.beta, known_node, &self.descent)?;
        if !opt.converged {
            warn!(
                "optimizer stopped by {} after {} iterations (residual {:.3e} > {:.3e})",
                opt.termination, opt.iterations, opt.residual, opt.tolerance
            );
        }
        Ok(opt)
    }

    fn load_design(&self, path: &Path) -> Result<DeviceParams, CliError> {
        let f = std::fs::File::open(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let (m, d) = output::read_coefficients(&self.scenario.net.gen_ids, f)?;
        self.scenario.design(m, d)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Reduce { network, out } => cmd_reduce(network.as_deref(), out.as_deref()),
        Command::Optimize(args) => cmd_optimize(&RunContext::from_args(&args)?).map(|_| ()),
        Command::Simulate {
            run,
            coeffs,
            variant,
            known_location,
        } => cmd_simulate(
            &RunContext::from_args(&run)?,
            coeffs.as_deref(),
            variant,
            known_location,
        ),
        Command::Compare {
            run,
            coeffs,
            known_location,
        } => cmd_compare(
            &RunContext::from_args(&run)?,
            coeffs.as_deref(),
            known_location,
        ),
        Command::SweepBeta {
            run,
            betas,
            known_location,
        } => cmd_sweep_beta(&RunContext::from_args(&run)?, &betas, known_location),
    }
}

pub fn cmd_reduce(network: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let file = NetworkFile::load_or_bundled(network)?;
    let net = vsmtune_core::ReducedNetwork::from_spec(&file.spec)?;
    info!(
        "reduced {} buses to {} generators",
        file.spec.buses.len(),
        net.n()
    );
    output::write_reduced(&net, std::io::stdout().lock())?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        output::write_reduced(&net, create(&dir.join("reduced_laplacian.csv"))?)?;
    }
    Ok(())
}

pub fn cmd_optimize(ctx: &RunContext) -> Result<OptResult, CliError> {
    let known = ctx
        .cli_disturbance
        .map(|d| ctx.scenario.index_of(d.node))
        .transpose()?;
    let opt = ctx.optimize(known)?;
    let ids = &ctx.scenario.net.gen_ids;
    output::write_coefficients(ids, &opt.params, ctx.out_file("coefficients.csv")?)?;
    output::write_convergence(&opt, ctx.out_file("convergence.csv")?)?;
    let j_final = *opt.j_history.last().expect("history is never empty");
    let formulation = match known {
        Some(k) => format!("known_location:{}", ids[k]),
        None => "unknown_location".to_string(),
    };
    let summary = [
        ("formulation", formulation),
        ("beta", fmt(ctx.beta)),
        ("ref_bus", ids[ctx.scenario.ref_index].to_string()),
        ("iterations", opt.iterations.to_string()),
        ("converged", opt.converged.to_string()),
        ("termination", opt.termination.to_string()),
        ("residual", fmt(opt.residual)),
        ("tolerance", fmt(opt.tolerance)),
        ("j_total", fmt(j_final)),
        ("sum_m", fmt(opt.m_star.sum())),
        ("sum_d", fmt(opt.d_star.sum())),
    ];
    output::write_key_values(&summary, ctx.out_file("optimize_summary.csv")?)?;
    let mut stdout = std::io::stdout().lock();
    for (k, v) in &summary {
        let _ = writeln!(stdout, "{k}: {v}");
    }
    Ok(opt)
}

fn optimal_design(
    ctx: &RunContext,
    coeffs: Option<&Path>,
    known_location: bool,
    dist: &Disturbance,
) -> Result<DeviceParams, CliError> {
    match coeffs {
        Some(path) => ctx.load_design(path),
        None => {
            let known = known_location.then_some(dist.node);
            Ok(ctx.optimize(known)?.params)
        }
    }
}

pub fn cmd_simulate(
    ctx: &RunContext,
    coeffs: Option<&Path>,
    variant: Variant,
    known_location: bool,
) -> Result<(), CliError> {
    let dist = ctx.sim_disturbance()?;
    let s = &ctx.scenario;
    let (label, params) = match (coeffs, variant) {
        (Some(_), _) | (None, Variant::Opt) => (
            LABEL_OPTIMAL.to_string(),
            optimal_design(ctx, coeffs, known_location, &dist)?,
        ),
        (None, Variant::DmaxMmin) => ("dmax_mmin".to_string(), s.min_inertia_design()),
        (None, Variant::DmaxMmax) => ("dmax_mmax".to_string(), s.max_inertia_design()),
        (None, Variant::Midpoint) => ("midpoint".to_string(), s.base.clone()),
    };
    let sim = s.simulate(&params, &dist, ctx.horizon, ctx.dt)?;
    for w in &sim.warnings {
        warn!("{w}");
    }
    output::write_trajectory(&s.net.gen_ids, &sim, ctx.out_file("trajectory.csv")?)?;
    output::write_metrics(
        &s.net.gen_ids,
        &[(label, sim)],
        ctx.out_file("metrics.csv")?,
    )
}

pub fn cmd_compare(
    ctx: &RunContext,
    coeffs: Option<&Path>,
    known_location: bool,
) -> Result<(), CliError> {
    let dist = ctx.sim_disturbance()?;
    let s = &ctx.scenario;
    let optimal = optimal_design(ctx, coeffs, known_location, &dist)?;
    output::write_coefficients(&s.net.gen_ids, &optimal, ctx.out_file("coefficients.csv")?)?;
    let results = s.compare(&optimal, &dist, ctx.horizon, ctx.dt)?;
    for (label, sim) in &results {
        output::write_trajectory(
            &s.net.gen_ids,
            sim,
            ctx.out_file(&format!("trajectory_{label}.csv"))?,
        )?;
        info!(
            "{label}: bus {} rocof_max {:.6e}, nadir {:.6e}, settle {:.4} s",
            s.net.gen_ids[dist.node],
            sim.rocof_max[dist.node],
            sim.nadir[dist.node],
            sim.settle_time[dist.node]
        );
    }
    output::write_metrics(&s.net.gen_ids, &results, ctx.out_file("metrics.csv")?)
}

pub fn cmd_sweep_beta(
    ctx: &RunContext,
    betas: &[f64],
    known_location: bool,
) -> Result<(), CliError> {
    if betas.is_empty() {
        return Err(CliError::Input("--betas is empty".into()));
    }
    if let Some(b) = betas.iter().find(|b| !b.is_finite()) {
        return Err(CliError::Input(format!("beta {b} is not finite")));
    }
    let dist = ctx.sim_disturbance()?;
    let s = &ctx.scenario;
    let known = known_location.then_some(dist.node);
    let rows = s.sweep_beta(betas, known, &ctx.descent, &dist, ctx.horizon, ctx.dt);
    output::write_sweep(&rows, dist.node, ctx.out_file("sweep.csv")?)?;

    for (k, row) in rows.iter().enumerate() {
        match &row.outcome {
            Ok(p) => output::write_coefficients(
                &s.net.gen_ids,
                &p.opt.params,
                ctx.out_file(&format!("coefficients_beta_{k}.csv"))?,
            )?,
            Err(msg) => warn!("beta = {}: {msg}", row.beta),
        }
    }

    // Trajectory at the disturbed bus, one column per successful β.
    let ok: Vec<_> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|p| (r.beta, p)))
        .collect();
    if let Some((_, first)) = ok.first() {
        let mut w = csv::Writer::from_writer(ctx.out_file("sweep_trajectories.csv")?);
        let io = |e: csv::Error| CliError::Runtime(e.to_string());
        let mut header = vec!["t".to_string()];
        header.extend(ok.iter().map(|(b, _)| format!("beta_{b}")));
        w.write_record(&header).map_err(io)?;
        for (i, t) in first.sim.t.iter().enumerate() {
            let mut rec = vec![fmt(*t)];
            rec.extend(ok.iter().map(|(_, p)| fmt(p.sim.omega[(dist.node, i)])));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    if ok.is_empty() {
        return Err(CliError::Runtime("every beta in the sweep failed".into()));
    }
    Ok(())
}
