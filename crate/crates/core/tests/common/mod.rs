#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vsmtune_core::{
    is_hurwitz, Bounds, Bus, BusKind, DMatrix, DVector, DeviceParams, Line, NetworkSpec,
    ReducedNetwork,
};

/// Random Hurwitz matrix with spectral abscissa in `[-1, -0.05]`.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)) / (n as f64).sqrt();
    let shift = is_hurwitz(&r).unwrap().abscissa + rng.gen_range(0.05..1.0);
    r - DMatrix::identity(n, n) * shift
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Connected random network: a spanning tree over all buses plus extra
/// lines. Bus 1 is always a generator.
pub fn random_network(rng: &mut ChaCha8Rng, n_gen: usize, n_load: usize) -> NetworkSpec {
    let total = n_gen + n_load;
    let mut order: Vec<u32> = (1..=total as u32).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let buses = (1..=total as u32)
        .map(|id| {
            let gen = (id as usize) <= n_gen;
            Bus {
                id,
                kind: if gen {
                    BusKind::Generator
                } else {
                    BusKind::Load
                },
                m_hat: if gen { rng.gen_range(0.2..2.0) } else { 0.0 },
                d_hat: if gen { rng.gen_range(0.05..1.0) } else { 0.0 },
                bounds: None,
            }
        })
        .collect();
    let mut lines = Vec::new();
    for k in 1..total {
        let parent = order[rng.gen_range(0..k)];
        lines.push(Line {
            from: parent,
            to: order[k],
            b: rng.gen_range(1.0..20.0),
        });
    }
    for _ in 0..total / 2 {
        let a = rng.gen_range(1..=total as u32);
        let b = rng.gen_range(1..=total as u32);
        if a != b {
            lines.push(Line {
                from: a,
                to: b,
                b: rng.gen_range(1.0..10.0),
            });
        }
    }
    NetworkSpec { buses, lines }
}

pub const BOX: Bounds = Bounds {
    m_lb: 0.0,
    m_ub: 4.0,
    d_lb: 0.0,
    d_ub: 2.0,
};

/// Reduced network and parameters at a random interior point of `BOX`.
pub fn random_design(
    rng: &mut ChaCha8Rng,
    n_gen: usize,
    n_load: usize,
) -> (ReducedNetwork, DeviceParams) {
    let spec = random_network(rng, n_gen, n_load);
    let net = ReducedNetwork::from_spec(&spec).unwrap();
    let base = DeviceParams::from_spec(&spec, &BOX).unwrap();
    let n = net.n();
    let m = DVector::from_fn(n, |_, _| rng.gen_range(0.2..3.8));
    let d = DVector::from_fn(n, |_, _| rng.gen_range(0.1..1.9));
    (net, base.with_coefficients(m, d).unwrap())
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
