//! Fixtures shared by the benchmarks.

use vsmtune_cli::Scenario;
use vsmtune_core::{
    assemble_state_space, Bounds, Bus, BusKind, DeviceParams, Line, NetworkSpec, ReducedNetwork,
    StateSpace,
};

pub fn twelve_bus() -> Scenario {
    Scenario::bundled().expect("bundled network is valid")
}

/// Ring of `n` generators with a chord every fourth bus.
pub fn ring(n: usize) -> (ReducedNetwork, DeviceParams) {
    let buses = (1..=n as u32)
        .map(|id| Bus {
            id,
            kind: BusKind::Generator,
            m_hat: 0.5 + 0.1 * (id % 5) as f64,
            d_hat: 0.2 + 0.05 * (id % 3) as f64,
            bounds: None,
        })
        .collect();
    let mut lines = Vec::new();
    for i in 1..=n as u32 {
        let j = i % n as u32 + 1;
        lines.push(Line {
            from: i,
            to: j,
            b: 10.0 + (i % 7) as f64,
        });
        if i % 4 == 0 && n > 4 {
            let k = (i + n as u32 / 2 - 1) % n as u32 + 1;
            if k != i {
                lines.push(Line {
                    from: i,
                    to: k,
                    b: 3.0,
                });
            }
        }
    }
    let spec = NetworkSpec { buses, lines };
    let bounds = Bounds {
        m_lb: 0.0,
        m_ub: 4.0,
        d_lb: 0.0,
        d_ub: 2.0,
    };
    let net = ReducedNetwork::from_spec(&spec).expect("ring is valid");
    let params = DeviceParams::from_spec(&spec, &bounds).expect("bounds are valid");
    (net, params)
}

pub fn ring_state_space(n: usize) -> StateSpace {
    let (net, params) = ring(n);
    assemble_state_space(&net, &params, 0, None).expect("ring model assembles")
}
