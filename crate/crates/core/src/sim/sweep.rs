use super::config::{buffer_sizes_for, SimConfig};
use super::report::SimReport;
use super::{run, Network, SetupError, SimError};
use crate::exec::Exec;

/// Analytic zero-load latency between two routers: two router cycles plus
/// the link traversal per hop, plus serialization of the remaining flits.
/// Packets that stay on one router pay one cycle per flit.
pub fn zero_load_latency(net: &Network, cfg: &SimConfig, src_router: usize, dst_router: usize) -> u64 {
    let plan = buffer_sizes_for(net, cfg);
    let t = net.topology();
    let mut base = vec![0usize; t.routers() + 1];
    for r in 0..t.routers() {
        base[r + 1] = base[r] + t.degree(r);
    }
    let lat: Vec<usize> = plan.links.iter().map(|l| l.latency).collect();
    pair_latency(net, &lat, &base, cfg.packet_flits, src_router, dst_router)
}

fn pair_latency(net: &Network, lat: &[usize], base: &[usize], flits: usize, s: usize, d: usize) -> u64 {
    if s == d {
        return flits as u64;
    }
    let t = net.topology();
    let path = net.tables().path(s, d);
    let links: u64 = path
        .windows(2)
        .map(|w| 2 + lat[base[w[0]] + t.port_to(w[0], w[1]).expect("path follows links")] as u64)
        .sum();
    links + flits as u64 - 1
}

/// Zero-load latency averaged over uniformly random node pairs.
pub fn mean_zero_load_latency(net: &Network, cfg: &SimConfig) -> f64 {
    let plan = buffer_sizes_for(net, cfg);
    let t = net.topology();
    let mut base = vec![0usize; t.routers() + 1];
    for r in 0..t.routers() {
        base[r + 1] = base[r] + t.degree(r);
    }
    let lat: Vec<usize> = plan.links.iter().map(|l| l.latency).collect();
    mean_zero_load_from_latencies(net, &lat, &base, cfg.packet_flits)
}

pub(crate) fn mean_zero_load_from_latencies(net: &Network, lat: &[usize], base: &[usize], flits: usize) -> f64 {
    let t = net.topology();
    let (n_r, p) = (t.routers(), t.concentration());
    let mut total = 0f64;
    let mut pairs = 0f64;
    for s in 0..n_r {
        for d in 0..n_r {
            let w = if s == d { (p * (p - 1)) as f64 } else { (p * p) as f64 };
            if w > 0.0 {
                total += w * pair_latency(net, lat, base, flits, s, d) as f64;
                pairs += w;
            }
        }
    }
    if pairs > 0.0 {
        total / pairs
    } else {
        0.0
    }
}

/// One run per rate, in parallel, reported in input order.
pub fn sweep(net: &Network, cfg: &SimConfig, rates: &[f64], exec: Exec) -> Result<Vec<SimReport>, SimError> {
    if rates.windows(2).any(|w| w[1] < w[0]) {
        return Err(SetupError::InvalidConfig("rates must be ascending".into()).into());
    }
    exec.map(rates, |&rate| {
        run(
            net,
            &SimConfig {
                injection_rate: rate,
                ..cfg.clone()
            },
        )
    })
    .into_iter()
    .collect()
}

/// Accepted throughput with every source permanently backlogged.
pub fn saturation_throughput(net: &Network, cfg: &SimConfig) -> Result<f64, SimError> {
    let r = run(
        net,
        &SimConfig {
            injection_rate: 1.0,
            drain_cycles: 0,
            ..cfg.clone()
        },
    )?;
    Ok(r.throughput)
}

/// Highest rate on a grid of `step` that is not flagged saturated.
pub fn saturation_point(net: &Network, cfg: &SimConfig, step: f64, exec: Exec) -> Result<f64, SimError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(SetupError::InvalidConfig("step must lie in (0, 1]".into()).into());
    }
    let steps = (1.0 / step).floor() as usize;
    let rates: Vec<f64> = (1..=steps).map(|i| i as f64 * step).collect();
    let reports = sweep(net, cfg, &rates, exec)?;
    let mut best = 0.0;
    for r in &reports {
        if r.saturated {
            break;
        }
        best = r.injection_rate;
    }
    Ok(best)
}
