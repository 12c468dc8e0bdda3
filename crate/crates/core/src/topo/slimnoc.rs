use serde::{Deserialize, Serialize};

use super::{analytics, RouterLabel, TopoError, Topology, TopologyKind};
use crate::exec::Exec;
use crate::ff::{self, FieldTable, GeneratorSets};

/// Derived parameters of a Slim NoC instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnConfig {
    pub q: usize,
    pub u: i8,
    pub w: usize,
    /// Network radix k'.
    pub k_net: usize,
    /// Concentration: nodes per router.
    pub p: usize,
    /// Router radix k' + p.
    pub k: usize,
    pub n_r: usize,
    pub n: usize,
    /// `p - floor(k'/2)`; negative means undersubscribed.
    pub kappa: i64,
    /// Set for q = 2, which has no integer w with q = 4w + u.
    pub special_case: bool,
}

pub fn sn_params(q: usize, p: usize) -> Result<SnConfig, TopoError> {
    if !ff::is_prime_power(q) {
        return Err(TopoError::InvalidQ(q));
    }
    if p == 0 {
        return Err(TopoError::InvalidConcentration);
    }
    let (u, w, special_case) = match q % 4 {
        1 => (1i8, (q - 1) / 4, false),
        0 => (0, q / 4, false),
        3 => (-1, (q + 1) / 4, false),
        _ if q == 2 => (0, 0, true),
        _ => return Err(TopoError::InvalidU(q)),
    };
    let k_net = ((3 * q as i64 - u as i64) / 2) as usize;
    let n_r = 2 * q * q;
    Ok(SnConfig {
        q,
        u,
        w,
        k_net,
        p,
        k: k_net + p,
        n_r,
        n: n_r * p,
        kappa: p as i64 - (k_net / 2) as i64,
        special_case,
    })
}

/// Largest field order scanned when searching for sizes.
pub const MAX_SIZING_Q: usize = 32;

/// Every `(q, p)` with `2q²p = n` and `1 <= p <= k'`, by ascending q.
pub fn feasible_splits(n: usize) -> Vec<SnConfig> {
    (2..=MAX_SIZING_Q)
        .filter_map(|q| {
            let n_r = 2 * q * q;
            if n % n_r != 0 {
                return None;
            }
            sn_params(q, n / n_r).ok().filter(|c| c.p <= c.k_net)
        })
        .collect()
}

/// Network sizes with at least one feasible split, ascending.
pub fn feasible_sizes() -> Vec<SnConfig> {
    let mut all: Vec<SnConfig> = (2..=MAX_SIZING_Q)
        .filter_map(|q| sn_params(q, 1).ok())
        .flat_map(|c| (1..=c.k_net).map(move |p| sn_params(c.q, p).expect("q already valid")))
        .collect();
    all.sort_by_key(|c| (c.n, c.q));
    all
}

/// Closest feasible configurations strictly below and above `n`, optionally
/// restricted to one concentration.
pub fn nearest_feasible(n: usize, p: Option<usize>) -> (Option<SnConfig>, Option<SnConfig>) {
    let sizes: Vec<SnConfig> = feasible_sizes()
        .into_iter()
        .filter(|c| p.is_none_or(|p| c.p == p))
        .collect();
    let below = sizes.iter().rev().find(|c| c.n < n).copied();
    let above = sizes.iter().find(|c| c.n > n).copied();
    (below, above)
}

fn labels_for(q: usize) -> Vec<RouterLabel> {
    (1..=2 * q * q).map(|i| RouterLabel::from_index(i, q)).collect()
}

/// Builds the MMS router graph. Subgroup `a` and position `b` are mapped to
/// field elements `a - 1` and `b - 1`.
pub fn build_sn(config: &SnConfig, field: &FieldTable, gens: &GeneratorSets) -> Result<Topology, TopoError> {
    let q = config.q;
    if field.order() != q {
        return Err(TopoError::ConstructionInvalid(format!(
            "field order {} differs from q = {q}",
            field.order()
        )));
    }
    let idx = |g: usize, a: usize, b: usize| g * q * q + a * q + b;
    let mut edges = Vec::with_capacity(config.n_r * config.k_net / 2);
    for a in 0..q {
        for b in 0..q {
            for b2 in (b + 1)..q {
                let d = field.sub(b, b2);
                if gens.in_x(d) {
                    edges.push((idx(0, a, b), idx(0, a, b2)));
                }
                if gens.in_x_prime(d) {
                    edges.push((idx(1, a, b), idx(1, a, b2)));
                }
            }
        }
    }
    for a in 0..q {
        for m in 0..q {
            for c in 0..q {
                let b = field.add(field.mul(m, a), c);
                edges.push((idx(0, a, b), idx(1, m, c)));
            }
        }
    }
    let t = Topology::from_edges(
        format!("sn_q{q}"),
        TopologyKind::SlimNoc { q },
        config.n_r,
        config.p,
        edges,
    )?
    .with_labels(labels_for(q));

    match t.regular_degree() {
        Some(d) if d == config.k_net => {}
        _ => {
            return Err(TopoError::ConstructionInvalid(format!(
                "graph is not {}-regular",
                config.k_net
            )))
        }
    }
    let d = analytics::diameter_with(&t, Exec::default())?;
    if d != 2 {
        return Err(TopoError::ConstructionInvalid(format!("diameter {d}, expected 2")));
    }
    Ok(t)
}

/// Field, generator and graph construction in one step.
pub fn slim_noc(q: usize, p: usize) -> Result<Topology, TopoError> {
    let config = sn_params(q, p)?;
    let field = ff::make_field(q)?;
    let xi = ff::find_generator(&field);
    let gens = ff::generator_sets(&field, xi, config.u)?;
    build_sn(&config, &field, &gens)
}
