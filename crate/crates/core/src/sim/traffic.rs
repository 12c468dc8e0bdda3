use std::io::Read;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use super::SetupError;
use crate::ff::make_field;
use crate::topo::{RouterLabel, Topology, TopologyKind};

/// Destination selection for synthetic and replayed traffic.
#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    /// Uniform over every other node.
    Random,
    /// Rotate the low `floor(log2 N)` bits of the source id left by one.
    Shuffle,
    /// Reverse the low `floor(log2 N)` bits of the source id.
    Reverse,
    /// Every node targets the same-index node of a neighboring router, so
    /// each router pair loads one link.
    Adv1,
    /// Every node targets the same-index node of a router two hops away,
    /// so flows share intermediate routers.
    Adv2,
    /// Fixed destination per source node; `None` keeps the node silent.
    Permutation(Arc<Vec<Option<usize>>>),
    /// Replay of recorded messages; the injection rate is ignored.
    Trace(Arc<Trace>),
}

impl Pattern {
    pub fn name(&self) -> &'static str {
        match self {
            Pattern::Random => "RND",
            Pattern::Shuffle => "SHF",
            Pattern::Reverse => "REV",
            Pattern::Adv1 => "ADV1",
            Pattern::Adv2 => "ADV2",
            Pattern::Permutation(_) => "PERM",
            Pattern::Trace(_) => "TRACE",
        }
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = SetupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "RND" | "RANDOM" => Pattern::Random,
            "SHF" | "SHUFFLE" => Pattern::Shuffle,
            "REV" | "REVERSE" => Pattern::Reverse,
            "ADV1" => Pattern::Adv1,
            "ADV2" => Pattern::Adv2,
            other => return Err(SetupError::InvalidConfig(format!("unknown pattern '{other}'"))),
        })
    }
}

fn id_bits(n: usize) -> u32 {
    if n < 2 {
        0
    } else {
        usize::BITS - 1 - n.leading_zeros()
    }
}

fn fold(src: usize, n: usize, f: impl Fn(usize, u32) -> usize) -> usize {
    let b = id_bits(n);
    if b == 0 {
        return src;
    }
    let mask = (1usize << b) - 1;
    let lo = src & mask;
    ((src - lo) + f(lo, b)) % n
}

/// Left rotation by one over the low `floor(log2 n)` bits, folded into `[0, n)`.
pub fn bit_shuffle(src: usize, n: usize) -> usize {
    fold(src, n, |lo, b| ((lo << 1) | (lo >> (b - 1))) & ((1 << b) - 1))
}

/// Bit reversal over the low `floor(log2 n)` bits, folded into `[0, n)`.
pub fn bit_reverse(src: usize, n: usize) -> usize {
    fold(src, n, |lo, b| lo.reverse_bits() >> (usize::BITS - b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub src: usize,
    pub dst: usize,
    pub flits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl TraceRecord {
    /// Requests without a kind, and reads, are answered when replies are on.
    pub fn wants_reply(&self) -> bool {
        match self.kind.as_deref() {
            None => true,
            Some(k) => k.eq_ignore_ascii_case("read") || k.eq_ignore_ascii_case("rd"),
        }
    }
}

/// Message trace, sorted by cycle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new(mut records: Vec<TraceRecord>) -> Self {
        records.sort_by_key(|r| r.cycle);
        Self { records }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Reads `cycle,src,dst,flits[,kind]` with a header row.
    pub fn from_reader(r: impl Read) -> Result<Self, SetupError> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(r);
        let records = rd
            .deserialize()
            .collect::<Result<Vec<TraceRecord>, _>>()
            .map_err(|e| SetupError::InvalidTrace(e.to_string()))?;
        Ok(Self::new(records))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cycle", "src", "dst", "flits", "kind"]).expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.cycle.to_string(),
                r.src.to_string(),
                r.dst.to_string(),
                r.flits.to_string(),
                r.kind.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub(crate) fn validate(&self, nodes: usize) -> Result<(), SetupError> {
        for r in &self.records {
            if r.src >= nodes || r.dst >= nodes || r.flits == 0 || r.flits > u16::MAX as usize {
                return Err(SetupError::InvalidTrace(format!(
                    "record at cycle {} ({} -> {}, {} flits) does not fit {nodes} nodes",
                    r.cycle, r.src, r.dst, r.flits
                )));
            }
        }
        Ok(())
    }
}

/// Pattern bound to a concrete topology.
#[derive(Clone, Debug)]
pub struct TrafficGen {
    pattern: Pattern,
    nodes: usize,
    concentration: usize,
    partner: Vec<usize>,
}

impl TrafficGen {
    pub fn new(pattern: Pattern, t: &Topology) -> Result<Self, SetupError> {
        let nodes = t.nodes();
        let partner = match pattern {
            Pattern::Adv1 => adv1_partners(t),
            Pattern::Adv2 => adv2_partners(t),
            _ => Vec::new(),
        };
        match &pattern {
            Pattern::Permutation(map) => {
                if map.len() != nodes || map.iter().flatten().any(|&d| d >= nodes) {
                    return Err(SetupError::InvalidConfig("permutation does not match node count".into()));
                }
            }
            Pattern::Trace(trace) => trace.validate(nodes)?,
            _ => {}
        }
        Ok(Self {
            pattern,
            nodes,
            concentration: t.concentration(),
            partner,
        })
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    /// Router-level partner used by the adversarial patterns.
    pub fn partner_router(&self, r: usize) -> Option<usize> {
        self.partner.get(r).copied()
    }

    /// Destination for a new packet from `src`, or `None` when the source
    /// would address itself or is silent.
    pub fn destination(&self, src: usize, rng: &mut impl Rng) -> Option<usize> {
        let n = self.nodes;
        let dst = match &self.pattern {
            Pattern::Random => {
                if n < 2 {
                    return None;
                }
                let r = rng.gen_range(0..n - 1);
                if r >= src {
                    r + 1
                } else {
                    r
                }
            }
            Pattern::Shuffle => bit_shuffle(src, n),
            Pattern::Reverse => bit_reverse(src, n),
            Pattern::Adv1 | Pattern::Adv2 => {
                let p = self.concentration;
                self.partner[src / p] * p + src % p
            }
            Pattern::Permutation(map) => map[src]?,
            Pattern::Trace(_) => return None,
        };
        (dst != src).then_some(dst)
    }
}

/// Slim NoC: `[0|a,b]` pairs with its type-1 neighbor `[1|a, b - a^2]`.
/// Elsewhere: greedy matching over ascending router ids.
fn adv1_partners(t: &Topology) -> Vec<usize> {
    if let (TopologyKind::SlimNoc { q }, Some(_)) = (t.kind(), t.labels()) {
        if let Ok(field) = make_field(*q) {
            let q = *q;
            let mut partner = vec![0; t.routers()];
            for a in 0..q {
                for b in 0..q {
                    let c = field.sub(b, field.mul(a, a));
                    let i = a * q + b;
                    let j = q * q + a * q + c;
                    partner[i] = j;
                    partner[j] = i;
                }
            }
            return partner;
        }
    }
    let n = t.routers();
    let mut partner = vec![usize::MAX; n];
    for r in 0..n {
        if partner[r] != usize::MAX {
            continue;
        }
        match t.neighbors(r).iter().find(|&&s| partner[s] == usize::MAX) {
            Some(&s) => {
                partner[r] = s;
                partner[s] = r;
            }
            None => partner[r] = t.neighbors(r).first().copied().unwrap_or(r),
        }
    }
    partner
}

/// Slim NoC: `[G|a,b] -> [G|(a mod q) + 1, b]`. Elsewhere: `r + N_r / 2`.
fn adv2_partners(t: &Topology) -> Vec<usize> {
    let n = t.routers();
    if let TopologyKind::SlimNoc { q } = t.kind() {
        let q = *q;
        return (1..=n)
            .map(|i| {
                let l = RouterLabel::from_index(i, q);
                RouterLabel {
                    subgroup: l.subgroup % q + 1,
                    ..l
                }
                .index(q)
                    - 1
            })
            .collect();
    }
    (0..n).map(|r| (r + n / 2) % n.max(1)).collect()
}
