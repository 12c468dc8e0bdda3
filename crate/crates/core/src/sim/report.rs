use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub flits: usize,
    pub created: u64,
    pub ejected: u64,
    pub hops: usize,
    pub measured: bool,
}

impl PacketRecord {
    pub fn latency(&self) -> u64 {
        self.ejected - self.created
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub topology: String,
    pub pattern: String,
    pub buffering: String,
    pub seed: u64,
    pub nodes: usize,
    pub packet_flits: usize,
    pub injection_rate: f64,
    pub h: usize,
    /// Mean creation-to-tail-ejection time of measured packets, in cycles.
    pub avg_packet_latency: f64,
    pub avg_packet_latency_ns: f64,
    pub max_packet_latency: u64,
    pub avg_hops: f64,
    /// Analytic zero-load latency averaged over uniform random pairs.
    pub zero_load_latency: f64,
    /// Flits ejected during the measurement window per node per cycle.
    pub throughput: f64,
    /// Flits generated during the measurement window per node per cycle.
    pub generated_rate: f64,
    pub generated_packets: u64,
    pub injected_packets: u64,
    pub ejected_packets: u64,
    pub measured_packets: u64,
    pub measured_ejected: u64,
    pub ejected_flits_window: u64,
    pub in_flight_at_end: u64,
    /// Head flits that crossed a central-buffer router without buffering.
    pub cb_bypass: u64,
    /// Head flits that went through a central buffer.
    pub cb_buffered: u64,
    pub cycles: u64,
    pub saturated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<Vec<PacketRecord>>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rate: f64,
    pub latency_cycles: f64,
    pub latency_ns: f64,
    pub throughput: f64,
    pub saturated: bool,
}

impl From<&SimReport> for CurvePoint {
    fn from(r: &SimReport) -> Self {
        Self {
            rate: r.injection_rate,
            latency_cycles: r.avg_packet_latency,
            latency_ns: r.avg_packet_latency_ns,
            throughput: r.throughput,
            saturated: r.saturated,
        }
    }
}

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p).expect("in-memory write");
    }
    if points.is_empty() {
        w.write_record(["rate", "latency_cycles", "latency_ns", "throughput", "saturated"])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
