//! Cycle loop.
//!
//! Each cycle runs four phases in a fixed order:
//! 1. link delivery: flits and credits due this cycle arrive, elastic link
//!    stages advance downstream-first;
//! 2. switch allocation in every router: at most one flit per input port
//!    and per output port, rotating priority;
//! 3. packet generation into per-node source queues;
//! 4. network-interface injection, one flit per node per cycle.
//!
//! A flit entering a router input becomes eligible for forwarding two
//! cycles later. Flits that have reached their destination router are
//! ejected as soon as they arrive, one per node per cycle.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{buffer_sizes_for, cycle_time_ns, RouterKind, SimConfig, STAGING_PIPELINE_REGS};
use super::report::{PacketRecord, SimReport};
use super::sweep::mean_zero_load_from_latencies;
use super::traffic::{Pattern, TrafficGen};
use super::{Network, SimError};

const NONE: u32 = u32::MAX;
const FREE: (u64, u32) = (u64::MAX, NONE);
const ROUTER_DELAY: u64 = 2;
const CB_DELAY: u64 = 2;
const STALL_SCAN: u64 = 1_000;
const REPLY_FLITS: usize = 6;

#[derive(Clone, Copy, Debug)]
struct Flit {
    packet: u32,
    seq: u16,
    hop: u8,
    ready_at: u64,
    since: u64,
}

#[derive(Clone, Copy, Debug)]
struct Packet {
    id: u64,
    src: u32,
    dst: u32,
    src_r: u32,
    dst_r: u32,
    flits: u16,
    created: u64,
    /// Cycle the head left the source queue.
    entered: u64,
    class: u8,
    measured: bool,
    wants_reply: bool,
}

struct CbEntry {
    packet: u32,
    flits: VecDeque<Flit>,
}

enum Event {
    Flit { link: u32, vc: u8, flit: Flit },
    Credit { link: u32, vc: u8 },
}

struct Engine<'a> {
    net: &'a Network,
    cfg: &'a SimConfig,
    vcs: usize,
    p: usize,
    central: bool,
    elastic: bool,
    cb_capacity: usize,

    deg: Vec<usize>,
    link_base: Vec<usize>,
    link_latency: Vec<usize>,
    link_dst: Vec<usize>,
    /// Global input port fed by each link.
    link_inport: Vec<usize>,
    in_base: Vec<usize>,
    /// Link feeding each global network input port (`NONE` for injection).
    inport_link: Vec<u32>,
    inport_router: Vec<usize>,

    inq: Vec<VecDeque<Flit>>,
    inq_cap: Vec<usize>,
    inq_last_pop: Vec<u64>,
    /// Flits queued per global input port and per router.
    port_occ: Vec<u32>,
    router_occ: Vec<u32>,
    to_cb: Vec<bool>,
    /// Round-robin VC pointer per input port, past the last winner.
    vc_ptr: Vec<u8>,

    owner: Vec<u32>,
    /// Oldest waiting head per output VC; younger heads may not claim it.
    reserve: Vec<(u64, u32)>,
    credits: Vec<u32>,
    wheel: Vec<Vec<Event>>,
    stage_base: Vec<usize>,
    slots: Vec<Option<Flit>>,
    link_occ: Vec<u32>,

    cb_used: Vec<usize>,
    cb_count: Vec<usize>,
    cb_write_stamp: Vec<u64>,
    /// Oldest head per router waiting for central-buffer space.
    cb_reserve: Vec<(u64, u32)>,
    /// Per output VC, packets in arrival order of their heads; a packet's
    /// flits stay contiguous even when its body is written later.
    cbq: Vec<VecDeque<CbEntry>>,
    cbq_last_pop: Vec<u64>,
    /// Cycle of the last central-buffer read per link.
    cb_stamp: Vec<u64>,
    /// Set when a central-buffer read took a link a bypass flit wanted;
    /// the buffer then skips that link for one cycle.
    cb_yield: Vec<bool>,

    out_stamp: Vec<u64>,
    n_links: usize,

    pair_vc_off: Vec<u32>,
    /// Output link per (router, destination router).
    route_link: Vec<u32>,
    pair_vcs: Vec<u8>,
    classes: u64,
    class_stride: usize,

    packets: Vec<Packet>,
    free: Vec<u32>,
    srcq: Vec<VecDeque<u32>>,
    src_seq: Vec<u16>,
    next_id: u64,

    warmup_end: u64,
    measure_end: u64,

    generated_packets: u64,
    generated_flits_window: u64,
    injected_packets: u64,
    injected_flits: u64,
    ejected_packets: u64,
    ejected_flits: u64,
    ejected_flits_window: u64,
    measured_packets: u64,
    measured_ejected: u64,
    latency_sum: u64,
    latency_max: u64,
    hops_sum: u64,
    cb_bypass: u64,
    cb_buffered: u64,
    records: Option<Vec<PacketRecord>>,
}

/// Runs one simulation. Deterministic for a given network and config.
pub fn run(net: &Network, cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let gen = TrafficGen::new(cfg.pattern.clone(), net.topology())?;
    let mut e = Engine::new(net, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trace = match &cfg.pattern {
        Pattern::Trace(t) => Some(t.clone()),
        _ => None,
    };
    let mut trace_pos = 0usize;
    let gen_prob = if trace.is_some() {
        0.0
    } else {
        cfg.injection_rate / cfg.packet_flits as f64
    };
    let hard_end = e.measure_end + cfg.drain_cycles;
    let mut now = 0u64;
    loop {
        e.deliver(now);
        for r in 0..net.topology().routers() {
            e.allocate(r, now);
        }
        if let Some(tr) = &trace {
            let recs = tr.records();
            while trace_pos < recs.len() && recs[trace_pos].cycle <= now {
                let rec = &recs[trace_pos];
                if rec.src != rec.dst {
                    e.create_packet(rec.src, rec.dst, rec.flits, now, rec.wants_reply() && cfg.reply);
                }
                trace_pos += 1;
            }
        } else if gen_prob > 0.0 {
            for src in 0..net.topology().nodes() {
                if rng.gen_bool(gen_prob) {
                    if let Some(dst) = gen.destination(src, &mut rng) {
                        e.create_packet(src, dst, cfg.packet_flits, now, false);
                    }
                }
            }
        }
        e.inject(now);

        if now % STALL_SCAN == STALL_SCAN - 1 {
            e.check_stall(now)?;
        }
        now += 1;
        let measured_done = e.measured_ejected == e.measured_packets;
        let trace_done = trace.as_ref().is_none_or(|t| trace_pos >= t.records().len());
        if now >= e.measure_end && measured_done && trace_done {
            if trace.is_none() || e.in_flight() == 0 && e.srcq.iter().all(VecDeque::is_empty) {
                break;
            }
        }
        if now >= hard_end {
            break;
        }
    }
    Ok(e.report(now))
}

/// Claims a reservation slot for a head if its packet entered the network
/// before the current holder's. Waiting in the source queue does not count,
/// so a backlogged source cannot starve traffic already in flight.
fn bid(slot: &mut (u64, u32), pk: &Packet, packet: u32) {
    if (pk.entered, packet) < *slot {
        *slot = (pk.entered, packet);
    }
}

impl<'a> Engine<'a> {
    fn new(net: &'a Network, cfg: &'a SimConfig) -> Self {
        let t = net.topology();
        let n_r = t.routers();
        let p = t.concentration();
        let vcs = net.vcs();
        let plan = buffer_sizes_for(net, cfg);
        let central = cfg.buffering.router_kind() == RouterKind::Central;
        let elastic = cfg.buffering.elastic_links();

        let deg: Vec<usize> = (0..n_r).map(|r| t.degree(r)).collect();
        let mut link_base = Vec::with_capacity(n_r + 1);
        let mut in_base = Vec::with_capacity(n_r + 1);
        link_base.push(0);
        in_base.push(0);
        for r in 0..n_r {
            link_base.push(link_base[r] + deg[r]);
            in_base.push(in_base[r] + deg[r] + p);
        }
        let n_links = link_base[n_r];
        let n_in = in_base[n_r];

        let mut link_latency = vec![1; n_links];
        let mut link_dst = vec![0; n_links];
        let mut link_inport = vec![0; n_links];
        let mut inport_link = vec![NONE; n_in];
        let mut inport_router = vec![0; n_in];
        let mut inq_cap = vec![cfg.injection_queue; n_in * vcs];
        for r in 0..n_r {
            for port in 0..deg[r] + p {
                inport_router[in_base[r] + port] = r;
            }
            for (port, &b) in t.neighbors(r).iter().enumerate() {
                let link = link_base[r] + port;
                let lb = &plan.links[link];
                debug_assert_eq!((lb.from, lb.to), (r, b));
                link_latency[link] = lb.latency;
                link_dst[link] = b;
                let inport = in_base[b] + t.port_to(b, r).expect("symmetric adjacency");
                link_inport[link] = inport;
                inport_link[inport] = link as u32;
                let cap = if elastic {
                    lb.depth_per_vc + STAGING_PIPELINE_REGS
                } else {
                    lb.depth_per_vc
                };
                for vc in 0..vcs {
                    inq_cap[inport * vcs + vc] = cap;
                }
            }
        }
        let credits = if elastic {
            Vec::new()
        } else {
            (0..n_links * vcs)
                .map(|i| inq_cap[link_inport[i / vcs] * vcs] as u32)
                .collect()
        };
        let wheel_len = link_latency.iter().copied().max().unwrap_or(1) + 1;
        let mut stage_base = Vec::new();
        let mut slot_count = 0;
        if elastic {
            for &l in &link_latency {
                stage_base.push(slot_count);
                slot_count += l * vcs;
            }
        }

        // Per router-pair VC sequence, precomputed once.
        let tables = net.tables();
        let policy = net.policy();
        let mut pair_vc_off = Vec::with_capacity(n_r * n_r + 1);
        let mut pair_vcs = Vec::new();
        for s in 0..n_r {
            for d in 0..n_r {
                pair_vc_off.push(pair_vcs.len() as u32);
                pair_vcs.extend(policy.vcs_for_path(t, &tables.path(s, d), 0));
            }
        }
        pair_vc_off.push(pair_vcs.len() as u32);
        let mut route_link = vec![NONE; n_r * n_r];
        for r in 0..n_r {
            for d in (0..n_r).filter(|&d| d != r) {
                let port = t.port_to(r, tables.next_hop(r, d)).expect("table follows links");
                route_link[r * n_r + d] = (link_base[r] + port) as u32;
            }
        }

        let warmup_end = cfg.warmup_cycles;
        Self {
            net,
            cfg,
            vcs,
            p,
            central,
            elastic,
            cb_capacity: plan.cb_capacity,
            deg,
            link_base,
            link_latency,
            link_dst,
            link_inport,
            in_base,
            inport_link,
            inport_router,
            inq: (0..n_in * vcs).map(|_| VecDeque::new()).collect(),
            inq_cap,
            inq_last_pop: vec![0; n_in * vcs],
            port_occ: vec![0; n_in],
            router_occ: vec![0; n_r],
            to_cb: vec![false; n_in * vcs],
            vc_ptr: vec![0; n_in],
            owner: vec![NONE; n_links * vcs],
            reserve: vec![FREE; n_links * vcs],
            credits,
            wheel: (0..wheel_len).map(|_| Vec::new()).collect(),
            stage_base,
            slots: vec![None; slot_count],
            link_occ: vec![0; if elastic { n_links } else { 0 }],
            cb_used: vec![0; n_r],
            cb_count: vec![0; n_r],
            cb_write_stamp: vec![u64::MAX; n_r],
            cb_reserve: vec![FREE; n_r],
            cbq: if central {
                (0..n_links * vcs).map(|_| VecDeque::new()).collect()
            } else {
                Vec::new()
            },
            cbq_last_pop: vec![0; if central { n_links * vcs } else { 0 }],
            cb_stamp: vec![u64::MAX; if central { n_links } else { 0 }],
            cb_yield: vec![false; if central { n_links } else { 0 }],
            out_stamp: vec![u64::MAX; n_links + t.nodes()],
            n_links,
            pair_vc_off,
            route_link,
            pair_vcs,
            classes: policy.classes() as u64,
            class_stride: policy.class_stride(),
            packets: Vec::new(),
            free: Vec::new(),
            srcq: (0..t.nodes()).map(|_| VecDeque::new()).collect(),
            src_seq: vec![0; t.nodes()],
            next_id: 0,
            warmup_end,
            measure_end: warmup_end + cfg.measure_cycles,
            generated_packets: 0,
            generated_flits_window: 0,
            injected_packets: 0,
            injected_flits: 0,
            ejected_packets: 0,
            ejected_flits: 0,
            ejected_flits_window: 0,
            measured_packets: 0,
            measured_ejected: 0,
            latency_sum: 0,
            latency_max: 0,
            hops_sum: 0,
            cb_bypass: 0,
            cb_buffered: 0,
            records: cfg.record_packets.then(Vec::new),
        }
    }

    fn in_window(&self, now: u64) -> bool {
        now >= self.warmup_end && now < self.measure_end
    }

    fn create_packet(&mut self, src: usize, dst: usize, flits: usize, now: u64, wants_reply: bool) {
        let p = self.p;
        let pk = Packet {
            id: self.next_id,
            src: src as u32,
            dst: dst as u32,
            src_r: (src / p) as u32,
            dst_r: (dst / p) as u32,
            flits: flits as u16,
            created: now,
            entered: u64::MAX,
            class: (self.next_id % self.classes) as u8,
            measured: self.in_window(now),
            wants_reply,
        };
        self.next_id += 1;
        self.generated_packets += 1;
        if pk.measured {
            self.measured_packets += 1;
            self.generated_flits_window += flits as u64;
        }
        let idx = match self.free.pop() {
            Some(i) => {
                self.packets[i as usize] = pk;
                i
            }
            None => {
                self.packets.push(pk);
                (self.packets.len() - 1) as u32
            }
        };
        self.srcq[src].push_back(idx);
    }

    fn vc_for(&self, pk: &Packet, hop: u8) -> usize {
        let off = self.pair_vc_off[pk.src_r as usize * self.deg.len() + pk.dst_r as usize] as usize;
        self.pair_vcs[off + hop as usize] as usize + pk.class as usize * self.class_stride
    }

    fn arrival_ready(&self, pk: &Packet, router: usize, now: u64) -> u64 {
        if pk.dst_r as usize == router {
            now
        } else {
            now + ROUTER_DELAY
        }
    }

    fn deliver(&mut self, now: u64) {
        if !self.elastic {
            let slot = (now % self.wheel.len() as u64) as usize;
            let events = std::mem::take(&mut self.wheel[slot]);
            for ev in &events {
                match *ev {
                    Event::Flit { link, vc, mut flit } => {
                        let inport = self.link_inport[link as usize];
                        let router = self.link_dst[link as usize];
                        let pk = self.packets[flit.packet as usize];
                        flit.ready_at = self.arrival_ready(&pk, router, now);
                        flit.since = now;
                        self.push_input(inport, inport * self.vcs + vc as usize, router, flit);
                    }
                    Event::Credit { link, vc } => {
                        self.credits[link as usize * self.vcs + vc as usize] += 1;
                    }
                }
            }
            let mut events = events;
            events.clear();
            self.wheel[slot] = events;
            return;
        }
        let vcs = self.vcs;
        let rot = now as usize % vcs;
        for link in 0..self.n_links {
            if self.link_occ[link] == 0 {
                continue;
            }
            let base = self.stage_base[link];
            let last = self.link_latency[link] - 1;
            let inport = self.link_inport[link];
            let router = self.link_dst[link];
            let mut vc = rot;
            for _ in 0..vcs {
                let s = base + last * vcs + vc;
                let q = inport * vcs + vc;
                vc += 1;
                if vc == vcs {
                    vc = 0;
                }
                if let Some(mut flit) = self.slots[s] {
                    if self.inq[q].len() < self.inq_cap[q] {
                        let pk = self.packets[flit.packet as usize];
                        flit.ready_at = self.arrival_ready(&pk, router, now);
                        flit.since = now;
                        self.push_input(inport, q, router, flit);
                        self.slots[s] = None;
                        self.link_occ[link] -= 1;
                        break;
                    }
                }
            }
            for stage in (0..last).rev() {
                let mut vc = rot;
                for _ in 0..vcs {
                    let from = base + stage * vcs + vc;
                    vc += 1;
                    if vc == vcs {
                        vc = 0;
                    }
                    let to = from + vcs;
                    if self.slots[from].is_some() && self.slots[to].is_none() {
                        let mut f = self.slots[from].take().expect("checked");
                        f.since = now;
                        self.slots[to] = Some(f);
                        break;
                    }
                }
            }
        }
    }

    fn push_input(&mut self, gin: usize, qi: usize, router: usize, flit: Flit) {
        self.inq[qi].push_back(flit);
        self.port_occ[gin] += 1;
        self.router_occ[router] += 1;
    }

    fn downstream_free(&self, link: usize, vc: usize) -> bool {
        if self.elastic {
            self.slots[self.stage_base[link] + vc].is_none()
        } else {
            self.credits[link * self.vcs + vc] > 0
        }
    }

    fn owner_ok(&self, oi: usize, f: &Flit) -> bool {
        if f.seq == 0 {
            self.owner[oi] == NONE
        } else {
            self.owner[oi] == f.packet
        }
    }

    fn send(&mut self, link: usize, vc: usize, mut f: Flit, now: u64) {
        let oi = link * self.vcs + vc;
        let pk = self.packets[f.packet as usize];
        let tail = f.seq + 1 == pk.flits;
        self.out_stamp[link] = now;
        if tail {
            self.owner[oi] = NONE;
        } else if f.seq == 0 {
            self.owner[oi] = f.packet;
        }
        f.hop += 1;
        f.since = now;
        if self.elastic {
            self.slots[self.stage_base[link] + vc] = Some(f);
            self.link_occ[link] += 1;
        } else {
            self.credits[oi] -= 1;
            let at = ((now + self.link_latency[link] as u64) % self.wheel.len() as u64) as usize;
            self.wheel[at].push(Event::Flit {
                link: link as u32,
                vc: vc as u8,
                flit: f,
            });
        }
    }

    /// Removes the front flit of input queue `qi`, returning a credit
    /// upstream when the queue sits behind a credit link.
    fn pop_input(&mut self, qi: usize, now: u64) -> Flit {
        let f = self.inq[qi].pop_front().expect("front exists");
        self.inq_last_pop[qi] = now;
        let gin = qi / self.vcs;
        self.port_occ[gin] -= 1;
        self.router_occ[self.inport_router[gin]] -= 1;
        if !self.elastic {
            let link = self.inport_link[qi / self.vcs];
            if link != NONE {
                let at = ((now + self.link_latency[link as usize] as u64) % self.wheel.len() as u64) as usize;
                self.wheel[at].push(Event::Credit {
                    link,
                    vc: (qi % self.vcs) as u8,
                });
            }
        }
        f
    }

    fn eject(&mut self, f: Flit, now: u64) {
        self.ejected_flits += 1;
        if self.in_window(now) {
            self.ejected_flits_window += 1;
        }
        let pk = self.packets[f.packet as usize];
        if f.seq + 1 != pk.flits {
            return;
        }
        self.ejected_packets += 1;
        let hops = self.net.tables().path_len(pk.src_r as usize, pk.dst_r as usize);
        if pk.measured {
            let lat = now - pk.created;
            self.measured_ejected += 1;
            self.latency_sum += lat;
            self.latency_max = self.latency_max.max(lat);
            self.hops_sum += hops as u64;
        }
        if let Some(rec) = self.records.as_mut() {
            rec.push(PacketRecord {
                id: pk.id,
                src: pk.src as usize,
                dst: pk.dst as usize,
                flits: pk.flits as usize,
                created: pk.created,
                ejected: now,
                hops,
                measured: pk.measured,
            });
        }
        self.free.push(f.packet);
        if pk.wants_reply {
            self.create_packet(pk.dst as usize, pk.src as usize, REPLY_FLITS, now, false);
        }
    }

    fn allocate(&mut self, r: usize, now: u64) {
        if self.central && self.cb_count[r] > 0 {
            self.cb_read(r, now);
        }
        if self.router_occ[r] == 0 {
            return;
        }
        let nin = self.deg[r] + self.p;
        let vcs = self.vcs;
        let mut port = (now as usize + r) % nin;
        for _ in 0..nin {
            let gin = self.in_base[r] + port;
            let network = port < self.deg[r];
            port += 1;
            if port == nin {
                port = 0;
            }
            if self.port_occ[gin] == 0 {
                continue;
            }
            let nv = if network { vcs } else { 1 };
            let mut v = if network { self.vc_ptr[gin] as usize } else { 0 };
            for _ in 0..nv {
                let qi = gin * vcs + v;
                v += 1;
                if v == nv {
                    v = 0;
                }
                match self.inq[qi].front() {
                    Some(f) if f.ready_at <= now => {}
                    _ => continue,
                }
                if self.try_forward(r, qi, now) {
                    self.vc_ptr[gin] = v as u8;
                    break;
                }
            }
        }
    }

    fn try_forward(&mut self, r: usize, qi: usize, now: u64) -> bool {
        let f = *self.inq[qi].front().expect("front exists");
        let pk = self.packets[f.packet as usize];
        if pk.dst_r as usize == r {
            let port = self.n_links + pk.dst as usize;
            if self.out_stamp[port] == now {
                return false;
            }
            self.out_stamp[port] = now;
            let f = self.pop_input(qi, now);
            self.eject(f, now);
            return true;
        }
        let link = self.route_link[r * self.deg.len() + pk.dst_r as usize] as usize;
        let vc = self.vc_for(&pk, f.hop);
        let oi = link * self.vcs + vc;
        let head = f.seq == 0;
        let tail = f.seq + 1 == pk.flits;

        if self.central && self.to_cb[qi] {
            if self.cb_write_stamp[r] == now {
                return false;
            }
            let f = self.pop_input(qi, now);
            self.cb_write(r, oi, f, now);
            if tail {
                self.to_cb[qi] = false;
            }
            return true;
        }

        if head {
            bid(&mut self.reserve[oi], &pk, f.packet);
        }
        let cb_clear = !self.central || !head || self.cbq[oi].is_empty();
        if self.central && cb_clear && self.cb_stamp[link] == now {
            self.cb_yield[link] = true;
        }
        let claim_ok = !head || self.reserve[oi].1 == f.packet;
        if claim_ok && self.out_stamp[link] != now && cb_clear && self.owner_ok(oi, &f) && self.downstream_free(link, vc) {
            if head {
                self.reserve[oi] = FREE;
                if self.central && self.cb_reserve[r].1 == f.packet {
                    self.cb_reserve[r] = FREE;
                }
            }
            let f = self.pop_input(qi, now);
            self.send(link, vc, f, now);
            if self.central && head {
                self.cb_bypass += 1;
            }
            return true;
        }

        if !self.central || !head {
            return false;
        }
        bid(&mut self.cb_reserve[r], &pk, f.packet);
        if self.cb_reserve[r].1 == f.packet
            && self.cb_write_stamp[r] != now
            && self.cb_used[r] + pk.flits as usize <= self.cb_capacity
        {
            self.cb_used[r] += pk.flits as usize;
            self.cb_reserve[r] = FREE;
            if self.reserve[oi].1 == f.packet {
                self.reserve[oi] = FREE;
            }
            let f = self.pop_input(qi, now);
            self.cb_write(r, oi, f, now);
            self.to_cb[qi] = !tail;
            self.cb_buffered += 1;
            return true;
        }
        false
    }

    fn cb_write(&mut self, r: usize, oi: usize, mut f: Flit, now: u64) {
        self.cb_write_stamp[r] = now;
        f.ready_at = now + CB_DELAY;
        f.since = now;
        let q = &mut self.cbq[oi];
        if q.is_empty() {
            self.cbq_last_pop[oi] = now;
        }
        if f.seq == 0 {
            q.push_back(CbEntry {
                packet: f.packet,
                flits: VecDeque::from([f]),
            });
        } else {
            q.iter_mut()
                .rev()
                .find(|e| e.packet == f.packet)
                .expect("body follows its head into the buffer")
                .flits
                .push_back(f);
        }
        self.cb_count[r] += 1;
    }

    /// One central-buffer read per router per cycle; reads win over bypass.
    fn cb_read(&mut self, r: usize, now: u64) {
        let vcs = self.vcs;
        let n = self.deg[r] * vcs;
        let start = now as usize % n;
        for k in 0..n {
            let local = (start + k) % n;
            let link = self.link_base[r] + local / vcs;
            let vc = local % vcs;
            let oi = link * vcs + vc;
            let Some(f) = self.cbq[oi].front().and_then(|e| e.flits.front()).copied() else {
                continue;
            };
            if self.cb_yield[link] {
                self.cb_yield[link] = false;
                continue;
            }
            if f.ready_at > now || self.out_stamp[link] == now || !self.owner_ok(oi, &f) || !self.downstream_free(link, vc) {
                continue;
            }
            let entry = self.cbq[oi].front_mut().expect("entry exists");
            entry.flits.pop_front();
            if f.seq + 1 == self.packets[f.packet as usize].flits {
                self.cbq[oi].pop_front();
            }
            self.cbq_last_pop[oi] = now;
            self.cb_count[r] -= 1;
            self.cb_used[r] -= 1;
            self.cb_stamp[link] = now;
            self.send(link, vc, f, now);
            return;
        }
    }

    fn inject(&mut self, now: u64) {
        let p = self.p;
        for node in 0..self.srcq.len() {
            let Some(&pid) = self.srcq[node].front() else {
                continue;
            };
            let r = node / p;
            let qi = (self.in_base[r] + self.deg[r] + node % p) * self.vcs;
            if self.inq[qi].len() >= self.inq_cap[qi] {
                continue;
            }
            let pk = self.packets[pid as usize];
            let seq = self.src_seq[node];
            let flit = Flit {
                packet: pid,
                seq,
                hop: 0,
                ready_at: self.arrival_ready(&pk, r, now),
                since: now,
            };
            if self.inq[qi].is_empty() {
                self.inq_last_pop[qi] = now;
            }
            self.push_input(qi / self.vcs, qi, r, flit);
            self.injected_flits += 1;
            if seq == 0 {
                self.injected_packets += 1;
                self.packets[pid as usize].entered = now;
            }
            if seq + 1 == pk.flits {
                self.srcq[node].pop_front();
                self.src_seq[node] = 0;
            } else {
                self.src_seq[node] = seq + 1;
            }
        }
    }

    fn in_flight(&self) -> u64 {
        let queued: usize = self.inq.iter().map(VecDeque::len).sum::<usize>() + self.cbq.iter().flatten().map(|e| e.flits.len()).sum::<usize>();
        let on_links = if self.elastic {
            self.link_occ.iter().map(|&c| c as usize).sum()
        } else {
            self.wheel
                .iter()
                .flatten()
                .filter(|e| matches!(e, Event::Flit { .. }))
                .count()
        };
        (queued + on_links) as u64
    }

    fn check_stall(&self, now: u64) -> Result<(), SimError> {
        debug_assert_eq!(self.injected_flits, self.ejected_flits + self.in_flight());
        let bound = self.cfg.stall_bound;
        let stall = |waited: u64, router: usize| {
            if waited > bound {
                Err(SimError::Stall {
                    cycle: now,
                    router,
                    waited,
                })
            } else {
                Ok(())
            }
        };
        for (qi, q) in self.inq.iter().enumerate() {
            if let Some(f) = q.front() {
                stall(now - f.since.max(self.inq_last_pop[qi]), self.inport_router[qi / self.vcs])?;
            }
        }
        for (oi, q) in self.cbq.iter().enumerate() {
            if let Some(f) = q.front().and_then(|e| e.flits.front()) {
                let link = oi / self.vcs;
                let router = self.link_base.partition_point(|&b| b <= link) - 1;
                stall(now - f.since.max(self.cbq_last_pop[oi]), router)?;
            }
        }
        if self.elastic {
            for link in 0..self.n_links {
                if self.link_occ[link] == 0 {
                    continue;
                }
                let span = self.link_latency[link] * self.vcs;
                let base = self.stage_base[link];
                for f in self.slots[base..base + span].iter().flatten() {
                    stall(now - f.since, self.link_dst[link])?;
                }
            }
        }
        Ok(())
    }

    fn report(&self, cycles: u64) -> SimReport {
        let t = self.net.topology();
        let nodes = t.nodes();
        let window = (nodes as u64 * self.cfg.measure_cycles) as f64;
        let avg = if self.measured_ejected > 0 {
            self.latency_sum as f64 / self.measured_ejected as f64
        } else {
            0.0
        };
        let zero_load = mean_zero_load_from_latencies(self.net, &self.link_latency, &self.link_base, self.cfg.packet_flits);
        let throughput = self.ejected_flits_window as f64 / window;
        let generated_rate = self.generated_flits_window as f64 / window;
        let saturated = self.measured_ejected < self.measured_packets
            || (zero_load > 0.0 && avg > 5.0 * zero_load)
            || throughput < 0.9 * generated_rate;
        let mut records = self.records.clone();
        if let Some(r) = records.as_mut() {
            r.sort_by_key(|p| p.id);
        }
        SimReport {
            topology: t.name().to_string(),
            pattern: self.cfg.pattern.name().to_string(),
            buffering: self.cfg.buffering.to_string(),
            seed: self.cfg.seed,
            nodes,
            packet_flits: self.cfg.packet_flits,
            injection_rate: self.cfg.injection_rate,
            h: self.cfg.h,
            avg_packet_latency: avg,
            avg_packet_latency_ns: avg * cycle_time_ns(t.kind()),
            max_packet_latency: self.latency_max,
            avg_hops: if self.measured_ejected > 0 {
                self.hops_sum as f64 / self.measured_ejected as f64
            } else {
                0.0
            },
            zero_load_latency: zero_load,
            throughput,
            generated_rate,
            generated_packets: self.generated_packets,
            injected_packets: self.injected_packets,
            ejected_packets: self.ejected_packets,
            measured_packets: self.measured_packets,
            measured_ejected: self.measured_ejected,
            ejected_flits_window: self.ejected_flits_window,
            in_flight_at_end: self.injected_flits - self.ejected_flits,
            cb_bypass: self.cb_bypass,
            cb_buffered: self.cb_buffered,
            cycles,
            saturated,
            packets: records,
        }
    }
}
