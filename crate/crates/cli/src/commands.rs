use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::Serialize;
use slimnoc::cost::{cost_report, BufferParams};
use slimnoc::ff::FieldTable;
use slimnoc::layout::{make_layout, Layout, LayoutKind};
use slimnoc::presets::{preset, presets};
use slimnoc::route::{assign_vcs, build_tables, check_deadlock_free, DeadlockVerdict};
use slimnoc::sim::{curve_to_csv, run, sweep, Buffering, CurvePoint, LinkMode, Network, Pattern, SimConfig, Trace};
use slimnoc::topo::{
    build_cmesh, build_fbf, build_pfbf, build_torus, feasible_splits, nearest_feasible, slim_noc, sn_params, SnConfig,
    Topology, TopologyKind,
};
use slimnoc::wiring::{check_constraint, crossing_counts, plan_wires, CountMode, TechProfile};
use slimnoc::Exec;

use crate::output::{RunManifest, Sink};
use crate::report::merge_reports;
use crate::{
    Cli, CliError, Command, CompareArgs, CostArgs, GenerateArgs, NetArgs, RouteArgs, SimArgs, SimulateArgs, SweepArgs,
    TopologyChoice, WiringArgs,
};

/// Everything a command needs besides its own arguments.
pub(crate) struct Ctx {
    exec: Exec,
    argv: Vec<String>,
    out: Option<PathBuf>,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    pub(crate) fn sink(&self, command: &str, default_name: &str) -> Sink {
        Sink::new(command, self.argv.clone(), self.out.clone(), self.out_dir.clone(), default_name)
    }
}

pub fn dispatch(cli: Cli, mut argv: Vec<String>) -> Result<()> {
    // A directory taken from the environment is pinned into the manifest so
    // that replay writes to the same place.
    if cli.out.is_none() && !argv.iter().any(|a| a.starts_with("--out-dir")) {
        if let Some(dir) = &cli.out_dir {
            argv.push("--out-dir".into());
            argv.push(dir.display().to_string());
        }
    }
    let ctx = Ctx {
        exec: cli.exec(),
        argv,
        out: cli.out,
        out_dir: cli.out_dir,
    };
    match cli.cmd {
        Command::Field { q } => field(&ctx, q),
        Command::Generate(a) => generate(&ctx, a),
        Command::Layout(a) => layout(&ctx, a),
        Command::Wiring(a) => wiring(&ctx, a),
        Command::Cost(a) => cost(&ctx, a),
        Command::Route(a) => route(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Sweep(a) => sweep_cmd(&ctx, a),
        Command::Compare(a) => compare(&ctx, a),
        Command::Report(a) => merge_reports(&ctx, a),
        Command::Presets => list_presets(&ctx),
        Command::Replay { manifest } => replay(&manifest),
    }
}

fn field(ctx: &Ctx, q: usize) -> Result<()> {
    let table = FieldTable::new(q)?;
    let mut sink = ctx.sink("field", &format!("gf{q}.json"));
    sink.config(serde_json::json!({ "q": q }), None);
    sink.write(&table.to_json())
}

/// A resolved network description.
struct Net {
    topology: Topology,
    layout: Layout,
    vcs: usize,
}

fn default_vcs(kind: &TopologyKind) -> usize {
    match kind {
        TopologyKind::Pfbf { .. } => 4,
        _ => 2,
    }
}

fn default_layout(kind: &TopologyKind) -> LayoutKind {
    match kind {
        TopologyKind::SlimNoc { .. } => LayoutKind::Subgroup,
        _ => LayoutKind::Grid,
    }
}

fn require(v: Option<usize>, flag: &str, topo: &str) -> Result<usize> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for {topo}")).into())
}

fn build_topology(a: &NetArgs) -> Result<Topology> {
    let p = require(a.p, "p", "this topology")?;
    let dims = |name: &str| -> Result<(usize, usize)> { Ok((require(a.rows, "rows", name)?, require(a.cols, "cols", name)?)) };
    Ok(match a.topology {
        TopologyChoice::Slimnoc => slim_noc(require(a.q, "q", "slimnoc")?, p)?,
        TopologyChoice::Torus => {
            let (r, c) = dims("torus")?;
            build_torus(r, c, p)?
        }
        TopologyChoice::Mesh => {
            let (r, c) = dims("mesh")?;
            build_cmesh(r, c, p)?
        }
        TopologyChoice::Fbf => {
            let (r, c) = dims("fbf")?;
            build_fbf(r, c, p)?
        }
        TopologyChoice::Pfbf => {
            let (r, c) = dims("pfbf")?;
            build_pfbf(a.px, a.py, r, c, p)?
        }
    })
}

fn resolve(a: &NetArgs, sink: &mut Sink) -> Result<Net> {
    let layout_flag: Option<LayoutKind> = a.layout.as_deref().map(str::parse).transpose()?;
    let (topology, kind, vcs) = if let Some(name) = &a.preset {
        let p = preset(name)?;
        (p.topology()?, p.layout, p.vcs)
    } else {
        let t = match &a.input {
            Some(path) => {
                sink.input(path);
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Topology::from_json(&text)?
            }
            None => build_topology(a)?,
        };
        let kind = default_layout(t.kind());
        let vcs = default_vcs(t.kind());
        (t, kind, vcs)
    };
    let layout = make_layout(&topology, layout_flag.unwrap_or(kind))?;
    Ok(Net {
        topology,
        layout,
        vcs: a.vc.unwrap_or(vcs),
    })
}

fn network(net: Net, exec: Exec) -> Result<Network> {
    Ok(Network::new(net.topology, net.layout, net.vcs, exec)?)
}

fn format_of(a: &NetArgs, default: &str, allowed: &[&str]) -> Result<String> {
    let f = a.format.clone().unwrap_or_else(|| default.to_string()).to_ascii_lowercase();
    if !allowed.contains(&f.as_str()) {
        bail!(CliError::Usage(format!("--format must be one of {}", allowed.join(", "))));
    }
    Ok(f)
}

#[derive(Serialize)]
struct Splits {
    n: usize,
    splits: Vec<SnConfig>,
}

fn infeasible_message(n: usize) -> String {
    let show = |c: Option<SnConfig>| match c {
        Some(c) => format!("{} (q={}, p={})", c.n, c.q, c.p),
        None => "none".into(),
    };
    let (below, above) = nearest_feasible(n, None);
    let mut msg = format!(
        "N = {n} has no Slim NoC split N = 2q^2 p with prime-power q and 1 <= p <= k'\nnearest: {} and {}",
        show(below),
        show(above)
    );
    for p in 1..=16 {
        let (b, a) = nearest_feasible(n, Some(p));
        if b.is_some() || a.is_some() {
            msg.push_str(&format!("\nnearest with p={p}: {} and {}", show(b), show(a)));
        }
    }
    msg
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> Result<()> {
    if let Some(n) = a.n {
        let splits: Vec<SnConfig> = feasible_splits(n)
            .into_iter()
            .filter(|c| a.net.p.is_none_or(|p| c.p == p))
            .collect();
        if splits.is_empty() {
            bail!(CliError::Invalid(infeasible_message(n)));
        }
        let mut sink = ctx.sink("generate", &format!("splits_{n}.json"));
        sink.config(&a, None);
        return sink.write(&serde_json::to_string_pretty(&Splits { n, splits })?);
    }
    let format = format_of(&a.net, "json", &["json", "dot"])?;
    let t = if let Some(name) = &a.net.preset {
        preset(name)?.topology()?
    } else {
        if matches!(a.net.topology, TopologyChoice::Slimnoc) {
            // Reject impossible parameters before construction starts.
            sn_params(require(a.net.q, "q", "slimnoc")?, require(a.net.p, "p", "slimnoc")?)?;
        }
        build_topology(&a.net)?
    };
    let mut sink = ctx.sink("generate", &format!("{}.{format}", t.name()));
    sink.config(&a, None);
    sink.write(&if format == "dot" { t.to_dot() } else { t.to_json() })
}

fn layout(ctx: &Ctx, a: NetArgs) -> Result<()> {
    let format = format_of(&a, "json", &["json", "csv"])?;
    let mut sink = ctx.sink("layout", &format!("layout.{format}"));
    sink.config(&a, None);
    let net = resolve(&a, &mut sink)?;
    sink.write(&if format == "csv" { net.layout.to_csv() } else { net.layout.to_json() })
}

fn tech(node: u32) -> Result<TechProfile> {
    TechProfile::for_node(node).ok_or_else(|| CliError::Invalid(format!("--tech must be 45, 22 or 11, got {node}")).into())
}

fn wiring(ctx: &Ctx, a: WiringArgs) -> Result<()> {
    format_of(&a.net, "json", &["json"])?;
    let mode = match a.count.to_ascii_lowercase().as_str() {
        "wires" => CountMode::Wires,
        "links" => CountMode::Links,
        other => bail!(CliError::Usage(format!("--count must be wires or links, got {other}"))),
    };
    let profile = tech(a.tech)?;
    let mut sink = ctx.sink("wiring", "wiring.json");
    sink.config(&a, None);
    let net = resolve(&a.net, &mut sink)?;
    let plan = plan_wires(&net.topology, &net.layout, a.link_width, ctx.exec);
    let grid = crossing_counts(&net.layout, &plan, ctx.exec);
    let check = check_constraint(&grid, profile, a.link_width, mode);
    if let Some(path) = &a.grid_csv {
        sink.extra(path, grid.to_csv());
    }
    if !check.pass {
        eprintln!(
            "wiring budget exceeded in {} cells (max {:.0} of {:.0})",
            check.violations.len(),
            check.max_load,
            check.limit
        );
    }
    sink.write(&check.to_json())
}

fn cost(ctx: &Ctx, a: CostArgs) -> Result<()> {
    format_of(&a.net, "json", &["json"])?;
    let mut sink = ctx.sink("cost", "cost.json");
    sink.config(&a, None);
    let net = resolve(&a.net, &mut sink)?;
    let params = BufferParams::new(a.buffers.b_over_l, net.vcs, a.buffers.h, a.buffers.cb)?;
    let report = cost_report(&net.topology, &net.layout, &params, ctx.exec);
    sink.write(&report.to_json())
}

#[derive(Serialize)]
struct RouteOutput {
    topology: String,
    scheme: slimnoc::route::RouteScheme,
    vcs: usize,
    max_path_len: usize,
    deadlock: DeadlockVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    tables: Option<serde_json::Value>,
}

fn route(ctx: &Ctx, a: RouteArgs) -> Result<()> {
    format_of(&a.net, "json", &["json"])?;
    let mut sink = ctx.sink("route", "route.json");
    sink.config(&a, None);
    let net = resolve(&a.net, &mut sink)?;
    let tables = build_tables(&net.topology, ctx.exec)?;
    let policy = assign_vcs(&net.topology, &tables, net.vcs)?;
    let verdict = check_deadlock_free(&net.topology, &tables, &policy, ctx.exec);
    let acyclic = verdict.acyclic;
    let out = RouteOutput {
        topology: net.topology.name().to_string(),
        scheme: tables.scheme(),
        vcs: net.vcs,
        max_path_len: tables.max_path_len(),
        deadlock: verdict,
        tables: a.tables.then(|| serde_json::from_str(&tables.to_json())).transpose()?,
    };
    sink.write(&serde_json::to_string_pretty(&out)?)?;
    if !acyclic {
        bail!(CliError::Invalid("channel dependency graph has a cycle".into()));
    }
    Ok(())
}

fn sim_config(a: &SimArgs, sink: &mut Sink) -> Result<SimConfig> {
    let buffering: Buffering = a.buffering.parse()?;
    let pattern = match &a.trace {
        Some(path) => {
            sink.input(path);
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Pattern::Trace(Arc::new(Trace::from_reader(file)?))
        }
        None => a.pattern.parse()?,
    };
    let cfg = SimConfig {
        buffering,
        pattern,
        packet_flits: a.flits,
        h: a.h,
        warmup_cycles: a.warmup,
        measure_cycles: a.cycles,
        seed: a.seed,
        reply: a.reply,
        stall_bound: a.stall_bound,
        link_mode: if a.average_links { LinkMode::Average } else { LinkMode::Exact },
        ..SimConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    format_of(&a.net, "json", &["json"])?;
    let mut sink = ctx.sink("simulate", "simulate.json");
    sink.config(&a, Some(a.sim.seed));
    let mut cfg = sim_config(&a.sim, &mut sink)?;
    cfg.injection_rate = a.rate;
    cfg.record_packets = a.packets;
    let net = network(resolve(&a.net, &mut sink)?, ctx.exec)?;
    let report = run(&net, &cfg)?;
    sink.write(&report.to_json())
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        bail!(CliError::Usage("--rates needs at least one value".into()));
    }
    if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        bail!(CliError::Invalid("rates must be positive".into()));
    }
    Ok(())
}

fn sweep_cmd(ctx: &Ctx, a: SweepArgs) -> Result<()> {
    let format = format_of(&a.net, "csv", &["csv", "json"])?;
    check_rates(&a.rates)?;
    let mut sink = ctx.sink("sweep", &format!("sweep.{format}"));
    sink.config(&a, Some(a.sim.seed));
    let cfg = sim_config(&a.sim, &mut sink)?;
    let net = network(resolve(&a.net, &mut sink)?, ctx.exec)?;
    let reports = sweep(&net, &cfg, &a.rates, ctx.exec)?;
    let body = if format == "json" {
        serde_json::to_string_pretty(&reports)?
    } else {
        curve_to_csv(&reports.iter().map(CurvePoint::from).collect::<Vec<_>>())
    };
    sink.write(&body)
}

#[derive(Serialize)]
struct CompareRow {
    preset: String,
    rate: f64,
    latency_cycles: f64,
    latency_ns: f64,
    throughput: f64,
    saturated: bool,
    #[serde(rename = "M")]
    m: f64,
    delta_eb: u64,
    delta_cb: u64,
    max_wire_load: f64,
    wire_limit: f64,
    constraint: &'static str,
}

fn compare(ctx: &Ctx, a: CompareArgs) -> Result<()> {
    let names: Vec<&str> = a.presets.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        bail!(CliError::Usage("--presets needs at least one preset name".into()));
    }
    check_rates(&a.rates)?;
    let profile = tech(a.tech)?;
    let mut sink = ctx.sink("compare", "compare.csv");
    sink.config(&a, Some(a.sim.seed));
    let cfg = sim_config(&a.sim, &mut sink)?;
    let resolved = names.iter().map(|n| preset(n)).collect::<Result<Vec<_>, _>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for p in resolved {
        let net = p.network(ctx.exec)?;
        let params = BufferParams::new(cfg.b_over_l, p.vcs, cfg.h, a.cb)?;
        let cost = cost_report(net.topology(), net.layout(), &params, ctx.exec);
        let plan = plan_wires(net.topology(), net.layout(), a.link_width, ctx.exec);
        let grid = crossing_counts(net.layout(), &plan, ctx.exec);
        let check = check_constraint(&grid, profile, a.link_width, CountMode::Wires);
        let reports = sweep(&net, &cfg, &a.rates, ctx.exec).with_context(|| format!("simulating {}", p.name))?;
        for r in reports {
            w.serialize(CompareRow {
                preset: p.name.to_string(),
                rate: r.injection_rate,
                latency_cycles: r.avg_packet_latency,
                latency_ns: r.avg_packet_latency_ns,
                throughput: r.throughput,
                saturated: r.saturated,
                m: cost.m,
                delta_eb: cost.delta_eb,
                delta_cb: cost.delta_cb,
                max_wire_load: check.max_load,
                wire_limit: check.limit,
                constraint: if check.pass { "pass" } else { "fail" },
            })?;
        }
    }
    sink.write(&String::from_utf8(w.into_inner()?)?)
}

fn list_presets(ctx: &Ctx) -> Result<()> {
    let mut sink = ctx.sink("presets", "presets.json");
    sink.config(serde_json::Value::Null, None);
    if sink.target().is_some() {
        return sink.write(&serde_json::to_string_pretty(presets())?);
    }
    let lines: Vec<String> = presets().iter().map(|p| format!("{p}  vcs={} layout={}", p.vcs, p.layout.short_name())).collect();
    sink.write(&lines.join("\n"))
}

fn replay(path: &Path) -> Result<()> {
    let manifest = RunManifest::load(path)?;
    if manifest.command == "replay" {
        bail!(CliError::Invalid("manifest records a replay".into()));
    }
    eprintln!("replaying: slimnoc {}", manifest.argv.join(" "));
    let cli = Cli::try_parse_from(std::iter::once("slimnoc".to_string()).chain(manifest.argv.iter().cloned()))
        .map_err(|e| CliError::Invalid(format!("manifest arguments no longer parse: {e}")))?;
    dispatch(cli, manifest.argv)
}
