use std::collections::HashSet;

use proptest::prelude::*;
use slimnoc::cost::{
    avg_wire_length, buffer_for_distance, cost_report, envelope_band, rtt, scaling_envelope, total_central_buffers,
    total_edge_buffers, total_uniform_buffers, uniform_buffer_size, BufferParams, UniformBuffer,
};
use slimnoc::layout::{layout_basic, layout_gr, layout_grid, layout_rand, layout_subgr, make_layout, Layout, LayoutKind};
use slimnoc::topo::{build_torus, slim_noc, sn_params};
use slimnoc::wiring::{
    check_constraint, crossing_counts, path_cells, place_wire, plan_wires, CountMode, TechProfile, DEFAULT_LINK_WIDTH,
};
use slimnoc::Exec;

fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

#[test]
fn label_layouts_fill_a_q_by_2q_rectangle() {
    for q in [3, 4, 5, 7] {
        let t = slim_noc(q, 1).unwrap();
        for l in [layout_basic(&t).unwrap(), layout_subgr(&t).unwrap(), layout_rand(&t, 3).unwrap()] {
            assert_eq!(l.extent(), (q, 2 * q));
            let cells: HashSet<_> = l.coords().iter().copied().collect();
            assert_eq!(cells.len(), 2 * q * q);
        }
    }
}

#[test]
fn label_formulas() {
    let t = slim_noc(5, 4).unwrap();
    let labels = t.labels().unwrap();
    let basic = layout_basic(&t).unwrap();
    let subgr = layout_subgr(&t).unwrap();
    for (r, l) in labels.iter().enumerate() {
        let (g, a, b) = (l.group_type as usize, l.subgroup, l.position);
        assert_eq!(basic.pos(r), (b, a + g * 5));
        assert_eq!(subgr.pos(r), (b, 2 * a - (1 - g)));
    }
}

#[test]
fn group_layout_for_q9() {
    let t = slim_noc(9, 8).unwrap();
    let l = layout_gr(&t).unwrap();
    assert_eq!(l.extent(), (15, 12));
    let at = |g: usize, a: usize, b: usize| l.pos(g * 81 + (a - 1) * 9 + (b - 1));
    assert_eq!(at(0, 1, 1), (2, 1));
    assert_eq!(at(0, 1, 5), (1, 1));
    assert_eq!(at(1, 9, 9), (14, 12));
}

#[test]
fn random_layout_depends_only_on_seed() {
    let t = slim_noc(5, 4).unwrap();
    assert_eq!(layout_rand(&t, 7).unwrap(), layout_rand(&t, 7).unwrap());
    assert_ne!(layout_rand(&t, 7).unwrap(), layout_rand(&t, 8).unwrap());
}

#[test]
fn grid_layout_and_rejections() {
    let t = build_torus(10, 5, 4).unwrap();
    let l = layout_grid(&t).unwrap();
    assert_eq!(l.extent(), (5, 10));
    assert_eq!(l.pos(7), (3, 2));
    assert!(layout_subgr(&t).is_err());
    assert!(layout_grid(&slim_noc(5, 4).unwrap()).is_err());
    assert!(Layout::new(LayoutKind::Grid, (2, 2), vec![(1, 1), (1, 1)]).is_err());
    assert!(Layout::new(LayoutKind::Grid, (2, 2), vec![(3, 1)]).is_err());
}

#[test]
fn layout_serialization() {
    let t = slim_noc(5, 4).unwrap();
    let l = layout_gr(&t).unwrap();
    assert_eq!(Layout::from_json(&l.to_json()).unwrap(), l);
    let csv = l.to_csv();
    assert_eq!(csv.lines().next(), Some("router,x,y"));
    assert_eq!(csv.lines().count(), 51);
    assert_eq!("sn_gr".parse::<LayoutKind>().unwrap(), LayoutKind::Group);
    assert_eq!("rand:9".parse::<LayoutKind>().unwrap(), LayoutKind::Random { seed: 9 });
    assert!("spiral".parse::<LayoutKind>().is_err());
}

#[test]
fn crossing_total_is_sum_of_covered_cells() {
    let t = slim_noc(5, 4).unwrap();
    for kind in [LayoutKind::Basic, LayoutKind::Subgroup, LayoutKind::Group, LayoutKind::Random { seed: 1 }] {
        let l = make_layout(&t, kind).unwrap();
        let plan = plan_wires(&t, &l, DEFAULT_LINK_WIDTH, Exec::Parallel);
        let grid = crossing_counts(&l, &plan, Exec::Parallel);
        let want: u64 = t.edges().map(|(i, j)| (manhattan(l.pos(i), l.pos(j)) + 1) as u64).sum();
        assert_eq!(grid.total(), want);
        // Every router cell is crossed by at least its own k' links.
        for r in 0..t.routers() {
            let (x, y) = l.pos(r);
            assert!(grid.get(x, y) >= 7);
        }
        let seq = crossing_counts(&l, &plan_wires(&t, &l, DEFAULT_LINK_WIDTH, Exec::Sequential), Exec::Sequential);
        assert_eq!(seq, grid);
    }
}

#[test]
fn constraint_verdict_scales_with_link_width() {
    let t = slim_noc(5, 4).unwrap();
    let l = layout_subgr(&t).unwrap();
    let grid = crossing_counts(&l, &plan_wires(&t, &l, 128, Exec::Parallel), Exec::Parallel);
    let tech = TechProfile::for_node(45).unwrap();
    assert_eq!(tech.max_wires(), 7000.0);
    let ok = check_constraint(&grid, tech, 128, CountMode::Wires);
    assert!(ok.pass);
    assert_eq!(ok.max_load, ok.max_links as f64 * 128.0);
    let wide = check_constraint(&grid, tech, 4096, CountMode::Wires);
    assert!(!wide.pass);
    assert!(wide.violations.iter().all(|v| v.load > 7000.0));
    assert!(check_constraint(&grid, tech, 4096, CountMode::Links).pass);
    assert!(TechProfile::for_node(65).is_none());
}

#[test]
fn round_trip_and_buffer_formulas() {
    assert_eq!(rtt(0, 1), 3);
    assert_eq!(rtt(5, 1), 13);
    assert_eq!(rtt(5, 9), 5);
    assert_eq!(rtt(10, 9), 7);
    let p = BufferParams::new(1.0, 2, 1, 20).unwrap();
    assert_eq!(buffer_for_distance(5, &p), 26);
    let frac = BufferParams::new(0.3, 3, 1, 20).unwrap();
    // 13 * 0.3 * 3 = 11.7
    assert_eq!(buffer_for_distance(5, &frac), 12);
    assert!(BufferParams::new(0.0, 2, 1, 20).is_err());
    assert!(BufferParams::new(1.0, 0, 1, 20).is_err());
    assert!(BufferParams::new(1.0, 2, 0, 20).is_err());
}

#[test]
fn central_buffers_are_layout_invariant() {
    let t = slim_noc(5, 4).unwrap();
    let p = BufferParams::default();
    let reports: Vec<_> = [LayoutKind::Basic, LayoutKind::Subgroup, LayoutKind::Group]
        .into_iter()
        .map(|k| cost_report(&t, &make_layout(&t, k).unwrap(), &p, Exec::Parallel))
        .collect();
    assert!(reports.windows(2).all(|w| w[0].delta_cb == w[1].delta_cb));
    assert_eq!(reports[0].delta_cb, 50 * (20 + 2 * 7 * 2));
    assert_eq!(total_central_buffers(50, 7, &p), reports[0].delta_cb);
}

#[test]
fn uniform_sizing_bounds_exact_sizing() {
    let t = slim_noc(5, 4).unwrap();
    let l = layout_basic(&t).unwrap();
    let p = BufferParams::default();
    let exact = total_edge_buffers(&t, &l, &p);
    let min = total_uniform_buffers(&t, &l, &p, UniformBuffer::Min);
    let max = total_uniform_buffers(&t, &l, &p, UniformBuffer::Max);
    assert!(min <= exact && exact <= max);
    assert_eq!(uniform_buffer_size(&t, &l, &p, UniformBuffer::Fixed(9)), 9);
}

#[test]
fn scaling_envelope_stays_in_a_narrow_band() {
    let rows = scaling_envelope(&[3, 5, 7, 9], Exec::Parallel).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let c = sn_params(r.q, 1).unwrap();
        assert_eq!(r.n_r, c.n_r);
    }
    assert!(envelope_band(&rows) <= 3.0);
}

proptest! {
    #[test]
    fn wire_is_a_shortest_manhattan_path(ax in 1usize..20, ay in 1usize..20, bx in 1usize..20, by in 1usize..20) {
        let (a, b) = ((ax, ay), (bx, by));
        prop_assume!(a != b);
        let path = place_wire(a, b);
        prop_assert!(path.len() == 2 || path.len() == 3);
        prop_assert_eq!(path[0], a);
        prop_assert_eq!(*path.last().unwrap(), b);
        for w in path.windows(2) {
            prop_assert!(w[0].0 == w[1].0 || w[0].1 == w[1].1);
        }
        let cells = path_cells(&path);
        prop_assert_eq!(cells.len(), manhattan(a, b) + 1);
        let unique: HashSet<_> = cells.iter().collect();
        prop_assert_eq!(unique.len(), cells.len());
    }

    #[test]
    fn edge_buffer_total_matches_pairwise_oracle(q in prop::sample::select(vec![3usize, 4, 5, 7]), vc in 1usize..5, h in 1usize..10, bl in 1usize..4, seed in 0u64..50) {
        let t = slim_noc(q, 1).unwrap();
        let l = layout_rand(&t, seed).unwrap();
        let b_over_l = bl as f64 / 2.0;
        let p = BufferParams::new(b_over_l, vc, h, 20).unwrap();
        // Ordered pairs: each link end owns one buffer.
        let mut oracle = 0u64;
        for i in 0..t.routers() {
            for j in 0..t.routers() {
                if t.is_adjacent(i, j) {
                    let d = manhattan(l.pos(i), l.pos(j));
                    let cycles = 2 * ((d + h - 1) / h) + 3;
                    // ceil(cycles * bl * vc / 2) in integers.
                    oracle += ((cycles * bl * vc + 1) / 2) as u64;
                }
            }
        }
        prop_assert_eq!(total_edge_buffers(&t, &l, &p), oracle);
        prop_assert_eq!(cost_report(&t, &l, &p, Exec::Sequential).delta_eb, oracle);
    }

    #[test]
    fn average_wire_length_matches_pairwise_mean(q in prop::sample::select(vec![3usize, 5, 7]), seed in 0u64..50) {
        let t = slim_noc(q, 1).unwrap();
        let l = layout_rand(&t, seed).unwrap();
        let mut sum = 0usize;
        let mut n = 0usize;
        for i in 0..t.routers() {
            for &j in t.neighbors(i) {
                sum += manhattan(l.pos(i), l.pos(j));
                n += 1;
            }
        }
        prop_assert!((avg_wire_length(&t, &l) - sum as f64 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn central_buffer_formula(routers in 1usize..500, k in 1usize..40, vc in 1usize..6, cb in 0usize..100) {
        let p = BufferParams::new(1.0, vc, 1, cb).unwrap();
        prop_assert_eq!(total_central_buffers(routers, k, &p), (routers * (cb + 2 * k * vc)) as u64);
    }
}
