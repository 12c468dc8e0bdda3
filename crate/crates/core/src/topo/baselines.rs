use super::{TopoError, Topology, TopologyKind};

// Routers are numbered row-major: r = row * cols + col.

fn check_grid(rows: usize, cols: usize) -> Result<(), TopoError> {
    if rows == 0 || cols == 0 {
        return Err(TopoError::InvalidDimensions(format!("{rows}x{cols}")));
    }
    Ok(())
}

pub fn build_torus(rows: usize, cols: usize, p: usize) -> Result<Topology, TopoError> {
    check_grid(rows, cols)?;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let me = r * cols + c;
            let down = ((r + 1) % rows) * cols + c;
            let right = r * cols + (c + 1) % cols;
            if down != me {
                edges.push((me, down));
            }
            if right != me {
                edges.push((me, right));
            }
        }
    }
    Topology::from_edges(
        format!("t2d_{rows}x{cols}"),
        TopologyKind::Torus { rows, cols },
        rows * cols,
        p,
        edges,
    )
}

pub fn build_cmesh(rows: usize, cols: usize, p: usize) -> Result<Topology, TopoError> {
    check_grid(rows, cols)?;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let me = r * cols + c;
            if r + 1 < rows {
                edges.push((me, me + cols));
            }
            if c + 1 < cols {
                edges.push((me, me + 1));
            }
        }
    }
    Topology::from_edges(
        format!("cm_{rows}x{cols}"),
        TopologyKind::Mesh { rows, cols },
        rows * cols,
        p,
        edges,
    )
}

fn fbf_edges(rows: usize, cols: usize, id: impl Fn(usize, usize) -> usize, edges: &mut Vec<(usize, usize)>) {
    for r in 0..rows {
        for c in 0..cols {
            for c2 in (c + 1)..cols {
                edges.push((id(r, c), id(r, c2)));
            }
            for r2 in (r + 1)..rows {
                edges.push((id(r, c), id(r2, c)));
            }
        }
    }
}

pub fn build_fbf(rows: usize, cols: usize, p: usize) -> Result<Topology, TopoError> {
    check_grid(rows, cols)?;
    let mut edges = Vec::new();
    fbf_edges(rows, cols, |r, c| r * cols + c, &mut edges);
    Topology::from_edges(
        format!("fbf_{rows}x{cols}"),
        TopologyKind::Fbf { rows, cols },
        rows * cols,
        p,
        edges,
    )
}

/// Partitioned flattened butterfly: a `partitions_y` x `partitions_x` grid
/// of `sub_rows` x `sub_cols` FBFs. Each router also links to the router at
/// the same local position in every adjacent partition.
pub fn build_pfbf(
    partitions_x: usize,
    partitions_y: usize,
    sub_rows: usize,
    sub_cols: usize,
    p: usize,
) -> Result<Topology, TopoError> {
    check_grid(partitions_x, partitions_y)?;
    check_grid(sub_rows, sub_cols)?;
    let cols = partitions_x * sub_cols;
    let id = |pr: usize, pc: usize, r: usize, c: usize| (pr * sub_rows + r) * cols + pc * sub_cols + c;
    let mut edges = Vec::new();
    for pr in 0..partitions_y {
        for pc in 0..partitions_x {
            fbf_edges(sub_rows, sub_cols, |r, c| id(pr, pc, r, c), &mut edges);
            for r in 0..sub_rows {
                for c in 0..sub_cols {
                    if pc + 1 < partitions_x {
                        edges.push((id(pr, pc, r, c), id(pr, pc + 1, r, c)));
                    }
                    if pr + 1 < partitions_y {
                        edges.push((id(pr, pc, r, c), id(pr + 1, pc, r, c)));
                    }
                }
            }
        }
    }
    Topology::from_edges(
        format!("pfbf_{partitions_x}x{partitions_y}_{sub_rows}x{sub_cols}"),
        TopologyKind::Pfbf {
            partitions_x,
            partitions_y,
            sub_rows,
            sub_cols,
        },
        partitions_x * partitions_y * sub_rows * sub_cols,
        p,
        edges,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::diameter;

    #[test]
    fn torus_shapes() {
        let t = build_torus(10, 5, 4).unwrap();
        assert_eq!((t.nodes(), t.router_radix()), (200, 8));
        assert_eq!(t.regular_degree(), Some(4));
        assert_eq!(diameter(&t).unwrap(), 5 + 2);
        let t = build_torus(2, 2, 1).unwrap();
        assert_eq!(t.regular_degree(), Some(2));
        assert_eq!(diameter(&t).unwrap(), 2);
        let t = build_torus(1, 1, 1).unwrap();
        assert_eq!(t.edge_count(), 0);
    }

    #[test]
    fn mesh_shapes() {
        let t = build_cmesh(12, 12, 9).unwrap();
        assert_eq!((t.nodes(), t.router_radix()), (1296, 13));
        assert_eq!(diameter(&t).unwrap(), 22);
        assert_eq!(t.degree(0), 2);
    }

    #[test]
    fn fbf_shapes() {
        let t = build_fbf(8, 8, 3).unwrap();
        assert_eq!((t.network_radix(), t.router_radix(), t.nodes()), (14, 17, 192));
        assert_eq!(diameter(&t).unwrap(), 2);
        let t = build_fbf(2, 2, 1).unwrap();
        assert_eq!(t.regular_degree(), Some(2));
    }

    #[test]
    fn pfbf_shapes() {
        let t = build_pfbf(2, 2, 4, 4, 3).unwrap();
        assert_eq!((t.nodes(), t.regular_degree()), (192, Some(8)));
        assert_eq!(diameter(&t).unwrap(), 4);
        let t = build_pfbf(1, 2, 5, 5, 4).unwrap();
        assert_eq!((t.nodes(), t.regular_degree()), (200, Some(9)));
        assert_eq!(t.kind().grid_dims(), Some((10, 5)));
    }

    #[test]
    fn pfbf_partitions_are_disjoint_fbfs() {
        let t = build_pfbf(2, 2, 3, 3, 1).unwrap();
        // (0,0) and (0,2) share a row inside partition (0,0).
        assert!(t.is_adjacent(0, 2));
        // (0,2) and (0,3) are in different partitions at different local positions.
        assert!(!t.is_adjacent(2, 3));
        // (0,0) and (0,3) are the same local position in horizontal neighbors.
        assert!(t.is_adjacent(0, 3));
    }
}
