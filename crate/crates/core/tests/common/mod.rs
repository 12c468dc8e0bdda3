use serde::Deserialize;
use slimnoc::ff::FieldTable;

#[derive(Deserialize)]
struct Golden {
    elements: Vec<String>,
    add: Vec<Vec<String>>,
    mul: Vec<Vec<String>>,
}

pub fn golden(key: &str) -> FieldTable {
    let raw = include_str!("../data/field_tables.json");
    let all: std::collections::HashMap<String, Golden> = serde_json::from_str(raw).unwrap();
    let g = &all[key];
    let id = |s: &String| g.elements.iter().position(|e| e == s).unwrap();
    let conv = |t: &Vec<Vec<String>>| t.iter().map(|row| row.iter().map(id).collect()).collect();
    FieldTable::from_tables(g.elements.clone(), conv(&g.add), conv(&g.mul)).unwrap()
}

/// Searches for a bijection `a -> b` fixing 0 and 1 that preserves both
/// operations. Backtracks over partial maps, checking every fully mapped
/// pair as soon as it is assigned.
pub fn isomorphism(a: &FieldTable, b: &FieldTable) -> Option<Vec<usize>> {
    let q = a.order();
    if q != b.order() {
        return None;
    }
    fn consistent(a: &FieldTable, b: &FieldTable, map: &[Option<usize>], x: usize) -> bool {
        let fx = map[x].unwrap();
        for y in 0..map.len() {
            let Some(fy) = map[y] else { continue };
            for (r, s) in [(a.add(x, y), b.add(fx, fy)), (a.mul(x, y), b.mul(fx, fy))] {
                if let Some(fr) = map[r] {
                    if fr != s {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn extend(a: &FieldTable, b: &FieldTable, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, x: usize) -> bool {
        if x == map.len() {
            return (0..map.len()).all(|y| consistent(a, b, map, y));
        }
        if map[x].is_some() {
            return extend(a, b, map, used, x + 1);
        }
        for t in 0..map.len() {
            if used[t] {
                continue;
            }
            map[x] = Some(t);
            used[t] = true;
            if consistent(a, b, map, x) && extend(a, b, map, used, x + 1) {
                return true;
            }
            map[x] = None;
            used[t] = false;
        }
        false
    }
    let mut map = vec![None; q];
    let mut used = vec![false; q];
    map[0] = Some(0);
    map[1] = Some(1);
    used[0] = true;
    used[1] = true;
    extend(a, b, &mut map, &mut used, 2).then(|| map.into_iter().map(Option::unwrap).collect())
}

