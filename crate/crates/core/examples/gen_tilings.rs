//! Writes the default tilings into `tilings/`.
//!
//! Bonds are grouped by direction; each direction class is a matching. The
//! innermost section takes `gold` bonds, starting from the largest class and
//! growing bond tiles into two-bond path tiles when one class is too small.
//! Leftover bonds fill the outer sections. `zero_t` tiles of the first outer
//! section are priced without T gates.
//!
//! cargo run -p trotterlab-core --example gen_tilings

use std::collections::BTreeSet;

use trotterlab::freefermion::{tile_sections, SectionSpec, TileSpec, TilingSpec};
use trotterlab::lattice::{Lattice, Molecule};

/// (molecule, gold bonds, zero-T tiles)
const TARGETS: &[(&str, usize, usize)] = &[
    ("acene1", 2, 0),
    ("acene2", 4, 0),
    ("acene3", 6, 0),
    ("acene5", 10, 0),
    ("acene7", 14, 0),
    ("acene9", 18, 0),
    ("acene13", 26, 0),
    ("rhombene2", 6, 2),
    ("rhombene3", 14, 0),
    ("rhombene4", 22, 2),
    ("rhombene5", 34, 0),
    ("triangulene2", 4, 2),
    ("triangulene3", 8, 2),
    ("triangulene4", 16, 0),
    ("triangulene5", 24, 0),
];

fn direction(lat: &Lattice, (i, j): (usize, usize)) -> i64 {
    let (a, b) = (lat.sites[i], lat.sites[j]);
    let mut ang = (b[1] - a[1]).atan2(b[0] - a[0]).to_degrees();
    if ang < 0.0 {
        ang += 180.0;
    }
    (ang.round() as i64) % 180
}

fn tile(bonds: Vec<(usize, usize)>) -> TileSpec {
    let k = bonds.len() as u64;
    TileSpec {
        rotations: (k > 1).then_some(k),
        t_gates: (k > 1).then_some(2 * k),
        bonds,
    }
}

fn build(lat: &Lattice, name: &str, gold: usize, zero_t: usize) -> TilingSpec {
    let mut classes: Vec<(i64, Vec<(usize, usize)>)> = Vec::new();
    for &b in &lat.bonds {
        let d = direction(lat, b);
        match classes.iter_mut().find(|(k, _)| *k == d) {
            Some((_, v)) => v.push(b),
            None => classes.push((d, vec![b])),
        }
    }
    // largest class last, ties by angle
    classes.sort_by_key(|(d, v)| (v.len(), -d));
    let (_, main) = classes.pop().unwrap();

    let mut tiles: Vec<Vec<(usize, usize)>> = main.iter().take(gold).map(|&b| vec![b]).collect();
    let mut used: BTreeSet<(usize, usize)> = tiles.iter().flatten().copied().collect();
    let mut covered: BTreeSet<usize> = used.iter().flat_map(|&(i, j)| [i, j]).collect();
    let mut count = tiles.len();
    while count < gold {
        // extend a single-bond tile by a bond to a free site
        let grown = tiles.iter_mut().filter(|t| t.len() == 1).find_map(|t| {
            let (i, j) = t[0];
            lat.bonds.iter().copied().find(|&(a, b)| {
                !used.contains(&(a, b))
                    && ((a == i || a == j) && !covered.contains(&b) || (b == i || b == j) && !covered.contains(&a))
            }).map(|e| {
                t.push(e);
                e
            })
        });
        let e = grown
            .or_else(|| {
                lat.bonds.iter().copied().find(|&(a, b)| !covered.contains(&a) && !covered.contains(&b)).map(|e| {
                    tiles.push(vec![e]);
                    e
                })
            })
            .unwrap_or_else(|| panic!("{name}: cannot place {gold} bonds in one section"));
        used.insert(e);
        covered.extend([e.0, e.1]);
        count += 1;
    }

    // leftover bonds, first-fit into site-disjoint outer sections
    let mut rest: Vec<(usize, usize)> = main.iter().copied().filter(|b| !used.contains(b)).collect();
    for (_, v) in &classes {
        rest.extend(v.iter().copied().filter(|b| !used.contains(b)));
    }
    let mut outer: Vec<(BTreeSet<usize>, Vec<(usize, usize)>)> = classes
        .iter()
        .map(|_| (BTreeSet::new(), Vec::new()))
        .collect();
    for b in rest {
        let slot = outer.iter().position(|(s, _)| !s.contains(&b.0) && !s.contains(&b.1));
        let k = slot.unwrap_or_else(|| {
            outer.push((BTreeSet::new(), Vec::new()));
            outer.len() - 1
        });
        outer[k].0.extend([b.0, b.1]);
        outer[k].1.push(b);
    }
    outer.retain(|(_, v)| !v.is_empty());

    let mut sections: Vec<SectionSpec> = outer
        .into_iter()
        .enumerate()
        .map(|(k, (_, bonds))| SectionSpec {
            name: format!("outer{k}"),
            rotations_per_tile: 1,
            t_gates_per_tile: 2,
            tiles: bonds.into_iter().map(|b| tile(vec![b])).collect(),
        })
        .collect();
    assert!(sections[0].tiles.len() >= zero_t, "{name}: too few outer tiles");
    for t in sections[0].tiles.iter_mut().take(zero_t) {
        t.t_gates = Some(0);
    }
    tiles.sort();
    sections.push(SectionSpec {
        name: "gold".into(),
        rotations_per_tile: 1,
        t_gates_per_tile: 2,
        tiles: tiles.into_iter().map(tile).collect(),
    });
    TilingSpec {
        molecule: name.into(),
        sections,
    }
}

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tilings");
    std::fs::create_dir_all(&dir).unwrap();
    for &(name, gold, zero_t) in TARGETS {
        let lat = name.parse::<Molecule>().unwrap().build().unwrap();
        let spec = build(&lat, name, gold, zero_t);
        let sections = tile_sections(&lat, &spec, 1.0).unwrap();
        println!(
            "{name:14} sections {} N_R {} N_T {}",
            spec.sections.len(),
            sections.gate_count.rotations,
            sections.gate_count.t_gates
        );
        let text = serde_json::to_string_pretty(&spec).unwrap();
        std::fs::write(dir.join(format!("{name}.json")), text + "\n").unwrap();
    }
}
