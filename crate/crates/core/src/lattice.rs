//! Carbon-site geometry for acenes, rhombenes and triangulenes.
//!
//! Every molecule is a set of fused hexagons cut from a honeycomb lattice
//! with a fixed carbon-carbon distance. Hexagon centres are placed on the
//! triangular lattice spanned by `a1 = (sqrt3 b, 0)` and
//! `a2 = (sqrt3 b / 2, 3 b / 2)`, where `b` is the bond length; the sites are
//! the deduplicated hexagon corners and bonds are recovered from distances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Carbon-carbon bond length in Angstrom.
pub const BOND_LENGTH: f64 = 1.4;

/// Absolute tolerance used to detect nearest-neighbour pairs.
pub const BOND_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Acene,
    Rhombene,
    Triangulene,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Acene, Family::Rhombene, Family::Triangulene];

    /// Closed-form carbon count for size `n`.
    pub fn site_count(self, n: usize) -> usize {
        match self {
            Family::Acene => 6 + 4 * (n - 1),
            Family::Rhombene => 2 * (n + 1) * (n + 1) - 2,
            Family::Triangulene => n * n + 4 * n + 1,
        }
    }

    fn hexagon_centres(self, n: usize) -> Vec<(i64, i64)> {
        let n = n as i64;
        match self {
            Family::Acene => (0..n).map(|i| (i, 0)).collect(),
            Family::Rhombene => (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect(),
            Family::Triangulene => (0..n)
                .flat_map(|j| (0..n - j).map(move |i| (i, j)))
                .collect(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Acene => "acene",
            Family::Rhombene => "rhombene",
            Family::Triangulene => "triangulene",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acene" => Ok(Family::Acene),
            "rhombene" => Ok(Family::Rhombene),
            "triangulene" => Ok(Family::Triangulene),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// A molecule identifier such as `acene3` or `triangulene5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Molecule {
    pub family: Family,
    pub n: usize,
}

impl Molecule {
    pub const fn new(family: Family, n: usize) -> Self {
        Self { family, n }
    }

    pub fn build(self) -> Result<Lattice> {
        build_lattice(self.family, self.n)
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family, self.n)
    }
}

impl FromStr for Molecule {
    type Err = Error;

    /// Accepts `acene3`, `3-acene` and `acene-3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        let letters: String = s.chars().filter(|c| c.is_ascii_alphabetic()).collect();
        let family = letters.parse::<Family>()?;
        let n = digits
            .parse::<usize>()
            .map_err(|_| invalid("molecule", format!("missing size in `{s}`")))?;
        if n == 0 {
            return Err(invalid("molecule", "size must be at least 1"));
        }
        Ok(Molecule { family, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub family: Family,
    pub size_n: usize,
    /// Cartesian coordinates in Angstrom.
    pub sites: Vec<[f64; 2]>,
    /// Nearest-neighbour pairs `(i, j)` with `i < j`, sorted.
    pub bonds: Vec<(usize, usize)>,
    /// Row-major `N x N` distances in Angstrom.
    pub distances: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j]
    }

    pub fn degree(&self, site: usize) -> usize {
        self.bonds
            .iter()
            .filter(|&&(i, j)| i == site || j == site)
            .count()
    }

    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        self.bonds
            .iter()
            .filter_map(|&(i, j)| {
                if i == site {
                    Some(j)
                } else if j == site {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.site_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for nb in self.neighbours(s) {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Site permutation induced by a mirror reflection through the centroid
    /// that maps the carbon skeleton onto itself, if one exists.
    pub fn mirror_permutation(&self) -> Option<Vec<usize>> {
        let n = self.site_count();
        let (cx, cy) = self
            .sites
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        let (cx, cy) = (cx / n as f64, cy / n as f64);
        // Honeycomb fragments can only have mirror axes at multiples of 30 degrees.
        for k in 0..6 {
            let theta = k as f64 * std::f64::consts::PI / 6.0;
            let (c2, s2) = ((2.0 * theta).cos(), (2.0 * theta).sin());
            let mut perm = Vec::with_capacity(n);
            for p in &self.sites {
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                let rx = cx + c2 * dx + s2 * dy;
                let ry = cy + s2 * dx - c2 * dy;
                match self
                    .sites
                    .iter()
                    .position(|q| (q[0] - rx).hypot(q[1] - ry) < 1e-6)
                {
                    Some(j) => perm.push(j),
                    None => break,
                }
            }
            if perm.len() == n {
                return Some(perm);
            }
        }
        None
    }
}

/// Build the carbon skeleton of the `size_n` member of `family`.
pub fn build_lattice(family: Family, size_n: usize) -> Result<Lattice> {
    if size_n == 0 {
        return Err(invalid("size_n", "must be at least 1"));
    }
    let b = BOND_LENGTH;
    let sqrt3 = 3f64.sqrt();
    let a1 = (sqrt3 * b, 0.0);
    let a2 = (sqrt3 * b / 2.0, 1.5 * b);

    // Keyed on coordinates snapped to a 1e-6 Angstrom grid so shared corners merge.
    let mut corners: BTreeMap<(i64, i64), [f64; 2]> = BTreeMap::new();
    for (i, j) in family.hexagon_centres(size_n) {
        let cx = i as f64 * a1.0 + j as f64 * a2.0;
        let cy = i as f64 * a1.1 + j as f64 * a2.1;
        for k in 0..6 {
            let angle = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
            let x = cx + b * angle.cos();
            let y = cy + b * angle.sin();
            let key = ((y * 1e6).round() as i64, (x * 1e6).round() as i64);
            corners.entry(key).or_insert([x, y]);
        }
    }
    // BTreeMap order: row by row (y), then left to right.
    let sites: Vec<[f64; 2]> = corners.into_values().collect();
    let distances = compute_distances(&sites);
    let n = sites.len();
    let mut bonds = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (distances[i][j] - b).abs() <= BOND_TOLERANCE {
                bonds.push((i, j));
            }
        }
    }
    Ok(Lattice {
        family,
        size_n,
        sites,
        bonds,
        distances,
    })
}

fn compute_distances(sites: &[[f64; 2]]) -> Vec<Vec<f64>> {
    let n = sites.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = (sites[i][0] - sites[j][0]).hypot(sites[i][1] - sites[j][1]);
            d[i][j] = r;
            d[j][i] = r;
        }
    }
    d
}

/// Symmetric matrix of pairwise distances in Angstrom.
pub fn distance_matrix(lattice: &Lattice) -> Vec<Vec<f64>> {
    lattice.distances.clone()
}
