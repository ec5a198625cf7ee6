//! Free-fermion splitting errors of the sectioned kinetic operator, computed
//! in the single-particle picture.
//!
//! A number-conserving quadratic operator `Q(A) = sum_ij A_ij a_i^+ a_j` is
//! fixed by its `n x n` matrix, and products of exponentials of such
//! operators are again of that form with the matrix product in place of the
//! operator product. The error of `U_T` against `exp(-iTt)` therefore
//! reduces to the eigenmodes of one `n x n` matrix per spin.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Lattice, Molecule};
use crate::linalg::{expm_hermitian, pairwise_sum, unitary_generator, C64};
use crate::norms::{ConstantKind, ErrorConstant, SchemeKind};

/// Time steps used to fit the kinetic constants, in 1/eV.
pub const DEFAULT_T_GRID: [f64; 3] = [0.01, 0.03, 0.05];

/// One tile: a set of bonds acting on sites no other tile of its section
/// touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSpec {
    pub bonds: Vec<(usize, usize)>,
    /// Overrides the section's per-tile rotation count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<u64>,
    /// Overrides the section's per-tile T count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_gates: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub name: String,
    /// Per spin, per application.
    pub rotations_per_tile: u64,
    pub t_gates_per_tile: u64,
    pub tiles: Vec<TileSpec>,
}

/// A partition of the bonds into sections, listed in application order.
/// The last section sits in the middle of the palindrome and is applied
/// once per step; every other section is applied twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingSpec {
    pub molecule: String,
    pub sections: Vec<SectionSpec>,
}

impl TilingSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Tiling(format!("malformed tiling: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Tiling(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// All bonds in one tile: the exact kinetic propagator, priced at one
    /// rotation and two T gates per bond.
    pub fn single_section(lattice: &Lattice) -> Self {
        let b = lattice.bonds.len() as u64;
        Self {
            molecule: format!("{}{}", lattice.family, lattice.size_n),
            sections: vec![SectionSpec {
                name: "all".into(),
                rotations_per_tile: 1,
                t_gates_per_tile: 2,
                tiles: vec![TileSpec {
                    bonds: lattice.bonds.clone(),
                    rotations: Some(b),
                    t_gates: Some(2 * b),
                }],
            }],
        }
    }

    /// One single-bond tile per bond, with a new section opened whenever a
    /// bond touches a site already used in the current one.
    pub fn greedy(lattice: &Lattice) -> Self {
        let mut sections: Vec<(BTreeSet<usize>, Vec<TileSpec>)> = Vec::new();
        for &(i, j) in &lattice.bonds {
            let slot = sections.iter().position(|(s, _)| !s.contains(&i) && !s.contains(&j));
            let k = slot.unwrap_or_else(|| {
                sections.push((BTreeSet::new(), Vec::new()));
                sections.len() - 1
            });
            sections[k].0.extend([i, j]);
            sections[k].1.push(TileSpec {
                bonds: vec![(i, j)],
                rotations: None,
                t_gates: None,
            });
        }
        Self {
            molecule: format!("{}{}", lattice.family, lattice.size_n),
            sections: sections
                .into_iter()
                .enumerate()
                .map(|(k, (_, tiles))| SectionSpec {
                    name: format!("s{k}"),
                    rotations_per_tile: 1,
                    t_gates_per_tile: 2,
                    tiles,
                })
                .collect(),
        }
    }

    /// Checks that the sections partition the lattice bonds and that tiles
    /// within a section are site-disjoint.
    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        if self.sections.is_empty() {
            return Err(Error::Tiling("no sections".into()));
        }
        let bonds: BTreeSet<(usize, usize)> = lattice.bonds.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for s in &self.sections {
            let mut sites = BTreeSet::new();
            for tile in &s.tiles {
                if tile.bonds.is_empty() {
                    return Err(Error::Tiling(format!("section `{}` has an empty tile", s.name)));
                }
                let mut tile_sites = BTreeSet::new();
                for &(i, j) in &tile.bonds {
                    let b = (i.min(j), i.max(j));
                    if !bonds.contains(&b) {
                        return Err(Error::Tiling(format!(
                            "section `{}`: ({i}, {j}) is not a bond",
                            s.name
                        )));
                    }
                    if !seen.insert(b) {
                        return Err(Error::Tiling(format!("bond ({i}, {j}) is covered twice")));
                    }
                    tile_sites.insert(b.0);
                    tile_sites.insert(b.1);
                }
                for site in tile_sites {
                    if !sites.insert(site) {
                        return Err(Error::Tiling(format!(
                            "section `{}`: tiles overlap on site {site}",
                            s.name
                        )));
                    }
                }
            }
        }
        if let Some(b) = bonds.difference(&seen).next() {
            return Err(Error::Tiling(format!("bond ({}, {}) is not covered", b.0, b.1)));
        }
        Ok(())
    }
}

/// Tilings shipped with the crate, keyed by molecule name.
const SHIPPED: &[(&str, &str)] = &[
    ("acene1", include_str!("../tilings/acene1.json")),
    ("acene2", include_str!("../tilings/acene2.json")),
    ("acene3", include_str!("../tilings/acene3.json")),
    ("acene5", include_str!("../tilings/acene5.json")),
    ("acene7", include_str!("../tilings/acene7.json")),
    ("acene9", include_str!("../tilings/acene9.json")),
    ("acene13", include_str!("../tilings/acene13.json")),
    ("rhombene2", include_str!("../tilings/rhombene2.json")),
    ("rhombene3", include_str!("../tilings/rhombene3.json")),
    ("rhombene4", include_str!("../tilings/rhombene4.json")),
    ("rhombene5", include_str!("../tilings/rhombene5.json")),
    ("triangulene2", include_str!("../tilings/triangulene2.json")),
    ("triangulene3", include_str!("../tilings/triangulene3.json")),
    ("triangulene4", include_str!("../tilings/triangulene4.json")),
    ("triangulene5", include_str!("../tilings/triangulene5.json")),
];

/// Names of the molecules with a shipped tiling.
pub fn shipped_tilings() -> impl Iterator<Item = &'static str> {
    SHIPPED.iter().map(|(n, _)| *n)
}

/// The shipped tiling for `molecule`, if there is one.
pub fn shipped_tiling(molecule: &Molecule) -> Option<TilingSpec> {
    let key = molecule.to_string();
    SHIPPED
        .iter()
        .find(|(n, _)| *n == key)
        .map(|(_, text)| TilingSpec::from_json(text).expect("shipped tiling parses"))
}

/// Per-step gate cost of `U_T` over both spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KineticGateCount {
    pub rotations: u64,
    pub t_gates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticSections {
    pub n_modes: usize,
    pub names: Vec<String>,
    /// Single-spin section matrices `A_s`, in application order.
    pub sections: Vec<DMatrix<f64>>,
    /// `A = sum_s A_s`.
    pub full: DMatrix<f64>,
    pub gate_count: KineticGateCount,
}

/// Builds the section matrices with hopping `-tau` on each bond.
pub fn tile_sections(lattice: &Lattice, spec: &TilingSpec, tau: f64) -> Result<KineticSections> {
    spec.validate(lattice)?;
    let n = lattice.site_count();
    let mut sections = Vec::with_capacity(spec.sections.len());
    let (mut rot, mut tg) = (0u64, 0u64);
    let last = spec.sections.len() - 1;
    for (k, s) in spec.sections.iter().enumerate() {
        let mut a = DMatrix::<f64>::zeros(n, n);
        let applications = if k == last { 1 } else { 2 };
        for tile in &s.tiles {
            for &(i, j) in &tile.bonds {
                a[(i, j)] = -tau;
                a[(j, i)] = -tau;
            }
            rot += applications * tile.rotations.unwrap_or(s.rotations_per_tile);
            tg += applications * tile.t_gates.unwrap_or(s.t_gates_per_tile);
        }
        sections.push(a);
    }
    let full = sections.iter().fold(DMatrix::zeros(n, n), |acc, a| acc + a);
    Ok(KineticSections {
        n_modes: n,
        names: spec.sections.iter().map(|s| s.name.clone()).collect(),
        sections,
        full,
        gate_count: KineticGateCount {
            rotations: 2 * rot,
            t_gates: 2 * tg,
        },
    })
}

impl KineticSections {
    /// Sections from raw matrices, for instances not tied to a lattice.
    pub fn from_matrices(sections: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = sections.first().map(|a| a.nrows()).ok_or_else(|| invalid("sections", "empty"))?;
        for a in &sections {
            if a.nrows() != n || a.ncols() != n {
                return Err(invalid("sections", "matrices differ in size"));
            }
            if (a - a.transpose()).amax() > 0.0 || a.diagonal().amax() > 0.0 {
                return Err(invalid("sections", "matrices must be symmetric with zero diagonal"));
            }
        }
        let full = sections.iter().fold(DMatrix::zeros(n, n), |acc, a| acc + a);
        Ok(Self {
            n_modes: n,
            names: (0..sections.len()).map(|k| format!("s{k}")).collect(),
            sections,
            full,
            gate_count: KineticGateCount {
                rotations: 0,
                t_gates: 0,
            },
        })
    }

    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    /// `prod_{s=1..S} exp(-i A_s t/2) prod_{s=S..1} exp(-i A_s t/2)`.
    pub fn product_formula(&self, t: f64) -> DMatrix<C64> {
        let halves: Vec<DMatrix<C64>> = self.sections.iter().map(|a| expm_hermitian(&complex(a), t / 2.0)).collect();
        let n = self.n_modes;
        let mut u = DMatrix::<C64>::identity(n, n);
        for h in halves.iter().chain(halves.iter().rev()) {
            u *= h;
        }
        u
    }
}

fn complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveKineticMatrix {
    /// `A~` with `exp(iAt) U_T(A) = exp(-i A~ t)`.
    pub matrix: DMatrix<C64>,
    pub t: f64,
    /// Eigenmodes of `A~`, descending.
    pub modes: Vec<f64>,
}

/// `A~ = (i/t) log(exp(iAt) prod exp(-iA_s t/2) prod exp(-iA_s t/2))`.
pub fn effective_kinetic(sections: &KineticSections, t: f64) -> Result<EffectiveKineticMatrix> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let exact_inverse = expm_hermitian(&complex(&sections.full), -t);
    let u = exact_inverse * sections.product_formula(t);
    let (lambda, q) = unitary_generator(&u, t)?;
    let mut left = q.clone();
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= C64::new(lambda[j], 0.0);
    }
    let matrix = left * q.adjoint();
    let mut modes = lambda;
    modes.reverse();
    Ok(EffectiveKineticMatrix { matrix, t, modes })
}

impl EffectiveKineticMatrix {
    /// `||T~||` on the sector with `filling` electrons: every eigenvalue is
    /// a sum of `up` modes plus a sum of `down` modes, so the extremes come
    /// from the largest and smallest modes.
    pub fn sector_norm(&self, filling: Filling) -> f64 {
        let top = |k: usize| self.modes.iter().take(k).sum::<f64>();
        let bottom = |k: usize| self.modes.iter().rev().take(k).sum::<f64>();
        let hi = top(filling.up) + top(filling.down);
        let lo = bottom(filling.up) + bottom(filling.down);
        hi.abs().max(lo.abs())
    }

    /// Half the trace norm of `A~`.
    pub fn half_trace_norm(&self) -> f64 {
        0.5 * self.modes.iter().map(|l| l.abs()).sum::<f64>()
    }
}

/// Electrons per spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filling {
    pub up: usize,
    pub down: usize,
}

impl Filling {
    /// Half filling with the lowest `|S_z|`, the extra electron spin up.
    pub fn half(n_modes: usize) -> Self {
        Self {
            up: n_modes.div_ceil(2),
            down: n_modes / 2,
        }
    }
}

/// A cubic fit `value = c t^3` over a grid of time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicFit {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub coefficient: f64,
    pub coefficient_se: f64,
    pub r_squared: f64,
}

fn cubic_fit(t_grid: &[f64], values: Vec<f64>, standard_errors: Vec<f64>) -> CubicFit {
    let x: Vec<f64> = t_grid.iter().map(|t| t.powi(3)).collect();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let coefficient = x.iter().zip(&values).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let coefficient_se = x
        .iter()
        .zip(&standard_errors)
        .map(|(a, s)| (a * s).powi(2))
        .sum::<f64>()
        .sqrt()
        / sxx;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss_tot: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(&values).map(|(a, v)| (v - coefficient * a).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    CubicFit {
        t_grid: t_grid.to_vec(),
        values,
        standard_errors,
        coefficient,
        coefficient_se,
        r_squared,
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("t_grid", "needs at least one positive time step"));
    }
    Ok(())
}

/// `W_T` from `|1 - exp(-i ||T~|| t)| = W_T t^3` fitted over `t_grid`, with
/// the norm summed over the two spin sectors.
pub fn worst_case_kinetic(sections: &KineticSections, t_grid: &[f64], filling: Filling) -> Result<(ErrorConstant, CubicFit)> {
    check_grid(t_grid)?;
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let eff = effective_kinetic(sections, t)?;
        let norm = eff.sector_norm(filling);
        values.push((C64::new(1.0, 0.0) - C64::from_polar(1.0, -norm * t)).norm());
    }
    let fit = cubic_fit(t_grid, values, vec![0.0; t_grid.len()]);
    Ok((
        kinetic_constant(ConstantKind::Worst, fit.coefficient, 0.0),
        fit,
    ))
}

/// `A_T` from `sqrt(2 - 2 Re Tr[exp(i T~ t)]/d) = A_T t^3`, the normalized
/// trace estimated from `samples` occupation vectors drawn uniformly from
/// the sector.
///
/// `2 - 2 cos(phi)` is accumulated as `4 sin^2(phi/2)` to avoid
/// cancellation at small `t`.
pub fn average_case_kinetic(
    sections: &KineticSections,
    t_grid: &[f64],
    filling: Filling,
    samples: usize,
    seed: u64,
) -> Result<(ErrorConstant, CubicFit)> {
    check_grid(t_grid)?;
    if samples < 2 {
        return Err(invalid("samples", "at least 2 samples are required"));
    }
    let n = sections.n_modes;
    let occupations: Vec<(Vec<usize>, Vec<usize>)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            (
                sample(&mut rng, n, filling.up).into_vec(),
                sample(&mut rng, n, filling.down).into_vec(),
            )
        })
        .collect();
    let mut values = Vec::with_capacity(t_grid.len());
    let mut errors = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let eff = effective_kinetic(sections, t)?;
        let lambda = eigen_energies(&eff);
        let terms: Vec<f64> = occupations
            .iter()
            .map(|(up, dn)| {
                let phi = t * (up.iter().chain(dn).map(|&j| lambda[j]).sum::<f64>());
                4.0 * (phi / 2.0).sin().powi(2)
            })
            .collect();
        let (value, se) = sqrt_mean(&terms);
        values.push(value);
        errors.push(se);
    }
    let fit = cubic_fit(t_grid, values, errors);
    Ok((
        kinetic_constant(ConstantKind::Average, fit.coefficient, fit.coefficient_se),
        fit,
    ))
}

/// As [`average_case_kinetic`] with the trace summed over every occupation
/// vector of the sector.
pub fn average_case_kinetic_exact(sections: &KineticSections, t_grid: &[f64], filling: Filling) -> Result<(ErrorConstant, CubicFit)> {
    check_grid(t_grid)?;
    let n = sections.n_modes;
    if n > 24 {
        return Err(invalid("sections", "exhaustive trace limited to 24 modes"));
    }
    let ups = subsets(n, filling.up);
    let dns = subsets(n, filling.down);
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let eff = effective_kinetic(sections, t)?;
        let lambda = eigen_energies(&eff);
        let energy = |m: u32| (0..n).filter(|j| m >> j & 1 == 1).map(|j| lambda[j]).sum::<f64>();
        let eu: Vec<f64> = ups.iter().map(|&m| energy(m)).collect();
        let ed: Vec<f64> = dns.iter().map(|&m| energy(m)).collect();
        let terms: Vec<f64> = eu
            .iter()
            .flat_map(|a| ed.iter().map(move |b| 4.0 * (t * (a + b) / 2.0).sin().powi(2)))
            .collect();
        values.push((pairwise_sum(&terms) / terms.len() as f64).sqrt());
    }
    let fit = cubic_fit(t_grid, values, vec![0.0; t_grid.len()]);
    Ok((
        kinetic_constant(ConstantKind::Average, fit.coefficient, 0.0),
        fit,
    ))
}

/// Mode energies in a fixed (ascending) order, so a sampled occupation
/// vector means the same thing at every `t`.
fn eigen_energies(eff: &EffectiveKineticMatrix) -> Vec<f64> {
    let mut v = eff.modes.clone();
    v.reverse();
    v
}

fn subsets(n: usize, k: usize) -> Vec<u32> {
    (0u32..(1u32 << n)).filter(|m| m.count_ones() as usize == k).collect()
}

fn sqrt_mean(terms: &[f64]) -> (f64, f64) {
    crate::norms::sqrt_mean_with_error(terms)
}

fn kinetic_constant(kind: ConstantKind, value: f64, se: f64) -> ErrorConstant {
    ErrorConstant {
        kind,
        scheme: SchemeKind::Tile,
        value,
        standard_error: se,
        upper_bound: false,
        components: vec![("kinetic".into(), value)],
    }
}
