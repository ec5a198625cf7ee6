//! Energy and gap errors of the effective Hamiltonian `H~ = (i/t) log U`.
//!
//! Small sectors go through the dense matrix logarithm. Larger ones use the
//! time series `g_k = <psi|U^k|psi>` from an exact eigenstate of `H`, read
//! out with a Gaussian filter.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freefermion::TilingSpec;
use crate::hamiltonian::FermionHamiltonian;
use crate::lattice::Lattice;
use crate::linalg::{expm_symmetric, pearson, symmetric_eigen_sorted, to_complex, unitary_generator, C64};
use crate::model::Model;
use crate::norms::SchemeKind;
use crate::pauli::{jordan_wigner_ordered, PauliSum};
use crate::sector::{
    lowest_eigenpairs, propagate, read_snapshot, spin_label, total_spin_expectation, write_snapshot, Factor,
    LanczosOptions, SectorBasis, SectorOperator, SectorSpec, Snapshot, DENSE_LIMIT,
};

/// Chemical accuracy, 1.6 mHa in eV.
pub const CHEMICAL_ACCURACY: f64 = 0.04354;

/// Default time step for error constants, in 1/eV.
pub const DEFAULT_TIME_STEP: f64 = 0.01;

/// Pairings with a smaller squared overlap are flagged.
pub const OVERLAP_FLAG: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorOperator {
    Potential,
    Kinetic,
    Section(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulaFactor {
    pub operator: FactorOperator,
    pub duration: f64,
}

/// A second-order product formula. `factors[0]` acts on the state first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterScheme {
    pub kind: SchemeKind,
    pub t: f64,
    pub section_names: Vec<String>,
    pub factors: Vec<FormulaFactor>,
}

impl TrotterScheme {
    /// `exp(-iVt/2) exp(-iTt) exp(-iVt/2)`.
    pub fn split_operator(t: f64) -> Result<Self> {
        check_t(t)?;
        let v = FormulaFactor {
            operator: FactorOperator::Potential,
            duration: t / 2.0,
        };
        Ok(Self {
            kind: SchemeKind::SplitOperator,
            t,
            section_names: Vec::new(),
            factors: vec![
                v,
                FormulaFactor {
                    operator: FactorOperator::Kinetic,
                    duration: t,
                },
                v,
            ],
        })
    }

    /// `V/2, T_1/2, ..., T_S, ..., T_1/2, V/2` with the last section in the
    /// middle.
    pub fn tile(t: f64, section_names: Vec<String>) -> Result<Self> {
        check_t(t)?;
        let s = section_names.len();
        if s == 0 {
            return Err(invalid("sections", "a tile scheme needs at least one section"));
        }
        let v = FormulaFactor {
            operator: FactorOperator::Potential,
            duration: t / 2.0,
        };
        let half = |k| FormulaFactor {
            operator: FactorOperator::Section(k),
            duration: t / 2.0,
        };
        let mut factors = vec![v];
        factors.extend((0..s - 1).map(half));
        factors.push(FormulaFactor {
            operator: FactorOperator::Section(s - 1),
            duration: t,
        });
        factors.extend((0..s - 1).rev().map(half));
        factors.push(v);
        Ok(Self {
            kind: SchemeKind::Tile,
            t,
            section_names,
            factors,
        })
    }

    pub fn from_tiling(t: f64, tiling: &TilingSpec) -> Result<Self> {
        Self::tile(t, tiling.sections.iter().map(|s| s.name.clone()).collect())
    }

    pub fn with_time_step(&self, t: f64) -> Result<Self> {
        match self.kind {
            SchemeKind::SplitOperator => Self::split_operator(t),
            SchemeKind::Tile => Self::tile(t, self.section_names.clone()),
        }
    }

    pub fn is_palindromic(&self) -> bool {
        let n = self.factors.len();
        (0..n / 2).all(|i| self.factors[i] == self.factors[n - 1 - i])
    }

    /// Total duration per operator.
    pub fn durations(&self) -> Vec<(FactorOperator, f64)> {
        let mut out: Vec<(FactorOperator, f64)> = Vec::new();
        for f in &self.factors {
            match out.iter_mut().find(|(o, _)| *o == f.operator) {
                Some((_, d)) => *d += f.duration,
                None => out.push((f.operator, f.duration)),
            }
        }
        out
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("t", "time step must be positive"));
    }
    Ok(())
}

/// Jordan-Wigner images of the kinetic sections of a tiling.
pub fn section_operators(model: &Model, tiling: &TilingSpec) -> Result<Vec<PauliSum>> {
    tiling.validate(&model.lattice)?;
    tiling
        .sections
        .iter()
        .map(|s| {
            let bonds: Vec<(usize, usize)> = s
                .tiles
                .iter()
                .flat_map(|t| t.bonds.iter().map(|&(i, j)| (i.min(j), i.max(j))))
                .collect();
            let ham = FermionHamiltonian {
                site_count: model.fermion.site_count,
                params: model.fermion.params,
                kinetic: model
                    .fermion
                    .kinetic
                    .iter()
                    .copied()
                    .filter(|h| bonds.contains(&(h.i.min(h.j), h.i.max(h.j))))
                    .collect(),
                onsite: vec![0.0; model.fermion.site_count],
                pairwise: Vec::new(),
            };
            Ok(jordan_wigner_ordered(&ham, model.ordering)?.0)
        })
        .collect()
}

/// `T`, `V`, `H` and the kinetic sections on one sector, with a constant
/// `shift` added to `V` in every product formula.
#[derive(Debug, Clone)]
pub struct SchemeOperators {
    pub basis: Arc<SectorBasis>,
    pub kinetic: SectorOperator,
    pub potential: SectorOperator,
    pub hamiltonian: SectorOperator,
    pub sections: Vec<SectorOperator>,
    pub shift: f64,
    shifted_potential: SectorOperator,
}

impl SchemeOperators {
    pub fn new(model: &Model, spec: SectorSpec, tiling: Option<&TilingSpec>) -> Result<Self> {
        let basis = model.basis(spec)?;
        let triple = model.sector_operators(&basis)?;
        let sections = match tiling {
            Some(t) => section_operators(model, t)?
                .iter()
                .map(|p| SectorOperator::from_pauli(p, basis.clone()))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        Ok(Self {
            basis,
            shifted_potential: triple.v.clone(),
            kinetic: triple.t,
            potential: triple.v,
            hamiltonian: triple.h,
            sections,
            shift: 0.0,
        })
    }

    /// Adds `shift` to the potential inside the product formulas. Effective
    /// energies are reported with the shift removed.
    pub fn with_shift(mut self, shift: f64) -> Result<Self> {
        let diag: Vec<f64> = self.potential.diagonal().iter().map(|d| d + shift).collect();
        self.shifted_potential = SectorOperator::from_diagonal(diag, self.basis.clone())?;
        self.shift = shift;
        Ok(self)
    }

    /// The shift `-(E_max + E_min)/2` that centres the spectrum of `H`.
    pub fn symmetrizing_shift(&self) -> Result<f64> {
        let opts = LanczosOptions::default();
        let lo = lowest_eigenpairs(&self.hamiltonian, 1, &opts)?[0].energy;
        let neg = self.hamiltonian.add_scaled(&self.hamiltonian, -2.0);
        let hi = -lowest_eigenpairs(&neg, 1, &opts)?[0].energy;
        Ok(-(lo + hi) / 2.0)
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    fn operator(&self, op: FactorOperator) -> Result<&SectorOperator> {
        match op {
            FactorOperator::Potential => Ok(&self.shifted_potential),
            FactorOperator::Kinetic => Ok(&self.kinetic),
            FactorOperator::Section(k) => self
                .sections
                .get(k)
                .ok_or_else(|| invalid("scheme", format!("section {k} not built; pass a tiling"))),
        }
    }

    pub fn factors(&self, scheme: &TrotterScheme) -> Result<Vec<Factor<'_>>> {
        if scheme.kind == SchemeKind::Tile && scheme.section_names.len() != self.sections.len() {
            return Err(invalid("scheme", "section count differs from the tiling"));
        }
        scheme
            .factors
            .iter()
            .map(|f| {
                Ok(Factor {
                    op: self.operator(f.operator)?,
                    duration: f.duration,
                })
            })
            .collect()
    }

    /// Exact spectrum of `H` on the sector, ascending.
    pub fn exact_spectrum_dense(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        check_dense(self.dimension())?;
        Ok(symmetric_eigen_sorted(self.hamiltonian.to_dense_real()?))
    }
}

fn check_dense(dim: usize) -> Result<()> {
    if dim > DENSE_LIMIT {
        return Err(invalid("sector", format!("dimension {dim} exceeds the dense limit {DENSE_LIMIT}")));
    }
    Ok(())
}

/// One step of `scheme` as a dense matrix.
pub fn step_unitary_dense(scheme: &TrotterScheme, ops: &SchemeOperators) -> Result<DMatrix<C64>> {
    let dim = ops.dimension();
    check_dense(dim)?;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for f in ops.factors(scheme)? {
        if f.op.is_diagonal() {
            for (r, &d) in f.op.diagonal().iter().enumerate() {
                let phase = C64::from_polar(1.0, -d * f.duration);
                u.row_mut(r).iter_mut().for_each(|x| *x *= phase);
            }
        } else {
            u = expm_symmetric(&f.op.to_dense_real()?, f.duration) * u;
        }
    }
    Ok(u)
}

/// Eigendecomposition of `H~` on a sector.
#[derive(Debug, Clone)]
pub struct EffectiveSpectrum {
    pub t: f64,
    /// The shift used for the logarithm, already removed from `energies`.
    pub shift: f64,
    /// Ascending.
    pub energies: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl EffectiveSpectrum {
    pub fn matrix(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// `H~ = (i/t) log U` on the principal branch of the shifted product.
pub fn effective_hamiltonian_dense(scheme: &TrotterScheme, ops: &SchemeOperators) -> Result<EffectiveSpectrum> {
    let u = step_unitary_dense(scheme, ops)?;
    let (lambda, vectors) = unitary_generator(&u, scheme.t)?;
    Ok(EffectiveSpectrum {
        t: scheme.t,
        shift: ops.shift,
        energies: lambda.iter().map(|l| l - ops.shift).collect(),
        vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub exact: usize,
    pub effective: usize,
    /// Squared overlap of the effective eigenvector with the degenerate
    /// eigenspace of the exact one.
    pub overlap: f64,
    pub flagged: bool,
}

/// Greedy maximum-overlap matching of exact and effective eigenvectors.
///
/// Overlaps are taken against whole degenerate eigenspaces of `H` (levels
/// closer than `degeneracy_tol`); within one eigenspace the pairing follows
/// energy order.
pub fn pair_eigenstates(
    exact: (&[f64], &DMatrix<C64>),
    effective: (&[f64], &DMatrix<C64>),
    degeneracy_tol: f64,
) -> Result<Vec<StatePair>> {
    let (e, ev) = exact;
    let (f, fv) = effective;
    let n = e.len();
    if f.len() != n || ev.ncols() != n || fv.ncols() != n || ev.nrows() != fv.nrows() {
        return Err(invalid("eigenpairs", "exact and effective decompositions differ in size"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
    let mut cluster = vec![0usize; n];
    let mut c = 0;
    for w in 1..n {
        if e[order[w]] - e[order[w - 1]] > degeneracy_tol {
            c += 1;
        }
        cluster[order[w]] = c;
    }
    let clusters = c + 1;
    let ov = ev.adjoint() * fv;
    let mut candidates: Vec<(f64, f64, usize, usize)> = Vec::new();
    for j in 0..n {
        let mut w = vec![0.0; clusters];
        for i in 0..n {
            w[cluster[i]] += ov[(i, j)].norm_sqr();
        }
        for i in 0..n {
            if w[cluster[i]] > 1e-3 {
                candidates.push((w[cluster[i]], (e[i] - f[j]).abs(), i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let (mut used_i, mut used_j) = (vec![false; n], vec![false; n]);
    let mut pairs = Vec::with_capacity(n);
    for (w, _, i, j) in candidates {
        if !used_i[i] && !used_j[j] {
            used_i[i] = true;
            used_j[j] = true;
            pairs.push(StatePair {
                exact: i,
                effective: j,
                overlap: w,
                flagged: w < OVERLAP_FLAG,
            });
        }
    }
    // anything left has negligible overlap everywhere; pair by energy order
    let mut rest_i: Vec<usize> = (0..n).filter(|&i| !used_i[i]).collect();
    let mut rest_j: Vec<usize> = (0..n).filter(|&j| !used_j[j]).collect();
    rest_i.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
    rest_j.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
    for (i, j) in rest_i.into_iter().zip(rest_j) {
        pairs.push(StatePair {
            exact: i,
            effective: j,
            overlap: ov.column(j).iter().map(|x| x.norm_sqr()).fold(0.0, f64::max),
            flagged: true,
        });
    }
    pairs.sort_by_key(|p| p.exact);
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub scheme: SchemeKind,
    pub t: f64,
    /// `g_0 ... g_N`.
    pub values: Vec<C64>,
}

/// Where and how often [`compute_time_series`] saves its progress.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub dir: PathBuf,
    pub every: usize,
}

impl Checkpoint {
    fn state_path(&self) -> PathBuf {
        self.dir.join("state.bin")
    }

    fn series_path(&self) -> PathBuf {
        self.dir.join("series.csv")
    }
}

/// `g_k = <psi|U^k|psi>` for `k = 0..=n_steps`.
///
/// With a checkpoint, the propagated state and the series so far are saved
/// every `every` steps and a matching earlier run is resumed.
pub fn compute_time_series(
    scheme: &TrotterScheme,
    ops: &SchemeOperators,
    initial: &[C64],
    n_steps: usize,
    label: &str,
    checkpoint: Option<&Checkpoint>,
) -> Result<TimeSeries> {
    if initial.len() != ops.dimension() {
        return Err(invalid("initial", "length differs from the sector dimension"));
    }
    let norm = crate::linalg::cnorm(initial);
    if (norm - 1.0).abs() > 1e-8 {
        return Err(invalid("initial", format!("state norm {norm} is not 1")));
    }
    let factors = ops.factors(scheme)?;
    let mut state = initial.to_vec();
    let mut values = vec![C64::new(1.0, 0.0)];
    if let Some(cp) = checkpoint {
        if let Some((snap, series)) = load_checkpoint(cp, ops.basis.spec())? {
            if series.len() == snap.step as usize + 1 && series.len() <= n_steps + 1 {
                state = snap.amplitudes;
                values = series;
            }
        }
    }
    while values.len() <= n_steps {
        propagate(&factors, &mut state)?;
        // the shift only rotates the global phase
        let phase = C64::from_polar(1.0, ops.shift * scheme.t * values.len() as f64);
        values.push(crate::linalg::cdot(initial, &state) * phase);
        if let Some(cp) = checkpoint {
            let k = values.len() - 1;
            if k % cp.every.max(1) == 0 || k == n_steps {
                save_checkpoint(cp, ops.basis.spec(), k as u64, &state, &values)?;
            }
        }
    }
    values.truncate(n_steps + 1);
    Ok(TimeSeries {
        label: label.to_string(),
        scheme: scheme.kind,
        t: scheme.t,
        values,
    })
}

fn save_checkpoint(cp: &Checkpoint, spec: SectorSpec, step: u64, state: &[C64], values: &[C64]) -> Result<()> {
    std::fs::create_dir_all(&cp.dir)?;
    let snap = Snapshot {
        spec,
        step,
        amplitudes: state.to_vec(),
    };
    let tmp = cp.dir.join("state.bin.tmp");
    write_snapshot(std::io::BufWriter::new(std::fs::File::create(&tmp)?), &snap)?;
    std::fs::rename(&tmp, cp.state_path())?;
    let mut out = Vec::new();
    write_series_values(&mut out, values)?;
    std::fs::write(cp.series_path(), out)?;
    Ok(())
}

fn load_checkpoint(cp: &Checkpoint, spec: SectorSpec) -> Result<Option<(Snapshot, Vec<C64>)>> {
    if !cp.state_path().exists() || !cp.series_path().exists() {
        return Ok(None);
    }
    let snap = read_snapshot(std::io::BufReader::new(std::fs::File::open(cp.state_path())?))?;
    if snap.spec != spec {
        return Ok(None);
    }
    let series = read_series_csv(std::io::BufReader::new(std::fs::File::open(cp.series_path())?))?;
    Ok(Some((snap, series)))
}

fn write_series_values<W: Write>(mut w: W, values: &[C64]) -> Result<()> {
    writeln!(w, "k,re,im")?;
    for (k, g) in values.iter().enumerate() {
        writeln!(w, "{k},{:e},{:e}", g.re, g.im)?;
    }
    Ok(())
}

/// Writes `k,re,im` rows.
pub fn write_series_csv<W: Write>(w: W, series: &TimeSeries) -> Result<()> {
    write_series_values(w, &series.values)
}

pub fn read_series_csv<R: BufRead>(r: R) -> Result<Vec<C64>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("series line {}: `{line}`", n + 1));
        if parts.len() != 3 || parts[0].trim().parse::<usize>().map_err(|_| bad())? != out.len() {
            return Err(bad());
        }
        let re: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let im: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}

/// A periodic Gaussian filter `F(x) = sum_{|k|<=N} F_k e^{ikx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Standard deviation in radians.
    pub width: f64,
    pub order: usize,
    /// `F_0 ... F_N`.
    pub coefficients: Vec<f64>,
}

impl FilterSpec {
    pub const DEFAULT_WIDTH: f64 = 0.05;
    pub const GRID_POINTS: usize = 8192;

    /// Width `a` with `N = ceil(6/a)`.
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0) || width >= PI {
            return Err(invalid("width", "must lie in (0, pi)"));
        }
        let order = (6.0 / width).ceil() as usize;
        Ok(Self::gaussian_with_order(width, order))
    }

    pub fn gaussian_with_order(width: f64, order: usize) -> Self {
        let coefficients = (0..=order)
            .map(|k| (-(width * k as f64).powi(2) / 2.0).exp() / (2.0 * PI))
            .collect();
        Self {
            width,
            order,
            coefficients,
        }
    }

    /// `C(x) = F_0 + 2 sum_k F_k (cos(kx) Re g_k - sin(kx) Im g_k)`.
    pub fn evaluate(&self, series: &[C64], x: f64) -> f64 {
        let mut c = self.coefficients[0] * series[0].re;
        for k in 1..=self.order {
            let (s, co) = (k as f64 * x).sin_cos();
            c += 2.0 * self.coefficients[k] * (co * series[k].re - s * series[k].im);
        }
        c
    }

    /// `dC/dx`.
    pub fn derivative(&self, series: &[C64], x: f64) -> f64 {
        let mut d = 0.0;
        for k in 1..=self.order {
            let (s, co) = (k as f64 * x).sin_cos();
            d -= 2.0 * k as f64 * self.coefficients[k] * (s * series[k].re + co * series[k].im);
        }
        d
    }

    /// `F(0)`, the height of a unit-weight pole.
    pub fn peak(&self) -> f64 {
        self.coefficients[0] + 2.0 * self.coefficients[1..].iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy: f64,
    /// `C(x_max) / F(0)`, roughly the weight of the dominant pole.
    pub pole_weight: f64,
}

/// `E~` from the maximum of `C(x)`, placed on the `2 pi / t` branch nearest
/// `prior_energy`.
pub fn extract_energy(series: &TimeSeries, filter: &FilterSpec, prior_energy: f64) -> Result<EnergyEstimate> {
    if series.values.len() <= filter.order {
        return Err(invalid(
            "series",
            format!("{} values cannot feed a filter of order {}", series.values.len(), filter.order),
        ));
    }
    let g = &series.values[..=filter.order];
    let n = FilterSpec::GRID_POINTS;
    let h = 2.0 * PI / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| -PI + (i + 1) as f64 * h).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| filter.evaluate(g, x)).collect();
    let (imax, &cmax) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("grid");
    let cmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let peak = filter.peak();
    if cmax - cmin < 1e-12 * peak || cmax < 0.5 * peak {
        return Err(Error::FlatFilter(format!(
            "no dominant pole: max C(x) = {:.3e} against F(0) = {:.3e}",
            cmax, peak
        )));
    }
    let (a, b) = (grid[imax] - h, grid[imax] + h);
    let slope = |x| filter.derivative(g, x);
    let x = if slope(a) > 0.0 && slope(b) < 0.0 {
        // the top is too flat for comparisons of C itself at full precision
        bisect_root(slope, a, b)
    } else {
        golden_max(|x| filter.evaluate(g, x), a, b)
    };
    let cpeak = filter.evaluate(g, x);
    // g_k ~ exp(-i t k E), so the pole sits at x = t E
    let period = 2.0 * PI / series.t;
    let raw = x / series.t;
    let shift = ((prior_energy - raw) / period).round();
    Ok(EnergyEstimate {
        energy: raw + shift * period,
        pole_weight: cpeak / peak,
    })
}

fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub label: String,
    pub exact: f64,
    pub effective: f64,
    /// `(E~ - E) / t^2`.
    pub signed_constant: f64,
    /// `|E - E~| / t^2`, eV^3.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub lower: String,
    pub upper: String,
    /// `E_upper - E_lower`.
    pub exact: f64,
    pub effective: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub t: f64,
    pub states: Vec<StateRecord>,
    pub gaps: Vec<GapRecord>,
}

/// Energy constants for `(label, E, E~)` and gap constants for the index
/// pairs `(lower, upper)`.
pub fn error_constants(states: &[(String, f64, f64)], t: f64, gaps: &[(usize, usize)]) -> Result<SpectrumReport> {
    check_t(t)?;
    let t2 = t * t;
    let records = states
        .iter()
        .map(|(label, e, f)| StateRecord {
            label: label.clone(),
            exact: *e,
            effective: *f,
            signed_constant: (f - e) / t2,
            constant: (e - f).abs() / t2,
        })
        .collect::<Vec<_>>();
    let gaps = gaps
        .iter()
        .map(|&(lo, hi)| {
            let (a, b) = (
                records.get(lo).ok_or_else(|| invalid("gaps", "index out of range"))?,
                records.get(hi).ok_or_else(|| invalid("gaps", "index out of range"))?,
            );
            let exact = b.exact - a.exact;
            let effective = b.effective - a.effective;
            Ok(GapRecord {
                lower: a.label.clone(),
                upper: b.label.clone(),
                exact,
                effective,
                constant: (exact - effective).abs() / t2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumReport {
        t,
        states: records,
        gaps,
    })
}

/// The low-lying states targeted by the gap analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    /// Ground state of the lowest-`|S_z|` sector.
    S0,
    /// Next state of the same total spin in that sector.
    S1,
    /// Ground state of the sector with `S_z` raised by one.
    T1,
}

impl std::str::FromStr for StateLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S0" => Ok(Self::S0),
            "S1" => Ok(Self::S1),
            "T1" => Ok(Self::T1),
            other => Err(invalid("state", format!("unknown state `{other}`, expected S0, S1 or T1"))),
        }
    }
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::S0 => "S0",
            Self::S1 => "S1",
            Self::T1 => "T1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct TargetState {
    pub label: StateLabel,
    pub spec: SectorSpec,
    pub energy: f64,
    /// `<S^2>`.
    pub total_spin: f64,
    pub vector: Vec<f64>,
}

/// Locates `label` by sector Lanczos.
pub fn find_state(model: &Model, label: StateLabel, opts: &LanczosOptions) -> Result<TargetState> {
    let base = model.half_filling();
    let spec = match label {
        StateLabel::T1 => base.with_sz_twice(base.sz_twice + 2),
        _ => base,
    };
    let basis = model.basis(spec)?;
    let h = model.sector_operators(&basis)?.h;
    let pick = |pairs: &[crate::sector::Eigenpair], k: usize| -> Result<TargetState> {
        let p = &pairs[k];
        let s2 = total_spin_expectation(&basis, &to_complex(&p.vector))?;
        Ok(TargetState {
            label,
            spec,
            energy: p.energy,
            total_spin: s2,
            vector: p.vector.clone(),
        })
    };
    match label {
        StateLabel::S0 | StateLabel::T1 => {
            let pairs = lowest_eigenpairs(&h, 1, opts)?;
            pick(&pairs, 0)
        }
        StateLabel::S1 => {
            let mut k = 4;
            loop {
                let pairs = lowest_eigenpairs(&h, k.min(basis.dimension()), opts)?;
                let spins: Vec<f64> = pairs
                    .iter()
                    .map(|p| total_spin_expectation(&basis, &to_complex(&p.vector)).map(|s| spin_label(s).0))
                    .collect::<Result<_>>()?;
                if let Some(j) = (1..pairs.len()).find(|&j| spins[j] == spins[0]) {
                    return pick(&pairs, j);
                }
                if k >= basis.dimension() {
                    return Err(invalid("state", "no second state of the ground-state spin"));
                }
                k *= 2;
            }
        }
    }
}

/// Effective energy of an exact eigenstate of `H` from its time series.
pub fn effective_energy(
    scheme: &TrotterScheme,
    ops: &SchemeOperators,
    state: &TargetState,
    filter: &FilterSpec,
    checkpoint: Option<&Checkpoint>,
) -> Result<(EnergyEstimate, TimeSeries)> {
    let psi = to_complex(&state.vector);
    let series = compute_time_series(scheme, ops, &psi, filter.order, &state.label.to_string(), checkpoint)?;
    let est = extract_energy(&series, filter, state.energy)?;
    Ok((est, series))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub report: Option<SpectrumReport>,
    /// Per-gap `|delta - delta~| <= epsilon / 3`.
    pub gaps_within_budget: Vec<bool>,
    /// Per-state `|E - E~| <= epsilon / 3`.
    pub energies_within_budget: Vec<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSweep {
    pub scheme: SchemeKind,
    pub epsilon: f64,
    pub states: Vec<StateLabel>,
    pub exact_energies: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

/// Effective energies and gaps of `states` over `t_list` by the time-series
/// route. Gaps pair every state with the first. A failing `t` is recorded
/// and the sweep moves on.
pub fn gap_sweep(
    model: &Model,
    tiling: Option<&TilingSpec>,
    states: &[StateLabel],
    t_list: &[f64],
    epsilon: f64,
    filter: &FilterSpec,
) -> Result<GapSweep> {
    if states.is_empty() {
        return Err(invalid("states", "at least one state is required"));
    }
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_list", "time steps must be positive and ascending"));
    }
    let opts = LanczosOptions::default();
    let targets: Vec<TargetState> = states.iter().map(|&l| find_state(model, l, &opts)).collect::<Result<_>>()?;
    let mut operators: Vec<(SectorSpec, SchemeOperators)> = Vec::new();
    for s in &targets {
        if !operators.iter().any(|(spec, _)| *spec == s.spec) {
            operators.push((s.spec, SchemeOperators::new(model, s.spec, tiling)?));
        }
    }
    let kind = if tiling.is_some() { SchemeKind::Tile } else { SchemeKind::SplitOperator };
    let budget = epsilon / 3.0;
    let gaps: Vec<(usize, usize)> = (1..targets.len()).map(|k| (0, k)).collect();
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let run = || -> Result<SpectrumReport> {
            let scheme = match tiling {
                Some(tl) => TrotterScheme::from_tiling(t, tl)?,
                None => TrotterScheme::split_operator(t)?,
            };
            let mut entries = Vec::with_capacity(targets.len());
            for s in &targets {
                let ops = &operators.iter().find(|(spec, _)| *spec == s.spec).expect("built above").1;
                let (est, _) = effective_energy(&scheme, ops, s, filter, None)?;
                entries.push((s.label.to_string(), s.energy, est.energy));
            }
            error_constants(&entries, t, &gaps)
        };
        rows.push(match run() {
            Ok(report) => SweepRow {
                t,
                gaps_within_budget: report.gaps.iter().map(|g| (g.exact - g.effective).abs() <= budget).collect(),
                energies_within_budget: report
                    .states
                    .iter()
                    .map(|s| (s.exact - s.effective).abs() <= budget)
                    .collect(),
                report: Some(report),
                error: None,
            },
            Err(e) => SweepRow {
                t,
                report: None,
                gaps_within_budget: Vec::new(),
                energies_within_budget: Vec::new(),
                error: Some(e.to_string()),
            },
        });
    }
    Ok(GapSweep {
        scheme: kind,
        epsilon,
        states: states.to_vec(),
        exact_energies: targets.iter().map(|s| s.energy).collect(),
        rows,
    })
}

/// Exact against effective energies for every eigenstate of a dense sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudy {
    pub t: f64,
    pub shift: f64,
    pub exact: Vec<f64>,
    pub effective: Vec<f64>,
    /// `(E~ - E) / t^2` per exact eigenstate.
    pub signed_constants: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub flagged: usize,
    pub pearson: f64,
    /// `Tr(H~ - H)` over the sector.
    pub trace_difference: f64,
    /// `||H||` over the sector.
    pub hamiltonian_norm: f64,
}

/// Pairs every eigenstate of `H` with one of `H~` and correlates energy with
/// the signed error constant. The logarithm is taken with the spectrum
/// centred by the symmetrizing shift.
pub fn correlation_study(scheme: &TrotterScheme, ops: &SchemeOperators) -> Result<CorrelationStudy> {
    let (e, ev) = ops.exact_spectrum_dense()?;
    let shift = -(e[0] + e[e.len() - 1]) / 2.0;
    let shifted = ops.clone().with_shift(shift)?;
    let eff = effective_hamiltonian_dense(scheme, &shifted)?;
    let evc = ev.map(|x| C64::new(x, 0.0));
    let pairs = pair_eigenstates((&e, &evc), (&eff.energies, &eff.vectors), 1e-8 * e[e.len() - 1].abs().max(1.0))?;
    let t2 = scheme.t * scheme.t;
    let effective: Vec<f64> = pairs.iter().map(|p| eff.energies[p.effective]).collect();
    let signed: Vec<f64> = pairs.iter().map(|p| (eff.energies[p.effective] - e[p.exact]) / t2).collect();
    let trace_difference = eff.energies.iter().sum::<f64>() - e.iter().sum::<f64>();
    Ok(CorrelationStudy {
        t: scheme.t,
        shift,
        pearson: pearson(&e, &signed),
        exact: e.clone(),
        effective,
        signed_constants: signed,
        overlaps: pairs.iter().map(|p| p.overlap).collect(),
        flagged: pairs.iter().filter(|p| p.flagged).count(),
        trace_difference,
        hamiltonian_norm: e[0].abs().max(e[e.len() - 1].abs()),
    })
}

/// Tiling of a molecule's lattice from a file, checked against the lattice.
pub fn load_tiling(path: &Path, lattice: &Lattice) -> Result<TilingSpec> {
    let spec = TilingSpec::load(path)?;
    spec.validate(lattice)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemes_are_palindromic_with_full_durations() {
        let so = TrotterScheme::split_operator(0.1).unwrap();
        assert!(so.is_palindromic());
        let tile = TrotterScheme::tile(0.1, vec!["a".into(), "b".into(), "gold".into()]).unwrap();
        assert!(tile.is_palindromic());
        assert_eq!(tile.factors.len(), 7);
        for (_, d) in so.durations().into_iter().chain(tile.durations()) {
            assert!((d - 0.1).abs() < 1e-15);
        }
        assert!(TrotterScheme::split_operator(0.0).is_err());
        assert!(TrotterScheme::tile(0.1, vec![]).is_err());
    }

    fn synthetic(t: f64, poles: &[(f64, f64)], n: usize) -> TimeSeries {
        TimeSeries {
            label: "x".into(),
            scheme: SchemeKind::SplitOperator,
            t,
            values: (0..=n)
                .map(|k| poles.iter().map(|&(w, e)| C64::from_polar(w, -t * k as f64 * e)).sum())
                .collect(),
        }
    }

    #[test]
    fn single_pole_is_recovered() {
        let f = FilterSpec::gaussian(0.05).unwrap();
        assert_eq!(f.order, 120);
        let s = synthetic(0.05, &[(1.0, -14.0641)], f.order);
        let e = extract_energy(&s, &f, -14.0).unwrap();
        assert!((e.energy + 14.0641).abs() < 1e-9, "{}", e.energy);
        assert!((e.pole_weight - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dominant_of_two_poles_wins() {
        let f = FilterSpec::gaussian(0.05).unwrap();
        let s = synthetic(0.1, &[(0.99, 2.0), (0.01, 10.0)], f.order);
        let e = extract_energy(&s, &f, 2.0).unwrap();
        assert!((e.energy - 2.0).abs() < 1e-6, "{}", e.energy);
    }

    #[test]
    fn branch_follows_prior() {
        let f = FilterSpec::gaussian(0.05).unwrap();
        let t = 0.1;
        let e_true = -40.0; // |t E| > pi, wrapped
        let s = synthetic(t, &[(1.0, e_true)], f.order);
        let e = extract_energy(&s, &f, -39.9).unwrap();
        assert!((e.energy - e_true).abs() < 1e-9);
        // multiplying g_k by exp(-2 pi i k) changes nothing
        let mut s2 = s.clone();
        for (k, g) in s2.values.iter_mut().enumerate() {
            *g *= C64::from_polar(1.0, -2.0 * PI * k as f64);
        }
        assert!((extract_energy(&s2, &f, -39.9).unwrap().energy - e.energy).abs() < 1e-9);
    }

    #[test]
    fn flat_series_rejected() {
        let f = FilterSpec::gaussian(0.05).unwrap();
        let mut s = synthetic(0.1, &[(1.0, 0.0)], f.order);
        for g in s.values.iter_mut().skip(1) {
            *g = C64::new(0.0, 0.0);
        }
        assert!(matches!(extract_energy(&s, &f, 0.0), Err(Error::FlatFilter(_))));
        let short = synthetic(0.1, &[(1.0, 0.0)], 10);
        assert!(extract_energy(&short, &f, 0.0).is_err());
    }

    #[test]
    fn constants_vanish_for_exact_energies() {
        let r = error_constants(&[("S0".into(), -1.0, -1.0), ("T1".into(), 1.5, 1.5)], 0.01, &[(0, 1)]).unwrap();
        assert!(r.states.iter().all(|s| s.constant == 0.0));
        assert_eq!(r.gaps[0].exact, 2.5);
        assert_eq!(r.gaps[0].constant, 0.0);
    }

    #[test]
    fn pairing_recovers_permutation() {
        let n = 6;
        let e: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let id = DMatrix::<C64>::identity(n, n);
        let perm = [3usize, 0, 5, 1, 4, 2];
        let mut p = DMatrix::<C64>::zeros(n, n);
        let mut f = vec![0.0; n];
        for (j, &i) in perm.iter().enumerate() {
            p[(i, j)] = C64::new(1.0, 0.0);
            f[j] = e[i] + 1e-3;
        }
        let pairs = pair_eigenstates((&e, &id), (&f, &p), 1e-9).unwrap();
        for pr in &pairs {
            assert_eq!(perm[pr.effective], pr.exact);
            assert_eq!(pr.overlap, 1.0);
            assert!(!pr.flagged);
        }
        let same = pair_eigenstates((&e, &id), (&e, &id), 1e-9).unwrap();
        assert!(same.iter().all(|p| p.exact == p.effective));
    }

    #[test]
    fn series_csv_round_trip() {
        let s = synthetic(0.1, &[(1.0, 3.0)], 5);
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &s).unwrap();
        let back = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s.values);
        assert!(read_series_csv("k,re,im\n1,0,0\n".as_bytes()).is_err());
    }
}
