//! Gate costs of phase estimation with a second-order product formula.
//!
//! Two step-count rules: a fixed error constant `G` (worst-case, average or
//! energy constant), or a fixed time step (gap estimates). Rotations are
//! synthesised by repeat-until-success; Toffolis come from `|CCZ> -> 2|T>`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::freefermion::{KineticGateCount, TilingSpec};
use crate::pauli::PauliSum;

/// Chemical accuracy, eV.
pub const DEFAULT_EPSILON: f64 = 0.04354;
/// Share of the error budget for rotation synthesis.
pub const DEFAULT_X: f64 = 0.02;
/// Time step for gap estimates, 1/eV.
pub const DEFAULT_GAP_TIME_STEP: f64 = 0.1;

const FIXED_ERROR_PREFACTOR: f64 = 6.203;
const FIXED_STEP_PREFACTOR: f64 = 2.28 * PI;
const SYNTHESIS_SLOPE: f64 = 1.15;
const SYNTHESIS_OFFSET: f64 = 9.2;
/// Relative tolerance for equal rotation angles.
const ANGLE_TOLERANCE: f64 = 1e-9;

/// Rotations and extra T gates of one product-formula step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerStep {
    pub rotations: u64,
    pub t_gates: u64,
}

impl PerStep {
    /// Potential rotations (one per shifted-potential term) plus the kinetic
    /// tiling counts.
    pub fn from_parts(potential_terms: usize, kinetic: KineticGateCount) -> Self {
        Self {
            rotations: potential_terms as u64 + kinetic.rotations,
            t_gates: kinetic.t_gates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CostMode {
    /// Step count from an error constant `g` (eV^3).
    FixedError { g: f64 },
    /// Step count from a fixed time step (1/eV).
    FixedTimestep { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub epsilon: f64,
    pub x: f64,
    pub mode: CostMode,
    pub per_step: PerStep,
    pub n_sites: usize,
    /// Two independent runs, one per energy of the gap.
    pub gap: bool,
}

impl CostParams {
    pub fn new(mode: CostMode, per_step: PerStep, n_sites: usize) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            x: DEFAULT_X,
            mode,
            per_step,
            n_sites,
            gap: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid("epsilon", "must be positive"));
        }
        if !(self.x > 0.0 && self.x < 1.0) {
            return Err(invalid("x", "must lie in (0, 1)"));
        }
        match self.mode {
            CostMode::FixedError { g } if !(g >= 0.0) || !g.is_finite() => {
                Err(invalid("g", "error constant must be non-negative"))
            }
            CostMode::FixedTimestep { t } if !(t > 0.0) || !t.is_finite() => {
                Err(invalid("t", "time step must be positive"))
            }
            _ => Ok(()),
        }
    }
}

fn fixed_error_raw(g: f64, epsilon: f64, x: f64) -> f64 {
    FIXED_ERROR_PREFACTOR * g.sqrt() / ((1.0 - x).powf(1.5) * epsilon.powf(1.5))
}

fn fixed_timestep_raw(t: f64, epsilon: f64, x: f64) -> f64 {
    FIXED_STEP_PREFACTOR / (2.0 * (1.0 - x) * epsilon * t)
}

/// `ceil(6.203 sqrt(G) / ((1-x)^1.5 eps^1.5))`, at least 1.
pub fn steps_fixed_error(g: f64, epsilon: f64, x: f64) -> u64 {
    (fixed_error_raw(g, epsilon, x).ceil() as u64).max(1)
}

/// `ceil(2.28 pi / (2 (1-x) eps t))`, at least 1.
pub fn steps_fixed_timestep(t: f64, epsilon: f64, x: f64) -> u64 {
    (fixed_timestep_raw(t, epsilon, x).ceil() as u64).max(1)
}

/// Argument of the synthesis logarithm.
fn synthesis_argument(params: &CostParams, rotations: u64) -> f64 {
    let (eps, x, r) = (params.epsilon, params.x, rotations as f64);
    match params.mode {
        CostMode::FixedError { g } => r * g.sqrt() / (x * (1.0 - x).sqrt() * eps.powf(1.5)),
        CostMode::FixedTimestep { t } => r / (x * eps * t),
    }
}

/// T gates per synthesised rotation when `rotations` share the budget.
pub fn t_gates_per_rotation(params: &CostParams, rotations: u64) -> f64 {
    if rotations == 0 {
        return 0.0;
    }
    SYNTHESIS_SLOPE * synthesis_argument(params, rotations).log2() + SYNTHESIS_OFFSET
}

/// `N_R (1.15 log2(arg) + 9.2) + N_T`, unrounded.
pub fn t_gates_per_step(params: &CostParams) -> f64 {
    let p = params.per_step;
    p.rotations as f64 * t_gates_per_rotation(params, p.rotations) + p.t_gates as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n_steps: u64,
    /// Time step implied by the step count, fixed-error mode only.
    pub t_implied: Option<f64>,
    pub t_per_step_gates: f64,
    /// Toffolis per step beyond the T gates (Hamming-weight adders).
    pub toffoli_per_step: f64,
    /// One run.
    pub single_run_t: u64,
    pub single_run_toffoli: u64,
    /// Both runs when `inputs.gap`, else one.
    pub total_t: u64,
    pub total_toffoli: u64,
    pub logical_qubits: usize,
    pub inputs: CostParams,
    pub hwp: Option<HwpSummary>,
}

/// Steps, gates and qubits for `params`.
pub fn total_cost(params: &CostParams) -> Result<CostReport> {
    params.validate()?;
    let (n_steps, t_implied) = match params.mode {
        CostMode::FixedError { g } => {
            let raw = fixed_error_raw(g, params.epsilon, params.x);
            let n = steps_fixed_error(g, params.epsilon, params.x);
            let t = (raw > 0.0).then(|| FIXED_STEP_PREFACTOR / (2.0 * (1.0 - params.x) * params.epsilon * raw));
            (n, t)
        }
        CostMode::FixedTimestep { t } => (steps_fixed_timestep(t, params.epsilon, params.x), None),
    };
    let per_step = t_gates_per_step(params);
    Ok(assemble(params, n_steps, t_implied, per_step, 0.0, 2 * params.n_sites + 2, None))
}

fn assemble(
    params: &CostParams,
    n_steps: u64,
    t_implied: Option<f64>,
    t_per_step: f64,
    toffoli_per_step: f64,
    qubits: usize,
    hwp: Option<HwpSummary>,
) -> CostReport {
    let steps = n_steps as f64;
    let single_t = (steps * t_per_step).ceil() as u64;
    // |CCZ> -> 2|T>
    let single_toffoli = (steps * (t_per_step / 2.0 + toffoli_per_step)).ceil() as u64;
    let runs = if params.gap { 2 } else { 1 };
    CostReport {
        n_steps,
        t_implied,
        t_per_step_gates: t_per_step,
        toffoli_per_step,
        single_run_t: single_t,
        single_run_toffoli: single_toffoli,
        total_t: runs * single_t,
        total_toffoli: runs * single_toffoli,
        logical_qubits: qubits,
        inputs: *params,
        hwp,
    }
}

/// A set of equal-angle rotations run as parallel layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationGroup {
    /// Rotation angle in units of `t` (eV).
    pub coefficient: f64,
    pub size: u64,
    /// Largest number of group members acting on one qubit.
    pub max_occurrence: u64,
    /// `size / max_occurrence`.
    pub parallel_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwpSummary {
    pub groups: usize,
    pub rotations_before: u64,
    pub rotations_after: u64,
    pub toffoli_added: u64,
    pub ancillas: usize,
}

/// Groups the potential's rotations by angle.
pub fn potential_rotation_groups(potential: &PauliSum) -> Vec<RotationGroup> {
    let mut terms: Vec<(f64, Vec<usize>)> = potential
        .iter()
        .filter(|(p, _)| !p.is_identity())
        .map(|(p, &c)| (c, p.letters().map(|(q, _)| q).collect()))
        .collect();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, Vec<Vec<usize>>)> = Vec::new();
    for (c, support) in terms {
        match groups.last_mut() {
            Some((c0, members)) if (c - *c0).abs() <= ANGLE_TOLERANCE * c0.abs().max(c.abs()) => {
                members.push(support)
            }
            _ => groups.push((c, vec![support])),
        }
    }
    groups
        .into_iter()
        .map(|(c, members)| {
            let mut occ: BTreeMap<usize, u64> = BTreeMap::new();
            for s in &members {
                for &q in s {
                    *occ.entry(q).or_default() += 1;
                }
            }
            let size = members.len() as u64;
            let max_occurrence = occ.values().copied().max().unwrap_or(1).max(1);
            RotationGroup {
                coefficient: c,
                size,
                max_occurrence,
                parallel_width: size as f64 / max_occurrence as f64,
            }
        })
        .collect()
}

/// Rotations and Toffolis for `size` equal-angle rotations done in
/// `layers` rounds of at most `cap` at a time.
///
/// A layer of `k` rotations costs `floor(log2 k) + 1` rotations on the
/// Hamming-weight register and `k - popcount(k)` Toffolis to compute it.
fn hwp_layers(size: u64, layers: u64, cap: u64) -> (u64, u64) {
    let layers = layers.max(size.div_ceil(cap)).max(1);
    let (q, r) = (size / layers, size % layers);
    let cost = |k: u64| -> (u64, u64) {
        if k <= 1 {
            (k, 0)
        } else {
            (u64::from(63 - k.leading_zeros()) + 1, k - u64::from(k.count_ones()))
        }
    };
    let (r_hi, t_hi) = cost(q + 1);
    let (r_lo, t_lo) = cost(q);
    (r * r_hi + (layers - r) * r_lo, r * t_hi + (layers - r) * t_lo)
}

/// Kinetic rotations per section application and spin.
fn section_rotation_counts(tiling: &TilingSpec) -> Vec<u64> {
    tiling
        .sections
        .iter()
        .map(|s| {
            s.tiles
                .iter()
                .map(|t| t.rotations.unwrap_or(s.rotations_per_tile))
                .sum()
        })
        .collect()
}

/// Cost with Hamming weight phasing on `N - 1` ancillas.
///
/// Potential groups run in `max_occurrence` layers of average width
/// `size / max_occurrence`. Kinetic rotations share one angle per section
/// application (both spins together). The rotation budget of the synthesis
/// logarithm uses the reduced count.
pub fn hwp_estimate(potential: &PauliSum, tiling: &TilingSpec, base: &CostReport) -> Result<CostReport> {
    let params = base.inputs;
    params.validate()?;
    let n = params.n_sites as u64;
    if n < 2 {
        return Err(invalid("n_sites", "needs at least two sites"));
    }
    let groups = potential_rotation_groups(potential);
    let mut rotations = 0u64;
    let mut toffoli = 0u64;
    let mut before = 0u64;
    for g in &groups {
        let (r, t) = hwp_layers(g.size, g.max_occurrence, n);
        rotations += r;
        toffoli += t;
        before += g.size;
    }
    let counts = section_rotation_counts(tiling);
    let last = counts.len().saturating_sub(1);
    for (k, &c) in counts.iter().enumerate() {
        let applications = if k == last { 1 } else { 2 };
        let (r, t) = hwp_layers(2 * c, 1, n);
        rotations += applications * r;
        toffoli += applications * t;
        before += applications * 2 * c;
    }
    let mut reduced = params;
    reduced.per_step.rotations = rotations;
    let per_step = t_gates_per_step(&reduced);
    let summary = HwpSummary {
        groups: groups.len(),
        rotations_before: before,
        rotations_after: rotations,
        toffoli_added: toffoli,
        ancillas: params.n_sites - 1,
    };
    Ok(assemble(
        &params,
        base.n_steps,
        base.t_implied,
        per_step,
        toffoli as f64,
        2 * params.n_sites + 1 + (params.n_sites - 1) + 1,
        Some(summary),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrappingDiagnosis {
    pub t: f64,
    pub e_center: f64,
    /// `(E_max - E_min) t <= 2 pi`.
    pub strict: bool,
    /// `[E_c - pi/t, E_c + pi/t]`.
    pub window: (f64, f64),
    /// Weight on levels with `t |E_j - E_c| >= pi`.
    pub out_of_range_weight: Option<f64>,
    pub target_weight: Option<f64>,
    /// Target weight at least ten times the out-of-range weight.
    pub dominated: Option<bool>,
}

/// Checks whether phases wrap for time step `t` around `e_center`.
///
/// `profile` lists `(E_j, |c_j|^2)`; `target` indexes the level of interest.
pub fn wrapping_check(
    bounds: (f64, f64),
    t: f64,
    e_center: f64,
    profile: Option<&[(f64, f64)]>,
    target: Option<usize>,
) -> Result<WrappingDiagnosis> {
    if !(t > 0.0) {
        return Err(invalid("t", "time step must be positive"));
    }
    if bounds.1 < bounds.0 {
        return Err(invalid("bounds", "E_max below E_min"));
    }
    let out = profile.map(|p| {
        p.iter()
            .filter(|(e, _)| t * (e - e_center).abs() >= PI)
            .map(|(_, w)| w)
            .sum::<f64>()
    });
    let target_weight = match (profile, target) {
        (Some(p), Some(k)) => Some(p.get(k).ok_or_else(|| invalid("target", "index out of range"))?.1),
        _ => None,
    };
    Ok(WrappingDiagnosis {
        t,
        e_center,
        strict: (bounds.1 - bounds.0) * t <= 2.0 * PI,
        window: (e_center - PI / t, e_center + PI / t),
        out_of_range_weight: out,
        target_weight,
        dominated: match (target_weight, out) {
            (Some(c), Some(o)) => Some(c >= 10.0 * o),
            _ => None,
        },
    })
}

/// `C(n) = prefactor * n^exponent`, for sizes without computed constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub prefactor: f64,
    pub exponent: f64,
}

impl PowerLaw {
    /// Least-squares fit in log-log space.
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 || points.iter().any(|&(n, c)| !(n > 0.0) || !(c > 0.0)) {
            return Err(invalid("points", "need two or more positive points"));
        }
        let k = points.len() as f64;
        let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(invalid("points", "sizes must differ"));
        }
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
        Ok(Self {
            prefactor: (my - slope * mx).exp(),
            exponent: slope,
        })
    }

    pub fn evaluate(&self, n: f64) -> f64 {
        self.prefactor * n.powf(self.exponent)
    }
}
