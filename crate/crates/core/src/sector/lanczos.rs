use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use super::SectorOperator;
use crate::error::{invalid, Error, Result};

use crate::linalg::{axpy, dot, norm, scale, symmetric_eigen_sorted};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Krylov dimension per restart cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual target relative to the operator norm estimate.
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 80,
            max_restarts: 200,
            rel_tol: 1e-9,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// A real symmetric linear map on a sector.
pub trait SymmetricOperator: Sync {
    fn dimension(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Upper estimate of the operator norm, used to scale tolerances.
    fn norm_estimate(&self) -> f64;
}

impl SymmetricOperator for SectorOperator {
    fn dimension(&self) -> usize {
        SectorOperator::dimension(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_real(x, y)
    }

    fn norm_estimate(&self) -> f64 {
        abs_power_estimate(self)
    }
}

/// `-|O|`, with absolute values taken per matrix element. Its lowest
/// eigenvalue is minus the largest eigenvalue of `|O|`.
pub struct NegatedAbs<'a>(pub &'a SectorOperator);

impl SymmetricOperator for NegatedAbs<'_> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_abs(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }

    fn norm_estimate(&self) -> f64 {
        abs_power_estimate(self.0)
    }
}

/// Outcome of an eigensolve that may stop short of the tolerance.
#[derive(Debug, Clone)]
pub struct EigenSolve {
    pub pairs: Vec<Eigenpair>,
    pub converged: bool,
    pub matvecs: usize,
}

/// The `k` lowest eigenpairs of a real symmetric sector operator.
///
/// Thick-restart Lanczos with full reorthogonalization. After the first run
/// converges, fresh random starts probe the operator deflated by the found
/// vectors, so degenerate levels are returned with their full multiplicity.
/// Small sectors are diagonalized densely.
pub fn lowest_eigenpairs(
    op: &SectorOperator,
    k: usize,
    opts: &LanczosOptions,
) -> Result<Vec<Eigenpair>> {
    if !op.is_real() {
        return Err(invalid("op", "Lanczos requires real matrix elements"));
    }
    let solve = lowest_eigenpairs_of(op, k, opts)?;
    if !solve.converged {
        return Err(not_converged(opts, &solve.pairs));
    }
    Ok(solve.pairs)
}

/// As [`lowest_eigenpairs`] for any symmetric operator, returning the best
/// available pairs with a convergence flag instead of failing.
pub fn lowest_eigenpairs_of<O: SymmetricOperator>(
    op: &O,
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenSolve> {
    let dim = op.dimension();
    if k == 0 || k > dim {
        return Err(invalid("k", format!("must be in 1..={dim}")));
    }
    if dim <= super::DENSE_LIMIT.min(400) || dim <= k + 2 {
        return Ok(EigenSolve {
            pairs: dense_lowest(op, k),
            converged: true,
            matvecs: dim,
        });
    }
    let counter = Counted::new(op);
    let op = &counter;
    let hnorm = op.norm_estimate();
    let tol = opts.rel_tol * hnorm.max(1.0);
    let m = opts.krylov_dim.min(dim).max(k + 8).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random =
        |dim: usize| -> Vec<f64> { (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect() };
    let mut locked: Vec<Eigenpair> = Vec::with_capacity(k + 2);
    let mut restarts_left = opts.max_restarts;
    let (found, ok) = thick_restart(op, &locked, random(dim), k, m, tol, &mut restarts_left);
    if !ok {
        return Ok(EigenSolve {
            pairs: found,
            converged: false,
            matvecs: counter.count(),
        });
    }
    locked.extend(found);
    // A single Krylov space cannot see a second copy of a degenerate level.
    // Probe the deflated operator from fresh starts until nothing shows up
    // below the k-th level.
    loop {
        let kth = kth_energy(&locked, k);
        let mut probe_budget = 0;
        let (probe, _) = thick_restart(op, &locked, random(dim), 1, m, tol, &mut probe_budget);
        if probe.is_empty() || probe[0].energy >= kth - tol.max(1e-8 * kth.abs()) {
            break;
        }
        let (found, ok) = thick_restart(
            op,
            &locked,
            probe[0].vector.clone(),
            1,
            m,
            tol,
            &mut restarts_left,
        );
        if !ok {
            return Err(not_converged(opts, &found));
        }
        if found[0].energy >= kth - tol {
            break;
        }
        locked.extend(found);
    }
    locked.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    locked.truncate(k);
    Ok(EigenSolve {
        pairs: locked,
        converged: true,
        matvecs: counter.count(),
    })
}

struct Counted<'a, O> {
    op: &'a O,
    calls: std::sync::atomic::AtomicUsize,
}

impl<'a, O: SymmetricOperator> Counted<'a, O> {
    fn new(op: &'a O) -> Self {
        Self {
            op,
            calls: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    fn count(&self) -> usize {
        self.calls.load(std::sync::atomic::Ordering::Relaxed)
    }
}

impl<O: SymmetricOperator> SymmetricOperator for Counted<'_, O> {
    fn dimension(&self) -> usize {
        self.op.dimension()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.calls
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.op.apply(x, y)
    }

    fn norm_estimate(&self) -> f64 {
        self.op.norm_estimate()
    }
}

/// Thick-restart Lanczos on the operator deflated by `locked`, returning the
/// `want` lowest converged Ritz pairs.
fn thick_restart<O: SymmetricOperator>(
    op: &O,
    locked: &[Eigenpair],
    start: Vec<f64>,
    want: usize,
    m: usize,
    tol: f64,
    restarts_left: &mut usize,
) -> (Vec<Eigenpair>, bool) {
    let dim = start.len();
    let free = dim.saturating_sub(locked.len());
    let m = m.min(free).max(1);
    let want = want.min(m);
    let keep = (2 * want + 10).min(m.saturating_sub(2)).max(want);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut hv: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut g: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut next = start;
    orthogonalize(&mut next, locked);
    let n0 = norm(&next);
    scale(1.0 / n0, &mut next);
    let mut exhausted = false;
    loop {
        while v.len() < m && !exhausted {
            let mut w = vec![0.0; dim];
            op.apply(&next, &mut w);
            orthogonalize(&mut w, locked);
            v.push(std::mem::take(&mut next));
            let col: Vec<f64> = v.iter().map(|x| dot(x, &w)).collect();
            hv.push(w.clone());
            for row in g.iter_mut() {
                row.push(0.0);
            }
            g.push(vec![0.0; v.len()]);
            let j = v.len() - 1;
            for (i, &c) in col.iter().enumerate() {
                g[i][j] = c;
                g[j][i] = c;
            }
            let mut r = w;
            for (x, &c) in v.iter().zip(&col) {
                axpy(-c, x, &mut r);
            }
            for x in &v {
                let c = dot(x, &r);
                axpy(-c, x, &mut r);
            }
            orthogonalize(&mut r, locked);
            let b = norm(&r);
            let scale_ref = col.iter().fold(1.0f64, |a, c| a.max(c.abs()));
            if b <= 1e-12 * scale_ref || v.len() >= free {
                exhausted = true;
                next = Vec::new();
            } else {
                scale(1.0 / b, &mut r);
                next = r;
            }
        }
        let size = v.len();
        let gm = DMatrix::from_fn(size, size, |i, j| 0.5 * (g[i][j] + g[j][i]));
        let (theta, s) = symmetric_eigen_sorted(gm);
        let ritz = |c: usize, basis: &[Vec<f64>]| -> Vec<f64> {
            let mut y = vec![0.0; dim];
            for (i, x) in basis.iter().enumerate() {
                axpy(s[(i, c)], x, &mut y);
            }
            y
        };
        let mut pairs = Vec::with_capacity(want);
        let mut all = true;
        for c in 0..want.min(size) {
            let y = ritz(c, &v);
            let mut r = ritz(c, &hv);
            axpy(-theta[c], &y, &mut r);
            let res = norm(&r);
            if res > tol {
                all = false;
            }
            pairs.push(Eigenpair {
                energy: theta[c],
                vector: y,
                residual: res,
            });
        }
        if all || (exhausted && size == free) {
            return (pairs, true);
        }
        if *restarts_left == 0 {
            return (pairs, false);
        }
        *restarts_left -= 1;
        let l = keep.min(size);
        let nv: Vec<Vec<f64>> = (0..l).map(|c| ritz(c, &v)).collect();
        let nhv: Vec<Vec<f64>> = (0..l).map(|c| ritz(c, &hv)).collect();
        v = nv;
        hv = nhv;
        g = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| if i == j { theta[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        if exhausted {
            // Invariant subspace found but not all wanted pairs are accurate;
            // continue from a fresh direction.
            let mut r: Vec<f64> = (0..dim)
                .map(|i| ((i * 7919 % 104729) as f64).sin())
                .collect();
            orthogonalize(&mut r, locked);
            for _ in 0..2 {
                for x in &v {
                    let c = dot(x, &r);
                    axpy(-c, x, &mut r);
                }
            }
            let b = norm(&r);
            if b == 0.0 {
                return (pairs, true);
            }
            scale(1.0 / b, &mut r);
            next = r;
            exhausted = false;
        }
    }
}

fn not_converged(opts: &LanczosOptions, pairs: &[Eigenpair]) -> Error {
    Error::NotConverged {
        method: "lanczos",
        iterations: opts.max_restarts,
        residual: pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
    }
}

fn kth_energy(locked: &[Eigenpair], k: usize) -> f64 {
    if locked.len() < k {
        return f64::INFINITY;
    }
    let mut e: Vec<f64> = locked.iter().map(|p| p.energy).collect();
    e.sort_by(f64::total_cmp);
    e[k - 1]
}

fn dense_lowest<O: SymmetricOperator>(op: &O, k: usize) -> Vec<Eigenpair> {
    let dim = op.dimension();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for c in 0..dim {
        e[c] = 1.0;
        op.apply(&e, &mut col);
        e[c] = 0.0;
        for r in 0..dim {
            m[(r, c)] = col[r];
        }
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let (vals, vecs) = symmetric_eigen_sorted(m);
    (0..k)
        .map(|i| {
            let v: Vec<f64> = vecs.column(i).iter().copied().collect();
            let r = residual(op, &v, vals[i]);
            Eigenpair {
                energy: vals[i],
                vector: v,
                residual: r,
            }
        })
        .collect()
}

fn orthogonalize(v: &mut [f64], locked: &[Eigenpair]) {
    for _ in 0..2 {
        for l in locked {
            let c = dot(&l.vector, v);
            axpy(-c, &l.vector, v);
        }
    }
}

fn residual<O: SymmetricOperator>(op: &O, v: &[f64], theta: f64) -> f64 {
    let mut w = vec![0.0; v.len()];
    op.apply(v, &mut w);
    axpy(-theta, v, &mut w);
    norm(&w)
}

/// Cheap estimate of `||H||` from a few power steps on `|H|`.
fn abs_power_estimate(op: &SectorOperator) -> f64 {
    let dim = op.dimension();
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut w = vec![0.0; dim];
    let mut est = 0.0;
    for _ in 0..8 {
        op.apply_abs(&v, &mut w);
        est = norm(&w);
        if est == 0.0 {
            return 0.0;
        }
        v.copy_from_slice(&w);
        scale(1.0 / est, &mut v);
    }
    est
}
