use super::SectorOperator;
use crate::error::{invalid, Error, Result};
use crate::linalg::{caxpy, cdot, cnorm, cscale, tridiagonal_eigen, C64};

/// Target error of one factor application.
pub const KRYLOV_TOLERANCE: f64 = 1e-12;

const MAX_KRYLOV_DIM: usize = 40;
const MIN_SUBSTEP_FRACTION: f64 = 1e-8;

/// One factor `exp(-i G duration)` of a product formula.
#[derive(Debug, Clone, Copy)]
pub struct Factor<'a> {
    pub op: &'a SectorOperator,
    pub duration: f64,
}

/// Applies the factors in order: `factors[0]` acts on the state first.
pub fn propagate(factors: &[Factor<'_>], state: &mut Vec<C64>) -> Result<()> {
    for f in factors {
        if f.op.dimension() != state.len() {
            return Err(invalid("state", "length differs from sector dimension"));
        }
        if f.duration == 0.0 {
            continue;
        }
        if f.op.is_diagonal() {
            for (s, &d) in state.iter_mut().zip(f.op.diagonal()) {
                *s *= C64::from_polar(1.0, -d * f.duration);
            }
        } else {
            *state = expm_apply(f.op, state, f.duration, KRYLOV_TOLERANCE)?;
        }
    }
    Ok(())
}

/// `exp(-i op t) psi` by Lanczos-Krylov with an a-posteriori error estimate;
/// the interval is subdivided until each piece meets its share of `tol`.
pub fn expm_apply(op: &SectorOperator, psi: &[C64], t: f64, tol: f64) -> Result<Vec<C64>> {
    let mut state = psi.to_vec();
    let total = t.abs();
    let sign = t.signum();
    let mut done = 0.0;
    let mut step = total;
    while done < total {
        let h = step.min(total - done);
        let share = tol * (h / total).max(MIN_SUBSTEP_FRACTION);
        match krylov_step(op, &state, sign * h, share) {
            Some((next, err)) => {
                state = next;
                done += h;
                if err < 0.01 * share {
                    step *= 1.5;
                }
            }
            None => {
                step /= 2.0;
                if step < MIN_SUBSTEP_FRACTION * total {
                    return Err(Error::NotConverged {
                        method: "krylov expm",
                        iterations: MAX_KRYLOV_DIM,
                        residual: f64::NAN,
                    });
                }
            }
        }
    }
    Ok(state)
}

fn krylov_step(op: &SectorOperator, psi: &[C64], t: f64, tol: f64) -> Option<(Vec<C64>, f64)> {
    let dim = psi.len();
    let beta0 = cnorm(psi);
    if beta0 == 0.0 {
        return Some((psi.to_vec(), 0.0));
    }
    let mut v0 = psi.to_vec();
    cscale(C64::new(1.0 / beta0, 0.0), &mut v0);
    let mut basis = vec![v0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    for j in 0..MAX_KRYLOV_DIM.min(dim) {
        op.apply(&basis[j], &mut w);
        alpha.push(cdot(&basis[j], &w).re);
        for _ in 0..2 {
            for v in &basis {
                let c = cdot(v, &w);
                caxpy(-c, v, &mut w);
            }
        }
        let b = cnorm(&w);
        let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
        let m = alpha.len();
        // y = exp(-i T t) e_1
        let y: Vec<C64> = (0..m)
            .map(|r| {
                (0..m)
                    .map(|c| C64::from_polar(vecs[(r, c)] * vecs[(0, c)], -vals[c] * t))
                    .sum()
            })
            .collect();
        let err = beta0 * b * y[m - 1].norm();
        let invariant =
            b <= 1e-14 * beta0.max(1.0) * alpha.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if err <= tol || invariant || m == dim {
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (k, v) in basis.iter().enumerate() {
                caxpy(y[k] * beta0, v, &mut out);
            }
            return Some((out, err));
        }
        beta.push(b);
        let mut next = w.clone();
        cscale(C64::new(1.0 / b, 0.0), &mut next);
        basis.push(next);
    }
    None
}
