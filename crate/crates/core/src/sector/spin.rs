use super::{SectorBasis, SectorSpec};
use crate::error::{invalid, Result};
use crate::hamiltonian::Spin;
use crate::linalg::C64;

/// `<S^2> = ||S+ psi||^2 + Sz^2 + Sz` for a state of the given sector.
pub fn total_spin_expectation(basis: &SectorBasis, state: &[C64]) -> Result<f64> {
    if state.len() != basis.dimension() {
        return Err(invalid("state", "length differs from sector dimension"));
    }
    let sz = basis.sz_twice() as f64 / 2.0;
    let norm2: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    let raised = SectorBasis::new(SectorSpec {
        sz_twice: basis.sz_twice() + 2,
        ..basis.spec()
    });
    let plus = match raised {
        Ok(target) => {
            let mut out = vec![C64::new(0.0, 0.0); target.dimension()];
            let n = basis.n_sites();
            for (i, &amp) in state.iter().enumerate() {
                if amp == C64::new(0.0, 0.0) {
                    continue;
                }
                let b = basis.state(i);
                for site in 0..n {
                    let pu = basis.orbital(site, Spin::Up);
                    let pd = basis.orbital(site, Spin::Down);
                    if (b >> pd) & 1 == 1 && (b >> pu) & 1 == 0 {
                        let (lo, hi) = (pu.min(pd), pu.max(pd));
                        let between = if hi > lo + 1 {
                            (b >> (lo + 1)) & ((1u64 << (hi - lo - 1)) - 1)
                        } else {
                            0
                        };
                        let sign = if between.count_ones() % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        let t = b ^ (1u64 << pd) ^ (1u64 << pu);
                        let j = target.index(t).expect("raised state lies in target sector");
                        out[j] += amp * sign;
                    }
                }
            }
            out.iter().map(|a| a.norm_sqr()).sum::<f64>()
        }
        Err(_) => 0.0,
    };
    Ok((plus + (sz * sz + sz) * norm2) / norm2)
}

/// Total spin `s` nearest to `<S^2>` and its multiplicity name.
pub fn spin_label(s2: f64) -> (f64, &'static str) {
    let s = (-1.0 + (1.0 + 4.0 * s2.max(0.0)).sqrt()) / 2.0;
    let s = (2.0 * s).round() / 2.0;
    let name = match (2.0 * s) as u32 {
        0 => "singlet",
        1 => "doublet",
        2 => "triplet",
        3 => "quartet",
        4 => "quintet",
        _ => "high-spin",
    };
    (s, name)
}
