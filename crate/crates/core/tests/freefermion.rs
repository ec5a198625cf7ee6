use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trotterlab::freefermion::*;
use trotterlab::lattice::{build_lattice, Family, Molecule};

/// `sum_ij A_ij a_i^+ a_j` on the full `2^n` Fock space, built from
/// Jordan-Wigner bit manipulation.
fn fock(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        for j in 0..n {
            if s >> j & 1 == 0 {
                continue;
            }
            let s1 = s ^ (1 << j);
            let sign_j = (s1 & ((1 << j) - 1)).count_ones();
            for i in 0..n {
                if s1 >> i & 1 == 1 || a[(i, j)] == C64::new(0.0, 0.0) {
                    continue;
                }
                let sign_i = (s1 & ((1 << i) - 1)).count_ones();
                let sign = if (sign_i + sign_j) % 2 == 0 { 1.0 } else { -1.0 };
                m[(s1 | (1 << i), s)] += a[(i, j)] * sign;
            }
        }
    }
    m
}

/// Same on two spin species, `n` modes each, up modes first.
fn fock_two_spin(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let mut b = DMatrix::<C64>::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (n, n)).copy_from(a);
    b.view_mut((n, n), (n, n)).copy_from(a);
    fock(&b)
}

fn complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

/// `exp(-i H t)` for Hermitian `H` from its eigendecomposition.
fn evolve(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let h = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn random_sections(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<DMatrix<f64>> {
    let mut out = vec![DMatrix::<f64>::zeros(n, n); count];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.6) {
                let s = rng.gen_range(0..count);
                let v = rng.gen_range(-1.5..1.5);
                out[s][(i, j)] = v;
                out[s][(j, i)] = v;
            }
        }
    }
    out
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.norm()))
}

#[test]
fn product_of_quadratic_exponentials_maps_to_mode_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n, count) in [(3, 2), (5, 3), (6, 2), (8, 3)] {
        let sections = KineticSections::from_matrices(random_sections(&mut rng, n, count)).unwrap();
        let t = 0.2;
        let eff = effective_kinetic(&sections, t).unwrap();
        let full = fock(&complex(&sections.full));
        let mut u = evolve(&full, -t);
        let halves: Vec<_> = sections.sections.iter().map(|a| evolve(&fock(&complex(a)), t / 2.0)).collect();
        for h in halves.iter().chain(halves.iter().rev()) {
            u *= h;
        }
        let want = evolve(&fock(&eff.matrix), t);
        assert!(max_abs(&(&u - &want)) < 1e-10, "n = {n}");
    }
}

#[test]
fn fock_norm_is_half_trace_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (n, count) in [(4, 2), (6, 3), (8, 2)] {
        let sections = KineticSections::from_matrices(random_sections(&mut rng, n, count)).unwrap();
        let eff = effective_kinetic(&sections, 0.3).unwrap();
        let q = fock(&eff.matrix);
        let norm = q.symmetric_eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!((norm - eff.half_trace_norm()).abs() < 1e-10 * norm.max(1.0), "n = {n}");
        let trace: f64 = eff.modes.iter().sum();
        assert!(trace.abs() < 1e-10);
    }
}

#[test]
fn sector_quantities_match_fock_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 4;
    let sections = KineticSections::from_matrices(random_sections(&mut rng, n, 3)).unwrap();
    let filling = Filling { up: 2, down: 1 };
    let t = 0.25;
    let eff = effective_kinetic(&sections, t).unwrap();
    let q = fock_two_spin(&eff.matrix);
    let sector: Vec<usize> = (0..1usize << (2 * n))
        .filter(|s| (s & 0xf).count_ones() == 2 && (s >> 4).count_ones() == 1)
        .collect();
    let block = DMatrix::from_fn(sector.len(), sector.len(), |a, b| q[(sector[a], sector[b])]);
    let eig = block.symmetric_eigenvalues();
    let norm = eig.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!((norm - eff.sector_norm(filling)).abs() < 1e-10);

    // normalized trace of exp(i T~ t) on the sector
    let mean: f64 = eig.iter().map(|e| 4.0 * (e * t / 2.0).sin().powi(2)).sum::<f64>() / eig.len() as f64;
    let (a, fit) = average_case_kinetic_exact(&sections, &[t], filling).unwrap();
    assert!((fit.values[0] - mean.sqrt()).abs() < 1e-12);
    assert!((a.value - mean.sqrt() / t.powi(3)).abs() < 1e-9 * a.value);
}

#[test]
fn one_section_has_zero_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sections = KineticSections::from_matrices(random_sections(&mut rng, 6, 1)).unwrap();
    let f = Filling::half(6);
    let (w, _) = worst_case_kinetic(&sections, &DEFAULT_T_GRID, f).unwrap();
    let (a, _) = average_case_kinetic_exact(&sections, &DEFAULT_T_GRID, f).unwrap();
    assert!(w.value.abs() < 1e-8 && a.value.abs() < 1e-8);
}

#[test]
fn average_below_worst_and_sampling_agrees_with_exact() {
    let lat = build_lattice(Family::Acene, 2).unwrap();
    let spec = shipped_tiling(&Molecule::new(Family::Acene, 2)).unwrap();
    let sections = tile_sections(&lat, &spec, 2.4).unwrap();
    let f = Filling::half(lat.site_count());
    let (w, wfit) = worst_case_kinetic(&sections, &DEFAULT_T_GRID, f).unwrap();
    let (exact, efit) = average_case_kinetic_exact(&sections, &DEFAULT_T_GRID, f).unwrap();
    let (sampled, _) = average_case_kinetic(&sections, &DEFAULT_T_GRID, f, 20_000, 7).unwrap();
    assert!(w.value > 0.0 && exact.value > 0.0);
    assert!(exact.value <= w.value);
    assert!((sampled.value - exact.value).abs() < 4.0 * sampled.standard_error);
    assert!(wfit.r_squared > 0.999 && efit.r_squared > 0.999);
}

#[test]
fn half_filling_worst_case_uses_half_trace_norm() {
    // bipartite hopping has a symmetric spectrum, so at half filling each
    // spin contributes half the trace norm
    let lat = build_lattice(Family::Acene, 2).unwrap();
    let spec = shipped_tiling(&Molecule::new(Family::Acene, 2)).unwrap();
    let sections = tile_sections(&lat, &spec, 2.4).unwrap();
    let eff = effective_kinetic(&sections, 0.05).unwrap();
    let f = Filling::half(lat.site_count());
    assert!((eff.sector_norm(f) - 2.0 * eff.half_trace_norm()).abs() < 1e-9 * eff.sector_norm(f));
}

#[test]
fn shipped_tilings_are_valid_partitions() {
    let mut count = 0;
    for name in shipped_tilings() {
        let m: Molecule = name.parse().unwrap();
        let lat = m.build().unwrap();
        let spec = shipped_tiling(&m).unwrap();
        assert_eq!(spec.molecule, name);
        spec.validate(&lat).unwrap();
        count += 1;
    }
    assert_eq!(count, 15);
}

#[test]
fn acene3_tiling_gate_count() {
    let m = Molecule::new(Family::Acene, 3);
    let s = tile_sections(&m.build().unwrap(), &shipped_tiling(&m).unwrap(), 2.4).unwrap();
    assert_eq!(s.gate_count, KineticGateCount { rotations: 52, t_gates: 104 });
    assert_eq!(s.section_count(), 3);
}

#[test]
fn tiling_json_round_trip_and_errors() {
    let m = Molecule::new(Family::Acene, 1);
    let spec = shipped_tiling(&m).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(TilingSpec::from_json(&text).unwrap(), spec);
    assert!(TilingSpec::from_json("{\"molecule\": 3}").is_err());
    let other = build_lattice(Family::Acene, 2).unwrap();
    assert!(spec.validate(&other).is_err());
}

#[test]
fn bipartite_mode_spectrum_is_symmetric_and_shrinks_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // keep only even-odd couplings
    let mut blocks = random_sections(&mut rng, 7, 2);
    for a in &mut blocks {
        for i in 0..7 {
            for j in 0..7 {
                if (i + j) % 2 == 0 {
                    a[(i, j)] = 0.0;
                }
            }
        }
    }
    let sections = KineticSections::from_matrices(blocks).unwrap();
    let norms: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&t| {
            let eff = effective_kinetic(&sections, t).unwrap();
            let h = &eff.matrix - eff.matrix.adjoint();
            assert!(max_abs(&h) < 1e-12);
            let n = eff.modes.len();
            for j in 0..n {
                assert!((eff.modes[j] + eff.modes[n - 1 - j]).abs() < 1e-10);
            }
            eff.modes[0]
        })
        .collect();
    let ratio = norms[0] / norms[1];
    assert!((ratio - 4.0).abs() < 0.05, "{ratio}");

    // odd cycles break the symmetry, which the sector norm must survive
    let odd = KineticSections::from_matrices(random_sections(&mut rng, 7, 2)).unwrap();
    let eff = effective_kinetic(&odd, 0.05).unwrap();
    let f = Filling { up: 3, down: 3 };
    let top: f64 = eff.modes.iter().take(3).sum();
    let bottom: f64 = eff.modes.iter().rev().take(3).sum();
    assert!((eff.sector_norm(f) - 2.0 * top.abs().max(bottom.abs())).abs() < 1e-12);
}

#[test]
fn spin_sectors_are_independent() {
    // one spin-species computation on the doubled mode space equals the
    // per-spin computation summed
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 5;
    let blocks = random_sections(&mut rng, n, 2);
    let doubled: Vec<DMatrix<f64>> = blocks
        .iter()
        .map(|a| {
            let mut b = DMatrix::zeros(2 * n, 2 * n);
            b.view_mut((0, 0), (n, n)).copy_from(a);
            b.view_mut((n, n), (n, n)).copy_from(a);
            b
        })
        .collect();
    let single = KineticSections::from_matrices(blocks).unwrap();
    let joint = KineticSections::from_matrices(doubled).unwrap();
    let t = 0.04;
    let es = effective_kinetic(&single, t).unwrap();
    let ej = effective_kinetic(&joint, t).unwrap();
    let f = Filling { up: 3, down: 2 };
    let per_spin = es.modes.iter().take(3).sum::<f64>() + es.modes.iter().take(2).sum::<f64>();
    assert!((es.sector_norm(f) - per_spin).abs() < 1e-12);
    // the joint space mixes the two species' modes; top five joint modes
    // bound the (3, 2) split from above
    let joint_top: f64 = ej.modes.iter().take(5).sum();
    assert!(joint_top >= per_spin - 1e-12);
    assert!((ej.half_trace_norm() - 2.0 * es.half_trace_norm()).abs() < 1e-10);
}
