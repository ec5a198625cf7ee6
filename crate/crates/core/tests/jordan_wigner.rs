use nalgebra::DMatrix;
use proptest::prelude::*;
use trotterlab::hamiltonian::{build_ppp, number_operator, PppParams, Spin};
use trotterlab::lattice::{Family, Molecule};
use trotterlab::linalg::C64;
use trotterlab::pauli::{apply_to_basis_state, commutator, jordan_wigner_ordered, orbital_index, Letter, PauliString, PauliSum, SpinOrdering};

fn dense(op: &PauliSum) -> DMatrix<C64> {
    let dim = 1usize << op.qubit_count();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for b in 0..dim {
        for (r, c) in apply_to_basis_state(op, b as u64).unwrap() {
            m[(r as usize, b)] += c;
        }
    }
    m
}

/// `a+_p a_q |b>` with the sign of the occupied orbitals in between.
fn hop(b: u64, p: usize, q: usize) -> Option<(u64, f64)> {
    if b >> q & 1 == 0 {
        return None;
    }
    let mid = b & !(1 << q);
    if mid >> p & 1 == 1 {
        return None;
    }
    let below = |x: u64, k: usize| (x & ((1u64 << k) - 1)).count_ones();
    let sign = below(b, q) + below(mid, p);
    Some((mid | 1 << p, if sign % 2 == 0 { 1.0 } else { -1.0 }))
}

/// The PPP Hamiltonian assembled directly in the occupation basis.
fn fock_ppp(mol: Molecule, ordering: SpinOrdering) -> DMatrix<f64> {
    let ham = build_ppp(&mol.build().unwrap(), &PppParams::default()).unwrap();
    let n = ham.site_count;
    let dim = 1usize << (2 * n);
    let orb = |s, spin| orbital_index(s, spin, n, ordering);
    let occ = |b: u64, s, spin| (b >> orb(s, spin) & 1) as f64;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim as u64 {
        for t in &ham.kinetic {
            let (p, q) = (orb(t.i, t.spin), orb(t.j, t.spin));
            for (x, y) in [(p, q), (q, p)] {
                if let Some((c, s)) = hop(b, x, y) {
                    h[(c as usize, b as usize)] += t.coeff * s;
                }
            }
        }
        let mut d = 0.0;
        for (i, &u) in ham.onsite.iter().enumerate() {
            d += u * occ(b, i, Spin::Up) * occ(b, i, Spin::Down);
        }
        for pt in &ham.pairwise {
            let ni = occ(b, pt.i, Spin::Up) + occ(b, pt.i, Spin::Down);
            let nj = occ(b, pt.j, Spin::Up) + occ(b, pt.j, Spin::Down);
            d += pt.v * (ni - 1.0) * (nj - 1.0);
        }
        h[(b as usize, b as usize)] += d;
    }
    h
}

#[test]
fn benzene_pauli_form_equals_fock_construction() {
    let mol = Molecule::new(Family::Acene, 1);
    let ham = build_ppp(&mol.build().unwrap(), &PppParams::default()).unwrap();
    for ordering in [SpinOrdering::Interleaved, SpinOrdering::Blocked] {
        let (t, v) = jordan_wigner_ordered(&ham, ordering).unwrap();
        let h = dense(&t.add(&v).unwrap());
        let oracle = fock_ppp(mol, ordering);
        let err = (0..h.len()).map(|k| (h[k] - C64::new(oracle[k], 0.0)).norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{ordering:?}: {err}");
    }
}

#[test]
fn kinetic_and_potential_conserve_particle_number() {
    let mol = Molecule::new(Family::Acene, 2);
    let ham = build_ppp(&mol.build().unwrap(), &PppParams::default()).unwrap();
    let (t, v) = jordan_wigner_ordered(&ham, SpinOrdering::Interleaved).unwrap();
    let n = number_operator(t.qubit_count()).unwrap();
    assert!(commutator(&t, &n).unwrap().pruned().is_empty());
    assert!(commutator(&v, &n).unwrap().pruned().is_empty());
    assert!(commutator(&v, &v).unwrap().is_empty());
}

fn letter(k: u8) -> Letter {
    [Letter::I, Letter::X, Letter::Y, Letter::Z][k as usize]
}

fn sum_strategy(q: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((prop::collection::vec(0u8..4, q), -2.0f64..2.0), 1..6).prop_map(move |terms| {
        let mut s = PauliSum::new(q).unwrap();
        for (letters, c) in terms {
            let l: Vec<(usize, Letter)> = letters.iter().enumerate().map(|(i, &k)| (i, letter(k))).collect();
            s.add_term(PauliString::from_letters(&l), c);
        }
        s
    })
}

fn close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> bool {
    (a - b).iter().all(|x| x.norm() < 1e-10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commutator_matches_dense(a in sum_strategy(3), b in sum_strategy(3)) {
        let d = dense(&commutator(&a, &b).unwrap());
        let (da, db) = (dense(&a), dense(&b));
        // [a, b] = i D
        let lhs = &da * &db - &db * &da;
        prop_assert!(close(&lhs, &(d * C64::new(0.0, 1.0))));
    }

    #[test]
    fn commutator_is_bilinear_and_satisfies_jacobi(a in sum_strategy(3), b in sum_strategy(3), c in sum_strategy(3), s in -3.0f64..3.0) {
        let left = commutator(&a.add(&b.clone().scaled(s)).unwrap(), &c).unwrap();
        let right = commutator(&a, &c).unwrap().add(&commutator(&b, &c).unwrap().scaled(s)).unwrap();
        prop_assert!(close(&dense(&left), &dense(&right)));
        let j = commutator(&a, &commutator(&b, &c).unwrap()).unwrap()
            .add(&commutator(&b, &commutator(&c, &a).unwrap()).unwrap()).unwrap()
            .add(&commutator(&c, &commutator(&a, &b).unwrap()).unwrap()).unwrap();
        prop_assert!(dense(&j).iter().all(|x| x.norm() < 1e-9));
        let anti = commutator(&b, &a).unwrap().scaled(-1.0);
        prop_assert!(close(&dense(&commutator(&a, &b).unwrap()), &dense(&anti)));
    }
}
