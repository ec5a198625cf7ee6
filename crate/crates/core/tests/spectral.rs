use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trotterlab::freefermion::shipped_tiling;
use trotterlab::hamiltonian::PppParams;
use trotterlab::lattice::{Family, Molecule};
use trotterlab::linalg::{cnorm, to_complex, C64};
use trotterlab::model::Model;
use trotterlab::norms::SchemeKind;
use trotterlab::sector::{propagate, LanczosOptions};
use trotterlab::spectral::*;

fn benzene() -> (Molecule, Model) {
    let mol = Molecule::new(Family::Acene, 1);
    (mol, Model::new(mol, &PppParams::default()).unwrap())
}

/// Effective eigenvalue whose eigenvector overlaps `psi` the most.
fn matched(eff: &EffectiveSpectrum, psi: &[C64]) -> (f64, f64) {
    let col = |j: usize| -> f64 {
        (0..psi.len())
            .map(|r| eff.vectors[(r, j)].conj() * psi[r])
            .sum::<C64>()
            .norm_sqr()
    };
    let j = (0..eff.energies.len()).max_by(|&a, &b| col(a).total_cmp(&col(b))).unwrap();
    (eff.energies[j], col(j))
}

#[test]
fn benzene_energy_error_correlates_with_energy() {
    let (_, m) = benzene();
    let ops = SchemeOperators::new(&m, m.half_filling(), None).unwrap();
    assert_eq!(ops.dimension(), 400);
    let s = TrotterScheme::split_operator(0.01).unwrap();
    let c = correlation_study(&s, &ops).unwrap();
    assert!((c.pearson + 0.837).abs() < 0.02, "{}", c.pearson);
    assert!(c.trace_difference.abs() < 1e-8 * c.hamiltonian_norm, "{}", c.trace_difference);
    assert_eq!(c.flagged, 0);
    assert_eq!(c.exact.len(), 400);
}

#[test]
fn trace_identity_holds_for_tile_scheme() {
    let (mol, m) = benzene();
    let tiling = shipped_tiling(&mol).unwrap();
    let ops = SchemeOperators::new(&m, m.half_filling(), Some(&tiling)).unwrap();
    for t in [0.02, 0.1] {
        let s = TrotterScheme::from_tiling(t, &tiling).unwrap();
        let c = correlation_study(&s, &ops).unwrap();
        let tol = 1e-8 * c.hamiltonian_norm * ops.dimension() as f64;
        assert!(c.trace_difference.abs() < tol, "t {t}: {}", c.trace_difference);
        assert!(c.pearson < 0.0);
    }
}

#[test]
fn dense_step_matches_sector_propagation() {
    let (mol, m) = benzene();
    let tiling = shipped_tiling(&mol).unwrap();
    let ops = SchemeOperators::new(&m, m.half_filling(), Some(&tiling)).unwrap().with_shift(-6.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut psi: Vec<C64> = (0..ops.dimension())
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = cnorm(&psi);
    psi.iter_mut().for_each(|x| *x /= n);
    for s in [
        TrotterScheme::split_operator(0.07).unwrap(),
        TrotterScheme::from_tiling(0.07, &tiling).unwrap(),
    ] {
        let u = step_unitary_dense(&s, &ops).unwrap();
        let dense = &u * nalgebra::DVector::from_column_slice(&psi);
        let mut v = psi.clone();
        propagate(&ops.factors(&s).unwrap(), &mut v).unwrap();
        let err = v.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{:?}: {err}", s.kind);
        let unitary = (u.adjoint() * &u - DMatrix::<C64>::identity(400, 400)).camax();
        assert!(unitary < 1e-12);
    }
}

#[test]
fn tile_scheme_with_one_section_is_split_operator() {
    let (_, m) = benzene();
    let one = trotterlab::freefermion::TilingSpec::single_section(&m.lattice);
    let ops = SchemeOperators::new(&m, m.half_filling(), Some(&one)).unwrap();
    let so = step_unitary_dense(&TrotterScheme::split_operator(0.1).unwrap(), &ops).unwrap();
    let tile = step_unitary_dense(&TrotterScheme::from_tiling(0.1, &one).unwrap(), &ops).unwrap();
    assert!((so - tile).camax() < 1e-12);
}

#[test]
fn shift_moves_nothing_but_the_reference() {
    let (_, m) = benzene();
    let ops = SchemeOperators::new(&m, m.half_filling(), None).unwrap();
    let t = 0.1;
    let s = TrotterScheme::split_operator(t).unwrap();
    let c = ops.symmetrizing_shift().unwrap();
    assert!((c + 6.7477).abs() < 1e-3, "{c}");
    let a = effective_hamiltonian_dense(&s, &ops.clone().with_shift(c).unwrap()).unwrap();
    let b = effective_hamiltonian_dense(&s, &ops.clone().with_shift(c + 1.0).unwrap()).unwrap();
    for (x, y) in a.energies.iter().zip(&b.energies) {
        assert!(((x - y) / (t * t)).abs() < 1e-10, "{x} {y}");
    }
    // the raw generator moves by exactly the shift
    assert!(((a.energies[0] + a.shift) - (b.energies[0] + b.shift) + 1.0).abs() < 1e-11);
}

#[test]
fn filter_reads_the_dense_effective_energy() {
    let (_, m) = benzene();
    let opts = LanczosOptions::default();
    let filter = FilterSpec::gaussian(FilterSpec::DEFAULT_WIDTH).unwrap();
    for label in [StateLabel::S0, StateLabel::T1] {
        let st = find_state(&m, label, &opts).unwrap();
        let ops = SchemeOperators::new(&m, st.spec, None).unwrap();
        let psi = to_complex(&st.vector);
        for t in [0.01, 0.05] {
            let s = TrotterScheme::split_operator(t).unwrap();
            let (est, series) = effective_energy(&s, &ops, &st, &filter, None).unwrap();
            assert_eq!(series.values.len(), filter.order + 1);
            let (dense, weight) = matched(&effective_hamiltonian_dense(&s, &ops).unwrap(), &psi);
            assert!(weight > 0.99);
            assert!((est.energy - dense).abs() < 1e-6, "{label} t {t}: {} vs {dense}", est.energy);
        }
    }
}

#[test]
fn low_lying_effective_energies_lie_above_exact() {
    let (_, m) = benzene();
    let opts = LanczosOptions::default();
    let mut violations = Vec::new();
    for label in [StateLabel::S0, StateLabel::S1, StateLabel::T1] {
        let st = find_state(&m, label, &opts).unwrap();
        let ops = SchemeOperators::new(&m, st.spec, None).unwrap();
        let psi = to_complex(&st.vector);
        for t in [0.01, 0.05, 0.1, 0.15] {
            let s = TrotterScheme::split_operator(t).unwrap();
            let (e, _) = matched(&effective_hamiltonian_dense(&s, &ops).unwrap(), &psi);
            if e < st.energy {
                violations.push((label, t, e - st.energy));
            }
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn triplet_from_raised_sector_equals_singlet_sector_triplet() {
    let (_, m) = benzene();
    let opts = LanczosOptions::default();
    let t1 = find_state(&m, StateLabel::T1, &opts).unwrap();
    assert!((t1.total_spin - 2.0).abs() < 1e-8);
    let s0 = find_state(&m, StateLabel::S0, &opts).unwrap();
    let s1 = find_state(&m, StateLabel::S1, &opts).unwrap();
    assert!(s0.total_spin.abs() < 1e-8 && s1.total_spin.abs() < 1e-8);
    assert!(s1.energy > s0.energy);
    // lowest S=1 level inside the S_z = 0 sector
    let ops = SchemeOperators::new(&m, m.half_filling(), None).unwrap();
    let (e, v) = ops.exact_spectrum_dense().unwrap();
    let basis = m.basis(m.half_filling()).unwrap();
    let triplet = (0..e.len())
        .find(|&k| {
            let col: Vec<f64> = v.column(k).iter().copied().collect();
            let s2 = trotterlab::sector::total_spin_expectation(&basis, &to_complex(&col)).unwrap();
            (s2 - 2.0).abs() < 1e-6
        })
        .unwrap();
    assert!((e[triplet] - t1.energy).abs() < 1e-9);
}

#[test]
fn gap_error_is_far_below_energy_error() {
    let (_, m) = benzene();
    let opts = LanczosOptions::default();
    let s0 = find_state(&m, StateLabel::S0, &opts).unwrap();
    let t1 = find_state(&m, StateLabel::T1, &opts).unwrap();
    let t = DEFAULT_TIME_STEP;
    let s = TrotterScheme::split_operator(t).unwrap();
    let mut entries = Vec::new();
    for st in [&s0, &t1] {
        let ops = SchemeOperators::new(&m, st.spec, None).unwrap();
        let (e, _) = matched(&effective_hamiltonian_dense(&s, &ops).unwrap(), &to_complex(&st.vector));
        entries.push((st.label.to_string(), st.energy, e));
    }
    let r = error_constants(&entries, t, &[(0, 1)]).unwrap();
    assert!(r.gaps[0].constant * 10.0 < r.states[0].constant, "{r:?}");
}

#[test]
fn sweep_errors_grow_quadratically() {
    let (_, m) = benzene();
    let filter = FilterSpec::gaussian(FilterSpec::DEFAULT_WIDTH).unwrap();
    let ts = [0.01, 0.02, 0.04, 0.08];
    let sweep = gap_sweep(&m, None, &[StateLabel::S0, StateLabel::T1], &ts, CHEMICAL_ACCURACY, &filter).unwrap();
    assert_eq!(sweep.scheme, SchemeKind::SplitOperator);
    assert_eq!(sweep.rows.len(), 4);
    let errs: Vec<f64> = sweep
        .rows
        .iter()
        .map(|r| {
            let rep = r.report.as_ref().unwrap();
            (rep.states[0].effective - rep.states[0].exact).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] > w[0]));
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
    assert!(sweep.rows[0].energies_within_budget.iter().all(|&b| b));
    assert!(sweep.rows.iter().all(|r| r.gaps_within_budget == vec![true]));
}

#[test]
fn sweep_rejects_bad_time_lists() {
    let (_, m) = benzene();
    let filter = FilterSpec::gaussian(0.05).unwrap();
    assert!(gap_sweep(&m, None, &[StateLabel::S0], &[0.1, 0.05], 0.04, &filter).is_err());
    assert!(gap_sweep(&m, None, &[StateLabel::S0], &[-0.1], 0.04, &filter).is_err());
    assert!(gap_sweep(&m, None, &[], &[0.1], 0.04, &filter).is_err());
}

#[test]
fn time_series_resumes_from_checkpoint() {
    let (_, m) = benzene();
    let st = find_state(&m, StateLabel::S0, &LanczosOptions::default()).unwrap();
    let ops = SchemeOperators::new(&m, st.spec, None).unwrap();
    let s = TrotterScheme::split_operator(0.05).unwrap();
    let psi = to_complex(&st.vector);
    let dir = std::env::temp_dir().join(format!("trotterlab-cp-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let cp = Checkpoint { dir: dir.clone(), every: 4 };
    let first = compute_time_series(&s, &ops, &psi, 10, "S0", Some(&cp)).unwrap();
    let resumed = compute_time_series(&s, &ops, &psi, 25, "S0", Some(&cp)).unwrap();
    let direct = compute_time_series(&s, &ops, &psi, 25, "S0", None).unwrap();
    assert_eq!(&resumed.values[..=10], &first.values[..]);
    for (a, b) in resumed.values.iter().zip(&direct.values) {
        assert!((a - b).norm() < 1e-13);
    }
    let csv = std::fs::read(dir.join("series.csv")).unwrap();
    assert_eq!(read_series_csv(csv.as_slice()).unwrap().len(), 26);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn shifted_operators_give_the_same_series() {
    let (_, m) = benzene();
    let st = find_state(&m, StateLabel::S0, &LanczosOptions::default()).unwrap();
    let ops = SchemeOperators::new(&m, st.spec, None).unwrap();
    let s = TrotterScheme::split_operator(0.05).unwrap();
    let psi = to_complex(&st.vector);
    let a = compute_time_series(&s, &ops, &psi, 6, "S0", None).unwrap();
    let b = compute_time_series(&s, &ops.clone().with_shift(3.3).unwrap(), &psi, 6, "S0", None).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).norm() < 1e-11);
    }
}
