//! One function per subcommand; each returns the `result` part of the report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use trotterlab::freefermion::{
    average_case_kinetic, average_case_kinetic_exact, shipped_tiling, tile_sections, worst_case_kinetic, Filling,
    TilingSpec,
};
use trotterlab::model::Model;
use trotterlab::norms::{
    average_case_constant, dense_spectral_norm, frobenius_exact, frobenius_sampled, nested_commutators,
    spectral_norm_bound, worst_case_constant, NormEstimate,
};
use trotterlab::resources::{hwp_estimate, total_cost, CostMode, CostParams, PerStep};
use trotterlab::sector::{binomial, LanczosOptions, SectorSpec};
use trotterlab::spectral::{
    correlation_study, effective_energy, error_constants, find_state, load_tiling, write_series_csv, Checkpoint,
    FilterSpec, SchemeOperators, TrotterScheme,
};

use crate::cache::StateCache;
use crate::config::{CostChoice, NormChoice, RunConfig, SchemeChoice};
use crate::CliError;

/// Sector dimension above which runs need the slow opt-in.
pub const DESK_DIMENSION: u64 = 2_000_000;

/// Sectors above this are never enumerated.
pub const MAX_DIMENSION: u64 = 1 << 31;

/// Largest sector handled by dense diagonalization.
pub const DENSE_DIMENSION: u64 = 4_000;

/// Checkpoint interval of cached time series, in steps.
const CHECKPOINT_EVERY: usize = 20;

pub fn model(cfg: &RunConfig) -> Result<Model, CliError> {
    Ok(Model::with_ordering(cfg.molecule()?, &cfg.params, cfg.sector.ordering)?)
}

pub fn dimension(spec: &SectorSpec) -> Result<u64, CliError> {
    let (up, dn) = spec.spin_counts()?;
    Ok(binomial(spec.n_sites, up).saturating_mul(binomial(spec.n_sites, dn)))
}

fn require_desk(cfg: &RunConfig, spec: &SectorSpec, what: &str) -> Result<(), CliError> {
    let d = dimension(spec)?;
    if d > MAX_DIMENSION {
        return Err(CliError::config("molecule", format!("{what}: sector dimension {d} exceeds {MAX_DIMENSION}")));
    }
    if d > DESK_DIMENSION && !cfg.slow {
        return Err(CliError::config("slow", format!("{what} on a sector of dimension {d} needs --slow")));
    }
    Ok(())
}

/// Tiling from the configured file, else the shipped one.
pub fn tiling(cfg: &RunConfig, model: &Model) -> Result<TilingSpec, CliError> {
    match &cfg.scheme.tiling {
        Some(path) => Ok(load_tiling(path, &model.lattice)?),
        None => shipped_tiling(&model.molecule)
            .ok_or_else(|| CliError::config("scheme.tiling", format!("no shipped tiling for {}", model.molecule))),
    }
}

pub fn per_step(model: &Model, tiling: &TilingSpec, tau: f64) -> Result<PerStep, CliError> {
    let kin = tile_sections(&model.lattice, tiling, tau)?.gate_count;
    Ok(PerStep::from_parts(model.shifted_potential()?.term_count(), kin))
}

fn csv_writer(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn lattice(cfg: &RunConfig) -> Result<Value, CliError> {
    let mol = cfg.molecule()?;
    let lat = mol.build()?;
    if let Some(dir) = &cfg.output.csv_dir {
        let mut w = csv_writer(dir, &format!("{mol}_sites.csv"))?;
        writeln!(w, "site,x,y,degree")?;
        for (i, s) in lat.sites.iter().enumerate() {
            writeln!(w, "{i},{},{},{}", s[0], s[1], lat.degree(i))?;
        }
        w.flush()?;
    }
    Ok(json!({
        "molecule": mol.to_string(),
        "sites": lat.site_count(),
        "bonds": lat.bonds.len(),
        "connected": lat.is_connected(),
        "mirror_symmetric": lat.mirror_permutation().is_some(),
        "coordinates": lat.sites,
        "bond_list": lat.bonds,
    }))
}

pub fn hamiltonian(cfg: &RunConfig, dump: bool) -> Result<Value, CliError> {
    let m = model(cfg)?;
    let sp = m.shifted_potential()?;
    if dump {
        let dir = cfg.output.csv_dir.as_ref().ok_or_else(|| CliError::config("output.csv_dir", "--dump-terms needs a CSV directory"))?;
        let mut w = csv_writer(dir, &format!("{}_terms.csv", m.molecule))?;
        writeln!(w, "part,string,coefficient")?;
        for (part, op) in [("T", &m.kinetic), ("V", &m.potential), ("V_shifted", &sp.operator)] {
            for (p, c) in op.iter() {
                writeln!(w, "{part},{p},{c:.17e}")?;
            }
        }
        w.flush()?;
        for (part, op) in [("T", &m.kinetic), ("V", &m.potential), ("V_shifted", &sp.operator)] {
            std::fs::write(dir.join(format!("{}_{part}.pauli", m.molecule)), op.to_text())?;
        }
    }
    Ok(json!({
        "molecule": m.molecule.to_string(),
        "sites": m.n_sites(),
        "qubits": 2 * m.n_sites(),
        "kinetic_terms": m.kinetic.term_count(),
        "potential_terms": m.potential.term_count(),
        "shifted_potential_terms": sp.term_count(),
        "shift": sp.shift,
        "shifted_offset": sp.offset,
        "kinetic_one_norm": m.kinetic.one_norm(),
        "potential_one_norm": m.potential.one_norm(),
        "shifted_potential_one_norm": sp.operator.one_norm(),
    }))
}

pub fn norms(cfg: &RunConfig) -> Result<Value, CliError> {
    let m = model(cfg)?;
    let spec = cfg.sector_spec(m.n_sites());
    let sp = m.shifted_potential()?;
    let (vtv, vtt) = nested_commutators(&m.kinetic, &sp.operator)?;
    let heavy = cfg.analysis.norms.iter().any(|k| *k != NormChoice::Frobenius);
    if heavy {
        require_desk(cfg, &spec, "spectral or exhaustive norms")?;
    }
    let dim = dimension(&spec)?;
    if dim > MAX_DIMENSION {
        return Err(CliError::config("molecule", format!("sector dimension {dim} exceeds {MAX_DIMENSION}")));
    }
    if dim > DESK_DIMENSION * 8 && !cfg.slow {
        return Err(CliError::config("slow", format!("enumerating a sector of dimension {dim} needs --slow")));
    }
    let basis = m.basis(spec)?;
    let seed = cfg.seeds.norms;
    let mut out = serde_json::Map::new();
    let mut worst: Option<(NormEstimate, NormEstimate)> = None;
    let mut average: Option<(NormEstimate, NormEstimate)> = None;
    for kind in &cfg.analysis.norms {
        let (a, b) = match kind {
            NormChoice::Frobenius => (
                frobenius_sampled(&vtv, &basis, cfg.analysis.samples, seed)?,
                frobenius_sampled(&vtt, &basis, cfg.analysis.samples, seed.wrapping_add(1))?,
            ),
            NormChoice::FrobeniusExact => (frobenius_exact(&vtv, &basis)?, frobenius_exact(&vtt, &basis)?),
            NormChoice::Spectral => (spectral_norm_bound(&vtv, &basis)?, spectral_norm_bound(&vtt, &basis)?),
            NormChoice::Dense => {
                if dim > DENSE_DIMENSION {
                    return Err(CliError::config("analysis.norms", format!("dense norms limited to dimension {DENSE_DIMENSION}, got {dim}")));
                }
                (dense_spectral_norm(&vtv, &basis)?, dense_spectral_norm(&vtt, &basis)?)
            }
        };
        match kind {
            NormChoice::Frobenius | NormChoice::FrobeniusExact => average = Some((a.clone(), b.clone())),
            NormChoice::Spectral | NormChoice::Dense => worst = Some((a.clone(), b.clone())),
        }
        let key = serde_json::to_value(kind)?.as_str().unwrap_or_default().to_string();
        out.insert(key, json!({ "vtv": a, "vtt": b }));
    }
    Ok(json!({
        "molecule": m.molecule.to_string(),
        "sector": spec,
        "dimension": dim,
        "norms": out,
        "worst_case_constant": worst.map(|(a, b)| worst_case_constant(&a, &b)),
        "average_case_constant": average.map(|(a, b)| average_case_constant(&a, &b)),
    }))
}

pub fn freefermion(cfg: &RunConfig) -> Result<Value, CliError> {
    let m = model(cfg)?;
    let tiling = tiling(cfg, &m)?;
    let sections = tile_sections(&m.lattice, &tiling, cfg.params.tau)?;
    let spec = cfg.sector_spec(m.n_sites());
    let (up, down) = spec.spin_counts()?;
    let filling = Filling { up, down };
    let grid = &cfg.analysis.t_grid;
    let (worst, worst_fit) = worst_case_kinetic(&sections, grid, filling)?;
    let (average, average_fit) = if cfg.analysis.exact_kinetic {
        average_case_kinetic_exact(&sections, grid, filling)?
    } else {
        average_case_kinetic(&sections, grid, filling, cfg.analysis.samples, cfg.seeds.kinetic)?
    };
    Ok(json!({
        "molecule": m.molecule.to_string(),
        "tiling": tiling.molecule,
        "sections": sections.names,
        "gate_count": sections.gate_count,
        "filling": filling,
        "worst_case": { "constant": worst, "fit": worst_fit },
        "average_case": {
            "constant": average,
            "fit": average_fit,
            "rng_seed": (!cfg.analysis.exact_kinetic).then_some(cfg.seeds.kinetic),
        },
    }))
}

pub fn spectral(cfg: &RunConfig) -> Result<Value, CliError> {
    let m = model(cfg)?;
    let tiling = match cfg.scheme.kind {
        SchemeChoice::Tile => Some(tiling(cfg, &m)?),
        SchemeChoice::SplitOperator => None,
    };
    let labels = cfg.states()?;
    require_desk(cfg, &cfg.sector_spec(m.n_sites()), "eigenstate searches")?;
    let filter = FilterSpec::gaussian(cfg.analysis.filter_width)?;
    let cache = StateCache::from_env(&m, &cfg.params);
    let opts = LanczosOptions::default();
    let tag = match cfg.scheme.kind {
        SchemeChoice::Tile => "tile",
        SchemeChoice::SplitOperator => "so",
    };

    let mut states = Vec::new();
    let mut per_state = Vec::new();
    for &label in &labels {
        let st = match &cache {
            Some(c) => c.get_or_compute(label, || find_state(&m, label, &opts))?,
            None => find_state(&m, label, &opts)?,
        };
        let ops = SchemeOperators::new(&m, st.spec, tiling.as_ref())?;
        let shift = ops.symmetrizing_shift()?;
        let ops = ops.with_shift(shift)?;
        let mut effective = Vec::new();
        for &t in &cfg.scheme.time_steps {
            let scheme = match &tiling {
                Some(ti) => TrotterScheme::from_tiling(t, ti)?,
                None => TrotterScheme::split_operator(t)?,
            };
            let checkpoint = cache.as_ref().map(|c| Checkpoint {
                dir: c.series_dir(tag, t, &label.to_string(), filter.width),
                every: CHECKPOINT_EVERY,
            });
            let (est, series) = effective_energy(&scheme, &ops, &st, &filter, checkpoint.as_ref())?;
            if let Some(dir) = &cfg.output.csv_dir {
                let mut w = csv_writer(dir, &format!("{}_{tag}_{label}_t{t}.csv", m.molecule))?;
                write_series_csv(&mut w, &series)?;
                w.flush()?;
            }
            effective.push(est);
        }
        per_state.push(json!({
            "label": label,
            "sector": st.spec,
            "exact": st.energy,
            "total_spin": st.total_spin,
            "shift": shift,
        }));
        states.push((st, effective));
    }

    let gap_pairs: Vec<(usize, usize)> = (1..states.len()).map(|k| (0, k)).collect();
    let budget = cfg.analysis.epsilon / 3.0;
    let mut rows = Vec::new();
    for (k, &t) in cfg.scheme.time_steps.iter().enumerate() {
        let entries: Vec<(String, f64, f64)> =
            states.iter().map(|(st, eff)| (st.label.to_string(), st.energy, eff[k].energy)).collect();
        let report = error_constants(&entries, t, &gap_pairs)?;
        let gaps_ok: Vec<bool> = report.gaps.iter().map(|g| (g.effective - g.exact).abs() < budget).collect();
        let energies_ok: Vec<bool> = report.states.iter().map(|s| (s.effective - s.exact).abs() < budget).collect();
        let weights: Vec<f64> = states.iter().map(|(_, eff)| eff[k].pole_weight).collect();
        rows.push(json!({
            "t": t,
            "report": report,
            "pole_weights": weights,
            "gaps_within_budget": gaps_ok,
            "energies_within_budget": energies_ok,
        }));
    }

    let correlation = if cfg.analysis.correlation {
        let spec = cfg.sector_spec(m.n_sites());
        let d = dimension(&spec)?;
        if d > DENSE_DIMENSION {
            return Err(CliError::config("analysis.correlation", format!("dense study limited to dimension {DENSE_DIMENSION}, got {d}")));
        }
        let ops = SchemeOperators::new(&m, spec, tiling.as_ref())?;
        let t = cfg.scheme.time_steps[0];
        let scheme = match &tiling {
            Some(ti) => TrotterScheme::from_tiling(t, ti)?,
            None => TrotterScheme::split_operator(t)?,
        };
        let study = correlation_study(&scheme, &ops)?;
        if let Some(dir) = &cfg.output.csv_dir {
            write_correlation_csv(dir, &format!("{}_{tag}_correlation.csv", m.molecule), &study)?;
        }
        Some(study)
    } else {
        None
    };

    Ok(json!({
        "molecule": m.molecule.to_string(),
        "scheme": tag,
        "filter": { "width": filter.width, "order": filter.order },
        "epsilon": cfg.analysis.epsilon,
        "budget": budget,
        "states": per_state,
        "rows": rows,
        "correlation": correlation,
    }))
}

pub fn write_correlation_csv(dir: &Path, name: &str, study: &trotterlab::spectral::CorrelationStudy) -> Result<PathBuf, CliError> {
    let mut w = csv_writer(dir, name)?;
    writeln!(w, "exact,effective,signed_constant,overlap")?;
    for k in 0..study.exact.len() {
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{:.6}",
            study.exact[k], study.effective[k], study.signed_constants[k], study.overlaps[k]
        )?;
    }
    w.flush()?;
    Ok(dir.join(name))
}

/// Cost parameters resolved from the config; also reports where `g` came from.
pub fn cost_params(cfg: &RunConfig, ps: PerStep, n_sites: usize) -> (CostParams, Value) {
    let a = &cfg.analysis;
    let (mode, source) = match a.cost_mode {
        CostChoice::FixedTimestep => (CostMode::FixedTimestep { t: a.gap_time_step }, json!("gap_time_step")),
        CostChoice::FixedError => match (a.g, a.power_law) {
            (Some(g), _) => (CostMode::FixedError { g }, json!("g")),
            (None, Some(p)) => {
                let g = p.prefactor * (n_sites as f64).powf(p.exponent);
                (CostMode::FixedError { g }, json!({ "power_law": p, "n_sites": n_sites }))
            }
            // rejected by validation
            (None, None) => (CostMode::FixedError { g: f64::NAN }, Value::Null),
        },
    };
    let mut p = CostParams::new(mode, ps, n_sites);
    p.epsilon = a.epsilon;
    p.x = a.x;
    p.gap = a.gap;
    (p, source)
}

pub fn resources(cfg: &RunConfig) -> Result<Value, CliError> {
    let m = model(cfg)?;
    let tiling = tiling(cfg, &m)?;
    let ps = per_step(&m, &tiling, cfg.params.tau)?;
    let (params, source) = cost_params(cfg, ps, m.n_sites());
    let base = total_cost(&params)?;
    let hwp = if cfg.analysis.hwp {
        Some(hwp_estimate(&m.shifted_potential()?.operator, &tiling, &base)?)
    } else {
        None
    };
    Ok(json!({
        "molecule": m.molecule.to_string(),
        "per_step": ps,
        "mode_source": source,
        "standard": base,
        "hwp": hwp,
    }))
}
