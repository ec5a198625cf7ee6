//! Eigenvector and time-series checkpoints under `TROTTERLAB_CACHE`.
//!
//! Layout: `<root>/<molecule>/<params>/states/<label>.{json,bin}` and
//! `<root>/<molecule>/<params>/series/<scheme>_t<t>_w<width>/<label>/`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use trotterlab::hamiltonian::PppParams;
use trotterlab::linalg::to_complex;
use trotterlab::model::Model;
use trotterlab::sector::{read_snapshot, write_snapshot, SectorSpec, Snapshot};
use trotterlab::spectral::{StateLabel, TargetState};

use crate::CliError;

pub const CACHE_ENV: &str = "TROTTERLAB_CACHE";

#[derive(Debug, Serialize, Deserialize)]
struct StateMeta {
    label: StateLabel,
    spec: SectorSpec,
    energy: f64,
    total_spin: f64,
}

pub struct StateCache {
    root: PathBuf,
}

impl StateCache {
    pub fn from_env(model: &Model, params: &PppParams) -> Option<Self> {
        let base = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty())?;
        let key = format!(
            "tau{}_u{}_alpha{}_r{}_{:?}",
            params.tau, params.u, params.alpha, params.bond_length, model.ordering
        )
        .to_lowercase();
        Some(Self { root: PathBuf::from(base).join(model.molecule.to_string()).join(key) })
    }

    pub fn series_dir(&self, scheme: &str, t: f64, label: &str, width: f64) -> PathBuf {
        self.root.join("series").join(format!("{scheme}_t{t}_w{width}")).join(label)
    }

    fn load(&self, label: StateLabel) -> Option<TargetState> {
        let dir = self.root.join("states");
        let meta: StateMeta = serde_json::from_reader(File::open(dir.join(format!("{label}.json"))).ok()?).ok()?;
        let snap = read_snapshot(BufReader::new(File::open(dir.join(format!("{label}.bin"))).ok()?)).ok()?;
        (meta.label == label && snap.spec == meta.spec).then(|| TargetState {
            label,
            spec: meta.spec,
            energy: meta.energy,
            total_spin: meta.total_spin,
            vector: snap.amplitudes.iter().map(|c| c.re).collect(),
        })
    }

    fn store(&self, st: &TargetState) -> Result<(), CliError> {
        let dir = self.root.join("states");
        std::fs::create_dir_all(&dir)?;
        let snap = Snapshot { spec: st.spec, step: 0, amplitudes: to_complex(&st.vector) };
        write_snapshot(BufWriter::new(File::create(dir.join(format!("{}.bin", st.label)))?), &snap)?;
        let meta = StateMeta { label: st.label, spec: st.spec, energy: st.energy, total_spin: st.total_spin };
        serde_json::to_writer_pretty(File::create(dir.join(format!("{}.json", st.label)))?, &meta)?;
        Ok(())
    }

    /// Cached state, or `compute` and store the result. Unreadable entries
    /// are recomputed.
    pub fn get_or_compute(
        &self,
        label: StateLabel,
        compute: impl FnOnce() -> trotterlab::Result<TargetState>,
    ) -> Result<TargetState, CliError> {
        if let Some(st) = self.load(label) {
            return Ok(st);
        }
        let st = compute()?;
        self.store(&st)?;
        Ok(st)
    }
}
