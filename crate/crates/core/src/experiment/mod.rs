//! Disorder-averaged estimation of observables as a function of site
//! separation, decay fits, regime presets and result files.

mod fit;
mod persist;
mod preset;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use fit::{fit_exponential_decay, fit_exponential_decay_jackknife, fit_rows, DecayFit};
pub use persist::{read_table_csv, write_table_csv, Sidecar, TABLE_HEADER};
pub use preset::{regime_preset, Preset, PRESET_NAMES};

use crate::dynamics::{pq_commutator_sup, weyl_commutator_sup, Entry, WeylSymbol};
use crate::error::{Error, Result};
use crate::green::{check_resamples, green_column, SpectralParameterZ};
use crate::model::{
    assemble_h, resample_params, sample_params, Boundary, DisorderSpec, Lattice, ModelParams,
};
use crate::spectral::{correlator_q, diagonalize_with, EnergyWindow, SpectralOptions};
use crate::states::{pq_correlations_sup, static_correlation, ThermalSpec};
use crate::stats::{jackknife_mean, map_indexed};

/// Lattice and parameter distribution: constant mass and coupling, spring
/// constants i.i.d. uniform on `[k_low, k_low + width]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub half_width: usize,
    pub boundary: Boundary,
    pub mass: f64,
    pub coupling: f64,
    pub k_low: f64,
    /// Disorder width `W`; 0 gives the deterministic model `k ≡ k_low`.
    #[serde(alias = "W")]
    pub width: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 1,
            half_width: 10,
            boundary: Boundary::Open,
            mass: 0.5,
            coupling: 1.0,
            k_low: 0.0,
            width: 8.0,
        }
    }
}

impl ModelConfig {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.dim, self.half_width, self.boundary)
    }

    pub fn disorder(&self, seed: u64) -> DisorderSpec {
        DisorderSpec {
            k_low: self.k_low,
            k_width: self.width,
            mass: self.mass,
            coupling: self.coupling,
            seed,
        }
    }
}

/// Which quantity is estimated at each site pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservableKind {
    /// `Q_α(x, y)` restricted to an optional energy window.
    Correlator { alpha: f64, window: Option<(f64, f64)> },
    /// `sup_t ||[τ_t(W(a δ_x)), W(b δ_y)]||`.
    WeylCommutatorSup { f: Complex64, g: Complex64 },
    /// `sup_t |A_{x,y}(t)|` for one entry.
    PqCommutatorSup { entry: Entry },
    /// `sup_t |⟨τ_t(a_x) b_y⟩|` in the ground state.
    GsPqSup { entry: Entry },
    ThermalPqSup { entry: Entry, beta: f64 },
    /// `|⟨a_x b_y⟩|` in the ground state.
    StaticGs { entry: Entry },
    StaticThermal { entry: Entry, beta: f64 },
    /// `|G(x, y; E + iε)|^s`.
    GreenMoment { s: f64, z: SpectralParameterZ },
}

impl ObservableKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableKind::Correlator { .. } => "correlator",
            ObservableKind::WeylCommutatorSup { .. } => "weyl_commutator_sup",
            ObservableKind::PqCommutatorSup { .. } => "pq_commutator_sup",
            ObservableKind::GsPqSup { .. } => "gs_pq_sup",
            ObservableKind::ThermalPqSup { .. } => "thermal_pq_sup",
            ObservableKind::StaticGs { .. } => "static_gs",
            ObservableKind::StaticThermal { .. } => "static_thermal",
            ObservableKind::GreenMoment { .. } => "green_moment",
        }
    }

    pub fn entry(&self) -> Option<Entry> {
        match *self {
            ObservableKind::PqCommutatorSup { entry }
            | ObservableKind::GsPqSup { entry }
            | ObservableKind::ThermalPqSup { entry, .. }
            | ObservableKind::StaticGs { entry }
            | ObservableKind::StaticThermal { entry, .. } => Some(entry),
            _ => None,
        }
    }
}

/// An observable together with the exponent `r` applied to each
/// per-realization value before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSpec {
    pub kind: ObservableKind,
    pub r: f64,
}

impl ObservableSpec {
    pub fn new(kind: ObservableKind, r: f64) -> Result<Self> {
        let spec = ObservableSpec { kind, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::Config(format!("exponent r must lie in (0, 1], got {}", self.r)));
        }
        match self.kind {
            ObservableKind::Correlator { alpha, window } => {
                if !alpha.is_finite() {
                    return Err(Error::Config(format!("alpha must be finite, got {alpha}")));
                }
                if let Some((a, b)) = window {
                    if a.is_nan() || b.is_nan() || a > b {
                        return Err(Error::Config(format!("empty energy window [{a}, {b}]")));
                    }
                }
            }
            ObservableKind::ThermalPqSup { beta, .. } | ObservableKind::StaticThermal { beta, .. } => {
                ThermalSpec::new(beta)?;
            }
            ObservableKind::GreenMoment { s, z } => {
                if !(s > 0.0 && s < 1.0) {
                    return Err(Error::Config(format!("moment exponent s must lie in (0, 1), got {s}")));
                }
                if !(z.energy.is_finite() && z.epsilon.is_finite()) {
                    return Err(Error::Config("spectral parameter must be finite".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Short name used in file names, e.g. `thermal_pq_sup_qq`.
    pub fn label(&self) -> String {
        match self.kind.entry() {
            Some(e) => format!("{}_{}", self.kind.name(), e.as_str()),
            None => self.kind.name().to_string(),
        }
    }
}

/// Which site pairs enter the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairPolicy {
    /// `x` fixed at the box centre, `y` along the coordinate axes.
    #[default]
    Axis,
    /// Every unordered pair `{x, y}` including `x = y`.
    All,
}

impl PairPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            PairPolicy::Axis => "axis",
            PairPolicy::All => "all",
        }
    }

    /// Pairs grouped by separation, in increasing separation order.
    pub fn pairs(self, lattice: &Lattice) -> BTreeMap<usize, Vec<(usize, usize)>> {
        let mut out: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        match self {
            PairPolicy::Axis => {
                let c = lattice.center();
                for (sep, y) in lattice.axis_sites() {
                    out.entry(sep).or_default().push((c, y));
                }
            }
            PairPolicy::All => {
                let n = lattice.num_sites();
                for x in 0..n {
                    for y in x..n {
                        out.entry(lattice.distance(x, y)).or_default().push((x, y));
                    }
                }
            }
        }
        out
    }
}

/// How a table is produced and where it goes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Execution {
    pub realizations: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub pairs: PairPolicy,
    pub ctol: f64,
    pub refine_tails: bool,
    /// Output path stem; `.csv` and `.json` are appended.
    pub output: String,
}

impl Default for Execution {
    fn default() -> Self {
        Execution {
            realizations: 100,
            seed: 0,
            workers: 1,
            pairs: PairPolicy::Axis,
            ctol: crate::spectral::DEFAULT_CTOL,
            refine_tails: true,
            output: "oscloc_out".into(),
        }
    }
}

impl Execution {
    pub fn spectral_options(&self) -> SpectralOptions {
        SpectralOptions {
            ctol: self.ctol,
            refine_tails: self.refine_tails,
            ..SpectralOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub separation: usize,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

/// Disorder averages keyed by separation, plus the per-realization values
/// (averaged over the pairs at each separation) they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub rows: Vec<EstimateRow>,
    /// `samples[i][j]`: realization `j`, row `i`.
    pub samples: Vec<Vec<f64>>,
    pub observable: String,
    pub realizations: u64,
    pub resamples: u64,
    pub seed: u64,
    pub dim: usize,
    pub half_width: usize,
}

/// Raw observable values (before the exponent `r`) at each pair.
fn evaluate_pairs(
    kind: &ObservableKind,
    params: &ModelParams,
    opts: &SpectralOptions,
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let h = assemble_h(params);
    if let ObservableKind::GreenMoment { s, z } = *kind {
        let mut columns = BTreeMap::new();
        let mut out = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            let column = match columns.entry(x) {
                std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::btree_map::Entry::Vacant(e) => e.insert(green_column(&h, x, z)?),
            };
            // G is complex symmetric, so column x also gives G(x, y).
            out.push(column[y].norm().powf(s));
        }
        return Ok(out);
    }
    let spec = diagonalize_with(&h, opts)?;
    let n = spec.dim();
    let window = |w: Option<(f64, f64)>| w.map(|(a, b)| EnergyWindow::closed(a, b));
    let pick = |m: nalgebra::Matrix2<f64>, e: Entry| {
        let (i, j) = e.index();
        m[(i, j)]
    };
    Ok(pairs
        .iter()
        .map(|&(x, y)| match *kind {
            ObservableKind::Correlator { alpha, window: w } => {
                correlator_q(&spec, alpha, x, y, window(w).as_ref())
            }
            ObservableKind::WeylCommutatorSup { f, g } => weyl_commutator_sup(
                &spec,
                params,
                &WeylSymbol::delta(n, x, f),
                &WeylSymbol::delta(n, y, g),
            ),
            ObservableKind::PqCommutatorSup { entry } => {
                pick(pq_commutator_sup(&spec, params, x, y), entry)
            }
            ObservableKind::GsPqSup { entry } => {
                pick(pq_correlations_sup(&spec, params, x, y, ThermalSpec::Ground), entry)
            }
            ObservableKind::ThermalPqSup { entry, beta } => pick(
                pq_correlations_sup(&spec, params, x, y, thermal(beta)),
                entry,
            ),
            ObservableKind::StaticGs { entry } => {
                static_correlation(&spec, params, x, y, entry, ThermalSpec::Ground)
            }
            ObservableKind::StaticThermal { entry, beta } => {
                static_correlation(&spec, params, x, y, entry, thermal(beta))
            }
            ObservableKind::GreenMoment { .. } => unreachable!("handled above"),
        })
        .collect())
}

fn thermal(beta: f64) -> ThermalSpec {
    ThermalSpec::new(beta).unwrap_or(ThermalSpec::Ground)
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::NotPositiveDefinite { .. } | Error::Conditioning { .. })
}

/// Samples `realizations` disorder configurations and averages
/// `observable^r` over realizations and over the pairs sharing a
/// separation. The table is a pure function of the inputs; in particular
/// it does not depend on `exec.workers`.
///
/// A realization violating positivity (or, for Green moments, with `z` on
/// the spectrum) is redrawn once from a reserved substream; more than 1%
/// of such redraws is a statistical error.
pub fn run_experiment(
    model: &ModelConfig,
    observable: &ObservableSpec,
    exec: &Execution,
) -> Result<EstimateTable> {
    observable.validate()?;
    if exec.realizations == 0 {
        return Err(Error::Config("at least one realization is required".into()));
    }
    let lattice = Arc::new(model.lattice()?);
    let disorder = model.disorder(exec.seed);
    disorder.validate()?;
    let groups = exec.pairs.pairs(&lattice);
    let flat: Vec<(usize, usize)> = groups.values().flatten().copied().collect();
    let opts = exec.spectral_options();

    let per_realization = map_indexed(exec.realizations, exec.workers, |r| {
        let attempt = |resample: bool| {
            let p = if resample {
                resample_params(&disorder, &lattice, r)?
            } else {
                sample_params(&disorder, &lattice, r)?
            };
            evaluate_pairs(&observable.kind, &p, &opts, &flat)
        };
        let (vals, resampled) = match attempt(false) {
            Ok(v) => (v, false),
            Err(e) if is_degenerate(&e) => (
                attempt(true).map_err(|e2| {
                    Error::Numerical(format!("realization {r} failed twice: {e}; then {e2}"))
                })?,
                true,
            ),
            Err(e) => return Err(e),
        };
        // Average over the pairs at each separation.
        let mut out = Vec::with_capacity(groups.len());
        let mut offset = 0;
        for pairs in groups.values() {
            let chunk = &vals[offset..offset + pairs.len()];
            out.push(chunk.iter().map(|v| v.powf(observable.r)).sum::<f64>() / pairs.len() as f64);
            offset += pairs.len();
        }
        Ok((out, resampled))
    })?;

    let resamples = per_realization.iter().filter(|(_, r)| *r).count() as u64;
    check_resamples(resamples, exec.realizations)?;

    let mut rows = Vec::with_capacity(groups.len());
    let mut samples = Vec::with_capacity(groups.len());
    for (i, (&sep, pairs)) in groups.iter().enumerate() {
        let col: Vec<f64> = per_realization.iter().map(|(v, _)| v[i]).collect();
        let (mean, stderr) = jackknife_mean(&col);
        if !mean.is_finite() {
            return Err(Error::Numerical(format!("non-finite mean at separation {sep}")));
        }
        rows.push(EstimateRow {
            separation: sep,
            mean,
            stderr,
            count: exec.realizations * pairs.len() as u64,
        });
        samples.push(col);
    }
    Ok(EstimateTable {
        rows,
        samples,
        observable: observable.label(),
        realizations: exec.realizations,
        resamples,
        seed: exec.seed,
        dim: model.dim,
        half_width: model.half_width,
    })
}
