//! Default experiment bundles for the three localization regimes.
//!
//! * `band_edge_static`: static ground-state and thermal correlations,
//!   d = 2, moderate disorder.
//! * `large_disorder`: dynamical sups (commutators and time-dependent
//!   correlations) at W = 32, all with r = 1.
//! * `one_dimensional`: d = 1, W = 8; r = 1/2 on the Weyl and q-q
//!   observables, r = 1 on anything involving a momentum.

use serde::{Deserialize, Serialize};

use crate::config::{ObservableConfig, ObservableName, RunConfig};
use crate::dynamics::Entry;
use crate::error::{Error, Result};
use crate::experiment::{Execution, ModelConfig};
use crate::model::Boundary;

pub const PRESET_NAMES: [&str; 3] = ["band_edge_static", "large_disorder", "one_dimensional"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub runs: Vec<RunConfig>,
}

fn model(dim: usize, half_width: usize, width: f64) -> ModelConfig {
    ModelConfig {
        dim,
        half_width,
        boundary: Boundary::Open,
        mass: 0.5,
        coupling: 1.0,
        k_low: 0.0,
        width,
    }
}

fn run(preset: &str, model: &ModelConfig, observable: ObservableConfig) -> RunConfig {
    let mut cfg = RunConfig {
        model: model.clone(),
        observable,
        execution: Execution::default(),
    };
    let label = cfg.observable.spec().map(|s| s.label()).unwrap_or_default();
    cfg.execution.output = format!("{preset}_{label}");
    cfg
}

fn obs(kind: ObservableName, entry: Entry, r: f64) -> ObservableConfig {
    ObservableConfig {
        kind,
        entry,
        r,
        ..ObservableConfig::default()
    }
}

pub fn regime_preset(name: &str) -> Result<Preset> {
    use ObservableName::*;
    let runs = match name {
        "band_edge_static" => {
            let m = model(2, 4, 8.0);
            vec![
                run(name, &m, obs(StaticGs, Entry::Qq, 1.0)),
                run(name, &m, obs(StaticGs, Entry::Pp, 1.0)),
                run(name, &m, obs(StaticThermal, Entry::Qq, 0.5)),
                run(name, &m, obs(StaticThermal, Entry::Pp, 0.5)),
            ]
        }
        "large_disorder" => {
            let m = model(2, 4, 32.0);
            let mut runs = vec![run(name, &m, obs(WeylCommutatorSup, Entry::Qq, 1.0))];
            for e in Entry::ALL {
                runs.push(run(name, &m, obs(PqCommutatorSup, e, 1.0)));
            }
            runs.push(run(name, &m, obs(GsPqSup, Entry::Qq, 1.0)));
            runs.push(run(name, &m, obs(GsPqSup, Entry::Pp, 1.0)));
            runs.push(run(name, &m, obs(ThermalPqSup, Entry::Qq, 0.5)));
            runs.push(run(name, &m, obs(ThermalPqSup, Entry::Pp, 1.0)));
            runs
        }
        "one_dimensional" => {
            let m = model(1, 50, 8.0);
            let mut runs = vec![run(name, &m, obs(WeylCommutatorSup, Entry::Qq, 0.5))];
            for e in Entry::ALL {
                let r = if e.has_momentum() { 1.0 } else { 0.5 };
                runs.push(run(name, &m, obs(PqCommutatorSup, e, r)));
            }
            runs.push(run(name, &m, obs(Correlator, Entry::Qq, 0.5)));
            runs
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: name.to_string(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ObservableKind;

    #[test]
    fn one_dimensional_exponents() {
        let p = regime_preset("one_dimensional").unwrap();
        for cfg in &p.runs {
            assert_eq!(cfg.model.dim, 1);
            assert_eq!(cfg.model.width, 8.0);
            let spec = cfg.observable_spec().unwrap();
            let expected = match spec.kind {
                ObservableKind::WeylCommutatorSup { .. } | ObservableKind::Correlator { .. } => 0.5,
                k => {
                    if k.entry().unwrap().has_momentum() {
                        1.0
                    } else {
                        0.5
                    }
                }
            };
            assert_eq!(spec.r, expected, "{}", spec.label());
        }
    }

    #[test]
    fn large_disorder_weyl_is_linear() {
        let p = regime_preset("large_disorder").unwrap();
        assert!(p.runs.iter().all(|c| c.model.width == 32.0));
        let weyl = p
            .runs
            .iter()
            .find(|c| c.observable.kind == ObservableName::WeylCommutatorSup)
            .unwrap();
        assert_eq!(weyl.observable.r, 1.0);
    }

    #[test]
    fn band_edge_is_static_only() {
        let p = regime_preset("band_edge_static").unwrap();
        assert!(p.runs.iter().all(|c| matches!(
            c.observable.kind,
            ObservableName::StaticGs | ObservableName::StaticThermal
        )));
        assert!(p.runs.iter().all(|c| c.model.dim <= 2));
    }

    #[test]
    fn presets_validate_and_have_distinct_outputs() {
        for name in PRESET_NAMES {
            let p = regime_preset(name).unwrap();
            let mut outputs: Vec<&str> = p.runs.iter().map(|c| c.execution.output.as_str()).collect();
            outputs.sort();
            outputs.dedup();
            assert_eq!(outputs.len(), p.runs.len());
            for c in &p.runs {
                assert!(c.validate().is_ok());
            }
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(regime_preset("weak_disorder"), Err(Error::Config(_))));
    }
}
