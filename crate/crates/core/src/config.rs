//! TOML run configuration: `[model]`, `[observable]` and `[execution]`
//! tables. Every key is optional; unknown keys are rejected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Entry;
use crate::error::{Error, Result};
use crate::experiment::{Execution, ModelConfig, ObservableKind, ObservableSpec};
use crate::green::SpectralParameterZ;
use crate::spectral::MAX_CTOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    #[default]
    Correlator,
    WeylCommutatorSup,
    PqCommutatorSup,
    GsPqSup,
    ThermalPqSup,
    StaticGs,
    StaticThermal,
    GreenMoment,
}

/// Flat observable table. Keys that the chosen `kind` does not use are
/// accepted and ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableConfig {
    pub kind: ObservableName,
    pub r: f64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub entry: Entry,
    /// Inverse temperature; `inf` selects the ground state.
    pub beta: f64,
    pub s: f64,
    pub energy: f64,
    pub epsilon: f64,
    /// Weyl symbol coefficients `[re, im]` at `x` and `y`.
    pub f: [f64; 2],
    pub g: [f64; 2],
    /// Evaluation time for the time-resolved correlation subcommands.
    pub time: f64,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        ObservableConfig {
            kind: ObservableName::Correlator,
            r: 1.0,
            alpha: -0.5,
            window: None,
            entry: Entry::Qq,
            beta: 1.0,
            s: 0.5,
            energy: 1.0,
            epsilon: 0.0,
            f: [1.0, 0.0],
            g: [1.0, 0.0],
            time: 0.0,
        }
    }
}

impl ObservableConfig {
    pub fn kind(&self) -> ObservableKind {
        match self.kind {
            ObservableName::Correlator => ObservableKind::Correlator {
                alpha: self.alpha,
                window: self.window.map(|[a, b]| (a, b)),
            },
            ObservableName::WeylCommutatorSup => ObservableKind::WeylCommutatorSup {
                f: Complex64::new(self.f[0], self.f[1]),
                g: Complex64::new(self.g[0], self.g[1]),
            },
            ObservableName::PqCommutatorSup => ObservableKind::PqCommutatorSup { entry: self.entry },
            ObservableName::GsPqSup => ObservableKind::GsPqSup { entry: self.entry },
            ObservableName::ThermalPqSup => ObservableKind::ThermalPqSup {
                entry: self.entry,
                beta: self.beta,
            },
            ObservableName::StaticGs => ObservableKind::StaticGs { entry: self.entry },
            ObservableName::StaticThermal => ObservableKind::StaticThermal {
                entry: self.entry,
                beta: self.beta,
            },
            ObservableName::GreenMoment => ObservableKind::GreenMoment {
                s: self.s,
                z: SpectralParameterZ::new(self.energy, self.epsilon),
            },
        }
    }

    pub fn spec(&self) -> Result<ObservableSpec> {
        ObservableSpec::new(self.kind(), self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub observable: ObservableConfig,
    pub execution: Execution,
}

impl RunConfig {
    /// Checks every constraint, naming the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        let m = &self.model;
        let o = &self.observable;
        let e = &self.execution;
        let checks: [(bool, &str, &str, String); 16] = [
            ((1..=3).contains(&m.dim), "model", "dim", format!("must be 1, 2 or 3, got {}", m.dim)),
            (m.mass.is_finite() && m.mass > 0.0, "model", "mass", format!("must be positive, got {}", m.mass)),
            (
                m.coupling.is_finite() && m.coupling >= 0.0,
                "model",
                "coupling",
                format!("must be non-negative, got {}", m.coupling),
            ),
            (
                m.k_low.is_finite() && m.k_low >= 0.0,
                "model",
                "k_low",
                format!("must be non-negative, got {}", m.k_low),
            ),
            (
                m.width.is_finite() && m.width >= 0.0,
                "model",
                "width",
                format!("must be non-negative, got {}", m.width),
            ),
            (o.r > 0.0 && o.r <= 1.0, "observable", "r", format!("must lie in (0, 1], got {}", o.r)),
            (o.alpha.is_finite(), "observable", "alpha", format!("must be finite, got {}", o.alpha)),
            (
                o.window.is_none_or(|[a, b]| a <= b),
                "observable",
                "window",
                "lower bound exceeds upper bound".into(),
            ),
            (o.beta > 0.0, "observable", "beta", format!("must be positive, got {}", o.beta)),
            (o.s > 0.0 && o.s < 1.0, "observable", "s", format!("must lie in (0, 1), got {}", o.s)),
            (o.energy.is_finite(), "observable", "energy", format!("must be finite, got {}", o.energy)),
            (
                o.epsilon.is_finite() && o.epsilon >= 0.0,
                "observable",
                "epsilon",
                format!("must be non-negative, got {}", o.epsilon),
            ),
            (o.time.is_finite(), "observable", "time", format!("must be finite, got {}", o.time)),
            (
                e.realizations >= 1,
                "execution",
                "realizations",
                "at least one realization is required".into(),
            ),
            (
                (0.0..=MAX_CTOL).contains(&e.ctol),
                "execution",
                "ctol",
                format!("must lie in [0, {MAX_CTOL:e}], got {:e}", e.ctol),
            ),
            (!e.output.is_empty(), "execution", "output", "must not be empty".into()),
        ];
        match checks.into_iter().find(|c| !c.0) {
            Some((_, section, key, msg)) => Err((section, key, msg)),
            None => Ok(()),
        }
    }

    pub fn observable_spec(&self) -> Result<ObservableSpec> {
        self.observable.spec()
    }

    /// Canonical TOML with every field written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Parses and validates a configuration, reporting the line and key of
/// the first problem.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        let message = e.message().to_string();
        let key = message
            .split('`')
            .nth(1)
            .map(str::to_string)
            .or_else(|| e.span().map(|s| key_at(text, s.start)))
            .unwrap_or_default();
        Error::ConfigKey { key, line, message }
    })?;
    if let Err((section, key, message)) = cfg.validate() {
        return Err(Error::ConfigKey {
            key: format!("{section}.{key}"),
            line: find_key_line(text, section, key),
            message,
        });
    }
    cfg.model.lattice()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<(RunConfig, String)> {
    let text = std::fs::read_to_string(path)?;
    Ok((parse_config(&text)?, text))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// The key at the start of the line containing `offset`, if any.
fn key_at(text: &str, offset: usize) -> String {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("");
    line.split('=').next().unwrap_or("").trim().to_string()
}

/// Line of `key = ...` inside `[section]`; 0 when the key is absent
/// (the default value was at fault).
fn find_key_line(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                let k = k.trim();
                if k == key || (key == "width" && k == "W") {
                    return i + 1;
                }
            }
        }
    }
    0
}
