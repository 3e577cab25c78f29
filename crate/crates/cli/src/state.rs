//! State documents: explicit moments or a preset, from a file, inline JSON,
//! or the short form `preset:name:param...`.

use std::path::Path;

use lgw_core::gaussian::{make_state, StateKind};
use lgw_core::{CovarianceMatrix, GaussianState};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum PresetSpec {
    Vacuum {
        #[serde(default = "one")]
        modes: usize,
    },
    Thermal {
        nbar: f64,
        #[serde(default = "one")]
        modes: usize,
    },
    Coherent {
        re: f64,
        #[serde(default)]
        im: f64,
        #[serde(default = "one")]
        modes: usize,
    },
    Squeezed {
        r: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default = "one")]
        modes: usize,
    },
    Tms {
        r: f64,
    },
    /// Fock state |n⟩; not Gaussian, accepted by the Fock-aware commands.
    Fock {
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitState {
    pub modes: usize,
    #[serde(default)]
    pub displacement: Vec<f64>,
    /// Row-major, 4N² entries.
    pub covariance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateFile {
    Preset(PresetSpec),
    Explicit(ExplicitState),
}

/// A parsed input: Gaussian, or a Fock number state.
#[derive(Debug, Clone)]
pub enum Input {
    Gaussian(GaussianState),
    Fock(usize),
}

impl Input {
    pub fn gaussian(self, command: &str) -> Result<GaussianState, CliError> {
        match self {
            Input::Gaussian(g) => Ok(g),
            Input::Fock(n) => Err(CliError::Validation(format!(
                "`{command}` needs a Gaussian state; |{n}> is a Fock state"
            ))),
        }
    }
}

impl StateFile {
    /// Explicit document for a Gaussian state.
    pub fn from_state(state: &GaussianState) -> Self {
        StateFile::Explicit(ExplicitState {
            modes: state.modes(),
            displacement: state.displacement().iter().copied().collect(),
            covariance: state.covariance().transpose().iter().copied().collect(),
        })
    }

    pub fn to_input(&self) -> Result<Input, CliError> {
        match self {
            StateFile::Explicit(e) => {
                let n = e.modes;
                if n == 0 {
                    return Err(CliError::Parse("field `modes`: must be at least 1".into()));
                }
                if e.covariance.len() != 4 * n * n {
                    return Err(CliError::Parse(format!(
                        "field `covariance`: expected {} entries for {n} modes, got {}",
                        4 * n * n,
                        e.covariance.len()
                    )));
                }
                let d = if e.displacement.is_empty() {
                    DVector::zeros(2 * n)
                } else if e.displacement.len() == 2 * n {
                    DVector::from_column_slice(&e.displacement)
                } else {
                    return Err(CliError::Parse(format!(
                        "field `displacement`: expected {} entries, got {}",
                        2 * n,
                        e.displacement.len()
                    )));
                };
                let cm =
                    CovarianceMatrix::new(DMatrix::from_row_slice(2 * n, 2 * n, &e.covariance))?;
                Ok(Input::Gaussian(GaussianState::new(d, cm)?))
            }
            StateFile::Preset(p) => {
                let (kind, modes) = match *p {
                    PresetSpec::Fock { n } => return Ok(Input::Fock(n)),
                    PresetSpec::Vacuum { modes } => (StateKind::Vacuum, modes),
                    PresetSpec::Thermal { nbar, modes } => (StateKind::Thermal { nbar }, modes),
                    PresetSpec::Coherent { re, im, modes } => {
                        (StateKind::Coherent { re, im }, modes)
                    }
                    PresetSpec::Squeezed { r, phi, modes } => {
                        (StateKind::Squeezed { r, phi }, modes)
                    }
                    PresetSpec::Tms { r } => (StateKind::Tms { r }, 2),
                };
                Ok(Input::Gaussian(make_state(kind, modes)?))
            }
        }
    }
}

/// `preset:name:p1:p2...`
fn parse_short(spec: &str) -> Result<StateFile, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize, name: &str| -> Result<f64, CliError> {
        let s = parts
            .get(i)
            .ok_or_else(|| CliError::Parse(format!("`{spec}`: missing parameter `{name}`")))?;
        s.parse::<f64>().map_err(|_| {
            CliError::Parse(format!(
                "`{spec}`: parameter `{name}` = `{s}` is not a number"
            ))
        })
    };
    let opt = |i: usize, name: &str, default: f64| {
        if parts.len() > i {
            num(i, name)
        } else {
            Ok(default)
        }
    };
    let preset = match parts.get(1).copied().unwrap_or("") {
        "vacuum" => PresetSpec::Vacuum { modes: 1 },
        "thermal" => PresetSpec::Thermal {
            nbar: num(2, "nbar")?,
            modes: 1,
        },
        "coherent" => PresetSpec::Coherent {
            re: num(2, "re")?,
            im: opt(3, "im", 0.0)?,
            modes: 1,
        },
        "squeezed" => PresetSpec::Squeezed {
            r: num(2, "r")?,
            phi: opt(3, "phi", 0.0)?,
            modes: 1,
        },
        "tms" => PresetSpec::Tms { r: num(2, "r")? },
        "fock" => {
            let n = num(2, "n")?;
            if n < 0.0 || n.fract() != 0.0 {
                return Err(CliError::Parse(format!(
                    "`{spec}`: Fock number must be a nonnegative integer"
                )));
            }
            PresetSpec::Fock { n: n as usize }
        }
        other => {
            return Err(CliError::Parse(format!(
                "`{spec}`: unknown preset `{other}`"
            )))
        }
    };
    Ok(StateFile::Preset(preset))
}

/// Parses a state document. A preset document is recognised by its
/// `preset` key so field errors name the right schema.
pub fn parse_document(text: &str) -> Result<StateFile, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let is_preset = v.get("preset").is_some();
    let doc = if is_preset {
        serde_json::from_value(v).map(StateFile::Preset)
    } else {
        serde_json::from_value(v).map(StateFile::Explicit)
    };
    doc.map_err(|e| CliError::Parse(e.to_string()))
}

/// `preset:...`, inline `{...}`, or a path to a state file.
pub fn read_state_file(arg: &str) -> Result<StateFile, CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with("preset:") {
        return parse_short(trimmed);
    }
    if trimmed.starts_with('{') {
        return parse_document(trimmed);
    }
    let text = std::fs::read_to_string(Path::new(arg))
        .map_err(|e| CliError::Parse(format!("cannot read `{arg}`: {e}")))?;
    parse_document(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{arg}: {m}")),
        other => other,
    })
}

pub fn parse_state(arg: &str) -> Result<Input, CliError> {
    read_state_file(arg)?.to_input()
}
