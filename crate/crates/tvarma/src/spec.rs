//! The JSON model file read by `--spec`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tvarma_core::coefficients::{PathSpec, StochasticCoeffSpec};
use tvarma_core::mc::Noise;
use tvarma_core::path::{AnyPath, BreakPath, TablePath};
use tvarma_core::process::InitialValues;

use crate::error::{CliError, Result};
use crate::io::{self, Calendar, Quarter};

/// A model description. Exactly one of `path`, `table_file` or
/// `stochastic` describes the coefficients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    /// CSV in the custom table layout, relative to the spec file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticCoeffSpec>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub initial: InitialValues,
    /// Quarter at time index 0, e.g. `"1964Q2"`; labels outputs with dates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = io::from_json(text, "spec")?;
        let n = spec.path.is_some() as u8 + spec.table_file.is_some() as u8 + spec.stochastic.is_some() as u8;
        if n != 1 {
            return Err(CliError::Config("spec needs exactly one of `path`, `table_file`, `stochastic`".into()));
        }
        spec.origin()?;
        Ok(spec)
    }

    /// Reads a spec and resolves `table_file` against the spec's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut spec = Self::from_json(&text)?;
        if let Some(f) = &spec.table_file {
            if f.is_relative() {
                spec.table_file = Some(path.parent().unwrap_or(Path::new(".")).join(f));
            }
        }
        Ok(spec)
    }

    pub fn origin(&self) -> Result<Option<Quarter>> {
        self.origin
            .as_deref()
            .map(|s| s.parse().map_err(|e| CliError::Config(format!("origin: {e}"))))
            .transpose()
    }

    pub fn calendar(&self) -> Result<Calendar> {
        Ok(self.origin()?.map_or(Calendar::Index, |origin| Calendar::Quarterly { origin }))
    }

    /// The deterministic coefficient path.
    pub fn deterministic(&self) -> Result<AnyPath> {
        if let Some(p) = &self.path {
            return Ok(p.realize()?);
        }
        if let Some(f) = &self.table_file {
            let (start, rows) = io::read_table_file(f)?;
            return Ok(AnyPath::Table(TablePath::new(start, rows)?));
        }
        Err(CliError::Config("this command needs a deterministic `path` or `table_file`".into()))
    }

    pub fn break_path(&self) -> Result<BreakPath> {
        match self.deterministic()? {
            AnyPath::Breaks(b) => Ok(b),
            AnyPath::Constant(c) => Ok(BreakPath::new(Vec::new(), vec![c.regime])?),
            _ => Err(CliError::Config("this command needs an `abrupt_breaks` or `constant` path".into())),
        }
    }

    pub fn stochastic(&self) -> Option<&StochasticCoeffSpec> {
        self.stochastic.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvarma_core::path::CoefficientPath;

    #[test]
    fn parses_break_spec() {
        let text = r#"{
            "origin": "1964Q2",
            "path": {"kind": "abrupt_breaks", "breaks": [49, 88],
                     "regimes": [{"drift": 0.5, "phi": [0.4, 0.1], "sigma2": 1.0},
                                 {"phi": [0.7]}, {"phi": [0.2, -0.3], "sigma2": 4.0}]}
        }"#;
        let spec = ModelSpec::from_json(text).unwrap();
        let b = spec.break_path().unwrap();
        assert_eq!(b.breaks(), &[49, 88]);
        assert_eq!(b.phi(1, 50), 0.7);
        assert_eq!(spec.calendar().unwrap().label(88), "1986Q2");
    }

    #[test]
    fn rejects_ambiguous_or_unknown() {
        assert!(ModelSpec::from_json("{}").is_err());
        assert!(ModelSpec::from_json(r#"{"path": {"kind": "constant", "phi": [0.5]}, "bogus": 1}"#).is_err());
        let e = ModelSpec::from_json(r#"{"path": {"kind": "constant", "phi": [0.5]}, "origin": "1964"}"#);
        assert!(matches!(e, Err(CliError::Config(_))));
    }
}
