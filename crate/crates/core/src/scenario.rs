//! Scenario files: flat JSON holding stack parameters, tolerances and the
//! seed. Missing stack fields fall back to the reference fixture of the
//! chosen regime; command-line flags are applied on top with `overlay`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stack::{ModelHamiltonian, StackKind, StackParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub regime: Option<StackKind>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default, rename = "E0", alias = "e0")]
    pub e0: Option<f64>,
    #[serde(default, rename = "Lambda3", alias = "nu3", alias = "lambda3")]
    pub lambda3: Option<f64>,
    #[serde(default)]
    pub eps0: Option<f64>,
    #[serde(default)]
    pub eps1: Option<f64>,
    #[serde(default)]
    pub eps2: Option<f64>,
    #[serde(default, rename = "B", alias = "D", alias = "b")]
    pub b: Option<f64>,
    #[serde(default)]
    pub rtol: Option<f64>,
    #[serde(default)]
    pub atol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// A fully resolved and validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: StackParams,
    pub rtol: f64,
    pub atol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn reference_params(kind: StackKind) -> StackParams {
    match kind {
        StackKind::Upper => StackParams::reference_upper(),
        StackKind::Appendix => StackParams::reference_appendix(),
        StackKind::Lower | StackKind::Plain => StackParams { regime: kind, ..StackParams::reference() },
    }
}

impl ScenarioFile {
    /// Fields set in `top` win.
    pub fn overlay(&self, top: &ScenarioFile) -> ScenarioFile {
        macro_rules! pick {
            ($f:ident) => {
                top.$f.clone().or_else(|| self.$f.clone())
            };
        }
        ScenarioFile {
            name: pick!(name),
            regime: pick!(regime),
            c: pick!(c),
            e0: pick!(e0),
            lambda3: pick!(lambda3),
            eps0: pick!(eps0),
            eps1: pick!(eps1),
            eps2: pick!(eps2),
            b: pick!(b),
            rtol: pick!(rtol),
            atol: pick!(atol),
            seed: pick!(seed),
            out: pick!(out),
        }
    }

    /// Fills gaps from the reference fixture and checks every stack
    /// inequality by building the model.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let kind = self.regime.unwrap_or(StackKind::Lower);
        let base = reference_params(kind);
        let params = StackParams {
            regime: kind,
            c: self.c.unwrap_or(base.c),
            e0: self.e0.unwrap_or(base.e0),
            lambda3: self.lambda3.unwrap_or(base.lambda3),
            eps0: self.eps0.unwrap_or(base.eps0),
            eps1: self.eps1.unwrap_or(base.eps1),
            eps2: self.eps2.unwrap_or(base.eps2),
            b: self.b.unwrap_or(base.b),
        };
        let rtol = self.rtol.unwrap_or(1e-10);
        let atol = self.atol.unwrap_or(rtol * 1e-2);
        if !(rtol > 0.0 && rtol < 1e-2) {
            return Err(Error::param("rtol", format!("need 0 < rtol < 1e-2 (got {rtol})")));
        }
        if !(atol > 0.0) {
            return Err(Error::param("atol", format!("need atol > 0 (got {atol})")));
        }
        ModelHamiltonian::build(params)?;
        Ok(ScenarioConfig {
            name: self.name.clone().unwrap_or_else(|| kind.as_str().to_string()),
            params,
            rtol,
            atol,
            seed: self.seed.unwrap_or(0),
            out: self.out.clone(),
        })
    }
}

pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))
}

/// Parses and validates a scenario document.
pub fn parse_scenario_json(text: &str) -> Result<ScenarioConfig> {
    parse_scenario_file(text)?.resolve()
}

/// Parses a complete StackParams document and validates it.
pub fn parse_stack_params_json(text: &str) -> Result<ModelHamiltonian> {
    let p: StackParams = serde_json::from_str(text).map_err(|e| Error::Parse(format!("stack params: {e}")))?;
    if ![p.c, p.e0, p.lambda3, p.eps0, p.eps1, p.eps2, p.b].iter().all(|v| v.is_finite()) {
        return Err(Error::Parse("stack params: non-finite value".into()));
    }
    ModelHamiltonian::build(p)
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_file(&text)
}

impl ScenarioConfig {
    pub fn model(&self) -> Result<ModelHamiltonian> {
        ModelHamiltonian::build(self.params)
    }

    /// The same parameters under another regime (lower ↔ appendix share
    /// every constant).
    pub fn with_regime(&self, kind: StackKind) -> Result<ModelHamiltonian> {
        ModelHamiltonian::build(StackParams { regime: kind, ..self.params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_and_defaults() {
        let a = parse_scenario_json(r#"{"regime":"upper","nu3":-3,"D":-4,"c":-1,"e0":-1.1}"#).unwrap();
        assert_eq!(a.params, StackParams::reference_upper());
        let b = parse_scenario_json("{}").unwrap();
        assert_eq!(b.params, StackParams::reference());
        assert_eq!(b.seed, 0);
        assert!(parse_scenario_json(r#"{"Lamda3":3}"#).is_err());
    }

    #[test]
    fn overlay_prefers_top() {
        let base = parse_scenario_file(r#"{"c":-2,"E0":-0.1,"seed":3}"#).unwrap();
        let top = ScenarioFile { e0: Some(-0.12), ..Default::default() };
        let m = base.overlay(&top).resolve().unwrap();
        assert_eq!(m.params.e0, -0.12);
        assert_eq!(m.seed, 3);
    }
}
