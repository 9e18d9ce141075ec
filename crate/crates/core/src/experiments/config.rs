use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{catalog_domain, Point};
use crate::quadrature::FunctionSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BbmSweep,
    Poincare,
    Ahlfors,
    ExtendCheck,
    Dichotomy,
    ContentTrend,
}

/// Ball `B(center, radius)`; coordinates past the dimension may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn center_point(&self) -> Point {
        let mut c = [0.0; 3];
        for (v, x) in c.iter_mut().zip(&self.center) {
            *v = *x;
        }
        c
    }
}

fn default_functions() -> Vec<String> {
    vec!["coord:1".into()]
}
fn default_p() -> Vec<f64> {
    vec![2.0]
}
fn default_s() -> Vec<f64> {
    vec![0.8, 0.9, 0.95]
}
fn default_h() -> f64 {
    1.0 / 32.0
}
fn default_budget() -> usize {
    4096
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment. Read from JSON; every field except `kind` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Catalog domain name; `dichotomy` ignores it.
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default = "default_functions")]
    pub functions: Vec<String>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Inner exponent of the Poincaré check; defaults to `p`.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default = "default_s")]
    pub s: Vec<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Monte Carlo samples per ball measure.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Poincaré ball; the bounding-box circumball when absent.
    #[serde(default)]
    pub ball: Option<BallSpec>,
    /// Ahlfors threshold.
    #[serde(default)]
    pub c: Option<f64>,
    /// Ahlfors radii.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Ahlfors centres per radius.
    #[serde(default)]
    pub x_samples: Option<usize>,
    /// Content scales.
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    /// Expected observation per check name, overriding the defaults.
    #[serde(default)]
    pub expect: BTreeMap<String, String>,
}

fn field(name: &str, msg: impl Into<String>) -> Error {
    Error::Config { field: name.to_string(), msg: msg.into() }
}

impl ExperimentConfig {
    pub fn new(kind: Kind, domain: &str) -> Self {
        ExperimentConfig {
            kind,
            domain: Some(domain.to_string()),
            functions: default_functions(),
            p: default_p(),
            q: None,
            s: default_s(),
            h: default_h(),
            budget: default_budget(),
            seed: 0,
            out: default_out(),
            ball: None,
            c: None,
            radii: None,
            x_samples: None,
            deltas: None,
            expect: BTreeMap::new(),
        }
    }

    /// Parse and validate. Syntax errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != Kind::Dichotomy {
            let name = self.domain.as_deref().ok_or_else(|| field("domain", "missing"))?;
            catalog_domain(name).map_err(|e| field("domain", e.to_string()))?;
        }
        if self.functions.is_empty() {
            return Err(field("functions", "empty list"));
        }
        for f in &self.functions {
            FunctionSpec::parse(f).map_err(|e| field("functions", e.to_string()))?;
        }
        if self.p.is_empty() || self.p.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(field("p", format!("need a non-empty list in [1, inf), got {:?}", self.p)));
        }
        if let Some(q) = self.q {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(field("q", format!("need q >= 1, got {q}")));
            }
        }
        if self.s.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return Err(field("s", format!("values must lie in (0, 1), got {:?}", self.s)));
        }
        if self.s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("s", "grid must be strictly increasing"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(field("h", format!("must be positive, got {}", self.h)));
        }
        if self.budget == 0 {
            return Err(field("budget", "must be positive"));
        }
        if let Some(b) = &self.ball {
            if !(b.radius > 0.0) || b.center.len() > 3 {
                return Err(field("ball", "need a positive radius and at most 3 coordinates"));
            }
        }
        if let Some(r) = &self.radii {
            if r.is_empty() || r.iter().any(|&v| !(v > 0.0)) {
                return Err(field("radii", "need positive radii"));
            }
        }
        if let Some(d) = &self.deltas {
            if d.len() < 2 || d.iter().any(|&v| !(v > 0.0)) {
                return Err(field("deltas", "need at least two positive scales"));
            }
        }
        Ok(())
    }

    pub fn domain_name(&self) -> &str {
        self.domain.as_deref().unwrap_or("")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(r#"{"kind": "ahlfors", "domain": "disk"}"#).unwrap();
        assert_eq!(c.kind, Kind::Ahlfors);
        assert_eq!(c.s, vec![0.8, 0.9, 0.95]);
        assert_eq!(c, ExperimentConfig::new(Kind::Ahlfors, "disk"));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_json(r#"{"kind": "ahlfors", "domain": "blob"}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "domain"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"kind": "bbm-sweep", "domain": "disk", "s": [0.9, 0.8]}"#)
            .unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "s"));
        let e = ExperimentConfig::from_json(r#"{"kind": "poincare", "domain": "disk", "h": 0}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "h"));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let e = ExperimentConfig::from_json("{\n  \"kind\": \"ahlfors\",\n  \"bogus\": 1\n}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
    }
}
