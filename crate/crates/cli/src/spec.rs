//! Problem-description files.
//!
//! A problem is a TOML document naming its functions by analytic family.
//! Unknown keys are rejected. A minimal example:
//!
//! ```toml
//! dimension = 1
//!
//! [cylinder]
//! radius = 1.0
//! level = 1.0
//!
//! [f]
//! family = "quadratic"
//! scale = 1.0
//!
//! [g]
//! family = "clamp_shift"
//! delta = 0.02
//! inner = { family = "quadratic", scale = 1.0 }
//!
//! [certificate.value_bound]
//! eps = 0.02
//! ```

use std::path::Path;

use epigauge::{
    aggregate_cover, Cover, Cylinder, EnvelopeCert, Func, FuncExpr, GrowthCert, LocalCert, Point,
    ToleranceField,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_GRID_STEP: f64 = 1e-2;
pub const DEFAULT_LEVEL_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub cylinder: Cylinder,
    /// Radius of the ball on which `f` and `g` are evaluated (defaults to
    /// the cylinder radius).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<FuncExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FuncExpr>,
    #[serde(default)]
    pub certificate: CertificateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_level_step")]
    pub level_step: f64,
}

fn default_step() -> f64 {
    DEFAULT_GRID_STEP
}

fn default_level_step() -> f64 {
    DEFAULT_LEVEL_STEP
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: DEFAULT_GRID_STEP,
            level_step: DEFAULT_LEVEL_STEP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_bound: Option<ValueBoundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<ToleranceSpec>,
}

impl CertificateSpec {
    pub fn is_empty(&self) -> bool {
        self.value_bound.is_none()
            && self.envelope.is_none()
            && self.cover.is_none()
            && self.tolerance.is_none()
    }
}

/// Caller-certified `sup_{‖x‖≤R} |F - F̃| ≤ eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueBoundSpec {
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_radius: Option<f64>,
    pub lower: FuncExpr,
    pub upper: FuncExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    pub certs: Vec<LocalCertSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalCertSpec {
    pub center: Point,
    pub radius: f64,
    pub lower: FuncExpr,
    pub upper: FuncExpr,
}

/// `η(x, t) = eta(x) + level_slope · |t|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub eta: FuncExpr,
    #[serde(default)]
    pub level_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_exact: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub mu: f64,
    pub argmin: epigauge::ArgminSet,
    pub inf_value: f64,
    /// Ball on which growth holds (defaults to the cylinder radius).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Minimizer of `f` to use (defaults to a point of `argmin`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xstar: Option<Point>,
    /// Exact minimizer of `g` over the ball; found on the lattice if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xtilde: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// `[lo, hi, count]`, log-spaced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_range: Option<(f64, f64, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

impl ProblemSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let spec: ProblemSpec = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        ProblemSpec::from_toml_str(&text)
            .map_err(|e| match e {
                CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    fn validate(&self) -> Result<(), CliError> {
        let dim = self.dimension;
        let field = |path: &str, r: epigauge::Result<()>| {
            r.map_err(|e| CliError::Parse(format!("`{path}`: {e}")))
        };
        if dim == 0 {
            return Err(CliError::Parse("`dimension` must be at least 1".into()));
        }
        field("cylinder", self.cylinder.validate())?;
        if !(self.grid.step > 0.0 && self.grid.level_step > 0.0) {
            return Err(CliError::Parse("`grid` steps must be positive".into()));
        }
        if let Some(f) = &self.f {
            field("f", f.validate(dim))?;
        }
        if let Some(g) = &self.g {
            field("g", g.validate(dim))?;
        }
        let c = &self.certificate;
        if let Some(e) = &c.envelope {
            field("certificate.envelope.lower", e.lower.validate(dim))?;
            field("certificate.envelope.upper", e.upper.validate(dim))?;
        }
        if let Some(cov) = &c.cover {
            for (i, lc) in cov.certs.iter().enumerate() {
                if lc.center.dim() != dim {
                    return Err(CliError::Parse(format!(
                        "`certificate.cover.certs[{i}].center` has dimension {}, expected {dim}",
                        lc.center.dim()
                    )));
                }
                field(&format!("certificate.cover.certs[{i}].lower"), lc.lower.validate(dim))?;
                field(&format!("certificate.cover.certs[{i}].upper"), lc.upper.validate(dim))?;
            }
        }
        if let Some(t) = &c.tolerance {
            field("certificate.tolerance.eta", t.eta.validate(dim))?;
        }
        if let Some(g) = &self.growth {
            field("growth.argmin", g.argmin.validate(dim))?;
            for (name, p) in [("growth.xstar", &g.xstar), ("growth.xtilde", &g.xtilde)] {
                if let Some(p) = p {
                    if p.dim() != dim {
                        return Err(CliError::Parse(format!(
                            "`{name}` has dimension {}, expected {dim}",
                            p.dim()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the parsed problem.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("problem specs serialize");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius.unwrap_or(self.cylinder.radius)
    }

    pub fn pair(&self) -> Result<Option<(Func, Func)>, CliError> {
        match (&self.f, &self.g) {
            (Some(f), Some(g)) => {
                let r = self.domain_radius();
                Ok(Some((
                    f.build(self.dimension, r, "F")?,
                    g.build(self.dimension, r, "F̃")?,
                )))
            }
            (None, None) => Ok(None),
            _ => Err(CliError::Precondition(
                "`f` and `g` must be given together".into(),
            )),
        }
    }

    pub fn envelope_cert(&self, validation_step: f64) -> Result<Option<EnvelopeCert>, CliError> {
        let Some(e) = &self.certificate.envelope else {
            return Ok(None);
        };
        let region = e.region_radius.unwrap_or(self.cylinder.radius);
        let cert = EnvelopeCert::new(
            self.dimension,
            region,
            e.lower.build(self.dimension, region, "F⁻")?,
            e.upper.build(self.dimension, region, "F⁺")?,
            validation_step,
        )?;
        Ok(Some(match e.grid_exact {
            Some(exact) => cert.declare_grid_exact(exact),
            None => cert,
        }))
    }

    /// Aggregated cover restricted to the base ball of the cylinder.
    pub fn cover_envelope(&self, validation_step: f64) -> Result<Option<EnvelopeCert>, CliError> {
        let Some(c) = &self.certificate.cover else {
            return Ok(None);
        };
        let mut certs = Vec::with_capacity(c.certs.len());
        for (i, lc) in c.certs.iter().enumerate() {
            let reach = lc.center.norm() + lc.radius;
            certs.push(LocalCert::new(
                lc.center.clone(),
                lc.radius,
                lc.lower.build(self.dimension, reach, format!("F⁻_{i}"))?,
                lc.upper.build(self.dimension, reach, format!("F⁺_{i}"))?,
            )?);
        }
        let agg = aggregate_cover(Cover::new(certs)?);
        Ok(Some(agg.into_envelope(self.cylinder.radius, validation_step)?))
    }

    pub fn tolerance_field(&self) -> Result<Option<ToleranceField>, CliError> {
        let Some(t) = &self.certificate.tolerance else {
            return Ok(None);
        };
        let tf = ToleranceField::from_expr(t.eta.clone(), t.level_slope, self.cylinder, self.dimension)?;
        Ok(Some(match t.grid_exact {
            Some(exact) => tf.declare_grid_exact(exact),
            None => tf,
        }))
    }

    pub fn growth_cert(&self) -> Result<Option<GrowthCert>, CliError> {
        let Some(g) = &self.growth else {
            return Ok(None);
        };
        Ok(Some(GrowthCert::new(
            g.mu,
            g.radius.unwrap_or(self.cylinder.radius),
            g.argmin.clone(),
            g.inf_value,
            self.dimension,
        )?))
    }
}
