//! Model and weight ingestion.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qcr_core::model::operator_from_parts;
use qcr_core::{
    BuiltinModel, DensityOperator, HermitianOperator, RMatrix, StatisticalModel, WeightMatrix,
};
use serde::Deserialize;

/// Parse-level Hermiticity tolerance for file input.
pub const PARSE_HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixParts {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

/// On-disk model: `{"dim": d, "rho": {"re", "im"}, "tangent": [{"re", "im"}, ...]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub dim: usize,
    pub rho: MatrixParts,
    pub tangent: Vec<MatrixParts>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightFile {
    g: Vec<Vec<f64>>,
}

/// A loaded model with a short description of where it came from.
pub struct LoadedModel {
    pub source: String,
    pub model: StatisticalModel,
}

fn square(rows: &[Vec<f64>], dim: usize, field: &str) -> Result<RMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        bail!("{field}: expected a {dim}x{dim} array of rows");
    }
    Ok(RMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn operator(parts: &MatrixParts, dim: usize, field: &str) -> Result<HermitianOperator> {
    let re = square(&parts.re, dim, &format!("{field}.re"))?;
    let im = match &parts.im {
        Some(rows) => square(rows, dim, &format!("{field}.im"))?,
        None => RMatrix::zeros(dim, dim),
    };
    operator_from_parts(&re, &im, PARSE_HERMITIAN_TOL).with_context(|| field.to_string())
}

impl ModelSpecFile {
    pub fn build(&self) -> Result<StatisticalModel> {
        if self.dim == 0 {
            bail!("dim: must be at least 1");
        }
        let rho = operator(&self.rho, self.dim, "rho")?;
        let rho = DensityOperator::new(rho).context("rho")?;
        let tangent = self
            .tangent
            .iter()
            .enumerate()
            .map(|(i, t)| operator(t, self.dim, &format!("tangent[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        StatisticalModel::new(rho, tangent).context("tangent")
    }
}

pub fn read_model_file(path: &Path) -> Result<LoadedModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: ModelSpecFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let model = spec
        .build()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(LoadedModel {
        source: path.display().to_string(),
        model,
    })
}

pub fn builtin(name: &str, alpha: Option<f64>, probs: Option<&[f64]>) -> Result<LoadedModel> {
    let (params, source) = match name {
        "qubit-full" | "qubit-equatorial" => {
            let Some(alpha) = alpha else {
                bail!("--alpha is required for model {name}");
            };
            (vec![alpha], format!("{name}(alpha={alpha})"))
        }
        "qutrit-diagonal" => {
            let probs = probs.map_or_else(|| vec![0.5, 0.25, 0.25], <[f64]>::to_vec);
            let shown = probs
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            (probs, format!("{name}(probs={shown})"))
        }
        other => bail!(
            "unknown model {other:?}; expected one of {}",
            BuiltinModel::NAMES.join(", ")
        ),
    };
    let model = BuiltinModel::from_name(name, &params)?.build()?;
    Ok(LoadedModel { source, model })
}

/// Reads `{"g": [[...]]}`, or returns the identity when no file is given.
pub fn read_weight(path: Option<&Path>, n: usize) -> Result<WeightMatrix> {
    let Some(path) = path else {
        return Ok(WeightMatrix::identity(n));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: WeightFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let g = square(&file.g, n, "g").with_context(|| format!("validating {}", path.display()))?;
    WeightMatrix::new(g).with_context(|| format!("validating {}: g", path.display()))
}
