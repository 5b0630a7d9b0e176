//! Run configuration read from a TOML file.

use std::path::Path;

use merorenorm::microlocal::BatchConfig;
use merorenorm::qft::{AmplitudeOptions, AmplitudeSpec, ProductTest, PropagatorModel, Spacetime};
use merorenorm::quad::QuadratureConfig;
use merorenorm::renorm::RenormRequest;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One file may carry a section for every subcommand; each subcommand reads
/// only its own.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Overrides the quadrature settings of every request in the file.
    pub quadrature: Option<QuadratureConfig>,
    pub germ: Option<GermRequest>,
    pub renorm: Option<RenormRequest>,
    pub qft: Option<QftRequest>,
    pub polar: Option<BatchConfig>,
    pub check: Option<CheckRequest>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermRequest {
    pub expr: String,
    /// Number of variables; defaults to the largest index in `expr`.
    pub vars: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QftRequest {
    /// 1 for the line, 2 for 1+1 Minkowski space.
    pub spacetime: Spacetime,
    #[serde(default)]
    pub model: PropagatorModel,
    pub amplitude: AmplitudeSpec,
    pub phi: ProductTest,
    /// Edge exponents as `[re, im]`; the amplitude is renormalized at zero
    /// when absent.
    pub lambdas: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub options: AmplitudeOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub suite: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Quadrature settings after the file-level and `--tol` overrides.
    pub fn quadrature(&self, base: QuadratureConfig, tol: Option<f64>) -> Result<QuadratureConfig, CliError> {
        let mut q = self.quadrature.unwrap_or(base);
        if let Some(t) = tol {
            q.tol = t;
        }
        q.validate().map_err(|e| CliError::Usage(format!("quadrature: {e}")))?;
        Ok(q)
    }
}
