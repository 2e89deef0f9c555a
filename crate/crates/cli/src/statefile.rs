//! State files: dense matrices, GHZ-diagonal weights, or named constructors.

use std::path::Path;

use belldist::qlinalg::C64;
use belldist::states::{
    make_ghz, make_ghz_diagonal, make_noisy_ghz, make_padded_ghz, make_rho_r, make_w_mixture, random_density, GhzWeights,
};
use belldist::{ComplexMatrix, DensityMatrix};
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub schema_version: u64,
    pub n_qubits: usize,
    #[serde(flatten)]
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "kebab-case")]
pub enum Encoding {
    /// Row-major entries.
    Dense {
        entries: Vec<Complex>,
    },
    GhzWeights {
        plus: Vec<f64>,
        minus: Vec<f64>,
    },
    Constructor {
        constructor: Constructor,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Constructor {
    Ghz,
    Mixed,
    RhoR { r: f64 },
    WMixture { alpha: f64 },
    PaddedGhz,
    Random { seed: u64, rank: usize },
    NoisyGhz { visibility: f64 },
}

impl StateFile {
    pub fn dense(rho: &DensityMatrix) -> Self {
        let entries = rho.matrix().as_slice().iter().map(|z| Complex { re: z.re, im: z.im }).collect();
        Self { schema_version: SCHEMA_VERSION, n_qubits: rho.n_qubits(), encoding: Encoding::Dense { entries } }
    }

    pub fn constructor(n_qubits: usize, constructor: Constructor) -> Self {
        Self { schema_version: SCHEMA_VERSION, n_qubits, encoding: Encoding::Constructor { constructor } }
    }

    pub fn decode(text: &str, source: &str) -> Result<Self, CliError> {
        let file: StateFile = canonical::parse(text, source)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema { found: file.schema_version, expected: SCHEMA_VERSION });
        }
        Ok(file)
    }

    pub fn encode(&self) -> Result<String, CliError> {
        canonical::to_string(self)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::decode(&text, &path.display().to_string())
    }

    /// Builds and validates the density matrix.
    pub fn build(&self) -> Result<DensityMatrix, CliError> {
        let n = self.n_qubits;
        let rho = match &self.encoding {
            Encoding::Dense { entries } => {
                let dim = 1usize.checked_shl(n as u32).unwrap_or(0);
                if entries.len() != dim * dim {
                    return Err(CliError::spec("state file", "dense", format!("expected {} entries, found {}", dim * dim, entries.len())));
                }
                let data = entries.iter().map(|z| C64::new(z.re, z.im)).collect();
                DensityMatrix::new(n, ComplexMatrix::from_row_major(dim, data)?)?
            }
            Encoding::GhzWeights { plus, minus } => make_ghz_diagonal(&GhzWeights::new(n, plus.clone(), minus.clone())?),
            Encoding::Constructor { constructor } => match *constructor {
                Constructor::Ghz => make_ghz(n)?,
                Constructor::Mixed => DensityMatrix::maximally_mixed(n),
                Constructor::RhoR { r } => make_rho_r(n, r)?,
                Constructor::WMixture { alpha } => {
                    if n != 3 {
                        return Err(CliError::spec("state file", "w-mixture", "the W family has 3 qubits"));
                    }
                    make_w_mixture(alpha)?
                }
                Constructor::PaddedGhz => make_padded_ghz(n)?,
                Constructor::Random { seed, rank } => random_density(seed, n, rank)?,
                Constructor::NoisyGhz { visibility } => make_noisy_ghz(n, visibility)?,
            },
        };
        Ok(rho)
    }
}

fn num<T: std::str::FromStr>(spec: &str, field: &str) -> Result<T, CliError> {
    field.parse().map_err(|_| CliError::spec("state", spec, format!("cannot parse '{field}'")))
}

/// Parses `name:args` constructor strings such as `rho-r:3:0.7`.
pub fn parse_constructor(spec: &str) -> Result<Option<StateFile>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let arity = |k: usize| {
        if parts.len() == k + 1 {
            Ok(())
        } else {
            Err(CliError::spec("state", spec, format!("{} takes {k} argument(s)", parts[0])))
        }
    };
    let file = match parts[0] {
        "ghz" => {
            arity(1)?;
            StateFile::constructor(num(spec, parts[1])?, Constructor::Ghz)
        }
        "mixed" => {
            arity(1)?;
            StateFile::constructor(num(spec, parts[1])?, Constructor::Mixed)
        }
        "padded-ghz" => {
            arity(1)?;
            StateFile::constructor(num(spec, parts[1])?, Constructor::PaddedGhz)
        }
        "rho-r" => {
            arity(2)?;
            StateFile::constructor(num(spec, parts[1])?, Constructor::RhoR { r: num(spec, parts[2])? })
        }
        "w-mixture" => {
            arity(1)?;
            StateFile::constructor(3, Constructor::WMixture { alpha: num(spec, parts[1])? })
        }
        "random" => {
            arity(3)?;
            StateFile::constructor(num(spec, parts[1])?, Constructor::Random { seed: num(spec, parts[2])?, rank: num(spec, parts[3])? })
        }
        "noisy-ghz" => {
            arity(2)?;
            StateFile::constructor(num(spec, parts[1])?, Constructor::NoisyGhz { visibility: num(spec, parts[2])? })
        }
        _ => return Ok(None),
    };
    Ok(Some(file))
}

/// A `--state` argument: a constructor string or a path to a state file.
pub fn resolve(spec: &str) -> Result<StateFile, CliError> {
    if let Some(file) = parse_constructor(spec)? {
        return Ok(file);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::spec("state", spec, "neither a known constructor nor an existing file"));
    }
    StateFile::load(path)
}
