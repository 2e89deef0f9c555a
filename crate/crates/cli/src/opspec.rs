//! `--op family:settings` parsing and resolution into operators.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use belldist::bell::{chsh_operator, mbk_operator, mbk_prime, svetlichny_gamma, svetlichny_operator, uffink_operator};
use belldist::optimize::{optimize_settings, OptimizeOptions, SettingsOptimum};
use belldist::{BellOperator, DensityMatrix, Family, MeasurementSettings};
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    Mbk,
    MbkPrime,
    Uffink,
    Svetlichny,
    Chsh,
}

impl FamilyName {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "mbk" => Self::Mbk,
            "mbk-prime" => Self::MbkPrime,
            "uffink" => Self::Uffink,
            "svetlichny" => Self::Svetlichny,
            "chsh" => Self::Chsh,
            _ => return Err(CliError::spec("operator family", s, "expected mbk, mbk-prime, uffink, svetlichny or chsh")),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mbk => "mbk",
            Self::MbkPrime => "mbk-prime",
            Self::Uffink => "uffink",
            Self::Svetlichny => "svetlichny",
            Self::Chsh => "chsh",
        }
    }

    pub fn family(self, gamma: f64) -> Family {
        match self {
            Self::Mbk => Family::Mbk,
            Self::MbkPrime => Family::MbkPrime,
            Self::Uffink => Family::Uffink(gamma),
            Self::Svetlichny => Family::Svetlichny,
            Self::Chsh => Family::Chsh,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SettingsSpec {
    /// Closed-form GHZ-optimal planar preset.
    Optimal,
    /// Optimized for the given state.
    Auto,
    Planar(Vec<(f64, f64)>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpSpec {
    pub family: FamilyName,
    pub settings: SettingsSpec,
}

impl OpSpec {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let (fam, rest) = spec.split_once(':').unwrap_or((spec, "optimal"));
        let family = FamilyName::parse(fam)?;
        let settings = match rest {
            "optimal" => SettingsSpec::Optimal,
            "auto" => SettingsSpec::Auto,
            _ => {
                if let Some(list) = rest.strip_prefix("planar=") {
                    let vals: Vec<f64> = list
                        .split(',')
                        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::spec("operator", spec, format!("cannot parse angle '{x}'"))))
                        .collect::<Result<_, _>>()?;
                    if vals.is_empty() || vals.len() % 2 != 0 {
                        return Err(CliError::spec("operator", spec, "planar angles come in (alpha, alpha') pairs"));
                    }
                    SettingsSpec::Planar(vals.chunks(2).map(|c| (c[0], c[1])).collect())
                } else if let Some(path) = rest.strip_prefix("file=") {
                    SettingsSpec::File(PathBuf::from(path))
                } else {
                    return Err(CliError::spec("operator", spec, "settings must be optimal, auto, planar=... or file=..."));
                }
            }
        };
        Ok(Self { family, settings })
    }
}

/// Settings file: planar angle pairs or general Bloch vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsFile {
    pub schema_version: u64,
    #[serde(flatten)]
    pub body: SettingsBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SettingsBody {
    Planar { angles: Vec<(f64, f64)> },
    General { n: Vec<[f64; 3]>, n_prime: Vec<[f64; 3]> },
}

impl SettingsFile {
    pub fn from_settings(s: &MeasurementSettings) -> Self {
        let body = match s.angles() {
            Some(a) => SettingsBody::Planar { angles: a.to_vec() },
            None => {
                let n = s.n_qubits();
                SettingsBody::General { n: (0..n).map(|i| s.n(i)).collect(), n_prime: (0..n).map(|i| s.n_prime(i)).collect() }
            }
        };
        Self { schema_version: crate::statefile::SCHEMA_VERSION, body }
    }

    pub fn settings(&self) -> Result<MeasurementSettings, CliError> {
        Ok(match &self.body {
            SettingsBody::Planar { angles } => MeasurementSettings::planar(angles)?,
            SettingsBody::General { n, n_prime } => MeasurementSettings::general(n.clone(), n_prime.clone())?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: Self = canonical::parse(&text, &path.display().to_string())?;
        if file.schema_version != crate::statefile::SCHEMA_VERSION {
            return Err(CliError::Schema { found: file.schema_version, expected: crate::statefile::SCHEMA_VERSION });
        }
        Ok(file)
    }
}

/// An operator together with how its settings were obtained.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub operator: BellOperator,
    pub settings: MeasurementSettings,
    pub gamma: Option<f64>,
    pub optimum: Option<SettingsOptimum>,
}

/// Mixing angle implied by the family and `--gamma`.
fn family_gamma(family: FamilyName, n: usize, gamma: Option<f64>) -> f64 {
    match family {
        FamilyName::Uffink => gamma.unwrap_or(0.0),
        FamilyName::Svetlichny => svetlichny_gamma(n),
        FamilyName::MbkPrime => FRAC_PI_2,
        FamilyName::Mbk | FamilyName::Chsh => 0.0,
    }
}

pub fn build_operator(family: FamilyName, settings: &MeasurementSettings, gamma: f64) -> Result<BellOperator, CliError> {
    Ok(match family {
        FamilyName::Mbk => mbk_operator(settings)?,
        FamilyName::MbkPrime => mbk_prime(settings)?,
        FamilyName::Uffink => uffink_operator(settings, gamma)?,
        FamilyName::Svetlichny => svetlichny_operator(settings)?,
        FamilyName::Chsh => chsh_operator(settings)?,
    })
}

pub fn resolve(spec: &OpSpec, rho: &DensityMatrix, gamma: Option<f64>, opts: &OptimizeOptions) -> Result<Resolved, CliError> {
    let n = rho.n_qubits();
    let g = family_gamma(spec.family, n, gamma);
    let (settings, optimum) = match &spec.settings {
        SettingsSpec::Optimal => (MeasurementSettings::optimal(n, g), None),
        SettingsSpec::Planar(angles) => (MeasurementSettings::planar(angles)?, None),
        SettingsSpec::File(path) => (SettingsFile::load(path)?.settings()?, None),
        SettingsSpec::Auto => {
            let opt = optimize_settings(rho, spec.family.family(g), opts)?;
            (opt.settings.clone(), Some(opt))
        }
    };
    if settings.n_qubits() != n {
        return Err(CliError::spec(
            "operator",
            spec.family.name(),
            format!("settings cover {} qubits, state has {n}", settings.n_qubits()),
        ));
    }
    // an optimized Uffink run picks its own angle unless one was given
    let gamma = match &optimum {
        Some(opt) if spec.family == FamilyName::Uffink && gamma.is_none() => opt.gamma.unwrap_or(g),
        _ => g,
    };
    let operator = build_operator(spec.family, &settings, gamma)?;
    let gamma = matches!(spec.family, FamilyName::Uffink | FamilyName::Svetlichny).then_some(gamma);
    Ok(Resolved { operator, settings, gamma, optimum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use belldist::bell::violation;
    use belldist::states::make_ghz;

    #[test]
    fn parses_specs() {
        assert_eq!(OpSpec::parse("mbk:optimal").unwrap(), OpSpec { family: FamilyName::Mbk, settings: SettingsSpec::Optimal });
        assert_eq!(OpSpec::parse("uffink").unwrap().settings, SettingsSpec::Optimal);
        assert_eq!(OpSpec::parse("chsh:planar=0,1.5,0.7,-0.7").unwrap().settings, SettingsSpec::Planar(vec![(0.0, 1.5), (0.7, -0.7)]));
        assert!(OpSpec::parse("mbk:planar=0").is_err());
        assert!(OpSpec::parse("bogus:optimal").is_err());
        assert!(OpSpec::parse("mbk:wat").is_err());
    }

    #[test]
    fn optimal_presets_saturate_ghz() {
        let opts = OptimizeOptions::default();
        for n in 2..=5 {
            let rho = make_ghz(n).unwrap();
            let top = 2f64.powf((n as f64 - 1.0) / 2.0);
            for fam in ["mbk", "mbk-prime", "uffink", "svetlichny"] {
                let r = resolve(&OpSpec::parse(fam).unwrap(), &rho, None, &opts).unwrap();
                let v = violation(&rho, &r.operator).unwrap();
                assert!((v.raw - top).abs() < 1e-12, "{fam} N={n}: {}", v.raw);
            }
        }
    }

    #[test]
    fn settings_file_round_trip() {
        let s = MeasurementSettings::optimal(3, 0.2);
        let f = SettingsFile::from_settings(&s);
        let text = canonical::to_string(&f).unwrap();
        let back: SettingsFile = canonical::parse(&text, "t").unwrap();
        assert_eq!(back.settings().unwrap(), s);
    }
}
