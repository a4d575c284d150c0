//! Run configuration: one TOML file, one section per subcommand.

use std::path::{Path, PathBuf};

use hrlab::quotients::{PnProblem, Problem};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub format_version: u32,
    /// Root seed; `--seed` overrides it.
    pub seed: u64,
    pub verify_1d: Verify1d,
    pub verify_decomp: VerifyDecomp,
    pub constants: Constants,
    pub quotient: Quotient,
    pub degeneracy: Degeneracy,
    pub stress: Stress,
    pub sweep: Sweep,
    pub report: Report,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            seed: 20_240_501,
            verify_1d: Verify1d::default(),
            verify_decomp: VerifyDecomp::default(),
            constants: Constants::default(),
            quotient: Quotient::default(),
            degeneracy: Degeneracy::default(),
            stress: Stress::default(),
            sweep: Sweep::default(),
            report: Report::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Verify1d {
    /// Randomized operator-bound cases.
    pub cases: usize,
    pub exponents: Vec<f64>,
    pub corpus_size: usize,
    pub identity_profiles: usize,
    /// Profiles per point of the derivative-quotient grid.
    pub grid_profiles: usize,
    pub tol: f64,
    pub equality_tol: f64,
}

impl Default for Verify1d {
    fn default() -> Self {
        Self {
            cases: 500,
            exponents: vec![1.0, 1.5, 2.0, 3.0],
            corpus_size: 100,
            identity_profiles: 200,
            grid_profiles: 40,
            tol: 1e-8,
            equality_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyDecomp {
    pub dims: Vec<usize>,
    pub weights: Vec<f64>,
    /// Random fields per family and (N, a).
    pub count: usize,
    pub radial_max_dim: usize,
    pub bochner_fields: usize,
    pub tol: f64,
    pub bochner_tol: f64,
}

impl Default for VerifyDecomp {
    fn default() -> Self {
        Self {
            dims: vec![2, 3],
            weights: vec![-1.0, 0.0, 0.5],
            count: 20,
            radial_max_dim: 6,
            bochner_fields: 100,
            tol: 1e-6,
            bochner_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub dims: Vec<usize>,
    pub p: f64,
    pub weights: Vec<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            dims: vec![3, 4, 5],
            p: 2.0,
            weights: vec![-1.0, 0.0, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quotient {
    /// `(problem, N)` pairs for the p = 2 eigenproblems.
    pub sharp: Vec<(Problem, usize)>,
    /// Relative shortfall allowed below each catalog value, parallel to `sharp`.
    pub sharp_tol: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
    pub degree: usize,
    pub ell_max: usize,
    pub critical: Vec<PnProblem>,
    pub critical_dims: Vec<usize>,
    pub weight: f64,
    pub budget: usize,
    pub starts: usize,
}

impl Default for Quotient {
    fn default() -> Self {
        Self {
            sharp: vec![
                (Problem::Hardy, 3),
                (Problem::Rellich, 5),
                (Problem::HardyRellich, 5),
                (Problem::HardyRellich, 4),
                (Problem::HardyRellich, 3),
            ],
            sharp_tol: vec![0.03, 0.05, 0.05, 0.05, 0.05],
            r_min: 1e-3,
            r_max: 1e3,
            per_decade: 21,
            degree: 5,
            ell_max: 3,
            critical: vec![PnProblem::ThmVsSurrogate, PnProblem::ThmVsLap, PnProblem::ThmVsHessExact],
            critical_dims: vec![2, 3],
            weight: 0.0,
            budget: 2000,
            starts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Degeneracy {
    /// Radii are `2^k` for `k` in `k_min..=k_max`.
    pub k_min: i32,
    pub k_max: i32,
    pub degree: usize,
    pub final_max: f64,
    pub floor_min: f64,
}

impl Default for Degeneracy {
    fn default() -> Self {
        Self {
            k_min: 4,
            k_max: 12,
            degree: 5,
            final_max: 0.1,
            floor_min: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stress {
    pub k_min: i32,
    pub k_max: i32,
    pub degree: usize,
    pub growth_min: f64,
    pub spread_max: f64,
    pub tol: f64,
}

impl Default for Stress {
    fn default() -> Self {
        Self {
            k_min: 4,
            k_max: 12,
            degree: 5,
            growth_min: 3.0,
            spread_max: 2.0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    RandomRadial,
    RandomSeparable,
    HarmonicPlateau,
    RellichDegeneracy,
    NearExtremalHardy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub dims: Vec<usize>,
    pub weights: Vec<f64>,
    pub families: Vec<FamilyKind>,
    pub count: usize,
    pub spans: usize,
    pub degree: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub ell_max: usize,
    pub radii: Vec<f64>,
    pub tol: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            dims: vec![2, 3],
            weights: vec![-1.0, 0.0, 0.5],
            families: vec![
                FamilyKind::RandomRadial,
                FamilyKind::RandomSeparable,
                FamilyKind::HarmonicPlateau,
                FamilyKind::RellichDegeneracy,
                FamilyKind::NearExtremalHardy,
            ],
            count: 10,
            spans: 12,
            degree: 5,
            r_min: 0.1,
            r_max: 10.0,
            ell_max: 3,
            radii: vec![16.0, 256.0, 4096.0],
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Report {
    /// CSV or JSON artifacts to aggregate; empty means every CSV in the output directory.
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let raw: toml::Table = toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        match raw.get("format_version").and_then(|v| v.as_integer()) {
            Some(v) if v == FORMAT_VERSION as i64 => {}
            Some(v) => {
                return Err(CliError::Config {
                    path: origin.to_path_buf(),
                    message: format!("format_version {v} is not supported (expected {FORMAT_VERSION})"),
                })
            }
            None => {
                return Err(CliError::Config {
                    path: origin.to_path_buf(),
                    message: "missing integer key `format_version`".into(),
                })
            }
        }
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if cfg.quotient.sharp.len() != cfg.quotient.sharp_tol.len() {
            return Err(CliError::Config {
                path: origin.to_path_buf(),
                message: "quotient.sharp and quotient.sharp_tol differ in length".into(),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Canonical text used for the config hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.canonical(), Path::new("x")).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let err = RunConfig::parse("format_version = 1\n[stress]\nk_mix = 3\n", Path::new("c.toml"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("k_mix"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn checks_format_version() {
        assert!(RunConfig::parse("format_version = 2\n", Path::new("x")).is_err());
        assert!(RunConfig::parse("[stress]\nk_min = 3\n", Path::new("x")).is_err());
        let cfg = RunConfig::parse("format_version = 1\n[stress]\nk_min = 3\n", Path::new("x")).unwrap();
        assert_eq!(cfg.stress.k_min, 3);
        assert_eq!(cfg.stress.k_max, 12);
    }
}
