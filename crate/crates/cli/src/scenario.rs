//! Scenario files: what to build and which checks to run.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use magtorus::ansatz::{build_power_family, omega_raw};
use magtorus::fields::{preset, random_trig, ModeCoeff};
use magtorus::flow::StepControl;
use magtorus::{Ansatz, Field, MagneticSystem, SamplingGrid, TorusGeometry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub geometry: Option<TorusGeometry>,
    /// Degree `N`; implied by `family` when that is given.
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub lambda: Option<FieldSpec>,
    /// `u_k`, `v_k` for `k = 0..N-1`; the top coefficient is `Λ^{N/2}`.
    #[serde(default)]
    pub coefficients: Vec<CoefficientSpec>,
    /// Exact family `F = (2A(y) + 2√Λ(y) cos φ)^N` with `Ω = -A'(y)`.
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub omega: Option<OmegaSpec>,
    #[serde(default)]
    pub grid: Option<[usize; 2]>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Checks run by `verify`; all residual checks when absent.
    #[serde(default)]
    pub checks: Option<Vec<Check>>,
    #[serde(default)]
    pub trajectories: Vec<TrajectorySpec>,
    /// State vector for `assemble`.
    #[serde(default)]
    pub at: Option<Vec<f64>>,
    /// Seed for `random` field specs, overridden by `--seed`.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Const(f64),
    Trig(Vec<ModeCoeff>),
    Preset {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Random {
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default = "default_wave")]
        max_wave: i32,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn default_modes() -> usize {
    4
}

fn default_wave() -> i32 {
    2
}

fn default_amplitude() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub k: usize,
    pub u: FieldSpec,
    #[serde(default)]
    pub v: Option<FieldSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default = "one")]
    pub degree: usize,
    pub lambda: FieldSpec,
    pub a: FieldSpec,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaKeyword {
    /// From the top coefficient pair.
    Derive,
    /// `-A'(y)` of the exact family.
    Family,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Keyword(OmegaKeyword),
    Field(FieldSpec),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_residual")]
    pub residual: f64,
    #[serde(default = "default_drift")]
    pub drift: f64,
}

fn default_residual() -> f64 {
    1e-10
}

fn default_drift() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: default_residual(),
            drift: default_drift(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Stationarity,
    Harmonics,
    Constraint,
    Conservation,
    Certificate,
    OmegaEquivalence,
    Drift,
}

impl Check {
    pub const RESIDUAL_CHECKS: [Check; 6] = [
        Check::Stationarity,
        Check::Harmonics,
        Check::Constraint,
        Check::Conservation,
        Check::Certificate,
        Check::OmegaEquivalence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Stationarity => "stationarity",
            Check::Harmonics => "harmonics",
            Check::Constraint => "constraint",
            Check::Conservation => "conservation",
            Check::Certificate => "certificate",
            Check::OmegaEquivalence => "omega_equivalence",
            Check::Drift => "drift",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub name: String,
    /// `(x, y, φ)`.
    pub start: [f64; 3],
    pub t_end: f64,
    #[serde(default)]
    pub step: Option<StepSpec>,
    #[serde(default)]
    pub output_interval: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Fixed(f64),
    Adaptive(f64),
}

impl StepSpec {
    pub fn control(self) -> StepControl {
        match self {
            StepSpec::Fixed(dt) => StepControl::Fixed { dt },
            StepSpec::Adaptive(atol) => StepControl::Adaptive { atol },
        }
    }
}

/// Everything built from a scenario.
pub struct Built {
    pub geometry: TorusGeometry,
    pub ansatz: Option<Ansatz>,
    pub system: Option<MagneticSystem>,
    pub grid: SamplingGrid,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid scenario: {e}")))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            )));
        }
        Ok(s)
    }

    pub fn degree(&self) -> Option<usize> {
        self.family.as_ref().map(|f| f.degree).or(self.degree)
    }

    pub fn build(&self, seed: Option<u64>, grid: Option<[usize; 2]>) -> Result<Built, CliError> {
        let geometry = match self.geometry {
            Some(g) => TorusGeometry::new(g.period_x, g.period_y)?,
            None => TorusGeometry::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed.or(self.seed).unwrap_or(0));
        let mut field = |spec: &FieldSpec| spec.build(geometry, &mut rng);
        let [nx, ny] = grid.or(self.grid).unwrap_or([64, 64]);
        let grid = SamplingGrid::new(nx, ny)?;

        let (ansatz, family_system) = match &self.family {
            Some(fam) => {
                if self.lambda.is_some() || !self.coefficients.is_empty() || self.degree.is_some_and(|d| d != fam.degree)
                {
                    return Err(CliError::Input(
                        "`family` excludes `lambda`, `coefficients` and a different `degree`".into(),
                    ));
                }
                let lambda = field(&fam.lambda)?;
                let a = field(&fam.a)?;
                let (ansatz, system) = build_power_family(&lambda, &a, fam.degree)?;
                (Some(ansatz), Some(system))
            }
            None => {
                let lambda = match &self.lambda {
                    Some(l) => Some(field(l)?),
                    None => None,
                };
                match (lambda, self.degree) {
                    (Some(lambda), Some(n)) => {
                        let (u, v) = self.coefficient_fields(n, geometry, &mut field)?;
                        (Some(Ansatz::new(lambda, u, v)?), None)
                    }
                    (Some(lambda), None) if self.coefficients.is_empty() => {
                        let omega = match &self.omega {
                            Some(OmegaSpec::Field(spec)) => field(spec)?,
                            _ => {
                                return Err(CliError::Input(
                                    "a scenario without an ansatz needs an explicit `omega` field".into(),
                                ))
                            }
                        };
                        let system = MagneticSystem::with_field(lambda, omega)?;
                        return Ok(Built {
                            geometry,
                            ansatz: None,
                            system: Some(system),
                            grid,
                        });
                    }
                    (None, _) if self.degree.is_none() && self.coefficients.is_empty() => (None, None),
                    _ => {
                        return Err(CliError::Input(
                            "an ansatz needs `degree`, `lambda` and `coefficients` (or a `family`)".into(),
                        ))
                    }
                }
            }
        };

        let system = match (&self.omega, &ansatz) {
            (None, _) if family_system.is_some() => family_system,
            (Some(OmegaSpec::Keyword(OmegaKeyword::Family)), _) => match family_system {
                Some(s) => Some(s),
                None => return Err(CliError::Input("`omega: \"family\"` needs a `family`".into())),
            },
            (Some(OmegaSpec::Keyword(OmegaKeyword::Derive)) | None, Some(a)) => {
                Some(MagneticSystem::new(a.lambda().clone(), Arc::new(omega_raw(a)?))?)
            }
            (Some(OmegaSpec::Field(spec)), Some(a)) => Some(MagneticSystem::with_field(a.lambda().clone(), field(spec)?)?),
            _ => None,
        };
        Ok(Built {
            geometry,
            ansatz,
            system,
            grid,
        })
    }

    fn coefficient_fields(
        &self,
        n: usize,
        geometry: TorusGeometry,
        field: &mut impl FnMut(&FieldSpec) -> Result<Field, CliError>,
    ) -> Result<(Vec<Field>, Vec<Field>), CliError> {
        if n == 0 {
            return Err(CliError::Input("degree must be at least 1".into()));
        }
        let mut u = vec![None; n];
        let mut v = vec![None; n];
        for c in &self.coefficients {
            if c.k >= n {
                return Err(CliError::Input(format!(
                    "coefficient k = {} out of range: give k = 0..{} (the top one is fixed)",
                    c.k,
                    n - 1
                )));
            }
            if u[c.k].is_some() {
                return Err(CliError::Input(format!("coefficient k = {} given twice", c.k)));
            }
            if c.k == 0 && c.v.is_some() {
                return Err(CliError::Input("a_0 is real: coefficient k = 0 takes no `v`".into()));
            }
            u[c.k] = Some(field(&c.u)?);
            v[c.k] = match &c.v {
                Some(spec) => Some(field(spec)?),
                None => None,
            };
        }
        let u = u
            .into_iter()
            .enumerate()
            .map(|(k, f)| f.ok_or_else(|| CliError::Input(format!("missing coefficient k = {k}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let v = v
            .into_iter()
            .skip(1)
            .map(|f| f.unwrap_or_else(|| Field::zero(geometry)))
            .collect();
        Ok((u, v))
    }
}

impl FieldSpec {
    pub fn build(&self, geometry: TorusGeometry, rng: &mut ChaCha8Rng) -> Result<Field, CliError> {
        Ok(match self {
            FieldSpec::Const(v) => Field::constant(*v, geometry),
            FieldSpec::Trig(modes) => Field::trig(modes, geometry)?,
            FieldSpec::Preset { name, params } => preset(name, params, geometry)?,
            FieldSpec::Random {
                modes,
                max_wave,
                amplitude,
                offset,
            } => {
                if *modes == 0 || *max_wave < 1 || !amplitude.is_finite() {
                    return Err(CliError::Input("random field needs modes >= 1 and max_wave >= 1".into()));
                }
                random_trig(rng, *modes, *max_wave, *amplitude, *offset, geometry)
            }
        })
    }
}
