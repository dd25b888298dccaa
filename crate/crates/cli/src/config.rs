//! Strict TOML experiment configuration.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wcontract::pde::{FamilySpec, HeatConfig, PoissonConfig, ReactionConfig, ReactionSpec, SobolevRateConfig, VanishingConfig};
use wcontract::weights::WeightParams;
use wcontract::Boundary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Measure,
    WeightedRate,
    OptimizeWeight,
    GrowthBound,
    Mle,
    Subspace,
    Manifold,
    Symmetry,
    LimitCycle,
    PhaseLocking,
    Heat,
    ReactionDiffusion,
    Poisson,
    SobolevRate,
    VanishingOsl,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 15] = [
        Self::Measure,
        Self::WeightedRate,
        Self::OptimizeWeight,
        Self::GrowthBound,
        Self::Mle,
        Self::Subspace,
        Self::Manifold,
        Self::Symmetry,
        Self::LimitCycle,
        Self::PhaseLocking,
        Self::Heat,
        Self::ReactionDiffusion,
        Self::Poisson,
        Self::SobolevRate,
        Self::VanishingOsl,
    ];

    /// Also the name of the config section.
    pub fn name(self) -> &'static str {
        match self {
            Self::Measure => "measure",
            Self::WeightedRate => "weighted_rate",
            Self::OptimizeWeight => "optimize_weight",
            Self::GrowthBound => "growth_bound",
            Self::Mle => "mle",
            Self::Subspace => "subspace",
            Self::Manifold => "manifold",
            Self::Symmetry => "symmetry",
            Self::LimitCycle => "limit_cycle",
            Self::PhaseLocking => "phase_locking",
            Self::Heat => "heat",
            Self::ReactionDiffusion => "reaction_diffusion",
            Self::Poisson => "poisson",
            Self::SobolevRate => "sobolev_rate",
            Self::VanishingOsl => "vanishing_osl",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn default_ps() -> Vec<f64> {
    vec![1.0, 2.0, f64::INFINITY]
}

fn two() -> f64 {
    2.0
}

fn default_b() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_rate: Option<WeightedRateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize_weight: Option<OptimizeWeightSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_bound: Option<GrowthBoundSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mle: Option<MleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<SubspaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_cycle: Option<LimitCycleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_locking: Option<PhaseLockingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat: Option<HeatConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction_diffusion: Option<ReactionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson: Option<PoissonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_rate: Option<SobolevRateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanishing_osl: Option<VanishingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default = "default_ps")]
    pub p: Vec<f64>,
    /// Also evaluate the finite-difference oracle (dim ≤ 6).
    #[serde(default = "yes")]
    pub oracle: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedRateSection {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub weight: Option<WeightParams>,
    #[serde(default = "two")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeWeightSection {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "two")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthBoundSection {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub weight: Option<WeightParams>,
    #[serde(default = "two")]
    pub p: f64,
    pub u0: Vec<f64>,
    pub du0: Vec<f64>,
    /// Second initial condition for the unweighted pair bound.
    #[serde(default)]
    pub pair: Option<Vec<f64>>,
    #[serde(default = "growth_t_end")]
    pub t_end: f64,
    #[serde(default = "growth_dt")]
    pub dt: f64,
}

fn growth_t_end() -> f64 {
    5.0
}

fn growth_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleSection {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub u0: Option<Vec<f64>>,
    #[serde(default = "mle_t_end")]
    pub t_end: f64,
    #[serde(default = "mle_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub renorm_interval: f64,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_b")]
    pub b: f64,
}

fn mle_t_end() -> f64 {
    200.0
}

fn mle_dt() -> f64 {
    0.01
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubspaceSection {
    /// System matrix; defaults to α times the discrete Laplacian on n points.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Projector P onto the invariant subspace; defaults to the mean.
    pub projector: Option<Vec<Vec<f64>>>,
    pub n: usize,
    pub boundary: Boundary,
    pub alpha: f64,
    pub p: f64,
    pub samples: usize,
    pub t_end: f64,
    pub dt: f64,
    pub initial_conditions: usize,
}

impl Default for SubspaceSection {
    fn default() -> Self {
        Self { matrix: None, projector: None, n: 8, boundary: Boundary::Neumann, alpha: 1.0, p: 2.0, samples: 4, t_end: 0.5, dt: 1e-3, initial_conditions: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldSystem {
    /// Hopf oscillator on the unit circle.
    Hopf,
    /// Linear skew rotation on the unit sphere: tangent but not contracting.
    Rotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldSection {
    pub system: ManifoldSystem,
    pub omega: f64,
    /// Ambient dimension of the rotation system.
    pub dim: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub initial_radii: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for ManifoldSection {
    fn default() -> Self {
        Self {
            system: ManifoldSystem::Hopf,
            omega: 1.0,
            dim: 3,
            r_min: 0.8,
            r_max: 1.2,
            radial_samples: 5,
            angular_samples: 16,
            initial_radii: vec![0.5, 0.75, 1.5],
            t_end: 20.0,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryCase {
    /// Periodic heat equation under grid shifts; the limit is shift invariant.
    HeatShift,
    /// Pulled-back linear decay under the cubic doubling conjugacy.
    Cubic,
    /// Periodically forced scalar equation: temporal symmetry and Cauchy ratios.
    Forced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetrySection {
    pub case: SymmetryCase,
    pub n: usize,
    pub alpha: f64,
    pub samples: usize,
    pub tau: f64,
    pub periods: usize,
    pub dt: f64,
    pub u0: f64,
}

impl Default for SymmetrySection {
    fn default() -> Self {
        Self { case: SymmetryCase::HeatShift, n: 12, alpha: 0.1, samples: 5, tau: 1.0, periods: 8, dt: 0.01, u0: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitCycleSection {
    pub omega: f64,
    /// Shear s of the linear conjugacy [[1, s], [0, 1]]; 0 is the identity.
    pub shear: f64,
    /// Use the Hopf variant with an equilibrium on the loop.
    pub equilibrium: bool,
    pub r_min: f64,
    pub r_max: f64,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub initial_radii: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for LimitCycleSection {
    fn default() -> Self {
        Self {
            omega: 1.0,
            shear: 0.0,
            equilibrium: false,
            r_min: 0.8,
            r_max: 1.2,
            radial_samples: 5,
            angular_samples: 16,
            initial_radii: vec![0.5, 0.75, 1.5],
            t_end: 30.0,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseLockingSection {
    pub omegas: Vec<f64>,
    pub coupling: f64,
    /// Phase offsets θ_i; defaults to equally spaced.
    pub angles: Option<Vec<f64>>,
    /// Shear of each oscillator's linear conjugacy.
    pub shears: Vec<f64>,
    pub torus_samples: usize,
    pub initial_conditions: usize,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for PhaseLockingSection {
    fn default() -> Self {
        Self { omegas: vec![1.0; 3], coupling: 1.0, angles: None, shears: vec![0.0, 0.5, -0.4], torus_samples: 24, initial_conditions: 3, t_end: 80.0, dt: 0.01 }
    }
}

/// A configuration problem, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

/// Parses and validates a config.
pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let field = if field == "." { String::new() } else { field };
        err(field, e.into_inner().to_string().trim_end().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

struct Check<'a> {
    section: &'a str,
}

impl Check<'_> {
    fn field(&self, name: &str) -> String {
        format!("{}.{}", self.section, name)
    }

    fn require(&self, ok: bool, name: &str, msg: &str) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(err(self.field(name), format!("must be {msg}")))
        }
    }

    fn positive(&self, v: f64, name: &str) -> Result<(), ConfigError> {
        self.require(v > 0.0 && v.is_finite(), name, "a positive finite number")
    }

    fn exponent(&self, p: f64, name: &str) -> Result<(), ConfigError> {
        self.require(p >= 1.0, name, ">= 1 (inf allowed)")
    }

    fn square(&self, rows: &[Vec<f64>], name: &str) -> Result<usize, ConfigError> {
        let n = rows.len();
        self.require(n > 0 && rows.iter().all(|r| r.len() == n), name, "a nonempty square matrix")?;
        self.require(rows.iter().flatten().all(|v| v.is_finite()), name, "finite")?;
        Ok(n)
    }

    fn vector(&self, v: &[f64], n: usize, name: &str) -> Result<(), ConfigError> {
        self.require(v.len() == n, name, &format!("a vector of length {n}"))?;
        self.require(v.iter().all(|x| x.is_finite()), name, "finite")
    }

    fn weight(&self, w: &Option<WeightParams>, n: usize) -> Result<(), ConfigError> {
        let dim = match w {
            None => return Ok(()),
            Some(WeightParams::Identity { dim }) => *dim,
            Some(WeightParams::Diagonal { entries, b }) => {
                self.require(entries.iter().all(|e| e.is_finite() && *e != 0.0), "weight.entries", "finite and nonzero")?;
                if let Some(b) = b {
                    self.require(*b >= 1.0, "weight.b", ">= 1")?;
                }
                entries.len()
            }
            Some(WeightParams::ConstantMatrix { rows, .. }) => {
                self.require(!rows.is_empty() && rows.iter().all(|r| r.len() == n), "weight.rows", &format!("a nonempty matrix with {n} columns"))?;
                n
            }
            Some(WeightParams::ProjectionComplement { projector }) => {
                self.square(projector, "weight.projector")?;
                projector.len()
            }
            Some(WeightParams::MeanComplement { points, components }) => points * components,
        };
        self.require(dim == n, "weight", &format!("a weight on dimension {n}"))
    }
}

impl ExperimentConfig {
    fn present_sections(&self) -> Vec<&'static str> {
        let flags = [
            ("measure", self.measure.is_some()),
            ("weighted_rate", self.weighted_rate.is_some()),
            ("optimize_weight", self.optimize_weight.is_some()),
            ("growth_bound", self.growth_bound.is_some()),
            ("mle", self.mle.is_some()),
            ("subspace", self.subspace.is_some()),
            ("manifold", self.manifold.is_some()),
            ("symmetry", self.symmetry.is_some()),
            ("limit_cycle", self.limit_cycle.is_some()),
            ("phase_locking", self.phase_locking.is_some()),
            ("heat", self.heat.is_some()),
            ("reaction_diffusion", self.reaction_diffusion.is_some()),
            ("poisson", self.poisson.is_some()),
            ("sobolev_rate", self.sobolev_rate.is_some()),
            ("vanishing_osl", self.vanishing_osl.is_some()),
        ];
        flags.iter().filter(|(_, on)| *on).map(|(s, _)| *s).collect()
    }

    /// Checks value ranges and that only the section of the selected
    /// experiment is present.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let name = self.experiment.name();
        if let Some(other) = self.present_sections().into_iter().find(|s| *s != name) {
            return Err(err(other, format!("section [{other}] does not apply to experiment {name}")));
        }
        let c = Check { section: name };
        let missing = || err(name, format!("experiment {name} requires a [{name}] section"));
        match self.experiment {
            ExperimentKind::Measure => {
                let s = self.measure.as_ref().ok_or_else(missing)?;
                let n = c.square(&s.matrix, "matrix")?;
                c.require(!s.p.is_empty(), "p", "a nonempty list")?;
                for p in &s.p {
                    c.exponent(*p, "p")?;
                }
                if s.oracle {
                    c.require(n <= 6, "matrix", "at most 6 x 6 when oracle = true")?;
                }
            }
            ExperimentKind::WeightedRate => {
                let s = self.weighted_rate.as_ref().ok_or_else(missing)?;
                let n = c.square(&s.matrix, "matrix")?;
                c.exponent(s.p, "p")?;
                c.weight(&s.weight, n)?;
            }
            ExperimentKind::OptimizeWeight => {
                let s = self.optimize_weight.as_ref().ok_or_else(missing)?;
                c.square(&s.matrix, "matrix")?;
                c.exponent(s.p, "p")?;
                c.require(s.b >= 1.0 && s.b.is_finite(), "b", ">= 1 and finite")?;
            }
            ExperimentKind::GrowthBound => {
                let s = self.growth_bound.as_ref().ok_or_else(missing)?;
                let n = c.square(&s.matrix, "matrix")?;
                c.exponent(s.p, "p")?;
                c.weight(&s.weight, n)?;
                c.vector(&s.u0, n, "u0")?;
                c.vector(&s.du0, n, "du0")?;
                if let Some(pair) = &s.pair {
                    c.vector(pair, n, "pair")?;
                }
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::Mle => {
                let s = self.mle.as_ref().ok_or_else(missing)?;
                let n = c.square(&s.matrix, "matrix")?;
                if let Some(u0) = &s.u0 {
                    c.vector(u0, n, "u0")?;
                }
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
                c.positive(s.renorm_interval, "renorm_interval")?;
                c.require(s.renorm_interval < s.t_end, "renorm_interval", "smaller than t_end")?;
                c.exponent(s.p, "p")?;
                c.require(s.b >= 1.0 && s.b.is_finite(), "b", ">= 1 and finite")?;
            }
            ExperimentKind::Subspace => {
                let s = self.subspace.clone().unwrap_or_default();
                let n = match &s.matrix {
                    Some(m) => c.square(m, "matrix")?,
                    None => {
                        c.require(s.n >= 3, "n", ">= 3")?;
                        c.positive(s.alpha, "alpha")?;
                        s.n
                    }
                };
                if let Some(p) = &s.projector {
                    c.require(c.square(p, "projector")? == n, "projector", &format!("{n} x {n}"))?;
                }
                c.exponent(s.p, "p")?;
                c.require(s.samples >= 1, "samples", ">= 1")?;
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::Manifold => {
                let s = self.manifold.clone().unwrap_or_default();
                c.require(s.dim >= 2, "dim", ">= 2")?;
                c.require(0.0 < s.r_min && s.r_min <= s.r_max, "r_min", "positive and at most r_max")?;
                c.require(s.radial_samples >= 1 && s.angular_samples >= 1, "radial_samples", "at least 1 (with angular_samples)")?;
                c.require(s.initial_radii.iter().all(|r| *r > 0.0 && *r != 1.0), "initial_radii", "positive and off the unit circle")?;
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::Symmetry => {
                let s = self.symmetry.clone().unwrap_or_default();
                c.require(s.n >= 3, "n", ">= 3")?;
                c.positive(s.alpha, "alpha")?;
                c.require(s.samples >= 1, "samples", ">= 1")?;
                c.positive(s.tau, "tau")?;
                c.require(s.periods >= 2, "periods", ">= 2")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::LimitCycle => {
                let s = self.limit_cycle.clone().unwrap_or_default();
                c.require(s.omega != 0.0 && s.omega.is_finite(), "omega", "nonzero and finite")?;
                c.require(0.0 < s.r_min && s.r_min <= s.r_max, "r_min", "positive and at most r_max")?;
                c.require(s.radial_samples >= 1 && s.angular_samples >= 1, "radial_samples", "at least 1 (with angular_samples)")?;
                c.require(s.initial_radii.iter().all(|r| *r > 0.0 && *r != 1.0), "initial_radii", "positive and off the unit circle")?;
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::PhaseLocking => {
                let s = self.phase_locking.clone().unwrap_or_default();
                let n = s.omegas.len();
                c.require(n >= 1, "omegas", "a nonempty list")?;
                c.require(s.shears.len() == n, "shears", &format!("a list of length {n}"))?;
                if let Some(a) = &s.angles {
                    c.require(a.len() == n, "angles", &format!("a list of length {n}"))?;
                }
                c.require(s.coupling >= 0.0 && s.coupling.is_finite(), "coupling", "nonnegative and finite")?;
                c.require(s.torus_samples >= 1, "torus_samples", ">= 1")?;
                c.require(s.initial_conditions >= 1, "initial_conditions", ">= 1")?;
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::Heat => {
                let s = self.heat.clone().unwrap_or_default();
                c.require((1..=2).contains(&s.dims), "dims", "1 or 2")?;
                c.require(s.n >= 4, "n", ">= 4")?;
                c.positive(s.alpha, "alpha")?;
                c.positive(s.t_end, "t_end")?;
                c.require(s.fit_start >= 0.0 && s.fit_start < s.t_end, "fit_start", "in [0, t_end)")?;
                c.require(s.cfl > 0.0 && s.cfl <= 1.0, "cfl", "in (0, 1]")?;
                c.positive(s.output_rate, "output_rate")?;
            }
            ExperimentKind::ReactionDiffusion => {
                let s = self.reaction_diffusion.clone().unwrap_or_default();
                let m = match s.reaction {
                    ReactionSpec::Zero { components } => components,
                    ReactionSpec::AllenCahn => 1,
                    ReactionSpec::ActivatorInhibitor { .. } => 2,
                };
                c.require((1..=2).contains(&s.dims), "dims", "1 or 2")?;
                c.require(s.n >= 3, "n", ">= 3")?;
                c.require(m >= 1, "reaction.components", ">= 1")?;
                c.require(s.alphas.len() == m && s.alphas.iter().all(|a| *a >= 0.0), "alphas", &format!("{m} nonnegative diffusivities"))?;
                c.positive(s.t_end, "t_end")?;
                c.require(s.fit_start >= 0.0 && s.fit_start < s.t_end, "fit_start", "in [0, t_end)")?;
                c.require(s.cfl > 0.0 && s.cfl <= 1.0, "cfl", "in (0, 1]")?;
                c.positive(s.amplitude, "amplitude")?;
                c.positive(s.sample_box, "sample_box")?;
                c.positive(s.output_rate, "output_rate")?;
            }
            ExperimentKind::Poisson => {
                let s = self.poisson.clone().unwrap_or_default();
                c.require((1..=2).contains(&s.dims), "dims", "1 or 2")?;
                c.require(s.n >= 3, "n", ">= 3")?;
                c.require(s.c.is_finite(), "c", "finite")?;
                c.positive(s.tol, "tol")?;
                c.require(s.runs >= 1, "runs", ">= 1")?;
                c.require(s.cfl > 0.0 && s.cfl <= 1.0, "cfl", "in (0, 1]")?;
                c.positive(s.max_time, "max_time")?;
                c.require(s.refinement.iter().all(|n| *n >= 3), "refinement", "grid sizes >= 3")?;
            }
            ExperimentKind::SobolevRate => {
                let s = self.sobolev_rate.clone().unwrap_or_default();
                c.require(s.n >= 4, "n", ">= 4")?;
                c.positive(s.alpha, "alpha")?;
                c.require(s.eps >= 0.0, "eps", ">= 0")?;
                c.exponent(s.p, "p")?;
                c.require(!s.orders.is_empty() && s.orders.iter().all(|k| *k <= 2), "orders", "a nonempty list of orders in 0..=2")?;
                c.require(s.samples >= 1, "samples", ">= 1")?;
                c.positive(s.t_end, "t_end")?;
                c.positive(s.dt, "dt")?;
            }
            ExperimentKind::VanishingOsl => {
                let s = self.vanishing_osl.clone().unwrap_or_default();
                c.require(s.n >= 8, "n", ">= 8")?;
                c.require(s.schedule.len() >= 4, "schedule", "at least 4 levels")?;
                c.require(s.schedule.windows(2).all(|w| w[1] < w[0]) && s.schedule.iter().all(|e| *e >= 0.0), "schedule", "strictly decreasing and nonnegative")?;
                if let FamilySpec::Frozen { eps } = s.family {
                    c.require(eps >= 0.0, "family.eps", ">= 0")?;
                }
                c.exponent(s.p, "p")?;
                c.require(s.p.is_finite(), "p", "finite")?;
                c.positive(s.t_end, "t_end")?;
                c.require(s.output_dt > 0.0 && s.output_dt <= s.t_end, "output_dt", "in (0, t_end]")?;
                c.require(s.cfl > 0.0 && s.cfl <= 1.0, "cfl", "in (0, 1]")?;
                c.require(s.test_functions >= 1, "test_functions", ">= 1")?;
                c.require(s.rate_samples >= 1, "rate_samples", ">= 1")?;
                c.positive(s.shift_horizon, "shift_horizon")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_heat() {
        let cfg = parse("experiment = \"heat\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Heat);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse("experiment = \"heat\"\n[heat]\nnn = 3\n").unwrap_err();
        assert!(e.to_string().contains("nn"), "{e}");
    }

    #[test]
    fn negative_size_names_field() {
        let e = parse("experiment = \"heat\"\n[heat]\nn = -4\n").unwrap_err();
        assert_eq!(e.field, "heat.n");
        let e = parse("experiment = \"heat\"\n[heat]\nn = 2\n").unwrap_err();
        assert_eq!(e.field, "heat.n");
    }

    #[test]
    fn foreign_section_rejected() {
        let e = parse("experiment = \"heat\"\n[poisson]\nn = 8\n").unwrap_err();
        assert_eq!(e.field, "poisson");
    }

    #[test]
    fn infinite_exponent_parses() {
        let cfg = parse("experiment = \"measure\"\n[measure]\nmatrix = [[-1.0, 2.0], [0.0, -3.0]]\np = [1, 2, inf]\n").unwrap();
        assert!(cfg.measure.unwrap().p[2].is_infinite());
    }

    #[test]
    fn weight_dimension_checked() {
        let e = parse("experiment = \"weighted_rate\"\n[weighted_rate]\nmatrix = [[-1.0, 0.0], [0.0, -1.0]]\nweight = { kind = \"diagonal\", entries = [1.0, 2.0, 3.0] }\n").unwrap_err();
        assert_eq!(e.field, "weighted_rate.weight");
    }
}
