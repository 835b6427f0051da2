//! Experiment configuration read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use auxma::OperatorKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Linfty,
    EntropyEnergy,
    Stability,
    Green,
    Diameter,
    Symplectic,
    DegiorgiSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Linfty,
        Experiment::EntropyEnergy,
        Experiment::Stability,
        Experiment::Green,
        Experiment::Diameter,
        Experiment::Symplectic,
        Experiment::DegiorgiSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Linfty => "linfty",
            Experiment::EntropyEnergy => "entropy_energy",
            Experiment::Stability => "stability",
            Experiment::Green => "green",
            Experiment::Diameter => "diameter",
            Experiment::Symplectic => "symplectic",
            Experiment::DegiorgiSuite => "degiorgi_suite",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::Linfty => "solve f(λ) = k, check Φ <= 0 and the De Giorgi L∞ bound",
            Experiment::EntropyEnergy => "entropy, Trudinger moment and Young split of a solved instance",
            Experiment::Stability => "sup|u - v| against ‖e^f - e^h‖ along an interpolating sweep",
            Experiment::Green => "one Green's function slice with norms and conservation residual",
            Experiment::Diameter => "gradient-of-Green diameter bound against the shortest-path diameter",
            Experiment::Symplectic => "almost-Kähler Calabi-Yau pipeline on a conjugated structure",
            Experiment::DegiorgiSuite => "soundness of the vanishing and lower bounds on random profiles",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// `F ≡ 0`.
    Zero,
    /// `amplitude · Π cos 2πx_i` over the real axes.
    Cosine,
    /// Seeded sum of low Fourier modes scaled to sup norm `amplitude`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub recipe: Recipe,
    pub amplitude: f64,
    pub modes: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { recipe: Recipe::Random, amplitude: 0.3, modes: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solve: f64,
    pub phi: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solve: 1e-10, phi: auxma::comparison::PHI_TOLERANCE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinftyConfig {
    /// Levels `s` as fractions of `sup|φ|`.
    pub level_fractions: Vec<f64>,
    pub ell: f64,
    pub a: f64,
    /// Entropy exponent; `2n` when absent.
    pub p: Option<f64>,
    pub profile_levels: usize,
}

impl Default for LinftyConfig {
    fn default() -> Self {
        Self { level_fractions: vec![0.0, 0.25, 0.5], ell: 32.0, a: 1.0, p: None, profile_levels: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    /// Entropy exponent; `n + 1` when absent.
    pub p: Option<f64>,
    /// Entropy bound; twice the larger endpoint entropy plus one when absent.
    pub k_bound: Option<f64>,
    pub levels: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { p: None, k_bound: None, levels: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct GreenConfig {
    /// Node index of the pole.
    pub source: usize,
    /// Norm exponents; dimension defaults when absent.
    pub q: Option<f64>,
    pub s: Option<f64>,
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymplecticConfig {
    /// Amplitude of the conformal exponent of `g̃`.
    pub delta: f64,
    /// Amplitude of the diagonal conjugation of `J`.
    pub stretch: f64,
    pub r0: f64,
    pub k_bound: Option<f64>,
    pub epsilon_scale: f64,
}

impl Default for SymplecticConfig {
    fn default() -> Self {
        Self { delta: 0.03, stretch: 0.1, r0: 0.2, k_bound: None, epsilon_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegiorgiConfig {
    pub profiles: usize,
    pub samples: usize,
}

impl Default for DegiorgiConfig {
    fn default() -> Self {
        Self { profiles: 1000, samples: 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    /// Complex dimension.
    pub n: usize,
    /// Nodes per real axis.
    pub size: usize,
    pub seed: u64,
    pub operator: OperatorKind,
    pub density: DensityConfig,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
    pub linfty: LinftyConfig,
    pub stability: StabilityConfig,
    pub green: GreenConfig,
    pub symplectic: SymplecticConfig,
    pub degiorgi: DegiorgiConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: 1,
            size: 32,
            seed: 0,
            operator: OperatorKind::MongeAmpere,
            density: DensityConfig::default(),
            tolerances: Tolerances::default(),
            output_dir: None,
            linfty: LinftyConfig::default(),
            stability: StabilityConfig::default(),
            green: GreenConfig::default(),
            symplectic: SymplecticConfig::default(),
            degiorgi: DegiorgiConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn field(name: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("field `{name}`: {msg}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 || self.n > 3 {
            return Err(field("n", format!("complex dimension must be 1, 2 or 3, got {}", self.n)));
        }
        if self.size < 4 || !self.size.is_multiple_of(2) {
            return Err(field("size", format!("must be even and at least 4, got {}", self.size)));
        }
        match self.operator {
            OperatorKind::Hessian { k } if k == 0 || k > self.n => {
                return Err(field("operator.k", format!("need 1 <= k <= n = {}, got {k}", self.n)))
            }
            OperatorKind::PMongeAmpere { p } if p == 0 || p > self.n => {
                return Err(field("operator.p", format!("need 1 <= p <= n = {}, got {p}", self.n)))
            }
            _ => {}
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field(name, format!("must be positive and finite, got {v}")))
            }
        };
        if !(self.density.amplitude >= 0.0 && self.density.amplitude.is_finite()) {
            return Err(field("density.amplitude", "must be nonnegative and finite"));
        }
        if self.density.modes == 0 {
            return Err(field("density.modes", "must be positive"));
        }
        positive("tolerances.solve", self.tolerances.solve)?;
        positive("tolerances.phi", self.tolerances.phi)?;
        positive("linfty.ell", self.linfty.ell)?;
        positive("linfty.a", self.linfty.a)?;
        if self.linfty.level_fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
            return Err(field("linfty.level_fractions", "entries must lie in [0, 1)"));
        }
        if let Some(p) = self.linfty.p {
            if !(p > self.n as f64) {
                return Err(field("linfty.p", format!("must exceed n = {}, got {p}", self.n)));
            }
        }
        if self.linfty.profile_levels < 2 {
            return Err(field("linfty.profile_levels", "need at least two levels"));
        }
        if let Some(p) = self.stability.p {
            if !(p > self.n as f64) {
                return Err(field("stability.p", format!("must exceed n = {}, got {p}", self.n)));
            }
        }
        if let Some(k) = self.stability.k_bound {
            positive("stability.k_bound", k)?;
        }
        if self.stability.levels < 2 {
            return Err(field("stability.levels", "need at least two levels"));
        }
        if self.green.source >= self.size.pow(2 * self.n as u32) {
            return Err(field("green.source", "node index outside the grid"));
        }
        if let Some(q) = self.green.q {
            positive("green.q", q)?;
        }
        if let Some(s) = self.green.s {
            positive("green.s", s)?;
        }
        positive("symplectic.r0", self.symplectic.r0)?;
        positive("symplectic.epsilon_scale", self.symplectic.epsilon_scale)?;
        if self.degiorgi.profiles == 0 || self.degiorgi.samples < 2 {
            return Err(field("degiorgi", "need at least one profile with two samples"));
        }
        Ok(())
    }

    /// Applies the subcommand and seed override and checks consistency.
    pub fn resolve(mut self, experiment: Experiment, seed: Option<u64>) -> Result<Self, ConfigError> {
        if let Some(declared) = self.experiment {
            if declared != experiment {
                return Err(field("experiment", format!("config is for `{declared}`, not `{experiment}`")));
            }
        }
        self.experiment = Some(experiment);
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if experiment == Experiment::Symplectic && self.n != 1 {
            return Err(field("n", "the symplectic pipeline runs on the two-torus, set n = 1"));
        }
        self.validate()?;
        Ok(self)
    }
}
