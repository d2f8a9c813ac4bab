//! Experiment configuration.
//!
//! A config is a TOML file with top-level `seed` and the sections
//! `physical`, `friction`, `gains`, `initial`, `solver`, `verify` and
//! `output`; a file ending in `.json` is read as JSON with the same shape.
//! Every section except `physical` has defaults. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{Gains, SuggestHints, Target};
use crate::error::{invalid, Error, Result};
use crate::friction::FrictionModel;
use crate::solver::{InitialKind, InitialSpec, SolverConfig};
use crate::state::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSpec {
    #[serde(default = "default_g")]
    pub g: f64,
    pub mu: f64,
    pub length: f64,
    pub mass: f64,
    pub h_max: f64,
}

fn default_g() -> f64 {
    9.81
}

impl PhysicalSpec {
    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.g, self.mu, self.length, self.mass, self.h_max)
    }
}

/// Friction model by name; `velocity_independent` takes `μ` from the
/// physical section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrictionSpec {
    // A struct variant so that stray keys are rejected.
    None {},
    ConstAbsV {
        cf: f64,
    },
    LinearLevel {
        r0: f64,
        r1: f64,
    },
    ChannelWidth {
        r: f64,
        b: f64,
    },
    VelocityIndependent {
        c: f64,
    },
    /// `κ = B·(1 + tanh(|v|/v_scale))/2`.
    Bounded {
        bound: f64,
        #[serde(default = "default_v_scale")]
        v_scale: f64,
    },
    /// `κ ≡ B`.
    BoundedConstant {
        bound: f64,
    },
}

fn default_v_scale() -> f64 {
    1.0
}

impl FrictionSpec {
    pub fn model(&self, params: &PhysicalParams) -> Result<FrictionModel> {
        match *self {
            FrictionSpec::None {} => Ok(FrictionModel::Frictionless),
            FrictionSpec::ConstAbsV { cf } => FrictionModel::const_abs_v(cf),
            FrictionSpec::LinearLevel { r0, r1 } => FrictionModel::linear_level(r0, r1),
            FrictionSpec::ChannelWidth { r, b } => FrictionModel::channel_width(r, b),
            FrictionSpec::VelocityIndependent { c } => {
                FrictionModel::velocity_independent(c, params.mu())
            }
            FrictionSpec::Bounded { bound, v_scale } => FrictionModel::bounded_tanh(bound, v_scale),
            FrictionSpec::BoundedConstant { bound } => FrictionModel::bounded_constant(bound),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Gains given verbatim.
    #[default]
    Explicit,
    /// Gains from the suggestion routine for the requested theorem.
    Suggest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremChoice {
    Theorem1,
    Theorem2,
}

/// Gains, either explicit or suggested, and the certificate to check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSpec {
    pub mode: GainMode,
    /// Certificate to check; required in suggest mode.
    pub theorem: Option<TheoremChoice>,
    pub omega: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    /// Radius of the certified sublevel set; explicit mode only.
    pub r: Option<f64>,
    pub sigma: Option<f64>,
    pub k: Option<f64>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub hints: SuggestHints,
}

impl Default for GainSpec {
    fn default() -> Self {
        GainSpec {
            mode: GainMode::Explicit,
            theorem: None,
            omega: None,
            omega1: None,
            omega2: None,
            r: None,
            sigma: Some(1.0),
            k: Some(0.05),
            q: Some(1.0),
            delta: Some(1.0),
            beta: Some(1.0),
            gamma: Some(1.0),
            hints: SuggestHints::default(),
        }
    }
}

/// Resolved certification request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainPlan {
    Explicit {
        gains: Gains,
        certify: Option<(Target, f64)>,
    },
    Suggest {
        target: Target,
        hints: SuggestHints,
    },
}

fn need(name: &'static str, x: Option<f64>) -> Result<f64> {
    x.ok_or_else(|| invalid(name, "required by the [gains] section"))
}

impl GainSpec {
    fn target(&self) -> Result<Option<Target>> {
        Ok(match self.theorem {
            None => None,
            Some(TheoremChoice::Theorem1) => Some(Target::Theorem1 {
                omega: need("omega", self.omega)?,
            }),
            Some(TheoremChoice::Theorem2) => Some(Target::Theorem2 {
                omega1: need("omega1", self.omega1)?,
                omega2: need("omega2", self.omega2)?,
            }),
        })
    }

    pub fn plan(&self) -> Result<GainPlan> {
        let target = self.target()?;
        match self.mode {
            GainMode::Suggest => Ok(GainPlan::Suggest {
                target: target
                    .ok_or_else(|| invalid("theorem", "suggest mode needs a target theorem"))?,
                hints: self.hints,
            }),
            GainMode::Explicit => {
                let gains = Gains::new(
                    need("sigma", self.sigma)?,
                    need("k", self.k)?,
                    need("q", self.q)?,
                    need("delta", self.delta)?,
                    need("beta", self.beta)?,
                    need("gamma", self.gamma)?,
                )?;
                let certify = match target {
                    Some(t) => Some((t, need("r", self.r)?)),
                    None => None,
                };
                Ok(GainPlan::Explicit { gains, certify })
            }
        }
    }
}

/// Initial condition plus an optional rescaling into the certified set.
/// Fields as in [`InitialSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub slope: f64,
    pub mode: u32,
    pub level_amp: f64,
    pub speed_amp: f64,
    pub xi0: f64,
    pub w0: f64,
    /// Rescale the deviation so that the certified functional starts at this
    /// fraction of its sublevel bound. Requires a certificate.
    pub level_fraction: Option<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        let s = InitialSpec::default();
        InitialSection {
            kind: s.kind,
            slope: s.slope,
            mode: s.mode,
            level_amp: s.level_amp,
            speed_amp: s.speed_amp,
            xi0: s.xi0,
            w0: s.w0,
            level_fraction: None,
        }
    }
}

impl InitialSection {
    pub fn spec(&self) -> InitialSpec {
        InitialSpec {
            kind: self.kind,
            slope: self.slope,
            mode: self.mode,
            level_amp: self.level_amp,
            speed_amp: self.speed_amp,
            xi0: self.xi0,
            w0: self.w0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub lemma1: bool,
    pub prop1: bool,
    pub prop2: bool,
    pub lemma34: bool,
    /// Energy identities along the simulated trajectory.
    pub lemma2: bool,
    /// Decay estimates along the simulated trajectory.
    pub decay: bool,
    pub samples: usize,
    /// Grid size of the sampled states.
    pub grid_n: usize,
    /// Relative tolerance of the energy identities.
    pub lemma2_tolerance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            lemma1: false,
            prop1: false,
            prop2: false,
            lemma34: false,
            lemma2: false,
            decay: false,
            samples: 1000,
            grid_n: 129,
            lemma2_tolerance: 1e-2,
        }
    }
}

impl VerifySection {
    pub fn any(&self) -> bool {
        self.lemma1 || self.prop1 || self.prop2 || self.lemma34 || self.lemma2 || self.decay
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write `x,h,v` files for every recorded sample.
    pub fields: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub physical: PhysicalSpec,
    #[serde(default)]
    pub friction: Option<FrictionSpec>,
    #[serde(default)]
    pub gains: GainSpec,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Domain(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| Error::Domain(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    /// Consistency across sections.
    pub fn validate(&self) -> Result<()> {
        let params = self.physical.params()?;
        let plan = self.gains.plan()?;
        let certifies = !matches!(plan, GainPlan::Explicit { certify: None, .. });
        if certifies && self.friction.is_none() {
            return Err(invalid(
                "friction",
                "a theorem check needs a [friction] section",
            ));
        }
        if let Some(f) = &self.friction {
            f.model(&params)?;
        }
        if self.initial.level_fraction.is_some() && !certifies {
            return Err(invalid("level_fraction", "needs a certified gain set"));
        }
        if let Some(x) = self.initial.level_fraction {
            if !(x > 0.0 && x <= 1.0) {
                return Err(invalid(
                    "level_fraction",
                    format!("must lie in (0, 1], got {x}"),
                ));
            }
        }
        if self.verify.decay && !certifies {
            return Err(invalid("verify.decay", "needs a certified gain set"));
        }
        if self.verify.samples == 0 {
            return Err(invalid("verify.samples", "must be >= 1"));
        }
        if self.verify.grid_n < 16 {
            return Err(invalid("verify.grid_n", "must be >= 16"));
        }
        self.solver.validate()
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        self.physical.params()
    }

    /// Friction model; frictionless when the section is absent.
    pub fn friction_model(&self) -> Result<FrictionModel> {
        let params = self.params()?;
        match &self.friction {
            Some(f) => f.model(&params),
            None => Ok(FrictionModel::Frictionless),
        }
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let json = serde_json::to_string(&c).unwrap_or_default();
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[physical]\nmu = 0.1\nlength = 1.0\nmass = 0.5\nh_max = 1.0\n";

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.physical.g, 9.81);
        assert_eq!(c.friction, None);
        assert!(matches!(
            c.gains.plan().unwrap(),
            GainPlan::Explicit { certify: None, .. }
        ));
    }

    #[test]
    fn spill_height_below_rest_level_is_rejected() {
        let text = BASE.replace("h_max = 1.0", "h_max = 0.4");
        let e = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(e.contains("h_max"), "{e}");
    }

    #[test]
    fn certification_needs_friction() {
        let text =
            format!("{BASE}[gains]\nmode = \"suggest\"\ntheorem = \"theorem1\"\nomega = 0.4\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{text}[friction]\nmodel = \"none\"\n");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert!(matches!(c.gains.plan().unwrap(), GainPlan::Suggest { .. }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml(&format!("{BASE}bogus = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml(&format!(
            "{BASE}[friction]\nmodel = \"none\"\nc = 1.0\n"
        ))
        .is_err());
        assert!(ExperimentConfig::from_toml(&format!("{BASE}[initial]\namp = 1.0\n")).is_err());
    }

    #[test]
    fn json_matches_toml() {
        let text = format!(
            "{BASE}seed = 3\n[friction]\nmodel = \"velocity_independent\"\nc = 0.05\n[initial]\nkind = \"sloshing\"\nlevel_amp = 0.01\n"
        );
        // `seed` must precede the first table in TOML.
        let text = format!("seed = 3\n{}", text.replace("seed = 3\n", ""));
        let a = ExperimentConfig::from_toml(&text).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let b = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.seed = 4;
        assert_ne!(a.hash(), c.hash());
        c.seed = 3;
        c.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), c.hash());
    }
}
