//! Run configuration: one JSON document per invocation.
//!
//! Every field is optional; commands pull what they need and reject what is
//! missing. Command-line flags override their config counterparts, and
//! `--dump-config` writes the fully resolved document back out, so a dumped
//! config replays the identical run.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use xlab_core::rearrangement::{DecreasingStep, SimpleFunction, StepFunction};
use xlab_core::{
    deterministic_family, seeded_staircases, InvalidInput, KernelSpec, PhiDescription,
};

pub const DEFAULT_FAMILY_SEED: u64 = 2357;
pub const DEFAULT_FAMILY_COUNT: usize = 8;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Canonical command string, echoed by `--dump-config`; a config written
    /// for one command refuses to run under another.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<KernelSpec>,
    /// Standalone weight description (check-phi, lemma-infimum); commands
    /// fall back to `spec.phi` when this is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiDescription>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionLiteral>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grids: Option<GridConfig>,
    /// Quadrature tolerance override for the operator evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceConfig>,
    /// Target exponent for the weak-type suite (default: the spec's p1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Indicator length for the char-bound suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Target interval length for the corollary suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    /// Split point for the gh suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Explicit evaluation points; replaces the generated log grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    /// Dilation factors for the dilation suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Lower exponents for the lemma-infimum suite (certified range [1, 10]).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0_grid: Option<Vec<f64>>,
    /// Arguments for the lemma-infimum suite (certified range [-50, 50]).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    /// Range checks that do not depend on the command. Command-specific
    /// requirements (a missing spec, say) surface at dispatch time.
    pub fn validate(&self) -> Result<(), String> {
        if let Some(g) = &self.grids {
            g.validate()?;
        }
        if let Some(t) = &self.tolerances {
            t.validate()?;
        }
        if let Some(f) = &self.family {
            f.validate()?;
        }
        if let Some(ts) = &self.t_grid {
            if ts.is_empty() {
                return Err("t_grid must not be empty".into());
            }
            if ts.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
                return Err("t_grid entries must be finite and positive".into());
            }
        }
        for (name, v) in [("p", self.p), ("m", self.m), ("v", self.v), ("t", self.t)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(format!("{name} = {v} must be finite and positive"));
                }
            }
        }
        Ok(())
    }
}

/// Function literal: either a bag of (value, mass) atoms, realized as their
/// decreasing rearrangement, or (breakpoint, value) cells laid out on the
/// half-line as written.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum FunctionLiteral {
    #[serde(rename = "atoms")]
    Atoms(Vec<(f64, f64)>),
    #[serde(rename = "steps")]
    Steps(Vec<(f64, f64)>),
}

impl FunctionLiteral {
    pub fn unit_indicator() -> Self {
        FunctionLiteral::Steps(vec![(1.0, 1.0)])
    }

    pub fn to_simple(&self) -> Result<SimpleFunction, InvalidInput> {
        match self {
            FunctionLiteral::Atoms(pairs) => SimpleFunction::new(pairs.iter().copied()),
            FunctionLiteral::Steps(pairs) => {
                let step = StepFunction::new(pairs.iter().copied())?;
                SimpleFunction::new(step.cells().map(|(lo, hi, v)| (v, hi - lo)))
            }
        }
    }

    pub fn to_step(&self) -> Result<StepFunction, InvalidInput> {
        match self {
            FunctionLiteral::Steps(pairs) => StepFunction::new(pairs.iter().copied()),
            FunctionLiteral::Atoms(pairs) => {
                let simple = SimpleFunction::new(pairs.iter().copied())?;
                Ok(simple.rearrange().as_step().clone())
            }
        }
    }

    pub fn to_decreasing(&self) -> Result<DecreasingStep, InvalidInput> {
        Ok(self.to_step()?.rearrange())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormConfig {
    Lorentz {
        p: f64,
        #[serde(with = "xlab_core::extreal")]
        q: f64,
    },
    WeakLorentz {
        p: f64,
    },
    Llogl {
        alpha: f64,
    },
    LloglLog3,
    Mphi,
    Lexp,
    Philog {
        p: f64,
        phi: PhiDescription,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Seeded,
    Deterministic,
    #[default]
    Mixed,
    Explicit,
}

/// Labelled family members plus the seed that produced them, if any.
pub type BuiltFamily = (Vec<(String, StepFunction)>, Option<u64>);

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<FunctionLiteral>,
}

impl FamilyConfig {
    fn validate(&self) -> Result<(), String> {
        let count = self.count.unwrap_or(DEFAULT_FAMILY_COUNT);
        if !(1..=10_000).contains(&count) {
            return Err(format!("family count {count} must be in 1..=10000"));
        }
        if self.kind == FamilyKind::Explicit && self.members.is_empty() {
            return Err("an explicit family needs at least one member".into());
        }
        Ok(())
    }

    /// Generated members plus the seed that produced them (None for
    /// seed-free kinds); the seed is echoed into reports.
    pub fn build(&self) -> Result<BuiltFamily, String> {
        self.validate()?;
        let count = self.count.unwrap_or(DEFAULT_FAMILY_COUNT);
        let seed = self.seed.unwrap_or(DEFAULT_FAMILY_SEED);
        match self.kind {
            FamilyKind::Seeded => Ok((seeded_staircases(seed, count), Some(seed))),
            FamilyKind::Deterministic => Ok((deterministic_family(), None)),
            FamilyKind::Mixed => {
                let mut family = deterministic_family();
                family.extend(seeded_staircases(seed, count));
                Ok((family, Some(seed)))
            }
            FamilyKind::Explicit => {
                let mut family = Vec::with_capacity(self.members.len());
                for (i, literal) in self.members.iter().enumerate() {
                    let step = literal.to_step().map_err(|e| e.to_string())?;
                    family.push((format!("member-{i}"), step));
                }
                Ok((family, None))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Points in generated evaluation grids.
    pub t_points: usize,
    /// Decades of slack around the anchor scale on either side.
    pub t_span_decades: f64,
    /// Points in the corollary's s-sweep.
    pub s_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            t_points: 400,
            t_span_decades: 4.0,
            s_points: 200,
        }
    }
}

impl GridConfig {
    fn validate(&self) -> Result<(), String> {
        if !(2..=1_000_000).contains(&self.t_points) {
            return Err(format!("t_points {} must be in 2..=1000000", self.t_points));
        }
        if !(2..=1_000_000).contains(&self.s_points) {
            return Err(format!("s_points {} must be in 2..=1000000", self.s_points));
        }
        if !(self.t_span_decades.is_finite() && self.t_span_decades > 0.0) {
            return Err(format!(
                "t_span_decades {} must be finite and positive",
                self.t_span_decades
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub abs: f64,
    pub rel: f64,
}

impl ToleranceConfig {
    fn validate(&self) -> Result<(), String> {
        if !(self.abs.is_finite() && self.abs > 0.0 && self.rel.is_finite() && self.rel > 0.0) {
            return Err(format!(
                "tolerances abs = {}, rel = {} must be finite and positive",
                self.abs, self.rel
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}
