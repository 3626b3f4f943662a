//! JSON problem specifications and their translation into core objects.

use robustmd_core::ambiguity::{AmbiguitySet, LinearSet, MomentRow};
use robustmd_core::measures::{DiscretePrior, Grid, ValueFunction};
use robustmd_core::mechanisms::{
    bs_optimal_cdf, cdf_value, persuasion_value, posted_price_value, robustify, Objective,
    PriceCdf, RobustParams,
};
use robustmd_core::robustness::{RobustOptions, DEFAULT_WINDOWS, MIN_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SPACING: f64 = 1.0 / 400.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustify: Option<RobustifySpec>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Points inserted exactly, on top of those the problem implies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 0.0,
            hi: 1.0,
            spacing: DEFAULT_SPACING,
            extra: Vec::new(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSpec {
    #[default]
    Revenue,
    NegRegret,
}

impl From<ObjectiveSpec> for Objective {
    fn from(o: ObjectiveSpec) -> Self {
        match o {
            ObjectiveSpec::Revenue => Objective::Revenue,
            ObjectiveSpec::NegRegret => Objective::NegRegret,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueSpec {
    PostedPrice {
        price: f64,
        #[serde(default)]
        objective: ObjectiveSpec,
    },
    /// Step CDF through `(theta, q)` breakpoints, zero below the first.
    PriceCdf {
        steps: Vec<(f64, f64)>,
        #[serde(default)]
        objective: ObjectiveSpec,
    },
    /// Negative regret of the maxmin price distribution over `[θ̄, 1]`.
    BergemannSchlag {
        theta_bar: f64,
    },
    /// Negative regret of the robustified price distribution.
    Robustified {
        theta_bar: f64,
        r: f64,
    },
    Persuasion {
        alpha: f64,
    },
    /// One value per grid point.
    Table {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `θ^k`.
    Power {
        k: i32,
    },
    Table {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub function: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Support {
        a: f64,
        b: f64,
    },
    Mean {
        mean: f64,
    },
    Moments {
        rows: Vec<MomentSpec>,
        #[serde(default = "yes")]
        continuous: bool,
    },
    Median {
        lambda: f64,
    },
    /// `(x, α)` pairs: `x` is an `α`-quantile.
    Quantile {
        pairs: Vec<(f64, f64)>,
    },
    HalfSpace {
        value: ValueSpec,
        level: f64,
    },
    /// `(theta, mass)` atoms.
    Singleton {
        atoms: Vec<(f64, f64)>,
    },
    Intersection {
        sets: Vec<SetSpec>,
    },
    Ball {
        base: Box<SetSpec>,
        radius: f64,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustifySpec {
    pub theta_bar: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Floor of the robustness tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_windows")]
    pub windows: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: MIN_TOLERANCE,
            windows: DEFAULT_WINDOWS,
        }
    }
}

fn default_tol() -> f64 {
    MIN_TOLERANCE
}

fn default_windows() -> usize {
    DEFAULT_WINDOWS
}

impl Options {
    pub fn robust(&self) -> RobustOptions {
        RobustOptions {
            windows: self.windows,
            min_tolerance: self.tol,
        }
    }
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs always serialize")
    }

    /// Grid with every point the value and set descriptors refer to.
    pub fn build_grid(&self) -> Result<Grid, CliError> {
        let mut extra = self.grid.extra.clone();
        if let Some(v) = &self.value {
            v.anchors(&mut extra);
        }
        if let Some(s) = &self.ambiguity {
            s.anchors(&mut extra);
        }
        let g = &self.grid;
        Ok(Grid::with_points(g.lo, g.hi, g.spacing, &extra)?)
    }

    pub fn build_value(&self, grid: &Grid) -> Result<ValueFunction, CliError> {
        self.value
            .as_ref()
            .ok_or_else(|| CliError::Spec("missing \"value\"".into()))?
            .build(grid)
    }

    pub fn build_set(&self, grid: &Grid) -> Result<AmbiguitySet, CliError> {
        self.ambiguity
            .as_ref()
            .ok_or_else(|| CliError::Spec("missing \"ambiguity\"".into()))?
            .build(grid)
    }
}

impl ValueSpec {
    fn anchors(&self, out: &mut Vec<f64>) {
        match self {
            ValueSpec::PostedPrice { price, .. } => out.push(*price),
            ValueSpec::PriceCdf { steps, .. } => out.extend(steps.iter().map(|s| s.0)),
            ValueSpec::BergemannSchlag { theta_bar } => out.extend([*theta_bar, 1.0]),
            ValueSpec::Robustified { theta_bar, r } => {
                if let Ok(p) = RobustParams::new(*theta_bar, *r) {
                    out.extend(p.structural_points());
                }
            }
            ValueSpec::Persuasion { alpha } => out.push(*alpha),
            ValueSpec::Table { .. } => {}
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<ValueFunction, CliError> {
        let v = match self {
            ValueSpec::PostedPrice { price, objective } => {
                posted_price_value(*price, grid, (*objective).into())?
            }
            ValueSpec::PriceCdf { steps, objective } => {
                if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(CliError::Spec("price CDF breakpoints must increase".into()));
                }
                let q = PriceCdf::from_fn(grid, |t| {
                    steps
                        .iter()
                        .take_while(|s| s.0 <= t + 1e-12)
                        .last()
                        .map_or(0.0, |s| s.1)
                })?;
                cdf_value(&q, (*objective).into())?
            }
            ValueSpec::BergemannSchlag { theta_bar } => {
                cdf_value(&bs_optimal_cdf(*theta_bar, grid)?, Objective::NegRegret)?
            }
            ValueSpec::Robustified { theta_bar, r } => {
                cdf_value(&robustify(*theta_bar, *r, grid)?.qhat, Objective::NegRegret)?
            }
            ValueSpec::Persuasion { alpha } => persuasion_value(*alpha, grid)?,
            ValueSpec::Table { values } => {
                if values.len() != grid.len() {
                    return Err(CliError::Spec(format!(
                        "value table has {} entries for {} grid points",
                        values.len(),
                        grid.len()
                    )));
                }
                ValueFunction::new(grid, values.clone())?
            }
        };
        Ok(v)
    }
}

impl FunctionSpec {
    fn build(&self, grid: &Grid) -> Result<ValueFunction, CliError> {
        match self {
            FunctionSpec::Power { k } => Ok(ValueFunction::from_fn(grid, |t| t.powi(*k))?),
            FunctionSpec::Table { values } => {
                if values.len() != grid.len() {
                    return Err(CliError::Spec(
                        "moment table length differs from grid".into(),
                    ));
                }
                Ok(ValueFunction::new(grid, values.clone())?)
            }
        }
    }
}

impl SetSpec {
    fn anchors(&self, out: &mut Vec<f64>) {
        match self {
            SetSpec::Support { a, b } => out.extend([*a, *b]),
            SetSpec::Median { lambda } => out.push(*lambda),
            SetSpec::Quantile { pairs } => out.extend(pairs.iter().map(|p| p.0)),
            SetSpec::Singleton { atoms } => out.extend(atoms.iter().map(|p| p.0)),
            SetSpec::HalfSpace { value, .. } => value.anchors(out),
            SetSpec::Intersection { sets } => sets.iter().for_each(|s| s.anchors(out)),
            SetSpec::Ball { base, .. } => base.anchors(out),
            SetSpec::Mean { .. } | SetSpec::Moments { .. } => {}
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<AmbiguitySet, CliError> {
        let set = match self {
            SetSpec::Support { a, b } => AmbiguitySet::Support { a: *a, b: *b },
            SetSpec::Mean { mean } => AmbiguitySet::Linear(LinearSet::mean(grid, *mean)?),
            SetSpec::Moments { rows, continuous } => {
                let rows = rows
                    .iter()
                    .map(|r| {
                        Ok(MomentRow {
                            g: r.function.build(grid)?,
                            lo: r.lo,
                            hi: r.hi,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                AmbiguitySet::Linear(LinearSet::new(rows, *continuous))
            }
            SetSpec::Median { lambda } => AmbiguitySet::median(*lambda),
            SetSpec::Quantile { pairs } => AmbiguitySet::Quantile {
                pairs: pairs.clone(),
            },
            SetSpec::HalfSpace { value, level } => AmbiguitySet::HalfSpace {
                v: value.build(grid)?,
                level: *level,
            },
            SetSpec::Singleton { atoms } => {
                AmbiguitySet::Singleton(DiscretePrior::from_atoms(grid, atoms)?)
            }
            SetSpec::Intersection { sets } => AmbiguitySet::Intersection(
                sets.iter()
                    .map(|s| s.build(grid))
                    .collect::<Result<_, _>>()?,
            ),
            SetSpec::Ball { base, radius } => AmbiguitySet::ball(base.build(grid)?, *radius)?,
        };
        Ok(set)
    }
}
