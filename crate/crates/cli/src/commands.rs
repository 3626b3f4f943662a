//! The four subcommands. Each renders its report and files in memory; the
//! caller writes them only once everything has succeeded.

use robustmd_core::ambiguity::AmbiguitySet;
use robustmd_core::guarantee::{worst_case, GuaranteeReport};
use robustmd_core::measures::{DiscretePrior, Grid};
use robustmd_core::mechanisms::{
    cdf_value, robustify, verify_saddle, Objective, Regime, RobustParams,
};
use robustmd_core::robustness::{check_robust_with, Verdict};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{Bundle, Provenance, Report, Table};
use crate::spec::ProblemSpec;

/// A finished command: report text, files to write, exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub files: Bundle,
    pub exit_code: i32,
}

impl Outcome {
    pub(crate) fn new<T: Serialize>(
        report: &Report<T>,
        mut files: Bundle,
        exit_code: i32,
    ) -> Result<Self, CliError> {
        let json = report.to_json()?;
        files.add("report.json", json.clone().into_bytes());
        Ok(Outcome {
            report: json,
            files,
            exit_code,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct GuaranteeResults {
    pub value: f64,
    /// `(theta, mass)` pairs of the worst prior.
    pub worst_prior: Vec<(f64, f64)>,
    pub active_constraints: usize,
    pub sensitivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
}

fn atoms(p: &DiscretePrior) -> Vec<(f64, f64)> {
    p.support(1e-12)
        .into_iter()
        .map(|i| (p.grid().point(i), p.weight(i)))
        .collect()
}

impl From<&GuaranteeReport> for GuaranteeResults {
    fn from(r: &GuaranteeReport) -> Self {
        GuaranteeResults {
            value: r.value,
            worst_prior: atoms(&r.worst_prior),
            active_constraints: r.active_constraints.len(),
            sensitivity: r.sensitivity,
            cross_check: r.cross_check,
        }
    }
}

fn provenance(spec: &ProblemSpec, grid: &Grid) -> Provenance {
    Provenance::new(grid, spec.options.tol, spec.options.windows)
}

pub fn guarantee(spec: &ProblemSpec) -> Result<Outcome, CliError> {
    let grid = spec.build_grid()?;
    let v = spec.build_value(&grid)?;
    let set = spec.build_set(&grid)?;
    let rep = worst_case(&v, &set)?;
    log::info!("guarantee {} after {} pivots", rep.value, rep.iterations);
    if let Some(c) = rep.cross_check {
        if (c - rep.value).abs() > spec.options.tol {
            log::warn!("coupling formulation disagrees: {c} vs {}", rep.value);
        }
    }
    let mut prov = provenance(spec, &grid);
    prov.lp_iterations = Some(rep.iterations);
    let mut files = Bundle::default();
    files.add_table("worst_prior.csv", &Table::prior(&rep.worst_prior))?;
    let report = Report {
        command: "guarantee".into(),
        spec: Some(spec.clone()),
        provenance: prov,
        results: GuaranteeResults::from(&rep),
    };
    Outcome::new(&report, files, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOut {
    Robust,
    NonRobust,
    Inconclusive,
}

impl From<Verdict> for VerdictOut {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Robust => VerdictOut::Robust,
            Verdict::NonRobust => VerdictOut::NonRobust,
            Verdict::Inconclusive => VerdictOut::Inconclusive,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WitnessOut {
    pub windows: Vec<f64>,
    pub payoffs: Vec<f64>,
    /// Transport distance of each witness to the set, when computable.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub distances: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct CheckRobustResults {
    pub verdict: VerdictOut,
    pub guarantee: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub h_schedule: Vec<f64>,
    pub envelope_values: Vec<f64>,
    pub lipschitz: f64,
    pub sensitivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessOut>,
}

pub fn check_robust(spec: &ProblemSpec) -> Result<Outcome, CliError> {
    let grid = spec.build_grid()?;
    let v = spec.build_value(&grid)?;
    let set = spec.build_set(&grid)?;
    let cert = check_robust_with(&v, &set, &spec.options.robust())?;
    let mut files = Bundle::default();
    files.add_table("value.csv", &Table::value(&v))?;
    let witness = match &cert.witness {
        Some(w) => {
            let mut table = Table::new(grid.points());
            for (j, p) in w.priors.iter().enumerate() {
                table = table.with(format!("witness_{}", j + 1), p.weights().to_vec());
            }
            files.add_table("witness.csv", &table)?;
            let distances = if set.is_ball() {
                Vec::new()
            } else {
                w.priors
                    .iter()
                    .map(|p| set.distance_to(p))
                    .collect::<Result<_, _>>()
                    .unwrap_or_default()
            };
            Some(WitnessOut {
                windows: w.windows.clone(),
                payoffs: w.payoffs.clone(),
                distances,
            })
        }
        None => None,
    };
    let verdict = VerdictOut::from(cert.verdict);
    let exit_code = match verdict {
        VerdictOut::Robust => 0,
        VerdictOut::NonRobust => 3,
        VerdictOut::Inconclusive => 4,
    };
    let report = Report {
        command: "check-robust".into(),
        spec: Some(spec.clone()),
        provenance: provenance(spec, &grid),
        results: CheckRobustResults {
            verdict,
            guarantee: cert.guarantee,
            gap: cert.gap,
            tolerance: cert.tolerance,
            h_schedule: cert.h_schedule,
            envelope_values: cert.envelope_values,
            lipschitz: cert.lipschitz,
            sensitivity: cert.sensitivity,
            witness,
        },
    };
    Outcome::new(&report, files, exit_code)
}

#[derive(Debug, Serialize)]
pub struct SaddleOut {
    pub designer_slack: f64,
    pub nature_slack: f64,
    pub wasserstein_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct RobustifyResults {
    pub theta_bar: f64,
    pub r: f64,
    pub regime: &'static str,
    pub alpha: f64,
    pub kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_radius: Option<f64>,
    /// Regret on `[θ̄, 1]`.
    pub plateau_regret: f64,
    /// Closed-form worst-case regret over the neighborhood.
    pub guarantee: f64,
    /// Worst-case regret from the neighborhood program on the grid.
    pub lp_guarantee: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    pub saddle: SaddleOut,
}

pub fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::LowThetaBar => "low_theta_bar",
        Regime::SmallRadius => "small_radius",
        Regime::LargeRadius => "large_radius",
    }
}

pub fn robustify_cmd(spec: &ProblemSpec) -> Result<Outcome, CliError> {
    let rs = spec.robustify.as_ref().ok_or_else(|| {
        CliError::Usage("robustify needs --theta-bar and --radius or a \"robustify\" entry".into())
    })?;
    let params = RobustParams::new(rs.theta_bar, rs.r)?;
    let grid = params.default_grid(spec.grid.spacing)?;
    let sol = robustify(rs.theta_bar, rs.r, &grid)?;
    let v = cdf_value(&sol.qhat, Objective::NegRegret)?;
    let ball = AmbiguitySet::ball(sol.base_set(), rs.r)?;
    let rep = worst_case(&v, &ball)?;
    let saddle = verify_saddle(&sol)?;
    let mut files = Bundle::default();
    let regret: Vec<f64> = v.values().iter().map(|x| -x).collect();
    files.add_table(
        "robustified.csv",
        &Table::new(grid.points())
            .with("qhat", sol.qhat.values().to_vec())
            .with("regret", regret),
    )?;
    files.add_table("worst_prior.csv", &Table::prior(&sol.worst_prior))?;
    let mut prov = provenance(spec, &grid);
    prov.lp_iterations = Some(rep.iterations);
    let report = Report {
        command: "robustify".into(),
        spec: Some(spec.clone()),
        provenance: prov,
        results: RobustifyResults {
            theta_bar: params.theta_bar,
            r: params.r,
            regime: regime_name(params.regime),
            alpha: params.alpha,
            kappa: params.kappa,
            beta: params.beta,
            truncation: params.truncation,
            critical_radius: params.r_hat,
            plateau_regret: params.r0,
            guarantee: params.guarantee,
            lp_guarantee: -rep.value,
            cross_check: rep.cross_check.map(|c| -c),
            saddle: SaddleOut {
                designer_slack: saddle.designer_slack,
                nature_slack: saddle.nature_slack,
                wasserstein_residual: saddle.wasserstein_residual,
            },
        },
    };
    Outcome::new(&report, files, 0)
}
