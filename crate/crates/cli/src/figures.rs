//! Data series behind the four figures.

use std::collections::BTreeMap;

use robustmd_core::ambiguity::{AmbiguitySet, LinearSet};
use robustmd_core::guarantee::worst_case;
use robustmd_core::measures::{DiscretePrior, Grid};
use robustmd_core::mechanisms::{
    bs_optimal_cdf, cdf_value, median_example, persuasion_value, robustify, Objective, PriceCdf,
    RobustParams,
};
use serde::Serialize;

use crate::commands::Outcome;
use crate::error::CliError;
use crate::report::{Bundle, Provenance, Report, Table};
use crate::spec::ProblemSpec;

pub const NAMES: [&str; 4] = ["fig1", "fig2", "fig3", "fig4"];

const LAMBDA: f64 = 0.4;
const THETA_BAR: f64 = 0.5;
const ALPHA: f64 = 0.3;
const BETA: f64 = 0.6;
const MEAN: f64 = 0.4;
const RADII: [f64; 3] = [0.001, 0.003, 0.006];

#[derive(Debug, Serialize)]
pub struct FigureResults {
    pub name: String,
    pub files: Vec<String>,
    /// Landmark numbers of the figure.
    pub landmarks: BTreeMap<String, f64>,
}

fn regret_of(q: &PriceCdf) -> Result<Vec<f64>, CliError> {
    Ok(cdf_value(q, Objective::NegRegret)?
        .values()
        .iter()
        .map(|x| -x)
        .collect())
}

pub fn figure(name: &str, spec: &ProblemSpec) -> Result<Outcome, CliError> {
    let s = spec.grid.spacing;
    let mut files = Bundle::default();
    let mut landmarks = BTreeMap::new();
    let grid = match name {
        "fig1" => {
            let g = Grid::with_points(0.0, 1.0, s, &[LAMBDA])?;
            let ex = median_example(LAMBDA, &g)?;
            let rep = worst_case(&ex.value, &ex.set)?;
            files.add_table(
                "fig1.csv",
                &Table::value(&ex.value).with("prior_cdf", rep.worst_prior.cdf()),
            )?;
            landmarks.insert("lambda".into(), LAMBDA);
            landmarks.insert("guarantee".into(), rep.value);
            g
        }
        "fig2" => {
            let g = Grid::with_points(0.0, 1.0, s, &[THETA_BAR])?;
            let q = bs_optimal_cdf(THETA_BAR, &g)?;
            let regret = regret_of(&q)?;
            landmarks.insert("theta_bar".into(), THETA_BAR);
            let on_plateau = &regret[g.index_of(THETA_BAR).expect("θ̄ is on the grid")..];
            landmarks.insert(
                "plateau_regret".into(),
                on_plateau.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            );
            files.add_table(
                "fig2.csv",
                &Table::new(g.points())
                    .with("regret", regret)
                    .with("cdf", q.values().to_vec()),
            )?;
            g
        }
        "fig3" => {
            let g = Grid::with_points(0.0, 1.0, s, &[ALPHA, BETA])?;
            let v = persuasion_value(ALPHA, &g)?;
            let p = (BETA - MEAN) / (BETA - ALPHA);
            let prior = DiscretePrior::from_atoms(&g, &[(ALPHA, p), (BETA, 1.0 - p)])?;
            let set = AmbiguitySet::Intersection(vec![
                AmbiguitySet::Support { a: ALPHA, b: BETA },
                AmbiguitySet::Linear(LinearSet::mean(&g, MEAN)?),
            ]);
            landmarks.insert("alpha".into(), ALPHA);
            landmarks.insert(
                "value_at_alpha".into(),
                v.value(g.index_of(ALPHA).expect("α is on the grid")),
            );
            landmarks.insert("guarantee".into(), worst_case(&v, &set)?.value);
            landmarks.insert("p".into(), p);
            files.add_table(
                "fig3.csv",
                &Table::value(&v).with("prior", prior.weights().to_vec()),
            )?;
            g
        }
        "fig4" => {
            let mut extra = vec![THETA_BAR];
            let params = RADII
                .iter()
                .map(|&r| RobustParams::new(THETA_BAR, r))
                .collect::<Result<Vec<_>, _>>()?;
            for p in &params {
                extra.extend(p.structural_points());
            }
            let g = Grid::with_points(0.0, 1.5, s, &extra)?;
            let mut table =
                Table::new(g.points()).with("r=0", regret_of(&bs_optimal_cdf(THETA_BAR, &g)?)?);
            landmarks.insert("kink r=0".into(), THETA_BAR);
            for p in &params {
                let sol = robustify(THETA_BAR, p.r, &g)?;
                table = table.with(format!("r={}", p.r), regret_of(&sol.qhat)?);
                landmarks.insert(format!("kink r={}", p.r), p.kappa);
                landmarks.insert(format!("plateau r={}", p.r), p.r0);
            }
            files.add_table("fig4.csv", &table)?;
            g
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown figure {other:?}, expected one of {}",
                NAMES.join(", ")
            )))
        }
    };
    let report = Report {
        command: format!("figure {name}"),
        spec: None,
        provenance: Provenance::new(&grid, spec.options.tol, spec.options.windows),
        results: FigureResults {
            name: name.to_string(),
            files: files.names().map(String::from).collect(),
            landmarks,
        },
    };
    Outcome::new(&report, files, 0)
}
