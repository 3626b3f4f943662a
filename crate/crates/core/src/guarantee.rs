//! Worst-case expected payoffs over ambiguity sets.

use crate::ambiguity::{AmbiguitySet, Layout, MAX_COUPLING_VARS};
use crate::error::{Error, Result};
use crate::measures::{expectation, DiscretePrior, Grid, ValueFunction};
use crate::optim::{solve_lp, Constraint, LinearProgram, LpStatus, Relation};

/// Row slack below which a constraint counts as active.
const ACTIVE_TOL: f64 = 1e-9;
/// Objective slack allowed when choosing among tied minimizers.
const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GuaranteeReport {
    /// `min_{π ∈ Π} ⟨v, π⟩`.
    pub value: f64,
    pub worst_prior: DiscretePrior,
    pub status: LpStatus,
    /// Indices of LP rows holding with equality at the optimum.
    pub active_constraints: Vec<usize>,
    pub iterations: usize,
    /// Value of an independent formulation, when one was solved.
    pub cross_check: Option<f64>,
    /// `Σ_k |y_k|·L_k` over the rows continuous in the state, with `y` the
    /// optimal duals and `L` the row Lipschitz constants. Priors within
    /// transport distance `h` of the set cannot pay less than
    /// `value − sensitivity·h` unless a row with jumps is involved.
    pub sensitivity: f64,
}

fn active_rows(rows: &[Constraint], x: &[f64]) -> Vec<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, row)| {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            (lhs - row.rhs).abs() <= ACTIVE_TOL * (1.0 + row.rhs.abs())
        })
        .map(|(k, _)| k)
        .collect()
}

fn solve_report(
    v: &ValueFunction,
    lp: &LinearProgram,
    lipschitz: &[Option<f64>],
    weights: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<GuaranteeReport> {
    let sol = solve_lp(lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => {
            return Err(Error::Numerical(
                "worst-case program reported unbounded".into(),
            ))
        }
    }
    let x = if lp.n_vars() == v.grid().len() {
        break_ties(v.grid(), lp, &sol.x, sol.value)
    } else {
        sol.x.clone()
    };
    let worst_prior = DiscretePrior::from_solver(v.grid(), weights(&x))?;
    let value = expectation(v, &worst_prior)?;
    let sensitivity = sol
        .dual
        .iter()
        .zip(lipschitz)
        .filter_map(|(y, l)| l.map(|l| y.abs() * l))
        .sum();
    Ok(GuaranteeReport {
        value,
        worst_prior,
        status: sol.status,
        active_constraints: active_rows(&lp.constraints, &x),
        iterations: sol.iterations,
        cross_check: None,
        sensitivity,
    })
}

/// Among minimizers of a program over prior weights, picks one with the
/// lowest mean and then the largest second moment. Falls back on `x` if a
/// refinement step fails.
fn break_ties(grid: &Grid, lp: &LinearProgram, x: &[f64], value: f64) -> Vec<f64> {
    let pts = grid.points();
    let mut refined = lp.clone();
    refined.add(
        lp.objective.clone(),
        Relation::Le,
        value + TIE_TOL * (1.0 + value.abs()),
    );
    refined.objective = pts.to_vec();
    let Some(sol) = solve_lp(&refined).ok().filter(|s| s.is_optimal()) else {
        return x.to_vec();
    };
    refined.add(
        pts.to_vec(),
        Relation::Le,
        sol.value + TIE_TOL * (1.0 + sol.value.abs()),
    );
    refined.objective = pts.iter().map(|t| -t * t).collect();
    match solve_lp(&refined) {
        Ok(last) if last.is_optimal() => last.x,
        _ => sol.x,
    }
}

/// `min_{π ∈ Π} ⟨v, π⟩`. Balls are dispatched to [`worst_case_ball`].
pub fn worst_case(v: &ValueFunction, set: &AmbiguitySet) -> Result<GuaranteeReport> {
    if let AmbiguitySet::WassersteinBall { base, radius } = set {
        return worst_case_ball(v, base, *radius);
    }
    let sys = set.to_constraints(v.grid())?;
    let lp = sys.minimize(v)?;
    solve_report(v, &lp, &sys.lipschitz, |x| sys.prior_weights(x))
}

/// Worst case over the Wasserstein-1 neighborhood of radius `r` around
/// `base`.
///
/// For a support-interval base the neighborhood is the single linear
/// constraint `Σ p_i·dist(θ_i, [a, b]) ≤ r`; on grids small enough for the
/// coupling program, that program is solved too and its value is recorded
/// in [`GuaranteeReport::cross_check`].
pub fn worst_case_ball(v: &ValueFunction, base: &AmbiguitySet, r: f64) -> Result<GuaranteeReport> {
    if base.is_ball() {
        return Err(Error::InvalidArgument(
            "the base of a ball cannot be a ball".into(),
        ));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be ≥ 0, got {r}"
        )));
    }
    if r == 0.0 {
        return worst_case(v, base);
    }
    let grid = v.grid();
    let ball = AmbiguitySet::ball(base.clone(), r)?;
    if let AmbiguitySet::Support { a, b } = *base {
        let dist: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| (a - t).max(t - b).max(0.0))
            .collect();
        let mut lp = LinearProgram::new(v.values().to_vec());
        lp.add(vec![1.0; grid.len()], Relation::Eq, 1.0);
        lp.add(dist, Relation::Le, r);
        let mut report = solve_report(v, &lp, &[Some(0.0), Some(1.0)], |x| x.to_vec())?;
        let targets = grid
            .points()
            .iter()
            .filter(|&&t| t >= a - 1e-9 && t <= b + 1e-9)
            .count();
        if grid.len() * targets <= MAX_COUPLING_VARS {
            let sys = ball.to_constraints(grid)?;
            let coupled = solve_report(v, &sys.minimize(v)?, &sys.lipschitz, |x| {
                sys.prior_weights(x)
            })?;
            report.cross_check = Some(coupled.value);
        }
        return Ok(report);
    }
    let sys = ball.to_constraints(grid)?;
    debug_assert!(matches!(sys.layout, Layout::Coupling { .. }));
    solve_report(v, &sys.minimize(v)?, &sys.lipschitz, |x| {
        sys.prior_weights(x)
    })
}

/// A sweep of ball worst cases over increasing radii.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusSweep {
    /// `(r, V(r))` pairs.
    pub points: Vec<(f64, f64)>,
    /// Consecutive pairs breaking `|V(r′) − V(r)| ≤ 2‖v‖∞·|r − r′| / r`,
    /// evaluated with `r` the larger radius of the pair (the sharper form).
    pub equicontinuity_violations: Vec<usize>,
    /// Consecutive pairs where `V` increases by more than `1e-9`.
    pub monotonicity_violations: Vec<usize>,
}

pub fn radius_sweep(v: &ValueFunction, base: &AmbiguitySet, radii: &[f64]) -> Result<RadiusSweep> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radii must be positive and increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        let rep = worst_case_ball(v, base, r)?;
        log::debug!("radius {r}: value {}", rep.value);
        points.push((r, rep.value));
    }
    let bound_scale = 2.0 * v.sup_norm();
    let mut equicontinuity_violations = Vec::new();
    let mut monotonicity_violations = Vec::new();
    for (k, w) in points.windows(2).enumerate() {
        let ((r0, v0), (r1, v1)) = (w[0], w[1]);
        if (v1 - v0).abs() > bound_scale / r1 * (r1 - r0) + 1e-9 {
            equicontinuity_violations.push(k);
        }
        if v1 > v0 + 1e-9 {
            monotonicity_violations.push(k);
        }
    }
    Ok(RadiusSweep {
        points,
        equicontinuity_violations,
        monotonicity_violations,
    })
}

/// `w_j = min_i (v_i + λ·|θ_i − θ_j|)`: the cheapest payoff reachable from
/// state `j` when moving mass costs `λ` per unit distance.
pub fn inf_convolution(v: &ValueFunction, lambda: f64) -> Result<ValueFunction> {
    let grid: &Grid = v.grid();
    let pts = grid.points();
    let n = grid.len();
    // Two sweeps of the distance transform on the line.
    let mut w = v.values().to_vec();
    for j in 1..n {
        w[j] = w[j].min(w[j - 1] + lambda * (pts[j] - pts[j - 1]));
    }
    for j in (0..n - 1).rev() {
        w[j] = w[j].min(w[j + 1] + lambda * (pts[j + 1] - pts[j]));
    }
    ValueFunction::new(grid, w)
}

/// `min_π ⟨v, π⟩ + λ·W(π, Π)`.
///
/// Splitting the coupling between `π` and its target in `Π`, the program
/// equals the worst case of the inf-convolution of `v` over `Π` itself.
pub fn variational_value(v: &ValueFunction, set: &AmbiguitySet, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty must be ≥ 0, got {lambda}"
        )));
    }
    if set.is_ball() {
        return Err(Error::InvalidArgument(
            "variational value needs a non-ball set".into(),
        ));
    }
    let w = inf_convolution(v, lambda)?;
    Ok(worst_case(&w, set)?.value)
}
