//! Ambiguity sets of priors as linear constraint systems.
//!
//! Every set form is closed and linear in the weight vector, so membership
//! and worst-case problems reduce to linear programs. A Wasserstein ball
//! around a base set adds coupling variables `γ_{ik}` (mass moved from grid
//! point `i` to target `k`); the prior is the row-sum vector of `γ` and the
//! target measure (its column sums) must lie in the base set.

use crate::error::{Error, Result};
use crate::measures::{wasserstein1, DiscretePrior, Grid, ValueFunction};
use crate::optim::{solve_lp, Constraint, LinearProgram, LpStatus, Relation};

/// Largest number of coupling variables accepted.
pub const MAX_COUPLING_VARS: usize = 200 * 200;

/// Slack when comparing a state with a set boundary.
const STATE_SLACK: f64 = 1e-9;

/// Bounds `lo ≤ ⟨g, π⟩ ≤ hi`; either side may be absent.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub g: ValueFunction,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl MomentRow {
    pub fn equal(g: ValueFunction, target: f64) -> Self {
        Self {
            g,
            lo: Some(target),
            hi: Some(target),
        }
    }

    pub fn is_equality(&self) -> bool {
        matches!((self.lo, self.hi), (Some(a), Some(b)) if a == b)
    }
}

/// Priors satisfying a list of moment bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSet {
    pub rows: Vec<MomentRow>,
    /// True iff every `g` is a continuous function of the state.
    pub continuous_moments: bool,
}

impl LinearSet {
    pub fn new(rows: Vec<MomentRow>, continuous_moments: bool) -> Self {
        Self {
            rows,
            continuous_moments,
        }
    }

    /// Priors with mean exactly `mean`.
    pub fn mean(grid: &Grid, mean: f64) -> Result<Self> {
        let g = ValueFunction::from_fn(grid, |t| t)?;
        Ok(Self::new(vec![MomentRow::equal(g, mean)], true))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AmbiguitySet {
    Linear(LinearSet),
    /// Priors concentrated on `[a, b]`.
    Support {
        a: f64,
        b: f64,
    },
    /// Priors with `x_j` an `α_j`-quantile: `P(θ ≤ x_j) ≥ α_j` and
    /// `P(θ ≥ x_j) ≥ 1 − α_j`.
    Quantile {
        pairs: Vec<(f64, f64)>,
    },
    /// Priors with `⟨v, π⟩ ≥ level`.
    HalfSpace {
        v: ValueFunction,
        level: f64,
    },
    Singleton(DiscretePrior),
    /// Priors in every member set.
    Intersection(Vec<AmbiguitySet>),
    /// Priors within Wasserstein-1 distance `radius` of the base set.
    WassersteinBall {
        base: Box<AmbiguitySet>,
        radius: f64,
    },
}

/// How the LP variables map to prior weights.
#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    /// One variable per grid point.
    Direct,
    /// `γ_{ik}` for every grid point `i` and target index `targets[k]`,
    /// stored row-major.
    Coupling { targets: Vec<usize> },
}

/// Linear rows whose feasible set is exactly the ambiguity set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub grid: Grid,
    pub n_vars: usize,
    pub rows: Vec<Constraint>,
    /// Per row, a Lipschitz constant in the state when the row is continuous
    /// in it. Moving prior mass a transport distance `h` shifts such a row by
    /// at most `L·h`; `None` marks rows with jumps.
    pub lipschitz: Vec<Option<f64>>,
    pub layout: Layout,
}

impl ConstraintSystem {
    /// Objective coefficients for `⟨v, π⟩`.
    pub fn prior_objective(&self, v: &ValueFunction) -> Result<Vec<f64>> {
        if v.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(match &self.layout {
            Layout::Direct => v.values().to_vec(),
            Layout::Coupling { targets } => {
                let m = targets.len();
                let mut c = Vec::with_capacity(self.n_vars);
                for i in 0..self.grid.len() {
                    c.extend(std::iter::repeat_n(v.value(i), m));
                }
                c
            }
        })
    }

    /// Prior weights encoded by an LP point.
    pub fn prior_weights(&self, x: &[f64]) -> Vec<f64> {
        match &self.layout {
            Layout::Direct => x.to_vec(),
            Layout::Coupling { targets } => {
                let m = targets.len();
                x.chunks(m).map(|row| row.iter().sum()).collect()
            }
        }
    }

    pub fn extract_prior(&self, x: &[f64]) -> Result<DiscretePrior> {
        DiscretePrior::from_solver(&self.grid, self.prior_weights(x))
    }

    /// Rows pinning the encoded prior to `prior`.
    pub fn fix_prior(&self, prior: &DiscretePrior) -> Result<Vec<Constraint>> {
        if prior.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.len();
        Ok((0..n)
            .map(|i| {
                let mut coeffs = vec![0.0; self.n_vars];
                match &self.layout {
                    Layout::Direct => coeffs[i] = 1.0,
                    Layout::Coupling { targets } => {
                        let m = targets.len();
                        coeffs[i * m..(i + 1) * m].iter_mut().for_each(|c| *c = 1.0);
                    }
                }
                Constraint::new(coeffs, Relation::Eq, prior.weight(i))
            })
            .collect())
    }

    /// Program minimizing `⟨v, π⟩` over the system.
    pub fn minimize(&self, v: &ValueFunction) -> Result<LinearProgram> {
        let mut lp = LinearProgram::new(self.prior_objective(v)?);
        lp.constraints = self.rows.clone();
        Ok(lp)
    }
}

fn simplex_row(n: usize) -> Constraint {
    Constraint::new(vec![1.0; n], Relation::Eq, 1.0)
}

fn check_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl AmbiguitySet {
    pub fn median(lambda: f64) -> Self {
        Self::Quantile {
            pairs: vec![(lambda, 0.5)],
        }
    }

    pub fn ball(base: AmbiguitySet, radius: f64) -> Result<Self> {
        if matches!(base, AmbiguitySet::WassersteinBall { .. }) {
            return Err(Error::InvalidArgument(
                "the base of a ball cannot be a ball".into(),
            ));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Self::WassersteinBall {
            base: Box::new(base),
            radius,
        })
    }

    pub fn is_ball(&self) -> bool {
        matches!(self, AmbiguitySet::WassersteinBall { .. })
    }

    /// Whether every constraint depends continuously on the state.
    pub fn continuous_moments(&self) -> bool {
        match self {
            AmbiguitySet::Linear(set) => set.continuous_moments,
            AmbiguitySet::Intersection(sets) => sets.iter().all(|s| s.continuous_moments()),
            _ => false,
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            AmbiguitySet::Linear(set) => {
                for row in &set.rows {
                    check_grid(row.g.grid(), grid)?;
                    if let (Some(lo), Some(hi)) = (row.lo, row.hi) {
                        if lo > hi {
                            return Err(Error::InvalidArgument(format!(
                                "moment bounds out of order: [{lo}, {hi}]"
                            )));
                        }
                    }
                }
            }
            AmbiguitySet::Support { a, b } => {
                if !(a <= b) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "bad support interval [{a}, {b}]"
                    )));
                }
            }
            AmbiguitySet::Quantile { pairs } => {
                if pairs.is_empty() {
                    return Err(Error::InvalidArgument(
                        "quantile set needs at least one pair".into(),
                    ));
                }
                for &(x, alpha) in pairs {
                    if !(x > grid.lo() && x < grid.hi()) {
                        return Err(Error::InvalidArgument(format!(
                            "quantile location {x} must lie strictly inside the grid"
                        )));
                    }
                    if !(0.0..=1.0).contains(&alpha) {
                        return Err(Error::InvalidArgument(format!(
                            "quantile level {alpha} outside [0, 1]"
                        )));
                    }
                }
                if pairs
                    .windows(2)
                    .any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1)
                {
                    return Err(Error::InvalidArgument(
                        "quantile locations and levels must be strictly increasing".into(),
                    ));
                }
            }
            AmbiguitySet::HalfSpace { v, level } => {
                check_grid(v.grid(), grid)?;
                if !level.is_finite() {
                    return Err(Error::InvalidArgument(
                        "half-space level must be finite".into(),
                    ));
                }
            }
            AmbiguitySet::Singleton(p) => check_grid(p.grid(), grid)?,
            AmbiguitySet::Intersection(sets) => {
                if sets.is_empty() {
                    return Err(Error::InvalidArgument("empty intersection".into()));
                }
                for s in sets {
                    if s.is_ball() {
                        return Err(Error::InvalidArgument(
                            "balls cannot appear inside an intersection".into(),
                        ));
                    }
                    s.validate(grid)?;
                }
            }
            AmbiguitySet::WassersteinBall { base, radius } => {
                if base.is_ball() {
                    return Err(Error::InvalidArgument(
                        "the base of a ball cannot be a ball".into(),
                    ));
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                base.validate(grid)?;
            }
        }
        Ok(())
    }

    /// Rows over the `n` prior weights, excluding the unit-mass row.
    fn prior_rows(&self, grid: &Grid) -> Result<Vec<Constraint>> {
        let pts = grid.points();
        let n = grid.len();
        let mut rows = Vec::new();
        match self {
            AmbiguitySet::Linear(set) => {
                for row in &set.rows {
                    let g = row.g.values().to_vec();
                    match (row.lo, row.hi) {
                        (Some(lo), Some(hi)) if lo == hi => {
                            rows.push(Constraint::new(g, Relation::Eq, lo));
                        }
                        (lo, hi) => {
                            if let Some(lo) = lo {
                                rows.push(Constraint::new(g.clone(), Relation::Ge, lo));
                            }
                            if let Some(hi) = hi {
                                rows.push(Constraint::new(g, Relation::Le, hi));
                            }
                        }
                    }
                }
            }
            AmbiguitySet::Support { a, b } => {
                let outside: Vec<f64> = pts
                    .iter()
                    .map(|&t| {
                        if t < a - STATE_SLACK || t > b + STATE_SLACK {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                rows.push(Constraint::new(outside, Relation::Eq, 0.0));
            }
            AmbiguitySet::Quantile { pairs } => {
                for &(x, alpha) in pairs {
                    let below = pts
                        .iter()
                        .map(|&t| f64::from(u8::from(t <= x + STATE_SLACK)))
                        .collect();
                    let above = pts
                        .iter()
                        .map(|&t| f64::from(u8::from(t >= x - STATE_SLACK)))
                        .collect();
                    rows.push(Constraint::new(below, Relation::Ge, alpha));
                    rows.push(Constraint::new(above, Relation::Ge, 1.0 - alpha));
                }
            }
            AmbiguitySet::HalfSpace { v, level } => {
                rows.push(Constraint::new(v.values().to_vec(), Relation::Ge, *level));
            }
            AmbiguitySet::Singleton(p) => {
                for i in 0..n {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    rows.push(Constraint::new(e, Relation::Eq, p.weight(i)));
                }
            }
            AmbiguitySet::Intersection(sets) => {
                for s in sets {
                    rows.extend(s.prior_rows(grid)?);
                }
            }
            AmbiguitySet::WassersteinBall { .. } => {
                return Err(Error::InvalidArgument(
                    "a ball has no direct prior rows".into(),
                ))
            }
        }
        Ok(rows)
    }

    /// Whether each of [`Self::prior_rows`] is continuous in the state.
    fn row_continuity(&self) -> Vec<bool> {
        match self {
            AmbiguitySet::Linear(set) => set
                .rows
                .iter()
                .flat_map(|row| {
                    let count = match (row.lo, row.hi) {
                        (Some(lo), Some(hi)) if lo == hi => 1,
                        (lo, hi) => usize::from(lo.is_some()) + usize::from(hi.is_some()),
                    };
                    std::iter::repeat_n(set.continuous_moments, count)
                })
                .collect(),
            AmbiguitySet::Support { .. } | AmbiguitySet::HalfSpace { .. } => vec![false],
            AmbiguitySet::Quantile { pairs } => vec![false; 2 * pairs.len()],
            AmbiguitySet::Singleton(p) => vec![false; p.grid().len()],
            AmbiguitySet::Intersection(sets) => {
                sets.iter().flat_map(|s| s.row_continuity()).collect()
            }
            AmbiguitySet::WassersteinBall { .. } => Vec::new(),
        }
    }

    /// Grid indices that members of a (non-ball) set may charge.
    fn target_indices(&self, grid: &Grid) -> Vec<usize> {
        match self {
            AmbiguitySet::Support { a, b } => (0..grid.len())
                .filter(|&i| {
                    let t = grid.point(i);
                    t >= a - STATE_SLACK && t <= b + STATE_SLACK
                })
                .collect(),
            AmbiguitySet::Singleton(p) => p.support(0.0),
            AmbiguitySet::Intersection(sets) => {
                let mut keep = vec![true; grid.len()];
                for s in sets {
                    let mut mine = vec![false; grid.len()];
                    s.target_indices(grid)
                        .into_iter()
                        .for_each(|i| mine[i] = true);
                    keep.iter_mut().zip(mine).for_each(|(k, m)| *k &= m);
                }
                (0..grid.len()).filter(|&i| keep[i]).collect()
            }
            _ => (0..grid.len()).collect(),
        }
    }

    /// Constraint system whose feasible points encode exactly the members
    /// of the set on `grid`.
    pub fn to_constraints(&self, grid: &Grid) -> Result<ConstraintSystem> {
        self.validate(grid)?;
        let n = grid.len();
        match self {
            AmbiguitySet::WassersteinBall { base, radius } => {
                let targets = base.target_indices(grid);
                if targets.is_empty() {
                    return Err(Error::Infeasible);
                }
                let m = targets.len();
                let n_vars = n * m;
                if n_vars > MAX_COUPLING_VARS {
                    return Err(Error::InvalidArgument(format!(
                        "coupling program needs {n_vars} variables (limit {MAX_COUPLING_VARS}); use a coarser grid"
                    )));
                }
                let pts = grid.points();
                let mut rows = vec![simplex_row(n_vars)];
                let mut lipschitz = vec![Some(0.0), Some(1.0)];
                let cost: Vec<f64> = (0..n)
                    .flat_map(|i| targets.iter().map(move |&j| (pts[i] - pts[j]).abs()))
                    .collect();
                rows.push(Constraint::new(cost, Relation::Le, *radius));
                for row in base.prior_rows(grid)? {
                    let restricted: Vec<f64> = targets.iter().map(|&j| row.coeffs[j]).collect();
                    if restricted.iter().all(|c| *c == 0.0) {
                        let ok = match row.relation {
                            Relation::Eq => row.rhs.abs() <= 1e-12,
                            Relation::Le => row.rhs >= -1e-12,
                            Relation::Ge => row.rhs <= 1e-12,
                        };
                        if ok {
                            continue;
                        }
                        return Err(Error::Infeasible);
                    }
                    let coeffs = (0..n).flat_map(|_| restricted.iter().copied()).collect();
                    rows.push(Constraint::new(coeffs, row.relation, row.rhs));
                    // Base rows see only the targets, which stay put.
                    lipschitz.push(Some(0.0));
                }
                Ok(ConstraintSystem {
                    grid: grid.clone(),
                    n_vars,
                    rows,
                    lipschitz,
                    layout: Layout::Coupling { targets },
                })
            }
            _ => {
                let mut rows = vec![simplex_row(n)];
                rows.extend(self.prior_rows(grid)?);
                let mut lipschitz = vec![Some(0.0)];
                for (row, cont) in rows[1..].iter().zip(self.row_continuity()) {
                    lipschitz.push(cont.then(|| max_slope(grid, &row.coeffs)));
                }
                Ok(ConstraintSystem {
                    grid: grid.clone(),
                    n_vars: n,
                    rows,
                    lipschitz,
                    layout: Layout::Direct,
                })
            }
        }
    }

    /// Membership with constraint residuals at most `tol`.
    pub fn contains(&self, prior: &DiscretePrior, tol: f64) -> Result<bool> {
        let grid = prior.grid();
        self.validate(grid)?;
        match self {
            AmbiguitySet::WassersteinBall { base, radius } => match base.distance_to(prior) {
                Ok(d) => Ok(d <= radius + tol),
                Err(Error::Infeasible) => Ok(false),
                Err(e) => Err(e),
            },
            _ => {
                let w = prior.weights();
                Ok(self
                    .prior_rows(grid)?
                    .iter()
                    .all(|row| row.violation(w) <= tol))
            }
        }
    }

    /// Wasserstein-1 distance from `prior` to the set.
    pub fn distance_to(&self, prior: &DiscretePrior) -> Result<f64> {
        let grid = prior.grid();
        self.validate(grid)?;
        if self.is_ball() {
            return Err(Error::InvalidArgument(
                "distance to a ball is not supported".into(),
            ));
        }
        let pts = grid.points();
        if let AmbiguitySet::Support { a, b } = self {
            return Ok(pts
                .iter()
                .zip(prior.weights())
                .map(|(&t, &p)| p * (a - t).max(t - b).max(0.0))
                .sum());
        }
        let sources = prior.support(0.0);
        let targets = self.target_indices(grid);
        if targets.is_empty() {
            return Err(Error::Infeasible);
        }
        let (s, m) = (sources.len(), targets.len());
        if s * m > MAX_COUPLING_VARS {
            return Err(Error::InvalidArgument(format!(
                "coupling program needs {} variables (limit {MAX_COUPLING_VARS})",
                s * m
            )));
        }
        let cost: Vec<f64> = sources
            .iter()
            .flat_map(|&i| targets.iter().map(move |&j| (pts[i] - pts[j]).abs()))
            .collect();
        let mut lp = LinearProgram::new(cost);
        for (a, &i) in sources.iter().enumerate() {
            let mut coeffs = vec![0.0; s * m];
            coeffs[a * m..(a + 1) * m].iter_mut().for_each(|c| *c = 1.0);
            lp.add(coeffs, Relation::Eq, prior.weight(i));
        }
        for row in self.prior_rows(grid)? {
            let restricted: Vec<f64> = targets.iter().map(|&j| row.coeffs[j]).collect();
            if restricted.iter().all(|c| *c == 0.0) && row.rhs == 0.0 {
                continue;
            }
            let coeffs = (0..s).flat_map(|_| restricted.iter().copied()).collect();
            lp.add(coeffs, row.relation, row.rhs);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.value.max(0.0)),
            LpStatus::Infeasible => Err(Error::Infeasible),
            LpStatus::Unbounded => Err(Error::Numerical("transport program unbounded".into())),
        }
    }
}

/// Largest adjacent slope of `g` over the grid.
pub(crate) fn max_slope(grid: &Grid, g: &[f64]) -> f64 {
    let pts = grid.points();
    g.windows(2)
        .zip(pts.windows(2))
        .map(|(gv, t)| (gv[1] - gv[0]).abs() / (t[1] - t[0]))
        .fold(0.0, f64::max)
}

/// Result of mixing a prior towards a set.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub prior: DiscretePrior,
    /// Mixing weight on the auxiliary prior.
    pub alpha: f64,
    /// The auxiliary prior mixed in.
    pub zeta: DiscretePrior,
    /// Interiority margin (moment projections only).
    pub margin: Option<f64>,
}

/// Mixes `prior` with `zeta ∈ base` using
/// `α = min((D(ζ, π) − r)₊ / r, 1)`.
pub fn rich_project_ball(
    ball: &AmbiguitySet,
    prior: &DiscretePrior,
    zeta: &DiscretePrior,
) -> Result<Projection> {
    let AmbiguitySet::WassersteinBall { base, radius } = ball else {
        return Err(Error::InvalidArgument("expected a Wasserstein ball".into()));
    };
    if !base.contains(zeta, 1e-9)? {
        return Err(Error::Precondition(
            "the auxiliary prior must lie in the base set".into(),
        ));
    }
    let d = wasserstein1(zeta, prior)?;
    let alpha = ((d - radius).max(0.0) / radius).min(1.0);
    let out = prior.mix(zeta, alpha)?;
    Ok(Projection {
        prior: out,
        alpha,
        zeta: zeta.clone(),
        margin: None,
    })
}

/// Moment matrix rows and targets of an all-equality linear set.
fn equality_moments(set: &AmbiguitySet, grid: &Grid) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let AmbiguitySet::Linear(linear) = set else {
        return Err(Error::Precondition(
            "moment projection needs a linear moment set with continuous moments".into(),
        ));
    };
    if !linear.continuous_moments {
        return Err(Error::Precondition(
            "moment projection needs continuous moment functions".into(),
        ));
    }
    if linear.rows.is_empty() || !linear.rows.iter().all(MomentRow::is_equality) {
        return Err(Error::InvalidArgument(
            "moment projection needs equality moment rows".into(),
        ));
    }
    let mut g = Vec::new();
    let mut y = Vec::new();
    for row in &linear.rows {
        check_grid(row.g.grid(), grid)?;
        g.push(row.g.values().to_vec());
        y.push(row.lo.expect("equality row"));
    }
    Ok((g, y))
}

/// Maximizes `t` such that `y + t·u` is a moment vector of some prior.
/// Returns `(t, ζ)`.
fn reach(g: &[Vec<f64>], y: &[f64], u: &[f64], grid: &Grid) -> Result<(f64, Vec<f64>)> {
    let n = grid.len();
    let mut objective = vec![0.0; n + 1];
    objective[n] = -1.0;
    let mut lp = LinearProgram::new(objective);
    let mut unit = vec![1.0; n + 1];
    unit[n] = 0.0;
    lp.add(unit, Relation::Eq, 1.0);
    for (k, row) in g.iter().enumerate() {
        let mut coeffs = row.clone();
        coeffs.push(-u[k]);
        lp.add(coeffs, Relation::Eq, y[k]);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.x[n], sol.x[..n].to_vec())),
        LpStatus::Infeasible => Err(Error::NotInterior { margin: 0.0 }),
        LpStatus::Unbounded => Err(Error::Numerical("moment reach program unbounded".into())),
    }
}

/// Interiority margin of the target moments: the radius of a Euclidean ball
/// around the target inside the achievable moment polytope, witnessed by the
/// reach along each coordinate direction.
pub fn moment_margin(set: &AmbiguitySet, grid: &Grid) -> Result<f64> {
    let (g, y) = equality_moments(set, grid)?;
    let m = y.len();
    let mut margin = f64::INFINITY;
    for k in 0..m {
        for sign in [1.0, -1.0] {
            let mut u = vec![0.0; m];
            u[k] = sign;
            let t = match reach(&g, &y, &u, grid) {
                Ok((t, _)) => t,
                Err(Error::NotInterior { .. }) => 0.0,
                Err(e) => return Err(e),
            };
            margin = margin.min(t);
        }
    }
    Ok(margin / (m as f64).sqrt())
}

/// Mixes `prior` with a finitely supported `ζ` so that every equality
/// moment holds exactly.
///
/// `ζ` is a basic optimal solution of the reach program along the residual
/// direction, so it has at most `m + 1` atoms, and the mixing weight obeys
/// `α ≤ |residual| / (|residual| + margin)`.
pub fn rich_project_moment(set: &AmbiguitySet, prior: &DiscretePrior) -> Result<Projection> {
    let grid = prior.grid();
    let (g, y) = equality_moments(set, grid)?;
    let margin = moment_margin(set, grid)?;
    if margin <= 1e-12 {
        return Err(Error::NotInterior { margin: 0.0 });
    }
    let x: Vec<f64> = g
        .iter()
        .map(|row| row.iter().zip(prior.weights()).map(|(a, b)| a * b).sum())
        .collect();
    let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Ok(Projection {
            prior: prior.clone(),
            alpha: 0.0,
            zeta: prior.clone(),
            margin: Some(margin),
        });
    }
    let u: Vec<f64> = d.iter().map(|v| v / norm).collect();
    let (t, zeta_w) = reach(&g, &y, &u, grid)?;
    let zeta = DiscretePrior::from_solver(grid, zeta_w)?;
    let alpha = norm / (t + norm);
    let out = prior.mix(&zeta, alpha)?;
    Ok(Projection {
        prior: out,
        alpha,
        zeta,
        margin: Some(margin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::tv_distance;

    fn median_grid() -> Grid {
        Grid::with_points(0.0, 1.5, 0.01, &[0.39, 0.4]).unwrap()
    }

    #[test]
    fn quantile_rows() {
        let g = Grid::new(vec![0.0, 0.4, 1.0]).unwrap();
        let sys = AmbiguitySet::median(0.4).to_constraints(&g).unwrap();
        assert_eq!(sys.rows.len(), 3);
        assert_eq!(sys.rows[1].coeffs, vec![1.0, 1.0, 0.0]);
        assert_eq!(sys.rows[2].coeffs, vec![0.0, 1.0, 1.0]);
        assert_eq!(sys.rows[2].rhs, 0.5);
    }

    #[test]
    fn singleton_and_support_rows() {
        let g = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let p = DiscretePrior::new(&g, vec![0.2, 0.3, 0.5]).unwrap();
        let sys = AmbiguitySet::Singleton(p).to_constraints(&g).unwrap();
        assert_eq!(sys.rows.len(), 4);
        assert_eq!(sys.rows[2].rhs, 0.3);
        let sys = AmbiguitySet::Support { a: 0.5, b: 1.0 }
            .to_constraints(&g)
            .unwrap();
        assert_eq!(sys.rows[1].coeffs, vec![1.0, 0.0, 0.0]);
        assert_eq!(sys.rows[1].relation, Relation::Eq);
    }

    #[test]
    fn median_membership() {
        let g = median_grid();
        let set = AmbiguitySet::median(0.4);
        let hat = DiscretePrior::from_atoms(&g, &[(0.0, 0.5), (0.4, 0.5)]).unwrap();
        let shifted = DiscretePrior::from_atoms(&g, &[(0.0, 0.5), (0.39, 0.5)]).unwrap();
        assert!(set.contains(&hat, 1e-9).unwrap());
        assert!(!set.contains(&shifted, 1e-9).unwrap());
        assert!(AmbiguitySet::Singleton(hat.clone())
            .contains(&hat, 0.0)
            .unwrap());
    }

    #[test]
    fn quantile_validation() {
        let g = median_grid();
        let bad = AmbiguitySet::Quantile {
            pairs: vec![(0.6, 0.5), (0.3, 0.7)],
        };
        assert!(bad.to_constraints(&g).is_err());
        assert!(AmbiguitySet::median(0.0).to_constraints(&g).is_err());
    }

    #[test]
    fn support_distance_closed_form() {
        let g = Grid::with_points(0.0, 1.0, 0.1, &[]).unwrap();
        let set = AmbiguitySet::Support { a: 0.5, b: 1.0 };
        let p = DiscretePrior::point_mass(&g, g.index_of(0.4).unwrap()).unwrap();
        assert!((set.distance_to(&p).unwrap() - 0.1).abs() < 1e-12);
        let q = DiscretePrior::point_mass(&g, g.index_of(0.7).unwrap()).unwrap();
        assert_eq!(set.distance_to(&q).unwrap(), 0.0);
    }

    #[test]
    fn distance_by_transport_matches_closed_form() {
        let g = Grid::with_points(0.0, 1.0, 0.05, &[]).unwrap();
        let p = DiscretePrior::new(
            &g,
            (0..g.len())
                .map(|i| (i + 1) as f64)
                .map(|w| w / 231.0)
                .collect(),
        )
        .unwrap();
        let support = AmbiguitySet::Support { a: 0.3, b: 0.6 };
        let as_moments = AmbiguitySet::Linear(LinearSet::new(
            vec![MomentRow {
                g: ValueFunction::from_fn(&g, |t| {
                    f64::from(u8::from(!(0.3 - 1e-9..=0.6 + 1e-9).contains(&t)))
                })
                .unwrap(),
                lo: None,
                hi: Some(0.0),
            }],
            false,
        ));
        let closed = support.distance_to(&p).unwrap();
        let lp = as_moments.distance_to(&p).unwrap();
        assert!((closed - lp).abs() < 1e-9, "{closed} vs {lp}");
    }

    #[test]
    fn ball_projection_examples() {
        let g = Grid::with_points(0.0, 1.0, 0.05, &[]).unwrap();
        let at = |t: f64| DiscretePrior::point_mass(&g, g.index_of(t).unwrap()).unwrap();
        let base = AmbiguitySet::Singleton(at(0.5));
        let ball = AmbiguitySet::ball(base, 0.1).unwrap();

        let proj = rich_project_ball(&ball, &at(0.7), &at(0.5)).unwrap();
        assert_eq!(proj.alpha, 1.0);
        assert_eq!(proj.prior, at(0.5));

        let proj = rich_project_ball(&ball, &at(0.65), &at(0.5)).unwrap();
        assert!((proj.alpha - 0.5).abs() < 1e-12);
        let expected = at(0.65).mix(&at(0.5), 0.5).unwrap();
        assert!(tv_distance(&proj.prior, &expected).unwrap() < 1e-12);
        let AmbiguitySet::WassersteinBall { base, .. } = &ball else {
            unreachable!()
        };
        assert!((base.distance_to(&proj.prior).unwrap() - 0.075).abs() < 1e-12);
        assert!(ball.contains(&proj.prior, 1e-12).unwrap());

        let proj = rich_project_ball(&ball, &at(0.55), &at(0.5)).unwrap();
        assert_eq!(proj.alpha, 0.0);
        assert_eq!(proj.prior, at(0.55));
    }

    #[test]
    fn moment_projection_on_the_mean_example() {
        let g = Grid::with_points(0.0, 1.4, 0.01, &[0.39, 0.4]).unwrap();
        let set = AmbiguitySet::Linear(LinearSet::mean(&g, 0.2).unwrap());
        let pi_n = DiscretePrior::from_atoms(&g, &[(0.0, 0.5), (0.39, 0.5)]).unwrap();
        let proj = rich_project_moment(&set, &pi_n).unwrap();
        assert!((proj.prior.mean() - 0.2).abs() < 1e-12);
        let eps = 0.01 / 1.01;
        let tv = tv_distance(&proj.prior, &pi_n).unwrap();
        assert!(tv <= eps / 2.0 + 1e-12, "tv {tv}");
        assert!(proj.alpha <= 0.005 / (0.005 + proj.margin.unwrap()) + 1e-12);
        assert!(set.contains(&proj.prior, 1e-9).unwrap());

        let feasible = DiscretePrior::from_atoms(&g, &[(0.0, 0.5), (0.4, 0.5)]).unwrap();
        let proj = rich_project_moment(&set, &feasible).unwrap();
        assert_eq!(proj.alpha, 0.0);
        assert_eq!(proj.prior, feasible);
    }

    #[test]
    fn moment_projection_refuses_discontinuous_sets() {
        let g = median_grid();
        let pi = DiscretePrior::from_atoms(&g, &[(0.0, 0.5), (0.39, 0.5)]).unwrap();
        assert!(matches!(
            rich_project_moment(&AmbiguitySet::median(0.4), &pi),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn boundary_moments_are_rejected() {
        let g = median_grid();
        let set = AmbiguitySet::Linear(LinearSet::mean(&g, 0.0).unwrap());
        let pi = DiscretePrior::uniform(&g);
        assert_eq!(
            rich_project_moment(&set, &pi),
            Err(Error::NotInterior { margin: 0.0 })
        );
    }

    #[test]
    fn ball_system_encodes_members() {
        let g = Grid::with_points(0.0, 1.0, 0.1, &[]).unwrap();
        let ball = AmbiguitySet::ball(AmbiguitySet::Support { a: 0.5, b: 1.0 }, 0.05).unwrap();
        let sys = ball.to_constraints(&g).unwrap();
        let Layout::Coupling { targets } = &sys.layout else {
            panic!()
        };
        assert_eq!(targets.len(), 6);
        let inside = DiscretePrior::from_atoms(&g, &[(0.4, 0.5), (0.9, 0.5)]).unwrap();
        let outside = DiscretePrior::from_atoms(&g, &[(0.3, 0.5), (0.9, 0.5)]).unwrap();
        assert!(ball.contains(&inside, 1e-9).unwrap());
        assert!(!ball.contains(&outside, 1e-9).unwrap());
        for (p, feasible) in [(inside, true), (outside, false)] {
            let mut lp = LinearProgram::new(vec![0.0; sys.n_vars]);
            lp.constraints = sys.rows.clone();
            lp.constraints.extend(sys.fix_prior(&p).unwrap());
            assert_eq!(solve_lp(&lp).unwrap().is_optimal(), feasible);
        }
    }
}
