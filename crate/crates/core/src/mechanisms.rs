//! Monopoly selling mechanisms, their regret, and the robustified pricing
//! construction over Wasserstein neighborhoods of a support restriction.
//!
//! A mechanism is a random posted price with CDF `q`; `q(θ)` is the purchase
//! probability of valuation `θ`. Revenue of type `θ` is `∫_{[0,θ]} p dq(p)`
//! and regret is `θ` minus revenue.

use std::f64::consts::E;

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::guarantee::worst_case_ball;
use crate::measures::{expectation, DiscretePrior, Grid, ValueFunction};
use crate::optim::solve_bracketed;

const INV_E: f64 = 1.0 / E;

/// Bracket tolerance used for the implicit equations.
const EQ_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Revenue,
    /// Revenue minus the buyer's valuation.
    NegRegret,
}

/// Value of posting price `p`; the buyer purchases when `θ ≥ p`.
pub fn posted_price_value(p: f64, grid: &Grid, objective: Objective) -> Result<ValueFunction> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "price must be ≥ 0, got {p}"
        )));
    }
    ValueFunction::from_fn(grid, |t| {
        let rev = if t >= p - 1e-12 { p } else { 0.0 };
        match objective {
            Objective::Revenue => rev,
            Objective::NegRegret => rev - t,
        }
    })
}

/// Right-continuous CDF of a random posted price, sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceCdf {
    grid: Grid,
    q: Vec<f64>,
}

impl PriceCdf {
    pub fn new(grid: &Grid, q: Vec<f64>) -> Result<Self> {
        if q.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "CDF length differs from grid".into(),
            ));
        }
        if q.iter()
            .any(|v| !v.is_finite() || *v < -1e-12 || *v > 1.0 + 1e-12)
        {
            return Err(Error::InvalidArgument(
                "CDF values must lie in [0, 1]".into(),
            ));
        }
        if q.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            return Err(Error::InvalidArgument("CDF must be nondecreasing".into()));
        }
        if (q[q.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "CDF must reach 1 at the top of the grid, got {}",
                q[q.len() - 1]
            )));
        }
        let q = q.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self {
            grid: grid.clone(),
            q,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().iter().map(|&t| f(t)).collect())
    }

    /// Degenerate distribution at price `p`.
    pub fn posted_price(grid: &Grid, p: f64) -> Result<Self> {
        Self::from_fn(grid, |t| if t >= p - 1e-12 { 1.0 } else { 0.0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Price mass at each grid point (`q_i − q_{i−1}`, with `q_{−1} = 0`).
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.q
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }
}

/// Value function induced by a price CDF, via the Stieltjes sum
/// `revenue(θ_i) = Σ_{θ_j ≤ θ_i} θ_j·Δq_j`.
pub fn cdf_value(q: &PriceCdf, objective: Objective) -> Result<ValueFunction> {
    let pts = q.grid.points();
    let mut acc = 0.0;
    let values = q
        .increments()
        .iter()
        .zip(pts)
        .map(|(dq, &t)| {
            acc += t * dq;
            match objective {
                Objective::Revenue => acc,
                Objective::NegRegret => acc - t,
            }
        })
        .collect();
    ValueFunction::new(&q.grid, values)
}

/// Regret from the integrated form `θ(1 − q(θ)) + ∫_0^θ q`, with the
/// integral by the trapezoid rule on the grid (q taken as 0 below the grid).
pub fn regret_integrated(q: &PriceCdf) -> Vec<f64> {
    let pts = q.grid.points();
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        if i > 0 {
            integral += 0.5 * (q.q[i] + q.q[i - 1]) * (pts[i] - pts[i - 1]);
        }
        out.push(pts[i] * (1.0 - q.q[i]) + integral);
    }
    out
}

/// Maxmin-regret price distribution over priors supported on `[θ̄, 1]`.
pub fn bs_optimal_cdf(theta_bar: f64, grid: &Grid) -> Result<PriceCdf> {
    if !(0.0..1.0).contains(&theta_bar) {
        return Err(Error::InvalidArgument(format!(
            "θ̄ must lie in [0, 1), got {theta_bar}"
        )));
    }
    if grid.hi() < 1.0 {
        return Err(Error::InvalidArgument("grid must reach 1".into()));
    }
    if theta_bar <= INV_E {
        return PriceCdf::from_fn(grid, |t| {
            if t < INV_E {
                0.0
            } else if t < 1.0 {
                1.0 + t.ln()
            } else {
                1.0
            }
        });
    }
    if grid.index_of(theta_bar).is_none() {
        return Err(Error::InvalidArgument(format!(
            "θ̄ = {theta_bar} must be a grid point"
        )));
    }
    PriceCdf::from_fn(grid, |t| {
        if t < theta_bar - 1e-12 {
            0.0
        } else if t < 1.0 {
            1.0 + t.max(theta_bar).ln()
        } else {
            1.0
        }
    })
}

fn check_high_theta_bar(theta_bar: f64) -> Result<()> {
    if theta_bar > INV_E && theta_bar < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "θ̄ must lie in (1/e, 1), got {theta_bar}"
        )))
    }
}

/// `r̂(θ̄) = θ̄ − ½·√(θ̄/e)·(3 + ln θ̄)`.
pub fn critical_radius(theta_bar: f64) -> Result<f64> {
    check_high_theta_bar(theta_bar)?;
    Ok(theta_bar - 0.5 * (theta_bar / E).sqrt() * (3.0 + theta_bar.ln()))
}

/// `ψ(θ̄, α) = θ̄ − α⁻¹·θ̄·(θ̄e)^(−1/α)·(α + 1 + ln θ̄)`, the transport cost of
/// pushing the `κ/θ²` density on `[κ, θ̄]` up to `θ̄`.
pub fn psi(theta_bar: f64, alpha: f64) -> f64 {
    theta_bar
        - theta_bar * (theta_bar * E).powf(-1.0 / alpha) * (alpha + 1.0 + theta_bar.ln()) / alpha
}

/// `κ(θ̄, α) = θ̄·(θ̄e)^(−1/α)`.
pub fn kappa(theta_bar: f64, alpha: f64) -> f64 {
    theta_bar * (theta_bar * E).powf(-1.0 / alpha)
}

/// The unique `α > 2` with `ψ(θ̄, α) = r`, for `0 < r < r̂(θ̄)`.
pub fn solve_alpha(theta_bar: f64, r: f64) -> Result<f64> {
    let r_hat = critical_radius(theta_bar)?;
    if !(r > 0.0) || r >= r_hat {
        return Err(Error::InvalidArgument(format!(
            "radius {r} must lie in (0, r̂) = (0, {r_hat})"
        )));
    }
    let f = |a: f64| psi(theta_bar, a) - r;
    let mut hi = 4.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical("no bracket for α".into()));
        }
    }
    let root = solve_bracketed(f, 2.0, hi, EQ_TOL * hi)?;
    Ok(root.x)
}

/// Root of `√(θ̄/e)·(ln β + 1/β − 1) = r − r̂(θ̄)` on `β ≥ 1`.
pub fn solve_beta(theta_bar: f64, r: f64) -> Result<f64> {
    let r_hat = critical_radius(theta_bar)?;
    if r < r_hat {
        return Err(Error::InvalidArgument(format!(
            "radius {r} is below r̂ = {r_hat}"
        )));
    }
    let c = (theta_bar / E).sqrt();
    let f = |b: f64| c * (b.ln() + 1.0 / b - 1.0) - (r - r_hat);
    if f(1.0) >= 0.0 {
        return Ok(1.0);
    }
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical("no bracket for β".into()));
        }
    }
    Ok(solve_bracketed(f, 1.0, hi, EQ_TOL * hi)?.x)
}

/// Upper end of the worst prior's density in the large-radius case: the
/// point `β*` at which `c/θ²` on `[c, β*)` plus an atom `c/β*` at `β*` has
/// transport cost exactly `r` to `[θ̄, 1]`, i.e. `r̂ + c·ln β* = r`.
pub fn truncation_point(theta_bar: f64, r: f64) -> Result<f64> {
    let r_hat = critical_radius(theta_bar)?;
    if r < r_hat {
        return Err(Error::InvalidArgument(format!(
            "radius {r} is below r̂ = {r_hat}"
        )));
    }
    Ok(((r - r_hat) / (theta_bar / E).sqrt()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `θ̄ ≤ 1/e`: the unrestricted solution stays optimal.
    LowThetaBar,
    /// `θ̄ > 1/e`, `r < r̂(θ̄)`.
    SmallRadius,
    /// `θ̄ > 1/e`, `r ≥ r̂(θ̄)`.
    LargeRadius,
}

/// Closed-form parameters of the robustified mechanism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustParams {
    pub theta_bar: f64,
    pub r: f64,
    pub regime: Regime,
    pub alpha: f64,
    pub kappa: f64,
    /// Root of the β equation (large radius only).
    pub beta: Option<f64>,
    /// Upper end of the worst prior's support (large radius only).
    pub truncation: Option<f64>,
    pub r_hat: Option<f64>,
    /// Regret on the plateau `[θ̄, 1]`.
    pub r0: f64,
    /// Worst-case regret over the neighborhood.
    pub guarantee: f64,
}

impl RobustParams {
    pub fn new(theta_bar: f64, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&theta_bar) {
            return Err(Error::InvalidArgument(format!(
                "θ̄ must lie in [0, 1), got {theta_bar}"
            )));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {r}"
            )));
        }
        if theta_bar <= INV_E {
            return Ok(Self {
                theta_bar,
                r,
                regime: Regime::LowThetaBar,
                alpha: 1.0,
                kappa: INV_E,
                beta: None,
                truncation: None,
                r_hat: None,
                r0: INV_E,
                guarantee: INV_E + r,
            });
        }
        let r_hat = critical_radius(theta_bar)?;
        if r < r_hat {
            let alpha = solve_alpha(theta_bar, r)?;
            let k = kappa(theta_bar, alpha);
            let r0 = k - (alpha - 1.0) * (theta_bar - k);
            Ok(Self {
                theta_bar,
                r,
                regime: Regime::SmallRadius,
                alpha,
                kappa: k,
                beta: None,
                truncation: None,
                r_hat: Some(r_hat),
                r0,
                guarantee: r0 + (alpha - 1.0) * r,
            })
        } else {
            let c = (theta_bar / E).sqrt();
            let r0 = 2.0 * c - theta_bar;
            Ok(Self {
                theta_bar,
                r,
                regime: Regime::LargeRadius,
                alpha: 2.0,
                kappa: c,
                beta: Some(solve_beta(theta_bar, r)?),
                truncation: Some(truncation_point(theta_bar, r)?),
                r_hat: Some(r_hat),
                r0,
                guarantee: r0 + r,
            })
        }
    }

    /// `q̂(θ)`.
    pub fn cdf_at(&self, t: f64) -> f64 {
        if t >= 1.0 {
            1.0
        } else if t >= self.theta_bar.max(INV_E) {
            1.0 + t.ln()
        } else if t >= self.kappa {
            (self.alpha * (t / self.kappa).ln()).max(0.0)
        } else {
            0.0
        }
    }

    /// `R(θ; q̂) = R₀ + (θ − 1)₊ + (α − 1)(θ̄ − θ)₊ − α(κ − θ)₊`.
    pub fn regret_at(&self, t: f64) -> f64 {
        self.r0 + (t - 1.0).max(0.0) + (self.alpha - 1.0) * (self.theta_bar - t).max(0.0)
            - self.alpha * (self.kappa - t).max(0.0)
    }

    /// Points that must lie on the grid for an exact discretization.
    pub fn structural_points(&self) -> Vec<f64> {
        let mut pts = vec![self.theta_bar, self.kappa, INV_E, 1.0];
        pts.extend(self.beta);
        pts.extend(self.truncation);
        pts
    }

    /// Default grid: spacing `s` on `[0, θ_max]` with the structural points
    /// inserted. `θ_max = max(1 + 10r, 1.5)`, pushed above the worst prior's
    /// support, and in the low-θ̄ regime high enough (`1 + r/(e·s)`) that the
    /// escaping atom carries mass at most `e·s`.
    pub fn default_grid(&self, spacing: f64) -> Result<Grid> {
        let mut top = (1.0 + 10.0 * self.r).max(1.5);
        if let Some(b) = self.beta {
            top = top.max(b + 0.1);
        }
        if let Some(b) = self.truncation {
            top = top.max(b + 0.1);
        }
        if self.regime == Regime::LowThetaBar {
            top = top.max(1.0 + self.r / (E * spacing));
        }
        let top = (top / spacing).ceil() * spacing;
        Grid::with_points(0.0, top, spacing, &self.structural_points())
    }
}

/// The robustified mechanism on a grid with its worst-case prior.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustifiedPricing {
    pub params: RobustParams,
    pub qhat: PriceCdf,
    pub worst_prior: DiscretePrior,
}

impl RobustifiedPricing {
    pub fn base_set(&self) -> AmbiguitySet {
        AmbiguitySet::Support {
            a: self.params.theta_bar,
            b: 1.0,
        }
    }

    pub fn guarantee(&self) -> f64 {
        self.params.guarantee
    }
}

fn require_point(grid: &Grid, t: f64, what: &str) -> Result<usize> {
    grid.index_of(t)
        .ok_or_else(|| Error::InvalidArgument(format!("{what} = {t} must be a grid point")))
}

/// Weights of the density `c/θ²` on `[lo, hi]`, split within each grid cell
/// onto its endpoints so that mass and first moment are exact per cell.
fn discretize_inverse_square(grid: &Grid, c: f64, lo: usize, hi: usize) -> Vec<f64> {
    let pts = grid.points();
    let mut w = vec![0.0; grid.len()];
    for i in lo + 1..=hi {
        let (a, b) = (pts[i - 1], pts[i]);
        let mass = c * (1.0 / a - 1.0 / b);
        let moment = c * (b / a).ln();
        let right = ((moment - a * mass) / (b - a)).clamp(0.0, mass);
        w[i] += right;
        w[i - 1] += mass - right;
    }
    w
}

/// Builds the robustified mechanism and its worst prior on `grid`.
pub fn robustify(theta_bar: f64, r: f64, grid: &Grid) -> Result<RobustifiedPricing> {
    let params = RobustParams::new(theta_bar, r)?;
    let qhat = PriceCdf::from_fn(grid, |t| params.cdf_at(t))?;
    let one = require_point(grid, 1.0, "1")?;
    let worst = match params.regime {
        Regime::LowThetaBar => {
            let lo = require_point(grid, INV_E, "1/e")?;
            let top = grid.len() - 1;
            if grid.hi() <= 1.0 {
                return Err(Error::InvalidArgument("grid must extend above 1".into()));
            }
            let eps = r / (grid.hi() - 1.0);
            if eps > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "grid top {} is too low for radius {r}",
                    grid.hi()
                )));
            }
            let mut w = discretize_inverse_square(grid, INV_E, lo, one);
            w[one] += INV_E;
            w.iter_mut().for_each(|x| *x *= 1.0 - eps);
            w[top] += eps;
            w
        }
        Regime::SmallRadius => {
            require_point(grid, theta_bar, "θ̄")?;
            let lo = require_point(grid, params.kappa, "κ")?;
            let mut w = discretize_inverse_square(grid, params.kappa, lo, one);
            w[one] += params.kappa;
            w
        }
        Regime::LargeRadius => {
            require_point(grid, theta_bar, "θ̄")?;
            let lo = require_point(grid, params.kappa, "κ")?;
            let b = params
                .truncation
                .expect("large radius has a truncation point");
            let hi = require_point(grid, b, "β*")?;
            let mut w = discretize_inverse_square(grid, params.kappa, lo, hi);
            w[hi] += params.kappa / b;
            w
        }
    };
    let worst_prior = DiscretePrior::from_solver(grid, worst)?;
    Ok(RobustifiedPricing {
        params,
        qhat,
        worst_prior,
    })
}

/// Residuals of the two best-response conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddleReport {
    /// Best posted-price revenue under the worst prior minus the revenue of
    /// `q̂` under it.
    pub designer_slack: f64,
    /// Ball worst case of `−R(·; q̂)` plus the worst prior's expected regret.
    pub nature_slack: f64,
    /// `|W(π̂, Π) − r|`.
    pub wasserstein_residual: f64,
}

/// Expected revenue of posting each grid price under `prior`.
pub fn posted_price_revenues(prior: &DiscretePrior) -> Vec<f64> {
    let pts = prior.grid().points();
    let w = prior.weights();
    let mut tail = 0.0;
    let mut out = vec![0.0; pts.len()];
    for i in (0..pts.len()).rev() {
        tail += w[i];
        out[i] = pts[i] * tail;
    }
    out
}

pub fn verify_saddle(sol: &RobustifiedPricing) -> Result<SaddleReport> {
    let prior = &sol.worst_prior;
    let revenues = posted_price_revenues(prior);
    let best = revenues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let revenue = cdf_value(&sol.qhat, Objective::Revenue)?;
    let designer_slack = best - expectation(&revenue, prior)?;

    let neg_regret = cdf_value(&sol.qhat, Objective::NegRegret)?;
    let base = sol.base_set();
    let ball = worst_case_ball(&neg_regret, &base, sol.params.r)?;
    let nature_slack = ball.value - expectation(&neg_regret, prior)?;
    let wasserstein_residual = (base.distance_to(prior)? - sol.params.r).abs();
    Ok(SaddleReport {
        designer_slack,
        nature_slack,
        wasserstein_residual,
    })
}

/// Sender payoff of the fixed experiment that recommends acting whenever
/// the state is at least `α`.
pub fn persuasion_value(alpha: f64, grid: &Grid) -> Result<ValueFunction> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "α must lie in (0, ½), got {alpha}"
        )));
    }
    let k = alpha / (1.0 - alpha);
    ValueFunction::from_fn(grid, |t| {
        if t >= alpha - 1e-12 {
            t + (1.0 - t) * k
        } else {
            0.0
        }
    })
}

/// Posted price `λ` against priors with median `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MedianExample {
    pub value: ValueFunction,
    pub set: AmbiguitySet,
    pub prior: DiscretePrior,
    /// `λ/2`.
    pub guarantee: f64,
}

impl MedianExample {
    /// `{π : ⟨v, π⟩ ≥ λ/2}`, the priors against which the price is no worse
    /// than under the saddle prior.
    pub fn half_space(&self) -> AmbiguitySet {
        AmbiguitySet::HalfSpace {
            v: self.value.clone(),
            level: self.guarantee,
        }
    }
}

pub fn median_example(lambda: f64, grid: &Grid) -> Result<MedianExample> {
    if !(lambda > grid.lo() && lambda < grid.hi()) {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} must lie inside the grid"
        )));
    }
    require_point(grid, lambda, "λ")?;
    let value = posted_price_value(lambda, grid, Objective::Revenue)?;
    let prior = DiscretePrior::from_atoms(grid, &[(grid.lo(), 0.5), (lambda, 0.5)])?;
    Ok(MedianExample {
        value,
        set: AmbiguitySet::median(lambda),
        prior,
        guarantee: lambda / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guarantee::worst_case;

    fn grid(extra: &[f64]) -> Grid {
        Grid::with_points(0.0, 1.5, 1.0 / 400.0, extra).unwrap()
    }

    #[test]
    fn posted_price_examples() {
        let g = grid(&[0.4]);
        let zero = posted_price_value(0.0, &g, Objective::Revenue).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        let v = posted_price_value(0.4, &g, Objective::NegRegret).unwrap();
        let i = g.index_of(0.4).unwrap();
        assert_eq!(v.value(i), 0.0);
        assert!((v.value(i - 1) + g.point(i - 1)).abs() < 1e-15);
        let q = PriceCdf::posted_price(&g, 0.4).unwrap();
        assert_eq!(
            cdf_value(&q, Objective::Revenue).unwrap(),
            posted_price_value(0.4, &g, Objective::Revenue).unwrap()
        );
    }

    #[test]
    fn bs_low_theta_bar_revenue_tends_to_mean_price() {
        let g = grid(&[INV_E, 1.0]);
        let q = bs_optimal_cdf(0.2, &g).unwrap();
        assert_eq!(q.values()[g.index_of(INV_E).unwrap()], 0.0);
        assert_eq!(q.values()[g.index_of(1.0).unwrap()], 1.0);
        let rev = cdf_value(&q, Objective::Revenue).unwrap();
        assert!((rev.value(g.len() - 1) - (1.0 - INV_E)).abs() < 2.0 / 400.0);
    }

    #[test]
    fn bs_high_theta_bar_atom_and_plateau() {
        let g = grid(&[0.5, 1.0]);
        let q = bs_optimal_cdf(0.5, &g).unwrap();
        let i = g.index_of(0.5).unwrap();
        assert!((q.values()[i] - (1.0 + 0.5_f64.ln())).abs() < 1e-15);
        let neg = cdf_value(&q, Objective::NegRegret).unwrap();
        let plateau = -0.5 * 0.5_f64.ln();
        for j in i..=g.index_of(1.0).unwrap() {
            assert!((-neg.value(j) - plateau).abs() < 2.0 / 400.0);
        }
        let rep = worst_case(&neg, &AmbiguitySet::Support { a: 0.5, b: 1.0 }).unwrap();
        assert!((rep.value + plateau).abs() < 2.0 / 400.0);
    }

    #[test]
    fn critical_radius_value() {
        let r = critical_radius(0.5).unwrap();
        assert!((0.0052..=0.0054).contains(&r));
        assert!(critical_radius(0.3).is_err());
        assert!(critical_radius(1.0).is_err());
    }

    #[test]
    fn alpha_and_kappa() {
        let a = solve_alpha(0.5, 0.003).unwrap();
        assert!((psi(0.5, a) - 0.003).abs() < 1e-9);
        assert!((kappa(0.5, a) - 0.446237).abs() < 1e-4);
        let a1 = solve_alpha(0.5, 0.001).unwrap();
        assert!((kappa(0.5, a1) - 0.468712).abs() < 1e-4);
        let r_hat = critical_radius(0.5).unwrap();
        let near = solve_alpha(0.5, r_hat * (1.0 - 1e-9)).unwrap();
        assert!((near - 2.0).abs() < 1e-3);
        assert!(solve_alpha(0.5, r_hat).is_err());
    }

    #[test]
    fn beta_examples() {
        let r_hat = critical_radius(0.5).unwrap();
        assert_eq!(solve_beta(0.5, r_hat).unwrap(), 1.0);
        assert!(solve_beta(0.5, 0.003).is_err());
        let b = solve_beta(0.5, 0.006).unwrap();
        let c = (0.5 / E).sqrt();
        assert!((c * (b.ln() + 1.0 / b - 1.0) - (0.006 - r_hat)).abs() < 1e-12);
        assert!(solve_beta(0.5, 0.007).unwrap() > b);
    }

    #[test]
    fn regimes_and_guarantees() {
        let p = RobustParams::new(0.2, 0.01).unwrap();
        assert_eq!(p.regime, Regime::LowThetaBar);
        assert!((p.guarantee - 0.377879).abs() < 1e-6);
        let p = RobustParams::new(0.5, 0.003).unwrap();
        assert_eq!(p.regime, Regime::SmallRadius);
        assert!((p.r0 - 0.354979).abs() < 1e-4);
        let p = RobustParams::new(0.5, 0.006).unwrap();
        assert_eq!(p.regime, Regime::LargeRadius);
        assert!((p.kappa - 0.428882).abs() < 1e-6);
        assert!((p.r0 - 0.357764).abs() < 1e-4);
        assert!((p.guarantee - 0.363764).abs() < 1e-4);
    }

    #[test]
    fn worst_prior_sits_at_distance_r() {
        for (tb, r) in [(0.5, 0.003), (0.5, 0.006), (0.2, 0.01)] {
            let p = RobustParams::new(tb, r).unwrap();
            let g = p.default_grid(1.0 / 400.0).unwrap();
            let sol = robustify(tb, r, &g).unwrap();
            let d = sol.base_set().distance_to(&sol.worst_prior).unwrap();
            assert!((d - r).abs() < 1e-12, "({tb}, {r}): {d}");
        }
    }

    #[test]
    fn persuasion_examples() {
        let g = grid(&[0.3]);
        let v = persuasion_value(0.3, &g).unwrap();
        assert!((v.value(g.index_of(0.3).unwrap()) - 0.6).abs() < 1e-15);
        assert_eq!(v.value(g.index_of(0.2).unwrap()), 0.0);
        assert!((v.value(g.index_of(1.0).unwrap()) - 1.0).abs() < 1e-15);
        assert!(persuasion_value(0.5, &g).is_err());
    }

    #[test]
    fn median_bundle() {
        let g = grid(&[0.4]);
        let ex = median_example(0.4, &g).unwrap();
        let rep = worst_case(&ex.value, &ex.set).unwrap();
        assert!((rep.value - ex.guarantee).abs() < 1e-9);
        assert!(ex.half_space().contains(&ex.prior, 1e-12).unwrap());
        assert!(median_example(0.4001, &g).is_err());
    }
}
