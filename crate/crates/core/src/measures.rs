//! Discrete measures on a finite grid of states.
//!
//! A [`Grid`] stands in for a truncated interval of the state space. Priors
//! are weight vectors on the grid, value functions are real vectors on the
//! grid, and atoms sit exactly on grid points so step functions and point
//! masses are represented without smoothing.
//!
//! CDFs are right-continuous: `F(θ_i) = Σ_{j ≤ i} p_j`.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Negative weights above this magnitude are treated as rounding and clamped.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Relative slack used when comparing distances against a window radius.
const WINDOW_SLACK: f64 = 1e-9;

/// Strictly increasing, nonnegative, finite grid of states.
#[derive(Clone, Debug)]
pub struct Grid {
    points: Arc<[f64]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points[..] == other.points[..]
    }
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two points, got {}",
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidGrid(format!(
                "points must be finite and nonnegative, got {bad}"
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self {
            points: points.into(),
        })
    }

    /// Uniform grid `lo, lo + spacing, …` up to and including `hi`.
    pub fn uniform(lo: f64, hi: f64, spacing: f64) -> Result<Self> {
        Self::with_points(lo, hi, spacing, &[])
    }

    /// Uniform grid on `[lo, hi]` with `extra` points inserted exactly.
    ///
    /// An extra point within `1e-9` of an existing grid point replaces it, so
    /// structural points (kinks, atoms) land exactly on the grid.
    pub fn with_points(lo: f64, hi: f64, spacing: f64, extra: &[f64]) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need lo < hi, got [{lo}, {hi}]"
            )));
        }
        let steps = ((hi - lo) / spacing).round() as usize;
        let mut points: Vec<f64> = (0..=steps).map(|k| lo + k as f64 * spacing).collect();
        if let Some(last) = points.last_mut() {
            if (*last - hi).abs() < 1e-9 * spacing.max(1.0) || *last > hi {
                *last = hi;
            }
        }
        if *points.last().unwrap() < hi {
            points.push(hi);
        }
        for &x in extra {
            if !x.is_finite() || x < lo || x > hi {
                continue;
            }
            match points.binary_search_by(|p| p.total_cmp(&x)) {
                Ok(_) => {}
                Err(pos) => {
                    let close_left = pos > 0 && (x - points[pos - 1]).abs() < 1e-9;
                    let close_right = pos < points.len() && (points[pos] - x).abs() < 1e-9;
                    if close_left {
                        points[pos - 1] = x;
                    } else if close_right {
                        points[pos] = x;
                    } else {
                        points.insert(pos, x);
                    }
                }
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Largest gap between adjacent points.
    pub fn max_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the grid point equal to `theta` (within `1e-9`).
    pub fn index_of(&self, theta: f64) -> Option<usize> {
        let pos = self.points.partition_point(|p| *p < theta - 1e-9);
        (pos < self.points.len() && (self.points[pos] - theta).abs() <= 1e-9).then_some(pos)
    }

    /// Index of the grid point closest to `theta`.
    pub fn nearest_index(&self, theta: f64) -> usize {
        let pos = self.points.partition_point(|p| *p < theta);
        if pos == 0 {
            0
        } else if pos == self.points.len()
            || theta - self.points[pos - 1] <= self.points[pos] - theta
        {
            pos - 1
        } else {
            pos
        }
    }

    pub(crate) fn within(&self, i: usize, j: usize, h: f64) -> bool {
        (self.points[i] - self.points[j]).abs() <= h * (1.0 + WINDOW_SLACK) + 1e-12
    }
}

fn check_same(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Probability weights on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePrior {
    grid: Grid,
    weights: Vec<f64>,
}

impl DiscretePrior {
    /// Validates weights: negatives above `-1e-12` are clamped to zero, larger
    /// negatives are rejected, and the total must be within `1e-10` of one.
    pub fn new(grid: &Grid, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidPrior(format!(
                "{} weights for a grid of {} points",
                weights.len(),
                grid.len()
            )));
        }
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return Err(Error::InvalidPrior("non-finite weight".into()));
            }
            if *w < 0.0 {
                if *w < -NEGATIVE_CLAMP {
                    return Err(Error::InvalidPrior(format!("negative weight {w}")));
                }
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPrior(format!("weights sum to {total}")));
        }
        Ok(Self {
            grid: grid.clone(),
            weights,
        })
    }

    /// Like [`DiscretePrior::new`] but rescales a slightly-off total (within
    /// `1e-6`) and clamps small negatives, for priors read back from an LP.
    pub fn from_solver(grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        let mut w: Vec<f64> = weights
            .into_iter()
            .map(|x| if x < 0.0 && x > -1e-9 { 0.0 } else { x })
            .collect();
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidPrior(format!(
                "solver weights sum to {total}"
            )));
        }
        w.iter_mut().for_each(|x| *x /= total);
        Self::new(grid, w)
    }

    pub fn point_mass(grid: &Grid, index: usize) -> Result<Self> {
        if index >= grid.len() {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range"
            )));
        }
        let mut w = vec![0.0; grid.len()];
        w[index] = 1.0;
        Self::new(grid, w)
    }

    /// Prior from `(state, mass)` atoms; every state must be a grid point.
    pub fn from_atoms(grid: &Grid, atoms: &[(f64, f64)]) -> Result<Self> {
        let mut w = vec![0.0; grid.len()];
        for &(theta, mass) in atoms {
            let i = grid
                .index_of(theta)
                .ok_or_else(|| Error::InvalidPrior(format!("state {theta} is not on the grid")))?;
            w[i] += mass;
        }
        Self::new(grid, w)
    }

    pub fn uniform(grid: &Grid) -> Self {
        let n = grid.len();
        Self {
            grid: grid.clone(),
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Indices carrying mass above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > tol)
            .collect()
    }

    /// Right-continuous CDF at each grid point.
    pub fn cdf(&self) -> Vec<f64> {
        self.weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.grid
            .points()
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| t * w)
            .sum()
    }

    /// `(1 - t)·self + t·other`.
    pub fn mix(&self, other: &DiscretePrior, t: f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "mixing weight {t} outside [0, 1]"
            )));
        }
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Self::new(&self.grid, w)
    }
}

/// Signed measure on a grid, e.g. the difference of two priors.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedWeights {
    grid: Grid,
    weights: Vec<f64>,
}

impl SignedWeights {
    pub fn new(grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "weight length differs from grid".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("non-finite signed weight".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            weights,
        })
    }

    /// `a - b`.
    pub fn difference(a: &DiscretePrior, b: &DiscretePrior) -> Result<Self> {
        check_same(&a.grid, &b.grid)?;
        let w = a
            .weights
            .iter()
            .zip(&b.weights)
            .map(|(x, y)| x - y)
            .collect();
        Self::new(&a.grid, w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Jordan decomposition `(μ₊, μ₋)` with `μ = μ₊ − μ₋`.
    pub fn jordan(&self) -> (Vec<f64>, Vec<f64>) {
        let pos = self.weights.iter().map(|w| w.max(0.0)).collect();
        let neg = self.weights.iter().map(|w| (-w).max(0.0)).collect();
        (pos, neg)
    }

    /// Total variation norm `sup_A |μ(A)|` of a zero-mass signed measure,
    /// i.e. half the absolute sum.
    pub fn total_variation(&self) -> f64 {
        0.5 * self.weights.iter().map(|w| w.abs()).sum::<f64>()
    }

    pub fn pair(&self, v: &ValueFunction) -> Result<f64> {
        check_same(&self.grid, &v.grid)?;
        Ok(self.weights.iter().zip(&v.values).map(|(w, x)| w * x).sum())
    }
}

/// Real-valued function on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    grid: Grid,
    values: Vec<f64>,
    sup_norm: f64,
}

impl ValueFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value".into()));
        }
        let sup_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            grid: grid.clone(),
            values,
            sup_norm,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().iter().map(|&t| f(t)).collect())
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// `⟨v, π⟩`.
pub fn expectation(v: &ValueFunction, prior: &DiscretePrior) -> Result<f64> {
    check_same(&v.grid, &prior.grid)?;
    Ok(v.values
        .iter()
        .zip(&prior.weights)
        .map(|(a, b)| a * b)
        .sum())
}

/// Total variation distance `½ Σ |p_i − p′_i|`.
pub fn tv_distance(a: &DiscretePrior, b: &DiscretePrior) -> Result<f64> {
    Ok(SignedWeights::difference(a, b)?.total_variation())
}

/// Wasserstein-1 distance with ground metric `|θ − θ′|`, computed as the
/// area between the two step CDFs.
pub fn wasserstein1(a: &DiscretePrior, b: &DiscretePrior) -> Result<f64> {
    check_same(&a.grid, &b.grid)?;
    let pts = a.grid.points();
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut total = 0.0;
    for i in 0..pts.len() - 1 {
        fa += a.weights[i];
        fb += b.weights[i];
        total += (fa - fb).abs() * (pts[i + 1] - pts[i]);
    }
    Ok(total)
}

/// Windowed lower envelope: `w_i = min { v_j : |θ_j − θ_i| ≤ h }`.
///
/// On a grid this is the proxy for the lower semicontinuous envelope; a
/// window of one grid spacing compares each point with its neighbours.
pub fn lsc_envelope(v: &ValueFunction, h: f64) -> Result<ValueFunction> {
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window radius must be ≥ 0, got {h}"
        )));
    }
    if h == 0.0 {
        return Ok(v.clone());
    }
    let grid = &v.grid;
    let n = grid.len();
    let vals = &v.values;
    let mut out = Vec::with_capacity(n);
    // Sliding-window minimum over [θ_i − h, θ_i + h].
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut right = 0;
    for i in 0..n {
        while right < n && grid.within(i, right, h) {
            while deque.back().is_some_and(|&b| vals[b] >= vals[right]) {
                deque.pop_back();
            }
            deque.push_back(right);
            right += 1;
        }
        while deque.front().is_some_and(|&f| !grid.within(i, f, h)) {
            deque.pop_front();
        }
        out.push(vals[*deque.front().expect("window contains i")]);
    }
    ValueFunction::new(grid, out)
}

/// Indices where `v` exceeds its windowed envelope by more than `eps`.
pub fn lsc_defect_indices(v: &ValueFunction, h: f64, eps: f64) -> Result<Vec<usize>> {
    if !(h > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(
            "window and threshold must be positive".into(),
        ));
    }
    let env = lsc_envelope(v, h)?;
    Ok((0..v.values.len())
        .filter(|&i| v.values[i] - env.values[i] > eps)
        .collect())
}

/// Moves mass `m` from grid index `from` to grid index `to`.
pub fn push_mass(prior: &DiscretePrior, from: usize, to: usize, m: f64) -> Result<DiscretePrior> {
    let n = prior.grid.len();
    if from >= n || to >= n {
        return Err(Error::InvalidArgument("index out of range".into()));
    }
    if !(m >= 0.0) || m > prior.weights[from] + NEGATIVE_CLAMP {
        return Err(Error::InvalidArgument(format!(
            "cannot move mass {m} from an atom of mass {}",
            prior.weights[from]
        )));
    }
    let mut w = prior.weights.clone();
    w[from] = (w[from] - m).max(0.0);
    w[to] += m;
    DiscretePrior::new(&prior.grid, w)
}

/// Hausdorff distance between two finite sets of priors, with
/// [`wasserstein1`] as the underlying metric.
pub fn hausdorff_distance(a: &[DiscretePrior], b: &[DiscretePrior]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "Hausdorff distance of an empty set".into(),
        ));
    }
    let directed = |x: &[DiscretePrior], y: &[DiscretePrior]| -> Result<f64> {
        let mut sup = 0.0_f64;
        for p in x {
            let mut inf = f64::INFINITY;
            for q in y {
                inf = inf.min(wasserstein1(p, q)?);
            }
            sup = sup.max(inf);
        }
        Ok(sup)
    };
    Ok(directed(a, b)?.max(directed(b, a)?))
}
