//! Robustness of payoff guarantees to weak perturbations of the prior.
//!
//! A guarantee over a closed set is robust iff replacing `v` by its lower
//! semicontinuous envelope does not lower the worst case. On a grid the
//! envelope is replaced by windowed minima over a halving schedule of
//! windows, and a non-robust verdict comes with an explicit sequence of
//! priors that approach the set while paying visibly less than the
//! guarantee.

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::guarantee::{worst_case, GuaranteeReport};
use crate::measures::{expectation, lsc_envelope, push_mass, DiscretePrior, Grid, ValueFunction};

/// Number of windows in the default schedule.
pub const DEFAULT_WINDOWS: usize = 4;
/// Floor on the decision tolerance.
pub const MIN_TOLERANCE: f64 = 1e-4;
/// Atoms lighter than this are ignored when perturbing priors.
const ATOM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Robust,
    NonRobust,
    Inconclusive,
}

/// Priors approaching the set from outside, with their payoffs.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Window used for each prior, decreasing.
    pub windows: Vec<f64>,
    pub priors: Vec<DiscretePrior>,
    pub payoffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessCertificate {
    pub verdict: Verdict,
    /// `min_{π ∈ Π} ⟨v, π⟩`.
    pub guarantee: f64,
    /// Guarantee minus envelope worst case at the smallest window.
    pub gap: f64,
    pub tolerance: f64,
    /// Windows, largest first.
    pub h_schedule: Vec<f64>,
    /// Envelope worst case at each window of the schedule.
    pub envelope_values: Vec<f64>,
    /// Largest slope of `v` between neighbours not separated by a jump.
    pub lipschitz: f64,
    /// See [`GuaranteeReport::sensitivity`].
    pub sensitivity: f64,
    pub witness: Option<Witness>,
}

/// `h_j = s·2^{k−j}` for `j = 1..k`.
pub fn window_schedule(grid: &Grid, k: usize) -> Vec<f64> {
    let s = grid.max_spacing();
    (1..=k)
        .map(|j| s * f64::powi(2.0, (k - j) as i32))
        .collect()
}

/// Largest adjacent slope of `v`, skipping jumps.
///
/// A step counts as a jump when it exceeds four times the median absolute
/// step over the seven steps centred on it.
pub fn lipschitz_proxy(v: &ValueFunction) -> f64 {
    let pts = v.grid().points();
    let steps: Vec<f64> = v.values().windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut lip = 0.0_f64;
    for k in 0..steps.len() {
        let lo = k.saturating_sub(3);
        let hi = (k + 4).min(steps.len());
        let mut local: Vec<f64> = steps[lo..hi].to_vec();
        local.sort_by(f64::total_cmp);
        let median = local[local.len() / 2];
        if steps[k] > 4.0 * median + 1e-12 {
            continue;
        }
        lip = lip.max(steps[k] / (pts[k + 1] - pts[k]));
    }
    lip
}

/// Decides whether the guarantee of `v` over `set` is robust.
///
/// With `g(h)` the guarantee minus the envelope worst case at window `h`
/// and `s` the largest grid spacing, the tolerance is
/// `max(2s·(L + S), 1e-4)` where `L` is [`lipschitz_proxy`] and `S` the
/// dual sensitivity of the worst-case program. The verdict is robust when
/// `g(s)` is within tolerance, non-robust when `g(s)` exceeds twice the
/// tolerance and `g(2s)` exceeds it too, and inconclusive otherwise.
pub fn check_robust(v: &ValueFunction, set: &AmbiguitySet) -> Result<RobustnessCertificate> {
    check_robust_with(v, set, &RobustOptions::default())
}

/// Knobs of [`check_robust`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustOptions {
    /// Number of windows, the smallest being one grid cell.
    pub windows: usize,
    /// Floor of the tolerance.
    pub min_tolerance: f64,
}

impl Default for RobustOptions {
    fn default() -> Self {
        RobustOptions {
            windows: DEFAULT_WINDOWS,
            min_tolerance: MIN_TOLERANCE,
        }
    }
}

/// [`check_robust`] with explicit options.
pub fn check_robust_with(
    v: &ValueFunction,
    set: &AmbiguitySet,
    opts: &RobustOptions,
) -> Result<RobustnessCertificate> {
    if !(opts.min_tolerance > 0.0) || !opts.min_tolerance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance floor must be positive, got {}",
            opts.min_tolerance
        )));
    }
    let base = worst_case(v, set)?;
    let mut cert = assess(v, set, &base, opts)?;
    if cert.verdict == Verdict::NonRobust {
        cert.witness = Some(build_witness(v, set, &base, &cert, opts.windows)?);
    }
    Ok(cert)
}

fn assess(
    v: &ValueFunction,
    set: &AmbiguitySet,
    base: &GuaranteeReport,
    opts: &RobustOptions,
) -> Result<RobustnessCertificate> {
    let k = opts.windows;
    if k < 2 {
        return Err(Error::InvalidArgument(
            "the window schedule needs at least two windows".into(),
        ));
    }
    let grid = v.grid();
    let s = grid.max_spacing();
    let h_schedule = window_schedule(grid, k);
    let mut envelope_values = Vec::with_capacity(k);
    for &h in &h_schedule {
        let env = lsc_envelope(v, h)?;
        let rep = worst_case(&env, set)?;
        log::debug!("window {h:.3e}: envelope worst case {}", rep.value);
        envelope_values.push(rep.value);
    }
    let guarantee = base.value;
    let gap_at = |j: usize| (guarantee - envelope_values[j]).max(0.0);
    let gap = gap_at(k - 1);
    let lipschitz = lipschitz_proxy(v);
    let sensitivity = base.sensitivity;
    let tolerance = (2.0 * s * (lipschitz + sensitivity)).max(opts.min_tolerance);
    let verdict = if gap <= tolerance {
        Verdict::Robust
    } else if gap > 2.0 * tolerance && gap_at(k - 2) > tolerance {
        Verdict::NonRobust
    } else {
        Verdict::Inconclusive
    };
    log::info!("robustness: {verdict:?}, gap {gap:.6}, tolerance {tolerance:.2e}");
    Ok(RobustnessCertificate {
        verdict,
        guarantee,
        gap,
        tolerance,
        h_schedule,
        envelope_values,
        lipschitz,
        sensitivity,
        witness: None,
    })
}

/// `k` priors whose payoffs fall short of the guarantee by about the gap
/// while their distance to `set` shrinks with the window.
///
/// Fails unless [`check_robust`] finds the guarantee non-robust.
pub fn perturbation_witness(v: &ValueFunction, set: &AmbiguitySet, k: usize) -> Result<Witness> {
    let base = worst_case(v, set)?;
    let cert = assess(v, set, &base, &RobustOptions::default())?;
    if cert.verdict != Verdict::NonRobust {
        return Err(Error::Precondition(format!(
            "guarantee is not certified non-robust (verdict {:?})",
            cert.verdict
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "at least one witness prior is needed".into(),
        ));
    }
    build_witness(v, set, &base, &cert, k)
}

fn build_witness(
    v: &ValueFunction,
    set: &AmbiguitySet,
    base: &GuaranteeReport,
    cert: &RobustnessCertificate,
    k: usize,
) -> Result<Witness> {
    let windows = window_schedule(v.grid(), k);
    let mut priors = Vec::with_capacity(k);
    let mut payoffs = Vec::with_capacity(k);
    for &h in &windows {
        let env = lsc_envelope(v, h)?;
        // Prefer perturbing the worst prior itself; fall back on the
        // envelope program's minimizer when the worst prior misses the jumps.
        let mut prior = slide_atoms(v, &env, &base.worst_prior, h, cert.lipschitz)?;
        let mut payoff = expectation(v, &prior)?;
        if payoff > cert.guarantee - cert.gap / 2.0 {
            let anchor = worst_case(&env, set)?.worst_prior;
            prior = slide_atoms(v, &env, &anchor, h, cert.lipschitz)?;
            payoff = expectation(v, &prior)?;
        }
        priors.push(prior);
        payoffs.push(payoff);
    }
    Ok(Witness {
        windows,
        priors,
        payoffs,
    })
}

/// Moves every atom sitting on a jump to the cheapest state in its window.
///
/// An atom sits on a jump when `v` exceeds the envelope by more than the
/// `2·h·L` a Lipschitz function could account for.
fn slide_atoms(
    v: &ValueFunction,
    env: &ValueFunction,
    prior: &DiscretePrior,
    h: f64,
    lipschitz: f64,
) -> Result<DiscretePrior> {
    let mut out = prior.clone();
    for i in prior.support(ATOM_TOL) {
        if v.value(i) - env.value(i) <= 2.0 * h * lipschitz + 1e-12 {
            continue;
        }
        let j = window_argmin(v, i, h);
        out = push_mass(&out, i, j, prior.weight(i))?;
    }
    Ok(out)
}

/// Index minimizing `v` within distance `h` of state `i`; ties go to the
/// farthest state, then to the lowest index.
fn window_argmin(v: &ValueFunction, i: usize, h: f64) -> usize {
    let grid = v.grid();
    let ti = grid.point(i);
    let reach = h * (1.0 + 1e-9) + 1e-12;
    let mut best = i;
    for j in 0..grid.len() {
        let d = (grid.point(j) - ti).abs();
        if d > reach {
            continue;
        }
        let (vj, vb) = (v.value(j), v.value(best));
        let db = (grid.point(best) - ti).abs();
        if vj < vb - 1e-12 || ((vj - vb).abs() <= 1e-12 && d > db + 1e-12) {
            best = j;
        }
    }
    best
}

/// Fragility of a saddle point with a finitely supported prior.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleWitness {
    /// Support atom whose mass is moved.
    pub atom: usize,
    pub mass: f64,
    /// Priors moving the atom to weaker states approaching it from below.
    pub priors: Vec<DiscretePrior>,
    pub payoffs: Vec<f64>,
    /// `⟨v, π̂⟩` minus the payoff of the last prior.
    pub drop: f64,
}

/// Moves the mass of a profitable atom `θ₀` of `prior` onto the states just
/// below it, where the designer earns nothing.
///
/// The weaker type of `θ₀` is the grid point immediately below it; it
/// qualifies when its payoff is nonpositive or it pays no transfer. Further
/// points are added below while they keep qualifying, up to
/// [`DEFAULT_WINDOWS`]. Returns `None` when no atom qualifies. `set` must
/// contain `prior`.
pub fn saddle_fragility(
    v: &ValueFunction,
    prior: &DiscretePrior,
    transfers: &ValueFunction,
    set: &AmbiguitySet,
) -> Result<Option<SaddleWitness>> {
    let grid = v.grid();
    if prior.grid() != grid || transfers.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let support = prior.support(1e-9);
    let carried: f64 = support.iter().map(|&i| prior.weight(i)).sum();
    if carried < 1.0 - 1e-6 || 2 * support.len() > grid.len() {
        return Err(Error::InvalidArgument(
            "prior is not finitely supported at grid resolution".into(),
        ));
    }
    let value = expectation(v, prior)?;
    if !(value > 0.0) {
        return Err(Error::Precondition(format!(
            "saddle payoff must be positive, got {value}"
        )));
    }
    if !set.contains(prior, 1e-7)? {
        return Err(Error::InvalidArgument(
            "saddle prior lies outside the set".into(),
        ));
    }
    let weaker = |j: usize| v.value(j) <= 1e-12 || transfers.value(j) <= 1e-12;
    let mut best: Option<(usize, f64)> = None;
    for &i in &support {
        if i == 0 || v.value(i) <= 0.0 || !weaker(i - 1) {
            continue;
        }
        let score = prior.weight(i) * v.value(i);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    let Some((atom, _)) = best else {
        return Ok(None);
    };
    let mass = prior.weight(atom);
    let mut depth = 1;
    while depth < DEFAULT_WINDOWS && atom > depth && weaker(atom - depth - 1) {
        depth += 1;
    }
    let mut priors = Vec::with_capacity(depth);
    let mut payoffs = Vec::with_capacity(depth);
    for d in (1..=depth).rev() {
        let p = push_mass(prior, atom, atom - d, mass)?;
        payoffs.push(expectation(v, &p)?);
        priors.push(p);
    }
    let drop = value - payoffs.last().copied().unwrap_or(value);
    Ok(Some(SaddleWitness {
        atom,
        mass,
        priors,
        payoffs,
        drop,
    }))
}

/// Counterexample to robustness over a quantile set.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileCounterexample {
    /// `1{θ ≤ x_m}` for the largest quantile point `x_m`.
    pub value: ValueFunction,
    /// Member of the set placing its top atom at `x_m`.
    pub prior: DiscretePrior,
    /// Worst case of `value` over the set, equal to `α_m`.
    pub guarantee: f64,
    /// `prior` with the top atom moved to grid points just above `x_m`.
    pub witnesses: Vec<DiscretePrior>,
    /// Payoffs of the witnesses, each `α_{m−1}`.
    pub payoffs: Vec<f64>,
}

/// Builds `v = 1{θ ≤ x_m}` and priors that keep the quantile constraints
/// until the top atom slides just past `x_m`.
pub fn quantile_counterexample(set: &AmbiguitySet, grid: &Grid) -> Result<QuantileCounterexample> {
    let AmbiguitySet::Quantile { pairs } = set else {
        return Err(Error::InvalidArgument("expected a quantile set".into()));
    };
    let mut pairs = pairs.clone();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let &(x_top, a_top) = pairs
        .last()
        .ok_or_else(|| Error::InvalidArgument("quantile set without constraints".into()))?;
    if !(a_top > 0.0) {
        return Err(Error::InvalidArgument(
            "top quantile level must be positive".into(),
        ));
    }
    let top = grid.index_of(x_top).ok_or_else(|| {
        Error::InvalidArgument(format!("quantile point {x_top} is not on the grid"))
    })?;
    let value = ValueFunction::from_fn(grid, |t| f64::from(u8::from(t <= x_top + 1e-9)))?;
    let mut atoms = Vec::with_capacity(pairs.len());
    let mut prev = 0.0;
    for &(x, a) in &pairs[..pairs.len() - 1] {
        atoms.push((x, a - prev));
        prev = a;
    }
    atoms.push((x_top, 1.0 - prev));
    let prior = DiscretePrior::from_atoms(grid, &atoms)?;
    let guarantee = worst_case(&value, set)?.value;
    let mass = prior.weight(top);
    let mut witnesses = Vec::new();
    let mut payoffs = Vec::new();
    for d in (1..=DEFAULT_WINDOWS).rev() {
        if top + d >= grid.len() {
            continue;
        }
        let w = push_mass(&prior, top, top + d, mass)?;
        payoffs.push(expectation(&value, &w)?);
        witnesses.push(w);
    }
    if witnesses.is_empty() {
        return Err(Error::InvalidArgument(
            "no grid points above the top quantile point".into(),
        ));
    }
    Ok(QuantileCounterexample {
        value,
        prior,
        guarantee,
        witnesses,
        payoffs,
    })
}

/// Worst payoffs over a finite set before and after adding nearby priors.
#[derive(Clone, Debug, PartialEq)]
pub struct LscProbe {
    /// `min_{π ∈ Π} ⟨v, π⟩`.
    pub base_value: f64,
    /// Per member, the worst payoff over the set enlarged by every prior
    /// obtained from that member by moving one atom at most `scale`.
    pub perturbed_values: Vec<f64>,
    /// `base_value − min(perturbed_values)`.
    pub jump: f64,
}

pub fn hausdorff_lsc_probe(
    v: &ValueFunction,
    members: &[DiscretePrior],
    scale: f64,
) -> Result<LscProbe> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("empty set of priors".into()));
    }
    if !(scale >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale must be ≥ 0, got {scale}"
        )));
    }
    let mut base_value = f64::INFINITY;
    for p in members {
        base_value = base_value.min(expectation(v, p)?);
    }
    let grid = v.grid();
    let reach = scale * (1.0 + 1e-9);
    let mut perturbed_values = Vec::with_capacity(members.len());
    for p in members {
        let mut worst = base_value;
        if scale > 0.0 {
            for i in p.support(ATOM_TOL) {
                let ti = grid.point(i);
                for j in 0..grid.len() {
                    if j == i || (grid.point(j) - ti).abs() > reach {
                        continue;
                    }
                    // Exact change of the expectation when atom i moves to j.
                    let moved = expectation(v, p)? + p.weight(i) * (v.value(j) - v.value(i));
                    worst = worst.min(moved);
                }
            }
        }
        perturbed_values.push(worst);
    }
    let lowest = perturbed_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(LscProbe {
        base_value,
        perturbed_values,
        jump: base_value - lowest,
    })
}
