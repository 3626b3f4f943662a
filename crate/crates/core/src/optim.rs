//! Numerical kernels: a dense two-phase simplex solver and a bisection root
//! finder.
//!
//! Programs are minimizations over variables with lower bounds (default 0)
//! and optional upper bounds. Entering columns are chosen by most negative
//! reduced cost (ties to the lowest index); after a run of degenerate pivots
//! the solver switches to Bland's rule for the rest of the phase, which
//! guarantees termination.

use crate::error::{Error, Result};

/// Feasibility tolerance, relative to the largest right-hand side.
pub const FEAS_TOL: f64 = 1e-8;
/// Smallest pivot magnitude accepted by the ratio test.
pub const PIVOT_TOL: f64 = 1e-10;
/// Reduced-cost threshold for optimality.
const OPT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    /// Signed violation: positive when the row is not satisfied by `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.relation {
            Relation::Le => lhs - self.rhs,
            Relation::Ge => self.rhs - lhs,
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Variable bounds `lo ≤ x ≤ hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { lo: 0.0, hi: None }
    }
}

/// `min cᵀx` subject to the constraint rows and variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            bounds: vec![Bounds::default(); n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints
            .push(Constraint::new(coeffs, relation, rhs));
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: Option<f64>) -> &mut Self {
        self.bounds[var] = Bounds { lo, hi };
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if n == 0 {
            return Err(Error::DimensionMismatch("program has no variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite objective coefficient".into(),
            ));
        }
        for (k, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {k} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if row.coeffs.iter().any(|a| !a.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "row {k} has non-finite entries"
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if !b.lo.is_finite() || b.lo < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} needs a finite lower bound ≥ 0"
                )));
            }
            if let Some(hi) = b.hi {
                if !hi.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "variable {j} has a non-finite upper bound"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per user constraint row (`y ≥ 0` on `≥` rows, `y ≤ 0`
    /// on `≤` rows for a minimization).
    pub dual: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        let value = match status {
            LpStatus::Infeasible => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Self {
            status,
            x: vec![0.0; n],
            value,
            dual: vec![0.0; m],
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Standard-form row after bound shifting and sign normalization.
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
    /// +1 or −1: sign applied to make `rhs ≥ 0`.
    sign: f64,
    /// Index of the user row, or `None` for an upper-bound row.
    user: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Dantzig,
    Bland,
}

struct Tableau {
    m: usize,
    /// Total columns excluding the right-hand side.
    width: usize,
    /// Row-major `m × (width + 1)`; the last column is the right-hand side.
    t: Vec<f64>,
    /// Reduced costs; the last entry is minus the objective value.
    z: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may never enter (artificials in phase two).
    blocked: Vec<bool>,
    iterations: usize,
    max_iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.width + 1) + self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width + 1;
        let p = self.t[r * w + c];
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        self.t[r * w + c] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (x, &pk) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pk;
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        let f = self.z[c];
        if f != 0.0 {
            for (x, &pk) in self.z.iter_mut().zip(prow.iter()) {
                *x -= f * pk;
            }
            self.z[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.z = cost.to_vec();
        self.z.push(0.0);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let w = self.width + 1;
                for k in 0..w {
                    self.z[k] -= cb * self.t[i * w + k];
                }
            }
        }
    }

    fn entering(&self, rule: Rule) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.width {
            if self.blocked[j] || self.z[j] >= -OPT_TOL {
                continue;
            }
            match rule {
                Rule::Bland => return Some(j),
                Rule::Dantzig => {
                    if best.is_none_or(|(_, v)| self.z[j] < v) {
                        best = Some((j, self.z[j]));
                    }
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, c: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, c);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    fn run(&mut self) -> Result<PhaseEnd> {
        let mut rule = Rule::Dantzig;
        let mut degenerate = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Numerical(format!(
                    "simplex iteration cap {} reached",
                    self.max_iterations
                )));
            }
            let Some(c) = self.entering(rule) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some((r, ratio)) = self.leaving(c) else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN && rule == Rule::Dantzig {
                    log::debug!("switching to Bland's rule after {degenerate} degenerate pivots");
                    rule = Rule::Bland;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves `lp` by the two-phase simplex method.
///
/// Infeasible and unbounded programs are reported through
/// [`LpSolution::status`]; malformed input and numerical breakdown are errors.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let m_user = lp.constraints.len();
    let lo: Vec<f64> = lp.bounds.iter().map(|b| b.lo).collect();

    let mut rows: Vec<Row> = Vec::with_capacity(m_user);
    for (k, con) in lp.constraints.iter().enumerate() {
        let shift: f64 = con.coeffs.iter().zip(&lo).map(|(a, l)| a * l).sum();
        rows.push(Row {
            coeffs: con.coeffs.clone(),
            relation: con.relation,
            rhs: con.rhs - shift,
            sign: 1.0,
            user: Some(k),
        });
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(hi) = b.hi {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = 1.0;
            rows.push(Row {
                coeffs,
                relation: Relation::Le,
                rhs: hi - b.lo,
                sign: 1.0,
                user: None,
            });
        }
    }
    for row in rows.iter_mut() {
        if row.rhs < 0.0 {
            row.sign = -1.0;
            row.rhs = -row.rhs;
            row.coeffs.iter_mut().for_each(|a| *a = -*a);
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let base_value: f64 = lp.objective.iter().zip(&lo).map(|(c, l)| c * l).sum();

    if rows.is_empty() {
        // Only nonnegativity: bounded iff every cost is nonnegative.
        if lp.objective.iter().any(|&c| c < 0.0) {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, n, m_user, 0));
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            x: lo,
            value: base_value,
            dual: Vec::new(),
            iterations: 0,
        });
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let width = n + n_slack + n_art;
    let art_start = n + n_slack;

    let w = width + 1;
    let mut t = vec![0.0; m * w];
    let mut basis = vec![0; m];
    let mut slack_col = n;
    let mut art_col = art_start;
    for (i, row) in rows.iter().enumerate() {
        t[i * w..i * w + n].copy_from_slice(&row.coeffs);
        t[i * w + width] = row.rhs;
        match row.relation {
            Relation::Le => {
                t[i * w + slack_col] = 1.0;
                basis[i] = slack_col;
                slack_col += 1;
            }
            Relation::Ge => {
                t[i * w + slack_col] = -1.0;
                slack_col += 1;
                t[i * w + art_col] = 1.0;
                basis[i] = art_col;
                art_col += 1;
            }
            Relation::Eq => {
                t[i * w + art_col] = 1.0;
                basis[i] = art_col;
                art_col += 1;
            }
        }
    }
    // Keep an untouched copy of the standard-form matrix for refactorization.
    let original = t.clone();

    let mut tab = Tableau {
        m,
        width,
        t,
        z: Vec::new(),
        basis,
        blocked: vec![false; width],
        iterations: 0,
        max_iterations: 20_000.max(50 * (m + width)),
    };

    let scale = 1.0 + rows.iter().fold(0.0_f64, |a, r| a.max(r.rhs));
    let mut active_rows: Vec<usize> = (0..m).collect();

    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
        tab.set_costs(&phase1);
        tab.run()?;
        let infeasibility = -tab.z[width];
        if infeasibility > FEAS_TOL * scale {
            log::debug!("phase one ended with infeasibility {infeasibility:e}");
            return Ok(LpSolution::without_point(
                LpStatus::Infeasible,
                n,
                m_user,
                tab.iterations,
            ));
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are linearly dependent and get dropped.
        let mut keep = vec![true; m];
        for i in 0..m {
            if tab.basis[i] < art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                let a = tab.at(i, j).abs();
                if a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, _)) => tab.pivot(i, j),
                None => keep[i] = false,
            }
        }
        if keep.iter().any(|k| !k) {
            let mut t2 = Vec::with_capacity(m * w);
            let mut b2 = Vec::new();
            active_rows.clear();
            for i in 0..m {
                if keep[i] {
                    t2.extend_from_slice(&tab.t[i * w..(i + 1) * w]);
                    b2.push(tab.basis[i]);
                    active_rows.push(i);
                }
            }
            tab.t = t2;
            tab.basis = b2;
            tab.m = active_rows.len();
        }
        for j in art_start..width {
            tab.blocked[j] = true;
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    tab.set_costs(&cost);
    if let PhaseEnd::Unbounded = tab.run()? {
        return Ok(LpSolution::without_point(
            LpStatus::Unbounded,
            n,
            m_user,
            tab.iterations,
        ));
    }

    // Refactorize the final basis from the original matrix.
    let mb = tab.m;
    let mut bmat = vec![0.0; mb * mb];
    let mut rhs = vec![0.0; mb];
    for (bi, &i) in active_rows.iter().enumerate() {
        rhs[bi] = original[i * w + width];
        for (bj, &col) in tab.basis.iter().enumerate() {
            bmat[bi * mb + bj] = original[i * w + col];
        }
    }
    let lu = Lu::factor(bmat, mb)?;
    let xb = lu.solve(&rhs);
    let cb: Vec<f64> = tab.basis.iter().map(|&col| cost[col]).collect();
    let y = lu.solve_transposed(&cb);

    let mut x = lo.clone();
    for (bi, &col) in tab.basis.iter().enumerate() {
        if col < n {
            x[col] += xb[bi].max(0.0);
        }
    }
    let mut dual = vec![0.0; m_user];
    for (bi, &i) in active_rows.iter().enumerate() {
        if let Some(k) = rows[i].user {
            dual[k] = rows[i].sign * y[bi];
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
        dual,
        iterations: tab.iterations,
    })
}

/// Dense LU factorization with partial pivoting.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pv <= 1e-13 * scale {
                return Err(Error::Numerical(
                    "singular basis after refactorization".into(),
                ));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                if f != 0.0 {
                    a[i * n + k] = f;
                    for j in k + 1..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                } else {
                    a[i * n + k] = 0.0;
                }
            }
        }
        Ok(Self { n, a, perm })
    }

    /// Solves `B x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.a[i * n + j] * x[j];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }

    /// Solves `Bᵀ y = c`.
    fn solve_transposed(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        // PB = LU, so Bᵀ = Uᵀ Lᵀ P; solve Uᵀ w = c, Lᵀ v = w, y = Pᵀ v.
        let mut w = c.to_vec();
        for i in 0..n {
            for j in 0..i {
                w[i] -= self.a[j * n + i] * w[j];
            }
            w[i] /= self.a[i * n + i];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                w[i] -= self.a[j * n + i] * w[j];
            }
        }
        let mut y = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            y[p] = w[k];
        }
        y
    }
}

/// Result of a bracketed root search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Default bracket width for [`solve_bracketed`].
pub const ROOT_TOL: f64 = 1e-10;

/// Bisection on `[lo, hi]` until the bracket is no wider than `tol`.
///
/// An endpoint with `|f| ≤ tol` is accepted as the root.
pub fn solve_bracketed(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<Root> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Numerical("function is NaN at the bracket".into()));
    }
    if fa.abs() <= tol {
        return Ok(Root {
            x: a,
            iterations: 0,
        });
    }
    if fb.abs() <= tol {
        return Ok(Root {
            x: b,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument(format!(
            "f has the same sign at both ends: f({lo}) = {fa}, f({hi}) = {fb}"
        )));
    }
    let neg_at_lo = fa < 0.0;
    let mut iterations = 0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return Ok(Root { x: mid, iterations });
        }
        if (fm < 0.0) == neg_at_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Root {
        x: 0.5 * (a + b),
        iterations,
    })
}
