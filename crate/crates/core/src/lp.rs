//! Dense two-phase simplex with deterministic pivoting.
//!
//! Minimization over `A_eq x = b_eq`, `A_le x <= b_le`, and per-variable
//! bounds. Pivot selection is Dantzig's rule with lowest-index tie-breaking,
//! falling back to Bland's rule after a fixed stall count, so every solve is
//! deterministic and cycle-free.

const PIVOT_EPS: f64 = 1e-10;
/// Smallest pivot element the ratio test will accept; anything smaller
/// amplifies roundoff beyond repair.
const PIVOT_FLOOR: f64 = 1e-7;
const FEAS_EPS: f64 = 1e-7;
const STALL_LIMIT: usize = 64;

/// Lower/upper bound on one variable. `f64::NEG_INFINITY` /
/// `f64::INFINITY` encode unbounded sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn non_negative() -> Self {
        Bounds {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn free() -> Self {
        Bounds {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi }
    }
}

/// A linear program in minimization form.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    /// Objective coefficients, one per variable.
    pub objective: Vec<f64>,
    /// Equality rows `(a, b)` meaning `a . x = b`.
    pub eq: Vec<(Vec<f64>, f64)>,
    /// Inequality rows `(a, b)` meaning `a . x <= b`.
    pub le: Vec<(Vec<f64>, f64)>,
    /// Per-variable bounds; defaults to non-negative when empty.
    pub bounds: Vec<Bounds>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("row {row} has {got} coefficients, expected {want}")]
    RowDimension { row: usize, got: usize, want: usize },
    #[error("non-finite coefficient encountered")]
    NonFinite,
    #[error("pivot limit exceeded")]
    Stalled,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        for (row, (a, b)) in self.eq.iter().chain(self.le.iter()).enumerate() {
            if a.len() != n {
                return Err(LpError::RowDimension {
                    row,
                    got: a.len(),
                    want: n,
                });
            }
            if !b.is_finite() || !a.iter().all(|v| v.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        Ok(())
    }
}

/// Solves `min c . x` over the program's constraint set.
pub fn lp_min(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let default_bounds = Bounds::non_negative();
    let bound = |j: usize| -> Bounds {
        lp.bounds.get(j).copied().unwrap_or(default_bounds)
    };

    // Rewrite onto non-negative variables: shifted (finite lower bound),
    // split (free), or negated-shifted (upper bound only). Finite upper
    // bounds become explicit rows after the shift.
    #[derive(Clone, Copy)]
    enum VarMap {
        Shift { col: usize, lo: f64 },
        Split { pos: usize, neg: usize },
        NegShift { col: usize, hi: f64 },
    }
    let mut maps = Vec::with_capacity(n);
    let mut cols = 0usize;
    for j in 0..n {
        let b = bound(j);
        if b.lo.is_finite() {
            maps.push(VarMap::Shift { col: cols, lo: b.lo });
            cols += 1;
        } else if b.hi.is_finite() {
            maps.push(VarMap::NegShift { col: cols, hi: b.hi });
            cols += 1;
        } else {
            maps.push(VarMap::Split {
                pos: cols,
                neg: cols + 1,
            });
            cols += 2;
        }
    }

    let translate = |a: &[f64]| -> (Vec<f64>, f64) {
        // Returns the row over standard variables plus the constant shift
        // moved to the right-hand side.
        let mut row = vec![0.0; cols];
        let mut shift = 0.0;
        for (j, &coef) in a.iter().enumerate() {
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    row[col] += coef;
                    shift += coef * lo;
                }
                VarMap::NegShift { col, hi } => {
                    row[col] -= coef;
                    shift += coef * hi;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += coef;
                    row[neg] -= coef;
                }
            }
        }
        (row, shift)
    };

    let mut eq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut le_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (a, b) in &lp.eq {
        let (row, shift) = translate(a);
        eq_rows.push((row, b - shift));
    }
    for (a, b) in &lp.le {
        let (row, shift) = translate(a);
        le_rows.push((row, b - shift));
    }
    // Finite upper bounds on shifted variables.
    for (j, map) in maps.iter().enumerate() {
        let b = bound(j);
        if b.lo.is_finite() && b.hi.is_finite() {
            if b.hi < b.lo {
                return Err(LpError::Infeasible);
            }
            let mut row = vec![0.0; cols];
            if let VarMap::Shift { col, lo } = *map {
                row[col] = 1.0;
                le_rows.push((row, b.hi - lo));
            }
        }
    }

    let (obj_row, obj_shift) = translate(&lp.objective);
    let std_x = simplex_standard(&obj_row, &eq_rows, &le_rows, cols)?;

    let mut x = vec![0.0; n];
    for (j, map) in maps.iter().enumerate() {
        x[j] = match *map {
            VarMap::Shift { col, lo } => std_x[col] + lo,
            VarMap::NegShift { col, hi } => hi - std_x[col],
            VarMap::Split { pos, neg } => std_x[pos] - std_x[neg],
        };
    }
    let value: f64 = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    debug_assert!((value - (dot(&obj_row, &std_x) + obj_shift)).abs() <= 1e-6 * (1.0 + value.abs()));
    Ok(LpSolution { value, x })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-phase tableau simplex for `min c . x`, `A_eq x = b_eq`,
/// `A_le x <= b_le`, `x >= 0`. Returns the solution over the `cols`
/// structural variables.
///
/// Degeneracy is handled by a deterministic row-indexed perturbation of the
/// right-hand side in the relaxing direction; the final basis is re-solved
/// against the unperturbed data, which is exact because dual feasibility of
/// a basis does not involve the right-hand side. If the perturbed run comes
/// back unbounded, stalls, or lands on a basis that is primal-infeasible
/// for the exact data, the solve is repeated without perturbation.
/// Infeasibility of the perturbed (relaxed) problem implies infeasibility
/// of the original and is reported directly.
fn simplex_standard(
    c: &[f64],
    eq_rows: &[(Vec<f64>, f64)],
    le_rows: &[(Vec<f64>, f64)],
    cols: usize,
) -> Result<Vec<f64>, LpError> {
    match simplex_attempt(c, eq_rows, le_rows, cols, true) {
        Ok(x) => Ok(x),
        Err(LpError::Infeasible) => Err(LpError::Infeasible),
        Err(_) => simplex_attempt(c, eq_rows, le_rows, cols, false),
    }
}

fn simplex_attempt(
    c: &[f64],
    eq_rows: &[(Vec<f64>, f64)],
    le_rows: &[(Vec<f64>, f64)],
    cols: usize,
    perturb: bool,
) -> Result<Vec<f64>, LpError> {
    let m = eq_rows.len() + le_rows.len();
    let n_slack = le_rows.len();
    // Column layout: structural | slack | artificial.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut needs_artificial: Vec<bool> = Vec::with_capacity(m);
    let mut slack_col_of_row: Vec<Option<usize>> = Vec::with_capacity(m);

    for (a, b) in eq_rows {
        let (mut row, mut b) = (a.clone(), *b);
        if b < 0.0 {
            for v in &mut row {
                *v = -*v;
            }
            b = -b;
        }
        row.resize(cols, 0.0);
        rows.push(row);
        rhs.push(b);
        needs_artificial.push(true);
        slack_col_of_row.push(None);
    }
    for (k, (a, b)) in le_rows.iter().enumerate() {
        let mut row = a.clone();
        row.resize(cols, 0.0);
        let mut b = *b;
        let mut slack_sign = 1.0;
        if b < 0.0 {
            for v in &mut row {
                *v = -*v;
            }
            b = -b;
            slack_sign = -1.0;
        }
        row.resize(cols + n_slack, 0.0);
        row[cols + k] = slack_sign;
        rows.push(row);
        rhs.push(b);
        // A negated <= row has a -1 slack, so it cannot seed the basis.
        needs_artificial.push(slack_sign < 0.0);
        slack_col_of_row.push(Some(cols + k));
    }
    for row in &mut rows {
        row.resize(cols + n_slack, 0.0);
    }

    let n_art = needs_artificial.iter().filter(|&&b| b).count();
    let total = cols + n_slack + n_art;
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    {
        let mut art = 0usize;
        for (i, row) in rows.iter_mut().enumerate() {
            row.resize(total, 0.0);
            if needs_artificial[i] {
                let col = cols + n_slack + art;
                art += 1;
                row[col] = 1.0;
                basis.push(col);
            } else {
                basis.push(slack_col_of_row[i].expect("slack seeds basis"));
            }
        }
    }

    // Keep the exact system for the final re-solve.
    let rows_orig = rows.clone();
    let rhs_orig = rhs.clone();

    // Anti-degeneracy perturbation, relaxing only: rows seeded by a slack
    // variable may take extra right-hand side; rows seeded by an artificial
    // (equalities and negated inequalities) are left exact.
    if perturb {
        for i in 0..m {
            if !needs_artificial[i] {
                let delta = 1e-9 * (1.0 + rhs[i].abs()) * (1.0 + (i as f64 + 1.0) / m as f64);
                rhs[i] += delta;
            }
        }
    }

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        phase1[cols + n_slack..].fill(1.0);
        let value = run_simplex(&mut rows, &mut rhs, &mut basis, &phase1)?;
        if value > FEAS_EPS {
            return Err(LpError::Infeasible);
        }
        // Drive remaining artificials out of the basis.
        for i in 0..m {
            if basis[i] >= cols + n_slack {
                let pivot_col = (0..cols + n_slack).find(|&j| rows[i][j].abs() > PIVOT_EPS);
                if let Some(j) = pivot_col {
                    pivot(&mut rows, &mut rhs, &mut basis, i, j);
                }
                // Otherwise the row is redundant; the artificial stays
                // parked at zero.
            }
        }
    }

    // Phase 2 over the original objective, artificial columns frozen.
    let mut phase2 = vec![0.0; total];
    phase2[..cols].copy_from_slice(c);
    let frozen = cols + n_slack;
    run_simplex_restricted(&mut rows, &mut rhs, &mut basis, &phase2, frozen)?;

    // Re-solve the final basis against the unperturbed right-hand side.
    let x_basis = solve_basis(&rows_orig, &rhs_orig, &basis)?;
    if perturb
        && x_basis
            .iter()
            .any(|&v| v < -1e-6)
    {
        // The perturbed optimum's basis is not primal-feasible for the
        // exact data; signal the caller to retry without perturbation.
        return Err(LpError::Stalled);
    }
    let mut x = vec![0.0; cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            x[b] = x_basis[i].max(0.0);
        }
    }
    Ok(x)
}

/// Solves `B u = b` where `B` collects the basis columns of the original
/// constraint matrix, by Gaussian elimination with partial pivoting.
fn solve_basis(rows: &[Vec<f64>], rhs: &[f64], basis: &[usize]) -> Result<Vec<f64>, LpError> {
    let m = rows.len();
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| basis.iter().map(|&j| rows[i][j]).collect())
        .collect();
    let mut b: Vec<f64> = rhs.to_vec();
    for k in 0..m {
        let (piv_row, piv_val) = (k..m)
            .map(|i| (i, a[i][k].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if piv_val <= 1e-12 {
            return Err(LpError::Stalled);
        }
        a.swap(k, piv_row);
        b.swap(k, piv_row);
        let inv = 1.0 / a[k][k];
        let (lead, rest) = a.split_at_mut(k + 1);
        let pivot_row = &lead[k];
        for (i, row) in rest.iter_mut().enumerate() {
            let factor = row[k] * inv;
            if factor != 0.0 {
                for (v, &p) in row[k..].iter_mut().zip(&pivot_row[k..]) {
                    *v -= factor * p;
                }
                b[k + 1 + i] -= factor * b[k];
            }
        }
    }
    let mut u = vec![0.0; m];
    for k in (0..m).rev() {
        let mut v = b[k];
        for j in k + 1..m {
            v -= a[k][j] * u[j];
        }
        u[k] = v / a[k][k];
    }
    Ok(u)
}

fn run_simplex(
    rows: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    c: &[f64],
) -> Result<f64, LpError> {
    run_simplex_restricted(rows, rhs, basis, c, c.len())
}

/// Simplex over columns `[0, allowed)`; returns the optimal objective value.
fn run_simplex_restricted(
    rows: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    c: &[f64],
    allowed: usize,
) -> Result<f64, LpError> {
    let m = rows.len();
    let mut duals = vec![0.0; c.len()];
    let mut bland = false;
    let mut stalled = 0usize;
    let mut incumbent = f64::INFINITY;
    let max_iters = 50_000 + 200 * (m + c.len());
    for _ in 0..max_iters {
        // Reduced costs via the current tableau: z_j - c_j = cb . B^-1 A_j - c_j.
        duals[..allowed].fill(0.0);
        for (i, row) in rows.iter().enumerate() {
            let cb = c[basis[i]];
            if cb != 0.0 {
                for (d, &a) in duals[..allowed].iter_mut().zip(row) {
                    *d += cb * a;
                }
            }
        }
        for (d, &cj) in duals[..allowed].iter_mut().zip(c) {
            *d -= cj;
        }
        let entering = if bland {
            (0..allowed).find(|&j| duals[j] > PIVOT_EPS)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for (j, &d) in duals[..allowed].iter().enumerate() {
                if d > PIVOT_EPS && best.is_none_or(|(_, v)| d > v) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        };
        let value: f64 = basis
            .iter()
            .enumerate()
            .map(|(i, &b)| c[b] * rhs[i])
            .sum();
        let entering = match entering {
            Some(j) => j,
            None => return Ok(value),
        };
        // Once progress dries up, switch to Bland's rule for good: with
        // lowest-index entering and leaving choices the simplex cannot
        // cycle.
        if incumbent.is_infinite() || value < incumbent - 1e-10 * (1.0 + incumbent.abs()) {
            incumbent = value;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                bland = true;
            }
        }
        // Two-pass ratio test: find the minimal ratio over usable pivots,
        // then pick the numerically largest pivot element among near-ties,
        // breaking residual ties towards the lowest basis index.
        let mut min_ratio = f64::INFINITY;
        for i in 0..m {
            let a = rows[i][entering];
            if a > PIVOT_FLOOR {
                min_ratio = min_ratio.min(rhs[i].max(0.0) / a);
            }
        }
        if min_ratio.is_infinite() {
            return Err(LpError::Unbounded);
        }
        let ratio_cut = min_ratio + 1e-9 * (1.0 + min_ratio.abs());
        let mut leave_row = None;
        let mut best_a = 0.0;
        for i in 0..m {
            let a = rows[i][entering];
            if a > PIVOT_FLOOR && rhs[i].max(0.0) / a <= ratio_cut {
                let better = match leave_row {
                    None => true,
                    Some(li) => {
                        a > best_a * (1.0 + 1e-12)
                            || ((a - best_a).abs() <= 1e-12 * best_a && basis[i] < basis[li])
                    }
                };
                if better {
                    leave_row = Some(i);
                    best_a = a;
                }
            }
        }
        let leave_row = leave_row.expect("ratio test found a row");
        pivot(rows, rhs, basis, leave_row, entering);
    }
    Err(LpError::Stalled)
}

fn pivot(rows: &mut [Vec<f64>], rhs: &mut [f64], basis: &mut [usize], r: usize, col: usize) {
    let piv = rows[r][col];
    let inv = 1.0 / piv;
    for v in rows[r].iter_mut() {
        *v *= inv;
    }
    rhs[r] *= inv;
    rows[r][col] = 1.0;
    let pivot_row = rows[r].clone();
    let pivot_rhs = rhs[r];
    for (i, row) in rows.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let factor = row[col];
        if factor != 0.0 {
            for (v, &p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[col] = 0.0;
            rhs[i] -= factor * pivot_rhs;
        }
    }
    basis[r] = col;
}
