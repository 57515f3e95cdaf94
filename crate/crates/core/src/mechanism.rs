//! Favored-agent mechanisms, tabulated grid mechanisms, and the
//! feasibility / incentive-compatibility checkers.

use crate::certificate::{Certificate, Witness};
use crate::grid::Grid;
use crate::instance::{Instance, TypeProfile, SNAP, TOL};
use serde::{Deserialize, Serialize};

/// Tie rule when `max_{i != i*} t_i - c_i` equals the threshold exactly:
/// type (i) keeps the favored agent uninspected, type (ii) runs the
/// inspected net-payoff contest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    TypeI,
    TypeII,
}

/// A favored-agent mechanism: the good goes to agent `i_star` uninspected
/// unless some other agent's cost-adjusted type clears the threshold `nu`,
/// in which case the net-payoff maximizer (lexicographic tie-break) wins
/// with inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FavoredAgentMechanism {
    /// 0-based favored agent index.
    pub i_star: usize,
    pub nu: f64,
    pub tie_rule: TieRule,
}

impl FavoredAgentMechanism {
    pub fn new(i_star: usize, nu: f64, tie_rule: TieRule) -> Self {
        FavoredAgentMechanism {
            i_star,
            nu,
            tie_rule,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MechanismError {
    #[error("type profile outside the type space")]
    OutsideDomain,
    #[error("favored agent index {i_star} out of range for {agents} agents")]
    BadAgent { i_star: usize, agents: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error("weights must be non-negative and sum to 1 (sum {sum})")]
    BadWeights { sum: f64 },
    #[error("no mechanisms to mix")]
    Empty,
    #[error("threshold nu must satisfy nu >= max_i t_lo_i and nu > max_i (t_hi_i - c_i)")]
    PerturbationThreshold,
    #[error("grid does not contain the spike scenario (t_hi_i*, t_lo_-i*)")]
    MissingSpikeScenario,
    #[error("favored agent must attain max_i t_lo_i")]
    NotArgmaxFavored,
    #[error("csv: {0}")]
    Csv(String),
}

/// Evaluates the favored-agent allocation at one type profile.
///
/// Values within `1e-12` of the threshold are snapped onto it before the
/// tie rule is applied, so the semantically meaningful equality case
/// survives rounding.
pub fn fam_allocate(
    fam: &FavoredAgentMechanism,
    inst: &Instance,
    t: &TypeProfile,
) -> Result<(Vec<f64>, Vec<f64>), MechanismError> {
    let n = inst.num_agents();
    if fam.i_star >= n {
        return Err(MechanismError::BadAgent {
            i_star: fam.i_star,
            agents: n,
        });
    }
    if !inst.contains(t) {
        return Err(MechanismError::OutsideDomain);
    }
    let mut m = f64::NEG_INFINITY;
    for i in 0..n {
        if i != fam.i_star {
            m = m.max(t[i] - inst.cost(i));
        }
    }
    if (m - fam.nu).abs() <= SNAP {
        m = fam.nu;
    }
    let case_one = m < fam.nu || (m == fam.nu && fam.tie_rule == TieRule::TypeI);
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    if case_one {
        p[fam.i_star] = 1.0;
    } else {
        let best = (0..n)
            .map(|i| t[i] - inst.cost(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let winner = (0..n)
            .find(|&i| t[i] - inst.cost(i) >= best - SNAP)
            .expect("non-empty agent set");
        p[winner] = 1.0;
        q[winner] = 1.0;
    }
    Ok((p, q))
}

/// Principal's payoff `sum_i p_i t_i - q_i c_i` at one profile: `t_{i*}` in
/// the uninspected case, `max_i (t_i - c_i)` in the inspected case.
pub fn fam_payoff(
    fam: &FavoredAgentMechanism,
    inst: &Instance,
    t: &TypeProfile,
) -> Result<f64, MechanismError> {
    let (p, q) = fam_allocate(fam, inst, t)?;
    Ok((0..inst.num_agents())
        .map(|i| p[i] * t[i] - q[i] * inst.cost(i))
        .sum())
}

/// Allocation and inspection probabilities tabulated on a product grid,
/// scenario-major in the grid's flat-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMechanism {
    pub grid: Grid,
    /// `p[s][i]`: probability that agent `i` receives the good at scenario `s`.
    pub p: Vec<Vec<f64>>,
    /// `q[s][i]`: probability that agent `i` receives the good and is inspected.
    pub q: Vec<Vec<f64>>,
}

impl GridMechanism {
    pub fn payoff_at(&self, inst: &Instance, s: usize) -> f64 {
        let t = self.grid.scenario(s);
        (0..inst.num_agents())
            .map(|i| self.p[s][i] * t[i] - self.q[s][i] * inst.cost(i))
            .sum()
    }

    pub fn payoffs(&self, inst: &Instance) -> Vec<f64> {
        (0..self.grid.len()).map(|s| self.payoff_at(inst, s)).collect()
    }
}

/// Tabulates a favored-agent mechanism at every grid scenario.
pub fn fam_to_grid(
    fam: &FavoredAgentMechanism,
    inst: &Instance,
    grid: &Grid,
) -> Result<GridMechanism, MechanismError> {
    let mut p = Vec::with_capacity(grid.len());
    let mut q = Vec::with_capacity(grid.len());
    for t in grid.scenarios() {
        let (pi, qi) = fam_allocate(fam, inst, &t)?;
        p.push(pi);
        q.push(qi);
    }
    Ok(GridMechanism {
        grid: grid.clone(),
        p,
        q,
    })
}

/// Feasibility: `q_i <= p_i` for every agent and `sum_i p_i <= 1`, with all
/// values in `[0, 1]`, at every scenario.
pub fn check_fc(mech: &GridMechanism) -> Certificate {
    let check = "fc";
    for s in 0..mech.grid.len() {
        let t = mech.grid.scenario(s);
        let mut sum_p = 0.0;
        for i in 0..mech.grid.num_agents() {
            let (p, q) = (mech.p[s][i], mech.q[s][i]);
            if !(-TOL..=1.0 + TOL).contains(&p) || !(-TOL..=1.0 + TOL).contains(&q) {
                return Certificate::fail(
                    check,
                    TOL,
                    Witness::Constraint {
                        name: format!("p, q in [0,1] for agent {}", i + 1),
                        t: Some(t.0),
                    },
                );
            }
            if q > p + TOL {
                return Certificate::fail(
                    check,
                    TOL,
                    Witness::Constraint {
                        name: format!("q <= p for agent {}", i + 1),
                        t: Some(t.0),
                    },
                )
                .with_gap(p - q);
            }
            sum_p += p;
        }
        if sum_p > 1.0 + TOL {
            return Certificate::fail(
                check,
                TOL,
                Witness::Constraint {
                    name: "sum p <= 1".to_string(),
                    t: Some(t.0),
                },
            )
            .with_gap(1.0 - sum_p);
        }
    }
    Certificate::pass(check, TOL)
}

/// Incentive compatibility over grid-valued misreports:
/// `p_i(t) >= p_i(t'_i, t_-i) - q_i(t'_i, t_-i)` for every agent, scenario,
/// and misreport on the agent's axis.
pub fn check_ic(mech: &GridMechanism) -> Certificate {
    let check = "ic";
    let grid = &mech.grid;
    for s in 0..grid.len() {
        for i in 0..grid.num_agents() {
            for k in 0..grid.axis(i).len() {
                let s2 = grid.substitute(s, i, k);
                if s2 == s {
                    continue;
                }
                let lhs = mech.p[s][i];
                let rhs = mech.p[s2][i] - mech.q[s2][i];
                if lhs < rhs - TOL {
                    return Certificate::fail(
                        check,
                        TOL,
                        Witness::IcViolation {
                            agent: i + 1,
                            t: grid.scenario(s).0,
                            misreport: grid.axis(i)[k],
                        },
                    )
                    .with_gap(lhs - rhs);
                }
            }
        }
    }
    Certificate::pass(check, TOL)
}

/// Scenario-wise convex combination of mechanisms sharing one grid.
pub fn mix(mechs: &[GridMechanism], weights: &[f64]) -> Result<GridMechanism, MechanismError> {
    let first = mechs.first().ok_or(MechanismError::Empty)?;
    if mechs.len() != weights.len() {
        return Err(MechanismError::BadWeights {
            sum: weights.iter().sum(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < -SNAP) || (sum - 1.0).abs() > SNAP {
        return Err(MechanismError::BadWeights { sum });
    }
    if mechs.iter().any(|m| m.grid != first.grid) {
        return Err(MechanismError::GridMismatch);
    }
    let n = first.grid.num_agents();
    let len = first.grid.len();
    let mut p = vec![vec![0.0; n]; len];
    let mut q = vec![vec![0.0; n]; len];
    for (mech, &w) in mechs.iter().zip(weights) {
        for s in 0..len {
            for i in 0..n {
                p[s][i] += w * mech.p[s][i];
                q[s][i] += w * mech.q[s][i];
            }
        }
    }
    Ok(GridMechanism {
        grid: first.grid.clone(),
        p,
        q,
    })
}

/// Checks that `p_i - q_i` is constant along every agent-i grid line. Any
/// convex combination of favored-agent mechanisms has this property, so a
/// failure proves the mechanism is not such a combination.
pub fn check_constant_net_allocation(mech: &GridMechanism) -> Certificate {
    let check = "constant_net_allocation";
    let grid = &mech.grid;
    for i in 0..grid.num_agents() {
        // Iterate over lines by fixing the other agents' indices via the
        // scenarios whose agent-i index is 0.
        for s in 0..grid.len() {
            if grid.unravel(s)[i] != 0 {
                continue;
            }
            let base = mech.p[s][i] - mech.q[s][i];
            for k in 1..grid.axis(i).len() {
                let s2 = grid.substitute(s, i, k);
                let net = mech.p[s2][i] - mech.q[s2][i];
                if (net - base).abs() > TOL {
                    return Certificate::fail(
                        check,
                        TOL,
                        Witness::IcViolation {
                            agent: i + 1,
                            t: grid.scenario(s2).0,
                            misreport: grid.axis(i)[0],
                        },
                    )
                    .with_gap(net - base)
                    .with_note("p_i - q_i varies along the agent's axis");
                }
            }
        }
    }
    Certificate::pass(check, TOL)
}

/// The one-scenario inspection perturbation of an always-uninspected
/// favored-agent mechanism: identical to `fam`'s tabulation except that the
/// favored agent is inspected with probability
/// `min{1, (t_hi_i* - t_lo_i*) / c_i*}` at the spike scenario
/// `(t_hi_i*, t_lo_-i*)`. The result stays feasible and incentive
/// compatible, keeps the worst-case payoff `max_i t_lo_i`, but is not a
/// convex combination of favored-agent mechanisms.
pub fn build_section3_perturbation(
    inst: &Instance,
    fam: &FavoredAgentMechanism,
    grid: &Grid,
) -> Result<GridMechanism, MechanismError> {
    let n = inst.num_agents();
    if fam.i_star >= n {
        return Err(MechanismError::BadAgent {
            i_star: fam.i_star,
            agents: n,
        });
    }
    if inst.t_lo(fam.i_star) < inst.max_t_lo() - SNAP {
        return Err(MechanismError::NotArgmaxFavored);
    }
    let max_net_ceiling = (0..n)
        .map(|i| inst.t_hi(i) - inst.cost(i))
        .fold(f64::NEG_INFINITY, f64::max);
    if fam.nu < inst.max_t_lo() - SNAP || fam.nu <= max_net_ceiling + SNAP {
        return Err(MechanismError::PerturbationThreshold);
    }
    let spike: Vec<f64> = (0..n)
        .map(|i| {
            if i == fam.i_star {
                inst.t_hi(i)
            } else {
                inst.t_lo(i)
            }
        })
        .collect();
    let s = grid
        .position(&spike)
        .ok_or(MechanismError::MissingSpikeScenario)?;
    let mut mech = fam_to_grid(fam, inst, grid)?;
    let rate = (inst.t_hi(fam.i_star) - inst.t_lo(fam.i_star)) / inst.cost(fam.i_star);
    mech.q[s][fam.i_star] = rate.min(1.0);
    Ok(mech)
}

// --- CSV export/import ------------------------------------------------------

fn fmt_sig12(x: f64) -> String {
    // 12 significant digits; plain decimal where practical.
    let s = format!("{x:.11e}");
    match s.parse::<f64>() {
        Ok(v) if v == v.trunc() && v.abs() < 1e12 => format!("{v}"),
        _ => s,
    }
}

impl GridMechanism {
    /// One row per scenario: `t_1..t_I, p_1..p_I, q_1..q_I`, with a header
    /// row and 12-significant-digit values.
    pub fn to_csv(&self) -> String {
        let n = self.grid.num_agents();
        let mut out = String::new();
        let cols: Vec<String> = (1..=n)
            .map(|i| format!("t_{i}"))
            .chain((1..=n).map(|i| format!("p_{i}")))
            .chain((1..=n).map(|i| format!("q_{i}")))
            .collect();
        out.push_str(&cols.join(","));
        out.push('\n');
        for s in 0..self.grid.len() {
            let t = self.grid.scenario(s);
            let row: Vec<String> = t
                .as_slice()
                .iter()
                .chain(self.p[s].iter())
                .chain(self.q[s].iter())
                .map(|&v| fmt_sig12(v))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV format written by [`GridMechanism::to_csv`]. The
    /// scenario columns must enumerate a complete product grid.
    pub fn from_csv(inst: &Instance, text: &str) -> Result<GridMechanism, MechanismError> {
        let n = inst.num_agents();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MechanismError::Csv("empty file".into()))?;
        let want_cols = 3 * n;
        if header.split(',').count() != want_cols {
            return Err(MechanismError::Csv(format!(
                "expected {want_cols} columns for {n} agents"
            )));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let vals: Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| {
                MechanismError::Csv(format!("row {}: {e}", lineno + 2))
            })?;
            if vals.len() != want_cols {
                return Err(MechanismError::Csv(format!(
                    "row {}: expected {want_cols} values",
                    lineno + 2
                )));
            }
            rows.push(vals);
        }
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
        for row in &rows {
            for i in 0..n {
                if !axes[i].iter().any(|&x: &f64| (x - row[i]).abs() <= SNAP) {
                    axes[i].push(row[i]);
                }
            }
        }
        let grid = Grid::from_axes(inst, axes, usize::MAX)
            .map_err(|e| MechanismError::Csv(e.to_string()))?;
        if grid.len() != rows.len() {
            return Err(MechanismError::Csv(format!(
                "{} rows do not tile the {}-scenario product grid",
                rows.len(),
                grid.len()
            )));
        }
        let mut p = vec![vec![0.0; n]; grid.len()];
        let mut q = vec![vec![0.0; n]; grid.len()];
        let mut seen = vec![false; grid.len()];
        for row in &rows {
            let s = grid
                .position(&row[..n])
                .ok_or_else(|| MechanismError::Csv("scenario off grid".into()))?;
            if seen[s] {
                return Err(MechanismError::Csv("duplicate scenario row".into()));
            }
            seen[s] = true;
            p[s].copy_from_slice(&row[n..2 * n]);
            q[s].copy_from_slice(&row[2 * n..]);
        }
        Ok(GridMechanism { grid, p, q })
    }
}
