//! Worst-case expected payoff per ambiguity set, and the constructive
//! adversarial distributions behind the optimality conditions.

use crate::distribution::{
    DiscreteDistribution, Distribution, ProductTwoPointDistribution, TwoPointMarginal,
};
use crate::grid::Grid;
use crate::instance::{Ambiguity, Instance, TypeProfile, SNAP, TOL};
use crate::lp::{lp_min, LinearProgram, LpError};
use crate::mechanism::{fam_payoff, FavoredAgentMechanism};

#[derive(Debug, thiserror::Error)]
pub enum AmbiguityError {
    #[error("argmax of the mean lower bounds must be a singleton")]
    NonSingletonArgmax,
    #[error("type profile outside the type space")]
    OutsideDomain,
    #[error("target mean {target} outside [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("instance ambiguity must be {expected:?}")]
    WrongAmbiguity { expected: Ambiguity },
    #[error("marginal grid for agent {agent} is empty")]
    EmptyMarginalGrid { agent: usize },
    #[error("agent {agent}: grid cannot realize a mean in [{lo}, {hi}]")]
    MomentInfeasible { agent: usize, lo: f64, hi: f64 },
    #[error("nu = {nu} outside the admissible range [{lo}, {hi})")]
    NuOutOfRange { nu: f64, lo: f64, hi: f64 },
    #[error("lp: {0}")]
    Lp(#[from] LpError),
}

/// How a worst-case value relates to the true infimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCaseKind {
    /// Exact minimum over the grid scenario set.
    ExactGridMin,
    /// Exact LP minimum over grid-supported distributions in the moment
    /// polytope.
    LpOverGridPolytope,
    /// Enumerative bound: an upper bound on the infimum over the (nonconvex)
    /// independent ambiguity set.
    UpperBoundOnInf,
}

#[derive(Debug, Clone)]
pub enum WorstCaseWitness {
    Scenario(TypeProfile),
    Distribution(DiscreteDistribution),
    Product(ProductTwoPointDistribution),
}

#[derive(Debug, Clone)]
pub struct WorstCaseResult {
    pub value: f64,
    pub witness: WorstCaseWitness,
    pub kind: WorstCaseKind,
    /// Names of the binding moment constraints at the solution.
    pub binding: Vec<String>,
}

/// Worst case over a support-only ambiguity set: the minimum payoff over
/// all grid scenarios (Dirac adversaries suffice). Witness is the
/// lexicographically first argmin.
pub fn worst_case_support_only(
    payoff_fn: impl Fn(&TypeProfile) -> f64,
    grid: &Grid,
) -> WorstCaseResult {
    let mut best_value = f64::INFINITY;
    let mut best_scenario = None;
    for t in grid.scenarios() {
        let v = payoff_fn(&t);
        if v < best_value {
            best_value = v;
            best_scenario = Some(t);
        }
    }
    WorstCaseResult {
        value: best_value,
        witness: WorstCaseWitness::Scenario(best_scenario.expect("non-empty grid")),
        kind: WorstCaseKind::ExactGridMin,
        binding: Vec::new(),
    }
}

/// Worst case over the Markov ambiguity set restricted to grid-supported
/// distributions: solves
/// `min_w sum_s w_s payoff(s)` s.t. `sum w = 1`, `w >= 0`,
/// `mu_lo_i <= sum_s w_s t_i(s) <= mu_hi_i`.
pub fn worst_case_markov(
    payoff_fn: impl Fn(&TypeProfile) -> f64,
    grid: &Grid,
    inst: &Instance,
) -> Result<WorstCaseResult, AmbiguityError> {
    if inst.ambiguity != Ambiguity::Markov && inst.ambiguity != Ambiguity::MarkovIndependent {
        return Err(AmbiguityError::WrongAmbiguity {
            expected: Ambiguity::Markov,
        });
    }
    let n = inst.num_agents();
    let len = grid.len();
    let scenarios: Vec<TypeProfile> = grid.scenarios().collect();
    let payoffs: Vec<f64> = scenarios.iter().map(&payoff_fn).collect();

    let mut lp = LinearProgram {
        objective: payoffs,
        eq: vec![(vec![1.0; len], 1.0)],
        le: Vec::new(),
        bounds: Vec::new(),
    };
    for i in 0..n {
        let coef: Vec<f64> = scenarios.iter().map(|t| t[i]).collect();
        let neg: Vec<f64> = coef.iter().map(|v| -v).collect();
        lp.le.push((coef, inst.mu_hi(i).unwrap()));
        lp.le.push((neg, -inst.mu_lo(i).unwrap()));
    }
    let sol = match lp_min(&lp) {
        Ok(sol) => sol,
        Err(LpError::Infeasible) => {
            // Name the bound the grid cannot realize.
            for i in 0..n {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for t in &scenarios {
                    lo = lo.min(t[i]);
                    hi = hi.max(t[i]);
                }
                let (mu_lo, mu_hi) = (inst.mu_lo(i).unwrap(), inst.mu_hi(i).unwrap());
                if hi < mu_lo - TOL || lo > mu_hi + TOL {
                    return Err(AmbiguityError::MomentInfeasible {
                        agent: i + 1,
                        lo: mu_lo,
                        hi: mu_hi,
                    });
                }
            }
            return Err(AmbiguityError::Lp(LpError::Infeasible));
        }
        Err(e) => return Err(e.into()),
    };

    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (s, &w) in sol.x.iter().enumerate() {
        if w > 1e-12 {
            support.push(scenarios[s].clone());
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let dist = DiscreteDistribution { support, weights };
    debug_assert!(dist.check_membership(inst, TOL).is_ok());

    let mut binding = Vec::new();
    for (i, mean) in dist.means().iter().enumerate() {
        if (mean - inst.mu_lo(i).unwrap()).abs() <= TOL {
            binding.push(format!("agent {} mean at lower bound", i + 1));
        }
        if (mean - inst.mu_hi(i).unwrap()).abs() <= TOL {
            binding.push(format!("agent {} mean at upper bound", i + 1));
        }
    }
    Ok(WorstCaseResult {
        value: sol.value,
        witness: WorstCaseWitness::Distribution(dist),
        kind: WorstCaseKind::LpOverGridPolytope,
        binding,
    })
}

/// Lower-bounding adversarial search over independent two-point products:
/// per agent, every `(lo, hi)` pair from the marginal grid combined with a
/// target mean from `{mu_lo_i, mu_hi_i, pair midpoint, admissible grid
/// values}` fixes `p_hi`; the minimizing product over the full cross
/// product is returned. The value is an upper bound on the true infimum.
pub fn worst_case_independent(
    fam: &FavoredAgentMechanism,
    inst: &Instance,
    marginal_grid: &[Vec<f64>],
) -> Result<WorstCaseResult, AmbiguityError> {
    if inst.ambiguity != Ambiguity::MarkovIndependent {
        return Err(AmbiguityError::WrongAmbiguity {
            expected: Ambiguity::MarkovIndependent,
        });
    }
    let n = inst.num_agents();
    let mut candidates: Vec<Vec<TwoPointMarginal>> = Vec::with_capacity(n);
    for i in 0..n {
        let axis = marginal_grid
            .get(i)
            .filter(|a| !a.is_empty())
            .ok_or(AmbiguityError::EmptyMarginalGrid { agent: i + 1 })?;
        let (mu_lo, mu_hi) = (inst.mu_lo(i).unwrap(), inst.mu_hi(i).unwrap());
        let mut list = Vec::new();
        // Dirac marginals at admissible grid values.
        for &v in axis {
            if v >= mu_lo - SNAP && v <= mu_hi + SNAP {
                list.push(TwoPointMarginal::dirac(v));
            }
        }
        for (a, &lo) in axis.iter().enumerate() {
            for &hi in &axis[a + 1..] {
                let mut targets = vec![mu_lo, mu_hi, (lo + hi) / 2.0];
                targets.extend(axis.iter().copied());
                for m in targets {
                    if m < mu_lo - SNAP || m > mu_hi + SNAP || m < lo - SNAP || m > hi + SNAP {
                        continue;
                    }
                    let p_hi = ((m - lo) / (hi - lo)).clamp(0.0, 1.0);
                    list.push(TwoPointMarginal { lo, hi, p_hi });
                }
            }
        }
        if list.is_empty() {
            return Err(AmbiguityError::MomentInfeasible {
                agent: i + 1,
                lo: mu_lo,
                hi: mu_hi,
            });
        }
        candidates.push(list);
    }

    let mut best: Option<(f64, ProductTwoPointDistribution)> = None;
    let mut idx = vec![0usize; n];
    loop {
        let product = ProductTwoPointDistribution {
            marginals: idx
                .iter()
                .enumerate()
                .map(|(i, &k)| candidates[i][k].clone())
                .collect(),
        };
        let joint = product.to_joint();
        let value: f64 = joint
            .support
            .iter()
            .zip(&joint.weights)
            .map(|(t, &w)| w * fam_payoff(fam, inst, t).expect("support in domain"))
            .sum();
        // Strict improvement keeps the lexicographically first witness.
        if best.as_ref().is_none_or(|(v, _)| value < v - 1e-12) {
            best = Some((value, product));
        }
        let mut i = n;
        loop {
            if i == 0 {
                let (value, witness) = best.expect("at least one candidate");
                debug_assert!(witness.check_membership(inst, TOL).is_ok());
                return Ok(WorstCaseResult {
                    value,
                    witness: WorstCaseWitness::Product(witness),
                    kind: WorstCaseKind::UpperBoundOnInf,
                    binding: vec!["upper bound on inf (enumerative search)".to_string()],
                });
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < candidates[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Two-point joint distribution pinning every agent's mean to its lower
/// bound while placing positive mass on `t`:
/// `P = alpha d_t + (1 - alpha) d_that` with
/// `that = mu_lo + (eps / M) (mu_lo - t)`, `alpha = eps / (eps + M)`,
/// `M = max_i |mu_lo_i - t_i|`, and `eps` half the width of the admissible
/// interval. The companion point satisfies `max_{i != i*} that_i < that_i*`.
pub fn construct_two_point_markov(
    inst: &Instance,
    t: &TypeProfile,
) -> Result<DiscreteDistribution, AmbiguityError> {
    if !inst.mu_lo_argmax_is_singleton() {
        return Err(AmbiguityError::NonSingletonArgmax);
    }
    if !inst.contains(t) {
        return Err(AmbiguityError::OutsideDomain);
    }
    let n = inst.num_agents();
    let i_star = inst.argmax_mu_lo().unwrap();
    let mu_lo: Vec<f64> = (0..n).map(|i| inst.mu_lo(i).unwrap()).collect();

    let deviation = (0..n)
        .map(|i| (mu_lo[i] - t[i]).abs())
        .fold(0.0_f64, f64::max);
    if deviation <= SNAP {
        return Ok(DiscreteDistribution::dirac(TypeProfile(mu_lo)));
    }

    let slack_lo = (0..n)
        .map(|i| mu_lo[i] - inst.t_lo(i))
        .fold(f64::INFINITY, f64::min);
    let slack_hi = (0..n)
        .map(|i| inst.t_hi(i) - mu_lo[i])
        .fold(f64::INFINITY, f64::min);
    let rival = (0..n)
        .filter(|&i| i != i_star)
        .map(|i| mu_lo[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let eps = 0.5 * slack_lo.min(slack_hi).min((mu_lo[i_star] - rival) / 2.0);

    let alpha = eps / (eps + deviation);
    let t_hat: Vec<f64> = (0..n)
        .map(|i| mu_lo[i] + eps * (mu_lo[i] - t[i]) / deviation)
        .collect();
    Ok(DiscreteDistribution::two_point(
        t.clone(),
        TypeProfile(t_hat),
        alpha,
    ))
}

/// Independent product distribution whose marginals each place positive
/// mass on `t_i`, pin the rivals' means to their lower bounds and the
/// favored agent's mean to `mu_target_istar`, with every companion point
/// below `mu_lo_i*`.
pub fn construct_product_two_point(
    inst: &Instance,
    t: &TypeProfile,
    mu_target_istar: f64,
) -> Result<ProductTwoPointDistribution, AmbiguityError> {
    if !inst.mu_lo_argmax_is_singleton() {
        return Err(AmbiguityError::NonSingletonArgmax);
    }
    if !inst.contains(t) {
        return Err(AmbiguityError::OutsideDomain);
    }
    let n = inst.num_agents();
    let i_star = inst.argmax_mu_lo().unwrap();
    let (mu_lo_star, mu_hi_star) = (inst.mu_lo(i_star).unwrap(), inst.mu_hi(i_star).unwrap());
    if mu_target_istar < mu_lo_star - SNAP || mu_target_istar > mu_hi_star + SNAP {
        return Err(AmbiguityError::TargetOutOfRange {
            target: mu_target_istar,
            lo: mu_lo_star,
            hi: mu_hi_star,
        });
    }

    let headroom = (0..n)
        .map(|i| inst.t_hi(i) - inst.mu_hi(i).unwrap())
        .fold(f64::INFINITY, f64::min);
    let rival = (0..n)
        .filter(|&i| i != i_star)
        .map(|i| inst.mu_lo(i).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let eps = 0.5 * headroom.min((mu_lo_star - rival) / 2.0);

    let mut marginals = Vec::with_capacity(n);
    for i in 0..n {
        let goal = if i == i_star {
            mu_target_istar
        } else {
            inst.mu_lo(i).unwrap()
        };
        let (t_hat, alpha) = if (t[i] - goal).abs() <= SNAP {
            (t[i], 1.0)
        } else if t[i] > goal {
            let hat = inst.t_lo(i);
            (hat, (goal - hat) / (t[i] - hat))
        } else {
            let hat = goal + eps;
            (hat, (goal - hat) / (t[i] - hat))
        };
        // `alpha` is the probability of t_i; orient the pair as (lo, hi).
        let m = if t[i] >= t_hat {
            TwoPointMarginal {
                lo: t_hat,
                hi: t[i],
                p_hi: alpha,
            }
        } else {
            TwoPointMarginal {
                lo: t[i],
                hi: t_hat,
                p_hi: 1.0 - alpha,
            }
        };
        marginals.push(m);
    }
    Ok(ProductTwoPointDistribution { marginals })
}

/// The named counterexample distributions, on the two-agent Markov data
/// `T_1 = [1, 6]`, `T_2 = [0, 10]`, means `[4, 5] x [3, 7]`, `c = (2, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemarkId {
    R2,
    R3,
    R4,
}

pub fn remark_distribution(which: RemarkId, nu: f64) -> Result<Distribution, AmbiguityError> {
    let markov = crate::instance::remark2_instance();
    let independent = crate::instance::remark2_independent_instance();
    let dist = match which {
        RemarkId::R2 => {
            if !(1.0..6.0).contains(&nu) {
                return Err(AmbiguityError::NuOutOfRange {
                    nu,
                    lo: 1.0,
                    hi: 6.0,
                });
            }
            let d = DiscreteDistribution::two_point(
                TypeProfile(vec![6.0, 6.5 + nu / 4.0]),
                TypeProfile(vec![2.0, 0.0]),
                0.5,
            );
            d.check_membership(&markov, TOL)
                .expect("R2 lies in the Markov set");
            Distribution::Discrete(d)
        }
        RemarkId::R3 => {
            if !(1.0..4.0).contains(&nu) {
                return Err(AmbiguityError::NuOutOfRange {
                    nu,
                    lo: 1.0,
                    hi: 4.0,
                });
            }
            let p = ProductTwoPointDistribution {
                marginals: vec![
                    TwoPointMarginal::dirac(4.0),
                    TwoPointMarginal {
                        lo: 2.0,
                        hi: 5.0 + nu / 4.0,
                        p_hi: 0.5,
                    },
                ],
            };
            p.check_membership(&independent, TOL)
                .expect("R3 lies in the independent Markov set");
            Distribution::ProductTwoPoint(p)
        }
        RemarkId::R4 => {
            let spike = (independent.t_hi(0) + independent.mu_hi(0).unwrap()) / 2.0
                + independent.cost(1);
            let alpha = (independent.mu_lo(1).unwrap() - independent.t_lo(1))
                / (spike - independent.t_lo(1));
            let p = ProductTwoPointDistribution {
                marginals: vec![
                    TwoPointMarginal::dirac(independent.mu_lo(0).unwrap()),
                    TwoPointMarginal {
                        lo: independent.t_lo(1),
                        hi: spike,
                        p_hi: alpha,
                    },
                ],
            };
            p.check_membership(&independent, TOL)
                .expect("R4 lies in the independent Markov set");
            Distribution::ProductTwoPoint(p)
        }
    };
    Ok(dist)
}
