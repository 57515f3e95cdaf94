//! Finite-support type distributions, joint and independent-marginal forms.

use crate::instance::{Ambiguity, Instance, TypeProfile, SNAP};
use serde::{Deserialize, Serialize};

/// A finitely supported joint distribution over type profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub support: Vec<TypeProfile>,
    pub weights: Vec<f64>,
}

/// One two-point marginal: value `hi` with probability `p_hi`, else `lo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointMarginal {
    pub lo: f64,
    pub hi: f64,
    pub p_hi: f64,
}

impl TwoPointMarginal {
    pub fn dirac(v: f64) -> Self {
        TwoPointMarginal {
            lo: v,
            hi: v,
            p_hi: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.p_hi * self.hi + (1.0 - self.p_hi) * self.lo
    }
}

/// Independent product of per-agent two-point marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTwoPointDistribution {
    pub marginals: Vec<TwoPointMarginal>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DistributionError {
    #[error("weights must be non-negative (weight {idx} is {value})")]
    NegativeWeight { idx: usize, value: f64 },
    #[error("weights sum to {sum}, not 1")]
    WeightSum { sum: f64 },
    #[error("support points {a} and {b} coincide")]
    DuplicateSupport { a: usize, b: usize },
    #[error("support point {idx} lies outside the type space")]
    SupportOutsideDomain { idx: usize },
    #[error("marginal {agent}: lo {lo} > hi {hi}")]
    MarginalOrder { agent: usize, lo: f64, hi: f64 },
    #[error("marginal {agent}: p_hi {p_hi} outside [0, 1]")]
    MarginalProb { agent: usize, p_hi: f64 },
    #[error("agent {agent} mean {mean} violates bound [{lo}, {hi}]")]
    MeanBound {
        agent: usize,
        mean: f64,
        lo: f64,
        hi: f64,
    },
    #[error("distribution is not an independent product (probe point {idx})")]
    NotProduct { idx: usize },
    #[error("marginal count {got} does not match agent count {want}")]
    AgentCount { got: usize, want: usize },
}

impl DiscreteDistribution {
    pub fn dirac(t: TypeProfile) -> Self {
        DiscreteDistribution {
            support: vec![t],
            weights: vec![1.0],
        }
    }

    pub fn two_point(a: TypeProfile, b: TypeProfile, weight_a: f64) -> Self {
        if a == b {
            return DiscreteDistribution::dirac(a);
        }
        DiscreteDistribution {
            support: vec![a, b],
            weights: vec![weight_a, 1.0 - weight_a],
        }
    }

    /// Structural invariants plus support containment in the type space.
    pub fn validate(&self, inst: &Instance) -> Result<(), DistributionError> {
        let mut sum = 0.0;
        for (idx, &w) in self.weights.iter().enumerate() {
            if w < -SNAP {
                return Err(DistributionError::NegativeWeight { idx, value: w });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SNAP {
            return Err(DistributionError::WeightSum { sum });
        }
        for (idx, t) in self.support.iter().enumerate() {
            if !inst.contains(t) {
                return Err(DistributionError::SupportOutsideDomain { idx });
            }
            for (jdx, u) in self.support.iter().enumerate().skip(idx + 1) {
                let same = t
                    .as_slice()
                    .iter()
                    .zip(u.as_slice())
                    .all(|(&a, &b)| (a - b).abs() <= SNAP);
                if same {
                    return Err(DistributionError::DuplicateSupport { a: idx, b: jdx });
                }
            }
        }
        Ok(())
    }

    /// Per-agent expected types.
    pub fn means(&self) -> Vec<f64> {
        let n = self.support.first().map_or(0, TypeProfile::len);
        let mut m = vec![0.0; n];
        for (t, &w) in self.support.iter().zip(&self.weights) {
            for (mi, &ti) in m.iter_mut().zip(t.as_slice()) {
                *mi += w * ti;
            }
        }
        m
    }

    /// Membership in the instance's declared ambiguity set (tolerance `tol`).
    pub fn check_membership(&self, inst: &Instance, tol: f64) -> Result<(), DistributionError> {
        self.validate(inst)?;
        if inst.ambiguity == Ambiguity::SupportOnly {
            return Ok(());
        }
        for (i, mean) in self.means().iter().enumerate() {
            let (lo, hi) = (inst.mu_lo(i).unwrap(), inst.mu_hi(i).unwrap());
            if *mean < lo - tol || *mean > hi + tol {
                return Err(DistributionError::MeanBound {
                    agent: i + 1,
                    mean: *mean,
                    lo,
                    hi,
                });
            }
        }
        if inst.ambiguity == Ambiguity::MarkovIndependent {
            self.check_factorization(tol)?;
        }
        Ok(())
    }

    /// Verifies the joint factorizes into its own marginals:
    /// `P(t) = prod_i P_i(t_i)` at every support point.
    pub fn check_factorization(&self, tol: f64) -> Result<(), DistributionError> {
        let n = self.support.first().map_or(0, TypeProfile::len);
        // Marginal laws reconstructed from the joint.
        let mut marginals: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for (t, &w) in self.support.iter().zip(&self.weights) {
            for i in 0..n {
                let v = t[i];
                match marginals[i].iter_mut().find(|(x, _)| (*x - v).abs() <= SNAP) {
                    Some((_, mass)) => *mass += w,
                    None => marginals[i].push((v, w)),
                }
            }
        }
        let joint_prob = |t: &TypeProfile| -> f64 {
            self.support
                .iter()
                .zip(&self.weights)
                .filter(|(u, _)| {
                    u.as_slice()
                        .iter()
                        .zip(t.as_slice())
                        .all(|(&a, &b)| (a - b).abs() <= SNAP)
                })
                .map(|(_, &w)| w)
                .sum()
        };
        // Check over the full product of marginal supports, not just the
        // joint support: a missing product point breaks independence too.
        let mut idx = vec![0usize; n];
        loop {
            let t = TypeProfile(
                idx.iter()
                    .enumerate()
                    .map(|(i, &k)| marginals[i][k].0)
                    .collect(),
            );
            let expect: f64 = idx
                .iter()
                .enumerate()
                .map(|(i, &k)| marginals[i][k].1)
                .product();
            if (joint_prob(&t) - expect).abs() > tol {
                return Err(DistributionError::NotProduct {
                    idx: self.support.iter().position(|u| *u == t).unwrap_or(0),
                });
            }
            // odometer
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < marginals[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }
}

impl ProductTwoPointDistribution {
    pub fn validate(&self, inst: &Instance) -> Result<(), DistributionError> {
        if self.marginals.len() != inst.num_agents() {
            return Err(DistributionError::AgentCount {
                got: self.marginals.len(),
                want: inst.num_agents(),
            });
        }
        for (i, m) in self.marginals.iter().enumerate() {
            if m.lo > m.hi {
                return Err(DistributionError::MarginalOrder {
                    agent: i + 1,
                    lo: m.lo,
                    hi: m.hi,
                });
            }
            if !(-SNAP..=1.0 + SNAP).contains(&m.p_hi) {
                return Err(DistributionError::MarginalProb {
                    agent: i + 1,
                    p_hi: m.p_hi,
                });
            }
            if m.lo < inst.t_lo(i) - SNAP || m.hi > inst.t_hi(i) + SNAP {
                return Err(DistributionError::SupportOutsideDomain { idx: i });
            }
        }
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        self.marginals.iter().map(TwoPointMarginal::mean).collect()
    }

    pub fn check_membership(&self, inst: &Instance, tol: f64) -> Result<(), DistributionError> {
        self.validate(inst)?;
        if inst.ambiguity == Ambiguity::SupportOnly {
            return Ok(());
        }
        for (i, m) in self.marginals.iter().enumerate() {
            let (lo, hi) = (inst.mu_lo(i).unwrap(), inst.mu_hi(i).unwrap());
            let mean = m.mean();
            if mean < lo - tol || mean > hi + tol {
                return Err(DistributionError::MeanBound {
                    agent: i + 1,
                    mean,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Expands the product into its joint law over at most `2^I` profiles,
    /// merging coincident points and dropping zero-weight ones.
    pub fn to_joint(&self) -> DiscreteDistribution {
        let n = self.marginals.len();
        let mut support: Vec<TypeProfile> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for mask in 0..(1usize << n) {
            let mut t = Vec::with_capacity(n);
            let mut w = 1.0;
            for (i, m) in self.marginals.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    t.push(m.hi);
                    w *= m.p_hi;
                } else {
                    t.push(m.lo);
                    w *= 1.0 - m.p_hi;
                }
            }
            if w == 0.0 {
                continue;
            }
            let pos = support.iter().position(|u| {
                u.as_slice()
                    .iter()
                    .zip(&t)
                    .all(|(&a, &b)| (a - b).abs() <= SNAP)
            });
            match pos {
                Some(k) => weights[k] += w,
                None => {
                    support.push(TypeProfile(t));
                    weights.push(w);
                }
            }
        }
        DiscreteDistribution { support, weights }
    }
}

/// Either distribution form, as parsed from the text format.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Discrete(DiscreteDistribution),
    ProductTwoPoint(ProductTwoPointDistribution),
}

impl Distribution {
    pub fn to_joint(&self) -> DiscreteDistribution {
        match self {
            Distribution::Discrete(d) => d.clone(),
            Distribution::ProductTwoPoint(p) => p.to_joint(),
        }
    }

    pub fn check_membership(&self, inst: &Instance, tol: f64) -> Result<(), DistributionError> {
        match self {
            Distribution::Discrete(d) => d.check_membership(inst, tol),
            Distribution::ProductTwoPoint(p) => p.check_membership(inst, tol),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PayoffError {
    #[error("support point {idx} lies outside the type space")]
    OutsideDomain { idx: usize },
}

/// Exact finite sum `sum_k w_k payoff(t_k)`. Product distributions are
/// expanded over their (at most `2^I`-point) joint support.
pub fn expected_payoff(
    inst: &Instance,
    payoff_fn: impl Fn(&TypeProfile) -> f64,
    dist: &Distribution,
) -> Result<f64, PayoffError> {
    let joint = dist.to_joint();
    for (idx, t) in joint.support.iter().enumerate() {
        if !inst.contains(t) {
            return Err(PayoffError::OutsideDomain { idx });
        }
    }
    Ok(joint
        .support
        .iter()
        .zip(&joint.weights)
        .map(|(t, &w)| w * payoff_fn(t))
        .sum())
}

// --- text format -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DistributionJson {
    Discrete { points: Vec<DiscretePointJson> },
    ProductTwoPoint { marginals: Vec<TwoPointMarginal> },
}

#[derive(Serialize, Deserialize)]
struct DiscretePointJson {
    t: Vec<f64>,
    w: f64,
}

impl Distribution {
    pub fn from_json(json: &str) -> Result<Distribution, serde_json::Error> {
        let parsed: DistributionJson = serde_json::from_str(json)?;
        Ok(match parsed {
            DistributionJson::Discrete { points } => Distribution::Discrete(DiscreteDistribution {
                support: points.iter().map(|p| TypeProfile(p.t.clone())).collect(),
                weights: points.into_iter().map(|p| p.w).collect(),
            }),
            DistributionJson::ProductTwoPoint { marginals } => {
                Distribution::ProductTwoPoint(ProductTwoPointDistribution { marginals })
            }
        })
    }

    pub fn to_json(&self) -> String {
        let j = match self {
            Distribution::Discrete(d) => DistributionJson::Discrete {
                points: d
                    .support
                    .iter()
                    .zip(&d.weights)
                    .map(|(t, &w)| DiscretePointJson { t: t.0.clone(), w })
                    .collect(),
            },
            Distribution::ProductTwoPoint(p) => DistributionJson::ProductTwoPoint {
                marginals: p.marginals.clone(),
            },
        };
        serde_json::to_string_pretty(&j).expect("distribution serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{remark2_instance, TypeProfile, TOL};

    fn r2_dist(nu: f64) -> DiscreteDistribution {
        DiscreteDistribution::two_point(
            TypeProfile(vec![6.0, 6.5 + nu / 4.0]),
            TypeProfile(vec![2.0, 0.0]),
            0.5,
        )
    }

    #[test]
    fn r2_distribution_is_markov_member() {
        let inst = remark2_instance();
        let d = r2_dist(2.0);
        d.check_membership(&inst, TOL).unwrap();
        assert_eq!(d.means(), vec![4.0, 3.5]);
    }

    #[test]
    fn zero_weight_point_leaves_value_unchanged() {
        let inst = remark2_instance();
        let payoff = |t: &TypeProfile| t[0] + t[1];
        let mut d = r2_dist(2.0);
        let base = expected_payoff(&inst, payoff, &Distribution::Discrete(d.clone())).unwrap();
        d.support.push(TypeProfile(vec![1.0, 1.0]));
        d.weights.push(0.0);
        let with_zero = expected_payoff(&inst, payoff, &Distribution::Discrete(d)).unwrap();
        assert_eq!(base, with_zero);
    }

    #[test]
    fn support_outside_domain_is_an_error() {
        let inst = remark2_instance();
        let d = DiscreteDistribution::dirac(TypeProfile(vec![7.0, 0.0]));
        let err = expected_payoff(&inst, |_| 0.0, &Distribution::Discrete(d)).unwrap_err();
        assert!(matches!(err, PayoffError::OutsideDomain { idx: 0 }));
    }

    #[test]
    fn product_expansion_merges_dirac_marginals() {
        let p = ProductTwoPointDistribution {
            marginals: vec![
                TwoPointMarginal::dirac(4.0),
                TwoPointMarginal {
                    lo: 2.0,
                    hi: 5.5,
                    p_hi: 0.5,
                },
            ],
        };
        let joint = p.to_joint();
        assert_eq!(joint.support.len(), 2);
        let total: f64 = joint.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(joint.means(), vec![4.0, 3.75]);
        joint.check_factorization(1e-12).unwrap();
    }

    #[test]
    fn correlated_two_point_fails_factorization() {
        // Mass on (6, 7) and (2, 0) only: the product points (6, 0), (2, 7)
        // are missing, so the joint cannot factorize.
        let d = r2_dist(2.0);
        assert!(d.check_factorization(1e-12).is_err());
    }

    #[test]
    fn json_round_trip_both_kinds() {
        let d = Distribution::Discrete(r2_dist(2.0));
        let back = Distribution::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let p = Distribution::ProductTwoPoint(ProductTwoPointDistribution {
            marginals: vec![TwoPointMarginal::dirac(4.0)],
        });
        let back = Distribution::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert!(p.to_json().contains("product_two_point"));
    }
}
