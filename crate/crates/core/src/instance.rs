//! Problem instances: type intervals, verification costs, mean bounds.

use crate::certificate::{Certificate, Witness};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Default comparison tolerance for payoff arithmetic.
pub const TOL: f64 = 1e-9;
/// Snap width for equality cases that carry semantic meaning (tie rules,
/// region boundaries).
pub const SNAP: f64 = 1e-12;

/// Which family of type distributions the principal deems possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    /// All distributions supported on the type space.
    SupportOnly,
    /// Support plus per-agent bounds on the expected type.
    Markov,
    /// Markov plus mutual independence of the agents' types.
    MarkovIndependent,
}

/// Per-agent data: type interval, verification cost, optional mean bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub t_lo: f64,
    pub t_hi: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_hi: Option<f64>,
}

/// An allocation problem: `I >= 2` agents with rectangular type space,
/// strictly positive inspection costs, and an ambiguity set.
///
/// Agent order in `agents` defines the 1-based index used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub ambiguity: Ambiguity,
    pub agents: Vec<AgentSpec>,
}

/// A vector of one type per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile(pub Vec<f64>);

impl TypeProfile {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for TypeProfile {
    fn from(t: Vec<f64>) -> Self {
        TypeProfile(t)
    }
}

impl std::ops::Index<usize> for TypeProfile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Instance {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn t_lo(&self, i: usize) -> f64 {
        self.agents[i].t_lo
    }

    pub fn t_hi(&self, i: usize) -> f64 {
        self.agents[i].t_hi
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.agents[i].c
    }

    pub fn mu_lo(&self, i: usize) -> Option<f64> {
        self.agents[i].mu_lo
    }

    pub fn mu_hi(&self, i: usize) -> Option<f64> {
        self.agents[i].mu_hi
    }

    /// Highest type lower bound over all agents.
    pub fn max_t_lo(&self) -> f64 {
        self.agents.iter().map(|a| a.t_lo).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest mean lower bound; `None` if any agent lacks mean bounds.
    pub fn max_mu_lo(&self) -> Option<f64> {
        self.agents
            .iter()
            .map(|a| a.mu_lo)
            .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
    }

    /// Smallest index attaining `max_i t_lo_i` (0-based).
    pub fn argmax_t_lo(&self) -> usize {
        let m = self.max_t_lo();
        self.agents.iter().position(|a| a.t_lo >= m).unwrap()
    }

    /// Smallest index attaining `max_i mu_lo_i` (0-based); requires mean bounds.
    pub fn argmax_mu_lo(&self) -> Option<usize> {
        let m = self.max_mu_lo()?;
        self.agents.iter().position(|a| a.mu_lo == Some(m))
    }

    /// Whether `argmax_i mu_lo_i` is a singleton at exact comparison.
    pub fn mu_lo_argmax_is_singleton(&self) -> bool {
        match self.max_mu_lo() {
            Some(m) => self.agents.iter().filter(|a| a.mu_lo == Some(m)).count() == 1,
            None => false,
        }
    }

    /// Whether `t` lies in the rectangular type space (tolerance `SNAP`).
    pub fn contains(&self, t: &TypeProfile) -> bool {
        t.len() == self.num_agents()
            && t.0
                .iter()
                .zip(&self.agents)
                .all(|(&v, a)| v >= a.t_lo - SNAP && v <= a.t_hi + SNAP)
    }

    /// The ambiguity set shifted so agent `i_star`'s mean floor rises by
    /// `eps`, making it the unique argmax. Useful for running the
    /// singleton-argmax certificates on instances with tied mean floors.
    pub fn perturb_favored_mean(&self, eps: f64) -> Option<Instance> {
        let i_star = self.argmax_mu_lo()?;
        let mut out = self.clone();
        let a = &mut out.agents[i_star];
        let (lo, hi) = (a.mu_lo?, a.mu_hi?);
        if lo + eps > hi {
            return None;
        }
        a.mu_lo = Some(lo + eps);
        Some(out)
    }

    pub fn from_json(json: &str) -> Result<Instance, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Instance::from_json(&text).map_err(|source| InstanceError::Parse {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Checks every standing assumption on an instance. Violations are reported
/// in the certificate, never thrown; the first violated invariant is named.
pub fn validate_instance(inst: &Instance) -> Certificate {
    let check = "validate_instance";
    if inst.num_agents() < 2 {
        return Certificate::fail(
            check,
            0.0,
            Witness::Text {
                detail: format!("I >= 2 violated: {} agent(s)", inst.num_agents()),
            },
        );
    }
    let needs_means = inst.ambiguity != Ambiguity::SupportOnly;
    let mut degenerate_means = Vec::new();
    for (idx, a) in inst.agents.iter().enumerate() {
        let agent = idx + 1;
        let fail = |name: &str| {
            Certificate::fail(
                check,
                0.0,
                Witness::Agent {
                    agent,
                    detail: name.to_string(),
                },
            )
        };
        if !(a.t_lo.is_finite() && a.t_hi.is_finite() && a.c.is_finite()) {
            return fail("finite parameters");
        }
        if a.t_lo < 0.0 {
            return fail("0 <= t_lo");
        }
        if a.t_lo >= a.t_hi {
            return fail("t_lo < t_hi");
        }
        if a.c <= 0.0 {
            return fail("c_i > 0");
        }
        if needs_means {
            let (mu_lo, mu_hi) = match (a.mu_lo, a.mu_hi) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => return fail("mean bounds present"),
            };
            if !(mu_lo.is_finite() && mu_hi.is_finite()) {
                return fail("finite mean bounds");
            }
            if a.t_lo >= mu_lo {
                return fail("t_lo < mu_lo");
            }
            if mu_lo > mu_hi {
                return fail("mu_lo <= mu_hi");
            }
            if mu_hi >= a.t_hi {
                return fail("mu_hi < t_hi");
            }
            if mu_lo == mu_hi {
                degenerate_means.push(agent);
            }
        }
    }
    let mut cert = Certificate::pass(check, 0.0);
    for agent in degenerate_means {
        cert = cert.with_note(format!(
            "agent {agent}: degenerate mean bounds mu_lo = mu_hi accepted"
        ));
    }
    cert
}

/// Built-in two-agent support-only example: `T_1 = [2, 8]`,
/// `T_2 = [0, 10]`, `c = (1, 1)`. Data behind the `remark1` reproduction
/// target.
pub fn remark1_instance() -> Instance {
    Instance {
        ambiguity: Ambiguity::SupportOnly,
        agents: vec![
            AgentSpec {
                t_lo: 2.0,
                t_hi: 8.0,
                c: 1.0,
                mu_lo: None,
                mu_hi: None,
            },
            AgentSpec {
                t_lo: 0.0,
                t_hi: 10.0,
                c: 1.0,
                mu_lo: None,
                mu_hi: None,
            },
        ],
    }
}

/// Built-in two-agent Markov example: `T_1 = [1, 6]`, `T_2 = [0, 10]`,
/// means in `[4, 5]` and `[3, 7]`, `c = (2, 2)`. Data behind the `remark2`
/// through `remark4` reproduction targets.
pub fn remark2_instance() -> Instance {
    Instance {
        ambiguity: Ambiguity::Markov,
        agents: vec![
            AgentSpec {
                t_lo: 1.0,
                t_hi: 6.0,
                c: 2.0,
                mu_lo: Some(4.0),
                mu_hi: Some(5.0),
            },
            AgentSpec {
                t_lo: 0.0,
                t_hi: 10.0,
                c: 2.0,
                mu_lo: Some(3.0),
                mu_hi: Some(7.0),
            },
        ],
    }
}

/// The Remark-2 data with independent types.
pub fn remark2_independent_instance() -> Instance {
    let mut inst = remark2_instance();
    inst.ambiguity = Ambiguity::MarkovIndependent;
    inst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remark1_passes_validation() {
        assert!(validate_instance(&remark1_instance()).pass);
    }

    #[test]
    fn zero_cost_fails() {
        let mut inst = remark1_instance();
        inst.agents[1].c = 0.0;
        let cert = validate_instance(&inst);
        assert!(!cert.pass);
        match cert.witness.unwrap() {
            Witness::Agent { agent, detail } => {
                assert_eq!(agent, 2);
                assert_eq!(detail, "c_i > 0");
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn markov_mean_at_floor_fails() {
        let mut inst = remark2_instance();
        inst.agents[0].mu_lo = Some(inst.agents[0].t_lo);
        let cert = validate_instance(&inst);
        assert!(!cert.pass);
        match cert.witness.unwrap() {
            Witness::Agent { agent, detail } => {
                assert_eq!(agent, 1);
                assert_eq!(detail, "t_lo < mu_lo");
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn degenerate_mean_bounds_flagged_not_failed() {
        let mut inst = remark2_instance();
        inst.agents[0].mu_hi = Some(4.0); // mu_lo == mu_hi == 4
        let cert = validate_instance(&inst);
        assert!(cert.pass);
        assert!(cert.notes.iter().any(|n| n.contains("degenerate")));
    }

    #[test]
    fn json_round_trip() {
        let inst = remark2_instance();
        let json = serde_json::to_string(&inst).unwrap();
        assert!(json.contains("\"markov\""));
        let back = Instance::from_json(&json).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn argmax_helpers_pick_smallest_index() {
        let inst = remark2_instance();
        assert_eq!(inst.argmax_mu_lo(), Some(0));
        assert!(inst.mu_lo_argmax_is_singleton());
        let mut tied = inst.clone();
        tied.agents[1].mu_lo = Some(4.0);
        assert_eq!(tied.argmax_mu_lo(), Some(0));
        assert!(!tied.mu_lo_argmax_is_singleton());
    }

    #[test]
    fn perturb_favored_mean_breaks_ties() {
        let mut tied = remark2_instance();
        tied.agents[1].mu_lo = Some(4.0);
        let shifted = tied.perturb_favored_mean(0.25).unwrap();
        assert_eq!(shifted.agents[0].mu_lo, Some(4.25));
        assert!(shifted.mu_lo_argmax_is_singleton());
    }
}
