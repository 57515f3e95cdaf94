//! Shared generators and independent oracles for the integration suites.

#![allow(dead_code)]

use favored_agent::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random validated instance with strictly separated mean floors (singleton
/// argmax), suitable for the two-point adversarial constructions.
pub fn random_instance(rng: &mut ChaCha8Rng, agents: usize, ambiguity: Ambiguity) -> Instance {
    loop {
        let mut specs = Vec::with_capacity(agents);
        for _ in 0..agents {
            let t_lo = rng.gen_range(0.0..5.0);
            let width = rng.gen_range(1.0..8.0);
            let t_hi = t_lo + width;
            let c = rng.gen_range(0.2..3.0);
            let (mu_lo, mu_hi) = if ambiguity == Ambiguity::SupportOnly {
                (None, None)
            } else {
                let mu_lo = t_lo + rng.gen_range(0.15..0.6) * width;
                let mu_hi = mu_lo + rng.gen_range(0.05..0.85) * (t_hi - mu_lo);
                (Some(mu_lo), Some(mu_hi))
            };
            specs.push(AgentSpec {
                t_lo,
                t_hi,
                c,
                mu_lo,
                mu_hi,
            });
        }
        let inst = Instance {
            ambiguity,
            agents: specs,
        };
        if !validate_instance(&inst).pass {
            continue;
        }
        if ambiguity != Ambiguity::SupportOnly {
            let mut mus: Vec<f64> = inst.agents.iter().map(|a| a.mu_lo.unwrap()).collect();
            mus.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if mus.len() > 1 && mus[0] - mus[1] < 0.02 {
                continue;
            }
        }
        return inst;
    }
}

/// Uniform profile in the type space; with some probability coordinates are
/// snapped onto the mean floor to exercise the constructions' equality
/// branches.
pub fn random_profile(rng: &mut ChaCha8Rng, inst: &Instance) -> TypeProfile {
    let t = (0..inst.num_agents())
        .map(|i| {
            if inst.mu_lo(i).is_some() && rng.gen_bool(0.15) {
                inst.mu_lo(i).unwrap()
            } else {
                rng.gen_range(inst.t_lo(i)..=inst.t_hi(i))
            }
        })
        .collect();
    TypeProfile(t)
}

/// Brute-force LP oracle: enumerates every basic solution of the
/// standard-form system `[A | I] x = b, x >= 0` and returns the best
/// feasible objective value.
pub fn enumerate_lp_min(c: &[f64], a_le: &[Vec<f64>], b_le: &[f64]) -> Option<f64> {
    let n = c.len();
    let m = a_le.len();
    let total = n + m;
    let mut best: Option<f64> = None;
    let mut cols = vec![0usize; m];
    // Iterate over all m-subsets of the total columns.
    fn visit(
        start: usize,
        depth: usize,
        total: usize,
        cols: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        let m = cols.len();
        if depth == m {
            f(cols);
            return;
        }
        for j in start..total {
            cols[depth] = j;
            visit(j + 1, depth + 1, total, cols, f);
        }
    }
    let column = |i: usize, j: usize| -> f64 {
        if j < n {
            a_le[i][j]
        } else if j - n == i {
            1.0
        } else {
            0.0
        }
    };
    let mut consider = |basis: &[usize]| {
        // Solve B x_B = b by Gaussian elimination.
        let mut mat: Vec<Vec<f64>> = (0..m)
            .map(|i| basis.iter().map(|&j| column(i, j)).collect())
            .collect();
        let mut rhs: Vec<f64> = b_le.to_vec();
        for k in 0..m {
            let piv = (k..m)
                .max_by(|&x, &y| mat[x][k].abs().partial_cmp(&mat[y][k].abs()).unwrap())
                .unwrap();
            if mat[piv][k].abs() < 1e-9 {
                return;
            }
            mat.swap(k, piv);
            rhs.swap(k, piv);
            let inv = 1.0 / mat[k][k];
            for i in 0..m {
                if i != k {
                    let f = mat[i][k] * inv;
                    if f != 0.0 {
                        for j in k..m {
                            mat[i][j] -= f * mat[k][j];
                        }
                        rhs[i] -= f * rhs[k];
                    }
                }
            }
        }
        let mut value = 0.0;
        for (k, &j) in basis.iter().enumerate() {
            let xk = rhs[k] / mat[k][k];
            if xk < -1e-9 {
                return;
            }
            if j < n {
                value += c[j] * xk;
            }
        }
        if best.map_or(true, |b| value < b) {
            best = Some(value);
        }
    };
    visit(0, 0, total, &mut cols, &mut consider);
    best
}

/// Independent per-region predicates for the general-agent partitions,
/// written as direct conjunctions so exhaustiveness and disjointness can be
/// asserted by evaluating every region at once.
pub mod general_regions {
    use favored_agent::{Instance, PartitionId, TypeProfile};

    fn rival_max(inst: &Instance, t: &TypeProfile, i_star: usize, net: bool) -> f64 {
        (0..inst.num_agents())
            .filter(|&i| i != i_star)
            .map(|i| if net { t[i] - inst.cost(i) } else { t[i] })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Flags for `[T_I, T_II, T_III, T_IV]` or `[T_I ..= T_V]`.
    pub fn flags(inst: &Instance, t: &TypeProfile, partition: PartitionId) -> Vec<bool> {
        match partition {
            PartitionId::SupportOnly3 => {
                let i_star = inst.argmax_t_lo();
                let floor = inst.t_lo(i_star);
                let m_net = rival_max(inst, t, i_star, true);
                let m_typ = rival_max(inst, t, i_star, false);
                let laggard = (0..inst.num_agents()).filter(|&i| i != i_star).any(|i| {
                    let net = t[i] - inst.cost(i);
                    net > floor && net <= t[i_star]
                });
                vec![
                    m_net <= floor && m_typ < t[i_star],
                    m_net <= floor && m_typ >= t[i_star],
                    m_net > floor && !laggard,
                    m_net > floor && laggard,
                ]
            }
            PartitionId::Markov5 => {
                let i_star = inst.argmax_mu_lo().unwrap();
                let ceiling = inst.t_hi(i_star);
                let m_typ = rival_max(inst, t, i_star, false);
                let m_net = rival_max(inst, t, i_star, true);
                vec![
                    m_typ < t[i_star],
                    m_typ >= t[i_star] && m_typ < ceiling,
                    m_typ >= t[i_star] && m_typ >= ceiling && m_net < t[i_star],
                    m_typ >= t[i_star]
                        && m_typ >= ceiling
                        && m_net >= t[i_star]
                        && m_net < ceiling,
                    m_typ >= t[i_star]
                        && m_typ >= ceiling
                        && m_net >= t[i_star]
                        && m_net >= ceiling,
                ]
            }
            PartitionId::Independent8 => {
                let i_star = inst.argmax_mu_lo().unwrap();
                let mu_lo = inst.mu_lo(i_star).unwrap();
                let mu_hi = inst.mu_hi(i_star).unwrap();
                let in_band = t[i_star] > mu_lo && t[i_star] <= mu_hi;
                let m_typ = rival_max(inst, t, i_star, false);
                let m_net = rival_max(inst, t, i_star, true);
                vec![
                    in_band && m_typ <= mu_lo,
                    in_band && m_typ > mu_lo && m_net <= mu_lo,
                    !in_band && m_net <= mu_lo,
                    t[i_star] == mu_lo && m_net > mu_lo,
                    t[i_star] != mu_lo && m_net > mu_lo,
                ]
            }
        }
    }
}

/// Independent re-statement of the two-agent partition displays, used to
/// cross-check the general classifiers. All assume the first agent is the
/// favored one, matching the displays' setup.
pub mod display2 {
    use favored_agent::{Instance, TypeProfile};

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum R {
        I,
        II,
        III,
        IV,
        V,
    }

    pub fn support_only(inst: &Instance, t: &TypeProfile) -> R {
        let floor = inst.t_lo(0);
        let net = t[1] - inst.cost(1);
        if net <= floor {
            if t[1] < t[0] {
                R::I
            } else {
                R::II
            }
        } else if net > t[0] {
            R::III
        } else {
            R::IV
        }
    }

    pub fn markov(inst: &Instance, t: &TypeProfile) -> R {
        let ceiling = inst.t_hi(0);
        let net = t[1] - inst.cost(1);
        if t[1] < t[0] {
            R::I
        } else if t[1] < ceiling {
            R::II
        } else if net < t[0] {
            R::III
        } else if net < ceiling {
            R::IV
        } else {
            R::V
        }
    }

    pub fn independent(inst: &Instance, t: &TypeProfile) -> R {
        let mu_lo = inst.mu_lo(0).unwrap();
        let mu_hi = inst.mu_hi(0).unwrap();
        let net = t[1] - inst.cost(1);
        let in_band = t[0] > mu_lo && t[0] <= mu_hi;
        if in_band && t[1] <= mu_lo {
            R::I
        } else if in_band && t[1] > mu_lo && net <= mu_lo {
            R::II
        } else if !in_band && net <= mu_lo {
            R::III
        } else if t[0] == mu_lo {
            R::IV
        } else {
            R::V
        }
    }
}
