//! Built-in reproduction of the named numeric claims, claim by claim.

use crate::rng::Rng;
use crate::{ReproduceTarget, EXIT_IO, EXIT_MISMATCH};
use favored_agent::*;
use std::path::PathBuf;

const REMARK1_JSON: &str = include_str!("../instances/remark1.json");
const REMARK2_MARKOV_JSON: &str = include_str!("../instances/remark2_markov.json");
const REMARK2_INDEPENDENT_JSON: &str = include_str!("../instances/remark2_independent.json");

struct Claim {
    name: String,
    detail: String,
    pass: bool,
}

struct Claims {
    rows: Vec<Claim>,
}

impl Claims {
    fn new() -> Self {
        Claims { rows: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, detail: impl Into<String>, pass: bool) {
        self.rows.push(Claim {
            name: name.into(),
            detail: detail.into(),
            pass,
        });
    }

    fn close_to(&mut self, name: impl Into<String>, value: f64, expected: f64, tol: f64) {
        let pass = (value - expected).abs() <= tol;
        self.push(
            name,
            format!("{value:.12} vs expected {expected:.12}"),
            pass,
        );
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64, tol: f64) {
        self.push(
            name,
            format!("{value:.12} vs bound {bound:.12}"),
            value <= bound + tol,
        );
    }
}

fn builtin(json: &str) -> Instance {
    Instance::from_json(json).expect("bundled instance parses")
}

fn payoff_fn<'a>(
    fam: &'a FavoredAgentMechanism,
    inst: &'a Instance,
) -> impl Fn(&TypeProfile) -> f64 + 'a {
    move |t| fam_payoff(fam, inst, t).expect("profile in domain")
}

pub fn run(which: ReproduceTarget, seed: u64, tol: f64, out: Option<PathBuf>) -> u8 {
    if tol <= 0.0 {
        eprintln!("error: --tol must be positive");
        return EXIT_IO;
    }
    let claims = match which {
        ReproduceTarget::Remark1 => remark1(tol),
        ReproduceTarget::Remark2 => remark2(tol),
        ReproduceTarget::Remark3 => remark3(tol),
        ReproduceTarget::Remark4 => remark4(tol),
        ReproduceTarget::Section3 => section3(tol),
        ReproduceTarget::Partitions => partitions(seed, tol),
        ReproduceTarget::LemmaConstructions => lemma_constructions(seed, tol),
    };
    let mut report = String::new();
    let width = claims
        .rows
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0);
    for c in &claims.rows {
        report.push_str(&format!(
            "{:<width$}  {}  {}\n",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.detail,
        ));
    }
    print!("{report}");
    if let Some(dir) = &out {
        if std::fs::create_dir_all(dir).is_err()
            || std::fs::write(dir.join("reproduce.txt"), &report).is_err()
        {
            eprintln!("error: cannot write report under {}", dir.display());
            return EXIT_IO;
        }
    }
    match claims.rows.iter().find(|c| !c.pass) {
        Some(first) => {
            eprintln!("mismatch: {}", first.name);
            EXIT_MISMATCH
        }
        None => 0,
    }
}

fn remark1(tol: f64) -> Claims {
    let inst = builtin(REMARK1_JSON);
    let mut claims = Claims::new();
    claims.close_to("optimal value", optimal_value(&inst), 2.0, 1e-12);
    for nu in [0.2, 0.5, 0.99] {
        let fam = FavoredAgentMechanism::new(0, nu, TieRule::TypeI);
        let grid = make_grid(&inst, 2, &[vec![], vec![2.0]]).unwrap();
        let wc = worst_case_support_only(payoff_fn(&fam, &inst), &grid);
        claims.at_most(format!("nu={nu}: worst case"), wc.value, 1.0, tol);
    }
    for nu in [1.0, 1.5, 1.9] {
        let fam = FavoredAgentMechanism::new(0, nu, TieRule::TypeI);
        let grid = make_grid(&inst, 2, &[vec![], vec![2.0 + nu / 2.0]]).unwrap();
        let wc = worst_case_support_only(payoff_fn(&fam, &inst), &grid);
        claims.at_most(
            format!("nu={nu}: worst case"),
            wc.value,
            1.0 + nu / 2.0,
            tol,
        );
    }
    let fam = designated_mechanism(&inst);
    let grid = make_grid(&inst, 3, &[vec![], vec![2.0, 3.0]]).unwrap();
    let wc = worst_case_support_only(payoff_fn(&fam, &inst), &grid);
    claims.close_to("designated worst case", wc.value, 2.0, tol);
    claims
}

fn remark2(tol: f64) -> Claims {
    let inst = builtin(REMARK2_MARKOV_JSON);
    let mut claims = Claims::new();
    claims.close_to("optimal value", optimal_value(&inst), 4.0, 1e-12);
    for nu in [1.0, 2.0, 5.9] {
        let fam = FavoredAgentMechanism::new(0, nu, TieRule::TypeII);
        let dist = remark_distribution(RemarkId::R2, nu).unwrap();
        let value = expected_payoff(&inst, payoff_fn(&fam, &inst), &dist).unwrap();
        claims.close_to(
            format!("nu={nu}: expected payoff (bound {})", optimal_value(&inst)),
            value,
            3.25 + nu / 8.0,
            tol,
        );
    }
    let fam = designated_mechanism(&inst);
    let grid = make_grid(&inst, 2, &[vec![2.0], vec![7.0, 8.0]]).unwrap();
    let wc = worst_case_markov(payoff_fn(&fam, &inst), &grid, &inst).unwrap();
    claims.close_to("designated LP worst case", wc.value, 4.0, tol);
    claims
}

fn remark3(tol: f64) -> Claims {
    let inst = builtin(REMARK2_INDEPENDENT_JSON);
    let mut claims = Claims::new();
    claims.close_to("optimal value", optimal_value(&inst), 4.0, 1e-12);
    for nu in [1.0, 2.0, 3.9] {
        let fam = FavoredAgentMechanism::new(0, nu, TieRule::TypeII);
        let dist = remark_distribution(RemarkId::R3, nu).unwrap();
        let value = expected_payoff(&inst, payoff_fn(&fam, &inst), &dist).unwrap();
        claims.close_to(
            format!("nu={nu}: expected payoff (bound 4)"),
            value,
            3.5 + nu / 8.0,
            tol,
        );
        let factorizes = match &dist {
            Distribution::ProductTwoPoint(p) => p.to_joint().check_factorization(1e-12).is_ok(),
            _ => false,
        };
        claims.push(
            format!("nu={nu}: independence (factorization)"),
            "joint equals product of marginals",
            factorizes,
        );
    }
    claims
}

fn remark4(tol: f64) -> Claims {
    let inst = builtin(REMARK2_INDEPENDENT_JSON);
    let mut claims = Claims::new();
    let dist = remark_distribution(RemarkId::R4, 0.0).unwrap();
    let alpha = match &dist {
        Distribution::ProductTwoPoint(p) => p.marginals[1].p_hi,
        _ => f64::NAN,
    };
    claims.close_to("alpha", alpha, 0.4, 1e-12);
    let mech_a = FavoredAgentMechanism::new(0, 5.0, TieRule::TypeI);
    for nu in [6.0, 8.0] {
        let mech_b = FavoredAgentMechanism::new(0, nu, TieRule::TypeII);
        let joint = dist.to_joint();
        let mut gap = 0.0;
        for (t, &w) in joint.support.iter().zip(&joint.weights) {
            gap += w
                * (fam_payoff(&mech_a, &inst, t).unwrap()
                    - fam_payoff(&mech_b, &inst, t).unwrap());
        }
        claims.close_to(format!("nu={nu}: dominance gap"), gap, 0.6, tol);
    }
    claims
}

fn section3(tol: f64) -> Claims {
    let inst = builtin(REMARK1_JSON);
    let mut claims = Claims::new();
    let grid = make_grid(&inst, 3, &[vec![], vec![2.0, 3.0]]).unwrap();
    let fam = FavoredAgentMechanism::new(0, 10.0, TieRule::TypeI);
    let base = fam_to_grid(&fam, &inst, &grid).unwrap();
    let perturbed = build_section3_perturbation(&inst, &fam, &grid).unwrap();

    claims.push("(p, q') feasibility", "FC", check_fc(&perturbed).pass);
    claims.push("(p, q') incentives", "IC", check_ic(&perturbed).pass);
    let wc = worst_case_support_only(
        |t| perturbed.payoff_at(&inst, grid.position(t.as_slice()).unwrap()),
        &grid,
    );
    claims.close_to("(p, q') worst case (optimal yet dominated)", wc.value, 2.0, tol);
    let report = pointwise_dominance(&base, &perturbed, &inst).unwrap();
    claims.push(
        "base FAM strictly dominates (p, q')",
        format!(
            "relation {:?}, gap {:.12} at {:?}",
            report.relation,
            report.max_gap,
            report
                .witness_scenario
                .as_ref()
                .map(|t| t.as_slice().to_vec())
                .unwrap_or_default()
        ),
        report.relation == DominanceRelation::AStrictlyDominates
            && (report.max_gap - 1.0).abs() <= tol
            && report
                .witness_scenario
                .as_ref()
                .is_some_and(|t| t.as_slice() == [8.0, 0.0]),
    );
    claims.push(
        "(p, q') is not a mixture",
        "constant net allocation fails",
        !check_constant_net_allocation(&perturbed).pass,
    );
    let other = fam_to_grid(
        &FavoredAgentMechanism::new(0, 3.0, TieRule::TypeII),
        &inst,
        &grid,
    )
    .unwrap();
    let mixed = mix(&[base.clone(), other], &[0.25, 0.75]).unwrap();
    claims.push(
        "base FAM and mixtures stay constant-net",
        "constant net allocation passes",
        check_constant_net_allocation(&base).pass && check_constant_net_allocation(&mixed).pass,
    );
    claims
}

fn random_instance(rng: &mut Rng, agents: usize, ambiguity: Ambiguity) -> Instance {
    loop {
        let mut specs = Vec::with_capacity(agents);
        for _ in 0..agents {
            let t_lo = rng.range(0.0, 5.0);
            let width = rng.range(1.0, 8.0);
            let t_hi = t_lo + width;
            let c = rng.range(0.2, 3.0);
            let (mu_lo, mu_hi) = if ambiguity == Ambiguity::SupportOnly {
                (None, None)
            } else {
                let mu_lo = t_lo + rng.range(0.15, 0.6) * width;
                let mu_hi = mu_lo + rng.range(0.05, 0.85) * (t_hi - mu_lo);
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

fn random_profile(rng: &mut Rng, inst: &Instance) -> TypeProfile {
    TypeProfile(
        (0..inst.num_agents())
            .map(|i| {
                if inst.mu_lo(i).is_some() && rng.chance(0.15) {
                    inst.mu_lo(i).unwrap()
                } else {
                    rng.range(inst.t_lo(i), inst.t_hi(i))
                }
            })
            .collect(),
    )
}

fn partitions(seed: u64, tol: f64) -> Claims {
    let mut rng = Rng::new(seed);
    let mut claims = Claims::new();
    let cases = [
        (PartitionId::SupportOnly3, Ambiguity::SupportOnly, "support-only"),
        (PartitionId::Markov5, Ambiguity::Markov, "markov"),
        (
            PartitionId::Independent8,
            Ambiguity::MarkovIndependent,
            "independent",
        ),
    ];
    for &(partition, ambiguity, tag) in &cases {
        for agents in [2usize, 3, 4] {
            let inst = random_instance(&mut rng, agents, ambiguity);
            let fam = designated_mechanism(&inst);
            let trials = 10_000 / 3 + 1;
            let mut unique = true;
            let mut payoff_ok = true;
            for _ in 0..trials {
                let t = random_profile(&mut rng, &inst);
                let flags = region_flags(&inst, &t, partition).unwrap();
                let label = classify_region(&inst, &t, partition).unwrap();
                if flags.iter().filter(|&&f| f).count() != 1
                    || flags.iter().position(|&f| f) != Some(label.label as usize)
                {
                    unique = false;
                }
                let payoff = fam_payoff(&fam, &inst, &t).unwrap();
                let expected = region_closed_form_payoff(&inst, &t, &label);
                if (payoff - expected).abs() > tol {
                    payoff_ok = false;
                }
            }
            claims.push(
                format!("{tag} partition, {agents} agents: exhaustive and disjoint"),
                format!("{trials} profiles, exactly one region each"),
                unique,
            );
            claims.push(
                format!("{tag} partition, {agents} agents: designated payoffs"),
                "region-wise closed forms",
                payoff_ok,
            );
        }
    }
    claims
}

fn lemma_constructions(seed: u64, tol: f64) -> Claims {
    let mut rng = Rng::new(seed);
    let mut claims = Claims::new();
    let mut joint_ok = true;
    let mut product_ok = true;
    for _ in 0..1000 {
        let agents = 2 + rng.usize_below(3);
        let inst = random_instance(&mut rng, agents, Ambiguity::Markov);
        let i_star = inst.argmax_mu_lo().unwrap();
        let t = random_profile(&mut rng, &inst);

        let dist = construct_two_point_markov(&inst, &t).unwrap();
        let means = dist.means();
        let mean_ok = (0..agents).all(|i| (means[i] - inst.mu_lo(i).unwrap()).abs() <= tol);
        let that = dist.support.last().unwrap();
        let order_ok = (0..agents)
            .filter(|&i| i != i_star)
            .all(|i| that[i] < that[i_star]);
        if !(mean_ok && order_ok && dist.weights[0] > 0.0)
            || dist.check_membership(&inst, tol).is_err()
        {
            joint_ok = false;
        }

        let lo = inst.mu_lo(i_star).unwrap();
        let hi = inst.mu_hi(i_star).unwrap();
        let target = rng.range(lo, hi);
        let product = construct_product_two_point(&inst, &t, target).unwrap();
        let means = product.means();
        let target_ok = (means[i_star] - target).abs() <= tol;
        let floors_ok = (0..agents)
            .filter(|&i| i != i_star)
            .all(|i| (means[i] - inst.mu_lo(i).unwrap()).abs() <= tol);
        let mut mass_on_t = 1.0;
        let mut companions_ok = true;
        for (i, m) in product.marginals.iter().enumerate() {
            let (p_t, companion) = if (m.hi - t[i]).abs() <= 1e-12 {
                (m.p_hi, m.lo)
            } else {
                (1.0 - m.p_hi, m.hi)
            };
            mass_on_t *= p_t;
            if i != i_star && companion >= inst.mu_lo(i_star).unwrap() {
                companions_ok = false;
            }
        }
        if !(target_ok && floors_ok && companions_ok && mass_on_t > 0.0)
            || product.check_membership(&inst, tol).is_err()
        {
            product_ok = false;
        }
    }
    claims.push(
        "two-point joint constructions (1000 draws)",
        "exact mean floors, positive mass, companion ordering",
        joint_ok,
    );
    claims.push(
        "two-point product constructions (1000 draws)",
        "target mean, pinned floors, companions below the favored floor",
        product_ok,
    );
    claims
}
