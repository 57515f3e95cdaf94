//! Property suites for the mechanism and distribution invariants.

mod common;

use common::rng;
use favored_agent::*;
use proptest::prelude::*;
use rand::Rng;

/// Two-to-four agent instances with optional mean bounds, pre-validated.
fn instance_strategy(ambiguity: Ambiguity) -> impl Strategy<Value = Instance> {
    let agent = (0.0..5.0f64, 1.0..8.0f64, 0.2..3.0f64, 0.15..0.6f64, 0.05..0.85f64).prop_map(
        move |(t_lo, width, c, lo_frac, hi_frac)| {
            let t_hi = t_lo + width;
            let (mu_lo, mu_hi) = if ambiguity == Ambiguity::SupportOnly {
                (None, None)
            } else {
                let mu_lo = t_lo + lo_frac * width;
                let mu_hi = mu_lo + hi_frac * (t_hi - mu_lo);
                (Some(mu_lo), Some(mu_hi))
            };
            AgentSpec {
                t_lo,
                t_hi,
                c,
                mu_lo,
                mu_hi,
            }
        },
    );
    prop::collection::vec(agent, 2..=4)
        .prop_map(move |agents| Instance { ambiguity, agents })
        .prop_filter("valid instance", |inst| validate_instance(inst).pass)
}

fn profile_in(inst: &Instance) -> impl Strategy<Value = TypeProfile> {
    let ranges: Vec<_> = (0..inst.num_agents())
        .map(|i| inst.t_lo(i)..=inst.t_hi(i))
        .collect();
    ranges.prop_map(TypeProfile)
}

fn fam_strategy(agents: usize) -> impl Strategy<Value = FavoredAgentMechanism> {
    (
        0..agents,
        -2.0..12.0f64,
        prop::bool::ANY,
    )
        .prop_map(|(i_star, nu, type_one)| {
            FavoredAgentMechanism::new(
                i_star,
                nu,
                if type_one { TieRule::TypeI } else { TieRule::TypeII },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn fam_allocation_has_a_single_certain_winner(
        (inst, t, fam) in instance_strategy(Ambiguity::SupportOnly).prop_flat_map(|inst| {
            let profile = profile_in(&inst);
            let fam = fam_strategy(inst.num_agents());
            (Just(inst), profile, fam)
        })
    ) {
        let (p, q) = fam_allocate(&fam, &inst, &t).unwrap();
        let winners: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
        prop_assert_eq!(winners.len(), 1);
        let w = winners[0];
        prop_assert_eq!(p[w], 1.0);
        prop_assert!(q[w] == 0.0 || q[w] == 1.0);
        prop_assert_eq!(p.iter().sum::<f64>(), 1.0);
        for i in 0..p.len() {
            if i != w {
                prop_assert_eq!(q[i], 0.0);
            }
        }

        // Payoff matches the two-case closed form.
        let payoff = fam_payoff(&fam, &inst, &t).unwrap();
        let m = (0..inst.num_agents())
            .filter(|&i| i != fam.i_star)
            .map(|i| t[i] - inst.cost(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let best_net = (0..inst.num_agents())
            .map(|i| t[i] - inst.cost(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let case_one = m < fam.nu - 1e-12
            || ((m - fam.nu).abs() <= 1e-12 && fam.tie_rule == TieRule::TypeI);
        let expected = if case_one { t[fam.i_star] } else { best_net };
        prop_assert!((payoff - expected).abs() <= 1e-9);
        prop_assert!(payoff >= t[fam.i_star].min(best_net) - 1e-9);
    }

    #[test]
    fn tie_rules_differ_only_on_the_tie_set(
        (inst, t, fam) in instance_strategy(Ambiguity::SupportOnly).prop_flat_map(|inst| {
            let profile = profile_in(&inst);
            let fam = fam_strategy(inst.num_agents());
            (Just(inst), profile, fam)
        })
    ) {
        let fam_i = FavoredAgentMechanism { tie_rule: TieRule::TypeI, ..fam };
        let fam_ii = FavoredAgentMechanism { tie_rule: TieRule::TypeII, ..fam };
        let a = fam_allocate(&fam_i, &inst, &t).unwrap();
        let b = fam_allocate(&fam_ii, &inst, &t).unwrap();
        let m = (0..inst.num_agents())
            .filter(|&i| i != fam.i_star)
            .map(|i| t[i] - inst.cost(i))
            .fold(f64::NEG_INFINITY, f64::max);
        if (m - fam.nu).abs() > 1e-12 {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn tabulations_are_feasible_and_incentive_compatible(
        (inst, fam, points, seed) in instance_strategy(Ambiguity::SupportOnly).prop_flat_map(|inst| {
            let fam = fam_strategy(inst.num_agents());
            (Just(inst), fam, 2usize..4, any::<u64>())
        })
    ) {
        let mut anchor_rng = rng(seed);
        let anchors: Vec<Vec<f64>> = (0..inst.num_agents())
            .map(|i| {
                (0..anchor_rng.gen_range(0..3))
                    .map(|_| anchor_rng.gen_range(inst.t_lo(i)..=inst.t_hi(i)))
                    .collect()
            })
            .collect();
        let grid = make_grid(&inst, points, &anchors).unwrap();
        prop_assume!(grid.len() <= 512);
        let mech = fam_to_grid(&fam, &inst, &grid).unwrap();
        prop_assert!(check_fc(&mech).pass);
        prop_assert!(check_ic(&mech).pass);
        prop_assert!(check_constant_net_allocation(&mech).pass);
    }

    #[test]
    fn mixing_preserves_feasibility_and_incentives(
        (inst, fam_a, fam_b, weight) in instance_strategy(Ambiguity::SupportOnly).prop_flat_map(|inst| {
            let a = fam_strategy(inst.num_agents());
            let b = fam_strategy(inst.num_agents());
            (Just(inst), a, b, 0.0..=1.0f64)
        })
    ) {
        let grid = make_grid(&inst, 3, &[]).unwrap();
        let a = fam_to_grid(&fam_a, &inst, &grid).unwrap();
        let b = fam_to_grid(&fam_b, &inst, &grid).unwrap();
        let mixed = mix(&[a, b], &[weight, 1.0 - weight]).unwrap();
        prop_assert!(check_fc(&mixed).pass);
        prop_assert!(check_ic(&mixed).pass);
        prop_assert!(check_constant_net_allocation(&mixed).pass);
    }

    #[test]
    fn expected_payoff_is_linear_in_weights(lambda in 0.0..=1.0f64, seed in any::<u64>()) {
        let inst = remark2_instance();
        let mut r = rng(seed);
        let draw = |r: &mut rand_chacha::ChaCha8Rng| {
            let t = TypeProfile(vec![
                r.gen_range(1.0..6.0),
                r.gen_range(0.0..10.0),
            ]);
            t
        };
        let (a1, a2) = (draw(&mut r), draw(&mut r));
        let (b1, b2) = (draw(&mut r), draw(&mut r));
        prop_assume!(a1 != a2 && b1 != b2);
        let p1 = DiscreteDistribution::two_point(a1.clone(), a2.clone(), 0.3);
        let p2 = DiscreteDistribution::two_point(b1.clone(), b2.clone(), 0.7);
        // lambda-mixture of the two laws, merging shared support points.
        let mut support = p1.support.clone();
        let mut weights: Vec<f64> = p1.weights.iter().map(|w| lambda * w).collect();
        for (t, &w) in p2.support.iter().zip(&p2.weights) {
            match support.iter().position(|u| u == t) {
                Some(k) => weights[k] += (1.0 - lambda) * w,
                None => {
                    support.push(t.clone());
                    weights.push((1.0 - lambda) * w);
                }
            }
        }
        let mixture = DiscreteDistribution { support, weights };
        let payoff = |t: &TypeProfile| 2.0 * t[0] - 0.5 * t[1] + 1.0;
        let v1 = expected_payoff(&inst, payoff, &Distribution::Discrete(p1)).unwrap();
        let v2 = expected_payoff(&inst, payoff, &Distribution::Discrete(p2)).unwrap();
        let vm = expected_payoff(&inst, payoff, &Distribution::Discrete(mixture)).unwrap();
        prop_assert!((vm - (lambda * v1 + (1.0 - lambda) * v2)).abs() <= 1e-12);
    }

    #[test]
    fn product_expansion_matches_closed_forms(
        los in prop::collection::vec(0.0..5.0f64, 2..=4),
        spreads in prop::collection::vec(0.0..5.0f64, 4),
        p_his in prop::collection::vec(0.0..=1.0f64, 4),
    ) {
        let marginals: Vec<TwoPointMarginal> = los
            .iter()
            .enumerate()
            .map(|(i, &lo)| TwoPointMarginal {
                lo,
                hi: lo + spreads[i],
                p_hi: p_his[i],
            })
            .collect();
        let product = ProductTwoPointDistribution { marginals: marginals.clone() };
        let joint = product.to_joint();
        let total: f64 = joint.weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let means = joint.means();
        for (i, m) in marginals.iter().enumerate() {
            let closed = m.p_hi * m.hi + (1.0 - m.p_hi) * m.lo;
            prop_assert!((means[i] - closed).abs() <= 1e-12);
        }
        prop_assert!(joint.check_factorization(1e-9).is_ok());
    }
}

#[test]
fn lp_worst_case_lower_bounds_every_admissible_probe() {
    let mut r = rng(21);
    for _ in 0..5 {
        let inst = common::random_instance(&mut r, 2, Ambiguity::Markov);
        let coarse = make_grid(&inst, 2, &[]).unwrap();
        let anchors = pareto::markov_probe_anchors(&inst, &coarse).unwrap();
        let grid = make_grid(&inst, 2, &anchors).unwrap();
        let fam = designated_mechanism(&inst);
        let payoff = |t: &TypeProfile| fam_payoff(&fam, &inst, t).unwrap();
        let lp_value = worst_case_markov(payoff, &grid, &inst).unwrap().value;
        for probe in pareto::default_markov_probes(&inst, &grid).unwrap() {
            let e = expected_payoff(&inst, payoff, &Distribution::Discrete(probe)).unwrap();
            assert!(lp_value <= e + 1e-9, "{lp_value} vs {e}");
        }
    }
}

#[test]
fn optimality_condition_iff_lp_worst_case_reaches_floor() {
    // Grid-scale restatement of the optimality-condition equivalence: on a
    // grid containing the two-point witness supports, the certificate
    // passes exactly when the LP worst case reaches max mu_lo.
    let inst = remark2_instance();
    let coarse = make_grid(&inst, 2, &[vec![2.0], vec![7.0]]).unwrap();
    let mut anchors = pareto::markov_probe_anchors(&inst, &coarse).unwrap();
    anchors[0].push(2.0);
    anchors[1].push(7.0);
    let grid = make_grid(&inst, 2, &anchors).unwrap();
    let floor = optimal_value(&inst);

    for (fam, expect_pass) in [
        (designated_mechanism(&inst), true),
        (FavoredAgentMechanism::new(0, 2.0, TieRule::TypeII), false),
    ] {
        let mech = fam_to_grid(&fam, &inst, &grid).unwrap();
        let cert = check_markov_optimality_condition(&mech, &inst).unwrap();
        let payoff = |t: &TypeProfile| fam_payoff(&fam, &inst, t).unwrap();
        let wc = worst_case_markov(payoff, &grid, &inst).unwrap();
        assert_eq!(cert.pass, expect_pass);
        assert_eq!(wc.value >= floor - 1e-9, expect_pass, "value {}", wc.value);
    }
}

#[test]
fn every_grid_scenario_lies_in_the_type_space() {
    let mut r = rng(22);
    for _ in 0..20 {
        let agents = r.gen_range(2..=4);
        let inst = common::random_instance(&mut r, agents, Ambiguity::Markov);
        let grid = make_grid(&inst, r.gen_range(2..=4), &[]).unwrap();
        assert!(grid.scenarios().all(|t| inst.contains(&t)));
        for i in 0..inst.num_agents() {
            let axis = grid.axis(i);
            assert_eq!(axis.first(), Some(&inst.t_lo(i)));
            assert_eq!(axis.last(), Some(&inst.t_hi(i)));
        }
    }
}
