//! Robustly optimal allocation of one good with costly type verification.
//!
//! A principal allocates a single good to one of `I` agents whose private
//! types are governed by an ambiguous distribution known only through its
//! support (and optionally mean bounds, and optionally independence). This
//! crate provides the favored-agent mechanisms that solve the worst-case
//! design problem, worst-case payoff evaluators for each ambiguity set,
//! adversarial two-point distribution constructions, region classifiers for
//! the spatial-induction partitions, and LP-based Pareto-dominance searches,
//! all with deterministic, certificate-producing checks.

pub mod ambiguity;
pub mod certificate;
pub mod distribution;
pub mod grid;
pub mod instance;
pub mod lp;
pub mod mechanism;
pub mod optimality;
pub mod pareto;

pub use certificate::{Certificate, Witness};
pub use distribution::{
    DiscreteDistribution, Distribution, ProductTwoPointDistribution, TwoPointMarginal,
    expected_payoff,
};
pub use grid::{make_grid, make_grid_capped, Grid};
pub use instance::{
    remark1_instance, remark2_independent_instance, remark2_instance, validate_instance,
    Ambiguity, AgentSpec, Instance, TypeProfile, SNAP, TOL,
};
pub use lp::{lp_min, Bounds, LinearProgram, LpError, LpSolution};
pub use mechanism::{
    build_section3_perturbation, check_constant_net_allocation, check_fc, check_ic, fam_allocate,
    fam_payoff, fam_to_grid, mix, FavoredAgentMechanism, GridMechanism, TieRule,
};
pub use optimality::{
    check_forced_allocation, check_markov_optimality_condition, classical_threshold,
    classify_region, designated_mechanism, optimal_family_contains, optimal_value,
    payoff_equivalence, region_closed_form_payoff, region_flags, PartitionId, Region, RegionLabel,
};
pub use pareto::{
    distributional_dominance, pareto_search_markov, pareto_search_support_only,
    pointwise_dominance, DominanceRelation, DominanceReport, ParetoSearchResult,
};

pub use ambiguity::{
    construct_product_two_point, construct_two_point_markov, remark_distribution,
    worst_case_independent, worst_case_markov, worst_case_support_only, RemarkId, WorstCaseResult,
    WorstCaseWitness,
};
