//! Command-line front end: instance validation, mechanism evaluation,
//! worst-case computation, Pareto searches, and reproduction of the named
//! numeric claims.
//!
//! Exit codes: 0 pass, 1 reproduction mismatch, 2 domain or validation
//! failure, 3 I/O or parse failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use favored_agent::*;
use std::path::PathBuf;
use std::process::ExitCode;

mod reproduce;
mod rng;

pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "favored-agent",
    about = "Robust allocation with costly verification: favored-agent mechanisms and certificates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every instance invariant and print the certificate.
    Validate(ValidateArgs),
    /// Evaluate a mechanism at a scenario or under a distribution.
    Evaluate(EvaluateArgs),
    /// Worst-case (expected) payoff under the instance's ambiguity set.
    WorstCase(WorstCaseArgs),
    /// Search for a mechanism Pareto-dominating a base mechanism.
    Pareto(ParetoArgs),
    /// Re-run a named claim bundle and print a claim-by-claim table.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct CommonGridArgs {
    /// Uniform grid points per agent.
    #[arg(long, default_value_t = 3)]
    grid: usize,
    /// Extra grid anchor, as AGENT:VALUE with a 1-based agent (repeatable).
    #[arg(long = "anchor", value_name = "AGENT:VALUE")]
    anchors: Vec<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Instance file (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Directory for machine-readable reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Favored-agent mechanism as I,NU,TIE (1-based agent, tie i|ii).
    #[arg(long, value_name = "I,NU,TIE")]
    fam: Option<String>,
    /// Tabulated mechanism CSV, as written by this tool.
    #[arg(long, value_name = "CSVPATH")]
    mech: Option<PathBuf>,
    /// Type profile to evaluate, comma-separated.
    #[arg(long, value_name = "T1,T2,...")]
    scenario: Option<String>,
    /// Distribution file (JSON) for an expected payoff.
    #[arg(long, value_name = "PATH")]
    dist: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WorstCaseArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_name = "I,NU,TIE")]
    fam: Option<String>,
    #[arg(long, value_name = "CSVPATH")]
    mech: Option<PathBuf>,
    #[command(flatten)]
    grid_args: CommonGridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParetoArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Base mechanism as a favored-agent triple.
    #[arg(long, value_name = "I,NU,TIE")]
    fam: Option<String>,
    /// Base mechanism as a tabulation CSV.
    #[arg(long, value_name = "CSVPATH")]
    mech: Option<PathBuf>,
    #[command(flatten)]
    grid_args: CommonGridArgs,
    /// Slack below this is reported as a zero certificate.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which claim bundle to re-run.
    #[arg(value_enum)]
    which: ReproduceTarget,
    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Comparison tolerance for reproduced values.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ReproduceTarget {
    Remark1,
    Remark2,
    Remark3,
    Remark4,
    Section3,
    Partitions,
    #[value(alias = "lemma_constructions")]
    LemmaConstructions,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::WorstCase(args) => cmd_worst_case(args),
        Command::Pareto(args) => cmd_pareto(args),
        Command::Reproduce(args) => reproduce::run(args.which, args.seed, args.tol, args.out),
    };
    ExitCode::from(code)
}

fn load_instance(path: &PathBuf) -> Result<Instance, u8> {
    Instance::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_IO
    })
}

fn parse_fam(spec: &str, inst: &Instance) -> Result<FavoredAgentMechanism, u8> {
    let parts: Vec<&str> = spec.split(',').collect();
    let bad = || {
        eprintln!("error: --fam expects I,NU,TIE (e.g. 1,2.0,i)");
        EXIT_IO
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let agent: usize = parts[0].trim().parse().map_err(|_| bad())?;
    let nu: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let tie = match parts[2].trim() {
        "i" | "I" => TieRule::TypeI,
        "ii" | "II" => TieRule::TypeII,
        _ => return Err(bad()),
    };
    if agent == 0 || agent > inst.num_agents() {
        eprintln!(
            "error: favored agent {agent} out of range 1..={}",
            inst.num_agents()
        );
        return Err(EXIT_DOMAIN);
    }
    Ok(FavoredAgentMechanism::new(agent - 1, nu, tie))
}

fn parse_anchors(inst: &Instance, raw: &[String]) -> Result<Vec<Vec<f64>>, u8> {
    let mut anchors = vec![Vec::new(); inst.num_agents()];
    for spec in raw {
        let mut it = spec.splitn(2, ':');
        let parsed = (|| {
            let agent: usize = it.next()?.trim().parse().ok()?;
            let value: f64 = it.next()?.trim().parse().ok()?;
            Some((agent, value))
        })();
        match parsed {
            Some((agent, value)) if agent >= 1 && agent <= inst.num_agents() => {
                anchors[agent - 1].push(value);
            }
            _ => {
                eprintln!("error: --anchor expects AGENT:VALUE with a 1-based agent");
                return Err(EXIT_IO);
            }
        }
    }
    Ok(anchors)
}

fn build_grid(inst: &Instance, args: &CommonGridArgs) -> Result<Grid, u8> {
    let anchors = parse_anchors(inst, &args.anchors)?;
    make_grid(inst, args.grid, &anchors).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_DOMAIN
    })
}

fn write_out(dir: &Option<PathBuf>, name: &str, contents: &str) -> Result<(), u8> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| {
            eprintln!("error: create {}: {e}", dir.display());
            EXIT_IO
        })?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| {
            eprintln!("error: write {}: {e}", path.display());
            EXIT_IO
        })?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> u8 {
    let inst = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let cert = validate_instance(&inst);
    println!("{}", cert.report_line());
    if let Err(code) = write_out(
        &args.out,
        "validate.json",
        &serde_json::to_string_pretty(&cert).unwrap(),
    ) {
        return code;
    }
    if cert.pass {
        0
    } else {
        EXIT_DOMAIN
    }
}

enum MechanismSpec {
    Fam(FavoredAgentMechanism),
    Table(GridMechanism),
}

fn load_mechanism(
    inst: &Instance,
    fam: &Option<String>,
    mech: &Option<PathBuf>,
) -> Result<MechanismSpec, u8> {
    match (fam, mech) {
        (Some(spec), None) => Ok(MechanismSpec::Fam(parse_fam(spec, inst)?)),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                eprintln!("error: {}: {e}", path.display());
                EXIT_IO
            })?;
            let table = GridMechanism::from_csv(inst, &text).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_IO
            })?;
            Ok(MechanismSpec::Table(table))
        }
        _ => {
            eprintln!("error: provide exactly one of --fam or --mech");
            Err(EXIT_IO)
        }
    }
}

fn parse_scenario(inst: &Instance, spec: &str) -> Result<TypeProfile, u8> {
    let values: Result<Vec<f64>, _> = spec.split(',').map(|v| v.trim().parse()).collect();
    match values {
        Ok(v) if v.len() == inst.num_agents() => Ok(TypeProfile(v)),
        Ok(v) => {
            eprintln!(
                "error: scenario has {} coordinates, instance has {} agents",
                v.len(),
                inst.num_agents()
            );
            Err(EXIT_DOMAIN)
        }
        Err(e) => {
            eprintln!("error: scenario: {e}");
            Err(EXIT_IO)
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> u8 {
    let inst = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let mechanism = match load_mechanism(&inst, &args.fam, &args.mech) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let payoff_at = |t: &TypeProfile| -> Result<(Vec<f64>, Vec<f64>, f64), u8> {
        match &mechanism {
            MechanismSpec::Fam(fam) => {
                let (p, q) = fam_allocate(fam, &inst, t).map_err(|e| {
                    eprintln!("error: {e}");
                    EXIT_DOMAIN
                })?;
                let value = (0..inst.num_agents())
                    .map(|i| p[i] * t[i] - q[i] * inst.cost(i))
                    .sum();
                Ok((p, q, value))
            }
            MechanismSpec::Table(table) => {
                let s = table.grid.position(t.as_slice()).ok_or_else(|| {
                    eprintln!("error: scenario is not on the mechanism grid");
                    EXIT_DOMAIN
                })?;
                Ok((table.p[s].clone(), table.q[s].clone(), table.payoff_at(&inst, s)))
            }
        }
    };
    let mut report = String::new();
    match (&args.scenario, &args.dist) {
        (Some(spec), None) => {
            let t = match parse_scenario(&inst, spec) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let (p, q, value) = match payoff_at(&t) {
                Ok(v) => v,
                Err(code) => return code,
            };
            report.push_str(&format!("scenario     {:?}\n", t.as_slice()));
            report.push_str(&format!("allocation p {p:?}\n"));
            report.push_str(&format!("inspection q {q:?}\n"));
            report.push_str(&format!("payoff       {value:.12}\n"));
        }
        (None, Some(path)) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_IO;
                }
            };
            let dist = match Distribution::from_json(&text) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_IO;
                }
            };
            if let Err(e) = dist.check_membership(&inst, TOL) {
                eprintln!("error: distribution outside the ambiguity set: {e}");
                return EXIT_DOMAIN;
            }
            let joint = dist.to_joint();
            let mut expectation = 0.0;
            for (t, &w) in joint.support.iter().zip(&joint.weights) {
                let (_, _, value) = match payoff_at(t) {
                    Ok(v) => v,
                    Err(code) => return code,
                };
                report.push_str(&format!(
                    "scenario {:?} (weight {w:.6}): payoff {value:.12}\n",
                    t.as_slice()
                ));
                expectation += w * value;
            }
            report.push_str(&format!("expected payoff {expectation:.12}\n"));
        }
        _ => {
            eprintln!("error: provide exactly one of --scenario or --dist");
            return EXIT_IO;
        }
    }
    print!("{report}");
    if let Err(code) = write_out(&args.out, "evaluate.txt", &report) {
        return code;
    }
    0
}

fn cmd_worst_case(args: WorstCaseArgs) -> u8 {
    let inst = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    if !validate_instance(&inst).pass {
        eprintln!("error: instance fails validation; run `validate` for details");
        return EXIT_DOMAIN;
    }
    let mechanism = match load_mechanism(&inst, &args.fam, &args.mech) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let grid = match &mechanism {
        MechanismSpec::Table(table) => table.grid.clone(),
        MechanismSpec::Fam(_) => match build_grid(&inst, &args.grid_args) {
            Ok(g) => g,
            Err(code) => return code,
        },
    };
    let payoff = |t: &TypeProfile| -> f64 {
        match &mechanism {
            MechanismSpec::Fam(fam) => fam_payoff(fam, &inst, t).expect("grid scenario in domain"),
            MechanismSpec::Table(table) => {
                let s = table.grid.position(t.as_slice()).expect("scenario on grid");
                table.payoff_at(&inst, s)
            }
        }
    };
    let result = match inst.ambiguity {
        Ambiguity::SupportOnly => worst_case_support_only(payoff, &grid),
        Ambiguity::Markov => match worst_case_markov(payoff, &grid, &inst) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_DOMAIN;
            }
        },
        Ambiguity::MarkovIndependent => {
            let fam = match &mechanism {
                MechanismSpec::Fam(fam) => fam,
                MechanismSpec::Table(_) => {
                    eprintln!(
                        "error: the independent-types search evaluates favored-agent \
                         mechanisms off the grid; pass --fam instead of --mech"
                    );
                    return EXIT_DOMAIN;
                }
            };
            let marginal_grid: Vec<Vec<f64>> = grid.axes().to_vec();
            match worst_case_independent(fam, &inst, &marginal_grid) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_DOMAIN;
                }
            }
        }
    };
    let mut report = format!("worst-case value {:.12}\n", result.value);
    match &result.witness {
        ambiguity::WorstCaseWitness::Scenario(t) => {
            report.push_str(&format!("witness scenario {:?}\n", t.as_slice()));
        }
        ambiguity::WorstCaseWitness::Distribution(d) => {
            report.push_str("witness distribution:\n");
            for (t, w) in d.support.iter().zip(&d.weights) {
                report.push_str(&format!("  {:?} with weight {w:.12}\n", t.as_slice()));
            }
        }
        ambiguity::WorstCaseWitness::Product(p) => {
            report.push_str("witness product distribution:\n");
            for (i, m) in p.marginals.iter().enumerate() {
                report.push_str(&format!(
                    "  agent {}: {} w.p. {:.6}, {} w.p. {:.6}\n",
                    i + 1,
                    m.hi,
                    m.p_hi,
                    m.lo,
                    1.0 - m.p_hi
                ));
            }
        }
    }
    for b in &result.binding {
        report.push_str(&format!("binding: {b}\n"));
    }
    print!("{report}");
    if let Err(code) = write_out(&args.out, "worst_case.txt", &report) {
        return code;
    }
    0
}

fn cmd_pareto(args: ParetoArgs) -> u8 {
    if args.tol <= 0.0 {
        eprintln!("error: --tol must be positive");
        return EXIT_IO;
    }
    let inst = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    if !validate_instance(&inst).pass {
        eprintln!("error: instance fails validation; run `validate` for details");
        return EXIT_DOMAIN;
    }
    if inst.ambiguity == Ambiguity::MarkovIndependent {
        eprintln!(
            "the Pareto search over independent-types ambiguity is not offered: the set of \
             independent distributions is nonconvex, so a linear search cannot certify \
             dominance. Verify candidate pairs with `evaluate --dist` gaps instead \
             (distributional dominance over explicit product distributions)."
        );
        return EXIT_DOMAIN;
    }
    let mechanism = match load_mechanism(&inst, &args.fam, &args.mech) {
        Ok(m) => m,
        Err(code) => return code,
    };
    // For a favored-agent base under Markov ambiguity the grid is extended
    // so that the default probe constructions stay on-grid.
    let (grid, base) = match &mechanism {
        MechanismSpec::Table(table) => (table.grid.clone(), table.clone()),
        MechanismSpec::Fam(fam) => {
            let coarse = match build_grid(&inst, &args.grid_args) {
                Ok(g) => g,
                Err(code) => return code,
            };
            let grid = if inst.ambiguity == Ambiguity::Markov {
                let mut anchors = match pareto::markov_probe_anchors(&inst, &coarse) {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_DOMAIN;
                    }
                };
                let user = match parse_anchors(&inst, &args.grid_args.anchors) {
                    Ok(a) => a,
                    Err(code) => return code,
                };
                for (dst, src) in anchors.iter_mut().zip(user) {
                    dst.extend(src);
                }
                match make_grid(&inst, args.grid_args.grid, &anchors) {
                    Ok(g) => g,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_DOMAIN;
                    }
                }
            } else {
                coarse
            };
            let base = fam_to_grid(fam, &inst, &grid).expect("grid scenarios in domain");
            (grid, base)
        }
    };
    let result = match inst.ambiguity {
        Ambiguity::SupportOnly => pareto_search_support_only(&inst, &grid, &base),
        Ambiguity::Markov => pareto_search_markov(&inst, &grid, &base, None),
        Ambiguity::MarkovIndependent => unreachable!("rejected above"),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DOMAIN;
        }
    };
    let mut report = format!(
        "max total slack {:.12e} over a {}-scenario grid\n",
        result.max_total_slack,
        grid.len()
    );
    for n in &result.notes {
        report.push_str(&format!("note: {n}\n"));
    }
    if result.degenerate {
        report.push_str("degenerate search: no probes were available\n");
    } else if result.max_total_slack <= args.tol {
        report.push_str("no Pareto improvement at this grid/probe resolution\n");
    } else {
        report.push_str("improvement found; witness mechanism dominates the base\n");
    }
    print!("{report}");
    if result.max_total_slack > args.tol {
        if let Err(code) = write_out(&args.out, "pareto_witness.csv", &result.witness.to_csv()) {
            return code;
        }
    }
    if let Err(code) = write_out(&args.out, "pareto.txt", &report) {
        return code;
    }
    0
}
