use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use icb_core::experiments::{ordering_verdicts, write_records_csv, write_summary_csv};
use icb_core::fixtures::{worked_example, WORKED_EXAMPLE_PAYMENTS};
use icb_core::payments::find_dominant_strategy_violation;
use icb_core::{
    aggregate, all_profiles, check_bayesian_ic, check_budget_balance, check_expost_ir,
    check_nonrouter_payments, execute_broadcast, ir_threshold, is_biconnected, mediator_round,
    random_discrete_network, router_utility, run_experiment, run_mechanism, sample_profiles,
    AllocationRule, CostProfile, ExperimentConfig, Mechanism, NetworkFile, NetworkModel, Outcome,
    PropertyReport,
};
use serde::Serialize;

const PROFILE_LIMIT: usize = 4096;
const SAMPLED_PROFILES: usize = 200;
const RANDOM_DENSITY: f64 = 0.5;
const RANDOM_TYPES: usize = 3;
const BICONNECT_ATTEMPTS: u64 = 50;

fn money(x: f64) -> String {
    // avoid printing "-0.00"
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn money_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|&v| money(v)).collect();
    format!("[{}]", parts.join(", "))
}

fn id_set<'a>(ids: impl IntoIterator<Item = &'a icb_core::NodeId>) -> String {
    let parts: Vec<String> = ids.into_iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

fn print_outcome(net: &NetworkModel, outcome: &Outcome) {
    let edges: Vec<String> = net
        .nodes()
        .filter_map(|v| outcome.srbt.parent(v).map(|p| format!("{p}->{v}")))
        .collect();
    println!("mechanism: {}", outcome.mechanism);
    println!("SRBT edges: {}", edges.join(", "));
    println!("R = {}", id_set(outcome.routers()));
    let k: Vec<String> = outcome
        .allocation
        .as_bits()
        .iter()
        .map(|b| b.to_string())
        .collect();
    println!("k = ({})", k.join(", "));
    println!("t = {}", money_list(&outcome.payments));
    if let Some(d) = &outcome.dsic {
        println!("received = {}", money_list(&d.received));
        println!("paid = {}", money_list(&d.paid));
    }
    println!("budget sum = {}", money(outcome.budget_sum()));
}

pub fn demo(json: bool) -> Result<ExitCode> {
    let (net, theta) = worked_example();
    let outcome = run_mechanism(&net, &theta, Mechanism::BicB, AllocationRule::LcpTree)?;
    let matches = outcome
        .payments
        .iter()
        .zip(WORKED_EXAMPLE_PAYMENTS)
        .all(|(got, want)| (got - want).abs() <= 0.01)
        && outcome.budget_sum().abs() <= 1e-9;

    if json {
        println!("{}", serde_json::to_string_pretty(&outcome.to_json())?);
    } else {
        println!("network: path 1-2-3-4, source 1");
        println!("priors: {{10,11}}, {{15,16}}, {{12,13}}, {{7,8}} (equally likely)");
        println!("announced: (10, 15, 13, 8)");
        print_outcome(&net, &outcome);
        for &r in outcome.routers() {
            let u = router_utility(&net, outcome.routers(), &theta, r)?;
            println!(
                "node {r}: utility {} (IR threshold {})",
                money(u),
                money(ir_threshold(&net, r))
            );
        }
        println!(
            "reference payments {}: {}",
            money_list(&WORKED_EXAMPLE_PAYMENTS),
            if matches { "match" } else { "MISMATCH" }
        );
    }
    Ok(if matches {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn load_network(path: &Path) -> Result<NetworkModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = NetworkFile::from_json(&text)?;
    Ok(file.into_network()?)
}

pub fn run(
    graph: &Path,
    announce: Vec<f64>,
    mechanism: Mechanism,
    allocation: AllocationRule,
    json: bool,
    trace: bool,
) -> Result<ExitCode> {
    let net = load_network(graph)?;
    let theta = CostProfile::for_network(&net, announce)?;
    let outcome = run_mechanism(&net, &theta, mechanism, allocation)?;
    if json {
        println!("{}", serde_json::to_string(&outcome.to_json())?);
    } else {
        print_outcome(&net, &outcome);
    }
    if trace {
        let tables = mediator_round(&net, &theta, mechanism, allocation)?;
        let trace = execute_broadcast(&tables, &net)?;
        print!("{}", trace.to_json_lines());
    }
    Ok(ExitCode::SUCCESS)
}

pub struct VerifyArgs {
    pub graph: Option<PathBuf>,
    pub random: Option<usize>,
    pub checks: Vec<String>,
    pub seed: u64,
    pub announce: Option<Vec<f64>>,
    pub allocation: AllocationRule,
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    BudgetBalance,
    NonRouter,
    Ir,
    Bic,
    Dsic,
}

impl Check {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "bb" => Check::BudgetBalance,
            "nonrouter" => Check::NonRouter,
            "ir" => Check::Ir,
            "bic" => Check::Bic,
            "dsic" => Check::Dsic,
            other => bail!("unknown check '{other}' (expected bb, nonrouter, ir, bic, dsic)"),
        })
    }
}

#[derive(Serialize)]
struct DsicReport {
    property: &'static str,
    passed: bool,
    witness: Option<icb_core::payments::Deviation>,
    instances_checked: usize,
}

pub fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let checks = args
        .checks
        .iter()
        .map(|c| Check::parse(c))
        .collect::<Result<Vec<_>>>()?;
    let net = match (&args.graph, args.random) {
        (Some(path), _) => load_network(path)?,
        (None, Some(n)) => {
            let needs_biconnected = checks.contains(&Check::Dsic);
            let mut found = None;
            for attempt in 0..BICONNECT_ATTEMPTS {
                let seed = args.seed.wrapping_add(attempt);
                let (net, _) =
                    random_discrete_network(n, RANDOM_DENSITY, RANDOM_TYPES, 1, 50, seed)?;
                if !needs_biconnected || is_biconnected(&net) {
                    found = Some(net);
                    break;
                }
            }
            found.ok_or_else(|| anyhow!("no biconnected instance found for n = {n}"))?
        }
        (None, None) => bail!("either --graph or --random is required"),
    };

    let profiles = match args.announce {
        Some(theta) => vec![CostProfile::for_network(&net, theta)?],
        None => all_profiles(&net, PROFILE_LIMIT)
            .unwrap_or_else(|| sample_profiles(&net, SAMPLED_PROFILES, args.seed)),
    };
    let trees = profiles
        .iter()
        .map(|p| args.allocation.build(&net, p))
        .collect::<icb_core::Result<Vec<_>>>()?;

    let mut reports: Vec<serde_json::Value> = Vec::new();
    let mut all_passed = true;
    for check in checks {
        let report = match check {
            Check::BudgetBalance => PropertyReport::merge(
                "budget_balance",
                trees
                    .iter()
                    .map(|t| check_budget_balance(&net, t.routers())),
            ),
            Check::NonRouter => PropertyReport::merge(
                "nonrouter_payments",
                trees
                    .iter()
                    .map(|t| check_nonrouter_payments(&net, t.routers())),
            ),
            Check::Ir => PropertyReport::merge(
                "expost_ir",
                trees
                    .iter()
                    .zip(&profiles)
                    .map(|(t, p)| check_expost_ir(&net, t.routers(), p))
                    .collect::<icb_core::Result<Vec<_>>>()?,
            ),
            Check::Bic => check_bayesian_ic(&net, args.allocation)?,
            Check::Dsic => {
                let witness =
                    find_dominant_strategy_violation(&net, Mechanism::DsicB, args.allocation)?;
                let report = DsicReport {
                    property: "dominant_strategy_ic",
                    passed: witness.is_none(),
                    witness,
                    instances_checked: 1,
                };
                all_passed &= report.passed;
                emit(
                    &report,
                    report.property,
                    report.passed,
                    report.instances_checked,
                    args.json,
                    &mut reports,
                )?;
                continue;
            }
        };
        all_passed &= report.passed;
        emit(
            &report,
            &report.property,
            report.passed,
            report.instances_checked,
            args.json,
            &mut reports,
        )?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn emit<T: Serialize>(
    report: &T,
    property: &str,
    passed: bool,
    instances: usize,
    json: bool,
    sink: &mut Vec<serde_json::Value>,
) -> Result<()> {
    let value = serde_json::to_value(report)?;
    if json {
        sink.push(value);
        return Ok(());
    }
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("{verdict} {property} (instances checked: {instances})");
    if !passed {
        println!("  witness: {}", value["witness"]);
    }
    Ok(())
}

pub struct ExperimentArgs {
    pub config: Option<PathBuf>,
    pub n_list: Option<Vec<usize>>,
    pub instances: Option<usize>,
    pub seed: Option<u64>,
    pub density: Option<f64>,
    pub allocation: Option<AllocationRule>,
    pub out: PathBuf,
    pub strict: bool,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    config: &'a ExperimentConfig,
    summary: &'a [icb_core::SummaryRow],
    verdicts: &'a [icb_core::experiments::OrderingVerdict],
}

pub fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text).context("invalid experiment config")?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.n_list {
        cfg.n_values = n;
    }
    if let Some(i) = args.instances {
        cfg.instances = i;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(d) = args.density {
        cfg.edge_density = d;
    }
    if let Some(a) = args.allocation {
        cfg.allocation_rule = a;
    }
    cfg.validate()?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let records = run_experiment(&cfg)?;
    let summary = aggregate(&records)?;
    let verdicts = ordering_verdicts(&summary);

    let create = |name: &str| {
        let path = args.out.join(name);
        fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))
    };
    write_records_csv(&records, create("records.csv")?)?;
    write_summary_csv(&summary, create("summary.csv")?)?;
    serde_json::to_writer_pretty(
        create("summary.json")?,
        &SummaryJson {
            config: &cfg,
            summary: &summary,
            verdicts: &verdicts,
        },
    )?;

    let mut all_lower = true;
    for v in &verdicts {
        let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |x| format!("{x:.3}"));
        println!(
            "n={:<3} {}: BIC-B {} vs DSIC-B {} -> {}",
            v.n,
            v.metric.to_uppercase(),
            fmt(v.bicb),
            fmt(v.dsicb),
            if v.bicb_lower {
                "BIC-B < DSIC-B"
            } else {
                "ordering NOT satisfied"
            }
        );
        all_lower &= v.bicb_lower;
    }
    for row in summary.iter().filter(|r| r.mechanism == Mechanism::BicB) {
        if let Some(w) = row.mean_wor {
            println!(
                "n={:<3} BIC-B mean WOR {:.3} ({} 2)",
                row.n,
                w,
                if w < 2.0 { "<" } else { ">=" }
            );
        }
    }
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(if args.strict && !all_lower {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
