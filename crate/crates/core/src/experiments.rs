//! Monte Carlo comparison of BIC-B and DSIC-B on random networks.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::allocation::{least_cost_paths, AllocationRule, MAX_EXACT_NODES};
use crate::error::{IcbError, Result};
use crate::graph::{is_biconnected, random_network, CostProfile, NetworkModel};
use crate::payments::{outcome_for_tree, Mechanism, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub instances: usize,
    pub cost_range: (f64, f64),
    pub edge_density: f64,
    pub base_seed: u64,
    pub mechanisms: Vec<Mechanism>,
    pub allocation_rule: AllocationRule,
    /// Regenerations allowed per instance while looking for a biconnected graph.
    pub biconnect_retries: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_values: (1..=8).map(|k| 5 * k).collect(),
            instances: 100,
            cost_range: (1.0, 50.0),
            edge_density: 0.3,
            base_seed: 0,
            mechanisms: vec![Mechanism::BicB, Mechanism::DsicB],
            allocation_rule: AllocationRule::LcpTree,
            biconnect_retries: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(IcbError::ConfigInvalid(msg));
        if self.instances == 0 {
            return invalid("instances must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return invalid("n_values is empty".into());
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return invalid(format!("network size {n} is below 2"));
        }
        let (lo, hi) = self.cost_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return invalid(format!(
                "cost range [{lo}, {hi}] is not a positive interval"
            ));
        }
        if !(self.edge_density > 0.0 && self.edge_density <= 1.0) {
            return invalid(format!("edge density {} not in (0, 1]", self.edge_density));
        }
        if self.mechanisms.is_empty() {
            return invalid("no mechanisms selected".into());
        }
        if self.allocation_rule == AllocationRule::ExactOptimal {
            if let Some(n) = self.n_values.iter().find(|&&n| n > MAX_EXACT_NODES) {
                return invalid(format!(
                    "exact-optimal allocation supports n <= {MAX_EXACT_NODES}, got {n}"
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoRouters,
    NoPayers,
    NotBiconnected,
}

impl SkipReason {
    fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoRouters => "no_routers",
            SkipReason::NoPayers => "no_payers",
            SkipReason::NotBiconnected => "not_biconnected",
        }
    }
}

/// One (instance, mechanism) row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub instance: usize,
    /// Seed that regenerates this exact network and cost profile.
    pub seed: u64,
    pub mechanism: Mechanism,
    pub apr: Option<f64>,
    pub wor: Option<f64>,
    pub budget_sum: Option<f64>,
    pub router_count: usize,
    pub skipped: Vec<SkipReason>,
    /// Regenerations spent finding a biconnected graph.
    pub retries: usize,
}

impl ExperimentRecord {
    pub fn skipped_reason(&self) -> String {
        self.skipped
            .iter()
            .map(|r| r.as_str())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Average payment to routers.
pub fn compute_apr(outcome: &Outcome) -> Result<f64> {
    let routers = outcome.routers();
    if routers.is_empty() {
        return Err(IcbError::NoRouters);
    }
    let total: f64 = routers
        .iter()
        .map(|r| match &outcome.dsic {
            Some(d) => d.received[r.0],
            None => outcome.payments[r.0],
        })
        .sum();
    Ok(total / routers.len() as f64)
}

/// Worst overpayment ratio: the largest `payment made / LCP value` over
/// paying nodes. Nodes adjacent to the source (LCP value 0) are excluded.
pub fn compute_wor(outcome: &Outcome, net: &NetworkModel, theta: &CostProfile) -> Result<f64> {
    let dist = least_cost_paths(net, theta).dist;
    let mut worst: Option<f64> = None;
    for v in net.nodes() {
        if v == net.source() || dist[v.0] <= 0.0 {
            continue;
        }
        let paid = match &outcome.dsic {
            Some(d) => d.paid[v.0],
            None if outcome.routers().contains(&v) => 0.0,
            None => -outcome.payments[v.0],
        };
        if paid <= 0.0 {
            continue;
        }
        let ratio = paid / dist[v.0];
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst.ok_or(IcbError::NoPayers)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of instance `instance` at size `n`: `base ⊕ hash(n, instance)`.
pub fn instance_seed(base_seed: u64, n: usize, instance: usize) -> u64 {
    base_seed ^ splitmix64(splitmix64(n as u64) ^ instance as u64)
}

fn retry_seed(seed: u64, attempt: usize) -> u64 {
    if attempt == 0 {
        seed
    } else {
        splitmix64(seed ^ (attempt as u64).wrapping_mul(GOLDEN))
    }
}

/// Evaluates every configured mechanism on the network generated from `seed`.
pub fn evaluate_instance(
    cfg: &ExperimentConfig,
    n: usize,
    instance: usize,
    seed: u64,
    retries: usize,
) -> Result<Vec<ExperimentRecord>> {
    let (lo, hi) = cfg.cost_range;
    let (net, theta) = random_network(n, cfg.edge_density, lo, hi, seed)?;
    let srbt = cfg.allocation_rule.build(&net, &theta)?;
    let biconnected = is_biconnected(&net);
    let mut records = Vec::with_capacity(cfg.mechanisms.len());
    for &mechanism in &cfg.mechanisms {
        let mut record = ExperimentRecord {
            n,
            instance,
            seed,
            mechanism,
            apr: None,
            wor: None,
            budget_sum: None,
            router_count: srbt.routers().len(),
            skipped: Vec::new(),
            retries,
        };
        if mechanism == Mechanism::DsicB && !biconnected {
            record.skipped.push(SkipReason::NotBiconnected);
            records.push(record);
            continue;
        }
        let outcome = outcome_for_tree(&net, &theta, mechanism, srbt.clone())?;
        record.budget_sum = Some(outcome.budget_sum());
        match compute_apr(&outcome) {
            Ok(apr) => record.apr = Some(apr),
            Err(_) => record.skipped.push(SkipReason::NoRouters),
        }
        match compute_wor(&outcome, &net, &theta) {
            Ok(wor) => record.wor = Some(wor),
            Err(_) => record.skipped.push(SkipReason::NoPayers),
        }
        records.push(record);
    }
    Ok(records)
}

/// Runs the full grid. Records are ordered by (n, instance, mechanism) and
/// fully determined by the configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let needs_biconnected = cfg.mechanisms.contains(&Mechanism::DsicB);
    let mut mechanisms = cfg.mechanisms.clone();
    mechanisms.sort();
    mechanisms.dedup();
    let cfg = ExperimentConfig {
        mechanisms,
        ..cfg.clone()
    };
    let (lo, hi) = cfg.cost_range;
    let mut records = Vec::new();
    for &n in &cfg.n_values {
        for instance in 0..cfg.instances {
            let base = instance_seed(cfg.base_seed, n, instance);
            let mut chosen = (base, 0);
            if needs_biconnected {
                for attempt in 0..=cfg.biconnect_retries {
                    let seed = retry_seed(base, attempt);
                    chosen = (seed, attempt);
                    let (net, _) = random_network(n, cfg.edge_density, lo, hi, seed)?;
                    if is_biconnected(&net) {
                        break;
                    }
                }
            }
            records.extend(evaluate_instance(&cfg, n, instance, chosen.0, chosen.1)?);
        }
    }
    Ok(records)
}

/// Recomputes a record from its stored seed.
pub fn replay_record(
    cfg: &ExperimentConfig,
    record: &ExperimentRecord,
) -> Result<ExperimentRecord> {
    let single = ExperimentConfig {
        mechanisms: vec![record.mechanism],
        ..cfg.clone()
    };
    evaluate_instance(
        &single,
        record.n,
        record.instance,
        record.seed,
        record.retries,
    )?
    .pop()
    .ok_or(IcbError::EmptyInput)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub mechanism: Mechanism,
    pub mean_apr: Option<f64>,
    pub min_apr: Option<f64>,
    pub max_apr: Option<f64>,
    pub mean_wor: Option<f64>,
    pub min_wor: Option<f64>,
    pub max_wor: Option<f64>,
    pub records: usize,
    /// Records with at least one skipped metric.
    pub skips: usize,
}

#[derive(Default)]
struct Stats {
    sum: f64,
    count: usize,
    min: f64,
    max: f64,
}

impl Stats {
    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.sum += x;
        self.count += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    fn min(&self) -> Option<f64> {
        (self.count > 0).then_some(self.min)
    }

    fn max(&self) -> Option<f64> {
        (self.count > 0).then_some(self.max)
    }
}

/// Per (n, mechanism) statistics, sorted by n then mechanism.
pub fn aggregate(records: &[ExperimentRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(IcbError::EmptyInput);
    }
    let mut groups: BTreeMap<(usize, Mechanism), (Stats, Stats, usize, usize)> = BTreeMap::new();
    for r in records {
        let entry = groups.entry((r.n, r.mechanism)).or_default();
        if let Some(apr) = r.apr {
            entry.0.push(apr);
        }
        if let Some(wor) = r.wor {
            entry.1.push(wor);
        }
        entry.2 += 1;
        if !r.skipped.is_empty() {
            entry.3 += 1;
        }
    }
    Ok(groups
        .into_iter()
        .map(|((n, mechanism), (apr, wor, count, skips))| SummaryRow {
            n,
            mechanism,
            mean_apr: apr.mean(),
            min_apr: apr.min(),
            max_apr: apr.max(),
            mean_wor: wor.mean(),
            min_wor: wor.min(),
            max_wor: wor.max(),
            records: count,
            skips,
        })
        .collect())
}

/// BIC-B vs DSIC-B comparison of one metric at one network size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingVerdict {
    pub n: usize,
    pub metric: &'static str,
    pub bicb: Option<f64>,
    pub dsicb: Option<f64>,
    /// True iff both means exist and BIC-B is strictly lower.
    pub bicb_lower: bool,
}

pub fn ordering_verdicts(summary: &[SummaryRow]) -> Vec<OrderingVerdict> {
    let mut by_n: BTreeMap<usize, (Option<&SummaryRow>, Option<&SummaryRow>)> = BTreeMap::new();
    for row in summary {
        let entry = by_n.entry(row.n).or_default();
        match row.mechanism {
            Mechanism::BicB => entry.0 = Some(row),
            Mechanism::DsicB => entry.1 = Some(row),
        }
    }
    let mut out = Vec::new();
    for (n, (bic, dsic)) in by_n {
        for metric in ["apr", "wor"] {
            let pick = |row: Option<&SummaryRow>| {
                row.and_then(|r| {
                    if metric == "apr" {
                        r.mean_apr
                    } else {
                        r.mean_wor
                    }
                })
            };
            let (b, d) = (pick(bic), pick(dsic));
            out.push(OrderingVerdict {
                n,
                metric,
                bicb: b,
                dsicb: d,
                bicb_lower: matches!((b, d), (Some(b), Some(d)) if b < d),
            });
        }
    }
    out
}

#[derive(Serialize)]
struct RecordRow<'a> {
    n: usize,
    instance: usize,
    seed: u64,
    mechanism: &'a str,
    apr: Option<f64>,
    wor: Option<f64>,
    budget_sum: Option<f64>,
    router_count: usize,
    skipped_reason: String,
}

#[derive(Serialize)]
struct SummaryCsvRow<'a> {
    n: usize,
    mechanism: &'a str,
    mean_apr: Option<f64>,
    mean_wor: Option<f64>,
    min_wor: Option<f64>,
    max_wor: Option<f64>,
    skips: usize,
}

fn csv_error(e: csv::Error) -> IcbError {
    IcbError::Io(e.to_string())
}

/// Records CSV: n, instance, seed, mechanism, apr, wor, budget_sum,
/// router_count, skipped_reason.
pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        let mechanism = r.mechanism.to_string();
        w.serialize(RecordRow {
            n: r.n,
            instance: r.instance,
            seed: r.seed,
            mechanism: &mechanism,
            apr: r.apr,
            wor: r.wor,
            budget_sum: r.budget_sum,
            router_count: r.router_count,
            skipped_reason: r.skipped_reason(),
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| IcbError::Io(e.to_string()))
}

/// Summary CSV: n, mechanism, mean_apr, mean_wor, min_wor, max_wor, skips.
pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in summary {
        let mechanism = row.mechanism.to_string();
        w.serialize(SummaryCsvRow {
            n: row.n,
            mechanism: &mechanism,
            mean_apr: row.mean_apr,
            mean_wor: row.mean_wor,
            min_wor: row.min_wor,
            max_wor: row.max_wor,
            skips: row.skips,
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| IcbError::Io(e.to_string()))
}
