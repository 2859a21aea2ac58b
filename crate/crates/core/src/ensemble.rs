//! Seeded ensemble orchestration: generate instances, optimize with warm
//! starts across layer counts, fit, extract trajectory resources, and persist
//! one JSON row per `(instance, p)`.
//!
//! Rows are appended to `rows.jsonl` in work-item order regardless of which
//! worker finishes first, so two runs of the same config produce byte-identical
//! files and a killed run loses at most the items still in flight. A resume
//! pass keeps the longest leading run of fully committed items in the existing
//! file, truncates the rest, and recomputes only the remainder.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::splitmix64;
use crate::optimizer::{optimize_next, optimize_p1, OptimResult, OptimizeConfig};
use crate::problems::{sample_qubo, table_for_instance};
use crate::records::write_json;
use crate::simulator::run_qaoa;
use crate::thermofit::{fit_bimodal, FitConfig};
use crate::trajectory::{cumulative_path, rescale_schedule};

/// Ensemble sweep configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EnsembleConfig {
    /// Qubit counts to sweep.
    pub n_list: Vec<usize>,
    /// Layer counts per instance, swept in increasing order (warm starts).
    pub p_list: Vec<usize>,
    /// Instances per qubit count.
    pub instances: usize,
    pub base_seed: u64,
    pub optimizer: OptimizeConfig,
    pub fit: FitConfig,
    /// Optional cost-angle rescale sweep applied at the largest layer count;
    /// results land in `rescale.jsonl`.
    pub zeta_list: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    /// Worker threads (0 = rayon default). Results never depend on this.
    pub workers: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_list: vec![8],
            p_list: vec![1, 2, 3, 4],
            instances: 10,
            base_seed: 1,
            optimizer: OptimizeConfig::default(),
            fit: FitConfig::default(),
            zeta_list: None,
            output_dir: PathBuf::from("ensemble-out"),
            workers: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::InvalidConfig("instances must be >= 1".into()));
        }
        if self.n_list.is_empty() || self.p_list.is_empty() {
            return Err(Error::InvalidConfig(
                "n_list and p_list must be nonempty".into(),
            ));
        }
        if self.n_list.iter().any(|&n| !(2..=24).contains(&n)) {
            return Err(Error::InvalidConfig(
                "qubit counts must lie in 2..=24".into(),
            ));
        }
        if self.p_list.iter().any(|&p| p == 0) {
            return Err(Error::InvalidConfig("layer counts must be >= 1".into()));
        }
        if let Some(zetas) = &self.zeta_list {
            if zetas.iter().any(|&z| z <= 0.0) {
                return Err(Error::InvalidConfig(
                    "rescale factors must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Layer counts sorted ascending with duplicates removed.
    fn sorted_p(&self) -> Vec<usize> {
        let mut p = self.p_list.clone();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Equality of the fields that determine the produced rows (worker count
    /// and output location do not).
    fn same_results_as(&self, other: &Self) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.workers = 0;
        b.workers = 0;
        a.output_dir = PathBuf::new();
        b.output_dir = PathBuf::new();
        a == b
    }
}

/// Per-instance seed: a SplitMix64 chain over the base seed, qubit count, and
/// instance index, stable across platforms.
pub fn instance_seed(base_seed: u64, n: usize, index: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ ((n as u64) << 32)) ^ index as u64)
}

/// One persisted row of an ensemble run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub instance_id: String,
    pub n: usize,
    pub p: usize,
    pub beta_high: f64,
    pub beta_low: f64,
    pub p_low: f64,
    pub gamma_max: f64,
    pub theta_max: f64,
    pub ground_overlap: f64,
    pub value: f64,
    /// Spectral width `e_max - e_min` of the instance; converts the fitted
    /// temperatures (quoted per unit normalized energy) into spectral units.
    pub span: f64,
}

/// One persisted row of the optional rescale sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaleRow {
    pub instance_id: String,
    pub n: usize,
    pub p: usize,
    pub zeta: f64,
    pub beta_high: f64,
    pub beta_low: f64,
    pub p_low: f64,
}

/// Column summary with linear-interpolation percentiles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub p05: f64,
    pub p95: f64,
}

impl ColumnStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pct = |q: f64| crate::numerics::percentile(&sorted, q);
        Self {
            mean,
            std: var.sqrt(),
            q1: pct(0.25),
            median: pct(0.5),
            q3: pct(0.75),
            p05: pct(0.05),
            p95: pct(0.95),
        }
    }
}

/// Aggregates for one `(n, p)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellAggregate {
    pub n: usize,
    pub p: usize,
    pub count: usize,
    pub beta_high: ColumnStats,
    pub beta_low: ColumnStats,
    pub p_low: ColumnStats,
    pub gamma_max: ColumnStats,
    pub theta_max: ColumnStats,
    pub ground_overlap: ColumnStats,
}

/// Aggregate rows per `(n, p)` cell.
pub fn aggregate_rows(rows: &[Row]) -> Vec<CellAggregate> {
    let mut cells: BTreeMap<(usize, usize), Vec<&Row>> = BTreeMap::new();
    for row in rows {
        cells.entry((row.n, row.p)).or_default().push(row);
    }
    cells
        .into_iter()
        .map(|((n, p), members)| {
            let col = |f: fn(&Row) -> f64| -> ColumnStats {
                let values: Vec<f64> = members.iter().map(|r| f(r)).collect();
                ColumnStats::from_values(&values)
            };
            CellAggregate {
                n,
                p,
                count: members.len(),
                beta_high: col(|r| r.beta_high),
                beta_low: col(|r| r.beta_low),
                p_low: col(|r| r.p_low),
                gamma_max: col(|r| r.gamma_max),
                theta_max: col(|r| r.theta_max),
                ground_overlap: col(|r| r.ground_overlap),
            }
        })
        .collect()
}

/// Full ensemble output.
#[derive(Debug)]
pub struct EnsembleReport {
    pub rows: Vec<Row>,
    pub rescale_rows: Vec<RescaleRow>,
    pub aggregates: Vec<CellAggregate>,
    pub attempted: usize,
    pub failed: usize,
    pub rows_path: PathBuf,
}

impl EnsembleReport {
    /// True when more than 5% of work items failed.
    pub fn excessive_failures(&self) -> bool {
        self.failed * 20 > self.attempted
    }
}

struct ItemOutput {
    rows: Vec<Row>,
    rescale_rows: Vec<RescaleRow>,
}

/// Run the full pipeline for one instance: sample, enumerate, optimize across
/// the layer sweep with warm starts, fit each depth, and record trajectory
/// resources.
fn run_item(
    n: usize,
    index: usize,
    cfg: &EnsembleConfig,
    p_list: &[usize],
) -> Result<ItemOutput> {
    let seed = instance_seed(cfg.base_seed, n, index);
    let q = sample_qubo(n, seed)?;
    let t = table_for_instance(&q)?;
    let opt_cfg = OptimizeConfig {
        seed: splitmix64(seed ^ 0x0971),
        ..cfg.optimizer
    };
    let fit_cfg = FitConfig {
        seed: splitmix64(seed ^ 0x0f17),
        ..cfg.fit
    };

    let mut rows = Vec::with_capacity(p_list.len());
    let mut current: Option<OptimResult> = None;
    for &p in p_list {
        let res = match &current {
            None => {
                let first = optimize_p1(&t, &opt_cfg);
                if p == 1 {
                    first
                } else {
                    optimize_next(&t, &first.schedule, p, &opt_cfg)
                }
            }
            Some(prev) => optimize_next(&t, &prev.schedule, p, &opt_cfg),
        };
        let state = run_qaoa(&t, &res.schedule)?;
        let fit = fit_bimodal(&state.probabilities(), &t, &fit_cfg)?;
        let path = cumulative_path(&res.schedule);
        rows.push(Row {
            instance_id: q.instance_id().to_string(),
            n,
            p,
            beta_high: fit.beta_high,
            beta_low: fit.beta_low,
            p_low: fit.p_low,
            gamma_max: path.gamma_max,
            theta_max: path.theta_max,
            ground_overlap: res.ground_overlap,
            value: res.value,
            span: t.span(),
        });
        current = Some(res);
    }

    let mut rescale_rows = Vec::new();
    if let (Some(zetas), Some(best)) = (&cfg.zeta_list, &current) {
        let p_max = *p_list.last().unwrap();
        for &zeta in zetas {
            let scaled = rescale_schedule(&best.schedule, zeta, 1.0)?;
            let state = run_qaoa(&t, &scaled)?;
            let fit = fit_bimodal(&state.probabilities(), &t, &fit_cfg)?;
            rescale_rows.push(RescaleRow {
                instance_id: q.instance_id().to_string(),
                n,
                p: p_max,
                zeta,
                beta_high: fit.beta_high,
                beta_low: fit.beta_low,
                p_low: fit.p_low,
            });
        }
    }

    Ok(ItemOutput { rows, rescale_rows })
}

/// Serialized-append sink that commits item outputs in index order.
struct OrderedSink {
    rows_file: fs::File,
    rescale_file: Option<fs::File>,
    next: usize,
    pending: BTreeMap<usize, ItemOutput>,
    rows: Vec<Row>,
    rescale_rows: Vec<RescaleRow>,
}

impl OrderedSink {
    fn push(&mut self, index: usize, output: ItemOutput) -> Result<()> {
        self.pending.insert(index, output);
        while let Some(output) = self.pending.remove(&self.next) {
            let mut buf = String::new();
            for row in &output.rows {
                buf.push_str(&serde_json::to_string(row)?);
                buf.push('\n');
            }
            self.rows_file.write_all(buf.as_bytes())?;
            self.rows_file.flush()?;
            if let Some(file) = &mut self.rescale_file {
                let mut buf = String::new();
                for row in &output.rescale_rows {
                    buf.push_str(&serde_json::to_string(row)?);
                    buf.push('\n');
                }
                file.write_all(buf.as_bytes())?;
                file.flush()?;
            }
            self.rows.extend(output.rows);
            self.rescale_rows.extend(output.rescale_rows);
            self.next += 1;
        }
        Ok(())
    }
}

fn parse_jsonl<T: DeserializeOwned>(path: &Path) -> Vec<T> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    text.lines()
        .filter_map(|line| serde_json::from_str(line).ok())
        .collect()
}

/// Count how many leading work items are fully and correctly present in the
/// persisted rows: item `k` must contribute exactly one row per layer count,
/// in order, with the expected instance id.
fn count_complete_items(
    existing: &[Row],
    expected_ids: &[String],
    p_list: &[usize],
) -> usize {
    let per_item = p_list.len();
    let mut done = 0;
    let mut cursor = 0;
    'items: for id in expected_ids {
        if cursor + per_item > existing.len() {
            break;
        }
        for (j, &p) in p_list.iter().enumerate() {
            let row = &existing[cursor + j];
            if row.instance_id != *id || row.p != p {
                break 'items;
            }
        }
        cursor += per_item;
        done += 1;
    }
    done
}

/// Run an ensemble. If `output_dir` already holds rows from the same config,
/// completed items are skipped and the run resumes after them.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let rows_path = cfg.output_dir.join("rows.jsonl");
    let rescale_path = cfg.output_dir.join("rescale.jsonl");
    let config_path = cfg.output_dir.join("ensemble.config.json");

    // Config sidecar: refuse to mix rows from different configurations.
    if config_path.exists() {
        let existing: EnsembleConfig = crate::records::read_json(&config_path)?;
        if !existing.same_results_as(cfg) {
            return Err(Error::InvalidConfig(format!(
                "output dir {} holds rows for a different config; \
                 use a fresh directory",
                cfg.output_dir.display()
            )));
        }
    } else {
        write_json(&config_path, cfg)?;
    }

    let p_list = cfg.sorted_p();
    let items: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.instances).map(move |i| (n, i)))
        .collect();
    let expected_ids: Vec<String> = items
        .iter()
        .map(|&(n, i)| {
            let seed = instance_seed(cfg.base_seed, n, i);
            format!("q{n:02}s{seed:016x}")
        })
        .collect();
    let per_item = p_list.len();
    let per_item_rescale = cfg.zeta_list.as_ref().map_or(0, |z| z.len());

    // Resume: keep the longest leading run of fully committed items. All
    // kept items completed successfully, so the rescale file holds exactly
    // `per_item_rescale` rows for each.
    let existing: Vec<Row> = parse_jsonl(&rows_path);
    let done_items = count_complete_items(&existing, &expected_ids, &p_list);
    let kept: Vec<Row> = existing.into_iter().take(done_items * per_item).collect();
    let kept_rescale: Vec<RescaleRow> = if per_item_rescale > 0 {
        parse_jsonl(&rescale_path)
            .into_iter()
            .take(done_items * per_item_rescale)
            .collect()
    } else {
        Vec::new()
    };

    // Rewrite the retained prefix (drops any partial tail), then append.
    {
        let mut buf = String::new();
        for row in &kept {
            buf.push_str(&serde_json::to_string(row)?);
            buf.push('\n');
        }
        fs::write(&rows_path, buf)?;
        if per_item_rescale > 0 {
            let mut buf = String::new();
            for row in &kept_rescale {
                buf.push_str(&serde_json::to_string(row)?);
                buf.push('\n');
            }
            fs::write(&rescale_path, buf)?;
        }
    }

    let rows_file = fs::OpenOptions::new().append(true).open(&rows_path)?;
    let rescale_file = if per_item_rescale > 0 {
        Some(fs::OpenOptions::new().append(true).open(&rescale_path)?)
    } else {
        None
    };

    let sink = Mutex::new(OrderedSink {
        rows_file,
        rescale_file,
        next: done_items,
        pending: BTreeMap::new(),
        rows: kept,
        rescale_rows: kept_rescale,
    });
    let failures = Mutex::new(Vec::<String>::new());

    let work = |(offset, &(n, index)): (usize, &(usize, usize))| {
        let item_idx = done_items + offset;
        let output = match run_item(n, index, cfg, &p_list) {
            Ok(out) => out,
            Err(err) => {
                failures
                    .lock()
                    .unwrap()
                    .push(format!("n={n} index={index}: {err}"));
                // Commit an empty item so later items can still flush; the
                // resume walk re-runs everything from the first gap.
                ItemOutput { rows: Vec::new(), rescale_rows: Vec::new() }
            }
        };
        sink.lock()
            .unwrap()
            .push(item_idx, output)
            .expect("row append failed");
    };

    let todo = &items[done_items..];
    #[cfg(feature = "parallel")]
    todo.par_iter().enumerate().for_each(work);
    #[cfg(not(feature = "parallel"))]
    todo.iter().enumerate().for_each(work);

    let sink = sink.into_inner().unwrap();
    let failures = failures.into_inner().unwrap();
    for msg in &failures {
        eprintln!("[ensemble] failed item: {msg}");
    }

    let aggregates = aggregate_rows(&sink.rows);
    Ok(EnsembleReport {
        rows: sink.rows,
        rescale_rows: sink.rescale_rows,
        aggregates,
        attempted: items.len(),
        failed: failures.len(),
        rows_path,
    })
}
