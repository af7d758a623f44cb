//! Seed-paired experiment runners, CSV writers and run manifests.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::config::{ExperimentConfig, SchedulerKind};
use crate::neuralnet::{save_checkpoint, NetError, QNetwork};
use crate::scenario::{build_episode, Phasing, ScenarioConfig};
use crate::schedulers::{oracle_best_quality, replay_schedule, OracleError, Pf, PfI, TinyInstance};
use crate::seeding;
use crate::simcore::{EpisodeMetrics, EpisodeSpec, SimError, Simulator};
use crate::trainer::{greedy_episode, MeanStd, TrainError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("scheduler msdqn needs a checkpoint")]
    MissingCheckpoint,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Episode seed for one repetition; shared by every scheduler and phasing so
/// that comparisons are paired.
pub fn episode_seed(base: u64, devices: usize, rep: usize) -> u64 {
    seeding::derive(base, &[seeding::EPISODE, devices as u64, rep as u64])
}

pub fn run_scheduler(
    kind: SchedulerKind,
    spec: Arc<EpisodeSpec>,
    net: Option<&QNetwork>,
) -> Result<EpisodeMetrics, ExperimentError> {
    Ok(match kind {
        SchedulerKind::Pf => Simulator::new(spec).run_to_end(&mut Pf)?.clone(),
        SchedulerKind::PfI => Simulator::new(spec).run_to_end(&mut PfI)?.clone(),
        SchedulerKind::MsDqn => greedy_episode(net.ok_or(ExperimentError::MissingCheckpoint)?, spec)?,
        SchedulerKind::Oracle => {
            let best = oracle_best_quality(&TinyInstance::from_spec(&spec))?;
            replay_schedule(spec, &best.schedule)?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub scheduler: String,
    pub devices: usize,
    pub rep: usize,
    pub quality: f64,
    pub i_rate: f64,
    pub p_rate: f64,
}

impl CompareRow {
    fn new(scheduler: &str, devices: usize, rep: usize, m: &EpisodeMetrics) -> Self {
        Self {
            scheduler: scheduler.to_string(),
            devices,
            rep,
            quality: m.total_quality(),
            i_rate: m.i_rate(),
            p_rate: m.p_rate(),
        }
    }
}

/// Runs every scheduler on the same episodes for each device count and
/// repetition. Rows come back ordered by (scheduler, devices, rep).
pub fn run_compare(
    scenario: &ScenarioConfig,
    schedulers: &[SchedulerKind],
    devices: &[usize],
    reps: usize,
    base_seed: u64,
    net: Option<&QNetwork>,
) -> Result<Vec<CompareRow>, ExperimentError> {
    if schedulers.contains(&SchedulerKind::MsDqn) && net.is_none() {
        return Err(ExperimentError::MissingCheckpoint);
    }
    let jobs: Vec<(usize, usize)> = devices.iter().flat_map(|&d| (0..reps).map(move |r| (d, r))).collect();
    let per_job = jobs
        .par_iter()
        .map(|&(d, rep)| {
            let cfg = ScenarioConfig { devices: d, ..scenario.clone() };
            let spec = Arc::new(build_episode(&cfg, episode_seed(base_seed, d, rep))?);
            schedulers
                .iter()
                .map(|&k| Ok(CompareRow::new(k.as_str(), d, rep, &run_scheduler(k, spec.clone(), net)?)))
                .collect::<Result<Vec<_>, ExperimentError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(jobs.len() * schedulers.len());
    for s in 0..schedulers.len() {
        rows.extend(per_job.iter().map(|job| job[s].clone()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasingRow {
    pub phasing: String,
    pub devices: usize,
    pub rep: usize,
    pub quality: f64,
    pub i_rate: f64,
    pub p_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasingSummary {
    pub phasing: String,
    pub mean_quality: f64,
    pub std_quality: f64,
    pub mean_i_rate: f64,
    pub mean_p_rate: f64,
    /// `(q - q_sim) / |q_sim|` against the Simultaneous preset.
    pub delta_vs_simultaneous: f64,
    pub delta_vs_random: f64,
}

/// Same episodes under each phasing preset, one scheduler.
pub fn run_phasing_study(
    scenario: &ScenarioConfig,
    scheduler: SchedulerKind,
    reps: usize,
    base_seed: u64,
    net: Option<&QNetwork>,
) -> Result<Vec<PhasingRow>, ExperimentError> {
    let d = scenario.devices;
    let mut rows = Vec::new();
    for phasing in Phasing::ALL {
        let cfg = ScenarioConfig { phasing, ..scenario.clone() };
        let batch = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let spec = Arc::new(build_episode(&cfg, episode_seed(base_seed, d, rep))?);
                let m = run_scheduler(scheduler, spec, net)?;
                Ok(PhasingRow {
                    phasing: phasing.to_string(),
                    devices: d,
                    rep,
                    quality: m.total_quality(),
                    i_rate: m.i_rate(),
                    p_rate: m.p_rate(),
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        rows.extend(batch);
    }
    Ok(rows)
}

fn relative(q: f64, reference: f64) -> f64 {
    (q - reference) / reference.abs()
}

pub fn summarize_phasing(rows: &[PhasingRow]) -> Vec<PhasingSummary> {
    let stats = |p: Phasing| {
        let sel: Vec<&PhasingRow> = rows.iter().filter(|r| r.phasing == p.as_str()).collect();
        let q = MeanStd::of(&sel.iter().map(|r| r.quality).collect::<Vec<_>>());
        let i = MeanStd::of(&sel.iter().map(|r| r.i_rate).collect::<Vec<_>>());
        let pr = MeanStd::of(&sel.iter().map(|r| r.p_rate).collect::<Vec<_>>());
        (q, i.mean, pr.mean)
    };
    let sim = stats(Phasing::Simultaneous).0.mean;
    let rnd = stats(Phasing::Random).0.mean;
    Phasing::ALL
        .iter()
        .map(|&p| {
            let (q, i, pr) = stats(p);
            PhasingSummary {
                phasing: p.to_string(),
                mean_quality: q.mean,
                std_quality: q.std,
                mean_i_rate: i,
                mean_p_rate: pr,
                delta_vs_simultaneous: relative(q.mean, sim),
                delta_vs_random: relative(q.mean, rnd),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    /// One-sided p-value for a positive mean difference.
    pub p_value: f64,
}

/// One-sided paired t-test of `mean(a - b) > 0`. Zero-variance differences
/// give p = 0 for a positive mean and p = 1 otherwise.
pub fn paired_one_sided(a: &[f64], b: &[f64]) -> PairedTest {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let ms = MeanStd::of(&diffs);
    if n < 2 || ms.std == 0.0 {
        let p = if ms.mean > 0.0 { 0.0 } else { 1.0 };
        let t = if ms.mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return PairedTest { n, mean_diff: ms.mean, t, p_value: p };
    }
    let t = ms.mean / (ms.std / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    PairedTest { n, mean_diff: ms.mean, t, p_value: 1.0 - dist.cdf(t) }
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DeviceRow {
    device: usize,
    #[serde(rename = "Q_n")]
    quality: f64,
    i_success: u32,
    i_total: u32,
    p_success: u32,
    p_total: u32,
}

/// Writes `device,Q_n,i_success,i_total,p_success,p_total`.
pub fn write_device_metrics<W: Write>(m: &EpisodeMetrics, out: W) -> Result<(), csv::Error> {
    let rows: Vec<DeviceRow> = (0..m.quality.len())
        .map(|n| DeviceRow {
            device: n,
            quality: m.quality[n],
            i_success: m.i_success[n],
            i_total: m.i_total[n],
            p_success: m.p_success[n],
            p_total: m.p_total[n],
        })
        .collect();
    write_rows(&rows, out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.to_text().as_bytes())
}

pub fn checkpoint_hash(net: &QNetwork) -> Result<String, NetError> {
    let mut buf = Vec::new();
    save_checkpoint(net, &mut buf)?;
    Ok(sha256_hex(&buf))
}

/// Record of one run: everything needed to reproduce its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

pub const MANIFEST_HEADER: &str = "xrsched-manifest 1";

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let mut m = Self { entries: Vec::new() };
        m.push("command", command);
        m.push("code_version", env!("CARGO_PKG_VERSION"));
        m.push("config_sha256", config_hash(cfg));
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Writes `manifest.txt` and the canonical `config.txt` into `dir`.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> std::io::Result<()> {
        std::fs::write(dir.join("manifest.txt"), self.to_text())?;
        std::fs::write(dir.join("config.txt"), cfg.to_text())
    }
}
