use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use xrsched::config::{ExperimentConfig, SchedulerKind};
use xrsched::experiments::{
    checkpoint_hash, episode_seed, paired_one_sided, run_compare, run_phasing_study, run_scheduler, summarize_phasing,
    write_device_metrics, write_rows, CompareRow, Manifest,
};
use xrsched::neuralnet::{load_checkpoint, save_checkpoint, QNetwork};
use xrsched::rlenv::{run_policy, write_step_trace, EnvAction, Environment, XrEnv};
use xrsched::scenario::{build_episode, ScenarioConfig};
use xrsched::schedulers::{Pf, PfI};
use xrsched::simcore::EpisodeMetrics;
use xrsched::traffic::write_frame_trace;
use xrsched::trainer::{evaluate, train, write_learning_curve, MeanStd};

#[derive(Parser)]
#[command(name = "xrsched", version, about = "Frame-priority XR downlink scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode with one scheduler and write per-device metrics and traces.
    Simulate(Common),
    /// Train an MS-DQN agent and write its checkpoint and learning curve.
    Train(Common),
    /// Evaluate a trained checkpoint greedily over several episodes.
    Evaluate(Common),
    /// Run several schedulers on identical episodes.
    Compare(Common),
    /// Compare Random, Simultaneous and Equal arrival phasing.
    Phasing(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `section.key = value` config file (defaults to the full preset).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheduler(s): pf, pfi, msdqn, oracle. Repeat or comma-separate for `compare`.
    #[arg(long, value_delimiter = ',')]
    scheduler: Vec<SchedulerKind>,
    /// Device count(s). Comma-separate for `compare`.
    #[arg(long, value_delimiter = ',')]
    devices: Vec<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint to write (`train`) or read (other commands).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

struct Run {
    cfg: ExperimentConfig,
    seed: u64,
    reps: usize,
    out: PathBuf,
}

impl Common {
    fn setup(&self) -> Result<Run> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(&d) = self.devices.first() {
            cfg.scenario.devices = d;
            cfg.eval.devices = self.devices.clone();
        }
        if let Some(r) = self.reps {
            cfg.eval.reps = r;
        }
        if let Some(s) = self.seed {
            cfg.eval.seed = s;
        }
        if let Some(&k) = self.scheduler.first() {
            cfg.scheduler = k;
        }
        cfg.validate()?;
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(Run { seed: cfg.eval.seed, reps: cfg.eval.reps, cfg, out: self.out_dir.clone() })
    }

    fn load_net(&self) -> Result<Option<QNetwork>> {
        match &self.checkpoint {
            None => Ok(None),
            Some(p) => {
                let f = File::open(p).with_context(|| format!("opening checkpoint {}", p.display()))?;
                Ok(Some(load_checkpoint(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))?))
            }
        }
    }

    fn require_net(&self) -> Result<QNetwork> {
        match self.load_net()? {
            Some(n) => Ok(n),
            None => bail!("this command needs --checkpoint"),
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let p = dir.join(name);
    Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
}

fn manifest(command: &str, run: &Run, net: Option<&QNetwork>) -> Result<Manifest> {
    let mut m = Manifest::new(command, &run.cfg);
    m.push("seed", run.seed);
    m.push("reps", run.reps);
    if let Some(n) = net {
        m.push("checkpoint_sha256", checkpoint_hash(n)?);
    }
    Ok(m)
}

fn print_metrics(name: &str, m: &EpisodeMetrics) {
    println!("{:<10} {:>10} {:>8} {:>8}", "scheduler", "quality", "I rate", "P rate");
    println!("{:<10} {:>10.3} {:>8.4} {:>8.4}", name, m.total_quality(), m.i_rate(), m.p_rate());
}

fn simulate(args: &Common) -> Result<()> {
    let run = args.setup()?;
    let kind = run.cfg.scheduler;
    let net = args.load_net()?;
    let sc = &run.cfg.scenario;
    let episode = episode_seed(run.seed, sc.devices, 0);
    let spec = Arc::new(build_episode(sc, episode)?);
    write_frame_trace(&spec.frames, create(&run.out, "frames.csv")?)?;

    let metrics = match kind {
        SchedulerKind::Oracle => run_scheduler(kind, spec, None)?,
        _ => {
            let mut env = XrEnv::new(spec).with_trace();
            match kind {
                SchedulerKind::Pf => drop(run_policy(&mut env, &mut Pf)?),
                SchedulerKind::PfI => drop(run_policy(&mut env, &mut PfI)?),
                _ => {
                    let Some(net) = net.as_ref() else { bail!("scheduler msdqn needs --checkpoint") };
                    let mut state = env.state();
                    while !env.is_done() {
                        let a = if state.is_empty() {
                            EnvAction::Default
                        } else {
                            EnvAction::Row(net.forward_state(&state)?.argmax())
                        };
                        state = env.step(a)?.next_state;
                    }
                }
            }
            write_step_trace(env.trace().unwrap_or_default(), create(&run.out, "steps.csv")?)?;
            env.metrics().clone()
        }
    };
    write_device_metrics(&metrics, create(&run.out, "metrics.csv")?)?;
    let mut m = manifest("simulate", &run, net.as_ref())?;
    m.push("scheduler", kind).push("devices", sc.devices).push("episode_seed", episode);
    m.write(&run.out, &run.cfg)?;
    print_metrics(kind.as_str(), &metrics);
    Ok(())
}

fn train_cmd(args: &Common) -> Result<()> {
    let run = args.setup()?;
    let out = train(&run.cfg.train, &run.cfg.scenario, run.seed, run.cfg.eval.test_seed)?;
    write_learning_curve(&out.curve, create(&run.out, "learning_curve.csv")?)?;
    let ckpt = args.checkpoint.clone().unwrap_or_else(|| run.out.join("msdqn.ckpt"));
    save_checkpoint(
        &out.best_net,
        BufWriter::new(File::create(&ckpt).with_context(|| format!("creating {}", ckpt.display()))?),
    )?;
    let mut m = manifest("train", &run, Some(&out.best_net))?;
    m.push("test_seed", run.cfg.eval.test_seed).push("best_episode", out.best_episode);
    m.write(&run.out, &run.cfg)?;
    println!("{:>7} {:>8} {:>12} {:>12} {:>12}", "episode", "epsilon", "train", "test", "loss");
    for r in &out.curve {
        println!(
            "{:>7} {:>8.4} {:>12.3} {:>12.3} {:>12.3e}",
            r.episode, r.epsilon, r.train_return, r.test_return, r.loss_mean
        );
    }
    println!("best episode {} written to {}", out.best_episode, ckpt.display());
    Ok(())
}

fn evaluate_cmd(args: &Common) -> Result<()> {
    let run = args.setup()?;
    let net = args.require_net()?;
    let sc = &run.cfg.scenario;
    let seeds: Vec<u64> = (0..run.reps).map(|r| episode_seed(run.seed, sc.devices, r)).collect();
    let summary = evaluate(&net, sc, &seeds)?;
    let rows: Vec<CompareRow> = summary
        .runs
        .iter()
        .enumerate()
        .map(|(rep, m)| CompareRow {
            scheduler: "msdqn".into(),
            devices: sc.devices,
            rep,
            quality: m.total_quality(),
            i_rate: m.i_rate(),
            p_rate: m.p_rate(),
        })
        .collect();
    write_rows(&rows, create(&run.out, "evaluate.csv")?)?;
    manifest("evaluate", &run, Some(&net))?.push("devices", sc.devices).write(&run.out, &run.cfg)?;
    println!("{:<10} {:>8} {:>20} {:>18} {:>18}", "scheduler", "devices", "quality", "I rate", "P rate");
    println!(
        "{:<10} {:>8} {:>10.3} ± {:<7.3} {:>8.4} ± {:<7.4} {:>8.4} ± {:<7.4}",
        "msdqn",
        sc.devices,
        summary.quality.mean,
        summary.quality.std,
        summary.i_rate.mean,
        summary.i_rate.std,
        summary.p_rate.mean,
        summary.p_rate.std
    );
    Ok(())
}

fn compare_cmd(args: &Common) -> Result<()> {
    let run = args.setup()?;
    let net = args.load_net()?;
    let mut kinds = args.scheduler.clone();
    if kinds.is_empty() {
        kinds = vec![SchedulerKind::Pf, SchedulerKind::PfI];
        if net.is_some() {
            kinds.push(SchedulerKind::MsDqn);
        }
    }
    let devices = run.cfg.eval.devices.clone();
    let rows = run_compare(&run.cfg.scenario, &kinds, &devices, run.reps, run.seed, net.as_ref())?;
    write_rows(&rows, create(&run.out, "compare.csv")?)?;
    let names: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
    let dev: Vec<String> = devices.iter().map(|d| d.to_string()).collect();
    let mut m = manifest("compare", &run, net.as_ref())?;
    m.push("schedulers", names.join(",")).push("devices", dev.join(","));
    m.write(&run.out, &run.cfg)?;

    println!(
        "{:<8} {:>8} {:>20} {:>9} {:>9} {:>10} {:>9}",
        "sched", "devices", "quality", "I rate", "P rate", "vs pf", "p(>pf)"
    );
    for &d in &devices {
        let pick = |k: SchedulerKind| -> Vec<&CompareRow> {
            rows.iter().filter(|r| r.devices == d && r.scheduler == k.as_str()).collect()
        };
        let pf_q: Vec<f64> = pick(SchedulerKind::Pf).iter().map(|r| r.quality).collect();
        for &k in &kinds {
            let sel = pick(k);
            let q: Vec<f64> = sel.iter().map(|r| r.quality).collect();
            let qs = MeanStd::of(&q);
            let i = MeanStd::of(&sel.iter().map(|r| r.i_rate).collect::<Vec<_>>());
            let p = MeanStd::of(&sel.iter().map(|r| r.p_rate).collect::<Vec<_>>());
            let (gain, pval) = if pf_q.is_empty() || k == SchedulerKind::Pf {
                ("-".to_string(), "-".to_string())
            } else {
                let base = MeanStd::of(&pf_q).mean;
                let t = paired_one_sided(&q, &pf_q);
                (format!("{:+.1}%", 100.0 * (qs.mean - base) / base.abs()), format!("{:.4}", t.p_value))
            };
            println!(
                "{:<8} {:>8} {:>10.3} ± {:<7.3} {:>9.4} {:>9.4} {:>10} {:>9}",
                k.as_str(),
                d,
                qs.mean,
                qs.std,
                i.mean,
                p.mean,
                gain,
                pval
            );
        }
    }
    Ok(())
}

fn phasing_cmd(args: &Common) -> Result<()> {
    let run = args.setup()?;
    let net = args.load_net()?;
    let kind = run.cfg.scheduler;
    let sc: &ScenarioConfig = &run.cfg.scenario;
    let rows = run_phasing_study(sc, kind, run.reps, run.seed, net.as_ref())?;
    write_rows(&rows, create(&run.out, "phasing.csv")?)?;
    let summary = summarize_phasing(&rows);
    write_rows(&summary, create(&run.out, "phasing_summary.csv")?)?;
    let mut m = manifest("phasing", &run, net.as_ref())?;
    m.push("scheduler", kind).push("devices", sc.devices);
    m.write(&run.out, &run.cfg)?;
    println!(
        "{:<13} {:>20} {:>9} {:>9} {:>10} {:>10}",
        "phasing", "quality", "I rate", "P rate", "vs simul.", "vs random"
    );
    for s in &summary {
        println!(
            "{:<13} {:>10.3} ± {:<7.3} {:>9.4} {:>9.4} {:>+9.1}% {:>+9.1}%",
            s.phasing,
            s.mean_quality,
            s.std_quality,
            s.mean_i_rate,
            s.mean_p_rate,
            100.0 * s.delta_vs_simultaneous,
            100.0 * s.delta_vs_random
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::Compare(a) => compare_cmd(&a),
        Command::Phasing(a) => phasing_cmd(&a),
    }
}
