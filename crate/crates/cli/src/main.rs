use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use risloc::baselines::{build_fingerprint_db, fingerprint_squared_errors, FingerprintDB, FixedSensingSchedule};
use risloc::bcrlb::{run_bcrlb_localization, BcrlbSettings, CellModel};
use risloc::exec::Execution;
use risloc::experiments::{policy_radio_maps, preset, run_sweep, write_radio_maps, write_sweep_csv, ExperimentSpec, SweepRow};
use risloc::policy::{
    evaluate, test_keys, train_model, Checkpoint, EvalSummary, FeatureMode, LossMode, LrSchedule, PolicyConfig,
    PolicyParams, TrainHyper,
};
use risloc::rng::{episode_rng, Stream};
use risloc::scenario::ScenarioConfig;

#[derive(Parser)]
#[command(name = "risloc", version, about = "RIS-assisted localization experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the active-sensing policy and write a checkpoint.
    Train(TrainCmd),
    /// Evaluate a checkpoint on fresh test episodes.
    Eval(EvalCmd),
    /// Train and evaluate one method along a sweep axis.
    Sweep(SweepCmd),
    /// Radio maps of a policy episode, per stage.
    Radiomap(RadiomapCmd),
    /// Grid-posterior BCRLB localization.
    Bcrlb(BcrlbCmd),
    /// Build an RSS fingerprint database and evaluate wKNN matching.
    Fingerprint(FingerprintCmd),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// siso-1ris, miso-2ris, 3bs or miso-2ris-nlos.
    #[arg(long, default_value = "siso-1ris")]
    preset: String,
    /// TOML file overriding scenario fields; may name its own `preset`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Raw SNR in dB (overrides the scenario).
    #[arg(long)]
    snr: Option<f64>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<(String, ScenarioConfig)> {
        let mut name = self.preset.clone();
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let table: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
                if let Some(p) = table.get("preset").and_then(|v| v.as_str()) {
                    name = p.to_string();
                }
                preset(&name)?.with_overrides(&text)?
            }
            None => preset(&name)?,
        };
        if let Some(v) = self.snr {
            s = s.with_snr(v);
        }
        s.validate()?;
        Ok((name, s))
    }
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 10_000)]
    episodes: usize,
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long, default_value_t = 60)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Global gradient-norm clip; 0 disables.
    #[arg(long, default_value_t = 10.0)]
    clip: f64,
    /// `final` or `weighted` (uniform stage weights).
    #[arg(long, default_value = "final")]
    loss: String,
    /// `pilot` or `rss`.
    #[arg(long, default_value = "pilot")]
    feature: String,
    /// Width multiplier for the network (1.0 = 512/1024).
    #[arg(long, default_value_t = 0.125)]
    width: f64,
    #[arg(long, default_value_t = 500)]
    val_episodes: usize,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl TrainArgs {
    fn feature_mode(&self) -> Result<FeatureMode> {
        Ok(self.feature.parse()?)
    }

    fn policy(&self) -> Result<PolicyConfig> {
        Ok(PolicyConfig::scaled(self.width, self.feature_mode()?))
    }

    fn hyper(&self, stages: usize) -> Result<TrainHyper> {
        let loss = match self.loss.as_str() {
            "final" => LossMode::Final,
            "weighted" => LossMode::uniform(stages),
            other => bail!("unknown loss `{other}` (final or weighted)"),
        };
        let mut h = TrainHyper {
            train_episodes: self.episodes,
            batch_size: self.batch,
            epochs: self.epochs,
            stages,
            loss,
            lr_schedule: LrSchedule::Cosine { final_fraction: 0.05 },
            grad_clip: (self.clip > 0.0).then_some(self.clip),
            val_episodes: self.val_episodes,
            execution: self.execution(),
            ..TrainHyper::default()
        };
        h.adam.lr = self.lr;
        Ok(h)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
struct TrainCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, default_value_t = 6)]
    stages: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "policy.ckpt")]
    out: PathBuf,
    /// Training log CSV.
    #[arg(long, default_value = "train_log.csv")]
    log: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the training stage count.
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    /// Test seed; must differ from the training seed.
    #[arg(long, default_value_t = 1001)]
    seed: u64,
    #[arg(long, default_value = "eval.csv")]
    out: PathBuf,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// active-lstm, bcrlb, fixed-dnn, random-dnn or fingerprint.
    #[arg(long)]
    method: String,
    /// snr, T, ris_size or none.
    #[arg(long, default_value = "none")]
    axis: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    stages: usize,
    #[arg(long, default_value_t = 1000)]
    test_episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    draws: usize,
    #[arg(long, default_value_t = 60)]
    grid_cols: usize,
    #[arg(long, default_value_t = 140)]
    grid_rows: usize,
}

#[derive(Args)]
struct RadiomapCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// Trained policy; without one a policy is trained first.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    stages: usize,
    /// UE position `x,y`; defaults to a random test position.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ue: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "radiomaps")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BcrlbCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 6)]
    stages: usize,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    grid_cols: usize,
    #[arg(long, default_value_t = 140)]
    grid_rows: usize,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    #[arg(long, default_value = "bcrlb.csv")]
    out: PathBuf,
    /// Writes per-stage posterior grids of the first episode here.
    #[arg(long)]
    dump_grids: Option<PathBuf>,
}

#[derive(Args)]
struct FingerprintCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 6)]
    stages: usize,
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    draws: usize,
    /// Database file to write (or read when it exists and `--reuse` is set).
    #[arg(long, default_value = "fingerprints.bin")]
    db: PathBuf,
    #[arg(long)]
    reuse: bool,
    #[arg(long, default_value = "fingerprint.csv")]
    out: PathBuf,
}

fn summary_row(method: &str, e: &EvalSummary) -> SweepRow {
    SweepRow {
        method: method.into(),
        axis: "none".into(),
        value: None,
        episodes: e.episodes,
        mse_m2: e.mse,
        se_m2: e.se,
        rmse_m: e.rmse,
    }
}

fn train(cmd: TrainCmd) -> Result<()> {
    let (_, s) = cmd.scenario.resolve()?;
    let hyper = cmd.train.hyper(cmd.stages)?;
    let mut p = PolicyParams::new(cmd.train.policy()?, &s, cmd.seed)?;
    info!("training {} parameters on `{}`", p.num_parameters(), s.name);
    let log = train_model(&mut p, &s, &hyper, cmd.seed)?;
    log.write_csv(&cmd.log)?;
    let ck = Checkpoint { params: p, scenario_hash: s.hash(), train_seed: cmd.seed, stages: cmd.stages, loss: hyper.loss };
    ck.save(&cmd.out)?;
    println!("final validation MSE {:.4} m²; checkpoint {}", log.final_val_mse(), cmd.out.display());
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.exists() {
        bail!("checkpoint {} not found", path.display());
    }
    Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

fn eval(cmd: EvalCmd) -> Result<()> {
    let (_, s) = cmd.scenario.resolve()?;
    let ck = load_checkpoint(&cmd.checkpoint)?;
    if cmd.seed == ck.train_seed {
        bail!("seed collision: evaluation seed {} is the checkpoint's training seed", cmd.seed);
    }
    if ck.scenario_hash != s.hash() {
        warn!("scenario differs from the one the checkpoint was trained on");
    }
    let stages = cmd.stages.unwrap_or(ck.stages);
    if stages != ck.stages && ck.loss == LossMode::Final {
        warn!("evaluating at T={stages}, trained at T={} with the final-stage loss", ck.stages);
    }
    let exec = if cmd.sequential { Execution::Sequential } else { Execution::Parallel };
    let e = evaluate(&ck.params, &s, &test_keys(cmd.seed, cmd.episodes), stages, 25, exec)?;
    write_sweep_csv(&cmd.out, &[summary_row("active-lstm", &e)])?;
    println!("T={stages}: MSE {:.4} m² (se {:.4}), RMSE {:.3} m", e.mse, e.se, e.rmse);
    Ok(())
}

fn sweep(cmd: SweepCmd) -> Result<()> {
    let (name, s) = cmd.scenario.resolve()?;
    let spec = ExperimentSpec {
        preset: name,
        scenario: s,
        method: cmd.method.parse()?,
        axis: cmd.axis.parse()?,
        values: cmd.values.clone(),
        episodes: cmd.test_episodes,
        seed: cmd.seed,
        output_dir: Some(cmd.out_dir.clone()),
        stages: cmd.stages,
        hyper: cmd.train.hyper(cmd.stages)?,
        policy: cmd.train.policy()?,
        bcrlb: BcrlbSettings { grid_cols: cmd.grid_cols, grid_rows: cmd.grid_rows, execution: cmd.train.execution(), ..Default::default() },
        knn_k: cmd.k,
        fingerprint_draws: cmd.draws,
    };
    for r in run_sweep(&spec)? {
        println!("{} {}={:?}: MSE {:.4} m² (se {:.4})", r.method, r.axis, r.value, r.mse_m2, r.se_m2);
    }
    Ok(())
}

fn radiomap(cmd: RadiomapCmd) -> Result<()> {
    let (_, s) = cmd.scenario.resolve()?;
    let params = match &cmd.checkpoint {
        Some(p) => load_checkpoint(p)?.params,
        None => {
            info!("no checkpoint given; training a policy first");
            let mut p = PolicyParams::new(cmd.train.policy()?, &s, cmd.seed)?;
            train_model(&mut p, &s, &cmd.train.hyper(cmd.stages)?, cmd.seed)?;
            p
        }
    };
    let mut rng = episode_rng(cmd.seed, Stream::Misc, 0);
    let ue = match &cmd.ue {
        Some(v) if v.len() == 2 => risloc::geometry::Position3D::new(v[0], v[1], s.ue_area.z),
        Some(_) => bail!("--ue takes `x,y`"),
        None => s.ue_area.sample(&mut rng),
    };
    let maps = policy_radio_maps(&params, &s, ue, cmd.stages, &mut rng, cmd.train.execution())?;
    let files = write_radio_maps(&cmd.out_dir, &maps, ue)?;
    println!("wrote {} files to {}", files.len(), cmd.out_dir.display());
    Ok(())
}

fn bcrlb(cmd: BcrlbCmd) -> Result<()> {
    let (_, s) = cmd.scenario.resolve()?;
    let settings = BcrlbSettings { grid_cols: cmd.grid_cols, grid_rows: cmd.grid_rows, iterations: cmd.iterations, ..Default::default() };
    let model = CellModel::new(&s, cmd.grid_cols, cmd.grid_rows, settings.execution)?;
    let keys = test_keys(cmd.seed, cmd.episodes);
    let mut errs = Vec::with_capacity(keys.len());
    for (i, k) in keys.iter().enumerate() {
        let (p, ch) = k.draw(&s)?;
        let keep = i == 0 && cmd.dump_grids.is_some();
        let run = run_bcrlb_localization(&model, &ch, cmd.stages, &settings, keep, &mut k.noise_rng())?;
        if let (true, Some(dir)) = (keep, &cmd.dump_grids) {
            std::fs::create_dir_all(dir)?;
            for (t, g) in run.grids.iter().enumerate() {
                let header = format!("rows={} cols={} stage={} ue=({},{})", g.rows, g.cols, t + 1, p.x, p.y);
                g.write_matrix(&dir.join(format!("posterior_stage{}.txt", t + 1)), &header)?;
            }
        }
        let d = run.trajectory.final_estimate - p;
        errs.push(d.x * d.x + d.y * d.y + d.z * d.z);
    }
    let e = EvalSummary::from_errors(&errs)?;
    write_sweep_csv(&cmd.out, &[summary_row("bcrlb", &e)])?;
    println!("MSE {:.4} m² (se {:.4}) over {} episodes", e.mse, e.se, e.episodes);
    Ok(())
}

fn fingerprint(cmd: FingerprintCmd) -> Result<()> {
    let (_, s) = cmd.scenario.resolve()?;
    let db = if cmd.reuse && cmd.db.exists() {
        FingerprintDB::load(&cmd.db)?
    } else {
        let sched = FixedSensingSchedule::random(&s, cmd.stages, cmd.seed);
        let db = build_fingerprint_db(&s, &sched, cmd.draws, cmd.seed, Execution::Parallel)?;
        db.save(&cmd.db)?;
        db
    };
    let errs = fingerprint_squared_errors(&db, &s, &test_keys(cmd.seed, cmd.episodes), cmd.k, Execution::Parallel)?;
    let e = EvalSummary::from_errors(&errs)?;
    write_sweep_csv(&cmd.out, &[summary_row("fingerprint", &e)])?;
    println!("MSE {:.4} m² (se {:.4}) over {} episodes", e.mse, e.se, e.episodes);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Ok(v) = std::env::var("RISLOC_THREADS") {
        let n: usize = v.parse().with_context(|| format!("RISLOC_THREADS={v} is not a number"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match Cli::parse().cmd {
        Command::Train(c) => train(c),
        Command::Eval(c) => eval(c),
        Command::Sweep(c) => sweep(c),
        Command::Radiomap(c) => radiomap(c),
        Command::Bcrlb(c) => bcrlb(c),
        Command::Fingerprint(c) => fingerprint(c),
    }
}
