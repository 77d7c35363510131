use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use volmine::formats;
use volmine::manifest::RunManifest;
use volmine::mdp_json;
use volmine::report::{self, Figure, FigureParams};
use volmine::sim::{self, PolicyTable};
use volmine::wire;
use volmine_core::closed_form::{self, Strategy};
use volmine_core::mdp::{evaluate_policy, SolverOptions};
use volmine_core::mempool::{self, advance_pool, FeeBandModel};
use volmine_core::sim_env::{honest_agent, lead_one_selfish_agent, undercut_agent, EnvConfig, FeeSource, RewardSpec};
use volmine_core::simplified::{self, Objective, TimeFeeSchedule};
use volmine_core::werlman::{self, Caps, ThresholdOptions, Variant, WerlmanParams};
use volmine_core::{percentage_increase, MiningConfig};

#[derive(Debug, Parser)]
#[command(
    name = "volmine",
    version,
    about = "Mining-strategy analysis under volatile block rewards"
)]
pub struct Cli {
    /// Worker threads for parameter grids (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory that relative input paths are resolved against.
    #[arg(long, global = true, env = "VOLMINE_DATA_DIR")]
    data_dir: Option<PathBuf>,

    /// Write the result here (with a `.manifest.json` beside it) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact MDP of the whale-transaction environment.
    #[command(subcommand)]
    Werlman(WerlmanCmd),
    /// Closed-form whale-stealing strategies.
    #[command(subcommand, name = "closed-form")]
    ClosedForm(ClosedFormCmd),
    /// Simplified volatile-reward model.
    #[command(subcommand)]
    Simplified(SimplifiedCmd),
    /// Mempool fitting and growth curves.
    #[command(subcommand)]
    Mempool(MempoolCmd),
    /// Agent runs in the mempool-aware simulator.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Environment server for external agents.
    #[command(subcommand)]
    Env(EnvCmd),
    /// Figure-shaped CSV tables.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum VariantArg {
    Original,
    NonPredictable,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Original => Variant::Original,
            VariantArg::NonPredictable => Variant::NonPredictable,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct WerlmanArgs {
    #[arg(long, value_enum, default_value = "original")]
    variant: VariantArg,
    /// Whale fee in units of the block reward.
    #[arg(long = "F")]
    f: f64,
    /// Probability that a whale transaction arrives with a block.
    #[arg(long, default_value_t = 0.001)]
    p: f64,
    #[arg(long = "gamma", alias = "g", default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 8)]
    max_fork_len: usize,
    #[arg(long, default_value_t = 2)]
    max_pool: usize,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

impl WerlmanArgs {
    fn parts(&self, alpha: f64) -> (WerlmanParams, MiningConfig, Caps) {
        let cfg = MiningConfig {
            alpha,
            gamma: self.gamma,
            epsilon: self.epsilon,
            max_fork_len: self.max_fork_len,
            ..MiningConfig::default()
        };
        let caps = Caps {
            max_pool: self.max_pool,
            ..Caps::default()
        };
        (WerlmanParams::new(self.f, self.p, self.variant.into()), cfg, caps)
    }
}

#[derive(Debug, Subcommand)]
enum WerlmanCmd {
    /// Smallest adversary share for which deviating pays.
    Threshold {
        #[command(flatten)]
        args: WerlmanArgs,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Optimal profit and policy value at one share.
    Solve {
        #[command(flatten)]
        args: WerlmanArgs,
        #[arg(long)]
        alpha: f64,
    },
    /// Writes the MDP as JSON.
    Export {
        #[command(flatten)]
        args: WerlmanArgs,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Pi1w,
    Pi1np,
    Pi2np,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Pi1w => Strategy::Pi1Werlman,
            StrategyArg::Pi1np => Strategy::Pi1NonPredictable,
            StrategyArg::Pi2np => Strategy::Pi2NonPredictable,
        }
    }
}

#[derive(Debug, Subcommand)]
enum ClosedFormCmd {
    /// Long-run block counts, reward and profit of a strategy.
    Eval {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        g: f64,
        #[arg(long)]
        p: f64,
        #[arg(long = "F")]
        f: f64,
    },
    /// Security threshold of a strategy.
    Threshold {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        g: f64,
        #[arg(long)]
        p: f64,
        #[arg(long = "F")]
        f: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ObjectiveArg {
    PostDam,
    PreDam,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::PostDam => Objective::PostDam,
            ObjectiveArg::PreDam => Objective::PreDam,
        }
    }
}

/// Time-fee schedule: calibrated to a whale fee (`--F`), from a reward
/// increase ratio (`--ratio`), or explicit (`--fee0`, `--r-fee`).
#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("schedule").required(true).args(["f", "ratio", "fee0"])))]
struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "post-dam")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Protocol block subsidy, in the same unit as fees.
    #[arg(long = "R", default_value_t = 0.0)]
    protocol_reward: f64,
    #[arg(long = "M", default_value_t = 30)]
    m: usize,
    /// Minutes per time step (ratio and explicit schedules).
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    /// Blocks per minute.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 8)]
    max_fork_len: usize,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Whale-equivalent fee spike; pairs with `--p`.
    #[arg(long = "F")]
    f: Option<f64>,
    #[arg(long, default_value_t = 0.001)]
    p: f64,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, requires = "r_fee")]
    fee0: Option<f64>,
    #[arg(long)]
    r_fee: Option<f64>,
}

impl ScheduleArgs {
    fn schedule(&self) -> anyhow::Result<TimeFeeSchedule> {
        let s = if let Some(f) = self.f {
            simplified::calibrate_to_werlman(self.p, self.lambda, self.m, f)?
        } else if let Some(ratio) = self.ratio {
            TimeFeeSchedule::from_ratio(ratio, self.protocol_reward, self.m, self.delta, self.lambda)?
        } else {
            let s = TimeFeeSchedule {
                fee0: self.fee0.unwrap_or_default(),
                r_fee: self.r_fee.unwrap_or_default(),
                m: self.m,
                delta: self.delta,
                lambda_rate: self.lambda,
            };
            s.validate()?;
            s
        };
        Ok(s)
    }

    fn mining(&self, alpha: f64) -> MiningConfig {
        MiningConfig {
            alpha,
            gamma: self.gamma,
            protocol_reward: self.protocol_reward,
            lambda_rate: self.lambda,
            epsilon: self.epsilon,
            max_fork_len: self.max_fork_len,
            ..MiningConfig::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum SimplifiedCmd {
    /// Optimal profit at one share, optionally with the policy table.
    Solve {
        #[command(flatten)]
        args: ScheduleArgs,
        #[arg(long)]
        alpha: f64,
        /// Writes the optimal action per state as CSV.
        #[arg(long)]
        policy_out: Option<PathBuf>,
    },
    /// Security threshold under the chosen objective.
    Threshold {
        #[command(flatten)]
        args: ScheduleArgs,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
enum MempoolCmd {
    /// Time-fee regressions (linear, logarithmic, bivariate) on a block CSV.
    Fit {
        #[arg(long)]
        blocks: PathBuf,
    },
    /// Base fee of a snapshot series.
    BaseFee {
        #[arg(long)]
        snapshots: PathBuf,
    },
    /// Fits one weight-time growth function per fee band.
    FitBands {
        #[arg(long)]
        snapshots: PathBuf,
    },
    /// Cumulative band weights over time as CSV.
    SimulateGrowth {
        /// Fee-band model JSON; defaults to the synthetic five-band day.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Base fee of the synthetic day in sat/vB.
        #[arg(long, default_value_t = 1.0)]
        base_fee: f64,
        #[arg(long, default_value_t = 60.0)]
        minutes: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
}

#[derive(Debug, Args, Serialize)]
struct SimArgs {
    /// Environment config JSON; without it a synthetic mempool day is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    petty_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    base_fee: f64,
    #[arg(long, value_enum, default_value = "pre-dam")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps per batch for standard errors.
    #[arg(long, default_value_t = 10_000)]
    batch: u64,
}

#[derive(Debug, Subcommand)]
enum SimulateCmd {
    /// Always publish and mine on the longest chain.
    Honest {
        #[command(flatten)]
        args: SimArgs,
    },
    /// Rule-table policy JSON, or `lead-one` for the lead-one selfish agent.
    Policy {
        #[command(flatten)]
        args: SimArgs,
        #[arg(long)]
        policy: String,
    },
    /// Undercut every honest tip for a fixed duration.
    Undercut {
        #[command(flatten)]
        args: SimArgs,
        /// Minutes per undercut attempt.
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
    },
}

#[derive(Debug, Subcommand)]
enum EnvCmd {
    /// Serves NDJSON sessions on stdio, or on TCP with `--listen`.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    /// Threshold table of a figure.
    Figure {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(long = "F", value_delimiter = ',')]
        f: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.001)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        g: f64,
        #[arg(long = "M", value_delimiter = ',')]
        m: Option<Vec<usize>>,
        #[arg(long, default_value_t = 8)]
        max_fork_len: usize,
        #[arg(long, default_value_t = 2)]
        max_pool: usize,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

struct Ctx {
    data_dir: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn input(&self, p: &Path) -> PathBuf {
        match &self.data_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn emit(&self, manifest: RunManifest, bytes: Vec<u8>) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => {
                manifest.write_output(path, &bytes)?;
            }
            None => std::io::stdout().write_all(&bytes)?,
        }
        Ok(())
    }

    fn emit_json<T: Serialize>(&self, manifest: RunManifest, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.emit(manifest, bytes)
    }
}

fn threshold_json(t: volmine_core::Threshold) -> Value {
    json!({"threshold": t.alpha(), "result": t})
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let ctx = Ctx {
        data_dir: cli.data_dir,
        out: cli.out,
    };
    match cli.command {
        Command::Werlman(cmd) => werlman_cmd(&ctx, cmd),
        Command::ClosedForm(cmd) => closed_form_cmd(&ctx, cmd),
        Command::Simplified(cmd) => simplified_cmd(&ctx, cmd),
        Command::Mempool(cmd) => mempool_cmd(&ctx, cmd),
        Command::Simulate(cmd) => simulate_cmd(&ctx, cmd),
        Command::Env(EnvCmd::Serve { listen }) => serve(listen),
        Command::Report(cmd) => report_cmd(&ctx, cmd),
    }
}

fn werlman_cmd(ctx: &Ctx, cmd: WerlmanCmd) -> anyhow::Result<()> {
    match cmd {
        WerlmanCmd::Threshold { args, tol } => {
            let (params, cfg, caps) = args.parts(0.25);
            let opts = ThresholdOptions {
                tol,
                ..ThresholdOptions::default()
            };
            let t = werlman::werlman_threshold(&params, &cfg, &caps, &opts)?;
            let m = RunManifest::new("werlman threshold", json!({"args": args, "tol": tol}), vec![]);
            ctx.emit_json(m, &threshold_json(t))
        }
        WerlmanCmd::Solve { args, alpha } => {
            let (params, cfg, caps) = args.parts(alpha);
            let (model, sol) = werlman::solve(&params, &cfg, &caps, &SolverOptions::default())?;
            let honest = params.honest_profit(alpha);
            let out = json!({
                "alpha": alpha,
                "states": model.states.len(),
                "profit": sol.rho,
                "honest_profit": honest,
                "percentage_increase": percentage_increase(sol.rho, honest)?,
            });
            let m = RunManifest::new("werlman solve", json!({"args": args, "alpha": alpha}), vec![]);
            ctx.emit_json(m, &out)
        }
        WerlmanCmd::Export { args, alpha } => {
            let (params, cfg, caps) = args.parts(alpha);
            let model = werlman::build_mdp(&params, &cfg, &caps)?;
            let file = mdp_json::export(&model.mdp, &model.states)?;
            let m = RunManifest::new("werlman export", json!({"args": args, "alpha": alpha}), vec![]);
            ctx.emit_json(m, &file)
        }
    }
}

fn closed_form_cmd(ctx: &Ctx, cmd: ClosedFormCmd) -> anyhow::Result<()> {
    match cmd {
        ClosedFormCmd::Eval {
            strategy,
            alpha,
            g,
            p,
            f,
        } => {
            let ev = closed_form::eval(strategy.into(), alpha, g, p, f)?;
            let config = json!({"strategy": Strategy::from(strategy), "alpha": alpha, "g": g, "p": p, "F": f});
            ctx.emit_json(RunManifest::new("closed-form eval", config, vec![]), &ev)
        }
        ClosedFormCmd::Threshold {
            strategy,
            g,
            p,
            f,
            epsilon,
            tol,
        } => {
            let t = closed_form::strategy_threshold(strategy.into(), g, p, f, epsilon, tol)?;
            let config =
                json!({"strategy": Strategy::from(strategy), "g": g, "p": p, "F": f, "epsilon": epsilon, "tol": tol});
            ctx.emit_json(
                RunManifest::new("closed-form threshold", config, vec![]),
                &threshold_json(t),
            )
        }
    }
}

fn simplified_cmd(ctx: &Ctx, cmd: SimplifiedCmd) -> anyhow::Result<()> {
    match cmd {
        SimplifiedCmd::Solve {
            args,
            alpha,
            policy_out,
        } => {
            let schedule = args.schedule()?;
            let cfg = args.mining(alpha);
            let opts = SolverOptions::default();
            let (model, sol) = match args.objective {
                ObjectiveArg::PostDam => simplified::solve_postdam(&schedule, &cfg, &opts)?,
                ObjectiveArg::PreDam => simplified::solve_predam(&schedule, &cfg, &opts)?,
            };
            let honest = simplified::honest_profit(&schedule, &cfg);
            let rates = evaluate_policy(&model.mdp, &sol.policy)?;
            let out = json!({
                "alpha": alpha,
                "schedule": schedule,
                "states": model.states.len(),
                "profit": sol.rho,
                "policy_profit": rates.ratio(),
                "honest_profit": honest,
                "percentage_increase": percentage_increase(sol.rho, honest)?,
            });
            if let Some(path) = &policy_out {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["l_a", "l_h", "t_total", "t_last", "fork", "action"])?;
                for (s, a) in model.policy_table(&sol.policy) {
                    w.write_record([
                        s.l_a.to_string(),
                        s.l_h.to_string(),
                        s.t_total.to_string(),
                        s.t_last.to_string(),
                        s.fork.to_string(),
                        a.to_string(),
                    ])?;
                }
                let m = RunManifest::new(
                    "simplified solve --policy-out",
                    json!({"args": args, "alpha": alpha}),
                    vec![],
                );
                m.write_output(path, &w.into_inner()?)?;
            }
            let m = RunManifest::new("simplified solve", json!({"args": args, "alpha": alpha}), vec![]);
            ctx.emit_json(m, &out)
        }
        SimplifiedCmd::Threshold { args, tol } => {
            let schedule = args.schedule()?;
            let opts = ThresholdOptions {
                tol,
                ..ThresholdOptions::default()
            };
            let t = simplified::threshold(&schedule, &args.mining(0.25), args.objective.into(), &opts)?;
            let m = RunManifest::new("simplified threshold", json!({"args": args, "tol": tol}), vec![]);
            ctx.emit_json(m, &threshold_json(t))
        }
    }
}

fn mempool_cmd(ctx: &Ctx, cmd: MempoolCmd) -> anyhow::Result<()> {
    match cmd {
        MempoolCmd::Fit { blocks } => {
            let path = ctx.input(&blocks);
            let records = formats::load_blocks(&path)?;
            let linear = mempool::fit_linear(&records)?;
            let out = json!({
                "blocks": records.len(),
                "linear": linear,
                "log": mempool::fit_log(&records).ok(),
                "bivariate": mempool::fit_bivariate(&records).ok(),
            });
            let mut m = RunManifest::new("mempool fit", json!({"blocks": path}), vec![]);
            m.add_input(&path)?;
            ctx.emit_json(m, &out)
        }
        MempoolCmd::BaseFee { snapshots } => {
            let path = ctx.input(&snapshots);
            let snaps = formats::load_snapshots(&path)?;
            anyhow::ensure!(!snaps.is_empty(), "{} holds no snapshots", path.display());
            let out = json!({"snapshots": snaps.len(), "base_fee": mempool::extract_base_fee(&snaps)});
            let mut m = RunManifest::new("mempool base-fee", json!({"snapshots": path}), vec![]);
            m.add_input(&path)?;
            ctx.emit_json(m, &out)
        }
        MempoolCmd::FitBands { snapshots } => {
            let path = ctx.input(&snapshots);
            let snaps = formats::load_snapshots(&path)?;
            let (bands, series) = formats::band_series(&snaps);
            let model = mempool::fit_band_model(bands, &series)?;
            let mut m = RunManifest::new("mempool fit-bands", json!({"snapshots": path}), vec![]);
            m.add_input(&path)?;
            ctx.emit_json(m, &model)
        }
        MempoolCmd::SimulateGrowth {
            model,
            base_fee,
            minutes,
            step,
        } => {
            anyhow::ensure!(
                step > 0.0 && minutes >= 0.0,
                "--step must be positive and --minutes non-negative"
            );
            let mut m = RunManifest::new(
                "mempool simulate-growth",
                json!({"model": model, "base_fee": base_fee, "minutes": minutes, "step": step}),
                vec![],
            );
            let fb = match &model {
                Some(p) => {
                    let path = ctx.input(p);
                    m.add_input(&path)?;
                    let fb = formats::load_model(&path)?;
                    fb.validate(minutes)?;
                    fb
                }
                None => FeeBandModel::synthetic(base_fee)?,
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let header: Vec<String> = std::iter::once("minutes".to_string())
                .chain(fb.bands.iter().map(|b| format!("band_{b}")))
                .collect();
            w.write_record(&header)?;
            let mut pool = fb.initial_pool();
            let n = (minutes / step).floor() as usize;
            for i in 0..=n {
                let t = i as f64 * step;
                if i > 0 {
                    pool = advance_pool(&pool, &fb, t - pool.clock);
                }
                w.write_record(std::iter::once(t.to_string()).chain(pool.weights.iter().map(|x| x.to_string())))?;
            }
            ctx.emit(m, w.into_inner()?)
        }
    }
}

fn env_config(ctx: &Ctx, args: &SimArgs, m: &mut RunManifest) -> anyhow::Result<EnvConfig> {
    if let Some(p) = &args.config {
        let path = ctx.input(p);
        m.add_input(&path)?;
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: EnvConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        return Ok(cfg);
    }
    let mining = MiningConfig {
        alpha: args.alpha,
        gamma: args.gamma,
        petty_ratio: args.petty_ratio,
        ..MiningConfig::default()
    };
    let reward = match args.objective {
        ObjectiveArg::PreDam => RewardSpec::pre_dam(1.0, 0.0),
        ObjectiveArg::PostDam => RewardSpec::post_dam(args.rho),
    };
    let cfg = EnvConfig::new(
        mining,
        FeeSource::Mempool {
            model: FeeBandModel::synthetic(args.base_fee)?,
        },
        reward,
    );
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_cmd(ctx: &Ctx, cmd: SimulateCmd) -> anyhow::Result<()> {
    let (name, args, extra) = match &cmd {
        SimulateCmd::Honest { args } => ("honest", args, Value::Null),
        SimulateCmd::Policy { args, policy } => ("policy", args, json!({"policy": policy})),
        SimulateCmd::Undercut { args, duration } => ("undercut", args, json!({"duration": duration})),
    };
    let mut m = RunManifest::new(
        format!("simulate {name}"),
        json!({"args": args, "extra": extra}),
        vec![args.seed],
    );
    let cfg = env_config(ctx, args, &mut m)?;
    let report = match &cmd {
        SimulateCmd::Honest { .. } => sim::run(&cfg, args.seed, args.steps, args.batch, "honest", honest_agent)?,
        SimulateCmd::Policy { policy, .. } if policy == "lead-one" => sim::run(
            &cfg,
            args.seed,
            args.steps,
            args.batch,
            "lead-one",
            lead_one_selfish_agent,
        )?,
        SimulateCmd::Policy { policy, .. } => {
            let path = ctx.input(Path::new(policy));
            m.add_input(&path)?;
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let table: PolicyTable =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            sim::run(&cfg, args.seed, args.steps, args.batch, policy, |s| table.action(s))?
        }
        SimulateCmd::Undercut { duration, .. } => {
            if !(*duration >= 0.0) {
                bail!("--duration must be non-negative, got {duration}");
            }
            let d = *duration;
            sim::run(&cfg, args.seed, args.steps, args.batch, "undercut", |s| {
                undercut_agent(s, d)
            })?
        }
    };
    ctx.emit_json(m, &report)
}

fn serve(listen: Option<String>) -> anyhow::Result<()> {
    match listen {
        None => {
            let stdin = std::io::stdin().lock();
            let stdout = std::io::stdout().lock();
            wire::serve_stream(stdin, stdout)?;
        }
        Some(addr) => {
            let listener = std::net::TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            wire::serve_tcp(listener, None)?;
        }
    }
    Ok(())
}

fn report_cmd(ctx: &Ctx, cmd: ReportCmd) -> anyhow::Result<()> {
    let ReportCmd::Figure {
        figure,
        f,
        p,
        g,
        m,
        max_fork_len,
        max_pool,
        epsilon,
        tol,
    } = cmd;
    let defaults = FigureParams::default();
    let params = FigureParams {
        f_values: f.unwrap_or(defaults.f_values),
        p,
        g,
        epsilon,
        tol,
        max_fork_len,
        max_pool,
        m_values: m.unwrap_or(defaults.m_values),
        lambda: defaults.lambda,
    };
    let table = report::figure_table(figure, &params)?;
    let manifest = RunManifest::new(
        format!(
            "report figure {}",
            serde_json::to_value(figure)?.as_str().unwrap_or_default()
        ),
        serde_json::to_value(&params)?,
        vec![],
    );
    ctx.emit(manifest, table.to_csv()?)
}
