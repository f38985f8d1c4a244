use std::time::Instant;

use decompose::{grds, sras, DecompositionReport, ExoProjection, GrdsObjective, TransitionDataset};
use envs::{EnvError, Environment, StepOutcome};
use manifold::DescentSettings;
use nalgebra::{DMatrix, DVector};
use regress::{
    endo_reward, fit_linear, fit_mlp_phase1, update_mlp_online, RegressionMode,
    RegressionSchedule, RewardModel,
};
use statcore::CccParams;

use crate::buffer::{collect_rollout, sample_step, RewardTransform, RolloutBuffer, StepRecord};
use crate::error::{Result, RlError};
use crate::eval::evaluate_policy;
use crate::nets::PolicyValueNets;
use crate::ppo::{ppo_update, PpoDiagnostics};
use crate::settings::{Method, PpoSettings, RunSchedule};

/// Stream separators deriving independent seeds from the run seed.
const DISCOVERY_STREAM: u64 = 0xD15C_0FEE;
const REGRESSION_STREAM: u64 = 0x4E67_0CAB;

/// Everything one two-phase training run needs: the reward method, the
/// actor-critic hyperparameters, the step budget, the discovery knobs, the
/// reward-regression schedule, and the run seed. The environment itself is
/// supplied separately as a factory so evaluation can rebuild fresh,
/// identically-configured instances.
///
/// The reward-model refresh cadence in the second phase is
/// `schedule.regression_interval` (the update-step budget of the training
/// loop); `regression.update_interval` only governs standalone use of the
/// regression crate.
#[derive(Debug, Clone)]
pub struct TwoPhaseConfig {
    pub method: Method,
    pub ppo: PpoSettings,
    pub schedule: RunSchedule,
    pub ccc: CccParams,
    pub descent: DescentSettings,
    pub regression: RegressionSchedule,
    pub seed: u64,
}

impl TwoPhaseConfig {
    /// Defaults everywhere except the run shape.
    pub fn new(method: Method, schedule: RunSchedule, seed: u64) -> Self {
        Self {
            method,
            ppo: PpoSettings::default(),
            schedule,
            ccc: CccParams::default(),
            descent: DescentSettings::default(),
            regression: RegressionSchedule::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.schedule.validate()?;
        self.regression.validate().map_err(RlError::Regress)?;
        self.ccc.validate().map_err(|e| RlError::InvalidParam(e.to_string()))?;
        self.descent.validate().map_err(|e| RlError::InvalidParam(e.to_string()))?;
        Ok(())
    }
}

/// One point of the learning curve: emitted after every policy update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    /// 1-based count of policy updates so far.
    pub update_index: usize,
    /// Environment steps consumed when the update finished.
    pub env_steps: usize,
    /// Frozen-policy mean per-step raw reward.
    pub mean_eval_reward: f64,
    /// Seconds since the run started.
    pub wall_time: f64,
}

impl UpdateRecord {
    pub fn tsv_header() -> &'static str {
        "update\tenv_steps\tmean_eval_reward\twall_time_s"
    }

    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.update_index, self.env_steps, self.mean_eval_reward, self.wall_time
        )
    }
}

/// The transitions gathered before discovery ran (observation, physical
/// action values, next observation — row `i` of each matrix is step `i`).
#[derive(Debug, Clone)]
pub struct PhaseOneTrace {
    pub observations: DMatrix<f64>,
    pub action_values: DMatrix<f64>,
    pub next_observations: DMatrix<f64>,
}

/// Artifacts of one full run.
#[derive(Debug, Clone)]
pub struct TwoPhaseOutcome {
    pub method: Method,
    pub curve: Vec<UpdateRecord>,
    /// Present for the discovery methods (even when the scan found nothing).
    pub decomposition: Option<DecompositionReport>,
    /// Present when a subspace of positive rank was found and a reward model
    /// was fit; holds the final model state.
    pub reward_model: Option<RewardModel>,
    pub phase_one: PhaseOneTrace,
    /// Per-step reward streams over the whole run: the untouched environment
    /// rewards, the rewards actually stored for policy updates, and the
    /// ground-truth endogenous channel (diagnostic only).
    pub raw_rewards: DVector<f64>,
    pub stored_rewards: DVector<f64>,
    pub true_endo_rewards: DVector<f64>,
    pub notes: Vec<String>,
    pub total_wall_time: f64,
    /// Seconds spent inside the subspace-discovery call (0 when none ran).
    pub decomposition_wall_time: f64,
}

impl TwoPhaseOutcome {
    /// Rank of the discovered exogenous subspace, if discovery ran.
    pub fn discovered_rank(&self) -> Option<usize> {
        self.decomposition.as_ref().map(|r| r.projection.d_exo())
    }
}

/// Runs Phase 1 (raw-reward collection and policy updates, then subspace
/// discovery, reward-model fitting, and the in-place rewrite of the stored
/// rewards) followed by Phase 2 (collection on the estimated endogenous
/// reward stream with periodic reward-model refreshes). Baseline skips
/// discovery entirely; Oracle trains on the environment's ground-truth
/// endogenous channel. After every policy update the frozen policy is scored
/// in a fresh environment instance with a fixed action-sampling seed.
pub fn run_two_phase<E, F>(make_env: F, config: &TwoPhaseConfig) -> Result<TwoPhaseOutcome>
where
    E: Environment,
    F: FnMut() -> std::result::Result<E, EnvError>,
{
    run_two_phase_streaming(make_env, config, &mut |_| {})
}

/// As [`run_two_phase`], invoking `on_update` with each curve point as soon
/// as it exists so callers can stream progress to disk.
pub fn run_two_phase_streaming<E, F>(
    mut make_env: F,
    config: &TwoPhaseConfig,
    on_update: &mut dyn FnMut(&UpdateRecord),
) -> Result<TwoPhaseOutcome>
where
    E: Environment,
    F: FnMut() -> std::result::Result<E, EnvError>,
{
    config.validate()?;
    let start = Instant::now();
    let mut env = make_env().map_err(RlError::Env)?;
    let d = env.observation_dim();
    let n_action_vars = env.action_cardinalities().len();
    let mut nets = PolicyValueNets::new(
        d,
        &env.action_cardinalities().to_vec(),
        config.ppo.learning_rate,
        config.seed,
    )?;
    let mut obs = env.reset();

    let n = config.schedule.total_steps;
    let l = config.schedule.decomposition_steps;
    let k = config.ppo.rollout_steps;
    let oracle = matches!(config.method, Method::Oracle);

    let mut notes = Vec::new();
    let mut curve = Vec::new();
    let mut raw_all: Vec<f64> = Vec::with_capacity(n);
    let mut stored_all: Vec<f64> = Vec::with_capacity(n);
    let mut endo_all: Vec<f64> = Vec::with_capacity(n);

    let mut p1_obs = DMatrix::zeros(l, d);
    let mut p1_actions = DMatrix::zeros(l, n_action_vars);
    let mut p1_next = DMatrix::zeros(l, d);

    let mut update_index = 0usize;
    let mut env_steps = 0usize;

    // ---- Phase 1: collect L steps, updating the policy every K. ----
    let oracle_transform = |_: &DVector<f64>, out: &StepOutcome| out.reward_parts.r_end;
    while env_steps < l {
        let take = k.min(l - env_steps);
        let transform: Option<RewardTransform> =
            if oracle { Some(&oracle_transform) } else { None };
        let buffer = collect_rollout(&mut nets, &mut env, &mut obs, take, transform)?;
        for i in 0..take {
            let row = env_steps + i;
            p1_obs.row_mut(row).copy_from(&buffer.observations.row(i));
            p1_actions.row_mut(row).copy_from(&buffer.action_values.row(i));
            p1_next.row_mut(row).copy_from(&buffer.next_observations.row(i));
            raw_all.push(buffer.raw_rewards[i]);
            stored_all.push(buffer.rewards[i]);
            endo_all.push(buffer.true_endo_rewards[i]);
        }
        env_steps += take;
        let diag = ppo_update(&mut nets, &buffer, &config.ppo)?;
        record_skips(&mut notes, &diag, update_index + 1);
        update_index += 1;
        let record = evaluate_update(
            &mut make_env,
            &nets,
            config,
            update_index,
            env_steps,
            &start,
        )?;
        on_update(&record);
        curve.push(record);
    }

    // ---- Discovery and the phase-1 reward-model fit. ----
    let mut decomposition = None;
    let mut decomposition_wall_time = 0.0;
    let mut model: Option<RewardModel> = None;
    let mut projection: Option<ExoProjection> = None;
    // Exogenous coordinates and raw targets for every step with a model,
    // retained for repeated-linear refits.
    let mut features: Vec<DVector<f64>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();

    if config.method.runs_discovery() {
        let dataset = TransitionDataset::from_raw(
            p1_obs.clone(),
            p1_actions.clone(),
            DVector::from_row_slice(&raw_all),
            p1_next.clone(),
        )?;
        let dseed = config.seed ^ DISCOVERY_STREAM;
        let report = match config.method {
            Method::Grds => grds(&dataset, &config.ccc, &config.descent, GrdsObjective::Full, dseed)?,
            Method::SimplifiedGrds => {
                grds(&dataset, &config.ccc, &config.descent, GrdsObjective::Simplified, dseed)?
            }
            Method::Sras => sras(&dataset, &config.ccc, &config.descent, dseed)?,
            Method::Baseline | Method::Oracle => unreachable!(),
        };
        decomposition_wall_time = report.wall_time;
        let rank = report.projection.d_exo();
        if rank == 0 {
            notes.push(format!(
                "discovery ({}) returned rank 0; continuing on raw rewards",
                report.algorithm
            ));
        } else {
            let proj = report.projection.clone();
            let x = &p1_obs * proj.w_exo().matrix();
            let y = DVector::from_row_slice(&raw_all);
            let fitted = match config.regression.mode {
                RegressionMode::OnlineMlp => {
                    fit_mlp_phase1(&x, &y, &config.regression, config.seed ^ REGRESSION_STREAM)?
                }
                RegressionMode::SingleLinear | RegressionMode::RepeatedLinear => {
                    fit_linear(&x, &y)?
                }
            };
            // Rewrite the stored phase-1 rewards to endogenous estimates.
            for i in 0..l {
                let f = x.row(i).transpose();
                stored_all[i] = raw_all[i] - fitted.predict(&f);
                features.push(f);
                targets.push(raw_all[i]);
            }
            model = Some(fitted);
            projection = Some(proj);
        }
        decomposition = Some(report);
    }

    // ---- Phase 2: continue on the estimated endogenous stream. ----
    let mut phase2_steps = 0usize;
    let mut pending_x: Vec<DVector<f64>> = Vec::new();
    let mut pending_y: Vec<f64> = Vec::new();
    let mut chunk: Vec<StepRecord> = Vec::new();

    while env_steps < n {
        let mut rec = sample_step(&mut nets, &mut env, &mut obs, None)?;
        if oracle {
            rec.stored_reward = rec.true_endo_reward;
        } else if let (Some(m), Some(p)) = (&model, &projection) {
            rec.stored_reward = endo_reward(m, p, &rec.obs, rec.raw_reward);
        }
        raw_all.push(rec.raw_reward);
        stored_all.push(rec.stored_reward);
        endo_all.push(rec.true_endo_reward);
        if let Some(p) = &projection {
            let f = p.coordinates(&rec.obs);
            pending_x.push(f.clone());
            pending_y.push(rec.raw_reward);
            features.push(f);
            targets.push(rec.raw_reward);
        }
        chunk.push(rec);
        env_steps += 1;
        phase2_steps += 1;

        if model.is_some() && phase2_steps % config.schedule.regression_interval == 0 {
            match config.regression.mode {
                RegressionMode::OnlineMlp => {
                    let x = rows_to_matrix(&pending_x);
                    let y = DVector::from_row_slice(&pending_y);
                    update_mlp_online(model.as_mut().expect("model present"), &x, &y)?;
                    pending_x.clear();
                    pending_y.clear();
                }
                RegressionMode::RepeatedLinear => {
                    if phase2_steps % config.regression.repeated_interval == 0 {
                        let window = config
                            .regression
                            .refit_window
                            .unwrap_or(features.len())
                            .min(features.len());
                        let from = features.len() - window;
                        let x = rows_to_matrix(&features[from..]);
                        let y = DVector::from_row_slice(&targets[from..]);
                        match fit_linear(&x, &y) {
                            Ok(refit) => *model.as_mut().expect("model present") = refit,
                            Err(e) => notes.push(format!(
                                "repeated-linear refit failed at step {env_steps}: {e}"
                            )),
                        }
                    }
                    pending_x.clear();
                    pending_y.clear();
                }
                RegressionMode::SingleLinear => {
                    pending_x.clear();
                    pending_y.clear();
                }
            }
        }

        if chunk.len() == k || env_steps == n {
            let bootstrap = nets.value(&obs);
            let buffer = RolloutBuffer::from_records(std::mem::take(&mut chunk), bootstrap);
            let diag = ppo_update(&mut nets, &buffer, &config.ppo)?;
            record_skips(&mut notes, &diag, update_index + 1);
            update_index += 1;
            let record = evaluate_update(
                &mut make_env,
                &nets,
                config,
                update_index,
                env_steps,
                &start,
            )?;
            on_update(&record);
            curve.push(record);
        }
    }

    Ok(TwoPhaseOutcome {
        method: config.method,
        curve,
        decomposition,
        reward_model: model,
        phase_one: PhaseOneTrace {
            observations: p1_obs,
            action_values: p1_actions,
            next_observations: p1_next,
        },
        raw_rewards: DVector::from_vec(raw_all),
        stored_rewards: DVector::from_vec(stored_all),
        true_endo_rewards: DVector::from_vec(endo_all),
        notes,
        total_wall_time: start.elapsed().as_secs_f64(),
        decomposition_wall_time,
    })
}

fn evaluate_update<E, F>(
    make_env: &mut F,
    nets: &PolicyValueNets,
    config: &TwoPhaseConfig,
    update_index: usize,
    env_steps: usize,
    start: &Instant,
) -> Result<UpdateRecord>
where
    E: Environment,
    F: FnMut() -> std::result::Result<E, EnvError>,
{
    let mut eval_env = make_env().map_err(RlError::Env)?;
    let mean_eval_reward = evaluate_policy(
        nets,
        &mut eval_env,
        config.schedule.eval_steps,
        config.schedule.eval_seed,
    )?;
    Ok(UpdateRecord {
        update_index,
        env_steps,
        mean_eval_reward,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn record_skips(notes: &mut Vec<String>, diag: &PpoDiagnostics, update_index: usize) {
    if diag.minibatches_skipped > 0 {
        notes.push(format!(
            "policy update {update_index}: {} of {} minibatches skipped on non-finite loss",
            diag.minibatches_skipped,
            diag.minibatches_skipped + diag.minibatches_run
        ));
    }
}

fn rows_to_matrix(rows: &[DVector<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, p, |i, j| rows[i][j])
}
