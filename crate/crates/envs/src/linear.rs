use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EnvError, Result};
use crate::{Environment, RewardParts, StepOutcome};

/// Exogenous-reward function of the hidden exo state `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    /// `r_exo = −3·avg(x)`, `r_end = exp(−|avg(e) − 1|)`.
    Linear,
    /// Clipped cubic polynomial of `avg(x)`, `avg(x²)`, `avg(x³)`.
    R1,
    /// Single-mode bump: `−3·exp(−|avg(x)|^1.5)`.
    R2,
    /// Two-mode bump pair centered at `avg(x) = ∓1.5`.
    R3,
    /// Three-mode mixture centered at `avg(x) ∈ {−1, 0, 1.5}`.
    R4,
    /// Anti-correlated pair `r_end = exp(−|avg(e) − 2.5|/3)`,
    /// `r_exo = exp(−|avg(x) + 2.5|/3)`; also switches the dynamics to the
    /// positively-coupled form that induces the anti-correlation (requires
    /// `n_end == n_exo`).
    Anticorrelated,
}

/// State-transition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    /// `x' = M_exo·x + ε`, `e' = M_end·[e;x] + M_a·a + ε`.
    Linear,
    /// Cubic exo polynomial, clipped to ±4 before noise; linear endo part.
    M1,
    /// As `M1` plus a quadratic action term `N_a·a²` (single action variable).
    M2,
    /// Elementwise `clip(5·sign(x)·√|x| − sin(x), −2, 2)` exo dynamics and a
    /// `sin(3a)` action drive (single action variable). Callers should raise
    /// the noise levels to 0.4/0.3 to match this family's intended scale.
    M3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMatrixKind {
    /// All entries nonzero: uniform [0,1) rows normalized to `row_sum`.
    Dense,
    /// Only the first `l` endo rows are controlled (generated as dense rows);
    /// the remaining rows are zero.
    PartialDense,
    /// Row `i` is controlled by action variable `i` alone, with a single
    /// entry drawn uniform [0.5, 1.5).
    PartialDisjoint,
}

#[derive(Debug, Clone)]
pub struct LinearMdpConfig {
    /// Hidden exogenous dimension `n`.
    pub n_exo: usize,
    /// Hidden endogenous dimension `m`.
    pub n_end: usize,
    /// Number of action variables `l`; each takes values from `action_grid`.
    pub n_action_vars: usize,
    /// Discrete values available to every action variable.
    pub action_grid: Vec<f64>,
    pub exo_noise_std: f64,
    pub end_noise_std: f64,
    /// Every generated transition-matrix row is normalized to this sum.
    pub row_sum: f64,
    pub action_matrix_kind: ActionMatrixKind,
    /// Fraction of nonzero entries in the endo transition matrix (1.0 = dense).
    pub end_matrix_sparsity: f64,
    pub reward_kind: RewardKind,
    pub dynamics_kind: DynamicsKind,
    pub seed: u64,
}

/// Ten evenly spaced action values spanning [−1, 1].
pub(crate) fn default_action_grid() -> Vec<f64> {
    (0..10).map(|k| -1.0 + 2.0 * k as f64 / 9.0).collect()
}

impl LinearMdpConfig {
    /// Baseline configuration: linear dynamics and rewards, single action
    /// variable over the default grid, noise levels 0.3/0.2.
    pub fn new(n_end: usize, n_exo: usize, seed: u64) -> Self {
        Self {
            n_exo,
            n_end,
            n_action_vars: 1,
            action_grid: default_action_grid(),
            exo_noise_std: 0.3,
            end_noise_std: 0.2,
            row_sum: 0.99,
            action_matrix_kind: ActionMatrixKind::Dense,
            end_matrix_sparsity: 1.0,
            reward_kind: RewardKind::Linear,
            dynamics_kind: DynamicsKind::Linear,
            seed,
        }
    }

    /// The anti-correlated family: both hidden blocks are `n`-dimensional,
    /// with noise levels 0.4/0.2 and the coupled dynamics.
    pub fn anticorrelated(n: usize, seed: u64) -> Self {
        Self {
            exo_noise_std: 0.4,
            end_noise_std: 0.2,
            reward_kind: RewardKind::Anticorrelated,
            ..Self::new(n, n, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exo == 0 || self.n_end == 0 || self.n_action_vars == 0 {
            return Err(EnvError::Config("dimensions must be positive".into()));
        }
        let mut distinct = self.action_grid.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 || self.action_grid.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::Config(
                "action_grid needs at least 2 distinct finite values".into(),
            ));
        }
        if !(self.row_sum > 0.0 && self.row_sum < 1.0) {
            return Err(EnvError::Config(format!(
                "row_sum must lie in (0,1), got {}",
                self.row_sum
            )));
        }
        if self.exo_noise_std < 0.0 || self.end_noise_std < 0.0 {
            return Err(EnvError::Config("noise levels must be non-negative".into()));
        }
        if !(self.end_matrix_sparsity > 0.0 && self.end_matrix_sparsity <= 1.0) {
            return Err(EnvError::Config(format!(
                "end_matrix_sparsity must lie in (0,1], got {}",
                self.end_matrix_sparsity
            )));
        }
        if matches!(
            self.action_matrix_kind,
            ActionMatrixKind::PartialDense | ActionMatrixKind::PartialDisjoint
        ) && self.n_action_vars > self.n_end
        {
            return Err(EnvError::Config(format!(
                "partial action matrices need l ≤ m, got l={} m={}",
                self.n_action_vars, self.n_end
            )));
        }
        if self.reward_kind == RewardKind::Anticorrelated && self.n_end != self.n_exo {
            return Err(EnvError::Config(
                "the anti-correlated family requires n_end == n_exo".into(),
            ));
        }
        if matches!(self.dynamics_kind, DynamicsKind::M2 | DynamicsKind::M3)
            && self.n_action_vars != 1
        {
            return Err(EnvError::Config(
                "M2/M3 dynamics are defined for a single action variable".into(),
            ));
        }
        Ok(())
    }
}

/// A linear-mixture MDP instance: hidden exogenous chain `x`, hidden
/// endogenous chain `e`, observed `s = M·[e; x]`.
pub struct LinearMdp {
    config: LinearMdpConfig,
    m_exo: DMatrix<f64>,
    m_end: DMatrix<f64>,
    m_a: DMatrix<f64>,
    n_exo_mat: Option<DMatrix<f64>>,
    k_exo_mat: Option<DMatrix<f64>>,
    n_a: Option<DVector<f64>>,
    mix: DMatrix<f64>,
    e: DVector<f64>,
    x: DVector<f64>,
    rng: ChaCha8Rng,
    cardinalities: Vec<usize>,
}

/// Stream separator so trajectory noise is independent of the number of
/// draws spent on matrix generation.
const TRAJECTORY_STREAM: u64 = 0xA5A5_5A5A_0F0F_F0F0;
const MIX_STREAM: u64 = 0xD1B5_4A32_D192_ED03;
const MAX_MIX_ATTEMPTS: u64 = 64;
const MAX_CONDITION: f64 = 1e6;

/// Rows of standard-Gaussian magnitudes normalized to `row_sum`. Keeping the
/// entries non-negative makes every generated transition matrix substochastic
/// (up to the 0.99 scale), which pins the spectral radius at `row_sum` — the
/// stability the normalization is for. Signed rows normalized the same way
/// are almost surely explosive beyond ~10 dimensions.
fn gaussian_row_normalized(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    row_sum: f64,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        loop {
            for j in 0..cols {
                let v: f64 = StandardNormal.sample(rng);
                m[(i, j)] = v.abs();
            }
            let s: f64 = m.row(i).iter().sum();
            // Degenerate row sums would explode under normalization; redraw.
            if s >= 0.1 {
                let scale = row_sum / s;
                for j in 0..cols {
                    m[(i, j)] *= scale;
                }
                break;
            }
        }
    }
    m
}

/// Endo transition with a fixed fraction of nonzero entries per row (at
/// least one), positions drawn without replacement.
fn sparse_row_normalized(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    row_sum: f64,
    sparsity: f64,
) -> DMatrix<f64> {
    let nonzeros_per_row = ((sparsity * cols as f64).round() as usize).clamp(1, cols);
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        loop {
            let mut positions: Vec<usize> = (0..cols).collect();
            for k in 0..nonzeros_per_row {
                let pick = k + rng.random_range(0..(cols - k));
                positions.swap(k, pick);
            }
            let mut s = 0.0;
            for &j in &positions[..nonzeros_per_row] {
                let v: f64 = StandardNormal.sample(rng);
                m[(i, j)] = v.abs();
                s += v.abs();
            }
            if s >= 0.1 {
                let scale = row_sum / s;
                for &j in &positions[..nonzeros_per_row] {
                    m[(i, j)] *= scale;
                }
                break;
            }
            for &j in &positions[..nonzeros_per_row] {
                m[(i, j)] = 0.0;
            }
        }
    }
    m
}

fn uniform_row_normalized(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    row_sum: f64,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        loop {
            let mut s = 0.0;
            for j in 0..cols {
                let v: f64 = rng.random::<f64>();
                m[(i, j)] = v;
                s += v;
            }
            if s >= 0.1 || cols == 1 && s > 0.0 {
                let scale = row_sum / s;
                for j in 0..cols {
                    m[(i, j)] *= scale;
                }
                break;
            }
        }
    }
    m
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl LinearMdp {
    pub fn new(config: LinearMdpConfig) -> Result<Self> {
        config.validate()?;
        let (m, n, l) = (config.n_end, config.n_exo, config.n_action_vars);
        let mut matrix_rng = ChaCha8Rng::seed_from_u64(config.seed);

        let m_exo = gaussian_row_normalized(&mut matrix_rng, n, n, config.row_sum);

        // The anti-correlated family couples square n×n blocks; every other
        // family feeds the endo chain from the full hidden vector [e; x].
        let m_end = if config.reward_kind == RewardKind::Anticorrelated {
            gaussian_row_normalized(&mut matrix_rng, n, n, config.row_sum)
        } else if config.end_matrix_sparsity < 1.0 {
            sparse_row_normalized(&mut matrix_rng, m, m + n, config.row_sum, config.end_matrix_sparsity)
        } else {
            gaussian_row_normalized(&mut matrix_rng, m, m + n, config.row_sum)
        };

        // Single action variable: the canonical all-ones drive. Multi-action:
        // per the configured structure.
        let m_a = if l == 1 {
            DMatrix::from_element(m, 1, 1.0)
        } else {
            match config.action_matrix_kind {
                ActionMatrixKind::Dense => {
                    uniform_row_normalized(&mut matrix_rng, m, l, config.row_sum)
                }
                ActionMatrixKind::PartialDense => {
                    let controlled =
                        uniform_row_normalized(&mut matrix_rng, l, l, config.row_sum);
                    let mut full = DMatrix::zeros(m, l);
                    full.view_mut((0, 0), (l, l)).copy_from(&controlled);
                    full
                }
                ActionMatrixKind::PartialDisjoint => {
                    let mut full = DMatrix::zeros(m, l);
                    for i in 0..l {
                        full[(i, i)] = 0.5 + rng_uniform(&mut matrix_rng);
                    }
                    full
                }
            }
        };

        let (n_exo_mat, k_exo_mat) = if matches!(config.dynamics_kind, DynamicsKind::M1 | DynamicsKind::M2)
        {
            (
                Some(gaussian_row_normalized(&mut matrix_rng, n, n, config.row_sum)),
                Some(gaussian_row_normalized(&mut matrix_rng, n, n, config.row_sum)),
            )
        } else {
            (None, None)
        };
        let n_a = if config.dynamics_kind == DynamicsKind::M2 {
            Some(DVector::from_fn(m, |_, _| 0.5 + rng_uniform(&mut matrix_rng)))
        } else {
            None
        };

        // The mixing matrix must stay invertible for the observation to carry
        // the full hidden state; regenerate from fresh sub-seeds when badly
        // conditioned.
        let dim = m_end_rows(&config) + n;
        let mut mix = None;
        for attempt in 0..MAX_MIX_ATTEMPTS {
            let mut mix_rng =
                ChaCha8Rng::seed_from_u64(config.seed ^ MIX_STREAM ^ (attempt << 1));
            let candidate = gaussian_row_normalized(&mut mix_rng, dim, dim, config.row_sum);
            if condition_number(&candidate) < MAX_CONDITION {
                mix = Some(candidate);
                break;
            }
        }
        let mix = mix.ok_or_else(|| {
            EnvError::Config("could not generate a well-conditioned mixing matrix".into())
        })?;

        let cardinalities = vec![config.action_grid.len(); l];
        let mut instance = Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ TRAJECTORY_STREAM),
            config,
            m_exo,
            m_end,
            m_a,
            n_exo_mat,
            k_exo_mat,
            n_a,
            mix,
            e: DVector::zeros(0),
            x: DVector::zeros(0),
            cardinalities,
        };
        instance.reset_hidden();
        Ok(instance)
    }

    fn reset_hidden(&mut self) {
        let m = m_end_rows(&self.config);
        self.e = DVector::from_fn(m, |_, _| self.rng.random::<f64>());
        self.x = DVector::from_fn(self.config.n_exo, |_, _| self.rng.random::<f64>());
    }

    fn observation(&self) -> DVector<f64> {
        let mut hidden = DVector::zeros(self.e.len() + self.x.len());
        hidden.rows_mut(0, self.e.len()).copy_from(&self.e);
        hidden.rows_mut(self.e.len(), self.x.len()).copy_from(&self.x);
        &self.mix * hidden
    }

    fn reward_parts(&self) -> RewardParts {
        let avg_x = self.x.mean();
        let avg_e = self.e.mean();
        let r_end = match self.config.reward_kind {
            RewardKind::Anticorrelated => (-(avg_e - 2.5).abs() / 3.0).exp(),
            _ => (-(avg_e - 1.0).abs()).exp(),
        };
        let r_exo = match self.config.reward_kind {
            RewardKind::Linear => -3.0 * avg_x,
            RewardKind::R1 => {
                let avg_x2 = self.x.map(|v| v * v).mean();
                let avg_x3 = self.x.map(|v| v * v * v).mean();
                (6.0 * (avg_x + avg_x2 / 3.0 - 2.0 / 15.0 * avg_x3)).clamp(-5.0, 5.0)
            }
            RewardKind::R2 => -3.0 * (-avg_x.abs().powf(1.5)).exp(),
            RewardKind::R3 => {
                -3.0 * ((-(avg_x + 1.5).powi(2)).exp() - (-(avg_x - 1.5).powi(2)).exp())
            }
            RewardKind::R4 => {
                -3.0 * ((-(avg_x + 1.0).powi(2)).exp() + 1.5 * (-(avg_x - 1.5).powi(2)).exp()
                    - 5.0 / 3.0 * (-avg_x.powi(2)).exp())
            }
            RewardKind::Anticorrelated => (-(avg_x + 2.5).abs() / 3.0).exp(),
        };
        RewardParts { r_exo, r_end }
    }

    fn advance(&mut self, action_values: &DVector<f64>) {
        // Fixed draw order — all exo noise, then all endo noise — keeps the
        // exo chain a function of the seed alone, whatever actions are taken.
        let eps_x = DVector::from_fn(self.x.len(), |_, _| {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            z * self.config.exo_noise_std
        });
        let eps_e = DVector::from_fn(self.e.len(), |_, _| {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            z * self.config.end_noise_std
        });

        let next_x = match self.config.dynamics_kind {
            DynamicsKind::Linear => {
                if self.config.reward_kind == RewardKind::Anticorrelated {
                    &self.m_exo * &self.x * 0.9 + eps_x
                } else {
                    &self.m_exo * &self.x + eps_x
                }
            }
            DynamicsKind::M1 | DynamicsKind::M2 => {
                let x2 = self.x.map(|v| v * v);
                let x3 = self.x.map(|v| v * v * v);
                let raw = &self.m_exo * &self.x
                    + self.n_exo_mat.as_ref().unwrap() * x2 / 3.0
                    - self.k_exo_mat.as_ref().unwrap() * x3 * (2.0 / 15.0);
                raw.map(|v| v.clamp(-4.0, 4.0)) + eps_x
            }
            DynamicsKind::M3 => {
                let raw = self
                    .x
                    .map(|v| (5.0 * v.signum() * v.abs().sqrt() - v.sin()).clamp(-2.0, 2.0));
                raw + eps_x
            }
        };

        let next_e = if self.config.reward_kind == RewardKind::Anticorrelated {
            &self.m_end * &self.e * 0.45
                + &self.m_exo * &self.x * 0.55
                + &self.m_a * action_values
                + eps_e
        } else {
            let mut hidden = DVector::zeros(self.e.len() + self.x.len());
            hidden.rows_mut(0, self.e.len()).copy_from(&self.e);
            hidden.rows_mut(self.e.len(), self.x.len()).copy_from(&self.x);
            let mut next = &self.m_end * hidden + eps_e;
            match self.config.dynamics_kind {
                DynamicsKind::M3 => {
                    let drive = (3.0 * action_values[0]).sin();
                    next.apply(|v| *v += drive);
                }
                DynamicsKind::M2 => {
                    let a = action_values[0];
                    next += &self.m_a * action_values + self.n_a.as_ref().unwrap() * (a * a);
                }
                _ => {
                    next += &self.m_a * action_values;
                }
            }
            next
        };

        self.x = next_x;
        self.e = next_e;
    }

    // ---- oracle accessors (verification only; learners consume reset/step) ----

    pub fn hidden_endo(&self) -> &DVector<f64> {
        &self.e
    }

    pub fn hidden_exo(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn mixing_matrix(&self) -> &DMatrix<f64> {
        &self.mix
    }

    pub fn exo_transition(&self) -> &DMatrix<f64> {
        &self.m_exo
    }

    pub fn endo_transition(&self) -> &DMatrix<f64> {
        &self.m_end
    }

    pub fn action_matrix(&self) -> &DMatrix<f64> {
        &self.m_a
    }

    pub fn config(&self) -> &LinearMdpConfig {
        &self.config
    }
}

fn rng_uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

fn m_end_rows(config: &LinearMdpConfig) -> usize {
    if config.reward_kind == RewardKind::Anticorrelated {
        config.n_exo
    } else {
        config.n_end
    }
}

impl Environment for LinearMdp {
    fn observation_dim(&self) -> usize {
        self.mix.nrows()
    }

    fn action_cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    fn valid_action_counts(&self) -> Vec<usize> {
        self.cardinalities.clone()
    }

    fn action_value(&self, _variable: usize, index: usize) -> f64 {
        self.config.action_grid.get(index).copied().unwrap_or(f64::NAN)
    }

    fn reset(&mut self) -> DVector<f64> {
        self.reset_hidden();
        self.observation()
    }

    fn step(&mut self, action: &[usize]) -> Result<StepOutcome> {
        if action.len() != self.config.n_action_vars {
            return Err(EnvError::InvalidAction(format!(
                "expected {} action indices, got {}",
                self.config.n_action_vars,
                action.len()
            )));
        }
        let grid = &self.config.action_grid;
        let mut values = DVector::zeros(action.len());
        for (k, &idx) in action.iter().enumerate() {
            let Some(&v) = grid.get(idx) else {
                return Err(EnvError::InvalidAction(format!(
                    "index {idx} outside the {}-value grid",
                    grid.len()
                )));
            };
            values[k] = v;
        }

        let reward_parts = self.reward_parts();
        self.advance(&values);
        Ok(StepOutcome {
            observation: self.observation(),
            reward: reward_parts.r_exo + reward_parts.r_end,
            reward_parts,
            terminal: false,
        })
    }
}
