use nalgebra::DMatrix;

use crate::error::{ManifoldError, Result};
use crate::stiefel::{random_stiefel, retract, tangent_project, StiefelPoint};

/// Knobs for the Riemannian steepest-descent loop.
#[derive(Debug, Clone)]
pub struct DescentSettings {
    pub max_iterations: usize,
    /// Armijo sufficient-decrease coefficient `c`.
    pub armijo_coefficient: f64,
    /// Multiplicative backtracking factor applied to the step size.
    pub backtrack_factor: f64,
    /// Backtracking attempts per iteration before giving up on the step.
    pub max_backtracks: usize,
    /// Central-difference half-step for numeric gradients.
    pub fd_step: f64,
    /// Riemannian gradient norm below which the loop declares convergence.
    pub gradient_tolerance: f64,
    /// Relative objective decrease treated as stagnation…
    pub stagnation_tolerance: f64,
    /// …when sustained over this many consecutive accepted iterations.
    pub stagnation_window: usize,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            armijo_coefficient: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 30,
            fd_step: 1e-6,
            gradient_tolerance: 1e-6,
            stagnation_tolerance: 1e-12,
            stagnation_window: 5,
        }
    }
}

impl DescentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(ManifoldError::InvalidSettings("max_iterations must be ≥ 1".into()));
        }
        if !(self.armijo_coefficient > 0.0 && self.armijo_coefficient < 1.0) {
            return Err(ManifoldError::InvalidSettings(format!(
                "armijo_coefficient must lie in (0,1), got {}",
                self.armijo_coefficient
            )));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(ManifoldError::InvalidSettings(format!(
                "backtrack_factor must lie in (0,1), got {}",
                self.backtrack_factor
            )));
        }
        if self.max_backtracks == 0 {
            return Err(ManifoldError::InvalidSettings("max_backtracks must be ≥ 1".into()));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(ManifoldError::InvalidSettings(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        if !(self.gradient_tolerance.is_finite() && self.gradient_tolerance > 0.0) {
            return Err(ManifoldError::InvalidSettings(format!(
                "gradient_tolerance must be positive, got {}",
                self.gradient_tolerance
            )));
        }
        if !(self.stagnation_tolerance.is_finite() && self.stagnation_tolerance >= 0.0) {
            return Err(ManifoldError::InvalidSettings(format!(
                "stagnation_tolerance must be non-negative, got {}",
                self.stagnation_tolerance
            )));
        }
        if self.stagnation_window == 0 {
            return Err(ManifoldError::InvalidSettings("stagnation_window must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Result of a descent run. `objective_trace` holds the objective value at
/// the initial point followed by each accepted iterate, so it is
/// non-increasing by construction.
#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub point: StiefelPoint,
    pub final_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Entrywise central-difference approximation of the Euclidean gradient of
/// `f` at `point`: `(f(W + h·E_ij) − f(W − h·E_ij)) / 2h`.
pub fn numeric_gradient<F>(f: &F, point: &StiefelPoint, fd_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DMatrix<f64>) -> f64,
{
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(ManifoldError::InvalidSettings(format!(
            "fd_step must be positive, got {fd_step}"
        )));
    }
    let w = point.matrix();
    let (d, p) = w.shape();
    let mut grad = DMatrix::zeros(d, p);
    let mut probe = w.clone();
    for j in 0..p {
        for i in 0..d {
            let base = w[(i, j)];
            probe[(i, j)] = base + fd_step;
            let plus = f(&probe);
            probe[(i, j)] = base - fd_step;
            let minus = f(&probe);
            probe[(i, j)] = base;
            let slope = (plus - minus) / (2.0 * fd_step);
            if !slope.is_finite() {
                return Err(ManifoldError::NonFinite(format!(
                    "numeric gradient entry ({i},{j}) is not finite"
                )));
            }
            grad[(i, j)] = slope;
        }
    }
    Ok(grad)
}

/// Minimizes `f` over the Stiefel manifold `St(d, p)` by Riemannian steepest
/// descent with numeric gradients. Starts from `initial` when given,
/// otherwise from a seeded random point, so runs are bitwise reproducible.
pub fn minimize<F>(
    f: &F,
    d: usize,
    p: usize,
    initial: Option<StiefelPoint>,
    seed: u64,
    settings: &DescentSettings,
) -> Result<MinimizeOutcome>
where
    F: Fn(&DMatrix<f64>) -> f64,
{
    let grad = |w: &StiefelPoint| numeric_gradient(f, w, settings.fd_step);
    minimize_with_gradient(f, &grad, d, p, initial, seed, settings)
}

/// As [`minimize`], but with a caller-supplied Euclidean gradient. The
/// gradient is projected onto the tangent space internally.
pub fn minimize_with_gradient<F, G>(
    f: &F,
    euclidean_grad: &G,
    d: usize,
    p: usize,
    initial: Option<StiefelPoint>,
    seed: u64,
    settings: &DescentSettings,
) -> Result<MinimizeOutcome>
where
    F: Fn(&DMatrix<f64>) -> f64,
    G: Fn(&StiefelPoint) -> Result<DMatrix<f64>>,
{
    settings.validate()?;
    if p == 0 || p > d {
        return Err(ManifoldError::Dimension(format!("need 1 ≤ p ≤ d, got d={d}, p={p}")));
    }
    let mut point = match initial {
        Some(init) => {
            if init.d() != d || init.p() != p {
                return Err(ManifoldError::Dimension(format!(
                    "initial point is {}×{}, requested St({d},{p})",
                    init.d(),
                    init.p()
                )));
            }
            init
        }
        None => random_stiefel(d, p, seed)?,
    };

    let mut value = f(point.matrix());
    if !value.is_finite() {
        return Err(ManifoldError::NonFinite(format!(
            "objective is not finite at the initial point: {value}"
        )));
    }
    let mut trace = vec![value];
    let mut stagnant = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    // Previous accepted iterate and its tangent gradient, for the
    // Barzilai–Borwein initial trial step.
    let mut previous: Option<(DMatrix<f64>, DMatrix<f64>)> = None;

    for _ in 0..settings.max_iterations {
        let g = euclidean_grad(&point)?;
        let t = tangent_project(&point, &g)?;
        let t_norm_sq: f64 = t.iter().map(|v| v * v).sum();
        if !t_norm_sq.is_finite() {
            return Err(ManifoldError::NonFinite("tangent gradient is not finite".into()));
        }
        if t_norm_sq.sqrt() < settings.gradient_tolerance {
            converged = true;
            break;
        }

        // Initial trial step: Barzilai–Borwein ⟨s,s⟩/⟨s,y⟩ estimates the
        // inverse local curvature, which avoids the step-size-1 regime where
        // plain gradient steps oscillate across the minimum with negligible
        // decrease. Armijo backtracking below still guards every step, so the
        // accepted objective sequence stays monotone.
        let trial = match &previous {
            Some((w_prev, t_prev)) => {
                let s = point.matrix() - w_prev;
                let y = &t - t_prev;
                let ss = s.dot(&s);
                let sy = s.dot(&y);
                if sy > 0.0 && ss.is_finite() && sy.is_finite() {
                    (ss / sy).clamp(1e-6, 1e6)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        previous = Some((point.matrix().clone(), t.clone()));

        // Armijo backtracking along the negative tangent direction.
        let mut alpha = trial;
        let mut accepted: Option<(StiefelPoint, f64)> = None;
        for _ in 0..settings.max_backtracks {
            let candidate = match retract(&point, &(&t * (-alpha))) {
                Ok(c) => c,
                Err(ManifoldError::RankDeficient { .. }) => {
                    alpha *= settings.backtrack_factor;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let candidate_value = f(candidate.matrix());
            if candidate_value.is_finite()
                && candidate_value <= value - settings.armijo_coefficient * alpha * t_norm_sq
            {
                accepted = Some((candidate, candidate_value));
                break;
            }
            alpha *= settings.backtrack_factor;
        }

        let Some((next_point, next_value)) = accepted else {
            // No step satisfied the decrease condition: stop where we are.
            break;
        };

        let decrease = value - next_value;
        let relative = decrease / value.abs().max(1.0);
        if relative < settings.stagnation_tolerance {
            stagnant += 1;
        } else {
            stagnant = 0;
        }

        point = next_point;
        value = next_value;
        trace.push(value);
        iterations += 1;

        if stagnant >= settings.stagnation_window {
            converged = true;
            break;
        }
    }

    Ok(MinimizeOutcome {
        point,
        final_value: value,
        iterations,
        converged,
        objective_trace: trace,
    })
}
