//! h-adaptive integration driven by training/validation mesh disagreement.
//!
//! The validation mesh is always a global h-refinement of the training mesh.
//! Periodically, the Ritz volume integrand is integrated per training
//! element and over the two corresponding validation children; elements
//! whose values disagree by more than the tolerance are bisected.

use crate::error::Result;
use crate::losses::{ritz_loss, LossKind};
use crate::network::{eval_u, CutoffPoly, NetworkParams};
use crate::problems::ProblemSpec;
use crate::quadrature::{gauss_rule, integrate, Mesh};
use crate::training::{Optimizer, TrainConfig, TrainTrace};
use serde::{Deserialize, Serialize};

/// One refinement decision, recorded for the experiment log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementEvent {
    pub iteration: usize,
    /// Element index (0-based) in the training mesh at decision time.
    pub element_index: usize,
    pub element_left: f64,
    pub element_right: f64,
    /// |I_j¹ + I_j² − I_j| that triggered the refinement.
    pub delta: f64,
}

/// Training/validation mesh pair plus refinement bookkeeping.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    pub training_mesh: Mesh,
    pub validation_mesh: Mesh,
    pub tolerance: f64,
    pub check_period: usize,
    pub max_checks: usize,
    pub refinement_log: Vec<RefinementEvent>,
    checks_done: usize,
}

impl AdaptiveState {
    pub fn new(training_mesh: Mesh, tolerance: f64, check_period: usize, max_checks: usize) -> Self {
        let validation_mesh = training_mesh.global_refine();
        AdaptiveState {
            training_mesh,
            validation_mesh,
            tolerance,
            check_period,
            max_checks,
            refinement_log: Vec::new(),
            checks_done: 0,
        }
    }

    pub fn checks_done(&self) -> usize {
        self.checks_done
    }
}

/// One sweep of the per-element disagreement check.
///
/// Integrates ½σ(u′_NN)² − f·u_NN with the given Gauss order over each
/// training element and over its two validation children; bisects every
/// element whose values differ by more than the tolerance (in absolute
/// value). Boundary terms are exact and excluded. Returns whether any
/// refinement occurred.
pub fn adaptive_check(
    state: &mut AdaptiveState,
    params: &NetworkParams,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    gauss_order: usize,
    iteration: usize,
) -> Result<bool> {
    let integrand = |x: f64| {
        let u: f64 = eval_u(params, cutoff, x, 0);
        let du: f64 = eval_u(params, cutoff, x, 1);
        0.5 * (problem.sigma)(x) * du * du - (problem.f)(x) * u
    };
    let element_integral = |l: f64, r: f64| -> Result<f64> {
        let rule = gauss_rule(&Mesh::new(vec![l, r])?, gauss_order)?;
        integrate(&rule, integrand)
    };

    state.checks_done += 1;
    let mut flagged = Vec::new();
    for (j, (l, r)) in state.training_mesh.elements().enumerate() {
        let mid = 0.5 * (l + r);
        let coarse = element_integral(l, r)?;
        let fine = element_integral(l, mid)? + element_integral(mid, r)?;
        let delta = (fine - coarse).abs();
        if delta > state.tolerance {
            flagged.push((j, l, r, delta));
        }
    }
    if flagged.is_empty() {
        return Ok(false);
    }
    // Apply refinements after the sweep; insertion order keeps indices
    // valid by walking the flagged elements from the right.
    let mut mesh = state.training_mesh.clone();
    for &(j, l, r, delta) in flagged.iter().rev() {
        mesh = mesh.refine_element(j)?;
        state.refinement_log.push(RefinementEvent {
            iteration,
            element_index: j,
            element_left: l,
            element_right: r,
            delta,
        });
    }
    // Keep the log chronological (left-to-right within one sweep).
    let start = state.refinement_log.len() - flagged.len();
    state.refinement_log[start..].reverse();
    state.training_mesh = mesh;
    state.validation_mesh = state.training_mesh.global_refine();
    Ok(true)
}

/// Adaptivity knobs for a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOpts {
    pub tolerance: f64,
    pub check_period: usize,
    pub max_checks: usize,
    pub initial_elements: usize,
    pub gauss_order: usize,
}

/// Interleaves optimizer steps on the Ritz loss with adaptive checks,
/// rebuilding the quadrature rule after each refinement.
pub fn run_adaptive_training(
    problem: &ProblemSpec,
    cutoff: &CutoffPoly,
    config: &TrainConfig,
    opts: &AdaptiveOpts,
) -> Result<(NetworkParams, AdaptiveState, TrainTrace)> {
    config.validate()?;
    let (a, b) = problem.domain;
    let mut state = AdaptiveState::new(
        Mesh::uniform(a, b, opts.initial_elements)?,
        opts.tolerance,
        opts.check_period.max(1),
        opts.max_checks,
    );
    let mut rule = gauss_rule(&state.training_mesh, opts.gauss_order)?;
    let mut validation_rule = gauss_rule(&state.validation_mesh, opts.gauss_order)?;

    let mut params = crate::training::initial_params(
        config.init,
        config.neurons,
        config.activation,
        config.seed,
    )?;
    let mut theta = params.flatten();
    let mut adam = crate::training::AdamState::new(theta.len());
    let mut trace = TrainTrace::default();
    let start = std::time::Instant::now();
    let snap = config.snapshot_period.max(1);
    debug_assert!(matches!(config.loss, LossKind::Ritz));

    for iteration in 0..config.iterations {
        if iteration > 0
            && iteration % state.check_period == 0
            && state.checks_done < state.max_checks
        {
            let refined = adaptive_check(
                &mut state,
                &params,
                cutoff,
                problem,
                opts.gauss_order,
                iteration,
            )?;
            if refined {
                rule = gauss_rule(&state.training_mesh, opts.gauss_order)?;
                validation_rule = gauss_rule(&state.validation_mesh, opts.gauss_order)?;
            }
        }
        let (loss, grad) = {
            let mut captured = Ok(());
            let out = crate::network::grad_theta(&params, |q| {
                match ritz_loss(q, cutoff, problem, &rule) {
                    Ok(v) => v,
                    Err(e) => {
                        captured = Err(e);
                        q.b1 * 0.0
                    }
                }
            });
            captured?;
            out
        };
        if !loss.is_finite() {
            return Err(crate::error::Error::Diverged { iteration });
        }
        if iteration % snap == 0 {
            let val: f64 = ritz_loss(&params, cutoff, problem, &validation_rule)?;
            trace.rows.push(crate::training::TraceRow {
                iteration,
                train_loss: loss,
                val_loss: val,
                reg_value: f64::NAN,
                wall_ms: start.elapsed().as_secs_f64() * 1000.0,
            });
        }
        match config.optimizer {
            Optimizer::Sgd { lr } => {
                for (t, g) in theta.iter_mut().zip(&grad) {
                    *t -= lr * g;
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => crate::training::adam_step(&mut adam, &mut theta, &grad, lr, beta1, beta2, eps),
        }
        params = NetworkParams::unflatten(&theta, config.neurons, config.activation)?;
    }

    let final_loss: f64 = ritz_loss(&params, cutoff, problem, &rule)?;
    let final_val: f64 = ritz_loss(&params, cutoff, problem, &validation_rule)?;
    trace.rows.push(crate::training::TraceRow {
        iteration: config.iterations,
        train_loss: final_loss,
        val_loss: final_val,
        reg_value: f64::NAN,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
    });
    Ok((params, state, trace))
}
