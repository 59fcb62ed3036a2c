//! Optimizers and the full-batch training loop.
//!
//! The quadrature rule is the batch: every iteration evaluates the loss on
//! all rule points and takes one optimizer step. Deterministic per seed.

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::losses::{ls_loss, ritz_loss, ritz_pl_loss, LossKind};
use crate::network::{eval_u, grad_theta, init_params, ActivationKind, CutoffPoly, NetworkParams};
use crate::problems::ProblemSpec;
use crate::quadrature::{
    gauss_rule, midpoint_rule, monte_carlo_rule, Mesh, QuadratureRule,
};
use crate::regularizer::{r_total, regularized_loss, RegContext};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Gradient-descent variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr } => lr,
            Optimizer::Adam { lr, .. } => lr,
        }
    }
}

/// First/second moment accumulators for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dof: usize) -> Self {
        AdamState {
            m: vec![0.0; dof],
            v: vec![0.0; dof],
            t: 0,
        }
    }
}

/// One Adam update with bias correction, in place on `theta`.
pub fn adam_step(
    state: &mut AdamState,
    theta: &mut [f64],
    grad: &[f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for i in 0..theta.len() {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Initial parameter distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub enum InitSpec {
    /// Glorot-style uniform weights, zero biases (the default).
    #[default]
    Glorot,
    /// Weights and hidden biases uniform in [−scale, scale], output bias 0.
    /// Large scales start the activations saturated, which reproduces the
    /// slow plateau dynamics seen when training from poor initializations.
    Uniform { scale: f64 },
}


/// Draws initial parameters per the configured distribution, deterministically
/// in the seed.
pub fn initial_params(
    init: InitSpec,
    neurons: usize,
    activation: ActivationKind,
    seed: u64,
) -> Result<NetworkParams> {
    match init {
        InitSpec::Glorot => init_params(neurons, activation, seed),
        InitSpec::Uniform { scale } => {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                (0..neurons).map(|_| rng.gen_range(-scale..=scale)).collect()
            };
            let a0 = draw(&mut rng);
            let b0 = draw(&mut rng);
            let a1 = draw(&mut rng);
            NetworkParams::new(a0, b0, a1, 0.0, activation)
        }
    }
}

/// Quadrature provenance in constructible form (meshes built from element
/// counts over the problem domain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuleSpec {
    GaussPerElement { order: usize, elements: usize },
    UniformMidpoint { n: usize },
    MonteCarlo { n: usize, seed: u64 },
}

impl RuleSpec {
    pub fn build(&self, domain: (f64, f64)) -> Result<QuadratureRule> {
        let (a, b) = domain;
        match *self {
            RuleSpec::GaussPerElement { order, elements } => {
                gauss_rule(&Mesh::uniform(a, b, elements)?, order)
            }
            RuleSpec::UniformMidpoint { n } => midpoint_rule(a, b, n),
            RuleSpec::MonteCarlo { n, seed } => monte_carlo_rule(a, b, n, seed),
        }
    }
}

/// Full description of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub iterations: usize,
    pub seed: u64,
    pub neurons: usize,
    pub activation: ActivationKind,
    pub loss: LossKind,
    /// Adds the certified bound R(θ) to a midpoint-rule Ritz loss.
    /// Requires finite ‖f‖∞, ‖f′‖∞ and a `UniformMidpoint` rule.
    pub regularize: bool,
    pub rule: RuleSpec,
    pub validation_rule: Option<RuleSpec>,
    pub snapshot_period: usize,
    /// Redraw Monte Carlo points every iteration (mini-batch style) instead
    /// of keeping one fixed rule for the whole run.
    pub resample_mc: bool,
    /// Initial parameter distribution (Glorot unless stated otherwise).
    #[serde(default)]
    pub init: InitSpec,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.optimizer.learning_rate() <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.neurons == 0 {
            return Err(Error::EmptyNetwork);
        }
        if self.regularize && !matches!(self.rule, RuleSpec::UniformMidpoint { .. }) {
            return Err(Error::InvalidConfig(
                "regularized training requires a uniform midpoint rule".into(),
            ));
        }
        Ok(())
    }
}

/// One trace snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// R(θ); NaN when the bound is unavailable (singular data or a
    /// non-midpoint rule).
    pub reg_value: f64,
    pub wall_ms: f64,
}

/// Per-iteration record of a run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
}

impl TrainTrace {
    pub fn final_row(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Evaluates the configured loss for fixed parameters, generic over the
/// scalar type.
fn eval_loss<S: Scalar>(
    params: &NetworkParams<S>,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    loss: &LossKind,
    rule: &QuadratureRule,
    reg_ctx: Option<&RegContext<'_>>,
) -> Result<S> {
    match (loss, reg_ctx) {
        (LossKind::Ritz, None) => ritz_loss(params, cutoff, problem, rule),
        (LossKind::Ritz, Some(ctx)) => regularized_loss(params, ctx),
        (LossKind::LeastSquares, _) => ls_loss(params, cutoff, problem, rule),
        (LossKind::RitzPiecewiseLinear(mesh), _) => ritz_pl_loss(params, cutoff, problem, mesh),
    }
}

/// Same loss formula on a held-out rule; never used for gradients.
pub fn validation_loss(
    params: &NetworkParams,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    validation_rule: &QuadratureRule,
) -> Result<f64> {
    ritz_loss(params, cutoff, problem, validation_rule)
}

/// Error norm against the problem's exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1,
}

/// ‖u_NN − u_exact‖ by a 10⁴-element order-5 composite Gauss oracle, graded
/// geometrically toward the left endpoint when the data are singular (mp1).
pub fn solution_error(
    params: &NetworkParams,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    norm: Norm,
) -> Result<f64> {
    let u_exact = problem.exact_u()?;
    let (a, b) = problem.domain;
    let mesh = if problem.f_sup.is_none() {
        let mut pts = vec![a];
        for k in (0..10_000).rev() {
            pts.push(a + (b - a) * 0.995f64.powi(k));
        }
        Mesh::new(pts)?
    } else {
        Mesh::uniform(a, b, 10_000)?
    };
    let rule = gauss_rule(&mesh, 5)?;
    let mut acc = 0.0;
    for (x, w) in rule.pairs() {
        let d: f64 = eval_u(params, cutoff, x, 0) - u_exact(x);
        acc += w * d * d;
        if norm == Norm::H1 {
            let up = problem
                .exact_u_prime
                .ok_or_else(|| Error::MissingExactSolution(problem.name.to_string()))?;
            let dd: f64 = eval_u(params, cutoff, x, 1) - up(x);
            acc += w * dd * dd;
        }
    }
    Ok(acc.sqrt())
}

/// Runs full-batch gradient descent for the configured number of iterations.
///
/// Aborts with [`Error::Diverged`] if the training loss becomes non-finite.
pub fn train(
    problem: &ProblemSpec,
    cutoff: &CutoffPoly,
    config: &TrainConfig,
) -> Result<(NetworkParams, TrainTrace)> {
    config.validate()?;
    let reg_n = if config.regularize {
        match config.rule {
            RuleSpec::UniformMidpoint { n } => Some(n),
            _ => unreachable!("checked by validate"),
        }
    } else {
        None
    };
    let reg_ctx = match reg_n {
        Some(n) => Some(RegContext::new(problem, cutoff, n)?),
        None => None,
    };
    // Context used only for the trace metric when not training with R.
    let trace_ctx = match (&reg_ctx, &config.rule) {
        (None, RuleSpec::UniformMidpoint { n }) if problem.f_sup.is_some() => {
            Some(RegContext::new(problem, cutoff, *n)?)
        }
        _ => None,
    };

    let mut rule = config.rule.build(problem.domain)?;
    let validation = match &config.validation_rule {
        Some(spec) => Some(spec.build(problem.domain)?),
        None => None,
    };

    let mut params = initial_params(config.init, config.neurons, config.activation, config.seed)?;
    let mut theta = params.flatten();
    let mut adam = AdamState::new(theta.len());
    let mut trace = TrainTrace::default();
    let start = Instant::now();
    let snap = config.snapshot_period.max(1);

    let record =
        |iteration: usize, loss: f64, params: &NetworkParams, trace: &mut TrainTrace| -> Result<()> {
            let val = match &validation {
                Some(rule) => eval_loss(params, cutoff, problem, &config.loss, rule, None)?,
                None => loss,
            };
            let reg = match reg_ctx.as_ref().or(trace_ctx.as_ref()) {
                Some(ctx) => r_total(params, ctx),
                None => f64::NAN,
            };
            trace.rows.push(TraceRow {
                iteration,
                train_loss: loss,
                val_loss: val,
                reg_value: reg,
                wall_ms: start.elapsed().as_secs_f64() * 1000.0,
            });
            Ok(())
        };

    let mut mc_seed = match config.rule {
        RuleSpec::MonteCarlo { seed, .. } => seed,
        _ => 0,
    };

    for iteration in 0..config.iterations {
        if config.resample_mc {
            if let RuleSpec::MonteCarlo { n, .. } = config.rule {
                mc_seed = mc_seed.wrapping_add(1);
                rule = monte_carlo_rule(problem.domain.0, problem.domain.1, n, mc_seed)?;
            }
        }
        let (loss, grad) = {
            let mut captured = Ok(0.0);
            let (loss, grad) = grad_theta(&params, |q| {
                match eval_loss(q, cutoff, problem, &config.loss, &rule, reg_ctx.as_ref()) {
                    Ok(v) => v,
                    Err(e) => {
                        captured = Err(e);
                        q.b1 * 0.0
                    }
                }
            });
            captured?;
            (loss, grad)
        };
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration });
        }
        if iteration % snap == 0 {
            record(iteration, loss, &params, &mut trace)?;
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
            } => adam_step(&mut adam, &mut theta, &grad, lr, beta1, beta2, eps),
        }
        params = NetworkParams::unflatten(&theta, config.neurons, config.activation)?;
    }

    let final_loss = eval_loss(
        &params,
        cutoff,
        problem,
        &config.loss,
        &rule,
        reg_ctx.as_ref(),
    )?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            iteration: config.iterations,
        });
    }
    record(config.iterations, final_loss, &params, &mut trace)?;
    Ok((params, trace))
}

/// Discrete (training-rule) loss of a parameter vector, without the
/// regularizer term. Used for reporting F̂_R alongside L.
pub fn discrete_loss(
    params: &NetworkParams,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    config: &TrainConfig,
) -> Result<f64> {
    let rule = config.rule.build(problem.domain)?;
    eval_loss(params, cutoff, problem, &config.loss, &rule, None)
}
