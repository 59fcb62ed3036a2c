//! Single-hidden-layer network with a multiplicative Dirichlet cutoff.
//!
//! The trainable part is `u_raw(x) = b1 + Σ a1_i σ(a0_i x + b0_i)`; the
//! boundary-conforming output is `u(x) = φ(x) u_raw(x)` where φ vanishes at
//! every Dirichlet point. Spatial derivatives up to order 3 are closed-form;
//! gradients with respect to the weights come from the reverse-mode tape.

use crate::autodiff::{Scalar, Tape, Var};
use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Activation of the hidden layer.
///
/// Both variants have closed-form derivatives up to order 3 and finite sup
/// norms of every derivative, which the certified quadrature-error bound
/// relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
}

impl ActivationKind {
    /// σ⁽ⁿ⁾(z) for n = 0..=3, expressed through σ itself so the same code
    /// path works for plain and taped scalars.
    pub fn eval<S: Scalar>(self, z: S, n: usize) -> S {
        match self {
            ActivationKind::Sigmoid => {
                let s = ((-z).exp() + 1.0).recip();
                let sp = s * (-(s - 1.0)); // s(1-s)
                match n {
                    0 => s,
                    1 => sp,
                    2 => sp * (-(s * 2.0 - 1.0)),
                    3 => sp * (s * s * 6.0 - s * 6.0 + 1.0),
                    _ => panic!("derivative order {n} out of range"),
                }
            }
            ActivationKind::Tanh => {
                let t = z.tanh();
                let tp = -(t * t - 1.0); // 1 - t^2
                match n {
                    0 => t,
                    1 => tp,
                    2 => t * (-2.0) * tp,
                    3 => tp * (t * t * 6.0 - 2.0),
                    _ => panic!("derivative order {n} out of range"),
                }
            }
        }
    }

    /// ‖σ⁽ⁿ⁾‖∞ over ℝ, n = 0..=3. Exact analytic values; the unit tests
    /// re-derive each one by dense grid search before it is trusted.
    pub fn sup_norm(self, n: usize) -> f64 {
        const SQRT3: f64 = 1.732_050_807_568_877_2;
        match self {
            ActivationKind::Sigmoid => match n {
                0 => 1.0,
                1 => 0.25,
                2 => 1.0 / (6.0 * SQRT3),
                3 => 0.125,
                _ => panic!("derivative order {n} out of range"),
            },
            ActivationKind::Tanh => match n {
                0 => 1.0,
                1 => 1.0,
                2 => 4.0 / (3.0 * SQRT3),
                3 => 2.0,
                _ => panic!("derivative order {n} out of range"),
            },
        }
    }
}

/// Trainable weights of the single-hidden-layer network.
///
/// Generic over the scalar type so the same structure holds plain values or
/// tape variables during a gradient evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkParams<S = f64> {
    pub a0: Vec<S>,
    pub b0: Vec<S>,
    pub a1: Vec<S>,
    pub b1: S,
    pub activation: ActivationKind,
}

impl NetworkParams<f64> {
    pub fn new(
        a0: Vec<f64>,
        b0: Vec<f64>,
        a1: Vec<f64>,
        b1: f64,
        activation: ActivationKind,
    ) -> Result<Self> {
        if a0.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        if a0.len() != b0.len() || a0.len() != a1.len() {
            return Err(Error::MismatchedParams {
                a0: a0.len(),
                b0: b0.len(),
                a1: a1.len(),
            });
        }
        let all_finite = a0
            .iter()
            .chain(&b0)
            .chain(&a1)
            .chain(std::iter::once(&b1))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFiniteParam);
        }
        Ok(NetworkParams {
            a0,
            b0,
            a1,
            b1,
            activation,
        })
    }

    /// Number of trainable scalars: 3M + 1.
    pub fn dof(&self) -> usize {
        3 * self.neurons() + 1
    }

    /// Flattens in the order a0, b0, a1, b1 (the order used by gradients).
    pub fn flatten(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.dof());
        theta.extend_from_slice(&self.a0);
        theta.extend_from_slice(&self.b0);
        theta.extend_from_slice(&self.a1);
        theta.push(self.b1);
        theta
    }

    pub fn unflatten(theta: &[f64], m: usize, activation: ActivationKind) -> Result<Self> {
        if theta.len() != 3 * m + 1 {
            return Err(Error::MismatchedParams {
                a0: m,
                b0: m,
                a1: theta.len(),
            });
        }
        NetworkParams::new(
            theta[0..m].to_vec(),
            theta[m..2 * m].to_vec(),
            theta[2 * m..3 * m].to_vec(),
            theta[3 * m],
            activation,
        )
    }

    /// Records every weight as a tape leaf, preserving the flatten order.
    pub fn lift<'t>(&self, tape: &'t Tape) -> NetworkParams<Var<'t>> {
        NetworkParams {
            a0: self.a0.iter().map(|&v| tape.var(v)).collect(),
            b0: self.b0.iter().map(|&v| tape.var(v)).collect(),
            a1: self.a1.iter().map(|&v| tape.var(v)).collect(),
            b1: tape.var(self.b1),
            activation: self.activation,
        }
    }
}

impl<S> NetworkParams<S> {
    pub fn neurons(&self) -> usize {
        self.a0.len()
    }
}

/// Polynomial cutoff φ(x) = ∏ (x − x_D) over a closed interval, with
/// precomputed ‖φ⁽ᵏ⁾‖∞ over that interval for k = 0..=4.
#[derive(Debug, Clone)]
pub struct CutoffPoly {
    roots: Vec<f64>,
    domain: (f64, f64),
    /// Monomial coefficients of φ⁽ᵏ⁾, k = 0..=4 (low degree first).
    deriv_coeffs: [Vec<f64>; 5],
    sup_norms: [f64; 5],
}

impl CutoffPoly {
    pub fn new(mut roots: Vec<f64>, a: f64, b: f64) -> Self {
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        // Expand ∏ (x - r) to monomial coefficients.
        let mut coeffs = vec![1.0];
        for &r in &roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i] -= r * c;
                next[i + 1] += c;
            }
            coeffs = next;
        }
        let mut deriv_coeffs: [Vec<f64>; 5] = Default::default();
        deriv_coeffs[0] = coeffs;
        for k in 1..5 {
            deriv_coeffs[k] = differentiate(&deriv_coeffs[k - 1]);
        }
        // Sup norms over [a, b] by dense grid search including the endpoints.
        // A polynomial is unbounded on ℝ, so the bound only makes sense
        // domain-restricted.
        let grid = 100_000;
        let mut sup_norms = [0.0f64; 5];
        for (k, sup) in sup_norms.iter_mut().enumerate() {
            for i in 0..=grid {
                let x = a + (b - a) * i as f64 / grid as f64;
                *sup = sup.max(horner(&deriv_coeffs[k], x).abs());
            }
        }
        CutoffPoly {
            roots,
            domain: (a, b),
            deriv_coeffs,
            sup_norms,
        }
    }

    /// φ⁽ᵏ⁾(x). Order 0 is evaluated in product form so φ(x_D) = 0 exactly.
    pub fn eval_deriv(&self, x: f64, k: usize) -> f64 {
        if k == 0 {
            return self.roots.iter().map(|&r| x - r).product();
        }
        if k >= self.deriv_coeffs.len() {
            return 0.0;
        }
        horner(&self.deriv_coeffs[k], x)
    }

    /// ‖φ⁽ᵏ⁾‖∞ over the closure of the domain, k = 0..=4.
    pub fn sup_norm(&self, k: usize) -> f64 {
        if k < 5 {
            self.sup_norms[k]
        } else {
            0.0
        }
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// dⁿ/dxⁿ of the raw (pre-cutoff) network at x, n = 0..=3.
///
/// n = 0: b1 + Σ a1_i σ(z_i); n ≥ 1: Σ a1_i a0_iⁿ σ⁽ⁿ⁾(z_i) with
/// z_i = a0_i x + b0_i. The output bias contributes only at n = 0.
pub fn eval_raw<S: Scalar>(params: &NetworkParams<S>, x: f64, n: usize) -> S {
    assert!(n <= 3, "derivative order {n} out of range");
    let mut acc: Option<S> = None;
    for i in 0..params.neurons() {
        let z = params.a0[i] * x + params.b0[i];
        let mut term = params.a1[i] * params.activation.eval(z, n);
        for _ in 0..n {
            term = term * params.a0[i];
        }
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    let sum = acc.expect("M >= 1");
    if n == 0 {
        sum + params.b1
    } else {
        sum
    }
}

/// dⁿ/dxⁿ of the cutoff network φ·u_raw via the Leibniz expansion
/// Σ C(n,k) u_raw⁽ᵏ⁾ φ⁽ⁿ⁻ᵏ⁾, n = 0..=3.
pub fn eval_u<S: Scalar>(params: &NetworkParams<S>, cutoff: &CutoffPoly, x: f64, n: usize) -> S {
    assert!(n <= 3, "derivative order {n} out of range");
    let mut acc: Option<S> = None;
    for k in 0..=n {
        let term = eval_raw(params, x, k) * (binomial(n, k) * cutoff.eval_deriv(x, n - k));
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.expect("n >= 0")
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Gradient of an arbitrary scalar loss with respect to every weight.
///
/// Returns `(value, gradient)`; the gradient is laid out as a0, b0, a1, b1
/// (length 3M + 1), matching [`NetworkParams::flatten`].
pub fn grad_theta<F>(params: &NetworkParams, scalar_expr: F) -> (f64, Vec<f64>)
where
    F: for<'t> FnOnce(&NetworkParams<Var<'t>>) -> Var<'t>,
{
    let tape = Tape::new();
    let lifted = params.lift(&tape);
    let out = scalar_expr(&lifted);
    let value = out.value();
    let adjoint = tape.gradient(out);
    let mut grad = Vec::with_capacity(params.dof());
    for v in lifted.a0.iter().chain(&lifted.b0).chain(&lifted.a1) {
        grad.push(adjoint[v.index()]);
    }
    grad.push(adjoint[lifted.b1.index()]);
    (value, grad)
}

/// Glorot-style uniform initialization: weights in [−L, L] with
/// L = sqrt(6/(1+M)), biases zero. Deterministic per seed.
pub fn init_params(m: usize, activation: ActivationKind, seed: u64) -> Result<NetworkParams> {
    if m == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = (6.0 / (1.0 + m as f64)).sqrt();
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-limit..=limit)).collect()
    };
    let a0 = draw(m);
    let a1 = draw(m);
    NetworkParams::new(a0, vec![0.0; m], a1, 0.0, activation)
}
