//! Discrete Ritz and Least-Squares functionals over a quadrature rule, plus
//! the piecewise-linear surrogate energy.
//!
//! Everything is generic over [`Scalar`] so one code path serves both plain
//! evaluation and gradient recording. Boundary terms are point evaluations
//! and carry no quadrature error in 1D.

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::network::{eval_u, CutoffPoly, NetworkParams};
use crate::problems::ProblemSpec;
use crate::quadrature::{Mesh, QuadratureRule};
use serde::{Deserialize, Serialize};

/// Which functional drives training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LossKind {
    Ritz,
    LeastSquares,
    /// Ritz energy of the piecewise-linear interpolant on the given mesh.
    RitzPiecewiseLinear(Mesh),
}

/// Σᵢ ωᵢ (½ σ|u′|² − f·u) − Σ g(x_N)·u(x_N).
pub fn ritz_loss<S: Scalar>(
    params: &NetworkParams<S>,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    rule: &QuadratureRule,
) -> Result<S> {
    let zero = params.b1 * 0.0;
    let mut acc = zero;
    for (x, w) in rule.pairs() {
        let fx = (problem.f)(x);
        if !fx.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        let u = eval_u(params, cutoff, x, 0);
        let du = eval_u(params, cutoff, x, 1);
        let term = du * du * (0.5 * (problem.sigma)(x)) - u * fx;
        acc = acc + term * w;
    }
    for &(xn, g) in &problem.neumann_data {
        acc = acc - eval_u(params, cutoff, xn, 0) * g;
    }
    Ok(acc)
}

/// Σᵢ ωᵢ |σu″ + σ′u′ + f|² + Σ |σu′(x_N)·n − g|².
///
/// The Dirichlet condition is imposed strongly by the cutoff, so only the
/// interior residual and the Neumann residual appear.
pub fn ls_loss<S: Scalar>(
    params: &NetworkParams<S>,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    rule: &QuadratureRule,
) -> Result<S> {
    let zero = params.b1 * 0.0;
    let mut acc = zero;
    for (x, w) in rule.pairs() {
        let fx = (problem.f)(x);
        if !fx.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        let du = eval_u(params, cutoff, x, 1);
        let ddu = eval_u(params, cutoff, x, 2);
        let r = ddu * (problem.sigma)(x) + du * (problem.sigma_prime)(x) + fx;
        acc = acc + r * r * w;
    }
    for &(xn, g) in &problem.neumann_data {
        let flux = eval_u(params, cutoff, xn, 1) * ((problem.sigma)(xn) * problem.normal_at(xn));
        let r = flux - g;
        acc = acc + r * r;
    }
    Ok(acc)
}

/// Ritz energy of the piecewise-linear interpolant of u_NN at the mesh
/// breakpoints.
///
/// Per element of width h with endpoint values u_l, u_r: the gradient term
/// ½σ((u_r−u_l)/h)²·h is exact for the interpolant; the source term uses the
/// midpoint rule on f·u*, i.e. −f(mid)·(u_l+u_r)/2·h. Boundary terms are
/// exact point evaluations of the interpolant (which matches u_NN at the
/// breakpoints).
pub fn ritz_pl_loss<S: Scalar>(
    params: &NetworkParams<S>,
    cutoff: &CutoffPoly,
    problem: &ProblemSpec,
    mesh: &Mesh,
) -> Result<S> {
    let zero = params.b1 * 0.0;
    let mut acc = zero;
    let mut right_value = eval_u(params, cutoff, mesh.breakpoints()[0], 0);
    for (l, r) in mesh.elements() {
        let ul = right_value;
        let ur = eval_u(params, cutoff, r, 0);
        right_value = ur;
        let h = r - l;
        let mid = 0.5 * (l + r);
        let fmid = (problem.f)(mid);
        if !fmid.is_finite() {
            return Err(Error::NonFiniteIntegrand { x: mid });
        }
        let slope = (ur - ul) * (1.0 / h);
        let gradient_term = slope * slope * (0.5 * (problem.sigma)(mid) * h);
        let source_term = (ul + ur) * (0.5 * fmid * h);
        acc = acc + gradient_term - source_term;
    }
    for &(xn, g) in &problem.neumann_data {
        acc = acc - eval_u(params, cutoff, xn, 0) * g;
    }
    Ok(acc)
}
