//! Boundary-value problem presets.
//!
//! All presets are instances of −(σ u′)′ = f on (a, b) with a homogeneous
//! Dirichlet condition on part of the boundary and Neumann data g on the
//! rest. The outward normal is −1 at a and +1 at b.

use crate::error::{Error, Result};
use crate::network::CutoffPoly;

/// Data functions and boundary sets for one model problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub domain: (f64, f64),
    pub sigma: fn(f64) -> f64,
    pub sigma_prime: fn(f64) -> f64,
    pub f: fn(f64) -> f64,
    pub f_prime: fn(f64) -> f64,
    /// ‖f‖∞ over the domain; `None` marks unbounded (singular) data.
    pub f_sup: Option<f64>,
    pub f_prime_sup: Option<f64>,
    pub dirichlet_points: Vec<f64>,
    /// (boundary point, g value) pairs.
    pub neumann_data: Vec<(f64, f64)>,
    pub exact_u: Option<fn(f64) -> f64>,
    pub exact_u_prime: Option<fn(f64) -> f64>,
    pub exact_energy: Option<f64>,
}

impl ProblemSpec {
    /// Cutoff polynomial vanishing at the Dirichlet points, with sup norms
    /// taken over this problem's domain.
    pub fn cutoff(&self) -> CutoffPoly {
        CutoffPoly::new(self.dirichlet_points.clone(), self.domain.0, self.domain.1)
    }

    /// Outward normal at a boundary point.
    pub fn normal_at(&self, x: f64) -> f64 {
        if (x - self.domain.0).abs() <= (x - self.domain.1).abs() {
            -1.0
        } else {
            1.0
        }
    }

    pub fn exact_u(&self) -> Result<fn(f64) -> f64> {
        self.exact_u
            .ok_or_else(|| Error::MissingExactSolution(self.name.to_string()))
    }
}

/// −u″ = 0.21 x^(−1.3) on (0, 10), u(0) = 0, u′(10) = 0.7/10^0.3.
///
/// Exact solution x^0.7; the source is singular at 0, so the sup norms are
/// unbounded and the certified regularizer rejects this problem.
pub fn model_problem_1() -> ProblemSpec {
    ProblemSpec {
        name: "mp1",
        domain: (0.0, 10.0),
        sigma: |_| 1.0,
        sigma_prime: |_| 0.0,
        f: |x| 0.21 * x.powf(-1.3),
        f_prime: |x| 0.21 * -1.3 * x.powf(-2.3),
        f_sup: None,
        f_prime_sup: None,
        dirichlet_points: vec![0.0],
        neumann_data: vec![(10.0, 0.7 / 10f64.powf(0.3))],
        exact_u: Some(|x| x.powf(0.7)),
        exact_u_prime: Some(|x| 0.7 * x.powf(-0.3)),
        // Antiderivative of the energy terms: (0.6125 - 0.525 - 0.7) * 10^0.4.
        exact_energy: Some(-0.6125 * 10f64.powf(0.4)),
    }
}

/// u″ = 2 on (0, 10), u(0) = 0, u′(10) = 20, written as −u″ = f with f ≡ −2.
///
/// Exact solution x²; exact energy −2000/3.
pub fn model_problem_2() -> ProblemSpec {
    ProblemSpec {
        name: "mp2",
        domain: (0.0, 10.0),
        sigma: |_| 1.0,
        sigma_prime: |_| 0.0,
        f: |_| -2.0,
        f_prime: |_| 0.0,
        f_sup: Some(2.0),
        f_prime_sup: Some(0.0),
        dirichlet_points: vec![0.0],
        neumann_data: vec![(10.0, 20.0)],
        exact_u: Some(|x| x * x),
        exact_u_prime: Some(|x| 2.0 * x),
        exact_energy: Some(-2000.0 / 3.0),
    }
}

/// −u″ = 0 on (0, 1), u(0) = u′(1) = 0; the exact solution is identically 0.
pub fn ls_example_problem() -> ProblemSpec {
    ProblemSpec {
        name: "ls0",
        domain: (0.0, 1.0),
        sigma: |_| 1.0,
        sigma_prime: |_| 0.0,
        f: |_| 0.0,
        f_prime: |_| 0.0,
        f_sup: Some(0.0),
        f_prime_sup: Some(0.0),
        dirichlet_points: vec![0.0],
        neumann_data: vec![(1.0, 0.0)],
        exact_u: Some(|_| 0.0),
        exact_u_prime: Some(|_| 0.0),
        exact_energy: Some(0.0),
    }
}

/// Looks up a preset by the name used in configs and on the CLI.
pub fn by_name(name: &str) -> Result<ProblemSpec> {
    match name {
        "mp1" => Ok(model_problem_1()),
        "mp2" => Ok(model_problem_2()),
        "ls0" => Ok(ls_example_problem()),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

pub fn all_names() -> &'static [&'static str] {
    &["mp1", "mp2", "ls0"]
}
