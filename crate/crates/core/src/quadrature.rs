//! Meshes and interior-point quadrature rules.
//!
//! Every rule is a flat list of (point, weight) pairs with all points
//! strictly inside the domain; boundary-touching rules such as the
//! trapezoidal rule are deliberately not provided.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sorted breakpoints partitioning [a, b] into elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    breakpoints: Vec<f64>,
}

impl Mesh {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMesh);
        }
        Ok(Mesh { breakpoints })
    }

    pub fn uniform(a: f64, b: f64, elements: usize) -> Result<Self> {
        if elements == 0 || a >= b {
            return Err(Error::InvalidMesh);
        }
        let pts = (0..=elements)
            .map(|i| a + (b - a) * i as f64 / elements as f64)
            .collect();
        Mesh::new(pts)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn element_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// (left, right) endpoints of element `j` (0-based).
    pub fn element(&self, j: usize) -> Result<(f64, f64)> {
        if j >= self.element_count() {
            return Err(Error::ElementOutOfRange {
                index: j,
                elements: self.element_count(),
            });
        }
        Ok((self.breakpoints[j], self.breakpoints[j + 1]))
    }

    pub fn elements(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn span(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Inserts the midpoint of element `j` (0-based); everything else is
    /// unchanged.
    pub fn refine_element(&self, j: usize) -> Result<Mesh> {
        let (l, r) = self.element(j)?;
        let mut pts = self.breakpoints.clone();
        pts.insert(j + 1, 0.5 * (l + r));
        Mesh::new(pts)
    }

    /// Bisects every element; the result contains every original breakpoint.
    pub fn global_refine(&self) -> Mesh {
        let mut pts = Vec::with_capacity(2 * self.breakpoints.len() - 1);
        for w in self.breakpoints.windows(2) {
            pts.push(w[0]);
            pts.push(0.5 * (w[0] + w[1]));
        }
        pts.push(*self.breakpoints.last().unwrap());
        Mesh { breakpoints: pts }
    }
}

/// How a rule was constructed; serialized into experiment outputs for
/// reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuleProvenance {
    GaussPerElement { order: usize, mesh: Mesh },
    UniformMidpoint { n: usize },
    MonteCarlo { n: usize, seed: u64 },
}

/// Flat (point, weight) realization of ∫ ≈ Σ ωᵢ f(xᵢ).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    provenance: RuleProvenance,
}

impl QuadratureRule {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> &RuleProvenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes/weights on [-1, 1], orders 1..=5.
fn gauss_nodes(order: usize) -> Result<(&'static [f64], &'static [f64])> {
    const N1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const N2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const N3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [
        0.555_555_555_555_555_6,
        0.888_888_888_888_889,
        0.555_555_555_555_555_6,
    ];
    const N4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_85,
        0.652_145_154_862_546_2,
        0.652_145_154_862_546_2,
        0.347_854_845_137_453_85,
    ];
    const N5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    match order {
        1 => Ok((&N1, &W1)),
        2 => Ok((&N2, &W2)),
        3 => Ok((&N3, &W3)),
        4 => Ok((&N4, &W4)),
        5 => Ok((&N5, &W5)),
        other => Err(Error::UnsupportedGaussOrder(other)),
    }
}

/// Composite Gauss-Legendre rule: `order` points per mesh element, exact for
/// polynomials of degree ≤ 2·order − 1 on each element.
pub fn gauss_rule(mesh: &Mesh, order: usize) -> Result<QuadratureRule> {
    let (nodes, weights) = gauss_nodes(order)?;
    let mut points = Vec::with_capacity(order * mesh.element_count());
    let mut wts = Vec::with_capacity(order * mesh.element_count());
    for (l, r) in mesh.elements() {
        let mid = 0.5 * (l + r);
        let half = 0.5 * (r - l);
        for (&n, &w) in nodes.iter().zip(weights) {
            points.push(mid + half * n);
            wts.push(half * w);
        }
    }
    Ok(QuadratureRule {
        points,
        weights: wts,
        provenance: RuleProvenance::GaussPerElement {
            order,
            mesh: mesh.clone(),
        },
    })
}

/// N equispaced midpoints x_j = a + δ(j − 1/2), δ = (b − a)/N, weight δ each.
pub fn midpoint_rule(a: f64, b: f64, n: usize) -> Result<QuadratureRule> {
    if n == 0 || a >= b {
        return Err(Error::EmptyRule);
    }
    let delta = (b - a) / n as f64;
    let points = (1..=n).map(|j| a + delta * (j as f64 - 0.5)).collect();
    Ok(QuadratureRule {
        points,
        weights: vec![delta; n],
        provenance: RuleProvenance::UniformMidpoint { n },
    })
}

/// n i.i.d. uniform points in (a, b), each with weight (b − a)/n.
/// Deterministic per seed.
pub fn monte_carlo_rule(a: f64, b: f64, n: usize, seed: u64) -> Result<QuadratureRule> {
    if n == 0 || a >= b {
        return Err(Error::EmptyRule);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n).map(|_| rng.gen_range(a..b)).collect();
    Ok(QuadratureRule {
        points,
        weights: vec![(b - a) / n as f64; n],
        provenance: RuleProvenance::MonteCarlo { n, seed },
    })
}

/// Σ ωᵢ f(xᵢ); reports the offending node if the integrand is non-finite.
pub fn integrate<F: Fn(f64) -> f64>(rule: &QuadratureRule, integrand: F) -> Result<f64> {
    let mut acc = 0.0;
    for (x, w) in rule.pairs() {
        let v = integrand(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        acc += w * v;
    }
    Ok(acc)
}
