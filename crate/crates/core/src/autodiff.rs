//! Minimal reverse-mode automatic differentiation on a Wengert tape.
//!
//! Every loss in this crate is a scalar function of the trainable weights, so
//! reverse mode gives the full gradient in a single backward sweep. Operations
//! record their local partial derivatives at forward time; the backward pass
//! is a plain reverse iteration over the tape.
//!
//! Code that must run both as a plain `f64` evaluation and under the tape is
//! written against the [`Scalar`] trait.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

/// Record of a scalar computation; owns all intermediate values.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    /// Creates an independent variable (a leaf of the graph).
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [0, 0],
            partials: [0.0, 0.0],
        });
        Var {
            tape: self,
            idx,
            value,
        }
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    fn unary(&self, a: &Var<'_>, value: f64, da: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [a.idx, 0],
            partials: [da, 0.0],
        });
        Var {
            tape: self,
            idx,
            value,
        }
    }

    fn binary(&self, a: &Var<'_>, b: &Var<'_>, value: f64, da: f64, db: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [a.idx, b.idx],
            partials: [da, db],
        });
        Var {
            tape: self,
            idx,
            value,
        }
    }

    /// Backward sweep from `output`; returns the adjoint of every node.
    ///
    /// The gradient with respect to a leaf created by [`Tape::var`] is read
    /// off at that leaf's index.
    pub fn gradient(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adjoint = vec![0.0; nodes.len()];
        adjoint[output.idx as usize] = 1.0;
        for i in (0..nodes.len()).rev() {
            let bar = adjoint[i];
            if bar == 0.0 {
                continue;
            }
            let node = nodes[i];
            for k in 0..2 {
                let p = node.parents[k] as usize;
                if p != i {
                    adjoint[p] += node.partials[k] * bar;
                }
            }
        }
        adjoint
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// A value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    value: f64,
}

impl<'t> Var<'t> {
    pub fn index(&self) -> usize {
        self.idx as usize
    }
}

/// Numeric type that losses and network evaluations are generic over.
///
/// Implemented by `f64` (plain evaluation) and [`Var`] (taped evaluation).
/// Constants appear only as `f64` on the right-hand side of operators, which
/// keeps the trait free of a tape-dependent `from_f64`.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    fn abs(self) -> Self;
    fn exp(self) -> Self;
    fn tanh(self) -> Self;
    fn recip(self) -> Self;
}

impl Scalar for f64 {
    fn value(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(self) -> f64 {
        self.value
    }

    /// |x| with the subgradient convention sign(0) = 0.
    fn abs(self) -> Self {
        let s = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.tape.unary(&self, self.value.abs(), s)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.tape.unary(&self, e, e)
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.tape.unary(&self, t, 1.0 - t * t)
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.value;
        self.tape.unary(&self, r, -r * r)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self::Output {
        self.tape
            .binary(&self, &rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self::Output {
        self.tape
            .binary(&self, &rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self::Output {
        self.tape
            .binary(&self, &rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self::Output {
        let v = self.value / rhs.value;
        self.tape
            .binary(&self, &rhs, v, 1.0 / rhs.value, -v / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self::Output {
        self.tape.unary(&self, -self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Self::Output {
        self.tape.unary(&self, self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Self::Output {
        self.tape.unary(&self, self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self::Output {
        self.tape.unary(&self, self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Self::Output {
        self.tape.unary(&self, self.value / rhs, 1.0 / rhs)
    }
}
