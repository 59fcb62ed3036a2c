//! A variational PDE-solving laboratory: trains a single-hidden-layer
//! network to minimize Ritz or Least-Squares energies of 1D boundary-value
//! problems, under interchangeable quadrature rules — fixed Gauss, Monte
//! Carlo, uniform midpoint, a piecewise-linear surrogate, h-adaptive
//! integration, and a midpoint rule regularized by a certified integration
//! error bound — to reproduce, detect, and cure quadrature-driven
//! overfitting.

pub mod adaptive;
pub mod autodiff;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod network;
pub mod problems;
pub mod quadrature;
pub mod regularizer;
pub mod training;

pub use error::{Error, Result};
