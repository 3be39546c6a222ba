//! Symbolic regression driven by a vision-capable language model.
//!
//! The univariate engine renders a dataset as a plot, asks an LLM for
//! function ansätze, fits their free parameters numerically, and evolves the
//! population funsearch-style. A spline-edge network front end decomposes
//! multivariate targets into univariate edge problems, which are fitted the
//! same way and recomposed symbolically.

pub mod expr;
pub mod numfit;
pub mod plotgen;
