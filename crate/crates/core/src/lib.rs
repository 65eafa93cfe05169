//! Numerical experiments for anisotropic (orthotropic) p-Laplacian type
//! evolution equations: critical exponents, an explicit conservative solver,
//! decay/support diagnostics, anisotropic Sobolev inequalities, a
//! self-similar profile construction and a recursion lemma.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod exponents;
pub mod lemmas;
pub mod numeric;
pub mod plot;
pub mod selfsim;
pub mod sobolev;
pub mod solver;
