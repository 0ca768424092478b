//! Numerical laboratory for Yamabe-type equations reduced along isoparametric
//! functions of semi-Euclidean spaces and pseudospheres.
//!
//! The reduced equations are singular Emden-Fowler problems
//! `w'' + q(r)w' = ±f(w)`. This crate provides the coefficient families and
//! their hypothesis checks, a singular initial value solver, qualitative
//! diagnostics, nodal shooting on `[0, π]` with gluing to entire profiles,
//! and the level-set geometry that lifts profiles back to solutions.

pub mod coefficients;
pub mod diagnostics;
pub mod geometry;
pub mod quadrature;
pub mod shooting;
pub mod singular_ivp;
pub mod suites;
