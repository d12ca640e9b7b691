//! Numerical certification and refutation of metrics on the real line.
//!
//! A candidate `d(x, y)` is written in a small expression language
//! ([`expr`]), differentiated with hyper-dual numbers or difference-quotient
//! ladders ([`autodiff`]) and pushed through a pipeline of sufficient
//! conditions ([`certify`]). Candidates that do not pass are searched for
//! triangle-inequality counterexamples ([`search`]) and screened against
//! necessary conditions on one-sided derivatives ([`necessary`]).
//! Translation-invariant candidates `d(x, y) = f(y − x)` have their own exact
//! characterisation through subadditivity of the generator ([`subadditive`]).

pub mod autodiff;
pub mod catalog;
pub mod certify;
pub mod cli;
pub mod expr;
pub mod grid;
pub mod necessary;
pub mod quadrature;
pub mod search;
pub mod subadditive;
