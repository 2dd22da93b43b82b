//! Recoverability and identifiability workbench for coupled low-rank CP
//! models of 3D marginals of a probability mass function.
//!
//! An order-`M` PMF tensor with `I` bins per variable is modeled by a rank-`R`
//! CP decomposition with simplex constraints. Only a set of 3D marginals is
//! observed, selected by a *coupling*: a connected 3-uniform hypergraph over
//! the variables. This crate answers, for a given coupling:
//!
//! * how many degrees of freedom the observed marginals carry
//!   ([`recoverability::n_obs`]) and the resulting necessary rank bound;
//! * the largest rank at which the Jacobian of the truncated simplex
//!   parameterization is generically full column rank
//!   ([`recoverability::rmax_search`]), with reproducible certificates;
//! * every closed-form identifiability bound that applies
//!   ([`bounds::report`]), including the reduced-size bounds for Cartesian
//!   couplings ([`cartesian`]).
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`tensor`] | dense column-major tensors, CPD evaluation, marginals, Kronecker products |
//! | [`coupling`] | hypergraph couplings: full, random, balanced, Cartesian |
//! | [`param`] | truncated parameter vectors, the marginal map and its Jacobian |
//! | [`recoverability`] | rank tests, degrees of freedom, rank search |
//! | [`cartesian`] | stacked tensors and the reduced-size factorization |
//! | [`bounds`] | Kruskal, Bocci and Kargas bounds plus the merged report |
//! | [`cli`] | command-line front end and seeded, resumable scans |

pub mod bounds;
pub mod cartesian;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod exact;
pub mod param;
pub mod recoverability;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
