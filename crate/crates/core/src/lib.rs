//! Calculus engine for transitive Lie algebroids in local trivializations.
//!
//! The engine works over a single manifold chart (or an atlas of chart boxes)
//! and represents every geometric object in a local trivialization:
//!
//! - [`poly`] — sparse multivariate polynomials over chart coordinates;
//! - [`liealg`] — structure constants, Killing form, adjoint maps, presets;
//! - [`forms`] — the bigraded complex Ω^r(U) ⊗ Λ^s g* ⊗ V with its de Rham,
//!   Chevalley-Eilenberg and total differentials, and the mixed basis
//!   q^a = A^a − θ^a;
//! - [`gluing`] — atlases, transition cocycles, transport of local forms;
//! - [`metric`] — inner metrics, metric triples, the h-pairing and Hodge star;
//! - [`integrate`] — fibre (inner) integration, volume forms, commutation
//!   checks;
//! - [`gauge`] — generalized connections, curvature decomposition, gauge
//!   transformations, Yang-Mills-Higgs action functionals;
//! - [`config`] / [`corpus`] — serialization schemas and seeded random test
//!   corpora shared with the command-line driver.

pub mod config;
pub mod corpus;
pub mod error;
pub mod forms;
pub mod gauge;
pub mod gluing;
pub mod integrate;
pub mod liealg;
pub mod metric;
pub mod poly;
pub mod report;

pub use error::Error;
