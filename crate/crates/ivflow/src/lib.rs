//! Autonomous vector fields that interpolate near-identity maps.
//!
//! A near-identity map `F(x) = x + eps*G(x)` is generally not the time-`eps`
//! map of any autonomous vector field, but one can come surprisingly close.
//! This crate builds the order-`n` interpolating vector field
//!
//! ```text
//! X_n(x) = eps^{-1} sum_{k=1}^{n} p_{nk} (F^k(x) - F^{-k}(x))
//! ```
//!
//! whose time-`eps` flow matches `F` to `O(eps^{2n+1})`, and uses it to
//!
//! * integrate approximate flows of a map ([`flow`]),
//! * build adiabatic invariants of symplectic maps as line integrals of the
//!   one-form `omega(X_n, .)` ([`adiabatic`]),
//! * define Poincare sections *for maps* by projecting orbit points onto a
//!   codimension-one surface along `X_n` ([`section`]).
//!
//! Built-in map families ([`maps`]) include the Chirikov standard map, a
//! four-dimensional Froeschle-like symplectic map, time-`eps` maps of user
//! vector fields, and q-th iterate families for dynamics near resonant
//! chains.
//!
//! ```no_run
//! use std::sync::Arc;
//! use ivflow::maps::MapFamily;
//! use ivflow::ivf::IvfField;
//! use ivflow::flow::{advance, IntegratorSettings};
//!
//! let map = Arc::new(MapFamily::standard_map(0.1));
//! let field = IvfField::new(map, 5).unwrap();
//! let y = advance(&field, &[1.0, 0.5], 0.1, &IntegratorSettings::default()).unwrap();
//! println!("{y:?}");
//! ```
//!
//! Each major capability has a runnable example under `examples/`; the
//! `ivflow` binary runs the same pipelines from declarative JSON configs.

pub mod adiabatic;
pub mod angle;
pub mod coeffs;
pub mod config;
pub mod error;
pub mod flow;
pub mod ivf;
pub mod linalg;
pub mod maps;
pub mod rkf78;
pub mod runner;
pub mod section;

pub use error::{Error, Result};
