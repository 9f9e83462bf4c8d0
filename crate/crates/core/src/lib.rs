//! Clearing payment vectors for financial obligation networks, the
//! system-wide shock scenarios under which every bank defaults, and the
//! generalized Katz centrality the clearing losses reduce to under those
//! shocks.
//!
//! ```
//! use clearnet::{clearing, equivalence, ClearingParams, FinancialSystem};
//! use clearnet::nalgebra::{DMatrix, DVector};
//!
//! let system = FinancialSystem::new(
//!     DMatrix::from_row_slice(3, 3, &[0., 2., 8., 3., 0., 7., 0., 0., 0.]),
//!     DVector::from_vec(vec![8., 9., 1.]),
//!     None,
//! )
//! .unwrap();
//! let params = ClearingParams::new(0.8);
//! let solution = clearing::fictitious_default_sequence(&system, &params).unwrap();
//! assert_eq!(solution.bank_payments(), &[10.0, 10.0]);
//!
//! let report =
//!     equivalence::verify_full_shock_equivalence(&system, &params, &0.5.into(), 1e-8).unwrap();
//! assert!(report.pass);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod centrality;
pub mod clearing;
pub mod cli;
pub mod equivalence;
pub mod error;
pub mod generate;
pub mod io;
pub mod linalg;
pub mod model;
pub mod report;
pub mod shocks;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{ClearingParams, DefaultIndicator, FinancialSystem, Rate, RelativeClaims};
pub use nalgebra;
