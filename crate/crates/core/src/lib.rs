//! Variable-exponent Lebesgue space machinery over finite atomic measures.
//!
//! The crate discretizes a bounded domain into weighted atoms and provides
//! exact evaluation of the objects appearing in weighted norm inequalities
//! for fractional operators: modulars and Luxemburg norms with variable
//! exponents, centered fractional maximal operators, fractional integrals,
//! and Muckenhoupt-type weight constants. On top of that sits a harness
//! that stress-tests a family of inequalities with seeded random data and
//! watches how the estimated constants behave under grid refinement.
//!
//! ```
//! use std::sync::Arc;
//! use varlex_core::domain::DomainSpec;
//! use varlex_core::fields::ScalarField;
//! use varlex_core::space::luxemburg_norm;
//!
//! let domain = Arc::new(
//!     DomainSpec::LebesgueGrid {
//!         lo: vec![0.0, 0.0],
//!         hi: vec![1.0, 1.0],
//!         resolution: vec![16, 16],
//!         ahlfors_dim: None,
//!     }
//!     .build()?,
//! );
//! let f = ScalarField::constant(Arc::clone(&domain), 3.0)?;
//! let p = ScalarField::constant(Arc::clone(&domain), 2.0)?;
//! let norm = luxemburg_norm(&f, &p, None, None)?;
//! assert!((norm.value - 3.0).abs() < 1e-9);
//! # Ok::<(), varlex_core::Error>(())
//! ```

pub mod domain;
pub mod error;
pub mod fields;
pub mod operators;
pub mod space;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
