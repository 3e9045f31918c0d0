//! Equivalence transformations of the wave family
//! `u_tt = f_x + g_y + h` with `f, g, h` functions of `(x, y, t, u, u_x, u_y, u_t)`.
//!
//! The [`expr`] kernel supplies exact rational-function algebra; the other
//! modules build generators, check case constraints, exponentiate the
//! closed-form transformations and transport solutions between members.

pub mod cli;
pub mod constraints;
pub mod error;
pub mod expr;
pub mod family;
pub mod generators;
pub mod transform;
pub mod transport;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Symbol};
