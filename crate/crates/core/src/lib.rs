//! Grassmann arithmetic, exterior calculus on ΠTM, flows of even and odd vector fields,
//! graded connections and 1|1 parallel transport along paths and superpaths.

pub mod bundles;
pub mod error;
pub mod exec;
pub mod flows;
pub mod grassmann;
pub mod manifold_forms;
pub mod ode;
pub mod random;
pub mod transport;

pub use error::{Error, Result};
