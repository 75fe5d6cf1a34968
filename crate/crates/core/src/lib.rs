//! Exact-arithmetic toolkit for computations in filtered unipotent matrix
//! groups and on finite abelian groups: Gowers uniformity norms, polynomial
//! maps and their Taylor coefficients, Host–Kra cubes, periodicity and
//! rationality testing, periodic lifting through fibrations, and projected
//! nilsequence evaluation.
//!
//! All group and lattice arithmetic is exact over `BigRational`; the only
//! floating-point boundary is the complex-analytic reporting layer (Gowers
//! norms, correlations, nilsequence tables).

pub mod abelian;
pub mod cubes;
pub mod error;
pub mod filtered;
pub mod lift;
pub mod linalg;
pub mod matrix;
pub mod nilseq;
pub mod polymap;
pub mod textio;

pub use error::{Error, Result};
pub use linalg::{Int, Rat};
