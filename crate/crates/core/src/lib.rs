//! Deflation, Newton refinement and interval certification of isolated
//! singular zeros of square polynomial systems.

pub mod corpus;
pub mod deflation;
pub mod exec;
pub mod linalg;
pub mod poly;
pub mod refine;
pub mod regularity;
pub mod report;
pub mod text;
pub mod verify;

pub use linalg::{Matrix, RankMode};
pub use poly::{Monomial, Point, PolyError, PolySystem, Polynomial, Variables};
