//! Branched ideal triangulations of closed surfaces with marked vertices.
//!
//! The crate models loose triangulations as slot gluings ([`complex`]),
//! branchings on them ([`branching`]), the branched move calculus
//! ([`moves`]), the dual train track and its switching cycles ([`spine`]),
//! connectivity algorithms ([`transit`]), distinguished and random
//! instances ([`builders`]) and the JSON formats plus the claim runner
//! ([`io`], [`verify`]).

pub mod branching;
pub mod builders;
pub mod complex;
pub mod io;
pub mod linalg;
pub mod moves;
pub mod spine;
mod surgery;
pub mod transit;
pub mod verify;

pub use branching::{Branching, BranchingError, DeltaSet};
pub use complex::{ComplexError, EdgeId, Gluing, Nutshell, Slot, Star, SurfaceClass, Triangulation, Vertex};
pub use moves::{FlipClass, Move, MoveError, MoveLog};
