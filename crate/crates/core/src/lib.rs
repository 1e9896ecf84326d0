//! Syntactic multilinear algebraic branching programs over prime fields:
//! semantics, structural checks, decompositions, depth reduction and
//! partial-derivative-matrix rank tools.

pub mod abp;
pub mod corpus;
pub mod decompose;
pub mod error;
pub mod field;
pub mod formula;
pub mod gen;
pub mod interval;
pub mod fullrank;
pub mod ordered;
pub mod partition;
pub mod perm;
pub mod poly;

pub use abp::{Abp, AbpBuilder, Edge, Label, NodeId};
pub use error::{Error, Result};
pub use field::{Fe, PrimeField, DEFAULT_PRIME};
pub use perm::{OrderList, Permutation};
pub use poly::{EqualityMode, MultilinearPoly, VarSet};
