//! Generalized melonic bubbles and their large-N combinatorics.
//!
//! Bubbles are edge-colored bipartite graphs encoding tensor invariants. The
//! crate recognizes generalized melonic (GM) bubbles, decomposes them into
//! trees of quartic bubbles, enumerates Feynman graphs with their large-N
//! degree, maps quartic graphs to decorated combinatorial maps, and checks
//! the large-N covariance and the tree-indexed matrix model numerically.

pub mod bubble;
pub mod color;
pub mod dot;
pub mod feynman;
pub mod gluing;
pub mod gm;
pub mod ifield;
pub mod large_n;
pub mod matrix_model;
pub mod plane_tree;
pub mod random;
pub mod rational;
pub mod series;

pub use bubble::{Bidipole, Bubble, BubbleError, RawBubble, RawEdge, Side, VertexId};
pub use color::{ColorSet, ColorSetError};
pub use gm::{recognize_gm, scaling_coefficient, GmCertificate, InsertionStep, Pairing};
