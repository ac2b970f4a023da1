//! Spanning trees on a net, their tours, flattened tours and the sums that
//! control their length.

pub mod excess;
pub mod graph;
pub mod tour;
pub mod tst;

pub use excess::{flatten_and_excess, ExcessReport};
pub use graph::{length_points_check, TreeGraph};
pub use tour::{euler_tour, Traversal};
pub use tst::{beta_sum, count_growth_check, GrowthConstants};
