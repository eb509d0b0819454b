//! Hot-potato aware IGP link weight optimization.
//!
//! The intradomain topology is extended with one virtual destination node per
//! aggregate of hot-potato prefixes. Routing traffic to those nodes over
//! zero-weight interdomain and virtual arcs makes the egress choice of BGP's
//! hot-potato rule part of ordinary shortest-path routing, so a classical
//! local-search weight optimizer sees the loads that would really appear.
//!
//! Module map:
//!
//! * [`model`]: topologies, peering links, extended topologies.
//! * [`igp`]: shortest paths, ECMP splitting, link loads.
//! * [`bgp`]: route dump parsing and prefix classification.
//! * [`tm`]: egress-set aggregation and the aggregated traffic matrix.
//! * [`objective`]: piecewise-linear link cost and the network cost.
//! * [`lwo`]: the tabu local-search weight optimizer.
//! * [`sim`]: independent hot-potato forwarding simulation and mode comparison.
//! * [`synth`]: seeded generators for synthetic instances.

pub mod bgp;
pub mod error;
pub mod fixtures;
pub mod igp;
pub mod lwo;
pub mod model;
pub mod objective;
pub mod quantity;
pub mod sim;
pub mod synth;
pub mod tm;

pub use error::{Error, Result};
pub use quantity::{Q, Scalar};
