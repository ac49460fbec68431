//! Motion planning for planar free-flying multi-link ("snake") robots.
//!
//! The heavy lifting happens once per robot: [`roadmap`] samples
//! self-collision-free base configurations and builds one anchored
//! roadmap per anchor point, with validated local plans and
//! precomputed swept polygons. [`tiling`] stitches translated copies
//! of those roadmaps into an implicit infinite graph covering the
//! whole self-collision-free space. At query time [`planners`]
//! traverses that graph with a discrete-RRT search that only ever
//! checks collisions against obstacles, plus a classical RRT baseline
//! for comparison. [`lattice`] is a numerical lab for the coverage
//! and reachability constructions behind the approach, and
//! [`scenario`] provides file formats, scene generators, statistics
//! and SVG rendering.

pub mod geometry2d;
pub mod lattice;
pub mod planners;
pub mod roadmap;
pub mod robot;
pub mod scenario;
pub mod tiling;
