//! Exact mod 2 computations of the derived functors of destabilization
//! and the Singer-construction spectral sequence around them.

pub mod amodule;
pub mod chart;
pub mod dlfree;
pub mod f2linalg;
pub mod hopfss;
pub mod modlib;
pub mod singer;
pub mod steenrod;
