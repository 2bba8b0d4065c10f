//! Zeros, the abelian integral, imaginary rays, the separatrix graph and
//! dual cycles of a real-normalized differential.

pub mod zeros;
pub mod integral;
pub mod ray;
pub mod graph;
pub mod dual;
