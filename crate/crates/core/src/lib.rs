//! Relative contact homology of the tight contact forms
//! `alpha_n = cos(nz) dx + sin(nz) dy` on `T^3` and of the Giroux forms
//! `alpha_h = cos(h(z)) dx + sin(h(z)) dy` on torus bundles.
//!
//! The crate builds everything the homology computation rests on explicitly:
//! the adapted frame `(xi, v, beta, w)`, the transport maps along `xi` and
//! `v`, conjugate points, periodic Reeb orbits and their symmetry-broken
//! generators, configurations at infinity with their fiber winding, and the
//! integer chain complexes together with their `Z_k`-equivariant quotients.

pub mod cli;
pub mod contact;
pub mod error;
pub mod flows;
pub mod formats;
pub mod homology;
pub mod infinity;
pub mod manifold;
pub mod orbits;
pub mod stability;

pub use contact::{ContactFamily, MonotoneFunction, SampledMonotone};
pub use error::{Error, Result};
pub use manifold::{GluingMatrix, HomotopyClass2, HomotopyClass3, TorusPoint};
