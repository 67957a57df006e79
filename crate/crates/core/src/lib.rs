//! Time-dependent scattering of one-dimensional wave packets off cut-off potentials,
//! evaluated from stationary amplitudes, bound-state residues and a direct solver.

pub mod amplitudes;
pub mod bound_states;
pub mod error;
pub mod evolve;
pub mod fd_oracle;
pub mod numeric;
pub mod potential;
pub mod quadrature;
pub mod transfer;
pub mod wavepacket;

pub use error::{Error, Result};
pub use numeric::C64;
pub use potential::{Delta, PhysicsParams, PotentialSpec, Segment};
pub use wavepacket::PacketSpec;
