//! Open-system simulation of a Rydberg atom coupled to charged mechanical
//! cantilevers: Hilbert-space plumbing, closed-form parameter estimates,
//! Lindblad dynamics, pulse protocols and the reported observables.

pub mod cli;
pub mod dynamics;
pub mod hilbert;
pub mod observables;
pub mod physmodel;
pub mod protocols;
