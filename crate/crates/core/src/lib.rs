//! Semiclassical spectral toolkit: Hamilton-Jacobi fundamental solutions,
//! ℏ-order transport hierarchies, and the oracles used to check them.

pub mod diag;
pub mod error;
pub mod hj1d;
pub mod hjnd;
pub mod lattice_field;
pub mod numerics;
pub mod potentials;
pub mod resummation;
pub mod rspt;
pub mod transport1d;

pub use diag::{Method, SpectralProblem, SpectralResult, SpectrumOptions};
pub use error::{Error, Result};
pub use hj1d::{FundamentalSolution1D, Grid1D, SternbergMap};
pub use hjnd::{TimeGrid, Trajectory, TrajectoryOptions};
pub use lattice_field::{BoundaryData, FieldMinimizer, FieldOptions, FieldPolynomial, FourierMode, Lattice, LatticeProblem};
pub use potentials::{
    CheckResult, Hypothesis, Monomial, Potential, Potential1D, PotentialND, SamplingBox, Sector,
    Superpotential, ValidationReport,
};
pub use resummation::{BorelOptions, ResummationMethod, ResummationReport};
pub use rspt::{Arithmetic, PowerSeries, SeriesVariable};
pub use transport1d::{excited_leading, susy_ground, Assembled, ExcitedState, HierarchyOptions, HierarchyState};
