//! Problem fixtures shared by the benchmarks.

use semiclassical_core::lattice_field::{BoundaryData, FieldPolynomial, FourierMode, Lattice, LatticeProblem};
use semiclassical_core::{Monomial, PotentialND, TimeGrid};

pub fn coupled_quartic() -> PotentialND {
    PotentialND::new(1.0, vec![1.0, 2.0], vec![Monomial::new(vec![2, 2], 0.05)]).expect("valid potential")
}

/// φ⁴ on a 1-D lattice of `sites` points with two boundary modes.
pub fn phi4_lattice(sites: usize, steps: usize) -> LatticeProblem {
    let lattice = Lattice::new(1, sites, 0.25).expect("valid lattice");
    let grid = TimeGrid::uniform(20.0, steps).expect("valid grid");
    let modes = vec![
        FourierMode { amplitude: 0.5, wavenumber: vec![1], phase: 0.0 },
        FourierMode { amplitude: 0.25, wavenumber: vec![3], phase: 0.4 },
    ];
    let poly = FieldPolynomial::new(&[(2, 0.5), (4, 0.5)]).expect("valid polynomial");
    LatticeProblem::new(lattice, grid, poly, &BoundaryData::Modes(modes)).expect("valid problem")
}
