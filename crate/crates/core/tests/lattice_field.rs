use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiclassical_core::hjnd::TimeGrid;
use semiclassical_core::lattice_field::*;

fn mode(amplitude: f64, wavenumber: Vec<i64>, phase: f64) -> FourierMode {
    FourierMode { amplitude, wavenumber, phase }
}

fn phi4_problem(amplitude: f64, grid: TimeGrid) -> LatticeProblem {
    let lat = Lattice::new(1, 32, 0.25).unwrap();
    let modes = vec![mode(amplitude, vec![1], 0.0), mode(0.5 * amplitude, vec![2], 0.9)];
    let poly = FieldPolynomial::new(&[(2, 0.5), (4, 0.5)]).unwrap();
    LatticeProblem::new(lat, grid, poly, &BoundaryData::Modes(modes)).unwrap()
}

#[test]
fn free_field_two_dimensional_oracle() {
    let lat = Lattice::new(2, 16, 0.5).unwrap();
    let grid = TimeGrid::uniform(20.0, 200).unwrap();
    let modes = vec![mode(0.6, vec![1, 0], 0.0), mode(0.2, vec![2, 3], 0.5)];
    let p = LatticeProblem::new(lat, grid.clone(), FieldPolynomial::free(1.3).unwrap(), &BoundaryData::Modes(modes)).unwrap();
    let m = minimize_field_from(&p, vec![0.0; p.slices() * lat.sites()], &FieldOptions::default()).unwrap();
    let oracle = free_field_action(&lat, &grid, 1.3, &p.boundary);
    assert!((m.action - oracle).abs() <= 1e-9 * oracle, "{} vs {oracle}", m.action);
    // δS/δφ̂_k = ω̂_k φ̂_k
    let g = fourier(&lat, &functional_gradient(&p, &m, GradientMode::Discrete));
    let f = fourier(&lat, &p.boundary);
    let w = lattice_dispersion(&lat, &grid, 1.3);
    let scale = f.iter().zip(&w).map(|(c, w)| (c * w).norm()).fold(0.0, f64::max);
    for k in 0..lat.sites() {
        assert!((g[k] - f[k] * w[k]).norm() <= 1e-8 * scale, "mode {k}");
    }
}

#[test]
fn infinite_horizon_dispersion() {
    let grid = TimeGrid::uniform(40.0, 400).unwrap();
    let d: f64 = 0.1;
    for mu2 in [1.0, 4.0, 30.0] {
        let b = 1.0 + 0.5 * d * d * mu2;
        let r = b - (b * b - 1.0).sqrt();
        let w = (1.0 / r - r) / (2.0 * d);
        assert!((mode_frequency(&grid, mu2) - w).abs() < 1e-12 * w);
    }
}

#[test]
fn free_field_slices_shrink_into_the_past() {
    let lat = Lattice::new(1, 32, 0.25).unwrap();
    let grid = TimeGrid::uniform(15.0, 150).unwrap();
    let modes = vec![mode(1.0, vec![1], 0.0), mode(0.7, vec![5], 0.2)];
    let p = LatticeProblem::new(lat, grid, FieldPolynomial::free(1.0).unwrap(), &BoundaryData::Modes(modes)).unwrap();
    let m = minimize_field(&p, &FieldOptions::default()).unwrap();
    let sup: Vec<f64> = (0..p.slices()).map(|j| m.slice(&p, j).iter().fold(0.0f64, |a, b| a.max(b.abs()))).collect();
    assert!(sup.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
}

#[test]
fn quartic_deviation_from_free_is_fourth_order() {
    let grid = TimeGrid::uniform(20.0, 200).unwrap();
    let mut diffs = Vec::new();
    let amps = [0.02, 0.04, 0.08];
    for a in amps {
        let p = phi4_problem(a, grid.clone());
        let m = minimize_field(&p, &FieldOptions::default()).unwrap();
        let free = free_field_action(&p.lattice, &grid, 1.0, &p.boundary);
        diffs.push(m.action - free);
    }
    for i in 0..2 {
        let slope = (diffs[i + 1] / diffs[i]).ln() / (amps[i + 1] / amps[i]).ln();
        assert!((slope - 4.0).abs() < 0.05, "slope {slope}");
    }
}

#[test]
fn endpoint_gradient_matches_value_differences() {
    let p = phi4_problem(0.8, TimeGrid::uniform(20.0, 200).unwrap());
    let opts = FieldOptions::default();
    let m = minimize_field(&p, &opts).unwrap();
    let g = functional_gradient(&p, &m, GradientMode::Discrete);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sites: Vec<usize> = (0..20).map(|_| rng.random_range(0..p.lattice.sites())).collect();
    let fd = fd_gradient(&p, &m, &sites, 1e-4, &opts).unwrap();
    let scale = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for (s, v) in sites.iter().zip(&fd) {
        assert!((g[*s] - v).abs() <= 1e-5 * scale, "site {s}: {} vs {v}", g[*s]);
    }
}

#[test]
fn reconstructed_gradient_is_second_order() {
    let mut errs = Vec::new();
    for steps in [200, 400] {
        let p = phi4_problem(0.5, TimeGrid::uniform(20.0, steps).unwrap());
        let m = minimize_field(&p, &FieldOptions::default()).unwrap();
        let a = functional_gradient(&p, &m, GradientMode::Discrete);
        let b = functional_gradient(&p, &m, GradientMode::Reconstructed);
        errs.push(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    assert!((errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
}

#[test]
fn random_starts_reach_the_same_minimum() {
    let p = phi4_problem(1.2, TimeGrid::uniform(20.0, 200).unwrap());
    let opts = FieldOptions::default();
    let reference = minimize_field(&p, &opts).unwrap().action;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let init: Vec<f64> = (0..p.slices() * p.lattice.sites()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = minimize_field_from(&p, init, &opts).unwrap().action;
        assert!((s - reference).abs() <= 1e-10 * reference, "{s} vs {reference}");
    }
}

#[test]
fn time_refinement_is_second_order() {
    let s: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| minimize_field(&phi4_problem(0.8, TimeGrid::uniform(20.0, n).unwrap()), &FieldOptions::default()).unwrap().action)
        .collect();
    let ratio = (s[0] - s[1]) / (s[1] - s[2]);
    assert!((ratio.log2() - 2.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn gaussian_bound_reports() {
    let grid = TimeGrid::uniform(20.0, 200).unwrap();
    let mut slack = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        let p = phi4_problem(a, grid.clone());
        let m = minimize_field(&p, &FieldOptions::default()).unwrap();
        let r = gaussian_bound(&p, &m, None).unwrap();
        assert!(r.holds() && r.slack > 0.0);
        slack.push(r.slack);
        assert!(gaussian_bound(&p, &m, Some(0.6)).is_err());
    }
    assert!(slack.windows(2).all(|w| w[1] > w[0]));

    let lat = Lattice::new(1, 32, 0.25).unwrap();
    let p = LatticeProblem::new(lat, grid, FieldPolynomial::free(1.0).unwrap(), &BoundaryData::Modes(vec![mode(1.0, vec![2], 0.0)])).unwrap();
    let m = minimize_field(&p, &FieldOptions::default()).unwrap();
    let r = gaussian_bound(&p, &m, None).unwrap();
    assert!(r.slack.abs() <= 1e-10 * r.action);
    let zero = p.with_boundary(vec![0.0; 32]).unwrap();
    let m0 = minimize_field(&zero, &FieldOptions::default()).unwrap();
    assert_eq!(gaussian_bound(&zero, &m0, None).unwrap().slack, 0.0);
}

#[test]
fn short_extent_is_reported() {
    let p = phi4_problem(1.0, TimeGrid::uniform(3.0, 60).unwrap());
    let err = minimize_field(&p, &FieldOptions::default()).unwrap_err();
    assert!(matches!(err, semiclassical_core::Error::HorizonTooShort { .. }), "{err}");
}
