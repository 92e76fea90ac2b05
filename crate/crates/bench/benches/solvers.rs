use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use semiclassical_bench::{coupled_quartic, phi4_lattice};
use semiclassical_core::diag::solve_spectrum;
use semiclassical_core::hjnd::minimize_action;
use semiclassical_core::lattice_field::{minimize_field, FieldOptions};
use semiclassical_core::resummation::borel_pade;
use semiclassical_core::rspt::{coupling_series, rs_series};
use semiclassical_core::*;

fn hierarchy(c: &mut Criterion) {
    let v = Potential1D::quartic(0.1);
    let grid = Grid1D::uniform(24.0, 0.1).unwrap();
    c.bench_function("fundamental_solution_1d", |b| b.iter(|| FundamentalSolution1D::new(black_box(&v), &grid).unwrap()));
    let sol = FundamentalSolution1D::new(&v, &grid).unwrap();
    let mut g = c.benchmark_group("ground_hierarchy");
    for k in [2usize, 4, 6] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| HierarchyState::ground(&sol, k, HierarchyOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn perturbation(c: &mut Criterion) {
    let v = Potential1D::quartic(0.1);
    let mut g = c.benchmark_group("rs_series");
    for (name, a) in [("exact", Arithmetic::Exact), ("float", Arithmetic::Float)] {
        g.bench_function(name, |b| b.iter(|| rs_series(black_box(&v), 0, 8, a).unwrap()));
    }
    g.finish();
    let s = coupling_series(4, 0, 10, Arithmetic::Exact).unwrap();
    c.bench_function("borel_pade_5_4", |b| b.iter(|| borel_pade(black_box(&s), 5, 4, 0.1, &BorelOptions::default()).unwrap()));
}

fn spectrum(c: &mut Criterion) {
    let p = SpectralProblem::from_potential(&Potential1D::quartic(0.1), 1.0).unwrap();
    let o = SpectrumOptions::default();
    c.bench_function("diag_fd_1001", |b| b.iter(|| solve_spectrum(&p, Method::FiniteDifference, 1001, 4, &o).unwrap()));
    c.bench_function("diag_basis_160", |b| b.iter(|| solve_spectrum(&p, Method::HarmonicBasis, 160, 4, &o).unwrap()));
}

fn trajectories(c: &mut Criterion) {
    let v = coupled_quartic();
    let grid = TimeGrid::geometric(25.0, 1e-3, 1.002).unwrap();
    let o = TrajectoryOptions::default();
    c.bench_function("minimize_action_2d", |b| b.iter(|| minimize_action(&v, black_box(&[1.0, 1.0]), &grid, &o).unwrap()));
}

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimize_field_phi4");
    g.sample_size(10);
    for sites in [32usize, 64] {
        let p = phi4_lattice(sites, 200);
        g.bench_with_input(BenchmarkId::from_parameter(sites), &p, |b, p| b.iter(|| minimize_field(p, &FieldOptions::default()).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, hierarchy, perturbation, spectrum, trajectories, lattice);
criterion_main!(benches);
