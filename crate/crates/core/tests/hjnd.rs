use nalgebra::SymmetricEigen;
use semiclassical_core::hjnd::*;
use semiclassical_core::*;

fn coupled_quartic() -> PotentialND {
    PotentialND::new(1.0, vec![1.0, 2.0], vec![Monomial::new(vec![2, 2], 0.05)]).unwrap()
}

#[test]
fn coupled_quartic_refinement() {
    let v = coupled_quartic();
    let coarse = TimeGrid::geometric(25.0, 1e-3, 1.001).unwrap();
    let fine = TimeGrid::geometric(25.0, 1e-4, 1.0001).unwrap();
    let o = TrajectoryOptions::default();
    let a = minimize_action(&v, &[1.0, 1.0], &coarse, &o).unwrap();
    let b = minimize_action(&v, &[1.0, 1.0], &fine, &o).unwrap();
    assert!((a.action - b.action).abs() < 1e-6, "{} vs {}", a.action, b.action);
}

#[test]
fn coupled_quartic_gradient_matches_value_differences() {
    let v = coupled_quartic();
    let grid = TimeGrid::for_potential(&v).unwrap();
    let o = TrajectoryOptions::default();
    let x = [1.0, 1.0];
    let e = s0_and_gradient(&minimize_action(&v, &x, &grid, &o).unwrap());
    let h = 1e-3;
    for i in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        let sp = minimize_action(&v, &xp, &grid, &o).unwrap().action;
        let sm = minimize_action(&v, &xm, &grid, &o).unwrap().action;
        let fd = (sp - sm) / (2.0 * h);
        assert!((e.gradient[i] - fd).abs() < 1e-5, "component {i}: {} vs {fd}", e.gradient[i]);
    }
    assert!(e.hj_residual.abs() < 1e-6);
}

#[test]
fn one_dimensional_embedding() {
    let v1 = Potential1D::quartic(0.1);
    let g1 = Grid1D::uniform(8.0, 0.1).unwrap();
    let sol = FundamentalSolution1D::new(&v1, &g1).unwrap();
    let st = HierarchyState::ground(&sol, 2, HierarchyOptions::default()).unwrap();
    let vn = v1.to_nd();
    let grid = TimeGrid::for_potential(&vn).unwrap();
    let o = TrajectoryOptions::default();
    for x in [-1.5, 1.0, 2.0] {
        let tr = minimize_action(&vn, &[x], &grid, &o).unwrap();
        let e = s0_and_gradient(&tr);
        assert!((e.s0 - sol.value_at(x)).abs() < 1e-7);
        assert!((e.gradient[0] - sol.slope_at(x)).abs() < 1e-7);
        let hs = hessian_transport(&tr).unwrap();
        let k = g1.nearest(x);
        assert!((hs.last().unwrap()[(0, 0)] - sol.dds0[k]).abs() < 1e-6);
        let s1 = s1_along_flow(&tr, &hs).unwrap();
        assert!((s1 - st.a[1][k]).abs() < 1e-6, "x={x}: {s1} vs {}", st.a[1][k]);
    }
}

#[test]
fn coupled_quartic_hessian_and_symmetry() {
    let v = coupled_quartic();
    let grid = TimeGrid::for_potential(&v).unwrap();
    let o = TrajectoryOptions::default();
    let nu_min = v.nu().iter().copied().fold(f64::INFINITY, f64::min);
    let mut values = Vec::new();
    for x in [[1.2, -0.8], [-1.2, 0.8], [1.2, 0.8]] {
        let tr = minimize_action(&v, &x, &grid, &o).unwrap();
        let hs = hessian_transport(&tr).unwrap();
        let h0 = hs.last().unwrap().clone();
        assert_eq!(h0, h0.transpose());
        let eig = SymmetricEigen::new(h0).eigenvalues;
        assert!(eig.iter().all(|&l| l >= v.mass() * nu_min - 1e-9), "{eig:?}");
        values.push((tr.action, s1_along_flow(&tr, &hs).unwrap()));
    }
    // x ↦ −x and a single reflection are exact symmetries of x²y²
    for w in values.windows(2) {
        assert!((w[0].0 - w[1].0).abs() < 1e-12);
        assert!((w[0].1 - w[1].1).abs() < 1e-10);
    }
}

#[test]
fn coordinate_swap() {
    let v = PotentialND::new(1.0, vec![1.5, 1.5], vec![Monomial::new(vec![2, 2], 0.05)]).unwrap();
    let grid = TimeGrid::for_potential(&v).unwrap();
    let o = TrajectoryOptions::default();
    let a = minimize_action(&v, &[0.4, 1.3], &grid, &o).unwrap().action;
    let b = minimize_action(&v, &[1.3, 0.4], &grid, &o).unwrap().action;
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn short_horizon_is_reported() {
    let v = coupled_quartic();
    let grid = TimeGrid::geometric(2.0, 1e-3, 1.01).unwrap();
    let err = minimize_action(&v, &[1.0, 1.0], &grid, &TrajectoryOptions::default()).unwrap_err();
    assert!(matches!(err, Error::HorizonTooShort { .. }), "{err}");
}
