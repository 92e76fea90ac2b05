use semiclassical_core::rspt::{coupling_series, rs_series, Arithmetic};
use semiclassical_core::*;

fn solution(v: &Potential1D, half_width: f64, h: f64) -> FundamentalSolution1D {
    FundamentalSolution1D::new(v, &Grid1D::uniform(half_width, h).unwrap()).unwrap()
}

fn hermite(n: u32, xi: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * xi);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * xi * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[test]
fn harmonic_fundamental_solution() {
    let sol = solution(&Potential1D::harmonic(1.0, 1.0).unwrap(), 5.0, 0.25);
    let o = sol.grid.origin();
    assert_eq!(sol.dds0[o], 1.0);
    for (x, s) in sol.grid.nodes().iter().zip(&sol.s0) {
        assert!((s - 0.5 * x * x).abs() < 1e-13);
    }
}

#[test]
fn taylor_limit_at_origin() {
    let v = Potential1D::new(1.5, 0.8, vec![(3, 0.1), (4, 0.2)]).unwrap();
    let sol = solution(&v, 2.0, 0.1);
    let mut last = f64::INFINITY;
    for x in [0.1, 0.01, 0.001] {
        let dev = (sol.value_at(x) / (0.5 * 1.5 * 0.8 * x * x) - 1.0).abs();
        assert!(dev < last);
        last = dev;
    }
    assert!(last < 1e-3);
}

#[test]
fn sternberg_examples() {
    let harm = solution(&Potential1D::harmonic(1.0, 2.0).unwrap(), 4.0, 0.1);
    let y = harm.sternberg().unwrap();
    for (x, yy) in harm.grid.nodes().iter().zip(&y.y) {
        assert!((x - yy).abs() < 1e-14);
    }

    let sol = solution(&Potential1D::quartic(0.1), 4.0, 0.1);
    let map = sol.sternberg().unwrap();
    let x = sol.grid.nodes();
    let o = sol.grid.origin();
    assert!((map.dy[o] - 1.0).abs() < 1e-14);
    for i in 1..=o {
        let r = map.y[o + i] / x[o + i];
        assert!((r - map.y[o - i] / x[o - i]).abs() < 1e-13, "even ratio");
        if i > 1 {
            assert!(r < map.y[o + i - 1] / x[o + i - 1], "decreasing ratio");
        }
    }
    // (ω y) dx/dy = S₀′/m
    for i in 0..x.len() {
        let lhs = sol.omega() * map.y[i] / map.dy[i];
        assert!((lhs - sol.ds0[i] / sol.mass()).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn gradient_flow_returns_to_origin() {
    let v = Potential1D::quartic(0.1);
    let sol = solution(&v, 3.0, 0.1);
    // ẋ = S₀′(x)/m backward in time by RK4
    for x0 in [-2.5f64, 0.7, 3.0] {
        let mut x = x0;
        let h = -0.01;
        for _ in 0..3000 {
            let f = |x: f64| sol.slope_at(x) / sol.mass();
            let k1 = f(x);
            let k2 = f(x + 0.5 * h * k1);
            let k3 = f(x + 0.5 * h * k2);
            let k4 = f(x + h * k3);
            x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
        assert!(x.abs() < 1e-10 * x0.abs(), "{x0} -> {x}");
    }
}

#[test]
fn first_correction_is_the_sternberg_jacobian() {
    let sol = solution(&Potential1D::quartic(0.1), 16.0, 0.1);
    let map = sol.sternberg().unwrap();
    let st = HierarchyState::ground(&sol, 1, HierarchyOptions::default()).unwrap();
    for (i, &x) in sol.grid.nodes().iter().enumerate() {
        if x.abs() <= 4.0 {
            let r = (-2.0 * st.a[1][i]).exp() / map.dy[i];
            assert!((r - 1.0).abs() < 1e-8, "x={x}: {r}");
        }
    }
}

#[test]
fn excited_leading_examples() {
    let harm = solution(&Potential1D::harmonic(1.0, 1.5).unwrap(), 4.0, 0.1);
    let (b0, d0) = excited_leading(&harm, &harm.sternberg().unwrap(), 2);
    assert_eq!(d0, 3.0);
    for (x, b) in harm.grid.nodes().iter().zip(&b0) {
        assert!((b - x * x).abs() < 1e-13);
    }
    let (b0, d0) = excited_leading(&harm, &harm.sternberg().unwrap(), 0);
    assert_eq!(d0, 0.0);
    assert!(b0.iter().all(|b| *b == 1.0));

    let q = solution(&Potential1D::quartic(0.1), 4.0, 0.1);
    let map = q.sternberg().unwrap();
    let (b0, _) = excited_leading(&q, &map, 1);
    let o = q.grid.origin();
    assert!((map.dy[o] - 1.0).abs() < 1e-14);
    for i in 1..=o {
        assert!((b0[o + i] + b0[o - i]).abs() < 1e-13 * b0[o + i].abs());
    }
}

#[test]
fn harmonic_excited_states_are_hermite() {
    for omega in [1.0, 2.5] {
        // the shifts accumulate roundoff from repeated differencing; a coarse grid keeps it small
        let sol = solution(&Potential1D::harmonic(1.0, omega).unwrap(), 6.0, 0.25);
        let map = sol.sternberg().unwrap();
        let st = HierarchyState::ground(&sol, 8, HierarchyOptions::default()).unwrap();
        for m_star in 1..=3u32 {
            let ex = st.excited(&map, m_star, 3).unwrap();
            let data = ex.excited.as_ref().unwrap();
            assert!(data.delta[1..].iter().all(|d| d.abs() < 1e-10));
            for hbar in [1.0, 0.3] {
                let e = ex.energy_partial_sum(hbar, 8);
                assert!((e - hbar * omega * (m_star as f64 + 0.5)).abs() < 1e-10);
                let xs = sol.grid.nodes();
                let lim = 4.0 * (hbar / omega).sqrt();
                let b: Vec<f64> = (0..xs.len()).map(|i| data.b.iter().rev().fold(0.0, |acc, bn| acc * hbar + bn[i])).collect();
                let h: Vec<f64> = xs.iter().map(|x| hermite(m_star, (omega / hbar).sqrt() * x)).collect();
                let k = (0..xs.len()).filter(|&i| xs[i].abs() <= lim).max_by(|&i, &j| h[i].abs().total_cmp(&h[j].abs())).unwrap();
                let c = b[k] / h[k];
                for i in (0..xs.len()).filter(|&i| xs[i].abs() <= lim) {
                    assert!((b[i] - c * h[i]).abs() <= 1e-8 * b[k].abs(), "m*={m_star} x={}", xs[i]);
                }
            }
        }
    }
}

#[test]
fn quartic_first_excited_matches_perturbation_theory() {
    let v = Potential1D::quartic(0.1);
    let sol = solution(&v, 24.0, 0.1);
    let st = HierarchyState::ground(&sol, 3, HierarchyOptions::default()).unwrap();
    let ex = st.excited(&sol.sternberg().unwrap(), 1, 2).unwrap();
    let data = ex.excited.as_ref().unwrap();
    let e1 = rs_series(&v, 1, 3, Arithmetic::Exact).unwrap();
    let e0 = rs_series(&v, 0, 3, Arithmetic::Exact).unwrap();
    for n in 0..=2 {
        assert!(data.delta[n].is_finite());
        let gap = e1.coeffs[n] - e0.coeffs[n];
        assert!((data.delta[n] - gap).abs() < 1e-6 * (1.0 + gap.abs()), "delta_{n}: {} vs {gap}", data.delta[n]);
    }
    let o = sol.grid.origin();
    for i in 1..=o.min(200) {
        assert!((data.b[1][o + i] + data.b[1][o - i]).abs() < 1e-9 * (1.0 + data.b[1][o + i].abs()));
    }
}

#[test]
fn susy_sectors() {
    let grid = Grid1D::uniform(8.0, 0.25).unwrap();
    let w = Superpotential::new(vec![0.0, 0.0, 0.5, 0.0, 0.025]).unwrap();
    let st = susy_ground(&w, Sector::Empty, &grid, 6, HierarchyOptions::default()).unwrap();
    assert!(st.e.iter().all(|e| e.abs() < 1e-9), "{:?}", st.e);
    for (x, a0) in grid.nodes().iter().zip(&st.a[0]) {
        let wx = 0.5 * x * x + 0.025 * x.powi(4);
        assert!((a0 - wx).abs() < 1e-12 * (1.0 + wx));
    }
    let filled = susy_ground(&w, Sector::Filled, &grid, 1, HierarchyOptions::default()).unwrap();
    assert!((filled.e[0] - 1.0).abs() < 1e-12);

    let harm = Superpotential::new(vec![0.0, 0.0, 0.5]).unwrap();
    let empty = susy_ground(&harm, Sector::Empty, &grid, 2, HierarchyOptions::default()).unwrap();
    let filled = susy_ground(&harm, Sector::Filled, &grid, 2, HierarchyOptions::default()).unwrap();
    assert!(empty.e[0].abs() < 1e-14 && (filled.e[0] - 1.0).abs() < 1e-14);
}

#[test]
fn hierarchy_agrees_with_perturbation_theory() {
    for (v, k) in [(Potential1D::quartic(0.1), 4), (Potential1D::sectic(0.05), 4)] {
        let rs = rs_series(&v, 0, k, Arithmetic::Exact).unwrap();
        let sol = solution(&v, 24.0, 0.1);
        let st = HierarchyState::ground(&sol, k + 1, HierarchyOptions::default()).unwrap();
        for j in 0..=k {
            let scale = rs.coeffs[j].abs().max(1e-2);
            assert!((st.e[j] - rs.coeffs[j]).abs() <= 1e-6 * scale, "e_{j}: {} vs {}", st.e[j], rs.coeffs[j]);
        }
    }
}

#[test]
fn quartic_coupling_series_leading_terms() {
    let s = coupling_series(4, 0, 3, Arithmetic::Exact).unwrap();
    assert_eq!(s.coeffs[..3], [0.5, 0.75, -21.0 / 8.0]);
}
