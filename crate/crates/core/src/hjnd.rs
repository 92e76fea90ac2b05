//! N-dimensional fundamental solution by minimizing the inverted-potential
//! action `∫_{−∞}^0 (½ m |γ̇|² + V(γ)) dt` with `γ(0) = x`.
//!
//! The half-line is truncated to `[−T, 0]` with `γ(−T) = 0` and discretized
//! by the trapezoid rule on a grid that is fine at `t = 0` and coarsens
//! geometrically into the past, where the minimizer decays like `e^{ω t}`.
//! Along the minimizer the Hessian `H = ∇²S₀` obeys the Riccati equation
//! `dH/dt = ∇²V − H²/m` and the first correction obeys
//! `dS₁/dt = tr H/(2m) − ½ Σ ω_i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{fornberg_weights, BlockTridiagonal};
use crate::potentials::{Potential, PotentialND};

/// Node times `−T = t₀ < … < t_M = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::InvalidInput("time grid needs at least three nodes".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("time nodes must be strictly increasing".into()));
        }
        if *times.last().expect("non-empty") != 0.0 {
            return Err(Error::InvalidInput("last time node must be exactly 0".into()));
        }
        Ok(Self { times })
    }

    /// Steps `min_step · growthᵏ` counted back from `t = 0`; the last step is
    /// merged or shortened to land on `−T` exactly.
    pub fn geometric(horizon: f64, min_step: f64, growth: f64) -> Result<Self> {
        if !(horizon > 0.0 && min_step > 0.0 && growth >= 1.0 && min_step < horizon) {
            return Err(Error::InvalidInput("need horizon > min_step > 0 and growth >= 1".into()));
        }
        let mut back = vec![0.0];
        let mut t = 0.0;
        let mut step = min_step;
        while t - step > -horizon {
            t -= step;
            back.push(t);
            step *= growth;
        }
        if t + horizon < 0.5 * step && back.len() > 2 {
            back.pop();
        }
        back.push(-horizon);
        back.reverse();
        Self::from_times(back)
    }

    /// Exactly `steps` intervals, `min_step · growthᵏ` counted back from `t = 0`.
    pub fn stretched(steps: usize, min_step: f64, growth: f64) -> Result<Self> {
        if steps < 2 || !(min_step > 0.0) || !(growth >= 1.0) {
            return Err(Error::InvalidInput("need steps >= 2, min_step > 0 and growth >= 1".into()));
        }
        let mut times = Vec::with_capacity(steps + 1);
        let mut t = 0.0;
        let mut step = min_step;
        times.push(0.0);
        for _ in 0..steps {
            t -= step;
            times.push(t);
            step *= growth;
        }
        times.reverse();
        Self::from_times(times)
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        let h = horizon / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|k| -horizon + k as f64 * h).collect();
        times[steps] = 0.0;
        Self::from_times(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        -self.times[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `Δ_j = t_{j+1} − t_j`.
    pub fn steps(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Default for a potential: `T = 25/ω_min` so that `ω_min T ≥ 20`, a
    /// finest step of `10⁻⁴/ω_max`, growing by `10⁻⁴` per step.
    pub fn for_potential(v: &PotentialND) -> Result<Self> {
        let wmin = v.omega().iter().copied().fold(f64::INFINITY, f64::min);
        let wmax = v.omega().iter().copied().fold(0.0, f64::max);
        Self::geometric(25.0 / wmin, 1e-4 / wmax, 1.0 + 1e-4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    /// Newton stops when the update sup-norm falls below `tolerance · (1 + |x|∞)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest accepted `|γ(t₁)|`, the first free node after the clamp.
    pub decay_tolerance: f64,
    /// With `false` the discrete Hessian is not trusted and the solver uses
    /// Barzilai-Borwein gradient steps instead of Newton.
    pub assume_convex: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-14,
            max_iterations: 60,
            decay_tolerance: 1e-8,
            assume_convex: true,
        }
    }
}

/// Discrete minimizer `γ_x` and derived endpoint data.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub potential: PotentialND,
    pub point: Vec<f64>,
    pub times: Vec<f64>,
    /// `positions[j] = γ(t_j)`.
    pub positions: Vec<Vec<f64>>,
    /// Discrete action, the approximation of `S₀(x)`.
    pub action: f64,
    /// `γ̇(0⁻)` from the cubic through the last four nodes.
    pub endpoint_velocity: Vec<f64>,
    /// `max_j |m γ̈ − ∇V|` over interior nodes, in the discrete sense.
    pub euler_lagrange_residual: f64,
    pub iterations: usize,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

fn discrete_action(v: &PotentialND, t: &[f64], g: &[Vec<f64>]) -> f64 {
    let m = v.mass();
    let mut s = 0.0;
    let mut vl = v.value(&g[0]);
    for j in 0..t.len() - 1 {
        let d = t[j + 1] - t[j];
        let vr = v.value(&g[j + 1]);
        s += 0.5 * m * norm2(&sub(&g[j + 1], &g[j])) / d + 0.5 * d * (vl + vr);
        vl = vr;
    }
    s
}

/// Gradient of the discrete action at the free nodes `1..M`.
fn action_gradient(v: &PotentialND, t: &[f64], g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = v.mass();
    let mm = t.len() - 1;
    (1..mm)
        .map(|j| {
            let dl = t[j] - t[j - 1];
            let dr = t[j + 1] - t[j];
            let w = 0.5 * (dl + dr);
            let gv = v.gradient(&g[j]);
            (0..g[j].len())
                .map(|i| m * (g[j][i] - g[j - 1][i]) / dl - m * (g[j + 1][i] - g[j][i]) / dr + w * gv[i])
                .collect()
        })
        .collect()
}

fn action_hessian(v: &PotentialND, t: &[f64], g: &[Vec<f64>]) -> BlockTridiagonal {
    let m = v.mass();
    let n = v.dim();
    let mm = t.len() - 1;
    let mut diag = Vec::with_capacity(mm - 1);
    let mut lower = Vec::with_capacity(mm.saturating_sub(2));
    for j in 1..mm {
        let dl = t[j] - t[j - 1];
        let dr = t[j + 1] - t[j];
        let w = 0.5 * (dl + dr);
        let mut b = v.hessian(&g[j]) * w;
        for i in 0..n {
            b[(i, i)] += m * (1.0 / dl + 1.0 / dr);
        }
        diag.push(b);
        if j + 1 < mm {
            lower.push(DMatrix::identity(n, n) * (-m / dr));
        }
    }
    BlockTridiagonal { diag, lower }
}

/// Minimize the discrete action with `γ(0) = x`, `γ(−T) = 0`.
pub fn minimize_action(
    potential: &PotentialND,
    x: &[f64],
    grid: &TimeGrid,
    options: &TrajectoryOptions,
) -> Result<Trajectory> {
    let n = potential.dim();
    if x.len() != n {
        return Err(Error::InvalidInput(format!("boundary point has {} components, potential has {n}", x.len())));
    }
    let t = grid.times();
    let mm = t.len() - 1;
    let omega = potential.omega();
    let mut g: Vec<Vec<f64>> = t
        .iter()
        .map(|&tj| (0..n).map(|i| x[i] * (omega[i] * tj).exp()).collect())
        .collect();
    g[0] = vec![0.0; n];
    g[mm] = x.to_vec();
    let scale = 1.0 + x.iter().fold(0.0f64, |a, b| a.max(b.abs()));

    let iterations = if x.iter().all(|v| *v == 0.0) {
        0
    } else if options.assume_convex {
        newton(potential, t, &mut g, options, scale)?
    } else {
        barzilai_borwein(potential, t, &mut g, options, scale)?
    };

    let lead = g[1].iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if lead > options.decay_tolerance {
        return Err(Error::HorizonTooShort {
            size: lead,
            tolerance: options.decay_tolerance,
        });
    }
    let grad = action_gradient(potential, t, &g);
    let el = (1..mm)
        .map(|j| {
            let w = 0.5 * (t[j + 1] - t[j - 1]);
            grad[j - 1].iter().fold(0.0f64, |a, b| a.max(b.abs())) / w
        })
        .fold(0.0, f64::max);
    let tail = &t[mm - 3..];
    let wts = fornberg_weights(0.0, tail, 1);
    let endpoint_velocity = (0..n)
        .map(|i| wts.iter().zip(&g[mm - 3..]).map(|(w, p)| w * p[i]).sum())
        .collect();
    Ok(Trajectory {
        potential: potential.clone(),
        point: x.to_vec(),
        times: t.to_vec(),
        action: discrete_action(potential, t, &g),
        positions: g,
        endpoint_velocity,
        euler_lagrange_residual: el,
        iterations,
    })
}

fn newton(v: &PotentialND, t: &[f64], g: &mut [Vec<f64>], opts: &TrajectoryOptions, scale: f64) -> Result<usize> {
    let mm = t.len() - 1;
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let grad = action_gradient(v, t, g);
        let hess = action_hessian(v, t, g);
        let chol = match hess.factor() {
            Some(c) => c,
            // a non-convex region: hand over to the first-order method
            None => return barzilai_borwein(v, t, g, opts, scale).map(|k| k + it),
        };
        let rhs: Vec<DVector<f64>> = grad.iter().map(|r| -DVector::from_column_slice(r)).collect();
        let step = chol.solve(&rhs);
        let size = step.iter().fold(0.0f64, |a, s| a.max(s.amax()));
        let mut alpha = 1.0;
        if size > 1e-6 * scale {
            let s0 = discrete_action(v, t, g);
            let slope: f64 = grad.iter().zip(&step).map(|(r, s)| r.iter().zip(s.iter()).map(|(a, b)| a * b).sum::<f64>()).sum();
            loop {
                let mut trial = g.to_vec();
                for j in 1..mm {
                    for (p, d) in trial[j].iter_mut().zip(step[j - 1].iter()) {
                        *p += alpha * d;
                    }
                }
                if discrete_action(v, t, &trial) <= s0 + 1e-4 * alpha * slope || alpha < 1e-10 {
                    break;
                }
                alpha *= 0.5;
            }
        }
        for j in 1..mm {
            for (p, d) in g[j].iter_mut().zip(step[j - 1].iter()) {
                *p += alpha * d;
            }
        }
        last = size * alpha;
        if size <= opts.tolerance * scale {
            return Ok(it);
        }
    }
    Err(Error::NonConvergence {
        what: "trajectory Newton iteration",
        residual: last,
        iterations: opts.max_iterations,
    })
}

/// Gradient descent with Barzilai-Borwein step lengths, preconditioned by the
/// free-particle part of the Hessian (a tridiagonal solve per component).
fn barzilai_borwein(v: &PotentialND, t: &[f64], g: &mut [Vec<f64>], opts: &TrajectoryOptions, scale: f64) -> Result<usize> {
    let mm = t.len() - 1;
    let n = v.dim();
    let m = v.mass();
    // kinetic Hessian: tridiagonal, SPD
    let kdiag: Vec<f64> = (1..mm).map(|j| m * (1.0 / (t[j] - t[j - 1]) + 1.0 / (t[j + 1] - t[j]))).collect();
    let koff: Vec<f64> = (1..mm.saturating_sub(1)).map(|j| -m / (t[j + 1] - t[j])).collect();
    let precondition = |r: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; n]; r.len()];
        for i in 0..n {
            let col: Vec<f64> = r.iter().map(|v| v[i]).collect();
            let sol = thomas(&kdiag, &koff, &col);
            for (o, s) in out.iter_mut().zip(sol) {
                o[i] = s;
            }
        }
        out
    };
    let max_iter = 200 * opts.max_iterations;
    let mut grad = action_gradient(v, t, g);
    let mut dir = precondition(&grad);
    let mut alpha = 1.0;
    for it in 1..=max_iter {
        let step: Vec<Vec<f64>> = dir.iter().map(|d| d.iter().map(|x| -alpha * x).collect()).collect();
        for j in 1..mm {
            for (p, d) in g[j].iter_mut().zip(&step[j - 1]) {
                *p += d;
            }
        }
        let size = step.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        if size <= opts.tolerance * scale {
            return Ok(it);
        }
        let new_grad = action_gradient(v, t, g);
        let new_dir = precondition(&new_grad);
        // BB1 in the preconditioned metric
        let mut sy = 0.0;
        let mut ss = 0.0;
        for j in 0..step.len() {
            for i in 0..n {
                let y = new_grad[j][i] - grad[j][i];
                sy += step[j][i] * y;
                let mut ks = kdiag[j] * step[j][i];
                if j > 0 {
                    ks += koff[j - 1] * step[j - 1][i];
                }
                if j + 1 < step.len() {
                    ks += koff[j] * step[j + 1][i];
                }
                ss += step[j][i] * ks;
            }
        }
        alpha = if sy > 0.0 { ss / sy } else { alpha * 0.5 };
        grad = new_grad;
        dir = new_dir;
    }
    Err(Error::NonConvergence {
        what: "trajectory gradient descent",
        residual: grad.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())),
        iterations: max_iter,
    })
}

/// Symmetric tridiagonal solve without pivoting (diagonally dominant input).
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = off[i - 1] / beta;
        beta = diag[i] - off[i - 1] * c[i - 1];
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// `S₀(x)`, `∇S₀(x) = m γ̇(0)` and the pointwise residual `|∇S₀|²/(2m) − V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointData {
    pub s0: f64,
    pub gradient: Vec<f64>,
    pub hj_residual: f64,
}

pub fn s0_and_gradient(traj: &Trajectory) -> EndpointData {
    let m = traj.potential.mass();
    let gradient: Vec<f64> = traj.endpoint_velocity.iter().map(|v| m * v).collect();
    let hj_residual = norm2(&gradient) / (2.0 * m) - traj.potential.value(&traj.point);
    EndpointData {
        s0: traj.action,
        gradient,
        hj_residual,
    }
}

/// `E_ip(t_j) = |p_j|²/(2m) − V(γ_j)` with the discrete momenta of the
/// trapezoid action, `p_j = m(γ_{j+1} − γ_j)/Δ_j − (Δ_j/2)∇V(γ_j)`
/// (and the right-sided form at `t = 0`).
pub fn energy_profile(traj: &Trajectory) -> Vec<f64> {
    let v = &traj.potential;
    let m = v.mass();
    let t = &traj.times;
    let g = &traj.positions;
    let mm = t.len() - 1;
    (0..=mm)
        .map(|j| {
            let p: Vec<f64> = if j < mm {
                let d = t[j + 1] - t[j];
                let gv = v.gradient(&g[j]);
                (0..g[j].len()).map(|i| m * (g[j + 1][i] - g[j][i]) / d - 0.5 * d * gv[i]).collect()
            } else {
                let d = t[mm] - t[mm - 1];
                let gv = v.gradient(&g[mm]);
                (0..g[mm].len()).map(|i| m * (g[mm][i] - g[mm - 1][i]) / d + 0.5 * d * gv[i]).collect()
            };
            norm2(&p) / (2.0 * m) - v.value(&g[j])
        })
        .collect()
}

/// `H(t_j)` from `H(−T) = m diag(ω)` by the implicit trapezoid rule.
///
/// Each step solves `H + (Δ/2m) H² = R` with `R` symmetric; the solution is
/// the matrix function `h(r) = 2r/(1 + √(1 + 2Δ r/m))` of `R`.
pub fn hessian_transport(traj: &Trajectory) -> Result<Vec<DMatrix<f64>>> {
    let v = &traj.potential;
    let m = v.mass();
    let n = v.dim();
    let t = &traj.times;
    let g = &traj.positions;
    let mut h = DMatrix::from_diagonal(&DVector::from_iterator(n, v.omega().iter().map(|w| m * w)));
    let mut out = Vec::with_capacity(t.len());
    out.push(h.clone());
    let mut hv = v.hessian(&g[0]);
    for j in 0..t.len() - 1 {
        let d = t[j + 1] - t[j];
        let hv_next = v.hessian(&g[j + 1]);
        let r = &h + (&hv - &h * &h / m + &hv_next) * (0.5 * d);
        let r = (&r + r.transpose()) * 0.5;
        let eig = SymmetricEigen::new(r);
        let c = 2.0 * d / m;
        let mut vals = eig.eigenvalues.clone();
        for x in vals.iter_mut() {
            let disc = 1.0 + c * *x;
            if !(disc >= 0.0) {
                return Err(Error::NonConvergence {
                    what: "Riccati transport (blow-up)",
                    residual: disc,
                    iterations: j,
                });
            }
            *x = 2.0 * *x / (1.0 + disc.sqrt());
        }
        h = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
        h = (&h + h.transpose()) * 0.5;
        out.push(h.clone());
        hv = hv_next;
    }
    Ok(out)
}

/// `S₁(x) = ∫_{−T}^0 (tr H/(2m) − ½ Σ ω_i) dt` by the trapezoid rule.
pub fn s1_along_flow(traj: &Trajectory, hessians: &[DMatrix<f64>]) -> Result<f64> {
    let v = &traj.potential;
    let m = v.mass();
    let e0: f64 = 0.5 * v.omega().iter().sum::<f64>();
    let t = &traj.times;
    if hessians.len() != t.len() {
        return Err(Error::InvalidInput("Hessian profile does not match the trajectory".into()));
    }
    let f: Vec<f64> = hessians.iter().map(|h| h.trace() / (2.0 * m) - e0).collect();
    if f[0].abs() > 1e-8 * (1.0 + e0) {
        return Err(Error::NonConvergence {
            what: "S1 quadrature (integrand does not vanish at the horizon)",
            residual: f[0],
            iterations: 0,
        });
    }
    Ok(t.windows(2).zip(f.windows(2)).map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1])).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Monomial;

    #[test]
    fn geometric_grid_ends() {
        let g = TimeGrid::geometric(10.0, 1e-3, 1.01).unwrap();
        assert_eq!(g.times()[0], -10.0);
        assert_eq!(*g.times().last().unwrap(), 0.0);
        let s = g.steps();
        assert!((s[s.len() - 1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn harmonic_minimizer() {
        let v = PotentialND::harmonic(1.0, vec![1.0, 2.0]).unwrap();
        let grid = TimeGrid::for_potential(&v).unwrap();
        let tr = minimize_action(&v, &[1.0, 1.0], &grid, &TrajectoryOptions::default()).unwrap();
        assert!((tr.action - 1.5).abs() < 1e-8, "{}", tr.action);
        let e = s0_and_gradient(&tr);
        assert!((e.gradient[0] - 1.0).abs() < 1e-8 && (e.gradient[1] - 2.0).abs() < 1e-8, "{:?}", e.gradient);
        for (j, &tj) in tr.times.iter().enumerate().step_by(997) {
            assert!((tr.positions[j][0] - tj.exp()).abs() < 1e-8);
            assert!((tr.positions[j][1] - (2.0 * tj).exp()).abs() < 1e-8);
        }
        let h = hessian_transport(&tr).unwrap();
        let last = h.last().unwrap();
        assert!((last[(0, 0)] - 1.0).abs() < 1e-12 && (last[(1, 1)] - 2.0).abs() < 1e-12);
        assert!(s1_along_flow(&tr, &h).unwrap().abs() < 1e-12);
        let en = energy_profile(&tr);
        let worst = en.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        eprintln!("harmonic energy {worst:e}");
    }

    #[test]
    fn rest_point() {
        let v = PotentialND::new(1.0, vec![1.0, 2.0], vec![Monomial::new(vec![2, 2], 0.05)]).unwrap();
        let grid = TimeGrid::geometric(25.0, 1e-3, 1.01).unwrap();
        let tr = minimize_action(&v, &[0.0, 0.0], &grid, &TrajectoryOptions::default()).unwrap();
        assert_eq!(tr.action, 0.0);
        assert!(tr.positions.iter().all(|p| p.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn gradient_descent_fallback_agrees() {
        let v = PotentialND::new(1.0, vec![1.0], vec![Monomial::new(vec![4], 0.1)]).unwrap();
        let grid = TimeGrid::geometric(25.0, 1e-2, 1.01).unwrap();
        let a = minimize_action(&v, &[1.0], &grid, &TrajectoryOptions::default()).unwrap();
        let o = TrajectoryOptions { assume_convex: false, tolerance: 1e-12, ..Default::default() };
        let b = minimize_action(&v, &[1.0], &grid, &o).unwrap();
        assert!((a.action - b.action).abs() < 1e-10, "{} {}", a.action, b.action);
    }
}
