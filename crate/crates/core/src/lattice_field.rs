//! Euclidean scalar field on a half-space lattice.
//!
//! Space is a periodic `Nⁿ` lattice (`n ∈ {1, 2}`) with spacing `a`; time runs
//! over `[−T, 0]` on a [`TimeGrid`]. The discrete action is
//!
//! `𝓘 = aⁿ Σ_s [ Σ_j (Φ_{j+1} − Φ_j)²/(2Δ_j) + Σ_j w_j (½|∇′Φ_j|² + 𝒫(Φ_j)) ]`
//!
//! with trapezoid weights `w_j`, forward spatial differences, `Φ = φ` on the
//! last slice and `Φ = 0` on the first. Its minimizer gives `S₀[φ]`.
//!
//! Every identity is evaluated in the form that holds exactly for this
//! discretization when `𝒫` is quadratic: the boundary momentum is the exact
//! derivative of `𝓘` with respect to `φ`, and the slice energy carries the
//! `−(Δ²/8)|F|²` term that makes the Störmer-Verlet energy of a linear field
//! an exact invariant (`F = −Δ_lat Φ + 𝒫′(Φ)`).

use std::io::{BufRead, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hjnd::TimeGrid;
use crate::numerics::Polynomial;

/// Even convex self-interaction `𝒫(z) = Σ a_j zʲ` with `a₂ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPolynomial {
    poly: Polynomial,
    d1: Polynomial,
    d2: Polynomial,
}

impl FieldPolynomial {
    /// `terms` are `(power, coefficient)` pairs.
    pub fn new(terms: &[(u32, f64)]) -> Result<Self> {
        let top = terms.iter().map(|t| t.0).max().unwrap_or(0) as usize;
        let mut c = vec![0.0; top + 1];
        for &(p, v) in terms {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("coefficient of z^{p} is not finite")));
            }
            c[p as usize] += v;
        }
        let poly = Polynomial::new(c);
        if poly.coeff(0) != 0.0 || poly.coeff(1) != 0.0 {
            return Err(Error::InvalidInput("field polynomial must have no constant or linear term".into()));
        }
        if !(poly.coeff(2) > 0.0) {
            return Err(Error::InvalidInput("field polynomial needs a mass term a2 > 0".into()));
        }
        let k = poly.degree();
        if k % 2 != 0 || !(poly.coeff(k) > 0.0) {
            return Err(Error::InvalidInput(format!("field polynomial degree {k} must be even with a positive leading term")));
        }
        let d1 = poly.derivative();
        let d2 = d1.derivative();
        // 𝒫″ has even degree and a positive lead, so it is nonnegative
        // everywhere once it is nonnegative at its critical points
        let crit = d2.derivative();
        let mut check = vec![0.0];
        if crit.degree() > 0 || crit.coeff(0) != 0.0 {
            check.extend(crit.roots().into_iter().filter(|r| r.im.abs() <= 1e-9 * (1.0 + r.re.abs())).map(|r| r.re));
        }
        let scale = d2.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if let Some(z) = check.into_iter().find(|&z| d2.eval(z) < -1e-12 * scale) {
            return Err(Error::InvalidInput(format!("field polynomial is not convex: P''({z:.4}) < 0")));
        }
        Ok(Self { poly, d1, d2 })
    }

    /// `𝒫 = ½ m² z²`.
    pub fn free(mass: f64) -> Result<Self> {
        Self::new(&[(2, 0.5 * mass * mass)])
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.poly.coeff(j)
    }

    /// Free mass `m = √(2 a₂)`.
    pub fn mass(&self) -> f64 {
        (2.0 * self.poly.coeff(2)).sqrt()
    }

    pub fn is_free(&self) -> bool {
        self.degree() == 2
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.poly.eval(z)
    }

    pub fn d1(&self, z: f64) -> f64 {
        self.d1.eval(z)
    }

    pub fn d2(&self, z: f64) -> f64 {
        self.d2.eval(z)
    }

    /// `Σ_j j a_j zʲ`.
    fn homogeneity(&self, z: f64) -> f64 {
        self.poly.coeffs().iter().enumerate().rev().fold(0.0, |acc, (j, c)| acc * z + j as f64 * c)
    }

    /// Checks `𝒫(z) ≥ C z²` for `|z| ≤ range`.
    pub fn dominates_quadratic(&self, c: f64, range: f64) -> bool {
        if self.poly.coeffs().iter().skip(3).all(|v| *v >= 0.0) && c <= self.coeff(2) {
            return true;
        }
        (0..=4000).all(|i| {
            let z = range * (i as f64 / 2000.0 - 1.0);
            self.eval(z) - c * z * z >= -1e-14 * (1.0 + self.eval(z).abs())
        })
    }
}

/// Periodic `Nⁿ` lattice with spacing `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub dim: usize,
    pub sites_per_dim: usize,
    pub spacing: f64,
}

impl Lattice {
    pub fn new(dim: usize, sites_per_dim: usize, spacing: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidInput(format!("spatial dimension must be 1 or 2, got {dim}")));
        }
        if sites_per_dim < 4 || !(spacing > 0.0) {
            return Err(Error::InvalidInput("need at least 4 sites per dimension and a > 0".into()));
        }
        Ok(Self { dim, sites_per_dim, spacing })
    }

    pub fn sites(&self) -> usize {
        self.sites_per_dim.pow(self.dim as u32)
    }

    pub fn period(&self) -> f64 {
        self.sites_per_dim as f64 * self.spacing
    }

    /// Cell volume `aⁿ`.
    pub fn volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Neighbors `s + e_d` for each direction.
    fn forward(&self, s: usize) -> [usize; 2] {
        let n = self.sites_per_dim;
        if self.dim == 1 {
            [(s + 1) % n, usize::MAX]
        } else {
            let (i, j) = (s / n, s % n);
            [((i + 1) % n) * n + j, i * n + (j + 1) % n]
        }
    }

    fn backward(&self, s: usize) -> [usize; 2] {
        let n = self.sites_per_dim;
        if self.dim == 1 {
            [(s + n - 1) % n, usize::MAX]
        } else {
            let (i, j) = (s / n, s % n);
            [((i + n - 1) % n) * n + j, i * n + (j + n - 1) % n]
        }
    }

    /// `−Δ_lat f` at `s`.
    fn neg_laplacian_at(&self, f: &[f64], s: usize) -> f64 {
        let h2 = self.spacing * self.spacing;
        let fw = self.forward(s);
        let bw = self.backward(s);
        (0..self.dim).map(|d| 2.0 * f[s] - f[fw[d]] - f[bw[d]]).sum::<f64>() / h2
    }

    /// `|∇′f|²` at `s`.
    fn grad_sq_at(&self, f: &[f64], s: usize) -> f64 {
        let fw = self.forward(s);
        (0..self.dim).map(|d| (f[fw[d]] - f[s]).powi(2)).sum::<f64>() / (self.spacing * self.spacing)
    }

    /// `μ² − m² = (4/a²) Σ sin²(π k_d/N)` for DFT index `k`.
    fn momentum_sq(&self, k: usize) -> f64 {
        let n = self.sites_per_dim;
        let idx = if self.dim == 1 { [k, 0] } else { [k / n, k % n] };
        let s = |i: usize| (std::f64::consts::PI * i as f64 / n as f64).sin().powi(2);
        4.0 * (0..self.dim).map(|d| s(idx[d])).sum::<f64>() / (self.spacing * self.spacing)
    }

    fn fft(&self, data: &[f64], inverse: bool) -> Vec<Complex<f64>> {
        let c: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft_complex(c, inverse)
    }

    fn fft_complex(&self, mut c: Vec<Complex<f64>>, inverse: bool) -> Vec<Complex<f64>> {
        let n = self.sites_per_dim;
        let mut planner = FftPlanner::new();
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        if self.dim == 1 {
            fft.process(&mut c);
        } else {
            fft.process(&mut c);
            let mut col = vec![Complex::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = c[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    c[i * n + j] = col[i];
                }
            }
        }
        if inverse {
            let s = 1.0 / self.sites() as f64;
            c.iter_mut().for_each(|v| *v *= s);
        }
        c
    }
}

/// One boundary mode `A cos(2π k·x/L + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMode {
    pub amplitude: f64,
    pub wavenumber: Vec<i64>,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    Modes(Vec<FourierMode>),
    Values(Vec<f64>),
}

impl BoundaryData {
    /// Site values on `lattice`.
    pub fn sample(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        match self {
            BoundaryData::Values(v) => {
                if v.len() != lattice.sites() {
                    return Err(Error::InvalidInput(format!("boundary data has {} values, lattice has {} sites", v.len(), lattice.sites())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput("boundary data contains non-finite values".into()));
                }
                Ok(v.clone())
            }
            BoundaryData::Modes(modes) => {
                let n = lattice.sites_per_dim;
                let mut out = vec![0.0; lattice.sites()];
                for m in modes {
                    if m.wavenumber.len() != lattice.dim {
                        return Err(Error::InvalidInput("mode wavenumber length must equal the spatial dimension".into()));
                    }
                    for (s, o) in out.iter_mut().enumerate() {
                        let idx = if lattice.dim == 1 { [s, 0] } else { [s / n, s % n] };
                        let arg: f64 = (0..lattice.dim).map(|d| m.wavenumber[d] as f64 * idx[d] as f64).sum::<f64>()
                            * 2.0
                            * std::f64::consts::PI
                            / n as f64;
                        *o += m.amplitude * (arg + m.phase).cos();
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Dirichlet problem for the discrete action.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeProblem {
    pub lattice: Lattice,
    pub grid: TimeGrid,
    pub polynomial: FieldPolynomial,
    /// `φ` on the `t = 0` slice.
    pub boundary: Vec<f64>,
}

impl LatticeProblem {
    pub fn new(lattice: Lattice, grid: TimeGrid, polynomial: FieldPolynomial, boundary: &BoundaryData) -> Result<Self> {
        let d = lattice.dim + 1;
        if d >= 3 {
            let bound = 2 * d / (d - 2);
            if polynomial.degree() > bound {
                return Err(Error::InvalidInput(format!(
                    "degree {} exceeds the critical exponent {bound} in {d} dimensions",
                    polynomial.degree()
                )));
            }
        }
        let boundary = boundary.sample(&lattice)?;
        Ok(Self { lattice, grid, polynomial, boundary })
    }

    pub fn with_boundary(&self, boundary: Vec<f64>) -> Result<Self> {
        Self::new(self.lattice, self.grid.clone(), self.polynomial.clone(), &BoundaryData::Values(boundary))
    }

    pub fn slices(&self) -> usize {
        self.grid.len()
    }

    /// `F = −Δ_lat f + 𝒫′(f)` on one slice.
    fn force(&self, f: &[f64]) -> Vec<f64> {
        (0..f.len()).map(|s| self.lattice.neg_laplacian_at(f, s) + self.polynomial.d1(f[s])).collect()
    }

    /// `Σ_s (½|∇′f|² + 𝒫(f))`, without the volume factor.
    fn slice_potential(&self, f: &[f64]) -> f64 {
        (0..f.len()).map(|s| 0.5 * self.lattice.grad_sq_at(f, s) + self.polynomial.eval(f[s])).sum()
    }
}

/// Discrete action of a full field (time-major slices, `t₀` first).
pub fn action(problem: &LatticeProblem, field: &[f64]) -> f64 {
    let ns = problem.lattice.sites();
    let steps = problem.grid.steps();
    let mut kin = 0.0;
    let mut pot = 0.0;
    let m = steps.len();
    for j in 0..=m {
        let w = trapezoid_weight(&steps, j);
        let slice = &field[j * ns..(j + 1) * ns];
        pot += w * problem.slice_potential(slice);
        if j < m {
            let next = &field[(j + 1) * ns..(j + 2) * ns];
            kin += slice.iter().zip(next).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / (2.0 * steps[j]);
        }
    }
    problem.lattice.volume() * (kin + pot)
}

fn trapezoid_weight(steps: &[f64], j: usize) -> f64 {
    let left = if j > 0 { steps[j - 1] } else { 0.0 };
    let right = steps.get(j).copied().unwrap_or(0.0);
    0.5 * (left + right)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOptions {
    /// Newton stops when `max |∂𝓘/∂Φ|/w` falls below `tolerance · scale`
    /// (plus a rounding floor for the second time difference).
    pub tolerance: f64,
    pub max_newton: usize,
    pub cg_tolerance: f64,
    pub max_cg: usize,
    /// Largest accepted `sup|Φ(t₁)| / sup|φ|` next to the clamped slice.
    pub decay_tolerance: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_newton: 60,
            cg_tolerance: 1e-12,
            max_cg: 20_000,
            decay_tolerance: 1e-8,
        }
    }
}

/// Converged minimizer `Φ_φ`.
#[derive(Debug, Clone)]
pub struct FieldMinimizer {
    /// `(M+1)·Nⁿ` values, time-major, slice 0 at `t = −T`.
    pub field: Vec<f64>,
    pub action: f64,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    /// Total backtracking halvings in the line search; nonzero means Newton
    /// left its quadratic regime at some point.
    pub line_search_halvings: usize,
    pub euler_lagrange_residual: f64,
}

impl FieldMinimizer {
    pub fn slice<'a>(&'a self, problem: &LatticeProblem, j: usize) -> &'a [f64] {
        let ns = problem.lattice.sites();
        &self.field[j * ns..(j + 1) * ns]
    }
}

/// Minimize from the free-field solution with mass `√(2a₂)`.
pub fn minimize_field(problem: &LatticeProblem, options: &FieldOptions) -> Result<FieldMinimizer> {
    let init = free_field_solution(&problem.lattice, &problem.grid, problem.polynomial.mass(), &problem.boundary);
    minimize_field_from(problem, init, options)
}

/// Minimize from a given full field; its first and last slices are overwritten
/// by the boundary conditions.
pub fn minimize_field_from(problem: &LatticeProblem, mut field: Vec<f64>, options: &FieldOptions) -> Result<FieldMinimizer> {
    let ns = problem.lattice.sites();
    let mm = problem.slices() - 1;
    if field.len() != (mm + 1) * ns {
        return Err(Error::InvalidInput("initial field has the wrong size".into()));
    }
    field[..ns].iter_mut().for_each(|v| *v = 0.0);
    field[mm * ns..].copy_from_slice(&problem.boundary);
    let sup = problem.boundary.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if sup == 0.0 {
        return Ok(FieldMinimizer {
            field: vec![0.0; field.len()],
            action: 0.0,
            newton_iterations: 0,
            cg_iterations: 0,
            line_search_halvings: 0,
            euler_lagrange_residual: 0.0,
        });
    }
    let solver = Newton::new(problem);
    let scale = problem
        .force(&problem.boundary)
        .iter()
        .zip(&problem.boundary)
        .map(|(f, p)| f.abs() + problem.polynomial.d2(*p) * p.abs())
        .fold(0.0, f64::max);
    let dmin = solver.steps.iter().copied().fold(f64::INFINITY, f64::min);
    let target = options.tolerance * scale + 64.0 * f64::EPSILON * sup / (dmin * dmin);

    let mut cg_total = 0;
    let mut halvings = 0;
    let mut residual = f64::INFINITY;
    for it in 0..=options.max_newton {
        let grad = solver.gradient(&field);
        residual = solver.el_residual(&grad);
        if residual <= target {
            let lead = field[ns..2 * ns].iter().fold(0.0f64, |a, b| a.max(b.abs())) / sup;
            if lead > options.decay_tolerance {
                return Err(Error::HorizonTooShort { size: lead, tolerance: options.decay_tolerance });
            }
            return Ok(FieldMinimizer {
                action: action(problem, &field),
                field,
                newton_iterations: it,
                cg_iterations: cg_total,
                line_search_halvings: halvings,
                euler_lagrange_residual: residual,
            });
        }
        if it == options.max_newton {
            break;
        }
        let (step, iters) = solver.newton_step(&field, &grad, options)?;
        cg_total += iters;
        let slope: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
        let s0 = action(problem, &field);
        let mut alpha = 1.0;
        let mut trial = field.clone();
        loop {
            for (i, d) in step.iter().enumerate() {
                trial[ns + i] = field[ns + i] + alpha * d;
            }
            let s1 = action(problem, &trial);
            // near convergence the action change is below rounding: trust Newton
            let tiny = (s0 - s1).abs() <= 1e-13 * s0.abs();
            if s1 <= s0 + 1e-4 * alpha * slope * problem.lattice.volume() || tiny || alpha < 1e-8 {
                break;
            }
            alpha *= 0.5;
            halvings += 1;
        }
        field = trial;
    }
    Err(Error::NonConvergence {
        what: "lattice Newton iteration",
        residual,
        iterations: options.max_newton,
    })
}

/// Interior-slice Newton machinery; vectors cover slices `1..M` only.
struct Newton<'a> {
    problem: &'a LatticeProblem,
    steps: Vec<f64>,
    weights: Vec<f64>,
    ns: usize,
    mm: usize,
}

impl<'a> Newton<'a> {
    fn new(problem: &'a LatticeProblem) -> Self {
        let steps = problem.grid.steps();
        let mm = steps.len();
        let weights = (0..=mm).map(|j| trapezoid_weight(&steps, j)).collect();
        Self { problem, steps, weights, ns: problem.lattice.sites(), mm }
    }

    /// `∂𝓘/∂Φ_j / aⁿ` for interior slices.
    fn gradient(&self, field: &[f64]) -> Vec<f64> {
        let ns = self.ns;
        let mut g = vec![0.0; (self.mm - 1) * ns];
        for j in 1..self.mm {
            let (dl, dr, w) = (self.steps[j - 1], self.steps[j], self.weights[j]);
            let cur = &field[j * ns..(j + 1) * ns];
            let force = self.problem.force(cur);
            for s in 0..ns {
                let i = j * ns + s;
                g[(j - 1) * ns + s] = (field[i] - field[i - ns]) / dl - (field[i + ns] - field[i]) / dr + w * force[s];
            }
        }
        g
    }

    fn el_residual(&self, grad: &[f64]) -> f64 {
        grad.chunks(self.ns)
            .enumerate()
            .map(|(k, c)| c.iter().fold(0.0f64, |a, b| a.max(b.abs())) / self.weights[k + 1])
            .fold(0.0, f64::max)
    }

    /// Solve `H d = −g` by preconditioned conjugate gradients; the
    /// preconditioner keeps the time coupling and the diagonal of the rest.
    fn newton_step(&self, field: &[f64], grad: &[f64], options: &FieldOptions) -> Result<(Vec<f64>, usize)> {
        let ns = self.ns;
        let n = grad.len();
        let lat = &self.problem.lattice;
        let curv: Vec<f64> = field[ns..self.mm * ns].iter().map(|&p| self.problem.polynomial.d2(p)).collect();
        let h2 = lat.spacing * lat.spacing;
        let apply = |v: &[f64], out: &mut [f64]| {
            for j in 1..self.mm {
                let (dl, dr, w) = (self.steps[j - 1], self.steps[j], self.weights[j]);
                let base = (j - 1) * ns;
                let cur = &v[base..base + ns];
                for s in 0..ns {
                    let mut y = cur[s] * (1.0 / dl + 1.0 / dr) + w * (lat.neg_laplacian_at(cur, s) + curv[base + s] * cur[s]);
                    if j > 1 {
                        y -= v[base - ns + s] / dl;
                    }
                    if j + 1 < self.mm {
                        y -= v[base + ns + s] / dr;
                    }
                    out[base + s] = y;
                }
            }
        };
        // per-site tridiagonal factor along time
        let lines = self.mm - 1;
        let mut piv = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for s in 0..ns {
            let mut prev = 0.0;
            for k in 0..lines {
                let j = k + 1;
                let (dl, dr, w) = (self.steps[j - 1], self.steps[j], self.weights[j]);
                let d = 1.0 / dl + 1.0 / dr + w * (2.0 * lat.dim as f64 / h2 + curv[k * ns + s]);
                let off_prev = if k > 0 { -1.0 / dl } else { 0.0 };
                let p = d - off_prev * prev;
                piv[k * ns + s] = 1.0 / p;
                let off_next = if k + 1 < lines { -1.0 / dr } else { 0.0 };
                prev = off_next / p;
                upper[k * ns + s] = prev;
            }
        }
        let precondition = |r: &[f64], z: &mut [f64]| {
            for s in 0..ns {
                let mut last = 0.0;
                for k in 0..lines {
                    let j = k + 1;
                    let off_prev = if k > 0 { -1.0 / self.steps[j - 1] } else { 0.0 };
                    last = (r[k * ns + s] - off_prev * last) * piv[k * ns + s];
                    z[k * ns + s] = last;
                }
                for k in (0..lines.saturating_sub(1)).rev() {
                    z[k * ns + s] -= upper[k * ns + s] * z[(k + 1) * ns + s];
                }
            }
        };
        let b: Vec<f64> = grad.iter().map(|g| -g).collect();
        let bnorm = dot(&b, &b).sqrt();
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut z = vec![0.0; n];
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for it in 1..=options.max_cg {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Singular("lattice Hessian is not positive definite".into()));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if dot(&r, &r).sqrt() <= options.cg_tolerance * bnorm {
                return Ok((x, it));
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NonConvergence {
            what: "lattice conjugate gradients",
            residual: dot(&r, &r).sqrt() / bnorm,
            iterations: options.max_cg,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Exact derivative of the discrete action with respect to `φ`:
    /// `(φ − Φ_{M−1})/Δ + (Δ/2) F(φ)`.
    Discrete,
    /// Second-order one-sided difference through the last three slices.
    Reconstructed,
}

/// `δS/δφ` per unit volume.
pub fn functional_gradient(problem: &LatticeProblem, minimizer: &FieldMinimizer, mode: GradientMode) -> Vec<f64> {
    let mm = problem.slices() - 1;
    let steps = problem.grid.steps();
    let phi = minimizer.slice(problem, mm);
    let prev = minimizer.slice(problem, mm - 1);
    match mode {
        GradientMode::Discrete => {
            let d = steps[mm - 1];
            let f = problem.force(phi);
            (0..phi.len()).map(|s| (phi[s] - prev[s]) / d + 0.5 * d * f[s]).collect()
        }
        GradientMode::Reconstructed => {
            let t = problem.grid.times();
            let w = crate::numerics::fornberg_weights(0.0, &t[mm - 2..], 1);
            let prev2 = minimizer.slice(problem, mm - 2);
            (0..phi.len()).map(|s| w[0] * prev2[s] + w[1] * prev[s] + w[2] * phi[s]).collect()
        }
    }
}

/// `δS/δφ` at `sites` by central differences of re-minimized values.
pub fn fd_gradient(problem: &LatticeProblem, minimizer: &FieldMinimizer, sites: &[usize], step: f64, options: &FieldOptions) -> Result<Vec<f64>> {
    let vol = problem.lattice.volume();
    sites
        .iter()
        .map(|&s| {
            let mut values = [0.0; 2];
            for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
                let mut phi = problem.boundary.clone();
                phi[s] += sign * step;
                let p = problem.with_boundary(phi)?;
                values[k] = minimize_field_from(&p, minimizer.field.clone(), options)?.action;
            }
            Ok((values[0] - values[1]) / (2.0 * step * vol))
        })
        .collect()
}

/// Lattice Hamilton-Jacobi balance at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjReport {
    /// `aⁿ Σ ½ (δS/δφ)²`
    pub kinetic: f64,
    /// `aⁿ Σ (½|∇′φ|² + 𝒫(φ))`
    pub potential: f64,
    /// `aⁿ Σ (Δ²/8) F²`, the discrete-time correction.
    pub correction: f64,
    /// `(kinetic − potential − correction)/potential`.
    pub residual: f64,
}

pub fn hj_residual(problem: &LatticeProblem, minimizer: &FieldMinimizer) -> HjReport {
    let vol = problem.lattice.volume();
    let mm = problem.slices() - 1;
    let d = problem.grid.steps()[mm - 1];
    let phi = &problem.boundary;
    let p = functional_gradient(problem, minimizer, GradientMode::Discrete);
    let f = problem.force(phi);
    let kinetic = vol * 0.5 * dot(&p, &p);
    let potential = vol * problem.slice_potential(phi);
    let correction = vol * d * d / 8.0 * dot(&f, &f);
    let residual = if potential > 0.0 { (kinetic - potential - correction) / potential } else { 0.0 };
    HjReport { kinetic, potential, correction, residual }
}

/// Slice energies `aⁿ Σ (½p_j² − ½|∇′Φ_j|² − 𝒫(Φ_j) − (Δ_j²/8)F_j²)` with the
/// discrete momenta of the trapezoid action. On a uniform grid `p_j` is the
/// centered difference at interior slices.
pub fn energy_profile(problem: &LatticeProblem, minimizer: &FieldMinimizer) -> Vec<f64> {
    let vol = problem.lattice.volume();
    let steps = problem.grid.steps();
    let mm = steps.len();
    (0..=mm)
        .map(|j| {
            let cur = minimizer.slice(problem, j);
            let f = problem.force(cur);
            let (d, p): (f64, Vec<f64>) = if j < mm {
                let d = steps[j];
                let next = minimizer.slice(problem, j + 1);
                (d, (0..cur.len()).map(|s| (next[s] - cur[s]) / d - 0.5 * d * f[s]).collect())
            } else {
                let d = steps[mm - 1];
                let prev = minimizer.slice(problem, mm - 1);
                (d, (0..cur.len()).map(|s| (cur[s] - prev[s]) / d + 0.5 * d * f[s]).collect())
            };
            vol * (0.5 * dot(&p, &p) - problem.slice_potential(cur) - d * d / 8.0 * dot(&f, &f))
        })
        .collect()
}

/// `𝓣 = 1 + Σ(|∇′φ|² + Σ j a_j φʲ) / Σ(|∇′φ|² + Σ 2 a_j φʲ)`, a function of
/// `φ` alone.
pub fn virial_t(problem: &LatticeProblem, phi: &[f64]) -> f64 {
    let lat = &problem.lattice;
    let p = &problem.polynomial;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in 0..phi.len() {
        let g = lat.grad_sq_at(phi, s);
        num += g + p.homogeneity(phi[s]);
        den += g + 2.0 * p.eval(phi[s]);
    }
    if den > 0.0 {
        1.0 + num / den
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirialPoint {
    pub amplitude: f64,
    pub action: f64,
    /// `⟨φ, δS/δφ⟩ / S₀`
    pub r: f64,
    pub t: f64,
    pub line_search_halvings: usize,
}

impl VirialPoint {
    /// Newton needed step halving, so the minimizer at this amplitude was
    /// reached outside the quadratic regime.
    pub fn degraded(&self) -> bool {
        self.line_search_halvings > 0
    }
}

/// `𝓡` and `𝓣` along `φ_A = A·φ`, with `φ` the problem's boundary data;
/// each minimization starts from the previous one, rescaled.
pub fn virial_ratio(problem: &LatticeProblem, amplitudes: &[f64], options: &FieldOptions) -> Result<Vec<VirialPoint>> {
    if amplitudes.windows(2).any(|w| !(w[1] > w[0])) || amplitudes.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidInput("amplitudes must be positive and ascending".into()));
    }
    let vol = problem.lattice.volume();
    let mut out = Vec::with_capacity(amplitudes.len());
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &amp in amplitudes {
        let phi: Vec<f64> = problem.boundary.iter().map(|v| amp * v).collect();
        let p = problem.with_boundary(phi.clone())?;
        let min = match &warm {
            Some((a0, f)) => minimize_field_from(&p, f.iter().map(|v| v * amp / a0).collect(), options)?,
            None => minimize_field(&p, options)?,
        };
        let g = functional_gradient(&p, &min, GradientMode::Discrete);
        out.push(VirialPoint {
            amplitude: amp,
            action: min.action,
            r: vol * dot(&phi, &g) / min.action,
            t: virial_t(&p, &phi),
            line_search_halvings: min.line_search_halvings,
        });
        warm = Some((amp, min.field));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub coercivity: f64,
    pub free_mass: f64,
    pub action: f64,
    pub free_action: f64,
    /// `S₀ − S₀^free`, nonnegative when the bound holds.
    pub slack: f64,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.slack >= 0.0
    }
}

/// Compare `S₀[φ]` with the free action of mass `m₀ = √(2C)`, where
/// `𝒫(z) ≥ C z²`; `C` defaults to `a₂` when every coefficient is nonnegative.
pub fn gaussian_bound(problem: &LatticeProblem, minimizer: &FieldMinimizer, coercivity: Option<f64>) -> Result<BoundReport> {
    let p = &problem.polynomial;
    let c = match coercivity {
        Some(c) => c,
        None if (0..=p.degree()).all(|j| p.coeff(j) >= 0.0) => p.coeff(2),
        None => return Err(Error::InvalidInput("a coercivity constant is required when some coefficient is negative".into())),
    };
    let range = 10.0f64.max(2.0 * problem.boundary.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    if !(c > 0.0) || !p.dominates_quadratic(c, range) {
        return Err(Error::InvalidInput(format!("P(z) >= {c} z^2 fails")));
    }
    let m0 = (2.0 * c).sqrt();
    let free = free_field_action(&problem.lattice, &problem.grid, m0, &problem.boundary);
    Ok(BoundReport {
        coercivity: c,
        free_mass: m0,
        action: minimizer.action,
        free_action: free,
        slack: minimizer.action - free,
    })
}

/// Per-mode profile `X_j/X_M` of the free field with `μ²`, clamped at `−T`.
///
/// On a uniform grid this is `sinh(κj)/sinh(κM)` with `e^{−κ} = r` the
/// decaying root of `r + 1/r = 2 + Δ²μ²`; otherwise the per-mode
/// recurrence is solved directly.
fn mode_profile(steps: &[f64], mu2: f64) -> Vec<f64> {
    let mm = steps.len();
    let uniform = steps.iter().all(|d| (d - steps[0]).abs() <= 1e-12 * steps[0]);
    if uniform {
        let b = 0.5 * steps[0] * steps[0] * mu2;
        let r = 1.0 / (1.0 + b + (b * (2.0 + b)).sqrt());
        let r2m = r.powi(2 * mm as i32);
        (0..=mm)
            .map(|j| r.powi((mm - j) as i32) * (1.0 - r.powi(2 * j as i32)) / (1.0 - r2m))
            .collect()
    } else {
        // Thomas elimination on the interior equations with X_M = 1
        let n = mm - 1;
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for k in 0..n {
            let j = k + 1;
            let (dl, dr) = (steps[j - 1], steps[j]);
            let diag = 1.0 / dl + 1.0 / dr + 0.5 * (dl + dr) * mu2;
            let lo = if k > 0 { -1.0 / dl } else { 0.0 };
            let up = -1.0 / dr;
            let rhs = if k + 1 == n { 1.0 / dr } else { 0.0 };
            let den = diag - lo * if k > 0 { cp[k - 1] } else { 0.0 };
            cp[k] = if k + 1 < n { up / den } else { 0.0 };
            dp[k] = (rhs - lo * if k > 0 { dp[k - 1] } else { 0.0 }) / den;
        }
        for k in (0..n.saturating_sub(1)).rev() {
            dp[k] -= cp[k] * dp[k + 1];
        }
        let mut x = vec![0.0];
        x.extend(dp);
        x.push(1.0);
        x
    }
}

/// `ω̂(μ²) = (1 − X_{M−1}/X_M)/Δ + (Δ/2) μ²`, the exact discrete boundary
/// response of one free mode; `→ (1/r − r)/(2Δ)` as `T → ∞` on a uniform grid.
pub fn mode_frequency(grid: &TimeGrid, mu2: f64) -> f64 {
    let steps = grid.steps();
    let x = mode_profile(&steps, mu2);
    let d = steps[steps.len() - 1];
    (1.0 - x[x.len() - 2]) / d + 0.5 * d * mu2
}

/// `ω̂` for every DFT index of the lattice.
pub fn lattice_dispersion(lattice: &Lattice, grid: &TimeGrid, mass: f64) -> Vec<f64> {
    (0..lattice.sites())
        .map(|k| mode_frequency(grid, lattice.momentum_sq(k) + mass * mass))
        .collect()
}

/// Free-field `S₀[φ] = (aⁿ/2) Σ_k ω̂_k |φ̂_k|² / Nⁿ`.
pub fn free_field_action(lattice: &Lattice, grid: &TimeGrid, mass: f64, phi: &[f64]) -> f64 {
    let w = lattice_dispersion(lattice, grid, mass);
    let f = lattice.fft(phi, false);
    0.5 * lattice.volume() * f.iter().zip(&w).map(|(c, w)| w * c.norm_sqr()).sum::<f64>() / lattice.sites() as f64
}

/// Free-field `δS/δφ = Ω φ`, with `Ω` diagonal in Fourier space.
pub fn free_field_gradient(lattice: &Lattice, grid: &TimeGrid, mass: f64, phi: &[f64]) -> Vec<f64> {
    let w = lattice_dispersion(lattice, grid, mass);
    let f: Vec<Complex<f64>> = lattice.fft(phi, false).into_iter().zip(&w).map(|(c, w)| c * w).collect();
    lattice.fft_complex(f, true).into_iter().map(|c| c.re).collect()
}

/// Full free-field minimizer, mode by mode.
pub fn free_field_solution(lattice: &Lattice, grid: &TimeGrid, mass: f64, phi: &[f64]) -> Vec<f64> {
    let steps = grid.steps();
    let ns = lattice.sites();
    let slices = steps.len() + 1;
    let hat = lattice.fft(phi, false);
    let mut spec = vec![Complex::new(0.0, 0.0); slices * ns];
    for k in 0..ns {
        let x = mode_profile(&steps, lattice.momentum_sq(k) + mass * mass);
        for j in 0..slices {
            spec[j * ns + k] = hat[k] * x[j];
        }
    }
    let mut out = Vec::with_capacity(slices * ns);
    for j in 0..slices {
        let slice = lattice.fft_complex(spec[j * ns..(j + 1) * ns].to_vec(), true);
        out.extend(slice.into_iter().map(|c| c.re));
    }
    out
}

/// Discrete Fourier coefficients of a slice (unnormalized forward DFT).
pub fn fourier(lattice: &Lattice, f: &[f64]) -> Vec<Complex<f64>> {
    lattice.fft(f, false)
}

const SNAPSHOT_MAGIC: &str = "# lattice-field snapshot v1";

/// Text header naming `n`, `N` and the slice count, then the field as
/// little-endian `f64`, time-major and row-major within a slice.
pub fn write_snapshot<W: Write>(mut w: W, problem: &LatticeProblem, minimizer: &FieldMinimizer) -> Result<()> {
    writeln!(w, "{SNAPSHOT_MAGIC}")?;
    writeln!(w, "n = {}", problem.lattice.dim)?;
    writeln!(w, "N = {}", problem.lattice.sites_per_dim)?;
    writeln!(w, "a = {:e}", problem.lattice.spacing)?;
    writeln!(w, "slices = {}", problem.slices())?;
    writeln!(w, "end")?;
    for v in &minimizer.field {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub sites_per_dim: usize,
    pub spacing: f64,
    pub slices: usize,
    pub field: Vec<f64>,
}

pub fn read_snapshot<R: BufRead>(mut r: R) -> Result<Snapshot> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != SNAPSHOT_MAGIC {
        return Err(Error::Parse("not a lattice-field snapshot".into()));
    }
    let (mut dim, mut n, mut a, mut slices) = (None, None, None, None);
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Parse("snapshot header not terminated".into()));
        }
        let l = line.trim();
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| Error::Parse(format!("bad header line {l:?}")))?;
        let v = v.trim();
        let bad = |_| Error::Parse(format!("bad value in {l:?}"));
        match k.trim() {
            "n" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "N" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "a" => a = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "slices" => slices = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            other => return Err(Error::Parse(format!("unknown header key {other:?}"))),
        }
    }
    let missing = || Error::Parse("snapshot header incomplete".into());
    let (dim, n, a, slices) = (dim.ok_or_else(missing)?, n.ok_or_else(missing)?, a.ok_or_else(missing)?, slices.ok_or_else(missing)?);
    let count = slices * n.pow(dim as u32);
    let mut bytes = Vec::with_capacity(count * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Parse(format!("expected {} bytes of field data, found {}", count * 8, bytes.len())));
    }
    let field = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Snapshot { dim, sites_per_dim: n, spacing: a, slices, field })
}
