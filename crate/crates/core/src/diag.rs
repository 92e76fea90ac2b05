//! Direct spectra of `H = −(ℏ²/2m) d²/dx² + V(x)`.
//!
//! Two independent methods: second-order finite differences on `[−X, X]`
//! (symmetric tridiagonal, Sturm bisection, Richardson extrapolation over three
//! halvings of the mesh) and a truncated harmonic-oscillator basis (dense
//! symmetric eigensolver, variational from above).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hj1d::FundamentalSolution1D;
use crate::numerics::{Polynomial, SymTridiagonal};
use crate::potentials::{Potential1D, Sector, Superpotential};

/// A one-dimensional Schrödinger operator with polynomial potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProblem {
    pub mass: f64,
    pub hbar: f64,
    pub potential: Polynomial,
}

impl SpectralProblem {
    pub fn new(mass: f64, hbar: f64, potential: Polynomial) -> Result<Self> {
        if !(mass > 0.0) || !(hbar > 0.0) {
            return Err(Error::InvalidInput("mass and hbar must be positive".into()));
        }
        let deg = potential.degree();
        if deg < 2 || deg % 2 == 1 || potential.coeff(deg) <= 0.0 {
            return Err(Error::InvalidInput(
                "potential must have even degree >= 2 and a positive leading coefficient".into(),
            ));
        }
        Ok(Self { mass, hbar, potential })
    }

    pub fn from_potential(v: &Potential1D, hbar: f64) -> Result<Self> {
        Self::new(v.mass(), hbar, v.polynomial().clone())
    }

    /// Unit-mass sector Hamiltonian of a superpotential.
    pub fn susy_sector(w: &Superpotential, sector: Sector, hbar: f64) -> Result<Self> {
        Self::new(1.0, hbar, w.sector_polynomial(sector, hbar))
    }

    /// `√(V″(0)/m)`, or 1 when the origin is not a strict minimum.
    pub fn curvature_frequency(&self) -> f64 {
        let k = 2.0 * self.potential.coeff(2) / self.mass;
        if k > 0.0 {
            k.sqrt()
        } else {
            1.0
        }
    }

    /// Half-width where `V ≥ 50 E` and the WKB decay exponent
    /// `∫ √(2m(V − E))/ℏ` from the turning point exceeds 40 on both sides,
    /// with `E` the harmonic estimate of level `levels − 1`.
    pub fn auto_half_width(&self, levels: usize) -> f64 {
        let e = self.hbar * self.curvature_frequency() * (levels as f64 - 0.5).max(0.5)
            + self.potential.coeff(0).max(0.0);
        let step = 0.01;
        let side = |sgn: f64| {
            let mut x = 0.0;
            let mut phase = 0.0;
            loop {
                x += step;
                let v = self.potential.eval(sgn * (x - 0.5 * step));
                phase += step * (2.0 * self.mass * (v - e).max(0.0)).sqrt() / self.hbar;
                if (phase >= 40.0 && self.potential.eval(sgn * x) >= 50.0 * e.max(1e-12)) || x > 1e4 {
                    return x;
                }
            }
        };
        side(1.0).max(side(-1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FiniteDifference,
    HarmonicBasis,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FiniteDifference => "fd",
            Method::HarmonicBasis => "basis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Domain half-width for finite differences; automatic when `None`.
    pub half_width: Option<f64>,
    /// Basis frequency; `√(V″(0)/m)` when `None`.
    pub basis_omega: Option<f64>,
    /// Number of mesh halvings in the Richardson tableau (finite differences).
    pub richardson_levels: usize,
    /// Compute log-space eigenvector profiles (finite differences only).
    pub profiles: bool,
    /// Largest accepted `ψ(±X)²/max ψ²`.
    pub boundary_tolerance: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            half_width: None,
            basis_omega: None,
            richardson_levels: 3,
            profiles: false,
            boundary_tolerance: 1e-10,
        }
    }
}

/// `log|ψ|` and `sign ψ` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProfile {
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub method: Method,
    pub size: usize,
    pub eigenvalues: Vec<f64>,
    /// Per-level discretization error estimate.
    pub error: Vec<f64>,
    /// Grid of the profiles (finest mesh).
    pub grid: Vec<f64>,
    pub profiles: Vec<LogProfile>,
}

/// Lowest `levels` eigenvalues, with an error bar from refinement.
pub fn solve_spectrum(
    problem: &SpectralProblem,
    method: Method,
    size: usize,
    levels: usize,
    options: &SpectrumOptions,
) -> Result<SpectralResult> {
    if levels == 0 {
        return Err(Error::InvalidInput("need at least one level".into()));
    }
    match method {
        Method::FiniteDifference => finite_difference(problem, size, levels, options),
        Method::HarmonicBasis => harmonic_basis(problem, size, levels, options),
    }
}

struct Mesh {
    x: Vec<f64>,
    h: f64,
    matrix: SymTridiagonal,
}

/// `n` interior nodes of `[−X, X]` with Dirichlet ends.
fn fd_mesh(problem: &SpectralProblem, half_width: f64, n: usize) -> Mesh {
    let h = 2.0 * half_width / (n + 1) as f64;
    let kin = problem.hbar * problem.hbar / (problem.mass * h * h);
    let x: Vec<f64> = (0..n).map(|i| -half_width + (i + 1) as f64 * h).collect();
    let diag = x.iter().map(|&xi| kin + problem.potential.eval(xi)).collect();
    let off = vec![-0.5 * kin; n - 1];
    Mesh {
        x,
        h,
        matrix: SymTridiagonal::new(diag, off),
    }
}

fn finite_difference(
    problem: &SpectralProblem,
    size: usize,
    levels: usize,
    options: &SpectrumOptions,
) -> Result<SpectralResult> {
    if size < levels + 2 {
        return Err(Error::InvalidInput(format!("grid size {size} too small for {levels} levels")));
    }
    // odd node counts keep x = 0 on every mesh
    let base = size | 1;
    let half_width = options.half_width.unwrap_or_else(|| problem.auto_half_width(levels));
    let depth = options.richardson_levels.max(1);
    let mut tableau: Vec<Vec<Vec<f64>>> = Vec::with_capacity(depth);
    let mut n = base;
    let mut finest = None;
    for l in 0..depth {
        let mesh = fd_mesh(problem, half_width, n);
        let raw = mesh.matrix.lowest_eigenvalues(levels);
        let mut row = vec![raw];
        for k in 1..=l {
            let f = 4f64.powi(k as i32) - 1.0;
            let prev = &tableau[l - 1][k - 1];
            let cur = &row[k - 1];
            row.push(cur.iter().zip(prev).map(|(c, p)| c + (c - p) / f).collect());
        }
        tableau.push(row);
        if l + 1 == depth {
            finest = Some(mesh);
        }
        n = 2 * n + 1;
    }
    let last = tableau.last().expect("at least one level");
    let eigenvalues = last.last().expect("non-empty row").clone();
    let error = if last.len() >= 2 {
        let prev = &last[last.len() - 2];
        eigenvalues.iter().zip(prev).map(|(a, b)| (a - b).abs()).collect()
    } else {
        vec![f64::NAN; levels]
    };

    let mesh = finest.expect("finest mesh");
    let raw_fine = &last[0];
    let mut profiles = Vec::new();
    for &e in raw_fine {
        let prof = log_profile(problem, &mesh, e);
        let peak = prof.log_abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let edge = prof.log_abs[0].max(prof.log_abs[prof.log_abs.len() - 1]);
        let mass = (2.0 * (edge - peak)).exp();
        if mass > options.boundary_tolerance {
            return Err(Error::DomainTooSmall {
                mass,
                tolerance: options.boundary_tolerance,
            });
        }
        if options.profiles {
            profiles.push(prof);
        }
    }
    Ok(SpectralResult {
        method: Method::FiniteDifference,
        size: base,
        eigenvalues,
        error,
        grid: if options.profiles { mesh.x } else { Vec::new() },
        profiles,
    })
}

/// Eigenvector in log space for the discrete eigenvalue `e`.
///
/// Inward ratio recursions `r_i = 1/(D_i − r_{i±1})` with
/// `D_i = 2 + 2mh²(V_i − e)/ℏ²` run from both ends to the peak of the
/// inverse-iteration vector, so tails keep full relative accuracy far below
/// the underflow threshold. Normalized to `ψ(0) = 1` when `ψ(0)` is not
/// negligible, otherwise to `max |ψ| = 1`.
fn log_profile(problem: &SpectralProblem, mesh: &Mesh, e: f64) -> LogProfile {
    let n = mesh.x.len();
    let c = 2.0 * problem.mass * mesh.h * mesh.h / (problem.hbar * problem.hbar);
    let d: Vec<f64> = mesh
        .x
        .iter()
        .map(|&x| 2.0 + c * (problem.potential.eval(x) - e))
        .collect();
    let v = mesh.matrix.eigenvector(e);
    let (peak, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, a)| if a.abs() > bv { (i, a.abs()) } else { (bi, bv) });
    let mut log_abs = vec![0.0; n];
    let mut sign = vec![0.0; n];
    sign[peak] = v[peak].signum();

    // r[i] = ψ_i / ψ_{i−1} for i > peak
    let mut r = vec![0.0; n + 1];
    for i in (peak + 1..n).rev() {
        r[i] = 1.0 / (d[i] - r[i + 1]);
    }
    for i in peak + 1..n {
        log_abs[i] = log_abs[i - 1] + r[i].abs().ln();
        sign[i] = sign[i - 1] * r[i].signum();
    }
    // s[i] = ψ_i / ψ_{i+1} for i < peak
    let mut s = vec![0.0; n];
    let mut prev = 0.0;
    for i in 0..peak {
        s[i] = 1.0 / (d[i] - prev);
        prev = s[i];
    }
    for i in (0..peak).rev() {
        log_abs[i] = log_abs[i + 1] + s[i].abs().ln();
        sign[i] = sign[i + 1] * s[i].signum();
    }

    let mid = n / 2;
    let shift = if mesh.x[mid] == 0.0 && log_abs[mid] > -18.0 {
        log_abs[mid]
    } else {
        0.0
    };
    if shift != 0.0 && sign[mid] < 0.0 {
        sign.iter_mut().for_each(|s| *s = -*s);
    }
    log_abs.iter_mut().for_each(|l| *l -= shift);
    LogProfile { log_abs, sign }
}

/// `V − ½ m ω_b² x²` plus `ℏω_b(n + ½)` on the first `size` oscillator states.
fn basis_hamiltonian(problem: &SpectralProblem, size: usize, omega: f64) -> DMatrix<f64> {
    let deg = problem.potential.degree();
    let big = size + deg + 1;
    let scale = (problem.hbar / (problem.mass * omega)).sqrt();
    let mut x = DMatrix::<f64>::zeros(big, big);
    for n in 0..big - 1 {
        let v = scale * ((n + 1) as f64 / 2.0).sqrt();
        x[(n, n + 1)] = v;
        x[(n + 1, n)] = v;
    }
    // Horner on matrices; rows below `size` are exact despite the truncation
    let c = problem.potential.coeffs();
    let mut v = DMatrix::<f64>::identity(big, big) * c[deg];
    for k in (0..deg).rev() {
        v = &v * &x + DMatrix::<f64>::identity(big, big) * c[k];
    }
    let x2 = &x * &x;
    let mut h = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        for j in 0..size {
            h[(i, j)] = v[(i, j)] - 0.5 * problem.mass * omega * omega * x2[(i, j)];
        }
        h[(i, i)] += problem.hbar * omega * (i as f64 + 0.5);
    }
    // symmetrize away the rounding of the matrix products
    (&h + h.transpose()) * 0.5
}

fn lowest(h: DMatrix<f64>, levels: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(levels);
    ev
}

fn harmonic_basis(
    problem: &SpectralProblem,
    size: usize,
    levels: usize,
    options: &SpectrumOptions,
) -> Result<SpectralResult> {
    if size < 2 * levels {
        return Err(Error::InvalidInput(format!("basis size {size} too small for {levels} levels")));
    }
    let omega = options.basis_omega.unwrap_or_else(|| problem.curvature_frequency());
    let eigenvalues = lowest(basis_hamiltonian(problem, size, omega), levels);
    let coarse = lowest(basis_hamiltonian(problem, size / 2, omega), levels);
    let error = eigenvalues.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).collect();
    Ok(SpectralResult {
        method: Method::HarmonicBasis,
        size,
        eigenvalues,
        error,
        grid: Vec::new(),
        profiles: Vec::new(),
    })
}

/// Pointwise `−ℏ log ψ(x) / S₀(x)` over a window.
#[derive(Debug, Clone)]
pub struct TailReport {
    pub x: Vec<f64>,
    pub ratio: Vec<f64>,
    pub mean: f64,
    /// `max |ratio − 1|`.
    pub max_deviation: f64,
}

impl TailReport {
    fn from_pairs(x: Vec<f64>, ratio: Vec<f64>) -> Result<Self> {
        if ratio.is_empty() {
            return Err(Error::InvalidInput("tail window contains no grid nodes".into()));
        }
        if ratio.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidInput("eigenvector underflowed or vanished in the tail window".into()));
        }
        let mean = ratio.iter().sum::<f64>() / ratio.len() as f64;
        let max_deviation = ratio.iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs()));
        Ok(Self { x, ratio, mean, max_deviation })
    }
}

/// Decay exponent of level `level` relative to `S₀` on `window`.
pub fn tail_exponent(
    result: &SpectralResult,
    level: usize,
    sol: &FundamentalSolution1D,
    hbar: f64,
    window: (f64, f64),
) -> Result<TailReport> {
    let prof = result
        .profiles
        .get(level)
        .ok_or_else(|| Error::InvalidInput(format!("no eigenvector profile for level {level}")))?;
    let (mut xs, mut ratio) = (Vec::new(), Vec::new());
    for (i, &x) in result.grid.iter().enumerate() {
        if x < window.0 || x > window.1 {
            continue;
        }
        if prof.sign[i] <= 0.0 {
            return Err(Error::InvalidInput("eigenvector not positive on the tail window".into()));
        }
        xs.push(x);
        ratio.push(-hbar * prof.log_abs[i] / sol.value_at(x));
    }
    TailReport::from_pairs(xs, ratio)
}

/// The same ratio for the Gaussian `exp(−mωx²/2ℏ)` of the harmonic part.
pub fn gaussian_tail_ratio(sol: &FundamentalSolution1D, window: (f64, f64), points: usize) -> Result<TailReport> {
    let mw = sol.mass() * sol.omega();
    let n = points.max(2);
    let xs: Vec<f64> = (0..n)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64)
        .collect();
    let ratio = xs.iter().map(|&x| 0.5 * mw * x * x / sol.value_at(x)).collect();
    TailReport::from_pairs(xs, ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj1d::Grid1D;

    fn opts() -> SpectrumOptions {
        SpectrumOptions::default()
    }

    #[test]
    fn harmonic_levels() {
        let p = SpectralProblem::from_potential(&Potential1D::harmonic(1.0, 1.0).unwrap(), 1.0).unwrap();
        let r = solve_spectrum(&p, Method::FiniteDifference, 2000, 4, &opts()).unwrap();
        for (n, e) in r.eigenvalues.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-8, "n={n}: {e}");
        }
        let b = solve_spectrum(&p, Method::HarmonicBasis, 20, 4, &opts()).unwrap();
        for (n, e) in b.eigenvalues.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn methods_agree_on_quartic() {
        let p = SpectralProblem::from_potential(&Potential1D::quartic(0.1), 1.0).unwrap();
        let fd = solve_spectrum(&p, Method::FiniteDifference, 1001, 4, &opts()).unwrap();
        let b = solve_spectrum(&p, Method::HarmonicBasis, 160, 4, &opts()).unwrap();
        for k in 0..4 {
            assert!((fd.eigenvalues[k] - b.eigenvalues[k]).abs() < 1e-8, "level {k}");
        }
        assert!((fd.eigenvalues[0] - 0.559146327183519).abs() < 1e-9);
    }

    #[test]
    fn gaussian_profile_is_exact_in_log_space() {
        let p = SpectralProblem::from_potential(&Potential1D::harmonic(1.0, 1.0).unwrap(), 1.0).unwrap();
        let o = SpectrumOptions { profiles: true, ..opts() };
        let r = solve_spectrum(&p, Method::FiniteDifference, 801, 1, &o).unwrap();
        let v = Potential1D::harmonic(1.0, 1.0).unwrap();
        let g = Grid1D::uniform(1.0, 0.5).unwrap();
        let sol = FundamentalSolution1D::new(&v, &g).unwrap();
        let t = tail_exponent(&r, 0, &sol, 1.0, (3.0, 5.0)).unwrap();
        assert!(t.max_deviation < 1e-4, "{}", t.max_deviation);
    }

    #[test]
    fn quartic_tail_beats_gaussian() {
        let v = Potential1D::quartic(0.1);
        let p = SpectralProblem::from_potential(&v, 1.0).unwrap();
        let o = SpectrumOptions { profiles: true, ..opts() };
        let r = solve_spectrum(&p, Method::FiniteDifference, 1001, 1, &o).unwrap();
        let sol = FundamentalSolution1D::new(&v, &Grid1D::uniform(1.0, 0.5).unwrap()).unwrap();
        let t = tail_exponent(&r, 0, &sol, 1.0, (3.0, 5.0)).unwrap();
        eprintln!("tail mean {} max dev {}", t.mean, t.max_deviation);
        assert!(t.ratio.iter().all(|r| (0.9..=1.1).contains(r)));
        let g = gaussian_tail_ratio(&sol, (3.0, 5.0), 21).unwrap();
        assert!(g.ratio.iter().all(|r| *r < 0.9));
    }

    #[test]
    fn susy_zero_mode() {
        let w = Superpotential::new(vec![0.0, 0.0, 0.5, 0.0, 0.1]).unwrap();
        let p = SpectralProblem::susy_sector(&w, Sector::Empty, 1.0).unwrap();
        let r = solve_spectrum(&p, Method::FiniteDifference, 1001, 2, &opts()).unwrap();
        assert!(r.eigenvalues[0].abs() < 1e-8, "{}", r.eigenvalues[0]);
        let f = SpectralProblem::susy_sector(&w, Sector::Filled, 1.0).unwrap();
        let rf = solve_spectrum(&f, Method::FiniteDifference, 1001, 1, &opts()).unwrap();
        // isospectral partner: filled ground state equals the empty first excited level
        assert!((rf.eigenvalues[0] - r.eigenvalues[1]).abs() < 1e-8);
    }
}
