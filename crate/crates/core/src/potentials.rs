//! Polynomial single-well potentials, superpotentials, and admissibility checks.
//!
//! Every potential has the form `V(x) = ½ m Σ ω_i² x_i² + A(x)` where the
//! anharmonic remainder `A` contains only monomials of total degree ≥ 3.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::Polynomial;

/// Common evaluation interface; derivatives are exact on the coefficients.
pub trait Potential {
    fn dim(&self) -> usize;
    fn mass(&self) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// `V(x) = ½ m ω² x² + Σ c_p x^p` with every `p ≥ 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential1D {
    mass: f64,
    omega: f64,
    lambda: f64,
    terms: Vec<(u32, f64)>,
    poly: Polynomial,
}

impl Potential1D {
    pub fn new(mass: f64, omega: f64, terms: Vec<(u32, f64)>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        if let Some((p, _)) = terms.iter().find(|(p, _)| *p < 3) {
            return Err(Error::InvalidInput(format!(
                "anharmonic monomial x^{p} has degree below 3; put quadratic terms in omega"
            )));
        }
        let degree = terms.iter().map(|(p, _)| *p as usize).max().unwrap_or(2);
        let mut c = vec![0.0; degree + 1];
        c[2] = 0.5 * mass * omega * omega;
        for &(p, v) in &terms {
            c[p as usize] += v;
        }
        Ok(Self {
            mass,
            omega,
            lambda: 0.0,
            terms,
            poly: Polynomial::new(c),
        })
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, omega, Vec::new())
    }

    /// `½x² + λx⁴` with unit mass and frequency.
    pub fn quartic(lambda: f64) -> Self {
        Self::new(1.0, 1.0, vec![(4, lambda)]).expect("valid quartic")
    }

    /// `½x² + λx⁶` with unit mass and frequency.
    pub fn sectic(lambda: f64) -> Self {
        Self::new(1.0, 1.0, vec![(6, lambda)]).expect("valid sectic")
    }

    /// Declared coercivity constant (must satisfy `0 ≤ λ < ω`).
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(0.0..self.omega).contains(&lambda) {
            return Err(Error::InvalidInput(format!(
                "coercivity constant {lambda} must lie in [0, omega)"
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ν = √(ω² − λ²)`.
    pub fn nu(&self) -> f64 {
        (self.omega * self.omega - self.lambda * self.lambda).sqrt()
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn anharmonic(&self) -> Polynomial {
        let mut c = self.poly.coeffs().to_vec();
        if c.len() > 2 {
            c[2] = 0.0;
        } else {
            c = vec![0.0];
        }
        Polynomial::new(c)
    }

    pub fn is_harmonic(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    pub fn eval_grad(&self, x: f64) -> f64 {
        let c = self.poly.coeffs();
        let mut acc = 0.0;
        for k in (1..c.len()).rev() {
            acc = acc * x + k as f64 * c[k];
        }
        acc
    }

    pub fn eval_hess(&self, x: f64) -> f64 {
        let c = self.poly.coeffs();
        let mut acc = 0.0;
        for k in (2..c.len()).rev() {
            acc = acc * x + (k * (k - 1)) as f64 * c[k];
        }
        acc
    }

    /// `V(x)/x²` evaluated as a polynomial, so it is exact at the origin.
    pub fn v_over_x2(&self, x: f64) -> f64 {
        let c = self.poly.coeffs();
        c[2..].iter().rev().fold(0.0, |acc, v| acc * x + v)
    }

    /// `V′(x)/x` as a polynomial.
    pub fn dv_over_x(&self, x: f64) -> f64 {
        let c = self.poly.coeffs();
        let mut acc = 0.0;
        for k in (2..c.len()).rev() {
            acc = acc * x + k as f64 * c[k];
        }
        acc
    }

    /// `A(x)/x³` as a polynomial.
    pub fn anharmonic_over_x3(&self, x: f64) -> f64 {
        let c = self.poly.coeffs();
        if c.len() <= 3 {
            return 0.0;
        }
        c[3..].iter().rev().fold(0.0, |acc, v| acc * x + v)
    }

    /// Embed as a one-dimensional [`PotentialND`].
    pub fn to_nd(&self) -> PotentialND {
        PotentialND::new(
            self.mass,
            vec![self.omega],
            self.terms
                .iter()
                .map(|&(p, c)| Monomial::new(vec![p], c))
                .collect(),
        )
        .expect("valid embedding")
        .with_lambda(vec![self.lambda])
        .expect("valid lambda")
    }

    /// Check the admissibility hypotheses on `[-half_width, half_width]`.
    pub fn validate(&self, sampling: &SamplingBox) -> ValidationReport {
        let mut report = self.to_nd().validate(sampling);
        let c = self.poly.coeffs();
        let deg = c.len() - 1;
        let lead = c[deg];
        report.checks.push(CheckResult {
            hypothesis: Hypothesis::LeadingTerm,
            passed: deg % 2 == 0 && lead > 0.0,
            worst_value: lead,
            worst_point: Vec::new(),
        });
        report
    }
}

impl Potential for Potential1D {
    fn dim(&self) -> usize {
        1
    }
    fn mass(&self) -> f64 {
        self.mass
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![self.eval_grad(x[0])]
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.eval_hess(x[0]))
    }
}

/// A single term `c · Π x_i^{e_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>, coeff: f64) -> Self {
        Self { exponents, coeff }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(self.coeff, |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }

    /// `∂/∂x_i` of the monomial at `x`.
    fn partial(&self, x: &[f64], i: usize) -> f64 {
        let ei = self.exponents[i];
        if ei == 0 {
            return 0.0;
        }
        let mut v = self.coeff * ei as f64;
        for (j, (&e, &xj)) in self.exponents.iter().zip(x).enumerate() {
            let p = if j == i { e - 1 } else { e };
            v *= xj.powi(p as i32);
        }
        v
    }

    fn second_partial(&self, x: &[f64], i: usize, k: usize) -> f64 {
        let mut e = self.exponents.clone();
        let mut v = self.coeff;
        for idx in [i, k] {
            if e[idx] == 0 {
                return 0.0;
            }
            v *= e[idx] as f64;
            e[idx] -= 1;
        }
        e.iter().zip(x).fold(v, |acc, (&p, &xj)| acc * xj.powi(p as i32))
    }
}

/// `V(x) = ½ m Σ ω_i² x_i² + A(x)` on ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialND {
    mass: f64,
    omega: Vec<f64>,
    lambda: Vec<f64>,
    terms: Vec<Monomial>,
}

impl PotentialND {
    pub fn new(mass: f64, omega: Vec<f64>, terms: Vec<Monomial>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        if omega.is_empty() || omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("frequencies must be positive".into()));
        }
        let n = omega.len();
        for t in &terms {
            if t.exponents.len() != n {
                return Err(Error::InvalidInput(format!(
                    "monomial has {} exponents for a {n}-dimensional potential",
                    t.exponents.len()
                )));
            }
            if t.degree() < 3 {
                return Err(Error::InvalidInput(format!(
                    "anharmonic monomial {:?} has total degree below 3",
                    t.exponents
                )));
            }
        }
        Ok(Self {
            mass,
            lambda: vec![0.0; n],
            omega,
            terms,
        })
    }

    pub fn harmonic(mass: f64, omega: Vec<f64>) -> Result<Self> {
        Self::new(mass, omega, Vec::new())
    }

    pub fn with_lambda(mut self, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != self.omega.len() {
            return Err(Error::InvalidInput("lambda length must match omega".into()));
        }
        for (l, w) in lambda.iter().zip(&self.omega) {
            if !(0.0..*w).contains(l) {
                return Err(Error::InvalidInput(format!(
                    "coercivity constant {l} must lie in [0, {w})"
                )));
            }
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// `ν_i = √(ω_i² − λ_i²)`.
    pub fn nu(&self) -> Vec<f64> {
        self.omega
            .iter()
            .zip(&self.lambda)
            .map(|(w, l)| (w * w - l * l).sqrt())
            .collect()
    }

    /// Anharmonic remainder `A(x)`.
    pub fn anharmonic(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// `½ m Σ ν_i x_i²`, the quadratic lower bound on the fundamental solution.
    pub fn s0_lower_bound(&self, x: &[f64]) -> f64 {
        0.5 * self.mass * self.nu().iter().zip(x).map(|(v, xi)| v * xi * xi).sum::<f64>()
    }

    /// Check the admissibility hypotheses on a sampling box.
    pub fn validate(&self, sampling: &SamplingBox) -> ValidationReport {
        let n = self.dim();
        let half = sampling.half_widths_for(n);
        let pts = sampling.points_per_axis.max(2);
        let tol = 1e-12;
        let mut nonneg = Worst::new();
        let mut origin = Worst::new();
        let mut coerc = Worst::new();
        let mut convex = Worst::new();
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<f64> = idx
                .iter()
                .zip(&half)
                .map(|(&i, &h)| -h + 2.0 * h * i as f64 / (pts - 1) as f64)
                .collect();
            let v = self.value(&x);
            nonneg.offer(v, &x);
            let r2: f64 = x.iter().map(|a| a * a).sum();
            if r2 > 0.0 {
                origin.offer(v / r2, &x);
            }
            let bound: f64 = 0.5
                * self.mass
                * self
                    .lambda
                    .iter()
                    .zip(&x)
                    .map(|(l, xi)| l * l * xi * xi)
                    .sum::<f64>();
            coerc.offer(self.anharmonic(&x) + bound, &x);
            let eig = SymmetricEigen::new(self.hessian(&x)).eigenvalues;
            convex.offer(eig.min(), &x);

            let mut d = 0;
            loop {
                if d == n {
                    break;
                }
                idx[d] += 1;
                if idx[d] < pts {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        let scale = 1.0 + nonneg.max_seen.abs();
        let checks = vec![
            nonneg.finish(Hypothesis::Nonnegativity, |v| v >= -tol * scale),
            origin.finish(Hypothesis::OriginMinimum, |v| v > 0.0),
            coerc.finish(Hypothesis::Coercivity, |v| v >= -tol * scale),
            convex.finish(Hypothesis::Convexity, |v| v >= -tol * scale),
        ];
        ValidationReport {
            half_widths: half,
            points_per_axis: pts,
            checks,
        }
    }
}

impl Potential for PotentialND {
    fn dim(&self) -> usize {
        self.omega.len()
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn value(&self, x: &[f64]) -> f64 {
        let quad: f64 = self.omega.iter().zip(x).map(|(w, xi)| w * w * xi * xi).sum();
        0.5 * self.mass * quad + self.anharmonic(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.mass * self.omega[i] * self.omega[i] * x[i]
                    + self.terms.iter().map(|t| t.partial(x, i)).sum::<f64>()
            })
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, k| {
            let h = if i == k { self.mass * self.omega[i] * self.omega[i] } else { 0.0 };
            h + self.terms.iter().map(|t| t.second_partial(x, i, k)).sum::<f64>()
        })
    }
}

/// Grid on which hypotheses are sampled: `points_per_axis` nodes spanning
/// `[-h_i, h_i]` along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingBox {
    pub half_widths: Vec<f64>,
    pub points_per_axis: usize,
}

impl SamplingBox {
    pub fn cube(half_width: f64, points_per_axis: usize) -> Self {
        Self {
            half_widths: vec![half_width],
            points_per_axis,
        }
    }

    fn half_widths_for(&self, n: usize) -> Vec<f64> {
        if self.half_widths.len() == n {
            self.half_widths.clone()
        } else {
            vec![self.half_widths[0]; n]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Nonnegativity,
    OriginMinimum,
    Coercivity,
    Convexity,
    /// One-dimensional only: the top-degree coefficient is even and positive.
    LeadingTerm,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Nonnegativity => "nonnegativity",
            Hypothesis::OriginMinimum => "origin_minimum",
            Hypothesis::Coercivity => "coercivity",
            Hypothesis::Convexity => "convexity",
            Hypothesis::LeadingTerm => "leading_term",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    /// Smallest sampled value of the checked quantity: `V`, `V/|x|²`,
    /// `A + ½mΣλ²x²`, or the minimum Hessian eigenvalue.
    pub worst_value: f64,
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub half_widths: Vec<f64>,
    pub points_per_axis: usize,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, h: Hypothesis) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.hypothesis == h)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `Ok(self)` when every hypothesis holds, otherwise a validation error naming the failures.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let msg = self
            .failures()
            .map(|c| format!("{} (worst {:.3e} at {:?})", c.hypothesis.name(), c.worst_value, c.worst_point))
            .collect::<Vec<_>>()
            .join(", ");
        Err(Error::Validation(msg))
    }
}

struct Worst {
    value: f64,
    point: Vec<f64>,
    max_seen: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: f64::INFINITY,
            point: Vec::new(),
            max_seen: 0.0,
        }
    }

    fn offer(&mut self, v: f64, x: &[f64]) {
        if v < self.value {
            self.value = v;
            self.point = x.to_vec();
        }
        self.max_seen = self.max_seen.max(v.abs());
    }

    fn finish(self, hypothesis: Hypothesis, ok: impl Fn(f64) -> bool) -> CheckResult {
        CheckResult {
            hypothesis,
            passed: ok(self.value),
            worst_value: self.value,
            worst_point: self.point,
        }
    }
}

/// Fermion sector of a one-dimensional supersymmetric pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Potential `½W′² − (ℏ/2)W″`; annihilated by `e^{−W/ℏ}` when `W` grows at infinity.
    Empty,
    /// Potential `½W′² + (ℏ/2)W″`.
    Filled,
}

impl Sector {
    /// Sign in front of `(ℏ/2)W″`.
    pub fn sign(self) -> f64 {
        match self {
            Sector::Empty => -1.0,
            Sector::Filled => 1.0,
        }
    }
}

/// Polynomial superpotential `W(x)` with `W(0) = W′(0) = 0`, `W″(0) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superpotential {
    w: Polynomial,
}

impl Superpotential {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let w = Polynomial::new(coeffs);
        if w.coeff(0) != 0.0 || w.coeff(1) != 0.0 {
            return Err(Error::InvalidInput(
                "superpotential needs W(0) = 0 and W'(0) = 0".into(),
            ));
        }
        if w.coeff(2) <= 0.0 {
            return Err(Error::InvalidInput("superpotential needs W''(0) > 0".into()));
        }
        Ok(Self { w })
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.w
    }

    /// `½W′²` as a unit-mass [`Potential1D`] with `ω = W″(0)`.
    pub fn bosonic_potential(&self) -> Potential1D {
        let dw = self.w.derivative();
        let v = dw.mul(&dw).scale(0.5);
        let omega = 2.0 * self.w.coeff(2);
        let terms = v
            .coeffs()
            .iter()
            .enumerate()
            .skip(3)
            .filter(|(_, c)| **c != 0.0)
            .map(|(p, c)| (p as u32, *c))
            .collect();
        Potential1D::new(1.0, omega, terms).expect("W'' (0) > 0 gives a valid potential")
    }

    /// The order-ℏ term `U(x) = ∓½W″(x)` so that `V_± = ½W′² + ℏU`.
    pub fn sector_correction(&self, sector: Sector) -> Polynomial {
        self.w.derivative().derivative().scale(0.5 * sector.sign())
    }

    /// Full sector potential at a given ℏ, as a dense polynomial.
    pub fn sector_polynomial(&self, sector: Sector, hbar: f64) -> Polynomial {
        self.bosonic_potential()
            .polynomial()
            .add(&self.sector_correction(sector).scale(hbar))
    }
}
