//! Padé and Borel-Padé summation of truncated power series.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_gk15, Polynomial};
use crate::rspt::PowerSeries;

/// Relative singular-value floor below which a Padé system counts as singular.
const RANK_TOLERANCE: f64 = 1e-13;

/// Rational approximant `P_L(z)/Q_M(z)` with `Q(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pade {
    pub requested: (usize, usize),
    pub l: usize,
    pub m: usize,
    pub numerator: Polynomial,
    pub denominator: Polynomial,
}

impl Pade {
    /// True when the denominator degree had to be lowered.
    pub fn reduced(&self) -> bool {
        (self.l, self.m) != self.requested
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.numerator.eval(z) / self.denominator.eval(z)
    }

    /// Zeros of the denominator.
    pub fn poles(&self) -> Vec<nalgebra::Complex<f64>> {
        self.denominator.roots()
    }
}

/// `[L/M]` approximant of `Σ c_k zᵏ`.
///
/// The denominator solves the `M × M` Toeplitz system
/// `Σ_{j=0}^{M} q_j c_{k−j} = 0` for `k = L+1..=L+M`; when that system is
/// rank-deficient `M` is lowered until it is not.
pub fn pade(coeffs: &[f64], l: usize, m: usize) -> Result<Pade> {
    if l + m + 1 > coeffs.len() {
        return Err(Error::InvalidInput(format!(
            "[{l}/{m}] needs {} coefficients, have {}",
            l + m + 1,
            coeffs.len()
        )));
    }
    let c = |k: isize| if k < 0 { 0.0 } else { coeffs[k as usize] };
    for mm in (0..=m).rev() {
        let q = if mm == 0 {
            vec![1.0]
        } else {
            let a = DMatrix::from_fn(mm, mm, |r, col| c((l + 1 + r) as isize - (col + 1) as isize));
            let b = DVector::from_fn(mm, |r, _| -c((l + 1 + r) as isize));
            let svd = a.svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smax > 0.0) || smin <= RANK_TOLERANCE * smax {
                continue;
            }
            let sol = svd
                .solve(&b, 0.0)
                .map_err(|e| Error::Singular(format!("Padé denominator: {e}")))?;
            std::iter::once(1.0).chain(sol.iter().copied()).collect()
        };
        let p: Vec<f64> = (0..=l)
            .map(|k| (0..=mm.min(k)).map(|j| q[j] * c((k - j) as isize)).sum())
            .collect();
        return Ok(Pade {
            requested: (l, m),
            l,
            m: mm,
            numerator: Polynomial::new(p),
            denominator: Polynomial::new(q),
        });
    }
    Err(Error::Singular("Padé system singular for every denominator degree".into()))
}

/// Borel transform `c_k → c_k / k!`.
pub fn borel_transform(coeffs: &[f64]) -> Vec<f64> {
    let mut f = 1.0;
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k > 0 {
                f *= k as f64;
            }
            c / f
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResummationMethod {
    Pade,
    BorelPade,
}

impl ResummationMethod {
    pub fn name(self) -> &'static str {
        match self {
            ResummationMethod::Pade => "pade",
            ResummationMethod::BorelPade => "borel-pade",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResummationReport {
    pub method: ResummationMethod,
    pub requested: (usize, usize),
    pub used: (usize, usize),
    pub point: f64,
    pub value: f64,
    /// Quadrature error estimate (Borel-Padé only).
    pub quadrature_error: f64,
    pub poles: Vec<nalgebra::Complex<f64>>,
    /// Smallest angle in radians between a pole and the integration ray
    /// (for Padé: the segment `[0, z]`).
    pub nearest_pole_angle: f64,
    pub reliable: bool,
}

/// Options for [`borel_pade`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorelOptions {
    /// Poles closer than this angle to the ray flag the value as unreliable.
    pub pole_angle: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for BorelOptions {
    fn default() -> Self {
        Self {
            pole_angle: 5f64.to_radians(),
            abs_tol: 1e-15,
            rel_tol: 1e-13,
        }
    }
}

fn pole_angle(p: &nalgebra::Complex<f64>) -> f64 {
    p.im.atan2(p.re).abs()
}

/// Padé approximant evaluated at `z`, flagged if a pole lies on `[0, z]`.
pub fn pade_value(series: &PowerSeries, l: usize, m: usize, z: f64) -> Result<ResummationReport> {
    let approx = pade(&series.coeffs, l, m)?;
    let poles = approx.poles();
    let on_segment = poles
        .iter()
        .any(|p| p.im.abs() <= 1e-12 * (1.0 + p.re.abs()) && p.re * z.signum() >= 0.0 && p.re.abs() <= z.abs());
    let value = approx.eval(z);
    let nearest = poles.iter().map(pole_angle).fold(f64::INFINITY, f64::min);
    Ok(ResummationReport {
        method: ResummationMethod::Pade,
        requested: (l, m),
        used: (approx.l, approx.m),
        point: z,
        value,
        quadrature_error: 0.0,
        reliable: value.is_finite() && !on_segment,
        poles,
        nearest_pole_angle: nearest,
    })
}

/// `∫₀^∞ e^{−s} B(z s) ds` with `B` the `[L/M]` Padé of the Borel transform.
///
/// The integral is accumulated over `[0, 40]` and then over doubling panels
/// until a panel adds less than `1e-16` of the running value.
pub fn borel_pade(series: &PowerSeries, l: usize, m: usize, z: f64, options: &BorelOptions) -> Result<ResummationReport> {
    if !(z > 0.0) {
        return Err(Error::InvalidInput(format!("Borel evaluation point must be positive, got {z}")));
    }
    let approx = pade(&borel_transform(&series.coeffs), l, m)?;
    let poles = approx.poles();
    let nearest = poles.iter().map(pole_angle).fold(f64::INFINITY, f64::min);
    let integrand = |s: f64| (-s).exp() * approx.eval(z * s);

    let first = adaptive_gk15(integrand, 0.0, 40.0, options.abs_tol, options.rel_tol, 4000);
    let mut value = first.value;
    let mut error = first.error;
    let mut a = 40.0;
    while a < 1e4 {
        let panel = adaptive_gk15(integrand, a, 2.0 * a, options.abs_tol, options.rel_tol, 4000);
        value += panel.value;
        error += panel.error;
        a *= 2.0;
        if panel.value.abs() <= 1e-16 * value.abs() {
            break;
        }
    }
    if !value.is_finite() {
        return Err(Error::Singular(format!(
            "Laplace integral diverged; nearest Borel pole {:.2} degrees from the ray",
            nearest.to_degrees()
        )));
    }
    Ok(ResummationReport {
        method: ResummationMethod::BorelPade,
        requested: (l, m),
        used: (approx.l, approx.m),
        point: z,
        value,
        quadrature_error: error,
        reliable: nearest >= options.pole_angle,
        poles,
        nearest_pole_angle: nearest,
    })
}
