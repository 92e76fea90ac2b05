//! Rayleigh-Schrödinger perturbation theory in the harmonic-oscillator basis.
//!
//! Lengths are measured in units of `√(ℏ/mω)`, so `x = (a + a†)/√2`.
//! Substituting `x → √ℏ ξ` turns `H/(ℏω)` into `H₀ + Σ_p c̃_p ε^{p−2} ξ^p`
//! with `ε = √ℏ` and `c̃_p = c_p/(m^{p/2} ω^{p/2+1})`; the energy is then
//! `E = ℏ Σ_j ℏ^j e_j` with `e_j = ω E^{(2j)}`, which is the same bookkeeping
//! the grid hierarchy uses.
//!
//! Exact mode works in the unnormalized basis `f_n = |n⟩/√(n!)` where
//! `a† f_n = (n+1) f_{n+1}` and `a f_n = f_{n−1}`. A diagonal similarity by
//! `√(n!) 2^{n/2}` makes every matrix of `ξ^p` rational, so the recursion runs
//! in `BigRational` with no rounding.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::potentials::Potential1D;

/// Which small parameter a series is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesVariable {
    /// `E = ℏ Σ ℏᵏ c_k`.
    Hbar,
    /// `E = Σ gᵏ c_k` at `ℏ = m = ω = 1` for a single monomial `g x^p`.
    Coupling,
}

impl SeriesVariable {
    pub fn name(self) -> &'static str {
        match self {
            SeriesVariable::Hbar => "hbar",
            SeriesVariable::Coupling => "coupling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    Exact,
    Float,
}

/// Truncated series `c_0 .. c_K`; `exact` is kept alongside the floats when
/// the coefficients were produced without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub variable: SeriesVariable,
    pub state: u32,
    pub coeffs: Vec<f64>,
    pub exact: Option<Vec<BigRational>>,
}

impl PowerSeries {
    pub fn from_floats(variable: SeriesVariable, state: u32, coeffs: Vec<f64>) -> Self {
        Self { variable, state, coeffs, exact: None }
    }

    pub fn from_exact(variable: SeriesVariable, state: u32, exact: Vec<BigRational>) -> Self {
        let coeffs = exact.iter().map(rational_to_f64).collect();
        Self { variable, state, coeffs, exact: Some(exact) }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Σ c_k zᵏ` over the stored terms.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// `c_k → c_k sᵏ`, e.g. to fold a coupling into an ℏ-series.
    pub fn rescaled(&self, s: f64) -> Self {
        let mut f = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * f;
                f *= s;
                v
            })
            .collect();
        Self::from_floats(self.variable, self.state, coeffs)
    }

    /// Plain text: optional `#` header lines, then one coefficient per line,
    /// exact values as `p/q`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# variable = {}", self.variable.name());
        let _ = writeln!(out, "# state = {}", self.state);
        match &self.exact {
            Some(ex) => {
                for c in ex {
                    let _ = writeln!(out, "{}", format_rational(c));
                }
            }
            None => {
                for c in &self.coeffs {
                    let _ = writeln!(out, "{c:.16e}");
                }
            }
        }
        out
    }

    /// Inverse of [`PowerSeries::to_text`]. Lines may mix `p/q`, integers and
    /// decimal floats; the series is exact only if every line is rational.
    pub fn parse(text: &str) -> Result<Self> {
        let mut variable = SeriesVariable::Hbar;
        let mut state = 0;
        let mut exact = Vec::new();
        let mut floats = Vec::new();
        let mut all_exact = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    match (k.trim(), v.trim()) {
                        ("variable", "hbar") => variable = SeriesVariable::Hbar,
                        ("variable", "coupling") => variable = SeriesVariable::Coupling,
                        ("state", s) => {
                            state = s.parse().map_err(|_| Error::Parse(format!("bad state '{s}'")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            match parse_rational(line) {
                Some(r) => {
                    floats.push(rational_to_f64(&r));
                    exact.push(r);
                }
                None => {
                    let v: f64 = line
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad coefficient '{line}'", lineno + 1)))?;
                    all_exact = false;
                    floats.push(v);
                }
            }
        }
        if floats.is_empty() {
            return Err(Error::Parse("series has no coefficients".into()));
        }
        Ok(if all_exact {
            Self::from_exact(variable, state, exact)
        } else {
            Self::from_floats(variable, state, floats)
        })
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Correctly rounded for the magnitudes that occur here, including
/// numerators and denominators far beyond the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let (n, d) = (r.numer().abs(), r.denom().clone());
    let shift = n.bits() as i64 - d.bits() as i64;
    let scaled = if shift > 0 {
        BigRational::new(n, d << shift as usize)
    } else {
        BigRational::new(n << (-shift) as usize, d)
    };
    let v = scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32);
    if r.is_negative() {
        -v
    } else {
        v
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Column `j` of `(a + a†)^p` in the `f` basis, as integers.
fn ladder_column(p: u32, j: usize) -> HashMap<usize, BigInt> {
    let mut v: HashMap<usize, BigInt> = HashMap::from([(j, BigInt::one())]);
    for _ in 0..p {
        let mut w: HashMap<usize, BigInt> = HashMap::new();
        for (k, c) in v {
            *w.entry(k + 1).or_default() += &c * BigInt::from(k + 1);
            if k > 0 {
                *w.entry(k - 1).or_default() += c;
            }
        }
        v = w;
    }
    v
}

/// `⟨i|x^p|j⟩ = rational · √radicand` with a square-free radicand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixElement {
    pub rational: BigRational,
    pub radicand: BigUint,
}

impl MatrixElement {
    pub fn to_f64(&self) -> f64 {
        let r = self.radicand.to_f64().unwrap_or(f64::INFINITY);
        rational_to_f64(&self.rational) * r.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero()
    }
}

fn primes_upto(n: usize) -> Vec<usize> {
    (2..=n).filter(|&k| (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0)).collect()
}

/// Exponent of the prime `q` in `n!`.
fn legendre(n: usize, q: usize) -> usize {
    let mut e = 0;
    let mut t = n / q;
    while t > 0 {
        e += t;
        t /= q;
    }
    e
}

/// Exact harmonic-oscillator matrix element of `x^p`, units `mω/ℏ = 1`.
///
/// `⟨i|x^p|j⟩ = 2^{−p/2} K′_{ij} √(j!/i!)`, where `K′` is the integer matrix of
/// `(a + a†)^p` in the `f` basis.
pub fn matrix_element(p: u32, i: usize, j: usize) -> MatrixElement {
    let zero = MatrixElement {
        rational: BigRational::zero(),
        radicand: BigUint::one(),
    };
    if i.abs_diff(j) > p as usize || (i + j + p as usize) % 2 == 1 {
        return zero;
    }
    let k = match ladder_column(p, j).remove(&i) {
        Some(k) if !k.is_zero() => k,
        _ => return zero,
    };
    // √(j!/i!) 2^{−p/2} = √(2^{p mod 2} i! j!) / (i! 2^{⌈p/2⌉})
    let odd = p % 2 == 1;
    let mut outside = BigInt::one();
    let mut radicand = BigUint::one();
    for q in primes_upto(i.max(j).max(2)) {
        let e = legendre(i, q) + legendre(j, q) + usize::from(odd && q == 2);
        outside *= BigInt::from(q).pow((e / 2) as u32);
        if e % 2 == 1 {
            radicand *= BigUint::from(q);
        }
    }
    let denom = factorial(i) * BigInt::from(2).pow(p.div_ceil(2));
    MatrixElement {
        rational: BigRational::new(k * outside, denom),
        radicand,
    }
}

/// `f64` to the exactly equal rational.
fn exact_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidInput(format!("non-finite coefficient {v}")))
}

/// Scalar operations the recursion needs, so one routine serves both modes.
trait Field: Clone + Zero + PartialEq {
    fn from_int(v: i64) -> Self;
    fn fmul(&self, o: &Self) -> Self;
    fn fdiv(&self, o: &Self) -> Self;
    fn fsub(&self, o: &Self) -> Self;
    fn fadd(&self, o: &Self) -> Self;
}

impl Field for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fdiv(&self, o: &Self) -> Self {
        self / o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
}

impl Field for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fdiv(&self, o: &Self) -> Self {
        self / o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
}

/// Sparse matrix: for each column, its nonzero rows.
type Sparse<T> = Vec<Vec<(usize, T)>>;

fn apply<T: Field>(w: &Sparse<T>, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    for (j, vj) in v.iter().enumerate() {
        if vj.is_zero() {
            continue;
        }
        for (i, wij) in &w[j] {
            out[*i] = out[*i].fadd(&wij.fmul(vj));
        }
    }
    out
}

/// Energies `E^{(0..=order)}` and states `ψ_{0..=order}` for
/// `H = H₀ + Σ_q εᵍ W_q` (`perturbations[q − 1] = W_q`), `H₀ = diag(i + ½)`,
/// intermediate normalization.
fn recursion<T: Field>(n: usize, order: usize, perturbations: &[Sparse<T>], size: usize) -> (Vec<T>, Vec<Vec<T>>) {
    let half = T::from_int(1).fdiv(&T::from_int(2));
    let mut e = vec![T::from_int(n as i64).fadd(&half)];
    let mut psi0 = vec![T::zero(); size];
    psi0[n] = T::from_int(1);
    let mut psi = vec![psi0];
    for k in 1..=order {
        let mut source = vec![T::zero(); size];
        for (q, w) in perturbations.iter().enumerate() {
            let q = q + 1;
            if q > k || w.iter().all(|c| c.is_empty()) {
                continue;
            }
            let wp = apply(w, &psi[k - q]);
            for (s, v) in source.iter_mut().zip(wp) {
                *s = s.fadd(&v);
            }
        }
        let ek = source[n].clone();
        let mut next = vec![T::zero(); size];
        for i in 0..size {
            if i == n {
                continue;
            }
            let mut s = source[i].clone();
            for l in 1..=k {
                let el = if l < k { &e[l] } else { &ek };
                if !el.is_zero() && !psi[k - l][i].is_zero() {
                    s = s.fsub(&el.fmul(&psi[k - l][i]));
                }
            }
            next[i] = s.fdiv(&T::from_int(n as i64 - i as i64));
        }
        e.push(ek);
        psi.push(next);
    }
    (e, psi)
}

/// `ξ^p` in the scaled `f` basis: `K′_{ij} 2^{(i−j−p)/2}`, rows below `size`.
fn scaled_power(p: u32, size: usize) -> Sparse<BigRational> {
    (0..size)
        .map(|j| {
            let mut col: Vec<(usize, BigRational)> = ladder_column(p, j)
                .into_iter()
                .filter(|(i, k)| *i < size && !k.is_zero())
                .map(|(i, k)| {
                    let e = (i as i64 - j as i64 - p as i64) / 2;
                    let two = BigRational::from_integer(BigInt::from(2));
                    (i, BigRational::from_integer(k) * two.pow(e as i32))
                })
                .collect();
            col.sort_by_key(|(i, _)| *i);
            col
        })
        .collect()
}

/// `ξ^p` in the orthonormal basis, rows below `size`.
fn orthonormal_power(p: u32, size: usize) -> Sparse<f64> {
    (0..size)
        .map(|j| {
            let lo = j.saturating_sub(p as usize);
            (lo..(j + p as usize + 1).min(size))
                .filter_map(|i| {
                    let v = matrix_element(p, i, j);
                    (!v.is_zero()).then(|| (i, v.to_f64()))
                })
                .collect()
        })
        .collect()
}

fn scale_sparse<T: Field>(w: &mut Sparse<T>, other: &Sparse<T>, c: &T) {
    for (col, ocol) in w.iter_mut().zip(other) {
        for (i, v) in ocol {
            let add = v.fmul(c);
            match col.iter_mut().find(|(r, _)| r == i) {
                Some((_, x)) => *x = x.fadd(&add),
                None => col.push((*i, add)),
            }
        }
    }
}

/// Basis size that makes the truncation exact through ε-order `order`:
/// `ξ^{q+2}` at order `q` moves at most `3q` levels.
fn basis_size(n: usize, order: usize) -> usize {
    n + 3 * order + 1
}

/// Energy series of state `n` in ℏ: coefficients `e_0..=e_K` with
/// `E = ℏ Σ ℏᵏ e_k`, for the anharmonic part of `potential` treated as the
/// perturbation.
///
/// Exact mode needs `√(mω)` to be a representable rational when odd powers
/// are present, since `c̃_p` then carries `(mω)^{p/2}`.
pub fn rs_series(potential: &Potential1D, n: u32, order: usize, arithmetic: Arithmetic) -> Result<PowerSeries> {
    let n_us = n as usize;
    let eps_order = 2 * order;
    let size = basis_size(n_us, eps_order);
    let m = potential.mass();
    let w = potential.omega();
    let max_q = potential.terms().iter().map(|(p, _)| *p as usize - 2).max().unwrap_or(1);
    match arithmetic {
        Arithmetic::Exact => {
            let mr = exact_from_f64(m)?;
            let wr = exact_from_f64(w)?;
            let mw = &mr * &wr;
            let root = exact_from_f64((m * w).sqrt())?;
            let root_exact = &root * &root == mw;
            let mut pert: Vec<Sparse<BigRational>> = vec![vec![Vec::new(); size]; max_q];
            for &(p, c) in potential.terms() {
                // c̃_p = c / ((mω)^{p/2} ω)
                let half = (mw.clone()).pow((p / 2) as i32);
                let scale = if p % 2 == 1 {
                    if !root_exact {
                        return Err(Error::InvalidInput(
                            "exact RSPT with odd powers needs sqrt(m*omega) to be exactly representable".into(),
                        ));
                    }
                    half * &root
                } else {
                    half
                };
                let ct = exact_from_f64(c)? / (scale * &wr);
                let q = p as usize - 2;
                scale_sparse(&mut pert[q - 1], &scaled_power(p, size), &ct);
            }
            let (e, _) = recursion(n_us, eps_order, &pert, size);
            for (k, v) in e.iter().enumerate() {
                if k % 2 == 1 && !v.is_zero() {
                    // odd ε orders vanish by parity of the oscillator states
                    return Err(Error::InvalidInput(format!("odd epsilon order {k} did not vanish")));
                }
            }
            let coeffs = e.iter().step_by(2).map(|v| v * &wr).collect();
            Ok(PowerSeries::from_exact(SeriesVariable::Hbar, n, coeffs))
        }
        Arithmetic::Float => {
            let mut pert: Vec<Sparse<f64>> = vec![vec![Vec::new(); size]; max_q];
            for &(p, c) in potential.terms() {
                let ct = c / ((m * w).powf(p as f64 / 2.0) * w);
                scale_sparse(&mut pert[p as usize - 3], &orthonormal_power(p, size), &ct);
            }
            let (e, _) = recursion(n_us, eps_order, &pert, size);
            let coeffs = e.iter().step_by(2).map(|v| v * w).collect();
            Ok(PowerSeries::from_floats(SeriesVariable::Hbar, n, coeffs))
        }
    }
}

/// Series in the coupling `g` of `H = ½p² + ½x² + g x^p` (ℏ = m = ω = 1).
pub fn coupling_series(p: u32, n: u32, order: usize, arithmetic: Arithmetic) -> Result<PowerSeries> {
    if p < 3 {
        return Err(Error::InvalidInput(format!("perturbing power must be at least 3, got {p}")));
    }
    let n_us = n as usize;
    let size = n_us + p as usize * order + 1;
    Ok(match arithmetic {
        Arithmetic::Exact => {
            let (e, _) = recursion(n_us, order, &[scaled_power(p, size)], size);
            PowerSeries::from_exact(SeriesVariable::Coupling, n, e)
        }
        Arithmetic::Float => {
            let (e, _) = recursion(n_us, order, &[orthonormal_power(p, size)], size);
            PowerSeries::from_floats(SeriesVariable::Coupling, n, e)
        }
    })
}

/// Third-order energy two ways for `g x^p`: from the recursion, and from the
/// first-order state alone via `E₃ = ⟨ψ₁|W − E₁|ψ₁⟩/⟨ψ₀|ψ₀⟩`.
pub fn wigner_check(p: u32, n: u32) -> (BigRational, BigRational) {
    let n_us = n as usize;
    let size = n_us + 3 * p as usize + 1;
    let w = scaled_power(p, size);
    let (e, psi) = recursion(n_us, 3, std::slice::from_ref(&w), size);
    // metric of the scaled basis: 1/(2^i i!)
    let metric: Vec<BigRational> = (0..size)
        .map(|i| BigRational::new(BigInt::one(), factorial(i) * BigInt::from(2).pow(i as u32)))
        .collect();
    let inner = |u: &[BigRational], v: &[BigRational]| -> BigRational {
        u.iter()
            .zip(v)
            .zip(&metric)
            .filter(|((a, b), _)| !a.is_zero() && !b.is_zero())
            .fold(BigRational::zero(), |acc, ((a, b), g)| acc + a * b * g)
    };
    let wpsi1 = apply(&w, &psi[1]);
    let shifted: Vec<BigRational> = wpsi1.iter().zip(&psi[1]).map(|(a, b)| a - &e[1] * b).collect();
    let third = inner(&psi[1], &shifted) / inner(&psi[0], &psi[0]);
    (e[3].clone(), third)
}
