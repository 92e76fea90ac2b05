//! Dense real polynomials in one variable, ascending coefficient order.

use nalgebra::{Complex, DMatrix};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn monomial(power: usize, coeff: f64) -> Self {
        let mut c = vec![0.0; power + 1];
        c[power] = coeff;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Drop the lowest `k` coefficients and shift down: exact division by `x^k`
    /// when those coefficients vanish.
    pub fn shift_down(&self, k: usize) -> Self {
        Self::new(self.coeffs.iter().skip(k).copied().collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Complex roots from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= 1e-14 * scale {
            c.pop();
        }
        // zero roots split off first: a nilpotent companion matrix stalls the eigensolver
        let zeros = c.iter().take_while(|v| **v == 0.0).count().min(c.len() - 1);
        c.drain(..zeros);
        let mut out = vec![Complex::new(0.0, 0.0); zeros];
        let n = c.len() - 1;
        if n == 0 {
            return out;
        }
        let lead = c[n];
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -c[i] / lead;
        }
        out.extend(comp.complex_eigenvalues().iter().copied());
        out
    }
}
