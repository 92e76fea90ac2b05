//! Symmetric tridiagonal eigenproblems: Sturm bisection for the lowest
//! eigenvalues, inverse iteration for the eigenvectors.

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `count` smallest eigenvalues, ascending, by bisection.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let count = count.min(self.len());
        let (glo, ghi) = self.gershgorin();
        (0..count)
            .map(|k| {
                let (mut lo, mut hi) = (glo, ghi);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Solve `(T - shift) x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        // band storage: row i holds (a_i, b_i, c_i) after pivoting may fill a second superdiagonal
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut u1: Vec<f64> = self.off.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l: Vec<f64> = self.off.clone();
        let mut x = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if l[i].abs() > d[i].abs() {
                // swap rows i and i+1
                std::mem::swap(&mut d[i], &mut l[i]);
                let (a, b) = (u1[i], d[i + 1]);
                u1[i] = b;
                d[i + 1] = a;
                let (a, b) = (u2[i], u1[i + 1]);
                u2[i] = b;
                u1[i + 1] = a;
                x.swap(i, i + 1);
            }
            if d[i] == 0.0 {
                d[i] = f64::EPSILON * (1.0 + shift.abs());
            }
            let f = l[i] / d[i];
            d[i + 1] -= f * u1[i];
            u1[i + 1] -= f * u2[i];
            x[i + 1] -= f * x[i];
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = f64::EPSILON * (1.0 + shift.abs());
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }

    /// Eigenvector for an (accurate) eigenvalue by inverse iteration, unit 2-norm.
    pub fn eigenvector(&self, eigenvalue: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.diag.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
        let shift = eigenvalue + 1e-13 * scale;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        v
    }
}
