//! ℏ-order transport hierarchy in one dimension.
//!
//! With `ψ = b e^{−S/ℏ}`, `S = Σ ℏᵏ a_k` and `E = ℏ Σ ℏᵏ e_k`, the ground
//! corrections obey, for `n ≥ 1`,
//!
//! ```text
//! a₀′ a_n′ = ½ a_{n−1}″ − ½ Σ_{i+j=n, i,j≥1} a_i′ a_j′ + m U [n = 1] − m e_{n−1}
//! ```
//!
//! where `U` is an optional order-ℏ potential term (the supersymmetric sector
//! shift). The right side must vanish where `a₀′` does, which fixes `e_{n−1}`.
//! Division by `a₀′` uses L'Hôpital at the origin.
//!
//! Excited prefactors `b = Σ ℏⁿ b_n` start from `b₀ = y^{m*}` in the
//! linearizing coordinate and satisfy
//! `ω (y∂_y − m*) b_n = R_n + δ_n b₀`; `δ_n` removes the `y^{m*}` Taylor
//! coefficient of the source, which would otherwise force a `y^{m*} log y` term.

use crate::error::{Error, Result};
use crate::hj1d::{FundamentalSolution1D, Grid1D, SternbergMap};
use crate::numerics::{cumulative_integral, fornberg_weights, Differentiator, Polynomial};
use crate::potentials::{Sector, Superpotential};

/// Knobs for the grid hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    /// Finite-difference stencil intervals (the stencil has one more node).
    pub stencil: usize,
    /// Largest accepted origin defect of a transport numerator, relative to its scale.
    pub regularity_tolerance: f64,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            stencil: 16,
            regularity_tolerance: 1e-2,
        }
    }
}

/// Ground profiles `a_k`, energies `e_k`, and optional excited data.
#[derive(Debug, Clone)]
pub struct HierarchyState {
    pub grid: Grid1D,
    pub mass: f64,
    pub omega: f64,
    /// `a[k]` for `k = 0..=K`.
    pub a: Vec<Vec<f64>>,
    pub da: Vec<Vec<f64>>,
    pub dda: Vec<Vec<f64>>,
    /// `e[k]` for `k = 0..K`.
    pub e: Vec<f64>,
    /// Origin defect of each transport numerator, relative to its local scale.
    pub regularity_defect: Vec<f64>,
    pub excited: Option<ExcitedState>,
    options: HierarchyOptions,
}

#[derive(Debug, Clone)]
pub struct ExcitedState {
    pub quantum_number: u32,
    /// `b[n]` for `n = 0..=N`.
    pub b: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
    /// `δ[n]` for `n = 0..=N`.
    pub delta: Vec<f64>,
}

/// Log-space wavefunction and energy partial sum.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
    pub energy: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Weights predicting the value at the origin from the stencil nodes
/// around it, excluding the origin itself.
fn origin_predictor(x: &[f64], o: usize, width: usize) -> (Vec<usize>, Vec<f64>) {
    let n = x.len();
    let half = width / 2;
    let lo = o.saturating_sub(half).min(n.saturating_sub(width + 1));
    let idx: Vec<usize> = (lo..(lo + width + 1).min(n)).filter(|&i| i != o).collect();
    let nodes: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let w = fornberg_weights(0.0, &nodes, 0);
    (idx, w)
}

impl HierarchyState {
    /// Ground hierarchy to order `k` (profiles `a_0..a_k`, energies `e_0..e_{k−1}`).
    pub fn ground(sol: &FundamentalSolution1D, k: usize, options: HierarchyOptions) -> Result<Self> {
        solve_ground(sol, k, None, options)
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// `S_(k) = k! a_k`, the `k`-th ℏ-derivative of `S` at ℏ = 0.
    pub fn action_derivative(&self, k: usize) -> Vec<f64> {
        let f = factorial(k);
        self.a[k].iter().map(|v| v * f).collect()
    }

    /// `k! e_k`.
    pub fn energy_derivative(&self, k: usize) -> f64 {
        factorial(k) * self.e[k]
    }

    /// `ℏ Σ_{k<terms} ℏᵏ e_k`, plus the excited shifts when present.
    pub fn energy_partial_sum(&self, hbar: f64, terms: usize) -> f64 {
        let mut sum = 0.0;
        let mut hk = hbar;
        for k in 0..terms.min(self.e.len()) {
            let shift = self
                .excited
                .as_ref()
                .and_then(|x| x.delta.get(k))
                .copied()
                .unwrap_or(0.0);
            sum += hk * (self.e[k] + shift);
            hk *= hbar;
        }
        sum
    }

    /// `ψ ∝ b(x;ℏ) exp(−Σ_{k≤K} ℏ^{k−1} a_k)` in log space; the prefactor uses
    /// every computed `b_n`.
    pub fn assemble(&self, hbar: f64, k: usize) -> Result<Assembled> {
        if !(hbar > 0.0) {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        if k > self.order() {
            return Err(Error::InvalidInput(format!(
                "requested order {k} exceeds hierarchy order {}",
                self.order()
            )));
        }
        let n = self.grid.len();
        let mut log_abs = vec![0.0; n];
        let mut hk = 1.0 / hbar;
        for ak in self.a.iter().take(k + 1) {
            for (l, v) in log_abs.iter_mut().zip(ak) {
                *l -= hk * v;
            }
            hk *= hbar;
        }
        let mut sign = vec![1.0; n];
        if let Some(ex) = &self.excited {
            for i in 0..n {
                let mut b = 0.0;
                let mut hn = 1.0;
                for bn in &ex.b {
                    b += hn * bn[i];
                    hn *= hbar;
                }
                log_abs[i] += b.abs().ln();
                sign[i] = if b < 0.0 { -1.0 } else { 1.0 };
            }
        }
        Ok(Assembled {
            log_abs,
            sign,
            energy: self.energy_partial_sum(hbar, self.e.len()),
        })
    }

    /// Extend with excited data for quantum number `m*` through order `n`.
    pub fn excited(&self, sternberg: &SternbergMap, quantum_number: u32, n: usize) -> Result<Self> {
        if n > self.order() {
            return Err(Error::InvalidInput(format!(
                "excited order {n} needs a ground hierarchy of order >= {n}, have {}",
                self.order()
            )));
        }
        let mut out = self.clone();
        out.excited = Some(solve_excited(self, sternberg, quantum_number, n)?);
        Ok(out)
    }
}

/// Leading excited prefactor `b₀ = y^{m*}` and shift `δ₀ = m* ω`.
pub fn excited_leading(sol: &FundamentalSolution1D, sternberg: &SternbergMap, quantum_number: u32) -> (Vec<f64>, f64) {
    let b0 = sternberg.y.iter().map(|y| y.powi(quantum_number as i32)).collect();
    (b0, quantum_number as f64 * sol.omega())
}

/// Ground hierarchy of a supersymmetric sector: `V = ½W′²` plus `ℏ U` with `U = ∓½W″`.
pub fn susy_ground(
    w: &Superpotential,
    sector: Sector,
    grid: &Grid1D,
    k: usize,
    options: HierarchyOptions,
) -> Result<HierarchyState> {
    let v = w.bosonic_potential();
    let sol = FundamentalSolution1D::new(&v, grid)?;
    let u = w.sector_correction(sector);
    solve_ground(&sol, k, Some(&u), options)
}

fn solve_ground(
    sol: &FundamentalSolution1D,
    k: usize,
    extra: Option<&Polynomial>,
    options: HierarchyOptions,
) -> Result<HierarchyState> {
    if k == 0 {
        return Err(Error::InvalidInput("hierarchy order must be at least 1".into()));
    }
    let x = sol.grid.nodes();
    let o = sol.grid.origin();
    let m = sol.mass();
    let d = Differentiator::new(x, options.stencil);
    let width = (options.stencil + 1).min(x.len());
    let (pred_idx, pred_w) = origin_predictor(x, o, options.stencil);

    let mut a = vec![sol.s0.clone()];
    let mut da = vec![sol.ds0.clone()];
    let mut dda = vec![sol.dds0.clone()];
    let mut e = Vec::with_capacity(k);
    let mut defects = Vec::with_capacity(k);

    for n in 1..=k {
        let mut raw: Vec<f64> = dda[n - 1].iter().map(|v| 0.5 * v).collect();
        // sum of term magnitudes, the yardstick for the regularity defect
        let mut size: Vec<f64> = raw.iter().map(|v| v.abs()).collect();
        for i in 1..n {
            for ((r, s), (p, q)) in raw.iter_mut().zip(size.iter_mut()).zip(da[i].iter().zip(&da[n - i])) {
                *r -= 0.5 * p * q;
                *s += 0.5 * (p * q).abs();
            }
        }
        if n == 1 {
            if let Some(u) = extra {
                for ((r, s), &xi) in raw.iter_mut().zip(size.iter_mut()).zip(x) {
                    let t = m * u.eval(xi);
                    *r += t;
                    *s += t.abs();
                }
            }
        }
        let en = raw[o] / m;
        let num: Vec<f64> = raw.iter().map(|r| r - m * en).collect();

        let predicted: f64 = pred_idx.iter().zip(&pred_w).map(|(&i, w)| w * num[i]).sum();
        // floor: a relative 1e-8 of the order-one numerator scale ½mω, so an
        // identically vanishing order is judged against rounding, not against itself
        let floor = 0.5e-8 * m * sol.omega();
        let scale = pred_idx.iter().map(|&i| size[i]).fold(size[o], f64::max) + floor;
        let defect = if scale > 0.0 { predicted.abs() / scale } else { 0.0 };
        if defect > options.regularity_tolerance {
            return Err(Error::Regularity {
                order: n,
                defect,
                tolerance: options.regularity_tolerance,
            });
        }

        let mut dan: Vec<f64> = num.iter().zip(&da[0]).map(|(nv, a0)| nv / a0).collect();
        dan[o] = d.at(o, &num) / dda[0][o];
        let ddan = d.apply(&dan);
        let an = cumulative_integral(x, &dan, o, width);
        e.push(en);
        defects.push(defect);
        a.push(an);
        da.push(dan);
        dda.push(ddan);
    }

    Ok(HierarchyState {
        grid: sol.grid.clone(),
        mass: m,
        omega: sol.omega(),
        a,
        da,
        dda,
        e,
        regularity_defect: defects,
        excited: None,
        options,
    })
}

fn solve_excited(state: &HierarchyState, st: &SternbergMap, mstar: u32, order: usize) -> Result<ExcitedState> {
    let x = state.grid.nodes();
    let o = state.grid.origin();
    let m = state.mass;
    let w = state.omega;
    let ms = mstar as usize;
    let npts = x.len();
    let d = Differentiator::new(x, state.options.stencil);
    let width = (state.options.stencil + 1).min(npts);

    // Taylor coefficients in y at the origin from a stencil in y-values.
    let lo = o.saturating_sub(width / 2).min(npts - width);
    let ystencil: Vec<f64> = st.y[lo..lo + width].to_vec();
    let taylor_weights: Vec<Vec<f64>> = (0..=ms + 1)
        .map(|j| {
            let f = factorial(j);
            fornberg_weights(0.0, &ystencil, j).into_iter().map(|v| v / f).collect()
        })
        .collect();
    let taylor = |f: &[f64], j: usize| -> f64 {
        taylor_weights[j].iter().zip(&f[lo..lo + width]).map(|(a, b)| a * b).sum()
    };

    let ypow = |i: usize, p: i32| st.y[i].powi(p);
    let b0: Vec<f64> = (0..npts).map(|i| ypow(i, mstar as i32)).collect();
    let db0: Vec<f64> = (0..npts)
        .map(|i| if ms == 0 { 0.0 } else { ms as f64 * ypow(i, ms as i32 - 1) * st.dy[i] })
        .collect();
    let mut b = vec![b0];
    let mut db = vec![db0];
    let mut delta = vec![ms as f64 * w];

    for n in 1..=order {
        let ddb_prev = d.apply(&db[n - 1]);
        let mut r: Vec<f64> = ddb_prev.iter().map(|v| v / (2.0 * m)).collect();
        for i in 1..=n {
            for (rv, (ai, bj)) in r.iter_mut().zip(state.da[i].iter().zip(&db[n - i])) {
                *rv -= ai * bj / m;
            }
        }
        for kk in 1..n {
            for (rv, bj) in r.iter_mut().zip(&b[n - kk]) {
                *rv += delta[kk] * bj;
            }
        }
        let dn = -taylor(&r, ms);
        // F = R + δ_n b₀; its Taylor coefficients below m* are singular data.
        let f: Vec<f64> = r.iter().zip(&b[0]).map(|(rv, b0v)| rv + dn * b0v).collect();
        let coeffs: Vec<f64> = (0..ms).map(|j| taylor(&f, j)).collect();
        let next = taylor(&f, ms + 1);

        let mut bp = vec![0.0; npts];
        let mut dbp = vec![0.0; npts];
        let mut g = f.clone();
        for (j, cj) in coeffs.iter().enumerate() {
            let denom = w * (j as f64 - ms as f64);
            for i in 0..npts {
                let yj = ypow(i, j as i32);
                bp[i] += cj * yj / denom;
                if j > 0 {
                    dbp[i] += cj * j as f64 * ypow(i, j as i32 - 1) * st.dy[i] / denom;
                }
                g[i] -= cj * yj;
            }
        }
        let mut dc: Vec<f64> = (0..npts)
            .map(|i| g[i] * st.dy[i] / (w * ypow(i, ms as i32 + 1)))
            .collect();
        dc[o] = next * st.dy[o] / w;
        let c = cumulative_integral(x, &dc, o, width);
        let bn: Vec<f64> = (0..npts).map(|i| bp[i] + ypow(i, ms as i32) * c[i]).collect();
        let dbn: Vec<f64> = (0..npts)
            .map(|i| {
                let lead = if ms == 0 { 0.0 } else { ms as f64 * ypow(i, ms as i32 - 1) * st.dy[i] * c[i] };
                dbp[i] + lead + ypow(i, ms as i32) * dc[i]
            })
            .collect();
        b.push(bn);
        db.push(dbn);
        delta.push(dn);
    }

    Ok(ExcitedState {
        quantum_number: mstar,
        b,
        db,
        delta,
    })
}
