//! One-dimensional fundamental solution `S₀` of `(S₀′)²/(2m) = V` and the
//! coordinate `y(x)` that linearizes its gradient flow.

use crate::error::{Error, Result};
use crate::numerics::GaussLegendre;
use crate::potentials::Potential1D;

const CELL_GAUSS_POINTS: usize = 10;

/// Strictly increasing node array containing 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    origin: usize,
}

impl Grid1D {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidInput("grid needs at least three nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid nodes must be strictly increasing".into()));
        }
        let origin = nodes
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::InvalidInput("grid must contain 0 as a node".into()))?;
        Ok(Self { nodes, origin })
    }

    /// `2n + 1` equally spaced nodes on `[-n h, n h]`.
    pub fn uniform(half_width: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && half_width >= spacing) {
            return Err(Error::InvalidInput("need 0 < spacing <= half_width".into()));
        }
        let n = (half_width / spacing).round() as i64;
        Self::from_nodes((-n..=n).map(|i| i as f64 * spacing).collect())
    }

    /// Symmetric grid with `x_i = X sinh(β s_i)/sinh(β)`, `s_i` uniform in
    /// [-1, 1]; `beta > 0` concentrates nodes near the origin.
    pub fn sinh_stretched(half_width: f64, half_count: usize, beta: f64) -> Result<Self> {
        if half_count == 0 || !(beta > 0.0) {
            return Err(Error::InvalidInput("need half_count >= 1 and beta > 0".into()));
        }
        let n = half_count as i64;
        let nodes = (-n..=n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    half_width * (beta * i as f64 / n as f64).sinh() / beta.sinh()
                }
            })
            .collect();
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node at 0.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&v| v < x);
        if i == 0 {
            0
        } else if i == self.nodes.len() {
            i - 1
        } else if (self.nodes[i] - x).abs() < (x - self.nodes[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }
}

/// Profiles of `S₀`, `S₀′`, `S₀″` on a grid.
#[derive(Debug, Clone)]
pub struct FundamentalSolution1D {
    pub grid: Grid1D,
    pub potential: Potential1D,
    pub s0: Vec<f64>,
    pub ds0: Vec<f64>,
    pub dds0: Vec<f64>,
}

/// `g(x) = S₀′(x)/x = √(2m V(x)/x²)`; errors if `V/x²` is not positive.
fn slope_factor(v: &Potential1D, x: f64) -> Result<f64> {
    let q = v.v_over_x2(x);
    if !(q > 0.0) {
        return Err(Error::InvalidInput(format!(
            "V vanishes or turns negative at x = {x}; single-well potential required"
        )));
    }
    Ok((2.0 * v.mass() * q).sqrt())
}

/// `∫₀ˣ u g(u) du` by composite Gauss-Legendre on panels of width ≤ 0.25.
fn s0_integral(v: &Potential1D, gl: &GaussLegendre, a: f64, b: f64) -> f64 {
    let panels = ((b - a).abs() / 0.25).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * w;
            gl.integrate(lo, lo + w, |u| u * slope_factor(v, u).unwrap_or(f64::NAN))
        })
        .sum()
}

impl FundamentalSolution1D {
    /// Quadrature construction: `S₀′ = x g(x)`, `S₀″ = m (V′/x)/g`, and `S₀`
    /// integrated cell by cell from the origin.
    pub fn new(potential: &Potential1D, grid: &Grid1D) -> Result<Self> {
        let m = potential.mass();
        let x = grid.nodes();
        let mut g = Vec::with_capacity(x.len());
        for &xi in x {
            g.push(slope_factor(potential, xi)?);
        }
        let ds0: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi * gi).collect();
        let dds0: Vec<f64> = x
            .iter()
            .zip(&g)
            .map(|(&xi, gi)| m * potential.dv_over_x(xi) / gi)
            .collect();
        let gl = GaussLegendre::new(CELL_GAUSS_POINTS);
        let o = grid.origin();
        let mut s0 = vec![0.0; x.len()];
        for i in o..x.len() - 1 {
            s0[i + 1] = s0[i] + s0_integral(potential, &gl, x[i], x[i + 1]);
        }
        for i in (0..o).rev() {
            s0[i] = s0[i + 1] - s0_integral(potential, &gl, x[i], x[i + 1]);
        }
        Ok(Self {
            grid: grid.clone(),
            potential: potential.clone(),
            s0,
            ds0,
            dds0,
        })
    }

    pub fn mass(&self) -> f64 {
        self.potential.mass()
    }

    pub fn omega(&self) -> f64 {
        self.potential.omega()
    }

    /// `S₀` at an arbitrary point.
    pub fn value_at(&self, x: f64) -> f64 {
        let gl = GaussLegendre::new(CELL_GAUSS_POINTS);
        s0_integral(&self.potential, &gl, 0.0, x)
    }

    /// `S₀′` at an arbitrary point.
    pub fn slope_at(&self, x: f64) -> f64 {
        x * slope_factor(&self.potential, x).unwrap_or(f64::NAN)
    }

    /// `max |(S₀′)²/(2m) − V|` over the nodes.
    pub fn hj_residual(&self) -> f64 {
        let m = self.mass();
        self.grid
            .nodes()
            .iter()
            .zip(&self.ds0)
            .map(|(&x, d)| (d * d / (2.0 * m) - self.potential.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Compute the linearizing coordinate on the same grid.
    pub fn sternberg(&self) -> Result<SternbergMap> {
        SternbergMap::new(self)
    }
}

/// `y(x) = x exp(∫₀ˣ [mω/S₀′(u) − 1/u] du)` and its derivative.
#[derive(Debug, Clone)]
pub struct SternbergMap {
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

/// The integrand `mω/S₀′ − 1/u` rewritten as
/// `−2m (A(u)/u³) / (g (mω + g))`, which is smooth through `u = 0`.
fn sternberg_integrand(v: &Potential1D, u: f64) -> f64 {
    let m = v.mass();
    let mw = m * v.omega();
    let g = slope_factor(v, u).unwrap_or(f64::NAN);
    -2.0 * m * v.anharmonic_over_x3(u) / (g * (mw + g))
}

impl SternbergMap {
    pub fn new(sol: &FundamentalSolution1D) -> Result<Self> {
        let v = &sol.potential;
        let x = sol.grid.nodes();
        let o = sol.grid.origin();
        let gl = GaussLegendre::new(CELL_GAUSS_POINTS);
        let cell = |a: f64, b: f64| gl.integrate(a, b, |u| sternberg_integrand(v, u));
        let mut log_ratio = vec![0.0; x.len()];
        for i in o..x.len() - 1 {
            log_ratio[i + 1] = log_ratio[i] + cell(x[i], x[i + 1]);
        }
        for i in (0..o).rev() {
            log_ratio[i] = log_ratio[i + 1] - cell(x[i], x[i + 1]);
        }
        if log_ratio.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonConvergence {
                what: "Sternberg quadrature",
                residual: f64::NAN,
                iterations: 0,
            });
        }
        let mw = v.mass() * v.omega();
        let y = x.iter().zip(&log_ratio).map(|(xi, r)| xi * r.exp()).collect();
        // y′ = y mω / S₀′ = e^{I} mω / g
        let dy = x
            .iter()
            .zip(&log_ratio)
            .map(|(&xi, r)| r.exp() * mw / slope_factor(v, xi).unwrap_or(f64::NAN))
            .collect();
        Ok(Self { y, dy })
    }
}
