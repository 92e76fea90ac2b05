//! Finite-difference weights on arbitrary node sets.

/// Fornberg's recursion: weights `w` such that `f^{(order)}(z) ≈ Σ w_i f(nodes[i])`.
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// First-derivative operator with centered stencils in the interior and
/// shifted (one-sided) stencils near the ends of the node array.
#[derive(Debug, Clone)]
pub struct Differentiator {
    stencils: Vec<(usize, Vec<f64>)>,
}

impl Differentiator {
    /// `accuracy` is the number of stencil intervals (stencil has `accuracy + 1` nodes);
    /// it is clamped to the node count.
    pub fn new(nodes: &[f64], accuracy: usize) -> Self {
        let n = nodes.len();
        let width = (accuracy + 1).min(n);
        let half = (width - 1) / 2;
        let stencils = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half).min(n - width);
                let w = fornberg_weights(nodes[i], &nodes[lo..lo + width], 1);
                (lo, w)
            })
            .collect();
        Self { stencils }
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn at(&self, i: usize, f: &[f64]) -> f64 {
        let (lo, w) = &self.stencils[i];
        w.iter().zip(&f[*lo..]).map(|(a, b)| a * b).sum()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.stencils.len());
        (0..f.len()).map(|i| self.at(i, f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_central_weights() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w2 = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w2[0] - 1.0).abs() < 1e-15 && (w2[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_on_polynomials_nonuniform() {
        let nodes: [f64; 7] = [-0.7, -0.31, 0.0, 0.2, 0.55, 0.9, 1.4];
        let f: Vec<f64> = nodes.iter().map(|x| x.powi(5) - 2.0 * x * x).collect();
        let d = Differentiator::new(&nodes, 6);
        for (i, x) in nodes.iter().enumerate() {
            let exact = 5.0 * x.powi(4) - 4.0 * x;
            assert!((d.at(i, &f) - exact).abs() < 1e-11, "node {i}");
        }
    }
}
