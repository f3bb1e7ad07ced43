//! Chebyshev–Gauss–Lobatto collocation on a single edge.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::quadrature::{clenshaw_curtis, gauss_legendre};

pub const MIN_DEGREE: usize = 8;

/// Collocation data for one edge; `degree + 1` nodes including both ends.
#[derive(Debug, Clone)]
pub struct EdgeGrid {
    pub edge: String,
    pub degree: usize,
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub d3: DMatrix<f64>,
    /// Clenshaw–Curtis weights.
    pub weights: Vec<f64>,
    /// Exact Gram matrix of the nodal Lagrange basis, `M_ij = int l_i l_j`.
    pub mass: DMatrix<f64>,
    bary: Vec<f64>,
}

pub fn build_grid(edge: &Edge, degree: usize) -> Result<EdgeGrid> {
    if !edge.is_finite() {
        return Err(Error::SemiInfiniteEdge(edge.id.clone()));
    }
    let grid = EdgeGrid::on_interval(&edge.id, edge.a, edge.b, degree)?;
    let defect = grid.polynomial_defect();
    if defect > 1e-11 {
        return Err(Error::InvalidParameter(format!(
            "differentiation check failed on edge `{}` (defect {defect:e})",
            edge.id
        )));
    }
    Ok(grid)
}

impl EdgeGrid {
    pub fn on_interval(id: &str, a: f64, b: f64, degree: usize) -> Result<Self> {
        if degree < MIN_DEGREE {
            return Err(Error::TooFewPoints(degree));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
        }
        let n = degree;
        let np = n + 1;
        let theta: Vec<f64> = (0..np).map(|j| PI * j as f64 / n as f64).collect();
        let bary: Vec<f64> = (0..np)
            .map(|j| {
                let delta = if j == 0 || j == n { 0.5 } else { 1.0 };
                if j % 2 == 0 { delta } else { -delta }
            })
            .collect();
        // x_i - x_j computed from the half-angle identity to avoid cancellation.
        let diff = DMatrix::from_fn(np, np, |i, j| {
            2.0 * ((theta[i] + theta[j]) / 2.0).sin() * ((theta[i] - theta[j]) / 2.0).sin()
        });

        let mut derivs = Vec::with_capacity(3);
        let mut prev = DMatrix::<f64>::identity(np, np);
        for m in 1..=3 {
            let mf = m as f64;
            let mut d = DMatrix::<f64>::zeros(np, np);
            for i in 0..np {
                let mut row_sum = 0.0;
                for j in 0..np {
                    if i != j {
                        let v = mf / diff[(i, j)] * (bary[j] / bary[i] * prev[(i, i)] - prev[(i, j)]);
                        d[(i, j)] = v;
                        row_sum += v;
                    }
                }
                // Negative-sum trick: rows annihilate constants exactly.
                d[(i, i)] = -row_sum;
            }
            derivs.push(d.clone());
            prev = d;
        }
        let s = 2.0 / (b - a);
        let d3 = derivs.pop().unwrap() * s.powi(3);
        let d2 = derivs.pop().unwrap() * s.powi(2);
        let d1 = derivs.pop().unwrap() * s;

        // (1 - cos t) / 2 = sin^2(t / 2), accurate near both ends.
        let mut nodes: Vec<f64> = theta.iter().map(|t| a + (b - a) * (t / 2.0).sin().powi(2)).collect();
        nodes[0] = a;
        nodes[n] = b;

        let mut grid = EdgeGrid {
            edge: id.to_string(),
            degree,
            a,
            b,
            nodes,
            d1,
            d2,
            d3,
            weights: clenshaw_curtis(n, a, b),
            mass: DMatrix::zeros(0, 0),
            bary,
        };
        let (gx, gw) = gauss_legendre(n + 2, a, b);
        let p = grid.interpolation_matrix(&gx);
        let pw = DMatrix::from_fn(gx.len(), np, |k, j| p[(k, j)] * gw[k]);
        grid.mass = p.transpose() * pw;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric interpolation from the nodes to `points`.
    pub fn interpolation_matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let np = self.nodes.len();
        let mut p = DMatrix::zeros(points.len(), np);
        for (k, &x) in points.iter().enumerate() {
            if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
                p[(k, j)] = 1.0;
                continue;
            }
            let terms: Vec<f64> = (0..np).map(|j| self.bary[j] / (x - self.nodes[j])).collect();
            let total: f64 = terms.iter().sum();
            for j in 0..np {
                p[(k, j)] = terms[j] / total;
            }
        }
        p
    }

    /// Largest error of `D1`, `D2`, `D3` on `x^p`, `p <= 3`, measured in
    /// units of the largest row of `|D| |x^p|` (the rounding scale of the
    /// product), so values near `eps` mean exact up to arithmetic.
    pub fn polynomial_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..=3i32 {
            let u = nalgebra::DVector::from_iterator(self.len(), self.nodes.iter().map(|x| x.powi(p)));
            for (order, d) in [(1, &self.d1), (2, &self.d2), (3, &self.d3)] {
                let got = d * &u;
                let scale = (d.abs() * u.abs()).amax().max(f64::MIN_POSITIVE);
                for (i, &x) in self.nodes.iter().enumerate() {
                    let exact = falling(p, order) * if p >= order { x.powi(p - order) } else { 0.0 };
                    worst = worst.max((got[i] - exact).abs() / scale);
                }
            }
        }
        worst
    }
}

fn falling(p: i32, k: i32) -> f64 {
    (0..k).map(|i| (p - i) as f64).product()
}
