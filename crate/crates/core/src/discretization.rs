//! Spectral discretization of `alpha u''' + beta u'` with trace coupling.
//!
//! Each finite edge carries a Chebyshev–Gauss–Lobatto grid. The free
//! operator acts edge by edge; the vertex conditions `L T_r u = T_l u` are
//! imposed by restricting to the null space of `C = T_l - L T_r`, with a basis
//! `Z` that is orthonormal for the exact `L^2` mass. The reduced generator
//! keeps the interior part of `Z* M A Z` skew and takes its Hermitian part
//! from the boundary form, so its numerical range matches the continuous
//! dissipation identity exactly.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Cholesky;

use crate::boundary::{assemble_global, BoundaryOperator};
use crate::chebyshev::{build_grid, EdgeGrid};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, Side};
use crate::krein::{KreinForm, TraceVector};
use crate::linalg::{c64, max_abs, null_space, singular_values, spectral_norm, to_complex, CMatrix, CVector, C64};

pub const DEFAULT_DEGREE: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Chebyshev collocation; `degree + 1` nodes per edge.
    Chebyshev,
    /// Equispaced Fourier collocation on a periodic loop.
    Fourier,
}

/// Where one edge's unknowns live in the nodal vector.
#[derive(Debug, Clone)]
pub struct EdgeBlock {
    pub edge: usize,
    pub offset: usize,
    pub nodes: Vec<f64>,
    pub grid: Option<EdgeGrid>,
}

impl EdgeBlock {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Rank of the constraint rows owned by one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexRank {
    pub vertex: String,
    pub rank: usize,
    pub expected: usize,
    pub smallest_singular_value: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    graph: MetricGraph,
    coupling: CMatrix,
    scheme: Scheme,
    blocks: Vec<EdgeBlock>,
    a_free: CMatrix,
    mass: CMatrix,
    t_r: CMatrix,
    t_l: CMatrix,
    constraint: CMatrix,
    z: CMatrix,
    a_red: CMatrix,
    form_r: KreinForm,
    form_l: KreinForm,
    ranks: Vec<VertexRank>,
}

/// Chebyshev discretization with the same degree on every edge.
pub fn build_generator(g: &MetricGraph, bc: &BoundaryOperator, degree: usize) -> Result<DiscreteSystem> {
    build_generator_with_degrees(g, bc, &vec![degree; g.edges().len()])
}

/// Chebyshev discretization with one degree per edge, in edge order.
pub fn build_generator_with_degrees(
    g: &MetricGraph,
    bc: &BoundaryOperator,
    degrees: &[usize],
) -> Result<DiscreteSystem> {
    if degrees.len() != g.edges().len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} edge degrees", g.edges().len()),
            found: format!("{}", degrees.len()),
        });
    }
    let coupling = assemble_global(g, bc)?;
    let mut blocks = Vec::with_capacity(g.edges().len());
    let mut offset = 0;
    for (i, (edge, &deg)) in g.edges().iter().zip(degrees).enumerate() {
        let grid = build_grid(edge, deg)?;
        let len = grid.len();
        blocks.push(EdgeBlock {
            edge: i,
            offset,
            nodes: grid.nodes.clone(),
            grid: Some(grid),
        });
        offset += len;
    }
    let total = offset;

    let mut a_free = CMatrix::zeros(total, total);
    let mut mass = CMatrix::zeros(total, total);
    let mut chol = CMatrix::zeros(total, total);
    let mut t_r = CMatrix::zeros(3 * g.side_count(Side::Right), total);
    let mut t_l = CMatrix::zeros(3 * g.side_count(Side::Left), total);
    for blk in &blocks {
        let grid = blk.grid.as_ref().expect("chebyshev block has a grid");
        let edge = &g.edges()[blk.edge];
        let n = grid.len();
        let op = &grid.d3 * edge.alpha + &grid.d1 * edge.beta;
        a_free.view_mut((blk.offset, blk.offset), (n, n)).copy_from(&to_complex(&op));
        mass.view_mut((blk.offset, blk.offset), (n, n)).copy_from(&to_complex(&grid.mass));
        let r = Cholesky::new(grid.mass.clone())
            .ok_or_else(|| Error::InvalidParameter(format!("mass matrix of edge `{}` is not positive", edge.id)))?
            .l();
        chol.view_mut((blk.offset, blk.offset), (n, n)).copy_from(&to_complex(&r));
        let derivs = [None, Some(&grid.d1), Some(&grid.d2)];
        for (side, target, node) in [(Side::Right, &mut t_r, n - 1), (Side::Left, &mut t_l, 0)] {
            if let Some(s) = g.slot(side, blk.edge) {
                for (k, d) in derivs.iter().enumerate() {
                    for j in 0..n {
                        let v = match d {
                            None => f64::from(u8::from(j == node)),
                            Some(d) => d[(node, j)],
                        };
                        target[(3 * s + k, blk.offset + j)] = c64(v, 0.0);
                    }
                }
            }
        }
    }

    let constraint = &t_l - &coupling * &t_r;
    let ranks = vertex_ranks(g, &constraint)?;
    if let Some(bad) = ranks.iter().find(|r| r.rank < r.expected) {
        return Err(Error::RankDeficient {
            vertex: bad.vertex.clone(),
            rank: bad.rank,
            expected: bad.expected,
        });
    }
    if constraint.nrows() >= total {
        return Err(Error::InvalidParameter(format!(
            "{} constraints leave no freedom in {total} unknowns",
            constraint.nrows()
        )));
    }

    // With M = R R^T, Z = R^{-T} Y for an orthonormal null basis Y of C R^{-T}
    // satisfies C Z = 0 and Z* M Z = I.
    let c_hat_adj = chol
        .solve_lower_triangular(&constraint.adjoint())
        .ok_or_else(|| Error::InvalidParameter("singular mass factor".into()))?;
    let (y, r_diag) = null_space(&c_hat_adj.adjoint());
    let scale = r_diag.iter().fold(0.0f64, |m, v| m.max(*v));
    if let Some(pos) = r_diag.iter().position(|&d| d <= 1e-12 * scale) {
        return Err(Error::RankDeficient {
            vertex: left_owner(g, pos),
            rank: r_diag.iter().filter(|&&d| d > 1e-12 * scale).count(),
            expected: constraint.nrows(),
        });
    }
    let z = chol
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::InvalidParameter("singular mass factor".into()))?;

    let form_r = KreinForm::build(g, Side::Right);
    let form_l = KreinForm::build(g, Side::Left);
    let k = y.adjoint() * chol.transpose() * &a_free * &z;
    let tz_r = &t_r * &z;
    let tz_l = &t_l * &z;
    let h = tz_l.adjoint() * form_l.matrix() * &tz_l - tz_r.adjoint() * form_r.matrix() * &tz_r;
    let a_red = (&k - k.adjoint()).scale(0.5) + h.scale(0.5);

    Ok(DiscreteSystem {
        graph: g.clone(),
        coupling,
        scheme: Scheme::Chebyshev,
        blocks,
        a_free,
        mass,
        t_r,
        t_l,
        constraint,
        z,
        a_red,
        form_r,
        form_l,
        ranks,
    })
}

fn vertex_ranks(g: &MetricGraph, constraint: &CMatrix) -> Result<Vec<VertexRank>> {
    let mut out = Vec::new();
    for v in g.vertices() {
        let rows = g.vertex_positions(v, Side::Left)?;
        if rows.is_empty() {
            continue;
        }
        let sub = CMatrix::from_fn(rows.len(), constraint.ncols(), |r, c| constraint[(rows[r], c)]);
        let s = singular_values(&sub);
        let top = s.first().copied().unwrap_or(0.0);
        let rank = s.iter().filter(|&&x| x > 1e-12 * top && x > 0.0).count();
        out.push(VertexRank {
            vertex: v.clone(),
            rank,
            expected: rows.len(),
            smallest_singular_value: s.last().copied().unwrap_or(0.0),
        });
    }
    Ok(out)
}

fn left_owner(g: &MetricGraph, position: usize) -> String {
    g.vertices()
        .iter()
        .find(|v| g.vertex_positions(v, Side::Left).is_ok_and(|p| p.contains(&position)))
        .cloned()
        .unwrap_or_else(|| "?".to_string())
}

/// Periodic loop discretized by equispaced Fourier collocation with `points`
/// nodes (even). The Nyquist mode is dropped from every derivative so the
/// generator is exactly skew.
pub fn build_fourier_loop(g: &MetricGraph, bc: &BoundaryOperator, points: usize) -> Result<DiscreteSystem> {
    if g.edges().len() != 1 {
        return Err(Error::NotPeriodicLoop(format!("{} edges", g.edges().len())));
    }
    let edge = &g.edges()[0];
    if !edge.is_finite() || edge.from.is_none() || edge.from != edge.to {
        return Err(Error::NotPeriodicLoop(format!("edge `{}` is not a loop", edge.id)));
    }
    let coupling = assemble_global(g, bc)?;
    if max_abs(&(&coupling - CMatrix::identity(3, 3))) > 0.0 {
        return Err(Error::NotPeriodicLoop("boundary operator is not the identity".into()));
    }
    if points < 8 || !points.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "Fourier grid needs an even number of points >= 8, got {points}"
        )));
    }
    let n = points;
    let len = edge.length();
    let h = len / n as f64;
    let nodes: Vec<f64> = (0..n).map(|j| edge.a + j as f64 * h).collect();
    let d = |m: i32| fourier_derivative(n, len, m);
    let (d1, d2, d3) = (d(1), d(2), d(3));
    let a = &d3 * c64(edge.alpha, 0.0) + &d1 * c64(edge.beta, 0.0);
    let a_free = (&a - a.adjoint()).scale(0.5);

    let mut t = CMatrix::zeros(3, n);
    t[(0, 0)] = c64(1.0, 0.0);
    t.row_mut(1).copy_from(&d1.row(0));
    t.row_mut(2).copy_from(&d2.row(0));

    Ok(DiscreteSystem {
        graph: g.clone(),
        coupling,
        scheme: Scheme::Fourier,
        blocks: vec![EdgeBlock {
            edge: 0,
            offset: 0,
            nodes,
            grid: None,
        }],
        a_red: a_free.clone(),
        a_free,
        mass: CMatrix::identity(n, n).scale(h),
        t_r: t.clone(),
        t_l: t,
        constraint: CMatrix::zeros(0, n),
        z: CMatrix::identity(n, n).scale(1.0 / h.sqrt()),
        form_r: KreinForm::build(g, Side::Right),
        form_l: KreinForm::build(g, Side::Left),
        ranks: Vec::new(),
    })
}

/// `m`-th spectral derivative on `n` equispaced points of a period `len`,
/// Nyquist mode removed.
fn fourier_derivative(n: usize, len: f64, m: i32) -> CMatrix {
    let half = (n / 2) as i64;
    let mut col = vec![c64(0.0, 0.0); n];
    for (d, entry) in col.iter_mut().enumerate() {
        let mut s = c64(0.0, 0.0);
        for k in (1 - half)..half {
            let kappa = 2.0 * PI * k as f64 / len;
            let phase = 2.0 * PI * (k * d as i64) as f64 / n as f64;
            s += c64(0.0, kappa).powi(m) * C64::from_polar(1.0, phase);
        }
        *entry = s / n as f64;
    }
    CMatrix::from_fn(n, n, |j, l| col[(j + n - l) % n])
}

/// Result of projecting nodal data onto the constrained space.
#[derive(Debug, Clone)]
pub struct Projection {
    pub state: CVector,
    /// `||u - Z c||_M / ||u||_M`; zero when `u` already satisfies the
    /// coupling.
    pub residual: f64,
}

impl DiscreteSystem {
    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn coupling(&self) -> &CMatrix {
        &self.coupling
    }

    pub fn blocks(&self) -> &[EdgeBlock] {
        &self.blocks
    }

    pub fn a_free(&self) -> &CMatrix {
        &self.a_free
    }

    pub fn mass(&self) -> &CMatrix {
        &self.mass
    }

    pub fn t_r(&self) -> &CMatrix {
        &self.t_r
    }

    pub fn t_l(&self) -> &CMatrix {
        &self.t_l
    }

    pub fn constraint(&self) -> &CMatrix {
        &self.constraint
    }

    pub fn basis(&self) -> &CMatrix {
        &self.z
    }

    pub fn generator(&self) -> &CMatrix {
        &self.a_red
    }

    pub fn forms(&self) -> (&KreinForm, &KreinForm) {
        (&self.form_r, &self.form_l)
    }

    pub fn vertex_ranks(&self) -> &[VertexRank] {
        &self.ranks
    }

    /// Dimension of the reduced state.
    pub fn dimension(&self) -> usize {
        self.a_red.nrows()
    }

    /// Total number of nodes.
    pub fn nodal_dimension(&self) -> usize {
        self.a_free.nrows()
    }

    /// Nodal samples of `f(edge index, x)`.
    pub fn sample(&self, f: impl Fn(usize, f64) -> C64) -> CVector {
        let mut u = CVector::zeros(self.nodal_dimension());
        for blk in &self.blocks {
            for (j, &x) in blk.nodes.iter().enumerate() {
                u[blk.offset + j] = f(blk.edge, x);
            }
        }
        u
    }

    pub fn edge_values<'a>(&self, u: &'a CVector, edge: usize) -> Option<nalgebra::DVectorView<'a, C64>> {
        let blk = self.blocks.iter().find(|b| b.edge == edge)?;
        Some(u.rows(blk.offset, blk.len()))
    }

    pub fn mass_inner(&self, u: &CVector, v: &CVector) -> C64 {
        v.dotc(&(&self.mass * u))
    }

    /// Mass-orthogonal projection onto the constrained space.
    pub fn project(&self, u: &CVector) -> Result<Projection> {
        self.check_nodal(u)?;
        let state = self.z.adjoint() * (&self.mass * u);
        let back = &self.z * &state;
        let total = self.mass_inner(u, u).re.max(0.0).sqrt();
        let diff = u - back;
        let miss = self.mass_inner(&diff, &diff).re.max(0.0).sqrt();
        let residual = if total > 0.0 { miss / total } else { 0.0 };
        Ok(Projection { state, residual })
    }

    pub fn reconstruct(&self, c: &CVector) -> CVector {
        &self.z * c
    }

    fn check_nodal(&self, u: &CVector) -> Result<()> {
        if u.len() != self.nodal_dimension() {
            return Err(Error::DimensionMismatch {
                expected: format!("nodal state of length {}", self.nodal_dimension()),
                found: format!("{}", u.len()),
            });
        }
        Ok(())
    }

    /// `(right, left)` traces of a nodal state.
    pub fn discrete_traces(&self, u: &CVector) -> Result<(TraceVector, TraceVector)> {
        self.check_nodal(u)?;
        Ok((
            TraceVector::new(Side::Right, &self.t_r * u),
            TraceVector::new(Side::Left, &self.t_l * u),
        ))
    }

    /// Right traces of a reduced state.
    pub fn right_traces(&self, c: &CVector) -> CVector {
        &self.t_r * (&self.z * c)
    }

    /// `-<x|x>_r + <Lx|Lx>_l` with `x` the right traces of the state.
    pub fn predicted_dissipation(&self, c: &CVector) -> f64 {
        let x = self.right_traces(c);
        let lx = &self.coupling * &x;
        (-self.form_r.inner_raw(&x, &x) + self.form_l.inner_raw(&lx, &lx)).re
    }

    /// `||L T_r u - T_l u|| / max(1, ||T_l u||)` for a nodal state.
    pub fn constraint_residual(&self, u: &CVector) -> f64 {
        let left = &self.t_l * u;
        let miss = &self.coupling * (&self.t_r * u) - &left;
        miss.norm() / left.norm().max(1.0)
    }

    /// `||A + A*|| / ||A||` in the spectral norm.
    pub fn skew_defect(&self) -> f64 {
        let top = spectral_norm(&self.a_red);
        if top == 0.0 {
            return 0.0;
        }
        spectral_norm(&(&self.a_red + self.a_red.adjoint())) / top
    }

    /// Largest eigenvalue of the Hermitian part of `A`, relative to `||A||`.
    pub fn dissipativity_defect(&self) -> f64 {
        let top = spectral_norm(&self.a_red);
        let eig = crate::linalg::hermitian_eigenvalues(&self.a_red);
        match eig.last() {
            Some(&m) if top > 0.0 => m / top,
            _ => 0.0,
        }
    }

    /// Writes one matrix in the dense matrix-market array format:
    /// a banner, a `rows cols` line, then `re im` per entry in column-major
    /// order.
    pub fn write_matrix_market<W: Write>(&self, name: &str, out: &mut W) -> Result<()> {
        let m = match name {
            "generator" => &self.a_red,
            "free" => &self.a_free,
            "mass" => &self.mass,
            "basis" => &self.z,
            "constraint" => &self.constraint,
            "trace_right" => &self.t_r,
            "trace_left" => &self.t_l,
            _ => return Err(Error::InvalidParameter(format!("unknown matrix `{name}`"))),
        };
        write_matrix_market(m, out)
    }
}

pub fn write_matrix_market<W: Write>(m: &CMatrix, out: &mut W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array complex general")?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            writeln!(out, "{:.17e} {:.17e}", z.re, z.im)?;
        }
    }
    Ok(())
}
