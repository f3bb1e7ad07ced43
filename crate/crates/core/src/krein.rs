//! Indefinite (Krein) inner products on the boundary trace spaces.
//!
//! Each edge contributes the Hermitian block
//!
//! ```text
//!     [ -beta    0    -alpha ]
//!     [   0    alpha    0    ]
//!     [ -alpha   0      0    ]
//! ```
//!
//! on its `(u, u', u'')` trace triple. The inner product is
//! `<x|y> = y* B x`, linear in the first slot; the adjoint formula
//! `L# = B_r^{-1} L* B_l` depends on this convention.
//!
//! All predicates work with relative tolerances and return a
//! [`Certificate`] carrying the measured quantities.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, Side, TraceLayout};
use crate::linalg::{c64, hermitian_eigenvalues, singular_values, CMatrix, CVector, C64};

/// Default relative tolerance for all Krein predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The 3×3 form block of one edge.
pub fn edge_block(alpha: f64, beta: f64) -> [[f64; 3]; 3] {
    [[-beta, 0.0, -alpha], [0.0, alpha, 0.0], [-alpha, 0.0, 0.0]]
}

fn edge_block_inverse(alpha: f64, beta: f64) -> [[f64; 3]; 3] {
    let ia = 1.0 / alpha;
    [[0.0, 0.0, -ia], [0.0, ia, 0.0], [-ia, 0.0, beta * ia * ia]]
}

fn block_diagonal(blocks: impl Iterator<Item = [[f64; 3]; 3]>, dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for (e, b) in blocks.enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                m[(3 * e + r, 3 * e + c)] = c64(b[r][c], 0.0);
            }
        }
    }
    m
}

#[derive(Debug, Clone)]
pub struct KreinForm {
    side: Side,
    coefficients: Vec<(f64, f64)>,
    matrix: CMatrix,
    layout: TraceLayout,
}

impl KreinForm {
    /// `B_l` or `B_r` of a graph.
    pub fn build(g: &MetricGraph, side: Side) -> Self {
        let coefficients = g
            .side_edges(side)
            .into_iter()
            .map(|i| (g.edges()[i].alpha, g.edges()[i].beta))
            .collect();
        Self::assemble(side, coefficients, g.trace_layout(side))
    }

    /// Form over anonymous edges `e0, e1, ...` with the given `(alpha, beta)`.
    pub fn from_coefficients(side: Side, coefficients: &[(f64, f64)]) -> Self {
        let layout = TraceLayout {
            side,
            entries: (0..coefficients.len())
                .flat_map(|e| (0..3).map(move |k| (format!("e{e}"), k)))
                .collect(),
        };
        Self::assemble(side, coefficients.to_vec(), layout)
    }

    fn assemble(side: Side, coefficients: Vec<(f64, f64)>, layout: TraceLayout) -> Self {
        let dim = 3 * coefficients.len();
        let matrix = block_diagonal(coefficients.iter().map(|&(a, b)| edge_block(a, b)), dim);
        KreinForm {
            side,
            coefficients,
            matrix,
            layout,
        }
    }

    /// Restriction to whole edge blocks, given as global positions (a
    /// multiple of three, block-aligned, e.g. from
    /// [`MetricGraph::vertex_positions`]).
    pub fn restrict(&self, positions: &[usize]) -> Self {
        let blocks: Vec<usize> = positions.chunks(3).map(|c| c[0] / 3).collect();
        let coefficients = blocks.iter().map(|&b| self.coefficients[b]).collect();
        let layout = TraceLayout {
            side: self.side,
            entries: positions.iter().map(|&p| self.layout.entries[p].clone()).collect(),
        };
        Self::assemble(self.side, coefficients, layout)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &TraceLayout {
        &self.layout
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn coefficients(&self) -> &[(f64, f64)] {
        &self.coefficients
    }

    /// `B^{-1}`, assembled blockwise.
    pub fn inverse(&self) -> CMatrix {
        block_diagonal(
            self.coefficients.iter().map(|&(a, b)| edge_block_inverse(a, b)),
            self.dimension(),
        )
    }

    /// `<x|y> = y* B x`.
    pub fn inner(&self, x: &TraceVector, y: &TraceVector) -> Result<C64> {
        for v in [x, y] {
            if v.side != self.side || v.values.len() != self.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} trace vector of length {}", self.side, self.dimension()),
                    found: format!("{} trace vector of length {}", v.side, v.values.len()),
                });
            }
        }
        Ok(self.inner_raw(&x.values, &y.values))
    }

    pub(crate) fn inner_raw(&self, x: &CVector, y: &CVector) -> C64 {
        y.dotc(&(&self.matrix * x))
    }

    /// Counts of positive and negative eigenvalues.
    pub fn signature(&self) -> Result<Signature> {
        let eig = hermitian_eigenvalues(&self.matrix);
        let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = 1e-12 * scale;
        if let Some(&bad) = eig.iter().find(|v| v.abs() <= threshold) {
            return Err(Error::NearSingularForm {
                eigenvalue: bad,
                threshold,
            });
        }
        Ok(Signature {
            positive: eig.iter().filter(|&&v| v > 0.0).count(),
            negative: eig.iter().filter(|&&v| v < 0.0).count(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector {
    pub side: Side,
    pub values: CVector,
}

impl TraceVector {
    pub fn new(side: Side, values: CVector) -> Self {
        TraceVector { side, values }
    }

    pub fn from_slice(side: Side, values: &[C64]) -> Self {
        Self::new(side, CVector::from_column_slice(values))
    }
}

/// Outcome of a Krein predicate with the quantities it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: bool,
    pub residual_norms: BTreeMap<String, f64>,
    pub min_eigenvalue: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Certificate {
    fn new(tolerance: f64) -> Self {
        Certificate {
            verdict: false,
            residual_norms: BTreeMap::new(),
            min_eigenvalue: None,
            tolerance,
            reason: None,
        }
    }

    fn reject(mut self, reason: impl Into<String>) -> Self {
        self.verdict = false;
        self.reason = Some(reason.into());
        self
    }
}

fn check_shape(l: &CMatrix, rows: usize, cols: usize) -> Result<()> {
    if l.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            expected: format!("{rows}x{cols} boundary operator"),
            found: format!("{}x{}", l.nrows(), l.ncols()),
        });
    }
    Ok(())
}

/// `(K_r, K_l)`-adjoint `L# = B_r^{-1} L* B_l`, the unique matrix with
/// `<Lx|y>_l = <x|L# y>_r`.
pub fn krein_adjoint(b_r: &KreinForm, b_l: &KreinForm, l: &CMatrix) -> Result<CMatrix> {
    check_shape(l, b_l.dimension(), b_r.dimension())?;
    Ok(b_r.inverse() * l.adjoint() * b_l.matrix())
}

/// Krein unitarity in finite dimensions: equal dimensions, `L` invertible
/// (smallest singular value above `tol` times the largest) and
/// `||L* B_l L - B_r|| <= tol ||B_r||` (Frobenius norms).
pub fn is_krein_unitary(b_r: &KreinForm, b_l: &KreinForm, l: &CMatrix, tol: f64) -> Certificate {
    let cert = Certificate::new(tol);
    if b_r.dimension() != b_l.dimension() {
        return cert.reject("dimension mismatch, no unitary exists");
    }
    if l.shape() != (b_l.dimension(), b_r.dimension()) {
        return cert.reject(format!(
            "operator is {}x{}, forms need {}x{}",
            l.nrows(),
            l.ncols(),
            b_l.dimension(),
            b_r.dimension()
        ));
    }
    let mut cert = cert;
    if l.nrows() == 0 {
        cert.verdict = true;
        return cert;
    }
    let sv = singular_values(l);
    let (smax, smin) = (sv[0], *sv.last().unwrap());
    cert.residual_norms.insert("sigma_max".into(), smax);
    cert.residual_norms.insert("sigma_min".into(), smin);
    let residual = (l.adjoint() * b_l.matrix() * l - b_r.matrix()).norm();
    let relative = residual / b_r.matrix().norm();
    cert.residual_norms.insert("form_residual".into(), residual);
    cert.residual_norms.insert("form_residual_relative".into(), relative);
    if !(smin > tol * smax) {
        return cert.reject("operator is not invertible");
    }
    if !(relative <= tol) {
        return cert.reject("form identity violated");
    }
    cert.verdict = true;
    cert
}

/// `(K_in, K_out)`-contractivity: `B_in - L* B_out L` positive semidefinite
/// up to `-tol ||B_in||` on its smallest eigenvalue.
pub fn is_krein_contractive(
    b_in: &KreinForm,
    b_out: &KreinForm,
    l: &CMatrix,
    tol: f64,
) -> Result<Certificate> {
    check_shape(l, b_out.dimension(), b_in.dimension())?;
    let mut cert = Certificate::new(tol);
    if b_in.dimension() == 0 {
        cert.verdict = true;
        return Ok(cert);
    }
    let defect = b_in.matrix() - l.adjoint() * b_out.matrix() * l;
    let eig = hermitian_eigenvalues(&defect);
    let scale = hermitian_eigenvalues(b_in.matrix())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig[0];
    cert.min_eigenvalue = Some(min);
    cert.residual_norms.insert("form_norm".into(), scale);
    if min >= -tol * scale {
        cert.verdict = true;
        Ok(cert)
    } else {
        Ok(cert.reject("defect form has a negative direction"))
    }
}

/// Whether some `(K_r, K_l)`-unitary matrix exists: equal dimensions and
/// equal signatures. For these forms this reduces to `|E_r| = |E_l|`.
pub fn exists_unitary(b_r: &KreinForm, b_l: &KreinForm) -> bool {
    if b_r.dimension() != b_l.dimension() {
        return false;
    }
    match (b_r.signature(), b_l.signature()) {
        (Ok(r), Ok(l)) => r == l,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn loop_form() -> KreinForm {
        KreinForm::from_coefficients(Side::Left, &[(1.0, 0.0)])
    }

    fn real(rows: &[[f64; 3]; 3]) -> CMatrix {
        CMatrix::from_fn(3, 3, |r, c| c64(rows[r][c], 0.0))
    }

    fn halfline_matrix() -> CMatrix {
        let s = 2f64.sqrt();
        real(&[[1.0, 0.0, 0.0], [s, 1.0, 0.0], [1.0, s, 1.0]])
    }

    #[test]
    fn block_entries() {
        let f = KreinForm::from_coefficients(Side::Left, &[(1.0, 0.0)]);
        assert_eq!(*f.matrix(), real(&[[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]));
        let f = KreinForm::from_coefficients(Side::Right, &[(2.0, 3.0)]);
        assert_eq!(*f.matrix(), real(&[[-3.0, 0.0, -2.0], [0.0, 2.0, 0.0], [-2.0, 0.0, 0.0]]));
        let f = KreinForm::from_coefficients(Side::Right, &[(1.0, 0.0), (2.0, 3.0)]);
        assert_eq!(f.dimension(), 6);
        assert_eq!(f.matrix()[(3, 3)], c64(-3.0, 0.0));
        assert_eq!(f.matrix()[(0, 3)], c64(0.0, 0.0));
    }

    #[test]
    fn inverse_is_inverse() {
        let f = KreinForm::from_coefficients(Side::Left, &[(0.7, -2.0), (3.0, 5.0)]);
        let id = f.matrix() * f.inverse();
        assert!((id - CMatrix::identity(6, 6)).norm() < 1e-14);
    }

    #[test]
    fn inner_examples() {
        let f = loop_form();
        let v = |a: f64, b: f64, c: f64| TraceVector::from_slice(Side::Left, &[c64(a, 0.0), c64(b, 0.0), c64(c, 0.0)]);
        assert_eq!(f.inner(&v(0., 1., 0.), &v(0., 1., 0.)).unwrap(), c64(1.0, 0.0));
        assert_eq!(f.inner(&v(1., 0., 0.), &v(1., 0., 0.)).unwrap(), c64(0.0, 0.0));
        assert_eq!(f.inner(&v(1., 0., -1.), &v(1., 0., -1.)).unwrap(), c64(2.0, 0.0));
        let wrong = TraceVector::from_slice(Side::Right, &[c64(1.0, 0.0); 3]);
        assert!(f.inner(&wrong, &wrong).is_err());
    }

    #[test]
    fn signature_examples() {
        let f = loop_form();
        let eig = hermitian_eigenvalues(f.matrix());
        let expected = [-1.0, 1.0, 1.0];
        for (a, b) in eig.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(f.signature().unwrap(), Signature { positive: 2, negative: 1 });
        let f = KreinForm::from_coefficients(Side::Left, &[(1.0, 5.0)]);
        assert_eq!(f.signature().unwrap(), Signature { positive: 2, negative: 1 });
        let f = KreinForm::from_coefficients(Side::Left, &[(1.0, 0.0); 4]);
        assert_eq!(f.signature().unwrap(), Signature { positive: 8, negative: 4 });
    }

    #[test]
    fn adjoint_examples() {
        let f = loop_form();
        let id = CMatrix::identity(3, 3);
        assert!((krein_adjoint(&f, &f, &id).unwrap() - &id).norm() < 1e-15);
        let z = CMatrix::zeros(3, 3);
        assert_eq!(krein_adjoint(&f, &f, &z).unwrap(), z);

        let l = halfline_matrix();
        let s = 2f64.sqrt();
        let expected = real(&[[1.0, 0.0, 0.0], [-s, 1.0, 0.0], [1.0, -s, 1.0]]);
        let sharp = krein_adjoint(&f, &f, &l).unwrap();
        assert!((&sharp - &expected).norm() < 1e-14);
        assert!((&sharp * &l - &id).norm() < 1e-14);

        assert!(krein_adjoint(&f, &f, &CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn unitary_examples() {
        let f = loop_form();
        let cert = is_krein_unitary(&f, &f, &halfline_matrix(), DEFAULT_TOL);
        assert!(cert.verdict);
        assert!(cert.residual_norms["form_residual"] <= 1e-12);
        assert!(is_krein_unitary(&f, &f, &CMatrix::identity(3, 3), DEFAULT_TOL).verdict);
        let two = CMatrix::identity(3, 3).scale(2.0);
        assert!(!is_krein_unitary(&f, &f, &two, DEFAULT_TOL).verdict);
    }

    #[test]
    fn unequal_dimensions_have_no_unitary() {
        let r = KreinForm::from_coefficients(Side::Right, &[]);
        let l = KreinForm::from_coefficients(Side::Left, &[(1.0, 0.0)]);
        let cert = is_krein_unitary(&r, &l, &CMatrix::zeros(3, 0), DEFAULT_TOL);
        assert!(!cert.verdict);
        assert_eq!(cert.reason.as_deref(), Some("dimension mismatch, no unitary exists"));
        assert!(!exists_unitary(&r, &l));
    }

    #[test]
    fn contraction_examples() {
        let f = loop_form();
        let id = CMatrix::identity(3, 3);
        assert!(is_krein_contractive(&f, &f, &id, DEFAULT_TOL).unwrap().verdict);

        let half = id.scale(0.5);
        let cert = is_krein_contractive(&f, &f, &half, DEFAULT_TOL).unwrap();
        assert!(!cert.verdict);
        assert!((cert.min_eigenvalue.unwrap() + 0.75).abs() < 1e-14);

        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c64(2.0, 0.0), c64(0.5, 0.0), c64(0.5, 0.0)]));
        let cert = is_krein_contractive(&f, &f, &d, DEFAULT_TOL).unwrap();
        assert!(cert.verdict);
        let sharp = krein_adjoint(&f, &f, &d).unwrap();
        let expected = Matrix3::from_diagonal(&nalgebra::Vector3::new(0.5, 0.5, 2.0));
        assert!((&sharp - crate::linalg::to_complex(&nalgebra::DMatrix::from_iterator(3, 3, expected.iter().copied()))).norm() < 1e-14);
        assert!(is_krein_contractive(&f, &f, &sharp, DEFAULT_TOL).unwrap().verdict);
    }

    #[test]
    fn exists_unitary_examples() {
        let f = loop_form();
        assert!(exists_unitary(&f, &f));
        let empty = KreinForm::from_coefficients(Side::Right, &[]);
        let star = KreinForm::from_coefficients(Side::Left, &[(1.0, 0.0); 3]);
        assert!(!exists_unitary(&empty, &star));
    }

    #[test]
    fn certificate_json_shape() {
        let f = loop_form();
        let cert = is_krein_contractive(&f, &f, &CMatrix::identity(3, 3), DEFAULT_TOL).unwrap();
        let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
        for key in ["verdict", "residual_norms", "min_eigenvalue", "tolerance"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
