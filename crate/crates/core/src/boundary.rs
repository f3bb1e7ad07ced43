//! Vertex boundary operators.
//!
//! A boundary condition is one matrix `L_v` per vertex mapping the right
//! traces arriving at `v` to the left traces leaving `v`:
//! `L_v (Tr_r u)|_{E_r,v} = (Tr_l u)|_{E_l,v}`. The global operator is the
//! block-diagonal assembly of the `L_v`, and all Krein properties are
//! decided vertex by vertex.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph, Side};
use crate::krein::{
    is_krein_contractive, is_krein_unitary, krein_adjoint, Certificate, KreinForm,
};
use crate::linalg::{
    c64, expm, hermitian_eigen_desc, random_skew_hermitian, random_unitary, scatter, CMatrix,
    CVector,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryOperator {
    blocks: BTreeMap<String, CMatrix>,
}

impl BoundaryOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_block(mut self, vertex: &str, block: CMatrix) -> Self {
        self.blocks.insert(vertex.to_string(), block);
        self
    }

    pub fn insert(&mut self, vertex: &str, block: CMatrix) {
        self.blocks.insert(vertex.to_string(), block);
    }

    pub fn block(&self, vertex: &str) -> Option<&CMatrix> {
        self.blocks.get(vertex)
    }

    pub fn blocks(&self) -> &BTreeMap<String, CMatrix> {
        &self.blocks
    }

    /// Identity-pairing operator when every vertex is balanced (left slot
    /// `i` receives right slot `i`); useful as a neutral default.
    pub fn identity(g: &MetricGraph) -> Result<Self> {
        let mut bc = Self::new();
        for v in g.vertices() {
            let (rows, cols) = expected_shape(g, v)?;
            if rows != cols {
                return Err(Error::UnbalancedVertex {
                    vertex: v.clone(),
                    right_dim: cols,
                    left_dim: rows,
                });
            }
            bc.insert(v, CMatrix::identity(rows, cols));
        }
        Ok(bc)
    }

    /// Checks every block against the incidence of `g`.
    pub fn check_shapes(&self, g: &MetricGraph) -> Result<()> {
        for v in self.blocks.keys() {
            if g.vertex_index(v).is_none() {
                return Err(Error::UnknownVertex(v.clone()));
            }
        }
        for v in g.vertices() {
            let (rows, cols) = expected_shape(g, v)?;
            match self.blocks.get(v) {
                Some(b) if b.shape() == (rows, cols) => {}
                Some(b) => {
                    return Err(Error::ShapeMismatch {
                        vertex: v.clone(),
                        expected_rows: rows,
                        expected_cols: cols,
                        rows: b.nrows(),
                        cols: b.ncols(),
                    })
                }
                None if rows == 0 && cols == 0 => {}
                None => return Err(Error::MissingBlock(v.clone())),
            }
        }
        Ok(())
    }

    /// Block at `v`, with absent blocks read as the empty `0x0` matrix.
    fn block_or_empty(&self, g: &MetricGraph, v: &str) -> Result<CMatrix> {
        match self.blocks.get(v) {
            Some(b) => Ok(b.clone()),
            None => {
                let (rows, cols) = expected_shape(g, v)?;
                Ok(CMatrix::zeros(rows, cols))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BcFile = serde_json::from_str(text)?;
        let mut bc = Self::new();
        for (v, m) in file.vertex_blocks {
            if m.entries.len() != m.rows * m.cols {
                return Err(Error::InvalidParameter(format!(
                    "block `{v}` declares {}x{} but has {} entries",
                    m.rows,
                    m.cols,
                    m.entries.len()
                )));
            }
            let block =
                CMatrix::from_row_iterator(m.rows, m.cols, m.entries.iter().map(|&[re, im]| c64(re, im)));
            bc.insert(&v, block);
        }
        Ok(bc)
    }

    pub fn to_json(&self) -> String {
        let file = BcFile {
            vertex_blocks: self
                .blocks
                .iter()
                .map(|(v, b)| {
                    let entries = (0..b.nrows())
                        .flat_map(|r| (0..b.ncols()).map(move |c| (r, c)))
                        .map(|(r, c)| [b[(r, c)].re, b[(r, c)].im])
                        .collect();
                    (
                        v.clone(),
                        BlockFile {
                            rows: b.nrows(),
                            cols: b.ncols(),
                            entries,
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("boundary operator serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BcFile {
    vertex_blocks: BTreeMap<String, BlockFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    rows: usize,
    cols: usize,
    /// Row-major `[re, im]` pairs.
    entries: Vec<[f64; 2]>,
}

/// `(3 |E_l,v|, 3 |E_r,v|)`.
pub fn expected_shape(g: &MetricGraph, v: &str) -> Result<(usize, usize)> {
    let inc = g.incidence(v)?;
    Ok((3 * inc.left.len(), 3 * inc.right.len()))
}

/// Scatters the vertex blocks into the global `3|E_l| x 3|E_r|` operator.
pub fn assemble_global(g: &MetricGraph, bc: &BoundaryOperator) -> Result<CMatrix> {
    bc.check_shapes(g)?;
    let mut l = CMatrix::zeros(3 * g.side_count(Side::Left), 3 * g.side_count(Side::Right));
    for v in g.vertices() {
        let rows = g.vertex_positions(v, Side::Left)?;
        let cols = g.vertex_positions(v, Side::Right)?;
        let block = bc.block_or_empty(g, v)?;
        for (bi, &gi) in rows.iter().enumerate() {
            for (bj, &gj) in cols.iter().enumerate() {
                l[(gi, gj)] = block[(bi, bj)];
            }
        }
    }
    Ok(l)
}

/// `(B_r, B_l)` restricted to the slots of vertex `v`.
pub fn vertex_forms(g: &MetricGraph, v: &str) -> Result<(KreinForm, KreinForm)> {
    let b_r = KreinForm::build(g, Side::Right).restrict(&g.vertex_positions(v, Side::Right)?);
    let b_l = KreinForm::build(g, Side::Left).restrict(&g.vertex_positions(v, Side::Left)?);
    Ok((b_r, b_l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unitary,
    BiContractive,
    ContractiveOnly,
    AdjointContractiveOnly,
    Neither,
}

impl Verdict {
    fn from_flags(unitary: bool, contractive: bool, adjoint: bool) -> Self {
        match (unitary, contractive, adjoint) {
            (true, _, _) => Verdict::Unitary,
            (false, true, true) => Verdict::BiContractive,
            (false, true, false) => Verdict::ContractiveOnly,
            (false, false, true) => Verdict::AdjointContractiveOnly,
            (false, false, false) => Verdict::Neither,
        }
    }

    /// Unitary or bi-contractive: the boundary condition generates a unitary
    /// group or a contraction semigroup.
    pub fn is_admissible(self) -> bool {
        matches!(self, Verdict::Unitary | Verdict::BiContractive)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Unitary => "unitary",
            Verdict::BiContractive => "bi_contractive",
            Verdict::ContractiveOnly => "contractive_only",
            Verdict::AdjointContractiveOnly => "adjoint_contractive_only",
            Verdict::Neither => "neither",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorClassification {
    pub verdict: Verdict,
    pub unitary: Certificate,
    pub contractive: Certificate,
    pub adjoint_contractive: Certificate,
}

/// Classifies one operator between the given forms.
pub fn classify_operator(
    b_r: &KreinForm,
    b_l: &KreinForm,
    l: &CMatrix,
    tol: f64,
) -> Result<OperatorClassification> {
    let unitary = is_krein_unitary(b_r, b_l, l, tol);
    let contractive = is_krein_contractive(b_r, b_l, l, tol)?;
    let sharp = krein_adjoint(b_r, b_l, l)?;
    let adjoint_contractive = is_krein_contractive(b_l, b_r, &sharp, tol)?;
    Ok(OperatorClassification {
        verdict: Verdict::from_flags(unitary.verdict, contractive.verdict, adjoint_contractive.verdict),
        unitary,
        contractive,
        adjoint_contractive,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexClassification {
    pub vertex: String,
    #[serde(flatten)]
    pub result: OperatorClassification,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub vertices: Vec<VertexClassification>,
    /// Conjunction of the per-vertex verdicts.
    pub global: Verdict,
    /// Verdict computed directly on the assembled operator and global forms.
    pub direct: OperatorClassification,
    /// Whether `direct.verdict == global`.
    pub consistent: bool,
}

pub fn classify(g: &MetricGraph, bc: &BoundaryOperator, tol: f64) -> Result<Classification> {
    let global_l = assemble_global(g, bc)?;
    let mut vertices = Vec::with_capacity(g.vertices().len());
    for v in g.vertices() {
        let (b_r, b_l) = vertex_forms(g, v)?;
        let block = bc.block_or_empty(g, v)?;
        vertices.push(VertexClassification {
            vertex: v.clone(),
            result: classify_operator(&b_r, &b_l, &block, tol)?,
        });
    }
    let all = |f: fn(&OperatorClassification) -> bool| vertices.iter().all(|v| f(&v.result));
    let global = Verdict::from_flags(
        all(|r| r.unitary.verdict),
        all(|r| r.contractive.verdict),
        all(|r| r.adjoint_contractive.verdict),
    );
    let direct = classify_operator(
        &KreinForm::build(g, Side::Right),
        &KreinForm::build(g, Side::Left),
        &global_l,
        tol,
    )?;
    let consistent = direct.verdict == global;
    Ok(Classification {
        vertices,
        global,
        direct,
        consistent,
    })
}

/// Congruence `B = S* J S` with `J = diag(I_p, -I_q)`, positive directions
/// first.
#[derive(Debug, Clone)]
pub struct JFactor {
    pub s: CMatrix,
    pub s_inv: CMatrix,
    pub positive: usize,
    pub negative: usize,
}

impl JFactor {
    pub fn new(form: &KreinForm) -> Result<Self> {
        let sig = form.signature()?;
        let (vals, q) = hermitian_eigen_desc(form.matrix());
        let n = vals.len();
        let sqrt = CVector::from_iterator(n, vals.iter().map(|v| c64(v.abs().sqrt(), 0.0)));
        let inv_sqrt = sqrt.map(|z| c64(1.0 / z.re, 0.0));
        let s = CMatrix::from_diagonal(&sqrt) * q.adjoint();
        let s_inv = &q * CMatrix::from_diagonal(&inv_sqrt);
        Ok(JFactor {
            s,
            s_inv,
            positive: sig.positive,
            negative: sig.negative,
        })
    }

    pub fn j(&self) -> CMatrix {
        let n = self.positive + self.negative;
        CMatrix::from_fn(n, n, |r, c| match (r == c, r < self.positive) {
            (true, true) => c64(1.0, 0.0),
            (true, false) => c64(-1.0, 0.0),
            _ => c64(0.0, 0.0),
        })
    }
}

fn balanced_vertex_forms(g: &MetricGraph, v: &str) -> Result<(KreinForm, KreinForm)> {
    let (b_r, b_l) = vertex_forms(g, v)?;
    if b_r.dimension() != b_l.dimension() || b_r.dimension() == 0 {
        return Err(Error::UnbalancedVertex {
            vertex: v.to_string(),
            right_dim: b_r.dimension(),
            left_dim: b_l.dimension(),
        });
    }
    Ok((b_r, b_l))
}

/// `S_l^{-1} exp(J A) S_r` for a skew-Hermitian `a`: a Krein-unitary map
/// from `K_r` to `K_l`. `a = 0` gives `S_l^{-1} S_r`.
pub fn unitary_from_generator(b_r: &KreinForm, b_l: &KreinForm, a: &CMatrix) -> Result<CMatrix> {
    let fr = JFactor::new(b_r)?;
    let fl = JFactor::new(b_l)?;
    let m = expm(&(fr.j() * a));
    Ok(&fl.s_inv * m * &fr.s)
}

/// Random Krein-unitary block for a balanced vertex. Deterministic in `seed`.
pub fn sample_unitary(g: &MetricGraph, vertex: &str, seed: u64) -> Result<CMatrix> {
    let (b_r, b_l) = balanced_vertex_forms(g, vertex)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_skew_hermitian(&mut rng, b_r.dimension(), 0.5);
    unitary_from_generator(&b_r, &b_l, &a)
}

/// Random bi-contractive block for a balanced vertex.
///
/// In J-coordinates the core is `diag(P, Q)` with `P` contracting on the
/// positive directions (singular values at most `1 - strictness/2`) and `Q`
/// expanding on the negative ones (at least `1 + strictness/2`), sandwiched
/// between random J-unitaries. `strictness = 0` yields a Krein-unitary.
pub fn sample_bicontraction(
    g: &MetricGraph,
    vertex: &str,
    seed: u64,
    strictness: f64,
) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&strictness) {
        return Err(Error::InvalidParameter(format!(
            "strictness must lie in [0, 1], got {strictness}"
        )));
    }
    let (b_r, b_l) = balanced_vertex_forms(g, vertex)?;
    let fr = JFactor::new(&b_r)?;
    let fl = JFactor::new(&b_l)?;
    let j = fr.j();
    let n = j.nrows();
    let (p, q) = (fr.positive, fr.negative);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut core = CMatrix::zeros(n, n);
    let contract = scaled_unitary_pair(&mut rng, p, |r| (1.0 - strictness / 2.0) * (1.0 - strictness * r / 2.0));
    let expand = scaled_unitary_pair(&mut rng, q, |r| (1.0 + strictness / 2.0) * (1.0 + strictness * r / 2.0));
    scatter(&mut core, &contract, 0, 0);
    scatter(&mut core, &expand, p, p);

    let left = expm(&(&j * random_skew_hermitian(&mut rng, n, 0.5)));
    let right = expm(&(&j * random_skew_hermitian(&mut rng, n, 0.5)));
    let m = left * core * right;
    Ok(&fl.s_inv * m * &fr.s)
}

/// `U diag(s_i) V` with Haar unitaries and `s_i = shape(r_i)`, `r_i` uniform
/// in `[0, 1)`.
fn scaled_unitary_pair(rng: &mut ChaCha8Rng, n: usize, shape: impl Fn(f64) -> f64) -> CMatrix {
    use rand::Rng;
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let s = CVector::from_iterator(n, (0..n).map(|_| c64(shape(rng.gen::<f64>()), 0.0)));
    u * CMatrix::from_diagonal(&s) * v
}

/// Graphs and boundary conditions that ship with the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    /// Two half-lines meeting at `v` with the unitary lower-triangular
    /// coupling. With `truncate = Some(len)` both lines are cut to length
    /// `len` and their far ends are joined at a vertex `far` carrying the
    /// absorbing closure `diag(1, 0, 1)`.
    TwoHalflinesUnitary { truncate: Option<f64> },
    /// One vertex with `n_in` incoming and `n_out` outgoing half-lines.
    /// The block pairs incoming `i` with outgoing `i` when balanced and is
    /// zero otherwise; replace it with [`star_with_block`].
    Star { n_in: usize, n_out: usize },
    /// Unit loop with identity operator: periodic conditions.
    LoopPeriodic,
    /// Unit loop with `L = diag(a, b, 1/a)`.
    LoopDiag { a: f64, b: f64 },
}

/// Default truncation length for simulating the two half-lines.
pub const DEFAULT_TRUNCATION: f64 = 20.0;

impl Builtin {
    /// Parses `name` or `name(arg, ...)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(i) if text.ends_with(')') => (&text[..i], &text[i + 1..text.len() - 1]),
            Some(_) => return Err(Error::UnknownBuiltin(text.to_string())),
            None => (text, ""),
        };
        let args: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad builtin argument `{a}`")))
                })
                .collect::<Result<_>>()?
        };
        let count = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "builtin `{name}` takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        let as_count = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::InvalidParameter(format!("expected an edge count, got {x}")))
            }
        };
        match name {
            "two_halflines_unitary" => match args.len() {
                0 => Ok(Builtin::TwoHalflinesUnitary { truncate: None }),
                1 => Ok(Builtin::TwoHalflinesUnitary { truncate: Some(args[0]) }),
                _ => count(1).map(|_| unreachable!()),
            },
            "star" => {
                count(2)?;
                Ok(Builtin::Star {
                    n_in: as_count(args[0])?,
                    n_out: as_count(args[1])?,
                })
            }
            "loop_periodic" => {
                count(0)?;
                Ok(Builtin::LoopPeriodic)
            }
            "loop_diag" => {
                count(2)?;
                Ok(Builtin::LoopDiag { a: args[0], b: args[1] })
            }
            _ => Err(Error::UnknownBuiltin(text.to_string())),
        }
    }

    /// Variant suitable for time stepping: semi-infinite edges truncated.
    pub fn for_simulation(&self) -> Self {
        match self {
            Builtin::TwoHalflinesUnitary { truncate: None } => Builtin::TwoHalflinesUnitary {
                truncate: Some(DEFAULT_TRUNCATION),
            },
            other => other.clone(),
        }
    }

    pub fn build(&self) -> Result<(MetricGraph, BoundaryOperator)> {
        match *self {
            Builtin::TwoHalflinesUnitary { truncate: None } => {
                let g = MetricGraph::from_parts(
                    &["v"],
                    vec![
                        Edge::incoming_halfline("e_in", 0.0, "v", 1.0, 0.0),
                        Edge::outgoing_halfline("e_out", 0.0, "v", 1.0, 0.0),
                    ],
                )?;
                Ok((g, BoundaryOperator::new().with_block("v", halfline_coupling())))
            }
            Builtin::TwoHalflinesUnitary { truncate: Some(len) } => {
                if !(len > 0.0 && len.is_finite()) {
                    return Err(Error::InvalidParameter(format!("truncation length {len}")));
                }
                let g = MetricGraph::from_parts(
                    &["v", "far"],
                    vec![
                        Edge::finite("e_in", -len, 0.0, "far", "v", 1.0, 0.0),
                        Edge::finite("e_out", 0.0, len, "v", "far", 1.0, 0.0),
                    ],
                )?;
                let bc = BoundaryOperator::new()
                    .with_block("v", halfline_coupling())
                    .with_block("far", diag3(1.0, 0.0, 1.0));
                Ok((g, bc))
            }
            Builtin::Star { n_in, n_out } => {
                let block = if n_in == n_out {
                    CMatrix::identity(3 * n_out, 3 * n_in)
                } else {
                    CMatrix::zeros(3 * n_out, 3 * n_in)
                };
                star_with_block(n_in, n_out, block)
            }
            Builtin::LoopPeriodic => {
                let g = loop_graph(1.0, 0.0)?;
                Ok((g, BoundaryOperator::new().with_block("v", CMatrix::identity(3, 3))))
            }
            Builtin::LoopDiag { a, b } => {
                if a == 0.0 || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "loop_diag needs finite a != 0 and finite b, got a = {a}, b = {b}"
                    )));
                }
                let g = loop_graph(1.0, 0.0)?;
                Ok((g, BoundaryOperator::new().with_block("v", diag3(a, b, 1.0 / a))))
            }
        }
    }
}

pub fn builtin(name: &str) -> Result<(MetricGraph, BoundaryOperator)> {
    Builtin::parse(name)?.build()
}

/// The coupling `[[1,0,0],[sqrt2,1,0],[1,sqrt2,1]]`, Krein-unitary for two
/// half-lines with `alpha = 1`, `beta = 0`.
pub fn halfline_coupling() -> CMatrix {
    let s = std::f64::consts::SQRT_2;
    CMatrix::from_row_slice(
        3,
        3,
        &[1.0, 0.0, 0.0, s, 1.0, 0.0, 1.0, s, 1.0].map(|x| c64(x, 0.0)),
    )
}

pub fn diag3(a: f64, b: f64, c: f64) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![c64(a, 0.0), c64(b, 0.0), c64(c, 0.0)]))
}

/// Unit loop at vertex `v` with edge `e1 = (0, 1)`.
pub fn loop_graph(alpha: f64, beta: f64) -> Result<MetricGraph> {
    MetricGraph::from_parts(&["v"], vec![Edge::finite("e1", 0.0, 1.0, "v", "v", alpha, beta)])
}

pub fn star_graph(n_in: usize, n_out: usize) -> Result<MetricGraph> {
    let mut edges = Vec::with_capacity(n_in + n_out);
    for i in 1..=n_in {
        edges.push(Edge::incoming_halfline(&format!("in{i:02}"), 0.0, "v", 1.0, 0.0));
    }
    for i in 1..=n_out {
        edges.push(Edge::outgoing_halfline(&format!("out{i:02}"), 0.0, "v", 1.0, 0.0));
    }
    MetricGraph::from_parts(&["v"], edges)
}

pub fn star_with_block(
    n_in: usize,
    n_out: usize,
    block: CMatrix,
) -> Result<(MetricGraph, BoundaryOperator)> {
    let g = star_graph(n_in, n_out)?;
    let bc = BoundaryOperator::new().with_block("v", block);
    bc.check_shapes(&g)?;
    Ok((g, bc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::DEFAULT_TOL;

    fn path_graph() -> MetricGraph {
        // u -> v -> w -> u: every vertex has one left and one right slot.
        MetricGraph::from_parts(
            &["u", "v"],
            vec![
                Edge::finite("e1", 0.0, 1.0, "u", "v", 1.0, 0.0),
                Edge::finite("e2", 0.0, 2.0, "v", "u", 2.0, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn assemble_loop_identity() {
        let (g, bc) = builtin("loop_periodic").unwrap();
        assert_eq!(assemble_global(&g, &bc).unwrap(), CMatrix::identity(3, 3));
    }

    #[test]
    fn assemble_two_vertices_places_blocks() {
        let g = path_graph();
        let a = CMatrix::from_fn(3, 3, |r, c| c64((r * 3 + c + 1) as f64, 0.0));
        let b = a.scale(-1.0);
        let bc = BoundaryOperator::new().with_block("u", a.clone()).with_block("v", b.clone());
        let l = assemble_global(&g, &bc).unwrap();
        assert_eq!(l.shape(), (6, 6));
        // u: left slot of e1 (rows 0..3), right slot of e2 (cols 3..6).
        assert_eq!(l.view((0, 3), (3, 3)).into_owned(), a);
        assert_eq!(l.view((3, 0), (3, 3)).into_owned(), b);
        assert!(l.view((0, 0), (3, 3)).iter().all(|z| *z == c64(0.0, 0.0)));
        assert!(l.view((3, 3), (3, 3)).iter().all(|z| *z == c64(0.0, 0.0)));
    }

    #[test]
    fn star_block_is_global() {
        let block = CMatrix::from_fn(6, 3, |r, c| c64(r as f64, c as f64));
        let (g, bc) = star_with_block(1, 2, block.clone()).unwrap();
        assert_eq!(assemble_global(&g, &bc).unwrap(), block);
    }

    #[test]
    fn shape_errors_name_vertex() {
        let g = path_graph();
        let bc = BoundaryOperator::new()
            .with_block("u", CMatrix::identity(3, 3))
            .with_block("v", CMatrix::identity(3, 6));
        match assemble_global(&g, &bc) {
            Err(Error::ShapeMismatch { vertex, .. }) => assert_eq!(vertex, "v"),
            other => panic!("{other:?}"),
        }
        let bc = BoundaryOperator::new().with_block("u", CMatrix::identity(3, 3));
        assert!(matches!(assemble_global(&g, &bc), Err(Error::MissingBlock(v)) if v == "v"));
    }

    #[test]
    fn classify_examples() {
        let (g, bc) = builtin("loop_periodic").unwrap();
        let c = classify(&g, &bc, DEFAULT_TOL).unwrap();
        assert_eq!(c.global, Verdict::Unitary);
        assert!(c.consistent);

        let (g, bc) = builtin("two_halflines_unitary").unwrap();
        assert_eq!(classify(&g, &bc, DEFAULT_TOL).unwrap().global, Verdict::Unitary);

        let (g, bc) = builtin("loop_diag(2, 0.5)").unwrap();
        let c = classify(&g, &bc, DEFAULT_TOL).unwrap();
        assert_eq!(c.global, Verdict::BiContractive);
        let defect = c.vertices[0].result.contractive.min_eigenvalue.unwrap();
        assert!(defect.abs() < 1e-14);

        let g = loop_graph(1.0, 0.0).unwrap();
        let bc = BoundaryOperator::new().with_block("v", CMatrix::identity(3, 3).scale(2.0));
        assert_eq!(classify(&g, &bc, DEFAULT_TOL).unwrap().global, Verdict::Neither);
    }

    #[test]
    fn one_sided_vertices_are_not_admissible() {
        // 3x0 block: contractive vacuously, adjoint fails.
        let (g, bc) = star_with_block(0, 1, CMatrix::zeros(3, 0)).unwrap();
        assert_eq!(classify(&g, &bc, DEFAULT_TOL).unwrap().global, Verdict::ContractiveOnly);
        let (g, bc) = star_with_block(1, 0, CMatrix::zeros(0, 3)).unwrap();
        assert_eq!(
            classify(&g, &bc, DEFAULT_TOL).unwrap().global,
            Verdict::AdjointContractiveOnly
        );
    }

    #[test]
    fn loop_diag_sweep() {
        for a in [0.5, 1.0, 2.0] {
            for b in [0.0, 0.5, -0.5, 1.0, -1.0, 1.001, -1.001] {
                let (g, bc) = Builtin::LoopDiag { a, b }.build().unwrap();
                let c = classify(&g, &bc, DEFAULT_TOL).unwrap();
                assert!(c.consistent);
                let expected = if b.abs() == 1.0 {
                    Verdict::Unitary
                } else if b.abs() < 1.0 {
                    Verdict::BiContractive
                } else {
                    Verdict::Neither
                };
                assert_eq!(c.global, expected, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn samplers_pass_checks() {
        let (g, _) = builtin("loop_periodic").unwrap();
        for seed in 0..20 {
            let l = sample_unitary(&g, "v", seed).unwrap();
            let (b_r, b_l) = vertex_forms(&g, "v").unwrap();
            assert!(is_krein_unitary(&b_r, &b_l, &l, DEFAULT_TOL).verdict, "seed {seed}");
            let l = sample_bicontraction(&g, "v", seed, 1.0).unwrap();
            let c = classify_operator(&b_r, &b_l, &l, DEFAULT_TOL).unwrap();
            assert_eq!(c.verdict, Verdict::BiContractive, "seed {seed}");
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let (g, _) = builtin("loop_periodic").unwrap();
        assert_eq!(sample_unitary(&g, "v", 7).unwrap(), sample_unitary(&g, "v", 7).unwrap());
        assert_ne!(sample_unitary(&g, "v", 7).unwrap(), sample_unitary(&g, "v", 8).unwrap());
    }

    #[test]
    fn zero_generator_gives_congruence() {
        let g = path_graph();
        let (b_r, b_l) = vertex_forms(&g, "u").unwrap();
        let l = unitary_from_generator(&b_r, &b_l, &CMatrix::zeros(3, 3)).unwrap();
        let fr = JFactor::new(&b_r).unwrap();
        let fl = JFactor::new(&b_l).unwrap();
        assert!((&l - &fl.s_inv * &fr.s).norm() < 1e-14);
        assert!(is_krein_unitary(&b_r, &b_l, &l, DEFAULT_TOL).verdict);
    }

    #[test]
    fn j_factor_reproduces_form() {
        let f = KreinForm::from_coefficients(Side::Left, &[(0.3, 2.0), (4.0, -1.0)]);
        let jf = JFactor::new(&f).unwrap();
        assert_eq!((jf.positive, jf.negative), (4, 2));
        let back = jf.s.adjoint() * jf.j() * &jf.s;
        assert!((back - f.matrix()).norm() < 1e-12);
        assert!((&jf.s * &jf.s_inv - CMatrix::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn strictness_zero_is_unitary() {
        let (g, _) = builtin("loop_periodic").unwrap();
        let (b_r, b_l) = vertex_forms(&g, "v").unwrap();
        for seed in 0..5 {
            let l = sample_bicontraction(&g, "v", seed, 0.0).unwrap();
            assert!(is_krein_unitary(&b_r, &b_l, &l, DEFAULT_TOL).verdict);
        }
    }

    #[test]
    fn product_of_bicontractions() {
        let (g, _) = builtin("loop_periodic").unwrap();
        let (b_r, b_l) = vertex_forms(&g, "v").unwrap();
        for seed in 0..10 {
            let l1 = sample_bicontraction(&g, "v", seed, 0.6).unwrap();
            let l2 = sample_bicontraction(&g, "v", seed + 100, 0.3).unwrap();
            let c = classify_operator(&b_r, &b_l, &(l1 * l2), DEFAULT_TOL).unwrap();
            assert!(c.contractive.verdict && c.adjoint_contractive.verdict);
        }
    }

    #[test]
    fn unbalanced_sampling_is_rejected() {
        let g = star_graph(0, 3).unwrap();
        match sample_unitary(&g, "v", 1) {
            Err(Error::UnbalancedVertex { right_dim, left_dim, .. }) => {
                assert_eq!((right_dim, left_dim), (0, 9))
            }
            other => panic!("{other:?}"),
        }
        assert!(sample_bicontraction(&g, "v", 1, 0.5).is_err());
    }

    #[test]
    fn builtin_parsing() {
        assert_eq!(
            Builtin::parse("star(2, 3)").unwrap(),
            Builtin::Star { n_in: 2, n_out: 3 }
        );
        assert_eq!(
            Builtin::parse("loop_diag(2,0.5)").unwrap(),
            Builtin::LoopDiag { a: 2.0, b: 0.5 }
        );
        assert!(matches!(Builtin::parse("moebius"), Err(Error::UnknownBuiltin(_))));
        assert!(Builtin::parse("loop_diag(0, 0.5)").unwrap().build().is_err());
        let (_, bc) = builtin("two_halflines_unitary").unwrap();
        assert_eq!(bc.block("v").unwrap(), &halfline_coupling());
    }

    #[test]
    fn truncated_halflines_are_bicontractive() {
        let (g, bc) = builtin("two_halflines_unitary(20)").unwrap();
        assert!(g.is_finite());
        let c = classify(&g, &bc, DEFAULT_TOL).unwrap();
        assert_eq!(c.global, Verdict::BiContractive);
        let v = c.vertices.iter().find(|v| v.vertex == "v").unwrap();
        assert_eq!(v.result.verdict, Verdict::Unitary);
    }

    #[test]
    fn json_round_trip() {
        let (g, _) = builtin("loop_periodic").unwrap();
        let bc = BoundaryOperator::new().with_block("v", sample_unitary(&g, "v", 3).unwrap());
        let text = bc.to_json();
        assert_eq!(BoundaryOperator::from_json(&text).unwrap(), bc);
        assert!(BoundaryOperator::from_json(r#"{"vertex_blocks":{"v":{"rows":1,"cols":1,"entries":[]}}}"#).is_err());
        assert!(BoundaryOperator::from_json(r#"{"blocks":{}}"#).is_err());
    }
}
