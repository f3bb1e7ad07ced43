//! Continuous-level checks: trace lifting, the boundary identity by
//! quadrature, and convergence drivers.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::boundary::BoundaryOperator;
use crate::discretization::{build_generator, DiscreteSystem};
use crate::error::{Error, Result};
use crate::evolution::{CrankNicolson, ExponentialStepper};
use crate::graph::{MetricGraph, Side};
use crate::krein::{KreinForm, TraceVector};
use crate::linalg::{c64, hermitian_eigenvalues, CMatrix, CVector, C64};
use crate::quadrature::gauss_legendre;

/// Degree-7 smoothstep `S(t) = 35t^4 - 84t^5 + 70t^6 - 20t^7` and its first
/// three derivatives. `S` rises from 0 to 1 on `[0, 1]` with three vanishing
/// derivatives at both ends.
fn smoothstep(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        return [0.0; 4];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let t2 = t * t;
    let t3 = t2 * t;
    [
        t3 * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))),
        t3 * (140.0 + t * (-420.0 + t * (420.0 - 140.0 * t))),
        t2 * (420.0 + t * (-1680.0 + t * (2100.0 - 840.0 * t))),
        t * (840.0 + t * (-5040.0 + t * (8400.0 - 4200.0 * t))),
    ]
}

/// `q(y) phi(sigma y)` on one edge with `q = t0 + t1 y + t2 y^2 / 2`,
/// `y = x - x0`. The cutoff `phi` is 1 up to distance `s0` from `x0` and 0
/// beyond `s1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftPiece {
    pub edge: usize,
    pub x0: f64,
    /// `+1` for a lift at the left end, `-1` at the right end.
    pub sigma: f64,
    pub s0: f64,
    pub s1: f64,
    pub coefficients: [C64; 3],
}

impl LiftPiece {
    /// `k`-th derivative at `x`, `k <= 3`.
    pub fn eval(&self, x: f64, k: usize) -> C64 {
        let y = x - self.x0;
        let s = self.sigma * y;
        let width = self.s1 - self.s0;
        let st = smoothstep((s - self.s0) / width);
        // psi^(j)(y) = sigma^j phi^(j)(s), phi = 1 - S((s - s0) / width).
        let psi: [f64; 4] = std::array::from_fn(|j| {
            let phi = if j == 0 { 1.0 - st[0] } else { -st[j] / width.powi(j as i32) };
            self.sigma.powi(j as i32) * phi
        });
        let [t0, t1, t2] = self.coefficients;
        let q = [t0 + t1 * y + t2 * (y * y / 2.0), t1 + t2 * y, t2, c64(0.0, 0.0)];
        const BINOM: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [1.0, 3.0, 3.0, 1.0],
        ];
        (0..=k).map(|i| q[i] * (BINOM[k][i] * psi[k - i])).sum()
    }

    /// Points where the integrand changes polynomial form.
    fn knots(&self) -> [f64; 3] {
        [self.x0, self.x0 + self.sigma * self.s0, self.x0 + self.sigma * self.s1]
    }
}

/// A sum of lifts, defined on the whole graph (zero where no piece lives).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LiftedFunction {
    pub pieces: Vec<LiftPiece>,
}

/// Cutoff window `(s0, s1)` for edge `e`: `s1 = min(l_min, length) / 2`,
/// `s0 = s1 / 2`.
pub fn cutoff_window(g: &MetricGraph, edge: usize) -> (f64, f64) {
    let cap = g.min_length().min(g.edges()[edge].length());
    let s1 = if cap.is_finite() { cap / 2.0 } else { 0.5 };
    (s1 / 2.0, s1)
}

/// Lifts trace data on `side` to a function with exactly those traces at
/// the chosen endpoints and zero traces everywhere else.
pub fn lift_traces(g: &MetricGraph, values: &TraceVector) -> Result<LiftedFunction> {
    let side = values.side;
    let expected = 3 * g.side_count(side);
    if values.values.len() != expected {
        return Err(Error::DimensionMismatch {
            expected: format!("{side} trace vector of length {expected}"),
            found: format!("{}", values.values.len()),
        });
    }
    let mut pieces = Vec::new();
    for e in g.side_edges(side) {
        let s = g.slot(side, e).expect("side edge has a slot");
        let edge = &g.edges()[e];
        let (s0, s1) = cutoff_window(g, e);
        let (x0, sigma) = match side {
            Side::Left => (edge.a, 1.0),
            Side::Right => (edge.b, -1.0),
        };
        let v = &values.values;
        pieces.push(LiftPiece {
            edge: e,
            x0,
            sigma,
            s0,
            s1,
            coefficients: [v[3 * s], v[3 * s + 1], v[3 * s + 2]],
        });
    }
    Ok(LiftedFunction { pieces })
}

/// Lift of independent standard complex Gaussian traces on both sides.
pub fn random_lift<R: Rng + ?Sized>(g: &MetricGraph, rng: &mut R) -> LiftedFunction {
    let mut draw = |side: Side| {
        let n = 3 * g.side_count(side);
        let v = CVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c64(re, im)
        });
        lift_traces(g, &TraceVector::new(side, v)).expect("sizes match by construction")
    };
    let left = draw(Side::Left);
    left.plus(draw(Side::Right))
}

impl LiftedFunction {
    pub fn plus(mut self, other: LiftedFunction) -> Self {
        self.pieces.extend(other.pieces);
        self
    }

    /// `k`-th derivative on edge `edge` at `x`.
    pub fn eval(&self, edge: usize, x: f64, k: usize) -> C64 {
        self.pieces.iter().filter(|p| p.edge == edge).map(|p| p.eval(x, k)).sum()
    }

    /// `alpha u''' + beta u'`.
    pub fn apply_operator(&self, g: &MetricGraph, edge: usize, x: f64) -> C64 {
        let e = &g.edges()[edge];
        self.eval(edge, x, 3) * e.alpha + self.eval(edge, x, 1) * e.beta
    }

    /// Exact traces `(u, u', u'')` on `side`.
    pub fn traces(&self, g: &MetricGraph, side: Side) -> TraceVector {
        let edges = g.side_edges(side);
        let mut v = CVector::zeros(3 * edges.len());
        for e in edges {
            let s = g.slot(side, e).expect("side edge has a slot");
            let edge = &g.edges()[e];
            let x = match side {
                Side::Left => edge.a,
                Side::Right => edge.b,
            };
            for k in 0..3 {
                v[3 * s + k] = self.eval(e, x, k);
            }
        }
        TraceVector::new(side, v)
    }

    /// Panels on `edge` covering the support, split at every knot.
    fn panels(&self, g: &MetricGraph, edge: usize) -> Vec<(f64, f64)> {
        let e = &g.edges()[edge];
        let mut knots: Vec<f64> = self
            .pieces
            .iter()
            .filter(|p| p.edge == edge)
            .flat_map(|p| p.knots())
            .filter(|x| x.is_finite())
            .map(|x| x.clamp(e.a.max(-f64::MAX), e.b.min(f64::MAX)))
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        knots.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
    }

    /// `int f(edge, x) dx` over the graph by composite Gauss–Legendre.
    fn integrate(&self, g: &MetricGraph, order: usize, f: impl Fn(usize, f64) -> C64) -> C64 {
        let mut total = c64(0.0, 0.0);
        for edge in 0..g.edges().len() {
            for (lo, hi) in self.panels(g, edge) {
                let (x, w) = gauss_legendre(order, lo, hi);
                for (x, w) in x.iter().zip(&w) {
                    total += f(edge, *x) * *w;
                }
            }
        }
        total
    }

    /// `sum_k ||u^(k)||^2` for `k = 0..=3`.
    pub fn sobolev_norm2(&self, g: &MetricGraph, order: usize) -> f64 {
        self.integrate(g, order, |e, x| {
            c64((0..=3).map(|k| self.eval(e, x, k).norm_sqr()).sum(), 0.0)
        })
        .re
    }
}

/// Outcome of one Green's identity evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensCheck {
    pub lhs: C64Pair,
    pub rhs: C64Pair,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C64Pair {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Pair {
    fn from(z: C64) -> Self {
        C64Pair { re: z.re, im: z.im }
    }
}

/// `<u | A v> + <A u | v>` by quadrature against
/// `-<B_r Tr_r u, Tr_r v> + <B_l Tr_l u, Tr_l v>` from exact traces.
pub fn check_greens_identity(
    g: &MetricGraph,
    u: &LiftedFunction,
    v: &LiftedFunction,
    quad_order: usize,
) -> Result<GreensCheck> {
    if quad_order < 4 {
        return Err(Error::QuadratureOrder(quad_order));
    }
    let both = u.clone().plus(v.clone());
    let lhs = both.integrate(g, quad_order, |e, x| {
        u.eval(e, x, 0) * v.apply_operator(g, e, x).conj() + u.apply_operator(g, e, x) * v.eval(e, x, 0).conj()
    });
    let b_r = KreinForm::build(g, Side::Right);
    let b_l = KreinForm::build(g, Side::Left);
    let rhs = -b_r.inner(&u.traces(g, Side::Right), &v.traces(g, Side::Right))?
        + b_l.inner(&u.traces(g, Side::Left), &v.traces(g, Side::Left))?;
    Ok(GreensCheck {
        lhs: lhs.into(),
        rhs: rhs.into(),
        residual: (lhs - rhs).norm() / (1.0 + lhs.norm()),
    })
}

/// Smallest `c` with `sum_k ||u^(k)||^2 <= c |t|^2` for every lift on `side`
/// (largest eigenvalue of the per-slot Gram matrices).
pub fn lift_bound_constant(g: &MetricGraph, side: Side, quad_order: usize) -> Result<f64> {
    if quad_order < 4 {
        return Err(Error::QuadratureOrder(quad_order));
    }
    let n = 3 * g.side_count(side);
    let mut worst: f64 = 0.0;
    for slot in 0..g.side_count(side) {
        let basis: Vec<LiftedFunction> = (0..3)
            .map(|k| {
                let mut t = CVector::zeros(n);
                t[3 * slot + k] = c64(1.0, 0.0);
                lift_traces(g, &TraceVector::new(side, t))
            })
            .collect::<Result<_>>()?;
        let gram = CMatrix::from_fn(3, 3, |i, j| {
            let (bi, bj) = (&basis[i], &basis[j]);
            bi.clone().plus(bj.clone()).integrate(g, quad_order, |e, x| {
                (0..=3).map(|k| bi.eval(e, x, k) * bj.eval(e, x, k).conj()).sum()
            })
        });
        if let Some(&top) = hermitian_eigenvalues(&gram).last() {
            worst = worst.max(top);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Degree for spatial studies, time step for temporal ones.
    pub parameter: f64,
    pub error: f64,
    /// `error(previous) / error(this)`.
    pub ratio: Option<f64>,
    /// Observed order `log(ratio) / log(parameter(previous) / parameter)`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub kind: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    fn from_errors(kind: &str, params: &[f64], errors: Vec<f64>) -> Self {
        let rows = params
            .iter()
            .zip(&errors)
            .enumerate()
            .map(|(i, (&p, &e))| {
                let ratio = (i > 0).then(|| errors[i - 1] / e);
                let order = ratio.map(|r| r.ln() / (params[i - 1] / p).ln().abs());
                ConvergenceRow {
                    parameter: p,
                    error: e,
                    ratio,
                    order,
                }
            })
            .collect();
        ConvergenceTable {
            kind: kind.to_string(),
            rows,
        }
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }

    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# airy-graph convergence v1 ({})", self.kind).unwrap();
        writeln!(out, "parameter,error,ratio,order").unwrap();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.parameter, r.error, opt(r.ratio), opt(r.order)).unwrap();
        }
        out
    }
}

/// Crank–Nicolson error at `t_end` against the exact exponential, for each
/// `dt` (each must divide `t_end`).
pub fn temporal_convergence(sys: &DiscreteSystem, c0: &CVector, t_end: f64, dts: &[f64]) -> Result<ConvergenceTable> {
    let reference = ExponentialStepper::new(sys.generator(), t_end)?.step(c0);
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let steps = crate::evolution::EvolutionConfig::new(dt, t_end, crate::evolution::Integrator::CrankNicolson).steps()?;
        let cn = CrankNicolson::new(sys.generator(), dt)?;
        let mut c = c0.clone();
        for _ in 0..steps {
            c = cn.step(&c)?;
        }
        errors.push((c - &reference).norm());
    }
    Ok(ConvergenceTable::from_errors("temporal", dts, errors))
}

/// Spatial error at `t_end` against an analytic solution, with exact time
/// integration, for each degree. `exact(t, edge, x)` must also supply the
/// initial data at `t = 0`.
pub fn spatial_convergence(
    g: &MetricGraph,
    bc: &BoundaryOperator,
    exact: &dyn Fn(f64, usize, f64) -> C64,
    degrees: &[usize],
    t_end: f64,
) -> Result<ConvergenceTable> {
    let mut errors = Vec::with_capacity(degrees.len());
    for &n in degrees {
        let sys = build_generator(g, bc, n)?;
        let c0 = sys.project(&sys.sample(|e, x| exact(0.0, e, x)))?.state;
        let c = ExponentialStepper::new(sys.generator(), t_end)?.step(&c0);
        let diff = sys.reconstruct(&c) - sys.sample(|e, x| exact(t_end, e, x));
        errors.push(sys.mass_inner(&diff, &diff).re.max(0.0).sqrt());
    }
    let params: Vec<f64> = degrees.iter().map(|&n| n as f64).collect();
    Ok(ConvergenceTable::from_errors("spatial", &params, errors))
}

/// Plane wave `exp(i kappa x - i (alpha kappa^3 - beta kappa) t)` for a
/// single-edge loop of length `len`, with `kappa = 2 pi k / len`.
pub fn plane_wave(g: &MetricGraph, k: f64) -> impl Fn(f64, usize, f64) -> C64 + '_ {
    move |t, e, x| {
        let edge = &g.edges()[e];
        let kappa = 2.0 * std::f64::consts::PI * k / edge.length();
        let omega = edge.alpha * kappa.powi(3) - edge.beta * kappa;
        C64::from_polar(1.0, kappa * (x - edge.a) - omega * t)
    }
}

/// Both studies for the loop plane wave: spatial over `degrees`, temporal
/// with Crank–Nicolson at the largest degree over `dts`.
pub fn convergence_study(
    g: &MetricGraph,
    bc: &BoundaryOperator,
    k: f64,
    degrees: &[usize],
    dts: &[f64],
    t_end: f64,
) -> Result<(ConvergenceTable, ConvergenceTable)> {
    let exact = plane_wave(g, k);
    let spatial = spatial_convergence(g, bc, &exact, degrees, t_end)?;
    let n = degrees.iter().copied().max().ok_or_else(|| Error::InvalidParameter("empty degree list".into()))?;
    let sys = build_generator(g, bc, n)?;
    let c0 = sys.project(&sys.sample(|e, x| exact(0.0, e, x)))?.state;
    let temporal = temporal_convergence(&sys, &c0, t_end, dts)?;
    Ok((spatial, temporal))
}
