//! Time stepping of the reduced system `c' = A c`.

use std::fmt::Write as _;

use nalgebra::LU;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::BoundaryOperator;
use crate::discretization::DiscreteSystem;
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, Side};
use crate::linalg::{c64, expm, CMatrix, CVector};

/// Largest reduced dimension for the dense exponential.
pub const EXPM_CAP: usize = 2000;
pub const RECORD_FORMAT: &str = "airy-graph run record v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    CrankNicolson,
    MatrixExponential,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crank_nicolson" | "cn" => Ok(Integrator::CrankNicolson),
            "matrix_exponential" | "expm" => Ok(Integrator::MatrixExponential),
            _ => Err(Error::InvalidParameter(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Integrator,
    /// Record every `sample_every`-th step (the last step is always kept).
    pub sample_every: usize,
    pub record_traces: bool,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Integrator) -> Self {
        EvolutionConfig {
            dt,
            t_end,
            scheme,
            sample_every: 1,
            record_traces: true,
        }
    }

    /// Number of steps; `t_end` must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be at least 1".into()));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// Cayley step `(I - dt/2 A)^{-1} (I + dt/2 A)` with a cached factorization.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    dt: f64,
    lu: LU<crate::linalg::C64, nalgebra::Dyn, nalgebra::Dyn>,
    plus: CMatrix,
}

impl CrankNicolson {
    pub fn new(a: &CMatrix, dt: f64) -> Result<Self> {
        let n = a.nrows();
        let half = c64(dt / 2.0, 0.0);
        let minus = CMatrix::identity(n, n) - a * half;
        let lu = minus.lu();
        let u = lu.u();
        let top = u.diagonal().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let bottom = u.diagonal().iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
        if n > 0 && !(bottom > 1e-14 * top) {
            return Err(Error::SingularSolve { dt });
        }
        Ok(CrankNicolson {
            dt,
            lu,
            plus: CMatrix::identity(n, n) + a * half,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, c: &CVector) -> Result<CVector> {
        self.lu.solve(&(&self.plus * c)).ok_or(Error::SingularSolve { dt: self.dt })
    }
}

/// `exp(dt A)` precomputed once.
#[derive(Debug, Clone)]
pub struct ExponentialStepper {
    dt: f64,
    propagator: CMatrix,
}

impl ExponentialStepper {
    pub fn new(a: &CMatrix, dt: f64) -> Result<Self> {
        if a.nrows() > EXPM_CAP {
            return Err(Error::DimensionCap {
                dim: a.nrows(),
                cap: EXPM_CAP,
            });
        }
        Ok(ExponentialStepper {
            dt,
            propagator: expm(&(a * c64(dt, 0.0))),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn propagator(&self) -> &CMatrix {
        &self.propagator
    }

    pub fn step(&self, c: &CVector) -> CVector {
        &self.propagator * c
    }
}

#[derive(Debug, Clone)]
pub enum Stepper {
    CrankNicolson(CrankNicolson),
    Exponential(ExponentialStepper),
}

impl Stepper {
    pub fn new(a: &CMatrix, dt: f64, scheme: Integrator) -> Result<Self> {
        Ok(match scheme {
            Integrator::CrankNicolson => Stepper::CrankNicolson(CrankNicolson::new(a, dt)?),
            Integrator::MatrixExponential => Stepper::Exponential(ExponentialStepper::new(a, dt)?),
        })
    }

    pub fn step(&self, c: &CVector) -> Result<CVector> {
        match self {
            Stepper::CrankNicolson(s) => s.step(c),
            Stepper::Exponential(s) => Ok(s.step(c)),
        }
    }
}

/// One Crank–Nicolson step. Prefer [`CrankNicolson`] when stepping
/// repeatedly.
pub fn step_cn(sys: &DiscreteSystem, state: &CVector, dt: f64) -> Result<CVector> {
    check_state(sys, state)?;
    CrankNicolson::new(sys.generator(), dt)?.step(state)
}

/// One exact step `exp(dt A) c`.
pub fn step_expm(sys: &DiscreteSystem, state: &CVector, dt: f64) -> Result<CVector> {
    check_state(sys, state)?;
    Ok(ExponentialStepper::new(sys.generator(), dt)?.step(state))
}

fn check_state(sys: &DiscreteSystem, state: &CVector) -> Result<()> {
    if state.len() != sys.dimension() {
        return Err(Error::DimensionMismatch {
            expected: format!("reduced state of length {}", sys.dimension()),
            found: format!("{}", state.len()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub config: EvolutionConfig,
    pub graph_fingerprint: String,
    pub bc_fingerprint: String,
    /// Relative mass-norm distance between the supplied nodal data and its
    /// projection onto the constrained space.
    pub projection_residual: f64,
    pub max_constraint_residual: f64,
    pub times: Vec<f64>,
    pub norm2: Vec<f64>,
    pub dissipation_predicted: Vec<f64>,
    pub dissipation_measured: Vec<f64>,
    /// `edge:k` per right-trace position.
    pub trace_labels: Vec<String>,
    /// Per sample, `[re, im]` per right-trace position.
    pub traces: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub final_state: CVector,
}

/// Projects nodal data and runs.
pub fn run_nodal(sys: &DiscreteSystem, bc: &BoundaryOperator, u0: &CVector, cfg: &EvolutionConfig) -> Result<RunOutput> {
    let p = sys.project(u0)?;
    let mut out = run(sys, bc, &p.state, cfg)?;
    out.record.projection_residual = p.residual;
    Ok(out)
}

/// Steps the reduced state `c0` to `t_end`.
pub fn run(sys: &DiscreteSystem, bc: &BoundaryOperator, c0: &CVector, cfg: &EvolutionConfig) -> Result<RunOutput> {
    check_state(sys, c0)?;
    let steps = cfg.steps()?;
    let stepper = Stepper::new(sys.generator(), cfg.dt, cfg.scheme)?;
    let layout = sys.graph().trace_layout(Side::Right);

    let mut record = RunRecord {
        format: RECORD_FORMAT.to_string(),
        config: cfg.clone(),
        graph_fingerprint: graph_fingerprint(sys.graph()),
        bc_fingerprint: bc_fingerprint(bc),
        projection_residual: 0.0,
        max_constraint_residual: 0.0,
        times: Vec::new(),
        norm2: Vec::new(),
        dissipation_predicted: Vec::new(),
        dissipation_measured: Vec::new(),
        trace_labels: if cfg.record_traces {
            layout.entries.iter().map(|(e, k)| format!("{e}:{k}")).collect()
        } else {
            Vec::new()
        },
        traces: Vec::new(),
    };

    let mut c = c0.clone();
    let sample = |record: &mut RunRecord, step: usize, c: &CVector| {
        record.times.push(step as f64 * cfg.dt);
        record.norm2.push(c.norm_squared());
        record.dissipation_predicted.push(sys.predicted_dissipation(c));
        let u = sys.reconstruct(c);
        record.max_constraint_residual = record.max_constraint_residual.max(sys.constraint_residual(&u));
        if cfg.record_traces {
            let x = sys.t_r() * u;
            record.traces.push(x.iter().map(|z| [z.re, z.im]).collect());
        }
    };
    sample(&mut record, 0, &c);
    for step in 1..=steps {
        c = stepper.step(&c)?;
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        if step % cfg.sample_every == 0 || step == steps {
            sample(&mut record, step, &c);
        }
    }
    record.dissipation_measured = finite_difference(&record.times, &record.norm2);
    Ok(RunOutput { record, final_state: c })
}

/// Central differences inside, one-sided at the ends. Integrating the result
/// with the trapezoid rule on uniform samples telescopes to the end-to-end
/// change.
fn finite_difference(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[hi] - y[lo]) / (t[hi] - t[lo])
        })
        .collect()
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| (t[1] - t[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `||c(T)|| / ||c(0)||`; 1 for a zero initial state that stays zero.
    pub fn final_norm_ratio(&self) -> f64 {
        let (first, last) = (self.norm2[0], *self.norm2.last().unwrap());
        if first == 0.0 {
            return if last == 0.0 { 1.0 } else { f64::INFINITY };
        }
        (last / first).sqrt()
    }

    /// `max_t | ||c(t)|| - ||c(0)|| | / ||c(0)||`.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norm2[0].sqrt();
        if n0 == 0.0 {
            return 0.0;
        }
        self.norm2.iter().map(|v| (v.sqrt() - n0).abs() / n0).fold(0.0, f64::max)
    }

    /// Largest step-to-step increase of `norm2`, relative to `norm2(0)`.
    pub fn max_norm2_increase(&self) -> f64 {
        let n0 = self.norm2[0];
        if n0 == 0.0 {
            return 0.0;
        }
        self.norm2.windows(2).map(|w| (w[1] - w[0]) / n0).fold(0.0, f64::max)
    }

    /// Time averages of the predicted and measured rates (trapezoid).
    pub fn mean_dissipation(&self) -> (f64, f64) {
        let span = self.times.last().copied().unwrap_or(0.0) - self.times[0];
        if span <= 0.0 {
            return (self.dissipation_predicted[0], self.dissipation_measured[0]);
        }
        (
            trapezoid(&self.times, &self.dissipation_predicted) / span,
            trapezoid(&self.times, &self.dissipation_measured) / span,
        )
    }

    /// `|mean predicted - mean measured| / |mean predicted|`, or the absolute
    /// gap when nothing is predicted.
    pub fn dissipation_agreement(&self) -> f64 {
        let (p, m) = self.mean_dissipation();
        if p.abs() > 0.0 {
            (p - m).abs() / p.abs()
        } else {
            (p - m).abs()
        }
    }

    /// Mismatch between the integrated measured rate and the total change of
    /// `norm2`, relative to `max(norm2)`.
    pub fn energy_balance_error(&self) -> f64 {
        let change = self.norm2.last().unwrap() - self.norm2[0];
        let integral = trapezoid(&self.times, &self.dissipation_measured);
        let scale = self.norm2.iter().fold(0.0f64, |m, v| m.max(*v));
        if scale == 0.0 {
            0.0
        } else {
            (integral - change).abs() / scale
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {}", self.format).unwrap();
        let mut header = vec!["t", "norm2", "dissipation_predicted", "dissipation_measured"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for label in &self.trace_labels {
            header.push(format!("{label}:re"));
            header.push(format!("{label}:im"));
        }
        writeln!(out, "{}", header.join(",")).unwrap();
        for i in 0..self.len() {
            let mut row = vec![
                self.times[i].to_string(),
                self.norm2[i].to_string(),
                self.dissipation_predicted[i].to_string(),
                self.dissipation_measured[i].to_string(),
            ];
            if let Some(tr) = self.traces.get(i) {
                for [re, im] in tr {
                    row.push(re.to_string());
                    row.push(im.to_string());
                }
            }
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn graph_fingerprint(g: &MetricGraph) -> String {
    sha256_hex(serde_json::to_string(&g.to_spec()).expect("graph serializes").as_bytes())
}

pub fn bc_fingerprint(bc: &BoundaryOperator) -> String {
    sha256_hex(bc.to_json().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::builtin;
    use crate::discretization::{build_fourier_loop, build_generator};
    use crate::linalg::{max_abs, C64};
    use std::f64::consts::PI;

    fn fourier_loop() -> (DiscreteSystem, BoundaryOperator) {
        let (g, bc) = builtin("loop_periodic").unwrap();
        (build_fourier_loop(&g, &bc, 32).unwrap(), bc)
    }

    #[test]
    fn cn_on_skew_preserves_norm() {
        let (sys, _) = fourier_loop();
        let cn = CrankNicolson::new(sys.generator(), 1e-3).unwrap();
        let mut c = CVector::from_fn(sys.dimension(), |i, _| c64((i as f64).cos(), 0.1 * i as f64));
        let n0 = c.norm();
        for _ in 0..1000 {
            let next = cn.step(&c).unwrap();
            assert!((next.norm() - c.norm()).abs() <= 1e-12 * n0);
            c = next;
        }
        assert!((c.norm() - n0).abs() <= 1e-12 * n0 * 10.0);
    }

    #[test]
    fn zero_generator_is_identity() {
        let a = CMatrix::zeros(4, 4);
        let c = CVector::from_element(4, c64(1.0, -2.0));
        assert_eq!(CrankNicolson::new(&a, 0.1).unwrap().step(&c).unwrap(), c);
        assert_eq!(ExponentialStepper::new(&a, 0.1).unwrap().step(&c), c);
    }

    #[test]
    fn dissipative_cn_contracts() {
        let (g, bc) = builtin("loop_diag(1, 0)").unwrap();
        let sys = build_generator(&g, &bc, 24).unwrap();
        let cn = CrankNicolson::new(sys.generator(), 1e-3).unwrap();
        let mut c = CVector::from_fn(sys.dimension(), |i, _| c64(1.0, i as f64));
        for _ in 0..50 {
            let next = cn.step(&c).unwrap();
            assert!(next.norm() <= c.norm() * (1.0 + 1e-12));
            c = next;
        }
    }

    #[test]
    fn expm_semigroup_and_identity() {
        let (sys, _) = fourier_loop();
        let c = CVector::from_fn(sys.dimension(), |i, _| c64(1.0 / (1.0 + i as f64), 0.0));
        let one = step_expm(&sys, &c, 2e-3).unwrap();
        let two = step_expm(&sys, &step_expm(&sys, &c, 1e-3).unwrap(), 1e-3).unwrap();
        assert!(max_abs(&(one - two)) < 1e-11);
        assert!(max_abs(&(step_expm(&sys, &c, 0.0).unwrap() - &c)) == 0.0);
    }

    #[test]
    fn cn_local_error_is_third_order() {
        let (g, bc) = builtin("loop_periodic").unwrap();
        let sys = build_generator(&g, &bc, 16).unwrap();
        let u = sys.sample(|_, x| C64::from_polar(1.0, 2.0 * PI * x));
        let c = sys.project(&u).unwrap().state;
        let gap = |dt: f64| (step_cn(&sys, &c, dt).unwrap() - step_expm(&sys, &c, dt).unwrap()).norm();
        let ratio = gap(2e-4) / gap(1e-4);
        assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn plane_wave_follows_dispersion() {
        let (sys, bc) = fourier_loop();
        let kappa = 2.0 * PI;
        let u0 = sys.sample(|_, x| C64::from_polar(1.0, kappa * x));
        let cfg = EvolutionConfig::new(1e-3, 0.05, Integrator::MatrixExponential);
        let out = run_nodal(&sys, &bc, &u0, &cfg).unwrap();
        let u = sys.reconstruct(&out.final_state);
        let exact = sys.sample(|_, x| C64::from_polar(1.0, kappa * x - kappa.powi(3) * 0.05));
        assert!(max_abs(&(u - exact)) < 1e-9);
        let dev = (out.record.final_norm_ratio() - 1.0).abs();
        assert!(dev < 1e-12, "{dev:e}");
        assert!(out.record.projection_residual < 1e-12);
    }

    #[test]
    fn zero_state_and_zero_time() {
        let (sys, bc) = fourier_loop();
        let zero = CVector::zeros(sys.dimension());
        let out = run(&sys, &bc, &zero, &EvolutionConfig::new(1e-3, 0.01, Integrator::CrankNicolson)).unwrap();
        assert!(out.final_state.iter().all(|z| *z == c64(0.0, 0.0)));
        let c = CVector::from_element(sys.dimension(), c64(1.0, 0.0));
        let out = run(&sys, &bc, &c, &EvolutionConfig::new(1e-3, 0.0, Integrator::CrankNicolson)).unwrap();
        assert_eq!(out.record.len(), 1);
        assert_eq!(out.record.final_norm_ratio(), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::new(0.0, 1.0, Integrator::CrankNicolson).steps().is_err());
        assert!(EvolutionConfig::new(0.3, 1.0, Integrator::CrankNicolson).steps().is_err());
        assert_eq!(EvolutionConfig::new(1e-4, 0.1, Integrator::CrankNicolson).steps().unwrap(), 1000);
    }

    #[test]
    fn record_bookkeeping() {
        let (g, bc) = builtin("loop_diag(1, 0.5)").unwrap();
        let sys = build_generator(&g, &bc, 24).unwrap();
        let u0 = sys.sample(|_, x| c64((-((x - 0.5) / 0.1).powi(2)).exp(), 0.0));
        let mut cfg = EvolutionConfig::new(1e-4, 0.01, Integrator::CrankNicolson);
        cfg.sample_every = 10;
        let out = run_nodal(&sys, &bc, &u0, &cfg).unwrap();
        let r = &out.record;
        assert_eq!(r.len(), 11);
        assert_eq!(r.traces.len(), 11);
        assert_eq!(r.trace_labels, vec!["e1:0", "e1:1", "e1:2"]);
        assert!(r.energy_balance_error() < 1e-12);
        assert!(r.max_constraint_residual < 1e-9);
        assert!(r.projection_residual > 0.0);
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# airy-graph run record v1"));
        assert!(lines.next().unwrap().starts_with("t,norm2,dissipation_predicted,dissipation_measured,e1:0:re"));
        assert_eq!(RunRecord::from_json(&r.to_json()).unwrap(), *r);
    }

    #[test]
    fn expm_cap_is_enforced() {
        let a = CMatrix::zeros(EXPM_CAP + 1, EXPM_CAP + 1);
        assert!(matches!(ExponentialStepper::new(&a, 0.1), Err(Error::DimensionCap { .. })));
    }
}
