//! Initial data for simulations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use crate::discretization::DiscreteSystem;
use crate::error::{Error, Result};
use crate::graph::Side;
use crate::krein::TraceVector;
use crate::linalg::{c64, CVector, C64};
use crate::verification::lift_traces;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `exp(2 pi i k (x - a) / len)` on every edge.
    PlaneWave { k: f64 },
    /// `exp(-((x - c) / w)^2)` with `c` and `w` given as fractions of each
    /// edge's length.
    Gaussian { center: f64, width: f64 },
    /// Lift of the same triple `(t0, t1, t2)` on every edge of one side.
    Lifted { side: Side, traces: [f64; 3] },
    /// Nodal values per edge id, `[re, im]` pairs in node order.
    Nodal(BTreeMap<String, Vec<[f64; 2]>>),
    Zero,
}

impl FromStr for InitialCondition {
    type Err = Error;

    /// `plane_wave(k)`, `gaussian(center, width)`, `lifted(left|right, t0, t1, t2)`
    /// or `zero`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse initial condition `{text}`"));
        let (name, args) = match text.find('(') {
            Some(i) if text.ends_with(')') => (&text[..i], &text[i + 1..text.len() - 1]),
            Some(_) => return Err(bad()),
            None => (text, ""),
        };
        let args: Vec<&str> = args.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match (name, args.as_slice()) {
            ("plane_wave", [k]) => Ok(InitialCondition::PlaneWave { k: num(k)? }),
            ("gaussian", [c, w]) => {
                let width = num(w)?;
                if !(width > 0.0) {
                    return Err(Error::InvalidParameter(format!("gaussian width must be positive, got {width}")));
                }
                Ok(InitialCondition::Gaussian { center: num(c)?, width })
            }
            ("lifted", [side, t0, t1, t2]) => {
                let side = match *side {
                    "left" => Side::Left,
                    "right" => Side::Right,
                    _ => return Err(bad()),
                };
                Ok(InitialCondition::Lifted {
                    side,
                    traces: [num(t0)?, num(t1)?, num(t2)?],
                })
            }
            ("zero", []) => Ok(InitialCondition::Zero),
            _ => Err(bad()),
        }
    }
}

impl InitialCondition {
    /// Reads `{"edge id": [[re, im], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(InitialCondition::Nodal(serde_json::from_str(text)?))
    }

    /// Nodal samples on the grid of `sys`.
    pub fn nodal(&self, sys: &DiscreteSystem) -> Result<CVector> {
        let g = sys.graph();
        Ok(match self {
            InitialCondition::PlaneWave { k } => sys.sample(|e, x| {
                let edge = &g.edges()[e];
                C64::from_polar(1.0, 2.0 * PI * k * (x - edge.a) / edge.length())
            }),
            InitialCondition::Gaussian { center, width } => sys.sample(|e, x| {
                let edge = &g.edges()[e];
                let len = edge.length();
                let z = (x - (edge.a + center * len)) / (width * len);
                c64((-z * z).exp(), 0.0)
            }),
            InitialCondition::Lifted { side, traces } => {
                let n = g.side_count(*side);
                let values = CVector::from_fn(3 * n, |i, _| c64(traces[i % 3], 0.0));
                let u = lift_traces(g, &TraceVector::new(*side, values))?;
                sys.sample(|e, x| u.eval(e, x, 0))
            }
            InitialCondition::Nodal(values) => {
                for id in values.keys() {
                    if g.edge_index(id).is_none() {
                        return Err(Error::UnknownEdge(id.clone()));
                    }
                }
                let mut u = CVector::zeros(sys.nodal_dimension());
                for blk in sys.blocks() {
                    let id = &g.edges()[blk.edge].id;
                    let given = values.get(id).ok_or_else(|| {
                        Error::InvalidParameter(format!("initial data missing for edge `{id}`"))
                    })?;
                    if given.len() != blk.len() {
                        return Err(Error::DimensionMismatch {
                            expected: format!("{} values on edge `{id}`", blk.len()),
                            found: format!("{}", given.len()),
                        });
                    }
                    for (j, [re, im]) in given.iter().enumerate() {
                        u[blk.offset + j] = c64(*re, *im);
                    }
                }
                u
            }
            InitialCondition::Zero => CVector::zeros(sys.nodal_dimension()),
        })
    }
}
