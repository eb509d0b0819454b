//! Piecewise-linear convex link cost and the network-wide objective
//! `sum_intra phi_l + alpha * sum_inter phi_l`.
//!
//! `phi_l` is expressed in load units: on the utilization interval
//! `[t_i, t_{i+1})` every additional Mbps costs `slope_i`, so the breakpoints
//! in load are `t_i * capacity`.

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::igp::LoadMap;
use crate::model::{ArcKind, Graph};
use crate::quantity::{format_quantity, int, parse_quantity, ratio, Scalar, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostParams {
    /// (utilization threshold, slope) pairs; first threshold 0.
    pub breakpoints: Vec<(Q, Q)>,
    pub alpha: Q,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams { breakpoints: default_breakpoints(), alpha: Q::zero() }
    }
}

/// Slopes 1, 3, 10, 70, 500, 5000 at utilizations 0, 1/3, 2/3, 9/10, 1, 11/10.
pub fn default_breakpoints() -> Vec<(Q, Q)> {
    vec![
        (int(0), int(1)),
        (ratio(1, 3), int(3)),
        (ratio(2, 3), int(10)),
        (ratio(9, 10), int(70)),
        (int(1), int(500)),
        (ratio(11, 10), int(5000)),
    ]
}

impl CostParams {
    pub fn new(breakpoints: Vec<(Q, Q)>, alpha: Q) -> Result<Self> {
        let p = CostParams { breakpoints, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn with_alpha(mut self, alpha: Q) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bp = &self.breakpoints;
        if bp.is_empty() || !bp[0].0.is_zero() {
            return Err(Error::Invalid("cost breakpoints must start at utilization 0".into()));
        }
        if bp.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(Error::Invalid("cost thresholds and slopes must be strictly increasing".into()));
        }
        if !bp[0].1.is_positive() {
            return Err(Error::Invalid("first cost slope must be positive".into()));
        }
        if self.alpha.is_negative() {
            return Err(Error::Invalid("alpha must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses `t0:s0,t1:s1,...`.
    pub fn parse_breakpoints(text: &str) -> Result<Vec<(Q, Q)>> {
        text.split(',')
            .map(|item| {
                let (t, s) = item
                    .split_once(':')
                    .ok_or_else(|| Error::Invalid(format!("breakpoint `{item}` is not `threshold:slope`")))?;
                let t = parse_quantity(t).ok_or_else(|| Error::Invalid(format!("bad threshold `{t}`")))?;
                let s = parse_quantity(s).ok_or_else(|| Error::Invalid(format!("bad slope `{s}`")))?;
                Ok((t, s))
            })
            .collect()
    }

    pub fn breakpoints_text(&self) -> String {
        self.breakpoints
            .iter()
            .map(|(t, s)| format!("{}:{}", format_quantity(t), format_quantity(s)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn curve<S: Scalar>(&self) -> CostCurve<S> {
        CostCurve {
            thresholds: self.breakpoints.iter().map(|(t, _)| S::from_q(t)).collect(),
            slopes: self.breakpoints.iter().map(|(_, s)| S::from_q(s)).collect(),
            alpha: S::from_q(&self.alpha),
        }
    }
}

/// [`CostParams`] converted to the arithmetic of one evaluation path.
#[derive(Debug, Clone)]
pub struct CostCurve<S> {
    thresholds: Vec<S>,
    slopes: Vec<S>,
    alpha: S,
}

pub fn phi_link<S: Scalar>(load: &S, capacity: &S, curve: &CostCurve<S>) -> S {
    let mut cost = S::zero();
    let n = curve.thresholds.len();
    for i in 0..n {
        let lo = curve.thresholds[i].clone() * capacity.clone();
        if *load <= lo {
            break;
        }
        let top = if i + 1 < n {
            let hi = curve.thresholds[i + 1].clone() * capacity.clone();
            if *load < hi {
                load.clone()
            } else {
                hi
            }
        } else {
            load.clone()
        };
        cost += curve.slopes[i].clone() * (top - lo);
    }
    cost
}

/// Sum over intra arcs plus alpha times the sum over inter arcs.
pub fn phi_total<S: Scalar>(loads: &LoadMap<S>, g: &Graph, curve: &CostCurve<S>) -> S {
    let mut intra = S::zero();
    let mut inter = S::zero();
    for (id, arc) in g.arcs() {
        let Some(c) = arc.capacity.finite() else { continue };
        match arc.kind {
            ArcKind::Intra => intra += phi_link(loads.get(id), &S::from_q(c), curve),
            ArcKind::Inter if !curve.alpha.is_zero() => inter += phi_link(loads.get(id), &S::from_q(c), curve),
            _ => {}
        }
    }
    intra + curve.alpha.clone() * inter
}
