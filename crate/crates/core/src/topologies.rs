//! Finite-index gap functionals for the weak, strong, dual-strong and
//! strong-star operator topologies, and the canonical metric
//! `d(S, T) = sum_n 2^-n ||(T - S)^* e_n||` enclosed in a rigorous interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{OperatorModel, TailModel};
use crate::norms::operator_norm;

/// Slack allowed when checking `||T|| <= 1`.
pub const CONTRACTION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "WOT")]
    Wot,
    #[serde(rename = "SOT")]
    Sot,
    #[serde(rename = "SOT_adj")]
    SotAdj,
    #[serde(rename = "SOTSTAR")]
    SotStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub topology: Topology,
    pub index: usize,
    pub gap: f64,
    /// False for adjoint gaps off `l_2`, which no certificate consumes.
    pub certified: bool,
}

/// `max_{k,l <= m} |<e_k, (S - T) e_l>|`.
pub fn wot_gap(s: &OperatorModel, t: &OperatorModel, m: usize) -> Result<f64> {
    s.check_same_exponent(t)?;
    let mut gap = 0.0f64;
    for k in 0..=m {
        for l in 0..=m {
            gap = gap.max((s.entry(k, l) - t.entry(k, l)).abs());
        }
    }
    Ok(gap)
}

/// `max_{k <= r} ||(S - T) e_k||_p`.
pub fn sot_gap(s: &OperatorModel, t: &OperatorModel, r: usize) -> Result<f64> {
    s.check_same_exponent(t)?;
    Ok((0..=r)
        .map(|k| s.column(k).sub(&t.column(k)).p_norm_unchecked(s.p()))
        .fold(0.0, f64::max))
}

/// `max_{k <= r} ||(S - T)^* e_k||_p`, adjoint columns measured in the same
/// `l_p` norm.
pub fn adj_gap(s: &OperatorModel, t: &OperatorModel, r: usize) -> Result<f64> {
    s.check_same_exponent(t)?;
    Ok((0..=r).map(|k| row_gap(s, t, k)).fold(0.0, f64::max))
}

/// `||(S - T)^* e_k||_p`.
pub fn row_gap(s: &OperatorModel, t: &OperatorModel, k: usize) -> f64 {
    s.row(k).sub(&t.row(k)).p_norm_unchecked(s.p())
}

pub fn gap_profile(
    topology: Topology,
    s: &OperatorModel,
    t: &OperatorModel,
    index: usize,
) -> Result<GapProfile> {
    let gap = match topology {
        Topology::Wot => wot_gap(s, t, index)?,
        Topology::Sot => sot_gap(s, t, index)?,
        Topology::SotAdj => adj_gap(s, t, index)?,
        Topology::SotStar => sot_gap(s, t, index)?.max(adj_gap(s, t, index)?),
    };
    let certified = s.p() == 2.0 || topology == Topology::Wot || topology == Topology::Sot;
    Ok(GapProfile {
        topology,
        index,
        gap,
        certified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricInterval {
    pub lower: f64,
    pub upper: f64,
    pub cutoff: usize,
}

impl MetricInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub(crate) fn check_contraction(t: &OperatorModel) -> Result<f64> {
    let n = operator_norm(t)?.value;
    if n > 1.0 + CONTRACTION_SLACK {
        return Err(Error::precondition(format!(
            "operator norm {n} exceeds 1; not a contraction"
        )));
    }
    Ok(n)
}

/// `sum_{n >= from} 2^-n`.
fn dyadic_tail(from: usize) -> f64 {
    2f64.powi(1 - from as i32)
}

/// `sum_{n >= from} 2^-n c r^(n - from)` for a tail whose entry at `from`
/// is `1 - c`.
fn dyadic_geometric(c: f64, r: f64, from: usize) -> f64 {
    2f64.powi(-(from as i32)) * c / (1.0 - r / 2.0)
}

/// Upper bound (exact where a closed form exists) on
/// `sum_{n >= from} 2^-n |a_n - b_n|` for two tails re-based at `from`.
fn tail_contribution(a: &TailModel, b: &TailModel, from: usize) -> f64 {
    use TailModel::*;
    match (a, b) {
        (Zero, Zero) | (Identity, Identity) => 0.0,
        (Zero, Identity) | (Identity, Zero) => dyadic_tail(from),
        (Identity, GeometricDiagonal(g)) | (GeometricDiagonal(g), Identity) => {
            dyadic_geometric(g.c(), g.r(), from)
        }
        (Zero, GeometricDiagonal(g)) | (GeometricDiagonal(g), Zero) => {
            (dyadic_tail(from) - dyadic_geometric(g.c(), g.r(), from)).max(0.0)
        }
        (GeometricDiagonal(g), GeometricDiagonal(h)) => {
            if g == h {
                0.0
            } else {
                // |c r^i - c' r'^i| <= c r^i + c' r'^i, and entries lie in [0, 1].
                (dyadic_geometric(g.c(), g.r(), from) + dyadic_geometric(h.c(), h.r(), from))
                    .min(dyadic_tail(from))
            }
        }
    }
}

/// Interval enclosing `d(S, T)`: `lower` is the partial sum through
/// `cutoff`; `upper` adds exact rows up to the larger block, then an exact
/// or bounded contribution of the pure-tail rows.
pub fn canonical_metric(
    s: &OperatorModel,
    t: &OperatorModel,
    cutoff: usize,
) -> Result<MetricInterval> {
    s.check_same_exponent(t)?;
    if s.p() != 2.0 {
        return Err(Error::Unsupported(
            "the canonical metric is defined on l_2 only".into(),
        ));
    }
    check_contraction(s)?;
    check_contraction(t)?;
    Ok(metric_interval_unchecked(s, t, cutoff))
}

pub(crate) fn metric_interval_unchecked(
    s: &OperatorModel,
    t: &OperatorModel,
    cutoff: usize,
) -> MetricInterval {
    let dim = s.block_dim().max(t.block_dim());
    let weight = |n: usize| 2f64.powi(-(n as i32));
    let lower: f64 = (0..=cutoff).map(|n| weight(n) * row_gap(s, t, n)).sum();
    let exact_end = dim.max(cutoff + 1);
    let middle: f64 = (cutoff + 1..exact_end)
        .map(|n| weight(n) * row_gap(s, t, n))
        .sum();
    let sa = s.with_block_dim(exact_end);
    let ta = t.with_block_dim(exact_end);
    let tail = tail_contribution(sa.tail(), ta.tail(), exact_end);
    MetricInterval {
        lower,
        upper: lower + middle + tail,
        cutoff,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub step: usize,
    pub wot: f64,
    pub sot: f64,
    pub adj: f64,
    pub metric: Option<MetricInterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVerdict {
    /// Stays at or below the tolerance from `step` on.
    BelowTolerance { step: usize },
    /// Minimum over the last quartile of steps.
    BoundedBelow { beta: f64 },
}

impl TraceVerdict {
    fn of(steps: &[usize], values: &[f64], tol: f64) -> Self {
        let first_tail = values.iter().rposition(|&v| v > tol).map_or(0, |i| i + 1);
        if first_tail < values.len() {
            TraceVerdict::BelowTolerance {
                step: steps[first_tail],
            }
        } else {
            let q = values.len() - (values.len() / 4).max(1);
            TraceVerdict::BoundedBelow {
                beta: values[q..].iter().copied().fold(f64::INFINITY, f64::min),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergeParams {
    /// First sequence index.
    pub start: usize,
    pub steps: usize,
    pub m: usize,
    pub r: usize,
    pub cutoff: usize,
    pub tolerance: f64,
}

impl Default for ConvergeParams {
    fn default() -> Self {
        Self {
            start: 0,
            steps: 50,
            m: 3,
            r: 0,
            cutoff: 20,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdicts {
    pub wot: TraceVerdict,
    pub sot: TraceVerdict,
    pub adj: TraceVerdict,
    pub metric_upper: Option<TraceVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub params: ConvergeParams,
    pub rows: Vec<ConvergenceRow>,
    pub verdicts: ConvergenceVerdicts,
}

pub const CONVERGENCE_CSV_HEADER: [&str; 6] = ["step", "wot", "sot", "adj", "metric_lo", "metric_hi"];

/// Traces `T_n -> limit` at fixed indices. Metric columns are filled on
/// `l_2` only.
pub fn converge_report<F>(
    sequence: F,
    limit: &OperatorModel,
    params: ConvergeParams,
) -> Result<ConvergenceReport>
where
    F: Fn(usize) -> Result<OperatorModel>,
{
    if params.steps == 0 {
        return Err(Error::precondition("at least one step is required"));
    }
    let with_metric = limit.p() == 2.0;
    if with_metric {
        check_contraction(limit)?;
    }
    let mut rows = Vec::with_capacity(params.steps);
    for step in params.start..params.start + params.steps {
        let tn = sequence(step)?;
        let metric = if with_metric {
            check_contraction(&tn)?;
            tn.check_same_exponent(limit)?;
            Some(metric_interval_unchecked(&tn, limit, params.cutoff))
        } else {
            None
        };
        rows.push(ConvergenceRow {
            step,
            wot: wot_gap(&tn, limit, params.m)?,
            sot: sot_gap(&tn, limit, params.r)?,
            adj: adj_gap(&tn, limit, params.r)?,
            metric,
        });
    }
    let steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
    let col = |f: &dyn Fn(&ConvergenceRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let tol = params.tolerance;
    let verdicts = ConvergenceVerdicts {
        wot: TraceVerdict::of(&steps, &col(&|r| r.wot), tol),
        sot: TraceVerdict::of(&steps, &col(&|r| r.sot), tol),
        adj: TraceVerdict::of(&steps, &col(&|r| r.adj), tol),
        metric_upper: with_metric
            .then(|| TraceVerdict::of(&steps, &col(&|r| r.metric.unwrap().upper), tol)),
    };
    Ok(ConvergenceReport {
        params,
        rows,
        verdicts,
    })
}
