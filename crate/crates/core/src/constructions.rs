//! Operator constructions: norming-vector extensions, finite representatives
//! inside strong-star neighbourhoods, density embeddings with identity tails,
//! and the counterexample sequences.

use serde::{Deserialize, Serialize};

use crate::certificates::FamilyMember;
use crate::error::{Error, Result};
use crate::linalg::{CoordVector, GeometricTail, OperatorModel, TailModel};
use crate::matrix::Matrix;
use crate::norms::{block_norm, norming_vector, operator_norm, NormingCertificate};
use crate::topologies::{adj_gap, check_contraction, sot_gap};

/// Acceptance window for `||B|| = 1` during bisection.
pub const BISECTION_TOLERANCE: f64 = 1e-10;
pub const BISECTION_BUDGET: usize = 200;
/// Below this the norm window of the bisection swamps the requested accuracy.
pub const MIN_CONSTRAINT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionVariant {
    /// Shrink `A`, couple to a mirror block, raise the coupling to norm 1.
    Standard,
    /// `||A||` close to 1: fixed small coupling, rescale `A` itself, which
    /// also gives `||B - A|| < eps`.
    CloseToOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub b: OperatorModel,
    pub norming: NormingCertificate,
    pub variant: ExtensionVariant,
    /// `||B P_N - A||` (exact for `p = 2`, the norm of the entrywise
    /// modulus otherwise).
    pub head_gap: f64,
    /// `||B - A||` with `A` padded by zeros; computed for the close variant.
    pub full_gap: Option<f64>,
}

/// Norm of a signed matrix: exact on `l_2`, `|| |M| ||_p` otherwise.
fn signed_norm(m: &Matrix, p: f64) -> Result<f64> {
    if p == 2.0 {
        Ok(block_norm(m, 2.0)?.value)
    } else {
        Ok(block_norm(&m.map(f64::abs), p)?.value)
    }
}

fn require_zero_tail(a: &OperatorModel, what: &str) -> Result<()> {
    if *a.tail() == TailModel::Zero {
        Ok(())
    } else {
        Err(Error::precondition(format!("{what} needs a zero-tail operator")))
    }
}

/// Assembles `[[top_left, c E], [c g E, c E]]` with `E = ones / n`.
fn assemble(top_left: &Matrix, c: f64, g: f64) -> Matrix {
    let n = top_left.rows();
    let e = 1.0 / n as f64;
    Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => top_left[(i, j)],
        (true, false) => c * e,
        (false, true) => c * g * e,
        (false, false) => c * e,
    })
}

/// Smallest parameter in `[lo, hi]` with `f(x) >= 1 - tol`, given
/// `f(lo) < 1 <= f(hi)` and `f` nondecreasing.
fn bisect_to_unit(lo: f64, hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..BISECTION_BUDGET {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v - 1.0).abs() <= BISECTION_TOLERANCE {
            return Ok(mid);
        }
        if v < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = f(hi)?;
    if (v - 1.0).abs() <= BISECTION_TOLERANCE {
        Ok(hi)
    } else {
        Err(Error::Construction(format!(
            "bisection budget exhausted with norm {v}"
        )))
    }
}

/// Extends a zero-tail positive contraction `A` on `E_N` to a norm-one `B` on
/// `E_{2N+1}` whose norming vector `u` and image `Bu` both have full support,
/// with `||B P_N - A|| < eps`. When `||A|| >= 1 - eps/4`, also
/// `||B - A|| < eps`.
pub fn extend_with_full_norming(a: &OperatorModel, eps: f64) -> Result<Extension> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    require_zero_tail(a, "extension")?;
    let p = a.p();
    let norm_a = check_contraction(a)?;
    let n = a.block_dim();
    let gamma = eps / 4.0;
    let norm_of = |m: &Matrix| -> Result<f64> { Ok(block_norm(m, p)?.value) };

    let (raw, variant) = if norm_a >= 1.0 - eps / 4.0 {
        let c = eps / 8.0;
        let lambda = bisect_to_unit(0.0, 1.0 / norm_a, |l| {
            norm_of(&assemble(&a.block().scaled(l), c, gamma))
        })?;
        (assemble(&a.block().scaled(lambda), c, gamma), ExtensionVariant::CloseToOne)
    } else {
        let shrunk = a.block().scaled(1.0 - eps / 4.0);
        let s = bisect_to_unit(0.0, 1.0, |s| norm_of(&assemble(&shrunk, s, gamma)))?;
        (assemble(&shrunk, s, gamma), ExtensionVariant::Standard)
    };
    let raw_norm = norm_of(&raw)?;
    let b = OperatorModel::finite(p, raw.scaled(1.0 / raw_norm))?;

    let norming = norming_vector(&b)?;
    let bu = b.apply(&norming.u);
    let full = |v: &CoordVector| (0..2 * n).all(|i| v.get(i) > 0.0);
    if !full(&norming.u) || !full(&bu) {
        return Err(Error::Construction(
            "norming vector or its image lacks full support".into(),
        ));
    }
    let norm_b = operator_norm(&b)?.value;
    if (norm_b - 1.0).abs() > BISECTION_TOLERANCE {
        return Err(Error::Construction(format!("extension has norm {norm_b}")));
    }
    let padded_a = a.block().leading(2 * n);
    let head = Matrix::from_fn(2 * n, 2 * n, |i, j| {
        if j < n {
            b.block()[(i, j)] - padded_a[(i, j)]
        } else {
            0.0
        }
    });
    let head_gap = signed_norm(&head, p)?;
    if head_gap >= eps {
        return Err(Error::Construction(format!(
            "head gap {head_gap} is not below {eps}"
        )));
    }
    let full_gap = match variant {
        ExtensionVariant::CloseToOne => {
            let g = signed_norm(&b.block().sub(&padded_a), p)?;
            if g >= eps {
                return Err(Error::Construction(format!(
                    "close variant gap {g} is not below {eps}"
                )));
            }
            Some(g)
        }
        ExtensionVariant::Standard => None,
    };
    Ok(Extension {
        b,
        norming,
        variant,
        head_gap,
        full_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    /// `B` acts on `E_M`.
    pub m: usize,
    pub b: OperatorModel,
    pub norming: NormingCertificate,
    pub sot_gap: f64,
    pub adj_gap: f64,
}

/// Finds `M >= n0` and a norm-one `B` on `E_M` with a norming vector whose
/// image has full support, inside `{T : sot_gap(T, center, r) < eps_c,
/// adj_gap(T, center, r) < eps_c}`.
///
/// The center is truncated to a corner containing every row and column that
/// the gaps at `r` see (so both gaps stay exactly zero), topped up with a
/// disjoint norm-raising block on fresh coordinates, and finally extended
/// with the close variant of [`extend_with_full_norming`].
pub fn locate_norming_representative(
    center: &OperatorModel,
    r: usize,
    eps_c: f64,
    n0: usize,
) -> Result<Representative> {
    if !(eps_c.is_finite() && eps_c >= MIN_CONSTRAINT_EPSILON) {
        return Err(Error::precondition(format!(
            "constraint radius {eps_c} below the numerical floor {MIN_CONSTRAINT_EPSILON}"
        )));
    }
    if !center.is_positive() {
        return Err(Error::precondition("center is not positive"));
    }
    check_contraction(center)?;
    let eps = eps_c.min(0.99);
    let n = n0.max(r).max(center.block_dim() - 1);
    let truncated = center.corner(n);
    let head_norm = block_norm(&truncated, center.p())?.value;
    let block = if head_norm < 1.0 - eps / 4.0 {
        let eta = 1.0 - eps / 8.0;
        let mut bumped = truncated.leading(n + 2);
        bumped[(n + 1, n + 1)] = eta;
        bumped
    } else {
        truncated
    };
    let a = OperatorModel::finite(center.p(), block)?;
    let ext = extend_with_full_norming(&a, eps)?;
    let sg = sot_gap(&ext.b, center, r)?;
    let ag = adj_gap(&ext.b, center, r)?;
    if sg >= eps_c || ag >= eps_c {
        return Err(Error::Construction(format!(
            "representative left the neighbourhood (gaps {sg}, {ag})"
        )));
    }
    Ok(Representative {
        m: ext.b.block_dim() - 1,
        b: ext.b,
        norming: ext.norming,
        sot_gap: sg,
        adj_gap: ag,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEmbedding {
    pub t: OperatorModel,
    pub extension: Extension,
    /// Norming family of `T^*` covering every index.
    pub class_m: Vec<FamilyMember>,
    /// Norming family of `T` covering every index.
    pub class_m_prime: Vec<FamilyMember>,
    /// `max_{k <= N} ||(T - A) e_k||`.
    pub column_gap: f64,
}

/// `T = B P_{2N+1} + Q_{2N+1}` with `B` from [`extend_with_full_norming`].
pub fn density_embed(a: &OperatorModel, eps: f64) -> Result<DensityEmbedding> {
    require_zero_tail(a, "density embedding")?;
    let norm_a = operator_norm(a)?.value;
    if norm_a >= 1.0 {
        return Err(Error::precondition(format!(
            "density embedding needs ||A|| < 1, got {norm_a}"
        )));
    }
    let extension = extend_with_full_norming(a, eps)?;
    let dim = extension.b.block_dim();
    let t = OperatorModel::new(a.p(), extension.b.block().clone(), TailModel::Identity)?;
    let adjoint_norming = norming_vector(&extension.b.adjoint())?;
    if !(0..dim).all(|i| adjoint_norming.u.get(i) > 0.0) {
        return Err(Error::Construction(
            "adjoint norming vector lacks full support".into(),
        ));
    }
    let tail = FamilyMember::IdentityTail { from: dim };
    let column_gap = crate::topologies::sot_gap(&t, a, a.block_dim() - 1)?;
    Ok(DensityEmbedding {
        class_m: vec![FamilyMember::Vector(adjoint_norming.u), tail.clone()],
        class_m_prime: vec![FamilyMember::Vector(extension.norming.u.clone()), tail],
        t,
        extension,
        column_gap,
    })
}

/// `eps_N = 1 / (N + shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSchedule {
    pub shift: f64,
}

impl HarmonicSchedule {
    pub fn at(&self, n: usize) -> f64 {
        1.0 / (n as f64 + self.shift)
    }
}

/// Sequences used as counterexamples, materialized one index at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Sequence {
    /// `T_n = T P_n + delta e_0 <e_{n+1}, .>`.
    #[serde(rename = "prop_norm_deficit")]
    NormDeficit { t: OperatorModel, delta: f64 },
    /// `T_n = T P_n + e_l <e_{n+1}, .>` for a zero row `l`.
    #[serde(rename = "prop_zero_row")]
    ZeroRow { t: OperatorModel, l: usize },
    /// `T_N = (1 - eps_N) P_N A P_N + geometric tail on F_N`.
    #[serde(rename = "prop_non_attaining")]
    NonAttaining {
        a: OperatorModel,
        schedule: HarmonicSchedule,
        tail: GeometricTail,
    },
}

impl Sequence {
    pub fn name(&self) -> &'static str {
        match self {
            Sequence::NormDeficit { .. } => "prop_norm_deficit",
            Sequence::ZeroRow { .. } => "prop_zero_row",
            Sequence::NonAttaining { .. } => "prop_non_attaining",
        }
    }

    pub fn at(&self, n: usize) -> Result<OperatorModel> {
        match self {
            Sequence::NormDeficit { t, delta } => {
                let mut tn = t.times_head_projection(n).with_block_dim(t.block_dim().max(n + 2));
                let mut block = tn.block().clone();
                block[(0, n + 1)] += delta;
                tn = tn.with_block(block)?;
                Ok(tn)
            }
            Sequence::ZeroRow { t, l } => {
                let dim = t.block_dim().max(n + 2).max(l + 1);
                let tn = t.times_head_projection(n).with_block_dim(dim);
                let mut block = tn.block().clone();
                block[(*l, n + 1)] = 1.0;
                tn.with_block(block)
            }
            Sequence::NonAttaining { a, schedule, tail } => {
                let e = schedule.at(n);
                if !(e > 0.0 && e < 1.0) {
                    return Err(Error::precondition(format!(
                        "schedule value {e} at {n} outside (0, 1)"
                    )));
                }
                OperatorModel::new(
                    a.p(),
                    a.corner(n).scaled(1.0 - e),
                    TailModel::GeometricDiagonal(*tail),
                )
            }
        }
    }
}

pub fn seq_norm_deficit(t: &OperatorModel, delta: f64) -> Result<Sequence> {
    require_zero_tail(t, "norm-deficit sequence")?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::precondition(format!("delta must be nonnegative, got {delta}")));
    }
    let norm = operator_norm(t)?.value;
    if norm + delta >= 1.0 {
        return Err(Error::precondition(format!(
            "||T|| + delta = {} must stay below 1",
            norm + delta
        )));
    }
    Ok(Sequence::NormDeficit {
        t: t.clone(),
        delta,
    })
}

pub fn seq_zero_row(t: &OperatorModel, l: usize) -> Result<Sequence> {
    require_zero_tail(t, "zero-row sequence")?;
    check_contraction(t)?;
    if !t.row(l).is_zero() {
        return Err(Error::precondition(format!("row {l} of T is not zero")));
    }
    Ok(Sequence::ZeroRow { t: t.clone(), l })
}

pub fn seq_non_attaining(
    a: &OperatorModel,
    schedule: HarmonicSchedule,
    tail: GeometricTail,
) -> Result<Sequence> {
    if !(schedule.shift.is_finite() && schedule.shift > 1.0) {
        return Err(Error::precondition(format!(
            "schedule shift {} keeps eps_N outside (0, 1)",
            schedule.shift
        )));
    }
    check_contraction(a)?;
    Ok(Sequence::NonAttaining {
        a: a.clone(),
        schedule,
        tail,
    })
}

/// Diagonal operator with entries `a_n = 1 - c r^n`, `n >= 0`.
pub fn diagonal_non_attainer(c: f64, r: f64) -> Result<OperatorModel> {
    GeometricTail::new(c, r)?;
    OperatorModel::new(
        2.0,
        Matrix::from_diagonal(&[1.0 - c]),
        TailModel::geometric(c * r, r)?,
    )
}
