//! Explicit continuity certificates on `l_2` and an adversarial falsifier.
//!
//! A certificate is a WOT neighbourhood `W = {T : max_{k,l <= m}
//! |<e_k, (T - B) e_l>| < delta}` of a norm-one positive contraction `B`
//! together with a target `(r, eps)`: every positive contraction in `W`
//! satisfies `max_{k <= r} ||(T - B)^* e_k|| < eps`. The underlying bounds
//! conclude on squared gaps, so they are instantiated at `eps_sq = eps^2`,
//! which makes the unsquared claim sound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CoordVector, OperatorModel, SupportSet, TailModel};
use crate::matrix::Matrix;
use crate::norms::{block_norm, operator_norm, verify_norming};
use crate::topologies::{row_gap, wot_gap, CONTRACTION_SLACK};

/// How far `||B||` may stray from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-10;
const UNIT_VECTOR_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WotNeighborhood {
    pub center: OperatorModel,
    pub m: usize,
    pub delta: f64,
}

impl WotNeighborhood {
    /// A random positive contraction in the neighbourhood, drawn like the
    /// falsifier's samples; `None` when every rejection round failed.
    pub fn sample(&self, seed: u64) -> Option<OperatorModel> {
        let arena = Arena::new(&self.center, self.m, self.delta, self.m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = arena.random_candidate(&mut rng)?;
        OperatorModel::new(self.center.p(), c.block, arena.tail).ok()
    }

    /// Strict membership test on the `(m+1) x (m+1)` corner.
    pub fn contains(&self, t: &OperatorModel) -> Result<bool> {
        Ok(wot_gap(t, &self.center, self.m)? < self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub operation: String,
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCertificate {
    pub center: OperatorModel,
    pub m: usize,
    pub delta: f64,
    pub r: usize,
    pub epsilon: f64,
    pub epsilon_sq: f64,
    pub family: Vec<CoordVector>,
    pub provenance: Provenance,
}

impl ContinuityCertificate {
    pub fn neighborhood(&self) -> WotNeighborhood {
        WotNeighborhood {
            center: self.center.clone(),
            m: self.m,
            delta: self.delta,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serialization is infallible")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Same certificate with a different radius (for sharpness experiments).
    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            ..self.clone()
        }
    }
}

/// The two ingredients of the corner radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerConstants {
    /// `max_l (1/u_l^2) (sum_j u_j^2 R_j + sum_{i<j} u_i u_j (R_i + R_j))`
    /// with `R_j` the row sums.
    pub k: f64,
    /// Half the smallest positive entry of the corner.
    pub half_min_entry: f64,
}

/// `sum_j u_j^2 R_j + sum_{i<j} u_i u_j (R_i + R_j)` over the listed indices.
fn weighted_row_mass(u: &[(usize, f64)], row_sum: impl Fn(usize) -> f64) -> f64 {
    let sums: Vec<f64> = u.iter().map(|&(j, _)| row_sum(j)).collect();
    let mut s = 0.0;
    for (a, &(_, uj)) in u.iter().enumerate() {
        s += uj * uj * sums[a];
    }
    for a in 0..u.len() {
        for b in a + 1..u.len() {
            s += u[a].1 * u[b].1 * (sums[a] + sums[b]);
        }
    }
    s
}

fn half_min_positive(block: &Matrix) -> Option<f64> {
    block
        .as_slice()
        .iter()
        .copied()
        .filter(|&b| b > 0.0)
        .min_by(f64::total_cmp)
        .map(|b| b / 2.0)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::precondition(format!("epsilon must be positive, got {eps}")))
    }
}

fn check_unit_center(b: &OperatorModel) -> Result<f64> {
    if b.p() != 2.0 {
        return Err(Error::Unsupported(
            "continuity certificates are stated on l_2 only".into(),
        ));
    }
    let norm = operator_norm(b)?.value;
    if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::precondition(format!(
            "center has norm {norm}, expected 1"
        )));
    }
    Ok(norm)
}

fn check_adjoint_norming(b: &OperatorModel, u: &CoordVector) -> Result<()> {
    if !u.is_nonnegative() {
        return Err(Error::precondition("norming vector has a negative entry"));
    }
    let n = u.p_norm_unchecked(2.0);
    if (n - 1.0).abs() > UNIT_VECTOR_TOLERANCE {
        return Err(Error::precondition(format!("norming vector has norm {n}")));
    }
    let check = verify_norming(&b.adjoint(), u)?;
    if !check.accepted {
        return Err(Error::precondition(format!(
            "u is not norming for the adjoint (residuals {:e}, {:e})",
            check.residual_norming,
            check.residual_eigen.unwrap_or(0.0)
        )));
    }
    Ok(())
}

/// Constants of the corner certificate for a full-support `u`.
pub fn corner_constants(block: &Matrix, u: &CoordVector) -> Result<CornerConstants> {
    let dim = block.rows();
    let entries: Vec<(usize, f64)> = (0..dim).map(|j| (j, u.get(j))).collect();
    if let Some(&(l, _)) = entries.iter().find(|(_, x)| *x == 0.0) {
        return Err(Error::precondition(format!(
            "norming vector misses coordinate {l}; full support is required"
        )));
    }
    let s = weighted_row_mass(&entries, |j| block.row(j).iter().sum());
    let umin = entries.iter().map(|&(_, x)| x * x).fold(f64::INFINITY, f64::min);
    let k = s / umin;
    if !(k > 0.0) {
        return Err(Error::precondition("degenerate certificate constant K = 0"));
    }
    let half_min_entry = half_min_positive(block)
        .ok_or_else(|| Error::precondition("block has no positive entry"))?;
    Ok(CornerConstants { k, half_min_entry })
}

/// Radius `delta = min(min_{b > 0} b/2, eps^2 / (2K))` of the corner
/// certificate at a full-support norming vector `u` of `B^*`.
pub fn delta_for_corner(b: &OperatorModel, u: &CoordVector, eps: f64) -> Result<ContinuityCertificate> {
    check_epsilon(eps)?;
    if *b.tail() != TailModel::Zero {
        return Err(Error::precondition("corner certificate needs a zero tail"));
    }
    check_unit_center(b)?;
    let dim = b.block_dim();
    if u.logical_len() > dim {
        return Err(Error::precondition(
            "norming vector is supported past the block",
        ));
    }
    check_adjoint_norming(b, u)?;
    let c = corner_constants(b.block(), u)?;
    let epsilon_sq = eps * eps;
    let delta = c.half_min_entry.min(epsilon_sq / (2.0 * c.k));
    Ok(ContinuityCertificate {
        center: b.clone(),
        m: dim - 1,
        delta,
        r: dim - 1,
        epsilon: eps,
        epsilon_sq,
        family: vec![CoordVector::from_finite(u.padded(dim))],
        provenance: Provenance {
            operation: "delta_for_corner".into(),
            parameters: serde_json::json!({
                "K": c.k,
                "half_min_entry": c.half_min_entry,
                "epsilon": eps,
            }),
        },
    })
}

/// A member of a norming family for `B^*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMember {
    Vector(CoordVector),
    /// Every `e_n`, `n >= from`, on an identity tail.
    IdentityTail { from: usize },
}

impl FamilyMember {
    pub fn support(&self) -> SupportSet {
        match self {
            FamilyMember::Vector(u) => u.support(),
            FamilyMember::IdentityTail { from } => SupportSet::CofiniteFrom(*from),
        }
    }
}

/// Per-member data of the class-M certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedMember {
    pub u: CoordVector,
    /// Least `n' > r` meeting both tail conditions.
    pub tail_index: usize,
}

/// The squared defects whose both must fall below `eps_sq / 4` at `n'`.
fn tail_defects(b: &OperatorModel, u: &CoordVector, r: usize, n_prime: usize) -> (f64, f64) {
    let bu = b.adjoint().apply(u);
    let head: f64 = bu.entries().iter().take(n_prime + 1).map(|x| x * x).sum();
    let umin = (0..=r)
        .map(|l| u.get(l))
        .filter(|&x| x > 0.0)
        .map(|x| x * x)
        .fold(f64::INFINITY, f64::min);
    let first = (1.0 - head).max(0.0) / umin;
    let second = (0..=r)
        .map(|l| {
            b.row(l)
                .entries()
                .iter()
                .skip(n_prime + 1)
                .map(|x| x * x)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    (first, second)
}

/// Class-M certificate from a norming family of `B^*` covering `{0, ..., r}`.
///
/// Members are selected greedily; an identity-tail member contributes the
/// basis vectors `e_n` it needs. For each selected `u_k` the least `n_k' > r`
/// with both tail defects below `eps_sq / 4` is found (capped at
/// `10 (r + blockDim)`), and then `m = max(n, n') + 1`, `delta = min(min b/2
/// on the corner, eps_sq / (4K))`.
pub fn class_m_certificate(
    b: &OperatorModel,
    family: &[FamilyMember],
    eps: f64,
    r: usize,
) -> Result<ContinuityCertificate> {
    check_epsilon(eps)?;
    check_unit_center(b)?;
    for member in family {
        match member {
            FamilyMember::Vector(u) => check_adjoint_norming(b, u)?,
            FamilyMember::IdentityTail { from } => {
                if *b.tail() != TailModel::Identity || *from < b.block_dim() {
                    return Err(Error::precondition(format!(
                        "identity-tail member from {from} does not match the operator tail"
                    )));
                }
            }
        }
    }
    if let Some(l) = (0..=r).find(|&l| !family.iter().any(|f| f.support().contains(l))) {
        return Err(Error::precondition(format!(
            "family supports do not cover index {l}"
        )));
    }

    let mut covered = vec![false; r + 1];
    let mut selected: Vec<CoordVector> = Vec::new();
    loop {
        let gain = |u: &CoordVector| (0..=r).filter(|&l| !covered[l] && u.get(l) != 0.0).count();
        let best = family
            .iter()
            .filter_map(|f| match f {
                FamilyMember::Vector(u) => Some(u),
                FamilyMember::IdentityTail { .. } => None,
            })
            .map(|u| (gain(u), u))
            .filter(|(g, _)| *g > 0)
            .fold(None::<(usize, &CoordVector)>, |acc, x| match acc {
                Some(a) if a.0 >= x.0 => Some(a),
                _ => Some(x),
            });
        let Some((_, u)) = best else { break };
        for l in 0..=r {
            covered[l] |= u.get(l) != 0.0;
        }
        selected.push(u.clone());
    }
    for l in 0..=r {
        if !covered[l] {
            // Covered by an identity-tail member: e_l is norming for B^*.
            selected.push(CoordVector::basis(l));
            covered[l] = true;
        }
    }

    let epsilon_sq = eps * eps;
    let cap = 10 * (r + b.block_dim());
    let mut members = Vec::with_capacity(selected.len());
    for u in selected {
        let mut best = f64::INFINITY;
        let mut found = None;
        for n_prime in r + 1..=cap.max(r + 1) {
            let (d1, d2) = tail_defects(b, &u, r, n_prime);
            if d1 < epsilon_sq / 4.0 && d2 < epsilon_sq / 4.0 {
                found = Some(n_prime);
                break;
            }
            best = best.min(d1.max(d2));
        }
        let Some(tail_index) = found else {
            return Err(Error::Construction(format!(
                "no tail index up to {cap} meets the defect bound {:e}; smallest defect {best:e}",
                epsilon_sq / 4.0
            )));
        };
        members.push(SelectedMember { u, tail_index });
    }

    let n = members
        .iter()
        .filter_map(|s| s.u.support().max())
        .max()
        .unwrap_or(0);
    let n_prime = members.iter().map(|s| s.tail_index).max().unwrap_or(r + 1);
    let m = n.max(n_prime) + 1;

    let mut k = 0.0f64;
    for s in &members {
        let entries: Vec<(usize, f64)> = (0..=n).map(|j| (j, s.u.get(j))).filter(|e| e.1 != 0.0).collect();
        let mass = weighted_row_mass(&entries, |j| (0..=n_prime).map(|c| b.entry(j, c)).sum());
        let umin = (0..=r)
            .map(|l| s.u.get(l))
            .filter(|&x| x > 0.0)
            .map(|x| x * x)
            .fold(f64::INFINITY, f64::min);
        k = k.max(mass / umin);
    }
    if !(k > 0.0) {
        return Err(Error::precondition("degenerate certificate constant K = 0"));
    }
    let corner = b.corner(m);
    let half_min_entry = half_min_positive(&corner)
        .ok_or_else(|| Error::precondition("corner has no positive entry"))?;
    let delta = half_min_entry.min(epsilon_sq / (4.0 * k));
    Ok(ContinuityCertificate {
        center: b.clone(),
        m,
        delta,
        r,
        epsilon: eps,
        epsilon_sq,
        family: members.iter().map(|s| s.u.clone()).collect(),
        provenance: Provenance {
            operation: "class_m_certificate".into(),
            parameters: serde_json::json!({
                "K": k,
                "half_min_entry": half_min_entry,
                "n": n,
                "n_prime": n_prime,
                "tail_indices": members.iter().map(|s| s.tail_index).collect::<Vec<_>>(),
                "epsilon": eps,
            }),
        },
    })
}

/// Minimal `n_0` with `2^-n_0 < eta / 8`.
pub fn diameter_tail_index(eta: f64) -> usize {
    let mut n0 = 0usize;
    while 2f64.powi(-(n0 as i32)) >= eta / 8.0 {
        n0 += 1;
    }
    n0
}

/// WOT neighbourhood of `B` of canonical-metric diameter below `eta`.
pub fn diameter_certificate(b: &OperatorModel, u: &CoordVector, eta: f64) -> Result<WotNeighborhood> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::precondition(format!("eta must be positive, got {eta}")));
    }
    let n0 = diameter_tail_index(eta);
    let m = b.block_dim() - 1;
    if m < n0 {
        return Err(Error::precondition(format!(
            "blockDim {} too small for eta = {eta}: needs blockDim >= {}",
            b.block_dim(),
            n0 + 1
        )));
    }
    let cert = delta_for_corner(b, u, eta / 8.0)?;
    Ok(WotNeighborhood {
        center: b.clone(),
        m,
        delta: cert.delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalsifyParams {
    pub trials: usize,
    pub climbs: usize,
    pub climb_steps: usize,
    pub seed: u64,
}

impl Default for FalsifyParams {
    fn default() -> Self {
        Self {
            trials: 2000,
            climbs: 200,
            climb_steps: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyReport {
    pub max_gap: f64,
    pub epsilon: f64,
    /// True only when the witness is confirmed to be a positive contraction
    /// inside the neighbourhood with gap at least `epsilon`.
    pub violated: bool,
    pub witness: OperatorModel,
    pub accepted_samples: usize,
    pub evaluations: usize,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Search state shared by all trials of one falsification run.
struct Arena {
    /// Center re-expressed on the working block dimension.
    center: Matrix,
    tail: TailModel,
    dim: usize,
    m: usize,
    r: usize,
    /// Admissible corner deviation, strictly inside the open ball.
    radius: f64,
    delta: f64,
    /// Perron vector used to warm-start norm bounds.
    warm: Vec<f64>,
}

struct Candidate {
    block: Matrix,
    gap: f64,
}

impl Arena {
    fn new(c: &OperatorModel, m: usize, delta: f64, r: usize) -> Self {
        let dim = (m + 1).max(c.block_dim()) + 2;
        let wide = c.with_block_dim(dim);
        let warm = block_norm(wide.block(), 2.0)
            .map(|b| b.vector)
            .unwrap_or_else(|_| vec![1.0; dim]);
        Self {
            center: wide.block().clone(),
            tail: *wide.tail(),
            dim,
            m,
            r: r.min(dim - 1),
            radius: delta * (1.0 - 1e-9),
            delta,
            warm,
        }
    }

    fn objective(&self, t: &Matrix) -> f64 {
        (0..=self.r)
            .map(|k| {
                t.row(k)
                    .iter()
                    .zip(self.center.row(k))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Collatz–Wielandt upper bound on `||T||^2` from a few power steps.
    fn norm_sq_bound(&self, t: &Matrix) -> f64 {
        let top = self.warm.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-300);
        let mut x: Vec<f64> = self.warm.iter().map(|&v| v.max(1e-6 * top) + 0.0).collect();
        let mut bound = f64::INFINITY;
        for _ in 0..4 {
            let gx = t.tr_mul_vec(&t.mul_vec(&x));
            let b = gx
                .iter()
                .zip(&x)
                .map(|(g, xi)| g / xi)
                .fold(0.0f64, f64::max);
            bound = bound.min(b);
            let s = gx.iter().fold(0.0f64, |a, &v| a.max(v));
            if s == 0.0 {
                return 0.0;
            }
            x = gx.iter().map(|&v| (v / s).max(1e-9)).collect();
        }
        bound
    }

    /// Clamp into the ball, rescale to a contraction, and verify membership.
    fn project(&self, mut t: Matrix) -> Option<Matrix> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut v = t[(i, j)].max(0.0);
                if i <= self.m && j <= self.m {
                    let c = self.center[(i, j)];
                    v = v.clamp((c - self.radius).max(0.0), c + self.radius);
                }
                t[(i, j)] = v;
            }
        }
        let bound = self.norm_sq_bound(&t);
        if bound > 1.0 {
            t = t.scaled(1.0 / (bound.sqrt() * (1.0 + 1e-14)));
        }
        let inside = (0..=self.m)
            .all(|i| (0..=self.m).all(|j| (t[(i, j)] - self.center[(i, j)]).abs() < self.delta));
        inside.then_some(t)
    }

    fn random_candidate(&self, rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let outside_scale = [0.0, 1e-3, 1e-2, 0.1, 0.5][rng.random_range(0..5)];
        let corner_frac = [0.25, 0.5, 1.0][rng.random_range(0..3)];
        let density: f64 = rng.random_range(0.05..1.0);
        let mut t = self.center.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i <= self.m && j <= self.m {
                    let s: f64 = rng.random_range(-1.0..=1.0);
                    t[(i, j)] += corner_frac * self.radius * s;
                } else if rng.random_bool(density) {
                    let s: f64 = rng.random();
                    t[(i, j)] += outside_scale * s;
                }
            }
        }
        let mut scale = 1.0;
        for _ in 0..6 {
            let trial = t.sub(&self.center).scaled(scale);
            let cand = Matrix::from_fn(self.dim, self.dim, |i, j| self.center[(i, j)] + trial[(i, j)]);
            if let Some(p) = self.project(cand) {
                let gap = self.objective(&p);
                return Some(Candidate { block: p, gap });
            }
            scale *= 0.5;
        }
        None
    }

    fn climb(&self, start: Candidate, steps: usize, rng: &mut ChaCha8Rng) -> (Candidate, usize) {
        let mut cur = start;
        let mut evals = 0;
        let base_corner = self.radius;
        let base_outside = 0.1;
        let mut h_corner = base_corner;
        let mut h_outside = base_outside;
        for _ in 0..steps {
            // Rows that enter the objective are sampled more often.
            let i = if rng.random_bool(0.7) {
                rng.random_range(0..=self.r)
            } else {
                rng.random_range(0..self.dim)
            };
            let j = rng.random_range(0..self.dim);
            let in_corner = i <= self.m && j <= self.m;
            let h = if in_corner { h_corner } else { h_outside };
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let mut t = cur.block.clone();
                t[(i, j)] += sign * h;
                evals += 1;
                if let Some(p) = self.project(t) {
                    let gap = self.objective(&p);
                    if gap > cur.gap {
                        cur = Candidate { block: p, gap };
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                if in_corner {
                    h_corner *= 0.5;
                    if h_corner < 1e-6 * base_corner {
                        h_corner = base_corner;
                    }
                } else {
                    h_outside *= 0.5;
                    if h_outside < 1e-6 * base_outside {
                        h_outside = base_outside;
                    }
                }
            }
        }
        (cur, evals)
    }
}

/// Empirical soundness test of a certificate.
///
/// Samples positive contractions in the neighbourhood, then hill-climbs the
/// strongest samples on single entries, maximizing `max_{k <= r}
/// ||(T - B)^* e_k||`. A reported violation is re-checked with an exact norm.
pub fn falsify(cert: &ContinuityCertificate, params: FalsifyParams) -> Result<FalsifyReport> {
    let arena = Arena::new(&cert.center, cert.m, cert.delta, cert.r);
    let mut samples: Vec<(usize, Candidate)> = (0..params.trials)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, i as u64));
            arena.random_candidate(&mut rng).map(|c| (i, c))
        })
        .collect();
    let accepted_samples = samples.len();
    if samples.is_empty() {
        samples.push((
            0,
            Candidate {
                block: arena.center.clone(),
                gap: 0.0,
            },
        ));
    }
    samples.sort_by(|a, b| b.1.gap.total_cmp(&a.1.gap).then(a.0.cmp(&b.0)));

    let climbs: Vec<(usize, Candidate, usize)> = (0..params.climbs)
        .into_par_iter()
        .map(|c| {
            let (_, start) = &samples[c % samples.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                params.seed ^ 0xC11B_C11B_C11B_C11B,
                c as u64,
            ));
            let start = Candidate {
                block: start.block.clone(),
                gap: start.gap,
            };
            let (best, evals) = arena.climb(start, params.climb_steps, &mut rng);
            (c, best, evals)
        })
        .collect();

    let evaluations = params.trials + climbs.iter().map(|c| c.2).sum::<usize>();
    let best = climbs
        .iter()
        .map(|(_, c, _)| c)
        .chain(samples.iter().take(1).map(|(_, c)| c))
        .fold(None::<&Candidate>, |acc, c| match acc {
            Some(a) if a.gap >= c.gap => Some(a),
            _ => Some(c),
        })
        .expect("at least one candidate");

    let witness = OperatorModel::new(2.0, best.block.clone(), arena.tail)?;
    let mut violated = false;
    if best.gap >= cert.epsilon {
        let norm = operator_norm(&witness)?.value;
        let inside = cert.neighborhood().contains(&witness)?;
        let gap = (0..=cert.r)
            .map(|k| row_gap(&witness, &cert.center, k))
            .fold(0.0, f64::max);
        violated = norm <= 1.0 + CONTRACTION_SLACK && inside && gap >= cert.epsilon;
    }
    Ok(FalsifyReport {
        max_gap: best.gap,
        epsilon: cert.epsilon,
        violated,
        witness,
        accepted_samples,
        evaluations,
    })
}
