//! Finitely supported coordinate vectors and positive operators of the form
//! `block ⊕ tail` acting on truncations of `l_p`.
//!
//! An [`OperatorModel`] stores a finite nonnegative block acting on
//! `E_{M-1} = span(e_0, ..., e_{M-1})` and a structured diagonal [`TailModel`]
//! acting on `F_{M-1} = span(e_M, e_{M+1}, ...)`. There are no cross terms:
//! constructions that need them enlarge the block instead.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Coordinates `x_0, ..., x_{K-1}` against the canonical basis; everything
/// past `K - 1` is zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VectorFile", into = "VectorFile")]
pub struct CoordVector {
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct VectorFile {
    entries: Vec<f64>,
}

impl TryFrom<VectorFile> for CoordVector {
    type Error = Error;

    fn try_from(file: VectorFile) -> Result<Self> {
        CoordVector::new(file.entries)
    }
}

impl From<CoordVector> for VectorFile {
    fn from(v: CoordVector) -> Self {
        VectorFile { entries: v.entries }
    }
}

impl CoordVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { entries })
    }

    /// Infallible constructor for values already known to be finite.
    pub(crate) fn from_finite(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|x| x.is_finite()));
        Self { entries }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            entries: vec![0.0; len],
        }
    }

    /// The basis vector `e_k`.
    pub fn basis(k: usize) -> Self {
        let mut entries = vec![0.0; k + 1];
        entries[k] = 1.0;
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    /// Coordinate `n`, zero past the stored length.
    pub fn get(&self, n: usize) -> f64 {
        self.entries.get(n).copied().unwrap_or(0.0)
    }

    /// Stored coordinates padded or cut to exactly `len` entries.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.get(n)).collect()
    }

    /// Length once trailing zeros are dropped.
    pub fn logical_len(&self) -> usize {
        self.entries
            .iter()
            .rposition(|&x| x != 0.0)
            .map_or(0, |i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.logical_len() == 0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|&x| x >= 0.0)
    }

    /// Entrywise absolute value `|x|`.
    pub fn modulus(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|x| x.abs()).collect(),
        }
    }

    /// Exact support: indices whose stored value is not `0.0`.
    pub fn support(&self) -> SupportSet {
        SupportSet::Finite(
            self.entries
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    /// Duality pairing `sum_n x_n y_n`.
    pub fn dot(&self, other: &CoordVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_finite(self.entries.iter().map(|x| a * x).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &CoordVector, b: f64) -> Self {
        let len = self.len().max(other.len());
        Self::from_finite(
            (0..len)
                .map(|n| a * self.get(n) + b * other.get(n))
                .collect(),
        )
    }

    pub fn sub(&self, other: &CoordVector) -> Self {
        self.combine(1.0, other, -1.0)
    }

    /// `P_n x`: keeps coordinates `0..=n`.
    pub fn head(&self, n: usize) -> Self {
        Self::from_finite(self.entries.iter().take(n + 1).copied().collect())
    }

    /// `l_p` norm `(sum |x_n|^p)^(1/p)` for `p` already validated.
    pub(crate) fn p_norm_unchecked(&self, p: f64) -> f64 {
        p_norm(&self.entries, p)
    }
}

impl PartialEq for CoordVector {
    fn eq(&self, other: &Self) -> bool {
        let n = self.logical_len();
        n == other.logical_len() && self.entries[..n] == other.entries[..n]
    }
}

pub(crate) fn p_norm(x: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        // Scaled to avoid overflow on large entries.
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        return scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * x.iter()
            .map(|v| (v.abs() / scale).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
}

/// Support of a vector: a finite index set, or a cofinite tail `{k, k+1, ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSet {
    Finite(BTreeSet<usize>),
    CofiniteFrom(usize),
}

impl SupportSet {
    pub fn contains(&self, i: usize) -> bool {
        match self {
            SupportSet::Finite(s) => s.contains(&i),
            SupportSet::CofiniteFrom(k) => i >= *k,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SupportSet::Finite(s) if s.is_empty())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SupportSet::Finite(_))
    }

    /// True when `{0, ..., n}` is contained in the set.
    pub fn covers_through(&self, n: usize) -> bool {
        (0..=n).all(|i| self.contains(i))
    }

    /// Largest element of a finite support.
    pub fn max(&self) -> Option<usize> {
        match self {
            SupportSet::Finite(s) => s.iter().next_back().copied(),
            SupportSet::CofiniteFrom(_) => None,
        }
    }
}

/// Parameters of the geometric diagonal tail `a_n = 1 - c r^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometric")]
pub struct GeometricTail {
    c: f64,
    r: f64,
}

#[derive(Deserialize)]
struct RawGeometric {
    c: f64,
    r: f64,
}

impl TryFrom<RawGeometric> for GeometricTail {
    type Error = Error;

    fn try_from(raw: RawGeometric) -> Result<Self> {
        GeometricTail::new(raw.c, raw.r)
    }
}

impl GeometricTail {
    /// `c` in `(0, 1]`, `r` in `(0, 1)`.
    pub fn new(c: f64, r: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::TailParameters(format!("c = {c} not in (0, 1]")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::TailParameters(format!("r = {r} not in (0, 1)")));
        }
        Ok(Self { c, r })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn entry(&self, n: usize) -> f64 {
        1.0 - self.c * self.r.powi(n as i32)
    }
}

/// Diagonal action on `F_{M-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    Zero,
    Identity,
    GeometricDiagonal(GeometricTail),
}

impl TailModel {
    pub fn geometric(c: f64, r: f64) -> Result<Self> {
        Ok(TailModel::GeometricDiagonal(GeometricTail::new(c, r)?))
    }

    /// Diagonal entry at tail offset `n` (absolute index `blockDim + n`).
    pub fn entry(&self, n: usize) -> f64 {
        match self {
            TailModel::Zero => 0.0,
            TailModel::Identity => 1.0,
            TailModel::GeometricDiagonal(g) => g.entry(n),
        }
    }

    /// `sup_n entry(n)`, which is also the operator norm of the tail.
    pub fn sup(&self) -> f64 {
        match self {
            TailModel::Zero => 0.0,
            TailModel::Identity | TailModel::GeometricDiagonal(_) => 1.0,
        }
    }

    /// The same diagonal after dropping its first `k` entries.
    pub fn shifted(&self, k: usize) -> Self {
        match self {
            TailModel::GeometricDiagonal(g) if k > 0 => TailModel::GeometricDiagonal(GeometricTail {
                c: g.c * g.r.powi(k as i32),
                r: g.r,
            }),
            other => *other,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TailModel::Zero => "zero",
            TailModel::Identity => "identity",
            TailModel::GeometricDiagonal(_) => "geometric_diagonal",
        }
    }
}

impl fmt::Display for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailModel::GeometricDiagonal(g) => write!(f, "geometric_diagonal(c={}, r={})", g.c, g.r),
            other => f.write_str(other.kind()),
        }
    }
}

/// A positive operator `T = block ⊕ tail` on `l_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorFile", into = "OperatorFile")]
pub struct OperatorModel {
    p: f64,
    block: Matrix,
    tail: TailModel,
}

/// On-disk layout of an operator; field order is part of the format.
#[derive(Serialize, Deserialize)]
struct OperatorFile {
    p: f64,
    #[serde(rename = "blockDim")]
    block_dim: usize,
    block: Vec<Vec<f64>>,
    tail: TailModel,
}

impl TryFrom<OperatorFile> for OperatorModel {
    type Error = Error;

    fn try_from(file: OperatorFile) -> Result<Self> {
        if file.block.len() != file.block_dim {
            return Err(Error::Shape(format!(
                "blockDim {} but {} rows",
                file.block_dim,
                file.block.len()
            )));
        }
        if let Some((i, row)) = file
            .block
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != file.block_dim)
        {
            return Err(Error::Shape(format!(
                "row {i} has {} entries, expected {}",
                row.len(),
                file.block_dim
            )));
        }
        OperatorModel::from_rows(file.p, &file.block, file.tail)
    }
}

impl From<OperatorModel> for OperatorFile {
    fn from(t: OperatorModel) -> Self {
        OperatorFile {
            p: t.p,
            block_dim: t.block_dim(),
            block: t.block.to_rows(),
            tail: t.tail,
        }
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

impl OperatorModel {
    /// Positive operator with a nonnegative square block of dimension >= 1.
    pub fn new(p: f64, block: Matrix, tail: TailModel) -> Result<Self> {
        let t = Self::new_signed(p, block, tail)?;
        for i in 0..t.block_dim() {
            for j in 0..t.block_dim() {
                let value = t.block[(i, j)];
                if value < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value,
                    });
                }
            }
        }
        Ok(t)
    }

    /// Like [`OperatorModel::new`] but without the sign check. Used for
    /// diagnostics; such operators fail [`OperatorModel::is_positive`].
    pub fn new_signed(p: f64, block: Matrix, tail: TailModel) -> Result<Self> {
        check_exponent(p)?;
        if !block.is_square() {
            return Err(Error::Shape(format!(
                "block is {}x{}, expected square",
                block.rows(),
                block.cols()
            )));
        }
        if block.rows() == 0 {
            return Err(Error::Shape("blockDim must be at least 1".into()));
        }
        if let Some((index, &value)) = block
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite())
        {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { p, block, tail })
    }

    pub fn from_rows(p: f64, rows: &[Vec<f64>], tail: TailModel) -> Result<Self> {
        let block = Matrix::from_rows(rows).ok_or_else(|| Error::Shape("ragged rows".into()))?;
        Self::new(p, block, tail)
    }

    /// Zero-tail operator with the given block.
    pub fn finite(p: f64, block: Matrix) -> Result<Self> {
        Self::new(p, block, TailModel::Zero)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn block_dim(&self) -> usize {
        self.block.rows()
    }

    pub fn block(&self) -> &Matrix {
        &self.block
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    /// Matrix entry `t_{i,j} = <e_i, T e_j>`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let m = self.block_dim();
        if i < m && j < m {
            self.block[(i, j)]
        } else if i == j && i >= m {
            self.tail.entry(i - m)
        } else {
            0.0
        }
    }

    /// Strict entrywise sign test on the block; tails are nonnegative.
    pub fn is_positive(&self) -> bool {
        self.block.as_slice().iter().all(|&x| x >= 0.0)
    }

    pub fn apply(&self, x: &CoordVector) -> CoordVector {
        let m = self.block_dim();
        let len = m.max(x.len());
        let head = self.block.mul_vec(&x.padded(m));
        let mut out = head;
        out.resize(len, 0.0);
        for n in m..len {
            out[n] = self.tail.entry(n - m) * x.get(n);
        }
        CoordVector::from_finite(out)
    }

    /// Transposed block, same tail and exponent. An exact involution.
    pub fn adjoint(&self) -> Self {
        Self {
            p: self.p,
            block: self.block.transpose(),
            tail: self.tail,
        }
    }

    /// `(N+1) x (N+1)` matrix of `<e_i, T e_j>`, reading tail entries on the
    /// diagonal past the block.
    pub fn corner(&self, n: usize) -> Matrix {
        Matrix::from_fn(n + 1, n + 1, |i, j| self.entry(i, j))
    }

    /// `P_N T P_N` as a zero-tail model.
    pub fn project_head(&self, n: usize) -> Self {
        Self {
            p: self.p,
            block: self.corner(n),
            tail: TailModel::Zero,
        }
    }

    /// `T P_n` as a zero-tail model whose block covers at least the original
    /// block.
    pub fn times_head_projection(&self, n: usize) -> Self {
        let dim = self.block_dim().max(n + 1);
        let mut block = self.corner(dim - 1);
        for i in 0..dim {
            for j in n + 1..dim {
                block[(i, j)] = 0.0;
            }
        }
        Self {
            p: self.p,
            block,
            tail: TailModel::Zero,
        }
    }

    /// The same operator re-expressed with a block of dimension `dim`
    /// (at least the current one), absorbing leading tail entries.
    pub fn with_block_dim(&self, dim: usize) -> Self {
        let m = self.block_dim();
        assert!(dim >= m, "with_block_dim cannot shrink the block");
        Self {
            p: self.p,
            block: self.corner(dim - 1),
            tail: self.tail.shifted(dim - m),
        }
    }

    /// Same block and tail at a different exponent.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            p,
            block: self.block.clone(),
            tail: self.tail,
        })
    }

    /// Replaces the block, keeping exponent and tail.
    pub fn with_block(&self, block: Matrix) -> Result<Self> {
        Self::new(self.p, block, self.tail)
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        if a < 0.0 {
            return Err(Error::precondition("negative scaling breaks positivity"));
        }
        match self.tail {
            TailModel::Zero => Self::new(self.p, self.block.scaled(a), TailModel::Zero),
            _ if a == 1.0 => Ok(self.clone()),
            _ => Err(Error::Unsupported(
                "only zero-tail operators can be rescaled".into(),
            )),
        }
    }

    /// Column `T e_k`; always finitely supported.
    pub fn column(&self, k: usize) -> CoordVector {
        let m = self.block_dim();
        if k < m {
            CoordVector::from_finite(self.block.column(k))
        } else {
            let mut v = vec![0.0; k + 1];
            v[k] = self.tail.entry(k - m);
            CoordVector::from_finite(v)
        }
    }

    /// Row `T^* e_k` (the adjoint column).
    pub fn row(&self, k: usize) -> CoordVector {
        let m = self.block_dim();
        if k < m {
            CoordVector::from_finite(self.block.row(k).to_vec())
        } else {
            let mut v = vec![0.0; k + 1];
            v[k] = self.tail.entry(k - m);
            CoordVector::from_finite(v)
        }
    }

    pub(crate) fn check_same_exponent(&self, other: &OperatorModel) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::ExponentMismatch {
                left: self.p,
                right: other.p,
            })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator serialization is infallible")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> CoordVector {
        CoordVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(v(&[1.0, -2.0, 0.0]).modulus(), v(&[1.0, 2.0, 0.0]));
        assert_eq!(v(&[0.0]).modulus(), v(&[0.0]));
        let m = v(&[-0.3, 0.4]).modulus();
        assert_eq!(m, v(&[0.3, 0.4]));
        assert!((m.p_norm_unchecked(2.0) - 0.5).abs() < 1e-15);
        assert_eq!(v(&[-1.0, 0.0, 3.0]).modulus().support(), v(&[-1.0, 0.0, 3.0]).support());
    }

    #[test]
    fn trailing_zeros_ignored_in_equality() {
        assert_eq!(v(&[1.0, 2.0]), v(&[1.0, 2.0, 0.0, 0.0]));
        assert_ne!(v(&[1.0, 2.0]), v(&[1.0, 2.0, 1e-300]));
        assert_eq!(v(&[]), v(&[0.0]));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            CoordVector::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(CoordVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn apply_examples() {
        let id = OperatorModel::from_rows(2.0, &[vec![0.0]], TailModel::Identity).unwrap();
        assert_eq!(id.apply(&CoordVector::basis(3)), CoordVector::basis(3));

        let half = OperatorModel::from_rows(2.0, &[vec![0.5]], TailModel::Zero).unwrap();
        assert_eq!(half.apply(&CoordVector::basis(0)), v(&[0.5]));

        let swap =
            OperatorModel::from_rows(2.0, &[vec![0.0, 1.0], vec![1.0, 0.0]], TailModel::Zero)
                .unwrap();
        assert_eq!(swap.apply(&v(&[0.6, 0.8])), v(&[0.8, 0.6]));
        // Zero tail kills coordinates past the block.
        assert_eq!(swap.apply(&v(&[0.0, 0.0, 5.0])), v(&[]));
    }

    #[test]
    fn apply_geometric_tail() {
        let t = OperatorModel::from_rows(2.0, &[vec![0.5]], TailModel::geometric(0.5, 0.5).unwrap())
            .unwrap();
        let y = t.apply(&v(&[1.0, 1.0, 1.0]));
        assert_eq!(y.entries(), &[0.5, 0.5, 0.75]);
    }

    #[test]
    fn adjoint_examples() {
        let sym = OperatorModel::from_rows(2.0, &[vec![0.1, 0.2], vec![0.2, 0.3]], TailModel::Zero)
            .unwrap();
        assert_eq!(sym.adjoint(), sym);
        let t = OperatorModel::from_rows(2.0, &[vec![0.0, 1.0], vec![0.0, 0.0]], TailModel::Zero)
            .unwrap();
        assert_eq!(t.adjoint().block().to_rows(), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(t.adjoint().adjoint(), t);
    }

    #[test]
    fn corner_examples() {
        let t = OperatorModel::from_rows(2.0, &[vec![0.5]], TailModel::Identity).unwrap();
        assert_eq!(t.corner(2), Matrix::from_diagonal(&[0.5, 1.0, 1.0]));
        let z = OperatorModel::from_rows(2.0, &[vec![0.5]], TailModel::Zero).unwrap();
        assert_eq!(z.corner(2), Matrix::from_diagonal(&[0.5, 0.0, 0.0]));
        let b = Matrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64 / 16.0);
        let t4 = OperatorModel::finite(2.0, b.clone()).unwrap();
        assert_eq!(t4.corner(3), b);
        assert_eq!(t4.project_head(1).block(), &b.leading(2));
    }

    #[test]
    fn support_examples() {
        let s = v(&[0.0, 3.0, 0.0, 1.0]).support();
        assert_eq!(s, SupportSet::Finite([1, 3].into_iter().collect()));
        assert!(v(&[0.0, 0.0]).support().is_empty());
        assert_eq!(
            v(&[1e-300, 0.0]).support(),
            SupportSet::Finite([0].into_iter().collect())
        );
        assert!(SupportSet::CofiniteFrom(4).contains(100));
        assert!(!SupportSet::CofiniteFrom(4).contains(3));
    }

    #[test]
    fn positivity_examples() {
        let t = OperatorModel::from_rows(2.0, &[vec![0.1, 0.0], vec![0.2, 0.3]], TailModel::Zero)
            .unwrap();
        assert!(t.is_positive());
        let neg = OperatorModel::new_signed(2.0, Matrix::from_diagonal(&[-1e-15]), TailModel::Zero)
            .unwrap();
        assert!(!neg.is_positive());
        assert!(matches!(
            OperatorModel::finite(2.0, Matrix::from_diagonal(&[-1e-15])),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn with_block_dim_preserves_entries() {
        let t = OperatorModel::from_rows(3.0, &[vec![0.2]], TailModel::geometric(0.5, 0.9).unwrap())
            .unwrap();
        let big = t.with_block_dim(4);
        for i in 0..10 {
            for j in 0..10 {
                assert!((t.entry(i, j) - big.entry(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn head_projection_product() {
        let b = Matrix::from_fn(3, 3, |i, j| (1 + i + j) as f64 / 10.0);
        let t = OperatorModel::finite(2.0, b).unwrap();
        let tp = t.times_head_projection(0);
        assert_eq!(tp.block().column(0), t.block().column(0));
        assert_eq!(tp.block().column(1), vec![0.0; 3]);
        let wide = t.times_head_projection(5);
        assert_eq!(wide.block_dim(), 6);
        assert_eq!(wide.entry(2, 2), t.entry(2, 2));
    }

    #[test]
    fn operator_file_format() {
        let t = OperatorModel::from_rows(2.0, &[vec![0.5, 0.5], vec![0.5, 0.5]], TailModel::Zero)
            .unwrap();
        assert_eq!(
            t.to_json(),
            r#"{"p":2.0,"blockDim":2,"block":[[0.5,0.5],[0.5,0.5]],"tail":{"kind":"zero"}}"#
        );
        let g = OperatorModel::from_rows(2.0, &[vec![0.5]], TailModel::geometric(0.5, 0.9).unwrap())
            .unwrap();
        assert_eq!(
            g.to_json(),
            r#"{"p":2.0,"blockDim":1,"block":[[0.5]],"tail":{"kind":"geometric_diagonal","c":0.5,"r":0.9}}"#
        );
        let spaced = r#"{"p": 2.0, "blockDim": 1, "block": [[1.0]], "tail": {"kind":"identity"}}"#;
        let t = OperatorModel::from_json(spaced).unwrap();
        assert_eq!(t.tail(), &TailModel::Identity);
    }

    #[test]
    fn operator_file_rejections() {
        let neg = r#"{"p":2.0,"blockDim":1,"block":[[-0.5]],"tail":{"kind":"zero"}}"#;
        assert!(OperatorModel::from_json(neg).unwrap_err().to_string().contains("negative"));
        let p1 = r#"{"p":1.0,"blockDim":1,"block":[[0.5]],"tail":{"kind":"zero"}}"#;
        assert!(OperatorModel::from_json(p1).unwrap_err().to_string().contains("exponent"));
        let ragged = r#"{"p":2.0,"blockDim":2,"block":[[0.5,0.1],[0.5]],"tail":{"kind":"zero"}}"#;
        assert!(OperatorModel::from_json(ragged).unwrap_err().to_string().contains("row 1"));
        let dim = r#"{"p":2.0,"blockDim":3,"block":[[0.5]],"tail":{"kind":"zero"}}"#;
        assert!(OperatorModel::from_json(dim).is_err());
        let tail = r#"{"p":2.0,"blockDim":1,"block":[[0.5]],"tail":{"kind":"geometric_diagonal","c":0.5,"r":1.0}}"#;
        assert!(OperatorModel::from_json(tail).is_err());
    }

    #[test]
    fn vector_file_format() {
        let x = v(&[0.6, 0.8]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"entries":[0.6,0.8]}"#);
        let back: CoordVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
    }
}
