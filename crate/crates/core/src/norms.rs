//! Operator `p`-norms, norming vectors and attainment.
//!
//! For `p = 2` the block norm is the square root of the top eigenvalue of
//! `B^T B`; otherwise a Boyd-style nonlinear power iteration is used, which is
//! monotone and convergent for nonnegative matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_exponent, p_norm, CoordVector, OperatorModel, SupportSet, TailModel};
use crate::matrix::{symmetric_eigen, Matrix};

/// Default acceptance threshold of [`verify_norming`].
pub const VERIFY_TOLERANCE: f64 = 1e-8;
/// Iteration cap of the `p != 2` power iteration.
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Relative change of the estimate at which the power iteration stops.
pub const POWER_TOLERANCE: f64 = 1e-13;
/// Relative width of the top eigenvalue cluster treated as degenerate.
const EIGEN_CLUSTER: f64 = 1e-10;
/// Relative tolerance for a block norm tying with a geometric tail.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    DiagonalClosedForm,
    SymmetricEigen,
    PPowerIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainment {
    /// Attained on the block by this nonnegative unit vector.
    Attained(CoordVector),
    /// Attained by `e_k`, `k = blockDim`, on an identity tail.
    TailAttained(usize),
    NotAttained,
}

impl Attainment {
    pub fn is_attained(&self) -> bool {
        !matches!(self, Attainment::NotAttained)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
    pub attained: Attainment,
}

/// Norm of the finite block alone, with a unit nonnegative maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorm {
    pub value: f64,
    pub vector: Vec<f64>,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
    /// Successive estimates of the power iteration (empty otherwise).
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormingCertificate {
    pub u: CoordVector,
    #[serde(rename = "normValue")]
    pub norm_value: f64,
    #[serde(rename = "residualNorming")]
    pub residual_norming: f64,
    #[serde(rename = "residualEigen")]
    pub residual_eigen: Option<f64>,
    pub support: SupportSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingCheck {
    pub norm: f64,
    /// `| ||Tu|| - ||T|| ||u|| |`.
    pub residual_norming: f64,
    /// `||T^*Tu - ||T||^2 u|| / ||u||`, only for `p = 2`.
    pub residual_eigen: Option<f64>,
    pub tolerance: f64,
    pub accepted: bool,
}

pub fn vector_norm(x: &CoordVector, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(p_norm(x.entries(), p))
}

/// Unit vector (in `l_p`) proportional to the indicator of `set`.
fn normalized_indicator(n: usize, set: &[usize], p: f64) -> Vec<f64> {
    let w = (set.len() as f64).powf(-1.0 / p);
    let mut v = vec![0.0; n];
    for &i in set {
        v[i] = w;
    }
    v
}

fn normalize(v: &mut [f64], p: f64) {
    let n = p_norm(v, p);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

pub fn block_norm(block: &Matrix, p: f64) -> Result<BlockNorm> {
    block_norm_with(block, p, POWER_MAX_ITERATIONS)
}

/// [`block_norm`] with an explicit iteration cap for the `p != 2` path.
pub fn block_norm_with(block: &Matrix, p: f64, max_iterations: usize) -> Result<BlockNorm> {
    check_exponent(p)?;
    let n = block.cols();
    if block.is_diagonal() {
        let dmax = (0..n).fold(0.0f64, |m, i| m.max(block[(i, i)].abs()));
        let top: Vec<usize> = (0..n).filter(|&i| block[(i, i)].abs() == dmax).collect();
        return Ok(BlockNorm {
            value: dmax,
            vector: normalized_indicator(n, &top, p),
            method: NormMethod::DiagonalClosedForm,
            iterations: 0,
            residual: 0.0,
            trace: Vec::new(),
        });
    }
    if p == 2.0 {
        Ok(spectral_norm(block))
    } else {
        boyd_iteration(block, p, max_iterations)
    }
}

/// Largest singular value via a Jacobi eigensolve of `B^T B`.
///
/// A degenerate top eigenspace is resolved by projecting the all-ones vector
/// onto it, which is the limit of power iteration from all-ones and is
/// entrywise nonnegative for nonnegative `B`.
fn spectral_norm(block: &Matrix) -> BlockNorm {
    let n = block.cols();
    let eig = symmetric_eigen(&block.gram());
    let lambda = eig.values[0].max(0.0);
    let mut u = vec![0.0; n];
    for k in (0..n).take_while(|&k| eig.values[k] >= lambda - EIGEN_CLUSTER * lambda) {
        let v = eig.vector(k);
        let c: f64 = v.iter().sum();
        for (ui, vi) in u.iter_mut().zip(&v) {
            *ui += c * vi;
        }
    }
    let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        // All-ones orthogonal to the top eigenspace; only possible with
        // signed data. Fall back to the leading eigenvector's modulus.
        u = eig.vector(0).iter().map(|x| x.abs()).collect();
    }
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    // Rounding noise around structural zeros.
    let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for x in u.iter_mut() {
        if *x < 1e-15 * scale {
            *x = 0.0;
        }
    }
    normalize(&mut u, 2.0);
    BlockNorm {
        value: lambda.sqrt(),
        vector: u,
        method: NormMethod::SymmetricEigen,
        iterations: eig.sweeps,
        residual: eig.off_diagonal,
        trace: Vec::new(),
    }
}

fn psi(x: f64, e: f64) -> f64 {
    x.signum() * x.abs().powf(e)
}

/// Boyd's nonlinear power iteration for `||B||_{p -> p}` on nonnegative data.
///
/// Starting from normalized all-ones, iterates
/// `x <- psi_q(B^T psi_p(B x))` normalized in `l_p`, where `psi_s(t) =
/// sign(t)|t|^{s-1}` and `q` is the conjugate exponent. Stops when the
/// relative change of `||Bx||_p` drops below [`POWER_TOLERANCE`].
pub fn boyd_iteration(block: &Matrix, p: f64, max_iterations: usize) -> Result<BlockNorm> {
    check_exponent(p)?;
    let n = block.cols();
    let q = p / (p - 1.0);
    let mut x = vec![1.0; n];
    normalize(&mut x, p);
    let mut estimate = p_norm(&block.mul_vec(&x), p);
    let mut trace = vec![estimate];
    if estimate == 0.0 {
        return Ok(BlockNorm {
            value: 0.0,
            vector: x,
            method: NormMethod::PPowerIteration,
            iterations: 0,
            residual: 0.0,
            trace,
        });
    }
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        let y = block.mul_vec(&x);
        let ny = p_norm(&y, p);
        let yp: Vec<f64> = y.iter().map(|&t| psi(t / ny, p - 1.0)).collect();
        let z = block.tr_mul_vec(&yp);
        let mut next: Vec<f64> = z.iter().map(|&t| psi(t, q - 1.0)).collect();
        normalize(&mut next, p);
        let next_estimate = p_norm(&block.mul_vec(&next), p);
        residual = (next_estimate - estimate).abs() / next_estimate;
        trace.push(next_estimate);
        // Keep the best iterate; the sequence is monotone up to rounding.
        if next_estimate >= estimate {
            x = next;
            estimate = next_estimate;
        }
        if residual < POWER_TOLERANCE {
            return Ok(BlockNorm {
                value: estimate,
                vector: x,
                method: NormMethod::PPowerIteration,
                iterations: it,
                residual,
                trace,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        estimate,
        residual,
    })
}

pub fn operator_norm(t: &OperatorModel) -> Result<NormResult> {
    operator_norm_with(t, POWER_MAX_ITERATIONS)
}

pub fn operator_norm_with(t: &OperatorModel, max_iterations: usize) -> Result<NormResult> {
    let bn = block_norm_with(t.block(), t.p(), max_iterations)?;
    let tail_sup = t.tail().sup();
    let u = || CoordVector::from_finite(bn.vector.clone());
    let (value, attained) = match t.tail() {
        TailModel::Zero => (bn.value, Attainment::Attained(u())),
        TailModel::Identity => {
            if bn.value > tail_sup {
                (bn.value, Attainment::Attained(u()))
            } else {
                (tail_sup, Attainment::TailAttained(t.block_dim()))
            }
        }
        TailModel::GeometricDiagonal(_) => {
            if bn.value >= tail_sup * (1.0 - TIE_TOLERANCE) {
                (bn.value.max(tail_sup), Attainment::Attained(u()))
            } else {
                (tail_sup, Attainment::NotAttained)
            }
        }
    };
    Ok(NormResult {
        value,
        method: bn.method,
        iterations: bn.iterations,
        residual: bn.residual,
        attained,
    })
}

pub fn norming_vector(t: &OperatorModel) -> Result<NormingCertificate> {
    let norm = operator_norm(t)?;
    let u = match norm.attained {
        Attainment::Attained(u) => u,
        Attainment::TailAttained(k) => CoordVector::basis(k),
        Attainment::NotAttained => return Err(Error::NotAttained),
    };
    let check = check_against(t, norm.value, &u, VERIFY_TOLERANCE);
    Ok(NormingCertificate {
        support: u.support(),
        u,
        norm_value: norm.value,
        residual_norming: check.residual_norming,
        residual_eigen: check.residual_eigen,
    })
}

fn check_against(t: &OperatorModel, norm: f64, u: &CoordVector, tolerance: f64) -> NormingCheck {
    let p = t.p();
    let un = u.p_norm_unchecked(p);
    let tu = t.apply(u);
    let residual_norming = (tu.p_norm_unchecked(p) - norm * un).abs();
    let residual_eigen = (p == 2.0).then(|| {
        let w = t.adjoint().apply(&tu);
        w.combine(1.0, u, -norm * norm).p_norm_unchecked(2.0) / un
    });
    let accepted =
        residual_norming <= tolerance && residual_eigen.is_none_or(|r| r <= tolerance);
    NormingCheck {
        norm,
        residual_norming,
        residual_eigen,
        tolerance,
        accepted,
    }
}

/// Residuals of `u` as a norming vector of `T` at [`VERIFY_TOLERANCE`].
pub fn verify_norming(t: &OperatorModel, u: &CoordVector) -> Result<NormingCheck> {
    verify_norming_with(t, u, VERIFY_TOLERANCE)
}

pub fn verify_norming_with(
    t: &OperatorModel,
    u: &CoordVector,
    tolerance: f64,
) -> Result<NormingCheck> {
    if u.is_zero() {
        return Err(Error::precondition("norming candidate is the zero vector"));
    }
    let norm = operator_norm(t)?.value;
    Ok(check_against(t, norm, u, tolerance))
}

/// `Tu / ||Tu||`, a norming vector for `T^*` whenever `u` norms `T` (`p = 2`).
pub fn norming_from_image(t: &OperatorModel, u: &CoordVector) -> Result<CoordVector> {
    if t.p() != 2.0 {
        return Err(Error::Unsupported(
            "norming_from_image is defined on l_2 only".into(),
        ));
    }
    let check = verify_norming(t, u)?;
    if !check.accepted {
        return Err(Error::precondition(format!(
            "u is not norming (residuals {:e}, {:e})",
            check.residual_norming,
            check.residual_eigen.unwrap_or(0.0)
        )));
    }
    let tu = t.apply(u);
    let n = tu.p_norm_unchecked(2.0);
    if n == 0.0 {
        return Err(Error::precondition("Tu = 0"));
    }
    Ok(tu.scaled(1.0 / n))
}

/// `|x|`, which norms a positive `T` whenever `x` does.
pub fn modulus_norming(t: &OperatorModel, x: &CoordVector) -> Result<CoordVector> {
    if !t.is_positive() {
        return Err(Error::precondition("operator is not positive"));
    }
    let check = verify_norming(t, x)?;
    if !check.accepted {
        return Err(Error::precondition("x is not norming"));
    }
    Ok(x.modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TailModel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn op(p: f64, rows: &[Vec<f64>], tail: TailModel) -> OperatorModel {
        OperatorModel::from_rows(p, rows, tail).unwrap()
    }

    fn v(x: &[f64]) -> CoordVector {
        CoordVector::new(x.to_vec()).unwrap()
    }

    /// Max of `||Bx||_p` over a grid of the positive orthant of the unit
    /// sphere (enough for nonnegative `B`, by `||B|x||| >= ||Bx||`).
    fn grid_norm(b: &Matrix, p: f64, steps: usize) -> f64 {
        let n = b.cols();
        let mut best = 0.0f64;
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<f64> = idx.iter().map(|&k| k as f64 / steps as f64).collect();
            let nx = p_norm(&x, p);
            if nx > 0.0 {
                best = best.max(p_norm(&b.mul_vec(&x), p) / nx);
            }
            let mut d = 0;
            loop {
                if d == n {
                    return best;
                }
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    #[test]
    fn vector_norm_examples() {
        assert_eq!(vector_norm(&v(&[3.0, 4.0]), 2.0).unwrap(), 5.0);
        for p in [1.1, 2.0, 3.0, 7.5] {
            assert_abs_diff_eq!(vector_norm(&CoordVector::basis(7), p).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(
            vector_norm(&v(&[1.0, 1.0]), 3.0).unwrap(),
            2f64.powf(1.0 / 3.0),
            epsilon = 1e-15
        );
        assert!(matches!(
            vector_norm(&v(&[1.0]), 1.0),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn diagonal_norm() {
        let t = op(2.0, &[vec![0.5, 0.0], vec![0.0, 0.9]], TailModel::Zero);
        let r = operator_norm(&t).unwrap();
        assert_eq!(r.value, 0.9);
        assert_eq!(r.method, NormMethod::DiagonalClosedForm);
        assert_eq!(r.attained, Attainment::Attained(CoordVector::basis(1)));
        assert_eq!(norming_vector(&t).unwrap().u, CoordVector::basis(1));
    }

    #[test]
    fn half_ones_has_norm_one_for_all_p() {
        for p in [1.2, 1.5, 2.0, 3.0, 6.0] {
            let t = op(p, &[vec![0.5, 0.5], vec![0.5, 0.5]], TailModel::Zero);
            let r = operator_norm(&t).unwrap();
            assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
            let Attainment::Attained(u) = r.attained else { panic!() };
            assert_abs_diff_eq!(u.get(0), u.get(1), epsilon = 1e-12);
        }
    }

    #[test]
    fn geometric_tail_not_attained() {
        let t = op(2.0, &[vec![0.5]], TailModel::geometric(0.5, 0.9).unwrap());
        let r = operator_norm(&t).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.attained, Attainment::NotAttained);
        assert_eq!(norming_vector(&t).unwrap_err(), Error::NotAttained);
    }

    #[test]
    fn geometric_tail_tie_is_block_attained() {
        let t = op(2.0, &[vec![1.0]], TailModel::geometric(0.5, 0.9).unwrap());
        let r = operator_norm(&t).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.attained, Attainment::Attained(CoordVector::basis(0)));
    }

    #[test]
    fn single_column_norming() {
        let t = op(2.0, &[vec![0.6, 0.0], vec![0.8, 0.0]], TailModel::Zero);
        let c = norming_vector(&t).unwrap();
        assert_abs_diff_eq!(c.norm_value, 1.0, epsilon = 1e-14);
        assert_eq!(c.u, CoordVector::basis(0));
    }

    #[test]
    fn identity_tail_attainment() {
        let t = op(2.0, &[vec![0.5]], TailModel::Identity);
        let r = operator_norm(&t).unwrap();
        assert_eq!(r.attained, Attainment::TailAttained(1));
        let c = norming_vector(&t).unwrap();
        assert_eq!(c.u, CoordVector::basis(1));
        assert_eq!(c.residual_norming, 0.0);
    }

    #[test]
    fn verify_examples() {
        let id = op(2.0, &[vec![1.0, 0.0], vec![0.0, 1.0]], TailModel::Zero);
        let c = verify_norming(&id, &v(&[0.6, 0.8])).unwrap();
        assert!(c.accepted);
        assert_eq!(c.residual_norming, 0.0);

        let d = op(2.0, &[vec![0.5, 0.0], vec![0.0, 0.9]], TailModel::Zero);
        let c = verify_norming(&d, &CoordVector::basis(1)).unwrap();
        assert_eq!((c.residual_norming, c.residual_eigen), (0.0, Some(0.0)));
        assert!(!verify_norming(&d, &CoordVector::basis(0)).unwrap().accepted);

        let h = op(2.0, &[vec![0.5, 0.5], vec![0.5, 0.5]], TailModel::Zero);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = verify_norming(&h, &v(&[s, s])).unwrap();
        assert!(c.residual_norming <= 1e-12 && c.residual_eigen.unwrap() <= 1e-12);
        assert!(verify_norming(&h, &v(&[0.0])).is_err());
    }

    #[test]
    fn image_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = op(2.0, &[vec![0.5, 0.5], vec![0.5, 0.5]], TailModel::Zero);
        let w = norming_from_image(&h, &v(&[s, s])).unwrap();
        assert_abs_diff_eq!(w.get(0), s, epsilon = 1e-15);
        assert_abs_diff_eq!(w.get(1), s, epsilon = 1e-15);

        let n = op(2.0, &[vec![0.0, 1.0], vec![0.0, 0.0]], TailModel::Zero);
        let w = norming_from_image(&n, &CoordVector::basis(1)).unwrap();
        assert_eq!(w, CoordVector::basis(0));
        assert!(verify_norming(&n.adjoint(), &w).unwrap().accepted);

        let d = op(2.0, &[vec![0.5, 0.0], vec![0.0, 0.9]], TailModel::Zero);
        assert_eq!(
            norming_from_image(&d, &CoordVector::basis(1)).unwrap(),
            CoordVector::basis(1)
        );
        assert!(norming_from_image(&d, &CoordVector::basis(0)).is_err());
        assert!(matches!(
            norming_from_image(&d.with_exponent(3.0).unwrap(), &CoordVector::basis(1)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn modulus_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = op(2.0, &[vec![0.5, 0.5], vec![0.5, 0.5]], TailModel::Zero);
        let m = modulus_norming(&h, &v(&[-s, -s])).unwrap();
        assert_eq!(m, v(&[s, s]));
        assert!(verify_norming(&h, &m).unwrap().accepted);
        let pos = v(&[s, s]);
        assert_eq!(modulus_norming(&h, &pos).unwrap(), pos);

        let d = op(2.0, &[vec![0.9, 0.0], vec![0.0, 0.9]], TailModel::Zero);
        let m = modulus_norming(&d, &v(&[0.6, -0.8])).unwrap();
        assert_eq!(m, v(&[0.6, 0.8]));
        assert_eq!(m.support(), v(&[0.6, -0.8]).support());
    }

    #[test]
    fn degenerate_top_eigenspace_is_nonnegative() {
        // Two identical disjoint blocks: the top eigenspace is 2-dimensional.
        let b = Matrix::from_rows(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        let bn = block_norm(&b, 2.0).unwrap();
        assert_abs_diff_eq!(bn.value, 1.0, epsilon = 1e-12);
        for &x in &bn.vector {
            assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_oracle_p2() {
        let b = Matrix::from_rows(&[vec![0.3, 0.7, 0.1], vec![0.2, 0.0, 0.5], vec![0.9, 0.4, 0.2]])
            .unwrap();
        let bn = block_norm(&b, 2.0).unwrap();
        let g = grid_norm(&b, 2.0, 60);
        assert!(g <= bn.value + 1e-12);
        assert!(bn.value - g < 1e-3);
    }

    #[test]
    fn direct_sum_law() {
        let b = Matrix::from_rows(&[vec![0.3, 0.2], vec![0.1, 0.4]]).unwrap();
        let t = OperatorModel::new(2.0, b, TailModel::geometric(0.6, 0.8).unwrap()).unwrap();
        let full = operator_norm(&t).unwrap().value;
        assert_eq!(full, 1.0);
        let mut prev = 0.0;
        for n in 1..40 {
            let c = block_norm(&t.corner(n), 2.0).unwrap().value;
            assert!(c >= prev - 1e-15 && c <= full);
            prev = c;
        }
        assert!(full - prev < 1e-3);
    }

    fn block_strategy(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(0.0..1.0f64, n * n)
            .prop_map(move |d| Matrix::from_fn(n, n, |i, j| d[i * n + j]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn power_iteration_matches_grid(b in block_strategy(3), p in prop_oneof![Just(1.5), Just(3.0)]) {
            let bn = block_norm(&b, p).unwrap();
            let g = grid_norm(&b, p, 40);
            prop_assert!(g <= bn.value * (1.0 + 1e-12));
            prop_assert!(bn.value - g < 5e-3 * bn.value.max(1e-3));
            for w in bn.trace.windows(2) {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-14));
            }
        }

        #[test]
        fn eigen_residual_small(b in block_strategy(6)) {
            let t = OperatorModel::finite(2.0, b).unwrap();
            let c = norming_vector(&t).unwrap();
            prop_assert!(c.u.is_nonnegative());
            prop_assert!(c.residual_eigen.unwrap() <= 1e-8 * c.norm_value.powi(2).max(1e-300));
            prop_assert!((c.u.p_norm_unchecked(2.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn image_twice_norms_t(b in block_strategy(5)) {
            let t = OperatorModel::finite(2.0, b).unwrap();
            let u = norming_vector(&t).unwrap().u;
            let w = norming_from_image(&t, &u).unwrap();
            let back = norming_from_image(&t.adjoint(), &w).unwrap();
            prop_assert!(verify_norming(&t, &back).unwrap().accepted);
        }
    }
}
