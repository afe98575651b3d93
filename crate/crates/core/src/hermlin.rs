//! Dense Hermitian linear algebra services: eigenvalues, PSD tests,
//! numerical rank, tuple norms, the complex-to-real embedding and isometry
//! checks. All decisions route through the symmetric eigensolvers in
//! [`crate::mat`]; Cholesky is available as a fast pre-check but the
//! eigenvalue verdict is authoritative.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::mat::{CMat, RMat};

/// Default relative tolerance for numerical rank decisions (flatness).
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-8;

/// Default PSD slack: min eigenvalue ≥ −tol with tol = 1e−9·max(1, ‖M‖).
pub fn psd_tolerance(scale: f64) -> f64 {
    1e-9 * scale.max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum HermlinError {
    NotHermitian { deviation: f64, tol: f64 },
    NonFinite,
    SizeMismatch(String),
    MalformedIsometry { rows: usize, cols: usize },
}

impl core::fmt::Display for HermlinError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HermlinError::NotHermitian { deviation, tol } => {
                write!(f, "matrix deviates from Hermitian symmetry by {deviation:e} > {tol:e}")
            }
            HermlinError::NonFinite => write!(f, "matrix has non-finite entries"),
            HermlinError::SizeMismatch(s) => write!(f, "size mismatch: {s}"),
            HermlinError::MalformedIsometry { rows, cols } => {
                write!(f, "isometry candidate is {rows}x{cols}; needs rows ≥ cols")
            }
        }
    }
}

impl core::error::Error for HermlinError {}

/// A square complex matrix certified Hermitian at construction
/// (symmetrize-and-check within 1e−10·scale).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    mat: CMat,
}

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self, HermlinError> {
        if !m.is_square() {
            return Err(HermlinError::SizeMismatch(format!("{}x{}", m.rows, m.cols)));
        }
        if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HermlinError::NonFinite);
        }
        let scale = m.frobenius().max(1.0);
        let dev = m.herm_deviation();
        let tol = 1e-10 * scale;
        if dev > tol {
            return Err(HermlinError::NotHermitian { deviation: dev, tol });
        }
        let mut mat = m;
        mat.hermitize();
        Ok(HermitianMatrix { mat })
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix { mat: CMat::identity(n) }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { mat: CMat::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.mat.rows
    }

    pub fn as_mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.mat.eig_herm().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.mat)
    }

    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.mat, rel_tol)
    }
}

/// Smallest eigenvalue of a Hermitian matrix (the PSD oracle:
/// `psd(M, tol) := min_eigenvalue(M) ≥ −tol`). The input is hermitized
/// first, so slightly asymmetric accumulations are tolerated.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.rows == 0 {
        return 0.0;
    }
    let (vals, _) = m.eig_herm();
    vals[0]
}

/// PSD test with the default tolerance 1e−9·max(1, ‖M‖).
pub fn is_psd(m: &CMat) -> bool {
    min_eigenvalue(m) >= -psd_tolerance(m.frobenius())
}

/// Number of singular values above rel_tol·σ₁. For Hermitian input the
/// singular values are |eigenvalues|; the zero matrix has rank 0.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let (vals, _) = m.eig_herm();
    let sigma: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Operator norm of the row block matrix (X₁ … X_g): the square root of the
/// largest eigenvalue of Σ X_j².
pub fn tuple_norm(x: &[CMat]) -> f64 {
    let n = match x.first() {
        Some(m) => m.rows,
        None => return 0.0,
    };
    let mut s = CMat::zeros(n, n);
    for m in x {
        s.add_scaled(&m.matmul(&m.adjoint()), Complex64::new(1.0, 0.0));
    }
    let (vals, _) = s.eig_herm();
    libm::sqrt(vals.last().copied().unwrap_or(0.0).max(0.0))
}

/// Standard real embedding [[Re M, −Im M], [Im M, Re M]]. M ⪰ 0 iff the
/// image is; eigenvalues double in multiplicity.
pub fn realify(m: &CMat) -> RMat {
    m.realify()
}

/// ‖V*V − I‖ ≤ tol. V must have at least as many rows as columns.
pub fn is_isometry(v: &CMat, tol: f64) -> Result<bool, HermlinError> {
    if v.rows < v.cols {
        return Err(HermlinError::MalformedIsometry { rows: v.rows, cols: v.cols });
    }
    Ok(isometry_deviation(v) <= tol)
}

/// Operator-norm deviation of V*V from the identity.
pub fn isometry_deviation(v: &CMat) -> f64 {
    let mut g = v.adjoint().matmul(v);
    for i in 0..g.rows {
        g[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    let (vals, _) = g.eig_herm();
    vals.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// HermTuple: a g-tuple of same-size Hermitian matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct HermTuple {
    blocks: Vec<HermitianMatrix>,
}

impl HermTuple {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Result<Self, HermlinError> {
        if let Some(first) = blocks.first() {
            let n = first.n();
            if blocks.iter().any(|b| b.n() != n) {
                return Err(HermlinError::SizeMismatch("tuple entries differ in size".into()));
            }
        }
        Ok(HermTuple { blocks })
    }

    pub fn from_mats(mats: Vec<CMat>) -> Result<Self, HermlinError> {
        Self::new(mats.into_iter().map(HermitianMatrix::new).collect::<Result<_, _>>()?)
    }

    pub fn scalars(values: &[f64]) -> Self {
        let blocks = values
            .iter()
            .map(|&v| HermitianMatrix::new(CMat::scalar(Complex64::new(v, 0.0))).unwrap())
            .collect();
        HermTuple { blocks }
    }

    pub fn g(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.first().map(|b| b.n()).unwrap_or(0)
    }

    pub fn block(&self, j: usize) -> &HermitianMatrix {
        &self.blocks[j]
    }

    pub fn mats(&self) -> Vec<CMat> {
        self.blocks.iter().map(|b| b.as_mat().clone()).collect()
    }

    pub fn norm(&self) -> f64 {
        tuple_norm(&self.mats())
    }

    pub fn is_real(&self) -> bool {
        self.blocks.iter().all(|b| b.as_mat().max_imag() == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rand_herm(n: usize, rng: &mut StdRng) -> CMat {
        let mut m = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        m.hermitize();
        m
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue(&CMat::identity(3)) - 1.0).abs() < 1e-14);
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(1.0);
        m[(0, 1)] = c(2.0);
        m[(1, 0)] = c(2.0);
        m[(1, 1)] = c(1.0);
        assert!((min_eigenvalue(&m) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bent_tv_screen_eigenvalue() {
        // p(t'X, t'Y) for p = 1 − x² − y⁶ at the paper's witness pair
        let tp = 0.865;
        let x = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(tp) } else { c(0.0) });
        let y = CMat::from_fn(2, 2, |_, _| c(tp * 0.5));
        let x2 = x.matmul(&x);
        let mut y6 = CMat::identity(2);
        for _ in 0..6 {
            y6 = y6.matmul(&y);
        }
        let mut p = CMat::identity(2);
        p.add_scaled(&x2, c(-1.0));
        p.add_scaled(&y6, c(-1.0));
        let lam = min_eigenvalue(&p);
        assert!((lam + 0.012306).abs() < 1e-5, "got {lam}");
    }

    #[test]
    fn numerical_rank_examples() {
        assert_eq!(numerical_rank(&CMat::zeros(3, 3), 1e-8), 0);
        // vv* has rank 1
        let v = CMat::from_fn(3, 1, |i, _| c((i + 1) as f64));
        let outer = v.matmul(&v.adjoint());
        assert_eq!(numerical_rank(&outer, 1e-8), 1);
        // diag(1, 1e−12) at rel_tol 1e−8
        let mut d = CMat::zeros(2, 2);
        d[(0, 0)] = c(1.0);
        d[(1, 1)] = c(1e-12);
        assert_eq!(numerical_rank(&d, 1e-8), 1);
    }

    #[test]
    fn rank_invariant_under_unitary_congruence() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(2..6);
            let r = rng.gen_range(1..=n);
            // build rank-r PSD then congruence by a random unitary
            let b = CMat::from_fn(n, r, |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let m = b.matmul(&b.adjoint());
            let h = rand_herm(n, &mut rng);
            let (_, q) = h.eig_herm();
            let m2 = q.adjoint().matmul(&m).matmul(&q);
            assert_eq!(numerical_rank(&m, 1e-8), numerical_rank(&m2, 1e-8));
        }
    }

    #[test]
    fn eigen_accuracy_on_synthetic_spectra() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(5..=40);
            let h = rand_herm(n, &mut rng);
            let (_, q) = h.eig_herm();
            let lambda: Vec<f64> = {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v
            };
            // M = Q Λ Q*
            let mut lam_m = CMat::zeros(n, n);
            for i in 0..n {
                lam_m[(i, i)] = c(lambda[i]);
            }
            let m = q.matmul(&lam_m).matmul(&q.adjoint());
            let scale = m.frobenius();
            let (vals, _) = m.eig_herm();
            for (got, want) in vals.iter().zip(lambda.iter()) {
                assert!((got - want).abs() <= 1e-9 * scale.max(1.0), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn realify_preserves_psd_both_ways() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.gen_range(1..5);
            let m = rand_herm(n, &mut rng);
            let r = realify(&m);
            let me = min_eigenvalue(&m);
            let re = r.min_eig_sym();
            assert!((me - re).abs() < 1e-10 * (1.0 + m.frobenius()));
        }
    }

    #[test]
    fn tuple_norm_examples() {
        let x = vec![CMat::identity(3)];
        assert!((tuple_norm(&x) - 1.0).abs() < 1e-12);
        let x = vec![CMat::identity(3), CMat::identity(3)];
        assert!((tuple_norm(&x) - libm::sqrt(2.0)).abs() < 1e-12);
    }

    #[test]
    fn isometry_checks() {
        // any unitary
        let mut rng = StdRng::seed_from_u64(5);
        let h = rand_herm(4, &mut rng);
        let (_, q) = h.eig_herm();
        assert!(is_isometry(&q, 1e-10).unwrap());
        // col(1/√2, 1/√2)
        let v = CMat::from_fn(2, 1, |_, _| c(1.0 / libm::sqrt(2.0)));
        assert!(is_isometry(&v, 1e-10).unwrap());
        // col(1, 1) is not an isometry
        let v = CMat::from_fn(2, 1, |_, _| c(1.0));
        assert!(!is_isometry(&v, 1e-10).unwrap());
        // wide matrices are malformed input
        let v = CMat::zeros(1, 2);
        assert!(is_isometry(&v, 1e-10).is_err());
    }

    #[test]
    fn hermitian_constructor_enforces_symmetry() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        m[(1, 0)] = c(0.5); // far from Hermitian
        assert!(HermitianMatrix::new(m).is_err());

        let mut almost = CMat::identity(2);
        almost[(0, 1)] = Complex64::new(0.3, 1e-13);
        almost[(1, 0)] = Complex64::new(0.3, -1e-13 + 1e-14);
        let h = HermitianMatrix::new(almost).unwrap();
        assert!(h.as_mat().herm_deviation() == 0.0);
    }
}
