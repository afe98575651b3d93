//! Γ-moment sequences and their matrices: canonical moments of Γ-pairs,
//! truncated free Γ-Hankel and localizing matrices, the affine Γ-moment
//! relations, sequence validation and flatness detection.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::freealg::{enumerate_words, GammaShape, MatrixPolynomial, Word};
use crate::hermlin::{self, HermTuple, HermitianMatrix};
use crate::mat::CMat;

#[derive(Clone, Debug, PartialEq)]
pub enum MomentError {
    InsufficientDegree { have: usize, need: usize },
    DimensionMismatch(String),
    AsymmetricPolynomial,
    MissingAnchor,
    NotIsometry { deviation: f64 },
    MissingMoment(String),
}

impl core::fmt::Display for MomentError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MomentError::InsufficientDegree { have, need } => {
                write!(f, "moment sequence holds degree ≤ {have}, operation needs {need}")
            }
            MomentError::DimensionMismatch(s) => write!(f, "dimension mismatch: {s}"),
            MomentError::AsymmetricPolynomial => write!(f, "polynomial must be symmetric"),
            MomentError::MissingAnchor => write!(f, "fixed-anchor mode needs an anchor tuple"),
            MomentError::NotIsometry { deviation } => {
                write!(f, "V fails the isometry check (deviation {deviation:e})")
            }
            MomentError::MissingMoment(w) => write!(f, "moment for word `{w}` not stored"),
        }
    }
}

impl core::error::Error for MomentError {}

/// Word index for truncated moment sequences: every word of length ≤ D is
/// mapped to its canonical representative (the graded-lex smaller of
/// {w, w*}); palindromes are flagged, their moments must be Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentIndex {
    g: usize,
    max_degree: usize,
    reps: Vec<Word>,
    lookup: BTreeMap<Word, (usize, bool)>,
}

impl MomentIndex {
    pub fn new(g: usize, max_degree: usize) -> Self {
        let words = enumerate_words(g, max_degree);
        let mut reps = Vec::new();
        let mut lookup = BTreeMap::new();
        for w in words {
            if lookup.contains_key(&w) {
                continue;
            }
            let rep = w.canonical();
            let idx = reps.len();
            if rep == w {
                reps.push(w.clone());
                lookup.insert(w.clone(), (idx, false));
                let adj = w.adjoint();
                if adj != w {
                    lookup.insert(adj, (idx, true));
                }
            }
        }
        MomentIndex { g, max_degree, reps, lookup }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn representatives(&self) -> &[Word] {
        &self.reps
    }

    /// (representative position, whether the word is the adjoint side).
    pub fn locate(&self, w: &Word) -> Option<(usize, bool)> {
        self.lookup.get(w).copied()
    }

    pub fn is_palindrome_rep(&self, idx: usize) -> bool {
        self.reps[idx].is_palindrome()
    }
}

/// Word-indexed family Y_α of n×n matrices with Y_∅ = I and adjoint
/// symmetry baked into the representative storage.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    index: MomentIndex,
    n: usize,
    values: BTreeMap<Word, CMat>,
}

impl MomentSequence {
    /// Start a sequence with Y_∅ = I and all other moments unset.
    pub fn new(index: MomentIndex, n: usize) -> Self {
        let mut values = BTreeMap::new();
        values.insert(Word::empty(), CMat::identity(n));
        MomentSequence { index, n, values }
    }

    pub fn index(&self) -> &MomentIndex {
        &self.index
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Set the moment at a word (stored under its representative; the
    /// adjoint side is derived on read).
    pub fn set(&mut self, w: Word, value: CMat) {
        assert_eq!((value.rows, value.cols), (self.n, self.n));
        let rep = w.canonical();
        let v = if rep == w { value } else { value.adjoint() };
        self.values.insert(rep, v);
    }

    /// Store a value bypassing representative canonicalization entirely;
    /// only used by tests and fixture loaders that need to inject defects.
    pub fn set_raw(&mut self, w: Word, value: CMat) {
        self.values.insert(w, value);
    }

    /// Fetch Y_w, deriving the adjoint side when only the representative is
    /// stored.
    pub fn get(&self, w: &Word) -> Option<CMat> {
        let rep = w.canonical();
        let stored = self.values.get(&rep)?;
        if rep == *w {
            Some(stored.clone())
        } else {
            Some(stored.adjoint())
        }
    }

    pub fn get_required(&self, w: &Word) -> Result<CMat, MomentError> {
        self.get(w).ok_or_else(|| MomentError::MissingMoment(format!("{w}")))
    }

    /// Ŷ = (Y_{x₁},…,Y_{x_g}).
    pub fn degree_one(&self) -> Result<Vec<CMat>, MomentError> {
        (1..=self.index.g as u8).map(|j| self.get_required(&Word::letter(j))).collect()
    }

    pub fn stored_words(&self) -> impl Iterator<Item = (&Word, &CMat)> {
        self.values.iter()
    }
}

/// Canonical moments Y_α = V* Z^α V of a tuple compressed by an isometry.
pub fn canonical_moments(z: &HermTuple, v: &CMat, d: usize) -> Result<MomentSequence, MomentError> {
    let big_n = z.n();
    if v.rows != big_n {
        return Err(MomentError::DimensionMismatch(format!(
            "V has {} rows, tuple size is {big_n}",
            v.rows
        )));
    }
    let dev = hermlin::isometry_deviation(v);
    if dev > 1e-8 * (1.0 + hermlin::tuple_norm(&z.mats())) {
        return Err(MomentError::NotIsometry { deviation: dev });
    }
    let n = v.cols;
    let index = MomentIndex::new(z.g(), d);
    let mut seq = MomentSequence::new(index.clone(), n);
    let zmats = z.mats();
    // word values Z^α by extension, reused across representatives
    let mut word_vals: BTreeMap<Word, CMat> = BTreeMap::new();
    word_vals.insert(Word::empty(), CMat::identity(big_n));
    for w in enumerate_words(z.g(), d) {
        if w.is_empty() {
            continue;
        }
        let head = (w.0[0] - 1) as usize;
        let tail = Word(w.0[1..].to_vec());
        let val = zmats[head].matmul(&word_vals[&tail]);
        word_vals.insert(w.clone(), val);
    }
    let vstar = v.adjoint();
    for rep in index.representatives() {
        if rep.is_empty() {
            continue;
        }
        let y = vstar.matmul(&word_vals[rep]).matmul(v);
        seq.set(rep.clone(), y);
    }
    Ok(seq)
}

/// Truncated free Γ-Hankel matrix H_d(Y) = (Y_{α*β})_{|α|,|β|≤d}.
pub fn hankel(y: &MomentSequence, d: usize) -> Result<HermitianMatrix, MomentError> {
    if y.index.max_degree < 2 * d {
        return Err(MomentError::InsufficientDegree { have: y.index.max_degree, need: 2 * d });
    }
    let words = enumerate_words(y.index.g, d);
    let n = y.n;
    let mut h = CMat::zeros(words.len() * n, words.len() * n);
    for (a, wa) in words.iter().enumerate() {
        for (b, wb) in words.iter().enumerate() {
            let w = wa.adjoint().concat(wb);
            let m = y.get_required(&w)?;
            for i in 0..n {
                for j in 0..n {
                    h[(a * n + i, b * n + j)] = m[(i, j)];
                }
            }
        }
    }
    HermitianMatrix::new(h).map_err(|e| MomentError::DimensionMismatch(format!("{e}")))
}

/// d-truncated localizing matrix H↑_{p,d}(Y) with μn×μn blocks
/// Σ_{|γ|≤deg p} p_γ ⊗ Y_{α*γβ}.
pub fn localizing(
    y: &MomentSequence,
    p: &MatrixPolynomial,
    d: usize,
) -> Result<HermitianMatrix, MomentError> {
    if !p.is_symmetric() {
        return Err(MomentError::AsymmetricPolynomial);
    }
    let need = 2 * d + p.degree();
    if y.index.max_degree < need {
        return Err(MomentError::InsufficientDegree { have: y.index.max_degree, need });
    }
    let words = enumerate_words(y.index.g, d);
    let n = y.n;
    let mu = p.mu();
    let bs = mu * n;
    let mut h = CMat::zeros(words.len() * bs, words.len() * bs);
    for (a, wa) in words.iter().enumerate() {
        for (b, wb) in words.iter().enumerate() {
            let mut cell = CMat::zeros(bs, bs);
            for (gw, coef) in p.terms() {
                let w = wa.adjoint().concat(gw).concat(wb);
                let m = y.get_required(&w)?;
                cell.add_scaled(&coef.kron(&m), Complex64::new(1.0, 0.0));
            }
            for i in 0..bs {
                for j in 0..bs {
                    h[(a * bs + i, b * bs + j)] = cell[(i, j)];
                }
            }
        }
    }
    HermitianMatrix::new(h).map_err(|e| MomentError::DimensionMismatch(format!("{e}")))
}

/// One affine Γ-moment relation Σ_k γ_{j,k} Y_{m_{j,k}} = C_j.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaRelation {
    /// 0-based index j into the shape (only entries ≥ g generate relations)
    pub gamma_index: usize,
    pub terms: Vec<(Word, Complex64)>,
    /// fixed-anchor value; `None` in symbolic mode
    pub rhs: Option<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaConstraintSet {
    pub relations: Vec<GammaRelation>,
}

/// Build the Γ-moment relations for γ_{g+1},…,γ_r. In fixed-anchor mode the
/// right-hand sides are the constant matrices γ_j(X), making every relation
/// affine in the moment unknowns; in symbolic mode the relation structure
/// alone is returned (for pencil emission).
pub fn gamma_constraints(
    gamma: &GammaShape,
    anchor: Option<&HermTuple>,
    d: usize,
) -> Result<GammaConstraintSet, MomentError> {
    if gamma.delta() > d {
        return Err(MomentError::InsufficientDegree { have: d, need: gamma.delta() });
    }
    if let Some(x) = anchor {
        if x.g() != gamma.g() {
            return Err(MomentError::DimensionMismatch(format!(
                "anchor has {} entries, Γ needs {}",
                x.g(),
                gamma.g()
            )));
        }
    }
    let mut relations = Vec::new();
    for j in gamma.g()..gamma.r() {
        let gj = gamma.gamma(j);
        let terms: Vec<(Word, Complex64)> =
            gj.terms().map(|(w, c)| (w.clone(), c[(0, 0)])).collect();
        let rhs = match anchor {
            Some(x) => Some(
                gj.evaluate(&x.mats())
                    .map_err(|e| MomentError::DimensionMismatch(format!("{e}")))?,
            ),
            None => None,
        };
        relations.push(GammaRelation { gamma_index: j, terms, rhs });
    }
    Ok(GammaConstraintSet { relations })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    UnitMoment,
    PalindromeNotHermitian,
    GammaRelation { gamma_index: usize },
    NormBound { word: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// check ‖Y_α‖ ≤ k^{|α|} when supplied
    pub check_bound_k: Option<f64>,
    /// absolute tolerance floor; defaults to 1e−10
    pub tol: Option<f64>,
}

/// Check Y_∅ = I, Hermitian palindromes, the Γ-moment relations anchored at
/// the sequence's own Ŷ, and optionally the Archimedean norm bound.
/// Violations are data, not errors.
pub fn validate_moment_sequence(
    y: &MomentSequence,
    gamma: &GammaShape,
    options: ValidateOptions,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = options.tol.unwrap_or(1e-10);
    // unit
    if let Some(y0) = y.get(&Word::empty()) {
        let mut d = y0.clone();
        d.add_scaled(&CMat::identity(y.n), Complex64::new(-1.0, 0.0));
        let mag = d.max_abs();
        if mag > 0.0 {
            report.violations.push(Violation {
                kind: ViolationKind::UnitMoment,
                magnitude: mag,
                detail: "Y_1 differs from the identity".into(),
            });
        }
    }
    // palindrome Hermitian within 1e−10 scale
    for (w, v) in y.stored_words() {
        if w.is_palindrome() {
            let dev = v.herm_deviation();
            let scale = v.frobenius().max(1.0);
            if dev > tol.max(1e-10 * scale) {
                report.violations.push(Violation {
                    kind: ViolationKind::PalindromeNotHermitian,
                    magnitude: dev,
                    detail: format!("Y_{w} is not Hermitian"),
                });
            }
        }
    }
    // Γ relations anchored at the sequence's own Ŷ
    if let Ok(yhat) = y.degree_one() {
        if let Ok(tuple) = HermTuple::from_mats(yhat) {
            if let Ok(set) = gamma_constraints(gamma, Some(&tuple), y.index.max_degree) {
                for rel in &set.relations {
                    let mut lhs = CMat::zeros(y.n, y.n);
                    let mut missing = false;
                    for (w, c) in &rel.terms {
                        match y.get(w) {
                            Some(m) => lhs.add_scaled(&m, *c),
                            None => missing = true,
                        }
                    }
                    if missing {
                        continue;
                    }
                    let rhs = rel.rhs.as_ref().expect("fixed-anchor mode");
                    let mut diff = lhs;
                    diff.add_scaled(rhs, Complex64::new(-1.0, 0.0));
                    let mag = diff.max_abs();
                    let scale = rhs.frobenius().max(1.0);
                    if mag > tol.max(1e-10 * scale) {
                        report.violations.push(Violation {
                            kind: ViolationKind::GammaRelation { gamma_index: rel.gamma_index },
                            magnitude: mag,
                            detail: format!(
                                "γ_{} moment relation violated by {mag:e}",
                                rel.gamma_index + 1
                            ),
                        });
                    }
                }
            }
        }
    }
    // optional norm bound ‖Y_α‖ ≤ k^{|α|}
    if let Some(k) = options.check_bound_k {
        for (w, v) in y.stored_words() {
            let bound = libm::pow(k, w.len() as f64);
            let norm = {
                let (vals, _) = v.matmul(&v.adjoint()).eig_herm();
                libm::sqrt(vals.last().copied().unwrap_or(0.0).max(0.0))
            };
            if norm > bound * (1.0 + 1e-8) + tol {
                report.violations.push(Violation {
                    kind: ViolationKind::NormBound { word: format!("{w}") },
                    magnitude: norm - bound,
                    detail: format!("the norm {norm:e} of Y_{w} exceeds k^{} = {bound:e}", w.len()),
                });
            }
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatnessReport {
    pub flat: bool,
    pub rank_low: usize,
    pub rank_high: usize,
    pub eta: usize,
    pub drop: usize,
}

/// d-flatness: rank H_{η−d}(Y) = rank H_η(Y) at the given relative rank
/// tolerance.
pub fn is_flat(
    y: &MomentSequence,
    eta: usize,
    drop: usize,
    rel_tol: f64,
) -> Result<FlatnessReport, MomentError> {
    if drop > eta {
        return Err(MomentError::InsufficientDegree { have: eta, need: drop });
    }
    let high = hankel(y, eta)?;
    let low = hankel(y, eta - drop)?;
    let rank_high = high.numerical_rank(rel_tol);
    let rank_low = low.numerical_rank(rel_tol);
    Ok(FlatnessReport { flat: rank_low == rank_high, rank_low, rank_high, eta, drop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::MatrixPolynomial;
    use alloc::vec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn y2_shape() -> GammaShape {
        let g = 2;
        GammaShape::new(
            g,
            vec![
                MatrixPolynomial::variable(1, g),
                MatrixPolynomial::variable(2, g),
                MatrixPolynomial::monomial(Word(vec![2, 2]), c(1.0), g),
            ],
        )
        .unwrap()
    }

    fn scalar_tuple(vals: &[f64]) -> HermTuple {
        HermTuple::scalars(vals)
    }

    #[test]
    fn canonical_scalar_moments_are_powers() {
        let z = scalar_tuple(&[0.5, 0.5]);
        let v = CMat::identity(1);
        let y = canonical_moments(&z, &v, 4).unwrap();
        for (w, val) in y.stored_words() {
            let want = libm::pow(0.5, w.len() as f64);
            assert!((val[(0, 0)].re - want).abs() < 1e-14, "{w}");
        }
    }

    #[test]
    fn canonical_identity_compression_reproduces_tuple() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = c(1.0);
        a[(1, 0)] = c(1.0);
        let mut b = CMat::zeros(2, 2);
        b[(0, 0)] = c(1.0);
        b[(1, 1)] = c(-1.0);
        let z = HermTuple::from_mats(vec![a.clone(), b.clone()]).unwrap();
        let y = canonical_moments(&z, &CMat::identity(2), 3).unwrap();
        assert_eq!(y.get(&Word::letter(1)).unwrap(), a);
        assert_eq!(y.get(&Word::letter(2)).unwrap(), b);
        assert_eq!(y.get(&Word(vec![1, 2])).unwrap(), a.matmul(&b));
    }

    #[test]
    fn hankel_block_counts_match_displays() {
        let z = scalar_tuple(&[0.3, -0.4]);
        let y = canonical_moments(&z, &CMat::identity(1), 4).unwrap();
        let h2 = hankel(&y, 2).unwrap();
        assert_eq!(h2.n(), 7);
        let y = canonical_moments(&z, &CMat::identity(1), 6).unwrap();
        let h3 = hankel(&y, 3).unwrap();
        assert_eq!(h3.n(), 15);
        assert!(h3.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn hankel_degree_guard() {
        let z = scalar_tuple(&[0.3, -0.4]);
        let y = canonical_moments(&z, &CMat::identity(1), 3).unwrap();
        assert!(matches!(hankel(&y, 2), Err(MomentError::InsufficientDegree { .. })));
    }

    fn tv_screen() -> MatrixPolynomial {
        MatrixPolynomial::constant(c(1.0), 2)
            .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), 2))
            .add(&MatrixPolynomial::monomial(Word(vec![2, 2, 2, 2]), c(-1.0), 2))
    }

    #[test]
    fn localizing_level_zero_is_the_polynomial_moment() {
        // d = 0, p = 1 − x² − y⁴ → single block I − Y₁₁ − Y₂₂₂₂
        let z = scalar_tuple(&[0.5, 0.5]);
        let y = canonical_moments(&z, &CMat::identity(1), 4).unwrap();
        let loc = localizing(&y, &tv_screen(), 0).unwrap();
        assert_eq!(loc.n(), 1);
        let want = 1.0 - 0.25 - 0.0625;
        assert!((loc.as_mat()[(0, 0)].re - want).abs() < 1e-14);
    }

    #[test]
    fn localizing_direct_sum_polynomial() {
        // p = (1−2y²+x²)⊕(1−x²), d = 0 → diag(1−2Y₂₂+Y₁₁, 1−Y₁₁)
        let g = 2;
        let mut e = CMat::zeros(2, 2);
        e[(0, 0)] = c(1.0);
        e[(1, 1)] = c(1.0);
        let p = MatrixPolynomial::from_terms(
            2,
            g,
            vec![
                (Word::empty(), e),
                (Word(vec![2, 2]), {
                    let mut m = CMat::zeros(2, 2);
                    m[(0, 0)] = c(-2.0);
                    m
                }),
                (Word(vec![1, 1]), {
                    let mut m = CMat::zeros(2, 2);
                    m[(0, 0)] = c(1.0);
                    m[(1, 1)] = c(-1.0);
                    m
                }),
            ],
        )
        .unwrap();
        let z = scalar_tuple(&[0.6, 0.7]);
        let y = canonical_moments(&z, &CMat::identity(1), 2).unwrap();
        let loc = localizing(&y, &p, 0).unwrap();
        assert_eq!(loc.n(), 2);
        let y11 = 0.36;
        let y22 = 0.49;
        assert!((loc.as_mat()[(0, 0)].re - (1.0 - 2.0 * y22 + y11)).abs() < 1e-14);
        assert!((loc.as_mat()[(1, 1)].re - (1.0 - y11)).abs() < 1e-14);
        assert_eq!(loc.as_mat()[(0, 1)], c(0.0));
    }

    #[test]
    fn gamma_constraint_assembly() {
        let shape = y2_shape();
        // Γ=(x,y,y²) anchored at scalars → single relation Y_{yy} = y₀²
        let anchor = scalar_tuple(&[0.3, 0.7]);
        let set = gamma_constraints(&shape, Some(&anchor), 2).unwrap();
        assert_eq!(set.relations.len(), 1);
        let rel = &set.relations[0];
        assert_eq!(rel.terms, vec![(Word(vec![2, 2]), c(1.0))]);
        assert!((rel.rhs.as_ref().unwrap()[(0, 0)].re - 0.49).abs() < 1e-15);
        // r = g: empty set
        let plain = GammaShape::coordinates(2);
        let set = gamma_constraints(&plain, Some(&anchor), 1).unwrap();
        assert!(set.relations.is_empty());
    }

    #[test]
    fn gamma_constraint_xy_shape() {
        // Γ = (x,y,xy+yx,i(xy−yx)) anchored at matrices
        let g = 2;
        let xy = Word(vec![1, 2]);
        let yx = Word(vec![2, 1]);
        let sym = MatrixPolynomial::monomial(xy.clone(), c(1.0), g)
            .add(&MatrixPolynomial::monomial(yx.clone(), c(1.0), g));
        let anti = MatrixPolynomial::monomial(xy, Complex64::new(0.0, 1.0), g)
            .add(&MatrixPolynomial::monomial(yx, Complex64::new(0.0, -1.0), g));
        let shape = GammaShape::new(
            g,
            vec![
                MatrixPolynomial::variable(1, g),
                MatrixPolynomial::variable(2, g),
                sym,
                anti,
            ],
        )
        .unwrap();
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c(1.0);
        a[(1, 1)] = c(-1.0);
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = c(1.0);
        b[(1, 0)] = c(1.0);
        let anchor = HermTuple::from_mats(vec![a.clone(), b.clone()]).unwrap();
        let set = gamma_constraints(&shape, Some(&anchor), 2).unwrap();
        assert_eq!(set.relations.len(), 2);
        let ab = a.matmul(&b);
        let ba = b.matmul(&a);
        let mut want_sym = ab.clone();
        want_sym.add_scaled(&ba, c(1.0));
        assert_eq!(set.relations[0].rhs.as_ref().unwrap(), &want_sym);
        let mut want_anti = ab;
        want_anti.scale(Complex64::new(0.0, 1.0));
        want_anti.add_scaled(&ba, Complex64::new(0.0, -1.0));
        assert_eq!(set.relations[1].rhs.as_ref().unwrap(), &want_anti);
    }

    #[test]
    fn validation_accepts_canonical_and_flags_defects() {
        let shape = y2_shape();
        let z = scalar_tuple(&[0.5, -0.25]);
        let y = canonical_moments(&z, &CMat::identity(1), 4).unwrap();
        let report = validate_moment_sequence(&y, &shape, ValidateOptions::default());
        assert!(report.is_clean(), "{:?}", report.violations);

        // inject a non-Hermitian palindrome entry (needs n ≥ 2)
        let a = CMat::from_fn(2, 2, |i, j| if i == j { c(0.5) } else { c(0.1) });
        let b = CMat::from_fn(2, 2, |i, j| {
            if i == j {
                c(if i == 0 { 0.3 } else { -0.3 })
            } else {
                c(0.0)
            }
        });
        let z = HermTuple::from_mats(vec![a, b]).unwrap();
        let mut y = canonical_moments(&z, &CMat::identity(2), 4).unwrap();
        let mut bad = y.get(&Word(vec![1, 1])).unwrap();
        bad[(0, 1)] += Complex64::new(0.0, 1e-3);
        y.set_raw(Word(vec![1, 1]), bad);
        let report = validate_moment_sequence(&y, &shape, ValidateOptions::default());
        assert_eq!(
            report
                .violations
                .iter()
                .filter(|v| matches!(v.kind, ViolationKind::PalindromeNotHermitian))
                .count(),
            1
        );
    }

    #[test]
    fn norm_bound_check_respects_the_lift_bound() {
        let shape = y2_shape();
        let z = scalar_tuple(&[0.9, 0.8]);
        let y = canonical_moments(&z, &CMat::identity(1), 4).unwrap();
        let report = validate_moment_sequence(
            &y,
            &shape,
            ValidateOptions { check_bound_k: Some(1.0), tol: None },
        );
        assert!(report.is_clean());
        // k = 0.5 must flag degree-1 moments
        let report = validate_moment_sequence(
            &y,
            &shape,
            ValidateOptions { check_bound_k: Some(0.5), tol: None },
        );
        assert!(!report.is_clean());
    }

    #[test]
    fn flatness_scalar_canonical_always_rank_one() {
        let z = scalar_tuple(&[0.5, 0.5]);
        let y = canonical_moments(&z, &CMat::identity(1), 8).unwrap();
        for drop in 0..=2 {
            let rep = is_flat(&y, 4, drop, 1e-8).unwrap();
            assert!(rep.flat);
            assert_eq!(rep.rank_high, 1);
        }
    }

    #[test]
    fn flatness_rank_stabilizes_at_generated_subspace_dimension() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        let n = 3;
        let mut mk = |rng: &mut StdRng| {
            let mut m = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0)));
            m.hermitize();
            m
        };
        let z = HermTuple::from_mats(vec![mk(&mut rng), mk(&mut rng)]).unwrap();
        let y = canonical_moments(&z, &CMat::identity(n), 8).unwrap();
        // the Gram vectors α(Z)eᵢ live in ℂⁿ, so the rank saturates at n
        let rep = is_flat(&y, 4, 2, 1e-8).unwrap();
        assert!(rep.flat, "{rep:?}");
        assert_eq!(rep.rank_high, n);
    }

    #[test]
    fn random_entries_are_not_flat() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(9);
        let index = MomentIndex::new(2, 4);
        let mut y = MomentSequence::new(index.clone(), 1);
        for rep in index.representatives().to_vec() {
            if rep.is_empty() {
                continue;
            }
            y.set(rep, CMat::scalar(c(rng.gen_range(-1.0..1.0))));
        }
        let rep = is_flat(&y, 2, 1, 1e-8).unwrap();
        assert!(!rep.flat);
    }

    #[test]
    fn hankel_of_identity_compression_is_gram_psd() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(1..4);
            let mut mk = |rng: &mut StdRng| {
                let mut m = CMat::from_fn(n, n, |_, _| {
                    Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
                });
                m.hermitize();
                m
            };
            let z = HermTuple::from_mats(vec![mk(&mut rng), mk(&mut rng)]).unwrap();
            let y = canonical_moments(&z, &CMat::identity(n), 4).unwrap();
            let h = hankel(&y, 2).unwrap();
            let scale = h.as_mat().frobenius();
            assert!(h.min_eigenvalue() >= -1e-9 * scale.max(1.0));
        }
    }
}
