//! Free noncommutative polynomial algebra over symmetric variables.
//!
//! Words carry 1-based letters, the involution reverses them, and matrix
//! polynomials are finite word-indexed maps of μ×μ complex coefficient
//! blocks evaluated at Hermitian tuples through Kronecker products.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::mat::CMat;

/// A word in the free semigroup on letters 1..=g. The empty word is the unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(j: u8) -> Self {
        Word(vec![j])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Involution: reverse the letter sequence.
    pub fn adjoint(&self) -> Word {
        let mut v = self.0.clone();
        v.reverse();
        Word(v)
    }

    pub fn is_palindrome(&self) -> bool {
        let v = &self.0;
        (0..v.len() / 2).all(|i| v[i] == v[v.len() - 1 - i])
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Graded-lexicographic representative of the pair {w, w*}.
    pub fn canonical(&self) -> Word {
        let a = self.adjoint();
        if a < *self {
            a
        } else {
            self.clone()
        }
    }

    /// Evaluate the word at a tuple of square matrices of common size.
    pub fn evaluate(&self, x: &[CMat]) -> CMat {
        let n = x.first().map(|m| m.rows).unwrap_or(1);
        let mut acc = CMat::identity(n);
        for &l in &self.0 {
            acc = acc.matmul(&x[(l - 1) as usize]);
        }
        acc
    }
}

// Graded order: by length first, then lexicographically by letters.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl core::fmt::Display for Word {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "x{l}")?;
        }
        Ok(())
    }
}

/// All words of length ≤ `d` over `g` letters in graded-lex order, empty
/// word first. Count is Σ_{k=0..d} g^k.
pub fn enumerate_words(g: usize, d: usize) -> Vec<Word> {
    assert!(g >= 1, "need at least one variable");
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(layer.len() * g);
        for w in &layer {
            for j in 1..=g as u8 {
                let mut v = w.0.clone();
                v.push(j);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Matrix-coefficient free polynomial: finite map word → μ×μ complex block.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    mu: usize,
    g: usize,
    terms: BTreeMap<Word, CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FreeAlgError {
    CoefficientShape { word: String, rows: usize, cols: usize, mu: usize },
    LetterOutOfRange { word: String, g: usize },
    DimensionMismatch(String),
    NotSymmetric(String),
    BadGammaShape(String),
}

impl core::fmt::Display for FreeAlgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FreeAlgError::CoefficientShape { word, rows, cols, mu } => {
                write!(f, "coefficient of `{word}` is {rows}x{cols}, expected {mu}x{mu}")
            }
            FreeAlgError::LetterOutOfRange { word, g } => {
                write!(f, "word `{word}` uses a letter outside 1..={g}")
            }
            FreeAlgError::DimensionMismatch(s) => write!(f, "dimension mismatch: {s}"),
            FreeAlgError::NotSymmetric(s) => write!(f, "polynomial not symmetric: {s}"),
            FreeAlgError::BadGammaShape(s) => write!(f, "invalid gamma shape: {s}"),
        }
    }
}

impl core::error::Error for FreeAlgError {}

impl MatrixPolynomial {
    pub fn zero(mu: usize, g: usize) -> Self {
        MatrixPolynomial { mu, g, terms: BTreeMap::new() }
    }

    /// Scalar-coefficient constant c·1.
    pub fn constant(c: Complex64, g: usize) -> Self {
        let mut p = Self::zero(1, g);
        p.add_term(Word::empty(), CMat::scalar(c));
        p
    }

    /// The coordinate monomial x_j (scalar coefficient 1).
    pub fn variable(j: u8, g: usize) -> Self {
        assert!(j >= 1 && j as usize <= g);
        let mut p = Self::zero(1, g);
        p.add_term(Word::letter(j), CMat::scalar(Complex64::new(1.0, 0.0)));
        p
    }

    /// Scalar monomial c·w.
    pub fn monomial(w: Word, c: Complex64, g: usize) -> Self {
        let mut p = Self::zero(1, g);
        p.add_term(w, CMat::scalar(c));
        p
    }

    pub fn from_terms(
        mu: usize,
        g: usize,
        terms: impl IntoIterator<Item = (Word, CMat)>,
    ) -> Result<Self, FreeAlgError> {
        let mut p = Self::zero(mu, g);
        for (w, c) in terms {
            if c.rows != mu || c.cols != mu {
                return Err(FreeAlgError::CoefficientShape {
                    word: format!("{w}"),
                    rows: c.rows,
                    cols: c.cols,
                    mu,
                });
            }
            if w.0.iter().any(|&l| l == 0 || l as usize > g) {
                return Err(FreeAlgError::LetterOutOfRange { word: format!("{w}"), g });
            }
            p.add_term(w, c);
        }
        Ok(p)
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn num_vars(&self) -> usize {
        self.g
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &CMat)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &Word) -> CMat {
        self.terms.get(w).cloned().unwrap_or_else(|| CMat::zeros(self.mu, self.mu))
    }

    pub fn add_term(&mut self, w: Word, c: CMat) {
        assert_eq!((c.rows, c.cols), (self.mu, self.mu), "coefficient block size");
        let entry = self.terms.entry(w).or_insert_with(|| CMat::zeros(self.mu, self.mu));
        entry.add_scaled(&c, Complex64::new(1.0, 0.0));
        // prune exact zeros so degree stays honest
        let zero = entry.max_abs() == 0.0;
        if zero {
            let key: Vec<Word> = self
                .terms
                .iter()
                .filter(|(_, v)| v.max_abs() == 0.0)
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    /// Degree: longest word with a nonzero coefficient; 0 for the zero
    /// polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// p* = Σ conj(p_w) ⊗-transposed at the reversed word.
    pub fn adjoint(&self) -> MatrixPolynomial {
        let mut out = Self::zero(self.mu, self.g);
        for (w, c) in &self.terms {
            out.add_term(w.adjoint(), c.adjoint());
        }
        out
    }

    /// Exact comparison of stored coefficients against the adjoint.
    pub fn is_symmetric(&self) -> bool {
        for (w, c) in &self.terms {
            let other = self.coefficient(&w.adjoint());
            if other.adjoint() != *c {
                return false;
            }
        }
        true
    }

    pub fn add(&self, other: &MatrixPolynomial) -> MatrixPolynomial {
        assert_eq!(self.mu, other.mu);
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn scaled(&self, s: Complex64) -> MatrixPolynomial {
        let mut out = Self::zero(self.mu, self.g);
        for (w, c) in &self.terms {
            let mut cc = c.clone();
            cc.scale(s);
            out.add_term(w.clone(), cc);
        }
        out
    }

    /// Polynomial product (coefficient blocks multiply, words concatenate).
    pub fn mul(&self, other: &MatrixPolynomial) -> MatrixPolynomial {
        assert_eq!(self.mu, other.mu);
        let mut out = Self::zero(self.mu, self.g.max(other.g));
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1.matmul(c2));
            }
        }
        out
    }

    /// Kronecker evaluation p(X) = Σ p_w ⊗ w(X) ∈ M_{μn}.
    pub fn evaluate(&self, x: &[CMat]) -> Result<CMat, FreeAlgError> {
        if x.len() != self.g {
            return Err(FreeAlgError::DimensionMismatch(format!(
                "polynomial in {} variables evaluated at {}-tuple",
                self.g,
                x.len()
            )));
        }
        let n = x.first().map(|m| m.rows).unwrap_or(1);
        for m in x {
            if m.rows != n || m.cols != n {
                return Err(FreeAlgError::DimensionMismatch(format!(
                    "tuple entries must share size {n}"
                )));
            }
        }
        let mut acc = CMat::zeros(self.mu * n, self.mu * n);
        for (w, c) in &self.terms {
            let wx = w.evaluate(x);
            acc.add_scaled(&c.kron(&wx), Complex64::new(1.0, 0.0));
        }
        Ok(acc)
    }

    /// True when every stored coefficient has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.max_imag() == 0.0)
    }
}

/// Tuple Γ = (γ₁,…,γ_r) of scalar symmetric free polynomials whose first g
/// entries are the coordinate monomials. Determines the geometry of
/// Γ-convexity.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaShape {
    g: usize,
    gammas: Vec<MatrixPolynomial>,
    delta: usize,
}

impl GammaShape {
    /// Build from the full list (γ₁,…,γ_r). The first `g` entries must be
    /// x₁,…,x_g, every entry scalar (μ=1) and symmetric.
    pub fn new(g: usize, gammas: Vec<MatrixPolynomial>) -> Result<Self, FreeAlgError> {
        if gammas.len() < g {
            return Err(FreeAlgError::BadGammaShape(format!(
                "need r ≥ g = {g}, got r = {}",
                gammas.len()
            )));
        }
        for (j, gamma) in gammas.iter().enumerate() {
            if gamma.mu() != 1 {
                return Err(FreeAlgError::BadGammaShape(format!("γ_{} has μ ≠ 1", j + 1)));
            }
            if !gamma.is_symmetric() {
                return Err(FreeAlgError::BadGammaShape(format!("γ_{} not symmetric", j + 1)));
            }
            if j < g {
                let expect = MatrixPolynomial::variable((j + 1) as u8, g);
                // compare modulo variable-count bookkeeping
                let same = gamma.terms.len() == 1
                    && gamma.coefficient(&Word::letter((j + 1) as u8))
                        == CMat::scalar(Complex64::new(1.0, 0.0));
                if !same {
                    let _ = expect;
                    return Err(FreeAlgError::BadGammaShape(format!(
                        "γ_{} must be the coordinate monomial x_{}",
                        j + 1,
                        j + 1
                    )));
                }
            }
        }
        let delta = gammas.iter().map(|p| p.degree()).max().unwrap_or(0);
        Ok(GammaShape { g, gammas, delta })
    }

    /// Plain matrix convexity: Γ = (x₁,…,x_g).
    pub fn coordinates(g: usize) -> Self {
        let gammas = (1..=g as u8).map(|j| MatrixPolynomial::variable(j, g)).collect();
        Self::new(g, gammas).expect("coordinate shape is valid")
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn r(&self) -> usize {
        self.gammas.len()
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn gamma(&self, j: usize) -> &MatrixPolynomial {
        &self.gammas[j]
    }

    pub fn gammas(&self) -> &[MatrixPolynomial] {
        &self.gammas
    }

    /// True when every γ_j vanishes at the origin (no constant terms).
    pub fn vanishes_at_zero(&self) -> bool {
        self.gammas.iter().all(|p| p.coefficient(&Word::empty()).max_abs() == 0.0)
    }

    /// Φ_Γ(X) = (γ₁(X),…,γ_r(X)); the first g entries reproduce X.
    pub fn gamma_map(&self, x: &[CMat]) -> Result<Vec<CMat>, FreeAlgError> {
        if x.len() != self.g {
            return Err(FreeAlgError::DimensionMismatch(format!(
                "Γ over {} variables applied to {}-tuple",
                self.g,
                x.len()
            )));
        }
        self.gammas.iter().map(|gamma| gamma.evaluate(x)).collect()
    }

    pub fn is_real(&self) -> bool {
        self.gammas.iter().all(|p| p.is_real())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn herm2(a: f64, b: f64, c_: f64, d: f64) -> CMat {
        // [[a, b], [b, d]] slipping c_ in as the (1,0) element for asymmetric tests
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(a);
        m[(0, 1)] = c(b);
        m[(1, 0)] = c(c_);
        m[(1, 1)] = c(d);
        m
    }

    #[test]
    fn word_enumeration_matches_displayed_orders() {
        let w = enumerate_words(2, 2);
        assert_eq!(w.len(), 7); // the 7×7 truncated Hankel at g=2, d=2
        assert_eq!(w[0], Word::empty());
        assert_eq!(w[1], Word(vec![1]));
        assert_eq!(w[2], Word(vec![2]));
        assert_eq!(w[3], Word(vec![1, 1]));
        assert_eq!(w[6], Word(vec![2, 2]));
        assert_eq!(enumerate_words(2, 3).len(), 15); // the 15×15 at d=3
        assert_eq!(enumerate_words(1, 0), vec![Word::empty()]);
    }

    #[test]
    fn involution_is_an_involution() {
        let w = Word(vec![1, 2, 2, 1, 2]);
        assert_eq!(w.adjoint().adjoint(), w);
        assert_eq!(Word(vec![1, 2]).adjoint(), Word(vec![2, 1]));
    }

    #[test]
    fn adjoint_of_monomials() {
        let p = MatrixPolynomial::monomial(Word(vec![1, 2]), c(1.0), 2);
        let q = p.adjoint();
        assert_eq!(q.coefficient(&Word(vec![2, 1])), CMat::scalar(c(1.0)));
        assert!(q.coefficient(&Word(vec![1, 2])).max_abs() == 0.0);
        assert_eq!(q.adjoint(), p);

        // i·x₁ adjoints to −i·x₁
        let p = MatrixPolynomial::monomial(Word(vec![1]), Complex64::new(0.0, 1.0), 1);
        let q = p.adjoint();
        assert_eq!(q.coefficient(&Word(vec![1])), CMat::scalar(Complex64::new(0.0, -1.0)));
    }

    #[test]
    fn symmetry_checks() {
        let x1x2 = MatrixPolynomial::monomial(Word(vec![1, 2]), c(1.0), 2);
        assert!(!x1x2.is_symmetric());
        let sym = x1x2.add(&MatrixPolynomial::monomial(Word(vec![2, 1]), c(1.0), 2));
        assert!(sym.is_symmetric());
        let tv = tv_screen();
        assert!(tv.is_symmetric());
    }

    fn tv_screen() -> MatrixPolynomial {
        // 1 - x² - y⁴
        MatrixPolynomial::constant(c(1.0), 2)
            .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), 2))
            .add(&MatrixPolynomial::monomial(Word(vec![2, 2, 2, 2]), c(-1.0), 2))
    }

    #[test]
    fn evaluate_matches_direct_products() {
        let p = MatrixPolynomial::monomial(Word(vec![1, 2]), c(1.0), 2);
        let x1 = herm2(0.0, 1.0, 1.0, 0.0);
        let x2 = herm2(1.0, 0.0, 0.0, -1.0);
        let v = p.evaluate(&[x1, x2]).unwrap();
        assert_eq!(v[(0, 0)], c(0.0));
        assert_eq!(v[(0, 1)], c(-1.0));
        assert_eq!(v[(1, 0)], c(1.0));
        assert_eq!(v[(1, 1)], c(0.0));

        // constant evaluates to the identity
        let one = MatrixPolynomial::constant(c(1.0), 2);
        let id = one.evaluate(&[herm2(1.0, 0.0, 0.0, 1.0), herm2(0.0, 0.0, 0.0, 0.0)]).unwrap();
        assert_eq!(id, CMat::identity(2));

        // scalar evaluation of the TV screen
        let v = tv_screen()
            .evaluate(&[CMat::scalar(c(0.5)), CMat::scalar(c(0.5))])
            .unwrap();
        assert!((v[(0, 0)].re - 0.6875).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_mismatched_tuples() {
        let p = tv_screen();
        assert!(p.evaluate(&[CMat::scalar(c(0.5))]).is_err());
        let bad = vec![CMat::identity(2), CMat::identity(3)];
        assert!(p.evaluate(&bad).is_err());
    }

    fn y2_shape() -> GammaShape {
        let g = 2;
        let y2 = MatrixPolynomial::monomial(Word(vec![2, 2]), c(1.0), g);
        GammaShape::new(
            g,
            vec![
                MatrixPolynomial::variable(1, g),
                MatrixPolynomial::variable(2, g),
                y2,
            ],
        )
        .unwrap()
    }

    #[test]
    fn gamma_map_examples() {
        let shape = y2_shape();
        let a = herm2(1.0, 0.0, 0.0, -1.0);
        let b = herm2(0.0, 1.0, 1.0, 0.0);
        let img = shape.gamma_map(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(img[0], a);
        assert_eq!(img[1], b);
        assert_eq!(img[2], b.matmul(&b));
        assert!(shape.vanishes_at_zero());

        // Γ(0) = 0
        let zero = CMat::zeros(2, 2);
        let img = shape.gamma_map(&[zero.clone(), zero.clone()]).unwrap();
        for m in img {
            assert_eq!(m.max_abs(), 0.0);
        }
    }

    #[test]
    fn gamma_map_xy_shape() {
        // Γ = (x, y, xy+yx, i(xy−yx))
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
        let a = herm2(1.0, 0.0, 0.0, -1.0);
        let b = herm2(0.0, 1.0, 1.0, 0.0);
        let img = shape.gamma_map(&[a.clone(), b.clone()]).unwrap();
        let ab = a.matmul(&b);
        let ba = b.matmul(&a);
        let mut want2 = ab.clone();
        want2.add_scaled(&ba, c(1.0));
        assert_eq!(img[2], want2);
        let mut want3 = ab;
        want3.scale(Complex64::new(0.0, 1.0));
        want3.add_scaled(&ba, Complex64::new(0.0, -1.0));
        assert_eq!(img[3], want3);
        // both images are Hermitian
        assert!(img[2].herm_deviation() < 1e-15);
        assert!(img[3].herm_deviation() < 1e-15);
    }

    #[test]
    fn rejects_bad_gamma_shapes() {
        let g = 2;
        // first slot not x₁
        let bad = GammaShape::new(
            g,
            vec![MatrixPolynomial::variable(2, g), MatrixPolynomial::variable(2, g)],
        );
        assert!(bad.is_err());
        // asymmetric extra polynomial
        let bad = GammaShape::new(
            g,
            vec![
                MatrixPolynomial::variable(1, g),
                MatrixPolynomial::variable(2, g),
                MatrixPolynomial::monomial(Word(vec![1, 2]), c(1.0), g),
            ],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn zero_polynomial_conventions() {
        let z = MatrixPolynomial::zero(1, 2);
        assert_eq!(z.degree(), 0);
        let v = z.evaluate(&[CMat::identity(2), CMat::identity(2)]).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        assert_eq!(v.rows, 2);
    }
}
