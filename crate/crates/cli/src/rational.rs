//! Exact rational arithmetic for fixture verification: moment-constraint
//! equalities are checked in BigRational, and positive semidefiniteness can
//! be certified by an exact fraction-free LDLᵀ decomposition.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use gammahull_core::freealg::{GammaShape, Word};

/// Parse "p/q", an integer, or a decimal into f64.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        if d == 0.0 {
            return None;
        }
        return Some(n / d);
    }
    s.parse().ok()
}

/// Parse "p/q" or an integer into an exact rational. Decimals are accepted
/// when they have a finite binary-independent expansion (scaled by 10^k).
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = frac_part.len() as u32;
        let joined = format!("{int_part}{frac_part}");
        let n: BigInt = joined.parse().ok()?;
        let d = BigInt::from(10u32).pow(digits);
        return Some(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// Dense rational matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::from_integer(BigInt::from(1)));
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn from_strings(rows: &[Vec<String>]) -> Option<QMat> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut m = QMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return None;
            }
            for (j, s) in row.iter().enumerate() {
                m.set(i, j, parse_rational(s)?);
            }
        }
        Some(m)
    }

    pub fn matmul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k).clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + &a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &QMat) -> QMat {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn transpose(&self) -> QMat {
        let mut out = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (i..self.cols).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Exact PSD decision for a symmetric rational matrix via LDLᵀ with full
    /// zero-pivot handling: at a zero pivot the whole remaining row must be
    /// zero, otherwise the matrix is indefinite.
    pub fn is_psd(&self) -> bool {
        assert!(self.is_symmetric(), "PSD test needs a symmetric matrix");
        let n = self.rows;
        let mut a = self.clone();
        for k in 0..n {
            let piv = a.get(k, k).clone();
            if piv.is_negative() {
                return false;
            }
            if piv.is_zero() {
                // PSD forces the whole row/column to vanish
                for j in (k + 1)..n {
                    if !a.get(k, j).is_zero() {
                        return false;
                    }
                }
                continue;
            }
            for i in (k + 1)..n {
                let f = a.get(i, k) / &piv;
                if f.is_zero() {
                    continue;
                }
                for j in i..n {
                    let v = a.get(i, j) - &f * a.get(k, j);
                    a.set(i, j, v);
                }
                // keep symmetry implicitly: only the upper triangle is read
                for j in (k + 1)..=i {
                    let v = a.get(j, i).clone();
                    a.set(i, j, v);
                }
            }
            for j in (k + 1)..n {
                a.set(k, j, BigRational::zero());
                a.set(j, k, BigRational::zero());
            }
        }
        true
    }
}

/// Rational moment listing: word → exact matrix.
#[derive(Clone, Debug)]
pub struct RationalMoments {
    pub g: usize,
    pub n: usize,
    pub max_degree: usize,
    values: BTreeMap<Word, QMat>,
}

impl RationalMoments {
    pub fn new(g: usize, n: usize, max_degree: usize) -> Self {
        let mut values = BTreeMap::new();
        values.insert(Word::empty(), QMat::identity(n));
        RationalMoments { g, n, max_degree, values }
    }

    pub fn set(&mut self, w: Word, m: QMat) {
        let rep = w.canonical();
        let v = if rep == w { m } else { m.transpose() };
        self.values.insert(rep, v);
    }

    pub fn get(&self, w: &Word) -> Option<QMat> {
        let rep = w.canonical();
        let stored = self.values.get(&rep)?;
        Some(if rep == *w { stored.clone() } else { stored.transpose() })
    }

    /// Exact Hankel H_d with rational entries.
    pub fn hankel(&self, d: usize) -> Option<QMat> {
        let words = gammahull_core::freealg::enumerate_words(self.g, d);
        let n = self.n;
        let mut h = QMat::zeros(words.len() * n, words.len() * n);
        for (a, wa) in words.iter().enumerate() {
            for (b, wb) in words.iter().enumerate() {
                let m = self.get(&wa.adjoint().concat(wb))?;
                for i in 0..n {
                    for j in 0..n {
                        h.set(a * n + i, b * n + j, m.get(i, j).clone());
                    }
                }
            }
        }
        Some(h)
    }

    /// Exact violations of the Γ-moment relations anchored at the stored Ŷ;
    /// only relations with rational scalar coefficients are checked, which
    /// covers the bundled shapes.
    pub fn gamma_violations(&self, gamma: &GammaShape) -> Vec<(usize, QMat)> {
        let mut out = Vec::new();
        let anchors: Option<Vec<QMat>> =
            (1..=self.g as u8).map(|j| self.get(&Word::letter(j))).collect();
        let Some(anchors) = anchors else { return out };
        for j in gamma.g()..gamma.r() {
            let gj = gamma.gamma(j);
            let mut lhs = QMat::zeros(self.n, self.n);
            let mut rhs = QMat::zeros(self.n, self.n);
            let mut checkable = true;
            for (w, coef) in gj.terms() {
                let c = coef[(0, 0)];
                if c.im != 0.0 {
                    checkable = false;
                    break;
                }
                // coefficient must be an exact small rational for this check
                let Some(cq) = float_to_rational(c.re) else {
                    checkable = false;
                    break;
                };
                let Some(m) = self.get(w) else {
                    checkable = false;
                    break;
                };
                for i in 0..self.n {
                    for jj in 0..self.n {
                        let v = lhs.get(i, jj) + &cq * m.get(i, jj);
                        lhs.set(i, jj, v);
                    }
                }
                // word value at the anchors
                let mut wv = QMat::identity(self.n);
                for &l in &w.0 {
                    wv = wv.matmul(&anchors[(l - 1) as usize]);
                }
                for i in 0..self.n {
                    for jj in 0..self.n {
                        let v = rhs.get(i, jj) + &cq * wv.get(i, jj);
                        rhs.set(i, jj, v);
                    }
                }
            }
            if !checkable {
                continue;
            }
            let diff = lhs.sub(&rhs);
            if !diff.is_zero() {
                out.push((j, diff));
            }
        }
        out
    }
}

/// Exact rational from a float that is itself a small ratio (coefficients
/// like −2 or 0.5); returns None for anything that does not round-trip.
fn float_to_rational(v: f64) -> Option<BigRational> {
    for den in [1i64, 2, 4, 8, 16, 3, 5, 10, 100] {
        let scaled = v * den as f64;
        if scaled.fract() == 0.0 && scaled.abs() < 1e15 {
            return Some(BigRational::new(BigInt::from(scaled as i64), BigInt::from(den)));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(q("3/4"), BigRational::new(BigInt::from(3), BigInt::from(4)));
        assert_eq!(q("-2/39"), BigRational::new(BigInt::from(-2), BigInt::from(39)));
        assert_eq!(q("5"), BigRational::from_integer(BigInt::from(5)));
        assert_eq!(q("0.25"), BigRational::new(BigInt::from(1), BigInt::from(4)));
        assert_eq!(parse_number("173/200"), Some(0.865));
    }

    #[test]
    fn exact_psd_decisions() {
        // [[2,1],[1,2]] is PD
        let m = QMat::from_strings(&[
            vec!["2".into(), "1".into()],
            vec!["1".into(), "2".into()],
        ])
        .unwrap();
        assert!(m.is_psd());
        // [[1,2],[2,1]] is indefinite
        let m = QMat::from_strings(&[
            vec!["1".into(), "2".into()],
            vec!["2".into(), "1".into()],
        ])
        .unwrap();
        assert!(!m.is_psd());
        // boundary: [[1,1],[1,1]] is PSD with a zero pivot
        let m = QMat::from_strings(&[
            vec!["1".into(), "1".into()],
            vec!["1".into(), "1".into()],
        ])
        .unwrap();
        assert!(m.is_psd());
        // zero pivot with a live row is indefinite: [[0,1],[1,0]]
        let m = QMat::from_strings(&[
            vec!["0".into(), "1".into()],
            vec!["1".into(), "0".into()],
        ])
        .unwrap();
        assert!(!m.is_psd());
    }
}
