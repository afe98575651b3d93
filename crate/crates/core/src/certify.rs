//! Noncommutative quadratic-module membership, Archimedean certificates,
//! separating Γ-pencils, and solver-independent certificate verification.
//!
//! A certificate stores the two Gram matrices realizing
//! f = Σ hₖ*hₖ + Σ fᵢ* p fᵢ; the SOS Gram is indexed by (word ≤ α, column
//! of f), the weighted Gram by (word ≤ β, column of f, row of p). The
//! recomposition identity is linear in both Grams, so verification needs
//! only the free algebra and eigenvalue checks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::convexity::GammaPencil;
use crate::freealg::{enumerate_words, GammaShape, MatrixPolynomial, Word};
use crate::hermlin::{self, HermTuple};
use crate::lmi::{apply_substitution, eliminate_affine, LmiAssembler, MatrixKind, MatrixParam};
use crate::mat::CMat;
use crate::sdp::{self, SdpStatus, SolveOptions};

#[derive(Clone, Debug)]
pub enum CertifyError {
    AsymmetricInput(String),
    DegreeMismatch(String),
    PreconditionFailed(String),
    Solver(sdp::SdpError),
    Indeterminate(String),
}

impl core::fmt::Display for CertifyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CertifyError::AsymmetricInput(s) => write!(f, "asymmetric input: {s}"),
            CertifyError::DegreeMismatch(s) => write!(f, "degree mismatch: {s}"),
            CertifyError::PreconditionFailed(s) => write!(f, "precondition failed: {s}"),
            CertifyError::Solver(e) => write!(f, "solver: {e}"),
            CertifyError::Indeterminate(s) => write!(f, "indeterminate: {s}"),
        }
    }
}

impl core::error::Error for CertifyError {}

impl From<sdp::SdpError> for CertifyError {
    fn from(e: sdp::SdpError) -> Self {
        CertifyError::Solver(e)
    }
}

/// Quadratic-module certificate f = Σ hₖ*hₖ + Σ fᵢ* p fᵢ with degree-α SOS
/// and degree-β weighted Grams.
#[derive(Clone, Debug)]
pub struct QmCertificate {
    pub target: MatrixPolynomial,
    pub generator: MatrixPolynomial,
    pub sos_words: Vec<Word>,
    /// PSD over (|sos_words| · ν), Gram of the hₖ coefficient vectors
    pub gram_sos: CMat,
    pub weight_words: Vec<Word>,
    /// PSD over (|weight_words| · ν · μ), Gram of the fᵢ coefficient vectors
    pub gram_weighted: CMat,
    pub recomposition_residual: f64,
}

impl QmCertificate {
    /// Explicit SOS factors hₖ recovered from the Gram (coefficients padded
    /// square; rows beyond the first are zero).
    pub fn sos_polys(&self) -> Vec<MatrixPolynomial> {
        gram_factors(&self.gram_sos, &self.sos_words, 1, self.target.mu(), self.target.num_vars())
    }

    /// Explicit weights fᵢ recovered from the Gram.
    pub fn weighted_polys(&self) -> Vec<MatrixPolynomial> {
        gram_factors(
            &self.gram_weighted,
            &self.weight_words,
            self.generator.mu(),
            self.target.mu(),
            self.target.num_vars(),
        )
    }
}

/// Columns of a PSD Gram factorization reshaped to matrix polynomials with
/// `rows`×`cols` coefficients over the word basis (padded to square blocks).
fn gram_factors(
    gram: &CMat,
    words: &[Word],
    rows: usize,
    cols: usize,
    g: usize,
) -> Vec<MatrixPolynomial> {
    let (vals, vecs) = gram.eig_herm();
    let dim = gram.rows;
    let scale = vals.last().copied().unwrap_or(0.0).max(0.0);
    let side = rows.max(cols);
    let mut out = Vec::new();
    for k in 0..dim {
        if vals[k] <= 1e-12 * scale.max(1.0) {
            continue;
        }
        let s = libm::sqrt(vals[k]);
        let mut terms: Vec<(Word, CMat)> = Vec::new();
        for (wi, w) in words.iter().enumerate() {
            let mut coeff = CMat::zeros(side, side);
            let mut nonzero = false;
            for c in 0..cols {
                for a in 0..rows {
                    let idx = (wi * cols + c) * rows + a;
                    let v = (Complex64::new(s, 0.0) * vecs[(idx, k)]).conj();
                    if v.norm() > 0.0 {
                        nonzero = true;
                    }
                    coeff[(a, c)] = v;
                }
            }
            if nonzero {
                terms.push((w.clone(), coeff));
            }
        }
        if !terms.is_empty() {
            out.push(MatrixPolynomial::from_terms(side, g, terms).expect("factor terms"));
        }
    }
    out
}

/// Coefficient of word `u` in Σ hₖ*hₖ for the SOS Gram (ν×ν block).
fn sos_coefficient(gram: &CMat, words: &[Word], nu: usize, u: &Word) -> CMat {
    let mut acc = CMat::zeros(nu, nu);
    for (wi, w) in words.iter().enumerate() {
        for (wj, w2) in words.iter().enumerate() {
            if w.adjoint().concat(w2) != *u {
                continue;
            }
            for c in 0..nu {
                for c2 in 0..nu {
                    acc[(c, c2)] += gram[(wi * nu + c, wj * nu + c2)];
                }
            }
        }
    }
    acc
}

/// Coefficient of word `u` in Σ fᵢ* p fᵢ for the weighted Gram.
fn weighted_coefficient(
    gram: &CMat,
    words: &[Word],
    p: &MatrixPolynomial,
    nu: usize,
    u: &Word,
) -> CMat {
    let mu = p.mu();
    let mut acc = CMat::zeros(nu, nu);
    for (wi, w) in words.iter().enumerate() {
        for (wj, w2) in words.iter().enumerate() {
            for (gw, pc) in p.terms() {
                if w.adjoint().concat(gw).concat(w2) != *u {
                    continue;
                }
                for c in 0..nu {
                    for c2 in 0..nu {
                        let mut z = Complex64::new(0.0, 0.0);
                        for a in 0..mu {
                            for b in 0..mu {
                                z += pc[(a, b)]
                                    * gram[((wi * nu + c) * mu + a, (wj * nu + c2) * mu + b)];
                            }
                        }
                        acc[(c, c2)] += z;
                    }
                }
            }
        }
    }
    acc
}

/// max over words of the coefficient deviation between the target and the
/// Gram recomposition.
pub fn recomposition_residual(
    target: &MatrixPolynomial,
    p: &MatrixPolynomial,
    sos_words: &[Word],
    gram_sos: &CMat,
    weight_words: &[Word],
    gram_weighted: &CMat,
) -> f64 {
    let g = target.num_vars().max(p.num_vars());
    let nu = target.mu();
    let deg = (2 * sos_words.iter().map(|w| w.len()).max().unwrap_or(0))
        .max(2 * weight_words.iter().map(|w| w.len()).max().unwrap_or(0) + p.degree())
        .max(target.degree());
    let mut worst = 0.0f64;
    for u in enumerate_words(g, deg) {
        let mut got = sos_coefficient(gram_sos, sos_words, nu, &u);
        got.add_scaled(
            &weighted_coefficient(gram_weighted, weight_words, p, nu, &u),
            Complex64::new(1.0, 0.0),
        );
        got.add_scaled(&target.coefficient(&u), Complex64::new(-1.0, 0.0));
        worst = worst.max(got.max_abs());
    }
    worst
}

/// Search for a degree-(α, β) quadratic-module representation of f over the
/// module generated by p. `Ok(None)` is returned either when the coefficient
/// system is structurally unsolvable at these degrees or when the
/// margin-maximized feasibility SDP is certified infeasible by its dual.
pub fn qm_membership(
    f: &MatrixPolynomial,
    p: &MatrixPolynomial,
    alpha: usize,
    beta: usize,
    options: &SolveOptions,
) -> Result<Option<QmCertificate>, CertifyError> {
    if !f.is_symmetric() {
        return Err(CertifyError::AsymmetricInput("f".into()));
    }
    if !p.is_symmetric() {
        return Err(CertifyError::AsymmetricInput("p".into()));
    }
    let max_deg = (2 * alpha).max(2 * beta + p.degree());
    if f.degree() > max_deg {
        return Err(CertifyError::DegreeMismatch(format!(
            "deg f = {} exceeds max(2α, 2β + deg p) = {max_deg}",
            f.degree()
        )));
    }
    let g = f.num_vars().max(p.num_vars());
    let nu = f.mu();
    let mu = p.mu();
    let sos_words = enumerate_words(g, alpha);
    let weight_words = enumerate_words(g, beta);
    let real_mode = f.is_real() && p.is_real();
    let kind = if real_mode { MatrixKind::RealSymmetric } else { MatrixKind::Hermitian };
    let g1_param = MatrixParam { n: sos_words.len() * nu, kind };
    let g2_param = MatrixParam { n: weight_words.len() * nu * mu, kind };
    let n1 = g1_param.count();
    let n2 = g2_param.count();
    let num_vars = n1 + n2 + 1; // + margin
    let tvar = n1 + n2;

    let mut asm = LmiAssembler::new(num_vars);
    let b1 = asm.add_block(g1_param.n);
    let b2 = asm.add_block(g2_param.n);
    for q in 0..n1 {
        asm.add_coeff_mat(q, b1, 0, 0, &g1_param.basis(q));
    }
    for q in 0..n2 {
        asm.add_coeff_mat(n1 + q, b2, 0, 0, &g2_param.basis(q));
    }
    for i in 0..g1_param.n {
        asm.add_coeff(tvar, b1, i, i, Complex64::new(-1.0, 0.0));
    }
    for i in 0..g2_param.n {
        asm.add_coeff(tvar, b2, i, i, Complex64::new(-1.0, 0.0));
    }

    let rows = match_rows(f, p, &sos_words, &g1_param, 0, &weight_words, &g2_param, n1, None);
    let rows = match rows {
        Ok(r) => r,
        Err(RowsOutcome::Unreachable) => return Ok(None),
    };

    let fscale = f.terms().map(|(_, c)| c.max_abs()).fold(0.0, f64::max);
    let scale = 10.0 * (1.0 + fscale);
    let mut objective = vec![0.0; num_vars];
    objective[tvar] = 1.0;
    let mut bounds = vec![(-1e4 * scale, 1e4 * scale); num_vars];
    bounds[tvar] = (-scale, scale);
    let raw = asm.finish(objective, Some(bounds));
    let sub = match eliminate_affine(num_vars, &rows, 1e-11) {
        Ok(s) => s,
        Err(_) => return Ok(None), // coefficient system unsolvable at this degree
    };
    if !sub.kept.contains(&tvar) {
        return Err(CertifyError::Indeterminate("margin variable eliminated".into()));
    }
    let prob = apply_substitution(&raw, &sub);
    let sol = sdp::solve(&prob, options)?;
    match sol.status {
        SdpStatus::Optimal => {}
        other => return Err(CertifyError::Indeterminate(format!("{other:?}"))),
    }
    let params = sub.recover(&sol.y);
    let gram_sos = psd_project(&g1_param.assemble(&params[0..n1]));
    let gram_weighted = psd_project(&g2_param.assemble(&params[n1..n1 + n2]));
    let residual =
        recomposition_residual(f, p, &sos_words, &gram_sos, &weight_words, &gram_weighted);
    let margin = sol.objective_value;
    let psd_ok = hermlin::min_eigenvalue(&gram_sos) >= -1e-9 * (1.0 + gram_sos.frobenius())
        && hermlin::min_eigenvalue(&gram_weighted) >= -1e-9 * (1.0 + gram_weighted.frobenius());
    let res_ok = residual <= 1e-7 * (1.0 + fscale);
    if psd_ok && res_ok {
        return Ok(Some(QmCertificate {
            target: f.clone(),
            generator: p.clone(),
            sos_words,
            gram_sos,
            weight_words,
            gram_weighted,
            recomposition_residual: residual,
        }));
    }
    if margin <= -options.feas_margin {
        return Ok(None);
    }
    Err(CertifyError::Indeterminate(format!(
        "margin {margin:e}, residual {residual:e}: neither a certificate nor an improving ray"
    )))
}

enum RowsOutcome {
    Unreachable,
}

/// Coefficient-matching rows: SOS(G₁) + weighted(G₂) − pencil(A) = target.
/// With `pencil` absent the target is `f`; with it, the target is the monic
/// constant I at the empty word and the A-parameters enter with sign −1.
#[allow(clippy::too_many_arguments)]
fn match_rows(
    f: &MatrixPolynomial,
    p: &MatrixPolynomial,
    sos_words: &[Word],
    g1_param: &MatrixParam,
    g1_off: usize,
    weight_words: &[Word],
    g2_param: &MatrixParam,
    g2_off: usize,
    pencil: Option<(&GammaShape, &MatrixParam, usize)>,
) -> Result<Vec<(Vec<(usize, f64)>, f64)>, RowsOutcome> {
    let g = f.num_vars().max(p.num_vars());
    let nu = f.mu();
    let mu = p.mu();
    let n1 = g1_param.count();
    let n2 = g2_param.count();
    let max_deg = (2 * sos_words.iter().map(|w| w.len()).max().unwrap_or(0))
        .max(2 * weight_words.iter().map(|w| w.len()).max().unwrap_or(0) + p.degree())
        .max(f.degree())
        .max(pencil.map(|(gs, _, _)| gs.delta()).unwrap_or(0));
    let mut rows = Vec::new();
    for u in enumerate_words(g, max_deg) {
        let target = match pencil {
            None => f.coefficient(&u),
            Some(_) => {
                if u.is_empty() {
                    CMat::identity(nu)
                } else {
                    CMat::zeros(nu, nu)
                }
            }
        };
        for c in 0..nu {
            for c2 in 0..nu {
                for part in 0..2 {
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    for (wi, w) in sos_words.iter().enumerate() {
                        for (wj, w2) in sos_words.iter().enumerate() {
                            if w.adjoint().concat(w2) != u {
                                continue;
                            }
                            for q in 0..n1 {
                                let e = g1_param.basis(q);
                                let z = e[(wi * nu + c, wj * nu + c2)];
                                let v = if part == 0 { z.re } else { z.im };
                                if v != 0.0 {
                                    row.push((g1_off + q, v));
                                }
                            }
                        }
                    }
                    for (wi, w) in weight_words.iter().enumerate() {
                        for (wj, w2) in weight_words.iter().enumerate() {
                            for (gw, pc) in p.terms() {
                                if w.adjoint().concat(gw).concat(w2) != u {
                                    continue;
                                }
                                for q in 0..n2 {
                                    let e = g2_param.basis(q);
                                    let mut z = Complex64::new(0.0, 0.0);
                                    for a in 0..mu {
                                        for b in 0..mu {
                                            z += pc[(a, b)]
                                                * e[(
                                                    (wi * nu + c) * mu + a,
                                                    (wj * nu + c2) * mu + b,
                                                )];
                                        }
                                    }
                                    let v = if part == 0 { z.re } else { z.im };
                                    if v != 0.0 {
                                        row.push((g2_off + q, v));
                                    }
                                }
                            }
                        }
                    }
                    if let Some((gamma, coef_param, na)) = pencil {
                        for j in 0..gamma.r() {
                            let gc = gamma.gamma(j).coefficient(&u)[(0, 0)];
                            if gc.re == 0.0 && gc.im == 0.0 {
                                continue;
                            }
                            for q in 0..na {
                                let e = coef_param.basis(q);
                                let z = gc * e[(c, c2)];
                                let v = if part == 0 { z.re } else { z.im };
                                if v != 0.0 {
                                    row.push((j * na + q, -v));
                                }
                            }
                        }
                    }
                    let tval = if part == 0 { target[(c, c2)].re } else { target[(c, c2)].im };
                    if row.is_empty() {
                        if tval.abs() > 1e-12 {
                            return Err(RowsOutcome::Unreachable);
                        }
                    } else {
                        rows.push((row, tval));
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Clip tiny negative eigenvalues so returned Grams are PSD exactly as
/// stored; the recomposition residual reflects the clip.
fn psd_project(m: &CMat) -> CMat {
    let (vals, vecs) = m.eig_herm();
    let n = m.rows;
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        if vals[k] <= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += Complex64::new(vals[k], 0.0) * vecs[(i, k)] * vecs[(j, k)].conj();
            }
        }
    }
    out.hermitize();
    out
}

/// k-Archimedean certificate: a QM representation of k² − Σ xᵢ², sweeping
/// the SOS degree up to `degree_cap`.
pub fn archimedean_certificate(
    p: &MatrixPolynomial,
    k: f64,
    degree_cap: usize,
    options: &SolveOptions,
) -> Result<Option<QmCertificate>, CertifyError> {
    if k <= 0.0 {
        return Err(CertifyError::PreconditionFailed("k must be positive".into()));
    }
    let g = p.num_vars();
    let mut f = MatrixPolynomial::constant(Complex64::new(k * k, 0.0), g);
    for j in 1..=g as u8 {
        f = f.add(&MatrixPolynomial::monomial(
            Word(vec![j, j]),
            Complex64::new(-1.0, 0.0),
            g,
        ));
    }
    for alpha in 1..=degree_cap.max(1) {
        let beta = (2 * alpha).saturating_sub(p.degree()) / 2;
        match qm_membership(&f, p, alpha, beta, options) {
            Ok(Some(cert)) => return Ok(Some(cert)),
            Ok(None) => continue,
            Err(CertifyError::Indeterminate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// A separating monic Γ-pencil with its quadratic-module witness.
#[derive(Clone, Debug)]
pub struct SeparationCertificate {
    pub pencil: GammaPencil,
    pub qm: QmCertificate,
    /// −λ_min of the pencil at the separated point
    pub violation: f64,
}

/// Expand a Γ-pencil into an explicit ℓ×ℓ matrix polynomial.
pub fn pencil_polynomial(l: &GammaPencil) -> MatrixPolynomial {
    let gamma = l.gamma();
    let g = gamma.g();
    let size = l.size();
    let mut terms: Vec<(Word, CMat)> = vec![(Word::empty(), l.a0().clone())];
    for j in 0..gamma.r() {
        let coeff = l.slot(j);
        for (w, c) in gamma.gamma(j).terms() {
            let mut block = coeff.clone();
            block.scale(c[(0, 0)]);
            terms.push((w.clone(), block));
        }
    }
    MatrixPolynomial::from_terms(size, g, terms).expect("pencil expansion")
}

/// Search for a monic Γ-pencil of size ℓ = size(X) in the degree-N truncated
/// quadratic module of p that is not PSD at X. Maximizing the violation
/// −λ_min(L(X)) is convex maximization, so the search fixes a separation
/// direction u and minimizes u*L(X)u (linear), starting from a trace pre-pass
/// and refining u from the bottom eigenvector over a few rounds. Returned
/// certificates always carry a verified QM witness.
pub fn separate(
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    x: &HermTuple,
    degree: usize,
    options: &SolveOptions,
) -> Result<Option<SeparationCertificate>, CertifyError> {
    if !gamma.vanishes_at_zero() {
        return Err(CertifyError::PreconditionFailed("Γ(0) must vanish".into()));
    }
    {
        let zeros: Vec<CMat> = (0..p.num_vars()).map(|_| CMat::zeros(1, 1)).collect();
        let p0 = p
            .evaluate(&zeros)
            .map_err(|e| CertifyError::PreconditionFailed(format!("{e}")))?;
        if hermlin::min_eigenvalue(&p0) < -1e-12 {
            return Err(CertifyError::PreconditionFailed("p(0) must be PSD (0 ∈ D_p)".into()));
        }
    }
    if degree < p.degree() {
        return Err(CertifyError::DegreeMismatch(format!(
            "certificate degree {degree} below deg p = {}",
            p.degree()
        )));
    }
    let ell = x.n();
    let g = gamma.g();
    let r = gamma.r();
    let alpha = degree / 2;
    let beta = (degree - p.degree()) / 2;
    let nu = ell;
    let mu = p.mu();
    let sos_words = enumerate_words(g, alpha);
    let weight_words = enumerate_words(g, beta);
    let real_mode = p.is_real() && gamma.is_real() && x.is_real();
    let kind = if real_mode { MatrixKind::RealSymmetric } else { MatrixKind::Hermitian };
    let coef_param = MatrixParam { n: ell, kind };
    let g1_param = MatrixParam { n: sos_words.len() * nu, kind };
    let g2_param = MatrixParam { n: weight_words.len() * nu * mu, kind };
    let na = coef_param.count();
    let n1 = g1_param.count();
    let n2 = g2_param.count();
    let num_vars = r * na + n1 + n2;
    let off_g1 = r * na;
    let off_g2 = off_g1 + n1;

    // the pencil target is monic: L − ΣA-terms = I at the empty word
    let fake_target = MatrixPolynomial::from_terms(
        nu,
        g,
        vec![(Word::empty(), CMat::identity(nu))],
    )
    .expect("monic target");
    let rows = match match_rows(
        &fake_target,
        p,
        &sos_words,
        &g1_param,
        off_g1,
        &weight_words,
        &g2_param,
        off_g2,
        Some((gamma, &coef_param, na)),
    ) {
        Ok(r) => r,
        Err(RowsOutcome::Unreachable) => return Ok(None),
    };

    let gamma_at_x = gamma
        .gamma_map(&x.mats())
        .map_err(|e| CertifyError::PreconditionFailed(format!("{e}")))?;

    let direction_objective = |u: &CMat| -> Vec<f64> {
        let mut obj = vec![0.0; num_vars];
        for j in 0..r {
            for q in 0..na {
                let e = coef_param.basis(q);
                let contrib = e.kron(&gamma_at_x[j]);
                let v = u.adjoint().matmul(&contrib).matmul(u);
                obj[j * na + q] = -v[(0, 0)].re; // maximize −u*L(X)u
            }
        }
        obj
    };

    let assemble_pencil = |params: &[f64]| -> GammaPencil {
        let coeffs: Vec<CMat> =
            (0..r).map(|j| coef_param.assemble(&params[j * na..(j + 1) * na])).collect();
        GammaPencil::monic(gamma.clone(), coeffs).expect("assembled pencil")
    };

    let sub = match eliminate_affine(num_vars, &rows, 1e-11) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };

    let mut direction: Option<CMat> = None;
    let mut best: Option<(GammaPencil, Vec<f64>, f64)> = None;
    for round in 0..3 {
        let mut asm = LmiAssembler::new(num_vars);
        let b1 = asm.add_block(g1_param.n);
        let b2 = asm.add_block(g2_param.n);
        for q in 0..n1 {
            asm.add_coeff_mat(off_g1 + q, b1, 0, 0, &g1_param.basis(q));
        }
        for q in 0..n2 {
            asm.add_coeff_mat(off_g2 + q, b2, 0, 0, &g2_param.basis(q));
        }
        let objective = match &direction {
            None => {
                // trace pre-pass: minimize tr L(X)
                let mut obj = vec![0.0; num_vars];
                for j in 0..r {
                    for q in 0..na {
                        let e = coef_param.basis(q);
                        let tr = (e.trace() * gamma_at_x[j].trace()).re;
                        obj[j * na + q] = -tr;
                    }
                }
                obj
            }
            Some(u) => direction_objective(u),
        };
        let bounds = vec![(-1e3, 1e3); num_vars];
        let raw = asm.finish(objective, Some(bounds));
        let prob = apply_substitution(&raw, &sub);
        let sol = sdp::solve(&prob, options)?;
        if !sol.is_optimal() {
            if best.is_none() && round == 2 {
                return Err(CertifyError::Indeterminate(format!("{:?}", sol.status)));
            }
            continue;
        }
        let params = sub.recover(&sol.y);
        let pencil = assemble_pencil(&params);
        let at_x = pencil
            .evaluate(x)
            .map_err(|e| CertifyError::Indeterminate(format!("{e}")))?;
        let (vals, vecs) = at_x.eig_herm();
        let violation = -vals[0];
        direction = Some(CMat::from_fn(at_x.rows, 1, |i, _| vecs[(i, 0)]));
        let better = match &best {
            None => true,
            Some((_, _, v)) => violation > *v,
        };
        if better {
            best = Some((pencil, params, violation));
        }
    }
    let Some((pencil, params, violation)) = best else {
        return Ok(None);
    };
    if violation < 1e-6 {
        return Ok(None);
    }
    let gram_sos = psd_project(&g1_param.assemble(&params[off_g1..off_g1 + n1]));
    let gram_weighted = psd_project(&g2_param.assemble(&params[off_g2..off_g2 + n2]));
    let target = pencil_polynomial(&pencil);
    let residual =
        recomposition_residual(&target, p, &sos_words, &gram_sos, &weight_words, &gram_weighted);
    let qm = QmCertificate {
        target,
        generator: p.clone(),
        sos_words,
        gram_sos,
        weight_words,
        gram_weighted,
        recomposition_residual: residual,
    };
    Ok(Some(SeparationCertificate { pencil, qm, violation }))
}

/// Solver-independent re-check of a certificate: coefficient-wise
/// recomposition, PSD of both Grams, and the violation at an optional point.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub residual: f64,
    pub gram_sos_min_eig: f64,
    pub gram_weighted_min_eig: f64,
    pub violation_at_point: Option<f64>,
    pub pass: bool,
}

pub fn verify_certificate(
    cert: &QmCertificate,
    p: &MatrixPolynomial,
    x: Option<&HermTuple>,
    tol: f64,
) -> VerifyReport {
    let residual = recomposition_residual(
        &cert.target,
        p,
        &cert.sos_words,
        &cert.gram_sos,
        &cert.weight_words,
        &cert.gram_weighted,
    );
    let e1 = hermlin::min_eigenvalue(&cert.gram_sos);
    let e2 = hermlin::min_eigenvalue(&cert.gram_weighted);
    let scale1 = 1.0 + cert.gram_sos.frobenius();
    let scale2 = 1.0 + cert.gram_weighted.frobenius();
    let violation_at_point = x.and_then(|pt| {
        cert.target
            .evaluate(&pt.mats())
            .ok()
            .map(|m| -hermlin::min_eigenvalue(&m))
    });
    let pass = residual <= tol && e1 >= -1e-9 * scale1 && e2 >= -1e-9 * scale2;
    VerifyReport {
        residual,
        gram_sos_min_eig: e1,
        gram_weighted_min_eig: e2,
        violation_at_point,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn tv_screen() -> MatrixPolynomial {
        MatrixPolynomial::constant(c(1.0), 2)
            .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), 2))
            .add(&MatrixPolynomial::monomial(Word(vec![2, 2, 2, 2]), c(-1.0), 2))
    }

    fn box_poly() -> MatrixPolynomial {
        let g = 2;
        let mut e = CMat::zeros(2, 2);
        e[(0, 0)] = c(1.0);
        e[(1, 1)] = c(1.0);
        MatrixPolynomial::from_terms(
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
        .unwrap()
    }

    #[test]
    fn trivial_representation_f_equals_p() {
        let p = tv_screen();
        let opts = SolveOptions::default();
        let cert = qm_membership(&p, &p, 1, 0, &opts).unwrap().expect("f = p is in the module");
        assert!(cert.recomposition_residual < 1e-8, "{}", cert.recomposition_residual);
        let report = verify_certificate(&cert, &p, None, 1e-7);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn hand_identity_for_one_minus_y_squared() {
        // ½ e₁* p e₁ + ½ e₂* p e₂ = 1 − y² for the box polynomial
        let p = box_poly();
        let g = 2;
        let f = MatrixPolynomial::constant(c(1.0), g)
            .add(&MatrixPolynomial::monomial(Word(vec![2, 2]), c(-1.0), g));
        let weight_words = vec![Word::empty()];
        let mut gram_weighted = CMat::zeros(2, 2);
        gram_weighted[(0, 0)] = c(0.5);
        gram_weighted[(1, 1)] = c(0.5);
        let sos_words = enumerate_words(g, 0);
        let gram_sos = CMat::zeros(1, 1);
        let residual =
            recomposition_residual(&f, &p, &sos_words, &gram_sos, &weight_words, &gram_weighted);
        assert!(residual < 1e-15, "hand identity residual {residual}");
        let cert = QmCertificate {
            target: f.clone(),
            generator: p.clone(),
            sos_words,
            gram_sos,
            weight_words,
            gram_weighted,
            recomposition_residual: residual,
        };
        let report = verify_certificate(&cert, &p, None, 1e-10);
        assert!(report.pass);
        // and the solver finds one too
        let opts = SolveOptions::default();
        let found = qm_membership(&f, &p, 1, 0, &opts).unwrap().expect("solver certificate");
        let report = verify_certificate(&found, &p, None, 1e-7);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn negative_constant_has_no_certificate() {
        // f = −1, p = 1 − x²: f is negative at 0 ∈ D_p
        let g = 1;
        let p = MatrixPolynomial::constant(c(1.0), g)
            .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), g));
        let f = MatrixPolynomial::constant(c(-1.0), g);
        let opts = SolveOptions::default();
        let out = qm_membership(&f, &p, 1, 0, &opts).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn archimedean_tv_screen_at_k_two() {
        let p = tv_screen();
        let opts = SolveOptions::default();
        let cert = archimedean_certificate(&p, 2.0, 2, &opts).unwrap().expect("2-Archimedean");
        let report = verify_certificate(&cert, &p, None, 1e-7);
        assert!(report.pass, "{report:?}");

        // the hand identity 4 − x² − y² = p + (y² − ½)² + 11/4 verifies exactly
        let g = 2;
        let f = MatrixPolynomial::constant(c(4.0), g)
            .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), g))
            .add(&MatrixPolynomial::monomial(Word(vec![2, 2]), c(-1.0), g));
        let sos_words = enumerate_words(g, 2);
        let mut gram_sos = CMat::zeros(sos_words.len(), sos_words.len());
        let idx_empty = sos_words.iter().position(|w| w.is_empty()).unwrap();
        let idx_yy = sos_words.iter().position(|w| w.0 == vec![2, 2]).unwrap();
        gram_sos[(idx_empty, idx_empty)] = c(0.25 + 2.75);
        gram_sos[(idx_empty, idx_yy)] = c(-0.5);
        gram_sos[(idx_yy, idx_empty)] = c(-0.5);
        gram_sos[(idx_yy, idx_yy)] = c(1.0);
        let weight_words = vec![Word::empty()];
        let gram_weighted = CMat::identity(1);
        let residual =
            recomposition_residual(&f, &p, &sos_words, &gram_sos, &weight_words, &gram_weighted);
        assert!(residual < 1e-10, "hand identity residual {residual}");
    }

    #[test]
    fn unbounded_domain_not_archimedean() {
        // p = x: D_p unbounded, no k works
        let g = 1;
        let p = MatrixPolynomial::variable(1, g);
        let opts = SolveOptions::default();
        let out = archimedean_certificate(&p, 2.0, 2, &opts).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn separation_of_box_outsider() {
        let p = box_poly();
        let shape = y2_shape();
        let x = HermTuple::scalars(&[0.0, 1.2]);
        let opts = SolveOptions::default();
        let cert = separate(&p, &shape, &x, 2, &opts).unwrap().expect("separator exists");
        // the analytic witness 1 − y² attains violation 0.44
        assert!(cert.violation >= 0.43, "violation {}", cert.violation);
        let report = verify_certificate(&cert.qm, &p, Some(&x), 1e-7);
        assert!(report.pass, "{report:?}");
        assert!(report.violation_at_point.unwrap() >= 0.43);
        // pencil is nonnegative on rejection-sampled points of D_p
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(2);
        let mut count = 0;
        while count < 25 {
            let x0: f64 = rng.gen_range(-1.1..1.1);
            let y0: f64 = rng.gen_range(-1.1..1.1);
            if 1.0 - 2.0 * y0 * y0 + x0 * x0 < 0.0 || 1.0 - x0 * x0 < 0.0 {
                continue;
            }
            count += 1;
            let pt = HermTuple::scalars(&[x0, y0]);
            let v = cert.pencil.evaluate(&pt).unwrap();
            assert!(hermlin::min_eigenvalue(&v) >= -1e-7, "({x0},{y0})");
        }
    }

    #[test]
    fn no_separator_at_the_origin() {
        let p = box_poly();
        let shape = y2_shape();
        let x = HermTuple::scalars(&[0.0, 0.0]);
        let opts = SolveOptions::default();
        let out = separate(&p, &shape, &x, 2, &opts).unwrap();
        assert!(out.is_none(), "0 ∈ D_p admits no separator");
    }

    #[test]
    fn perturbed_certificate_fails_verification() {
        let p = tv_screen();
        let opts = SolveOptions::default();
        let mut cert = qm_membership(&p, &p, 1, 0, &opts).unwrap().unwrap();
        cert.gram_weighted[(0, 0)] += c(1e-3);
        let report = verify_certificate(&cert, &p, None, 1e-7);
        assert!(!report.pass);
        assert!(report.residual > 1e-4);
    }

    #[test]
    fn certificates_embed_into_larger_degrees() {
        // a certificate stays valid re-verified at (α+1, β+1) by zero-padding
        let p = tv_screen();
        let opts = SolveOptions::default();
        let cert = qm_membership(&p, &p, 1, 0, &opts).unwrap().unwrap();
        let g = 2;
        let nu = cert.target.mu();
        let mu = p.mu();
        let sos_words = enumerate_words(g, 2);
        let weight_words = enumerate_words(g, 1);
        let mut gram_sos = CMat::zeros(sos_words.len() * nu, sos_words.len() * nu);
        for (wi, w) in cert.sos_words.iter().enumerate() {
            let ni = sos_words.iter().position(|u| u == w).unwrap();
            for (wj, w2) in cert.sos_words.iter().enumerate() {
                let nj = sos_words.iter().position(|u| u == w2).unwrap();
                for a in 0..nu {
                    for b in 0..nu {
                        gram_sos[(ni * nu + a, nj * nu + b)] =
                            cert.gram_sos[(wi * nu + a, wj * nu + b)];
                    }
                }
            }
        }
        let old_block = cert.weight_words.len() * nu * mu;
        let mut gram_weighted =
            CMat::zeros(weight_words.len() * nu * mu, weight_words.len() * nu * mu);
        for i in 0..old_block {
            for j in 0..old_block {
                gram_weighted[(i, j)] = cert.gram_weighted[(i, j)];
            }
        }
        let residual = recomposition_residual(
            &cert.target,
            &p,
            &sos_words,
            &gram_sos,
            &weight_words,
            &gram_weighted,
        );
        assert!(residual < 1e-7, "embedded residual {residual}");
    }

    #[test]
    fn gram_factor_lists_recompose() {
        let p = tv_screen();
        let opts = SolveOptions::default();
        let cert = archimedean_certificate(&p, 2.0, 2, &opts).unwrap().unwrap();
        let hs = cert.sos_polys();
        let fs = cert.weighted_polys();
        // Σ h*h + Σ f*pf evaluated at a point of D_p matches f(X)
        let pt = vec![CMat::scalar(c(0.4)), CMat::scalar(c(0.3))];
        let mut acc = CMat::zeros(cert.target.mu(), cert.target.mu());
        for h in &hs {
            let hv = h.evaluate(&pt).unwrap();
            acc.add_scaled(&hv.adjoint().matmul(&hv), c(1.0));
        }
        let pv = p.evaluate(&pt).unwrap();
        for fpoly in &fs {
            let fv = fpoly.evaluate(&pt).unwrap();
            // factors are padded square to max(μ, ν) = 1 here
            acc.add_scaled(&fv.adjoint().matmul(&pv).matmul(&fv), c(1.0));
        }
        let want = cert.target.evaluate(&pt).unwrap();
        let mut diff = acc;
        diff.add_scaled(&want, c(-1.0));
        assert!(diff.max_abs() < 1e-6, "factor recomposition off by {}", diff.max_abs());
    }
}
