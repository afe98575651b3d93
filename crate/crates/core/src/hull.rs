//! The truncated hull lift: assembly of the level-d moment relaxation as a
//! block SDP, membership verdicts with reduced-Hankel margins, symbolic
//! pencil emission, GNS witness extraction and the hierarchy driver.
//!
//! For Γ entries of the form γ = x_k² + (affine lower terms), the anchored
//! moment relations force Y_{x_k x_k} = X_k², and positivity of the Hankel
//! then forces every column indexed by a word ending in x_k to be the
//! right-translate of a shorter column. The assembly derives those moments
//! (Y_{x_k^a u x_k^b} = X_k^a Y_u X_k^b), drops the dependent columns, and
//! measures feasibility margins on the reduced blocks; the full and reduced
//! forms are congruent, so positivity verdicts agree, while the reduced one
//! has interior wherever the membership is strict.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::certify::{self, SeparationCertificate};
use crate::convexity::{self};
use crate::freealg::{enumerate_words, GammaShape, MatrixPolynomial, Word};
use crate::hermlin::{self, HermTuple};
use crate::lmi::{
    apply_substitution, eliminate_affine, LmiAssembler, MatrixKind, MatrixParam, Substitution,
};
use crate::mat::CMat;
use crate::moments::{self, FlatnessReport, MomentIndex, MomentSequence};
use crate::sdp::{self, FeasVerdict, SdpProblem, SdpStatus, SolveOptions};

#[derive(Clone, Debug)]
pub enum HullError {
    AsymmetricPolynomial,
    ShapeMismatch(String),
    GammaDegreeTooHigh { delta: usize, degree: usize },
    InconsistentConstraints(String),
    Solver(sdp::SdpError),
    NotFlat(FlatnessReport),
    ExtractionFailed(String),
    UnsupportedSymbolicGamma(String),
}

impl core::fmt::Display for HullError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HullError::AsymmetricPolynomial => write!(f, "p must be symmetric"),
            HullError::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            HullError::GammaDegreeTooHigh { delta, degree } => {
                write!(f, "Γ monomials of degree {delta} do not fit in moment degree {degree}")
            }
            HullError::InconsistentConstraints(s) => {
                write!(f, "inconsistent Γ-moment constraints: {s}")
            }
            HullError::Solver(e) => write!(f, "solver: {e}"),
            HullError::NotFlat(r) => write!(
                f,
                "moment matrix not flat: rank H_{} = {} vs rank H_{} = {}",
                r.eta - r.drop,
                r.rank_low,
                r.eta,
                r.rank_high
            ),
            HullError::ExtractionFailed(s) => write!(f, "GNS extraction failed: {s}"),
            HullError::UnsupportedSymbolicGamma(s) => {
                write!(f, "symbolic pencil emission unsupported for this Γ: {s}")
            }
        }
    }
}

impl core::error::Error for HullError {}

impl From<sdp::SdpError> for HullError {
    fn from(e: sdp::SdpError) -> Self {
        HullError::Solver(e)
    }
}

/// How a resolved moment word decomposes after stripping pinned letters.
#[derive(Clone, Debug)]
enum Resolved {
    Const(CMat),
    Free { rep: Word, adjoint: bool, left: Option<CMat>, right: Option<CMat> },
}

/// Parameter layout of the lift: pinned letters, free representatives and
/// their real parameterizations.
#[derive(Clone, Debug)]
struct Layout {
    n: usize,
    real_mode: bool,
    /// per letter (0-based): anchor power X_k when γ pins x_k²
    flat: Vec<Option<CMat>>,
    anchors: Vec<CMat>,
    reps: Vec<Word>,
    rep_param: Vec<MatrixParam>,
    rep_offset: Vec<usize>,
    rep_lookup: BTreeMap<Word, usize>,
    num_params: usize,
}

impl Layout {
    fn resolve(&self, w: &Word) -> Resolved {
        let letters = &w.0;
        let mut a = 0;
        while a < letters.len() && self.flat[(letters[a] - 1) as usize].is_some() {
            a += 1;
        }
        let mut b = letters.len();
        while b > a && self.flat[(letters[b - 1] - 1) as usize].is_some() {
            b -= 1;
        }
        let left = if a > 0 {
            let mut m = CMat::identity(self.n);
            for &l in &letters[0..a] {
                m = m.matmul(self.flat[(l - 1) as usize].as_ref().unwrap());
            }
            Some(m)
        } else {
            None
        };
        let right = if b < letters.len() {
            let mut m = CMat::identity(self.n);
            for &l in &letters[b..] {
                m = m.matmul(self.flat[(l - 1) as usize].as_ref().unwrap());
            }
            Some(m)
        } else {
            None
        };
        let core = Word(letters[a..b].to_vec());
        if core.len() == 0 {
            let mut m = left.unwrap_or_else(|| CMat::identity(self.n));
            if let Some(r) = &right {
                m = m.matmul(r);
            }
            return Resolved::Const(m);
        }
        if core.len() == 1 {
            let x = &self.anchors[(core.0[0] - 1) as usize];
            let mut m = match &left {
                Some(l) => l.matmul(x),
                None => x.clone(),
            };
            if let Some(r) = &right {
                m = m.matmul(r);
            }
            return Resolved::Const(m);
        }
        let rep = core.canonical();
        let adjoint = rep != core;
        Resolved::Free { rep, adjoint, left, right }
    }

    fn register(&mut self, w: &Word) {
        if let Resolved::Free { rep, .. } = self.resolve(w) {
            if !self.rep_lookup.contains_key(&rep) {
                let kind = if rep.is_palindrome() {
                    if self.real_mode {
                        MatrixKind::RealSymmetric
                    } else {
                        MatrixKind::Hermitian
                    }
                } else if self.real_mode {
                    MatrixKind::RealGeneral
                } else {
                    MatrixKind::General
                };
                let param = MatrixParam { n: self.n, kind };
                self.rep_lookup.insert(rep.clone(), self.reps.len());
                self.rep_offset.push(self.num_params);
                self.num_params += param.count();
                self.reps.push(rep);
                self.rep_param.push(param);
            }
        }
    }

    /// Value of the moment at `w` given all original parameter values.
    fn value(&self, w: &Word, params: &[f64]) -> CMat {
        match self.resolve(w) {
            Resolved::Const(m) => m,
            Resolved::Free { rep, adjoint, left, right } => {
                let idx = self.rep_lookup[&rep];
                let off = self.rep_offset[idx];
                let cnt = self.rep_param[idx].count();
                let mut m = self.rep_param[idx].assemble(&params[off..off + cnt]);
                if adjoint {
                    m = m.adjoint();
                }
                let mut out = match left {
                    Some(l) => l.matmul(&m),
                    None => m,
                };
                if let Some(r) = right {
                    out = out.matmul(&r);
                }
                out
            }
        }
    }
}

/// Objective used by membership solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftObjective {
    /// maximize the common interior margin of the PSD blocks
    Margin,
    /// minimize the trace of the (reduced) Hankel block
    TraceMin,
}

#[derive(Clone, Debug)]
pub struct LiftOptions {
    pub bound_k: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions { bound_k: None, solve: SolveOptions::default() }
    }
}

/// The assembled level-d lift: feasibility SDP plus everything needed to
/// reconstruct moment sequences from solver output.
pub struct LiftProblem {
    pub p: MatrixPolynomial,
    pub gamma: GammaShape,
    pub anchor: HermTuple,
    pub level: usize,
    pub eta: usize,
    /// moment truncation degree D = 2η
    pub degree: usize,
    /// feasibility problem (no objective): block 0 = reduced Hankel,
    /// block 1 = reduced localizing, plus parameter boxes
    pub sdp: SdpProblem,
    layout: Layout,
    substitution: Substitution,
    pub hankel_dim: usize,
    pub loc_dim: usize,
    /// words indexing the reduced Hankel columns
    pub hankel_words: Vec<Word>,
    pub loc_words: Vec<Word>,
    /// count of real moment parameters before and after Γ-relation elimination
    pub params_raw: usize,
    pub params_free: usize,
}

/// η = d + ⌈deg(p)/2⌉ for the level-d lift.
pub fn lift_eta(p: &MatrixPolynomial, d: usize) -> usize {
    d + (p.degree() + 1) / 2
}

/// Assemble the level-d lift of p over Γ anchored at X.
pub fn build_lift(
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    x: &HermTuple,
    d: usize,
    options: &LiftOptions,
) -> Result<LiftProblem, HullError> {
    if !p.is_symmetric() {
        return Err(HullError::AsymmetricPolynomial);
    }
    if p.num_vars() != gamma.g() || x.g() != gamma.g() {
        return Err(HullError::ShapeMismatch(format!(
            "p has {} variables, Γ has {}, anchor has {}",
            p.num_vars(),
            gamma.g(),
            x.g()
        )));
    }
    let eta = lift_eta(p, d);
    let degree = 2 * eta;
    if gamma.delta() > degree {
        return Err(HullError::GammaDegreeTooHigh { delta: gamma.delta(), degree });
    }
    let n = x.n();
    let g = gamma.g();
    let real_mode = p.is_real() && gamma.is_real() && x.is_real();

    // pinned letters: γ_j = c·x_k² + terms of degree ≤ 1
    let mut flat: Vec<Option<CMat>> = vec![None; g];
    for j in g..gamma.r() {
        let gj = gamma.gamma(j);
        let mut square: Option<u8> = None;
        let mut ok = true;
        for (w, _) in gj.terms() {
            match w.len() {
                0 | 1 => {}
                2 if w.0[0] == w.0[1] && square.is_none() => square = Some(w.0[0]),
                _ => ok = false,
            }
        }
        if ok {
            if let Some(k) = square {
                flat[(k - 1) as usize] = Some(x.block((k - 1) as usize).as_mat().clone());
            }
        }
    }

    let mut layout = Layout {
        n,
        real_mode,
        flat,
        anchors: x.mats(),
        reps: Vec::new(),
        rep_param: Vec::new(),
        rep_offset: Vec::new(),
        rep_lookup: BTreeMap::new(),
        num_params: 0,
    };

    // reduced column sets: last letter must not be pinned
    let keep = |w: &Word, layout: &Layout| -> bool {
        match w.0.last() {
            None => true,
            Some(&l) => layout.flat[(l - 1) as usize].is_none(),
        }
    };
    let hankel_words: Vec<Word> =
        enumerate_words(g, eta).into_iter().filter(|w| keep(w, &layout)).collect();
    let loc_words: Vec<Word> =
        enumerate_words(g, d).into_iter().filter(|w| keep(w, &layout)).collect();

    // pass A: register representatives
    for (ai, wa) in hankel_words.iter().enumerate() {
        for wb in hankel_words.iter().skip(ai) {
            layout.register(&wa.adjoint().concat(wb));
        }
    }
    for (ai, wa) in loc_words.iter().enumerate() {
        for wb in loc_words.iter().skip(ai) {
            for (gw, _) in p.terms() {
                layout.register(&wa.adjoint().concat(gw).concat(wb));
            }
        }
    }
    let relations = moments::gamma_constraints(gamma, Some(x), degree)
        .map_err(|e| HullError::ShapeMismatch(format!("{e}")))?;
    for rel in &relations.relations {
        for (w, _) in &rel.terms {
            layout.register(w);
        }
    }

    // pass B: assemble both blocks
    let params_raw = layout.num_params;
    let mu = p.mu();
    let mut asm = LmiAssembler::new(params_raw);
    let hb = asm.add_block(hankel_words.len() * n);
    let lb = asm.add_block(loc_words.len() * mu * n);

    let place = |asm: &mut LmiAssembler,
                     layout: &Layout,
                     block,
                     row0: usize,
                     col0: usize,
                     factor: &CMat,
                     w: &Word| {
        // contribution factor ⊗ Y_w at the (row0, col0) cell
        match layout.resolve(w) {
            Resolved::Const(m) => {
                let cell = factor.kron(&m);
                asm.add_const_mat(block, row0, col0, &cell);
            }
            Resolved::Free { rep, adjoint, left, right } => {
                let idx = layout.rep_lookup[&rep];
                let off = layout.rep_offset[idx];
                let param = &layout.rep_param[idx];
                for q in 0..param.count() {
                    let mut e = param.basis(q);
                    if adjoint {
                        e = e.adjoint();
                    }
                    let mut eff = match &left {
                        Some(l) => l.matmul(&e),
                        None => e,
                    };
                    if let Some(r) = &right {
                        eff = eff.matmul(r);
                    }
                    let cell = factor.kron(&eff);
                    asm.add_coeff_mat(off + q, block, row0, col0, &cell);
                }
            }
        }
    };

    let id1 = CMat::identity(1);
    for (ai, wa) in hankel_words.iter().enumerate() {
        for (bi, wb) in hankel_words.iter().enumerate() {
            let w = wa.adjoint().concat(wb);
            place(&mut asm, &layout, hb, ai * n, bi * n, &id1, &w);
        }
    }
    let bs = mu * n;
    for (ai, wa) in loc_words.iter().enumerate() {
        for (bi, wb) in loc_words.iter().enumerate() {
            for (gw, coef) in p.terms() {
                let w = wa.adjoint().concat(gw).concat(wb);
                place(&mut asm, &layout, lb, ai * bs, bi * bs, coef, &w);
            }
        }
    }

    // Γ-moment relations over the parameters; rows fully resolved by the
    // pinned-letter derivation must be consistent residually
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for rel in &relations.relations {
        let rhs = rel.rhs.as_ref().expect("anchored constraints");
        // entry-wise rows, real and imaginary parts
        for i in 0..n {
            for j in 0..n {
                for part in 0..2 {
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    let mut cst = Complex64::new(0.0, 0.0);
                    for (w, c) in &rel.terms {
                        match layout.resolve(w) {
                            Resolved::Const(m) => cst += *c * m[(i, j)],
                            Resolved::Free { rep, adjoint, left, right } => {
                                let idx = layout.rep_lookup[&rep];
                                let off = layout.rep_offset[idx];
                                let param = &layout.rep_param[idx];
                                for q in 0..param.count() {
                                    let mut e = param.basis(q);
                                    if adjoint {
                                        e = e.adjoint();
                                    }
                                    let mut eff = match &left {
                                        Some(l) => l.matmul(&e),
                                        None => e,
                                    };
                                    if let Some(r) = &right {
                                        eff = eff.matmul(r);
                                    }
                                    let z = *c * eff[(i, j)];
                                    let v = if part == 0 { z.re } else { z.im };
                                    if v != 0.0 {
                                        row.push((off + q, v));
                                    }
                                }
                            }
                        }
                    }
                    let target = rhs[(i, j)] - cst;
                    let tval = if part == 0 { target.re } else { target.im };
                    if row.is_empty() {
                        if tval.abs() > 1e-8 * (1.0 + rhs.max_abs()) {
                            return Err(HullError::InconsistentConstraints(format!(
                                "γ_{} at entry ({i},{j}): derived value off by {tval:e}",
                                rel.gamma_index + 1
                            )));
                        }
                    } else {
                        rows.push((row, tval));
                    }
                }
            }
        }
    }

    // bounds per parameter from the moment norm bound
    let bound_for = |len: usize| -> f64 {
        match options.bound_k {
            Some(k) => libm::pow(k, len as f64) * 1.05,
            None => libm::pow(1.0 + x.norm(), len as f64) * 10.0,
        }
    };
    let mut bounds = vec![(0.0, 0.0); params_raw];
    for (idx, rep) in layout.reps.iter().enumerate() {
        let b = bound_for(rep.len());
        let off = layout.rep_offset[idx];
        for q in 0..layout.rep_param[idx].count() {
            bounds[off + q] = (-b, b);
        }
    }

    let raw = asm.finish(vec![0.0; params_raw], Some(bounds));
    let substitution = eliminate_affine(params_raw, &rows, 1e-11)
        .map_err(HullError::InconsistentConstraints)?;
    let sdp_prob = apply_substitution(&raw, &substitution);
    let hankel_dim = match raw.blocks[0] {
        sdp::BlockSpec::Dense(k) => k,
        _ => unreachable!(),
    };
    let loc_dim = match raw.blocks[1] {
        sdp::BlockSpec::Dense(k) => k,
        _ => unreachable!(),
    };
    Ok(LiftProblem {
        p: p.clone(),
        gamma: gamma.clone(),
        anchor: x.clone(),
        level: d,
        eta,
        degree,
        params_free: substitution.num_kept(),
        sdp: sdp_prob,
        layout,
        substitution,
        hankel_dim,
        loc_dim,
        hankel_words,
        loc_words,
        params_raw,
    })
}

impl LiftProblem {
    /// Margin-maximization problem: maximize t with both PSD blocks shifted
    /// by −tI.
    pub fn margin_problem(&self) -> SdpProblem {
        let mut prob = self.sdp.clone();
        let t = prob.num_vars;
        prob.num_vars += 1;
        prob.objective.push(1.0);
        prob.coeffs.push(Vec::new());
        for i in 0..self.hankel_dim {
            prob.add_coeff(t, 0, i, i, -1.0);
        }
        for i in 0..self.loc_dim {
            prob.add_coeff(t, 1, i, i, -1.0);
        }
        if let Some(b) = &mut prob.bounds {
            let scale = 10.0 * (1.0 + self.anchor.norm());
            b.push((-scale, scale));
        }
        prob
    }

    /// Trace-minimization problem over the reduced Hankel block (the
    /// flatness-seeking heuristic).
    pub fn trace_min_problem(&self) -> SdpProblem {
        let mut prob = self.sdp.clone();
        for k in 0..prob.num_vars {
            let mut tr = 0.0;
            for e in &prob.coeffs[k] {
                if e.block == 0 && e.i == e.j {
                    tr += e.value;
                }
            }
            prob.objective[k] = -tr;
        }
        prob
    }

    /// Rebuild the full moment sequence (degree 2η) from solver output. The
    /// extra margin variable, when present, is ignored.
    pub fn sequence_from_solution(&self, y: &[f64]) -> MomentSequence {
        let kept = &y[0..self.params_free.min(y.len())];
        let params = self.substitution.recover(kept);
        let index = MomentIndex::new(self.gamma.g(), self.degree);
        let mut seq = MomentSequence::new(index.clone(), self.layout.n);
        for rep in index.representatives().to_vec() {
            if rep.is_empty() {
                continue;
            }
            let v = self.layout.value(&rep, &params);
            seq.set(rep, v);
        }
        seq
    }
}

/// Membership verdict at a fixed level.
#[derive(Clone, Debug)]
pub struct MembershipVerdict {
    pub status: FeasVerdict,
    pub level: usize,
    pub eta: usize,
    /// optimal margin t* of the margin reformulation
    pub margin: f64,
    /// smallest eigenvalue of the reduced Hankel block at the solution
    pub hankel_margin: f64,
    /// smallest eigenvalue of the localizing block at the solution
    pub localizing_margin: f64,
    /// feasible moment witness; present exactly when the verdict is feasible
    pub witness: Option<MomentSequence>,
    pub solver_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct MembershipOptions {
    pub objective: LiftObjective,
    pub bound_k: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            objective: LiftObjective::Margin,
            bound_k: None,
            solve: SolveOptions::default(),
        }
    }
}

/// Level-d membership of the anchor in the projected lift.
pub fn membership(
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    x: &HermTuple,
    d: usize,
    options: &MembershipOptions,
) -> Result<MembershipVerdict, HullError> {
    let lift = build_lift(
        p,
        gamma,
        x,
        d,
        &LiftOptions { bound_k: options.bound_k, solve: options.solve },
    )?;
    membership_of_lift(&lift, options)
}

pub fn membership_of_lift(
    lift: &LiftProblem,
    options: &MembershipOptions,
) -> Result<MembershipVerdict, HullError> {
    let prob = match options.objective {
        LiftObjective::Margin => lift.margin_problem(),
        LiftObjective::TraceMin => lift.trace_min_problem(),
    };
    let sol = sdp::solve(&prob, &options.solve)?;
    let (status, margin) = match (&sol.status, options.objective) {
        (SdpStatus::Optimal, LiftObjective::Margin) => {
            let t = sol.objective_value;
            (sdp::margin_verdict(t, options.solve.feas_margin), t)
        }
        (SdpStatus::Optimal, LiftObjective::TraceMin) => {
            let worst = sol.block_margins.iter().take(2).fold(f64::INFINITY, |a, &b| a.min(b));
            (sdp::margin_verdict(worst, -options.solve.feas_margin), worst)
        }
        (SdpStatus::InfeasibleCertified, _) => (FeasVerdict::Infeasible, f64::NEG_INFINITY),
        _ => (FeasVerdict::Indeterminate, f64::NAN),
    };
    let witness = if status == FeasVerdict::Feasible {
        Some(lift.sequence_from_solution(&sol.y))
    } else {
        None
    };
    // block margins of the unshifted feasibility problem at the returned
    // moment parameters (the margin variable, when present, is dropped)
    let feas_slack = lift.sdp.slack_at(&sol.y[0..lift.params_free]);
    let hankel_margin = feas_slack.first().map(|b| b.min_eig()).unwrap_or(f64::NAN);
    let localizing_margin = feas_slack.get(1).map(|b| b.min_eig()).unwrap_or(f64::NAN);
    Ok(MembershipVerdict {
        status,
        level: lift.level,
        eta: lift.eta,
        margin,
        hankel_margin,
        localizing_margin,
        witness,
        solver_iterations: sol.iterations,
    })
}

/// GNS realization extracted from a flat moment matrix: a Hermitian tuple Z
/// on the quotient space, an isometry V with V*Z^αV ≈ Y_α, and residuals.
#[derive(Clone, Debug)]
pub struct GnsRealization {
    pub z: HermTuple,
    pub v: CMat,
    pub rank: usize,
    /// max ‖V*Z^αV − Y_α‖ over |α| ≤ checked_degree
    pub residual_moments: f64,
    /// min eigenvalue of p(Z)
    pub residual_psd: f64,
    /// Γ-pair deviation of (Z, V)
    pub pair_deviation: f64,
    pub checked_degree: usize,
    pub flatness: FlatnessReport,
}

/// Extract the finite-dimensional representation from H_η(Y). The flatness
/// precondition uses drop = min(deg p, η) by default; `gns_extract_with_drop`
/// exposes the trigger for callers that certify a posteriori.
pub fn gns_extract(
    y: &MomentSequence,
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    eta: usize,
    tol: f64,
) -> Result<GnsRealization, HullError> {
    let drop = p.degree().min(eta);
    gns_extract_with_drop(y, p, gamma, eta, drop, tol)
}

pub fn gns_extract_with_drop(
    y: &MomentSequence,
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    eta: usize,
    drop: usize,
    tol: f64,
) -> Result<GnsRealization, HullError> {
    let rel_tol = tol.max(hermlin::DEFAULT_RANK_REL_TOL);
    let flatness = moments::is_flat(y, eta, drop, rel_tol)
        .map_err(|e| HullError::ShapeMismatch(format!("{e}")))?;
    if !flatness.flat {
        return Err(HullError::NotFlat(flatness));
    }
    let g = y.index().g();
    let n = y.n();
    let words = enumerate_words(g, eta);
    let h = moments::hankel(y, eta).map_err(|e| HullError::ShapeMismatch(format!("{e}")))?;
    let (vals, vecs) = h.as_mat().eig_herm();
    let lam_max = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> =
        (0..vals.len()).filter(|&i| vals[i] > rel_tol * lam_max && vals[i] > 0.0).collect();
    let rank = keep.len();
    if rank == 0 {
        return Err(HullError::ExtractionFailed("moment matrix is numerically zero".into()));
    }
    // factor H = P*P with P = Λ^{1/2} U* on the kept eigenpairs
    let total = words.len() * n;
    let mut pfac = CMat::zeros(rank, total);
    for (r, &i) in keep.iter().enumerate() {
        let s = libm::sqrt(vals[i]);
        for cidx in 0..total {
            pfac[(r, cidx)] = s * vecs[(cidx, i)].conj();
        }
    }
    let col_of = |w: &Word| -> Option<usize> { words.iter().position(|u| u == w) };
    let take_cols = |src: &CMat, idx: &[usize]| -> CMat {
        CMat::from_fn(src.rows, idx.len() * n, |r, c| src[(r, idx[c / n] * n + c % n)])
    };
    let low_words: Vec<usize> =
        words.iter().enumerate().filter(|(_, w)| w.len() < eta).map(|(i, _)| i).collect();
    let plow = take_cols(&pfac, &low_words);
    let gram = plow.matmul(&plow.adjoint());
    let (gvals, gvecs) = gram.eig_herm();
    let gmax = gvals.last().copied().unwrap_or(0.0).max(1e-300);
    // pseudo-inverse of the low-column Gram
    let ginv = {
        let mut scaled = gvecs.clone();
        for j in 0..rank {
            let inv = if gvals[j] > 1e-13 * gmax { 1.0 / gvals[j] } else { 0.0 };
            for i in 0..rank {
                scaled[(i, j)] *= Complex64::new(inv, 0.0);
            }
        }
        scaled.matmul(&gvecs.adjoint())
    };
    let mut zmats = Vec::with_capacity(g);
    let mut shift_residual = 0.0f64;
    for j in 1..=g as u8 {
        let shifted: Vec<usize> = low_words
            .iter()
            .map(|&i| {
                let mut v = vec![j];
                v.extend_from_slice(&words[i].0);
                col_of(&Word(v)).expect("shifted word within degree")
            })
            .collect();
        let pshift = take_cols(&pfac, &shifted);
        let zj = pshift.matmul(&plow.adjoint()).matmul(&ginv);
        let mut res = zj.matmul(&plow);
        res.add_scaled(&pshift, Complex64::new(-1.0, 0.0));
        shift_residual = shift_residual.max(res.max_abs());
        let mut zh = zj;
        zh.hermitize();
        zmats.push(zh);
    }
    let v = take_cols(&pfac, &[col_of(&Word::empty()).unwrap()]);
    let z = HermTuple::from_mats(zmats).map_err(|e| HullError::ExtractionFailed(format!("{e}")))?;

    // verify reproduced moments through degree 2η
    let mut word_vals: BTreeMap<Word, CMat> = BTreeMap::new();
    word_vals.insert(Word::empty(), CMat::identity(rank));
    let checked_degree = 2 * eta;
    let mut residual_moments = shift_residual;
    let vstar = v.adjoint();
    for w in enumerate_words(g, checked_degree) {
        if !w.is_empty() {
            let head = (w.0[0] - 1) as usize;
            let tail = Word(w.0[1..].to_vec());
            let val = z.mats()[head].matmul(&word_vals[&tail]);
            word_vals.insert(w.clone(), val);
        }
        if let Some(yw) = y.get(&w) {
            let mut diff = vstar.matmul(&word_vals[&w]).matmul(&v);
            diff.add_scaled(&yw, Complex64::new(-1.0, 0.0));
            residual_moments = residual_moments.max(diff.max_abs());
        }
    }
    let pz = p
        .evaluate(&z.mats())
        .map_err(|e| HullError::ExtractionFailed(format!("{e}")))?;
    let residual_psd = hermlin::min_eigenvalue(&pz);
    let pair_tol = convexity::gamma_pair_tolerance(&z);
    let (_, pair_deviation) = convexity::gamma_pair_check(gamma, &z, &v, pair_tol)
        .map_err(|e| HullError::ExtractionFailed(format!("{e}")))?;
    Ok(GnsRealization {
        z,
        v,
        rank,
        residual_moments,
        residual_psd,
        pair_deviation,
        checked_degree,
        flatness,
    })
}

/// Outcome of the hierarchy driver.
#[derive(Clone, Debug)]
pub enum HierarchyOutcome {
    /// feasible, flat and GNS-verified: the anchor is in the Γ-convex hull
    MemberCertified { level: usize, witness: GnsRealization },
    /// certified member by the caller-supplied positivity-certificate degree
    MemberByPcpAssumption { level: usize },
    /// excluded at some level (outer approximation), with an optional
    /// separating pencil certificate
    NotMember { level: usize, certificate: Option<SeparationCertificate> },
    /// level facts only; neither certification route closed
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub level: usize,
    pub eta: usize,
    pub verdict: FeasVerdict,
    pub margin: f64,
    pub hankel_margin: f64,
    pub localizing_margin: f64,
    pub flatness: Option<FlatnessReport>,
    pub gns_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct HierarchyReport {
    pub outcome: HierarchyOutcome,
    pub levels: Vec<LevelReport>,
    /// member-at-level verdicts never improved when the level increased
    pub monotone: bool,
}

#[derive(Clone, Debug)]
pub struct HierarchyCriteria {
    pub use_flatness: bool,
    /// accept membership at level ⌈N/2⌉ under the Γ-positivity certificate
    /// property with degree N
    pub use_pcp_degree: Option<usize>,
    /// QM degree for separation certificates at non-membership
    pub separation_degree: Option<usize>,
    pub bound_k: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for HierarchyCriteria {
    fn default() -> Self {
        HierarchyCriteria {
            use_flatness: true,
            use_pcp_degree: None,
            separation_degree: None,
            bound_k: None,
            solve: SolveOptions::default(),
        }
    }
}

/// Iterate levels d = 0..=d_max with flatness/GNS and separation stopping
/// criteria.
pub fn run_hierarchy(
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    x: &HermTuple,
    d_max: usize,
    criteria: &HierarchyCriteria,
) -> Result<HierarchyReport, HullError> {
    let mut levels = Vec::new();
    let mut monotone = true;
    let mut last_margin = f64::INFINITY;
    let gns_tol = 1e-7;
    for d in 0..=d_max {
        let lift = build_lift(
            p,
            gamma,
            x,
            d,
            &LiftOptions { bound_k: criteria.bound_k, solve: criteria.solve },
        )?;
        let margin_opts = MembershipOptions {
            objective: LiftObjective::Margin,
            bound_k: criteria.bound_k,
            solve: criteria.solve,
        };
        let verdict = membership_of_lift(&lift, &margin_opts)?;
        if verdict.margin.is_finite() {
            if verdict.margin > last_margin + 1e-6 * (1.0 + last_margin.abs()) {
                monotone = false;
            }
            last_margin = verdict.margin;
        }
        let mut report = LevelReport {
            level: d,
            eta: verdict.eta,
            verdict: verdict.status,
            margin: verdict.margin,
            hankel_margin: verdict.hankel_margin,
            localizing_margin: verdict.localizing_margin,
            flatness: None,
            gns_residual: None,
        };
        match verdict.status {
            FeasVerdict::Infeasible => {
                // outer approximation: exclusion at any level is final
                let certificate = criteria.separation_degree.and_then(|deg| {
                    certify::separate(p, gamma, x, deg, &criteria.solve).ok().flatten()
                });
                levels.push(report);
                return Ok(HierarchyReport {
                    outcome: HierarchyOutcome::NotMember { level: d, certificate },
                    levels,
                    monotone,
                });
            }
            FeasVerdict::Feasible => {
                if criteria.use_flatness {
                    // re-solve with the flatness-seeking objective
                    let trace_opts = MembershipOptions {
                        objective: LiftObjective::TraceMin,
                        bound_k: criteria.bound_k,
                        solve: criteria.solve,
                    };
                    if let Ok(tv) = membership_of_lift(&lift, &trace_opts) {
                        if let Some(seq) = tv.witness {
                            let drops = {
                                let a = p.degree().min(lift.eta);
                                if a >= 1 {
                                    vec![a, 1]
                                } else {
                                    vec![a]
                                }
                            };
                            for drop in drops {
                                match gns_extract_with_drop(&seq, p, gamma, lift.eta, drop, 1e-8) {
                                    Ok(gns) => {
                                        report.flatness = Some(gns.flatness);
                                        report.gns_residual = Some(gns.residual_moments);
                                        let compression_ok = {
                                            let vzv: Vec<CMat> = gns
                                                .z
                                                .mats()
                                                .iter()
                                                .map(|m| {
                                                    gns.v.adjoint().matmul(m).matmul(&gns.v)
                                                })
                                                .collect();
                                            let mut dev = 0.0f64;
                                            for (got, want) in vzv.iter().zip(x.mats().iter()) {
                                                let mut diff = got.clone();
                                                diff.add_scaled(want, Complex64::new(-1.0, 0.0));
                                                dev = dev.max(diff.max_abs());
                                            }
                                            dev <= 1e-7 * (1.0 + x.norm())
                                        };
                                        let psd_ok = gns.residual_psd
                                            >= -1e-7 * (1.0 + gns.z.norm() * gns.z.norm());
                                        let pair_ok = gns.pair_deviation
                                            <= convexity::gamma_pair_tolerance(&gns.z);
                                        if gns.residual_moments <= gns_tol
                                            && compression_ok
                                            && psd_ok
                                            && pair_ok
                                        {
                                            levels.push(report);
                                            return Ok(HierarchyReport {
                                                outcome: HierarchyOutcome::MemberCertified {
                                                    level: d,
                                                    witness: gns,
                                                },
                                                levels,
                                                monotone,
                                            });
                                        }
                                    }
                                    Err(HullError::NotFlat(f)) => {
                                        report.flatness = Some(f);
                                    }
                                    Err(_) => {}
                                }
                            }
                        }
                    }
                }
                if let Some(npcp) = criteria.use_pcp_degree {
                    if d >= npcp.div_ceil(2) {
                        levels.push(report);
                        return Ok(HierarchyReport {
                            outcome: HierarchyOutcome::MemberByPcpAssumption { level: d },
                            levels,
                            monotone,
                        });
                    }
                }
            }
            FeasVerdict::Indeterminate => {}
        }
        levels.push(report);
    }
    Ok(HierarchyReport { outcome: HierarchyOutcome::Undetermined, levels, monotone })
}

/// Symbolic description of the level-d lift as a Γ-pencil with lifted
/// moment unknowns: the Hankel and localizing blocks as a direct sum, each
/// cell an affine combination of {1, xᵢ, γⱼ} slot symbols and the real/
/// imaginary halves of the non-anchored moment matrices.
#[derive(Clone, Debug)]
pub struct SymbolicLiftPencil {
    pub level: usize,
    pub eta: usize,
    pub hankel_words: Vec<Word>,
    pub loc_words: Vec<Word>,
    pub mu: usize,
    /// total pattern dimension: |hankel words| + μ·|loc words|
    pub dim: usize,
    pub a0: CMat,
    pub ax: Vec<CMat>,
    pub agamma: Vec<CMat>,
    pub lifts: Vec<LiftVariable>,
}

/// One lifted moment unknown Y_u = W₁ + iW₂ (W₂ absent for palindromes):
/// contributes c ⊗ W₁ + d ⊗ W₂ to the pencil.
#[derive(Clone, Debug)]
pub struct LiftVariable {
    pub word: Word,
    pub c: CMat,
    pub d: Option<CMat>,
}

/// Symbolic value: affine combination over the slot basis
/// [1, x₁..x_g, γ_{g+1}..γ_r] plus lift references.
#[derive(Clone, Debug, Default)]
struct SymExpr {
    slots: Vec<(usize, Complex64)>,
}

pub fn emit_lift_pencil(
    p: &MatrixPolynomial,
    gamma: &GammaShape,
    d: usize,
) -> Result<SymbolicLiftPencil, HullError> {
    if !p.is_symmetric() {
        return Err(HullError::AsymmetricPolynomial);
    }
    if p.num_vars() != gamma.g() {
        return Err(HullError::ShapeMismatch("p and Γ variable counts differ".into()));
    }
    let eta = lift_eta(p, d);
    let degree = 2 * eta;
    if gamma.delta() > degree {
        return Err(HullError::GammaDegreeTooHigh { delta: gamma.delta(), degree });
    }
    let g = gamma.g();
    let r = gamma.r();
    let nslots = 1 + r;
    let mu = p.mu();
    let hankel_words = enumerate_words(g, eta);
    let loc_words = enumerate_words(g, d);
    let dim = hankel_words.len() + mu * loc_words.len();

    // symbolic resolution of low-degree words and γ-eliminated reps:
    // rep word -> (definition of W₁, definition of W₂)
    let mut defs: BTreeMap<Word, (Option<SymExpr>, Option<SymExpr>)> = BTreeMap::new();
    let low_expr = |w: &Word| -> Option<SymExpr> {
        match w.len() {
            0 => Some(SymExpr { slots: vec![(0, Complex64::new(1.0, 0.0))] }),
            1 => Some(SymExpr { slots: vec![(w.0[0] as usize, Complex64::new(1.0, 0.0))] }),
            _ => None,
        }
    };
    for j in g..r {
        let gj = gamma.gamma(j);
        // RHS starts as the γ_j slot; low-degree terms move across
        let mut rhs = SymExpr { slots: vec![(1 + j, Complex64::new(1.0, 0.0))] };
        let mut acc: BTreeMap<Word, (Complex64, Complex64)> = BTreeMap::new();
        for (w, cmat) in gj.terms() {
            let c = cmat[(0, 0)];
            if let Some(e) = low_expr(w) {
                for (s, v) in e.slots {
                    rhs.slots.push((s, -c * v));
                }
                continue;
            }
            let rep = w.canonical();
            let entry = acc.entry(rep.clone()).or_insert((
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ));
            // Y_w = W₁ ± iW₂; palindromes are Hermitian, W₂ absent
            entry.0 += c;
            if !rep.is_palindrome() {
                if rep == *w {
                    entry.1 += c * Complex64::new(0.0, 1.0);
                } else {
                    entry.1 += c * Complex64::new(0.0, -1.0);
                }
            }
        }
        let live: Vec<(Word, (Complex64, Complex64))> = acc
            .into_iter()
            .filter(|(_, (a, b))| a.norm() > 1e-14 || b.norm() > 1e-14)
            .collect();
        if live.len() != 1 {
            return Err(HullError::UnsupportedSymbolicGamma(format!(
                "γ_{} touches {} distinct moment unknowns",
                j + 1,
                live.len()
            )));
        }
        let (rep, (a, b)) = live.into_iter().next().unwrap();
        let entry = defs.entry(rep.clone()).or_insert((None, None));
        let pin = |e: &mut Option<SymExpr>, coeff: Complex64, rhs: &SymExpr| {
            let inv = Complex64::new(1.0, 0.0) / coeff;
            *e = Some(SymExpr {
                slots: rhs.slots.iter().map(|&(s, v)| (s, inv * v)).collect(),
            });
        };
        if a.norm() > 1e-14 && b.norm() <= 1e-14 {
            if rep.is_palindrome() || entry.0.is_none() {
                pin(&mut entry.0, a, &rhs);
            }
        } else if b.norm() > 1e-14 && a.norm() <= 1e-14 {
            pin(&mut entry.1, b, &rhs);
        } else {
            return Err(HullError::UnsupportedSymbolicGamma(format!(
                "γ_{} mixes the Hermitian and skew halves of Y_{rep}",
                j + 1
            )));
        }
    }

    // accumulate patterns: for every cell (position pair) and word, route the
    // contribution to slots or lifted halves
    let mut a_patterns: Vec<CMat> = (0..nslots).map(|_| CMat::zeros(dim, dim)).collect();
    let mut lift_c: BTreeMap<Word, CMat> = BTreeMap::new();
    let mut lift_d: BTreeMap<Word, CMat> = BTreeMap::new();

    {
        let mut route = |row: usize, col: usize, factor: Complex64, w: &Word| {
            if let Some(e) = low_expr(w) {
                for (s, v) in e.slots {
                    a_patterns[s][(row, col)] += factor * v;
                }
                return;
            }
            let rep = w.canonical();
            let adjoint = rep != *w;
            // Y_w = W₁ + iW₂ (or conjugate when on the adjoint side)
            let c1 = factor;
            let c2 = if adjoint {
                factor * Complex64::new(0.0, -1.0)
            } else {
                factor * Complex64::new(0.0, 1.0)
            };
            let (def1, def2) = defs.get(&rep).cloned().unwrap_or((None, None));
            match def1 {
                Some(e) => {
                    for (s, v) in e.slots {
                        a_patterns[s][(row, col)] += c1 * v;
                    }
                }
                None => {
                    lift_c
                        .entry(rep.clone())
                        .or_insert_with(|| CMat::zeros(dim, dim))[(row, col)] += c1;
                }
            }
            if rep.is_palindrome() {
                return; // Hermitian unknown: no skew half
            }
            match def2 {
                Some(e) => {
                    for (s, v) in e.slots {
                        a_patterns[s][(row, col)] += c2 * v;
                    }
                }
                None => {
                    lift_d.entry(rep).or_insert_with(|| CMat::zeros(dim, dim))[(row, col)] += c2;
                }
            }
        };

        for (ai, wa) in hankel_words.iter().enumerate() {
            for (bi, wb) in hankel_words.iter().enumerate() {
                let w = wa.adjoint().concat(wb);
                route(ai, bi, Complex64::new(1.0, 0.0), &w);
            }
        }
        let off = hankel_words.len();
        for (ai, wa) in loc_words.iter().enumerate() {
            for (bi, wb) in loc_words.iter().enumerate() {
                for (gw, coef) in p.terms() {
                    let w = wa.adjoint().concat(gw).concat(wb);
                    for s in 0..mu {
                        for t in 0..mu {
                            let c = coef[(s, t)];
                            if c.re == 0.0 && c.im == 0.0 {
                                continue;
                            }
                            route(off + ai * mu + s, off + bi * mu + t, c, &w);
                        }
                    }
                }
            }
        }
    }

    let lifts: Vec<LiftVariable> = lift_c
        .into_iter()
        .map(|(word, c)| {
            let d = lift_d.remove(&word);
            LiftVariable { word, c, d }
        })
        .collect();
    let mut it = a_patterns.into_iter();
    let a0 = it.next().unwrap();
    let ax: Vec<CMat> = (0..g).map(|_| it.next().unwrap()).collect();
    let agamma: Vec<CMat> = it.collect();
    Ok(SymbolicLiftPencil {
        level: d,
        eta,
        hankel_words,
        loc_words,
        mu,
        dim,
        a0,
        ax,
        agamma,
        lifts,
    })
}

impl SymbolicLiftPencil {
    /// Substitute a concrete anchor and moment sequence; returns the
    /// assembled block matrix (Hankel ⊕ localizing), which must match the
    /// directly-computed moment matrices.
    pub fn substitute(
        &self,
        gamma: &GammaShape,
        x: &HermTuple,
        y: &MomentSequence,
    ) -> Result<CMat, HullError> {
        let n = x.n();
        let img = gamma
            .gamma_map(&x.mats())
            .map_err(|e| HullError::ShapeMismatch(format!("{e}")))?;
        let mut acc = self.a0.kron(&CMat::identity(n));
        for (j, pat) in self.ax.iter().enumerate() {
            acc.add_scaled(&pat.kron(&img[j]), Complex64::new(1.0, 0.0));
        }
        for (j, pat) in self.agamma.iter().enumerate() {
            acc.add_scaled(&pat.kron(&img[gamma.g() + j]), Complex64::new(1.0, 0.0));
        }
        for lift in &self.lifts {
            let yv = y
                .get(&lift.word)
                .ok_or_else(|| HullError::ShapeMismatch(format!("missing Y_{}", lift.word)))?;
            let ystar = yv.adjoint();
            let mut w1 = yv.clone();
            w1.add_scaled(&ystar, Complex64::new(1.0, 0.0));
            w1.scale(Complex64::new(0.5, 0.0));
            acc.add_scaled(&lift.c.kron(&w1), Complex64::new(1.0, 0.0));
            if let Some(dpat) = &lift.d {
                let mut w2 = yv;
                w2.add_scaled(&ystar, Complex64::new(-1.0, 0.0));
                w2.scale(Complex64::new(0.0, -0.5));
                acc.add_scaled(&dpat.kron(&w2), Complex64::new(1.0, 0.0));
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::canonical_moments;

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
        // (1 − 2y² + x²) ⊕ (1 − x²)
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
    fn lift_block_sizes_match_displays() {
        // TV screen at n=1, d=0: full Hankel would be 7×7; the reduced one
        // keeps the four columns not ending in y
        let lift = build_lift(
            &tv_screen(),
            &y2_shape(),
            &HermTuple::scalars(&[0.3, 0.2]),
            0,
            &LiftOptions::default(),
        )
        .unwrap();
        assert_eq!(lift.eta, 2);
        assert_eq!(lift.hankel_words.len(), 4);
        assert_eq!(lift.loc_dim, 1);
        // box example, d = 0: η = 1, localizing blocks 2×2
        let lift = build_lift(
            &box_poly(),
            &y2_shape(),
            &HermTuple::scalars(&[0.0, 0.9]),
            0,
            &LiftOptions::default(),
        )
        .unwrap();
        assert_eq!(lift.eta, 1);
        assert_eq!(lift.hankel_words.len(), 2);
        assert_eq!(lift.loc_dim, 2);
        // exactly one free parameter: Y₁₁
        assert_eq!(lift.params_free, 1);
    }

    #[test]
    fn box_membership_is_the_square() {
        let shape = y2_shape();
        let p = box_poly();
        let opts = MembershipOptions::default();
        // inside the square but outside D_p
        let v = membership(&p, &shape, &HermTuple::scalars(&[0.0, 0.9]), 0, &opts).unwrap();
        assert_eq!(v.status, FeasVerdict::Feasible, "margin {}", v.margin);
        // outside the square
        let v = membership(&p, &shape, &HermTuple::scalars(&[0.0, 1.2]), 0, &opts).unwrap();
        assert_eq!(v.status, FeasVerdict::Infeasible, "margin {}", v.margin);
        let v = membership(&p, &shape, &HermTuple::scalars(&[1.1, 0.0]), 0, &opts).unwrap();
        assert_eq!(v.status, FeasVerdict::Infeasible, "margin {}", v.margin);
        // witness present on membership and validates
        let v = membership(&p, &shape, &HermTuple::scalars(&[0.5, 0.5]), 0, &opts).unwrap();
        let w = v.witness.expect("feasible verdicts carry a witness");
        let report =
            moments::validate_moment_sequence(&w, &shape, moments::ValidateOptions::default());
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn tv_membership_matches_the_screen_shape() {
        let shape = y2_shape();
        let p = tv_screen();
        let opts = MembershipOptions::default();
        for &(x0, y0) in
            &[(0.5, 0.5), (0.8, 0.8), (0.0, 0.999), (0.9995, 0.0), (1.05, 0.0), (0.7, 0.95)]
        {
            let inside = 1.0 - x0 * x0 - libm::pow(y0, 4.0) >= 0.0;
            let v = membership(&p, &shape, &HermTuple::scalars(&[x0, y0]), 0, &opts).unwrap();
            let want = if inside { FeasVerdict::Feasible } else { FeasVerdict::Infeasible };
            assert_eq!(v.status, want, "({x0},{y0}): margin {}", v.margin);
        }
    }

    #[test]
    fn soundness_members_of_dp_stay_members() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(77);
        let shape = y2_shape();
        let p = tv_screen();
        let opts = MembershipOptions::default();
        let mut tested = 0;
        while tested < 10 {
            let x0: f64 = rng.gen_range(-1.0..1.0);
            let y0: f64 = rng.gen_range(-1.0..1.0);
            if 1.0 - x0 * x0 - libm::pow(y0, 4.0) < 0.05 {
                continue;
            }
            tested += 1;
            for d in 0..=1 {
                let v = membership(&p, &shape, &HermTuple::scalars(&[x0, y0]), d, &opts).unwrap();
                assert_eq!(v.status, FeasVerdict::Feasible, "({x0},{y0}) at level {d}");
            }
        }
    }

    #[test]
    fn matrix_level_box_membership() {
        let shape = y2_shape();
        let p = box_poly();
        let opts = MembershipOptions::default();
        // ‖X‖, ‖Y‖ ≤ 0.95 → member
        let x = CMat::from_fn(2, 2, |i, j| if i == j { c(0.6) } else { c(0.25) });
        let y = CMat::from_fn(2, 2, |i, j| if i == j { c(-0.4) } else { c(0.3) });
        let t = HermTuple::from_mats(vec![x, y]).unwrap();
        let v = membership(&p, &shape, &t, 0, &opts).unwrap();
        assert_eq!(v.status, FeasVerdict::Feasible, "margin {}", v.margin);
        // eigenvalue 1.05 in X → not a member
        let x = CMat::from_fn(2, 2, |i, j| if i == j { c(if i == 0 { 1.05 } else { 0.2 }) } else { c(0.0) });
        let y = CMat::from_fn(2, 2, |i, j| if i == j { c(0.1) } else { c(0.05) });
        let t = HermTuple::from_mats(vec![x, y]).unwrap();
        let v = membership(&p, &shape, &t, 0, &opts).unwrap();
        assert_eq!(v.status, FeasVerdict::Infeasible, "margin {}", v.margin);
    }

    #[test]
    fn gns_recovers_scalar_atoms() {
        let shape = y2_shape();
        let p = tv_screen();
        let z = HermTuple::scalars(&[0.5, 0.5]);
        let y = canonical_moments(&z, &CMat::identity(1), 4).unwrap();
        let gns = gns_extract(&y, &p, &shape, 2, 1e-8).unwrap();
        assert_eq!(gns.rank, 1);
        assert!((gns.z.block(0).as_mat()[(0, 0)].re - 0.5).abs() < 1e-8);
        assert!((gns.z.block(1).as_mat()[(0, 0)].re - 0.5).abs() < 1e-8);
        assert!(gns.residual_moments < 1e-10);
        assert!(gns.residual_psd > 0.0);
        assert!(gns.pair_deviation < 1e-10);
    }

    #[test]
    fn gns_round_trip_on_matrix_canonical_moments() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(5);
        let shape = y2_shape();
        // p = 4 − x² − y², 2-Archimedean by construction
        let g = 2;
        let p = MatrixPolynomial::constant(c(4.0), g)
            .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), g))
            .add(&MatrixPolynomial::monomial(Word(vec![2, 2]), c(-1.0), g));
        for _ in 0..5 {
            let n = rng.gen_range(2..=3);
            let mut mk = |rng: &mut StdRng| {
                let mut m = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-0.5..0.5)));
                m.hermitize();
                m
            };
            let z = HermTuple::from_mats(vec![mk(&mut rng), mk(&mut rng)]).unwrap();
            let y = canonical_moments(&z, &CMat::identity(n), 8).unwrap();
            let gns = gns_extract(&y, &p, &shape, 4, 1e-8).unwrap();
            assert!(gns.residual_moments <= 1e-8, "residual {}", gns.residual_moments);
            assert!(gns.pair_deviation <= 1e-8);
            assert!(gns.residual_psd >= -1e-9);
        }
    }

    #[test]
    fn hierarchy_certifies_interior_point_at_level_zero() {
        let shape = y2_shape();
        let p = tv_screen();
        let crit = HierarchyCriteria { bound_k: Some(2.0), ..Default::default() };
        let rep = run_hierarchy(&p, &shape, &HermTuple::scalars(&[0.5, 0.5]), 1, &crit).unwrap();
        match rep.outcome {
            HierarchyOutcome::MemberCertified { level, ref witness } => {
                assert_eq!(level, 0);
                assert!(witness.residual_moments < 1e-7);
            }
            ref other => panic!("expected certification, got {other:?}"),
        }
        assert!(rep.monotone);
    }

    #[test]
    fn hierarchy_certifies_box_mixture_at_level_one() {
        let shape = y2_shape();
        let p = box_poly();
        let crit = HierarchyCriteria { bound_k: Some(2.0), ..Default::default() };
        let rep = run_hierarchy(&p, &shape, &HermTuple::scalars(&[0.0, 0.9]), 2, &crit).unwrap();
        match rep.outcome {
            HierarchyOutcome::MemberCertified { level, ref witness } => {
                assert!(level >= 1, "no flat witness exists at level 0");
                // witness compresses to the anchor and lives in D_p
                assert!(witness.residual_psd >= -1e-7);
            }
            ref other => panic!("expected certification, got {other:?}"),
        }
    }

    #[test]
    fn hierarchy_excludes_outsiders() {
        let shape = y2_shape();
        let p = box_poly();
        let crit = HierarchyCriteria::default();
        let rep = run_hierarchy(&p, &shape, &HermTuple::scalars(&[0.0, 1.2]), 1, &crit).unwrap();
        match rep.outcome {
            HierarchyOutcome::NotMember { level, .. } => assert_eq!(level, 0),
            ref other => panic!("expected exclusion, got {other:?}"),
        }
    }

    #[test]
    fn symbolic_pencil_reproduces_hankel_and_localizing() {
        let shape = y2_shape();
        let p = tv_screen();
        let pencil = emit_lift_pencil(&p, &shape, 0).unwrap();
        assert_eq!(pencil.hankel_words.len(), 7);
        // substitute canonical moments of a matrix pair in D_p
        let a = CMat::from_fn(2, 2, |i, j| if i == j { c(0.4) } else { c(0.1) });
        let b = CMat::from_fn(2, 2, |i, j| if i == j { c(if i == 0 { 0.5 } else { -0.5 }) } else { c(0.0) });
        let z = HermTuple::from_mats(vec![a, b]).unwrap();
        let y = canonical_moments(&z, &CMat::identity(2), 4).unwrap();
        let assembled = pencil.substitute(&shape, &z, &y).unwrap();
        let h = moments::hankel(&y, pencil.eta).unwrap();
        let loc = moments::localizing(&y, &p, 0).unwrap();
        let n = 2;
        let hd = pencil.hankel_words.len() * n;
        for i in 0..hd {
            for j in 0..hd {
                assert!(
                    (assembled[(i, j)] - h.as_mat()[(i, j)]).norm() < 1e-12,
                    "hankel cell ({i},{j})"
                );
            }
        }
        for i in 0..loc.n() {
            for j in 0..loc.n() {
                assert!(
                    (assembled[(hd + i, hd + j)] - loc.as_mat()[(i, j)]).norm() < 1e-12,
                    "loc cell ({i},{j})"
                );
            }
        }
        // off-diagonal coupling between the blocks is zero
        for i in 0..hd {
            for j in hd..assembled.cols {
                assert_eq!(assembled[(i, j)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn symbolic_pencil_trivial_gamma_has_no_slots() {
        let shape = GammaShape::coordinates(2);
        let p = box_poly();
        let pencil = emit_lift_pencil(&p, &shape, 0).unwrap();
        assert!(pencil.agamma.is_empty());
        // all degree-2 moments are lifted unknowns now
        assert!(pencil.lifts.iter().any(|l| l.word == Word(vec![2, 2])));
    }
}
