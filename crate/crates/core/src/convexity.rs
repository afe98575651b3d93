//! Γ-pairs, Γ-pencils and their positivity domains, spectrahedral inclusion
//! through the completely-positive-map SDP, boundedness certification and
//! polar-dual / matrix-range membership.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::freealg::{FreeAlgError, GammaShape};
use crate::hermlin::{self, HermTuple};
use crate::lmi::{LmiAssembler, MatrixKind, MatrixParam};
use crate::mat::CMat;
use crate::sdp::{self, FeasVerdict, SdpError, SdpStatus, SolveOptions};

#[derive(Clone, Debug)]
pub enum ConvexityError {
    NotIsometry { deviation: f64 },
    PartitionOfIdentity { deviation: f64 },
    GammaPairFailure { deviation: f64, tol: f64 },
    SizeMismatch(String),
    Unbounded(String),
    Solver(SdpError),
    Indeterminate(String),
    Algebra(FreeAlgError),
}

impl core::fmt::Display for ConvexityError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConvexityError::NotIsometry { deviation } => {
                write!(f, "map is not an isometry (deviation {deviation:e})")
            }
            ConvexityError::PartitionOfIdentity { deviation } => {
                write!(f, "Σ Vᵢ*Vᵢ deviates from the identity by {deviation:e}")
            }
            ConvexityError::GammaPairFailure { deviation, tol } => {
                write!(f, "Γ-pair check failed: deviation {deviation:e} > {tol:e}")
            }
            ConvexityError::SizeMismatch(s) => write!(f, "size mismatch: {s}"),
            ConvexityError::Unbounded(s) => write!(f, "unbounded spectrahedron: {s}"),
            ConvexityError::Solver(e) => write!(f, "solver: {e}"),
            ConvexityError::Indeterminate(s) => write!(f, "indeterminate: {s}"),
            ConvexityError::Algebra(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ConvexityError {}

impl From<SdpError> for ConvexityError {
    fn from(e: SdpError) -> Self {
        ConvexityError::Solver(e)
    }
}

impl From<FreeAlgError> for ConvexityError {
    fn from(e: FreeAlgError) -> Self {
        ConvexityError::Algebra(e)
    }
}

/// Default Γ-pair tolerance 1e−8·(1 + ‖X‖).
pub fn gamma_pair_tolerance(x: &HermTuple) -> f64 {
    1e-8 * (1.0 + x.norm())
}

/// V*Φ_Γ(X)V = Φ_Γ(V*XV) within `tol`; returns the max deviation over the
/// γ slots. V must pass the isometry check first.
pub fn gamma_pair_check(
    gamma: &GammaShape,
    x: &HermTuple,
    v: &CMat,
    tol: f64,
) -> Result<(bool, f64), ConvexityError> {
    let dev_iso = hermlin::isometry_deviation(v);
    if dev_iso > tol.max(1e-8) {
        return Err(ConvexityError::NotIsometry { deviation: dev_iso });
    }
    if v.rows != x.n() {
        return Err(ConvexityError::SizeMismatch(format!(
            "V has {} rows, tuple size {}",
            v.rows,
            x.n()
        )));
    }
    let vstar = v.adjoint();
    let compressed: Vec<CMat> = x.mats().iter().map(|m| vstar.matmul(m).matmul(v)).collect();
    let img_big = gamma.gamma_map(&x.mats())?;
    let img_small = gamma.gamma_map(&compressed)?;
    let mut dev = 0.0f64;
    for (big, small) in img_big.iter().zip(img_small.iter()) {
        let mut d = vstar.matmul(big).matmul(v);
        d.add_scaled(small, Complex64::new(-1.0, 0.0));
        let (vals, _) = d.eig_herm();
        let opnorm = vals.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        dev = dev.max(opnorm);
    }
    Ok((dev <= tol, dev))
}

/// A certified Γ-convex combination: the stacked pair witnessing it.
#[derive(Clone, Debug)]
pub struct PairWitness {
    pub stacked: HermTuple,
    pub isometry: CMat,
    pub deviation: f64,
}

/// Σ Vᵢ* X⁽ⁱ⁾ Vᵢ with (⊕X⁽ⁱ⁾, col(Vᵢ)) required to be a Γ-pair.
pub fn gamma_convex_combine(
    gamma: &GammaShape,
    pieces: &[HermTuple],
    vs: &[CMat],
) -> Result<(HermTuple, PairWitness), ConvexityError> {
    if pieces.is_empty() || pieces.len() != vs.len() {
        return Err(ConvexityError::SizeMismatch("pieces and maps must pair up".into()));
    }
    let g = pieces[0].g();
    let n = vs[0].cols;
    for (piece, v) in pieces.iter().zip(vs.iter()) {
        if piece.g() != g || v.cols != n || v.rows != piece.n() {
            return Err(ConvexityError::SizeMismatch("inconsistent piece/map shapes".into()));
        }
    }
    // partition of identity
    let mut gram = CMat::zeros(n, n);
    for v in vs {
        gram.add_scaled(&v.adjoint().matmul(v), Complex64::new(1.0, 0.0));
    }
    gram.add_scaled(&CMat::identity(n), Complex64::new(-1.0, 0.0));
    let dev = gram.max_abs();
    if dev > 1e-10 * (1.0 + n as f64) {
        return Err(ConvexityError::PartitionOfIdentity { deviation: dev });
    }
    // stack
    let total: usize = pieces.iter().map(|p| p.n()).sum();
    let mut stacked_mats = vec![CMat::zeros(total, total); g];
    let mut col = CMat::zeros(total, n);
    let mut offset = 0;
    for (piece, v) in pieces.iter().zip(vs.iter()) {
        for (j, m) in piece.mats().iter().enumerate() {
            for i in 0..m.rows {
                for k in 0..m.cols {
                    stacked_mats[j][(offset + i, offset + k)] = m[(i, k)];
                }
            }
        }
        for i in 0..v.rows {
            for k in 0..n {
                col[(offset + i, k)] = v[(i, k)];
            }
        }
        offset += piece.n();
    }
    let stacked = HermTuple::from_mats(stacked_mats)
        .map_err(|e| ConvexityError::SizeMismatch(format!("{e}")))?;
    let tol = gamma_pair_tolerance(&stacked);
    let (ok, deviation) = gamma_pair_check(gamma, &stacked, &col, tol)?;
    if !ok {
        return Err(ConvexityError::GammaPairFailure { deviation, tol });
    }
    let vstar = col.adjoint();
    let combo: Vec<CMat> = stacked.mats().iter().map(|m| vstar.matmul(m).matmul(&col)).collect();
    let combo = HermTuple::from_mats(combo).map_err(|e| ConvexityError::SizeMismatch(format!("{e}")))?;
    Ok((combo, PairWitness { stacked, isometry: col, deviation }))
}

/// Γ-pencil A₀ + Σ Aᵢxᵢ + Σ Aⱼγⱼ(x) with Hermitian ℓ×ℓ coefficients.
#[derive(Clone, Debug)]
pub struct GammaPencil {
    gamma: GammaShape,
    size: usize,
    /// A₀ followed by one coefficient per γ slot (r of them)
    coeffs: Vec<CMat>,
}

impl GammaPencil {
    pub fn new(gamma: GammaShape, coeffs: Vec<CMat>) -> Result<Self, ConvexityError> {
        if coeffs.len() != gamma.r() + 1 {
            return Err(ConvexityError::SizeMismatch(format!(
                "need {} coefficients (A₀ and one per γ), got {}",
                gamma.r() + 1,
                coeffs.len()
            )));
        }
        let size = coeffs[0].rows;
        for (i, c) in coeffs.iter().enumerate() {
            if c.rows != size || c.cols != size {
                return Err(ConvexityError::SizeMismatch(format!("coefficient {i} size")));
            }
            if c.herm_deviation() > 1e-10 * (1.0 + c.frobenius()) {
                return Err(ConvexityError::SizeMismatch(format!("coefficient {i} not Hermitian")));
            }
        }
        Ok(GammaPencil { gamma, size, coeffs })
    }

    /// Monic pencil with the given linear and γ coefficients.
    pub fn monic(gamma: GammaShape, rest: Vec<CMat>) -> Result<Self, ConvexityError> {
        let size = rest.first().map(|c| c.rows).unwrap_or(1);
        let mut coeffs = vec![CMat::identity(size)];
        coeffs.extend(rest);
        Self::new(gamma, coeffs)
    }

    pub fn gamma(&self) -> &GammaShape {
        &self.gamma
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn a0(&self) -> &CMat {
        &self.coeffs[0]
    }

    /// Coefficient of γ slot j (0-based over the r slots).
    pub fn slot(&self, j: usize) -> &CMat {
        &self.coeffs[j + 1]
    }

    pub fn is_monic(&self) -> bool {
        let mut d = self.coeffs[0].clone();
        d.add_scaled(&CMat::identity(self.size), Complex64::new(-1.0, 0.0));
        d.max_abs() == 0.0
    }

    /// L^Γ(X) = A₀⊗I + Σ Aᵢ⊗Xᵢ + Σ Aⱼ⊗γⱼ(X).
    pub fn evaluate(&self, x: &HermTuple) -> Result<CMat, ConvexityError> {
        let n = x.n();
        let img = self.gamma.gamma_map(&x.mats())?;
        let mut acc = self.coeffs[0].kron(&CMat::identity(n));
        for (j, slot_val) in img.iter().enumerate() {
            acc.add_scaled(&self.coeffs[j + 1].kron(slot_val), Complex64::new(1.0, 0.0));
        }
        Ok(acc)
    }
}

/// Γ-pencil extended by linear terms in extra symmetric lifted variables.
#[derive(Clone, Debug)]
pub struct LiftedGammaPencil {
    pub base: GammaPencil,
    /// coefficients B₁..B_h of the lifted variables
    pub lifts: Vec<CMat>,
}

impl LiftedGammaPencil {
    pub fn new(base: GammaPencil, lifts: Vec<CMat>) -> Result<Self, ConvexityError> {
        let size = base.size();
        for (k, b) in lifts.iter().enumerate() {
            if b.rows != size || b.cols != size {
                return Err(ConvexityError::SizeMismatch(format!("lift coefficient {k} size")));
            }
            if b.herm_deviation() > 1e-10 * (1.0 + b.frobenius()) {
                return Err(ConvexityError::SizeMismatch(format!(
                    "lift coefficient {k} not Hermitian"
                )));
            }
        }
        Ok(LiftedGammaPencil { base, lifts })
    }

    pub fn h(&self) -> usize {
        self.lifts.len()
    }

    pub fn evaluate(&self, x: &HermTuple, w: &[CMat]) -> Result<CMat, ConvexityError> {
        if w.len() != self.lifts.len() {
            return Err(ConvexityError::SizeMismatch("lifted variable count".into()));
        }
        let mut acc = self.base.evaluate(x)?;
        for (b, wk) in self.lifts.iter().zip(w.iter()) {
            acc.add_scaled(&b.kron(wk), Complex64::new(1.0, 0.0));
        }
        Ok(acc)
    }
}

/// Membership in the matricial positivity domain of a Γ-pencil: the margin
/// is the smallest eigenvalue of L^Γ(X).
pub fn gamma_spectrahedron_membership(
    l: &GammaPencil,
    x: &HermTuple,
    tol: f64,
) -> Result<(bool, f64), ConvexityError> {
    let val = l.evaluate(x)?;
    let margin = hermlin::min_eigenvalue(&val);
    Ok((margin >= -tol, margin))
}

#[derive(Clone, Debug)]
pub struct DropVerdict {
    pub verdict: FeasVerdict,
    pub margin: f64,
    /// witnessing lifted variables when feasible
    pub witness: Option<Vec<CMat>>,
}

/// Spectrahedrop membership: ∃ Hermitian W₁..W_h of size n with
/// L(X, W) ⪰ 0, decided by margin maximization.
pub fn spectrahedrop_membership(
    l: &LiftedGammaPencil,
    x: &HermTuple,
    options: &SolveOptions,
) -> Result<DropVerdict, ConvexityError> {
    if l.h() == 0 {
        let (_, margin) = gamma_spectrahedron_membership(&l.base, x, options.feas_margin)?;
        return Ok(DropVerdict {
            verdict: sdp::margin_verdict(margin, options.feas_margin),
            margin,
            witness: Some(vec![]),
        });
    }
    let n = x.n();
    let base_val = l.base.evaluate(x)?;
    let real_mode = base_val.max_imag() == 0.0 && l.lifts.iter().all(|b| b.max_imag() == 0.0);
    let kind = if real_mode { MatrixKind::RealSymmetric } else { MatrixKind::Hermitian };
    let param = MatrixParam { n, kind };
    let per = param.count();
    let num_vars = l.h() * per + 1; // + margin t
    let tvar = num_vars - 1;
    let mut asm = LmiAssembler::new(num_vars);
    let dim = base_val.rows;
    let blk = asm.add_block(dim);
    asm.add_const_mat(blk, 0, 0, &base_val);
    for (k, b) in l.lifts.iter().enumerate() {
        for q in 0..per {
            let coeff = b.kron(&param.basis(q));
            asm.add_coeff_mat(k * per + q, blk, 0, 0, &coeff);
        }
    }
    for i in 0..dim {
        asm.add_coeff(tvar, blk, i, i, Complex64::new(-1.0, 0.0));
    }
    let mut objective = vec![0.0; num_vars];
    objective[tvar] = 1.0;
    let scale = 1.0 + x.norm();
    let mut bounds = vec![(-1e3 * scale, 1e3 * scale); num_vars];
    bounds[tvar] = (-10.0 * scale, 10.0 * scale);
    let prob = asm.finish(objective, Some(bounds));
    let sol = sdp::solve(&prob, options)?;
    match sol.status {
        SdpStatus::Optimal => {
            let t = sol.objective_value;
            let witness = if t > -options.feas_margin {
                let w: Vec<CMat> = (0..l.h())
                    .map(|k| param.assemble(&sol.y[k * per..(k + 1) * per]))
                    .collect();
                Some(w)
            } else {
                None
            };
            Ok(DropVerdict { verdict: sdp::margin_verdict(t, options.feas_margin), margin: t, witness })
        }
        other => Err(ConvexityError::Indeterminate(format!("{other:?}"))),
    }
}

#[derive(Clone, Debug)]
pub struct InclusionVerdict {
    pub verdict: FeasVerdict,
    /// Euclidean norm of the best constraint residual
    pub residual: f64,
    /// Choi matrix of the certifying map (audit data)
    pub choi: CMat,
}

/// Decide D_A ⊆ D_B through existence of a unital completely positive map
/// with A_i ↦ B_i, posed as PSD residual minimization over the Choi matrix.
/// Requires D_A bounded.
pub fn inclusion(
    a: &HermTuple,
    b: &HermTuple,
    options: &SolveOptions,
) -> Result<InclusionVerdict, ConvexityError> {
    if a.g() != b.g() {
        return Err(ConvexityError::SizeMismatch(format!(
            "tuples have {} and {} entries",
            a.g(),
            b.g()
        )));
    }
    let bounded = spectrahedron_bounded(a, options)?;
    if !bounded.bounded {
        return Err(ConvexityError::Unbounded(
            "D_A must be bounded for the completely-positive test".into(),
        ));
    }
    inclusion_unchecked(a, b, options)
}

/// The Choi-matrix SDP without the boundedness precondition (callers that
/// already certified it).
pub fn inclusion_unchecked(
    a: &HermTuple,
    b: &HermTuple,
    options: &SolveOptions,
) -> Result<InclusionVerdict, ConvexityError> {
    let d1 = a.n();
    let d2 = b.n();
    let g = a.g();
    let real_mode = a.is_real() && b.is_real();
    let kind = if real_mode { MatrixKind::RealSymmetric } else { MatrixKind::Hermitian };
    let choi_param = MatrixParam { n: d1 * d2, kind };
    let nw = choi_param.count();
    let svar = nw; // residual bound s
    let num_vars = nw + 1;

    // residual rows: for each constraint matrix entry, Re and Im parts
    // constraints: Σ_k W_{kk} = I (unital), Σ_{kl} (A_i)_{kl} W_{kl} = B_i
    // W block index (k,l) means rows k·d2.., cols l·d2..
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    {
        let amats = a.mats();
        let bmats = b.mats();
        // rows indexed by (constraint, i, j, re/im) over i ≤ j Hermitian parts
        for cons in 0..=g {
            for i in 0..d2 {
                for j in i..d2 {
                    for part in 0..2 {
                        if part == 1 && i == j {
                            continue; // diagonal imaginary parts vanish for Hermitian residuals
                        }
                        let mut row: Vec<(usize, f64)> = Vec::new();
                        for q in 0..nw {
                            let e = choi_param.basis(q);
                            // value of the constraint functional at basis E:
                            // Σ_{kl} c_{kl} E[(k·d2+i, l·d2+j)]
                            let mut z = Complex64::new(0.0, 0.0);
                            for k in 0..d1 {
                                for lcol in 0..d1 {
                                    let c = if cons == 0 {
                                        if k == lcol {
                                            Complex64::new(1.0, 0.0)
                                        } else {
                                            continue;
                                        }
                                    } else {
                                        let v = amats[cons - 1][(k, lcol)];
                                        if v.re == 0.0 && v.im == 0.0 {
                                            continue;
                                        }
                                        v
                                    };
                                    z += c * e[(k * d2 + i, lcol * d2 + j)];
                                }
                            }
                            let val = if part == 0 { z.re } else { z.im };
                            if val != 0.0 {
                                row.push((q, val));
                            }
                        }
                        let target = if cons == 0 {
                            if i == j {
                                Complex64::new(1.0, 0.0)
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        } else {
                            bmats[cons - 1][(i, j)]
                        };
                        let tval = if part == 0 { target.re } else { target.im };
                        rows.push((row, tval));
                    }
                }
            }
        }
    }

    let nres = rows.len();
    let mut asm = LmiAssembler::new(num_vars);
    // Choi PSD block
    let wblk = asm.add_block(d1 * d2);
    for q in 0..nw {
        let e = choi_param.basis(q);
        asm.add_coeff_mat(q, wblk, 0, 0, &e);
    }
    // residual block [[s, rᵀ], [r, I]] ⪰ 0 ⟺ s ≥ ‖r‖²
    let rblk = asm.add_block(1 + nres);
    asm.add_coeff(svar, rblk, 0, 0, Complex64::new(1.0, 0.0));
    for (ridx, (row, target)) in rows.iter().enumerate() {
        asm.add_const(rblk, 1 + ridx, 1 + ridx, Complex64::new(1.0, 0.0));
        asm.add_const(rblk, 0, 1 + ridx, Complex64::new(-target, 0.0));
        asm.add_const(rblk, 1 + ridx, 0, Complex64::new(-target, 0.0));
        for &(q, c) in row {
            asm.add_coeff(q, rblk, 0, 1 + ridx, Complex64::new(c, 0.0));
            asm.add_coeff(q, rblk, 1 + ridx, 0, Complex64::new(c, 0.0));
        }
    }
    let mut objective = vec![0.0; num_vars];
    objective[svar] = -1.0; // minimize s
    let scale = 1.0 + a.norm().max(b.norm());
    let mut bounds = vec![(-1e3 * scale, 1e3 * scale); num_vars];
    bounds[svar] = (-1.0, 1e6 * scale * scale);
    let prob = asm.finish(objective, Some(bounds));
    let sol = sdp::solve(&prob, options)?;
    if !sol.is_optimal() {
        return Err(ConvexityError::Indeterminate(format!("{:?}", sol.status)));
    }
    let s_star = sol.y[svar].max(0.0);

    // project the returned Choi parameters exactly onto the affine
    // constraint set (least-norm correction), then re-check positivity; the
    // verdict must not hinge on the solver's gap floor
    let params = &sol.y[0..nw];
    let resid_at = |p: &[f64]| -> Vec<f64> {
        rows.iter()
            .map(|(row, target)| {
                row.iter().map(|&(q, c)| c * p[q]).sum::<f64>() - target
            })
            .collect()
    };
    let r0 = resid_at(params);
    let corrected = {
        // min ‖Δ‖ with R Δ = −r via the eigen pseudo-inverse of R Rᵀ
        let mut rrt = crate::mat::RMat::zeros(nres, nres);
        for (i, (ri, _)) in rows.iter().enumerate() {
            for (j, (rj, _)) in rows.iter().enumerate().skip(i) {
                let mut dot = 0.0;
                for &(qa, ca) in ri {
                    for &(qb, cb) in rj {
                        if qa == qb {
                            dot += ca * cb;
                        }
                    }
                }
                rrt[(i, j)] = dot;
                rrt[(j, i)] = dot;
            }
        }
        let (vals, q) = rrt.eig_sym();
        let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
        // λ⁺ pseudo-inverse applied to −r0
        let mut qt_r = vec![0.0; nres];
        for k in 0..nres {
            let mut acc = 0.0;
            for i in 0..nres {
                acc += q[(i, k)] * (-r0[i]);
            }
            qt_r[k] = acc;
        }
        let mut u = vec![0.0; nres];
        for k in 0..nres {
            if vals[k] > 1e-12 * top {
                u[k] = qt_r[k] / vals[k];
            }
        }
        let mut lambda = vec![0.0; nres];
        for i in 0..nres {
            let mut acc = 0.0;
            for k in 0..nres {
                acc += q[(i, k)] * u[k];
            }
            lambda[i] = acc;
        }
        // Δ = Rᵀ λ
        let mut p2 = params.to_vec();
        for (i, (row, _)) in rows.iter().enumerate() {
            for &(qi, c) in row {
                p2[qi] += c * lambda[i];
            }
        }
        p2
    };
    let r1 = resid_at(&corrected);
    let post_residual = libm::sqrt(r1.iter().map(|v| v * v).sum::<f64>());
    let choi = choi_param.assemble(&corrected);
    let psd_margin = hermlin::min_eigenvalue(&choi);
    let choi_scale = 1.0 + choi.frobenius();
    let feasible = post_residual <= 1e-8 * scale && psd_margin >= -1e-7 * choi_scale;
    // √s* is a solver-certified lower bound on the attainable residual
    let exclude = libm::sqrt(s_star) >= 1e-4 * scale;
    let verdict = if feasible {
        FeasVerdict::Feasible
    } else if exclude {
        FeasVerdict::Infeasible
    } else {
        FeasVerdict::Indeterminate
    };
    let residual = if feasible { post_residual } else { libm::sqrt(s_star) };
    Ok(InclusionVerdict { verdict, residual, choi })
}

#[derive(Clone, Debug)]
pub struct BoundedReport {
    pub bounded: bool,
    /// max |x_j| over the level-one spectrahedron per coordinate direction
    pub direction_bounds: Vec<f64>,
    /// whether {I, A₁,…,A_g} is linearly independent
    pub independent: bool,
    pub indeterminate: bool,
}

/// Decide boundedness of D_A: the matrix convex set D_A is bounded iff its
/// scalar level D_A(1) is, tested by maximizing ±x_j over
/// {x : I + Σ xᵢAᵢ ⪰ 0} within a large safety box; an optimizer pinned to
/// the box is treated as an unbounded recession direction. Also reports
/// linear independence of {I, A₁,…,A_g}.
pub fn spectrahedron_bounded(
    a: &HermTuple,
    options: &SolveOptions,
) -> Result<BoundedReport, ConvexityError> {
    let g = a.g();
    let d = a.n();
    let box_cap = 1e4;
    let mut direction_bounds = vec![0.0f64; g];
    let mut bounded = true;
    let mut indeterminate = false;
    for j in 0..g {
        for sign in [1.0, -1.0] {
            let mut asm = LmiAssembler::new(g);
            let blk = asm.add_block(d);
            asm.add_const_mat(blk, 0, 0, &CMat::identity(d));
            for (k, m) in a.mats().iter().enumerate() {
                asm.add_coeff_mat(k, blk, 0, 0, m);
            }
            let mut objective = vec![0.0; g];
            objective[j] = sign;
            let bounds = vec![(-box_cap, box_cap); g];
            let prob = asm.finish(objective, Some(bounds));
            let sol = sdp::solve(&prob, options)?;
            match sol.status {
                SdpStatus::Optimal => {
                    let v = sol.objective_value;
                    direction_bounds[j] = direction_bounds[j].max(v);
                    if v >= 0.99 * box_cap {
                        bounded = false;
                    }
                }
                SdpStatus::Unbounded => {
                    bounded = false;
                }
                _ => {
                    indeterminate = true;
                }
            }
        }
    }
    // independence of {I, A₁..A_g} via the real Gram of Re tr(M*N)
    let independent = {
        let mut mats: Vec<CMat> = vec![CMat::identity(d)];
        mats.extend(a.mats());
        let k = mats.len();
        let mut gram = crate::mat::RMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let ip = mats[i].adjoint().matmul(&mats[j]).trace();
                gram[(i, j)] = ip.re;
            }
        }
        let (vals, _) = gram.eig_sym();
        let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
        vals.iter().filter(|&&v| v > 1e-10 * top).count() == k
    };
    Ok(BoundedReport { bounded, direction_bounds, independent, indeterminate })
}

#[derive(Clone, Debug)]
pub struct PolarVerdict {
    pub verdict: FeasVerdict,
    pub residual: f64,
    pub independent: bool,
}

/// Γ-polar / Γ-matrix-range membership: X ∈ D_A^{Γ∘} ⟺ D_{Γ(A)} ⊆ D_{Γ(X)}
/// ⟺ the unital Γ-concomitant γⱼ(A) ↦ γⱼ(X) is completely positive.
/// Requires D_{Γ(A)} bounded.
pub fn gamma_polar_membership(
    gamma: &GammaShape,
    a: &HermTuple,
    x: &HermTuple,
    options: &SolveOptions,
) -> Result<PolarVerdict, ConvexityError> {
    let ga = HermTuple::from_mats(gamma.gamma_map(&a.mats())?)
        .map_err(|e| ConvexityError::SizeMismatch(format!("{e}")))?;
    let gx = HermTuple::from_mats(gamma.gamma_map(&x.mats())?)
        .map_err(|e| ConvexityError::SizeMismatch(format!("{e}")))?;
    let report = spectrahedron_bounded(&ga, options)?;
    if !report.bounded {
        return Err(ConvexityError::Unbounded(
            "D_{Γ(A)} must be bounded for the polar membership test".into(),
        ));
    }
    let incl = inclusion_unchecked(&ga, &gx, options)?;
    Ok(PolarVerdict { verdict: incl.verdict, residual: incl.residual, independent: report.independent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::{MatrixPolynomial, Word};

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

    fn herm(entries: &[&[f64]]) -> CMat {
        let n = entries.len();
        CMat::from_fn(n, n, |i, j| c(entries[i][j]))
    }

    #[test]
    fn unitaries_are_gamma_pairs() {
        let shape = y2_shape();
        let x = HermTuple::from_mats(vec![
            herm(&[&[1.0, 0.0], &[0.0, -1.0]]),
            herm(&[&[0.0, 1.0], &[1.0, 0.0]]),
        ])
        .unwrap();
        // a rotation unitary
        let th = 0.3f64;
        let u = CMat::from_fn(2, 2, |i, j| {
            c(match (i, j) {
                (0, 0) => libm::cos(th),
                (0, 1) => -libm::sin(th),
                (1, 0) => libm::sin(th),
                _ => libm::cos(th),
            })
        });
        let (ok, dev) = gamma_pair_check(&shape, &x, &u, 1e-8).unwrap();
        assert!(ok, "deviation {dev}");
    }

    #[test]
    fn reducing_isometries_are_gamma_pairs_and_e1_usually_is_not() {
        let shape = y2_shape();
        // Y = [[0,1],[1,0]] is NOT reduced by e₁: V*Y²V = 1 ≠ 0 = (V*YV)²
        let x = HermTuple::from_mats(vec![
            herm(&[&[0.5, 0.0], &[0.0, 0.25]]),
            herm(&[&[0.0, 1.0], &[1.0, 0.0]]),
        ])
        .unwrap();
        let e1 = CMat::from_fn(2, 1, |i, _| if i == 0 { c(1.0) } else { c(0.0) });
        let (ok, dev) = gamma_pair_check(&shape, &x, &e1, 1e-8).unwrap();
        assert!(!ok);
        assert!((dev - 1.0).abs() < 1e-12);

        // an isometry reducing both coordinates is a Γ-pair
        let x = HermTuple::from_mats(vec![
            herm(&[&[0.5, 0.0], &[0.0, 0.25]]),
            herm(&[&[0.9, 0.0], &[0.0, -0.3]]),
        ])
        .unwrap();
        let (ok, _) = gamma_pair_check(&shape, &x, &e1, 1e-8).unwrap();
        assert!(ok);
    }

    #[test]
    fn combine_builds_the_mixture_witness() {
        // (0, 0.9) as the ½-½ combination of (±1, 0.9) with Γ = (x,y,y²)
        let shape = y2_shape();
        let pieces = vec![HermTuple::scalars(&[1.0, 0.9]), HermTuple::scalars(&[-1.0, 0.9])];
        let s = 1.0 / libm::sqrt(2.0);
        let vs = vec![CMat::scalar(c(s)), CMat::scalar(c(s))];
        let (combo, witness) = gamma_convex_combine(&shape, &pieces, &vs).unwrap();
        assert!((combo.block(0).as_mat()[(0, 0)].re - 0.0).abs() < 1e-12);
        assert!((combo.block(1).as_mat()[(0, 0)].re - 0.9).abs() < 1e-12);
        assert!(witness.deviation < 1e-12);

        // failing partition of identity
        let vs = vec![CMat::scalar(c(1.0)), CMat::scalar(c(1.0))];
        assert!(matches!(
            gamma_convex_combine(&shape, &pieces, &vs),
            Err(ConvexityError::PartitionOfIdentity { .. })
        ));
    }

    #[test]
    fn monic_pencil_at_zero_has_margin_one() {
        let shape = y2_shape();
        let l = GammaPencil::monic(
            shape,
            vec![
                herm(&[&[0.3, 0.0], &[0.0, -0.3]]),
                herm(&[&[0.0, 0.5], &[0.5, 0.0]]),
                herm(&[&[0.2, 0.0], &[0.0, 0.2]]),
            ],
        )
        .unwrap();
        let zero = HermTuple::scalars(&[0.0, 0.0]);
        let (ok, margin) = gamma_spectrahedron_membership(&l, &zero, 1e-9).unwrap();
        assert!(ok);
        assert!((margin - 1.0).abs() < 1e-12);
        assert!(l.is_monic());
    }

    #[test]
    fn inclusion_reflexive_and_interval_counterexample() {
        let opts = SolveOptions::default();
        // A = diag(1,−1): D_A(1) = [−1,1]
        let a = HermTuple::from_mats(vec![herm(&[&[1.0, 0.0], &[0.0, -1.0]])]).unwrap();
        let v = inclusion(&a, &a, &opts).unwrap();
        assert_eq!(v.verdict, FeasVerdict::Feasible, "residual {}", v.residual);
        // B = 2·diag(1,−1): D_B(1) = [−½,½] does not contain [−1,1]
        let b = HermTuple::from_mats(vec![herm(&[&[2.0, 0.0], &[0.0, -2.0]])]).unwrap();
        let v = inclusion(&a, &b, &opts).unwrap();
        assert_eq!(v.verdict, FeasVerdict::Infeasible, "residual {}", v.residual);
        // the reverse direction does hold
        let v = inclusion(&b, &a, &opts).unwrap();
        assert_eq!(v.verdict, FeasVerdict::Feasible, "residual {}", v.residual);
    }

    #[test]
    fn compression_images_are_included() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(31);
        let opts = SolveOptions::default();
        for _ in 0..5 {
            let d = 3;
            // bounded A: diag blocks with both signs per coordinate
            let mk = |rng: &mut StdRng| {
                let mut m = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-0.5..0.5)));
                m.hermitize();
                m
            };
            let a1 = mk(&mut rng);
            let a2 = mk(&mut rng);
            // append ±1 diagonal tails to enforce boundedness of D_A
            let pad = |m: &CMat, s1: f64, s2: f64| {
                let mut big = CMat::zeros(d + 2, d + 2);
                for i in 0..d {
                    for j in 0..d {
                        big[(i, j)] = m[(i, j)];
                    }
                }
                big[(d, d)] = c(s1);
                big[(d + 1, d + 1)] = c(s2);
                big
            };
            let a = HermTuple::from_mats(vec![pad(&a1, 1.0, -1.0), pad(&a2, 1.0, -1.0)]).unwrap();
            // B_i = Σ V_k* A_i V_k with Σ V_k* V_k = I: a ucp image
            let m = 2;
            let v1 = CMat::from_fn(d + 2, m, |_, _| c(rng.gen_range(-1.0..1.0)));
            // orthonormalize columns of the stacked map
            let gram = v1.adjoint().matmul(&v1);
            let (vals, q) = gram.eig_herm();
            let mut inv_half = CMat::zeros(m, m);
            for k in 0..m {
                inv_half[(k, k)] = c(1.0 / libm::sqrt(vals[k].max(1e-12)));
            }
            let v = v1.matmul(&q).matmul(&inv_half).matmul(&q.adjoint());
            let bmats: Vec<CMat> = a
                .mats()
                .iter()
                .map(|ai| v.adjoint().matmul(ai).matmul(&v))
                .collect();
            let b = HermTuple::from_mats(bmats).unwrap();
            let verdict = inclusion(&a, &b, &opts).unwrap();
            assert_eq!(verdict.verdict, FeasVerdict::Feasible, "residual {}", verdict.residual);
        }
    }

    #[test]
    fn boundedness_examples() {
        let opts = SolveOptions::default();
        // diag(1,−1): bounded, D_A(1) = [−1, 1]
        let a = HermTuple::from_mats(vec![herm(&[&[1.0, 0.0], &[0.0, -1.0]])]).unwrap();
        let rep = spectrahedron_bounded(&a, &opts).unwrap();
        assert!(rep.bounded);
        assert!((rep.direction_bounds[0] - 1.0).abs() < 1e-5);
        assert!(rep.independent);
        // A = (1): unbounded, D_A(1) = [−1, ∞)
        let a = HermTuple::from_mats(vec![CMat::identity(1)]).unwrap();
        let rep = spectrahedron_bounded(&a, &opts).unwrap();
        assert!(!rep.bounded);
    }

    #[test]
    fn polar_contains_zero_and_identity_map() {
        let opts = SolveOptions::default();
        let shape = GammaShape::coordinates(1);
        let a = HermTuple::from_mats(vec![herm(&[&[1.0, 0.0], &[0.0, -1.0]])]).unwrap();
        // X = A: identity map is Γ-ucp
        let v = gamma_polar_membership(&shape, &a, &a, &opts).unwrap();
        assert_eq!(v.verdict, FeasVerdict::Feasible);
        // X = 0 ∈ polar
        let zero = HermTuple::from_mats(vec![CMat::zeros(2, 2)]).unwrap();
        let v = gamma_polar_membership(&shape, &a, &zero, &opts).unwrap();
        assert_eq!(v.verdict, FeasVerdict::Feasible);
        // scalar matrix range of diag(1,−1) is [−1,1]: X = (2) is outside
        let two = HermTuple::scalars(&[2.0]);
        let v = gamma_polar_membership(&shape, &a, &two, &opts).unwrap();
        assert_eq!(v.verdict, FeasVerdict::Infeasible);
    }
}
