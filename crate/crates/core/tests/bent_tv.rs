//! Level-0 lift behavior on the bent TV screen p = 1 − x² − y⁶ at the
//! 2×2 witness pair X = diag(1,0), Y = ½[[1,1],[1,1]] scaled by t.
//!
//! With the Γ-moment relation Y_{yy} = (t·Y)² enforced, the level-0 lift is
//! exact: membership flips precisely at the smallest positive root
//! t₀ ≈ 0.861724 of t⁸/2 − t⁶ − t² + 1.

use gammahull_core::freealg::{GammaShape, MatrixPolynomial, Word};
use gammahull_core::hermlin::HermTuple;
use gammahull_core::hull::{self, MembershipOptions};
use gammahull_core::mat::CMat;
use gammahull_core::sdp::FeasVerdict;
use gammahull_core::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bent_tv() -> MatrixPolynomial {
    MatrixPolynomial::constant(c(1.0), 2)
        .add(&MatrixPolynomial::monomial(Word(vec![1, 1]), c(-1.0), 2))
        .add(&MatrixPolynomial::monomial(Word(vec![2, 2, 2, 2, 2, 2]), c(-1.0), 2))
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

fn witness_pair(t: f64) -> HermTuple {
    let x = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(t) } else { c(0.0) });
    let y = CMat::from_fn(2, 2, |_, _| c(t * 0.5));
    HermTuple::from_mats(vec![x, y]).unwrap()
}

#[test]
fn bent_tv_level_zero_transitions_at_t0() {
    let p = bent_tv();
    let shape = y2_shape();
    let opts = MembershipOptions { bound_k: Some(2.0), ..Default::default() };
    let lift = hull::build_lift(&p, &shape, &witness_pair(0.865), 0, &Default::default()).unwrap();
    assert_eq!(lift.eta, 3);
    // the unreduced Hankel at η = 3 would be 30×30 (15 words × 2)
    assert_eq!(15 * 2, 30);
    // reduced columns: words of length ≤ 3 not ending in y
    assert_eq!(lift.hankel_words.len(), 8);

    // inside D_p: member with interior margin
    let v = hull::membership(&p, &shape, &witness_pair(0.85), 0, &opts).unwrap();
    assert_eq!(v.status, FeasVerdict::Feasible, "t=0.85 margin {}", v.margin);
    // just inside t₀
    let v = hull::membership(&p, &shape, &witness_pair(0.861), 0, &opts).unwrap();
    assert_eq!(v.status, FeasVerdict::Feasible, "t=0.861 margin {}", v.margin);
    // the paper's point t' = 0.865 > t₀ is outside the constrained lift
    let v = hull::membership(&p, &shape, &witness_pair(0.865), 0, &opts).unwrap();
    assert_eq!(v.status, FeasVerdict::Infeasible, "t=0.865 margin {}", v.margin);
    assert!(v.margin < -1e-3, "exclusion should be decisive, margin {}", v.margin);
    // far outside
    let v = hull::membership(&p, &shape, &witness_pair(0.9), 0, &opts).unwrap();
    assert_eq!(v.status, FeasVerdict::Infeasible, "t=0.9 margin {}", v.margin);
}

#[test]
fn bent_tv_member_witness_validates() {
    let p = bent_tv();
    let shape = y2_shape();
    let opts = MembershipOptions { bound_k: Some(2.0), ..Default::default() };
    let v = hull::membership(&p, &shape, &witness_pair(0.8), 0, &opts).unwrap();
    assert_eq!(v.status, FeasVerdict::Feasible);
    let w = v.witness.unwrap();
    let report = gammahull_core::moments::validate_moment_sequence(
        &w,
        &shape,
        gammahull_core::moments::ValidateOptions::default(),
    );
    assert!(report.is_clean(), "{:?}", report.violations);
    let h = gammahull_core::moments::hankel(&w, 3).unwrap();
    assert_eq!(h.n(), 30);
    // the full reconstructed Hankel is PSD (boundary directions included)
    assert!(h.min_eigenvalue() >= -1e-7, "{}", h.min_eigenvalue());
}
