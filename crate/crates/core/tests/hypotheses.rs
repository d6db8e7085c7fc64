use nonlocal_hardy::dyadic::CKNParams;
use nonlocal_hardy::fnlib::{make_bump, make_step_1d, ScalarField};
use nonlocal_hardy::verify::{evaluate_case, CaseId, InequalityCase};
use nonlocal_hardy::{Error, QuadConfig};

fn cfg() -> QuadConfig {
    QuadConfig::default().with_samples(2_000)
}

/// balanced(3, 2, 2, 3, 1/2, 0, 0): 1/τ + γ/d = 1/3 > 0.
fn positive_index() -> CKNParams {
    CKNParams::balanced(3, 2.0, 2.0, 3.0, 0.5, 0.0, 0.0).unwrap()
}

/// β = −3 pushes 1/τ + γ/d to −1/6.
fn negative_index() -> CKNParams {
    CKNParams::balanced(3, 2.0, 2.0, 3.0, 0.5, 0.0, -3.0).unwrap()
}

/// One input per case that breaks a stated hypothesis.
fn violating(id: CaseId) -> (InequalityCase, ScalarField) {
    use CaseId::*;
    let bump3 = make_bump(3, 1.0).unwrap();
    let case = match id {
        H1 | B1 => InequalityCase::new(id, 5.0),
        H2 | B2 => InequalityCase::new(id, 2.0),
        H3 | H4 | B3 | B4 => InequalityCase::new(id, 2.0),
        // d − p + pα = −1 < 0
        C1 => InequalityCase::with_ckn(id, CKNParams::a_one(3, 2.0, 3.0, -1.0).unwrap()),
        // d − p + pα = 1/2 ≠ 0 and > 0
        C2 | C3 | C4 => InequalityCase::with_ckn(id, CKNParams::a_one(3, 2.0, 3.0, 0.25).unwrap()),
        G1 | P1 | B5 => InequalityCase::with_ckn(id, negative_index()),
        G2 | G3 | G4 | P2 | P3 | P4 | B6 | B7 | B8 => InequalityCase::with_ckn(id, positive_index()),
        S1 => InequalityCase::new(id, 3.0),
        L2 => InequalityCase::new(id, 2.0).with_alpha(0.9),
        L1 => return (InequalityCase::new(id, 2.0), make_step_1d()),
    };
    (case, bump3)
}

#[test]
fn every_case_rejects_a_violating_input() {
    for id in CaseId::ALL {
        let (case, u) = violating(id);
        let err = evaluate_case(&case, &u, 0.1, &cfg()).expect_err(&format!("{id} accepted a violating input"));
        assert!(err.is_config_error(), "{id}: {err}");
        match (&err, id) {
            // the limit case only needs a gradient
            (Error::MissingGradient, CaseId::L1) => {}
            (Error::HypothesisViolation { case, .. }, _) => assert_eq!(case, &id.to_string()),
            _ => panic!("{id}: unexpected error {err}"),
        }
    }
}

#[test]
fn c3_rejects_small_tau() {
    // d − p + pα = 0 needs α = −1/2; τ = 1 then also breaks 0 ≤ α − γ ≤ 1
    let c = CKNParams::a_one(3, 2.0, 1.0, -0.5).unwrap();
    let e = evaluate_case(&InequalityCase::with_ckn(CaseId::C3, c), &make_bump(3, 1.0).unwrap(), 0.1, &cfg());
    assert!(matches!(e, Err(Error::HypothesisViolation { .. })));
}

#[test]
fn p2_rejects_support_at_origin() {
    // sign of 1/τ + γ/d is right for P2, the support is not
    let c = negative_index();
    let e = evaluate_case(&InequalityCase::with_ckn(CaseId::P2, c), &make_bump(3, 1.0).unwrap(), 0.1, &cfg())
        .unwrap_err();
    assert!(e.to_string().contains("supp u"), "{e}");
}

#[test]
fn h1_message_names_hypothesis() {
    let (case, u) = violating(CaseId::H1);
    let e = evaluate_case(&case, &u, 0.1, &cfg()).unwrap_err();
    assert_eq!(e.to_string(), "case H1: hypothesis violated: 1 ≤ p < d");
}
