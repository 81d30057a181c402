use num_bigint::BigInt;
use rmc_core::msymb::{eval_special, normalize_sign, SpecialPoint};
use rmc_core::recognize::{FieldEmbedding, FieldTag};
use rmc_core::rigidprod::{DivisorSpec, Model};
use rmc_core::Error;

#[test]
fn rejected_combination_reports_minus_six() {
    let spec = DivisorSpec::parse(Model::Bianchi, 5, "3:2,7:-1").unwrap();
    match spec.certify() {
        Err(Error::WeightNotZero { sum, scope, .. }) => {
            assert_eq!(sum, -6);
            assert_eq!(scope, "2a₃(g) − a₇(g) = −6");
        }
        other => panic!("{other:?}"),
    }
    assert!(DivisorSpec::parse(Model::Bianchi, 5, "3:1,6:-1,7:1")
        .unwrap()
        .certify()
        .is_ok());
}

#[test]
fn j1_at_tau11_matches_mod_3_to_the_5() {
    let spec = DivisorSpec::parse(Model::Sig21, 3, "5:1,2:-2").unwrap();
    let sp = SpecialPoint::small(Model::Sig21, 44, false, 1).unwrap();
    let v = eval_special(&spec, &sp, 7, Some(5)).unwrap();
    assert_eq!(v.valuation, 0);
    let e = FieldEmbedding::new(FieldTag::Qi, 3, 20, -1).unwrap();
    let x = e
        .embed(
            &[BigInt::from(992481), BigInt::from(322880)],
            &BigInt::from(17 * 29 * 29 * 73),
        )
        .unwrap();
    let x = normalize_sign(&x.with_prec(10));
    assert!(v.unit.agreement(&x).max(v.unit.agreement(&x.neg())) >= 5);
}

#[test]
fn model_mismatch_is_rejected() {
    let spec = DivisorSpec::parse(Model::Sig21, 3, "5:1,2:-2").unwrap();
    let sp = SpecialPoint::small(Model::Bianchi, 8, true, 1).unwrap();
    assert!(matches!(
        eval_special(&spec, &sp, 4, Some(1)),
        Err(Error::Invalid(_))
    ));
}
