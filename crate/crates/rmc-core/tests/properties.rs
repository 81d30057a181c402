use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use proptest::prelude::*;
use rmc_core::fastmod::{Fp2, Zpw};
use rmc_core::msymb::Gauss;
use rmc_core::nt;
use rmc_core::padic::pow_big;
use rmc_core::qlattice::QuadLattice;
use rmc_core::recognize::{
    gram_dets, is_lll_reduced, lll_reduce, recognize_algebraic, FieldEmbedding, FieldTag,
    RecognitionTarget,
};

fn reduced(a: i64, b: i64, d: i64) -> (Vec<BigInt>, BigInt) {
    let g = a.gcd(&b).gcd(&d) * d.signum();
    (
        vec![BigInt::from(a / g), BigInt::from(b / g)],
        BigInt::from(d / g),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_values_are_recognized(a in -1000i64..1000, b in -1000i64..1000, d in 1i64..1000, p in prop::sample::select(vec![3u64, 5, 7])) {
        prop_assume!(a != 0 || b != 0);
        let digits = 40;
        let e = FieldEmbedding::new(FieldTag::Qi, p, digits + 10, -1).unwrap();
        let x = e.embed(&[BigInt::from(a), BigInt::from(b)], &BigInt::from(d)).unwrap();
        let res = recognize_algebraic(&RecognitionTarget { value: x, digits, field: e, height: BigInt::from(1000) }).unwrap();
        prop_assert_eq!((res.coeffs, res.den), reduced(a, b, d));
    }

    #[test]
    fn lll_output_is_reduced_and_unimodular(rows in prop::collection::vec(prop::collection::vec(-50i64..50, 4), 4)) {
        let b: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let d = gram_dets(&b);
        prop_assume!(d[4] != BigInt::from(0));
        let red = lll_reduce(&b);
        prop_assert!(is_lll_reduced(&red));
        prop_assert_eq!(gram_dets(&red)[4].clone(), d[4].clone());
    }

    #[test]
    fn montgomery_matches_bignum(x in any::<u64>(), y in any::<u64>(), p in prop::sample::select(vec![3u64, 5, 7, 11])) {
        let z = Zpw::new(p, Zpw::max_digits(p)).unwrap();
        let m = pow_big(p, z.w);
        let (xr, yr) = (BigUint::from(x) % &m, BigUint::from(y) % &m);
        let to = |v: &BigUint| z.to_mont(u64::try_from(v.clone()).unwrap());
        let prod = z.from_mont(z.mul(to(&xr), to(&yr)));
        prop_assert_eq!(BigUint::from(prod), (&xr * &yr) % &m);
    }

    #[test]
    fn quadratic_inverse(a in 1u64..1_000_000, b in 0u64..1_000_000) {
        let f = Fp2::new(5, 20, nt::smallest_nonresidue(5)).unwrap();
        prop_assume!(a % 5 != 0);
        let x = rmc_core::fastmod::E2 { a: f.z.to_mont(a), b: f.z.to_mont(b) };
        prop_assert_eq!(f.mul(x, f.inv(x)), f.one());
    }

    #[test]
    fn gaussian_division_remainder(ar in -10_000i64..10_000, ai in -10_000i64..10_000, dr in -100i64..100, di in -100i64..100) {
        let (a, d) = (Gauss::new(ar, ai), Gauss::new(dr, di));
        prop_assume!(!d.is_zero());
        let r = a - a.div_round(d) * d;
        prop_assert!(2 * r.norm() <= d.norm());
    }

    #[test]
    fn definite_enumeration_counts(m in 1i128..200) {
        let l = QuadLattice::sum_of_squares(3, 5);
        let mut brute = 0;
        let k = (m as f64).sqrt() as i64 + 1;
        for x in -k..=k {
            for y in -k..=k {
                for z in -k..=k {
                    if (x * x + y * y + z * z) as i128 == m {
                        brute += 1;
                    }
                }
            }
        }
        prop_assert_eq!(l.enumerate_definite(m).len(), brute);
    }
}
