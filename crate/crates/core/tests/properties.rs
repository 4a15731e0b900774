use std::sync::OnceLock;

use mertens_core::engine::CacheContents;
use mertens_core::kernel::{
    bridge_sides, coefficients, evaluate, evaluate_float, evaluate_horner, expand_direct, Rational,
};
use mertens_core::quotient::quotient_blocks;
use mertens_core::report::{render_fraction, ClaimRecord, Decimal, ReportConfig, VerificationReport};
use mertens_core::sieve::{build_mobius, build_totient, MertensTable, SieveConfig};
use mertens_core::{Execution, MertensOracle};
use num_bigint::BigInt;
use proptest::prelude::*;

fn oracle() -> &'static MertensOracle {
    static ORACLE: OnceLock<MertensOracle> = OnceLock::new();
    ORACLE.get_or_init(|| MertensOracle::new(10_000).unwrap())
}

fn sieve() -> &'static MertensTable {
    static TABLE: OnceLock<MertensTable> = OnceLock::new();
    TABLE.get_or_init(|| MertensTable::build(2_000_000, &SieveConfig::default()).unwrap())
}

fn unit_rational() -> impl Strategy<Value = Rational> {
    (2u64..10_000).prop_flat_map(|q| (1..q, Just(q)))
        .prop_map(|(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quotient_blocks_tile_the_range(n in 1u64..2_000_000) {
        let mut next = 1;
        let mut count = 0u64;
        for b in quotient_blocks(n) {
            prop_assert_eq!(b.lo, next);
            prop_assert_eq!(n / b.lo, b.quotient);
            prop_assert_eq!(n / b.hi, b.quotient);
            prop_assert!(b.hi == n || n / (b.hi + 1) < b.quotient);
            next = b.hi + 1;
            count += 1;
        }
        prop_assert_eq!(next, n + 1);
        prop_assert!(count <= 2 * ((n as f64).sqrt() as u64 + 1));
    }

    #[test]
    fn sieve_agrees_with_trial_division(n in 1u64..2_000_000) {
        let mut m = n;
        let mut mu = 1i64;
        let mut phi = n;
        let mut p = 2;
        while p * p <= m {
            if m % p == 0 {
                m /= p;
                phi = phi / p * (p - 1);
                mu = if m % p == 0 { 0 } else { -mu };
                while m % p == 0 {
                    m /= p;
                }
            }
            p += 1;
        }
        if m > 1 {
            mu = -mu;
            phi = phi / m * (m - 1);
        }
        let table = sieve();
        prop_assert_eq!(table.get(n) - table.get(n - 1), mu);
        let tot = build_totient(n).unwrap();
        prop_assert_eq!(tot.phi(n), phi);
    }

    #[test]
    fn engine_matches_sieve(x in 1u64..2_000_000, t in 10u64..5_000) {
        let o = MertensOracle::new(t).unwrap();
        prop_assert_eq!(o.mertens(x).unwrap(), sieve().get(x));
    }

    #[test]
    fn engine_identity_holds(x in 100_000u64..50_000_000) {
        let o = oracle();
        let total: i64 = quotient_blocks(x)
            .map(|b| b.len() as i64 * o.mertens(b.quotient).unwrap())
            .sum();
        prop_assert_eq!(total, 1);
    }

    #[test]
    fn coefficients_match_expansion(n in 2u64..600) {
        let a = coefficients(oracle(), n).unwrap();
        let b = expand_direct(oracle(), n).unwrap();
        prop_assert_eq!(a.coefficients(), b.coefficients());
        prop_assert!(a.complement_form_holds());
    }

    #[test]
    fn bridge_identity(n in 2u64..300, lam in unit_rational()) {
        let cv = coefficients(oracle(), n).unwrap();
        let (lhs, rhs) = bridge_sides(&cv, &lam).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn exact_routes_agree_and_float_bound_contains(n in 2u64..300, lam in unit_rational()) {
        let cv = coefficients(oracle(), n).unwrap();
        let exact = evaluate(&cv, &lam).unwrap();
        prop_assert_eq!(&exact, &evaluate_horner(&cv, &lam));
        let x = num_traits::ToPrimitive::to_f64(&lam).unwrap();
        let at_x = evaluate(&cv, &Rational::from_float(x).unwrap()).unwrap();
        let fe = evaluate_float(&cv, x).unwrap();
        let err = (num_traits::ToPrimitive::to_f64(&at_x).unwrap() - fe.value).abs();
        prop_assert!(err <= fe.error_bound * 1.0000001 + f64::MIN_POSITIVE, "err {} bound {}", err, fe.error_bound);
    }

    #[test]
    fn decimal_rendering_truncates(p in -1_000_000_000_000i64..1_000_000_000_000, q in 1i64..1_000_000_000) {
        let d = render_fraction(&BigInt::from(p), &BigInt::from(q));
        let digits: String = d.text.chars().take_while(|c| *c != 'e').filter(|c| c.is_ascii_digit()).collect();
        let significant = digits.trim_start_matches('0').trim_end_matches('0');
        prop_assert!(significant.len() <= 12);
        let shown: f64 = d.text.parse().unwrap();
        let actual = p as f64 / q as f64;
        prop_assert!(shown.abs() <= actual.abs() * (1.0 + 1e-15));
        prop_assert!((actual - shown).abs() <= actual.abs() * 1e-11);
        let back = mertens_core::kernel::parse_rational(&d.text).unwrap();
        prop_assert_eq!(d.exact, back == Rational::new(BigInt::from(p), BigInt::from(q)));
    }

    #[test]
    fn report_round_trips(ns in proptest::collection::vec((2u64..1000, any::<bool>(), -1000i64..1000), 0..40)) {
        let claims: Vec<ClaimRecord> = ns
            .iter()
            .enumerate()
            .map(|(i, &(n, pass, m))| {
                ClaimRecord::new("c", Some(n), Some(format!("{i}/1000")), pass, Decimal::from_integer(m))
                    .with_micros(i as u64)
            })
            .collect();
        let cfg = ReportConfig {
            suite: "all".into(),
            n_min: 2,
            n_max: 1000,
            grid: 10,
            lambdas: vec!["1/2".into()],
            threshold: 100,
            boundary_convention: "floor".into(),
            g_samples: 10,
            execution: Execution::Sequential,
        };
        let report = VerificationReport::new(cfg, claims);
        let back = VerificationReport::from_json(&report.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &report);
        let rows = mertens_core::report::claims_from_csv(report.to_csv().unwrap().as_bytes()).unwrap();
        prop_assert_eq!(rows, report.claims);
    }

    #[test]
    fn cache_round_trips(xs in proptest::collection::btree_set(20_000u64..2_000_000, 1..6)) {
        let o = MertensOracle::new(10_000).unwrap();
        for &x in &xs {
            o.mertens(x).unwrap();
        }
        let mut buf = Vec::new();
        o.write_cache(&mut buf).unwrap();
        let contents = CacheContents::parse(&buf).unwrap();
        prop_assert_eq!(contents.threshold, 10_000);
        let snapshot: Vec<(u64, i64)> = o.memo_snapshot().into_iter().collect();
        prop_assert_eq!(&contents.entries, &snapshot);
        let loaded = MertensOracle::read_cache(buf.as_slice(), SieveConfig::default()).unwrap();
        for &x in &xs {
            prop_assert_eq!(loaded.mertens(x).unwrap(), sieve().get(x));
        }
        prop_assert_eq!(loaded.stats().computed, 0);
    }
}

#[test]
fn mobius_is_multiplicative_on_coprime_pairs() {
    let mob = build_mobius(100_000).unwrap();
    proptest!(|(a in 1u64..300, b in 1u64..300)| {
        if num_integer::gcd(a, b) == 1 {
            prop_assert_eq!(mob.get(a * b), mob.get(a) * mob.get(b));
        }
    });
}
