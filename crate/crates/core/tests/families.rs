mod common;

use common::{rel, weight, BUILT_IN};
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;
use weightlab::families::{cone_fa, dual_block, lacunary, power_block, FamilySpec, LACUNARY_MAX_TERMS};
use weightlab::norms::hl_norm;
use weightlab::weights::moment_table;
use weightlab::{Error, RadialWeight, WeightSpec};

const TOL: f64 = 1e-10;

#[test]
fn power_blocks() {
    assert_eq!(power_block(None, 0, 3, 0.0, 0.0, TOL).unwrap().coeffs, vec![1.0; 4]);

    let c = power_block(Some(&RadialWeight::constant()), 1, 2, 1.0, 0.0, TOL).unwrap();
    assert_eq!(c.coeffs[0], 0.0);
    assert!(rel(c.coeffs[1], 1.0 / 3.0) < 1e-14 && rel(c.coeffs[2], 0.2) < 1e-14);

    let f = power_block(None, 0, 3, 0.0, -0.5, TOL).unwrap();
    for (k, c) in f.coeffs.iter().enumerate() {
        assert!(rel(*c, ((k + 1) as f64).powf(-0.5)) < 1e-15);
    }

    assert!(matches!(power_block(None, 0, 3, 1.0, 0.0, TOL), Err(Error::InvalidParam(_))));
    assert!(matches!(power_block(None, 4, 3, 0.0, 0.0, TOL), Err(Error::InvalidParam(_))));
}

#[test]
fn dual_blocks() {
    let w = RadialWeight::constant();
    let f = dual_block(&w, 0, 20, 2.0, TOL).unwrap();
    for (k, c) in f.coeffs.iter().enumerate() {
        assert!(rel(*c, 1.0 / (2 * k + 2) as f64) < 1e-13);
    }
    let f = dual_block(&w, 0, 0, 3.0, TOL).unwrap();
    assert!(rel(f.coeffs[0], 0.5f64.sqrt()) < 1e-14);
    assert!(matches!(dual_block(&w, 0, 3, 1.0, TOL), Err(Error::Domain { .. })));
}

#[test]
fn cone_examples() {
    let a = 0.7;
    let f = cone_fa(a, 1.0, None).unwrap();
    for (n, c) in f.coeffs.iter().enumerate().take(60) {
        let want = (1.0 - a * a) * (n + 1) as f64 * a.powi(n as i32);
        assert!(rel(*c, want) < 1e-12, "n {n}");
    }
    let tiny = cone_fa(1e-8, 3.0, None).unwrap();
    assert!((tiny.coeffs[0] - 1.0).abs() < 1e-15);
    assert!(matches!(cone_fa(0.99, 2.0, Some(10)), Err(Error::Size(_))));
    assert!(cone_fa(1.0, 2.0, None).is_err());
    assert!(cone_fa(0.5, 0.5, None).is_err());
}

#[test]
fn cone_hl_norm_is_order_one() {
    for a in [0.9, 0.99, 0.999] {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let f = cone_fa(a, p, None).unwrap();
            let n = hl_norm(&f, p).unwrap();
            assert!((0.5..=2.0).contains(&n), "a {a} p {p}: {n}");
            if p == 2.0 {
                // Σ (1-a²) a^{2n} = 1 up to the truncated tail
                assert!((n - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn lacunary_series() {
    // coefficient 2^{n/p} at index 2^n
    let f = lacunary(0.5, 3).unwrap();
    assert_eq!(f.coeffs, vec![0.0, 1.0, 4.0, 0.0, 16.0]);
    assert_eq!(lacunary(0.5, 20).unwrap().len(), (1 << 19) + 1);
    assert!(matches!(lacunary(0.5, LACUNARY_MAX_TERMS + 1), Err(Error::Size(_))));
    assert!(lacunary(1.0, 3).is_err());
    assert!(lacunary(0.5, 0).is_err());
}

#[test]
fn family_specs() {
    let spec: FamilySpec = serde_json::from_str(r#"{"kind":"power_block","n":2,"m":5}"#).unwrap();
    assert_eq!(spec.build(TOL).unwrap().coeffs, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    assert_eq!(spec.with_size(7).unwrap().build(TOL).unwrap().len(), 8);

    let spec = FamilySpec::DualBlock { n: 0, m: 3, p: 2.0, weight: WeightSpec::Constant };
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<FamilySpec>(&text).unwrap(), spec);

    let cone = FamilySpec::ConeFa { a: 0.5, p: 2.0, degree: None };
    assert!(matches!(cone.with_size(10), Err(Error::InvalidParam(_))));
    assert_eq!(cone.build(TOL).unwrap(), cone_fa(0.5, 2.0, None).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn power_block_ignores_weight_at_alpha_zero(n in 0usize..50, len in 0usize..50, beta in -3.0f64..3.0, i in 0usize..BUILT_IN.len()) {
        let plain = power_block(None, n, n + len, 0.0, beta, TOL).unwrap();
        let weighted = power_block(Some(&weight(BUILT_IN[i])), n, n + len, 0.0, beta, TOL).unwrap();
        prop_assert_eq!(plain, weighted);
    }

    #[test]
    fn dual_block_hl_mass(n in 0usize..40, len in 0usize..40, p in 1.1f64..5.0, i in 0usize..BUILT_IN.len()) {
        let w = weight(BUILT_IN[i]);
        let m = n + len;
        let f = dual_block(&w, n, m, p, TOL).unwrap();
        let q = p / (p - 1.0);
        let t = moment_table(&w, 2 * m + 1, TOL).unwrap();
        let want: f64 = (n..=m).map(|k| t.get(2 * k + 1).powf(q) * ((k + 1) as f64).powf(q - 2.0)).sum();
        prop_assert!(rel(hl_norm(&f, p).unwrap().powf(p), want) < 1e-10);
    }

    #[test]
    fn cone_matches_gamma_formula(a in 0.05f64..0.95, p in 1.0f64..4.0) {
        let f = cone_fa(a, p, None).unwrap();
        let s = 2.0 / p;
        for n in (0..f.len()).step_by(7) {
            let ln = (1.0 - a * a).ln() / p + ln_gamma(n as f64 + s) - ln_gamma(n as f64 + 1.0) - ln_gamma(s)
                + n as f64 * a.ln();
            prop_assert!(rel(f.coeffs[n], ln.exp()) < 1e-9, "n {}", n);
        }
    }

    #[test]
    fn cone_tail_is_small(a in 0.05f64..0.999, p in 1.0f64..4.0) {
        // doubling the degree adds less than the promised tail fraction of HL mass
        let f = cone_fa(a, p, None).unwrap();
        let g = cone_fa(a, p, Some(2 * f.degree() + 1)).unwrap();
        let (mf, mg) = (hl_norm(&f, p).unwrap().powf(p), hl_norm(&g, p).unwrap().powf(p));
        prop_assert!(mg >= mf && (mg - mf) <= 1e-6 * mf);
    }
}
