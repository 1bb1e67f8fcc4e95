//! Property-based checks of structural invariants.

use hessianlab_core::cones::{classify, in_gamma, in_gamma_tilde};
use hessianlab_core::grid::{GridFunction, GridSpec};
use hessianlab_core::inequality::{Campaign, Target};
use hessianlab_core::report::{Extremum, VerificationReport, Witness};
use hessianlab_core::sampling::{SampleSpec, TailMode};
use hessianlab_core::symfun::{check_identities, sigma, sum_hessian_jet};
use hessianlab_core::transforms::{quotient_constants, shift_identity_residual, shift_identity_scale};
use hessianlab_core::SymmetricMatrix;
use proptest::prelude::*;

fn spectrum(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-5.0f64..5.0, n))
}

proptest! {
    #[test]
    fn identities_hold(lam in spectrum(2..=8), kk in 0usize..8) {
        let k = 1 + kk % lam.len();
        let r = check_identities(k, &lam).unwrap();
        let s = sigma(k, &lam) + sigma(k - 1, &lam);
        prop_assert!(r.max() <= 1e-10 * (1.0 + s.abs()), "residual {:e}", r.max());
    }

    #[test]
    fn jet_hessian_has_zero_diagonal(lam in spectrum(2..=8), kk in 0usize..8) {
        let k = 1 + kk % lam.len();
        let jet = sum_hessian_jet(k, &lam).unwrap();
        for p in 0..lam.len() {
            prop_assert_eq!(jet.hessian[(p, p)], 0.0);
            for q in 0..lam.len() {
                prop_assert_eq!(jet.hessian[(p, q)], jet.hessian[(q, p)]);
            }
        }
    }

    #[test]
    fn sigma_is_symmetric_and_homogeneous(lam in spectrum(2..=7), kk in 0usize..7, t in 0.1f64..10.0) {
        let k = kk % (lam.len() + 1);
        let mut rev = lam.clone();
        rev.reverse();
        let a = sigma(k, &lam);
        prop_assert!((a - sigma(k, &rev)).abs() <= 1e-9 * (1.0 + a.abs()) * 5f64.powi(k as i32));
        let scaled: Vec<f64> = lam.iter().map(|v| v * t).collect();
        let b = sigma(k, &scaled);
        prop_assert!((b - t.powi(k as i32) * a).abs() <= 1e-9 * (1.0 + b.abs()) * (5.0 * t).powi(k as i32));
    }

    #[test]
    fn cones_are_nested(lam in spectrum(3..=7)) {
        let n = lam.len();
        for k in 2..=n {
            if in_gamma(k, &lam) {
                prop_assert!(in_gamma(k - 1, &lam));
                prop_assert!(in_gamma_tilde(k, &lam));
            }
            if in_gamma_tilde(k, &lam) {
                prop_assert!(in_gamma(k - 1, &lam));
            }
        }
        let c = classify(&lam, 1.0).unwrap();
        prop_assert_eq!(c.semiconvex(), lam.iter().all(|v| *v >= -1.0));
    }

    #[test]
    fn shift_identity_on_random_matrices(entries in prop::collection::vec(-3.0f64..3.0, 36), n in 3usize..=6, l in 1u8..=2) {
        let a = SymmetricMatrix::from_upper(n, |i, j| entries[i * 6 + j]);
        let tc = quotient_constants(n, l).unwrap();
        let r = shift_identity_residual(&a, &tc).unwrap() / shift_identity_scale(&a, &tc).unwrap();
        prop_assert!(r <= 1e-12);
    }

    #[test]
    fn grid_container_round_trips(m0 in 2usize..6, m1 in 2usize..6, vals in prop::collection::vec(-1e6f64..1e6, 36)) {
        let g = GridSpec::new(vec![-1.0, 0.5], vec![2.0, 0.75], vec![m0, m1]).unwrap();
        let u = GridFunction::new(g.clone(), vals[..g.len()].to_vec()).unwrap();
        prop_assert_eq!(GridFunction::from_bytes(&u.to_bytes()).unwrap(), u);
    }

    #[test]
    fn sampler_respects_its_contract(seed in any::<u64>(), mode in 0usize..4, n in 3usize..=6) {
        let mut spec = SampleSpec::new(n, 3);
        spec.seed = seed;
        spec.tail_mode = [TailMode::Bounded, TailMode::SpikedTwo, TailMode::General, TailMode::Mixed][mode];
        spec.lambda1_range = (10.0, 1e4);
        for i in 0..5 {
            let lam = spec.draw(i).unwrap();
            prop_assert!(lam.is_sorted_descending());
            prop_assert!(lam[0] >= 10.0 && lam[0] <= 1e4);
            prop_assert!(lam.min() >= -spec.semiconvexity);
            prop_assert!(in_gamma_tilde(3, &lam));
        }
    }

    #[test]
    fn report_merge_is_associative(margins in prop::collection::vec(-1.0f64..1.0, 3..30), cut1 in 0usize..30, cut2 in 0usize..30) {
        let n = margins.len();
        let (a, b) = (cut1.min(cut2) % n, cut1.max(cut2) % n);
        let (a, b) = (a.min(b), a.max(b));
        let build = |r: std::ops::Range<usize>| {
            let mut rep = VerificationReport::empty("p", Extremum::Min);
            for i in r {
                let m = margins[i];
                rep.record(i as u64, m, m.abs(), None, || Witness { sample_index: i as u64, spectrum: vec![m], auxiliary: vec![] });
            }
            rep
        };
        let whole = build(0..n);
        let left = build(0..a).merge(build(a..b)).merge(build(b..n));
        let right = build(0..a).merge(build(a..b).merge(build(b..n)));
        prop_assert_eq!(&left, &whole);
        prop_assert_eq!(&right, &whole);
        prop_assert_eq!(whole.violations == 0, whole.worst_margin >= 0.0);
    }
}

#[test]
fn campaign_is_reproducible_from_seed() {
    let mut spec = SampleSpec::new(4, 3);
    spec.count = 500;
    spec.seed = 99;
    let c = Campaign::new(Target::KeyInequality, spec).unwrap();
    assert_eq!(c.run().unwrap(), c.run().unwrap());
    let split = c.run_range(0..123).unwrap().merge(c.run_range(123..500).unwrap());
    assert_eq!(split, c.run().unwrap());
}
