//! Independent evaluation paths checked against the library.

use hessianlab_core::cones::classify;
use hessianlab_core::inequality::{concavity_form, concavity_sample, Campaign, Target};
use hessianlab_core::linalg::{random_orthogonal, random_symmetric, schur_bound, SchurBound};
use hessianlab_core::sampling::{sample_rng, SampleSpec, TailMode};
use hessianlab_core::symfun::{elementary_symmetric, sigma, sigma_deleted, sigma_matrix, sum_hessian, sum_hessian_jet};
use hessianlab_core::SymmetricMatrix;
use nalgebra::DMatrix;
use rand::Rng;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

fn sigma_by_subsets(k: usize, lam: &[i128]) -> i128 {
    subsets(lam.len(), k)
        .iter()
        .map(|s| s.iter().map(|&i| lam[i]).product::<i128>())
        .sum()
}

fn principal_minor_sum(k: usize, a: &DMatrix<f64>) -> (f64, f64) {
    let mut sum = 0.0;
    let mut abs = 0.0;
    for s in subsets(a.nrows(), k) {
        let m = DMatrix::from_fn(k, k, |i, j| a[(s[i], s[j])]);
        let d = m.determinant();
        sum += d;
        abs += d.abs();
    }
    (sum, abs)
}

#[test]
fn integer_spectra_match_subset_enumeration_exactly() {
    let mut rng = sample_rng(101, 0);
    for _ in 0..300 {
        let n = rng.random_range(1..=10);
        let lam: Vec<i128> = (0..n).map(|_| rng.random_range(-9..=9)).collect();
        let e = elementary_symmetric(&lam, n);
        for (k, &got) in e.iter().enumerate().take(n + 1) {
            let want = if k == 0 { 1 } else { sigma_by_subsets(k, &lam) };
            assert_eq!(got, want, "k = {k}, lam = {lam:?}");
        }
    }
}

#[test]
fn matrix_sigma_matches_principal_minors() {
    let mut rng = sample_rng(102, 0);
    for n in [3, 5, 6] {
        for _ in 0..100 {
            let a = random_symmetric(&mut rng, n, 1.0);
            for k in 1..=n {
                let (want, scale) = principal_minor_sum(k, a.as_matrix());
                let got = sigma_matrix(k, &a).unwrap();
                assert!(
                    (got - want).abs() <= 1e-9 * scale.max(1e-300),
                    "n={n} k={k} {got} {want}"
                );
            }
        }
    }
}

#[test]
fn spectral_invariance() {
    let mut rng = sample_rng(103, 0);
    for _ in 0..200 {
        let n = rng.random_range(2..=7);
        let a = random_symmetric(&mut rng, n, 2.0);
        let q = random_orthogonal(&mut rng, n);
        let b = a.conjugated(&q);
        for k in 1..=n {
            let (x, y) = (sigma_matrix(k, &a).unwrap(), sigma_matrix(k, &b).unwrap());
            let (_, scale) = principal_minor_sum(k, a.as_matrix());
            assert!((x - y).abs() <= 1e-8 * scale.max(1.0));
        }
    }
}

#[test]
fn deleted_functions_match_removal() {
    let mut rng = sample_rng(104, 0);
    for _ in 0..200 {
        let n = rng.random_range(3..=8);
        let lam: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i == j {
            continue;
        }
        let rest: Vec<f64> = (0..n).filter(|&p| p != i && p != j).map(|p| lam[p]).collect();
        for k in 0..n {
            let d = sigma_deleted(k, &lam, &[i, j]).unwrap();
            assert!((d - sigma(k, &rest)).abs() < 1e-12 * (1.0 + d.abs()));
        }
    }
    assert!(sigma_deleted(1, &[1.0, 2.0, 3.0], &[1, 1]).is_err());
    assert!(sigma_deleted(1, &[1.0, 2.0, 3.0], &[5]).is_err());
}

#[test]
fn jet_matches_finite_differences() {
    let mut rng = sample_rng(105, 0);
    for _ in 0..1000 {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..=n);
        let lam: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let jet = sum_hessian_jet(k, &lam).unwrap();
        let h = 1e-5;
        let gscale = jet.gradient.iter().fold(1e-3_f64, |m, v| m.max(v.abs()));
        for p in 0..n {
            let mut a = lam.clone();
            let mut b = lam.clone();
            a[p] += h;
            b[p] -= h;
            let fd = (sum_hessian(k, &a) - sum_hessian(k, &b)) / (2.0 * h);
            assert!((fd - jet.gradient[p]).abs() <= 1e-5 * gscale);
            let ga = sum_hessian_jet(k, &a).unwrap().gradient;
            let gb = sum_hessian_jet(k, &b).unwrap().gradient;
            let hscale = jet.hessian.abs().max().max(1e-3);
            for q in 0..n {
                let fd = (ga[q] - gb[q]) / (2.0 * h);
                assert!((fd - jet.hessian[(p, q)]).abs() <= 1e-5 * hscale);
            }
            assert_eq!(jet.hessian[(p, p)], 0.0);
        }
    }
}

/// `log S₃` restricted to a line, by second differences.
fn log_second_difference(lam: &[f64], xi: &[f64], h: f64) -> f64 {
    let at = |t: f64| {
        let v: Vec<f64> = lam.iter().zip(xi).map(|(l, x)| l + t * x).collect();
        sum_hessian(3, &v).ln()
    };
    (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h)
}

#[test]
fn concavity_worst_direction_agrees_with_second_differences() {
    // The concavity form is −D² log F plus the (λ₁+K+1) correction; along
    // the worst direction its value is bounded below by −D² log F there.
    let mut spec = SampleSpec::new(4, 3);
    spec.count = 10;
    spec.seed = 17;
    for i in 0..10 {
        let lam = spec.draw(i).unwrap();
        let jet = sum_hessian_jet(3, &lam).unwrap();
        let s = concavity_sample(&lam, &jet, 1.0, 8, 17, i);
        let xi = s.worst_direction.clone();
        let (l, _) = concavity_form(&lam, &jet, 1.0);
        let form: f64 = (0..4)
            .flat_map(|p| (0..4).map(move |q| (p, q)))
            .map(|(p, q)| l[(p, q)] * xi[p] * xi[q])
            .sum();
        let h = 1e-4 * lam[0];
        let d2 = log_second_difference(&lam, &xi, h);
        assert!(
            form + 1e-6 * form.abs().max(1.0) >= -d2,
            "sample {i}: form {form}, -D2 log F {}",
            -d2
        );
    }
}

#[test]
fn isotropic_spectra_break_concavity_from_five_dimensions() {
    // λ = Λ(1, …, 1): the Schur ratio ρ tends to about 0.625, 0.912, 1.205,
    // 1.500 for n = 3, 4, 5, 6, so the inequality fails at γ = 0 once n ≥ 5
    // however large Λ is.
    for (n, lo, hi) in [(3usize, 0.6, 0.65), (4, 0.9, 0.92), (5, 1.2, 1.21), (6, 1.49, 1.51)] {
        for big in [1e3, 1e5, 1e7] {
            let lam = vec![big; n];
            let jet = sum_hessian_jet(3, &lam).unwrap();
            let (l, d) = concavity_form(&lam, &jet, 1.0);
            let SchurBound::Ratio { ratio, .. } = schur_bound(&l, d) else {
                panic!("trailing block should be positive definite")
            };
            assert!(ratio > lo && ratio < hi, "n = {n}, Λ = {big}: ρ = {ratio}");
        }
    }
    // and the campaign picks it up in the general sampler
    let mut spec = SampleSpec::new(6, 3);
    spec.tail_mode = TailMode::General;
    spec.count = 20_000;
    spec.seed = 3;
    let report = Campaign::new(Target::Concavity, spec).unwrap().run().unwrap();
    assert!(report.violations > 0);
    let w = report.witness.unwrap();
    assert!(classify(&w.spectrum, 1.0).unwrap().gamma_tilde(3));
}

#[test]
fn schur_ratio_matches_dense_inverse() {
    let mut spec = SampleSpec::new(5, 3);
    spec.seed = 8;
    for i in 0..50 {
        let lam = spec.draw(i).unwrap();
        let jet = sum_hessian_jet(3, &lam).unwrap();
        let (l, d) = concavity_form(&lam, &jet, 1.0);
        if let SchurBound::Ratio { ratio, .. } = schur_bound(&l, d) {
            if let Some(inv) = l.clone().try_inverse() {
                let want = d * inv[(0, 0)];
                assert!((ratio - want).abs() <= 1e-6 * want.abs().max(1.0), "{ratio} vs {want}");
            }
        }
    }
}

#[test]
fn discrete_hessian_of_random_quadratics_is_exact() {
    use hessianlab_core::grid::{GridFunction, GridSpec};
    let mut rng = sample_rng(106, 0);
    let g = GridSpec::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0], vec![6, 5, 7]).unwrap();
    for _ in 0..20 {
        let a = random_symmetric(&mut rng, 3, 1.0);
        let u = GridFunction::from_fn(g.clone(), |x| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += 0.5 * a.get(i, j) * x[i] * x[j];
                }
            }
            s
        });
        for node in g.interior() {
            let h: SymmetricMatrix = u.hessian(node).unwrap();
            assert!((h.as_matrix() - a.as_matrix()).abs().max() < 1e-9);
        }
    }
}
