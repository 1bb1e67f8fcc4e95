//! Consistency between the transforms, the campaigns and the solver.

use hessianlab_core::grid::{GridFunction, GridSpec};
use hessianlab_core::inequality::{Campaign, Target};
use hessianlab_core::sampling::{SampleSpec, TailMode};
use hessianlab_core::solver::{self, DenseLu, Field, SolveConfig};
use hessianlab_core::symfun::sum_hessian;
use hessianlab_core::transforms::{ellipticity_ratio_field, legendre_lewy, round_trip_error};

type Field2 = fn(&[f64]) -> f64;

fn quartic_mix(x: &[f64]) -> f64 {
    0.3 * x[0] * x[0] - 0.2 * x[1] * x[1] + 0.1 * x[0].powi(4) + 0.05 * x[0] * x[1]
}

fn hyperbolic(x: &[f64]) -> f64 {
    (1.0 + x[0] * x[0] + 2.0 * x[1] * x[1]).sqrt()
}

/// Least-squares slope of `ln e` against `ln h`.
fn fitted_order(rows: &[(f64, f64)]) -> f64 {
    let n = rows.len() as f64;
    let (mx, my) = rows
        .iter()
        .fold((0.0, 0.0), |(a, b), (h, e)| (a + h.ln() / n, b + e.ln() / n));
    let sxy: f64 = rows.iter().map(|(h, e)| (h.ln() - mx) * (e.ln() - my)).sum();
    let sxx: f64 = rows.iter().map(|(h, _)| (h.ln() - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn legendre_round_trip_converges_at_first_order() {
    // Coarse grids often recover ũ exactly (every node keeps a y-node in its
    // subdifferential cell), so the order is fitted over the grids with a
    // nonzero error rather than taken from consecutive ratios.
    let k1 = 1.0;
    for (name, f) in [
        ("quartic-mix", quartic_mix as Field2),
        ("hyperbolic", hyperbolic as Field2),
    ] {
        let mut rows = Vec::new();
        for m in [9usize, 13, 17, 25, 33, 49, 65] {
            let u = GridFunction::from_fn(GridSpec::cube(2, -1.0, 1.0, m).unwrap(), f);
            let w = legendre_lewy(&u, k1).unwrap();
            let h = 2.0 / (m as f64 - 1.0);
            let e = round_trip_error(&u, k1, &w).unwrap();
            assert!(e <= 0.1 * h, "{name}, m = {m}: error {e}");
            if e > 1e-12 {
                rows.push((h, e));
            }
        }
        assert!(rows.len() >= 4);
        let p = fitted_order(&rows);
        assert!(p >= 1.0, "{name}: order {p}, {rows:?}");
    }
}

#[test]
fn solver_ratios_sit_inside_the_campaign_envelope() {
    let exact = Field::Quartic { c: 2.0, eps: 1.0 };
    let cfg = SolveConfig::manufactured(3, 9, 1.0, exact);
    let res = solver::solve(&cfg, None, &mut DenseLu).unwrap();
    assert!(res.converged());
    let k1 = 2.0;
    let field = ellipticity_ratio_field(&res.u, k1).unwrap();
    assert_eq!(field.excluded, 0);

    // a campaign over the spectra the solver actually produced
    let (mut smin, mut smax, mut lmin, mut lmax) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for node in res.u.grid.interior() {
        let lam = res.u.hessian(node).unwrap().eigenvalues();
        let s = sum_hessian(3, &lam);
        smin = smin.min(s);
        smax = smax.max(s);
        lmin = lmin.min(lam[lam.len() - 1]);
        lmax = lmax.max(lam[0]);
    }
    let mut spec = SampleSpec::new(3, 3);
    spec.tail_mode = TailMode::Bounded;
    spec.semiconvexity = (-lmin).max(0.0) + 0.5;
    spec.lambda1_range = (0.5 * lmax, 2.0 * lmax);
    spec.tail_bound = 2.0 * lmax;
    spec.level = Some((0.5 * smin, 2.0 * smax));
    spec.count = 20_000;
    spec.seed = 5;
    let report = Campaign::new(Target::EllipticityRatio { k1 }, spec)
        .unwrap()
        .run()
        .unwrap();
    let (lo, hi) = (report.secondary_constant.unwrap(), report.estimated_constant);
    assert!(
        lo <= field.global_min && field.global_max <= hi,
        "solver [{}, {}] vs campaign [{lo}, {hi}]",
        field.global_min,
        field.global_max
    );
}
