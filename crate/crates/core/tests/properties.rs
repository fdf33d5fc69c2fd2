use proptest::prelude::*;

use splicebound::checks::{
    check_two_increasing, coincidence_criterion, copulahood_criterion, fill_grid, matched_grid, pair_slacks,
    phi_simple_check, rectangle_volume, CHECK_TOL,
};
use splicebound::generator::SectionGenerator;
use splicebound::oracle::{CheckerboardProblem, INVARIANT_TOL};
use splicebound::{builtin, variation, EvalContext, SectionPair, SurfaceKind, VariationMethod, BUILTIN_NAMES};

fn generated(seed: u64) -> SectionPair {
    SectionGenerator::new(seed).section().unwrap()
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Checks the defining inequalities pointwise, independently of the
    // validator's sampling.
    #[test]
    fn generated_sections_are_admissible(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let s = generated(seed);
        let (t1, t2) = ordered(a, b);
        let (phi, g) = (s.phi(), s.gamma());
        for t in [t1, t2] {
            let v = g.value(t);
            prop_assert!(v >= (t + phi.eval(t) - 1.0).max(0.0) - 1e-10);
            prop_assert!(v <= t.min(phi.eval(t)) + 1e-10);
        }
        let dg = g.value(t2) - g.value(t1);
        prop_assert!(dg >= -1e-10);
        prop_assert!(dg <= (t2 - t1) + (phi.eval(t2) - phi.eval(t1)) + 1e-10);
    }

    #[test]
    fn variation_is_additive_and_signed(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        let s = generated(seed);
        for f in [s.hat(), s.tilde()] {
            let v = |p: f64, q: f64| variation(f, p, q, VariationMethod::MonotoneExact).unwrap();
            prop_assert!((v(a, c) - v(a, b) - v(b, c)).abs() <= 1e-12);
            prop_assert!((v(a, b) + v(b, a)).abs() <= 1e-15);
            let adaptive = variation(f, a, b, VariationMethod::Adaptive).unwrap();
            prop_assert!((adaptive - v(a, b)).abs() <= 1e-6);
        }
    }

    // The volume of a rectangle cut out by the curve is the largest of the
    // four pair quantities, halved except for (1).
    #[test]
    fn curve_rectangle_volume_matches_pair_slacks(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let s = generated(seed);
        let (x1, x2) = ordered(a, b);
        prop_assume!(x2 - x1 > 1e-6);
        let (y1, y2) = (s.phi().eval(x1), s.phi().eval(x2));
        let ctx = EvalContext::new(s);
        let vol = rectangle_volume(&ctx, SurfaceKind::Splice, x1, x2, y1, y2).unwrap();
        let p = pair_slacks(ctx.section(), x1, x2);
        let expected = p.ineq1.max(p.s2 / 2.0).max(p.s3 / 2.0).max(p.s4 / 2.0);
        prop_assert!((vol - expected).abs() <= 1e-9, "volume {vol}, pair quantities {p:?}");
    }

    #[test]
    fn inequality_two_persists_to_the_right(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64, c in 0.0..=1.0f64) {
        let s = generated(seed);
        let (x1, x2) = ordered(a, b);
        prop_assume!(x1 < x2);
        let x = x2 + c * (1.0 - x2);
        if pair_slacks(&s, x1, x2).s2 >= 0.0 {
            prop_assert!(pair_slacks(&s, x1, x).s2 >= -1e-12);
        }
    }

    #[test]
    fn inequality_four_never_has_slack(seed in any::<u64>(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let s = generated(seed);
        let (x1, x2) = ordered(a, b);
        prop_assert!(pair_slacks(&s, x1, x2).s4 <= 1e-12);
    }

    #[test]
    fn splice_and_companions_interpolate_the_section(seed in any::<u64>(), t in 0.0..=1.0f64) {
        let s = generated(seed);
        let y = s.phi().eval(t);
        let g = s.gamma().value(t);
        let ctx = EvalContext::new(s);
        for kind in SurfaceKind::SECTION_MATCHING {
            let v = ctx.surface(kind, t, y).unwrap();
            prop_assert!((v - g).abs() <= 1e-9, "{kind} at t = {t}: {v} vs {g}");
        }
    }
}

// Only claimed when the splice is a copula.
#[test]
fn inequality_one_implies_two_or_three() {
    let mut sections: Vec<SectionPair> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    sections.extend((0..40).map(generated));
    sections.retain(|s| copulahood_criterion(s, 120, CHECK_TOL).passed());
    assert!(sections.len() >= 5, "only {} copula sections", sections.len());
    let grid: Vec<f64> = (0..=60).map(|i| i as f64 / 60.0).collect();
    for s in &sections {
        for (i, &x1) in grid.iter().enumerate() {
            for &x2 in &grid[i + 1..] {
                let p = pair_slacks(s, x1, x2);
                if p.ineq1 >= 0.0 {
                    assert!(p.s2.max(p.s3) >= -1e-12, "({x1}, {x2}): {p:?}");
                }
            }
        }
    }
}

#[test]
fn phi_simple_sections_coincide_with_a() {
    let mut simple = 0;
    let mut sections: Vec<SectionPair> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    sections.extend((100..200).map(generated));
    for s in &sections {
        if phi_simple_check(s, 60) {
            simple += 1;
            assert!(coincidence_criterion(s, 60, CHECK_TOL).passed());
        }
    }
    assert!(simple >= 10, "only {simple} simple sections exercised");
}

// The pair criterion and the direct grid check must agree on passing
// sections; failing sections must show a negative grid volume.
#[test]
fn criterion_agrees_with_grid_check() {
    let mut sections: Vec<SectionPair> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    sections.extend((300..330).map(generated));
    let (mut passes, mut fails) = (0, 0);
    for s in sections {
        let criterion = copulahood_criterion(&s, 80, CHECK_TOL);
        let (xs, ys) = matched_grid(&s, 80);
        let ctx = EvalContext::new(s);
        let grid = fill_grid(&ctx, SurfaceKind::Splice, xs, ys).unwrap();
        let direct = check_two_increasing(&grid, CHECK_TOL);
        if criterion.passed() {
            passes += 1;
            assert!(direct.passed(), "{:?}", direct.worst());
        } else {
            fails += 1;
            let w = criterion.worst().unwrap();
            let (x1, x2) = (w.coords[0], w.coords[1]);
            let (y1, y2) = (ctx.section().phi().eval(x1), ctx.section().phi().eval(x2));
            let vol = rectangle_volume(&ctx, SurfaceKind::Splice, x1, x2, y1, y2).unwrap();
            assert!(vol < 0.0, "witness ({x1}, {x2}) has volume {vol}");
        }
    }
    assert!(passes > 0 && fails > 0, "{passes} passing, {fails} failing");
}

#[test]
fn lower_and_outer_constructions_induce_feasible_masses() {
    let mut sections: Vec<SectionPair> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    sections.extend((400..410).map(generated));
    for s in sections {
        let ctx = EvalContext::new(s);
        for kind in [SurfaceKind::Bertino, SurfaceKind::C1, SurfaceKind::C2] {
            let p = CheckerboardProblem::induced(ctx.section(), 12, |x, y| ctx.surface(kind, x, y).unwrap()).unwrap();
            p.check_invariants(INVARIANT_TOL)
                .unwrap_or_else(|e| panic!("{kind}: {e}"));
        }
    }
}
