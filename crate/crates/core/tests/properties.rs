//! Randomized invariants for the expression, word, rotation, and
//! verification layers. Each property states a fact that must hold for
//! every admissible input, with tolerances derived from the estimators'
//! own error bounds rather than tuned to the samples.

mod common;

use common::{conjugated_translations, translations};
use proptest::prelude::*;
use pseudogroup::expr::{parse, Expr};
use pseudogroup::nilpotency::{verify_near_identity_nilpotent, VerifyOptions};
use pseudogroup::pmap::{eval_word, word_domain, Generator, Word};
use pseudogroup::rotation::{
    relative_translation_number, rotation_number, DegreeOneMap, TauOptions,
};

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3.0..3.0f64).prop_map(Expr::Const), Just(Expr::Var)];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(a.into(), b.into())),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(a.into(), b.into())),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(a.into(), b.into())),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Div(a.into(), b.into())),
            inner.clone().prop_map(|a| Expr::Neg(a.into())),
            (inner.clone(), 2..4i32).prop_map(|(a, n)| Expr::Pow(a.into(), n)),
            inner.clone().prop_map(|a| Expr::Exp(a.into())),
            inner.prop_map(|a| Expr::Log(a.into())),
        ]
    })
}

/// A generator of the form `x + b + d*x^2`, increasing and close to the
/// identity for the coefficient ranges used below.
fn perturbed_translation(name: &str, b: f64, d: f64) -> Generator {
    Generator::parse(name, &format!("x + {b} + {d}*x^2")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Symbolic differentiation agrees with a central finite difference
    /// wherever both are defined.
    #[test]
    fn derivative_matches_finite_difference(
        a in -0.5..0.5f64,
        b in -0.5..0.5f64,
        c in -0.5..0.5f64,
        d in -0.5..0.5f64,
        x in -0.8..0.8f64,
    ) {
        let e = Expr::Add(
            Expr::Add(
                Expr::Add(
                    Expr::Const(a).into(),
                    Expr::Mul(Expr::Const(b).into(), Expr::Var.into()).into(),
                )
                .into(),
                Expr::Mul(Expr::Const(c).into(), Expr::Pow(Expr::Var.into(), 2).into())
                    .into(),
            )
            .into(),
            Expr::Mul(Expr::Const(d).into(), Expr::Exp(Expr::Var.into()).into()).into(),
        );
        let de = e.differentiate();
        let h = 1e-5;
        let fd = (e.evaluate(x + h).unwrap() - e.evaluate(x - h).unwrap()) / (2.0 * h);
        let exact = de.evaluate(x).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-8, "exact {exact} vs fd {fd}");
    }

    /// Printing an expression and reparsing it reproduces the same tree.
    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let text = e.to_string();
        match parse(&text) {
            Ok(back) => prop_assert_eq!(back, e, "printed as {}", text),
            Err(err) => prop_assert!(false, "printed as {text}, parse failed: {err}"),
        }
    }

    /// Words evaluate monotonically: strictly increasing maps compose to
    /// strictly increasing partial maps.
    #[test]
    fn words_evaluate_monotonically(
        b1 in 0.002..0.008f64,
        d1 in -0.001..0.001f64,
        b2 in 0.002..0.008f64,
        d2 in -0.001..0.001f64,
        letters in proptest::collection::vec((0usize..2, proptest::bool::ANY), 1..6),
        t1 in 0.0..1.0f64,
        t2 in 0.0..1.0f64,
    ) {
        let gens = pseudogroup::GeneratorSet::new(
            vec![
                perturbed_translation("f1", b1, d1),
                perturbed_translation("f2", b2, d2),
            ],
            1,
        )
        .unwrap();
        let w = letters.iter().fold(Word::identity(), |acc, &(i, inv)| {
            let letter = if inv { Word::generator_inverse(i) } else { Word::generator(i) };
            acc.concat(&letter)
        });
        let domain = word_domain(&gens, &w, 1e-9);
        prop_assume!(domain.length() > 0.2);
        prop_assume!((t1 - t2).abs() > 1e-3);
        let place = |t: f64| domain.lo + (0.01 + 0.98 * t) * domain.length();
        let (x, y) = (place(t1.min(t2)), place(t1.max(t2)));
        let fx = eval_word(&gens, &w, x, 1e-12).unwrap();
        let fy = eval_word(&gens, &w, y, 1e-12).unwrap();
        prop_assert!(fx < fy, "w({x}) = {fx} !< w({y}) = {fy}");
    }

    /// Numerical inversion undoes evaluation well inside the interval.
    #[test]
    fn inversion_round_trips(
        a in -0.004..0.004f64,
        x in -0.9..0.9f64,
    ) {
        let g = Generator::parse("g", &format!("x/(1 - {a}*x)")).unwrap();
        let y = g.eval(x).unwrap();
        let back = g.invert(y, 1e-12).unwrap();
        prop_assert!((back - x).abs() <= 1e-10, "x {x}, back {back}");
    }

    /// Order-1 commutators of near-identity pairs stay defined on the bulk
    /// of the interval: their domain contains (-0.96, 0.96).
    #[test]
    fn commutator_domain_contains_core(
        a in -0.004..0.004f64,
        b in -0.002..0.002f64,
        c in -0.002..0.002f64,
        d in -0.002..0.002f64,
    ) {
        let gens = pseudogroup::GeneratorSet::new(
            vec![
                Generator::parse("f1", &format!("x/(1 - {a}*x)")).unwrap(),
                Generator::parse("f2", &format!("x + {b} + {c}*x + {d}*x^2")).unwrap(),
            ],
            1,
        )
        .unwrap();
        let g = Word::commutator(&Word::generator(0), &Word::generator(1));
        let domain = word_domain(&gens, &g, 1e-9);
        prop_assert!(
            domain.lo <= -0.96 && domain.hi >= 0.96,
            "domain {:?}",
            domain
        );
    }

    /// The geometry of the nested orbit intervals `I_k` around a base
    /// point: the slower map and its inverse advance indices by at most 2,
    /// and the commutator by at most 4.
    #[test]
    fn orbit_interval_geometry(
        b1 in 0.005..0.009f64,
        d1 in -0.0005..0.0005f64,
        b2f in 0.15..1.0f64,
        d2 in -0.0005..0.0005f64,
    ) {
        let b2 = b2f * b1;
        let gens = pseudogroup::GeneratorSet::new(
            vec![
                perturbed_translation("f1", b1, d1),
                perturbed_translation("f2", b2, d2),
            ],
            1,
        )
        .unwrap();
        let f1 = gens.generator(0);
        let f2 = gens.generator(1);
        // I_k = (f1^{-k}(0), f1^{k}(0)) for k = 0..=12.
        let mut hi = vec![0.0f64];
        let mut lo = vec![0.0f64];
        for k in 0..12 {
            hi.push(f1.eval(hi[k]).unwrap());
            lo.push(f1.invert(lo[k], 1e-13).unwrap());
        }
        let slack = 1e-9;
        for k in 1..=8usize {
            let fal = f2.eval(lo[k]).unwrap();
            let fah = f2.eval(hi[k]).unwrap();
            prop_assert!(fal >= lo[k + 2] - slack && fah <= hi[k + 2] + slack);
            let ial = f2.invert(lo[k], 1e-13).unwrap();
            let iah = f2.invert(hi[k], 1e-13).unwrap();
            prop_assert!(ial >= lo[k + 2] - slack && iah <= hi[k + 2] + slack);
        }
        let g = Word::commutator(&Word::generator(0), &Word::generator(1));
        for k in 1..6usize {
            let gl = eval_word(&gens, &g, lo[k], 1e-13).unwrap();
            let gh = eval_word(&gens, &g, hi[k], 1e-13).unwrap();
            prop_assert!(gl >= lo[k + 4] - slack && gh <= hi[k + 4] + slack);
        }
    }

    /// Successive orbit gaps of a near-identity map grow or shrink no
    /// faster than the measured distance to the identity allows.
    #[test]
    fn orbit_gap_growth_bounds(
        b1 in 0.005..0.009f64,
        d1 in -0.0005..0.0005f64,
    ) {
        let g = perturbed_translation("f1", b1, d1);
        let eps = g.c1_distance(2048);
        // Orbit f1^k(0) for k = -10..=10.
        let mut orbit = vec![0.0f64];
        for _ in 0..10 {
            orbit.push(g.eval(*orbit.last().unwrap()).unwrap());
        }
        let mut back = vec![0.0f64];
        for _ in 0..10 {
            back.push(g.invert(*back.last().unwrap(), 1e-13).unwrap());
        }
        back.reverse();
        back.extend_from_slice(&orbit[1..]);
        let orbit = back; // orbit[j] = f1^{j-10}(0)
        let delta = orbit[11] - orbit[10];
        for k in -10i32..10 {
            let j = (k + 10) as usize;
            let gap = orbit[j + 1] - orbit[j];
            let pow = (k.abs() + 1) as i32;
            let lower = delta * (1.0 - eps).powi(pow);
            let upper = delta * (1.0 + eps).powi(pow);
            prop_assert!(
                lower < gap && gap < upper,
                "k {k}: gap {gap} outside ({lower}, {upper})"
            );
        }
    }

    /// The crossing-count estimate recovers a rigid rotation's angle
    /// within 1/n, and its internal cross-check stays quiet.
    #[test]
    fn rigid_rotation_estimate_converges(alpha in 0.01..0.99f64) {
        let map = DegreeOneMap::from_expr(parse(&format!("x + {alpha}")).unwrap()).unwrap();
        let n = 4000;
        let est = rotation_number(&map, n, 50).unwrap();
        prop_assert!((est.value - alpha).abs() <= 1.0 / n as f64);
    }

    /// For translation pairs the relative speed is the ratio of the
    /// translation amounts.
    #[test]
    fn relative_speed_matches_translation_ratio(
        a1 in 0.004..0.02f64,
        r in 0.2..1.0f64,
    ) {
        let a2 = r * a1;
        let gens = translations(1, &[a1, a2]);
        let est = relative_translation_number(
            &gens,
            &Word::generator(1),
            &Word::generator(0),
            0.0,
            TauOptions::default(),
        )
        .unwrap();
        let want = a2 / a1;
        prop_assert!(
            (est.value - want).abs() <= 2.0 * est.error_bound,
            "estimate {} vs ratio {want}",
            est.value
        );
    }

    /// Relative speeds are invariant under conjugating the whole family by
    /// a change of coordinates.
    #[test]
    fn relative_speed_is_conjugation_invariant(
        a1 in 0.004..0.02f64,
        r in 0.2..1.0f64,
    ) {
        let a2 = r * a1;
        let flat = translations(1, &[a1, a2]);
        let bent = conjugated_translations(1, &[a1, a2]);
        let opts = TauOptions::default();
        let subject = Word::generator(1);
        let ruler = Word::generator(0);
        let t_flat =
            relative_translation_number(&flat, &subject, &ruler, 0.0, opts).unwrap();
        let t_bent =
            relative_translation_number(&bent, &subject, &ruler, 0.0, opts).unwrap();
        prop_assert!(
            (t_flat.value - t_bent.value).abs()
                <= t_flat.error_bound + t_bent.error_bound,
            "flat {} vs conjugated {}",
            t_flat.value,
            t_bent.value
        );
    }

    /// A family that verifies at one order keeps verifying at higher
    /// orders while its size stays under the tighter thresholds.
    #[test]
    fn tiny_families_verify_at_higher_orders(
        a in 2e-5..9e-5f64,
        r in 0.2..1.0f64,
    ) {
        let amounts = [a, r * a];
        let opts = VerifyOptions { samples: 256, ..Default::default() };
        for order in 1..=3u32 {
            let gens = translations(order, &amounts);
            let report = verify_near_identity_nilpotent(&gens, opts).unwrap();
            prop_assert!(report.passed, "order {order}: {report:?}");
        }
    }
}
