use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use savark_core::tableaux::{
    build_rkpc_markii, builtin, check_ark_order, default_gamma, explicit_euler, gauss2, implicit_euler, mu,
    sigma, validate, ArkPair, ButcherTableau, ConditionKind, Structure, TableauParts, Violation,
};
use savark_core::{Error, Method};

fn diark222(gamma: f64) -> ArkPair {
    Method::Diark222 { gamma }.pair()
}

fn dm(t: &ButcherTableau) -> DMatrix<f64> {
    let s = t.stages();
    DMatrix::from_fn(s, s, |i, j| t.a()[(i, j)])
}

/// Eigenvalues of `M_ij = b_i a_ij + b_j a_ji - b_i b_j`, computed with nalgebra.
fn m_spectrum(t: &ButcherTableau) -> Vec<f64> {
    let a = dm(t);
    let b = t.b();
    let s = b.len();
    let m = DMatrix::from_fn(s, s, |i, j| b[i] * a[(i, j)] + b[j] * a[(j, i)] - b[i] * b[j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

#[test]
fn validate_examples() {
    assert!(validate(&implicit_euler().to_parts()).is_empty());
    let bad = TableauParts {
        a: vec![vec![0.0]],
        b: vec![1.0],
        c: vec![1.0],
    };
    let v = validate(&bad);
    assert!(matches!(v.as_slice(), [Violation::Abscissa { stage: 0, .. }]));
    assert!(v[0].to_string().contains("c ≠ A𝟙"));

    let p = diark222(0.25);
    assert!(validate(&p.implicit().to_parts()).is_empty());
    assert_eq!(p.implicit().c(), &[0.25, 0.75]);
}

#[test]
fn validate_reports_nan_and_dimensions() {
    let t = TableauParts {
        a: vec![vec![f64::NAN, 0.0], vec![0.0, 1.0]],
        b: vec![0.5, 0.5],
        c: vec![0.0, 1.0],
    };
    assert!(validate(&t).iter().any(|v| matches!(v, Violation::NonFinite { .. })));
    let t = TableauParts {
        a: vec![vec![0.0, 0.0], vec![1.0]],
        b: vec![0.5],
        c: vec![0.0, 1.0],
    };
    let v = validate(&t);
    assert_eq!(v.iter().filter(|v| matches!(v, Violation::Dimension { .. })).count(), 2);
    assert_eq!(validate(&TableauParts { a: vec![], b: vec![], c: vec![] }), vec![Violation::Empty]);
    assert!(matches!(
        ButcherTableau::from_parts(TableauParts {
            a: vec![vec![0.0]],
            b: vec![1.0],
            c: vec![1.0]
        }),
        Err(Error::InvalidTableau(_))
    ));
}

#[test]
fn classify_examples() {
    let erk = ButcherTableau::new(&[[0.0, 0.0], [1.0, 0.0]], &[0.5, 0.5]).unwrap();
    assert_eq!(erk.classify(), Structure::Erk);
    assert_eq!(diark222(0.25).implicit().classify(), Structure::Dirk);
    assert_eq!(gauss2().classify(), Structure::General);
    let s3 = 3f64.sqrt();
    assert!((gauss2().a()[(0, 1)] - (0.25 - s3 / 6.0)).abs() < 1e-16);
}

#[test]
fn algebraic_stability_examples() {
    let r = diark222(0.25).implicit().algebraic_stability();
    assert!(r.m.max_abs() < 1e-15);
    assert!(r.is_algebraically_stable);

    let r = diark222(0.2).implicit().algebraic_stability();
    let lam_min = *r.eigenvalues.last().unwrap();
    assert!((lam_min - 2.0 * (0.2 - 0.25)).abs() < 1e-14, "{lam_min}");
    assert!(!r.is_algebraically_stable);

    let r = gauss2().algebraic_stability();
    assert!(r.m.max_abs() < 1e-15);
    assert!(r.is_algebraically_stable);
}

#[test]
fn order_examples() {
    let ee = ArkPair::new("euler", explicit_euler(), explicit_euler(), 1).unwrap();
    let rep = check_ark_order(&ee, 2).unwrap();
    assert_eq!(rep.achieved_order, 1);
    let bc = rep.conditions.iter().find(|c| c.id == "b.c").unwrap();
    assert!((bc.residual + 0.5).abs() < 1e-15);

    let rep = check_ark_order(&diark222(0.25), 2).unwrap();
    assert_eq!(rep.achieved_order, 2);
    assert_eq!(rep.conditions.len(), 6);

    let rep = check_ark_order(&Method::Diark233.pair(), 3).unwrap();
    assert_eq!(rep.achieved_order, 3);
    assert_eq!(rep.conditions.len(), 20);
    assert_eq!(rep.conditions.iter().filter(|c| c.kind == ConditionKind::Coupling).count(), 12);

    assert_eq!(check_ark_order(&Method::Diark233.pair(), 4).unwrap_err(), Error::UnsupportedOrder(4));
    assert_eq!(check_ark_order(&Method::Diark233.pair(), 0).unwrap_err(), Error::UnsupportedOrder(0));
}

/// Every order <= 3 condition of an ARK pair, evaluated with nalgebra.
fn oracle_residuals(p: &ArkPair) -> Vec<(u32, f64)> {
    let (a, ah) = (dm(p.implicit()), dm(p.explicit()));
    let s = p.stages();
    let one = DVector::from_element(s, 1.0);
    let (c, ch) = (&a * &one, &ah * &one);
    let b = DVector::from_column_slice(p.implicit().b());
    let bh = DVector::from_column_slice(p.explicit().b());
    let sq = |x: &DVector<f64>, y: &DVector<f64>| x.component_mul(y);
    let mut out = vec![(1, b.sum() - 1.0), (1, bh.sum() - 1.0)];
    for (u, v) in [(&b, &c), (&bh, &ch), (&b, &ch), (&bh, &c)] {
        out.push((2, u.dot(v) - 0.5));
    }
    for w in [&b, &bh] {
        for (x, y) in [(&c, &c), (&ch, &ch), (&c, &ch)] {
            out.push((3, w.dot(&sq(x, y)) - 1.0 / 3.0));
        }
        for m in [&a, &ah] {
            for x in [&c, &ch] {
                out.push((3, w.dot(&(m * x)) - 1.0 / 6.0));
            }
        }
    }
    out
}

#[test]
fn builtin_library_invariants() {
    for m in Method::all() {
        let p = m.pair();
        assert!(validate(&p.implicit().to_parts()).is_empty(), "{}", m.label());
        assert!(validate(&p.explicit().to_parts()).is_empty(), "{}", m.label());
        let expected = if m == Method::Gark454 { Structure::General } else { Structure::Dirk };
        assert_eq!(p.implicit().classify(), expected, "{}", m.label());
        assert_eq!(p.explicit().classify(), Structure::Erk, "{}", m.label());
        assert_eq!(p.implicit().b(), p.explicit().b(), "{}", m.label());

        let claimed = m.nominal_order().min(3);
        assert_eq!(p.claimed_order(), claimed);
        let rep = check_ark_order(&p, 3).unwrap();
        assert_eq!(rep.achieved_order, claimed, "{}", m.label());
        if claimed < 3 {
            assert!(rep.failing(claimed + 1).any(|c| c.residual.abs() > 1e-6), "{}", m.label());
        }
        let oracle = oracle_residuals(&p);
        let oracle_order = (1..=3)
            .take_while(|&q| oracle.iter().filter(|(o, _)| *o == q).all(|(_, r)| r.abs() <= 1e-10))
            .last()
            .unwrap_or(0);
        assert_eq!(oracle_order, claimed, "{} oracle", m.label());

        let st = p.implicit().algebraic_stability();
        assert!(st.is_algebraically_stable, "{}: {:?}", m.label(), st.eigenvalues);
        let ev = m_spectrum(p.implicit());
        for (x, y) in st.eigenvalues.iter().zip(&ev) {
            assert!((x - y).abs() < 1e-12, "{}: {:?} vs {:?}", m.label(), st.eigenvalues, ev);
        }
    }
}

#[test]
fn diark222_fails_an_order_three_condition() {
    let rep = check_ark_order(&diark222(default_gamma()), 3).unwrap();
    assert_eq!(rep.achieved_order, 2);
    let failing: Vec<_> = rep.failing(3).map(|c| c.id).collect();
    assert!(failing.contains(&"bh.ch^2"), "{failing:?}");
}

#[test]
fn builtin_coefficients() {
    let g = (3.0 + 3f64.sqrt()) / 6.0;
    let p = builtin("DIARK(2,2,2)").unwrap();
    let a = p.implicit().a();
    assert_eq!((a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]), (g, 0.0, 1.0 - 2.0 * g, g));
    let ah = p.explicit().a();
    assert_eq!((ah[(0, 0)], ah[(0, 1)], ah[(1, 0)], ah[(1, 1)]), (0.0, 0.0, 1.0, 0.0));
    assert_eq!(p.implicit().b(), &[0.5, 0.5]);

    let s = (3f64).sqrt() / 3.0 * (std::f64::consts::PI / 18.0).cos() + 0.5;
    assert_eq!(sigma(), s);
    assert!((mu() - 1.0 / (6.0 * (2.0 * s - 1.0).powi(2))).abs() < 1e-15);

    let p = builtin("diark_3_4_3").unwrap();
    assert_eq!(p.stages(), 4);
    let ev = p.implicit().algebraic_stability().eigenvalues;
    let expect = [1.5530, 0.0, 0.0, 0.0];
    for (x, y) in ev.iter().zip(expect) {
        assert!((x - y).abs() < 5e-5, "{ev:?}");
    }

    let ev = builtin("diark_2_3_3").unwrap().implicit().algebraic_stability().eigenvalues;
    assert_eq!(ev.len(), 3);
    assert!((ev[0] - 1.0774).abs() < 5e-5 && ev[1].abs() < 1e-12 && ev[2].abs() < 1e-12, "{ev:?}");

    let p = builtin("GARK(4,5,4)").unwrap();
    assert_eq!(p.stages(), 5);
    assert!(p.implicit().algebraic_stability().m.max_abs() < 1e-14);
    let blk = p.implicit().a().sub_block(3, 2);
    let gauss = gauss2();
    for i in 0..2 {
        for j in 0..2 {
            assert!((blk[(i, j)] - gauss.a()[(i, j)]).abs() < 1e-15);
        }
    }
    assert_eq!(builtin("SAV-MAGRK").unwrap(), p);
}

#[test]
fn unknown_method_lists_available() {
    let err = builtin("rk4").unwrap_err();
    match err {
        Error::UnknownMethod { name, available } => {
            assert_eq!(name, "rk4");
            for n in Method::NAMES {
                assert!(available.contains(n));
            }
        }
        e => panic!("{e:?}"),
    }
}

#[test]
fn rkpc_markii_implicit_euler_m1() {
    let t = build_rkpc_markii(&implicit_euler(), 1).unwrap();
    let rows = |b: &ButcherTableau| b.to_parts().a;
    assert_eq!(rows(&t.a), vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(rows(&t.a_hat), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
    assert_eq!(rows(&t.a_tilde), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
    assert_eq!(rows(&t.a_bar), vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    assert_eq!(t.b(), &[0.0, 1.0]);
}

#[test]
fn rkpc_markii_gauss2_m2() {
    let g = gauss2();
    let t = build_rkpc_markii(&g, 2).unwrap();
    assert_eq!(t.stages(), 6);
    assert_eq!(t.a.a().sub_block(4, 2), g.a().clone());
    assert_eq!(&t.b()[..4], &[0.0; 4]);
    assert_eq!(&t.b()[4..], g.b());
}

#[test]
fn rkpc_markii_zero_sweeps_rejected() {
    assert!(matches!(build_rkpc_markii(&gauss2(), 0), Err(Error::InvalidParameter(_))));
}

#[test]
fn tableau_text_format() {
    let text = "\
# two-stage pair
[implicit]
A = 0.5 0
    0.5 0.5
b = 0.5 0.5
[explicit]
A = 0 0; 1 0
b = 0.5 0.5
";
    let p = ArkPair::from_text("custom", text).unwrap();
    assert_eq!(p.implicit().c(), &[0.5, 1.0]);
    assert_eq!(p.explicit().c(), &[0.0, 1.0]);
    assert_eq!(p.name(), "custom");
    assert!(ArkPair::from_text("x", "[implicit]\nA = 1\nb = 1\n").is_err());
    assert!(ArkPair::from_text("x", "[implicit]\nA = 1 0\nb = 1\n[explicit]\nA = 0\nb = 1\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diark222_m_matrix_closed_form(gamma in 0.0f64..1.0) {
        let r = diark222(gamma).implicit().algebraic_stability();
        let d = gamma - 0.25;
        let expect = [[d, -d], [-d, d]];
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((r.m[(i, j)] - expect[i][j]).abs() <= 1e-14);
            }
        }
        prop_assert_eq!(r.is_algebraically_stable, gamma >= 0.25 - 1e-10 / 2.0);
    }

    #[test]
    fn rkpc_markii_row_sums_and_shape(m in 1usize..5, which in 0usize..2) {
        let base = if which == 0 { implicit_euler() } else { gauss2() };
        let s = base.stages();
        let t = build_rkpc_markii(&base, m).unwrap();
        prop_assert_eq!(t.stages(), (m + 1) * s);
        for part in [&t.a, &t.a_hat, &t.a_tilde, &t.a_bar] {
            prop_assert!(validate(&part.to_parts()).is_empty());
            prop_assert_eq!(part.b(), t.b());
        }
        prop_assert!(t.b()[..m * s].iter().all(|&x| x == 0.0));
        prop_assert_eq!(&t.b()[m * s..], base.b());
    }

    #[test]
    fn stability_function_matches_dense(z in -50.0f64..0.0, k in 0usize..5) {
        let t = Method::all()[k].pair();
        let imp = t.implicit();
        let s = imp.stages();
        let m = DMatrix::identity(s, s) - dm(imp) * z;
        let x = m.lu().solve(&DVector::from_element(s, 1.0)).unwrap();
        let r = 1.0 + z * DVector::from_column_slice(imp.b()).dot(&x);
        prop_assert!((imp.stability_function(z).unwrap() - r).abs() <= 1e-12 * r.abs().max(1.0));
    }
}
