use savark_harness::audit::{audit_tableaux, to_csv, to_text, AUDIT_HEADER};
use savark_harness::equiv::{equivalence_check, PASS_THRESHOLD};

#[test]
fn audit_rows() {
    let rows = audit_tableaux();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r.valid && r.algebraically_stable && r.order_ok(), "{}", r.method);
        assert_eq!(r.implicit_structure, if r.method == "gark_4_5_4" { "general" } else { "DIRK" });
        assert_eq!(r.explicit_structure, "ERK");
    }

    let r222 = rows.iter().find(|r| r.method == "diark_2_2_2").unwrap();
    assert_eq!(r222.achieved_order, 2);
    assert!(!r222.failing_order3.is_empty());

    let r343 = rows.iter().find(|r| r.method == "diark_3_4_3").unwrap();
    assert_eq!(r343.achieved_order, 3);
    let want = [1.5530, 0.0, 0.0, 0.0];
    for (e, w) in r343.m_eigenvalues.iter().zip(want) {
        assert!((e - w).abs() < 5e-5, "{:?}", r343.m_eigenvalues);
    }

    let r564 = rows.iter().find(|r| r.method == "diark_5_6_4").unwrap();
    assert_eq!(r564.achieved_order, 3);
    assert!(r564.failing_order3.is_empty());
    assert!(r564.note.contains("not checked symbolically"));
}

#[test]
fn audit_reports() {
    let rows = audit_tableaux();
    let csv = to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), AUDIT_HEADER);
    assert_eq!(lines.count(), 5);
    let text = to_text(&rows);
    assert!(text.contains("DIARK(3,4,3)"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn equivalence_examples() {
    let r = equivalence_check("gauss2", 1, "ac", 5, 32, None).unwrap();
    assert!(r.passed() && r.deviation() <= PASS_THRESHOLD, "{r:?}");
    let r = equivalence_check("implicit_euler", 3, "ch", 3, 32, None).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.model, "ch");
}

#[test]
fn equivalence_rejects_zero_sweeps() {
    let e = equivalence_check("gauss2", 0, "ac", 5, 32, None).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert_eq!(equivalence_check("rk4", 1, "ac", 5, 32, None).unwrap_err().exit_code(), 2);
    assert_eq!(equivalence_check("gauss2", 1, "heat", 5, 32, None).unwrap_err().exit_code(), 2);
}
