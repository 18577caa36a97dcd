//! `audit`: validation, structure, order and algebraic stability of every
//! built-in method.

use std::fmt::Write as _;

use savark_core::tableaux::{check_ark_order, validate};
use savark_core::{ButcherTableau, Method};
use serde::Serialize;

use crate::output::fmt_f64;

pub const AUDIT_HEADER: &str =
    "method,label,stages,valid,implicit_structure,explicit_structure,claimed_order,achieved_order,algebraically_stable,b_min,m_eigenvalues,failing_order3,note";

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub method: String,
    pub label: String,
    pub stages: usize,
    pub valid: bool,
    pub implicit_structure: String,
    pub explicit_structure: String,
    pub claimed_order: u32,
    /// Highest order (at most 3) whose conditions all hold.
    pub achieved_order: u32,
    pub algebraically_stable: bool,
    pub b_min: f64,
    /// Eigenvalues of `M = B A + A^T B - b b^T`, descending.
    pub m_eigenvalues: Vec<f64>,
    pub failing_order3: Vec<String>,
    pub note: String,
}

impl AuditRow {
    /// Claimed order reached among the checked conditions (orders <= 3).
    pub fn order_ok(&self) -> bool {
        self.achieved_order >= self.claimed_order.min(3)
    }
}

fn valid(t: &ButcherTableau) -> bool {
    validate(&t.to_parts()).is_empty()
}

pub fn audit_method(m: Method) -> AuditRow {
    let pair = m.pair();
    let report = check_ark_order(&pair, 3).expect("order 3 is supported");
    let stab = pair.implicit().algebraic_stability();
    let claimed = m.nominal_order();
    AuditRow {
        method: m.name().to_string(),
        label: m.label().to_string(),
        stages: pair.stages(),
        valid: valid(pair.implicit()) && valid(pair.explicit()),
        implicit_structure: pair.implicit().classify().to_string(),
        explicit_structure: pair.explicit().classify().to_string(),
        claimed_order: claimed,
        achieved_order: report.achieved_order,
        algebraically_stable: stab.is_algebraically_stable,
        b_min: stab.b_min,
        m_eigenvalues: stab.eigenvalues.clone(),
        failing_order3: report.failing(3).map(|c| c.id.to_string()).collect(),
        note: if claimed > 3 {
            "order-4 conditions not checked symbolically; see convergence suite".to_string()
        } else {
            String::new()
        },
    }
}

pub fn audit_tableaux() -> Vec<AuditRow> {
    Method::all().into_iter().map(audit_method).collect()
}

fn spectrum(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{:.4}", if x.abs() < 5e-13 { 0.0 } else { *x }))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn to_csv(rows: &[AuditRow]) -> String {
    let mut s = format!("{AUDIT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.label,
            r.stages,
            r.valid,
            r.implicit_structure,
            r.explicit_structure,
            r.claimed_order,
            r.achieved_order,
            r.algebraically_stable,
            fmt_f64(r.b_min),
            spectrum(&r.m_eigenvalues),
            r.failing_order3.join(" "),
            r.note
        );
    }
    s
}

pub fn to_text(rows: &[AuditRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(s, "{} ({}), {} stages", r.label, r.method, r.stages);
        let _ = writeln!(s, "  valid:              {}", r.valid);
        let _ = writeln!(s, "  structure:          implicit {}, explicit {}", r.implicit_structure, r.explicit_structure);
        let _ = writeln!(
            s,
            "  order:              claimed {}, achieved {} of <= 3 [{}]",
            r.claimed_order,
            r.achieved_order,
            if r.order_ok() { "ok" } else { "FAIL" }
        );
        if !r.failing_order3.is_empty() {
            let _ = writeln!(s, "  failing order 3:    {}", r.failing_order3.join(", "));
        }
        let _ = writeln!(
            s,
            "  algebraic stability: {} (b_min {:.4}, M spectrum [{}])",
            if r.algebraically_stable { "stable" } else { "NOT stable" },
            r.b_min,
            spectrum(&r.m_eigenvalues)
        );
        if !r.note.is_empty() {
            let _ = writeln!(s, "  note:               {}", r.note);
        }
    }
    s
}
