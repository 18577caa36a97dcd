//! Butcher tableaux, additive Runge-Kutta pairs and their analysis.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Lu, Matrix};
use crate::math;

/// Tolerance for `c = A 1`.
pub const ABSCISSA_TOL: f64 = 1e-12;
/// Tolerance for an order condition to count as satisfied.
pub const ORDER_TOL: f64 = 1e-10;
/// Eigenvalue floor for positive semi-definiteness of `M`.
pub const PSD_TOL: f64 = 1e-10;
/// Floor for the smallest weight.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Raw, unchecked tableau data.
#[derive(Debug, Clone, PartialEq)]
pub struct TableauParts {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    /// A row of `A`, `b` or `c` has the wrong length.
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    NonFinite { what: String },
    /// `c_i` differs from the i-th row sum of `A`.
    Abscissa { stage: usize, c: f64, row_sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "tableau has no stages"),
            Violation::Dimension { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
            Violation::NonFinite { what } => write!(f, "{what} contains a non-finite entry"),
            Violation::Abscissa { stage, c, row_sum } => write!(
                f,
                "c ≠ A𝟙 at stage {stage}: c = {c}, row sum = {row_sum}"
            ),
        }
    }
}

/// Checks dimensions, finiteness and `c = A 1`. An empty list means valid.
pub fn validate(t: &TableauParts) -> Vec<Violation> {
    let mut out = Vec::new();
    let s = t.a.len();
    if s == 0 {
        out.push(Violation::Empty);
        return out;
    }
    for (i, row) in t.a.iter().enumerate() {
        if row.len() != s {
            out.push(Violation::Dimension {
                what: format!("A row {i}"),
                expected: s,
                found: row.len(),
            });
        }
    }
    for (what, v) in [("b", &t.b), ("c", &t.c)] {
        if v.len() != s {
            out.push(Violation::Dimension {
                what: what.to_owned(),
                expected: s,
                found: v.len(),
            });
        }
    }
    if t.a.iter().flatten().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite { what: "A".to_owned() });
    }
    if t.b.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite { what: "b".to_owned() });
    }
    if t.c.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite { what: "c".to_owned() });
    }
    if !out.is_empty() {
        return out;
    }
    for (i, (row, &c)) in t.a.iter().zip(&t.c).enumerate() {
        let row_sum: f64 = row.iter().sum();
        if (row_sum - c).abs() > ABSCISSA_TOL * row_sum.abs().max(1.0) {
            out.push(Violation::Abscissa { stage: i, c, row_sum });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Strictly lower triangular.
    Erk,
    /// Lower triangular with at least one nonzero diagonal entry.
    Dirk,
    General,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Erk => "ERK",
            Structure::Dirk => "DIRK",
            Structure::General => "general",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `M_ij = b_i a_ij + b_j a_ji - b_i b_j`
    pub m: Matrix,
    /// Eigenvalues of `M`, descending.
    pub eigenvalues: Vec<f64>,
    pub b_min: f64,
    pub is_algebraically_stable: bool,
}

/// A validated Runge-Kutta tableau with `c = A 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    a: Matrix,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau from `A` and `b`, deriving `c` from row sums.
    pub fn new<R: AsRef<[f64]>>(a: &[R], b: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = a.iter().map(|r| r.as_ref().to_vec()).collect();
        let c = rows.iter().map(|r| r.iter().sum()).collect();
        Self::from_parts(TableauParts {
            a: rows,
            b: b.to_vec(),
            c,
        })
    }

    pub fn from_parts(parts: TableauParts) -> Result<Self> {
        let violations = validate(&parts);
        if !violations.is_empty() {
            return Err(Error::InvalidTableau(violations));
        }
        let a = Matrix::from_rows(&parts.a).expect("validated square");
        Ok(Self {
            a,
            b: parts.b,
            c: parts.c,
        })
    }

    pub fn from_matrix(a: Matrix, b: Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = a.rows().map(|r| r.to_vec()).collect();
        Self::new(&rows, &b)
    }

    #[inline]
    pub fn stages(&self) -> usize {
        self.b.len()
    }
    #[inline]
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    #[inline]
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn to_parts(&self) -> TableauParts {
        TableauParts {
            a: self.a.rows().map(|r| r.to_vec()).collect(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }

    pub fn classify(&self) -> Structure {
        let s = self.stages();
        let mut upper = false;
        let mut diag = false;
        for i in 0..s {
            if self.a[(i, i)] != 0.0 {
                diag = true;
            }
            for j in i + 1..s {
                if self.a[(i, j)] != 0.0 {
                    upper = true;
                }
            }
        }
        match (upper, diag) {
            (true, _) => Structure::General,
            (false, true) => Structure::Dirk,
            (false, false) => Structure::Erk,
        }
    }

    pub fn algebraic_stability(&self) -> StabilityReport {
        let s = self.stages();
        let (a, b) = (&self.a, &self.b);
        let m = Matrix::from_fn(s, |i, j| b[i] * a[(i, j)] + b[j] * a[(j, i)] - b[i] * b[j]);
        let eigenvalues = symmetric_eigenvalues(&m);
        let b_min = b.iter().copied().fold(f64::INFINITY, f64::min);
        let lam_min = eigenvalues.last().copied().unwrap_or(0.0);
        StabilityReport {
            m,
            eigenvalues,
            b_min,
            is_algebraically_stable: b_min >= -WEIGHT_TOL && lam_min >= -PSD_TOL,
        }
    }

    /// Linear stability function `R(z) = 1 + z b^T (I - zA)^{-1} 1`, or
    /// `None` when `I - zA` is singular.
    pub fn stability_function(&self, z: f64) -> Option<f64> {
        let s = self.stages();
        let m = Matrix::from_fn(s, |i, j| f64::from(u8::from(i == j)) - z * self.a[(i, j)]);
        let lu = Lu::new(s, m.as_slice())?;
        let y = lu.solve(&vec![1.0; s]);
        Some(1.0 + z * self.b.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>())
    }

    /// Minimal diagonal blocks of `A` such that `A` is block lower triangular.
    pub fn diagonal_blocks(&self) -> Vec<Range<usize>> {
        diagonal_blocks(&self.a)
    }
}

/// Partitions `0..n` into the smallest consecutive blocks such that `a` has
/// no nonzero entry above the block diagonal.
pub fn diagonal_blocks(a: &Matrix) -> Vec<Range<usize>> {
    let n = a.dim();
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        let mut r = start;
        while r < end {
            for c in (end..n).rev() {
                if a[(r, c)] != 0.0 {
                    end = c + 1;
                    break;
                }
            }
            r += 1;
        }
        blocks.push(start..end);
        start = end;
    }
    blocks
}

/// An implicit/explicit tableau pair sharing the stage count.
#[derive(Debug, Clone, PartialEq)]
pub struct ArkPair {
    name: String,
    implicit: ButcherTableau,
    explicit: ButcherTableau,
    claimed_order: u32,
}

impl ArkPair {
    pub fn new(
        name: impl Into<String>,
        implicit: ButcherTableau,
        explicit: ButcherTableau,
        claimed_order: u32,
    ) -> Result<Self> {
        if implicit.stages() != explicit.stages() {
            return Err(Error::InvalidTableau(vec![Violation::Dimension {
                what: "explicit stage count".to_owned(),
                expected: implicit.stages(),
                found: explicit.stages(),
            }]));
        }
        Ok(Self {
            name: name.into(),
            implicit,
            explicit,
            claimed_order,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn implicit(&self) -> &ButcherTableau {
        &self.implicit
    }
    pub fn explicit(&self) -> &ButcherTableau {
        &self.explicit
    }
    pub fn claimed_order(&self) -> u32 {
        self.claimed_order
    }
    pub fn stages(&self) -> usize {
        self.implicit.stages()
    }

    /// Parses the plain-text pair format:
    ///
    /// ```text
    /// [implicit]
    /// A = 0.5 0
    ///     0.5 0.5
    /// b = 0.5 0.5
    /// [explicit]
    /// A = 0 0
    ///     1 0
    /// b = 0.5 0.5
    /// ```
    ///
    /// Rows of `A` may follow on continuation lines or be separated by `;`.
    /// Lines starting with `#` are comments. `c` is always derived. The
    /// claimed order is the order achieved under [`check_ark_order`].
    pub fn from_text(name: &str, text: &str) -> Result<Self> {
        let mut sections: Vec<(String, Vec<f64>, Vec<f64>, usize)> = Vec::new();
        let mut current: Option<usize> = None;
        let mut in_a = false;
        let bad = |msg: String| Error::InvalidParameter(format!("tableau text: {msg}"));
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                let sec = line[1..line.len() - 1].trim().to_ascii_lowercase();
                if sec != "implicit" && sec != "explicit" {
                    return Err(bad(format!("unknown section [{sec}] on line {}", lineno + 1)));
                }
                if sections.iter().any(|s| s.0 == sec) {
                    return Err(bad(format!("duplicate section [{sec}]")));
                }
                sections.push((sec, Vec::new(), Vec::new(), 0));
                current = Some(sections.len() - 1);
                in_a = false;
                continue;
            }
            let idx = current.ok_or_else(|| bad(format!("line {} outside a section", lineno + 1)))?;
            let (key, rest) = match line.split_once('=') {
                Some((k, r)) => (Some(k.trim().to_ascii_lowercase()), r),
                None => (None, line),
            };
            let nums = |s: &str| -> Result<Vec<f64>> {
                s.split(|ch: char| ch.is_whitespace() || ch == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| bad(format!("bad number `{t}` on line {}", lineno + 1)))
                    })
                    .collect()
            };
            let sec = &mut sections[idx];
            match key.as_deref() {
                Some("a") => {
                    in_a = true;
                    for row in rest.split(';') {
                        let v = nums(row)?;
                        if !v.is_empty() {
                            sec.1.extend(v);
                            sec.3 += 1;
                        }
                    }
                }
                Some("b") => {
                    in_a = false;
                    sec.2 = nums(rest)?;
                }
                Some("c") => {
                    in_a = false;
                }
                Some(k) => return Err(bad(format!("unknown key `{k}` on line {}", lineno + 1))),
                None if in_a => {
                    for row in rest.split(';') {
                        let v = nums(row)?;
                        if !v.is_empty() {
                            sec.1.extend(v);
                            sec.3 += 1;
                        }
                    }
                }
                None => return Err(bad(format!("unexpected line {}", lineno + 1))),
            }
        }
        let build = |which: &str| -> Result<ButcherTableau> {
            let (_, a, b, rows) = sections
                .iter()
                .find(|s| s.0 == which)
                .ok_or_else(|| bad(format!("missing [{which}] section")))?;
            if *rows == 0 || a.len() != rows * rows {
                return Err(bad(format!("[{which}] A is not square")));
            }
            let rows_v: Vec<&[f64]> = a.chunks(*rows).collect();
            ButcherTableau::new(&rows_v, b)
        };
        let implicit = build("implicit")?;
        let explicit = build("explicit")?;
        let mut pair = ArkPair::new(name, implicit, explicit, 0)?;
        pair.claimed_order = check_ark_order(&pair, 3)?.achieved_order;
        Ok(pair)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    StandAlone,
    Coupling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCondition {
    pub id: &'static str,
    pub order: u32,
    pub kind: ConditionKind,
    pub residual: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub conditions: Vec<OrderCondition>,
    pub achieved_order: u32,
}

impl OrderReport {
    pub fn failing(&self, order: u32) -> impl Iterator<Item = &OrderCondition> {
        self.conditions
            .iter()
            .filter(move |c| c.order == order && !c.satisfied)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Evaluates the additive Runge-Kutta order conditions up to `target` (at
/// most 3). Order-one coupling is vacuous.
pub fn check_ark_order(pair: &ArkPair, target: u32) -> Result<OrderReport> {
    if !(1..=3).contains(&target) {
        return Err(Error::UnsupportedOrder(target));
    }
    let (im, ex) = (&pair.implicit, &pair.explicit);
    let (a, b, c) = (im.a(), im.b(), im.c());
    let (ah, bh, ch) = (ex.a(), ex.b(), ex.c());
    let one = vec![1.0; b.len()];
    let c2 = hadamard(c, c);
    let ch2 = hadamard(ch, ch);
    let cch = hadamard(c, ch);
    use ConditionKind::{Coupling as Cp, StandAlone as Sa};
    let table: [(&'static str, u32, ConditionKind, f64, f64); 20] = [
        ("b.1", 1, Sa, dot(b, &one), 1.0),
        ("bh.1", 1, Sa, dot(bh, &one), 1.0),
        ("b.c", 2, Sa, dot(b, c), 0.5),
        ("bh.ch", 2, Sa, dot(bh, ch), 0.5),
        ("b.ch", 2, Cp, dot(b, ch), 0.5),
        ("bh.c", 2, Cp, dot(bh, c), 0.5),
        ("b.c^2", 3, Sa, dot(b, &c2), 1.0 / 3.0),
        ("bh.ch^2", 3, Sa, dot(bh, &ch2), 1.0 / 3.0),
        ("b.Ac", 3, Sa, dot(b, &a.mul_vec(c)), 1.0 / 6.0),
        ("bh.Ah ch", 3, Sa, dot(bh, &ah.mul_vec(ch)), 1.0 / 6.0),
        ("b.(c*ch)", 3, Cp, dot(b, &cch), 1.0 / 3.0),
        ("bh.(c*ch)", 3, Cp, dot(bh, &cch), 1.0 / 3.0),
        ("b.ch^2", 3, Cp, dot(b, &ch2), 1.0 / 3.0),
        ("bh.c^2", 3, Cp, dot(bh, &c2), 1.0 / 3.0),
        ("b.A ch", 3, Cp, dot(b, &a.mul_vec(ch)), 1.0 / 6.0),
        ("b.Ah c", 3, Cp, dot(b, &ah.mul_vec(c)), 1.0 / 6.0),
        ("b.Ah ch", 3, Cp, dot(b, &ah.mul_vec(ch)), 1.0 / 6.0),
        ("bh.A ch", 3, Cp, dot(bh, &a.mul_vec(ch)), 1.0 / 6.0),
        ("bh.Ah c", 3, Cp, dot(bh, &ah.mul_vec(c)), 1.0 / 6.0),
        ("bh.Ac", 3, Cp, dot(bh, &a.mul_vec(c)), 1.0 / 6.0),
    ];
    let conditions: Vec<OrderCondition> = table
        .iter()
        .filter(|row| row.1 <= target)
        .map(|&(id, order, kind, value, expected)| {
            let residual = value - expected;
            OrderCondition {
                id,
                order,
                kind,
                residual,
                satisfied: residual.abs() <= ORDER_TOL,
            }
        })
        .collect();
    let mut achieved_order = 0;
    for p in 1..=target {
        if conditions.iter().filter(|c| c.order == p).all(|c| c.satisfied) {
            achieved_order = p;
        } else {
            break;
        }
    }
    Ok(OrderReport {
        conditions,
        achieved_order,
    })
}

/// `sigma = (sqrt 3 / 3) cos(pi/18) + 1/2`
pub fn sigma() -> f64 {
    math::sqrt(3.0) / 3.0 * math::cos(PI / 18.0) + 0.5
}

/// `mu = 1 / (6 (2 sigma - 1)^2)`
pub fn mu() -> f64 {
    let t = 2.0 * sigma() - 1.0;
    1.0 / (6.0 * t * t)
}

/// Default `gamma = (3 + sqrt 3)/6` for DIARK(2,2,2).
pub fn default_gamma() -> f64 {
    (3.0 + math::sqrt(3.0)) / 6.0
}

/// Built-in additive pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Diark222 { gamma: f64 },
    Diark233,
    Diark343,
    Diark564,
    Gark454,
}

impl Method {
    pub const NAMES: [&'static str; 5] = [
        "diark_2_2_2",
        "diark_2_3_3",
        "diark_3_4_3",
        "diark_5_6_4",
        "gark_4_5_4",
    ];

    pub fn all() -> [Method; 5] {
        [
            Method::Diark222 {
                gamma: default_gamma(),
            },
            Method::Diark233,
            Method::Diark343,
            Method::Diark564,
            Method::Gark454,
        ]
    }

    /// Looks a method up by name. Case, punctuation and a leading `sav_`,
    /// `sav-` or `m` (the modified variant shares coefficients) are ignored, so
    /// `"DIARK(2,2,2)"`, `"diark_2_2_2"` and `"SAV-MDIARK(2,2,2)"` all match.
    /// `magrk` is accepted for GARK(4,5,4). `gamma` only affects DIARK(2,2,2).
    pub fn from_name(name: &str, gamma: Option<f64>) -> Result<Self> {
        let mut key: String = name
            .chars()
            .filter(|ch| ch.is_ascii_alphanumeric())
            .map(|ch| ch.to_ascii_lowercase())
            .collect();
        if let Some(rest) = key.strip_prefix("sav") {
            key = rest.to_string();
        }
        let key = match key.as_str() {
            "mdiark222" | "mdiark233" | "mdiark343" | "mdiark564" | "mgark454" => key[1..].to_string(),
            "magrk" => "gark454".to_string(),
            _ => key,
        };
        let method = match key.as_str() {
            "diark222" => Method::Diark222 {
                gamma: gamma.unwrap_or_else(default_gamma),
            },
            "diark233" => Method::Diark233,
            "diark343" | "diark453" => Method::Diark343,
            "diark564" => Method::Diark564,
            "gark454" => Method::Gark454,
            _ => {
                return Err(Error::UnknownMethod {
                    name: name.to_string(),
                    available: Self::NAMES.join(", "),
                })
            }
        };
        Ok(method)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Diark222 { .. } => Self::NAMES[0],
            Method::Diark233 => Self::NAMES[1],
            Method::Diark343 => Self::NAMES[2],
            Method::Diark564 => Self::NAMES[3],
            Method::Gark454 => Self::NAMES[4],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Diark222 { .. } => "DIARK(2,2,2)",
            Method::Diark233 => "DIARK(2,3,3)",
            Method::Diark343 => "DIARK(3,4,3)",
            Method::Diark564 => "DIARK(5,6,4)",
            Method::Gark454 => "GARK(4,5,4)",
        }
    }

    /// Nominal convergence order (4 for the fourth-order methods, even though
    /// only conditions up to order 3 are checked symbolically).
    pub fn nominal_order(&self) -> u32 {
        match self {
            Method::Diark222 { .. } => 2,
            Method::Diark233 | Method::Diark343 => 3,
            Method::Diark564 | Method::Gark454 => 4,
        }
    }

    pub fn pair(&self) -> ArkPair {
        let (a, ah, b): (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) = match *self {
            Method::Diark222 { gamma: g } => (
                vec![vec![g, 0.0], vec![1.0 - 2.0 * g, g]],
                vec![vec![0.0, 0.0], vec![1.0, 0.0]],
                vec![0.5, 0.5],
            ),
            Method::Diark233 => {
                let s3 = math::sqrt(3.0);
                let g = (3.0 + s3) / 6.0;
                (
                    vec![
                        vec![0.0, 0.0, 0.0],
                        vec![0.0, g, 0.0],
                        vec![0.0, -s3 / 3.0, g],
                    ],
                    vec![
                        vec![0.0, 0.0, 0.0],
                        vec![g, 0.0, 0.0],
                        vec![(-3.0 + s3) / 6.0, (3.0 - s3) / 3.0, 0.0],
                    ],
                    vec![0.0, 0.5, 0.5],
                )
            }
            Method::Diark343 => {
                let (s, m) = (sigma(), mu());
                let x = (9.0 * m * s - 3.0 * m - 3.0 * s + 1.0) / (3.0 * m * (2.0 * s - 1.0));
                (
                    vec![
                        vec![0.0, 0.0, 0.0, 0.0],
                        vec![0.0, s, 0.0, 0.0],
                        vec![0.0, 0.5 - s, s, 0.0],
                        vec![0.0, 2.0 * s, 1.0 - 4.0 * s, s],
                    ],
                    vec![
                        vec![0.0, 0.0, 0.0, 0.0],
                        vec![s, 0.0, 0.0, 0.0],
                        vec![0.0, 0.5, 0.0, 0.0],
                        vec![0.0, x, 1.0 - s - x, 0.0],
                    ],
                    vec![0.0, m, 1.0 - 2.0 * m, m],
                )
            }
            Method::Diark564 => {
                let (s, m) = (sigma(), mu());
                let m2 = m * m;
                let d1 = 108.0 * m2 - 90.0 * m + 9.0;
                let d2 = 324.0 * m2 - 270.0 * m + 27.0;
                let d3 = 36.0 * m2 - 30.0 * m + 3.0;
                (
                    vec![
                        vec![0.0; 6],
                        vec![0.0, 3.0 / 8.0, 0.0, 0.0, 0.0, 0.0],
                        vec![3.0 / 8.0, 0.0, 3.0 / 16.0, 0.0, 0.0, 0.0],
                        vec![0.0, 0.0, 0.0, s, 0.0, 0.0],
                        vec![0.0, 0.0, 0.0, 0.5 - s, s, 0.0],
                        vec![0.0, 0.0, 0.0, 2.0 * s, 1.0 - 4.0 * s, s],
                    ],
                    vec![
                        vec![0.0; 6],
                        vec![3.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                        vec![0.0, 9.0 / 16.0, 0.0, 0.0, 0.0, 0.0],
                        vec![
                            25.0 / (162.0 * m),
                            (-104.0 * s * m2 + 6.0 * m2 + 20.0 * m) / d1,
                            (112.0 * s * m2 + 36.0 * m2 - 37.0 * m) / d2,
                            0.0,
                            0.0,
                            0.0,
                        ],
                        vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
                        vec![
                            0.0,
                            (56.0 * s * m2 - 2.0 * m2 - 12.0 * m) / d3,
                            (16.0 * s * m2 - 4.0 * m2 + 3.0 * m) / d3,
                            0.0,
                            0.0,
                            0.0,
                        ],
                    ],
                    vec![0.0, 0.0, 0.0, m, 1.0 - 2.0 * m, m],
                )
            }
            Method::Gark454 => {
                let r = math::sqrt(3.0) / 6.0;
                (
                    vec![
                        vec![0.0; 5],
                        vec![0.0, 0.25, 0.0, 0.0, 0.0],
                        vec![0.25, 0.0, 0.25, 0.0, 0.0],
                        vec![0.0, 0.0, 0.0, 0.25, 0.25 - r],
                        vec![0.0, 0.0, 0.0, 0.25 + r, 0.25],
                    ],
                    vec![
                        vec![0.0; 5],
                        vec![0.25, 0.0, 0.0, 0.0, 0.0],
                        vec![0.0, 0.5, 0.0, 0.0, 0.0],
                        vec![1.0 / 6.0, 0.0, 1.0 / 3.0 - r, 0.0, 0.0],
                        vec![1.0 / 6.0, 0.0, 1.0 / 3.0 + r, 0.0, 0.0],
                    ],
                    vec![0.0, 0.0, 0.0, 0.5, 0.5],
                )
            }
        };
        let implicit = ButcherTableau::new(&a, &b).expect("built-in implicit part");
        let explicit = ButcherTableau::new(&ah, &b).expect("built-in explicit part");
        let claimed = self.nominal_order().min(3);
        ArkPair::new(self.label(), implicit, explicit, claimed).expect("matching stage counts")
    }
}

/// Looks up a built-in pair with default parameters.
pub fn builtin(name: &str) -> Result<ArkPair> {
    Ok(Method::from_name(name, None)?.pair())
}

pub fn implicit_euler() -> ButcherTableau {
    ButcherTableau::new(&[[1.0]], &[1.0]).expect("valid")
}

pub fn explicit_euler() -> ButcherTableau {
    ButcherTableau::new(&[[0.0]], &[1.0]).expect("valid")
}

/// Two-stage Gauss-Legendre method.
pub fn gauss2() -> ButcherTableau {
    let r = math::sqrt(3.0) / 6.0;
    ButcherTableau::new(&[[0.25, 0.25 - r], [0.25 + r, 0.25]], &[0.5, 0.5]).expect("valid")
}

/// Base tableaux usable by the prediction-correction scheme.
pub fn base_tableau(name: &str) -> Result<ButcherTableau> {
    let key: String = name
        .chars()
        .filter(|ch| ch.is_ascii_alphanumeric())
        .map(|ch| ch.to_ascii_lowercase())
        .collect();
    match key.as_str() {
        "impliciteuler" | "euler" | "backwardeuler" => Ok(implicit_euler()),
        "gauss2" | "gauss" | "gausslegendre2" => Ok(gauss2()),
        _ => Err(Error::UnknownMethod {
            name: name.to_string(),
            available: "implicit_euler, gauss2".to_string(),
        }),
    }
}

/// The four tableaux of the two-tableau-per-variable scheme, sharing `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkIITableaux {
    /// Implicit part acting on the (u, q) and r linear terms.
    pub a: ButcherTableau,
    /// Explicit part acting on the nonlinear velocities.
    pub a_hat: ButcherTableau,
    /// Linear weights producing the w stages.
    pub a_tilde: ButcherTableau,
    /// Nonlinear weights producing the w stages.
    pub a_bar: ButcherTableau,
}

impl MarkIITableaux {
    pub fn new(
        a: ButcherTableau,
        a_hat: ButcherTableau,
        a_tilde: ButcherTableau,
        a_bar: ButcherTableau,
    ) -> Result<Self> {
        let s = a.stages();
        for (what, t) in [("A hat", &a_hat), ("A tilde", &a_tilde), ("A bar", &a_bar)] {
            if t.stages() != s {
                return Err(Error::InvalidTableau(vec![Violation::Dimension {
                    what: what.to_owned(),
                    expected: s,
                    found: t.stages(),
                }]));
            }
            if t.b() != a.b() {
                return Err(Error::InvalidParameter(format!("{what} does not share b")));
            }
        }
        Ok(Self {
            a,
            a_hat,
            a_tilde,
            a_bar,
        })
    }

    pub fn stages(&self) -> usize {
        self.a.stages()
    }

    pub fn b(&self) -> &[f64] {
        self.a.b()
    }
}

/// Tableaux under which the prediction-correction scheme with base `base`
/// and `m` sweeps is a four-tableau scheme. Stages are grouped in `m + 1`
/// blocks of `s`; block 0 holds the step-start values, block `k` the k-th
/// prediction and block `m` the correction.
pub fn build_rkpc_markii(base: &ButcherTableau, m: usize) -> Result<MarkIITableaux> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "prediction-correction needs at least one sweep (M >= 1)".to_string(),
        ));
    }
    let s = base.stages();
    let n = (m + 1) * s;
    let blk = base.a();
    let mut a = Matrix::zeros(n);
    let mut a_hat = Matrix::zeros(n);
    let mut a_tilde = Matrix::zeros(n);
    let mut a_bar = Matrix::zeros(n);
    for k in 0..=m {
        if k >= 1 {
            a.set_block(k * s, k * s, blk);
            a_hat.set_block(k * s, (k - 1) * s, blk);
        }
        if k < m {
            a_tilde.set_block(k * s, (k + 1) * s, blk);
            a_bar.set_block(k * s, k * s, blk);
        } else {
            a_tilde.set_block(k * s, k * s, blk);
            a_bar.set_block(k * s, (k - 1) * s, blk);
        }
    }
    let mut b = vec![0.0; n];
    b[m * s..].copy_from_slice(base.b());
    MarkIITableaux::new(
        ButcherTableau::from_matrix(a, b.clone())?,
        ButcherTableau::from_matrix(a_hat, b.clone())?,
        ButcherTableau::from_matrix(a_tilde, b.clone())?,
        ButcherTableau::from_matrix(a_bar, b)?,
    )
}
