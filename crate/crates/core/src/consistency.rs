//! Derives the equations of motion from the moment brackets and compares
//! them with the tables the integrator uses.
//!
//! `dG/dt = {G, H_Q}` is expanded with [`bracket_with_polynomial`]; `q` and
//! `p` commute with every moment, so their equations come from the partial
//! derivatives of `H_Q`. Derived terms are closed at the truncation order:
//! anything containing a higher moment or of higher semiclassical degree is
//! dropped. Coefficients stay symbolic in `1/m`, so no mass value is needed.

use std::fmt::{self, Write as _};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::algebra::{bracket_formula, bracket_with_polynomial, k_sum, MomentIndex, Monomial};
use crate::dynamics::{eom_table, hamiltonian, Coupling, EomExpr, EomTable, EomTerm, Order, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Consistent,
    /// Differs from the table exactly as recorded in [`known_discrepancies`].
    Known,
    Unexpected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Consistent => "consistent",
            Status::Known => "KNOWN",
            Status::Unexpected => "UNEXPECTED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationCheck {
    pub variable: Variable,
    pub table: EomExpr,
    pub derived: EomExpr,
    /// Terms in the table that the bracket derivation does not produce.
    pub missing: Vec<EomTerm>,
    /// Terms the derivation produces that the table lacks.
    pub extra: Vec<EomTerm>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub order: Order,
    pub equations: Vec<EquationCheck>,
}

/// A recorded difference between derived and tabulated equations.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownDiscrepancy {
    pub order: Order,
    pub variable: Variable,
    pub missing: Vec<EomTerm>,
    pub extra: Vec<EomTerm>,
}

impl KnownDiscrepancy {
    fn difference(&self) -> EomExpr {
        let mut diff = EomExpr::from_terms(self.missing.iter().cloned());
        for t in &self.extra {
            diff.add_term(EomTerm {
                coeff: -t.coeff,
                ..t.clone()
            });
        }
        diff
    }
}

fn term(num: i64, den: i64, coupling: Coupling, moment: (u32, u32)) -> EomTerm {
    EomTerm {
        coeff: Rational64::new(num, den),
        coupling,
        monomial: Monomial::moment(MomentIndex::new(moment.0, moment.1)),
    }
}

fn var(a: u32, b: u32) -> Variable {
    Variable::Moment(MomentIndex::new(a, b))
}

/// Every term that pairs a moment with a first moment through the bracket's
/// product part, or that needs `n = 1` when the summation range is empty,
/// is lost by the general formula. These are the resulting differences.
pub fn known_discrepancies() -> Vec<KnownDiscrepancy> {
    let inv_m = Coupling::inv_mass(1);
    let v = Coupling::potential;
    let entry = |order, variable, missing| KnownDiscrepancy {
        order,
        variable,
        missing,
        extra: Vec::new(),
    };
    vec![
        entry(
            Order::Second,
            var(1, 1),
            vec![term(-1, 1, inv_m, (0, 2)), term(1, 1, v(2), (2, 0))],
        ),
        entry(
            Order::Third,
            var(1, 1),
            vec![
                term(-1, 1, inv_m, (0, 2)),
                term(1, 1, v(2), (2, 0)),
                term(1, 2, v(3), (3, 0)),
            ],
        ),
        entry(Order::Third, var(2, 1), vec![term(1, 1, v(2), (3, 0))]),
        entry(Order::Third, var(1, 2), vec![term(-1, 1, inv_m, (0, 3))]),
    ]
}

/// Right-hand side for `var` obtained from the brackets with `H_Q`.
pub fn derive_equation(var: Variable, order: Order) -> EomExpr {
    let h = hamiltonian(order);
    let mut out = EomExpr::zero();
    for (coupling, poly) in h.parts() {
        match var {
            Variable::Position => {
                if coupling.momentum_power > 0 {
                    let c = Coupling {
                        momentum_power: coupling.momentum_power - 1,
                        ..*coupling
                    };
                    out.add_polynomial(c, &poly.scale(Rational64::from_integer(coupling.momentum_power as i64)));
                }
            }
            Variable::Momentum => {
                if let Some(k) = coupling.potential_derivative {
                    let c = Coupling {
                        potential_derivative: Some(k + 1),
                        ..*coupling
                    };
                    out.add_polynomial(c, &-poly);
                }
            }
            Variable::Moment(g) => {
                out.add_polynomial(*coupling, &bracket_with_polynomial(g, poly));
            }
        }
    }
    let cut = order.as_u32();
    out.without_moments_above(cut).truncate(cut)
}

/// Compares `table` against equations derived at the table's order.
pub fn verify_table(table: &EomTable) -> ConsistencyReport {
    let known = known_discrepancies();
    let equations = table
        .equations
        .iter()
        .map(|(variable, expr)| {
            let derived = derive_equation(*variable, table.order);
            let diff = expr.sub(&derived);
            // a difference term the table carries counts as missing from the derivation
            let table_terms = expr.terms();
            let (missing, extra): (Vec<_>, Vec<_>) = diff.terms().into_iter().partition(|t| {
                table_terms
                    .iter()
                    .any(|e| e.coupling == t.coupling && e.monomial == t.monomial)
            });
            let expected = known
                .iter()
                .find(|k| k.order == table.order && k.variable == *variable)
                .map(|k| k.difference());
            let status = match (diff.is_zero(), expected) {
                (true, None) => Status::Consistent,
                (false, Some(k)) if k == diff => Status::Known,
                _ => Status::Unexpected,
            };
            EquationCheck {
                variable: *variable,
                table: expr.clone(),
                derived,
                missing,
                extra: extra.into_iter().map(|t| EomTerm { coeff: -t.coeff, ..t }).collect(),
                status,
            }
        })
        .collect();
    ConsistencyReport {
        order: table.order,
        equations,
    }
}

/// Checks the built-in table of `order` (2 or 3).
pub fn verify_eom_consistency(order: Order) -> ConsistencyReport {
    verify_table(&eom_table(order))
}

impl ConsistencyReport {
    pub fn equation(&self, var: Variable) -> Option<&EquationCheck> {
        self.equations.iter().find(|e| e.variable == var)
    }

    /// True when every equation is consistent or differs only as recorded.
    pub fn matches_golden(&self) -> bool {
        self.equations.iter().all(|e| e.status != Status::Unexpected)
    }

    pub fn unexpected(&self) -> impl Iterator<Item = &EquationCheck> {
        self.equations.iter().filter(|e| e.status == Status::Unexpected)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "order {}", self.order.as_u32());
        let width = self
            .equations
            .iter()
            .map(|e| e.table.to_string().len())
            .max()
            .unwrap_or(0)
            .max(5);
        let _ = writeln!(out, "{:<6} {:<10} {:<width$}  derived", "eq", "status", "table");
        for e in &self.equations {
            let _ = writeln!(
                out,
                "{:<6} {:<10} {:<width$}  {}",
                format!("d{}", e.variable),
                e.status.as_str(),
                e.table.to_string(),
                e.derived
            );
            for t in &e.missing {
                let _ = writeln!(out, "{:18}missing: {t}", "");
            }
            for t in &e.extra {
                let _ = writeln!(out, "{:18}extra:   {t}", "");
            }
        }
        out
    }

    fn to_file(&self) -> ReportFile {
        ReportFile {
            order: self.order.as_u32(),
            equation: self
                .equations
                .iter()
                .map(|e| EquationFile {
                    variable: e.variable.to_string(),
                    status: e.status,
                    table: e.table.to_string(),
                    derived: e.derived.to_string(),
                    missing: e.missing.iter().map(|t| t.to_string()).collect(),
                    extra: e.extra.iter().map(|t| t.to_string()).collect(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    order: u32,
    equation: Vec<EquationFile>,
}

#[derive(Serialize, Deserialize)]
struct EquationFile {
    variable: String,
    status: Status,
    table: String,
    derived: String,
    missing: Vec<String>,
    extra: Vec<String>,
}

/// Outcome of one exhaustive identity check on the bracket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Antisymmetry and grading over all moment pairs up to order 4, and the
/// `n = 1` coefficient identity over `0..=6`.
pub fn bracket_properties() -> Vec<PropertyCheck> {
    let moments = MomentIndex::all_up_to(4);
    let mut antisym = PropertyCheck {
        name: "antisymmetry".into(),
        cases: 0,
        failures: 0,
    };
    let mut grading = PropertyCheck {
        name: "grading".into(),
        cases: 0,
        failures: 0,
    };
    for &x in &moments {
        for &y in &moments {
            let xy = bracket_formula(x, y);
            antisym.cases += 1;
            if xy != -&bracket_formula(y, x) {
                antisym.failures += 1;
            }
            grading.cases += 1;
            let expected = x.order() + y.order() - 2;
            if xy.terms().any(|(m, _)| m.degree() != expected) {
                grading.failures += 1;
            }
        }
    }
    let mut k1 = PropertyCheck {
        name: "k1_identity".into(),
        cases: 0,
        failures: 0,
    };
    for a in 0..=6u32 {
        for b in 0..=6u32 {
            for c in 0..=6u32 {
                for d in 0..=6u32 {
                    k1.cases += 1;
                    if k_sum(1, a, b, c, d) != (b * c) as i64 - (a * d) as i64 {
                        k1.failures += 1;
                    }
                }
            }
        }
    }
    vec![antisym, grading, k1]
}

/// Both orders' reports plus the bracket property checks.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraReport {
    pub reports: Vec<ConsistencyReport>,
    pub properties: Vec<PropertyCheck>,
}

impl AlgebraReport {
    pub fn from_tables(tables: &[EomTable]) -> Self {
        Self {
            reports: tables.iter().map(verify_table).collect(),
            properties: bracket_properties(),
        }
    }

    pub fn builtin() -> Self {
        Self::from_tables(&[eom_table(Order::Second), eom_table(Order::Third)])
    }

    pub fn matches_golden(&self) -> bool {
        self.reports.iter().all(ConsistencyReport::matches_golden) && self.properties.iter().all(PropertyCheck::passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&r.to_text());
            out.push('\n');
        }
        for p in &self.properties {
            let _ = writeln!(
                out,
                "{:<14} {} ({} cases, {} failures)",
                p.name,
                if p.passed() { "ok" } else { "FAILED" },
                p.cases,
                p.failures
            );
        }
        out
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct File {
            report: Vec<ReportFile>,
            property: Vec<PropertyCheck>,
        }
        toml::to_string(&File {
            report: self.reports.iter().map(ConsistencyReport::to_file).collect(),
            property: self.properties.clone(),
        })
        .expect("report serializes")
    }
}
