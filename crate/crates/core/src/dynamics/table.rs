//! Symbolic form of the equations of motion.
//!
//! Each right-hand side is a sum of terms
//! `c * m^-i * V^(k)(q) * p^j * hbar^l * prod G^{a,b}`. The tables here are
//! the authoritative listing the numeric right-hand side implements; the
//! algebra checker derives the same equations from the moment brackets and
//! compares the two.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::{ModelConfig, MomentState, Order};
use crate::algebra::{MomentIndex, MomentPolynomial, Monomial};

/// Dynamical variable whose time derivative an equation describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Position,
    Momentum,
    Moment(MomentIndex),
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Position => write!(f, "q"),
            Variable::Momentum => write!(f, "p"),
            Variable::Moment(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Variable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "q" => Ok(Variable::Position),
            "p" => Ok(Variable::Momentum),
            other => other.parse().map(Variable::Moment),
        }
    }
}

/// Non-moment factors of a term: powers of `1/m` and `p`, and at most one
/// potential derivative `V^(k)(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coupling {
    pub inv_mass: u32,
    pub potential_derivative: Option<u32>,
    pub momentum_power: u32,
}

impl Coupling {
    pub const ONE: Coupling = Coupling {
        inv_mass: 0,
        potential_derivative: None,
        momentum_power: 0,
    };

    pub fn inv_mass(k: u32) -> Self {
        Self {
            inv_mass: k,
            ..Self::ONE
        }
    }

    pub fn potential(k: u32) -> Self {
        Self {
            potential_derivative: Some(k),
            ..Self::ONE
        }
    }

    fn evaluate(&self, q: f64, p: f64, model: &ModelConfig) -> f64 {
        let mut v = model.mass().powi(-(self.inv_mass as i32)) * p.powi(self.momentum_power as i32);
        if let Some(k) = self.potential_derivative {
            v *= model
                .potential()
                .derivative(q, k as usize)
                .expect("potential derivative order within range");
        }
        v
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(k) = self.potential_derivative {
            parts.push(if k <= 4 {
                format!("V{}", "'".repeat(k as usize))
            } else {
                format!("V^({k})")
            });
        }
        match self.momentum_power {
            0 => {}
            1 => parts.push("p".into()),
            j => parts.push(format!("p^{j}")),
        }
        let mut s = parts.join(" ");
        match self.inv_mass {
            0 => {}
            1 => s.push_str("/m"),
            i => s.push_str(&format!("/m^{i}")),
        }
        write!(f, "{s}")
    }
}

/// One term `c * coupling * monomial`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EomTerm {
    pub coeff: Rational64,
    pub coupling: Coupling,
    pub monomial: Monomial,
}

impl fmt::Display for EomTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut body = Vec::new();
        if !self.monomial.factors.is_empty() || self.monomial.hbar_power > 0 {
            body.push(self.monomial.to_string());
        }
        let coupling = self.coupling.to_string();
        let coupling_is_bare_divisor = coupling.starts_with('/');
        if !coupling.is_empty() && !coupling_is_bare_divisor {
            body.insert(0, coupling.clone());
        }
        let mut text = body.join(" ");
        let abs = self.coeff.abs();
        let sign = if self.coeff.is_negative() { "-" } else { "" };
        let coeff_text = if abs.is_one() && !text.is_empty() {
            String::new()
        } else {
            abs.to_string()
        };
        if coupling_is_bare_divisor {
            text.push_str(&coupling);
        }
        match (coeff_text.is_empty(), text.is_empty()) {
            (true, _) => write!(f, "{sign}{text}"),
            (false, true) => write!(f, "{sign}{coeff_text}"),
            (false, false) => write!(f, "{sign}{coeff_text} {text}"),
        }
    }
}

/// Right-hand side of one equation of motion.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EomExpr {
    parts: BTreeMap<Coupling, MomentPolynomial>,
}

impl EomExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = EomTerm>>(terms: I) -> Self {
        let mut expr = Self::zero();
        for t in terms {
            expr.add_term(t);
        }
        expr
    }

    pub fn add_term(&mut self, term: EomTerm) {
        self.add_polynomial(term.coupling, &MomentPolynomial::term(term.coeff, term.monomial));
    }

    pub fn add_polynomial(&mut self, coupling: Coupling, poly: &MomentPolynomial) {
        let entry = self.parts.entry(coupling).or_default();
        *entry = &*entry + poly;
        if entry.is_zero() {
            self.parts.remove(&coupling);
        }
    }

    pub fn parts(&self) -> impl Iterator<Item = (&Coupling, &MomentPolynomial)> {
        self.parts.iter()
    }

    pub fn terms(&self) -> Vec<EomTerm> {
        self.parts
            .iter()
            .flat_map(|(coupling, poly)| {
                poly.terms().map(move |(m, c)| EomTerm {
                    coeff: *c,
                    coupling: *coupling,
                    monomial: m.clone(),
                })
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn sub(&self, other: &EomExpr) -> EomExpr {
        let mut out = self.clone();
        for (c, p) in &other.parts {
            out.add_polynomial(*c, &-p);
        }
        out
    }

    /// Keeps only terms of semiclassical degree at most `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> EomExpr {
        let mut out = EomExpr::zero();
        for (c, p) in &self.parts {
            out.add_polynomial(*c, &p.truncate(max_degree));
        }
        out
    }

    /// Drops every term containing a moment of order above `order`.
    pub fn without_moments_above(&self, order: u32) -> EomExpr {
        EomExpr::from_terms(
            self.terms()
                .into_iter()
                .filter(|t| t.monomial.factors.iter().all(|g| g.order() <= order)),
        )
    }

    pub fn evaluate(&self, state: &MomentState, model: &ModelConfig) -> f64 {
        self.parts
            .iter()
            .map(|(c, p)| c.evaluate(state.q, state.p, model) * p.evaluate(|g| state.moment(g), model.hbar()))
            .sum()
    }
}

impl fmt::Display for EomExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in terms.iter().enumerate() {
            let s = t.to_string();
            if i == 0 {
                write!(f, "{s}")?;
            } else if let Some(rest) = s.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {s}")?;
            }
        }
        Ok(())
    }
}

/// Ordered list of equations `d/dt variable = expr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EomTable {
    pub order: Order,
    pub equations: Vec<(Variable, EomExpr)>,
}

impl EomTable {
    pub fn equation(&self, var: Variable) -> Option<&EomExpr> {
        self.equations.iter().find(|(v, _)| *v == var).map(|(_, e)| e)
    }

    /// Closes the table at `order`: equations for higher moments are removed
    /// and terms containing them are set to zero.
    pub fn close_at(&self, order: Order) -> EomTable {
        let cut = order.as_u32();
        EomTable {
            order,
            equations: self
                .equations
                .iter()
                .filter(|(v, _)| match v {
                    Variable::Moment(m) => m.order() <= cut,
                    _ => true,
                })
                .map(|(v, e)| (*v, e.without_moments_above(cut)))
                .collect(),
        }
    }

    /// Evaluates every equation in packed-state order.
    pub fn evaluate(&self, state: &MomentState, model: &ModelConfig) -> Vec<f64> {
        let mut out = Vec::with_capacity(state.order().dim());
        out.push(self.rate(Variable::Position, state, model));
        out.push(self.rate(Variable::Momentum, state, model));
        for m in state.order().moments() {
            out.push(self.rate(Variable::Moment(*m), state, model));
        }
        out
    }

    fn rate(&self, var: Variable, state: &MomentState, model: &ModelConfig) -> f64 {
        self.equation(var).map_or(0.0, |e| e.evaluate(state, model))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&TableFile::from(self)).expect("table serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let file: TableFile = toml::from_str(text).map_err(|e| e.to_string())?;
        file.try_into()
    }
}

impl fmt::Display for EomTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, e) in &self.equations {
            writeln!(f, "d{v}/dt = {e}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    order: u32,
    equation: Vec<EquationFile>,
}

#[derive(Serialize, Deserialize)]
struct EquationFile {
    variable: String,
    #[serde(default)]
    term: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    coefficient: String,
    #[serde(default)]
    inv_mass: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    potential_derivative: Option<u32>,
    #[serde(default)]
    momentum_power: u32,
    #[serde(default)]
    hbar_power: u32,
    #[serde(default)]
    moments: Vec<MomentIndex>,
}

impl From<&EomTable> for TableFile {
    fn from(table: &EomTable) -> Self {
        TableFile {
            order: table.order.as_u32(),
            equation: table
                .equations
                .iter()
                .map(|(v, e)| EquationFile {
                    variable: v.to_string(),
                    term: e
                        .terms()
                        .into_iter()
                        .map(|t| TermFile {
                            coefficient: t.coeff.to_string(),
                            inv_mass: t.coupling.inv_mass,
                            potential_derivative: t.coupling.potential_derivative,
                            momentum_power: t.coupling.momentum_power,
                            hbar_power: t.monomial.hbar_power,
                            moments: t.monomial.factors.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<TableFile> for EomTable {
    type Error = String;
    fn try_from(file: TableFile) -> Result<Self, String> {
        let order = Order::try_from(file.order).map_err(|e| e.to_string())?;
        let mut equations = Vec::new();
        for eq in file.equation {
            let var: Variable = eq.variable.parse()?;
            let mut expr = EomExpr::zero();
            for t in eq.term {
                let coeff: Rational64 = t
                    .coefficient
                    .parse()
                    .map_err(|_| format!("bad coefficient `{}`", t.coefficient))?;
                expr.add_term(EomTerm {
                    coeff,
                    coupling: Coupling {
                        inv_mass: t.inv_mass,
                        potential_derivative: t.potential_derivative,
                        momentum_power: t.momentum_power,
                    },
                    monomial: Monomial::new(t.hbar_power, t.moments),
                });
            }
            equations.push((var, expr));
        }
        Ok(EomTable { order, equations })
    }
}

fn term(num: i64, den: i64, coupling: Coupling, moments: &[(u32, u32)]) -> EomTerm {
    EomTerm {
        coeff: Rational64::new(num, den),
        coupling,
        monomial: Monomial::new(0, moments.iter().map(|&(a, b)| MomentIndex::new(a, b)).collect()),
    }
}

fn eq(var: Variable, terms: Vec<EomTerm>) -> (Variable, EomExpr) {
    (var, EomExpr::from_terms(terms))
}

fn g(a: u32, b: u32) -> Variable {
    Variable::Moment(MomentIndex::new(a, b))
}

/// The equations the numeric right-hand side implements at `order`.
pub fn eom_table(order: Order) -> EomTable {
    let inv_m = Coupling::inv_mass(1);
    let v = Coupling::potential;
    let p_over_m = Coupling {
        inv_mass: 1,
        momentum_power: 1,
        ..Coupling::ONE
    };
    let equations = match order {
        Order::Classical => vec![
            eq(Variable::Position, vec![term(1, 1, p_over_m, &[])]),
            eq(Variable::Momentum, vec![term(-1, 1, v(1), &[])]),
        ],
        Order::Second => vec![
            eq(Variable::Position, vec![term(1, 1, p_over_m, &[])]),
            eq(
                Variable::Momentum,
                vec![term(-1, 1, v(1), &[]), term(-1, 2, v(3), &[(2, 0)])],
            ),
            eq(g(2, 0), vec![term(-2, 1, inv_m, &[(1, 1)])]),
            eq(
                g(1, 1),
                vec![term(-1, 1, inv_m, &[(0, 2)]), term(1, 1, v(2), &[(2, 0)])],
            ),
            eq(g(0, 2), vec![term(2, 1, v(2), &[(1, 1)])]),
        ],
        Order::Third => vec![
            eq(Variable::Position, vec![term(1, 1, p_over_m, &[])]),
            eq(
                Variable::Momentum,
                vec![
                    term(-1, 1, v(1), &[]),
                    term(-1, 2, v(3), &[(2, 0)]),
                    term(-1, 6, v(4), &[(3, 0)]),
                ],
            ),
            eq(g(2, 0), vec![term(-2, 1, inv_m, &[(1, 1)])]),
            eq(
                g(1, 1),
                vec![
                    term(-1, 1, inv_m, &[(0, 2)]),
                    term(1, 1, v(2), &[(2, 0)]),
                    term(1, 2, v(3), &[(3, 0)]),
                ],
            ),
            eq(g(0, 2), vec![term(2, 1, v(2), &[(1, 1)]), term(1, 1, v(3), &[(2, 1)])]),
            eq(g(3, 0), vec![term(-3, 1, inv_m, &[(2, 1)])]),
            eq(
                g(2, 1),
                vec![term(-2, 1, inv_m, &[(1, 2)]), term(1, 1, v(2), &[(3, 0)])],
            ),
            eq(
                g(1, 2),
                vec![term(-1, 1, inv_m, &[(0, 3)]), term(2, 1, v(2), &[(2, 1)])],
            ),
            eq(g(0, 3), vec![term(3, 1, v(2), &[(1, 2)])]),
        ],
    };
    EomTable { order, equations }
}

/// Symbolic effective Hamiltonian `H_Q` at `order`.
pub fn hamiltonian(order: Order) -> EomExpr {
    let mut terms = vec![
        term(
            1,
            2,
            Coupling {
                inv_mass: 1,
                momentum_power: 2,
                ..Coupling::ONE
            },
            &[],
        ),
        term(1, 1, Coupling::potential(0), &[]),
    ];
    if order >= Order::Second {
        terms.push(term(1, 2, Coupling::inv_mass(1), &[(0, 2)]));
        terms.push(term(1, 2, Coupling::potential(2), &[(2, 0)]));
    }
    if order == Order::Third {
        terms.push(term(1, 6, Coupling::potential(3), &[(3, 0)]));
    }
    EomExpr::from_terms(terms)
}
