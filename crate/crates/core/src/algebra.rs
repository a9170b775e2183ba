//! Formal Poisson algebra of the central moments `G^{a,b}`.
//!
//! Polynomials carry exact rational coefficients. The general bracket is
//! implemented as printed for the moment hierarchy, including its
//! summation range, so that it can be compared against the hand-derived
//! equations of motion in [`crate::dynamics`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index `(a, b)` of the Weyl-ordered central moment `G^{a,b}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MomentIndex {
    pub a: u32,
    pub b: u32,
}

impl MomentIndex {
    pub const fn new(a: u32, b: u32) -> Self {
        Self { a, b }
    }

    pub fn order(self) -> u32 {
        self.a + self.b
    }

    /// First central moments vanish identically.
    pub fn vanishes(self) -> bool {
        self.order() == 1
    }

    pub fn is_unit(self) -> bool {
        self.order() == 0
    }

    /// All genuine moments `G^{a,b}` with `2 <= a + b <= max_order`.
    pub fn all_up_to(max_order: u32) -> Vec<MomentIndex> {
        let mut out = Vec::new();
        for order in 2..=max_order {
            for b in 0..=order {
                out.push(MomentIndex::new(order - b, b));
            }
        }
        out
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.a < 10 && self.b < 10 {
            write!(f, "G{}{}", self.a, self.b)
        } else {
            write!(f, "G{},{}", self.a, self.b)
        }
    }
}

impl FromStr for MomentIndex {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let body = s
            .strip_prefix('G')
            .ok_or_else(|| format!("moment `{s}` must start with `G`"))?;
        let parse = |x: &str| x.parse::<u32>().map_err(|_| format!("bad moment index `{s}`"));
        if let Some((a, b)) = body.split_once(',') {
            return Ok(MomentIndex::new(parse(a)?, parse(b)?));
        }
        if body.len() == 2 && body.is_ascii() {
            return Ok(MomentIndex::new(parse(&body[..1])?, parse(&body[1..])?));
        }
        Err(format!("bad moment index `{s}`"))
    }
}

impl TryFrom<String> for MomentIndex {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<MomentIndex> for String {
    fn from(m: MomentIndex) -> String {
        m.to_string()
    }
}

/// Product `hbar^k * G^{a1,b1} * G^{a2,b2} * ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub hbar_power: u32,
    pub factors: Vec<MomentIndex>,
}

impl Monomial {
    pub fn one() -> Self {
        Self {
            hbar_power: 0,
            factors: Vec::new(),
        }
    }

    pub fn new(hbar_power: u32, factors: Vec<MomentIndex>) -> Self {
        Self { hbar_power, factors }
    }

    pub fn moment(index: MomentIndex) -> Self {
        Self::new(0, vec![index])
    }

    /// Canonical form: unit factors dropped, factors sorted. `None` if a
    /// first-moment factor makes the product vanish.
    pub fn canonical(&self) -> Option<Self> {
        if self.factors.iter().any(|f| f.vanishes()) {
            return None;
        }
        let mut factors: Vec<_> = self.factors.iter().copied().filter(|f| !f.is_unit()).collect();
        factors.sort_unstable();
        Some(Self::new(self.hbar_power, factors))
    }

    /// Semiclassical degree: moment orders plus two per power of hbar.
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.order()).sum::<u32>() + 2 * self.hbar_power
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Monomial::new(self.hbar_power + other.hbar_power, factors)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.hbar_power {
            0 => {}
            1 => parts.push("hbar".to_string()),
            k => parts.push(format!("hbar^{k}")),
        }
        parts.extend(self.factors.iter().map(|g| g.to_string()));
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Finite sum of rational multiples of [`Monomial`]s.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MomentPolynomial {
    terms: BTreeMap<Monomial, Rational64>,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational64) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn term(coeff: Rational64, monomial: Monomial) -> Self {
        let mut poly = Self::zero();
        poly.add_term(coeff, monomial);
        poly
    }

    pub fn moment(index: MomentIndex) -> Self {
        Self::term(Rational64::one(), Monomial::moment(index))
    }

    /// Collects terms without canonicalizing them; see [`Self::normalize`].
    pub fn from_raw_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Rational64, Monomial)>,
    {
        let mut map: BTreeMap<Monomial, Rational64> = BTreeMap::new();
        for (c, m) in terms {
            *map.entry(m).or_insert_with(Rational64::zero) += c;
        }
        Self { terms: map }
    }

    /// Canonical form: sorted factors, merged duplicates, no zero
    /// coefficients and no term containing a first moment.
    pub fn normalize(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(*c, m.clone());
        }
        out
    }

    pub fn add_term(&mut self, coeff: Rational64, monomial: Monomial) {
        let Some(monomial) = monomial.canonical() else {
            return;
        };
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(monomial.clone()).or_insert_with(Rational64::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&monomial);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> Rational64 {
        monomial
            .canonical()
            .and_then(|m| self.terms.get(&m).copied())
            .unwrap_or_else(Rational64::zero)
    }

    pub fn scale(&self, factor: Rational64) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(*c * factor, m.clone());
        }
        out
    }

    /// Drops every term whose semiclassical degree exceeds `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= max_degree)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    /// Numeric value given moment values and hbar.
    pub fn evaluate(&self, moment: impl Fn(MomentIndex) -> f64, hbar: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = rational_to_f64(*c) * hbar.powi(m.hbar_power as i32);
                for g in &m.factors {
                    v *= moment(*g);
                }
                v
            })
            .sum()
    }
}

pub(crate) fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl std::ops::Add for &MomentPolynomial {
    type Output = MomentPolynomial;
    fn add(self, rhs: &MomentPolynomial) -> MomentPolynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*c, m.clone());
        }
        out
    }
}

impl std::ops::Sub for &MomentPolynomial {
    type Output = MomentPolynomial;
    fn sub(self, rhs: &MomentPolynomial) -> MomentPolynomial {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &MomentPolynomial {
    type Output = MomentPolynomial;
    fn neg(self) -> MomentPolynomial {
        self.scale(-Rational64::one())
    }
}

impl std::ops::Mul for &MomentPolynomial {
    type Output = MomentPolynomial;
    fn mul(self, rhs: &MomentPolynomial) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(*ca * *cb, ma.times(mb));
            }
        }
        out
    }
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let abs = c.abs();
            if m.factors.is_empty() && m.hbar_power == 0 {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs} {m}")?;
            }
        }
        Ok(())
    }
}

fn binomial(n: u32, k: u32) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// Raw combinatorial sum
/// `sum_s (-1)^s s! (n-s)! C(a,s) C(b,n-s) C(c,n-s) C(d,s)`
/// without any range check.
pub fn k_sum(n: u32, a: u32, b: u32, c: u32, d: u32) -> i64 {
    (0..=n)
        .map(|s| {
            let sign = if s % 2 == 0 { 1 } else { -1 };
            sign * factorial(s)
                * factorial(n - s)
                * binomial(a, s)
                * binomial(b, n - s)
                * binomial(c, n - s)
                * binomial(d, s)
        })
        .sum()
}

/// Upper bound (exclusive) of the odd summation index in the bracket.
fn k_range_limit(a: u32, b: u32, c: u32, d: u32) -> u32 {
    (a + c).min(b + d).min(a + b).min(c + d)
}

/// K-coefficient of the moment bracket. `n` must be odd with
/// `1 <= n < min(a+c, b+d, a+b, c+d)`.
pub fn k_coefficient(n: u32, a: u32, b: u32, c: u32, d: u32) -> Result<i64> {
    if n.is_multiple_of(2) || n >= k_range_limit(a, b, c, d) {
        return Err(Error::RangeViolation { n, a, b, c, d });
    }
    Ok(k_sum(n, a, b, c, d))
}

/// `{G^{a,b}, G^{c,d}}` from the general bracket formula, taken literally.
pub fn bracket_formula(lhs: MomentIndex, rhs: MomentIndex) -> MomentPolynomial {
    let MomentIndex { a, b } = lhs;
    let MomentIndex { a: c, b: d } = rhs;
    let mut out = MomentPolynomial::zero();
    if lhs.order() < 2 || rhs.order() < 2 {
        return out;
    }
    if a >= 1 && d >= 1 {
        out.add_term(
            Rational64::from_integer((a * d) as i64),
            Monomial::new(0, vec![MomentIndex::new(a - 1, b), MomentIndex::new(c, d - 1)]),
        );
    }
    if b >= 1 && c >= 1 {
        out.add_term(
            Rational64::from_integer(-((b * c) as i64)),
            Monomial::new(0, vec![MomentIndex::new(a, b - 1), MomentIndex::new(c - 1, d)]),
        );
    }
    // (i hbar / 2)^(n-1) with n odd is (-1)^((n-1)/2) (hbar/2)^(n-1).
    let limit = k_range_limit(a, b, c, d);
    for n in (1..limit).step_by(2) {
        let k = k_sum(n, a, b, c, d);
        if k == 0 {
            continue;
        }
        let sign = if ((n - 1) / 2) % 2 == 0 { 1 } else { -1 };
        let coeff = Rational64::new(sign * k, 1i64 << (n - 1));
        out.add_term(
            coeff,
            Monomial::new(n - 1, vec![MomentIndex::new(a + c - n, b + d - n)]),
        );
    }
    out
}

/// `{G, P}` for a polynomial `P`, expanded with the Leibniz rule.
pub fn bracket_with_polynomial(lhs: MomentIndex, poly: &MomentPolynomial) -> MomentPolynomial {
    let mut out = MomentPolynomial::zero();
    for (m, c) in poly.terms() {
        for (i, factor) in m.factors.iter().enumerate() {
            let mut rest = m.factors.clone();
            rest.remove(i);
            let cofactor = MomentPolynomial::term(*c, Monomial::new(m.hbar_power, rest));
            out = &out + &(&bracket_formula(lhs, *factor) * &cofactor);
        }
    }
    out
}
