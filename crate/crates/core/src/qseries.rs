//! Truncated multivariate power series over the rationals.
//!
//! A [`QSeries`] is an element of `Q[q_e : e in vars] / (total degree > N)`:
//! every operation is exact in that quotient ring. [`BElement`] adjoins a
//! single monomial denominator, which models the localisation
//! `A[prod q_e^-1]` at finite truncation.
//!
//! Invariants kept by every constructor:
//! - no stored monomial has total degree above the truncation order
//! - zero coefficients are never stored
//!
//! The canonical text form lists monomials by (total degree, exponent vector
//! in ascending lexicographic order) with coefficients written as `p/q`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Deformation variables are named by edge ids.
pub type VarId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("variable sets differ: {left:?} vs {right:?}")]
    VariableMismatch { left: Vec<VarId>, right: Vec<VarId> },
    #[error("truncation orders differ: {0} vs {1} (promote explicitly)")]
    OrderMismatch(u32, u32),
    #[error("cannot raise truncation order from {from} to {to} without the explicit flag")]
    OrderRaise { from: u32, to: u32 },
    #[error("unknown variable q{0}")]
    UnknownVariable(VarId),
    #[error("element is not invertible: {0}")]
    NotInvertible(NonUnit),
    #[error("pole at q{var} = 0 (denominator exponent {exponent})")]
    Pole { var: VarId, exponent: u32 },
    #[error("initial value is not a root of the quadratic modulo (q)")]
    NotARoot,
    #[error("root is not simple modulo (q); the element is degenerate")]
    RepeatedRoot,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

/// Why an element failed to be invertible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonUnit {
    Zero,
    /// Neither a unit nor a monomial times a unit, e.g. `q1 + q2`.
    NotMonomialTimesUnit,
}

impl fmt::Display for NonUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonUnit::Zero => write!(f, "zero"),
            NonUnit::NotMonomialTimesUnit => write!(f, "not a monomial times a unit"),
        }
    }
}

pub type Result<T> = std::result::Result<T, SeriesError>;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p`, `p/q` or a finite decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || SeriesError::Parse(s.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| err())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(n))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exponent vector aligned with the owning series' variable list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Truncated power series in the variables `vars` modulo total degree `> order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    vars: Arc<[VarId]>,
    order: u32,
    terms: BTreeMap<Monomial, Rational>,
}

impl QSeries {
    /// The zero series. Variables are sorted and deduplicated.
    pub fn zero(vars: &[VarId], order: u32) -> Self {
        let mut v = vars.to_vec();
        v.sort_unstable();
        v.dedup();
        QSeries {
            vars: v.into(),
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[VarId], order: u32, c: Rational) -> Self {
        let mut s = Self::zero(vars, order);
        let one = Monomial::one(s.vars.len());
        s.insert(one, c);
        s
    }

    pub fn one(vars: &[VarId], order: u32) -> Self {
        Self::constant(vars, order, Rational::one())
    }

    /// The series `q_var`.
    pub fn var(vars: &[VarId], order: u32, var: VarId) -> Result<Self> {
        let mut s = Self::zero(vars, order);
        let idx = s.index_of(var)?;
        let mut e = vec![0; s.vars.len()];
        e[idx] = 1;
        s.insert(Monomial(e), Rational::one());
        Ok(s)
    }

    /// Builds a series from `(exponents, coefficient)` pairs; terms above the
    /// truncation order are dropped.
    pub fn from_terms<I>(vars: &[VarId], order: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut s = Self::zero(vars, order);
        for (e, c) in terms {
            assert_eq!(e.len(), s.vars.len(), "exponent vector length");
            s.add_term(Monomial(e), c);
        }
        s
    }

    fn zero_like(&self) -> Self {
        QSeries {
            vars: self.vars.clone(),
            order: self.order,
            terms: BTreeMap::new(),
        }
    }

    fn index_of(&self, var: VarId) -> Result<usize> {
        self.vars
            .binary_search(&var)
            .map_err(|_| SeriesError::UnknownVariable(var))
    }

    fn insert(&mut self, m: Monomial, c: Rational) {
        if m.degree() <= self.order && !c.is_zero() {
            self.terms.insert(m, c);
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if m.degree() > self.order || c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.constant_term().is_one()
    }

    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one(self.vars.len()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[u32]) -> Rational {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Lowest total degree present, `None` for zero.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().next().map(Monomial::degree)
    }

    fn check_compatible(&self, other: &QSeries) -> Result<()> {
        if self.vars != other.vars {
            return Err(SeriesError::VariableMismatch {
                left: self.vars.to_vec(),
                right: other.vars.to_vec(),
            });
        }
        if self.order != other.order {
            return Err(SeriesError::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    /// Re-expresses the series over a superset of variables and/or a new
    /// truncation order. Lowering the order truncates; raising it claims
    /// precision that the stored terms do not carry and therefore needs
    /// `allow_raise`.
    pub fn promote(&self, vars: &[VarId], order: u32, allow_raise: bool) -> Result<Self> {
        if order > self.order && !allow_raise {
            return Err(SeriesError::OrderRaise {
                from: self.order,
                to: order,
            });
        }
        let mut out = QSeries::zero(vars, order);
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| out.index_of(*v))
            .collect::<Result<_>>()?;
        for (m, c) in &self.terms {
            let mut e = vec![0; out.vars.len()];
            for (i, &x) in m.0.iter().enumerate() {
                e[map[i]] = x;
            }
            out.insert(Monomial(e), c.clone());
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &QSeries) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &QSeries) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &QSeries) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.zero_like();
        let n = self.order;
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            for (mb, cb) in &other.terms {
                // terms are sorted by degree, so the rest overflow too
                if da + mb.degree() > n {
                    break;
                }
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.zero_like();
        if c.is_zero() {
            return out;
        }
        for (m, x) in &self.terms {
            out.terms.insert(m.clone(), x * c);
        }
        out
    }

    /// Multiplies by the monomial `q^exps`, dropping terms pushed past the order.
    pub fn shift(&self, exps: &[u32]) -> Self {
        let mono = Monomial(exps.to_vec());
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            out.insert(m.mul(&mono), c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = QSeries::one(&self.vars, self.order);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Inverse of a series with nonzero constant term.
    pub fn invert_unit(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(SeriesError::NotInvertible(if self.is_zero() {
                NonUnit::Zero
            } else {
                NonUnit::NotMonomialTimesUnit
            }));
        }
        let inv_c0 = c0.recip();
        // self = c0 (1 + y), 1/self = c0^-1 sum (-y)^k; y^k vanishes past the order
        let y = self.scale(&inv_c0) - QSeries::one(&self.vars, self.order);
        let minus_y = -&y;
        let mut acc = QSeries::one(&self.vars, self.order);
        let mut power = QSeries::one(&self.vars, self.order);
        for _ in 0..self.order {
            power = &power * &minus_y;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(&inv_c0))
    }

    /// Inverse in the localised ring: units invert to series, a monomial times
    /// a unit inverts to a [`BElement`] with that monomial as denominator.
    /// The cofactor is inverted as an exact polynomial, so the numerator is
    /// only meaningful to the truncation order of the cofactor.
    pub fn invert(&self) -> Result<BElement> {
        BElement::from_series(self.clone()).invert()
    }

    /// Largest monomial dividing every term.
    fn monomial_content(&self) -> Option<Monomial> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, m| {
            Monomial(acc.0.iter().zip(&m.0).map(|(a, b)| *a.min(b)).collect())
        }))
    }

    fn div_monomial(&self, mono: &Monomial) -> Self {
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            debug_assert!(mono.divides(m));
            out.insert(m.div(mono), c.clone());
        }
        out
    }

    /// Evaluates the stored polynomial at the given rational values; the
    /// remaining variables stay symbolic.
    pub fn substitute(&self, assignment: &BTreeMap<VarId, Rational>) -> Result<Self> {
        for v in assignment.keys() {
            self.index_of(*v)?;
        }
        let keep: Vec<VarId> = self
            .vars
            .iter()
            .copied()
            .filter(|v| !assignment.contains_key(v))
            .collect();
        let mut out = QSeries::zero(&keep, self.order);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut e = Vec::with_capacity(keep.len());
            for (i, v) in self.vars.iter().enumerate() {
                match assignment.get(v) {
                    Some(val) => coeff *= num_traits::pow(val.clone(), m.0[i] as usize),
                    None => e.push(m.0[i]),
                }
            }
            out.add_term(Monomial(e), coeff);
        }
        Ok(out)
    }

    /// Sets every variable to zero.
    pub fn at_zero(&self) -> Rational {
        self.constant_term()
    }

    /// Drops all terms of total degree above `order` (keeps the same ring).
    pub fn truncate(&self, order: u32) -> Self {
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            if m.degree() <= order {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Canonical text form; variables print as `q<id>`.
    pub fn to_canonical_string(&self) -> String {
        format!("{self}")
    }
}

fn format_monomial(vars: &[VarId], m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (v, &e) in vars.iter().zip(&m.0) {
        match e {
            0 => {}
            1 => parts.push(format!("q{v}")),
            _ => parts.push(format!("q{v}^{e}")),
        }
    }
    parts.join("*")
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let mono = format_monomial(&self.vars, m);
            if mono.is_empty() {
                write!(f, "{}", format_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{}*{mono}", format_rational(&abs))?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&QSeries> for &QSeries {
            type Output = QSeries;
            /// Panics on incompatible rings; use the `checked_*` form to recover.
            fn $method(self, rhs: &QSeries) -> QSeries {
                self.$checked(rhs).expect("incompatible series rings")
            }
        }
        impl $trait<QSeries> for QSeries {
            type Output = QSeries;
            fn $method(self, rhs: QSeries) -> QSeries {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QSeries> for QSeries {
            type Output = QSeries;
            fn $method(self, rhs: &QSeries) -> QSeries {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        let mut out = self.zero_like();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        -&self
    }
}

/// Solves `c2 r^2 + c1 r + c0 = 0` for the series root congruent to `root0`
/// modulo the ideal generated by the variables, by Newton iteration. Each
/// step doubles the number of correct degrees; the residual of the result is
/// exactly zero in the truncated ring.
pub fn hensel_solve_quadratic(
    c2: &QSeries,
    c1: &QSeries,
    c0: &QSeries,
    root0: &Rational,
) -> Result<QSeries> {
    c2.check_compatible(c1)?;
    c2.check_compatible(c0)?;
    let residual0 = c2.constant_term() * root0 * root0 + c1.constant_term() * root0 + c0.constant_term();
    if !residual0.is_zero() {
        return Err(SeriesError::NotARoot);
    }
    let deriv0 = rat_int(2) * c2.constant_term() * root0 + c1.constant_term();
    if deriv0.is_zero() {
        return Err(SeriesError::RepeatedRoot);
    }
    let vars = c2.vars.clone();
    let order = c2.order;
    let two = QSeries::constant(&vars, order, rat_int(2));
    let mut r = QSeries::constant(&vars, order, root0.clone());
    let mut correct = 1u32;
    while correct <= order {
        let f = &(&(c2 * &r) * &r) + &(&(c1 * &r) + c0);
        if f.is_zero() {
            break;
        }
        let df = &(&two * &(c2 * &r)) + c1;
        let step = &f * &df.invert_unit()?;
        r = &r - &step;
        correct *= 2;
    }
    Ok(r)
}

/// Element of the localisation `A[prod q_e^-1]`: `numerator / q^denominator`,
/// kept reduced so that the numerator is not divisible by any `q_e` with a
/// positive denominator exponent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BElement {
    num: QSeries,
    den: Vec<u32>,
}

impl BElement {
    pub fn from_series(num: QSeries) -> Self {
        let den = vec![0; num.vars.len()];
        BElement { num, den }
    }

    /// `num / q^den`, reduced.
    pub fn new(num: QSeries, den: Vec<u32>) -> Self {
        assert_eq!(den.len(), num.vars.len(), "denominator length");
        let mut b = BElement { num, den };
        b.reduce();
        b
    }

    pub fn numerator(&self) -> &QSeries {
        &self.num
    }

    pub fn denominator(&self) -> &[u32] {
        &self.den
    }

    pub fn vars(&self) -> &[VarId] {
        self.num.vars()
    }

    pub fn order(&self) -> u32 {
        self.num.order()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The underlying series when there is no denominator.
    pub fn as_series(&self) -> Option<&QSeries> {
        self.den.iter().all(|&d| d == 0).then_some(&self.num)
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.iter_mut().for_each(|d| *d = 0);
            return;
        }
        let content = self.num.monomial_content().expect("nonzero");
        let cancel: Vec<u32> = content
            .0
            .iter()
            .zip(&self.den)
            .map(|(c, d)| *c.min(d))
            .collect();
        if cancel.iter().any(|&c| c > 0) {
            self.num = self.num.div_monomial(&Monomial(cancel.clone()));
            for (d, c) in self.den.iter_mut().zip(&cancel) {
                *d -= c;
            }
        }
    }

    pub fn checked_add(&self, other: &BElement) -> Result<Self> {
        self.num.check_compatible(&other.num)?;
        let common: Vec<u32> = self.den.iter().zip(&other.den).map(|(a, b)| *a.max(b)).collect();
        let lift = |x: &BElement| {
            let s: Vec<u32> = common.iter().zip(&x.den).map(|(c, d)| c - d).collect();
            x.num.shift(&s)
        };
        Ok(BElement::new(&lift(self) + &lift(other), common.clone()))
    }

    pub fn checked_mul(&self, other: &BElement) -> Result<Self> {
        let num = self.num.checked_mul(&other.num)?;
        let den = self.den.iter().zip(&other.den).map(|(a, b)| a + b).collect();
        Ok(BElement::new(num, den))
    }

    pub fn neg(&self) -> Self {
        BElement {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn checked_sub(&self, other: &BElement) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    /// True when the element is a monomial times a unit (with any denominator).
    pub fn is_invertible(&self) -> bool {
        self.unit_split().is_ok()
    }

    fn unit_split(&self) -> Result<(Monomial, QSeries)> {
        if self.num.is_zero() {
            return Err(SeriesError::NotInvertible(NonUnit::Zero));
        }
        let content = self.num.monomial_content().expect("nonzero");
        let unit = self.num.div_monomial(&content);
        if unit.constant_term().is_zero() {
            return Err(SeriesError::NotInvertible(NonUnit::NotMonomialTimesUnit));
        }
        Ok((content, unit))
    }

    pub fn invert(&self) -> Result<Self> {
        let (content, unit) = self.unit_split()?;
        let inv = unit.invert_unit()?.shift(&self.den);
        Ok(BElement::new(inv, content.0))
    }

    /// Exact evaluation of the stored numerator; a variable with positive
    /// denominator exponent cannot be set to zero.
    pub fn substitute(&self, assignment: &BTreeMap<VarId, Rational>) -> Result<Self> {
        let mut factor = Rational::one();
        let mut den = Vec::new();
        for (i, v) in self.num.vars.iter().enumerate() {
            match assignment.get(v) {
                Some(val) if self.den[i] > 0 => {
                    if val.is_zero() {
                        return Err(SeriesError::Pole {
                            var: *v,
                            exponent: self.den[i],
                        });
                    }
                    factor /= num_traits::pow(val.clone(), self.den[i] as usize);
                }
                Some(_) => {}
                None => den.push(self.den[i]),
            }
        }
        let num = self.num.substitute(assignment)?.scale(&factor);
        Ok(BElement::new(num, den))
    }

    pub fn to_canonical_string(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for BElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = format_monomial(&self.num.vars, &Monomial(self.den.clone()));
        if den.is_empty() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({den})", self.num)
        }
    }
}

macro_rules! forward_belement_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&BElement> for &BElement {
            type Output = BElement;
            fn $method(self, rhs: &BElement) -> BElement {
                self.$checked(rhs).expect("incompatible series rings")
            }
        }
    };
}

forward_belement_binop!(Add, add, checked_add);
forward_belement_binop!(Sub, sub, checked_sub);
forward_belement_binop!(Mul, mul, checked_mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn q(order: u32) -> QSeries {
        QSeries::var(&[1], order, 1).unwrap()
    }

    fn one(vars: &[VarId], order: u32) -> QSeries {
        QSeries::one(vars, order)
    }

    #[test]
    fn difference_of_squares() {
        let p = &one(&[1], 3) + &q(3);
        let m = &one(&[1], 3) - &q(3);
        assert_eq!((&p * &m).to_string(), "1 - q1^2");
    }

    #[test]
    fn truncated_square_two_vars() {
        let vars = [1, 2];
        let s = &(&one(&vars, 1) + &QSeries::var(&vars, 1, 1).unwrap())
            + &QSeries::var(&vars, 1, 2).unwrap();
        assert_eq!((&s * &s).to_string(), "1 + 2*q2 + 2*q1");
    }

    #[test]
    fn monomial_times_inverse_is_one() {
        let qb = BElement::from_series(q(4));
        let inv = qb.invert().unwrap();
        assert_eq!(inv.denominator(), &[1]);
        let prod = &qb * &inv;
        assert_eq!(prod, BElement::from_series(one(&[1], 4)));
    }

    #[test]
    fn geometric_series_inverse() {
        let x = &one(&[1], 3) - &q(3);
        let inv = x.invert_unit().unwrap();
        assert_eq!(inv.to_string(), "1 + q1 + q1^2 + q1^3");
        assert!((&x * &inv).is_one());
    }

    #[test]
    fn invert_rational_constant() {
        let two = QSeries::constant(&[1], 3, rat_int(2));
        assert_eq!(two.invert_unit().unwrap().to_string(), "1/2");
    }

    #[test]
    fn invert_monomial_times_unit() {
        let x = &q(3) * &(&one(&[1], 3) - &q(3));
        let inv = x.invert().unwrap();
        assert_eq!(inv.denominator(), &[1]);
        assert_eq!(inv.numerator().to_string(), "1 + q1 + q1^2 + q1^3");
    }

    #[test]
    fn sum_of_variables_is_not_invertible() {
        let vars = [1, 2];
        let x = &QSeries::var(&vars, 3, 1).unwrap() + &QSeries::var(&vars, 3, 2).unwrap();
        assert_eq!(
            x.invert().unwrap_err(),
            SeriesError::NotInvertible(NonUnit::NotMonomialTimesUnit)
        );
        assert_eq!(
            QSeries::zero(&vars, 3).invert().unwrap_err(),
            SeriesError::NotInvertible(NonUnit::Zero)
        );
    }

    #[test]
    fn substitute_zero_and_pole() {
        let vars = [1, 2];
        let q1 = QSeries::var(&vars, 4, 1).unwrap();
        let q2 = QSeries::var(&vars, 4, 2).unwrap();
        let x = &one(&vars, 4) + &(&q1 * &q2);
        let mut a = BTreeMap::new();
        a.insert(2, Rational::zero());
        let s = x.substitute(&a).unwrap();
        assert_eq!(s.vars(), &[1]);
        assert!(s.is_one());

        let inv_q = BElement::from_series(q(3)).invert().unwrap();
        let mut a = BTreeMap::new();
        a.insert(1, Rational::zero());
        assert!(matches!(inv_q.substitute(&a), Err(SeriesError::Pole { var: 1, .. })));
        a.insert(1, rat(1, 7));
        let v = inv_q.substitute(&a).unwrap();
        assert_eq!(v.numerator().constant_term(), rat_int(7));
    }

    #[test]
    fn mismatched_rings_are_rejected() {
        let a = QSeries::one(&[1], 3);
        let b = QSeries::one(&[2], 3);
        assert!(matches!(a.checked_add(&b), Err(SeriesError::VariableMismatch { .. })));
        let c = QSeries::one(&[1], 4);
        assert_eq!(a.checked_mul(&c), Err(SeriesError::OrderMismatch(3, 4)));
        assert!(c.promote(&[1], 3, false).unwrap().checked_mul(&a).is_ok());
        assert!(a.promote(&[1], 4, false).is_err());
        assert!(a.promote(&[1, 2], 4, true).unwrap().checked_add(&QSeries::one(&[1, 2], 4)).is_ok());
    }

    #[test]
    fn hensel_square_root_matches_binomial_series() {
        // sqrt(1 + q) = sum binom(1/2, k) q^k, computed independently
        let n = 6;
        let c2 = one(&[1], n);
        let c1 = QSeries::zero(&[1], n);
        let c0 = -(&one(&[1], n) + &q(n));
        let r = hensel_solve_quadratic(&c2, &c1, &c0, &rat_int(1)).unwrap();
        let mut binom = Rational::one();
        for k in 0..=n {
            assert_eq!(r.coeff(&[k]), binom, "degree {k}");
            binom = binom * (rat(1, 2) - rat_int(k as i64)) / rat_int(k as i64 + 1);
        }
        assert_eq!(r.coeff(&[1]), rat(1, 2));
        assert_eq!(r.coeff(&[2]), rat(-1, 8));
    }

    #[test]
    fn hensel_constant_root() {
        let c2 = one(&[1], 5);
        let c1 = QSeries::zero(&[1], 5);
        let c0 = -one(&[1], 5);
        let r = hensel_solve_quadratic(&c2, &c1, &c0, &rat_int(-1)).unwrap();
        assert_eq!(r, QSeries::constant(&[1], 5, rat_int(-1)));
    }

    #[test]
    fn hensel_rejects_bad_roots() {
        let c2 = one(&[1], 5);
        let c1 = QSeries::zero(&[1], 5);
        let c0 = -q(5);
        // r^2 = q has a double root at q = 0
        assert_eq!(
            hensel_solve_quadratic(&c2, &c1, &c0, &Rational::zero()),
            Err(SeriesError::RepeatedRoot)
        );
        assert_eq!(
            hensel_solve_quadratic(&c2, &c1, &c0, &rat_int(1)),
            Err(SeriesError::NotARoot)
        );
    }

    #[test]
    fn parse_and_format_rationals() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-2").unwrap(), rat_int(-2));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert_eq!(format_rational(&rat(-6, 4)), "-3/2");
    }

    #[test]
    fn canonical_ordering() {
        let vars = [1, 2];
        let s = QSeries::from_terms(
            &vars,
            3,
            vec![
                (vec![2, 0], rat(1, 2)),
                (vec![0, 1], rat_int(-1)),
                (vec![1, 0], rat_int(3)),
                (vec![0, 0], rat_int(1)),
                (vec![4, 0], rat_int(9)),
            ],
        );
        assert_eq!(s.to_string(), "1 - q2 + 3*q1 + 1/2*q1^2");
    }
}
