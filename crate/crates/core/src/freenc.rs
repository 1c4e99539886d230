//! Truncated noncommutative power series, their Hopf structure, free Lie
//! algebras in the Lyndon basis, and dimension counts for lower central
//! series quotients.
//!
//! Letters are `0..r` and print as `a, b, c, ..`. A word is a `Vec<u8>`;
//! series are truncated at a maximal word length `m`.

use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::qseries::{format_rational, Rational};

pub type Word = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("series live in different algebras: {0}")]
    Mismatch(String),
    #[error("augmentation must be {expected}, found {found}")]
    Augmentation { expected: &'static str, found: String },
    #[error("element is not grouplike")]
    NotGrouplike,
    #[error("element is not in the free Lie algebra (word {0} is not Lyndon)")]
    NotLie(String),
    #[error("letter {letter} out of range for an alphabet of size {r}")]
    Letter { letter: i32, r: usize },
    #[error("need 2g+n-1 >= 1 and n >= 1 for a free fundamental group, got (g,n) = ({g},{n})")]
    NotFree { g: u32, n: u32 },
    #[error("degree must be at least 1")]
    Degree,
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

/// Coefficient field: exact rationals or doubles.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(n: i64) -> Self;
    fn magnitude(&self) -> f64;
    fn render(&self) -> String;
}

impl Scalar for Rational {
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn render(&self) -> String {
        format_rational(self)
    }
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn render(&self) -> String {
        format!("{self:e}")
    }
}

pub fn letter_char(l: u8) -> char {
    if l < 26 {
        (b'a' + l) as char
    } else {
        '?'
    }
}

pub fn format_word(w: &[u8]) -> String {
    w.iter().map(|&l| letter_char(l)).collect()
}

/// Parses `"ab"` into `[0, 1]`.
pub fn parse_word(s: &str) -> Option<Word> {
    s.chars()
        .map(|c| c.is_ascii_lowercase().then(|| c as u8 - b'a'))
        .collect()
}

/// Element of `Q<<X_0..X_{r-1}>>` modulo words longer than `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct NCSeries<T: Scalar = Rational> {
    r: usize,
    m: usize,
    coeffs: BTreeMap<Word, T>,
}

impl<T: Scalar> NCSeries<T> {
    pub fn zero(r: usize, m: usize) -> Self {
        NCSeries {
            r,
            m,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(r: usize, m: usize) -> Self {
        Self::constant(r, m, T::one())
    }

    pub fn constant(r: usize, m: usize, c: T) -> Self {
        let mut s = Self::zero(r, m);
        s.add_term(Vec::new(), c);
        s
    }

    /// The series consisting of a single word.
    pub fn word(r: usize, m: usize, w: &[u8]) -> Self {
        let mut s = Self::zero(r, m);
        s.add_term(w.to_vec(), T::one());
        s
    }

    pub fn letter(r: usize, m: usize, i: u8) -> Self {
        Self::word(r, m, &[i])
    }

    pub fn from_terms(r: usize, m: usize, terms: impl IntoIterator<Item = (Word, T)>) -> Self {
        let mut s = Self::zero(r, m);
        for (w, c) in terms {
            s.add_term(w, c);
        }
        s
    }

    pub fn alphabet_size(&self) -> usize {
        self.r
    }

    pub fn truncation(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &T)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, w: &[u8]) -> T {
        self.coeffs.get(w).cloned().unwrap_or_else(T::zero)
    }

    pub fn augmentation(&self) -> T {
        self.coeff(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn add_term(&mut self, w: Word, c: T) {
        if w.len() > self.m || c.is_zero() {
            return;
        }
        debug_assert!(w.iter().all(|&l| (l as usize) < self.r));
        match self.coeffs.entry(w) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.r != other.r || self.m != other.m {
            return Err(AlgebraError::Mismatch(format!(
                "(r={}, m={}) vs (r={}, m={})",
                self.r, self.m, other.r, other.m
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (w, c) in &other.coeffs {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (w, c) in &other.coeffs {
            out.add_term(w.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.r, self.m);
        for (u, a) in &self.coeffs {
            for (v, b) in &other.coeffs {
                if u.len() + v.len() <= self.m {
                    let mut w = Vec::with_capacity(u.len() + v.len());
                    w.extend_from_slice(u);
                    w.extend_from_slice(v);
                    out.add_term(w, a.clone() * b.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.r, self.m);
        for (w, x) in &self.coeffs {
            out.add_term(w.clone(), x.clone() * c.clone());
        }
        out
    }

    /// `[x, y] = xy - yx`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.checked_mul(other)?.checked_sub(&other.checked_mul(self)?)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::one(self.r, self.m);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Homogeneous component of degree `k`.
    pub fn homogeneous(&self, k: usize) -> Self {
        Self::from_terms(
            self.r,
            self.m,
            self.coeffs
                .iter()
                .filter(|(w, _)| w.len() == k)
                .map(|(w, c)| (w.clone(), c.clone())),
        )
    }

    /// Same series with a smaller truncation length.
    pub fn truncate(&self, m: usize) -> Self {
        Self::from_terms(
            self.r,
            m.min(self.m),
            self.coeffs
                .iter()
                .filter(|(w, _)| w.len() <= m)
                .map(|(w, c)| (w.clone(), c.clone())),
        )
    }

    /// `exp(x) = sum x^k / k!`, for `x` with augmentation 0.
    pub fn nc_exp(&self) -> Result<Self> {
        if !self.augmentation().is_zero() {
            return Err(AlgebraError::Augmentation {
                expected: "0",
                found: self.augmentation().render(),
            });
        }
        let mut acc = Self::one(self.r, self.m);
        let mut term = Self::one(self.r, self.m);
        for k in 1..=self.m {
            term = (&term * self).scale(&(T::one() / T::from_i64(k as i64)));
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// `log(x) = sum (-1)^(k+1) (x-1)^k / k`, for `x` with augmentation 1.
    pub fn nc_log(&self) -> Result<Self> {
        if self.augmentation() != T::one() {
            return Err(AlgebraError::Augmentation {
                expected: "1",
                found: self.augmentation().render(),
            });
        }
        let y = self - &Self::one(self.r, self.m);
        let mut acc = Self::zero(self.r, self.m);
        let mut power = Self::one(self.r, self.m);
        for k in 1..=self.m {
            power = &power * &y;
            let c = T::from_i64(if k % 2 == 1 { 1 } else { -1 }) / T::from_i64(k as i64);
            acc = &acc + &power.scale(&c);
        }
        Ok(acc)
    }

    /// Multiplicative inverse, for `x` with invertible augmentation.
    pub fn inverse(&self) -> Result<Self> {
        let a = self.augmentation();
        if a.is_zero() {
            return Err(AlgebraError::Augmentation {
                expected: "nonzero",
                found: a.render(),
            });
        }
        let ainv = T::one() / a;
        // x = a (1 + y), x^-1 = a^-1 sum (-y)^k
        let y = &self.scale(&ainv) - &Self::one(self.r, self.m);
        let minus_y = y.scale(&-T::one());
        let mut acc = Self::one(self.r, self.m);
        let mut power = Self::one(self.r, self.m);
        for _ in 0..self.m {
            power = &power * &minus_y;
            acc = &acc + &power;
        }
        Ok(acc.scale(&ainv))
    }

    /// Applies a letter substitution `a_i -> images[i]`.
    pub fn substitute(&self, images: &[NCSeries<T>]) -> Result<NCSeries<T>> {
        let (r, m) = images
            .first()
            .map(|s| (s.r, s.m))
            .ok_or_else(|| AlgebraError::Mismatch("no images".into()))?;
        let mut out = NCSeries::zero(r, m);
        for (w, c) in &self.coeffs {
            let mut t = NCSeries::constant(r, m, c.clone());
            for &l in w {
                t = t.checked_mul(&images[l as usize])?;
            }
            out = out.checked_add(&t)?;
        }
        Ok(out)
    }

    /// `Delta(x)` as a map `(u, v) -> coefficient of u (x) v`, letters primitive.
    pub fn coproduct(&self) -> BTreeMap<(Word, Word), T> {
        let mut out: BTreeMap<(Word, Word), T> = BTreeMap::new();
        for (w, c) in &self.coeffs {
            let k = w.len();
            for mask in 0u32..(1u32 << k) {
                let mut u = Vec::new();
                let mut v = Vec::new();
                for (i, &l) in w.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        u.push(l);
                    } else {
                        v.push(l);
                    }
                }
                let e = out.entry((u, v)).or_insert_with(T::zero);
                *e = e.clone() + c.clone();
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn tensor(&self, other: &Self) -> BTreeMap<(Word, Word), T> {
        let mut out = BTreeMap::new();
        for (u, a) in &self.coeffs {
            for (v, b) in &other.coeffs {
                if u.len() + v.len() <= self.m {
                    out.insert((u.clone(), v.clone()), a.clone() * b.clone());
                }
            }
        }
        out
    }

    /// Largest coefficient of `Delta(x) - x (x) x` (total degree at most `m`),
    /// together with the augmentation defect.
    pub fn grouplike_defect(&self) -> f64 {
        let aug = (self.augmentation() - T::one()).magnitude();
        aug.max(map_defect(&self.coproduct(), &self.tensor(self)))
    }

    /// Largest coefficient of `Delta(x) - x (x) 1 - 1 (x) x`.
    pub fn primitive_defect(&self) -> f64 {
        let one = Self::one(self.r, self.m);
        let mut target = self.tensor(&one);
        for (k, c) in one.tensor(self) {
            let e = target.entry(k).or_insert_with(T::zero);
            *e = e.clone() + c;
        }
        map_defect(&self.coproduct(), &target)
    }

    pub fn is_grouplike(&self) -> bool {
        self.augmentation() == T::one() && self.coproduct() == self.tensor(self)
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive_defect() == 0.0
    }

    /// Words in (length, lexicographic) order.
    pub fn sorted_terms(&self) -> Vec<(&Word, &T)> {
        let mut v: Vec<_> = self.coeffs.iter().collect();
        v.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        v
    }
}

fn map_defect<T: Scalar>(a: &BTreeMap<(Word, Word), T>, b: &BTreeMap<(Word, Word), T>) -> f64 {
    let mut worst = 0.0f64;
    for (k, x) in a {
        let d = match b.get(k) {
            Some(y) => (x.clone() - y.clone()).magnitude(),
            None => x.magnitude(),
        };
        worst = worst.max(d);
    }
    for (k, y) in b {
        if !a.contains_key(k) {
            worst = worst.max(y.magnitude());
        }
    }
    worst
}

impl<T: Scalar> fmt::Display for NCSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.sorted_terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = terms
            .into_iter()
            .map(|(w, c)| {
                if w.is_empty() {
                    c.render()
                } else {
                    format!("{}*[{}]", c.render(), format_word(w))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

macro_rules! nc_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<T: Scalar> $trait<&NCSeries<T>> for &NCSeries<T> {
            type Output = NCSeries<T>;
            /// Panics on mismatched algebras; use the `checked_*` form to recover.
            fn $method(self, rhs: &NCSeries<T>) -> NCSeries<T> {
                self.$checked(rhs).expect("series in different algebras")
            }
        }
    };
}

nc_binop!(Add, add, checked_add);
nc_binop!(Sub, sub, checked_sub);
nc_binop!(Mul, mul, checked_mul);

/// A free-group word: letter `i` (1-based) is `i`, its inverse is `-i`.
pub type GroupWord = Vec<i32>;

pub fn reduce_group_word(w: &[i32]) -> GroupWord {
    let mut out: GroupWord = Vec::with_capacity(w.len());
    for &x in w {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

fn embed_with(
    r: usize,
    m: usize,
    w: &[i32],
    image: impl Fn(u8, bool) -> NCSeries<Rational>,
) -> Result<NCSeries<Rational>> {
    let mut acc = NCSeries::one(r, m);
    for &x in w {
        let i = x.unsigned_abs() as usize;
        if x == 0 || i > r {
            return Err(AlgebraError::Letter { letter: x, r });
        }
        acc = &acc * &image((i - 1) as u8, x < 0);
    }
    Ok(acc)
}

/// Magnus embedding: `g_i -> 1 + X_i`, `g_i^-1 -> sum (-X_i)^k`.
pub fn magnus_embed(r: usize, m: usize, w: &[i32]) -> Result<NCSeries<Rational>> {
    embed_with(r, m, w, |i, inv| {
        let x = NCSeries::letter(r, m, i);
        let one = NCSeries::one(r, m);
        if inv {
            (&one + &x).inverse().expect("unit")
        } else {
            &one + &x
        }
    })
}

/// Exponential embedding: `g_i^{+-1} -> exp(+-X_i)`.
pub fn exp_embed(r: usize, m: usize, w: &[i32]) -> Result<NCSeries<Rational>> {
    embed_with(r, m, w, |i, inv| {
        let x = NCSeries::letter(r, m, i);
        let x = if inv { x.scale(&-Rational::one()) } else { x };
        x.nc_exp().expect("augmentation zero")
    })
}

/// Product of two grouplike elements, modelling composition of path torsors.
pub fn torsor_compose(p: &NCSeries<Rational>, q: &NCSeries<Rational>) -> Result<NCSeries<Rational>> {
    if !p.is_grouplike() || !q.is_grouplike() {
        return Err(AlgebraError::NotGrouplike);
    }
    p.checked_mul(q)
}

pub fn random_group_word(rng: &mut impl Rng, r: usize, len: usize) -> GroupWord {
    (0..len)
        .map(|_| {
            let i = rng.gen_range(1..=r as i32);
            if rng.gen_bool(0.5) {
                i
            } else {
                -i
            }
        })
        .collect()
}

/// Lyndon words over `0..r` of length exactly `k`, in lexicographic order (Duval).
pub fn lyndon_words(r: usize, k: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if r == 0 || k == 0 {
        return out;
    }
    let mut w: Vec<u8> = vec![0];
    loop {
        if w.len() == k {
            out.push(w.clone());
        }
        // next word in Duval's sequence of Lyndon words of length <= k
        let n = w.len();
        while w.len() < k {
            let c = w[w.len() - n];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last as usize == r - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(l) => *l += 1,
            None => break,
        }
    }
    out
}

/// Hall basis of degree `k` in the Lyndon flavour.
pub fn hall_basis(r: usize, k: usize) -> Vec<Word> {
    lyndon_words(r, k)
}

pub fn is_lyndon(w: &[u8]) -> bool {
    !w.is_empty() && (1..w.len()).all(|i| w[i..] > *w)
}

/// Standard factorisation `w = uv` with `v` the longest proper Lyndon suffix.
pub fn standard_factorization(w: &[u8]) -> Option<(&[u8], &[u8])> {
    (1..w.len()).find(|&i| is_lyndon(&w[i..])).map(|i| w.split_at(i))
}

/// Bracket polynomial of a Lyndon word under standard bracketing.
pub fn lyndon_bracket<T: Scalar>(w: &[u8], r: usize, m: usize) -> NCSeries<T> {
    match standard_factorization(w) {
        None => NCSeries::word(r, m, w),
        Some((u, v)) => lyndon_bracket::<T>(u, r, m)
            .bracket(&lyndon_bracket(v, r, m))
            .expect("same algebra"),
    }
}

/// Number of squarefree-divisor terms, `mu(d)`.
fn mobius(mut n: u64) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Dimension of the degree-`k` part of the free Lie algebra on `r` letters.
pub fn witt_dim(r: u64, k: u64) -> BigInt {
    assert!(k >= 1, "degree must be positive");
    let mut sum = BigInt::zero();
    for d in 1..=k {
        if k.is_multiple_of(d) {
            sum += BigInt::from(mobius(d)) * num_traits::pow(BigInt::from(r), (k / d) as usize);
        }
    }
    sum / BigInt::from(k)
}

/// Graded pieces of the lower central series of the free group: same as `witt_dim`.
pub fn lcs_quotient_dims(r: u64, k: u64) -> BigInt {
    witt_dim(r, k)
}

/// `dim I^m / I^{m+1}` for the free group on `r` generators.
pub fn ideal_graded_dims(r: u64, m: u32) -> BigInt {
    num_traits::pow(BigInt::from(r), m as usize)
}

/// Checks `prod_k (1 - t^k)^(-witt(r,k)) = 1/(1 - rt)` up to `t^degree`.
pub fn generating_function_identity(r: u64, degree: usize) -> bool {
    let mut lhs = vec![BigInt::zero(); degree + 1];
    lhs[0] = BigInt::one();
    for k in 1..=degree {
        let c = witt_dim(r, k as u64);
        // (1 - t^k)^(-c) = sum_j binom(c + j - 1, j) t^(kj)
        let mut factor = vec![BigInt::zero(); degree + 1];
        let mut binom = BigInt::one();
        let mut j = 0usize;
        while k * j <= degree {
            factor[k * j] = binom.clone();
            j += 1;
            binom = binom * (&c + BigInt::from(j - 1)) / BigInt::from(j);
        }
        let mut next = vec![BigInt::zero(); degree + 1];
        for (a, x) in lhs.iter().enumerate() {
            for (b, y) in factor.iter().enumerate() {
                if a + b <= degree {
                    next[a + b] += x * y;
                }
            }
        }
        lhs = next;
    }
    (0..=degree).all(|j| lhs[j] == num_traits::pow(BigInt::from(r), j))
}

/// Incremental rank over the rationals: rows are reduced against pivots
/// keyed by their smallest word.
#[derive(Debug, Default)]
pub struct RankAccumulator {
    pivots: BTreeMap<Word, BTreeMap<Word, Rational>>,
}

impl RankAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Adds a vector; returns true if it was independent of the previous ones.
    pub fn insert(&mut self, mut v: BTreeMap<Word, Rational>) -> bool {
        v.retain(|_, c| !c.is_zero());
        while let Some((lead, c)) = v.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
            match self.pivots.get(&lead) {
                Some(row) => {
                    for (w, x) in row {
                        let e = v.entry(w.clone()).or_insert_with(Rational::zero);
                        *e -= &c * x;
                        if e.is_zero() {
                            v.remove(w);
                        }
                    }
                }
                None => {
                    let inv = c.recip();
                    v.values_mut().for_each(|x| *x *= &inv);
                    self.pivots.insert(lead, v);
                    return true;
                }
            }
        }
        false
    }

    pub fn insert_series(&mut self, s: &NCSeries<Rational>) -> bool {
        self.insert(s.coeffs.clone())
    }

    /// Echelon basis vectors.
    pub fn basis(&self) -> impl Iterator<Item = &BTreeMap<Word, Rational>> {
        self.pivots.values()
    }
}

/// Lie element in Lyndon coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LieElement {
    pub r: usize,
    pub coeffs: BTreeMap<Word, Rational>,
}

impl LieElement {
    /// Expresses a Lie polynomial in the Lyndon basis using that the least
    /// word of the standard bracket of `w` is `w` itself, with coefficient 1.
    pub fn from_series(x: &NCSeries<Rational>) -> Result<LieElement> {
        let (r, m) = (x.r, x.m);
        let mut rest = x.clone();
        let mut coeffs = BTreeMap::new();
        while let Some((w, c)) = rest
            .coeffs
            .iter()
            .min_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)))
            .map(|(w, c)| (w.clone(), c.clone()))
        {
            if !is_lyndon(&w) {
                return Err(AlgebraError::NotLie(format_word(&w)));
            }
            let p = lyndon_bracket::<Rational>(&w, r, m);
            rest = &rest - &p.scale(&c);
            coeffs.insert(w, c);
        }
        Ok(LieElement { r, coeffs })
    }

    pub fn to_series(&self, m: usize) -> NCSeries<Rational> {
        let mut out = NCSeries::zero(self.r, m);
        for (w, c) in &self.coeffs {
            out = &out + &lyndon_bracket::<Rational>(w, self.r, m).scale(c);
        }
        out
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().map(Vec::len)
    }
}

/// `dim [L^2, L^2]_k` for the free Lie algebra on `r` letters, spanned by
/// brackets of Lyndon elements of degree at least 2.
pub fn derived_square_dim(r: usize, k: usize) -> usize {
    let mut acc = RankAccumulator::new();
    for i in 2..k {
        let j = k - i;
        if j < i {
            break;
        }
        let left = lyndon_words(r, i);
        let right = lyndon_words(r, j);
        for u in &left {
            let pu = lyndon_bracket::<Rational>(u, r, k);
            for v in &right {
                if i == j && v <= u {
                    continue;
                }
                let pv = lyndon_bracket::<Rational>(v, r, k);
                acc.insert_series(&pu.bracket(&pv).expect("same algebra"));
            }
        }
    }
    acc.rank()
}

/// `(dim Log_k, dim Pol_k)` with `Log = L^2/[L^2,L^2]` and `Pol = L/[L^2,L^2]`.
pub fn polylog_dims_r(r: usize, k: usize) -> Result<(BigInt, BigInt)> {
    if k == 0 {
        return Err(AlgebraError::Degree);
    }
    if k == 1 {
        return Ok((BigInt::zero(), BigInt::from(r)));
    }
    let d = witt_dim(r as u64, k as u64) - BigInt::from(derived_square_dim(r, k));
    Ok((d.clone(), d))
}

/// Rank `2g + n - 1` of the fundamental group of a curve of type `(g, n)`, `n >= 1`.
pub fn free_rank(g: u32, n: u32) -> Result<usize> {
    if n == 0 || 2 * g + n < 2 {
        return Err(AlgebraError::NotFree { g, n });
    }
    Ok((2 * g + n - 1) as usize)
}

pub fn polylog_dims(g: u32, n: u32, k: usize) -> Result<(BigInt, BigInt)> {
    polylog_dims_r(free_rank(g, n)?, k)
}

/// Letter weights: `2g` letters of weight -1 then `n - 1` of weight -2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedAlphabet {
    pub weights: Vec<i64>,
}

impl WeightedAlphabet {
    pub fn new(g: u32, n: u32) -> Result<Self> {
        free_rank(g, n)?;
        let mut weights = vec![-1; 2 * g as usize];
        weights.extend(std::iter::repeat_n(-2, n as usize - 1));
        Ok(WeightedAlphabet { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn word_weight(&self, w: &[u8]) -> i64 {
        w.iter().map(|&l| self.weights[l as usize]).sum()
    }
}

/// Number of degree-`m` words of each total weight.
pub fn weight_graded_dims(g: u32, n: u32, m: usize) -> Result<BTreeMap<i64, BigInt>> {
    let alpha = WeightedAlphabet::new(g, n)?;
    let mut dist: BTreeMap<i64, BigInt> = BTreeMap::from([(0, BigInt::one())]);
    for _ in 0..m {
        let mut next: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (w, c) in &dist {
            for &x in &alpha.weights {
                *next.entry(w + x).or_insert_with(BigInt::zero) += c;
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Dimension of the primitive degree-`k` homogeneous polynomials, computed
/// as the kernel of `x -> Delta(x) - x(x)1 - 1(x)x`.
pub fn primitive_dim(r: usize, k: usize) -> usize {
    let words = all_words(r, k);
    // columns indexed by words; rank of the map via its image vectors
    let mut acc = RankAccumulator::new();
    let mut rank = 0;
    for w in &words {
        let x = NCSeries::<Rational>::word(r, k, w);
        let mut img = BTreeMap::new();
        for ((u, v), c) in x.coproduct() {
            if !u.is_empty() && !v.is_empty() {
                // encode the pair as one key: u, separator, v
                let mut key = u.clone();
                key.push(u8::MAX);
                key.extend(v);
                img.insert(key, c);
            }
        }
        if acc.insert(img) {
            rank += 1;
        }
    }
    words.len() - rank
}

/// All words of length exactly `k`.
pub fn all_words(r: usize, k: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..r as u8).map(move |l| {
                    let mut x = w.clone();
                    x.push(l);
                    x
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::{rat, rat_int};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::SeedableRng;

    type S = NCSeries<Rational>;

    #[test]
    fn magnus_basics() {
        assert!(magnus_embed(2, 4, &[1, -1]).unwrap().coeffs.len() == 1);
        assert_eq!(magnus_embed(2, 4, &[1, -1]).unwrap(), S::one(2, 4));
        let c = magnus_embed(2, 2, &[1, 2, -1, -2]).unwrap();
        let expected = &(&S::one(2, 2) + &S::word(2, 2, &[0, 1])) - &S::word(2, 2, &[1, 0]);
        assert_eq!(c, expected);
    }

    #[test]
    fn exp_series() {
        let e = exp_embed(1, 3, &[1]).unwrap();
        for (k, c) in [(0, rat_int(1)), (1, rat_int(1)), (2, rat(1, 2)), (3, rat(1, 6))] {
            assert_eq!(e.coeff(&vec![0; k]), c);
        }
        assert!(e.is_grouplike());
    }

    #[test]
    fn hopf_classification() {
        let xy = S::word(2, 4, &[0, 1]);
        assert!(!xy.is_grouplike());
        assert!(!xy.is_primitive());
        assert!(S::letter(2, 4, 1).is_primitive());
        assert_eq!(S::one(2, 4).nc_log().unwrap(), S::zero(2, 4));
        let g = exp_embed(2, 5, &[1, 2, -1, 2, 2]).unwrap();
        assert!(g.is_grouplike());
        assert!(g.nc_log().unwrap().is_primitive());
    }

    #[test]
    fn bch_defect() {
        let x = S::letter(2, 3, 0);
        let y = S::letter(2, 3, 1);
        let lhs = (&x + &y).nc_exp().unwrap();
        let rhs = &x.nc_exp().unwrap() * &y.nc_exp().unwrap();
        assert_ne!(lhs, rhs);
        let z = rhs.nc_log().unwrap();
        let defect = (&z - &(&x + &y)).homogeneous(2);
        assert_eq!(defect, x.bracket(&y).unwrap().scale(&rat(1, 2)));
    }

    #[test]
    fn augmentation_errors() {
        assert!(S::letter(2, 3, 0).nc_log().is_err());
        assert!(S::one(2, 3).nc_exp().is_err());
        assert!(S::letter(2, 3, 0).inverse().is_err());
        assert!(torsor_compose(&S::word(2, 3, &[0]), &S::one(2, 3)).is_err());
    }

    #[test]
    fn witt_dims() {
        let r2: Vec<BigInt> = (1..=5).map(|k| witt_dim(2, k)).collect();
        assert_eq!(r2, [2, 1, 2, 3, 6].map(BigInt::from));
        assert_eq!(witt_dim(1, 1), BigInt::from(1));
        assert!((2..8).all(|k| witt_dim(1, k).is_zero()));
        assert_eq!(witt_dim(3, 2), BigInt::from(3));
        for r in 1..=4 {
            for k in 1..=8 {
                assert_eq!(BigInt::from(hall_basis(r, k).len()), witt_dim(r as u64, k as u64));
            }
        }
    }

    #[test]
    fn lyndon_words_are_lyndon() {
        let ws = lyndon_words(2, 4);
        assert_eq!(ws, vec![vec![0, 0, 0, 1], vec![0, 0, 1, 1], vec![0, 1, 1, 1]]);
        assert!(ws.iter().all(|w| is_lyndon(w)));
        assert_eq!(standard_factorization(&[0, 0, 1, 1]), Some((&[0u8][..], &[0u8, 1, 1][..])));
    }

    #[test]
    fn lyndon_brackets_are_primitive_and_triangular() {
        for w in lyndon_words(3, 4) {
            let p = lyndon_bracket::<Rational>(&w, 3, 4);
            assert!(p.is_primitive());
            let le = LieElement::from_series(&p).unwrap();
            assert_eq!(le.coeffs, BTreeMap::from([(w.clone(), rat_int(1))]));
        }
        assert!(LieElement::from_series(&S::word(2, 2, &[0, 1])).is_err());
    }

    #[test]
    fn primitive_dims_match_witt() {
        for (r, k) in [(2, 1), (2, 2), (2, 3), (2, 4), (3, 3), (2, 5)] {
            assert_eq!(BigInt::from(primitive_dim(r, k)), witt_dim(r as u64, k as u64), "r={r} k={k}");
        }
    }

    #[test]
    fn generating_function() {
        for r in 1..=4 {
            assert!(generating_function_identity(r, 8));
        }
    }

    #[test]
    fn polylog_small() {
        assert_eq!(polylog_dims_r(2, 1).unwrap(), (BigInt::zero(), BigInt::from(2)));
        assert_eq!(polylog_dims_r(2, 2).unwrap(), (BigInt::one(), BigInt::one()));
        // [L^2, L^2] starts in degree 5 for two letters: [[a,b],[a,[a,b]]]
        assert_eq!(derived_square_dim(2, 4), 0);
        assert_eq!(polylog_dims_r(2, 4).unwrap().0, BigInt::from(3));
        assert_eq!(derived_square_dim(2, 5), 2);
        assert_eq!(polylog_dims(1, 2, 1).unwrap().1, BigInt::from(3));
    }

    #[test]
    fn weights() {
        let w = weight_graded_dims(1, 2, 2).unwrap();
        assert_eq!(w, BTreeMap::from([(-4, 1.into()), (-3, 4.into()), (-2, 4.into())]));
        let w = weight_graded_dims(1, 1, 3).unwrap();
        assert_eq!(w, BTreeMap::from([(-3, 8.into())]));
        let w = weight_graded_dims(0, 3, 3).unwrap();
        assert_eq!(w, BTreeMap::from([(-6, 8.into())]));
        assert!(weight_graded_dims(2, 0, 1).is_err());
    }

    #[test]
    fn ideal_dims() {
        assert_eq!(ideal_graded_dims(2, 3), BigInt::from(8));
        assert_eq!(ideal_graded_dims(free_rank(1, 2).unwrap() as u64, 2), BigInt::from(9));
    }

    #[test]
    fn magnus_span_fills_truncated_algebra() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for (r, m) in [(2usize, 3usize), (3, 2)] {
            let full: usize = (0..=m).map(|k| r.pow(k as u32)).sum();
            let mut acc = RankAccumulator::new();
            let mut tries = 0;
            while acc.rank() < full && tries < 20 * full {
                let len = rng.gen_range(0..=m + 2);
                acc.insert_series(&magnus_embed(r, m, &random_group_word(&mut rng, r, len)).unwrap());
                tries += 1;
            }
            assert_eq!(acc.rank(), full);
        }
    }

    #[test]
    fn display() {
        let s = &S::one(2, 3) + &S::word(2, 3, &[0, 1]).scale(&rat(-1, 2));
        assert_eq!(s.to_string(), "1 + -1/2*[ab]");
        assert_eq!(parse_word("ab"), Some(vec![0, 1]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn magnus_detects_identity(w in proptest::collection::vec((1i32..=2, any::<bool>()), 0..6)) {
            let w: Vec<i32> = w.into_iter().map(|(i, s)| if s { i } else { -i }).collect();
            let image = magnus_embed(2, 5, &w).unwrap();
            prop_assert_eq!(image == S::one(2, 5), reduce_group_word(&w).is_empty());
        }

        #[test]
        fn log_exp_roundtrip(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut x = S::one(2, 4);
            for k in 1..=4 {
                for w in all_words(2, k) {
                    x.add_term(w, rat(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
                }
            }
            let back = x.nc_log().unwrap().nc_exp().unwrap();
            prop_assert_eq!(&back, &x);
            prop_assert_eq!(&(&x * &x.inverse().unwrap()), &S::one(2, 4));
        }

        #[test]
        fn torsor_laws(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let words: Vec<GroupWord> = (0..3).map(|_| random_group_word(&mut rng, 2, 4)).collect();
            let [p, q, r] = [0, 1, 2].map(|i| exp_embed(2, 4, &words[i]).unwrap());
            let pq_r = torsor_compose(&torsor_compose(&p, &q).unwrap(), &r).unwrap();
            let p_qr = torsor_compose(&p, &torsor_compose(&q, &r).unwrap()).unwrap();
            prop_assert_eq!(&pq_r, &p_qr);
            prop_assert_eq!(torsor_compose(&p, &p.inverse().unwrap()).unwrap(), S::one(2, 4));
            let concat = [words[0].clone(), words[1].clone()].concat();
            prop_assert_eq!(magnus_embed(2, 4, &concat).unwrap(),
                &magnus_embed(2, 4, &words[0]).unwrap() * &magnus_embed(2, 4, &words[1]).unwrap());
            prop_assert!(exp_embed(2, 4, &concat).unwrap().is_grouplike());
        }
    }
}
