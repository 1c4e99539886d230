//! Monodromy of unipotent connections on the thrice-punctured line.
//!
//! The central object is the connection matrix `Phi(A, B) = G1^-1 G0` of
//! `G'(t) = (A/t + B/(t-1)) G(t)`, where `G0 ~ t^A` at 0 and
//! `G1 ~ (1-t)^B` at 1. With this convention the coefficient of the word
//! `a^(s1-1) b .. a^(sk-1) b` in the universal series is
//! `(-1)^k zeta(s1, .., sk)`; in particular [`COEFF_AB_SIGN`] records that
//! the coefficient of `ab` is `-zeta(2)`.
//!
//! Words in the universal series specialise to matrix products in the same
//! order: `ab -> A * B`.

mod matrix;
mod mzv;
mod ode;
mod transport;

pub use matrix::{QMatrix, QMatrixError};
pub use mzv::{mzv, MzvError};
pub use ode::{integrate_dp45, OdeStats};
pub use transport::{
    gauss_legendre, homotopy_invariance_check, nilpotent_transport, regularized_unit_interval_transport, Form,
    FormPath, Segment, TransportOptions, TransportResult,
};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::freenc::{all_words, format_word, NCSeries};
use crate::graphs::{EdgeId, GroupoidWord, MoveKind};
use crate::qseries::Rational;

/// Sign of the coefficient of `ab` relative to `zeta(2)`, fixed by the
/// `(E12, E23)` computation: `Phi_13 = COEFF_AB_SIGN * zeta(2)`.
pub const COEFF_AB_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KzError {
    #[error(transparent)]
    Matrix(#[from] QMatrixError),
    #[error(transparent)]
    Mzv(#[from] MzvError),
    #[error("matrix is not nilpotent")]
    NotNilpotent,
    #[error("matrix sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("epsilon must lie in (0, 1/2), got {0}")]
    Epsilon(f64),
    #[error("integrator failed: {0}")]
    Integrator(String),
    #[error("path passes within {distance:.3e} of the pole {pole} (margin {margin:.3e})")]
    PoleProximity { pole: String, distance: f64, margin: f64 },
    #[error("path segments are not continuous at segment {0}")]
    Discontinuous(usize),
    #[error("paths have different endpoints or forms")]
    Incomparable,
    #[error("move {index}: simple moves have no monodromy formula here")]
    UnsupportedMove { index: usize },
    #[error("move {index}: no residue for edge {edge}")]
    MissingResidue { index: usize, edge: EdgeId },
    #[error("weight bound {0} is outside 1..=10")]
    Weight(usize),
}

pub type Result<T> = std::result::Result<T, KzError>;

/// Residue matrices `(A, B)`, both nilpotent, with their nilpotency indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotentPair {
    pub a: QMatrix,
    pub b: QMatrix,
    pub index_a: usize,
    pub index_b: usize,
}

impl NilpotentPair {
    pub fn new(a: QMatrix, b: QMatrix) -> Result<Self> {
        if a.size() != b.size() {
            return Err(KzError::SizeMismatch(a.size(), b.size()));
        }
        let index_a = a.nilpotency_index().ok_or(KzError::NotNilpotent)?;
        let index_b = b.nilpotency_index().ok_or(KzError::NotNilpotent)?;
        Ok(NilpotentPair {
            a,
            b,
            index_a,
            index_b,
        })
    }

    pub fn size(&self) -> usize {
        self.a.size()
    }

    pub fn swapped(&self) -> NilpotentPair {
        NilpotentPair {
            a: self.b.clone(),
            b: self.a.clone(),
            index_a: self.index_b,
            index_b: self.index_a,
        }
    }

    /// The `(E12, E23)` pair of 3x3 elementary matrices.
    pub fn elementary_3x3() -> Self {
        NilpotentPair::new(QMatrix::elementary(3, 0, 1), QMatrix::elementary(3, 1, 2)).expect("nilpotent")
    }

    /// Smallest `L` such that every word of length `L` in `A, B` vanishes, if
    /// `L <= limit`.
    pub fn word_vanishing_length(&self, limit: usize) -> Option<usize> {
        let mut layer = vec![QMatrix::identity(self.size())];
        for len in 1..=limit {
            let mut next = Vec::new();
            for m in &layer {
                for x in [&self.a, &self.b] {
                    let p = m.mul(x);
                    if !p.is_zero() && !next.contains(&p) {
                        next.push(p);
                    }
                }
            }
            if next.is_empty() {
                return Some(len);
            }
            layer = next;
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ode,
    UniversalSeries,
    Exact,
    Product,
}

/// Numeric connection or monodromy matrix with its error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    pub matrix: DMatrix<Complex64>,
    pub method: Method,
    pub error_estimate: f64,
    pub warnings: Vec<String>,
}

impl ConnectionMatrix {
    pub fn max_deviation(&self, other: &DMatrix<Complex64>) -> f64 {
        max_abs_diff(&self.matrix, other)
    }

    /// Largest distance of an eigenvalue from 1, bounded via `(M - I)^n`.
    pub fn unipotence_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let nmat = &self.matrix - DMatrix::<Complex64>::identity(n, n);
        let mut p = DMatrix::<Complex64>::identity(n, n);
        for _ in 0..n {
            p = &p * &nmat;
        }
        // every eigenvalue lambda satisfies |lambda - 1|^n <= |(M - I)^n|
        let norm = p.iter().map(|z| z.norm()).sum::<f64>();
        norm.powf(1.0 / n as f64)
    }
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Settings of the regularised ODE route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Distance of the integration endpoints from the singular points.
    pub epsilon: f64,
    /// Number of Frobenius correction terms in the boundary values; 0 uses the
    /// bare `eps^A` and `eps^-B` normalisations.
    pub boundary_order: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Combine runs at `eps` and `eps/2` to cancel the leading boundary error.
    pub richardson: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            epsilon: 1e-6,
            boundary_order: 2,
            rtol: 1e-10,
            atol: 1e-13,
            richardson: true,
        }
    }
}

/// Matrices of the Frobenius series `P(t) = sum P_n t^n` with `G0 = P(t) t^A`:
/// `n P_n - [A, P_n] = -B (P_0 + .. + P_{n-1})`.
fn frobenius_terms(a: &DMatrix<f64>, b: &DMatrix<f64>, order: usize) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut terms = vec![DMatrix::<f64>::identity(n, n)];
    let mut partial = DMatrix::<f64>::identity(n, n);
    for k in 1..=order {
        let rhs = -(b * &partial);
        // (k - ad_A)^-1 = sum ad_A^j / k^(j+1); ad_A is nilpotent
        let mut ad = rhs.clone();
        let mut acc = DMatrix::<f64>::zeros(n, n);
        let mut scale = 1.0 / k as f64;
        for _ in 0..(2 * n + 1) {
            if ad.iter().all(|x| *x == 0.0) {
                break;
            }
            acc += &ad * scale;
            ad = a * &ad - &ad * a;
            scale /= k as f64;
        }
        partial += &acc;
        terms.push(acc);
    }
    terms
}

fn series_at(terms: &[DMatrix<f64>], t: f64) -> DMatrix<f64> {
    let mut acc = DMatrix::<f64>::zeros(terms[0].nrows(), terms[0].ncols());
    let mut p = 1.0;
    for m in terms {
        acc += m * p;
        p *= t;
    }
    acc
}

/// `exp(c N)` for nilpotent `N`.
fn nilpotent_exp(n: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let size = n.nrows();
    let mut acc = DMatrix::<f64>::identity(size, size);
    let mut term = DMatrix::<f64>::identity(size, size);
    for k in 1..=size {
        term = &term * n * (c / k as f64);
        if term.iter().all(|x| *x == 0.0) {
            break;
        }
        acc += &term;
    }
    acc
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One regularised run: returns `Phi * init` and the integrator's error estimate.
fn connection_run(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    init: &DMatrix<f64>,
    eps: f64,
    opts: &OdeOptions,
) -> Result<(DMatrix<f64>, f64)> {
    let (n, c) = (init.nrows(), init.ncols());
    let p0 = frobenius_terms(a, b, opts.boundary_order);
    let q1 = frobenius_terms(b, a, opts.boundary_order);
    let y0 = series_at(&p0, eps) * nilpotent_exp(a, eps.ln()) * init;
    // t = logistic(x) turns dG/dt into dG/dx = (A (1 - t) - B t) G
    let x0 = (eps / (1.0 - eps)).ln();
    let x1 = -x0;
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let t = logistic(x);
        let ym = nalgebra::DMatrixView::<f64>::from_slice(y, n, c);
        let d = (a * (1.0 - t) - b * t) * ym;
        dy.copy_from_slice(d.as_slice());
    };
    let (y1, stats) = integrate_dp45(rhs, x0, x1, y0.as_slice(), opts.rtol, opts.atol, (x1 - x0) / 64.0)
        .map_err(KzError::Integrator)?;
    let y1 = DMatrix::from_vec(n, c, y1);
    let q = series_at(&q1, eps);
    let qinv = q
        .clone()
        .try_inverse()
        .ok_or_else(|| KzError::Integrator("boundary series not invertible".into()))?;
    let out = nilpotent_exp(b, -eps.ln()) * qinv * y1;
    Ok((out, stats.error_estimate))
}

/// `Phi * init` with optional Richardson extrapolation; returns value and error estimate.
fn connection_apply(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    init: &DMatrix<f64>,
    opts: &OdeOptions,
) -> Result<(DMatrix<f64>, f64)> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 0.5) {
        return Err(KzError::Epsilon(opts.epsilon));
    }
    let (v1, e1) = connection_run(a, b, init, opts.epsilon, opts)?;
    if !opts.richardson {
        return Ok((v1, e1));
    }
    let (v2, e2) = connection_run(a, b, init, opts.epsilon / 2.0, opts)?;
    let f = 2f64.powi(opts.boundary_order as i32 + 1);
    let diff = (&v2 - &v1).abs().max();
    let extrapolated = (&v2 * f - &v1) / (f - 1.0);
    Ok((extrapolated, diff / (f - 1.0) + e1.max(e2)))
}

/// `Phi(A, B)` by integrating the ODE between `eps` and `1 - eps`.
pub fn ode_connection_matrix(pair: &NilpotentPair, opts: &OdeOptions) -> Result<ConnectionMatrix> {
    let a = pair.a.to_f64();
    let b = pair.b.to_f64();
    let n = pair.size();
    let (phi, err) = connection_apply(&a, &b, &DMatrix::identity(n, n), opts)?;
    Ok(ConnectionMatrix {
        matrix: to_complex(&phi),
        method: Method::Ode,
        error_estimate: err,
        warnings: Vec::new(),
    })
}

/// `Phi(a, b)` in the free algebra on `a, b` truncated at weight `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalAssociator {
    pub weight: usize,
    pub series: NCSeries<f64>,
    /// Error estimate per weight `0..=W`.
    pub error_by_weight: Vec<f64>,
}

/// Index of every word of length `<= w` in a dense vector.
fn word_index(w: usize) -> (Vec<Vec<u8>>, BTreeMap<Vec<u8>, usize>) {
    let words: Vec<Vec<u8>> = (0..=w).flat_map(|k| all_words(2, k)).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    (words, index)
}

/// Left multiplication by a letter on words of length `<= w`.
fn left_mult(letter: u8, words: &[Vec<u8>], index: &BTreeMap<Vec<u8>, usize>, w: usize) -> DMatrix<f64> {
    let n = words.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (j, word) in words.iter().enumerate() {
        if word.len() < w {
            let mut x = vec![letter];
            x.extend(word);
            m[(index[&x], j)] = 1.0;
        }
    }
    m
}

/// Runs the ODE route with `A, B` the left multiplications by `a, b` and
/// reads the coefficients of `Phi` applied to the empty word.
pub fn universal_associator(weight: usize, opts: &OdeOptions) -> Result<UniversalAssociator> {
    if !(1..=10).contains(&weight) {
        return Err(KzError::Weight(weight));
    }
    let (words, index) = word_index(weight);
    let la = left_mult(0, &words, &index, weight);
    let lb = left_mult(1, &words, &index, weight);
    let mut init = DMatrix::<f64>::zeros(words.len(), 1);
    init[(0, 0)] = 1.0;
    let (v, err) = connection_apply(&la, &lb, &init, opts)?;
    let mut series = NCSeries::zero(2, weight);
    for (i, w) in words.iter().enumerate() {
        series.add_term(w.clone(), v[(i, 0)]);
    }
    // the boundary and integration errors act on all coefficients alike;
    // longer words pick up more log factors
    let error_by_weight = (0..=weight).map(|k| err * (1.0 + k as f64)).collect();
    Ok(UniversalAssociator {
        weight,
        series,
        error_by_weight,
    })
}

impl UniversalAssociator {
    pub fn coeff(&self, w: &[u8]) -> f64 {
        self.series.coeff(w)
    }

    /// Coefficients as a `word -> value` map, words written in `a, b`.
    pub fn coefficient_map(&self) -> BTreeMap<String, f64> {
        all_word_list(self.weight)
            .into_iter()
            .map(|w| (format_word(&w), self.coeff(&w)))
            .collect()
    }

    /// Series with the letters exchanged, i.e. `Phi(b, a)`.
    pub fn swapped(&self) -> NCSeries<f64> {
        NCSeries::from_terms(
            2,
            self.weight,
            self.series
                .terms()
                .map(|(w, c)| (w.iter().map(|l| 1 - l).collect(), *c)),
        )
    }

    pub fn max_error(&self) -> f64 {
        self.error_by_weight.iter().copied().fold(0.0, f64::max)
    }
}

fn all_word_list(w: usize) -> Vec<Vec<u8>> {
    (0..=w).flat_map(|k| all_words(2, k)).collect()
}

/// `Phi(A, B) = sum_w c_w w(A, B)`. If some word of length `W + 1` in `A, B`
/// is nonzero the truncation is inexact and a warning is attached.
pub fn specialize_associator(u: &UniversalAssociator, pair: &NilpotentPair) -> Result<ConnectionMatrix> {
    let n = pair.size();
    let a = pair.a.to_f64();
    let b = pair.b.to_f64();
    let mut warnings = Vec::new();
    match pair.word_vanishing_length(u.weight + 1) {
        Some(_) => {}
        None => warnings.push(format!(
            "words of length {} in A, B do not all vanish; the weight-{} truncation is not exact",
            u.weight + 1,
            u.weight
        )),
    }
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut err = 0.0;
    // products of all words by length, reusing prefixes
    let mut layer: Vec<(Vec<u8>, DMatrix<f64>)> = vec![(Vec::new(), DMatrix::identity(n, n))];
    for k in 0..=u.weight {
        let mut next = Vec::new();
        for (w, m) in &layer {
            let c = u.coeff(w);
            let norm = m.abs().max();
            acc += m * c;
            err += u.error_by_weight[k] * norm;
            if k < u.weight && norm > 0.0 {
                for (l, x) in [(0u8, &a), (1u8, &b)] {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push((w2, m * x));
                }
            }
        }
        layer = next;
    }
    Ok(ConnectionMatrix {
        matrix: to_complex(&acc),
        method: Method::UniversalSeries,
        error_estimate: err,
        warnings,
    })
}

/// Matrix-valued polynomial in the symbol `pi*i`: entry `sum_k C_k (pi i)^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiPolyMatrix {
    pub coeffs: Vec<QMatrix>,
}

impl PiPolyMatrix {
    pub fn mul(&self, other: &PiPolyMatrix) -> PiPolyMatrix {
        let n = self.coeffs[0].size();
        let mut out = vec![QMatrix::zeros(n); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            for (j, y) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
        PiPolyMatrix { coeffs: out }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(QMatrix::is_zero) {
            self.coeffs.pop();
        }
        self
    }

    pub fn evaluate(&self) -> DMatrix<Complex64> {
        let n = self.coeffs[0].size();
        let pi_i = Complex64::new(0.0, std::f64::consts::PI);
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        let mut p = Complex64::one();
        for c in &self.coeffs {
            acc += c.to_f64().map(|x| Complex64::new(x, 0.0) * p);
            p *= pi_i;
        }
        acc
    }

    /// Entries as strings like `1 + 1/2*(pi i)^2`.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        let n = self.coeffs[0].size();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let parts: Vec<String> = self
                            .coeffs
                            .iter()
                            .enumerate()
                            .filter(|(_, c)| !c.get(i, j).is_zero())
                            .map(|(k, c)| {
                                let v = crate::qseries::format_rational(c.get(i, j));
                                match k {
                                    0 => v,
                                    1 => format!("{v}*(pi i)"),
                                    _ => format!("{v}*(pi i)^{k}"),
                                }
                            })
                            .collect();
                        if parts.is_empty() {
                            "0".into()
                        } else {
                            parts.join(" + ")
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `exp(c * pi i * N)` as an exact polynomial in `pi i`.
pub fn exp_pi_i(res: &QMatrix, c: &Rational) -> Result<PiPolyMatrix> {
    let idx = res.nilpotency_index().ok_or(KzError::NotNilpotent)?;
    let n = res.size();
    let mut coeffs = vec![QMatrix::identity(n)];
    let mut term = QMatrix::identity(n);
    for k in 1..idx {
        term = term.mul(res).scale(&(c / Rational::from_integer(k.into())));
        coeffs.push(term.clone());
    }
    Ok(PiPolyMatrix { coeffs }.trimmed())
}

/// Half-Dehn twist monodromy `exp(pi i Res)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfDehn {
    pub exact: PiPolyMatrix,
    pub numeric: DMatrix<Complex64>,
}

pub fn half_dehn_monodromy(res: &QMatrix) -> Result<HalfDehn> {
    let exact = exp_pi_i(res, &Rational::one())?;
    let numeric = exact.evaluate();
    Ok(HalfDehn { exact, numeric })
}

/// Evaluates a groupoid word as the product `M_1 M_2 .. M_k` in word order,
/// with `exp(pi i Res_e)` for half-Dehn twists and `Phi(Res_e, Res_e')` for
/// fusing moves.
pub fn evaluate_groupoid_word(
    word: &GroupoidWord,
    residues: &BTreeMap<EdgeId, QMatrix>,
    u: &UniversalAssociator,
) -> Result<ConnectionMatrix> {
    let get = |index: usize, edge: EdgeId| residues.get(&edge).ok_or(KzError::MissingResidue { index, edge });
    let size = residues.values().next().map_or(1, QMatrix::size);
    let mut acc = DMatrix::<Complex64>::identity(size, size);
    let mut err = 0.0;
    let mut warnings = Vec::new();
    for (index, m) in word.moves.iter().enumerate() {
        let factor = match m.kind {
            MoveKind::HalfDehn { edge } => half_dehn_monodromy(get(index, edge)?)?.numeric,
            MoveKind::Fusing { edge, target_edge } => {
                let pair = NilpotentPair::new(get(index, edge)?.clone(), get(index, target_edge)?.clone())?;
                let c = specialize_associator(u, &pair)?;
                err += c.error_estimate;
                warnings.extend(c.warnings);
                c.matrix
            }
            MoveKind::Simple { .. } => return Err(KzError::UnsupportedMove { index }),
        };
        if factor.nrows() != size {
            return Err(KzError::SizeMismatch(size, factor.nrows()));
        }
        acc = &acc * &factor;
    }
    Ok(ConnectionMatrix {
        matrix: acc,
        method: Method::Product,
        error_estimate: err,
        warnings,
    })
}

/// Complex matrix as nested `[re, im]` pairs.
pub fn complex_matrix_json(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Rational to double, for reporting.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::{rat, rat_int};
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn universal() -> &'static UniversalAssociator {
        static U: OnceLock<UniversalAssociator> = OnceLock::new();
        U.get_or_init(|| universal_associator(6, &OdeOptions::default()).unwrap())
    }

    #[test]
    fn trivial_pairs() {
        let z = QMatrix::zeros(3);
        let phi = ode_connection_matrix(&NilpotentPair::new(z.clone(), z.clone()).unwrap(), &OdeOptions::default())
            .unwrap();
        assert!(phi.max_deviation(&DMatrix::identity(3, 3)) < 1e-12);
        let a = QMatrix::elementary(3, 0, 1).add(&QMatrix::elementary(3, 1, 2).scale(&rat(3, 2)));
        let phi = ode_connection_matrix(&NilpotentPair::new(a, z).unwrap(), &OdeOptions::default()).unwrap();
        assert!(phi.max_deviation(&DMatrix::identity(3, 3)) < 1e-9);
    }

    #[test]
    fn elementary_pair_gives_zeta2() {
        let phi = ode_connection_matrix(&NilpotentPair::elementary_3x3(), &OdeOptions::default()).unwrap();
        let e = phi.matrix[(0, 2)];
        assert!((e.re - COEFF_AB_SIGN * PI * PI / 6.0).abs() < 1e-6, "{e}");
        assert!(phi.unipotence_defect() < 1e-5);
    }

    #[test]
    fn non_nilpotent_rejected() {
        let mut m = QMatrix::zeros(2);
        m.set(0, 0, rat_int(1));
        assert_eq!(NilpotentPair::new(m, QMatrix::zeros(2)).unwrap_err(), KzError::NotNilpotent);
    }

    #[test]
    fn universal_low_weight() {
        let u = universal();
        assert!((u.coeff(&[]) - 1.0).abs() < 1e-10);
        assert!(u.coeff(&[0]).abs() < 1e-8 && u.coeff(&[1]).abs() < 1e-8);
        let z2 = PI * PI / 6.0;
        assert!((u.coeff(&[0, 1]) - COEFF_AB_SIGN * z2).abs() < 1e-6);
        assert!((u.coeff(&[0, 1]) + u.coeff(&[1, 0])).abs() < 1e-6);
        // word a^(s-1) b: (-1) zeta(s); a b a b: zeta(2,2)
        for s in 2..=6u32 {
            let mut w = vec![0u8; s as usize - 1];
            w.push(1);
            assert!((u.coeff(&w) + mzv(&[s]).unwrap()).abs() < 1e-6, "s={s}");
        }
        assert!((u.coeff(&[0, 1, 0, 1]) - mzv(&[2, 2]).unwrap()).abs() < 1e-6);
        assert!((u.coeff(&[0, 0, 1, 1]) - mzv(&[3, 1]).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn specialization_matches_ode() {
        let pair = NilpotentPair::elementary_3x3();
        let s = specialize_associator(universal(), &pair).unwrap();
        let o = ode_connection_matrix(&pair, &OdeOptions::default()).unwrap();
        assert!(s.warnings.is_empty());
        assert!(s.max_deviation(&o.matrix) < 1e-5);
        let a = QMatrix::elementary(2, 0, 1);
        let same = NilpotentPair::new(a.clone(), a).unwrap();
        let s = specialize_associator(universal(), &same).unwrap();
        assert!(s.max_deviation(&DMatrix::identity(2, 2)) < 1e-6);
    }

    #[test]
    fn half_dehn_exact() {
        let n = QMatrix::elementary(2, 0, 1);
        let h = half_dehn_monodromy(&n).unwrap();
        assert_eq!(h.exact.coeffs, vec![QMatrix::identity(2), n.clone()]);
        assert_eq!(h.exact.to_strings()[0][1], "1*(pi i)");
        let n3 = QMatrix::elementary(3, 0, 1).add(&QMatrix::elementary(3, 1, 2));
        let h = half_dehn_monodromy(&n3).unwrap();
        let full = exp_pi_i(&n3, &rat_int(2)).unwrap();
        assert_eq!(h.exact.mul(&h.exact), full);
        assert_eq!(half_dehn_monodromy(&QMatrix::zeros(2)).unwrap().exact.coeffs, vec![QMatrix::identity(2)]);
    }
}
