//! Parallel transport of `d - sum_i E_{i,i+1} w_i` along piecewise paths.
//!
//! The transport matrix `T` solves `T' = Omega T`, so entry `(i, j+1)` is the
//! iterated integral of `w_i .. w_j` with `w_i` at the latest time and
//! `T(path2 * path1) = T(path2) T(path1)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{max_abs_diff, ode_connection_matrix, KzError, NilpotentPair, OdeOptions, QMatrix, Result};
use crate::qseries::Rational;

/// `sum_p r_p dz / (z - p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Form {
    pub poles: Vec<(Complex64, Complex64)>,
}

impl Form {
    /// `dz / (z - p)`.
    pub fn dlog(p: Complex64) -> Self {
        Form {
            poles: vec![(p, Complex64::new(1.0, 0.0))],
        }
    }

    /// `dz / z`.
    pub fn at_zero() -> Self {
        Form::dlog(Complex64::new(0.0, 0.0))
    }

    /// `dz / (1 - z)`.
    pub fn at_one() -> Self {
        Form {
            poles: vec![(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0))],
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.poles.iter().map(|(p, r)| r / (z - p)).sum()
    }

    /// Residue at `p`, zero if `p` is not a pole.
    pub fn residue(&self, p: Complex64) -> Complex64 {
        self.poles
            .iter()
            .filter(|(q, _)| (q - p).norm() < 1e-14)
            .map(|(_, r)| *r)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Line { from: Complex64, to: Complex64 },
    /// `center + radius e^(i theta)` for `theta` from `theta0` to `theta1`.
    Arc {
        center: Complex64,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
}

impl Segment {
    /// Point and velocity at parameter `s` in `[0, 1]`.
    pub fn point(&self, s: f64) -> (Complex64, Complex64) {
        match *self {
            Segment::Line { from, to } => (from + (to - from) * s, to - from),
            Segment::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let th = theta0 + (theta1 - theta0) * s;
                let e = Complex64::from_polar(radius, th);
                (center + e, e * Complex64::new(0.0, theta1 - theta0))
            }
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point(0.0).0
    }

    pub fn end(&self) -> Complex64 {
        self.point(1.0).0
    }

    /// Arc through the half-plane to the left of the chord from `a` to `b`.
    pub fn left_semicircle(a: Complex64, b: Complex64) -> Segment {
        let center = (a + b) / 2.0;
        let theta0 = (a - center).arg();
        Segment::Arc {
            center,
            radius: (a - center).norm(),
            theta0,
            theta1: theta0 - std::f64::consts::PI,
        }
    }

    /// Arc through the half-plane to the right of the chord from `a` to `b`.
    pub fn right_semicircle(a: Complex64, b: Complex64) -> Segment {
        let center = (a + b) / 2.0;
        let theta0 = (a - center).arg();
        Segment::Arc {
            center,
            radius: (a - center).norm(),
            theta0,
            theta1: theta0 + std::f64::consts::PI,
        }
    }

    /// Distance from `p` to the segment.
    pub fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            Segment::Line { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                let s = if len2 == 0.0 {
                    0.0
                } else {
                    (((p - from) * d.conj()).re / len2).clamp(0.0, 1.0)
                };
                (from + d * s - p).norm()
            }
            Segment::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let v = p - center;
                let ends = (self.start() - p).norm().min((self.end() - p).norm());
                if v.norm() == 0.0 {
                    return radius;
                }
                // is the direction of p within the swept angle?
                let (lo, hi) = if theta0 <= theta1 { (theta0, theta1) } else { (theta1, theta0) };
                let tau = std::f64::consts::TAU;
                let mut a = v.arg();
                while a < lo {
                    a += tau;
                }
                while a - tau >= lo {
                    a -= tau;
                }
                if a <= hi {
                    (v.norm() - radius).abs().min(ends)
                } else {
                    ends
                }
            }
        }
    }
}

/// Forms `w_1 .. w_m` and a piecewise path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormPath {
    pub forms: Vec<Form>,
    pub segments: Vec<Segment>,
}

impl FormPath {
    pub fn start(&self) -> Option<Complex64> {
        self.segments.first().map(Segment::start)
    }

    pub fn end(&self) -> Option<Complex64> {
        self.segments.last().map(Segment::end)
    }

    fn check(&self, margin: f64) -> Result<()> {
        for (i, w) in self.segments.windows(2).enumerate() {
            if (w[0].end() - w[1].start()).norm() > 1e-9 {
                return Err(KzError::Discontinuous(i + 1));
            }
        }
        for seg in &self.segments {
            for f in &self.forms {
                for (p, _) in &f.poles {
                    let d = seg.distance_to(*p);
                    if d < margin {
                        return Err(KzError::PoleProximity {
                            pole: format!("{p}"),
                            distance: d,
                            margin,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    pub tol: f64,
    /// Smallest allowed distance between the path and a pole.
    pub pole_margin: f64,
    pub nodes: usize,
    pub max_depth: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            tol: 1e-12,
            pole_margin: 1e-3,
            nodes: 16,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub matrix: DMatrix<Complex64>,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `P_n(z)` and `P_n'(z)`.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// Legendre values `P_0 .. P_n` at `z`.
fn legendre_all(n: usize, z: f64) -> Vec<f64> {
    let mut p = vec![1.0, z];
    for k in 2..=n {
        let kf = k as f64;
        p.push(((2.0 * kf - 1.0) * z * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf);
    }
    p.truncate(n + 1);
    p
}

/// Quadrature rule with the matrix `S` of indefinite integrals:
/// `(S g)_k ~ int_{-1}^{x_k} g`.
struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
    s: Vec<Vec<f64>>,
}

impl Rule {
    fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        // g = sum_j c_j P_j with c_j = (2j+1)/2 sum_l w_l P_j(x_l) g_l, and
        // int_{-1}^x P_j = (P_{j+1} - P_{j-1})/(2j+1), x + 1 for j = 0
        let at_nodes: Vec<Vec<f64>> = x.iter().map(|&z| legendre_all(n, z)).collect();
        let mut s = vec![vec![0.0; n]; n];
        for k in 0..n {
            let p = &at_nodes[k];
            let integ: Vec<f64> = (0..n)
                .map(|j| {
                    if j == 0 {
                        x[k] + 1.0
                    } else {
                        (p[j + 1] - p[j - 1]) / (2.0 * j as f64 + 1.0)
                    }
                })
                .collect();
            for l in 0..n {
                s[k][l] = (0..n)
                    .map(|j| integ[j] * w[l] * at_nodes[l][j] * (2.0 * j as f64 + 1.0) / 2.0)
                    .sum();
            }
        }
        Rule { x, w, s }
    }
}

fn panel(rule: &Rule, forms: &[Form], seg: &Segment, s0: f64, s1: f64) -> DMatrix<Complex64> {
    let m = forms.len();
    let n = rule.x.len();
    let half = (s1 - s0) / 2.0;
    let mid = (s0 + s1) / 2.0;
    // f[i][k] = w_i(gamma) gamma' at node k, including the Jacobian
    let f: Vec<Vec<Complex64>> = forms
        .iter()
        .map(|form| {
            rule.x
                .iter()
                .map(|&xk| {
                    let (z, dz) = seg.point(mid + half * xk);
                    form.eval(z) * dz * half
                })
                .collect()
        })
        .collect();
    let mut t = DMatrix::<Complex64>::identity(m + 1, m + 1);
    for j in 0..m {
        // g holds I_{i+1..j} at the nodes, starting from the constant 1
        let mut g = vec![Complex64::new(1.0, 0.0); n];
        for i in (0..=j).rev() {
            let h: Vec<Complex64> = (0..n).map(|k| f[i][k] * g[k]).collect();
            t[(i, j + 1)] = (0..n).map(|k| h[k] * rule.w[k]).sum();
            if i > 0 {
                g = (0..n)
                    .map(|k| (0..n).map(|l| h[l] * rule.s[k][l]).sum())
                    .collect();
            }
        }
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    rule: &Rule,
    forms: &[Form],
    seg: &Segment,
    s0: f64,
    s1: f64,
    whole: DMatrix<Complex64>,
    opts: &TransportOptions,
    depth: usize,
    stats: &mut (f64, usize),
) -> DMatrix<Complex64> {
    let mid = (s0 + s1) / 2.0;
    let left = panel(rule, forms, seg, s0, mid);
    let right = panel(rule, forms, seg, mid, s1);
    let split = &right * &left;
    let diff = max_abs_diff(&split, &whole);
    let scale = 1.0 + split.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if diff <= opts.tol * scale || depth >= opts.max_depth {
        stats.0 += diff;
        stats.1 += 2;
        return split;
    }
    let l = adaptive(rule, forms, seg, s0, mid, left, opts, depth + 1, stats);
    let r = adaptive(rule, forms, seg, mid, s1, right, opts, depth + 1, stats);
    r * l
}

/// Transport matrix along the path, `(m+1) x (m+1)` upper unitriangular.
pub fn nilpotent_transport(fp: &FormPath, opts: &TransportOptions) -> Result<TransportResult> {
    fp.check(opts.pole_margin)?;
    let rule = Rule::new(opts.nodes);
    let m = fp.forms.len();
    let mut total = DMatrix::<Complex64>::identity(m + 1, m + 1);
    let mut stats = (0.0, 0);
    for seg in &fp.segments {
        let whole = panel(&rule, &fp.forms, seg, 0.0, 1.0);
        let t = adaptive(&rule, &fp.forms, seg, 0.0, 1.0, whole, opts, 0, &mut stats);
        total = t * total;
    }
    Ok(TransportResult {
        matrix: total,
        error_estimate: stats.0,
        panels: stats.1,
    })
}

/// Largest entry difference of the two transports; requires equal forms and
/// endpoints.
pub fn homotopy_invariance_check(p1: &FormPath, p2: &FormPath, opts: &TransportOptions) -> Result<f64> {
    let same_ends = match (p1.start(), p2.start(), p1.end(), p2.end()) {
        (Some(a), Some(b), Some(c), Some(d)) => (a - b).norm() < 1e-9 && (c - d).norm() < 1e-9,
        _ => false,
    };
    if !same_ends || p1.forms != p2.forms {
        return Err(KzError::Incomparable);
    }
    let t1 = nilpotent_transport(p1, opts)?;
    let t2 = nilpotent_transport(p2, opts)?;
    Ok(max_abs_diff(&t1.matrix, &t2.matrix))
}

/// Regularised transport from 0 to 1 along the unit interval for forms with
/// real rational residues at 0 and 1 only: the connection matrix of
/// `A = sum res_0(w_i) E_{i,i+1}`, `B = sum res_1(w_i) E_{i,i+1}`.
pub fn regularized_unit_interval_transport(
    residues: &[(Rational, Rational)],
    opts: &OdeOptions,
) -> Result<super::ConnectionMatrix> {
    let m = residues.len();
    let mut a = QMatrix::zeros(m + 1);
    let mut b = QMatrix::zeros(m + 1);
    for (i, (r0, r1)) in residues.iter().enumerate() {
        a.set(i, i + 1, r0.clone());
        b.set(i, i + 1, r1.clone());
    }
    ode_connection_matrix(&NilpotentPair::new(a, b)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::rat_int;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadrature_rule() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((int - 2.0 / 7.0).abs() < 1e-14);
        let rule = Rule::new(8);
        for k in 0..8 {
            let v: f64 = (0..8).map(|l| rule.s[k][l] * rule.x[l].powi(3)).sum();
            assert!((v - (rule.x[k].powi(4) - 1.0) / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn single_form_is_log() {
        let fp = FormPath {
            forms: vec![Form::at_zero()],
            segments: vec![Segment::Line {
                from: c(1.0, 0.0),
                to: c(2.0, 0.0),
            }],
        };
        let t = nilpotent_transport(&fp, &TransportOptions::default()).unwrap();
        assert!((t.matrix[(0, 1)] - c(2f64.ln(), 0.0)).norm() < 1e-12);
        // loop around 0 gives 2 pi i
        let fp = FormPath {
            forms: vec![Form::at_zero()],
            segments: vec![Segment::Arc {
                center: c(0.0, 0.0),
                radius: 1.0,
                theta0: 0.0,
                theta1: 2.0 * PI,
            }],
        };
        let t = nilpotent_transport(&fp, &TransportOptions::default()).unwrap();
        assert!((t.matrix[(0, 1)] - c(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn iterated_integral_on_interval() {
        // int_{e<t1<t2<1-e} dt1/(1-t1) dt2/t2 tends to zeta(2)
        let e = 1e-4;
        let fp = FormPath {
            forms: vec![Form::at_zero(), Form::at_one()],
            segments: vec![Segment::Line {
                from: c(e, 0.0),
                to: c(1.0 - e, 0.0),
            }],
        };
        let opts = TransportOptions {
            pole_margin: 1e-5,
            ..Default::default()
        };
        let t = nilpotent_transport(&fp, &opts).unwrap();
        // exact value on [e, 1-e]: Li2(1-e) - ln(1-e)ln(e)... checked loosely
        assert!((t.matrix[(0, 2)].re - PI * PI / 6.0).abs() < 5e-3);
        let reg = regularized_unit_interval_transport(&[(rat_int(1), rat_int(0)), (rat_int(0), rat_int(-1))], &OdeOptions::default())
            .unwrap();
        assert!((reg.matrix[(0, 2)].re - PI * PI / 6.0).abs() < 1e-6);
    }

    #[test]
    fn pole_margin_and_continuity() {
        let fp = FormPath {
            forms: vec![Form::at_zero()],
            segments: vec![Segment::Line {
                from: c(-1.0, 0.0),
                to: c(1.0, 0.0),
            }],
        };
        assert!(matches!(
            nilpotent_transport(&fp, &TransportOptions::default()),
            Err(KzError::PoleProximity { .. })
        ));
        let fp = FormPath {
            forms: vec![Form::at_zero()],
            segments: vec![
                Segment::Line {
                    from: c(1.0, 1.0),
                    to: c(2.0, 1.0),
                },
                Segment::Line {
                    from: c(3.0, 1.0),
                    to: c(4.0, 1.0),
                },
            ],
        };
        assert_eq!(
            nilpotent_transport(&fp, &TransportOptions::default()).unwrap_err(),
            KzError::Discontinuous(1)
        );
    }

    #[test]
    fn homotopy_classes() {
        let forms = vec![Form::at_zero(), Form::at_one(), Form::at_zero()];
        let a = c(-0.5, 0.5);
        let b = c(1.5, 0.5);
        let line = FormPath {
            forms: forms.clone(),
            segments: vec![Segment::Line { from: a, to: b }],
        };
        let upper = FormPath {
            forms: forms.clone(),
            segments: vec![Segment::left_semicircle(a, b)],
        };
        let lower = FormPath {
            forms,
            segments: vec![Segment::right_semicircle(a, b)],
        };
        let opts = TransportOptions::default();
        assert!(homotopy_invariance_check(&line, &upper, &opts).unwrap() < 1e-8);
        assert!(homotopy_invariance_check(&line, &lower, &opts).unwrap() > 0.1);
        assert!((Segment::left_semicircle(a, b).point(0.5).0 - c(0.5, 1.5)).norm() < 1e-12);
    }
}
