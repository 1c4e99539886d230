//! Multiple zeta values `zeta(s1, .., sk) = sum_{n1 > .. > nk >= 1} prod n_i^-s_i`,
//! convergent when `s1 >= 2`.
//!
//! Evaluation splits the iterated integral over `[0, 1]` at `1/2`; both halves
//! are multiple polylogarithms at `1/2`, whose nested sums converge like `2^-n`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MzvError {
    #[error("empty index")]
    Empty,
    #[error("indices must be positive")]
    ZeroIndex,
    #[error("zeta({0}) diverges: the first index must be at least 2")]
    Divergent(String),
}

/// Terms kept in the nested sums at `1/2`; the tail is below `2^-N` times a
/// polynomial in `N`.
const TERMS: usize = 90;

/// Letters of the iterated-integral word: `false` for `dt/t`, `true` for `dt/(1-t)`.
fn to_word(s: &[u32]) -> Vec<bool> {
    let mut w = Vec::new();
    for &si in s {
        w.extend(std::iter::repeat_n(false, si as usize - 1));
        w.push(true);
    }
    w
}

/// Indices of a word ending in `true`.
fn to_indices(w: &[bool]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut run = 1;
    for &l in w {
        if l {
            out.push(run);
            run = 1;
        } else {
            run += 1;
        }
    }
    out
}

/// `Li_{s1..sk}(1/2) = sum_{n1 > .. > nk} 2^-n1 prod n_i^-s_i`.
fn polylog_half(s: &[u32]) -> f64 {
    let k = s.len();
    if k == 0 {
        return 1.0;
    }
    // inner[i] = sum over n_{i+1} > .. > n_k with n_{i+1} < current n
    let mut inner = vec![0.0; k + 1];
    let mut total = 0.0;
    let mut pow = 1.0;
    for n in 1..=TERMS {
        pow *= 0.5;
        let nf = n as f64;
        // value of the chain from index i starting exactly at n
        let mut at_n = vec![0.0; k + 1];
        at_n[k] = 1.0;
        for i in (0..k).rev() {
            let tail = if i + 1 == k { 1.0 } else { inner[i + 1] };
            at_n[i] = nf.powi(-(s[i] as i32)) * tail;
        }
        total += pow * at_n[0];
        for i in 1..k {
            inner[i] += at_n[i];
        }
    }
    total
}

pub fn mzv(s: &[u32]) -> Result<f64, MzvError> {
    if s.is_empty() {
        return Err(MzvError::Empty);
    }
    if s.contains(&0) {
        return Err(MzvError::ZeroIndex);
    }
    if s[0] < 2 {
        let idx: Vec<String> = s.iter().map(u32::to_string).collect();
        return Err(MzvError::Divergent(idx.join(",")));
    }
    let w = to_word(s);
    let n = w.len();
    let mut total = 0.0;
    for j in 0..=n {
        // t -> 1 - t maps [1/2, 1] to [0, 1/2], swapping the letters and
        // reversing their order; the sign changes cancel
        let head: Vec<bool> = w[..j].iter().rev().map(|l| !l).collect();
        total += polylog_half(&to_indices(&head)) * polylog_half(&to_indices(&w[j..]));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `sum n^-s` summed directly with an Euler-Maclaurin tail.
    fn zeta_direct(s: u32) -> f64 {
        let n = 2000usize;
        let sf = s as f64;
        let head: f64 = (1..=n).rev().map(|k| (k as f64).powf(-sf)).sum();
        let nf = n as f64;
        let tail = nf.powf(1.0 - sf) / (sf - 1.0) - 0.5 * nf.powf(-sf) + sf / 12.0 * nf.powf(-sf - 1.0)
            - sf * (sf + 1.0) * (sf + 2.0) / 720.0 * nf.powf(-sf - 3.0);
        head + tail
    }

    /// `sum_{n > m} 1/(n^2 m)` as `sum H_{n-1}/n^2` with the integral tail.
    fn zeta21_direct() -> f64 {
        let n = 1_000_000usize;
        let mut h = 0.0;
        let mut terms = Vec::with_capacity(n);
        for k in 1..=n {
            let kf = k as f64;
            terms.push(h / (kf * kf));
            h += 1.0 / kf;
        }
        let head: f64 = terms.iter().rev().sum();
        let nf = n as f64;
        let euler_gamma = 0.577_215_664_901_532_9;
        head + (nf.ln() + euler_gamma + 1.0) / nf
    }

    #[test]
    fn single_zetas() {
        assert!((mzv(&[2]).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((mzv(&[4]).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
        for s in 3..=8 {
            assert!((mzv(&[s]).unwrap() - zeta_direct(s)).abs() < 1e-11, "s={s}");
        }
    }

    #[test]
    fn double_zetas() {
        let z3 = mzv(&[3]).unwrap();
        assert!((mzv(&[2, 1]).unwrap() - z3).abs() < 1e-12);
        assert!((mzv(&[2, 1]).unwrap() - zeta21_direct()).abs() < 1e-9);
        // zeta(2,2) = (zeta(2)^2 - zeta(4)) / 2 by stuffle
        let z2 = mzv(&[2]).unwrap();
        let z4 = mzv(&[4]).unwrap();
        assert!((mzv(&[2, 2]).unwrap() - (z2 * z2 - z4) / 2.0).abs() < 1e-12);
        // zeta(2,1,1) = zeta(4) by duality
        assert!((mzv(&[2, 1, 1]).unwrap() - z4).abs() < 1e-12);
    }

    #[test]
    fn rejects_divergent() {
        assert!(matches!(mzv(&[1, 2]), Err(MzvError::Divergent(_))));
        assert_eq!(mzv(&[]), Err(MzvError::Empty));
        assert_eq!(mzv(&[2, 0]), Err(MzvError::ZeroIndex));
    }
}
