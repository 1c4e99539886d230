use nalgebra::DMatrix;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::Value;
use thiserror::Error;

use crate::qseries::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QMatrixError {
    #[error("matrix must be a nonempty square array of rows")]
    Shape,
    #[error("bad matrix entry {0:?}")]
    Entry(String),
}

/// Dense square matrix over the rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn zeros(n: usize) -> Self {
        QMatrix {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Matrix unit `E_ij` (0-based).
    pub fn elementary(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m.set(i, j, Rational::one());
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, QMatrixError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(QMatrixError::Shape);
        }
        Ok(QMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Parses `[[1, "1/2"], [0, 0]]`: numbers or rational strings.
    pub fn from_json(v: &Value) -> Result<Self, QMatrixError> {
        let rows = v.as_array().ok_or(QMatrixError::Shape)?;
        let rows = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or(QMatrixError::Shape)?
                    .iter()
                    .map(|e| {
                        let s = match e {
                            Value::String(s) => s.clone(),
                            Value::Number(n) => n.to_string(),
                            other => return Err(QMatrixError::Entry(other.to_string())),
                        };
                        parse_rational(&s).map_err(|_| QMatrixError::Entry(s))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            (0..self.n)
                .map(|i| {
                    Value::Array(
                        (0..self.n)
                            .map(|j| Value::String(format_rational(self.get(i, j))))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.n + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.n, other.n, "matrix size mismatch");
        QMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> QMatrix {
        QMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.n, other.n, "matrix size mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Conjugate `S M S^-1`, `None` if `S` is singular.
    pub fn conjugate(&self, s: &QMatrix) -> Option<QMatrix> {
        Some(s.mul(self).mul(&s.inverse()?))
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Option<QMatrix> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            for j in 0..n {
                a.data.swap(piv * n + j, col * n + j);
                inv.data.swap(piv * n + j, col * n + j);
            }
            let p = a.get(col, col).clone();
            for j in 0..n {
                a.data[col * n + j] = &a.data[col * n + j] / &p;
                inv.data[col * n + j] = &inv.data[col * n + j] / &p;
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in 0..n {
                    let (x, y) = (a.data[col * n + j].clone(), inv.data[col * n + j].clone());
                    a.data[r * n + j] -= &f * x;
                    inv.data[r * n + j] -= &f * y;
                }
            }
        }
        Some(inv)
    }

    /// Smallest `k` with `M^k = 0`.
    pub fn nilpotency_index(&self) -> Option<usize> {
        let mut p = Self::identity(self.n);
        for k in 1..=self.n {
            p = p.mul(self);
            if p.is_zero() {
                return Some(k);
            }
        }
        None
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64().unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::{rat, rat_int};

    #[test]
    fn parse_and_invert() {
        let v: Value = serde_json::from_str(r#"[[2, "1/2"], [0, 1]]"#).unwrap();
        let m = QMatrix::from_json(&v).unwrap();
        assert_eq!(m.get(0, 1), &rat(1, 2));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), QMatrix::identity(2));
        assert_eq!(QMatrix::from_json(&m.to_json()).unwrap(), m);
        assert!(QMatrix::zeros(2).inverse().is_none());
        let bad: Value = serde_json::from_str("[[1, 2]]").unwrap();
        assert_eq!(QMatrix::from_json(&bad), Err(QMatrixError::Shape));
    }

    #[test]
    fn nilpotency() {
        let n = QMatrix::elementary(3, 0, 1).add(&QMatrix::elementary(3, 1, 2));
        assert_eq!(n.nilpotency_index(), Some(3));
        assert_eq!(QMatrix::zeros(2).nilpotency_index(), Some(1));
        assert_eq!(QMatrix::identity(2).nilpotency_index(), None);
        let s = QMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(2), rat_int(0)],
            vec![rat_int(0), rat_int(1), rat_int(3)],
            vec![rat_int(1), rat_int(0), rat_int(1)],
        ])
        .unwrap();
        assert_eq!(n.conjugate(&s).unwrap().nilpotency_index(), Some(3));
    }
}
