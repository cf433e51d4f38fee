//! Exact linear algebra over the rationals, plus modular tools for large
//! systems.

pub mod modp;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::Scalar;

/// Reduced row echelon form of a rational matrix.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub ncols: usize,
    pub rows: Vec<Vec<Scalar>>,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|c| !self.pivots.contains(c)).collect()
    }

    /// One basis vector per free column (1 there, 0 at other free columns).
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        self.free_columns()
            .into_iter()
            .map(|f| {
                let mut v = vec![Scalar::zero(); self.ncols];
                v[f] = Scalar::one();
                for (r, &pc) in self.rows.iter().zip(&self.pivots) {
                    v[pc] = -r[f].clone();
                }
                v
            })
            .collect()
    }
}

fn integer_row(row: &[Scalar]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    row.iter().map(|c| (c * BigRational::from_integer(l.clone())).to_integer()).collect()
}

/// Fraction-free (Bareiss) elimination followed by exact back substitution.
pub fn rref(rows: &[Vec<Scalar>], ncols: usize) -> Echelon {
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| integer_row(r)).collect();
    for r in &m {
        assert_eq!(r.len(), ncols, "row length mismatch");
    }
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(pr) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        for i in r + 1..nrows {
            if m[i][c].is_zero() {
                // still needs the Bareiss scaling to keep divisibility
                for j in c + 1..ncols {
                    let v = &m[r][c] * &m[i][j];
                    m[i][j] = v / &prev;
                }
                continue;
            }
            for j in c + 1..ncols {
                let v = &m[r][c] * &m[i][j] - &m[i][c] * &m[r][j];
                m[i][j] = v / &prev;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    // back substitution to reduced form
    let mut out: Vec<Vec<Scalar>> = m
        .into_iter()
        .take(pivots.len())
        .map(|row| row.into_iter().map(BigRational::from_integer).collect())
        .collect();
    for i in (0..pivots.len()).rev() {
        let pc = pivots[i];
        let inv = out[i][pc].recip();
        for x in out[i].iter_mut() {
            *x = &*x * &inv;
        }
        for k in 0..i {
            let f = out[k][pc].clone();
            if f.is_zero() {
                continue;
            }
            for j in pc..ncols {
                let v = &out[i][j] * &f;
                out[k][j] -= v;
            }
        }
    }
    Echelon { ncols, rows: out, pivots }
}

pub fn rank(rows: &[Vec<Scalar>], ncols: usize) -> usize {
    rref(rows, ncols).rank()
}

pub fn nullspace(rows: &[Vec<Scalar>], ncols: usize) -> Vec<Vec<Scalar>> {
    rref(rows, ncols).nullspace()
}

/// Exact linear system `A x = b` over named unknowns.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub unknowns: Vec<String>,
    pub rows: Vec<Vec<Scalar>>,
    pub rhs: Vec<Scalar>,
    pub labels: Vec<String>,
}

impl LinearSystem {
    pub fn new(unknowns: Vec<String>) -> LinearSystem {
        LinearSystem { unknowns, ..Default::default() }
    }

    pub fn ncols(&self) -> usize {
        self.unknowns.len()
    }

    pub fn push(&mut self, row: Vec<Scalar>, rhs: Scalar, label: impl Into<String>) {
        assert_eq!(row.len(), self.ncols());
        self.rows.push(row);
        self.rhs.push(rhs);
        self.labels.push(label.into());
    }

    pub fn rank(&self) -> usize {
        rank(&self.rows, self.ncols())
    }

    /// Nullspace of the homogeneous part.
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        nullspace(&self.rows, self.ncols())
    }

    /// Errors if the right-hand side is outside the column space.
    pub fn check_consistent(&self) -> Result<()> {
        if self.rhs.iter().all(|c| c.is_zero()) {
            return Ok(());
        }
        let aug: Vec<Vec<Scalar>> = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| {
                let mut r = r.clone();
                r.push(b.clone());
                r
            })
            .collect();
        let ra = self.rank();
        let rb = rank(&aug, self.ncols() + 1);
        if rb > ra {
            Err(Error::Inconsistent(format!("augmented rank {rb} exceeds rank {ra}")))
        } else {
            Ok(())
        }
    }
}
