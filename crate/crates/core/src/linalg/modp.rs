//! Arithmetic modulo word-sized primes, incremental row reduction, and
//! rational reconstruction.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::Scalar;

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        None
    } else {
        Some(pow_mod(a, p - 2, p))
    }
}

pub fn bigint_mod(n: &BigInt, p: u64) -> u64 {
    let r = n.mod_floor(&BigInt::from(p));
    r.to_u64().unwrap()
}

pub fn scalar_mod(c: &Scalar, p: u64) -> Option<u64> {
    let d = bigint_mod(c.denom(), p);
    let inv = inv_mod(d, p)?;
    Some(mul_mod(bigint_mod(c.numer(), p), inv, p))
}

/// Deterministic Miller–Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `count` largest primes below 2^62.
pub fn large_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut n = (1u64 << 62) - 1;
    while out.len() < count {
        if is_prime(n) {
            out.push(n);
        }
        n -= 2;
    }
    out
}

/// Row-reduced echelon form over GF(p), grown one row at a time. Rows are
/// stored sparsely with their pivot entry normalized to 1.
#[derive(Clone, Debug)]
pub struct ModRref {
    p: u64,
    ncols: usize,
    rows: Vec<(usize, Vec<(usize, u64)>)>,
    pivot_of_col: Vec<Option<usize>>,
}

impl ModRref {
    pub fn new(p: u64, ncols: usize) -> ModRref {
        ModRref { p, ncols, rows: Vec::new(), pivot_of_col: vec![None; ncols] }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn pivots(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().map(|(c, _)| *c).collect();
        v.sort_unstable();
        v
    }

    /// Adds a dense row; returns true if it raised the rank.
    pub fn add_row(&mut self, mut row: Vec<u64>) -> bool {
        let p = self.p;
        debug_assert_eq!(row.len(), self.ncols);
        for (c, r) in &self.rows {
            let f = row[*c];
            if f != 0 {
                for &(j, v) in r {
                    row[j] = sub_mod(row[j], mul_mod(f, v, p), p);
                }
            }
        }
        let Some(pc) = row.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = inv_mod(row[pc], p).unwrap();
        let new: Vec<(usize, u64)> =
            row.iter().enumerate().filter(|(_, &x)| x != 0).map(|(j, &x)| (j, mul_mod(x, inv, p))).collect();
        for (_, r) in self.rows.iter_mut() {
            if let Ok(k) = r.binary_search_by_key(&pc, |&(j, _)| j) {
                let g = r[k].1;
                *r = merge_sub(r, &new, g, p);
            }
        }
        self.pivot_of_col[pc] = Some(self.rows.len());
        self.rows.push((pc, new));
        true
    }

    /// Reduced form of `row` against the current rows (zero iff in the span).
    pub fn reduce(&self, row: &[u64]) -> Vec<u64> {
        let mut row = row.to_vec();
        for (c, r) in &self.rows {
            let f = row[*c];
            if f != 0 {
                for &(j, v) in r {
                    row[j] = sub_mod(row[j], mul_mod(f, v, self.p), self.p);
                }
            }
        }
        row
    }

    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|&c| self.pivot_of_col[c].is_none()).collect()
    }

    /// Canonical nullspace basis: one vector per free column, with a 1 there
    /// and zeros at the other free columns.
    pub fn nullspace(&self) -> Vec<Vec<u64>> {
        let free = self.free_columns();
        let mut out = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![0u64; self.ncols];
            v[f] = 1;
            for (c, r) in &self.rows {
                if let Ok(k) = r.binary_search_by_key(&f, |&(j, _)| j) {
                    v[*c] = (self.p - r[k].1) % self.p;
                }
            }
            out.push(v);
        }
        out
    }
}

fn merge_sub(a: &[(usize, u64)], b: &[(usize, u64)], g: u64, p: u64) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |x| x.0);
        let cb = b.get(j).map_or(usize::MAX, |x| x.0);
        let (col, val) = if ca < cb {
            i += 1;
            (ca, a[i - 1].1)
        } else if cb < ca {
            j += 1;
            (cb, sub_mod(0, mul_mod(g, b[j - 1].1, p), p))
        } else {
            i += 1;
            j += 1;
            (ca, sub_mod(a[i - 1].1, mul_mod(g, b[j - 1].1, p), p))
        };
        if val != 0 {
            out.push((col, val));
        }
    }
    out
}

/// Chinese remaindering of `(residue, modulus)` into one residue.
pub fn crt(acc: (&BigInt, &BigInt), r: u64, p: u64) -> (BigInt, BigInt) {
    let (a, m) = acc;
    let pm = BigInt::from(p);
    // x = a + m * t,  t = (r - a) / m  mod p
    let m_mod = bigint_mod(m, p);
    let inv = inv_mod(m_mod, p).expect("moduli coprime");
    let diff = sub_mod(r, bigint_mod(a, p), p);
    let t = mul_mod(diff, inv, p);
    let x = a + m * BigInt::from(t);
    (x, m * pm)
}

/// Rational `n/d` with `|n|, d <= sqrt(m/2)` congruent to `a` mod `m`.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<Scalar> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    let (n, d) = if t1.sign() == Sign::Minus { (-r1, -t1) } else { (r1, t1) };
    Some(BigRational::new(n, d))
}
