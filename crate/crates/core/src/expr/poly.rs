use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use super::var::Var;
use super::{rat, Scalar};
use crate::error::{Error, Result};

/// Power product of variables. Exponents of ordinary variables are
/// nonnegative; the exponent of `u` may be any integer. Zero exponents are
/// never stored and entries are sorted by variable id.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct Monomial(SmallVec<[(Var, i32); 4]>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(SmallVec::new())
    }

    pub fn var(v: Var, e: i32) -> Monomial {
        let mut m = Monomial::one();
        m.set(v, e);
        m
    }

    pub fn from_pairs(pairs: &[(Var, i32)]) -> Monomial {
        let mut m = Monomial::one();
        for &(v, e) in pairs {
            m.set(v, m.exp(v) + e);
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exp(&self, v: Var) -> i32 {
        self.0.iter().find(|(w, _)| *w == v).map_or(0, |&(_, e)| e)
    }

    pub fn set(&mut self, v: Var, e: i32) {
        match self.0.binary_search_by(|(w, _)| w.cmp(&v)) {
            Ok(i) => {
                if e == 0 {
                    self.0.remove(i);
                } else {
                    self.0[i].1 = e;
                }
            }
            Err(i) => {
                if e != 0 {
                    self.0.insert(i, (v, e));
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, i32)> + '_ {
        self.0.iter().copied()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            match a.cmp(&b) {
                Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    if ea + eb != 0 {
                        out.push((a, ea + eb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|&(v, e)| (v, -e)).collect())
    }

    /// `self / other` if every exponent stays valid (nonnegative except `u`).
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let q = self.mul(&other.inverse());
        if q.0.iter().all(|&(v, e)| e > 0 || v.is_u()) {
            Some(q)
        } else {
            None
        }
    }

    pub fn total_degree(&self) -> i32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    /// Total degree ignoring the exponential symbol.
    pub fn degree_without_u(&self) -> i32 {
        self.0.iter().filter(|(v, _)| !v.is_u()).map(|&(_, e)| e).sum()
    }

    pub fn without(&self, v: Var) -> Monomial {
        Monomial(self.0.iter().copied().filter(|&(w, _)| w != v).collect())
    }

    /// Graded order used for polynomial division; a monomial order on
    /// monomials with nonnegative exponents.
    fn cmp_grlex(&self, other: &Monomial) -> Ordering {
        self.total_degree().cmp(&other.total_degree()).then_with(|| {
            // lex: compare by variable ids, larger exponent of earlier variable wins
            let (mut i, mut j) = (0, 0);
            loop {
                match (self.0.get(i), other.0.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some(&(a, ea)), Some(&(b, eb))) => match a.cmp(&b) {
                        Ordering::Less => return if ea > 0 { Ordering::Greater } else { Ordering::Less },
                        Ordering::Greater => return if eb > 0 { Ordering::Less } else { Ordering::Greater },
                        Ordering::Equal => match ea.cmp(&eb) {
                            Ordering::Equal => {
                                i += 1;
                                j += 1;
                            }
                            o => return o,
                        },
                    },
                }
            }
        })
    }

    /// Canonical display order: graded, then lexicographic with variables
    /// ordered by name. Independent of interning order.
    pub fn cmp_display(&self, other: &Monomial) -> Ordering {
        other.total_degree().cmp(&self.total_degree()).then_with(|| {
            let mut names: Vec<Var> = self.0.iter().chain(other.0.iter()).map(|&(v, _)| v).collect();
            names.sort_by(|a, b| a.cmp_name(*b));
            names.dedup();
            for v in names {
                match other.exp(v).cmp(&self.exp(v)) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }

    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> Monomial {
        let mut m = Monomial::one();
        for &(v, e) in &self.0 {
            let w = map(v);
            m.set(w, m.exp(w) + e);
        }
        m
    }
}

/// Sparse multivariate Laurent-in-`u` polynomial with rational coefficients.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Poly {
        Poly::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Scalar) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Poly {
        Poly::term(Monomial::var(v, 1), Scalar::one())
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

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(&Monomial, &Scalar)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly { terms: self.terms.iter().map(|(n, c)| (n.mul(m), c.clone())).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative; `u` carries `du/da = u/2`.
    pub fn derive(&self, v: Var) -> Poly {
        let a = super::a_var();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e != 0 {
                let mut dm = m.clone();
                dm.set(v, e - 1);
                out.add_term(dm, c * rat(e as i64, 1));
            }
            if v == a {
                let k = m.exp(Var::U);
                if k != 0 {
                    out.add_term(m.clone(), c * rat(k as i64, 2));
                }
            }
        }
        out
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exp(v) != 0)
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v)).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn max_exp(&self, v: Var) -> i32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    pub fn min_exp(&self, v: Var) -> i32 {
        self.terms.keys().map(|m| m.exp(v)).min().unwrap_or(0)
    }

    /// Largest monomial dividing every term (for `u`, the minimal exponent,
    /// possibly negative).
    pub fn monomial_content(&self) -> Monomial {
        let mut m = Monomial::one();
        for v in self.vars() {
            let e = self.min_exp(v);
            if v.is_u() || e > 0 {
                m.set(v, e);
            }
        }
        m
    }

    /// Exact division by a monomial. Panics if not divisible.
    pub fn div_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.div(m).expect("monomial divides every term"), c.clone()))
                .collect(),
        }
    }

    fn leading(&self) -> Option<(&Monomial, &Scalar)> {
        self.terms.iter().max_by(|a, b| a.0.cmp_grlex(b.0))
    }

    /// Coefficient of the display-leading term.
    pub fn leading_coeff(&self) -> Scalar {
        self.terms
            .iter()
            .min_by(|a, b| a.0.cmp_display(b.0))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Scalar::zero)
    }

    /// `Some(q)` with `self = q * d` if `d` divides `self` exactly.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        // shift u exponents to be nonnegative so that grlex is a well order
        let su = -self.min_exp(Var::U).min(0);
        let du = -d.min_exp(Var::U).min(0);
        let shift_s = Monomial::var(Var::U, su);
        let shift_d = Monomial::var(Var::U, du);
        let mut rem = self.mul_monomial(&shift_s);
        let dd = d.mul_monomial(&shift_d);
        let (lm, lc) = {
            let (m, c) = dd.leading().unwrap();
            (m.clone(), c.clone())
        };
        let mut q = Poly::zero();
        let mut guard = 0usize;
        while !rem.is_zero() {
            guard += 1;
            if guard > 100_000 {
                return None;
            }
            let (rm, rc) = {
                let (m, c) = rem.leading().unwrap();
                (m.clone(), c.clone())
            };
            let qm = rm.mul(&lm.inverse());
            if qm.iter().any(|(_, e)| e < 0) {
                return None;
            }
            let qc = rc / &lc;
            let t = Poly::term(qm.clone(), qc.clone());
            rem = rem.sub(&dd.mul(&t));
            q.add_term(qm, qc);
        }
        // self * u^su = q * d * u^du  =>  self = q * u^(du - su) * d
        Some(q.mul_monomial(&Monomial::var(Var::U, du - su)))
    }

    pub fn eval(&self, value: &dyn Fn(Var) -> Option<Scalar>) -> Result<Scalar> {
        let mut total = Scalar::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.iter() {
                let x = value(v).ok_or_else(|| Error::MissingValue(v.name().to_string()))?;
                if e < 0 && x.is_zero() {
                    return Err(Error::Singular);
                }
                t *= pow_scalar(&x, e);
            }
            total += t;
        }
        Ok(total)
    }

    pub fn eval_f64(&self, value: &dyn Fn(Var) -> Option<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = scalar_to_f64(c);
            for (v, e) in m.iter() {
                let x = value(v).ok_or_else(|| Error::MissingValue(v.name().to_string()))?;
                t *= x.powi(e);
            }
            total += t;
        }
        Ok(total)
    }

    /// Evaluation modulo the prime `p`; `value` returns residues. `None` if a
    /// negative power of a zero residue or a coefficient denominator divisible
    /// by `p` is met.
    pub fn eval_mod(&self, p: u64, value: &dyn Fn(Var) -> Option<u64>) -> Option<u64> {
        let mut total = 0u64;
        for (m, c) in &self.terms {
            let mut t = crate::linalg::modp::scalar_mod(c, p)?;
            for (v, e) in m.iter() {
                let x = value(v)?;
                let f = if e >= 0 {
                    crate::linalg::modp::pow_mod(x, e as u64, p)
                } else {
                    let inv = crate::linalg::modp::inv_mod(x, p)?;
                    crate::linalg::modp::pow_mod(inv, (-e) as u64, p)
                };
                t = crate::linalg::modp::mul_mod(t, f, p);
            }
            total = crate::linalg::modp::add_mod(total, t, p);
        }
        Some(total)
    }

    /// Substitute a polynomial for an ordinary variable.
    pub fn substitute(&self, v: Var, value: &Poly) -> Poly {
        assert!(!v.is_u(), "cannot substitute for u");
        let mut out = Poly::zero();
        let mut powers: Vec<Poly> = vec![Poly::one()];
        for (m, c) in &self.terms {
            let e = m.exp(v) as usize;
            while powers.len() <= e {
                let next = powers.last().unwrap().mul(value);
                powers.push(next);
            }
            let rest = Poly::term(m.without(v), c.clone());
            out = out.add(&rest.mul(&powers[e]));
        }
        out
    }

    /// Antiderivative in an ordinary variable with zero constant.
    pub fn antiderivative(&self, v: Var) -> Poly {
        assert!(!v.is_u());
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            let mut n = m.clone();
            n.set(v, e + 1);
            out.add_term(n, c / Scalar::from_integer(BigInt::from(e + 1)));
        }
        out
    }

    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.rename(map), c.clone());
        }
        out
    }

    /// Replace each monomial via `f`, which returns a scalar factor and a
    /// new monomial (or `None` to reject the whole map).
    pub fn map_monomials(&self, f: &dyn Fn(&Monomial) -> Option<(Scalar, Monomial)>) -> Option<Poly> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (s, n) = f(m)?;
            out.add_term(n, c * s);
        }
        Some(out)
    }

    /// Least common multiple of coefficient denominators divided by the gcd of
    /// the numerators; multiplying by it gives a primitive integer polynomial.
    pub fn content_inverse(&self) -> Scalar {
        let mut l = BigInt::one();
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            l = l.lcm(c.denom());
            g = g.gcd(c.numer());
        }
        if g.is_zero() {
            return Scalar::one();
        }
        BigRational::new(l, g)
    }

    pub fn sorted_terms_for_display(&self) -> Vec<(&Monomial, &Scalar)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.cmp_display(b.0));
        v
    }
}

pub fn pow_scalar(x: &Scalar, e: i32) -> Scalar {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

pub fn scalar_to_f64(c: &Scalar) -> f64 {
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // huge values: scale down via bit lengths
            let shift = c.numer().bits().max(c.denom().bits()) as i64 - 60;
            let n = (c.numer() >> shift.max(0) as usize).to_f64().unwrap_or(0.0);
            let d = (c.denom() >> shift.max(0) as usize).to_f64().unwrap_or(1.0);
            if c.is_negative() {
                -(n.abs() / d)
            } else {
                n / d
            }
        }
    }
}
