use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::poly::{Monomial, Poly};
use super::var::{Chart, Var};
use super::{a_var, fmt_scalar, int, Point, Scalar};
use crate::error::{Error, Result};

/// Quotient of two polynomials. Kept in a light normal form: the
/// denominator carries no `u` factor and no monomial factor shared with the
/// numerator, its display-leading coefficient is 1, and exact polynomial
/// quotients are collapsed. Equality is decided by cross-multiplication.
#[derive(Clone)]
pub struct RatExpr {
    num: Poly,
    den: Poly,
}

impl RatExpr {
    pub fn zero() -> RatExpr {
        RatExpr { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> RatExpr {
        RatExpr::from_poly(Poly::one())
    }

    pub fn from_poly(p: Poly) -> RatExpr {
        RatExpr { num: p, den: Poly::one() }
    }

    pub fn constant(c: Scalar) -> RatExpr {
        RatExpr::from_poly(Poly::constant(c))
    }

    pub fn int(n: i64) -> RatExpr {
        RatExpr::constant(int(n))
    }

    pub fn rat(n: i64, d: i64) -> RatExpr {
        RatExpr::constant(super::rat(n, d))
    }

    pub fn var(v: Var) -> RatExpr {
        RatExpr::from_poly(Poly::var(v))
    }

    pub fn named(name: &str) -> RatExpr {
        RatExpr::var(Var::new(name))
    }

    /// `u^k = exp(k a / 2)`.
    pub fn u_pow(k: i32) -> RatExpr {
        RatExpr::from_poly(Poly::term(Monomial::var(Var::U, k), Scalar::one()))
    }

    pub fn new(num: Poly, den: Poly) -> Result<RatExpr> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatExpr::normalized(num, den))
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    fn normalized(num: Poly, den: Poly) -> RatExpr {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RatExpr::zero();
        }
        let mut num = num;
        let mut den = den;
        // move monomial factors: u goes entirely to the numerator
        let cn = num.monomial_content();
        let cd = den.monomial_content();
        if !cn.is_one() || !cd.is_one() {
            num = num.div_monomial(&cn);
            den = den.div_monomial(&cd);
            let q = cn.mul(&cd.inverse());
            let mut up = Monomial::one();
            let mut down = Monomial::one();
            for (v, e) in q.iter() {
                if v.is_u() || e > 0 {
                    up.set(v, e);
                } else {
                    down.set(v, -e);
                }
            }
            num = num.mul_monomial(&up);
            den = den.mul_monomial(&down);
        }
        if let Some(c) = den.as_constant() {
            return RatExpr { num: num.scale(&c.recip()), den: Poly::one() };
        }
        if let Some(q) = num.div_exact(&den) {
            return RatExpr { num: q, den: Poly::one() };
        }
        let lc = den.leading_coeff();
        if !lc.is_one() {
            let inv = lc.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RatExpr { num, den }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    pub fn as_constant(&self) -> Option<Scalar> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    /// The numerator if the denominator is 1.
    pub fn as_poly(&self) -> Option<&Poly> {
        if self.den.as_constant().is_some_and(|c| c.is_one()) {
            Some(&self.num)
        } else {
            None
        }
    }

    pub fn try_div(&self, rhs: &RatExpr) -> Result<RatExpr> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatExpr::normalized(self.num.mul(&rhs.den), self.den.mul(&rhs.num)))
    }

    pub fn recip(&self) -> Result<RatExpr> {
        RatExpr::one().try_div(self)
    }

    pub fn scale(&self, c: &Scalar) -> RatExpr {
        if c.is_zero() {
            return RatExpr::zero();
        }
        RatExpr { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn pow(&self, n: i32) -> Result<RatExpr> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let k = n.unsigned_abs();
        Ok(RatExpr::normalized(base.num.pow(k), base.den.pow(k)))
    }

    /// Partial derivative in `v`; `du/da = u/2`.
    pub fn derive(&self, v: Var) -> RatExpr {
        let dn = self.num.derive(v);
        if self.den.as_constant().is_some() {
            return RatExpr::normalized(dn, self.den.clone());
        }
        let dd = self.den.derive(v);
        if dd.is_zero() {
            return RatExpr::normalized(dn, self.den.clone());
        }
        let top = dn.mul(&self.den).sub(&self.num.mul(&dd));
        RatExpr::normalized(top, self.den.mul(&self.den))
    }

    /// `derive` with the chart membership check.
    pub fn derive_in(&self, chart: &Chart, v: Var) -> Result<RatExpr> {
        chart.check_var(v)?;
        Ok(self.derive(v))
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    /// Antiderivative in `a` with zero constant, valid on
    /// `poly(a) * u^k * poly(others) / poly(others)`.
    pub fn integrate_in_a(&self) -> Result<RatExpr> {
        let a = a_var();
        if self.den.contains_var(a) || self.den.contains_var(Var::U) {
            return Err(Error::NotIntegrable(format!("denominator `{}` depends on a", self.den)));
        }
        let mut by_k: std::collections::BTreeMap<i32, Poly> = Default::default();
        for (m, c) in self.num.terms() {
            let k = m.exp(Var::U);
            by_k.entry(k).or_default().add_term(m.without(Var::U), c.clone());
        }
        let mut out = Poly::zero();
        for (k, p) in by_k {
            if k == 0 {
                out = out.add(&p.antiderivative(a));
                continue;
            }
            // int p(a) e^{la} da = e^{la} sum_j (-1)^j p^(j)(a) / l^(j+1)
            let lam = super::rat(k as i64, 2);
            let mut q = Poly::zero();
            let mut dj = p;
            let mut factor = lam.recip();
            while !dj.is_zero() {
                q = q.add(&dj.scale(&factor));
                dj = dj.derive(a);
                factor = -factor / &lam;
            }
            out = out.add(&q.mul_monomial(&Monomial::var(Var::U, k)));
        }
        Ok(RatExpr::normalized(out, self.den.clone()))
    }

    pub fn eval(&self, point: &Point) -> Result<Scalar> {
        let f = |v: Var| point.get(&v).cloned();
        let d = self.den.eval(&f)?;
        if d.is_zero() {
            return Err(Error::Singular);
        }
        Ok(self.num.eval(&f)? / d)
    }

    pub fn eval_with(&self, value: &dyn Fn(Var) -> Option<Scalar>) -> Result<Scalar> {
        let d = self.den.eval(value)?;
        if d.is_zero() {
            return Err(Error::Singular);
        }
        Ok(self.num.eval(value)? / d)
    }

    pub fn eval_f64(&self, value: &dyn Fn(Var) -> Option<f64>) -> Result<f64> {
        let d = self.den.eval_f64(value)?;
        if d == 0.0 {
            return Err(Error::Singular);
        }
        Ok(self.num.eval_f64(value)? / d)
    }

    /// Value modulo `p`, or `None` when undefined there.
    pub fn eval_mod(&self, p: u64, value: &dyn Fn(Var) -> Option<u64>) -> Option<u64> {
        let d = self.den.eval_mod(p, value)?;
        let inv = crate::linalg::modp::inv_mod(d, p)?;
        let n = self.num.eval_mod(p, value)?;
        Some(crate::linalg::modp::mul_mod(n, inv, p))
    }

    /// Substitute an expression for an ordinary variable.
    pub fn substitute(&self, v: Var, value: &RatExpr) -> RatExpr {
        let sub = |p: &Poly| -> RatExpr {
            let deg = p.max_exp(v) as i32;
            if deg == 0 {
                return RatExpr::from_poly(p.clone());
            }
            // p = sum_e c_e(others) v^e;  clear denominators of value^e
            let mut acc = RatExpr::zero();
            let mut by_e: std::collections::BTreeMap<i32, Poly> = Default::default();
            for (m, c) in p.terms() {
                by_e.entry(m.exp(v)).or_default().add_term(m.without(v), c.clone());
            }
            for (e, coeff) in by_e {
                let pw = value.pow(e).expect("nonnegative power");
                acc = &acc + &(&RatExpr::from_poly(coeff) * &pw);
            }
            acc
        };
        if value.is_polynomial() {
            let val = value.num.scale(&value.den.as_constant().unwrap().recip());
            return RatExpr::normalized(self.num.substitute(v, &val), self.den.substitute(v, &val));
        }
        sub(&self.num).try_div(&sub(&self.den)).expect("substitution made the denominator vanish")
    }

    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> RatExpr {
        RatExpr::normalized(self.num.rename(map), self.den.rename(map))
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v.sort();
        v.dedup();
        v
    }

    pub fn parse(s: &str) -> Result<RatExpr> {
        super::parse::parse_ast(s)?.to_ratexpr()
    }
}

impl PartialEq for RatExpr {
    fn eq(&self, other: &RatExpr) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for RatExpr {}

impl Default for RatExpr {
    fn default() -> Self {
        RatExpr::zero()
    }
}

impl From<Poly> for RatExpr {
    fn from(p: Poly) -> Self {
        RatExpr::from_poly(p)
    }
}

impl From<Scalar> for RatExpr {
    fn from(c: Scalar) -> Self {
        RatExpr::constant(c)
    }
}

impl From<i64> for RatExpr {
    fn from(n: i64) -> Self {
        RatExpr::int(n)
    }
}

fn add_sub(lhs: &RatExpr, rhs: &RatExpr, sign: bool) -> RatExpr {
    let r_num = if sign { rhs.num.clone() } else { rhs.num.neg() };
    if rhs.is_zero() {
        return lhs.clone();
    }
    if lhs.is_zero() {
        return RatExpr { num: r_num, den: rhs.den.clone() };
    }
    if lhs.den == rhs.den {
        return RatExpr::normalized(lhs.num.add(&r_num), lhs.den.clone());
    }
    // monomial denominators: use their lcm
    if let (Some((ml, cl)), Some((mr, cr))) = (lhs.den.as_monomial(), rhs.den.as_monomial()) {
        let mut l = ml.clone();
        for (v, e) in mr.iter() {
            l.set(v, l.exp(v).max(e));
        }
        let fl = l.div(ml).unwrap();
        let fr = l.div(mr).unwrap();
        let top = lhs.num.mul_monomial(&fl).scale(&cl.recip()).add(&r_num.mul_monomial(&fr).scale(&cr.recip()));
        return RatExpr::normalized(top, Poly::term(l, Scalar::one()));
    }
    let top = lhs.num.mul(&rhs.den).add(&r_num.mul(&lhs.den));
    RatExpr::normalized(top, lhs.den.mul(&rhs.den))
}

impl Add for &RatExpr {
    type Output = RatExpr;
    fn add(self, rhs: &RatExpr) -> RatExpr {
        add_sub(self, rhs, true)
    }
}

impl Sub for &RatExpr {
    type Output = RatExpr;
    fn sub(self, rhs: &RatExpr) -> RatExpr {
        add_sub(self, rhs, false)
    }
}

impl Mul for &RatExpr {
    type Output = RatExpr;
    fn mul(self, rhs: &RatExpr) -> RatExpr {
        if self.is_zero() || rhs.is_zero() {
            return RatExpr::zero();
        }
        if self.den.as_constant().is_some() && rhs.den.as_constant().is_some() {
            let c = self.den.as_constant().unwrap() * rhs.den.as_constant().unwrap();
            return RatExpr { num: self.num.mul(&rhs.num).scale(&c.recip()), den: Poly::one() };
        }
        RatExpr::normalized(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }
}

impl Div for &RatExpr {
    type Output = RatExpr;
    /// Panics on division by zero; use [`RatExpr::try_div`] to handle it.
    fn div(self, rhs: &RatExpr) -> RatExpr {
        self.try_div(rhs).expect("division by an identically zero expression")
    }
}

impl Neg for &RatExpr {
    type Output = RatExpr;
    fn neg(self) -> RatExpr {
        RatExpr { num: self.num.neg(), den: self.den.clone() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatExpr {
            type Output = RatExpr;
            fn $m(self, rhs: RatExpr) -> RatExpr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RatExpr> for RatExpr {
            type Output = RatExpr;
            fn $m(self, rhs: &RatExpr) -> RatExpr {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RatExpr {
    type Output = RatExpr;
    fn neg(self) -> RatExpr {
        -&self
    }
}

impl std::iter::Sum for RatExpr {
    fn sum<I: Iterator<Item = RatExpr>>(iter: I) -> RatExpr {
        iter.fold(RatExpr::zero(), |acc, x| &acc + &x)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.sorted_terms_for_display().into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || m.is_one() {
                factors.push(fmt_scalar(&abs));
            }
            let mut vars: Vec<(Var, i32)> = m.iter().collect();
            vars.sort_by(|a, b| a.0.cmp_name(b.0));
            for (v, e) in vars {
                if e == 1 {
                    factors.push(v.name().to_string());
                } else {
                    factors.push(format!("{}^{}", v.name(), e));
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Display for RatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.den.as_constant() {
            Some(c) if c.is_one() => write!(f, "{}", self.num),
            _ => write!(f, "({})/({})", self.num, self.den),
        }
    }
}

impl fmt::Debug for RatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rat;

    fn p(s: &str) -> RatExpr {
        RatExpr::parse(s).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(&p("1/y") + &p("1/y"), p("2/y"));
        assert_eq!(&p("u") * &p("u"), p("u^2"));
        assert!((&p("x*u^2/y") - &p("x*u^2/y")).is_zero());
        assert_eq!(p("1/y").try_div(&RatExpr::zero()), Err(Error::DivisionByZero));
    }

    #[test]
    fn derive_examples() {
        let a = Var::new("a");
        let y = Var::new("y");
        assert_eq!(p("u^2").derive(a), p("u^2"));
        assert_eq!(p("z*u").derive(a), p("z*u/2"));
        assert_eq!(p("1/y").derive(y), p("-1/y^2"));
        let chart = Chart::new(&["x", "y", "z", "a"], Some("a")).unwrap();
        assert!(matches!(p("x").derive_in(&chart, Var::U), Err(Error::ReservedSymbol(_))));
        assert!(matches!(p("x").derive_in(&chart, Var::new("w")), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(p("u^2").integrate_in_a().unwrap(), p("u^2"));
        assert_eq!(p("z").integrate_in_a().unwrap(), p("a*z"));
        // e^{2a} integrates with a factor 1/2
        assert_eq!(p("u^4*z").integrate_in_a().unwrap(), p("u^4*z/2"));
        assert_eq!(p("a*u^2").integrate_in_a().unwrap(), p("a*u^2 - u^2"));
        assert!(matches!(p("1/(u+1)").integrate_in_a(), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn eval_examples() {
        let pt: Point = [(Var::new("y"), rat(2, 1)), (Var::new("x"), rat(1, 1)), (Var::U, rat(3, 1))]
            .into_iter()
            .collect();
        assert_eq!(p("1/y").eval(&pt).unwrap(), rat(1, 2));
        assert_eq!(p("u^2").eval(&pt).unwrap(), rat(9, 1));
        assert_eq!(p("(x^2+y^2)/y").eval(&pt).unwrap(), rat(5, 2));
        assert_eq!(p("1/(y-2)").eval(&pt), Err(Error::Singular));
    }

    #[test]
    fn normal_form_and_printing() {
        let e = p("(x^2 - y^2)/(x - y)");
        assert_eq!(e.to_string(), "x + y");
        assert_eq!(p("exp(-a)*z").to_string(), "u^-2*z");
        assert_eq!(p("x*y/(2*x)").to_string(), "1/2*y");
        let e = p("(x + 1)/(3*y^2 + 3*x)");
        assert_eq!(RatExpr::parse(&e.to_string()).unwrap().to_string(), e.to_string());
        assert_eq!(p("u^-2*y^2 - 1/2*x*u"), p("-x*u/2 + y^2*exp(-a)"));
    }

    #[test]
    fn substitute_and_rename() {
        let x = Var::new("x");
        assert_eq!(p("x^2 + 1/x").substitute(x, &p("1/y")), p("1/y^2 + y"));
        assert_eq!(p("x*z").rename(&|v| if v == x { Var::new("w") } else { v }), p("w*z"));
    }
}
