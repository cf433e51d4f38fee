use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{parse_ast, Ast, Monomial, Poly, RatExpr, Var};
use crate::liecalc::FieldValue;

/// A partial derivative of an unknown function. The multi-index is kept
/// sorted by variable name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JetSymbol {
    pub func: Var,
    pub deriv: Vec<(Var, u32)>,
}

impl JetSymbol {
    pub fn new(func: Var) -> JetSymbol {
        JetSymbol { func, deriv: Vec::new() }
    }

    pub fn named(func: &str, vars: &[&str]) -> JetSymbol {
        let mut s = JetSymbol::new(Var::new(func));
        for v in vars {
            s = s.derived(Var::new(v));
        }
        s
    }

    pub fn order(&self) -> u32 {
        self.deriv.iter().map(|d| d.1).sum()
    }

    pub fn count(&self, v: Var) -> u32 {
        self.deriv.iter().find(|d| d.0 == v).map_or(0, |d| d.1)
    }

    pub fn derived(&self, v: Var) -> JetSymbol {
        let mut deriv = self.deriv.clone();
        match deriv.iter_mut().find(|d| d.0 == v) {
            Some(d) => d.1 += 1,
            None => {
                deriv.push((v, 1));
                deriv.sort_by(|a, b| a.0.name().cmp(b.0.name()));
            }
        }
        JetSymbol { func: self.func, deriv }
    }

    /// The variables of the multi-index with repetition.
    pub fn var_list(&self) -> Vec<Var> {
        self.deriv.iter().flat_map(|&(v, k)| std::iter::repeat_n(v, k as usize)).collect()
    }
}

impl Ord for JetSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.func
            .name()
            .cmp(other.func.name())
            .then_with(|| self.order().cmp(&other.order()))
            .then_with(|| {
                let a: Vec<_> = self.deriv.iter().map(|(v, k)| (v.name(), *k)).collect();
                let b: Vec<_> = other.deriv.iter().map(|(v, k)| (v.name(), *k)).collect();
                a.cmp(&b)
            })
    }
}

impl PartialOrd for JetSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for JetSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deriv.is_empty() {
            return write!(f, "{}", self.func.name());
        }
        let vs: Vec<&str> = self.var_list().iter().map(|v| v.name()).collect();
        write!(f, "d({}; {})", self.func.name(), vs.join(","))
    }
}

/// `sum_s c_s * s + free` with jet symbols `s`. Every unknown is taken to
/// depend on every variable it is differentiated by.
#[derive(Clone, Debug, Default)]
pub struct JetLinExpr {
    terms: BTreeMap<JetSymbol, RatExpr>,
    free: RatExpr,
}

impl JetLinExpr {
    pub fn zero() -> JetLinExpr {
        JetLinExpr { terms: BTreeMap::new(), free: RatExpr::zero() }
    }

    pub fn jet(s: JetSymbol) -> JetLinExpr {
        JetLinExpr::term(s, RatExpr::one())
    }

    pub fn func(name: &str) -> JetLinExpr {
        JetLinExpr::jet(JetSymbol::new(Var::new(name)))
    }

    pub fn term(s: JetSymbol, c: RatExpr) -> JetLinExpr {
        let mut e = JetLinExpr::zero();
        e.add_term(s, c);
        e
    }

    pub fn constant(c: RatExpr) -> JetLinExpr {
        JetLinExpr { terms: BTreeMap::new(), free: c }
    }

    pub fn add_term(&mut self, s: JetSymbol, c: RatExpr) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.get(&s) {
            Some(old) => old + &c,
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&s);
        } else {
            self.terms.insert(s, sum);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&JetSymbol, &RatExpr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, s: &JetSymbol) -> RatExpr {
        self.terms.get(s).cloned().unwrap_or_else(RatExpr::zero)
    }

    pub fn free(&self) -> &RatExpr {
        &self.free
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.free.is_zero()
    }

    pub fn symbols(&self) -> Vec<&JetSymbol> {
        self.terms.keys().collect()
    }

    pub fn functions(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.terms.keys().map(|s| s.func).collect();
        out.dedup();
        out
    }

    pub fn add(&self, o: &JetLinExpr) -> JetLinExpr {
        let mut out = self.clone();
        for (s, c) in &o.terms {
            out.add_term(s.clone(), c.clone());
        }
        out.free = &out.free + &o.free;
        out
    }

    pub fn sub(&self, o: &JetLinExpr) -> JetLinExpr {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> JetLinExpr {
        self.mul_expr(&RatExpr::int(-1))
    }

    pub fn mul_expr(&self, c: &RatExpr) -> JetLinExpr {
        if c.is_zero() {
            return JetLinExpr::zero();
        }
        JetLinExpr {
            terms: self.terms.iter().map(|(s, k)| (s.clone(), k * c)).collect(),
            free: &self.free * c,
        }
    }

    pub fn derive(&self, v: Var) -> JetLinExpr {
        let mut out = JetLinExpr::constant(self.free.derive(v));
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.derive(v));
            out.add_term(s.derived(v), c.clone());
        }
        out
    }

    /// Like [`JetLinExpr::derive`], but jets of functions that do not
    /// depend on `v` are constant in `v`.
    pub fn derive_in(&self, v: Var, depends: &dyn Fn(Var, Var) -> bool) -> JetLinExpr {
        let mut out = JetLinExpr::constant(self.free.derive(v));
        for (s, c) in &self.terms {
            out.add_term(s.clone(), c.derive(v));
            if depends(s.func, v) {
                out.add_term(s.derived(v), c.clone());
            }
        }
        out
    }

    /// Replace jets of the functions `image` knows by the matching
    /// derivatives of their images.
    pub fn substitute_jets(&self, image: &dyn Fn(Var) -> Option<JetLinExpr>, depends: &dyn Fn(Var, Var) -> bool) -> JetLinExpr {
        let mut out = JetLinExpr::constant(self.free.clone());
        for (s, c) in &self.terms {
            match image(s.func) {
                Some(e) => {
                    let d = s.var_list().iter().fold(e, |acc, &v| acc.derive_in(v, depends));
                    out = out.add(&d.mul_expr(c));
                }
                None => out.add_term(s.clone(), c.clone()),
            }
        }
        out
    }

    /// Termwise antiderivative in `a`; no jet may depend on `a`.
    pub fn integrate_in_a(&self, depends: &dyn Fn(Var, Var) -> bool) -> Result<JetLinExpr> {
        let a = crate::expr::a_var();
        let mut out = JetLinExpr::constant(self.free.integrate_in_a()?);
        for (s, c) in &self.terms {
            if depends(s.func, a) {
                return Err(Error::NotIntegrable(format!("{s} depends on a")));
            }
            out.add_term(s.clone(), c.integrate_in_a()?);
        }
        Ok(out)
    }

    /// Replace known functions by expressions. Jets of unknown functions
    /// stay symbolic.
    pub fn substitute(&self, value: &dyn Fn(Var) -> Option<RatExpr>) -> JetLinExpr {
        let mut out = JetLinExpr::constant(self.free.clone());
        for (s, c) in &self.terms {
            match value(s.func) {
                Some(f) => {
                    let d = s.var_list().iter().fold(f, |acc, &v| acc.derive(v));
                    out.free = &out.free + &(c * &d);
                }
                None => out.add_term(s.clone(), c.clone()),
            }
        }
        out
    }

    /// Replace each jet by an arbitrary expression in other jets.
    pub fn map_jets(&self, image: &dyn Fn(&JetSymbol) -> Result<JetLinExpr>, coeff: &dyn Fn(&RatExpr) -> Result<RatExpr>) -> Result<JetLinExpr> {
        let mut out = JetLinExpr::constant(coeff(&self.free)?);
        for (s, c) in &self.terms {
            out = out.add(&image(s)?.mul_expr(&coeff(c)?));
        }
        Ok(out)
    }

    pub fn as_expr(&self) -> Option<&RatExpr> {
        self.terms.is_empty().then_some(&self.free)
    }

    /// `Some(c)` with `self = c * other`, `c` nonzero.
    pub fn ratio_to(&self, other: &JetLinExpr) -> Option<RatExpr> {
        if self.is_zero() || other.is_zero() || self.terms.len() != other.terms.len() {
            return None;
        }
        let c = match other.terms.iter().next() {
            Some((s, k)) => self.terms.get(s)? / k,
            None => &self.free / &other.free,
        };
        if c.is_zero() {
            return None;
        }
        (self.sub(&other.mul_expr(&c))).is_zero().then_some(c)
    }

    pub fn proportional(&self, other: &JetLinExpr) -> bool {
        self.ratio_to(other).is_some()
    }

    /// Polynomial coefficients with no common monomial factor, scaled so the
    /// first displayed term of the first jet has coefficient 1.
    pub fn primitive(&self) -> JetLinExpr {
        if self.is_zero() {
            return self.clone();
        }
        let coeffs: Vec<&RatExpr> = self.terms.values().chain(std::iter::once(&self.free)).filter(|c| !c.is_zero()).collect();
        let mut dens: Vec<Poly> = Vec::new();
        for c in &coeffs {
            let d = c.denom();
            if d.as_constant().is_none() && !dens.contains(d) {
                dens.push(d.clone());
            }
        }
        let mut mult = RatExpr::one();
        for d in dens {
            mult = &mult * &RatExpr::from_poly(d);
        }
        let scaled = self.mul_expr(&mult);
        let polys: Vec<Poly> = scaled
            .terms
            .values()
            .chain(std::iter::once(&scaled.free))
            .filter(|c| !c.is_zero())
            .map(|c| c.numer().clone())
            .collect();
        let content = common_monomial(&polys);
        let mut out = scaled.mul_expr(&RatExpr::from_poly(Poly::term(content.inverse(), crate::expr::int(1))));
        let lead = match out.terms.values().next() {
            Some(c) => c.numer().sorted_terms_for_display()[0].1.clone(),
            None => out.free.numer().sorted_terms_for_display()[0].1.clone(),
        };
        out = out.mul_expr(&RatExpr::constant(lead.recip()));
        out
    }

    pub fn parse(src: &str, funcs: &[&str]) -> Result<JetLinExpr> {
        from_ast(&parse_ast(src)?, funcs)
    }

    /// `lhs = rhs` becomes `lhs - rhs`.
    pub fn parse_equation(src: &str, funcs: &[&str]) -> Result<JetLinExpr> {
        let mut parts = src.split('=');
        let lhs = parts.next().unwrap_or("");
        let rhs = parts.next();
        if parts.next().is_some() {
            return Err(Error::Parse { pos: 0, msg: "more than one `=`".into() });
        }
        let l = JetLinExpr::parse(lhs, funcs)?;
        match rhs {
            Some(r) => Ok(l.sub(&JetLinExpr::parse(r, funcs)?)),
            None => Ok(l),
        }
    }
}

fn common_monomial(polys: &[Poly]) -> Monomial {
    let mut content: Option<Monomial> = None;
    for p in polys {
        let m = p.monomial_content();
        content = Some(match content {
            None => m,
            Some(c) => {
                let mut vars: Vec<Var> = c.iter().map(|t| t.0).chain(m.iter().map(|t| t.0)).collect();
                vars.sort();
                vars.dedup();
                let mut out = Monomial::one();
                for v in vars {
                    let e = c.exp(v).min(m.exp(v));
                    if e != 0 {
                        out.set(v, e);
                    }
                }
                out
            }
        });
    }
    content.unwrap_or_else(Monomial::one)
}

impl PartialEq for JetLinExpr {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl FieldValue for JetLinExpr {
    fn zero() -> Self {
        JetLinExpr::zero()
    }
    fn is_zero(&self) -> bool {
        JetLinExpr::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        JetLinExpr::add(self, other)
    }
    fn mul_expr(&self, c: &RatExpr) -> Self {
        JetLinExpr::mul_expr(self, c)
    }
    fn derive(&self, v: Var) -> Self {
        JetLinExpr::derive(self, v)
    }
}

impl fmt::Display for JetLinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut piece = |f: &mut fmt::Formatter<'_>, c: &RatExpr, s: Option<&JetSymbol>| -> fmt::Result {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match s {
                Some(s) if c == &RatExpr::one() => write!(f, "{s}"),
                Some(s) => write!(f, "({c})*{s}"),
                None => write!(f, "{c}"),
            }
        };
        for (s, c) in &self.terms {
            piece(f, c, Some(s))?;
        }
        if !self.free.is_zero() {
            piece(f, &self.free, None)?;
        }
        Ok(())
    }
}

fn has_jets(ast: &Ast, funcs: &[&str]) -> bool {
    match ast {
        Ast::Num(_) => false,
        Ast::Ident(n) => funcs.contains(&n.as_str()),
        Ast::Jet(..) => true,
        Ast::Neg(e) | Ast::Pow(e, _) | Ast::Call(_, e) | Ast::Deriv(_, e) => has_jets(e, funcs),
        Ast::Add(l, r) | Ast::Sub(l, r) | Ast::Mul(l, r) | Ast::Div(l, r) => has_jets(l, funcs) || has_jets(r, funcs),
    }
}

/// Identifiers listed in `funcs` are unknown functions; `d(f; ..)` always
/// denotes a jet, whatever `f` is.
pub fn from_ast(ast: &Ast, funcs: &[&str]) -> Result<JetLinExpr> {
    if !has_jets(ast, funcs) {
        return Ok(JetLinExpr::constant(ast.to_ratexpr()?));
    }
    let nonlinear = || Error::Parse { pos: 0, msg: "equation is not linear in the unknowns".into() };
    Ok(match ast {
        Ast::Ident(n) => JetLinExpr::func(n),
        Ast::Jet(f, vs) => {
            let vs: Vec<&str> = vs.iter().map(String::as_str).collect();
            if vs.contains(&"u") {
                return Err(Error::ReservedSymbol("a differentiation variable"));
            }
            JetLinExpr::jet(JetSymbol::named(f, &vs))
        }
        Ast::Neg(e) => from_ast(e, funcs)?.neg(),
        Ast::Add(l, r) => from_ast(l, funcs)?.add(&from_ast(r, funcs)?),
        Ast::Sub(l, r) => from_ast(l, funcs)?.sub(&from_ast(r, funcs)?),
        Ast::Mul(l, r) => match (has_jets(l, funcs), has_jets(r, funcs)) {
            (true, true) => return Err(nonlinear()),
            (true, false) => from_ast(l, funcs)?.mul_expr(&r.to_ratexpr()?),
            _ => from_ast(r, funcs)?.mul_expr(&l.to_ratexpr()?),
        },
        Ast::Div(l, r) => {
            if has_jets(r, funcs) {
                return Err(nonlinear());
            }
            from_ast(l, funcs)?.mul_expr(&r.to_ratexpr()?.recip()?)
        }
        Ast::Pow(e, 1) => from_ast(e, funcs)?,
        Ast::Deriv(v, e) => {
            if v == "u" {
                return Err(Error::ReservedSymbol("a differentiation variable"));
            }
            from_ast(e, funcs)?.derive(Var::new(v))
        }
        Ast::Pow(..) | Ast::Call(..) => return Err(nonlinear()),
        Ast::Num(_) => unreachable!(),
    })
}
