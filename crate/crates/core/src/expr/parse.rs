use num_bigint::BigInt;
use num_traits::Zero;

use super::{a_var, RatExpr, Var};
use crate::error::{Error, Result};

/// Syntax tree shared by the expression parser and the jet-equation reader.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(BigInt),
    Ident(String),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i32),
    /// `name(arg)` such as `exp(2*a)`.
    Call(String, Box<Ast>),
    /// `d(f; x,x,z)`: a partial derivative of an unknown function.
    Jet(String, Vec<String>),
    /// `D(x; expr)`: the total derivative of an expression.
    Deriv(String, Box<Ast>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { pos, msg: msg.into() })
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            err(self.pos, format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            if c.is_ascii_alphabetic() || c == '_' || (i > 0 && c.is_ascii_digit()) {
                end = i + c.len_utf8();
            } else {
                break;
            }
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some(rest[..end].to_string())
    }

    fn integer(&mut self) -> Option<BigInt> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if end == 0 {
            return None;
        }
        self.pos += end;
        rest[..end].parse().ok()
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let paren = self.eat('(');
        let neg = self.eat('-');
        let at = self.pos;
        let Some(n) = self.integer() else {
            return err(at, "expected an integer exponent");
        };
        if paren {
            self.expect(')')?;
        }
        let n: i32 = n.try_into().map_err(|_| Error::Parse { pos: at, msg: "exponent too large".into() })?;
        Ok(Ast::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Ast> {
        let at = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Ast::Num(self.integer().unwrap())),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let name = self.ident().unwrap();
                if !self.eat('(') {
                    return Ok(Ast::Ident(name));
                }
                match name.as_str() {
                    "d" => {
                        let Some(f) = self.ident() else {
                            return err(self.pos, "expected a function name");
                        };
                        let mut vars = Vec::new();
                        if self.eat(';') {
                            loop {
                                match self.ident() {
                                    Some(v) => vars.push(v),
                                    None => return err(self.pos, "expected a variable"),
                                }
                                if !self.eat(',') {
                                    break;
                                }
                            }
                        }
                        self.expect(')')?;
                        Ok(Ast::Jet(f, vars))
                    }
                    "D" => {
                        let Some(v) = self.ident() else {
                            return err(self.pos, "expected a variable");
                        };
                        self.expect(';')?;
                        let e = self.expr()?;
                        self.expect(')')?;
                        Ok(Ast::Deriv(v, Box::new(e)))
                    }
                    _ => {
                        let e = self.expr()?;
                        self.expect(')')?;
                        Ok(Ast::Call(name, Box::new(e)))
                    }
                }
            }
            Some(c) => err(at, format!("unexpected `{c}`")),
            None => err(at, "unexpected end of input"),
        }
    }
}

pub fn parse_ast(src: &str) -> Result<Ast> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return err(p.pos, "trailing input");
    }
    Ok(e)
}

impl Ast {
    /// Evaluate to an exact expression. `exp(c*a)` with `2c` an integer
    /// becomes `u^(2c)`; jet tokens are rejected.
    pub fn to_ratexpr(&self) -> Result<RatExpr> {
        self.fold(&|_| None)
    }

    /// Like [`Ast::to_ratexpr`] but identifiers may be bound by `lookup`.
    pub fn fold(&self, lookup: &dyn Fn(&str) -> Option<RatExpr>) -> Result<RatExpr> {
        let bad = |msg: String| Error::Parse { pos: 0, msg };
        Ok(match self {
            Ast::Num(n) => RatExpr::constant(num_rational::BigRational::from_integer(n.clone())),
            Ast::Ident(name) => match lookup(name) {
                Some(e) => e,
                None => RatExpr::var(Var::new(name)),
            },
            Ast::Neg(e) => -e.fold(lookup)?,
            Ast::Add(l, r) => l.fold(lookup)? + r.fold(lookup)?,
            Ast::Sub(l, r) => l.fold(lookup)? - r.fold(lookup)?,
            Ast::Mul(l, r) => l.fold(lookup)? * r.fold(lookup)?,
            Ast::Div(l, r) => l.fold(lookup)?.try_div(&r.fold(lookup)?)?,
            Ast::Pow(b, n) => b.fold(lookup)?.pow(*n)?,
            Ast::Call(name, arg) if name == "exp" => {
                let arg = arg.fold(lookup)?;
                let c = arg.derive(a_var()).as_constant().ok_or_else(|| bad("exp argument must be c*a".into()))?;
                if !(&arg - &RatExpr::var(a_var()).scale(&c)).is_zero() {
                    return Err(bad("exp argument must be c*a".into()));
                }
                let two_c = c * num_rational::BigRational::from_integer(2.into());
                if !two_c.is_integer() {
                    return Err(bad("exp(c*a) needs 2c integral".into()));
                }
                let k: i32 = two_c.to_integer().try_into().map_err(|_| bad("exponent too large".into()))?;
                RatExpr::u_pow(k)
            }
            Ast::Call(name, _) => return Err(bad(format!("unknown function `{name}`"))),
            Ast::Jet(f, _) => return Err(bad(format!("jet `d({f}; ..)` outside a jet equation"))),
            Ast::Deriv(v, e) => {
                if v == "u" {
                    return Err(Error::ReservedSymbol("a differentiation variable"));
                }
                e.fold(lookup)?.derive(Var::new(v))
            }
        })
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Ast::Num(n) if n.is_zero())
    }
}
