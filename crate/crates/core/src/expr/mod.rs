//! Exact expressions: rational functions in chart variables and the
//! exponential symbol `u = exp(a/2)`.

mod parse;
mod poly;
mod ratexpr;
mod var;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;

pub use parse::{parse_ast, Ast};
pub use poly::{pow_scalar, scalar_to_f64, Monomial, Poly};
pub use ratexpr::RatExpr;
pub use var::{Chart, Var};

pub type Scalar = BigRational;

/// Assignment of exact values to variables (including `u`).
pub type Point = BTreeMap<Var, Scalar>;

pub fn rat(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// The variable whose exponential is carried by `u`.
pub fn a_var() -> Var {
    static A: OnceLock<Var> = OnceLock::new();
    *A.get_or_init(|| Var::new("a"))
}

pub fn binomial(n: i64, k: i64) -> Scalar {
    if k < 0 || k > n {
        return int(0);
    }
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(acc)
}

pub(crate) fn fmt_scalar(c: &Scalar) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}
