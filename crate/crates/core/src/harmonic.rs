//! Harmonic-polynomial series for `f3`, `f4`, the integral for `f1`, block
//! extraction of the `(V,V)` residual and exact elimination in truncated
//! polynomial spaces.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::cks::{generate_cks, unknown_names, JetLinExpr, JetSymbol};
use crate::error::{Error, Result};
use crate::expr::{a_var, binomial, int, Monomial, Poly, RatExpr, Scalar, Var};
use crate::linalg::{rref, LinearSystem};
use crate::models::{build_chn, ModelSpace};

/// `C1[m]`, `C2[m]` for `m >= 1`, and `C3`..`C6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesUnknown {
    pub family: u8,
    pub m: Option<usize>,
}

impl SeriesUnknown {
    pub fn c1(m: usize) -> SeriesUnknown {
        SeriesUnknown { family: 1, m: Some(m) }
    }

    pub fn c2(m: usize) -> SeriesUnknown {
        SeriesUnknown { family: 2, m: Some(m) }
    }

    pub fn plain(family: u8) -> SeriesUnknown {
        SeriesUnknown { family, m: None }
    }

    pub fn name(&self) -> String {
        match self.m {
            Some(m) => format!("C{}_{m}", self.family),
            None => format!("C{}", self.family),
        }
    }

    pub fn var(&self) -> Var {
        Var::new(&self.name())
    }

    pub fn from_name(name: &str) -> Option<SeriesUnknown> {
        let rest = name.strip_prefix('C')?;
        let (fam, m) = match rest.split_once('_') {
            Some((f, m)) => (f, Some(m.parse().ok()?)),
            None => (rest, None),
        };
        let family: u8 = fam.parse().ok()?;
        match (family, m) {
            (1 | 2, Some(m)) if m >= 1 => Some(SeriesUnknown { family, m: Some(m) }),
            (3..=6, None) => Some(SeriesUnknown { family, m: None }),
            _ => None,
        }
    }

    /// The integration constants also depend on `z`.
    pub fn depends_on_z(&self) -> bool {
        self.family >= 5
    }
}

fn sin_quarter(k: usize) -> i64 {
    [0, 1, 0, -1][k % 4]
}

fn cos_quarter(k: usize) -> i64 {
    [1, 0, -1, 0][k % 4]
}

fn series_term(fam: SeriesUnknown, c: Scalar, k: usize, zp: usize) -> JetLinExpr {
    let z = RatExpr::named("z");
    let coef = (&z.pow(zp as i32).unwrap() * &RatExpr::u_pow(2 * k as i32 - 2)).scale(&c);
    JetLinExpr::term(JetSymbol::new(fam.var()), coef)
}

/// `f3` and `f4` truncated at order `m_max`, with `exp(-a) = u^-2`.
pub fn build_series(m_max: usize) -> Result<(JetLinExpr, JetLinExpr)> {
    if m_max < 1 {
        return Err(Error::InvalidArgument("series order must be at least 1".into()));
    }
    let mut f3 = series_term(SeriesUnknown::plain(3), int(1), 0, 0);
    let mut f4 = series_term(SeriesUnknown::plain(4), int(1), 0, 0);
    for m in 1..=m_max {
        for k in 0..=m {
            let b = binomial(m as i64, k as i64);
            let (s, c) = (int(sin_quarter(k)), int(cos_quarter(k)));
            let zp = m - k;
            for (fam, w3, w4) in [(SeriesUnknown::c1(m), c.clone(), s.clone()), (SeriesUnknown::c2(m), -s.clone(), c.clone())] {
                if !w3.is_zero_scalar() {
                    f3 = f3.add(&series_term(fam, &b * &w3, k, zp));
                }
                if !w4.is_zero_scalar() {
                    f4 = f4.add(&series_term(fam, &b * &w4, k, zp));
                }
            }
        }
    }
    Ok((f3, f4))
}

trait ZeroScalar {
    fn is_zero_scalar(&self) -> bool;
}

impl ZeroScalar for Scalar {
    fn is_zero_scalar(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    X,
    Y,
}

/// The two reduced equations the residual is built from, in one pair of
/// horizontal variables.
#[derive(Clone, Debug)]
pub struct SeriesContext {
    pub direction: Direction,
    pub x: Var,
    pub y: Var,
    pub z: Var,
    /// Diagonal entry, scaled so `d(f4; a)` has coefficient 1.
    pub main: JetLinExpr,
    /// Mixed entry with `A`, linear in the horizontal unknown and `f4`.
    pub transport: JetLinExpr,
    pub f: Var,
    pub f4: Var,
    pub constant: SeriesUnknown,
}

impl SeriesContext {
    /// For `CH^n`, the first pair `(x^1, y^1)`.
    pub fn new(model: &ModelSpace, direction: Direction) -> Result<SeriesContext> {
        let sys = generate_cks(model)?;
        let names = unknown_names(model);
        let find = |l: &str| model.frame_index(l).or_else(|| model.frame_index(&format!("{l}1")));
        let (v, jv, z, a) = (find("V"), find("JZV"), model.frame_index("Z"), model.frame_index("A"));
        let (Some(v), Some(jv), Some(_), Some(a)) = (v, jv, z, a) else {
            return Err(Error::InvalidModel("series pipeline needs a complex hyperbolic model".into()));
        };
        let h = if direction == Direction::X { v } else { jv };
        let label = |i: usize, j: usize| format!("({},{})", model.frame_labels[i], model.frame_labels[j]);
        let get = |l: String| sys.reduced_eq(&l).cloned().ok_or_else(|| Error::InvalidModel(format!("missing entry {l}")));
        let f4 = Var::new(&names[a]);
        let main = get(label(h, h))?;
        let c = main.coeff(&JetSymbol::new(f4).derived(a_var()));
        let main = main.mul_expr(&c.recip()?);
        let vars = model.vars();
        let zvar = Var::new("z");
        if !model.chart.contains(zvar) {
            return Err(Error::InvalidModel("no z coordinate".into()));
        }
        Ok(SeriesContext {
            direction,
            x: vars[0],
            y: vars[1],
            z: zvar,
            main,
            transport: get(label(h, a))?,
            f: Var::new(&names[h]),
            f4,
            constant: SeriesUnknown::plain(if direction == Direction::X { 5 } else { 6 }),
        })
    }

    pub fn ch2(direction: Direction) -> Result<SeriesContext> {
        SeriesContext::new(&build_chn(2)?, direction)
    }

    pub fn depends(&self) -> impl Fn(Var, Var) -> bool + '_ {
        move |f: Var, v: Var| match SeriesUnknown::from_name(f.name()) {
            Some(s) => v == self.x || v == self.y || (s.depends_on_z() && v == self.z),
            None => true,
        }
    }
}

/// `exp(a/2) f` from the transport equation: with
/// `c (d_a f + f/2) + rest = 0`, `exp(a/2) f = -int u rest / c da + C`.
pub fn f1_from_f4_in(ctx: &SeriesContext, f4: &JetLinExpr) -> Result<JetLinExpr> {
    let dep = ctx.depends();
    let fa = JetSymbol::new(ctx.f).derived(a_var());
    let c = ctx.transport.coeff(&fa);
    let f0 = JetSymbol::new(ctx.f);
    if c.is_zero() || ctx.transport.coeff(&f0) != c.scale(&crate::expr::rat(1, 2)) {
        return Err(Error::InvalidModel("transport equation is not d_a(u f) + ...".into()));
    }
    let mut rest = ctx.transport.sub(&JetLinExpr::term(fa, c.clone())).sub(&JetLinExpr::term(f0, c.scale(&crate::expr::rat(1, 2))));
    if rest.functions().contains(&ctx.f) {
        return Err(Error::InvalidModel("transport equation has further derivatives of f".into()));
    }
    let f4v = ctx.f4;
    rest = rest.substitute_jets(&|v| (v == f4v).then(|| f4.clone()), &dep);
    let integrand = rest.mul_expr(&(&RatExpr::u_pow(1) / &c)).neg();
    Ok(integrand.integrate_in_a(&dep)?.add(&JetLinExpr::func(&ctx.constant.name())))
}

/// `exp(a/2) f1` for `CH^2`.
pub fn f1_from_f4(f4: &JetLinExpr) -> Result<JetLinExpr> {
    f1_from_f4_in(&SeriesContext::ch2(Direction::X)?, f4)
}

/// The main equation with the series substituted.
pub fn residual(ctx: &SeriesContext, m_max: usize) -> Result<JetLinExpr> {
    let (_, f4) = build_series(m_max)?;
    let uf = f1_from_f4_in(ctx, &f4)?;
    let f = uf.mul_expr(&RatExpr::u_pow(-1));
    let dep = ctx.depends();
    let (fv, f4v) = (ctx.f, ctx.f4);
    Ok(ctx.main.substitute_jets(
        &|v| {
            if v == fv {
                Some(f.clone())
            } else if v == f4v {
                Some(f4.clone())
            } else {
                None
            }
        },
        &dep,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKey {
    /// Coefficient of `exp(k a)`, `k >= 1`.
    Exp(u32),
    ALinear,
    ExpMinus1,
    Constant,
    /// Anything else (`u` exponent, `a` exponent); never expected.
    Other(i32, i32),
}

impl BlockKey {
    fn of(u_exp: i32, a_exp: i32) -> BlockKey {
        match (u_exp, a_exp) {
            (e, 0) if e >= 2 && e % 2 == 0 => BlockKey::Exp(e as u32 / 2),
            (0, 1) => BlockKey::ALinear,
            (-2, 0) => BlockKey::ExpMinus1,
            (0, 0) => BlockKey::Constant,
            (e, j) => BlockKey::Other(e, j),
        }
    }

    fn weight(&self) -> (i32, i32) {
        match *self {
            BlockKey::Exp(k) => (2 * k as i32, 0),
            BlockKey::ALinear => (0, 1),
            BlockKey::ExpMinus1 => (-2, 0),
            BlockKey::Constant => (0, 0),
            BlockKey::Other(e, j) => (e, j),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BlockKey::Exp(k) => format!("exp({k}a)"),
            BlockKey::ALinear => "a".into(),
            BlockKey::ExpMinus1 => "exp(-a)".into(),
            BlockKey::Constant => "1".into(),
            BlockKey::Other(e, j) => format!("u^{e}*a^{j}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockEquation {
    pub key: BlockKey,
    /// Always 0 for the constant block, which keeps its `z` dependence.
    pub z_power: u32,
    /// Linear in the series unknowns with coefficients polynomial in `x, y`.
    pub expr: JetLinExpr,
    /// Unchanged when the series is extended: no truncated term reaches it.
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub order: usize,
    pub direction: Direction,
    pub blocks: BTreeMap<BlockKey, Vec<BlockEquation>>,
}

/// Extension used to decide completeness: the band reaches `m + 2`.
const COMPLETENESS_MARGIN: usize = 3;

fn split_blocks(ctx: &SeriesContext, r: &JetLinExpr) -> Result<BTreeMap<(BlockKey, u32), JetLinExpr>> {
    let a = a_var();
    let mut out: BTreeMap<(BlockKey, u32), JetLinExpr> = BTreeMap::new();
    let parts = r.terms().map(|(s, c)| (Some(s), c)).chain(std::iter::once((None, r.free())));
    for (s, c) in parts {
        if c.is_zero() {
            continue;
        }
        let p = c.as_poly().ok_or_else(|| Error::Verification(format!("non-polynomial coefficient {c}")))?;
        for (m, k) in p.terms() {
            let key = BlockKey::of(m.exp(Var::U), m.exp(a));
            let mut zp = m.exp(ctx.z);
            if zp < 0 {
                return Err(Error::Verification("negative power of z".into()));
            }
            let mut rest = m.without(Var::U).without(a);
            // C5 and C6 are not expanded in z, so the constant block stays
            // one equation in z
            if key == BlockKey::Constant {
                zp = 0;
            } else {
                rest = rest.without(ctx.z);
            }
            let coef = RatExpr::from_poly(Poly::term(rest, k.clone()));
            let e = out.entry((key, zp as u32)).or_insert_with(JetLinExpr::zero);
            *e = match s {
                Some(s) => e.add(&JetLinExpr::term(s.clone(), coef)),
                None => e.add(&JetLinExpr::constant(coef)),
            };
        }
    }
    out.retain(|_, e| !e.is_zero());
    Ok(out)
}

/// Groups the residual by `exp(k a)`, `a`, `exp(-a)` and constants, then by
/// powers of `z`.
pub fn residual_blocks_in(ctx: &SeriesContext, m_max: usize) -> Result<BlockSystem> {
    let here = split_blocks(ctx, &residual(ctx, m_max)?)?;
    let further = split_blocks(ctx, &residual(ctx, m_max + COMPLETENESS_MARGIN)?)?;
    let mut blocks: BTreeMap<BlockKey, Vec<BlockEquation>> = BTreeMap::new();
    for ((key, zp), expr) in here {
        let complete = further.get(&(key, zp)).is_some_and(|e| e == &expr);
        blocks.entry(key).or_default().push(BlockEquation { key, z_power: zp, expr, complete });
    }
    Ok(BlockSystem { order: m_max, direction: ctx.direction, blocks })
}

/// Blocks of the `CH^2` residual in the `x` direction.
pub fn residual_blocks(m_max: usize) -> Result<BlockSystem> {
    residual_blocks_in(&SeriesContext::ch2(Direction::X)?, m_max)
}

impl BlockSystem {
    pub fn equations(&self) -> impl Iterator<Item = &BlockEquation> {
        self.blocks.values().flatten()
    }

    pub fn get(&self, key: BlockKey, z_power: u32) -> Option<&BlockEquation> {
        self.blocks.get(&key)?.iter().find(|e| e.z_power == z_power)
    }

    /// `sum exp-weight * z^p * block`; equals the residual.
    pub fn resum(&self, z: Var) -> JetLinExpr {
        let mut out = JetLinExpr::zero();
        for e in self.equations() {
            let (ue, ae) = e.key.weight();
            let w = Monomial::from_pairs(&[(Var::U, ue), (a_var(), ae), (z, e.z_power as i32)]);
            out = out.add(&e.expr.mul_expr(&RatExpr::from_poly(Poly::term(w, int(1)))));
        }
        out
    }
}

/// Solves `-d_x C5 + (y/2) d_z C5 = -R` for polynomial `R(x, y, z)`
/// along characteristics (`-d_y C6 - (x/2) d_z C6 = -R` for `Direction::Y`).
pub fn integration_constant_witness(direction: Direction, r: &RatExpr) -> Result<RatExpr> {
    let p = r.as_poly().ok_or_else(|| Error::InvalidArgument("witness needs a polynomial".into()))?;
    let (x, y, z) = (Var::new("x"), Var::new("y"), Var::new("z"));
    let t = Var::new("t_");
    let zeta = Var::new("zeta_");
    let (s, o, sign) = match direction {
        Direction::X => (x, y, -1),
        Direction::Y => (y, x, 1),
    };
    // G(s, o, zeta) = int_0^s R(t, o, zeta + sign*o*t/2) dt,
    // C(x, y, z) = G(s, o, z - sign*o*s/2)
    let shift = |var: Var| Poly::var(zeta).add(&Poly::var(o).mul(&Poly::var(var)).scale(&crate::expr::rat(sign, 2)));
    let along = p.substitute(z, &shift(t)).substitute(s, &Poly::var(t));
    let anti = along.antiderivative(t);
    let g = anti.substitute(t, &Poly::var(s)).sub(&anti.substitute(t, &Poly::zero()));
    let back = Poly::var(z).sub(&Poly::var(o).mul(&Poly::var(s)).scale(&crate::expr::rat(sign, 2)));
    Ok(RatExpr::from_poly(g.substitute(zeta, &back)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Zero,
    Affine,
    Free,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnknownStatus {
    pub unknown: String,
    pub status: Status,
    pub dim: usize,
    pub basis: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimCheck {
    pub claim: String,
    pub holds: bool,
    /// A vanishing statement, as opposed to a shape statement about the
    /// survivors.
    pub vanishing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EliminationReport {
    pub order: usize,
    pub degree: usize,
    /// Series order actually expanded; unknowns above `order` only close
    /// the band of the equations that reach them.
    pub expanded_order: usize,
    pub equations: usize,
    pub columns: usize,
    pub rank: usize,
    pub nullspace_dim: usize,
    pub unknowns: Vec<UnknownStatus>,
    pub claims: Vec<ClaimCheck>,
    pub notes: Vec<String>,
}

struct Ansatz {
    columns: Vec<(SeriesUnknown, Monomial)>,
    index: BTreeMap<(SeriesUnknown, Monomial), usize>,
    monomials: Vec<Monomial>,
}

impl Ansatz {
    fn new(unknowns: &[SeriesUnknown], degree: usize, x: Var, y: Var) -> Ansatz {
        let mut monomials = Vec::new();
        for d in 0..=degree as i32 {
            for i in (0..=d).rev() {
                monomials.push(Monomial::from_pairs(&[(x, i), (y, d - i)]));
            }
        }
        let mut columns = Vec::new();
        let mut index = BTreeMap::new();
        for &u in unknowns {
            for m in &monomials {
                index.insert((u, m.clone()), columns.len());
                columns.push((u, m.clone()));
            }
        }
        Ansatz { columns, index, monomials }
    }

    /// One row per `(x, y)` monomial of `expr` after substitution.
    fn rows(&self, expr: &JetLinExpr) -> Result<Vec<Vec<Scalar>>> {
        let mut acc: BTreeMap<Monomial, BTreeMap<usize, Scalar>> = BTreeMap::new();
        for (s, c) in expr.terms() {
            let u = SeriesUnknown::from_name(s.func.name()).ok_or_else(|| Error::InvalidArgument(format!("not a series unknown: {s}")))?;
            let coef = c.as_poly().ok_or_else(|| Error::Verification(format!("non-polynomial coefficient {c}")))?;
            for m in &self.monomials {
                let Some(&col) = self.index.get(&(u, m.clone())) else {
                    return Err(Error::InvalidArgument(format!("{} is not in the ansatz", u.name())));
                };
                let d = s.var_list().iter().fold(Poly::term(m.clone(), int(1)), |acc, &v| acc.derive(v));
                for (mono, k) in coef.mul(&d).terms() {
                    let e = acc.entry(mono.clone()).or_default().entry(col).or_insert_with(|| int(0));
                    *e += k;
                }
            }
        }
        if !expr.free().is_zero() {
            return Err(Error::InvalidArgument("block equation has an inhomogeneous part".into()));
        }
        let n = self.columns.len();
        Ok(acc
            .into_values()
            .map(|cols| {
                let mut row = vec![int(0); n];
                for (c, v) in cols {
                    row[c] = v;
                }
                row
            })
            .filter(|r| r.iter().any(|v| !v.is_zero_scalar()))
            .collect())
    }
}

/// The series unknowns entering the block equations, up to `order`.
fn eliminated_unknowns(order: usize) -> Vec<SeriesUnknown> {
    let mut v: Vec<SeriesUnknown> = (1..=order).flat_map(|m| [SeriesUnknown::c1(m), SeriesUnknown::c2(m)]).collect();
    v.push(SeriesUnknown::plain(4));
    v
}

/// Block equations of both directions without the constant blocks, which
/// only involve the integration constants (see
/// [`integration_constant_witness`]).
pub fn truncated_system(order: usize, degree: usize, forced: &[(SeriesUnknown, Scalar)]) -> Result<(LinearSystem, Vec<(SeriesUnknown, Monomial)>, usize)> {
    let expanded = order + 2;
    let unknowns = eliminated_unknowns(expanded);
    let mut system_rows: Vec<(Vec<Scalar>, String)> = Vec::new();
    let mut ansatz = None;
    for dir in [Direction::X, Direction::Y] {
        let ctx = SeriesContext::ch2(dir)?;
        let ans = ansatz.get_or_insert_with(|| Ansatz::new(&unknowns, degree, ctx.x, ctx.y));
        let blocks = residual_blocks_in(&ctx, expanded)?;
        for e in blocks.equations() {
            if e.key == BlockKey::Constant || !e.complete {
                continue;
            }
            if let BlockKey::Other(..) = e.key {
                return Err(Error::Verification(format!("unexpected block {}", e.key.label())));
            }
            for row in ans.rows(&e.expr)? {
                system_rows.push((row, format!("{:?} {} z^{}", dir, e.key.label(), e.z_power)));
            }
        }
    }
    let ans = ansatz.expect("two directions");
    let names = ans.columns.iter().map(|(u, m)| format!("{}[{}]", u.name(), Poly::term(m.clone(), int(1)))).collect();
    let mut ls = LinearSystem::new(names);
    for (row, label) in system_rows {
        ls.push(row, int(0), label);
    }
    for (u, value) in forced {
        let col = *ans.index.get(&(*u, Monomial::one())).ok_or_else(|| Error::InvalidArgument(format!("{} is not in the ansatz", u.name())))?;
        let mut row = vec![int(0); ans.columns.len()];
        row[col] = int(1);
        ls.push(row, value.clone(), format!("forced {}", u.name()));
    }
    Ok((ls, ans.columns, expanded))
}

/// Exact elimination with every unknown a polynomial of degree `<= degree`
/// in `(x, y)`.
pub fn solve_truncated(order: usize, degree: usize) -> Result<EliminationReport> {
    solve_truncated_forced(order, degree, &[])
}

/// As [`solve_truncated`], with the constant terms of some unknowns pinned.
pub fn solve_truncated_forced(order: usize, degree: usize, forced: &[(SeriesUnknown, Scalar)]) -> Result<EliminationReport> {
    if order < 1 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let (ls, columns, expanded) = truncated_system(order, degree, forced)?;
    ls.check_consistent()?;
    let null = ls.nullspace();
    let rank = ls.rank();
    let mut unknowns = Vec::new();
    for u in eliminated_unknowns(order) {
        let cols: Vec<usize> = (0..columns.len()).filter(|&c| columns[c].0 == u).collect();
        let proj: Vec<Vec<Scalar>> = null.iter().map(|v| cols.iter().map(|&c| v[c].clone()).collect()).collect();
        let ech = rref(&proj, cols.len());
        let basis: Vec<String> = ech
            .rows
            .iter()
            .filter(|r| r.iter().any(|v| !v.is_zero_scalar()))
            .map(|r| {
                let mut p = Poly::zero();
                for (i, v) in r.iter().enumerate() {
                    p.add_term(columns[cols[i]].1.clone(), v.clone());
                }
                p.to_string()
            })
            .collect();
        let affine = ech.rows.iter().all(|r| r.iter().enumerate().all(|(i, v)| v.is_zero_scalar() || columns[cols[i]].1.total_degree() <= 1));
        let status = if basis.is_empty() {
            Status::Zero
        } else if affine {
            Status::Affine
        } else {
            Status::Free
        };
        unknowns.push(UnknownStatus { unknown: u.name(), status, dim: basis.len(), basis });
    }
    let status_of = |name: String| unknowns.iter().find(|s| s.unknown == name).map(|s| s.status.clone());
    let zero = |name: String| status_of(name) == Some(Status::Zero);
    let mut claims = vec![
        ClaimCheck { claim: "C4 = 0".into(), holds: zero("C4".into()), vanishing: true },
        ClaimCheck { claim: format!("C2[m] = 0 for 1 <= m <= {order}"), holds: (1..=order).all(|m| zero(SeriesUnknown::c2(m).name())), vanishing: true },
    ];
    if order >= 3 {
        claims.push(ClaimCheck { claim: format!("C1[m] = 0 for 3 <= m <= {order}"), holds: (3..=order).all(|m| zero(SeriesUnknown::c1(m).name())), vanishing: true });
    }
    let low: Vec<usize> = (1..=order.min(2)).collect();
    claims.push(ClaimCheck {
        claim: "C1[1], C1[2] affine in (x, y)".into(),
        holds: low.iter().all(|&m| matches!(status_of(SeriesUnknown::c1(m).name()), Some(Status::Zero | Status::Affine))),
        vanishing: false,
    });
    let notes = vec![
        "C2[m] is eliminated for every m and C1[m] for m >= 3.".into(),
        "C3 does not enter the residual and is not eliminated.".into(),
        "Constant blocks involve C5, C6 and are always solvable; see the integration-constant witness.".into(),
        "Only equations unchanged by extending the series are used.".into(),
    ];
    Ok(EliminationReport {
        order,
        degree,
        expanded_order: expanded,
        equations: ls.rows.len(),
        columns: columns.len(),
        rank,
        nullspace_dim: null.len(),
        unknowns,
        claims,
        notes,
    })
}

impl EliminationReport {
    pub fn status(&self, u: SeriesUnknown) -> Option<&UnknownStatus> {
        self.unknowns.iter().find(|s| s.unknown == u.name())
    }

    pub fn claims_hold(&self) -> bool {
        self.claims.iter().all(|c| c.holds)
    }

    pub fn vanishing_claims_hold(&self) -> bool {
        self.claims.iter().filter(|c| c.vanishing).all(|c| c.holds)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Truncated elimination (M = {}, D = {})\n", self.order, self.degree);
        let _ = writeln!(
            s,
            "{} equations, {} coefficients, rank {}, nullspace dimension {} (series expanded to order {}).\n",
            self.equations, self.columns, self.rank, self.nullspace_dim, self.expanded_order
        );
        let _ = writeln!(s, "| unknown | status | dim | basis |");
        let _ = writeln!(s, "|---|---|---|---|");
        for u in &self.unknowns {
            let _ = writeln!(s, "| {} | {:?} | {} | {} |", u.unknown, u.status, u.dim, u.basis.join(", "));
        }
        let _ = writeln!(s, "\n| claim | holds |\n|---|---|");
        for c in &self.claims {
            let _ = writeln!(s, "| {} | {} |", c.claim, if c.holds { "yes" } else { "NO" });
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s);
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
        }
        s
    }
}

/// `f4` with every unknown reported zero removed. Fails if the result
/// still depends on `a`.
pub fn f4_reconstruct(report: &EliminationReport) -> Result<JetLinExpr> {
    let (_, f4) = build_series(report.order)?;
    let zero: Vec<Var> = report.unknowns.iter().filter(|s| s.status == Status::Zero).map(|s| Var::new(&s.unknown)).collect();
    let f4 = f4.substitute(&|v| zero.contains(&v).then(RatExpr::zero));
    let a = a_var();
    for (s, c) in f4.terms() {
        if c.contains_var(Var::U) || c.contains_var(a) {
            return Err(Error::Verification(format!("f4 still depends on a through {s}")));
        }
    }
    Ok(f4)
}
