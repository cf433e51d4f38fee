//! Collocation experiments on finite ansatz spaces, and a finite-difference
//! oracle for Lie derivatives.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{int, rat, Monomial, Poly, RatExpr, Scalar, Var};
use crate::linalg::modp::{add_mod, crt, inv_mod, large_primes, mul_mod, rational_reconstruct, scalar_mod, sub_mod, ModRref};
use crate::liecalc::{conformal_split, lie_derivative_coord};
use crate::models::{ModelSpace, SymTensor2, VectorField};

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Killing,
    Conformal,
    Homothetic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Killing => "killing",
            Mode::Conformal => "conformal",
            Mode::Homothetic => "homothetic",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "killing" => Ok(Mode::Killing),
            "conformal" => Ok(Mode::Conformal),
            "homothetic" => Ok(Mode::Homothetic),
            _ => Err(Error::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

/// Each coordinate component of the field ranges over monomials in the chart
/// variables of degree at most `degree`, times `u^k` for `|k| <= k_range`,
/// plus `extras`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub degree: u32,
    pub k_range: u32,
    pub extras: Vec<RatExpr>,
}

fn monomials(vars: &[Var], degree: u32) -> Vec<Monomial> {
    fn rec(vars: &[Var], left: u32, cur: &mut Vec<(Var, i32)>, out: &mut Vec<Monomial>) {
        let Some((&v, rest)) = vars.split_first() else {
            out.push(Monomial::from_pairs(cur));
            return;
        };
        for e in (0..=left).rev() {
            cur.push((v, e as i32));
            rec(rest, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for t in 0..=degree {
        let mut level = Vec::new();
        // exactly degree t: recurse with budget t and keep the full ones
        rec(vars, t, &mut Vec::new(), &mut level);
        out.extend(level.into_iter().filter(|m| m.degree_without_u() == t as i32));
    }
    out
}

impl AnsatzSpec {
    pub fn new(degree: u32, k_range: u32) -> AnsatzSpec {
        AnsatzSpec { degree, k_range, extras: Vec::new() }
    }

    pub fn with_extras(mut self, extras: Vec<RatExpr>) -> AnsatzSpec {
        self.extras = extras;
        self
    }

    /// Basis of one coefficient function.
    pub fn basis(&self, model: &ModelSpace) -> Result<Vec<RatExpr>> {
        if self.k_range > 0 && model.chart.exp_var().is_none() {
            return Err(Error::InvalidArgument(format!("powers of u need an exponential chart variable; {} has none", model.name)));
        }
        let k = self.k_range as i32;
        let mut out = Vec::new();
        for m in monomials(model.vars(), self.degree) {
            for e in -k..=k {
                let mut m = m.clone();
                m.set(Var::U, e);
                out.push(RatExpr::from_poly(Poly::term(m, int(1))));
            }
        }
        for e in &self.extras {
            if e.is_zero() || out.contains(e) {
                return Err(Error::InvalidArgument(format!("extra basis element `{e}` is zero or repeated")));
            }
            for v in e.vars() {
                if !v.is_u() && !model.chart.contains(v) {
                    return Err(Error::UnknownVariable(v.name().into()));
                }
            }
            out.push(e.clone());
        }
        Ok(out)
    }

    pub fn columns(&self, model: &ModelSpace) -> Result<usize> {
        Ok(self.basis(model)?.len() * model.dim())
    }

    /// Coefficients of a coordinate field in this ansatz, when it lies in
    /// the span of the monomial basis elements.
    pub fn coordinates(&self, model: &ModelSpace, xi: &VectorField) -> Result<Option<Vec<Scalar>>> {
        let basis = self.basis(model)?;
        let xi = model.to_coordinate(xi);
        let index: std::collections::HashMap<Monomial, usize> = basis
            .iter()
            .enumerate()
            .filter_map(|(j, b)| {
                let (m, c) = b.as_poly()?.as_monomial()?;
                c.is_one().then(|| (m.clone(), j))
            })
            .collect();
        let nb = basis.len();
        let mut out = vec![Scalar::zero(); nb * model.dim()];
        for (mu, c) in xi.comps.iter().enumerate() {
            let Some(p) = c.as_poly() else { return Ok(None) };
            for (m, coef) in p.terms() {
                let Some(&j) = index.get(m) else { return Ok(None) };
                out[mu * nb + j] = coef.clone();
            }
        }
        Ok(Some(out))
    }

    /// The coordinate field with coefficient vector `c`.
    pub fn field(&self, model: &ModelSpace, c: &[Scalar]) -> Result<VectorField> {
        let basis = self.basis(model)?;
        field_from(&basis, model.dim(), c)
    }
}

fn field_from(basis: &[RatExpr], dim: usize, c: &[Scalar]) -> Result<VectorField> {
    let nb = basis.len();
    if c.len() != nb * dim {
        return Err(Error::InvalidArgument(format!("expected {} coefficients, got {}", nb * dim, c.len())));
    }
    let comps = (0..dim)
        .map(|mu| {
            let mut num = Poly::zero();
            let mut rest = RatExpr::zero();
            for (j, b) in basis.iter().enumerate() {
                let x = &c[mu * nb + j];
                if x.is_zero() {
                    continue;
                }
                match b.as_poly() {
                    Some(p) => num = num.add(&p.scale(x)),
                    None => rest = &rest + &b.scale(x),
                }
            }
            &RatExpr::from_poly(num) + &rest
        })
        .collect();
    Ok(VectorField::coord(comps))
}

/// A chart point together with an independent value of `u`. Identities in
/// chart variables and `u = exp(a/2)` hold iff they hold as polynomial
/// identities in independent `(a, u)`, so `u` is sampled on its own.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub coords: Vec<Scalar>,
    pub u: Scalar,
}

impl SamplePoint {
    pub fn value(&self, model: &ModelSpace, v: Var) -> Option<Scalar> {
        if v.is_u() {
            Some(self.u.clone())
        } else {
            model.chart.index_of(v).map(|i| self.coords[i].clone())
        }
    }

    pub fn eval(&self, model: &ModelSpace, e: &RatExpr) -> Result<Scalar> {
        e.eval_with(&|v| self.value(model, v))
    }
}

/// Small rationals from a seeded stream: coordinates in `[-2, 2]`, `y` in
/// `(0, 2]`, `u` in `[1/2, 2]`.
pub struct PointSampler {
    rng: ChaCha8Rng,
    positive: Vec<bool>,
}

impl PointSampler {
    pub fn new(model: &ModelSpace, seed: u64) -> PointSampler {
        let positive = model.vars().iter().map(|v| v.name() == "y").collect();
        PointSampler { rng: ChaCha8Rng::seed_from_u64(seed), positive }
    }

    fn small(&mut self, lo: i64, hi: i64) -> Scalar {
        let q = self.rng.gen_range(1..=16i64);
        let n = self.rng.gen_range(lo * q..=hi * q);
        rat(n, q)
    }

    pub fn next_point(&mut self) -> SamplePoint {
        let mut coords = Vec::with_capacity(self.positive.len());
        for i in 0..self.positive.len() {
            let c = if self.positive[i] {
                let q = self.rng.gen_range(1..=16i64);
                rat(self.rng.gen_range(1..=2 * q), q)
            } else {
                self.small(-2, 2)
            };
            coords.push(c);
        }
        let q = self.rng.gen_range(1..=16i64);
        let u = rat(self.rng.gen_range((q + 1) / 2..=2 * q), q);
        SamplePoint { coords, u }
    }
}

/// Symbolic pieces evaluated at every collocation point.
struct Ingredients {
    n: usize,
    basis: Vec<RatExpr>,
    dbasis: Vec<Vec<RatExpr>>,
    g: Vec<Vec<RatExpr>>,
    dg: Vec<Vec<Vec<RatExpr>>>,
    h: Vec<Vec<RatExpr>>,
    denominators: Vec<RatExpr>,
}

impl Ingredients {
    fn new(model: &ModelSpace, basis: Vec<RatExpr>) -> Ingredients {
        let n = model.dim();
        let vars = model.vars();
        let dbasis: Vec<Vec<RatExpr>> = basis.iter().map(|b| vars.iter().map(|&v| b.derive(v)).collect()).collect();
        let g: Vec<Vec<RatExpr>> = model.metric.matrix().clone();
        let dg = vars.iter().map(|&v| g.iter().map(|row| row.iter().map(|e| e.derive(v)).collect()).collect()).collect();
        let h = model.inverse_metric.clone();
        let mut denominators: Vec<RatExpr> = Vec::new();
        for e in g.iter().flatten().chain(h.iter().flatten()).chain(basis.iter()) {
            let d = RatExpr::from_poly(e.denom().clone());
            if d.as_constant().is_none() && !denominators.contains(&d) {
                denominators.push(d);
            }
        }
        Ingredients { n, basis, dbasis, g, dg, h, denominators }
    }

    fn ncols(&self) -> usize {
        self.n * self.basis.len()
    }

    fn rows_per_point(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn regular(&self, model: &ModelSpace, pt: &SamplePoint) -> bool {
        self.denominators.iter().all(|d| matches!(pt.eval(model, d), Ok(x) if !x.is_zero()))
    }

    /// Constraint rows at one point modulo `p`: the upper triangle of
    /// `L_xi g` (killing) or of its trace-free part (conformal).
    fn rows_mod(&self, model: &ModelSpace, pt: &SamplePoint, mode: Mode, p: u64) -> Option<Vec<Vec<u64>>> {
        let n = self.n;
        let nb = self.basis.len();
        let coords: Vec<u64> = pt.coords.iter().map(|c| scalar_mod(c, p)).collect::<Option<_>>()?;
        let u = scalar_mod(&pt.u, p)?;
        let val = |v: Var| if v.is_u() { Some(u) } else { model.chart.index_of(v).map(|i| coords[i]) };
        let ev = |e: &RatExpr| e.eval_mod(p, &val);
        let bval: Vec<u64> = self.basis.iter().map(&ev).collect::<Option<_>>()?;
        let bder: Vec<Vec<u64>> = self.dbasis.iter().map(|r| r.iter().map(&ev).collect::<Option<_>>()).collect::<Option<_>>()?;
        let g: Vec<Vec<u64>> = self.g.iter().map(|r| r.iter().map(&ev).collect::<Option<_>>()).collect::<Option<_>>()?;
        let dg: Vec<Vec<Vec<u64>>> = self
            .dg
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(&ev).collect::<Option<_>>()).collect::<Option<_>>())
            .collect::<Option<_>>()?;
        let ncols = self.ncols();
        let mut s = vec![vec![0u64; ncols]; n * n];
        for a in 0..n {
            for b in a..n {
                let row = &mut s[a * n + b];
                for mu in 0..n {
                    for j in 0..nb {
                        let mut x = mul_mod(bval[j], dg[mu][a][b], p);
                        x = add_mod(x, mul_mod(g[mu][b], bder[j][a], p), p);
                        x = add_mod(x, mul_mod(g[a][mu], bder[j][b], p), p);
                        row[mu * nb + j] = x;
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                s[a * n + b] = s[b * n + a].clone();
            }
        }
        if mode == Mode::Killing {
            return Some((0..n).flat_map(|a| (a..n).map(move |b| (a, b))).map(|(a, b)| s[a * n + b].clone()).collect());
        }
        let h: Vec<Vec<u64>> = self.h.iter().map(|r| r.iter().map(&ev).collect::<Option<_>>()).collect::<Option<_>>()?;
        let mut tr = vec![0u64; ncols];
        for c in 0..n {
            for d in 0..n {
                if h[c][d] == 0 {
                    continue;
                }
                for (t, x) in tr.iter_mut().zip(&s[c * n + d]) {
                    *t = add_mod(*t, mul_mod(h[c][d], *x, p), p);
                }
            }
        }
        let inv_n = inv_mod(n as u64 % p, p)?;
        let mut out = Vec::with_capacity(self.rows_per_point());
        for a in 0..n {
            for b in a..n {
                let f = mul_mod(g[a][b], inv_n, p);
                let row: Vec<u64> = s[a * n + b].iter().zip(&tr).map(|(&x, &t)| sub_mod(x, mul_mod(f, t, p), p)).collect();
                out.push(row);
            }
        }
        Some(out)
    }
}

#[derive(Clone, Debug)]
pub struct CollocationConfig {
    pub seed: u64,
    /// Starting point count; by default enough rows to cover every column.
    pub initial_points: Option<usize>,
    /// Upper bound on the point count before giving up.
    pub max_points: usize,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        CollocationConfig { seed: DEFAULT_SEED, initial_points: None, max_points: 4096 }
    }
}

impl CollocationConfig {
    pub fn with_seed(seed: u64) -> CollocationConfig {
        CollocationConfig { seed, ..Default::default() }
    }
}

#[derive(Clone, Debug)]
pub struct NullspaceReport {
    pub model: String,
    pub mode: Mode,
    pub ansatz: AnsatzSpec,
    pub columns: usize,
    pub rank: usize,
    pub dimension: usize,
    pub points: usize,
    pub resampled: usize,
    pub primes: usize,
    /// Exact nullspace basis in ansatz coordinates.
    pub basis: Vec<Vec<Scalar>>,
    pub fields: Vec<VectorField>,
    pub rho: Vec<RatExpr>,
    /// Rank after each doubling of the point set.
    pub rank_history: Vec<(usize, usize)>,
}

impl NullspaceReport {
    pub fn all_rho_zero(&self) -> bool {
        self.rho.iter().all(RatExpr::is_zero)
    }

    pub fn to_json(&self, model: &ModelSpace) -> Value {
        json!({
            "model": self.model,
            "mode": self.mode,
            "ansatz": { "degree": self.ansatz.degree, "k_range": self.ansatz.k_range,
                        "extras": self.ansatz.extras.iter().map(|e| e.to_string()).collect::<Vec<_>>() },
            "columns": self.columns,
            "rank": self.rank,
            "dimension": self.dimension,
            "points": self.points,
            "resampled": self.resampled,
            "primes": self.primes,
            "rank_history": self.rank_history,
            "basis": self.fields.iter().zip(&self.rho).map(|(f, r)| json!({
                "field": f.display(&model.chart),
                "rho": r.to_string(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_markdown(&self, model: &ModelSpace) -> String {
        let mut s = format!(
            "### {} / {} (degree {}, k range {})\n\ncolumns {}, rank {}, dimension **{}**, points {}\n\n| # | field | rho |\n|---|---|---|\n",
            self.model, self.mode, self.ansatz.degree, self.ansatz.k_range, self.columns, self.rank, self.dimension, self.points
        );
        for (i, (f, r)) in self.fields.iter().zip(&self.rho).enumerate() {
            s += &format!("| {} | `{}` | `{}` |\n", i + 1, f.display(&model.chart), r);
        }
        s
    }
}

/// Exact rank of a set of rational vectors.
pub fn span_rank(vectors: &[Vec<Scalar>]) -> usize {
    let Some(first) = vectors.first() else { return 0 };
    crate::linalg::rank(vectors, first.len())
}

/// `span(a) ⊆ span(b)`.
pub fn is_subspace(a: &[Vec<Scalar>], b: &[Vec<Scalar>]) -> bool {
    let mut all = b.to_vec();
    all.extend(a.iter().cloned());
    span_rank(&all) == span_rank(b)
}

/// `v ∈ span(b)`.
pub fn in_span(v: &[Scalar], b: &[Vec<Scalar>]) -> bool {
    is_subspace(&[v.to_vec()], b)
}

fn certify(model: &ModelSpace, xi: &VectorField, mode: Mode) -> Option<RatExpr> {
    let lie = lie_derivative_coord(model, xi);
    match mode {
        Mode::Killing => lie.is_zero().then(RatExpr::zero),
        _ => {
            let split = conformal_split(&lie, model);
            split.is_conformal().then_some(split.rho)
        }
    }
}

/// Reconstructs rational vectors from residues modulo the product of the
/// primes seen so far.
fn reconstruct(acc: &[Vec<(BigInt, BigInt)>]) -> Option<Vec<Vec<Scalar>>> {
    acc.iter().map(|v| v.iter().map(|(r, m)| rational_reconstruct(r, m)).collect::<Option<Vec<_>>>()).collect()
}

/// Exact nullspace of the collocation system of `mode` over `ansatz`, with
/// every basis field certified symbolically.
pub fn collocation_nullspace(model: &ModelSpace, ansatz: &AnsatzSpec, mode: Mode) -> Result<NullspaceReport> {
    collocation_nullspace_with(model, ansatz, mode, &CollocationConfig::default())
}

pub fn collocation_nullspace_with(model: &ModelSpace, ansatz: &AnsatzSpec, mode: Mode, config: &CollocationConfig) -> Result<NullspaceReport> {
    if mode == Mode::Homothetic {
        let conformal = collocation_nullspace_with(model, ansatz, Mode::Conformal, config)?;
        return homothetic_from_conformal(model, &conformal, config);
    }
    let basis = ansatz.basis(model)?;
    let ing = Ingredients::new(model, basis.clone());
    let ncols = ing.ncols();
    let primes = large_primes(6);
    let mut sampler = PointSampler::new(model, config.seed);
    let mut points: Vec<SamplePoint> = Vec::new();
    let mut resampled = 0;
    let mut main = ModRref::new(primes[0], ncols);
    let mut target = config.initial_points.unwrap_or(ncols / ing.rows_per_point() + 1).max(2);
    let mut history: Vec<(usize, usize)> = Vec::new();
    loop {
        while points.len() < target {
            let pt = sampler.next_point();
            if !ing.regular(model, &pt) {
                resampled += 1;
                continue;
            }
            match ing.rows_mod(model, &pt, mode, primes[0]) {
                Some(rows) => {
                    for r in rows {
                        main.add_row(r);
                    }
                    points.push(pt);
                }
                None => resampled += 1,
            }
            if resampled > 100 * target {
                return Err(Error::Verification("too many singular sample points".into()));
            }
        }
        history.push((points.len(), main.rank()));
        let stable = main.rank() == ncols || (history.len() >= 3 && history[history.len() - 3..].iter().all(|h| h.1 == main.rank()));
        if stable {
            if let Some((basis_q, fields, rho, used)) = exact_basis(model, &ing, &points, mode, &main, &primes)? {
                return Ok(NullspaceReport {
                    model: model.name.clone(),
                    mode,
                    ansatz: ansatz.clone(),
                    columns: ncols,
                    rank: main.rank(),
                    dimension: basis_q.len(),
                    points: points.len(),
                    resampled,
                    primes: used,
                    basis: basis_q,
                    fields,
                    rho,
                    rank_history: history,
                });
            }
        }
        target *= 2;
        if target > config.max_points {
            return Err(Error::Verification(format!("collocation rank did not certify within {} points", config.max_points)));
        }
    }
}

type ExactBasis = (Vec<Vec<Scalar>>, Vec<VectorField>, Vec<RatExpr>, usize);

/// Lifts the modular nullspace to the rationals and certifies it; `None`
/// means more points are needed.
fn exact_basis(model: &ModelSpace, ing: &Ingredients, points: &[SamplePoint], mode: Mode, main: &ModRref, primes: &[u64]) -> Result<Option<ExactBasis>> {
    let free = main.free_columns();
    let mut acc: Vec<Vec<(BigInt, BigInt)>> = main
        .nullspace()
        .into_iter()
        .map(|v| v.into_iter().map(|x| (BigInt::from(x), BigInt::from(main.prime()))).collect())
        .collect();
    let mut used = 1;
    let mut last: Option<Vec<Vec<Scalar>>> = None;
    for &p in &primes[1..] {
        if let Some(q) = reconstruct(&acc) {
            if last.as_ref() == Some(&q) || used >= 2 {
                let fields: Vec<VectorField> = q.iter().map(|c| field_from(&ing.basis, ing.n, c)).collect::<Result<_>>()?;
                let mut rho = Vec::with_capacity(fields.len());
                for f in &fields {
                    match certify(model, f, mode) {
                        Some(r) => rho.push(r),
                        None => return Ok(None),
                    }
                }
                return Ok(Some((q, fields, rho, used)));
            }
            last = Some(q);
        }
        let mut other = ModRref::new(p, main.ncols());
        for pt in points {
            if let Some(rows) = ing.rows_mod(model, pt, mode, p) {
                for r in rows {
                    other.add_row(r);
                }
            }
        }
        if other.free_columns() != free {
            // unlucky prime or point dropped modulo p
            continue;
        }
        for (a, v) in acc.iter_mut().zip(other.nullspace()) {
            for (e, x) in a.iter_mut().zip(v) {
                *e = crt((&e.0, &e.1), x, p);
            }
        }
        used += 1;
    }
    Ok(None)
}

fn homothetic_from_conformal(model: &ModelSpace, conformal: &NullspaceReport, config: &CollocationConfig) -> Result<NullspaceReport> {
    let grads: Vec<Vec<RatExpr>> = conformal.rho.iter().map(|r| model.vars().iter().map(|&v| r.derive(v)).collect()).collect();
    let k = grads.len();
    let mut sampler = PointSampler::new(model, config.seed ^ 0x9e37_79b9);
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    let mut history = Vec::new();
    let mut target = 4usize;
    let mut npts = 0;
    let mut resampled = 0;
    let coeffs = loop {
        while npts < target {
            let pt = sampler.next_point();
            let vals: Result<Vec<Vec<Scalar>>> = (0..model.dim()).map(|l| grads.iter().map(|g| pt.eval(model, &g[l])).collect()).collect();
            match vals {
                Ok(v) => {
                    rows.extend(v);
                    npts += 1;
                }
                Err(_) => resampled += 1,
            }
            if resampled > 100 * target {
                return Err(Error::Verification("too many singular sample points".into()));
            }
        }
        let r = if k == 0 { 0 } else { crate::linalg::rank(&rows, k) };
        history.push((npts, r));
        if r == k || (history.len() >= 3 && history[history.len() - 3..].iter().all(|h| h.1 == r)) {
            let null = if k == 0 { Vec::new() } else { crate::linalg::nullspace(&rows, k) };
            // certify: the combined potential has zero gradient
            let ok = null.iter().all(|c| {
                let rho: RatExpr = c.iter().zip(&conformal.rho).map(|(x, r)| r.scale(x)).sum();
                model.vars().iter().all(|&v| rho.derive(v).is_zero())
            });
            if ok {
                break null;
            }
        }
        target *= 2;
        if target > config.max_points {
            return Err(Error::Verification("homothetic constraint did not certify".into()));
        }
    };
    let vectors: Vec<Vec<Scalar>> = coeffs
        .iter()
        .map(|c| {
            let mut v = vec![Scalar::zero(); conformal.columns];
            for (x, b) in c.iter().zip(&conformal.basis) {
                for (e, y) in v.iter_mut().zip(b) {
                    *e += x * y;
                }
            }
            v
        })
        .collect();
    let basis_q = if vectors.is_empty() { vectors } else { crate::linalg::rref(&vectors, conformal.columns).rows };
    let fields: Vec<VectorField> = basis_q.iter().map(|c| conformal.ansatz.field(model, c)).collect::<Result<_>>()?;
    let mut rho = Vec::new();
    for f in &fields {
        rho.push(certify(model, f, Mode::Conformal).ok_or_else(|| Error::Verification("homothetic basis field is not conformal".into()))?);
    }
    Ok(NullspaceReport {
        model: model.name.clone(),
        mode: Mode::Homothetic,
        ansatz: conformal.ansatz.clone(),
        columns: conformal.columns,
        rank: conformal.columns - basis_q.len(),
        dimension: basis_q.len(),
        points: conformal.points + npts,
        resampled: conformal.resampled + resampled,
        primes: conformal.primes,
        basis: basis_q,
        fields,
        rho,
        rank_history: history,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HomotheticReport {
    pub model: String,
    pub killing_dim: usize,
    pub homothetic_dim: usize,
    pub conformal_dim: usize,
    /// Constant potentials of the homothetic basis fields.
    pub potentials: Vec<String>,
    pub homothetic_equals_killing: bool,
    pub all_rho_zero: bool,
}

/// Killing, homothetic and conformal nullspaces over one ansatz.
pub fn homothetic_check(model: &ModelSpace, ansatz: &AnsatzSpec) -> Result<HomotheticReport> {
    homothetic_check_with(model, ansatz, &CollocationConfig::default())
}

pub fn homothetic_check_with(model: &ModelSpace, ansatz: &AnsatzSpec, config: &CollocationConfig) -> Result<HomotheticReport> {
    let killing = collocation_nullspace_with(model, ansatz, Mode::Killing, config)?;
    let conformal = collocation_nullspace_with(model, ansatz, Mode::Conformal, config)?;
    let homothetic = homothetic_from_conformal(model, &conformal, config)?;
    let equal = killing.dimension == homothetic.dimension && is_subspace(&killing.basis, &homothetic.basis) && is_subspace(&homothetic.basis, &killing.basis);
    Ok(HomotheticReport {
        model: model.name.clone(),
        killing_dim: killing.dimension,
        homothetic_dim: homothetic.dimension,
        conformal_dim: conformal.dimension,
        potentials: homothetic.rho.iter().map(|r| r.to_string()).collect(),
        homothetic_equals_killing: equal,
        all_rho_zero: homothetic.all_rho_zero(),
    })
}

/// Right-invariant fields of a Damek–Ricci model in exponential
/// coordinates: `∂_{v_i} + 1/2 Σ A^r_ij v_j ∂_{z_r}`, `∂_{z_r}` and
/// `1/2 Σ v_i ∂_{v_i} + Σ z_r ∂_{z_r} + ∂_a`; each is checked to be Killing.
pub fn right_invariant_killing_fields(model: &ModelSpace) -> Result<Vec<VectorField>> {
    let spec = model.structure().ok_or_else(|| Error::InvalidModel(format!("{} is not a Damek-Ricci model", model.name)))?;
    let (k, m) = (spec.k, spec.m);
    let n = model.dim();
    let x: Vec<RatExpr> = model.vars().iter().map(|&v| RatExpr::var(v)).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..k {
        let mut c = vec![RatExpr::zero(); n];
        c[i] = RatExpr::one();
        for r in 0..m {
            let s: RatExpr = (0..k).filter(|&j| !spec.a[r][i][j].is_zero()).map(|j| x[j].scale(&spec.a[r][i][j])).sum();
            c[k + r] = s.scale(&rat(1, 2));
        }
        out.push(VectorField::coord(c));
    }
    for r in 0..m {
        let mut c = vec![RatExpr::zero(); n];
        c[k + r] = RatExpr::one();
        out.push(VectorField::coord(c));
    }
    let mut c = vec![RatExpr::zero(); n];
    for i in 0..k {
        c[i] = x[i].scale(&rat(1, 2));
    }
    for r in 0..m {
        c[k + r] = x[k + r].clone();
    }
    c[n - 1] = RatExpr::one();
    out.push(VectorField::coord(c));
    for (i, f) in out.iter().enumerate() {
        if !lie_derivative_coord(model, f).is_zero() {
            return Err(Error::Verification(format!("right-invariant field #{} is not Killing", i + 1)));
        }
    }
    Ok(out)
}

fn eval_point_f64(model: &ModelSpace, point: &[f64], e: &RatExpr) -> Result<f64> {
    let u = model.chart.exp_var().and_then(|a| model.chart.index_of(a)).map(|i| (point[i] / 2.0).exp());
    let v = e.eval_f64(&|v| if v.is_u() { u } else { model.chart.index_of(v).map(|i| point[i]) })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Singular)
    }
}

/// Evaluates a tensor at a chart point (`u = exp(a/2)`).
pub fn eval_tensor_f64(model: &ModelSpace, s: &SymTensor2, point: &[f64]) -> Result<Vec<Vec<f64>>> {
    s.matrix().iter().map(|r| r.iter().map(|e| eval_point_f64(model, point, e)).collect()).collect()
}

/// Central-difference approximation of `(L_xi g)_{mu nu}` in coordinates,
/// using only values of `g` and `xi`.
pub fn fd_oracle_lie_derivative(model: &ModelSpace, xi: &VectorField, point: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let n = model.dim();
    if point.len() != n || !(h > 0.0) {
        return Err(Error::InvalidArgument("point dimension or step size".into()));
    }
    let xi = model.to_coordinate(xi);
    let g_at = |p: &[f64]| -> Result<Vec<Vec<f64>>> { eval_tensor_f64(model, &model.metric, p) };
    let xi_at = |p: &[f64]| -> Result<Vec<f64>> { xi.comps.iter().map(|c| eval_point_f64(model, p, c)).collect() };
    let g0 = g_at(point)?;
    let x0 = xi_at(point)?;
    let mut dg = Vec::with_capacity(n);
    let mut dxi = Vec::with_capacity(n);
    // five-point central stencil, truncation error O(h^4)
    const STENCIL: [(f64, f64); 4] = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
    for l in 0..n {
        let mut dgl = vec![vec![0.0; n]; n];
        let mut dxl = vec![0.0; n];
        for (offset, w) in STENCIL {
            let mut p = point.to_vec();
            p[l] += offset * h;
            let (gp, xp) = (g_at(&p)?, xi_at(&p)?);
            for a in 0..n {
                dxl[a] += w * xp[a] / (12.0 * h);
                for b in 0..n {
                    dgl[a][b] += w * gp[a][b] / (12.0 * h);
                }
            }
        }
        dg.push(dgl);
        dxi.push(dxl);
    }
    let mut out = vec![vec![0.0; n]; n];
    for mu in 0..n {
        for nu in 0..n {
            let mut acc = 0.0;
            for l in 0..n {
                acc += x0[l] * dg[l][mu][nu] + g0[l][nu] * dxi[mu][l] + g0[mu][l] * dxi[nu][l];
            }
            out[mu][nu] = acc;
        }
    }
    Ok(out)
}

/// `S(E_a, E_b)` from coordinate values.
pub fn to_frame_f64(model: &ModelSpace, s: &[Vec<f64>], point: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = model.dim();
    let e: Vec<Vec<f64>> = model.frame.iter().map(|r| r.iter().map(|c| eval_point_f64(model, point, c)).collect()).collect::<Result<_>>()?;
    Ok((0..n)
        .map(|a| (0..n).map(|b| (0..n).flat_map(|mu| (0..n).map(move |nu| (mu, nu))).map(|(mu, nu)| e[a][mu] * e[b][nu] * s[mu][nu]).sum()).collect())
        .collect())
}

/// Relative error in the max norm, against `max(1, |b|_max)`.
pub fn relative_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = b.iter().flatten().fold(1.0f64, |m, y| m.max(y.abs()));
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn agrees(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    relative_error(a, b) <= tol
}

/// Random element of the ansatz span with `terms` nonzero small integer
/// coefficients.
pub fn random_expr<R: Rng>(rng: &mut R, model: &ModelSpace, ansatz: &AnsatzSpec, terms: usize) -> Result<RatExpr> {
    let basis = ansatz.basis(model)?;
    let mut acc = RatExpr::zero();
    for _ in 0..terms {
        let b = &basis[rng.gen_range(0..basis.len())];
        let mut c = rng.gen_range(-3i64..=3);
        if c == 0 {
            c = 1;
        }
        acc = &acc + &b.scale(&int(c));
    }
    Ok(acc)
}

pub fn random_field<R: Rng>(rng: &mut R, model: &ModelSpace, ansatz: &AnsatzSpec, terms: usize) -> Result<VectorField> {
    let comps = (0..model.dim()).map(|_| random_expr(rng, model, ansatz, terms)).collect::<Result<_>>()?;
    Ok(VectorField::coord(comps))
}

/// Random chart point with `y > 0` and `|a| <= 1`.
pub fn random_point_f64<R: Rng>(rng: &mut R, model: &ModelSpace) -> Vec<f64> {
    model
        .vars()
        .iter()
        .map(|v| match v.name() {
            "y" => rng.gen_range(0.5..2.0),
            "a" => rng.gen_range(-1.0..1.0),
            _ => rng.gen_range(-1.5..1.5),
        })
        .collect()
}
