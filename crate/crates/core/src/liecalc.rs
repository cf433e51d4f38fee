//! Lie derivatives of the metric, Levi-Civita connection, gradients and the
//! conformal split.

use crate::error::{Error, Result};
use crate::expr::{RatExpr, Var};
use crate::models::{Basis, ModelSpace, SymTensor2, VectorField};

/// Values that frame Lie derivatives can be computed over: plain
/// expressions, or expressions linear in jets of unknown functions.
pub trait FieldValue: Clone {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul_expr(&self, c: &RatExpr) -> Self;
    fn derive(&self, v: Var) -> Self;
}

impl FieldValue for RatExpr {
    fn zero() -> Self {
        RatExpr::zero()
    }
    fn is_zero(&self) -> bool {
        RatExpr::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_expr(&self, c: &RatExpr) -> Self {
        self * c
    }
    fn derive(&self, v: Var) -> Self {
        RatExpr::derive(self, v)
    }
}

/// `E_a(h)` for any field value.
pub fn frame_apply<T: FieldValue>(model: &ModelSpace, a: usize, h: &T) -> T {
    let mut acc = T::zero();
    for (c, &v) in model.frame[a].iter().zip(model.vars()) {
        if !c.is_zero() {
            acc = acc.add(&h.derive(v).mul_expr(c));
        }
    }
    acc
}

/// `(L_X g)(E_a, E_b) = sum_i f_i (L_{E_i} g)_{ab} + E_a(f_b) + E_b(f_a)` for
/// `X = sum_i f_i E_i`. Returns the full symmetric matrix.
pub fn frame_lie_matrix<T: FieldValue>(model: &ModelSpace, f: &[T]) -> Result<Vec<Vec<T>>> {
    let tables = model.generator_tables()?;
    let n = model.dim();
    if f.len() != n {
        return Err(Error::InvalidArgument(format!("expected {n} frame coefficients, got {}", f.len())));
    }
    let mut out = vec![vec![T::zero(); n]; n];
    for a in 0..n {
        for b in a..n {
            let mut acc = T::zero();
            for (i, t) in tables.iter().enumerate() {
                let c = t.get(a, b);
                if !c.is_zero() && !f[i].is_zero() {
                    acc = acc.add(&f[i].mul_expr(c));
                }
            }
            acc = acc.add(&frame_apply(model, a, &f[b]));
            acc = acc.add(&frame_apply(model, b, &f[a]));
            out[a][b] = acc.clone();
            out[b][a] = acc;
        }
    }
    Ok(out)
}

/// `(L_xi g)_{mu nu} = xi^l d_l g_{mu nu} + g_{l nu} d_mu xi^l + g_{mu l} d_nu xi^l`.
pub fn lie_derivative_coord(model: &ModelSpace, xi: &VectorField) -> SymTensor2 {
    let xi = model.to_coordinate(xi);
    let n = model.dim();
    let vars = model.vars();
    let g = &model.metric;
    // dxi[mu][l] = d_mu xi^l
    let dxi: Vec<Vec<RatExpr>> = vars.iter().map(|&v| xi.comps.iter().map(|c| c.derive(v)).collect()).collect();
    let mut out = SymTensor2::zero(Basis::Coordinate, n);
    for mu in 0..n {
        for nu in mu..n {
            let mut acc = RatExpr::zero();
            for l in 0..n {
                if !xi.comps[l].is_zero() {
                    let dg = g.get(mu, nu).derive(vars[l]);
                    if !dg.is_zero() {
                        acc = &acc + &(&xi.comps[l] * &dg);
                    }
                }
                if !g.get(l, nu).is_zero() && !dxi[mu][l].is_zero() {
                    acc = &acc + &(g.get(l, nu) * &dxi[mu][l]);
                }
                if !g.get(mu, l).is_zero() && !dxi[nu][l].is_zero() {
                    acc = &acc + &(g.get(mu, l) * &dxi[nu][l]);
                }
            }
            out.set(mu, nu, acc);
        }
    }
    out
}

/// Frame-basis Lie derivative of the metric along `sum f_i E_i`.
pub fn lie_derivative_frame(model: &ModelSpace, f: &[RatExpr]) -> Result<SymTensor2> {
    SymTensor2::from_matrix(Basis::Frame, frame_lie_matrix(model, f)?)
}

/// `L_{E_a} g` in the frame basis for every frame field; each table must be
/// constant.
pub fn generator_lie_tables(model: &ModelSpace) -> Result<Vec<SymTensor2>> {
    if !matches!(model.kind, crate::models::ModelKind::DamekRicci(_)) {
        return Err(Error::NoGeneratorTables);
    }
    let mut out = Vec::with_capacity(model.dim());
    for a in 0..model.dim() {
        let s = lie_derivative_coord(model, &model.frame_field(a));
        let t = model.tensor_to_frame(&s);
        for i in 0..t.dim() {
            for j in 0..t.dim() {
                if t.get(i, j).as_constant().is_none() {
                    return Err(Error::NonConstantTable(format!(
                        "L_{} g ({}, {}) = {}",
                        model.frame_labels[a],
                        model.frame_labels[i],
                        model.frame_labels[j],
                        t.get(i, j)
                    )));
                }
            }
        }
        out.push(t);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ConformalSplit {
    pub rho: RatExpr,
    pub residual: SymTensor2,
}

impl ConformalSplit {
    pub fn is_conformal(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn is_killing(&self) -> bool {
        self.is_conformal() && self.rho.is_zero()
    }
}

/// `tr_g S` in the basis of `S`.
pub fn trace(s: &SymTensor2, model: &ModelSpace) -> RatExpr {
    let n = model.dim();
    match s.basis {
        Basis::Frame => (0..n).map(|i| s.get(i, i).clone()).sum(),
        Basis::Coordinate => {
            let h = &model.inverse_metric;
            let mut acc = RatExpr::zero();
            for mu in 0..n {
                for nu in 0..n {
                    if !h[mu][nu].is_zero() && !s.get(mu, nu).is_zero() {
                        acc = &acc + &(&h[mu][nu] * s.get(mu, nu));
                    }
                }
            }
            acc
        }
    }
}

/// `rho = tr_g S / (2n)`, `residual = S - (tr_g S / n) g`.
pub fn conformal_split(s: &SymTensor2, model: &ModelSpace) -> ConformalSplit {
    let n = model.dim() as i64;
    let tr = trace(s, model);
    let rho = tr.scale(&crate::expr::rat(1, 2 * n));
    let g = model.metric_in(s.basis);
    let residual = s.sub(&g.scale(&tr.scale(&crate::expr::rat(1, n))));
    ConformalSplit { rho, residual }
}

/// Levi-Civita symbols `gamma[l][mu][nu] = Γ^l_{mu nu}`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    pub gamma: Vec<Vec<Vec<RatExpr>>>,
}

impl Christoffel {
    pub fn get(&self, l: usize, mu: usize, nu: usize) -> &RatExpr {
        &self.gamma[l][mu][nu]
    }
}

pub fn christoffel(model: &ModelSpace) -> Christoffel {
    let n = model.dim();
    let vars = model.vars();
    let g = &model.metric;
    // dg[l][mu][nu] = d_l g_{mu nu}
    let dg: Vec<Vec<Vec<RatExpr>>> =
        vars.iter().map(|&v| (0..n).map(|mu| (0..n).map(|nu| g.get(mu, nu).derive(v)).collect()).collect()).collect();
    // lowered: G_{s mu nu} = 1/2 (d_mu g_{s nu} + d_nu g_{s mu} - d_s g_{mu nu})
    let half = crate::expr::rat(1, 2);
    let mut gamma = vec![vec![vec![RatExpr::zero(); n]; n]; n];
    let lowered: Vec<Vec<Vec<RatExpr>>> = (0..n)
        .map(|s| {
            (0..n)
                .map(|mu| (0..n).map(|nu| (&(&dg[mu][s][nu] + &dg[nu][s][mu]) - &dg[s][mu][nu]).scale(&half)).collect())
                .collect()
        })
        .collect();
    for l in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut acc = RatExpr::zero();
                for s in 0..n {
                    let h = &model.inverse_metric[l][s];
                    if !h.is_zero() && !lowered[s][mu][nu].is_zero() {
                        acc = &acc + &(h * &lowered[s][mu][nu]);
                    }
                }
                gamma[l][mu][nu] = acc.clone();
                gamma[l][nu][mu] = acc;
            }
        }
    }
    Christoffel { gamma }
}

/// `(grad E)^mu = g^{mu nu} d_nu E`.
pub fn gradient(e: &RatExpr, model: &ModelSpace) -> VectorField {
    let d: Vec<RatExpr> = model.vars().iter().map(|&v| e.derive(v)).collect();
    raise(&d, model)
}

pub fn raise(omega: &[RatExpr], model: &ModelSpace) -> VectorField {
    let n = model.dim();
    let comps = (0..n)
        .map(|mu| {
            (0..n)
                .filter(|&nu| !omega[nu].is_zero() && !model.inverse_metric[mu][nu].is_zero())
                .map(|nu| &model.inverse_metric[mu][nu] * &omega[nu])
                .sum()
        })
        .collect();
    VectorField::coord(comps)
}

/// Exact check that `d_mu w_nu = d_nu w_mu`.
pub fn check_closed(omega: &[RatExpr], model: &ModelSpace) -> Result<()> {
    let vars = model.vars();
    for mu in 0..vars.len() {
        for nu in mu + 1..vars.len() {
            if omega[nu].derive(vars[mu]) != omega[mu].derive(vars[nu]) {
                return Err(Error::NotClosed(format!("({}, {})", vars[mu], vars[nu])));
            }
        }
    }
    Ok(())
}

/// `(∇w)_{mu nu} = d_mu w_nu - Γ^l_{mu nu} w_l` for a closed 1-form.
pub fn covariant_hessian_of_form(omega: &[RatExpr], model: &ModelSpace) -> Result<SymTensor2> {
    let n = model.dim();
    if omega.len() != n {
        return Err(Error::InvalidArgument(format!("1-form has {} components, chart has {n}", omega.len())));
    }
    check_closed(omega, model)?;
    let gam = christoffel(model);
    let vars = model.vars();
    let mut out = SymTensor2::zero(Basis::Coordinate, n);
    for mu in 0..n {
        for nu in mu..n {
            let mut acc = omega[nu].derive(vars[mu]);
            for l in 0..n {
                if !omega[l].is_zero() && !gam.get(l, mu, nu).is_zero() {
                    acc = &acc - &(gam.get(l, mu, nu) * &omega[l]);
                }
            }
            out.set(mu, nu, acc);
        }
    }
    Ok(out)
}

/// `∇_l g_{mu nu}` for all indices vanishes exactly.
pub fn metric_compatible(model: &ModelSpace) -> bool {
    let n = model.dim();
    let gam = christoffel(model);
    let g = &model.metric;
    let vars = model.vars();
    for l in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut acc = g.get(mu, nu).derive(vars[l]);
                for s in 0..n {
                    acc = &acc - &(gam.get(s, l, mu) * g.get(s, nu));
                    acc = &acc - &(gam.get(s, l, nu) * g.get(mu, s));
                }
                if !acc.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// `f L_xi g + df ⊗ xi♭ + xi♭ ⊗ df`, the right side of the product rule for
/// `L_{f xi} g` (coordinate basis).
pub fn scaled_field_rule(model: &ModelSpace, f: &RatExpr, xi: &VectorField) -> SymTensor2 {
    let df: Vec<RatExpr> = model.vars().iter().map(|&v| f.derive(v)).collect();
    let flat = model.flat(xi);
    lie_derivative_coord(model, xi).scale(f).add(&SymTensor2::sym_product(Basis::Coordinate, &df, &flat))
}

/// Reads a table file of `generator row col value` lines (frame labels,
/// `{i}` expanded over `1..=pairs`) into one frame-basis tensor per frame
/// field. Unlisted entries are zero.
pub fn parse_table_fixture(text: &str, model: &ModelSpace) -> Result<Vec<SymTensor2>> {
    let n = model.dim();
    let pairs = model.structure().map_or(0, |s| s.k / 2);
    let mut out = vec![SymTensor2::zero(Basis::Frame, n); n];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::Fixture(format!("line {}: expected 4 columns", lineno + 1)));
        }
        let value = RatExpr::parse(cols[3])?;
        let range: Vec<Option<usize>> =
            if cols[..3].iter().any(|c| c.contains("{i}")) { (1..=pairs).map(Some).collect() } else { vec![None] };
        for i in range {
            let label = |c: &str| -> Result<usize> {
                let s = match i {
                    Some(i) => c.replace("{i}", &i.to_string()),
                    None => c.to_string(),
                };
                model.frame_index(&s).ok_or_else(|| Error::Fixture(format!("line {}: unknown frame label `{s}`", lineno + 1)))
            };
            let (g, r, c) = (label(cols[0])?, label(cols[1])?, label(cols[2])?);
            out[g].set(r, c, value.clone());
        }
    }
    Ok(out)
}

/// Entry-wise differences between computed and expected tables.
pub fn compare_tables(model: &ModelSpace, computed: &[SymTensor2], expected: &[SymTensor2]) -> Vec<String> {
    let mut diffs = Vec::new();
    let l = &model.frame_labels;
    for (g, (c, e)) in computed.iter().zip(expected).enumerate() {
        for i in 0..c.dim() {
            for j in i..c.dim() {
                if c.get(i, j) != e.get(i, j) {
                    diffs.push(format!("L_{} g ({}, {}): computed {}, expected {}", l[g], l[i], l[j], c.get(i, j), e.get(i, j)));
                }
            }
        }
    }
    diffs
}
