//! Busemann functions of the half-space model, carried as `(e^b, db)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{RatExpr, Scalar, Var};
use crate::liecalc::{check_closed, conformal_split, covariant_hessian_of_form, gradient, lie_derivative_coord};
use crate::models::{Basis, ModelSpace, SymTensor2, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BusemannKind {
    Infinity,
    BoundaryPoint,
}

/// `e = exp(b)` and `omega = db`.
#[derive(Clone, Debug, PartialEq)]
pub struct BusemannPair {
    pub e: RatExpr,
    pub omega: Vec<RatExpr>,
}

impl BusemannPair {
    /// `dE = E omega` and `d omega = 0`, exactly.
    pub fn check(&self, model: &ModelSpace) -> Result<()> {
        for (i, &v) in model.vars().iter().enumerate() {
            let lhs = self.e.derive(v);
            let rhs = &self.e * &self.omega[i];
            if lhs != rhs {
                return Err(Error::Verification(format!("dE != E*omega in the {v} component")));
            }
        }
        check_closed(&self.omega, model)
    }
}

pub fn busemann_pair(kind: BusemannKind, params: &[Scalar], model: &ModelSpace) -> Result<BusemannPair> {
    if !model.is_half_space() {
        return Err(Error::InvalidModel(format!("Busemann pairs need a half-space model, got {}", model.name)));
    }
    let n = model.dim();
    let vars = model.vars();
    let y = RatExpr::var(vars[n - 1]);
    match kind {
        BusemannKind::Infinity => {
            if !params.is_empty() {
                return Err(Error::InvalidArgument("the point at infinity takes no parameters".into()));
            }
            let mut omega = vec![RatExpr::zero(); n];
            omega[n - 1] = -&y.recip()?;
            Ok(BusemannPair { e: y.recip()?, omega })
        }
        BusemannKind::BoundaryPoint => {
            if params.len() != n - 1 {
                return Err(Error::InvalidArgument(format!("boundary point needs {} coordinates, got {}", n - 1, params.len())));
            }
            let mut q = &y * &y;
            for (i, a) in params.iter().enumerate() {
                let d = &RatExpr::var(vars[i]) - &RatExpr::constant(a.clone());
                q = &q + &(&d * &d);
            }
            let e = &q / &y;
            let omega = vars.iter().map(|&v| &e.derive(v) / &e).collect();
            Ok(BusemannPair { e, omega })
        }
    }
}

/// `E = exp(-a)`, `omega = -da`: the horospherical height on a Damek–Ricci
/// model, used as the negative test for the real hyperbolic Hessian identity.
pub fn horospherical_pair(model: &ModelSpace) -> Result<BusemannPair> {
    let a = model.chart.exp_var().ok_or_else(|| Error::InvalidModel("model has no exponential coordinate".into()))?;
    let idx = model.chart.index_of(a).unwrap();
    let mut omega = vec![RatExpr::zero(); model.dim()];
    omega[idx] = RatExpr::int(-1);
    Ok(BusemannPair { e: RatExpr::u_pow(-2), omega })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryCheck {
    pub row: String,
    pub col: String,
    pub hessian: String,
    pub expected: String,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianReport {
    pub model: String,
    pub holds: bool,
    pub entries: Vec<EntryCheck>,
    pub note: Option<String>,
}

/// Compares `∇ω` with `g − ω⊗ω` entry-wise. Failures are reported.
pub fn verify_hessian_identity(pair: &BusemannPair, model: &ModelSpace) -> HessianReport {
    let n = model.dim();
    let name = |i: usize| model.vars()[i].name().to_string();
    let hess = match covariant_hessian_of_form(&pair.omega, model) {
        Ok(h) => h,
        Err(e) => {
            return HessianReport { model: model.name.clone(), holds: false, entries: vec![], note: Some(e.to_string()) };
        }
    };
    let rhs = model.metric.sub(&SymTensor2::outer(Basis::Coordinate, &pair.omega));
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            let ok = hess.get(i, j) == rhs.get(i, j);
            entries.push(EntryCheck {
                row: name(i),
                col: name(j),
                hessian: hess.get(i, j).to_string(),
                expected: rhs.get(i, j).to_string(),
                ok,
            });
        }
    }
    HessianReport { model: model.name.clone(), holds: entries.iter().all(|e| e.ok), entries, note: None }
}

/// `xi = grad E` with potential `E`; checks `L_xi g = 2 E g` exactly.
pub fn busemann_conformal_field(pair: &BusemannPair, model: &ModelSpace) -> Result<(VectorField, RatExpr)> {
    let xi = gradient(&pair.e, model);
    let lie = lie_derivative_coord(model, &xi);
    let want = model.metric.scale(&pair.e.scale(&crate::expr::int(2)));
    if lie != want {
        return Err(Error::Verification("L_xi g differs from 2 E g".into()));
    }
    let split = conformal_split(&lie, model);
    if !split.is_conformal() || split.rho != pair.e {
        return Err(Error::Verification("conformal split disagrees with the potential".into()));
    }
    Ok((xi, pair.e.clone()))
}

/// The isometry algebra of the half-space: translations, rotations, the
/// dilation and the inversions conjugated by translations.
pub fn half_space_killing_fields(model: &ModelSpace) -> Result<Vec<VectorField>> {
    if !model.is_half_space() {
        return Err(Error::InvalidModel("expected a half-space model".into()));
    }
    let n = model.dim();
    let xs: Vec<RatExpr> = model.vars().iter().map(|&v| RatExpr::var(v)).collect();
    let unit = |i: usize| {
        let mut c = vec![RatExpr::zero(); n];
        c[i] = RatExpr::one();
        c
    };
    let mut out = Vec::new();
    for i in 0..n - 1 {
        out.push(VectorField::coord(unit(i)));
    }
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            let mut c = vec![RatExpr::zero(); n];
            c[i] = xs[j].clone();
            c[j] = -&xs[i];
            out.push(VectorField::coord(c));
        }
    }
    out.push(VectorField::coord(xs.clone()));
    let r2: RatExpr = xs.iter().map(|x| x * x).sum();
    for i in 0..n - 1 {
        let mut c: Vec<RatExpr> = xs.iter().map(|x| (&xs[i] * x).scale(&crate::expr::int(2))).collect();
        c[i] = &c[i] - &r2;
        out.push(VectorField::coord(c));
    }
    Ok(out)
}

/// Rank of `fields` modulo `killing`, from exact evaluation at points.
pub fn rank_modulo(model: &ModelSpace, killing: &[VectorField], fields: &[VectorField], points: &[Vec<Scalar>]) -> Result<usize> {
    let sample = |f: &VectorField| -> Result<Vec<Scalar>> {
        let f = model.to_coordinate(f);
        let mut row = Vec::new();
        for pt in points {
            let val = |v: Var| model.chart.index_of(v).map(|i| pt[i].clone());
            for c in &f.comps {
                row.push(c.eval_with(&val)?);
            }
        }
        Ok(row)
    };
    let k: Vec<Vec<Scalar>> = killing.iter().map(sample).collect::<Result<_>>()?;
    let mut all = k.clone();
    for f in fields {
        all.push(sample(f)?);
    }
    let ncols = all.first().map_or(0, |r| r.len());
    let rk = if k.is_empty() { 0 } else { crate::linalg::rank(&k, ncols) };
    Ok(crate::linalg::rank(&all, ncols) - rk)
}
