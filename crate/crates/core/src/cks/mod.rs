//! Conformal Killing systems as jet-linear equations, reference-system
//! matching and the Cauchy–Riemann structure checks.

mod jet;

pub use jet::{from_ast, JetLinExpr, JetSymbol};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{int, Monomial, RatExpr, Var};
use crate::liecalc::frame_lie_matrix;
use crate::models::{ModelKind, ModelSpace};

pub const RHO: &str = "rho";

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEq {
    pub label: String,
    pub expr: JetLinExpr,
}

#[derive(Clone, Debug)]
pub struct CksSystem {
    pub model: String,
    /// Unknown coefficient of each frame field, in frame order.
    pub unknowns: Vec<String>,
    pub raw: Vec<LabeledEq>,
    pub reduced: Vec<LabeledEq>,
}

impl CksSystem {
    pub fn raw_eq(&self, label: &str) -> Option<&JetLinExpr> {
        self.raw.iter().find(|e| e.label == label).map(|e| &e.expr)
    }

    pub fn reduced_eq(&self, label: &str) -> Option<&JetLinExpr> {
        self.reduced.iter().find(|e| e.label == label).map(|e| &e.expr)
    }

    /// Plug in frame components of a field and its potential.
    pub fn substitute_raw(&self, f: &[RatExpr], rho: &RatExpr) -> Vec<(String, JetLinExpr)> {
        let vars: Vec<Var> = self.unknowns.iter().map(|n| Var::new(n)).collect();
        let rho_var = Var::new(RHO);
        let value = |v: Var| {
            if v == rho_var {
                return Some(rho.clone());
            }
            vars.iter().position(|&w| w == v).map(|i| f[i].clone())
        };
        self.raw.iter().map(|e| (e.label.clone(), e.expr.substitute(&value))).collect()
    }
}

/// Names of the frame coefficients: `f1..f4` on CH², `f1_i, f2_i, f3, f4`
/// on CHⁿ, `f1..fN` otherwise.
pub fn unknown_names(model: &ModelSpace) -> Vec<String> {
    let labels = &model.frame_labels;
    if labels.iter().map(String::as_str).eq(["V", "JZV", "Z", "A"]) {
        return ["f1", "f2", "f3", "f4"].map(String::from).to_vec();
    }
    let chn = labels.len() >= 4 && labels.len() % 2 == 0 && {
        let p = (labels.len() - 2) / 2;
        (1..=p).all(|i| labels[2 * (i - 1)] == format!("V{i}") && labels[2 * (i - 1) + 1] == format!("JZV{i}"))
            && labels[labels.len() - 2] == "Z"
            && labels[labels.len() - 1] == "A"
    };
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if chn {
                if let Some(k) = l.strip_prefix("JZV") {
                    return format!("f2_{k}");
                }
                if let Some(k) = l.strip_prefix('V') {
                    return format!("f1_{k}");
                }
                return if l == "Z" { "f3".into() } else { "f4".into() };
            }
            format!("f{}", i + 1)
        })
        .collect()
}

/// `L_xi g = 2 rho g` entry by entry, for `xi = sum f_i E_i` with unknown
/// `f_i`, and the system with `rho` eliminated through the last diagonal
/// entry.
pub fn generate_cks(model: &ModelSpace) -> Result<CksSystem> {
    if !matches!(model.kind, ModelKind::DamekRicci(_)) {
        return Err(Error::InvalidModel(format!("{} is not a Damek–Ricci model", model.name)));
    }
    let names = unknown_names(model);
    let f: Vec<JetLinExpr> = names.iter().map(|n| JetLinExpr::func(n)).collect();
    let lie = frame_lie_matrix(model, &f)?;
    let n = model.dim();
    let rho = JetLinExpr::func(RHO);
    let mut raw = Vec::new();
    for a in 0..n {
        for b in a..n {
            let mut e = lie[a][b].clone();
            if a == b {
                // frame is orthonormal
                e = e.sub(&rho.mul_expr(&RatExpr::int(2)));
            }
            let label = format!("({},{})", model.frame_labels[a], model.frame_labels[b]);
            raw.push(LabeledEq { label, expr: e });
        }
    }
    let last = raw.pop().expect("nonempty frame");
    let rho_sym = JetSymbol::new(Var::new(RHO));
    let c = last.expr.coeff(&rho_sym);
    // rho = rest / (-c)
    let rest = last.expr.sub(&JetLinExpr::term(rho_sym.clone(), c.clone()));
    let rho_value = rest.mul_expr(&(-&c).recip()?);
    let reduced = raw
        .iter()
        .map(|e| {
            let k = e.expr.coeff(&rho_sym);
            let mut x = e.expr.sub(&JetLinExpr::term(rho_sym.clone(), k.clone()));
            x = x.add(&rho_value.mul_expr(&k));
            LabeledEq { label: e.label.clone(), expr: x.primitive() }
        })
        .collect();
    raw.push(last);
    Ok(CksSystem { model: model.name.clone(), unknowns: names, raw, reduced })
}

#[derive(Clone, Debug)]
pub struct RefEquation {
    pub label: String,
    pub source: String,
    pub expr: JetLinExpr,
    /// A printed equation known not to be an entry of the system.
    pub erratum: bool,
}

#[derive(Clone, Debug)]
pub struct ReferenceSystem {
    pub name: String,
    pub equations: Vec<RefEquation>,
}

fn instantiate(s: &str, i: usize, j: usize) -> String {
    s.replace("{i}", &i.to_string()).replace("{j}", &j.to_string())
}

impl ReferenceSystem {
    /// Reads the plain-text equation format. `pairs` is the range of the
    /// family indices `i, j` (ignored by files without `@each`).
    ///
    /// ```text
    /// funcs: f1_{i} f2_{i} f3 f4 rho
    /// eq (1,1): 2*exp(a/2)*d(f1;x) - f4 = 2*rho
    /// @each i!=j eq ({i},{j})-1: ...
    /// erratum (2,2): ...
    /// ```
    pub fn parse(name: &str, text: &str, pairs: usize) -> Result<ReferenceSystem> {
        let bad = |line: usize, msg: &str| Error::Fixture(format!("{name}:{}: {msg}", line + 1));
        let mut funcs: Vec<String> = vec![RHO.into()];
        let mut equations = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("funcs:") {
                for f in rest.split_whitespace() {
                    if f.contains("{i}") {
                        funcs.extend((1..=pairs).map(|i| instantiate(f, i, i)));
                    } else {
                        funcs.push(f.into());
                    }
                }
                continue;
            }
            let (indices, rest): (Vec<(usize, usize)>, &str) = if let Some(r) = line.strip_prefix("@each i!=j ") {
                let mut v = Vec::new();
                for i in 1..=pairs {
                    for j in 1..=pairs {
                        if i != j {
                            v.push((i, j));
                        }
                    }
                }
                (v, r)
            } else if let Some(r) = line.strip_prefix("@each i ") {
                ((1..=pairs).map(|i| (i, i)).collect(), r)
            } else if line.starts_with('@') {
                return Err(bad(ln, "unknown directive"));
            } else {
                (vec![(0, 0)], line)
            };
            let (erratum, rest) = if let Some(r) = rest.strip_prefix("eq ") {
                (false, r)
            } else if let Some(r) = rest.strip_prefix("erratum ") {
                (true, r)
            } else {
                return Err(bad(ln, "expected `eq` or `erratum`"));
            };
            let (label, body) = rest.split_once(':').ok_or_else(|| bad(ln, "missing `:`"))?;
            let fnames: Vec<&str> = funcs.iter().map(String::as_str).collect();
            for (i, j) in indices {
                let source = instantiate(body.trim(), i, j);
                let expr = JetLinExpr::parse_equation(&source, &fnames).map_err(|e| bad(ln, &e.to_string()))?;
                equations.push(RefEquation { label: instantiate(label.trim(), i, j), source, expr, erratum });
            }
        }
        Ok(ReferenceSystem { name: name.into(), equations })
    }

    pub fn genuine(&self) -> Vec<LabeledEq> {
        self.equations.iter().filter(|e| !e.erratum).map(|e| LabeledEq { label: e.label.clone(), expr: e.expr.clone() }).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchPair {
    pub reference: String,
    pub generated: String,
    /// `generated = factor * reference`.
    pub factor: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErratumStatus {
    pub label: String,
    pub source: String,
    pub matched: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MatchReport {
    pub matched: Vec<MatchPair>,
    pub unmatched_reference: Vec<String>,
    pub unmatched_generated: Vec<String>,
    pub errata: Vec<ErratumStatus>,
}

impl MatchReport {
    pub fn is_empty_diff(&self) -> bool {
        self.unmatched_reference.is_empty() && self.unmatched_generated.is_empty()
    }
}

/// Projective matching in both directions.
pub fn match_equations(generated: &[LabeledEq], reference: &[LabeledEq]) -> MatchReport {
    let mut report = MatchReport::default();
    let mut used = vec![false; generated.len()];
    for r in reference {
        let mut found = false;
        for (gi, g) in generated.iter().enumerate() {
            if let Some(c) = g.expr.ratio_to(&r.expr) {
                if !found {
                    report.matched.push(MatchPair { reference: r.label.clone(), generated: g.label.clone(), factor: c.to_string() });
                }
                found = true;
                used[gi] = true;
            }
        }
        if !found {
            report.unmatched_reference.push(r.label.clone());
        }
    }
    report.unmatched_generated = generated.iter().zip(&used).filter(|(_, u)| !**u).map(|(g, _)| g.label.clone()).collect();
    report
}

/// Matches the genuine equations of `reference`; errata are reported with
/// whether they happen to match, and never count towards the diff.
pub fn match_reference_system(generated: &[LabeledEq], reference: &ReferenceSystem) -> MatchReport {
    let mut report = match_equations(generated, &reference.genuine());
    for e in reference.equations.iter().filter(|e| e.erratum) {
        let matched = generated.iter().any(|g| g.expr.proportional(&e.expr));
        report.errata.push(ErratumStatus { label: e.label.clone(), source: e.source.clone(), matched });
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct CrCheck {
    pub name: String,
    pub holds: bool,
    pub result: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrReport {
    pub checks: Vec<CrCheck>,
}

impl CrReport {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Chart change `w = exp(a)`, `F = w f` for the unknowns in `rename`;
/// `d/da = w d/dw`. Coefficients may only contain even powers of `u`.
pub fn to_w_chart(e: &JetLinExpr, rename: &[(&str, &str)]) -> Result<JetLinExpr> {
    let w = Var::new("w");
    let a = crate::expr::a_var();
    let coeff = |c: &RatExpr| -> Result<RatExpr> {
        if c.contains_var(a) {
            return Err(Error::InvalidArgument("coefficient depends on a explicitly".into()));
        }
        let map = |m: &Monomial| -> Option<(crate::expr::Scalar, Monomial)> {
            let k = m.exp(Var::U);
            if k % 2 != 0 {
                return None;
            }
            let mut out = m.without(Var::U);
            out.set(w, out.exp(w) + k / 2);
            Some((int(1), out))
        };
        let num = c.numer().map_monomials(&map).ok_or_else(|| Error::InvalidArgument("odd power of exp(a/2)".into()))?;
        let den = c.denom().map_monomials(&map).ok_or_else(|| Error::InvalidArgument("odd power of exp(a/2)".into()))?;
        RatExpr::new(num, den)
    };
    let image = |s: &JetSymbol| -> Result<JetLinExpr> {
        let new = rename
            .iter()
            .find(|(old, _)| *old == s.func.name())
            .ok_or_else(|| Error::InvalidArgument(format!("no new name for {}", s.func.name())))?
            .1;
        let mut base = JetLinExpr::term(JetSymbol::new(Var::new(new)), RatExpr::var(w).recip()?);
        for v in s.var_list() {
            base = if v == a { base.derive(w).mul_expr(&RatExpr::var(w)) } else { base.derive(v) };
        }
        Ok(base)
    };
    e.map_jets(&image, &coeff)
}

fn check(name: &str, got: &JetLinExpr, want: &JetLinExpr) -> CrCheck {
    CrCheck { name: name.into(), holds: got.proportional(want), result: got.to_string() }
}

/// The Cauchy–Riemann structure of the reduced CH² system.
pub fn cr_structure_check(model: &ModelSpace) -> Result<CrReport> {
    let sys = generate_cks(model)?;
    if sys.unknowns != ["f1", "f2", "f3", "f4"] {
        return Err(Error::InvalidModel("the Cauchy–Riemann checks need CH²".into()));
    }
    let eq = |l: &str| sys.reduced_eq(l).cloned().ok_or_else(|| Error::InvalidModel(format!("missing entry {l}")));
    let p = |s: &str| JetLinExpr::parse(s, &["f1", "f2", "f3", "f4", "F3", "F4"]);
    let rename = [("f3", "F3"), ("f4", "F4")];
    let mut checks = Vec::new();

    let zz = to_w_chart(&eq("(Z,Z)")?, &rename)?;
    checks.push(check("(Z,Z) in w = exp(a)", &zz, &p("d(F3; z) - d(F4; w)")?));
    let za = to_w_chart(&eq("(Z,A)")?, &rename)?;
    checks.push(check("(Z,A) in w = exp(a)", &za, &p("d(F3; w) + d(F4; z)")?));
    let sample = |v: Var| match v.name() {
        "F3" => Some(RatExpr::named("z")),
        "F4" => Some(RatExpr::named("w")),
        _ => None,
    };
    let zeros = zz.substitute(&sample).is_zero() && za.substitute(&sample).is_zero();
    checks.push(CrCheck { name: "F3 + i F4 = z + i w".into(), holds: zeros, result: if zeros { "0".into() } else { "nonzero".into() } });

    let (vv, jj) = (eq("(V,V)")?, eq("(JZV,JZV)")?);
    let f4 = JetSymbol::new(Var::new("f4"));
    let lambda = &vv.coeff(&f4) / &jj.coeff(&f4);
    let diff = vv.sub(&jj.mul_expr(&lambda));
    checks.push(check("(V,V) - (JZV,JZV)", &diff, &p("d(f1; x) - y/2*d(f1; z) - d(f2; y) - x/2*d(f2; z)")?));
    checks.push(check("(V,JZV)", &eq("(V,JZV)")?, &p("d(f1; y) + x/2*d(f1; z) + d(f2; x) - y/2*d(f2; z)")?));
    Ok(CrReport { checks })
}
