//! Model spaces: Damek–Ricci groups in exponential coordinates and the
//! upper half-space model of real hyperbolic space.

use num_traits::Zero;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::expr::{int, rat, Chart, RatExpr, Scalar, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Coordinate,
    Frame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub basis: Basis,
    pub comps: Vec<RatExpr>,
}

impl VectorField {
    pub fn coord(comps: Vec<RatExpr>) -> VectorField {
        VectorField { basis: Basis::Coordinate, comps }
    }

    pub fn frame(comps: Vec<RatExpr>) -> VectorField {
        VectorField { basis: Basis::Frame, comps }
    }

    pub fn zero(basis: Basis, dim: usize) -> VectorField {
        VectorField { basis, comps: vec![RatExpr::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(RatExpr::is_zero)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.basis, other.basis);
        VectorField { basis: self.basis, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &RatExpr) -> VectorField {
        VectorField { basis: self.basis, comps: self.comps.iter().map(|a| a * c).collect() }
    }

    /// Directional derivative `X(h)` of a function (coordinate basis only).
    pub fn apply(&self, chart: &Chart, h: &RatExpr) -> RatExpr {
        assert_eq!(self.basis, Basis::Coordinate);
        self.comps
            .iter()
            .zip(chart.vars())
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, &v)| c * &h.derive(v))
            .sum()
    }

    pub fn display(&self, chart: &Chart) -> String {
        let parts: Vec<String> = self
            .comps
            .iter()
            .zip(chart.vars())
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| format!("({c})*d_{v}"))
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Symmetric 2-tensor stored as a full matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor2 {
    pub basis: Basis,
    entries: Vec<Vec<RatExpr>>,
}

impl SymTensor2 {
    pub fn zero(basis: Basis, dim: usize) -> SymTensor2 {
        SymTensor2 { basis, entries: vec![vec![RatExpr::zero(); dim]; dim] }
    }

    /// Errors unless `m` is square and exactly symmetric.
    pub fn from_matrix(basis: Basis, m: Vec<Vec<RatExpr>>) -> Result<SymTensor2> {
        let n = m.len();
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument("tensor matrix is not square".into()));
            }
            for j in 0..i {
                if row[j] != m[j][i] {
                    return Err(Error::InvalidArgument(format!("tensor is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(SymTensor2 { basis, entries: m })
    }

    pub fn diag(basis: Basis, d: Vec<RatExpr>) -> SymTensor2 {
        let n = d.len();
        let mut t = SymTensor2::zero(basis, n);
        for (i, x) in d.into_iter().enumerate() {
            t.entries[i][i] = x;
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &RatExpr {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RatExpr) {
        self.entries[j][i] = v.clone();
        self.entries[i][j] = v;
    }

    pub fn matrix(&self) -> &Vec<Vec<RatExpr>> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(RatExpr::is_zero)
    }

    pub fn add(&self, o: &SymTensor2) -> SymTensor2 {
        assert_eq!(self.basis, o.basis);
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &SymTensor2) -> SymTensor2 {
        assert_eq!(self.basis, o.basis);
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, c: &RatExpr) -> SymTensor2 {
        SymTensor2 {
            basis: self.basis,
            entries: self.entries.iter().map(|r| r.iter().map(|x| x * c).collect()).collect(),
        }
    }

    fn zip(&self, o: &SymTensor2, f: impl Fn(&RatExpr, &RatExpr) -> RatExpr) -> SymTensor2 {
        SymTensor2 {
            basis: self.basis,
            entries: self.entries.iter().zip(&o.entries).map(|(r, s)| r.iter().zip(s).map(|(a, b)| f(a, b)).collect()).collect(),
        }
    }

    /// Symmetric product `a ⊗ b + b ⊗ a` of two covectors.
    pub fn sym_product(basis: Basis, a: &[RatExpr], b: &[RatExpr]) -> SymTensor2 {
        let n = a.len();
        let mut t = SymTensor2::zero(basis, n);
        for i in 0..n {
            for j in i..n {
                t.set(i, j, &(&a[i] * &b[j]) + &(&a[j] * &b[i]));
            }
        }
        t
    }

    pub fn outer(basis: Basis, a: &[RatExpr]) -> SymTensor2 {
        let n = a.len();
        let mut t = SymTensor2::zero(basis, n);
        for i in 0..n {
            for j in i..n {
                t.set(i, j, &a[i] * &a[j]);
            }
        }
        t
    }
}

/// Structure constants `A^r_{ij}` of the 2-step nilpotent part.
#[derive(Clone, Debug, PartialEq)]
pub struct DamekRicciSpec {
    pub k: usize,
    pub m: usize,
    /// Indexed `[r][i][j]`, zero-based.
    pub a: Vec<Vec<Vec<Scalar>>>,
}

impl DamekRicciSpec {
    pub fn new(k: usize, m: usize, a: Vec<Vec<Vec<Scalar>>>) -> Result<DamekRicciSpec> {
        let spec = DamekRicciSpec { k, m, a };
        spec.validate()?;
        Ok(spec)
    }

    /// Zero-based entries `(i, j, r, value)`; each antisymmetric partner is
    /// filled in, and conflicting duplicates are rejected.
    pub fn from_entries(k: usize, m: usize, entries: &[(usize, usize, usize, Scalar)]) -> Result<DamekRicciSpec> {
        let mut a = vec![vec![vec![Scalar::zero(); k]; k]; m];
        let mut seen = vec![vec![vec![false; k]; k]; m];
        for (i, j, r, val) in entries.iter().cloned() {
            if i >= k || j >= k || r >= m {
                return Err(Error::InvalidModel(format!("structure constant index ({i},{j},{r}) out of range")));
            }
            for (p, q, v) in [(i, j, val.clone()), (j, i, -val.clone())] {
                if seen[r][p][q] && a[r][p][q] != v {
                    return Err(Error::InvalidModel(format!(
                        "structure constants are not antisymmetric at ({},{},{})",
                        p + 1,
                        q + 1,
                        r + 1
                    )));
                }
                seen[r][p][q] = true;
                a[r][p][q] = v;
            }
        }
        DamekRicciSpec::new(k, m, a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.m || self.a.iter().any(|ar| ar.len() != self.k || ar.iter().any(|row| row.len() != self.k)) {
            return Err(Error::InvalidModel("structure constant array has wrong shape".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidModel("k must be positive".into()));
        }
        for r in 0..self.m {
            for i in 0..self.k {
                for j in 0..self.k {
                    if self.a[r][i][j] != -self.a[r][j][i].clone() {
                        return Err(Error::InvalidModel(format!(
                            "structure constants are not antisymmetric at ({},{},{})",
                            i + 1,
                            j + 1,
                            r + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The complex hyperbolic space of complex dimension `n`.
    pub fn chn(n: usize) -> Result<DamekRicciSpec> {
        if n < 2 {
            return Err(Error::InvalidModel("CH^n needs n >= 2".into()));
        }
        let k = 2 * (n - 1);
        let entries: Vec<_> = (0..n - 1).map(|i| (2 * i, 2 * i + 1, 0, int(1))).collect();
        DamekRicciSpec::from_entries(k, 1, &entries)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfSpaceSpec {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    DamekRicci(DamekRicciSpec),
    HalfSpace(HalfSpaceSpec),
    /// Anything else: flat test charts and conformal rescalings.
    Other,
}

#[derive(Clone, Debug)]
pub struct ModelSpace {
    pub name: String,
    pub chart: Chart,
    /// Rows are frame fields in coordinate components.
    pub frame: Vec<Vec<RatExpr>>,
    /// Rows are the dual 1-forms in coordinate components.
    pub coframe: Vec<Vec<RatExpr>>,
    pub metric: SymTensor2,
    pub inverse_metric: Vec<Vec<RatExpr>>,
    pub frame_labels: Vec<String>,
    pub generator_tables: Option<Vec<SymTensor2>>,
    pub kind: ModelKind,
}

impl ModelSpace {
    /// Assemble a model from a chart and frame; computes the coframe by exact
    /// inversion and checks duality.
    pub fn from_frame(name: &str, chart: Chart, frame: Vec<Vec<RatExpr>>, labels: Vec<String>, kind: ModelKind) -> Result<ModelSpace> {
        let n = chart.dim();
        if frame.len() != n || frame.iter().any(|r| r.len() != n) || labels.len() != n {
            return Err(Error::InvalidModel("frame shape does not match chart".into()));
        }
        let coframe = dual_coframe(&frame)?;
        let mut metric = SymTensor2::zero(Basis::Coordinate, n);
        let mut inverse_metric = vec![vec![RatExpr::zero(); n]; n];
        for mu in 0..n {
            for nu in mu..n {
                let g: RatExpr = (0..n).map(|a| &coframe[a][mu] * &coframe[a][nu]).sum();
                metric.set(mu, nu, g);
                let h: RatExpr = (0..n).map(|a| &frame[a][mu] * &frame[a][nu]).sum();
                inverse_metric[mu][nu] = h.clone();
                inverse_metric[nu][mu] = h;
            }
        }
        Ok(ModelSpace { name: name.into(), chart, frame, coframe, metric, inverse_metric, frame_labels: labels, generator_tables: None, kind })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn vars(&self) -> &[Var] {
        self.chart.vars()
    }

    pub fn structure(&self) -> Option<&DamekRicciSpec> {
        match &self.kind {
            ModelKind::DamekRicci(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_half_space(&self) -> bool {
        matches!(self.kind, ModelKind::HalfSpace(_))
    }

    pub fn frame_field(&self, a: usize) -> VectorField {
        VectorField::coord(self.frame[a].clone())
    }

    pub fn frame_index(&self, label: &str) -> Option<usize> {
        self.frame_labels.iter().position(|l| l == label)
    }

    /// `E_a(h)`.
    pub fn frame_derivative(&self, a: usize, h: &RatExpr) -> RatExpr {
        self.frame[a]
            .iter()
            .zip(self.vars())
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, &v)| c * &h.derive(v))
            .sum()
    }

    pub fn to_coordinate(&self, x: &VectorField) -> VectorField {
        match x.basis {
            Basis::Coordinate => x.clone(),
            Basis::Frame => {
                let n = self.dim();
                let comps = (0..n)
                    .map(|mu| {
                        x.comps
                            .iter()
                            .zip(&self.frame)
                            .filter(|(f, row)| !f.is_zero() && !row[mu].is_zero())
                            .map(|(f, row)| f * &row[mu])
                            .sum()
                    })
                    .collect();
                VectorField::coord(comps)
            }
        }
    }

    pub fn to_frame(&self, x: &VectorField) -> VectorField {
        match x.basis {
            Basis::Frame => x.clone(),
            Basis::Coordinate => {
                let comps = self
                    .coframe
                    .iter()
                    .map(|th| th.iter().zip(&x.comps).filter(|(t, c)| !t.is_zero() && !c.is_zero()).map(|(t, c)| t * c).sum())
                    .collect();
                VectorField::frame(comps)
            }
        }
    }

    /// `S(E_a, E_b)`.
    pub fn tensor_to_frame(&self, s: &SymTensor2) -> SymTensor2 {
        match s.basis {
            Basis::Frame => s.clone(),
            Basis::Coordinate => congruence(&self.frame, s, Basis::Frame),
        }
    }

    /// Coordinate components from frame components, via the coframe.
    pub fn tensor_to_coordinate(&self, s: &SymTensor2) -> SymTensor2 {
        match s.basis {
            Basis::Coordinate => s.clone(),
            Basis::Frame => {
                let t = transpose(&self.coframe);
                congruence(&t, s, Basis::Coordinate)
            }
        }
    }

    /// The metric in the requested basis.
    pub fn metric_in(&self, basis: Basis) -> SymTensor2 {
        match basis {
            Basis::Coordinate => self.metric.clone(),
            Basis::Frame => SymTensor2::diag(Basis::Frame, vec![RatExpr::one(); self.dim()]),
        }
    }

    /// Lowered components `g(X, .)` in the coordinate basis.
    pub fn flat(&self, x: &VectorField) -> Vec<RatExpr> {
        let x = self.to_coordinate(x);
        let n = self.dim();
        (0..n)
            .map(|mu| (0..n).filter(|&nu| !x.comps[nu].is_zero()).map(|nu| self.metric.get(mu, nu) * &x.comps[nu]).sum())
            .collect()
    }

    /// Coordinate Lie bracket `[X, Y]`.
    pub fn bracket(&self, x: &VectorField, y: &VectorField) -> Result<VectorField> {
        let x = self.to_coordinate(x);
        let y = self.to_coordinate(y);
        if x.dim() != self.dim() || y.dim() != self.dim() {
            return Err(Error::BasisMismatch("vector field dimension differs from chart".into()));
        }
        let comps = (0..self.dim()).map(|mu| &x.apply(&self.chart, &y.comps[mu]) - &y.apply(&self.chart, &x.comps[mu])).collect();
        Ok(VectorField::coord(comps))
    }

    /// Frame duality and orthonormality, checked exactly.
    pub fn check_frame(&self) -> Result<()> {
        let n = self.dim();
        for a in 0..n {
            for b in 0..n {
                let d: RatExpr = (0..n).map(|mu| &self.frame[a][mu] * &self.coframe[b][mu]).sum();
                let want = if a == b { RatExpr::one() } else { RatExpr::zero() };
                if d != want {
                    return Err(Error::Verification(format!("coframe {b} on frame field {a} gives {d}")));
                }
                let g = self.metric_pair(&self.frame[a], &self.frame[b]);
                if g != want {
                    return Err(Error::Verification(format!("g(E_{a}, E_{b}) = {g}")));
                }
            }
        }
        Ok(())
    }

    pub fn metric_pair(&self, x: &[RatExpr], y: &[RatExpr]) -> RatExpr {
        let n = self.dim();
        let mut acc = RatExpr::zero();
        for mu in 0..n {
            if x[mu].is_zero() {
                continue;
            }
            for nu in 0..n {
                if y[nu].is_zero() || self.metric.get(mu, nu).is_zero() {
                    continue;
                }
                acc = &acc + &(&(&x[mu] * self.metric.get(mu, nu)) * &y[nu]);
            }
        }
        acc
    }

    /// The same manifold with metric `e^2 g` (frame scaled by `1/e`).
    pub fn conformal_rescale(&self, e: &RatExpr) -> Result<ModelSpace> {
        let inv = e.recip()?;
        let frame = self.frame.iter().map(|r| r.iter().map(|c| c * &inv).collect()).collect();
        ModelSpace::from_frame(&format!("{} (rescaled)", self.name), self.chart.clone(), frame, self.frame_labels.clone(), ModelKind::Other)
    }

    pub fn generator_tables(&self) -> Result<&[SymTensor2]> {
        self.generator_tables.as_deref().ok_or(Error::NoGeneratorTables)
    }
}

fn transpose(m: &[Vec<RatExpr>]) -> Vec<Vec<RatExpr>> {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j].clone()).collect()).collect()
}

/// `P S P^T`.
fn congruence(p: &[Vec<RatExpr>], s: &SymTensor2, basis: Basis) -> SymTensor2 {
    let n = p.len();
    // ps = P S
    let ps: Vec<Vec<RatExpr>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|nu| (0..n).filter(|&mu| !p[a][mu].is_zero() && !s.get(mu, nu).is_zero()).map(|mu| &p[a][mu] * s.get(mu, nu)).sum())
                .collect()
        })
        .collect();
    let mut out = SymTensor2::zero(basis, n);
    for a in 0..n {
        for b in a..n {
            let v: RatExpr = (0..n).filter(|&nu| !ps[a][nu].is_zero() && !p[b][nu].is_zero()).map(|nu| &ps[a][nu] * &p[b][nu]).sum();
            out.set(a, b, v);
        }
    }
    out
}

/// Rows `θ^a` with `θ^a(E_b) = δ`; Gauss–Jordan on `F^T` preferring monomial
/// pivots, which keeps triangular-up-to-permutation frames free of blowup.
fn dual_coframe(frame: &[Vec<RatExpr>]) -> Result<Vec<Vec<RatExpr>>> {
    let n = frame.len();
    // solve Θ F^T = I  <=>  F Θ^T = I: invert F, then Θ = (F^{-1})^T
    let mut a: Vec<Vec<RatExpr>> = frame.to_vec();
    let mut inv: Vec<Vec<RatExpr>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { RatExpr::one() } else { RatExpr::zero() }).collect()).collect();
    for col in 0..n {
        let cand = (col..n).filter(|&r| !a[r][col].is_zero()).min_by_key(|&r| {
            let e = &a[r][col];
            (e.numer().len() + e.denom().len(), r)
        });
        let Some(pr) = cand else {
            return Err(Error::InvalidModel("frame matrix is singular".into()));
        };
        a.swap(col, pr);
        inv.swap(col, pr);
        let piv = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &piv;
            inv[col][j] = &inv[col][j] * &piv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                if !a[col][j].is_zero() {
                    a[r][j] = &a[r][j] - &(&f * &a[col][j]);
                }
                if !inv[col][j].is_zero() {
                    inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
                }
            }
        }
    }
    Ok(transpose(&inv))
}

fn dr_var_names(spec: &DamekRicciSpec, chn: bool) -> (Vec<String>, Vec<String>) {
    let k = spec.k;
    let m = spec.m;
    let mut names = Vec::new();
    let mut labels = Vec::new();
    if chn {
        let pairs = k / 2;
        for i in 1..=pairs {
            if pairs == 1 {
                names.push("x".to_string());
                names.push("y".to_string());
                labels.push("V".to_string());
                labels.push("JZV".to_string());
            } else {
                names.push(format!("x{i}"));
                names.push(format!("y{i}"));
                labels.push(format!("V{i}"));
                labels.push(format!("JZV{i}"));
            }
        }
        names.push("z".into());
        labels.push("Z".into());
    } else {
        for i in 1..=k {
            names.push(format!("v{i}"));
            labels.push(format!("E{i}"));
        }
        for r in 1..=m {
            names.push(if m == 1 { "z".to_string() } else { format!("z{r}") });
            labels.push(format!("E{}", k + r));
        }
    }
    names.push("a".into());
    labels.push(if chn { "A".into() } else { "E0".into() });
    (names, labels)
}

fn build_dr(spec: DamekRicciSpec, chn: bool, name: &str) -> Result<ModelSpace> {
    spec.validate()?;
    let (names, labels) = dr_var_names(&spec, chn);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let chart = Chart::new(&refs, Some("a"))?;
    let (k, m) = (spec.k, spec.m);
    let n = k + m + 1;
    let v: Vec<RatExpr> = chart.vars()[..k].iter().map(|&x| RatExpr::var(x)).collect();
    let u = RatExpr::u_pow(1);
    let mut frame = vec![vec![RatExpr::zero(); n]; n];
    for i in 0..k {
        frame[i][i] = u.clone();
        for r in 0..m {
            // -1/2 sum_j A^r_ij v_j, times u
            let s: RatExpr = (0..k).filter(|&j| !spec.a[r][i][j].is_zero()).map(|j| v[j].scale(&spec.a[r][i][j])).sum();
            frame[i][k + r] = (&s * &u).scale(&rat(-1, 2));
        }
    }
    for r in 0..m {
        frame[k + r][k + r] = RatExpr::u_pow(2);
    }
    frame[n - 1][n - 1] = RatExpr::one();
    let mut model = ModelSpace::from_frame(name, chart, frame, labels, ModelKind::DamekRicci(spec))?;
    model.generator_tables = Some(crate::liecalc::generator_lie_tables(&model)?);
    Ok(model)
}

pub fn build_damek_ricci(spec: DamekRicciSpec) -> Result<ModelSpace> {
    let name = format!("damek-ricci(k={}, m={})", spec.k, spec.m);
    build_dr(spec, false, &name)
}

/// Complex hyperbolic space; variables `x, y, z, a` for n = 2 and
/// `x1, y1, .., z, a` beyond.
pub fn build_chn(n: usize) -> Result<ModelSpace> {
    build_dr(DamekRicciSpec::chn(n)?, true, &format!("CH{n}"))
}

/// Upper half-space with metric `(sum dx_i^2 + dy^2) / y^2`.
pub fn build_half_space(spec: HalfSpaceSpec) -> Result<ModelSpace> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::InvalidModel("half-space needs n >= 2".into()));
    }
    let mut names: Vec<String> = if n == 2 { vec!["x".into()] } else { (1..n).map(|i| format!("x{i}")).collect() };
    names.push("y".into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let chart = Chart::new(&refs, None)?;
    let y = RatExpr::named("y");
    let mut frame = vec![vec![RatExpr::zero(); n]; n];
    for (i, row) in frame.iter_mut().enumerate() {
        row[i] = y.clone();
    }
    let labels = names.iter().map(|s| format!("Y{s}")).collect();
    ModelSpace::from_frame(&format!("RH{n}"), chart, frame, labels, ModelKind::HalfSpace(spec))
}

/// Euclidean metric on the given variables (test chart).
pub fn build_flat(names: &[&str]) -> Result<ModelSpace> {
    let chart = Chart::new(names, None)?;
    let n = names.len();
    let frame = (0..n).map(|i| (0..n).map(|j| if i == j { RatExpr::one() } else { RatExpr::zero() }).collect()).collect();
    let labels = names.iter().map(|s| format!("d{s}")).collect();
    ModelSpace::from_frame("flat", chart, frame, labels, ModelKind::Other)
}

fn json_scalar(v: &Value) -> Result<Scalar> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else {
                Err(Error::InvalidModel(format!("structure constant {n} must be an integer or a \"p/q\" string")))
            }
        }
        Value::String(s) => {
            let e = RatExpr::parse(s)?;
            e.as_constant().ok_or_else(|| Error::InvalidModel(format!("`{s}` is not a rational constant")))
        }
        _ => Err(Error::InvalidModel("structure constant must be a number or string".into())),
    }
}

fn json_usize(obj: &Value, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::InvalidModel(format!("missing or invalid `{key}`")))
}

/// Build a model from `{ "kind": "damek_ricci" | "half_space" | "chn", ... }`.
/// Structure constants are `[i, j, r, value]` with 1-based indices.
pub fn model_from_json(v: &Value) -> Result<ModelSpace> {
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::InvalidModel("missing `kind`".into()))?;
    match kind {
        "chn" => build_chn(json_usize(v, "n")?),
        "half_space" => build_half_space(HalfSpaceSpec { n: json_usize(v, "n")? }),
        "damek_ricci" => {
            let k = json_usize(v, "k")?;
            let m = json_usize(v, "m")?;
            let mut entries = Vec::new();
            if let Some(list) = v.get("A") {
                let list = list.as_array().ok_or_else(|| Error::InvalidModel("`A` must be an array".into()))?;
                for e in list {
                    let e = e.as_array().filter(|e| e.len() == 4).ok_or_else(|| Error::InvalidModel("`A` entries are [i, j, r, value]".into()))?;
                    let idx = |x: &Value| -> Result<usize> {
                        x.as_u64().filter(|&i| i >= 1).map(|i| i as usize - 1).ok_or_else(|| Error::InvalidModel("indices are 1-based integers".into()))
                    };
                    entries.push((idx(&e[0])?, idx(&e[1])?, idx(&e[2])?, json_scalar(&e[3])?));
                }
            }
            build_damek_ricci(DamekRicciSpec::from_entries(k, m, &entries)?)
        }
        other => Err(Error::InvalidModel(format!("unknown model kind `{other}`"))),
    }
}

/// Builtin names: `chN`/`chn` with `n`, `rhN`, `half_space`.
pub fn builtin(name: &str, n: Option<usize>) -> Result<ModelSpace> {
    let lower = name.to_ascii_lowercase();
    let parse_n = |s: &str| s.parse::<usize>().ok();
    if lower == "chn" || lower == "ch" {
        return build_chn(n.unwrap_or(2));
    }
    if lower == "rhn" || lower == "rh" || lower == "half_space" {
        return build_half_space(HalfSpaceSpec { n: n.unwrap_or(2) });
    }
    if let Some(rest) = lower.strip_prefix("ch").and_then(parse_n) {
        return build_chn(rest);
    }
    if let Some(rest) = lower.strip_prefix("rh").and_then(parse_n) {
        return build_half_space(HalfSpaceSpec { n: rest });
    }
    Err(Error::InvalidModel(format!("unknown builtin model `{name}`")))
}
