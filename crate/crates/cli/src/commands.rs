use std::fmt::{self, Write as _};
use std::path::Path;

use cvflab::busemann::{busemann_conformal_field, busemann_pair, horospherical_pair, verify_hessian_identity, BusemannKind};
use cvflab::cks::{cr_structure_check, generate_cks, match_reference_system, CrReport, MatchReport, ReferenceSystem};
use cvflab::expr::{a_var, int, RatExpr, Scalar};
use cvflab::fixtures;
use cvflab::harmonic::{f4_reconstruct, solve_truncated, Direction, SeriesContext};
use cvflab::liecalc::{compare_tables, generator_lie_tables, parse_table_fixture};
use cvflab::models::{builtin, model_from_json, ModelSpace};
use cvflab::numlab::{
    collocation_nullspace_with, in_span, is_subspace, right_invariant_killing_fields, AnsatzSpec, CollocationConfig, Mode, NullspaceReport, DEFAULT_SEED,
};
use serde_json::{json, Value};

use crate::{Kind, Opts};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration: exit code 2.
    Usage(String),
    /// A computation that should have succeeded did not: exit code 1.
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<cvflab::Error> for CliError {
    fn from(e: cvflab::Error) -> Self {
        use cvflab::Error as E;
        match e {
            E::InvalidModel(_) | E::InvalidArgument(_) | E::UnknownVariable(_) | E::Parse { .. } | E::Fixture(_) | E::NoGeneratorTables | E::ReservedSymbol(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub struct Outcome {
    pub command: String,
    pub pass: bool,
    pub json: Value,
    pub markdown: String,
}

type Res<T> = Result<T, CliError>;

fn load_model(opts: &Opts, default: &str, default_n: usize) -> Res<ModelSpace> {
    let name = opts.model.as_deref().unwrap_or(default);
    if name.ends_with(".json") || Path::new(name).is_file() {
        let text = std::fs::read_to_string(name).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        return Ok(model_from_json(&v)?);
    }
    Ok(builtin(name, Some(opts.n.unwrap_or(default_n)))?)
}

fn read_fixture(opts: &Opts) -> Res<Option<String>> {
    opts.fixture
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))))
        .transpose()
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn chn_order(model: &ModelSpace) -> Option<usize> {
    model.name.strip_prefix("CH").and_then(|s| s.parse().ok())
}

pub fn verify_frames(opts: &Opts) -> Res<Outcome> {
    let model = load_model(opts, "chn", 2)?;
    let reference = match (read_fixture(opts)?, chn_order(&model)) {
        (Some(t), _) => t,
        (None, Some(2)) => fixtures::CH2_LIE_TABLES.to_string(),
        (None, Some(_)) => fixtures::CHN_LIE_TABLES.to_string(),
        (None, None) => return Err(CliError::Usage(format!("no reference tables for {}; pass --fixture", model.name))),
    };
    let computed = generator_lie_tables(&model)?;
    let expected = parse_table_fixture(&reference, &model)?;
    let diffs = compare_tables(&model, &computed, &expected);
    let labels = &model.frame_labels;
    let mut tables = Vec::new();
    let mut md = format!("# Generator tables: {}\n\n| generator | entry | value |\n|---|---|---|\n", model.name);
    for (g, t) in computed.iter().enumerate() {
        let mut entries = Vec::new();
        for i in 0..t.dim() {
            for j in i..t.dim() {
                if !t.get(i, j).is_zero() {
                    entries.push(json!([labels[i], labels[j], t.get(i, j).to_string()]));
                    let _ = writeln!(md, "| {} | ({}, {}) | {} |", labels[g], labels[i], labels[j], t.get(i, j));
                }
            }
        }
        tables.push(json!({ "generator": labels[g], "nonzero": entries }));
    }
    let pass = diffs.is_empty();
    let _ = writeln!(md, "\n{} differences. {}", diffs.len(), pass_word(pass));
    for d in &diffs {
        let _ = writeln!(md, "- {d}");
    }
    Ok(Outcome {
        command: "verify-frames".into(),
        pass,
        json: json!({ "command": "verify-frames", "model": model.name, "tables": tables, "diffs": diffs, "pass": pass }),
        markdown: md,
    })
}

fn match_md(title: &str, r: &MatchReport) -> String {
    let mut md = format!("## {title}\n\n| reference | generated | factor |\n|---|---|---|\n");
    for m in &r.matched {
        let _ = writeln!(md, "| {} | {} | `{}` |", m.reference, m.generated, m.factor);
    }
    let _ = writeln!(md, "\nunmatched reference: {:?}\nunmatched generated: {:?}", r.unmatched_reference, r.unmatched_generated);
    for e in &r.errata {
        let _ = writeln!(md, "- misprinted line {} ({}) {}", e.label, e.source, if e.matched { "MATCHES (unexpected)" } else { "does not match, as expected" });
    }
    md
}

fn cr_md(r: &CrReport) -> String {
    let mut md = String::from("## Cauchy-Riemann structure\n\n| check | holds | result |\n|---|---|---|\n");
    for c in &r.checks {
        let _ = writeln!(md, "| {} | {} | `{}` |", c.name, c.holds, c.result);
    }
    md
}

pub fn derive_system(opts: &Opts) -> Res<Outcome> {
    let model = load_model(opts, "chn", 2)?;
    let n = chn_order(&model).ok_or_else(|| CliError::Usage(format!("derive-system needs a complex hyperbolic model, got {}", model.name)))?;
    let sys = generate_cks(&model)?;
    let fixture = read_fixture(opts)?;
    let mut md = format!("# Conformal Killing system: {}\n\n{} raw equations, {} reduced equations.\n\n", model.name, sys.raw.len(), sys.reduced.len());
    let mut out = json!({ "command": "derive-system", "model": model.name, "raw_count": sys.raw.len(), "reduced_count": sys.reduced.len() });
    let mut pass = true;
    let errata_ok = |r: &MatchReport| r.errata.iter().all(|e| !e.matched);
    if n == 2 {
        let raw_ref = ReferenceSystem::parse("raw", fixture.as_deref().unwrap_or(fixtures::CH2_RAW_SYSTEM), 1)?;
        let raw = match_reference_system(&sys.raw, &raw_ref);
        let red = match_reference_system(&sys.reduced, &ReferenceSystem::parse("reduced", fixtures::CH2_REDUCED_SYSTEM, 1)?);
        let cr = cr_structure_check(&model)?;
        pass = raw.is_empty_diff() && red.is_empty_diff() && cr.holds() && errata_ok(&raw) && errata_ok(&red);
        md += &match_md("Raw system", &raw);
        md += "\n";
        md += &match_md("Reduced system", &red);
        md += "\n";
        md += &cr_md(&cr);
        out["raw"] = serde_json::to_value(&raw).unwrap();
        out["reduced"] = serde_json::to_value(&red).unwrap();
        out["cauchy_riemann"] = serde_json::to_value(&cr).unwrap();
    } else {
        let r = ReferenceSystem::parse("chn", fixture.as_deref().unwrap_or(fixtures::CHN_SYSTEM), n - 1)?;
        let raw = match_reference_system(&sys.raw, &r);
        pass &= raw.is_empty_diff() && errata_ok(&raw);
        md += &match_md("Raw system", &raw);
        out["raw"] = serde_json::to_value(&raw).unwrap();
    }
    out["pass"] = json!(pass);
    let _ = writeln!(md, "\n{}", pass_word(pass));
    Ok(Outcome { command: "derive-system".into(), pass, json: out, markdown: md })
}

fn parse_point(opts: &Opts, k: usize) -> Res<Option<Vec<Scalar>>> {
    let Some(p) = &opts.point else { return Ok(None) };
    let v: Vec<Scalar> = p
        .iter()
        .map(|s| RatExpr::parse(s.trim()).ok().and_then(|e| e.as_constant()).ok_or_else(|| CliError::Usage(format!("`{s}` is not a rational number"))))
        .collect::<Res<_>>()?;
    if v.len() != k {
        return Err(CliError::Usage(format!("--point needs {k} coordinates")));
    }
    Ok(Some(v))
}

fn cube(k: usize) -> Vec<Vec<Scalar>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out.into_iter().flat_map(|v: Vec<Scalar>| (-1..=1).map(move |c| [v.clone(), vec![int(c)]].concat())).collect();
    }
    out
}

fn fmt_point(p: &[Scalar]) -> String {
    let parts: Vec<String> = p.iter().map(|c| RatExpr::constant(c.clone()).to_string()).collect();
    format!("({})", parts.join(", "))
}

pub fn busemann(opts: &Opts) -> Res<Outcome> {
    let model = load_model(opts, "rh", 2)?;
    if !model.is_half_space() {
        // the real hyperbolic identity must fail here
        let pair = horospherical_pair(&model)?;
        pair.check(&model)?;
        let r = verify_hessian_identity(&pair, &model);
        let pass = !r.holds;
        let mut md = format!("# Hessian identity on {}\n\nExpected to fail. Identity holds: {}. {}\n\n| entry | hessian | g - w*w |\n|---|---|---|\n", model.name, r.holds, pass_word(pass));
        for e in r.entries.iter().filter(|e| !e.ok) {
            let _ = writeln!(md, "| ({}, {}) | `{}` | `{}` |", e.row, e.col, e.hessian, e.expected);
        }
        return Ok(Outcome {
            command: "busemann".into(),
            pass,
            json: json!({ "command": "busemann", "model": model.name, "expected_failure": true, "identity_holds": r.holds, "report": r, "pass": pass }),
            markdown: md,
        });
    }
    let k = model.dim() - 1;
    let mut cases: Vec<(BusemannKind, Vec<Scalar>)> = Vec::new();
    if opts.kind != Some(Kind::Boundary) {
        cases.push((BusemannKind::Infinity, vec![]));
    }
    if opts.kind != Some(Kind::Infinity) {
        match parse_point(opts, k)? {
            Some(p) => cases.push((BusemannKind::BoundaryPoint, p)),
            None => cases.extend(cube(k).into_iter().map(|p| (BusemannKind::BoundaryPoint, p))),
        }
    }
    let mut md = format!("# Busemann fields on {}\n\n| kind | point | hessian identity | conformal | rho |\n|---|---|---|---|---|\n", model.name);
    let mut rows = Vec::new();
    let mut pass = true;
    for (kind, p) in cases {
        let pair = busemann_pair(kind, &p, &model)?;
        let closed = pair.check(&model).is_ok();
        let hess = verify_hessian_identity(&pair, &model).holds;
        let field = busemann_conformal_field(&pair, &model);
        let ok = closed && hess && field.is_ok();
        pass &= ok;
        let (xi, rho) = match &field {
            Ok((xi, rho)) => (xi.display(&model.chart), rho.to_string()),
            Err(e) => (String::new(), e.to_string()),
        };
        let kind_s = serde_json::to_value(kind).unwrap();
        let _ = writeln!(md, "| {} | {} | {} | {} | `{}` |", kind_s.as_str().unwrap_or(""), fmt_point(&p), hess, field.is_ok(), rho);
        rows.push(json!({ "kind": kind, "point": fmt_point(&p), "closed": closed, "hessian_identity": hess, "conformal": field.is_ok(), "field": xi, "rho": rho }));
    }
    let _ = writeln!(md, "\n{}", pass_word(pass));
    Ok(Outcome { command: "busemann".into(), pass, json: json!({ "command": "busemann", "model": model.name, "cases": rows, "pass": pass }), markdown: md })
}

pub fn series(opts: &Opts) -> Res<Outcome> {
    let order = opts.order.unwrap_or(6);
    let degree = opts.poly_degree.unwrap_or(2);
    if order < 4 {
        return Err(CliError::Usage(format!("--M must be at least 4, got {order}")));
    }
    let report = solve_truncated(order, degree)?;
    let f4 = f4_reconstruct(&report);
    let ctx = SeriesContext::ch2(Direction::X)?;
    let (f4_s, rho_zero, rho_s) = match &f4 {
        Ok(f) => {
            let rho = f.derive_in(a_var(), &ctx.depends());
            (f.to_string(), rho.is_zero(), rho.to_string())
        }
        Err(e) => (e.to_string(), false, String::new()),
    };
    let pass = report.vanishing_claims_hold() && f4.is_ok() && rho_zero;
    let mut md = report.to_markdown();
    let _ = writeln!(md, "\nf4 = {f4_s}\n\nrho = d(f4)/da = {rho_s}\n\n{}", pass_word(pass));
    let json = json!({
        "command": "series",
        "report": serde_json::to_value(&report).unwrap(),
        "f4": f4_s,
        "rho": rho_s,
        "rho_zero": rho_zero,
        "pass": pass,
    });
    Ok(Outcome { command: "series".into(), pass, json, markdown: md })
}

struct NullspaceConfig {
    model: ModelSpace,
    ansatz: AnsatzSpec,
    seed: u64,
}

fn nullspace_config(opts: &Opts) -> Res<NullspaceConfig> {
    let mut opts = opts.clone();
    let mut extras = Vec::new();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let uint = |k: &str| v.get(k).and_then(Value::as_u64);
        match v.get("model") {
            Some(Value::String(s)) => opts.model = opts.model.or(Some(s.clone())),
            Some(m @ Value::Object(_)) => {
                let model = model_from_json(m)?;
                return finish_config(&opts, model, &v, extras);
            }
            _ => {}
        }
        opts.n = opts.n.or(uint("n").map(|x| x as usize));
        opts.degree = opts.degree.or(uint("degree").map(|x| x as u32));
        opts.k_range = opts.k_range.or(uint("k_range").map(|x| x as u32));
        opts.seed = opts.seed.or(uint("seed"));
        if let Some(list) = v.get("extras").and_then(Value::as_array) {
            for e in list {
                let s = e.as_str().ok_or_else(|| CliError::Usage("extras must be strings".into()))?;
                extras.push(RatExpr::parse(s)?);
            }
        }
    }
    let model = load_model(&opts, "chn", 2)?;
    finish_config(&opts, model, &Value::Null, extras)
}

fn finish_config(opts: &Opts, model: ModelSpace, v: &Value, mut extras: Vec<RatExpr>) -> Res<NullspaceConfig> {
    let uint = |k: &str| v.get(k).and_then(Value::as_u64);
    if let Some(list) = v.get("extras").and_then(Value::as_array) {
        for e in list {
            extras.push(RatExpr::parse(e.as_str().unwrap_or_default())?);
        }
    }
    let degree = opts.degree.or(uint("degree").map(|x| x as u32)).unwrap_or(2);
    let default_k = if model.chart.exp_var().is_some() { 2 } else { 0 };
    let k = opts.k_range.or(uint("k_range").map(|x| x as u32)).unwrap_or(default_k);
    let seed = opts.seed.or(uint("seed")).unwrap_or(DEFAULT_SEED);
    Ok(NullspaceConfig { model, ansatz: AnsatzSpec::new(degree, k).with_extras(extras), seed })
}

fn witness_rows(model: &ModelSpace, ansatz: &AnsatzSpec, killing: &NullspaceReport, conformal: &NullspaceReport) -> Res<Vec<Value>> {
    let k = model.dim() - 1;
    let mut cases = vec![(BusemannKind::Infinity, vec![])];
    cases.extend(cube(k).into_iter().map(|p| (BusemannKind::BoundaryPoint, p)));
    let mut out = Vec::new();
    for (kind, p) in cases {
        let pair = busemann_pair(kind, &p, model)?;
        let (xi, rho) = busemann_conformal_field(&pair, model)?;
        let Some(c) = ansatz.coordinates(model, &xi)? else { continue };
        out.push(json!({
            "kind": kind,
            "point": fmt_point(&p),
            "field": xi.display(&model.chart),
            "rho": rho.to_string(),
            "in_conformal": in_span(&c, &conformal.basis),
            "in_killing": in_span(&c, &killing.basis),
        }));
    }
    Ok(out)
}

pub fn nullspace(opts: &Opts) -> Res<Outcome> {
    let cfg = nullspace_config(opts)?;
    run_nullspace(&cfg.model, &cfg.ansatz, cfg.seed)
}

fn run_nullspace(model: &ModelSpace, ansatz: &AnsatzSpec, seed: u64) -> Res<Outcome> {
    let config = CollocationConfig::with_seed(seed);
    let killing = collocation_nullspace_with(model, ansatz, Mode::Killing, &config)?;
    let conformal = collocation_nullspace_with(model, ansatz, Mode::Conformal, &config)?;
    let homothetic = collocation_nullspace_with(model, ansatz, Mode::Homothetic, &config)?;
    let nested = is_subspace(&killing.basis, &homothetic.basis) && is_subspace(&homothetic.basis, &conformal.basis);
    let mut out = json!({
        "command": "nullspace",
        "model": model.name,
        "seed": seed,
        "killing": killing.to_json(model),
        "homothetic": homothetic.to_json(model),
        "conformal": conformal.to_json(model),
        "nested": nested,
    });
    let mut md = format!(
        "# Collocation nullspaces: {}\n\n| mode | dimension |\n|---|---|\n| killing | {} |\n| homothetic | {} |\n| conformal | {} |\n\nnested: {}\n\n",
        model.name, killing.dimension, homothetic.dimension, conformal.dimension, nested
    );
    let mut pass = nested;
    if model.structure().is_some() {
        let ri = right_invariant_killing_fields(model)?;
        let inside = ri.iter().filter(|f| matches!(ansatz.coordinates(model, f), Ok(Some(c)) if in_span(&c, &killing.basis))).count();
        let equal = conformal.dimension == killing.dimension;
        let rho_zero = conformal.all_rho_zero();
        pass &= equal && rho_zero && inside == ri.len();
        out["right_invariant_in_killing"] = json!(format!("{inside}/{}", ri.len()));
        out["conformal_equals_killing"] = json!(equal);
        out["all_conformal_rho_zero"] = json!(rho_zero);
        let _ = writeln!(md, "right-invariant fields in the killing nullspace: {inside}/{}\nconformal = killing: {equal}\nall conformal potentials zero: {rho_zero}\n", ri.len());
    } else if model.is_half_space() {
        let witnesses = witness_rows(model, ansatz, &killing, &conformal)?;
        let verified = witnesses.iter().filter(|w| w["in_conformal"] == json!(true) && w["in_killing"] == json!(false)).count();
        let gap = conformal.dimension - killing.dimension;
        pass &= gap > 0 && verified > 0;
        let _ = writeln!(md, "gap: {gap}; Busemann witnesses outside the killing span: {verified}\n\n| kind | point | rho | conformal | killing |\n|---|---|---|---|---|");
        for w in &witnesses {
            let _ = writeln!(md, "| {} | {} | `{}` | {} | {} |", w["kind"].as_str().unwrap_or(""), w["point"].as_str().unwrap_or(""), w["rho"].as_str().unwrap_or(""), w["in_conformal"], w["in_killing"]);
        }
        md += "\n";
        out["gap"] = json!(gap);
        out["busemann_witnesses"] = json!(witnesses);
    }
    for r in [&killing, &homothetic, &conformal] {
        md += &r.to_markdown(model);
        md += "\n";
    }
    let _ = writeln!(md, "{}", pass_word(pass));
    out["pass"] = json!(pass);
    Ok(Outcome { command: "nullspace".into(), pass, json: out, markdown: md })
}

pub fn all(opts: &Opts) -> Res<Outcome> {
    let with = |model: &str, n: usize| Opts { model: Some(model.into()), n: Some(n), seed: opts.seed, ..Default::default() };
    let mut results: Vec<Outcome> = Vec::new();
    for n in [2, 3] {
        results.push(verify_frames(&with("chn", n))?);
        results.push(derive_system(&with("chn", n))?);
    }
    for n in [2, 3, 4] {
        results.push(busemann(&with("rh", n))?);
    }
    results.push(busemann(&with("chn", 2))?);
    results.push(series(&Opts::default())?);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    for (model, n, d, k) in [("chn", 2, 2, 2), ("chn", 3, 2, 2), ("rh", 2, 2, 0), ("rh", 3, 2, 0)] {
        let m = builtin(model, Some(n))?;
        results.push(run_nullspace(&m, &AnsatzSpec::new(d, k), seed)?);
    }
    let pass = results.iter().all(|r| r.pass);
    let mut md = String::from("# Summary\n\n| command | model | result |\n|---|---|---|\n");
    for r in &results {
        let _ = writeln!(md, "| {} | {} | {} |", r.command, r.json["model"].as_str().unwrap_or("CH2"), pass_word(r.pass));
    }
    md += "\n";
    for r in &results {
        md += &r.markdown;
        md += "\n";
    }
    let json = json!({ "command": "all", "results": results.iter().map(|r| r.json.clone()).collect::<Vec<_>>(), "pass": pass });
    Ok(Outcome { command: "all".into(), pass, json, markdown: md })
}
