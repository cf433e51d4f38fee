use cvflab::expr::{rat, RatExpr};
use cvflab::fixtures;
use cvflab::liecalc::*;
use cvflab::models::*;
use proptest::prelude::*;

fn p(s: &str) -> RatExpr {
    RatExpr::parse(s).unwrap()
}

fn rh(n: usize) -> ModelSpace {
    build_half_space(HalfSpaceSpec { n }).unwrap()
}

fn coord(v: &[&str]) -> VectorField {
    VectorField::coord(v.iter().map(|s| p(s)).collect())
}

fn diag_frame(d: &[i64]) -> SymTensor2 {
    SymTensor2::diag(Basis::Frame, d.iter().map(|&x| RatExpr::int(x)).collect())
}

#[test]
fn coordinate_lie_derivative_examples() {
    let rh2 = rh(2);
    let s = lie_derivative_coord(&rh2, &coord(&["0", "-1"]));
    assert_eq!(s, rh2.metric.scale(&p("2/y")));
    let split = conformal_split(&s, &rh2);
    assert_eq!(split.rho, p("1/y"));
    assert!(split.is_conformal());

    let ch2 = build_chn(2).unwrap();
    let a = coord(&["0", "0", "0", "1"]);
    let s = ch2.tensor_to_frame(&lie_derivative_coord(&ch2, &a));
    assert_eq!(s, diag_frame(&[-1, -1, -2, 0]));
    assert!(lie_derivative_coord(&ch2, &VectorField::zero(Basis::Coordinate, 4)).is_zero());
}

#[test]
fn frame_lie_derivative_examples() {
    let ch2 = build_chn(2).unwrap();
    let f = |v: [&str; 4]| -> Vec<RatExpr> { v.iter().map(|s| p(s)).collect() };
    assert_eq!(lie_derivative_frame(&ch2, &f(["0", "0", "0", "1"])).unwrap(), diag_frame(&[-1, -1, -2, 0]));
    let s = lie_derivative_frame(&ch2, &f(["1", "0", "0", "0"])).unwrap();
    let mut want = SymTensor2::zero(Basis::Frame, 4);
    want.set(0, 3, p("1/2"));
    want.set(1, 2, p("-1"));
    assert_eq!(s, want);
    // same field through both algorithms
    let fy = f(["y", "0", "0", "0"]);
    let coord_version = ch2.tensor_to_frame(&lie_derivative_coord(&ch2, &VectorField::frame(fy.clone())));
    assert_eq!(lie_derivative_frame(&ch2, &fy).unwrap(), coord_version);
    assert_eq!(lie_derivative_frame(&rh(2), &f(["1", "0", "0", "0"])[..2]), Err(cvflab::Error::NoGeneratorTables));
}

#[test]
fn generator_tables_match_fixtures() {
    let ch2 = build_chn(2).unwrap();
    let expected = parse_table_fixture(fixtures::CH2_LIE_TABLES, &ch2).unwrap();
    let computed = generator_lie_tables(&ch2).unwrap();
    assert!(compare_tables(&ch2, &computed, &expected).is_empty());
    let z = ch2.frame_index("Z").unwrap();
    let mut want = SymTensor2::zero(Basis::Frame, 4);
    want.set(2, 3, RatExpr::one());
    assert_eq!(computed[z], want);
    for n in [3, 4] {
        let m = build_chn(n).unwrap();
        let expected = parse_table_fixture(fixtures::CHN_LIE_TABLES, &m).unwrap();
        let computed = generator_lie_tables(&m).unwrap();
        assert_eq!(compare_tables(&m, &computed, &expected), Vec::<String>::new());
        // JZV_i: the (Z,A) x (V_i,JZV_i) block is [[1,0],[0,1/2]]
        let g = m.frame_index("JZV2").unwrap();
        let (vi, ji, zz, aa) = (m.frame_index("V2").unwrap(), g, m.frame_index("Z").unwrap(), m.frame_index("A").unwrap());
        assert_eq!(computed[g].get(zz, vi), &RatExpr::one());
        assert_eq!(computed[g].get(aa, ji), &p("1/2"));
        assert!(computed[g].get(zz, ji).is_zero() && computed[g].get(aa, vi).is_zero());
        let a_tab = &computed[aa];
        for i in 0..m.dim() - 2 {
            assert_eq!(a_tab.get(i, i), &RatExpr::int(-1));
        }
        assert_eq!(a_tab.get(zz, zz), &RatExpr::int(-2));
    }
}

#[test]
fn corrupted_table_fixture_is_detected() {
    let ch2 = build_chn(2).unwrap();
    let bad = fixtures::CH2_LIE_TABLES.replace("Z    Z    A    1", "Z    Z    A    2");
    let expected = parse_table_fixture(&bad, &ch2).unwrap();
    let diffs = compare_tables(&ch2, &generator_lie_tables(&ch2).unwrap(), &expected);
    assert_eq!(diffs.len(), 1);
    assert!(diffs[0].contains("L_Z g (Z, A)"));
    assert!(parse_table_fixture("V W A 1", &ch2).is_err());
}

#[test]
fn conformal_split_examples() {
    let ch2 = build_chn(2).unwrap();
    let s = diag_frame(&[-1, -1, -2, 0]);
    let split = conformal_split(&s, &ch2);
    assert_eq!(split.rho, p("-1/2"));
    assert!(!split.is_conformal());
    let rh2 = rh(2);
    let split = conformal_split(&rh2.metric.scale(&p("2/y")), &rh2);
    assert_eq!(split.rho, p("1/y"));
    assert!(split.residual.is_zero());
    let split = conformal_split(&SymTensor2::zero(Basis::Coordinate, 2), &rh2);
    assert!(split.is_killing());
}

#[test]
fn christoffel_examples() {
    let rh2 = rh(2);
    let g = christoffel(&rh2);
    assert_eq!(g.get(1, 0, 0), &p("1/y"));
    assert_eq!(g.get(0, 0, 1), &p("-1/y"));
    assert_eq!(g.get(0, 1, 0), &p("-1/y"));
    assert_eq!(g.get(1, 1, 1), &p("-1/y"));
    let flat = build_flat(&["s", "t", "w"]).unwrap();
    assert!(christoffel(&flat).gamma.iter().flatten().flatten().all(RatExpr::is_zero));
}

#[test]
fn gradient_examples() {
    let rh2 = rh(2);
    assert_eq!(gradient(&p("1/y"), &rh2), coord(&["0", "-1"]));
    assert_eq!(gradient(&p("x"), &rh2), coord(&["y^2", "0"]));
    assert!(gradient(&p("7/3"), &rh2).is_zero());
}

#[test]
fn hessian_of_form_examples() {
    let rh2 = rh(2);
    let omega = vec![RatExpr::zero(), p("-1/y")];
    let h = covariant_hessian_of_form(&omega, &rh2).unwrap();
    assert_eq!(h.get(0, 0), &p("1/y^2"));
    assert_eq!(h, rh2.metric.sub(&SymTensor2::outer(Basis::Coordinate, &omega)));
    assert!(covariant_hessian_of_form(&[RatExpr::zero(), RatExpr::zero()], &rh2).unwrap().is_zero());
    assert!(matches!(covariant_hessian_of_form(&[p("y"), RatExpr::zero()], &rh2), Err(cvflab::Error::NotClosed(_))));
}

#[test]
fn connection_is_metric_compatible() {
    for m in [rh(2), rh(3), build_chn(2).unwrap(), build_chn(3).unwrap()] {
        assert!(metric_compatible(&m), "{}", m.name);
    }
}

#[test]
fn conformal_rescaling_covariance() {
    let rh2 = rh(2);
    let xi = coord(&["0", "-1"]);
    let rho = conformal_split(&lie_derivative_coord(&rh2, &xi), &rh2).rho;
    for e in ["x^2 + 1", "y", "(x^2 + y^2)/y"] {
        let e = p(e);
        let m2 = rh2.conformal_rescale(&e).unwrap();
        let split = conformal_split(&lie_derivative_coord(&m2, &xi), &m2);
        assert!(split.is_conformal());
        assert_eq!(split.rho, &rho + &(&xi.apply(&rh2.chart, &e) / &e));
    }
}

fn poly_list(n: usize) -> impl Strategy<Value = Vec<RatExpr>> {
    proptest::collection::vec(proptest::collection::vec((-3i64..=3, 0i32..3, 0i32..2, 0i32..2, -2i32..=2), 0..3), n).prop_map(|comps| {
        comps
            .into_iter()
            .map(|terms| {
                terms
                    .into_iter()
                    .map(|(c, ex, ey, ez, ku)| {
                        let t = p(&format!("x^{ex}*y^{ey}*z^{ez}"));
                        (&t * &RatExpr::u_pow(ku)).scale(&rat(c, 1))
                    })
                    .sum()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frame_and_coordinate_algorithms_agree(f in poly_list(4)) {
        let ch2 = build_chn(2).unwrap();
        let coord_version = ch2.tensor_to_frame(&lie_derivative_coord(&ch2, &VectorField::frame(f.clone())));
        prop_assert_eq!(lie_derivative_frame(&ch2, &f).unwrap(), coord_version);
    }

    #[test]
    fn product_rule_for_scaled_fields(f in poly_list(1), xi in poly_list(4)) {
        let ch2 = build_chn(2).unwrap();
        let xi = VectorField::coord(xi);
        let lhs = lie_derivative_coord(&ch2, &xi.scale(&f[0]));
        prop_assert_eq!(lhs, scaled_field_rule(&ch2, &f[0], &xi));
    }

    #[test]
    fn residual_is_trace_free(xi in poly_list(4)) {
        let ch2 = build_chn(2).unwrap();
        let s = lie_derivative_coord(&ch2, &VectorField::coord(xi));
        let split = conformal_split(&s, &ch2);
        prop_assert!(trace(&split.residual, &ch2).is_zero());
        let sf = ch2.tensor_to_frame(&s);
        prop_assert_eq!(conformal_split(&sf, &ch2).rho, split.rho);
    }
}

#[test]
fn frame_and_coordinate_algorithms_agree_on_ch3() {
    let m = build_chn(3).unwrap();
    let vars: Vec<RatExpr> = m.vars().iter().map(|&v| RatExpr::var(v)).collect();
    let f: Vec<RatExpr> = (0..6).map(|i| &(&vars[i] * &vars[(i + 2) % 6]) * &RatExpr::u_pow(i as i32 - 3)).collect();
    let coord_version = m.tensor_to_frame(&lie_derivative_coord(&m, &VectorField::frame(f.clone())));
    assert_eq!(lie_derivative_frame(&m, &f).unwrap(), coord_version);
}
