use cvflab::expr::{rat, Point, RatExpr, Var};
use cvflab::models::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn p(s: &str) -> RatExpr {
    RatExpr::parse(s).unwrap()
}

fn renamed(rows: &[Vec<&str>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|e| e.replace('x', "v1").replace('y', "v2")).collect()).collect()
}

fn printed_rows(m: &[Vec<RatExpr>]) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect()
}

#[test]
fn ch2_frame_matches_hand_table() {
    let ch2 = build_chn(2).unwrap();
    let names: Vec<&str> = ch2.vars().iter().map(|v| v.name()).collect();
    assert_eq!(names, ["x", "y", "z", "a"]);
    assert_eq!(ch2.frame_labels, ["V", "JZV", "Z", "A"]);
    let expected = vec![
        vec!["u", "0", "-1/2*u*y", "0"],
        vec!["0", "u", "1/2*u*x", "0"],
        vec!["0", "0", "u^2", "0"],
        vec!["0", "0", "0", "1"],
    ];
    assert_eq!(printed_rows(&ch2.frame), expected);
    // the generic builder with the same constants gives the same frame up to
    // variable names
    let generic = build_damek_ricci(DamekRicciSpec::from_entries(2, 1, &[(0, 1, 0, rat(1, 1))]).unwrap()).unwrap();
    assert_eq!(printed_rows(&generic.frame), renamed(&expected));
}

#[test]
fn ch2_metric_zz_entry() {
    let ch2 = build_chn(2).unwrap();
    assert_eq!(ch2.metric.get(2, 2), &p("exp(-2*a)"));
    assert_eq!(ch2.metric.get(0, 0), &p("u^-2 + y^2*u^-4/4"));
    ch2.check_frame().unwrap();
}

/// Numeric oracle: invert the frame matrix with nalgebra and compare the
/// resulting metric with the exact one at random points.
#[test]
fn metric_agrees_with_numeric_inversion() {
    for model in [build_chn(2).unwrap(), build_chn(3).unwrap(), build_half_space(HalfSpaceSpec { n: 3 }).unwrap()] {
        let n = model.dim();
        for trial in 0..5 {
            let vals: Vec<f64> = (0..n).map(|i| 0.3 + 0.17 * (i as f64) + 0.11 * trial as f64).collect();
            let val = |v: Var| -> Option<f64> {
                if v.is_u() {
                    let ai = model.chart.index_of(Var::new("a"))?;
                    Some((vals[ai] / 2.0).exp())
                } else {
                    model.chart.index_of(v).map(|i| vals[i])
                }
            };
            let f = DMatrix::from_fn(n, n, |i, j| model.frame[i][j].eval_f64(&val).unwrap());
            let theta = f.transpose().try_inverse().unwrap();
            let g = theta.transpose() * &theta;
            for i in 0..n {
                for j in 0..n {
                    let exact = model.metric.get(i, j).eval_f64(&val).unwrap();
                    assert!((exact - g[(i, j)]).abs() < 1e-9, "{} ({i},{j})", model.name);
                }
            }
        }
    }
}

#[test]
fn degenerate_center_gives_real_hyperbolic_type_metric() {
    for k in 1..=3 {
        let spec = DamekRicciSpec::new(k, 0, vec![]).unwrap();
        let model = build_damek_ricci(spec).unwrap();
        for i in 0..k {
            assert_eq!(model.frame[i][i], p("u"));
            assert_eq!(model.metric.get(i, i), &p("exp(-a)"));
        }
        assert_eq!(model.metric.get(k, k), &RatExpr::one());
        model.check_frame().unwrap();
    }
}

#[test]
fn half_space_examples() {
    let rh2 = build_half_space(HalfSpaceSpec { n: 2 }).unwrap();
    assert_eq!(rh2.metric.get(0, 0), &p("1/y^2"));
    assert_eq!(rh2.metric.get(1, 1), &p("1/y^2"));
    assert!(rh2.metric.get(0, 1).is_zero());
    assert_eq!(printed_rows(&rh2.frame), vec![vec!["y", "0"], vec!["0", "y"]]);
    rh2.check_frame().unwrap();
    let rh3 = build_half_space(HalfSpaceSpec { n: 3 }).unwrap();
    let det = (0..3).fold(RatExpr::one(), |acc, i| &acc * rh3.metric.get(i, i));
    assert_eq!(det, p("y^-6"));
    assert!(build_half_space(HalfSpaceSpec { n: 1 }).is_err());
}

#[test]
fn non_antisymmetric_constants_are_rejected() {
    let a = vec![vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]]];
    assert!(matches!(DamekRicciSpec::new(2, 1, a), Err(cvflab::Error::InvalidModel(_))));
    let bad = [(0, 1, 0, rat(1, 1)), (1, 0, 0, rat(1, 1))];
    assert!(DamekRicciSpec::from_entries(2, 1, &bad).is_err());
}

fn frame_vf(model: &ModelSpace, label: &str) -> VectorField {
    model.frame_field(model.frame_index(label).unwrap())
}

#[test]
fn ch2_brackets() {
    let m = build_chn(2).unwrap();
    let (v, jv, z, a) = (frame_vf(&m, "V"), frame_vf(&m, "JZV"), frame_vf(&m, "Z"), frame_vf(&m, "A"));
    let half = RatExpr::rat(1, 2);
    assert_eq!(m.bracket(&a, &v).unwrap(), v.scale(&half));
    assert_eq!(m.bracket(&a, &jv).unwrap(), jv.scale(&half));
    assert_eq!(m.bracket(&a, &z).unwrap(), z);
    assert_eq!(m.bracket(&v, &jv).unwrap(), z);
    assert!(m.bracket(&v, &z).unwrap().is_zero());
    assert!(m.bracket(&jv, &z).unwrap().is_zero());
    // frame-basis inputs are converted first
    let vf = VectorField::frame(vec![RatExpr::one(), RatExpr::zero(), RatExpr::zero(), RatExpr::zero()]);
    let af = VectorField::frame(vec![RatExpr::zero(), RatExpr::zero(), RatExpr::zero(), RatExpr::one()]);
    assert_eq!(m.to_frame(&m.bracket(&af, &vf).unwrap()), VectorField::frame(vec![half, RatExpr::zero(), RatExpr::zero(), RatExpr::zero()]));
}

#[test]
fn chn_brackets_match_structure() {
    let m = build_chn(3).unwrap();
    for i in 1..=2 {
        for j in 1..=2 {
            let b = m.bracket(&frame_vf(&m, &format!("V{i}")), &frame_vf(&m, &format!("JZV{j}"))).unwrap();
            if i == j {
                assert_eq!(b, frame_vf(&m, "Z"));
            } else {
                assert!(b.is_zero());
            }
            assert!(m.bracket(&frame_vf(&m, &format!("V{i}")), &frame_vf(&m, &format!("V{j}"))).unwrap().is_zero());
        }
    }
}

#[test]
fn jacobi_on_generator_triples() {
    for model in [build_chn(2).unwrap(), build_chn(3).unwrap()] {
        let n = model.dim();
        let fields: Vec<VectorField> = (0..n).map(|a| model.frame_field(a)).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t1 = model.bracket(&fields[i], &model.bracket(&fields[j], &fields[k]).unwrap()).unwrap();
                    let t2 = model.bracket(&fields[j], &model.bracket(&fields[k], &fields[i]).unwrap()).unwrap();
                    let t3 = model.bracket(&fields[k], &model.bracket(&fields[i], &fields[j]).unwrap()).unwrap();
                    assert!(t1.add(&t2).add(&t3).is_zero());
                }
            }
        }
    }
}

#[test]
fn json_ingestion() {
    let v: serde_json::Value = serde_json::from_str(r#"{"kind":"damek_ricci","k":2,"m":1,"A":[[1,2,1,1]]}"#).unwrap();
    let m = model_from_json(&v).unwrap();
    let ch2 = printed_rows(&build_chn(2).unwrap().frame);
    let ch2: Vec<Vec<&str>> = ch2.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    assert_eq!(printed_rows(&m.frame), renamed(&ch2));
    let v: serde_json::Value = serde_json::from_str(r#"{"kind":"chn","n":3}"#).unwrap();
    assert_eq!(model_from_json(&v).unwrap().dim(), 6);
    let v: serde_json::Value = serde_json::from_str(r#"{"kind":"half_space","n":4}"#).unwrap();
    assert_eq!(model_from_json(&v).unwrap().dim(), 4);
    let v: serde_json::Value = serde_json::from_str(r#"{"kind":"damek_ricci","k":2,"m":1,"A":[[1,2,1,"1/2"],[2,1,1,"1/2"]]}"#).unwrap();
    assert!(model_from_json(&v).is_err());
    let v: serde_json::Value = serde_json::from_str(r#"{"kind":"torus"}"#).unwrap();
    assert!(model_from_json(&v).is_err());
}

#[test]
fn conformal_rescale_scales_metric() {
    let rh2 = build_half_space(HalfSpaceSpec { n: 2 }).unwrap();
    let e = p("x^2 + 1");
    let m2 = rh2.conformal_rescale(&e).unwrap();
    assert_eq!(m2.metric.get(0, 0), &(&(&e * &e) * rh2.metric.get(0, 0)));
    m2.check_frame().unwrap();
}

fn poly_field() -> impl Strategy<Value = Vec<RatExpr>> {
    let coeff = -3i64..=3;
    proptest::collection::vec((coeff.clone(), 0u32..3, 0u32..3, 0u32..2, -2i32..=2), 1..4).prop_map(|terms| {
        let x = RatExpr::named("x");
        let y = RatExpr::named("y");
        let z = RatExpr::named("z");
        let mut comps = vec![RatExpr::zero(); 4];
        for (idx, (c, ex, ey, ez, ku)) in terms.into_iter().enumerate() {
            let t = &(&(&x.pow(ex as i32).unwrap() * &y.pow(ey as i32).unwrap()) * &z.pow(ez as i32).unwrap()) * &RatExpr::u_pow(ku);
            comps[idx % 4] = &comps[idx % 4] + &t.scale(&rat(c, 1));
        }
        comps
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bracket_is_antisymmetric(a in poly_field(), b in poly_field()) {
        let m = build_chn(2).unwrap();
        let x = VectorField::coord(a);
        let y = VectorField::coord(b);
        prop_assert!(m.bracket(&x, &y).unwrap().add(&m.bracket(&y, &x).unwrap()).is_zero());
    }

    #[test]
    fn frame_coordinate_round_trip(a in poly_field()) {
        let m = build_chn(2).unwrap();
        let x = VectorField::coord(a);
        prop_assert_eq!(m.to_coordinate(&m.to_frame(&x)), x);
    }
}

#[test]
fn frame_duality_for_several_models() {
    let spec = DamekRicciSpec::from_entries(
        4,
        2,
        &[(0, 1, 0, rat(1, 1)), (2, 3, 0, rat(1, 1)), (0, 2, 1, rat(1, 1)), (3, 1, 1, rat(1, 1))],
    )
    .unwrap();
    let quaternionic_like = build_damek_ricci(spec).unwrap();
    for m in [build_chn(2).unwrap(), build_chn(3).unwrap(), build_chn(4).unwrap(), quaternionic_like] {
        m.check_frame().unwrap();
        let mut pt = Point::new();
        for (i, &v) in m.vars().iter().enumerate() {
            pt.insert(v, rat(i as i64 + 1, 3));
        }
        pt.insert(Var::U, rat(3, 2));
        assert!(m.metric.get(m.dim() - 1, m.dim() - 1).eval(&pt).is_ok());
    }
}
