use cvflab::busemann::*;
use cvflab::expr::{int, rat, RatExpr, Scalar};
use cvflab::liecalc::{conformal_split, lie_derivative_coord};
use cvflab::models::*;

fn p(s: &str) -> RatExpr {
    RatExpr::parse(s).unwrap()
}

fn rh(n: usize) -> ModelSpace {
    build_half_space(HalfSpaceSpec { n }).unwrap()
}

/// All points of {-1, 0, 1}^k.
fn boundary_points(k: usize) -> Vec<Vec<Scalar>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out.into_iter().flat_map(|v: Vec<Scalar>| (-1..=1).map(move |c| [v.clone(), vec![int(c)]].concat())).collect();
    }
    out
}

#[test]
fn pair_examples() {
    let rh2 = rh(2);
    let inf = busemann_pair(BusemannKind::Infinity, &[], &rh2).unwrap();
    assert_eq!(inf.e, p("1/y"));
    assert_eq!(inf.omega, vec![RatExpr::zero(), p("-1/y")]);
    inf.check(&rh2).unwrap();
    assert_eq!(inf.e.derive(rh2.vars()[1]), &inf.e * &inf.omega[1]);
    let b0 = busemann_pair(BusemannKind::BoundaryPoint, &[int(0)], &rh2).unwrap();
    assert_eq!(b0.e, p("(x^2 + y^2)/y"));
    b0.check(&rh2).unwrap();
}

#[test]
fn pair_errors() {
    let rh2 = rh(2);
    assert!(busemann_pair(BusemannKind::BoundaryPoint, &[], &rh2).is_err());
    assert!(busemann_pair(BusemannKind::Infinity, &[int(1)], &rh2).is_err());
    assert!(busemann_pair(BusemannKind::Infinity, &[], &build_chn(2).unwrap()).is_err());
}

#[test]
fn hessian_identity_on_real_hyperbolic_spaces() {
    for n in 2..=4 {
        let m = rh(n);
        let inf = busemann_pair(BusemannKind::Infinity, &[], &m).unwrap();
        let r = verify_hessian_identity(&inf, &m);
        assert!(r.holds);
        assert_eq!(r.entries.len(), n * (n + 1) / 2);
        for a in boundary_points(n - 1) {
            let pair = busemann_pair(BusemannKind::BoundaryPoint, &a, &m).unwrap();
            pair.check(&m).unwrap();
            assert!(verify_hessian_identity(&pair, &m).holds, "n={n} a={a:?}");
        }
    }
}

#[test]
fn hessian_identity_fails_on_ch2() {
    let ch2 = build_chn(2).unwrap();
    let pair = horospherical_pair(&ch2).unwrap();
    pair.check(&ch2).unwrap();
    let r = verify_hessian_identity(&pair, &ch2);
    assert!(!r.holds);
}

#[test]
fn conformal_fields_from_busemann_pairs() {
    let rh2 = rh(2);
    let inf = busemann_pair(BusemannKind::Infinity, &[], &rh2).unwrap();
    let (xi, rho) = busemann_conformal_field(&inf, &rh2).unwrap();
    assert_eq!(xi, VectorField::coord(vec![RatExpr::zero(), RatExpr::int(-1)]));
    assert_eq!(rho, p("1/y"));
    let b0 = busemann_pair(BusemannKind::BoundaryPoint, &[int(0)], &rh2).unwrap();
    let (xi, _) = busemann_conformal_field(&b0, &rh2).unwrap();
    // hand-derived gradient of (x^2+y^2)/y
    assert_eq!(xi, VectorField::coord(vec![p("2*x*y"), p("y^2 - x^2")]));
    for n in 2..=4 {
        let m = rh(n);
        for a in boundary_points(n - 1) {
            let pair = busemann_pair(BusemannKind::BoundaryPoint, &a, &m).unwrap();
            let (xi, rho) = busemann_conformal_field(&pair, &m).unwrap();
            let split = conformal_split(&lie_derivative_coord(&m, &xi), &m);
            assert!(split.is_conformal() && !split.is_killing());
            assert_eq!(split.rho, rho);
        }
    }
}

#[test]
fn scaled_pair_scales_potential() {
    let rh2 = rh(2);
    let pair = busemann_pair(BusemannKind::BoundaryPoint, &[rat(1, 3)], &rh2).unwrap();
    let scaled = BusemannPair { e: pair.e.scale(&rat(5, 2)), omega: pair.omega.clone() };
    let (_, rho) = busemann_conformal_field(&scaled, &rh2).unwrap();
    assert_eq!(rho, pair.e.scale(&rat(5, 2)));
}

#[test]
fn half_space_killing_fields_are_killing() {
    for n in 2..=4 {
        let m = rh(n);
        let ks = half_space_killing_fields(&m).unwrap();
        assert_eq!(ks.len(), n * (n + 1) / 2);
        for k in &ks {
            assert!(lie_derivative_coord(&m, k).is_zero());
        }
    }
}

#[test]
fn linear_combinations_stay_conformal() {
    let m = rh(3);
    let ks = half_space_killing_fields(&m).unwrap();
    let mut total = VectorField::zero(Basis::Coordinate, 3);
    let mut coeff = 1;
    for a in boundary_points(2).into_iter().take(4) {
        let pair = busemann_pair(BusemannKind::BoundaryPoint, &a, &m).unwrap();
        total = total.add(&busemann_conformal_field(&pair, &m).unwrap().0.scale(&RatExpr::int(coeff)));
        coeff += 2;
    }
    for (i, k) in ks.iter().enumerate() {
        total = total.add(&k.scale(&RatExpr::rat(i as i64 - 2, 3)));
    }
    let split = conformal_split(&lie_derivative_coord(&m, &total), &m);
    assert!(split.is_conformal());
}

#[test]
fn busemann_fields_span_beyond_killing_on_rh2() {
    let m = rh(2);
    let ks = half_space_killing_fields(&m).unwrap();
    let mut fields = vec![busemann_conformal_field(&busemann_pair(BusemannKind::Infinity, &[], &m).unwrap(), &m).unwrap().0];
    for a in [0, 1, -1] {
        let pair = busemann_pair(BusemannKind::BoundaryPoint, &[int(a)], &m).unwrap();
        fields.push(busemann_conformal_field(&pair, &m).unwrap().0);
    }
    let points: Vec<Vec<Scalar>> = (1..=6).map(|i| vec![rat(i, 3) - int(1), rat(i + 2, 4)]).collect();
    let r = rank_modulo(&m, &ks, &fields, &points).unwrap();
    assert!(r >= 3, "rank modulo Killing fields is {r}");
}
