use cvflab::cks::{JetLinExpr, JetSymbol};
use cvflab::expr::{binomial, int, rat, Monomial, Poly, RatExpr, Scalar, Var};
use cvflab::harmonic::*;
use cvflab::models::build_chn;
use nalgebra::DMatrix;

fn c(fam: u8, m: usize) -> SeriesUnknown {
    if fam == 1 {
        SeriesUnknown::c1(m)
    } else {
        SeriesUnknown::c2(m)
    }
}

fn jet(u: SeriesUnknown, vars: &[&str]) -> JetLinExpr {
    JetLinExpr::jet(JetSymbol::named(&u.name(), vars))
}

fn s(n: i64, d: i64) -> RatExpr {
    RatExpr::rat(n, d)
}

fn trig(k: usize) -> (i64, i64) {
    ([0, 1, 0, -1][k % 4], [1, 0, -1, 0][k % 4])
}

/// `d^p C1[m] sin(k pi/2) + d^p C2[m] cos(k pi/2)` along `h`.
fn cal(p: usize, m: usize, k: usize, h: &str) -> JetLinExpr {
    let (sn, cs) = trig(k);
    let vars = vec![h; p];
    jet(c(1, m), &vars).mul_expr(&RatExpr::int(sn)).add(&jet(c(2, m), &vars).mul_expr(&RatExpr::int(cs)))
}

fn b(n: usize, k: usize) -> RatExpr {
    RatExpr::constant(binomial(n as i64, k as i64))
}

/// Hand transcription of the exp(k a) block at z^(m-k); `h` is the
/// differentiation direction and `w` the transverse weight (`-y` for x,
/// `+x` for y).
fn closed_form(m: usize, k: usize, h: &str, w: &RatExpr) -> JetLinExpr {
    let (mi, ki) = (m as i64, k as i64);
    let t1 = cal(2, m, k, h).mul_expr(&(&b(m, k) * &s(1, ki)));
    let t2 = cal(1, m + 1, k, h).mul_expr(&(&(w * &b(m + 1, k)) * &s(mi - ki + 1, ki)));
    let t3 = cal(0, m + 2, k, h).mul_expr(&(&(&(w * w) * &s(1, 4)) * &(&b(m + 2, k) * &s((mi - ki + 2) * (mi - ki + 1), ki))));
    let t4 = cal(0, m + 1, k + 1, h).mul_expr(&(&b(m + 1, k + 1) * &s(2 * ki + 1, 2)));
    t1.add(&t2).add(&t3).add(&t4)
}

#[test]
fn series_examples() {
    let (f3, f4) = build_series(1).unwrap();
    let want = jet(c(1, 1), &[]).add(&jet(c(2, 1), &[]).mul_expr(&RatExpr::parse("u^-2*z").unwrap())).add(&jet(SeriesUnknown::plain(4), &[]).mul_expr(&RatExpr::u_pow(-2)));
    assert_eq!(f4, want);
    assert_eq!(f3.coeff(&JetSymbol::named("C3", &[])), RatExpr::u_pow(-2));
    // F3[2] = C1 (z^2 - w^2) - 2 C2 z w, and f3 = F3 / w with w = u^2
    let (f3, _) = build_series(2).unwrap();
    assert_eq!(f3.coeff(&JetSymbol::named("C1_2", &[])), RatExpr::parse("u^-2*z^2 - u^2").unwrap());
    assert_eq!(f3.coeff(&JetSymbol::named("C2_2", &[])), RatExpr::parse("-2*z").unwrap());
    assert!(build_series(0).is_err());
}

fn to_w(e: &RatExpr) -> Poly {
    let w = Var::new("w");
    let p = (e * &RatExpr::u_pow(2)).as_poly().unwrap().clone();
    p.map_monomials(&|m: &Monomial| {
        let k = m.exp(Var::U);
        (k % 2 == 0).then(|| {
            let mut out = m.without(Var::U);
            out.set(w, k / 2);
            (int(1), out)
        })
    })
    .unwrap()
}

#[test]
fn series_components_are_harmonic() {
    let (z, w) = (Var::new("z"), Var::new("w"));
    let (f3, f4) = build_series(6).unwrap();
    for m in 1..=6 {
        for fam in [1, 2] {
            for f in [&f3, &f4] {
                let p = to_w(&f.coeff(&JetSymbol::named(&c(fam, m).name(), &[])));
                assert!(!p.is_zero());
                assert!(p.derive(z).derive(z).add(&p.derive(w).derive(w)).is_zero(), "m={m}");
                // homogeneous of degree m
                assert!(p.terms().all(|(mono, _)| mono.total_degree() == m as i32));
            }
        }
    }
}

#[test]
fn f1_integral_examples() {
    assert_eq!(f1_from_f4(&JetLinExpr::zero()).unwrap(), jet(SeriesUnknown::plain(5), &[]));
    let (_, f4) = build_series(3).unwrap();
    let uf1 = f1_from_f4(&f4).unwrap();
    // exp(k a) terms gain 1/k
    assert_eq!(uf1.coeff(&JetSymbol::named("C1_3", &["x"])), RatExpr::parse("-3*z^2*u^2 + u^6/3").unwrap());
    // the k = 0 term integrates to a
    assert_eq!(uf1.coeff(&JetSymbol::named("C2_2", &["x"])), RatExpr::parse("-z^2*a + u^4/2").unwrap());
    assert_eq!(uf1.coeff(&JetSymbol::named("C4", &["x"])), RatExpr::parse("-a").unwrap());
}

#[test]
fn exponential_blocks_match_closed_form() {
    let m_max = 6;
    for (dir, h, w) in [(Direction::X, "x", RatExpr::parse("-y").unwrap()), (Direction::Y, "y", RatExpr::parse("x").unwrap())] {
        let blocks = residual_blocks_in(&SeriesContext::ch2(dir).unwrap(), m_max).unwrap();
        let mut compared = 0;
        for e in blocks.equations() {
            let BlockKey::Exp(k) = e.key else { continue };
            let k = k as usize;
            let m = e.z_power as usize + k;
            if e.complete {
                assert_eq!(e.expr, closed_form(m, k, h, &w), "{dir:?} k={k} m={m}");
                compared += 1;
            }
        }
        assert!(compared >= 8, "{compared}");
        assert!(blocks.equations().all(|e| !matches!(e.key, BlockKey::Other(..))));
    }
}

#[test]
fn lower_blocks_match_closed_form() {
    let blocks = residual_blocks(6).unwrap();
    for p in 1..=6u32 {
        let e = blocks.get(BlockKey::ExpMinus1, p).unwrap();
        assert_eq!(e.expr, jet(c(2, p as usize), &[]).mul_expr(&s(-1, 2)));
    }
    assert_eq!(blocks.get(BlockKey::ExpMinus1, 0).unwrap().expr, jet(SeriesUnknown::plain(4), &[]).mul_expr(&s(-1, 2)));
    let y = RatExpr::named("y");
    for p in 0..=4usize {
        let m = p + 1;
        let mut want = jet(c(2, m), &["x"]).mul_expr(&(&y * &RatExpr::int(-(m as i64))));
        want = want.add(&jet(c(2, m + 1), &[]).mul_expr(&(&(&y * &y) * &s((m * (m + 1)) as i64, 4))));
        if p >= 1 {
            want = want.add(&jet(c(2, p), &["x", "x"]));
        } else {
            want = want.add(&jet(SeriesUnknown::plain(4), &["x", "x"]));
        }
        let e = blocks.get(BlockKey::ALinear, p as u32).unwrap();
        assert!(e.complete);
        assert_eq!(e.expr, want, "z^{p}");
    }
    let cst = &blocks.get(BlockKey::Constant, 0).unwrap().expr;
    assert_eq!(cst.coeff(&JetSymbol::named("C5", &["x"])), RatExpr::int(-1));
    assert_eq!(cst.coeff(&JetSymbol::named("C5", &["z"])), RatExpr::parse("y/2").unwrap());
    assert_eq!(cst.coeff(&JetSymbol::named("C1_3", &[])), RatExpr::parse("3/2*z^2").unwrap());
}

#[test]
fn k1_m2_block_reduces_to_c1_2_xx() {
    let blocks = residual_blocks(6).unwrap();
    let e = &blocks.get(BlockKey::Exp(1), 1).unwrap().expr;
    let others = |v: Var| (v.name() != "C1_2").then(RatExpr::zero);
    assert!(e.substitute(&others).proportional(&jet(c(1, 2), &["x", "x"])));
    let e = &residual_blocks_in(&SeriesContext::ch2(Direction::Y).unwrap(), 6).unwrap().get(BlockKey::Exp(1), 0).unwrap().expr.clone();
    let keep = |v: Var| (!["C1_1", "C1_2"].contains(&v.name())).then(RatExpr::zero);
    let want = jet(c(1, 1), &["y", "y"]).add(&jet(c(1, 2), &["y"]).mul_expr(&RatExpr::parse("2*x").unwrap()));
    assert!(e.substitute(&keep).proportional(&want));
}

/// The k = 2 display divided by m, with the middle coefficient as printed
/// and as it follows from the general block.
#[test]
fn k2_display_middle_coefficient() {
    let blocks = residual_blocks(6).unwrap();
    let y = RatExpr::named("y");
    for m in 2..=4usize {
        let mi = m as i64;
        let e = &blocks.get(BlockKey::Exp(2), (m - 2) as u32).unwrap().expr;
        let display = |middle: RatExpr| {
            jet(c(2, m), &["x", "x"])
                .mul_expr(&s(-(mi - 1), 4))
                .add(&jet(c(2, m + 1), &["x"]).mul_expr(&(&y * &middle)))
                .add(&jet(c(2, m + 2), &[]).mul_expr(&(&(&y * &y) * &s(-(mi + 2) * (mi + 1) * (mi - 1), 16))))
                .add(&jet(c(1, m + 1), &[]).mul_expr(&s(-(mi + 1) * (mi - 1) * 5, 12)))
        };
        let corrected = display(s((mi + 1) * (mi - 1), 4));
        let printed = display(s(mi + 1, 4));
        assert_eq!(e.ratio_to(&corrected), Some(RatExpr::int(mi)));
        assert_eq!(e.proportional(&printed), m == 2);
    }
}

#[test]
fn blocks_partition_the_residual() {
    for dir in [Direction::X, Direction::Y] {
        let ctx = SeriesContext::ch2(dir).unwrap();
        for m_max in [3, 5] {
            let blocks = residual_blocks_in(&ctx, m_max).unwrap();
            assert_eq!(blocks.resum(ctx.z), residual(&ctx, m_max).unwrap());
        }
    }
}

fn rename_xy(e: &JetLinExpr, from: (&str, &str)) -> JetLinExpr {
    let map = |v: Var| {
        if v.name() == from.0 {
            Var::new("x")
        } else if v.name() == from.1 {
            Var::new("y")
        } else {
            v
        }
    };
    e.map_jets(
        &|s| {
            let names: Vec<&str> = s.var_list().iter().map(|&v| map(v).name()).collect();
            Ok(JetLinExpr::jet(JetSymbol::named(s.func.name(), &names)))
        },
        &|c| Ok(c.rename(&map)),
    )
    .unwrap()
}

#[test]
fn chn_restriction_gives_the_same_blocks() {
    let ch3 = build_chn(3).unwrap();
    for dir in [Direction::X, Direction::Y] {
        let a = residual_blocks_in(&SeriesContext::ch2(dir).unwrap(), 5).unwrap();
        let b = residual_blocks_in(&SeriesContext::new(&ch3, dir).unwrap(), 5).unwrap();
        let ea: Vec<_> = a.equations().collect();
        let eb: Vec<_> = b.equations().collect();
        assert_eq!(ea.len(), eb.len());
        for (x, y) in ea.iter().zip(&eb) {
            assert_eq!((x.key, x.z_power, x.complete), (y.key, y.z_power, y.complete));
            assert_eq!(x.expr, rename_xy(&y.expr, ("x1", "y1")));
        }
    }
}

fn pick(n: i64, d: i64) -> Scalar {
    rat(n, d)
}

#[test]
fn integration_constants_always_exist() {
    for (dir, cname) in [(Direction::X, "C5"), (Direction::Y, "C6")] {
        let blocks = residual_blocks_in(&SeriesContext::ch2(dir).unwrap(), 4).unwrap();
        let cst = blocks.get(BlockKey::Constant, 0).unwrap().expr.clone();
        let vals = ["x*y + 2", "x^2 - y/3", "y^2*x", "7/5"];
        let given = |v: Var| v.name().strip_prefix("C1_").map(|m| RatExpr::parse(vals[m.parse::<usize>().unwrap() - 1]).unwrap());
        let reduced = cst.substitute(&given);
        let r = reduced.free().clone();
        assert!(!r.is_zero());
        let witness = integration_constant_witness(dir, &r).unwrap();
        let done = reduced.substitute(&|v| (v.name() == cname).then(|| witness.clone()));
        assert!(done.is_zero(), "{dir:?}: {done}");
    }
    let _ = pick(1, 1);
}

/// Hand-derived constraints on the surviving `C1[1]`, `C1[2]` once the
/// other unknowns vanish, solved with floating-point rank.
fn oracle_survivor_dim(d: usize) -> usize {
    let monos: Vec<(usize, usize)> = (0..=d).flat_map(|t| (0..=t).map(move |i| (i, t - i))).collect();
    let n = monos.len();
    // polynomial as map (i, j) -> coeff; columns 0..n for C1[1], n..2n for C1[2]
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut push_eq = |terms: &dyn Fn(usize, (usize, usize)) -> Vec<((usize, usize), f64)>| {
        let mut acc: std::collections::BTreeMap<(usize, usize), Vec<f64>> = Default::default();
        for col in 0..2 * n {
            let mono = monos[col % n];
            for (out, val) in terms(col, mono) {
                acc.entry(out).or_insert_with(|| vec![0.0; 2 * n])[col] += val;
            }
        }
        rows.extend(acc.into_values());
    };
    let dxx = |(i, j): (usize, usize)| if i >= 2 { vec![((i - 2, j), (i * (i - 1)) as f64)] } else { vec![] };
    let dyy = |(i, j): (usize, usize)| if j >= 2 { vec![((i, j - 2), (j * (j - 1)) as f64)] } else { vec![] };
    // d_xx C1[1] - 2 y d_x C1[2]
    push_eq(&|col, m| if col < n { dxx(m) } else if m.0 >= 1 { vec![((m.0 - 1, m.1 + 1), -2.0 * m.0 as f64)] } else { vec![] });
    push_eq(&|col, m| if col >= n { dxx(m) } else { vec![] });
    // d_yy C1[1] + 2 x d_y C1[2]
    push_eq(&|col, m| if col < n { dyy(m) } else if m.1 >= 1 { vec![((m.0 + 1, m.1 - 1), 2.0 * m.1 as f64)] } else { vec![] });
    push_eq(&|col, m| if col >= n { dyy(m) } else { vec![] });
    if rows.is_empty() {
        return 2 * n;
    }
    let mat = DMatrix::from_fn(rows.len(), 2 * n, |r, c| rows[r][c]);
    let sv = mat.svd(false, false).singular_values;
    2 * n - sv.iter().filter(|&&v| v > 1e-9).count()
}

#[test]
fn survivor_dimensions_match_oracle() {
    for (d, expected) in [(0, 2), (1, 4), (2, 5), (3, 7)] {
        assert_eq!(oracle_survivor_dim(d), expected);
        let r = solve_truncated(4, d).unwrap();
        assert_eq!(r.nullspace_dim, expected, "D={d}");
        // projections onto C1[1], C1[2] may overlap, the rest vanish
        let low: usize = [c(1, 1), c(1, 2)].iter().map(|u| r.status(*u).unwrap().dim).sum();
        assert!(low >= expected);
        for u in &r.unknowns {
            if !["C1_1", "C1_2"].contains(&u.unknown.as_str()) {
                assert_eq!(u.dim, 0, "{}", u.unknown);
            }
        }
    }
}

#[test]
fn elimination_at_default_order() {
    let r = solve_truncated(6, 2).unwrap();
    assert_eq!(r.status(SeriesUnknown::plain(4)).unwrap().status, Status::Zero);
    for m in 1..=6 {
        assert_eq!(r.status(c(2, m)).unwrap().status, Status::Zero);
    }
    for m in 3..=6 {
        assert_eq!(r.status(c(1, m)).unwrap().status, Status::Zero);
    }
    // C1[1] keeps an x*y term; C1[2] is constant
    assert_eq!(r.status(c(1, 1)).unwrap().basis, ["1", "x", "y", "x*y"]);
    assert_eq!(r.status(c(1, 2)).unwrap().basis, ["1"]);
    assert!(!r.claims_hold());
    let failing: Vec<&str> = r.claims.iter().filter(|c| !c.holds).map(|c| c.claim.as_str()).collect();
    assert_eq!(failing, ["C1[1], C1[2] affine in (x, y)"]);
    let md = r.to_markdown();
    assert!(md.contains("| C4 | Zero | 0 |  |"));
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["unknowns"][0]["status"], "free");
}

#[test]
fn constants_only_at_degree_zero() {
    let r = solve_truncated(4, 0).unwrap();
    assert!(r.claims_hold());
    for u in [c(1, 1), c(1, 2)] {
        assert_eq!(r.status(u).unwrap().basis, ["1"]);
    }
}

#[test]
fn forcing_a_vanishing_coefficient_is_inconsistent() {
    let r = solve_truncated_forced(4, 2, &[(c(1, 3), int(1))]);
    assert!(matches!(r, Err(cvflab::Error::Inconsistent(_))), "{r:?}");
    assert!(solve_truncated_forced(4, 2, &[(c(1, 1), int(1))]).is_ok());
}

#[test]
fn zero_set_grows_with_truncation() {
    let mut prev: Option<(usize, usize, Vec<String>)> = None;
    for m in 4..=6 {
        for d in 2..=3 {
            let r = solve_truncated(m, d).unwrap();
            let zeros: Vec<String> = r.unknowns.iter().filter(|s| s.status == Status::Zero).map(|s| s.unknown.clone()).collect();
            if let Some((pm, pd, pz)) = &prev {
                if *pm <= m && *pd <= d {
                    assert!(pz.iter().all(|z| zeros.contains(z)), "({pm},{pd}) -> ({m},{d})");
                }
            }
            for claim in r.claims.iter().filter(|c| !c.claim.contains("affine")) {
                assert!(claim.holds, "{}", claim.claim);
            }
            prev = Some((m, d, zeros));
        }
    }
}

#[test]
fn reconstructed_f4_is_independent_of_a() {
    let r = solve_truncated(6, 2).unwrap();
    let f4 = f4_reconstruct(&r).unwrap();
    let want = jet(c(1, 1), &[]).add(&jet(c(1, 2), &[]).mul_expr(&RatExpr::parse("2*z").unwrap()));
    assert_eq!(f4, want);
    let ctx = SeriesContext::ch2(Direction::X).unwrap();
    assert!(f4.derive_in(Var::new("a"), &ctx.depends()).is_zero());
    let zero = f4.substitute(&|_| Some(RatExpr::zero()));
    assert!(zero.is_zero());
}
