use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// half-space in dimension 3, with the conformal Killing operator written out
/// by hand (the conformal class is the flat one) and the hyperbolic Killing
/// operator `d_i xi_j + d_j xi_i - (2/y) xi^y delta_ij`.
pub fn rh3_oracle(killing: bool) -> usize {
    let monos: Vec<[i32; 3]> = (0..=2).flat_map(|t: i32| (0..=t).flat_map(move |i| (0..=t - i).map(move |j| [i, j, t - i - j]))).collect();
    let ncols = 3 * monos.len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rows = Vec::new();
    for _ in 0..25 {
        let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)];
        let val = |m: &[i32; 3]| (0..3).map(|k| p[k].powi(m[k])).product::<f64>();
        let der = |m: &[i32; 3], i: usize| {
            if m[i] == 0 {
                return 0.0;
            }
            let mut d = *m;
            d[i] -= 1;
            m[i] as f64 * val(&d)
        };
        for i in 0..3 {
            for j in i..3 {
                let mut row = vec![0.0; ncols];
                for c in 0..3 {
                    for (t, m) in monos.iter().enumerate() {
                        // xi^c = m
                        let mut e = 0.0;
                        if c == j {
                            e += der(m, i);
                        }
                        if c == i {
                            e += der(m, j);
                        }
                        if i == j {
                            if killing {
                                if c == 2 {
                                    e -= 2.0 / p[2] * val(m);
                                }
                            } else {
                                e -= 2.0 / 3.0 * der(m, c);
                            }
                        }
                        row[c * monos.len() + t] = e;
                    }
                }
                rows.push(row);
            }
        }
    }
    let mat = DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]);
    let sv = mat.svd(false, false).singular_values;
    let top = sv.max();
    ncols - sv.iter().filter(|&&s| s > 1e-9 * top).count()
}
