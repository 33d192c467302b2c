//! 4x4 integer core transform with a single scalar quantizer.
//!
//! The forward path is the H.264 butterfly `Y = C·X·Cᵀ` with
//! `C = [[1,1,1,1],[2,1,-1,-2],[1,-1,-1,1],[1,-2,2,-1]]`; every output
//! coefficient is then divided by `qstep(qp)` and rounded half away from
//! zero. The inverse scales levels back by `qstep(qp)` and applies the exact
//! inverse `X = Cᵀ·D⁻¹·Y·D⁻¹·C` with `D = diag(4, 10, 4, 10)`, rounding the
//! result to integers.

/// Quantizer step size: doubles every 6 QP, 1.0 at QP 4.
#[inline]
pub fn qstep(qp: u8) -> f64 {
    2f64.powf((f64::from(qp) - 4.0) / 6.0)
}

#[inline]
fn butterfly(a: i32, b: i32, c: i32, d: i32) -> [i32; 4] {
    let s0 = a + d;
    let s1 = b + c;
    let d0 = a - d;
    let d1 = b - c;
    [s0 + s1, 2 * d0 + d1, s0 - s1, d0 - 2 * d1]
}

#[inline]
fn inverse_butterfly(z: [f64; 4]) -> [f64; 4] {
    [
        z[0] + 2.0 * z[1] + z[2] + z[3],
        z[0] + z[1] - z[2] - 2.0 * z[3],
        z[0] - z[1] - z[2] + 2.0 * z[3],
        z[0] - 2.0 * z[1] + z[2] - z[3],
    ]
}

const NORM: [f64; 4] = [4.0, 10.0, 4.0, 10.0];

/// Unquantized integer core transform (raster order in and out).
pub fn forward_core(residual: &[i32; 16]) -> [i32; 16] {
    let mut tmp = [0i32; 16];
    for r in 0..4 {
        let o = butterfly(
            residual[r * 4],
            residual[r * 4 + 1],
            residual[r * 4 + 2],
            residual[r * 4 + 3],
        );
        tmp[r * 4..r * 4 + 4].copy_from_slice(&o);
    }
    let mut out = [0i32; 16];
    for c in 0..4 {
        let o = butterfly(tmp[c], tmp[4 + c], tmp[8 + c], tmp[12 + c]);
        for (r, v) in o.into_iter().enumerate() {
            out[r * 4 + c] = v;
        }
    }
    out
}

pub fn transform_quant(residual: &[i32; 16], qp: u8) -> [i32; 16] {
    let step = qstep(qp);
    let coeffs = forward_core(residual);
    let mut levels = [0i32; 16];
    for (l, c) in levels.iter_mut().zip(coeffs) {
        // f64::round is half-away-from-zero
        *l = (f64::from(c) / step).round() as i32;
    }
    levels
}

pub fn inverse_quant_transform(levels: &[i32; 16], qp: u8) -> [i32; 16] {
    if levels.iter().all(|&l| l == 0) {
        return [0; 16];
    }
    let step = qstep(qp);
    let mut z = [0f64; 16];
    for r in 0..4 {
        for c in 0..4 {
            z[r * 4 + c] = f64::from(levels[r * 4 + c]) * step / (NORM[r] * NORM[c]);
        }
    }
    // columns, then rows
    let mut tmp = [0f64; 16];
    for c in 0..4 {
        let o = inverse_butterfly([z[c], z[4 + c], z[8 + c], z[12 + c]]);
        for (r, v) in o.into_iter().enumerate() {
            tmp[r * 4 + c] = v;
        }
    }
    let mut out = [0i32; 16];
    for r in 0..4 {
        let o = inverse_butterfly([tmp[r * 4], tmp[r * 4 + 1], tmp[r * 4 + 2], tmp[r * 4 + 3]]);
        for (c, v) in o.into_iter().enumerate() {
            out[r * 4 + c] = v.round() as i32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: [[f64; 4]; 4] = [
        [1.0, 1.0, 1.0, 1.0],
        [2.0, 1.0, -1.0, -2.0],
        [1.0, -1.0, -1.0, 1.0],
        [1.0, -2.0, 2.0, -1.0],
    ];

    type M = [[f64; 4]; 4];

    fn mul(a: &M, b: &M) -> M {
        let mut o = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    o[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        o
    }

    fn transpose(a: &M) -> M {
        let mut o = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                o[i][j] = a[j][i];
            }
        }
        o
    }

    // Gauss-Jordan inverse of C, independent of the closed-form D⁻¹ trick.
    fn invert(a: &M) -> M {
        let mut m = *a;
        let mut inv = [[0.0; 4]; 4];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            inv.swap(col, pivot);
            let p = m[col][col];
            for j in 0..4 {
                m[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..4 {
                if r != col {
                    let f = m[r][col];
                    for j in 0..4 {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        inv
    }

    fn to_m(v: &[i32; 16]) -> M {
        let mut o = [[0.0; 4]; 4];
        for i in 0..16 {
            o[i / 4][i % 4] = f64::from(v[i]);
        }
        o
    }

    fn oracle_levels(res: &[i32; 16], qp: u8) -> [i32; 16] {
        let y = mul(&mul(&C, &to_m(res)), &transpose(&C));
        let step = 2f64.powf((qp as f64 - 4.0) / 6.0);
        let mut out = [0; 16];
        for i in 0..16 {
            let v = y[i / 4][i % 4] / step;
            out[i] = (v.signum() * (v.abs() + 0.5).floor()) as i32;
        }
        out
    }

    fn oracle_recon(levels: &[i32; 16], qp: u8) -> [f64; 16] {
        let step = 2f64.powf((qp as f64 - 4.0) / 6.0);
        let mut y = to_m(levels);
        for row in y.iter_mut() {
            for v in row.iter_mut() {
                *v *= step;
            }
        }
        let ci = invert(&C);
        let x = mul(&mul(&ci, &y), &transpose(&ci));
        let mut out = [0.0; 16];
        for i in 0..16 {
            out[i] = x[i / 4][i % 4];
        }
        out
    }

    fn assert_rounds_to(rec: &[i32; 16], exact: &[f64; 16]) {
        for (r, e) in rec.iter().zip(exact) {
            assert!((f64::from(*r) - e).abs() <= 0.5 + 1e-9, "{r} vs {e}");
        }
    }

    #[test]
    fn zero_residual_round_trip() {
        let z = [0; 16];
        assert_eq!(transform_quant(&z, 28), [0; 16]);
        assert_eq!(inverse_quant_transform(&[0; 16], 28), [0; 16]);
    }

    #[test]
    fn uniform_eight_at_qp28_matches_matrix_oracle() {
        let res = [8; 16];
        let levels = transform_quant(&res, 28);
        // DC = 16·8 = 128, step 16
        let mut expect = [0; 16];
        expect[0] = 8;
        assert_eq!(levels, expect);
        assert_eq!(levels, oracle_levels(&res, 28));
        let rec = inverse_quant_transform(&levels, 28);
        assert_eq!(rec, [8; 16]);
        assert_rounds_to(&rec, &oracle_recon(&levels, 28));
    }

    #[test]
    fn qstep_doubles_every_six() {
        assert!((qstep(4) - 1.0).abs() < 1e-15);
        assert!((qstep(28) - 16.0).abs() < 1e-12);
        for qp in 0..46u8 {
            assert!((qstep(qp + 6) / qstep(qp) - 2.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn matches_matrix_oracle(res in proptest::array::uniform16(-255i32..=255), qp in 0u8..=51) {
            let levels = transform_quant(&res, qp);
            prop_assert_eq!(levels, oracle_levels(&res, qp));
            assert_rounds_to(&inverse_quant_transform(&levels, qp), &oracle_recon(&levels, qp));
        }

        #[test]
        fn round_trip_error_bounded(res in proptest::array::uniform16(-255i32..=255), qp in 2u8..=51) {
            let rec = inverse_quant_transform(&transform_quant(&res, qp), qp);
            let bound = qstep(qp);
            for (a, b) in res.iter().zip(rec) {
                prop_assert!(f64::from((a - b).abs()) <= bound);
            }
        }
    }
}
