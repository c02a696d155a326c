//! Dense matrix exponential by Pade approximation with scaling and
//! squaring (degrees 3/5/7/9/13 selected from the 1-norm).

use nalgebra::DMatrix;

use crate::linalg::dense::LuFactor;
use crate::Result;

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17_297_280.0,
            8_648_640.0,
            1_995_840.0,
            277_200.0,
            25_200.0,
            1_512.0,
            56.0,
            1.0,
        ],
        9 => &[
            17_643_225_600.0,
            8_821_612_800.0,
            2_075_673_600.0,
            302_702_400.0,
            30_270_240.0,
            2_162_160.0,
            110_880.0,
            3_960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64_764_752_532_480_000.0,
            32_382_376_266_240_000.0,
            7_771_770_303_897_600.0,
            1_187_353_796_428_800.0,
            129_060_195_264_000.0,
            10_559_470_521_600.0,
            670_442_572_800.0,
            33_522_128_640.0,
            1_323_241_920.0,
            40_840_800.0,
            960_960.0,
            16_380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!(),
    }
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = one_norm(a);
    let mut scaled = a.clone();
    let mut squarings = 0u32;
    let mut degree = 13;
    for &(m, theta) in &THETA {
        if norm <= theta {
            degree = m;
            break;
        }
    }
    if degree == 13 && norm > THETA[4].1 {
        squarings = ((norm / THETA[4].1).log2().ceil()).max(0.0) as u32;
        scaled /= 2f64.powi(squarings as i32);
    }

    let b = pade_coeffs(degree);
    let identity = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;

    // U (odd powers) and V (even powers) of the Pade form.
    let (u, v) = if degree == 13 {
        let a4 = &a2 * &a2;
        let a6 = &a2 * &a4;
        let u_inner = &a6 * (b[13] * &a6 + b[11] * &a4 + b[9] * &a2)
            + b[7] * &a6
            + b[5] * &a4
            + b[3] * &a2
            + b[1] * &identity;
        let u = &scaled * u_inner;
        let v = &a6 * (b[12] * &a6 + b[10] * &a4 + b[8] * &a2)
            + b[6] * &a6
            + b[4] * &a4
            + b[2] * &a2
            + b[0] * &identity;
        (u, v)
    } else {
        let mut even = identity.clone();
        let mut u_sum = b[1] * &identity;
        let mut v_sum = b[0] * &identity;
        let mut k = 2;
        while k <= degree {
            even = &even * &a2;
            v_sum += b[k] * &even;
            if k < degree {
                u_sum += b[k + 1] * &even;
            }
            k += 2;
        }
        (&scaled * u_sum, v_sum)
    };

    // (V - U) F = (V + U).
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut f = LuFactor::new(&lhs)?.solve(&rhs)?;
    for _ in 0..squarings {
        f = &f * &f;
    }
    Ok(f)
}
