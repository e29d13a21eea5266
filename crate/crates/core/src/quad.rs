//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and the periodic
//! trapezoid rule.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (value, err) = whole;
        if err <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        let left = kronrod15(f, a, mid);
        let right = kronrod15(f, mid, b);
        recurse(f, a, mid, 0.5 * tol, left, depth - 1) + recurse(f, mid, b, 0.5 * tol, right, depth - 1)
    }
    let whole = kronrod15(&f, a, b);
    recurse(&f, a, b, tol.max(f64::EPSILON * whole.0.abs()), whole, 40)
}

/// Trapezoid rule on `samples` equally spaced points of one period `[a, a + period)`.
///
/// Spectrally accurate for smooth periodic integrands.
pub fn periodic_trapezoid(f: impl Fn(f64) -> f64, a: f64, period: f64, samples: usize) -> f64 {
    let h = period / samples as f64;
    (0..samples).map(|i| f(a + h * i as f64)).sum::<f64>() * h
}
