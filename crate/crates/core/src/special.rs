//! Elliptic special functions on the real line.
//!
//! Complete integrals and Jacobi functions are built on the arithmetic–geometric
//! mean. The modulus convention is `k` (not the parameter `m = k²`) throughout.
//!
//! The Weierstrass function is reduced to Jacobi functions through the real
//! roots of `4t³ − g2·t − g3`:
//!
//! * positive discriminant: three real roots ordered `e1 > e2 > e3`, and
//!   `℘(y) = e3 + (e1 − e3) / sn²(√(e1 − e3)·y, k)` with `k² = (e2 − e3)/(e1 − e3)`;
//! * negative discriminant: a single real root `e2`, `H = √(3e2² − g2/4)`, and
//!   `℘(y) = e2 + H·(1 + cn)² / sn²` at argument `2√H·y` with `k² = 1/2 − 3e2/(4H)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const AGM_MAX_LEVELS: usize = 40;

/// Distance to a lattice point below which `weierstrass_p` refuses to evaluate.
pub const POLE_THRESHOLD: f64 = 1e-9;

/// Elliptic modulus `k` with its complement `k' = √(1 − k²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    k: f64,
    k_prime: f64,
}

impl EllipticModulus {
    /// Accepts `0 ≤ k ≤ 1`; `k = 1` is only meaningful for [`complete_e`].
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::Domain { function: "EllipticModulus", value: k });
        }
        Ok(Self { k, k_prime: ((1.0 - k) * (1.0 + k)).sqrt() })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn k_prime(&self) -> f64 {
        self.k_prime
    }
}

/// Complete elliptic integral of the first kind, `K(k) = ∫₀^{π/2} dθ/√(1 − k² sin²θ)`.
pub fn complete_k(modulus: EllipticModulus) -> Result<f64> {
    if modulus.k >= 1.0 {
        return Err(Error::Domain { function: "complete_k", value: modulus.k });
    }
    let (a, _) = agm_with_sum(1.0, modulus.k_prime, modulus.k);
    Ok(PI / (2.0 * a))
}

/// Complete elliptic integral of the second kind, `E(k) = ∫₀^{π/2} √(1 − k² sin²θ) dθ`.
pub fn complete_e(modulus: EllipticModulus) -> Result<f64> {
    if modulus.k >= 1.0 {
        return Ok(1.0);
    }
    let (a, sum) = agm_with_sum(1.0, modulus.k_prime, modulus.k);
    Ok(PI / (2.0 * a) * (1.0 - sum))
}

/// AGM of `(a, b)` together with `Σ 2^{n−1} c_n²`, where `c_0` is supplied.
fn agm_with_sum(mut a: f64, mut b: f64, c0: f64) -> (f64, f64) {
    let mut sum = 0.5 * c0 * c0;
    let mut weight = 0.5;
    for _ in 0..AGM_MAX_LEVELS {
        let c = 0.5 * (a - b);
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        weight *= 2.0;
        sum += weight * c * c;
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    (a, sum)
}

/// Incomplete elliptic integral of the first kind `F(φ, k)` for any real `φ`,
/// extended by `F(φ + π) = F(φ) + 2K`.
pub fn incomplete_f(phi: f64, modulus: EllipticModulus) -> Result<f64> {
    if modulus.k >= 1.0 {
        return Err(Error::Domain { function: "incomplete_f", value: modulus.k });
    }
    let turns = (phi / PI).round();
    let reduced = phi - turns * PI;
    let (s, c) = reduced.sin_cos();
    let k2 = modulus.k * modulus.k;
    let principal = s * carlson_rf(c * c, 1.0 - k2 * s * s, 1.0);
    let quarter = if turns == 0.0 { 0.0 } else { complete_k(modulus)? };
    Ok(principal + 2.0 * turns * quarter)
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    const ERRTOL: f64 = 1e-4;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let mean = (x + y + z) / 3.0;
        let dx = (mean - x) / mean;
        let dy = (mean - y) / mean;
        let dz = (mean - z) / mean;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / mean.sqrt();
        }
    }
}

/// The Jacobi triple `(sn, cn, dn)` plus the amplitude `am`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
    pub am: f64,
}

/// Jacobi elliptic functions for one fixed modulus.
///
/// The descending Landen (AGM) sequence is computed once, so repeated
/// evaluations only pay for the back-substitution.
#[derive(Debug, Clone)]
pub struct Jacobi {
    modulus: EllipticModulus,
    // a_n and c_n/a_n of the AGM sequence; empty when k is negligible.
    a_last: f64,
    ratios: Vec<f64>,
    quarter_period: f64,
}

impl Jacobi {
    pub fn new(modulus: EllipticModulus) -> Result<Self> {
        let quarter_period = complete_k(modulus)?;
        let mut ratios = Vec::new();
        let (mut a, mut b, mut c) = (1.0_f64, modulus.k_prime, modulus.k);
        while c.abs() > f64::EPSILON * a && ratios.len() < AGM_MAX_LEVELS {
            let next_a = 0.5 * (a + b);
            let next_c = 0.5 * (a - b);
            b = (a * b).sqrt();
            a = next_a;
            c = next_c;
            ratios.push(c / a);
        }
        Ok(Self { modulus, a_last: a, ratios, quarter_period })
    }

    pub fn modulus(&self) -> EllipticModulus {
        self.modulus
    }

    /// `K(k)` for this modulus.
    pub fn quarter_period(&self) -> f64 {
        self.quarter_period
    }

    pub fn eval(&self, w: f64) -> JacobiTriple {
        let levels = self.ratios.len();
        if levels == 0 {
            let (sn, cn) = w.sin_cos();
            let k = self.modulus.k;
            return JacobiTriple { sn, cn, dn: (1.0 - k * k * sn * sn).sqrt(), am: w };
        }
        let mut phi = (1u64 << levels) as f64 * self.a_last * w;
        let mut previous = phi;
        for ratio in self.ratios.iter().rev() {
            previous = phi;
            phi = 0.5 * (phi + (ratio * phi.sin()).asin());
        }
        let (sn, cn) = phi.sin_cos();
        // The ratio form loses accuracy as cn → 0, where the square root is well conditioned.
        let dn = if cn.abs() > 0.1 {
            cn / (previous - phi).cos()
        } else {
            let k = self.modulus.k;
            ((1.0 - k * sn) * (1.0 + k * sn)).sqrt()
        };
        JacobiTriple { sn, cn, dn, am: phi }
    }
}

/// One-shot evaluation of `(sn, cn, dn)` at `w`.
pub fn jacobi_sncndn(w: f64, modulus: EllipticModulus) -> Result<(f64, f64, f64)> {
    let t = Jacobi::new(modulus)?.eval(w);
    Ok((t.sn, t.cn, t.dn))
}

/// Jacobi amplitude `am(w, k)`, continuous and increasing in `w`.
pub fn amplitude(w: f64, modulus: EllipticModulus) -> Result<f64> {
    Ok(Jacobi::new(modulus)?.eval(w).am)
}

/// Invariants `(g2, g3)` of a Weierstrass function.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeierstrassInvariants {
    pub g2: f64,
    pub g3: f64,
}

impl WeierstrassInvariants {
    pub fn new(g2: f64, g3: f64) -> Self {
        Self { g2, g3 }
    }

    /// `g2³ − 27·g3²`.
    pub fn discriminant(&self) -> f64 {
        self.g2.powi(3) - 27.0 * self.g3 * self.g3
    }

    /// Real roots of `4t³ − g2·t − g3`, largest first.
    pub fn real_roots(&self) -> Vec<f64> {
        let p = -self.g2 / 4.0;
        let q = -self.g3 / 4.0;
        let mut roots = if self.discriminant() > 0.0 {
            let scale = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * scale)).clamp(-1.0, 1.0);
            let base = arg.acos() / 3.0;
            (0..3).map(|j| scale * (base - 2.0 * PI * j as f64 / 3.0).cos()).collect::<Vec<_>>()
        } else {
            let root_d = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
            vec![(-q / 2.0 + root_d).cbrt() + (-q / 2.0 - root_d).cbrt()]
        };
        for t in roots.iter_mut() {
            for _ in 0..3 {
                let value = 4.0 * *t * *t * *t - self.g2 * *t - self.g3;
                let slope = 12.0 * *t * *t - self.g2;
                if slope != 0.0 {
                    *t -= value / slope;
                }
            }
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }
}

/// `℘` on the real line for fixed invariants.
#[derive(Debug, Clone)]
pub struct Weierstrass {
    invariants: WeierstrassInvariants,
    shape: WpShape,
    jacobi: Jacobi,
    // Multiplier from y to the Jacobi argument and the real pole spacing.
    scale: f64,
    pole_spacing: f64,
}

#[derive(Debug, Clone, Copy)]
enum WpShape {
    ThreeRealRoots { e1: f64, e3: f64 },
    OneRealRoot { e2: f64, h: f64 },
}

impl Weierstrass {
    pub fn new(invariants: WeierstrassInvariants) -> Result<Self> {
        let disc = invariants.discriminant();
        let size = invariants.g2.abs().powi(3).max(27.0 * invariants.g3 * invariants.g3);
        if !disc.is_finite() || disc.abs() <= 1e-14 * size {
            return Err(Error::DegenerateInvariants { g2: invariants.g2, g3: invariants.g3 });
        }
        let roots = invariants.real_roots();
        if disc > 0.0 {
            let (e1, e2, e3) = (roots[0], roots[1], roots[2]);
            let spread = e1 - e3;
            let modulus = EllipticModulus::new(((e2 - e3) / spread).sqrt())?;
            let jacobi = Jacobi::new(modulus)?;
            let scale = spread.sqrt();
            let pole_spacing = 2.0 * jacobi.quarter_period() / scale;
            Ok(Self { invariants, shape: WpShape::ThreeRealRoots { e1, e3 }, jacobi, scale, pole_spacing })
        } else {
            let e2 = roots[0];
            let h = (3.0 * e2 * e2 - invariants.g2 / 4.0).sqrt();
            let modulus = EllipticModulus::new((0.5 - 0.75 * e2 / h).sqrt())?;
            let jacobi = Jacobi::new(modulus)?;
            let scale = 2.0 * h.sqrt();
            let pole_spacing = 4.0 * jacobi.quarter_period() / scale;
            Ok(Self { invariants, shape: WpShape::OneRealRoot { e2, h }, jacobi, scale, pole_spacing })
        }
    }

    pub fn invariants(&self) -> WeierstrassInvariants {
        self.invariants
    }

    /// Spacing of the poles on the real axis (the real period).
    pub fn real_period(&self) -> f64 {
        self.pole_spacing
    }

    /// Distance from `y` to the nearest real lattice point.
    pub fn pole_distance(&self, y: f64) -> f64 {
        let r = y - (y / self.pole_spacing).round() * self.pole_spacing;
        r.abs()
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        let distance = self.pole_distance(y);
        if distance < POLE_THRESHOLD {
            return Err(Error::Pole { y, distance, threshold: POLE_THRESHOLD });
        }
        let t = self.jacobi.eval(self.scale * y);
        Ok(match self.shape {
            WpShape::ThreeRealRoots { e1, e3 } => e3 + (e1 - e3) / (t.sn * t.sn),
            WpShape::OneRealRoot { e2, h } => e2 + h * (1.0 + t.cn) * (1.0 + t.cn) / (t.sn * t.sn),
        })
    }
}

/// One-shot `℘(y; g2, g3)`.
pub fn weierstrass_p(y: f64, invariants: WeierstrassInvariants) -> Result<f64> {
    Weierstrass::new(invariants)?.eval(y)
}
