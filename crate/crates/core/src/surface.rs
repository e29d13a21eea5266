//! Lawson surfaces `τ_{r,k}`, their bipolar surfaces, and the flat-chart
//! metric `f(y)(dx² + dy²)` of the equivariant model surface.
//!
//! Two different quantities are traditionally written α:
//!
//! * the **modulus** `m/n` of the profile (see [`ThetaMap::modulus`]), used by
//!   every elliptic function in this module;
//! * the **orbit-space angle** of the `S¹` quotient of `S⁴`, which lives in
//!   [`crate::verify::OrbitPoint::orbit_alpha`] and has nothing to do with the
//!   modulus.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{complete_e, complete_k, incomplete_f, EllipticModulus, Jacobi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ParityClass {
    /// `rk ≡ 0 (mod 2)`
    EvenRK,
    /// `rk ≡ 1 (mod 4)`
    RK1Mod4,
    /// `rk ≡ 3 (mod 4)`
    RK3Mod4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Topology {
    Torus,
    KleinBottle,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Topology::Torus => "Torus",
            Topology::KleinBottle => "KleinBottle",
        })
    }
}

/// The pair `(r, k)` and the derived profile integers `(n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SurfaceParams {
    pub r: u32,
    pub k: u32,
    pub n: u32,
    pub m: u32,
    pub parity_class: ParityClass,
    pub topology: Topology,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

impl SurfaceParams {
    /// Validates `0 < k < r`, `gcd(r, k) = 1` and fills in `(n, m)`.
    pub fn new(r: i64, k: i64) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidParameters { r, k, reason: reason.to_string() };
        if k <= 0 || k >= r {
            return Err(invalid("need 0 < k < r"));
        }
        if r > u32::MAX as i64 / 2 {
            return Err(invalid("r too large"));
        }
        if gcd(r, k) != 1 {
            return Err(invalid("r and k must be coprime"));
        }
        let product = r * k;
        let (n, m, parity_class) = if product % 2 == 0 {
            (r + k, r - k, ParityClass::EvenRK)
        } else if product % 4 == 1 {
            ((r + k) / 2, (r - k) / 2, ParityClass::RK1Mod4)
        } else {
            ((r + k) / 2, (r - k) / 2, ParityClass::RK3Mod4)
        };
        let topology = match parity_class {
            ParityClass::RK3Mod4 => Topology::KleinBottle,
            _ => Topology::Torus,
        };
        Ok(Self { r: r as u32, k: k as u32, n: n as u32, m: m as u32, parity_class, topology })
    }

    /// Every admissible pair with `r ≤ r_max`, ordered by `r` then `k`.
    pub fn admissible_up_to(r_max: u32) -> Vec<Self> {
        (2..=r_max as i64)
            .flat_map(|r| (1..r).filter_map(move |k| Self::new(r, k).ok()))
            .collect()
    }

    pub fn rk_even(&self) -> bool {
        self.parity_class == ParityClass::EvenRK
    }

    /// Smallest index `i` with `λ_i = 2` predicted by the parity of `rk`.
    pub fn expected_rank(&self) -> usize {
        let r = self.r as usize;
        match self.parity_class {
            ParityClass::EvenRK => 4 * r - 2,
            ParityClass::RK1Mod4 => 2 * r - 2,
            ParityClass::RK3Mod4 => r - 2,
        }
    }

    pub fn rank_formula(&self) -> &'static str {
        match self.parity_class {
            ParityClass::EvenRK => "4r-2",
            ParityClass::RK1Mod4 => "2r-2",
            ParityClass::RK3Mod4 => "r-2",
        }
    }

    /// Profile modulus `m/n`.
    pub fn modulus(&self) -> EllipticModulus {
        EllipticModulus::new(self.m as f64 / self.n as f64).expect("m < n")
    }

    /// Modulus `2√(mn)/(n+m)` of the `v ↦ z` substitution.
    pub fn chart_modulus(&self) -> EllipticModulus {
        let (n, m) = (self.n as f64, self.m as f64);
        EllipticModulus::new(2.0 * (m * n).sqrt() / (n + m)).expect("AM-GM")
    }
}

/// Period `a = (4/n) K(m/n)` of the profile.
pub fn period_a(params: &SurfaceParams) -> f64 {
    4.0 * complete_k(params.modulus()).expect("m < n") / params.n as f64
}

/// Closed-form description of `θ(y)` for one `(n, m)`.
///
/// With modulus `α = m/n` and `u = n·y`:
/// `cos θ = cn(u)/dn(u)`, `sin θ = α'·sn(u)/dn(u)`, `θ' = n·α'/dn(u)`.
/// `θ` is odd, increasing, and `θ(y + a) = θ(y) + 2π`.
#[derive(Debug, Clone)]
pub struct ThetaMap {
    n: f64,
    m: f64,
    jacobi: Jacobi,
    period: f64,
}

/// `θ` together with its first two derivatives at one `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaJet {
    pub cos: f64,
    pub sin: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ThetaMap {
    pub fn new(params: &SurfaceParams) -> Self {
        let jacobi = Jacobi::new(params.modulus()).expect("m < n");
        let n = params.n as f64;
        let period = 4.0 * jacobi.quarter_period() / n;
        Self { n, m: params.m as f64, jacobi, period }
    }

    pub fn modulus(&self) -> EllipticModulus {
        self.jacobi.modulus()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `K(m/n)/n`, the quarter period `a/4`.
    pub fn quarter(&self) -> f64 {
        self.jacobi.quarter_period() / self.n
    }

    pub fn jet(&self, y: f64) -> ThetaJet {
        let t = self.jacobi.eval(self.n * y);
        let modulus = self.jacobi.modulus();
        let (alpha, alpha_p) = (modulus.k(), modulus.k_prime());
        let cos = t.cn / t.dn;
        let sin = alpha_p * t.sn / t.dn;
        let d1 = self.n * alpha_p / t.dn;
        let d2 = self.n * self.n * alpha_p * alpha * alpha * t.sn * t.cn / (t.dn * t.dn);
        ThetaJet { cos, sin, d1, d2 }
    }

    /// `θ(y)`, unwrapped.
    pub fn theta(&self, y: f64) -> f64 {
        let turns = (y / self.period).floor();
        let jet = self.jet(y - turns * self.period);
        let mut base = jet.sin.atan2(jet.cos);
        if base < 0.0 {
            base += 2.0 * PI;
        }
        base + 2.0 * PI * turns
    }

    /// Conformal factor `f(y) = (m² + n²)/2 − m² cos²θ(y)`.
    pub fn metric_f(&self, y: f64) -> f64 {
        let c = self.jet(y).cos;
        0.5 * (self.m * self.m + self.n * self.n) - self.m * self.m * c * c
    }
}

/// `θ(y)` from the Jacobi closed form.
pub fn theta_of_y(y: f64, params: &SurfaceParams) -> f64 {
    ThetaMap::new(params).theta(y)
}

/// `θ(y)` by inverting `y = (1/n)∫₀^θ dθ/√(1 − (m/n)²cos²θ)` with Newton
/// iterations over adaptive quadrature. Independent of the Jacobi functions.
pub fn theta_by_quadrature(y: f64, params: &SurfaceParams) -> f64 {
    let (n, alpha) = (params.n as f64, params.m as f64 / params.n as f64);
    let speed = |t: f64| 1.0 / (n * (1.0 - alpha * alpha * t.cos().powi(2)).sqrt());
    let period = quad::integrate(speed, 0.0, 2.0 * PI, 1e-15);
    let turns = (y / period).floor();
    let target = y - turns * period;
    let mut theta = 2.0 * PI * target / period;
    for _ in 0..50 {
        let residual = quad::integrate(speed, 0.0, theta, 1e-15) - target;
        let step = residual / speed(theta);
        theta -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    theta + 2.0 * PI * turns
}

/// Samples used by [`area_by_quadrature`].
pub const AREA_SAMPLES: usize = 4096;

/// `2π∫₀^a f(y) dy` by the periodic trapezoid rule, halved for a Klein bottle.
pub fn area_by_quadrature(params: &SurfaceParams) -> f64 {
    let map = ThetaMap::new(params);
    let torus = 2.0 * PI * quad::periodic_trapezoid(|y| map.metric_f(y), 0.0, map.period(), AREA_SAMPLES);
    torus / topology_divisor(params)
}

/// `4π(n+m)E(2√(mn)/(n+m))`, halved for a Klein bottle.
pub fn area_closed_form(params: &SurfaceParams) -> f64 {
    let e = complete_e(params.chart_modulus()).expect("modulus below one");
    4.0 * PI * (params.n + params.m) as f64 * e / topology_divisor(params)
}

/// The same area written with modulus `m/n`: `4πn[((m/n)² − 1)K + 2E]`, halved for a Klein bottle.
pub fn area_closed_form_profile_modulus(params: &SurfaceParams) -> f64 {
    let modulus = params.modulus();
    let (k, e) = (complete_k(modulus).expect("m < n"), complete_e(modulus).expect("m < n"));
    let alpha = modulus.k();
    4.0 * PI * params.n as f64 * ((alpha * alpha - 1.0) * k + 2.0 * e) / topology_divisor(params)
}

fn topology_divisor(params: &SurfaceParams) -> f64 {
    match params.topology {
        Topology::Torus => 1.0,
        Topology::KleinBottle => 2.0,
    }
}

/// One sample of the conformal factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSample {
    pub y: f64,
    pub f: f64,
}

pub fn metric_f(y: f64, params: &SurfaceParams) -> MetricSample {
    MetricSample { y, f: ThetaMap::new(params).metric_f(y) }
}

/// The Lawson immersion `I(u, v)` of `τ_{r,k}` into `S³`.
pub fn lawson_i(u: f64, v: f64, r: u32, k: u32) -> [f64; 4] {
    let (r, k) = (r as f64, k as f64);
    let (sv, cv) = v.sin_cos();
    [(r * u).cos() * cv, (r * u).sin() * cv, (k * u).cos() * sv, (k * u).sin() * sv]
}

/// Unit normal `I*` of `τ_{r,k}` tangent to `S³`.
pub fn lawson_normal(u: f64, v: f64, r: u32, k: u32) -> [f64; 4] {
    let (r, k) = (r as f64, k as f64);
    let (sv, cv) = v.sin_cos();
    let norm = (r * r * cv * cv + k * k * sv * sv).sqrt();
    [
        k * (r * u).sin() * sv / norm,
        -k * (r * u).cos() * sv / norm,
        -r * (k * u).sin() * cv / norm,
        r * (k * u).cos() * cv / norm,
    ]
}

/// Plücker coordinates of `I ∧ I*`, ordered `(12, 34, 13, 24, 23, 14)`.
pub fn lawson_wedge(u: f64, v: f64, r: u32, k: u32) -> [f64; 6] {
    let x = lawson_i(u, v, r, k);
    let y = lawson_normal(u, v, r, k);
    let w = |i: usize, j: usize| x[i] * y[j] - x[j] * y[i];
    [w(0, 1), w(2, 3), w(0, 2), w(1, 3), w(1, 2), w(0, 3)]
}

/// The orthogonal map that pairs consecutive coordinates: `(a, b) ↦ ((a+b), (b−a))/√2`.
pub fn rotate_pairs(w: [f64; 6]) -> [f64; 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        s * (w[0] + w[1]),
        s * (w[1] - w[0]),
        s * (w[2] + w[3]),
        s * (w[3] - w[2]),
        s * (w[4] + w[5]),
        s * (w[5] - w[4]),
    ]
}

/// Explicit parametrization of the rotated bipolar surface in terms of `(r, k)`.
pub fn taucie(u: f64, v: f64, r: u32, k: u32) -> [f64; 6] {
    let (rf, kf) = (r as f64, k as f64);
    let (sum, diff) = (rf + kf, rf - kf);
    let (sv, cv) = v.sin_cos();
    let scale = 1.0 / (8f64.sqrt() * (rf * rf * cv * cv + kf * kf * sv * sv).sqrt());
    let (s2, c2) = (2.0 * v).sin_cos();
    [
        scale * diff * s2,
        scale * sum * s2,
        scale * (diff + sum * c2) * (diff * u).sin(),
        scale * (sum + diff * c2) * (sum * u).sin(),
        scale * (sum + diff * c2) * (sum * u).cos(),
        scale * (diff + sum * c2) * (diff * u).cos(),
    ]
}

/// Explicit parametrization for odd `rk` in terms of `n = (r+k)/2`, `m = (r−k)/2`.
pub fn parambip(u: f64, v: f64, n: u32, m: u32) -> [f64; 6] {
    let (n, m) = (n as f64, m as f64);
    let sv = v.sin();
    let scale = 1.0 / (2f64.sqrt() * ((n + m).powi(2) - 4.0 * m * n * sv * sv).sqrt());
    let (s2, c2) = (2.0 * v).sin_cos();
    [
        scale * m * s2,
        scale * n * s2,
        scale * (m + n * c2) * (2.0 * m * u).sin(),
        scale * (n + m * c2) * (2.0 * n * u).sin(),
        scale * (n + m * c2) * (2.0 * n * u).cos(),
        scale * (m + n * c2) * (2.0 * m * u).cos(),
    ]
}

/// Orthonormal basis of the complement of the excluded direction
/// `(r+k, k−r, 0, 0, 0, 0)` in `R⁶`.
///
/// The first vector is `(r−k, r+k, 0, 0, 0, 0)/‖·‖`, the other four are the
/// coordinate vectors `e₃ … e₆`. Immersion coordinates are the components in
/// this basis, in this order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementBasis {
    pub excluded: [f64; 6],
    pub basis: [[f64; 6]; 5],
}

impl ComplementBasis {
    pub fn new(r: u32, k: u32) -> Self {
        let (rf, kf) = (r as f64, k as f64);
        let norm = ((rf + kf).powi(2) + (rf - kf).powi(2)).sqrt();
        let excluded = [(rf + kf) / norm, (kf - rf) / norm, 0.0, 0.0, 0.0, 0.0];
        let mut basis = [[0.0; 6]; 5];
        basis[0] = [(rf - kf) / norm, (rf + kf) / norm, 0.0, 0.0, 0.0, 0.0];
        for (i, row) in basis.iter_mut().enumerate().skip(1) {
            row[i + 1] = 1.0;
        }
        Self { excluded, basis }
    }

    pub fn project(&self, w: &[f64; 6]) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (o, b) in out.iter_mut().zip(&self.basis) {
            *o = dot(b, w);
        }
        out
    }
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point of the unit sphere `S⁴ ⊂ R⁵`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImmersionPoint5 {
    pub coords: [f64; 5],
}

impl ImmersionPoint5 {
    pub fn norm(&self) -> f64 {
        dot(&self.coords, &self.coords).sqrt()
    }
}

/// `A ∘ (I ∧ I*)` expressed in the [`ComplementBasis`] of `(r, k)`.
pub fn bipolar_immersion(u: f64, v: f64, params: &SurfaceParams) -> ImmersionPoint5 {
    let w = rotate_pairs(lawson_wedge(u, v, params.r, params.k));
    let basis = ComplementBasis::new(params.r, params.k);
    debug_assert!(dot(&basis.excluded, &w).abs() < 1e-12);
    ImmersionPoint5 { coords: basis.project(&w) }
}

/// Component of `A ∘ (I ∧ I*)` along the excluded direction; zero in exact arithmetic.
pub fn excluded_component(u: f64, v: f64, params: &SurfaceParams) -> f64 {
    let w = rotate_pairs(lawson_wedge(u, v, params.r, params.k));
    dot(&ComplementBasis::new(params.r, params.k).excluded, &w)
}

/// Diagonal metric coefficients `E du² + G dv²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalMetric {
    pub du2: f64,
    pub dv2: f64,
}

fn bipolar_weight(n: f64, m: f64, v: f64) -> (f64, f64) {
    let s = v.sin();
    let q = (n + m).powi(2) - 4.0 * m * n * s * s;
    let conformal = (q * q + (n * n - m * m).powi(2)) / q;
    (conformal, q)
}

/// Metric of the bipolar surface for even `rk`, with `n = r+k`, `m = r−k`.
pub fn gmetric(n: u32, m: u32, v: f64) -> DiagonalMetric {
    let (w, q) = bipolar_weight(n as f64, m as f64, v);
    DiagonalMetric { du2: w / 4.0, dv2: w / q }
}

/// Metric of the bipolar surface for odd `rk`, with `n = (r+k)/2`, `m = (r−k)/2`.
pub fn metric2(n: u32, m: u32, v: f64) -> DiagonalMetric {
    let (w, q) = bipolar_weight(n as f64, m as f64, v);
    DiagonalMetric { du2: w, dv2: w / q }
}

/// Metric of [`taucie`] in its `(u, v)` chart, via the formula matching the parity of `rk`.
pub fn bipolar_metric(_u: f64, v: f64, params: &SurfaceParams) -> DiagonalMetric {
    if params.rk_even() {
        gmetric(params.n, params.m, v)
    } else {
        metric2(params.n, params.m, v)
    }
}

/// First fundamental form `[E, F, G]` of a parametrized surface by central
/// differences (step `1e-5`) with one Richardson extrapolation.
pub fn induced_metric<const D: usize>(surface: impl Fn(f64, f64) -> [f64; D], u: f64, v: f64) -> [f64; 3] {
    let partials = |h: f64| {
        let mut du = [0.0; D];
        let mut dv = [0.0; D];
        let (up, um) = (surface(u + h, v), surface(u - h, v));
        let (vp, vm) = (surface(u, v + h), surface(u, v - h));
        for i in 0..D {
            du[i] = (up[i] - um[i]) / (2.0 * h);
            dv[i] = (vp[i] - vm[i]) / (2.0 * h);
        }
        (du, dv)
    };
    let h = 1e-5;
    let (du1, dv1) = partials(h);
    let (du2, dv2) = partials(h / 2.0);
    let mut du = [0.0; D];
    let mut dv = [0.0; D];
    for i in 0..D {
        du[i] = (4.0 * du2[i] - du1[i]) / 3.0;
        dv[i] = (4.0 * dv2[i] - dv1[i]) / 3.0;
    }
    [dot(&du, &du), dot(&du, &dv), dot(&dv, &dv)]
}

/// Coordinate changes relating the bipolar chart `(u, v)` to the flat chart `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HTransform {
    /// `(u, v) ↦ (u, z)`, `z = (1/(n+m)) F(v, 2√(mn)/(n+m))`.
    H1,
    /// Inverse of `H1`, through the Jacobi amplitude.
    H1Inverse,
    /// `(u, z) ↦ (u + π/2, a/4 − z)`.
    H2,
    /// `(u, z) ↦ (u, 2z + K(m/n)/n)`.
    H3,
    /// `(u, z) ↦ (2u, 2z + K(m/n)/n)`.
    H3Prime,
}

/// Cached moduli for the coordinate changes of one surface.
#[derive(Debug, Clone)]
pub struct Charts {
    params: SurfaceParams,
    chart_jacobi: Jacobi,
    theta: ThetaMap,
}

impl Charts {
    pub fn new(params: &SurfaceParams) -> Self {
        Self {
            params: *params,
            chart_jacobi: Jacobi::new(params.chart_modulus()).expect("k < 1"),
            theta: ThetaMap::new(params),
        }
    }

    pub fn theta_map(&self) -> &ThetaMap {
        &self.theta
    }

    fn sum(&self) -> f64 {
        (self.params.n + self.params.m) as f64
    }

    pub fn apply(&self, (a, b): (f64, f64), which: HTransform) -> (f64, f64) {
        let quarter = self.theta.quarter();
        match which {
            HTransform::H1 => {
                let f = incomplete_f(b, self.chart_jacobi.modulus()).expect("k < 1");
                (a, f / self.sum())
            }
            HTransform::H1Inverse => (a, self.chart_jacobi.eval(self.sum() * b).am),
            HTransform::H2 => (a + FRAC_PI_2, quarter - b),
            HTransform::H3 => (a, 2.0 * b + quarter),
            HTransform::H3Prime => (2.0 * a, 2.0 * b + quarter),
        }
    }

    /// `dz/dv` of `H1`.
    pub fn h1_slope(&self, v: f64) -> f64 {
        let k = self.chart_jacobi.modulus().k();
        1.0 / (self.sum() * (1.0 - k * k * v.sin().powi(2)).sqrt())
    }

    /// The flat-chart metric `f(y)(dx² + dy²)` pulled back to `(u, v)` through
    /// `H3 ∘ H1` (even `rk`) or `H3′ ∘ H1` (odd `rk`), by the chain rule.
    pub fn pullback(&self, u: f64, v: f64) -> DiagonalMetric {
        let (_, z) = self.apply((u, v), HTransform::H1);
        let (x_scale, map) = if self.params.rk_even() { (1.0, HTransform::H3) } else { (2.0, HTransform::H3Prime) };
        let (_, y) = self.apply((u, z), map);
        let f = self.theta.metric_f(y);
        let dy_dv = 2.0 * self.h1_slope(v);
        DiagonalMetric { du2: f * x_scale * x_scale, dv2: f * dy_dv * dy_dv }
    }

    /// `H1⁻¹ ∘ H2 ∘ H1`, the extra deck transformation of the Klein bottle case.
    pub fn klein_generator(&self, u: f64, v: f64) -> (f64, f64) {
        let p = self.apply((u, v), HTransform::H1);
        let p = self.apply(p, HTransform::H2);
        self.apply(p, HTransform::H1Inverse)
    }
}

/// Applies one of the `H` coordinate changes.
pub fn h_transform(point: (f64, f64), which: HTransform, params: &SurfaceParams) -> (f64, f64) {
    Charts::new(params).apply(point, which)
}
