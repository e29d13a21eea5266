//! Residual checks tying the pieces together: the immersion is minimal and
//! isometric to the bipolar surface, the area formula holds, the profile is a
//! geodesic of the orbit space, and the rank matches the parity rule.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hill::{HillProblem, EXPECTED_MULTIPLICITY};
use crate::phi::{self, PhiState, ThetaProfile, WeierstrassProfile};
use crate::special::Jacobi;
use crate::surface::{self, bipolar_metric, Charts, SurfaceParams, Topology};

/// Outcome of one residual check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip)]
    pub context: String,
}

impl CheckResult {
    pub fn new(name: &str, residual: f64, threshold: f64, context: impl Into<String>) -> Self {
        // NaN residuals fail
        let passed = residual < threshold;
        Self { name: name.to_string(), residual, threshold, passed, context: context.into() }
    }
}

/// Pass thresholds for every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub sphere: f64,
    pub conformality: f64,
    pub takahashi: f64,
    pub first_integrals: f64,
    pub periodicity: f64,
    pub profile_agreement: f64,
    pub isometry: f64,
    pub bridging: f64,
    pub klein_invariance: f64,
    pub area_relative: f64,
    pub geodesic: f64,
    pub ellipse: f64,
    pub identification: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sphere: 1e-8,
            conformality: 1e-8,
            takahashi: 1e-8,
            first_integrals: 1e-8,
            periodicity: 1e-8,
            profile_agreement: 1e-6,
            isometry: 1e-8,
            bridging: 1e-10,
            klein_invariance: 1e-9,
            area_relative: 1e-9,
            geodesic: 1e-6,
            ellipse: 1e-12,
            identification: 1e-10,
        }
    }
}

impl Thresholds {
    /// Every threshold halved.
    pub fn strict() -> Self {
        let d = Self::default();
        Self {
            sphere: d.sphere / 2.0,
            conformality: d.conformality / 2.0,
            takahashi: d.takahashi / 2.0,
            first_integrals: d.first_integrals / 2.0,
            periodicity: d.periodicity / 2.0,
            profile_agreement: d.profile_agreement / 2.0,
            isometry: d.isometry / 2.0,
            bridging: d.bridging / 2.0,
            klein_invariance: d.klein_invariance / 2.0,
            area_relative: d.area_relative / 2.0,
            geodesic: d.geodesic / 2.0,
            ellipse: d.ellipse / 2.0,
            identification: d.identification / 2.0,
        }
    }
}

/// Grid sizes and tolerances of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub thresholds: Thresholds,
    /// Points in `y` for the immersion residuals.
    pub grid: usize,
    /// Side of the `(u, v)` grid for the isometry check.
    pub isometry_grid: usize,
    /// Interior points of the geodesic check.
    pub orbit_points: usize,
    /// Profile integration tolerance.
    pub phi_tol: f64,
    /// Floquet integration tolerance.
    pub hill_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            grid: 1024,
            isometry_grid: 64,
            orbit_points: 512,
            phi_tol: phi::DEFAULT_TOL,
            hill_tol: crate::hill::DEFAULT_TOL,
        }
    }
}

/// Coordinates of the `S¹` quotient of `S⁴`: `φ₀ = sin ρ`,
/// `φ₁ = cos ρ cos α`, `φ₂ = cos ρ sin α`, and the fibre angle `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub rho: f64,
    pub orbit_alpha: f64,
    pub psi: f64,
}

impl OrbitPoint {
    /// The profile curve lies in the slice `ψ = 0`.
    pub fn from_state(state: &PhiState) -> Self {
        Self { rho: state.phi0.clamp(-1.0, 1.0).asin(), orbit_alpha: state.phi2.atan2(state.phi1), psi: 0.0 }
    }

    pub fn profile_values(&self) -> [f64; 3] {
        let (s, c) = self.rho.sin_cos();
        [s, c * self.orbit_alpha.cos(), c * self.orbit_alpha.sin()]
    }
}

fn y_grid(params: &SurfaceParams, points: usize) -> Vec<f64> {
    let a = surface::period_a(params);
    (0..points).map(|i| a * i as f64 / points as f64).collect()
}

/// ODE profile sampled on `points` equally spaced `y` of one period.
fn ode_states(params: &SurfaceParams, points: usize, tol: f64) -> Result<Vec<(f64, PhiState)>> {
    let ys = y_grid(params, points);
    let (states, _) = phi::integrate_from(params, phi::initial_state(params), &ys, tol)?;
    Ok(ys.into_iter().zip(states).collect())
}

/// `(pⱼ²φ − φ″)/f − 2φ` for the five coordinate functions, from the analytic
/// second derivatives of the `θ` closed form and `f` from the surface model.
pub fn takahashi_check(params: &SurfaceParams, grid_size: usize) -> CheckResult {
    takahashi_with(params, grid_size, Thresholds::default().takahashi)
}

fn takahashi_with(params: &SurfaceParams, grid_size: usize, threshold: f64) -> CheckResult {
    let profile = ThetaProfile::new(params);
    let map = profile.theta_map();
    let freq = [0.0, params.m as f64, params.n as f64];
    let residual = y_grid(params, grid_size)
        .into_iter()
        .map(|y| {
            let (s, second) = profile.state_and_second(y);
            let f = map.metric_f(y);
            let v = s.values();
            // the pairs cos(px)φ, sin(px)φ share the residual of φ
            (0..3).map(|j| ((freq[j] * freq[j] * v[j] - second[j]) / f - 2.0 * v[j]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    CheckResult::new("takahashi", residual, threshold, format!("{grid_size} points, 5 components"))
}

/// Sphere constraint and conformality `Σ(φⱼ′)² = f(y)` along the integrated profile.
pub fn immersion_checks(params: &SurfaceParams, config: &VerifyConfig) -> Result<[CheckResult; 2]> {
    let map = surface::ThetaMap::new(params);
    let states = ode_states(params, config.grid, config.phi_tol)?;
    let sphere = states.iter().map(|(_, s)| s.sphere_residual().abs()).fold(0.0, f64::max);
    let conformal = states
        .iter()
        .map(|(y, s)| {
            let speed: f64 = s.derivatives().iter().map(|d| d * d).sum();
            let f = map.metric_f(*y);
            (speed - f).abs().max((s.conformal_factor(params) - f).abs()) / f
        })
        .fold(0.0, f64::max);
    let context = format!("{} points, integrated profile", config.grid);
    Ok([
        CheckResult::new("sphere", sphere, config.thresholds.sphere, context.clone()),
        CheckResult::new("conformality", conformal, config.thresholds.conformality, context),
    ])
}

/// Drift of `E₁, E₂` and return to the initial state over one period.
pub fn first_integral_checks(params: &SurfaceParams, config: &VerifyConfig) -> Result<[CheckResult; 2]> {
    let profile = phi::integrate_system(params, config.phi_tol)?;
    let (d1, d2) = profile.first_integral_drift();
    let (e1, _) = phi::first_integrals(&profile.states[0], params);
    Ok([
        CheckResult::new("first_integrals", d1.max(d2), config.thresholds.first_integrals, format!("E1={e1}, drifts {d1:e}, {d2:e}")),
        CheckResult::new("periodicity", profile.periodicity_defect(), config.thresholds.periodicity, "state(a) - state(0)"),
    ])
}

/// The integrated, `θ`-based and `℘`-based profiles agree pointwise.
pub fn profile_agreement_check(params: &SurfaceParams, config: &VerifyConfig) -> Result<CheckResult> {
    let closed = ThetaProfile::new(params);
    let wp = WeierstrassProfile::new(params)?;
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (y, s) in ode_states(params, config.grid, config.phi_tol)? {
        let reference = closed.state(y);
        worst = worst.max(s.max_difference(&reference));
        match wp.eval(y) {
            Ok(values) => {
                for (w, t) in values.magnitudes().iter().zip(reference.values()) {
                    worst = worst.max((w - t.abs()).abs());
                }
            }
            Err(Error::Pole { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(CheckResult::new(
        "profile_agreement",
        worst,
        config.thresholds.profile_agreement,
        format!("{} points, {skipped} skipped near poles", config.grid),
    ))
}

/// Relative deviation between the pulled-back flat metric and the bipolar
/// metric on a square `(u, v)` grid, plus the `θ`/`sn` bridging identities.
pub fn isometry_check(params: &SurfaceParams, grid: usize) -> [CheckResult; 2] {
    isometry_with(params, grid, &Thresholds::default())
}

fn isometry_with(params: &SurfaceParams, grid: usize, thresholds: &Thresholds) -> [CheckResult; 2] {
    let charts = Charts::new(params);
    let mut metric: f64 = 0.0;
    for i in 0..grid {
        let u = 2.0 * PI * i as f64 / grid as f64;
        for j in 0..grid {
            let v = -PI + 2.0 * PI * j as f64 / grid as f64;
            let pulled = charts.pullback(u, v);
            let direct = bipolar_metric(u, v, params);
            metric = metric.max(((pulled.du2 - direct.du2) / direct.du2).abs()).max(((pulled.dv2 - direct.dv2) / direct.dv2).abs());
        }
    }
    let (n, m) = (params.n as f64, params.m as f64);
    let map = charts.theta_map();
    let profile = Jacobi::new(params.modulus()).expect("m < n");
    let chart = Jacobi::new(params.chart_modulus()).expect("k < 1");
    let mut bridging: f64 = 0.0;
    for j in 0..grid {
        let v = -PI + 2.0 * PI * j as f64 / grid as f64;
        let (_, z) = charts.apply((0.0, v), surface::HTransform::H1);
        let jet = map.jet(2.0 * z + map.quarter());
        let t = profile.eval(2.0 * n * z);
        bridging = bridging
            .max((jet.cos + t.sn).abs())
            .max((jet.sin - t.cn).abs())
            .max((v.sin() - chart.eval((n + m) * z).sn).abs());
    }
    [
        CheckResult::new("isometry", metric, thresholds.isometry, format!("{grid}x{grid} grid, relative")),
        CheckResult::new("bridging", bridging, thresholds.bridging, "cos/sin theta and sin v against sn, cn"),
    ]
}

/// `H₁⁻¹H₂H₁` leaves the odd-`rk` parametrization unchanged.
pub fn klein_invariance_check(params: &SurfaceParams, grid: usize, threshold: f64) -> CheckResult {
    let charts = Charts::new(params);
    let mut worst: f64 = 0.0;
    for i in 0..grid {
        let u = 2.0 * PI * i as f64 / grid as f64;
        for j in 0..grid {
            let v = -PI + 2.0 * PI * j as f64 / grid as f64;
            let (u2, v2) = charts.klein_generator(u, v);
            let a = surface::parambip(u, v, params.n, params.m);
            let b = surface::parambip(u2, v2, params.n, params.m);
            worst = worst.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
    }
    CheckResult::new("klein_invariance", worst, threshold, format!("{grid}x{grid} grid"))
}

/// Area and the value of the scale-invariant functional at the extremal eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaReport {
    pub area: f64,
    pub closed_form: f64,
    pub relative: f64,
    pub lambda_value: f64,
    pub rank_i: usize,
}

/// Area by quadrature and closed form; errors when they differ by more than
/// `tolerance` relative.
pub fn area_and_lambda(params: &SurfaceParams, tolerance: f64) -> Result<AreaReport> {
    let area = surface::area_by_quadrature(params);
    let closed_form = surface::area_closed_form(params);
    let relative = ((area - closed_form) / closed_form).abs();
    // NaN fails as well
    if relative.is_nan() || relative > tolerance {
        return Err(Error::QuadratureMismatch { what: "area", quadrature: area, closed_form, relative });
    }
    let rank_i = HillProblem::new(params).count_below_two(None)?.rank();
    Ok(AreaReport { area, closed_form, relative, lambda_value: 2.0 * area, rank_i })
}

struct OrbitCurve<'a> {
    profile: &'a ThetaProfile,
}

impl OrbitCurve<'_> {
    fn at(&self, y: f64) -> (f64, f64) {
        let p = OrbitPoint::from_state(&self.profile.state(y));
        (p.rho, p.orbit_alpha)
    }

    /// First and second `y`-derivatives by central differences at `h` and `2h`
    /// combined by one Richardson step. The coarser companion keeps rounding
    /// in the second difference near `ε/h²`.
    fn derivatives(&self, y: f64, h: f64) -> ([f64; 2], [f64; 2]) {
        let diff = |h: f64| {
            let (p, c, m) = (self.at(y + h), self.at(y), self.at(y - h));
            (
                [(p.0 - m.0) / (2.0 * h), (p.1 - m.1) / (2.0 * h)],
                [(p.0 - 2.0 * c.0 + m.0) / (h * h), (p.1 - 2.0 * c.1 + m.1) / (h * h)],
            )
        };
        let (d1a, d2a) = diff(h);
        let (d1b, d2b) = diff(2.0 * h);
        let r = |fine: f64, coarse: f64| (4.0 * fine - coarse) / 3.0;
        ([r(d1a[0], d1b[0]), r(d1a[1], d1b[1])], [r(d2a[0], d2b[0]), r(d2a[1], d2b[1])])
    }
}

/// The profile, as a curve `(ρ(y), α(y))` in the slice `ψ = 0`, is a geodesic
/// of `W(dρ² + cos²ρ dα²)` with `W = cos²ρ(m²cos²α + n²sin²α)`.
///
/// With arclength `s`, `ds/dy = W`, so `W·dρ/ds = ρ′(y)` and the geodesic
/// equations become, after multiplying by `W`,
///
/// * `ρ″ − (W_ρ/2W)(ρ′² + cos²ρ α′²) + cos ρ sin ρ α′² = 0`
/// * `(cos²ρ α′)′ − (W_α/2W)(ρ′² + cos²ρ α′²) = 0`
///
/// Returns the geodesic residual (divided back by `W`), the ellipse residual
/// and the identification residual.
pub fn orbit_space_check(params: &SurfaceParams, points: usize) -> [CheckResult; 3] {
    orbit_with(params, points, &Thresholds::default())
}

fn orbit_with(params: &SurfaceParams, points: usize, thresholds: &Thresholds) -> [CheckResult; 3] {
    let (n2, m2) = ((params.n as f64).powi(2), (params.m as f64).powi(2));
    let profile = ThetaProfile::new(params);
    let curve = OrbitCurve { profile: &profile };
    let a = profile.theta_map().period();
    let h = 1e-4;
    let mut geodesic: f64 = 0.0;
    let mut ellipse: f64 = 0.0;
    let mut identification: f64 = 0.0;
    let mut speed: f64 = 0.0;
    for i in 0..points {
        let y = a * (i as f64 + 0.5) / points as f64;
        let state = profile.state(y);
        let point = OrbitPoint::from_state(&state);
        let back = point.profile_values();
        identification = identification.max(back.iter().zip(state.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        ellipse = ellipse.max(state.ellipse_residual(params).abs());

        let (rho, alpha) = (point.rho, point.orbit_alpha);
        let (d1, d2) = curve.derivatives(y, h);
        let (sr, cr) = rho.sin_cos();
        let (sa, ca) = alpha.sin_cos();
        let q = m2 * ca * ca + n2 * sa * sa;
        let w = cr * cr * q;
        let w_rho = -2.0 * sr * cr * q;
        let w_alpha = 2.0 * cr * cr * sa * ca * (n2 - m2);
        let kinetic = d1[0] * d1[0] + cr * cr * d1[1] * d1[1];
        speed = speed.max((kinetic - w).abs() / w);
        let r1 = d2[0] - w_rho / (2.0 * w) * kinetic + cr * sr * d1[1] * d1[1];
        let r2 = cr * cr * d2[1] - 2.0 * cr * sr * d1[0] * d1[1] - w_alpha / (2.0 * w) * kinetic;
        geodesic = geodesic.max(r1.abs().max(r2.abs()) / w);
    }
    [
        CheckResult::new("orbit_geodesic", geodesic, thresholds.geodesic, format!("{points} points, unit speed defect {speed:e}")),
        CheckResult::new("orbit_ellipse", ellipse, thresholds.ellipse, "2 phi1^2 + 2n^2/(n^2+m^2) phi0^2 = 1"),
        CheckResult::new("orbit_identification", identification, thresholds.identification, "sin rho, cos rho cos alpha, cos rho sin alpha"),
    ]
}

/// Everything known about one surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub params: SurfaceParams,
    pub topology: Topology,
    pub rank_i: usize,
    pub multiplicity: usize,
    pub lambda_value: f64,
    pub checks: Vec<CheckResult>,
}

impl FullReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Runs every check for one surface. Numerical failures are errors; failed
/// checks, including a rank disagreeing with the parity rule, are reported.
pub fn full_report(params: &SurfaceParams, config: &VerifyConfig) -> Result<FullReport> {
    let t = &config.thresholds;
    type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckResult>> + Send + Sync + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|| Ok(vec![takahashi_with(params, config.grid, t.takahashi)])),
        Box::new(|| Ok(immersion_checks(params, config)?.to_vec())),
        Box::new(|| Ok(first_integral_checks(params, config)?.to_vec())),
        Box::new(|| Ok(vec![profile_agreement_check(params, config)?])),
        Box::new(|| Ok(isometry_with(params, config.isometry_grid, t).to_vec())),
        Box::new(|| {
            Ok(match params.topology {
                Topology::KleinBottle => vec![klein_invariance_check(params, config.isometry_grid, t.klein_invariance)],
                Topology::Torus => Vec::new(),
            })
        }),
        Box::new(|| Ok(orbit_with(params, config.orbit_points, t).to_vec())),
        Box::new(|| {
            let area = surface::area_by_quadrature(params);
            let closed = surface::area_closed_form(params);
            Ok(vec![CheckResult::new("area", ((area - closed) / closed).abs(), t.area_relative, format!("quadrature {area}, closed form {closed}"))])
        }),
    ];
    let mut checks: Vec<CheckResult> = jobs.par_iter().map(|job| job()).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();

    let hill = HillProblem::with_tol(params, config.hill_tol)?;
    let count = hill.count_below_two(None)?;
    let rank_i = count.rank();
    let expected = params.expected_rank();
    checks.push(CheckResult::new(
        "rank",
        rank_i.abs_diff(expected) as f64,
        0.5,
        format!("computed {rank_i}, expected {expected} ({})", params.rank_formula()),
    ));
    checks.push(CheckResult::new(
        "multiplicity",
        count.multiplicity.abs_diff(EXPECTED_MULTIPLICITY) as f64,
        0.5,
        format!("{} eigenfunctions at 2", count.multiplicity),
    ));
    Ok(FullReport {
        params: *params,
        topology: params.topology,
        rank_i,
        multiplicity: count.multiplicity,
        lambda_value: 2.0 * surface::area_by_quadrature(params),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(r: i64, k: i64) -> SurfaceParams {
        SurfaceParams::new(r, k).unwrap()
    }

    #[test]
    fn orbit_point_round_trip() {
        let p = params(2, 1);
        let closed = ThetaProfile::new(&p);
        for i in 0..50 {
            let s = closed.state(0.1 * i as f64);
            let o = OrbitPoint::from_state(&s);
            let v = o.profile_values();
            for (x, y) in v.iter().zip(s.values()) {
                assert!((x - y).abs() < 1e-12);
            }
            assert_eq!(o.psi, 0.0);
        }
    }

    #[test]
    fn checks_pass_for_small_pairs() {
        for p in [params(2, 1), params(3, 1)] {
            let report = full_report(&p, &VerifyConfig::default()).unwrap();
            for c in &report.checks {
                assert!(c.passed, "{p:?} {} {} ({})", c.name, c.residual, c.context);
            }
        }
    }

    #[test]
    fn full_report_examples() {
        let report = full_report(&params(3, 1), &VerifyConfig::default()).unwrap();
        assert_eq!((report.rank_i, report.topology), (1, Topology::KleinBottle));
        assert!(report.checks.iter().any(|c| c.name == "klein_invariance"));
        let report = full_report(&params(4, 1), &VerifyConfig::default()).unwrap();
        assert_eq!(report.rank_i, 14);
        assert!(report.passed());
    }

    #[test]
    fn lambda_values() {
        use crate::special::{complete_e, EllipticModulus};
        let e = |k: f64| complete_e(EllipticModulus::new(k).unwrap()).unwrap();
        let r = area_and_lambda(&params(3, 1), 1e-9).unwrap();
        assert!((r.lambda_value - 12.0 * PI * e(2.0 * 2f64.sqrt() / 3.0)).abs() < 1e-9 * r.lambda_value);
        assert_eq!(r.rank_i, 1);
        let r = area_and_lambda(&params(2, 1), 1e-9).unwrap();
        assert!((r.lambda_value - 32.0 * PI * e(3f64.sqrt() / 2.0)).abs() < 1e-9 * r.lambda_value);
        let r = area_and_lambda(&params(5, 3), 1e-9).unwrap();
        assert!((r.lambda_value - 20.0 * PI * e(0.8)).abs() < 1e-9 * r.lambda_value);
        assert_eq!(r.rank_i, 3);
    }

    #[test]
    fn strict_halves() {
        let (d, s) = (Thresholds::default(), Thresholds::strict());
        assert_eq!(s.takahashi * 2.0, d.takahashi);
        assert_eq!(s.geodesic * 2.0, d.geodesic);
    }

    #[test]
    fn report_json_schema() {
        let report = full_report(&params(2, 1), &VerifyConfig::default()).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        for key in ["params", "topology", "rank_i", "multiplicity", "lambda_value", "checks"] {
            assert!(keys.contains(&key), "{key}");
        }
        let check = &json["checks"][0];
        assert_eq!(check.as_object().unwrap().len(), 4);
    }
}
