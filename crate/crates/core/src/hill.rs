//! Periodic spectrum of the Hill equation `z″ + (λf(y) − p²)z = 0`.
//!
//! `f` has period `b = a/2` and is even, so a solution is `a`-periodic exactly
//! when the discriminant `Ψ = z₁(b) + z₂′(b)` equals `±2`. Evenness also gives
//! `z₂′(b) = z₁(b)` for every `λ`, hence `Ψ = ±2` iff `z₂(b) = 0` (odd
//! eigenfunction `z₂`) or `z₁′(b) = 0` (even eigenfunction `z₁`).
//!
//! Eigenvalues are located separately on each of these two parity functions,
//! so a close even/odd pair inside one grid cell is never lost. Sign changes
//! of `Ψ − 2` and `Ψ + 2` are bracketed independently as a cross-check: any
//! root of `Ψ ∓ 2` without a matching parity root is reported as an anomaly.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::ode::{self, OdeOptions};
use crate::surface::{area_closed_form, SurfaceParams, ThetaMap, Topology};

/// Default tolerance of the Floquet integrations.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Accepted range for the Floquet tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-6);
/// Spacing of the λ sampling grid.
pub const GRID_STEP: f64 = 0.01;
/// First grid point, offset so that the integer anchors `0` and `2` fall mid-cell.
pub const GRID_START: f64 = -0.005;
/// Width at which bisection on a parity function stops.
pub const BISECTION_TOL: f64 = 1e-11;
/// Width at which bisection on `Ψ ∓ 2` stops; only used for matching.
pub const CROSS_CHECK_TOL: f64 = 1e-9;
/// A `Ψ ∓ 2` root matches a parity root if they are this close.
pub const MATCH_WINDOW: f64 = 1e-7;
/// Normalized `|z₂(b)|/b` or `|z₁′(b)|·b` below this counts as vanishing.
pub const PARITY_THRESHOLD: f64 = 1e-7;
/// An even and an odd root closer than this form a double root.
pub const DOUBLE_ROOT_WINDOW: f64 = 1e-9;
/// Half-width of the window around `λ = 2` used for multiplicity.
pub const CLUSTER_DELTA: f64 = 1e-6;
/// Upper end of the λ scan when counting eigenvalues below 2.
pub const COUNT_LAMBDA_MAX: f64 = 2.5;
/// Eigenvalues are proven simple below this value.
pub const SIMPLICITY_LIMIT: f64 = 3.0;
/// Multiplicity of `λ = 2` on every surface of the family.
pub const EXPECTED_MULTIPLICITY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "Even",
            Parity::Odd => "Odd",
        })
    }
}

/// `(z₁, z₁′, z₂, z₂′)` at `b/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPeriodValues {
    pub z1: f64,
    pub dz1: f64,
    pub z2: f64,
    pub dz2: f64,
}

/// Transfer matrix over one period `b` of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloquetMatrix {
    pub p: f64,
    pub lambda: f64,
    pub b: f64,
    pub z1_b: f64,
    pub dz1_b: f64,
    pub z2_b: f64,
    pub dz2_b: f64,
    pub half: HalfPeriodValues,
}

impl FloquetMatrix {
    /// Wronskian `z₁z₂′ − z₂z₁′` at `b`; equal to one.
    pub fn determinant(&self) -> f64 {
        self.z1_b * self.dz2_b - self.z2_b * self.dz1_b
    }

    pub fn discriminant(&self) -> f64 {
        self.z1_b + self.dz2_b
    }

    /// Largest defect of the identities expressing the values at `b`
    /// through those at `b/2`, which hold because `f` is even about `b/2`.
    pub fn half_period_residual(&self) -> f64 {
        let h = self.half;
        let cross = h.z1 * h.dz2 + h.z2 * h.dz1;
        [
            self.z1_b - (2.0 * h.z1 * h.dz2 - 1.0),
            self.z1_b - cross,
            self.dz2_b - cross,
            self.z2_b - 2.0 * h.z2 * h.dz2,
            self.dz1_b - 2.0 * h.z1 * h.dz1,
        ]
        .iter()
        .fold(0.0, |acc, d| acc.max(d.abs()))
    }

    /// `|z₂(b)|/b`, vanishing at odd eigenvalues.
    pub fn odd_defect(&self) -> f64 {
        self.z2_b.abs() / self.b
    }

    /// `|z₁′(b)|·b`, vanishing at even eigenvalues.
    pub fn even_defect(&self) -> f64 {
        self.dz1_b.abs() * self.b
    }
}

/// `Ψ = z₁(b) + z₂′(b)`.
pub fn discriminant(fm: &FloquetMatrix) -> f64 {
    fm.discriminant()
}

/// One periodic eigenvalue at fixed `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub gamma: f64,
    /// Position in the Haupt sequence `γ₀ < γ₁ ≤ γ₂ < …`.
    pub index: usize,
    pub parity: Parity,
    pub z2_b: f64,
    pub dz1_b: f64,
    pub psi: f64,
    pub wronskian: f64,
}

/// Periodic eigenvalues below a cutoff at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralLine {
    pub p: f64,
    pub lambda_max: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    /// Eigenvalues carrying both an even and an odd eigenfunction.
    pub double_roots: Vec<f64>,
    pub anomalies: Vec<String>,
}

impl SpectralLine {
    pub fn gamma(&self, index: usize) -> Option<f64> {
        self.eigenvalues.get(index).map(|e| e.gamma)
    }

    /// Double roots and anomalies inside the simplicity window `(0, 3)`.
    pub fn problems_below(&self, limit: f64) -> Vec<String> {
        let mut out: Vec<String> = self
            .double_roots
            .iter()
            .filter(|&&g| g > CLUSTER_DELTA && g < limit)
            .map(|g| format!("double root at {g}"))
            .collect();
        out.extend(self.anomalies.iter().cloned());
        out
    }
}

/// Sampled values of one branch `γᵢ(p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub branch_index: usize,
    pub p_grid: Vec<f64>,
    /// `γᵢ(p)` where it lies in `(0, 3)`.
    pub values: Vec<Option<f64>>,
    /// Differences between consecutive sampled values inside `(0, 3)`.
    pub differences: Vec<f64>,
    pub strictly_increasing: bool,
}

/// One eigenvalue counted on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub p: u32,
    pub index: usize,
    pub gamma: f64,
    pub parity: Parity,
    /// `1` for `p = 0`, `2` for the `cos(px)`/`sin(px)` pair.
    pub weight: usize,
}

/// Surface eigenvalues below and at `λ = 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub topology: Topology,
    /// Nonzero eigenvalues strictly below 2, with multiplicity.
    pub count: usize,
    pub closed_form: usize,
    pub multiplicity: usize,
    pub contributing: Vec<Contribution>,
    pub at_two: Vec<Contribution>,
    #[serde(skip)]
    pub lines: Vec<SpectralLine>,
}

impl CountReport {
    /// Smallest `i` with `λᵢ = 2`, counting `λ₀ = 0`.
    pub fn rank(&self) -> usize {
        self.count + 1
    }
}

/// Rank of the extremal eigenvalue and the supporting numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub params: SurfaceParams,
    pub rank_i: usize,
    pub multiplicity: usize,
    /// `Λᵢ = 2·Area`.
    pub lambda_functional: f64,
    pub residuals: BTreeMap<String, f64>,
}

/// Closed-form count of nonzero eigenvalues below 2.
pub fn closed_form_count(params: &SurfaceParams, topology: Topology) -> usize {
    let sum = (params.n + params.m) as usize;
    match topology {
        Topology::Torus => 2 * sum - 3,
        Topology::KleinBottle => sum - 3,
    }
}

/// Whether the eigenfunction `cos(px)g(y)` descends to the Klein bottle,
/// whose deck map is `(x, y) ↦ (x + π, −y)`.
pub fn klein_admissible(p: u32, parity: Parity) -> bool {
    p.is_multiple_of(2) == (parity == Parity::Even)
}

fn bracket(grid: &[f64], values: &[f64]) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    let mut j = 0;
    while j + 1 < values.len() {
        let (g0, g1) = (values[j], values[j + 1]);
        if g0 == 0.0 {
            out.push((grid[j], grid[j], 0.0, 0.0));
        } else if g0 * g1 < 0.0 {
            out.push((grid[j], grid[j + 1], g0, g1));
        } else if g1 == 0.0 {
            out.push((grid[j + 1], grid[j + 1], 0.0, 0.0));
            j += 1;
        }
        j += 1;
    }
    out
}

fn bisect(g: impl Fn(f64) -> Result<f64>, (mut lo, mut hi, mut glo, _): (f64, f64, f64, f64), width: f64) -> Result<f64> {
    if lo == hi {
        return Ok(lo);
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Hill problem attached to one surface.
#[derive(Debug, Clone)]
pub struct HillProblem {
    params: SurfaceParams,
    map: ThetaMap,
    b: f64,
    tol: f64,
}

impl HillProblem {
    pub fn new(params: &SurfaceParams) -> Self {
        Self::with_tol(params, DEFAULT_TOL).expect("default tolerance is in range")
    }

    pub fn with_tol(params: &SurfaceParams, tol: f64) -> Result<Self> {
        if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
            return Err(Error::Tolerance { value: tol, min: TOL_RANGE.0, max: TOL_RANGE.1 });
        }
        let map = ThetaMap::new(params);
        let b = map.period() / 2.0;
        Ok(Self { params: *params, map, b, tol })
    }

    pub fn params(&self) -> &SurfaceParams {
        &self.params
    }

    /// `b = a/2`, the period of `f`.
    pub fn half_period(&self) -> f64 {
        self.b
    }

    fn integrate(&self, p: f64, lambda: f64, start: [f64; 2], ys: &[f64]) -> Result<Vec<[f64; 2]>> {
        let map = &self.map;
        let p2 = p * p;
        let rhs = |y: f64, z: &[f64; 2]| [z[1], (p2 - lambda * map.metric_f(y)) * z[0]];
        Ok(ode::solve(rhs, 0.0, start, ys, OdeOptions::with_tol(self.tol))?.values)
    }

    pub fn floquet(&self, p: f64, lambda: f64) -> Result<FloquetMatrix> {
        let map = &self.map;
        let p2 = p * p;
        let rhs = |y: f64, z: &[f64; 4]| {
            let q = p2 - lambda * map.metric_f(y);
            [z[1], q * z[0], z[3], q * z[2]]
        };
        let sol = ode::solve(rhs, 0.0, [1.0, 0.0, 0.0, 1.0], &[0.5 * self.b, self.b], OdeOptions::with_tol(self.tol))?;
        let (h, e) = (sol.values[0], sol.values[1]);
        Ok(FloquetMatrix {
            p,
            lambda,
            b: self.b,
            z1_b: e[0],
            dz1_b: e[1],
            z2_b: e[2],
            dz2_b: e[3],
            half: HalfPeriodValues { z1: h[0], dz1: h[1], z2: h[2], dz2: h[3] },
        })
    }

    /// Eigenfunction `z₁` (even) or `z₂` (odd) at an eigenvalue, sampled at `ys`.
    pub fn eigenfunction(&self, p: f64, lambda: f64, parity: Parity, ys: &[f64]) -> Result<Vec<f64>> {
        let start = match parity {
            Parity::Even => [1.0, 0.0],
            Parity::Odd => [0.0, 1.0],
        };
        Ok(self.integrate(p, lambda, start, ys)?.into_iter().map(|z| z[0]).collect())
    }

    /// Zeros of an eigenfunction on one full period `[0, a)`, counted as cyclic
    /// sign changes on a staggered grid.
    pub fn eigenfunction_zeros(&self, p: f64, eigenvalue: &Eigenvalue, samples: usize) -> Result<usize> {
        let a = 2.0 * self.b;
        let ys: Vec<f64> = (0..samples).map(|i| a * (i as f64 + 0.5) / samples as f64).collect();
        let z = self.eigenfunction(p, eigenvalue.gamma, eigenvalue.parity, &ys)?;
        Ok((0..samples).filter(|&i| z[i] * z[(i + 1) % samples] < 0.0).count())
    }

    /// All periodic eigenvalues in `(GRID_START, lambda_max]` at this `p`.
    pub fn find_branch(&self, p: f64, lambda_max: f64) -> Result<SpectralLine> {
        let cells = ((lambda_max - GRID_START) / GRID_STEP).ceil() as usize;
        let grid: Vec<f64> = (0..=cells).map(|j| GRID_START + GRID_STEP * j as f64).collect();
        let samples: Vec<FloquetMatrix> = grid.par_iter().map(|&l| self.floquet(p, l)).collect::<Result<_>>()?;

        let channel = |select: fn(&FloquetMatrix) -> f64, width: f64| -> Result<Vec<f64>> {
            let values: Vec<f64> = samples.iter().map(select).collect();
            let roots: Vec<f64> = bracket(&grid, &values)
                .into_par_iter()
                .map(|br| bisect(|l| Ok(select(&self.floquet(p, l)?)), br, width))
                .collect::<Result<_>>()?;
            Ok(roots.into_iter().filter(|&r| r <= lambda_max).collect())
        };
        let odd = channel(|fm| fm.z2_b, BISECTION_TOL)?;
        let even = channel(|fm| fm.dz1_b, BISECTION_TOL)?;
        let periodic = channel(|fm| fm.discriminant() - 2.0, CROSS_CHECK_TOL)?;
        let antiperiodic = channel(|fm| fm.discriminant() + 2.0, CROSS_CHECK_TOL)?;

        let mut anomalies = Vec::new();
        let mut eigenvalues = Vec::new();
        for (roots, parity) in [(&even, Parity::Even), (&odd, Parity::Odd)] {
            for &gamma in roots {
                let fm = self.floquet(p, gamma)?;
                let psi = fm.discriminant();
                let (own, other) = match parity {
                    Parity::Even => (fm.even_defect(), fm.odd_defect()),
                    Parity::Odd => (fm.odd_defect(), fm.even_defect()),
                };
                if own >= other || own >= PARITY_THRESHOLD {
                    anomalies.push(format!("{parity} root at {gamma} not resolved: defects {own:e} vs {other:e}"));
                }
                if (psi * psi - 4.0).abs() > 1e-6 {
                    anomalies.push(format!("root at {gamma} has discriminant {psi}"));
                }
                eigenvalues.push(Eigenvalue {
                    gamma,
                    index: 0,
                    parity,
                    z2_b: fm.z2_b,
                    dz1_b: fm.dz1_b,
                    psi,
                    wronskian: fm.determinant(),
                });
            }
        }
        eigenvalues.sort_by(|x, y| x.gamma.total_cmp(&y.gamma).then(x.parity.cmp(&y.parity)));
        for (i, e) in eigenvalues.iter_mut().enumerate() {
            e.index = i;
        }

        let mut double_roots = Vec::new();
        for &g in &even {
            if odd.iter().any(|&h| (g - h).abs() < DOUBLE_ROOT_WINDOW) {
                double_roots.push(g);
            }
        }
        for (roots, sign) in [(&periodic, "+2"), (&antiperiodic, "-2")] {
            for &r in roots {
                if !eigenvalues.iter().any(|e| (e.gamma - r).abs() < MATCH_WINDOW) {
                    anomalies.push(format!("root of psi{sign} at {r} has no parity match"));
                }
            }
        }
        Ok(SpectralLine { p, lambda_max, eigenvalues, double_roots, anomalies })
    }

    /// Samples branch `γ_index(p)` along `p_grid` and checks it strictly increases
    /// where it lies in `(0, 3)`.
    pub fn branch_monotonicity(&self, branch_index: usize, p_grid: &[f64]) -> Result<MonotoneReport> {
        let values: Vec<Option<f64>> = p_grid
            .par_iter()
            .map(|&p| {
                let line = self.find_branch(p, SIMPLICITY_LIMIT - 0.1)?;
                Ok(line.gamma(branch_index).filter(|&g| g > CLUSTER_DELTA && g < SIMPLICITY_LIMIT))
            })
            .collect::<Result<_>>()?;
        let differences: Vec<f64> = values
            .windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                (Some(x), Some(y)) => Some(y - x),
                _ => None,
            })
            .collect();
        let strictly_increasing = differences.iter().all(|&d| d > 0.0);
        Ok(MonotoneReport { branch_index, p_grid: p_grid.to_vec(), values, differences, strictly_increasing })
    }

    /// Spectral lines for `p = 0, 1, …` until `γ₀(p)` exceeds `2`.
    pub fn lines_up_to_two(&self) -> Result<Vec<SpectralLine>> {
        let first_guess = self.params.n + 1;
        let mut lines: Vec<SpectralLine> =
            (0..=first_guess).into_par_iter().map(|p| self.find_branch(p as f64, COUNT_LAMBDA_MAX)).collect::<Result<_>>()?;
        let above_two = |line: &SpectralLine| line.gamma(0).is_none_or(|g| g > 2.0 + CLUSTER_DELTA);
        while !above_two(lines.last().expect("non-empty")) {
            lines.push(self.find_branch(lines.len() as f64, COUNT_LAMBDA_MAX)?);
        }
        if let Some(cut) = lines.iter().position(above_two) {
            lines.truncate(cut + 1);
        }
        Ok(lines)
    }

    /// Counts surface eigenvalues below 2 and at 2, for the topology of the
    /// surface or for its double cover when `topology_override` is `Torus`.
    pub fn count_below_two(&self, topology_override: Option<Topology>) -> Result<CountReport> {
        let topology = topology_override.unwrap_or(self.params.topology);
        let lines = self.lines_up_to_two()?;
        let mut contributing = Vec::new();
        let mut at_two = Vec::new();
        for line in &lines {
            if let Some(problem) = line.problems_below(SIMPLICITY_LIMIT).into_iter().next() {
                let lambda = line.double_roots.first().copied().unwrap_or(f64::NAN);
                return Err(Error::SpectralAnomaly { p: line.p, lambda, reason: problem });
            }
            let p = line.p as u32;
            for e in &line.eigenvalues {
                if topology == Topology::KleinBottle && !klein_admissible(p, e.parity) {
                    continue;
                }
                let c = Contribution { p, index: e.index, gamma: e.gamma, parity: e.parity, weight: if p == 0 { 1 } else { 2 } };
                if (e.gamma - 2.0).abs() <= CLUSTER_DELTA {
                    at_two.push(c);
                } else if e.gamma > CLUSTER_DELTA && e.gamma < 2.0 {
                    contributing.push(c);
                }
            }
        }
        let count = contributing.iter().map(|c| c.weight).sum();
        let multiplicity = at_two.iter().map(|c| c.weight).sum();
        let closed_form = closed_form_count(&self.params, topology);
        let report = CountReport { topology, count, closed_form, multiplicity, contributing, at_two, lines };
        if count != closed_form {
            return Err(Error::CountMismatch { numeric: count, closed_form, dump: dump_lines(&report.lines) });
        }
        Ok(report)
    }

    pub fn extremal_report(&self) -> Result<ExtremalReport> {
        let report = self.count_below_two(None)?;
        let rank_i = report.rank();
        let expected = self.params.expected_rank();
        if rank_i != expected {
            return Err(Error::RankMismatch { r: self.params.r, k: self.params.k, computed: rank_i, expected });
        }
        if report.multiplicity != EXPECTED_MULTIPLICITY {
            return Err(Error::Multiplicity { found: report.multiplicity, expected: EXPECTED_MULTIPLICITY });
        }
        let mut residuals = BTreeMap::new();
        let lines = &report.lines;
        let (n, m) = (self.params.n as usize, self.params.m as usize);
        let anchor = |p: usize, i: usize, target: f64| lines.get(p).and_then(|l| l.gamma(i)).map_or(f64::INFINITY, |g| (g - target).abs());
        residuals.insert("gamma0_at_0".into(), anchor(0, 0, 0.0));
        residuals.insert("gamma2_at_0".into(), anchor(0, 2, 2.0));
        residuals.insert("gamma0_at_n".into(), anchor(n, 0, 2.0));
        residuals.insert("gamma1_at_m".into(), anchor(m, 1, 2.0));
        let wronskian = lines.iter().flat_map(|l| &l.eigenvalues).map(|e| (e.wronskian - 1.0).abs()).fold(0.0, f64::max);
        residuals.insert("wronskian".into(), wronskian);
        Ok(ExtremalReport {
            params: self.params,
            rank_i,
            multiplicity: report.multiplicity,
            lambda_functional: 2.0 * area_closed_form(&self.params),
            residuals,
        })
    }
}

fn dump_lines(lines: &[SpectralLine]) -> String {
    let mut out = String::new();
    for line in lines {
        let gammas: Vec<String> = line.eigenvalues.iter().map(|e| format!("{:.9}{}", e.gamma, &e.parity.to_string()[..1])).collect();
        out.push_str(&format!("p={}: {}\n", line.p, gammas.join(" ")));
    }
    out
}

/// Transfer matrix at `(p, λ)` with tolerance `tol`.
pub fn floquet(p: f64, lambda: f64, params: &SurfaceParams, tol: f64) -> Result<FloquetMatrix> {
    HillProblem::with_tol(params, tol)?.floquet(p, lambda)
}

pub fn find_branch(p: u32, lambda_max: f64, params: &SurfaceParams) -> Result<SpectralLine> {
    HillProblem::new(params).find_branch(p as f64, lambda_max)
}

pub fn branch_monotonicity(params: &SurfaceParams, branch_index: usize, p_grid: &[f64]) -> Result<MonotoneReport> {
    HillProblem::new(params).branch_monotonicity(branch_index, p_grid)
}

pub fn count_below_two(params: &SurfaceParams, topology_override: Option<Topology>) -> Result<CountReport> {
    HillProblem::new(params).count_below_two(topology_override)
}

/// Rank report for `(r, k)`; errors if the rank or multiplicity disagrees with the closed forms.
pub fn extremal_rank(r: i64, k: i64) -> Result<ExtremalReport> {
    HillProblem::new(&SurfaceParams::new(r, k)?).extremal_report()
}

/// CSV with columns `p, branch_index, gamma, parity, z2_b, dz1_b, psi`.
pub fn write_spectrum_csv(lines: &[SpectralLine], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "p,branch_index,gamma,parity,z2_b,dz1_b,psi")?;
    for line in lines {
        for e in &line.eigenvalues {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                line.p,
                e.index,
                fmt_f64(e.gamma),
                e.parity,
                fmt_f64(e.z2_b),
                fmt_f64(e.dz1_b),
                fmt_f64(e.psi)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(r: i64, k: i64) -> SurfaceParams {
        SurfaceParams::new(r, k).unwrap()
    }

    #[test]
    fn zero_potential_limit() {
        let hill = HillProblem::new(&params(3, 1));
        let fm = hill.floquet(0.0, 0.0).unwrap();
        assert!((fm.z1_b - 1.0).abs() < 1e-14);
        assert!((fm.z2_b - hill.half_period()).abs() < 1e-14);
        assert!((discriminant(&fm) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_potential_oracle() {
        // with λ = 0 the solutions are cosh and sinh
        let hill = HillProblem::new(&params(5, 2));
        let b = hill.half_period();
        let fm = hill.floquet(1.7, 0.0).unwrap();
        assert!((fm.z1_b - (1.7 * b).cosh()).abs() < 1e-11);
        assert!((fm.z2_b - (1.7 * b).sinh() / 1.7).abs() < 1e-11);
    }

    #[test]
    fn wronskian_and_half_period() {
        let hill = HillProblem::new(&params(2, 1));
        for i in 0..20 {
            let p = 0.37 * i as f64;
            let lambda = 3.1 - 0.29 * i as f64;
            let fm = hill.floquet(p, lambda).unwrap();
            assert!((fm.determinant() - 1.0).abs() < 1e-10 * fm.z1_b.abs().max(1.0).powi(2));
            assert!(fm.half_period_residual() < 1e-9 * fm.z1_b.abs().max(1.0));
            assert!((fm.dz2_b - fm.z1_b).abs() < 1e-9 * fm.z1_b.abs().max(1.0));
        }
    }

    #[test]
    fn anchors_at_two() {
        for p in [params(3, 1), params(2, 1), params(5, 1), params(4, 1)] {
            let hill = HillProblem::new(&p);
            let (n, m) = (p.n as f64, p.m as f64);
            let psi = hill.floquet(n, 2.0).unwrap().discriminant();
            assert!((psi * psi - 4.0).abs() < 1e-8);
            let psi = hill.floquet(m, 2.0).unwrap().discriminant();
            assert!((psi * psi - 4.0).abs() < 1e-8);
            let line0 = hill.find_branch(0.0, 2.5).unwrap();
            assert!(line0.gamma(0).unwrap().abs() < 1e-7);
            assert!((line0.gamma(2).unwrap() - 2.0).abs() < 1e-7);
            assert_eq!(line0.eigenvalues[0].parity, Parity::Even);
            assert_eq!(line0.eigenvalues[2].parity, Parity::Even);
            let line_n = hill.find_branch(n, 2.5).unwrap();
            assert!((line_n.gamma(0).unwrap() - 2.0).abs() < 1e-7);
            let line_m = hill.find_branch(m, 2.5).unwrap();
            assert!((line_m.gamma(1).unwrap() - 2.0).abs() < 1e-7);
            assert_eq!(line_m.eigenvalues[1].parity, Parity::Odd);
        }
    }

    #[test]
    fn gamma1_is_odd_up_to_m() {
        let hill = HillProblem::new(&params(7, 2));
        for i in 0..=10 {
            let p = 0.5 * i as f64;
            let line = hill.find_branch(p, 2.9).unwrap();
            assert_eq!(line.eigenvalues[1].parity, Parity::Odd, "p={p}");
            assert!(line.anomalies.is_empty());
        }
    }

    #[test]
    fn eigenfunction_zero_counts() {
        let hill = HillProblem::new(&params(3, 1));
        let line = hill.find_branch(0.0, 2.9).unwrap();
        assert_eq!(hill.eigenfunction_zeros(0.0, &line.eigenvalues[0], 512).unwrap(), 0);
        assert_eq!(hill.eigenfunction_zeros(0.0, &line.eigenvalues[1], 512).unwrap(), 2);
        assert_eq!(hill.eigenfunction_zeros(0.0, &line.eigenvalues[2], 512).unwrap(), 2);
    }

    #[test]
    fn monotone_branch() {
        let p = params(3, 1);
        let grid: Vec<f64> = (0..=6).map(|i| 0.5 + 0.25 * i as f64).collect();
        let report = branch_monotonicity(&p, 0, &grid).unwrap();
        assert!(report.strictly_increasing);
        assert_eq!(report.differences.len(), grid.len() - 1);
    }

    #[test]
    fn klein_and_double_cover() {
        let p = params(3, 1);
        let klein = count_below_two(&p, None).unwrap();
        assert_eq!((klein.rank(), klein.multiplicity), (1, 5));
        let cover = count_below_two(&p, Some(Topology::Torus)).unwrap();
        assert_eq!((cover.rank(), cover.multiplicity), (4, 5));
        assert_eq!(extremal_rank(5, 3).unwrap().rank_i, 3);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(extremal_rank(2, 1).unwrap().rank_i, 6);
        assert_eq!(extremal_rank(5, 1).unwrap().rank_i, 8);
        assert!(matches!(extremal_rank(4, 2), Err(Error::InvalidParameters { .. })));
    }

    #[test]
    fn bracket_handles_exact_zeros() {
        let grid = [0.0, 1.0, 2.0, 3.0];
        let found = bracket(&grid, &[1.0, 0.0, -1.0, -2.0]);
        assert_eq!(found, vec![(1.0, 1.0, 0.0, 0.0)]);
        let found = bracket(&grid, &[1.0, -1.0, -1.0, 2.0]);
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn spectrum_csv_columns() {
        let lines = vec![find_branch(0, 2.5, &params(3, 1)).unwrap()];
        let mut buf = Vec::new();
        write_spectrum_csv(&lines, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rows = text.lines();
        assert_eq!(rows.next().unwrap(), "p,branch_index,gamma,parity,z2_b,dz1_b,psi");
        assert!(rows.next().unwrap().starts_with("0,0,"));
    }
}
