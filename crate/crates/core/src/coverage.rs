//! Fractional coverage of the exceptional set.
//!
//! Two estimators are provided. The density integral averages `2 eps / rho`
//! over seeds spread uniformly along the sided line parameter. The direct
//! estimator marks every equal-area pixel whose orbit comes within `eps` of a
//! line and reports the covered fraction.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{accumulate, first_hit};
use crate::error::{Error, Result};
use crate::map::{CutParam, Protocol, PwiMap};
use crate::parallel;
use crate::raster::PixelGrid;
use crate::return_plot::bin_of;

const MAX_RETRIES: u32 = 16;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMethod {
    DensityIntegral,
    DirectGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    /// Not clamped: the density method can exceed 1 near degenerate protocols.
    pub phi: f64,
    pub method: CoverageMethod,
    pub protocol: Protocol,
    pub eps: f64,
    /// Seed offset for the density method, 0 for the direct method.
    pub delta: f64,
    pub iterations: u64,
    /// Seed count, or grid resolution for the direct method.
    pub samples: usize,
    /// Seeds that were moved off the equator, or pixels excluded for hitting it.
    pub substituted: u64,
}

fn check(eps: f64, delta: Option<f64>) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d < eps) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, eps), got {d}")));
        }
    }
    Ok(())
}

/// Midpoint of seed `k` out of `seeds` on `[0, 4 pi)`, nudged by `retry`.
fn seed_theta(k: usize, seeds: usize, retry: u32) -> f64 {
    let s = seeds as f64;
    let t = ((k as f64 + 0.5 + retry as f64 * GOLDEN) / s).min(1.0 - f64::EPSILON);
    t * CutParam::PERIOD
}

/// Line counts `(n1, n2)` for the orbit of the seed at `theta`.
///
/// The seed is moved along the line on `BoundaryPoint`; the second element
/// is the number of moves.
fn seed_counts(
    map: &PwiMap,
    k: usize,
    seeds: usize,
    eps: f64,
    delta: f64,
    iterations: u64,
) -> Result<((u64, u64), u32)> {
    let mut last = None;
    for retry in 0..MAX_RETRIES {
        let theta = CutParam::new(seed_theta(k, seeds, retry))?;
        let counts = map
            .param_point(theta, delta)
            .and_then(|p| accumulate(map, p, eps, iterations));
        match counts {
            Ok(c) => return Ok((c, retry)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Per-seed integrand `2 eps / rho` at the seed parameters, in seed order.
pub fn density_integrand(
    prot: Protocol,
    eps: f64,
    delta: f64,
    iterations: u64,
    seeds: usize,
    workers: usize,
) -> Result<(Vec<f64>, u64)> {
    check(eps, Some(delta))?;
    let map = PwiMap::new(prot);
    let per_seed: Vec<Result<((u64, u64), u32)>> = parallel::run(workers, || {
        (0..seeds)
            .into_par_iter()
            .map(|k| seed_counts(&map, k, seeds, eps, delta, iterations))
            .collect()
    })?;
    let mut values = Vec::with_capacity(seeds);
    let mut substituted = 0u64;
    for r in per_seed {
        let ((n1, n2), moved) = r?;
        substituted += moved as u64;
        let rho = (n1 + n2) as f64 / (iterations + 1) as f64;
        values.push(2.0 * eps / rho);
    }
    Ok((values, substituted))
}

/// Density-integral coverage, the mean of `2 eps / rho` over uniformly
/// spaced sided seeds.
pub fn phi_density(
    prot: Protocol,
    eps: f64,
    delta: f64,
    iterations: u64,
    seeds: usize,
    workers: usize,
) -> Result<CoverageEstimate> {
    if seeds < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 seeds, got {seeds}")));
    }
    let (values, substituted) = density_integrand(prot, eps, delta, iterations, seeds, workers)?;
    // sequential sum in seed order keeps the result independent of workers
    let phi = values.iter().sum::<f64>() / seeds as f64;
    Ok(CoverageEstimate {
        phi,
        method: CoverageMethod::DensityIntegral,
        protocol: prot,
        eps,
        delta,
        iterations,
        samples: seeds,
        substituted,
    })
}

/// Direct coverage: fraction of equal-area pixels whose orbit enters the
/// `eps`-fattened lines within `iterations` steps.
pub fn phi_direct(
    prot: Protocol,
    eps: f64,
    iterations: u64,
    resolution: usize,
    workers: usize,
) -> Result<CoverageEstimate> {
    check(eps, None)?;
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 64, got {resolution}"
        )));
    }
    let grid = PixelGrid::new(resolution)?;
    let map = PwiMap::new(prot);
    let cells: Vec<Option<Result<bool>>> = parallel::run(workers, || {
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let p = grid.point(i)?;
                Some(first_hit(&map, p, eps, iterations).map(|h| h.is_some()))
            })
            .collect()
    })?;
    let (mut covered, mut valid, mut excluded) = (0u64, 0u64, 0u64);
    for c in cells.into_iter().flatten() {
        match c {
            Ok(hit) => {
                valid += 1;
                covered += hit as u64;
            }
            Err(Error::BoundaryPoint(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(CoverageEstimate {
        phi: covered as f64 / valid.max(1) as f64,
        method: CoverageMethod::DirectGrid,
        protocol: prot,
        eps,
        delta: 0.0,
        iterations,
        samples: resolution,
        substituted: excluded,
    })
}

/// Area of the closure of the orbit through the seed at `theta`.
///
/// The intersection of the orbit with the lines is estimated as the number
/// of distinct parameter bins (out of `bins`) it visits times the bin width,
/// and multiplied by `eps / rho`.
pub fn orbit_area(
    theta: CutParam,
    prot: Protocol,
    eps: f64,
    delta: f64,
    iterations: u64,
    bins: usize,
) -> Result<f64> {
    check(eps, Some(delta))?;
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
    }
    let map = PwiMap::new(prot);
    let sin_eps = eps.sin();
    let mut visited = vec![false; bins];
    let mut hits = 0u64;
    let mut p = map.param_point(theta, delta)?;
    for _ in 0..=iterations {
        let trace = map.forward(p)?;
        let (h1, h2) = map.hits(&trace, sin_eps);
        hits += h1 as u64 + h2 as u64;
        for c in map.return_bins_sin(&trace, sin_eps).iter() {
            visited[bin_of(c.theta(), bins)] = true;
        }
        p = trace.image;
    }
    let rho = hits as f64 / (iterations + 1) as f64;
    let length = visited.iter().filter(|&&v| v).count() as f64 * CutParam::PERIOD / bins as f64;
    Ok(length * eps / rho)
}

/// Asymptotic area where the two fattened lines overlap.
///
/// `2 eps^2 (|csc a sec a| + |csc b sec b|)`; infinite when an angle is a
/// multiple of a quarter turn.
pub fn overlap_area(prot: Protocol, eps: f64) -> f64 {
    let term = |a: f64| {
        let d = (a.sin() * a.cos()).abs();
        // sin/cos of exact quarter turns are only ~1e-16 in floating point
        if d < 1e-12 {
            f64::INFINITY
        } else {
            1.0 / d
        }
    };
    2.0 * eps * eps * (term(prot.alpha()) + term(prot.beta()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eps: f64,
    pub delta: f64,
    pub iterations: u64,
    pub seeds: usize,
    pub resolution: usize,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            delta: 1e-6,
            iterations: 20_000,
            seeds: 2000,
            resolution: 1024,
            workers: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub phi_direct: Option<f64>,
    pub phi_density: Option<f64>,
    pub substituted_seeds: u64,
    pub wall_ms: u128,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn abs_diff(&self) -> Option<f64> {
        Some((self.phi_direct? - self.phi_density?).abs())
    }
}

/// `n` evenly spaced angles from `lo` to `hi` inclusive, in degrees.
pub fn angle_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![(lo + hi) / 2.0],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn sweep_one(alpha_deg: f64, beta_deg: f64, cfg: &SweepConfig) -> Result<(f64, f64, u64)> {
    let prot = Protocol::from_degrees(alpha_deg, beta_deg)?;
    let direct = phi_direct(prot, cfg.eps, cfg.iterations, cfg.resolution, cfg.workers)?;
    let dens = phi_density(prot, cfg.eps, cfg.delta, cfg.iterations, cfg.seeds, cfg.workers)?;
    Ok((direct.phi, dens.phi, dens.substituted))
}

/// Both estimators on every `(alpha, beta)` pair, row-major in `alphas`.
///
/// A failing protocol is recorded in its row and the sweep continues.
pub fn sweep(alphas: &[f64], betas: &[f64], cfg: &SweepConfig) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(alphas.len() * betas.len());
    for &a in alphas {
        for &b in betas {
            let start = Instant::now();
            let r = sweep_one(a, b, cfg);
            let wall_ms = start.elapsed().as_millis();
            rows.push(match r {
                Ok((d, n, s)) => SweepRow {
                    alpha_deg: a,
                    beta_deg: b,
                    phi_direct: Some(d),
                    phi_density: Some(n),
                    substituted_seeds: s,
                    wall_ms,
                    error: None,
                },
                Err(e) => SweepRow {
                    alpha_deg: a,
                    beta_deg: b,
                    phi_direct: None,
                    phi_density: None,
                    substituted_seeds: 0,
                    wall_ms,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    rows
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let mut s =
        String::from("alpha_deg,beta_deg,phi_direct,phi_density,abs_diff,substituted_seeds,error\n");
    for r in rows {
        let error = r
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "'")))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.alpha_deg,
            r.beta_deg,
            opt(r.phi_direct),
            opt(r.phi_density),
            opt(r.abs_diff()),
            r.substituted_seeds,
            error
        ));
    }
    s
}
