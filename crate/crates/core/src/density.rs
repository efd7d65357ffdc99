//! Per-pixel cutting-line densities, their hue/lightness colouring, and exact
//! advection of scalar patterns.
//!
//! Every in-disk pixel centre is iterated forward and counts, for iterates
//! `0..=N`, how often it lies within `eps` of D1 (`n1`) and of D2 (`n2`). The
//! densities are `n_k / (N + 1)`. Counters are integers owned by their pixel,
//! so results do not depend on how work is split between threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{Protocol, PwiMap};
use crate::parallel;
use crate::raster::{gray, hsl_to_rgb, PixelGrid, RasterImage, WHITE};
use crate::sphere::{equator_angle, SpherePoint};

/// Counts of line proximities over iterates `0..=iterations`.
pub fn accumulate(map: &PwiMap, p: SpherePoint, eps: f64, iterations: u64) -> Result<(u64, u64)> {
    let sin_eps = eps.sin();
    let (mut n1, mut n2) = (0u64, 0u64);
    let mut q = p;
    for _ in 0..=iterations {
        let t = map.forward(q)?;
        let (h1, h2) = map.hits(&t, sin_eps);
        n1 += h1 as u64;
        n2 += h2 as u64;
        q = t.image;
    }
    Ok((n1, n2))
}

/// First iterate in `0..=iterations` within `eps` of either line, if any.
pub fn first_hit(map: &PwiMap, p: SpherePoint, eps: f64, iterations: u64) -> Result<Option<u64>> {
    let sin_eps = eps.sin();
    let mut q = p;
    for i in 0..=iterations {
        let t = map.forward(q)?;
        let (h1, h2) = map.hits(&t, sin_eps);
        if h1 || h2 {
            return Ok(Some(i));
        }
        q = t.image;
    }
    Ok(None)
}

/// Relative density `n1 / (n1 + n2)`; `None` where neither line is met.
pub fn hue(n1: u64, n2: u64) -> Option<f64> {
    let total = n1 + n2;
    (total > 0).then(|| n1 as f64 / total as f64)
}

/// Total density normalized by the line half-width, `(n1 + n2) / ((N + 1) eps)`.
pub fn lightness(n1: u64, n2: u64, iterations: u64, eps: f64) -> f64 {
    (n1 + n2) as f64 / ((iterations + 1) as f64 * eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityParams {
    pub protocol: Protocol,
    pub eps: f64,
    pub iterations: u64,
}

/// Integer line-return counters over an equal-area pixel grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub resolution: usize,
    pub n1: Vec<u32>,
    pub n2: Vec<u32>,
    /// Pixel centre inside the disk and its orbit never hit the equator exactly.
    pub valid: Vec<bool>,
    pub params: DensityParams,
}

/// Summary of hue and lightness over defined pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorStats {
    pub defined_pixels: usize,
    pub hue_mean: f64,
    pub hue_std: f64,
    pub lightness_mean: f64,
    /// Coefficient of variation of `L / eps`.
    pub lightness_cv: f64,
}

/// Outcome of the necessary-condition ergodicity check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityCheck {
    pub stats: ColorStats,
    /// True when colour variation proves the exceptional set is not ergodic.
    /// False never certifies ergodicity.
    pub non_ergodic: bool,
}

pub const HUE_SPREAD_LIMIT: f64 = 0.1;
pub const LIGHTNESS_CV_LIMIT: f64 = 0.5;

impl DensityGrid {
    pub fn compute(
        protocol: Protocol,
        eps: f64,
        iterations: u64,
        resolution: usize,
        workers: usize,
    ) -> Result<Self> {
        check_eps(eps)?;
        if iterations >= u32::MAX as u64 / 2 {
            return Err(Error::InvalidArgument(format!("too many iterations: {iterations}")));
        }
        let grid = PixelGrid::new(resolution)?;
        let map = PwiMap::new(protocol);
        let cells: Vec<Option<(u32, u32)>> = parallel::run(workers, || {
            (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let p = grid.point(i)?;
                    accumulate(&map, p, eps, iterations)
                        .ok()
                        .map(|(a, b)| (a as u32, b as u32))
                })
                .collect()
        })?;
        let mut n1 = Vec::with_capacity(cells.len());
        let mut n2 = Vec::with_capacity(cells.len());
        let mut valid = Vec::with_capacity(cells.len());
        for c in cells {
            let (a, b) = c.unwrap_or((0, 0));
            n1.push(a);
            n2.push(b);
            valid.push(c.is_some());
        }
        Ok(Self {
            resolution,
            n1,
            n2,
            valid,
            params: DensityParams {
                protocol,
                eps,
                iterations,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.n1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n1.is_empty()
    }

    /// Pixels whose centre is in the disk but whose orbit hit the equator.
    pub fn invalid_in_disk(&self) -> usize {
        let grid = PixelGrid::new(self.resolution).expect("resolution was validated");
        (0..self.len())
            .filter(|&i| !self.valid[i] && grid.point(i).is_some())
            .count()
    }

    pub fn hue_at(&self, i: usize) -> Option<f64> {
        if !self.valid[i] {
            return None;
        }
        hue(self.n1[i] as u64, self.n2[i] as u64)
    }

    pub fn lightness_at(&self, i: usize) -> f64 {
        lightness(
            self.n1[i] as u64,
            self.n2[i] as u64,
            self.params.iterations,
            self.params.eps,
        )
    }

    /// Indices of valid pixels with at least `min_total` line returns.
    pub fn defined(&self, min_total: u64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| {
            self.valid[i] && (self.n1[i] as u64 + self.n2[i] as u64) >= min_total.max(1)
        })
    }

    /// Fraction of valid pixels with any line return: the covered area of the
    /// pixelized approximate exceptional set.
    pub fn covered_fraction(&self) -> f64 {
        let valid = self.valid.iter().filter(|&&v| v).count();
        let covered = self.defined(1).count();
        covered as f64 / valid.max(1) as f64
    }

    pub fn color_stats(&self, min_total: u64) -> ColorStats {
        let idx: Vec<usize> = self.defined(min_total).collect();
        let hues: Vec<f64> = idx.iter().filter_map(|&i| self.hue_at(i)).collect();
        let lights: Vec<f64> = idx.iter().map(|&i| self.lightness_at(i)).collect();
        let (hue_mean, hue_std) = mean_std(&hues);
        let (lightness_mean, l_std) = mean_std(&lights);
        ColorStats {
            defined_pixels: idx.len(),
            hue_mean,
            hue_std,
            lightness_mean,
            lightness_cv: if lightness_mean > 0.0 { l_std / lightness_mean } else { 0.0 },
        }
    }

    /// Flags the protocol non-ergodic when hue or lightness vary too much.
    pub fn ergodicity_check(&self, min_total: u64) -> ErgodicityCheck {
        let stats = self.color_stats(min_total);
        ErgodicityCheck {
            stats,
            non_ergodic: stats.hue_std > HUE_SPREAD_LIMIT || stats.lightness_cv > LIGHTNESS_CV_LIMIT,
        }
    }

    /// Hue/lightness image: blue (only D2) through magenta to red (only D1),
    /// paler for lower density, white where undefined.
    pub fn render(&self) -> RasterImage {
        let mut lights: Vec<f64> = self.defined(1).map(|i| self.lightness_at(i)).collect();
        let scale = percentile(&mut lights, 0.99).unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let mut img = RasterImage::filled(self.resolution, self.resolution, WHITE);
        for i in 0..self.len() {
            if let Some(h) = self.hue_at(i) {
                let t = (self.lightness_at(i) / scale).clamp(0.0, 1.0);
                img.set_pixel(i, hsl_to_rgb(240.0 + 120.0 * h, 1.0, 1.0 - 0.5 * t));
            }
        }
        img
    }

    /// CSV rows `pixel,n1,n2,valid`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pixel,n1,n2,valid\n");
        for i in 0..self.len() {
            s.push_str(&format!("{},{},{},{}\n", i, self.n1[i], self.n2[i], self.valid[i] as u8));
        }
        s
    }
}

/// Runs the density grid and colours it.
pub fn render_exceptional_set(
    protocol: Protocol,
    eps: f64,
    iterations: u64,
    resolution: usize,
    workers: usize,
) -> Result<(RasterImage, DensityGrid)> {
    let grid = DensityGrid::compute(protocol, eps, iterations, resolution, workers)?;
    Ok((grid.render(), grid))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn percentile(v: &mut [f64], q: f64) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = ((v.len() - 1) as f64 * q).round() as usize;
    Some(v[k])
}

/// Scalar initial conditions on the hemisphere, in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pattern {
    /// `(1 + cos psi) / 2` for the equator angle `psi`, modulated by `bands`
    /// stripes in height.
    AngleBands { bands: u32 },
    /// `(1 + cos psi) / 2` alone.
    Angle,
    /// `(1 + z) / 2`.
    Height,
    /// Alternating cells in `(psi, z)`.
    Checker { cells: u32 },
}

impl Default for Pattern {
    fn default() -> Self {
        Pattern::AngleBands { bands: 4 }
    }
}

impl Pattern {
    pub fn value(&self, p: SpherePoint) -> f64 {
        let angle = || equator_angle(p).unwrap_or(0.0);
        match *self {
            Pattern::Angle => 0.5 * (1.0 + angle().cos()),
            Pattern::AngleBands { bands } => {
                let base = 0.5 * (1.0 + angle().cos());
                let band = ((p.z + 1.0) * 0.5 * bands as f64).floor() as i64;
                if band % 2 == 0 {
                    base
                } else {
                    0.25 + 0.5 * base
                }
            }
            Pattern::Height => 0.5 * (1.0 + p.z),
            Pattern::Checker { cells } => {
                let a = (angle() / std::f64::consts::TAU * cells as f64).floor() as i64;
                let b = ((p.z + 1.0) * 0.5 * cells as f64).floor() as i64;
                ((a + b).rem_euclid(2)) as f64
            }
        }
    }
}

/// Pattern values carried `iterations` steps forward, sampled per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct AdvectedField {
    pub resolution: usize,
    /// `None` outside the disk or where a pull-back hit the equator.
    pub values: Vec<Option<f64>>,
}

impl AdvectedField {
    pub fn render(&self) -> RasterImage {
        let mut img = RasterImage::filled(self.resolution, self.resolution, WHITE);
        for (i, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                img.set_pixel(i, gray(*v));
            }
        }
        img
    }

    pub fn flagged(&self) -> usize {
        let grid = PixelGrid::new(self.resolution).expect("resolution was validated");
        (0..self.values.len())
            .filter(|&i| self.values[i].is_none() && grid.point(i).is_some())
            .count()
    }
}

/// Evaluates `pattern` at `M^-N` of each pixel centre: the exact image of the
/// pattern after `N` forward steps.
pub fn advect<F>(
    protocol: Protocol,
    iterations: u64,
    pattern: F,
    resolution: usize,
    workers: usize,
) -> Result<AdvectedField>
where
    F: Fn(SpherePoint) -> f64 + Sync,
{
    let grid = PixelGrid::new(resolution)?;
    let map = PwiMap::new(protocol);
    let values = parallel::run(workers, || {
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let mut p = grid.point(i)?;
                for _ in 0..iterations {
                    p = map.inverse(p).ok()?;
                }
                Some(pattern(p))
            })
            .collect()
    })?;
    Ok(AdvectedField { resolution, values })
}

pub fn advect_pattern(
    protocol: Protocol,
    iterations: u64,
    pattern: Pattern,
    resolution: usize,
    workers: usize,
) -> Result<AdvectedField> {
    advect(protocol, iterations, |p| pattern.value(p), resolution, workers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hue_cases() {
        assert_eq!(hue(5, 5), Some(0.5));
        assert_eq!(hue(0, 7), Some(0.0));
        assert_eq!(hue(3, 0), Some(1.0));
        assert_eq!(hue(0, 0), None);
    }

    #[test]
    fn lightness_cases() {
        assert_eq!(lightness(0, 0, 100, 1e-3), 0.0);
        assert!((lightness(3, 7, 99, 0.5) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identity_protocol_counts() {
        let m = PwiMap::new(Protocol::identity());
        let eps = 1e-3;
        let far = SpherePoint::normalized(0.5, -0.3, 0.2).unwrap();
        assert_eq!(accumulate(&m, far, eps, 50).unwrap(), (0, 0));
        let near = SpherePoint::normalized(0.5, -5e-4, 0.2).unwrap();
        assert_eq!(accumulate(&m, near, eps, 50).unwrap(), (0, 51));
        assert_eq!(first_hit(&m, near, eps, 50).unwrap(), Some(0));
        assert_eq!(first_hit(&m, far, eps, 50).unwrap(), None);
    }

    #[test]
    fn boundary_orbits_are_errors() {
        let m = PwiMap::new(Protocol::new(std::f64::consts::FRAC_PI_2, 0.3).unwrap());
        assert!(accumulate(&m, SpherePoint::new(0.0, -1.0, 0.0), 1e-3, 3).is_err());
    }

    #[test]
    fn identity_grid_is_an_eps_ring() {
        let eps = 1e-2;
        let grid = DensityGrid::compute(Protocol::identity(), eps, 10, 128, 1).unwrap();
        let pg = PixelGrid::new(128).unwrap();
        for i in 0..grid.len() {
            let total = grid.n1[i] + grid.n2[i];
            match pg.point(i) {
                None => assert_eq!(total, 0),
                Some(p) if p.y.abs().asin() > eps => assert_eq!(total, 0),
                Some(_) => assert_eq!((grid.n1[i], grid.n2[i]), (0, 11)),
            }
        }
        assert!(grid.covered_fraction() < 0.05);
        let img = grid.render();
        let center = 64 * 128 + 64;
        assert_eq!(img.pixel(center), WHITE);
    }

    #[test]
    fn counts_bounded_and_monotone_in_iterations() {
        let prot = Protocol::from_degrees(57.0, 32.75).unwrap();
        let a = DensityGrid::compute(prot, 1e-2, 40, 48, 1).unwrap();
        let b = DensityGrid::compute(prot, 1e-2, 80, 48, 1).unwrap();
        for i in 0..a.len() {
            assert!(a.n1[i] + a.n2[i] <= 2 * 41);
            if a.valid[i] && b.valid[i] {
                assert!(a.n1[i] <= b.n1[i] && a.n2[i] <= b.n2[i]);
            }
        }
    }

    #[test]
    fn grids_match_across_worker_counts() {
        let prot = Protocol::from_degrees(45.0, 45.0).unwrap();
        let a = DensityGrid::compute(prot, 1e-2, 60, 40, 1).unwrap();
        let b = DensityGrid::compute(prot, 1e-2, 60, 40, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eps_nesting() {
        let prot = Protocol::from_degrees(45.0, 45.0).unwrap();
        let wide = DensityGrid::compute(prot, 2e-2, 50, 40, 1).unwrap();
        let thin = DensityGrid::compute(prot, 1e-2, 50, 40, 1).unwrap();
        let covered = |g: &DensityGrid| g.defined(1).collect::<std::collections::BTreeSet<_>>();
        let (w, t) = (covered(&wide), covered(&thin));
        assert!(t.is_subset(&w));
        assert!(w.len() > t.len());
    }

    #[test]
    fn advection_trivial_cases() {
        let pat = Pattern::default();
        let direct = advect_pattern(Protocol::from_degrees(45.0, 45.0).unwrap(), 0, pat, 32, 1).unwrap();
        let ident = advect_pattern(Protocol::identity(), 25, pat, 32, 1).unwrap();
        let grid = PixelGrid::new(32).unwrap();
        for i in 0..grid.len() {
            let want = grid.point(i).map(|p| pat.value(p));
            assert_eq!(direct.values[i], want);
            assert_eq!(ident.values[i], want);
        }
    }

    #[test]
    fn patterns_stay_in_unit_interval() {
        let pats = [
            Pattern::default(),
            Pattern::Angle,
            Pattern::Height,
            Pattern::Checker { cells: 6 },
        ];
        let grid = PixelGrid::new(24).unwrap();
        for pat in pats {
            for i in 0..grid.len() {
                if let Some(p) = grid.point(i) {
                    let v = pat.value(p);
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
