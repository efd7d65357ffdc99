//! Binned return histograms over the sided cutting-line parameter.
//!
//! The parameter range `[0, 4pi)` is split into `T` bins. Seeds placed just
//! off the lines in bin `i` are iterated, and every time an iterate comes
//! within `eps` of a line the bin `j` of the nearest sided parameter is
//! charged, giving `counts[i][j]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{CutParam, Protocol, PwiMap};
use crate::parallel;
use crate::raster::{gray, RasterImage, WHITE};

const MAX_RETRIES: u32 = 16;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// How seeds are spread inside a bin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seeding {
    /// Midpoints of a uniform sub-lattice.
    #[default]
    Lattice,
    /// Uniform random positions from a seeded stream per bin.
    Jittered { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnPlotParams {
    pub protocol: Protocol,
    pub eps: f64,
    pub delta: f64,
    pub bins: usize,
    pub seeds_per_bin: usize,
    pub iterations: u64,
    #[serde(default)]
    pub seeding: Seeding,
}

impl ReturnPlotParams {
    pub fn delta_theta(&self) -> f64 {
        CutParam::PERIOD / self.bins as f64
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.bins < 2 || !self.bins.is_multiple_of(2) {
            return fail(format!("bin count must be even and >= 2, got {}", self.bins));
        }
        if self.seeds_per_bin == 0 {
            return fail("need at least one seed per bin".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return fail(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < self.eps) {
            return fail(format!("delta must lie in (0, eps), got {}", self.delta));
        }
        Ok(())
    }
}

/// `T x T` integer return counts, row `i` = start bin, column `j` = return bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnHistogram {
    pub params: ReturnPlotParams,
    pub counts: Vec<u64>,
    /// Seeds whose orbit hit the equator exactly and were re-placed.
    pub substituted: u64,
    /// Seeds that still failed after all retries (their rows lack them).
    pub dropped: u64,
}

/// Maps a sided parameter to its half-open bin.
pub fn bin_of(theta: f64, bins: usize) -> usize {
    let j = (theta / CutParam::PERIOD * bins as f64) as usize;
    j.min(bins - 1)
}

impl ReturnHistogram {
    pub fn build(params: ReturnPlotParams, workers: usize) -> Result<Self> {
        params.validate()?;
        let map = PwiMap::new(params.protocol);
        let rows: Vec<(Vec<u64>, u64, u64)> = parallel::run(workers, || {
            (0..params.bins)
                .into_par_iter()
                .map(|i| build_row(&map, &params, i))
                .collect()
        })?;
        let t = params.bins;
        let mut counts = Vec::with_capacity(t * t);
        let (mut substituted, mut dropped) = (0, 0);
        for (row, s, d) in rows {
            counts.extend_from_slice(&row);
            substituted += s;
            dropped += d;
        }
        Ok(Self {
            params,
            counts,
            substituted,
            dropped,
        })
    }

    pub fn bins(&self) -> usize {
        self.params.bins
    }

    pub fn delta_theta(&self) -> f64 {
        self.params.delta_theta()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.bins() + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        let t = self.bins();
        &self.counts[i * t..(i + 1) * t]
    }

    /// Fraction of cells with no returns.
    pub fn empty_fraction(&self) -> f64 {
        let empty = self.counts.iter().filter(|&&c| c == 0).count();
        empty as f64 / self.counts.len() as f64
    }

    /// Mean line density of the seeds started in bin `i`.
    pub fn row_density(&self, i: usize) -> Result<f64> {
        if i >= self.bins() {
            return Err(Error::InvalidArgument(format!("bin {i} out of range")));
        }
        let total: u64 = self.row(i).iter().sum();
        let seeds = self.params.seeds_per_bin as f64;
        Ok(total as f64 / (seeds * (self.params.iterations + 1) as f64))
    }

    /// `rho_ij / (eps * dtheta)` with `rho_ij = dtheta * counts / (seeds (N + 1))`.
    pub fn normalized(&self, i: usize, j: usize) -> f64 {
        let p = &self.params;
        self.get(i, j) as f64 / (p.seeds_per_bin as f64 * (p.iterations + 1) as f64 * p.eps)
    }

    /// Grayscale `log10(rho_ij / (eps dtheta) + 1)`, darker for larger values.
    ///
    /// Start bins run left to right, return bins bottom to top.
    pub fn log_render(&self) -> RasterImage {
        let t = self.bins();
        let mut img = RasterImage::filled(t, t, WHITE);
        let values: Vec<f64> = (0..t * t)
            .map(|k| (self.normalized(k / t, k % t) + 1.0).log10())
            .collect();
        let max = values.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return img;
        }
        for i in 0..t {
            for j in 0..t {
                let v = values[i * t + j];
                if self.get(i, j) > 0 {
                    // keep the faintest non-zero cell visibly off-white
                    let shade = 1.0 - (0.05 + 0.95 * v / max);
                    img.set_pixel((t - 1 - j) * t + i, gray(shade));
                }
            }
        }
        img
    }

    /// Sparse CSV `i,j,count` of the non-zero cells.
    pub fn to_csv(&self) -> String {
        let t = self.bins();
        let mut s = String::from("i,j,count\n");
        for (k, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                s.push_str(&format!("{},{},{}\n", k / t, k % t, c));
            }
        }
        s
    }
}

fn seed_offset(params: &ReturnPlotParams, rng: &mut Option<ChaCha8Rng>, k: usize, retry: u32) -> f64 {
    match rng {
        Some(r) => r.random::<f64>(),
        None => {
            let s = params.seeds_per_bin as f64;
            ((k as f64 + 0.5 + retry as f64 * GOLDEN) / s).fract()
        }
    }
}

fn build_row(map: &PwiMap, params: &ReturnPlotParams, i: usize) -> (Vec<u64>, u64, u64) {
    let t = params.bins;
    let dt = params.delta_theta();
    let sin_eps = params.eps.sin();
    let mut row = vec![0u64; t];
    let mut hits: Vec<u32> = Vec::new();
    let (mut substituted, mut dropped) = (0u64, 0u64);
    if !map.has_d1() && i >= t / 2 {
        // rows addressing an empty D1 have no seeds
        return (row, 0, 0);
    }
    let mut rng = match params.seeding {
        Seeding::Lattice => None,
        Seeding::Jittered { seed } => {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(i as u64);
            Some(r)
        }
    };

    for k in 0..params.seeds_per_bin {
        let mut done = false;
        for retry in 0..MAX_RETRIES {
            let theta = i as f64 * dt + seed_offset(params, &mut rng, k, retry) * dt;
            let Ok(theta) = CutParam::new(theta.min(CutParam::PERIOD - f64::EPSILON * 16.0)) else {
                continue;
            };
            hits.clear();
            if run_seed(map, theta, params, sin_eps, &mut hits).is_ok() {
                for &j in &hits {
                    row[j as usize] += 1;
                }
                done = true;
                break;
            }
            substituted += 1;
        }
        if !done {
            dropped += 1;
        }
    }
    (row, substituted, dropped)
}

fn run_seed(
    map: &PwiMap,
    theta: CutParam,
    params: &ReturnPlotParams,
    sin_eps: f64,
    hits: &mut Vec<u32>,
) -> Result<()> {
    let t = params.bins;
    let mut p = map.param_point(theta, params.delta)?;
    for _ in 0..=params.iterations {
        let trace = map.forward(p)?;
        let (h1, h2) = map.hits(&trace, sin_eps);
        if h1 || h2 {
            for c in map.return_bins_sin(&trace, sin_eps).iter() {
                hits.push(bin_of(c.theta(), t) as u32);
            }
        }
        p = trace.image;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn params(protocol: Protocol, bins: usize, seeds: usize, iterations: u64) -> ReturnPlotParams {
        ReturnPlotParams {
            protocol,
            eps: 1e-3,
            delta: 1e-6,
            bins,
            seeds_per_bin: seeds,
            iterations,
            seeding: Seeding::Lattice,
        }
    }

    #[test]
    fn binning_is_half_open() {
        assert_eq!(bin_of(0.0, 4), 0);
        assert_eq!(bin_of(TAU, 2), 1);
        assert_eq!(bin_of(TAU - 1e-12, 2), 0);
        assert_eq!(bin_of(2.0 * TAU - 1e-15, 4), 3);
    }

    #[test]
    fn validation() {
        let p = Protocol::identity();
        assert!(ReturnHistogram::build(params(p, 3, 1, 1), 1).is_err());
        assert!(ReturnHistogram::build(params(p, 4, 0, 1), 1).is_err());
        let mut bad = params(p, 4, 1, 1);
        bad.delta = 1e-2;
        assert!(ReturnHistogram::build(bad, 1).is_err());
    }

    #[test]
    fn identity_protocol_self_returns_on_d2_only() {
        let h = ReturnHistogram::build(params(Protocol::identity(), 8, 3, 20), 1).unwrap();
        let t = h.bins();
        for i in 0..t {
            for j in 0..t {
                let c = h.get(i, j);
                if i < t / 2 && i == j {
                    assert_eq!(c, 3 * 21);
                } else {
                    assert_eq!(c, 0, "cell ({i}, {j})");
                }
            }
        }
        for i in 0..t / 2 {
            assert_eq!(h.row_density(i).unwrap(), 1.0);
        }
        assert!(h.row_density(t).is_err());
    }

    #[test]
    fn every_row_self_counts() {
        let p = params(Protocol::from_degrees(57.0, 32.75).unwrap(), 40, 4, 200);
        let h = ReturnHistogram::build(p, 1).unwrap();
        for i in 0..h.bins() {
            let total: u64 = h.row(i).iter().sum();
            assert!(total >= 4, "row {i}");
            // iterate 0 lands in the seed's own bin
            assert!(h.get(i, i) >= 4);
        }
    }

    #[test]
    fn two_bins_split_lines() {
        let p = params(Protocol::from_degrees(45.0, 45.0).unwrap(), 2, 50, 300);
        let h = ReturnHistogram::build(p, 1).unwrap();
        assert_eq!(h.counts.len(), 4);
        assert!(h.counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn empty_fraction_and_render_extremes() {
        let mut h = ReturnHistogram::build(params(Protocol::identity(), 4, 1, 0), 1).unwrap();
        h.counts.iter_mut().for_each(|c| *c = 0);
        assert_eq!(h.empty_fraction(), 1.0);
        let img = h.log_render();
        assert!(img.rgb.iter().all(|&b| b == 255));

        h.counts[1 * 4 + 2] = 7;
        let img = h.log_render();
        let non_white = (0..16).filter(|&k| img.pixel(k) != WHITE).count();
        assert_eq!(non_white, 1);
        // column = start bin 1, row from the top = T - 1 - return bin 2
        assert_ne!(img.pixel(4 + 1), WHITE);

        h.counts.iter_mut().for_each(|c| *c = 1);
        assert_eq!(h.empty_fraction(), 0.0);
    }

    #[test]
    fn rows_are_reproducible_across_workers() {
        let p = params(Protocol::from_degrees(45.0, 45.0).unwrap(), 16, 3, 150);
        let a = ReturnHistogram::build(p, 1).unwrap();
        let b = ReturnHistogram::build(p, 4).unwrap();
        assert_eq!(a, b);
        let mut j = p;
        j.seeding = Seeding::Jittered { seed: 11 };
        let c = ReturnHistogram::build(j, 1).unwrap();
        let d = ReturnHistogram::build(j, 3).unwrap();
        assert_eq!(c, d);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn sparse_csv_lists_nonzero_cells() {
        let h = ReturnHistogram::build(params(Protocol::identity(), 4, 2, 3), 1).unwrap();
        let csv = h.to_csv();
        assert_eq!(csv, "i,j,count\n0,0,8\n1,1,8\n");
    }
}
