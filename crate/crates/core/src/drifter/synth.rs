//! Desk-scale synthetic drifter benchmark: a 10 × 10 hexagon patch with one
//! masked island, currents from a slowly rotating stream function and noisy
//! buoy tracks over five years.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::hexgrid::{HexGridComplex, HexLayout};
use super::infer::{all_settings, hyperparameter_grid, sweep, InferOptions, SweepRow};
use super::trajectory::{epoch, split_train_test, Ping, Trajectory, YearRange, YearlyFlows};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 7;
pub const SEED_COUNT: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub ncols: usize,
    pub nrows: usize,
    pub hex_size: f64,
    pub years: usize,
    pub first_year: i32,
    pub trajectories: usize,
    pub pings: usize,
    /// Standard deviation of the per-ping position noise, in degrees.
    pub noise: f64,
    /// Velocity scale of the stream function.
    pub speed: f64,
    /// Yearly phase drift of the eddy term, in radians.
    pub phase_rate: f64,
    pub split: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            ncols: 10,
            nrows: 10,
            hex_size: 0.3,
            years: 5,
            first_year: 2000,
            trajectories: 60,
            pings: 15,
            noise: 0.02,
            speed: 0.04,
            phase_rate: 0.25,
            split: 0.8,
        }
    }
}

impl SynthConfig {
    pub fn layout(&self) -> Result<HexLayout> {
        HexLayout::new(0.0, 0.0, self.hex_size, self.ncols, self.nrows)
    }

    /// The masked island: the hexagon at column `ncols/2`, row `nrows/2`.
    pub fn island(&self) -> Result<BTreeSet<usize>> {
        let l = self.layout()?;
        Ok(BTreeSet::from([l.id(self.ncols / 2, self.nrows / 2)]))
    }

    pub fn grid(&self) -> Result<HexGridComplex> {
        HexGridComplex::new(self.layout()?, &self.island()?)
    }

    pub fn year_range(&self) -> YearRange {
        YearRange {
            first: self.first_year,
            count: self.years,
        }
    }

    /// Velocity `(u, v)` (east, north) at `(lon, lat)` in year index `t`.
    ///
    /// Stream function `ψ = sin(k_y y) (sin(k_x x / 2) + 0.6 sin(k_x x + φ t))`
    /// with `u = s ∂ψ/∂y`, `v = −s ∂ψ/∂x`: one basin-wide gyre plus a pair of
    /// eddies that drift with the year.
    pub fn velocity(&self, lon: f64, lat: f64, t: usize) -> Result<(f64, f64)> {
        let l = self.layout()?;
        let width = (self.ncols - 1) as f64 * l.dx();
        let height = (self.nrows - 1) as f64 * self.hex_size;
        let (kx, ky) = (2.0 * PI / width, PI / height);
        let ph = self.phase_rate * t as f64;
        let (x, y) = (lon - l.lon0, lat - l.lat0);
        let (a, b) = (1.0, 0.6);
        let dpsi_dy = ky * (ky * y).cos() * (a * (kx * x / 2.0).sin() + b * (kx * x + ph).sin());
        let dpsi_dx =
            (ky * y).sin() * (a * kx / 2.0 * (kx * x / 2.0).cos() + b * kx * (kx * x + ph).cos());
        Ok((self.speed * dpsi_dy, -self.speed * dpsi_dx))
    }
}

/// Tracks of one seed: each buoy starts uniformly inside the inner 90% of
/// the patch in a random year and is advected with additive Gaussian noise,
/// one ping every six hours.
pub fn generate_trajectories(cfg: &SynthConfig, seed: u64) -> Result<Vec<Trajectory>> {
    if cfg.years == 0 || cfg.trajectories == 0 || cfg.pings == 0 {
        return Err(Error::param(
            "synthetic benchmark needs years, trajectories and pings",
        ));
    }
    let l = cfg.layout()?;
    let width = (cfg.ncols - 1) as f64 * l.dx();
    let height = (cfg.nrows - 1) as f64 * cfg.hex_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let digits = cfg.trajectories.to_string().len();
    (0..cfg.trajectories)
        .map(|k| {
            let t = rng.random_range(0..cfg.years);
            let mut lon = l.lon0 + rng.random_range(0.05..0.95) * width;
            let mut lat = l.lat0 + rng.random_range(0.05..0.95) * height;
            let start = epoch(cfg.first_year + t as i32, 3, 1, 0)?;
            let mut pings = Vec::with_capacity(cfg.pings);
            for s in 0..cfg.pings {
                pings.push(Ping {
                    time: start + 6 * 3600 * s as i64,
                    lat,
                    lon,
                });
                let (u, v) = cfg.velocity(lon, lat, t)?;
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                lon += u + cfg.noise * nx;
                lat += v + cfg.noise * ny;
            }
            Trajectory::new(format!("synth-{k:0digits$}"), pings)
        })
        .collect()
}

/// One seed's train/test flows on the benchmark grid.
#[derive(Clone, Debug)]
pub struct SynthSplit {
    pub train: YearlyFlows,
    pub test: YearlyFlows,
    pub train_buoys: usize,
    pub test_buoys: usize,
}

pub fn synth_split(cfg: &SynthConfig, grid: &HexGridComplex, seed: u64) -> Result<SynthSplit> {
    let trajectories = generate_trajectories(cfg, seed)?;
    let (train, test) = split_train_test(&trajectories, cfg.split, seed)?;
    let years = cfg.year_range();
    let (train_flows, _) = YearlyFlows::from_trajectories(grid, &train, years);
    let (test_flows, _) = YearlyFlows::from_trajectories(grid, &test, years);
    Ok(SynthSplit {
        train: train_flows,
        test: test_flows,
        train_buoys: train.len(),
        test_buoys: test.len(),
    })
}

#[derive(Clone, Debug)]
pub struct SeedResult {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

/// Mean over seeds for one setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettingSummary {
    pub alpha_s: f64,
    pub alpha_t: f64,
    pub max_train_loss: f64,
    pub mean_test_loss: f64,
}

impl SettingSummary {
    pub fn is_joint(&self) -> bool {
        self.alpha_s > 0.0 && self.alpha_t > 0.0
    }

    pub fn is_pure_spatial(&self) -> bool {
        self.alpha_s > 0.0 && self.alpha_t == 0.0
    }

    pub fn is_pure_temporal(&self) -> bool {
        self.alpha_s == 0.0 && self.alpha_t > 0.0
    }
}

#[derive(Clone, Debug)]
pub struct SynthReport {
    pub seeds: Vec<SeedResult>,
    pub summary: Vec<SettingSummary>,
}

impl SynthReport {
    fn best(&self, pick: impl Fn(&SettingSummary) -> bool) -> Option<SettingSummary> {
        self.summary
            .iter()
            .copied()
            .filter(|s| pick(s))
            .min_by(|a, b| a.mean_test_loss.total_cmp(&b.mean_test_loss))
    }

    pub fn best_joint(&self) -> Option<SettingSummary> {
        self.best(SettingSummary::is_joint)
    }

    pub fn best_pure_spatial(&self) -> Option<SettingSummary> {
        self.best(SettingSummary::is_pure_spatial)
    }

    pub fn best_pure_temporal(&self) -> Option<SettingSummary> {
        self.best(SettingSummary::is_pure_temporal)
    }

    pub fn no_smoothing(&self) -> Option<SettingSummary> {
        self.best(|s| s.alpha_s == 0.0 && s.alpha_t == 0.0)
    }

    pub fn max_train_loss(&self) -> f64 {
        self.summary
            .iter()
            .map(|s| s.max_train_loss)
            .fold(0.0, f64::max)
    }
}

/// Run the sweep for each seed and average the test losses per setting.
pub fn run_synth(
    cfg: &SynthConfig,
    seeds: &[u64],
    settings: &[(f64, f64)],
    opts: &InferOptions,
) -> Result<SynthReport> {
    let grid = cfg.grid()?;
    let mut results = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let split = synth_split(cfg, &grid, seed)?;
        let rows = sweep(&grid, &split.train, &split.test, settings, opts)?;
        results.push(SeedResult { seed, rows });
    }
    let summary = settings
        .iter()
        .enumerate()
        .map(|(i, &(alpha_s, alpha_t))| {
            let rows: Vec<&SweepRow> = results.iter().map(|r| &r.rows[i]).collect();
            SettingSummary {
                alpha_s,
                alpha_t,
                max_train_loss: rows.iter().map(|r| r.train_loss).fold(0.0, f64::max),
                mean_test_loss: rows.iter().map(|r| r.test_loss).sum::<f64>()
                    / rows.len().max(1) as f64,
            }
        })
        .collect();
    Ok(SynthReport {
        seeds: results,
        summary,
    })
}

/// Seeds `base, base + 1, …` of the multi-seed benchmark.
pub fn benchmark_seeds(base: u64) -> Vec<u64> {
    (base..base + SEED_COUNT).collect()
}

/// The full benchmark: every pair of the hyperparameter grid over five seeds.
pub fn run_benchmark(base_seed: u64) -> Result<SynthReport> {
    let grid = hyperparameter_grid();
    run_synth(
        &SynthConfig::default(),
        &benchmark_seeds(base_seed),
        &all_settings(&grid, &grid),
        &InferOptions::default(),
    )
}
