//! Synthetic urban propagation scenarios.
//!
//! A scenario pairs a deterministic "simulated" RSRP field (log-distance path
//! loss plus a fixed loss per blocking building) with a "measured" field that
//! adds a constant bias, a spatially correlated shadowing field and i.i.d.
//! noise. Their difference is therefore exactly `bias + fading + noise`.

mod fading;
mod geometry;

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMode, Point3, Sample};
use crate::error::{Error, Result};
use crate::rng::{seeded, streams};

pub use geometry::{ray_blockage, Building};

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Extent along x, meters.
    pub length: f64,
    /// Extent along y, meters.
    pub width: f64,
    pub height_min: f64,
    pub height_max: f64,
    /// Cell-centred grid resolution along x, y and z.
    pub grid: [usize; 3],
    pub building_count: usize,
    pub building_side_min: f64,
    pub building_side_max: f64,
    pub building_height_min: f64,
    pub building_height_max: f64,
    /// Minimum clear street width between building footprints.
    pub building_gap: f64,
    /// Transmit power in dB, referenced so that RSRP = power − path loss.
    pub tx_power_db: f64,
    pub tx_above_roof: f64,
    pub frequency_hz: f64,
    pub path_loss_exponent: f64,
    pub blockage_loss_db: f64,
    pub bias_db: f64,
    pub fading_std_db: f64,
    pub fading_corr_len: f64,
    pub noise_std_db: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            length: 300.0,
            width: 280.0,
            height_min: 0.0,
            height_max: 50.0,
            grid: [31, 29, 5],
            building_count: 12,
            building_side_min: 20.0,
            building_side_max: 45.0,
            building_height_min: 6.0,
            building_height_max: 38.6,
            building_gap: 8.0,
            tx_power_db: 30.0,
            tx_above_roof: 2.0,
            frequency_hz: 2.645e9,
            path_loss_exponent: 2.7,
            blockage_loss_db: 15.0,
            bias_db: 3.0,
            fading_std_db: 6.0,
            fading_corr_len: 30.0,
            noise_std_db: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Scenario(msg.into()));
        if !(self.length > 0.0 && self.width > 0.0 && self.height_max > self.height_min) {
            return bad("area extents must be positive");
        }
        if self.grid.contains(&0) {
            return bad("grid resolution must be at least 1 per axis");
        }
        if self.building_count > 0
            && !(self.building_side_min > 0.0
                && self.building_side_max >= self.building_side_min
                && self.building_height_min > 0.0
                && self.building_height_max >= self.building_height_min
                && self.building_gap >= 0.0)
        {
            return bad("building size ranges must be positive and ordered");
        }
        if self.building_count > 0 && (self.building_side_max > self.length || self.building_side_max > self.width) {
            return bad("buildings do not fit in the area");
        }
        if !(self.frequency_hz > 0.0 && self.path_loss_exponent > 0.0 && self.fading_corr_len > 0.0) {
            return bad("frequency, path-loss exponent and correlation length must be positive");
        }
        if !(self.blockage_loss_db >= 0.0 && self.fading_std_db >= 0.0 && self.noise_std_db >= 0.0) {
            return bad("blockage loss and standard deviations must be non-negative");
        }
        if !(self.tx_power_db.is_finite() && self.bias_db.is_finite() && self.tx_above_roof >= 0.0) {
            return bad("transmitter settings must be finite");
        }
        Ok(())
    }

    fn spacing(&self) -> [f64; 3] {
        [
            self.length / self.grid[0] as f64,
            self.width / self.grid[1] as f64,
            (self.height_max - self.height_min) / self.grid[2] as f64,
        ]
    }

    fn grid_point(&self, [i, j, k]: [usize; 3]) -> Point3 {
        let h = self.spacing();
        Point3::new(
            (i as f64 + 0.5) * h[0],
            (j as f64 + 0.5) * h[1],
            self.height_min + (k as f64 + 0.5) * h[2],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmitter {
    pub position: Point3,
    pub power_db: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub buildings: Vec<Building>,
    pub transmitter: Transmitter,
    /// Kept grid points (outside every building), in `(ix, iy, iz)` order.
    pub points: Vec<Point3>,
    /// Grid cell of each kept point.
    pub cells: Vec<[usize; 3]>,
    pub fading: Vec<f64>,
    pub noise: Vec<f64>,
    /// Full-grid lookup from cell to kept index.
    index: Vec<Option<usize>>,
}

/// Free-space loss at 1 m plus log-distance decay, in dB.
pub fn path_loss_db(tx: &Point3, rx: &Point3, frequency_hz: f64, exponent: f64) -> f64 {
    let d = tx.distance(rx).max(0.1);
    20.0 * frequency_hz.log10() - 147.55 + 10.0 * exponent * d.log10()
}

fn place_buildings(cfg: &ScenarioConfig, rng: &mut crate::rng::Rng) -> Result<Vec<Building>> {
    let mut out: Vec<Building> = Vec::with_capacity(cfg.building_count);
    let mut attempts = 0;
    while out.len() < cfg.building_count {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::Scenario(format!(
                "could not place {} non-overlapping buildings in {MAX_PLACEMENT_ATTEMPTS} attempts; \
                 lower the building count or size",
                cfg.building_count
            )));
        }
        let sx = rng.random_range(cfg.building_side_min..=cfg.building_side_max);
        let sy = rng.random_range(cfg.building_side_min..=cfg.building_side_max);
        let x = rng.random_range(0.0..=cfg.length - sx);
        let y = rng.random_range(0.0..=cfg.width - sy);
        let h = rng.random_range(cfg.building_height_min..=cfg.building_height_max);
        let b = Building::new(x, y, x + sx, y + sy, h);
        if out.iter().all(|o| !o.footprint_overlaps(&b, cfg.building_gap)) {
            out.push(b);
        }
    }
    Ok(out)
}

/// Builds the scenario deterministically from `(config, seed)`.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = seeded(seed, streams::BUILDINGS);
    let buildings = place_buildings(config, &mut rng)?;
    let tx_pos = if buildings.is_empty() {
        Point3::new(
            config.length / 2.0,
            config.width / 2.0,
            config.height_min + config.tx_above_roof,
        )
    } else {
        let roof = buildings[rng.random_range(0..buildings.len())].roof_center();
        Point3::new(roof.x, roof.y, roof.z + config.tx_above_roof)
    };
    let transmitter = Transmitter {
        position: tx_pos,
        power_db: config.tx_power_db,
        frequency_hz: config.frequency_hz,
    };

    let [nx, ny, nz] = config.grid;
    let mut points = Vec::new();
    let mut cells = Vec::new();
    let mut index = vec![None; nx * ny * nz];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let p = config.grid_point([i, j, k]);
                if buildings.iter().any(|b| b.contains(&p)) {
                    continue;
                }
                index[(i * ny + j) * nz + k] = Some(points.len());
                points.push(p);
                cells.push([i, j, k]);
            }
        }
    }
    if points.len() < 100 {
        return Err(Error::Scenario(format!(
            "grid keeps only {} points outside buildings; at least 100 are needed",
            points.len()
        )));
    }

    let mut rng = seeded(seed, streams::FADING);
    let raw = fading::smoothed_noise(config.grid, config.spacing(), config.fading_corr_len, &mut rng);
    let kept: Vec<f64> = cells.iter().map(|&[i, j, k]| raw[(i * ny + j) * nz + k]).collect();
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let std = (kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 0.0 { config.fading_std_db / std } else { 0.0 };
    let fading = kept.iter().map(|v| (v - mean) * scale).collect();

    let mut rng = seeded(seed, streams::NOISE);
    let noise = if config.noise_std_db > 0.0 {
        let dist = Normal::new(0.0, config.noise_std_db).expect("validated std");
        (0..points.len()).map(|_| dist.sample(&mut rng)).collect()
    } else {
        vec![0.0; points.len()]
    };

    Ok(Scenario {
        config: config.clone(),
        seed,
        buildings,
        transmitter,
        points,
        cells,
        fading,
        noise,
        index,
    })
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of `p` among the kept grid points, if it is one.
    pub fn point_index(&self, p: &Point3) -> Option<usize> {
        let h = self.config.spacing();
        let c = [
            p.x / h[0] - 0.5,
            p.y / h[1] - 0.5,
            (p.z - self.config.height_min) / h[2] - 0.5,
        ];
        let mut cell = [0usize; 3];
        for a in 0..3 {
            let r = c[a].round();
            if !(r >= 0.0 && (r as usize) < self.config.grid[a]) {
                return None;
            }
            cell[a] = r as usize;
        }
        let [_, ny, nz] = self.config.grid;
        let idx = self.index[(cell[0] * ny + cell[1]) * nz + cell[2]]?;
        (self.points[idx] == *p).then_some(idx)
    }

    fn sim_at(&self, p: &Point3) -> f64 {
        let tx = &self.transmitter;
        tx.power_db
            - path_loss_db(&tx.position, p, tx.frequency_hz, self.config.path_loss_exponent)
            - self.config.blockage_loss_db * ray_blockage(&tx.position, p, &self.buildings) as f64
    }

    fn lookup(&self, p: &Point3) -> Result<usize> {
        self.point_index(p)
            .ok_or_else(|| Error::Scenario(format!("({}, {}, {}) is not a kept grid point", p.x, p.y, p.z)))
    }

    /// Simulated RSRP at every kept grid point.
    pub fn simulated_field(&self) -> Vec<f64> {
        self.points.iter().map(|p| self.sim_at(p)).collect()
    }

    /// `bias + fading + noise` at every kept grid point.
    pub fn residual_field(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.residual_at(i)).collect()
    }

    fn residual_at(&self, i: usize) -> f64 {
        self.config.bias_db + self.fading[i] + self.noise[i]
    }

    pub fn buildings_csv(&self) -> String {
        let mut out = String::from("minx,miny,maxx,maxy,height\n");
        for b in &self.buildings {
            let _ = writeln!(out, "{},{},{},{},{}", b.min_x, b.min_y, b.max_x, b.max_y, b.height);
        }
        out
    }
}

/// Simulated RSRP `P0 − PL(d) − L_blk · blockage` at a kept grid point.
pub fn simulated_rsrp(scenario: &Scenario, p: &Point3) -> Result<f64> {
    scenario.lookup(p)?;
    Ok(scenario.sim_at(p))
}

/// Measured RSRP: simulated value plus bias, fading and noise.
pub fn measured_rsrp(scenario: &Scenario, p: &Point3) -> Result<f64> {
    let i = scenario.lookup(p)?;
    Ok(scenario.sim_at(p) + scenario.residual_at(i))
}

/// One fully measured sample per kept grid point.
pub fn generate_dataset(scenario: &Scenario) -> Result<Dataset> {
    let sim = scenario.simulated_field();
    let res = scenario.residual_field();
    let samples = scenario
        .points
        .iter()
        .zip(sim.iter().zip(&res))
        .map(|(p, (s, r))| Sample::new(*p, *s, Some(s + r)))
        .collect();
    Dataset::new(samples, FeatureMode::PositionPlusSim)
}
