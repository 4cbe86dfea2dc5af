use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Gas, GasTable, FAULTY, GAS_COUNT, HEALTHY};
use crate::rng::seeded;
use crate::{Error, Result};

/// Measured bushing profiles (ppm, canonical gas order without TCG) for
/// faulty units.
const FAULTY_PROFILES: [[f64; 9]; 5] = [
    [43.0, 242.0, 57.0, 294.0, 2055.0, 1175.0, 1882.0, 12233.0, 4060.0],
    [12.7, 90.0, 1491.0, 0.0, 89.0, 1616335.0, 297.0, 31.0, 52013.0],
    [3479.0, 898.0, 61.0, 1582.0, 5409.0, 206.0, 548.0, 41043.0, 16462.0],
    [366.0, 4745.0, 1006.0, 345.0, 2358.0, 558.0, 1291.0, 48346.0, 8379.0],
    [1878.0, 1961.0, 1448.0, 87.0, 1198.0, 1827.0, 669.0, 38756.0, 15154.0],
];

/// Measured profiles for healthy units.
const HEALTHY_PROFILES: [[f64; 9]; 4] = [
    [10.0, 2040.0, 207.0, 14.0, 95.0, 25.0, 38.0, 51405.0, 17312.0],
    [13.0, 2336.0, 252.0, 28.0, 204.0, 56.0, 88.0, 56213.0, 18532.0],
    [8.0, 1848.0, 213.0, 20.0, 141.0, 29.0, 52.0, 48833.0, 16483.0],
    [14.0, 2528.0, 340.0, 56.0, 404.0, 115.0, 170.0, 56275.0, 17456.0],
];

/// Parameters of a synthetic gas table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub rows: usize,
    pub fault_ratio: f64,
    /// Relative Gaussian noise: each value is `profile * (1 + noise * z)`.
    pub noise: f64,
    pub seed: u64,
    /// Gases that follow the row's class. `None` makes every gas
    /// class-dependent; listed gases share one class profile per row while
    /// the others draw an independent profile from all measured units
    /// regardless of class. TCG is always recomputed.
    #[serde(default)]
    pub informative: Option<Vec<Gas>>,
}

impl SynthSpec {
    pub fn new(rows: usize, fault_ratio: f64, noise: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            rows,
            fault_ratio,
            noise,
            seed,
            informative: None,
        }
    }

    pub fn with_informative(mut self, gases: &[Gas]) -> SynthSpec {
        self.informative = Some(gases.to_vec());
        self
    }

    pub fn generate(&self) -> Result<GasTable> {
        if self.rows < 10 {
            return Err(Error::parameter(format!("need at least 10 rows, got {}", self.rows)));
        }
        if !(self.fault_ratio > 0.0 && self.fault_ratio < 1.0) {
            return Err(Error::parameter(format!(
                "fault ratio {} must lie in (0, 1)",
                self.fault_ratio
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::parameter(format!("noise {} must be >= 0", self.noise)));
        }
        let informative = |g: Gas| {
            self.informative
                .as_ref()
                .is_none_or(|list| list.contains(&g))
        };

        let mut rng = seeded(self.seed);
        let faulty = (self.rows as f64 * self.fault_ratio).round() as usize;
        let mut decisions: Vec<u8> = (0..self.rows)
            .map(|i| if i < faulty { FAULTY } else { HEALTHY })
            .collect();
        decisions.shuffle(&mut rng);

        let all_profiles: Vec<&[f64; 9]> = FAULTY_PROFILES.iter().chain(&HEALTHY_PROFILES).collect();
        let mut rows = Vec::with_capacity(self.rows);
        for &d in &decisions {
            let class_profile = if d == FAULTY {
                &FAULTY_PROFILES[rng.random_range(0..FAULTY_PROFILES.len())]
            } else {
                &HEALTHY_PROFILES[rng.random_range(0..HEALTHY_PROFILES.len())]
            };
            let mut row = [0.0; GAS_COUNT];
            for g in &Gas::ALL[..GAS_COUNT - 1] {
                let profile = if informative(*g) {
                    class_profile
                } else {
                    all_profiles[rng.random_range(0..all_profiles.len())]
                };
                let z: f64 = StandardNormal.sample(&mut rng);
                row[g.index()] = (profile[g.index()] * (1.0 + self.noise * z)).max(0.0);
            }
            row[Gas::Tcg.index()] = Gas::COMBUSTIBLE.iter().map(|g| row[g.index()]).sum();
            rows.push(row);
        }
        GasTable::new(rows, decisions)
    }
}

/// Synthetic table whose every gas follows the class profiles.
pub fn synth_generate(rows: usize, fault_ratio: f64, noise: f64, seed: u64) -> Result<GasTable> {
    SynthSpec::new(rows, fault_ratio, noise, seed).generate()
}
