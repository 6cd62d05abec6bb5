//! Seeded synthetic longitudinal cohorts with planted group-dependent atrophy.
//!
//! Baseline volumes are uniform over a range; each region's relative change is
//! the patient's group effect on planted regions (zero elsewhere) plus Gaussian
//! noise. A handful of non-planted regions are corrupted by removing the
//! follow-up volume of one patient, so they drop out of the valid-node set.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::cohort::{CohortDataset, Group, Patient};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub d: usize,
    pub group_sizes: BTreeMap<Group, usize>,
    pub planted_nodes: BTreeSet<usize>,
    pub effect_sizes: BTreeMap<Group, f64>,
    pub noise_sd: f64,
    pub baseline_volume_range: (f64, f64),
    pub invalid_node_count: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            d: 110,
            group_sizes: [(Group::Ad, 213), (Group::Mci, 322), (Group::Cn, 322)].into(),
            planted_nodes: (0..12).map(|i| i * 9).collect(),
            effect_sizes: [(Group::Ad, -0.08), (Group::Mci, -0.04), (Group::Cn, 0.0)].into(),
            noise_sd: 0.02,
            baseline_volume_range: (500.0, 20000.0),
            invalid_node_count: 9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d < self.planted_nodes.len() {
            return bad(format!(
                "d = {} is smaller than the {} planted nodes",
                self.d,
                self.planted_nodes.len()
            ));
        }
        if let Some(&n) = self.planted_nodes.iter().find(|&&n| n >= self.d) {
            return bad(format!("planted node {n} out of range for d = {}", self.d));
        }
        if self.effect_sizes.values().any(|e| !e.is_finite() || *e <= -1.0) {
            return bad("effect sizes must be finite and above -1".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be non-negative, got {}", self.noise_sd));
        }
        let (lo, hi) = self.baseline_volume_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("baseline volume range ({lo}, {hi}) must satisfy 0 < lo < hi"));
        }
        let free = self.d - self.planted_nodes.len();
        if self.invalid_node_count > free {
            return bad(format!(
                "cannot corrupt {} regions; only {free} are not planted",
                self.invalid_node_count
            ));
        }
        if self.invalid_node_count > 0 && self.group_sizes.values().all(|&n| n == 0) {
            return bad("corruption needs at least one patient".into());
        }
        Ok(())
    }

    pub fn num_patients(&self) -> usize {
        self.group_sizes.values().sum()
    }
}

/// Region names, zero-padded so lexicographic order matches index order.
pub fn region_names(d: usize) -> Vec<String> {
    let width = d.saturating_sub(1).to_string().len().max(3);
    (0..d).map(|i| format!("region_{i:0width$}")).collect()
}

pub fn generate_cohort(config: &SynthConfig) -> Result<CohortDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.baseline_volume_range;
    let baseline = Uniform::new(lo, hi).map_err(|e| Error::Config(e.to_string()))?;
    let noise = Normal::new(0.0, config.noise_sd).map_err(|e| Error::Config(e.to_string()))?;

    let mut patients = Vec::with_capacity(config.num_patients());
    for g in Group::ALL {
        let n = config.group_sizes.get(&g).copied().unwrap_or(0);
        let effect = config.effect_sizes.get(&g).copied().unwrap_or(0.0);
        for i in 0..n {
            let mut t0 = Vec::with_capacity(config.d);
            let mut t1 = Vec::with_capacity(config.d);
            for r in 0..config.d {
                let v0: f64 = baseline.sample(&mut rng);
                let shift = if config.planted_nodes.contains(&r) { effect } else { 0.0 };
                let ratio = shift + noise.sample(&mut rng);
                t0.push(Some(v0));
                t1.push(Some(v0 * (1.0 + ratio)));
            }
            patients.push(Patient {
                id: format!("{}_{:04}", g.as_str(), i + 1),
                group: g,
                t0,
                t1,
            });
        }
    }

    let free: Vec<usize> = (0..config.d)
        .filter(|r| !config.planted_nodes.contains(r))
        .collect();
    for pick in sample(&mut rng, free.len(), config.invalid_node_count) {
        let victim = rng.random_range(0..patients.len());
        patients[victim].t1[free[pick]] = None;
    }
    CohortDataset::new(patients, region_names(config.d))
}
