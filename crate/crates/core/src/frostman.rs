//! Finite-stage Frostman measures: the packing LP dual to the weighted
//! covering program, and verification of the cylinder bounds.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::covering::{StageLp, StageSpec};
use crate::cylinders::{for_each_mixed, sup_birkhoff_of_key, WindowProfile, Zones};
use crate::error::Result;
use crate::symbolic::{ChainSystem, Limits, Potential, Symbol, Word};

/// Probability measure on depth-`D` level-1 cylinders, stored per row
/// class (weighted `n_max`-cylinder) and spread uniformly inside a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageMeasure {
    pub depth: usize,
    pub n_max: usize,
    /// Mixed word of each class.
    pub classes: Vec<Word>,
    pub mass: Vec<f64>,
    /// Number of base cylinders per class, as decimal strings.
    pub base_counts: Vec<String>,
}

impl StageMeasure {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn support_size(&self) -> usize {
        self.mass.iter().filter(|&&m| m > 0.0).count()
    }

    /// Mass of every base cylinder (enumerates `word_count(D)` words).
    pub fn base_weights(&self, system: &ChainSystem, limits: &Limits) -> Result<BTreeMap<Word, f64>> {
        let words = system.top().words(self.depth, limits)?;
        let zones = WindowProfile::new(system.weights(), self.n_max).zones();
        let lookup: BTreeMap<&[Symbol], usize> = self
            .classes
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_slice(), i))
            .collect();
        let mut out = BTreeMap::new();
        for w in words {
            let key = zones.key_of(system, &w);
            let i = lookup[key.as_slice()];
            let count: f64 = self.base_counts[i].parse().unwrap_or(f64::INFINITY);
            out.insert(w, self.mass[i] / count);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanCertificate {
    pub c: f64,
    pub log_c: f64,
    pub measure: StageMeasure,
    pub max_violation: f64,
    /// Set when `c` underflows to zero: the stage certifies nothing.
    pub no_mass_certifiable: bool,
}

/// Optimal packing: a probability measure `mu` on depth-`D` cylinders and
/// the largest `c` with `mu(A) <= exp(weight_of(A, s)) / c` for every
/// weighted `n`-cylinder, `n` in `N..=n_max`.
pub fn frostman_lp(
    system: &ChainSystem,
    potential: &Potential,
    s: f64,
    stage: &StageSpec,
) -> Result<FrostmanCertificate> {
    frostman_lp_with(system, potential, s, stage, &Limits::default())
}

pub fn frostman_lp_with(
    system: &ChainSystem,
    potential: &Potential,
    s: f64,
    stage: &StageSpec,
    limits: &Limits,
) -> Result<FrostmanCertificate> {
    let lp = StageLp::build(system, potential, s, stage, limits)?;
    let sol = lp.packing().solve()?;
    let total: f64 = sol.x.iter().sum();
    let mass: Vec<f64> = sol.x.iter().map(|y| y / total).collect();
    let log_c = total.ln() + lp.scale;
    let c = log_c.exp();
    let measure = StageMeasure {
        depth: stage.depth,
        n_max: stage.n_max,
        classes: lp.classes.clone(),
        mass,
        base_counts: lp.base_counts.iter().map(BigUint::to_string).collect(),
    };
    let mut cert = FrostmanCertificate {
        c,
        log_c,
        measure,
        max_violation: 0.0,
        no_mass_certifiable: c <= 0.0 || c.is_nan(),
    };
    cert.max_violation = verify_frostman(system, potential, &cert, s, stage)?;
    Ok(cert)
}

/// `max_A (mu(A) - exp(weight_of(A, s)) / c)` over all weighted
/// `n`-cylinders of the stage.
pub fn verify_frostman(
    system: &ChainSystem,
    potential: &Potential,
    certificate: &FrostmanCertificate,
    s: f64,
    stage: &StageSpec,
) -> Result<f64> {
    stage.validate(system)?;
    let measure = &certificate.measure;
    let top = WindowProfile::new(system.weights(), measure.n_max).zones();
    let a1 = system.weights().first();
    let mut worst = f64::NEG_INFINITY;
    for n in stage.scales() {
        let profile = WindowProfile::new(system.weights(), n);
        let zones = profile.zones();
        let masses = masses_at_scale(system, measure, &top, &zones);
        for_each_mixed(system, &zones, |key| {
            let mu = masses.get(key).copied().unwrap_or(0.0);
            let log_bound = -s * n as f64
                + sup_birkhoff_of_key(system, potential, &profile, &zones, key) / a1
                - certificate.log_c;
            worst = worst.max(mu - log_bound.exp());
        });
    }
    Ok(worst)
}

fn masses_at_scale(
    system: &ChainSystem,
    measure: &StageMeasure,
    top: &Zones,
    zones: &Zones,
) -> BTreeMap<Word, f64> {
    let mut out: BTreeMap<Word, f64> = BTreeMap::new();
    for (key, &m) in measure.classes.iter().zip(&measure.mass) {
        let coarse: Word = (0..zones.len())
            .map(|j| system.project(top.level_at(j), zones.level_at(j), key[j]))
            .collect();
        *out.entry(coarse).or_insert(0.0) += m;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub max_violation: f64,
    pub holds: bool,
}

/// Relative duality tolerance `1e-8 max(1, primal)`.
pub const DUALITY_TOL: f64 = 1e-8;

/// Solves the covering and packing programs independently and compares.
pub fn duality_gap(
    system: &ChainSystem,
    potential: &Potential,
    s: f64,
    stage: &StageSpec,
) -> Result<DualityReport> {
    let limits = Limits::default();
    let lp = StageLp::build(system, potential, s, stage, &limits)?;
    let cover = lp.covering().solve()?;
    let scale = lp.scale.exp();
    let primal = cover.value * scale;
    let cert = frostman_lp_with(system, potential, s, stage, &limits)?;
    let dual = cert.c;
    let gap = (primal - dual).abs();
    let tolerance = DUALITY_TOL * primal.max(1.0);
    Ok(DualityReport {
        primal,
        dual,
        gap,
        tolerance,
        max_violation: cert.max_violation,
        holds: gap <= tolerance,
    })
}

impl FrostmanCertificate {
    /// Copy with `c` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.c *= factor;
        out.log_c += factor.ln();
        out
    }

    /// Summary statistics of the measure.
    pub fn summary(&self) -> MeasureSummary {
        let max = self.measure.mass.iter().copied().fold(0.0, f64::max);
        let min = self.measure.mass.iter().copied().fold(f64::INFINITY, f64::min);
        let entropy = -self
            .measure
            .mass
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|m| m * m.ln())
            .sum::<f64>();
        MeasureSummary {
            classes: self.measure.classes.len(),
            support: self.measure.support_size(),
            min_mass: min,
            max_mass: max,
            entropy,
            base_cylinders: self
                .measure
                .base_counts
                .iter()
                .map(|c| c.parse::<BigUint>().unwrap())
                .sum::<BigUint>()
                .to_f64()
                .unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub classes: usize,
    pub support: usize,
    pub min_mass: f64,
    pub max_mass: f64,
    pub entropy: f64,
    pub base_cylinders: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn uniform_examples() {
        let sys = fixtures::fs42();
        let zero = Potential::zero();
        let stage = StageSpec::new(&sys, 1, 1, Some(2)).unwrap();
        let cert = frostman_lp(&sys, &zero, 0.0, &stage).unwrap();
        assert!((cert.c - 8.0).abs() < 1e-9);
        assert!(cert.measure.mass.iter().all(|m| (m - 0.125).abs() < 1e-12));
        assert!(cert.max_violation <= 1e-10);
        let cert = frostman_lp(&sys, &zero, 8f64.ln(), &stage).unwrap();
        assert!((cert.c - 1.0).abs() < 1e-9);

        let full2 = fixtures::full2();
        let stage = StageSpec::new(&full2, 2, 2, Some(2)).unwrap();
        let cert = frostman_lp(&full2, &zero, 0.0, &stage).unwrap();
        assert!((cert.c - 4.0).abs() < 1e-9);
        assert!(cert.measure.mass.iter().all(|m| (m - 0.25).abs() < 1e-12));
    }

    #[test]
    fn doubled_c_violates() {
        let sys = fixtures::fs42();
        let zero = Potential::zero();
        let stage = StageSpec::new(&sys, 1, 1, Some(2)).unwrap();
        let cert = frostman_lp(&sys, &zero, 0.0, &stage).unwrap();
        let v = verify_frostman(&sys, &zero, &cert.scaled(2.0), 0.0, &stage).unwrap();
        // mu(A) = 1/8 against a bound of 1/16
        assert!((v - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn moved_mass_violates() {
        let sys = fixtures::fs42();
        let zero = Potential::zero();
        let stage = StageSpec::new(&sys, 1, 1, Some(2)).unwrap();
        let mut cert = frostman_lp(&sys, &zero, 0.0, &stage).unwrap();
        let moved = cert.measure.mass[0];
        cert.measure.mass[0] = 0.0;
        cert.measure.mass[1] += moved;
        let v = verify_frostman(&sys, &zero, &cert, 0.0, &stage).unwrap();
        assert!((v - moved).abs() < 1e-12);
    }

    #[test]
    fn base_weights_sum_to_one() {
        let sys = fixtures::fs42();
        let stage = StageSpec::new(&sys, 1, 2, Some(4)).unwrap();
        let cert = frostman_lp(&sys, &fixtures::f1(&sys), 1.0, &stage).unwrap();
        let w = cert.measure.base_weights(&sys, &Limits::default()).unwrap();
        assert_eq!(w.len(), 256);
        assert!((w.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_and_no_mass_flag() {
        let sys = fixtures::fs42();
        let f1 = fixtures::f1(&sys);
        let stage = StageSpec::new(&sys, 1, 2, None).unwrap();
        let r = duality_gap(&sys, &f1, 1.9, &stage).unwrap();
        assert!(r.holds, "{r:?}");
        let cert = frostman_lp(&sys, &f1, 1000.0, &stage).unwrap();
        assert!(cert.no_mass_certifiable);
        assert!(cert.log_c < -900.0);
    }
}
