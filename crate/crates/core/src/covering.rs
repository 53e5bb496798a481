//! Finite-stage covering sums: the single-scale partition function, the
//! fractional covering LP over several scales, critical exponents by
//! bisection, and the power-rule comparison.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::cylinders::{
    count_mixed, for_each_mixed, log_sum_exp, subset_dp, sup_birkhoff_of_key, CoverFamily,
    LogValue, WindowProfile, Zones,
};
use crate::error::{Error, Result};
use crate::power::{power_join_identity_check, power_system, PowerJoinReport};
use crate::simplex::{LinearProgram, Relation, Sense};
use crate::symbolic::{sup_over_sets, ChainSystem, Limits, Potential, Symbol, SymbolSet, Word};

/// Where a reported number comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Lp,
    FrostmanLp,
    SingleScale,
    Optimizer,
    Sampled,
    Exact,
    None,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Lp => "lp",
            Provenance::FrostmanLp => "frostman-lp",
            Provenance::SingleScale => "single-scale",
            Provenance::Optimizer => "optimizer",
            Provenance::Sampled => "sampled",
            Provenance::Exact => "exact",
            Provenance::None => "none",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scales `N..=n_max` with covering constraints imposed on depth-`D`
/// level-1 cylinders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    #[serde(rename = "N")]
    pub min_n: usize,
    pub n_max: usize,
    pub depth: usize,
}

impl StageSpec {
    pub fn new(system: &ChainSystem, min_n: usize, n_max: usize, depth: Option<usize>) -> Result<Self> {
        let floor = system.window_lengths(n_max.max(1)).last().copied().unwrap_or(1);
        let stage = StageSpec {
            min_n,
            n_max,
            depth: depth.unwrap_or(floor),
        };
        stage.validate(system)?;
        Ok(stage)
    }

    /// Single scale `n` at the minimal depth.
    pub fn single(system: &ChainSystem, n: usize) -> Result<Self> {
        Self::new(system, n, n, None)
    }

    pub fn validate(&self, system: &ChainSystem) -> Result<()> {
        if self.min_n == 0 {
            return Err(Error::arg("N must be at least 1"));
        }
        if self.n_max < self.min_n {
            return Err(Error::arg(format!(
                "n_max = {} is below N = {}",
                self.n_max, self.min_n
            )));
        }
        let needed = *system.window_lengths(self.n_max).last().unwrap();
        if self.depth < needed {
            return Err(Error::arg(format!(
                "depth {} is below m_k(n_max) = {needed}",
                self.depth
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> std::ops::RangeInclusive<usize> {
        self.min_n..=self.n_max
    }
}

/// Lower and upper bounds on a pressure with the source of each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureBracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_source: Provenance,
    pub upper_source: Provenance,
    /// Final bisection interval when the upper value is a crossing point.
    pub crossing: Option<(f64, f64)>,
}

impl PressureBracket {
    pub fn upper_only(upper: f64, source: Provenance) -> Self {
        PressureBracket {
            lower: f64::NEG_INFINITY,
            upper,
            lower_source: Provenance::None,
            upper_source: source,
            crossing: None,
        }
    }

    pub fn is_consistent(&self, tol: f64) -> bool {
        self.lower <= self.upper + tol
    }
}

/// `log sum_A exp(-s n + sup_A S_{m_1} f / a_1)` over weighted `n`-cylinders.
pub fn single_scale_log_sum(system: &ChainSystem, potential: &Potential, s: f64, n: usize) -> Result<f64> {
    single_scale_log_sum_with(system, potential, s, n, &Limits::default())
}

pub fn single_scale_log_sum_with(
    system: &ChainSystem,
    potential: &Potential,
    s: f64,
    n: usize,
    limits: &Limits,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    Ok(log_sum_at_zero(system, potential, n, limits)? - s * n as f64)
}

fn log_sum_at_zero(system: &ChainSystem, potential: &Potential, n: usize, limits: &Limits) -> Result<f64> {
    let profile = WindowProfile::new(system.weights(), n);
    let zones = profile.zones();
    let a1 = system.weights().first();
    if let Some(values) = potential.unary_values(system.top().size()) {
        // range 1: the sup is the plain sum over the level-1 word
        let states = subset_dp(system, &zones, LogValue(0.0), |v, j, set| {
            if zones.level_at(j) == 0 {
                let u = set.iter().next().expect("level-1 positions are singletons");
                LogValue(v.0 + values[u as usize] / a1)
            } else {
                *v
            }
        });
        return Ok(log_sum_exp(states.into_iter().map(|(_, v)| v.0)));
    }
    limits.check_enumeration("single-scale sum", &count_mixed(system, &zones))?;
    let mut terms = Vec::new();
    for_each_mixed(system, &zones, |key| {
        terms.push(sup_birkhoff_of_key(system, potential, &profile, &zones, key) / a1);
    });
    Ok(log_sum_exp(terms))
}

/// `(1/n) log` of the single-scale sum at `s = 0`: the exponent at which
/// the stage-`n` sum equals one.
pub fn upper_pressure(system: &ChainSystem, potential: &Potential, n: usize) -> Result<f64> {
    Ok(single_scale_log_sum(system, potential, 0.0, n)? / n as f64)
}

/// Single-scale sum over the stage-`n` join of an arbitrary cover family,
/// with `sup_U S_{m_1} f` taken over each join element.
pub fn cover_single_scale_log_sum(
    system: &ChainSystem,
    covers: &CoverFamily,
    potential: &Potential,
    s: f64,
    n: usize,
    limits: &Limits,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    let profile = WindowProfile::new(system.weights(), n);
    let a1 = system.weights().first();
    let horizon = profile.m[0];
    let shift = system.top();
    let total = if covers.all_cylinder() && covers.join_ends(&profile) == profile.m {
        log_sum_at_zero(system, potential, n, limits)?
    } else if covers.all_cylinder() {
        let zones = Zones::from_ends(&covers.join_ends(&profile));
        limits.check_enumeration("cover join elements", &count_mixed(system, &zones))?;
        let mut terms = Vec::new();
        for_each_mixed(system, &zones, |key| {
            let sets = zones.constraints(system, key, 0);
            terms.push(sup_over_sets(shift, potential, &sets, horizon) / a1);
        });
        log_sum_exp(terms)
    } else {
        if !covers.is_partition() {
            return Err(Error::arg("cover sums need partition covers or cylinder covers"));
        }
        // group level-1 words by their join labels and take the max of S f
        let needed = covers.prefix_needed(&profile);
        let len = needed.max(horizon + potential.range() - 1).max(1);
        let words = shift.words(len, limits)?;
        let mut best: HashMap<Vec<Vec<u32>>, f64> = HashMap::new();
        for w in &words {
            let el = crate::cylinders::join_element_of(system, covers, n, w)?;
            let v = potential.birkhoff_sum(w, horizon);
            let e = best.entry(el.choices).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
        log_sum_exp(best.values().map(|v| v / a1))
    };
    Ok(total - s * n as f64)
}

/// Scaled column costs are capped at `exp(MAX_LOG_COST)`.
const MAX_LOG_COST: f64 = 600.0;

/// One LP column: a weighted `n`-cylinder and its log cost.
#[derive(Clone, Debug)]
pub struct StageColumn {
    pub n: usize,
    pub key: Word,
    pub log_cost: f64,
}

/// Row classes are weighted `n_max`-cylinders: every depth-`D` base
/// cylinder in a class lies in exactly the same columns.
#[derive(Clone, Debug)]
pub struct StageLp {
    pub stage: StageSpec,
    pub s: f64,
    pub columns: Vec<StageColumn>,
    pub classes: Vec<Word>,
    /// Number of depth-`D` base cylinders in each class.
    pub base_counts: Vec<BigUint>,
    /// Columns containing each class.
    pub incidence: Vec<Vec<usize>>,
    /// Costs are `exp(log_cost - scale)` inside the LP, `scale` being the
    /// smallest log cost.
    pub scale: f64,
    pub base_rows: BigUint,
}

impl StageLp {
    pub fn build(system: &ChainSystem, potential: &Potential, s: f64, stage: &StageSpec, limits: &Limits) -> Result<Self> {
        stage.validate(system)?;
        let shift = system.top();
        let base_rows = shift.word_count(stage.depth)?;
        let scales = BigUint::from(stage.n_max - stage.min_n + 1);
        let nonzeros = &base_rows * &scales;
        if nonzeros > BigUint::from(limits.lp_nonzeros) {
            return Err(Error::CapExceeded {
                what: "LP nonzeros",
                needed: nonzeros.to_string(),
                cap: limits.lp_nonzeros,
            });
        }
        let a1 = system.weights().first();
        let mut columns = Vec::new();
        let mut index: HashMap<(usize, Word), usize> = HashMap::new();
        let mut zones_at = Vec::new();
        for n in stage.scales() {
            let profile = WindowProfile::new(system.weights(), n);
            let zones = profile.zones();
            limits.check_enumeration("LP columns", &count_mixed(system, &zones))?;
            for_each_mixed(system, &zones, |key| {
                let sup = sup_birkhoff_of_key(system, potential, &profile, &zones, key);
                index.insert((n, key.to_vec()), columns.len());
                columns.push(StageColumn {
                    n,
                    key: key.to_vec(),
                    log_cost: -s * n as f64 + sup / a1,
                });
            });
            zones_at.push(zones);
        }
        let top_zones = zones_at.last().unwrap().clone();
        let mut classes = Vec::new();
        for_each_mixed(system, &top_zones, |key| classes.push(key.to_vec()));
        let incidence = classes
            .iter()
            .map(|key| {
                stage
                    .scales()
                    .zip(&zones_at)
                    .map(|(n, zones)| {
                        let coarse: Word = (0..zones.len())
                            .map(|j| system.project(top_zones.level_at(j), zones.level_at(j), key[j]))
                            .collect();
                        index[&(n, coarse)]
                    })
                    .collect()
            })
            .collect();
        let base_counts = classes
            .iter()
            .map(|key| base_count(system, &top_zones, key, stage.depth))
            .collect();
        // normalize by the cheapest column; optimal covers lean on it
        let scale = columns
            .iter()
            .map(|c| c.log_cost)
            .fold(f64::INFINITY, f64::min);
        Ok(StageLp {
            stage: *stage,
            s,
            columns,
            classes,
            base_counts,
            incidence,
            scale,
            base_rows,
        })
    }

    fn scaled_costs(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| (c.log_cost - self.scale).min(MAX_LOG_COST).exp())
            .collect()
    }

    /// `min sum_j cost_j c_j` with every class covered at least once.
    pub fn covering(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Minimize, self.scaled_costs());
        for cols in &self.incidence {
            lp.add(cols.iter().map(|&j| (j, 1.0)).collect(), Relation::Ge, 1.0);
        }
        lp
    }

    /// `max sum_K y_K` with the mass inside every column at most its cost.
    pub fn packing(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0; self.classes.len()]);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.columns.len()];
        for (k, cols) in self.incidence.iter().enumerate() {
            for &j in cols {
                rows[j].push((k, 1.0));
            }
        }
        for (row, cost) in rows.into_iter().zip(self.scaled_costs()) {
            lp.add(row, Relation::Le, cost);
        }
        lp
    }
}

/// Number of level-1 words of length `depth` inside the class `key`.
fn base_count(system: &ChainSystem, zones: &Zones, key: &[Symbol], depth: usize) -> BigUint {
    let shift = system.top();
    let sets = zones.constraints(system, key, 0);
    let mut counts: Vec<BigUint> = (0..shift.size() as Symbol)
        .map(|u| BigUint::from(sets.first().is_none_or(|s| s.contains(u)) as u32))
        .collect();
    for t in 1..depth {
        let mut next = vec![BigUint::from(0u32); shift.size()];
        for (u, c) in counts.iter().enumerate() {
            if c == &BigUint::from(0u32) {
                continue;
            }
            for &v in shift.successors(u as Symbol) {
                if sets.get(t).is_none_or(|s: &SymbolSet| s.contains(v)) {
                    next[v as usize] += c;
                }
            }
        }
        counts = next;
    }
    counts.into_iter().sum()
}

/// Value of the fractional covering LP together with its log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpValue {
    pub value: f64,
    pub log_value: f64,
    pub columns: usize,
    pub row_classes: usize,
    pub base_rows: String,
    pub pivots: usize,
}

pub fn w_lp_stage(system: &ChainSystem, potential: &Potential, s: f64, stage: &StageSpec) -> Result<f64> {
    Ok(w_lp_stage_with(system, potential, s, stage, &Limits::default())?.value)
}

pub fn w_lp_stage_with(
    system: &ChainSystem,
    potential: &Potential,
    s: f64,
    stage: &StageSpec,
    limits: &Limits,
) -> Result<LpValue> {
    let lp = StageLp::build(system, potential, s, stage, limits)?;
    let sol = lp.covering().solve()?;
    Ok(LpValue {
        value: sol.value * lp.scale.exp(),
        log_value: sol.value.ln() + lp.scale,
        columns: lp.columns.len(),
        row_classes: lp.classes.len(),
        base_rows: lp.base_rows.to_string(),
        pivots: sol.pivots,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BisectMode {
    SingleScale,
    Lp,
}

/// Tolerance on `s` for [`pressure_bisect`].
pub const BISECT_TOL: f64 = 1e-10;

/// Bisects `s` until the log stage value crosses zero. Single-scale mode
/// uses the scale `stage.n_max`.
pub fn pressure_bisect(
    system: &ChainSystem,
    potential: &Potential,
    stage: &StageSpec,
    mode: BisectMode,
) -> Result<PressureBracket> {
    pressure_bisect_with(system, potential, stage, mode, &Limits::default())
}

pub fn pressure_bisect_with(
    system: &ChainSystem,
    potential: &Potential,
    stage: &StageSpec,
    mode: BisectMode,
    limits: &Limits,
) -> Result<PressureBracket> {
    stage.validate(system)?;
    let (source, eval): (Provenance, Box<dyn Fn(f64) -> Result<f64>>) = match mode {
        BisectMode::SingleScale => {
            let n = stage.n_max;
            let at_zero = log_sum_at_zero(system, potential, n, limits)?;
            (
                Provenance::SingleScale,
                Box::new(move |s| Ok(at_zero - s * n as f64)),
            )
        }
        BisectMode::Lp => (
            Provenance::Lp,
            Box::new(|s| Ok(w_lp_stage_with(system, potential, s, stage, limits)?.log_value)),
        ),
    };
    let (lo, hi) = initial_interval(system, potential);
    let (lo, hi) = bisect_decreasing(lo, hi, &*eval)?;
    Ok(PressureBracket {
        lower: f64::NEG_INFINITY,
        upper: 0.5 * (lo + hi),
        lower_source: Provenance::None,
        upper_source: source,
        crossing: Some((lo, hi)),
    })
}

/// Starting bracket for the crossing of a stage value.
pub fn initial_interval(system: &ChainSystem, potential: &Potential) -> (f64, f64) {
    let a = system.weights().as_f64();
    let a1 = a[0];
    let log_alpha = (system.largest_alphabet() as f64).ln();
    let (fmin, fmax) = potential.bounds(system.top());
    let sum_a: f64 = a.iter().sum();
    let mut acc = 0.0;
    let nested: f64 = a
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .sum();
    (
        fmin / a1 - log_alpha * sum_a / a1,
        fmax / a1 + nested * log_alpha,
    )
}

/// Shrinks `[lo, hi]` around the zero of a nonincreasing `g`, widening
/// first if needed. Asserts monotonicity on every evaluation.
fn bisect_decreasing(mut lo: f64, mut hi: f64, g: &dyn Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    let mut width = (hi - lo).max(1.0);
    let mut widen = 0;
    while g_lo < 0.0 || g_hi > 0.0 {
        widen += 1;
        if widen > 60 {
            return Err(Error::arg("stage value never crosses zero"));
        }
        if g_lo < 0.0 {
            lo -= width;
            g_lo = g(lo)?;
        }
        if g_hi > 0.0 {
            hi += width;
            g_hi = g(hi)?;
        }
        width *= 2.0;
    }
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid > g_lo + 1e-9 * g_lo.abs().max(1.0) || g_mid < g_hi - 1e-9 * g_hi.abs().max(1.0) {
            return Err(Error::arg(format!(
                "stage value is not monotone in s near {mid}"
            )));
        }
        if g_mid > 0.0 {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaWReport {
    pub s: f64,
    pub lp_value: f64,
    /// Single-scale set-cover sums, one per scale.
    pub per_scale: Vec<(usize, f64)>,
    pub set_cover_value: f64,
    pub holds: bool,
}

/// Fractional covering value against the best single-scale set cover.
pub fn lambda_vs_w_check(
    system: &ChainSystem,
    potential: &Potential,
    s: f64,
    stage: &StageSpec,
) -> Result<LambdaWReport> {
    let lp = w_lp_stage_with(system, potential, s, stage, &Limits::default())?;
    let per_scale = stage
        .scales()
        .map(|n| Ok((n, single_scale_log_sum(system, potential, s, n)?.exp())))
        .collect::<Result<Vec<_>>>()?;
    let set_cover_value = per_scale.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let holds = lp.value <= set_cover_value * (1.0 + 1e-9) + 1e-300;
    Ok(LambdaWReport {
        s,
        lp_value: lp.value,
        per_scale,
        set_cover_value,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRuleRow {
    pub n: usize,
    /// `upper_pressure(T, n M)`.
    pub original: f64,
    /// `(1/M) upper_pressure(T^M, n)`.
    pub power: f64,
    pub difference: f64,
    pub slack: f64,
    pub slack_s_term: f64,
    pub slack_f_term: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRuleReport {
    pub m: usize,
    pub joins: Vec<PowerJoinReport>,
    pub rows: Vec<PowerRuleRow>,
    pub ok: bool,
}

/// Checks `P(T) = P(T^M, S_M f) / M` at finite stages: the exact join
/// identity for each `n`, and stage estimates within the additive slack
/// `[M s (1/a_1 + 1) + ceil(a_1 M + M) ||f|| / a_1] / n`.
pub fn power_rule_check(
    system: &ChainSystem,
    potential: &Potential,
    covers: &CoverFamily,
    m: usize,
    n_list: &[usize],
) -> Result<PowerRuleReport> {
    if m == 0 {
        return Err(Error::arg("M must be at least 1"));
    }
    let power = power_system(system, potential, m)?;
    let a1 = system.weights().first();
    let norm = potential.sup_norm(system.top());
    let mut joins = Vec::new();
    let mut rows = Vec::new();
    for &n in n_list {
        joins.push(power_join_identity_check(system, covers, m, n)?);
        let original = upper_pressure(system, potential, n * m)?;
        let power_value = upper_pressure(&power.system, &power.potential, n)? / m as f64;
        let mf = m as f64;
        let s_term = mf * original.abs() * (1.0 / a1 + 1.0) / n as f64;
        let f_term = (a1 * mf + mf).ceil() * norm / a1 / n as f64;
        let slack = if m == 1 { 1e-12 } else { s_term + f_term };
        let difference = (original - power_value).abs();
        rows.push(PowerRuleRow {
            n,
            original,
            power: power_value,
            difference,
            slack,
            slack_s_term: s_term,
            slack_f_term: f_term,
            within: difference <= slack,
        });
    }
    let ok = joins.iter().all(|j| j.equal) && rows.iter().all(|r| r.within);
    Ok(PowerRuleReport { m, joins, rows, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinders::{enumerate_weighted_cylinders, weight_of};
    use crate::fixtures;
    use std::f64::consts::LN_2;

    fn brute_log_sum(system: &ChainSystem, potential: &Potential, s: f64, n: usize) -> f64 {
        let cyls = enumerate_weighted_cylinders(system, n, &Limits::default()).unwrap();
        log_sum_exp(cyls.iter().map(|c| weight_of(system, potential, c, s).unwrap()))
    }

    #[test]
    fn single_scale_examples() {
        let sys = fixtures::fs42();
        let f1 = fixtures::f1(&sys);
        let zero = Potential::zero();
        assert!((single_scale_log_sum(&sys, &zero, 0.0, 2).unwrap() - 32f64.ln()).abs() < 1e-12);
        assert!((single_scale_log_sum(&sys, &f1, 0.0, 2).unwrap() - 50f64.ln()).abs() < 1e-12);
        let big = single_scale_log_sum(&sys, &f1, 1e3, 2).unwrap();
        let bigger = single_scale_log_sum(&sys, &f1, 1e4, 2).unwrap();
        assert!(bigger < big && big < -1e3);
    }

    #[test]
    fn dp_matches_enumeration() {
        for (_, sys) in fixtures::all() {
            let f = fixtures::f1(&sys);
            for n in 1..=5 {
                let dp = single_scale_log_sum(&sys, &f, 0.3, n).unwrap();
                let brute = brute_log_sum(&sys, &f, 0.3, n);
                assert!((dp - brute).abs() < 1e-12, "n={n}: {dp} vs {brute}");
            }
        }
    }

    #[test]
    fn upper_pressure_closed_forms() {
        let sys = fixtures::fs42();
        let p0 = upper_pressure(&sys, &Potential::zero(), 10).unwrap();
        assert!((p0 - 2.5 * LN_2).abs() < 1e-12);
        let p1 = upper_pressure(&sys, &fixtures::f1(&sys), 10).unwrap();
        assert!((p1 - (5f64.ln() + 0.5 * LN_2)).abs() < 1e-12);
        let full2 = fixtures::full2();
        for n in 1..6 {
            assert!((upper_pressure(&full2, &Potential::zero(), n).unwrap() - LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_agrees_with_direct_value() {
        let sys = fixtures::fs42();
        let f1 = fixtures::f1(&sys);
        let stage = StageSpec::single(&sys, 10).unwrap();
        let b = pressure_bisect(&sys, &f1, &stage, BisectMode::SingleScale).unwrap();
        let direct = upper_pressure(&sys, &f1, 10).unwrap();
        assert!((b.upper - direct).abs() < 1e-9);
        assert_eq!(b.upper_source, Provenance::SingleScale);

        let gm = fixtures::golden_mean();
        let stage = StageSpec::single(&gm, 16).unwrap();
        let b = pressure_bisect(&gm, &Potential::zero(), &stage, BisectMode::SingleScale).unwrap();
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((b.upper - golden).abs() < 0.05);
    }

    #[test]
    fn lp_small_stages() {
        let sys = fixtures::fs42();
        let zero = Potential::zero();
        let stage = StageSpec::new(&sys, 1, 1, Some(2)).unwrap();
        assert!((w_lp_stage(&sys, &zero, 0.0, &stage).unwrap() - 8.0).abs() < 1e-9);
        assert!((w_lp_stage(&sys, &zero, 8f64.ln(), &stage).unwrap() - 1.0).abs() < 1e-9);
        let full2 = fixtures::full2();
        let stage = StageSpec::new(&full2, 2, 2, Some(2)).unwrap();
        assert!((w_lp_stage(&full2, &zero, 0.0, &stage).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn stage_validation() {
        let sys = fixtures::fs42();
        assert!(StageSpec::new(&sys, 3, 2, None).is_err());
        assert!(StageSpec::new(&sys, 1, 2, Some(2)).is_err());
        assert!(StageSpec::new(&sys, 0, 2, None).is_err());
        let limits = Limits { lp_nonzeros: 10, ..Limits::default() };
        let stage = StageSpec::new(&sys, 1, 2, None).unwrap();
        assert!(matches!(
            w_lp_stage_with(&sys, &Potential::zero(), 0.0, &stage, &limits),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn lp_below_set_cover() {
        let sys = fixtures::fs42();
        let stage = StageSpec::new(&sys, 2, 2, None).unwrap();
        let r = lambda_vs_w_check(&sys, &Potential::zero(), 1.0, &stage).unwrap();
        assert!(r.holds && r.lp_value.is_finite());
        // single scale: columns are disjoint, so the LP is the set cover
        assert!((r.lp_value - r.set_cover_value).abs() < 1e-9 * r.set_cover_value);
        let stage = StageSpec::new(&sys, 1, 3, None).unwrap();
        let f1 = fixtures::f1(&sys);
        for s in [0.0, 1.0, 1.9, 40.0] {
            let r = lambda_vs_w_check(&sys, &f1, s, &stage).unwrap();
            assert!(r.holds, "s={s}: {r:?}");
        }
    }

    #[test]
    fn cover_sum_with_zeroth_symbol_covers_is_the_cylinder_sum() {
        for (_, sys) in fixtures::all() {
            let f = fixtures::f1(&sys);
            let ones = vec![1; sys.depth()];
            let covers = CoverFamily::cylinders(&sys, &ones).unwrap();
            for n in 1..4 {
                let a = cover_single_scale_log_sum(&sys, &covers, &f, 0.0, n, &Limits::default()).unwrap();
                let b = single_scale_log_sum(&sys, &f, 0.0, n).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn power_rule_fs42() {
        let sys = fixtures::fs42();
        let covers = CoverFamily::cylinders(&sys, &[1, 1]).unwrap();
        for f in [Potential::zero(), fixtures::f1(&sys)] {
            let r = power_rule_check(&sys, &f, &covers, 2, &[6]).unwrap();
            assert!(r.ok, "{r:?}");
            let r = power_rule_check(&sys, &f, &covers, 1, &[3]).unwrap();
            assert!(r.ok && r.rows[0].difference < 1e-12);
        }
    }
}
