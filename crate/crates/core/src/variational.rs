//! Both sides of the weighted variational principle: the objective
//! `sum_i a_i h(tau_{i-1} mu) + int f dmu` over Markov measures, its
//! maximization, the full-shift closed form, and sandwich reports.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{
    cover_single_scale_log_sum, pressure_bisect_with, BisectMode, Provenance, StageSpec,
};
use crate::cylinders::{oscillation, CoverFamily};
use crate::error::{Error, Result};
use crate::frostman::frostman_lp_with;
use crate::measures::{cover_from_partition, entropy, hm_entropy_bracket, integral, EntropyBracket, MarkovMeasure};
use crate::symbolic::{ChainSystem, Limits, Potential, Subshift, Symbol, Word};

/// Contribution of one level: `weight * h(tau mu)` with `h` bracketed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTerm {
    pub level: usize,
    pub weight: f64,
    pub entropy: EntropyBracket,
}

/// Bracketed objective value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub lower: f64,
    pub upper: f64,
    pub terms: Vec<LevelTerm>,
    pub integral: f64,
}

impl ObjectiveValue {
    fn assemble(terms: Vec<LevelTerm>, integral: f64) -> Self {
        let lower = terms.iter().map(|t| t.weight * t.entropy.lower).sum::<f64>() + integral;
        let upper = terms.iter().map(|t| t.weight * t.entropy.upper).sum::<f64>() + integral;
        ObjectiveValue {
            lower,
            upper,
            terms,
            integral,
        }
    }

    /// Objective with every bracket replaced by its midpoint.
    pub fn midpoint(&self) -> f64 {
        self.terms.iter().map(|t| t.weight * t.entropy.midpoint()).sum::<f64>() + self.integral
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `a_1 h(mu) + sum_{i >= 2} a_i [bracket of h(tau_{i-1} mu) at length L] + int f dmu`.
pub fn objective(
    system: &ChainSystem,
    potential: &Potential,
    markov: &MarkovMeasure,
    l: usize,
) -> Result<ObjectiveValue> {
    if l == 0 {
        return Err(Error::arg("L must be at least 1"));
    }
    let a = system.weights().as_f64();
    let mut terms = vec![LevelTerm {
        level: 0,
        weight: a[0],
        entropy: EntropyBracket::exact(entropy(markov), l),
    }];
    for (i, &w) in a.iter().enumerate().skip(1) {
        terms.push(LevelTerm {
            level: i,
            weight: w,
            entropy: hm_entropy_bracket(system, markov, i, l)?,
        });
    }
    Ok(ObjectiveValue::assemble(terms, integral(system, markov, potential)?))
}

/// `a_1 h(mu) + int f dmu`.
pub fn entropy_integral_value(system: &ChainSystem, potential: &Potential, markov: &MarkovMeasure) -> Result<f64> {
    Ok(system.weights().first() * entropy(markov) + integral(system, markov, potential)?)
}

/// Pressure of a chain of full shifts with a range-1 potential, folded
/// level by level: `v_1 = f`, `v_{i+1}(c) = A_i log sum_{b -> c} exp(v_i(b) / A_i)`
/// with `A_i = a_1 + ... + a_i`, and `P = A_k log sum_c exp(v_k(c) / A_k)`.
pub fn fullshift_closed_form(system: &ChainSystem, potential: &Potential) -> Result<f64> {
    if let Some(i) = system.levels().iter().position(|s| !s.is_full()) {
        return Err(Error::arg(format!("closed form needs full shifts, level {} is not", i + 1)));
    }
    let mut v = potential
        .unary_values(system.top().size())
        .ok_or_else(|| Error::arg("closed form needs a range-1 potential"))?;
    for (i, code) in system.codes().iter().enumerate() {
        if !code.is_onto(system.level(i), system.level(i + 1)) {
            return Err(Error::arg(format!("closed form needs onto codes, code {} is not", i + 1)));
        }
    }
    let a = system.weights().as_f64();
    let mut acc = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        acc += ai;
        let target = if i + 1 < a.len() {
            system.level(i + 1).size()
        } else {
            1
        };
        let mut folded = vec![Vec::new(); target];
        for (b, &vb) in v.iter().enumerate() {
            let c = if i + 1 < a.len() {
                system.codes()[i].image(b as Symbol) as usize
            } else {
                0
            };
            folded[c].push(vb / acc);
        }
        v = folded
            .into_iter()
            .map(|xs| acc * crate::cylinders::log_sum_exp(xs))
            .collect();
    }
    Ok(v[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub step: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            restarts: 8,
            iters: 500,
            seed: 0,
            step: 0.1,
        }
    }
}

/// Softmax coordinates for the rows of a Markov matrix supported on the
/// allowed transitions of a shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogitChart {
    size: usize,
    pairs: Vec<(Symbol, Symbol)>,
}

impl LogitChart {
    pub fn new(shift: &Subshift) -> Self {
        let pairs = (0..shift.size() as Symbol)
            .flat_map(|u| shift.successors(u).iter().map(move |&v| (u, v)))
            .collect();
        LogitChart {
            size: shift.size(),
            pairs,
        }
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(Symbol, Symbol)] {
        &self.pairs
    }

    pub fn transition(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.size]; self.size];
        let mut max = vec![f64::NEG_INFINITY; self.size];
        for (&(u, _), &t) in self.pairs.iter().zip(theta) {
            max[u as usize] = max[u as usize].max(t);
        }
        for (&(u, v), &t) in self.pairs.iter().zip(theta) {
            rows[u as usize][v as usize] = (t - max[u as usize]).exp();
        }
        for row in &mut rows {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        rows
    }

    pub fn markov(&self, shift: &Subshift, theta: &[f64]) -> Result<MarkovMeasure> {
        MarkovMeasure::new(shift, self.transition(theta))
    }

    /// `log P_uv` on allowed pairs (`-inf` where the measure has no mass).
    pub fn logits_of(&self, markov: &MarkovMeasure) -> Vec<f64> {
        self.pairs.iter().map(|&(u, v)| markov.p(u, v).ln()).collect()
    }
}

/// Gradient of `a_1 h + int f` with respect to the logits of `markov`
/// (potentials of range at most 2).
pub fn entropy_integral_gradient(
    system: &ChainSystem,
    potential: &Potential,
    markov: &MarkovMeasure,
) -> Result<Vec<f64>> {
    let shift = system.top();
    let n = shift.size();
    let a1 = system.weights().first();
    let phi = pair_values(shift, potential)?;
    let p = markov.transition();
    let pi = markov.stationary();
    let log_p = |u: usize, v: usize| if p[u][v] > 0.0 { p[u][v].ln() } else { 0.0 };
    let g: Vec<f64> = (0..n)
        .map(|u| (0..n).map(|v| p[u][v] * (phi[u][v] - a1 * log_p(u, v))).sum())
        .collect();
    // fundamental matrix Z = (I - P + 1 pi)^-1
    let m = DMatrix::from_fn(n, n, |u, v| (u == v) as u8 as f64 - p[u][v] + pi[v]);
    let z = m
        .try_inverse()
        .ok_or_else(|| Error::Measure("singular fundamental matrix".into()))?;
    let zg: Vec<f64> = (0..n).map(|v| (0..n).map(|w| z[(v, w)] * g[w]).sum()).collect();
    let dp = |u: usize, v: usize| pi[u] * (zg[v] + phi[u][v] - a1 * (log_p(u, v) + 1.0));
    let chart = LogitChart::new(shift);
    let row_mean: Vec<f64> = (0..n).map(|u| (0..n).map(|v| p[u][v] * dp(u, v)).sum()).collect();
    Ok(chart
        .pairs
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (u as usize, v as usize);
            p[u][v] * (dp(u, v) - row_mean[u])
        })
        .collect())
}

/// `f(uv)` as a matrix, for range 1 or 2.
fn pair_values(shift: &Subshift, potential: &Potential) -> Result<Vec<Vec<f64>>> {
    let n = shift.size();
    match potential.range() {
        1 => Ok((0..n)
            .map(|u| vec![potential.value(&[u as Symbol]); n])
            .collect()),
        2 => Ok((0..n)
            .map(|u| (0..n).map(|v| potential.value(&[u as Symbol, v as Symbol])).collect())
            .collect()),
        r => Err(Error::arg(format!("analytic gradient needs range <= 2, got {r}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub markov: MarkovMeasure,
    pub value: ObjectiveValue,
    /// Objective actually maximized (midpoint brackets).
    pub smooth_value: f64,
    pub grad_norm: f64,
    pub restart: usize,
    pub iterations: usize,
}

/// Final logits, smoothed objective, gradient norm and iteration count.
type AscentRun = (Vec<f64>, f64, f64, usize);

struct Ascent<'a> {
    system: &'a ChainSystem,
    potential: &'a Potential,
    chart: LogitChart,
    l: usize,
    analytic: bool,
    hidden: Vec<(usize, f64)>,
}

impl Ascent<'_> {
    fn markov(&self, theta: &[f64]) -> Result<MarkovMeasure> {
        self.chart.markov(self.system.top(), theta)
    }

    fn hidden_value(&self, markov: &MarkovMeasure) -> Result<f64> {
        let mut total = 0.0;
        for &(i, w) in &self.hidden {
            total += w * hm_entropy_bracket(self.system, markov, i, self.l)?.midpoint();
        }
        Ok(total)
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let m = self.markov(theta)?;
        Ok(entropy_integral_value(self.system, self.potential, &m)? + self.hidden_value(&m)?)
    }

    fn central_difference(&self, theta: &[f64], f: impl Fn(&MarkovMeasure) -> Result<f64>) -> Result<Vec<f64>> {
        const H: f64 = 1e-5;
        let mut out = Vec::with_capacity(theta.len());
        let mut probe = theta.to_vec();
        for k in 0..theta.len() {
            probe[k] = theta[k] + H;
            let up = f(&self.markov(&probe)?)?;
            probe[k] = theta[k] - H;
            let down = f(&self.markov(&probe)?)?;
            probe[k] = theta[k];
            out.push((up - down) / (2.0 * H));
        }
        Ok(out)
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let m = self.markov(theta)?;
        let mut g = if self.analytic {
            entropy_integral_gradient(self.system, self.potential, &m)?
        } else {
            self.central_difference(theta, |m| entropy_integral_value(self.system, self.potential, m))?
        };
        if !self.hidden.is_empty() {
            let h = self.central_difference(theta, |m| self.hidden_value(m))?;
            g.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        }
        Ok(g)
    }

    /// Backtracking gradient ascent; returns the final point, value,
    /// gradient norm and iteration count.
    fn run(&self, mut theta: Vec<f64>, opts: &OptimizeOptions) -> Result<AscentRun> {
        let mut value = self.value(&theta)?;
        let mut step = opts.step;
        let mut grad_norm = 0.0;
        let mut iterations = 0;
        for it in 0..opts.iters {
            iterations = it + 1;
            let g = self.gradient(&theta)?;
            let g2: f64 = g.iter().map(|x| x * x).sum();
            grad_norm = g2.sqrt();
            if grad_norm < 1e-10 {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t + step * d).collect();
                if let Ok(v) = self.value(&cand) {
                    if v >= value + 1e-4 * step * g2 {
                        theta = cand;
                        value = v;
                        step = (step * 2.0).min(1e3);
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok((theta, value, grad_norm, iterations))
    }
}

/// Multi-start gradient ascent over order-1 Markov measures on the top
/// shift. Restart 0 starts from uniform rows, restart `r` from logits drawn
/// with seed `seed + r`. Ties go to the lowest restart index.
pub fn optimize_markov(
    system: &ChainSystem,
    potential: &Potential,
    l: usize,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    if l == 0 {
        return Err(Error::arg("L must be at least 1"));
    }
    if opts.restarts == 0 {
        return Err(Error::arg("at least one restart is required"));
    }
    let a = system.weights().as_f64();
    let ascent = Ascent {
        system,
        potential,
        chart: LogitChart::new(system.top()),
        l,
        analytic: potential.range() <= 2,
        hidden: a
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| (i, w))
            .collect(),
    };
    let dim = ascent.chart.dim();
    let runs: Vec<Result<AscentRun>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let theta = if r == 0 {
                vec![0.0; dim]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
                (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
            };
            ascent.run(theta, opts)
        })
        .collect();
    let mut best: Option<(usize, AscentRun)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.1 > b.1) {
            best = Some((r, run));
        }
    }
    let (restart, (theta, smooth_value, grad_norm, iterations)) = best.expect("restarts >= 1");
    let markov = ascent.markov(&theta)?;
    let value = objective(system, potential, &markov, l)?;
    Ok(OptimizeResult {
        markov,
        value,
        smooth_value,
        grad_norm,
        restart,
        iterations,
    })
}

/// Partition of a level into classes of length-`len` words.
pub type LevelPartition = (usize, Vec<BTreeSet<Word>>);

/// Zeroth-symbol partition of every level.
pub fn zeroth_symbol_partitions(system: &ChainSystem) -> Vec<LevelPartition> {
    system
        .levels()
        .iter()
        .map(|s| (1, (0..s.size() as Symbol).map(|u| BTreeSet::from([vec![u]])).collect()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    /// Window ceilings: `sum_{i>=2} upper_i / n + |int f| / (a_1 n)`.
    pub ceiling: f64,
    /// Conditioning on the level-1 past: `(k - 1) log |A_1| / n`.
    pub truncation: f64,
    /// Bracket width, already absorbed by using the bracket's lower end.
    pub bracket: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub stage_upper: f64,
    pub objective: ObjectiveValue,
    pub epsilon: EpsilonReport,
    pub margin: f64,
    pub holds: bool,
}

/// Stage pressure of the covers built from `partitions` against the
/// bracketed objective of `markov`.
pub fn lower_bound_check(
    system: &ChainSystem,
    potential: &Potential,
    markov: &MarkovMeasure,
    partitions: &[LevelPartition],
    n: usize,
    l: usize,
) -> Result<LowerBoundReport> {
    if partitions.len() != system.depth() {
        return Err(Error::arg("one partition per level is required"));
    }
    let mut covers = Vec::new();
    for (i, (len, classes)) in partitions.iter().enumerate() {
        for class in classes {
            let first = class.iter().next().and_then(|w| w.first());
            if class.iter().any(|w| w.first() != first) {
                return Err(Error::arg(format!(
                    "partition of level {} does not refine the zeroth-symbol partition",
                    i + 1
                )));
            }
        }
        let singletons = classes.iter().all(|c| c.len() == 1);
        let built = if singletons && classes.len() == system.level(i).words(*len, &Limits::default())?.len() {
            crate::cylinders::Cover::cylinders(system.level(i), *len)?
        } else {
            cover_from_partition(system.level(i), *len, classes.clone(), 1.0)?.cover
        };
        covers.push(built);
    }
    let covers = CoverFamily::new(system, covers)?;
    let stage_upper =
        cover_single_scale_log_sum(system, &covers, potential, 0.0, n, &Limits::default())? / n as f64;
    let objective = objective(system, potential, markov, l)?;
    let nf = n as f64;
    let a1 = system.weights().first();
    let hidden_upper: f64 = objective.terms[1..].iter().map(|t| t.entropy.upper).sum();
    let ceiling = hidden_upper / nf + objective.integral.abs() / (a1 * nf);
    let truncation = (system.depth() - 1) as f64 * (system.top().size() as f64).ln() / nf;
    let total = ceiling + truncation;
    let margin = stage_upper - (objective.lower - total);
    Ok(LowerBoundReport {
        n,
        stage_upper,
        objective,
        epsilon: EpsilonReport {
            ceiling,
            truncation,
            bracket: 0.0,
            total,
        },
        margin,
        holds: margin >= -1e-9,
    })
}

/// Frostman certificate summary inside a [`VpReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub stage: StageSpec,
    pub s: f64,
    pub log_c: f64,
    pub max_violation: f64,
    pub no_mass_certifiable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpReport {
    pub optimizer: OptimizeResult,
    pub stage_upper: f64,
    pub upper_source: Provenance,
    /// Lower bound on the critical exponent of the certificate stage.
    pub frostman_lower: Option<f64>,
    pub certificate: Option<CertificateSummary>,
    pub closed_form: Option<f64>,
    pub oscillation_slack: f64,
    /// `stage_upper - optimizer`: finite-stage covering slack.
    pub gap: f64,
    pub sandwich: bool,
    pub closed_form_match: Option<bool>,
    pub upper_above_closed_form: Option<bool>,
    pub notes: Vec<String>,
}

impl VpReport {
    pub fn ok(&self) -> bool {
        self.sandwich
            && self.closed_form_match.unwrap_or(true)
            && self.upper_above_closed_form.unwrap_or(true)
            && self.certificate.as_ref().is_none_or(|c| c.max_violation <= 1e-10)
    }
}

/// Optimizer value, single-scale upper bound at `stage.n_max`, optional
/// Frostman certificate on `certificate_stage` at the upper estimate, and
/// the full-shift closed form when it applies.
pub fn vp_report(
    system: &ChainSystem,
    potential: &Potential,
    stage: &StageSpec,
    certificate_stage: Option<&StageSpec>,
    l: usize,
    opts: &OptimizeOptions,
) -> Result<VpReport> {
    let limits = Limits::default();
    let optimizer = optimize_markov(system, potential, l, opts)?;
    let bracket = pressure_bisect_with(system, potential, stage, BisectMode::SingleScale, &limits)?;
    let stage_upper = bracket.upper;
    let mut notes = Vec::new();
    let (certificate, frostman_lower) = match certificate_stage {
        Some(cs) => {
            let cert = frostman_lp_with(system, potential, stage_upper, cs, &limits)?;
            let scale = if cert.log_c >= 0.0 { cs.n_max } else { cs.min_n };
            let lower = (!cert.no_mass_certifiable).then(|| stage_upper + cert.log_c / scale as f64);
            (
                Some(CertificateSummary {
                    stage: *cs,
                    s: stage_upper,
                    log_c: cert.log_c,
                    max_violation: cert.max_violation,
                    no_mass_certifiable: cert.no_mass_certifiable,
                }),
                lower,
            )
        }
        None => (None, None),
    };
    let closed_form = match fullshift_closed_form(system, potential) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("no closed form: {e}"));
            None
        }
    };
    let zeroth = CoverFamily::cylinders(system, &vec![1; system.depth()])?;
    let oscillation_slack = 3.0 * oscillation(system, &zeroth, potential)?;
    let value = optimizer.value.midpoint();
    let gap = stage_upper - value;
    if gap > 1e-6 {
        notes.push(format!("single-scale upper exceeds the optimizer by {gap:.6e} at n = {}", stage.n_max));
    }
    Ok(VpReport {
        sandwich: optimizer.value.lower <= stage_upper + 1e-9,
        closed_form_match: closed_form.map(|c| (value - c).abs() <= 2e-3),
        upper_above_closed_form: closed_form.map(|c| stage_upper - c >= -1e-9),
        optimizer,
        stage_upper,
        upper_source: bracket.upper_source,
        frostman_lower,
        certificate,
        closed_form,
        oscillation_slack,
        gap,
        notes,
    })
}
