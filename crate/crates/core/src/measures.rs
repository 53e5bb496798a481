//! Markov measures on the top level, their pushforwards, weighted-cylinder
//! masses and the weighted Shannon-McMillan-Breiman rates, plus arbitrary
//! (non-invariant) word distributions for the two averaging lemmas.
//!
//! Levels are 0-based: level 0 is the top shift `X_1`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cylinders::{count_mixed, Cover, WeightedCylinder, WindowProfile, Zones};
use crate::error::{Error, Result};
use crate::symbolic::{ChainSystem, Limits, Potential, Subshift, Symbol, SymbolSet, Word};

/// Row sums and the stationary fixed point must hold to this accuracy.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Stationary order-1 Markov measure with irreducible support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovMeasure {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovMeasure {
    pub fn new(shift: &Subshift, transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = shift.size();
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::Measure(format!("transition matrix must be {n}x{n}")));
        }
        for (u, row) in transition.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Measure(format!("row {u} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Measure(format!("row {u} sums to {sum}")));
            }
            for (v, &p) in row.iter().enumerate() {
                if p > 0.0 && !shift.is_allowed(u as Symbol, v as Symbol) {
                    return Err(Error::Measure(format!(
                        "transition {}{} is forbidden in the shift",
                        shift.alphabet().symbol(u as Symbol),
                        shift.alphabet().symbol(v as Symbol)
                    )));
                }
            }
        }
        if !support_irreducible(&transition) {
            return Err(Error::Measure("support of the transition matrix is reducible".into()));
        }
        let stationary = solve_stationary(&transition)?;
        Ok(MarkovMeasure {
            transition,
            stationary,
        })
    }

    /// I.i.d. measure with marginal `p` (needs a full shift and `p > 0`).
    pub fn bernoulli(shift: &Subshift, p: &[f64]) -> Result<Self> {
        if p.len() != shift.size() {
            return Err(Error::Measure("one probability per symbol is required".into()));
        }
        Self::new(shift, vec![p.to_vec(); shift.size()])
    }

    /// Uniform choice among allowed successors.
    pub fn uniform(shift: &Subshift) -> Result<Self> {
        let rows = (0..shift.size() as Symbol)
            .map(|u| {
                let succ = shift.successors(u);
                let mut row = vec![0.0; shift.size()];
                for &v in succ {
                    row[v as usize] = 1.0 / succ.len() as f64;
                }
                row
            })
            .collect();
        Self::new(shift, rows)
    }

    /// Measure of maximal entropy (Parry measure) of an irreducible shift.
    pub fn parry(shift: &Subshift) -> Result<Self> {
        let n = shift.size();
        let a = DMatrix::from_fn(n, n, |u, v| if shift.is_allowed(u as Symbol, v as Symbol) { 1.0 } else { 0.0 });
        // power iteration on (A + I) for the right Perron vector
        let shifted = &a + DMatrix::identity(n, n);
        let mut r = DVector::from_element(n, 1.0);
        for _ in 0..10_000 {
            let next: DVector<f64> = &shifted * &r;
            let next: DVector<f64> = &next / next.norm();
            if (&next - &r).amax() < 1e-15 {
                r = next;
                break;
            }
            r = next;
        }
        let lambda = (&a * &r)[0] / r[0];
        let rows = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| a[(u, v)] * r[v] / (lambda * r[u]))
                    .collect::<Vec<_>>()
            })
            .map(|row: Vec<f64>| {
                let s: f64 = row.iter().sum();
                row.into_iter().map(|p| p / s).collect()
            })
            .collect();
        Self::new(shift, rows)
    }

    /// Random rows: flat Dirichlet weights on allowed successors, raised to
    /// `sharpness` to vary how concentrated the rows are.
    pub fn random(shift: &Subshift, rng: &mut impl Rng, sharpness: f64) -> Result<Self> {
        let rows = (0..shift.size() as Symbol)
            .map(|u| random_row(shift, u, rng, sharpness))
            .collect();
        Self::new(shift, rows)
    }

    pub fn size(&self) -> usize {
        self.stationary.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn p(&self, u: Symbol, v: Symbol) -> f64 {
        self.transition[u as usize][v as usize]
    }

    /// All rows equal: the measure is i.i.d.
    pub fn is_bernoulli(&self) -> bool {
        self.transition
            .iter()
            .all(|row| row.iter().zip(&self.transition[0]).all(|(a, b)| (a - b).abs() <= 1e-15))
    }

    /// `mu([w])`.
    pub fn word_prob(&self, w: &[Symbol]) -> f64 {
        match w.first() {
            None => 1.0,
            Some(&u) => {
                self.stationary[u as usize] * w.windows(2).map(|p| self.p(p[0], p[1])).product::<f64>()
            }
        }
    }

    /// `max |pi P - pi|`.
    pub fn stationary_residual(&self) -> f64 {
        let n = self.size();
        (0..n)
            .map(|v| {
                let s: f64 = (0..n).map(|u| self.stationary[u] * self.transition[u][v]).sum();
                (s - self.stationary[v]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Draws a word of length `len` from the stationary chain.
    pub fn sample(&self, len: usize, rng: &mut impl Rng) -> Word {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut u = draw(&self.stationary, rng);
        out.push(u as Symbol);
        while out.len() < len {
            u = draw(&self.transition[u], rng);
            out.push(u as Symbol);
        }
        out
    }
}

fn random_row(shift: &Subshift, u: Symbol, rng: &mut impl Rng, sharpness: f64) -> Vec<f64> {
    let mut row = vec![0.0; shift.size()];
    for &v in shift.successors(u) {
        let e: f64 = -(1.0 - rng.random::<f64>()).ln();
        row[v as usize] = e.powf(sharpness).max(1e-6);
    }
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= s);
    row
}

fn draw(p: &[f64], rng: &mut impl Rng) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if x < acc {
            return i;
        }
    }
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0)
}

fn support_irreducible(p: &[Vec<f64>]) -> bool {
    let n = p.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let w = if forward { p[u][v] } else { p[v][u] };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().all(|&b| b)
    };
    reach(true) && reach(false)
}

/// Solves `pi (P - I) = 0`, `sum pi = 1` by LU.
fn solve_stationary(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    let mut a = DMatrix::from_fn(n, n, |i, j| p[j][i] - if i == j { 1.0 } else { 0.0 });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mut pi = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Measure("singular stationary system".into()))?;
    // one step of iterative refinement
    let r = &b - &a * &pi;
    if let Some(d) = a.lu().solve(&r) {
        pi += d;
    }
    let pi: Vec<f64> = pi.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.into_iter().map(|x| x / s).collect();
    let residual = (0..n)
        .map(|v| ((0..n).map(|u| pi[u] * p[u][v]).sum::<f64>() - pi[v]).abs())
        .fold(0.0, f64::max);
    if residual > STOCHASTIC_TOL {
        return Err(Error::Measure(format!("stationary residual {residual:.2e}")));
    }
    Ok(pi)
}

pub fn stationary(markov: &MarkovMeasure) -> &[f64] {
    markov.stationary()
}

/// `-sum_u pi_u sum_v P_uv log P_uv`.
pub fn entropy(markov: &MarkovMeasure) -> f64 {
    markov
        .transition
        .iter()
        .zip(&markov.stationary)
        .map(|(row, &pi)| pi * shannon(row.iter().copied()))
        .sum()
}

/// Shannon entropy in nats of a (sub)probability vector.
pub fn shannon(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter().filter(|&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// Forward vectors `alpha(u) = mu([y] and x_{L-1} = u)` for every level
/// word `y` of length `len` with positive mass, in lexicographic order.
fn forward_words(
    system: &ChainSystem,
    markov: &MarkovMeasure,
    level: usize,
    len: usize,
    start: &[f64],
    visit: &mut impl FnMut(&[Symbol], &[f64]),
) {
    let fibers = fibers(system, level);
    let mut word = Vec::with_capacity(len);
    for (b, fiber) in fibers.iter().enumerate() {
        let mut alpha = vec![0.0; markov.size()];
        let mut any = false;
        for u in fiber.iter() {
            alpha[u as usize] = start[u as usize];
            any |= start[u as usize] > 0.0;
        }
        if !any {
            continue;
        }
        word.push(b as Symbol);
        forward_dfs(markov, &fibers, len, &mut word, &alpha, visit);
        word.pop();
    }
}

fn forward_dfs(
    markov: &MarkovMeasure,
    fibers: &[SymbolSet],
    len: usize,
    word: &mut Word,
    alpha: &[f64],
    visit: &mut impl FnMut(&[Symbol], &[f64]),
) {
    if word.len() == len {
        visit(word, alpha);
        return;
    }
    for (b, fiber) in fibers.iter().enumerate() {
        let mut next = vec![0.0; alpha.len()];
        let mut any = false;
        for v in fiber.iter() {
            let s: f64 = alpha
                .iter()
                .enumerate()
                .map(|(u, a)| a * markov.transition[u][v as usize])
                .sum();
            next[v as usize] = s;
            any |= s > 0.0;
        }
        if !any {
            continue;
        }
        word.push(b as Symbol);
        forward_dfs(markov, fibers, len, word, &next, visit);
        word.pop();
    }
}

/// Level-1 symbols over each level-`level` symbol.
fn fibers(system: &ChainSystem, level: usize) -> Vec<SymbolSet> {
    let top = system.top().size();
    let mut out = vec![SymbolSet::empty(top); system.level(level).size()];
    for u in 0..top as Symbol {
        out[system.project(0, level, u) as usize].insert(u);
    }
    out
}

/// Exact distribution of level-`level` words of length `len` under the
/// pushforward of `markov`, by forward dynamic programming over preimages.
pub fn pushforward_block_dist(
    system: &ChainSystem,
    markov: &MarkovMeasure,
    level: usize,
    len: usize,
) -> Result<Vec<(Word, f64)>> {
    check_level(system, level, len)?;
    Limits::default().check_enumeration("pushforward words", &system.level(level).word_count(len)?)?;
    let mut out = Vec::new();
    forward_words(system, markov, level, len, markov.stationary(), &mut |w, a| {
        out.push((w.to_vec(), a.iter().sum()))
    });
    Ok(out)
}

fn check_level(system: &ChainSystem, level: usize, len: usize) -> Result<()> {
    if level >= system.depth() {
        return Err(Error::arg(format!("level {level} out of range")));
    }
    if len == 0 {
        return Err(Error::arg("block length must be at least 1"));
    }
    Ok(())
}

/// `lower <= h(tau mu) <= upper` from conditional block entropies with
/// `L` conditioning symbols.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBracket {
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "L")]
    pub l: usize,
}

impl EntropyBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn exact(value: f64, l: usize) -> Self {
        EntropyBracket {
            lower: value,
            upper: value,
            l,
        }
    }
}

/// `upper = H(Y_{L+1} | Y_1..Y_L)`, `lower = H(Y_{L+1} | Y_1..Y_L, X_1)`
/// where `Y = tau x` and `X_1` is the level-1 symbol at the first time.
pub fn hm_entropy_bracket(
    system: &ChainSystem,
    markov: &MarkovMeasure,
    level: usize,
    l: usize,
) -> Result<EntropyBracket> {
    check_level(system, level, l)?;
    Limits::default()
        .check_enumeration("pushforward words", &system.level(level).word_count(l + 1)?)?;
    let block_entropy = |len: usize, start: &[f64]| {
        let mut h = 0.0;
        forward_words(system, markov, level, len, start, &mut |_, a| {
            let p: f64 = a.iter().sum();
            if p > 0.0 {
                h -= p * p.ln();
            }
        });
        h
    };
    let pi = markov.stationary();
    let upper = block_entropy(l + 1, pi) - block_entropy(l, pi);
    let mut lower = 0.0;
    for (u, &pu) in pi.iter().enumerate() {
        if pu == 0.0 {
            continue;
        }
        let mut start = vec![0.0; pi.len()];
        start[u] = 1.0;
        lower += pu * (block_entropy(l + 1, &start) - block_entropy(l, &start));
    }
    Ok(EntropyBracket {
        lower: lower.min(upper),
        upper,
        l,
    })
}

/// `int f dmu` for a finite-range potential.
pub fn integral(system: &ChainSystem, markov: &MarkovMeasure, potential: &Potential) -> Result<f64> {
    let shift = system.top();
    if potential.range() == 1 {
        return Ok(markov
            .stationary()
            .iter()
            .enumerate()
            .map(|(u, p)| p * potential.value(&[u as Symbol]))
            .sum());
    }
    let words = shift.words(potential.range(), &Limits::default())?;
    Ok(words.iter().map(|w| markov.word_prob(w) * potential.value(w)).sum())
}

/// Mass of the points whose mixed word at this stage is `key`.
pub(crate) fn key_mass(system: &ChainSystem, markov: &MarkovMeasure, zones: &Zones, key: &[Symbol]) -> f64 {
    let sets = zones.constraints(system, key, 0);
    let Some(first) = sets.first() else {
        return 1.0;
    };
    let n = markov.size();
    let mut alpha: Vec<f64> = (0..n)
        .map(|u| if first.contains(u as Symbol) { markov.stationary[u] } else { 0.0 })
        .collect();
    for set in &sets[1..] {
        let mut next = vec![0.0; n];
        for v in set.iter() {
            next[v as usize] = (0..n).map(|u| alpha[u] * markov.transition[u][v as usize]).sum();
        }
        alpha = next;
    }
    alpha.iter().sum()
}

/// `mu` of a weighted cylinder.
pub fn wcyl_mass(system: &ChainSystem, markov: &MarkovMeasure, wcyl: &WeightedCylinder) -> Result<f64> {
    wcyl.validate(system)?;
    let zones = WindowProfile::new(system.weights(), wcyl.n).zones();
    Ok(key_mass(system, markov, &zones, &wcyl.key()))
}

/// `(1/N) E[-log mu(A_N(x))]` where `A_N(x)` is the weighted `N`-cylinder
/// containing `x`.
pub fn smb_expected_rate(system: &ChainSystem, markov: &MarkovMeasure, n: usize) -> Result<f64> {
    smb_expected_rate_with(system, markov, n, &Limits::default())
}

pub fn smb_expected_rate_with(
    system: &ChainSystem,
    markov: &MarkovMeasure,
    n: usize,
    limits: &Limits,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("N must be at least 1"));
    }
    let m = system.window_lengths(n);
    let nf = n as f64;
    if markov.is_bernoulli() && system.top().is_full() {
        // positions are independent; position j carries tau_{i-1} of the marginal
        let mut prev = 0;
        let mut total = 0.0;
        for (i, &mi) in m.iter().enumerate() {
            total += mi.saturating_sub(prev) as f64 * image_entropy(system, markov, i);
            prev = prev.max(mi);
        }
        return Ok(total / nf);
    }
    if system.depth() == 1 {
        let h0 = shannon(markov.stationary().iter().copied());
        return Ok((h0 + (m[0] - 1) as f64 * entropy(markov)) / nf);
    }
    let profile = WindowProfile::new(system.weights(), n);
    let zones = profile.zones();
    limits.check_enumeration("SMB enumeration", &count_mixed(system, &zones))?;
    let mut total = 0.0;
    let mut err = None;
    crate::cylinders::for_each_mixed(system, &zones, |key| {
        let p = key_mass(system, markov, &zones, key);
        if p > 0.0 {
            total -= p * p.ln();
        } else if p < 0.0 {
            err = Some(p);
        }
    });
    Ok(total / nf)
}

/// Entropy of the level-`level` image of the stationary marginal.
fn image_entropy(system: &ChainSystem, markov: &MarkovMeasure, level: usize) -> f64 {
    let mut q = vec![0.0; system.level(level).size()];
    for (u, &p) in markov.stationary().iter().enumerate() {
        q[system.project(0, level, u as Symbol) as usize] += p;
    }
    shannon(q)
}

/// Limit `sum_i a_i h_{tau_{i-1} mu}` where it has a closed form:
/// single-level systems, and i.i.d. measures on a full top shift.
pub fn smb_limit(system: &ChainSystem, markov: &MarkovMeasure) -> Option<f64> {
    let a = system.weights().as_f64();
    if system.depth() == 1 {
        return Some(a[0] * entropy(markov));
    }
    if markov.is_bernoulli() && system.top().is_full() {
        return Some((0..system.depth()).map(|i| a[i] * image_entropy(system, markov, i)).sum());
    }
    None
}

/// Bound on `|rate(N) - limit|` from the window ceilings: each level's
/// window overshoots by less than one symbol.
pub fn smb_ceiling_slack(system: &ChainSystem, markov: &MarkovMeasure, n: usize) -> Option<f64> {
    let nf = n as f64;
    if system.depth() == 1 {
        let h0 = shannon(markov.stationary().iter().copied());
        let h = entropy(markov);
        // (H(pi) + (m-1) h) / N - a h, with a N <= m < a N + 1
        return Some(((h0 - h).abs() + h) / nf);
    }
    if markov.is_bernoulli() && system.top().is_full() {
        return Some((0..system.depth()).map(|i| image_entropy(system, markov, i)).sum::<f64>() / nf);
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmbSample {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub exact: f64,
    pub within_3_sigma: bool,
}

/// Sampled `-(1/N) log mu(A_N(x))` over independent orbits.
pub fn smb_sample(
    system: &ChainSystem,
    markov: &MarkovMeasure,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<SmbSample> {
    if count < 2 {
        return Err(Error::arg("at least two samples are required"));
    }
    let exact = smb_expected_rate(system, markov, n)?;
    let profile = WindowProfile::new(system.weights(), n);
    let zones = profile.zones();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..count)
        .map(|_| {
            let x = markov.sample(zones.len(), &mut rng);
            let key = zones.key_of(system, &x);
            -key_mass(system, markov, &zones, &key).ln() / n as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / count as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    let std_dev = var.sqrt();
    let within = (mean - exact).abs() <= 3.0 * std_dev / (count as f64).sqrt() + 1e-12;
    Ok(SmbSample {
        n,
        count,
        seed,
        mean,
        std_dev,
        exact,
        within_3_sigma: within,
    })
}

/// A probability distribution on words of a fixed length, not necessarily
/// shift invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum WordDistribution {
    Explicit { len: usize, probs: BTreeMap<Word, f64> },
    /// Time-inhomogeneous chain: `initial` law and one matrix per step.
    Chain { initial: Vec<f64>, steps: Vec<Vec<Vec<f64>>> },
}

impl WordDistribution {
    pub fn point_mass(word: Word) -> Self {
        let len = word.len();
        WordDistribution::Explicit {
            len,
            probs: BTreeMap::from([(word, 1.0)]),
        }
    }

    /// Point mass on `period` repeated to length `len`.
    pub fn periodic(period: &[Symbol], len: usize) -> Self {
        Self::point_mass(period.iter().copied().cycle().take(len).collect())
    }

    pub fn uniform(shift: &Subshift, len: usize) -> Result<Self> {
        let words = shift.words(len, &Limits::default())?;
        let p = 1.0 / words.len() as f64;
        Ok(WordDistribution::Explicit {
            len,
            probs: words.into_iter().map(|w| (w, p)).collect(),
        })
    }

    /// Length-`len` marginal of a stationary Markov measure.
    pub fn markov(markov: &MarkovMeasure, len: usize) -> Self {
        WordDistribution::Chain {
            initial: markov.stationary().to_vec(),
            steps: vec![markov.transition().to_vec(); len.saturating_sub(1)],
        }
    }

    /// Random non-stationary chain: random initial law and an independent
    /// random transition matrix at every step.
    pub fn random_chain(shift: &Subshift, len: usize, rng: &mut impl Rng) -> Self {
        let sharpness = 0.5 + 2.5 * rng.random::<f64>();
        let mut initial: Vec<f64> = (0..shift.size())
            .map(|_| (-(1.0 - rng.random::<f64>()).ln()).powf(sharpness))
            .collect();
        let s: f64 = initial.iter().sum();
        initial.iter_mut().for_each(|p| *p /= s);
        let steps = (1..len)
            .map(|_| {
                (0..shift.size() as Symbol)
                    .map(|u| random_row(shift, u, rng, sharpness))
                    .collect()
            })
            .collect();
        WordDistribution::Chain { initial, steps }
    }

    pub fn len(&self) -> usize {
        match self {
            WordDistribution::Explicit { len, .. } => *len,
            WordDistribution::Chain { steps, .. } => steps.len() + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Law of `x[offset..offset + width]`.
    pub fn block(&self, offset: usize, width: usize) -> Result<BTreeMap<Word, f64>> {
        if offset + width > self.len() {
            return Err(Error::arg(format!(
                "block {offset}..{} exceeds word length {}",
                offset + width,
                self.len()
            )));
        }
        let mut out: BTreeMap<Word, f64> = BTreeMap::new();
        match self {
            WordDistribution::Explicit { probs, .. } => {
                for (w, &p) in probs {
                    *out.entry(w[offset..offset + width].to_vec()).or_insert(0.0) += p;
                }
            }
            WordDistribution::Chain { initial, steps } => {
                let mut law = initial.clone();
                for step in &steps[..offset] {
                    law = (0..law.len())
                        .map(|v| law.iter().enumerate().map(|(u, p)| p * step[u][v]).sum())
                        .collect();
                }
                let mut word = Vec::with_capacity(width);
                for (u, &p) in law.iter().enumerate() {
                    if p > 0.0 && width > 0 {
                        word.push(u as Symbol);
                        chain_dfs(steps, offset, width, &mut word, p, &mut out);
                        word.pop();
                    }
                }
                if width == 0 {
                    out.insert(Vec::new(), 1.0);
                }
            }
        }
        Ok(out)
    }

    /// Block law under the average `(1/n) sum_{i<n} T^i nu`.
    pub fn cesaro_block(&self, n: usize, width: usize) -> Result<BTreeMap<Word, f64>> {
        let mut out: BTreeMap<Word, f64> = BTreeMap::new();
        for i in 0..n {
            for (w, p) in self.block(i, width)? {
                *out.entry(w).or_insert(0.0) += p / n as f64;
            }
        }
        Ok(out)
    }
}

fn chain_dfs(
    steps: &[Vec<Vec<f64>>],
    offset: usize,
    width: usize,
    word: &mut Word,
    p: f64,
    out: &mut BTreeMap<Word, f64>,
) {
    if word.len() == width {
        out.insert(word.clone(), p);
        return;
    }
    let t = offset + word.len() - 1;
    let u = *word.last().unwrap() as usize;
    for (v, &q) in steps[t][u].iter().enumerate() {
        if q > 0.0 {
            word.push(v as Symbol);
            chain_dfs(steps, offset, width, word, p * q, out);
            word.pop();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvgEntropyReport {
    pub n: usize,
    pub l: usize,
    pub partition_len: usize,
    pub cells: usize,
    pub lhs: f64,
    pub rhs_entropy: f64,
    pub rhs_slack: f64,
    pub holds: bool,
}

/// `(1/n) H_nu(alpha_0^{n-1}) <= (1/l) H_{nu_n}(alpha_0^{l-1}) + (2l/n) log M`
/// with `alpha` the partition into length-`p` cylinders of `shift`.
pub fn avg_entropy_inequality_check(
    shift: &Subshift,
    nu: &WordDistribution,
    partition_len: usize,
    n: usize,
    l: usize,
) -> Result<AvgEntropyReport> {
    if l == 0 || n < 2 * l || partition_len == 0 {
        return Err(Error::arg("need l >= 1, n >= 2l and a positive partition length"));
    }
    let p = partition_len;
    if nu.len() < n + l + p - 1 {
        return Err(Error::arg(format!(
            "distribution on length {} words, need {}",
            nu.len(),
            n + l + p - 1
        )));
    }
    let cells = shift.words(p, &Limits::default())?.len();
    let lhs = shannon(nu.block(0, n + p - 1)?.into_values()) / n as f64;
    let rhs_entropy = shannon(nu.cesaro_block(n, l + p - 1)?.into_values()) / l as f64;
    let rhs_slack = 2.0 * l as f64 / n as f64 * (cells as f64).ln();
    Ok(AvgEntropyReport {
        n,
        l,
        partition_len: p,
        cells,
        lhs,
        rhs_entropy,
        rhs_slack,
        holds: lhs <= rhs_entropy + rhs_slack + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub n: usize,
    pub h_n: f64,
    pub h_next: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|h(n+1) - h(n)| <= log(3 M^2 (n+1)) / (n+1)` for `n` in `1..=n_max`,
/// `h(n) = H_{nu_n}(alpha)`.
pub fn block_entropy_continuity_check(
    shift: &Subshift,
    nu: &WordDistribution,
    partition_len: usize,
    n_max: usize,
) -> Result<Vec<ContinuityRow>> {
    let p = partition_len;
    if p == 0 || nu.len() < n_max + p {
        return Err(Error::arg("distribution too short for the requested n"));
    }
    let cells = shift.words(p, &Limits::default())?.len() as f64;
    let h = |n: usize| -> Result<f64> { Ok(shannon(nu.cesaro_block(n, p)?.into_values())) };
    let mut rows = Vec::new();
    let mut h_n = h(1)?;
    for n in 1..=n_max {
        let h_next = h(n + 1)?;
        let m = (n + 1) as f64;
        let bound = (3.0 * cells * cells * m).ln() / m;
        rows.push(ContinuityRow {
            n,
            h_n,
            h_next,
            bound,
            holds: (h_next - h_n).abs() <= bound + 1e-12,
        });
        h_n = h_next;
    }
    Ok(rows)
}

/// Clopen cover built from a partition of a level into classes of
/// length-`L` cylinders. On subshifts the partition elements are already
/// clopen, so the exceptional set `U_0` is empty for every `delta`.
#[derive(Clone, Debug)]
pub struct PartitionCover {
    pub cover: Cover,
    pub delta: f64,
    pub delta_independent: bool,
}

pub fn cover_from_partition(
    shift: &Subshift,
    len: usize,
    classes: Vec<BTreeSet<Word>>,
    delta: f64,
) -> Result<PartitionCover> {
    if delta <= 0.0 || delta.is_nan() {
        return Err(Error::arg("delta must be positive"));
    }
    let cover = Cover::explicit(shift, len, classes)?;
    if !cover.is_partition() {
        return Err(Error::arg("classes overlap"));
    }
    Ok(PartitionCover {
        cover,
        delta,
        delta_independent: true,
    })
}

/// Partition of a level into its length-`len` cylinders.
pub fn cylinder_partition(shift: &Subshift, len: usize) -> Result<Vec<BTreeSet<Word>>> {
    Ok(shift
        .words(len, &Limits::default())?
        .into_iter()
        .map(|w| BTreeSet::from([w]))
        .collect())
}

/// Number of weighted `n`-cylinders with positive mass.
pub fn support_count(system: &ChainSystem, markov: &MarkovMeasure, n: usize) -> BigUint {
    let zones = WindowProfile::new(system.weights(), n).zones();
    let mut count = BigUint::from(0u32);
    crate::cylinders::for_each_mixed(system, &zones, |key| {
        if key_mass(system, markov, &zones, key) > 0.0 {
            count += 1u32;
        }
    });
    count
}
