//! Weighted cylinders: the finite-stage form of weighted Bowen balls on a
//! chain of subshifts.
//!
//! A point `x` of the top shift determines `tau_{i-1} x` on `[0, m_i)` for
//! every level, with `m_i = ceil((a_1 + ... + a_i) n)`. Because level `i`
//! symbols are images of level `i - 1` symbols, this information is
//! equivalent to a single *mixed word* of length `m_k` whose position `j`
//! carries the level-`i` symbol for `m_{i-1} <= j < m_i`. Weighted
//! cylinders are exactly the mixed words realized by some point; counting
//! and summing over them runs a subset construction over the set of
//! level-1 symbols compatible with the mixed prefix read so far.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{
    constrained_birkhoff_sup, ChainSystem, Limits, Potential, Subshift, Symbol, SymbolSet, Weights,
    Word,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowProfile {
    pub n: usize,
    pub m: Vec<usize>,
}

impl WindowProfile {
    pub fn new(weights: &Weights, n: usize) -> Self {
        WindowProfile {
            n,
            m: weights.windows(n),
        }
    }

    pub fn total(&self) -> usize {
        *self.m.last().unwrap()
    }

    pub fn zones(&self) -> Zones {
        Zones::from_ends(&self.m)
    }
}

pub fn window_profile(weights: &Weights, n: usize) -> WindowProfile {
    WindowProfile::new(weights, n)
}

/// Which level's symbol a mixed word carries at each position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zones {
    level_at: Vec<usize>,
}

impl Zones {
    /// `ends[i]`: level `i` is known on `[0, ends[i])`. Position `j` carries
    /// the finest level that is known there.
    pub fn from_ends(ends: &[usize]) -> Self {
        let len = ends.iter().copied().max().unwrap_or(0);
        let level_at = (0..len)
            .map(|j| ends.iter().position(|&e| e > j).unwrap())
            .collect();
        Zones { level_at }
    }

    pub fn len(&self) -> usize {
        self.level_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level_at.is_empty()
    }

    pub fn level_at(&self, j: usize) -> usize {
        self.level_at[j]
    }

    /// Mixed word of a top-level word `x` (at least `len()` symbols).
    pub fn key_of(&self, system: &ChainSystem, x: &[Symbol]) -> Word {
        self.level_at
            .iter()
            .zip(x)
            .map(|(&lvl, &s)| system.project(0, lvl, s))
            .collect()
    }

    /// Level-1 symbols compatible with `key[j]`, for `j` in `from..len()`.
    pub fn constraints(&self, system: &ChainSystem, key: &[Symbol], from: usize) -> Vec<SymbolSet> {
        let size = system.top().size();
        (from..self.len())
            .map(|j| {
                let lvl = self.level_at[j];
                let mut set = SymbolSet::empty(size);
                for u in 0..size as Symbol {
                    if system.project(0, lvl, u) == key[j] {
                        set.insert(u);
                    }
                }
                set
            })
            .collect()
    }
}

/// Values that can be accumulated by the subset DP.
pub(crate) trait DpValue: Clone {
    fn merge(&mut self, other: &Self);
}

impl DpValue for BigUint {
    fn merge(&mut self, other: &Self) {
        *self += other;
    }
}

/// A positive quantity stored as its logarithm.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogValue(pub f64);

impl DpValue for LogValue {
    fn merge(&mut self, other: &Self) {
        self.0 = log_add_exp(self.0, other.0);
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + values.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}

/// Groups `symbols` by their image at `level`.
fn group_by_image(
    system: &ChainSystem,
    level: usize,
    symbols: impl Iterator<Item = Symbol>,
) -> BTreeMap<Symbol, SymbolSet> {
    let size = system.top().size();
    let mut groups: BTreeMap<Symbol, SymbolSet> = BTreeMap::new();
    for v in symbols {
        groups
            .entry(system.project(0, level, v))
            .or_insert_with(|| SymbolSet::empty(size))
            .insert(v);
    }
    groups
}

fn successors_of(shift: &Subshift, set: &SymbolSet) -> SymbolSet {
    let mut out = SymbolSet::empty(shift.size());
    for u in set.iter() {
        for &v in shift.successors(u) {
            out.insert(v);
        }
    }
    out
}

/// Runs the subset construction over all realizable mixed words and
/// returns the accumulated value per final state. `extend(value, j, set)`
/// updates a value when position `j` is read and the compatible set of
/// level-1 symbols becomes `set`.
pub(crate) fn subset_dp<T: DpValue>(
    system: &ChainSystem,
    zones: &Zones,
    start: T,
    extend: impl Fn(&T, usize, &SymbolSet) -> T,
) -> Vec<(SymbolSet, T)> {
    let shift = system.top();
    if zones.is_empty() {
        return vec![(SymbolSet::empty(shift.size()), start)];
    }
    let mut states: BTreeMap<SymbolSet, T> = BTreeMap::new();
    for (_, set) in group_by_image(system, zones.level_at(0), 0..shift.size() as Symbol) {
        let value = extend(&start, 0, &set);
        merge_into(&mut states, set, value);
    }
    for j in 1..zones.len() {
        let mut next: BTreeMap<SymbolSet, T> = BTreeMap::new();
        for (set, value) in &states {
            let succ = successors_of(shift, set);
            for (_, group) in group_by_image(system, zones.level_at(j), succ.iter()) {
                let v = extend(value, j, &group);
                merge_into(&mut next, group, v);
            }
        }
        states = next;
    }
    states.into_iter().collect()
}

fn merge_into<T: DpValue>(states: &mut BTreeMap<SymbolSet, T>, key: SymbolSet, value: T) {
    match states.get_mut(&key) {
        Some(v) => v.merge(&value),
        None => {
            states.insert(key, value);
        }
    }
}

/// Number of realizable mixed words for the given zones.
pub fn count_mixed(system: &ChainSystem, zones: &Zones) -> BigUint {
    subset_dp(system, zones, BigUint::from(1u32), |v, _, _| v.clone())
        .into_iter()
        .map(|(_, v)| v)
        .fold(BigUint::zero(), |a, b| a + b)
}

/// Calls `visit` on every realizable mixed word in lexicographic order.
pub fn for_each_mixed(system: &ChainSystem, zones: &Zones, mut visit: impl FnMut(&[Symbol])) {
    let shift = system.top();
    if zones.is_empty() {
        visit(&[]);
        return;
    }
    let mut key = Vec::with_capacity(zones.len());
    for (b, set) in group_by_image(system, zones.level_at(0), 0..shift.size() as Symbol) {
        key.push(b);
        mixed_dfs(system, zones, &set, &mut key, &mut visit);
        key.pop();
    }
}

fn mixed_dfs(
    system: &ChainSystem,
    zones: &Zones,
    set: &SymbolSet,
    key: &mut Word,
    visit: &mut impl FnMut(&[Symbol]),
) {
    if key.len() == zones.len() {
        visit(key);
        return;
    }
    let succ = successors_of(system.top(), set);
    for (b, group) in group_by_image(system, zones.level_at(key.len()), succ.iter()) {
        key.push(b);
        mixed_dfs(system, zones, &group, key, visit);
        key.pop();
    }
}

/// Finite-stage weighted Bowen ball: one word per level, level `i` of
/// length `m_i`, each extending the image of the previous one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeightedCylinder {
    pub n: usize,
    pub level_words: Vec<Word>,
}

impl WeightedCylinder {
    pub fn from_key(system: &ChainSystem, profile: &WindowProfile, key: &[Symbol]) -> Self {
        let mut level_words: Vec<Word> = Vec::with_capacity(profile.m.len());
        for (i, &mi) in profile.m.iter().enumerate() {
            let mut w: Word = match level_words.last() {
                Some(prev) => prev.iter().map(|&s| system.project(i - 1, i, s)).collect(),
                None => Vec::new(),
            };
            w.extend_from_slice(&key[w.len()..mi]);
            level_words.push(w);
        }
        WeightedCylinder {
            n: profile.n,
            level_words,
        }
    }

    /// The mixed word: level-1 word followed by each level's new suffix.
    pub fn key(&self) -> Word {
        let mut key = Vec::new();
        for w in &self.level_words {
            key.extend_from_slice(&w[key.len()..]);
        }
        key
    }

    pub fn top_word(&self) -> &[Symbol] {
        &self.level_words[0]
    }

    /// Checks admissibility and consistency of the level words.
    pub fn validate(&self, system: &ChainSystem) -> Result<()> {
        let profile = WindowProfile::new(system.weights(), self.n);
        if self.level_words.len() != system.depth() {
            return Err(Error::arg("one word per level is required"));
        }
        for (i, w) in self.level_words.iter().enumerate() {
            if w.len() != profile.m[i] {
                return Err(Error::arg(format!(
                    "level {} word has length {}, expected {}",
                    i + 1,
                    w.len(),
                    profile.m[i]
                )));
            }
            system.level(i).check_admissible(w)?;
            if i > 0 {
                let prev = &self.level_words[i - 1];
                if prev.iter().zip(w).any(|(&p, &s)| system.project(i - 1, i, p) != s) {
                    return Err(Error::arg(format!(
                        "level {} word does not extend the image of level {}",
                        i + 1,
                        i
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn display(&self, system: &ChainSystem) -> String {
        let parts: Vec<String> = self
            .level_words
            .iter()
            .enumerate()
            .map(|(i, w)| system.level(i).alphabet().format_word(w))
            .collect();
        format!("({})", parts.join(", "))
    }
}

pub fn count_weighted_cylinders(system: &ChainSystem, n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    Ok(count_mixed(system, &WindowProfile::new(system.weights(), n).zones()))
}

pub fn enumerate_weighted_cylinders(
    system: &ChainSystem,
    n: usize,
    limits: &Limits,
) -> Result<Vec<WeightedCylinder>> {
    let count = count_weighted_cylinders(system, n)?;
    limits.check_enumeration("weighted cylinder enumeration", &count)?;
    let profile = WindowProfile::new(system.weights(), n);
    let mut out = Vec::new();
    for_each_mixed(system, &profile.zones(), |key| {
        out.push(WeightedCylinder::from_key(system, &profile, key))
    });
    Ok(out)
}

/// `sup_{x in A} S_{m_1} f(x)` for the cylinder `A` with mixed word `key`.
pub(crate) fn sup_birkhoff_of_key(
    system: &ChainSystem,
    potential: &Potential,
    profile: &WindowProfile,
    zones: &Zones,
    key: &[Symbol],
) -> f64 {
    let m1 = profile.m[0];
    let constraints = zones.constraints(system, key, m1);
    constrained_birkhoff_sup(system.top(), potential, &key[..m1], m1, &constraints)
}

/// Log of one cover term: `-s n + (1/a_1) sup_{x in A} S_{ceil(a_1 n)} f(x)`.
pub fn weight_of(
    system: &ChainSystem,
    potential: &Potential,
    wcyl: &WeightedCylinder,
    s: f64,
) -> Result<f64> {
    wcyl.validate(system)?;
    let profile = WindowProfile::new(system.weights(), wcyl.n);
    let zones = profile.zones();
    let sup = sup_birkhoff_of_key(system, potential, &profile, &zones, &wcyl.key());
    Ok(-s * wcyl.n as f64 + sup / system.weights().first())
}

/// Clopen cover of one level by unions of length-`len` cylinders.
/// `len == 0` is the trivial cover `{X}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cover {
    len: usize,
    members: Vec<BTreeSet<Word>>,
    cylinder: bool,
    lookup: HashMap<Word, Vec<u32>>,
}

impl Cover {
    pub fn trivial() -> Self {
        let members = vec![BTreeSet::from([Vec::new()])];
        Self::build(0, members, true)
    }

    /// Partition into length-`len` cylinders.
    pub fn cylinders(shift: &Subshift, len: usize) -> Result<Self> {
        if len == 0 {
            return Ok(Self::trivial());
        }
        let members = shift
            .words(len, &Limits::default())?
            .into_iter()
            .map(|w| BTreeSet::from([w]))
            .collect();
        Ok(Self::build(len, members, true))
    }

    pub fn explicit(shift: &Subshift, len: usize, members: Vec<BTreeSet<Word>>) -> Result<Self> {
        if len == 0 {
            return Err(Error::arg("explicit cover members need a positive cylinder length"));
        }
        if members.iter().any(BTreeSet::is_empty) {
            return Err(Error::arg("cover members must be nonempty"));
        }
        for w in members.iter().flatten() {
            if w.len() != len {
                return Err(Error::arg(format!("cover word has length {}, expected {len}", w.len())));
            }
            shift.check_admissible(w)?;
        }
        let cover = Self::build(len, members, false);
        for w in shift.words(len, &Limits::default())? {
            if !cover.lookup.contains_key(&w) {
                return Err(Error::arg(format!(
                    "cover misses cylinder `{}`",
                    shift.alphabet().format_word(&w)
                )));
            }
        }
        Ok(cover)
    }

    fn build(len: usize, members: Vec<BTreeSet<Word>>, cylinder: bool) -> Self {
        let mut lookup: HashMap<Word, Vec<u32>> = HashMap::new();
        for (i, m) in members.iter().enumerate() {
            for w in m {
                lookup.entry(w.clone()).or_default().push(i as u32);
            }
        }
        Cover {
            len,
            members,
            cylinder,
            lookup,
        }
    }

    /// Length of the cylinders the members are unions of.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn members(&self) -> &[BTreeSet<Word>] {
        &self.members
    }

    pub fn is_cylinder_cover(&self) -> bool {
        self.cylinder
    }

    pub fn is_partition(&self) -> bool {
        self.lookup.values().all(|m| m.len() == 1)
    }

    /// Members containing the cylinder `[window]` (`window.len() == len`).
    pub fn members_containing(&self, window: &[Symbol]) -> &[u32] {
        self.lookup.get(window).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Lowest-index member containing `[window]`.
    pub fn first_member(&self, window: &[Symbol]) -> Option<u32> {
        self.members_containing(window).first().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverFamily {
    covers: Vec<Cover>,
}

impl CoverFamily {
    pub fn new(system: &ChainSystem, covers: Vec<Cover>) -> Result<Self> {
        if covers.len() != system.depth() {
            return Err(Error::arg(format!(
                "{} levels need {} covers",
                system.depth(),
                system.depth()
            )));
        }
        Ok(CoverFamily { covers })
    }

    /// `cylinder_cover(L_i)` at every level.
    pub fn cylinders(system: &ChainSystem, lens: &[usize]) -> Result<Self> {
        let covers = system
            .levels()
            .iter()
            .zip(lens)
            .map(|(shift, &l)| Cover::cylinders(shift, l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(system, covers)
    }

    pub fn trivial(system: &ChainSystem) -> Self {
        CoverFamily {
            covers: vec![Cover::trivial(); system.depth()],
        }
    }

    pub fn covers(&self) -> &[Cover] {
        &self.covers
    }

    pub fn cover(&self, level: usize) -> &Cover {
        &self.covers[level]
    }

    pub fn is_partition(&self) -> bool {
        self.covers.iter().all(Cover::is_partition)
    }

    pub fn all_cylinder(&self) -> bool {
        self.covers.iter().all(Cover::is_cylinder_cover)
    }

    /// Top-level prefix length that determines membership in the stage-`n` join.
    pub fn prefix_needed(&self, profile: &WindowProfile) -> usize {
        self.covers
            .iter()
            .zip(&profile.m)
            .map(|(c, &m)| if c.len == 0 { 0 } else { m + c.len - 1 })
            .max()
            .unwrap_or(0)
    }

    /// For cylinder covers the join at stage `n` is the mixed-word partition
    /// with these information extents.
    pub(crate) fn join_ends(&self, profile: &WindowProfile) -> Vec<usize> {
        self.covers
            .iter()
            .zip(&profile.m)
            .map(|(c, &m)| if c.len == 0 { 0 } else { m + c.len - 1 })
            .collect()
    }
}

/// Element of `V_i (tau_{i-1}^{-1} U_i)_0^{m_i - 1}`: for each level and
/// each time `j < m_i`, the index of the chosen member of `U_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinElement {
    pub choices: Vec<Vec<u32>>,
}

impl JoinElement {
    /// Renders cylinder-cover choices as words, one per level.
    pub fn describe(&self, system: &ChainSystem, covers: &CoverFamily) -> Vec<String> {
        self.choices
            .iter()
            .enumerate()
            .map(|(i, ch)| {
                let cover = covers.cover(i);
                if cover.is_cylinder_cover() && cover.len == 1 {
                    let word: Word = ch
                        .iter()
                        .map(|&m| cover.members[m as usize].iter().next().unwrap()[0])
                        .collect();
                    system.level(i).alphabet().format_word(&word)
                } else {
                    format!("{ch:?}")
                }
            })
            .collect()
    }
}

/// Join element containing a point with top-level prefix `prefix`. For
/// non-partition covers the lowest-index member is chosen at every slot.
pub fn join_element_of(
    system: &ChainSystem,
    covers: &CoverFamily,
    n: usize,
    prefix: &[Symbol],
) -> Result<JoinElement> {
    let profile = WindowProfile::new(system.weights(), n);
    let needed = covers.prefix_needed(&profile);
    if prefix.len() < needed.max(1) {
        return Err(Error::arg(format!(
            "prefix has length {}, membership needs {needed}",
            prefix.len()
        )));
    }
    system.top().check_admissible(prefix)?;
    let choices = (0..system.depth())
        .map(|i| {
            let cover = covers.cover(i);
            let image: Word = prefix.iter().map(|&s| system.project(0, i, s)).collect();
            (0..profile.m[i])
                .map(|j| {
                    cover
                        .first_member(&image[j..j + cover.len])
                        .expect("covers are validated to cover their level")
                })
                .collect()
        })
        .collect();
    Ok(JoinElement { choices })
}

/// Every join element containing the point with top-level prefix `x`.
fn join_elements_containing(
    system: &ChainSystem,
    covers: &CoverFamily,
    profile: &WindowProfile,
    x: &[Symbol],
    out: &mut BTreeSet<JoinElement>,
) {
    let mut slots: Vec<(usize, &[u32])> = Vec::new();
    for i in 0..system.depth() {
        let cover = covers.cover(i);
        let image: Word = x.iter().map(|&s| system.project(0, i, s)).collect();
        for j in 0..profile.m[i] {
            slots.push((i, cover.members_containing(&image[j..j + cover.len])));
        }
    }
    let mut current: Vec<u32> = Vec::with_capacity(slots.len());
    fn rec(
        slots: &[(usize, &[u32])],
        depth: usize,
        current: &mut Vec<u32>,
        out: &mut BTreeSet<JoinElement>,
    ) {
        if current.len() == slots.len() {
            let mut choices = vec![Vec::new(); depth];
            for ((lvl, _), &c) in slots.iter().zip(current.iter()) {
                choices[*lvl].push(c);
            }
            out.insert(JoinElement { choices });
            return;
        }
        for &m in slots[current.len()].1 {
            current.push(m);
            rec(slots, depth, current, out);
            current.pop();
        }
    }
    rec(&slots, system.depth(), &mut current, out);
}

/// Number of nonempty elements of the stage-`n` join of `covers`.
pub fn count_join_elements(
    system: &ChainSystem,
    covers: &CoverFamily,
    n: usize,
    limits: &Limits,
) -> Result<BigUint> {
    let profile = WindowProfile::new(system.weights(), n);
    if covers.all_cylinder() {
        return Ok(count_mixed(system, &Zones::from_ends(&covers.join_ends(&profile))));
    }
    let len = covers.prefix_needed(&profile).max(1);
    let words = system.top().words(len, limits)?;
    let mut seen = BTreeSet::new();
    for w in &words {
        join_elements_containing(system, covers, &profile, w, &mut seen);
        limits.check_enumeration("join elements", &BigUint::from(seen.len()))?;
    }
    Ok(BigUint::from(seen.len()))
}

/// Oscillation of `f` over the time-zero join `V_i tau_{i-1}^{-1} U_i`.
pub fn oscillation(system: &ChainSystem, covers: &CoverFamily, potential: &Potential) -> Result<f64> {
    let len = covers
        .covers()
        .iter()
        .map(Cover::len)
        .max()
        .unwrap_or(0)
        .max(potential.range());
    let words = system.top().words(len, &Limits::default())?;
    let mut spread: HashMap<Vec<u32>, (f64, f64)> = HashMap::new();
    for w in &words {
        let f = potential.value(w);
        let per_level: Vec<&[u32]> = (0..system.depth())
            .map(|i| {
                let cover = covers.cover(i);
                let image: Word = w[..cover.len()]
                    .iter()
                    .map(|&s| system.project(0, i, s))
                    .collect();
                cover.members_containing(&image)
            })
            .collect();
        let mut tuple = Vec::with_capacity(per_level.len());
        visit_tuples(&per_level, &mut tuple, &mut |t| {
            let e = spread.entry(t.to_vec()).or_insert((f, f));
            e.0 = e.0.min(f);
            e.1 = e.1.max(f);
        });
    }
    Ok(spread.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max))
}

fn visit_tuples(options: &[&[u32]], current: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
    if current.len() == options.len() {
        visit(current);
        return;
    }
    for &m in options[current.len()] {
        current.push(m);
        visit_tuples(options, current, visit);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn window_profiles() {
        let w = Weights::parse_list("1, 0.5").unwrap();
        assert_eq!(window_profile(&w, 3).m, vec![3, 5]);
        assert_eq!(window_profile(&w, 2).m, vec![2, 3]);
        let w = Weights::parse_list("0.5, 0.5, 1").unwrap();
        assert_eq!(window_profile(&w, 3).m, vec![2, 3, 6]);
    }

    #[test]
    fn zones_follow_finest_known_level() {
        let z = Zones::from_ends(&[2, 3]);
        assert_eq!((0..3).map(|j| z.level_at(j)).collect::<Vec<_>>(), vec![0, 0, 1]);
        // level 2 window shorter than level 1: nothing new at level 2
        let z = Zones::from_ends(&[4, 2]);
        assert_eq!(z.len(), 4);
        assert!((0..4).all(|j| z.level_at(j) == 0));
        let z = Zones::from_ends(&[0, 2]);
        assert_eq!(z.level_at(0), 1);
    }

    #[test]
    fn fs42_counts() {
        let sys = fixtures::fs42();
        assert_eq!(count_weighted_cylinders(&sys, 1).unwrap(), BigUint::from(8u32));
        assert_eq!(count_weighted_cylinders(&sys, 2).unwrap(), BigUint::from(32u32));
        assert!(count_weighted_cylinders(&sys, 0).is_err());
    }

    #[test]
    fn single_level_counts_are_word_counts() {
        let sys = fixtures::golden_mean();
        for n in 1..8 {
            assert_eq!(
                count_weighted_cylinders(&sys, n).unwrap(),
                sys.top().word_count(n).unwrap()
            );
        }
    }

    #[test]
    fn fs42_enumeration_n1() {
        let sys = fixtures::fs42();
        let cyls = enumerate_weighted_cylinders(&sys, 1, &Limits::default()).unwrap();
        assert_eq!(cyls.len(), 8);
        assert_eq!(cyls[0].display(&sys), "(a, 00)");
        assert_eq!(cyls[1].display(&sys), "(a, 01)");
        assert_eq!(cyls[7].display(&sys), "(d, 11)");
        for c in &cyls {
            c.validate(&sys).unwrap();
        }
    }

    #[test]
    fn full2_enumeration_n2() {
        let sys = fixtures::full2();
        let cyls = enumerate_weighted_cylinders(&sys, 2, &Limits::default()).unwrap();
        let shown: Vec<String> = cyls.iter().map(|c| c.display(&sys)).collect();
        assert_eq!(shown, ["(00)", "(01)", "(10)", "(11)"]);
    }

    #[test]
    fn golden_chain_counts_only_realizable_cylinders() {
        // m = (1, 2); points of the golden-mean shift give 00, 01, 10 at level 2
        let sys = fixtures::golden_full();
        assert_eq!(count_weighted_cylinders(&sys, 1).unwrap(), BigUint::from(3u32));
        let cyls = enumerate_weighted_cylinders(&sys, 1, &Limits::default()).unwrap();
        let shown: Vec<String> = cyls.iter().map(|c| c.display(&sys)).collect();
        assert_eq!(shown, ["(0, 00)", "(0, 01)", "(1, 10)"]);
    }

    #[test]
    fn enumeration_cap() {
        let sys = fixtures::fs42();
        let limits = Limits { enumeration: 10, ..Limits::default() };
        assert!(matches!(
            enumerate_weighted_cylinders(&sys, 2, &limits),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn weights_of_cylinders() {
        let sys = fixtures::fs42();
        let f1 = fixtures::f1(&sys);
        let cyls = enumerate_weighted_cylinders(&sys, 2, &Limits::default()).unwrap();
        for c in &cyls {
            assert_eq!(weight_of(&sys, &Potential::zero(), c, 0.0).unwrap(), 0.0);
        }
        let ab = cyls.iter().find(|c| sys.top().alphabet().format_word(c.top_word()) == "ab").unwrap();
        let w = weight_of(&sys, &f1, ab, 0.0).unwrap();
        assert!((w - std::f64::consts::LN_2).abs() < 1e-15);
        let c3 = &enumerate_weighted_cylinders(&sys, 3, &Limits::default()).unwrap()[5];
        assert_eq!(weight_of(&sys, &Potential::zero(), c3, 1.0).unwrap(), -3.0);
    }

    #[test]
    fn constrained_sup_respects_lower_levels() {
        // even chain: a->a|b, b->c, c->a; code a->0, b->1, c->1; weights (1, 1)
        let sys = fixtures::even_chain_with_weights("1, 1");
        // g rewards "ab"; after x_0 = a the level-2 symbol at 1 decides x_1
        let alpha = sys.top().alphabet();
        let ab = alpha.parse_word("ab").unwrap();
        let g = Potential::new(sys.top(), 2, BTreeMap::from([(ab, 1.0)])).unwrap();
        let profile = WindowProfile::new(sys.weights(), 1);
        let key = vec![0, 0];
        let wc = WeightedCylinder::from_key(&sys, &profile, &key);
        assert_eq!(weight_of(&sys, &g, &wc, 0.0).unwrap(), 0.0);
        let key = vec![0, 1];
        let wc = WeightedCylinder::from_key(&sys, &profile, &key);
        assert_eq!(weight_of(&sys, &g, &wc, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn join_membership() {
        let sys = fixtures::fs42();
        let covers = CoverFamily::cylinders(&sys, &[1, 1]).unwrap();
        let x = sys.top().alphabet().parse_word("abcd").unwrap();
        let el = join_element_of(&sys, &covers, 2, &x).unwrap();
        assert_eq!(el.describe(&sys, &covers), ["ab", "001"]);
        assert!(join_element_of(&sys, &covers, 2, &x[..2]).is_err());

        let trivial = CoverFamily::trivial(&sys);
        let el = join_element_of(&sys, &trivial, 2, &x).unwrap();
        assert!(el.choices.iter().flatten().all(|&c| c == 0));

        // overlapping cover {[0] u [1], [1]} at level 2: ties go to the first member
        let level2 = sys.level(1);
        let overlapping = Cover::explicit(
            level2,
            1,
            vec![BTreeSet::from([vec![0], vec![1]]), BTreeSet::from([vec![1]])],
        )
        .unwrap();
        let covers = CoverFamily::new(&sys, vec![Cover::trivial(), overlapping]).unwrap();
        let x = sys.top().alphabet().parse_word("cccc").unwrap();
        let el = join_element_of(&sys, &covers, 1, &x).unwrap();
        assert_eq!(el.choices[1], vec![0, 0]);
    }

    #[test]
    fn explicit_cover_must_cover() {
        let level2 = Subshift::full(crate::symbolic::Alphabet::numeric(2).unwrap());
        assert!(Cover::explicit(&level2, 1, vec![BTreeSet::from([vec![0]])]).is_err());
        assert!(Cover::explicit(&level2, 1, vec![BTreeSet::new()]).is_err());
    }

    #[test]
    fn oscillation_examples() {
        let sys = fixtures::fs42();
        let f1 = fixtures::f1(&sys);
        let zeroth = CoverFamily::cylinders(&sys, &[1, 1]).unwrap();
        assert_eq!(oscillation(&sys, &zeroth, &f1).unwrap(), 0.0);
        let trivial = CoverFamily::trivial(&sys);
        assert!((oscillation(&sys, &trivial, &f1).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(oscillation(&sys, &trivial, &Potential::zero()).unwrap(), 0.0);
        // only the level-2 cover: a and b share a member, f1 differs on them
        let coarse = CoverFamily::cylinders(&sys, &[0, 1]).unwrap();
        assert!((oscillation(&sys, &coarse, &f1).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn join_counts_for_cylinder_and_explicit_covers_agree() {
        let sys = fixtures::golden_full();
        let limits = Limits::default();
        for n in 1..4 {
            let cyl = CoverFamily::cylinders(&sys, &[1, 2]).unwrap();
            let explicit = CoverFamily::new(
                &sys,
                cyl.covers()
                    .iter()
                    .zip(sys.levels())
                    .map(|(c, shift)| Cover::explicit(shift, c.len(), c.members().to_vec()).unwrap())
                    .collect(),
            )
            .unwrap();
            assert_eq!(
                count_join_elements(&sys, &cyl, n, &limits).unwrap(),
                count_join_elements(&sys, &explicit, n, &limits).unwrap()
            );
        }
    }
}
