//! The `M`-th power of a chain: every level recoded by admissible `M`-blocks,
//! with the potential `S_M f`, and the join identity
//! `V_{l<c} T^{-Ml} (U)_0^{M-1} = (U)_0^{cM-1}` checked on finite prefixes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::cylinders::{Cover, CoverFamily};
use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, BlockCode, ChainSystem, Limits, Potential, Subshift, Symbol, Word};

#[derive(Clone, Debug)]
pub struct PowerSystem {
    pub m: usize,
    pub system: ChainSystem,
    pub potential: Potential,
    /// Original level-`i` word of each power symbol.
    pub blocks: Vec<Vec<Word>>,
}

impl PowerSystem {
    /// Power-level symbol of the original level-`level` block `word`.
    pub fn symbol_of(&self, level: usize, word: &[Symbol]) -> Option<Symbol> {
        self.blocks[level]
            .binary_search_by(|b| b.as_slice().cmp(word))
            .ok()
            .map(|i| i as Symbol)
    }
}

fn block_name(alphabet: &Alphabet, block: &[Symbol]) -> String {
    let parts: Vec<&str> = block.iter().map(|&s| alphabet.symbol(s)).collect();
    if parts.iter().all(|p| p.chars().count() == 1) {
        parts.concat()
    } else {
        parts.join(".")
    }
}

/// Builds `(X_i^{[M]})`, the induced codes, the same weights, and `S_M f`
/// of range `1 + ceil((r - 1) / M)`.
pub fn power_system(system: &ChainSystem, potential: &Potential, m: usize) -> Result<PowerSystem> {
    if m == 0 {
        return Err(Error::arg("M must be at least 1"));
    }
    let limits = Limits::default();
    let mut levels = Vec::new();
    let mut blocks = Vec::new();
    for shift in system.levels() {
        let words = shift.words(m, &limits)?;
        let names: Vec<String> = words.iter().map(|w| block_name(shift.alphabet(), w)).collect();
        let alphabet = Alphabet::new(names)?;
        let allowed = words
            .iter()
            .map(|u| {
                words
                    .iter()
                    .map(|v| shift.is_allowed(*u.last().unwrap(), v[0]))
                    .collect()
            })
            .collect();
        levels.push(Subshift::new(alphabet, allowed)?);
        blocks.push(words);
    }
    let mut codes = Vec::new();
    for (i, code) in system.codes().iter().enumerate() {
        let map = blocks[i]
            .iter()
            .map(|w| {
                let img = code.apply(w).unwrap();
                blocks[i + 1].binary_search(&img).map(|j| j as Symbol).map_err(|_| {
                    Error::arg("code image of an admissible block is inadmissible")
                })
            })
            .collect::<Result<Vec<_>>>()?;
        codes.push(BlockCode::new(
            levels[i].alphabet().clone(),
            levels[i + 1].alphabet().clone(),
            map,
        )?);
    }
    let power = ChainSystem::new(levels, codes, system.weights().clone())?;

    let r = potential.range();
    let range = 1 + (r - 1).div_ceil(m);
    let mut table = BTreeMap::new();
    for w in power.top().words(range, &limits)? {
        let flat: Word = w.iter().flat_map(|&b| blocks[0][b as usize].iter().copied()).collect();
        let v = potential.birkhoff_sum(&flat, m);
        if v != 0.0 {
            table.insert(w, v);
        }
    }
    let potential = Potential::new(power.top(), range, table)?;
    Ok(PowerSystem {
        m,
        system: power,
        potential,
        blocks,
    })
}

/// `(U)_0^{M-1}` as a partition of the power level: members are the
/// realized tuples of `U`-members at times `0..M`.
pub fn power_cover(power: &PowerSystem, level: usize, cover: &Cover) -> Result<Cover> {
    if cover.len() == 0 {
        return Ok(Cover::trivial());
    }
    if !cover.is_partition() {
        return Err(Error::arg("power covers are built from partitions"));
    }
    let m = power.m;
    let len = 1 + (cover.len() - 1).div_ceil(m);
    let shift = power.system.level(level);
    let mut groups: BTreeMap<Vec<u32>, BTreeSet<Word>> = BTreeMap::new();
    for w in shift.words(len, &Limits::default())? {
        let flat: Word = w
            .iter()
            .flat_map(|&b| power.blocks[level][b as usize].iter().copied())
            .collect();
        let tuple: Vec<u32> = (0..m)
            .map(|t| cover.first_member(&flat[t..t + cover.len()]).unwrap())
            .collect();
        groups.entry(tuple).or_default().insert(w);
    }
    Cover::explicit(shift, len, groups.into_values().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerJoinReport {
    pub m: usize,
    pub n: usize,
    /// Elements of `V_i tau^{-1} (U_i)_0^{c_i M - 1}` in the original system.
    pub original_count: String,
    /// Elements of the stage-`n` join of the power covers in the power system.
    pub power_count: String,
    /// Whether both joins were also compared point by point.
    pub exhaustive: bool,
    pub equal: bool,
}

/// Prefix length used by the exhaustive comparison, and its cap.
pub const EXHAUSTIVE_CAP: u64 = 200_000;

pub fn power_join_identity_check(
    system: &ChainSystem,
    covers: &CoverFamily,
    m: usize,
    n: usize,
) -> Result<PowerJoinReport> {
    if m == 0 || n == 0 {
        return Err(Error::arg("M and n must be at least 1"));
    }
    if !covers.is_partition() {
        return Err(Error::arg("the join identity is checked for partition covers"));
    }
    let power = power_system(system, &Potential::zero(), m)?;
    let power_covers = covers
        .covers()
        .iter()
        .enumerate()
        .map(|(i, c)| power_cover(&power, i, c))
        .collect::<Result<Vec<_>>>()?;
    let blocks_per_level = system.window_lengths(n);
    let k = system.depth();
    let lens: Vec<usize> = covers.covers().iter().map(Cover::len).collect();
    let power_lens: Vec<usize> = power_covers.iter().map(Cover::len).collect();

    let top = system.top();
    let base = top.size();
    let code_of = |x: &[Symbol]| x.iter().rev().fold(0usize, |acc, &s| acc * base + s as usize);
    let tabulate = |window: usize, member: &dyn Fn(&[Symbol]) -> u32| -> Result<Vec<u32>> {
        if window == 0 {
            return Ok(vec![member(&[])]);
        }
        let mut table = vec![u32::MAX; base.pow(window as u32)];
        for w in top.words(window, &Limits::default())? {
            table[code_of(&w)] = member(&w);
        }
        Ok(table)
    };

    let left_steps = blocks_per_level.iter().map(|c| c * m).max().unwrap();
    let left_window = lens.iter().copied().max().unwrap().max(1);
    let left_tables = (0..k)
        .map(|i| {
            let cover = covers.cover(i);
            tabulate(cover.len(), &|x| {
                let image: Word = x.iter().map(|&s| system.project(0, i, s)).collect();
                cover.first_member(&image).unwrap()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let left = |t: usize, x: &[Symbol]| -> Vec<u32> {
        (0..k)
            .map(|i| {
                if t >= blocks_per_level[i] * m {
                    u32::MAX
                } else {
                    left_tables[i][code_of(&x[..lens[i]])]
                }
            })
            .collect()
    };
    let right_steps = *blocks_per_level.iter().max().unwrap();
    let right_window = power_lens.iter().copied().max().unwrap().max(1) * m;
    let right_tables = (0..k)
        .map(|i| {
            let cover = &power_covers[i];
            tabulate(cover.len() * m, &|x| {
                let word: Word = x
                    .chunks(m)
                    .map(|block| {
                        let image: Word = block.iter().map(|&s| system.project(0, i, s)).collect();
                        power.symbol_of(i, &image).unwrap()
                    })
                    .collect();
                cover.first_member(&word).unwrap()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let right = |b: usize, x: &[Symbol]| -> Vec<u32> {
        (0..k)
            .map(|i| {
                if b >= blocks_per_level[i] {
                    u32::MAX
                } else {
                    right_tables[i][code_of(&x[..power_lens[i] * m])]
                }
            })
            .collect()
    };
    let original_count = count_label_sequences(top, left_steps, 1, left_window, &left)?;
    let power_count = count_label_sequences(top, right_steps, m, right_window, &right)?;
    let mut equal = original_count == power_count;

    let len = (left_steps - 1 + left_window).max((right_steps - 1) * m + right_window);
    let exhaustive = top.word_count(len)? <= BigUint::from(EXHAUSTIVE_CAP);
    if exhaustive && equal {
        let mut fwd: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
        let mut back: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
        for x in top.words(len, &Limits::default())? {
            let l: Vec<u32> = (0..left_steps).flat_map(|t| left(t, &x[t..])).collect();
            let r: Vec<u32> = (0..right_steps).flat_map(|b| right(b, &x[b * m..])).collect();
            if fwd.entry(l.clone()).or_insert_with(|| r.clone()) != &r
                || back.entry(r).or_insert_with(|| l.clone()) != &l
            {
                equal = false;
                break;
            }
        }
    }
    Ok(PowerJoinReport {
        m,
        n,
        original_count: original_count.to_string(),
        power_count: power_count.to_string(),
        exhaustive,
        equal,
    })
}

/// Number of distinct label sequences `(label(t, x[t s .. t s + w]))_{t <
/// steps}` over points `x` of `shift`: a subset construction whose states
/// are sets of possible current windows.
pub fn count_label_sequences(
    shift: &Subshift,
    steps: usize,
    stride: usize,
    window: usize,
    label: &dyn Fn(usize, &[Symbol]) -> Vec<u32>,
) -> Result<BigUint> {
    let limits = Limits::default();
    let windows = shift.words(window, &limits)?;
    let mut states: BTreeMap<BTreeSet<Word>, BigUint> = BTreeMap::new();
    let mut groups: BTreeMap<Vec<u32>, BTreeSet<Word>> = BTreeMap::new();
    for w in windows {
        groups.entry(label(0, &w)).or_default().insert(w);
    }
    for set in groups.into_values() {
        *states.entry(set).or_default() += 1u32;
    }
    for t in 1..steps {
        let mut next: BTreeMap<BTreeSet<Word>, BigUint> = BTreeMap::new();
        for (set, count) in &states {
            let mut groups: BTreeMap<Vec<u32>, BTreeSet<Word>> = BTreeMap::new();
            for w in set {
                for nw in advance(shift, w, stride) {
                    groups.entry(label(t, &nw)).or_default().insert(nw);
                }
            }
            for set in groups.into_values() {
                *next.entry(set).or_default() += count;
            }
        }
        states = next;
        limits.check_enumeration("label sequence states", &BigUint::from(states.len()))?;
    }
    Ok(states.into_values().sum())
}

/// Windows `x[s..s + w]` of points whose window at time 0 is `w`.
fn advance(shift: &Subshift, w: &[Symbol], stride: usize) -> Vec<Word> {
    let len = w.len();
    let mut out = Vec::new();
    let mut path = w.to_vec();
    extend(shift, &mut path, stride + len, &mut |p| out.push(p[stride..].to_vec()));
    out
}

fn extend(shift: &Subshift, path: &mut Word, target: usize, visit: &mut impl FnMut(&[Symbol])) {
    if path.len() == target {
        visit(path);
        return;
    }
    let last = *path.last().unwrap();
    for &v in shift.successors(last) {
        path.push(v);
        extend(shift, path, target, visit);
        path.pop();
    }
}
