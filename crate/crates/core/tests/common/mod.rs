//! Random chains and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpress_core::{Alphabet, BlockCode, ChainSystem, Limits, Potential, Subshift, Symbol, Weights, Word};

pub const WEIGHTS: [&str; 6] = ["1", "1/2", "2/3", "1/3", "3/2", "0"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Irreducible subshift: a Hamiltonian cycle plus random extra edges.
pub fn random_shift(size: usize, density: f64, rng: &mut impl Rng) -> Subshift {
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(rng);
    let mut allowed = vec![vec![false; size]; size];
    for i in 0..size {
        allowed[order[i]][order[(i + 1) % size]] = true;
        for cell in allowed[i].iter_mut() {
            if rng.random_bool(density) {
                *cell = true;
            }
        }
    }
    Subshift::new(Alphabet::numeric(size).unwrap(), allowed).unwrap()
}

/// Random chain whose lower levels are the 1-step images of the top.
pub fn random_system(seed: u64, top: usize, depth: usize) -> ChainSystem {
    let mut rng = rng(seed);
    let density = rng.random_range(0.2..0.9);
    let mut levels = vec![random_shift(top, density, &mut rng)];
    let mut codes = Vec::new();
    for _ in 1..depth {
        let src = levels.last().unwrap().clone();
        let size = rng.random_range(1..=src.size());
        let mut map: Vec<Symbol> = (0..src.size()).map(|_| rng.random_range(0..size) as Symbol).collect();
        let mut slots: Vec<usize> = (0..src.size()).collect();
        slots.shuffle(&mut rng);
        for (c, &slot) in slots.iter().take(size).enumerate() {
            map[slot] = c as Symbol;
        }
        let mut allowed = vec![vec![false; size]; size];
        for u in 0..src.size() {
            for &v in src.successors(u as Symbol) {
                allowed[map[u] as usize][map[v as usize] as usize] = true;
            }
        }
        let dst = Subshift::new(Alphabet::numeric(size).unwrap(), allowed).unwrap();
        codes.push(BlockCode::new(src.alphabet().clone(), dst.alphabet().clone(), map).unwrap());
        levels.push(dst);
    }
    let mut weights = vec!["1".to_string()];
    if rng.random_bool(0.5) {
        weights[0] = "1/2".into();
    }
    for _ in 1..depth {
        weights.push(WEIGHTS[rng.random_range(0..WEIGHTS.len())].to_string());
    }
    let weights = Weights::parse_list(&weights.join(",")).unwrap();
    ChainSystem::new(levels, codes, weights).unwrap()
}

pub fn random_potential(system: &ChainSystem, range: usize, seed: u64) -> Potential {
    let mut rng = rng(seed);
    let table: BTreeMap<Word, f64> = system
        .top()
        .words(range, &Limits::default())
        .unwrap()
        .into_iter()
        .map(|w| (w, rng.random_range(-1.0..1.0)))
        .collect();
    Potential::new(system.top(), range, table).unwrap()
}

/// Relabels the top level by `perm` (old symbol `u` becomes `perm[u]`).
pub fn permute_top(system: &ChainSystem, potential: &Potential, perm: &[usize]) -> (ChainSystem, Potential) {
    let top = system.top();
    let n = top.size();
    let mut allowed = vec![vec![false; n]; n];
    for u in 0..n {
        for v in 0..n {
            allowed[perm[u]][perm[v]] = top.is_allowed(u as Symbol, v as Symbol);
        }
    }
    let new_top = Subshift::new(top.alphabet().clone(), allowed).unwrap();
    let mut levels = system.levels().to_vec();
    levels[0] = new_top.clone();
    let mut codes = system.codes().to_vec();
    if let Some(code) = codes.first_mut() {
        let mut map = vec![0; n];
        for u in 0..n {
            map[perm[u]] = code.image(u as Symbol);
        }
        *code = BlockCode::new(code.source().clone(), code.target().clone(), map).unwrap();
    }
    let table = potential
        .table()
        .iter()
        .map(|(w, &v)| (w.iter().map(|&s| perm[s as usize] as Symbol).collect(), v))
        .collect();
    let relabelled = ChainSystem::new(levels, codes, system.weights().clone()).unwrap();
    let f = Potential::new(&new_top, potential.range(), table).unwrap();
    (relabelled, f)
}

/// Mixed word of a top-level word: `x[..m_1]` followed by the level-`i`
/// images on `m_{i-1}..m_i`, built directly from the codes.
pub fn brute_key(system: &ChainSystem, m: &[usize], x: &[Symbol]) -> Word {
    let mut key = x[..m[0]].to_vec();
    let mut image = x.to_vec();
    for (i, code) in system.codes().iter().enumerate() {
        image = image.iter().map(|&s| code.image(s)).collect();
        key.extend_from_slice(&image[m[i]..m[i + 1]]);
    }
    key
}

/// `sup S_{m_1} f` inside each weighted `n`-cylinder, by enumeration.
pub fn brute_sups(system: &ChainSystem, f: &Potential, n: usize) -> BTreeMap<Word, f64> {
    let m = system.window_lengths(n);
    let len = (*m.last().unwrap()).max(m[0] + f.range() - 1);
    let mut best = BTreeMap::new();
    for x in system.top().words(len, &Limits::default()).unwrap() {
        let s = f.birkhoff_sum(&x, m[0]);
        let e = best.entry(brute_key(system, &m, &x)).or_insert(f64::NEG_INFINITY);
        *e = f64::max(*e, s);
    }
    best
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `(1/n) log sum_A exp(sup_A S_{m_1} f / a_1)` by enumeration.
pub fn brute_upper_pressure(system: &ChainSystem, f: &Potential, n: usize) -> f64 {
    let a1 = system.weights().first();
    log_sum_exp(brute_sups(system, f, n).values().map(|v| v / a1)) / n as f64
}

pub fn all_systems() -> Vec<(String, ChainSystem)> {
    let mut out: Vec<(String, ChainSystem)> = wpress_core::fixtures::all()
        .into_iter()
        .map(|(n, s)| (n.to_string(), s))
        .collect();
    for seed in 0..6 {
        out.push((format!("random{seed}"), random_system(seed, 2 + seed as usize % 2, 1 + seed as usize % 3)));
    }
    out
}
