//! Alphabets, one-step subshifts of finite type, 1-block factor codes and
//! chains of them, plus finite-range potentials on the top level.
//!
//! Symbols are stored as indices into a fixed, canonically ordered
//! [`Alphabet`]; a word is a plain `Vec<Symbol>`. All enumeration in the
//! crate follows the lexicographic order of these indices.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Symbol = u16;
pub type Word = Vec<Symbol>;

/// Caps on exhaustive work. Exceeding one yields [`Error::CapExceeded`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub enumeration: u64,
    pub lp_nonzeros: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration: 10_000_000,
            lp_nonzeros: 200_000,
        }
    }
}

impl Limits {
    pub(crate) fn check_enumeration(&self, what: &'static str, needed: &BigUint) -> Result<()> {
        if *needed > BigUint::from(self.enumeration) {
            return Err(Error::CapExceeded {
                what,
                needed: needed.to_string(),
                cap: self.enumeration,
            });
        }
        Ok(())
    }
}

/// Small bitset over symbol indices; used as the state of subset
/// constructions when counting realizable images.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSet {
    blocks: Vec<u64>,
}

impl SymbolSet {
    pub fn empty(size: usize) -> Self {
        SymbolSet {
            blocks: vec![0; size.div_ceil(64).max(1)],
        }
    }

    pub fn singleton(size: usize, s: Symbol) -> Self {
        let mut set = Self::empty(size);
        set.insert(s);
        set
    }

    pub fn insert(&mut self, s: Symbol) {
        let s = s as usize;
        self.blocks[s / 64] |= 1 << (s % 64);
    }

    pub fn contains(&self, s: Symbol) -> bool {
        let s = s as usize;
        self.blocks
            .get(s / 64)
            .is_some_and(|b| b & (1 << (s % 64)) != 0)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.blocks.iter().enumerate().flat_map(|(i, &b)| {
            (0..64)
                .filter(move |bit| b & (1u64 << bit) != 0)
                .map(move |bit| (i * 64 + bit) as Symbol)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, Symbol>,
    single_char: bool,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Alphabet("alphabet must be nonempty".into()));
        }
        if symbols.len() > Symbol::MAX as usize {
            return Err(Error::Alphabet(format!("{} symbols is too many", symbols.len())));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::Alphabet(format!("bad symbol `{s}`")));
            }
            if index.insert(s.clone(), i as Symbol).is_some() {
                return Err(Error::Alphabet(format!("duplicate symbol `{s}`")));
            }
        }
        let single_char = symbols.iter().all(|s| s.chars().count() == 1);
        Ok(Alphabet {
            symbols,
            index,
            single_char,
        })
    }

    /// Alphabet `{"0", "1", ..}` of the given size.
    pub fn numeric(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, s: Symbol) -> &str {
        &self.symbols[s as usize]
    }

    pub fn index_of(&self, symbol: &str) -> Result<Symbol> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    /// Single-character alphabets read words character by character;
    /// otherwise symbols are whitespace separated.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        if self.single_char {
            text.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| self.index_of(c.encode_utf8(&mut [0; 4])))
                .collect()
        } else {
            text.split_whitespace().map(|t| self.index_of(t)).collect()
        }
    }

    pub fn format_word(&self, word: &[Symbol]) -> String {
        let parts = word.iter().map(|&s| self.symbol(s));
        if self.single_char {
            parts.collect()
        } else {
            parts.collect::<Vec<_>>().join(" ")
        }
    }
}

/// One-step subshift of finite type given by its transition matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subshift {
    alphabet: Alphabet,
    allowed: Vec<Vec<bool>>,
    successors: Vec<Vec<Symbol>>,
}

impl Subshift {
    pub fn new(alphabet: Alphabet, allowed: Vec<Vec<bool>>) -> Result<Self> {
        let n = alphabet.len();
        if allowed.len() != n || allowed.iter().any(|row| row.len() != n) {
            return Err(Error::Subshift(format!(
                "transition matrix must be {n}x{n}"
            )));
        }
        for (u, row) in allowed.iter().enumerate() {
            if !row.iter().any(|&b| b) {
                return Err(Error::Subshift(format!(
                    "symbol `{}` has no outgoing transition",
                    alphabet.symbol(u as Symbol)
                )));
            }
            if !(0..n).any(|v| allowed[v][u]) {
                return Err(Error::Subshift(format!(
                    "symbol `{}` has no incoming transition",
                    alphabet.symbol(u as Symbol)
                )));
            }
        }
        let successors = allowed
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(v, _)| v as Symbol)
                    .collect()
            })
            .collect();
        Ok(Subshift {
            alphabet,
            allowed,
            successors,
        })
    }

    pub fn full(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        Self::new(alphabet, vec![vec![true; n]; n]).expect("full shift is valid")
    }

    /// Builds the shift forbidding the given length-2 words.
    pub fn from_forbidden(alphabet: Alphabet, forbidden: &[Word]) -> Result<Self> {
        let n = alphabet.len();
        let mut allowed = vec![vec![true; n]; n];
        for w in forbidden {
            if w.len() != 2 {
                return Err(Error::Subshift(format!(
                    "forbidden word `{}` must have length 2",
                    alphabet.format_word(w)
                )));
            }
            allowed[w[0] as usize][w[1] as usize] = false;
        }
        Self::new(alphabet, allowed)
    }

    /// Golden-mean shift on `{0, 1}`: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        let alphabet = Alphabet::numeric(2).unwrap();
        Self::from_forbidden(alphabet, &[vec![1, 1]]).unwrap()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn transitions(&self) -> &[Vec<bool>] {
        &self.allowed
    }

    pub fn is_allowed(&self, u: Symbol, v: Symbol) -> bool {
        self.allowed[u as usize][v as usize]
    }

    pub fn successors(&self, u: Symbol) -> &[Symbol] {
        &self.successors[u as usize]
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|row| row.iter().all(|&b| b))
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&s| (s as usize) < self.size())
            && word.windows(2).all(|w| self.is_allowed(w[0], w[1]))
    }

    pub fn check_admissible(&self, word: &[Symbol]) -> Result<()> {
        if word.iter().any(|&s| s as usize >= self.size()) {
            return Err(Error::UnknownSymbol(format!("{word:?}")));
        }
        if !self.is_admissible(word) {
            return Err(Error::Inadmissible(self.alphabet.format_word(word)));
        }
        Ok(())
    }

    pub fn is_irreducible(&self) -> bool {
        let n = self.size();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for (v, seen_v) in seen.iter_mut().enumerate() {
                    let edge = if forward {
                        self.allowed[u][v]
                    } else {
                        self.allowed[v][u]
                    };
                    if edge && !*seen_v {
                        *seen_v = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        reach(true) && reach(false)
    }

    /// Exact number of admissible words of length `n` (transfer-matrix powering).
    pub fn word_count(&self, n: usize) -> Result<BigUint> {
        if n == 0 {
            return Err(Error::arg("word length must be at least 1"));
        }
        let size = self.size();
        let mut counts = vec![BigUint::one(); size];
        for _ in 1..n {
            let mut next = vec![BigUint::zero(); size];
            for (u, c) in counts.iter().enumerate() {
                for &v in &self.successors[u] {
                    next[v as usize] += c;
                }
            }
            counts = next;
        }
        Ok(counts.into_iter().sum())
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn words(&self, n: usize, limits: &Limits) -> Result<Vec<Word>> {
        let count = self.word_count(n)?;
        limits.check_enumeration("word enumeration", &count)?;
        let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
        let mut word = Vec::with_capacity(n);
        for s in 0..self.size() as Symbol {
            word.push(s);
            self.extend_words(&mut word, n, &mut out);
            word.pop();
        }
        Ok(out)
    }

    fn extend_words(&self, word: &mut Word, n: usize, out: &mut Vec<Word>) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        let last = *word.last().unwrap();
        for &v in self.successors(last) {
            word.push(v);
            self.extend_words(word, n, out);
            word.pop();
        }
    }
}

/// A 1-block code between two alphabets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCode {
    source: Alphabet,
    target: Alphabet,
    map: Vec<Symbol>,
}

impl BlockCode {
    pub fn new(source: Alphabet, target: Alphabet, map: Vec<Symbol>) -> Result<Self> {
        if map.len() != source.len() {
            return Err(Error::arg(format!(
                "code maps {} symbols but the source alphabet has {}",
                map.len(),
                source.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&t| t as usize >= target.len()) {
            return Err(Error::arg(format!("code target index {bad} out of range")));
        }
        Ok(BlockCode {
            source,
            target,
            map,
        })
    }

    /// Code given as `source symbol -> target symbol` names. Must be total.
    pub fn from_names(source: &Alphabet, target: &Alphabet, pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut map = vec![None; source.len()];
        for (from, to) in pairs {
            let s = source.index_of(from)?;
            map[s as usize] = Some(target.index_of(to)?);
        }
        let map = map
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| {
                    Error::arg(format!(
                        "code has no image for symbol `{}`",
                        source.symbol(i as Symbol)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(source.clone(), target.clone(), map)
    }

    pub fn identity(alphabet: &Alphabet) -> Self {
        let map = (0..alphabet.len() as Symbol).collect();
        BlockCode {
            source: alphabet.clone(),
            target: alphabet.clone(),
            map,
        }
    }

    pub fn source(&self) -> &Alphabet {
        &self.source
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn map(&self) -> &[Symbol] {
        &self.map
    }

    pub fn image(&self, s: Symbol) -> Symbol {
        self.map[s as usize]
    }

    /// Symbolwise image of a word.
    pub fn apply(&self, word: &[Symbol]) -> Result<Word> {
        word.iter()
            .map(|&s| {
                self.map
                    .get(s as usize)
                    .copied()
                    .ok_or_else(|| Error::UnknownSymbol(format!("index {s}")))
            })
            .collect()
    }

    /// Pairs `(u, v)` allowed in `source` whose images are forbidden in `target`.
    pub fn transition_violations(&self, source: &Subshift, target: &Subshift) -> Vec<(Symbol, Symbol)> {
        let mut bad = Vec::new();
        for u in 0..source.size() as Symbol {
            for &v in source.successors(u) {
                if !target.is_allowed(self.image(u), self.image(v)) {
                    bad.push((u, v));
                }
            }
        }
        bad
    }

    /// Whether every admissible target word is the image of a source word.
    pub fn is_onto(&self, source: &Subshift, target: &Subshift) -> bool {
        let n = source.size();
        let preimage = |b: Symbol| {
            let mut set = SymbolSet::empty(n);
            for u in 0..n as Symbol {
                if self.image(u) == b {
                    set.insert(u);
                }
            }
            set
        };
        let mut seen = std::collections::HashSet::new();
        let mut queue = VecDeque::new();
        for b in 0..target.size() as Symbol {
            let set = preimage(b);
            if set.is_empty() {
                return false;
            }
            if seen.insert((set.clone(), b)) {
                queue.push_back((set, b));
            }
        }
        while let Some((set, b)) = queue.pop_front() {
            for &c in target.successors(b) {
                let mut next = SymbolSet::empty(n);
                for u in set.iter() {
                    for &v in source.successors(u) {
                        if self.image(v) == c {
                            next.insert(v);
                        }
                    }
                }
                if next.is_empty() {
                    return false;
                }
                if seen.insert((next.clone(), c)) {
                    queue.push_back((next, c));
                }
            }
        }
        true
    }
}

/// Weight vector kept as exact rationals so window ceilings are exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights {
    exact: Vec<BigRational>,
}

impl Weights {
    pub fn new(exact: Vec<BigRational>) -> Self {
        Weights { exact }
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| {
                BigRational::from_float(v)
                    .ok_or_else(|| Error::Parse(format!("weight {v} is not finite")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// Parses `"1, 0.5"`-style lists; each entry is a decimal, an integer,
    /// a fraction `p/q`, or scientific notation.
    pub fn parse_list(text: &str) -> Result<Self> {
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.exact.iter().map(rational_to_f64).collect()
    }

    pub fn first(&self) -> f64 {
        rational_to_f64(&self.exact[0])
    }

    pub fn total(&self) -> f64 {
        self.as_f64().iter().sum()
    }

    /// `m_i = ceil((a_1 + ... + a_i) n)` for every level.
    pub fn windows(&self, n: usize) -> Vec<usize> {
        let n = BigRational::from_integer(BigInt::from(n));
        let mut acc = BigRational::zero();
        self.exact
            .iter()
            .map(|a| {
                acc += a;
                (&acc * &n)
                    .ceil()
                    .to_integer()
                    .to_usize()
                    .expect("window length fits in usize")
            })
            .collect()
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exact.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from a decimal / fraction / scientific literal.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("`{text}` is not a number"));
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().map_err(|_| bad())?;
    let digits = digits / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

/// Outcome of [`validate_chain`]: hard violations plus informational notes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")?;
        }
        for v in &self.violations {
            writeln!(f, "{}: {}", v.location, v.message)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Checks every chain invariant and lists all violations with location.
pub fn validate_chain(
    levels: &[Subshift],
    codes: &[BlockCode],
    weights: &Weights,
    require_irreducible: bool,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let k = levels.len();
    if k == 0 {
        report.push("levels", "at least one level is required");
        return report;
    }
    if codes.len() + 1 != k {
        report.push(
            "codes",
            format!("{k} levels need {} codes, found {}", k - 1, codes.len()),
        );
    }
    if weights.len() != k {
        report.push(
            "weights",
            format!("{k} levels need {k} weights, found {}", weights.len()),
        );
    }
    for (i, a) in weights.exact().iter().enumerate() {
        if i == 0 && !a.is_positive() {
            report.push("weights[0]", "a1 must be positive");
        } else if i > 0 && a.is_negative() {
            report.push(format!("weights[{i}]"), format!("a{} must be nonnegative", i + 1));
        }
    }
    for (i, code) in codes.iter().enumerate() {
        let loc = format!("codes[{i}]");
        let (Some(src), Some(dst)) = (levels.get(i), levels.get(i + 1)) else {
            continue;
        };
        if code.source() != src.alphabet() {
            report.push(&loc, format!("source alphabet does not match level {}", i + 1));
            continue;
        }
        if code.target() != dst.alphabet() {
            report.push(&loc, format!("target alphabet does not match level {}", i + 2));
            continue;
        }
        for (u, v) in code.transition_violations(src, dst) {
            let img = [code.image(u), code.image(v)];
            report.push(
                &loc,
                format!(
                    "allowed word `{}` maps to forbidden `{}`",
                    src.alphabet().format_word(&[u, v]),
                    dst.alphabet().format_word(&img)
                ),
            );
        }
        if !code.is_onto(src, dst) {
            report.notes.push(format!(
                "code {} is not onto level {}; its image subshift is used",
                i + 1,
                i + 2
            ));
        }
    }
    if require_irreducible {
        for (i, level) in levels.iter().enumerate() {
            if !level.is_irreducible() {
                report.push(format!("levels[{i}]"), "transition matrix is not irreducible");
            }
        }
    }
    report
}

/// Chain `X_1 -> X_2 -> ... -> X_k` of subshifts joined by 1-block codes,
/// with its weight vector.
#[derive(Clone, Debug)]
pub struct ChainSystem {
    levels: Vec<Subshift>,
    codes: Vec<BlockCode>,
    weights: Weights,
    // level_maps[i][j]: level-i symbol -> level-(i + j) symbol
    level_maps: Vec<Vec<Vec<Symbol>>>,
}

impl ChainSystem {
    pub fn new(levels: Vec<Subshift>, codes: Vec<BlockCode>, weights: Weights) -> Result<Self> {
        Self::with_options(levels, codes, weights, false)
    }

    pub fn with_options(
        levels: Vec<Subshift>,
        codes: Vec<BlockCode>,
        weights: Weights,
        require_irreducible: bool,
    ) -> Result<Self> {
        let report = validate_chain(&levels, &codes, &weights, require_irreducible);
        if !report.is_ok() {
            return Err(Error::InvalidSystem(report));
        }
        let k = levels.len();
        let mut level_maps = Vec::with_capacity(k);
        for i in 0..k {
            let mut maps = vec![(0..levels[i].size() as Symbol).collect::<Vec<_>>()];
            for code in &codes[i..] {
                let prev = maps.last().unwrap();
                let next = prev.iter().map(|&s| code.image(s)).collect();
                maps.push(next);
            }
            level_maps.push(maps);
        }
        Ok(ChainSystem {
            levels,
            codes,
            weights,
            level_maps,
        })
    }

    /// Single-level system.
    pub fn single(shift: Subshift, weight: f64) -> Result<Self> {
        Self::new(vec![shift], vec![], Weights::from_f64(&[weight])?)
    }

    pub fn levels(&self) -> &[Subshift] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &Subshift {
        &self.levels[i]
    }

    pub fn top(&self) -> &Subshift {
        &self.levels[0]
    }

    pub fn codes(&self) -> &[BlockCode] {
        &self.codes
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn window_lengths(&self, n: usize) -> Vec<usize> {
        self.weights.windows(n)
    }

    /// Image of a level-`from` symbol at level `to` (`to >= from`, 0-based).
    pub fn project(&self, from: usize, to: usize, s: Symbol) -> Symbol {
        self.level_maps[from][to - from][s as usize]
    }

    /// `tau_{i}` restricted to symbols: level-1 symbol to level-(i+1) symbol.
    pub fn to_level(&self, level: usize) -> &[Symbol] {
        &self.level_maps[0][level]
    }

    pub fn largest_alphabet(&self) -> usize {
        self.levels.iter().map(Subshift::size).max().unwrap_or(1)
    }
}

/// Locally constant potential of finite range on the level-1 shift.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    range: usize,
    table: BTreeMap<Word, f64>,
}

impl Potential {
    pub fn new(shift: &Subshift, range: usize, table: BTreeMap<Word, f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::arg("potential range must be positive"));
        }
        for (w, v) in &table {
            if w.len() != range {
                return Err(Error::arg(format!(
                    "potential key `{}` must have length {range}",
                    shift.alphabet().format_word(w)
                )));
            }
            shift.check_admissible(w)?;
            if !v.is_finite() {
                return Err(Error::arg("potential values must be finite"));
            }
        }
        Ok(Potential { range, table })
    }

    pub fn zero() -> Self {
        Potential {
            range: 1,
            table: BTreeMap::new(),
        }
    }

    /// Range-1 potential from per-symbol values.
    pub fn unary(shift: &Subshift, values: &[f64]) -> Result<Self> {
        if values.len() != shift.size() {
            return Err(Error::arg("one value per symbol is required"));
        }
        let table = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(s, &v)| (vec![s as Symbol], v))
            .collect();
        Self::new(shift, 1, table)
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn table(&self) -> &BTreeMap<Word, f64> {
        &self.table
    }

    /// `f` at a point whose first `range` coordinates are `x[..range]`.
    pub fn value(&self, x: &[Symbol]) -> f64 {
        self.table.get(&x[..self.range]).copied().unwrap_or(0.0)
    }

    /// `S_len f` at a point with prefix `x` (needs `len + range - 1` symbols).
    pub fn birkhoff_sum(&self, x: &[Symbol], len: usize) -> f64 {
        (0..len).map(|i| self.value(&x[i..])).sum()
    }

    /// Per-symbol values for range-1 potentials.
    pub fn unary_values(&self, size: usize) -> Option<Vec<f64>> {
        (self.range == 1).then(|| (0..size as Symbol).map(|s| self.value(&[s])).collect())
    }

    /// `(min, max)` of `f` over admissible words.
    pub fn bounds(&self, shift: &Subshift) -> (f64, f64) {
        let words = shift
            .words(self.range, &Limits::default())
            .expect("potential range is small");
        words.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
            let v = self.value(w);
            (lo.min(v), hi.max(v))
        })
    }

    pub fn sup_norm(&self, shift: &Subshift) -> f64 {
        let (lo, hi) = self.bounds(shift);
        lo.abs().max(hi.abs())
    }

    /// `f + c`.
    pub fn shifted(&self, shift: &Subshift, c: f64) -> Self {
        let table = shift
            .words(self.range, &Limits::default())
            .expect("potential range is small")
            .into_iter()
            .map(|w| {
                let v = self.value(&w) + c;
                (w, v)
            })
            .collect();
        Potential {
            range: self.range,
            table,
        }
    }
}

pub fn word_count(shift: &Subshift, n: usize) -> Result<BigUint> {
    shift.word_count(n)
}

pub fn words(shift: &Subshift, n: usize, limits: &Limits) -> Result<Vec<Word>> {
    shift.words(n, limits)
}

pub fn apply_code(code: &BlockCode, word: &[Symbol]) -> Result<Word> {
    code.apply(word)
}

/// Maximum of `S_horizon f` over all level-1 points whose first
/// coordinates are `prefix`.
pub fn birkhoff_sup(
    system: &ChainSystem,
    potential: &Potential,
    prefix: &[Symbol],
    horizon: usize,
) -> Result<f64> {
    let shift = system.top();
    shift.check_admissible(prefix)?;
    if horizon == 0 || horizon > prefix.len() {
        return Err(Error::arg(format!(
            "horizon {horizon} must lie in 1..={}",
            prefix.len()
        )));
    }
    Ok(constrained_birkhoff_sup(shift, potential, prefix, horizon, &[]))
}

/// As [`birkhoff_sup`] but positions `prefix.len() + t` are restricted to
/// `constraints[t]`. Returns `-inf` when no point qualifies.
pub(crate) fn constrained_birkhoff_sup(
    shift: &Subshift,
    potential: &Potential,
    prefix: &[Symbol],
    horizon: usize,
    constraints: &[SymbolSet],
) -> f64 {
    let mut sets: Vec<SymbolSet> = prefix
        .iter()
        .map(|&s| SymbolSet::singleton(shift.size(), s))
        .collect();
    sets.extend_from_slice(constraints);
    sup_over_sets(shift, potential, &sets, horizon)
}

/// `sup S_horizon f(x)` over points with `x_j` in `sets[j]` for every
/// `j < sets.len()`; later coordinates are free. Max-plus dynamic program
/// over the last `range - 1` symbols.
pub(crate) fn sup_over_sets(
    shift: &Subshift,
    potential: &Potential,
    sets: &[SymbolSet],
    horizon: usize,
) -> f64 {
    let r = potential.range();
    let len = sets.len().max(horizon + r - 1).max(1);
    let keep = (r - 1).max(1);
    let all: Vec<Symbol> = (0..shift.size() as Symbol).collect();
    let mut states: BTreeMap<Word, f64> = BTreeMap::new();
    states.insert(Vec::new(), 0.0);
    for t in 0..len {
        let mut next: BTreeMap<Word, f64> = BTreeMap::new();
        for (tail, &val) in &states {
            let candidates: &[Symbol] = match tail.last() {
                Some(&u) => shift.successors(u),
                None => &all,
            };
            for &v in candidates {
                if sets.get(t).is_some_and(|set| !set.contains(v)) {
                    continue;
                }
                let mut window = tail.clone();
                window.push(v);
                let mut score = val;
                if window.len() >= r && t + 1 - r < horizon {
                    score += potential.value(&window[window.len() - r..]);
                }
                if window.len() > keep {
                    window.remove(0);
                }
                let e = next.entry(window).or_insert(f64::NEG_INFINITY);
                *e = e.max(score);
            }
        }
        states = next;
    }
    states.values().copied().fold(f64::NEG_INFINITY, f64::max)
}
