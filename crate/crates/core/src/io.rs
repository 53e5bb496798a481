//! JSON formats for systems, potentials and Markov measures.
//!
//! ```json
//! {
//!   "levels": [
//!     {"symbols": ["a", "b", "c", "d"]},
//!     {"symbols": ["0", "1"], "forbidden_words": ["11"]}
//!   ],
//!   "codes": [{"a": "0", "b": "0", "c": "1", "d": "1"}],
//!   "weights": "1, 0.5"
//! }
//! ```
//!
//! Potentials are `{"range": 1, "entries": {"a": "log(2)"}}`; missing words
//! are zero. Measures are `{"transition": [[...], ...]}` or
//! `{"bernoulli": [...]}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MarkovMeasure;
use crate::symbolic::{
    parse_rational, rational_to_f64, Alphabet, BlockCode, ChainSystem, Potential, Subshift, Weights,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub symbols: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forbidden_words: Option<Vec<String>>,
    /// 0/1 transition matrix, alternative to `forbidden_words`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Vec<u8>>>,
}

/// A number, or a string holding a decimal, a fraction or `log(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            Scalar::Number(x) => Ok(*x),
            Scalar::Text(t) => parse_scalar(t),
        }
    }
}

/// Parses `x`, `p/q`, `log(x)` or `c*log(x)`.
pub fn parse_scalar(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some((c, rest)) = t.split_once('*') {
        return Ok(parse_scalar(c)? * parse_scalar(rest)?);
    }
    if let Some(arg) = t.strip_prefix("log(").and_then(|r| r.strip_suffix(')')) {
        let x = rational_to_f64(&parse_rational(arg)?);
        if x <= 0.0 || x.is_nan() {
            return Err(Error::Parse(format!("log of non-positive value in `{text}`")));
        }
        return Ok(x.ln());
    }
    Ok(rational_to_f64(&parse_rational(t)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    Text(String),
    List(Vec<Scalar>),
}

impl WeightsSpec {
    /// Exact weights; JSON numbers are read through their shortest decimal form.
    pub fn to_weights(&self) -> Result<Weights> {
        match self {
            WeightsSpec::Text(t) => Weights::parse_list(t),
            WeightsSpec::List(items) => items
                .iter()
                .map(|s| match s {
                    Scalar::Number(x) => parse_rational(&format!("{x}")),
                    Scalar::Text(t) => parse_rational(t),
                })
                .collect::<Result<Vec<_>>>()
                .map(Weights::new),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub levels: Vec<LevelSpec>,
    #[serde(default)]
    pub codes: Vec<BTreeMap<String, String>>,
    pub weights: WeightsSpec,
    #[serde(default = "default_true")]
    pub require_irreducible: bool,
}

impl SystemSpec {
    pub fn build(&self) -> Result<ChainSystem> {
        let levels = self
            .levels
            .iter()
            .map(build_level)
            .collect::<Result<Vec<_>>>()?;
        if self.codes.len() + 1 != levels.len() {
            return Err(Error::Parse(format!(
                "{} levels need {} codes, found {}",
                levels.len(),
                levels.len().saturating_sub(1),
                self.codes.len()
            )));
        }
        let codes = self
            .codes
            .iter()
            .enumerate()
            .map(|(i, pairs)| BlockCode::from_names(levels[i].alphabet(), levels[i + 1].alphabet(), pairs))
            .collect::<Result<Vec<_>>>()?;
        ChainSystem::with_options(levels, codes, self.weights.to_weights()?, self.require_irreducible)
    }

    pub fn from_system(system: &ChainSystem) -> Self {
        let levels = system
            .levels()
            .iter()
            .map(|s| LevelSpec {
                symbols: s.alphabet().symbols().to_vec(),
                forbidden_words: None,
                transitions: (!s.is_full()).then(|| {
                    s.transitions()
                        .iter()
                        .map(|row| row.iter().map(|&b| b as u8).collect())
                        .collect()
                }),
            })
            .collect();
        let codes = system
            .codes()
            .iter()
            .map(|c| {
                (0..c.source().len())
                    .map(|s| {
                        (
                            c.source().symbol(s as _).to_string(),
                            c.target().symbol(c.image(s as _)).to_string(),
                        )
                    })
                    .collect()
            })
            .collect();
        let weights = system
            .weights()
            .exact()
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        SystemSpec {
            levels,
            codes,
            weights: WeightsSpec::Text(weights),
            require_irreducible: true,
        }
    }
}

fn build_level(spec: &LevelSpec) -> Result<Subshift> {
    let alphabet = Alphabet::new(spec.symbols.iter().cloned())?;
    match (&spec.forbidden_words, &spec.transitions) {
        (Some(_), Some(_)) => Err(Error::Parse(
            "a level takes either forbidden_words or transitions, not both".into(),
        )),
        (Some(words), None) => {
            let words = words
                .iter()
                .map(|w| alphabet.parse_word(w))
                .collect::<Result<Vec<_>>>()?;
            Subshift::from_forbidden(alphabet, &words)
        }
        (None, Some(rows)) => {
            let allowed = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|&b| match b {
                            0 => Ok(false),
                            1 => Ok(true),
                            _ => Err(Error::Parse("transition entries must be 0 or 1".into())),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Subshift::new(alphabet, allowed)
        }
        (None, None) => Ok(Subshift::full(alphabet)),
    }
}

fn default_range() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "default_range")]
    pub range: usize,
    #[serde(default)]
    pub entries: BTreeMap<String, Scalar>,
}

impl PotentialSpec {
    pub fn build(&self, system: &ChainSystem) -> Result<Potential> {
        let alphabet = system.top().alphabet();
        let table = self
            .entries
            .iter()
            .map(|(w, v)| Ok((alphabet.parse_word(w)?, v.to_f64()?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Potential::new(system.top(), self.range, table)
    }

    pub fn from_potential(system: &ChainSystem, potential: &Potential) -> Self {
        let alphabet = system.top().alphabet();
        PotentialSpec {
            range: potential.range(),
            entries: potential
                .table()
                .iter()
                .map(|(w, &v)| (alphabet.format_word(w), Scalar::Number(v)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<Scalar>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bernoulli: Option<Vec<Scalar>>,
    /// Top-level symbol of each row and column; alphabet order if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl MeasureSpec {
    pub fn build(&self, system: &ChainSystem) -> Result<MarkovMeasure> {
        let shift = system.top();
        let order = self.order(system)?;
        match (&self.transition, &self.bernoulli) {
            (Some(rows), None) => {
                if rows.len() != order.len() || rows.iter().any(|r| r.len() != order.len()) {
                    return Err(Error::Parse(format!(
                        "transition must be {0} x {0}",
                        order.len()
                    )));
                }
                let mut out = vec![vec![0.0; order.len()]; order.len()];
                for (i, row) in rows.iter().enumerate() {
                    for (j, p) in row.iter().enumerate() {
                        out[order[i]][order[j]] = p.to_f64()?;
                    }
                }
                MarkovMeasure::new(shift, out)
            }
            (None, Some(p)) => {
                if p.len() != order.len() {
                    return Err(Error::Parse(format!("bernoulli needs {} entries", order.len())));
                }
                let mut out = vec![0.0; order.len()];
                for (i, q) in p.iter().enumerate() {
                    out[order[i]] = q.to_f64()?;
                }
                MarkovMeasure::bernoulli(shift, &out)
            }
            _ => Err(Error::Parse("a measure needs exactly one of transition, bernoulli".into())),
        }
    }

    /// Alphabet index of each row.
    fn order(&self, system: &ChainSystem) -> Result<Vec<usize>> {
        let alphabet = system.top().alphabet();
        let Some(labels) = &self.labels else {
            return Ok((0..alphabet.len()).collect());
        };
        let order = labels
            .iter()
            .map(|l| alphabet.index_of(l).map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let distinct: std::collections::BTreeSet<_> = order.iter().collect();
        if order.len() != alphabet.len() || distinct.len() != order.len() {
            return Err(Error::Parse("labels must list every top-level symbol once".into()));
        }
        Ok(order)
    }

    pub fn from_measure(system: &ChainSystem, markov: &MarkovMeasure) -> Self {
        MeasureSpec {
            labels: Some(system.top().alphabet().symbols().to_vec()),
            transition: Some(
                markov
                    .transition()
                    .iter()
                    .map(|r| r.iter().map(|&p| Scalar::Number(p)).collect())
                    .collect(),
            ),
            bernoulli: None,
        }
    }
}

pub fn parse_system(text: &str) -> Result<ChainSystem> {
    serde_json::from_str::<SystemSpec>(text)?.build()
}

pub fn parse_potential(system: &ChainSystem, text: &str) -> Result<Potential> {
    serde_json::from_str::<PotentialSpec>(text)?.build(system)
}

pub fn parse_measure(system: &ChainSystem, text: &str) -> Result<MarkovMeasure> {
    serde_json::from_str::<MeasureSpec>(text)?.build(system)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load_system(path: &Path) -> Result<ChainSystem> {
    parse_system(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn load_potential(system: &ChainSystem, path: &Path) -> Result<Potential> {
    parse_potential(system, &read(path)?).map_err(|e| with_path(path, e))
}

pub fn load_measure(system: &ChainSystem, path: &Path) -> Result<MarkovMeasure> {
    parse_measure(system, &read(path)?).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Json(j) => Error::Parse(format!("{}: {j}", path.display())),
        other => other,
    }
}
