//! Structured output record.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use wpress_core::covering::Provenance;

/// A float that survives JSON: non-finite values are written as the
/// strings `"inf"`, `"-inf"` and `"nan"`.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 || (self.0.is_nan() && other.0.is_nan())
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Num(x)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Num(f64::INFINITY)),
                "-inf" => Ok(Num(f64::NEG_INFINITY)),
                "nan" => Ok(Num(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Value {
    pub name: String,
    pub value: Num,
    pub provenance: Provenance,
}

/// A structured report from the core library, tagged with its source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    pub name: String,
    pub provenance: Provenance,
    pub data: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Config,
    Resource,
    Solver,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: Num,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub config: Option<crate::config::RunConfig>,
    pub inputs_digest: Option<String>,
    pub seed: Option<u64>,
    pub values: Vec<Value>,
    pub details: Vec<Detail>,
    pub checks: Vec<Check>,
    pub flags: Vec<String>,
    pub error: Option<ErrorRecord>,
    pub exit_code: i32,
    pub timing: Timing,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

impl ResultRecord {
    pub fn new(command: &str) -> Self {
        ResultRecord {
            command: command.to_string(),
            config: None,
            inputs_digest: None,
            seed: None,
            values: Vec::new(),
            details: Vec::new(),
            checks: Vec::new(),
            flags: Vec::new(),
            error: None,
            exit_code: EXIT_PASS,
            timing: Timing { elapsed_ms: Num(0.0) },
        }
    }

    pub fn value(&mut self, name: &str, value: f64, provenance: Provenance) {
        self.values.push(Value {
            name: name.to_string(),
            value: Num(value),
            provenance,
        });
    }

    pub fn detail(&mut self, name: &str, provenance: Provenance, data: &impl Serialize) {
        self.details.push(Detail {
            name: name.to_string(),
            provenance,
            data: serde_json::to_value(data).expect("reports serialize"),
        });
    }

    pub fn check(&mut self, suite: &str, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            suite: suite.to_string(),
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value.0)
    }

    pub fn fail(&mut self, kind: ErrorKind, message: impl Into<String>) {
        self.exit_code = match kind {
            ErrorKind::Config => EXIT_CONFIG,
            ErrorKind::Resource => EXIT_RESOURCE,
            ErrorKind::Solver => EXIT_ASSERTION,
        };
        self.error = Some(ErrorRecord {
            kind,
            message: message.into(),
        });
    }

    /// Exit 1 if any check failed and no error was recorded.
    pub fn settle(&mut self) {
        if self.error.is_none() && self.checks.iter().any(|c| !c.passed) {
            self.exit_code = EXIT_ASSERTION;
        }
    }

    /// Copy with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.timing.elapsed_ms = Num(0.0);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_round_trip() {
        let mut r = ResultRecord::new("upper");
        r.value("a", f64::INFINITY, Provenance::Lp);
        r.value("b", f64::NEG_INFINITY, Provenance::Lp);
        r.value("c", f64::NAN, Provenance::Lp);
        r.value("d", 0.1 + 0.2, Provenance::SingleScale);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"-inf\""));
        let back: ResultRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
