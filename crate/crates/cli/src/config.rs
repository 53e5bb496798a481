//! Command-line surface and validated run configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wpress_core::covering::StageSpec;
use wpress_core::io::{load_measure, load_potential, load_system};
use wpress_core::{ChainSystem, MarkovMeasure, OptimizeOptions, Potential};

#[derive(Parser, Debug)]
#[command(name = "wpress", version, about = "Weighted topological pressure for chains of SFTs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: RunConfig,
}

/// Files every command reads, and where the record goes.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    /// Chain system JSON.
    #[arg(long)]
    pub system: PathBuf,
    /// Potential JSON; the zero potential if absent.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Write the record here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageArgs {
    /// Smallest scale.
    #[arg(long = "N", default_value_t = 1)]
    pub min_n: usize,
    /// Largest scale.
    #[arg(long = "n-max", default_value_t = 2)]
    pub n_max: usize,
    /// Depth of the row cylinders; `m_k(n_max)` if absent.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerArgs {
    /// Conditioning length of the hidden-level entropy brackets.
    #[arg(short = 'L', long = "L", default_value_t = 4)]
    pub l: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl OptimizerArgs {
    pub fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            restarts: self.restarts,
            iters: self.iters,
            seed: self.seed,
            step: self.step,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Single,
    Lp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Vp,
    Smb,
    Duality,
    Power,
    All,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    /// Single-scale upper estimate at scale n.
    Upper {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(short = 'n', default_value_t = 10)]
        n: usize,
    },
    /// Bisect the critical exponent of a stage.
    Bisect {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value = "single")]
        mode: ModeArg,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Fractional covering value of a stage at exponent s.
    Lp {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Frostman packing certificate of a stage at exponent s.
    Frostman {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[command(flatten)]
        stage: StageArgs,
        /// Write the full stage measure here.
        #[arg(long)]
        dump_measure: Option<PathBuf>,
    },
    /// Maximize the weighted entropy plus integral over Markov measures.
    Optimize {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Weighted SMB rate of a Markov measure.
    Smb {
        #[command(flatten)]
        inputs: Inputs,
        /// Measure JSON; the Parry measure of the top level if absent.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(short = 'N', long = "N", default_value_t = 10)]
        n: usize,
        /// Number of sampled orbits.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Join identity and stage estimates for the M-th power.
    PowerCheck {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(short = 'M', long = "M", default_value_t = 2)]
        m: usize,
        /// Scales for the join identity.
        #[arg(short = 'n', value_delimiter = ',', default_values_t = [1, 2, 3, 4])]
        n: Vec<usize>,
        /// Scales for the stage-estimate comparison.
        #[arg(long, value_delimiter = ',', default_values_t = [6])]
        rule_n: Vec<usize>,
        /// Length of the cylinder covers.
        #[arg(long, default_value_t = 1)]
        cover_len: usize,
    },
    /// Run invariant suites and exit nonzero on any failure.
    Verify {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Scale of the single-scale upper bound.
        #[arg(short = 'n', default_value_t = 10)]
        n: usize,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Range { field: &'static str, message: String },
    #[error(transparent)]
    Input(#[from] wpress_core::Error),
}

fn range(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        field,
        message: message.into(),
    }
}

/// A validated configuration with its inputs loaded.
#[derive(Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub system: ChainSystem,
    pub potential: Potential,
    pub measure: Option<MarkovMeasure>,
    /// SHA-256 of the configuration and every input file.
    pub digest: String,
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Upper { .. } => "upper",
            RunConfig::Bisect { .. } => "bisect",
            RunConfig::Lp { .. } => "lp",
            RunConfig::Frostman { .. } => "frostman",
            RunConfig::Optimize { .. } => "optimize",
            RunConfig::Smb { .. } => "smb",
            RunConfig::PowerCheck { .. } => "power-check",
            RunConfig::Verify { .. } => "verify",
        }
    }

    pub fn inputs(&self) -> &Inputs {
        match self {
            RunConfig::Upper { inputs, .. }
            | RunConfig::Bisect { inputs, .. }
            | RunConfig::Lp { inputs, .. }
            | RunConfig::Frostman { inputs, .. }
            | RunConfig::Optimize { inputs, .. }
            | RunConfig::Smb { inputs, .. }
            | RunConfig::PowerCheck { inputs, .. }
            | RunConfig::Verify { inputs, .. } => inputs,
        }
    }

    pub fn measure_path(&self) -> Option<&Path> {
        match self {
            RunConfig::Smb { measure, .. } | RunConfig::Verify { measure, .. } => measure.as_deref(),
            _ => None,
        }
    }

    /// The seed all randomness of the run flows from.
    pub fn seed(&self) -> Option<u64> {
        match self {
            RunConfig::Optimize { optimizer, .. } | RunConfig::Verify { optimizer, .. } => Some(optimizer.seed),
            RunConfig::Smb { seed, sample, .. } => sample.map(|_| *seed),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let stage_ok = |st: &StageArgs| {
            if st.min_n == 0 {
                return Err(range("N", "must be at least 1"));
            }
            if st.n_max < st.min_n {
                return Err(range("n-max", format!("{} is below N = {}", st.n_max, st.min_n)));
            }
            Ok(())
        };
        let opt_ok = |o: &OptimizerArgs| {
            if o.l == 0 {
                return Err(range("L", "must be at least 1"));
            }
            if o.restarts == 0 {
                return Err(range("restarts", "must be at least 1"));
            }
            if !(o.step > 0.0 && o.step.is_finite()) {
                return Err(range("step", "must be positive"));
            }
            Ok(())
        };
        let s_ok = |s: f64| {
            if s.is_finite() {
                Ok(())
            } else {
                Err(range("s", "must be finite"))
            }
        };
        match self {
            RunConfig::Upper { n, .. } if *n == 0 => Err(range("n", "must be at least 1")),
            RunConfig::Upper { .. } => Ok(()),
            RunConfig::Bisect { stage, .. } => stage_ok(stage),
            RunConfig::Lp { s, stage, .. } | RunConfig::Frostman { s, stage, .. } => {
                s_ok(*s)?;
                stage_ok(stage)
            }
            RunConfig::Optimize { optimizer, .. } => opt_ok(optimizer),
            RunConfig::Smb { n, sample, .. } => {
                if *n == 0 {
                    return Err(range("N", "must be at least 1"));
                }
                if *sample == Some(0) {
                    return Err(range("sample", "must be at least 1"));
                }
                Ok(())
            }
            RunConfig::PowerCheck { m, n, rule_n, cover_len, .. } => {
                if *m == 0 {
                    return Err(range("M", "must be at least 1"));
                }
                if n.iter().chain(rule_n).any(|&x| x == 0) {
                    return Err(range("n", "scales must be at least 1"));
                }
                if *cover_len == 0 {
                    return Err(range("cover-len", "must be at least 1"));
                }
                Ok(())
            }
            RunConfig::Verify { n, optimizer, .. } => {
                if *n == 0 {
                    return Err(range("n", "must be at least 1"));
                }
                opt_ok(optimizer)
            }
        }
    }

    pub fn stage(&self, system: &ChainSystem) -> Option<wpress_core::Result<StageSpec>> {
        match self {
            RunConfig::Bisect { stage, .. } | RunConfig::Lp { stage, .. } | RunConfig::Frostman { stage, .. } => {
                Some(StageSpec::new(system, stage.min_n, stage.n_max, stage.depth))
            }
            _ => None,
        }
    }
}

/// Validates ranges, loads every referenced file, and hashes the inputs.
pub fn load(config: RunConfig) -> Result<Loaded, ConfigError> {
    config.validate()?;
    let inputs = config.inputs();
    let system = load_system(&inputs.system)?;
    let potential = match &inputs.potential {
        Some(p) => load_potential(&system, p)?,
        None => Potential::zero(),
    };
    let measure = config
        .measure_path()
        .map(|p| load_measure(&system, p))
        .transpose()?;
    if let Some(stage) = config.stage(&system) {
        stage?;
    }

    let mut hasher = Sha256::new();
    let mut canonical = config.clone();
    strip_output(&mut canonical);
    hasher.update(serde_json::to_vec(&canonical).expect("configs serialize"));
    let files = [Some(inputs.system.as_path()), inputs.potential.as_deref(), config.measure_path()];
    for path in files.into_iter().flatten() {
        hasher.update(std::fs::read(path).map_err(wpress_core::Error::from)?);
    }
    Ok(Loaded {
        digest: hex::encode(hasher.finalize()),
        config,
        system,
        potential,
        measure,
    })
}

fn strip_output(config: &mut RunConfig) {
    match config {
        RunConfig::Upper { inputs, .. }
        | RunConfig::Bisect { inputs, .. }
        | RunConfig::Lp { inputs, .. }
        | RunConfig::Optimize { inputs, .. }
        | RunConfig::Smb { inputs, .. }
        | RunConfig::PowerCheck { inputs, .. }
        | RunConfig::Verify { inputs, .. } => inputs.out = None,
        RunConfig::Frostman { inputs, dump_measure, .. } => {
            inputs.out = None;
            *dump_measure = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        Cli::try_parse_from(args).unwrap().command
    }

    #[test]
    fn defaults_are_filled() {
        match parse(&["wpress", "upper", "--system", "s.json"]) {
            RunConfig::Upper { n, inputs } => {
                assert_eq!(n, 10);
                assert!(inputs.potential.is_none());
            }
            other => panic!("{other:?}"),
        }
        match parse(&["wpress", "lp", "--system", "s", "--s", "-0.5", "--N", "1", "--n-max", "4", "--depth", "6"]) {
            RunConfig::Lp { s, stage, .. } => {
                assert_eq!(s, -0.5);
                assert_eq!((stage.min_n, stage.n_max, stage.depth), (1, 4, Some(6)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ranges_are_checked() {
        let c = parse(&["wpress", "bisect", "--system", "s", "--N", "3", "--n-max", "2"]);
        assert!(matches!(c.validate(), Err(ConfigError::Range { field: "n-max", .. })));
        let c = parse(&["wpress", "optimize", "--system", "s", "-L", "0"]);
        assert!(matches!(c.validate(), Err(ConfigError::Range { field: "L", .. })));
    }

    #[test]
    fn configs_round_trip() {
        let c = parse(&["wpress", "power-check", "--system", "s", "-M", "3", "-n", "1,2"]);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
