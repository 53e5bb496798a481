//! Dispatch from a configuration to the core library.

use std::time::Instant;

use wpress_core::covering::{self, BisectMode, Provenance, StageSpec};
use wpress_core::frostman::{duality_gap, frostman_lp};
use wpress_core::measures::{self, smb_sample};
use wpress_core::power::power_join_identity_check;
use wpress_core::variational::{self, fullshift_closed_form};
use wpress_core::{CoverFamily, Error, Limits, MarkovMeasure};

use crate::config::{load, ConfigError, Loaded, ModeArg, RunConfig};
use crate::record::{ErrorKind, Num, ResultRecord};
use crate::suites;

/// Frostman feasibility tolerance on `mu(A) c exp(-weight)`.
pub const VIOLATION_TOL: f64 = 1e-10;

pub fn error_kind(e: &Error) -> ErrorKind {
    match e {
        Error::CapExceeded { .. } => ErrorKind::Resource,
        Error::Lp(_) => ErrorKind::Solver,
        _ => ErrorKind::Config,
    }
}

/// Runs one command. Errors become records with the matching exit code.
pub fn run(config: RunConfig) -> ResultRecord {
    let start = Instant::now();
    let mut rec = ResultRecord::new(config.name());
    rec.config = Some(config.clone());
    rec.seed = config.seed();
    match load(config) {
        Err(ConfigError::Input(e)) => rec.fail(error_kind(&e), e.to_string()),
        Err(e) => rec.fail(ErrorKind::Config, e.to_string()),
        Ok(loaded) => {
            rec.inputs_digest = Some(loaded.digest.clone());
            if let Err(e) = dispatch(&loaded, &mut rec) {
                rec.fail(error_kind(&e), e.to_string());
            }
        }
    }
    rec.settle();
    rec.timing.elapsed_ms = Num(start.elapsed().as_secs_f64() * 1e3);
    rec
}

/// The measure of a run: the loaded file or the Parry measure of the top.
pub fn measure_of(loaded: &Loaded) -> wpress_core::Result<MarkovMeasure> {
    match &loaded.measure {
        Some(m) => Ok(m.clone()),
        None => MarkovMeasure::parry(loaded.system.top()),
    }
}

fn dispatch(loaded: &Loaded, rec: &mut ResultRecord) -> wpress_core::Result<()> {
    let sys = &loaded.system;
    let f = &loaded.potential;
    match &loaded.config {
        RunConfig::Upper { n, .. } => {
            rec.value("upper_pressure", covering::upper_pressure(sys, f, *n)?, Provenance::SingleScale);
            if let Ok(cf) = fullshift_closed_form(sys, f) {
                rec.value("closed_form", cf, Provenance::ClosedForm);
            }
            rec.detail("windows", Provenance::Exact, &sys.window_lengths(*n));
        }
        RunConfig::Bisect { mode, stage, .. } => {
            let stage = StageSpec::new(sys, stage.min_n, stage.n_max, stage.depth)?;
            let mode = match mode {
                ModeArg::Single => BisectMode::SingleScale,
                ModeArg::Lp => BisectMode::Lp,
            };
            let b = covering::pressure_bisect(sys, f, &stage, mode)?;
            rec.value("upper", b.upper, b.upper_source);
            if let Some((lo, hi)) = b.crossing {
                rec.value("crossing_lo", lo, b.upper_source);
                rec.value("crossing_hi", hi, b.upper_source);
            }
            rec.detail("stage", Provenance::Exact, &stage);
            rec.detail("bracket", b.upper_source, &b);
        }
        RunConfig::Lp { s, stage, .. } => {
            let stage = StageSpec::new(sys, stage.min_n, stage.n_max, stage.depth)?;
            let v = covering::w_lp_stage_with(sys, f, *s, &stage, &Limits::default())?;
            rec.value("lambda", v.value, Provenance::Lp);
            rec.value("log_lambda", v.log_value, Provenance::Lp);
            rec.detail("stage", Provenance::Exact, &stage);
            rec.detail("lp", Provenance::Lp, &v);
        }
        RunConfig::Frostman { s, stage, dump_measure, .. } => {
            let stage = StageSpec::new(sys, stage.min_n, stage.n_max, stage.depth)?;
            let cert = frostman_lp(sys, f, *s, &stage)?;
            let duality = duality_gap(sys, f, *s, &stage)?;
            rec.value("c", cert.c, Provenance::FrostmanLp);
            rec.value("log_c", cert.log_c, Provenance::FrostmanLp);
            rec.value("gap", duality.gap, Provenance::Lp);
            rec.value("max_violation", cert.max_violation, Provenance::FrostmanLp);
            rec.detail("measure_summary", Provenance::FrostmanLp, &cert.summary());
            rec.detail("duality", Provenance::Lp, &duality);
            if cert.no_mass_certifiable {
                rec.flags.push("no-mass-certifiable".into());
            }
            rec.check(
                "frostman",
                "feasible",
                cert.max_violation <= VIOLATION_TOL,
                format!("max violation {:e}", cert.max_violation),
            );
            rec.check("frostman", "strong duality", duality.holds, format!("gap {:e}", duality.gap));
            if let Some(path) = dump_measure {
                let text = serde_json::to_string_pretty(&cert.measure)?;
                std::fs::write(path, text)?;
            }
        }
        RunConfig::Optimize { optimizer, .. } => {
            let r = variational::optimize_markov(sys, f, optimizer.l, &optimizer.options())?;
            rec.value("objective_lower", r.value.lower, Provenance::Optimizer);
            rec.value("objective_upper", r.value.upper, Provenance::Optimizer);
            rec.value("objective_midpoint", r.value.midpoint(), Provenance::Optimizer);
            if let Ok(cf) = fullshift_closed_form(sys, f) {
                rec.value("closed_form", cf, Provenance::ClosedForm);
            }
            rec.detail("result", Provenance::Optimizer, &r);
        }
        RunConfig::Smb { n, sample, seed, .. } => {
            let m = measure_of(loaded)?;
            let rate = measures::smb_expected_rate(sys, &m, *n)?;
            rec.value("expected_rate", rate, Provenance::Exact);
            if let (Some(limit), Some(slack)) = (measures::smb_limit(sys, &m), measures::smb_ceiling_slack(sys, &m, *n)) {
                rec.value("limit", limit, Provenance::ClosedForm);
                rec.value("ceiling_slack", slack, Provenance::ClosedForm);
                rec.check(
                    "smb",
                    "rate within ceiling slack",
                    (rate - limit).abs() <= slack + 1e-12,
                    format!("|{rate} - {limit}| vs {slack}"),
                );
            }
            if let Some(count) = sample {
                let s = smb_sample(sys, &m, *n, *count, *seed)?;
                rec.value("sampled_mean", s.mean, Provenance::Sampled);
                rec.value("sampled_std_dev", s.std_dev, Provenance::Sampled);
                rec.check(
                    "smb",
                    "sample within 3 sigma",
                    s.within_3_sigma,
                    format!("mean {} exact {}", s.mean, s.exact),
                );
                rec.detail("sample", Provenance::Sampled, &s);
            }
        }
        RunConfig::PowerCheck { m, n, rule_n, cover_len, .. } => {
            let covers = CoverFamily::cylinders(sys, &vec![*cover_len; sys.depth()])?;
            for &nn in n {
                let r = power_join_identity_check(sys, &covers, *m, nn)?;
                rec.check(
                    "power",
                    &format!("join identity n={nn}"),
                    r.equal && r.original_count == r.power_count,
                    format!("{} vs {}", r.original_count, r.power_count),
                );
                rec.detail(&format!("join n={nn}"), Provenance::Exact, &r);
            }
            let report = covering::power_rule_check(sys, f, &covers, *m, rule_n)?;
            for row in &report.rows {
                rec.value(&format!("original n={}", row.n), row.original, Provenance::SingleScale);
                rec.value(&format!("power n={}", row.n), row.power, Provenance::SingleScale);
                rec.check(
                    "power",
                    &format!("stage estimates n={}", row.n),
                    row.within,
                    format!("difference {:e} slack {:e}", row.difference, row.slack),
                );
            }
            rec.detail("power_rule", Provenance::SingleScale, &report);
        }
        RunConfig::Verify { suite, n, optimizer, .. } => suites::run_suite(loaded, *suite, *n, optimizer, rec)?,
    }
    Ok(())
}
