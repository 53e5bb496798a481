//! Invariant suites behind `wpress verify`.

use wpress_core::covering::{Provenance, StageSpec};
use wpress_core::cylinders::enumerate_weighted_cylinders;
use wpress_core::frostman::duality_gap;
use wpress_core::measures;
use wpress_core::power::power_join_identity_check;
use wpress_core::variational::{self, lower_bound_check, zeroth_symbol_partitions};
use wpress_core::{covering, CoverFamily, Limits, Result};

use crate::config::{Loaded, OptimizerArgs, Suite};
use crate::record::ResultRecord;
use crate::run::{measure_of, VIOLATION_TOL};

const MASS_TOL: f64 = 1e-10;
const SAMPLE_ORBITS: usize = 1000;

pub fn run_suite(
    loaded: &Loaded,
    suite: Suite,
    n: usize,
    optimizer: &OptimizerArgs,
    rec: &mut ResultRecord,
) -> Result<()> {
    match suite {
        Suite::Vp => vp(loaded, n, optimizer, rec),
        Suite::Smb => smb(loaded, n, optimizer.seed, rec),
        Suite::Duality => duality(loaded, rec),
        Suite::Power => power(loaded, rec),
        Suite::All => {
            vp(loaded, n, optimizer, rec)?;
            smb(loaded, n, optimizer.seed, rec)?;
            duality(loaded, rec)?;
            power(loaded, rec)
        }
    }
}

fn vp(loaded: &Loaded, n: usize, optimizer: &OptimizerArgs, rec: &mut ResultRecord) -> Result<()> {
    let (sys, f) = (&loaded.system, &loaded.potential);
    let stage = StageSpec::single(sys, n)?;
    let cert_stage = StageSpec::new(sys, 1, 2, None)?;
    let r = variational::vp_report(sys, f, &stage, Some(&cert_stage), optimizer.l, &optimizer.options())?;
    rec.value("optimizer_lower", r.optimizer.value.lower, Provenance::Optimizer);
    rec.value("optimizer_upper", r.optimizer.value.upper, Provenance::Optimizer);
    rec.value("stage_upper", r.stage_upper, r.upper_source);
    rec.value("covering_gap", r.gap, r.upper_source);
    if let Some(cf) = r.closed_form {
        rec.value("closed_form", cf, Provenance::ClosedForm);
    }
    if let Some(lo) = r.frostman_lower {
        rec.value("frostman_lower", lo, Provenance::FrostmanLp);
    }
    rec.check(
        "vp",
        "sandwich",
        r.sandwich,
        format!("optimizer {} <= stage upper {}", r.optimizer.value.lower, r.stage_upper),
    );
    if let Some(ok) = r.closed_form_match {
        rec.check("vp", "optimizer matches closed form", ok, format!("{:?}", r.closed_form));
    }
    if let Some(ok) = r.upper_above_closed_form {
        rec.check("vp", "stage upper above closed form", ok, format!("{:?}", r.closed_form));
    }
    if let Some(c) = &r.certificate {
        rec.check(
            "vp",
            "certificate feasible",
            c.max_violation <= VIOLATION_TOL,
            format!("max violation {:e}", c.max_violation),
        );
    }
    let lb = lower_bound_check(sys, f, &r.optimizer.markov, &zeroth_symbol_partitions(sys), n, optimizer.l)?;
    rec.check(
        "vp",
        "lower-bound theorem",
        lb.holds,
        format!("margin {:e}", lb.margin),
    );
    rec.detail("vp_report", Provenance::Optimizer, &r);
    rec.detail("lower_bound", Provenance::SingleScale, &lb);
    Ok(())
}

fn smb(loaded: &Loaded, n: usize, seed: u64, rec: &mut ResultRecord) -> Result<()> {
    let sys = &loaded.system;
    let m = measure_of(loaded)?;
    for k in 1..=4 {
        let total: f64 = enumerate_weighted_cylinders(sys, k, &Limits::default())?
            .iter()
            .map(|c| measures::wcyl_mass(sys, &m, c))
            .sum::<Result<f64>>()?;
        rec.check(
            "smb",
            &format!("masses sum to one n={k}"),
            (total - 1.0).abs() <= MASS_TOL,
            format!("total {total}"),
        );
    }
    let rate = measures::smb_expected_rate(sys, &m, n)?;
    rec.value("smb_rate", rate, Provenance::Exact);
    if let Some(limit) = measures::smb_limit(sys, &m) {
        rec.value("smb_limit", limit, Provenance::ClosedForm);
        for k in [n, n + 1] {
            let r = measures::smb_expected_rate(sys, &m, k)?;
            let slack = measures::smb_ceiling_slack(sys, &m, k).unwrap_or(0.0);
            rec.check(
                "smb",
                &format!("rate within ceiling slack n={k}"),
                (r - limit).abs() <= slack + 1e-12,
                format!("|{r} - {limit}| vs {slack}"),
            );
        }
    }
    let s = measures::smb_sample(sys, &m, n, SAMPLE_ORBITS, seed)?;
    rec.value("smb_sampled_mean", s.mean, Provenance::Sampled);
    rec.check(
        "smb",
        "sample within 3 sigma",
        s.within_3_sigma,
        format!("mean {} exact {} sd {}", s.mean, s.exact, s.std_dev),
    );
    Ok(())
}

fn duality(loaded: &Loaded, rec: &mut ResultRecord) -> Result<()> {
    let (sys, f) = (&loaded.system, &loaded.potential);
    for n_max in 1..=2 {
        let stage = StageSpec::new(sys, 1, n_max, None)?;
        for s in [0.0, 1.0, 1.9] {
            let r = duality_gap(sys, f, s, &stage)?;
            let name = format!("N=1 n_max={n_max} s={s}");
            rec.check("duality", &format!("strong duality {name}"), r.holds, format!("gap {:e}", r.gap));
            rec.check(
                "duality",
                &format!("feasible {name}"),
                r.max_violation <= VIOLATION_TOL,
                format!("max violation {:e}", r.max_violation),
            );
        }
    }
    Ok(())
}

fn power(loaded: &Loaded, rec: &mut ResultRecord) -> Result<()> {
    let (sys, f) = (&loaded.system, &loaded.potential);
    let covers = CoverFamily::cylinders(sys, &vec![1; sys.depth()])?;
    for m in [2, 3] {
        for n in 1..=4 {
            let r = power_join_identity_check(sys, &covers, m, n)?;
            rec.check(
                "power",
                &format!("join identity M={m} n={n}"),
                r.equal && r.original_count == r.power_count,
                format!("{} vs {}", r.original_count, r.power_count),
            );
        }
        let report = covering::power_rule_check(sys, f, &covers, m, &[6])?;
        for row in &report.rows {
            rec.check(
                "power",
                &format!("stage estimates M={m} n={}", row.n),
                row.within,
                format!("difference {:e} slack {:e}", row.difference, row.slack),
            );
        }
    }
    Ok(())
}
