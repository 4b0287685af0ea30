//! CSV, JSON and terminal renderings of run results. Every file starts with
//! the resolved configuration and seed, and the same inputs always give the
//! same bytes.

use serde::Serialize;

use crate::config::RunConfig;
use crate::counterexample::{Sweep, SweepRow, SweepSummary};
use crate::run::{ConvergeRow, ConvergeRun, VerifyRun, VerifySummary};
use crate::verify::{CheckKind, CheckResult, ConvergenceFit};

pub const SWEEP_COLUMNS: [&str; 6] = [
    "f",
    "linear_prediction",
    "exact_peierls",
    "exact_linear",
    "transformed_free",
    "gap",
];

pub const CHECK_COLUMNS: [&str; 7] = ["name", "kind", "bound", "passed", "measured", "tolerance", "details"];

pub const CONVERGE_COLUMNS: [&str; 4] = ["series", "spacing", "n_sites", "value"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// `# `-prefixed lines naming the command, the seed and the full configuration.
pub fn provenance(command: &str, config: &RunConfig) -> String {
    let mut out = format!(
        "# dirac-lab {} {command}\n# seed = {}\n# resolved config:\n",
        env!("CARGO_PKG_VERSION"),
        config.seed
    );
    for line in config.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("#   ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn csv_table<I>(header: &[&str], records: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn sweep_record(r: &SweepRow) -> Vec<String> {
    vec![
        float(r.f),
        float(r.linear_prediction),
        float(r.exact_peierls_energy),
        float(r.exact_linear_scheme_energy),
        float(r.transformed_free_energy),
        float(r.gap),
    ]
}

pub fn sweep_csv(config: &RunConfig, sweep: &Sweep) -> String {
    let s = &sweep.summary;
    let mut out = provenance("sweep", config);
    out.push_str(&format!(
        "# free_energy = {}\n# divergence_weight = {}\n# crossover_f = {}\n# exact_floor = {}\n# min_prediction = {}\n",
        float(s.free_energy),
        float(s.divergence_weight),
        s.crossover_f.map(float).unwrap_or_else(|| "none".into()),
        float(s.exact_floor),
        float(s.min_prediction),
    ));
    out.push_str(&csv_table(&SWEEP_COLUMNS, sweep.rows.iter().map(sweep_record)));
    out
}

#[derive(Serialize)]
struct SweepJson<'a> {
    command: &'static str,
    config: &'a RunConfig,
    seed: u64,
    columns: [&'static str; 6],
    rows: &'a [SweepRow],
    summary: &'a SweepSummary,
}

pub fn sweep_json(config: &RunConfig, sweep: &Sweep) -> String {
    json(&SweepJson {
        command: "sweep",
        config,
        seed: config.seed,
        columns: SWEEP_COLUMNS,
        rows: &sweep.rows,
        summary: &sweep.summary,
    })
}

fn kind_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::Identity => "identity",
        CheckKind::Probe => "probe",
    }
}

fn bound_name(c: &CheckResult) -> &'static str {
    match c.bound {
        crate::verify::Bound::AbsAtMost => "abs_at_most",
        crate::verify::Bound::AtLeast => "at_least",
        crate::verify::Bound::AtMost => "at_most",
    }
}

pub fn checks_csv(config: &RunConfig, run: &VerifyRun) -> String {
    let s = &run.summary;
    let mut out = provenance("verify", config);
    out.push_str(&format!(
        "# identities = {}\n# identity_failures = {}\n# probes = {}\n# probes_outside_bound = {}\n",
        s.identities, s.identity_failures, s.probes, s.probes_outside_bound
    ));
    out.push_str(&csv_table(
        &CHECK_COLUMNS,
        run.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                kind_name(c.kind).into(),
                bound_name(c).into(),
                c.passed.to_string(),
                float(c.measured),
                float(c.tolerance),
                c.details.clone(),
            ]
        }),
    ));
    out
}

#[derive(Serialize)]
struct ChecksJson<'a> {
    command: &'static str,
    config: &'a RunConfig,
    seed: u64,
    checks: &'a [CheckResult],
    summary: &'a VerifySummary,
}

pub fn checks_json(config: &RunConfig, run: &VerifyRun) -> String {
    json(&ChecksJson {
        command: "verify",
        config,
        seed: config.seed,
        checks: &run.checks,
        summary: &run.summary,
    })
}

/// Fixed-width table for the terminal.
pub fn checks_table(run: &VerifyRun) -> String {
    let width = run.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!(
        "{:<6} {:<8} {:<width$} {:>14} {:>12}\n",
        "status", "kind", "name", "measured", "bound"
    );
    for c in &run.checks {
        let status = match (c.kind, c.passed) {
            (_, true) => "ok",
            (CheckKind::Identity, false) => "FAIL",
            (CheckKind::Probe, false) => "note",
        };
        let op = match c.bound {
            crate::verify::Bound::AbsAtMost => "|x|<=",
            crate::verify::Bound::AtLeast => ">=",
            crate::verify::Bound::AtMost => "<=",
        };
        out.push_str(&format!(
            "{:<6} {:<8} {:<width$} {:>14.6e} {:>5}{:<9.2e}\n",
            status,
            kind_name(c.kind),
            c.name,
            c.measured,
            op,
            c.tolerance
        ));
    }
    let s = &run.summary;
    out.push_str(&format!(
        "\n{} identities, {} failed; {} probes, {} outside their reference bound\n",
        s.identities, s.identity_failures, s.probes, s.probes_outside_bound
    ));
    out
}

fn fit_line(name: &str, fit: &ConvergenceFit) -> String {
    format!(
        "# fit {name}: order = {}, r_squared = {}, degenerate = {}\n",
        opt_float(fit.fitted_order),
        opt_float(fit.r_squared),
        fit.degenerate
    )
}

pub fn converge_csv(config: &RunConfig, run: &ConvergeRun) -> String {
    let mut out = provenance("converge", config);
    for (name, fit) in run.fits() {
        out.push_str(&fit_line(name, fit));
    }
    out.push_str(&format!(
        "# energy_shift.plateau_deviation = {}\n# paradox.last_relative_change = {}\n",
        opt_float(run.energy_shift.plateau_deviation),
        float(run.paradox.last_relative_change)
    ));
    out.push_str(&csv_table(
        &CONVERGE_COLUMNS,
        run.rows().iter().map(|r| vec![r.series.clone(), float(r.spacing), r.n_sites.to_string(), float(r.value)]),
    ));
    out
}

#[derive(Serialize)]
struct ConvergeJson<'a> {
    command: &'static str,
    config: &'a RunConfig,
    seed: u64,
    rows: Vec<ConvergeRow>,
    studies: &'a ConvergeRun,
}

pub fn converge_json(config: &RunConfig, run: &ConvergeRun) -> String {
    json(&ConvergeJson {
        command: "converge",
        config,
        seed: config.seed,
        rows: run.rows(),
        studies: run,
    })
}

/// Short terminal summary of a convergence run.
pub fn converge_table(run: &ConvergeRun) -> String {
    let mut out = String::from("fit                                order        r^2\n");
    for (name, fit) in run.fits() {
        let show = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        let tag = if fit.degenerate { " (degenerate)" } else { "" };
        out.push_str(&format!(
            "{:<32} {:>8} {:>10}{tag}\n",
            name,
            show(fit.fitted_order),
            show(fit.r_squared)
        ));
    }
    if let Some(last) = run.energy_shift.levels.last() {
        out.push_str(&format!(
            "\nvacuum shift P at a = {}: {:.6e}; residual without P: {:.6e}\n",
            last.spacing, last.vacuum_shift, last.residual_without_p
        ));
    }
    if let Some(last) = run.paradox.levels.last() {
        out.push_str(&format!(
            "P/(a sum (grad chi)^2) at a = {}: {:.6} (last relative change {:.4})\n",
            last.spacing, last.ratio, run.paradox.last_relative_change
        ));
    }
    out
}

/// Terminal summary of a sweep.
pub fn sweep_table(sweep: &Sweep) -> String {
    let s = &sweep.summary;
    let mut out = format!(
        "free energy {:.6e}, divergence weight {:.6e}\n{:>12} {:>16} {:>16} {:>16}\n",
        s.free_energy, s.divergence_weight, "f", "prediction", "exact_peierls", "gap"
    );
    for r in &sweep.rows {
        out.push_str(&format!(
            "{:>12.4} {:>16.6e} {:>16.6e} {:>16.6e}\n",
            r.f, r.linear_prediction, r.exact_peierls_energy, r.gap
        ));
    }
    out.push_str(&format!(
        "crossover f* = {}; exact floor {:.6e}; lowest prediction {:.6e}\n",
        s.crossover_f.map(|f| format!("{f:.6}")).unwrap_or_else(|| "not reached".into()),
        s.exact_floor,
        s.min_prediction
    ));
    out
}
