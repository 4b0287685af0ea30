//! The three runs behind the command line, returning plain data.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::counterexample::{sweep_f, Sweep};
use crate::error::{LabError, Result};
use crate::lattice::CouplingScheme;
use crate::recipe::{ChiRecipe, Lab, StateRecipe};
use crate::verify::{
    bare_current_refinement, energy_difference_refinement, energy_shift_study, paradox_refinement,
    run_suite, BareCurrentStudy, CheckKind, CheckResult, ConvergenceFit,
    EnergyShiftStudy, ParadoxRefinement,
};

/// Fewest halvings `converge` accepts.
pub const MIN_CONVERGE_HALVINGS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub identities: usize,
    pub identity_failures: usize,
    pub probes: usize,
    pub probes_outside_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRun {
    pub checks: Vec<CheckResult>,
    pub summary: VerifySummary,
}

impl VerifyRun {
    pub fn passed(&self) -> bool {
        self.summary.identity_failures == 0
    }
}

pub fn run_verify(config: &RunConfig) -> Result<VerifyRun> {
    let checks = run_suite(&config.suite_plan())?;
    let count = |kind: CheckKind, passed: Option<bool>| {
        checks
            .iter()
            .filter(|c| c.kind == kind && passed.is_none_or(|p| c.passed == p))
            .count()
    };
    let summary = VerifySummary {
        identities: count(CheckKind::Identity, None),
        identity_failures: count(CheckKind::Identity, Some(false)),
        probes: count(CheckKind::Probe, None),
        probes_outside_bound: count(CheckKind::Probe, Some(false)),
    };
    Ok(VerifyRun { checks, summary })
}

/// Sweeps `χ = f ∇·⟨J⟩` over the configured amplitudes for the configured state.
pub fn run_sweep(config: &RunConfig) -> Result<Sweep> {
    let lab = Lab::new(config.lattice_config())?;
    let state = config.state.build(&lab, config.seed)?;
    sweep_f(&state, &config.sweep.values(), &lab.config, &lab.h0, &lab.vac)
}

/// One value of one refinement series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub series: String,
    pub spacing: f64,
    pub n_sites: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRun {
    pub energy_shift: EnergyShiftStudy,
    /// Gauge function of the vacuum-shift refinement.
    pub paradox_chi: ChiRecipe,
    pub paradox: ParadoxRefinement,
    pub bare_current: BareCurrentStudy,
    pub linear_energy_difference: Option<ConvergenceFit>,
}

impl ConvergeRun {
    /// Named fits in report order.
    pub fn fits(&self) -> Vec<(&'static str, &ConvergenceFit)> {
        let mut out = vec![
            ("energy_shift.with_p", &self.energy_shift.with_p),
            ("energy_shift.without_p", &self.energy_shift.without_p),
            ("paradox.ratio_changes", &self.paradox.ratio_changes),
            ("bare_current.excitation", &self.bare_current.excitation),
        ];
        if let Some(fit) = &self.linear_energy_difference {
            out.push(("energy_difference.linear", fit));
        }
        out
    }

    /// Every series as one long table, grouped by series, coarse to fine.
    pub fn rows(&self) -> Vec<ConvergeRow> {
        let mut rows = Vec::new();
        let mut push = |series: &str, spacing: f64, n_sites: usize, value: f64| {
            rows.push(ConvergeRow {
                series: series.into(),
                spacing,
                n_sites,
                value,
            })
        };
        let es = &self.energy_shift.levels;
        for l in es {
            push("energy_shift.residual_with_p", l.spacing, l.n_sites, l.residual_with_p);
        }
        for l in es {
            push("energy_shift.residual_without_p", l.spacing, l.n_sites, l.residual_without_p);
        }
        for l in es {
            push("energy_shift.vacuum_shift", l.spacing, l.n_sites, l.vacuum_shift);
        }
        for l in es {
            push("energy_shift.linear_shift", l.spacing, l.n_sites, l.linear_shift);
        }
        for l in &self.paradox.levels {
            push("paradox.p", l.spacing, l.n_sites, l.p);
        }
        for l in &self.paradox.levels {
            push("paradox.gradient_weight", l.spacing, l.n_sites, l.gradient_weight);
        }
        for l in &self.paradox.levels {
            push("paradox.ratio", l.spacing, l.n_sites, l.ratio);
        }
        let sites: Vec<usize> = es.iter().map(|l| l.n_sites).collect();
        let bare = &self.bare_current;
        for (i, (&a, &v)) in bare.spacings.iter().zip(&bare.raw).enumerate() {
            push("bare_current.raw", a, sites[i], v);
        }
        for (i, (&a, &v)) in bare.excitation.spacings.iter().zip(&bare.excitation.errors).enumerate() {
            push("bare_current.excitation", a, sites[i], v);
        }
        if let Some(fit) = &self.linear_energy_difference {
            for (i, (&a, &v)) in fit.spacings.iter().zip(&fit.errors).enumerate() {
                push("energy_difference.linear", a, sites[i], v);
            }
        }
        rows
    }
}

pub fn run_converge(config: &RunConfig) -> Result<ConvergeRun> {
    let halvings = config.refinement.halvings;
    if halvings < MIN_CONVERGE_HALVINGS {
        return Err(LabError::TooFewLevels {
            needed: MIN_CONVERGE_HALVINGS as usize + 1,
            got: halvings as usize + 1,
        });
    }
    let base = config.lattice_config();
    let energy_shift = energy_shift_study(&config.state, &config.chi, &base, halvings, config.seed)?;
    let bare_current = bare_current_refinement(&config.state, &config.chi, &base, halvings, config.seed)?;
    let linear_energy_difference = if config.scheme.schemes().contains(&CouplingScheme::Linear) {
        Some(energy_difference_refinement(
            &config.state,
            &StateRecipe::Vacuum,
            &config.chi,
            &base,
            halvings,
            config.seed,
            CouplingScheme::Linear,
        )?)
    } else {
        None
    };
    let probe_box = crate::lattice::LatticeConfig {
        n_sites: config.refinement.probe_sites,
        ..base
    };
    probe_box.validate()?;
    let paradox_chi = ChiRecipe::Sine {
        amplitude: 0.5,
        wavelength: probe_box.length(),
    };
    let paradox = paradox_refinement(&paradox_chi, &probe_box, config.refinement.probe_halvings)?;
    Ok(ConvergeRun {
        energy_shift,
        paradox_chi,
        paradox,
        bare_current,
        linear_energy_difference,
    })
}
