//! Refinement and scaling studies at fixed physical box and mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    energy_difference_residual, gradient_weight, link_currents, log_log_fit, max_abs,
    max_abs_pairwise, vacuum_paradox_probe, ConvergenceFit,
};
use crate::counterexample::linear_shift;
use crate::error::{LabError, Result};
use crate::gauge::{apply_gauge, make_unitary, vacuum_energy_shift, GaugeFunction};
use crate::lattice::{
    build_free_hamiltonian, link_current_expectations, Boundary, CouplingScheme, LatticeConfig,
    SingleParticleOperator,
};
use crate::linalg::CMatrix;
use crate::recipe::{ChiRecipe, Lab, StateRecipe};
use crate::state::{bloch_vacuum_projector, build_vacuum, free_energy, CorrelationState};

/// `base`, then `halvings` successive halvings of the spacing.
pub fn refinement_levels(base: &LatticeConfig, halvings: u32) -> Vec<LatticeConfig> {
    (0..=halvings).map(|h| base.refined(h)).collect()
}

fn check_physical(state: &StateRecipe) -> Result<()> {
    if !state.is_physical() {
        return Err(LabError::InvalidConfig(
            "refinement studies need a state recipe with a continuum meaning (vacuum or wavepacket)".into(),
        ));
    }
    Ok(())
}

struct Level {
    lab: Lab,
    state: CorrelationState,
    chi: GaugeFunction,
}

fn build_level(config: &LatticeConfig, state: &StateRecipe, chi: &ChiRecipe, seed: u64) -> Result<Level> {
    let lab = Lab::new(*config)?;
    let st = state.build(&lab, seed)?;
    let gf = chi.build(config, Some(&st))?;
    Ok(Level { lab, state: st, chi: gf })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyShiftLevel {
    pub spacing: f64,
    pub n_sites: usize,
    pub free_energy: f64,
    pub transformed_free_energy: f64,
    pub linear_shift: f64,
    pub vacuum_shift: f64,
    pub residual_with_p: f64,
    pub residual_without_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyShiftStudy {
    pub levels: Vec<EnergyShiftLevel>,
    pub with_p: ConvergenceFit,
    pub without_p: ConvergenceFit,
    /// `|D_without(a_min) - P(a_min)| / P(a_min)`; `None` when `P` vanishes.
    pub plateau_deviation: Option<f64>,
}

/// `D(a) = |E(UΩ) - E(Ω) - a Σ⟨J⟩∇χ - P(χ)|` over refinements, with and
/// without the vacuum term `P(χ)`.
pub fn energy_shift_study(
    state: &StateRecipe,
    chi: &ChiRecipe,
    base: &LatticeConfig,
    halvings: u32,
    seed: u64,
) -> Result<EnergyShiftStudy> {
    check_physical(state)?;
    let levels: Vec<EnergyShiftLevel> = refinement_levels(base, halvings)
        .par_iter()
        .map(|cfg| -> Result<EnergyShiftLevel> {
            let lv = build_level(cfg, state, chi, seed)?;
            let free = free_energy(&lv.state, &lv.lab.h0, &lv.lab.vac)?;
            let moved = apply_gauge(&lv.state, &lv.chi, cfg)?;
            let transformed = free_energy(&moved, &lv.lab.h0, &lv.lab.vac)?;
            let shift = linear_shift(&lv.state, &lv.chi, cfg)?;
            let p = vacuum_energy_shift(&lv.chi, cfg, &lv.lab.h0, &lv.lab.vac)?;
            Ok(EnergyShiftLevel {
                spacing: cfg.spacing,
                n_sites: cfg.n_sites,
                free_energy: free,
                transformed_free_energy: transformed,
                linear_shift: shift,
                vacuum_shift: p,
                residual_with_p: (transformed - free - shift - p).abs(),
                residual_without_p: (transformed - free - shift).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let spacings: Vec<f64> = levels.iter().map(|l| l.spacing).collect();
    let with_p = ConvergenceFit::new(spacings.clone(), levels.iter().map(|l| l.residual_with_p).collect())?;
    let without_p = ConvergenceFit::new(spacings, levels.iter().map(|l| l.residual_without_p).collect())?;
    let last = levels.last().expect("at least one level");
    let plateau_deviation = (last.vacuum_shift != 0.0)
        .then(|| (last.residual_without_p - last.vacuum_shift).abs() / last.vacuum_shift.abs());
    Ok(EnergyShiftStudy {
        levels,
        with_p,
        without_p,
        plateau_deviation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BareCurrentStudy {
    pub spacings: Vec<f64>,
    /// `max_l |⟨J_l⟩(UΩ) - ⟨J_l⟩(Ω)|`, dominated by the vacuum term.
    pub raw: Vec<f64>,
    /// The same with the rotated-vacuum contribution removed.
    pub excitation: ConvergenceFit,
}

pub fn bare_current_refinement(
    state: &StateRecipe,
    chi: &ChiRecipe,
    base: &LatticeConfig,
    halvings: u32,
    seed: u64,
) -> Result<BareCurrentStudy> {
    check_physical(state)?;
    let rows: Vec<(f64, f64, f64)> = refinement_levels(base, halvings)
        .par_iter()
        .map(|cfg| -> Result<(f64, f64, f64)> {
            let lv = build_level(cfg, state, chi, seed)?;
            let moved = apply_gauge(&lv.state, &lv.chi, cfg)?;
            let j0 = link_currents(&lv.state, cfg)?;
            let j1 = link_currents(&moved, cfg)?;
            let g = make_unitary(&lv.chi, cfg)?;
            let p = &lv.lab.vac.projector;
            let jv0 = link_current_expectations(p, cfg, None);
            let jv1 = link_current_expectations(&g.conjugate(p), cfg, None);
            let exc = max_abs((0..j0.len()).map(|l| (j1[l] - jv1[l]) - (j0[l] - jv0[l])));
            Ok((cfg.spacing, max_abs_pairwise(&j0, &j1), exc))
        })
        .collect::<Result<_>>()?;
    Ok(BareCurrentStudy {
        spacings: rows.iter().map(|r| r.0).collect(),
        raw: rows.iter().map(|r| r.1).collect(),
        excitation: ConvergenceFit::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.2).collect())?,
    })
}

/// Energy-difference residual between two recipes under refinement.
pub fn energy_difference_refinement(
    n: &StateRecipe,
    m: &StateRecipe,
    chi: &ChiRecipe,
    base: &LatticeConfig,
    halvings: u32,
    seed: u64,
    scheme: CouplingScheme,
) -> Result<ConvergenceFit> {
    check_physical(n)?;
    check_physical(m)?;
    let rows: Vec<(f64, f64)> = refinement_levels(base, halvings)
        .par_iter()
        .map(|cfg| -> Result<(f64, f64)> {
            let lv = build_level(cfg, n, chi, seed)?;
            let other = m.build(&lv.lab, seed)?;
            let r = energy_difference_residual(&lv.state, &other, &lv.chi, cfg, &lv.lab.h0, &lv.lab.vac, scheme)?;
            Ok((cfg.spacing, r))
        })
        .collect::<Result<_>>()?;
    ConvergenceFit::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeScaling {
    pub amplitudes: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: Option<f64>,
    pub r_squared: Option<f64>,
}

/// `P(εχ)` for each factor `ε`, with the fitted power of `ε`.
pub fn paradox_amplitude_scaling(
    chi: &GaugeFunction,
    config: &LatticeConfig,
    h0: &SingleParticleOperator,
    projector: &CMatrix,
    factors: &[f64],
) -> Result<AmplitudeScaling> {
    let values = factors
        .iter()
        .map(|&e| vacuum_paradox_probe(&chi.scaled(e), config, h0, projector).map(|p| p.p))
        .collect::<Result<Vec<_>>>()?;
    let fit = log_log_fit(factors, &values);
    Ok(AmplitudeScaling {
        amplitudes: factors.to_vec(),
        values,
        exponent: fit.map(|f| f.0),
        r_squared: fit.map(|f| f.1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxLevel {
    pub spacing: f64,
    pub n_sites: usize,
    pub p: f64,
    pub gradient_weight: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxRefinement {
    pub levels: Vec<ParadoxLevel>,
    /// Changes `|r_k - r_{k-1}|` of the ratio against the finer spacing.
    pub ratio_changes: ConvergenceFit,
    /// `|r_last - r_prev| / |r_last|`.
    pub last_relative_change: f64,
}

/// Vacuum projector for a free lattice: Bloch blocks on periodic chains,
/// dense diagonalization otherwise.
pub fn free_vacuum_projector(config: &LatticeConfig, h0: &SingleParticleOperator) -> Result<CMatrix> {
    match config.boundary {
        Boundary::Periodic => bloch_vacuum_projector(config),
        Boundary::Open => Ok(build_vacuum(h0)?.0.projector),
    }
}

/// `P(χ) / (a Σ (∇χ)²)` under refinement. The gauge function must be
/// defined without reference to a state.
pub fn paradox_refinement(chi: &ChiRecipe, base: &LatticeConfig, halvings: u32) -> Result<ParadoxRefinement> {
    if chi.needs_state() {
        return Err(LabError::InvalidGauge(
            "the vacuum probe needs a gauge function that does not depend on a state".into(),
        ));
    }
    if halvings < 1 {
        return Err(LabError::TooFewLevels { needed: 2, got: 1 });
    }
    let levels: Vec<ParadoxLevel> = refinement_levels(base, halvings)
        .par_iter()
        .map(|cfg| -> Result<ParadoxLevel> {
            let h0 = build_free_hamiltonian(cfg)?;
            let projector = free_vacuum_projector(cfg, &h0)?;
            let gf = chi.build(cfg, None)?;
            let probe = vacuum_paradox_probe(&gf, cfg, &h0, &projector)?;
            Ok(ParadoxLevel {
                spacing: cfg.spacing,
                n_sites: cfg.n_sites,
                p: probe.p,
                gradient_weight: gradient_weight(&gf, cfg)?,
                ratio: probe.ratio,
            })
        })
        .collect::<Result<_>>()?;
    let changes: Vec<f64> = levels.windows(2).map(|w| (w[1].ratio - w[0].ratio).abs()).collect();
    let finer: Vec<f64> = levels[1..].iter().map(|l| l.spacing).collect();
    let ratio_changes = if changes.len() >= 2 {
        ConvergenceFit::new(finer, changes.clone())?
    } else {
        ConvergenceFit {
            spacings: finer,
            errors: changes.clone(),
            fitted_order: None,
            r_squared: None,
            degenerate: true,
        }
    };
    let last = levels[levels.len() - 1].ratio;
    let last_relative_change = changes.last().copied().unwrap_or(0.0) / last.abs();
    Ok(ParadoxRefinement {
        levels,
        ratio_changes,
        last_relative_change,
    })
}
