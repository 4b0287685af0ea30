//! The constructive argument: pick `χ = f ∇·⟨J⟩`, predict the energy of the
//! gauge-rotated state to first order, and compare with the exact lattice
//! value as `f` grows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gauge::{
    apply_gauge, conjugated_free_energy, divergence_of_current, gradient_on_links, link_currents,
    GaugeFunction,
};
use crate::lattice::{CouplingScheme, LatticeConfig, SingleParticleOperator};
use crate::state::{free_energy, CorrelationState, VacuumReference};

/// Divergence profiles with every entry below this are treated as zero.
pub const DEGENERATE_DIVERGENCE: f64 = 1e-10;

/// Relative gap at which the linear prediction is said to have broken down.
pub const CROSSOVER_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub f: f64,
    pub linear_prediction: f64,
    pub exact_peierls_energy: f64,
    pub exact_linear_scheme_energy: f64,
    pub transformed_free_energy: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub free_energy: f64,
    /// `a Σ (div⟨J⟩)²`; the prediction falls with slope minus this.
    pub divergence_weight: f64,
    /// First `f` where `|gap| ≥ 0.1 |prediction - free_energy|`, linearly
    /// interpolated between rows. `None` if the sweep never gets there.
    pub crossover_f: Option<f64>,
    /// Smallest exact energy (Peierls and transformed-free columns).
    pub exact_floor: f64,
    pub min_prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

fn checked_divergence(state: &CorrelationState, config: &LatticeConfig) -> Result<Vec<f64>> {
    let div = divergence_of_current(state, config)?;
    let max_abs = div.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_abs <= DEGENERATE_DIVERGENCE {
        return Err(LabError::DegenerateConstruction { max_abs });
    }
    Ok(div)
}

/// `χ_i = f (div⟨J⟩)_i`. Fails when the state carries no current divergence.
pub fn build_chi_from_current(
    state: &CorrelationState,
    f: f64,
    config: &LatticeConfig,
) -> Result<GaugeFunction> {
    if !f.is_finite() {
        return Err(LabError::InvalidGauge(format!("amplitude f must be finite, got {f}")));
    }
    let div = checked_divergence(state, config)?;
    GaugeFunction::new(div.into_iter().map(|d| f * d).collect(), format!("f={f}"))
}

/// `a Σ_links ⟨J⟩ ∇χ`, the first-order energy shift.
pub fn linear_shift(state: &CorrelationState, chi: &GaugeFunction, config: &LatticeConfig) -> Result<f64> {
    let j = link_currents(state, config)?;
    let grad = gradient_on_links(chi, config)?;
    Ok(config.spacing * j.iter().zip(&grad.values).map(|(j, g)| j * g).sum::<f64>())
}

/// `E(Ω) + a Σ ⟨J⟩ ∇χ`.
pub fn predicted_energy(
    state: &CorrelationState,
    chi: &GaugeFunction,
    h0: &SingleParticleOperator,
    vac: &VacuumReference,
    config: &LatticeConfig,
) -> Result<f64> {
    Ok(free_energy(state, h0, vac)? + linear_shift(state, chi, config)?)
}

/// `a Σ_sites (div⟨J⟩)²`.
pub fn divergence_weight(state: &CorrelationState, config: &LatticeConfig) -> Result<f64> {
    let div = divergence_of_current(state, config)?;
    Ok(config.spacing * div.iter().map(|d| d * d).sum::<f64>())
}

/// Closed form of the prediction for `χ = f div⟨J⟩`: `E(Ω) - f a Σ (div⟨J⟩)²`.
pub fn predicted_energy_closed_form(
    state: &CorrelationState,
    f: f64,
    h0: &SingleParticleOperator,
    vac: &VacuumReference,
    config: &LatticeConfig,
) -> Result<f64> {
    Ok(free_energy(state, h0, vac)? - f * divergence_weight(state, config)?)
}

fn sweep_row(
    state: &CorrelationState,
    f: f64,
    free: f64,
    config: &LatticeConfig,
    h0: &SingleParticleOperator,
    vac: &VacuumReference,
) -> Result<SweepRow> {
    let chi = build_chi_from_current(state, f, config)?;
    let linear_prediction = free + linear_shift(state, &chi, config)?;
    let exact_peierls_energy = conjugated_free_energy(state, &chi, config, vac, CouplingScheme::Peierls)?;
    let exact_linear_scheme_energy =
        conjugated_free_energy(state, &chi, config, vac, CouplingScheme::Linear)?;
    let transformed_free_energy = free_energy(&apply_gauge(state, &chi, config)?, h0, vac)?;
    Ok(SweepRow {
        f,
        linear_prediction,
        exact_peierls_energy,
        exact_linear_scheme_energy,
        transformed_free_energy,
        gap: exact_peierls_energy - linear_prediction,
    })
}

/// Evaluates every amplitude in `f_values`; rows come back in input order.
pub fn sweep_f(
    state: &CorrelationState,
    f_values: &[f64],
    config: &LatticeConfig,
    h0: &SingleParticleOperator,
    vac: &VacuumReference,
) -> Result<Sweep> {
    if let Some(bad) = f_values.iter().find(|f| !f.is_finite()) {
        return Err(LabError::InvalidConfig(format!("sweep amplitude {bad} is not finite")));
    }
    checked_divergence(state, config)?;
    let free = free_energy(state, h0, vac)?;
    let rows = f_values
        .par_iter()
        .map(|&f| sweep_row(state, f, free, config, h0, vac))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&rows, free, divergence_weight(state, config)?);
    Ok(Sweep { rows, summary })
}

fn summarize(rows: &[SweepRow], free: f64, weight: f64) -> SweepSummary {
    let exact_floor = rows
        .iter()
        .flat_map(|r| [r.exact_peierls_energy, r.transformed_free_energy])
        .fold(f64::INFINITY, f64::min);
    let min_prediction = rows.iter().map(|r| r.linear_prediction).fold(f64::INFINITY, f64::min);
    SweepSummary {
        free_energy: free,
        divergence_weight: weight,
        crossover_f: crossover(rows, free),
        exact_floor,
        min_prediction,
    }
}

/// Scans rows in order for the first one whose relative gap reaches
/// [`CROSSOVER_FRACTION`].
pub fn crossover(rows: &[SweepRow], free: f64) -> Option<f64> {
    let mut previous: Option<(f64, f64)> = None;
    for row in rows {
        let shift = (row.linear_prediction - free).abs();
        if shift == 0.0 {
            // the relative gap vanishes as f -> 0
            if row.f == 0.0 {
                previous = Some((0.0, 0.0));
            }
            continue;
        }
        let ratio = row.gap.abs() / shift;
        if ratio >= CROSSOVER_FRACTION {
            return Some(match previous {
                Some((f0, r0)) if ratio > r0 => {
                    f0 + (CROSSOVER_FRACTION - r0) * (row.f - f0) / (ratio - r0)
                }
                _ => row.f,
            });
        }
        previous = Some((row.f, ratio));
    }
    None
}

/// `n` evenly spaced amplitudes from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
