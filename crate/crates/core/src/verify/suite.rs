//! The full verification suite: independent jobs run concurrently, results
//! sorted by name.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::studies::{free_vacuum_projector, paradox_refinement};
use super::{
    bare_current_refinement, check_conservation, check_counterexample_shift,
    check_current_invariance, check_energy_difference_invariance, check_integration_by_parts,
    check_state_invariants, check_vacuum_properties, energy_difference_refinement,
    energy_shift_study, fock_oracle_compare, integration_by_parts_residual,
    kernel_covariance_error, paradox_amplitude_scaling, random_chi, stream_rng,
    vacuum_paradox_probe, CheckResult, ConvergenceFit, ALGEBRAIC_TOL, SPECTRAL_TOL,
};
use crate::counterexample::DEGENERATE_DIVERGENCE;
use crate::error::Result;
use crate::gauge::{apply_gauge, covariant_link_currents, divergence_of_current, link_currents, GaugeFunction};
use crate::lattice::{build_free_hamiltonian, site_density_expectations, CouplingScheme, LatticeConfig};
use crate::recipe::{ChiRecipe, Lab, StateRecipe};
use crate::state::random_pure_state;

/// Everything the suite needs besides the code under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitePlan {
    pub lattice: LatticeConfig,
    pub state: StateRecipe,
    pub chi: ChiRecipe,
    /// Coupling schemes for the energy-difference checks.
    pub schemes: Vec<CouplingScheme>,
    pub seed: u64,
    pub random_states: usize,
    pub vacuum_sites: usize,
    pub gauge_sites: Vec<usize>,
    pub gauge_trials: usize,
    pub oracle: bool,
    pub oracle_sites: usize,
    pub oracle_trials: usize,
    pub halvings: u32,
    pub probe_halvings: u32,
    /// Sites of the box used for the paradox refinement at the base spacing.
    pub probe_sites: usize,
    pub amplitude_factors: Vec<f64>,
    pub conservation_time: f64,
    pub conservation_steps: usize,
    pub continuity_dts: Vec<f64>,
}

impl Default for SuitePlan {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::periodic(16, 0.5, 1.0).expect("valid default lattice"),
            state: StateRecipe::default(),
            chi: ChiRecipe::default(),
            schemes: vec![CouplingScheme::Peierls, CouplingScheme::Linear],
            seed: 20240611,
            random_states: 1000,
            vacuum_sites: 32,
            gauge_sites: vec![16, 32, 64],
            gauge_trials: 3,
            oracle: true,
            oracle_sites: 4,
            oracle_trials: 50,
            halvings: 3,
            probe_halvings: 5,
            probe_sites: 4,
            amplitude_factors: vec![0.025, 0.05, 0.1, 0.2],
            conservation_time: 1.0,
            conservation_steps: 10,
            continuity_dts: vec![0.02, 0.01, 0.005, 0.0025],
        }
    }
}

type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckResult>> + Send + Sync + 'a>;

fn with_sites(base: &LatticeConfig, n: usize) -> Result<LatticeConfig> {
    let c = LatticeConfig {
        n_sites: n,
        ..*base
    };
    c.validate()?;
    Ok(c)
}

/// A gauge function for the vacuum probes: the configured one unless it is
/// constant or depends on a state, then a single sine over the box.
fn probe_chi(plan: &SuitePlan) -> (ChiRecipe, &'static str) {
    if plan.chi.needs_state() || plan.chi.is_constant() {
        (
            ChiRecipe::Sine {
                amplitude: 0.5,
                wavelength: plan.lattice.length(),
            },
            "fallback sine",
        )
    } else {
        (plan.chi.clone(), "configured")
    }
}

fn fit_checks(name: &str, fit: &ConvergenceFit, min_order: f64, min_r2: f64, probe: bool) -> Vec<CheckResult> {
    let zero = fit.errors.iter().all(|e| *e == 0.0);
    let details = format!("spacings={:?} errors={:?}", fit.spacings, fit.errors);
    let (order, r2) = if zero {
        // constant gauge: every residual is exactly zero
        (min_order, min_r2)
    } else {
        (fit.fitted_order.unwrap_or(f64::NAN), fit.r_squared.unwrap_or(f64::NAN))
    };
    let tag = if zero { format!("degenerate (all zero); {details}") } else { details };
    let mut out = vec![
        CheckResult::at_least(format!("{name}.order"), order, min_order, tag.clone()),
        CheckResult::at_least(format!("{name}.r_squared"), r2, min_r2, tag),
    ];
    if probe {
        out = out.into_iter().map(CheckResult::as_probe).collect();
    }
    out
}

fn base_checks(plan: &SuitePlan) -> Result<Vec<CheckResult>> {
    let cfg = &plan.lattice;
    let lab = Lab::new(*cfg)?;
    let state = plan.state.build(&lab, plan.seed)?;
    let chi = plan.chi.build(cfg, Some(&state))?;
    let mut out = vec![check_state_invariants("state.invariants", &state)];
    out.extend(check_current_invariance("current_invariance", &state, &chi, cfg, &lab.vac)?);
    for &scheme in &plan.schemes {
        out.push(check_energy_difference_invariance(
            &format!("energy_difference.{}", scheme.name()),
            &state,
            &lab.vacuum,
            &chi,
            cfg,
            &lab.h0,
            &lab.vac,
            scheme,
        )?);
    }
    out.push(check_integration_by_parts("integration_by_parts.configured", &state, &chi, cfg)?);
    let div = divergence_of_current(&state, cfg)?;
    if div.iter().any(|d| d.abs() > DEGENERATE_DIVERGENCE) {
        out.push(check_counterexample_shift("integration_by_parts.counterexample", &state, 1.0, cfg)?);
    }
    out.extend(check_conservation(
        &state,
        cfg,
        &lab.h0,
        &lab.vac,
        plan.conservation_time,
        plan.conservation_steps,
        &plan.continuity_dts,
    )?);
    Ok(out)
}

fn paradox_checks(plan: &SuitePlan) -> Result<Vec<CheckResult>> {
    let cfg = &plan.lattice;
    let h0 = build_free_hamiltonian(cfg)?;
    let projector = free_vacuum_projector(cfg, &h0)?;
    let (recipe, origin) = probe_chi(plan);
    let chi = recipe.build(cfg, None)?;
    let mut out = Vec::new();

    let probe = vacuum_paradox_probe(&chi, cfg, &h0, &projector)?;
    out.push(
        CheckResult::at_least(
            "paradox.vacuum_shift",
            probe.p,
            f64::MIN_POSITIVE,
            format!(
                "{origin} chi; P = <0|U'H0U|0> = {:.12e}, a*sum(grad chi)^2 = {:.12e}, ratio = {:.6}",
                probe.p, probe.gradient_weight, probe.ratio
            ),
        )
        .as_probe(),
    );

    let length = cfg.length();
    let mut shapes: Vec<(String, GaugeFunction)> = vec![
        ("sine".into(), GaugeFunction::sine(cfg, 0.3, length)),
        ("bump".into(), GaugeFunction::bump(cfg, 0.5 * length, length / 8.0, 1.0)),
    ];
    for k in 0..3u64 {
        let mut rng = stream_rng(plan.seed, (1 << 40) + k);
        shapes.push((format!("random{k}"), random_chi(cfg, &mut rng)));
    }
    let min_p = shapes
        .iter()
        .map(|(_, g)| vacuum_paradox_probe(g, cfg, &h0, &projector).map(|p| p.p))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<&str> = shapes.iter().map(|s| s.0.as_str()).collect();
    out.push(CheckResult::at_least(
        "paradox.positive",
        min_p.iter().copied().fold(f64::INFINITY, f64::min),
        f64::MIN_POSITIVE,
        format!("min P over {names:?}: {min_p:?}"),
    ));

    let sine = GaugeFunction::sine(cfg, 1.0, length);
    let scaling = paradox_amplitude_scaling(&sine, cfg, &h0, &projector, &plan.amplitude_factors)?;
    let exponent = scaling.exponent.unwrap_or(f64::NAN);
    out.push(
        CheckResult::within(
            "paradox.amplitude_exponent",
            exponent - 2.0,
            0.1,
            format!(
                "fitted exponent {exponent:.6} (r2 {:?}) over eps={:?}, P={:?}",
                scaling.r_squared, scaling.amplitudes, scaling.values
            ),
        )
        .as_probe(),
    );

    let probe_box = with_sites(cfg, plan.probe_sites)?;
    let box_sine = ChiRecipe::Sine {
        amplitude: 0.5,
        wavelength: probe_box.length(),
    };
    let refinement = paradox_refinement(&box_sine, &probe_box, plan.probe_halvings)?;
    let ratios: Vec<f64> = refinement.levels.iter().map(|l| l.ratio).collect();
    let spacings: Vec<f64> = refinement.levels.iter().map(|l| l.spacing).collect();
    out.push(
        CheckResult::at_most(
            "paradox.ratio_stability",
            refinement.last_relative_change,
            0.05,
            format!(
                "sine over L={}; P/(a*sum(grad chi)^2) at a={spacings:?}: {ratios:?}; change order {:?}",
                probe_box.length(),
                refinement.ratio_changes.fitted_order
            ),
        )
        .as_probe(),
    );
    Ok(out)
}

fn gauge_checks(plan: &SuitePlan, n: usize) -> Result<Vec<CheckResult>> {
    let cfg = with_sites(&plan.lattice, n)?;
    let lab = Lab::new(cfg)?;
    let mut worst = [0.0_f64; 5];
    for trial in 0..plan.gauge_trials {
        let mut rng = stream_rng(plan.seed, (2 << 40) + (n as u64) * 1000 + trial as u64);
        let a = random_pure_state(&lab.vac, &mut rng);
        let b = random_pure_state(&lab.vac, &mut rng);
        let chi = random_chi(&cfg, &mut rng);
        worst[0] = worst[0].max(kernel_covariance_error(&chi, &cfg, &lab.h0)?);
        let moved = apply_gauge(&a, &chi, &cfg)?;
        let rho0 = site_density_expectations(a.matrix(), &cfg);
        let rho1 = site_density_expectations(moved.matrix(), &cfg);
        worst[1] = worst[1].max(super::max_abs_pairwise(&rho0, &rho1));
        let j0 = link_currents(&a, &cfg)?;
        let jc = covariant_link_currents(&moved, &chi, &cfg)?;
        worst[2] = worst[2].max(super::max_abs_pairwise(&j0, &jc));
        let diff = super::energy_difference_residual(&a, &b, &chi, &cfg, &lab.h0, &lab.vac, CouplingScheme::Peierls)?;
        worst[3] = worst[3].max(diff);
        worst[4] = worst[4].max(integration_by_parts_residual(&a, &chi, &cfg)?.abs());
    }
    let tag = format!("N={n} a={} trials={} seed={}", cfg.spacing, plan.gauge_trials, plan.seed);
    Ok(vec![
        CheckResult::within(format!("gauge.N{n:03}.kernel_covariance"), worst[0], ALGEBRAIC_TOL, tag.clone()),
        CheckResult::within(format!("gauge.N{n:03}.density"), worst[1], ALGEBRAIC_TOL, tag.clone()),
        CheckResult::within(format!("gauge.N{n:03}.covariant_link"), worst[2], ALGEBRAIC_TOL, tag.clone()),
        CheckResult::within(format!("gauge.N{n:03}.energy_difference"), worst[3], SPECTRAL_TOL, tag.clone()),
        CheckResult::within(format!("gauge.N{n:03}.integration_by_parts"), worst[4], ALGEBRAIC_TOL, tag),
    ])
}

fn refinement_checks(plan: &SuitePlan) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let study = energy_shift_study(&plan.state, &plan.chi, &plan.lattice, plan.halvings, plan.seed)?;
    out.extend(fit_checks("energy_shift.with_p", &study.with_p, 1.0, 0.99, true));
    let plateau = study.plateau_deviation.unwrap_or(0.0);
    let last = study.levels.last().expect("levels");
    out.push(
        CheckResult::at_most(
            "energy_shift.without_p_plateau",
            plateau,
            0.05,
            format!(
                "residual without P at a={} is {:.6e}; P = {:.6e}",
                last.spacing, last.residual_without_p, last.vacuum_shift
            ),
        )
        .as_probe(),
    );
    if plan.schemes.contains(&CouplingScheme::Linear) {
        let linear = energy_difference_refinement(
            &plan.state,
            &StateRecipe::Vacuum,
            &plan.chi,
            &plan.lattice,
            plan.halvings,
            plan.seed,
            CouplingScheme::Linear,
        )?;
        out.extend(fit_checks("energy_difference.linear_refinement", &linear, 1.0, 0.99, true));
    }
    let bare = bare_current_refinement(&plan.state, &plan.chi, &plan.lattice, plan.halvings, plan.seed)?;
    let mut bare_checks = fit_checks("current_invariance.bare_excitation_refinement", &bare.excitation, 1.0, 0.99, true);
    for c in &mut bare_checks {
        c.details = format!("{}; raw residual {:?}", c.details, bare.raw);
    }
    out.extend(bare_checks);
    Ok(out)
}

/// Runs every check of the plan. Identity failures are returned as results,
/// errors only for invalid inputs.
pub fn run_suite(plan: &SuitePlan) -> Result<Vec<CheckResult>> {
    let mut jobs: Vec<Job> = vec![
        Box::new(|| check_vacuum_properties(&with_sites(&plan.lattice, plan.vacuum_sites)?, plan.random_states, plan.seed)),
        Box::new(|| base_checks(plan)),
        Box::new(|| paradox_checks(plan)),
        Box::new(|| refinement_checks(plan)),
    ];
    for &n in &plan.gauge_sites {
        jobs.push(Box::new(move || gauge_checks(plan, n)));
    }
    if plan.oracle {
        jobs.push(Box::new(|| {
            fock_oracle_compare(&with_sites(&plan.lattice, plan.oracle_sites)?, plan.oracle_trials, plan.seed)
        }));
    }
    let mut results: Vec<CheckResult> = jobs
        .par_iter()
        .map(|job| job())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    results.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(results)
}
