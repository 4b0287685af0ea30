use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dirac_lab::config::RunConfig;
use dirac_lab::counterexample::{predicted_energy, predicted_energy_closed_form, sweep_f};
use dirac_lab::gauge::{apply_gauge, covariant_link_currents, link_currents, GaugeFunction};
use dirac_lab::lattice::{site_density_expectations, CouplingScheme, LatticeConfig};
use dirac_lab::recipe::{ChiRecipe, Lab, StateRecipe};
use dirac_lab::state::{free_energy, random_pure_state};
use dirac_lab::verify::{
    energy_difference_residual, integration_by_parts_residual, kernel_covariance_error, run_suite,
    vacuum_paradox_probe, SuitePlan,
};

fn lab(n: usize, spacing: f64, mass: f64) -> Lab {
    Lab::new(LatticeConfig::periodic(n, spacing, mass).unwrap()).unwrap()
}

fn chi_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn peierls_identities_hold_for_any_state_and_gauge(
        n in 4usize..12,
        spacing in 0.2..1.0f64,
        mass in 0.2..2.0f64,
        seed in any::<u64>(),
        raw in chi_strategy(12),
    ) {
        let lab = lab(n, spacing, mass);
        let chi = GaugeFunction::new(raw[..n].to_vec(), "prop").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_pure_state(&lab.vac, &mut rng);
        let b = random_pure_state(&lab.vac, &mut rng);
        prop_assert!(kernel_covariance_error(&chi, &lab.config, &lab.h0).unwrap() <= 1e-12);
        let moved = apply_gauge(&a, &chi, &lab.config).unwrap();
        let rho0 = site_density_expectations(a.matrix(), &lab.config);
        let rho1 = site_density_expectations(moved.matrix(), &lab.config);
        for (x, y) in rho0.iter().zip(&rho1) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let j0 = link_currents(&a, &lab.config).unwrap();
        let jc = covariant_link_currents(&moved, &chi, &lab.config).unwrap();
        for (x, y) in j0.iter().zip(&jc) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let d = energy_difference_residual(&a, &b, &chi, &lab.config, &lab.h0, &lab.vac, CouplingScheme::Peierls).unwrap();
        prop_assert!(d <= 1e-10, "energy difference residual {d}");
    }

    #[test]
    fn summation_by_parts_is_exact(n in 3usize..16, seed in any::<u64>(), raw in chi_strategy(16)) {
        let lab = lab(n, 0.5, 1.0);
        let chi = GaugeFunction::new(raw[..n].to_vec(), "prop").unwrap();
        let state = random_pure_state(&lab.vac, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(integration_by_parts_residual(&state, &chi, &lab.config).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn free_energy_is_bounded_below(n in 2usize..12, mass in 0.1..3.0f64, seed in any::<u64>()) {
        let lab = lab(n, 0.5, mass);
        let state = random_pure_state(&lab.vac, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(free_energy(&state, &lab.h0, &lab.vac).unwrap() >= -1e-9);
    }

    #[test]
    fn vacuum_shift_is_positive_for_nonconstant_gauge(n in 3usize..16, raw in chi_strategy(16)) {
        let lab = lab(n, 0.5, 1.0);
        let chi = GaugeFunction::new(raw[..n].to_vec(), "prop").unwrap();
        prop_assume!(!chi.is_constant());
        let probe = vacuum_paradox_probe(&chi, &lab.config, &lab.h0, &lab.vac.projector).unwrap();
        prop_assert!(probe.p > 0.0);
    }

    #[test]
    fn prediction_forms_agree_and_fall_with_f(
        center in 1.0..7.0f64,
        width in 0.5..2.0f64,
        momentum in -2.0..2.0f64,
        f in 0.0..50.0f64,
    ) {
        let lab = lab(16, 0.5, 1.0);
        let state = StateRecipe::Wavepacket { center, width, momentum }.build(&lab, 0).unwrap();
        let chi = ChiRecipe::FromCurrent { f }.build(&lab.config, Some(&state));
        prop_assume!(chi.is_ok());
        let chi = chi.unwrap();
        let a = predicted_energy(&state, &chi, &lab.h0, &lab.vac, &lab.config).unwrap();
        let b = predicted_energy_closed_form(&state, f, &lab.h0, &lab.vac, &lab.config).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        let sweep = sweep_f(&state, &[f, f + 1.0], &lab.config, &lab.h0, &lab.vac).unwrap();
        prop_assert!(sweep.rows[1].linear_prediction < sweep.rows[0].linear_prediction);
        for r in &sweep.rows {
            prop_assert!(r.exact_peierls_energy >= -1e-9 && r.transformed_free_energy >= -1e-9);
        }
    }

    #[test]
    fn resolved_config_round_trips(seed in 0..=i64::MAX as u64, n in 2usize..64, spacing in 0.01..2.0f64, halvings in 1u32..6) {
        let mut c = RunConfig::default();
        c.seed = seed;
        c.lattice.n_sites = n;
        c.lattice.spacing = spacing;
        c.refinement.halvings = halvings;
        c.state = StateRecipe::Random { seed: Some(seed) };
        prop_assert_eq!(RunConfig::from_toml(&c.to_toml(), "prop").unwrap(), c);
    }
}

#[test]
fn suite_is_reproducible_for_a_fixed_seed() {
    let plan = SuitePlan {
        lattice: LatticeConfig::periodic(8, 0.5, 1.0).unwrap(),
        state: StateRecipe::Wavepacket {
            center: 2.0,
            width: 0.8,
            momentum: 1.0,
        },
        chi: ChiRecipe::Sine {
            amplitude: 0.4,
            wavelength: 4.0,
        },
        random_states: 40,
        vacuum_sites: 8,
        gauge_sites: vec![8],
        gauge_trials: 2,
        oracle_sites: 2,
        oracle_trials: 4,
        probe_halvings: 3,
        ..SuitePlan::default()
    };
    let a = run_suite(&plan).unwrap();
    let b = run_suite(&plan).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.iter().all(|c| !c.is_failure()), "{a:#?}");
}
