//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use dirac_lab::counterexample::{linspace, sweep_f};
use dirac_lab::gauge::{apply_gauge, covariant_link_currents, link_currents, GaugeFunction};
use dirac_lab::lattice::{build_free_hamiltonian, site_density_expectations, CouplingScheme, LatticeConfig};
use dirac_lab::recipe::{ChiRecipe, Lab, StateRecipe};
use dirac_lab::state::random_pure_state;
use dirac_lab::verify::{
    check_conservation, check_counterexample_shift, check_vacuum_properties, energy_difference_residual,
    energy_shift_study, fock_oracle_compare, free_vacuum_projector, integration_by_parts_residual,
    kernel_covariance_error, max_abs_pairwise, paradox_amplitude_scaling, paradox_refinement, random_chi,
    stream_rng, vacuum_paradox_probe,
};
use tempfile::TempDir;

const SEED: u64 = 20240611;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        summary: summary.into(),
    }
}

type Criterion = fn() -> Result<Outcome, String>;

fn periodic(n: usize) -> LatticeConfig {
    LatticeConfig::periodic(n, 0.5, 1.0).expect("valid lattice")
}

fn oracle_equivalence() -> Result<Outcome, String> {
    let mut worst = 0.0_f64;
    let mut count = 0;
    let mut failed = Vec::new();
    for n in [2, 3, 4] {
        for c in fock_oracle_compare(&periodic(n), 50, SEED).map_err(|e| e.to_string())? {
            worst = worst.max(c.measured.abs());
            count += 1;
            if !c.passed {
                failed.push(format!("N={n} {}", c.name));
            }
        }
    }
    let mut summary = format!("{count} quantities at N=2,3,4 with 50 trials each; max deviation {worst:.3e} <= 1e-10");
    if !failed.is_empty() {
        summary.push_str(&format!("; failed {failed:?}"));
    }
    Ok(outcome(failed.is_empty(), summary))
}

fn vacuum_properties() -> Result<Outcome, String> {
    let checks = check_vacuum_properties(&periodic(32), 1000, SEED).map_err(|e| e.to_string())?;
    let parts: Vec<String> = checks.iter().map(|c| format!("{}={:.3e}", c.name, c.measured)).collect();
    Ok(outcome(
        checks.iter().all(|c| c.passed),
        format!("N=32, 1000 random states; {}", parts.join(", ")),
    ))
}

fn exact_gauge_invariance() -> Result<Outcome, String> {
    let mut worst = [0.0_f64; 4];
    for n in [16, 32, 64] {
        let lab = Lab::new(periodic(n)).map_err(|e| e.to_string())?;
        for trial in 0..5u64 {
            let mut rng = stream_rng(SEED, n as u64 * 100 + trial);
            let a = random_pure_state(&lab.vac, &mut rng);
            let b = random_pure_state(&lab.vac, &mut rng);
            let chi = random_chi(&lab.config, &mut rng);
            let cfg = &lab.config;
            let moved = apply_gauge(&a, &chi, cfg).map_err(|e| e.to_string())?;
            worst[0] = worst[0].max(kernel_covariance_error(&chi, cfg, &lab.h0).map_err(|e| e.to_string())?);
            worst[1] = worst[1].max(max_abs_pairwise(
                &site_density_expectations(a.matrix(), cfg),
                &site_density_expectations(moved.matrix(), cfg),
            ));
            let j0 = link_currents(&a, cfg).map_err(|e| e.to_string())?;
            let jc = covariant_link_currents(&moved, &chi, cfg).map_err(|e| e.to_string())?;
            worst[2] = worst[2].max(max_abs_pairwise(&j0, &jc));
            worst[3] = worst[3].max(
                energy_difference_residual(&a, &b, &chi, cfg, &lab.h0, &lab.vac, CouplingScheme::Peierls)
                    .map_err(|e| e.to_string())?,
            );
        }
    }
    Ok(outcome(
        worst.iter().all(|w| *w <= 1e-10),
        format!(
            "N=16,32,64 x 5 trials; kernel {:.3e}, density {:.3e}, covariant current {:.3e}, energy difference {:.3e} (all <= 1e-10)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn summation_by_parts() -> Result<Outcome, String> {
    let mut worst = 0.0_f64;
    for n in [8, 16, 32, 64] {
        let lab = Lab::new(periodic(n)).map_err(|e| e.to_string())?;
        for trial in 0..10u64 {
            let mut rng = stream_rng(SEED, (7 << 32) + n as u64 * 100 + trial);
            let state = random_pure_state(&lab.vac, &mut rng);
            let chi = random_chi(&lab.config, &mut rng);
            worst = worst.max(integration_by_parts_residual(&state, &chi, &lab.config).map_err(|e| e.to_string())?.abs());
        }
        let packet = StateRecipe::default().build(&lab, SEED).map_err(|e| e.to_string())?;
        let chi = ChiRecipe::default().build(&lab.config, None).map_err(|e| e.to_string())?;
        worst = worst.max(integration_by_parts_residual(&packet, &chi, &lab.config).map_err(|e| e.to_string())?.abs());
    }
    let lab = Lab::new(periodic(16)).map_err(|e| e.to_string())?;
    let packet = StateRecipe::default().build(&lab, SEED).map_err(|e| e.to_string())?;
    let mut shift = 0.0_f64;
    for f in [0.5, 1.0, 10.0] {
        let c = check_counterexample_shift("ce", &packet, f, &lab.config).map_err(|e| e.to_string())?;
        shift = shift.max(c.measured.abs());
    }
    Ok(outcome(
        worst <= 1e-12 && shift <= 1e-12,
        format!("random states and gauges at N=8..64: {worst:.3e}; chi = f div<J> shift vs -f a sum div^2: {shift:.3e} (both <= 1e-12)"),
    ))
}

fn energy_shift_identity() -> Result<Outcome, String> {
    let study = energy_shift_study(&StateRecipe::default(), &ChiRecipe::default(), &periodic(16), 3, SEED)
        .map_err(|e| e.to_string())?;
    let order = study.with_p.fitted_order.unwrap_or(f64::NAN);
    let r2 = study.with_p.r_squared.unwrap_or(f64::NAN);
    let plateau = study.plateau_deviation.unwrap_or(f64::NAN);
    let pairwise: Vec<String> = study.with_p.pairwise_orders().iter().map(|p| format!("{p:.3}")).collect();
    Ok(outcome(
        order >= 1.0 && r2 >= 0.99 && plateau <= 0.05,
        format!(
            "a=0.5..0.0625, L=8, m=1: with P order {order:.4} (>= 1) r2 {r2:.5} (>= 0.99), pairwise orders [{}]; without P plateau off P by {:.2}% (<= 5%)",
            pairwise.join(", "),
            100.0 * plateau
        ),
    ))
}

fn paradox_probe() -> Result<Outcome, String> {
    let cfg = periodic(16);
    let h0 = build_free_hamiltonian(&cfg).map_err(|e| e.to_string())?;
    let projector = free_vacuum_projector(&cfg, &h0).map_err(|e| e.to_string())?;
    let mut gauges = vec![
        GaugeFunction::sine(&cfg, 0.5, 8.0),
        GaugeFunction::sine(&cfg, 2.0, 4.0),
        GaugeFunction::bump(&cfg, 4.0, 1.0, 1.0),
        GaugeFunction::bump(&cfg, 2.0, 0.3, 0.1),
    ];
    for k in 0..20 {
        gauges.push(random_chi(&cfg, &mut stream_rng(SEED, (9 << 32) + k)));
    }
    let mut min_p = f64::INFINITY;
    for g in &gauges {
        min_p = min_p.min(vacuum_paradox_probe(g, &cfg, &h0, &projector).map_err(|e| e.to_string())?.p);
    }
    let scaling = paradox_amplitude_scaling(&GaugeFunction::sine(&cfg, 1.0, 8.0), &cfg, &h0, &projector, &[0.025, 0.05, 0.1, 0.2])
        .map_err(|e| e.to_string())?;
    let exponent = scaling.exponent.unwrap_or(f64::NAN);
    let small_box = periodic(4);
    let refinement = paradox_refinement(&ChiRecipe::Sine { amplitude: 0.5, wavelength: small_box.length() }, &small_box, 5)
        .map_err(|e| e.to_string())?;
    let change = refinement.last_relative_change;
    let last = refinement.levels.last().expect("levels");
    Ok(outcome(
        min_p > 0.0 && (exponent - 2.0).abs() <= 0.1 && change <= 0.05,
        format!(
            "min P over {} gauges {min_p:.3e} (> 0); amplitude exponent {exponent:.4} (2 +- 0.1); ratio {:.4} at a={} (N={}), last change {:.2}% (<= 5%)",
            gauges.len(),
            last.ratio,
            last.spacing,
            last.n_sites,
            100.0 * change
        ),
    ))
}

fn counterexample_sweep() -> Result<Outcome, String> {
    let lab = Lab::new(periodic(16)).map_err(|e| e.to_string())?;
    let state = StateRecipe::default().build(&lab, SEED).map_err(|e| e.to_string())?;
    let f = linspace(0.0, 200.0, 401);
    let a = sweep_f(&state, &f, &lab.config, &lab.h0, &lab.vac).map_err(|e| e.to_string())?;
    let b = sweep_f(&state, &f, &lab.config, &lab.h0, &lab.vac).map_err(|e| e.to_string())?;
    let decreasing = a.rows.windows(2).all(|w| w[1].linear_prediction < w[0].linear_prediction);
    let s = &a.summary;
    // exactly linear with slope -a sum (div J)^2, so it falls without bound as f grows
    let linear = a
        .rows
        .iter()
        .all(|r| (r.linear_prediction - (s.free_energy - r.f * s.divergence_weight)).abs() <= 1e-10 * (1.0 + r.f));
    let floor = a
        .rows
        .iter()
        .flat_map(|r| [r.exact_peierls_energy, r.transformed_free_energy])
        .fold(f64::INFINITY, f64::min);
    let reproducible = a == b && s.crossover_f.map(f64::to_bits) == b.summary.crossover_f.map(f64::to_bits);
    Ok(outcome(
        decreasing && linear && s.divergence_weight > 0.0 && floor >= -1e-9 && s.crossover_f.is_some() && reproducible,
        format!(
            "f=0..200 (401 rows): prediction strictly decreasing to {:.4}, slope -{:.6e}; exact floor {floor:.6} (>= -1e-9); f* = {} reproducible bit-for-bit: {reproducible}",
            s.min_prediction,
            s.divergence_weight,
            s.crossover_f.map(|x| format!("{x:.6}")).unwrap_or_else(|| "none".into())
        ),
    ))
}

fn conservation() -> Result<Outcome, String> {
    let dts = [0.02, 0.01, 0.005, 0.0025];
    let mut parts = Vec::new();
    let mut passed = true;
    let wave_lab = Lab::new(periodic(16)).map_err(|e| e.to_string())?;
    let packet = StateRecipe::default().build(&wave_lab, SEED).map_err(|e| e.to_string())?;
    let random_lab = Lab::new(periodic(32)).map_err(|e| e.to_string())?;
    let random = random_pure_state(&random_lab.vac, &mut stream_rng(SEED, 11 << 32));
    for (tag, lab, state) in [("wavepacket N=16", &wave_lab, &packet), ("random N=32", &random_lab, &random)] {
        for c in check_conservation(state, &lab.config, &lab.h0, &lab.vac, 1.0, 10, &dts).map_err(|e| e.to_string())? {
            passed &= c.passed;
            parts.push(format!("{tag} {}={:.3e}", c.name.trim_start_matches("conservation."), c.measured));
        }
    }
    Ok(outcome(passed, format!("t=1; {} (all <= 1e-10)", parts.join(", "))))
}

fn determinism() -> Result<Outcome, String> {
    let bin = env!("CARGO_BIN_EXE_dirac-lab");
    let dirs = [TempDir::new().map_err(|e| e.to_string())?, TempDir::new().map_err(|e| e.to_string())?];
    for dir in &dirs {
        for cmd in ["verify", "sweep", "converge"] {
            let out = Command::new(bin)
                .args([cmd, "--out", "run", "--seed", "12345"])
                .current_dir(dir.path())
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Ok(outcome(false, format!("{cmd} exited with {:?}", out.status.code())));
            }
        }
    }
    let mut files = 0;
    let mut bytes = 0;
    for name in ["verify", "sweep", "converge"].iter().flat_map(|c| [format!("run.{c}.csv"), format!("run.{c}.json")]) {
        let read = |d: &Path| std::fs::read(d.join(&name)).map_err(|e| e.to_string());
        let (x, y) = (read(dirs[0].path())?, read(dirs[1].path())?);
        if x != y {
            return Ok(outcome(false, format!("{name} differs between identical runs")));
        }
        files += 1;
        bytes += x.len();
    }
    Ok(outcome(true, format!("{files} report files ({bytes} bytes) identical across two runs with seed 12345")))
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("vacuum properties", vacuum_properties),
        ("exact lattice gauge invariance", exact_gauge_invariance),
        ("summation by parts", summation_by_parts),
        ("energy-shift identity", energy_shift_identity),
        ("vacuum shift probe", paradox_probe),
        ("counterexample sweep", counterexample_sweep),
        ("conservation", conservation),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let passed = result.passed && secs < 60.0;
        if !passed {
            failures += 1;
        }
        println!(
            "{} {}. {name}: {} [{secs:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            result.summary
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
