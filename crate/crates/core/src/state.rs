//! Gaussian fermionic states as one-body correlation matrices.
//!
//! `C_ij = ⟨ψ†_j ψ_i⟩`. A pure state with occupied orbitals `φ_k` has
//! `C = Σ_k φ_k φ_k†`, so `C² = C`. Energies are normal-ordered against the
//! free vacuum projector `P₋`, fixed once for all potentials.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::{
    bloch_hamiltonian, dispersion, lattice_momenta, positive_spinor, Boundary, LatticeConfig,
    SingleParticleOperator,
};
use crate::linalg::{haar_unitary, trace_product_re, CMatrix, CVector, HermitianSpectrum};

/// Eigenvalue gap below which `h0` is treated as having a zero mode.
pub const ZERO_MODE_TOL: f64 = 1e-9;
const PAULI_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const MODE_TOL: f64 = 1e-10;
const SUBSPACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    corr: CMatrix,
    label: String,
}

/// A violated state invariant, with the offending magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct StateViolation {
    pub invariant: &'static str,
    pub measured: f64,
}

impl CorrelationState {
    /// Wraps a matrix after checking hermiticity and the Pauli bounds.
    pub fn new(corr: CMatrix, label: impl Into<String>) -> Result<Self> {
        let state = Self::from_matrix_unchecked(corr, label);
        if let Some(v) = state.violations().first() {
            return Err(LabError::InvalidState(format!(
                "{} violated ({:e})",
                v.invariant, v.measured
            )));
        }
        Ok(state)
    }

    pub fn from_matrix_unchecked(corr: CMatrix, label: impl Into<String>) -> Self {
        Self {
            corr,
            label: label.into(),
        }
    }

    /// Pure state spanned by the given orthonormal orbitals (columns).
    pub fn from_orbitals(orbitals: &CMatrix, label: impl Into<String>) -> Self {
        Self::from_matrix_unchecked(orbitals * orbitals.adjoint(), label)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.corr
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.corr.nrows()
    }

    pub fn occupation_spectrum(&self) -> Vec<f64> {
        HermitianSpectrum::new(&self.corr).values
    }

    /// `‖C² - C‖_F`, zero for pure states.
    pub fn purity_defect(&self) -> f64 {
        (&self.corr * &self.corr - &self.corr).norm()
    }

    /// Every invariant the matrix fails, empty for a valid state.
    pub fn violations(&self) -> Vec<StateViolation> {
        let mut out = Vec::new();
        if self.corr.nrows() != self.corr.ncols() {
            out.push(StateViolation {
                invariant: "square",
                measured: self.corr.ncols() as f64,
            });
            return out;
        }
        let herm = (&self.corr - self.corr.adjoint()).norm() / self.corr.norm().max(1.0);
        if herm > HERMITIAN_TOL {
            out.push(StateViolation {
                invariant: "hermitian",
                measured: herm,
            });
            return out;
        }
        let spec = self.occupation_spectrum();
        let lo = spec.first().copied().unwrap_or(0.0);
        let hi = spec.last().copied().unwrap_or(0.0);
        if lo < -PAULI_TOL {
            out.push(StateViolation {
                invariant: "occupation >= 0",
                measured: lo,
            });
        }
        if hi > 1.0 + PAULI_TOL {
            out.push(StateViolation {
                invariant: "occupation <= 1",
                measured: hi,
            });
        }
        out
    }

    /// Row-major `[re, im]` entries for checkpoints.
    pub fn to_snapshot(&self) -> StateSnapshot {
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.corr[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        StateSnapshot {
            label: self.label.clone(),
            dim: n,
            entries,
        }
    }

    pub fn from_snapshot(snapshot: &StateSnapshot) -> Result<Self> {
        let n = snapshot.dim;
        if snapshot.entries.len() != n * n {
            return Err(LabError::DimensionMismatch {
                expected: n * n,
                found: snapshot.entries.len(),
            });
        }
        let corr = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = snapshot.entries[i * n + j];
            Complex64::new(re, im)
        });
        Self::new(corr, snapshot.label.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub label: String,
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

/// The filled negative-energy sea of `h0`.
#[derive(Debug, Clone)]
pub struct VacuumReference {
    pub projector: CMatrix,
    /// `Tr(h0 P₋)`, equal to the sum of the negative eigenvalues.
    pub vacuum_energy_raw: f64,
    pub spectrum: HermitianSpectrum,
}

impl VacuumReference {
    pub fn dim(&self) -> usize {
        self.projector.nrows()
    }

    /// Number of occupied (negative-energy) modes.
    pub fn filling(&self) -> usize {
        self.spectrum.values.iter().filter(|&&e| e < 0.0).count()
    }

    /// Eigenvector of the `k`-th positive mode (ascending energy).
    pub fn positive_mode(&self, k: usize) -> Option<(f64, CVector)> {
        let idx = self.filling() + k;
        (idx < self.dim()).then(|| {
            (
                self.spectrum.values[idx],
                self.spectrum.vectors.column(idx).into_owned(),
            )
        })
    }

    /// Eigenvector of the `k`-th negative mode counted down from zero energy.
    pub fn negative_mode(&self, k: usize) -> Option<(f64, CVector)> {
        let filled = self.filling();
        (k < filled).then(|| {
            let idx = filled - 1 - k;
            (
                self.spectrum.values[idx],
                self.spectrum.vectors.column(idx).into_owned(),
            )
        })
    }

    /// `1 - P₋`, the unoccupied subspace of the vacuum.
    pub fn positive_projector(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim()) - &self.projector
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(LabError::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn build_vacuum(h0: &SingleParticleOperator) -> Result<(VacuumReference, CorrelationState)> {
    let spectrum = HermitianSpectrum::new(h0.matrix());
    if let Some(&e) = spectrum.values.iter().find(|e| e.abs() < ZERO_MODE_TOL) {
        return Err(LabError::ZeroMode { eigenvalue: e });
    }
    let projector = spectrum.projector(|e| e < 0.0);
    let vacuum_energy_raw = trace_product_re(h0.matrix(), &projector);
    let state = CorrelationState::from_matrix_unchecked(projector.clone(), "vacuum");
    Ok((
        VacuumReference {
            projector,
            vacuum_energy_raw,
            spectrum,
        },
        state,
    ))
}

/// Vacuum projector of the free periodic kernel assembled from Bloch blocks,
/// `P₋(x - y) = (1/N) Σ_k e^{ik(x-y)a} (1 - h(k)/E(k)) / 2`. Costs `O(N²)`
/// instead of a dense diagonalization.
pub fn bloch_vacuum_projector(config: &LatticeConfig) -> Result<CMatrix> {
    if config.boundary != Boundary::Periodic {
        return Err(LabError::RequiresPeriodic);
    }
    let n = config.n_sites;
    let momenta = lattice_momenta(config);
    let mut blocks = Vec::with_capacity(momenta.len());
    for &k in &momenta {
        let e = dispersion(config, k);
        if e < ZERO_MODE_TOL {
            return Err(LabError::ZeroMode { eigenvalue: e });
        }
        let h = bloch_hamiltonian(config, k);
        blocks.push([
            [0.5 - h[(0, 0)] * (0.5 / e), -h[(0, 1)] * (0.5 / e)],
            [-h[(1, 0)] * (0.5 / e), 0.5 - h[(1, 1)] * (0.5 / e)],
        ]);
    }
    let a = config.spacing;
    let by_offset: Vec<[[Complex64; 2]; 2]> = (0..n)
        .map(|d| {
            let mut acc = [[Complex64::from(0.0); 2]; 2];
            for (k, b) in momenta.iter().zip(&blocks) {
                let ph = Complex64::from_polar(1.0 / n as f64, k * d as f64 * a);
                for (r, row) in acc.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v += ph * b[r][c];
                    }
                }
            }
            acc
        })
        .collect();
    Ok(CMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let d = (i / 2 + n - j / 2) % n;
        by_offset[d][i % 2][j % 2]
    }))
}

/// `Tr(M C)` or, normal-ordered, `Tr(M (C - P₋))`.
pub fn expectation(
    kernel: &SingleParticleOperator,
    state: &CorrelationState,
    vac: &VacuumReference,
    normal_ordered: bool,
) -> Result<f64> {
    check_dim(kernel.dim(), state.dim())?;
    check_dim(kernel.dim(), vac.dim())?;
    let raw = trace_product_re(kernel.matrix(), state.matrix());
    Ok(if normal_ordered {
        raw - trace_product_re(kernel.matrix(), &vac.projector)
    } else {
        raw
    })
}

/// Normal-ordered free-field energy `Tr(h0 (C - P₋))`.
pub fn free_energy(
    state: &CorrelationState,
    h0: &SingleParticleOperator,
    vac: &VacuumReference,
) -> Result<f64> {
    check_dim(h0.dim(), state.dim())?;
    check_dim(h0.dim(), vac.dim())?;
    Ok(trace_product_re(h0.matrix(), state.matrix()) - vac.vacuum_energy_raw)
}

/// `Tr(h (C - P₋))` with the free vacuum as the ordering reference.
pub fn energy_with_potential(
    state: &CorrelationState,
    h_coupled: &SingleParticleOperator,
    vac: &VacuumReference,
) -> Result<f64> {
    expectation(h_coupled, state, vac, true)
}

fn check_unit(v: &CVector, what: &str) -> Result<()> {
    let norm = v.norm();
    if (norm - 1.0).abs() > MODE_TOL {
        return Err(LabError::InvalidMode(format!(
            "{what} mode has norm {norm}, expected 1"
        )));
    }
    Ok(())
}

/// Adds a particle in `creator` and optionally removes one from `annihilator`:
/// `C' = C + c c† - d d†`.
pub fn excite(
    state: &CorrelationState,
    creator: &CVector,
    annihilator: Option<&CVector>,
) -> Result<CorrelationState> {
    check_dim(state.dim(), creator.len())?;
    check_unit(creator, "creator")?;
    let c = state.matrix();
    let leak = (c * creator).norm();
    if leak > SUBSPACE_TOL {
        return Err(LabError::InvalidMode(format!(
            "creator overlaps the occupied subspace (|C c| = {leak:e})"
        )));
    }
    let mut out = c + creator * creator.adjoint();
    let mut label = format!("{}+p", state.label());
    if let Some(d) = annihilator {
        check_dim(state.dim(), d.len())?;
        check_unit(d, "annihilator")?;
        let miss = (c * d - d).norm();
        if miss > SUBSPACE_TOL {
            return Err(LabError::InvalidMode(format!(
                "annihilator is not in the occupied subspace (|C d - d| = {miss:e})"
            )));
        }
        let overlap = creator.dotc(d).norm();
        if overlap > MODE_TOL {
            return Err(LabError::InvalidMode(format!(
                "creator and annihilator are not orthogonal (overlap {overlap:e})"
            )));
        }
        out -= d * d.adjoint();
        label.push_str("-h");
    }
    Ok(CorrelationState::from_matrix_unchecked(out, label))
}

/// Single-particle propagator `e^{-iht}` built from one diagonalization.
#[derive(Debug, Clone)]
pub struct Propagator {
    spectrum: HermitianSpectrum,
}

impl Propagator {
    pub fn new(h: &SingleParticleOperator) -> Self {
        Self {
            spectrum: HermitianSpectrum::new(h.matrix()),
        }
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        self.spectrum
            .map(|e| Complex64::from_polar(1.0, -e * t))
    }

    pub fn evolve(&self, state: &CorrelationState, t: f64) -> Result<CorrelationState> {
        check_dim(self.spectrum.dim(), state.dim())?;
        let u = self.unitary(t);
        let corr = &u * state.matrix() * u.adjoint();
        Ok(CorrelationState::from_matrix_unchecked(
            corr,
            state.label().to_string(),
        ))
    }
}

/// `C(t) = e^{-iht} C e^{iht}`.
pub fn evolve(
    state: &CorrelationState,
    h: &SingleParticleOperator,
    t: f64,
) -> Result<CorrelationState> {
    check_dim(h.dim(), state.dim())?;
    Propagator::new(h).evolve(state, t)
}

/// Haar-random rotation of the vacuum: a random pure state at half filling.
pub fn random_pure_state<R: Rng + ?Sized>(vac: &VacuumReference, rng: &mut R) -> CorrelationState {
    let u = haar_unitary(vac.dim(), rng);
    CorrelationState::from_matrix_unchecked(&u * &vac.projector * u.adjoint(), "random")
}

/// Gaussian wavepacket `exp(-(x-x0)²/2w²) e^{ik0 x} u₊(k0)` projected onto
/// the positive-energy subspace of the vacuum and normalized.
pub fn wavepacket_mode(
    config: &LatticeConfig,
    vac: &VacuumReference,
    center: f64,
    width: f64,
    momentum: f64,
) -> Result<CVector> {
    check_dim(config.dim(), vac.dim())?;
    if !(width > 0.0 && width.is_finite()) {
        return Err(LabError::InvalidMode(format!(
            "wavepacket width must be positive, got {width}"
        )));
    }
    let length = config.length();
    let spinor = positive_spinor(config, momentum);
    let mut raw = CVector::zeros(config.dim());
    for site in 0..config.n_sites {
        let x = config.position(site);
        let mut dx = x - center;
        if config.boundary == crate::lattice::Boundary::Periodic {
            dx -= length * (dx / length).round();
        }
        let envelope = (-dx * dx / (2.0 * width * width)).exp();
        let phase = Complex64::from_polar(envelope, momentum * dx);
        raw[2 * site] = phase * spinor[0];
        raw[2 * site + 1] = phase * spinor[1];
    }
    let projected = vac.positive_projector() * raw;
    let norm = projected.norm();
    if norm < 1e-8 {
        return Err(LabError::InvalidMode(
            "wavepacket has no weight on positive-energy modes".into(),
        ));
    }
    Ok(projected / Complex64::from(norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{
        build_free_hamiltonian, charge_density_kernel, link_current_expectations,
        site_density_expectations, Boundary, CHARGE,
    };
    use crate::linalg::{hermiticity_error, max_abs_diff, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, a: f64, m: f64) -> (LatticeConfig, SingleParticleOperator, VacuumReference, CorrelationState) {
        let c = LatticeConfig::periodic(n, a, m).unwrap();
        let h0 = build_free_hamiltonian(&c).unwrap();
        let (vac, vstate) = build_vacuum(&h0).unwrap();
        (c, h0, vac, vstate)
    }

    #[test]
    fn vacuum_is_half_filled_with_zero_energy() {
        let (c, h0, vac, vstate) = setup(16, 0.5, 1.0);
        assert_eq!(vac.filling(), c.n_sites);
        let p = &vac.projector;
        assert!(max_abs_diff(&(p * p), p) < 1e-12);
        assert!(hermiticity_error(p) < 1e-13);
        let rank: f64 = p.trace().re;
        assert!((rank - 16.0).abs() < 1e-10);
        assert!(vac.vacuum_energy_raw < 0.0);
        assert!(free_energy(&vstate, &h0, &vac).unwrap().abs() < 1e-12);
        let currents = link_current_expectations(vstate.matrix(), &c, None);
        assert!(currents.iter().all(|j| j.abs() < 1e-12));
    }

    #[test]
    fn zero_mode_is_refused() {
        let c = LatticeConfig::periodic(8, 0.5, 0.0).unwrap();
        let h0 = build_free_hamiltonian(&c).unwrap();
        assert!(matches!(build_vacuum(&h0), Err(LabError::ZeroMode { .. })));
    }

    #[test]
    fn bloch_projector_matches_dense_vacuum() {
        for (n, a, m, r) in [(9, 0.5, 1.0, 1.0), (16, 0.25, 0.3, 0.5), (12, 0.5, 2.0, 0.7)] {
            let c = LatticeConfig::new(n, a, m, r, Boundary::Periodic).unwrap();
            let h0 = build_free_hamiltonian(&c).unwrap();
            let (vac, _) = build_vacuum(&h0).unwrap();
            let fast = bloch_vacuum_projector(&c).unwrap();
            assert!(max_abs_diff(&fast, &vac.projector) < 1e-12, "n={n} m={m}");
        }
        let zero = LatticeConfig::periodic(8, 0.5, 0.0).unwrap();
        assert!(matches!(bloch_vacuum_projector(&zero), Err(LabError::ZeroMode { .. })));
        let open = LatticeConfig::new(8, 0.5, 1.0, 1.0, Boundary::Open).unwrap();
        assert!(matches!(bloch_vacuum_projector(&open), Err(LabError::RequiresPeriodic)));
    }

    #[test]
    fn vacuum_density_normal_orders_to_zero() {
        let (c, _, vac, vstate) = setup(8, 0.5, 1.0);
        for x in 0..c.n_sites {
            let rho = charge_density_kernel(&c, x).unwrap();
            assert!(expectation(&rho, &vstate, &vac, true).unwrap().abs() < 1e-12);
        }
        let id = SingleParticleOperator::new(CMatrix::identity(c.dim(), c.dim()), "1").unwrap();
        assert!(expectation(&id, &vstate, &vac, true).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_particle_energy_and_charge() {
        let (c, h0, vac, vstate) = setup(8, 0.5, 1.0);
        let (e, mode) = vac.positive_mode(0).unwrap();
        let one = excite(&vstate, &mode, None).unwrap();
        assert!((free_energy(&one, &h0, &vac).unwrap() - e).abs() < 1e-12);
        let total: f64 = site_density_expectations(one.matrix(), &c)
            .iter()
            .zip(site_density_expectations(&vac.projector, &c))
            .map(|(x, v)| c.spacing * (x - v))
            .sum();
        assert!((total - CHARGE).abs() < 1e-12);
        assert!(one.purity_defect() < 1e-10);
    }

    #[test]
    fn particle_hole_pair_energy() {
        let (_, h0, vac, vstate) = setup(8, 0.5, 1.0);
        let (ep, p) = vac.positive_mode(1).unwrap();
        let (eh, hvec) = vac.negative_mode(2).unwrap();
        let pair = excite(&vstate, &p, Some(&hvec)).unwrap();
        let e = free_energy(&pair, &h0, &vac).unwrap();
        assert!((e - (ep - eh)).abs() < 1e-12);
        assert!(e > 0.0);
        assert!(pair.purity_defect() < 1e-10);
    }

    #[test]
    fn excite_rejects_bad_modes() {
        let (_, _, vac, vstate) = setup(6, 0.5, 1.0);
        let (_, p) = vac.positive_mode(0).unwrap();
        let (_, h) = vac.negative_mode(0).unwrap();
        let doubled = &p * Complex64::from(2.0);
        assert!(matches!(excite(&vstate, &doubled, None), Err(LabError::InvalidMode(_))));
        // occupied mode cannot be created again
        assert!(matches!(excite(&vstate, &h, None), Err(LabError::InvalidMode(_))));
        // unoccupied mode cannot be removed
        let (_, p2) = vac.positive_mode(1).unwrap();
        assert!(matches!(excite(&vstate, &p, Some(&p2)), Err(LabError::InvalidMode(_))));
    }

    #[test]
    fn moving_wavepacket_carries_positive_current() {
        let (c, _, vac, vstate) = setup(32, 0.5, 1.0);
        let mode = wavepacket_mode(&c, &vac, 8.0, 1.5, 1.0).unwrap();
        let packet = excite(&vstate, &mode, None).unwrap();
        let j = link_current_expectations(packet.matrix(), &c, None);
        let total: f64 = j.iter().sum();
        assert!(total > 0.0);
        let left = wavepacket_mode(&c, &vac, 8.0, 1.5, -1.0).unwrap();
        let left_packet = excite(&vstate, &left, None).unwrap();
        let total_left: f64 = link_current_expectations(left_packet.matrix(), &c, None).iter().sum();
        assert!(total_left < 0.0);
    }

    // A massless right-mover has group velocity +1; its current sits on the
    // packet support and travels with it.
    #[test]
    fn massless_packet_current_tracks_group_velocity() {
        let c = LatticeConfig::new(64, 0.25, 0.05, 1.0, Boundary::Periodic).unwrap();
        let h0 = build_free_hamiltonian(&c).unwrap();
        let (vac, vstate) = build_vacuum(&h0).unwrap();
        let mode = wavepacket_mode(&c, &vac, 4.0, 1.0, 1.5).unwrap();
        let packet = excite(&vstate, &mode, None).unwrap();
        let centroid = |s: &CorrelationState| {
            let j = link_current_expectations(s.matrix(), &c, None);
            let w: f64 = j.iter().sum();
            let xj: f64 = j
                .iter()
                .enumerate()
                .map(|(l, v)| (l as f64 + 0.5) * c.spacing * v)
                .sum();
            (xj / w, w)
        };
        let (x0, w0) = centroid(&packet);
        assert!(w0 > 0.0);
        let later = evolve(&packet, &h0, 2.0).unwrap();
        let (x1, w1) = centroid(&later);
        assert!(w1 > 0.0);
        let v = (x1 - x0) / 2.0;
        let vg = (dispersion_slope(&c, 1.5)).min(1.0);
        assert!((v - vg).abs() < 0.1, "v = {v}, vg = {vg}");
    }

    fn dispersion_slope(c: &LatticeConfig, k: f64) -> f64 {
        let h = 1e-5;
        (crate::lattice::dispersion(c, k + h) - crate::lattice::dispersion(c, k - h)) / (2.0 * h)
    }

    #[test]
    fn evolve_preserves_spectrum_and_energy() {
        let (c, h0, vac, _) = setup(8, 0.5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = random_pure_state(&vac, &mut rng);
        let same = evolve(&s, &h0, 0.0).unwrap();
        assert!(max_abs_diff(same.matrix(), s.matrix()) < 1e-13);
        let later = evolve(&s, &h0, 0.7).unwrap();
        let e0 = free_energy(&s, &h0, &vac).unwrap();
        let e1 = free_energy(&later, &h0, &vac).unwrap();
        assert!((e0 - e1).abs() < 1e-10);
        for (a, b) in s.occupation_spectrum().iter().zip(later.occupation_spectrum()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(later.purity_defect() < 1e-10);
        let _ = c;
    }

    #[test]
    fn expectation_is_linear_in_kernel() {
        let (_, _, vac, _) = setup(5, 0.5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = random_pure_state(&vac, &mut rng);
        let a = random_hermitian(vac.dim(), &mut rng);
        let b = random_hermitian(vac.dim(), &mut rng);
        let (alpha, beta) = (0.3, -1.7);
        let comb = SingleParticleOperator::new(
            &a * Complex64::from(alpha) + &b * Complex64::from(beta),
            "comb",
        )
        .unwrap();
        let ka = SingleParticleOperator::new(a, "a").unwrap();
        let kb = SingleParticleOperator::new(b, "b").unwrap();
        for no in [false, true] {
            let lhs = expectation(&comb, &s, &vac, no).unwrap();
            let rhs = alpha * expectation(&ka, &s, &vac, no).unwrap()
                + beta * expectation(&kb, &s, &vac, no).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (_, h0, vac, _) = setup(4, 0.5, 1.0);
        let (_, _, _, other) = setup(5, 0.5, 1.0);
        assert!(matches!(free_energy(&other, &h0, &vac), Err(LabError::DimensionMismatch { .. })));
        assert!(matches!(evolve(&other, &h0, 1.0), Err(LabError::DimensionMismatch { .. })));
    }

    #[test]
    fn corrupted_state_reports_violation() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::from(1.1);
        let s = CorrelationState::from_matrix_unchecked(m.clone(), "bad");
        let v = s.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant, "occupation <= 1");
        assert!((v[0].measured - 1.1).abs() < 1e-12);
        assert!(CorrelationState::new(m, "bad").is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let (_, _, vac, _) = setup(3, 0.5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_pure_state(&vac, &mut rng);
        let snap = s.to_snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back: StateSnapshot = serde_json::from_str(&json).unwrap();
        let restored = CorrelationState::from_snapshot(&back).unwrap();
        assert_eq!(restored.matrix(), s.matrix());
    }
}
