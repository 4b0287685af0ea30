//! Brute-force many-body representation on the full Fock space of `2N`
//! modes, with Jordan-Wigner ordering by flat mode index.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::lattice::{hopping_block, onsite_block, LatticeConfig, CHARGE};
use crate::linalg::{CMatrix, CVector, HermitianSpectrum, I, ONE, ZERO};

/// Largest number of sites the oracle accepts (`2^8 = 256` Fock states).
pub const MAX_ORACLE_SITES: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct FockSpace {
    modes: usize,
}

fn parity_below(b: usize, i: usize) -> f64 {
    if (b & ((1 << i) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl FockSpace {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    /// `c_i† c_j |b⟩ = sign |b'⟩`, or `None` when it vanishes.
    pub fn hop(b: usize, i: usize, j: usize) -> Option<(usize, f64)> {
        if b & (1 << j) == 0 {
            return None;
        }
        if i == j {
            return Some((b, 1.0));
        }
        let s1 = parity_below(b, j);
        let b1 = b ^ (1 << j);
        if b1 & (1 << i) != 0 {
            return None;
        }
        let s2 = parity_below(b1, i);
        Some((b1 | (1 << i), s1 * s2))
    }

    /// `Σ_ij k_ij c_i† c_j` as a dense Fock matrix.
    pub fn quadratic(&self, k: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for b in 0..self.dim() {
            for j in 0..self.modes {
                for i in 0..self.modes {
                    let kij = k[(i, j)];
                    if kij == ZERO {
                        continue;
                    }
                    if let Some((b2, s)) = Self::hop(b, i, j) {
                        out[(b2, b)] += kij * s;
                    }
                }
            }
        }
        out
    }

    /// `Π_k a†(φ_k) |0⟩` for orbitals stored as columns.
    pub fn slater(&self, orbitals: &CMatrix) -> CVector {
        let mut psi = CVector::zeros(self.dim());
        psi[0] = ONE;
        for col in orbitals.column_iter() {
            let mut next = CVector::zeros(self.dim());
            for b in 0..self.dim() {
                let amp = psi[b];
                if amp == ZERO {
                    continue;
                }
                for i in 0..self.modes {
                    if b & (1 << i) == 0 {
                        next[b | (1 << i)] += col[i] * amp * parity_below(b, i);
                    }
                }
            }
            psi = next;
        }
        psi
    }

    /// `C_ij = ⟨ψ| c_j† c_i |ψ⟩`.
    pub fn correlation(&self, psi: &CVector) -> CMatrix {
        let mut c = CMatrix::zeros(self.modes, self.modes);
        for b in 0..self.dim() {
            let amp = psi[b];
            if amp == ZERO {
                continue;
            }
            for i in 0..self.modes {
                for j in 0..self.modes {
                    if let Some((b2, s)) = Self::hop(b, j, i) {
                        c[(i, j)] += psi[b2].conj() * amp * s;
                    }
                }
            }
        }
        c
    }

    /// Diagonal of `exp(i Σ_i θ_i n_i)`.
    pub fn number_phase(&self, angles: &[f64]) -> CVector {
        CVector::from_fn(self.dim(), |b, _| {
            let theta: f64 = (0..self.modes)
                .filter(|i| b & (1 << i) != 0)
                .map(|i| angles[i])
                .sum();
            Complex64::from_polar(1.0, theta)
        })
    }
}

pub fn fock_expectation(op: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(op * psi)).re
}

/// Many-body operators of the free lattice field, assembled from the raw
/// hopping and on-site blocks.
#[derive(Debug, Clone)]
pub struct FockOracle {
    pub config: LatticeConfig,
    pub space: FockSpace,
    pub h0: CMatrix,
    pub densities: Vec<CMatrix>,
    pub currents: Vec<CMatrix>,
    pub spectrum: HermitianSpectrum,
}

impl FockOracle {
    pub fn new(config: &LatticeConfig) -> Result<Self> {
        config.validate()?;
        if config.n_sites > MAX_ORACLE_SITES {
            return Err(LabError::OracleTooLarge {
                n_sites: config.n_sites,
            });
        }
        let modes = config.dim();
        let space = FockSpace::new(modes);
        let t = hopping_block(config);
        let onsite = onsite_block(config);
        let mut kernel = CMatrix::zeros(modes, modes);
        for x in 0..config.n_sites {
            for s in 0..2 {
                for u in 0..2 {
                    kernel[(2 * x + s, 2 * x + u)] += onsite[(s, u)];
                }
            }
        }
        let mut link_ops = Vec::with_capacity(config.n_links());
        for l in 0..config.n_links() {
            let (x, y) = config.link_sites(l);
            let mut k = CMatrix::zeros(modes, modes);
            for s in 0..2 {
                for u in 0..2 {
                    k[(2 * x + s, 2 * y + u)] += t[(s, u)];
                    k[(2 * y + u, 2 * x + s)] += t[(s, u)].conj();
                }
            }
            kernel += &k;
            link_ops.push((y, space.quadratic(&k)));
        }
        let h0 = space.quadratic(&kernel);
        let densities: Vec<CMatrix> = (0..config.n_sites)
            .map(|x| {
                let mut k = CMatrix::zeros(modes, modes);
                k[(2 * x, 2 * x)] = Complex64::from(CHARGE / config.spacing);
                k[(2 * x + 1, 2 * x + 1)] = Complex64::from(CHARGE / config.spacing);
                space.quadratic(&k)
            })
            .collect();
        let currents = link_ops
            .iter()
            .map(|(y, h_l)| {
                let rho = &densities[*y];
                (h_l * rho - rho * h_l) * (I * config.spacing)
            })
            .collect();
        let spectrum = HermitianSpectrum::new(&h0);
        Ok(Self {
            config: *config,
            space,
            h0,
            densities,
            currents,
            spectrum,
        })
    }

    pub fn ground_energy(&self) -> f64 {
        self.spectrum.values[0]
    }

    pub fn ground_state(&self) -> CVector {
        self.spectrum.vectors.column(0).into_owned()
    }

    /// Spectral gap above the ground state.
    pub fn ground_gap(&self) -> f64 {
        self.spectrum.values[1] - self.spectrum.values[0]
    }

    /// `U_χ` on the Fock space, with `χ` given per site.
    pub fn gauge_phase(&self, chi: &[f64]) -> CVector {
        let angles: Vec<f64> = (0..self.space.modes()).map(|i| CHARGE * chi[i / 2]).collect();
        self.space.number_phase(&angles)
    }

    /// `e^{-iHt} ψ` through the many-body eigenbasis.
    pub fn evolve(&self, psi: &CVector, t: f64) -> CVector {
        let v = &self.spectrum.vectors;
        let mut coeffs = v.adjoint() * psi;
        for (c, e) in coeffs.iter_mut().zip(&self.spectrum.values) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        v * coeffs
    }
}

/// `diag(d) M diag(d)†`.
pub fn conjugate_diagonal(d: &CVector, m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j].conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    // Quadratic forms represent the one-body Lie algebra only if every
    // Jordan-Wigner sign is right: [Q(A), Q(B)] = Q([A, B]).
    #[test]
    fn quadratic_forms_respect_commutators() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let space = FockSpace::new(4);
        let a = crate::linalg::random_hermitian(4, &mut rng);
        let b = crate::linalg::random_hermitian(4, &mut rng) * I;
        let qa = space.quadratic(&a);
        let qb = space.quadratic(&b);
        let lhs = &qa * &qb - &qb * &qa;
        let rhs = space.quadratic(&(&a * &b - &b * &a));
        assert!(crate::linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
        assert_eq!(qa.adjoint(), qa);
    }

    #[test]
    fn two_mode_slater_sign() {
        let space = FockSpace::new(2);
        let mut orbitals = CMatrix::zeros(2, 2);
        orbitals[(1, 0)] = ONE;
        orbitals[(0, 1)] = ONE;
        // columns are applied in order, so this is c_0† c_1† |0⟩ = +|11⟩;
        // swapping the columns flips the sign
        let psi = space.slater(&orbitals);
        assert_eq!(psi[3], ONE);
        orbitals.swap_columns(0, 1);
        assert_eq!(space.slater(&orbitals)[3], -ONE);
    }

    #[test]
    fn number_operator_counts_particles() {
        let space = FockSpace::new(4);
        let n = space.quadratic(&CMatrix::identity(4, 4));
        for b in 0..space.dim() {
            assert_eq!(n[(b, b)].re, b.count_ones() as f64);
        }
    }

    #[test]
    fn refuses_large_lattices() {
        let c = LatticeConfig::new(5, 0.5, 1.0, 1.0, Boundary::Periodic).unwrap();
        assert!(matches!(FockOracle::new(&c), Err(LabError::OracleTooLarge { n_sites: 5 })));
    }
}
