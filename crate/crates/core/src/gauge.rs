//! Static gauge changes: `A → A + ∇χ` on links and the local phase unitary
//! `G_χ = diag(exp(i q χ(x)))` acting on states as `C → G C G†`.
//!
//! The Peierls kernel is exactly covariant, `G_χ† h[A + ∇χ] G_χ = h[A]`,
//! where `∇χ` is the forward link difference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::{
    build_coupled_hamiltonian, link_current_expectations, Boundary, CouplingScheme,
    LatticeConfig, LinkField, ScalarPotential, SingleParticleOperator, CHARGE,
};
use crate::linalg::{trace_product_re, CMatrix};
use crate::state::{energy_with_potential, CorrelationState, VacuumReference};

/// Real gauge function sampled on sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeFunction {
    pub chi: Vec<f64>,
    pub label: String,
}

impl GaugeFunction {
    pub fn new(chi: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some((i, v)) = chi.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(LabError::InvalidGauge(format!("chi[{i}] = {v} is not finite")));
        }
        Ok(Self {
            chi,
            label: label.into(),
        })
    }

    pub fn zeros(config: &LatticeConfig) -> Self {
        Self {
            chi: vec![0.0; config.n_sites],
            label: "zero".into(),
        }
    }

    pub fn constant(config: &LatticeConfig, value: f64) -> Self {
        Self {
            chi: vec![value; config.n_sites],
            label: format!("constant({value})"),
        }
    }

    /// `amplitude · sin(2π x / wavelength)` on site positions.
    pub fn sine(config: &LatticeConfig, amplitude: f64, wavelength: f64) -> Self {
        let k = 2.0 * std::f64::consts::PI / wavelength;
        Self {
            chi: (0..config.n_sites)
                .map(|s| amplitude * (k * config.position(s)).sin())
                .collect(),
            label: format!("sine({amplitude},{wavelength})"),
        }
    }

    /// Gaussian bump with periodic minimal-image distance.
    pub fn bump(config: &LatticeConfig, center: f64, width: f64, amplitude: f64) -> Self {
        let length = config.length();
        Self {
            chi: (0..config.n_sites)
                .map(|s| {
                    let mut dx = config.position(s) - center;
                    if config.boundary == Boundary::Periodic {
                        dx -= length * (dx / length).round();
                    }
                    amplitude * (-dx * dx / (2.0 * width * width)).exp()
                })
                .collect(),
            label: format!("bump({center},{width},{amplitude})"),
        }
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            chi: self.chi.iter().map(|v| v * factor).collect(),
            label: format!("{}*{factor}", self.label),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            chi: self.chi.iter().map(|v| -v).collect(),
            label: format!("-{}", self.label),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.chi.windows(2).all(|w| w[0] == w[1])
    }

    fn check(&self, config: &LatticeConfig) -> Result<()> {
        if self.chi.len() != config.n_sites {
            return Err(LabError::DimensionMismatch {
                expected: config.n_sites,
                found: self.chi.len(),
            });
        }
        Ok(())
    }
}

/// Diagonal phase unitary; both spinor components of a site share a phase.
/// Stored as angles so that equal angles conjugate to exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeUnitary {
    angles: Vec<f64>,
}

impl GaugeUnitary {
    pub fn identity(n_sites: usize) -> Self {
        Self {
            angles: vec![0.0; n_sites],
        }
    }

    pub fn site_phases(&self) -> Vec<Complex64> {
        self.angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_sites(&self) -> usize {
        self.angles.len()
    }

    pub fn compose(&self, other: &GaugeUnitary) -> GaugeUnitary {
        GaugeUnitary {
            angles: self.angles.iter().zip(&other.angles).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn inverse(&self) -> GaugeUnitary {
        GaugeUnitary {
            angles: self.angles.iter().map(|t| -t).collect(),
        }
    }

    /// Dense `2N × 2N` matrix.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.angles.len();
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        for (x, p) in self.site_phases().into_iter().enumerate() {
            m[(2 * x, 2 * x)] = p;
            m[(2 * x + 1, 2 * x + 1)] = p;
        }
        m
    }

    /// `G M G†` for a single-particle kernel.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let t = |i: usize| self.angles[i / 2];
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            let d = t(i) - t(j);
            if d == 0.0 {
                m[(i, j)]
            } else {
                Complex64::from_polar(1.0, d) * m[(i, j)]
            }
        })
    }

    pub fn max_deviation(&self, other: &GaugeUnitary) -> f64 {
        self.site_phases()
            .iter()
            .zip(&other.site_phases())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()))
    }
}

/// `A_l = (χ_{l+1} - χ_l) / a`, wrapping at the boundary.
pub fn gradient_on_links(chi: &GaugeFunction, config: &LatticeConfig) -> Result<LinkField> {
    if config.boundary != Boundary::Periodic {
        return Err(LabError::RequiresPeriodic);
    }
    chi.check(config)?;
    let a = config.spacing;
    Ok(LinkField::new(
        (0..config.n_links())
            .map(|l| {
                let (x, y) = config.link_sites(l);
                (chi.chi[y] - chi.chi[x]) / a
            })
            .collect(),
    ))
}

pub fn make_unitary(chi: &GaugeFunction, config: &LatticeConfig) -> Result<GaugeUnitary> {
    chi.check(config)?;
    Ok(GaugeUnitary {
        angles: chi.chi.iter().map(|&c| CHARGE * c).collect(),
    })
}

pub fn apply_unitary(state: &CorrelationState, unitary: &GaugeUnitary) -> Result<CorrelationState> {
    if state.dim() != 2 * unitary.n_sites() {
        return Err(LabError::DimensionMismatch {
            expected: 2 * unitary.n_sites(),
            found: state.dim(),
        });
    }
    Ok(CorrelationState::from_matrix_unchecked(
        unitary.conjugate(state.matrix()),
        format!("U{}", state.label()),
    ))
}

/// `|Ω_g⟩ = U_χ |Ω⟩`, i.e. `C → G_χ C G_χ†`.
pub fn apply_gauge(
    state: &CorrelationState,
    chi: &GaugeFunction,
    config: &LatticeConfig,
) -> Result<CorrelationState> {
    apply_unitary(state, &make_unitary(chi, config)?)
}

/// Kernel seen by the observer whose potential is the pure gauge `A = ∇χ`.
pub fn sg_hamiltonian(
    chi: &GaugeFunction,
    config: &LatticeConfig,
    scheme: CouplingScheme,
) -> Result<SingleParticleOperator> {
    let field = gradient_on_links(chi, config)?;
    build_coupled_hamiltonian(config, &field, &ScalarPotential::zeros(config), scheme)
}

/// Energy of `state` for the observer with `A = ∇χ`, `A0 = 0`, normal-ordered
/// against the free vacuum. The linear scheme is `⟨H0 - a Σ J ∇χ⟩`.
pub fn sg_energy(
    state: &CorrelationState,
    chi: &GaugeFunction,
    config: &LatticeConfig,
    vac: &VacuumReference,
    scheme: CouplingScheme,
) -> Result<f64> {
    let h = sg_hamiltonian(chi, config, scheme)?;
    energy_with_potential(state, &h, vac)
}

/// `P(χ) = ⟨0|U_χ† H0 U_χ|0⟩`, the free energy of the gauge-rotated vacuum.
pub fn vacuum_energy_shift(
    chi: &GaugeFunction,
    config: &LatticeConfig,
    h0: &SingleParticleOperator,
    vac: &VacuumReference,
) -> Result<f64> {
    vacuum_energy_shift_from_projector(chi, config, h0, &vac.projector)
}

/// [`vacuum_energy_shift`] for a vacuum projector obtained by other means,
/// e.g. [`crate::state::bloch_vacuum_projector`] on large periodic chains.
pub fn vacuum_energy_shift_from_projector(
    chi: &GaugeFunction,
    config: &LatticeConfig,
    h0: &SingleParticleOperator,
    projector: &CMatrix,
) -> Result<f64> {
    if h0.dim() != projector.nrows() {
        return Err(LabError::DimensionMismatch {
            expected: h0.dim(),
            found: projector.nrows(),
        });
    }
    let g = make_unitary(chi, config)?;
    let rotated = g.conjugate(projector);
    Ok(trace_product_re(h0.matrix(), &rotated) - trace_product_re(h0.matrix(), projector))
}

/// `⟨Ω|U_χ† :H0: U_χ|Ω⟩` evaluated through the operator instead of the state:
/// `U_χ† H0 U_χ` is the coupled kernel at `A = -∇χ`. Exact for Peierls,
/// first order in `∇χ` for the linear scheme.
pub fn conjugated_free_energy(
    state: &CorrelationState,
    chi: &GaugeFunction,
    config: &LatticeConfig,
    vac: &VacuumReference,
    scheme: CouplingScheme,
) -> Result<f64> {
    let h = sg_hamiltonian(&chi.negated(), config, scheme)?;
    if h.dim() != state.dim() {
        return Err(LabError::DimensionMismatch {
            expected: h.dim(),
            found: state.dim(),
        });
    }
    Ok(trace_product_re(h.matrix(), state.matrix()) - vac.vacuum_energy_raw)
}

/// Raw link currents `⟨J_l⟩`.
pub fn link_currents(state: &CorrelationState, config: &LatticeConfig) -> Result<Vec<f64>> {
    if state.dim() != config.dim() {
        return Err(LabError::DimensionMismatch {
            expected: config.dim(),
            found: state.dim(),
        });
    }
    Ok(link_current_expectations(state.matrix(), config, None))
}

/// Gauge-covariant link currents for the observer with `A = ∇χ`
/// (the Peierls current `G_χ J_l G_χ†`).
pub fn covariant_link_currents(
    state: &CorrelationState,
    chi: &GaugeFunction,
    config: &LatticeConfig,
) -> Result<Vec<f64>> {
    let field = gradient_on_links(chi, config)?;
    if state.dim() != config.dim() {
        return Err(LabError::DimensionMismatch {
            expected: config.dim(),
            found: state.dim(),
        });
    }
    Ok(link_current_expectations(state.matrix(), config, Some(&field)))
}

/// Backward difference `(⟨J_x⟩ - ⟨J_{x-1}⟩) / a`, the negative adjoint of
/// [`gradient_on_links`]. On an open chain the missing end links carry zero.
pub fn divergence_of_current(state: &CorrelationState, config: &LatticeConfig) -> Result<Vec<f64>> {
    let j = link_currents(state, config)?;
    Ok(divergence(&j, config))
}

pub(crate) fn divergence(j: &[f64], config: &LatticeConfig) -> Vec<f64> {
    let n = config.n_sites;
    let a = config.spacing;
    let link = |l: Option<usize>| l.and_then(|l| j.get(l).copied()).unwrap_or(0.0);
    (0..n)
        .map(|x| {
            let left = match config.boundary {
                Boundary::Periodic => Some((x + n - 1) % n),
                Boundary::Open => x.checked_sub(1),
            };
            (link(Some(x)) - link(left)) / a
        })
        .collect()
}
