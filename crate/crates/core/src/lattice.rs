//! Single-particle kernels of the Wilson-discretized 1+1D Dirac field.
//!
//! The single-particle space is `site ⊗ spinor` with flat index `2 * site + s`.
//! Dirac matrices are `α = σx`, `β = σz`, so the free kernel reads
//!
//! ```text
//! h0 = Σ_x β (m + r/a)               (on site)
//!    + Σ_x [ T |x⟩⟨x+1| + T† |x+1⟩⟨x| ]   (hopping)
//! T  = -i α / (2a) - r β / (2a)
//! ```
//!
//! and its Bloch form is `h(k) = α sin(ka)/a + β (m + r (1 - cos ka)/a)`.
//! A vector potential enters through link phases: the hopping block of link
//! `l` becomes `T exp(-i q a A_l)` (Peierls) or its first-order expansion
//! `T (1 - i q a A_l)` (linear). The charge is fixed at `q = +1`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{hermiticity_error, CMatrix, I, ZERO};

/// Coupling constant of the field to the potential.
pub const CHARGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingScheme {
    /// Hopping multiplied by `exp(-i q a A)`; exactly gauge covariant.
    Peierls,
    /// First-order expansion of the link phase: `h0 - a Σ J A + a Σ ρ A0`.
    Linear,
}

impl CouplingScheme {
    pub fn name(self) -> &'static str {
        match self {
            CouplingScheme::Peierls => "peierls",
            CouplingScheme::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub n_sites: usize,
    pub spacing: f64,
    pub mass: f64,
    pub wilson_r: f64,
    pub boundary: Boundary,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            n_sites: 32,
            spacing: 0.5,
            mass: 1.0,
            wilson_r: 1.0,
            boundary: Boundary::Periodic,
        }
    }
}

impl LatticeConfig {
    pub fn new(
        n_sites: usize,
        spacing: f64,
        mass: f64,
        wilson_r: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let cfg = Self {
            n_sites,
            spacing,
            mass,
            wilson_r,
            boundary,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn periodic(n_sites: usize, spacing: f64, mass: f64) -> Result<Self> {
        Self::new(n_sites, spacing, mass, 1.0, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(LabError::InvalidConfig(format!(
                "n_sites must be at least 2, got {}",
                self.n_sites
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(LabError::InvalidConfig(format!(
                "spacing must be positive and finite, got {}",
                self.spacing
            )));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(LabError::InvalidConfig(format!(
                "mass must be non-negative and finite, got {}",
                self.mass
            )));
        }
        if !(self.wilson_r > 0.0 && self.wilson_r <= 1.0) {
            return Err(LabError::InvalidConfig(format!(
                "wilson_r must lie in (0, 1], got {}",
                self.wilson_r
            )));
        }
        Ok(())
    }

    /// Dimension of the single-particle space, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_sites
    }

    pub fn n_links(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.n_sites,
            Boundary::Open => self.n_sites - 1,
        }
    }

    pub fn length(&self) -> f64 {
        self.n_sites as f64 * self.spacing
    }

    pub fn position(&self, site: usize) -> f64 {
        site as f64 * self.spacing
    }

    /// Sites joined by link `l`, oriented left to right.
    pub fn link_sites(&self, link: usize) -> (usize, usize) {
        (link, (link + 1) % self.n_sites)
    }

    /// The same physical box with the spacing halved `halvings` times.
    pub fn refined(&self, halvings: u32) -> Self {
        let factor = 1usize << halvings;
        Self {
            n_sites: self.n_sites * factor,
            spacing: self.spacing / factor as f64,
            ..*self
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(LabError::IndexOutOfRange {
                what: "site",
                index: site,
                len: self.n_sites,
            });
        }
        Ok(())
    }

    fn check_link(&self, link: usize) -> Result<()> {
        if link >= self.n_links() {
            return Err(LabError::IndexOutOfRange {
                what: "link",
                index: link,
                len: self.n_links(),
            });
        }
        Ok(())
    }
}

/// Hermitian kernel `M` of a bilinear `Σ ψ†_i M_ij ψ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleOperator {
    matrix: CMatrix,
    label: String,
}

impl SingleParticleOperator {
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(LabError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// Row-major `[re, im]` pairs, the debugging dump used in reports.
    pub fn to_row_major_pairs(&self) -> Vec<[f64; 2]> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                out.push([z.re, z.im]);
            }
        }
        out
    }
}

/// Vector potential on links, in inverse length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkField {
    pub values: Vec<f64>,
}

impl LinkField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(config: &LatticeConfig) -> Self {
        Self {
            values: vec![0.0; config.n_links()],
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Scalar potential `A0` on sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPotential {
    pub values: Vec<f64>,
}

impl ScalarPotential {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(config: &LatticeConfig) -> Self {
        Self {
            values: vec![0.0; config.n_sites],
        }
    }

    pub fn constant(config: &LatticeConfig, value: f64) -> Self {
        Self {
            values: vec![value; config.n_sites],
        }
    }
}

fn sigma_x() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, Complex64::from(1.0), Complex64::from(1.0), ZERO)
}

fn sigma_z() -> Matrix2<Complex64> {
    Matrix2::new(Complex64::from(1.0), ZERO, ZERO, Complex64::from(-1.0))
}

/// Forward hopping block `T = -iα/(2a) - rβ/(2a)`.
pub fn hopping_block(config: &LatticeConfig) -> Matrix2<Complex64> {
    let a = config.spacing;
    sigma_x() * (-I / (2.0 * a)) - sigma_z() * Complex64::from(config.wilson_r / (2.0 * a))
}

/// On-site block `β (m + r/a)`.
pub fn onsite_block(config: &LatticeConfig) -> Matrix2<Complex64> {
    sigma_z() * Complex64::from(config.mass + config.wilson_r / config.spacing)
}

/// Hopping block of every link, dressed by the link potential.
pub fn dressed_hopping(
    config: &LatticeConfig,
    a_link: Option<&LinkField>,
    scheme: CouplingScheme,
) -> Vec<Matrix2<Complex64>> {
    let t = hopping_block(config);
    let qa = CHARGE * config.spacing;
    (0..config.n_links())
        .map(|l| {
            let potential = a_link.map_or(0.0, |f| f.values[l]);
            let factor = match scheme {
                CouplingScheme::Peierls => Complex64::from_polar(1.0, -qa * potential),
                CouplingScheme::Linear => Complex64::new(1.0, -qa * potential),
            };
            t * factor
        })
        .collect()
}

fn add_block(h: &mut CMatrix, row_site: usize, col_site: usize, block: &Matrix2<Complex64>) {
    for s in 0..2 {
        for t in 0..2 {
            h[(2 * row_site + s, 2 * col_site + t)] += block[(s, t)];
        }
    }
}

fn add_link(h: &mut CMatrix, config: &LatticeConfig, link: usize, block: &Matrix2<Complex64>) {
    let (x, y) = config.link_sites(link);
    add_block(h, x, y, block);
    add_block(h, y, x, &block.adjoint());
}

fn assemble(
    config: &LatticeConfig,
    hopping: &[Matrix2<Complex64>],
    a0: Option<&ScalarPotential>,
) -> CMatrix {
    let mut h = CMatrix::zeros(config.dim(), config.dim());
    let onsite = onsite_block(config);
    for x in 0..config.n_sites {
        let shift = a0.map_or(0.0, |p| CHARGE * p.values[x]);
        let block = onsite + Matrix2::identity() * Complex64::from(shift);
        add_block(&mut h, x, x, &block);
    }
    for (l, block) in hopping.iter().enumerate() {
        add_link(&mut h, config, l, block);
    }
    h
}

pub fn build_free_hamiltonian(config: &LatticeConfig) -> Result<SingleParticleOperator> {
    config.validate()?;
    let hopping = dressed_hopping(config, None, CouplingScheme::Peierls);
    SingleParticleOperator::new(assemble(config, &hopping, None), "h0")
}

pub fn build_coupled_hamiltonian(
    config: &LatticeConfig,
    a_link: &LinkField,
    a0: &ScalarPotential,
    scheme: CouplingScheme,
) -> Result<SingleParticleOperator> {
    config.validate()?;
    if a_link.values.len() != config.n_links() {
        return Err(LabError::DimensionMismatch {
            expected: config.n_links(),
            found: a_link.values.len(),
        });
    }
    if a0.values.len() != config.n_sites {
        return Err(LabError::DimensionMismatch {
            expected: config.n_sites,
            found: a0.values.len(),
        });
    }
    let hopping = dressed_hopping(config, Some(a_link), scheme);
    SingleParticleOperator::new(
        assemble(config, &hopping, Some(a0)),
        format!("h[{}]", scheme.name()),
    )
}

/// Kernel of `ρ(x_site)`: `q/a` times the projector onto the site's spinor.
pub fn charge_density_kernel(
    config: &LatticeConfig,
    site: usize,
) -> Result<SingleParticleOperator> {
    config.validate()?;
    config.check_site(site)?;
    let mut m = CMatrix::zeros(config.dim(), config.dim());
    let w = Complex64::from(CHARGE / config.spacing);
    m[(2 * site, 2 * site)] = w;
    m[(2 * site + 1, 2 * site + 1)] = w;
    SingleParticleOperator::new(m, format!("rho[{site}]"))
}

/// Kernel of the link current `J_l`, obtained as `a · i[h_l, ρ(y)]` where
/// `h_l` is the hopping of link `l` alone and `y` its right-hand site.
///
/// With this definition `i[h0, ρ(x)] = -(J_x - J_{x-1}) / a` holds as a
/// kernel identity.
pub fn current_kernel(config: &LatticeConfig, link: usize) -> Result<SingleParticleOperator> {
    current_kernel_in_field(config, link, None)
}

/// Link current of the Peierls-coupled Hamiltonian, `-(1/a) ∂h/∂A_l`.
///
/// For `A = ∇χ` this is the gauge-covariant current `G_χ J_l G_χ†`.
pub fn current_kernel_in_field(
    config: &LatticeConfig,
    link: usize,
    a_link: Option<&LinkField>,
) -> Result<SingleParticleOperator> {
    config.validate()?;
    config.check_link(link)?;
    if let Some(f) = a_link {
        if f.values.len() != config.n_links() {
            return Err(LabError::DimensionMismatch {
                expected: config.n_links(),
                found: f.values.len(),
            });
        }
    }
    let block = dressed_hopping(config, a_link, CouplingScheme::Peierls)[link];
    let mut h_link = CMatrix::zeros(config.dim(), config.dim());
    add_link(&mut h_link, config, link, &block);
    let (_, y) = config.link_sites(link);
    let rho = charge_density_kernel(config, y)?.into_matrix();
    let commutator = &h_link * &rho - &rho * &h_link;
    let j = commutator * (I * config.spacing);
    SingleParticleOperator::new(j, format!("J[{link}]"))
}

/// Raw link currents `Tr(J_l C)` evaluated from the hopping blocks directly.
pub fn link_current_expectations(
    corr: &CMatrix,
    config: &LatticeConfig,
    a_link: Option<&LinkField>,
) -> Vec<f64> {
    let blocks = dressed_hopping(config, a_link, CouplingScheme::Peierls);
    blocks
        .iter()
        .enumerate()
        .map(|(l, b)| {
            let (x, y) = config.link_sites(l);
            let mut acc = ZERO;
            for s in 0..2 {
                for t in 0..2 {
                    acc += I * b[(s, t)] * corr[(2 * y + t, 2 * x + s)];
                }
            }
            2.0 * CHARGE * acc.re
        })
        .collect()
}

/// Raw site densities `Tr(ρ_x C)`.
pub fn site_density_expectations(corr: &CMatrix, config: &LatticeConfig) -> Vec<f64> {
    let w = CHARGE / config.spacing;
    (0..config.n_sites)
        .map(|x| w * (corr[(2 * x, 2 * x)].re + corr[(2 * x + 1, 2 * x + 1)].re))
        .collect()
}

/// Two-component Bloch Hamiltonian of the periodic free kernel.
pub fn bloch_hamiltonian(config: &LatticeConfig, k: f64) -> Matrix2<Complex64> {
    let a = config.spacing;
    let ka = k * a;
    let kinetic = ka.sin() / a;
    let wilson_mass = config.mass + config.wilson_r * (1.0 - ka.cos()) / a;
    sigma_x() * Complex64::from(kinetic) + sigma_z() * Complex64::from(wilson_mass)
}

/// Positive branch of the lattice dispersion.
pub fn dispersion(config: &LatticeConfig, k: f64) -> f64 {
    let a = config.spacing;
    let ka = k * a;
    let kinetic = ka.sin() / a;
    let wilson_mass = config.mass + config.wilson_r * (1.0 - ka.cos()) / a;
    kinetic.hypot(wilson_mass)
}

/// Normalized positive-energy spinor of `h(k)`.
pub fn positive_spinor(config: &LatticeConfig, k: f64) -> [Complex64; 2] {
    let a = config.spacing;
    let ka = k * a;
    let s = ka.sin() / a;
    let mm = config.mass + config.wilson_r * (1.0 - ka.cos()) / a;
    let e = s.hypot(mm);
    if e == 0.0 {
        return [Complex64::from(1.0), ZERO];
    }
    // h = [[M, s], [s, -M]]; (M + E, s) is the +E eigenvector.
    let (u0, u1) = if mm >= 0.0 { (mm + e, s) } else { (s, e - mm) };
    let norm = u0.hypot(u1);
    [Complex64::from(u0 / norm), Complex64::from(u1 / norm)]
}

/// Allowed lattice momenta of the periodic box, in `(-π/a, π/a]`.
pub fn lattice_momenta(config: &LatticeConfig) -> Vec<f64> {
    let n = config.n_sites as i64;
    let dk = 2.0 * std::f64::consts::PI / config.length();
    (0..n)
        .map(|j| {
            let shifted = if j > n / 2 { j - n } else { j };
            shifted as f64 * dk
        })
        .collect()
}

/// `Γ h* Γ⁻¹` for `Γ = 1 ⊗ σx`; the free kernel satisfies `Γ h0* Γ⁻¹ = -h0`.
pub fn charge_conjugate(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let flip = |i: usize| i ^ 1;
    CMatrix::from_fn(n, n, |i, j| h[(flip(i), flip(j))].conj())
}

/// One-site translation `(S ψ)_x = ψ_{x-1}` on a periodic lattice.
pub fn translation(config: &LatticeConfig) -> CMatrix {
    let n = config.n_sites;
    let mut s = CMatrix::zeros(config.dim(), config.dim());
    for x in 0..n {
        let y = (x + 1) % n;
        s[(2 * y, 2 * x)] = Complex64::from(1.0);
        s[(2 * y + 1, 2 * x + 1)] = Complex64::from(1.0);
    }
    s
}
