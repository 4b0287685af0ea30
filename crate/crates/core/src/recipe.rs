//! Physical descriptions of states and gauge functions that can be rebuilt on
//! any lattice of the same box, which is what refinement studies need.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counterexample::build_chi_from_current;
use crate::error::{LabError, Result};
use crate::gauge::GaugeFunction;
use crate::lattice::{build_free_hamiltonian, LatticeConfig, SingleParticleOperator};
use crate::state::{
    build_vacuum, excite, random_pure_state, wavepacket_mode, CorrelationState, VacuumReference,
};

/// Free kernel, vacuum reference and vacuum state of one lattice.
#[derive(Debug, Clone)]
pub struct Lab {
    pub config: LatticeConfig,
    pub h0: SingleParticleOperator,
    pub vac: VacuumReference,
    pub vacuum: CorrelationState,
}

impl Lab {
    pub fn new(config: LatticeConfig) -> Result<Self> {
        let h0 = build_free_hamiltonian(&config)?;
        let (vac, vacuum) = build_vacuum(&h0)?;
        Ok(Self {
            config,
            h0,
            vac,
            vacuum,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateRecipe {
    Vacuum,
    /// One particle in a Gaussian packet of positive-energy modes.
    Wavepacket {
        center: f64,
        width: f64,
        momentum: f64,
    },
    /// Haar-random rotation of the vacuum.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl Default for StateRecipe {
    fn default() -> Self {
        StateRecipe::Wavepacket {
            center: 4.0,
            width: 1.0,
            momentum: 1.0,
        }
    }
}

impl StateRecipe {
    /// `fallback_seed` is used when a random recipe carries no seed of its own.
    pub fn build(&self, lab: &Lab, fallback_seed: u64) -> Result<CorrelationState> {
        match self {
            StateRecipe::Vacuum => Ok(lab.vacuum.clone()),
            StateRecipe::Wavepacket {
                center,
                width,
                momentum,
            } => {
                let mode = wavepacket_mode(&lab.config, &lab.vac, *center, *width, *momentum)?;
                Ok(excite(&lab.vacuum, &mode, None)?.with_label("wavepacket"))
            }
            StateRecipe::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed));
                Ok(random_pure_state(&lab.vac, &mut rng))
            }
        }
    }

    /// Whether the recipe names the same physical state on every lattice.
    pub fn is_physical(&self) -> bool {
        !matches!(self, StateRecipe::Random { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChiRecipe {
    Constant {
        #[serde(alias = "c")]
        value: f64,
    },
    Sine {
        amplitude: f64,
        wavelength: f64,
    },
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// `χ = f ∇·⟨J⟩` of the state it is applied to.
    FromCurrent {
        f: f64,
    },
    /// Explicit per-site samples; only valid on a lattice of matching size.
    Samples {
        values: Vec<f64>,
    },
}

impl Default for ChiRecipe {
    fn default() -> Self {
        ChiRecipe::Sine {
            amplitude: 0.5,
            wavelength: 8.0,
        }
    }
}

impl ChiRecipe {
    /// `state` is only consulted by [`ChiRecipe::FromCurrent`].
    pub fn build(
        &self,
        config: &LatticeConfig,
        state: Option<&CorrelationState>,
    ) -> Result<GaugeFunction> {
        match self {
            ChiRecipe::Constant { value } => Ok(GaugeFunction::constant(config, *value)),
            ChiRecipe::Sine {
                amplitude,
                wavelength,
            } => {
                if !(*wavelength > 0.0) {
                    return Err(LabError::InvalidGauge(format!(
                        "sine wavelength must be positive, got {wavelength}"
                    )));
                }
                Ok(GaugeFunction::sine(config, *amplitude, *wavelength))
            }
            ChiRecipe::Bump {
                center,
                width,
                amplitude,
            } => {
                if !(*width > 0.0) {
                    return Err(LabError::InvalidGauge(format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                Ok(GaugeFunction::bump(config, *center, *width, *amplitude))
            }
            ChiRecipe::FromCurrent { f } => match state {
                Some(state) => build_chi_from_current(state, *f, config),
                None => Err(LabError::InvalidGauge(
                    "from_current needs the state it is applied to".into(),
                )),
            },
            ChiRecipe::Samples { values } => {
                if values.len() != config.n_sites {
                    return Err(LabError::DimensionMismatch {
                        expected: config.n_sites,
                        found: values.len(),
                    });
                }
                GaugeFunction::new(values.clone(), "samples")
            }
        }
    }

    /// Same shape with the amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ChiRecipe {
        match self {
            ChiRecipe::Constant { value } => ChiRecipe::Constant {
                value: value * factor,
            },
            ChiRecipe::Sine {
                amplitude,
                wavelength,
            } => ChiRecipe::Sine {
                amplitude: amplitude * factor,
                wavelength: *wavelength,
            },
            ChiRecipe::Bump {
                center,
                width,
                amplitude,
            } => ChiRecipe::Bump {
                center: *center,
                width: *width,
                amplitude: amplitude * factor,
            },
            ChiRecipe::FromCurrent { f } => ChiRecipe::FromCurrent { f: f * factor },
            ChiRecipe::Samples { values } => ChiRecipe::Samples {
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    pub fn needs_state(&self) -> bool {
        matches!(self, ChiRecipe::FromCurrent { .. })
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ChiRecipe::Constant { .. } => true,
            ChiRecipe::Sine { amplitude, .. } | ChiRecipe::Bump { amplitude, .. } => {
                *amplitude == 0.0
            }
            ChiRecipe::FromCurrent { f } => *f == 0.0,
            ChiRecipe::Samples { values } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipes_parse_from_toml() {
        #[derive(Deserialize)]
        struct Doc {
            state: StateRecipe,
            chi: ChiRecipe,
        }
        let doc: Doc = toml::from_str(
            r#"
            [state]
            kind = "wavepacket"
            center = 3.0
            width = 1.0
            momentum = 0.5

            [chi]
            kind = "bump"
            center = 2.0
            width = 0.5
            amplitude = 1.0
            "#,
        )
        .unwrap();
        assert_eq!(
            doc.state,
            StateRecipe::Wavepacket {
                center: 3.0,
                width: 1.0,
                momentum: 0.5
            }
        );
        assert!(matches!(doc.chi, ChiRecipe::Bump { .. }));
    }

    #[test]
    fn samples_must_match_lattice() {
        let lab = Lab::new(LatticeConfig::periodic(4, 0.5, 1.0).unwrap()).unwrap();
        let ok = ChiRecipe::Samples {
            values: vec![0.0, 1.0, 0.0, -1.0],
        };
        assert!(ok.build(&lab.config, None).is_ok());
        let bad = ChiRecipe::Samples {
            values: vec![0.0; 3],
        };
        assert!(bad.build(&lab.config, None).is_err());
    }

    #[test]
    fn random_recipe_is_seeded() {
        let lab = Lab::new(LatticeConfig::periodic(4, 0.5, 1.0).unwrap()).unwrap();
        let r = StateRecipe::Random { seed: Some(5) };
        assert_eq!(r.build(&lab, 0).unwrap().matrix(), r.build(&lab, 1).unwrap().matrix());
        let unseeded = StateRecipe::Random { seed: None };
        assert_ne!(
            unseeded.build(&lab, 0).unwrap().matrix(),
            unseeded.build(&lab, 1).unwrap().matrix()
        );
    }
}
