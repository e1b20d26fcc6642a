//! Shared fixtures for the criterion benches.

use hxreg::nalgebra::DVector;
use hxreg::{synthesize, ExoSystem, PlantConfig, RegulatorParams, SynthOptions};

/// Heat-exchanger plant, harmonic exosystem and regulator on `n` grid points.
pub struct Scenario {
    pub plant: PlantConfig,
    pub exo: ExoSystem,
    pub params: RegulatorParams,
    pub r_w0: DVector<f64>,
}

impl Scenario {
    pub fn heat_exchanger(n: usize) -> Self {
        let plant = PlantConfig::heat_exchanger(n).expect("valid grid");
        let exo = ExoSystem::harmonic(2.0, 5.0).expect("finite parameters");
        let params = synthesize(&plant, &exo, &Self::options()).expect("synthesis succeeds");
        Self { plant, exo, params, r_w0: DVector::from_column_slice(&[0.1, 4.6]) }
    }

    pub fn options() -> SynthOptions {
        SynthOptions { k1: 0.0, ly_candidate: Some(DVector::from_column_slice(&[0.1, 1.0])) }
    }
}
