//! Default settings of every scenario, so `run` works without a config
//! file and a config only needs to state what differs.

use crate::spec::{Axis, EngineConfig, EngineKind, OutputConfig, Scenario, ScenarioSpec};
use cqed_core::{SystemParams, C64};

pub fn preset(scenario: Scenario) -> ScenarioSpec {
    let mut engine = EngineConfig::default();
    let ens = SystemParams::microwave_ensemble();
    let (system, scan) = match scenario {
        Scenario::TransmissionScan => {
            engine.kind = EngineKind::ExactTensor;
            let mut p = SystemParams::weak_drive_pair();
            p.temperature = 0.0;
            (p, vec![Axis::linear("delta_m", -8.0, 8.0, 321)])
        }
        Scenario::DrivenFieldScan => {
            let mut p = ens;
            p.temperature = 0.01;
            p.eta = C64::new(1.0e4, 0.0);
            p.omega_l = Some(p.omega_m);
            (p, vec![Axis::linear("delta_m", -3.0e4, 3.0e4, 241)])
        }
        Scenario::ThermalSpectrum => {
            let mut p = ens;
            p.temperature = 0.1;
            (
                p,
                vec![
                    Axis::list("n_atoms", &[3.4e5, 1.0e6, 3.2e6]),
                    Axis::linear("omega", -1.0e5, 1.0e5, 801),
                ],
            )
        }
        Scenario::PumpedEmissionSpectrum => {
            let mut p = ens;
            p.temperature = 0.001;
            p.w = 0.05;
            (
                p,
                vec![
                    Axis::list("n_atoms", &[3.4e5, 1.0e6, 3.2e6]),
                    Axis::linear("omega", -1.0e5, 1.0e5, 801),
                ],
            )
        }
        Scenario::Cooling => {
            let mut p = ens;
            p.temperature = 4.0;
            (p, vec![Axis::log("gamma_a", 1.0e3, 2.0e5, 25)])
        }
        Scenario::Superradiance => (
            ens,
            vec![
                Axis::list("temperature", &[0.5, 1.0, 2.0, 4.0]),
                Axis::linear("t", 0.0, 2.0e-3, 2001),
            ],
        ),
        Scenario::DrivenIncoherentSpectrum => {
            let mut p = ens;
            p.temperature = 0.025;
            p.eta = C64::new(1.0e6, 0.0);
            p.omega_l = Some(p.omega_m);
            (
                p,
                vec![
                    Axis::list("eta", &[9.0e5, 1.0e6]),
                    Axis::linear("omega", -3.0e4, 3.0e4, 1201),
                ],
            )
        }
        Scenario::MaserMap => {
            let mut p = ens;
            p.kappa = 7.0e5;
            p.temperature = 0.001;
            (
                p,
                vec![Axis::log("n_atoms", 1.0e3, 1.0e6, 25), Axis::log("w", 1.0e-3, 1.0e4, 25)],
            )
        }
    };
    ScenarioSpec {
        scenario,
        system,
        scan,
        engine,
        output: OutputConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_consistent() {
        for s in Scenario::ALL {
            let spec = preset(s);
            spec.check().unwrap_or_else(|e| panic!("{s}: {e}"));
            for pt in spec.grid_points().unwrap() {
                let p = spec.params_at(&pt).unwrap();
                p.validate().unwrap_or_else(|e| panic!("{s}: {e}"));
                assert_eq!(p.eta.norm() > 0.0, s.needs_drive(), "{s}");
            }
        }
    }
}
