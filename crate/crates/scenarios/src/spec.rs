//! Scenario specifications: what to run, over which grid, with which engine.

use cqed_core::cumulant::Closure;
use cqed_core::ode::Tolerances;
use cqed_core::spectra::Normalization;
use cqed_core::{SystemParams, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    TransmissionScan,
    DrivenFieldScan,
    ThermalSpectrum,
    PumpedEmissionSpectrum,
    Cooling,
    Superradiance,
    DrivenIncoherentSpectrum,
    MaserMap,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::TransmissionScan,
        Scenario::DrivenFieldScan,
        Scenario::ThermalSpectrum,
        Scenario::PumpedEmissionSpectrum,
        Scenario::Cooling,
        Scenario::Superradiance,
        Scenario::DrivenIncoherentSpectrum,
        Scenario::MaserMap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TransmissionScan => "transmission_scan",
            Scenario::DrivenFieldScan => "driven_field_scan",
            Scenario::ThermalSpectrum => "thermal_spectrum",
            Scenario::PumpedEmissionSpectrum => "pumped_emission_spectrum",
            Scenario::Cooling => "cooling",
            Scenario::Superradiance => "superradiance",
            Scenario::DrivenIncoherentSpectrum => "driven_incoherent_spectrum",
            Scenario::MaserMap => "maser_map",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Scenario::TransmissionScan => "steady photon number of a driven cavity versus drive detuning",
            Scenario::DrivenFieldScan => "steady coherent field and incoherent photons versus drive detuning",
            Scenario::ThermalSpectrum => "output spectrum of the thermal cavity with reservoir interference",
            Scenario::PumpedEmissionSpectrum => "emission spectrum of the incoherently pumped ensemble",
            Scenario::Cooling => "steady photon number versus atomic loss rate, with the balance estimate",
            Scenario::Superradiance => "burst of an initially inverted ensemble into the thermal mode",
            Scenario::DrivenIncoherentSpectrum => "incoherent mode and fluorescence spectra of the driven system",
            Scenario::MaserMap => "maser inversion, photon number and linewidth over (N, w)",
        }
    }

    pub fn engines(&self) -> &'static [EngineKind] {
        match self {
            Scenario::TransmissionScan | Scenario::DrivenFieldScan => {
                &[EngineKind::ExactTensor, EngineKind::ExactDicke, EngineKind::Cumulant]
            }
            _ => &[EngineKind::Cumulant],
        }
    }

    /// Axis consumed inside one grid point rather than spread over workers.
    pub fn inner_axis(&self) -> Option<&'static str> {
        match self {
            Scenario::ThermalSpectrum | Scenario::PumpedEmissionSpectrum | Scenario::DrivenIncoherentSpectrum => {
                Some("omega")
            }
            Scenario::Superradiance => Some("t"),
            _ => None,
        }
    }

    pub fn needs_drive(&self) -> bool {
        matches!(
            self,
            Scenario::TransmissionScan | Scenario::DrivenFieldScan | Scenario::DrivenIncoherentSpectrum
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    ExactTensor,
    ExactDicke,
    Cumulant,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::ExactTensor => "exact_tensor",
            EngineKind::ExactDicke => "exact_dicke",
            EngineKind::Cumulant => "cumulant",
        }
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [EngineKind::ExactTensor, EngineKind::ExactDicke, EngineKind::Cumulant]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engine '{s}' (expected exact_tensor, exact_dicke or cumulant)"))
    }
}

/// How the incoherent steady state is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadySource {
    /// Closed-form quadratic, falling back to integration when it has no
    /// physical root.
    #[default]
    Analytic,
    Integrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub var: String,
    /// Explicit values; when present `min`, `max`, `points` are ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub min: f64,
    #[serde(default)]
    pub max: f64,
    #[serde(default)]
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

/// Variables an outer axis may set.
pub const PARAM_VARS: [&str; 12] = [
    "n_atoms",
    "g",
    "kappa",
    "gamma_a",
    "omega_a",
    "omega_m",
    "omega_l",
    "eta",
    "w",
    "temperature",
    "delta_m",
    "delta_a",
];

impl Axis {
    pub fn linear(var: &str, min: f64, max: f64, points: usize) -> Axis {
        Axis {
            var: var.into(),
            values: None,
            min,
            max,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(var: &str, min: f64, max: f64, points: usize) -> Axis {
        Axis {
            spacing: Spacing::Log,
            ..Axis::linear(var, min, max, points)
        }
    }

    pub fn list(var: &str, values: &[f64]) -> Axis {
        Axis {
            values: Some(values.to_vec()),
            ..Axis::linear(var, 0.0, 0.0, 0)
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>, String> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(format!("axis {}: empty value list", self.var));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("axis {}: non-finite value", self.var));
            }
            return Ok(v.clone());
        }
        let (a, b, n) = (self.min, self.max, self.points);
        if n == 0 {
            return Err(format!("axis {}: points must be >= 1", self.var));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(format!("axis {}: bounds must be finite", self.var));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        let t = |k: usize| k as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..n).map(|k| if k == n - 1 { b } else { a + (b - a) * t(k) }).collect()),
            Spacing::Log => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(format!("axis {}: log spacing needs positive bounds", self.var));
                }
                let (la, lb) = (a.ln(), b.ln());
                Ok((0..n)
                    .map(|k| match k {
                        0 => a,
                        _ if k == n - 1 => b,
                        _ => (la + (lb - la) * t(k)).exp(),
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub closure: Closure,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steady-state test on ‖f‖ / (rate · ‖y‖).
    pub residual_tol: f64,
    pub steady: SteadySource,
    /// Photon cutoff n_max for the exact engines; adaptive when absent.
    pub fock_cutoff: Option<usize>,
    /// Cap on the superoperator dimension of the exact engines.
    pub dim_cap: usize,
    /// Reservoir level of the thermal spectra; n̄/2π when absent.
    pub b0: Option<f64>,
    pub normalization: Normalization,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            kind: EngineKind::Cumulant,
            closure: Closure::Full,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            residual_tol: 1e-9,
            steady: SteadySource::Analytic,
            fock_cutoff: None,
            dim_cap: cqed_core::exact::DEFAULT_DIM_CAP,
            b0: None,
            normalization: Normalization::Auto,
        }
    }
}

impl EngineConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// File basename; the scenario name when empty.
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: ".".into(),
            prefix: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub system: SystemParams,
    pub scan: Vec<Axis>,
    pub engine: EngineConfig,
    pub output: OutputConfig,
}

/// One grid point: the values of the outer axes, in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub coords: Vec<(String, f64)>,
}

impl ScenarioSpec {
    pub fn prefix(&self) -> String {
        if self.output.prefix.is_empty() {
            self.scenario.name().to_string()
        } else {
            self.output.prefix.clone()
        }
    }

    pub fn outer_axes(&self) -> Vec<&Axis> {
        let inner = self.scenario.inner_axis();
        self.scan.iter().filter(|a| Some(a.var.as_str()) != inner).collect()
    }

    pub fn inner_grid(&self) -> Result<Option<Vec<f64>>, String> {
        let Some(name) = self.scenario.inner_axis() else {
            return Ok(None);
        };
        let axis = self
            .scan
            .iter()
            .find(|a| a.var == name)
            .ok_or_else(|| format!("{} needs a scan axis '{name}'", self.scenario))?;
        let g = axis.grid()?;
        if name == "t" && (g[0] != 0.0 || g.windows(2).any(|w| !(w[1] > w[0]))) {
            return Err("axis t must start at 0 and increase strictly".into());
        }
        Ok(Some(g))
    }

    /// Structural checks that do not depend on grid values.
    pub fn check(&self) -> Result<(), String> {
        if !self.scenario.engines().contains(&self.engine.kind) {
            return Err(format!(
                "scenario {} does not support engine {}",
                self.scenario,
                self.engine.kind.name()
            ));
        }
        let inner = self.scenario.inner_axis();
        let mut seen = Vec::new();
        for a in &self.scan {
            if seen.contains(&a.var.as_str()) {
                return Err(format!("axis {} given twice", a.var));
            }
            seen.push(a.var.as_str());
            if Some(a.var.as_str()) != inner && !PARAM_VARS.contains(&a.var.as_str()) {
                return Err(format!(
                    "unknown scan variable '{}' for {} (allowed: {}{})",
                    a.var,
                    self.scenario,
                    PARAM_VARS.join(", "),
                    inner.map(|i| format!(", {i}")).unwrap_or_default()
                ));
            }
            a.grid()?;
        }
        self.inner_grid()?;
        let e = &self.engine;
        for (name, v) in [("rel_tol", e.rel_tol), ("abs_tol", e.abs_tol), ("residual_tol", e.residual_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("engine.{name} must be positive, got {v}"));
            }
        }
        if self.output.prefix.contains(['/', '\\']) || self.output.prefix == ".." {
            return Err(format!("output.prefix '{}' must be a plain file name", self.output.prefix));
        }
        Ok(())
    }

    /// Cartesian product of the outer axes, first axis slowest.
    pub fn grid_points(&self) -> Result<Vec<GridPoint>, String> {
        let axes = self.outer_axes();
        let grids = axes.iter().map(|a| a.grid()).collect::<Result<Vec<_>, _>>()?;
        let total: usize = grids.iter().map(|g| g.len()).product();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut coords = vec![(String::new(), 0.0); axes.len()];
            for k in (0..axes.len()).rev() {
                let len = grids[k].len();
                coords[k] = (axes[k].var.clone(), grids[k][rem % len]);
                rem /= len;
            }
            out.push(GridPoint { index, coords });
        }
        Ok(out)
    }

    /// System parameters at a grid point. Axes are applied in order, so a
    /// detuning axis sees the frequencies set before it.
    pub fn params_at(&self, point: &GridPoint) -> Result<SystemParams, String> {
        let mut p = self.system;
        for (var, v) in &point.coords {
            set_param(&mut p, var, *v)?;
        }
        Ok(p)
    }
}

pub fn set_param(p: &mut SystemParams, var: &str, v: f64) -> Result<(), String> {
    match var {
        "n_atoms" => {
            if !(1.0..1.8e19).contains(&v) {
                return Err(format!("n_atoms must be >= 1, got {v}"));
            }
            p.n_atoms = v.round() as u64;
        }
        "g" => p.g = v,
        "kappa" => p.kappa = v,
        "gamma_a" => p.gamma_a = v,
        "omega_a" => p.omega_a = v,
        "omega_m" => p.omega_m = v,
        "omega_l" => p.omega_l = Some(v),
        "eta" => p.eta = C64::new(v, 0.0),
        "w" => p.w = v,
        "temperature" => p.temperature = v,
        // the drive frequency moves; cavity and atoms stay put
        "delta_m" => p.omega_l = Some(p.omega_m - v),
        "delta_a" => p.omega_l = Some(p.omega_a - v),
        _ => return Err(format!("unknown parameter '{var}'")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scan: Vec<Axis>) -> ScenarioSpec {
        ScenarioSpec {
            scenario: Scenario::MaserMap,
            system: SystemParams::microwave_ensemble(),
            scan,
            engine: EngineConfig::default(),
            output: OutputConfig::default(),
        }
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let g = Axis::log("w", 1e-3, 1e4, 25).grid().unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[24], 1e4);
        let ratio = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] / ratio - 1.0).abs() < 1e-9));
    }

    #[test]
    fn grid_is_row_major() {
        let s = spec(vec![Axis::list("n_atoms", &[10.0, 20.0]), Axis::list("w", &[1.0, 2.0, 3.0])]);
        let pts = s.grid_points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].coords, vec![("n_atoms".into(), 10.0), ("w".into(), 2.0)]);
        assert_eq!(pts[3].coords[0].1, 20.0);
        assert_eq!(s.params_at(&pts[5]).unwrap().w, 3.0);
    }

    #[test]
    fn no_axes_is_one_point() {
        assert_eq!(spec(vec![]).grid_points().unwrap().len(), 1);
    }

    #[test]
    fn detuning_moves_the_drive() {
        let mut p = SystemParams::weak_drive_pair();
        set_param(&mut p, "delta_m", 2.0).unwrap();
        let d = p.validate().unwrap().detunings.unwrap();
        assert_eq!(d.delta_m, 2.0);
        assert_eq!(d.delta_a, 2.0);
    }

    #[test]
    fn checks_reject_bad_specs() {
        let s = spec(vec![Axis::linear("bogus", 0.0, 1.0, 3)]);
        assert!(s.check().unwrap_err().contains("unknown scan variable"));
        let mut s = spec(vec![]);
        s.engine.kind = EngineKind::ExactDicke;
        assert!(s.check().unwrap_err().contains("does not support"));
        let s = spec(vec![Axis::log("w", 0.0, 1.0, 3)]);
        assert!(s.check().is_err());
        let mut s = spec(vec![]);
        s.scenario = Scenario::Superradiance;
        assert!(s.check().unwrap_err().contains("axis 't'"));
    }

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Scenario>().is_err());
    }
}
