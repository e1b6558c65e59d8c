//! Physical parameters shared by every engine.
//!
//! All rates and frequencies are angular (rad/s), temperatures are in kelvin.
//! Only ratios matter for the dimensionless observables, so parameter sets
//! with κ = 1 are as valid as those with κ = 7e3.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};
use std::fmt;

/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant (J/K), exact SI value.
pub const K_B: f64 = 1.380649e-23;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ParamError {
    ParamError::Invalid {
        field,
        message: message.into(),
    }
}

/// Bose-Einstein occupation of a mode at angular frequency `omega`.
///
/// Exactly zero at zero temperature.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64, ParamError> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(invalid("omega", format!("must be finite and > 0, got {omega}")));
    }
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(invalid(
            "temperature",
            format!("must be finite and >= 0, got {temperature}"),
        ));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    // 1/(e^x - 1) without cancellation for small x
    Ok(1.0 / x.exp_m1())
}

/// Collective coupling g·√N.
pub fn effective_coupling(g: f64, n_atoms: u64) -> Result<f64, ParamError> {
    if !g.is_finite() || g < 0.0 {
        return Err(invalid("g", format!("must be finite and >= 0, got {g}")));
    }
    if n_atoms == 0 {
        return Err(invalid("n_atoms", "must be >= 1"));
    }
    Ok(g * (n_atoms as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(deserialize_with = "de_count")]
    pub n_atoms: u64,
    pub g: f64,
    pub kappa: f64,
    pub gamma_a: f64,
    pub omega_a: f64,
    pub omega_m: f64,
    #[serde(default)]
    pub omega_l: Option<f64>,
    #[serde(default, deserialize_with = "de_complex")]
    pub eta: Complex64,
    #[serde(default)]
    pub w: f64,
    #[serde(default)]
    pub temperature: f64,
}

/// Drive-frame detunings Δ_m = ω_m − ω_l and Δ_a = ω_a − ω_l.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detunings {
    pub delta_m: f64,
    pub delta_a: f64,
}

/// Parameters that passed validation, with derived quantities attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidParams {
    pub params: SystemParams,
    pub detunings: Option<Detunings>,
    pub nbar: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ValidationErrors(pub Vec<ParamError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl ValidationErrors {
    pub fn fields(&self) -> Vec<&'static str> {
        self.0
            .iter()
            .map(|e| match e {
                ParamError::Invalid { field, .. } => *field,
            })
            .collect()
    }
}

impl SystemParams {
    /// The small driven system used for the exact-solver comparisons:
    /// κ = 1, N = 2, g = 3, γ = 0.05, η = 0.1, resonant, T = 0.
    pub fn weak_drive_pair() -> Self {
        let omega = 1.0e3;
        SystemParams {
            n_atoms: 2,
            g: 3.0,
            kappa: 1.0,
            gamma_a: 0.05,
            omega_a: omega,
            omega_m: omega,
            omega_l: Some(omega),
            eta: Complex64::new(0.1, 0.0),
            w: 0.0,
            temperature: 0.0,
        }
    }

    /// Microwave ensemble defaults: ω = 2π·6.83 GHz, N = 1e5, g = 40,
    /// κ = 7e3, γ = 0.3, no drive, T = 0.
    pub fn microwave_ensemble() -> Self {
        let omega = 2.0 * std::f64::consts::PI * 6.83e9;
        SystemParams {
            n_atoms: 100_000,
            g: 40.0,
            kappa: 7.0e3,
            gamma_a: 0.3,
            omega_a: omega,
            omega_m: omega,
            omega_l: None,
            eta: Complex64::new(0.0, 0.0),
            w: 0.0,
            temperature: 0.0,
        }
    }

    pub fn detunings(&self) -> Option<Detunings> {
        self.omega_l.map(|wl| Detunings {
            delta_m: self.omega_m - wl,
            delta_a: self.omega_a - wl,
        })
    }

    /// Detunings in the drive frame when a drive frequency is set, otherwise
    /// in the frame rotating at the cavity frequency.
    pub fn frame_detunings(&self) -> Detunings {
        self.detunings().unwrap_or(Detunings {
            delta_m: 0.0,
            delta_a: self.omega_a - self.omega_m,
        })
    }

    pub fn validate(&self) -> Result<ValidParams, ValidationErrors> {
        let mut errs = Vec::new();
        if self.n_atoms == 0 {
            errs.push(invalid("n_atoms", "must be >= 1"));
        }
        for (field, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma_a", self.gamma_a),
            ("w", self.w),
            ("temperature", self.temperature),
        ] {
            if !v.is_finite() || v < 0.0 {
                errs.push(invalid(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (field, v) in [("omega_a", self.omega_a), ("omega_m", self.omega_m)] {
            if !v.is_finite() || v <= 0.0 {
                errs.push(invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(wl) = self.omega_l {
            if !wl.is_finite() || wl <= 0.0 {
                errs.push(invalid("omega_l", format!("must be finite and > 0, got {wl}")));
            }
        }
        if !self.eta.re.is_finite() || !self.eta.im.is_finite() {
            errs.push(invalid("eta", "must be finite"));
        }
        let driven = self.eta.norm() > 0.0;
        if driven && self.w > 0.0 {
            errs.push(invalid("eta", "mutually exclusive drives: eta and w are both nonzero"));
        }
        if driven && self.omega_l.is_none() {
            errs.push(invalid("omega_l", "required when eta is nonzero"));
        }
        if !errs.is_empty() {
            return Err(ValidationErrors(errs));
        }
        let nbar = thermal_occupation(self.omega_m, self.temperature)
            .map_err(|e| ValidationErrors(vec![e]))?;
        Ok(ValidParams {
            params: *self,
            detunings: self.detunings(),
            nbar,
        })
    }
}

impl ValidParams {
    pub fn n(&self) -> f64 {
        self.params.n_atoms as f64
    }

    /// Total atomic relaxation rate γ + w.
    pub fn gamma_total(&self) -> f64 {
        self.params.gamma_a + self.params.w
    }

    /// Inversion the atoms relax to without the cavity, (w − γ)/(w + γ).
    pub fn sz_target(&self) -> f64 {
        let total = self.gamma_total();
        if total == 0.0 {
            -1.0
        } else {
            (self.params.w - self.params.gamma_a) / total
        }
    }

    pub fn frame_detunings(&self) -> Detunings {
        self.params.frame_detunings()
    }

    pub fn effective_coupling(&self) -> f64 {
        self.params.g * self.n().sqrt()
    }
}

fn de_count<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        U(u64),
        I(i64),
        F(f64),
    }
    match Num::deserialize(d)? {
        Num::U(u) => Ok(u),
        Num::I(i) if i >= 0 => Ok(i as u64),
        Num::I(i) => Err(serde::de::Error::custom(format!("count must be >= 0, got {i}"))),
        Num::F(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => Ok(f as u64),
        Num::F(f) => Err(serde::de::Error::custom(format!(
            "count must be a non-negative integer, got {f}"
        ))),
    }
}

/// Accepts a bare real number or a `[re, im]` pair.
fn de_complex<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum C {
        Re(f64),
        Pair([f64; 2]),
    }
    Ok(match C::deserialize(d)? {
        C::Re(re) => Complex64::new(re, 0.0),
        C::Pair([re, im]) => Complex64::new(re, im),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const OMEGA: f64 = 2.0 * std::f64::consts::PI * 6.83e9;

    #[test]
    fn occupation_at_microwave_temperatures() {
        assert_relative_eq!(thermal_occupation(OMEGA, 0.7).unwrap(), 1.67, max_relative = 0.02);
        assert_relative_eq!(thermal_occupation(OMEGA, 4.0).unwrap(), 11.7, max_relative = 0.02);
        assert_relative_eq!(thermal_occupation(OMEGA, 10.0).unwrap(), 30.0, max_relative = 0.02);
        // 0.1 K gives 0.0392, the closed form, not a rounded caption value
        assert_relative_eq!(thermal_occupation(OMEGA, 0.1).unwrap(), 0.039186, max_relative = 1e-4);
    }

    #[test]
    fn zero_temperature_is_exactly_empty() {
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(thermal_occupation(OMEGA, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn occupation_rejects_bad_input() {
        assert!(thermal_occupation(-1.0, 1.0).is_err());
        assert!(thermal_occupation(1.0, -1.0).is_err());
        assert!(thermal_occupation(f64::NAN, 1.0).is_err());
        assert!(thermal_occupation(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn classical_limit() {
        let t = 100.0;
        let omega = 0.005 * K_B * t / HBAR;
        let classical = K_B * t / (HBAR * omega);
        assert_relative_eq!(thermal_occupation(omega, t).unwrap(), classical, max_relative = 0.01);
    }

    #[test]
    fn effective_coupling_examples() {
        assert_relative_eq!(effective_coupling(3.0, 2).unwrap(), 4.2426, epsilon = 1e-4);
        assert_relative_eq!(effective_coupling(40.0, 100_000).unwrap(), 1.26491e4, max_relative = 1e-5);
        assert_eq!(effective_coupling(2.5, 1).unwrap(), 2.5);
        assert!(effective_coupling(1.0, 0).is_err());
    }

    #[test]
    fn weak_drive_pair_is_valid() {
        let v = SystemParams::weak_drive_pair().validate().unwrap();
        let d = v.detunings.unwrap();
        assert_eq!(d.delta_m, 0.0);
        assert_eq!(d.delta_a, 0.0);
        assert_eq!(v.nbar, 0.0);
    }

    #[test]
    fn validation_reports_each_field() {
        let mut p = SystemParams::weak_drive_pair();
        p.n_atoms = 0;
        let err = p.validate().unwrap_err();
        assert_eq!(err.fields(), vec!["n_atoms"]);

        let mut p = SystemParams::weak_drive_pair();
        p.w = 0.05;
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("mutually exclusive drives"));

        let mut p = SystemParams::weak_drive_pair();
        p.kappa = -1.0;
        p.omega_m = 0.0;
        p.omega_l = None;
        let fields = p.validate().unwrap_err().fields();
        assert!(fields.contains(&"kappa"));
        assert!(fields.contains(&"omega_m"));
        assert!(fields.contains(&"omega_l"));
    }

    #[test]
    fn pump_target_inversion() {
        let mut p = SystemParams::microwave_ensemble();
        p.w = 0.3;
        assert_eq!(p.validate().unwrap().sz_target(), 0.0);
        p.w = 0.9;
        assert_relative_eq!(p.validate().unwrap().sz_target(), 0.5);
        p.w = 0.0;
        assert_eq!(p.validate().unwrap().sz_target(), -1.0);
    }

    #[test]
    fn deserializes_scientific_counts_and_complex_drive() {
        let json = r#"{"n_atoms": 1e5, "g": 40, "kappa": 7e3, "gamma_a": 0.3,
            "omega_a": 1e9, "omega_m": 1e9, "omega_l": 1e9, "eta": [1.0, -2.0]}"#;
        let p: SystemParams = serde_json::from_str(json).unwrap();
        assert_eq!(p.n_atoms, 100_000);
        assert_eq!(p.eta, Complex64::new(1.0, -2.0));
        let json = r#"{"n_atoms": 2.5, "g": 1, "kappa": 1, "gamma_a": 0,
            "omega_a": 1, "omega_m": 1}"#;
        assert!(serde_json::from_str::<SystemParams>(json).is_err());
    }

    proptest! {
        #[test]
        fn occupation_increases_with_temperature(
            omega in 1.0e6f64..1.0e12,
            t1 in 1.0e-3f64..50.0,
            dt in 1.0e-3f64..50.0,
        ) {
            let n1 = thermal_occupation(omega, t1).unwrap();
            let n2 = thermal_occupation(omega, t1 + dt).unwrap();
            prop_assert!(n2 > n1 || (n1 == 0.0 && n2 == 0.0));
        }

        #[test]
        fn coupling_squares_add(g in 0.0f64..1.0e3, n in 1u64..10_000_000) {
            let one = effective_coupling(g, 1).unwrap();
            let many = effective_coupling(g, n).unwrap();
            prop_assert!((many * many - n as f64 * one * one).abs() <= 1e-12 * (n as f64 * one * one).max(1e-300));
        }
    }
}
