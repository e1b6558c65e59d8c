//! Per-point computations. Each runner turns the parameters of one grid point
//! (and the inner axis, if the scenario has one) into table rows.

use crate::spec::{EngineConfig, EngineKind, Scenario, ScenarioSpec, SteadySource};
use crate::table::Cell;
use cqed_core::cumulant::{
    analytic_maser_steady, coherent_steady, incoherent_steady, rhs_incoherent, IncoherentState, SteadyOptions,
};
use cqed_core::exact::{adaptive_cutoff, build_liouvillian, steady_state, BasisMode, HilbertConfig, SystemOps};
use cqed_core::ode::{drive, integrate, Control, IntegrateOptions, Step};
use cqed_core::spectra::{
    incoherent_driven_spectra, maser_linewidth, thermal_output_spectrum_from, ThermalOutputConfig,
};
use cqed_core::{SystemParams, ValidParams, C64};

/// Rows for one grid point, plus scalar metrics for the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub rows: Vec<Vec<Cell>>,
    pub metrics: Vec<(&'static str, f64)>,
    /// Non-fatal problem worth reporting in the message column.
    pub note: Option<String>,
}

impl PointData {
    fn single(row: Vec<Cell>) -> PointData {
        PointData {
            rows: vec![row],
            metrics: vec![],
            note: None,
        }
    }
}

const DRIVEN: &[&str] = &[
    "delta_m",
    "delta_a",
    "photons",
    "coherent_photons",
    "incoherent_photons",
    "field_re",
    "field_im",
    "sz",
    "adasz_c",
    "steady_path",
    "residual",
];
const THERMAL: &[&str] = &["total", "reservoir_background", "cavity", "interference"];
const COOLING: &[&str] = &[
    "nbar",
    "photons",
    "sz",
    "est_ada",
    "rel_dev",
    "steady_path",
    "t_settle",
    "validity_ratio",
    "valid",
];
const BURST: &[&str] = &["photons", "sz", "a_sp_re", "a_sp_im", "spsm_re"];
const DRIVEN_SPECTRA: &[&str] = &["mode", "fluorescence"];
const MASER: &[&str] = &[
    "sz",
    "photons",
    "a_sp_im",
    "spsm",
    "other_root",
    "steady_path",
    "fwhm",
    "hwhm",
    "line_center",
];

/// Result columns of a scenario, excluding index, grid coordinates, status
/// and message.
pub fn data_columns(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::TransmissionScan | Scenario::DrivenFieldScan => DRIVEN,
        Scenario::ThermalSpectrum | Scenario::PumpedEmissionSpectrum => THERMAL,
        Scenario::Cooling => COOLING,
        Scenario::Superradiance => BURST,
        Scenario::DrivenIncoherentSpectrum => DRIVEN_SPECTRA,
        Scenario::MaserMap => MASER,
    }
}

pub fn steady_options(e: &EngineConfig) -> SteadyOptions {
    let mut o = SteadyOptions::with_tol(e.tolerances());
    o.residual_tol = e.residual_tol;
    o
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn run_point(spec: &ScenarioSpec, params: &SystemParams, inner: Option<&[f64]>) -> Result<PointData, String> {
    let v = params.validate().map_err(err)?;
    let e = &spec.engine;
    let inner = || inner.ok_or_else(|| format!("{} needs an inner axis", spec.scenario));
    let data = match spec.scenario {
        Scenario::TransmissionScan | Scenario::DrivenFieldScan => driven_point(&v, e)?,
        Scenario::ThermalSpectrum | Scenario::PumpedEmissionSpectrum => thermal_point(&v, e, inner()?)?,
        Scenario::Cooling => cooling_point(&v, e)?,
        Scenario::Superradiance => burst_point(&v, e, inner()?)?,
        Scenario::DrivenIncoherentSpectrum => driven_spectra_point(&v, e, inner()?)?,
        Scenario::MaserMap => maser_point(&v, e)?,
    };
    let finite = data.rows.iter().flatten().all(|c| !matches!(c, Cell::Num(x) if !x.is_finite()))
        && data.metrics.iter().all(|(_, x)| x.is_finite());
    if !finite {
        return Err("non-finite result".into());
    }
    Ok(data)
}

/// Steady state of the driven system from whichever engine is selected.
pub struct DrivenSteady {
    pub photons: f64,
    pub field: C64,
    /// ⟨Σσᶻ⟩/N
    pub sz: f64,
    pub adasz_c: Option<f64>,
    pub path: &'static str,
    pub residual: Option<f64>,
}

pub fn driven_steady(v: &ValidParams, e: &EngineConfig) -> Result<DrivenSteady, String> {
    let basis = match e.kind {
        EngineKind::Cumulant => {
            let s = coherent_steady(v, e.closure, None, &steady_options(e)).map_err(err)?;
            return Ok(DrivenSteady {
                photons: s.state.photons(),
                field: s.state.a,
                sz: s.state.sz,
                adasz_c: Some(s.state.adasz_cumulant()),
                path: s.path.as_str(),
                residual: Some(s.residual),
            });
        }
        EngineKind::ExactTensor => BasisMode::TensorProduct,
        EngineKind::ExactDicke => BasisMode::DickeSymmetric,
    };
    let n = usize::try_from(v.params.n_atoms).map_err(err)?;
    let cutoff = e.fock_cutoff.unwrap_or_else(|| adaptive_cutoff(v));
    let cfg = HilbertConfig::with_cap(basis, cutoff, n, e.dim_cap).map_err(err)?;
    let l = build_liouvillian(v, &cfg).map_err(err)?;
    let rho = steady_state(&l).map_err(err)?;
    let ops = SystemOps::new(&cfg);
    Ok(DrivenSteady {
        photons: rho.expect(&ops.number()).re,
        field: rho.expect(&ops.a),
        sz: 2.0 * rho.expect(&ops.jz).re / n as f64,
        adasz_c: None,
        path: "direct",
        residual: None,
    })
}

fn driven_point(v: &ValidParams, e: &EngineConfig) -> Result<PointData, String> {
    let s = driven_steady(v, e)?;
    let d = v.frame_detunings();
    let coherent = s.field.norm_sqr();
    Ok(PointData::single(vec![
        d.delta_m.into(),
        d.delta_a.into(),
        s.photons.into(),
        coherent.into(),
        (s.photons - coherent).into(),
        s.field.re.into(),
        s.field.im.into(),
        s.sz.into(),
        Cell::opt(s.adasz_c),
        Cell::text(s.path),
        Cell::opt(s.residual),
    ]))
}

/// Incoherent steady state, with the name of the route that produced it.
pub fn incoherent_state(v: &ValidParams, e: &EngineConfig) -> Result<(IncoherentState, &'static str), String> {
    if e.steady == SteadySource::Analytic {
        if let Ok(m) = analytic_maser_steady(v) {
            return Ok((m.state(), "analytic"));
        }
    }
    let s = incoherent_steady(v, None, &steady_options(e)).map_err(err)?;
    Ok((s.state, s.path.as_str()))
}

fn thermal_point(v: &ValidParams, e: &EngineConfig, omega: &[f64]) -> Result<PointData, String> {
    let (s, _) = incoherent_state(v, e)?;
    let cfg = ThermalOutputConfig {
        b0: e.b0,
        normalization: e.normalization,
    };
    let c = thermal_output_spectrum_from(v, &s.to_coherent(), &cfg, omega).map_err(err)?;
    let ch = |name: &str| c.channel(name).map(|x| x.to_vec()).ok_or_else(|| format!("missing channel {name}"));
    let (bg, cav, inter) = (ch("reservoir_background")?, ch("cavity")?, ch("interference")?);
    let rows = (0..omega.len())
        .map(|k| vec![c.total[k].into(), bg[k].into(), cav[k].into(), inter[k].into()])
        .collect();
    Ok(PointData {
        rows,
        metrics: vec![("photons", s.n_ph), ("sz", s.sz), ("g_sqrt_n", v.effective_coupling())],
        note: None,
    })
}

fn slowest_rate(v: &ValidParams) -> f64 {
    [v.params.kappa, v.gamma_total()]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

fn incoherent_rhs(v: &ValidParams) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    move |_t, y, dy| match rhs_incoherent(&IncoherentState::from_slice(y), v) {
        Ok(d) => dy.copy_from_slice(&d.to_vec()),
        Err(_) => dy.fill(f64::NAN),
    }
}

/// Last time the photon number, started from a ground-state ensemble in a
/// thermal mode, is more than 1% of the total change away from `n_ss`.
pub fn settle_time(v: &ValidParams, n_ss: f64, tol: &IntegrateOptions) -> Result<f64, String> {
    let band = 0.01 * (v.nbar - n_ss).abs();
    if band == 0.0 {
        return Ok(0.0);
    }
    let cap = 50.0 / slowest_rate(v);
    if !cap.is_finite() {
        return Err("no relaxation: kappa and gamma_a + w are both zero".into());
    }
    let mut y = IncoherentState::ground(v.nbar).to_vec();
    let mut last_out = 0.0;
    let fastest = v.params.kappa + v.gamma_total() + v.effective_coupling();
    // windows growing by 10x keep each span within the integrator's dynamic range
    let (mut t0, mut t1) = (0.0, (10.0 / fastest).min(cap));
    let mut rhs = incoherent_rhs(v);
    while t0 < cap {
        let end = drive(&mut rhs, &y, t0, t1, tol, |st: &Step| {
            if (st.y1[3] - n_ss).abs() > band {
                last_out = st.t1;
            }
            Control::Continue
        })
        .map_err(err)?;
        y = end.y;
        (t0, t1) = (t1, (10.0 * t1).min(cap));
    }
    if last_out >= cap {
        return Err("photon number did not settle within the time cap".into());
    }
    Ok(last_out)
}

fn cooling_point(v: &ValidParams, e: &EngineConfig) -> Result<PointData, String> {
    let (s, path) = incoherent_state(v, e)?;
    let n = v.n();
    let est = v.nbar - n * v.params.gamma_a / (2.0 * v.params.kappa) * (1.0 + s.sz) / 2.0;
    let rel_dev = if s.n_ph != 0.0 { (s.n_ph - est).abs() / s.n_ph.abs() } else { (s.n_ph - est).abs() };
    let t = settle_time(v, s.n_ph, &IntegrateOptions::with_tol(e.tolerances()))?;
    let ratio = t * v.params.kappa * v.nbar / n;
    Ok(PointData::single(vec![
        v.nbar.into(),
        s.n_ph.into(),
        s.sz.into(),
        est.into(),
        rel_dev.into(),
        Cell::text(path),
        t.into(),
        ratio.into(),
        Cell::Bool(ratio < 0.1),
    ]))
}

/// Peak time, peak height and full width at half peak of a sampled burst.
pub fn burst_metrics(t: &[f64], n: &[f64]) -> Option<(f64, f64, f64)> {
    let (k, &peak) = n.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = n[0] + 0.5 * (peak - n[0]);
    let mut l = k;
    while l > 0 && n[l - 1] >= half {
        l -= 1;
    }
    let mut r = k;
    while r + 1 < n.len() && n[r + 1] >= half {
        r += 1;
    }
    if l == 0 || r == n.len() - 1 {
        return Some((t[k], peak, f64::NAN));
    }
    let cross = |i: usize, j: usize| t[i] + (half - n[i]) * (t[j] - t[i]) / (n[j] - n[i]);
    Some((t[k], peak, cross(r, r + 1) - cross(l - 1, l)))
}

fn burst_point(v: &ValidParams, e: &EngineConfig, t: &[f64]) -> Result<PointData, String> {
    if v.params.eta.norm() > 0.0 {
        return Err("superradiance needs an undriven cavity (eta = 0)".into());
    }
    let y0 = IncoherentState::inverted(v.nbar).to_vec();
    let tr = integrate(incoherent_rhs(v), &y0, t, &IntegrateOptions::with_tol(e.tolerances())).map_err(err)?;
    let states: Vec<IncoherentState> = tr.states.iter().map(|y| IncoherentState::from_slice(y)).collect();
    for (s, ti) in states.iter().zip(t) {
        s.check_bounds(1e-3).map_err(|b| format!("at t = {ti:e}: {b}"))?;
    }
    let rows = states
        .iter()
        .map(|s| vec![s.n_ph.into(), s.sz.into(), s.a_sp.re.into(), s.a_sp.im.into(), s.spsm.re.into()])
        .collect();
    let n: Vec<f64> = states.iter().map(|s| s.n_ph).collect();
    let (t_peak, peak, width) = burst_metrics(t, &n).ok_or("empty time grid")?;
    let mut note = None;
    if n.last() == Some(&peak) {
        note = Some("photon maximum at the edge of the time window".to_string());
    }
    let mut metrics = vec![("nbar", v.nbar), ("peak_time", t_peak), ("peak_photons", peak)];
    if width.is_finite() {
        metrics.push(("burst_width", width));
    } else {
        note.get_or_insert_with(|| "burst not resolved inside the time window".into());
    }
    metrics.push(("peak_over_nbar", if v.nbar > 0.0 { peak / v.nbar } else { f64::INFINITY }));
    // an empty mode gives an infinite ratio, which the summary cannot hold
    metrics.retain(|(_, x)| x.is_finite());
    Ok(PointData { rows, metrics, note })
}

fn driven_spectra_point(v: &ValidParams, e: &EngineConfig, omega: &[f64]) -> Result<PointData, String> {
    if e.kind != EngineKind::Cumulant {
        return Err("driven spectra need the cumulant engine".into());
    }
    let s = coherent_steady(v, e.closure, None, &steady_options(e)).map_err(err)?;
    let d = incoherent_driven_spectra(v, &s.state, omega).map_err(err)?;
    let rows = (0..omega.len())
        .map(|k| vec![d.mode.total[k].into(), d.fluorescence.total[k].into()])
        .collect();
    Ok(PointData {
        rows,
        metrics: vec![
            ("photons", s.state.photons()),
            ("coherent_photons", s.state.a.norm_sqr()),
            ("sz", s.state.sz),
        ],
        note: None,
    })
}

fn maser_point(v: &ValidParams, e: &EngineConfig) -> Result<PointData, String> {
    let (s, path, other) = match e.steady {
        SteadySource::Analytic => match analytic_maser_steady(v) {
            Ok(m) => (m.state(), "analytic", m.other_root),
            Err(_) => {
                let (s, path) = incoherent_state(v, &EngineConfig {
                    steady: SteadySource::Integrate,
                    ..*e
                })?;
                (s, path, None)
            }
        },
        SteadySource::Integrate => {
            let (s, path) = incoherent_state(v, e)?;
            (s, path, None)
        }
    };
    // a cell without a line width is incomplete, so it counts as failed
    let (line, _) = maser_linewidth(v).map_err(|x| format!("linewidth: {x}"))?;
    Ok(PointData {
        rows: vec![vec![
            s.sz.into(),
            s.n_ph.into(),
            s.a_sp.im.into(),
            s.spsm.re.into(),
            Cell::opt(other),
            Cell::text(path),
            line.fwhm.into(),
            line.hwhm.into(),
            line.center.into(),
        ]],
        metrics: vec![],
        note: None,
    })
}

/// Steady state at the spec's base parameters, ignoring the scan. Driven
/// systems and the exact engines go through [`driven_steady`], the rest
/// through the incoherent equations.
pub fn steady_report(spec: &ScenarioSpec) -> Result<serde_json::Value, String> {
    let v = spec.system.validate().map_err(err)?;
    let e = &spec.engine;
    let mut out = serde_json::json!({
        "scenario": spec.scenario.name(),
        "engine": e.kind.name(),
        "nbar": v.nbar,
        "g_sqrt_n": v.effective_coupling(),
    });
    let m = out.as_object_mut().expect("object");
    if v.params.eta.norm() > 0.0 || e.kind != EngineKind::Cumulant {
        let s = driven_steady(&v, e)?;
        m.insert("photons".into(), s.photons.into());
        m.insert("coherent_photons".into(), s.field.norm_sqr().into());
        m.insert("field".into(), serde_json::json!([s.field.re, s.field.im]));
        m.insert("sz".into(), s.sz.into());
        m.insert("adasz_c".into(), s.adasz_c.into());
        m.insert("steady_path".into(), s.path.into());
        m.insert("residual".into(), s.residual.into());
    } else {
        let (s, path) = incoherent_state(&v, e)?;
        m.insert("photons".into(), s.n_ph.into());
        m.insert("sz".into(), s.sz.into());
        m.insert("a_sp".into(), serde_json::json!([s.a_sp.re, s.a_sp.im]));
        m.insert("spsm".into(), s.spsm.re.into());
        m.insert("steady_path".into(), path.into());
    }
    Ok(out)
}
