//! Steady states of the moment equations.
//!
//! The default route integrates forward until the scaled residual falls below
//! tolerance or a time cap is hit, then polishes with damped Newton. A caller
//! with a good guess (the previous point of a scan) can go to Newton first.

use super::coherent::rhs_coherent_unchecked;
use super::incoherent::rhs_incoherent_unchecked;
use super::{Closure, CoherentState, CumulantError, IncoherentState};
use crate::ode::{drive, Control, IntegrateOptions, Step, Tolerances};
use crate::params::ValidParams;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    /// Bound on ‖f‖∞ / (rate_scale · ‖y‖∞).
    pub residual_tol: f64,
    /// Integration time cap. `None` first tries 50 over the characteristic
    /// rate followed by Newton, then 50 over the slowest bare rate.
    pub t_cap: Option<f64>,
    pub integrate: IntegrateOptions,
    pub newton_max_iter: usize,
    /// Tolerated excursion beyond physical bounds during integration.
    pub bound_tol: f64,
    pub check_stability: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            residual_tol: 1e-9,
            t_cap: None,
            integrate: IntegrateOptions {
                max_steps: 50_000,
                max_stiff_steps: 50_000,
                ..Default::default()
            },
            newton_max_iter: 60,
            bound_tol: 1e-3,
            check_stability: true,
        }
    }
}

impl SteadyOptions {
    pub fn with_tol(tol: Tolerances) -> Self {
        let mut o = SteadyOptions::default();
        o.integrate.tol = tol;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyPath {
    /// Forward integration reached the residual tolerance on its own.
    Integration,
    /// Newton finished the job, after integration or from a supplied guess.
    Newton,
}

impl SteadyPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyPath::Integration => "integration",
            SteadyPath::Newton => "newton",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<S> {
    pub state: S,
    pub path: SteadyPath,
    pub residual: f64,
    /// Largest real part of the Jacobian spectrum, when checked.
    pub max_re: Option<f64>,
    /// Time integrated before stopping (0 for a Newton-only solve).
    pub t_reached: f64,
    pub newton_iters: usize,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn scaled_residual(f: &[f64], y: &[f64], rate: f64) -> f64 {
    norm_inf(f) / (rate * norm_inf(y).max(1e-12))
}

/// Central-difference Jacobian over the `active` coordinates.
fn jacobian<F>(rhs: &F, y: &[f64], active: &[usize]) -> DMatrix<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = active.len();
    let scale = norm_inf(y).max(1e-12);
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; y.len()];
    let mut fm = vec![0.0; y.len()];
    for (col, &j) in active.iter().enumerate() {
        let h = 6e-6 * y[j].abs().max(1e-6 * scale);
        yp[j] = y[j] + h;
        rhs(&yp, &mut fp);
        yp[j] = y[j] - h;
        rhs(&yp, &mut fm);
        yp[j] = y[j];
        for (row, &i) in active.iter().enumerate() {
            jac[(row, col)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Largest real part of the Jacobian spectrum at `y`, and whether it is below
/// `1e-7 · rate_scale`.
pub fn is_stable<F>(rhs: F, y: &[f64], active: &[usize], rate_scale: f64) -> (bool, f64)
where
    F: Fn(&[f64], &mut [f64]),
{
    let jac = jacobian(&rhs, y, active);
    let max_re = jac
        .complex_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |m, l| m.max(l.re));
    (max_re <= 1e-7 * rate_scale, max_re)
}

/// Damped Newton on f(y) = 0 over the `active` coordinates, the rest held
/// fixed. Returns the root, its scaled residual and the iteration count.
pub fn newton<F>(
    rhs: F,
    y0: &[f64],
    active: &[usize],
    rate_scale: f64,
    opts: &SteadyOptions,
) -> Result<(Vec<f64>, f64, usize), CumulantError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut y = y0.to_vec();
    let mut f = vec![0.0; y.len()];
    rhs(&y, &mut f);
    let active_norm = |f: &[f64]| active.iter().fold(0.0f64, |m, &i| m.max(f[i].abs()));
    let mut fnorm = active_norm(&f);
    let mut trial = y.clone();
    let mut ft = f.clone();
    let scaled = |fnorm: f64, y: &[f64]| fnorm / (rate_scale * norm_inf(y).max(1e-12));
    // iterate past the tolerance: the scaled test is loose for slow
    // variables when rates are very disparate, so stop only once the
    // residual is far below it or the line search stalls at roundoff
    let deep = 1e-4 * opts.residual_tol;
    let mut iters = 0;
    while iters < opts.newton_max_iter {
        let res = scaled(fnorm, &y);
        if !res.is_finite() {
            return Err(CumulantError::NonFinite);
        }
        if res < deep {
            break;
        }
        let Some(step) = newton_step(&rhs, &y, &f, active) else { break };
        let mut accepted = false;
        let mut lambda = 1.0;
        for _ in 0..40 {
            for (k, &i) in active.iter().enumerate() {
                trial[i] = y[i] + lambda * step[k];
            }
            rhs(&trial, &mut ft);
            let n = active_norm(&ft);
            if n.is_finite() && n < (1.0 - 1e-4 * lambda) * fnorm {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        y.copy_from_slice(&trial);
        f.copy_from_slice(&ft);
        fnorm = active_norm(&f);
        iters += 1;
    }
    let res = scaled(fnorm, &y);
    if res < opts.residual_tol {
        Ok((y, res, iters))
    } else {
        Err(CumulantError::NotConverged { residual: res })
    }
}

fn newton_step<F>(rhs: &F, y: &[f64], f: &[f64], active: &[usize]) -> Option<DVector<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let jac = jacobian(rhs, y, active);
    let b = DVector::from_iterator(active.len(), active.iter().map(|&i| -f[i]));
    let step = jac.lu().solve(&b)?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

/// Integrate from `y0` until the residual test passes or `t_cap` is reached,
/// then hand over to Newton. `bounds` is checked on every accepted step.
///
/// A small residual alone can stop the integration on a slow manifold near a
/// point that is not a root, so an integration stop counts as converged only
/// when Newton then gets three orders below tolerance. Otherwise the stop
/// threshold is tightened and integration resumes.
pub fn steady_state_ode<F, B>(
    rhs: F,
    y0: &[f64],
    active: &[usize],
    rate_scale: f64,
    t_cap: f64,
    bounds: B,
    opts: &SteadyOptions,
) -> Result<SteadyState<Vec<f64>>, CumulantError>
where
    F: Fn(&[f64], &mut [f64]),
    B: Fn(&[f64]) -> Result<(), CumulantError>,
{
    let strict = 1e-3 * opts.residual_tol;
    let mut last = y0.to_vec();
    let mut t_last = 0.0;
    let mut threshold = opts.residual_tol;
    let mut found = None;
    loop {
        let mut bound_err = None;
        let mut converged = false;
        let start = last.clone();
        let mut ode_rhs = |_t: f64, y: &[f64], dy: &mut [f64]| rhs(y, dy);
        let run = drive(&mut ode_rhs, &start, t_last, t_cap, &opts.integrate, |step: &Step| {
            if let Err(e) = bounds(step.y1) {
                bound_err = Some(e);
                return Control::Abort("bounds".into());
            }
            last.copy_from_slice(step.y1);
            t_last = step.t1;
            if scaled_residual(step.f1, step.y1, rate_scale) < threshold {
                converged = true;
                return Control::Stop;
            }
            Control::Continue
        });
        if let Some(e) = bound_err {
            return Err(e);
        }
        // a stalled or over-budget integration still leaves a usable Newton guess
        if let Err(e) = &run {
            if t_last == 0.0 {
                return Err(e.clone().into());
            }
        }
        if !converged {
            break;
        }
        if let Ok((y, res, _)) = newton(&rhs, &last, active, rate_scale, opts) {
            if res <= strict && bounds(&y).is_ok() {
                found = Some((y, res, SteadyPath::Integration, 0));
                break;
            }
        }
        threshold *= 1e-2;
        if threshold < 1e-6 * opts.residual_tol || !(t_last < t_cap) {
            break;
        }
    }
    let (y, residual, path, iters) = match found {
        Some(f) => f,
        None => {
            let (y, res, iters) = newton(&rhs, &last, active, rate_scale, opts)?;
            bounds(&y)?;
            (y, res, SteadyPath::Newton, iters)
        }
    };
    let max_re = if opts.check_stability {
        let (stable, max_re) = is_stable(&rhs, &y, active, rate_scale);
        if !stable {
            return Err(CumulantError::Unstable { max_re });
        }
        Some(max_re)
    } else {
        None
    };
    Ok(SteadyState {
        state: y,
        path,
        residual,
        max_re,
        t_reached: t_last,
        newton_iters: iters,
    })
}

/// max(κ, Γ, g√N, |Δm|, |Δa|)
pub fn characteristic_rate(p: &ValidParams) -> f64 {
    let d = p.frame_detunings();
    [p.params.kappa, p.gamma_total(), p.effective_coupling(), d.delta_m.abs(), d.delta_a.abs()]
        .into_iter()
        .fold(0.0, f64::max)
        .max(1e-300)
}

fn default_cap(p: &ValidParams) -> f64 {
    let slow = [p.params.kappa, p.gamma_total()]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    if slow.is_finite() {
        50.0 / slow
    } else {
        50.0 / characteristic_rate(p)
    }
}

fn newton_first<F, B>(
    rhs: &F,
    guess: &[f64],
    active: &[usize],
    rate: f64,
    bounds: &B,
    opts: &SteadyOptions,
) -> Option<SteadyState<Vec<f64>>>
where
    F: Fn(&[f64], &mut [f64]),
    B: Fn(&[f64]) -> Result<(), CumulantError>,
{
    let (y, residual, iters) = newton(rhs, guess, active, rate, opts).ok()?;
    bounds(&y).ok()?;
    let max_re = if opts.check_stability {
        let (stable, max_re) = is_stable(rhs, &y, active, rate);
        if !stable {
            return None;
        }
        Some(max_re)
    } else {
        None
    };
    Some(SteadyState {
        state: y,
        path: SteadyPath::Newton,
        residual,
        max_re,
        t_reached: 0.0,
        newton_iters: iters,
    })
}

/// Steady state of the coherent system. With a `guess`, Newton is tried
/// from it first; integration from the relaxed state is the fallback.
pub fn coherent_steady(
    p: &ValidParams,
    closure: Closure,
    guess: Option<&CoherentState>,
    opts: &SteadyOptions,
) -> Result<SteadyState<CoherentState>, CumulantError> {
    let rate = characteristic_rate(p);
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let d = rhs_coherent_unchecked(&CoherentState::from_slice(y), p, closure);
        dy.copy_from_slice(&d.to_vec());
    };
    let bound_tol = opts.bound_tol;
    let bounds = |y: &[f64]| CoherentState::from_slice(y).check_bounds(bound_tol);
    // the reduced closure never reads ⟨a†aσᶻ⟩, so it is left out of the solve
    let active: Vec<usize> = match closure {
        Closure::Full => (0..CoherentState::LEN).collect(),
        Closure::Reduced => (0..CoherentState::LEN - 1).collect(),
    };
    let finish = |s: SteadyState<Vec<f64>>| {
        let mut state = CoherentState::from_slice(&s.state);
        if closure == Closure::Reduced {
            state.adasz = 0.0;
            state.adasz -= state.adasz_cumulant();
        }
        SteadyState {
            state,
            path: s.path,
            residual: s.residual,
            max_re: s.max_re,
            t_reached: s.t_reached,
            newton_iters: s.newton_iters,
        }
    };
    if let Some(g) = guess {
        if let Some(s) = newton_first(&rhs, &g.to_vec(), &active, rate, &bounds, opts) {
            return Ok(finish(s));
        }
    }
    let d = p.frame_detunings();
    let mut y0 = CoherentState::relaxed(p.nbar, p.sz_target());
    y0.a = p.params.eta / C64::new(p.params.kappa, d.delta_m);
    y0.adasz = (p.nbar + y0.a.norm_sqr()) * y0.sz;
    let y0 = y0.to_vec();
    if let Some(cap) = opts.t_cap {
        return steady_state_ode(&rhs, &y0, &active, rate, cap, &bounds, opts).map(finish);
    }
    // settle the fast variables only and let Newton resolve the slow atomic
    // relaxation; the full-length run is the fallback
    let fast = 50.0 / rate;
    if fast < default_cap(p) {
        if let Ok(s) = steady_state_ode(&rhs, &y0, &active, rate, fast, &bounds, opts) {
            if s.residual <= 1e-3 * opts.residual_tol {
                return Ok(finish(s));
            }
        }
    }
    steady_state_ode(&rhs, &y0, &active, rate, default_cap(p), &bounds, opts).map(finish)
}

/// Steady state of the incoherent system; see [`coherent_steady`].
pub fn incoherent_steady(
    p: &ValidParams,
    guess: Option<&IncoherentState>,
    opts: &SteadyOptions,
) -> Result<SteadyState<IncoherentState>, CumulantError> {
    if p.params.eta.norm() > 0.0 {
        return Err(CumulantError::Precondition(
            "the incoherent system has no coherent drive".into(),
        ));
    }
    let rate = characteristic_rate(p);
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let d = rhs_incoherent_unchecked(&IncoherentState::from_slice(y), p);
        dy.copy_from_slice(&d.to_vec());
    };
    let bound_tol = opts.bound_tol;
    let bounds = |y: &[f64]| IncoherentState::from_slice(y).check_bounds(bound_tol);
    let active: Vec<usize> = (0..IncoherentState::LEN).collect();
    let finish = |s: SteadyState<Vec<f64>>| SteadyState {
        state: IncoherentState::from_slice(&s.state),
        path: s.path,
        residual: s.residual,
        max_re: s.max_re,
        t_reached: s.t_reached,
        newton_iters: s.newton_iters,
    };
    if let Some(g) = guess {
        if let Some(s) = newton_first(&rhs, &g.to_vec(), &active, rate, &bounds, opts) {
            return Ok(finish(s));
        }
    }
    let mut y0 = IncoherentState::ground(p.nbar);
    y0.sz = p.sz_target();
    let y0 = y0.to_vec();
    if let Some(cap) = opts.t_cap {
        return steady_state_ode(&rhs, &y0, &active, rate, cap, &bounds, opts).map(finish);
    }
    // settle the fast variables only and let Newton resolve the slow atomic
    // relaxation; the full-length run is the fallback
    let fast = 50.0 / rate;
    if fast < default_cap(p) {
        if let Ok(s) = steady_state_ode(&rhs, &y0, &active, rate, fast, &bounds, opts) {
            if s.residual <= 1e-3 * opts.residual_tol {
                return Ok(finish(s));
            }
        }
    }
    steady_state_ode(&rhs, &y0, &active, rate, default_cap(p), &bounds, opts).map(finish)
}
