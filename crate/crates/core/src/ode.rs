//! Adaptive time integration.
//!
//! Dormand-Prince 5(4) with its fourth-order continuous extension is the
//! default. When the explicit method stalls (step collapse or the step budget
//! runs out, the usual symptom of stiffness) the driver continues from the
//! last accepted point with a variable-step BDF2 scheme solved by Newton
//! iteration on a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-8, abs: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub tol: Tolerances,
    /// Accepted plus rejected explicit steps before stiffness is assumed.
    pub max_steps: usize,
    pub max_stiff_steps: usize,
    pub stiff_fallback: bool,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            tol: Tolerances::default(),
            max_steps: 200_000,
            max_stiff_steps: 200_000,
            stiff_fallback: true,
            initial_step: None,
            max_step: None,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: Tolerances) -> Self {
        IntegrateOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t:e}")]
    StepBudget { t: f64 },
    #[error("non-finite state at t = {t:e}")]
    NonFinite { t: f64 },
    #[error("time grid must be strictly increasing with at least one point")]
    InvalidGrid,
    #[error("initial state is not finite")]
    InvalidInitialState,
    #[error("aborted at t = {t:e}: {reason}")]
    Aborted { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Time at which the stiff fallback took over, if it did.
    pub stiff_switch_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// True when samples between solver steps come from the continuous
    /// extension rather than from steps landing on the grid.
    pub dense_output: bool,
    pub stats: IntegrationStats,
}

pub enum Control {
    Continue,
    Stop,
    Abort(String),
}

/// One accepted step, handed to the step observer.
pub struct Step<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    /// Derivative at (t1, y1).
    pub f1: &'a [f64],
    interp: Interp<'a>,
}

enum Interp<'a> {
    Dopri { rcont: &'a [Vec<f64>; 5] },
    Hermite { f0: &'a [f64] },
}

impl Step<'_> {
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let th = (t - self.t0) / h;
        let th1 = 1.0 - th;
        match &self.interp {
            Interp::Dopri { rcont } => {
                for i in 0..out.len() {
                    out[i] = rcont[0][i]
                        + th * (rcont[1][i]
                            + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
                }
            }
            Interp::Hermite { f0 } => {
                let h00 = (1.0 + 2.0 * th) * th1 * th1;
                let h10 = th * th1 * th1;
                let h01 = th * th * (3.0 - 2.0 * th);
                let h11 = -th * th * th1;
                for i in 0..out.len() {
                    out[i] = h00 * self.y0[i]
                        + h10 * h * f0[i]
                        + h01 * self.y1[i]
                        + h11 * h * self.f1[i];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub t: f64,
    pub y: Vec<f64>,
    pub stats: IntegrationStats,
    /// True if the observer stopped the integration before `t_end`.
    pub stopped: bool,
}

/// Integrate and sample the solution on `t_grid`; `y0` is the state at
/// `t_grid[0]`.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[f64],
    t_grid: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OdeError::InvalidGrid);
    }
    let n = y0.len();
    let mut states = vec![y0.to_vec()];
    let mut next = 1;
    let mut dense = false;
    let t_end = *t_grid.last().unwrap();
    let mut buf = vec![0.0; n];
    let end = drive(&mut rhs, y0, t_grid[0], t_end, opts, |step: &Step| {
        while next < t_grid.len() && t_grid[next] <= step.t1 {
            if t_grid[next] == step.t1 {
                states.push(step.y1.to_vec());
            } else {
                step.interpolate(t_grid[next], &mut buf);
                states.push(buf.clone());
                dense = true;
            }
            next += 1;
        }
        Control::Continue
    })?;
    // the last step lands on t_end exactly, but guard against rounding
    while states.len() < t_grid.len() {
        states.push(end.y.clone());
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        dense_output: dense,
        stats: end.stats,
    })
}

/// Integrate from `t0` towards `t_end`, calling `observe` after every
/// accepted step. The observer may stop early or abort.
pub fn drive<F, O>(
    rhs: &mut F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    opts: &IntegrateOptions,
    mut observe: O,
) -> Result<Endpoint, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&Step) -> Control,
{
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::InvalidInitialState);
    }
    if !(t_end > t0) {
        return Ok(Endpoint {
            t: t0,
            y: y0.to_vec(),
            stats: IntegrationStats::default(),
            stopped: false,
        });
    }
    let mut stats = IntegrationStats::default();
    let mut dp = Dopri::new(y0.len());
    match dp.run(rhs, y0, t0, t_end, opts, &mut stats, &mut observe)? {
        DopriExit::Done(t, y, stopped) => Ok(Endpoint { t, y, stats, stopped }),
        DopriExit::Stalled { t, y, h, prev, err } => {
            if !opts.stiff_fallback {
                return Err(err);
            }
            stats.stiff_switch_at = Some(t);
            let (t, y, stopped) = bdf2(rhs, &y, t, t_end, h, prev, opts, &mut stats, &mut observe)?;
            Ok(Endpoint { t, y, stats, stopped })
        }
    }
}

fn wrms(err: &[f64], y0: &[f64], y1: &[f64], tol: &Tolerances) -> f64 {
    let n = err.len().max(1);
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.abs + tol.rel * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n as f64).sqrt()
}

// Dormand-Prince 5(4) coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Dopri {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    err: Vec<f64>,
    rcont: [Vec<f64>; 5],
}

enum DopriExit {
    Done(f64, Vec<f64>, bool),
    Stalled {
        t: f64,
        y: Vec<f64>,
        h: f64,
        prev: Option<(f64, Vec<f64>)>,
        err: OdeError,
    },
}

impl Dopri {
    fn new(n: usize) -> Self {
        let v = || vec![0.0; n];
        Dopri {
            k: [v(), v(), v(), v(), v(), v(), v()],
            ytmp: v(),
            ynew: v(),
            err: v(),
            rcont: [v(), v(), v(), v(), v()],
        }
    }

    fn initial_step<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], span: f64, tol: &Tolerances, stats: &mut IntegrationStats) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len().max(1) as f64;
        let sc: Vec<f64> = y.iter().map(|v| tol.abs + tol.rel * v.abs()).collect();
        let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.k[0].iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        for i in 0..y.len() {
            self.ytmp[i] = y[i] + h0 * self.k[0][i];
        }
        rhs(t + h0, &self.ytmp, &mut self.k[1]);
        stats.rhs_evals += 1;
        let d2 = (self.k[1]
            .iter()
            .zip(&self.k[0])
            .zip(&sc)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        let h = (100.0 * h0).min(h1).min(span);
        if h.is_finite() && h > 0.0 { h } else { span * 1e-6 }
    }

    #[allow(clippy::too_many_arguments)]
    fn run<F, O>(
        &mut self,
        rhs: &mut F,
        y0: &[f64],
        t0: f64,
        t_end: f64,
        opts: &IntegrateOptions,
        stats: &mut IntegrationStats,
        observe: &mut O,
    ) -> Result<DopriExit, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(&Step) -> Control,
    {
        let n = y0.len();
        let span = t_end - t0;
        let tol = &opts.tol;
        let hmax = opts.max_step.unwrap_or(span).min(span);
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut prev: Option<(f64, Vec<f64>)> = None;
        rhs(t, &y, &mut self.k[0]);
        stats.rhs_evals += 1;
        if self.k[0].iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite { t });
        }
        let mut h = match opts.initial_step {
            Some(h) => h.min(hmax),
            None => self.initial_step(rhs, t, &y, hmax, tol, stats),
        };
        let mut reject_streak = false;
        let mut steps = 0usize;
        loop {
            if steps >= opts.max_steps {
                return Ok(DopriExit::Stalled { t, y, h, prev, err: OdeError::StepBudget { t } });
            }
            if h < 1e-12 * span {
                return Ok(DopriExit::Stalled { t, y, h, prev, err: OdeError::StepUnderflow { t, h } });
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            steps += 1;
            let k = &mut self.k;
            macro_rules! stage {
                ($dst:expr, $c:expr, [$($ai:expr => $ki:expr),*]) => {{
                    for i in 0..n {
                        self.ytmp[i] = y[i] + h * (0.0 $(+ $ai * k[$ki][i])*);
                    }
                    let (head, tail) = k.split_at_mut($dst);
                    let _ = &head;
                    rhs(t + $c * h, &self.ytmp, &mut tail[0]);
                }};
            }
            stage!(1, C2, [A21 => 0]);
            stage!(2, C3, [A31 => 0, A32 => 1]);
            stage!(3, C4, [A41 => 0, A42 => 1, A43 => 2]);
            stage!(4, C5, [A51 => 0, A52 => 1, A53 => 2, A54 => 3]);
            stage!(5, 1.0, [A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4]);
            for i in 0..n {
                self.ynew[i] = y[i]
                    + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
            }
            let t_new = if last { t_end } else { t + h };
            {
                let (_, tail) = k.split_at_mut(6);
                rhs(t_new, &self.ynew, &mut tail[0]);
            }
            stats.rhs_evals += 6;
            for i in 0..n {
                self.err[i] = h
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            }
            let finite = self.ynew.iter().chain(k[6].iter()).all(|v| v.is_finite());
            let e = if finite { wrms(&self.err, &y, &self.ynew, tol) } else { f64::INFINITY };
            if e <= 1.0 {
                stats.accepted += 1;
                for i in 0..n {
                    let dy = self.ynew[i] - y[i];
                    let bspl = h * k[0][i] - dy;
                    self.rcont[0][i] = y[i];
                    self.rcont[1][i] = dy;
                    self.rcont[2][i] = bspl;
                    self.rcont[3][i] = dy - h * k[6][i] - bspl;
                    self.rcont[4][i] = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                }
                let ctrl = observe(&Step {
                    t0: t,
                    t1: t_new,
                    y0: &y,
                    y1: &self.ynew,
                    f1: &k[6],
                    interp: Interp::Dopri { rcont: &self.rcont },
                });
                prev = Some((t, y.clone()));
                t = t_new;
                y.copy_from_slice(&self.ynew);
                let (head, tail) = k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                match ctrl {
                    Control::Continue => {}
                    Control::Stop => return Ok(DopriExit::Done(t, y, true)),
                    Control::Abort(reason) => return Err(OdeError::Aborted { t, reason }),
                }
                if last {
                    return Ok(DopriExit::Done(t, y, false));
                }
                let mut fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if reject_streak {
                    fac = fac.min(1.0);
                }
                reject_streak = false;
                h = (h * fac).min(hmax);
            } else {
                stats.rejected += 1;
                reject_streak = true;
                let fac = if e.is_finite() { (0.9 * e.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h *= fac;
            }
        }
    }
}

/// Variable-step BDF2 with Milne-type error estimate.
#[allow(clippy::too_many_arguments)]
fn bdf2<F, O>(
    rhs: &mut F,
    y_start: &[f64],
    t_start: f64,
    t_end: f64,
    h_start: f64,
    prev: Option<(f64, Vec<f64>)>,
    opts: &IntegrateOptions,
    stats: &mut IntegrationStats,
    observe: &mut O,
) -> Result<(f64, Vec<f64>, bool), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&Step) -> Control,
{
    let n = y_start.len();
    let span = t_end - t_start;
    let tol = &opts.tol;
    let mut t = t_start;
    let mut y = y_start.to_vec();
    let mut f = vec![0.0; n];
    rhs(t, &y, &mut f);
    stats.rhs_evals += 1;
    let mut hist = prev;
    // an explicit method stalls near its stability limit, so start larger
    let mut h = (h_start * 10.0).max(span * 1e-10).min(span);
    let mut jac: Option<DMatrix<f64>> = None;
    let mut fy = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut fnew = vec![0.0; n];
    let mut steps = 0usize;
    let mut reject_streak = false;
    loop {
        if steps >= opts.max_stiff_steps {
            return Err(OdeError::StepBudget { t });
        }
        if h < 1e-14 * span.max(t.abs()) {
            return Err(OdeError::StepUnderflow { t, h });
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let t_new = if last { t_end } else { t + h };
        // coefficients: y_{n+1} = a0 y_n + a1 y_{n-1} + beta h f_{n+1}
        let (a0, a1, beta, pred): (f64, f64, f64, Vec<f64>) = match &hist {
            Some((tp, yp)) => {
                let om = h / (t - tp);
                let d = 1.0 + 2.0 * om;
                let a0 = (1.0 + om) * (1.0 + om) / d;
                let a1 = -om * om / d;
                let beta = (1.0 + om) / d;
                // quadratic through y_{n-1}, y_n with slope f_n at t_n
                let hp = t - tp;
                let pred = (0..n)
                    .map(|i| {
                        let c = (yp[i] - y[i] + hp * f[i]) / (hp * hp);
                        y[i] + h * f[i] + c * h * h
                    })
                    .collect();
                (a0, a1, beta, pred)
            }
            None => (1.0, 0.0, 1.0, (0..n).map(|i| y[i] + h * f[i]).collect()),
        };
        if jac.is_none() {
            jac = Some(fd_jacobian(rhs, t, &y, &f, tol, stats));
        }
        let j = jac.as_ref().unwrap();
        let mut m = DMatrix::<f64>::identity(n, n);
        m -= j * (beta * h);
        let lu = m.lu();
        let base: Vec<f64> = match &hist {
            Some((_, yp)) => (0..n).map(|i| a0 * y[i] + a1 * yp[i]).collect(),
            None => y.clone(),
        };
        ynew.copy_from_slice(&pred);
        let mut converged = false;
        let mut last_norm = f64::INFINITY;
        for _ in 0..8 {
            rhs(t_new, &ynew, &mut fy);
            stats.rhs_evals += 1;
            let g = DVector::from_iterator(n, (0..n).map(|i| ynew[i] - base[i] - beta * h * fy[i]));
            let Some(dx) = lu.solve(&g) else { break };
            for i in 0..n {
                ynew[i] -= dx[i];
            }
            let norm = wrms(dx.as_slice(), &y, &ynew, tol);
            if !norm.is_finite() {
                break;
            }
            if norm < 1e-3 || (norm < 0.1 && norm < 0.5 * last_norm && norm * norm / (last_norm - norm).max(1e-300) < 1e-3) {
                converged = true;
                break;
            }
            if norm > 2.0 * last_norm {
                break;
            }
            last_norm = norm;
        }
        if !converged {
            stats.rejected += 1;
            jac = None;
            h *= 0.25;
            reject_streak = true;
            continue;
        }
        for i in 0..n {
            fnew[i] = (ynew[i] - base[i]) / (beta * h);
        }
        let est: Vec<f64> = (0..n).map(|i| 0.4 * (ynew[i] - pred[i])).collect();
        let e = wrms(&est, &y, &ynew, tol);
        if e <= 1.0 && ynew.iter().all(|v| v.is_finite()) {
            stats.accepted += 1;
            let ctrl = observe(&Step {
                t0: t,
                t1: t_new,
                y0: &y,
                y1: &ynew,
                f1: &fnew,
                interp: Interp::Hermite { f0: &f },
            });
            hist = Some((t, y.clone()));
            t = t_new;
            y.copy_from_slice(&ynew);
            f.copy_from_slice(&fnew);
            match ctrl {
                Control::Continue => {}
                Control::Stop => return Ok((t, y, true)),
                Control::Abort(reason) => return Err(OdeError::Aborted { t, reason }),
            }
            if last {
                return Ok((t, y, false));
            }
            let mut fac = if e == 0.0 { 4.0 } else { (0.9 * e.powf(-1.0 / 3.0)).clamp(0.2, 4.0) };
            if reject_streak {
                fac = fac.min(1.0);
            }
            reject_streak = false;
            if fac > 1.5 {
                jac = None;
            }
            h *= fac;
        } else {
            stats.rejected += 1;
            reject_streak = true;
            h *= if e.is_finite() { (0.9 * e.powf(-1.0 / 3.0)).clamp(0.1, 0.9) } else { 0.1 };
        }
    }
}

fn fd_jacobian<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    tol: &Tolerances,
    stats: &mut IntegrationStats,
) -> DMatrix<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    for c in 0..n {
        let scale = y[c].abs().max(tol.abs / tol.rel.max(1e-300)).max(1e-8);
        let d = f64::EPSILON.sqrt() * scale;
        yp[c] = y[c] + d;
        rhs(t, &yp, &mut fp);
        stats.rhs_evals += 1;
        for r in 0..n {
            j[(r, c)] = (fp[r] - f0[r]) / d;
        }
        yp[c] = y[c];
    }
    j
}

/// Uniform grid of `points` samples on [t0, t1].
pub fn linspace(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![t0],
        _ => (0..points)
            .map(|i| {
                if i == points - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decay(rate: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
        move |_, y, dy| dy[0] = -rate * y[0]
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        let grid = linspace(0.0, 5.0, 11);
        let tr = integrate(decay(1.3), &[2.0], &grid, &IntegrateOptions::default()).unwrap();
        for (t, y) in tr.times.iter().zip(&tr.states) {
            assert_relative_eq!(y[0], 2.0 * (-1.3 * t).exp(), max_relative = 1e-7);
        }
        assert!(tr.stats.stiff_switch_at.is_none());
    }

    #[test]
    fn dense_output_is_accurate() {
        // harmonic oscillator, many output points per step
        let grid = linspace(0.0, 10.0, 1001);
        let tr = integrate(
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            &grid,
            &IntegrateOptions::default(),
        )
        .unwrap();
        assert!(tr.dense_output);
        for (t, y) in tr.times.iter().zip(&tr.states) {
            assert!((y[0] - t.cos()).abs() < 1e-7, "t={t} y={} cos={}", y[0], t.cos());
            assert!((y[1] + t.sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn cavity_relaxation() {
        let (kappa, nbar) = (0.7, 3.2);
        let grid = linspace(0.0, 4.0, 9);
        let tr = integrate(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -2.0 * kappa * (y[0] - nbar),
            &[0.0],
            &grid,
            &IntegrateOptions::default(),
        )
        .unwrap();
        for (t, y) in tr.times.iter().zip(&tr.states) {
            let exact = nbar * (1.0 - (-2.0 * kappa * t).exp());
            assert!((y[0] - exact).abs() <= 1e-8 * exact.abs() + 1e-9);
        }
    }

    #[test]
    fn halving_tolerance_converges() {
        let run = |rel: f64| {
            let opts = IntegrateOptions::with_tol(Tolerances { rel, abs: rel * 1e-2 });
            let tr = integrate(
                |_, y: &[f64], dy: &mut [f64]| {
                    dy[0] = y[1];
                    dy[1] = (1.0 - y[0] * y[0]) * y[1] - y[0];
                },
                &[2.0, 0.0],
                &[0.0, 6.0],
                &opts,
            )
            .unwrap();
            tr.states[1].clone()
        };
        let a = run(1e-8);
        let b = run(5e-9);
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 10.0 * 1e-8 * a[i].abs().max(1.0));
        }
    }

    #[test]
    fn stiff_problem_switches_to_implicit() {
        // y' = -1e6 (y - cos t): explicit stepping stalls at its stability limit
        let opts = IntegrateOptions {
            max_steps: 2_000,
            tol: Tolerances { rel: 1e-6, abs: 1e-9 },
            ..Default::default()
        };
        let grid = linspace(0.0, 2.0, 5);
        let tr = integrate(
            |t, y: &[f64], dy: &mut [f64]| dy[0] = -1.0e6 * (y[0] - t.cos()),
            &[1.0],
            &grid,
            &opts,
        )
        .unwrap();
        assert!(tr.stats.stiff_switch_at.is_some());
        for (t, y) in tr.times.iter().zip(&tr.states) {
            // slow manifold y ≈ cos t + sin t / 1e6
            assert!((y[0] - t.cos()).abs() < 1e-4, "t={t} y={}", y[0]);
        }
    }

    #[test]
    fn stiff_failure_reported_without_fallback() {
        let opts = IntegrateOptions {
            max_steps: 100,
            stiff_fallback: false,
            ..Default::default()
        };
        let err = integrate(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -1.0e8 * y[0],
            &[1.0],
            &[0.0, 1.0],
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::StepBudget { .. }));
    }

    #[test]
    fn observer_can_stop_and_abort() {
        let mut rhs = decay(1.0);
        let end = drive(&mut rhs, &[1.0], 0.0, 100.0, &IntegrateOptions::default(), |s| {
            if s.y1[0] < 0.5 { Control::Stop } else { Control::Continue }
        })
        .unwrap();
        assert!(end.stopped && end.t < 100.0 && end.y[0] < 0.5);
        let err = drive(&mut rhs, &[1.0], 0.0, 1.0, &IntegrateOptions::default(), |_| {
            Control::Abort("bound".into())
        })
        .unwrap_err();
        assert!(matches!(err, OdeError::Aborted { .. }));
    }

    #[test]
    fn rejects_bad_grids_and_states() {
        let o = IntegrateOptions::default();
        assert_eq!(integrate(decay(1.0), &[1.0], &[0.0, 0.0], &o).unwrap_err(), OdeError::InvalidGrid);
        assert_eq!(integrate(decay(1.0), &[1.0], &[], &o).unwrap_err(), OdeError::InvalidGrid);
        assert_eq!(
            integrate(decay(1.0), &[f64::NAN], &[0.0, 1.0], &o).unwrap_err(),
            OdeError::InvalidInitialState
        );
    }
}
