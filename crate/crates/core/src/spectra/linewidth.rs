use super::{SpectraError, SpectrumCurve};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineWidth {
    pub center: f64,
    pub peak: f64,
    pub background: f64,
    pub fwhm: f64,
    pub hwhm: f64,
}

/// Width of the single line in a sampled curve, with the smaller of the two
/// end values taken as background and crossings placed by linear
/// interpolation.
pub fn fwhm(curve: &SpectrumCurve) -> Result<LineWidth, SpectraError> {
    sampled(&curve.omega, &curve.total, None)
}

fn sampled(x: &[f64], y: &[f64], background: Option<f64>) -> Result<LineWidth, SpectraError> {
    let n = y.len();
    if n < 3 || x.len() != n {
        return Err(SpectraError::Precondition("need at least three samples".into()));
    }
    let background = background.unwrap_or(y[0].min(y[n - 1]));
    let (imax, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if !(peak > background) {
        return Err(SpectraError::Precondition("no line above background".into()));
    }
    let half = background + 0.5 * (peak - background);
    let mut l = imax;
    while l > 0 && y[l - 1] >= half {
        l -= 1;
    }
    let mut r = imax;
    while r + 1 < n && y[r + 1] >= half {
        r += 1;
    }
    if l == 0 || r == n - 1 {
        return Err(SpectraError::NoCrossing);
    }
    if y[..l].iter().chain(&y[r + 1..]).any(|v| *v >= half) {
        return Err(SpectraError::Multimodal);
    }
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let left = cross(l - 1, l);
    let right = cross(r, r + 1);
    let width = right - left;
    Ok(LineWidth {
        center: x[imax],
        peak,
        background,
        fwhm: width,
        hwhm: width / 2.0,
    })
}

/// Golden-section search for the maximum of a unimodal `f` on [lo, hi].
fn maximise(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-13 * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Half-maximum crossing of `f` on one side of `center`, found by doubling
/// a step from `scale` and then bisecting.
fn crossing(f: &dyn Fn(f64) -> f64, center: f64, half: f64, scale: f64, dir: f64) -> Result<f64, SpectraError> {
    let mut inner = 0.0;
    let mut outer = scale;
    let mut expanded = 0;
    while f(center + dir * outer) >= half {
        inner = outer;
        outer *= 2.0;
        expanded += 1;
        if expanded > 2000 || !outer.is_finite() {
            return Err(SpectraError::NoCrossing);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        if f(center + dir * mid) >= half {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    Ok(0.5 * (inner + outer))
}

/// Width of a line given as a function, starting from a center estimate
/// and a rough width. The peak is first relocated within ±`scale`.
pub fn fwhm_of_fn(
    f: &dyn Fn(f64) -> f64,
    center: f64,
    scale: f64,
    background: f64,
) -> Result<LineWidth, SpectraError> {
    if !(scale > 0.0) {
        return Err(SpectraError::Precondition("width scale must be positive".into()));
    }
    let c = maximise(f, center - scale, center + scale);
    let c = if f(center) > f(c) { center } else { c };
    let peak = f(c);
    if !(peak > background) {
        return Err(SpectraError::Precondition("no line above background".into()));
    }
    let half = background + 0.5 * (peak - background);
    let left = crossing(f, c, half, scale / 4.0, -1.0)?;
    let right = crossing(f, c, half, scale / 4.0, 1.0)?;
    Ok(LineWidth {
        center: c,
        peak,
        background,
        fwhm: left + right,
        hwhm: 0.5 * (left + right),
    })
}

/// Sample on [lo, hi], zoom onto the detected line until the sampled width
/// changes by less than 0.5%, then refine on `f` itself.
pub fn fwhm_adaptive(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Result<LineWidth, SpectraError> {
    let points = points.max(11);
    let grid = |a: f64, b: f64| -> Vec<f64> {
        (0..points).map(|k| a + (b - a) * k as f64 / (points - 1) as f64).collect()
    };
    let mut xs = grid(lo, hi);
    let mut ys: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
    let background = ys[0].min(ys[points - 1]);
    let mut est = sampled(&xs, &ys, None)?;
    for _ in 0..60 {
        let (a, b) = (est.center - 4.0 * est.fwhm, est.center + 4.0 * est.fwhm);
        xs = grid(a, b);
        ys = xs.iter().map(|x| f(*x)).collect();
        // keep the original background: a zoomed window no longer reaches it
        let next = sampled(&xs, &ys, Some(background))?;
        let change = (next.fwhm - est.fwhm).abs() / est.fwhm;
        est = next;
        if change < 5e-3 {
            break;
        }
    }
    fwhm_of_fn(f, est.center, est.fwhm, background)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(x0: f64, hw: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| hw * hw / ((x - x0).powi(2) + hw * hw)
    }

    fn curve(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> SpectrumCurve {
        let omega: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        SpectrumCurve {
            total: omega.iter().map(|x| f(*x)).collect(),
            omega,
            channels: vec![],
        }
    }

    #[test]
    fn sampled_lorentzian() {
        let f = lorentz(0.3, 0.5);
        let w = fwhm(&curve(&f, -20.0, 20.0, 40_001)).unwrap();
        assert!((w.fwhm - 1.0).abs() < 1e-3, "{w:?}");
        assert_eq!(w.hwhm, w.fwhm / 2.0);
    }

    #[test]
    fn coarse_grid_is_rescued_by_refinement() {
        let hw = 0.5;
        let f = |x: f64| 0.2 + lorentz(0.3, hw)(x);
        // five samples across the line
        let w = fwhm_adaptive(&f, -40.0, 40.0, 401).unwrap();
        assert!((w.fwhm - 2.0 * hw).abs() < 1e-2 * 2.0 * hw, "{w:?}");
        let plain = fwhm(&curve(&f, -40.0, 40.0, 401)).unwrap();
        assert!((plain.fwhm - 2.0 * hw).abs() > (w.fwhm - 2.0 * hw).abs());
    }

    #[test]
    fn ultranarrow_line_in_wide_window() {
        let f = |x: f64| 1e-9 / (x * x + 1e-8) + 1e-3 * 1e6 / (x * x + 1e6);
        let w = fwhm_adaptive(&f, -1e4, 1e4, 2001).unwrap();
        // background is the end value of the broad pedestal
        assert!(w.fwhm > 1.9e-4 && w.fwhm < 2.1e-4, "{w:?}");
    }

    #[test]
    fn function_refinement() {
        let f = lorentz(-2.0, 3e-3);
        let w = fwhm_of_fn(&f, -2.0 + 1e-3, 1e-2, 0.0).unwrap();
        assert!((w.fwhm - 6e-3).abs() < 1e-12);
        assert!((w.center + 2.0).abs() < 1e-9);
    }

    #[test]
    fn failures() {
        // peak at the window edge
        let f = lorentz(0.0, 5.0);
        assert_eq!(fwhm(&curve(&f, -10.0, 0.0, 101)), Err(SpectraError::NoCrossing));
        let two = |x: f64| lorentz(-5.0, 0.5)(x) + lorentz(5.0, 0.5)(x);
        assert_eq!(fwhm(&curve(&two, -20.0, 20.0, 4001)), Err(SpectraError::Multimodal));
    }
}
