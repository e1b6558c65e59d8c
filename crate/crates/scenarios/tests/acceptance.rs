//! Acceptance report. Prints one PASS/FAIL line per primary criterion,
//! followed by supplementary checks that explain or extend them.
//!
//! The report itself only fails on errors, so that a failing criterion is
//! printed next to the others instead of hiding them. Set
//! CQED_ACCEPTANCE_STRICT=1 to fail the test when any primary criterion fails.
//!
//! Run with `cargo test -p cqed-scenarios --test acceptance -- --nocapture`.

use cqed_core::cumulant::{analytic_maser_steady, coherent_steady, rhs_coherent, Closure, CoherentState, SteadyOptions};
use cqed_core::exact::{build_collective_ops, build_liouvillian, steady_state, BasisMode, HilbertConfig, SystemOps};
use cqed_core::ode::{integrate, IntegrateOptions, Tolerances};
use cqed_core::params::thermal_occupation;
use cqed_core::spectra::{laplace_correlation, maser_closed_form, maser_linewidth, maser_system};
use cqed_core::{SystemParams, ValidParams, C64};
use cqed_scenarios::runners::driven_steady;
use cqed_scenarios::spec::Axis;
use cqed_scenarios::{preset, run, EngineKind, Scenario, ScenarioResult, ScenarioSpec, Table};

struct Report {
    primary: Vec<(String, bool)>,
}

impl Report {
    fn primary(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
        self.primary.push((id.to_string(), pass));
    }

    fn extra(&self, id: &str, pass: bool, detail: String) {
        println!("{} [{id}, supplementary] {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn note(&self, id: &str, detail: String) {
        println!("INFO [{id}] {detail}");
    }
}

fn col(t: &Table, name: &str) -> Vec<f64> {
    t.values(name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect()
}

fn summary(r: &ScenarioResult) -> &Table {
    r.summary.as_ref().expect("summary table")
}

fn go(spec: &ScenarioSpec) -> ScenarioResult {
    let r = run(spec, 1).expect("scenario runs");
    assert_eq!(r.failed, 0, "{}: {} failed points", spec.prefix(), r.failed);
    r
}

fn ensemble() -> SystemParams {
    SystemParams::microwave_ensemble()
}

fn thermal_occupation_check(rep: &mut Report) {
    let omega = ensemble().omega_m;
    let want = [(0.1, 0.04), (0.7, 1.67), (4.0, 11.7), (10.0, 30.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (t, n) in want {
        let got = thermal_occupation(omega, t).unwrap();
        let dev = got / n - 1.0;
        ok &= dev.abs() <= 0.02;
        parts.push(format!("T={t}: {got:.4} vs {n} ({:+.2}%)", 100.0 * dev));
    }
    rep.primary("1 thermal occupation", ok, parts.join("; "));
    rep.note(
        "1 thermal occupation",
        "0.04 at 0.1 K is the computed value rounded to one significant figure".into(),
    );
}

fn small_n_spec(kind: EngineKind, n: u64) -> ScenarioSpec {
    let mut s = preset(Scenario::TransmissionScan);
    s.engine.kind = kind;
    s.system.n_atoms = n;
    s
}

fn vacuum_rabi_check(rep: &mut Report) {
    let tensor = go(&small_n_spec(EngineKind::ExactTensor, 2));
    let dicke = go(&small_n_spec(EngineKind::ExactDicke, 2));
    let grid = col(&tensor.table, "delta_m");
    let half_step = 0.5 * (grid[1] - grid[0]);
    let g = tensor.spec.system.g;
    let target = g * 2f64.sqrt();
    let s = summary(&tensor);
    let (lo, hi) = (col(s, "peak_lo")[0], col(s, "peak_hi")[0]);
    let placed = (lo + target).abs() <= half_step && (hi - target).abs() <= half_step;
    let (pt, pd) = (col(&tensor.table, "photons"), col(&dicke.table, "photons"));
    let height = pt.iter().cloned().fold(0.0, f64::max);
    let diff = pt.iter().zip(&pd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / height;
    rep.primary(
        "2 vacuum Rabi splitting",
        placed && diff <= 0.03,
        format!(
            "peaks at {lo} and {hi} vs ±g√2 = ±{target:.4} (half step {half_step}); Dicke vs tensor max diff {:.3}% of peak",
            100.0 * diff
        ),
    );
}

fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x / y - 1.0).abs()).fold(0.0, f64::max)
}

fn adasz_point(kappa: f64) -> f64 {
    let mut p = ensemble();
    p.kappa = kappa;
    p.temperature = 1.0;
    p.eta = C64::new(1e3, 0.0);
    p.omega_l = Some(p.omega_m);
    let v = p.validate().unwrap();
    let e = preset(Scenario::DrivenFieldScan).engine;
    driven_steady(&v, &e).unwrap().adasz_c.unwrap()
}

fn cumulant_check(rep: &mut Report) {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let exact = col(&go(&small_n_spec(EngineKind::ExactTensor, n)).table, "photons");
        let cum = col(&go(&small_n_spec(EngineKind::Cumulant, n)).table, "photons");
        let dev = max_rel_dev(&cum, &exact);
        ok &= dev <= 0.10;
        parts.push(format!("N={n}: max deviation {:.2}%", 100.0 * dev));
    }
    let dev_at = |closure: Closure| {
        let mut exact = small_n_spec(EngineKind::ExactTensor, 2);
        exact.system.kappa = 1e3;
        let mut cum = exact.clone();
        cum.engine.kind = EngineKind::Cumulant;
        cum.engine.closure = closure;
        max_rel_dev(&col(&go(&cum).table, "photons"), &col(&go(&exact).table, "photons"))
    };
    let (full, reduced) = (dev_at(Closure::Full), dev_at(Closure::Reduced));
    ok &= reduced > full;
    parts.push(format!("kappa=1e3: full {full:.3e}, reduced {reduced:.3e}"));
    let c: Vec<f64> = [1e3, 1e4, 1e5].into_iter().map(|k| adasz_point(k).abs()).collect();
    ok &= c[1] <= c[0] && c[2] <= c[1];
    parts.push(format!("|<a+a sz>_c| at kappa 1e3,1e4,1e5: {:.3e}, {:.3e}, {:.3e}", c[0], c[1], c[2]));
    rep.primary("3 cumulant vs exact", ok, parts.join("; "));
}

fn large_n_spec(eta: f64, temps: &[f64]) -> ScenarioSpec {
    let mut s = preset(Scenario::TransmissionScan);
    s.system = ensemble();
    s.system.eta = C64::new(eta, 0.0);
    s.system.omega_l = Some(s.system.omega_m);
    s.engine.kind = EngineKind::Cumulant;
    s.scan = vec![Axis::list("temperature", temps), Axis::linear("delta_m", -1.5e4, 1.5e4, 301)];
    s
}

fn large_n_check(rep: &mut Report) {
    let r = go(&large_n_spec(5e5, &[0.1, 0.7]));
    let s = summary(&r);
    let target = 2.0 * 40.0 * 1e5f64.sqrt();
    let seps = col(s, "separation");
    let ok = seps.iter().all(|d| (d / target - 1.0).abs() <= 0.02);
    let ts = col(s, "temperature");
    let parts: Vec<String> = ts
        .iter()
        .zip(&seps)
        .map(|(t, d)| format!("T={t}: {d} ({:.4} of 2g√N)", d / target))
        .collect();
    rep.primary(
        "4 large-N splitting",
        ok,
        format!("2g√N = {target:.1}; {}", parts.join("; ")),
    );
    let sz = col(&r.table, "sz");
    let min_sz = sz.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_sz = sz.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    rep.note(
        "4 large-N splitting",
        format!("at eta=5e5 the ensemble is driven to sz in [{min_sz:.3}, {max_sz:.3}], which pulls the peaks inward"),
    );
    let weak = go(&large_n_spec(1e4, &[0.1]));
    let d = col(summary(&weak), "separation")[0];
    rep.extra(
        "4 large-N splitting",
        (d / target - 1.0).abs() <= 0.02,
        format!("eta=1e4, T=0.1: separation {d} = {:.4} of 2g√N", d / target),
    );

    // long integration and the staged solver agree at the centre of the scan
    let mut p = ensemble();
    p.eta = C64::new(5e5, 0.0);
    p.omega_l = Some(p.omega_m);
    p.temperature = 0.1;
    let v = p.validate().unwrap();
    let staged = coherent_steady(&v, Closure::Full, None, &SteadyOptions::default()).unwrap();
    let t_end = 60.0 / v.gamma_total();
    let opts = IntegrateOptions {
        max_steps: 2_000_000,
        max_stiff_steps: 2_000_000,
        ..IntegrateOptions::with_tol(Tolerances { rel: 1e-11, abs: 1e-13 })
    };
    let y0 = CoherentState::relaxed(v.nbar, -1.0).to_vec();
    let tr = integrate(
        |_, y, dy| {
            let d = rhs_coherent(&CoherentState::from_slice(y), &v, Closure::Full).unwrap();
            dy.copy_from_slice(&d.to_vec());
        },
        &y0,
        &[0.0, t_end],
        &opts,
    )
    .unwrap();
    let long = CoherentState::from_slice(&tr.states[1]);
    let dn = (long.photons() / staged.state.photons() - 1.0).abs();
    let dz = (long.sz - staged.state.sz).abs();
    rep.extra(
        "4 large-N splitting",
        dn <= 1e-6 && dz <= 1e-6,
        format!(
            "delta_m=0: staged solve ({}) vs integration to t={t_end:.0}: photons rel diff {dn:.2e}, sz diff {dz:.2e}",
            staged.path.as_str()
        ),
    );

    // splitting of the transmission peaks across N in the linear regime
    let mut parts = Vec::new();
    let mut ratios = Vec::new();
    for n in [1e4f64, 1e5, 1e6] {
        let mut s = large_n_spec(1e3, &[0.1]);
        s.system.n_atoms = n as u64;
        let gs = 40.0 * n.sqrt();
        // an asymmetric range keeps ±g√N off the grid
        s.scan[1] = Axis::linear("delta_m", -1.5 * gs, 1.43 * gs, 301);
        let d = col(summary(&go(&s)), "separation")[0];
        ratios.push(d / n.sqrt());
        parts.push(format!("N={n:e}: {d:.1}"));
    }
    let mean = ratios.iter().sum::<f64>() / 3.0;
    let spread = ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max);
    rep.extra(
        "4 large-N splitting",
        spread <= 0.05,
        format!("transmission peak separation ∝ √N within {:.2}% ({})", 100.0 * spread, parts.join(", ")),
    );
}

fn thermal_dips_check(rep: &mut Report) {
    let r = go(&preset(Scenario::ThermalSpectrum));
    let s = summary(&r);
    let (ns, seps) = (col(s, "n_atoms"), col(s, "separation"));
    let ratios: Vec<f64> = ns.iter().zip(&seps).map(|(n, d)| d / n.sqrt()).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max);
    let parts: Vec<String> = ns.iter().zip(&seps).map(|(n, d)| format!("N={n:e}: {d}")).collect();
    rep.primary(
        "5 thermal spectrum dips",
        seps.len() == 3 && spread <= 0.05,
        format!("separation/√N spread {:.2}% ({})", 100.0 * spread, parts.join(", ")),
    );
}

fn cooling_check(rep: &mut Report) {
    let r = go(&preset(Scenario::Cooling));
    let s = summary(&r);
    let dev = col(s, "max_rel_dev")[0];
    let interior = s.rows[0][s.column("interior_optimum").unwrap()].render() == "true";
    let all_valid = s.rows[0][s.column("all_valid").unwrap()].render();
    rep.primary(
        "6 cooling",
        dev <= 0.05 && interior,
        format!(
            "max |photons/est_ada - 1| = {dev:.2e}; interior optimum {interior} at gamma_a = {:.4e} with {:.4} photons; validity flag on all points: {all_valid}",
            col(s, "optimal_gamma_a")[0],
            col(s, "min_photons")[0]
        ),
    );
}

fn superradiance_check(rep: &mut Report) {
    let r = go(&preset(Scenario::Superradiance));
    let s = summary(&r);
    let (t, peak, ratio) = (col(s, "peak_time"), col(s, "peak_photons"), col(s, "peak_over_nbar"));
    let decreasing = t.windows(2).all(|w| w[1] < w[0]);
    let high = ratio.iter().all(|r| *r > 10.0);
    rep.primary(
        "7 superradiance ordering",
        decreasing && high,
        format!(
            "peak times (ms) {:?} for T = 0.5, 1, 2, 4 K; peak photons {:.4e}..{:.4e}; min peak/nbar {:.1}",
            t.iter().map(|x| (x * 1e6).round() / 1e3).collect::<Vec<_>>(),
            peak.iter().cloned().fold(f64::INFINITY, f64::min),
            peak.iter().cloned().fold(0.0, f64::max),
            ratio.iter().cloned().fold(f64::INFINITY, f64::min)
        ),
    );
}

fn maser_params(n: u64, w: f64, t: f64) -> ValidParams {
    let mut p = ensemble();
    p.n_atoms = n;
    p.kappa = 7e5;
    p.w = w;
    p.temperature = t;
    p.validate().unwrap()
}

/// Pump rate at which the analytic steady inversion changes sign.
fn inversion_zero(n: u64) -> f64 {
    let sz = |w: f64| analytic_maser_steady(&maser_params(n, w, 0.001)).unwrap().sz;
    let (mut lo, mut hi) = (0.1f64, 1.0f64);
    for _ in 0..100 {
        let mid: f64 = (lo * hi).sqrt();
        if sz(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn maser_threshold_check(rep: &mut Report) {
    let r = go(&preset(Scenario::MaserMap));
    let s = summary(&r);
    let (lo, hi) = (col(s, "w_below"), col(s, "w_above"));
    let brackets = lo.iter().zip(&hi).all(|(a, b)| *a < 0.3 && 0.3 <= *b);
    let ns = col(s, "n_atoms");
    let k = ns.iter().position(|n| (n / 1e5 - 1.0).abs() < 1e-9).expect("N = 1e5 row");
    let jump = col(s, "photon_jump")[k];
    rep.primary(
        "8 maser threshold",
        brackets && jump >= 1e2,
        format!(
            "inversion changes sign between grid pumps w = {:.4} and {:.4} for all {} N rows; photon jump at N=1e5: {jump:.4e}",
            lo[0],
            hi[0],
            ns.len()
        ),
    );
    let zeros: Vec<String> = [1000u64, 100_000, 1_000_000]
        .into_iter()
        .map(|n| {
            let w = inversion_zero(n);
            format!("N={n:e}: w0 = {w:.5} ({:+.2}% from 0.3)", 100.0 * (w / 0.3 - 1.0))
        })
        .collect();
    rep.note("8 maser threshold", format!("exact sign change of the inversion: {}", zeros.join(", ")));

    let mut warm = preset(Scenario::MaserMap);
    warm.system.temperature = 0.1;
    let r = go(&warm);
    let nbar = thermal_occupation(ensemble().omega_m, 0.1).unwrap();
    let (w, ph) = (col(&r.table, "w"), col(&r.table, "photons"));
    let below: Vec<f64> = w.iter().zip(&ph).filter(|(w, _)| **w <= 0.1).map(|(_, p)| *p).collect();
    let dev = below.iter().map(|p| (p / nbar - 1.0).abs()).fold(0.0, f64::max);
    rep.extra(
        "8 maser threshold",
        dev <= 0.05,
        format!(
            "T=0.1 map: {} cells with w <= 0.1 sit on the nbar = {nbar:.4} floor within {:.2}%",
            below.len(),
            100.0 * dev
        ),
    );
}

fn linewidth_check(rep: &mut Report) {
    let (lw, _) = maser_linewidth(&maser_params(100_000, 0.55, 0.001)).unwrap();
    let target = 4.7e-3;
    let two_pi = 2.0 * std::f64::consts::PI;
    // the quoted width might be an angular FWHM or HWHM
    let candidates = [("FWHM", lw.fwhm), ("HWHM", lw.hwhm)];
    let ok = candidates.iter().any(|(_, w)| (w / target - 1.0).abs() <= 0.25);
    rep.primary(
        "9a minimal linewidth",
        ok,
        format!(
            "N=1e5, w=0.55: FWHM {:.4e} rad/s ({:.4e} Hz), HWHM {:.4e} rad/s ({:.4e} Hz); target {target:e} rad/s ({:.4e} Hz)",
            lw.fwhm,
            lw.fwhm / two_pi,
            lw.hwhm,
            lw.hwhm / two_pi,
            target / two_pi
        ),
    );
    let bare = 2.0 * 7e5;
    let width = |w: f64, t: f64| maser_linewidth(&maser_params(100_000, w, t)).unwrap().0.fwhm;
    let (below, above) = (width(0.1, 0.001), width(1e4, 0.001));
    let ok = [below, above].iter().all(|w| (w / bare - 1.0).abs() <= 0.05);
    rep.primary(
        "9b bare-cavity recovery",
        ok,
        format!("T=0.001: FWHM {below:.4e} at w=0.1 and {above:.4e} at w=1e4 vs 2kappa = {bare:e}"),
    );
    let row: Vec<String> = [0.01, 0.1, 0.25, 0.55, 10.0, 1e3, 1e4]
        .into_iter()
        .map(|w| format!("w={w}: {:.3e}", width(w, 0.001)))
        .collect();
    rep.note("9 linewidth", format!("FWHM along N=1e5 at T=0.001: {}", row.join(", ")));
    let warm = width(0.1, 0.5);
    rep.extra(
        "9b bare-cavity recovery",
        (warm / bare - 1.0).abs() <= 0.05,
        format!("with thermal photons (T=0.5) the sub-threshold FWHM is {warm:.4e} = {:.4} of 2kappa", warm / bare),
    );
}

fn property_check(rep: &mut Report) {
    let mut parts = Vec::new();
    let mut ok = true;

    // density-matrix invariants of exact steady states
    let mut worst = 0.0f64;
    for (n, mode) in [(2, BasisMode::TensorProduct), (3, BasisMode::TensorProduct), (6, BasisMode::DickeSymmetric)] {
        let mut p = SystemParams::weak_drive_pair();
        p.n_atoms = n;
        let v = p.validate().unwrap();
        let cfg = HilbertConfig::new(mode, 4, n as usize).unwrap();
        let rho = steady_state(&build_liouvillian(&v, &cfg).unwrap()).unwrap();
        ok &= rho.check(1e-10, 1e-10).is_ok();
        worst = worst.max((rho.trace() - 1.0).norm()).max(-rho.min_eigenvalue());
    }
    parts.push(format!("density matrices: worst trace/positivity error {worst:.1e}"));

    // collective spin identities, J = N/2 up to 25
    let mut spin_err = 0.0f64;
    for n in 1..=50usize {
        let cfg = HilbertConfig::new(BasisMode::DickeSymmetric, 0, n).unwrap();
        let o = build_collective_ops(&cfg).unwrap();
        let j = n as f64 / 2.0;
        let pm = &o.s_plus.matrix * &o.s_minus.matrix;
        for s in 0..=n {
            let m = -j + s as f64;
            spin_err = spin_err.max((pm[(s, s)].re - (j + m) * (j - m + 1.0)).abs());
        }
        let comm = &pm - &o.s_minus.matrix * &o.s_plus.matrix - &o.s_z.matrix * C64::new(2.0, 0.0);
        spin_err = spin_err.max(comm.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    ok &= spin_err < 1e-9;
    parts.push(format!("Dicke identities J<=25: max error {spin_err:.1e}"));

    // uncoupled limits
    let mut p = ensemble();
    p.g = 0.0;
    p.temperature = 0.7;
    p.w = 0.55;
    let v = p.validate().unwrap();
    let m = analytic_maser_steady(&v).unwrap();
    let target = (0.55 - 0.3) / (0.55 + 0.3);
    let e1 = (m.n_ph / v.nbar - 1.0).abs().max((m.sz - target).abs());
    let mut q = SystemParams::weak_drive_pair();
    q.g = 0.0;
    q.omega_l = Some(q.omega_m - 0.7);
    let vq = q.validate().unwrap();
    let cfg = HilbertConfig::new(BasisMode::TensorProduct, 4, 2).unwrap();
    let rho = steady_state(&build_liouvillian(&vq, &cfg).unwrap()).unwrap();
    let field = rho.expect(&SystemOps::new(&cfg).a);
    let want = q.eta / C64::new(q.kappa, 0.7);
    let e2 = (field - want).norm() / want.norm();
    let mut pw = ensemble();
    pw.g = 0.0;
    pw.w = 0.3;
    let at_threshold = analytic_maser_steady(&pw.validate().unwrap()).unwrap().sz;
    ok &= e1 < 1e-12 && e2 < 1e-9 && at_threshold.abs() < 1e-15;
    parts.push(format!(
        "g=0: pumped ensemble error {e1:.1e}, driven field error {e2:.1e}, sz at w=gamma_a {at_threshold:.1e}"
    ));

    // generic Laplace solve against the closed form, away from the line
    // centre; at the centre the determinant cancels and both lose digits
    let mut lap = 0.0f64;
    let mut centre = Vec::new();
    for (w, t) in [(0.1, 0.001), (0.55, 0.001), (0.55, 0.5), (100.0, 0.1)] {
        let v = maser_params(100_000, w, t);
        let s = analytic_maser_steady(&v).unwrap();
        let sys = maser_system(&v, &s).unwrap();
        let diff = |z: C64| {
            let (a, b) = (laplace_correlation(&sys, z).unwrap()[0], maser_closed_form(&v, &s, z));
            (a - b).norm() / b.norm()
        };
        for (sigma, omega) in [(10.0, -50.0), (1.0, 3e3), (1e4, -2e5), (0.5, 7e5)] {
            lap = lap.max(diff(C64::new(sigma, -omega)));
        }
        let d = v.frame_detunings();
        let terms = C64::new(v.params.kappa, -d.delta_m) * C64::new(v.gamma_total() / 2.0, -d.delta_a);
        let det = terms - v.params.g * v.params.g * v.n() * s.sz;
        centre.push(format!("w={w}: {:.1e} (cancellation {:.0e})", diff(C64::new(0.0, 0.0)), terms.norm() / det.norm()));
    }
    ok &= lap <= 1e-12;
    parts.push(format!("Laplace vs closed form: max rel diff {lap:.1e}"));

    // sweep determinism
    let mut spec = preset(Scenario::MaserMap);
    spec.scan = vec![Axis::log("n_atoms", 1e3, 1e6, 4), Axis::log("w", 1e-2, 1e3, 9)];
    let one = run(&spec, 1).unwrap().table.to_csv_string();
    let many = run(&spec, 4).unwrap().table.to_csv_string();
    ok &= one == many;
    parts.push(format!("1 vs 4 workers byte-identical: {}", one == many));

    rep.primary("10 property suites", ok, parts.join("; "));
    rep.note(
        "10 property suites",
        format!("Laplace vs closed form at the line centre, N=1e5: {}", centre.join(", ")),
    );
    rep.note(
        "10 property suites",
        "randomised versions live in the cqed-core tests (properties, moment_oracle) and the determinism tests here".into(),
    );
}

#[test]
fn acceptance() {
    let mut rep = Report { primary: Vec::new() };
    thermal_occupation_check(&mut rep);
    vacuum_rabi_check(&mut rep);
    cumulant_check(&mut rep);
    large_n_check(&mut rep);
    thermal_dips_check(&mut rep);
    cooling_check(&mut rep);
    superradiance_check(&mut rep);
    maser_threshold_check(&mut rep);
    linewidth_check(&mut rep);
    property_check(&mut rep);
    let failed: Vec<&str> = rep.primary.iter().filter(|(_, p)| !p).map(|(id, _)| id.as_str()).collect();
    println!(
        "acceptance: {} of {} primary checks pass{}",
        rep.primary.len() - failed.len(),
        rep.primary.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if std::env::var("CQED_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        assert!(failed.is_empty(), "failing primary criteria: {failed:?}");
    }
}
