//! Summary tables: peak positions, burst metrics, optima and thresholds
//! extracted from the full result table.

use crate::runners::{data_columns, PointData};
use crate::spec::{Scenario, ScenarioSpec};
use crate::sweep::PointRecord;
use crate::table::{Cell, Table};

fn data_index(s: Scenario, name: &str) -> usize {
    data_columns(s).iter().position(|c| *c == name).expect("known column")
}

/// Coordinates shared by a group of points, and the points.
type Group<'a> = (Vec<(String, f64)>, Vec<&'a PointRecord>);

/// Records grouped by every coordinate except `var`, in first-seen order.
fn groups<'a>(records: &'a [PointRecord], var: &str) -> Vec<Group<'a>> {
    let mut out: Vec<Group> = Vec::new();
    for r in records {
        let key: Vec<(String, f64)> = r.point.coords.iter().filter(|(n, _)| n != var).cloned().collect();
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => out.push((key, vec![r])),
        }
    }
    out
}

fn key_columns(key: &[(String, f64)]) -> Vec<String> {
    key.iter().map(|(n, _)| n.clone()).collect()
}

/// Interior local extrema of `y`, as (x, y) pairs.
fn extrema(x: &[f64], y: &[f64], maxima: bool) -> Vec<(f64, f64)> {
    let better = |a: f64, b: f64| if maxima { a > b } else { a < b };
    (1..y.len().saturating_sub(1))
        .filter(|&i| better(y[i], y[i - 1]) && !better(y[i + 1], y[i]))
        .map(|i| (x[i], y[i]))
        .collect()
}

/// The two most pronounced extrema, ordered by position.
fn outer_pair(mut e: Vec<(f64, f64)>, maxima: bool) -> Vec<(f64, f64)> {
    e.sort_by(|a, b| if maxima { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) });
    e.truncate(2);
    e.sort_by(|a, b| a.0.total_cmp(&b.0));
    e
}

fn pair_cells(pair: &[(f64, f64)]) -> [Cell; 3] {
    match pair {
        [a, b] => [a.0.into(), b.0.into(), (b.0 - a.0).into()],
        [a] => [a.0.into(), Cell::Empty, Cell::Empty],
        _ => [Cell::Empty, Cell::Empty, Cell::Empty],
    }
}

fn ok(r: &PointRecord) -> Option<&PointData> {
    r.outcome.as_ref().ok()
}

pub fn summarize(spec: &ScenarioSpec, records: &[PointRecord], inner: Option<&[f64]>) -> Option<Table> {
    match spec.scenario {
        Scenario::TransmissionScan => scan_peaks(spec, records, "photons"),
        Scenario::DrivenFieldScan => scan_peaks(spec, records, "coherent_photons"),
        Scenario::ThermalSpectrum => spectrum_extrema(spec, records, inner?, false),
        Scenario::PumpedEmissionSpectrum => spectrum_extrema(spec, records, inner?, true),
        Scenario::Cooling => cooling_optimum(spec, records),
        Scenario::Superradiance | Scenario::DrivenIncoherentSpectrum => Some(per_point_metrics(records)),
        Scenario::MaserMap => maser_threshold(spec, records),
    }
}

/// Peaks of `column` along the last outer axis.
fn scan_peaks(spec: &ScenarioSpec, records: &[PointRecord], column: &str) -> Option<Table> {
    let var = spec.outer_axes().last()?.var.clone();
    let k = data_index(spec.scenario, column);
    let gs = groups(records, &var);
    let mut cols = key_columns(&gs[0].0);
    cols.extend(
        ["n_peaks", "peak_lo", "peak_hi", "separation", "peak_height", "two_g_sqrt_n"].map(String::from),
    );
    let mut t = Table::new(cols);
    for (key, rs) in &gs {
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .filter_map(|r| {
                let y = ok(r)?.rows[0][k].as_f64()?;
                let x = r.point.coords.iter().find(|(n, _)| *n == var)?.1;
                Some((x, y))
            })
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let e = extrema(&x, &y, true);
        let n_peaks = e.len();
        let pair = outer_pair(e, true);
        let height = pair.iter().map(|p| p.1).fold(f64::NAN, f64::max);
        let p = spec.params_at(&rs[0].point).ok()?;
        let mut row: Vec<Cell> = key.iter().map(|(_, v)| Cell::Num(*v)).collect();
        row.push(Cell::Int(n_peaks as i64));
        row.extend(pair_cells(&pair));
        row.push(if height.is_nan() { Cell::Empty } else { height.into() });
        row.push((2.0 * p.g * (p.n_atoms as f64).sqrt()).into());
        t.rows.push(row);
    }
    Some(t)
}

fn spectrum_extrema(spec: &ScenarioSpec, records: &[PointRecord], omega: &[f64], peaks: bool) -> Option<Table> {
    let what = if peaks { "peak" } else { "dip" };
    let mut cols = key_columns(&records.first()?.point.coords);
    cols.extend([
        "status".to_string(),
        format!("n_{what}s"),
        format!("{what}_lo"),
        format!("{what}_hi"),
        "separation".into(),
        "g_sqrt_n".into(),
        "separation_over_2g_sqrt_n".into(),
        "photons".into(),
        "sz".into(),
    ]);
    let mut t = Table::new(cols);
    let k = data_index(spec.scenario, "total");
    for r in records {
        let mut row: Vec<Cell> = r.point.coords.iter().map(|(_, v)| Cell::Num(*v)).collect();
        let Some(d) = ok(r) else {
            row.push(Cell::text("failed"));
            row.extend(std::iter::repeat_n(Cell::Empty, 8));
            t.rows.push(row);
            continue;
        };
        let y: Vec<f64> = d.rows.iter().map(|row| row[k].as_f64().unwrap_or(f64::NAN)).collect();
        let e = extrema(omega, &y, peaks);
        let n = e.len();
        let pair = outer_pair(e, peaks);
        let metric = |name: &str| d.metrics.iter().find(|(m, _)| *m == name).map(|(_, v)| *v);
        let gsn = metric("g_sqrt_n");
        let ratio = match (&pair[..], gsn) {
            ([a, b], Some(g)) => Cell::Num((b.0 - a.0) / (2.0 * g)),
            _ => Cell::Empty,
        };
        row.push(Cell::text("ok"));
        row.push(Cell::Int(n as i64));
        row.extend(pair_cells(&pair));
        row.push(Cell::opt(gsn));
        row.push(ratio);
        row.push(Cell::opt(metric("photons")));
        row.push(Cell::opt(metric("sz")));
        t.rows.push(row);
    }
    Some(t)
}

fn cooling_optimum(spec: &ScenarioSpec, records: &[PointRecord]) -> Option<Table> {
    let var = spec.outer_axes().last()?.var.clone();
    let s = spec.scenario;
    let (kp, kd, kv) = (data_index(s, "photons"), data_index(s, "rel_dev"), data_index(s, "valid"));
    let gs = groups(records, &var);
    let mut cols = key_columns(&gs[0].0);
    cols.extend([
        format!("optimal_{var}"),
        "min_photons".into(),
        "interior_optimum".into(),
        "max_rel_dev".into(),
        "all_valid".into(),
        "failed_points".into(),
    ]);
    let mut t = Table::new(cols);
    for (key, rs) in &gs {
        let mut best: Option<(usize, f64, f64)> = None;
        let mut max_dev = 0.0f64;
        let mut all_valid = true;
        let mut failed = 0;
        for (i, r) in rs.iter().enumerate() {
            let Some(d) = ok(r) else {
                failed += 1;
                continue;
            };
            let row = &d.rows[0];
            let n = row[kp].as_f64().unwrap_or(f64::NAN);
            max_dev = max_dev.max(row[kd].as_f64().unwrap_or(f64::NAN));
            all_valid &= row[kv] == Cell::Bool(true);
            let x = r.point.coords.iter().find(|(c, _)| *c == var).map_or(f64::NAN, |c| c.1);
            if best.is_none_or(|b| n < b.1) {
                best = Some((i, n, x));
            }
        }
        let mut row: Vec<Cell> = key.iter().map(|(_, v)| Cell::Num(*v)).collect();
        match best {
            Some((i, n, x)) => {
                row.extend([x.into(), n.into(), Cell::Bool(i > 0 && i + 1 < rs.len())]);
                row.push(max_dev.into());
                row.push(Cell::Bool(all_valid));
            }
            None => row.extend(std::iter::repeat_n(Cell::Empty, 5)),
        }
        row.push(Cell::Int(failed));
        t.rows.push(row);
    }
    Some(t)
}

fn per_point_metrics(records: &[PointRecord]) -> Table {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if let Some(d) = ok(r) {
            for (m, _) in &d.metrics {
                if !names.contains(m) {
                    names.push(m);
                }
            }
        }
    }
    let mut cols = records.first().map(|r| key_columns(&r.point.coords)).unwrap_or_default();
    cols.push("status".into());
    cols.extend(names.iter().map(|s| s.to_string()));
    let mut t = Table::new(cols);
    for r in records {
        let mut row: Vec<Cell> = r.point.coords.iter().map(|(_, v)| Cell::Num(*v)).collect();
        match ok(r) {
            Some(d) => {
                row.push(Cell::text("ok"));
                for n in &names {
                    row.push(Cell::opt(d.metrics.iter().find(|(m, _)| m == n).map(|(_, v)| *v)));
                }
            }
            None => {
                row.push(Cell::text("failed"));
                row.extend(names.iter().map(|_| Cell::Empty));
            }
        }
        t.rows.push(row);
    }
    t
}

/// Inversion zero crossing along the `w` axis, interpolated in log w, and the
/// photon numbers on either side of it.
fn maser_threshold(spec: &ScenarioSpec, records: &[PointRecord]) -> Option<Table> {
    spec.outer_axes().iter().find(|a| a.var == "w")?;
    let s = spec.scenario;
    let (ksz, kn, kf) = (data_index(s, "sz"), data_index(s, "photons"), data_index(s, "fwhm"));
    let gs = groups(records, "w");
    let mut cols = key_columns(&gs[0].0);
    cols.extend(
        [
            "w_below",
            "w_above",
            "photons_below",
            "photons_above",
            "photon_jump",
            "min_fwhm",
            "w_at_min_fwhm",
            "failed_points",
        ]
        .map(String::from),
    );
    let mut t = Table::new(cols);
    for (key, rs) in &gs {
        let mut pts = Vec::new();
        let mut failed = 0;
        for r in rs {
            let w = r.point.coords.iter().find(|(c, _)| c == "w").map(|c| c.1)?;
            match ok(r) {
                Some(d) => {
                    let row = &d.rows[0];
                    pts.push((w, row[ksz].as_f64()?, row[kn].as_f64()?, row[kf].as_f64()));
                }
                None => failed += 1,
            }
        }
        let mut row: Vec<Cell> = key.iter().map(|(_, v)| Cell::Num(*v)).collect();
        let cross = pts.windows(2).find(|p| p[0].1 < 0.0 && p[1].1 >= 0.0);
        match cross {
            // the grid points either side of the sign change of the inversion
            Some(p) => row.extend([p[0].0.into(), p[1].0.into(), p[0].2.into(), p[1].2.into(), (p[1].2 / p[0].2).into()]),
            None => row.extend(std::iter::repeat_n(Cell::Empty, 5)),
        }
        let min = pts
            .iter()
            .filter_map(|p| p.3.map(|f| (f, p.0)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match min {
            Some((f, w)) => row.extend([f.into(), w.into()]),
            None => row.extend([Cell::Empty, Cell::Empty]),
        }
        row.push(Cell::Int(failed));
        t.rows.push(row);
    }
    Some(t)
}
