//! CSV time series with a `#`-comment metadata header.
//!
//! Numbers are written with 17 significant digits so they parse back to the
//! same `f64`. Columns a solver does not model are left empty.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::experiments::{RelaxationFit, SweepPoint};
use crate::series::{SeriesMeta, Solver, TimeSeries};

pub const HEADER: [&str; 9] = ["t_s", "jz1", "jz2", "jz_sum", "a12", "jz1jz2", "trace", "jtot2", "method"];

/// Definition of the relaxation time, echoed into every sweep report.
pub const TAU_DEFINITION: &str =
    "first t with |jz1(t) - jz1_ss| <= exp(-1) |jz1(0) - jz1_ss|, linear interpolation between samples";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_series<W: Write>(mut w: W, series: &TimeSeries) -> Result<()> {
    let m = &series.meta;
    writeln!(w, "# spindomains time series")?;
    if let Some(sc) = &series.scenario {
        writeln!(w, "# scenario = {}", sc.name)?;
    }
    writeln!(w, "# solver = {}", series.solver.as_str())?;
    writeln!(w, "# n1 = {}", m.n1)?;
    writeln!(w, "# n2 = {}", m.n2)?;
    writeln!(w, "# config = {}", m.config)?;
    writeln!(w, "# temperature_mk = {}", num(m.temperature_k * 1e3))?;
    writeln!(w, "# nbar = {}", num(m.nbar))?;
    writeln!(w, "# gamma_hz = {}", num(m.gamma))?;
    writeln!(w, "# spin_frequency_hz = {}", num(m.spin_frequency_hz))?;
    writeln!(w, "# tau_observable = {}", m.tau_observable)?;
    writeln!(w, "# frame_dependent_coherences = {}", m.frame_dependent_coherences)?;
    writeln!(w, "# converged = {}", series.converged)?;
    if let Some(t) = series.t_star_s {
        writeln!(w, "# t_star_s = {}", num(t))?;
    }
    if let Some(v) = &series.min_eigenvalue {
        let worst = v.iter().copied().fold(f64::INFINITY, f64::min);
        writeln!(w, "# min_block_eigenvalue = {}", num(worst))?;
    }
    if let Some(v) = &series.hermiticity_error {
        let worst = v.iter().copied().fold(0.0, f64::max);
        writeln!(w, "# max_hermiticity_error = {}", num(worst))?;
    }
    writeln!(w, "{}", HEADER.join(","))?;

    let opt = |col: &Option<Vec<f64>>, i: usize| col.as_ref().and_then(|v| v.get(i)).map_or(String::new(), |&x| num(x));
    for i in 0..series.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            num(series.times_s[i]),
            num(series.jz1[i]),
            num(series.jz2[i]),
            num(series.jz_sum[i]),
            num(series.a12[i]),
            num(series.jz1jz2[i]),
            opt(&series.trace, i),
            opt(&series.jtot2, i),
            series.solver.as_str()
        )?;
    }
    Ok(())
}

/// Parses a file written by [`write_series`]. The per-sample positivity and
/// hermiticity columns are not stored, so they come back as `None`.
pub fn read_series<R: BufRead>(r: R) -> Result<TimeSeries> {
    let mut meta = std::collections::HashMap::new();
    let mut header_seen = false;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let bad = |msg: &str| Error::Parse(format!("CSV line {}: {msg}", lineno + 1));
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if !header_seen {
            if cells != HEADER {
                return Err(bad(&format!("expected header {}", HEADER.join(","))));
            }
            header_seen = true;
            continue;
        }
        if cells.len() != HEADER.len() {
            return Err(bad(&format!("expected {} cells, got {}", HEADER.len(), cells.len())));
        }
        rows.push(cells);
    }
    if !header_seen {
        return Err(Error::Parse("CSV has no header row".into()));
    }

    let get = |k: &str| meta.get(k).cloned().ok_or_else(|| Error::Parse(format!("CSV metadata lacks `{k}`")));
    let float =
        |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad `{k}` in CSV metadata"))) };
    let int =
        |k: &str| -> Result<u32> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad `{k}` in CSV metadata"))) };
    let flag =
        |k: &str| -> Result<bool> { get(k)?.parse().map_err(|_| Error::Parse(format!("bad `{k}` in CSV metadata"))) };
    let solver: Solver = get("solver")?.parse()?;

    let mut series = TimeSeries::new(
        solver,
        SeriesMeta {
            n1: int("n1")?,
            n2: int("n2")?,
            gamma: float("gamma_hz")?,
            nbar: float("nbar")?,
            temperature_k: float("temperature_mk")? / 1e3,
            spin_frequency_hz: float("spin_frequency_hz")?,
            config: get("config")?,
            tau_observable: get("tau_observable")?,
            frame_dependent_coherences: flag("frame_dependent_coherences")?,
        },
    );
    series.converged = flag("converged")?;
    series.t_star_s = meta.contains_key("t_star_s").then(|| float("t_star_s")).transpose()?;
    series.min_eigenvalue = None;
    series.hermiticity_error = None;
    let exact = solver == Solver::Exact;

    for (i, row) in rows.iter().enumerate() {
        let f = |c: usize| -> Result<f64> {
            row[c].parse().map_err(|_| {
                Error::Parse(format!("row {}: `{}` is not a number in column {}", i + 1, row[c], HEADER[c]))
            })
        };
        if row[8] != solver.as_str() {
            return Err(Error::Parse(format!("row {}: method `{}` differs from metadata", i + 1, row[8])));
        }
        let t = f(0)?;
        series.times_s.push(t);
        series.jz1.push(f(1)?);
        series.jz2.push(f(2)?);
        series.jz_sum.push(f(3)?);
        series.a12.push(f(4)?);
        series.jz1jz2.push(f(5)?);
        for (c, col) in [(6, &mut series.trace), (7, &mut series.jtot2)] {
            match (exact, row[c].is_empty()) {
                (true, false) => col.as_mut().expect("exact column").push(f(c)?),
                (false, true) => {}
                _ => {
                    return Err(Error::Parse(format!(
                        "row {}: column {} must be {} for {} series",
                        i + 1,
                        HEADER[c],
                        if exact { "filled" } else { "empty" },
                        solver.as_str()
                    )))
                }
            }
        }
    }
    series.check_shape().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(series)
}

pub fn write_sweep<W: Write>(mut w: W, points: &[SweepPoint]) -> Result<()> {
    writeln!(w, "N,tau_s")?;
    for p in points {
        if let Ok(t) = p.tau_s {
            writeln!(w, "{},{}", p.n, num(t))?;
        }
    }
    Ok(())
}

pub fn write_fit<W: Write>(mut w: W, fit: &RelaxationFit) -> Result<()> {
    writeln!(w, "model = tau_N = a/N + b")?;
    writeln!(w, "a = {}", num(fit.a))?;
    writeln!(w, "b = {}", num(fit.b))?;
    writeln!(w, "residual = {}", num(fit.residual_norm))?;
    writeln!(w, "r_squared = {}", num(fit.r_squared))?;
    writeln!(w, "n_range = {}..{}", fit.n_min, fit.n_max)?;
    writeln!(w, "points = {}", fit.taus.len())?;
    writeln!(w, "tau_definition = {TAU_DEFINITION}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Observables;
    use proptest::prelude::*;

    fn meta() -> SeriesMeta {
        SeriesMeta {
            n1: 3,
            n2: 2,
            gamma: 0.01,
            nbar: 0.431_091_2,
            temperature_k: 0.4,
            spin_frequency_hz: 1e10,
            config: "custom(m1=1/2,m2=-1)".into(),
            tau_observable: "jz1".into(),
            frame_dependent_coherences: true,
        }
    }

    fn build(solver: Solver, rows: &[[f64; 7]]) -> TimeSeries {
        let mut s = TimeSeries::new(solver, meta());
        for (k, r) in rows.iter().enumerate() {
            let exact = solver == Solver::Exact;
            s.push(
                k as f64 + 0.5 * r[0].abs().fract(),
                &Observables {
                    jz1: r[1],
                    jz2: r[2],
                    a12: r[3],
                    jz1jz2: r[4],
                    trace: exact.then_some(r[5]),
                    jtot2: exact.then_some(r[6]),
                },
            );
        }
        s.min_eigenvalue = None;
        s.hermiticity_error = None;
        s.converged = true;
        s.t_star_s = Some(1.5);
        s
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in prop::collection::vec(prop::array::uniform7(-1e6f64..1e6), 1..40),
            exact in any::<bool>(),
        ) {
            let solver = if exact { Solver::Exact } else { Solver::Closure };
            let s = build(solver, &rows);
            let mut buf = Vec::new();
            write_series(&mut buf, &s).unwrap();
            let back = read_series(buf.as_slice()).unwrap();
            prop_assert_eq!(back.times_s.len(), s.times_s.len());
            for (a, b) in back.times_s.iter().zip(&s.times_s).chain(back.jz1.iter().zip(&s.jz1)).chain(back.jz1jz2.iter().zip(&s.jz1jz2)) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(&back.meta, &s.meta);
            prop_assert_eq!(&back.trace, &s.trace);
            prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn closure_rows_leave_exact_columns_empty() {
        let s = build(Solver::Closure, &[[0.0, 1.0, -1.0, 0.0, -1.0, 0.0, 0.0]]);
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.ends_with(",,,closure"), "{last}");
        assert!(text.contains("# nbar = 4.3109120000000001e-1"), "{text}");
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(read_series("t_s,jz1\n1,2\n".as_bytes()).is_err());
        let s = build(Solver::Exact, &[[0.0; 7]]);
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(",exact", ",closure");
        assert!(read_series(text.as_bytes()).is_err());
    }
}
