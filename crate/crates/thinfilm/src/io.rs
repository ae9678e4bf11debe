//! Plain-text and binary output formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! reading a CSV back reproduces every value bit for bit and identical runs
//! produce byte-identical files. Readers skip lines starting with `#`, so
//! files may carry provenance comments ahead of the header.

use std::io::{self, BufRead, Read, Write};

use serde::Serialize;

use crate::functionals::FunctionalRecord;
use crate::laugesen::RegionScan;
use crate::solver::State;

pub const BINARY_MAGIC: &[u8; 4] = b"TFL1";

/// Header `t,h0,...,h{N-1}`.
pub fn write_trajectory_header<W: Write>(out: &mut W, cells: usize) -> io::Result<()> {
    write!(out, "t")?;
    for i in 0..cells {
        write!(out, ",h{i}")?;
    }
    writeln!(out)
}

pub fn write_trajectory_row<W: Write>(out: &mut W, state: &State) -> io::Result<()> {
    write!(out, "{}", state.t)?;
    for v in &state.h {
        write!(out, ",{v}")?;
    }
    writeln!(out)
}

pub fn write_trajectory_csv<W: Write>(out: &mut W, states: &[State]) -> io::Result<()> {
    let cells = states.first().map(|s| s.h.len()).unwrap_or(0);
    write_trajectory_header(out, cells)?;
    for s in states {
        write_trajectory_row(out, s)?;
    }
    Ok(())
}

/// Writes `# key: value` comment lines.
pub fn write_comments<W: Write>(out: &mut W, comments: &[(&str, &str)]) -> io::Result<()> {
    for (k, v) in comments {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

fn data_lines<R: BufRead>(input: R) -> impl Iterator<Item = io::Result<String>> {
    input.lines().filter(|l| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()))
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_trajectory_csv<R: BufRead>(input: R) -> io::Result<Vec<State>> {
    let mut lines = data_lines(input);
    let header = lines.next().ok_or_else(|| invalid("empty trajectory file"))??;
    let cols = header.split(',').count();
    let mut states = Vec::new();
    for line in lines {
        let line = line?;
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| invalid(format!("bad number {v:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != cols {
            return Err(invalid(format!("row has {} columns, header has {cols}", vals.len())));
        }
        states.push(State { t: vals[0], h: vals[1..].to_vec() });
    }
    Ok(states)
}

/// Binary layout: magic `TFL1`, cell count as `u64`, then for each
/// snapshot `t` followed by `N` heights. Everything little-endian.
pub fn write_binary_header<W: Write>(out: &mut W, cells: usize) -> io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(cells as u64).to_le_bytes())
}

pub fn write_binary_snapshot<W: Write>(out: &mut W, state: &State) -> io::Result<()> {
    out.write_all(&state.t.to_le_bytes())?;
    for v in &state.h {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_trajectory_binary<W: Write>(out: &mut W, states: &[State]) -> io::Result<()> {
    write_binary_header(out, states.first().map(|s| s.h.len()).unwrap_or(0))?;
    for s in states {
        write_binary_snapshot(out, s)?;
    }
    Ok(())
}

pub fn read_trajectory_binary<R: Read>(mut input: R) -> io::Result<Vec<State>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[..4] != BINARY_MAGIC {
        return Err(invalid("missing TFL1 header"));
    }
    let cells = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
    let body = &bytes[12..];
    let record = 8 * (cells + 1);
    if body.len() % record != 0 {
        return Err(invalid("truncated snapshot"));
    }
    let floats: Vec<f64> =
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(floats.chunks_exact(cells + 1).map(|c| State { t: c[0], h: c[1..].to_vec() }).collect())
}

pub fn write_functionals_header<W: Write>(out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", FunctionalRecord::COLUMNS.join(","))
}

pub fn write_functionals_row<W: Write>(out: &mut W, record: &FunctionalRecord) -> io::Result<()> {
    let vals = record.values();
    let parts: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
    writeln!(out, "{}", parts.join(","))
}

pub fn write_functionals_csv<W: Write>(out: &mut W, records: &[FunctionalRecord]) -> io::Result<()> {
    write_functionals_header(out)?;
    for r in records {
        write_functionals_row(out, r)?;
    }
    Ok(())
}

pub fn read_functionals_csv<R: BufRead>(input: R) -> io::Result<Vec<FunctionalRecord>> {
    let mut lines = data_lines(input);
    let header = lines.next().ok_or_else(|| invalid("empty functionals file"))??;
    if header != FunctionalRecord::COLUMNS.join(",") {
        return Err(invalid("unexpected functionals header"));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>().map_err(|e| invalid(format!("bad number {x:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if v.len() != FunctionalRecord::COLUMNS.len() {
            return Err(invalid("wrong column count"));
        }
        out.push(FunctionalRecord {
            t: v[0],
            mass: v[1],
            surface_energy: v[2],
            e0: v[3],
            e0_alpha: v[4],
            e_eps_alpha: v[5],
            entropy: v[6],
            r2: v[7],
            s2: v[8],
            l2: v[9],
            n2: v[10],
            dissipation: v[11],
            reg_dissipation: v[12],
            eps_term: v[13],
            min_h: v[14],
            sup_dev: v[15],
        });
    }
    Ok(out)
}

/// One JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(out: &mut W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, item).map_err(io::Error::other)?;
        writeln!(out)?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns `n,alpha,feasible,kappa_lo,kappa_hi,mu_flag`; the interval
/// columns are empty for infeasible points.
pub fn write_region_csv<W: Write>(out: &mut W, scan: &RegionScan) -> io::Result<()> {
    writeln!(out, "n,alpha,feasible,kappa_lo,kappa_hi,mu_flag")?;
    for p in &scan.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.n,
            p.alpha,
            p.feasible as u8,
            opt(p.kappa_interval.map(|iv| iv.lo)),
            opt(p.kappa_interval.map(|iv| iv.hi)),
            p.mu_flag as u8
        )?;
    }
    Ok(())
}

/// Ordered `n,alpha` pairs.
pub fn write_polyline_csv<W: Write>(out: &mut W, points: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "n,alpha")?;
    for (n, a) in points {
        writeln!(out, "{n},{a}")?;
    }
    Ok(())
}

/// gnuplot script drawing the feasible raster, its outline and the
/// reference line from the files written alongside it.
pub fn gnuplot_script(region_csv: &str, boundary_csv: &str, reference_csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set xlabel 'n'\n\
         set ylabel 'alpha'\n\
         set key outside\n\
         plot '{region_csv}' every ::1 using 1:($3 == 1 ? $2 : 1/0) with points pt 7 ps 0.3 lc rgb '#9ecae1' title 'feasible', \\\n\
         \x20    '{boundary_csv}' every ::1 using 1:2 with lines lw 2 lc rgb '#08519c' title 'boundary', \\\n\
         \x20    '{reference_csv}' every ::1 using 1:2 with lines dt 2 lc rgb 'black' title 'alpha = 3/2 - n'\n"
    )
}
