//! Initial-data specifications: `constant:C`, `cosine:C,A,K`, `bump:C,W`
//! and `file:PATH`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use thinfilm::io::read_trajectory_csv;
use thinfilm::solver::Grid;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Constant(f64),
    /// `c + amp cos(k pi x / a)`.
    Cosine { c: f64, amp: f64, k: f64 },
    /// `max(0, c (1 - (x/w)^2))^2`; touches down at `|x| = w`, so it needs
    /// `eps > 0` to be lifted.
    Bump { c: f64, w: f64 },
    /// One height per line, or a trajectory CSV whose last row is used.
    File(PathBuf),
}

fn numbers(body: &str, count: usize, spec: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = body
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("bad number `{v}` in `{spec}`: {e}")))
        .collect::<Result<_>>()?;
    if vals.len() != count {
        bail!("`{spec}` needs {count} comma-separated numbers");
    }
    if vals.iter().any(|v| !v.is_finite()) {
        bail!("`{spec}` has a non-finite value");
    }
    Ok(vals)
}

impl FromStr for InitialData {
    type Err = anyhow::Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, body) = spec.split_once(':').ok_or_else(|| anyhow!("expected KIND:ARGS, got `{spec}`"))?;
        match kind {
            "constant" => Ok(InitialData::Constant(numbers(body, 1, spec)?[0])),
            "cosine" => {
                let v = numbers(body, 3, spec)?;
                Ok(InitialData::Cosine { c: v[0], amp: v[1], k: v[2] })
            }
            "bump" => {
                let v = numbers(body, 2, spec)?;
                if v[1] <= 0.0 {
                    bail!("bump width must be positive");
                }
                Ok(InitialData::Bump { c: v[0], w: v[1] })
            }
            "file" => Ok(InitialData::File(PathBuf::from(body))),
            other => bail!("unknown initial data kind `{other}` (constant, cosine, bump, file)"),
        }
    }
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let a = grid.a;
        let h = match *self {
            InitialData::Constant(c) => vec![c; grid.cells],
            InitialData::Cosine { c, amp, k } => grid.sample(|x| c + amp * (k * PI * x / a).cos()),
            InitialData::Bump { c, w } => grid.sample(|x| {
                let r = x / w;
                (c * (1.0 - r * r)).max(0.0).powi(2)
            }),
            InitialData::File(ref path) => read_heights(path)?,
        };
        if h.len() != grid.cells {
            bail!("initial data has {} values, grid has {} cells", h.len(), grid.cells);
        }
        Ok(h)
    }
}

fn read_heights(path: &PathBuf) -> Result<Vec<f64>> {
    let open = || File::open(path).with_context(|| format!("opening {}", path.display()));
    let first = BufReader::new(open()?)
        .lines()
        .map_while(|l| l.ok())
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .unwrap_or_default();
    if first.contains(',') {
        let states = read_trajectory_csv(BufReader::new(open()?))?;
        let last = states.into_iter().last().ok_or_else(|| anyhow!("{} has no snapshots", path.display()))?;
        return Ok(last.h);
    }
    let mut out = Vec::new();
    for line in BufReader::new(open()?).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse::<f64>().with_context(|| format!("bad height `{line}` in {}", path.display()))?);
    }
    Ok(out)
}
