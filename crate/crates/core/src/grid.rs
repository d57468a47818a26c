//! Parameter sweeps of the closed-form advantage ratio.

use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::protocols::bifrequency_advantage;

/// CSV header of [`write_csv`].
pub const CSV_HEADER: &str = "eta1,n_s,n_th,h_q,h_c,ratio";

/// A single value or an inclusive grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Axis {
    Value { value: f64 },
    Linear { min: f64, max: f64, steps: usize },
    Log { min: f64, max: f64, steps: usize },
}

impl Axis {
    /// Parses `v` or `min:max:steps`; `log` selects geometric spacing for ranges.
    pub fn parse(s: &str, log: bool) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>()
                .map_err(|_| invalid(format!("cannot parse '{t}' as a number")))
        };
        let axis = match parts.as_slice() {
            [v] => Axis::Value { value: num(v)? },
            [lo, hi, n] => {
                let steps = n
                    .parse::<usize>()
                    .map_err(|_| invalid(format!("cannot parse '{n}' as a step count")))?;
                let (min, max) = (num(lo)?, num(hi)?);
                if log {
                    Axis::Log { min, max, steps }
                } else {
                    Axis::Linear { min, max, steps }
                }
            }
            _ => return Err(invalid(format!("expected 'v' or 'min:max:steps', got '{s}'"))),
        };
        axis.values()?;
        Ok(axis)
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            Axis::Value { value } => {
                if !value.is_finite() {
                    return Err(invalid("axis value must be finite"));
                }
                Ok(vec![value])
            }
            Axis::Linear { min, max, steps } | Axis::Log { min, max, steps } => {
                if steps == 0 {
                    return Err(invalid("range needs at least one step"));
                }
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(invalid(format!("invalid range {min}..{max}")));
                }
                if steps == 1 {
                    return Ok(vec![min]);
                }
                let last = (steps - 1) as f64;
                if matches!(self, Axis::Log { .. }) {
                    if !(min > 0.0) {
                        return Err(invalid("log range needs a positive lower bound"));
                    }
                    let (a, b) = (min.ln(), max.ln());
                    Ok((0..steps)
                        .map(|i| match i {
                            0 => min,
                            i if i == steps - 1 => max,
                            i => (a + (b - a) * i as f64 / last).exp(),
                        })
                        .collect())
                } else {
                    Ok((0..steps)
                        .map(|i| if i == steps - 1 { max } else { min + (max - min) * i as f64 / last })
                        .collect())
                }
            }
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::parse(s, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub eta1: f64,
    pub n_s: f64,
    pub n_th: f64,
    pub h_q: f64,
    pub h_c: f64,
    pub ratio: f64,
}

fn cell(eta1: f64, n_s: f64, n_th: f64) -> Result<GridRow> {
    let adv = bifrequency_advantage(eta1, n_s, n_th)
        .map_err(|e| invalid(format!("grid point (eta1={eta1}, n_s={n_s}, n_th={n_th}): {e}")))?;
    Ok(GridRow {
        eta1,
        n_s,
        n_th,
        h_q: adv.h_q,
        h_c: adv.h_c,
        ratio: adv.ratio,
    })
}

fn points(eta1: &[f64], n_s: &[f64], n_th: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::with_capacity(eta1.len() * n_s.len() * n_th.len());
    for &e in eta1 {
        for &s in n_s {
            for &t in n_th {
                pts.push((e, s, t));
            }
        }
    }
    pts
}

/// Rows in `eta1`-major, then `n_s`, then `n_th` order.
pub fn ratio_grid(eta1: &[f64], n_s: &[f64], n_th: &[f64]) -> Result<Vec<GridRow>> {
    let pts = points(eta1, n_s, n_th);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pts.par_iter().map(|&(e, s, t)| cell(e, s, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pts.iter().map(|&(e, s, t)| cell(e, s, t)).collect()
    }
}

/// [`ratio_grid`] on at most `threads` worker threads.
pub fn ratio_grid_with_threads(eta1: &[f64], n_s: &[f64], n_th: &[f64], threads: usize) -> Result<Vec<GridRow>> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start thread pool: {e}")))?;
        pool.install(|| ratio_grid(eta1, n_s, n_th))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        ratio_grid(eta1, n_s, n_th)
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[GridRow], mut out: W) -> io::Result<()> {
    out.write_all(CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in rows {
        let line = [r.eta1, r.n_s, r.n_th, r.h_q, r.h_c, r.ratio]
            .iter()
            .map(|&v| format_float(v))
            .collect::<Vec<_>>()
            .join(",");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_csv(rows: &[GridRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
