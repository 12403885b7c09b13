//! Measured-versus-predicted comparison.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use entlink::analysis::hinge_fit;

use crate::artifacts::{fmt_float, read_csv, ArtifactSet, Csv};
use crate::error::CliError;

/// One entropy value of block `[a, b)` (0-based, half-open) at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub a: usize,
    pub b: usize,
    pub t: f64,
    pub measured: f64,
    pub predicted: f64,
    /// `measured − predicted`.
    pub residual: f64,
}

/// Kink of the measured and the predicted curve of one block, from a
/// two-piece linear fit of each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub a: usize,
    pub b: usize,
    pub measured: f64,
    pub predicted: f64,
}

impl Crossing {
    pub fn error(&self) -> f64 {
        self.measured - self.predicted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Sorted by `(a, b, t)`.
    pub rows: Vec<ReportRow>,
    pub max_abs_residual: f64,
    pub mean_abs_residual: f64,
    /// `(σ, v)` used for the predictions, when known.
    pub params: Option<(f64, f64)>,
    pub crossings: Vec<Crossing>,
}

fn key(s: &Sample) -> (usize, usize, u64) {
    (s.a, s.b, s.t.to_bits())
}

/// Compares two sample sets on their overlap grid: the blocks present in
/// both crossed with the times present in both. Every point of that grid
/// must exist on each side.
pub fn compare_report(
    measured: &[Sample],
    predicted: &[Sample],
    params: Option<(f64, f64)>,
) -> Result<ComparisonReport, CliError> {
    let index = |v: &[Sample]| -> HashMap<(usize, usize, u64), f64> {
        v.iter().map(|s| (key(s), s.value)).collect()
    };
    let (mi, pi) = (index(measured), index(predicted));
    let blocks =
        |v: &[Sample]| -> BTreeSet<(usize, usize)> { v.iter().map(|s| (s.a, s.b)).collect() };
    let times = |v: &[Sample]| -> BTreeSet<u64> { v.iter().map(|s| s.t.to_bits()).collect() };
    let common_blocks: Vec<_> = blocks(measured)
        .intersection(&blocks(predicted))
        .copied()
        .collect();
    let mut common_times: Vec<f64> = times(measured)
        .intersection(&times(predicted))
        .map(|&b| f64::from_bits(b))
        .collect();
    common_times.sort_by(f64::total_cmp);
    if common_blocks.is_empty() || common_times.is_empty() {
        return Err(CliError::validation(
            "grid mismatch: measured and predicted data share no blocks or no times",
        ));
    }
    let mut rows = Vec::with_capacity(common_blocks.len() * common_times.len());
    for &(a, b) in &common_blocks {
        for &t in &common_times {
            let k = (a, b, t.to_bits());
            let (Some(&m), Some(&p)) = (mi.get(&k), pi.get(&k)) else {
                return Err(CliError::validation(format!(
                    "grid mismatch: block {}-{} at t = {} missing on one side",
                    a + 1,
                    b,
                    fmt_float(t)
                )));
            };
            rows.push(ReportRow {
                a,
                b,
                t,
                measured: m,
                predicted: p,
                residual: m - p,
            });
        }
    }
    let abs: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    let max_abs_residual = abs.iter().copied().fold(0.0, f64::max);
    let mean_abs_residual = abs.iter().sum::<f64>() / abs.len() as f64;

    let mut crossings = Vec::new();
    if common_times.len() >= 4 {
        for (k, &(a, b)) in common_blocks.iter().enumerate() {
            let chunk = &rows[k * common_times.len()..(k + 1) * common_times.len()];
            let m: Vec<f64> = chunk.iter().map(|r| r.measured).collect();
            let p: Vec<f64> = chunk.iter().map(|r| r.predicted).collect();
            let span = p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - p.iter().copied().fold(f64::INFINITY, f64::min);
            if span < 1e-12 {
                continue;
            }
            let (Ok(fm), Ok(fp)) = (hinge_fit(&common_times, &m), hinge_fit(&common_times, &p))
            else {
                continue;
            };
            crossings.push(Crossing {
                a,
                b,
                measured: fm.breakpoint,
                predicted: fp.breakpoint,
            });
        }
    }
    Ok(ComparisonReport {
        rows,
        max_abs_residual,
        mean_abs_residual,
        params,
        crossings,
    })
}

impl ComparisonReport {
    /// Adds `report.csv`, `report_summary.csv` and `report_crossings.csv`.
    pub fn add_artifacts(&self, art: &mut ArtifactSet) {
        let mut csv = Csv::new(&["a", "b", "t", "S_measured", "S_predicted", "residual"]);
        for r in &self.rows {
            csv.row(&[
                (r.a + 1).to_string(),
                r.b.to_string(),
                fmt_float(r.t),
                fmt_float(r.measured),
                fmt_float(r.predicted),
                fmt_float(r.residual),
            ]);
        }
        art.insert("report.csv", csv.into_bytes());

        let mut csv = Csv::new(&["quantity", "value"]);
        let mut put = |k: &str, v: String| csv.row(&[k.to_string(), v]);
        put("rows", self.rows.len().to_string());
        put("max_abs_residual", fmt_float(self.max_abs_residual));
        put("mean_abs_residual", fmt_float(self.mean_abs_residual));
        if let Some((sigma, v)) = self.params {
            put("sigma", fmt_float(sigma));
            put("v", fmt_float(v));
        }
        if !self.crossings.is_empty() {
            let errs: Vec<f64> = self.crossings.iter().map(|c| c.error().abs()).collect();
            put(
                "max_abs_crossing_error",
                fmt_float(errs.iter().copied().fold(0.0, f64::max)),
            );
            put(
                "mean_abs_crossing_error",
                fmt_float(errs.iter().sum::<f64>() / errs.len() as f64),
            );
        }
        art.insert("report_summary.csv", csv.into_bytes());

        let mut csv = Csv::new(&["a", "b", "t_cross_measured", "t_cross_predicted", "error"]);
        for c in &self.crossings {
            csv.row(&[
                (c.a + 1).to_string(),
                c.b.to_string(),
                fmt_float(c.measured),
                fmt_float(c.predicted),
                fmt_float(c.error()),
            ]);
        }
        art.insert("report_crossings.csv", csv.into_bytes());
    }
}

/// Reads an entropy or prediction CSV (`t,a,b,S_nats`, 1-based blocks).
pub fn read_samples(text: &str, origin: &str) -> Result<Vec<Sample>, CliError> {
    let rows = read_csv(text, &crate::runner::ENTROPY_HEADER, origin)?;
    let mut seen = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let line = k + 2;
        let bad =
            |what: &str| CliError::validation(format!("{origin}: line {line}: invalid {what}"));
        let t: f64 = r[0].parse().map_err(|_| bad("t"))?;
        let a: usize = r[1].parse().map_err(|_| bad("a"))?;
        let b: usize = r[2].parse().map_err(|_| bad("b"))?;
        let value: f64 = r[3].parse().map_err(|_| bad("S_nats"))?;
        if a == 0 || b < a || !t.is_finite() {
            return Err(bad("row"));
        }
        let s = Sample {
            t,
            a: a - 1,
            b,
            value,
        };
        if let Some(prev) = seen.insert(key(&s), line) {
            return Err(CliError::validation(format!(
                "{origin}: line {line}: duplicate of line {prev}"
            )));
        }
        out.push(s);
    }
    Ok(out)
}

/// Reads `predictions_params.csv`.
pub fn read_params(text: &str, origin: &str) -> Result<(f64, f64), CliError> {
    let rows = read_csv(text, &["sigma", "sigma_source", "v"], origin)?;
    let row = rows
        .first()
        .ok_or_else(|| CliError::validation(format!("{origin}: no data row")))?;
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::validation(format!("{origin}: invalid number '{s}'")))
    };
    Ok((parse(&row[0])?, parse(&row[2])?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(a: usize, b: usize, f: impl Fn(f64) -> f64) -> Vec<Sample> {
        (0..21)
            .map(|k| {
                let t = k as f64 * 0.5;
                Sample {
                    t,
                    a,
                    b,
                    value: f(t),
                }
            })
            .collect()
    }

    #[test]
    fn self_comparison_has_zero_residuals() {
        let mut s = curve(0, 8, |t| 0.3 * (2.0 * t).min(8.0));
        s.extend(curve(2, 6, |t| 0.3 * (2.0 * t).min(4.0)));
        let r = compare_report(&s, &s, None).unwrap();
        assert_eq!(r.rows.len(), s.len());
        assert_eq!(r.max_abs_residual, 0.0);
        assert_eq!(r.crossings.len(), 2);
        for c in &r.crossings {
            assert!(c.error().abs() < 1e-9);
        }
        assert!((r.crossings[0].predicted - 4.0).abs() < 1e-6);
        assert!(r
            .rows
            .windows(2)
            .all(|w| (w[0].a, w[0].b, w[0].t) < (w[1].a, w[1].b, w[1].t)));
    }

    #[test]
    fn overlap_grid_and_mismatch() {
        let m = curve(0, 4, |t| t);
        let mut p = curve(0, 4, |t| t + 1.0);
        p.extend(curve(1, 4, |t| t));
        let r = compare_report(&m, &p, None).unwrap();
        assert_eq!(r.rows.len(), 21);
        assert!((r.mean_abs_residual - 1.0).abs() < 1e-12);
        assert!(compare_report(&m, &curve(1, 4, |t| t), None).is_err());
        let mut holey = m.clone();
        holey.remove(3);
        holey.extend(curve(1, 4, |t| t));
        assert!(compare_report(&holey, &p, None).is_err());
    }

    #[test]
    fn samples_round_trip_through_csv() {
        let s = curve(3, 9, |t| t / 3.0);
        let text = String::from_utf8(crate::runner::samples_csv(&s)).unwrap();
        assert_eq!(read_samples(&text, "x").unwrap(), s);
        assert!(read_samples("t,a,b,S_nats\n0,0,3,1\n", "x").is_err());
        assert!(read_samples("t,a,b,S_nats\n0,1,3,1\n0,1,3,2\n", "x").is_err());
    }
}
