//! Leapfrog integration of `∂²_t J = (v²/2)(∂²_x + ∂²_y) J` on the
//! configuration square `[0, N]²`.
//!
//! The grid is cell-centred: cell `(i, j)` samples `J` at
//! `((i + ½)dx, (j + ½)dx)` with `dx = N / M`. Open chains use mirrored
//! ghost cells (zero normal derivative), periodic chains wrap.

use rayon::prelude::*;

use crate::entanglement::ElMatrix;
use crate::lattice::Boundary;
use crate::qpp::{DeltaLine, FrontSet, Orientation};
use crate::{Error, Result};

/// Cells on each side of the diagonal excluded from comparisons.
pub const DIAGONAL_BAND_CELLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveBoundary {
    Neumann,
    Periodic,
}

impl From<Boundary> for WaveBoundary {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Open => WaveBoundary::Neumann,
            Boundary::Periodic => WaveBoundary::Periodic,
        }
    }
}

/// Largest admissible step: the symmetric-form limit `√2·dx/v` times the
/// safety factor ½.
pub fn max_time_step(dx: f64, v: f64) -> f64 {
    0.5 * std::f64::consts::SQRT_2 * dx / v
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    m: usize,
    n: f64,
    dx: f64,
    dt: f64,
    v: f64,
    boundary: WaveBoundary,
    t0: f64,
    steps: u64,
    grid: Vec<f64>,
    prev: Vec<f64>,
}

/// Source of the initial field.
#[derive(Debug, Clone, Copy)]
pub enum InitialField<'a> {
    /// Measured links, with entries `|i − j| <= band` set to zero.
    El { matrix: &'a ElMatrix, band: usize },
    /// Delta lines rasterized as hat-shaped ridges.
    Fronts(&'a FrontSet),
}

impl WaveField {
    /// Field with the given samples at rest; `dt` defaults to
    /// [`max_time_step`].
    pub fn from_grid(
        grid: Vec<f64>,
        m: usize,
        n: f64,
        v: f64,
        boundary: WaveBoundary,
        dt: Option<f64>,
    ) -> Result<Self> {
        if m == 0 || grid.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: grid.len(),
            });
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid system size {n}")));
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid speed {v}")));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("initial field is not finite".into()));
        }
        let dx = n / m as f64;
        let limit = max_time_step(dx, v);
        let dt = dt.unwrap_or(limit);
        if !(dt > 0.0 && dt <= limit) {
            return Err(Error::Cfl { dt, limit });
        }
        for i in 0..m {
            for j in 0..i {
                let (a, b) = (grid[i * m + j], grid[j * m + i]);
                if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidArgument(format!(
                        "initial field not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut grid = grid;
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (grid[i * m + j] + grid[j * m + i]);
                grid[i * m + j] = s;
                grid[j * m + i] = s;
            }
        }
        let mut f = WaveField {
            m,
            n,
            dx,
            dt,
            v,
            boundary,
            t0: 0.0,
            steps: 0,
            prev: Vec::new(),
            grid,
        };
        // J(-dt) = J(dt) so the centred time derivative vanishes at t = 0
        let lap = f.laplacian(&f.grid);
        let k = 0.5 * f.kappa();
        f.prev = f.grid.iter().zip(&lap).map(|(u, l)| u + k * l).collect();
        Ok(f)
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn system_size(&self) -> f64 {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn speed(&self) -> f64 {
        self.v
    }

    pub fn boundary(&self) -> WaveBoundary {
        self.boundary
    }

    pub fn t(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn prev(&self) -> &[f64] {
        &self.prev
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid[i * self.m + j]
    }

    /// Centre coordinate of cell `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// `Σ J dx²`.
    pub fn mass(&self) -> f64 {
        self.grid.iter().sum::<f64>() * self.dx * self.dx
    }

    /// `(v dt / dx)² / 2`.
    fn kappa(&self) -> f64 {
        let r = self.v * self.dt / self.dx;
        0.5 * r * r
    }

    fn neighbours(&self, i: usize) -> (usize, usize) {
        let m = self.m;
        match self.boundary {
            WaveBoundary::Periodic => ((i + m - 1) % m, (i + 1) % m),
            WaveBoundary::Neumann => (i.saturating_sub(1), (i + 1).min(m - 1)),
        }
    }

    /// Undivided five-point Laplacian.
    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let (im, ip) = self.neighbours(i);
            for (j, o) in row.iter_mut().enumerate() {
                let (jm, jp) = self.neighbours(j);
                let c = u[i * m + j];
                // grouped so that the transposed cell sums identical terms
                let xs = u[im * m + j] + u[ip * m + j];
                let ys = u[i * m + jm] + u[i * m + jp];
                *o = (xs + ys) - 4.0 * c;
            }
        });
        out
    }

    fn advance(&mut self) {
        let lap = self.laplacian(&self.grid);
        let k = self.kappa();
        let next: Vec<f64> = self
            .grid
            .par_iter()
            .zip(self.prev.par_iter())
            .zip(lap.par_iter())
            .map(|((u, p), l)| 2.0 * u - p + k * l)
            .collect();
        self.prev = std::mem::replace(&mut self.grid, next);
        self.steps += 1;
    }

    /// One leapfrog step.
    pub fn step(&self) -> WaveField {
        let mut f = self.clone();
        f.advance();
        f
    }

    /// Discrete energy `½‖∂_t J‖² + (v²/4)⟨∇J^{n+1}, ∇J^n⟩`, conserved by
    /// the scheme to rounding.
    pub fn energy(&self) -> f64 {
        let m = self.m;
        let (u, w) = (&self.grid, &self.prev);
        let kinetic: f64 = u.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
        let mut potential = 0.0;
        let wrap = self.boundary == WaveBoundary::Periodic;
        for i in 0..m {
            for j in 0..m {
                let a = i * m + j;
                let mut edge = |b: usize| potential += (u[a] - u[b]) * (w[a] - w[b]);
                if i + 1 < m {
                    edge((i + 1) * m + j);
                } else if wrap {
                    edge(j);
                }
                if j + 1 < m {
                    edge(i * m + j + 1);
                } else if wrap {
                    edge(i * m);
                }
            }
        }
        0.5 * self.dx * self.dx / (self.dt * self.dt) * (kinetic + self.kappa() * potential)
    }
}

fn fold_index(k: i64, m: usize, boundary: WaveBoundary) -> Option<usize> {
    let mi = m as i64;
    match boundary {
        WaveBoundary::Periodic => Some(k.rem_euclid(mi) as usize),
        WaveBoundary::Neumann => {
            let r = k.rem_euclid(2 * mi);
            let r = if r >= mi { 2 * mi - 1 - r } else { r };
            (0..mi).contains(&r).then_some(r as usize)
        }
    }
}

/// Bilinear resampling of a site-indexed matrix onto `m × m` cell centres.
fn embed_el(el: &ElMatrix, band: usize, m: usize) -> Vec<f64> {
    let n = el.n();
    let dx = n as f64 / m as f64;
    let j = el.matrix();
    let value = |a: usize, b: usize| {
        if a.abs_diff(b) <= band {
            0.0
        } else {
            j[(a, b)]
        }
    };
    let locate = |i: usize| {
        let u = ((i as f64 + 0.5) * dx - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = (u.floor() as usize).min(n.saturating_sub(2));
        (lo, u - lo as f64)
    };
    let mut out = vec![0.0; m * m];
    if n == 1 {
        return out;
    }
    for a in 0..m {
        let (i0, fx) = locate(a);
        for b in 0..m {
            let (j0, fy) = locate(b);
            out[a * m + b] = (1.0 - fx) * (1.0 - fy) * value(i0, j0)
                + fx * (1.0 - fy) * value(i0 + 1, j0)
                + (1.0 - fx) * fy * value(i0, j0 + 1)
                + fx * fy * value(i0 + 1, j0 + 1);
        }
    }
    out
}

/// Half-width, in sites, of the hat profile used for delta lines: two cells
/// at site resolution, fixed under refinement so that finer grids resolve
/// the same ridge.
pub const RIDGE_HALF_WIDTH: f64 = 2.0;

/// Hat-shaped ridges along the y direction carrying `weight` per unit of x.
fn rasterize_fronts(f: &FrontSet, m: usize, boundary: WaveBoundary) -> Vec<f64> {
    let dx = f.n / m as f64;
    let b = RIDGE_HALF_WIDTH.max(2.0 * dx);
    let reach = (b / dx).ceil() as i64 + 1;
    let mut out = vec![0.0; m * m];
    let mut profile = Vec::new();
    for line in &f.lines {
        for i in 0..m {
            let x = (i as f64 + 0.5) * dx;
            if x < line.extent.0 || x >= line.extent.1 {
                continue;
            }
            let y = line.y_at(x);
            let centre = (y / dx - 0.5).round() as i64;
            profile.clear();
            for k in centre - reach..=centre + reach {
                let s = (k as f64 + 0.5) * dx - y;
                profile.push((k, (1.0 - s.abs() / b).max(0.0)));
            }
            let norm: f64 = profile.iter().map(|p| p.1).sum::<f64>() * dx;
            for &(k, h) in &profile {
                if h == 0.0 {
                    continue;
                }
                if let Some(jj) = fold_index(k, m, boundary) {
                    out[i * m + jj] += line.weight * h / norm;
                }
            }
        }
    }
    // the line sets are swap-symmetric, rasterization only up to rounding
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (out[i * m + j] + out[j * m + i]);
            out[i * m + j] = s;
            out[j * m + i] = s;
        }
    }
    out
}

pub fn init_field(
    source: InitialField<'_>,
    v: f64,
    boundary: Boundary,
    m: usize,
) -> Result<WaveField> {
    let wb = WaveBoundary::from(boundary);
    let (n, grid) = match source {
        InitialField::El { matrix, band } => {
            if m < matrix.n() {
                return Err(Error::InvalidArgument(format!(
                    "resolution {m} below system size {}",
                    matrix.n()
                )));
            }
            (matrix.n() as f64, embed_el(matrix, band, m))
        }
        InitialField::Fronts(f) => {
            if (m as f64) < f.n {
                return Err(Error::InvalidArgument(format!(
                    "resolution {m} below system size {}",
                    f.n
                )));
            }
            (f.n, rasterize_fronts(f, m, wb))
        }
    };
    WaveField::from_grid(grid, m, n, v, wb, None)
}

/// Snapshots at the grid times nearest to each target.
pub fn run(f: &WaveField, t_targets: &[f64]) -> Result<Vec<WaveField>> {
    if t_targets.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "snapshot times must be ascending".into(),
        ));
    }
    let mut cur = f.clone();
    let mut out = Vec::with_capacity(t_targets.len());
    for &t in t_targets {
        if !t.is_finite() || t < f.t() - 0.5 * f.dt {
            return Err(Error::InvalidArgument(format!(
                "cannot take a snapshot at t = {t}"
            )));
        }
        let target = ((t - f.t0) / f.dt).round().max(f.steps as f64) as u64;
        while cur.steps < target {
            cur.advance();
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Reference for [`field_error`].
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    El(&'a ElMatrix),
    Fronts(&'a FrontSet),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldError {
    /// L1 distance between the two fields normalized to unit mass off the
    /// diagonal band.
    pub l1: f64,
    /// Mean distance between ridge maxima along y, in cells.
    pub front_offset: f64,
    /// Largest single-row ridge distance, in cells.
    pub max_front_offset: f64,
    /// Rows contributing to the offsets.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSearch {
    /// Half-width in sites of the window searched around a predicted ridge.
    pub window: f64,
    /// Cells on each side of the diagonal ignored.
    pub band: usize,
}

impl FrontSearch {
    fn cells(&self, dx: f64) -> usize {
        (self.window / dx).round().max(1.0) as usize
    }
}

impl Default for FrontSearch {
    fn default() -> Self {
        FrontSearch {
            window: 3.0,
            band: DIAGONAL_BAND_CELLS,
        }
    }
}

/// Position (fractional cell index along y) of the ridge of row `i` within
/// `window` cells of `centre`: the argmax, refined by the centroid of the
/// contiguous cells above half of the peak height over the window minimum.
fn ridge_in_row(grid: &[f64], m: usize, i: usize, centre: f64, window: usize) -> Option<f64> {
    let lo = (centre.round() as i64 - window as i64).max(0) as usize;
    let hi = ((centre.round() as i64 + window as i64).min(m as i64 - 1)).max(0) as usize;
    if lo >= hi {
        return None;
    }
    let row = &grid[i * m..(i + 1) * m];
    let k = (lo..=hi).max_by(|&a, &b| row[a].total_cmp(&row[b]))?;
    let base = row[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
    let half = base + 0.5 * (row[k] - base);
    if row[k] <= base {
        return Some(k as f64);
    }
    let (mut a, mut b) = (k, k);
    while a > lo && row[a - 1] > half {
        a -= 1;
    }
    while b < hi && row[b + 1] > half {
        b += 1;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (q, &val) in row.iter().enumerate().take(b + 1).skip(a) {
        num += q as f64 * (val - half);
        den += val - half;
    }
    Some(num / den)
}

/// Rows of `line` where a ridge can be located unambiguously, with the
/// predicted fractional y index.
fn probe_rows(
    line: &DeltaLine,
    guide: &FrontSet,
    m: usize,
    dx: f64,
    opts: FrontSearch,
) -> Vec<(usize, f64)> {
    let w = opts.cells(dx) as f64;
    let mut rows = Vec::new();
    for i in 0..m {
        let x = (i as f64 + 0.5) * dx;
        if x < line.extent.0 + w * dx || x >= line.extent.1 - w * dx {
            continue;
        }
        let j = line.y_at(x) / dx - 0.5;
        if j < w || j > (m - 1) as f64 - w {
            continue;
        }
        if (j - i as f64).abs() <= (opts.band as f64 + w) {
            continue;
        }
        let crowded = guide.lines.iter().any(|o| {
            !std::ptr::eq(o, line)
                && x >= o.extent.0 - w * dx
                && x < o.extent.1 + w * dx
                && (o.y_at(x) / dx - 0.5 - j).abs() < 2.0 * w + 1.0
        });
        if !crowded {
            rows.push((i, j));
        }
    }
    rows
}

/// Signed ridge offsets along y, in cells, for each line of `guide`
/// separately. Lines without usable rows give an empty list.
pub fn line_offsets(f: &WaveField, guide: &FrontSet, opts: FrontSearch) -> Vec<Vec<f64>> {
    guide
        .lines
        .iter()
        .map(|line| {
            probe_rows(line, guide, f.m, f.dx, opts)
                .into_iter()
                .filter_map(|(i, j)| {
                    ridge_in_row(&f.grid, f.m, i, j, opts.cells(f.dx)).map(|p| p - j)
                })
                .collect()
        })
        .collect()
}

/// Ridge offsets of `grid` relative to the predicted lines of `guide`.
pub fn front_offsets(f: &WaveField, guide: &FrontSet, opts: FrontSearch) -> Vec<f64> {
    line_offsets(f, guide, opts).concat()
}

/// Mean link weight per unit x carried by the ridge of `line`, integrating
/// the search window on each side along y.
pub fn ridge_weight(
    f: &WaveField,
    line: &DeltaLine,
    guide: &FrontSet,
    opts: FrontSearch,
) -> Option<f64> {
    let rows = probe_rows(line, guide, f.m, f.dx, opts);
    if rows.is_empty() {
        return None;
    }
    let w = opts.cells(f.dx) as i64;
    let total: f64 = rows
        .iter()
        .map(|&(i, j)| {
            let c = j.round() as i64;
            (c - w..=c + w)
                .filter_map(|k| usize::try_from(k).ok().filter(|&k| k < f.m))
                .map(|k| f.grid[i * f.m + k])
                .sum::<f64>()
                * f.dx
        })
        .sum();
    Some(total / rows.len() as f64)
}

fn masked_l1(a: &[f64], b: &[f64], m: usize, band: usize) -> f64 {
    let keep = |idx: usize| (idx / m).abs_diff(idx % m) > band;
    let norm = |u: &[f64]| {
        let s: f64 = u
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(_, x)| x)
            .sum();
        if s.abs() > 1e-300 {
            s
        } else {
            1.0
        }
    };
    let (sa, sb) = (norm(a), norm(b));
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(k, _)| keep(*k))
        .map(|(_, (x, y))| (x / sa - y / sb).abs())
        .sum()
}

/// Compares a solver field with measured links or analytic fronts.
///
/// Ridges are located row by row near the lines of `guide`; for a front
/// reference the reference itself is the guide. Without a guide only `l1`
/// is computed and the offsets are zero.
pub fn field_error(
    f: &WaveField,
    reference: Reference<'_>,
    guide: Option<&FrontSet>,
    opts: FrontSearch,
) -> Result<FieldError> {
    let (ref_grid, guide) = match reference {
        Reference::El(el) => {
            if (el.n() as f64 - f.n).abs() > 1e-12 {
                return Err(Error::DimensionMismatch {
                    expected: f.n as usize,
                    found: el.n(),
                });
            }
            (embed_el(el, 0, f.m), guide)
        }
        Reference::Fronts(fs) => {
            if (fs.n - f.n).abs() > 1e-12 {
                return Err(Error::DimensionMismatch {
                    expected: f.n as usize,
                    found: fs.n as usize,
                });
            }
            (
                rasterize_fronts(fs, f.m, f.boundary),
                Some(guide.unwrap_or(fs)),
            )
        }
    };
    let l1 = masked_l1(&f.grid, &ref_grid, f.m, opts.band);
    let mut diffs = Vec::new();
    if let Some(g) = guide {
        for line in &g.lines {
            for (i, j) in probe_rows(line, g, f.m, f.dx, opts) {
                let a = ridge_in_row(&f.grid, f.m, i, j, opts.cells(f.dx));
                let b = match reference {
                    Reference::Fronts(_) => Some(j),
                    Reference::El(_) => ridge_in_row(&ref_grid, f.m, i, j, opts.cells(f.dx)),
                };
                if let (Some(a), Some(b)) = (a, b) {
                    diffs.push((a - b).abs());
                }
            }
        }
    }
    let samples = diffs.len();
    let front_offset = if samples == 0 {
        0.0
    } else {
        diffs.iter().sum::<f64>() / samples as f64
    };
    let max_front_offset = diffs.iter().copied().fold(0.0, f64::max);
    Ok(FieldError {
        l1,
        front_offset,
        max_front_offset,
        samples,
    })
}

/// Lines of a front set mapped to their orientation label, for reports.
pub fn orientation_label(o: Orientation) -> &'static str {
    match o {
        Orientation::Diagonal => "diagonal",
        Orientation::Antidiagonal => "antidiagonal",
    }
}
