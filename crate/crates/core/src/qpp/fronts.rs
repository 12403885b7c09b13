//! Delta-line fronts in the `(x, y)` configuration square.
//!
//! A front is a segment of a line `x − y = c` or `x + y = c` carrying a
//! link density `weight` per unit of x-projection, so that crossing a
//! block contributes `weight × projected length` to its entropy. Initial
//! lines are at rest and split into two half-weight copies moving along
//! their normal; moving lines translate. Boundaries are handled by the
//! method of images: the square's content is reflected (open chains) or
//! translated (periodic chains) into the neighbouring tiles, propagated
//! freely, and clipped back.

use super::QppParams;
use crate::lattice::Boundary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    /// `x − y = c`
    Diagonal,
    /// `x + y = c`
    Antidiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaLine {
    pub orientation: Orientation,
    pub offset: f64,
    pub weight: f64,
    /// Motion of the offset: `+1` increasing, `-1` decreasing, `0` at rest.
    pub direction: i8,
    /// x-range of the segment inside the square.
    pub extent: (f64, f64),
}

impl DeltaLine {
    pub fn y_at(&self, x: f64) -> f64 {
        match self.orientation {
            Orientation::Diagonal => x - self.offset,
            Orientation::Antidiagonal => self.offset - x,
        }
    }

    pub fn projected_length(&self) -> f64 {
        self.extent.1 - self.extent.0
    }

    /// Same segment with `x` and `y` exchanged.
    pub fn swapped(&self) -> DeltaLine {
        match self.orientation {
            Orientation::Antidiagonal => {
                let (x0, x1) = self.extent;
                DeltaLine {
                    extent: (self.offset - x1, self.offset - x0),
                    ..*self
                }
            }
            Orientation::Diagonal => DeltaLine {
                offset: -self.offset,
                direction: -self.direction,
                extent: (self.extent.0 - self.offset, self.extent.1 - self.offset),
                ..*self
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSet {
    pub n: f64,
    pub boundary: Boundary,
    pub t: f64,
    pub lines: Vec<DeltaLine>,
}

impl FrontSet {
    pub fn empty(n: f64, boundary: Boundary, t: f64) -> Self {
        FrontSet {
            n,
            boundary,
            t,
            lines: Vec::new(),
        }
    }

    /// `Σ weight × projected length`; conserved on a torus.
    pub fn total_weight(&self) -> f64 {
        self.lines
            .iter()
            .map(|l| l.weight * l.projected_length())
            .sum()
    }

    /// Lines sorted into a canonical order, for comparisons.
    pub fn canonical(&self) -> Vec<DeltaLine> {
        let mut v = self.lines.clone();
        v.sort_by(|a, b| {
            a.orientation
                .cmp(&b.orientation)
                .then(a.offset.total_cmp(&b.offset))
                .then(a.extent.0.total_cmp(&b.extent.0))
                .then(a.direction.cmp(&b.direction))
        });
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Dimer,
    Rainbow,
    Bridge,
}

impl std::str::FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dimer" => Ok(InitialKind::Dimer),
            "rainbow" => Ok(InitialKind::Rainbow),
            "bridge" => Ok(InitialKind::Bridge),
            other => Err(Error::InvalidArgument(format!(
                "unknown front state '{other}'"
            ))),
        }
    }
}

/// Idealized link field of each initial state at `t = 0`.
pub fn initial_fronts(kind: InitialKind, p: &QppParams) -> FrontSet {
    let n = p.n;
    let line = |orientation, offset, extent| DeltaLine {
        orientation,
        offset,
        weight: p.sigma,
        direction: 0,
        extent,
    };
    let lines = match kind {
        // nearest-neighbour links sit on the diagonal in the continuum limit
        InitialKind::Dimer => vec![line(Orientation::Diagonal, 0.0, (0.0, n))],
        InitialKind::Rainbow => vec![line(Orientation::Antidiagonal, n, (0.0, n))],
        InitialKind::Bridge => vec![
            line(Orientation::Diagonal, n / 2.0, (n / 2.0, n)),
            line(Orientation::Diagonal, -n / 2.0, (0.0, n / 2.0)),
        ],
    };
    FrontSet {
        n,
        boundary: p.boundary,
        t: 0.0,
        lines,
    }
}

/// Map from the base square into tile `m` along one axis: `(origin, sign)`
/// so that `x ↦ origin + sign · x`.
fn tile_map(m: i64, n: f64, boundary: Boundary) -> (f64, f64) {
    match boundary {
        Boundary::Periodic => (m as f64 * n, 1.0),
        Boundary::Open => {
            if m.rem_euclid(2) == 0 {
                (m as f64 * n, 1.0)
            } else {
                ((m + 1) as f64 * n, -1.0)
            }
        }
    }
}

/// x-range where a line stays inside `[0, n]²`.
fn square_range(orientation: Orientation, offset: f64, n: f64) -> (f64, f64) {
    match orientation {
        Orientation::Diagonal => (offset.max(0.0), (n + offset).min(n)),
        Orientation::Antidiagonal => ((offset - n).max(0.0), offset.min(n)),
    }
}

/// Unit displacement of a point on a line whose offset grows by one.
fn normal_step(orientation: Orientation) -> (f64, f64) {
    match orientation {
        Orientation::Diagonal => (0.5, -0.5),
        Orientation::Antidiagonal => (0.5, 0.5),
    }
}

pub fn propagate_fronts(f: &FrontSet, t: f64, p: &QppParams) -> Result<FrontSet> {
    if !t.is_finite() || t < f.t {
        return Err(Error::InvalidArgument(format!(
            "cannot propagate fronts from t = {} back to t = {t}",
            f.t
        )));
    }
    if t == f.t {
        return Ok(f.clone());
    }
    let n = f.n;
    let shift = p.v * (t - f.t);
    let reach = (shift / (2.0 * n)).ceil() as i64 + 1;
    let tol = 1e-12 * n.max(1.0);

    let mut out = Vec::new();
    for line in &f.lines {
        let copies: &[(i8, f64)] = if line.direction == 0 {
            &[(1, 0.5), (-1, 0.5)]
        } else if line.direction > 0 {
            &[(1, 1.0)]
        } else {
            &[(-1, 1.0)]
        };
        let p0 = (line.extent.0, line.y_at(line.extent.0));
        let p1 = (line.extent.1, line.y_at(line.extent.1));
        for &(dir, frac) in copies {
            let step = normal_step(line.orientation);
            let vel = (dir as f64 * step.0, dir as f64 * step.1);
            for mx in -reach..=reach {
                let (ox, sx) = tile_map(mx, n, f.boundary);
                for my in -reach..=reach {
                    let (oy, sy) = tile_map(my, n, f.boundary);
                    let map = |(x, y): (f64, f64)| {
                        (
                            ox + sx * x + shift * sx * vel.0,
                            oy + sy * y + shift * sy * vel.1,
                        )
                    };
                    let (q0, q1) = (map(p0), map(p1));
                    let orientation = if sx * sy > 0.0 {
                        line.orientation
                    } else {
                        match line.orientation {
                            Orientation::Diagonal => Orientation::Antidiagonal,
                            Orientation::Antidiagonal => Orientation::Diagonal,
                        }
                    };
                    let (offset, rate) = match orientation {
                        Orientation::Diagonal => (q0.0 - q0.1, sx * vel.0 - sy * vel.1),
                        Orientation::Antidiagonal => (q0.0 + q0.1, sx * vel.0 + sy * vel.1),
                    };
                    let (lo, hi) = square_range(orientation, offset, n);
                    let x0 = q0.0.min(q1.0).max(lo);
                    let x1 = q0.0.max(q1.0).min(hi);
                    if x1 - x0 > tol {
                        out.push(DeltaLine {
                            orientation,
                            offset,
                            weight: line.weight * frac,
                            direction: if rate > 0.0 { 1 } else { -1 },
                            extent: (x0, x1),
                        });
                    }
                }
            }
        }
    }
    Ok(FrontSet {
        n,
        boundary: f.boundary,
        t,
        lines: merge_segments(out, tol),
    })
}

/// Join collinear segments that touch end to end.
fn merge_segments(mut lines: Vec<DeltaLine>, tol: f64) -> Vec<DeltaLine> {
    lines.sort_by(|a, b| {
        a.orientation
            .cmp(&b.orientation)
            .then(a.direction.cmp(&b.direction))
            .then(a.offset.total_cmp(&b.offset))
            .then(a.extent.0.total_cmp(&b.extent.0))
    });
    let mut merged: Vec<DeltaLine> = Vec::with_capacity(lines.len());
    for line in lines {
        if let Some(last) = merged.last_mut() {
            let same_line = last.orientation == line.orientation
                && last.direction == line.direction
                && (last.offset - line.offset).abs() <= tol
                && (last.weight - line.weight).abs() <= 1e-12 * last.weight.abs().max(1.0);
            if same_line && (line.extent.0 - last.extent.1).abs() <= tol {
                last.extent.1 = line.extent.1;
                continue;
            }
        }
        merged.push(line);
    }
    merged
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Entropy of the union of disjoint intervals `[a_k, b_k)` as the total
/// link weight joining it to its complement.
pub fn integrate_fronts_set(f: &FrontSet, intervals: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for line in &f.lines {
        let mut inside = 0.0;
        let mut internal = 0.0;
        for &xi in intervals {
            inside += overlap(line.extent, xi);
            for &yi in intervals {
                // x-range mapping into yi
                let pre = match line.orientation {
                    Orientation::Diagonal => (yi.0 + line.offset, yi.1 + line.offset),
                    Orientation::Antidiagonal => (line.offset - yi.1, line.offset - yi.0),
                };
                internal += overlap(overlap_range(line.extent, xi), pre);
            }
        }
        total += line.weight * (inside - internal);
    }
    total
}

fn overlap_range(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo)
    }
}

/// Entropy of the block `[a, b)`.
pub fn integrate_fronts(f: &FrontSet, a: f64, b: f64) -> Result<f64> {
    if !(0.0 <= a && a < b && b <= f.n) {
        return Err(Error::InvalidArgument(format!(
            "block [{a}, {b}) invalid for system of size {}",
            f.n
        )));
    }
    Ok(integrate_fronts_set(f, &[(a, b)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpp::{
        bridge_entropy, qpp_short_range_entropy, rainbow_central_entropy, rainbow_lateral_entropy,
    };

    fn params(b: Boundary) -> QppParams {
        QppParams::new(1.0, 2.0, 128.0, b).unwrap()
    }

    fn has_line(f: &FrontSet, o: Orientation, c: f64, w: f64, extent: (f64, f64)) -> bool {
        f.lines.iter().any(|l| {
            l.orientation == o
                && (l.offset - c).abs() < 1e-9
                && (l.weight - w).abs() < 1e-12
                && (l.extent.0 - extent.0).abs() < 1e-9
                && (l.extent.1 - extent.1).abs() < 1e-9
        })
    }

    #[test]
    fn empty_set_integrates_to_zero() {
        let f = FrontSet::empty(10.0, Boundary::Open, 0.0);
        assert_eq!(integrate_fronts(&f, 2.0, 5.0).unwrap(), 0.0);
        assert!(integrate_fronts(&f, 5.0, 5.0).is_err());
        assert!(integrate_fronts(&f, 0.0, 11.0).is_err());
    }

    #[test]
    fn initial_sets() {
        let p = params(Boundary::Open);
        let d = initial_fronts(InitialKind::Dimer, &p);
        assert!(has_line(&d, Orientation::Diagonal, 0.0, 1.0, (0.0, 128.0)));
        let r = initial_fronts(InitialKind::Rainbow, &p);
        assert!(has_line(
            &r,
            Orientation::Antidiagonal,
            128.0,
            1.0,
            (0.0, 128.0)
        ));
        let b = initial_fronts(InitialKind::Bridge, &params(Boundary::Periodic));
        assert!(has_line(
            &b,
            Orientation::Diagonal,
            64.0,
            1.0,
            (64.0, 128.0)
        ));
        assert!(has_line(&b, Orientation::Diagonal, -64.0, 1.0, (0.0, 64.0)));
    }

    #[test]
    fn zero_time_step_is_identity() {
        let p = params(Boundary::Open);
        let r = initial_fronts(InitialKind::Rainbow, &p);
        assert_eq!(propagate_fronts(&r, 0.0, &p).unwrap(), r);
        assert!(propagate_fronts(&propagate_fronts(&r, 2.0, &p).unwrap(), 1.0, &p).is_err());
    }

    #[test]
    fn rainbow_splits_into_three_fronts_and_mirror() {
        let p = params(Boundary::Open);
        let t = 10.0;
        let f = propagate_fronts(&initial_fronts(InitialKind::Rainbow, &p), t, &p).unwrap();
        let vt = p.v * t;
        assert_eq!(f.lines.len(), 4, "{:?}", f.lines);
        assert!(has_line(
            &f,
            Orientation::Antidiagonal,
            128.0 - vt,
            0.5,
            (0.0, 128.0 - vt)
        ));
        assert!(has_line(
            &f,
            Orientation::Antidiagonal,
            128.0 + vt,
            0.5,
            (vt, 128.0)
        ));
        // reflected front x − y = N − vt and its mirror image
        assert!(has_line(
            &f,
            Orientation::Diagonal,
            128.0 - vt,
            0.5,
            (128.0 - vt, 128.0)
        ));
        assert!(has_line(
            &f,
            Orientation::Diagonal,
            vt - 128.0,
            0.5,
            (0.0, vt)
        ));
    }

    #[test]
    fn bridge_two_travelling_waves() {
        let p = params(Boundary::Periodic);
        let t = 7.0;
        let f = propagate_fronts(&initial_fronts(InitialKind::Bridge, &p), t, &p).unwrap();
        let vt = p.v * t;
        for l in &f.lines {
            assert_eq!(l.orientation, Orientation::Diagonal);
            assert!((l.weight - 0.5).abs() < 1e-12);
            let c = (l.offset - 64.0).rem_euclid(128.0);
            assert!(
                (c - vt).abs() < 1e-9 || (c - (128.0 - vt)).abs() < 1e-9,
                "offset {}",
                l.offset
            );
        }
        assert!((f.total_weight() - 128.0).abs() < 1e-9);
    }

    #[test]
    fn weight_conserved_on_torus() {
        let p = params(Boundary::Periodic);
        for kind in [InitialKind::Dimer, InitialKind::Bridge] {
            let f0 = initial_fronts(kind, &p);
            for t in [0.3, 5.0, 31.0, 64.0, 100.0, 250.0] {
                let f = propagate_fronts(&f0, t, &p).unwrap();
                assert!(
                    (f.total_weight() - f0.total_weight()).abs() < 1e-9,
                    "{kind:?} t={t}"
                );
            }
        }
    }

    #[test]
    fn propagation_composes() {
        for b in [Boundary::Open, Boundary::Periodic] {
            let p = params(b);
            let f0 = initial_fronts(InitialKind::Rainbow, &p);
            let direct = propagate_fronts(&f0, 50.0, &p).unwrap();
            let staged =
                propagate_fronts(&propagate_fronts(&f0, 13.0, &p).unwrap(), 50.0, &p).unwrap();
            for (a, c) in [(0.0, 20.0), (10.0, 90.0), (64.0, 128.0), (3.0, 4.0)] {
                let x = integrate_fronts(&direct, a, c).unwrap();
                let y = integrate_fronts(&staged, a, c).unwrap();
                assert!((x - y).abs() < 1e-9, "{b:?} [{a},{c}): {x} vs {y}");
            }
        }
    }

    #[test]
    fn swap_symmetry_is_preserved() {
        for (kind, b) in [
            (InitialKind::Rainbow, Boundary::Open),
            (InitialKind::Dimer, Boundary::Periodic),
            (InitialKind::Bridge, Boundary::Periodic),
        ] {
            let p = params(b);
            for t in [0.0, 3.5, 20.0, 45.0] {
                let f = propagate_fronts(&initial_fronts(kind, &p), t, &p).unwrap();
                let swapped = FrontSet {
                    lines: f.lines.iter().map(DeltaLine::swapped).collect(),
                    ..f.clone()
                };
                // compare through block integrals, which see the whole field
                for (a, c) in [(0.0, 17.0), (20.0, 70.0), (100.0, 128.0)] {
                    let x = integrate_fronts(&f, a, c).unwrap();
                    let y = integrate_fronts(&swapped, a, c).unwrap();
                    assert!((x - y).abs() < 1e-9);
                }
                let mut lhs = f.canonical();
                let mut rhs = swapped.canonical();
                lhs.retain(|l| l.projected_length() > 1e-9);
                rhs.retain(|l| l.projected_length() > 1e-9);
                assert_eq!(lhs.len(), rhs.len(), "{kind:?} t={t}");
            }
        }
    }

    #[test]
    fn complement_symmetry_on_torus() {
        let p = params(Boundary::Periodic);
        for kind in [InitialKind::Dimer, InitialKind::Bridge] {
            for t in [0.0, 4.0, 19.0, 40.0] {
                let f = propagate_fronts(&initial_fronts(kind, &p), t, &p).unwrap();
                for (a, b) in [(0.0, 10.0), (30.0, 90.0), (5.0, 128.0)] {
                    let s = integrate_fronts(&f, a, b).unwrap();
                    let comp = integrate_fronts_set(&f, &[(0.0, a), (b, 128.0)]);
                    assert!((s - comp).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn dimer_revival_on_torus() {
        let p = params(Boundary::Periodic);
        let f0 = initial_fronts(InitialKind::Dimer, &p);
        let ell = 20.0;
        for &t in &[2.0, 9.0, 30.0, 50.0, 60.0] {
            let f = propagate_fronts(&f0, t, &p).unwrap();
            let vt = p.v * t;
            let expect = vt.min(ell).min(128.0 - vt).max(0.0);
            assert!(
                (integrate_fronts(&f, 0.0, ell).unwrap() - expect).abs() < 1e-9,
                "t={t}"
            );
        }
    }

    // Grid consistency between the front engine and each closed form.
    #[test]
    fn closed_forms_match_front_integrals() {
        let n = 128.0;
        let open = params(Boundary::Open);
        let per = params(Boundary::Periodic);
        let rainbow = initial_fronts(InitialKind::Rainbow, &open);
        let dimer = initial_fronts(InitialKind::Dimer, &per);
        let bridge = initial_fronts(InitialKind::Bridge, &per);
        for i in 0..10 {
            for k in 0..10 {
                let t = 0.3 + 6.1 * k as f64;
                let vt = 2.0 * t;
                let a = 1.0 + 12.3 * i as f64;
                let fr = propagate_fronts(&rainbow, t, &open).unwrap();
                if vt < n {
                    let s = integrate_fronts(&fr, 0.0, a).unwrap();
                    assert!((s - rainbow_lateral_entropy(a, t, &open).unwrap()).abs() < 1e-9);
                }
                let c = 0.5 + 6.3 * i as f64;
                if vt < n {
                    let s = integrate_fronts(&fr, c, n - c).unwrap();
                    let e = rainbow_central_entropy(c, t, &open).unwrap();
                    assert!((s - e).abs() < 1e-9, "central a={c} t={t}: {s} vs {e}");
                }
                let ell = 1.0 + 6.0 * i as f64;
                if vt < n - ell {
                    let fd = propagate_fronts(&dimer, t, &per).unwrap();
                    let s = integrate_fronts(&fd, 10.0, 10.0 + ell).unwrap();
                    assert!((s - qpp_short_range_entropy(ell, t, &per)).abs() < 1e-9);
                }
                if vt < n / 2.0 {
                    let fb = propagate_fronts(&bridge, t, &per).unwrap();
                    let s = integrate_fronts(&fb, 7.0, 7.0 + ell).unwrap();
                    assert!((s - bridge_entropy(ell, t, &per)).abs() < 1e-9);
                }
            }
        }
    }
}
