//! Block entropies and entanglement links.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::gaussian::CorrelationMatrix;
use crate::lattice::Boundary;
use crate::{Error, Result};

/// Eigenvalues of a block correlation matrix may stray this far outside
/// `[0, 1]` before the state is declared corrupted.
const OCCUPATION_TOL: f64 = 1e-8;

fn validate_block(n: usize, block: &[usize]) -> Result<Vec<usize>> {
    if block.is_empty() {
        return Err(Error::InvalidBlock("empty block".into()));
    }
    let mut sites = block.to_vec();
    sites.sort_unstable();
    if let Some(w) = sites.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidBlock(format!("site {} listed twice", w[0])));
    }
    if let Some(&last) = sites.last() {
        if last >= n {
            return Err(Error::InvalidBlock(format!(
                "site {last} outside chain of {n} sites"
            )));
        }
    }
    Ok(sites)
}

fn binary_entropy(nu: f64) -> Result<f64> {
    if !(-OCCUPATION_TOL..=1.0 + OCCUPATION_TOL).contains(&nu) {
        return Err(Error::InvalidState(format!(
            "block occupation eigenvalue {nu} outside [0, 1]"
        )));
    }
    let p = nu.clamp(0.0, 1.0);
    let mut s = 0.0;
    if p > 0.0 {
        s -= p * p.ln();
    }
    if p < 1.0 {
        s -= (1.0 - p) * (1.0 - p).ln();
    }
    Ok(s)
}

fn entropy_of_sites(c: &DMatrix<Complex64>, real: bool, sites: &[usize]) -> Result<f64> {
    let k = sites.len();
    let eigs: Vec<f64> = if real {
        let sub = DMatrix::from_fn(k, k, |a, b| c[(sites[a], sites[b])].re);
        sub.symmetric_eigenvalues().iter().copied().collect()
    } else {
        let sub = DMatrix::from_fn(k, k, |a, b| c[(sites[a], sites[b])]);
        sub.symmetric_eigenvalues().iter().copied().collect()
    };
    let mut s = 0.0;
    for nu in eigs {
        s += binary_entropy(nu)?;
    }
    Ok(s)
}

/// Von Neumann entropy (nats) of an arbitrary set of sites, from the
/// eigenvalues of the restricted correlation matrix.
pub fn block_entropy(c: &CorrelationMatrix, block: &[usize]) -> Result<f64> {
    let sites = validate_block(c.n(), block)?;
    entropy_of_sites(c.matrix(), c.is_real(), &sites)
}

/// Entropies of every contiguous block `[a, b)`, `0 <= a <= b <= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTable {
    n: usize,
    t: f64,
    // row a holds b = a..=n
    values: Vec<f64>,
}

impl EntropyTable {
    fn offset(n: usize, a: usize) -> usize {
        // Σ_{r<a} (n + 1 - r)
        a * (n + 1) - a * (a.saturating_sub(1)) / 2
    }

    /// Build a table from an entropy function of the block `[a, b)`.
    /// Entries with `a == b` are fixed to zero and never requested.
    pub fn from_fn(n: usize, t: f64, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for a in 0..=n {
            values.push(0.0);
            for b in a + 1..=n {
                values.push(f(a, b));
            }
        }
        EntropyTable { n, t, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Entropy of the block `[a, b)`.
    ///
    /// # Panics
    /// If `a > b` or `b > N`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        assert!(
            a <= b && b <= self.n,
            "block [{a}, {b}) outside table of {}",
            self.n
        );
        self.values[Self::offset(self.n, a) + (b - a)]
    }

    /// All `(a, b, S)` with `a < b`, sorted by `(a, b)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |a| (a + 1..=self.n).map(move |b| (a, b, self.get(a, b))))
    }
}

/// Idempotency defect below which a state is treated as pure.
const PURITY_TOL: f64 = 1e-9;

pub fn contiguous_entropy_table(c: &CorrelationMatrix, t: f64) -> Result<EntropyTable> {
    let n = c.n();
    let real = c.is_real();
    let m = c.matrix();
    // a pure state has S(A) = S(complement), so long blocks are computed
    // through their shorter complement
    let pure = c.idempotency_defect() < PURITY_TOL;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (a + 1..=n)
                .map(|b| {
                    let sites: Vec<usize> = if pure && 2 * (b - a) > n {
                        (0..a).chain(b..n).collect()
                    } else {
                        (a..b).collect()
                    };
                    if sites.is_empty() {
                        return Ok(0.0);
                    }
                    entropy_of_sites(m, real, &sites)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for row in rows {
        values.push(0.0);
        values.extend(row);
    }
    values.push(0.0);
    Ok(EntropyTable { n, t, values })
}

/// Symmetric entanglement-link matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ElMatrix {
    t: f64,
    j: DMatrix<f64>,
}

impl ElMatrix {
    pub fn new(t: f64, j: DMatrix<f64>) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::DimensionMismatch {
                expected: j.nrows(),
                found: j.ncols(),
            });
        }
        let n = j.nrows();
        for i in 0..n {
            if j[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(
                    "EL matrix diagonal must be zero".into(),
                ));
            }
            for k in 0..i {
                if j[(i, k)] != j[(k, i)] {
                    return Err(Error::InvalidArgument("EL matrix must be symmetric".into()));
                }
            }
        }
        Ok(ElMatrix { t, j })
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.j[(i, j)]
    }

    /// Most negative entry (0 if none), reported rather than clamped.
    pub fn min_entry(&self) -> f64 {
        self.j.iter().copied().fold(0.0, f64::min)
    }
}

/// `J_ij = ½ (S[i,j) − S[i+1,j) − S[i,j+1) + S[i+1,j+1))` for `i < j`.
pub fn el_matrix(table: &EntropyTable) -> ElMatrix {
    let n = table.n();
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in i + 1..n {
            let v = 0.5
                * (table.get(i, k) - table.get(i + 1, k) - table.get(i, k + 1)
                    + table.get(i + 1, k + 1));
            j[(i, k)] = v;
            j[(k, i)] = v;
        }
    }
    ElMatrix { t: table.t(), j }
}

/// `S_A = Σ_{i∈A, j∉A} J_ij`.
pub fn reconstruct_entropy(el: &ElMatrix, block: &[usize]) -> Result<f64> {
    let n = el.n();
    let sites = validate_block(n, block)?;
    let mut inside = vec![false; n];
    for &i in &sites {
        inside[i] = true;
    }
    let mut s = 0.0;
    for &i in &sites {
        for k in 0..n {
            if !inside[k] {
                s += el.j[(i, k)];
            }
        }
    }
    Ok(s)
}

/// Nearest-neighbour links over time.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdiagonalSeries {
    pub times: Vec<f64>,
    /// `links[k][i]` is `J_{i,i+1}` at `times[k]`; for periodic chains the
    /// last entry is the corner link `J_{N-1,0}`.
    pub links: Vec<Vec<f64>>,
}

/// Site pairs of the nearest-neighbour links, in the order used by
/// [`nearest_neighbor_links`].
pub fn link_pairs(n: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n > 2 {
        pairs.push((n - 1, 0));
    }
    pairs
}

pub fn subdiagonal_series(snapshots: &[ElMatrix], boundary: Boundary) -> Result<SubdiagonalSeries> {
    let Some(first) = snapshots.first() else {
        return Ok(SubdiagonalSeries {
            times: vec![],
            links: vec![],
        });
    };
    let n = first.n();
    if let Some(bad) = snapshots.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n(),
        });
    }
    if snapshots.windows(2).any(|w| w[0].t() >= w[1].t()) {
        return Err(Error::InvalidArgument(
            "snapshot times must be strictly increasing".into(),
        ));
    }
    let pairs = link_pairs(n, boundary);
    Ok(SubdiagonalSeries {
        times: snapshots.iter().map(ElMatrix::t).collect(),
        links: snapshots
            .iter()
            .map(|s| pairs.iter().map(|&(i, k)| s.get(i, k)).collect())
            .collect(),
    })
}

/// Nearest-neighbour links straight from the state, without the full
/// table. For a pure state `J_{i,i+1} = ½ (S_i + S_{i+1} − S_{i,i+1})`,
/// half the mutual information of the two sites, which is what the
/// finite-difference formula reduces to.
pub fn nearest_neighbor_links(c: &CorrelationMatrix, boundary: Boundary) -> Result<Vec<f64>> {
    let n = c.n();
    let real = c.is_real();
    let m = c.matrix();
    let single: Vec<f64> = (0..n)
        .map(|i| entropy_of_sites(m, real, &[i]))
        .collect::<Result<_>>()?;
    link_pairs(n, boundary)
        .into_iter()
        .map(|(i, k)| {
            let pair = if i < k { [i, k] } else { [k, i] };
            let s2 = entropy_of_sites(m, real, &pair)?;
            Ok(0.5 * (single[i] + single[k] - s2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{bridge_state_correlations, half_filled_ground_state, GapPolicy};
    use crate::lattice::{hamiltonian, CouplingKind, CouplingSpec};
    use std::f64::consts::LN_2;

    fn gs(kind: CouplingKind, n: usize, b: Boundary, p: GapPolicy) -> CorrelationMatrix {
        half_filled_ground_state(
            &hamiltonian(&CouplingSpec::new(kind, n, b).unwrap()).unwrap(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn single_bond_is_ln2() {
        let c = CorrelationMatrix::from_real(DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!((block_entropy(&c, &[0]).unwrap() - LN_2).abs() < 1e-14);
    }

    #[test]
    fn product_state_entropies_vanish() {
        let c = CorrelationMatrix::product_state(&[true, false, true, false]);
        for block in [vec![0], vec![1, 2], vec![0, 3], vec![0, 1, 2, 3]] {
            assert_eq!(block_entropy(&c, &block).unwrap(), 0.0);
        }
        let t = contiguous_entropy_table(&c, 0.0).unwrap();
        assert!(t.entries().all(|(_, _, s)| s == 0.0));
        let el = el_matrix(&t);
        assert!(el.matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_blocks() {
        let c = CorrelationMatrix::product_state(&[true, false, true]);
        assert!(block_entropy(&c, &[]).is_err());
        assert!(block_entropy(&c, &[3]).is_err());
        assert!(block_entropy(&c, &[1, 1]).is_err());
    }

    #[test]
    fn corrupted_state_is_reported() {
        let m = DMatrix::from_element(1, 1, Complex64::new(1.2, 0.0));
        let c = CorrelationMatrix::from_trusted(m);
        assert!(matches!(
            block_entropy(&c, &[0]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn bridge_table_counts_cut_bonds() {
        let n = 8;
        let t = contiguous_entropy_table(&bridge_state_correlations(n).unwrap(), 0.0).unwrap();
        for (a, b, s) in t.entries() {
            let len = b - a;
            let expect = len.min(n - len) as f64 * LN_2;
            assert!((s - expect).abs() < 1e-12, "[{a},{b}): {s} vs {expect}");
        }
        assert!(t.get(0, n) < 1e-8);
    }

    #[test]
    fn bridge_links_are_exact() {
        let n = 8;
        let el = el_matrix(
            &contiguous_entropy_table(&bridge_state_correlations(n).unwrap(), 0.0).unwrap(),
        );
        for i in 0..n {
            for j in 0..n {
                let expect = if (i + n / 2) % n == j { LN_2 } else { 0.0 };
                assert!(
                    (el.get(i, j) - expect).abs() < 1e-10,
                    "J[{i}][{j}] = {}",
                    el.get(i, j)
                );
            }
        }
    }

    #[test]
    fn full_dimerization_links() {
        // δ = 1 keeps only the even bonds: 0-based pairs (1,2), (3,4), …, (n-1,0)
        let n = 10;
        let c = gs(
            CouplingKind::Dimer { delta: 1.0 },
            n,
            Boundary::Periodic,
            GapPolicy::Strict,
        );
        let el = el_matrix(&contiguous_entropy_table(&c, 0.0).unwrap());
        for i in 0..n {
            for j in 0..n {
                let paired = (i.min(j) % 2 == 1 && i.abs_diff(j) == 1)
                    || (i.min(j) == 0 && i.max(j) == n - 1);
                let expect = if paired { LN_2 } else { 0.0 };
                assert!(
                    (el.get(i, j) - expect).abs() < 1e-8,
                    "J[{i}][{j}] = {}",
                    el.get(i, j)
                );
            }
        }
    }

    #[test]
    fn reconstruction_of_full_system_is_zero() {
        let c = gs(
            CouplingKind::Dimer { delta: 0.3 },
            8,
            Boundary::Periodic,
            GapPolicy::Strict,
        );
        let el = el_matrix(&contiguous_entropy_table(&c, 0.0).unwrap());
        let all: Vec<usize> = (0..8).collect();
        assert_eq!(reconstruct_entropy(&el, &all).unwrap(), 0.0);
    }

    #[test]
    fn telescoping_identity_on_rainbow() {
        let c = gs(
            CouplingKind::Rainbow { h: 0.7 },
            24,
            Boundary::Open,
            GapPolicy::AllowSmallGap,
        );
        let t = contiguous_entropy_table(&c, 0.0).unwrap();
        let el = el_matrix(&t);
        for (a, b, s) in t.entries() {
            let block: Vec<usize> = (a..b).collect();
            let r = reconstruct_entropy(&el, &block).unwrap();
            assert!((r - s).abs() < 1e-9, "[{a},{b}): {r} vs {s}");
        }
    }

    #[test]
    fn complement_symmetry_and_subadditivity() {
        let n = 20;
        let c = gs(
            CouplingKind::Dimer { delta: 0.5 },
            n,
            Boundary::Open,
            GapPolicy::Strict,
        );
        let t = contiguous_entropy_table(&c, 0.0).unwrap();
        for a in 0..=n {
            assert!((t.get(0, a) - t.get(a, n)).abs() < 1e-8);
        }
        for a in 0..n {
            for b in a..n {
                for cc in b..n {
                    for d in cc..=n {
                        // A = [a,b), B = [b,cc), C = [cc,d) with SSA on AB, BC
                        let lhs = t.get(a, cc) + t.get(b, d);
                        let rhs = t.get(a, d) + t.get(b, cc);
                        assert!(lhs >= rhs - 1e-8);
                    }
                }
            }
        }
        assert!(t.entries().all(|(_, _, s)| s >= -1e-10));
    }

    #[test]
    fn nearest_neighbour_links_match_table() {
        let n = 12;
        let c = gs(
            CouplingKind::Dimer { delta: 0.5 },
            n,
            Boundary::Periodic,
            GapPolicy::Strict,
        );
        let h0 = hamiltonian(
            &CouplingSpec::new(CouplingKind::Homogeneous, n, Boundary::Periodic).unwrap(),
        )
        .unwrap();
        let ct = crate::gaussian::evolve(&c, &h0, 1.7).unwrap();
        let el = el_matrix(&contiguous_entropy_table(&ct, 1.7).unwrap());
        let direct = nearest_neighbor_links(&ct, Boundary::Periodic).unwrap();
        let series = subdiagonal_series(std::slice::from_ref(&el), Boundary::Periodic).unwrap();
        assert_eq!(direct.len(), n);
        for (a, b) in direct.iter().zip(&series.links[0]) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn subdiagonal_series_validation() {
        let a = ElMatrix::new(0.0, DMatrix::zeros(4, 4)).unwrap();
        let b = ElMatrix::new(1.0, DMatrix::zeros(5, 5)).unwrap();
        assert!(subdiagonal_series(&[a.clone(), b], Boundary::Open).is_err());
        let c = ElMatrix::new(0.0, DMatrix::zeros(4, 4)).unwrap();
        assert!(subdiagonal_series(&[a.clone(), c], Boundary::Open).is_err());
        let s = subdiagonal_series(&[a], Boundary::Open).unwrap();
        assert_eq!(s.links[0], vec![0.0; 3]);
    }

    #[test]
    fn zero_hamiltonian_keeps_product_links_zero() {
        let c0 = CorrelationMatrix::product_state(&[true, false, false, true, true, false]);
        let h = crate::lattice::SingleParticleHamiltonian::zero(6, Boundary::Open);
        let p = crate::gaussian::Propagator::new(&c0, &h).unwrap();
        let snaps: Vec<ElMatrix> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&t| el_matrix(&contiguous_entropy_table(&p.at(t).unwrap(), t).unwrap()))
            .collect();
        let s = subdiagonal_series(&snaps, Boundary::Open).unwrap();
        assert!(s.links.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn el_matrix_rejects_asymmetric_input() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        assert!(ElMatrix::new(0.0, m).is_err());
    }

    #[test]
    fn table_indexing() {
        let t = EntropyTable::from_fn(5, 0.0, |a, b| (10 * a + b) as f64);
        for a in 0..=5 {
            assert_eq!(t.get(a, a), 0.0);
            for b in a + 1..=5 {
                assert_eq!(t.get(a, b), (10 * a + b) as f64);
            }
        }
        assert_eq!(t.entries().count(), 15);
    }
}
