//! Brute-force many-body oracle.
//!
//! States live in the full `2^N` occupation basis, with bit `i` of the index
//! marking site `i` occupied and operators ordered by ascending site,
//! `|n⟩ = (c†_0)^{n_0} (c†_1)^{n_1} … |0⟩`. Evolution diagonalizes the dense
//! many-body Hamiltonian inside each particle-number sector. Nothing here
//! goes through correlation matrices, so it checks the Gaussian code
//! independently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::lattice::SingleParticleHamiltonian;
use crate::{Error, Result};

pub const MAX_ORACLE_SITES: usize = 12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// How to build the initial many-body state.
#[derive(Debug, Clone)]
pub enum FockInitial<'a> {
    /// Many-body ground state of `h` with `n_particles` fermions.
    GroundState {
        h: &'a SingleParticleHamiltonian,
        n_particles: usize,
    },
    /// Explicit product of bridge orbitals on `n` sites.
    Bridge { n: usize },
    /// Occupation-number basis state.
    Product(Vec<bool>),
    /// Arbitrary amplitudes on the `2^n` basis.
    Vector {
        n: usize,
        amplitudes: Vec<Complex64>,
    },
}

#[derive(Debug, Clone)]
pub struct FockState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

fn parity_below(state: usize, site: usize) -> f64 {
    if (state & ((1usize << site) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c†_i c_j |state⟩` as `(sign, new_state)`, or `None` if it vanishes.
fn hop(state: usize, i: usize, j: usize) -> Option<(f64, usize)> {
    if state & (1 << j) == 0 {
        return None;
    }
    let s1 = parity_below(state, j);
    let mid = state & !(1 << j);
    if mid & (1 << i) != 0 {
        return None;
    }
    let s2 = parity_below(mid, i);
    Some((s1 * s2, mid | (1 << i)))
}

/// `c†_i |state⟩`.
fn create(state: usize, i: usize) -> Option<(f64, usize)> {
    if state & (1 << i) != 0 {
        return None;
    }
    Some((parity_below(state, i), state | (1 << i)))
}

fn sector_states(n: usize, particles: u32) -> Vec<usize> {
    (0..1usize << n)
        .filter(|s| s.count_ones() == particles)
        .collect()
}

/// Dense many-body Hamiltonian restricted to the given basis states.
fn sector_hamiltonian(h: &SingleParticleHamiltonian, states: &[usize]) -> DMatrix<f64> {
    let n = h.n();
    let dim = states.len();
    let mut index = vec![usize::MAX; 1 << n];
    for (k, &s) in states.iter().enumerate() {
        index[s] = k;
    }
    let hm = h.matrix();
    let mut out = DMatrix::zeros(dim, dim);
    for (col, &s) in states.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let hij = hm[(i, j)];
                if hij == 0.0 {
                    continue;
                }
                if let Some((sign, t)) = hop(s, i, j) {
                    out[(index[t], col)] += sign * hij;
                }
            }
        }
    }
    out
}

impl FockState {
    pub fn prepare(initial: &FockInitial<'_>) -> Result<Self> {
        match initial {
            FockInitial::GroundState { h, n_particles } => {
                let n = h.n();
                check_size(n)?;
                if *n_particles > n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: *n_particles,
                    });
                }
                let states = sector_states(n, *n_particles as u32);
                let hs = sector_hamiltonian(h, &states);
                let eig = hs.symmetric_eigen();
                let mut order: Vec<usize> = (0..states.len()).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                if order.len() > 1 {
                    let gap = eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]];
                    if gap <= super::GAP_THRESHOLD {
                        return Err(Error::DegenerateGroundState {
                            gap,
                            filling: *n_particles,
                            threshold: super::GAP_THRESHOLD,
                        });
                    }
                }
                let v = eig.eigenvectors.column(order[0]);
                let mut amplitudes = vec![ZERO; 1 << n];
                for (k, &s) in states.iter().enumerate() {
                    amplitudes[s] = Complex64::new(v[k], 0.0);
                }
                Ok(FockState { n, amplitudes })
            }
            FockInitial::Bridge { n } => {
                let n = *n;
                check_size(n)?;
                if n == 0 || n % 4 != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "bridge state needs N divisible by 4, got {n}"
                    )));
                }
                let half = n / 2;
                let mut amplitudes = vec![ZERO; 1 << n];
                amplitudes[0] = Complex64::new(1.0, 0.0);
                let norm = std::f64::consts::FRAC_1_SQRT_2;
                // apply (c†_k + (-1)^k c†_{k+N/2}) / √2 for k = 1..N/2
                for k in 0..half {
                    let partner = if (k + 1) % 2 == 0 { norm } else { -norm };
                    let mut next = vec![ZERO; 1 << n];
                    for (s, &a) in amplitudes.iter().enumerate() {
                        if a == ZERO {
                            continue;
                        }
                        if let Some((sign, t)) = create(s, k) {
                            next[t] += a * (sign * norm);
                        }
                        if let Some((sign, t)) = create(s, k + half) {
                            next[t] += a * (sign * partner);
                        }
                    }
                    amplitudes = next;
                }
                Ok(FockState { n, amplitudes })
            }
            FockInitial::Product(occ) => {
                let n = occ.len();
                check_size(n)?;
                let idx = occ
                    .iter()
                    .enumerate()
                    .filter(|(_, &o)| o)
                    .fold(0usize, |acc, (i, _)| acc | (1 << i));
                let mut amplitudes = vec![ZERO; 1 << n];
                amplitudes[idx] = Complex64::new(1.0, 0.0);
                Ok(FockState { n, amplitudes })
            }
            FockInitial::Vector { n, amplitudes } => {
                check_size(*n)?;
                if amplitudes.len() != 1 << n {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << n,
                        found: amplitudes.len(),
                    });
                }
                let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::InvalidState("state vector has zero norm".into()));
                }
                let state = FockState {
                    n: *n,
                    amplitudes: amplitudes.iter().map(|a| a / norm).collect(),
                };
                state.particle_sector()?;
                Ok(state)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// The unique particle number carried by the state.
    pub fn particle_sector(&self) -> Result<u32> {
        let mut sector = None;
        for (s, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() > 1e-24 {
                let p = s.count_ones();
                match sector {
                    None => sector = Some(p),
                    Some(q) if q != p => {
                        return Err(Error::InvalidState(
                            "state mixes particle-number sectors".into(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        sector.ok_or_else(|| Error::InvalidState("state vector vanishes".into()))
    }

    /// `e^{-iHt} |ψ⟩` with `H = Σ h_ij c†_i c_j`.
    pub fn evolve(&self, h: &SingleParticleHamiltonian, t: f64) -> Result<FockState> {
        if h.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: h.n(),
            });
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let sector = self.particle_sector()?;
        let states = sector_states(self.n, sector);
        let hs = sector_hamiltonian(h, &states);
        let eig = hs.symmetric_eigen();
        let w = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let psi = DVector::from_iterator(states.len(), states.iter().map(|&s| self.amplitudes[s]));
        let mut coeff = w.adjoint() * psi;
        for (k, c) in coeff.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
        }
        let psi_t = w * coeff;
        let mut amplitudes = vec![ZERO; 1 << self.n];
        for (k, &s) in states.iter().enumerate() {
            amplitudes[s] = psi_t[k];
        }
        Ok(FockState {
            n: self.n,
            amplitudes,
        })
    }

    /// `<c†_i c_j>` evaluated on the state vector.
    pub fn correlations(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let mut c = DMatrix::from_element(n, n, ZERO);
        for (s, a) in self.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    if let Some((sign, t)) = hop(s, i, j) {
                        c[(i, j)] += self.amplitudes[t].conj() * a * sign;
                    }
                }
            }
        }
        c
    }

    /// Von Neumann entropy (nats) of the reduced state on `block`.
    pub fn entropy(&self, block: &[usize]) -> Result<f64> {
        let n = self.n;
        let mut in_block = vec![false; n];
        for &i in block {
            if i >= n {
                return Err(Error::InvalidBlock(format!(
                    "site {i} outside chain of {n}"
                )));
            }
            if in_block[i] {
                return Err(Error::InvalidBlock(format!("site {i} listed twice")));
            }
            in_block[i] = true;
        }
        if block.is_empty() {
            return Err(Error::InvalidBlock("empty block".into()));
        }
        let a_sites: Vec<usize> = (0..n).filter(|&i| in_block[i]).collect();
        let b_sites: Vec<usize> = (0..n).filter(|&i| !in_block[i]).collect();
        let (da, db) = (1usize << a_sites.len(), 1usize << b_sites.len());

        // Reorder to (block sites, complement sites); moving each block
        // operator left past occupied complement operators costs a sign.
        let mut psi = DMatrix::from_element(da, db, ZERO);
        for (s, a) in self.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let mut swaps = 0u32;
            let mut ia = 0usize;
            let mut ib = 0usize;
            let mut occupied_b_so_far = 0u32;
            let (mut ka, mut kb) = (0usize, 0usize);
            for site in 0..n {
                let occ = s & (1 << site) != 0;
                if in_block[site] {
                    if occ {
                        swaps += occupied_b_so_far;
                        ia |= 1 << ka;
                    }
                    ka += 1;
                } else {
                    if occ {
                        occupied_b_so_far += 1;
                        ib |= 1 << kb;
                    }
                    kb += 1;
                }
            }
            let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
            psi[(ia, ib)] = a * sign;
        }
        let rho = if da <= db {
            &psi * psi.adjoint()
        } else {
            psi.adjoint() * &psi
        };
        let ev = rho.symmetric_eigenvalues();
        Ok(ev.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_SITES {
        Err(Error::TooLarge(n, MAX_ORACLE_SITES))
    } else {
        Ok(())
    }
}

/// Entropy of `block` at time `t` after preparing `initial` and evolving
/// with `quench_h`, computed entirely in Fock space.
pub fn fock_oracle_entropy(
    initial: &FockInitial<'_>,
    quench_h: &SingleParticleHamiltonian,
    block: &[usize],
    t: f64,
) -> Result<f64> {
    FockState::prepare(initial)?
        .evolve(quench_h, t)?
        .entropy(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{hamiltonian, Boundary, CouplingKind, CouplingSpec};
    use std::f64::consts::LN_2;

    fn chain(kind: CouplingKind, n: usize, b: Boundary) -> SingleParticleHamiltonian {
        hamiltonian(&CouplingSpec::new(kind, n, b).unwrap()).unwrap()
    }

    #[test]
    fn product_states_have_no_entanglement() {
        let init = FockInitial::Product(vec![true, false, false, true, true]);
        let s = FockState::prepare(&init).unwrap();
        for block in [vec![0], vec![1, 2], vec![0, 3], vec![0, 1, 2, 3]] {
            assert!(s.entropy(&block).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn bridge_single_site_is_maximally_mixed() {
        let s = FockState::prepare(&FockInitial::Bridge { n: 4 }).unwrap();
        assert!((s.entropy(&[0]).unwrap() - LN_2).abs() < 1e-12);
        assert!((s.entropy(&[0, 1]).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        assert!(s.entropy(&[0, 2]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bridge_correlations_match_orbital_signs() {
        let s = FockState::prepare(&FockInitial::Bridge { n: 8 }).unwrap();
        let c = s.correlations();
        let expect = crate::gaussian::bridge_state_correlations(8).unwrap();
        let d = (c - expect.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn norm_is_preserved() {
        let h0 = chain(CouplingKind::Homogeneous, 6, Boundary::Periodic);
        let hd = chain(CouplingKind::Dimer { delta: 0.5 }, 6, Boundary::Open);
        let s = FockState::prepare(&FockInitial::GroundState {
            h: &hd,
            n_particles: 3,
        })
        .unwrap()
        .evolve(&h0, 2.3)
        .unwrap();
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_and_mixed_inputs() {
        assert!(matches!(
            FockState::prepare(&FockInitial::Product(vec![false; 13])),
            Err(Error::TooLarge(13, 12))
        ));
        let mut amps = vec![ZERO; 4];
        amps[0] = Complex64::new(1.0, 0.0);
        amps[1] = Complex64::new(1.0, 0.0);
        assert!(FockState::prepare(&FockInitial::Vector {
            n: 2,
            amplitudes: amps
        })
        .is_err());
        let s = FockState::prepare(&FockInitial::Bridge { n: 4 }).unwrap();
        assert!(s.entropy(&[]).is_err());
        assert!(s.entropy(&[4]).is_err());
        assert!(s.entropy(&[1, 1]).is_err());
    }

    #[test]
    fn degenerate_many_body_ground_state_is_rejected() {
        let h = chain(CouplingKind::Homogeneous, 8, Boundary::Periodic);
        assert!(matches!(
            FockState::prepare(&FockInitial::GroundState {
                h: &h,
                n_particles: 4
            }),
            Err(Error::DegenerateGroundState { .. })
        ));
    }

    #[test]
    fn complement_entropies_agree() {
        let hd = chain(CouplingKind::Dimer { delta: 0.4 }, 8, Boundary::Open);
        let h0 = chain(CouplingKind::Homogeneous, 8, Boundary::Open);
        let s = FockState::prepare(&FockInitial::GroundState {
            h: &hd,
            n_particles: 4,
        })
        .unwrap()
        .evolve(&h0, 1.1)
        .unwrap();
        let a = s.entropy(&[0, 3, 4]).unwrap();
        let b = s.entropy(&[1, 2, 5, 6, 7]).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
