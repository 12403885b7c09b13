//! Fermionic Gaussian states as one-body correlation matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::lattice::{diagonalize, ModeBasis, SingleParticleHamiltonian};
use crate::{Error, Result};

pub mod fock;

pub use fock::{fock_oracle_entropy, FockInitial, FockState, MAX_ORACLE_SITES};

const HERMITIAN_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-9;

/// Minimum single-particle gap at the Fermi level for a well-defined
/// ground state.
pub const GAP_THRESHOLD: f64 = 1e-8;

/// `C_ij = <c†_i c_j>` of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    matrix: DMatrix<Complex64>,
}

impl CorrelationMatrix {
    /// Validates hermiticity and that the spectrum lies in `[0, 1]`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let asym = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !(asym <= HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!(
                "correlation matrix is not Hermitian (defect {asym:e})"
            )));
        }
        let c = CorrelationMatrix { matrix };
        let spec = c.spectrum();
        if let Some(bad) = spec
            .iter()
            .find(|&&x| x < -SPECTRUM_TOL || x > 1.0 + SPECTRUM_TOL)
        {
            return Err(Error::InvalidState(format!(
                "occupation eigenvalue {bad} outside [0, 1]"
            )));
        }
        Ok(c)
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    pub(crate) fn from_trusted(matrix: DMatrix<Complex64>) -> Self {
        CorrelationMatrix { matrix }
    }

    /// Site-basis product state; `occupied[i]` fills site `i`.
    pub fn product_state(occupied: &[bool]) -> Self {
        let n = occupied.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &o) in occupied.iter().enumerate() {
            if o {
                m[(i, i)] = Complex64::new(1.0, 0.0);
            }
        }
        CorrelationMatrix { matrix: m }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn particle_number(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Site occupations `<n_i>`.
    pub fn occupations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// Ascending eigenvalues of `C`.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = if self.is_real() {
            self.matrix
                .map(|z| z.re)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect()
        } else {
            self.matrix
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect()
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `max |C² − C|`; zero for a Slater determinant.
    pub fn idempotency_defect(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    /// Fail with [`Error::DegenerateGroundState`] below [`GAP_THRESHOLD`].
    #[default]
    Strict,
    /// Accept tiny gaps. Needed for exponentially graded chains such as the
    /// rainbow, whose Fermi-level gap is far below the threshold but
    /// resolved by the eigensolver.
    AllowSmallGap,
}

/// Slater determinant filling the `n_particles` lowest modes of `h`.
pub fn ground_state_correlations(
    h: &SingleParticleHamiltonian,
    n_particles: usize,
    policy: GapPolicy,
) -> Result<CorrelationMatrix> {
    let n = h.n();
    if n_particles > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: n_particles,
        });
    }
    let basis = diagonalize(h)?;
    if n_particles > 0 && n_particles < n {
        let gap = basis.energies[n_particles] - basis.energies[n_particles - 1];
        if policy == GapPolicy::Strict && gap <= GAP_THRESHOLD {
            return Err(Error::DegenerateGroundState {
                gap,
                filling: n_particles,
                threshold: GAP_THRESHOLD,
            });
        }
    }
    let occ = basis.modes.columns(0, n_particles);
    let c = &occ * occ.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(CorrelationMatrix::from_trusted(
        c.map(|x| Complex64::new(x, 0.0)),
    ))
}

pub fn half_filled_ground_state(
    h: &SingleParticleHamiltonian,
    policy: GapPolicy,
) -> Result<CorrelationMatrix> {
    ground_state_correlations(h, h.n() / 2, policy)
}

/// Valence-bond state pairing site `k` with `k + N/2` through the orbital
/// `(c†_k + (-1)^k c†_{k+N/2}) / √2`, with `k` counted from 1.
pub fn bridge_state_correlations(n: usize) -> Result<CorrelationMatrix> {
    if n == 0 || n % 4 != 0 {
        return Err(Error::InvalidSpec(format!(
            "bridge state needs N divisible by 4, got {n}"
        )));
    }
    let half = n / 2;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..half {
        // 1-based index is k + 1
        let sign = if (k + 1) % 2 == 0 { 0.5 } else { -0.5 };
        m[(k, k)] = Complex64::new(0.5, 0.0);
        m[(k + half, k + half)] = Complex64::new(0.5, 0.0);
        m[(k, k + half)] = Complex64::new(sign, 0.0);
        m[(k + half, k)] = Complex64::new(sign, 0.0);
    }
    Ok(CorrelationMatrix::from_trusted(m))
}

/// Heisenberg evolution `C(t) = e^{iht} C e^{-iht}` under a fixed
/// one-body Hamiltonian. The eigen-decomposition of `h` and the
/// initial state in the mode basis are computed once.
#[derive(Debug, Clone)]
pub struct Propagator {
    basis: ModeBasis,
    initial: CorrelationMatrix,
    /// Real and imaginary parts of `Vᵀ C0 V`.
    mode_re: DMatrix<f64>,
    mode_im: DMatrix<f64>,
}

impl Propagator {
    pub fn new(initial: &CorrelationMatrix, h: &SingleParticleHamiltonian) -> Result<Self> {
        if initial.n() != h.n() {
            return Err(Error::DimensionMismatch {
                expected: h.n(),
                found: initial.n(),
            });
        }
        let basis = diagonalize(h)?;
        let v = &basis.modes;
        let re = initial.matrix.map(|z| z.re);
        let im = initial.matrix.map(|z| z.im);
        let mode_re = v.transpose() * re * v;
        let mode_im = v.transpose() * im * v;
        Ok(Propagator {
            basis,
            initial: initial.clone(),
            mode_re,
            mode_im,
        })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn at(&self, t: f64) -> Result<CorrelationMatrix> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite time {t}")));
        }
        if t == 0.0 {
            return Ok(self.initial.clone());
        }
        let n = self.initial.n();
        let e = &self.basis.energies;
        // phase e^{i(E_k - E_l)t} applied entrywise in the mode basis
        let mut re = DMatrix::zeros(n, n);
        let mut im = DMatrix::zeros(n, n);
        for l in 0..n {
            for k in 0..n {
                let (s, c) = ((e[k] - e[l]) * t).sin_cos();
                let a = self.mode_re[(k, l)];
                let b = self.mode_im[(k, l)];
                re[(k, l)] = a * c - b * s;
                im[(k, l)] = a * s + b * c;
            }
        }
        let v = &self.basis.modes;
        let re = v * re * v.transpose();
        let im = v * im * v.transpose();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // exact hermiticity
                let r = 0.5 * (re[(i, j)] + re[(j, i)]);
                let m = 0.5 * (im[(i, j)] - im[(j, i)]);
                out[(i, j)] = Complex64::new(r, m);
            }
        }
        Ok(CorrelationMatrix::from_trusted(out))
    }

    /// Evaluate on a time grid; parallel over times, result order follows `times`.
    pub fn at_times(&self, times: &[f64]) -> Result<Vec<CorrelationMatrix>> {
        times.par_iter().map(|&t| self.at(t)).collect()
    }
}

pub fn evolve(
    c0: &CorrelationMatrix,
    h: &SingleParticleHamiltonian,
    t: f64,
) -> Result<CorrelationMatrix> {
    Propagator::new(c0, h)?.at(t)
}

/// Initial state, quench Hamiltonian and measurement times.
#[derive(Debug, Clone)]
pub struct QuenchSetup {
    pub initial: CorrelationMatrix,
    pub quench_h: SingleParticleHamiltonian,
    pub times: Vec<f64>,
}

impl QuenchSetup {
    pub fn new(
        initial: CorrelationMatrix,
        quench_h: SingleParticleHamiltonian,
        times: Vec<f64>,
    ) -> Result<Self> {
        if initial.n() != quench_h.n() {
            return Err(Error::DimensionMismatch {
                expected: quench_h.n(),
                found: initial.n(),
            });
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(
                "times must be finite and non-negative".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(QuenchSetup {
            initial,
            quench_h,
            times,
        })
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.initial, &self.quench_h)
    }

    pub fn evolve_all(&self) -> Result<Vec<CorrelationMatrix>> {
        self.propagator()?.at_times(&self.times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{
        hamiltonian, single_particle_matrix, Boundary, CouplingKind, CouplingSpec,
    };

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_diff(a: &CorrelationMatrix, b: &CorrelationMatrix) -> f64 {
        (a.matrix() - b.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    fn chain(kind: CouplingKind, n: usize, b: Boundary) -> SingleParticleHamiltonian {
        hamiltonian(&CouplingSpec::new(kind, n, b).unwrap()).unwrap()
    }

    #[test]
    fn two_site_ground_state() {
        let h = single_particle_matrix(&[0.5], 2, Boundary::Open).unwrap();
        let g = ground_state_correlations(&h, 1, GapPolicy::Strict).unwrap();
        for z in g.matrix().iter() {
            assert!((z - c(0.5)).norm() < 1e-14);
        }
    }

    #[test]
    fn empty_and_full_filling() {
        let h = chain(CouplingKind::Dimer { delta: 0.2 }, 6, Boundary::Open);
        let empty = ground_state_correlations(&h, 0, GapPolicy::Strict).unwrap();
        assert!(empty.matrix().iter().all(|z| z.norm() == 0.0));
        let full = ground_state_correlations(&h, 6, GapPolicy::Strict).unwrap();
        let id = DMatrix::<Complex64>::identity(6, 6);
        assert!((full.matrix() - id).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dimer_ground_state_is_projector() {
        let h = chain(CouplingKind::Dimer { delta: 0.5 }, 8, Boundary::Open);
        let g = ground_state_correlations(&h, 4, GapPolicy::Strict).unwrap();
        assert!(g.idempotency_defect() < 1e-9);
        assert!((g.particle_number() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_modes_trip_the_gap_guard() {
        let h = chain(CouplingKind::Homogeneous, 8, Boundary::Periodic);
        match ground_state_correlations(&h, 4, GapPolicy::Strict) {
            Err(Error::DegenerateGroundState { filling, .. }) => assert_eq!(filling, 4),
            other => panic!("expected degeneracy error, got {other:?}"),
        }
        assert!(ground_state_correlations(&h, 4, GapPolicy::AllowSmallGap).is_ok());
        // N = 10 has no zero modes at half filling
        let h = chain(CouplingKind::Homogeneous, 10, Boundary::Periodic);
        assert!(ground_state_correlations(&h, 5, GapPolicy::Strict).is_ok());
    }

    #[test]
    fn filling_above_size_is_rejected() {
        let h = chain(CouplingKind::Homogeneous, 4, Boundary::Open);
        assert!(ground_state_correlations(&h, 5, GapPolicy::Strict).is_err());
    }

    #[test]
    fn bridge_n4_entries() {
        let b = bridge_state_correlations(4).unwrap();
        let m = b.matrix();
        for k in 0..4 {
            assert_eq!(m[(k, k)], c(0.5));
        }
        assert_eq!(m[(0, 2)], c(-0.5));
        assert_eq!(m[(2, 0)], c(-0.5));
        assert_eq!(m[(1, 3)], c(0.5));
        assert_eq!(m[(0, 1)], c(0.0));
        assert_eq!(b.idempotency_defect(), 0.0);
    }

    #[test]
    fn bridge_trace_and_invalid_sizes() {
        for n in [4usize, 8, 16, 128] {
            let b = bridge_state_correlations(n).unwrap();
            assert!((b.particle_number() - (n / 2) as f64).abs() < 1e-12);
        }
        for n in [0usize, 2, 6, 10] {
            assert!(bridge_state_correlations(n).is_err());
        }
    }

    #[test]
    fn evolution_at_time_zero_is_exact() {
        let h = chain(CouplingKind::Homogeneous, 8, Boundary::Periodic);
        let b = bridge_state_correlations(8).unwrap();
        assert_eq!(evolve(&b, &h, 0.0).unwrap(), b);
    }

    #[test]
    fn eigenstate_is_stationary() {
        let h = chain(CouplingKind::Homogeneous, 10, Boundary::Open);
        let g = ground_state_correlations(&h, 5, GapPolicy::Strict).unwrap();
        for t in [0.3, 1.0, 7.5, 40.0] {
            assert!(max_diff(&evolve(&g, &h, t).unwrap(), &g) < 1e-9);
        }
    }

    #[test]
    fn two_site_rabi_oscillation() {
        let h = single_particle_matrix(&[0.5], 2, Boundary::Open).unwrap();
        let c0 = CorrelationMatrix::product_state(&[true, false]);
        for t in [0.1, 0.9, 2.0, 3.3] {
            let ct = evolve(&c0, &h, t).unwrap();
            let occ = ct.occupations();
            assert!((occ[0] - (t / 2.0).cos().powi(2)).abs() < 1e-12);
            assert!((occ[1] - (t / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn projector_and_particle_number_preserved() {
        let h = chain(CouplingKind::Homogeneous, 16, Boundary::Periodic);
        let init = [
            half_filled_ground_state(
                &chain(CouplingKind::Dimer { delta: 0.5 }, 16, Boundary::Periodic),
                GapPolicy::Strict,
            )
            .unwrap(),
            bridge_state_correlations(16).unwrap(),
        ];
        for c0 in &init {
            let p = Propagator::new(c0, &h).unwrap();
            for t in [0.5, 3.0, 11.0] {
                let ct = p.at(t).unwrap();
                assert!((ct.particle_number() - c0.particle_number()).abs() < 1e-8);
                assert!(ct.idempotency_defect() < 1e-9);
                for x in ct.spectrum() {
                    assert!(x.abs() < 1e-9 || (x - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn evolution_composes() {
        let h = chain(CouplingKind::Homogeneous, 12, Boundary::Open);
        let c0 = half_filled_ground_state(
            &chain(CouplingKind::Rainbow { h: 0.5 }, 12, Boundary::Open),
            GapPolicy::AllowSmallGap,
        )
        .unwrap();
        let (t1, t2) = (0.7, 2.2);
        let a = evolve(&evolve(&c0, &h, t1).unwrap(), &h, t2).unwrap();
        let b = evolve(&c0, &h, t1 + t2).unwrap();
        assert!(max_diff(&a, &b) < 1e-9);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 0.3;
        assert!(CorrelationMatrix::from_real(m).is_err());
        let m = DMatrix::<f64>::identity(2, 2) * 1.5;
        assert!(CorrelationMatrix::from_real(m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(CorrelationMatrix::from_real(m).is_ok());
    }

    #[test]
    fn quench_setup_validation() {
        let h = chain(CouplingKind::Homogeneous, 4, Boundary::Open);
        let c0 = CorrelationMatrix::product_state(&[true, false, true, false]);
        assert!(QuenchSetup::new(c0.clone(), h.clone(), vec![0.0, 1.0, 1.0]).is_err());
        assert!(QuenchSetup::new(c0.clone(), h.clone(), vec![-1.0, 1.0]).is_err());
        let h5 = chain(CouplingKind::Homogeneous, 5, Boundary::Open);
        assert!(QuenchSetup::new(c0.clone(), h5, vec![0.0]).is_err());
        let q = QuenchSetup::new(c0, h, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(q.evolve_all().unwrap().len(), 3);
    }
}
