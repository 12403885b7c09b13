//! Coupling patterns and single-particle hopping matrices.
//!
//! Every chain in this crate is a nearest-neighbour hopping model
//! `H(g) = -Σ_i g_i c†_i c_{i+1} + h.c.`, so the one-body matrix is
//! tridiagonal with `h[i][i+1] = -g_i`, plus a corner entry for periodic
//! boundaries.

use nalgebra::DMatrix;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    /// Number of bonds on a chain of `n` sites.
    pub fn bond_count(self, n: usize) -> usize {
        match self {
            Boundary::Open => n.saturating_sub(1),
            Boundary::Periodic => n,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary '{other}' (expected open or periodic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingKind {
    /// Uniform hopping `g_i = 1/2`, the critical quench Hamiltonian.
    Homogeneous,
    /// Alternating hopping `g_i = (1 + (-1)^i δ) / 2`, bond index `i` from 1.
    Dimer { delta: f64 },
    /// Exponentially decaying hopping away from the central bond.
    Rainbow { h: f64 },
    /// Explicit list of hopping amplitudes, one per bond.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    kind: CouplingKind,
    n: usize,
    boundary: Boundary,
}

impl CouplingSpec {
    pub fn new(kind: CouplingKind, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 sites, got {n}"
            )));
        }
        match &kind {
            CouplingKind::Homogeneous => {}
            CouplingKind::Dimer { delta } => {
                if !delta.is_finite() || delta.abs() > 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "dimerization must satisfy |delta| <= 1, got {delta}"
                    )));
                }
                if n % 2 != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "dimerized chain needs an even number of sites, got {n}"
                    )));
                }
            }
            CouplingKind::Rainbow { h } => {
                if !h.is_finite() || *h <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "rainbow deformation must be positive and finite, got {h}"
                    )));
                }
                if n % 2 != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "rainbow chain needs an even number of sites, got {n}"
                    )));
                }
            }
            CouplingKind::Custom(g) => {
                let expected = boundary.bond_count(n);
                if g.len() != expected {
                    return Err(Error::InvalidSpec(format!(
                        "custom couplings for {} chain of {n} sites need {expected} values, got {}",
                        boundary.as_str(),
                        g.len()
                    )));
                }
                if let Some(bad) = g.iter().find(|x| !x.is_finite()) {
                    return Err(Error::InvalidSpec(format!("non-finite coupling {bad}")));
                }
            }
        }
        Ok(CouplingSpec { kind, n, boundary })
    }

    pub fn kind(&self) -> &CouplingKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
}

/// Hopping amplitudes `g_i` for every bond of the chain.
///
/// Bond `i` (1-based) joins sites `i` and `i + 1`; for periodic chains the
/// last bond joins site `N` back to site 1.
pub fn build_couplings(spec: &CouplingSpec) -> Result<Vec<f64>> {
    let n = spec.n;
    let bonds = spec.boundary.bond_count(n);
    let g: Vec<f64> = match &spec.kind {
        CouplingKind::Homogeneous => vec![0.5; bonds],
        CouplingKind::Dimer { delta } => (1..=bonds)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                0.5 * (1.0 + sign * delta)
            })
            .collect(),
        CouplingKind::Rainbow { h } => {
            let half = (n / 2) as f64;
            (1..=bonds)
                .map(|i| {
                    if i == n / 2 {
                        1.0
                    } else {
                        (-h * ((half - i as f64).abs() - 0.5)).exp()
                    }
                })
                .collect()
        }
        CouplingKind::Custom(g) => g.clone(),
    };
    if let Some(bad) = g.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidSpec(format!("non-finite coupling {bad}")));
    }
    Ok(g)
}

/// Real symmetric one-body hopping matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleHamiltonian {
    boundary: Boundary,
    matrix: DMatrix<f64>,
}

impl SingleParticleHamiltonian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The zero Hamiltonian, used for "no quench" runs.
    pub fn zero(n: usize, boundary: Boundary) -> Self {
        SingleParticleHamiltonian {
            boundary,
            matrix: DMatrix::zeros(n, n),
        }
    }
}

pub fn single_particle_matrix(
    g: &[f64],
    n: usize,
    boundary: Boundary,
) -> Result<SingleParticleHamiltonian> {
    let expected = boundary.bond_count(n);
    if g.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: g.len(),
        });
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, &gi) in g.iter().enumerate() {
        let j = (i + 1) % n;
        // For n = 2 periodic both bonds land on the same pair of entries.
        m[(i, j)] -= gi;
        m[(j, i)] -= gi;
    }
    Ok(SingleParticleHamiltonian {
        boundary,
        matrix: m,
    })
}

/// Convenience: couplings and matrix in one go.
pub fn hamiltonian(spec: &CouplingSpec) -> Result<SingleParticleHamiltonian> {
    let g = build_couplings(spec)?;
    single_particle_matrix(&g, spec.n, spec.boundary)
}

/// Eigen-decomposition of a one-body Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    /// Ascending single-particle energies.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `energies`.
    pub modes: DMatrix<f64>,
}

/// Components below this magnitude are skipped when fixing the phase.
const PHASE_EPS: f64 = 1e-12;

pub fn diagonalize(h: &SingleParticleHamiltonian) -> Result<ModeBasis> {
    let n = h.n();
    let eig = h.matrix.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|e| !e.is_finite())
        || eig.eigenvectors.iter().any(|e| !e.is_finite())
    {
        return Err(Error::Eigensolver(
            "non-finite eigenpairs from symmetric eigensolver".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut modes = DMatrix::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[k]);
        let v = eig.eigenvectors.column(k);
        let sign = v
            .iter()
            .find(|x| x.abs() > PHASE_EPS)
            .map_or(1.0, |x| x.signum());
        modes.set_column(col, &(v * sign));
    }
    Ok(ModeBasis { energies, modes })
}
