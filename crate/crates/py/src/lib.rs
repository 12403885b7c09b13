//! Python bindings for the `entlink` core library.
//!
//! Matrices cross the boundary as nested lists of floats. Site indices are
//! 0-based and blocks are lists of site indices.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use entlink::entanglement;
use entlink::gaussian::{self, FockInitial, GapPolicy};
use entlink::lattice::{self, CouplingKind, CouplingSpec, SingleParticleHamiltonian};
use entlink::qpp::{self, InitialKind};
use entlink::wavesolver::{self, FrontSearch, InitialField, Reference};
use entlink::{Boundary, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Eigensolver(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn boundary(s: &str) -> PyResult<Boundary> {
    s.parse().map_err(err)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Single-particle hopping Hamiltonian.
#[pyclass(name = "Hamiltonian", frozen)]
pub struct PyHamiltonian {
    inner: SingleParticleHamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    /// `kind` is one of homogeneous, dimer (needs `delta`), rainbow (needs
    /// `h`), custom (needs `couplings`) or zero.
    #[new]
    #[pyo3(signature = (kind, n, boundary = "periodic", delta = None, h = None, couplings = None))]
    fn new(
        kind: &str,
        n: usize,
        boundary: &str,
        delta: Option<f64>,
        h: Option<f64>,
        couplings: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let b = self::boundary(boundary)?;
        let missing = |what: &str| PyValueError::new_err(format!("{kind} needs {what}"));
        let kind = match kind {
            "zero" => {
                return Ok(Self {
                    inner: SingleParticleHamiltonian::zero(n, b),
                })
            }
            "homogeneous" => CouplingKind::Homogeneous,
            "dimer" => CouplingKind::Dimer {
                delta: delta.ok_or_else(|| missing("delta"))?,
            },
            "rainbow" => CouplingKind::Rainbow {
                h: h.ok_or_else(|| missing("h"))?,
            },
            "custom" => CouplingKind::Custom(couplings.ok_or_else(|| missing("couplings"))?),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown coupling kind '{other}'"
                )))
            }
        };
        let spec = CouplingSpec::new(kind, n, b).map_err(err)?;
        Ok(Self {
            inner: lattice::hamiltonian(&spec).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn boundary(&self) -> &'static str {
        self.inner.boundary().as_str()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix())
    }

    fn __repr__(&self) -> String {
        format!(
            "Hamiltonian(n={}, boundary='{}')",
            self.inner.n(),
            self.inner.boundary().as_str()
        )
    }
}

/// Gaussian state given by its correlation matrix `C_ij = <c†_i c_j>`.
#[pyclass(name = "State", frozen)]
pub struct PyState {
    inner: gaussian::CorrelationMatrix,
}

#[pymethods]
impl PyState {
    /// Slater determinant of the lowest modes; half filling by default.
    #[staticmethod]
    #[pyo3(signature = (h, n_particles = None, allow_small_gap = false))]
    fn ground_state(
        h: &PyHamiltonian,
        n_particles: Option<usize>,
        allow_small_gap: bool,
    ) -> PyResult<Self> {
        let policy = if allow_small_gap {
            GapPolicy::AllowSmallGap
        } else {
            GapPolicy::Strict
        };
        let k = n_particles.unwrap_or(h.inner.n() / 2);
        Ok(Self {
            inner: gaussian::ground_state_correlations(&h.inner, k, policy).map_err(err)?,
        })
    }

    /// Valence bonds between sites `k` and `k + n/2`.
    #[staticmethod]
    fn bridge(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: gaussian::bridge_state_correlations(n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn product(occupied: Vec<bool>) -> Self {
        Self {
            inner: gaussian::CorrelationMatrix::product_state(&occupied),
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn particle_number(&self) -> f64 {
        self.inner.particle_number()
    }

    fn occupations(&self) -> Vec<f64> {
        self.inner.occupations()
    }

    fn idempotency_defect(&self) -> f64 {
        self.inner.idempotency_defect()
    }

    /// Real and imaginary parts of the correlation matrix.
    fn matrix(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let m = self.inner.matrix();
        (rows(&m.map(|z| z.re)), rows(&m.map(|z| z.im)))
    }

    /// Von Neumann entropy of `block`, in nats.
    fn block_entropy(&self, block: Vec<usize>) -> PyResult<f64> {
        entanglement::block_entropy(&self.inner, &block).map_err(err)
    }

    /// Entropies of every contiguous block `[a, b)` as an `n+1` square
    /// table indexed by `(a, b)`.
    fn entropy_table(&self) -> PyResult<Vec<Vec<f64>>> {
        let n = self.inner.n();
        let table = entanglement::contiguous_entropy_table(&self.inner, 0.0).map_err(err)?;
        Ok((0..=n)
            .map(|a| (0..=n).map(|b| table.get(a.min(b), a.max(b))).collect())
            .collect())
    }

    #[pyo3(signature = (t = 0.0))]
    fn el_matrix(&self, t: f64) -> PyResult<PyElMatrix> {
        let table = entanglement::contiguous_entropy_table(&self.inner, t).map_err(err)?;
        Ok(PyElMatrix {
            inner: entanglement::el_matrix(&table),
        })
    }

    /// `J_{i,i+1}` for every bond, computed from the block entropies.
    #[pyo3(signature = (boundary = "periodic"))]
    fn links(&self, boundary: &str) -> PyResult<Vec<f64>> {
        entanglement::nearest_neighbor_links(&self.inner, self::boundary(boundary)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "State(n={}, particles={:.6})",
            self.inner.n(),
            self.inner.particle_number()
        )
    }
}

/// Unitary evolution of a state under a quench Hamiltonian.
#[pyclass(name = "Propagator", frozen)]
pub struct PyPropagator {
    inner: gaussian::Propagator,
}

#[pymethods]
impl PyPropagator {
    #[new]
    fn new(initial: &PyState, h: &PyHamiltonian) -> PyResult<Self> {
        Ok(Self {
            inner: gaussian::Propagator::new(&initial.inner, &h.inner).map_err(err)?,
        })
    }

    fn at(&self, t: f64) -> PyResult<PyState> {
        Ok(PyState {
            inner: self.inner.at(t).map_err(err)?,
        })
    }
}

/// Entanglement-link matrix of one snapshot.
#[pyclass(name = "ElMatrix", frozen)]
pub struct PyElMatrix {
    inner: entanglement::ElMatrix,
}

#[pymethods]
impl PyElMatrix {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.inner.n();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!(
                "index ({i}, {j}) outside {n} sites"
            )));
        }
        Ok(self.inner.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix())
    }

    fn min_entry(&self) -> f64 {
        self.inner.min_entry()
    }

    /// Sum of the links crossing the boundary of `block`.
    fn reconstruct(&self, block: Vec<usize>) -> PyResult<f64> {
        entanglement::reconstruct_entropy(&self.inner, &block).map_err(err)
    }
}

/// Entropy of `block` after evolving the many-body ground state of `h0`
/// with `h1` for time `t`, computed by brute force in Fock space.
#[pyfunction]
#[pyo3(signature = (h0, h1, block, t, n_particles = None))]
fn fock_entropy(
    h0: &PyHamiltonian,
    h1: &PyHamiltonian,
    block: Vec<usize>,
    t: f64,
    n_particles: Option<usize>,
) -> PyResult<f64> {
    let initial = FockInitial::GroundState {
        h: &h0.inner,
        n_particles: n_particles.unwrap_or(h0.inner.n() / 2),
    };
    gaussian::fock_oracle_entropy(&initial, &h1.inner, &block, t).map_err(err)
}

/// Quasiparticle-picture parameters: link density, speed, size, boundary.
#[pyclass(name = "QppParams", frozen)]
pub struct PyQppParams {
    inner: qpp::QppParams,
}

#[pymethods]
impl PyQppParams {
    #[new]
    #[pyo3(signature = (sigma, v, n, boundary = "periodic"))]
    fn new(sigma: f64, v: f64, n: f64, boundary: &str) -> PyResult<Self> {
        Ok(Self {
            inner: qpp::QppParams::new(sigma, v, n, self::boundary(boundary)?).map_err(err)?,
        })
    }

    fn short_range(&self, ell: f64, t: f64) -> f64 {
        qpp::qpp_short_range_entropy(ell, t, &self.inner)
    }

    fn rainbow_lateral(&self, a: f64, t: f64) -> PyResult<f64> {
        qpp::rainbow_lateral_entropy(a, t, &self.inner).map_err(err)
    }

    fn rainbow_central(&self, a: f64, t: f64) -> PyResult<f64> {
        qpp::rainbow_central_entropy(a, t, &self.inner).map_err(err)
    }

    fn bridge(&self, ell: f64, t: f64) -> f64 {
        qpp::bridge_entropy(ell, t, &self.inner)
    }

    /// Delta-line fronts of `kind` (dimer, rainbow, bridge) at time `t`.
    fn fronts(&self, kind: &str, t: f64) -> PyResult<PyFronts> {
        let kind: InitialKind = kind.parse().map_err(err)?;
        let f0 = qpp::initial_fronts(kind, &self.inner);
        Ok(PyFronts {
            inner: qpp::propagate_fronts(&f0, t, &self.inner).map_err(err)?,
        })
    }
}

/// Set of weighted delta lines in the `(x, y)` link plane.
#[pyclass(name = "Fronts", frozen)]
pub struct PyFronts {
    inner: qpp::FrontSet,
}

#[pymethods]
impl PyFronts {
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    fn total_weight(&self) -> f64 {
        self.inner.total_weight()
    }

    /// Entropy of the interval `[a, b)` predicted by the fronts.
    fn integrate(&self, a: f64, b: f64) -> PyResult<f64> {
        qpp::integrate_fronts(&self.inner, a, b).map_err(err)
    }

    /// Entropy of a union of disjoint intervals.
    fn integrate_set(&self, intervals: Vec<(f64, f64)>) -> f64 {
        qpp::integrate_fronts_set(&self.inner, &intervals)
    }

    /// `(orientation, offset, weight, x_start, x_end)` per line.
    fn lines(&self) -> Vec<(&'static str, f64, f64, f64, f64)> {
        self.inner
            .lines
            .iter()
            .map(|l| {
                (
                    wavesolver::orientation_label(l.orientation),
                    l.offset,
                    l.weight,
                    l.extent.0,
                    l.extent.1,
                )
            })
            .collect()
    }
}

/// Leapfrog solver for the link wave equation on an `m x m` grid.
#[pyclass(name = "WaveField", frozen)]
pub struct PyWaveField {
    inner: wavesolver::WaveField,
}

#[pymethods]
impl PyWaveField {
    /// Starts from measured links, zeroing entries within `band` of the
    /// diagonal.
    #[staticmethod]
    #[pyo3(signature = (el, v, boundary = "periodic", resolution = None, band = 2))]
    fn from_el(
        el: &PyElMatrix,
        v: f64,
        boundary: &str,
        resolution: Option<usize>,
        band: usize,
    ) -> PyResult<Self> {
        let m = resolution.unwrap_or(el.inner.n());
        let source = InitialField::El {
            matrix: &el.inner,
            band,
        };
        Ok(Self {
            inner: wavesolver::init_field(source, v, self::boundary(boundary)?, m).map_err(err)?,
        })
    }

    /// Starts from rasterized fronts.
    #[staticmethod]
    #[pyo3(signature = (fronts, v, resolution = None))]
    fn from_fronts(fronts: &PyFronts, v: f64, resolution: Option<usize>) -> PyResult<Self> {
        let f = &fronts.inner;
        let m = resolution.unwrap_or(f.n.round() as usize);
        Ok(Self {
            inner: wavesolver::init_field(InitialField::Fronts(f), v, f.boundary, m)
                .map_err(err)?,
        })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.resolution()
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn grid(&self) -> Vec<Vec<f64>> {
        self.inner
            .grid()
            .chunks(self.inner.resolution())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Snapshots at the grid times nearest to each (ascending) target.
    fn run(&self, times: Vec<f64>) -> PyResult<Vec<PyWaveField>> {
        let out = wavesolver::run(&self.inner, &times).map_err(err)?;
        Ok(out.into_iter().map(|inner| PyWaveField { inner }).collect())
    }

    /// `(l1, mean_offset, max_offset, samples)` against predicted fronts.
    fn compare_fronts(&self, fronts: &PyFronts) -> PyResult<(f64, f64, f64, usize)> {
        let e = wavesolver::field_error(
            &self.inner,
            Reference::Fronts(&fronts.inner),
            None,
            FrontSearch::default(),
        )
        .map_err(err)?;
        Ok((e.l1, e.front_offset, e.max_front_offset, e.samples))
    }

    /// Same as `compare_fronts`, against a measured EL matrix; the fronts
    /// locate the ridges.
    fn compare_el(&self, el: &PyElMatrix, fronts: &PyFronts) -> PyResult<(f64, f64, f64, usize)> {
        let e = wavesolver::field_error(
            &self.inner,
            Reference::El(&el.inner),
            Some(&fronts.inner),
            FrontSearch::default(),
        )
        .map_err(err)?;
        Ok((e.l1, e.front_offset, e.max_front_offset, e.samples))
    }
}

#[pymodule]
fn entlink_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyPropagator>()?;
    m.add_class::<PyElMatrix>()?;
    m.add_class::<PyQppParams>()?;
    m.add_class::<PyFronts>()?;
    m.add_class::<PyWaveField>()?;
    m.add_function(wrap_pyfunction!(fock_entropy, m)?)?;
    Ok(())
}
