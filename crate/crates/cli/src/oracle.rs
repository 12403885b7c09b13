//! Cross-check of the correlation-matrix entropies against exact
//! Fock-space evolution on small chains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entlink::entanglement::block_entropy;
use entlink::gaussian::{FockInitial, FockState, Propagator, MAX_ORACLE_SITES};

use crate::artifacts::{fmt_float, ArtifactSet, Csv};
use crate::config::{ExperimentConfig, InitialState};
use crate::error::CliError;
use crate::runner::{initial_hamiltonian, initial_state, quench_hamiltonian};

/// Largest allowed disagreement, in nats.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Random two-fragment blocks drawn per configuration.
pub const RANDOM_BLOCKS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub block: Vec<usize>,
    pub peschel: f64,
    pub fock: f64,
}

impl OracleRow {
    pub fn diff(&self) -> f64 {
        (self.peschel - self.fock).abs()
    }
}

/// `[a, b) ∪ [c, d)` with `a < b < c < d <= n`.
fn random_two_fragment(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut cuts = [0usize; 4];
    loop {
        for c in cuts.iter_mut() {
            *c = rng.random_range(0..=n);
        }
        cuts.sort_unstable();
        if cuts[0] < cuts[1] && cuts[1] < cuts[2] && cuts[2] < cuts[3] {
            break;
        }
    }
    (cuts[0]..cuts[1]).chain(cuts[2]..cuts[3]).collect()
}

fn block_label(block: &[usize]) -> String {
    // maximal runs as 1-based inclusive ranges joined by ';'
    let mut parts = Vec::new();
    let mut k = 0;
    while k < block.len() {
        let start = block[k];
        while k + 1 < block.len() && block[k + 1] == block[k] + 1 {
            k += 1;
        }
        parts.push(format!("{}-{}", start + 1, block[k] + 1));
        k += 1;
    }
    parts.join(";")
}

pub fn oracle_check(cfg: &ExperimentConfig) -> Result<Vec<OracleRow>, CliError> {
    if cfg.n > MAX_ORACLE_SITES || cfg.n < 4 {
        return Err(CliError::validation(format!(
            "oracle-check needs 4 <= N <= {MAX_ORACLE_SITES}, got {}",
            cfg.n
        )));
    }
    let h0 = initial_hamiltonian(cfg)?;
    let fock_initial = match (&cfg.initial_state, &h0) {
        (InitialState::Bridge, _) => FockInitial::Bridge { n: cfg.n },
        (_, Some(h)) => FockInitial::GroundState {
            h,
            n_particles: cfg.n / 2,
        },
        (_, None) => return Err(CliError::Runtime("initial Hamiltonian unavailable".into())),
    };
    let quench = quench_hamiltonian(cfg)?;
    let fock0 = FockState::prepare(&fock_initial)?;
    let prop = Propagator::new(&initial_state(cfg)?, &quench)?;

    let mut blocks: Vec<Vec<usize>> = cfg
        .blocks
        .blocks(cfg.n)
        .into_iter()
        .map(|(a, b)| (a..b).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    blocks.extend((0..RANDOM_BLOCKS).map(|_| random_two_fragment(&mut rng, cfg.n)));

    let mut rows = Vec::new();
    for t in cfg.time_values() {
        let c = prop.at(t)?;
        let psi = fock0.evolve(&quench, t)?;
        for block in &blocks {
            rows.push(OracleRow {
                t,
                block: block.clone(),
                peschel: block_entropy(&c, block)?,
                fock: psi.entropy(block)?,
            });
        }
    }
    Ok(rows)
}

pub fn oracle_artifacts(cfg: &ExperimentConfig, rows: &[OracleRow]) -> ArtifactSet {
    let mut csv = Csv::new(&["t", "block", "S_peschel", "S_fock", "abs_diff"]);
    for r in rows {
        csv.row(&[
            fmt_float(r.t),
            block_label(&r.block),
            fmt_float(r.peschel),
            fmt_float(r.fock),
            fmt_float(r.diff()),
        ]);
    }
    let mut art = ArtifactSet::new();
    art.insert(
        "config.txt",
        crate::config::serialize_config(cfg).into_bytes(),
    );
    art.insert("oracle_check.csv", csv.into_bytes());
    art
}
