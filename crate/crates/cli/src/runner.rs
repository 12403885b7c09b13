//! The measurement pipeline: prepare the initial state, evolve, measure and
//! predict.

use rayon::prelude::*;

use entlink::analysis::linear_fit;
use entlink::entanglement::{
    block_entropy, contiguous_entropy_table, el_matrix, link_pairs, nearest_neighbor_links,
    ElMatrix, EntropyTable,
};
use entlink::gaussian::{
    bridge_state_correlations, half_filled_ground_state, CorrelationMatrix, GapPolicy, Propagator,
};
use entlink::lattice::{hamiltonian, CouplingKind, CouplingSpec, SingleParticleHamiltonian};
use entlink::qpp::{
    initial_fronts, integrate_fronts, propagate_fronts, FrontSet, InitialKind, QppParams,
};
use entlink::wavesolver::{self, FrontSearch, InitialField, Reference};

use crate::artifacts::{fmt_float, ArtifactSet, Csv};
use crate::config::{BlockSelection, ExperimentConfig, InitialState, Quench};
use crate::error::CliError;
use crate::report::{compare_report, ComparisonReport, Sample};

/// Links with `|i − j|` up to this many sites are dropped before the wave
/// solver sees a measured EL matrix.
pub const WAVE_MASK_BAND: usize = 2;

pub const ENTROPY_HEADER: [&str; 4] = ["t", "a", "b", "S_nats"];
pub const EL_HEADER: [&str; 4] = ["t", "i", "j", "J_nats"];

/// Everything measured at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    /// Entropies of the configured blocks, in block order.
    pub entropies: Vec<f64>,
    /// Full contiguous table, kept when an EL snapshot is taken here.
    pub table: Option<EntropyTable>,
    pub el: Option<ElMatrix>,
    /// Nearest-neighbour links in [`link_pairs`] order.
    pub links: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Measurement {
    /// 0-based half-open blocks.
    pub blocks: Vec<(usize, usize)>,
    pub snapshots: Vec<Snapshot>,
}

impl Measurement {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Entropy curve of block `k` over time.
    pub fn curve(&self, k: usize) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.entropies[k]).collect()
    }

    pub fn samples(&self) -> Vec<Sample> {
        let mut out = Vec::with_capacity(self.blocks.len() * self.snapshots.len());
        for s in &self.snapshots {
            for (&(a, b), &v) in self.blocks.iter().zip(&s.entropies) {
                out.push(Sample {
                    t: s.t,
                    a,
                    b,
                    value: v,
                });
            }
        }
        out
    }
}

/// Initial correlation matrix of the configured state.
pub fn initial_state(cfg: &ExperimentConfig) -> Result<CorrelationMatrix, CliError> {
    match &cfg.initial_state {
        InitialState::Bridge => Ok(bridge_state_correlations(cfg.n)?),
        state => {
            let spec = cfg
                .initial_coupling_spec()
                .ok_or_else(|| CliError::Runtime("invalid initial couplings".into()))?;
            let policy = match state {
                InitialState::Rainbow { .. } => GapPolicy::AllowSmallGap,
                _ => GapPolicy::Strict,
            };
            Ok(half_filled_ground_state(&hamiltonian(&spec)?, policy)?)
        }
    }
}

/// Hamiltonian that prepares the initial state, for states defined as
/// ground states.
pub fn initial_hamiltonian(
    cfg: &ExperimentConfig,
) -> Result<Option<SingleParticleHamiltonian>, CliError> {
    match cfg.initial_coupling_spec() {
        Some(spec) => Ok(Some(hamiltonian(&spec)?)),
        None => Ok(None),
    }
}

pub fn quench_hamiltonian(cfg: &ExperimentConfig) -> Result<SingleParticleHamiltonian, CliError> {
    let kind = match &cfg.quench {
        Quench::H0 => CouplingKind::Homogeneous,
        Quench::Custom(g) => CouplingKind::Custom(g.clone()),
        Quench::None => return Ok(SingleParticleHamiltonian::zero(cfg.n, cfg.boundary)),
    };
    Ok(hamiltonian(&CouplingSpec::new(kind, cfg.n, cfg.boundary)?)?)
}

fn needs_table(cfg: &ExperimentConfig, k: usize) -> bool {
    let o = cfg.outputs;
    (o.el_snapshots || o.wave_compare) && cfg.el_time(k)
}

fn measure_one(
    cfg: &ExperimentConfig,
    prop: &Propagator,
    blocks: &[(usize, usize)],
    k: usize,
    t: f64,
) -> Result<Snapshot, CliError> {
    let c = prop.at(t)?;
    let table = if needs_table(cfg, k) || cfg.blocks == BlockSelection::AllContiguous {
        Some(contiguous_entropy_table(&c, t)?)
    } else {
        None
    };
    let entropies = match &table {
        Some(tab) => blocks.iter().map(|&(a, b)| tab.get(a, b)).collect(),
        None if cfg.outputs.entropy_table || cfg.outputs.predictions => blocks
            .iter()
            .map(|&(a, b)| block_entropy(&c, &(a..b).collect::<Vec<_>>()))
            .collect::<entlink::Result<Vec<f64>>>()?,
        None => Vec::new(),
    };
    let el = if needs_table(cfg, k) {
        table.as_ref().map(el_matrix)
    } else {
        None
    };
    let links = if cfg.outputs.subdiagonal {
        Some(nearest_neighbor_links(&c, cfg.boundary)?)
    } else {
        None
    };
    Ok(Snapshot {
        t,
        entropies,
        table: if needs_table(cfg, k) { table } else { None },
        el,
        links,
    })
}

/// Evolves the configured state and measures at every grid time. Times
/// are processed in parallel; results do not depend on the worker count.
pub fn measure(cfg: &ExperimentConfig) -> Result<Measurement, CliError> {
    let c0 = initial_state(cfg)?;
    let h = quench_hamiltonian(cfg)?;
    let prop = Propagator::new(&c0, &h)?;
    let blocks = cfg.blocks.blocks(cfg.n);
    let times = cfg.time_values();
    let snapshots = times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| measure_one(cfg, &prop, &blocks, k, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Measurement { blocks, snapshots })
}

pub fn front_kind(state: &InitialState) -> Option<InitialKind> {
    match state {
        InitialState::Dimer { .. } => Some(InitialKind::Dimer),
        InitialState::Rainbow { .. } => Some(InitialKind::Rainbow),
        InitialState::Bridge => Some(InitialKind::Bridge),
        InitialState::Homogeneous | InitialState::Custom(_) => None,
    }
}

/// Where the saturation density came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    Config,
    Fitted,
    Exact,
}

impl SigmaSource {
    fn as_str(self) -> &'static str {
        match self {
            SigmaSource::Config => "config",
            SigmaSource::Fitted => "fitted",
            SigmaSource::Exact => "exact",
        }
    }
}

/// Saturation entropy density.
///
/// The bridge state carries exactly `ln 2` per site. For the rainbow state
/// it is the slope of a linear fit of the initial lateral entropies
/// `S([0, a))`, `a = 1..N/2`. For the dimer state it is the slope of
/// `S([0, ℓ))` at the final time over the even blocks already saturated
/// (`ℓ <= v t / 2`, at most `N/4`).
pub fn fit_sigma(cfg: &ExperimentConfig) -> Result<(f64, SigmaSource), CliError> {
    if let Some(s) = cfg.sigma {
        return Ok((s, SigmaSource::Config));
    }
    let (state, ells) = match cfg.initial_state {
        InitialState::Bridge => return Ok((std::f64::consts::LN_2, SigmaSource::Exact)),
        InitialState::Rainbow { .. } => (initial_state(cfg)?, (1..=cfg.n / 2).collect::<Vec<_>>()),
        InitialState::Dimer { .. } => {
            let c0 = initial_state(cfg)?;
            let h = quench_hamiltonian(cfg)?;
            let t = cfg.times.stop;
            let top = ((cfg.v * t / 2.0).floor() as usize).min(cfg.n / 4);
            let ells: Vec<usize> = (2..=top).step_by(2).collect();
            if ells.len() < 2 {
                return Err(CliError::validation(
                    "t_stop too short to fit sigma; set sigma",
                ));
            }
            (Propagator::new(&c0, &h)?.at(t)?, ells)
        }
        _ => {
            return Err(CliError::validation(
                "no quasiparticle prediction for this initial state",
            ))
        }
    };
    let x: Vec<f64> = ells.iter().map(|&l| l as f64).collect();
    let y = ells
        .iter()
        .map(|&l| block_entropy(&state, &(0..l).collect::<Vec<_>>()))
        .collect::<entlink::Result<Vec<_>>>()?;
    // the intercept absorbs the boundary contribution of the cut
    Ok((linear_fit(&x, &y)?.slope, SigmaSource::Fitted))
}

pub fn qpp_params(cfg: &ExperimentConfig, sigma: f64) -> Result<QppParams, CliError> {
    Ok(QppParams::new(sigma, cfg.v, cfg.n as f64, cfg.boundary)?)
}

/// Fronts of the configured state at time `t`.
pub fn fronts_at(cfg: &ExperimentConfig, p: &QppParams, t: f64) -> Result<FrontSet, CliError> {
    let kind = front_kind(&cfg.initial_state).ok_or_else(|| {
        CliError::validation("no quasiparticle prediction for this initial state")
    })?;
    Ok(propagate_fronts(&initial_fronts(kind, p), t, p)?)
}

/// Predicted entropies of the configured blocks on the time grid.
pub fn predict(cfg: &ExperimentConfig, p: &QppParams) -> Result<Vec<Sample>, CliError> {
    let blocks = cfg.blocks.blocks(cfg.n);
    let rows = cfg
        .time_values()
        .par_iter()
        .map(|&t| {
            let f = fronts_at(cfg, p, t)?;
            blocks
                .iter()
                .map(|&(a, b)| {
                    Ok(Sample {
                        t,
                        a,
                        b,
                        value: integrate_fronts(&f, a as f64, b as f64)?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Solver-versus-data comparison at one EL snapshot time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveRow {
    pub t: f64,
    pub measured: wavesolver::FieldError,
    pub fronts: wavesolver::FieldError,
}

/// Runs the wave solver from the first EL snapshot and compares it with
/// every later snapshot and with the analytic fronts.
pub fn wave_compare(
    cfg: &ExperimentConfig,
    m: &Measurement,
    p: &QppParams,
) -> Result<Vec<WaveRow>, CliError> {
    let snaps: Vec<&Snapshot> = m.snapshots.iter().filter(|s| s.el.is_some()).collect();
    let Some(first) = snaps.first() else {
        return Ok(Vec::new());
    };
    let el0 = first.el.as_ref().expect("filtered");
    let res = cfg.wave_resolution.unwrap_or(cfg.n);
    let field = wavesolver::init_field(
        InitialField::El {
            matrix: el0,
            band: WAVE_MASK_BAND,
        },
        cfg.v,
        cfg.boundary,
        res,
    )?;
    let rel: Vec<f64> = snaps.iter().map(|s| s.t - first.t).collect();
    let fields = wavesolver::run(&field, &rel)?;
    let opts = FrontSearch::default();
    snaps
        .iter()
        .zip(&fields)
        .map(|(s, f)| {
            let fronts = fronts_at(cfg, p, s.t)?;
            let el = s.el.as_ref().expect("filtered");
            Ok(WaveRow {
                t: s.t,
                measured: wavesolver::field_error(f, Reference::El(el), Some(&fronts), opts)?,
                fronts: wavesolver::field_error(f, Reference::Fronts(&fronts), None, opts)?,
            })
        })
        .collect()
}

pub fn samples_csv(samples: &[Sample]) -> Vec<u8> {
    let mut rows: Vec<&Sample> = samples.iter().collect();
    rows.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b)));
    let mut csv = Csv::new(&ENTROPY_HEADER);
    for s in rows {
        csv.row(&[
            fmt_float(s.t),
            (s.a + 1).to_string(),
            s.b.to_string(),
            fmt_float(s.value),
        ]);
    }
    csv.into_bytes()
}

fn el_csv(el: &ElMatrix) -> Vec<u8> {
    let mut csv = Csv::new(&EL_HEADER);
    let t = fmt_float(el.t());
    for i in 0..el.n() {
        for j in i..el.n() {
            csv.row(&[
                t.clone(),
                (i + 1).to_string(),
                (j + 1).to_string(),
                fmt_float(el.get(i, j)),
            ]);
        }
    }
    csv.into_bytes()
}

fn subdiagonal_csv(cfg: &ExperimentConfig, m: &Measurement) -> Vec<u8> {
    let pairs = link_pairs(cfg.n, cfg.boundary);
    let mut csv = Csv::new(&EL_HEADER);
    for s in &m.snapshots {
        let t = fmt_float(s.t);
        for (&(i, j), &v) in pairs.iter().zip(s.links.iter().flatten()) {
            csv.row(&[
                t.clone(),
                (i + 1).to_string(),
                (j + 1).to_string(),
                fmt_float(v),
            ]);
        }
    }
    csv.into_bytes()
}

fn params_csv(sigma: f64, source: SigmaSource, v: f64) -> Vec<u8> {
    let mut csv = Csv::new(&["sigma", "sigma_source", "v"]);
    csv.row(&[fmt_float(sigma), source.as_str().to_string(), fmt_float(v)]);
    csv.into_bytes()
}

fn wave_csv(rows: &[WaveRow]) -> Vec<u8> {
    let mut csv = Csv::new(&[
        "t",
        "l1_measured",
        "offset_measured_cells",
        "max_offset_measured_cells",
        "l1_fronts",
        "offset_fronts_cells",
        "max_offset_fronts_cells",
    ]);
    for r in rows {
        csv.row(&[
            fmt_float(r.t),
            fmt_float(r.measured.l1),
            fmt_float(r.measured.front_offset),
            fmt_float(r.measured.max_front_offset),
            fmt_float(r.fronts.l1),
            fmt_float(r.fronts.front_offset),
            fmt_float(r.fronts.max_front_offset),
        ]);
    }
    csv.into_bytes()
}

/// Everything `run` produces, in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub measurement: Measurement,
    pub report: Option<ComparisonReport>,
    pub wave: Vec<WaveRow>,
    pub artifacts: ArtifactSet,
}

/// The full pipeline: measure, predict, compare. Nothing is written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = measure(cfg)?;
    let mut art = ArtifactSet::new();
    art.insert(
        "config.txt",
        crate::config::serialize_config(cfg).into_bytes(),
    );
    let measured = m.samples();
    if cfg.outputs.entropy_table {
        art.insert("entropy.csv", samples_csv(&measured));
    }
    if cfg.outputs.el_snapshots {
        for (k, s) in m.snapshots.iter().enumerate() {
            if let Some(el) = &s.el {
                art.insert(format!("el_snapshots/t{k:04}.csv"), el_csv(el));
            }
        }
    }
    if cfg.outputs.subdiagonal {
        art.insert("subdiagonal.csv", subdiagonal_csv(cfg, &m));
    }
    let mut report = None;
    let mut wave = Vec::new();
    if cfg.outputs.predictions || cfg.outputs.wave_compare {
        let (sigma, source) = fit_sigma(cfg)?;
        let p = qpp_params(cfg, sigma)?;
        art.insert("predictions_params.csv", params_csv(sigma, source, cfg.v));
        if cfg.outputs.predictions {
            let predicted = predict(cfg, &p)?;
            art.insert("predictions.csv", samples_csv(&predicted));
            let r = compare_report(&measured, &predicted, Some((sigma, cfg.v)))?;
            r.add_artifacts(&mut art);
            report = Some(r);
        }
        if cfg.outputs.wave_compare {
            wave = wave_compare(cfg, &m, &p)?;
            art.insert("wave_compare.csv", wave_csv(&wave));
        }
    }
    Ok(RunOutput {
        measurement: m,
        report,
        wave,
        artifacts: art,
    })
}

/// Predictions alone; the state is only prepared when σ must be fitted.
pub fn run_predict(cfg: &ExperimentConfig) -> Result<ArtifactSet, CliError> {
    let (sigma, source) = fit_sigma(cfg)?;
    let p = qpp_params(cfg, sigma)?;
    let mut art = ArtifactSet::new();
    art.insert(
        "config.txt",
        crate::config::serialize_config(cfg).into_bytes(),
    );
    art.insert("predictions.csv", samples_csv(&predict(cfg, &p)?));
    art.insert("predictions_params.csv", params_csv(sigma, source, cfg.v));
    Ok(art)
}

/// The wave-solver comparison alone.
pub fn run_wave(cfg: &ExperimentConfig) -> Result<(Vec<WaveRow>, ArtifactSet), CliError> {
    if front_kind(&cfg.initial_state).is_none() {
        return Err(CliError::validation(
            "wave needs a dimer, rainbow or bridge initial state",
        ));
    }
    let mut wcfg = cfg.clone();
    wcfg.outputs.entropy_table = false;
    wcfg.outputs.predictions = false;
    wcfg.outputs.subdiagonal = false;
    wcfg.outputs.wave_compare = true;
    if wcfg.blocks == BlockSelection::AllContiguous {
        wcfg.blocks = BlockSelection::Explicit(Vec::new());
    }
    let m = measure(&wcfg)?;
    let (sigma, source) = fit_sigma(cfg)?;
    let p = qpp_params(cfg, sigma)?;
    let rows = wave_compare(&wcfg, &m, &p)?;
    let mut art = ArtifactSet::new();
    art.insert(
        "config.txt",
        crate::config::serialize_config(cfg).into_bytes(),
    );
    art.insert("predictions_params.csv", params_csv(sigma, source, cfg.v));
    art.insert("wave_compare.csv", wave_csv(&rows));
    Ok((rows, art))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(text: &str) -> ExperimentConfig {
        parse_config(text).unwrap()
    }

    const SMALL_DIMER: &str = "N = 16\nboundary = periodic\nt_stop = 4\nt_count = 9\nblocks = all_contiguous\n[initial_state]\nkind = dimer\ndelta = 0.5\n[outputs]\nel_snapshots = true\nsubdiagonal = true\npredictions = true\n";

    #[test]
    fn run_is_deterministic() {
        let c = cfg(SMALL_DIMER);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.artifacts.manifest(), b.artifacts.manifest());
        let paths: Vec<&str> = a.artifacts.paths().collect();
        for p in [
            "config.txt",
            "entropy.csv",
            "el_snapshots/t0000.csv",
            "el_snapshots/t0008.csv",
            "subdiagonal.csv",
            "predictions.csv",
            "predictions_params.csv",
            "report.csv",
            "report_summary.csv",
            "report_crossings.csv",
        ] {
            assert!(paths.contains(&p), "{p} missing from {paths:?}");
        }
    }

    #[test]
    fn entropy_csv_is_one_based_and_sorted() {
        let c = cfg(SMALL_DIMER);
        let out = run_experiment(&c).unwrap();
        let text = String::from_utf8(out.artifacts.get("entropy.csv").unwrap().to_vec()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,a,b,S_nats"));
        assert_eq!(
            lines.next().unwrap().split(',').take(3).collect::<Vec<_>>(),
            ["0", "1", "1"]
        );
        assert_eq!(text.lines().count(), 1 + 9 * 16 * 17 / 2);
    }

    #[test]
    fn no_quench_keeps_eigenstate_constant() {
        let c = cfg("N = 12\nboundary = open\nt_stop = 5\nt_count = 6\n[initial_state]\nkind = dimer\ndelta = 0.3\n[quench]\nkind = none\n");
        let m = measure(&c).unwrap();
        for k in 0..m.blocks.len() {
            let curve = m.curve(k);
            assert!(curve.iter().all(|&s| (s - curve[0]).abs() < 1e-12));
        }
    }

    #[test]
    fn bridge_sigma_is_ln2_and_predictions_match_closed_form() {
        let c = cfg("N = 16\nboundary = periodic\nt_stop = 3\nt_count = 4\n[initial_state]\nkind = bridge\n[outputs]\npredictions = true\n");
        let (sigma, src) = fit_sigma(&c).unwrap();
        assert_eq!(src, SigmaSource::Exact);
        assert_eq!(sigma, std::f64::consts::LN_2);
        let p = qpp_params(&c, sigma).unwrap();
        for s in predict(&c, &p).unwrap() {
            let want = entlink::qpp::bridge_entropy((s.b - s.a) as f64, s.t, &p);
            assert!((s.value - want).abs() < 1e-9, "{s:?} vs {want}");
        }
    }

    #[test]
    fn dimer_sigma_fit_is_sane() {
        let c = cfg(SMALL_DIMER);
        let (sigma, src) = fit_sigma(&c).unwrap();
        assert_eq!(src, SigmaSource::Fitted);
        assert!(sigma > 0.1 && sigma < std::f64::consts::LN_2, "{sigma}");
    }

    #[test]
    fn predictions_rejected_without_fronts() {
        let mut c = cfg("N = 8\nboundary = open\nt_stop = 1\nt_count = 2\n[initial_state]\nkind = homogeneous\n");
        c.sigma = Some(0.1);
        assert!(matches!(run_predict(&c), Err(CliError::Validation(_))));
    }
}
