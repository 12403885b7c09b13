//! Experiment configuration: flat `key = value` lines with `[section]`
//! headers for `initial_state`, `quench` and `outputs`.
//!
//! ```text
//! name = dimer-quench
//! N = 128
//! boundary = periodic
//! t_start = 0
//! t_stop = 32
//! t_count = 129
//! blocks = lateral
//!
//! [initial_state]
//! kind = dimer
//! delta = 0.5
//!
//! [quench]
//! kind = h0
//!
//! [outputs]
//! entropy_table = true
//! predictions = true
//! ```
//!
//! Block indices in `block_list` are 1-based and inclusive (`3-10`), as in
//! the CSV artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use entlink::lattice::{CouplingKind, CouplingSpec};
use entlink::Boundary;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Dimer { delta: f64 },
    Rainbow { h: f64 },
    Bridge,
    Homogeneous,
    Custom(Vec<f64>),
}

impl InitialState {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InitialState::Dimer { .. } => "dimer",
            InitialState::Rainbow { .. } => "rainbow",
            InitialState::Bridge => "bridge",
            InitialState::Homogeneous => "homogeneous",
            InitialState::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Quench {
    H0,
    Custom(Vec<f64>),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    /// `t_k = start + k (stop − start) / (count − 1)`.
    pub fn times(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.start + k as f64 * span / last)
            .collect()
    }
}

/// Blocks whose entropies are reported, as 0-based half-open ranges.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockSelection {
    AllContiguous,
    /// `[0, a)` for `a = 1..N`.
    Lateral,
    /// `[a, N − a)` for `a = 0..N/2`.
    Central,
    Explicit(Vec<(usize, usize)>),
}

impl BlockSelection {
    pub fn name(&self) -> &'static str {
        match self {
            BlockSelection::AllContiguous => "all_contiguous",
            BlockSelection::Lateral => "lateral",
            BlockSelection::Central => "central",
            BlockSelection::Explicit(_) => "explicit",
        }
    }

    /// Blocks sorted by `(a, b)`.
    pub fn blocks(&self, n: usize) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = match self {
            BlockSelection::AllContiguous => (0..n)
                .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
                .collect(),
            BlockSelection::Lateral => (1..n).map(|a| (0, a)).collect(),
            BlockSelection::Central => (0..n / 2).map(|a| (a, n - a)).collect(),
            BlockSelection::Explicit(list) => list.clone(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub entropy_table: bool,
    pub el_snapshots: bool,
    pub subdiagonal: bool,
    pub predictions: bool,
    pub wave_compare: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            entropy_table: true,
            el_snapshots: false,
            subdiagonal: false,
            predictions: false,
            wave_compare: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub n: usize,
    pub boundary: Boundary,
    pub initial_state: InitialState,
    pub quench: Quench,
    pub times: TimeGrid,
    pub blocks: BlockSelection,
    pub outputs: Outputs,
    pub seed: u64,
    /// EL snapshots are taken at every `el_stride`-th time.
    pub el_stride: usize,
    /// Front speed used for predictions.
    pub v: f64,
    /// Saturation entropy density; fitted from the data when absent.
    pub sigma: Option<f64>,
    /// Wave-solver grid size; defaults to `N`.
    pub wave_resolution: Option<usize>,
}

impl ExperimentConfig {
    /// The time grid values.
    pub fn time_values(&self) -> Vec<f64> {
        self.times.times()
    }

    pub fn initial_coupling_spec(&self) -> Option<CouplingSpec> {
        let kind = match &self.initial_state {
            InitialState::Dimer { delta } => CouplingKind::Dimer { delta: *delta },
            InitialState::Rainbow { h } => CouplingKind::Rainbow { h: *h },
            InitialState::Homogeneous => CouplingKind::Homogeneous,
            InitialState::Custom(g) => CouplingKind::Custom(g.clone()),
            InitialState::Bridge => return None,
        };
        CouplingSpec::new(kind, self.n, self.boundary).ok()
    }

    /// Whether EL snapshot `k` of the time grid is taken.
    pub fn el_time(&self, k: usize) -> bool {
        k % self.el_stride == 0
    }
}

/// One `key = value` assignment with its origin, for error messages.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: String,
}

const TOP_KEYS: &[&str] = &[
    "name",
    "N",
    "boundary",
    "t_start",
    "t_stop",
    "t_count",
    "blocks",
    "block_list",
    "seed",
    "el_stride",
    "v",
    "sigma",
    "wave_resolution",
];
const INITIAL_KEYS: &[&str] = &["kind", "delta", "h", "g"];
const QUENCH_KEYS: &[&str] = &["kind", "g"];
const OUTPUT_KEYS: &[&str] = &[
    "entropy_table",
    "el_snapshots",
    "subdiagonal",
    "predictions",
    "wave_compare",
];

fn allowed(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "" => Some(TOP_KEYS),
        "initial_state" => Some(INITIAL_KEYS),
        "quench" => Some(QUENCH_KEYS),
        "outputs" => Some(OUTPUT_KEYS),
        _ => None,
    }
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

type RawConfig = BTreeMap<String, Entry>;

fn read_entries(text: &str, errors: &mut Vec<String>) -> RawConfig {
    let mut raw = RawConfig::new();
    let mut section = String::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            match rest.strip_suffix(']').map(str::trim) {
                Some(name) if allowed(name).is_some() && !name.is_empty() => {
                    section = name.to_string()
                }
                Some(name) => errors.push(format!("line {lineno}: unknown section [{name}]")),
                None => errors.push(format!("line {lineno}: malformed section header")),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {lineno}: expected 'key = value'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let full = qualified(&section, key);
        if !allowed(&section).is_some_and(|keys| keys.contains(&key)) {
            errors.push(format!("line {lineno}: unknown key '{full}'"));
            continue;
        }
        let origin = format!("line {lineno}");
        if let Some(prev) = raw.get(&full) {
            errors.push(format!(
                "line {lineno}: duplicate key '{full}' (first set on {})",
                prev.origin
            ));
            continue;
        }
        raw.insert(
            full,
            Entry {
                value: value.to_string(),
                origin,
            },
        );
    }
    raw
}

fn apply_overrides(raw: &mut RawConfig, overrides: &[String], errors: &mut Vec<String>) {
    for (k, ov) in overrides.iter().enumerate() {
        let origin = format!("override {}", k + 1);
        let Some((key, value)) = ov.split_once('=') else {
            errors.push(format!("{origin}: expected key=value, got '{ov}'"));
            continue;
        };
        let key = key.trim();
        let (section, name) = key.split_once('.').unwrap_or(("", key));
        if !allowed(section).is_some_and(|keys| keys.contains(&name)) {
            errors.push(format!("{origin}: unknown key '{key}'"));
            continue;
        }
        raw.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                origin,
            },
        );
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    errors: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.raw.get(key)
    }

    fn fail(&mut self, key: &str, msg: impl std::fmt::Display) {
        match self.raw.get(key) {
            Some(e) => self.errors.push(format!("{}: {key}: {msg}", e.origin)),
            None => self.errors.push(format!("{key}: {msg}")),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let e = self.get(key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                let msg = format!("expected {what}, got '{}'", e.value);
                self.fail(key, msg);
                None
            }
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        if self.get(key).is_none() {
            self.errors.push(format!("missing required key '{key}'"));
            return None;
        }
        self.parse(key, what)
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        let v: f64 = self.parse(key, "a number")?;
        if v.is_finite() {
            Some(v)
        } else {
            self.fail(key, "must be finite");
            None
        }
    }

    fn float_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let e = self.get(key)?.value.clone();
        let mut out = Vec::new();
        for item in e.split(',') {
            match item.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.fail(key, format!("'{}' is not a finite number", item.trim()));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn flag(&mut self, key: &str, default: bool) -> bool {
        match self.get(key).map(|e| e.value.clone()) {
            None => default,
            Some(v) => match v.as_str() {
                "true" => true,
                "false" => false,
                _ => {
                    self.fail(key, format!("expected true or false, got '{v}'"));
                    default
                }
            },
        }
    }
}

fn parse_block_list(text: &str, n: usize) -> Result<Vec<(usize, usize)>, String> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        let (a, b) = match item.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (item, item),
        };
        let (Ok(a), Ok(b)) = (a.parse::<usize>(), b.parse::<usize>()) else {
            return Err(format!("'{item}' is not a block 'first-last'"));
        };
        if a < 1 || b < a || b > n {
            return Err(format!("block {a}-{b} outside sites 1..={n}"));
        }
        out.push((a - 1, b));
    }
    Ok(out)
}

/// Parses configuration text; see [`parse_config_with_overrides`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    parse_config_with_overrides(text, &[])
}

/// Parses configuration text, applying `key=value` overrides (with
/// `section.key` for sectioned keys) before validation. All problems are
/// reported together.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[String],
) -> Result<ExperimentConfig, Vec<String>> {
    let mut errors = Vec::new();
    let mut raw = read_entries(text, &mut errors);
    apply_overrides(&mut raw, overrides, &mut errors);
    let mut r = Reader {
        raw: &raw,
        errors: &mut errors,
    };

    let name = r
        .get("name")
        .map(|e| e.value.clone())
        .unwrap_or_else(|| "experiment".into());
    if name.is_empty() || name.contains(char::is_whitespace) {
        r.fail("name", "must be a non-empty word without spaces");
    }
    let n: Option<usize> = r.required("N", "a positive integer");
    let boundary: Option<Boundary> = r.required("boundary", "'open' or 'periodic'");
    let start = if r.get("t_start").is_some() {
        r.float("t_start")
    } else {
        Some(0.0)
    };
    let stop = if r.get("t_stop").is_some() {
        r.float("t_stop")
    } else {
        r.errors.push("missing required key 't_stop'".into());
        None
    };
    let count: Option<usize> = r.required("t_count", "a positive integer");
    let seed: u64 = r.parse("seed", "a non-negative integer").unwrap_or(0);
    let el_stride: usize = r.parse("el_stride", "a positive integer").unwrap_or(1);
    if el_stride == 0 {
        r.fail("el_stride", "must be at least 1");
    }
    let v = if r.get("v").is_some() {
        r.float("v")
    } else {
        Some(2.0)
    };
    if v.is_some_and(|v| v <= 0.0) {
        r.fail("v", "must be positive");
    }
    let sigma = r.get("sigma").is_some().then(|| r.float("sigma")).flatten();
    if sigma.is_some_and(|s| s < 0.0) {
        r.fail("sigma", "must be non-negative");
    }
    let wave_resolution: Option<usize> = r.parse("wave_resolution", "a positive integer");

    let (Some(start), Some(stop), Some(count)) = (start, stop, count) else {
        return Err(finish(errors));
    };
    if start < 0.0 {
        r.fail("t_start", "must be non-negative");
    }
    if count == 0 {
        r.fail("t_count", "must be at least 1");
    } else if stop < start || (count > 1 && stop == start) {
        r.fail("t_stop", "must exceed t_start when t_count > 1");
    }
    if count == 1 && stop != start {
        r.fail("t_stop", "must equal t_start when t_count = 1");
    }

    let initial = match r.get("initial_state.kind").map(|e| e.value.clone()) {
        None => {
            r.errors
                .push("missing required key 'initial_state.kind'".into());
            None
        }
        Some(kind) => match kind.as_str() {
            "dimer" => r
                .get("initial_state.delta")
                .is_some()
                .then(|| r.float("initial_state.delta"))
                .unwrap_or_else(|| {
                    r.errors
                        .push("missing required key 'initial_state.delta'".into());
                    None
                })
                .map(|delta| InitialState::Dimer { delta }),
            "rainbow" => r
                .get("initial_state.h")
                .is_some()
                .then(|| r.float("initial_state.h"))
                .unwrap_or_else(|| {
                    r.errors
                        .push("missing required key 'initial_state.h'".into());
                    None
                })
                .map(|h| InitialState::Rainbow { h }),
            "bridge" => Some(InitialState::Bridge),
            "homogeneous" => Some(InitialState::Homogeneous),
            "custom" => {
                if r.get("initial_state.g").is_none() {
                    r.errors
                        .push("missing required key 'initial_state.g'".into());
                    None
                } else {
                    r.float_list("initial_state.g").map(InitialState::Custom)
                }
            }
            other => {
                r.fail("initial_state.kind", format!("unknown state '{other}'"));
                None
            }
        },
    };
    for (key, needed) in [
        (
            "initial_state.delta",
            matches!(initial, Some(InitialState::Dimer { .. })),
        ),
        (
            "initial_state.h",
            matches!(initial, Some(InitialState::Rainbow { .. })),
        ),
        (
            "initial_state.g",
            matches!(initial, Some(InitialState::Custom(_))),
        ),
    ] {
        if !needed && r.get(key).is_some() && initial.is_some() {
            r.fail(key, "not used by this initial state");
        }
    }

    let quench = match r.get("quench.kind").map(|e| e.value.clone()).as_deref() {
        None | Some("h0") => Some(Quench::H0),
        Some("none") => Some(Quench::None),
        Some("custom") => {
            if r.get("quench.g").is_none() {
                r.errors.push("missing required key 'quench.g'".into());
                None
            } else {
                r.float_list("quench.g").map(Quench::Custom)
            }
        }
        Some(other) => {
            r.fail("quench.kind", format!("unknown quench '{other}'"));
            None
        }
    };
    if r.get("quench.g").is_some() && !matches!(quench, Some(Quench::Custom(_)) | None) {
        r.fail("quench.g", "only used with kind = custom");
    }

    let outputs = Outputs {
        entropy_table: r.flag("outputs.entropy_table", true),
        el_snapshots: r.flag("outputs.el_snapshots", false),
        subdiagonal: r.flag("outputs.subdiagonal", false),
        predictions: r.flag("outputs.predictions", false),
        wave_compare: r.flag("outputs.wave_compare", false),
    };

    let (Some(n), Some(boundary), Some(initial), Some(quench)) = (n, boundary, initial, quench)
    else {
        return Err(finish(errors));
    };

    // physical constraints, checked through the lattice module
    match &initial {
        InitialState::Bridge => {
            if n % 4 != 0 || n == 0 {
                r.fail("N", format!("bridge state needs N divisible by 4, got {n}"));
            }
        }
        other => {
            let kind = match other {
                InitialState::Dimer { delta } => CouplingKind::Dimer { delta: *delta },
                InitialState::Rainbow { h } => CouplingKind::Rainbow { h: *h },
                InitialState::Custom(g) => CouplingKind::Custom(g.clone()),
                _ => CouplingKind::Homogeneous,
            };
            if let Err(e) = CouplingSpec::new(kind, n, boundary) {
                let key = match other {
                    InitialState::Custom(_) => "initial_state.g",
                    InitialState::Dimer { .. } if n % 2 == 0 && n >= 2 => "initial_state.delta",
                    InitialState::Rainbow { .. } if n % 2 == 0 && n >= 2 => "initial_state.h",
                    _ => "N",
                };
                r.fail(key, e);
            }
        }
    }
    if let Quench::Custom(g) = &quench {
        if let Err(e) = CouplingSpec::new(CouplingKind::Custom(g.clone()), n, boundary) {
            r.fail("quench.g", e);
        }
    }

    let blocks = match r.get("blocks").map(|e| e.value.clone()).as_deref() {
        None | Some("lateral") => BlockSelection::Lateral,
        Some("all_contiguous") => BlockSelection::AllContiguous,
        Some("central") => BlockSelection::Central,
        Some("explicit") => match r.get("block_list").map(|e| e.value.clone()) {
            None => {
                r.errors
                    .push("missing required key 'block_list' for blocks = explicit".into());
                BlockSelection::Explicit(Vec::new())
            }
            Some(text) => match parse_block_list(&text, n) {
                Ok(list) => BlockSelection::Explicit(list),
                Err(e) => {
                    r.fail("block_list", e);
                    BlockSelection::Explicit(Vec::new())
                }
            },
        },
        Some(other) => {
            r.fail("blocks", format!("unknown block selection '{other}'"));
            BlockSelection::Lateral
        }
    };
    if r.get("block_list").is_some() && !matches!(blocks, BlockSelection::Explicit(_)) {
        r.fail("block_list", "only used with blocks = explicit");
    }
    if let Some(m) = wave_resolution {
        if m < n {
            r.fail("wave_resolution", format!("must be at least N = {n}"));
        }
    }
    if outputs.predictions {
        match initial {
            InitialState::Homogeneous | InitialState::Custom(_) => r.fail(
                "outputs.predictions",
                "no quasiparticle prediction for this initial state",
            ),
            InitialState::Dimer { .. } if sigma.is_none() => {
                // the fit needs the saturated blocks of 2 and 4 sites
                if ((v.unwrap_or(2.0) * stop / 2.0).floor() as usize).min(n / 4) < 4 {
                    r.fail(
                        "t_stop",
                        "chain or time span too short to fit sigma for the dimer state; set sigma",
                    );
                }
            }
            _ => {}
        }
    }
    if outputs.wave_compare
        && matches!(initial, InitialState::Homogeneous | InitialState::Custom(_))
    {
        r.fail(
            "outputs.wave_compare",
            "needs a dimer, rainbow or bridge initial state",
        );
    }

    if !errors.is_empty() {
        return Err(finish(errors));
    }
    Ok(ExperimentConfig {
        name,
        n,
        boundary,
        initial_state: initial,
        quench,
        times: TimeGrid { start, stop, count },
        blocks,
        outputs,
        seed,
        el_stride,
        v: v.unwrap_or(2.0),
        sigma,
        wave_resolution,
    })
}

fn finish(mut errors: Vec<String>) -> Vec<String> {
    errors.dedup();
    errors
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text form; parsing it yields an equal configuration.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "name = {}", cfg.name);
    let _ = writeln!(s, "N = {}", cfg.n);
    let _ = writeln!(s, "boundary = {}", cfg.boundary.as_str());
    let _ = writeln!(s, "t_start = {}", cfg.times.start);
    let _ = writeln!(s, "t_stop = {}", cfg.times.stop);
    let _ = writeln!(s, "t_count = {}", cfg.times.count);
    let _ = writeln!(s, "blocks = {}", cfg.blocks.name());
    if let BlockSelection::Explicit(list) = &cfg.blocks {
        let items: Vec<String> = list
            .iter()
            .map(|(a, b)| format!("{}-{}", a + 1, b))
            .collect();
        let _ = writeln!(s, "block_list = {}", items.join(", "));
    }
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "el_stride = {}", cfg.el_stride);
    let _ = writeln!(s, "v = {}", cfg.v);
    if let Some(sigma) = cfg.sigma {
        let _ = writeln!(s, "sigma = {sigma}");
    }
    if let Some(m) = cfg.wave_resolution {
        let _ = writeln!(s, "wave_resolution = {m}");
    }
    let _ = writeln!(s, "\n[initial_state]");
    let _ = writeln!(s, "kind = {}", cfg.initial_state.kind_name());
    match &cfg.initial_state {
        InitialState::Dimer { delta } => {
            let _ = writeln!(s, "delta = {delta}");
        }
        InitialState::Rainbow { h } => {
            let _ = writeln!(s, "h = {h}");
        }
        InitialState::Custom(g) => {
            let _ = writeln!(s, "g = {}", join(g));
        }
        InitialState::Bridge | InitialState::Homogeneous => {}
    }
    let _ = writeln!(s, "\n[quench]");
    match &cfg.quench {
        Quench::H0 => {
            let _ = writeln!(s, "kind = h0");
        }
        Quench::None => {
            let _ = writeln!(s, "kind = none");
        }
        Quench::Custom(g) => {
            let _ = writeln!(s, "kind = custom\ng = {}", join(g));
        }
    }
    let o = cfg.outputs;
    let _ = writeln!(s, "\n[outputs]");
    let _ = writeln!(s, "entropy_table = {}", o.entropy_table);
    let _ = writeln!(s, "el_snapshots = {}", o.el_snapshots);
    let _ = writeln!(s, "subdiagonal = {}", o.subdiagonal);
    let _ = writeln!(s, "predictions = {}", o.predictions);
    let _ = writeln!(s, "wave_compare = {}", o.wave_compare);
    s
}
