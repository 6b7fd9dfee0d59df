//! Monte Carlo study driver, configuration and reporting.
//!
//! A [`StudyConfig`] describes a size or power experiment (or a single test
//! on ingested data): the data-generating process, the critical-value
//! engines to compare, replication and bootstrap counts, levels, jump sizes
//! and the master seed. Replications run in a work pool; every replication
//! owns a seed substream keyed by its index, so results are identical for
//! any worker count.

pub mod ingest;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::cusum::{cusum, CusumResult};
use crate::dgp::{ChangeSpec, DgpSpec, DgpVariant};
use crate::error::{Error, Result};
use crate::funspace::FunctionSeries;
use crate::resample::{
    asymptotic_test, default_block_len, fsb_test, nbb_test, FsbTuning, Method, TestOutcome,
};
use crate::rng::RngStream;
use ingest::format_float;

/// What a run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Size,
    Power,
    SingleTest,
}

impl StudyKind {
    fn as_str(&self) -> &'static str {
        match self {
            StudyKind::Size => "size",
            StudyKind::Power => "power",
            StudyKind::SingleTest => "single-test",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "size" => Ok(StudyKind::Size),
            "power" => Ok(StudyKind::Power),
            "single-test" => Ok(StudyKind::SingleTest),
            other => Err(Error::invalid(format!("unknown study kind '{other}'"))),
        }
    }
}

/// Per-method tuning settings (auto when `None`).
#[derive(Debug, Clone)]
pub struct MethodSettings {
    pub m: Option<usize>,
    pub p: Option<usize>,
    /// Explained-variance threshold for the automatic component rule.
    pub threshold: f64,
    pub p_max: Option<usize>,
    pub block_len: Option<usize>,
    pub d: Option<usize>,
    pub bandwidth: Option<usize>,
    /// Paths used to simulate the limit distribution.
    pub asym_paths: usize,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            m: None,
            p: None,
            threshold: 0.85,
            p_max: None,
            block_len: None,
            d: None,
            bandwidth: None,
            asym_paths: 5000,
        }
    }
}

impl MethodSettings {
    fn fsb_tuning(&self) -> FsbTuning {
        FsbTuning {
            m: self.m,
            p: self.p,
            threshold: self.threshold,
            p_max: self.p_max,
        }
    }
}

/// Full description of a study run.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub variant: DgpVariant,
    pub n: usize,
    pub grid_points: usize,
    pub burn_in: usize,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub bootstrap: usize,
    pub alphas: Vec<f64>,
    /// Jump magnitudes for power studies (constant curves).
    pub jumps: Vec<f64>,
    /// Change location for power studies (1-based, in `1..n-1`).
    pub change_at: Option<usize>,
    pub seed: u64,
    /// Worker threads; 0 uses the process-wide default pool.
    pub workers: usize,
    pub settings: MethodSettings,
    /// Curve file for single-test runs.
    pub data_file: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            kind: StudyKind::Size,
            variant: DgpVariant::Far1Bridge { c: 0.245 },
            n: 100,
            grid_points: 101,
            burn_in: 100,
            methods: vec![Method::Fsb],
            replications: 500,
            bootstrap: 500,
            alphas: vec![0.01, 0.05, 0.10],
            jumps: Vec::new(),
            change_at: None,
            seed: 1,
            workers: 0,
            settings: MethodSettings::default(),
            data_file: None,
        }
    }
}

impl StudyConfig {
    /// Switch to the scale used for full table reproduction.
    pub fn paper_scale(mut self) -> Self {
        self.replications = 2000;
        self.bootstrap = 1000;
        self
    }

    pub fn dgp_spec(&self) -> DgpSpec {
        DgpSpec {
            variant: self.variant,
            n: self.n,
            grid_points: self.grid_points,
            burn_in: self.burn_in,
            change: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.bootstrap < 100 {
            return Err(Error::invalid("bootstrap size must be at least 100"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods configured"));
        }
        if self.alphas.is_empty()
            || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0))
            || self.alphas.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "alphas must be strictly increasing and inside (0, 1)",
            ));
        }
        self.dgp_spec().validate()?;
        if self.kind == StudyKind::Power {
            if self.jumps.is_empty() {
                return Err(Error::invalid("power study needs a jump list"));
            }
            let k = self
                .change_at
                .ok_or_else(|| Error::invalid("power study needs change_at"))?;
            if k == 0 || k >= self.n {
                return Err(Error::invalid(format!(
                    "change_at = {k} outside 1..{}",
                    self.n - 1
                )));
            }
        }
        if self.kind == StudyKind::Size && !self.jumps.is_empty() {
            return Err(Error::invalid("size study must not carry a jump list"));
        }
        if let Some(l) = self.settings.block_len {
            if l == 0 || l > self.n / 2 {
                return Err(Error::invalid(format!(
                    "block length {l} outside 1..={}",
                    self.n / 2
                )));
            }
        }
        if self.methods.contains(&Method::Asymptotic) && self.settings.asym_paths < 1000 {
            return Err(Error::invalid("asym_paths must be at least 1000"));
        }
        if let (Some(m), Some(p)) = (self.settings.m, self.settings.p) {
            if (m * p) as f64 >= self.n as f64 / 2.0 {
                return Err(Error::invalid(format!(
                    "fixed tuning m = {m}, p = {p} too large for n = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Resolved configuration as a `key = value` snapshot; parsing it back
    /// reproduces the study byte for byte.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("kind", self.kind.as_str().to_string());
        let (dgp, c) = match self.variant {
            DgpVariant::Far1Bridge { c } => ("far1-bridge", c),
            DgpVariant::Far1SquaredBridge { c } => ("far1-squared-bridge", c),
            DgpVariant::Fma1 => ("fma1", 0.0),
        };
        push("dgp", dgp.to_string());
        push("c", format_float(c));
        push("n", self.n.to_string());
        push("grid", self.grid_points.to_string());
        push("burn_in", self.burn_in.to_string());
        push(
            "methods",
            self.methods
                .iter()
                .map(|m| m.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        push("replications", self.replications.to_string());
        push("bootstrap", self.bootstrap.to_string());
        push(
            "alphas",
            self.alphas
                .iter()
                .map(|a| format_float(*a))
                .collect::<Vec<_>>()
                .join(","),
        );
        push(
            "jumps",
            self.jumps
                .iter()
                .map(|j| format_float(*j))
                .collect::<Vec<_>>()
                .join(","),
        );
        push(
            "change_at",
            self.change_at
                .map(|k| k.to_string())
                .unwrap_or_else(|| "none".into()),
        );
        push("seed", self.seed.to_string());
        push("workers", self.workers.to_string());
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into());
        push("m", opt(self.settings.m));
        push("p", opt(self.settings.p));
        push("threshold", format_float(self.settings.threshold));
        push("p_max", opt(self.settings.p_max));
        push("block_len", opt(self.settings.block_len));
        push("d", opt(self.settings.d));
        push("bandwidth", opt(self.settings.bandwidth));
        push("asym_paths", self.settings.asym_paths.to_string());
        push(
            "data_file",
            self.data_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".into()),
        );
        out
    }

    /// Parse a `key = value` configuration (the snapshot format). Unknown
    /// keys are rejected; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        let mut c_value: Option<f64> = None;
        let mut dgp_name: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Input {
                line: line_no,
                column: 1,
                message: "expected 'key = value'".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| Error::Input {
                line: line_no,
                column: key.len() + 2,
                message,
            };
            let parse_usize = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| bad(format!("bad integer '{v}'")))
            };
            let parse_f64 = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("bad number '{v}'")))
            };
            let parse_opt = |v: &str| -> Result<Option<usize>> {
                if v == "auto" || v == "none" {
                    Ok(None)
                } else {
                    Ok(Some(
                        v.parse::<usize>()
                            .map_err(|_| bad(format!("bad integer '{v}'")))?,
                    ))
                }
            };
            match key {
                "kind" => cfg.kind = StudyKind::parse(value)?,
                "dgp" => dgp_name = Some(value.to_string()),
                "c" => c_value = Some(parse_f64(value)?),
                "n" => cfg.n = parse_usize(value)?,
                "grid" => cfg.grid_points = parse_usize(value)?,
                "burn_in" => cfg.burn_in = parse_usize(value)?,
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(Method::parse)
                        .collect::<Result<Vec<_>>>()?;
                }
                "replications" => cfg.replications = parse_usize(value)?,
                "bootstrap" => cfg.bootstrap = parse_usize(value)?,
                "alphas" => {
                    cfg.alphas = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_f64(s.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "jumps" => {
                    cfg.jumps = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_f64(s.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "change_at" => {
                    cfg.change_at = if value == "none" {
                        None
                    } else {
                        Some(parse_usize(value)?)
                    }
                }
                "seed" => {
                    cfg.seed = value
                        .parse::<u64>()
                        .map_err(|_| bad(format!("bad seed '{value}'")))?
                }
                "workers" => cfg.workers = parse_usize(value)?,
                "m" => cfg.settings.m = parse_opt(value)?,
                "p" => cfg.settings.p = parse_opt(value)?,
                "threshold" => cfg.settings.threshold = parse_f64(value)?,
                "p_max" => cfg.settings.p_max = parse_opt(value)?,
                "block_len" => cfg.settings.block_len = parse_opt(value)?,
                "d" => cfg.settings.d = parse_opt(value)?,
                "bandwidth" => cfg.settings.bandwidth = parse_opt(value)?,
                "asym_paths" => cfg.settings.asym_paths = parse_usize(value)?,
                "data_file" => {
                    cfg.data_file = if value == "none" {
                        None
                    } else {
                        Some(PathBuf::from(value))
                    }
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        if let Some(name) = dgp_name {
            let c = c_value.unwrap_or(0.245);
            cfg.variant = match name.as_str() {
                "far1-bridge" => DgpVariant::Far1Bridge { c },
                "far1-squared-bridge" => DgpVariant::Far1SquaredBridge { c },
                "fma1" => DgpVariant::Fma1,
                other => return Err(Error::invalid(format!("unknown dgp '{other}'"))),
            };
        } else if let Some(c) = c_value {
            cfg.variant = match cfg.variant {
                DgpVariant::Far1Bridge { .. } => DgpVariant::Far1Bridge { c },
                DgpVariant::Far1SquaredBridge { .. } => DgpVariant::Far1SquaredBridge { c },
                DgpVariant::Fma1 => DgpVariant::Fma1,
            };
        }
        Ok(cfg)
    }
}

/// One aggregated table row.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub method: Method,
    pub alpha: f64,
    pub jump: f64,
    pub frequency: f64,
    pub mc_se: f64,
    pub excluded: usize,
    /// Median of the method's first tuning value across retained
    /// replications (components for fsb, block length for nbb, projection
    /// dimension for asymptotic).
    pub m_median: f64,
    /// Median of the second tuning value (VAR order for fsb, zero for nbb,
    /// Bartlett bandwidth for asymptotic).
    pub p_median: f64,
}

/// Aggregated study output.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    pub warnings: Vec<String>,
    pub wall_clock_secs: f64,
}

impl StudyResult {
    /// Deterministic CSV rendering of the rows.
    pub fn table_csv(&self) -> String {
        let mut out =
            String::from("method,alpha,jump,frequency,mc_se,excluded,m_median,p_median\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{:.1},{:.1}\n",
                row.method,
                format_float(row.alpha),
                format_float(row.jump),
                row.frequency,
                row.mc_se,
                row.excluded,
                row.m_median,
                row.p_median
            ));
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn stream_slot(method: Method) -> u64 {
    match method {
        Method::Fsb => 1,
        Method::Nbb => 2,
        Method::Asymptotic => 3,
    }
}

enum MethodRep {
    Ok { p_value: f64, t1: f64, t2: f64 },
    Excluded,
}

fn run_method(
    cfg: &StudyConfig,
    series: &FunctionSeries,
    method: Method,
    rng: &RngStream,
) -> Result<MethodRep> {
    let alpha0 = cfg.alphas[0];
    let outcome: Result<TestOutcome> = match method {
        Method::Fsb => fsb_test(
            series,
            cfg.bootstrap,
            alpha0,
            &cfg.settings.fsb_tuning(),
            rng,
        ),
        Method::Nbb => nbb_test(series, cfg.bootstrap, alpha0, cfg.settings.block_len, rng),
        Method::Asymptotic => asymptotic_test(
            series,
            alpha0,
            cfg.settings.d,
            cfg.settings.bandwidth,
            cfg.settings.asym_paths,
            rng,
        ),
    };
    match outcome {
        Ok(out) => {
            let (t1, t2) = tuning_pair(&out);
            Ok(MethodRep::Ok {
                p_value: out.p_value,
                t1,
                t2,
            })
        }
        Err(Error::FitFailure(_)) => Ok(MethodRep::Excluded),
        Err(e) => Err(e),
    }
}

fn tuning_pair(outcome: &TestOutcome) -> (f64, f64) {
    match outcome.method {
        Method::Fsb => (outcome.m.unwrap_or(0) as f64, outcome.p.unwrap_or(0) as f64),
        Method::Nbb => (outcome.block_len.unwrap_or(0) as f64, 0.0),
        Method::Asymptotic => (
            outcome.m.unwrap_or(0) as f64,
            outcome.bandwidth.unwrap_or(0) as f64,
        ),
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Empirical rejection frequencies under the null hypothesis.
///
/// Replication `r` generates a null sample from substream `r`, runs each
/// configured engine and records its p-value; rejections are counted per
/// level. Replications whose fit fails are excluded per method; exclusion
/// above 5% raises a study-level warning.
pub fn run_size_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    if cfg.kind != StudyKind::Size {
        return Err(Error::invalid("config kind is not 'size'"));
    }
    let start = Instant::now();
    let master = RngStream::new(cfg.seed);
    let spec = cfg.dgp_spec();

    let reps: Vec<Result<Vec<MethodRep>>> = with_pool(cfg.workers, || {
        (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| {
                let rep = master.child(r);
                let series = spec.generate(&rep.child(0))?;
                cfg.methods
                    .iter()
                    .map(|&method| {
                        run_method(cfg, &series, method, &rep.child(stream_slot(method)))
                    })
                    .collect()
            })
            .collect()
    })?;
    let reps: Vec<Vec<MethodRep>> = reps.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let mut p_values = Vec::new();
        let mut t1 = Vec::new();
        let mut t2 = Vec::new();
        let mut excluded = 0usize;
        for rep in &reps {
            match &rep[mi] {
                MethodRep::Ok {
                    p_value,
                    t1: a,
                    t2: b,
                } => {
                    p_values.push(*p_value);
                    t1.push(*a);
                    t2.push(*b);
                }
                MethodRep::Excluded => excluded += 1,
            }
        }
        if excluded * 20 > cfg.replications {
            warnings.push(format!(
                "{method}: {excluded} of {} replications excluded (over 5%)",
                cfg.replications
            ));
        }
        let retained = p_values.len().max(1);
        let m_median = median(&mut t1);
        let p_median = median(&mut t2);
        for &alpha in &cfg.alphas {
            let rejections = p_values.iter().filter(|p| **p <= alpha).count();
            let f = rejections as f64 / retained as f64;
            rows.push(StudyRow {
                method,
                alpha,
                jump: 0.0,
                frequency: f,
                mc_se: (f * (1.0 - f) / retained as f64).sqrt(),
                excluded,
                m_median,
                p_median,
            });
        }
    }
    Ok(StudyResult {
        rows,
        warnings,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

enum FitCheck {
    Ok { t1: f64, t2: f64 },
    Excluded,
}

/// The cheap part of each engine, used by the null pass of power studies to
/// decide exclusions and collect tuning diagnostics without spending
/// bootstrap replicates (the corrected critical values consume only the
/// null statistics).
fn fit_check(cfg: &StudyConfig, series: &FunctionSeries, method: Method) -> Result<FitCheck> {
    match method {
        Method::Fsb => match crate::resample::fsb_fit_with(series, &cfg.settings.fsb_tuning()) {
            Ok(model) => Ok(FitCheck::Ok {
                t1: model.m() as f64,
                t2: model.p() as f64,
            }),
            Err(Error::FitFailure(_)) => Ok(FitCheck::Excluded),
            Err(e) => Err(e),
        },
        Method::Nbb => Ok(FitCheck::Ok {
            t1: cfg
                .settings
                .block_len
                .unwrap_or_else(|| default_block_len(cfg.n)) as f64,
            t2: 0.0,
        }),
        Method::Asymptotic => {
            let op = match series.cov_operator() {
                Ok(op) => op,
                Err(Error::FitFailure(_)) => return Ok(FitCheck::Excluded),
                Err(e) => return Err(e),
            };
            let full = match op.eigendecompose(series.grid_len()) {
                Ok(full) => full,
                Err(Error::FitFailure(_)) => return Ok(FitCheck::Excluded),
                Err(e) => return Err(e),
            };
            let d = match cfg.settings.d {
                Some(d) => d.min(full.m()),
                None => crate::varsieve::select_m(&full, cfg.settings.threshold)?,
            };
            let bandwidth = cfg
                .settings
                .bandwidth
                .unwrap_or_else(|| default_block_len(cfg.n));
            Ok(FitCheck::Ok {
                t1: d as f64,
                t2: bandwidth as f64,
            })
        }
    }
}

/// Size-corrected power over the configured jump sizes.
///
/// Two passes share the master seed. The null pass generates each
/// replication's sample, records its statistic and each engine's fit
/// diagnostics; per method and level the corrected critical value is the
/// `ceil((1-alpha)(R+1))` order statistic of the retained null statistics.
/// The alternative pass regenerates the same samples, injects each jump
/// after `change_at`, and counts statistics at or above the corrected
/// critical values. At jump zero the rejection frequency is exactly
/// `floor(alpha (R+1)) / R` by this convention.
pub fn run_power_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    if cfg.kind != StudyKind::Power {
        return Err(Error::invalid("config kind is not 'power'"));
    }
    let start = Instant::now();
    let master = RngStream::new(cfg.seed);
    let spec = cfg.dgp_spec();
    let k_star = cfg.change_at.expect("validated");

    struct NullRep {
        statistic: f64,
        checks: Vec<FitCheck>,
    }

    let null_pass: Vec<Result<NullRep>> = with_pool(cfg.workers, || {
        (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| {
                let rep = master.child(r);
                let series = spec.generate(&rep.child(0))?;
                let statistic = cusum(&series)?.statistic;
                let checks = cfg
                    .methods
                    .iter()
                    .map(|&method| fit_check(cfg, &series, method))
                    .collect::<Result<Vec<_>>>()?;
                Ok(NullRep { statistic, checks })
            })
            .collect()
    })?;
    let null_pass: Vec<NullRep> = null_pass.into_iter().collect::<Result<_>>()?;

    // alternative pass: same substreams, jumps injected
    let alt_stats: Vec<Result<Vec<f64>>> = with_pool(cfg.workers, || {
        (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| {
                let rep = master.child(r);
                let base = spec.generate(&rep.child(0))?;
                cfg.jumps
                    .iter()
                    .map(|&jump| {
                        let change = ChangeSpec {
                            k_star,
                            jump,
                            rate: None,
                        };
                        let jumped = crate::dgp::inject_change(
                            &base,
                            k_star,
                            &vec![change.effective_jump(cfg.n); base.grid_len()],
                        )?;
                        Ok(cusum(&jumped)?.statistic)
                    })
                    .collect()
            })
            .collect()
    })?;
    let alt_stats: Vec<Vec<f64>> = alt_stats.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let mut retained_idx = Vec::new();
        let mut t1 = Vec::new();
        let mut t2 = Vec::new();
        for (r, rep) in null_pass.iter().enumerate() {
            match &rep.checks[mi] {
                FitCheck::Ok { t1: a, t2: b } => {
                    retained_idx.push(r);
                    t1.push(*a);
                    t2.push(*b);
                }
                FitCheck::Excluded => {}
            }
        }
        let excluded = cfg.replications - retained_idx.len();
        if excluded * 20 > cfg.replications {
            warnings.push(format!(
                "{method}: {excluded} of {} replications excluded (over 5%)",
                cfg.replications
            ));
        }
        let m_median = median(&mut t1);
        let p_median = median(&mut t2);
        let r_eff = retained_idx.len().max(1);

        let mut null_sorted: Vec<f64> = retained_idx
            .iter()
            .map(|&r| null_pass[r].statistic)
            .collect();
        null_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

        for &alpha in &cfg.alphas {
            let k = ((1.0 - alpha) * (r_eff as f64 + 1.0)).ceil() as usize;
            let corrected = if k > null_sorted.len() {
                f64::INFINITY
            } else {
                null_sorted[k - 1]
            };
            for (ji, &jump) in cfg.jumps.iter().enumerate() {
                let hits = retained_idx
                    .iter()
                    .filter(|&&r| alt_stats[r][ji] >= corrected)
                    .count();
                let f = hits as f64 / r_eff as f64;
                rows.push(StudyRow {
                    method,
                    alpha,
                    jump,
                    frequency: f,
                    mc_se: (f * (1.0 - f) / r_eff as f64).sqrt(),
                    excluded,
                    m_median,
                    p_median,
                });
            }
        }
    }
    Ok(StudyResult {
        rows,
        warnings,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Run the configured engine once on ingested data.
///
/// Returns the outcome, the CUSUM scan (for profile export) and any
/// warnings (short samples).
pub fn run_single_test(
    cfg: &StudyConfig,
    series: &FunctionSeries,
) -> Result<(TestOutcome, CusumResult, Vec<String>)> {
    if cfg.methods.len() != 1 {
        return Err(Error::invalid("single test needs exactly one method"));
    }
    let mut warnings = Vec::new();
    if series.len() < 20 {
        warnings.push(format!(
            "only {} curves; asymptotic approximations are unreliable below 20",
            series.len()
        ));
    }
    let method = cfg.methods[0];
    let alpha = *cfg
        .alphas
        .first()
        .ok_or_else(|| Error::invalid("no alpha configured"))?;
    let rng = RngStream::new(cfg.seed);
    let outcome = with_pool(cfg.workers, || match method {
        Method::Fsb => fsb_test(
            series,
            cfg.bootstrap,
            alpha,
            &cfg.settings.fsb_tuning(),
            &rng,
        ),
        Method::Nbb => nbb_test(series, cfg.bootstrap, alpha, cfg.settings.block_len, &rng),
        Method::Asymptotic => asymptotic_test(
            series,
            alpha,
            cfg.settings.d,
            cfg.settings.bandwidth,
            cfg.settings.asym_paths,
            &rng,
        ),
    })??;
    let scan = cusum(series)?;
    Ok((outcome, scan, warnings))
}
