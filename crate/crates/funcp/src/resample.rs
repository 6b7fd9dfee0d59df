//! Critical-value engines for the CUSUM test.
//!
//! Three ways to approximate the null distribution of the statistic:
//!
//! * **fsb** - functional sieve bootstrap: principal-component scores of the
//!   sample are driven through a Yule-Walker VAR(p) fitted to them, with
//!   i.i.d. resampling of the centered VAR residuals and of the centered
//!   truncation remainders; pseudo samples are rebuilt in function space and
//!   the statistic is recomputed.
//! * **nbb** - sequential non-overlapping block bootstrap: the sample is cut
//!   into blocks of a fixed length which are resampled with replacement and
//!   concatenated.
//! * **asymptotic** - the limit distribution (supremum of a Brownian bridge
//!   in function space) is simulated after projecting on a few principal
//!   components and estimating their long-run covariance with a Bartlett
//!   kernel.
//!
//! All engines share the replicate-quantile conventions: critical value
//! `C = T*_(ceil((1-alpha)(B+1)))`, p-value `(1 + #{T* >= T_n}) / (B + 1)`,
//! and the decision `reject <=> p <= alpha`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::cusum::{cusum, CusumResult};
use crate::error::{Error, Result};
use crate::funspace::{EigenSystem, FunctionSeries, RemainderPool};
use crate::rng::RngStream;
use crate::varsieve::{
    autocovariances, default_p_max, select_m, select_p, yule_walker, TuningChoice, VarFit,
};

/// Critical-value engine identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fsb,
    Nbb,
    Asymptotic,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Fsb => "fsb",
            Method::Nbb => "nbb",
            Method::Asymptotic => "asymptotic",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fsb" => Ok(Method::Fsb),
            "nbb" => Ok(Method::Nbb),
            "asymptotic" | "asym" => Ok(Method::Asymptotic),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Replicates of the bootstrap (or simulated limit) distribution.
#[derive(Debug, Clone)]
pub struct BootstrapDistribution {
    pub method: Method,
    pub replicates: Vec<f64>,
}

impl BootstrapDistribution {
    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    /// Order statistic `ceil((1 - alpha)(B + 1))` of the replicates;
    /// infinite when that index exceeds `B` (then no p-value can reach
    /// `alpha` either, so the conventions stay coherent).
    pub fn critical_value(&self, alpha: f64) -> f64 {
        let b = self.replicates.len();
        let k = ((1.0 - alpha) * (b as f64 + 1.0)).ceil() as usize;
        if k == 0 {
            return 0.0;
        }
        if k > b {
            return f64::INFINITY;
        }
        let mut sorted = self.replicates.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[k - 1]
    }

    /// `(1 + #{T* >= t}) / (B + 1)`; never returns zero.
    pub fn p_value(&self, t: f64) -> f64 {
        let count = self.replicates.iter().filter(|v| **v >= t).count();
        (1 + count) as f64 / (self.replicates.len() + 1) as f64
    }
}

/// Fit diagnostics recorded alongside every test decision.
#[derive(Debug, Clone, Default)]
pub struct FitDiagnostics {
    /// Companion spectral radius of the VAR fit (fsb only).
    pub spectral_radius: Option<f64>,
    /// The Yule-Walker system needed ridge regularization.
    pub ridged: bool,
    /// The requested component count was reduced (degenerate spectrum).
    pub truncated: bool,
    /// Explained-variance fraction of the retained components.
    pub explained: Option<f64>,
    /// Zero-variance input; the engine returned the exact degenerate
    /// distribution instead of fitting.
    pub degenerate: bool,
}

/// Everything a single test run produces.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub method: Method,
    pub n: usize,
    pub grid_len: usize,
    /// Retained components (fsb) or projection dimension (asymptotic).
    pub m: Option<usize>,
    /// VAR order (fsb).
    pub p: Option<usize>,
    /// Block length (nbb).
    pub block_len: Option<usize>,
    /// Bartlett bandwidth (asymptotic).
    pub bandwidth: Option<usize>,
    /// Replicate count (bootstrap samples, or simulated limit paths).
    pub b: usize,
    pub alpha: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    /// Change-point location estimate (smallest maximizing k).
    pub argmax_k: usize,
    /// Master seed of the stream that produced the replicates.
    pub seed: u64,
    pub distribution: BootstrapDistribution,
    pub diagnostics: FitDiagnostics,
}

fn finish_outcome(
    method: Method,
    series: &FunctionSeries,
    scan: &CusumResult,
    replicates: Vec<f64>,
    alpha: f64,
    seed: u64,
    diagnostics: FitDiagnostics,
) -> TestOutcome {
    let distribution = BootstrapDistribution { method, replicates };
    let critical_value = distribution.critical_value(alpha);
    let p_value = distribution.p_value(scan.statistic);
    TestOutcome {
        method,
        n: series.len(),
        grid_len: series.grid_len(),
        m: None,
        p: None,
        block_len: None,
        bandwidth: None,
        b: distribution.len(),
        alpha,
        statistic: scan.statistic,
        critical_value,
        p_value,
        reject: p_value <= alpha,
        argmax_k: scan.argmax_k,
        seed,
        distribution,
        diagnostics,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1)")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Functional sieve bootstrap
// ---------------------------------------------------------------------------

/// Tuning inputs for the sieve: fixed values or the automatic rules
/// (explained-variance threshold for `m`, corrected AIC for `p`).
#[derive(Debug, Clone)]
pub struct FsbTuning {
    pub m: Option<usize>,
    pub p: Option<usize>,
    /// Explained-variance threshold for the automatic `m` rule.
    pub threshold: f64,
    /// Ceiling for the automatic order search (default `ceil(n^(1/4)) + 2`).
    pub p_max: Option<usize>,
}

impl Default for FsbTuning {
    fn default() -> Self {
        FsbTuning {
            m: None,
            p: None,
            threshold: 0.85,
            p_max: None,
        }
    }
}

/// Fitted sieve model: everything needed to generate pseudo samples.
#[derive(Debug, Clone)]
pub struct FsbModel {
    eig: EigenSystem,
    fit: VarFit,
    remainder_pool: RemainderPool,
    sample_mean: Vec<f64>,
    n: usize,
    burn_in: usize,
    tuning: TuningChoice,
    degenerate: bool,
}

impl FsbModel {
    /// Assemble a model from its parts (mainly for experiments; dimensions
    /// must agree and both pools must be centered).
    pub fn from_parts(
        eig: EigenSystem,
        fit: VarFit,
        remainder_pool: RemainderPool,
        sample_mean: Vec<f64>,
        n: usize,
        burn_in: usize,
    ) -> Result<Self> {
        if fit.dim() != eig.m() {
            return Err(Error::invalid(
                "VAR dimension does not match component count",
            ));
        }
        if remainder_pool.grid_len() != eig.grid().len() {
            return Err(Error::invalid("remainder pool does not match grid"));
        }
        if sample_mean.len() != eig.grid().len() {
            return Err(Error::invalid("sample mean does not match grid"));
        }
        let m = fit.dim();
        if !fit.residual_pool().is_empty() {
            for j in 0..m {
                let mean: f64 = fit.residual_pool().iter().map(|e| e[j]).sum::<f64>()
                    / fit.residual_pool().len() as f64;
                if mean.abs() > 1e-10 {
                    return Err(Error::invalid("residual pool is not centered"));
                }
            }
        }
        let tuning = TuningChoice {
            m,
            p: fit.order(),
            explained: eig.explained_fraction(),
            aicc_trace: Vec::new(),
            auto_m: false,
            auto_p: false,
        };
        Ok(FsbModel {
            eig,
            fit,
            remainder_pool,
            sample_mean,
            n,
            burn_in,
            tuning,
            degenerate: false,
        })
    }

    pub fn m(&self) -> usize {
        self.eig.m()
    }

    pub fn p(&self) -> usize {
        self.fit.order()
    }

    pub fn var_fit(&self) -> &VarFit {
        &self.fit
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn tuning(&self) -> &TuningChoice {
        &self.tuning
    }

    /// Sample mean of the fitted series. Pseudo samples are generated
    /// around zero; add this back to place them on the original level.
    pub fn sample_mean(&self) -> &[f64] {
        &self.sample_mean
    }

    pub fn diagnostics(&self) -> FitDiagnostics {
        FitDiagnostics {
            spectral_radius: Some(self.fit.spectral_radius()),
            ridged: self.fit.ridged(),
            truncated: self.eig.truncated(),
            explained: Some(self.eig.explained_fraction()),
            degenerate: self.degenerate,
        }
    }
}

/// Fit the sieve with explicit `m` and `p`.
pub fn fsb_fit(series: &FunctionSeries, m: usize, p: usize) -> Result<FsbModel> {
    fsb_fit_with(
        series,
        &FsbTuning {
            m: Some(m),
            p: Some(p),
            ..FsbTuning::default()
        },
    )
}

/// Fit the sieve, resolving unspecified tuning values by the automatic
/// rules. Degenerate trailing eigenvalues reduce `m` with a diagnostic.
pub fn fsb_fit_with(series: &FunctionSeries, tuning: &FsbTuning) -> Result<FsbModel> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InsufficientData(
            "sieve fit needs at least 4 curves".into(),
        ));
    }
    let op = series.cov_operator()?;
    let full = op.eigendecompose(series.grid_len())?;

    let (m, auto_m) = match tuning.m {
        Some(m) => {
            if m == 0 || m > series.grid_len() {
                return Err(Error::invalid(format!(
                    "m = {m} outside 1..={}",
                    series.grid_len()
                )));
            }
            (m.min(full.m()), false)
        }
        None => (select_m(&full, tuning.threshold)?, true),
    };
    let eig = full.truncate(m)?;

    let scores = eig.project_scores(series)?;
    let (p, auto_p, aicc_trace) = match tuning.p {
        Some(p) => (p, false, Vec::new()),
        None => {
            let cap = ((n as f64 / 2.0 - 1.0) / m as f64).floor() as usize;
            let p_max = tuning
                .p_max
                .unwrap_or_else(|| default_p_max(n))
                .min(cap.max(1));
            let (p, trace) = select_p(&scores, m, p_max)?;
            (p, true, trace)
        }
    };
    let choice = TuningChoice {
        m,
        p,
        explained: eig.explained_fraction(),
        aicc_trace,
        auto_m,
        auto_p,
    };
    choice.validate(n)?;

    let acov = autocovariances(&scores, p)?;
    let fit = yule_walker(&acov, p, Some(&scores))?;
    let remainder_pool = eig.remainders(series)?;

    Ok(FsbModel {
        eig,
        fit,
        remainder_pool,
        sample_mean: series.sample_mean(),
        n,
        burn_in: 100.max(10 * p),
        tuning: choice,
        degenerate: false,
    })
}

/// Generate one pseudo sample from a fitted sieve model.
///
/// Residual and remainder indices are drawn from independent substreams;
/// the score recursion starts from zero and discards `burn_in` draws. The
/// sample mean is not added back (the statistic is shift invariant).
pub fn fsb_generate(model: &FsbModel, rng: &RngStream) -> FunctionSeries {
    let m = model.m();
    let p = model.p();
    let g = model.eig.grid().len();
    let n = model.n;

    let mut residual_rng = rng.child(0).rng();
    let mut remainder_rng = rng.child(1).rng();
    let residual_pool = model.fit.residual_pool();
    let pool_len = residual_pool.len();

    // VAR recursion on a ring of the last p states
    let mut history = vec![vec![0.0; m]; p];
    let mut scores = Vec::with_capacity(n);
    for step in 0..model.burn_in + n {
        let mut next = residual_pool[residual_rng.random_range(0..pool_len)].clone();
        for j in 1..=p {
            let a = model.fit.coefficient(j);
            let lag = &history[(step + p - j) % p];
            for i in 0..m {
                let mut acc = 0.0;
                for k in 0..m {
                    acc += a[(i, k)] * lag[k];
                }
                next[i] += acc;
            }
        }
        if step >= model.burn_in {
            scores.push(next.clone());
        }
        history[step % p] = next;
    }

    let mut values = vec![0.0; n * g];
    let rem_len = model.remainder_pool.len();
    for (t, score) in scores.iter().enumerate() {
        let row = &mut values[t * g..(t + 1) * g];
        row.copy_from_slice(
            model
                .remainder_pool
                .curve(remainder_rng.random_range(0..rem_len)),
        );
        for (j, s) in score.iter().enumerate().take(m) {
            let v = model.eig.eigenfunction(j);
            for i in 0..g {
                row[i] += s * v[i];
            }
        }
    }
    FunctionSeries::new(model.eig.grid().clone(), n, values)
        .expect("generated sample is well formed")
}

fn zero_variance(series: &FunctionSeries) -> bool {
    let mean = series.sample_mean();
    series
        .rows()
        .all(|row| row.iter().zip(&mean).all(|(v, m)| v == m))
}

/// Sieve-bootstrap test of the no-change hypothesis.
pub fn fsb_test(
    series: &FunctionSeries,
    b: usize,
    alpha: f64,
    tuning: &FsbTuning,
    rng: &RngStream,
) -> Result<TestOutcome> {
    if b < 100 {
        return Err(Error::invalid(format!("bootstrap size B = {b} below 100")));
    }
    check_alpha(alpha)?;
    let scan = cusum(series)?;

    // zero-variance input: every pseudo sample is identically zero, so the
    // bootstrap distribution is a point mass at zero
    if zero_variance(series) {
        let diagnostics = FitDiagnostics {
            degenerate: true,
            ..FitDiagnostics::default()
        };
        return Ok(finish_outcome(
            Method::Fsb,
            series,
            &scan,
            vec![0.0; b],
            alpha,
            rng.seed(),
            diagnostics,
        ));
    }

    let model = fsb_fit_with(series, tuning)?;
    let replicates: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let pseudo = fsb_generate(&model, &rng.child(i));
            cusum(&pseudo).expect("pseudo sample has n >= 2").statistic
        })
        .collect();

    let mut outcome = finish_outcome(
        Method::Fsb,
        series,
        &scan,
        replicates,
        alpha,
        rng.seed(),
        model.diagnostics(),
    );
    outcome.m = Some(model.m());
    outcome.p = Some(model.p());
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Non-overlapping block bootstrap
// ---------------------------------------------------------------------------

/// Default block length `ceil(n^(1/3))`.
pub fn default_block_len(n: usize) -> usize {
    (n as f64).powf(1.0 / 3.0).ceil() as usize
}

fn nbb_generate(
    series: &FunctionSeries,
    block_len: usize,
    mean: &[f64],
    rng: &RngStream,
) -> FunctionSeries {
    let n = series.len();
    let g = series.grid_len();
    let blocks = n / block_len;
    let draws = n.div_ceil(block_len);
    let mut r = rng.rng();
    let mut values = Vec::with_capacity(n * g);
    'outer: for _ in 0..draws {
        let b = r.random_range(0..blocks);
        for t in b * block_len..(b + 1) * block_len {
            if values.len() == n * g {
                break 'outer;
            }
            values.extend(series.row(t).iter().zip(mean).map(|(v, m)| v - m));
        }
    }
    values.truncate(n * g);
    FunctionSeries::new(series.grid().clone(), n, values).expect("block sample is well formed")
}

/// Non-overlapping block bootstrap test. Blocks of length `block_len`
/// (default `ceil(n^(1/3))`) are resampled with replacement, concatenated,
/// truncated to length `n` and centered by the original sample mean.
pub fn nbb_test(
    series: &FunctionSeries,
    b: usize,
    alpha: f64,
    block_len: Option<usize>,
    rng: &RngStream,
) -> Result<TestOutcome> {
    if b < 100 {
        return Err(Error::invalid(format!("bootstrap size B = {b} below 100")));
    }
    check_alpha(alpha)?;
    let n = series.len();
    let scan = cusum(series)?;
    let block_len = block_len.unwrap_or_else(|| default_block_len(n));
    if block_len == 0 || block_len > n / 2 {
        return Err(Error::invalid(format!(
            "block length {block_len} outside 1..={}",
            n / 2
        )));
    }
    let mean = series.sample_mean();
    let replicates: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let pseudo = nbb_generate(series, block_len, &mean, &rng.child(i));
            cusum(&pseudo).expect("pseudo sample has n >= 2").statistic
        })
        .collect();
    let mut outcome = finish_outcome(
        Method::Nbb,
        series,
        &scan,
        replicates,
        alpha,
        rng.seed(),
        FitDiagnostics::default(),
    );
    outcome.block_len = Some(block_len);
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Asymptotic comparator
// ---------------------------------------------------------------------------

/// Simulate `m_paths` values of `sup_t |bridge(t)|` for a `d`-dimensional
/// Brownian bridge with increment covariance `cov`, discretized on
/// `n_grid` equispaced time points.
pub fn simulate_limit_sups(
    cov: &DMatrix<f64>,
    n_grid: usize,
    m_paths: usize,
    rng: &RngStream,
) -> Vec<f64> {
    let d = cov.nrows();
    // PSD square root via eigendecomposition with negative clipping
    let eig = cov.clone().symmetric_eigen();
    let mut root = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        for i in 0..d {
            root[(i, k)] = eig.eigenvectors[(i, k)] * lam;
        }
    }
    let dt_sqrt = (1.0 / n_grid as f64).sqrt();

    (0..m_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut r = rng.child(path).rng();
            let mut w = vec![0.0; d];
            let mut walk = Vec::with_capacity(n_grid);
            for _ in 0..n_grid {
                for i in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        let z: f64 = r.sample(rand_distr::StandardNormal);
                        acc += root[(i, k)] * z;
                    }
                    w[i] += dt_sqrt * acc;
                }
                walk.push(w.clone());
            }
            let end = walk[n_grid - 1].clone();
            let mut sup = 0.0f64;
            for (i, point) in walk.iter().enumerate() {
                let t = (i + 1) as f64 / n_grid as f64;
                let mut sq = 0.0;
                for k in 0..d {
                    let v = point[k] - t * end[k];
                    sq += v * v;
                }
                sup = sup.max(sq.sqrt());
            }
            sup
        })
        .collect()
}

/// Bartlett-kernel long-run covariance of the leading `d` score processes:
/// `Gamma(0) + sum_{h=1}^{b} (1 - h/b) (Gamma(h) + Gamma(h)')`.
pub fn long_run_covariance(
    eig: &EigenSystem,
    series: &FunctionSeries,
    d: usize,
    bandwidth: usize,
) -> Result<DMatrix<f64>> {
    let scores = eig.truncate(d)?.project_scores(series)?;
    let h_max = bandwidth.min(series.len() - 1);
    let acov = autocovariances(&scores, h_max)?;
    let mut lrc = acov.gamma(0).clone();
    for h in 1..=h_max {
        let w = 1.0 - h as f64 / bandwidth as f64;
        if w <= 0.0 {
            break;
        }
        let gh = acov.gamma(h);
        lrc += (gh + gh.transpose()) * w;
    }
    Ok((&lrc + lrc.transpose()) * 0.5)
}

/// Test against the simulated limit distribution: project on `d` principal
/// components (default: explained-variance rule), estimate their long-run
/// covariance with Bartlett bandwidth `bandwidth` (default `ceil(n^(1/3))`),
/// simulate `m_paths` bridge suprema on an `n`-point grid and compare.
pub fn asymptotic_test(
    series: &FunctionSeries,
    alpha: f64,
    d: Option<usize>,
    bandwidth: Option<usize>,
    m_paths: usize,
    rng: &RngStream,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if m_paths < 1000 {
        return Err(Error::invalid(format!(
            "limit simulation needs at least 1000 paths, got {m_paths}"
        )));
    }
    let n = series.len();
    let scan = cusum(series)?;
    let bandwidth = bandwidth.unwrap_or_else(|| default_block_len(n));

    if zero_variance(series) {
        let diagnostics = FitDiagnostics {
            degenerate: true,
            ..FitDiagnostics::default()
        };
        let mut outcome = finish_outcome(
            Method::Asymptotic,
            series,
            &scan,
            vec![0.0; m_paths],
            alpha,
            rng.seed(),
            diagnostics,
        );
        outcome.bandwidth = Some(bandwidth);
        return Ok(outcome);
    }

    let op = series.cov_operator()?;
    let full = op.eigendecompose(series.grid_len())?;
    let d = match d {
        Some(d) => {
            if d == 0 || d > full.m() {
                return Err(Error::invalid(format!(
                    "projection dimension d = {d} outside 1..={}",
                    full.m()
                )));
            }
            d
        }
        None => select_m(&full, 0.85)?,
    };
    let lrc = long_run_covariance(&full, series, d, bandwidth)?;
    let sups = simulate_limit_sups(&lrc, n, m_paths, rng);

    let mut outcome = finish_outcome(
        Method::Asymptotic,
        series,
        &scan,
        sups,
        alpha,
        rng.seed(),
        FitDiagnostics {
            explained: Some(full.cumulative_fraction(d)),
            truncated: full.truncated(),
            ..FitDiagnostics::default()
        },
    );
    outcome.m = Some(d);
    outcome.bandwidth = Some(bandwidth);
    Ok(outcome)
}
