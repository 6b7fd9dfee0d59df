//! Vector-autoregressive sieve on score series.
//!
//! Estimates multivariate autocovariances, fits a VAR(p) by solving the
//! Yule-Walker normal equations through the block-Toeplitz system, extracts
//! centered residuals, and selects the truncation dimension `m` (explained
//! variance) and the sieve order `p` (corrected AIC).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funspace::{EigenSystem, ScoreSeries};

/// Sample autocovariance matrices `Gamma(h) = (n-h)^{-1} sum_t x_{t+h} x_t'`
/// for lags `0..=h_max` (scores are already centered).
#[derive(Debug, Clone)]
pub struct AutocovSet {
    dim: usize,
    n: usize,
    gammas: Vec<DMatrix<f64>>,
}

impl AutocovSet {
    /// Wrap explicit autocovariance matrices (lag 0 first). Used to feed
    /// closed-form autocovariances into the Yule-Walker solver.
    pub fn from_matrices(n: usize, gammas: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = match gammas.first() {
            Some(g0) if g0.nrows() == g0.ncols() => g0.nrows(),
            _ => return Err(Error::invalid("need a square lag-0 matrix")),
        };
        if gammas.iter().any(|g| g.nrows() != dim || g.ncols() != dim) {
            return Err(Error::invalid(
                "autocovariance matrices must share dimensions",
            ));
        }
        if (gammas[0].clone() - gammas[0].transpose()).norm() > 1e-10 * gammas[0].norm().max(1.0) {
            return Err(Error::invalid("lag-0 autocovariance must be symmetric"));
        }
        Ok(AutocovSet { dim, n, gammas })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn max_lag(&self) -> usize {
        self.gammas.len() - 1
    }

    /// `Gamma(h)` for `h >= 0`; negative lags are `Gamma(h)'` by construction.
    pub fn gamma(&self, h: usize) -> &DMatrix<f64> {
        &self.gammas[h]
    }

    /// `Gamma(h)` for any signed lag.
    pub fn gamma_signed(&self, h: i64) -> DMatrix<f64> {
        if h >= 0 {
            self.gammas[h as usize].clone()
        } else {
            self.gammas[(-h) as usize].transpose()
        }
    }
}

/// Autocovariances of a (centered) score series up to `h_max`.
pub fn autocovariances(scores: &ScoreSeries, h_max: usize) -> Result<AutocovSet> {
    let n = scores.len();
    let m = scores.dim();
    if h_max >= n {
        return Err(Error::invalid(format!(
            "h_max = {h_max} must be below n = {n}"
        )));
    }
    let mut gammas = Vec::with_capacity(h_max + 1);
    for h in 0..=h_max {
        let mut g = DMatrix::<f64>::zeros(m, m);
        for t in 0..n - h {
            let lead = scores.row(t + h);
            let lag = scores.row(t);
            for j in 0..m {
                let lj = lag[j];
                for i in 0..m {
                    g[(i, j)] += lead[i] * lj;
                }
            }
        }
        g /= (n - h) as f64;
        if h == 0 {
            // remove rounding skew
            g = (&g + g.transpose()) * 0.5;
        }
        gammas.push(g);
    }
    Ok(AutocovSet { dim: m, n, gammas })
}

/// A fitted VAR(p): Yule-Walker coefficients, innovation covariance,
/// centered residual pool and the companion-stability diagnostic.
#[derive(Debug, Clone)]
pub struct VarFit {
    order: usize,
    coefficients: Vec<DMatrix<f64>>,
    sigma_e: DMatrix<f64>,
    residuals: Vec<Vec<f64>>,
    spectral_radius: f64,
    ridged: bool,
}

impl VarFit {
    /// Assemble a fit from explicit coefficients, innovation covariance and
    /// a centered residual pool (for model surgery and experiments). The
    /// companion spectral radius is computed and must be below one.
    pub fn from_parts(
        coefficients: Vec<DMatrix<f64>>,
        sigma_e: DMatrix<f64>,
        residuals: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("need at least one coefficient matrix"));
        }
        let m = sigma_e.nrows();
        if sigma_e.ncols() != m
            || coefficients
                .iter()
                .any(|a| a.nrows() != m || a.ncols() != m)
        {
            return Err(Error::invalid("coefficient dimensions must match"));
        }
        if residuals.iter().any(|e| e.len() != m) {
            return Err(Error::invalid("residual dimension must match"));
        }
        if !residuals.is_empty() {
            for j in 0..m {
                let mean: f64 =
                    residuals.iter().map(|e| e[j]).sum::<f64>() / residuals.len() as f64;
                if mean.abs() > 1e-10 {
                    return Err(Error::invalid("residual pool is not centered"));
                }
            }
        }
        let spectral_radius = companion_spectral_radius_of(&coefficients, m);
        if spectral_radius >= 1.0 {
            return Err(Error::FitFailure(format!(
                "unstable coefficients: companion spectral radius {spectral_radius:.6}"
            )));
        }
        Ok(VarFit {
            order: coefficients.len(),
            coefficients,
            sigma_e,
            residuals,
            spectral_radius,
            ridged: false,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.sigma_e.nrows()
    }

    /// Coefficient matrix `A_j` (`j` in `1..=order`).
    pub fn coefficient(&self, j: usize) -> &DMatrix<f64> {
        &self.coefficients[j - 1]
    }

    pub fn sigma_e(&self) -> &DMatrix<f64> {
        &self.sigma_e
    }

    /// Centered residual pool (rows `e_t - mean`, `t = p+1..n`).
    pub fn residual_pool(&self) -> &[Vec<f64>] {
        &self.residuals
    }

    /// Companion spectral radius recorded at fit time.
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// True when the block-Toeplitz system needed ridge regularization.
    pub fn ridged(&self) -> bool {
        self.ridged
    }
}

fn block_toeplitz(acov: &AutocovSet, p: usize, ridge: f64) -> DMatrix<f64> {
    let m = acov.dim();
    let mut t = DMatrix::<f64>::zeros(m * p, m * p);
    for k in 0..p {
        for j in 0..p {
            let block = acov.gamma_signed(j as i64 - k as i64);
            t.view_mut((k * m, j * m), (m, m)).copy_from(&block);
        }
    }
    if ridge > 0.0 {
        for i in 0..m * p {
            t[(i, i)] += ridge;
        }
    }
    t
}

fn yw_solve(acov: &AutocovSet, p: usize, ridge: f64) -> Option<Vec<DMatrix<f64>>> {
    let m = acov.dim();
    let t = block_toeplitz(acov, p, ridge);
    let mut rhs = DMatrix::<f64>::zeros(m * p, m);
    for k in 0..p {
        rhs.view_mut((k * m, 0), (m, m))
            .copy_from(&acov.gamma(k + 1).transpose());
    }
    let solved = t.lu().solve(&rhs)?;
    let coeffs: Vec<DMatrix<f64>> = (0..p)
        .map(|j| solved.view((j * m, 0), (m, m)).transpose().into_owned())
        .collect();
    Some(coeffs)
}

fn normal_equation_residual(acov: &AutocovSet, coeffs: &[DMatrix<f64>]) -> f64 {
    let p = coeffs.len();
    let mut worst = 0.0f64;
    for k in 1..=p {
        let mut lhs = DMatrix::<f64>::zeros(acov.dim(), acov.dim());
        for (j, a) in coeffs.iter().enumerate() {
            lhs += a * acov.gamma_signed(k as i64 - (j + 1) as i64);
        }
        worst = worst.max((lhs - acov.gamma(k)).norm());
    }
    worst
}

/// Fit a VAR(p) to the autocovariances by the Yule-Walker normal equations.
///
/// A singular block-Toeplitz system is retried once with a ridge of
/// `1e-8 * trace(Gamma(0)) / m` on the diagonal; if the system stays
/// singular, or the fitted companion matrix is unstable, the fit fails.
/// The residual pool requires the originating scores, see [`residuals`];
/// this function fills it from `scores` when provided.
pub fn yule_walker(acov: &AutocovSet, p: usize, scores: Option<&ScoreSeries>) -> Result<VarFit> {
    let m = acov.dim();
    if p == 0 {
        return Err(Error::invalid("order p must be at least 1"));
    }
    if p > acov.max_lag() {
        return Err(Error::invalid(format!(
            "order p = {p} exceeds available lags {}",
            acov.max_lag()
        )));
    }
    let gamma0_norm = acov.gamma(0).norm().max(f64::MIN_POSITIVE);
    let tol = 1e-8 * gamma0_norm;

    let mut ridged = false;
    let mut coeffs = yw_solve(acov, p, 0.0).filter(|c| normal_equation_residual(acov, c) <= tol);
    if coeffs.is_none() {
        let ridge = 1e-8 * acov.gamma(0).trace() / m as f64;
        ridged = true;
        coeffs = yw_solve(acov, p, ridge);
    }
    let coefficients = coeffs.ok_or_else(|| {
        Error::FitFailure("singular Yule-Walker system (ridge retry failed)".into())
    })?;

    let mut sigma = acov.gamma(0).clone();
    for (j, a) in coefficients.iter().enumerate() {
        sigma -= a * acov.gamma(j + 1).transpose();
    }
    let sigma_e = (&sigma + sigma.transpose()) * 0.5;

    let spectral_radius = companion_spectral_radius_of(&coefficients, m);
    if spectral_radius >= 1.0 {
        return Err(Error::FitFailure(format!(
            "unstable VAR fit: companion spectral radius {spectral_radius:.6}"
        )));
    }

    let residual_pool = match scores {
        Some(s) => residual_pool(s, &coefficients)?,
        None => Vec::new(),
    };

    Ok(VarFit {
        order: p,
        coefficients,
        sigma_e,
        residuals: residual_pool,
        spectral_radius,
        ridged,
    })
}

fn residual_pool(scores: &ScoreSeries, coeffs: &[DMatrix<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = scores.len();
    let m = scores.dim();
    let p = coeffs.len();
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "need more than p = {p} observations, got {n}"
        )));
    }
    let mut pool: Vec<Vec<f64>> = Vec::with_capacity(n - p);
    for t in p..n {
        let mut e = scores.row(t).to_vec();
        for (j, a) in coeffs.iter().enumerate() {
            let lag = scores.row(t - j - 1);
            for i in 0..m {
                let mut acc = 0.0;
                for k in 0..m {
                    acc += a[(i, k)] * lag[k];
                }
                e[i] -= acc;
            }
        }
        pool.push(e);
    }
    let mut mean = vec![0.0; m];
    for e in &pool {
        for (acc, v) in mean.iter_mut().zip(e) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= pool.len() as f64;
    }
    for e in &mut pool {
        for (v, mu) in e.iter_mut().zip(&mean) {
            *v -= mu;
        }
    }
    Ok(pool)
}

/// Centered one-step-ahead residuals of `fit` on `scores`
/// (`e_t = x_t - sum_j A_j x_{t-j}`, `t = p+1..n`, pool-centered).
pub fn residuals(scores: &ScoreSeries, fit: &VarFit) -> Result<Vec<Vec<f64>>> {
    residual_pool(scores, &fit.coefficients)
}

/// Spectral radius of the companion matrix of the fitted coefficients,
/// estimated by power iteration (200 iterations, tolerance 1e-10) with a
/// geometric-mean growth estimate so complex-conjugate dominant pairs do not
/// oscillate.
pub fn companion_spectral_radius(fit: &VarFit) -> f64 {
    companion_spectral_radius_of(&fit.coefficients, fit.dim())
}

fn companion_spectral_radius_of(coeffs: &[DMatrix<f64>], m: usize) -> f64 {
    let p = coeffs.len();
    let d = m * p;
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for (j, a) in coeffs.iter().enumerate() {
        companion.view_mut((0, j * m), (m, m)).copy_from(a);
    }
    for b in 1..p {
        for i in 0..m {
            companion[(b * m + i, (b - 1) * m + i)] = 1.0;
        }
    }

    let mut v = nalgebra::DVector::from_element(d, (d as f64).sqrt().recip());
    let mut log_sum = 0.0;
    let mut estimate = 0.0;
    for it in 1..=200 {
        let w = &companion * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        log_sum += norm.ln();
        let next = (log_sum / it as f64).exp();
        if it > 1 && (next - estimate).abs() <= 1e-10 {
            return next;
        }
        estimate = next;
        v = w / norm;
    }
    estimate
}

/// Outcome of the data-driven tuning rules, with the diagnostics that back
/// the choice.
#[derive(Debug, Clone)]
pub struct TuningChoice {
    pub m: usize,
    pub p: usize,
    /// Explained-variance fraction reached by the selected `m`.
    pub explained: f64,
    /// `(p, AICc)` trace of the order search (empty when `p` was fixed).
    pub aicc_trace: Vec<(usize, f64)>,
    /// True when either value came from the automatic rule.
    pub auto_m: bool,
    pub auto_p: bool,
}

impl TuningChoice {
    /// Validate the joint guard `m * p < n / 2`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.p == 0 {
            return Err(Error::invalid("tuning requires m >= 1 and p >= 1"));
        }
        if (self.m * self.p) as f64 >= n as f64 / 2.0 {
            return Err(Error::invalid(format!(
                "tuning m = {}, p = {} too large for n = {n} (need m*p < n/2)",
                self.m, self.p
            )));
        }
        Ok(())
    }
}

/// Smallest `m` whose cumulative explained-variance fraction reaches
/// `threshold`, capped at `floor(n^(1/3))` and at the retained (non
/// degenerate) part of the spectrum.
pub fn select_m(eig: &EigenSystem, threshold: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&threshold) || threshold <= 0.0 {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    let n = eig.sample_size();
    let rate_cap = (n as f64).powf(1.0 / 3.0).floor() as usize;
    let cap = eig.m().min(rate_cap.max(1));
    let mut m = cap;
    for j in 1..=cap {
        if eig.cumulative_fraction(j) >= threshold {
            m = j;
            break;
        }
    }
    Ok(m)
}

/// Default ceiling for the order search: `ceil(n^(1/4)) + 2`.
pub fn default_p_max(n: usize) -> usize {
    (n as f64).powf(0.25).ceil() as usize + 2
}

/// Order selection by corrected AIC over `p = 1..=p_max`:
///
/// `AICc(p) = n log det Sigma_e(p) + n m (n + p m) / (n - p m - m - 1)`,
///
/// the multivariate small-sample correction (it reduces to the scalar
/// `n (n + p) / (n - p - 2)` at `m = 1`). Ties break toward smaller `p`;
/// candidates whose fit fails or whose correction denominator is
/// non-positive are skipped.
pub fn select_p(
    scores: &ScoreSeries,
    m: usize,
    p_max: usize,
) -> Result<(usize, Vec<(usize, f64)>)> {
    let n = scores.len();
    if p_max == 0 {
        return Err(Error::invalid("p_max must be at least 1"));
    }
    if (p_max * m) as f64 >= n as f64 / 2.0 {
        return Err(Error::invalid(format!(
            "p_max = {p_max} too large for m = {m}, n = {n}"
        )));
    }
    let restricted = if m == scores.dim() {
        scores.clone()
    } else {
        scores.take_columns(m)?
    };
    let acov = autocovariances(&restricted, p_max)?;
    let nf = n as f64;
    let mf = m as f64;
    let mut trace = Vec::with_capacity(p_max);
    let mut best: Option<(usize, f64)> = None;
    for p in 1..=p_max {
        let denom = nf - (p * m) as f64 - mf - 1.0;
        if denom <= 0.0 {
            continue;
        }
        let fit = match yule_walker(&acov, p, None) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let det = fit.sigma_e().determinant();
        if !det.is_finite() || det <= 0.0 {
            continue;
        }
        let aicc = nf * det.ln() + nf * mf * (nf + (p * m) as f64) / denom;
        trace.push((p, aicc));
        let better = match best {
            None => true,
            Some((_, cur)) => aicc < cur,
        };
        if better {
            best = Some((p, aicc));
        }
    }
    match best {
        Some((p, _)) => Ok((p, trace)),
        None => Err(Error::FitFailure(
            "order selection failed for every candidate".into(),
        )),
    }
}
