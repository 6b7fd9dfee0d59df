//! Discretized function space on `[0, 1]`.
//!
//! Curves are sampled on a shared [`Grid`] and integrals are evaluated by
//! trapezoidal quadrature, so the L2 inner product of two curves is a
//! weighted dot product of their sample vectors. On top of that this module
//! provides sample moments, the lag-zero covariance operator, its
//! eigendecomposition (functional PCA), score extraction and the
//! truncation remainders of the resulting expansion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Quadrature grid on `[0, 1]`: strictly increasing abscissae from 0 to 1
/// with positive trapezoidal weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Equidistant grid with `g` points and trapezoidal weights
    /// `(1/2, 1, ..., 1, 1/2) / (g - 1)`.
    pub fn equidistant(g: usize) -> Result<Self> {
        if g < 3 {
            return Err(Error::invalid(format!(
                "grid needs at least 3 points, got {g}"
            )));
        }
        let h = 1.0 / (g - 1) as f64;
        let points = (0..g).map(|i| i as f64 * h).collect();
        let mut weights = vec![h; g];
        weights[0] = 0.5 * h;
        weights[g - 1] = 0.5 * h;
        Ok(Grid { points, weights })
    }

    /// Grid from explicit abscissae (must start at 0, end at 1, strictly
    /// increasing). Weights are the trapezoidal ones for the given spacing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let g = points.len();
        if g < 3 {
            return Err(Error::invalid(format!(
                "grid needs at least 3 points, got {g}"
            )));
        }
        if points[0] != 0.0 || points[g - 1] != 1.0 {
            return Err(Error::invalid("grid must start at 0 and end at 1"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        let mut weights = vec![0.0; g];
        weights[0] = 0.5 * (points[1] - points[0]);
        weights[g - 1] = 0.5 * (points[g - 1] - points[g - 2]);
        for i in 1..g - 1 {
            weights[i] = 0.5 * (points[i + 1] - points[i - 1]);
        }
        Ok(Grid { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature inner product of two curves sampled on this grid.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        if f.len() != self.len() || g.len() != self.len() {
            return Err(Error::invalid(format!(
                "inner product length mismatch: grid {}, f {}, g {}",
                self.len(),
                f.len(),
                g.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(f.iter().zip(g.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    /// Quadrature L2 norm of a curve.
    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        Ok(self.inner_product(f, f)?.max(0.0).sqrt())
    }
}

/// A sample of `n` curves on a common grid, stored row-major (`row t` is the
/// `t`-th curve).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSeries {
    grid: Grid,
    n: usize,
    values: Vec<f64>,
}

impl FunctionSeries {
    /// Build a series from row-major values (`n * grid.len()` entries,
    /// all finite, at least one row).
    pub fn new(grid: Grid, n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InsufficientData(
                "series needs at least one curve".into(),
            ));
        }
        if values.len() != n * grid.len() {
            return Err(Error::invalid(format!(
                "expected {} values ({} curves x {} grid points), got {}",
                n * grid.len(),
                n,
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value in curve {}, grid point {}",
                pos / grid.len(),
                pos % grid.len()
            )));
        }
        Ok(FunctionSeries { grid, n, values })
    }

    /// Assemble a series from individual curves.
    pub fn from_rows(grid: Grid, rows: &[Vec<f64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * grid.len());
        for row in rows {
            if row.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "curve length {} does not match grid size {}",
                    row.len(),
                    grid.len()
                )));
            }
            values.extend_from_slice(row);
        }
        FunctionSeries::new(grid, rows.len(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[t * g..(t + 1) * g]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.grid.len())
    }

    /// Pointwise sample mean curve.
    pub fn sample_mean(&self) -> Vec<f64> {
        let g = self.grid.len();
        let mut mean = vec![0.0; g];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        for m in &mut mean {
            *m *= inv;
        }
        mean
    }

    /// Add a fixed curve to every row.
    pub fn shifted(&self, g_fn: &[f64]) -> Result<FunctionSeries> {
        if g_fn.len() != self.grid.len() {
            return Err(Error::invalid("shift curve length does not match grid"));
        }
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.grid.len()) {
            for (v, s) in row.iter_mut().zip(g_fn) {
                *v += s;
            }
        }
        FunctionSeries::new(self.grid.clone(), self.n, values)
    }

    /// Sample lag-zero covariance operator of the series.
    ///
    /// The kernel is `c(x_i, x_j) = n^{-1} sum_t (Y_t(x_i) - mean(x_i)) *
    /// (Y_t(x_j) - mean(x_j))`, symmetrized to remove rounding skew.
    pub fn cov_operator(&self) -> Result<CovOperator> {
        if self.n < 2 {
            return Err(Error::InsufficientData(
                "covariance operator needs at least 2 curves".into(),
            ));
        }
        let g = self.grid.len();
        let mean = self.sample_mean();
        let mut kernel = DMatrix::<f64>::zeros(g, g);
        let mut centered = vec![0.0; g];
        for row in self.rows() {
            for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
                *c = v - m;
            }
            for j in 0..g {
                let cj = centered[j];
                for i in j..g {
                    kernel[(i, j)] += centered[i] * cj;
                }
            }
        }
        let inv = 1.0 / self.n as f64;
        for j in 0..g {
            for i in j..g {
                let v = kernel[(i, j)] * inv;
                kernel[(i, j)] = v;
                kernel[(j, i)] = v;
            }
        }
        Ok(CovOperator {
            grid: self.grid.clone(),
            kernel,
            n: self.n,
        })
    }
}

/// Covariance operator represented by its kernel values on the grid.
#[derive(Debug, Clone)]
pub struct CovOperator {
    grid: Grid,
    kernel: DMatrix<f64>,
    /// Sample size the operator was estimated from (used by tuning rules).
    n: usize,
}

impl CovOperator {
    /// Wrap an explicit kernel (for closed-form operators in tests and
    /// diagnostics). `n` is the nominal sample size carried along.
    pub fn from_kernel(grid: Grid, kernel: DMatrix<f64>, n: usize) -> Result<Self> {
        let g = grid.len();
        if kernel.nrows() != g || kernel.ncols() != g {
            return Err(Error::invalid("kernel dimensions do not match grid"));
        }
        let scale = kernel.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..g {
            for j in (i + 1)..g {
                if (kernel[(i, j)] - kernel[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::invalid("kernel is not symmetric"));
                }
            }
        }
        Ok(CovOperator { grid, kernel, n })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Quadrature trace `sum_i w_i c(x_i, x_i)`.
    pub fn trace(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.kernel[(i, i)])
            .sum()
    }

    /// Top-`m` eigenpairs of the operator.
    ///
    /// The weighted kernel `W^{1/2} K W^{1/2}` is symmetric, so a standard
    /// symmetric solver applies; eigenvectors are mapped back by `W^{-1/2}`
    /// which makes the eigenfunctions orthonormal under the quadrature inner
    /// product. Signs are fixed so the entry of largest absolute value is
    /// positive. If the spectrum degenerates (`lambda_m < 1e-12 * lambda_1`)
    /// the system is truncated below `m` and flagged.
    pub fn eigendecompose(&self, m: usize) -> Result<EigenSystem> {
        let g = self.grid.len();
        if m == 0 || m > g {
            return Err(Error::invalid(format!(
                "component count m={m} out of range 1..={g}"
            )));
        }
        let sqrt_w: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        let mut b = self.kernel.clone();
        for j in 0..g {
            for i in 0..g {
                b[(i, j)] *= sqrt_w[i] * sqrt_w[j];
            }
        }
        let eig = b.symmetric_eigen();

        // Order eigenpairs by descending eigenvalue.
        let mut order: Vec<usize> = (0..g).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let all_eigenvalues: Vec<f64> =
            order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let lambda_1 = all_eigenvalues[0];
        let mut kept = m.min(g);
        if lambda_1 <= 0.0 {
            return Err(Error::FitFailure(
                "operator has no positive eigenvalue (zero-variance data)".into(),
            ));
        }
        while kept > 1 && all_eigenvalues[kept - 1] < 1e-12 * lambda_1 {
            kept -= 1;
        }
        if all_eigenvalues[kept - 1] < 1e-12 * lambda_1 {
            return Err(Error::FitFailure(
                "degenerate spectrum: no usable component".into(),
            ));
        }
        let truncated = kept < m;

        let mut eigenfunctions = Vec::with_capacity(kept);
        for &k in order.iter().take(kept) {
            let col = eig.eigenvectors.column(k);
            let mut v: Vec<f64> = (0..g).map(|i| col[i] / sqrt_w[i]).collect();
            // canonical sign: largest-magnitude entry positive
            let mut idx = 0;
            for (i, x) in v.iter().enumerate() {
                if x.abs() > v[idx].abs() {
                    idx = i;
                }
            }
            if v[idx] < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
            eigenfunctions.push(v);
        }

        let eigenvalues: Vec<f64> = all_eigenvalues[..kept].to_vec();
        let total: f64 = all_eigenvalues.iter().sum();
        let explained: f64 = if total > 0.0 {
            eigenvalues.iter().sum::<f64>() / total
        } else {
            0.0
        };
        let spacings = spacings_of(&all_eigenvalues, kept);
        let cumulative: Vec<f64> = all_eigenvalues
            .iter()
            .scan(0.0, |acc, l| {
                *acc += l;
                Some(if total > 0.0 { *acc / total } else { 0.0 })
            })
            .collect();

        Ok(EigenSystem {
            grid: self.grid.clone(),
            eigenvalues,
            eigenfunctions,
            spacings,
            explained_fraction: explained,
            cumulative_fractions: cumulative,
            n: self.n,
            truncated,
        })
    }
}

fn spacings_of(all: &[f64], kept: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kept);
    for j in 0..kept {
        let upper = if j == 0 {
            f64::INFINITY
        } else {
            all[j - 1] - all[j]
        };
        let lower = if j + 1 < all.len() {
            all[j] - all[j + 1]
        } else {
            all[j]
        };
        out.push(upper.min(lower).max(0.0));
    }
    out
}

/// Leading eigenpairs of a covariance operator, with by-products used by
/// tuning rules and diagnostics.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    grid: Grid,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    spacings: Vec<f64>,
    explained_fraction: f64,
    /// Cumulative explained-variance fractions over the full spectrum.
    cumulative_fractions: Vec<f64>,
    n: usize,
    truncated: bool,
}

impl EigenSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of retained components.
    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunction(&self, j: usize) -> &[f64] {
        &self.eigenfunctions[j]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn explained_fraction(&self) -> f64 {
        self.explained_fraction
    }

    /// Cumulative explained-variance fraction after `m` components
    /// (1-based `m`, over the operator's full spectrum).
    pub fn cumulative_fraction(&self, m: usize) -> f64 {
        self.cumulative_fractions[m - 1]
    }

    pub fn full_spectrum_len(&self) -> usize {
        self.cumulative_fractions.len()
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// True when the requested component count was reduced because of a
    /// degenerate tail of the spectrum.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Restrict to the leading `m` components (`m <= self.m()`).
    pub fn truncate(&self, m: usize) -> Result<EigenSystem> {
        if m == 0 || m > self.m() {
            return Err(Error::invalid(format!(
                "cannot truncate to m={m}; system holds {}",
                self.m()
            )));
        }
        let mut out = self.clone();
        out.eigenvalues.truncate(m);
        out.eigenfunctions.truncate(m);
        out.spacings.truncate(m);
        out.explained_fraction = out.cumulative_fractions[m - 1];
        Ok(out)
    }

    /// Scores of the centered series against each eigenfunction:
    /// `score(t, j) = <Y_t - mean, v_j>`.
    pub fn project_scores(&self, series: &FunctionSeries) -> Result<ScoreSeries> {
        if series.grid() != &self.grid {
            return Err(Error::invalid(
                "series grid does not match eigensystem grid",
            ));
        }
        let n = series.len();
        let m = self.m();
        let mean = series.sample_mean();
        let w = self.grid.weights();
        let mut scores = vec![0.0; n * m];
        for (t, row) in series.rows().enumerate() {
            for j in 0..m {
                let v = &self.eigenfunctions[j];
                let mut acc = 0.0;
                for i in 0..row.len() {
                    acc += w[i] * (row[i] - mean[i]) * v[i];
                }
                scores[t * m + j] = acc;
            }
        }
        Ok(ScoreSeries { n, m, scores })
    }

    /// Truncation remainders `U_t = (Y_t - mean) - sum_j score(t,j) v_j`,
    /// centered by their own pool mean. The uncentered remainders satisfy
    /// the exact reconstruction identity with the scores.
    pub fn remainders(&self, series: &FunctionSeries) -> Result<RemainderPool> {
        let scores = self.project_scores(series)?;
        let n = series.len();
        let g = self.grid.len();
        let mean = series.sample_mean();
        let mut pool = vec![0.0; n * g];
        for (t, row) in series.rows().enumerate() {
            let out = &mut pool[t * g..(t + 1) * g];
            for i in 0..g {
                out[i] = row[i] - mean[i];
            }
            for j in 0..self.m() {
                let s = scores.get(t, j);
                let v = &self.eigenfunctions[j];
                for i in 0..g {
                    out[i] -= s * v[i];
                }
            }
        }
        // center the pool
        let mut pool_mean = vec![0.0; g];
        for t in 0..n {
            for i in 0..g {
                pool_mean[i] += pool[t * g + i];
            }
        }
        for v in &mut pool_mean {
            *v /= n as f64;
        }
        for t in 0..n {
            for i in 0..g {
                pool[t * g + i] -= pool_mean[i];
            }
        }
        Ok(RemainderPool { g, n, pool })
    }
}

/// Score matrix: `n` rows of `m` principal-component scores.
#[derive(Debug, Clone)]
pub struct ScoreSeries {
    n: usize,
    m: usize,
    scores: Vec<f64>,
}

impl ScoreSeries {
    pub fn from_raw(n: usize, m: usize, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != n * m {
            return Err(Error::invalid("score matrix size mismatch"));
        }
        Ok(ScoreSeries { n, m, scores })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.scores[t * self.m + j]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.scores[t * self.m..(t + 1) * self.m]
    }

    /// Restrict to the first `m` columns.
    pub fn take_columns(&self, m: usize) -> Result<ScoreSeries> {
        if m == 0 || m > self.m {
            return Err(Error::invalid("column restriction out of range"));
        }
        let mut scores = Vec::with_capacity(self.n * m);
        for t in 0..self.n {
            scores.extend_from_slice(&self.scores[t * self.m..t * self.m + m]);
        }
        Ok(ScoreSeries {
            n: self.n,
            m,
            scores,
        })
    }
}

/// Centered truncation-remainder curves, resampled by the bootstrap.
#[derive(Debug, Clone)]
pub struct RemainderPool {
    g: usize,
    n: usize,
    pool: Vec<f64>,
}

impl RemainderPool {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid_len(&self) -> usize {
        self.g
    }

    pub fn curve(&self, t: usize) -> &[f64] {
        &self.pool[t * self.g..(t + 1) * self.g]
    }
}
