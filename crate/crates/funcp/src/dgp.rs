//! Simulated data-generating processes for the Monte Carlo studies.
//!
//! Available processes: i.i.d. Brownian bridges, a first-order functional
//! autoregression with kernel `c(s, t) = C s t` driven by bridge or
//! squared-bridge innovations, and a first-order functional moving average
//! built from 21 random Fourier coefficients. A mean change of a given size
//! can be injected after a chosen observation.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::funspace::{FunctionSeries, Grid};
use crate::rng::RngStream;

/// Which stochastic model generates the curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DgpVariant {
    /// FAR(1) with kernel `C s t` and Brownian-bridge innovations.
    Far1Bridge { c: f64 },
    /// FAR(1) with kernel `C s t` and `eps^2 + eta^2` innovations built from
    /// two independent bridge sequences (non-Gaussian, non-centered).
    Far1SquaredBridge { c: f64 },
    /// FMA(1) on 21 random Fourier coefficients.
    Fma1,
}

impl DgpVariant {
    pub fn label(&self) -> String {
        match self {
            DgpVariant::Far1Bridge { c } => format!("far1-bridge(C={c})"),
            DgpVariant::Far1SquaredBridge { c } => format!("far1-squared-bridge(C={c})"),
            DgpVariant::Fma1 => "fma1".to_string(),
        }
    }
}

/// A mean change: add `jump` to every curve after the `k_star`-th.
#[derive(Debug, Clone)]
pub struct ChangeSpec {
    /// Last index (1-based) of the pre-change segment, in `1..n-1`.
    pub k_star: usize,
    /// Constant jump height (applied as a constant curve).
    pub jump: f64,
    /// Optional local-alternative exponent: the effective jump is
    /// `jump * n^{-r}`.
    pub rate: Option<f64>,
}

impl ChangeSpec {
    pub fn effective_jump(&self, n: usize) -> f64 {
        match self.rate {
            Some(r) => self.jump * (n as f64).powf(-r),
            None => self.jump,
        }
    }
}

/// Full description of a simulated sample.
#[derive(Debug, Clone)]
pub struct DgpSpec {
    pub variant: DgpVariant,
    pub n: usize,
    pub grid_points: usize,
    pub burn_in: usize,
    pub change: Option<ChangeSpec>,
}

impl DgpSpec {
    pub fn new(variant: DgpVariant, n: usize, grid_points: usize) -> Self {
        DgpSpec {
            variant,
            n,
            grid_points,
            burn_in: 100,
            change: None,
        }
    }

    pub fn with_change(mut self, change: ChangeSpec) -> Self {
        self.change = Some(change);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("dgp needs n >= 2"));
        }
        if self.grid_points < 3 {
            return Err(Error::invalid("dgp needs at least 3 grid points"));
        }
        if let Some(change) = &self.change {
            if change.k_star == 0 || change.k_star >= self.n {
                return Err(Error::invalid(format!(
                    "change point k*={} outside 1..{}",
                    change.k_star,
                    self.n - 1
                )));
            }
        }
        Ok(())
    }

    /// Generate one sample, applying the configured change if any.
    pub fn generate(&self, rng: &RngStream) -> Result<FunctionSeries> {
        self.validate()?;
        let grid = Grid::equidistant(self.grid_points)?;
        let series = match self.variant {
            DgpVariant::Far1Bridge { c } => far1(&grid, self.n, self.burn_in, c, false, rng),
            DgpVariant::Far1SquaredBridge { c } => far1(&grid, self.n, self.burn_in, c, true, rng),
            DgpVariant::Fma1 => fma1(&grid, self.n, rng),
        }?;
        match &self.change {
            None => Ok(series),
            Some(change) => {
                let jump = vec![change.effective_jump(self.n); series.grid_len()];
                inject_change(&series, change.k_star, &jump)
            }
        }
    }
}

/// Sample one standard Brownian-bridge path at the grid points: a Wiener
/// path from cumulative independent Gaussian increments, then
/// `B(t) = W(t) - t W(1)`.
pub fn brownian_bridge(grid: &Grid, rng: &RngStream) -> Vec<f64> {
    let mut r = rng.rng();
    bridge_with(grid, &mut r)
}

fn bridge_with<R: Rng>(grid: &Grid, rng: &mut R) -> Vec<f64> {
    let pts = grid.points();
    let g = pts.len();
    let mut w = vec![0.0; g];
    for i in 1..g {
        let sd = (pts[i] - pts[i - 1]).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        w[i] = w[i - 1] + sd * z;
    }
    let w1 = w[g - 1];
    for (i, x) in pts.iter().enumerate() {
        w[i] -= x * w1;
    }
    w
}

fn far1(
    grid: &Grid,
    n: usize,
    burn_in: usize,
    c: f64,
    squared: bool,
    rng: &RngStream,
) -> Result<FunctionSeries> {
    let g = grid.len();
    let pts = grid.points();
    let weights = grid.weights();
    let mut r = rng.rng();
    let mut state = vec![0.0; g];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for step in 0..burn_in + n {
        // kernel C s t integrates to  t * C * <id, X>
        let drive: f64 = (0..g).map(|i| weights[i] * pts[i] * state[i]).sum();
        let mut next = vec![0.0; g];
        if squared {
            let eps = bridge_with(grid, &mut r);
            let eta = bridge_with(grid, &mut r);
            for i in 0..g {
                next[i] = c * pts[i] * drive + eps[i] * eps[i] + eta[i] * eta[i];
            }
        } else {
            let eps = bridge_with(grid, &mut r);
            for i in 0..g {
                next[i] = c * pts[i] * drive + eps[i];
            }
        }
        state = next;
        if step >= burn_in {
            rows.push(state.clone());
        }
    }
    FunctionSeries::from_rows(grid.clone(), &rows)
}

/// The 21-element real Fourier system on a grid: constant, then
/// `sqrt(2) sin(2 pi k t)` and `sqrt(2) cos(2 pi k t)` for `k = 1..10`.
#[derive(Debug, Clone)]
pub struct FourierBasis21 {
    functions: Vec<Vec<f64>>,
}

pub const FMA_DIM: usize = 21;

impl FourierBasis21 {
    pub fn new(grid: &Grid) -> Self {
        let mut functions = Vec::with_capacity(FMA_DIM);
        functions.push(vec![1.0; grid.len()]);
        for k in 1..=10 {
            let freq = 2.0 * std::f64::consts::PI * k as f64;
            functions.push(
                grid.points()
                    .iter()
                    .map(|x| std::f64::consts::SQRT_2 * (freq * x).sin())
                    .collect(),
            );
            functions.push(
                grid.points()
                    .iter()
                    .map(|x| std::f64::consts::SQRT_2 * (freq * x).cos())
                    .collect(),
            );
        }
        FourierBasis21 { functions }
    }

    pub fn function(&self, i: usize) -> &[f64] {
        &self.functions[i]
    }

    /// Map a coefficient vector to a curve.
    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (c, f) in coeffs.iter().zip(&self.functions) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += c * v;
            }
        }
    }
}

/// Spectral norm of a square matrix by power iteration on `A' A`
/// (500 iterations, tolerance 1e-12).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    let d = gram.nrows();
    let mut v = nalgebra::DVector::from_element(d, (d as f64).sqrt().recip());
    let mut prev = 0.0;
    for _ in 0..500 {
        let w = &gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (norm - prev).abs() <= 1e-12 * norm.max(1.0) {
            prev = norm;
            break;
        }
        prev = norm;
    }
    prev.sqrt()
}

fn fma1(grid: &Grid, n: usize, rng: &RngStream) -> Result<FunctionSeries> {
    let basis = FourierBasis21::new(grid);
    let mut r = rng.rng();

    // fresh random coefficient matrix per generated series,
    // entries N(0, 1/(i j)), normalized to spectral norm 1
    let mut a = DMatrix::<f64>::zeros(FMA_DIM, FMA_DIM);
    for i in 0..FMA_DIM {
        for j in 0..FMA_DIM {
            let sd = 1.0 / (((i + 1) * (j + 1)) as f64).sqrt();
            let z: f64 = r.sample(StandardNormal);
            a[(i, j)] = sd * z;
        }
    }
    let norm = spectral_norm(&a);
    if norm > 0.0 {
        a /= norm;
    }

    let draw_eps = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..FMA_DIM)
            .map(|i| {
                let z: f64 = r.sample(StandardNormal);
                z / ((i + 1) as f64).sqrt()
            })
            .collect()
    };

    let mut prev = draw_eps(&mut r);
    let mut rows = Vec::with_capacity(n);
    let mut curve = vec![0.0; grid.len()];
    let mut z = vec![0.0; FMA_DIM];
    for _ in 0..n {
        let eps = draw_eps(&mut r);
        for i in 0..FMA_DIM {
            let mut acc = eps[i];
            for j in 0..FMA_DIM {
                acc += a[(i, j)] * prev[j];
            }
            z[i] = acc;
        }
        basis.synthesize(&z, &mut curve);
        rows.push(curve.clone());
        prev = eps;
    }
    FunctionSeries::from_rows(grid.clone(), &rows)
}

/// Add `jump` to every curve after the `k_star`-th (1-based).
pub fn inject_change(
    series: &FunctionSeries,
    k_star: usize,
    jump: &[f64],
) -> Result<FunctionSeries> {
    let n = series.len();
    if k_star == 0 || k_star >= n {
        return Err(Error::invalid(format!(
            "change point k*={k_star} outside 1..{}",
            n - 1
        )));
    }
    if jump.len() != series.grid_len() {
        return Err(Error::invalid("jump curve length does not match grid"));
    }
    let rows: Vec<Vec<f64>> = series
        .rows()
        .enumerate()
        .map(|(i, row)| {
            if i < k_star {
                row.to_vec()
            } else {
                row.iter().zip(jump).map(|(v, j)| v + j).collect()
            }
        })
        .collect();
    FunctionSeries::from_rows(series.grid().clone(), &rows)
}
