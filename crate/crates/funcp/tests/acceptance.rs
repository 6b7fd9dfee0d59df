//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test -p funcp --test acceptance -- --nocapture` to see
//! them). Reduced-scale reproduction of the reference size/power behavior
//! plus the oracle checks that gate the study machinery.

use nalgebra::DMatrix;

use funcp::dgp::DgpVariant;
use funcp::funspace::{CovOperator, FunctionSeries, Grid};
use funcp::resample::{simulate_limit_sups, BootstrapDistribution, Method};
use funcp::rng::RngStream;
use funcp::studio::{run_power_study, run_size_study, MethodSettings, StudyConfig, StudyKind};
use funcp::varsieve::{yule_walker, AutocovSet};

fn size_config(
    c: f64,
    n: usize,
    methods: Vec<Method>,
    replications: usize,
    seed: u64,
) -> StudyConfig {
    StudyConfig {
        kind: StudyKind::Size,
        variant: DgpVariant::Far1Bridge { c },
        n,
        grid_points: 101,
        burn_in: 100,
        methods,
        replications,
        bootstrap: 500,
        alphas: vec![0.05, 0.10],
        jumps: Vec::new(),
        change_at: None,
        seed,
        workers: 0,
        settings: MethodSettings::default(),
        data_file: None,
    }
}

fn frequency(result: &funcp::studio::StudyResult, method: Method, alpha: f64, jump: f64) -> f64 {
    result
        .rows
        .iter()
        .find(|r| r.method == method && r.alpha == alpha && r.jump == jump)
        .unwrap_or_else(|| panic!("missing row {method} alpha={alpha} jump={jump}"))
        .frequency
}

#[test]
fn criterion_1_table1_size_reproduction() {
    // FAR(1) with Brownian bridges, C = 0.245, n = 100: reference values
    // 0.041 (5%) and 0.088 (10%), allowed three Monte Carlo sd at R = 500
    let cfg = size_config(0.245, 100, vec![Method::Fsb], 500, 20260501);
    let result = run_size_study(&cfg).unwrap();
    let f05 = frequency(&result, Method::Fsb, 0.05, 0.0);
    let f10 = frequency(&result, Method::Fsb, 0.10, 0.0);
    let ok = (f05 - 0.041).abs() <= 0.030 && (f10 - 0.088).abs() <= 0.040;
    println!(
        "criterion 1: {} - FSB size at n=100, C=0.245: alpha 5% -> {f05:.3} (target 0.041 +- 0.030), alpha 10% -> {f10:.3} (target 0.088 +- 0.040)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "size out of band: {f05:.3} / {f10:.3}");
}

#[test]
fn criterion_2_table2_spot_check() {
    let cfg = size_config(0.245, 200, vec![Method::Fsb], 500, 20260502);
    let result = run_size_study(&cfg).unwrap();
    let f05 = frequency(&result, Method::Fsb, 0.05, 0.0);
    let ok = (f05 - 0.051).abs() <= 0.030;
    println!(
        "criterion 2: {} - FSB size at n=200, C=0.245, alpha 5% -> {f05:.3} (target 0.051 +- 0.030)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "size out of band: {f05:.3}");
}

#[test]
fn criterion_3_comparator_ordering() {
    // At C = 0.490 the block bootstrap and the asymptotic method are
    // oversized relative to the sieve (reference sizes 0.132 / 0.131 vs 0.092 at
    // 10%). The assertion is the ordering in one seeded paired study; the
    // measured gaps are about 0.01, so the replication count is raised
    // until the paired comparison resolves them.
    let cfg = size_config(
        0.490,
        100,
        vec![Method::Fsb, Method::Nbb, Method::Asymptotic],
        2500,
        31415,
    );
    let result = run_size_study(&cfg).unwrap();
    let fsb = frequency(&result, Method::Fsb, 0.10, 0.0);
    let nbb = frequency(&result, Method::Nbb, 0.10, 0.0);
    let asym = frequency(&result, Method::Asymptotic, 0.10, 0.0);
    let ok = nbb > fsb && asym > fsb;
    println!(
        "criterion 3: {} - sizes at 10%, C=0.490: FSB {fsb:.3}, NBB {nbb:.3}, Asymptotic {asym:.3} (both comparators must exceed FSB)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "ordering violated: FSB {fsb:.3}, NBB {nbb:.3}, Asymptotic {asym:.3}"
    );
}

/// Exact binomial log-pmf sums for the two-sided 99% acceptance band.
fn binomial_band_99(n: usize, p: f64) -> (usize, usize) {
    let lfact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let pmf = |k: usize| -> f64 {
        (lfact[n] - lfact[k] - lfact[n - k] + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln())
            .exp()
    };
    let mut lo = 0usize;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += pmf(k);
        if acc > 0.005 {
            lo = k;
            break;
        }
    }
    let mut hi = n;
    let mut acc = 0.0;
    for k in (0..=n).rev() {
        acc += pmf(k);
        if acc > 0.005 {
            hi = k;
            break;
        }
    }
    (lo, hi)
}

#[test]
fn criterion_4_null_validity_iid_bridges() {
    let replications = 500;
    let cfg = size_config(0.0, 100, vec![Method::Fsb], replications, 20260504);
    let result = run_size_study(&cfg).unwrap();
    let f10 = frequency(&result, Method::Fsb, 0.10, 0.0);
    let hits = (f10 * replications as f64).round() as usize;
    let (lo, hi) = binomial_band_99(replications, 0.10);
    let ok = hits >= lo && hits <= hi;
    println!(
        "criterion 4: {} - i.i.d. bridges, FSB at 10%: {hits}/{replications} rejections, exact binomial 99% band [{lo}, {hi}]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "rejections {hits} outside [{lo}, {hi}]");
}

#[test]
fn criterion_5_power_monotone_and_size_correction() {
    let replications = 500;
    let cfg = StudyConfig {
        kind: StudyKind::Power,
        variant: DgpVariant::Far1Bridge { c: 0.49 },
        n: 200,
        grid_points: 101,
        burn_in: 100,
        methods: vec![Method::Fsb, Method::Nbb, Method::Asymptotic],
        replications,
        bootstrap: 500,
        alphas: vec![0.05, 0.10],
        jumps: vec![0.0, 0.15, 0.30],
        change_at: Some(100),
        seed: 20260505,
        workers: 0,
        settings: MethodSettings::default(),
        data_file: None,
    };
    let result = run_power_study(&cfg).unwrap();

    let mut ok = true;
    for method in [Method::Fsb, Method::Nbb, Method::Asymptotic] {
        for &alpha in &cfg.alphas {
            // size-correction identity at jump 0, exact under the
            // order-statistic convention (no exclusions in this study)
            let excluded = result
                .rows
                .iter()
                .find(|r| r.method == method && r.alpha == alpha)
                .unwrap()
                .excluded;
            assert_eq!(excluded, 0, "{method}: exclusions break the exact identity");
            let r_eff = replications - excluded;
            let expected = (alpha * (r_eff as f64 + 1.0)).floor() / r_eff as f64;
            let at_zero = frequency(&result, method, alpha, 0.0);
            if (at_zero - expected).abs() > 1e-12 {
                ok = false;
                println!(
                    "criterion 5: FAIL - {method} alpha {alpha}: corrected size {at_zero} != {expected}"
                );
            }
            // weakly increasing over the jump grid with shared seeds
            let p15 = frequency(&result, method, alpha, 0.15);
            let p30 = frequency(&result, method, alpha, 0.30);
            if !(at_zero <= p15 && p15 <= p30) {
                ok = false;
                println!(
                    "criterion 5: FAIL - {method} alpha {alpha}: power not monotone ({at_zero:.3}, {p15:.3}, {p30:.3})"
                );
            }
        }
    }
    // qualitative comparator check at jump 0.15
    let fsb = frequency(&result, Method::Fsb, 0.05, 0.15);
    let nbb = frequency(&result, Method::Nbb, 0.05, 0.15);
    if fsb < nbb - 0.1 {
        ok = false;
        println!("criterion 5: FAIL - FSB power {fsb:.3} more than 0.1 below NBB {nbb:.3}");
    }
    println!(
        "criterion 5: {} - corrected size exact at jump 0; power monotone over (0, 0.15, 0.3); FSB {fsb:.3} vs NBB {nbb:.3} at jump 0.15",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_6a_eigen_oracle() {
    let grid = Grid::equidistant(201).unwrap();
    let g = grid.len();
    let kernel = DMatrix::from_fn(g, g, |i, j| {
        let u = grid.points()[i];
        let v = grid.points()[j];
        u.min(v) - u * v
    });
    let eig = CovOperator::from_kernel(grid, kernel, 1000)
        .unwrap()
        .eigendecompose(5)
        .unwrap();
    let mut worst = 0.0f64;
    for k in 1..=5usize {
        let target = 1.0 / (k as f64 * std::f64::consts::PI).powi(2);
        worst = worst.max((eig.eigenvalues()[k - 1] - target).abs() / target);
    }
    let ok = worst <= 0.01;
    println!(
        "criterion 6a: {} - bridge-kernel eigenvalues within {:.4} relative of 1/(k pi)^2 (k <= 5, tolerance 0.01)",
        if ok { "PASS" } else { "FAIL" },
        worst
    );
    assert!(ok);
}

#[test]
fn criterion_6b_yule_walker_oracle() {
    use rand::Rng;
    use rand_distr::StandardNormal;

    // exact fixed point via the companion-form Lyapunov equation
    let mut worst = 0.0f64;
    for (case, &(m, p)) in [(2usize, 1usize), (3, 2), (4, 3)].iter().enumerate() {
        let mut r = RngStream::new(600 + case as u64).rng();
        let mut coeffs: Vec<DMatrix<f64>> = (0..p)
            .map(|_| DMatrix::from_fn(m, m, |_, _| 0.4 * r.sample::<f64, _>(StandardNormal)))
            .collect();
        let d = m * p;
        let build_companion = |coeffs: &[DMatrix<f64>]| {
            let mut f = DMatrix::<f64>::zeros(d, d);
            for (j, a) in coeffs.iter().enumerate() {
                f.view_mut((0, j * m), (m, m)).copy_from(a);
            }
            for b in 1..p {
                for i in 0..m {
                    f[(b * m + i, (b - 1) * m + i)] = 1.0;
                }
            }
            f
        };
        let rho = build_companion(&coeffs)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        let scale = 0.9 / rho;
        for (j, a) in coeffs.iter_mut().enumerate() {
            *a *= scale.powi(j as i32 + 1);
        }
        let f = build_companion(&coeffs);
        let mut kron = DMatrix::<f64>::zeros(d * d, d * d);
        for i1 in 0..d {
            for j1 in 0..d {
                for i2 in 0..d {
                    for j2 in 0..d {
                        kron[(i1 * d + i2, j1 * d + j2)] = f[(i1, j1)] * f[(i2, j2)];
                    }
                }
            }
        }
        let mut vec_q = nalgebra::DVector::<f64>::zeros(d * d);
        for i in 0..m {
            vec_q[i * d + i] = 1.0;
        }
        let vec_p = (DMatrix::<f64>::identity(d * d, d * d) - kron)
            .lu()
            .solve(&vec_q)
            .unwrap();
        let mut big_p = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                big_p[(i, j)] = vec_p[i * d + j];
            }
        }
        let mut gammas: Vec<DMatrix<f64>> = (0..p)
            .map(|h| big_p.view((0, h * m), (m, m)).into_owned())
            .collect();
        gammas[0] = (&gammas[0] + gammas[0].transpose()) * 0.5;
        let mut gamma_p = DMatrix::<f64>::zeros(m, m);
        for (j, a) in coeffs.iter().enumerate() {
            let h = p as i64 - (j + 1) as i64;
            let g = if h >= 0 {
                gammas[h as usize].clone()
            } else {
                gammas[(-h) as usize].transpose()
            };
            gamma_p += a * g;
        }
        gammas.push(gamma_p);
        let acov = AutocovSet::from_matrices(10_000, gammas).unwrap();
        let fit = yule_walker(&acov, p, None).unwrap();
        for (j, a) in coeffs.iter().enumerate() {
            worst = worst.max((fit.coefficient(j + 1) - a).norm());
        }
    }
    let fixed_point_ok = worst <= 1e-8;

    // sample-based recovery against a least-squares oracle at n = 2000
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
    let n = 2000;
    let mut r = RngStream::new(777).rng();
    let mut state = vec![0.0; 2];
    let mut rows = Vec::with_capacity(n + 200);
    for _ in 0..n + 200 {
        let eps: Vec<f64> = (0..2).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let next = vec![
            a[(0, 0)] * state[0] + a[(0, 1)] * state[1] + eps[0],
            a[(1, 0)] * state[0] + a[(1, 1)] * state[1] + eps[1],
        ];
        state = next;
        rows.push(state.clone());
    }
    let rows: Vec<Vec<f64>> = rows.split_off(200);
    let mut data = Vec::with_capacity(n * 2);
    for row in &rows {
        data.extend_from_slice(row);
    }
    for j in 0..2 {
        let mean: f64 = (0..n).map(|t| data[t * 2 + j]).sum::<f64>() / n as f64;
        for t in 0..n {
            data[t * 2 + j] -= mean;
        }
    }
    let scores = funcp::funspace::ScoreSeries::from_raw(n, 2, data).unwrap();
    let acov = funcp::varsieve::autocovariances(&scores, 1).unwrap();
    let fit = yule_walker(&acov, 1, Some(&scores)).unwrap();
    let yw_err = (fit.coefficient(1) - &a).norm();

    let mut xtx = DMatrix::<f64>::zeros(2, 2);
    let mut xty = DMatrix::<f64>::zeros(2, 2);
    for t in 1..n {
        let x = scores.row(t - 1);
        let y = scores.row(t);
        for i in 0..2 {
            for j in 0..2 {
                xtx[(i, j)] += x[i] * x[j];
                xty[(i, j)] += x[i] * y[j];
            }
        }
    }
    let ls = xtx.lu().solve(&xty).unwrap().transpose();
    let ls_gap = (fit.coefficient(1) - &ls).norm();
    let sample_ok = yw_err <= 0.1 && ls_gap <= 0.05;

    let ok = fixed_point_ok && sample_ok;
    println!(
        "criterion 6b: {} - Yule-Walker fixed point max error {worst:.2e} (tolerance 1e-8); sample recovery {yw_err:.3} from truth, {ls_gap:.3} from least squares",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_6c_cusum_oracle() {
    // hand value on the two-point case
    let grid = Grid::equidistant(5).unwrap();
    let two = FunctionSeries::from_rows(grid.clone(), &[vec![0.0; 5], vec![1.0; 5]]).unwrap();
    let hand = funcp::cusum::cusum(&two).unwrap().statistic;
    let expected = 1.0 / (2.0 * 2.0f64.sqrt());
    let hand_ok = (hand - expected).abs() <= 1e-12;

    // prefix-sum scan against naive recomputation
    let grid = Grid::equidistant(13).unwrap();
    let rng = RngStream::new(606);
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|i| funcp::dgp::brownian_bridge(&grid, &rng.child(i)))
        .collect();
    let series = FunctionSeries::from_rows(grid.clone(), &rows).unwrap();
    let fast = funcp::cusum::cusum(&series).unwrap();
    let n = series.len();
    let mut worst = 0.0f64;
    for k in 1..n {
        let mut diff = vec![0.0; grid.len()];
        for (i, row) in series.rows().enumerate() {
            let coeff = if i < k { 1.0 } else { 0.0 };
            for (d, v) in diff.iter_mut().zip(row) {
                *d += (coeff - k as f64 / n as f64) * v;
            }
        }
        let naive = grid.norm(&diff).unwrap() / (n as f64).sqrt();
        worst = worst.max((naive - fast.profile[k - 1]).abs());
    }
    let scan_ok = worst <= 1e-9;

    let ok = hand_ok && scan_ok;
    println!(
        "criterion 6c: {} - hand value {hand:.6} (expect {expected:.6}); prefix vs naive max gap {worst:.2e} (tolerance 1e-9)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_6d_limit_quantile_oracle() {
    // Kolmogorov 95% point by bisection on the series expansion
    let kolmogorov_cdf = |x: f64| {
        1.0 - 2.0
            * (1..=200)
                .map(|k| (-1.0f64).powi(k - 1) * (-2.0 * (k as f64 * x).powi(2)).exp())
                .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.5, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < 0.95 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let target = 0.5 * (lo + hi);

    let cov = DMatrix::from_element(1, 1, 1.0);
    let sups = simulate_limit_sups(&cov, 2000, 100_000, &RngStream::new(20260506));
    let dist = BootstrapDistribution {
        method: Method::Asymptotic,
        replicates: sups,
    };
    let c = dist.critical_value(0.05);
    let ok = (c - target).abs() <= 0.02;
    println!(
        "criterion 6d: {} - simulated unit-variance 95% point {c:.4} vs Kolmogorov {target:.4} (tolerance 0.02)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_7_determinism_across_workers() {
    let mut cfg = size_config(0.245, 60, vec![Method::Fsb, Method::Nbb], 24, 99);
    cfg.grid_points = 41;
    cfg.bootstrap = 200;
    cfg.settings.m = Some(3);
    cfg.settings.p = Some(1);

    let mut tables = Vec::new();
    for workers in [1, 2, 4] {
        cfg.workers = workers;
        tables.push(run_size_study(&cfg).unwrap().table_csv());
    }
    // and a repeat of the first configuration
    cfg.workers = 1;
    tables.push(run_size_study(&cfg).unwrap().table_csv());

    let ok = tables.windows(2).all(|w| w[0] == w[1]);
    println!(
        "criterion 7: {} - table.csv byte-identical across worker counts (1, 2, 4) and across runs",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "tables differ across worker counts");
}
