//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! PASS/FAIL lines always reach the test log.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, InverseGamma};

use rtvar::forecast::{build_companion, forecast_moments};
use rtvar::harness::{
    evaluate, generate_synthetic_vintages, run_experiment, Dataset, Evaluation, ExperimentConfig, ModelSpec,
    ResultStore, SyntheticSpec, VintageFormat,
};
use rtvar::nowcast::partition_moments;
use rtvar::panel::{Panel, StandardizationInfo};
use rtvar::sampler::{draw_horseshoe, ffbs_states, run_chain, HorseshoeAux, HorseshoeState, SamplerConfig};
use rtvar::score::{joint_lpl, kendall_tau, marginal_lpl, rmse, InfoSet, JOINT};
use rtvar::vintage::{parse_fred_md, LagProfile, SeriesManifest};
use rtvar::Month;

// tolerances
const C1_INSTANCES: usize = 100;
const C1_MAX_M: usize = 5;
const C1_MC_DRAWS: usize = 100_000;
const C1_MEAN_SE: f64 = 3.0;
const C1_COV_FROB: f64 = 0.02;
const C1_SEED: u64 = 2;
const C1_RUNTIME: Duration = Duration::from_secs(60);

const C2_DRAWS: usize = 100_000;
const C2_TOL: f64 = 1e-2;
const C2_RUNTIME: Duration = Duration::from_secs(60);

const C3_DRAWS: usize = 100_000;
const C3_ALPHA: f64 = 0.01;

const C4_TOL: f64 = 0.1;
const C4_COVER: f64 = 0.8;
const C4_RUNTIME: Duration = Duration::from_secs(600);
const C4_SEED: u64 = 3;

const C5_PATHS: usize = 1_000_000;
const C5_MEAN_SE: f64 = 3.0;
const C5_COV_FROB: f64 = 0.01;

const C6_JOINT_TOL: f64 = 1e-10;

const C8_RUNTIME: Duration = Duration::from_secs(1800);
const C8_MIN_SPECS: usize = 2;
const EXPERIMENT_SEED: u64 = 20240101;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn main() {
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
        (1, "conditional imputation vs Monte-Carlo conditioning", c1_conditional),
        (2, "FFBS vs brute-force joint Gaussian", c2_ffbs),
        (3, "horseshoe conditionals, KS against inverse-Gamma laws", c3_horseshoe),
        (4, "constant-parameter VAR recovery", c4_recovery),
        (5, "forecast moments vs simulated paths", c5_forecast),
        (6, "metric oracles", c6_metrics),
        (7, "degenerate design: real time equals pseudo", c7_degenerate),
        (8, "revisions make real-time joint LPS worse", c8_directional),
        (9, "end-to-end determinism", c9_determinism),
        (10, "FRED-MD smoke run", c10_fred_md),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::new(false, format!("panicked: {msg}"))
            });
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {status} {name}: {} [{:.1}s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_spd(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(m, m, |_, _| normal(rng));
    &b * b.transpose() + DMatrix::identity(m, m) * 0.1
}

fn c1_conditional() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(C1_SEED);
    let (mut worst_z, mut worst_frob) = (0.0_f64, 0.0_f64);
    for _ in 0..C1_INSTANCES {
        let m = rng.random_range(1..=C1_MAX_M);
        let mu = DVector::from_fn(m, |_, _| normal(&mut rng));
        let sigma = random_spd(m, &mut rng);
        let mut missing: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        if missing.is_empty() {
            missing.push(rng.random_range(0..m));
        }
        let observed: Vec<usize> = (0..m).filter(|i| !missing.contains(i)).collect();
        let l = sigma.clone().cholesky().expect("spd").l();
        let truth_draw = &mu + &l * DVector::from_fn(m, |_, _| normal(&mut rng));
        let realized = DVector::from_fn(observed.len(), |r, _| truth_draw[observed[r]]);
        let cm = partition_moments(&mu, &sigma, &missing, &realized).expect("conditioning");

        // oracle: regress the missing block on the observed one across joint draws
        let draws: Vec<DVector<f64>> = (0..C1_MC_DRAWS)
            .map(|_| &mu + &l * DVector::from_fn(m, |_, _| normal(&mut rng)))
            .collect();
        let n = C1_MC_DRAWS as f64;
        let mean = draws.iter().fold(DVector::zeros(m), |acc, d| acc + d) / n;
        let cov = draws.iter().fold(DMatrix::zeros(m, m), |acc, d| {
            let c = d - &mean;
            acc + &c * c.transpose()
        }) / (n - 1.0);
        let pick = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |r, c| cov[(rows[r], cols[c])]);
        let s_mm = pick(&missing, &missing);
        let (oracle_mean, oracle_cov, leverage) = if observed.is_empty() {
            let mm = DVector::from_fn(missing.len(), |r, _| mean[missing[r]]);
            (mm, s_mm, 0.0)
        } else {
            let s_mo = pick(&missing, &observed);
            let s_oo_inv = pick(&observed, &observed).try_inverse().expect("invertible");
            let beta = &s_mo * &s_oo_inv;
            let dev = DVector::from_fn(observed.len(), |r, _| realized[r] - mean[observed[r]]);
            let mm = DVector::from_fn(missing.len(), |r, _| mean[missing[r]]) + &beta * &dev;
            let lev = (dev.transpose() * &s_oo_inv * &dev)[(0, 0)];
            (mm, &s_mm - &beta * s_mo.transpose(), lev)
        };
        for j in 0..missing.len() {
            let se = (oracle_cov[(j, j)] * (1.0 + leverage) / n).sqrt();
            worst_z = worst_z.max((cm.mean[j] - oracle_mean[j]).abs() / se);
        }
        worst_frob = worst_frob.max((&cm.cov - &oracle_cov).norm() / cm.cov.norm());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_z <= C1_MEAN_SE && worst_frob < C1_COV_FROB && elapsed < C1_RUNTIME,
        format!(
            "{C1_INSTANCES} instances, max |mean err|/se = {worst_z:.2} (<= {C1_MEAN_SE}), max rel Frobenius = {:.3}% (< {}%)",
            100.0 * worst_frob,
            100.0 * C1_COV_FROB
        ),
    )
}

fn c2_ffbs() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    let instances = 5;
    for _ in 0..instances {
        let n = 3;
        // informative enough that posterior variances stay well below one,
        // so the absolute tolerance is several Monte-Carlo standard errors
        let y = DVector::from_fn(n, |_, _| normal(&mut rng));
        let z = DMatrix::from_fn(n, 1, |_, _| 1.0 + rng.random::<f64>());
        let beta0 = DVector::from_element(1, normal(&mut rng) * 0.5);
        let sqrt_v = DVector::from_element(1, 1.0 + rng.random::<f64>());
        let log_vol = DVector::from_fn(n, |_, _| 0.25f64.ln() + normal(&mut rng) * 0.3);

        // brute force: prior cov min(s, t), observations target_t = f_t x_t + e_t
        let prior = DMatrix::from_fn(n, n, |s, t| (s.min(t) + 1) as f64);
        let f = DMatrix::from_diagonal(&DVector::from_fn(n, |t, _| sqrt_v[0] * z[(t, 0)]));
        let r_inv = DMatrix::from_diagonal(&log_vol.map(|h| (-h).exp()));
        let target = DVector::from_fn(n, |t, _| y[t] - beta0[0] * z[(t, 0)]);
        let post_cov = (prior.try_inverse().unwrap() + f.transpose() * &r_inv * &f).try_inverse().unwrap();
        let post_mean = &post_cov * f.transpose() * &r_inv * target;

        let mut sum = DVector::zeros(n);
        let mut sum_sq = DMatrix::zeros(n, n);
        for _ in 0..C2_DRAWS {
            let path = ffbs_states(&y, &z, &beta0, &sqrt_v, &log_vol, &mut rng).expect("ffbs");
            let x = DVector::from_fn(n, |t, _| path[(t + 1, 0)]);
            sum += &x;
            sum_sq += &x * x.transpose();
        }
        let k = C2_DRAWS as f64;
        let mean = sum / k;
        let cov = (sum_sq - &mean * mean.transpose() * k) / (k - 1.0);
        worst = worst
            .max((mean - post_mean).amax())
            .max((cov - post_cov).amax());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst < C2_TOL && elapsed < C2_RUNTIME,
        format!("{instances} instances x {C2_DRAWS} draws, max abs error = {worst:.4} (< {C2_TOL})"),
    )
}

/// Kolmogorov–Smirnov statistic of probability-integral-transformed values.
fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i + 1) as f64 / n - v))
        .fold(0.0, f64::max)
}

fn ig_cdf(shape: f64, rate: f64, x: f64) -> f64 {
    InverseGamma::new(shape, rate).expect("valid inverse gamma").cdf(x)
}

/// KS statistics for ψ_j, λ, ζ_j and φ; each draw is transformed with the
/// inverse-Gamma law implied by its own conditioning values.
fn horseshoe_ks(aux: HorseshoeAux, seed: u64) -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DVector::from_vec(vec![0.8, -0.05, 1.5]);
    let d = b.len();
    let hs = HorseshoeState {
        lambda: 0.4,
        psi: DVector::from_vec(vec![1.0, 0.2, 3.0]),
        zeta: DVector::from_vec(vec![0.7, 1.3, 2.0]),
        varphi: 0.9,
    };
    let power = match aux {
        HorseshoeAux::AsPrinted => 2,
        HorseshoeAux::MakalicSchmidt => 1,
    };
    let mut psi_u = vec![Vec::with_capacity(C3_DRAWS); d];
    let mut zeta_u = vec![Vec::with_capacity(C3_DRAWS); d];
    let mut lambda_u = Vec::with_capacity(C3_DRAWS);
    let mut varphi_u = Vec::with_capacity(C3_DRAWS);
    for _ in 0..C3_DRAWS {
        let out = draw_horseshoe(&b, &hs, aux, &mut rng);
        for j in 0..d {
            psi_u[j].push(ig_cdf(1.0, 1.0 / hs.zeta[j] + b[j] * b[j] / (2.0 * hs.lambda), out.psi[j]));
            zeta_u[j].push(ig_cdf(1.0, 1.0 + out.psi[j].powi(-power), out.zeta[j]));
        }
        let ss: f64 = (0..d).map(|j| b[j] * b[j] / out.psi[j]).sum();
        lambda_u.push(ig_cdf((d as f64 + 1.0) / 2.0, 1.0 / hs.varphi + 0.5 * ss, out.lambda));
        varphi_u.push(ig_cdf(1.0, 1.0 + out.lambda.powi(-power), out.varphi));
    }
    let mut stats = Vec::new();
    for (j, u) in psi_u.into_iter().enumerate() {
        stats.push((format!("psi{j}"), ks_uniform(u)));
    }
    stats.push(("lambda".into(), ks_uniform(lambda_u)));
    for (j, u) in zeta_u.into_iter().enumerate() {
        stats.push((format!("zeta{j}"), ks_uniform(u)));
    }
    stats.push(("varphi".into(), ks_uniform(varphi_u)));
    stats
}

fn c3_horseshoe() -> Outcome {
    // asymptotic KS critical value c(α) / sqrt(n)
    let c_alpha = (-(C3_ALPHA / 2.0).ln() / 2.0).sqrt();
    let critical = c_alpha / (C3_DRAWS as f64).sqrt();
    let printed = horseshoe_ks(HorseshoeAux::AsPrinted, 3);
    let derived = horseshoe_ks(HorseshoeAux::MakalicSchmidt, 4);
    let worst = |s: &[(String, f64)]| s.iter().cloned().fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let (pn, pd) = worst(&printed);
    let (dn, dd) = worst(&derived);
    Outcome::new(
        pd < critical && dd < critical,
        format!(
            "n = {C3_DRAWS}, critical D = {critical:.5}; printed laws max D = {pd:.5} ({pn}); default-mode laws max D = {dd:.5} ({dn})"
        ),
    )
}

fn c4_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(C4_SEED);
    let a1 = DMatrix::from_row_slice(3, 3, &[0.6, 0.0, 0.3, 0.0, 0.5, 0.0, -0.3, 0.0, 0.5]);
    let a2 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let c = DVector::from_vec(vec![0.5, 0.0, -0.5]);
    let chol_omega = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.3, 0.8, 0.0, -0.2, 0.2, 0.7]);
    let total = 402;
    let mut y = DMatrix::zeros(total, 3);
    let mut h = [0.0_f64; 3];
    for s in 2..total {
        let mut e = DVector::zeros(3);
        for i in 0..3 {
            h[i] = 0.9 * h[i] + 0.1 * normal(&mut rng);
            e[i] = (h[i] / 2.0).exp() * normal(&mut rng);
        }
        let row = &c + &a1 * y.row(s - 1).transpose() + &a2 * y.row(s - 2).transpose() + &chol_omega * e;
        y.row_mut(s).copy_from(&row.transpose());
    }
    let panel = Panel::from_matrix(y, Month::new(1980, 1).unwrap(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
    let cfg = SamplerConfig::default();
    let store = run_chain(&panel, &cfg, C4_SEED).expect("chain");

    let mut truth: Vec<f64> = Vec::new();
    let mut draws_of: Vec<Vec<f64>> = Vec::new();
    for i in 0..3 {
        for (l, a) in [&a1, &a2].into_iter().enumerate() {
            for j in 0..3 {
                truth.push(a[(i, j)]);
                draws_of.push(store.draws.iter().map(|d| d.a[(i, l * 3 + j)]).collect());
            }
        }
    }
    let (mut max_err, mut covered) = (0.0_f64, 0);
    for (tv, mut v) in truth.iter().zip(draws_of) {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let lo = v[(0.05 * v.len() as f64).floor() as usize];
        let hi = v[((0.95 * v.len() as f64).ceil() as usize).min(v.len() - 1)];
        max_err = max_err.max((mean - tv).abs());
        covered += usize::from(lo <= *tv && *tv <= hi);
    }
    let share = covered as f64 / truth.len() as f64;
    let elapsed = start.elapsed();
    Outcome::new(
        max_err <= C4_TOL && share >= C4_COVER && elapsed < C4_RUNTIME,
        format!(
            "{} draws, max |posterior mean - truth| = {max_err:.3} (<= {C4_TOL}), 90% CI coverage {covered}/{} (>= {:.0}%)",
            store.len(),
            truth.len(),
            100.0 * C4_COVER
        ),
    )
}

fn c5_forecast() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
    let a2 = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.2]);
    let c = DVector::from_vec(vec![0.3, -0.1]);
    let omega = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let y_t = DVector::from_vec(vec![1.0, -0.5]);
    let y_t1 = DVector::from_vec(vec![0.2, 0.4]);
    let companion = build_companion(&[a1.clone(), a2.clone()], &c).unwrap();
    let stack = DVector::from_vec(vec![y_t[0], y_t[1], y_t1[0], y_t1[1]]);
    let l = omega.clone().cholesky().unwrap().l();
    let horizons = [1, 2, 3];
    let mut sums = vec![DVector::<f64>::zeros(2); 3];
    let mut sqs = vec![DMatrix::<f64>::zeros(2, 2); 3];
    for _ in 0..C5_PATHS {
        let (mut prev, mut prev2) = (y_t.clone(), y_t1.clone());
        for hi in 0..3 {
            let e = &l * DVector::from_fn(2, |_, _| normal(&mut rng));
            let next = &c + &a1 * &prev + &a2 * &prev2 + e;
            sums[hi] += &next;
            sqs[hi] += &next * next.transpose();
            prev2 = prev;
            prev = next;
        }
    }
    let n = C5_PATHS as f64;
    let (mut worst_z, mut worst_frob) = (0.0_f64, 0.0_f64);
    for (hi, &h) in horizons.iter().enumerate() {
        let fm = forecast_moments(&companion, &omega, &stack, h).unwrap();
        let mean = &sums[hi] / n;
        let cov = (&sqs[hi] - &mean * mean.transpose() * n) / (n - 1.0);
        for j in 0..2 {
            worst_z = worst_z.max((fm.mean[j] - mean[j]).abs() / (cov[(j, j)] / n).sqrt());
        }
        worst_frob = worst_frob.max((&fm.cov - &cov).norm() / fm.cov.norm());
    }
    // AR(1) with coefficient 0.5 and unit shock variance: h = 2 variance 1 + 0.25
    let ar = build_companion(&[DMatrix::from_element(1, 1, 0.5)], &DVector::zeros(1)).unwrap();
    let ar2 = forecast_moments(&ar, &DMatrix::identity(1, 1), &DVector::from_element(1, 1.0), 2).unwrap();
    let ar_ok = (ar2.cov[(0, 0)] - 1.25).abs() < 1e-12 && (ar2.mean[0] - 0.25).abs() < 1e-12;
    Outcome::new(
        worst_z <= C5_MEAN_SE && worst_frob < C5_COV_FROB && ar_ok,
        format!(
            "{C5_PATHS} paths, h = 1..3: max |mean err|/se = {worst_z:.2}, max rel Frobenius = {:.3}% (< {}%); AR(1) h=2 var = {}",
            100.0 * worst_frob,
            100.0 * C5_COV_FROB,
            ar2.cov[(0, 0)]
        ),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn c6_metrics() -> Outcome {
    let mut tau_cases = 0;
    let mut tau_ok = true;
    for n in 2..=6 {
        let perms = permutations(n);
        for a in &perms {
            for b in &perms {
                let mut diff = 0i64;
                for i in 0..n {
                    for j in i + 1..n {
                        let s = (a[i] as i64 - a[j] as i64).signum() * (b[i] as i64 - b[j] as i64).signum();
                        diff += s;
                    }
                }
                let expected = diff as f64 / (n * (n - 1) / 2) as f64;
                let af: Vec<f64> = a.iter().map(|&v| v as f64 + 1.0).collect();
                let bf: Vec<f64> = b.iter().map(|&v| v as f64 + 1.0).collect();
                tau_ok &= kendall_tau(&af, &bf).unwrap() == Some(expected);
                tau_cases += 1;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut joint_err = 0.0_f64;
    for _ in 0..200 {
        let f = rng.random_range(1..=4);
        let realized = DVector::from_fn(f, |_, _| normal(&mut rng) * 2.0);
        let mean = DVector::from_fn(f, |_, _| normal(&mut rng));
        let var = DVector::from_fn(f, |_, _| 0.2 + rng.random::<f64>());
        let info = StandardizationInfo {
            mean: (0..f).map(|_| normal(&mut rng)).collect(),
            sd: (0..f).map(|_| 0.5 + rng.random::<f64>()).collect(),
        };
        let joint = joint_lpl(&realized, &[(mean.clone(), DMatrix::from_diagonal(&var))], &info).unwrap();
        let sum: f64 = (0..f)
            .map(|i| marginal_lpl(realized[i], &[(mean[i], var[i])], info.mean[i], info.sd[i]).unwrap())
            .sum();
        joint_err = joint_err.max((joint - sum).abs());
    }

    let mut rmse_err = 0.0_f64;
    for _ in 0..200 {
        let t = rng.random_range(1..=50);
        let fe: Vec<f64> = (0..t).map(|_| normal(&mut rng).abs()).collect();
        let r = rmse(&fe).unwrap();
        let ss: f64 = fe.iter().map(|e| e * e).sum();
        rmse_err = rmse_err.max((r * r * t as f64 - ss).abs() / ss);
    }
    Outcome::new(
        tau_ok && joint_err <= C6_JOINT_TOL && rmse_err <= 4.0 * f64::EPSILON,
        format!(
            "tau exact on {tau_cases} permutation pairs: {tau_ok}; max |joint - sum of marginals| = {joint_err:.1e}; max rel RMSE identity error = {rmse_err:.1e}"
        ),
    )
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rtvar-acceptance-{}-{name}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

struct SynthRun {
    store: ResultStore,
    eval: Evaluation,
    runtime: Duration,
}

/// Synthetic archive with lag-1 releases, then run and evaluate every
/// release but the last as a holdout month.
fn synthetic_experiment(
    root: &Path,
    revision_noise_sd: f64,
    n_vintages: usize,
    models: &[&str],
    sampler: SamplerConfig,
    horizons: Vec<usize>,
) -> SynthRun {
    let data = root.join("data");
    let spec = SyntheticSpec {
        revision_noise_sd,
        n_vintages,
        lag_profile: LagProfile::uniform(1),
        ..SyntheticSpec::default()
    };
    let releases = generate_synthetic_vintages(&spec, &data).expect("synthetic archive").releases;
    let mut cfg = ExperimentConfig::new(Dataset::Synthetic, &data, releases[0], releases[releases.len() - 2]);
    cfg.models = models.iter().map(|m| m.parse::<ModelSpec>().unwrap()).collect();
    cfg.sampler = sampler;
    cfg.horizons = horizons;
    cfg.seed = EXPERIMENT_SEED;
    cfg.save_draws = false;
    let start = Instant::now();
    let out = root.join("out");
    let summary = run_experiment(&cfg, &out, 1).expect("experiment");
    assert_eq!(summary.failed(), 0, "failed cells");
    let eval = evaluate(&summary.store).expect("evaluation");
    SynthRun {
        store: summary.store,
        eval,
        runtime: start.elapsed(),
    }
}

fn small_sampler(draws: usize, burn_in: usize) -> SamplerConfig {
    SamplerConfig {
        draws,
        burn_in,
        thin: 2,
        ..SamplerConfig::default()
    }
}

fn c7_degenerate() -> Outcome {
    let root = scratch_dir("degenerate");
    let run = synthetic_experiment(&root, 0.0, 7, &["small-cp", "small-cp-pca"], small_sampler(300, 100), vec![1, 3]);
    let eval_dir = run.store.eval_dir();
    let rt = std::fs::read(eval_dir.join("summary_realtime.csv")).unwrap();
    let ps = std::fs::read(eval_dir.join("summary_pseudo.csv")).unwrap();
    let defined: Vec<f64> = run.eval.tau.iter().filter_map(|t| t.tau).collect();
    let all_one = defined.iter().all(|&t| t == 1.0);
    let manifest = run.store.load_manifest().unwrap();
    let digests_match = manifest
        .cells
        .chunks(2)
        .all(|pair| pair[0].panel_digest == pair[1].panel_digest);
    let _ = std::fs::remove_dir_all(&root);
    Outcome::new(
        rt == ps && all_one && !defined.is_empty() && digests_match,
        format!(
            "summaries byte-identical: {}; tau = 1 at {}/{} defined points; panels identical per cell pair: {digests_match}",
            rt == ps,
            defined.iter().filter(|&&t| t == 1.0).count(),
            defined.len()
        ),
    )
}

const C8_MODELS: [&str; 3] = ["small-cp", "small-tvp", "small-cp-pca"];

fn c8_sampler() -> SamplerConfig {
    small_sampler(1500, 500)
}

fn c8_run(name: &str) -> (SynthRun, Vec<u8>) {
    let root = scratch_dir(name);
    let run = synthetic_experiment(&root, 0.5, 25, &C8_MODELS, c8_sampler(), vec![1]);
    let table = std::fs::read(run.store.eval_dir().join("summary_table.csv")).unwrap();
    (run, table)
}

static C8_TABLE: std::sync::OnceLock<Vec<u8>> = std::sync::OnceLock::new();

fn c8_directional() -> Outcome {
    let (run, table) = c8_run("directional");
    let _ = C8_TABLE.set(table);
    let mut better = 0;
    let mut parts = Vec::new();
    for model in C8_MODELS {
        let get = |mode| run.eval.summary.get(&(mode, JOINT.to_string(), model.to_string(), 1)).map(|c| c.mean_lps);
        let (Some(rt), Some(ps)) = (get(InfoSet::Realtime), get(InfoSet::Pseudo)) else {
            parts.push(format!("{model}: missing"));
            continue;
        };
        better += usize::from(ps > rt);
        parts.push(format!("{model} pseudo {ps:.3} vs real time {rt:.3}"));
    }
    let months: BTreeSet<Month> = run.eval.scores.rows.iter().map(|r| r.origin).collect();
    let _ = std::fs::remove_dir_all(run.store.root.parent().unwrap());
    Outcome::new(
        better >= C8_MIN_SPECS && months.len() == 24 && run.runtime < C8_RUNTIME,
        format!(
            "{} holdout months, h=1 average joint LPS: {}; pseudo higher for {better}/3 (>= {C8_MIN_SPECS})",
            months.len(),
            parts.join(", ")
        ),
    )
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn c9_determinism() -> Outcome {
    let first = match C8_TABLE.get() {
        Some(t) => t.clone(),
        None => c8_run("determinism-a").1,
    };
    let (run, second) = c8_run("determinism-b");
    let _ = std::fs::remove_dir_all(run.store.root.parent().unwrap());
    let (a, b) = (digest(&first), digest(&second));
    Outcome::new(a == b, format!("summary_table.csv sha256 {} vs {}", &a[..16], &b[..16]))
}

fn c10_fred_md() -> Outcome {
    let Ok(path) = std::env::var("RTVAR_FREDMD_CSV") else {
        return Outcome::new(true, "skipped (set RTVAR_FREDMD_CSV to a FRED-MD vintage CSV)");
    };
    let path = PathBuf::from(path);
    let manifest = SeriesManifest::fred_md();
    let release = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse::<Month>().ok())
        .unwrap_or_else(|| Month::new(2100, 1).unwrap());
    let vintage = match parse_fred_md(&path, &manifest, release) {
        Ok(v) => v,
        Err(e) => return Outcome::new(false, format!("cannot parse {}: {e}", path.display())),
    };
    let small = manifest.codes_up_to(rtvar::vintage::Group::Small);
    let end = small
        .iter()
        .filter_map(|c| vintage.get(c).and_then(|s| s.last_observed()))
        .min()
        .expect("small series present");
    let root = scratch_dir("fred-md");
    let data = root.join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::copy(&path, data.join(format!("{}.csv", end.plus(1)))).unwrap();
    let horizons = vec![1, 3];
    let holdout_end = end.minus(3);
    let mut cfg = ExperimentConfig::new(Dataset::Us, &data, holdout_end.minus(11), holdout_end);
    cfg.vintage_format = VintageFormat::FredMd;
    cfg.models = vec!["small-cp".parse().unwrap()];
    cfg.modes = vec![InfoSet::Pseudo];
    cfg.horizons = horizons.clone();
    cfg.sampler = small_sampler(1000, 400);
    cfg.seed = EXPERIMENT_SEED;
    cfg.save_draws = false;
    let summary = match run_experiment(&cfg, &root.join("out"), 1) {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, format!("run failed: {e}")),
    };
    let eval = match evaluate(&summary.store) {
        Ok(e) => e,
        Err(e) => return Outcome::new(false, format!("evaluation failed: {e}")),
    };
    let table = std::fs::read_to_string(summary.store.eval_dir().join("summary_table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    let expected_rows = cfg.models.len() * (small.len() + 1) * 2;
    let header_cols = table.lines().next().unwrap().split(',').count();
    let shape_ok = rows.len() == expected_rows
        && header_cols == 3 + 4 * horizons.len()
        && rows.chunks(2).all(|p| p[0].contains(",realtime,") && p[1].contains(",relative,"));
    let _ = std::fs::remove_dir_all(&root);
    Outcome::new(
        shape_ok && summary.failed() == 0,
        format!(
            "{} cells, {} score rows, summary {} rows x {header_cols} columns (expected {expected_rows} rows)",
            summary.manifest.cells.len(),
            eval.scores.rows.len(),
            rows.len()
        ),
    )
}
