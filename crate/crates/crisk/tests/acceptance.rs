//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;

use crisk::parallel;
use crisk_core::cge::copula_graphic;
use crisk_core::copula::{tau_from_theta, theta_from_tau, Clayton};
use crisk_core::data::{Dataset, Observation};
use crisk_core::estimators::{fgls_fit, ModelKind, ThreeStageConfig, TwoStageConfig};
use crisk_core::first_stage::{overall_survival, sub_distribution};
use crisk_core::inference::BootstrapConfig;
use crisk_core::marginals::{AftModel, Family};
use crisk_core::rng::{index, open_unit, substream};
use crisk_core::simulate::{sample_pair, DgpSpec, EstimatorSpec, McReport};

const SEED: u64 = 20240601;
const REPS: usize = 500;
const N: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn study(family_t: Family, fitted: Family, tau: f64, n: usize, est: EstimatorSpec) -> McReport {
    let spec = DgpSpec::benchmark(family_t, family_t, tau, n).expect("design");
    let est = match est {
        EstimatorSpec::ThreeStage(mut cfg) => {
            cfg.family = fitted;
            EstimatorSpec::ThreeStage(cfg)
        }
        other => other,
    };
    parallel::monte_carlo(&spec, &est, REPS, SEED).expect("study")
}

fn aft(family: Family) -> EstimatorSpec {
    EstimatorSpec::ThreeStage(ThreeStageConfig::new(family, ModelKind::Aft))
}

fn stat(rep: &McReport, name: &str) -> (f64, f64) {
    let p = rep.parameter(name).expect("parameter");
    (p.bias2, p.mse)
}

fn weibull_tau_08() -> Outcome {
    let rep = study(
        Family::Weibull,
        Family::Weibull,
        0.8,
        N,
        aft(Family::Weibull),
    );
    let (tb, tm) = stat(&rep, "tau");
    let (_, bm) = stat(&rep, "beta");
    outcome(
        tb <= 0.003 && tm <= 0.010 && bm <= 0.015,
        format!(
            "3SE Weibull tau=0.8 n={N}: bias2(tau)={tb:.4} (<=0.003) MSE(tau)={tm:.4} (<=0.010) MSE(beta)={bm:.4} (<=0.015), failed {}/{}",
            rep.failures, rep.replications
        ),
    )
}

fn weibull_tau_03() -> Outcome {
    let rep = study(
        Family::Weibull,
        Family::Weibull,
        0.3,
        N,
        aft(Family::Weibull),
    );
    let (_, tm) = stat(&rep, "tau");
    outcome(
        tm <= 0.042,
        format!("3SE Weibull tau=0.3 n={N}: MSE(tau)={tm:.4} (<=0.042)"),
    )
}

fn exponential_tau_03() -> Outcome {
    let rep = study(
        Family::Exponential,
        Family::Exponential,
        0.3,
        N,
        aft(Family::Exponential),
    );
    let (_, tm) = stat(&rep, "tau");
    outcome(
        tm <= 0.016,
        format!("3SE exponential tau=0.3 n={N}: MSE(tau)={tm:.4} (<=0.016)"),
    )
}

fn two_stage_tau_08() -> Outcome {
    let rep = study(
        Family::Weibull,
        Family::Weibull,
        0.8,
        N,
        EstimatorSpec::TwoStage(TwoStageConfig::default()),
    );
    let (_, tm) = stat(&rep, "tau");
    let (_, bm) = stat(&rep, "beta");
    outcome(
        tm <= 0.056 && bm <= 0.018,
        format!(
            "2SE Weibull tau=0.8 n={N}: MSE(tau)={tm:.4} (<=0.056) MSE(beta)={bm:.4} (<=0.018), failed {}/{}",
            rep.failures, rep.replications
        ),
    )
}

fn misspecified_bias() -> Outcome {
    let big = study(
        Family::Weibull,
        Family::Exponential,
        0.3,
        N,
        aft(Family::Exponential),
    );
    let small = study(
        Family::Weibull,
        Family::Exponential,
        0.3,
        500,
        aft(Family::Exponential),
    );
    let (b2000, _) = stat(&big, "tau");
    let (b500, _) = stat(&small, "tau");
    outcome(
        b2000 >= 0.05 && b2000 >= 0.5 * b500,
        format!("exponential fit to Weibull data tau=0.3: bias2(tau) n=2000 {b2000:.4} (>=0.05), n=500 {b500:.4} (n=2000 >= half of n=500)"),
    )
}

/// Random durations on a coarse grid (so ties occur) with random labels.
fn random_rows(seed: u64, sample: usize, n: usize) -> Vec<(f64, bool)> {
    let mut rng = substream(seed, sample as u64);
    (0..n)
        .map(|_| {
            (
                (1 + index(&mut rng, 12)) as f64 * 0.5,
                open_unit(&mut rng) < 0.6,
            )
        })
        .collect()
}

fn brute_force_km_exp_na(rows: &[(f64, bool)], t: f64) -> f64 {
    let mut times: Vec<f64> = rows
        .iter()
        .filter(|r| r.1 && r.0 <= t)
        .map(|r| r.0)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let h: f64 = times
        .iter()
        .map(|&u| {
            let d = rows.iter().filter(|r| r.1 && r.0 == u).count() as f64;
            let y = rows.iter().filter(|r| r.0 >= u).count() as f64;
            d / y
        })
        .sum();
    (-h).exp()
}

fn independence_matches_nelson_aalen() -> Outcome {
    let mut worst = 0.0f64;
    for sample in 0..50 {
        let n = 2 + sample % 29;
        let rows = random_rows(SEED ^ 0x6, sample, n);
        let pi = overall_survival(&rows).expect("pi");
        let f = sub_distribution(&rows).expect("F");
        let curve = copula_graphic(&pi, &f, &Clayton::new(0.0).unwrap()).expect("cge");
        for k in 0..30 {
            let t = k as f64 * 0.25;
            worst = worst.max((curve.evaluate(t) - brute_force_km_exp_na(&rows, t)).abs());
        }
    }
    outcome(worst <= 1e-12, format!("theta=0 curve vs brute-force exp(-Nelson-Aalen) on 50 samples, n<=30: max |diff| {worst:.2e} (<=1e-12)"))
}

fn monotone_in_theta() -> Outcome {
    let thetas = [-0.9, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let (mut violations, mut flat, mut errors) = (0usize, 0usize, 0usize);
    for sample in 0..50 {
        let mut rows = random_rows(SEED ^ 0x7, sample, 20 + sample * 3);
        // guarantee an early censoring followed by an event
        rows.push((0.25, false));
        rows.push((0.75, true));
        let pi = overall_survival(&rows).expect("pi");
        let f = sub_distribution(&rows).expect("F");
        let curves: Vec<_> = thetas
            .iter()
            .map(|&th| copula_graphic(&pi, &f, &Clayton::new(th).unwrap()))
            .collect();
        if curves.iter().any(|c| c.is_err()) {
            errors += 1;
            continue;
        }
        let curves: Vec<_> = curves.into_iter().map(Result::unwrap).collect();
        let mut strict = false;
        for k in 0..30 {
            let t = k as f64 * 0.25;
            let vals: Vec<f64> = curves.iter().map(|c| c.evaluate(t)).collect();
            for w in vals.windows(2) {
                if w[1] > w[0] + 1e-12 {
                    violations += 1;
                }
            }
            strict |= vals[vals.len() - 1] < vals[0] - 1e-12;
        }
        if !strict {
            flat += 1;
        }
    }
    outcome(
        violations == 0 && flat == 0 && errors == 0,
        format!("curve nonincreasing in theta on 50 samples: {violations} violations, {flat} samples without strict decrease, {errors} errors"),
    )
}

fn generator_identities() -> Outcome {
    let thetas = [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 8.0];
    let grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let (mut round, mut deriv, mut ratio) = (0.0f64, 0.0f64, true);
    for &th in &thetas {
        let c = Clayton::new(th).unwrap();
        for &s in &grid {
            round = round.max((c.generator(c.generator_inverse(s).unwrap()).unwrap() - s).abs());
            let h = 1e-5 * s;
            let fd = (c.generator_inverse(s + h).unwrap() - c.generator_inverse(s - h).unwrap())
                / (2.0 * h);
            let d = c.generator_inverse_deriv(s).unwrap();
            deriv = deriv.max(((fd - d) / d).abs());
        }
    }
    for (i, &t1) in thetas.iter().enumerate() {
        for &t2 in &thetas[i + 1..] {
            let (c1, c2) = (Clayton::new(t1).unwrap(), Clayton::new(t2).unwrap());
            let r: Vec<f64> = grid
                .iter()
                .map(|&s| {
                    c1.generator_inverse_deriv(s).unwrap() / c2.generator_inverse_deriv(s).unwrap()
                })
                .collect();
            ratio &= r.windows(2).all(|w| w[1] > w[0]);
            ratio &= grid
                .iter()
                .zip(&r)
                .all(|(&s, &v)| (v - s.powf(t2 - t1)).abs() <= 1e-12 * (1.0 + v));
        }
    }
    let taus: Vec<f64> = (0..2000)
        .map(|i| tau_from_theta(-0.999 + i as f64 * 0.025).unwrap())
        .collect();
    let increasing = taus.windows(2).all(|w| w[1] > w[0]);
    let inverse = (-99..=99).all(|i| {
        let tau = i as f64 / 100.0;
        (tau_from_theta(theta_from_tau(tau).unwrap()).unwrap() - tau).abs() < 1e-12
    });
    outcome(
        round <= 1e-10 && deriv <= 1e-6 && ratio && increasing && inverse,
        format!(
            "generator identities: round trip {round:.1e} (<=1e-10), derivative rel err {deriv:.1e} (<=1e-6), derivative ratio s^(t2-t1) increasing {ratio}, tau map increasing {increasing} and invertible {inverse}"
        ),
    )
}

/// Number of discordant pairs, counted as inversions by merge sort.
fn inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = inversions(&mut v[..mid]) + inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            count += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    count
}

fn sample_kendall_tau(theta: f64, n: usize, seed: u64) -> f64 {
    let c = Clayton::new(theta).unwrap();
    let mut rng = substream(seed, 0);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|_| sample_pair(&c, &mut rng).unwrap()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut v: Vec<f64> = pairs.into_iter().map(|p| p.1).collect();
    let d = inversions(&mut v) as f64;
    let total = n as f64 * (n as f64 - 1.0) / 2.0;
    1.0 - 2.0 * d / total
}

fn sampler_kendall_tau() -> Outcome {
    let thetas = [theta_from_tau(-0.8).unwrap(), 0.0, 0.857, 8.0];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, &th) in thetas.iter().enumerate() {
        let target = tau_from_theta(th).unwrap();
        let got = sample_kendall_tau(th, 100_000, SEED + i as u64);
        worst = worst.max((got - target).abs());
        parts.push(format!("{target:.3}->{got:.3}"));
    }
    outcome(
        worst <= 0.02,
        format!(
            "Kendall tau of 1e5 sampled pairs: {} max |err| {worst:.4} (<=0.02)",
            parts.join(", ")
        ),
    )
}

fn noiseless_recovery() -> Outcome {
    let mut worst = 0.0f64;
    for family in Family::ALL {
        let truth = AftModel::new(family, 1.3, vec![0.7], 1.5).unwrap();
        let mut rows = Vec::new();
        let mut s = Vec::new();
        for i in 1..40 {
            let u = i as f64 / 40.0;
            for z in [0.0, 1.0] {
                let x = truth.inverse_survival(u, &[z]).unwrap();
                rows.push(Observation::new(x, 1, vec![z]));
                s.push(truth.survival(x, &[z]));
            }
        }
        let ds = Dataset::new(rows).unwrap();
        let fit = fgls_fit(&ds, &s, family, None).unwrap().model;
        worst = worst
            .max((fit.alpha() - truth.alpha).abs())
            .max((fit.beta()[0] - truth.beta[0]).abs())
            .max((fit.sigma() - truth.sigma).abs());
    }
    outcome(
        worst <= 1e-8,
        format!("noiseless parametric recovery, all four families: max |err| {worst:.1e} (<=1e-8)"),
    )
}

fn bootstrap_checks() -> Outcome {
    let spec = DgpSpec::benchmark(Family::Weibull, Family::Weibull, 0.5, 200).unwrap();
    let ds = crisk_core::simulate::generate_dataset(&spec, SEED).unwrap();
    let mean_x = |d: &Dataset| -> crisk_core::Result<Vec<f64>> {
        Ok(vec![
            d.rows().iter().map(|r| r.x).sum::<f64>() / d.len() as f64,
        ])
    };
    let cfg = BootstrapConfig {
        replicates: 2000,
        level: 0.95,
        seed: SEED,
    };
    let a = parallel::bootstrap(&ds, mean_x, &cfg).unwrap();
    let b = parallel::bootstrap(&ds, mean_x, &cfg).unwrap();
    let seq = crisk_core::inference::bootstrap(
        ds.rows(),
        |rows| mean_x(&Dataset::new(rows.to_vec())?),
        &cfg,
    )
    .unwrap();
    let deterministic = a == b && a == seq;

    let n = ds.len() as f64;
    let mean = a.point[0];
    let sd = (ds.rows().iter().map(|r| (r.x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let analytic = sd / n.sqrt();
    let rel = (a.se[0] / analytic - 1.0).abs();

    let est = aft(Family::Weibull);
    let small = BootstrapConfig {
        replicates: 20,
        level: 0.9,
        seed: 7,
    };
    let fit_a = parallel::bootstrap(&ds, |d| est.estimate(d), &small).unwrap();
    let fit_b = parallel::bootstrap(&ds, |d| est.estimate(d), &small).unwrap();
    let deterministic = deterministic && fit_a == fit_b;

    outcome(
        deterministic && rel <= 0.15,
        format!("bootstrap: identical reruns {deterministic}, SE of mean {:.4} vs analytic {analytic:.4} (rel err {rel:.3} <= 0.15)", a.se[0]),
    )
}

fn main() -> ExitCode {
    let checks: [(u32, fn() -> Outcome); 11] = [
        (1, weibull_tau_08),
        (2, weibull_tau_03),
        (3, exponential_tau_03),
        (4, two_stage_tau_08),
        (5, misspecified_bias),
        (6, independence_matches_nelson_aalen),
        (7, monotone_in_theta),
        (8, generator_identities),
        (9, sampler_kendall_tau),
        (10, noiseless_recovery),
        (11, bootstrap_checks),
    ];
    let mut failed = Vec::new();
    for (id, check) in checks {
        let o = check();
        println!(
            "criterion {id:>2} {} {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
