//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, non-zero exit on any FAIL.
//!
//! Criteria 10 and 11 need a user-supplied reanalysis extract; set `NARR_CSV`
//! to its path (column names are configurable, see `NarrColumns`).

use std::process::{Command, ExitCode};
use std::time::Instant;

use ivcause::parallel;
use ivcause_core::estimators::{
    g_formula_binary, iv_just_identified, ols, ols_adj, regress, tsls, tsls_fit, AteEstimate, GFormulaLevel,
    GFormulaTable,
};
use ivcause_core::ivsearch::{evaluate_candidate, search, sweep, threshold_grid, SearchCriteria, Thresholds};
use ivcause_core::linalg::{dot, Matrix, Qr};
use ivcause_core::rng::CounterRng;
use ivcause_core::simulate::{boxplot_stats, generate, planted_instrument_fixture, DgpConfig, PLANTED_INSTRUMENT};
use ivcause_core::stats::{correlation_matrix, fisher_interval, partial_correlation};
use ivcause_core::{Dataset, Method};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 Monte Carlo boxplot claims", ac1_monte_carlo),
        ("2 correlation-matrix fidelity", ac2_correlations),
        ("3 partial-correlation closed form", ac3_partial),
        ("4 Fisher interval", ac4_fisher),
        ("5 algebraic identities", ac5_identities),
        ("6 g-formula vs adjusted regression", ac6_g_formula),
        ("7 IV consistency", ac7_consistency),
        ("8 planted-instrument search and sweep", ac8_search),
        ("9 thread-count determinism", ac9_determinism),
        ("10 reanalysis screening statistics", ac10_narr_screening),
        ("11 reanalysis estimator ordering", ac11_narr_ordering),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        match outcome {
            Outcome::Pass(d) => println!("[PASS] {name}: {d}"),
            Outcome::Skip(d) => println!("[SKIP] {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn ac1_monte_carlo() -> Outcome {
    let start = Instant::now();
    let table = parallel::monte_carlo(&DgpConfig::with_seed(7), 100, 1000, 0).unwrap();
    let stats: Vec<_> = [Method::Ols, Method::OlsAdj, Method::Iv, Method::IvAdj]
        .iter()
        .map(|&m| boxplot_stats(&table.values(m)).unwrap())
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let (o, rest) = (&stats[0], &stats[1..]);

    let a = (1.24..=1.31).contains(&o.median);
    let b = rest.iter().all(|s| (0.95..=1.05).contains(&s.median));
    let c = !o.box_contains(1.0) && rest.iter().all(|s| s.box_contains(1.0));
    let d = [0, 1, 3].iter().all(|&i| stats[2].iqr() > stats[i].iqr());
    let detail = format!(
        "medians ols {:.4} ols_adj {:.4} iv {:.4} iv_adj {:.4}; IQRs {:.3}/{:.3}/{:.3}/{:.3}; {elapsed:.2}s",
        o.median,
        stats[1].median,
        stats[2].median,
        stats[3].median,
        o.iqr(),
        stats[1].iqr(),
        stats[2].iqr(),
        stats[3].iqr()
    );
    check(a && b && c && d && elapsed < 10.0, detail)
}

fn ac2_correlations() -> Outcome {
    let d = generate(&DgpConfig::with_seed(2), 100_000).unwrap();
    let m = correlation_matrix(&d, &["z", "u", "a", "y"]).unwrap();
    let target = [
        [1.00, 0.00, 0.43, 0.29],
        [0.00, 1.00, 0.64, 0.73],
        [0.43, 0.64, 1.00, 0.87],
        [0.29, 0.73, 0.87, 1.00],
    ];
    let mut worst = 0.0f64;
    for (i, row) in target.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            worst = worst.max((m.get(i, j) - t).abs());
        }
    }
    let zu = m.get(0, 1);
    check(
        worst <= 0.03 && zu.abs() <= 0.02,
        format!("max deviation {worst:.4}, corr(z,u) = {zu:.4}"),
    )
}

fn ac3_partial() -> Outcome {
    let r = partial_correlation(0.29, 0.43, 0.87).unwrap();
    check((r + 0.189).abs() <= 5e-4, format!("{r:.6}"))
}

fn ac4_fisher() -> Outcome {
    let (lo, hi) = fisher_interval(0.703, 26026, 0.95).unwrap();
    check(
        (lo - 0.697).abs() <= 0.001 && (hi - 0.710).abs() <= 0.001,
        format!("({lo:.6}, {hi:.6})"),
    )
}

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let rng = CounterRng::new(seed);
    (0..n as u64).map(|k| rng.normal(k)).collect()
}

fn ac5_identities() -> Outcome {
    let n = 300;
    let beta = 1.3;
    let z1 = normals(51, n);
    let z2 = normals(52, n);
    let u = normals(53, n);
    let e = normals(54, n);
    let a: Vec<f64> = (0..n).map(|i| 1.2 * z1[i] - 0.4 * z2[i] + 0.9 * u[i] + e[i]).collect();
    let y: Vec<f64> = (0..n).map(|i| beta * a[i] + u[i]).collect();
    let mut failures = Vec::new();

    let iv = iv_just_identified(&z1, &a, &y).unwrap().ate;
    let t1 = tsls(&[&z1], &a, &[], &y).unwrap().ate;
    if (iv - t1).abs() > 1e-10 {
        failures.push(format!("tsls(single z) {t1} vs iv {iv}"));
    }

    let o = ols(&a, &y).unwrap().ate;
    let ts = tsls(&[&a], &a, &[], &y).unwrap().ate;
    if (o - ts).abs() > 1e-10 {
        failures.push(format!("tsls(z=a) {ts} vs ols {o}"));
    }

    let gamma = tsls_fit(&[&z1, &z2], &a, &[], &y, false).unwrap().ate();
    let labels = vec!["z1".to_string(), "z2".to_string()];
    let zm = Matrix::from_columns(&[&z1, &z2]).unwrap();
    let h = Qr::new(&zm, &labels).unwrap().hat_matrix();
    let predicted = dot(&a, &h.mul_vec(&u)) / dot(&a, &h.mul_vec(&a));
    if (gamma - beta - predicted).abs() > 1e-8 {
        failures.push(format!("decomposition {} vs {predicted}", gamma - beta));
    }

    let idem = h.matmul(&h).max_abs_diff(&h);
    if idem > 1e-8 {
        failures.push(format!("H idempotence error {idem}"));
    }

    let scale = 1e-8 * n as f64;
    let ones = vec![1.0; n];
    let fit = regress(&[&a, &u], &["a".into(), "u".into()], &y, true).unwrap();
    let ortho_ols = [&ones, &a, &u]
        .iter()
        .map(|c| dot(c, &fit.residuals).abs())
        .fold(0.0, f64::max);
    let s = tsls_fit(&[&z1, &z2], &a, &[&u], &y, true).unwrap();
    let ortho_tsls = [&ones, &s.fitted_treatment, &u]
        .iter()
        .map(|c| dot(c, &s.second_stage_residuals).abs())
        .fold(0.0, f64::max);
    if ortho_ols > scale || ortho_tsls > scale {
        failures.push(format!("orthogonality {ortho_ols:e} / {ortho_tsls:e}"));
    }

    if failures.is_empty() {
        Outcome::Pass(format!(
            "iv≡tsls, ols≡tsls(z=a), decomposition, H²=H ({idem:.1e}), orthogonality ({:.1e})",
            ortho_ols.max(ortho_tsls)
        ))
    } else {
        Outcome::Fail(failures.join("; "))
    }
}

fn ac6_g_formula() -> Outcome {
    let rng = CounterRng::new(606);
    let n = 10_000u64;
    let (mut a, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let ui = f64::from(u8::from(rng.uniform(3 * i) < 0.4));
        let ai = f64::from(u8::from(rng.uniform(3 * i + 1) < 0.3 + 0.4 * ui));
        u.push(ui);
        a.push(ai);
        y.push(ai + 2.0 * ui + rng.normal(3 * i + 2));
    }
    let g = g_formula_binary(&a, &u, &y).unwrap();
    let adj = ols_adj(&a, &[&u], &y).unwrap();
    let agree = (g - adj.ate).abs() <= 3.0 * adj.se;

    let table = GFormulaTable::new(vec![
        GFormulaLevel {
            level: 0.0,
            mean_treated: 1.0,
            mean_control: 0.0,
            probability: 0.5,
            n_treated: 1,
            n_control: 1,
        },
        GFormulaLevel {
            level: 1.0,
            mean_treated: 3.0,
            mean_control: 1.0,
            probability: 0.5,
            n_treated: 1,
            n_control: 1,
        },
    ])
    .unwrap();
    let cells = table.ate();
    check(
        agree && cells == 1.5,
        format!(
            "g = {g:.4}, ols_adj = {:.4} ± {:.4}; four-cell table = {cells}",
            adj.ate, adj.se
        ),
    )
}

fn ac7_consistency() -> Outcome {
    let cfg = DgpConfig::with_seed(70);
    let mut medians = Vec::new();
    for n in [100, 1000, 10_000] {
        let t = parallel::monte_carlo(&cfg, n, 100, 0).unwrap();
        let mut err: Vec<f64> = t.values(Method::Iv).iter().map(|v| (v - 1.0).abs()).collect();
        err.sort_by(f64::total_cmp);
        medians.push((err[49] + err[50]) / 2.0);
    }
    check(
        medians.windows(2).all(|w| w[1] < w[0]),
        format!(
            "median |iv − 1| = {:.4} / {:.4} / {:.4}",
            medians[0], medians[1], medians[2]
        ),
    )
}

fn ac8_search() -> Outcome {
    let d = planted_instrument_fixture(8, 5000).unwrap();
    let criteria =
        SearchCriteria::with_default_instruments(&d, "a", "y", vec!["u".into()], Thresholds::new(0.5, 0.4, 0.2));
    let found = search(&d, &criteria).unwrap().candidates;
    let exact = found.len() == 1 && found[0].instrument == PLANTED_INSTRUMENT && found[0].confounder == "u";

    let grid = threshold_grid(&[0.3, 0.5, 0.7], &[0.2, 0.4, 0.6], &[0.1, 0.2, 0.3]);
    let (cells, _) = sweep(&d, &criteria, &grid).unwrap();
    let monotone = cells.iter().all(|p| {
        cells
            .iter()
            .filter(|q| p.thresholds.dominates(&q.thresholds))
            .all(|q| p.count >= q.count)
    });
    let counts: Vec<usize> = cells.iter().map(|c| c.count).collect();
    check(
        exact && monotone && cells.len() == 27,
        format!(
            "{} pool, returned {:?}; sweep counts {counts:?}",
            criteria.instrument_pool.len() * criteria.confounder_pool.len(),
            found
                .iter()
                .map(|c| format!("({}, {})", c.instrument, c.confounder))
                .collect::<Vec<_>>()
        ),
    )
}

fn ac9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(threads);
        let status = Command::new(env!("CARGO_BIN_EXE_ivcause"))
            .args([
                "simulate",
                "--reps",
                "1000",
                "--n",
                "100",
                "--seed",
                "9",
                "--threads",
                threads,
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::Fail(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        files.push(std::fs::read(out.join("replicates.csv")).unwrap());
    }
    check(
        files[0] == files[1],
        format!("replicates.csv {} bytes under 1 and 8 threads", files[0].len()),
    )
}

/// Column names in the reanalysis extract; each overridable by env var.
struct NarrColumns {
    data: Dataset,
    treatment: String,
    outcome: String,
    instrument: String,
    heights: Vec<String>,
    pool: Vec<String>,
}

fn env_or(key: &str, default: &str) -> String {
    std::env::var(key).unwrap_or_else(|_| default.to_owned())
}

fn narr() -> Result<NarrColumns, Outcome> {
    let Ok(path) = std::env::var("NARR_CSV") else {
        return Err(Outcome::Skip("set NARR_CSV to a reanalysis extract to run".into()));
    };
    let data = ivcause::io::load_table_path(path.as_ref()).map_err(|e| Outcome::Fail(format!("{path}: {e}")))?;
    let list = |s: String| s.split(',').map(str::to_owned).collect::<Vec<_>>();
    let heights = list(env_or("NARR_HEIGHTS", "hgt_875,hgt_900,hgt_925"));
    let prefix = env_or("NARR_POOL_PREFIX", "hgt_");
    let pool = data
        .names()
        .iter()
        .filter(|n| n.starts_with(&prefix))
        .cloned()
        .collect();
    Ok(NarrColumns {
        treatment: env_or("NARR_TREATMENT", "a"),
        outcome: env_or("NARR_OUTCOME", "y"),
        instrument: env_or("NARR_INSTRUMENT", "uwnd_150"),
        heights,
        pool,
        data,
    })
}

fn ac10_narr_screening() -> Outcome {
    let c = match narr() {
        Ok(c) => c,
        Err(o) => return o,
    };
    let criteria = SearchCriteria::new(
        &c.treatment,
        &c.outcome,
        c.pool.clone(),
        vec![c.instrument.clone()],
        Thresholds::new(0.7, 0.4, 0.2),
    );
    let targets = [0.377, 0.334, 0.277];
    let mut ok = true;
    let mut detail = Vec::new();
    for (h, t) in c.heights.iter().zip(targets) {
        let cand = match evaluate_candidate(&c.data, &c.instrument, h, &criteria) {
            Ok(x) => x,
            Err(e) => return Outcome::Fail(e.to_string()),
        };
        ok &= cand.passed
            && (cand.rho_za.value.abs() - 0.703).abs() <= 0.01
            && (cand.rho_zu.value - t).abs() <= 0.01
            && (cand.rho_zy_given_a.value + 0.167).abs() <= 0.01;
        detail.push(format!(
            "{h}: za {:.3} zu {:.3} zy.a {:.3}",
            cand.rho_za.value, cand.rho_zu.value, cand.rho_zy_given_a.value
        ));
    }
    check(ok, detail.join("; "))
}

fn ac11_narr_ordering() -> Outcome {
    let c = match narr() {
        Ok(c) => c,
        Err(o) => return o,
    };
    let col = |n: &str| c.data.column(n);
    let run = || -> ivcause_core::Result<Outcome> {
        let (a, y, z) = (col(&c.treatment)?, col(&c.outcome)?, col(&c.instrument)?);
        let o = ols(a, y)?;
        let iv = iv_just_identified(z, a, y)?;
        let significant = |e: &AteEstimate| e.ci.0 > 0.0;
        let mut ok = significant(&o) && significant(&iv);
        let mut detail = vec![format!("ols {:.3} iv {:.3}", o.ate, iv.ate)];
        for h in &c.heights {
            let u = col(h)?;
            let oa = ols_adj(a, &[u], y)?;
            let ia = tsls(&[z], a, &[u], y)?;
            ok &= o.ate > iv.ate && iv.ate > ia.ate && ia.ate >= oa.ate && significant(&oa) && significant(&ia);
            detail.push(format!("{h}: iv_adj {:.3} ols_adj {:.3}", ia.ate, oa.ate));
        }
        let joint: Vec<&[f64]> = c.heights.iter().map(|h| col(h)).collect::<Result<_, _>>()?;
        let j = ols_adj(a, &joint, y)?;
        ok &= (j.ci.0 - 0.05).abs() <= 0.01 && (j.ci.1 - 0.06).abs() <= 0.01;
        let min_corr = {
            let m = correlation_matrix(&c.data, &c.heights)?;
            (0..c.heights.len())
                .flat_map(|i| (0..i).map(move |k| (i, k)))
                .map(|(i, k)| m.get(i, k).abs())
                .fold(1.0, f64::min)
        };
        ok &= min_corr >= 0.994;
        detail.push(format!(
            "joint CI ({:.3}, {:.3}), min pairwise corr {min_corr:.4}",
            j.ci.0, j.ci.1
        ));
        Ok(check(ok, detail.join("; ")))
    };
    run().unwrap_or_else(|e| Outcome::Fail(e.to_string()))
}
