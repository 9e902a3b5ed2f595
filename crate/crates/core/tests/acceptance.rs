//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{max_relative_error, reference_gradient, subset_product};
use rand::Rng;
use slova::calibrate::{
    approx_random_calibration, exact_random_calibration, fit_exponential, random_slova_density,
};
use slova::experiments::{
    self as ex, CalibrationSettings, Method, SaturationConfig, ShiftConfig, StabilityConfig,
    ToyBundle, ToyConfig,
};
use slova::metrics::{self, brier, ece, friedman_dunn, nll, Alpha};
use slova::nets::{make_synthetic, Generator, Head, Loss, MlpModel};
use slova::probs::{none_prob, ova_confidence, sigmoid, slova_confidence, slova_probs};
use slova::{
    CalibrationDataset, CalibrationModel, FitConfig, LabelVector, Matrix, ProbKind, ProbMatrix,
};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

fn sigmoid_rows(
    rng: &mut slova::rng::Rng,
    n: usize,
    k_range: (usize, usize),
    scale: f64,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let k = rng.random_range(k_range.0..=k_range.1);
            (0..k)
                .map(|_| sigmoid(rng.random_range(-scale..=scale)))
                .collect()
        })
        .collect()
}

fn matrix(rows: &[Vec<f64>], kind: ProbKind) -> ProbMatrix {
    ProbMatrix::from_rows(rows, kind).unwrap()
}

/// `(p, Bernoulli(g(p)))` pairs with `p ~ U(0,1)`.
fn stream(n: usize, seed: u64, g: impl Fn(f64) -> f64) -> Vec<(f64, u8)> {
    let mut r = slova::rng::seeded(seed);
    (0..n)
        .map(|_| {
            let p: f64 = r.random();
            (p, u8::from(r.random::<f64>() < g(p)))
        })
        .collect()
}

fn fit(ds: &CalibrationDataset, m: usize, seed: u64) -> CalibrationModel {
    fit_exponential(
        ds,
        &FitConfig {
            m,
            seed,
            ..FitConfig::default()
        },
    )
    .unwrap()
}

fn bundle() -> &'static ToyBundle {
    static B: OnceLock<ToyBundle> = OnceLock::new();
    B.get_or_init(|| ex::prepare_toy(&ToyConfig::default(), 0).unwrap())
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn total_probability() -> Verdict {
    let start = Instant::now();
    let mut rng = slova::rng::seeded(1);
    let rows = sigmoid_rows(&mut rng, 1000, (2, 12), 8.0);
    let mut worst = 0.0f64;
    for row in &rows {
        let p = matrix(std::slice::from_ref(row), ProbKind::Sigmoid);
        let single = slova_probs(&p);
        let k = row.len();
        let mut total = none_prob(&p)[0];
        for mask in 1u32..(1 << k) {
            total += if mask.count_ones() == 1 {
                single.row(0)[mask.trailing_zeros() as usize]
            } else {
                subset_product(row, mask)
            };
        }
        worst = worst.max((total - 1.0).abs());
    }
    ensure(worst <= 1e-9, || format!("max |sum - 1| = {worst:e}"))?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!(
        "max |sum - 1| = {worst:.1e} over 1000 rows, {:.1?}",
        start.elapsed()
    ))
}

fn dominance() -> Verdict {
    let mut rng = slova::rng::seeded(2);
    let mut violations = 0;
    let mut n = 0;
    for k in 1..=12 {
        let rows: Vec<Vec<f64>> = (0..100_000 / 12 + 1)
            .map(|_| {
                (0..k)
                    .map(|_| sigmoid(rng.random_range(-40.0..=40.0)))
                    .collect()
            })
            .collect();
        let p = matrix(&rows, ProbKind::Sigmoid);
        let (ova, slova) = (ova_confidence(&p), slova_confidence(&p));
        violations += ova.iter().zip(&slova).filter(|(o, s)| s > o).count();
        n += rows.len();
    }
    ensure(n >= 100_000 && violations == 0, || {
        format!("{violations} violations in {n} rows")
    })?;
    Ok(format!("0 violations in {n} rows, K 1..=12"))
}

fn saturation() -> Verdict {
    let start = Instant::now();
    let b = bundle();
    let cfg = SaturationConfig {
        record_sweeps: 1000,
        ..SaturationConfig::default()
    };
    let r =
        ex::saturation_experiment(&b.ova, &b.test.features, &cfg, 0).map_err(|e| e.to_string())?;
    let s = &r.summary;
    ensure(s.n_sweeps == 1000 && r.sweeps.len() == 1000, || {
        format!("{} sweeps", s.n_sweeps)
    })?;
    ensure(*r.alphas.last().unwrap() == 1e6, || {
        "last alpha is not 1e6".into()
    })?;

    // Recompute the pattern and both confidences from the raw sigmoids.
    let (mut saturated, mut slova_ok, mut ova_ok, mut exactly_one) = (0, 0, 0, 0);
    for sw in &r.sweeps {
        let sig = sw.sigmoids.last().unwrap();
        if !sig.iter().all(|&v| v <= 1e-6 || v >= 1.0 - 1e-6) {
            continue;
        }
        saturated += 1;
        let ones = sig.iter().filter(|&&v| v >= 1.0 - 1e-6).count();
        let conf_ova = sig.iter().copied().fold(0.0, f64::max);
        let conf_slova = (0..sig.len())
            .map(|k| subset_product(sig, 1 << k))
            .fold(0.0, f64::max);
        slova_ok += usize::from((conf_slova >= 0.99) == (ones == 1));
        ova_ok += usize::from((conf_ova >= 0.99) == (ones >= 1));
        exactly_one += usize::from(ones == 1);
    }
    ensure(saturated > 0, || "no saturated direction".into())?;
    ensure(saturated == s.n_saturated, || {
        format!("{saturated} vs reported {}", s.n_saturated)
    })?;
    ensure(slova_ok == saturated && ova_ok == saturated, || {
        format!("agreement slova {slova_ok}/{saturated}, ova {ova_ok}/{saturated}")
    })?;
    ensure(
        s.slova_iff_agreement == saturated && s.ova_iff_agreement == saturated,
        || {
            format!(
                "reported agreement {} / {}",
                s.slova_iff_agreement, s.ova_iff_agreement
            )
        },
    )?;
    within_time(start, Duration::from_secs(120))?;
    let freq = exactly_one as f64 / saturated as f64;
    Ok(format!(
        "100% agreement on {saturated}/1000 saturated directions; exactly-one frequency {freq:.4} \
         (1/2^K = 0.0625, K/2^K = 0.25)"
    ))
}

fn random_calibration() -> Verdict {
    let start = Instant::now();
    let mut rng = slova::rng::seeded(4);
    let mut sup_all = 0.0f64;
    for k in [2usize, 3, 5] {
        let n = 1_000_000;
        let mut prods: Vec<f64> = (0..n)
            .map(|_| (0..k).map(|_| rng.random::<f64>()).product())
            .collect();
        prods.sort_by(f64::total_cmp);
        let sup = prods
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = exact_random_calibration(x, k);
                (f - i as f64 / n as f64)
                    .abs()
                    .max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        ensure(sup <= 0.005, || format!("K = {k}: sup-norm {sup}"))?;
        sup_all = sup_all.max(sup);

        let h = 1e-6;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let fd = (exact_random_calibration(p + h, k) - exact_random_calibration(p - h, k))
                / (2.0 * h);
            let d = random_slova_density(p, k).map_err(|e| e.to_string())?;
            ensure((fd - d).abs() <= 1e-6, || {
                format!("K = {k}, p = {p}: fd {fd} vs density {d}")
            })?;
        }
        for p in grid(101) {
            let (e, a) = (
                exact_random_calibration(p, k),
                approx_random_calibration(p, k),
            );
            ensure(e >= a, || {
                format!("K = {k}, p = {p}: exact {e} < approx {a}")
            })?;
        }
    }
    let l = std::f64::consts::LN_2;
    let e3 = exact_random_calibration(0.5, 3);
    ensure(
        (e3 - 0.5 * (1.0 + l + l * l / 2.0)).abs() < 1e-12 && (e3 - 0.9667).abs() < 5e-5,
        || format!("exact(0.5, 3) = {e3}"),
    )?;
    let a3 = approx_random_calibration(0.5, 3);
    ensure(a3 == 0.875, || format!("approx(0.5, 3) = {a3}"))?;
    within_time(start, Duration::from_secs(30))?;
    Ok(format!(
        "MC sup-norm {sup_all:.4}; exact(0.5,3) = {e3:.4}, approx = {a3}; {:.1?}",
        start.elapsed()
    ))
}

fn calibration_recovery() -> Verdict {
    let ds = CalibrationDataset::from_pairs(stream(10_000, 0, |p| p * p), 4000).unwrap();
    let sq = fit(&ds, 5, 0);
    let mae = grid(1001).map(|p| (sq.eval(p) - p * p).abs()).sum::<f64>() / 1001.0;
    ensure(mae <= 0.05, || format!("p^2 MAE {mae}"))?;

    let ds = CalibrationDataset::from_pairs(stream(10_000, 0, |p| p), 4000).unwrap();
    let id = fit(&ds, 5, 0);
    let sup_stream = grid(101)
        .map(|p| (id.eval(p) - p).abs())
        .fold(0.0, f64::max);
    ensure(sup_stream <= 0.02, || {
        format!("identity stream sup {sup_stream}")
    })?;

    let mut exact = ds.clone();
    exact.fit_points = grid(4000).map(|p| (p, p)).collect();
    let id = fit(&exact, 5, 0);
    let sup_exact = grid(101)
        .map(|p| (id.eval(p) - p).abs())
        .fold(0.0, f64::max);
    ensure(sup_exact <= 0.02, || {
        format!("identity points sup {sup_exact}")
    })?;
    Ok(format!(
        "p^2 MAE {mae:.4}; identity sup {sup_stream:.4} (stream), {sup_exact:.4} (exact points)"
    ))
}

fn calibration_structure() -> Verdict {
    let b = bundle();
    let mut models = vec![
        (
            "identity stream",
            fit(
                &CalibrationDataset::from_pairs(stream(10_000, 0, |p| p), 4000).unwrap(),
                5,
                0,
            ),
        ),
        (
            "p^2 stream",
            fit(
                &CalibrationDataset::from_pairs(stream(10_000, 0, |p| p * p), 4000).unwrap(),
                5,
                0,
            ),
        ),
        (
            "sqrt stream",
            fit(
                &CalibrationDataset::from_pairs(stream(5000, 6, f64::sqrt), 1000).unwrap(),
                20,
                6,
            ),
        ),
    ];
    let toy = ex::fit_calibration(&b.ova, &b.val, &CalibrationSettings::default(), 0)
        .map_err(|e| e.to_string())?;
    models.push(("toy network", toy));

    let mut rng = slova::rng::seeded(6);
    let rows = sigmoid_rows(&mut rng, 10_000, (2, 10), 6.0);
    let by_k: Vec<ProbMatrix> = (2..=10)
        .map(|k| {
            let r: Vec<Vec<f64>> = rows.iter().filter(|r| r.len() == k).cloned().collect();
            slova_probs(&matrix(&r, ProbKind::Sigmoid))
        })
        .collect();
    for (name, m) in &models {
        let vals: Vec<f64> = grid(1001).map(|p| m.eval(p)).collect();
        ensure(vals.windows(2).all(|w| w[0] <= w[1]), || {
            format!("{name}: not monotone")
        })?;
        ensure(
            vals[0].abs() <= 1e-9 && (vals[1000] - 1.0).abs() <= 1e-9,
            || format!("{name}: c(0) = {}, c(1) = {}", vals[0], vals[1000]),
        )?;
        for p in &by_k {
            let before = p.predictions();
            let after = m.apply(p).predictions();
            let changed = before.iter().zip(&after).filter(|(a, b)| a != b).count();
            ensure(changed == 0, || format!("{name}: {changed} argmax changes"))?;
        }
    }
    Ok(format!(
        "{} fitted models monotone on 1001 points with fixed ends; argmax kept on 10^4 rows",
        models.len()
    ))
}

fn metrics_sanity() -> Verdict {
    let mut rng = slova::rng::seeded(7);
    let n = 100_000;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c: f64 = rng.random();
        rows.push(vec![c, 0.0]);
        labels.push(usize::from(rng.random::<f64>() >= c));
    }
    let (e, _) = ece(
        &matrix(&rows, ProbKind::Sigmoid),
        &LabelVector::new(labels, 2).unwrap(),
        15,
    )
    .unwrap();
    ensure(e < 0.02, || format!("calibrated stream ECE {e}"))?;

    let lv = |v: Vec<usize>, k| LabelVector::new(v, k).unwrap();
    let sig = |r: &[Vec<f64>]| matrix(r, ProbKind::Sigmoid);
    let checks: [(&str, f64, f64); 9] = [
        (
            "ece all correct at 1",
            ece(
                &sig(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
                &lv(vec![0, 1], 2),
                15,
            )
            .unwrap()
            .0,
            0.0,
        ),
        (
            "ece 0.8/0.8 one correct",
            ece(
                &sig(&[vec![0.8, 0.1], vec![0.8, 0.1]]),
                &lv(vec![0, 1], 2),
                1,
            )
            .unwrap()
            .0,
            (0.5f64 - 0.8).abs(),
        ),
        (
            "ece all wrong at 1",
            ece(
                &sig(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
                &lv(vec![1, 0], 2),
                15,
            )
            .unwrap()
            .0,
            1.0,
        ),
        (
            "brier one-hot correct",
            brier(&sig(&[vec![0.0, 1.0]]), &lv(vec![1], 2)).unwrap(),
            0.0,
        ),
        (
            "brier (0.5, 0.5)",
            brier(&sig(&[vec![0.5, 0.5]]), &lv(vec![0], 2)).unwrap(),
            0.25 + 0.25,
        ),
        (
            "brier one-hot wrong",
            brier(&sig(&[vec![0.0, 1.0]]), &lv(vec![0], 2)).unwrap(),
            2.0,
        ),
        (
            "nll p = 1",
            nll(&sig(&[vec![1.0, 0.0]]), &lv(vec![0], 2)).unwrap(),
            0.0,
        ),
        (
            "nll p = 0.5",
            nll(&sig(&[vec![0.5, 0.5]]), &lv(vec![1], 2)).unwrap(),
            std::f64::consts::LN_2,
        ),
        (
            "nll p = 0",
            nll(&sig(&[vec![1.0, 0.0]]), &lv(vec![1], 2)).unwrap(),
            -(1e-12f64).ln(),
        ),
    ];
    for (name, got, want) in checks {
        ensure(got == want, || format!("{name}: {got} != {want}"))?;
    }
    Ok(format!("calibrated stream ECE {e:.4}; 9 micro-cases exact"))
}

fn stability() -> Verdict {
    let start = Instant::now();
    let settings = CalibrationSettings::default();
    let data = ex::StabilityData::from_bundle(bundle(), &settings, 0).map_err(|e| e.to_string())?;
    let cfg = StabilityConfig {
        m_grid: vec![12, 20, 50],
        nb_grid: vec![500, 1000, 4000],
        region_min_m: 0,
        region_min_nb: 0,
    };
    let r = ex::stability_experiment(&data, &settings, &cfg, metrics::DEFAULT_BINS, 0)
        .map_err(|e| e.to_string())?;
    let s = &r.region_spread;
    ensure(s.n_cells == 9, || format!("{} cells", s.n_cells))?;
    ensure(s.ece <= 0.02, || format!("ECE spread {}", s.ece))?;
    within_time(start, Duration::from_secs(300))?;
    Ok(format!(
        "ECE spread {:.4} over 9 cells, {:.1?}",
        s.ece,
        start.elapsed()
    ))
}

fn shift_direction() -> Verdict {
    let b = bundle();
    let post =
        ex::fit_post_hoc(b, &CalibrationSettings::default(), 0).map_err(|e| e.to_string())?;
    let r = ex::shift_experiment(
        b,
        &post,
        &ShiftConfig::default(),
        &Method::ALL,
        metrics::DEFAULT_BINS,
        0,
    )
    .map_err(|e| e.to_string())?;
    ensure(r.levels.len() == 6, || format!("{} levels", r.levels.len()))?;
    let get = |level: usize, m: Method| {
        r.levels[level]
            .methods
            .iter()
            .find(|x| x.method == m)
            .unwrap()
            .report
            .clone()
    };
    let (mmc0, mmc5) = (
        get(0, Method::SlovaCalibrated).mmc,
        get(5, Method::SlovaCalibrated).mmc,
    );
    ensure(mmc5 < mmc0, || {
        format!("calibrated MMC level 5 {mmc5} >= level 0 {mmc0}")
    })?;
    for m in Method::ALL {
        let acc: Vec<f64> = (0..6).map(|l| get(l, m).accuracy).collect();
        ensure(acc.windows(2).all(|w| w[1] <= w[0]), || {
            format!("{}: accuracy {acc:?}", m.name())
        })?;
    }
    Ok(format!(
        "calibrated MMC {mmc0:.4} -> {mmc5:.4}; accuracy non-increasing for 5 methods"
    ))
}

fn gradients() -> Verdict {
    let data = make_synthetic(Generator::GaussianBlobs, 4, 8, 3, 1.0, 10).unwrap();
    let x: Vec<Vec<f64>> = data.features.iter_rows().map(<[f64]>::to_vec).collect();
    let y = data.labels.as_slice();
    let mut worst = 0.0f64;
    for (head, loss) in [
        (Head::OvaSigmoid, Loss::Ova),
        (Head::Softmax, Loss::SoftmaxCe),
    ] {
        for seed in 0..5 {
            let mut m = MlpModel::new(&[3, 10, 7, 4], head, seed).unwrap();
            let mut p = m.params();
            p.iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v += 0.02 * ((i % 5) as f64 - 2.0));
            m.set_params(&p).unwrap();
            let (_, g) = m.loss_and_grad(&data.features, y, loss).unwrap();
            let num = reference_gradient(m.layer_dims(), &p, &x, y, loss, 1e-5);
            let err = max_relative_error(&g, &num, 1e-6);
            ensure(err <= 1e-4, || {
                format!("{loss:?} seed {seed}: relative error {err:e}")
            })?;
            worst = worst.max(err);
        }
    }
    Ok(format!(
        "max relative error {worst:.1e} over both losses, 10 networks"
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_slova"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn determinism() -> Verdict {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::TempDir::new().unwrap()).collect();
    let mut commands: Vec<Vec<&str>> = vec![
        vec!["transform", "logits.csv"],
        vec!["transform", "logits.csv", "--head", "softmax"],
        vec!["calibrate", "probs.csv", "labels.csv", "--M", "5"],
        vec!["evaluate", "probs.csv", "labels.csv"],
        vec!["train-toy"],
    ];
    for name in [
        "saturation",
        "plane",
        "shift",
        "ood",
        "ablation",
        "stability",
    ] {
        commands.push(vec!["experiment", name]);
    }
    for dir in &runs {
        let d = dir.path();
        fs::write(
            d.join("logits.csv"),
            "a,b,c\n1.5,-2,0.25\n30,-30,0\n-1,-1,-1\n",
        )
        .unwrap();
        let mut probs = String::from("a,b,c\n");
        let mut labels = String::from("label\n");
        let mut rng = slova::rng::seeded(11);
        for _ in 0..3000 {
            let p: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 0.3).collect();
            probs.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
            labels.push_str(&format!("{}\n", rng.random_range(0..3)));
        }
        fs::write(d.join("probs.csv"), probs).unwrap();
        fs::write(d.join("labels.csv"), labels).unwrap();
        for (i, cmd) in commands.iter().enumerate() {
            let out_dir = format!("out{i}");
            let mut args = vec!["-q", "--seed", "5", "--out-dir", out_dir.as_str()];
            args.extend(cmd);
            run_cli(d, &args)?;
        }
    }
    let mut n_files = 0;
    for (i, cmd) in commands.iter().enumerate() {
        let sub = format!("out{i}");
        let mut names: Vec<_> = fs::read_dir(runs[0].path().join(&sub))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        ensure(!names.is_empty(), || format!("{:?} wrote nothing", cmd))?;
        // `transform` writes only its CSV; every other command writes a report.
        let has_report = names
            .iter()
            .any(|n| n.to_string_lossy().ends_with("report.json"));
        ensure(has_report || cmd[0] == "transform", || {
            format!("{:?} wrote no report", cmd)
        })?;
        for name in names {
            let a = fs::read(runs[0].path().join(&sub).join(&name)).unwrap();
            let b = fs::read(runs[1].path().join(&sub).join(&name)).map_err(|e| e.to_string())?;
            ensure(a == b, || {
                format!("{:?}: {} differs", cmd, name.to_string_lossy())
            })?;
            n_files += 1;
        }
    }
    Ok(format!(
        "{} commands, {n_files} output files byte-identical across runs",
        commands.len()
    ))
}

fn friedman() -> Verdict {
    let names = vec!["A".to_string(), "B".to_string()];
    let scores = Matrix::from_rows(&[
        vec![0.1, 0.2],
        vec![0.3, 0.5],
        vec![0.2, 0.9],
        vec![0.0, 0.4],
    ])
    .unwrap();
    for (alpha, q) in [(Alpha::P05, 1.960), (Alpha::P10, 1.645)] {
        let t = friedman_dunn(&names, &scores, true, alpha, Some(0)).map_err(|e| e.to_string())?;
        ensure(t.ranks.iter().all(|r| r == &[1.0, 2.0]), || {
            format!("ranks {:?}", t.ranks)
        })?;
        ensure(t.mean_ranks == [1.0, 2.0], || {
            format!("mean ranks {:?}", t.mean_ranks)
        })?;
        let chi2 = 12.0 * 4.0 / (2.0 * 3.0) * (1.0 + 4.0 - 2.0 * 9.0 / 4.0);
        ensure(t.chi2 == chi2, || format!("chi2 {} != {chi2}", t.chi2))?;
        let cd = q * (6.0f64 / 24.0).sqrt();
        ensure(t.critical_distance == cd && cd == q / 2.0, || {
            format!("CD {} != {cd}", t.critical_distance)
        })?;
        ensure(t.differs_from_control == [false, true], || {
            format!("differs {:?}", t.differs_from_control)
        })?;
    }
    Ok("ranks (1, 2), chi2 = 4, CD = 0.980 (0.05) and 0.8225 (0.10)".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("total probability", total_probability),
        ("dominance", dominance),
        ("saturation iff", saturation),
        ("random-model calibration curve", random_calibration),
        ("calibration recovery", calibration_recovery),
        ("calibration structure", calibration_structure),
        ("metrics sanity", metrics_sanity),
        ("calibration stability", stability),
        ("shift direction", shift_direction),
        ("gradient correctness", gradients),
        ("determinism", determinism),
        ("Friedman/Dunn micro-case", friedman),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
