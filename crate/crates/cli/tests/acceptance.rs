//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use common::{p, run, stderr};
use inpaint_eval_core::correlation::{pearson, select_peak_checkpoint, spearman, CorrelationReport};
use inpaint_eval_core::fullref::{feature_mse, ssim, SsimParams};
use inpaint_eval_core::imaging::{build_manifest, load_mask, DatasetManifest, Image, PrepParams};
use inpaint_eval_core::judgements::{
    filter_valid_sessions, fit_strengths, read_judgements, read_verification_key, BtConfig, FitReport, Side,
    SubjectiveScoreTable, WinMatrix,
};
use inpaint_eval_core::metric::{MetricScore, MetricScoreTable};
use inpaint_eval_runtime::{load_model, preprocess, stub, ModelSpec, Preprocessing};
use inpaint_eval_study::{NextPair, Study, StudyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

// Bradley-Terry

fn bt_two_item() -> Outcome {
    let start = Instant::now();
    let mut m = WinMatrix::empty("img", ["x", "y"]);
    for _ in 0..3 {
        m.record("x", "y");
    }
    m.record("y", "x");
    let cfg = BtConfig {
        pseudo_count: 0.0,
        ..Default::default()
    };
    let fit = fit_strengths(&m, &cfg).map_err(|e| e.to_string())?;
    let t = within_time(start, Duration::from_secs(1))?;
    let (px, py) = (fit.strengths[0], fit.strengths[1]);
    ensure((px - 0.75).abs() < 1e-6 && (py - 0.25).abs() < 1e-6, || {
        format!("got ({px}, {py})")
    })?;
    // Likelihood 3 ln p + ln(1 - p) on a 1e-6 grid.
    let best = (1..1_000_000)
        .map(|k| k as f64 * 1e-6)
        .max_by(|a, b| (3.0 * a.ln() + (1.0 - a).ln()).total_cmp(&(3.0 * b.ln() + (1.0 - b).ln())))
        .unwrap();
    ensure((best - px).abs() <= 1e-6, || format!("grid argmax {best} vs fit {px}"))?;
    Ok(format!("pi = ({px:.9}, {py:.9}), grid argmax {best:.6}, {t:?}"))
}

fn bt_recovery() -> Outcome {
    let truth = [0.1, 0.2, 0.3, 0.4];
    let names = ["v0", "v1", "v2", "v3"];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut m = WinMatrix::empty("img", names);
    for i in 0..4 {
        for j in i + 1..4 {
            for _ in 0..500 {
                if rng.gen::<f64>() < truth[i] / (truth[i] + truth[j]) {
                    m.record(names[i], names[j]);
                } else {
                    m.record(names[j], names[i]);
                }
            }
        }
    }
    let start = Instant::now();
    let fit = fit_strengths(&m, &BtConfig::default()).map_err(|e| e.to_string())?;
    let t = within_time(start, Duration::from_secs(5))?;
    let worst = fit
        .strengths
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.03, || {
        format!("max deviation {worst}, fitted {:?}", fit.strengths)
    })?;
    let rho = spearman(&fit.strengths, &truth).map_err(|e| e.to_string())?;
    ensure(rho == 1.0, || format!("spearman {rho}"))?;
    Ok(format!(
        "fitted {:.4?}, max deviation {worst:.4}, rho {rho}, {t:?}",
        fit.strengths
    ))
}

fn bt_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = BtConfig {
        trace_likelihood: true,
        ..Default::default()
    };
    let mut sweeps = 0;
    let mut worst_dip: f64 = 0.0;
    for case in 0..20 {
        let m_size = rng.gen_range(2..=8);
        let names: Vec<String> = (0..m_size).map(|i| format!("v{i}")).collect();
        let mut m = WinMatrix::empty("img", &names);
        for i in 0..m_size {
            for j in 0..m_size {
                if i != j {
                    m.wins[i][j] = rng.gen_range(0..15);
                }
            }
        }
        let fit = fit_strengths(&m, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        for (k, w) in fit.log_likelihoods.windows(2).enumerate() {
            // Near the fixed point successive values agree to the last bit or
            // two, so allow a few ulps of the likelihood's magnitude.
            let slack = 8.0 * f64::EPSILON * w[0].abs();
            worst_dip = worst_dip.max(w[0] - w[1]);
            ensure(w[1] >= w[0] - slack, || {
                format!("case {case} (m = {m_size}): sweep {k} went {} -> {}", w[0], w[1])
            })?;
        }
        sweeps += fit.log_likelihoods.len() - 1;
    }
    Ok(format!(
        "20 matrices, {sweeps} sweeps, largest roundoff dip {worst_dip:.1e}"
    ))
}

// SSIM

fn gaussian(side: usize, sigma: f64) -> Vec<f64> {
    let c = (side / 2) as f64;
    let g: Vec<f64> = (0..side)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Per-window weighted moments computed directly from the definition.
fn ssim_oracle(a: &Image, b: &Image) -> f64 {
    let (w, h) = (a.width(), a.height());
    let luma = |img: &Image, x: usize, y: usize| {
        let [r, g, bl] = img.pixel(x, y);
        0.299 * r as f64 + 0.587 * g as f64 + 0.114 * bl as f64
    };
    let g = gaussian(11, 1.5);
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for dy in 0..11 {
                for dx in 0..11 {
                    let wt = g[dy] * g[dx];
                    mx += wt * luma(a, x0 + dx, y0 + dy);
                    my += wt * luma(b, x0 + dx, y0 + dy);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for dy in 0..11 {
                for dx in 0..11 {
                    let wt = g[dy] * g[dx];
                    let (p, q) = (luma(a, x0 + dx, y0 + dy) - mx, luma(b, x0 + dx, y0 + dy) - my);
                    vx += wt * p * p;
                    vy += wt * q * q;
                    cov += wt * p * q;
                }
            }
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_raw(w, h, (0..w * h * 3).map(|_| rng.gen()).collect()).unwrap()
}

fn ssim_oracle_check() -> Outcome {
    let start = Instant::now();
    let params = SsimParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let a = random_image(&mut rng, 64, 64);
        // Half the pairs are correlated so values span the range.
        let b = if i % 2 == 0 {
            random_image(&mut rng, 64, 64)
        } else {
            let noise = random_image(&mut rng, 64, 64);
            let data = a
                .data()
                .iter()
                .zip(noise.data())
                .map(|(x, n)| ((*x as u16 * 3 + *n as u16) / 4) as u8)
                .collect();
            Image::from_raw(64, 64, data).unwrap()
        };
        let lib = ssim(&a, &b, &params).map_err(|e| e.to_string())?;
        let oracle = ssim_oracle(&a, &b);
        worst = worst.max((lib - oracle).abs());
        ensure((lib - oracle).abs() <= 1e-9, || {
            format!("pair {i}: library {lib} vs oracle {oracle}")
        })?;
        let same = ssim(&a, &a, &params).map_err(|e| e.to_string())?;
        ensure((same - 1.0).abs() <= 1e-12, || format!("pair {i}: ssim(x, x) = {same}"))?;
    }
    let black = Image::filled(64, 64, [0, 0, 0]).unwrap();
    let white = Image::filled(64, 64, [255, 255, 255]).unwrap();
    let bw = ssim(&black, &white, &params).map_err(|e| e.to_string())?;
    ensure((bw - 9.9990e-5).abs() <= 1e-9, || format!("black vs white {bw}"))?;
    let t = within_time(start, Duration::from_secs(10))?;
    Ok(format!(
        "max |lib - oracle| = {worst:.2e}, black vs white = {bw:.6e}, {t:?}"
    ))
}

// Correlation

fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|u| *u < v).count() as f64;
            let tied = x.iter().filter(|u| *u == v).count() as f64;
            less + (tied + 1.0) / 2.0
        })
        .collect()
}

fn correlation_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let (mut worst_r, mut worst_rho) = (0.0f64, 0.0f64);
    let mut with_ties = 0;
    for case in 0..100 {
        let n = rng.gen_range(3..40);
        // Small integer support forces ties in most vectors.
        let levels = if case % 3 == 0 { 1000 } else { 6 };
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / 2.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v * rng.gen_range(-1.0..2.0) + rng.gen_range(0..levels) as f64)
            .collect();
        if brute_pearson(&x, &x).is_nan() || brute_pearson(&y, &y).is_nan() {
            continue;
        }
        if BTreeSet::from_iter(x.iter().map(|v| v.to_bits())).len() < n {
            with_ties += 1;
        }
        let r = pearson(&x, &y).map_err(|e| format!("case {case}: {e}"))?;
        let rho = spearman(&x, &y).map_err(|e| format!("case {case}: {e}"))?;
        let (br, brho) = (brute_pearson(&x, &y), brute_pearson(&brute_ranks(&x), &brute_ranks(&y)));
        worst_r = worst_r.max((r - br).abs());
        worst_rho = worst_rho.max((rho - brho).abs());
        ensure((r - br).abs() <= 1e-12, || format!("case {case}: pearson {r} vs {br}"))?;
        ensure((rho - brho).abs() <= 1e-12, || {
            format!("case {case}: spearman {rho} vs {brho}")
        })?;
        let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + v.exp()).collect();
        let rho_t = spearman(&fx, &y).map_err(|e| e.to_string())?;
        ensure(rho_t == rho, || {
            format!("case {case}: monotone transform moved spearman {rho} -> {rho_t}")
        })?;
    }
    ensure(with_ties >= 50, || format!("only {with_ties} vectors had ties"))?;
    Ok(format!(
        "{with_ties} tied vectors; max error pearson {worst_r:.1e}, spearman {worst_rho:.1e}"
    ))
}

// Feature MSE

fn model_file(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, bytes).unwrap();
    path
}

fn feature_mse_stubs() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let side = 24;
    let identity = load_model(&ModelSpec {
        model_path: model_file(dir.path(), "id.onnx", &stub::identity(Some(side))),
        output_name: "output".into(),
        input_side: side,
        preprocessing: Preprocessing::default(),
    })
    .map_err(|e| e.to_string())?;
    let black = Image::filled(side, side, [0, 0, 0]).unwrap();
    let white = Image::filled(side, side, [255, 255, 255]).unwrap();
    let id_mse = feature_mse(&black, &white, &identity).map_err(|e| e.to_string())?;
    ensure(id_mse == 1.0, || format!("identity 0 vs 255: {id_mse}"))?;

    let spec = ModelSpec {
        model_path: model_file(dir.path(), "conv.onnx", &stub::ones_conv3x3(Some(side))),
        output_name: "conv".into(),
        input_side: side,
        preprocessing: Preprocessing {
            mean: [0.485, 0.456, 0.406],
            std: [0.229, 0.224, 0.225],
            ..Default::default()
        },
    };
    let conv = load_model(&spec).map_err(|e| e.to_string())?;
    let conv_oracle = |img: &Image| -> Vec<f64> {
        let t = preprocess(img, &spec).unwrap();
        let o = side - 2;
        let mut out = vec![0.0; o * o];
        for y in 0..o {
            for x in 0..o {
                for c in 0..3 {
                    for dy in 0..3 {
                        for dx in 0..3 {
                            out[y * o + x] += t.data[c * side * side + (y + dy) * side + x + dx] as f64;
                        }
                    }
                }
            }
        }
        out
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let a = random_image(&mut rng, side, side);
        let b = random_image(&mut rng, side, side);
        let (fa, fb) = (conv_oracle(&a), conv_oracle(&b));
        let oracle = fa.iter().zip(&fb).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / fa.len() as f64;
        let lib = feature_mse(&a, &b, &conv).map_err(|e| e.to_string())?;
        // Inference runs in f32, so the bound is relative to the value.
        let rel = (lib - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("case {case}: {lib} vs oracle {oracle}"))?;
        let zero = feature_mse(&a, &a, &conv).map_err(|e| e.to_string())?;
        ensure(zero == 0.0, || format!("case {case}: feature_mse(x, x) = {zero}"))?;
    }
    Ok(format!("identity MSE {id_mse}, conv max relative error {worst:.2e}"))
}

// Geometry

fn geometry_prep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("in");
    fs::create_dir_all(&input).unwrap();
    common::pattern(512, 512, 3).save_png(input.join("photo.png")).unwrap();
    let out = dir.path().join("data");
    let o = run(["prep", "--input", &p(&input), "--out", &p(&out)]);
    ensure(o.status.success(), || stderr(&o))?;
    let manifest = DatasetManifest::load(out.join("manifest.json")).map_err(|e| e.to_string())?;
    let mask = load_mask(&manifest.entries[0].mask_path).map_err(|e| e.to_string())?;
    let holes = mask.hole_pixel_count();
    let bounds = mask.hole_bounds();
    ensure(holes == 32_400, || format!("{holes} hole pixels"))?;
    ensure(bounds == Some((166, 166, 345, 345)), || format!("bounds {bounds:?}"))?;
    Ok(format!("{holes} hole pixels, top-left (166, 166)"))
}

// Study fixtures

const METHODS: [&str; 4] = ["ground_truth", "method_a", "method_b", "method_c"];
const WEAK: &str = "exemplar";

/// `images` 24x24 images with a distinct flat color per variant.
fn study_dataset(root: &Path, images: usize) -> DatasetManifest {
    for i in 0..images {
        let dir = root.join(format!("img{i}"));
        fs::create_dir_all(dir.join("variants")).unwrap();
        let gt = Image::filled(24, 24, [200, 20 * i as u8, 0]).unwrap();
        let (masked, mask) = inpaint_eval_core::imaging::apply_center_mask(&gt, 8).unwrap();
        gt.save_png(dir.join("gt.png")).unwrap();
        masked.save_png(dir.join("masked.png")).unwrap();
        mask.save_png(dir.join("mask.png")).unwrap();
        for (k, v) in METHODS[1..].iter().chain([&WEAK]).enumerate() {
            Image::filled(24, 24, [40 * k as u8, 20 * i as u8, 100])
                .unwrap()
                .save_png(dir.join(format!("variants/{v}.png")))
                .unwrap();
        }
    }
    build_manifest(
        root,
        PrepParams {
            target_side: 24,
            hole_side: 8,
        },
    )
    .unwrap()
}

fn verification_filtering() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = StudyConfig {
        manifest: study_dataset(&dir.path().join("data"), 3),
        variants_under_test: METHODS.iter().map(|s| s.to_string()).collect(),
        pairs_per_session: 25,
        verification_pairs_per_session: 2,
        verification_weak_variant: WEAK.into(),
    };
    let study = Study::open(cfg, dir.path().join("log.jsonl"), Some(3969)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(147);
    let mut planted = BTreeSet::new();
    for s in 0..147 {
        let id = study.create_session().map_err(|e| e.to_string())?.session_id;
        let fail_at = (s % 9 == 4).then(|| rng.gen_range(0..2));
        if fail_at.is_some() {
            planted.insert(id.clone());
        }
        let mut ver_seen = 0;
        while let NextPair::Pair(pv) = study.next_pair(&id).map_err(|e| e.to_string())? {
            let correct = study.with_state(|st| st.assignment(&pv.pair_id).unwrap().correct_side);
            let chosen = match correct {
                Some(side) => {
                    ver_seen += 1;
                    if fail_at == Some(ver_seen - 1) {
                        side.flip()
                    } else {
                        side
                    }
                }
                None => {
                    if rng.gen() {
                        Side::Left
                    } else {
                        Side::Right
                    }
                }
            };
            study
                .record_choice(&id, &pv.pair_id, chosen)
                .map_err(|e| e.to_string())?;
        }
    }
    let csv = study.with_state(|s| s.judgements_csv()).map_err(|e| e.to_string())?;
    let rows = String::from_utf8_lossy(&csv).lines().count() - 1;
    ensure(rows == 3969, || format!("{rows} exported rows"))?;

    let judgements = read_judgements(csv.as_slice()).map_err(|e| e.to_string())?;
    let key_csv = study
        .with_state(|s| s.verification_key_csv())
        .map_err(|e| e.to_string())?;
    let key = read_verification_key(key_csv.as_slice()).map_err(|e| e.to_string())?;
    let outcome = filter_valid_sessions(&judgements, &key).map_err(|e| e.to_string())?;

    // Recount straight from the rows: a session fails if any verification
    // row picked something other than ground truth.
    let mut failed = BTreeSet::new();
    let mut regular: HashMap<&str, usize> = HashMap::new();
    for j in &judgements {
        if j.is_verification {
            if j.winner() != "ground_truth" {
                failed.insert(j.session_id.clone());
            }
        } else {
            *regular.entry(&j.session_id).or_default() += 1;
        }
    }
    let surviving: usize = regular
        .iter()
        .filter(|(s, _)| !failed.contains(**s))
        .map(|(_, n)| n)
        .sum();
    ensure(failed == planted, || "recount disagrees with planted failures".into())?;
    let excluded: BTreeSet<String> = outcome.excluded_sessions.iter().cloned().collect();
    ensure(excluded == failed, || {
        format!("excluded {} sessions, recount {}", excluded.len(), failed.len())
    })?;
    ensure(outcome.valid.len() == surviving, || {
        format!("{} surviving judgements, recount {surviving}", outcome.valid.len())
    })?;
    Ok(format!(
        "3969 rows; {} planted failures excluded; {surviving} judgements survive",
        planted.len()
    ))
}

fn peak_checkpoint() -> Outcome {
    let variants = ["ground_truth", "a", "b", "c"];
    let truth: BTreeMap<String, SubjectiveScoreTable> = [("i1", [0.4, 0.3, 0.2, 0.1]), ("i2", [0.1, 0.4, 0.3, 0.2])]
        .into_iter()
        .map(|(img, v)| {
            let strengths = variants.iter().map(|s| s.to_string()).zip(v).collect();
            (
                img.to_string(),
                SubjectiveScoreTable {
                    image_id: img.into(),
                    strengths,
                    iterations: 1,
                    converged: true,
                },
            )
        })
        .collect();
    let table = |name: &str, f: &dyn Fn(f64) -> f64, flip_i2: bool| {
        let mut t = MetricScoreTable::new(name);
        for (img, s) in &truth {
            for (v, pi) in &s.strengths {
                let q = if flip_i2 && img == "i2" { -pi } else { f(*pi) };
                t.scores.push(MetricScore {
                    image_id: img.clone(),
                    variant: v.clone(),
                    raw_value: q,
                    quality_value: q,
                });
            }
        }
        t
    };
    let cases: Vec<(Vec<MetricScoreTable>, usize)> = vec![
        // Rising then falling.
        (
            vec![
                table("c0", &|x| x, true),
                table("c1", &|x| x * x, false),
                table("c2", &|x| x.sqrt(), true),
            ],
            1,
        ),
        // Perfect linear scores at 1 and 3 tie; the earlier wins.
        (
            vec![
                table("c0", &|x| -x, false),
                table("c1", &|x| 2.0 * x, false),
                table("c2", &|x| x * x, false),
                table("c3", &|x| x + 5.0, false),
            ],
            1,
        ),
        (vec![table("only", &|x| x, true)], 0),
        // Identical tables all tie.
        (
            vec![
                table("s", &|x| x, false),
                table("s", &|x| x, false),
                table("s", &|x| x, false),
            ],
            0,
        ),
    ];
    for (k, (tables, expected)) in cases.iter().enumerate() {
        let (got, report) = select_peak_checkpoint(tables, &truth, true).map_err(|e| e.to_string())?;
        ensure(got == *expected, || {
            format!("case {k}: picked {got}, expected {expected}")
        })?;
        let brute = tables
            .iter()
            .map(|t| {
                inpaint_eval_core::correlation::evaluate_metric(t, &truth, true)
                    .unwrap()
                    .mean_pearson
            })
            .collect::<Vec<_>>();
        let first_max = brute
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > brute[b] { i } else { b });
        ensure(first_max == got && report.mean_pearson == brute[got], || {
            format!("case {k}: brute force disagrees")
        })?;
    }
    Ok(format!("{} sequences, first-occurrence ties honored", cases.len()))
}

// End to end

/// Planted strengths per image, in METHODS order. One image keeps about 70
/// judgements per pair from 20 sessions.
const PLANTED: [[f64; 4]; 1] = [[0.50, 0.25, 0.15, 0.10]];

struct ServerGuard(Child);

impl Drop for ServerGuard {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(config: &Path) -> Result<(ServerGuard, String), String> {
    let mut child = Command::new(common::bin())
        .args(["serve", "--config", &p(config), "--seed", "20", "--bind", "127.0.0.1:0"])
        .env("INPAINT_EVAL_OPERATOR_TOKEN", "acceptance-token")
        .env_remove("INPAINT_EVAL_BIND")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let stdout = child.stdout.take().unwrap();
    let guard = ServerGuard(child);
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).map_err(|e| e.to_string())?;
    let base = line
        .trim()
        .strip_prefix("listening on ")
        .ok_or_else(|| format!("unexpected banner {line:?}"))?;
    Ok((guard, base.to_owned()))
}

async fn scripted_sessions(base: &str, manifest: &DatasetManifest) -> Result<(usize, usize), String> {
    let http = reqwest::Client::new();
    let e = |e: reqwest::Error| e.to_string();
    // The client tells variants apart by looking at the pixels, as a person would.
    let mut by_bytes: HashMap<Vec<u8>, (usize, String)> = HashMap::new();
    for (i, entry) in manifest.entries.iter().enumerate() {
        for v in entry.all_variants() {
            by_bytes.insert(fs::read(entry.path_for(&v).unwrap()).unwrap(), (i, v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut answered = 0;
    let mut careless = 0;
    for s in 0..20 {
        let created: serde_json::Value = http
            .post(format!("{base}/api/session"))
            .send()
            .await
            .map_err(e)?
            .json()
            .await
            .map_err(e)?;
        let id = created["session_id"].as_str().ok_or("no session id")?.to_owned();
        // Two participants ignore the verification questions.
        let inattentive = s == 6 || s == 15;
        careless += inattentive as usize;
        loop {
            let pair: serde_json::Value = http
                .get(format!("{base}/api/session/{id}/pair"))
                .send()
                .await
                .map_err(e)?
                .json()
                .await
                .map_err(e)?;
            if pair.get("done").is_some() {
                break;
            }
            let mut seen = Vec::new();
            for key in ["left_url", "right_url"] {
                let url = pair[key].as_str().ok_or("missing url")?;
                let bytes = http
                    .get(format!("{base}{url}"))
                    .send()
                    .await
                    .map_err(e)?
                    .bytes()
                    .await
                    .map_err(e)?;
                seen.push(by_bytes.get(bytes.as_ref()).cloned().ok_or("unrecognized image")?);
            }
            let (img, left) = (&seen[0].0, &seen[0].1);
            let right = &seen[1].1;
            let strength = |v: &str| {
                METHODS
                    .iter()
                    .position(|m| *m == v)
                    .map(|k| PLANTED[*img][k])
                    .unwrap_or(0.02)
            };
            let (pl, pr) = (strength(left), strength(right));
            // Attentive participants always spot the exemplar.
            let chosen = if left == WEAK || right == WEAK {
                if (left == WEAK) == inattentive {
                    "left"
                } else {
                    "right"
                }
            } else if rng.gen::<f64>() < pl / (pl + pr) {
                "left"
            } else {
                "right"
            };
            let body = serde_json::json!({"pair_id": pair["pair_id"], "chosen": chosen});
            let resp = http
                .post(format!("{base}/api/session/{id}/choice"))
                .json(&body)
                .send()
                .await
                .map_err(e)?;
            if !resp.status().is_success() {
                return Err(format!("choice rejected: {}", resp.status()));
            }
            answered += 1;
        }
    }
    Ok((answered, careless))
}

async fn fetch(base: &str, path: &str) -> Result<Vec<u8>, String> {
    let resp = reqwest::Client::new()
        .get(format!("{base}{path}"))
        .bearer_auth("acceptance-token")
        .send()
        .await
        .map_err(|e| e.to_string())?;
    if !resp.status().is_success() {
        return Err(format!("{path}: {}", resp.status()));
    }
    Ok(resp.bytes().await.map_err(|e| e.to_string())?.to_vec())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = study_dataset(&dir.path().join("data"), PLANTED.len());
    manifest
        .save(dir.path().join("data/manifest.json"))
        .map_err(|e| e.to_string())?;
    let config = dir.path().join("study.json");
    let cfg = serde_json::json!({
        "manifest": "data/manifest.json",
        "variants_under_test": METHODS,
        "pairs_per_session": 22,
        "verification_pairs_per_session": 2,
        "verification_weak_variant": WEAK,
        "log_path": "study.jsonl",
    });
    fs::write(&config, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();

    let (server, base) = start_server(&config)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let (answered, careless) = rt.block_on(scripted_sessions(&base, &manifest))?;
    ensure(answered == 20 * 24, || format!("{answered} answers"))?;
    let judgements_csv = rt.block_on(fetch(&base, "/api/export"))?;
    let key_csv = rt.block_on(fetch(&base, "/api/export/verification-key"))?;
    drop(server);

    let judgements = dir.path().join("judgements.csv");
    let key = dir.path().join("key.csv");
    fs::write(&judgements, &judgements_csv).unwrap();
    fs::write(&key, &key_csv).unwrap();

    // The offline export of the server's log matches the HTTP export.
    let (j2, k2) = (dir.path().join("j2.csv"), dir.path().join("k2.csv"));
    let o = run([
        "export",
        "--log",
        &p(&dir.path().join("study.jsonl")),
        "--out",
        &p(&j2),
        "--verification-key-out",
        &p(&k2),
    ]);
    ensure(o.status.success(), || stderr(&o))?;
    ensure(
        fs::read(&j2).unwrap() == judgements_csv && fs::read(&k2).unwrap() == key_csv,
        || "offline export differs".into(),
    )?;

    let fit = dir.path().join("fit.json");
    let o = run([
        "fit",
        "--judgements",
        &p(&judgements),
        "--verification-key",
        &p(&key),
        "--out",
        &p(&fit),
    ]);
    ensure(o.status.success(), || stderr(&o))?;
    let report: FitReport = serde_json::from_slice(&fs::read(&fit).unwrap()).unwrap();
    ensure(report.excluded_sessions.len() == careless, || {
        format!("excluded {:?}", report.excluded_sessions)
    })?;

    let mut planted = MetricScoreTable::new("planted");
    for (i, entry) in manifest.entries.iter().enumerate() {
        for (k, v) in METHODS.iter().enumerate() {
            let q = PLANTED[i][k];
            planted.scores.push(MetricScore {
                image_id: entry.image_id.clone(),
                variant: v.to_string(),
                raw_value: q,
                quality_value: q,
            });
        }
    }
    let scores = dir.path().join("planted.csv");
    planted.write_csv(fs::File::create(&scores).unwrap()).unwrap();
    let eval = dir.path().join("eval.json");
    let o = run([
        "eval",
        "--metric-scores",
        &p(&scores),
        "--subjective",
        &p(&fit),
        "--include-gt",
        "true",
        "--out",
        &p(&eval),
    ]);
    ensure(o.status.success(), || stderr(&o))?;
    let reports: Vec<CorrelationReport> = serde_json::from_slice(&fs::read(&eval).unwrap()).unwrap();
    let r = reports[0].mean_pearson;
    ensure(r > 0.95, || format!("mean Pearson {r}: {:?}", reports[0].per_image))?;
    Ok(format!(
        "20 sessions, {answered} judgements, {careless} sessions excluded, mean Pearson {r:.4} (std {:.4}), {:?}",
        reports[0].std_pearson,
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("bt-two-item-closed-form", bt_two_item),
        ("bt-recovery", bt_recovery),
        ("bt-monotone-likelihood", bt_monotone),
        ("ssim-oracle", ssim_oracle_check),
        ("correlation-oracles", correlation_oracles),
        ("feature-mse-stub-models", feature_mse_stubs),
        ("geometry-prep", geometry_prep),
        ("verification-filtering", verification_filtering),
        ("peak-checkpoint", peak_checkpoint),
        ("end-to-end-study", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
