//! Acceptance suite. Prints one `PASS`, `FAIL` or `SKIP` line per criterion
//! and exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use uti_misalign::analysis::{
    analyze_session, detect_change_points, similarity_matrix, similarity_matrix_from_means,
    AnalysisConfig, ChangePointParams, EmitOptions, Metric, MetricKind, SimilarityMatrix,
};
use uti_misalign::cli;
use uti_misalign::ingest::{
    generate_synthetic_session, load_ultrasuite_session, ShiftBoundary, SyntheticSpec,
};
use uti_misalign::metrics::{cw_ssim, mse, ssim, CwSsimParams, MeanImage, SsimParams};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn metric_identities() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(30);
    let start = Instant::now();
    let (sp, cp) = (SsimParams::default(), CwSsimParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sizes = vec![(16, 16), (412, 63)];
    while sizes.len() < 50 {
        sizes.push((rng.random_range(16..=412), rng.random_range(16..=63)));
    }
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (k, &(w, h)) in sizes.iter().enumerate() {
        let x = random_image(w, h, 100 + k as u64);
        let m = mse(&x, &x).unwrap();
        let s = ssim(&x, &x, &sp).unwrap();
        let c = cw_ssim(&x, &x, &cp).unwrap();
        worst = worst.max((s - 1.0).abs()).max((c - 1.0).abs());
        if m != 0.0 || (s - 1.0).abs() > 1e-9 || (c - 1.0).abs() > 1e-9 {
            bad.push(format!("{w}x{h}: mse {m} ssim {s} cwssim {c}"));
        }
    }
    let t = start.elapsed();
    verdict(
        bad.is_empty() && t < BUDGET,
        format!(
            "50 images, max |index-1| {worst:.1e}, {:.1}s{}",
            t.as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!(", failures: {bad:?}") }
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    const TOL: f64 = 1e-7;
    let (sp, cp) = (SsimParams::default(), CwSsimParams::default());
    let mut worst = [0.0f64; 3];
    for k in 0..20u64 {
        let (a, b) = if k % 2 == 0 {
            (random_image(32, 32, 2 * k), random_image(32, 32, 2 * k + 1))
        } else {
            let a = textured_image(32, 32, k);
            (a.clone(), shifted(&a, 1 + k as i64 % 3, -(k as i64 % 2)))
        };
        let pairs = [
            (mse(&a, &b).unwrap(), mse_oracle(&a, &b)),
            (ssim(&a, &b, &sp).unwrap(), ssim_oracle(&a, &b, &sp)),
            (cw_ssim(&a, &b, &cp).unwrap(), cwssim_oracle(&a, &b, &cp)),
        ];
        for (w, (got, want)) in worst.iter_mut().zip(pairs) {
            *w = w.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
    }
    verdict(
        worst.iter().all(|&w| w <= TOL),
        format!(
            "max relative error mse {:.1e}, ssim {:.1e}, cwssim {:.1e} (tol {TOL:.0e})",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn analytic_ssim() -> Outcome {
    let black = MeanImage::new(32, 32, vec![0.0; 32 * 32]).unwrap();
    let white = MeanImage::new(32, 32, vec![255.0; 32 * 32]).unwrap();
    let got = ssim(&black, &white, &SsimParams::default()).unwrap();
    let want = 6.5025 / 65031.5025;
    verdict(
        (got - want).abs() <= 1e-9,
        format!("ssim {got:.6e}, expected {want:.6e}"),
    )
}

fn translation_robustness() -> Outcome {
    let (sp, cp) = (SsimParams::default(), CwSsimParams::default());
    let mut counts = Vec::new();
    for shift in [1, 2] {
        let wins = (0..20u64)
            .filter(|&seed| {
                let a = textured_image(96, 64, 500 + seed);
                let b = shifted(&a, shift, 0);
                1.0 - cw_ssim(&a, &b, &cp).unwrap() < 1.0 - ssim(&a, &b, &sp).unwrap()
            })
            .count();
        counts.push(wins);
    }
    verdict(
        counts.iter().all(|&c| c >= 19),
        format!("cwssim closer than ssim: 1px {}/20, 2px {}/20", counts[0], counts[1]),
    )
}

fn misalignment_session(seed: u64, boundary: Option<(usize, i64, i64)>) -> SyntheticSpec {
    SyntheticSpec {
        n_utterances: 20,
        frames_per_utterance: 3,
        width: 64,
        height: 48,
        shift_boundaries: boundary
            .map(|(index, dy, dx)| vec![ShiftBoundary { index, dy, dx }])
            .unwrap_or_default(),
        noise_sigma: 2.0,
        texture_seed: seed,
    }
}

fn boundaries(spec: &SyntheticSpec) -> Vec<usize> {
    let m = similarity_matrix(&generate_synthetic_session(spec).unwrap(), &Metric::Mse).unwrap();
    detect_change_points(&m, &ChangePointParams::default()).unwrap().boundaries
}

fn misalignment_detection() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(120);
    let start = Instant::now();
    let recovered = (0..100u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + t);
            let k = rng.random_range(3..=17);
            let mag = rng.random_range(2..=3);
            let sign = if rng.random_bool(0.5) { 1 } else { -1 };
            let (dy, dx) = if rng.random_bool(0.5) { (sign * mag, 0) } else { (0, sign * mag) };
            let found = boundaries(&misalignment_session(t, Some((k, dy, dx))));
            found.len() == 1 && found[0].abs_diff(k) <= 1
        })
        .count();
    let clean = (0..100u64)
        .into_par_iter()
        .filter(|&t| boundaries(&misalignment_session(20_000 + t, None)).is_empty())
        .count();
    let t = start.elapsed();
    verdict(
        recovered >= 95 && clean >= 95 && t < BUDGET,
        format!(
            "single boundary recovered {recovered}/100, shift-free sessions clean {clean}/100, {:.1}s",
            t.as_secs_f64()
        ),
    )
}

fn matrix_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();
    for trial in 0..100u64 {
        let n = rng.random_range(1..=8);
        let spec = SyntheticSpec {
            n_utterances: n,
            frames_per_utterance: rng.random_range(1..=3),
            width: rng.random_range(16..=28),
            height: rng.random_range(16..=24),
            shift_boundaries: if n > 2 {
                vec![ShiftBoundary { index: rng.random_range(1..n), dy: 2, dx: -1 }]
            } else {
                vec![]
            },
            noise_sigma: rng.random_range(0.0..4.0),
            texture_seed: trial,
        };
        let session = generate_synthetic_session(&spec).unwrap();
        let means: Vec<MeanImage> =
            session.utterances().iter().map(uti_misalign::analysis::mean_image).collect();
        let ids: Vec<String> = session.utterances().iter().map(|u| u.id().to_string()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let p_means: Vec<_> = perm.iter().map(|&i| means[i].clone()).collect();
        let p_ids: Vec<_> = perm.iter().map(|&i| ids[i].clone()).collect();
        for metric in [
            Metric::Mse,
            Metric::Ssim(SsimParams::default()),
            Metric::CwSsim(CwSsimParams::default()),
        ] {
            let m = similarity_matrix_from_means(ids.clone(), &means, &metric).unwrap();
            let pm = similarity_matrix_from_means(p_ids.clone(), &p_means, &metric).unwrap();
            if let Some(e) = invariant_violation(&m) {
                problems.push(format!("trial {trial} {:?}: {e}", metric.kind()));
            }
            let equivariant = (0..n).all(|i| {
                (0..n).all(|j| pm.get(i, j).to_bits() == m.get(perm[i], perm[j]).to_bits())
            });
            if !equivariant {
                problems.push(format!("trial {trial} {:?}: permutation", metric.kind()));
            }
        }
    }
    verdict(
        problems.is_empty(),
        format!("100 sessions x 3 metrics, violations: {problems:?}"),
    )
}

fn invariant_violation(m: &SimilarityMatrix) -> Option<String> {
    let n = m.n();
    for i in 0..n {
        if !m.get(i, i).is_nan() {
            return Some(format!("diagonal {i} not NaN"));
        }
        for j in 0..n {
            if i != j {
                if !m.get(i, j).is_finite() {
                    return Some(format!("({i},{j}) not finite"));
                }
                if m.get(i, j).to_bits() != m.get(j, i).to_bits() {
                    return Some(format!("({i},{j}) asymmetric"));
                }
            }
        }
    }
    None
}

fn dataset_reproduction() -> Outcome {
    let Some(root) = std::env::var_os("UXTD_ROOT").map(PathBuf::from) else {
        return Outcome::Skip("UXTD_ROOT not set; UltraSuite UXTD data unavailable".into());
    };
    let expected = [("14M", 178.0), ("04M", 368.0), ("03F", 351.0)];
    let config = AnalysisConfig {
        metrics: vec![MetricKind::Mse],
        emit: EmitOptions::none(),
        ..AnalysisConfig::default()
    };
    let mut means = BTreeMap::new();
    let mut notes = Vec::new();
    let mut ok = true;
    for (speaker, want) in expected {
        let dir = root.join(speaker);
        let report = match load_ultrasuite_session(&dir)
            .map_err(|e| e.to_string())
            .and_then(|s| analyze_session(&s, &config, None).map_err(|e| e.to_string()))
        {
            Ok(r) => r,
            Err(e) => return Outcome::Fail(format!("{}: {e}", dir.display())),
        };
        let mse = report.metric(MetricKind::Mse).unwrap();
        let got = mse.stats.unwrap().mean;
        let within = (got - want).abs() <= 0.2 * want;
        ok &= within;
        let cps = mse.change_points.as_ref().map(|c| c.boundaries.clone()).unwrap_or_default();
        notes.push(format!("{speaker} mean {got:.0} (reference {want:.0}) boundaries {cps:?}"));
        means.insert(speaker, got);
    }
    ok &= means["14M"] < means["04M"] && means["14M"] < means["03F"];
    verdict(ok, notes.join("; "))
}

fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    let s = misalignment_session(3, Some((6, 3, 0)));
    fs::write(&spec, serde_json::to_string(&s).unwrap()).unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let args = [
            "uti-misalign", "analyze", "--spec", spec.to_str().unwrap(), "--out",
            out.to_str().unwrap(), "--emit", "heatmaps,wedges,report,stats",
        ];
        let code = cli::run(args, &mut Vec::new(), &mut Vec::new());
        if code != 0 {
            return Outcome::Fail(format!("run {run} exited {code}"));
        }
        trees.push(tree_bytes(&out));
    }
    let pngs = trees[0].keys().filter(|p| p.extension().is_some_and(|e| e == "png")).count();
    verdict(
        trees[0] == trees[1] && trees[0].contains_key(Path::new("report.json")) && pngs >= 3,
        format!("{} files ({pngs} PNGs) identical across runs: {}", trees[0].len(), trees[0] == trees[1]),
    )
}

fn performance() -> Outcome {
    const BUDGET: Duration = Duration::from_secs(300);
    let spec = SyntheticSpec {
        n_utterances: 100,
        frames_per_utterance: 4,
        width: 412,
        height: 63,
        shift_boundaries: vec![ShiftBoundary { index: 50, dy: 2, dx: 0 }],
        noise_sigma: 2.0,
        texture_seed: 99,
    };
    let session = generate_synthetic_session(&spec).unwrap();
    let config = AnalysisConfig {
        emit: EmitOptions::none(),
        ..AnalysisConfig::default()
    };
    let start = Instant::now();
    let report = analyze_session(&session, &config, None).unwrap();
    let t = start.elapsed();
    verdict(
        t < BUDGET && report.metrics.len() == 3,
        format!(
            "100 utterances at 63x412, 3 metrics in {:.1}s on {} thread(s)",
            t.as_secs_f64(),
            rayon::current_num_threads()
        ),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 9] = [
        ("metric identities", metric_identities),
        ("oracle equivalence", oracle_equivalence),
        ("analytic ssim", analytic_ssim),
        ("translation robustness", translation_robustness),
        ("synthetic misalignment detection", misalignment_detection),
        ("matrix invariants", matrix_invariants),
        ("dataset reproduction", dataset_reproduction),
        ("determinism", determinism),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("acceptance {} {tag} {name}: {detail}", k + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
