//! End-to-end acceptance checks. Each test prints one `criterion N` line
//! with PASS or FAIL straight to stderr, so the line shows up even when
//! libtest captures output.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tritwatch::config::KeyValues;
use tritwatch::counting::{
    count_groups_blob, count_groups_cof, dbscan_cluster_count, dense_optical_flow, estimate_background,
    feature_distance, CounterConfig, FeatureWeights, FlowPoint, Frame, RunningBackground,
};
use tritwatch::descriptor::{
    analyze_series, decimal_to_trits, detect_alarms, histogram_stream, quiet_code, trits_to_decimal, AlarmDetector,
    CountSeries, DescriptorParams, PatternCode, StreamingDescriptor, TritCode,
};
use tritwatch::evaluation::{
    compute_metrics, grid_search_supervised, leave_one_out, match_frames, write_report, write_sweep, GridSpec,
    MatchConfig, ReportRow, Video,
};
use tritwatch::synth::{generate_blob_frames, generate_count_series, BlobSceneSpec, BlobSpec, ScenarioSpec};

/// Tests in this binary run one at a time so the latency check is not
/// competing with the heavier criteria for cores.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
    let line = format!(
        "criterion {n:>2} {:<4} {name}: {detail} ({:.2} s)\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn params(w: usize, l: usize, t: u32, t_star: f64) -> DescriptorParams {
    DescriptorParams {
        half_width: w,
        outer_window: l,
        count_threshold: t,
        bin_threshold: t_star,
        ..Default::default()
    }
}

fn series(counts: Vec<u32>) -> CountSeries {
    CountSeries::new(counts, 0, 20, 30.0).unwrap()
}

#[test]
fn criterion_01_encoding_exactness() {
    let _g = serial();
    let start = Instant::now();
    let mut failures = Vec::new();
    for d in 0..81u64 {
        let code = decimal_to_trits(PatternCode(d), 2).unwrap();
        let expected: Vec<u8> = (0..4).map(|j| ((d / 3u64.pow(j)) % 3) as u8).collect();
        if code.digits() != expected.as_slice() || trits_to_decimal(&code) != PatternCode(d) {
            failures.push(d);
        }
    }
    let all_ones = trits_to_decimal(&TritCode::new(vec![1, 1, 1, 1]).unwrap());
    let quiet_ok = (1..=3).all(|w| quiet_code(w).0 == (3u64.pow(2 * w as u32) - 1) / 2);
    let pass =
        failures.is_empty() && all_ones == PatternCode(40) && quiet_ok && start.elapsed() < Duration::from_secs(1);
    verdict(
        1,
        "encoding exactness",
        pass,
        format!(
            "81 round trips, {} mismatches; [1,1,1,1] -> {}; quiet codes {}",
            failures.len(),
            all_ones.0,
            if quiet_ok { "ok" } else { "wrong" }
        ),
        start.elapsed(),
    );
}

#[test]
fn criterion_02_window_count_law() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..200 {
        let w = rng.gen_range(1..=3);
        let l = rng.gen_range(2 * w + 1..=40);
        let m = rng.gen_range(l..=l + 300);
        let counts: Vec<u32> = (0..m).map(|_| rng.gen_range(0..30)).collect();
        let p = params(w, l, rng.gen_range(0..5), 0.85);
        let hs = histogram_stream(&series(counts), &p).unwrap();
        let totals_ok = hs
            .iter()
            .all(|h| h.total as usize == l - 2 * w && h.bins.values().sum::<u32>() == h.total);
        if hs.len() != m - l + 1 || !totals_ok {
            bad += 1;
        }
    }
    let pass = bad == 0 && start.elapsed() < Duration::from_secs(1);
    verdict(
        2,
        "window-count law",
        pass,
        format!("200 (M, L) pairs, {bad} violations of K = M - L + 1 or total = L - 2W"),
        start.elapsed(),
    );
}

#[test]
fn criterion_03_quiet_invariance_and_gradualism() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut noisy_alarms = 0;
    for _ in 0..1000 {
        let w = rng.gen_range(1..=3);
        let l = rng.gen_range(2 * w + 1..=30);
        let t = rng.gen_range(0..=6);
        let base = rng.gen_range(0..50);
        let m = rng.gen_range(l..=200);
        // Any two samples differ by at most T.
        let counts: Vec<u32> = (0..m).map(|_| base + rng.gen_range(0..=t)).collect();
        let p = params(w, l, t, rng.gen_range(0.05..=1.0));
        noisy_alarms += analyze_series(&series(counts), &p).unwrap().1.len();
    }
    let mut ramp_alarms = 0;
    let mut ramps = 0;
    for w in 1..=3 {
        for t in (2 * w as u32)..=(2 * w as u32 + 2) {
            for l in [2 * w + 1, 15, 30] {
                for down in [false, true] {
                    let counts: Vec<u32> = (0..300u32).map(|i| if down { 400 - i } else { 5 + i }).collect();
                    ramp_alarms += analyze_series(&series(counts), &params(w, l, t, 1.0)).unwrap().1.len();
                    ramps += 1;
                }
            }
        }
    }
    let pass = noisy_alarms == 0 && ramp_alarms == 0 && start.elapsed() < Duration::from_secs(5);
    verdict(
        3,
        "quiet invariance and gradualism",
        pass,
        format!(
            "1000 bounded series: {noisy_alarms} alarms; {ramps} unit-slope ramps with T >= 2W: {ramp_alarms} alarms"
        ),
        start.elapsed(),
    );
}

#[test]
fn criterion_04_shift_invariance() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut total_alarms = 0;
    for _ in 0..500 {
        let w = rng.gen_range(1..=3);
        let l = rng.gen_range(2 * w + 1..=30);
        let m = rng.gen_range(l..=200);
        let mut level: i64 = rng.gen_range(0..20);
        let counts: Vec<u32> = (0..m)
            .map(|_| {
                level = (level + rng.gen_range(-4..=4)).max(0);
                level as u32
            })
            .collect();
        let k = rng.gen_range(0..1000);
        let shifted: Vec<u32> = counts.iter().map(|c| c + k).collect();
        let p = params(w, l, rng.gen_range(0..5), rng.gen_range(0.3..=1.0));
        let a = analyze_series(&series(counts), &p).unwrap().1;
        let b = analyze_series(&series(shifted), &p).unwrap().1;
        total_alarms += a.len();
        if a != b {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0 && total_alarms > 0 && start.elapsed() < Duration::from_secs(5);
    verdict(
        4,
        "shift invariance",
        pass,
        format!("500 random series ({total_alarms} alarms), {mismatches} differ after adding k"),
        start.elapsed(),
    );
}

#[test]
fn criterion_05_metrics_exactness() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = 0;
    for _ in 0..1000 {
        let (tp, fp, fn_) = (
            rng.gen_range(0..60i64),
            rng.gen_range(0..60i64),
            rng.gen_range(0..60i64),
        );
        let r = compute_metrics(tp, fp, fn_).unwrap();
        let (tpf, fpf, fnf) = (tp as f64, fp as f64, fn_ as f64);
        let p = if tp + fp > 0 { tpf / (tpf + fpf) } else { 0.0 };
        let rc = if tp + fn_ > 0 { tpf / (tpf + fnf) } else { 0.0 };
        // Harmonic mean written directly on counts.
        let f1 = if tp > 0 {
            2.0 * tpf / (2.0 * tpf + fpf + fnf)
        } else {
            0.0
        };
        if (r.precision - p).abs() > 1e-12 || (r.recall - rc).abs() > 1e-12 || (r.f1 - f1).abs() > 1e-12 {
            bad += 1;
        }
    }
    let (p, r): (f64, f64) = (0.8461, 0.9167);
    let f1_table = 2.0 * p * r / (p + r) * 100.0;
    let mc = compute_metrics(11, 2, 1).unwrap();
    let pp = |x: f64| x * 100.0;
    let table_ok = (f1_table - 88.00).abs() <= 0.01
        && (pp(mc.precision) - 84.61).abs() <= 0.01
        && (pp(mc.recall) - 91.67).abs() <= 0.01
        && (pp(mc.f1) - 88.00).abs() <= 0.01;
    verdict(
        5,
        "metrics exactness",
        bad == 0 && table_ok,
        format!(
            "1000 triples, {bad} mismatches; P=84.61% R=91.67% -> F1={f1_table:.4}%; counts 11/2/1 -> {:.3}%/{:.3}%/{:.3}%",
            pp(mc.precision),
            pp(mc.recall),
            pp(mc.f1)
        ),
        start.elapsed(),
    );
}

#[test]
fn criterion_06_matching_protocol() {
    let _g = serial();
    let start = Instant::now();
    let mc = MatchConfig::symmetric(27.0, 30.0);
    let label = [3000u64];
    let at = |alarms: &[u64]| match_frames(alarms, &label, &mc).unwrap();
    let inside = [at(&[3405]), at(&[2595])];
    let outside = [at(&[3406]), at(&[2594])];
    let many = at(&[2700, 2950, 3000, 3300]);
    let inside_ok = inside.iter().all(|c| (c.tp, c.fp, c.fn_) == (1, 0, 0));
    let outside_ok = outside.iter().all(|c| (c.tp, c.fp, c.fn_) == (0, 1, 1));
    let many_ok = many.tp == 1 && many.fn_ == 0;
    let pass = inside_ok && outside_ok && many_ok && start.elapsed() < Duration::from_secs(1);
    verdict(
        6,
        "matching protocol",
        pass,
        format!(
            "405 frames: tp={}; 406 frames: tp={} fp={}; 4 alarms in one window: tp={} fp={}",
            inside[0].tp, outside[0].tp, outside[0].fp, many.tp, many.fp
        ),
        start.elapsed(),
    );
}

/// Core flags by full scan, then union-find over core pairs within eps.
fn dbscan_oracle(points: &[FlowPoint], eps: f64, min_points: usize, w: &FeatureWeights) -> usize {
    let n = points.len();
    let within = |i: usize, j: usize| feature_distance(&points[i], &points[j], w) <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| within(i, j)).count() >= min_points)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if core[i] && core[j] && within(i, j) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).filter(|&i| core[i]).map(|i| root(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

#[test]
fn criterion_07_dbscan_oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    let mut multi = 0;
    for _ in 0..500 {
        let n = rng.gen_range(0..=200);
        let centres: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(1..=6))
            .map(|_| {
                (
                    rng.gen_range(0.0..60.0),
                    rng.gen_range(0.0..60.0),
                    rng.gen_range(0.0..4.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let spread = rng.gen_range(0.5..6.0);
        let points: Vec<FlowPoint> = (0..n)
            .map(|_| {
                let c = centres[rng.gen_range(0..centres.len())];
                FlowPoint {
                    x: c.0 + rng.gen_range(-spread..spread),
                    y: c.1 + rng.gen_range(-spread..spread),
                    magnitude: (c.2 + rng.gen_range(-0.5..0.5f64)).max(0.0),
                    angle: (c.3 + rng.gen_range(-0.6..0.6f64)).rem_euclid(std::f64::consts::TAU),
                }
            })
            .collect();
        let mut config = CounterConfig::default();
        config.cof.eps = rng.gen_range(0.5..5.0);
        config.cof.min_points = rng.gen_range(1..=10);
        config.cof.weights = FeatureWeights {
            x: if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(0.2..2.0)
            },
            y: rng.gen_range(0.2..2.0),
            magnitude: rng.gen_range(0.0..3.0),
            angle: rng.gen_range(0.0..3.0),
        };
        let got = dbscan_cluster_count(&points, &config);
        let want = dbscan_oracle(&points, config.cof.eps, config.cof.min_points, &config.cof.weights);
        if got != want {
            mismatches += 1;
        }
        if want >= 2 {
            multi += 1;
        }
    }
    let pass = mismatches == 0 && multi > 100 && start.elapsed() < Duration::from_secs(30);
    verdict(
        7,
        "DBSCAN oracle equivalence",
        pass,
        format!("500 instances ({multi} with 2+ clusters), {mismatches} mismatches"),
        start.elapsed(),
    );
}

/// Up to five blobs, each in its own horizontal lane, crossing fast enough
/// that the temporal median sees background everywhere.
fn separated_scene(rng: &mut ChaCha8Rng, seed: u64) -> BlobSceneSpec {
    let frames = 60u64;
    let lanes = rng.gen_range(1..=5);
    let blobs = (0..lanes)
        .map(|lane| {
            let radius = rng.gen_range(4.0..7.0);
            let speed = rng.gen_range(1.0..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let x0 = if speed > 0.0 { 30.0 } else { 290.0 };
            let (start, end) = if rng.gen_bool(0.3) {
                let s = rng.gen_range(0..30);
                (s, Some(s + rng.gen_range(10..30)))
            } else {
                (0, None)
            };
            BlobSpec {
                radius,
                intensity: rng.gen_range(150..=255),
                x0,
                y0: 24.0 + 48.0 * lane as f64,
                vx: speed,
                vy: rng.gen_range(-0.1..0.1),
                start,
                end,
            }
        })
        .collect();
    BlobSceneSpec {
        width: 320,
        height: 240,
        frames,
        background: rng.gen_range(20..=80),
        pixel_noise: rng.gen_range(0..=4),
        seed,
        blobs,
        splits: vec![],
        merges: vec![],
    }
}

fn two_blob_pair(r: f64, v: f64, noise: u8, seed: u64) -> (Frame, Frame) {
    let spec = BlobSceneSpec {
        width: 160,
        height: 120,
        frames: 2,
        background: 40,
        pixel_noise: noise,
        seed,
        blobs: vec![
            BlobSpec {
                radius: r,
                intensity: 200,
                x0: 50.0,
                y0: 60.0,
                vx: v,
                vy: 0.0,
                start: 0,
                end: None,
            },
            BlobSpec {
                radius: r,
                intensity: 200,
                x0: 110.0,
                y0: 60.0,
                vx: -v,
                vy: 0.0,
                start: 0,
                end: None,
            },
        ],
        splits: vec![],
        merges: vec![],
    };
    let (mut frames, _) = generate_blob_frames(&spec).unwrap();
    let next = frames.pop().unwrap();
    (frames.pop().unwrap(), next)
}

#[test]
fn criterion_08_counters_on_synthetics() {
    let _g = serial();
    let start = Instant::now();
    let config = CounterConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bd_errors = 0;
    let mut bd_frames = 0;
    for scene in 0..24 {
        let spec = separated_scene(&mut rng, 800 + scene);
        let (frames, truth) = generate_blob_frames(&spec).unwrap();
        let bg = estimate_background(&frames).unwrap();
        for (f, &t) in frames.iter().zip(&truth) {
            bd_frames += 1;
            if count_groups_blob(f, &bg, &config).unwrap() != t as usize {
                bd_errors += 1;
            }
        }
    }
    let mut cof_moving = Vec::new();
    let mut cof_static = Vec::new();
    for (i, (r, v, noise)) in [
        (8.0, 1.5, 0),
        (10.0, 2.0, 2),
        (6.0, 1.0, 2),
        (12.0, 3.0, 3),
        (8.0, 0.5, 0),
    ]
    .into_iter()
    .enumerate()
    {
        let (a, b) = two_blob_pair(r, v, noise, i as u64);
        cof_moving.push(count_groups_cof(&a, &b, &config).unwrap());
        let (a, b) = two_blob_pair(r, 0.0, noise, 100 + i as u64);
        cof_static.push(count_groups_cof(&a, &b, &config).unwrap());
    }
    let pass = bd_errors == 0
        && cof_moving.iter().all(|&c| c == 2)
        && cof_static.iter().all(|&c| c == 0)
        && start.elapsed() < Duration::from_secs(60);
    verdict(
        8,
        "counters on synthetic scenes",
        pass,
        format!("BD: 24 scenes, {bd_frames} frames, {bd_errors} errors; COF opposite pairs {cof_moving:?}, static {cof_static:?}"),
        start.elapsed(),
    );
}

/// Smooth multi-frequency texture sampled at `(x - dx, y - dy)`.
fn texture(w: usize, h: usize, dx: f64, dy: f64) -> Frame {
    let mut px = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (u, v) = (x as f64 - dx, y as f64 - dy);
            let s = (u / 7.0).sin() * (v / 9.0).cos()
                + 0.6 * ((u + 1.7 * v) / 11.0).sin()
                + 0.4 * ((2.1 * u - v) / 13.0).cos();
            px.push((128.0 + 50.0 * s).round().clamp(0.0, 255.0) as u8);
        }
    }
    Frame::new(w, h, px, 0).unwrap()
}

fn median(mut v: Vec<f32>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    f64::from(v[v.len() / 2])
}

#[test]
fn criterion_09_optical_flow_accuracy() {
    let _g = serial();
    let start = Instant::now();
    let config = CounterConfig::default();
    let shifts = [
        (0.5, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (1.5, -1.0),
        (2.0, 1.0),
        (-2.5, 0.5),
        (3.0, 0.0),
        (0.0, -3.0),
        (2.0, 2.0),
        (-1.2, 2.4),
    ];
    let (w, h, margin) = (128, 96, 12);
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (dx, dy) in shifts {
        let field = dense_optical_flow(&texture(w, h, 0.0, 0.0), &texture(w, h, dx, dy), &config).unwrap();
        let (mut us, mut vs) = (Vec::new(), Vec::new());
        for y in margin..h - margin {
            for x in margin..w - margin {
                us.push(field.u[y * w + x]);
                vs.push(field.v[y * w + x]);
            }
        }
        let (mu, mv) = (median(us), median(vs));
        let err = (mu - dx).hypot(mv - dy);
        worst = worst.max(err);
        details.push(format!("({dx},{dy})->{err:.3}"));
    }
    verdict(
        9,
        "optical flow accuracy",
        worst <= 0.3,
        format!(
            "10 shifts up to 3 px, worst median error {worst:.3} px [{}]",
            details.join(" ")
        ),
        start.elapsed(),
    );
}

const BENCHMARK: [(&str, &str); 6] = [
    ("v1_fast", include_str!("../../../configs/benchmark/v1_fast.cfg")),
    ("v2_slow", include_str!("../../../configs/benchmark/v2_slow.cfg")),
    ("v3_quiet", include_str!("../../../configs/benchmark/v3_quiet.cfg")),
    ("v4_mixed", include_str!("../../../configs/benchmark/v4_mixed.cfg")),
    ("v5_ramped", include_str!("../../../configs/benchmark/v5_ramped.cfg")),
    ("v6_drift", include_str!("../../../configs/benchmark/v6_drift.cfg")),
];

fn benchmark_videos() -> Vec<Video> {
    let p = DescriptorParams::default();
    BENCHMARK
        .iter()
        .map(|(id, text)| {
            let kv = KeyValues::parse(text, format!("{id}.cfg")).unwrap();
            let spec = ScenarioSpec::from_key_values(&kv).unwrap();
            let (series, labels) = generate_count_series(&spec, &p).unwrap();
            Video {
                id: id.to_string(),
                series,
                labels,
            }
        })
        .collect()
}

#[test]
fn criterion_10_synthetic_benchmark() {
    let _g = serial();
    let start = Instant::now();
    let videos = benchmark_videos();
    let fixed = DescriptorParams::default();
    let mc = MatchConfig::symmetric(27.0, fixed.frame_rate);
    let grid = GridSpec::default();
    let sup = grid_search_supervised(&videos, &grid, &fixed, &mc, None).unwrap();
    let loo = leave_one_out(&videos, &grid, &fixed, &mc, None).unwrap();
    let pass = sup.report.f1 == 1.0
        && loo.pooled.f1 >= 0.8
        && sup.report.f1 >= loo.pooled.f1
        && start.elapsed() < Duration::from_secs(120);
    verdict(
        10,
        "synthetic benchmark",
        pass,
        format!(
            "6 videos, {} labels: supervised pooled F1 {:.4} at T={} L={} t*={:.2}; LOO pooled F1 {:.4}",
            videos.iter().map(|v| v.labels.len()).sum::<usize>(),
            sup.report.f1,
            sup.best.count_threshold,
            sup.best.outer_window,
            sup.best.bin_threshold,
            loo.pooled.f1
        ),
        start.elapsed(),
    );
}

fn sweep_bytes(videos: &[Video], workers: usize) -> (usize, Vec<u8>) {
    let fixed = DescriptorParams::default();
    let mc = MatchConfig::symmetric(27.0, fixed.frame_rate);
    let grid = GridSpec::default();
    let sup = grid_search_supervised(videos, &grid, &fixed, &mc, Some(workers)).unwrap();
    let loo = leave_one_out(videos, &grid, &fixed, &mc, Some(workers)).unwrap();
    let mut out = Vec::new();
    write_sweep(&mut out, &sup.sweep).unwrap();
    let rows: Vec<ReportRow> = loo
        .folds
        .iter()
        .map(|(id, combo, counts)| ReportRow {
            video: id.clone(),
            combo: Some(*combo),
            report: (*counts).into(),
        })
        .collect();
    write_report(&mut out, &rows).unwrap();
    (sup.sweep.len(), out)
}

#[test]
fn criterion_11_grid_cardinality_and_determinism() {
    let _g = serial();
    let start = Instant::now();
    let mut videos = benchmark_videos();
    // Noisier copies make many triples tie or nearly tie.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for v in videos.clone() {
        let counts = v.series.counts.iter().map(|&c| c + rng.gen_range(0..=4)).collect();
        videos.push(Video {
            id: format!("{}_noisy", v.id),
            series: CountSeries { counts, ..v.series },
            labels: v.labels,
        });
    }
    let (n_serial, serial_bytes) = sweep_bytes(&videos, 1);
    let (n_parallel, parallel_bytes) = sweep_bytes(&videos, 4);
    let pass =
        GridSpec::default().len() == 250 && n_serial == 250 && n_parallel == 250 && serial_bytes == parallel_bytes;
    verdict(
        11,
        "grid cardinality and determinism",
        pass,
        format!(
            "{n_serial} combos; 1 vs 4 workers: {} bytes, {}",
            serial_bytes.len(),
            if serial_bytes == parallel_bytes {
                "identical"
            } else {
                "different"
            }
        ),
        start.elapsed(),
    );
}

fn percentile(mut v: Vec<Duration>, q: f64) -> Duration {
    v.sort_unstable();
    v[((v.len() - 1) as f64 * q).round() as usize]
}

/// Twelve groups on a 4 x 3 grid over a textured floor, drifting 3 px per frame.
fn crowd_frame(rng: &mut ChaCha8Rng, w: usize, h: usize, t: f64) -> Frame {
    let mut px: Vec<u8> = (0..w * h)
        .map(|i| 60 + ((i % w) / 40) as u8 + rng.gen_range(0..4))
        .collect();
    for k in 0..12 {
        let cx = 60.0 + 140.0 * (k % 4) as f64 + 3.0 * t;
        let cy = 45.0 + 70.0 * (k / 4) as f64;
        for y in (cy as usize - 11)..=(cy as usize + 11) {
            for x in (cx as usize - 11)..=(cx as usize + 11) {
                if (x as f64 - cx).hypot(y as f64 - cy) < 10.0 {
                    px[y * w + x] = 200;
                }
            }
        }
    }
    Frame::new(w, h, px, t as u64).unwrap()
}

#[test]
fn criterion_12_latency_budget() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);

    let p = params(2, 30, 3, 0.85);
    let mut desc = StreamingDescriptor::new(p, 0, 20).unwrap();
    let mut trigger = AlarmDetector::new(p.bin_threshold);
    let mut updates = Vec::with_capacity(20_000);
    let mut level: i64 = 20;
    for _ in 0..20_000 {
        level = (level + rng.gen_range(-3..=3)).clamp(0, 200);
        let t0 = Instant::now();
        if let Some(h) = desc.push(level as u32) {
            std::hint::black_box(trigger.update(&h));
        }
        updates.push(t0.elapsed());
    }
    let desc_p99 = percentile(updates.clone(), 0.99);
    let desc_mean = updates.iter().sum::<Duration>() / updates.len() as u32;

    let (w, h) = (554, 235);
    let config = CounterConfig::default();
    let frames: Vec<Frame> = (0..12).map(|t| crowd_frame(&mut rng, w, h, f64::from(t))).collect();
    let mut running = RunningBackground::new(&frames[0], config.bd.learning_rate).unwrap();
    let bg = estimate_background(&frames).unwrap();
    let mut bd_times = Vec::new();
    for f in &frames[1..] {
        let t0 = Instant::now();
        running.update(f).unwrap();
        std::hint::black_box(count_groups_blob(f, &bg, &config).unwrap());
        bd_times.push(t0.elapsed());
    }
    let bd_max = *bd_times.iter().max().unwrap();

    let mut pipe_times = Vec::new();
    let mut cof_counts = Vec::new();
    let mut desc = StreamingDescriptor::new(DescriptorParams::default(), 0, 20).unwrap();
    for pair in frames.windows(2).take(5) {
        let t0 = Instant::now();
        let n = count_groups_cof(&pair[0], &pair[1], &config).unwrap();
        cof_counts.push(n);
        let n_bd = count_groups_blob(&pair[1], &bg, &config).unwrap();
        if let Some(h) = desc.push((n + n_bd) as u32) {
            std::hint::black_box(detect_alarms(&[h], desc.params()));
        }
        pipe_times.push(t0.elapsed());
    }
    let pipe_max = *pipe_times.iter().max().unwrap();

    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let pass = desc_p99 < Duration::from_millis(1)
        && bd_max < Duration::from_millis(100)
        && pipe_max < Duration::from_millis(666);
    verdict(
        12,
        "latency budget",
        pass,
        format!(
            "descriptor update L=30 mean {:.4} ms p99 {:.4} ms; BD 554x235 max {:.1} ms; COF+BD+descriptor max {:.1} ms (COF counts {:?})",
            ms(desc_mean),
            ms(desc_p99),
            ms(bd_max),
            ms(pipe_max),
            cof_counts
        ),
        start.elapsed(),
    );
}
