use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{debug, info};
use tritwatch::counting::{
    build_count_series, parse_counts, read_raw_planes, write_counts, write_pgm, FrameDir, FrameSource,
};
use tritwatch::descriptor::{
    analyze_series, read_alarms_csv, write_alarms_csv, write_descriptor_csv, AlarmEvent, CountSeries,
};
use tritwatch::evaluation::{
    evaluate_combo, grid_search_supervised, leave_one_out, match_alarms, read_labels, read_manifest, write_labels,
    write_report, write_sweep, Combo, EvalReport, LabelEvent, ReportRow, Video,
};
use tritwatch::synth::{generate_blob_frames, generate_count_series, render_background, SynthSpec};
use tritwatch::{config::KeyValues, Error};

use crate::settings::{shown, Mode, Settings};
use crate::svg;
use crate::Failure;

type CmdResult<T = ()> = Result<T, Failure>;

pub struct Ctx {
    pub settings: Settings,
    pub argv: String,
}

impl Ctx {
    fn combo(&self) -> Combo {
        let p = &self.settings.params;
        Combo {
            count_threshold: p.count_threshold,
            outer_window: p.outer_window,
            bin_threshold: p.bin_threshold,
        }
    }

    fn prepare_out(&self) -> CmdResult {
        let out = &self.settings.out;
        std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
        Ok(())
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CmdResult<PathBuf> {
        let path = self.settings.out_path(name);
        write_file(&path, f)?;
        Ok(path)
    }

    /// Echoes the resolved configuration next to the outputs.
    fn write_manifest(&self, command: &str, inputs: &[(&str, &Path)]) -> CmdResult {
        let mut text = format!("# tritwatch {command}\n# argv: {}\n", self.argv);
        for (name, path) in inputs {
            text.push_str(&format!("# input {name}: {}\n", shown(path)));
        }
        text.push_str(&self.settings.to_config_text());
        self.write("run.cfg", |w| w.write_all(text.as_bytes()))?;
        Ok(())
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Failure {
    Failure::Core(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CmdResult {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

fn read_counts(ctx: &Ctx, path: &Path) -> CmdResult<CountSeries> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let p = &ctx.settings.params;
    let (series, notes) = parse_counts(file, path, p.skip as u64, p.frame_rate)?;
    if !notes.rounded_lines.is_empty() {
        info!(
            "{}: {} fractional counts rounded",
            shown(path),
            notes.rounded_lines.len()
        );
    }
    Ok(series)
}

fn require_labels(labels: Option<&Path>) -> CmdResult<Vec<LabelEvent>> {
    match labels {
        Some(path) => Ok(read_labels(path)?),
        None => Err(Failure::Usage("labels required: pass --labels <file>".into())),
    }
}

fn video_name(labels: &Path) -> String {
    labels
        .file_stem()
        .map_or_else(|| "video".to_string(), |s| s.to_string_lossy().into_owned())
}

fn log_timings(series: &CountSeries, timings: &[Duration]) {
    for (i, t) in timings.iter().enumerate() {
        debug!("frame {}: {:.2} ms", series.frame_of(i), t.as_secs_f64() * 1e3);
    }
    if !timings.is_empty() {
        let mean = timings.iter().sum::<Duration>().as_secs_f64() * 1e3 / timings.len() as f64;
        info!("counted {} frames, mean {mean:.2} ms per frame", timings.len());
    }
}

fn count_stage(ctx: &Ctx, input: &Path) -> CmdResult<CountSeries> {
    let s = &ctx.settings;
    let run = if input.is_dir() {
        let frames = FrameDir::open(input)?;
        info!(
            "{}: {} frames {}x{}",
            shown(input),
            frames.len(),
            frames.width(),
            frames.height()
        );
        build_count_series(&frames, s.counter, &s.params, &s.counter_config)?
    } else {
        let frames = read_raw_planes(input)?;
        build_count_series(&frames, s.counter, &s.params, &s.counter_config)?
    };
    log_timings(&run.series, &run.timings);
    ctx.write("counts.csv", |w| write_counts(w, &run.series))?;
    Ok(run.series)
}

fn detect_stage(ctx: &Ctx, series: &CountSeries, labels: &[LabelEvent], svg_out: bool) -> CmdResult<Vec<AlarmEvent>> {
    let params = &ctx.settings.params;
    let (histograms, alarms) = analyze_series(series, params)?;
    info!("{} windows, {} alarms", histograms.len(), alarms.len());
    ctx.write("descriptor.csv", |w| write_descriptor_csv(w, &histograms, &alarms))?;
    ctx.write("alarms.csv", |w| write_alarms_csv(w, &alarms))?;
    if svg_out {
        let text = svg::timeline(series, &histograms, &alarms, labels, params.bin_threshold);
        ctx.write("timeline.svg", |w| w.write_all(text.as_bytes()))?;
    }
    Ok(alarms)
}

fn eval_stage(ctx: &Ctx, alarms: &[AlarmEvent], labels: &[LabelEvent], video: String) -> CmdResult<EvalReport> {
    let report = EvalReport::from(match_alarms(alarms, labels, &ctx.settings.match_config())?);
    info!(
        "tp {} fp {} fn {}: precision {:.4} recall {:.4} f1 {:.4}",
        report.tp, report.fp, report.fn_, report.precision, report.recall, report.f1
    );
    let row = ReportRow {
        video,
        combo: Some(ctx.combo()),
        report,
    };
    ctx.write("report.csv", |w| write_report(w, std::slice::from_ref(&row)))?;
    Ok(report)
}

pub fn count(ctx: &Ctx, input: &Path) -> CmdResult {
    ctx.prepare_out()?;
    ctx.write_manifest("count", &[("frames", input)])?;
    count_stage(ctx, input)?;
    Ok(())
}

pub fn detect(ctx: &Ctx, counts: &Path, labels: Option<&Path>, svg_out: bool) -> CmdResult {
    ctx.prepare_out()?;
    let mut inputs = vec![("counts", counts)];
    inputs.extend(labels.map(|l| ("labels", l)));
    ctx.write_manifest("detect", &inputs)?;
    let series = read_counts(ctx, counts)?;
    let labels = match labels {
        Some(l) => read_labels(l)?,
        None => Vec::new(),
    };
    detect_stage(ctx, &series, &labels, svg_out)?;
    Ok(())
}

pub fn eval(ctx: &Ctx, alarms: &Path, labels: Option<&Path>) -> CmdResult {
    let label_events = require_labels(labels)?;
    let labels = labels.expect("checked above");
    ctx.prepare_out()?;
    ctx.write_manifest("eval", &[("alarms", alarms), ("labels", labels)])?;
    let alarm_events = read_alarms_csv(alarms)?;
    eval_stage(ctx, &alarm_events, &label_events, video_name(labels))?;
    Ok(())
}

/// Counting (unless `input` is already a counts CSV), detection and, with
/// labels, evaluation in one invocation.
pub fn run(ctx: &Ctx, input: &Path, labels: Option<&Path>, svg_out: bool) -> CmdResult {
    ctx.prepare_out()?;
    let mut inputs = vec![("input", input)];
    inputs.extend(labels.map(|l| ("labels", l)));
    ctx.write_manifest("run", &inputs)?;
    let is_counts = input.is_file() && input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let series = if is_counts {
        read_counts(ctx, input)?
    } else {
        count_stage(ctx, input)?
    };
    let label_events = match labels {
        Some(l) => read_labels(l)?,
        None => Vec::new(),
    };
    let alarms = detect_stage(ctx, &series, &label_events, svg_out)?;
    if let Some(l) = labels {
        // Round-trip through the written CSV so the fused run scores exactly
        // what the staged `eval` would read.
        let written = read_alarms_csv(&ctx.settings.out_path("alarms.csv"))?;
        debug_assert_eq!(written.len(), alarms.len());
        eval_stage(ctx, &written, &label_events, video_name(l))?;
    }
    Ok(())
}

fn load_videos(ctx: &Ctx, manifest: &Path) -> CmdResult<Vec<Video>> {
    read_manifest(manifest)?
        .into_iter()
        .map(|entry| {
            Ok(Video {
                series: read_counts(ctx, &entry.counts_path)?,
                labels: read_labels(&entry.labels_path)?,
                id: entry.video_id,
            })
        })
        .collect()
}

pub fn tune(ctx: &Ctx, manifest: &Path) -> CmdResult {
    let s = &ctx.settings;
    ctx.prepare_out()?;
    let mut inputs = vec![("manifest", manifest)];
    if let Some(g) = &s.grid_path {
        inputs.push(("grid", g.as_path()));
    }
    ctx.write_manifest("tune", &inputs)?;
    let videos = load_videos(ctx, manifest)?;
    let grid = s.grid()?;
    let mc = s.match_config();
    info!(
        "{} mode: {} combinations over {} videos",
        match s.mode {
            Mode::Supervised => "supervised",
            Mode::Loo => "leave-one-out",
        },
        grid.len(),
        videos.len()
    );
    match s.mode {
        Mode::Supervised => {
            let result = grid_search_supervised(&videos, &grid, &s.params, &mc, s.workers)?;
            info!("evaluated {} combinations", result.sweep.len());
            let mut rows = Vec::with_capacity(videos.len() + 1);
            for v in &videos {
                let counts = evaluate_combo(std::slice::from_ref(v), &result.best, &s.params, &mc)?;
                rows.push(ReportRow {
                    video: v.id.clone(),
                    combo: Some(result.best),
                    report: counts.into(),
                });
            }
            rows.push(ReportRow {
                video: "pooled".into(),
                combo: Some(result.best),
                report: result.report,
            });
            let tuned = Settings {
                params: result.best.apply(&s.params),
                ..s.clone()
            };
            let best = format!(
                "# supervised best: pooled f1 {:.6} (tp {} fp {} fn {})\n{}",
                result.report.f1,
                result.report.tp,
                result.report.fp,
                result.report.fn_,
                tuned.to_config_text()
            );
            ctx.write("best_params.cfg", |w| w.write_all(best.as_bytes()))?;
            ctx.write("reports.csv", |w| write_report(w, &rows))?;
            ctx.write("sweep.csv", |w| write_sweep(w, &result.sweep))?;
            info!(
                "best T={} L={} t*={:.2}: pooled f1 {:.4}",
                result.best.count_threshold, result.best.outer_window, result.best.bin_threshold, result.report.f1
            );
        }
        Mode::Loo => {
            let result = leave_one_out(&videos, &grid, &s.params, &mc, s.workers)?;
            let mut rows: Vec<ReportRow> = result
                .folds
                .iter()
                .map(|(id, combo, counts)| ReportRow {
                    video: id.clone(),
                    combo: Some(*combo),
                    report: (*counts).into(),
                })
                .collect();
            rows.push(ReportRow {
                video: "pooled".into(),
                combo: None,
                report: result.pooled,
            });
            ctx.write("reports.csv", |w| write_report(w, &rows))?;
            ctx.write("loo_params.csv", |w| {
                writeln!(w, "parameter,mean,std")?;
                writeln!(
                    w,
                    "T,{:.6},{:.6}",
                    result.count_threshold.mean, result.count_threshold.std
                )?;
                writeln!(w, "L,{:.6},{:.6}", result.outer_window.mean, result.outer_window.std)?;
                writeln!(
                    w,
                    "t_star,{:.6},{:.6}",
                    result.bin_threshold.mean, result.bin_threshold.std
                )
            })?;
            info!("{} folds: pooled f1 {:.4}", result.folds.len(), result.pooled.f1);
        }
    }
    Ok(())
}

pub fn synth(ctx: &Ctx, spec_path: &Path) -> CmdResult {
    let spec = SynthSpec::from_key_values(&KeyValues::load(spec_path)?)?;
    ctx.prepare_out()?;
    ctx.write_manifest("synth", &[("spec", spec_path)])?;
    match spec {
        SynthSpec::Counts(spec) => {
            let (series, labels) = generate_count_series(&spec, &ctx.settings.params)?;
            ctx.write("counts.csv", |w| write_counts(w, &series))?;
            ctx.write("labels.csv", |w| write_labels(w, &labels))?;
            info!("{} samples, {} labelled events", series.len(), labels.len());
        }
        SynthSpec::Blobs(spec) => {
            let (frames, counts) = generate_blob_frames(&spec)?;
            let dir = ctx.settings.out_path("frames");
            std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
            for f in &frames {
                write_pgm(&dir.join(format!("{:05}.pgm", f.index)), f)?;
            }
            write_pgm(&ctx.settings.out_path("background.pgm"), &render_background(&spec)?)?;
            ctx.write("true_counts.csv", |w| {
                writeln!(w, "frame,count")?;
                for (i, c) in counts.iter().enumerate() {
                    writeln!(w, "{i},{c}")?;
                }
                Ok(())
            })?;
            info!("{} frames {}x{}", frames.len(), spec.width, spec.height);
        }
    }
    Ok(())
}
