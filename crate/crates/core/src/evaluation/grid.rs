use std::cmp::Ordering;

use rayon::prelude::*;

use super::matching::{match_frames, MatchConfig, MatchCounts};
use super::metrics::EvalReport;
use super::LabelEvent;
use crate::config::{parse_list, KeyValues};
use crate::descriptor::{crossing_indices, histogram_stream, CountSeries, DescriptorParams};
use crate::error::{Error, Result};

/// One labelled video: its count series and anomaly onsets.
#[derive(Debug, Clone)]
pub struct Video {
    pub id: String,
    pub series: CountSeries,
    pub labels: Vec<LabelEvent>,
}

/// Value lists for `T`, `L` and `t*`. Lists are kept sorted and
/// deduplicated so sweep order is lexicographic in `(T, L, t*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub thresholds: Vec<u32>,
    pub windows: Vec<usize>,
    pub bin_thresholds: Vec<f64>,
}

impl Default for GridSpec {
    /// T in 2..=6, L in 10..=30 step 5, t* in 0.50..=0.95 step 0.05.
    fn default() -> Self {
        GridSpec {
            thresholds: vec![2, 3, 4, 5, 6],
            windows: vec![10, 15, 20, 25, 30],
            bin_thresholds: vec![0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95],
        }
    }
}

impl GridSpec {
    pub fn new(mut thresholds: Vec<u32>, mut windows: Vec<usize>, mut bin_thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() || windows.is_empty() || bin_thresholds.is_empty() {
            return Err(Error::invalid("grid value lists must be non-empty"));
        }
        if bin_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::invalid("grid t* values must lie in (0, 1]"));
        }
        thresholds.sort_unstable();
        thresholds.dedup();
        windows.sort_unstable();
        windows.dedup();
        bin_thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite t*"));
        bin_thresholds.dedup();
        Ok(GridSpec {
            thresholds,
            windows,
            bin_thresholds,
        })
    }

    /// Reads `T`, `L` and `t-star` comma-separated lists; missing keys keep
    /// the default ranges.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&["T", "L", "t-star"])?;
        let d = GridSpec::default();
        let list = |key: &str| -> Result<Option<String>> { Ok(kv.get(key).map(|e| e.value.clone())) };
        let err = |key: &str, m: String| {
            let line = kv.get(key).map_or(0, |e| e.line);
            Error::parse(kv.source(), line, format!("key `{key}`: {m}"))
        };
        let thresholds = match list("T")? {
            Some(v) => parse_list(&v).map_err(|m| err("T", m))?,
            None => d.thresholds,
        };
        let windows = match list("L")? {
            Some(v) => parse_list(&v).map_err(|m| err("L", m))?,
            None => d.windows,
        };
        let bin_thresholds = match list("t-star")? {
            Some(v) => parse_list(&v).map_err(|m| err("t-star", m))?,
            None => d.bin_thresholds,
        };
        GridSpec::new(thresholds, windows, bin_thresholds)
    }

    pub fn len(&self) -> usize {
        self.thresholds.len() * self.windows.len() * self.bin_thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn combos(&self) -> impl Iterator<Item = Combo> + '_ {
        self.thresholds.iter().flat_map(move |&t| {
            self.windows.iter().flat_map(move |&l| {
                self.bin_thresholds.iter().map(move |&s| Combo {
                    count_threshold: t,
                    outer_window: l,
                    bin_threshold: s,
                })
            })
        })
    }
}

/// One tuned parameter triple `(T, L, t*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combo {
    pub count_threshold: u32,
    pub outer_window: usize,
    pub bin_threshold: f64,
}

impl Combo {
    pub fn apply(&self, fixed: &DescriptorParams) -> DescriptorParams {
        DescriptorParams {
            count_threshold: self.count_threshold,
            outer_window: self.outer_window,
            bin_threshold: self.bin_threshold,
            ..*fixed
        }
    }
}

/// Quiet fractions and centre frames of one video under one `(T, L)`.
struct Timeline {
    fractions: Vec<f64>,
    centers: Vec<u64>,
}

fn timeline(video: &Video, params: &DescriptorParams) -> Result<Timeline> {
    // A video shorter than L yields no windows and therefore no alarms.
    if video.series.len() < params.outer_window {
        return Ok(Timeline {
            fractions: Vec::new(),
            centers: Vec::new(),
        });
    }
    let hs = histogram_stream(&video.series, params)?;
    Ok(Timeline {
        fractions: hs.iter().map(|h| h.quiet_fraction()).collect(),
        centers: hs.iter().map(|h| h.center_frame).collect(),
    })
}

fn score(tl: &Timeline, video: &Video, t_star: f64, mc: &MatchConfig) -> Result<MatchCounts> {
    let alarms: Vec<u64> = crossing_indices(&tl.fractions, t_star)
        .into_iter()
        .map(|k| tl.centers[k])
        .collect();
    let labels: Vec<u64> = video.labels.iter().map(|l| l.frame).collect();
    match_frames(&alarms, &labels, mc)
}

/// Pooled counts of one parameter triple over `videos`.
pub fn evaluate_combo(
    videos: &[Video],
    combo: &Combo,
    fixed: &DescriptorParams,
    mc: &MatchConfig,
) -> Result<MatchCounts> {
    let params = combo.apply(fixed);
    params.validate()?;
    videos
        .iter()
        .map(|v| score(&timeline(v, &params)?, v, combo.bin_threshold, mc))
        .sum()
}

/// Orders pooled counts by F1 = 2TP / (2TP + FP + FN), exactly.
fn cmp_f1(a: &MatchCounts, b: &MatchCounts) -> Ordering {
    let frac = |c: &MatchCounts| (2 * c.tp as u128, (2 * c.tp + c.fp + c.fn_) as u128);
    let (an, ad) = frac(a);
    let (bn, bd) = frac(b);
    // An empty denominator means TP = 0, i.e. F1 = 0.
    let (an, ad) = if ad == 0 { (0, 1) } else { (an, ad) };
    let (bn, bd) = if bd == 0 { (0, 1) } else { (bn, bd) };
    (an * bd).cmp(&(bn * ad))
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub best: Combo,
    pub best_counts: MatchCounts,
    pub report: EvalReport,
    /// Every evaluated triple with its pooled counts, in sweep order.
    pub sweep: Vec<(Combo, MatchCounts)>,
}

fn run_in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn sweep(
    videos: &[Video],
    grid: &GridSpec,
    fixed: &DescriptorParams,
    mc: &MatchConfig,
) -> Result<Vec<(Combo, MatchCounts)>> {
    let pairs: Vec<(u32, usize)> = grid
        .thresholds
        .iter()
        .flat_map(|&t| grid.windows.iter().map(move |&l| (t, l)))
        .collect();
    // (T, L) pairs fan out; results come back in input order so the
    // reduction below is identical for any worker count.
    let per_pair: Vec<Result<Vec<(Combo, MatchCounts)>>> = pairs
        .par_iter()
        .map(|&(t, l)| {
            let params = DescriptorParams {
                count_threshold: t,
                outer_window: l,
                ..*fixed
            };
            params.validate()?;
            let timelines = videos
                .iter()
                .map(|v| timeline(v, &params))
                .collect::<Result<Vec<_>>>()?;
            grid.bin_thresholds
                .iter()
                .map(|&s| {
                    let counts = timelines
                        .iter()
                        .zip(videos)
                        .map(|(tl, v)| score(tl, v, s, mc))
                        .sum::<Result<MatchCounts>>()?;
                    Ok((
                        Combo {
                            count_threshold: t,
                            outer_window: l,
                            bin_threshold: s,
                        },
                        counts,
                    ))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for chunk in per_pair {
        out.extend(chunk?);
    }
    Ok(out)
}

fn search(videos: &[Video], grid: &GridSpec, fixed: &DescriptorParams, mc: &MatchConfig) -> Result<GridResult> {
    if videos.is_empty() {
        return Err(Error::invalid("grid search needs at least one video"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("grid is empty"));
    }
    mc.validate()?;
    let sweep = sweep(videos, grid, fixed, mc)?;
    // Strictly better only, so ties keep the lexicographically smallest triple.
    let (best, best_counts) = sweep
        .iter()
        .copied()
        .reduce(|acc, cur| {
            if cmp_f1(&cur.1, &acc.1) == Ordering::Greater {
                cur
            } else {
                acc
            }
        })
        .expect("non-empty sweep");
    Ok(GridResult {
        best,
        best_counts,
        report: best_counts.into(),
        sweep,
    })
}

/// Picks the triple maximizing F1 of the counts pooled over all videos.
///
/// `workers` sizes a dedicated thread pool; `None` uses the global pool.
pub fn grid_search_supervised(
    videos: &[Video],
    grid: &GridSpec,
    fixed: &DescriptorParams,
    mc: &MatchConfig,
    workers: Option<usize>,
) -> Result<GridResult> {
    run_in_pool(workers, || search(videos, grid, fixed, mc))?
}

/// Mean and population standard deviation of one tuned parameter across folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamStats {
    pub mean: f64,
    pub std: f64,
}

impl ParamStats {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        ParamStats { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone)]
pub struct LooResult {
    /// Per held-out video: the triple tuned on the others and its test counts.
    pub folds: Vec<(String, Combo, MatchCounts)>,
    pub pooled: EvalReport,
    pub count_threshold: ParamStats,
    pub outer_window: ParamStats,
    pub bin_threshold: ParamStats,
}

/// Leave-one-out: tune on every other video, test on the held-out one.
pub fn leave_one_out(
    videos: &[Video],
    grid: &GridSpec,
    fixed: &DescriptorParams,
    mc: &MatchConfig,
    workers: Option<usize>,
) -> Result<LooResult> {
    if videos.len() < 2 {
        return Err(Error::invalid(format!(
            "leave-one-out needs at least 2 videos, got {}",
            videos.len()
        )));
    }
    run_in_pool(workers, || -> Result<LooResult> {
        let mut folds = Vec::with_capacity(videos.len());
        for i in 0..videos.len() {
            let train: Vec<Video> = videos
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.clone())
                .collect();
            let tuned = search(&train, grid, fixed, mc)?;
            let test = evaluate_combo(std::slice::from_ref(&videos[i]), &tuned.best, fixed, mc)?;
            folds.push((videos[i].id.clone(), tuned.best, test));
        }
        let pooled: MatchCounts = folds.iter().map(|f| f.2).sum();
        let column = |f: fn(&Combo) -> f64| ParamStats::of(&folds.iter().map(|x| f(&x.1)).collect::<Vec<_>>());
        Ok(LooResult {
            pooled: pooled.into(),
            count_threshold: column(|c| f64::from(c.count_threshold)),
            outer_window: column(|c| c.outer_window as f64),
            bin_threshold: column(|c| c.bin_threshold),
            folds,
        })
    })?
}
