use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use tritwatch::config::{parse_list, KeyValues};
use tritwatch::counting::{CounterConfig, CounterKind, FeatureWeights, StructuringElement};
use tritwatch::descriptor::DescriptorParams;
use tritwatch::evaluation::{GridSpec, MatchConfig};
use tritwatch::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Supervised,
    Loo,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Supervised => "supervised",
            Mode::Loo => "loo",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        <Mode as ValueEnum>::from_str(s, true).map_err(|_| format!("unknown mode `{s}` (expected supervised or loo)"))
    }
}

/// Flags shared by every subcommand. Each one mirrors a config-file key.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Count one frame every F frames
    #[arg(long = "F", global = true, value_name = "N")]
    pub skip: Option<usize>,
    /// Inner window half width (window spans 2W+1 samples)
    #[arg(long = "W", global = true, value_name = "N")]
    pub half_width: Option<usize>,
    /// Samples per outer window
    #[arg(long = "L", global = true, value_name = "N")]
    pub outer_window: Option<usize>,
    /// Count differences up to T are treated as unchanged
    #[arg(long = "T", global = true, value_name = "N")]
    pub count_threshold: Option<u32>,
    /// Alarm when the quiet fraction drops below this value
    #[arg(long = "t-star", global = true, value_name = "X")]
    pub bin_threshold: Option<f64>,
    #[arg(long = "frame-rate", global = true, value_name = "FPS")]
    pub frame_rate: Option<f64>,
    #[arg(long, global = true, value_parser = parse_counter)]
    pub counter: Option<CounterKind>,
    /// Total width of the alarm matching window, in seconds
    #[arg(long = "window-seconds", global = true, value_name = "S")]
    pub window_seconds: Option<f64>,
    /// Grid file with T, L and t-star value lists
    #[arg(long, global = true, value_name = "FILE")]
    pub grid: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for tuning (default: logical CPU count)
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Config file with keys named like the flags; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

fn parse_counter(s: &str) -> std::result::Result<CounterKind, String> {
    s.parse()
}

const KEYS: &[&str] = &[
    "F",
    "W",
    "L",
    "T",
    "t-star",
    "frame-rate",
    "counter",
    "window-seconds",
    "grid",
    "mode",
    "out",
    "workers",
    "cof-smoothness",
    "cof-iterations",
    "cof-warps",
    "cof-levels",
    "cof-motion-floor",
    "cof-gradient-floor",
    "cof-eps",
    "cof-min-points",
    "cof-weights",
    "bd-learning-rate",
    "bd-blur-radius",
    "bd-threshold",
    "bd-morph-radius",
    "bd-element",
    "bd-min-area",
];

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct Settings {
    pub params: DescriptorParams,
    pub counter: CounterKind,
    pub counter_config: CounterConfig,
    pub window_seconds: f64,
    pub grid_path: Option<PathBuf>,
    pub mode: Mode,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            params: DescriptorParams::default(),
            counter: CounterKind::Bd,
            counter_config: CounterConfig::default(),
            window_seconds: 27.0,
            grid_path: None,
            mode: Mode::Supervised,
            out: PathBuf::from("tritwatch-out"),
            workers: None,
        }
    }
}

fn set<T: std::str::FromStr>(kv: &KeyValues, key: &str, slot: &mut T) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = kv.parse_value(key)? {
        *slot = v;
    }
    Ok(())
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(path) = &args.config {
            s.apply_file(&KeyValues::load(path)?)?;
        }
        s.apply_flags(args);
        s.params.validate()?;
        s.counter_config.validate()?;
        s.match_config().validate()?;
        Ok(s)
    }

    fn apply_file(&mut self, kv: &KeyValues) -> Result<()> {
        kv.check_known(KEYS)?;
        let p = &mut self.params;
        set(kv, "F", &mut p.skip)?;
        set(kv, "W", &mut p.half_width)?;
        set(kv, "L", &mut p.outer_window)?;
        set(kv, "T", &mut p.count_threshold)?;
        set(kv, "t-star", &mut p.bin_threshold)?;
        set(kv, "frame-rate", &mut p.frame_rate)?;
        set(kv, "counter", &mut self.counter)?;
        set(kv, "window-seconds", &mut self.window_seconds)?;
        set(kv, "mode", &mut self.mode)?;
        set(kv, "out", &mut self.out)?;
        if let Some(g) = kv.parse_value::<PathBuf>("grid")? {
            self.grid_path = Some(g);
        }
        if let Some(w) = kv.parse_value::<String>("workers")? {
            if w != "auto" {
                self.workers = Some(kv.require("workers")?);
            }
        }
        let c = &mut self.counter_config.cof;
        set(kv, "cof-smoothness", &mut c.smoothness)?;
        set(kv, "cof-iterations", &mut c.iterations)?;
        set(kv, "cof-warps", &mut c.warps)?;
        set(kv, "cof-levels", &mut c.pyramid_levels)?;
        set(kv, "cof-motion-floor", &mut c.motion_floor)?;
        set(kv, "cof-gradient-floor", &mut c.gradient_floor)?;
        set(kv, "cof-eps", &mut c.eps)?;
        set(kv, "cof-min-points", &mut c.min_points)?;
        if let Some(entry) = kv.get("cof-weights") {
            let bad = |m: String| tritwatch::Error::Parse {
                source_name: kv.source().to_path_buf(),
                line: entry.line,
                message: format!("key `cof-weights`: {m}"),
            };
            let w: Vec<f64> = parse_list(&entry.value).map_err(bad)?;
            let [x, y, magnitude, angle] = w.as_slice() else {
                return Err(bad("expected four weights `x,y,magnitude,angle`".into()));
            };
            c.weights = FeatureWeights {
                x: *x,
                y: *y,
                magnitude: *magnitude,
                angle: *angle,
            };
        }
        let b = &mut self.counter_config.bd;
        set(kv, "bd-learning-rate", &mut b.learning_rate)?;
        set(kv, "bd-blur-radius", &mut b.blur_radius)?;
        set(kv, "bd-threshold", &mut b.threshold)?;
        set(kv, "bd-morph-radius", &mut b.morph_radius)?;
        set::<StructuringElement>(kv, "bd-element", &mut b.structuring)?;
        set(kv, "bd-min-area", &mut b.min_area)?;
        Ok(())
    }

    fn apply_flags(&mut self, a: &CommonArgs) {
        let p = &mut self.params;
        p.skip = a.skip.unwrap_or(p.skip);
        p.half_width = a.half_width.unwrap_or(p.half_width);
        p.outer_window = a.outer_window.unwrap_or(p.outer_window);
        p.count_threshold = a.count_threshold.unwrap_or(p.count_threshold);
        p.bin_threshold = a.bin_threshold.unwrap_or(p.bin_threshold);
        p.frame_rate = a.frame_rate.unwrap_or(p.frame_rate);
        self.counter = a.counter.unwrap_or(self.counter);
        self.window_seconds = a.window_seconds.unwrap_or(self.window_seconds);
        self.mode = a.mode.unwrap_or(self.mode);
        if let Some(g) = &a.grid {
            self.grid_path = Some(g.clone());
        }
        if let Some(o) = &a.out {
            self.out = o.clone();
        }
        if a.workers.is_some() {
            self.workers = a.workers;
        }
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig::symmetric(self.window_seconds, self.params.frame_rate)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        match &self.grid_path {
            Some(path) => GridSpec::from_key_values(&KeyValues::load(path)?),
            None => Ok(GridSpec::default()),
        }
    }

    /// The resolved configuration as config-file text; feeding it back via
    /// `--config` reproduces the run.
    pub fn to_config_text(&self) -> String {
        let p = &self.params;
        let c = &self.counter_config.cof;
        let b = &self.counter_config.bd;
        let w = c.weights;
        let mut lines = vec![
            format!("F = {}", p.skip),
            format!("W = {}", p.half_width),
            format!("L = {}", p.outer_window),
            format!("T = {}", p.count_threshold),
            format!("t-star = {}", p.bin_threshold),
            format!("frame-rate = {}", p.frame_rate),
            format!("counter = {}", self.counter),
            format!("window-seconds = {}", self.window_seconds),
            format!("mode = {}", self.mode.as_str()),
            format!("out = {}", self.out.display()),
            match self.workers {
                Some(n) => format!("workers = {n}"),
                None => "workers = auto".to_string(),
            },
            format!("cof-smoothness = {}", c.smoothness),
            format!("cof-iterations = {}", c.iterations),
            format!("cof-warps = {}", c.warps),
            format!("cof-levels = {}", c.pyramid_levels),
            format!("cof-motion-floor = {}", c.motion_floor),
            format!("cof-gradient-floor = {}", c.gradient_floor),
            format!("cof-eps = {}", c.eps),
            format!("cof-min-points = {}", c.min_points),
            format!("cof-weights = {},{},{},{}", w.x, w.y, w.magnitude, w.angle),
            format!("bd-learning-rate = {}", b.learning_rate),
            format!("bd-blur-radius = {}", b.blur_radius),
            format!("bd-threshold = {}", b.threshold),
            format!("bd-morph-radius = {}", b.morph_radius),
            format!("bd-element = {}", b.structuring),
            format!("bd-min-area = {}", b.min_area),
        ];
        if let Some(g) = &self.grid_path {
            lines.push(format!("grid = {}", g.display()));
        }
        lines.join("\n") + "\n"
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Path display used in manifests and log lines.
pub fn shown(path: &Path) -> String {
    path.display().to_string()
}
