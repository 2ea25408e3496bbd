//! DBSCAN over moving pixels, returning only the number of clusters.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use super::{CounterConfig, FeatureWeights, FlowField};

/// A moving pixel in the clustering feature space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub x: f64,
    pub y: f64,
    pub magnitude: f64,
    pub angle: f64,
}

/// Shortest difference between two directions, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

pub fn feature_distance(a: &FlowPoint, b: &FlowPoint, w: &FeatureWeights) -> f64 {
    let dx = w.x * (a.x - b.x);
    let dy = w.y * (a.y - b.y);
    let dm = w.magnitude * (a.magnitude - b.magnitude);
    let da = w.angle * angle_distance(a.angle, b.angle);
    (dx * dx + dy * dy + dm * dm + da * da).sqrt()
}

/// Pixels whose flow magnitude exceeds the motion floor and whose image
/// gradient exceeds the gradient floor.
pub fn flow_to_points(field: &FlowField, config: &CounterConfig) -> Vec<FlowPoint> {
    let floor = config.cof.motion_floor;
    let gradient_floor = config.cof.gradient_floor;
    let mut points = Vec::new();
    for y in 0..field.height {
        for x in 0..field.width {
            let i = y * field.width + x;
            let magnitude = field.magnitude(i);
            if magnitude > floor && field.gradient_at(i) > gradient_floor {
                points.push(FlowPoint {
                    x: x as f64,
                    y: y as f64,
                    magnitude,
                    angle: field.angle(i),
                });
            }
        }
    }
    points
}

/// Buckets points by `(x, y)` cell so a region query only scans the 3x3
/// block of cells around the query point. Any point within `eps` differs by
/// at most `eps / w` along a positively weighted axis, which bounds the scan.
struct SpatialIndex {
    cell_x: f64,
    cell_y: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialIndex {
    fn build(points: &[FlowPoint], eps: f64, w: &FeatureWeights) -> Option<Self> {
        if w.x <= 0.0 || w.y <= 0.0 {
            return None;
        }
        let cell_x = eps / w.x;
        let cell_y = eps / w.y;
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key = ((p.x / cell_x).floor() as i64, (p.y / cell_y).floor() as i64);
            cells.entry(key).or_default().push(i);
        }
        Some(SpatialIndex { cell_x, cell_y, cells })
    }

    fn candidates<'a>(&'a self, p: &FlowPoint) -> impl Iterator<Item = usize> + 'a {
        let cx = (p.x / self.cell_x).floor() as i64;
        let cy = (p.y / self.cell_y).floor() as i64;
        (-1..=1)
            .flat_map(move |dy| (-1..=1).map(move |dx| (cx + dx, cy + dy)))
            .filter_map(move |k| self.cells.get(&k))
            .flatten()
            .copied()
    }
}

fn region_query(
    points: &[FlowPoint],
    index: Option<&SpatialIndex>,
    i: usize,
    eps: f64,
    w: &FeatureWeights,
    out: &mut Vec<usize>,
) {
    out.clear();
    let p = &points[i];
    match index {
        Some(index) => out.extend(
            index
                .candidates(p)
                .filter(|&j| feature_distance(p, &points[j], w) <= eps),
        ),
        None => out.extend((0..points.len()).filter(|&j| feature_distance(p, &points[j], w) <= eps)),
    }
}

/// Number of DBSCAN clusters among `points`.
///
/// A point is core when at least `min_points` points, itself included, lie
/// within `eps`. Clusters are grown from core points; border points join a
/// cluster but never extend it, and noise belongs to none.
pub fn dbscan_cluster_count(points: &[FlowPoint], config: &CounterConfig) -> usize {
    let cfg = &config.cof;
    dbscan_count(points, cfg.eps, cfg.min_points, &cfg.weights)
}

pub(crate) fn dbscan_count(points: &[FlowPoint], eps: f64, min_points: usize, w: &FeatureWeights) -> usize {
    if points.is_empty() {
        return 0;
    }
    let index = SpatialIndex::build(points, eps, w);
    let index = index.as_ref();
    let mut visited = vec![false; points.len()];
    let mut neighbours = Vec::new();
    let mut queue = Vec::new();
    let mut clusters = 0;

    for start in 0..points.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        region_query(points, index, start, eps, w, &mut neighbours);
        if neighbours.len() < min_points {
            continue;
        }
        clusters += 1;
        queue.clear();
        queue.extend(neighbours.iter().copied().filter(|&k| !visited[k]));
        while let Some(j) = queue.pop() {
            if visited[j] {
                continue;
            }
            visited[j] = true;
            region_query(points, index, j, eps, w, &mut neighbours);
            if neighbours.len() >= min_points {
                queue.extend(neighbours.iter().copied().filter(|&k| !visited[k]));
            }
        }
    }
    clusters
}
