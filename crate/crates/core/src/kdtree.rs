//! Static 2-D k-d tree over state anchor points.
//!
//! Levels alternate between latitude (even depth) and longitude (odd depth).
//! Each node is the median of its subset along the level axis, with equal
//! coordinates ordered by input index so that lower indices land left.
//! Nearest-neighbour queries use squared Euclidean distance in degree space;
//! exact distance ties resolve to the lexicographically smallest code.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const DEFAULT_STATES: &str = include_str!("../data/states.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub code: String,
    pub lat: f64,
    pub lon: f64,
    pub electoral_votes: u32,
}

impl StatePoint {
    fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.lat
        } else {
            self.lon
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Tree(#[from] KdTreeError),
}

/// Parses `code,lat,lon,electoral_votes` rows. A header line whose first
/// field is `code` is skipped, as are blank and `#` lines.
pub fn parse_states_csv(contents: &str) -> Result<Vec<StatePoint>, StateFileError> {
    let mut out = Vec::new();
    for (i, raw) in contents.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.first() == Some(&"code") {
            continue;
        }
        let bad = |message: String| StateFileError::Malformed { line: i + 1, message };
        if fields.len() != 4 {
            return Err(bad(alloc::format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        let lat = num(fields[1]).filter(|v| (-90.0..=90.0).contains(v));
        let lon = num(fields[2]).filter(|v| (-180.0..=180.0).contains(v));
        let (Some(lat), Some(lon)) = (lat, lon) else {
            return Err(bad(alloc::format!("bad coordinates {:?},{:?}", fields[1], fields[2])));
        };
        let electoral_votes = fields[3]
            .parse::<u32>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| bad(alloc::format!("bad electoral vote count {:?}", fields[3])))?;
        if fields[0].is_empty() {
            return Err(bad("empty state code".into()));
        }
        out.push(StatePoint {
            code: fields[0].into(),
            lat,
            lon,
            electoral_votes,
        });
    }
    Ok(out)
}

/// The shipped anchors: one representative point per state plus DC.
pub fn default_states() -> Vec<StatePoint> {
    parse_states_csv(DEFAULT_STATES).expect("bundled state file is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KdTreeError {
    #[error("no points to index")]
    Empty,
    #[error("duplicate state code {0:?}")]
    DuplicateCode(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// Straight-line distance in raw degrees.
    #[default]
    Euclidean,
    /// Great-circle distance. Queries fall back to a scan of all points.
    Haversine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdTree2 {
    points: Vec<StatePoint>,
    nodes: Vec<Node>,
    root: usize,
}

pub fn squared_distance(lat: f64, lon: f64, p: &StatePoint) -> f64 {
    let dlat = lat - p.lat;
    let dlon = lon - p.lon;
    dlat * dlat + dlon * dlon
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    const EARTH_RADIUS_KM: f64 = 6371.0088;
    let to_rad = core::f64::consts::PI / 180.0;
    let dphi = (lat2 - lat1) * to_rad;
    let dlambda = (lon2 - lon1) * to_rad;
    let s1 = libm::sin(dphi / 2.0);
    let s2 = libm::sin(dlambda / 2.0);
    let a = s1 * s1 + libm::cos(lat1 * to_rad) * libm::cos(lat2 * to_rad) * s2 * s2;
    2.0 * EARTH_RADIUS_KM * libm::asin(libm::sqrt(a.clamp(0.0, 1.0)))
}

impl KdTree2 {
    pub fn build(points: Vec<StatePoint>) -> Result<Self, KdTreeError> {
        if points.is_empty() {
            return Err(KdTreeError::Empty);
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p.code.as_str()) {
                return Err(KdTreeError::DuplicateCode(p.code.clone()));
            }
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_rec(&points, &mut order, 0, &mut nodes).expect("non-empty");
        Ok(Self { points, nodes, root })
    }

    fn build_rec(
        points: &[StatePoint],
        subset: &mut [usize],
        depth: usize,
        nodes: &mut Vec<Node>,
    ) -> Option<usize> {
        if subset.is_empty() {
            return None;
        }
        let axis = depth % 2;
        subset.sort_by(|&a, &b| {
            points[a]
                .coord(axis)
                .total_cmp(&points[b].coord(axis))
                .then(a.cmp(&b))
        });
        let mid = subset.len() / 2;
        let id = nodes.len();
        nodes.push(Node {
            point: subset[mid],
            axis,
            left: None,
            right: None,
        });
        let (lo, rest) = subset.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = Self::build_rec(points, lo, depth + 1, nodes);
        let right = Self::build_rec(points, hi, depth + 1, nodes);
        nodes[id].left = left;
        nodes[id].right = right;
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[StatePoint] {
        &self.points
    }

    /// Number of levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], id: Option<usize>) -> usize {
            id.map_or(0, |i| 1 + rec(nodes, nodes[i].left).max(rec(nodes, nodes[i].right)))
        }
        rec(&self.nodes, Some(self.root))
    }

    /// Checks that every node's left subtree lies at or below its split
    /// coordinate and its right subtree at or above, and that each point
    /// appears exactly once.
    pub fn check_structure(&self) -> bool {
        let mut seen = alloc::vec![0usize; self.points.len()];
        let ok = self.check_node(self.root, &mut seen);
        ok && seen.iter().all(|&c| c == 1)
    }

    fn check_node(&self, id: usize, seen: &mut [usize]) -> bool {
        let node = &self.nodes[id];
        seen[node.point] += 1;
        let split = self.points[node.point].coord(node.axis);
        let mut ok = true;
        if let Some(l) = node.left {
            ok &= self.subtree(l).all(|p| self.points[p].coord(node.axis) <= split);
            ok &= self.check_node(l, seen);
        }
        if let Some(r) = node.right {
            ok &= self.subtree(r).all(|p| self.points[p].coord(node.axis) >= split);
            ok &= self.check_node(r, seen);
        }
        ok
    }

    fn subtree(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        let mut stack = alloc::vec![id];
        core::iter::from_fn(move || {
            let n = &self.nodes[stack.pop()?];
            stack.extend(n.left);
            stack.extend(n.right);
            Some(n.point)
        })
    }

    /// Closest anchor to `(lat, lon)` under squared Euclidean degree distance.
    pub fn nearest(&self, lat: f64, lon: f64) -> &StatePoint {
        let mut best = (f64::INFINITY, self.nodes[self.root].point);
        self.search(self.root, [lat, lon], &mut best);
        &self.points[best.1]
    }

    fn better(&self, d: f64, idx: usize, best: (f64, usize)) -> bool {
        d < best.0 || (d == best.0 && self.points[idx].code < self.points[best.1].code)
    }

    fn search(&self, id: usize, q: [f64; 2], best: &mut (f64, usize)) {
        let node = &self.nodes[id];
        let d = squared_distance(q[0], q[1], &self.points[node.point]);
        if self.better(d, node.point, *best) {
            *best = (d, node.point);
        }
        let diff = q[node.axis] - self.points[node.point].coord(node.axis);
        let (near, far) = if diff <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.search(n, q, best);
        }
        // Equal bound still has to be explored: a tied point there may carry
        // a smaller code.
        if let Some(f) = far {
            if diff * diff <= best.0 {
                self.search(f, q, best);
            }
        }
    }

    /// Nearest anchor under the chosen metric, with its distance (degrees for
    /// Euclidean, kilometres for haversine).
    pub fn nearest_with(&self, lat: f64, lon: f64, metric: DistanceMetric) -> (&StatePoint, f64) {
        match metric {
            DistanceMetric::Euclidean => {
                let p = self.nearest(lat, lon);
                (p, libm::sqrt(squared_distance(lat, lon, p)))
            }
            DistanceMetric::Haversine => {
                let mut best: Option<(f64, &StatePoint)> = None;
                for p in &self.points {
                    let d = haversine_km(lat, lon, p.lat, p.lon);
                    let take = match best {
                        None => true,
                        Some((bd, bp)) => d < bd || (d == bd && p.code < bp.code),
                    };
                    if take {
                        best = Some((d, p));
                    }
                }
                let (d, p) = best.expect("tree is non-empty");
                (p, d)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use rand::Rng;

    fn pt(code: &str, lat: f64, lon: f64) -> StatePoint {
        StatePoint {
            code: code.into(),
            lat,
            lon,
            electoral_votes: 1,
        }
    }

    #[test]
    fn default_file_has_51_unique_codes() {
        let s = default_states();
        assert_eq!(s.len(), 51);
        assert_eq!(s.iter().map(|p| p.electoral_votes).sum::<u32>(), 538);
        assert!(KdTree2::build(s).is_ok());
    }

    #[test]
    fn single_point() {
        let t = KdTree2::build(alloc::vec![pt("AA", 1.0, 2.0)]).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.nearest(50.0, 50.0).code, "AA");
    }

    #[test]
    fn default_depth_bound() {
        let t = KdTree2::build(default_states()).unwrap();
        // ceil(log2 51) + 1
        assert!(t.depth() <= 7, "depth {}", t.depth());
        assert!(t.check_structure());
    }

    #[test]
    fn exact_anchor_hit() {
        let t = KdTree2::build(default_states()).unwrap();
        for p in default_states() {
            assert_eq!(t.nearest(p.lat, p.lon).code, p.code);
        }
    }

    #[test]
    fn equidistant_query_takes_smaller_code() {
        let t = KdTree2::build(alloc::vec![pt("ZZ", 0.0, 1.0), pt("MM", 0.0, -1.0), pt("QQ", 5.0, 0.0)])
            .unwrap();
        assert_eq!(t.nearest(0.0, 0.0).code, "MM");
        let t = KdTree2::build(alloc::vec![pt("AB", 1.0, 0.0), pt("AA", -1.0, 0.0)]).unwrap();
        assert_eq!(t.nearest(0.0, 0.0).code, "AA");
    }

    #[test]
    fn duplicate_code_rejected() {
        let r = KdTree2::build(alloc::vec![pt("AA", 0.0, 0.0), pt("AA", 1.0, 1.0)]);
        assert_eq!(r.unwrap_err(), KdTreeError::DuplicateCode("AA".into()));
        assert_eq!(KdTree2::build(alloc::vec![]).unwrap_err(), KdTreeError::Empty);
    }

    #[test]
    fn structure_on_random_sets_with_ties() {
        let mut rng = crate::rng::seeded(3);
        for n in 1..60 {
            let pts = (0..n)
                .map(|i| {
                    // Coarse grid forces many equal coordinates.
                    pt(
                        &format!("P{i:03}"),
                        f64::from(rng.gen_range(0..6)),
                        f64::from(rng.gen_range(0..6)),
                    )
                })
                .collect();
            let t = KdTree2::build(pts).unwrap();
            assert!(t.check_structure());
            let bound = (n as f64).log2().ceil() as usize + 1;
            assert!(t.depth() <= bound);
        }
    }

    #[test]
    fn state_file_errors() {
        assert!(parse_states_csv("code,lat,lon,electoral_votes\nXX,95,0,3\n").is_err());
        assert!(parse_states_csv("XX,10,0\n").is_err());
        assert!(parse_states_csv("XX,10,0,0\n").is_err());
        let ok = parse_states_csv("# anchors\nXX, 10, 20, 3\n").unwrap();
        assert_eq!(ok[0].lon, 20.0);
    }

    #[test]
    fn haversine_metric() {
        let t = KdTree2::build(default_states()).unwrap();
        let (p, d) = t.nearest_with(40.71, -74.0, DistanceMetric::Haversine);
        assert_eq!(p.code, "NJ");
        assert!(d > 0.0 && d < 100.0);
        assert!((haversine_km(0.0, 0.0, 0.0, 1.0) - 111.195).abs() < 0.01);
    }
}
