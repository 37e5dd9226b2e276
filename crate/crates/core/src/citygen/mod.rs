//! Random gridded city maps, roadside landmarks and start/goal scenarios.
//!
//! Cities are square lattices of intersections joined by straight road
//! segments. A fraction of interior segments are dead ends (closed at one
//! end, so a vehicle that enters must U-turn at the cap) and a fraction of
//! the rest are one-way. Landmarks are scattered uniformly and snapped onto
//! the nearest road so that a vehicle can actually drive past them.

mod format;

pub use format::{parse_city, write_city};

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector2;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimator::wrap_angle;
use crate::navigation::{IntersectionOption, Turn};
use crate::rng::{rng_from_seed, SimRng};
use crate::{Error, Result};

pub type NodeId = usize;
pub type SegmentId = usize;
pub type LandmarkId = usize;

/// Attempts made by [`sample_start_goal`] before giving up.
pub const MAX_SCENARIO_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CityGenParams {
    /// Edge length of the square map.
    pub map_side_m: f64,
    pub block_size_m: f64,
    /// Fraction of interior segments turned into dead ends.
    pub dead_end_fraction: f64,
    /// Fraction of the remaining segments made one-way.
    pub one_way_fraction: f64,
    /// Landmarks per km².
    pub landmark_density: f64,
    pub seed: u64,
}

impl Default for CityGenParams {
    fn default() -> Self {
        Self {
            map_side_m: 10_000.0,
            block_size_m: 100.0,
            dead_end_fraction: 0.05,
            one_way_fraction: 0.05,
            landmark_density: 0.0,
            seed: 0,
        }
    }
}

impl CityGenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.block_size_m > 0.0) || !self.block_size_m.is_finite() {
            return Err(Error::param("block_size_m", "must be positive"));
        }
        if !(self.map_side_m / self.block_size_m >= 2.0) || !self.map_side_m.is_finite() {
            return Err(Error::param(
                "map_side_m",
                "must span at least two blocks",
            ));
        }
        for (name, f) in [
            ("dead_end_fraction", self.dead_end_fraction),
            ("one_way_fraction", self.one_way_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        if !(self.landmark_density >= 0.0) || !self.landmark_density.is_finite() {
            return Err(Error::param("landmark_density", "must be non-negative"));
        }
        Ok(())
    }

    /// Blocks along one map edge: `round(side / block)`, never fewer than two.
    pub fn blocks_per_side(&self) -> usize {
        ((self.map_side_m / self.block_size_m).round() as usize).max(2)
    }
}

/// Compass direction of a grid road leaving an intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cardinal {
    East,
    North,
    West,
    South,
}

impl Cardinal {
    pub const ALL: [Cardinal; 4] = [Cardinal::East, Cardinal::North, Cardinal::West, Cardinal::South];

    pub fn heading(self) -> f64 {
        match self {
            Cardinal::East => 0.0,
            Cardinal::North => FRAC_PI_2,
            Cardinal::West => PI,
            Cardinal::South => -FRAC_PI_2,
        }
    }

    /// Nearest cardinal direction to `heading` (quadrant bins of ±45°).
    pub fn from_heading(heading: f64) -> Cardinal {
        let k = (wrap_angle(heading) / FRAC_PI_2).round() as i64;
        Cardinal::ALL[k.rem_euclid(4) as usize]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Cardinal {
        Cardinal::ALL[(self.index() + 2) % 4]
    }

    /// Ninety degrees counter-clockwise.
    pub fn left(self) -> Cardinal {
        Cardinal::ALL[(self.index() + 1) % 4]
    }

    pub fn right(self) -> Cardinal {
        Cardinal::ALL[(self.index() + 3) % 4]
    }

    fn step(self) -> (i64, i64) {
        match self {
            Cardinal::East => (1, 0),
            Cardinal::North => (0, 1),
            Cardinal::West => (-1, 0),
            Cardinal::South => (0, -1),
        }
    }
}

/// Which way traffic may use a segment joining endpoints `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Directionality {
    TwoWay,
    OneWayAb,
    OneWayBa,
    /// Dead end closed at `a`: enter from `b`, U-turn at the cap.
    BlockedAtA,
    /// Dead end closed at `b`.
    BlockedAtB,
}

impl Directionality {
    pub fn token(self) -> &'static str {
        match self {
            Directionality::TwoWay => "2W",
            Directionality::OneWayAb => "AB",
            Directionality::OneWayBa => "BA",
            Directionality::BlockedAtA => "XA",
            Directionality::BlockedAtB => "XB",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Some(match token {
            "2W" => Directionality::TwoWay,
            "AB" => Directionality::OneWayAb,
            "BA" => Directionality::OneWayBa,
            "XA" => Directionality::BlockedAtA,
            "XB" => Directionality::BlockedAtB,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadSegment {
    pub id: SegmentId,
    pub a: NodeId,
    pub b: NodeId,
    pub dir: Directionality,
}

impl RoadSegment {
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    /// A vehicle standing at `node` may drive onto this segment.
    pub fn departs_from(&self, node: NodeId) -> bool {
        use Directionality::*;
        let at_a = node == self.a;
        match self.dir {
            TwoWay => true,
            OneWayAb => at_a,
            OneWayBa => !at_a,
            BlockedAtA => !at_a,
            BlockedAtB => at_a,
        }
    }

    /// The segment ends in a dead-end cap at `node`.
    pub fn is_closed_at(&self, node: NodeId) -> bool {
        match self.dir {
            Directionality::BlockedAtA => node == self.a,
            Directionality::BlockedAtB => node == self.b,
            _ => false,
        }
    }

    /// Travel along the segment towards `node` is legal.
    pub fn allows_travel_towards(&self, node: NodeId) -> bool {
        match self.dir {
            Directionality::OneWayAb => node == self.b,
            Directionality::OneWayBa => node == self.a,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: LandmarkId,
    pub position: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityMap {
    pub side_m: f64,
    pub block_m: f64,
    blocks: usize,
    pub intersections: Vec<Intersection>,
    pub segments: Vec<RoadSegment>,
    pub landmarks: Vec<Landmark>,
    links: Vec<[Option<SegmentId>; 4]>,
}

impl CityMap {
    /// Builds the lattice skeleton with every segment two-way.
    fn lattice(side_m: f64, block_m: f64, blocks: usize) -> CityMap {
        let per_side = blocks + 1;
        let mut intersections = Vec::with_capacity(per_side * per_side);
        for j in 0..per_side {
            for i in 0..per_side {
                intersections.push(Intersection {
                    id: j * per_side + i,
                    x: i as f64 * block_m,
                    y: j as f64 * block_m,
                });
            }
        }
        let mut segments = Vec::with_capacity(2 * blocks * per_side);
        let mut links = vec![[None; 4]; per_side * per_side];
        let mut join = |segments: &mut Vec<RoadSegment>, a: NodeId, b: NodeId, dir_ab: Cardinal| {
            let id = segments.len();
            segments.push(RoadSegment {
                id,
                a,
                b,
                dir: Directionality::TwoWay,
            });
            links[a][dir_ab.index()] = Some(id);
            links[b][dir_ab.opposite().index()] = Some(id);
        };
        for j in 0..per_side {
            for i in 0..blocks {
                let a = j * per_side + i;
                join(&mut segments, a, a + 1, Cardinal::East);
            }
        }
        for j in 0..blocks {
            for i in 0..per_side {
                let a = j * per_side + i;
                join(&mut segments, a, a + per_side, Cardinal::North);
            }
        }
        CityMap {
            side_m,
            block_m,
            blocks,
            intersections,
            segments,
            landmarks: Vec::new(),
            links,
        }
    }

    pub fn blocks_per_side(&self) -> usize {
        self.blocks
    }

    pub fn nodes_per_side(&self) -> usize {
        self.blocks + 1
    }

    /// Edge length of the road lattice (`blocks * block_m`).
    pub fn extent_m(&self) -> f64 {
        self.blocks as f64 * self.block_m
    }

    pub fn node_position(&self, id: NodeId) -> Vector2<f64> {
        let n = &self.intersections[id];
        Vector2::new(n.x, n.y)
    }

    /// Segment leaving `node` towards `dir`, if the lattice has one.
    pub fn link(&self, node: NodeId, dir: Cardinal) -> Option<SegmentId> {
        self.links.get(node).and_then(|l| l[dir.index()])
    }

    pub fn segment(&self, id: SegmentId) -> &RoadSegment {
        &self.segments[id]
    }

    pub fn segment_length(&self, id: SegmentId) -> f64 {
        let s = &self.segments[id];
        (self.node_position(s.b) - self.node_position(s.a)).norm()
    }

    /// Heading of travel from `from` to the other end of `seg`.
    pub fn travel_heading(&self, seg: SegmentId, from: NodeId) -> f64 {
        let to = self.segments[seg].other(from);
        let d = self.node_position(to) - self.node_position(from);
        d.y.atan2(d.x)
    }

    /// Point on `seg` at fraction `t` of the way from `a` to `b`.
    pub fn point_on_segment(&self, seg: SegmentId, t: f64) -> Vector2<f64> {
        let s = &self.segments[seg];
        let pa = self.node_position(s.a);
        pa + (self.node_position(s.b) - pa) * t
    }

    /// Closest point on the road network to `p`, with its segment.
    pub fn snap_to_road(&self, p: Vector2<f64>) -> (SegmentId, Vector2<f64>) {
        let b = self.block_m;
        let extent = self.extent_m();
        let x = p.x.clamp(0.0, extent);
        let y = p.y.clamp(0.0, extent);
        let gx = (x / b).round() * b;
        let gy = (y / b).round() * b;
        let snapped = if (y - gy).abs() <= (x - gx).abs() {
            Vector2::new(x, gy)
        } else {
            Vector2::new(gx, y)
        };
        (self.segment_containing(snapped), snapped)
    }

    /// Segment whose span contains a point lying on a grid line.
    fn segment_containing(&self, p: Vector2<f64>) -> SegmentId {
        let b = self.block_m;
        let last = self.blocks as i64 - 1;
        let per_side = self.nodes_per_side();
        let row = (p.y / b).round();
        if (p.y - row * b).abs() < 1e-9 {
            let i = ((p.x / b).floor() as i64).clamp(0, last) as usize;
            let node = row as usize * per_side + i;
            self.links[node][Cardinal::East.index()].expect("lattice row segment")
        } else {
            let col = (p.x / b).round() as usize;
            let j = ((p.y / b).floor() as i64).clamp(0, last) as usize;
            let node = j * per_side + col;
            self.links[node][Cardinal::North.index()].expect("lattice column segment")
        }
    }

    /// Segments that do not lie on the outer boundary ring.
    fn interior_segments(&self) -> Vec<SegmentId> {
        let per_side = self.nodes_per_side();
        self.segments
            .iter()
            .filter(|s| {
                let (ai, aj) = (s.a % per_side, s.a / per_side);
                let (bi, bj) = (s.b % per_side, s.b / per_side);
                if aj == bj {
                    aj != 0 && aj != self.blocks
                } else {
                    ai != 0 && ai != self.blocks && bi == ai
                }
            })
            .map(|s| s.id)
            .collect()
    }

    fn neighbor_node(&self, node: NodeId, dir: Cardinal) -> Option<NodeId> {
        let per_side = self.nodes_per_side() as i64;
        let (i, j) = ((node as i64) % per_side, (node as i64) / per_side);
        let (di, dj) = dir.step();
        let (ni, nj) = (i + di, j + dj);
        if (0..per_side).contains(&ni) && (0..per_side).contains(&nj) {
            Some((nj * per_side + ni) as NodeId)
        } else {
            None
        }
    }

    /// Rebuilds the node-to-segment links from the segment list.
    fn rebuild_links(&mut self) -> Result<()> {
        let mut links = vec![[None; 4]; self.intersections.len()];
        for s in &self.segments {
            let dir = Cardinal::ALL
                .into_iter()
                .find(|&d| self.neighbor_node(s.a, d) == Some(s.b))
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("segment {} does not join lattice neighbours", s.id),
                })?;
            links[s.a][dir.index()] = Some(s.id);
            links[s.b][dir.opposite().index()] = Some(s.id);
        }
        self.links = links;
        Ok(())
    }
}

/// Generates the road lattice with dead ends and one-way streets. Landmarks
/// are added separately by [`place_landmarks`].
pub fn generate_city(params: &CityGenParams) -> Result<CityMap> {
    params.validate()?;
    let blocks = params.blocks_per_side();
    let mut map = CityMap::lattice(params.map_side_m, params.block_size_m, blocks);
    let mut rng = rng_from_seed(params.seed);

    let interior = map.interior_segments();
    let n_dead = (params.dead_end_fraction * interior.len() as f64).round() as usize;
    let mut is_dead = vec![false; map.segments.len()];
    for k in index::sample(&mut rng, interior.len(), n_dead).into_vec() {
        let id = interior[k];
        is_dead[id] = true;
        map.segments[id].dir = if rng.random_bool(0.5) {
            Directionality::BlockedAtA
        } else {
            Directionality::BlockedAtB
        };
    }

    let remaining: Vec<SegmentId> = (0..map.segments.len()).filter(|&id| !is_dead[id]).collect();
    let n_one_way = (params.one_way_fraction * remaining.len() as f64).round() as usize;
    for k in index::sample(&mut rng, remaining.len(), n_one_way).into_vec() {
        let id = remaining[k];
        map.segments[id].dir = if rng.random_bool(0.5) {
            Directionality::OneWayAb
        } else {
            Directionality::OneWayBa
        };
    }
    Ok(map)
}

/// Scatters `round(density * area)` landmarks uniformly over the map and
/// snaps each onto the nearest road. Positions are drawn in sequence, so for
/// a fixed seed a lower density yields a prefix of a higher density's set.
pub fn place_landmarks(mut map: CityMap, density_per_km2: f64, seed: u64) -> CityMap {
    let area_km2 = map.side_m * map.side_m / 1.0e6;
    let count = (density_per_km2.max(0.0) * area_km2).round() as usize;
    let extent = map.extent_m();
    let mut rng = rng_from_seed(seed);
    map.landmarks = (0..count)
        .map(|id| {
            let p = Vector2::new(rng.random::<f64>() * extent, rng.random::<f64>() * extent);
            let (_, position) = map.snap_to_road(p);
            Landmark { id, position }
        })
        .collect();
    map
}

/// Turning options at `node` for a vehicle arriving with `approach_heading`.
///
/// Options are ordered straight, right, left. A U-turn is offered only when
/// it is the sole legal exit, which always holds at a dead-end cap.
pub fn intersection_options(
    map: &CityMap,
    node: NodeId,
    approach_heading: f64,
) -> Result<Vec<IntersectionOption>> {
    if node >= map.intersections.len() {
        return Err(Error::UnknownIntersection(node));
    }
    let travel = Cardinal::from_heading(approach_heading);
    let incoming = map.link(node, travel.opposite()).ok_or(Error::NotAligned(node))?;
    let incoming_seg = map.segment(incoming);

    let mut options = Vec::with_capacity(3);
    let push = |options: &mut Vec<IntersectionOption>, seg: SegmentId, dir: Cardinal, turn: Turn| {
        options.push(IntersectionOption {
            index: options.len(),
            heading: dir.heading(),
            exit_segment: seg,
            next: map.segment(seg).other(node),
            turn,
        });
    };

    if !incoming_seg.is_closed_at(node) {
        for (dir, turn) in [
            (travel, Turn::Straight),
            (travel.right(), Turn::Right),
            (travel.left(), Turn::Left),
        ] {
            if let Some(seg) = map.link(node, dir) {
                if map.segment(seg).departs_from(node) {
                    push(&mut options, seg, dir, turn);
                }
            }
        }
    }
    if options.is_empty() {
        if incoming_seg.departs_from(node) || incoming_seg.is_closed_at(node) {
            push(&mut options, incoming, travel.opposite(), Turn::UTurn);
        } else {
            return Err(Error::NoExit(node));
        }
    }
    Ok(options)
}

/// Segments a vehicle can drive along, starting on `segment` heading to
/// `toward`, when it only takes legal intersection options. The start
/// segment itself is marked only if it is reached again.
pub fn reachable_segments(map: &CityMap, segment: SegmentId, toward: NodeId) -> Vec<bool> {
    let mut reached = vec![false; map.segments.len()];
    let mut seen = vec![[false; 4]; map.intersections.len()];
    let mut queue = VecDeque::new();
    let start_heading = map.travel_heading(segment, map.segment(segment).other(toward));
    queue.push_back((toward, Cardinal::from_heading(start_heading)));
    seen[toward][Cardinal::from_heading(start_heading).index()] = true;
    while let Some((node, arrival)) = queue.pop_front() {
        let Ok(options) = intersection_options(map, node, arrival.heading()) else {
            continue;
        };
        for o in options {
            reached[o.exit_segment] = true;
            let dir = Cardinal::from_heading(o.heading);
            if !seen[o.next][dir.index()] {
                seen[o.next][dir.index()] = true;
                queue.push_back((o.next, dir));
            }
        }
    }
    reached
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// A start pose on a road and a reachable goal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub start: Pose2,
    pub start_segment: SegmentId,
    /// Node the vehicle is initially driving towards.
    pub start_toward: NodeId,
    pub goal: Vector2<f64>,
    pub goal_segment: SegmentId,
    pub euclidean_start_goal_m: f64,
}

/// Samples a start pose and goal whose Euclidean separation lies in
/// `[min_euclid_m, max_euclid_m]` and whose goal can be reached through the
/// directed road graph.
pub fn sample_start_goal(map: &CityMap, min_euclid_m: f64, max_euclid_m: f64, seed: u64) -> Result<Scenario> {
    let mut rng = rng_from_seed(seed);
    sample_start_goal_with(map, min_euclid_m, max_euclid_m, &mut rng)
}

pub fn sample_start_goal_with(
    map: &CityMap,
    min_euclid_m: f64,
    max_euclid_m: f64,
    rng: &mut SimRng,
) -> Result<Scenario> {
    for _ in 0..MAX_SCENARIO_ATTEMPTS {
        let start_segment = rng.random_range(0..map.segments.len());
        let start_t = rng.random_range(0.25..0.75);
        let start = map.point_on_segment(start_segment, start_t);
        let goal_segment = rng.random_range(0..map.segments.len());
        let goal = map.point_on_segment(goal_segment, rng.random::<f64>());
        let euclid = (goal - start).norm();
        if euclid < min_euclid_m || euclid > max_euclid_m {
            continue;
        }

        let seg = map.segment(start_segment);
        let bearing = (goal.y - start.y).atan2(goal.x - start.x);
        let mut candidates: Vec<(NodeId, f64)> = [seg.a, seg.b]
            .into_iter()
            .filter(|&n| seg.allows_travel_towards(n))
            .map(|n| (n, map.travel_heading(start_segment, seg.other(n))))
            .collect();
        candidates.sort_by(|a, b| {
            wrap_angle(a.1 - bearing)
                .abs()
                .total_cmp(&wrap_angle(b.1 - bearing).abs())
        });
        for (toward, heading) in candidates {
            if goal_is_reachable(map, start_segment, toward, start, goal_segment, goal) {
                return Ok(Scenario {
                    start: Pose2 {
                        x: start.x,
                        y: start.y,
                        theta: heading,
                    },
                    start_segment,
                    start_toward: toward,
                    goal,
                    goal_segment,
                    euclidean_start_goal_m: euclid,
                });
            }
        }
    }
    Err(Error::InfeasibleBand {
        min_m: min_euclid_m,
        max_m: max_euclid_m,
        attempts: MAX_SCENARIO_ATTEMPTS,
    })
}

/// Draws a new goal for a vehicle currently on `segment` heading to
/// `toward` at `position`. Used for chained-goal runs.
pub fn sample_next_goal(
    map: &CityMap,
    segment: SegmentId,
    toward: NodeId,
    position: Vector2<f64>,
    min_euclid_m: f64,
    max_euclid_m: f64,
    rng: &mut SimRng,
) -> Result<(SegmentId, Vector2<f64>)> {
    let reached = reachable_segments(map, segment, toward);
    for _ in 0..MAX_SCENARIO_ATTEMPTS {
        let goal_segment = rng.random_range(0..map.segments.len());
        let goal = map.point_on_segment(goal_segment, rng.random::<f64>());
        let euclid = (goal - position).norm();
        if euclid < min_euclid_m || euclid > max_euclid_m {
            continue;
        }
        if reached[goal_segment] || ahead_on_segment(map, segment, toward, position, goal_segment, goal) {
            return Ok((goal_segment, goal));
        }
    }
    Err(Error::InfeasibleBand {
        min_m: min_euclid_m,
        max_m: max_euclid_m,
        attempts: MAX_SCENARIO_ATTEMPTS,
    })
}

fn ahead_on_segment(
    map: &CityMap,
    segment: SegmentId,
    toward: NodeId,
    position: Vector2<f64>,
    goal_segment: SegmentId,
    goal: Vector2<f64>,
) -> bool {
    if goal_segment != segment {
        return false;
    }
    let to = map.node_position(toward);
    (to - goal).norm() <= (to - position).norm()
}

fn goal_is_reachable(
    map: &CityMap,
    segment: SegmentId,
    toward: NodeId,
    start: Vector2<f64>,
    goal_segment: SegmentId,
    goal: Vector2<f64>,
) -> bool {
    ahead_on_segment(map, segment, toward, start, goal_segment, goal)
        || reachable_segments(map, segment, toward)[goal_segment]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(side: f64, block: f64) -> CityGenParams {
        CityGenParams {
            map_side_m: side,
            block_size_m: block,
            dead_end_fraction: 0.0,
            one_way_fraction: 0.0,
            landmark_density: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn lattice_dimensions() {
        let map = generate_city(&params(1000.0, 100.0)).unwrap();
        assert_eq!(map.intersections.len(), 121);
        assert_eq!(map.blocks_per_side(), 10);
        assert_eq!(map.segments.len(), 2 * 10 * 11);

        // round(1000 / 300) = 3 blocks, 4 x 4 intersections
        let map = generate_city(&params(1000.0, 300.0)).unwrap();
        assert_eq!(map.nodes_per_side(), 4);
        assert_eq!(map.intersections.len(), 16);
        assert_eq!(map.extent_m(), 900.0);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(generate_city(&params(150.0, 100.0)).is_err());
        let mut p = params(1000.0, 100.0);
        p.one_way_fraction = 1.5;
        assert!(generate_city(&p).is_err());
        p.one_way_fraction = 0.0;
        p.landmark_density = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let p = CityGenParams {
            dead_end_fraction: 0.1,
            one_way_fraction: 0.2,
            seed: 99,
            ..params(2000.0, 100.0)
        };
        assert_eq!(generate_city(&p).unwrap(), generate_city(&p).unwrap());
        let other = CityGenParams { seed: 100, ..p.clone() };
        assert_ne!(generate_city(&p).unwrap(), generate_city(&other).unwrap());
    }

    #[test]
    fn fractions_are_applied_to_the_right_sets() {
        let p = CityGenParams {
            dead_end_fraction: 0.1,
            one_way_fraction: 0.2,
            seed: 5,
            ..params(1000.0, 100.0)
        };
        let map = generate_city(&p).unwrap();
        let interior = map.interior_segments();
        assert_eq!(interior.len(), 2 * 9 * 10);
        let dead: Vec<_> = map
            .segments
            .iter()
            .filter(|s| matches!(s.dir, Directionality::BlockedAtA | Directionality::BlockedAtB))
            .collect();
        assert_eq!(dead.len(), 18);
        assert!(dead.iter().all(|s| interior.contains(&s.id)));
        let one_way = map
            .segments
            .iter()
            .filter(|s| matches!(s.dir, Directionality::OneWayAb | Directionality::OneWayBa))
            .count();
        assert_eq!(one_way, ((220 - 18) as f64 * 0.2).round() as usize);
    }

    #[test]
    fn landmark_counts_follow_rounding() {
        let map = generate_city(&params(1000.0, 100.0)).unwrap();
        assert_eq!(place_landmarks(map.clone(), 10.0, 1).landmarks.len(), 10);
        assert_eq!(place_landmarks(map.clone(), 0.0, 1).landmarks.len(), 0);
        assert_eq!(place_landmarks(map.clone(), 0.55, 1).landmarks.len(), 1);
    }

    #[test]
    fn landmarks_lie_on_roads_inside_bounds() {
        let map = place_landmarks(generate_city(&params(2000.0, 150.0)).unwrap(), 25.0, 4);
        let b = map.block_m;
        for l in &map.landmarks {
            let p = l.position;
            assert!(p.x >= 0.0 && p.x <= map.extent_m() && p.y >= 0.0 && p.y <= map.extent_m());
            let on_row = (p.y / b - (p.y / b).round()).abs() < 1e-9;
            let on_col = (p.x / b - (p.x / b).round()).abs() < 1e-9;
            assert!(on_row || on_col, "{p:?} off road");
        }
        let ids: std::collections::BTreeSet<_> = map.landmarks.iter().map(|l| l.id).collect();
        assert_eq!(ids.len(), map.landmarks.len());
    }

    #[test]
    fn landmark_sets_are_nested_across_densities() {
        let map = generate_city(&params(2000.0, 100.0)).unwrap();
        let sparse = place_landmarks(map.clone(), 1.0, 8);
        let dense = place_landmarks(map, 5.0, 8);
        assert_eq!(&dense.landmarks[..sparse.landmarks.len()], &sparse.landmarks[..]);
    }

    fn node(map: &CityMap, i: usize, j: usize) -> NodeId {
        j * map.nodes_per_side() + i
    }

    #[test]
    fn four_way_options_from_south() {
        let map = generate_city(&params(1000.0, 100.0)).unwrap();
        let opts = intersection_options(&map, node(&map, 5, 5), FRAC_PI_2).unwrap();
        let summary: Vec<_> = opts.iter().map(|o| (o.turn, o.heading)).collect();
        assert_eq!(
            summary,
            vec![(Turn::Straight, FRAC_PI_2), (Turn::Right, 0.0), (Turn::Left, PI)]
        );
        assert!(opts.iter().enumerate().all(|(i, o)| o.index == i));
    }

    #[test]
    fn one_way_inbound_exit_is_dropped() {
        let mut map = generate_city(&params(1000.0, 100.0)).unwrap();
        let n = node(&map, 5, 5);
        let north = map.link(n, Cardinal::North).unwrap();
        // a is the southern endpoint, so AB traffic flows north; BA is inbound at n.
        map.segments[north].dir = Directionality::OneWayBa;
        let opts = intersection_options(&map, n, FRAC_PI_2).unwrap();
        let turns: Vec<_> = opts.iter().map(|o| o.turn).collect();
        assert_eq!(turns, vec![Turn::Right, Turn::Left]);
    }

    #[test]
    fn dead_end_cap_only_allows_u_turn() {
        let mut map = generate_city(&params(1000.0, 100.0)).unwrap();
        let n = node(&map, 5, 5);
        let south = map.link(n, Cardinal::South).unwrap();
        map.segments[south].dir = Directionality::BlockedAtB;
        let opts = intersection_options(&map, n, FRAC_PI_2).unwrap();
        assert_eq!(opts.len(), 1);
        assert_eq!(opts[0].turn, Turn::UTurn);
        assert_eq!(opts[0].heading, -FRAC_PI_2);
        assert_eq!(opts[0].next, node(&map, 5, 4));
    }

    #[test]
    fn corner_without_exit_is_an_error() {
        let mut map = generate_city(&params(1000.0, 100.0)).unwrap();
        let corner = node(&map, 0, 0);
        let east = map.link(corner, Cardinal::East).unwrap();
        let north = map.link(corner, Cardinal::North).unwrap();
        map.segments[east].dir = Directionality::OneWayBa;
        map.segments[north].dir = Directionality::OneWayBa;
        // arriving southbound along the inbound one-way
        assert_eq!(intersection_options(&map, corner, -FRAC_PI_2), Err(Error::NoExit(corner)));
        assert!(matches!(
            intersection_options(&map, 10_000, 0.0),
            Err(Error::UnknownIntersection(_))
        ));
    }

    #[test]
    fn forced_u_turn_on_two_way_approach() {
        let mut map = generate_city(&params(1000.0, 100.0)).unwrap();
        let corner = node(&map, 0, 0);
        let north = map.link(corner, Cardinal::North).unwrap();
        map.segments[north].dir = Directionality::OneWayBa;
        // arriving westbound; only exit north is inbound, so turn back east
        let opts = intersection_options(&map, corner, PI).unwrap();
        assert_eq!(opts.len(), 1);
        assert_eq!(opts[0].turn, Turn::UTurn);
        assert_eq!(opts[0].heading, 0.0);
    }

    #[test]
    fn cardinal_bins() {
        assert_eq!(Cardinal::from_heading(0.3), Cardinal::East);
        assert_eq!(Cardinal::from_heading(1.2), Cardinal::North);
        assert_eq!(Cardinal::from_heading(-3.0), Cardinal::West);
        assert_eq!(Cardinal::from_heading(-1.7), Cardinal::South);
        assert_eq!(Cardinal::East.left(), Cardinal::North);
        assert_eq!(Cardinal::East.right(), Cardinal::South);
    }

    #[test]
    fn scenario_respects_band() {
        let p = CityGenParams {
            dead_end_fraction: 0.05,
            one_way_fraction: 0.05,
            ..params(10_000.0, 100.0)
        };
        let map = generate_city(&p).unwrap();
        for seed in 0..20 {
            let s = sample_start_goal(&map, 900.0, 1100.0, seed).unwrap();
            let d = (s.goal - Vector2::new(s.start.x, s.start.y)).norm();
            assert!((900.0..=1100.0).contains(&d));
            assert_eq!(d, s.euclidean_start_goal_m);
            let seg = map.segment(s.start_segment);
            assert!(seg.allows_travel_towards(s.start_toward));
            let h = map.travel_heading(s.start_segment, seg.other(s.start_toward));
            assert_eq!(h, s.start.theta);
        }
        assert!(sample_start_goal(&map, 0.0, f64::INFINITY, 1).is_ok());
    }

    #[test]
    fn infeasible_band_fails() {
        let map = generate_city(&params(1000.0, 100.0)).unwrap();
        assert!(matches!(
            sample_start_goal(&map, 5000.0, 6000.0, 1),
            Err(Error::InfeasibleBand { .. })
        ));
    }
}
