//! Manhattan road grid and vehicle motion.
//!
//! Roads run between the outermost intersections, so the network is a closed
//! grid: a vehicle reaching a boundary intersection is forced to turn onto a
//! road that stays inside the coverage area. Each road carries two lanes, one
//! per direction, with right-hand traffic. Vehicles move along lane
//! centerlines and turn at the crossing point of the two centerlines involved.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ON_LANE_TOL: f64 = 1e-6;

/// Turn probabilities at an intersection, in the order straight, left, right.
pub const TURN_WEIGHTS: [f64; 3] = [0.5, 0.25, 0.25];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn l1_distance(self, other: Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Horizontal roads have constant `y`, vertical roads constant `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Road {
    pub axis: Axis,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Heading {
    North,
    South,
    East,
    West,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Turn {
    Straight,
    Left,
    Right,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::South, Heading::East, Heading::West];

    pub fn axis(self) -> Axis {
        match self {
            Heading::East | Heading::West => Axis::Horizontal,
            Heading::North | Heading::South => Axis::Vertical,
        }
    }

    /// Direction of travel along the heading's axis.
    pub fn sign(self) -> f64 {
        match self {
            Heading::East | Heading::North => 1.0,
            Heading::West | Heading::South => -1.0,
        }
    }

    pub fn turned(self, turn: Turn) -> Heading {
        use Heading::*;
        match (self, turn) {
            (h, Turn::Straight) => h,
            (East, Turn::Left) | (West, Turn::Right) => North,
            (East, Turn::Right) | (West, Turn::Left) => South,
            (North, Turn::Left) | (South, Turn::Right) => West,
            (North, Turn::Right) | (South, Turn::Left) => East,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lane {
    pub road_index: usize,
    pub heading: Heading,
}

impl Lane {
    pub fn road(self) -> Road {
        Road {
            axis: self.heading.axis(),
            index: self.road_index,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub side_length_m: f64,
    pub intersections_per_axis: usize,
    pub lane_width_m: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            side_length_m: 250.0,
            intersections_per_axis: 3,
            lane_width_m: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadMap {
    pub side_length_m: f64,
    pub num_intersections_per_axis: usize,
    pub lane_width_m: f64,
    /// Road center coordinates, shared by both axes.
    centers: Vec<f64>,
}

/// Builds the grid. Intersections sit at `side * (i + 0.5) / n` on each axis.
pub fn build_map(cfg: &MapConfig) -> Result<RoadMap> {
    let side = cfg.side_length_m;
    let n = cfg.intersections_per_axis;
    let w = cfg.lane_width_m;
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::InvalidMap(format!("side length must be positive, got {side}")));
    }
    if n < 2 {
        return Err(Error::InvalidMap(format!(
            "need at least 2 intersections per axis, got {n}"
        )));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::InvalidMap(format!("lane width must be positive, got {w}")));
    }
    let spacing = side / n as f64;
    if w >= spacing {
        return Err(Error::InvalidMap(format!(
            "lane width {w} m does not fit the road spacing {spacing} m"
        )));
    }
    let centers = (0..n).map(|i| side * (i as f64 + 0.5) / n as f64).collect();
    Ok(RoadMap {
        side_length_m: side,
        num_intersections_per_axis: n,
        lane_width_m: w,
        centers,
    })
}

impl RoadMap {
    pub const LANES_PER_ROAD: usize = 2;

    pub fn road_centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn spacing(&self) -> f64 {
        self.side_length_m / self.num_intersections_per_axis as f64
    }

    pub fn roads(&self) -> Vec<Road> {
        [Axis::Horizontal, Axis::Vertical]
            .into_iter()
            .flat_map(|axis| (0..self.centers.len()).map(move |index| Road { axis, index }))
            .collect()
    }

    pub fn lanes(&self) -> Vec<Lane> {
        let mut lanes = Vec::with_capacity(4 * self.centers.len());
        for road_index in 0..self.centers.len() {
            for heading in Heading::ALL {
                lanes.push(Lane { road_index, heading });
            }
        }
        lanes
    }

    /// Offset of a lane centerline from its road center.
    fn lane_offset(&self, heading: Heading) -> f64 {
        let half = self.lane_width_m / 2.0;
        match heading {
            Heading::East | Heading::South => -half,
            Heading::West | Heading::North => half,
        }
    }

    /// The constant coordinate of a lane centerline.
    pub fn lane_coordinate(&self, lane: Lane) -> f64 {
        self.centers[lane.road_index] + self.lane_offset(lane.heading)
    }

    /// Along-axis extent of every lane.
    pub fn lane_extent(&self) -> (f64, f64) {
        let half = self.lane_width_m / 2.0;
        (self.centers[0] - half, self.centers[self.centers.len() - 1] + half)
    }

    pub fn lane_point(&self, lane: Lane, along: f64) -> Point {
        let fixed = self.lane_coordinate(lane);
        match lane.heading.axis() {
            Axis::Horizontal => Point::new(along, fixed),
            Axis::Vertical => Point::new(fixed, along),
        }
    }

    pub fn intersection(&self, vertical_index: usize, horizontal_index: usize) -> Point {
        Point::new(self.centers[vertical_index], self.centers[horizontal_index])
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.side_length_m).contains(&p.x) && (0.0..=self.side_length_m).contains(&p.y)
    }

    /// Roads whose lane centerlines pass through `p` (two at a crossing point).
    pub fn roads_at(&self, p: Point) -> Vec<Road> {
        let (lo, hi) = self.lane_extent();
        let within = |v: f64| v >= lo - ON_LANE_TOL && v <= hi + ON_LANE_TOL;
        let mut roads = Vec::new();
        for (index, &c) in self.centers.iter().enumerate() {
            let on_offsets = |v: f64| {
                (v - (c - self.lane_width_m / 2.0)).abs() <= ON_LANE_TOL
                    || (v - (c + self.lane_width_m / 2.0)).abs() <= ON_LANE_TOL
            };
            if on_offsets(p.y) && within(p.x) {
                roads.push(Road { axis: Axis::Horizontal, index });
            }
            if on_offsets(p.x) && within(p.y) {
                roads.push(Road { axis: Axis::Vertical, index });
            }
        }
        roads
    }

    /// Index of the next perpendicular road strictly ahead of `along`.
    fn next_crossing(&self, heading: Heading, along: f64) -> Option<usize> {
        let s = heading.sign();
        let half = self.lane_width_m / 2.0;
        let ahead = |c: f64| (c - along) * s > half + 1e-9;
        if s > 0.0 {
            self.centers.iter().position(|&c| ahead(c))
        } else {
            self.centers.iter().rposition(|&c| ahead(c))
        }
    }

    /// Whether a maneuver at the crossing of `lane` with perpendicular road
    /// `cross` leaves the vehicle on a road segment inside the grid.
    fn turn_available(&self, lane: Lane, cross: usize, turn: Turn) -> bool {
        let n = self.centers.len() as isize;
        let new_heading = lane.heading.turned(turn);
        // Index, along the new axis, of the intersection being left.
        let from = if turn == Turn::Straight { cross } else { lane.road_index } as isize;
        let next = from + new_heading.sign() as isize;
        (0..n).contains(&next)
    }
}

/// A recorded intersection maneuver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub heading_in: Heading,
    pub turn: Turn,
    /// All three maneuvers were available.
    pub interior: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub position: Point,
    pub arc_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct PendingTurn {
    cross: usize,
    turn: Turn,
    interior: bool,
}

/// A vehicle head (the vRx) and the recent polyline it traced.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleTrace {
    pub lane: Lane,
    pub along: f64,
    /// Oldest first; the last element is always the head.
    pub path_history: VecDeque<PathPoint>,
    /// History kept behind the head, beyond the most recent step.
    pub trail_m: f64,
    pending: Option<PendingTurn>,
}

impl VehicleTrace {
    /// A vehicle at `along` on `lane` whose history is a straight back-extension
    /// of `trail_m` meters along the same lane.
    pub fn spawn(map: &RoadMap, lane: Lane, along: f64, trail_m: f64) -> Self {
        let head = map.lane_point(lane, along);
        let tail = map.lane_point(lane, along - lane.heading.sign() * trail_m);
        let mut path_history = VecDeque::with_capacity(4);
        path_history.push_back(PathPoint { position: tail, arc_m: 0.0 });
        path_history.push_back(PathPoint { position: head, arc_m: trail_m });
        Self {
            lane,
            along,
            path_history,
            trail_m,
            pending: None,
        }
    }

    /// Uniform placement over the lane positions whose straight back-extension
    /// stays on the lane.
    pub fn random_spawn<R: Rng + ?Sized>(map: &RoadMap, trail_m: f64, rng: &mut R) -> Result<Self> {
        let centers = map.road_centers();
        let span = centers[centers.len() - 1] - centers[0];
        if trail_m < 0.0 || trail_m >= span {
            return Err(Error::InvalidMap(format!(
                "pair distance {trail_m} m must be below the grid span {span} m"
            )));
        }
        let lanes = map.lanes();
        let lane = lanes[rng.random_range(0..lanes.len())];
        let (lo, hi) = map.lane_extent();
        let half = map.lane_width_m / 2.0;
        let u: f64 = rng.random();
        let along = if lane.heading.sign() > 0.0 {
            let (a, b) = (lo + trail_m, centers[centers.len() - 1] - half);
            a + u * (b - a)
        } else {
            let (a, b) = (centers[0] + half, hi - trail_m);
            b - u * (b - a)
        };
        Ok(Self::spawn(map, lane, along, trail_m))
    }

    pub fn head_position(&self) -> Point {
        self.path_history.back().expect("history is never empty").position
    }

    pub fn heading(&self) -> Heading {
        self.lane.heading
    }

    pub fn head_arc(&self) -> f64 {
        self.path_history.back().expect("history is never empty").arc_m
    }

    /// Arc length covered by the stored history.
    pub fn history_length(&self) -> f64 {
        self.head_arc() - self.path_history.front().expect("history is never empty").arc_m
    }

    /// Moves the head `distance` meters along the lanes, drawing a maneuver for
    /// each intersection as it comes up. Executed maneuvers are appended to `log`.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        map: &RoadMap,
        distance: f64,
        rng: &mut R,
        mut log: Option<&mut Vec<Crossing>>,
    ) {
        if distance <= 0.0 {
            return;
        }
        let mut head_arc = self.head_arc();
        self.path_history.pop_back();
        let mut remaining = distance;
        while remaining > 0.0 {
            let pending = match self.pending {
                Some(p) => p,
                None => {
                    let cross = map
                        .next_crossing(self.lane.heading, self.along)
                        .expect("lanes always end at an intersection");
                    let p = draw_turn(map, self.lane, cross, rng);
                    self.pending = Some(p);
                    p
                }
            };
            let s = self.lane.heading.sign();
            let center = map.road_centers()[pending.cross];
            let new_heading = self.lane.heading.turned(pending.turn);
            let event = if pending.turn == Turn::Straight {
                center
            } else {
                center + map.lane_offset(new_heading)
            };
            let gap = (event - self.along) * s;
            if gap > remaining {
                self.along += s * remaining;
                head_arc += remaining;
                remaining = 0.0;
            } else {
                remaining -= gap;
                head_arc += gap;
                self.along = event;
                let heading_in = self.lane.heading;
                if pending.turn != Turn::Straight {
                    let corner = map.lane_point(self.lane, event);
                    self.path_history.push_back(PathPoint { position: corner, arc_m: head_arc });
                    let fixed = map.lane_coordinate(self.lane);
                    self.lane = Lane { road_index: pending.cross, heading: new_heading };
                    self.along = fixed;
                }
                if let Some(log) = log.as_deref_mut() {
                    log.push(Crossing { heading_in, turn: pending.turn, interior: pending.interior });
                }
                self.pending = None;
            }
        }
        let head = map.lane_point(self.lane, self.along);
        self.path_history.push_back(PathPoint { position: head, arc_m: head_arc });
        let retain = self.trail_m + distance;
        while self.path_history.len() > 2 && self.path_history[1].arc_m <= head_arc - retain {
            self.path_history.pop_front();
        }
    }
}

fn draw_turn<R: Rng + ?Sized>(map: &RoadMap, lane: Lane, cross: usize, rng: &mut R) -> PendingTurn {
    let options = [Turn::Straight, Turn::Left, Turn::Right];
    let available = options.map(|t| map.turn_available(lane, cross, t));
    let total: f64 = TURN_WEIGHTS
        .iter()
        .zip(available)
        .filter_map(|(w, ok)| ok.then_some(*w))
        .sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for ((turn, w), ok) in options.into_iter().zip(TURN_WEIGHTS).zip(available) {
        if !ok {
            continue;
        }
        acc += w;
        chosen = Some(turn);
        if u < acc {
            break;
        }
    }
    PendingTurn {
        cross,
        turn: chosen.expect("a closed grid always offers a maneuver"),
        interior: available.iter().all(|&a| a),
    }
}

/// Advances a copy of `trace` by one slot at constant speed.
pub fn step_vehicle<R: Rng + ?Sized>(
    map: &RoadMap,
    trace: &VehicleTrace,
    speed_mps: f64,
    slot_s: f64,
    rng: &mut R,
) -> VehicleTrace {
    let mut next = trace.clone();
    next.advance(map, speed_mps * slot_s, rng, None);
    next
}

/// The point `ell_m` meters of arc length behind the head.
pub fn place_vtx(trace: &VehicleTrace, ell_m: f64) -> Result<Point> {
    let hist = &trace.path_history;
    let head = hist.back().expect("history is never empty");
    let target = head.arc_m - ell_m;
    let front = hist.front().expect("history is never empty");
    if target < front.arc_m - 1e-9 {
        return Err(Error::InsufficientHistory {
            available_m: head.arc_m - front.arc_m,
            required_m: ell_m,
        });
    }
    for pair in (0..hist.len() - 1).rev() {
        let (a, b) = (hist[pair], hist[pair + 1]);
        if target >= a.arc_m {
            let len = b.arc_m - a.arc_m;
            let t = if len > 0.0 { ((target - a.arc_m) / len).clamp(0.0, 1.0) } else { 0.0 };
            return Ok(a.position.lerp(b.position, t));
        }
    }
    Ok(front.position)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VuePairGeometry {
    pub vtx_position: Point,
    pub vrx_position: Point,
    pub pair_distance_m: f64,
    pub midpoint: Point,
}

impl VuePairGeometry {
    pub fn from_trace(trace: &VehicleTrace, ell_m: f64) -> Result<Self> {
        let vtx = place_vtx(trace, ell_m)?;
        let vrx = trace.head_position();
        Ok(Self {
            vtx_position: vtx,
            vrx_position: vrx,
            pair_distance_m: ell_m,
            midpoint: vtx.midpoint(vrx),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkClass {
    Los,
    Wlos,
    Nlos,
}

/// LOS when both ends share a road, WLOS when they sit on perpendicular roads
/// with at least one end within `ell0_m` of the shared intersection center,
/// NLOS otherwise.
pub fn classify_link(map: &RoadMap, vtx_pos: Point, vrx_pos: Point, ell0_m: f64) -> Result<LinkClass> {
    let tx_roads = map.roads_at(vtx_pos);
    if tx_roads.is_empty() {
        return Err(Error::OffRoad { x: vtx_pos.x, y: vtx_pos.y });
    }
    let rx_roads = map.roads_at(vrx_pos);
    if rx_roads.is_empty() {
        return Err(Error::OffRoad { x: vrx_pos.x, y: vrx_pos.y });
    }
    if tx_roads.iter().any(|r| rx_roads.contains(r)) {
        return Ok(LinkClass::Los);
    }
    for a in &tx_roads {
        for b in &rx_roads {
            if a.axis == b.axis {
                continue;
            }
            let (v, h) = if a.axis == Axis::Vertical { (a.index, b.index) } else { (b.index, a.index) };
            let center = map.intersection(v, h);
            if vtx_pos.distance(center).min(vrx_pos.distance(center)) <= ell0_m {
                return Ok(LinkClass::Wlos);
            }
        }
    }
    Ok(LinkClass::Nlos)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn default_map() -> RoadMap {
        build_map(&MapConfig::default()).unwrap()
    }

    #[test]
    fn default_map_layout() {
        let map = default_map();
        assert_eq!(map.roads().len(), 6);
        assert_eq!(map.lanes().len(), 12);
        for lane in map.lanes() {
            let (lo, hi) = map.lane_extent();
            assert!(map.contains(map.lane_point(lane, lo)));
            assert!(map.contains(map.lane_point(lane, hi)));
        }
    }

    #[test]
    fn minimal_and_invalid_maps() {
        let tiny = MapConfig { side_length_m: 1.0, intersections_per_axis: 2, lane_width_m: 0.1 };
        assert_eq!(build_map(&tiny).unwrap().lanes().len(), 8);
        let zero_lane = MapConfig { lane_width_m: 0.0, ..MapConfig::default() };
        assert!(matches!(build_map(&zero_lane), Err(Error::InvalidMap(_))));
        let wide = MapConfig { lane_width_m: 90.0, ..MapConfig::default() };
        assert!(build_map(&wide).is_err());
        let one = MapConfig { intersections_per_axis: 1, ..MapConfig::default() };
        assert!(build_map(&one).is_err());
        let negative = MapConfig { side_length_m: -3.0, ..MapConfig::default() };
        assert!(build_map(&negative).is_err());
    }

    #[test]
    fn mid_block_step_moves_five_centimeters_east() {
        let map = default_map();
        let lane = Lane { road_index: 1, heading: Heading::East };
        let trace = VehicleTrace::spawn(&map, lane, 80.0, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let speed = 60.0 / 3.6;
        let next = step_vehicle(&map, &trace, speed, 0.003, &mut rng);
        let before = trace.head_position();
        let after = next.head_position();
        assert!((after.x - before.x - 0.05).abs() < 1e-12);
        assert_eq!(after.y, before.y);
    }

    #[test]
    fn zero_speed_leaves_trace_unchanged() {
        let map = default_map();
        let lane = Lane { road_index: 0, heading: Heading::North };
        let trace = VehicleTrace::spawn(&map, lane, 90.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(step_vehicle(&map, &trace, 0.0, 0.003, &mut rng), trace);
    }

    #[test]
    fn seeded_turn_is_reproducible() {
        let map = default_map();
        let lane = Lane { road_index: 1, heading: Heading::East };
        let trace = VehicleTrace::spawn(&map, lane, 120.0, 30.0);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            step_vehicle(&map, &trace, 10.0, 1.0, &mut rng)
        };
        assert_eq!(run(4), run(4));
    }

    #[test]
    fn straight_history_offset() {
        let map = default_map();
        let lane = Lane { road_index: 0, heading: Heading::East };
        let mut trace = VehicleTrace::spawn(&map, lane, 100.0, 60.0);
        // Put the lane at y = 4 for the example geometry.
        for p in trace.path_history.iter_mut() {
            p.position.y = 4.0;
        }
        let vtx = place_vtx(&trace, 50.0).unwrap();
        assert!((vtx.x - 50.0).abs() < 1e-12 && (vtx.y - 4.0).abs() < 1e-12);
        assert_eq!(place_vtx(&trace, 0.0).unwrap(), trace.head_position());
        assert!(matches!(
            place_vtx(&trace, 61.0),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    /// Walks back `ell` meters over an explicit polyline.
    fn walk_back(points: &[Point], ell: f64) -> Point {
        let mut left = ell;
        for w in points.windows(2).rev() {
            let seg = w[0].distance(w[1]);
            if left <= seg {
                let t = left / seg;
                return Point::new(w[1].x + (w[0].x - w[1].x) * t, w[1].y + (w[0].y - w[1].y) * t);
            }
            left -= seg;
        }
        points[0]
    }

    #[test]
    fn vtx_behind_a_right_turn() {
        let map = default_map();
        let centers = map.road_centers().to_vec();
        // Eastbound on horizontal road 1, right turn south at vertical road 1.
        let east = Lane { road_index: 1, heading: Heading::East };
        let corner_x = centers[1] - 2.0;
        let start = corner_x - 50.0;
        let mut trace = VehicleTrace::spawn(&map, east, start, 60.0);
        // Force the right turn.
        trace.pending = Some(PendingTurn { cross: 1, turn: Turn::Right, interior: true });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        trace.advance(&map, 60.0, &mut rng, None);
        assert_eq!(trace.heading(), Heading::South);
        let corner = Point::new(corner_x, centers[1] - 2.0);
        let head = trace.head_position();
        assert!((head.distance(corner) - 10.0).abs() < 1e-9);

        let vtx = place_vtx(&trace, 50.0).unwrap();
        let points: Vec<Point> = trace.path_history.iter().map(|p| p.position).collect();
        let oracle = walk_back(&points, 50.0);
        assert!(vtx.distance(oracle) < 1e-9);
        assert!((vtx.y - corner.y).abs() < 1e-9);
        assert!((corner.x - vtx.x - 40.0).abs() < 1e-9);
    }

    #[test]
    fn link_classes() {
        let map = default_map();
        let c = map.road_centers().to_vec();
        let y_east = c[1] - 2.0;
        let x_south = c[1] - 2.0;
        let same = classify_link(&map, Point::new(60.0, y_east), Point::new(100.0, y_east), 15.0).unwrap();
        assert_eq!(same, LinkClass::Los);
        // vTx about 10 m before the shared intersection, vRx well past it.
        let tx = Point::new(c[1] - 10.0, y_east);
        let rx = Point::new(x_south, c[1] - 40.0);
        assert_eq!(classify_link(&map, tx, rx, 15.0).unwrap(), LinkClass::Wlos);
        let tx = Point::new(c[1] - 40.0, y_east);
        assert_eq!(classify_link(&map, tx, rx, 15.0).unwrap(), LinkClass::Nlos);
        assert!(matches!(
            classify_link(&map, Point::new(3.0, 3.0), rx, 15.0),
            Err(Error::OffRoad { .. })
        ));
    }

    #[test]
    fn forced_turn_at_grid_corner() {
        let map = default_map();
        let c = map.road_centers().to_vec();
        // Eastbound on the southern road towards the south-east corner.
        let lane = Lane { road_index: 0, heading: Heading::East };
        let mut trace = VehicleTrace::spawn(&map, lane, c[2] - 10.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut log = Vec::new();
        trace.advance(&map, 20.0, &mut rng, Some(&mut log));
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].turn, Turn::Left);
        assert_eq!(log[0].heading_in, Heading::East);
        assert!(!log[0].interior);
        assert_eq!(trace.heading(), Heading::North);
    }
}
