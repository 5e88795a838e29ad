use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SimError;

/// A grid cell coordinate. `y` grows southwards; ordering is lexicographic
/// on `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl From<[i32; 2]> for Coord {
    fn from([x, y]: [i32; 2]) -> Self {
        Coord { x, y }
    }
}

impl From<Coord> for [i32; 2] {
    fn from(c: Coord) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Coord { x, y }
    }

    pub fn step(self, d: Direction) -> Coord {
        let (dx, dy) = d.delta();
        Coord::new(self.x + dx, self.y + dy)
    }

    pub fn chebyshev(self, o: Coord) -> u32 {
        (self.x - o.x).unsigned_abs().max((self.y - o.y).unsigned_abs())
    }

    pub fn manhattan(self, o: Coord) -> u32 {
        (self.x - o.x).unsigned_abs() + (self.y - o.y).unsigned_abs()
    }

    /// Direction of a single 4-neighbor step to `o`, if `o` is adjacent.
    pub fn direction_to(self, o: Coord) -> Option<Direction> {
        Direction::ALL.into_iter().find(|&d| self.step(d) == o)
    }
}

/// Neighbor expansion order: N, E, S, W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::E => (1, 0),
            Direction::S => (0, 1),
            Direction::W => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Free,
    Obstacle,
    StationFloor,
    Storage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    pub id: String,
    /// Where a worker stands to process.
    pub workbench: Coord,
    /// Where AMRs drop off inputs and collect outputs.
    pub port: Coord,
    pub product: String,
    pub input_capacity: u32,
    pub output_capacity: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub width: i32,
    pub height: i32,
    cells: Vec<Cell>,
    pub stations: Vec<Station>,
    pub storage: Vec<Coord>,
    pub dock: Coord,
}

impl Workspace {
    pub fn new(width: i32, height: i32) -> Self {
        assert!(width > 0 && height > 0, "workspace must be non-empty");
        Workspace {
            width,
            height,
            cells: vec![Cell::Free; (width * height) as usize],
            stations: Vec::new(),
            storage: Vec::new(),
            dock: Coord::new(0, 0),
        }
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn cell(&self, c: Coord) -> Option<Cell> {
        self.in_bounds(c)
            .then(|| self.cells[(c.y * self.width + c.x) as usize])
    }

    pub fn set_cell(&mut self, c: Coord, cell: Cell) {
        assert!(self.in_bounds(c), "{c} out of bounds");
        let w = self.width;
        self.cells[(c.y * w + c.x) as usize] = cell;
    }

    pub fn is_obstacle(&self, c: Coord) -> bool {
        self.cell(c) == Some(Cell::Obstacle)
    }

    pub fn traversable(&self, c: Coord) -> bool {
        matches!(self.cell(c), Some(cell) if cell != Cell::Obstacle)
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Coord> + '_ {
        let w = self.width;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Obstacle)
            .map(move |(i, _)| Coord::new(i as i32 % w, i as i32 / w))
    }

    pub fn station(&self, id: &str) -> Option<&Station> {
        self.stations.iter().find(|s| s.id == id)
    }

    pub fn station_producing(&self, product: &str) -> Option<&Station> {
        self.stations.iter().find(|s| s.product == product)
    }

    pub fn add_station(&mut self, station: Station) {
        self.set_cell(station.workbench, Cell::StationFloor);
        self.set_cell(station.port, Cell::StationFloor);
        self.stations.push(station);
    }

    pub fn add_storage(&mut self, c: Coord) {
        self.set_cell(c, Cell::Storage);
        self.storage.push(c);
    }

    /// Breadth-first distances from `from` over traversable, unblocked cells.
    /// Unreachable cells are `u32::MAX`.
    pub fn distances(&self, from: Coord, blocked: &HashSet<Coord>) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.cells.len()];
        if !self.traversable(from) {
            return dist;
        }
        let idx = |c: Coord| (c.y * self.width + c.x) as usize;
        dist[idx(from)] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            for d in Direction::ALL {
                let n = c.step(d);
                if self.traversable(n) && !blocked.contains(&n) && dist[idx(n)] == u32::MAX {
                    dist[idx(n)] = dist[idx(c)] + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn distance(&self, from: Coord, to: Coord, blocked: &HashSet<Coord>) -> Option<u32> {
        if !self.in_bounds(to) {
            return None;
        }
        let d = self.distances(from, blocked)[(to.y * self.width + to.x) as usize];
        (d != u32::MAX).then_some(d)
    }
}

/// Shortest 4-neighbor path from `from` to `to`, excluding `from` and
/// including `to`. Obstacles and `blocked` cells are impassable (`from` is
/// exempt). Neighbors are expanded N, E, S, W so equal-length alternatives
/// always resolve the same way.
pub fn plan_route(
    ws: &Workspace,
    from: Coord,
    to: Coord,
    blocked: &HashSet<Coord>,
) -> Result<Vec<Coord>, SimError> {
    for c in [from, to] {
        if !ws.in_bounds(c) {
            return Err(SimError::OutOfBounds(c));
        }
        if !ws.traversable(c) {
            return Err(SimError::NotTraversable(c));
        }
    }
    if from == to {
        return Ok(Vec::new());
    }
    let idx = |c: Coord| (c.y * ws.width + c.x) as usize;
    let mut parent: Vec<Option<Coord>> = vec![None; (ws.width * ws.height) as usize];
    let mut seen = vec![false; parent.len()];
    seen[idx(from)] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        for d in Direction::ALL {
            let n = c.step(d);
            if !ws.traversable(n) || seen[idx(n)] || blocked.contains(&n) {
                continue;
            }
            seen[idx(n)] = true;
            parent[idx(n)] = Some(c);
            if n == to {
                let mut path = vec![to];
                let mut cur = c;
                while cur != from {
                    path.push(cur);
                    cur = parent[idx(cur)].expect("parent chain reaches start");
                }
                path.reverse();
                return Ok(path);
            }
            queue.push_back(n);
        }
    }
    Err(SimError::NoRoute { from, to })
}

/// Cells on the digital line between `a` and `b`, endpoints included. The
/// walk always starts from the smaller endpoint so `line(a, b)` and
/// `line(b, a)` cover the same cells.
pub fn line_cells(a: Coord, b: Coord) -> Vec<Coord> {
    let (start, end) = if a <= b { (a, b) } else { (b, a) };
    let dx = (end.x - start.x).abs();
    let dy = -(end.y - start.y).abs();
    let sx = if start.x < end.x { 1 } else { -1 };
    let sy = if start.y < end.y { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cur = start;
    let mut cells = vec![cur];
    while cur != end {
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            cur.x += sx;
        }
        if e2 <= dx {
            err += dx;
            cur.y += sy;
        }
        cells.push(cur);
    }
    cells
}

/// True when no obstacle lies strictly between `a` and `b`.
pub fn line_of_sight(ws: &Workspace, a: Coord, b: Coord) -> bool {
    let cells = line_cells(a, b);
    let inner = cells.len().saturating_sub(1).max(1);
    cells[1..inner].iter().all(|&c| !ws.is_obstacle(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn none() -> HashSet<Coord> {
        HashSet::new()
    }

    #[test]
    fn same_cell_is_empty_route() {
        let ws = Workspace::new(5, 5);
        assert!(plan_route(&ws, Coord::new(2, 2), Coord::new(2, 2), &none())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn straight_line_route() {
        let ws = Workspace::new(5, 5);
        let r = plan_route(&ws, Coord::new(0, 0), Coord::new(0, 3), &none()).unwrap();
        assert_eq!(r, vec![Coord::new(0, 1), Coord::new(0, 2), Coord::new(0, 3)]);
    }

    #[test]
    fn ties_prefer_north_then_east() {
        let ws = Workspace::new(5, 5);
        let r = plan_route(&ws, Coord::new(0, 2), Coord::new(1, 1), &none()).unwrap();
        // N before E: go up first.
        assert_eq!(r, vec![Coord::new(0, 1), Coord::new(1, 1)]);
    }

    #[test]
    fn walls_and_blocked_cells() {
        let mut ws = Workspace::new(3, 3);
        ws.set_cell(Coord::new(1, 0), Cell::Obstacle);
        ws.set_cell(Coord::new(1, 1), Cell::Obstacle);
        let blocked = HashSet::from([Coord::new(1, 2)]);
        let err = plan_route(&ws, Coord::new(0, 0), Coord::new(2, 0), &blocked).unwrap_err();
        assert!(matches!(err, SimError::NoRoute { .. }));
        let r = plan_route(&ws, Coord::new(0, 0), Coord::new(2, 0), &none()).unwrap();
        assert_eq!(r.len(), 6);
        assert!(matches!(
            plan_route(&ws, Coord::new(0, 0), Coord::new(1, 1), &none()),
            Err(SimError::NotTraversable(_))
        ));
        assert!(matches!(
            plan_route(&ws, Coord::new(0, 0), Coord::new(9, 1), &none()),
            Err(SimError::OutOfBounds(_))
        ));
    }

    /// Plain BFS over an explicit adjacency check, written independently of
    /// the planner.
    fn oracle_len(ws: &Workspace, from: Coord, to: Coord) -> Option<usize> {
        let mut frontier = vec![from];
        let mut seen = HashSet::from([from]);
        let mut steps = 0;
        while !frontier.is_empty() {
            if frontier.contains(&to) {
                return Some(steps);
            }
            let mut next = Vec::new();
            for c in frontier {
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let n = Coord::new(c.x + dx, c.y + dy);
                    if ws.in_bounds(n) && !ws.is_obstacle(n) && seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
            steps += 1;
        }
        None
    }

    #[test]
    fn random_grids_agree_with_bfs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut ws = Workspace::new(20, 20);
            for y in 0..20 {
                for x in 0..20 {
                    if rng.gen_bool(0.2) {
                        ws.set_cell(Coord::new(x, y), Cell::Obstacle);
                    }
                }
            }
            let a = Coord::new(rng.gen_range(0..20), rng.gen_range(0..20));
            let b = Coord::new(rng.gen_range(0..20), rng.gen_range(0..20));
            if ws.is_obstacle(a) || ws.is_obstacle(b) {
                continue;
            }
            let got = plan_route(&ws, a, b, &none()).ok().map(|r| r.len());
            assert_eq!(got, oracle_len(&ws, a, b));
        }
    }

    #[test]
    fn route_steps_are_adjacent_and_traversable() {
        let mut ws = Workspace::new(8, 8);
        for y in 1..7 {
            ws.set_cell(Coord::new(4, y), Cell::Obstacle);
        }
        let r = plan_route(&ws, Coord::new(0, 4), Coord::new(7, 4), &none()).unwrap();
        let mut prev = Coord::new(0, 4);
        for c in r {
            assert_eq!(prev.manhattan(c), 1);
            assert!(ws.traversable(c));
            prev = c;
        }
    }

    #[test]
    fn sight_blocked_by_obstacle_between() {
        let mut ws = Workspace::new(7, 3);
        assert!(line_of_sight(&ws, Coord::new(0, 1), Coord::new(6, 1)));
        ws.set_cell(Coord::new(3, 1), Cell::Obstacle);
        assert!(!line_of_sight(&ws, Coord::new(0, 1), Coord::new(6, 1)));
        // Endpoints themselves are not checked.
        assert!(line_of_sight(&ws, Coord::new(2, 1), Coord::new(3, 1)));
    }

    proptest! {
        #[test]
        fn line_is_symmetric_and_connected(ax in -10i32..10, ay in -10i32..10, bx in -10i32..10, by in -10i32..10) {
            let (a, b) = (Coord::new(ax, ay), Coord::new(bx, by));
            let mut l1 = line_cells(a, b);
            let mut l2 = line_cells(b, a);
            l1.sort();
            l2.sort();
            prop_assert_eq!(&l1, &l2);
            let cells = line_cells(a, b);
            for w in cells.windows(2) {
                prop_assert_eq!(w[0].chebyshev(w[1]), 1);
            }
        }
    }
}
