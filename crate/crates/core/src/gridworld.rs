//! Colored-tile grid world: the stochastic dynamics the demonstrator acts in.
//!
//! World text is one row per line, north first:
//! `r` red, `y` yellow, `b` blue, `n` brown, `.` white, `A` start (white).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::pltl::{Alphabet, Formula, Observation};

/// Default episode length bound.
pub const DEFAULT_MAX_LEN: usize = 40;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("world has no rows")]
    Empty,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("unknown tile {ch:?} at row {row}, column {col}")]
    UnknownTile { ch: char, row: usize, col: usize },
    #[error("world has no start cell `A`")]
    NoStart,
    #[error("world has {0} start cells, expected exactly one")]
    MultipleStarts(usize),
    #[error("cell ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32 },
    #[error("slip probability {0} is outside [0, 1)")]
    BadSlip(f64),
    #[error("rollout length must be at least 1")]
    ZeroLength,
    #[error("length {length} exceeds the episode bound {max_len}")]
    TooLong { length: usize, max_len: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

/// Tile colors, in alphabet order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Red,
    Yellow,
    Blue,
    Brown,
    White,
}

impl Color {
    pub const ALL: [Color; 5] = [Color::Red, Color::Yellow, Color::Blue, Color::Brown, Color::White];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Blue => "blue",
            Color::Brown => "brown",
            Color::White => "white",
        }
    }

    pub fn from_name(name: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn tile_char(self) -> char {
        match self {
            Color::Red => 'r',
            Color::Yellow => 'y',
            Color::Blue => 'b',
            Color::Brown => 'n',
            Color::White => '.',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn observation(self) -> Observation {
        Observation::single(self.index())
    }
}

/// The proposition alphabet of every grid world: one atom per color.
pub fn color_alphabet() -> Alphabet {
    Alphabet::new(Color::ALL.map(Color::name)).expect("color names are valid atoms")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    North,
    South,
    East,
    West,
}

impl Action {
    /// Canonical order, also used for planner tie-breaking.
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn letter(self) -> char {
        match self {
            Action::North => 'N',
            Action::South => 'S',
            Action::East => 'E',
            Action::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.letter() == c)
    }

    pub fn perpendicular(self) -> [Action; 2] {
        match self {
            Action::North | Action::South => [Action::East, Action::West],
            Action::East | Action::West => [Action::North, Action::South],
        }
    }
}

/// One time step of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub pos: Cell,
    pub obs: Observation,
    pub action: Option<Action>,
}

/// A demonstration: a nonempty sequence of labelled positions and actions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    steps: Vec<Step>,
}

impl Trace {
    pub fn new(steps: Vec<Step>) -> Self {
        Trace { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.steps.iter().map(|s| s.obs).collect()
    }

    pub fn positions(&self) -> impl Iterator<Item = Cell> + '_ {
        self.steps.iter().map(|s| s.pos)
    }

    /// Whether any step observes `color`.
    pub fn visits(&self, color: Color) -> bool {
        self.steps.iter().any(|s| s.obs.contains(color.index()))
    }
}

impl FromIterator<Step> for Trace {
    fn from_iter<I: IntoIterator<Item = Step>>(iter: I) -> Self {
        Trace { steps: iter.into_iter().collect() }
    }
}

/// The dynamics model: a rectangular grid of colored tiles with a start
/// cell, perpendicular slip, and an episode length bound.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWorld {
    width: u32,
    height: u32,
    tiles: Vec<Color>,
    start: Cell,
    slip: f64,
    max_len: usize,
}

impl GridWorld {
    /// Parses world text. Slip starts at 0 and the bound at
    /// [`DEFAULT_MAX_LEN`].
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let rows: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(WorldError::Empty);
        }
        let width = rows[0].chars().count();
        let mut tiles = Vec::with_capacity(width * rows.len());
        let mut starts = Vec::new();
        for (row, line) in rows.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(WorldError::RaggedRow { row, expected: width, found });
            }
            for (col, ch) in line.chars().enumerate() {
                let color = match ch {
                    'r' => Color::Red,
                    'y' => Color::Yellow,
                    'b' => Color::Blue,
                    'n' => Color::Brown,
                    '.' => Color::White,
                    'A' => {
                        starts.push(Cell::new(col as u32, row as u32));
                        Color::White
                    }
                    _ => return Err(WorldError::UnknownTile { ch, row, col }),
                };
                tiles.push(color);
            }
        }
        let start = match starts.as_slice() {
            [] => return Err(WorldError::NoStart),
            [s] => *s,
            many => return Err(WorldError::MultipleStarts(many.len())),
        };
        Ok(GridWorld {
            width: width as u32,
            height: rows.len() as u32,
            tiles,
            start,
            slip: 0.0,
            max_len: DEFAULT_MAX_LEN,
        })
    }

    pub fn with_slip(mut self, slip: f64) -> Result<Self, WorldError> {
        if !(0.0..1.0).contains(&slip) {
            return Err(WorldError::BadSlip(slip));
        }
        self.slip = slip;
        Ok(self)
    }

    pub fn with_max_len(mut self, max_len: usize) -> Result<Self, WorldError> {
        if max_len == 0 {
            return Err(WorldError::ZeroLength);
        }
        self.max_len = max_len;
        Ok(self)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn alphabet(&self) -> Alphabet {
        color_alphabet()
    }

    pub fn in_bounds(&self, pos: Cell) -> bool {
        pos.x < self.width && pos.y < self.height
    }

    fn check(&self, pos: Cell) -> Result<(), WorldError> {
        if self.in_bounds(pos) {
            Ok(())
        } else {
            Err(WorldError::OutOfBounds { x: pos.x, y: pos.y, width: self.width, height: self.height })
        }
    }

    pub(crate) fn index(&self, pos: Cell) -> usize {
        (pos.y * self.width + pos.x) as usize
    }

    pub fn cell_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn color(&self, pos: Cell) -> Result<Color, WorldError> {
        self.check(pos)?;
        Ok(self.tiles[self.index(pos)])
    }

    /// Propositions observed on `pos`: its color.
    pub fn label(&self, pos: Cell) -> Result<Observation, WorldError> {
        self.color(pos).map(Color::observation)
    }

    /// Colors present anywhere on the grid.
    pub fn colors_present(&self) -> Vec<Color> {
        Color::ALL.into_iter().filter(|c| self.tiles.contains(c)).collect()
    }

    /// Color atoms used by `phi` that no tile carries.
    pub fn missing_colors<'f>(&self, phi: &'f Formula) -> Vec<&'f str> {
        phi.atoms().into_iter().filter(|a| Color::from_name(a).is_none_or(|c| !self.tiles.contains(&c))).collect()
    }

    /// Intended move, clamped at the walls.
    pub fn step_deterministic(&self, pos: Cell, act: Action) -> Cell {
        match act {
            Action::North if pos.y > 0 => Cell::new(pos.x, pos.y - 1),
            Action::South if pos.y + 1 < self.height => Cell::new(pos.x, pos.y + 1),
            Action::East if pos.x + 1 < self.width => Cell::new(pos.x + 1, pos.y),
            Action::West if pos.x > 0 => Cell::new(pos.x - 1, pos.y),
            _ => pos,
        }
    }

    /// Stochastic move: the intended direction with probability
    /// `1 - slip`, otherwise one of the two perpendicular directions.
    pub fn step<R: Rng + ?Sized>(&self, pos: Cell, act: Action, rng: &mut R) -> Cell {
        let actual = if self.slip > 0.0 && rng.gen::<f64>() < self.slip {
            act.perpendicular()[usize::from(rng.gen::<bool>())]
        } else {
            act
        };
        self.step_deterministic(pos, actual)
    }

    /// A trace of exactly `length` steps from the start cell with uniform
    /// i.i.d. actions. Every step carries its action, including the last.
    pub fn rollout_random<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Result<Trace, WorldError> {
        if length == 0 {
            return Err(WorldError::ZeroLength);
        }
        if length > self.max_len {
            return Err(WorldError::TooLong { length, max_len: self.max_len });
        }
        let mut pos = self.start;
        let mut steps = Vec::with_capacity(length);
        for i in 0..length {
            let action = Action::ALL[rng.gen_range(0..4)];
            steps.push(Step { pos, obs: self.tiles[self.index(pos)].observation(), action: Some(action) });
            if i + 1 < length {
                pos = self.step(pos, action, rng);
            }
        }
        Ok(Trace { steps })
    }

    /// Replays `actions` from the start cell on the deterministic kernel.
    pub fn replay(&self, actions: &[Action]) -> Trace {
        let mut pos = self.start;
        let mut steps = Vec::with_capacity(actions.len() + 1);
        for &a in actions {
            steps.push(Step { pos, obs: self.tiles[self.index(pos)].observation(), action: Some(a) });
            pos = self.step_deterministic(pos, a);
        }
        steps.push(Step { pos, obs: self.tiles[self.index(pos)].observation(), action: None });
        Trace { steps }
    }

    /// Checks the trace invariants: nonempty, in bounds, labels match the
    /// tiles, and consecutive positions are equal or adjacent.
    pub fn validate_trace(&self, trace: &Trace) -> Result<(), WorldError> {
        let bad = |msg: String| Err(WorldError::InvalidTrace(msg));
        if trace.is_empty() {
            return bad("empty trace".into());
        }
        let mut prev: Option<Cell> = None;
        for (i, s) in trace.steps().iter().enumerate() {
            self.check(s.pos)?;
            if s.obs != self.tiles[self.index(s.pos)].observation() {
                return bad(alloc::format!("step {i}: observation does not match tile at {}", s.pos));
            }
            if let Some(p) = prev {
                if p.x.abs_diff(s.pos.x) + p.y.abs_diff(s.pos.y) > 1 {
                    return bad(alloc::format!("step {i}: {} is not adjacent to {p}", s.pos));
                }
            }
            prev = Some(s.pos);
        }
        Ok(())
    }

    /// Renders the grid in world-file syntax.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let c = Cell::new(x, y);
                out.push(if c == self.start { 'A' } else { self.tiles[self.index(c)].tile_char() });
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn two_cell_world() {
        let w = GridWorld::parse("Ay").unwrap();
        assert_eq!((w.width(), w.height()), (2, 1));
        assert_eq!(w.start(), Cell::new(0, 0));
        assert_eq!(w.color(Cell::new(0, 0)).unwrap(), Color::White);
        assert_eq!(w.label(Cell::new(1, 0)).unwrap(), Color::Yellow.observation());
        assert!(matches!(w.label(Cell::new(2, 0)), Err(WorldError::OutOfBounds { .. })));
    }

    #[test]
    fn load_errors() {
        assert_eq!(GridWorld::parse("A.\n.y\nAy"), Err(WorldError::MultipleStarts(2)));
        assert_eq!(GridWorld::parse("..\ny."), Err(WorldError::NoStart));
        assert!(matches!(GridWorld::parse("A..\n.y"), Err(WorldError::RaggedRow { row: 1, .. })));
        assert!(matches!(GridWorld::parse("Ax"), Err(WorldError::UnknownTile { ch: 'x', .. })));
        assert_eq!(GridWorld::parse("\n\n"), Err(WorldError::Empty));
        assert!(GridWorld::parse("Ay").unwrap().with_slip(1.0).is_err());
    }

    #[test]
    fn render_round_trips() {
        let text = "r.A\nynb\n";
        assert_eq!(GridWorld::parse(text).unwrap().render(), text);
    }

    #[test]
    fn deterministic_moves_clamp() {
        let w = GridWorld::parse("A.\n..").unwrap();
        let mut rng = stream(1, "t");
        assert_eq!(w.step(Cell::new(0, 0), Action::East, &mut rng), Cell::new(1, 0));
        assert_eq!(w.step(Cell::new(0, 0), Action::West, &mut rng), Cell::new(0, 0));
        assert_eq!(w.step(Cell::new(0, 0), Action::North, &mut rng), Cell::new(0, 0));
        let narrow = GridWorld::parse("A\n.").unwrap();
        assert_eq!(narrow.step(Cell::new(0, 0), Action::West, &mut rng), Cell::new(0, 0));
    }

    #[test]
    fn slip_frequency() {
        let w = GridWorld::parse(".....\n.....\n..A..\n.....\n.....").unwrap().with_slip(0.2).unwrap();
        let mut rng = stream(42, "slip");
        let c = Cell::new(2, 2);
        let mut east = 0;
        for _ in 0..10_000 {
            let n = w.step(c, Action::East, &mut rng);
            assert!(matches!((n.x, n.y), (3, 2) | (2, 1) | (2, 3)));
            if n == Cell::new(3, 2) {
                east += 1;
            }
        }
        let freq = f64::from(east) / 10_000.0;
        assert!((freq - 0.8).abs() <= 0.02, "east frequency {freq}");
    }

    #[test]
    fn rollouts() {
        let w = GridWorld::parse("A.y\n...\nr.b").unwrap().with_slip(0.1).unwrap();
        let t = w.rollout_random(1, &mut stream(3, "r")).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.steps()[0].pos, w.start());
        assert!(t.steps()[0].action.is_some());
        let a = w.rollout_random(20, &mut stream(3, "r")).unwrap();
        let b = w.rollout_random(20, &mut stream(3, "r")).unwrap();
        assert_eq!(a, b);
        w.validate_trace(&a).unwrap();
        assert_eq!(w.rollout_random(0, &mut stream(3, "r")), Err(WorldError::ZeroLength));
        assert!(matches!(w.rollout_random(41, &mut stream(3, "r")), Err(WorldError::TooLong { .. })));
    }

    #[test]
    fn action_frequencies_uniform() {
        let w = GridWorld::parse("A....").unwrap().with_max_len(40).unwrap();
        let mut rng = stream(9, "actions");
        let mut counts = [0u32; 4];
        for _ in 0..1000 {
            for s in w.rollout_random(40, &mut rng).unwrap().steps() {
                counts[s.action.unwrap() as usize] += 1;
            }
        }
        for c in counts {
            let f = f64::from(c) / 40_000.0;
            assert!((f - 0.25).abs() <= 0.01, "frequency {f}");
        }
    }

    #[test]
    fn validator_rejects_jumps_and_bad_labels() {
        let w = GridWorld::parse("A.y").unwrap();
        let good = w.replay(&[Action::East, Action::East]);
        w.validate_trace(&good).unwrap();
        let mut steps = good.steps().to_vec();
        steps.remove(1);
        assert!(w.validate_trace(&Trace::new(steps)).is_err());
        let mut steps = good.steps().to_vec();
        steps[2].obs = Color::Red.observation();
        assert!(w.validate_trace(&Trace::new(steps)).is_err());
        assert!(w.validate_trace(&Trace::default()).is_err());
    }
}
