use super::{Environment, StepOutcome};
use crate::error::{invalid, Error, Result};
use crate::mdp::TabularMDP;
use crate::rng::{sample_index, StreamRng};
use crate::tables::QTable;
use rand::Rng;
use std::collections::VecDeque;
use std::str::FromStr;

/// Classic Dyna maze with 48 free cells.
pub const DEFAULT_MAZE_LAYOUT: &str = include_str!("../../data/dyna_maze.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

/// Parsed ASCII grid: `#` wall, `.` free, `S` start, `G` goal.
///
/// Free cells (including `S` and `G`) are numbered row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeLayout {
    rows: usize,
    cols: usize,
    walls: Vec<bool>,
    cell_to_state: Vec<Option<usize>>,
    state_to_cell: Vec<(usize, usize)>,
    start: usize,
    goal: usize,
}

impl FromStr for MazeLayout {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        let layout_err = |row: usize, column: usize, message: &str| Error::Layout {
            row,
            column,
            message: message.to_string(),
        };
        if lines.is_empty() {
            return Err(layout_err(0, 0, "empty layout"));
        }
        let cols = lines[0].chars().count();
        let mut walls = Vec::new();
        let mut start = None;
        let mut goal = None;
        for (r, line) in lines.iter().enumerate() {
            let width = line.chars().count();
            if width != cols {
                return Err(layout_err(
                    r,
                    width.min(cols),
                    &format!("row has {width} cells, expected {cols}"),
                ));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => walls.push(true),
                    '.' => walls.push(false),
                    'S' | 'G' => {
                        let slot = if ch == 'S' { &mut start } else { &mut goal };
                        if slot.is_some() {
                            return Err(layout_err(r, c, &format!("second '{ch}' cell")));
                        }
                        *slot = Some((r, c));
                        walls.push(false);
                    }
                    other => {
                        return Err(layout_err(r, c, &format!("unexpected character {other:?}")))
                    }
                }
            }
        }
        let start = start.ok_or_else(|| layout_err(0, 0, "missing 'S' cell"))?;
        let goal = goal.ok_or_else(|| layout_err(0, 0, "missing 'G' cell"))?;
        let rows = lines.len();
        let mut cell_to_state = vec![None; rows * cols];
        let mut state_to_cell = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if !walls[r * cols + c] {
                    cell_to_state[r * cols + c] = Some(state_to_cell.len());
                    state_to_cell.push((r, c));
                }
            }
        }
        let index = |(r, c): (usize, usize)| cell_to_state[r * cols + c].expect("free cell");
        Ok(Self {
            rows,
            cols,
            start: index(start),
            goal: index(goal),
            walls,
            cell_to_state,
            state_to_cell,
        })
    }
}

impl MazeLayout {
    pub fn default_layout() -> Self {
        DEFAULT_MAZE_LAYOUT.parse().expect("bundled layout parses")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn n_states(&self) -> usize {
        self.state_to_cell.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn cell(&self, s: usize) -> (usize, usize) {
        self.state_to_cell[s]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// State reached by moving; walls and the grid border leave it unchanged.
    pub fn neighbor(&self, s: usize, action: Action) -> usize {
        let (r, c) = self.state_to_cell[s];
        let (dr, dc) = action.delta();
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        if nr < 0 || nc < 0 || nr as usize >= self.rows || nc as usize >= self.cols {
            return s;
        }
        self.cell_to_state[nr as usize * self.cols + nc as usize].unwrap_or(s)
    }

    /// Breadth-first distance from start to goal under deterministic moves.
    pub fn shortest_path_length(&self) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.n_states()];
        let mut queue = VecDeque::from([self.start]);
        dist[self.start] = 0;
        while let Some(s) = queue.pop_front() {
            if s == self.goal {
                return Some(dist[s]);
            }
            for a in Action::ALL {
                let t = self.neighbor(s, a);
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Steps taken by the greedy policy of `q` (first maximiser) from start
    /// under deterministic moves, or `None` if it does not reach the goal
    /// within `max_steps`.
    pub fn greedy_path_length(&self, q: &QTable, max_steps: usize) -> Option<usize> {
        let mut s = self.start;
        for steps in 0..max_steps {
            if s == self.goal {
                return Some(steps);
            }
            s = self.neighbor(s, Action::ALL[q.greedy_action(s)]);
        }
        (s == self.goal).then_some(max_steps)
    }
}

/// Noise model of the maze.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stochasticity {
    Deterministic,
    /// With probability `p` the move goes in a uniformly random direction.
    StochasticDynamics(f64),
    /// Goal reward is +1 with probability `p`, otherwise 0.
    StochasticReward(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub layout: MazeLayout,
    pub stochasticity: Stochasticity,
    pub max_episode_steps: usize,
    pub discount: f64,
}

impl MazeSpec {
    pub fn new(layout: MazeLayout, stochasticity: Stochasticity) -> Self {
        Self {
            layout,
            stochasticity,
            max_episode_steps: 400,
            discount: 0.99,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.stochasticity {
            Stochasticity::StochasticDynamics(p) | Stochasticity::StochasticReward(p)
                if !(0.0..=1.0).contains(&p) =>
            {
                invalid(format!("probability {p} outside [0, 1]"))
            }
            _ if self.max_episode_steps == 0 => invalid("max_episode_steps must be positive"),
            _ => Ok(()),
        }
    }
}

/// Expected-value MDP of the maze. The goal is terminal and absorbing; under
/// stochastic rewards `r(s,a,G)` holds the expected goal reward.
pub fn build_maze(spec: &MazeSpec) -> Result<TabularMDP> {
    spec.validate()?;
    let layout = &spec.layout;
    let n = layout.n_states();
    let m = Action::ALL.len();
    let mut transition = vec![0.0; n * m * n];
    let mut reward = vec![0.0; n * m * n];
    let goal_reward = match spec.stochasticity {
        Stochasticity::StochasticReward(p) => p,
        _ => 1.0,
    };
    for s in 0..n {
        for (a, &action) in Action::ALL.iter().enumerate() {
            let o = (s * m + a) * n;
            if s == layout.goal() {
                transition[o + s] = 1.0;
                continue;
            }
            match spec.stochasticity {
                Stochasticity::StochasticDynamics(p) => {
                    transition[o + layout.neighbor(s, action)] += 1.0 - p;
                    for dir in Action::ALL {
                        transition[o + layout.neighbor(s, dir)] += p / m as f64;
                    }
                }
                _ => transition[o + layout.neighbor(s, action)] = 1.0,
            }
            reward[o + layout.goal()] = goal_reward;
        }
    }
    let terminal = (0..n).map(|s| s == layout.goal()).collect();
    let mut initial = vec![0.0; n];
    initial[layout.start()] = 1.0;
    TabularMDP::new(n, m, transition, reward, spec.discount, terminal, initial)
}

/// Episodic maze session with step limit.
#[derive(Debug, Clone)]
pub struct MazeEnv {
    spec: MazeSpec,
    mdp: TabularMDP,
    state: usize,
    steps: usize,
    finished: bool,
}

impl MazeEnv {
    pub fn new(spec: MazeSpec) -> Result<Self> {
        let mdp = build_maze(&spec)?;
        Ok(Self {
            state: spec.layout.start(),
            spec,
            mdp,
            steps: 0,
            finished: true,
        })
    }

    pub fn mdp(&self) -> &TabularMDP {
        &self.mdp
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    pub fn layout(&self) -> &MazeLayout {
        &self.spec.layout
    }
}

impl Environment for MazeEnv {
    fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn discount(&self) -> f64 {
        self.spec.discount
    }

    fn reset(&mut self, _rng: &mut StreamRng) -> usize {
        self.state = self.spec.layout.start();
        self.steps = 0;
        self.finished = false;
        self.state
    }

    fn step(&mut self, action: usize, rng: &mut StreamRng) -> Result<StepOutcome> {
        if action >= self.n_actions() {
            return invalid(format!("action {action} out of range"));
        }
        if self.finished {
            return invalid("episode finished; call reset before stepping");
        }
        let next = sample_index(self.mdp.transition_row(self.state, action), rng);
        let goal = self.spec.layout.goal();
        let reward = match self.spec.stochasticity {
            Stochasticity::StochasticReward(p) if next == goal => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.mdp.reward(self.state, action, next),
        };
        let terminated = next == goal;
        self.steps += 1;
        let truncated = !terminated && self.steps >= self.spec.max_episode_steps;
        self.state = next;
        self.finished = terminated || truncated;
        Ok(StepOutcome {
            reward,
            discount: if terminated { 0.0 } else { self.spec.discount },
            next_state: next,
            terminated,
            truncated,
        })
    }

    fn state(&self) -> usize {
        self.state
    }
}
