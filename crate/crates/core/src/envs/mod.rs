//! Deterministic-dynamics environments and trajectory rollout.

mod excavate;
mod grid;
mod reach;

pub use excavate::{Excavate1D, ExcavationParams};
pub use grid::{enumerate_trajectory_distribution, enumerate_with_limit, GridMDP, GridTrajectory, TabularPolicy, ENUMERATION_LIMIT};
pub use reach::Reach2D;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyNetwork;
use crate::rng::RngStream;
use crate::trajectory::{Action, State, Trajectory, TrajectoryMeta};

pub trait Environment: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Draws an initial state.
    fn reset(&self, rng: &mut RngStream) -> State;
    /// Deterministic transition; actions are clamped to the environment's bounds first.
    fn step(&self, s: &State, a: &Action) -> Result<State>;
    /// Episodic cost of a complete trajectory (nonnegative, 0 is best).
    fn episodic_cost(&self, traj: &Trajectory) -> Result<f64>;

    fn check_action(&self, a: &Action) -> Result<()> {
        if a.dim() != self.action_dim() {
            return Err(Error::dim("action", self.action_dim(), a.dim()));
        }
        if !a.is_finite() {
            return Err(Error::Input(format!("non-finite action {:?}", a.0)));
        }
        Ok(())
    }

    fn check_state(&self, s: &State) -> Result<()> {
        if s.dim() != self.state_dim() {
            return Err(Error::dim("state", self.state_dim(), s.dim()));
        }
        Ok(())
    }
}

/// The action chosen at one step. `demonstrated` carries the pre-disturbance
/// demonstrator action when the source has one.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAction {
    pub executed: Action,
    pub demonstrated: Option<Action>,
}

pub trait ActionSource {
    fn act(&mut self, s: &State) -> Result<StepAction>;
}

impl ActionSource for &PolicyNetwork {
    fn act(&mut self, s: &State) -> Result<StepAction> {
        Ok(StepAction {
            executed: self.forward(s)?,
            demonstrated: None,
        })
    }
}

/// Something that can drive a fresh episode: a fixed policy, or a scripted
/// demonstrator that samples its support points per episode.
pub trait Controller: Sync {
    fn start_episode<'a>(&'a self, rng: &mut RngStream) -> Box<dyn ActionSource + 'a>;
}

impl Controller for PolicyNetwork {
    fn start_episode<'a>(&'a self, _rng: &mut RngStream) -> Box<dyn ActionSource + 'a> {
        Box::new(self)
    }
}

/// Runs one full-horizon episode. `rng` is used only for the initial state.
pub fn rollout<E: Environment + ?Sized>(
    env: &E,
    source: &mut dyn ActionSource,
    rng: &mut RngStream,
    metadata: TrajectoryMeta,
) -> Result<Trajectory> {
    let mut s = env.reset(rng);
    let horizon = env.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut demo = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let step = source.act(&s)?;
        env.check_action(&step.executed)?;
        let next = env.step(&s, &step.executed)?;
        states.push(std::mem::replace(&mut s, next));
        actions.push(step.executed);
        if let Some(a) = step.demonstrated {
            demo.push(a);
        }
    }
    states.push(s);
    let demonstrator_actions = match demo.len() {
        0 => None,
        n if n == horizon => Some(demo),
        n => return Err(Error::dim("demonstrator actions", horizon, n)),
    };
    let traj = Trajectory::new(states, actions, demonstrator_actions, metadata)?;
    let cost = env.episodic_cost(&traj)?;
    traj.with_cost(cost)
}

/// Environment selected by configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Env {
    Reach2d(Reach2D),
    Excavate1d(Excavate1D),
}

impl Env {
    fn inner(&self) -> &dyn Environment {
        match self {
            Env::Reach2d(e) => e,
            Env::Excavate1d(e) => e,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Env::Reach2d(e) => e.validate(),
            Env::Excavate1d(e) => e.validate(),
        }
    }
}

impl Environment for Env {
    fn name(&self) -> &'static str {
        self.inner().name()
    }
    fn state_dim(&self) -> usize {
        self.inner().state_dim()
    }
    fn action_dim(&self) -> usize {
        self.inner().action_dim()
    }
    fn horizon(&self) -> usize {
        self.inner().horizon()
    }
    fn reset(&self, rng: &mut RngStream) -> State {
        self.inner().reset(rng)
    }
    fn step(&self, s: &State, a: &Action) -> Result<State> {
        self.inner().step(s, a)
    }
    fn episodic_cost(&self, traj: &Trajectory) -> Result<f64> {
        self.inner().episodic_cost(traj)
    }
}
