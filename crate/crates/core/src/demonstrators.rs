//! Scripted demonstrators of controllable quality.
//!
//! A demonstrator is defined by a list of support points. At the start of
//! each episode the support points are perturbed by uniform noise, then a
//! simple controller drives the system through them:
//!
//! * `Reach2D`: proportional velocity control toward the current waypoint,
//!   advancing to the next one once within `advance_radius`. The final
//!   waypoint (the goal, or the offset goal of a sub-optimal demonstrator) is
//!   not perturbed.
//! * `Excavate1D`: one support depth per pass. Each command is this
//!   episode's perturbed depth plus the volume by which the soil moved so far
//!   falls short of the nominal plan, clamped to the stable depth range, so
//!   a disturbed pass is compensated on the next one.
//!
//! Sub-optimal demonstrators differ only in their support points (shallow
//! depth, offset goal), not in noise.

use serde::{Deserialize, Serialize};

use crate::disturbance::{inject, DisturbanceModel};
use crate::envs::{ActionSource, Controller, Env, Excavate1D, Reach2D, StepAction};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::trajectory::{Action, Quality, State};

#[derive(Debug, Clone, PartialEq)]
enum Task {
    Reach(Reach2D),
    Excavate(Excavate1D),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemonstratorSpec {
    pub quality: Quality,
    /// Waypoints in task space: 2-D points for reaching, one depth per pass for excavation.
    pub support_points: Vec<Vec<f64>>,
    pub waypoint_noise: f64,
    pub gain: f64,
    pub advance_radius: f64,
    task: Task,
}

/// Demonstrator parameters exposed in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemonstratorConfig {
    pub waypoint_noise: f64,
    pub gain: f64,
    pub advance_radius: f64,
    /// Reach2D intermediate support point shared by both qualities.
    pub via_point: [f64; 2],
    /// Reach2D sub-optimal goal displacement.
    pub goal_offset: [f64; 2],
}

impl Default for DemonstratorConfig {
    fn default() -> Self {
        Self {
            waypoint_noise: 0.3,
            gain: 0.5,
            advance_radius: 0.2,
            via_point: [0.5, 2.0],
            goal_offset: [0.0, -1.5],
        }
    }
}

impl DemonstratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.waypoint_noise.is_finite() && self.waypoint_noise >= 0.0) {
            return Err(Error::config("demonstrator.waypoint_noise", "must be nonnegative"));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::config("demonstrator.gain", "must be positive"));
        }
        if !(self.advance_radius.is_finite() && self.advance_radius > 0.0) {
            return Err(Error::config("demonstrator.advance_radius", "must be positive"));
        }
        Ok(())
    }
}

impl DemonstratorSpec {
    pub fn for_env(env: &Env, quality: Quality, cfg: &DemonstratorConfig) -> Self {
        match env {
            Env::Reach2d(e) => Self::reach(e, quality, cfg),
            Env::Excavate1d(e) => Self::excavate(e, quality, cfg),
        }
    }

    pub fn reach(env: &Reach2D, quality: Quality, cfg: &DemonstratorConfig) -> Self {
        let goal = match quality {
            Quality::SubOptimal => [env.goal[0] + cfg.goal_offset[0], env.goal[1] + cfg.goal_offset[1]],
            _ => env.goal,
        };
        Self {
            quality,
            support_points: vec![cfg.via_point.to_vec(), goal.to_vec()],
            waypoint_noise: cfg.waypoint_noise,
            gain: cfg.gain,
            advance_radius: cfg.advance_radius,
            task: Task::Reach(env.clone()),
        }
    }

    pub fn excavate(env: &Excavate1D, quality: Quality, cfg: &DemonstratorConfig) -> Self {
        let depth = match quality {
            Quality::SubOptimal => env.shallow_depth,
            _ => env.optimal_depth,
        };
        Self {
            quality,
            support_points: vec![vec![depth]; env.passes],
            waypoint_noise: cfg.waypoint_noise,
            gain: cfg.gain,
            advance_radius: cfg.advance_radius,
            task: Task::Excavate(env.clone()),
        }
    }

    /// Samples this episode's perturbed support points.
    pub fn instantiate(&self, rng: &mut RngStream) -> ScriptedDemonstrator<'_> {
        let last = self.support_points.len().saturating_sub(1);
        let waypoints = self
            .support_points
            .iter()
            .enumerate()
            .map(|(i, p)| match &self.task {
                Task::Reach(_) if i == last => p.clone(),
                Task::Reach(_) => p.iter().map(|v| v + rng.symmetric_uniform(self.waypoint_noise)).collect(),
                Task::Excavate(e) => p
                    .iter()
                    .map(|v| (v + rng.symmetric_uniform(self.waypoint_noise)).clamp(0.0, e.danger_depth))
                    .collect(),
            })
            .collect();
        ScriptedDemonstrator {
            spec: self,
            waypoints,
            current: 0,
        }
    }
}

impl Controller for DemonstratorSpec {
    fn start_episode<'a>(&'a self, rng: &mut RngStream) -> Box<dyn ActionSource + 'a> {
        Box::new(self.instantiate(rng))
    }
}

/// A demonstrator with this episode's support points drawn.
#[derive(Debug, Clone)]
pub struct ScriptedDemonstrator<'a> {
    spec: &'a DemonstratorSpec,
    waypoints: Vec<Vec<f64>>,
    current: usize,
}

impl ScriptedDemonstrator<'_> {
    pub fn waypoints(&self) -> &[Vec<f64>] {
        &self.waypoints
    }

    pub fn quality(&self) -> Quality {
        self.spec.quality
    }

    /// Demonstrator action `a^D` for state `s`. Advances the waypoint pointer for reaching tasks.
    pub fn demo_action(&mut self, s: &State) -> Result<Action> {
        match &self.spec.task {
            Task::Reach(env) => {
                if s.dim() != 2 {
                    return Err(Error::dim("reach state", 2, s.dim()));
                }
                let last = self.waypoints.len() - 1;
                let dist = |wp: &[f64]| (wp[0] - s[0]).hypot(wp[1] - s[1]);
                while self.current < last && dist(&self.waypoints[self.current]) < self.spec.advance_radius {
                    self.current += 1;
                }
                let wp = &self.waypoints[self.current];
                let raw = [self.spec.gain * (wp[0] - s[0]), self.spec.gain * (wp[1] - s[1])];
                Ok(Action::new(env.clamp(&raw).to_vec()))
            }
            Task::Excavate(env) => {
                if s.dim() != 3 {
                    return Err(Error::dim("excavation state", 3, s.dim()));
                }
                let soil = env.soil();
                let pass = env.pass_index(s).min(self.waypoints.len() - 1);
                let nominal: f64 = self.spec.support_points[..pass].iter().map(|w| soil.volume(w[0])).sum();
                let shortfall = nominal - Excavate1D::soil_moved(s);
                let depth = (self.waypoints[pass][0] + shortfall).clamp(0.0, env.danger_depth);
                Ok(Action::new(vec![depth]))
            }
        }
    }
}

impl ActionSource for ScriptedDemonstrator<'_> {
    fn act(&mut self, s: &State) -> Result<StepAction> {
        let a = self.demo_action(s)?;
        Ok(StepAction {
            executed: a.clone(),
            demonstrated: Some(a),
        })
    }
}

/// Demonstrator whose executed action is `a^D + ε`, `ε ~ N(0, Σ)`, while
/// `a^D` is recorded as the regression target.
pub struct DisturbedDemonstrator<'a> {
    demo: ScriptedDemonstrator<'a>,
    model: &'a DisturbanceModel,
    rng: RngStream,
}

impl ActionSource for DisturbedDemonstrator<'_> {
    fn act(&mut self, s: &State) -> Result<StepAction> {
        let a = self.demo.demo_action(s)?;
        let executed = inject(&a, self.model, &mut self.rng)?;
        Ok(StepAction {
            executed,
            demonstrated: Some(a),
        })
    }
}

pub fn disturbed_demo_source<'a>(
    demo: ScriptedDemonstrator<'a>,
    model: &'a DisturbanceModel,
    rng: RngStream,
) -> DisturbedDemonstrator<'a> {
    DisturbedDemonstrator { demo, model, rng }
}

/// Quality of each episode within an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemonstrationSchedule {
    pub iterations: usize,
    pub episodes: usize,
    /// Cycled over the episodes of every iteration.
    pub pattern: Vec<Quality>,
}

impl Default for DemonstrationSchedule {
    fn default() -> Self {
        Self {
            iterations: 10,
            episodes: 2,
            pattern: vec![Quality::Optimal, Quality::SubOptimal],
        }
    }
}

impl DemonstrationSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("schedule.iterations", "must be at least 1"));
        }
        if self.episodes == 0 {
            return Err(Error::config("schedule.episodes", "must be at least 1"));
        }
        if self.pattern.is_empty() {
            return Err(Error::config("schedule.pattern", "must list at least one quality"));
        }
        Ok(())
    }

    pub fn quality(&self, episode: usize) -> Quality {
        self.pattern[episode % self.pattern.len()]
    }
}
