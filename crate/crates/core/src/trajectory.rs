//! States, actions, trajectories and batches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! vector_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                Self(values)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

vector_newtype!(State);
vector_newtype!(Action);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Quality {
    Optimal,
    SubOptimal,
    #[default]
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrajectoryMeta {
    pub iteration: usize,
    pub episode: usize,
    pub quality: Quality,
    /// Normalized achievement weight assigned by the learner, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demonstrator_actions: Option<Vec<Action>>,
    #[serde(default, rename = "cost", skip_serializing_if = "Option::is_none")]
    pub achievement_cost: Option<f64>,
    pub metadata: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(
        states: Vec<State>,
        actions: Vec<Action>,
        demonstrator_actions: Option<Vec<Action>>,
        metadata: TrajectoryMeta,
    ) -> Result<Self> {
        let traj = Self {
            states,
            actions,
            demonstrator_actions,
            achievement_cost: None,
            metadata,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn terminal_state(&self) -> &State {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn initial_state(&self) -> &State {
        &self.states[0]
    }

    pub fn with_cost(mut self, cost: f64) -> Result<Self> {
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(Error::Input(format!("achievement cost must be finite and >= 0, got {cost}")));
        }
        self.achievement_cost = Some(cost);
        Ok(self)
    }

    pub fn demonstrator_actions(&self) -> Result<&[Action]> {
        self.demonstrator_actions
            .as_deref()
            .ok_or_else(|| Error::Input("trajectory has no demonstrator actions".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::Input("trajectory horizon must be positive".into()));
        }
        if self.states.len() != self.actions.len() + 1 {
            return Err(Error::dim("trajectory states", self.actions.len() + 1, self.states.len()));
        }
        if let Some(demo) = &self.demonstrator_actions {
            if demo.len() != self.actions.len() {
                return Err(Error::dim("demonstrator actions", self.actions.len(), demo.len()));
            }
        }
        if let Some(c) = self.achievement_cost {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::Input(format!("achievement cost must be finite and >= 0, got {c}")));
            }
        }
        let sd = self.states[0].dim();
        let ad = self.actions[0].dim();
        if let Some(s) = self.states.iter().find(|s| s.dim() != sd) {
            return Err(Error::dim("state", sd, s.dim()));
        }
        let demo = self.demonstrator_actions.iter().flatten();
        if let Some(a) = self.actions.iter().chain(demo).find(|a| a.dim() != ad) {
            return Err(Error::dim("action", ad, a.dim()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeBatch {
    pub iteration: usize,
    pub trajectories: Vec<Trajectory>,
}

impl EpisodeBatch {
    pub fn new(iteration: usize, trajectories: Vec<Trajectory>) -> Result<Self> {
        let first = trajectories
            .first()
            .ok_or_else(|| Error::Input("episode batch must be nonempty".into()))?;
        let (sd, ad) = (first.states[0].dim(), first.actions[0].dim());
        for t in &trajectories {
            t.validate()?;
            if t.states[0].dim() != sd {
                return Err(Error::dim("batch state", sd, t.states[0].dim()));
            }
            if t.actions[0].dim() != ad {
                return Err(Error::dim("batch action", ad, t.actions[0].dim()));
            }
        }
        Ok(Self {
            iteration,
            trajectories,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.trajectories[0].states[0].dim()
    }

    pub fn action_dim(&self) -> usize {
        self.trajectories[0].actions[0].dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trajectory> {
        self.trajectories.iter()
    }
}
