use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::trajectory::{Action, State, Trajectory};

/// Point mass in the plane driven by velocity commands toward a fixed goal.
///
/// `s' = s + clamp(a)` where `clamp` limits the speed to `max_speed`. The
/// episodic cost is the final distance to the goal relative to the initial
/// distance, capped at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Reach2D {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub max_speed: f64,
    pub horizon: usize,
    /// Half-width of the uniform perturbation applied to each start coordinate.
    pub init_noise: f64,
}

impl Default for Reach2D {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0],
            goal: [3.0, 3.0],
            max_speed: 0.25,
            horizon: 50,
            init_noise: 0.3,
        }
    }
}

impl Reach2D {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_speed.is_finite() && self.max_speed > 0.0) {
            return Err(Error::config("environment.max_speed", "must be positive"));
        }
        if self.horizon == 0 {
            return Err(Error::config("environment.horizon", "must be positive"));
        }
        if !(self.init_noise.is_finite() && self.init_noise >= 0.0) {
            return Err(Error::config("environment.init_noise", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn clamp(&self, a: &[f64]) -> [f64; 2] {
        let norm = a[0].hypot(a[1]);
        if norm > self.max_speed {
            let k = self.max_speed / norm;
            [a[0] * k, a[1] * k]
        } else {
            [a[0], a[1]]
        }
    }

    fn goal_distance(&self, s: &State) -> f64 {
        (s[0] - self.goal[0]).hypot(s[1] - self.goal[1])
    }
}

impl Environment for Reach2D {
    fn name(&self) -> &'static str {
        "reach2d"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&self, rng: &mut RngStream) -> State {
        let x = self.start[0] + rng.symmetric_uniform(self.init_noise);
        let y = self.start[1] + rng.symmetric_uniform(self.init_noise);
        State::new(vec![x, y])
    }

    fn step(&self, s: &State, a: &Action) -> Result<State> {
        self.check_state(s)?;
        self.check_action(a)?;
        let v = self.clamp(a.as_slice());
        Ok(State::new(vec![s[0] + v[0], s[1] + v[1]]))
    }

    fn episodic_cost(&self, traj: &Trajectory) -> Result<f64> {
        let d0 = self.goal_distance(traj.initial_state());
        let d_t = self.goal_distance(traj.terminal_state());
        if d0 == 0.0 {
            return Ok(if d_t == 0.0 { 0.0 } else { 1.0 });
        }
        Ok((d_t / d0).min(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::rollout;
    use crate::policy::PolicyNetwork;
    use crate::trajectory::TrajectoryMeta;

    fn env() -> Reach2D {
        Reach2D {
            max_speed: 1.0,
            init_noise: 0.0,
            ..Reach2D::default()
        }
    }

    #[test]
    fn unit_step_and_clamping() {
        let e = env();
        let s = State::new(vec![0.0, 0.0]);
        assert_eq!(e.step(&s, &Action::new(vec![1.0, 0.0])).unwrap().0, vec![1.0, 0.0]);
        assert_eq!(e.step(&s, &Action::new(vec![10.0, 0.0])).unwrap().0, vec![1.0, 0.0]);
        assert!(e.step(&s, &Action::new(vec![f64::NAN, 0.0])).is_err());
    }

    #[test]
    fn zero_policy_never_moves() {
        let e = env();
        let net = PolicyNetwork::zeros(&[2, 4, 2]).unwrap();
        let t = rollout(&e, &mut &net, &mut RngStream::from_seed(1), TrajectoryMeta::default()).unwrap();
        assert!(t.states.iter().all(|s| s.0 == vec![0.0, 0.0]));
        assert_eq!(t.achievement_cost, Some(1.0));
        assert_eq!(t.states.len(), e.horizon + 1);
    }

    #[test]
    fn reset_stays_in_support_and_is_deterministic() {
        let e = Reach2D::default();
        let mut rng = RngStream::from_seed(4);
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for _ in 0..10_000 {
            let s = e.reset(&mut rng);
            for v in s.0 {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert!(lo >= -0.3 && hi <= 0.3);
        assert!(lo < -0.29 && hi > 0.29);
        assert_eq!(e.reset(&mut RngStream::new(9, 1)), e.reset(&mut RngStream::new(9, 1)));
        let fixed = env();
        assert_eq!(fixed.reset(&mut rng).0, vec![0.0, 0.0]);
    }
}
