use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::trajectory::{Action, State, Trajectory};

/// Soil volume removed by one pass as a function of dig depth.
///
/// Linear up to the optimal depth, a shallow slope between the optimal and
/// the danger depth, flat beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcavationParams {
    pub optimal_depth: f64,
    pub danger_depth: f64,
    pub shallow_depth: f64,
    /// Volume gained per unit depth between the optimal and danger depths.
    pub deep_slope: f64,
    pub max_depth: f64,
}

impl Default for ExcavationParams {
    fn default() -> Self {
        Self {
            optimal_depth: 1.0,
            danger_depth: 1.5,
            shallow_depth: 0.5,
            deep_slope: 0.2,
            max_depth: 2.0,
        }
    }
}

impl ExcavationParams {
    pub fn volume(&self, depth: f64) -> f64 {
        let d = depth.clamp(0.0, self.max_depth);
        if d <= self.optimal_depth {
            d
        } else if d <= self.danger_depth {
            self.optimal_depth + self.deep_slope * (d - self.optimal_depth)
        } else {
            self.max_pass_volume()
        }
    }

    pub fn max_pass_volume(&self) -> f64 {
        self.optimal_depth + self.deep_slope * (self.danger_depth - self.optimal_depth)
    }

    /// Shallowest depth removing `volume`, saturating at `[0, danger_depth]`.
    pub fn depth_for_volume(&self, volume: f64) -> f64 {
        if volume <= 0.0 {
            0.0
        } else if volume <= self.optimal_depth {
            volume
        } else if volume < self.max_pass_volume() {
            self.optimal_depth + (volume - self.optimal_depth) / self.deep_slope
        } else {
            self.danger_depth
        }
    }

    pub fn is_unstable(&self, depth: f64) -> bool {
        depth > self.danger_depth
    }
}

/// Three-pass soil stripping surrogate.
///
/// State is `(last dig depth, remaining passes, soil moved so far)`; the
/// action is the dig-depth command for the current pass, clamped to
/// `[0, max_depth]`. One step per pass. The episodic cost is
/// `|V_T - V*| / V*` with `V*` the volume of digging the optimal depth on
/// every pass. The initial bucket depth is drawn from `U(-init_noise, init_noise)`
/// (negative values are above the surface); no soil has moved at reset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Excavate1D {
    pub passes: usize,
    pub init_noise: f64,
    pub optimal_depth: f64,
    pub danger_depth: f64,
    pub shallow_depth: f64,
    pub deep_slope: f64,
    pub max_depth: f64,
}

impl Default for Excavate1D {
    fn default() -> Self {
        let soil = ExcavationParams::default();
        Self {
            passes: 3,
            init_noise: 0.3,
            optimal_depth: soil.optimal_depth,
            danger_depth: soil.danger_depth,
            shallow_depth: soil.shallow_depth,
            deep_slope: soil.deep_slope,
            max_depth: soil.max_depth,
        }
    }
}

impl Excavate1D {
    pub fn soil(&self) -> ExcavationParams {
        ExcavationParams {
            optimal_depth: self.optimal_depth,
            danger_depth: self.danger_depth,
            shallow_depth: self.shallow_depth,
            deep_slope: self.deep_slope,
            max_depth: self.max_depth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::config("environment.passes", "must be positive"));
        }
        if !(self.init_noise.is_finite() && self.init_noise >= 0.0) {
            return Err(Error::config("environment.init_noise", "must be nonnegative"));
        }
        let p = self.soil();
        if !(0.0 < p.shallow_depth && p.shallow_depth < p.optimal_depth && p.optimal_depth < p.danger_depth) {
            return Err(Error::config(
                "environment.optimal_depth",
                "depths must satisfy 0 < shallow < optimal < danger",
            ));
        }
        if !(p.max_depth >= p.danger_depth) {
            return Err(Error::config("environment.max_depth", "must be at least the danger depth"));
        }
        if !(p.deep_slope > 0.0 && p.deep_slope.is_finite()) {
            return Err(Error::config("environment.deep_slope", "must be positive"));
        }
        Ok(())
    }

    pub fn target_volume(&self) -> f64 {
        self.passes as f64 * self.soil().volume(self.soil().optimal_depth)
    }

    /// Index of the pass about to be dug in state `s`.
    pub fn pass_index(&self, s: &State) -> usize {
        let remaining = s[1].round().max(0.0) as usize;
        self.passes.saturating_sub(remaining)
    }

    pub fn soil_moved(s: &State) -> f64 {
        s[2]
    }
}

impl Environment for Excavate1D {
    fn name(&self) -> &'static str {
        "excavate1d"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.passes
    }

    fn reset(&self, rng: &mut RngStream) -> State {
        let d0 = rng.symmetric_uniform(self.init_noise);
        State::new(vec![d0, self.passes as f64, 0.0])
    }

    fn step(&self, s: &State, a: &Action) -> Result<State> {
        self.check_state(s)?;
        self.check_action(a)?;
        let depth = a[0].clamp(0.0, self.soil().max_depth);
        let moved = s[2] + self.soil().volume(depth);
        Ok(State::new(vec![depth, (s[1] - 1.0).max(0.0), moved]))
    }

    fn episodic_cost(&self, traj: &Trajectory) -> Result<f64> {
        let target = self.target_volume();
        Ok((Self::soil_moved(traj.terminal_state()) - target).abs() / target)
    }
}
