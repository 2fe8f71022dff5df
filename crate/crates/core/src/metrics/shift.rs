use crate::demonstrators::DemonstratorSpec;
use crate::envs::{ActionSource, Controller, Environment};
use crate::error::{Error, Result};
use crate::metrics::kl::{difference_of_means, ShiftEstimate};
use crate::rng::RngStream;
use crate::trajectory::State;

/// Drives one episode with `driver` while querying `shadow` at every visited
/// state; returns `Σ_t ‖a_driver(s_t) − a_shadow(s_t)‖²`.
fn shadowed_loss<E: Environment + ?Sized>(
    env: &E,
    driver: &mut dyn ActionSource,
    shadow: &mut dyn ActionSource,
    start: State,
) -> Result<f64> {
    let mut s = start;
    let mut loss = 0.0;
    for _ in 0..env.horizon() {
        let a = driver.act(&s)?.executed;
        let b = shadow.act(&s)?.executed;
        if a.dim() != b.dim() {
            return Err(Error::dim("shadow action", a.dim(), b.dim()));
        }
        loss += a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        env.check_action(&a)?;
        s = env.step(&s, &a)?;
    }
    Ok(loss)
}

/// Monte Carlo covariate shift between the undisturbed demonstrator and a
/// learned controller: `|mean J over demonstrator rollouts − mean J over
/// learner rollouts|`, with `J = Σ_t ‖π_R(s_t) − π_D(s_t)‖²` and the
/// demonstrator queried along each trajectory.
///
/// Rollout `i` uses the same initial state and demonstrator support points
/// in both halves, so an identical controller gives exactly zero.
pub fn covariate_shift_estimate<E: Environment + ?Sized>(
    policy: &dyn Controller,
    demo: &DemonstratorSpec,
    env: &E,
    n_rollouts: usize,
    rng: &RngStream,
) -> Result<ShiftEstimate> {
    if n_rollouts == 0 {
        return Err(Error::Input("need at least one rollout".into()));
    }
    let mut under_demo = Vec::with_capacity(n_rollouts);
    let mut under_learner = Vec::with_capacity(n_rollouts);
    for i in 0..n_rollouts {
        let episode = rng.split(i as u64);
        let start = env.reset(&mut episode.split(0));
        {
            let mut d = demo.instantiate(&mut episode.split(1));
            let mut r = policy.start_episode(&mut episode.split(1));
            under_demo.push(shadowed_loss(env, &mut d, r.as_mut(), start.clone())?);
        }
        let mut d = demo.instantiate(&mut episode.split(1));
        let mut r = policy.start_episode(&mut episode.split(1));
        under_learner.push(shadowed_loss(env, r.as_mut(), &mut d, start)?);
    }
    Ok(difference_of_means(&under_demo, &under_learner))
}
