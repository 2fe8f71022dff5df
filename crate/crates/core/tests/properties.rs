mod common;

use common::{covariance_oracle, loss_oracle, random_batch};
use proptest::prelude::*;
use tawdi::disturbance::update_covariance;
use tawdi::envs::{GridMDP, TabularPolicy};
use tawdi::metrics::{trajectory_kl, welch_t_test};
use tawdi::policy::{weighted_bc_loss, PolicyNetwork};
use tawdi::weighting::{batch_weights, normalize_weights, WeightingConfig};
use tawdi::{EpisodeBatch, RngStream};

struct Case {
    net: PolicyNetwork,
    batch: EpisodeBatch,
    weights: Vec<f64>,
}

fn case(seed: u64, sd: usize, ad: usize, n_traj: usize, horizon: usize) -> Case {
    let mut rng = RngStream::new(seed, 0);
    let net = PolicyNetwork::random(&[sd, 4, ad], 1.0, &mut rng).unwrap();
    let batch = random_batch(&mut rng, sd, ad, n_traj, horizon);
    let weights = (0..n_traj).map(|_| 0.05 + rng.unit()).collect();
    Case { net, batch, weights }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_symmetric_psd_and_matches_oracle(
        seed in any::<u64>(), sd in 1usize..4, ad in 1usize..4, n in 1usize..4, t in 1usize..12,
    ) {
        let c = case(seed, sd, ad, n, t);
        let m = update_covariance(&c.batch, &c.net, &c.weights).unwrap();
        let want = covariance_oracle(&c.net, &c.batch, &c.weights);
        for (a, b) in m.covariance().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let mut rng = RngStream::new(seed, 1);
        for i in 0..ad {
            for j in 0..ad {
                prop_assert_eq!(m.entry(i, j), m.entry(j, i));
            }
        }
        for _ in 0..5 {
            let x: Vec<f64> = (0..ad).map(|_| rng.symmetric_uniform(1.0)).collect();
            let q: f64 = (0..ad).flat_map(|i| (0..ad).map(move |j| (i, j))).map(|(i, j)| x[i] * m.entry(i, j) * x[j]).sum();
            prop_assert!(q >= -1e-12);
        }
    }

    #[test]
    fn loss_and_covariance_ignore_weight_scale(
        seed in any::<u64>(), n in 1usize..4, t in 1usize..8, scale in 0.01f64..100.0,
    ) {
        let c = case(seed, 2, 2, n, t);
        let scaled: Vec<f64> = c.weights.iter().map(|w| w * scale).collect();
        let l1 = weighted_bc_loss(&c.net, &c.batch, &c.weights).unwrap();
        let l2 = weighted_bc_loss(&c.net, &c.batch, &scaled).unwrap();
        prop_assert!((l1 - l2).abs() <= 1e-12 * l1.max(1.0));
        prop_assert!((l1 - loss_oracle(&c.net, &c.batch, &c.weights)).abs() <= 1e-12 * l1.max(1.0));
        let a = update_covariance(&c.batch, &c.net, &c.weights).unwrap();
        let b = update_covariance(&c.batch, &c.net, &scaled).unwrap();
        for (x, y) in a.covariance().iter().zip(b.covariance()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn zero_weight_trajectory_is_the_same_as_removing_it(seed in any::<u64>(), n in 2usize..5, t in 1usize..8) {
        let mut c = case(seed, 2, 2, n, t);
        c.weights[n - 1] = 0.0;
        let full = update_covariance(&c.batch, &c.net, &c.weights).unwrap();
        let kept = EpisodeBatch::new(0, c.batch.trajectories[..n - 1].to_vec()).unwrap();
        let part = update_covariance(&kept, &c.net, &c.weights[..n - 1]).unwrap();
        for (x, y) in full.covariance().iter().zip(part.covariance()) {
            prop_assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn normalized_weights_sum_to_count_and_keep_ratios(l in prop::collection::vec(0.001f64..10.0, 1..8)) {
        let w = normalize_weights(&l).unwrap();
        let n = l.len() as f64;
        prop_assert!((w.iter().sum::<f64>() - n).abs() < 1e-12 * n);
        for i in 1..l.len() {
            prop_assert!((w[i] / w[0] - l[i] / l[0]).abs() < 1e-9 * (l[i] / l[0]).max(1.0));
        }
    }

    #[test]
    fn cheaper_trajectories_weigh_more(costs in prop::collection::vec(0.0f64..2.0, 2..6), beta in 0.1f64..20.0) {
        let w = batch_weights(&costs, &WeightingConfig::exponential(beta)).unwrap();
        for i in 0..costs.len() {
            for j in 0..costs.len() {
                if costs[i] < costs[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn welch_is_antisymmetric(
        a in prop::collection::vec(-5.0f64..5.0, 2..8),
        b in prop::collection::vec(-5.0f64..5.0, 2..8),
    ) {
        if let (Ok(x), Ok(y)) = (welch_t_test(&a, &b), welch_t_test(&b, &a)) {
            prop_assert!((x.t + y.t).abs() < 1e-12 * x.t.abs().max(1.0));
            prop_assert!((x.p - y.p).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x.p));
        }
    }

    #[test]
    fn kl_is_nonnegative_and_identity_holds(seed in any::<u64>(), eta in 0.01f64..1.0) {
        let mut rng = RngStream::new(seed, 2);
        let mdp = GridMDP::random(3, 2, 3, &mut rng).unwrap();
        let learner = TabularPolicy::random(3, 2, &mut rng);
        let demo = TabularPolicy::random(3, 2, &mut rng);
        let kl = trajectory_kl(&mdp, &learner, &demo, eta).unwrap();
        prop_assert!(kl.full_trajectory >= -1e-12);
        prop_assert!((kl.full_trajectory - kl.per_step).abs() < 1e-10);
    }
}
