//! Zero-mean Gaussian disturbance over the action space and its
//! closed-form covariance update.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::policy::PolicyNetwork;
use crate::rng::RngStream;
use crate::trajectory::{Action, EpisodeBatch};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceModel {
    dim: usize,
    /// Row-major `dim x dim` covariance.
    covariance: Vec<f64>,
    factor: Vec<f64>,
}

impl DisturbanceModel {
    pub fn new(dim: usize, covariance: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Model("action dimension must be positive".into()));
        }
        if covariance.len() != dim * dim {
            return Err(Error::dim("covariance", dim * dim, covariance.len()));
        }
        if !covariance.iter().all(|v| v.is_finite()) {
            return Err(Error::Model("covariance entries must be finite".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (covariance[i * dim + j], covariance[j * dim + i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::Model(format!("covariance not symmetric at ({i},{j}): {a} vs {b}")));
                }
            }
        }
        let factor = sampling_factor(dim, &covariance)?;
        Ok(Self {
            dim,
            covariance,
            factor,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, vec![0.0; dim * dim]).expect("zero covariance is valid")
    }

    /// `σ² I`.
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = sigma * sigma;
        }
        Self::new(dim, cov)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dim + j]
    }

    pub fn is_zero(&self) -> bool {
        self.covariance.iter().all(|&v| v == 0.0)
    }

    /// Scalar disturbance level, `trace(Σ)`.
    pub fn level(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// Draws `ε ~ N(0, Σ)`.
    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; self.dim];
        }
        let z: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.factor[i * self.dim + j] * z[j]).sum())
            .collect()
    }
}

/// Returns `A` with `A Aᵀ = Σ`. Diagonal covariances use the elementwise
/// square root so zero-variance directions stay exactly unperturbed;
/// otherwise `A = V diag(√λ)` from the symmetric eigendecomposition, which is
/// valid for singular (PSD but not PD) matrices.
fn sampling_factor(dim: usize, cov: &[f64]) -> Result<Vec<f64>> {
    let diagonal = (0..dim).all(|i| (0..dim).all(|j| i == j || cov[i * dim + j] == 0.0));
    if diagonal {
        let mut f = vec![0.0; dim * dim];
        for i in 0..dim {
            let v = cov[i * dim + i];
            if v < -PSD_TOL {
                return Err(Error::Model(format!("covariance has negative variance {v}")));
            }
            f[i * dim + i] = v.max(0.0).sqrt();
        }
        return Ok(f);
    }
    let m = DMatrix::from_row_slice(dim, dim, cov);
    let eig = SymmetricEigen::new(m);
    if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
        if min < -PSD_TOL {
            return Err(Error::Model(format!("covariance is not positive semidefinite (eigenvalue {min})")));
        }
    }
    let mut f = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            f[i * dim + j] = eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt();
        }
    }
    Ok(f)
}

/// Executes `a_demo + ε`, `ε ~ N(0, Σ)`. A zero covariance returns `a_demo` unchanged.
pub fn inject(a_demo: &Action, model: &DisturbanceModel, rng: &mut RngStream) -> Result<Action> {
    if a_demo.dim() != model.dim() {
        return Err(Error::dim("disturbed action", model.dim(), a_demo.dim()));
    }
    if model.is_zero() {
        return Ok(a_demo.clone());
    }
    let eps = model.sample(rng);
    Ok(Action::new(a_demo.0.iter().zip(&eps).map(|(a, e)| a + e).collect()))
}

/// Weighted residual covariance of the policy against the demonstrator:
///
/// ```text
/// Σ̂ = Σ_e w_e Σ_t r_t r_tᵀ / Σ_e w_e T_e,   r_t = π(s_t) − a_t^D
/// ```
///
/// Uniform weights give the unweighted estimator. Symmetric PSD by construction.
pub fn update_covariance(batch: &EpisodeBatch, policy: &PolicyNetwork, weights: &[f64]) -> Result<DisturbanceModel> {
    if weights.len() != batch.len() {
        return Err(Error::dim("trajectory weights", batch.len(), weights.len()));
    }
    let dim = policy.action_dim();
    let mut acc = vec![0.0; dim * dim];
    let mut norm = 0.0;
    let mut residual = vec![0.0; dim];
    for (traj, &w) in batch.iter().zip(weights) {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::Input(format!("trajectory weights must be finite and >= 0, got {w}")));
        }
        let demo = traj.demonstrator_actions()?;
        norm += w * traj.horizon() as f64;
        if w == 0.0 {
            continue;
        }
        for (s, a) in traj.states.iter().zip(demo) {
            let out = policy.forward(s)?;
            if a.dim() != dim {
                return Err(Error::dim("demonstrator action", dim, a.dim()));
            }
            for ((r, o), t) in residual.iter_mut().zip(&out.0).zip(&a.0) {
                *r = o - t;
            }
            for i in 0..dim {
                for j in i..dim {
                    acc[i * dim + j] += w * residual[i] * residual[j];
                }
            }
        }
    }
    if norm <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    for i in 0..dim {
        for j in i..dim {
            let v = acc[i * dim + j] / norm;
            acc[i * dim + j] = v;
            acc[j * dim + i] = v;
        }
    }
    DisturbanceModel::new(dim, acc)
}

pub fn disturbance_level(model: &DisturbanceModel) -> f64 {
    model.level()
}
