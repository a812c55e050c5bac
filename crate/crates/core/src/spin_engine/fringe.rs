use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// P↑ after a π/2 analysis pulse of phase α: ½[1 + b_x cos α + b_y sin α],
/// i.e. ½[1 + C cos(α − φ)].
pub fn fringe_probability<T: Real>(mean: &Vec3<T>, alpha: T) -> T {
    let (s, c) = alpha.sin_cos();
    T::half() * (T::one() + mean.x * c + mean.y * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeSamples<T> {
    pub alphas: Vec<T>,
    /// Measured (or exact) fraction of atoms in |↑⟩.
    pub p_up: Vec<T>,
    /// Atoms detected per α point in shot mode.
    pub shots: Option<usize>,
}

/// Fringe P↑(α) for a mean Bloch vector, exactly or with seeded binomial
/// noise from `shots` atoms per point.
pub fn simulate_fringe<T: Real>(
    mean: &Vec3<T>,
    alphas: &[T],
    shots: Option<usize>,
    seed: u64,
) -> Result<FringeSamples<T>> {
    let exact: Vec<T> = alphas
        .iter()
        .map(|&a| fringe_probability(mean, a).max(T::zero()).min(T::one()))
        .collect();
    let p_up = match shots {
        None => exact,
        Some(0) => return Err(invalid("shots", "must be at least 1")),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            exact
                .iter()
                .map(|p| {
                    let b = Binomial::new(n as u64, p.to_f64_lossy())
                        .map_err(|e| invalid("probability", e.to_string()))?;
                    Ok(T::lit(b.sample(&mut rng) as f64 / n as f64))
                })
                .collect::<Result<Vec<T>>>()?
        }
    };
    Ok(FringeSamples {
        alphas: alphas.to_vec(),
        p_up,
        shots,
    })
}
