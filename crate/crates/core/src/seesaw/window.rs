//! Randomized window sizes and adaptive array skews.

use rand::Rng;

use super::config::SeeSawConfig;

/// `Pr[K = k]` for `k = 0..=k_max`: `p_k = 2^-(k+1) (1 + k/k_max)` for
/// `k >= 1`, and `p_0` takes the remaining mass.
pub fn window_probabilities(k_max: u32) -> Vec<f64> {
    let mut p = vec![0.0; k_max as usize + 1];
    for k in 1..=k_max {
        p[k as usize] = (-(f64::from(k) + 1.0)).exp2() * (1.0 + f64::from(k) / f64::from(k_max));
    }
    p[0] = 1.0 - p[1..].iter().sum::<f64>();
    p
}

/// Draws `K` from [`window_probabilities`] by inversion.
pub fn sample_window_param<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> u32 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u32;
        }
    }
    (probs.len() - 1) as u32
}

/// Picks `(w, K)` for a new internal subproblem of `size` slots.
pub fn pick_window_length<R: Rng + ?Sized>(
    size: usize,
    config: &SeeSawConfig,
    probs: &[f64],
    rng: &mut R,
) -> (usize, u32) {
    let k = sample_window_param(probs, rng);
    (config.window_len(size, k), k)
}

/// Array skew for the window with 1-based index `window_index`, given the
/// insertion skew of the previous window. Odd windows never skew; even
/// windows use `round(size * prev_skew / (beta * w))`, halves away from zero.
pub fn pick_array_skew(
    window_index: u32,
    prev_skew: i64,
    window_len: usize,
    size: usize,
    beta: f64,
) -> i64 {
    if window_index % 2 == 1 {
        return 0;
    }
    let t = size as f64 * prev_skew as f64 / (beta * window_len as f64);
    t.round() as i64
}
