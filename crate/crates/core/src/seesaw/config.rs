use crate::classical::ClassicalParams;
use crate::error::{Error, Result};

pub const DEFAULT_C_ALPHA: f64 = 64.0;
pub const DEFAULT_C_BETA: f64 = 8.0;
pub const DEFAULT_GAP_BOUND: usize = 8;

const EPS: f64 = 1e-9;

pub(crate) fn ceil_tol(x: f64) -> usize {
    (x - EPS).ceil().max(0.0) as usize
}

pub(crate) fn floor_tol(x: f64) -> usize {
    (x + EPS).floor().max(0.0) as usize
}

/// `log2 n`, exact for powers of two.
pub fn log2(n: usize) -> f64 {
    if n.is_power_of_two() {
        f64::from(n.trailing_zeros())
    } else {
        (n as f64).log2()
    }
}

/// Global See-Saw parameters. All logarithms are base 2.
#[derive(Clone, Debug, PartialEq)]
pub struct SeeSawConfig {
    /// Array size.
    pub m: usize,
    /// Most live elements, `m / 2`.
    pub n: usize,
    pub c_alpha: f64,
    pub c_beta: f64,
    /// `c_alpha * (log log n)^2`: quota divisor and base window divisor.
    pub alpha: f64,
    /// `c_beta * (log log n)^2`: array-skew damping.
    pub beta: f64,
    /// `ceil(2 log log n)`.
    pub k_max: u32,
    /// `ceil(2^sqrt(log n))`: subarrays this small become tiny leaves.
    pub tiny_threshold: usize,
    pub seed: u64,
    /// Freeze array skews of sparse subproblems so gaps stay bounded.
    pub pma_mode: bool,
    /// Largest run of free slots between elements tolerated in PMA mode.
    pub gap_bound: usize,
    /// Verify structural invariants after every operation.
    pub check: bool,
    /// Keep per-window insertion skews for every subproblem.
    pub record_skews: bool,
    pub leaf_params: ClassicalParams,
}

impl SeeSawConfig {
    pub fn new(m: usize, seed: u64) -> Result<Self> {
        Self::with_constants(m, DEFAULT_C_ALPHA, DEFAULT_C_BETA, seed)
    }

    pub fn with_constants(m: usize, c_alpha: f64, c_beta: f64, seed: u64) -> Result<Self> {
        let n = m / 2;
        if n < 4 {
            return Err(Error::Config(format!(
                "array size {m} too small (need m >= 8)"
            )));
        }
        if !(c_alpha > 0.0 && c_beta > 0.0 && c_alpha.is_finite() && c_beta.is_finite()) {
            return Err(Error::Config("c_alpha and c_beta must be positive".into()));
        }
        let log_n = log2(n);
        let loglog = log_n.log2();
        let alpha = c_alpha * loglog * loglog;
        let beta = c_beta * loglog * loglog;
        if alpha + EPS < 8.0 * beta {
            return Err(Error::Config(format!(
                "alpha = {alpha:.3} must be at least 8 * beta = {:.3}",
                8.0 * beta
            )));
        }
        if alpha < 2.0 || beta < 2.0 {
            return Err(Error::Config(format!(
                "alpha = {alpha:.3} and beta = {beta:.3} must both be at least 2"
            )));
        }
        let k_max = ceil_tol(2.0 * loglog).max(1) as u32;
        let tiny_threshold = ceil_tol(log_n.sqrt().exp2());
        let leaf_params = ClassicalParams {
            strict: false,
            ..ClassicalParams::default()
        };
        Ok(SeeSawConfig {
            m,
            n,
            c_alpha,
            c_beta,
            alpha,
            beta,
            k_max,
            tiny_threshold,
            seed,
            pma_mode: false,
            gap_bound: DEFAULT_GAP_BOUND,
            check: false,
            record_skews: false,
            leaf_params,
        })
    }

    pub fn pma(mut self, on: bool) -> Self {
        self.pma_mode = on;
        self
    }

    pub fn checked(mut self, on: bool) -> Self {
        self.check = on;
        self
    }

    pub fn recording(mut self, on: bool) -> Self {
        self.record_skews = on;
        self
    }

    /// Lifetime insertions a subproblem of `size` slots handles before reset.
    pub fn quota(&self, size: usize) -> usize {
        ceil_tol(size as f64 / self.alpha).max(1)
    }

    /// `max(1, floor(size / (alpha * 2^k)))`.
    pub fn window_len(&self, size: usize, k: u32) -> usize {
        floor_tol(size as f64 / (self.alpha * f64::from(k).exp2())).max(1)
    }

    /// Largest array skew magnitude a subproblem of `size` slots may apply.
    pub fn skew_limit(&self, size: usize) -> i64 {
        ceil_tol(size as f64 / self.beta) as i64
    }

    /// Allowed deviation of a child's size from half its parent, as a
    /// fraction of the parent. 0.01 once `beta >= 100`; wider below that,
    /// where a skew of up to `size / beta` slots is legal.
    pub fn child_band(&self) -> f64 {
        (1.0 / self.beta).max(0.01)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_at_n_2_16() {
        let c = SeeSawConfig::new(1 << 17, 0).unwrap();
        assert_eq!(c.n, 1 << 16);
        assert_eq!(c.k_max, 8);
        assert_eq!(c.tiny_threshold, 16);
        assert_eq!(c.alpha, 64.0 * 16.0);
        assert_eq!(c.beta, 8.0 * 16.0);
        assert_eq!(c.child_band(), 0.01);
    }

    #[test]
    fn rounding_at_odd_exponents() {
        // n = 2^18: 2 log2 18 = 8.34 and 2^sqrt(18) = 18.9.
        let c = SeeSawConfig::new(1 << 19, 0).unwrap();
        assert_eq!(c.k_max, 9);
        assert_eq!(c.tiny_threshold, 19);
        // n = 2^12: 2^sqrt(12) = 11.03.
        let c = SeeSawConfig::new(1 << 13, 0).unwrap();
        assert_eq!(c.tiny_threshold, 12);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(SeeSawConfig::with_constants(1 << 10, 8.0, 8.0, 0).is_err());
        assert!(SeeSawConfig::with_constants(1 << 10, -1.0, 8.0, 0).is_err());
        assert!(SeeSawConfig::new(4, 0).is_err());
        assert!(SeeSawConfig::with_constants(1 << 10, 64.0, 8.0, 0).is_ok());
    }

    #[test]
    fn window_and_quota() {
        let mut c = SeeSawConfig::new(1 << 17, 0).unwrap();
        c.alpha = 64.0;
        assert_eq!(c.window_len(4096, 3), 8);
        assert_eq!(c.window_len(10, 3), 1);
        assert_eq!(c.quota(4096), 64);
        assert_eq!(c.quota(65), 2);
        assert_eq!(c.quota(3), 1);
    }
}
