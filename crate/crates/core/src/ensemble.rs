//! Affine-invariant ensemble sampler with the stretch move, run on a
//! tempered density `pi(x)^beta`.

use rand::Rng;

use crate::targets::Target;
use crate::{Error, Result};

pub const DEFAULT_STRETCH_A: f64 = 2.0;
pub const DEFAULT_WALKERS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchConfig {
    a: f64,
}

impl StretchConfig {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::invalid("stretch_a", format!("must exceed 1, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

impl Default for StretchConfig {
    fn default() -> Self {
        Self {
            a: DEFAULT_STRETCH_A,
        }
    }
}

/// Inverse-CDF draw from `g(z) ∝ 1/sqrt(z)` on `[1/a, a]`.
pub fn draw_stretch_z(a: f64, u: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::invalid("stretch_a", format!("must exceed 1, got {a}")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid("u", format!("must lie in [0, 1], got {u}")));
    }
    let lo = a.sqrt().recip();
    let w = lo + u * (a.sqrt() - lo);
    Ok(w * w)
}

/// Log acceptance probability of a stretch proposal in `dim` dimensions
/// under the tempered density. An out-of-domain (or zero-density) proposal
/// is rejected at every beta, including `beta == 0`.
pub fn stretch_log_accept(dim: usize, z: f64, beta: f64, logpi_old: f64, logpi_new: f64) -> f64 {
    if logpi_new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let jacobian = (dim as f64 - 1.0) * z.ln();
    let density = if beta == 0.0 {
        0.0
    } else {
        beta * (logpi_new - logpi_old)
    };
    (jacobian + density).min(0.0)
}

/// Walkers of one temperature level with their cached untempered
/// log-densities.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    positions: Vec<Vec<f64>>,
    logpi: Vec<f64>,
}

impl Ensemble {
    pub fn new<T: Target + ?Sized>(positions: Vec<Vec<f64>>, target: &T) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooFewWalkers(positions.len()));
        }
        let logpi = positions
            .iter()
            .map(|x| target.log_density(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { positions, logpi })
    }

    pub fn walkers(&self) -> usize {
        self.positions.len()
    }

    pub fn dim(&self) -> usize {
        self.positions[0].len()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn logpi(&self) -> &[f64] {
        &self.logpi
    }

    /// Exchange walker `i` of `self` with walker `j` of `other`, cached
    /// log-densities included.
    pub fn exchange(&mut self, i: usize, other: &mut Ensemble, j: usize) {
        std::mem::swap(&mut self.positions[i], &mut other.positions[j]);
        std::mem::swap(&mut self.logpi[i], &mut other.logpi[j]);
    }

    /// Stretch proposal for walker `i` using complementary walker `j`.
    pub fn propose(&self, i: usize, j: usize, z: f64) -> Vec<f64> {
        self.positions[j]
            .iter()
            .zip(&self.positions[i])
            .map(|(xj, xi)| xj + z * (xi - xj))
            .collect()
    }

    /// One sequential sweep over all walkers; returns the number accepted.
    ///
    /// Each walker draws, in order: the complementary walker, the stretch
    /// variate, and the acceptance uniform.
    pub fn stretch_sweep<T: Target + ?Sized, R: Rng + ?Sized>(
        &mut self,
        target: &T,
        beta: f64,
        cfg: &StretchConfig,
        rng: &mut R,
    ) -> Result<usize> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid("beta", format!("must lie in [0, 1], got {beta}")));
        }
        let n = self.walkers();
        let dim = self.dim();
        let mut accepted = 0;
        for i in 0..n {
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let z = draw_stretch_z(cfg.a, rng.random::<f64>())?;
            let proposal = self.propose(i, j, z);
            let logpi_new = target.log_density(&proposal)?;
            let log_accept = stretch_log_accept(dim, z, beta, self.logpi[i], logpi_new);
            let u: f64 = rng.random();
            if u.ln() < log_accept {
                self.positions[i] = proposal;
                self.logpi[i] = logpi_new;
                accepted += 1;
            }
        }
        Ok(accepted)
    }
}
