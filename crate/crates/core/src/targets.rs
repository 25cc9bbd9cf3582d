//! Target distributions.
//!
//! Every target is an unnormalized density restricted to a box and is
//! evaluated in log space only: the benchmark densities are raised to large
//! powers (e.g. `20^1000`) and overflow any float if exponentiated.
//! Points outside the box have log-density `-inf`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box `[lower, upper]` in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundedDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("domain", "dimension must be positive"));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(
                    "domain",
                    format!("coordinate {k}: bounds [{lo}, {hi}] are not a proper interval"),
                ));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Closed-box membership. Assumes `x.len() == self.dim()`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        self.check_dim(shift)?;
        Self::new(
            self.lower.iter().zip(shift).map(|(l, s)| l + s).collect(),
            self.upper.iter().zip(shift).map(|(u, s)| u + s).collect(),
        )
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// An unnormalized density on a bounded box.
///
/// Implementors supply the density formula for in-domain points; the
/// provided [`Target::log_density`] handles dimension checks and the
/// out-of-domain convention.
pub trait Target: Send + Sync {
    fn domain(&self) -> &BoundedDomain;

    /// Log-density at a point known to lie inside the domain.
    fn log_density_in_domain(&self, x: &[f64]) -> f64;

    fn dim(&self) -> usize {
        self.domain().dim()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.domain().check_dim(x)?;
        if !self.domain().contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_density_in_domain(x))
    }
}

impl<T: Target + ?Sized> Target for Box<T> {
    fn domain(&self) -> &BoundedDomain {
        (**self).domain()
    }

    fn log_density_in_domain(&self, x: &[f64]) -> f64 {
        (**self).log_density_in_domain(x)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Parameters of an isotropic Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Per-component isotropic scale. A variance unless `scale_is_std`.
    pub scales: Vec<f64>,
    pub scale_is_std: bool,
}

impl GaussianMixtureSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        let n = self.weights.len();
        if n == 0 {
            return Err(Error::invalid("mixture", "needs at least one component"));
        }
        if self.means.len() != n || self.scales.len() != n {
            return Err(Error::invalid(
                "mixture",
                "weights, means and scales must have equal length",
            ));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture", "weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "mixture",
                format!("weights sum to {total}, not 1"),
            ));
        }
        if self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("mixture", "scales must be positive"));
        }
        for mu in &self.means {
            if mu.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: mu.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GaussianMixture {
    spec: GaussianMixtureSpec,
    domain: BoundedDomain,
    // log w_i - (k/2) log(2 pi v_i), precomputed per component
    log_norms: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(spec: GaussianMixtureSpec, domain: BoundedDomain) -> Result<Self> {
        spec.validate(domain.dim())?;
        let k = domain.dim() as f64;
        let variances: Vec<f64> = spec
            .scales
            .iter()
            .map(|s| if spec.scale_is_std { s * s } else { *s })
            .collect();
        let log_norms = spec
            .weights
            .iter()
            .zip(&variances)
            .map(|(w, v)| w.ln() - 0.5 * k * (2.0 * PI * v).ln())
            .collect();
        Ok(Self {
            spec,
            domain,
            log_norms,
            variances,
        })
    }

    pub fn spec(&self) -> &GaussianMixtureSpec {
        &self.spec
    }
}

impl Target for GaussianMixture {
    fn domain(&self) -> &BoundedDomain {
        &self.domain
    }

    fn log_density_in_domain(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .spec
            .means
            .iter()
            .zip(self.log_norms.iter().zip(&self.variances))
            .map(|(mu, (log_norm, var))| {
                let sq: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                log_norm - sq / (2.0 * var)
            })
            .collect();
        log_sum_exp(&terms)
    }
}

/// Random mixture benchmark: `n` equally weighted components with means
/// uniform in `[-1, 1]^dim` and scales uniform in `[0.01, 0.3]`, on the box
/// `[-2, 2]^dim`. Deterministic in `seed`.
pub fn make_gaussian_mixture(
    seed: u64,
    n: usize,
    dim: usize,
    scale_is_std: bool,
) -> Result<GaussianMixture> {
    if n == 0 {
        return Err(Error::invalid("n", "mixture needs at least one component"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let scales = (0..n).map(|_| rng.random_range(0.01..=0.3)).collect();
    let spec = GaussianMixtureSpec {
        weights: vec![1.0 / n as f64; n],
        means,
        scales,
        scale_is_std,
    };
    GaussianMixture::new(spec, BoundedDomain::cube(dim, -2.0, 2.0)?)
}

/// `(1/2 prod cos x_k + 1/2)^beta` on `[-3pi/2, 3pi/2]^dim`.
#[derive(Debug, Clone)]
pub struct EggBox {
    beta_power: f64,
    domain: BoundedDomain,
}

impl EggBox {
    pub fn new(dim: usize, beta_power: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !(beta_power > 0.0) {
            return Err(Error::invalid("beta_power", "must be positive"));
        }
        let half_width = 3.0 * FRAC_PI_2;
        Ok(Self {
            beta_power,
            domain: BoundedDomain::cube(dim, -half_width, half_width)?,
        })
    }
}

impl Target for EggBox {
    fn domain(&self) -> &BoundedDomain {
        &self.domain
    }

    fn log_density_in_domain(&self, x: &[f64]) -> f64 {
        let prod: f64 = x.iter().map(|v| v.cos()).product();
        // rounding can push the base a hair below zero at the exact zeros
        self.beta_power * (0.5 * prod + 0.5).max(0.0).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosenbrockSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub beta_power: f64,
    /// Use `(a - x)^2` instead of `(a - x^2)^2` as the first term.
    #[serde(default)]
    pub classic_first_term: bool,
}

impl Default for RosenbrockSpec {
    fn default() -> Self {
        Self {
            a: 4.0,
            b: 1.0,
            c: 0.1,
            beta_power: 1000.0,
            classic_first_term: false,
        }
    }
}

/// Two-mode Rosenbrock density
/// `(1/(c + f(x, y)) + 1/(c + f(-x, y)))^beta` on `[-6, 6]^2`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    spec: RosenbrockSpec,
    domain: BoundedDomain,
}

impl Rosenbrock {
    pub fn new(spec: RosenbrockSpec) -> Result<Self> {
        for (name, v) in [("a", spec.a), ("b", spec.b), ("c", spec.c), ("beta_power", spec.beta_power)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            spec,
            domain: BoundedDomain::cube(2, -6.0, 6.0)?,
        })
    }

    fn valley(&self, x: f64, y: f64) -> f64 {
        let RosenbrockSpec { a, b, .. } = self.spec;
        let first = if self.spec.classic_first_term {
            a - x
        } else {
            a - x * x
        };
        first * first + b * (y - x * x) * (y - x * x)
    }
}

impl Target for Rosenbrock {
    fn domain(&self) -> &BoundedDomain {
        &self.domain
    }

    fn log_density_in_domain(&self, p: &[f64]) -> f64 {
        let (x, y) = (p[0], p[1]);
        let c = self.spec.c;
        let inner = 1.0 / (c + self.valley(x, y)) + 1.0 / (c + self.valley(-x, y));
        self.spec.beta_power * inner.ln()
    }
}

fn default_components() -> usize {
    10
}

fn default_mixture_dim() -> usize {
    8
}

/// Target selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    GaussianMixture {
        seed: u64,
        #[serde(default = "default_components")]
        components: usize,
        #[serde(default = "default_mixture_dim")]
        dim: usize,
        #[serde(default)]
        scale_is_std: bool,
    },
    Eggbox {
        dim: usize,
        beta_power: f64,
    },
    Rosenbrock(RosenbrockSpec),
}

impl TargetConfig {
    pub fn build(&self) -> Result<Box<dyn Target>> {
        Ok(match self {
            TargetConfig::GaussianMixture {
                seed,
                components,
                dim,
                scale_is_std,
            } => Box::new(make_gaussian_mixture(*seed, *components, *dim, *scale_is_std)?),
            TargetConfig::Eggbox { dim, beta_power } => Box::new(EggBox::new(*dim, *beta_power)?),
            TargetConfig::Rosenbrock(spec) => Box::new(Rosenbrock::new(*spec)?),
        })
    }
}

/// `count` points drawn i.i.d. uniformly from the box.
pub fn uniform_init<R: Rng + ?Sized>(
    domain: &BoundedDomain,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            domain
                .lower()
                .iter()
                .zip(domain.upper())
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect()
        })
        .collect()
}
