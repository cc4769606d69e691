//! Kernels `K(y|θ)`, the baseline `G₀`, lazily drawn atoms and mixture densities.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::scalar::{compensated_sum, Scalar};
use crate::weights::{Bounded, ComponentIndex, WeightVector};

/// Parameter of a univariate normal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalAtom<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Scalar> NormalAtom<T> {
    pub fn new(mean: T, variance: T) -> Result<Self> {
        if !(variance > T::zero()) || !mean.is_finite() || !variance.is_finite() {
            return Err(crate::error::invalid(
                "variance",
                format!("need finite mean and variance > 0, got ({mean}, {variance})"),
            ));
        }
        Ok(Self { mean, variance })
    }
}

/// Kernel family `K(y|θ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[non_exhaustive]
pub enum KernelSpec {
    /// `N(y | mean, variance)`.
    #[default]
    Normal,
}

impl KernelSpec {
    pub fn density<T: Scalar>(&self, y: T, atom: &NormalAtom<T>) -> T {
        match self {
            KernelSpec::Normal => {
                let z = (y - atom.mean) / atom.variance.sqrt();
                (-(z * z) / T::of(2.0)).exp()
                    / (T::of(std::f64::consts::TAU) * atom.variance).sqrt()
            }
        }
    }

    /// `ln K(y|θ)`.
    pub fn ln_density(&self, y: f64, atom: &NormalAtom<f64>) -> f64 {
        match self {
            KernelSpec::Normal => {
                let z = y - atom.mean;
                -0.5 * (std::f64::consts::TAU * atom.variance).ln() - z * z / (2.0 * atom.variance)
            }
        }
    }

    /// `sup_θ K(y|θ)` when finite. The normal kernel is unbounded as the variance shrinks.
    pub fn sup_density<T: Scalar>(&self, _y: T) -> Option<T> {
        match self {
            KernelSpec::Normal => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, atom: &NormalAtom<f64>, rng: &mut R) -> f64 {
        match self {
            KernelSpec::Normal => Normal::new(atom.mean, atom.variance.sqrt())
                .expect("validated atom")
                .sample(rng),
        }
    }
}

/// Baseline distribution `G₀` of the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[non_exhaustive]
pub enum BaselineSpec {
    /// `σ² ~ InvGamma(alpha, beta)`, `μ | σ² ~ N(mu, σ²/kappa)`.
    NormalInverseGamma {
        mu: f64,
        kappa: f64,
        alpha: f64,
        beta: f64,
    },
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec::NormalInverseGamma {
            mu: 0.0,
            kappa: 0.01,
            alpha: 2.0,
            beta: 1.0,
        }
    }
}

impl BaselineSpec {
    pub fn normal_inverse_gamma(mu: f64, kappa: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(crate::error::invalid("mu0", "must be finite"));
        }
        require_positive("kappa0", kappa)?;
        require_positive("alpha0", alpha)?;
        require_positive("beta0", beta)?;
        Ok(BaselineSpec::NormalInverseGamma {
            mu,
            kappa,
            alpha,
            beta,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NormalAtom<f64> {
        match *self {
            BaselineSpec::NormalInverseGamma {
                mu,
                kappa,
                alpha,
                beta,
            } => {
                let precision = Gamma::new(alpha, 1.0 / beta)
                    .expect("validated")
                    .sample(rng);
                let variance = (1.0 / precision).max(f64::MIN_POSITIVE);
                let mean = Normal::new(mu, (variance / kappa).sqrt())
                    .expect("validated")
                    .sample(rng);
                NormalAtom { mean, variance }
            }
        }
    }
}

/// Atoms `θ_1, θ_2, …` of one realization, drawn i.i.d. from the baseline on first use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomStore<T> {
    baseline: BaselineSpec,
    atoms: Vec<NormalAtom<T>>,
}

impl<T: Scalar> AtomStore<T> {
    pub fn new(baseline: BaselineSpec) -> Self {
        Self {
            baseline,
            atoms: Vec::new(),
        }
    }

    /// A store whose first atoms are fixed; later indices still come from the baseline.
    pub fn with_atoms(baseline: BaselineSpec, atoms: Vec<NormalAtom<T>>) -> Self {
        Self { baseline, atoms }
    }

    pub fn baseline(&self) -> &BaselineSpec {
        &self.baseline
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, j: ComponentIndex) -> Option<&NormalAtom<T>> {
        self.atoms.get(j.offset())
    }

    /// Draws atoms until index `j` exists. Existing atoms are never redrawn.
    pub fn ensure<R: Rng + ?Sized>(&mut self, j: ComponentIndex, rng: &mut R) -> &NormalAtom<T> {
        while self.atoms.len() <= j.offset() {
            let a = self.baseline.sample(rng);
            self.atoms.push(NormalAtom {
                mean: T::of(a.mean),
                variance: T::of(a.variance).max(T::min_positive_value()),
            });
        }
        &self.atoms[j.offset()]
    }
}

/// `f(y) = Σ_j w_j K(y|θ_j)`.
///
/// The bound is `tail_mass · sup_θ K(y|θ)`; `None` flags a kernel without a
/// finite supremum while tail mass is present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureDensity<T> {
    pub value: T,
    pub tail_bound: Option<T>,
}

impl<T: Scalar> MixtureDensity<T> {
    pub fn bounded(&self) -> Option<Bounded<T>> {
        self.tail_bound.map(|b| Bounded {
            value: self.value,
            truncation_bound: b,
        })
    }
}

pub fn mixture_density<T: Scalar>(
    w: &WeightVector<T>,
    atoms: &AtomStore<T>,
    kernel: KernelSpec,
    y: T,
) -> Result<MixtureDensity<T>> {
    if atoms.len() < w.len() {
        return Err(Error::Data(format!(
            "{} atoms materialized for {} weights",
            atoms.len(),
            w.len()
        )));
    }
    let value = compensated_sum(
        w.weights()
            .iter()
            .zip(atoms.atoms.iter())
            .filter(|(wj, _)| **wj > T::zero())
            .map(|(wj, a)| *wj * kernel.density(y, a)),
    );
    let tail_bound = if w.tail_mass() == T::zero() {
        Some(T::zero())
    } else {
        kernel.sup_density(y).map(|s| s * w.tail_mass())
    };
    Ok(MixtureDensity { value, tail_bound })
}
