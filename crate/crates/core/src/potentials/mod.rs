//! Target potentials `U` and reference potentials `U0`.
//!
//! Every potential exposes its value and, when one exists, an exact
//! gradient. Nonsmooth potentials report a subgradient selection (the
//! one-sided derivative rule documented on each type) so that kink points
//! never produce NaN.

mod composite;
mod laplace;
mod logistic;
mod log_quadratic;
mod penalty;

use std::fmt;
use std::sync::Arc;

pub use composite::{CompositePotential, FnPotential, Ridge, SumPotential};
pub use laplace::{laplace1d_potential, multivariate_laplace_potential, Laplace1d, MultivariateLaplace};
pub use log_quadratic::{heavy_tail_potential, student_t_pair, LogQuadratic, StudentTPair};
pub use logistic::{logistic_loss, sigmoid, LogisticLoss};
pub use penalty::{penalty_value, smoothed_penalty, Penalty, PenaltyKind, PenaltyPotential, SmoothedPenalty};

/// Optional analytic constants attached to a potential. These are supplied
/// by whoever builds the potential; nothing here infers them.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PotentialMeta {
    /// Lipschitz constant (ℓ2) of the nonsmooth part.
    pub lipschitz_k: Option<f64>,
    pub strong_convexity: Option<f64>,
    pub smoothness: Option<f64>,
}

pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `out` and returns true, or returns false
    /// (leaving `out` untouched) when the potential has no gradient.
    fn grad_into(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    fn has_grad(&self) -> bool {
        false
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta::default()
    }

    fn grad(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.grad_into(x, &mut out).then_some(out)
    }
}

impl fmt::Debug for dyn Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential(dim = {})", self.dim())
    }
}

pub type SharedPotential = Arc<dyn Potential>;

impl<P: Potential + ?Sized> Potential for Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        (**self).grad_into(x, out)
    }
    fn has_grad(&self) -> bool {
        (**self).has_grad()
    }
    fn meta(&self) -> PotentialMeta {
        (**self).meta()
    }
}
