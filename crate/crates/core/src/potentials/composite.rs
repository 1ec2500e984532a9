use std::fmt;
use std::sync::Arc;

use super::penalty::{penalty_value, Penalty};
use super::{Potential, PotentialMeta, SharedPotential};
use crate::numerics::norm_sq;

/// `m0 ‖x‖²`.
#[derive(Clone, Debug)]
pub struct Ridge {
    pub m0: f64,
    pub d: usize,
}

impl Potential for Ridge {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.m0 * norm_sq(x)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = 2.0 * self.m0 * v;
        }
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta {
            lipschitz_k: None,
            strong_convexity: Some(2.0 * self.m0),
            smoothness: Some(2.0 * self.m0),
        }
    }
}

/// Sum of potentials of equal dimension. Has a gradient only if every term does.
#[derive(Clone)]
pub struct SumPotential {
    terms: Vec<SharedPotential>,
    d: usize,
}

impl SumPotential {
    /// Panics if the terms disagree on dimension or the list is empty.
    pub fn new(terms: Vec<SharedPotential>) -> Self {
        let d = terms.first().expect("at least one term").dim();
        assert!(terms.iter().all(|t| t.dim() == d), "terms must share a dimension");
        Self { terms, d }
    }
}

impl fmt::Debug for SumPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SumPotential({} terms, dim = {})", self.terms.len(), self.d)
    }
}

impl Potential for SumPotential {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        if !self.has_grad() {
            return false;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; self.d];
        for t in &self.terms {
            t.grad_into(x, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += b;
            }
        }
        true
    }

    fn has_grad(&self) -> bool {
        self.terms.iter().all(|t| t.has_grad())
    }
}

/// `U = f + m0‖x‖² + g` with smooth `f` and a separable penalty `g`.
#[derive(Clone)]
pub struct CompositePotential {
    pub f: SharedPotential,
    pub g: Penalty,
    pub m0: f64,
}

impl CompositePotential {
    pub fn new(f: SharedPotential, g: Penalty, m0: f64) -> Self {
        Self { f, g, m0 }
    }

    /// `f(x) + m0‖x‖²`.
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.m0 * norm_sq(x)
    }

    /// Gradient of `f + m0‖x‖²`.
    pub fn smooth_grad_into(&self, x: &[f64], out: &mut [f64]) {
        assert!(self.f.grad_into(x, out), "smooth part must provide a gradient");
        for (o, &v) in out.iter_mut().zip(x) {
            *o += 2.0 * self.m0 * v;
        }
    }

    pub fn penalty_value(&self, x: &[f64]) -> f64 {
        penalty_value(&self.g, x)
    }
}

impl fmt::Debug for CompositePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositePotential")
            .field("dim", &self.f.dim())
            .field("g", &self.g)
            .field("m0", &self.m0)
            .finish()
    }
}

impl Potential for CompositePotential {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.penalty_value(x)
    }

    /// Smooth gradient plus the penalty's subgradient selection.
    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        self.smooth_grad_into(x, out);
        for (o, &v) in out.iter_mut().zip(x) {
            *o += self.g.scalar_derivative(v);
        }
        true
    }

    fn has_grad(&self) -> bool {
        self.f.has_grad()
    }

    fn meta(&self) -> PotentialMeta {
        let fm = self.f.meta();
        PotentialMeta {
            lipschitz_k: Some(self.g.lipschitz(self.dim())),
            strong_convexity: fm.strong_convexity.map(|m| m + 2.0 * self.m0),
            smoothness: fm.smoothness.map(|l| l + 2.0 * self.m0),
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Potential built from closures.
#[derive(Clone)]
pub struct FnPotential {
    d: usize,
    value: Arc<ValueFn>,
    grad: Option<Arc<GradFn>>,
    meta: PotentialMeta,
}

impl FnPotential {
    pub fn new(d: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            d,
            value: Arc::new(value),
            grad: None,
            meta: PotentialMeta::default(),
        }
    }

    pub fn with_grad(mut self, grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_meta(mut self, meta: PotentialMeta) -> Self {
        self.meta = meta;
        self
    }
}

impl fmt::Debug for FnPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnPotential(dim = {}, grad = {})", self.d, self.grad.is_some())
    }
}

impl Potential for FnPotential {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        match &self.grad {
            Some(g) => {
                g(x, out);
                true
            }
            None => false,
        }
    }

    fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    fn meta(&self) -> PotentialMeta {
        self.meta
    }
}
