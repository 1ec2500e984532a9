use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::potentials::{
    CompositePotential, PenaltyKind, PenaltyPotential, Potential, Ridge, SharedPotential, SumPotential,
};
use crate::smoothing::{
    l1_gaussian_closed_form_into, mc_smoothed_grad_into, mc_smoothed_value, mc_smoothed_value_and_grad,
    SmoothingSpec,
};

/// Bound on |U - U0| before exponentiation.
pub const DEFAULT_CLAMP: f64 = 30.0;

/// Result of clamping an exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEval {
    pub exponent: f64,
    pub clamped: bool,
}

impl OracleEval {
    pub fn clamp(t: f64, bound: f64) -> Self {
        let c = t.clamp(-bound, bound);
        Self {
            exponent: c,
            clamped: c != t,
        }
    }
}

/// Source of `∇U0(x)` and `U(x) - U0(x)`, exact or estimated.
pub trait DriftOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `∇U0(x)` into `grad`. Returns `U(x) - U0(x)` when
    /// `need_exponent` is set and 0 otherwise; ULA never asks, so no
    /// randomness is spent on values it would discard.
    fn eval(&self, x: &[f64], rng: &mut RngStream, need_exponent: bool, grad: &mut [f64]) -> f64;

    fn exponent_clamp(&self) -> f64 {
        DEFAULT_CLAMP
    }
}

/// Target `U` with a smooth reference `U0`.
#[derive(Clone, Debug)]
pub struct AnchorPair {
    pub u: SharedPotential,
    pub u0: SharedPotential,
    pub exponent_clamp: f64,
}

impl AnchorPair {
    pub fn new(u: SharedPotential, u0: SharedPotential) -> Result<Self> {
        if u.dim() != u0.dim() {
            return Err(Error::Shape(format!("U has dimension {} but U0 has {}", u.dim(), u0.dim())));
        }
        if !u0.has_grad() {
            return Err(Error::Domain("reference potential must provide a gradient".into()));
        }
        Ok(Self {
            u,
            u0,
            exponent_clamp: DEFAULT_CLAMP,
        })
    }

    /// Plain Langevin on `U`, which must then be differentiable.
    pub fn same(u: SharedPotential) -> Result<Self> {
        Self::new(Arc::clone(&u), u)
    }

    pub fn with_clamp(mut self, bound: f64) -> Self {
        self.exponent_clamp = bound;
        self
    }

    /// `b(x) = -∇U0 e^{clamp(U-U0)}` and `σ(x) = e^{clamp(U-U0)/2}`.
    pub fn drift_diffusion(&self, x: &[f64]) -> (Vec<f64>, f64, bool) {
        let ev = OracleEval::clamp(self.u.value(x) - self.u0.value(x), self.exponent_clamp);
        let mut b = self.u0.grad(x).expect("checked at construction");
        let s = ev.exponent.exp();
        b.iter_mut().for_each(|v| *v = -*v * s);
        (b, (0.5 * ev.exponent).exp(), ev.clamped)
    }
}

impl DriftOracle for AnchorPair {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn eval(&self, x: &[f64], _rng: &mut RngStream, need_exponent: bool, grad: &mut [f64]) -> f64 {
        self.u0.grad_into(x, grad);
        if need_exponent {
            self.u.value(x) - self.u0.value(x)
        } else {
            0.0
        }
    }

    fn exponent_clamp(&self) -> f64 {
        self.exponent_clamp
    }
}

/// Target `U = f + g` with smooth `f` (optional) and nonsmooth `g`, where
/// `U0 = f + g0` and `g0` is the Gaussian smoothing of `g`, estimated by
/// fresh Monte Carlo batches at every call. The exponent uses the exact
/// `g(x)`, so it equals `g(x) - ĝ0(x)`; the smooth parts cancel exactly.
#[derive(Clone, Debug)]
pub struct GaussianSmoothingOracle {
    pub smooth: Option<SharedPotential>,
    pub rough: SharedPotential,
    pub spec: SmoothingSpec,
}

impl GaussianSmoothingOracle {
    pub fn new(smooth: Option<SharedPotential>, rough: SharedPotential, spec: SmoothingSpec) -> Result<Self> {
        if let Some(f) = &smooth {
            if f.dim() != rough.dim() {
                return Err(Error::Shape(format!("smooth part has dimension {} but g has {}", f.dim(), rough.dim())));
            }
            if !f.has_grad() {
                return Err(Error::Domain("smooth part must provide a gradient".into()));
            }
        }
        Ok(Self { smooth, rough, spec })
    }

    /// `f + m0‖x‖²` as the smooth part and the penalty as `g`.
    pub fn from_composite(target: &CompositePotential, spec: SmoothingSpec) -> Self {
        let d = target.dim();
        let mut terms: Vec<SharedPotential> = vec![Arc::clone(&target.f)];
        if target.m0 != 0.0 {
            terms.push(Arc::new(Ridge { m0: target.m0, d }));
        }
        let smooth: SharedPotential = if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            Arc::new(SumPotential::new(terms))
        };
        Self {
            smooth: Some(smooth),
            rough: Arc::new(PenaltyPotential { penalty: target.g, d }),
            spec,
        }
    }
}

impl DriftOracle for GaussianSmoothingOracle {
    fn dim(&self) -> usize {
        self.rough.dim()
    }

    fn eval(&self, x: &[f64], rng: &mut RngStream, need_exponent: bool, grad: &mut [f64]) -> f64 {
        let g = |y: &[f64]| self.rough.value(y);
        let mut mc = vec![0.0; x.len()];
        let exponent = if need_exponent {
            let g0 = if self.spec.independent_batches {
                let v = mc_smoothed_value(g, x, &self.spec, rng);
                mc_smoothed_grad_into(g, x, &self.spec, rng, &mut mc);
                v
            } else {
                mc_smoothed_value_and_grad(g, x, &self.spec, rng, &mut mc)
            };
            g(x) - g0
        } else {
            mc_smoothed_grad_into(g, x, &self.spec, rng, &mut mc);
            0.0
        };
        match &self.smooth {
            Some(f) => {
                f.grad_into(x, grad);
                for (o, m) in grad.iter_mut().zip(&mc) {
                    *o += m;
                }
            }
            None => grad.copy_from_slice(&mc),
        }
        exponent
    }
}

/// As [`GaussianSmoothingOracle`] for an ℓ1 penalty, with the smoothing
/// evaluated in closed form instead of by sampling.
#[derive(Clone, Debug)]
pub struct ClosedFormL1Oracle {
    target: CompositePotential,
    mu: f64,
}

impl ClosedFormL1Oracle {
    pub fn new(target: CompositePotential, mu: f64) -> Result<Self> {
        if target.g.kind != PenaltyKind::L1 {
            return Err(Error::Domain(format!("closed-form smoothing needs an l1 penalty, got {}", target.g.kind)));
        }
        if !(mu > 0.0) {
            return Err(Error::Domain(format!("smoothing scale must be positive, got {mu}")));
        }
        Ok(Self { target, mu })
    }
}

impl DriftOracle for ClosedFormL1Oracle {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn eval(&self, x: &[f64], _rng: &mut RngStream, need_exponent: bool, grad: &mut [f64]) -> f64 {
        let mut g0_grad = vec![0.0; x.len()];
        let g0 = l1_gaussian_closed_form_into(x, self.mu, self.target.g.lambda, &mut g0_grad);
        self.target.smooth_grad_into(x, grad);
        for (o, m) in grad.iter_mut().zip(&g0_grad) {
            *o += m;
        }
        if need_exponent {
            self.target.penalty_value(x) - g0
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{heavy_tail_potential, FnPotential, Penalty};

    fn zero_f(d: usize) -> SharedPotential {
        Arc::new(FnPotential::new(d, |_| 0.0).with_grad(|_, o| o.iter_mut().for_each(|v| *v = 0.0)))
    }

    #[test]
    fn pair_identities_hold_without_clamping() {
        let u: SharedPotential = Arc::new(heavy_tail_potential(2.0, 2).unwrap());
        let u0: SharedPotential = Arc::new(heavy_tail_potential(1.0, 2).unwrap());
        let pair = AnchorPair::new(Arc::clone(&u), Arc::clone(&u0)).unwrap();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            let x = [3.0 * rng.normal(), 3.0 * rng.normal()];
            let (b, sigma, clamped) = pair.drift_diffusion(&x);
            assert!(!clamped);
            let gap = u0.value(&x) - u.value(&x);
            assert!((sigma * sigma * gap.exp() - 1.0).abs() < 1e-12);
            let g0 = u0.grad(&x).unwrap();
            for i in 0..2 {
                assert!((b[i] + g0[i] * sigma * sigma).abs() < 1e-12 * (1.0 + b[i].abs()));
            }
        }
    }

    #[test]
    fn clamping_is_reported() {
        assert_eq!(OracleEval::clamp(45.0, 30.0), OracleEval { exponent: 30.0, clamped: true });
        assert_eq!(OracleEval::clamp(-31.0, 30.0).exponent, -30.0);
        assert!(!OracleEval::clamp(29.0, 30.0).clamped);
    }

    #[test]
    fn pair_construction_checks() {
        let u: SharedPotential = Arc::new(heavy_tail_potential(2.0, 2).unwrap());
        let no_grad: SharedPotential = Arc::new(FnPotential::new(2, |_| 0.0));
        assert!(AnchorPair::new(Arc::clone(&u), no_grad).is_err());
        let other: SharedPotential = Arc::new(heavy_tail_potential(2.0, 3).unwrap());
        assert!(matches!(AnchorPair::new(u, other), Err(Error::Shape(_))));
    }

    #[test]
    fn closed_form_oracle_agrees_with_monte_carlo_on_average() {
        let target = CompositePotential::new(zero_f(1), Penalty::l1(2f64.sqrt()), 0.0);
        let exact = ClosedFormL1Oracle::new(target.clone(), 1.0).unwrap();
        let mc = GaussianSmoothingOracle::from_composite(&target, SmoothingSpec::new(1.0, 500).unwrap());
        let mut rng = RngStream::new(2, 0);
        let x = [0.4];
        let mut g = [0.0];
        let t_exact = exact.eval(&x, &mut rng, true, &mut g);
        let g_exact = g[0];
        let reps = 2000;
        let (mut tm, mut gm) = (0.0, 0.0);
        for _ in 0..reps {
            tm += mc.eval(&x, &mut rng, true, &mut g) / reps as f64;
            gm += g[0] / reps as f64;
        }
        assert!((tm - t_exact).abs() < 5e-3, "{tm} vs {t_exact}");
        assert!((gm - g_exact).abs() < 1e-2, "{gm} vs {g_exact}");
    }

    #[test]
    fn closed_form_oracle_rejects_other_penalties() {
        let target = CompositePotential::new(zero_f(1), Penalty::new(PenaltyKind::Mcp, 1.0, 3.0).unwrap(), 0.0);
        assert!(ClosedFormL1Oracle::new(target, 1.0).is_err());
    }
}
