//! Analytic and numerically inverted quantile functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::quad::integrate;

/// Absolute CDF tolerance for numeric inversion.
pub const QUANTILE_TOL: f64 = 1e-10;
pub const MAX_BISECTIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub enum QuantileKind {
    Analytic,
    NumericInversion { lo: f64, hi: f64 },
}

/// A quantile function p ↦ Q(p) on (0, 1).
#[derive(Clone)]
pub struct QuantileFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    kind: QuantileKind,
}

impl fmt::Debug for QuantileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileFn").field("kind", &self.kind).finish()
    }
}

impl QuantileFn {
    pub fn analytic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            kind: QuantileKind::Analytic,
        }
    }

    /// Quantile by bisection on `cdf` inside `[lo, hi]`. Out-of-bracket
    /// probabilities saturate at the bracket ends.
    pub fn from_cdf(cdf: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64) -> Self {
        let f = move |p: f64| match numeric_quantile(&cdf, p, (lo, hi)) {
            Ok(x) => x,
            Err(_) if p <= cdf(lo) => lo,
            Err(_) => hi,
        };
        Self {
            f: Arc::new(f),
            kind: QuantileKind::NumericInversion { lo, hi },
        }
    }

    pub fn laplace(loc: f64, scale: f64) -> Self {
        Self::analytic(move |p| laplace_quantile_unchecked(p, loc, scale))
    }

    pub fn kind(&self) -> &QuantileKind {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        (self.f)(p)
    }

    /// Shifted copy: Q(p) + c.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = Arc::clone(&self.f);
        Self {
            f: Arc::new(move |p| inner(p) + c),
            kind: self.kind.clone(),
        }
    }
}

pub fn laplace_cdf(x: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    if z < 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

pub fn laplace_pdf(x: f64, loc: f64, scale: f64) -> f64 {
    (-(x - loc).abs() / scale).exp() / (2.0 * scale)
}

fn laplace_quantile_unchecked(p: f64, loc: f64, scale: f64) -> f64 {
    if p < 0.5 {
        loc + scale * (2.0 * p).ln()
    } else {
        loc - scale * (2.0 * (1.0 - p)).ln()
    }
}

/// Inverse CDF of Laplace(loc, scale).
pub fn laplace_quantile(p: f64, loc: f64, scale: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("Laplace scale must be positive, got {scale}")));
    }
    Ok(laplace_quantile_unchecked(p, loc, scale))
}

/// Solves cdf(x) = p for x in `bracket` by bisection, stopping once
/// |cdf(x) - p| ≤ 1e-10 or the bracket collapses to adjacent floats.
pub fn numeric_quantile<F: Fn(f64) -> f64>(cdf: F, p: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (cdf_lo, cdf_hi) = (cdf(lo), cdf(hi));
    if !(cdf_lo <= p && p <= cdf_hi) {
        return Err(Error::Bracket {
            p,
            lo,
            hi,
            cdf_lo,
            cdf_hi,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let c = cdf(mid);
        if (c - p).abs() <= QUANTILE_TOL * 1e-2 {
            return Ok(mid);
        }
        if c < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(mid)
}

/// CDF of the one-dimensional density proportional to `(1 + x²)^(-s)`,
/// `s > 1/2`. Integrates `cos^(2s-2)` in the angle `θ = atan x`.
#[derive(Clone, Debug)]
pub struct PowerTailCdf {
    s: f64,
    norm: f64,
}

impl PowerTailCdf {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.5) {
            return Err(Error::Domain(format!("(1+x^2)^(-s) is integrable only for s > 1/2, got {s}")));
        }
        // ∫ cos^(2s-2) over (-π/2, π/2) = B(1/2, s - 1/2)
        let log_norm = 0.5 * std::f64::consts::PI.ln() + libm::lgamma(s - 0.5) - libm::lgamma(s);
        Ok(Self {
            s,
            norm: log_norm.exp(),
        })
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn density(&self, x: f64) -> f64 {
        (1.0 + x * x).powf(-self.s) / self.norm
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let theta = x.atan();
        let k = 2.0 * self.s - 2.0;
        let kernel = |t: f64| t.cos().max(0.0).powf(k);
        // integrate over the shorter side for precision in the tails
        if theta <= 0.0 {
            integrate(kernel, -std::f64::consts::FRAC_PI_2, theta, 1e-15) / self.norm
        } else {
            1.0 - integrate(kernel, theta, std::f64::consts::FRAC_PI_2, 1e-15) / self.norm
        }
    }

    pub fn quantile_fn(&self) -> QuantileFn {
        let me = self.clone();
        QuantileFn::from_cdf(move |x| me.cdf(x), -1e12, 1e12)
    }
}

/// Student-t CDF with `nu` degrees of freedom, via the power-tail form
/// with `s = (nu + 1)/2` and `x = t/√nu`.
pub fn student_t_cdf(t: f64, nu: f64) -> Result<f64> {
    Ok(PowerTailCdf::new(0.5 * (nu + 1.0))?.cdf(t / nu.sqrt()))
}

/// Closed-form quantile of the Student-t distribution with 4 degrees of freedom.
pub fn student_t4_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let alpha = 4.0 * p * (1.0 - p);
    let sa = alpha.sqrt();
    let q = (sa.acos() / 3.0).cos() / sa;
    Ok((p - 0.5).signum() * 2.0 * (q - 1.0).sqrt())
}
