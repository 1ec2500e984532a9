//! Non-asymptotic W2 bound for the anchored Euler–Maruyama scheme and the
//! parameter choice that makes the smoothed variant ε-accurate.

use std::f64::consts::{E, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};

/// Constants of the strongly log-concave setting: strong convexity `m`,
/// smoothness `L`, diffusion Lipschitz constant `√α`, the minimizer `x*`
/// of `U0` and the second moments entering `C3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub m: f64,
    pub l: f64,
    pub alpha: f64,
    pub d: usize,
    pub x_star_norm: f64,
    /// σ(x*); enters through ‖σ(x*) I_d‖_HS = |σ(x*)|√d.
    pub sigma_at_xstar: f64,
    /// E‖X0‖² under the initial law.
    pub e_x0_sq: f64,
    /// E‖X‖² under the target.
    pub e_pi_sq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremBound {
    pub eta_max: f64,
    /// The four candidates whose minimum is `eta_max`.
    pub eta_terms: [f64; 4],
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rate: f64,
}

pub fn theoretical_eta_max_and_c(k: &BoundConstants) -> Result<TheoremBound> {
    let BoundConstants { m, l, alpha, .. } = *k;
    if !(alpha >= 0.0) || !(alpha < m) {
        return Err(Error::Domain(format!("need 0 ≤ alpha < m for contraction, got alpha={alpha}, m={m}")));
    }
    if !(l >= m) {
        return Err(Error::Domain(format!("need L ≥ m, got L={l}, m={m}")));
    }
    let gap = m - alpha;
    let a4 = 1.0 + 4.0 * alpha;
    let lip_mix = 2.0 * l * a4.sqrt() + 20.0 * l * a4;
    let eta_terms = [
        1.0 / (l * l + 4.0 * alpha),
        1.0 / (4.0 * gap),
        (gap.sqrt() / (20.0 * SQRT_2 * a4)).powi(2),
        (gap / (8.0 * SQRT_2 * lip_mix)).powi(2),
    ];
    let eta_max = eta_terms.iter().copied().fold(f64::INFINITY, f64::min);
    let anchor = k.x_star_norm + k.sigma_at_xstar.abs() * (k.d as f64).sqrt();
    let c1 = 3.0 * l * a4.sqrt() * anchor;
    let c2 = 7.0 * a4 * anchor;
    let c3 = (4.0 * k.e_x0_sq + 6.0 * k.e_pi_sq).sqrt();
    let c = (2.0 * c1 + 8.0 * l * c2 + 2.0 * SQRT_2 * c3 * lip_mix) / gap + (2.0 * c2 + 10.0 * SQRT_2 * a4 * c3) / gap.sqrt();
    Ok(TheoremBound {
        eta_max,
        eta_terms,
        c,
        c1,
        c2,
        c3,
        rate: gap,
    })
}

/// `√2 e^{-(m-α)kη} W2(ν0, π) + √2 C √η`.
pub fn bound_curve(tb: &TheoremBound, eta: f64, w2_initial: f64, k: usize) -> f64 {
    SQRT_2 * (-tb.rate * k as f64 * eta).exp() * w2_initial + SQRT_2 * tb.c * eta.sqrt()
}

/// Everything the ε-accuracy parameter choice depends on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorollaryConstants {
    pub theorem: BoundConstants,
    /// Lipschitz constant K of the nonsmooth part g.
    pub lipschitz_k: f64,
    /// Smoothness of the smooth part f.
    pub l_f: f64,
    /// ‖x*_f‖ for the minimizer of f.
    pub xf_star_norm: f64,
    /// g(0).
    pub g_at_zero: f64,
    /// E‖x̃0 - x*‖².
    pub e_x0_minus_xstar_sq: f64,
    /// W2(ν0, π).
    pub w2_initial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hyperparameters {
    pub mu: f64,
    pub k: u64,
    pub eta: f64,
    /// Lower bound on the Monte Carlo batch size; may exceed any practical value.
    pub n: f64,
    /// Which step-size constraint is active.
    pub eta_binding: &'static str,
    pub theorem: TheoremBound,
}

/// Terms shared by the batch-size and step-size conditions.
#[derive(Clone, Copy, Debug)]
pub struct SmoothingConstants {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl CorollaryConstants {
    pub fn smoothing_constants(&self, mu: f64) -> SmoothingConstants {
        let d = self.theorem.d as f64;
        let (kk, lf) = (self.lipschitz_k, self.l_f);
        let a1 = 4.0 * (1.0 + E) * (2.0 * mu * mu * lf * lf + 8.0 * kk * kk * d);
        let a2 = 4.0
            * (1.0 + E)
            * (2.0 * mu * mu * lf * lf * self.xf_star_norm.powi(2)
                + 13.0 * mu * mu * kk * kk * d * d
                + 8.0 * self.g_at_zero.powi(2) * d);
        SmoothingConstants {
            a1,
            a2,
            b: (1.0 + 0.5 * E) / 3.0,
        }
    }

    /// The uniform drift-error constant `A`, which depends on `N` through
    /// an `N^{-1/4}` term.
    pub fn drift_error_constant(&self, mu: f64, eta: f64, n: f64) -> f64 {
        let t = &self.theorem;
        let d = t.d as f64;
        let SmoothingConstants { a1, a2, .. } = self.smoothing_constants(mu);
        let kk = self.lipschitz_k;
        let lf = self.l_f;
        let xs2 = t.x_star_norm.powi(2);
        let e3 = (3.0 * kk * mu * d.sqrt()).exp();
        let e6 = (6.0 * kk * mu * d.sqrt()).exp();
        let bracket = (4.0 * mu * mu * lf * lf + 8.0 * kk * kk * d) * xs2
            + 2.0 * mu * mu * lf * lf * self.xf_star_norm.powi(2)
            + 2.0 * kk * kk * mu * mu * (3.0 * d * d)
            + 4.0 * self.g_at_zero.powi(2) * d;
        2.0 * a1 * xs2
            + 2.0 * a1 * self.e_x0_minus_xstar_sq
            + 4.0 * a1 / t.m * e3 * d
            + 4.0 * a1 / t.m * (2.0 * a1).sqrt() / (mu * n.powf(0.25)) * (xs2 + a2 / (2.0 * a1))
            + 2.0 * a1 * eta / t.m * 2.0 * e6 / (mu * mu) * bracket
            + a2
    }

    /// `m μ² / (4 e^{6Kμ√μ d} (4μ²L_f² + 8K²d))`.
    pub fn smoothing_eta_cap(&self, mu: f64) -> f64 {
        let d = self.theorem.d as f64;
        let kk = self.lipschitz_k;
        self.theorem.m * mu * mu
            / (4.0 * (6.0 * kk * mu * mu.sqrt() * d).exp() * (4.0 * mu * mu * self.l_f.powi(2) + 8.0 * kk * kk * d))
    }

    /// Right-hand side of the first batch-size condition at a given `N`.
    pub fn batch_requirement(&self, eps: f64, mu: f64, eta: f64, k: u64, n: f64) -> f64 {
        let t = &self.theorem;
        let d = t.d as f64;
        let rho = 1.0 + 4.0 * t.l * t.l + 4.0 * d * t.alpha;
        let a = self.drift_error_constant(mu, eta, n);
        let b = self.smoothing_constants(mu).b;
        let growth = (eta * k as f64 * rho).exp_m1();
        ((4.0 / (mu * mu) * (2.0 * eta + 2.0) * a + 16.0 * d * b) * growth / (eps * self.eps_denominator())).powi(2)
    }

    fn eps_denominator(&self) -> f64 {
        let t = &self.theorem;
        1.0 + 2.0 * t.l * t.l + 4.0 * t.d as f64 * t.alpha
    }
}

/// Picks the largest admissible `μ` and `η`, the smallest `k`, and the
/// smallest `N` meeting both batch-size conditions. The `N` condition
/// involves `N` on both sides (through `A`); its right side decreases in
/// `N`, so iterating `N ← rhs(N)` from below converges to the least
/// solution. Also keeps `η ≤ η_max` so the underlying theorem applies.
pub fn select_hyperparameters(eps: f64, c: &CorollaryConstants) -> Result<Hyperparameters> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("accuracy must be positive, got {eps}")));
    }
    if !(c.lipschitz_k > 0.0) {
        return Err(Error::Infeasible("the smoothing scale bound needs K > 0".into()));
    }
    let tb = theoretical_eta_max_and_c(&c.theorem)?;
    let d = c.theorem.d as f64;
    let mu = 1.0 / (6.0 * c.lipschitz_k * d.sqrt());

    let candidates = [
        ((eps / (4.0 * SQRT_2 * tb.c)).powi(2), "accuracy"),
        (c.smoothing_eta_cap(mu), "smoothing"),
        (tb.eta_max, "theorem step-size cap"),
    ];
    let (eta, eta_binding) = candidates
        .iter()
        .copied()
        .fold((f64::INFINITY, ""), |acc, cand| if cand.0 < acc.0 { cand } else { acc });
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Infeasible(format!("step-size condition '{eta_binding}' leaves no positive step")));
    }

    let horizon = (2.0 * SQRT_2 * c.w2_initial / eps).ln().max(0.0) / tb.rate;
    let k_real = (horizon / eta).ceil();
    if !k_real.is_finite() || k_real > u64::MAX as f64 {
        return Err(Error::Infeasible("iteration count overflows".into()));
    }
    let k = k_real as u64;

    let sc = c.smoothing_constants(mu);
    let n_floor = (4.0 * (2.0 * sc.a1).sqrt() / (c.theorem.m * mu)).powi(4);
    let mut n = n_floor.ceil().max(1.0);
    for _ in 0..200 {
        let need = c.batch_requirement(eps, mu, eta, k, n).ceil();
        if !need.is_finite() {
            return Err(Error::Infeasible("batch-size condition is unbounded (e^{ηkϱ} overflows)".into()));
        }
        if n >= need {
            break;
        }
        n = need;
    }
    if n < c.batch_requirement(eps, mu, eta, k, n) {
        return Err(Error::Infeasible("batch-size fixed point did not settle".into()));
    }
    Ok(Hyperparameters {
        mu,
        k,
        eta,
        n,
        eta_binding,
        theorem: tb,
    })
}
