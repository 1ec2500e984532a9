use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Potential, PotentialMeta};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    #[default]
    #[serde(alias = "lasso")]
    L1,
    Scad,
    Mcp,
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "lasso" => Ok(Self::L1),
            "scad" => Ok(Self::Scad),
            "mcp" => Ok(Self::Mcp),
            other => Err(Error::Spec(format!("unknown penalty kind {other:?}"))),
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L1 => "l1",
            Self::Scad => "scad",
            Self::Mcp => "mcp",
        })
    }
}

/// Separable sparsity penalty `g(x) = Σ_i p(x_i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty {
    pub kind: PenaltyKind,
    pub lambda: f64,
    /// Concavity parameter; ignored for L1.
    pub a: f64,
}

impl Penalty {
    pub fn new(kind: PenaltyKind, lambda: f64, a: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("penalty weight must be finite and non-negative, got {lambda}")));
        }
        if kind != PenaltyKind::L1 && !(a > 1.0) {
            return Err(Error::Domain(format!("{kind} needs a > 1, got {a}")));
        }
        Ok(Self { kind, lambda, a })
    }

    pub fn l1(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::L1,
            lambda,
            a: f64::NAN,
        }
    }

    /// Per-coordinate value.
    pub fn scalar(&self, x: f64) -> f64 {
        let (l, a, t) = (self.lambda, self.a, x.abs());
        match self.kind {
            PenaltyKind::L1 => l * t,
            PenaltyKind::Scad if t <= l => l * t,
            PenaltyKind::Scad if t <= a * l => (2.0 * a * l * t - t * t - l * l) / (2.0 * (a - 1.0)),
            PenaltyKind::Scad => l * l * (a + 1.0) / 2.0,
            PenaltyKind::Mcp if t <= a * l => l * t - t * t / (2.0 * a),
            PenaltyKind::Mcp => a * l * l / 2.0,
        }
    }

    /// Per-coordinate derivative, with 0 selected at the kink.
    pub fn scalar_derivative(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let (l, a, t, s) = (self.lambda, self.a, x.abs(), x.signum());
        s * match self.kind {
            PenaltyKind::L1 => l,
            PenaltyKind::Scad if t <= l => l,
            PenaltyKind::Scad if t <= a * l => (a * l - t) / (a - 1.0),
            PenaltyKind::Scad => 0.0,
            PenaltyKind::Mcp if t <= a * l => l - t / a,
            PenaltyKind::Mcp => 0.0,
        }
    }

    /// Per-coordinate upper bound; infinite for L1.
    pub fn plateau(&self) -> f64 {
        let (l, a) = (self.lambda, self.a);
        match self.kind {
            PenaltyKind::L1 => f64::INFINITY,
            PenaltyKind::Scad => l * l * (a + 1.0) / 2.0,
            PenaltyKind::Mcp => a * l * l / 2.0,
        }
    }

    /// ℓ2 Lipschitz constant of `g` on ℝ^d. Every kind has per-coordinate
    /// slope at most λ, so this is λ√d.
    pub fn lipschitz(&self, d: usize) -> f64 {
        self.lambda * (d as f64).sqrt()
    }
}

pub fn penalty_value(p: &Penalty, x: &[f64]) -> f64 {
    x.iter().map(|&v| p.scalar(v)).sum()
}

/// A penalty viewed as a `d`-dimensional potential; its gradient is the
/// subgradient selection of [`Penalty::scalar_derivative`].
#[derive(Clone, Debug)]
pub struct PenaltyPotential {
    pub penalty: Penalty,
    pub d: usize,
}

impl Potential for PenaltyPotential {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        penalty_value(&self.penalty, x)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.penalty.scalar_derivative(v);
        }
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta {
            lipschitz_k: Some(self.penalty.lipschitz(self.d)),
            ..Default::default()
        }
    }
}

/// C¹ surrogate of a penalty obtained by replacing |x| with √(x² + ε²).
#[derive(Clone, Debug)]
pub struct SmoothedPenalty {
    pub penalty: Penalty,
    pub eps: f64,
    pub d: usize,
}

pub fn smoothed_penalty(penalty: Penalty, eps: f64, d: usize) -> Result<SmoothedPenalty> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("smoothing width must be positive, got {eps}")));
    }
    Ok(SmoothedPenalty { penalty, eps, d })
}

impl SmoothedPenalty {
    /// `(value, derivative)` for one coordinate.
    pub fn scalar(&self, x: f64) -> (f64, f64) {
        let (l, a, e2) = (self.penalty.lambda, self.penalty.a, self.eps * self.eps);
        let t = x.abs();
        let s = (x * x + e2).sqrt();
        match self.penalty.kind {
            PenaltyKind::L1 => (l * s, l * x / s),
            PenaltyKind::Scad => {
                let big_a = (a * a * l * l + e2).sqrt();
                let big_b = (l * l + e2).sqrt();
                let den = big_a - big_b;
                if t <= l {
                    (l * s, l * x / s)
                } else if t <= a * l {
                    let v = (2.0 * l * big_a * s - l * x * x - l * (l * l + 2.0 * e2)) / (2.0 * den);
                    (v, l * x * (big_a / s - 1.0) / den)
                } else {
                    (l * l * l * (a * a - 1.0) / (2.0 * den), 0.0)
                }
            }
            PenaltyKind::Mcp => {
                let big_a = (a * a * l * l + e2).sqrt();
                if t <= a * l {
                    (l * s - l * x * x / (2.0 * big_a), l * x / s - l * x / big_a)
                } else {
                    (l * (a * a * l * l + 2.0 * e2) / (2.0 * big_a), 0.0)
                }
            }
        }
    }
}

impl Potential for SmoothedPenalty {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.scalar(v).0).sum()
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.scalar(v).1;
        }
        true
    }

    fn has_grad(&self) -> bool {
        true
    }

    fn meta(&self) -> PotentialMeta {
        PotentialMeta {
            lipschitz_k: Some(self.penalty.lipschitz(self.d)),
            ..Default::default()
        }
    }
}
