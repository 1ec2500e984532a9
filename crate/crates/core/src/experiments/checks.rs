//! Fast self-checks of the core identities, run by `alang check`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::numerics::RngStream;
use crate::potentials::{
    heavy_tail_potential, student_t_pair, CompositePotential, FnPotential, Penalty, SharedPotential,
};
use crate::samplers::{run_chain, AnchorPair, ClosedFormL1Oracle, DriftOracle, SamplerConfig, SamplerKind};
use crate::smoothing::{l1_gaussian_closed_form, mc_smoothed_grad_stats, smoothing_gap_bound, SmoothingSpec};

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn zero(d: usize) -> SharedPotential {
    Arc::new(FnPotential::new(d, |_| 0.0).with_grad(|_, o| o.iter_mut().for_each(|v| *v = 0.0)))
}

fn equivalence_targets() -> Result<Vec<(&'static str, Box<dyn DriftOracle>)>> {
    let u: SharedPotential = Arc::new(heavy_tail_potential(2.0, 1)?);
    let u0: SharedPotential = Arc::new(heavy_tail_potential(1.0, 1)?);
    let t = student_t_pair(4.0, vec![0.0], DMatrix::identity(1, 1))?;
    let laplace = ClosedFormL1Oracle::new(CompositePotential::new(zero(1), Penalty::l1(2f64.sqrt()), 0.0), 1.0)?;
    Ok(vec![
        ("smoothed Laplace", Box::new(laplace)),
        ("heavy tail", Box::new(AnchorPair::new(u, u0)?)),
        ("Student-t", Box::new(AnchorPair::new(Arc::new(t.target), Arc::new(t.anchor))?)),
    ])
}

/// Largest relative gap between coupled anchored and time-change chains.
pub fn coupled_chain_gap(oracle: &dyn DriftOracle, eta: f64, steps: usize, seed: u64) -> Result<f64> {
    let cfg = SamplerConfig::new(eta, steps)?;
    let x0 = vec![1.5; oracle.dim()];
    let a = run_chain(SamplerKind::Anchored, &cfg, oracle, &x0, RngStream::new(seed, 0))?;
    let b = run_chain(SamplerKind::TimeChange, &cfg, oracle, &x0, RngStream::new(seed, 0))?;
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.samples.rows().zip(b.samples.rows()) {
        for (x, z) in ra.iter().zip(rb) {
            worst = worst.max((x - z).abs() / x.abs().max(1.0));
        }
    }
    Ok(worst)
}

pub fn run_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    for (name, oracle) in equivalence_targets()? {
        let gap = coupled_chain_gap(oracle.as_ref(), 0.01, 1000, 7)?;
        out.push(outcome("anchored = time change", gap <= 1e-10, format!("{name}: max relative gap {gap:.3e}")));
    }

    let u: SharedPotential = Arc::new(heavy_tail_potential(2.0, 2)?);
    let pair = AnchorPair::same(Arc::clone(&u))?;
    let cfg = SamplerConfig::new(0.05, 1000)?;
    let a = run_chain(SamplerKind::Anchored, &cfg, &pair, &[1.0, -2.0], RngStream::new(3, 0))?;
    let b = run_chain(SamplerKind::Ula, &cfg, &pair, &[1.0, -2.0], RngStream::new(3, 0))?;
    let identical = a.samples.rows().zip(b.samples.rows()).all(|(x, y)| {
        x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
    });
    out.push(outcome("U = U0 reduces to ULA", identical, "1000 steps, bitwise".into()));

    let mut worst_ratio: f64 = 0.0;
    for d in [1usize, 4, 16] {
        for mu in [0.1, 1.0] {
            let lambda = 1.0;
            let bound = smoothing_gap_bound(lambda * (d as f64).sqrt(), mu, d);
            let mut rng = RngStream::new(11, d as u64);
            for _ in 0..200 {
                let x: Vec<f64> = (0..d).map(|_| 3.0 * rng.normal()).collect();
                let g: f64 = x.iter().map(|v| lambda * v.abs()).sum();
                let (g0, _) = l1_gaussian_closed_form(&x, mu, lambda);
                worst_ratio = worst_ratio.max((g - g0).abs() / bound);
            }
        }
    }
    out.push(outcome("smoothing gap bound", worst_ratio <= 1.0, format!("max |g - g0| / bound = {worst_ratio:.3}")));

    let spec = SmoothingSpec::new(0.7, 20_000)?;
    let mut rng = RngStream::new(5, 0);
    let mut worst_z: f64 = 0.0;
    for x in [-1.3, -0.2, 0.0, 0.4, 2.1] {
        let (mean, se) = mc_smoothed_grad_stats(|y: &[f64]| y[0].abs(), &[x], &spec, &mut rng);
        let (_, exact) = l1_gaussian_closed_form(&[x], 0.7, 1.0);
        worst_z = worst_z.max((mean[0] - exact[0]).abs() / se[0]);
    }
    out.push(outcome("gradient estimator is unbiased", worst_z <= 3.0, format!("max z-score {worst_z:.2}")));
    Ok(out)
}
