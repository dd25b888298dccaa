//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (harness = false) so the lines always print. The
//! process fails if any criterion fails, except those in KNOWN_FAILURES.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcontract::flows::{mle_estimate, verify_growth_bound, GrowthBoundOptions, MleOptions};
use wcontract::geometry::{certify_limit_cycle, certify_phase_locking, Conjugacy, CrossCheckOptions, Submersion};
use wcontract::grid::GridFunction;
use wcontract::measures::{default_mu_h_list, mu, mu_fd_oracle, weighted_rate};
use wcontract::pde::{
    heat_zero_flux_experiment, nonlinear_poisson_experiment, reaction_diffusion_experiment, sine_initial, vanishing_osl_experiment, HeatConfig,
    PoissonConfig, ReactionConfig, RegularizedFamily, VanishingConfig,
};
use wcontract::sip::{default_h_list, norm, sip, sip_fd_oracle, NormSpec};
use wcontract::systems::{coupled_hopf, hopf, leader_adjacency, shear_matrix};
use wcontract::weights::optimize_diagonal_weight;
use wcontract::{LinearOp, Space, StateSampler, VectorField, WeightFamily};
use wcontract_cli::{config, run_config};

/// (criterion, reason) pairs that are expected to fail.
const KNOWN_FAILURES: &[(u32, &str)] =
    &[(5, "lambda_MLE <= b^2 lambda_b is false for lambda_b < 0 and b > 1; the valid substitution gives lambda_MLE <= lambda_b")];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn random_matrix(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0))
}

/// Random matrix with spectral abscissa at most −0.2.
fn random_stable(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = random_matrix(r, n);
    let alpha = a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    a - DMatrix::identity(n, n) * (alpha + 0.2 + r.gen_range(0.0..0.8))
}

fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Textbook matrix measures, written independently of the library.
fn oracle_mu(a: &DMatrix<f64>, p: f64) -> f64 {
    let n = a.nrows();
    if p == 1.0 {
        (0..n).map(|j| a[(j, j)] + (0..n).filter(|i| *i != j).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
    } else if p.is_infinite() {
        (0..n).map(|i| a[(i, i)] + (0..n).filter(|j| *j != i).map(|j| a[(i, j)].abs()).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
    } else {
        SymmetricEigen::new((a + a.transpose()) * 0.5).eigenvalues.max()
    }
}

fn criterion_1() -> Outcome {
    let mut r = rng(101);
    let ps = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
    let (mut worst_axiom, mut worst_fd) = (0.0f64, 0.0f64);
    for &p in &ps {
        let spec = NormSpec::lp(p);
        for _ in 0..500 {
            let n = r.gen_range(1..=8);
            let (u, v, w) = (random_vec(&mut r, n), random_vec(&mut r, n), random_vec(&mut r, n));
            let alpha: f64 = r.gen_range(0.0..3.0);
            let g = |x: &[f64]| GridFunction::from_vec(x.to_vec());
            let scale = |x: &[f64]| x.iter().map(|c| c * alpha).collect::<Vec<_>>();
            let vw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            let (nu, nv, nw) = (norm(&g(&u), &spec).unwrap(), norm(&g(&v), &spec).unwrap(), norm(&g(&w), &spec).unwrap());
            let s = |x: &[f64], y: &[f64]| sip(&g(x), &g(y), &spec).unwrap();
            let uv = s(&u, &v);
            let rel = |a: f64, b: f64, sc: f64| (a - b).abs() / sc.max(1e-300);
            let items = [
                rel(s(&u, &u), nu * nu, nu * nu),
                ((uv.abs() - nu * nv) / (nu * nv)).max(0.0),
                ((s(&u, &vw) - uv - s(&u, &w)) / (nu * (nv + nw))).max(0.0),
                rel(alpha * uv, s(&scale(&u), &v), nu * nv * alpha.max(1.0)),
                rel(alpha * uv, s(&u, &scale(&v)), nu * nv * alpha.max(1.0)),
            ];
            worst_axiom = items.iter().copied().fold(worst_axiom, f64::max);
            let fd = sip_fd_oracle(&g(&u), &g(&v), &spec, &default_h_list(nu, nv)).unwrap();
            worst_fd = worst_fd.max(rel(fd.value, uv, nu * nv));
        }
    }
    outcome(worst_axiom <= 1e-10 && worst_fd <= 1e-6, format!("worst axiom residual {worst_axiom:.2e} (<= 1e-10), worst oracle gap {worst_fd:.2e} (<= 1e-6)"))
}

fn criterion_2() -> Outcome {
    let mut r = rng(202);
    let (mut worst, mut below_alpha) = (0.0f64, 0usize);
    for &p in &[1.0, 2.0, f64::INFINITY] {
        for _ in 0..50 {
            let n = r.gen_range(2..=5);
            let a = random_matrix(&mut r, n) * 2.0;
            let space = Space::lp(n, p);
            let m = mu(&LinearOp::from(a.clone()), &space).unwrap().value;
            let fd = mu_fd_oracle(&a, &space, &default_mu_h_list(&a)).unwrap().value;
            worst = worst.max((m - fd).abs());
            if m < spectral_abscissa(&a) - 1e-10 {
                below_alpha += 1;
            }
        }
    }
    outcome(worst <= 1e-4 && below_alpha == 0, format!("worst |mu - oracle| {worst:.2e} (<= 1e-4), {below_alpha} cases below the spectral abscissa"))
}

fn criterion_3() -> Outcome {
    let mut r = rng(303);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = r.gen_range(2..=5);
        let p = [1.0, 2.0, f64::INFINITY][k % 3];
        let a = random_matrix(&mut r, n) * 2.0;
        let theta = DMatrix::identity(n, n) + random_matrix(&mut r, n) * 0.3;
        let w = WeightFamily::constant_matrix(theta.clone(), None).unwrap();
        let got = weighted_rate(&LinearOp::from(a.clone()), &w, 0.0, &DVector::zeros(n), &Space::lp(n, p)).unwrap().value;
        let inv = theta.clone().try_inverse().unwrap();
        let want = oracle_mu(&(&theta * &a * inv), p);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    outcome(worst <= 1e-10, format!("worst relative gap to mu(Theta A Theta^-1) {worst:.2e} (<= 1e-10)"))
}

fn growth_case(a: &DMatrix<f64>, theta: WeightFamily, seed: u64) -> (f64, f64, bool) {
    let n = a.nrows();
    let mut r = rng(seed);
    let (u0, du0, u1) = (DVector::from_vec(random_vec(&mut r, n)), DVector::from_vec(random_vec(&mut r, n)), DVector::from_vec(random_vec(&mut r, n)));
    let rep = verify_growth_bound(&VectorField::linear(a.clone()), &theta, &Space::euclidean(n), &u0, &du0, &GrowthBoundOptions::new(0.0, 5.0, 1e-3).with_pair(u1)).unwrap();
    let pair = rep.pair.expect("invertible weight");
    (rep.max_ratio, pair.max_ratio, pair.passed)
}

fn criterion_4() -> Outcome {
    let mut r = rng(404);
    let (mut worst_w, mut worst_pair, mut pairs_ok) = (0.0f64, 0.0f64, true);
    for k in 0..20 {
        let n = r.gen_range(2..=4);
        let a = random_stable(&mut r, n);
        let opt = optimize_diagonal_weight(&VectorField::linear(a.clone()), &Space::euclidean(n), 10.0, &StateSampler::single(0.0, DVector::zeros(n))).unwrap();
        let (w, pr, ok) = growth_case(&a, opt.best_weight, 4000 + k);
        worst_w = worst_w.max(w);
        worst_pair = worst_pair.max(pr);
        pairs_ok &= ok;
    }
    let shear = DMatrix::from_row_slice(2, 2, &[-1.0, 10.0, 0.0, -1.0]);
    let mut shear_detail = String::new();
    for (label, d) in [("diag(1,0.01)", [1.0, 0.01]), ("diag(0.01,1)", [0.01, 1.0])] {
        let w = WeightFamily::diagonal(&d, None).unwrap();
        let lam = weighted_rate(&LinearOp::from(shear.clone()), &w, 0.0, &DVector::zeros(2), &Space::euclidean(2)).unwrap().value;
        let (wr, pr, ok) = growth_case(&shear, w, 4999);
        worst_w = worst_w.max(wr);
        worst_pair = worst_pair.max(pr);
        pairs_ok &= ok;
        shear_detail.push_str(&format!(", shear {label}: lambda {lam:.3} ratio {wr:.6}"));
    }
    outcome(worst_w <= 1.0 + 1e-4 && pairs_ok, format!("worst weighted ratio {worst_w:.6} (<= 1+1e-4), worst pair ratio {worst_pair:.4} (<= 1){shear_detail}"))
}

fn criterion_5() -> Outcome {
    let mut r = rng(505);
    let b = 10.0;
    let (mut mu_ok, mut lb_ok, mut b2_ok) = (true, true, true);
    let mut worst_b2 = f64::NEG_INFINITY;
    for k in 0..10 {
        let n = r.gen_range(2..=4);
        let a = random_stable(&mut r, n);
        let u0 = DVector::from_vec(random_vec(&mut r, n));
        let mle = mle_estimate(&VectorField::linear(a.clone()), &u0, &MleOptions { t_end: 200.0, dt: 0.01, renorm_interval: 1.0, seed: 50 + k }).unwrap().value;
        let mu_min = [1.0, 2.0, f64::INFINITY].iter().map(|p| mu(&LinearOp::from(a.clone()), &Space::lp(n, *p)).unwrap().value).fold(f64::INFINITY, f64::min);
        let lb = optimize_diagonal_weight(&VectorField::linear(a.clone()), &Space::euclidean(n), b, &StateSampler::single(0.0, DVector::zeros(n))).unwrap().lambda_b;
        mu_ok &= mle <= mu_min + 0.05;
        lb_ok &= mle <= lb + 0.05;
        b2_ok &= mle <= b * b * lb + 0.05;
        worst_b2 = worst_b2.max(mle - b * b * lb);
    }
    outcome(
        mu_ok && b2_ok,
        format!("mle <= mu_p + 0.05: {mu_ok}; mle <= b^2 lambda_b + 0.05 (b = {b}): {b2_ok} (worst excess {worst_b2:.3}); supplementary mle <= lambda_b + 0.05: {lb_ok}"),
    )
}

/// Cell-centered Neumann Laplacian assembled directly.
fn neumann_laplacian(n: usize) -> DMatrix<f64> {
    let h2 = 1.0 / (n * n) as f64;
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            l[(i, i - 1)] = 1.0 / h2;
            l[(i, i)] -= 1.0 / h2;
        }
        if i + 1 < n {
            l[(i, i + 1)] = 1.0 / h2;
            l[(i, i)] -= 1.0 / h2;
        }
    }
    l
}

fn criterion_6() -> Outcome {
    let cfg = HeatConfig::default();
    let rep = heat_zero_flux_experiment(&cfg, 6).unwrap();
    let mut ev: Vec<f64> = SymmetricEigen::new(neumann_laplacian(cfg.n)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let dense = cfg.alpha * ev[1];
    let eig_gap = (rep.lambda_certified - dense).abs() / dense.abs();
    let closed_gap = (rep.lambda_closed_form - dense).abs() / dense.abs();
    let fit = rep.fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let fit_err = (fit - rep.lambda_certified).abs() / rep.lambda_certified.abs();
    let ok = rep.certificate.is_certified() && eig_gap <= 1e-8 && closed_gap <= 1e-8 && fit_err <= 0.02 && rep.mass_drift <= 1e-10;
    outcome(ok, format!("certified {:.8} vs dense {dense:.8} (rel {eig_gap:.1e}), fitted {fit:.6} (rel {fit_err:.1e} <= 2%), mass drift {:.1e}", rep.lambda_certified, rep.mass_drift))
}

fn criterion_7() -> Outcome {
    let good = reaction_diffusion_experiment(&ReactionConfig::default(), 7).unwrap();
    let slope = good.fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let good_ok = good.predicted && slope < 0.0 && (slope - good.lambda_certified).abs() <= 0.1 * good.lambda_certified.abs();
    let bad_cfg = ReactionConfig { alphas: vec![0.05], t_end: 10.0, ..Default::default() };
    let bad = reaction_diffusion_experiment(&bad_cfg, 7).unwrap();
    let ratio = bad.q_final / bad.q_initial;
    outcome(
        good_ok && !bad.predicted && ratio > 0.1,
        format!("alpha|M_Q| = {:.2}: fitted {slope:.4} vs certified {:.4}; reversed alpha|M_Q| = {:.2}: |Qu(T)|/|Qu(0)| = {ratio:.3} (> 0.1)", -good.laplacian_rate * 0.5, good.lambda_certified, -bad.laplacian_rate * 0.05),
    )
}

fn criterion_8() -> Outcome {
    let rep = nonlinear_poisson_experiment(&PoissonConfig::default(), 8).unwrap();
    let gaps = rep.refinement.column("pi_squared_gap").unwrap();
    let monotone = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
    let ok = rep.certificate.is_certified() && rep.max_pairwise_distance <= 1e-8 && rep.residual <= 1e-8 && monotone;
    outcome(ok, format!("c = 5 < lambda = {:.4}; pairwise {:.1e}, residual {:.1e}, |lambda_n - pi^2| = {:?}", rep.lambda_omega, rep.max_pairwise_distance, rep.residual, gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>()))
}

fn ring(radii: &[f64]) -> Vec<DVector<f64>> {
    radii.iter().enumerate().map(|(k, r)| DVector::from_vec(vec![r * (0.4 + k as f64).cos(), r * (0.4 + k as f64).sin()])).collect()
}

fn criterion_9() -> Outcome {
    let radii = [0.5, 0.75, 0.9, 1.1, 1.25, 1.5];
    let sub = Submersion::unit_sphere(2);
    let sampler = StateSampler::annulus(0.8, 1.2, 5, 16);
    let cross = CrossCheckOptions::new(30.0, 0.01, ring(&radii));
    let plain = certify_limit_cycle(&hopf(1.0), &sub, &Conjugacy::identity(2), 1.0, &Space::euclidean(2), &sampler, Some(&cross)).unwrap();
    let all_hyps = plain.report.hypotheses.len() == 4 && plain.report.hypotheses.iter().all(|h| h.passed);
    let exps = plain.report.cross_check.as_ref().map(|c| c.exponents.clone()).unwrap_or_default();
    let worst_exp = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let omega = 2.0;
    let s = shear_matrix(0.8);
    let conj = Conjugacy::linear(s.clone()).unwrap();
    let inv = s.try_inverse().unwrap();
    let ics = ring(&[0.5, 1.5]).into_iter().map(|v| &inv * v).collect();
    let sheared = certify_limit_cycle(&conj.pullback_field(&hopf(omega)), &sub, &conj, 1.0, &Space::euclidean(2), &sampler, Some(&CrossCheckOptions::new(30.0, 0.01, ics))).unwrap();
    let expected = TAU / omega;
    let period_err = sheared.periods.iter().map(|p| (p - expected).abs() / expected).fold(0.0, f64::max);
    let ok = all_hyps && exps.len() == radii.len() && worst_exp <= -0.8 && sheared.report.is_certified() && sheared.periods.len() == 2 && period_err <= 0.01;
    outcome(ok, format!("hypotheses {}, rate {:.3}, worst fitted exponent {worst_exp:.3} (<= -0.8), sheared period error {period_err:.1e} (<= 1%)", if all_hyps { "4/4" } else { "failing" }, plain.report.rate.value))
}

fn locking(omegas: &[f64], coupling: f64, angles: &[f64], seed: u64) -> wcontract::geometry::PhaseLockingReport {
    let n = omegas.len();
    let shears = [shear_matrix(0.0), shear_matrix(0.5), DMatrix::from_row_slice(2, 2, &[1.2, 0.0, 0.3, 0.8])];
    let sys = coupled_hopf(omegas, coupling, &leader_adjacency(n), angles, &shears).unwrap();
    let torus = StateSampler::uniform_box(&vec![-1.0; 2 * n], &vec![1.0; 2 * n], 24, 0.0, seed);
    let ics = StateSampler::uniform_box(&vec![-1.2; 2 * n], &vec![1.2; 2 * n], 3, 0.0, seed + 1).samples().iter().map(|s| s.1.clone()).collect();
    certify_phase_locking(&sys, &Submersion::unit_sphere(2), 1.0, &Space::euclidean(2 * n), &StateSampler::annulus(0.8, 1.2, 5, 16), &torus, Some(&CrossCheckOptions::new(80.0, 0.01, ics))).unwrap()
}

fn criterion_10() -> Outcome {
    let coupled = locking(&[1.0, 1.0, 1.0], 1.0, &[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0], 10);
    let control = locking(&[1.0, 1.3, 0.7], 0.0, &[0.0, 1.0, 2.0], 11);
    let ok = coupled.report.is_certified()
        && coupled.period_spread < 0.01
        && coupled.phase_spread_change < 1e-3
        && !control.report.is_certified()
        && !control.period_test_passed;
    outcome(
        ok,
        format!(
            "coupled: certified {}, period spread {:.1e}, phase change {:.1e}; control: certified {}, period spread {:.3}",
            coupled.report.is_certified(),
            coupled.period_spread,
            coupled.phase_spread_change,
            control.report.is_certified(),
            control.period_spread
        ),
    )
}

fn criterion_11() -> Outcome {
    let cfg = VanishingConfig::default();
    let family = RegularizedFamily::from_spec(&cfg.family, cfg.n, cfg.schedule.clone());
    let rep = vanishing_osl_experiment(&family, &sine_initial(cfg.n, cfg.initial_amplitude, cfg.initial_offset), &cfg, 11).unwrap();
    let monotone = rep.differences.len() == 3 && rep.differences.windows(2).all(|w| w[1] < w[0]);
    let weak = rep.limit_weak_residual.unwrap_or(f64::INFINITY);
    let ok = cfg.n == 256 && cfg.t_end == 0.5 && cfg.test_functions >= 10 && monotone && weak <= 1e-2;
    outcome(ok, format!("differences {:?}, limit weak residual {weak:.4} (<= 1e-2, {} test functions)", rep.differences.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(), cfg.test_functions))
}

fn criterion_12() -> Outcome {
    let configs = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut paths: Vec<_> = fs::read_dir(configs).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "toml")).collect();
    paths.sort();
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut kinds = std::collections::BTreeSet::new();
    for path in &paths {
        let cfg = config::parse(&fs::read_to_string(path).unwrap()).unwrap();
        kinds.insert(cfg.experiment.name());
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let (a, b) = (tmp.path().join(format!("{stem}_a")), tmp.path().join(format!("{stem}_b")));
        let ra = run_config(&cfg, &a).unwrap();
        run_config(&cfg, &b).unwrap();
        for f in ra.report.files.iter() {
            if fs::read(a.join(f)).unwrap() != fs::read(b.join(f)).unwrap() {
                differing.push(format!("{stem}/{f}"));
            }
        }
    }
    outcome(differing.is_empty() && kinds.len() == 15, format!("{} configs over {} experiments, differing files: {differing:?}", paths.len(), kinds.len()))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "semi-inner product axioms", criterion_1),
        (2, "matrix measure oracle", criterion_2),
        (3, "generalized Jacobian identity", criterion_3),
        (4, "growth bound", criterion_4),
        (5, "MLE bound", criterion_5),
        (6, "heat zero-flux", criterion_6),
        (7, "reaction-diffusion homogenization", criterion_7),
        (8, "nonlinear Poisson", criterion_8),
        (9, "limit cycle", criterion_9),
        (10, "phase locking", criterion_10),
        (11, "vanishing one-sided Lipschitz", criterion_11),
        (12, "determinism", criterion_12),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let tag = match (o.passed, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (false, None) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name} [{secs:.2}s] {}", o.detail);
        if let (false, Some((_, why))) = (o.passed, known) {
            println!("             {why}");
        }
        if !o.passed && known.is_none() {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
