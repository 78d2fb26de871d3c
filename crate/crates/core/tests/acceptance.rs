//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Two criteria cannot hold as stated. Their lines print FAIL together with
//! the measured values, and the run additionally checks that the failure is
//! exactly the one predicted analytically. The process exits nonzero only
//! when some criterion fails in a way the analysis does not explain.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ruelle_ctmc::ctmc::expm;
use ruelle_ctmc::feynman_kac::fk_estimate_with_workers;
use ruelle_ctmc::gibbs::NuMode;
use ruelle_ctmc::perron::{asymptotic_limit_residual, power_iteration, spectral_gap};
use ruelle_ctmc::random::{
    random_function, random_future_spec, random_generator, random_potential, random_spec, CylinderShape,
};
use ruelle_ctmc::verify::in_literal_domain;
use ruelle_ctmc::{
    compose_shift, conditional_expectation, perron_triple, semigroup, stationary_vector, transfer_apply,
    uniformized_exp, CylinderFunction, Generator, GibbsModel, PathMeasure, Potential, TimePoint,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    /// A failure that matches the documented analysis.
    explained: bool,
    detail: String,
}

impl Outcome {
    fn check(pass: bool, detail: String) -> Self {
        Outcome { pass, explained: pass, detail }
    }
}

fn k2(rate: f64) -> Generator {
    Generator::from_rows(&[vec![-rate, rate], vec![rate, -rate]]).unwrap()
}

fn gibbs(l: Generator, v: Vec<f64>) -> GibbsModel {
    GibbsModel::new(PathMeasure::new(l).unwrap(), Potential::new(v).unwrap()).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, max_n: usize) -> PathMeasure {
    let n = rng.random_range(2..=max_n);
    PathMeasure::new(random_generator(rng, n)).unwrap()
}

fn random_time(rng: &mut ChaCha8Rng, shape: &CylinderShape) -> TimePoint {
    shape.positive_time(rng)
}

fn shape() -> CylinderShape {
    CylinderShape { max_constraints: 4, ..CylinderShape::default() }
}

fn c1_semigroup() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut col, mut neg, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let l = random_generator(&mut rng, n);
        for t in [0.1, 1.0, 10.0] {
            let p = semigroup(&l, t).unwrap().into_matrix();
            col = col.max(p.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max));
            neg = neg.min(p.min());
            oracle = oracle.max((&p - uniformized_exp(l.matrix(), t)).amax());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        col <= 1e-10 && neg >= -1e-14 && oracle <= 1e-9 && secs < 10.0,
        format!("column defect {col:.2e}, min entry {neg:.2e}, vs uniformization {oracle:.2e}, {secs:.2}s"),
    )
}

fn c2_stationarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let sh = shape();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_model(&mut rng, 4);
        let c = random_spec(&mut rng, p.n(), &sh);
        let s = random_time(&mut rng, &sh);
        worst = worst.max((p.eval_p(&c.shift(s)).unwrap() - p.eval_p(&c).unwrap()).abs());
    }
    Outcome::check(worst <= 1e-10, format!("max |P(shifted) - P| = {worst:.2e} over 100 cylinders"))
}

fn c3_normalization_and_dual_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let sh = shape();
    let mut exact = true;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = random_model(&mut rng, 4);
        let f = random_function(&mut rng, p.n(), 4, &sh);
        let t = random_time(&mut rng, &sh);
        exact &= transfer_apply(&p, t, &CylinderFunction::one()).unwrap() == CylinderFunction::one();
        let lf = transfer_apply(&p, t, &f).unwrap();
        worst = worst.max((p.eval_fn(&lf).unwrap() - p.eval_fn(&f).unwrap()).abs());
    }
    Outcome::check(exact && worst <= 1e-10, format!("L(1) = 1 exactly: {exact}; dual invariance {worst:.2e}"))
}

fn c4_pull_out_and_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let sh = shape();
    let (mut pull, mut dual) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_model(&mut rng, 4);
        let n = p.n();
        let f = random_function(&mut rng, n, 3, &sh);
        let g = random_function(&mut rng, n, 3, &sh);
        let t = random_time(&mut rng, &sh);
        let lf = transfer_apply(&p, t, &f).unwrap();
        let gs = compose_shift(&g, t);
        pull = pull.max(transfer_apply(&p, t, &f.product(&gs)).unwrap().max_abs_diff(&g.product(&lf)));
        dual = dual.max((p.eval_fn(&lf.product(&g)).unwrap() - p.eval_fn(&f.product(&gs)).unwrap()).abs());
    }
    Outcome::check(pull <= 1e-10 && dual <= 1e-10, format!("pull-out {pull:.2e}, duality {dual:.2e}"))
}

fn c5_conditional_expectation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let sh = shape();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_model(&mut rng, 4);
        let n = p.n();
        let f = random_function(&mut rng, n, 3, &sh);
        let t = random_time(&mut rng, &sh);
        let b = CylinderFunction::indicator(random_future_spec(&mut rng, n, t, &sh));
        let e = conditional_expectation(&p, t, &f).unwrap();
        worst = worst.max((p.eval_fn(&e.product(&b)).unwrap() - p.eval_fn(&f.product(&b)).unwrap()).abs());
    }
    Outcome::check(worst <= 1e-10, format!("max gap {worst:.2e} over 100 future cylinders"))
}

fn c6_perron() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let (mut eig, mut norm, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    let mut positive = true;
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let l = random_generator(&mut rng, n);
        let v = random_potential(&mut rng, n, 2.0);
        let tr = perron_triple(&l, &v, &stationary_vector(&l).unwrap()).unwrap();
        let r = tr.residuals(&l, &v).unwrap();
        eig = eig.max(r.left).max(r.right);
        norm = norm.max(r.mass).max(r.pairing);
        positive &= tr.u().min() > 0.0 && tr.mu().min() > 0.0;
        oracle = oracle.max((power_iteration(&l, &v).unwrap().0 - tr.lambda()).abs());
    }
    let l = k2(1.0);
    let tr = perron_triple(&l, &Potential::new(vec![1.0, 0.0]).unwrap(), &stationary_vector(&l).unwrap()).unwrap();
    let golden = (tr.lambda() - (5f64.sqrt() - 1.0) / 2.0).abs();
    Outcome::check(
        eig <= 1e-10 && norm <= 1e-12 && positive && oracle <= 1e-10 && golden <= 1e-10,
        format!(
            "eigen-residual {eig:.2e}, normalization {norm:.2e}, vs power iteration {oracle:.2e}, \
             two-state lambda error {golden:.2e}"
        ),
    )
}

fn c7_asymptotic_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let t = 20.0;
    let mut worst = 0.0f64;
    let mut models = 0;
    let mut over = 0;
    let mut bound_ok = true;
    let mut check = |l: &Generator, v: &Potential, vec: &[f64], gap: f64| {
        let tr = perron_triple(l, v, &stationary_vector(l).unwrap()).unwrap();
        let r = asymptotic_limit_residual(l, v, &tr, vec, t).unwrap();
        let scale = vec.iter().map(|x| x.abs()).sum::<f64>() * tr.u().amax() * 1e3;
        bound_ok &= r <= scale * (-gap * t).exp() + 1e-12;
        worst = worst.max(r);
        if r > 1e-8 {
            over += 1;
        }
    };
    while models < 50 {
        let n = rng.random_range(2..=6);
        let l = random_generator(&mut rng, n);
        let v = random_potential(&mut rng, n, 2.0);
        let gap = spectral_gap(&l, &v).unwrap();
        if gap < 0.5 {
            continue;
        }
        models += 1;
        let vec: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        check(&l, &v, &vec, gap);
    }
    let boundary = k2(0.25);
    let zero = Potential::zeros(2);
    check(&boundary, &zero, &[1.0, 0.0], spectral_gap(&boundary, &zero).unwrap());

    // The rate e^{-gap t} is sharp: at gap 0.5 the two-state chain with
    // v = (1, 0) has residual exactly e^{-10} / 2.
    let tr = perron_triple(&boundary, &zero, &stationary_vector(&boundary).unwrap()).unwrap();
    let r = asymptotic_limit_residual(&boundary, &zero, &tr, &[1.0, 0.0], t).unwrap();
    let predicted = 0.5 * (-10f64).exp();
    let explained = bound_ok && ((r - predicted) / predicted).abs() < 1e-8;
    Outcome {
        pass: over == 0,
        explained,
        detail: format!(
            "{over} of {} models exceed 1e-8, max residual {worst:.2e}; at gap 0.5 the residual is \
             e^(-10)/2 = {predicted:.3e} (measured {r:.3e}), so the bound needs gap >= {:.2}",
            models + 1,
            -(1e-8f64 / 0.5).ln() / t
        ),
    }
}

fn c8_eigenfunction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut models = vec![gibbs(k2(1.0), vec![1.0, 0.0]), gibbs(k2(1.0), vec![0.0, 0.0])];
    for _ in 0..20 {
        let p = random_model(&mut rng, 6);
        let v = random_potential(&mut rng, p.n(), 2.0);
        models.push(GibbsModel::new(p, v).unwrap());
    }
    let mut worst = 0.0f64;
    for m in &models {
        for t in ["0.25", "1", "4"] {
            worst = worst.max(m.eigenfunction_residual(t.parse().unwrap()).unwrap());
        }
    }
    Outcome::check(worst <= 1e-10, format!("max residual {worst:.2e} over {} models", models.len()))
}

fn gibbs_corpus(rng: &mut ChaCha8Rng) -> Vec<(String, GibbsModel)> {
    let mut out = vec![
        ("two-state V=(1,0)".to_string(), gibbs(k2(1.0), vec![1.0, 0.0])),
        ("two-state V=0".to_string(), gibbs(k2(1.0), vec![0.0, 0.0])),
    ];
    let p = random_model(rng, 4);
    let v = random_potential(rng, p.n(), 2.0);
    out.push((format!("random n={} V random", p.n()), GibbsModel::new(p, v).unwrap()));
    let p = random_model(rng, 4);
    let c = rng.random_range(-1.0..1.0);
    out.push((
        format!("random n={} V constant", p.n()),
        GibbsModel::new(p.clone(), Potential::constant(p.n(), c)).unwrap(),
    ));
    out
}

fn c9_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let sh = shape();
    let (mut h, mut lit) = (0.0f64, 0.0f64);
    let (mut outside, mut outside_worst) = (0, 0.0f64);
    for (_, m) in gibbs_corpus(&mut rng) {
        for _ in 0..100 {
            let g = random_function(&mut rng, m.n(), 3, &sh);
            let t = random_time(&mut rng, &sh);
            h = h.max(m.fixed_point_residual(NuMode::HTransform, t, &g).unwrap().residual);
            let r = m.fixed_point_residual(NuMode::Literal, t, &g).unwrap().residual;
            if in_literal_domain(&g, t) {
                lit = lit.max(r);
            } else {
                outside += 1;
                outside_worst = outside_worst.max(r);
            }
        }
    }
    Outcome::check(
        h <= 1e-9 && lit <= 1e-9,
        format!(
            "h-transform {h:.2e} on 400 pairs; literal {lit:.2e} where g reaches t; \
             literal off on {outside} past-only pairs (max {outside_worst:.2e}, informational)"
        ),
    )
}

fn c10_main_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let sh = shape();
    let mut pre = 0.0f64;
    let mut lines = Vec::new();
    let mut pass = true;
    let mut explained = true;
    for (name, m) in gibbs_corpus(&mut rng) {
        let constant = m.potential().is_constant();
        let mut worst = 0.0f64;
        let mut harmonic = 0.0f64;
        for _ in 0..100 {
            let f = random_function(&mut rng, m.n(), 3, &sh);
            let g = random_function(&mut rng, m.n(), 3, &sh);
            let t = random_time(&mut rng, &sh);
            for mode in NuMode::ALL {
                let a = m.theorem_a_residual(mode, t, &g).unwrap();
                worst = worst.max(a.residual);
                harmonic = harmonic.max(a.harmonic_defect);
                if mode == NuMode::HTransform {
                    // The proof chain agrees with the direct pairing; the
                    // gap to the right side is the harmonic defect.
                    explained &= (a.lhs - a.lhs_proof_chain).abs() <= 1e-9;
                }
                let p = m.pre_theorem_identity_residual(mode, t, &f, &g).unwrap();
                if mode == NuMode::HTransform || in_literal_domain(&f.product(&g.shift(t)), t) {
                    pre = pre.max(p.residual);
                }
            }
        }
        pass &= worst <= 1e-9;
        explained &= constant == (worst <= 1e-9) && constant == (harmonic <= 1e-10);
        lines.push(format!("{name}: {worst:.2e} (harmonic defect {harmonic:.2e})"));
    }
    explained &= pre <= 1e-9;
    Outcome {
        pass: pass && pre <= 1e-9,
        explained,
        detail: format!(
            "pre-identity {pre:.2e}; main identity per model: {}; it holds exactly when \
             (1/f_V) L^t(f_V) = 1, i.e. for constant V",
            lines.join("; ")
        ),
    }
}

fn c11_kolmogorov_defect() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let t: TimePoint = "1".parse().unwrap();
    let zero = gibbs(k2(1.0), vec![0.0, 0.0]).kolmogorov_defect(t);
    let mut h = zero.h_transform.max(zero.literal);
    let mut v0 = zero.literal;
    for _ in 0..50 {
        let p = random_model(&mut rng, 6);
        let n = p.n();
        let v = random_potential(&mut rng, n, 2.0);
        let s = random_time(&mut rng, &shape());
        h = h.max(GibbsModel::new(p.clone(), v).unwrap().kolmogorov_defect(s).h_transform);
        v0 = v0.max(GibbsModel::new(p, Potential::zeros(n)).unwrap().kolmogorov_defect(s).literal);
    }
    let lit = gibbs(k2(1.0), vec![1.0, 0.0]).kolmogorov_defect(t).literal;
    Outcome::check(
        v0 <= 1e-10 && h <= 1e-10 && lit > 1e-2,
        format!("V=0 {v0:.2e}; h-transform {h:.2e}; two-state V=(1,0) literal at t=1: {lit:.4} (informational)"),
    )
}

fn c12_feynman_kac() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let mut within = 0;
    let mut identical = true;
    let mut worst_z = 0.0f64;
    for k in 0..20 {
        let n = rng.random_range(2..=4);
        let l = random_generator(&mut rng, n);
        let v = random_potential(&mut rng, n, 1.0);
        let t = rng.random_range(0.1..=2.0);
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let est = fk_estimate_with_workers(&l, &v, i, j, t, 100_000, 7 + k, 4).unwrap();
        let mut rate = l.matrix().clone();
        rate += DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v.values()));
        let exact = expm(&rate, t)[(j, i)];
        let z = (est.value - exact).abs() / est.std_error;
        worst_z = worst_z.max(z);
        if z <= 3.0 {
            within += 1;
        }
        if k < 3 {
            let serial = fk_estimate_with_workers(&l, &v, i, j, t, 100_000, 7 + k, 1).unwrap();
            identical &= serial.value.to_bits() == est.value.to_bits();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        within >= 19 && identical && secs < 60.0,
        format!(
            "{within}/20 within 3 SE (max |z| {worst_z:.2}); 1 vs 4 workers bit-identical: {identical}; {secs:.1}s"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("semigroup columns and uniformization oracle", c1_semigroup),
        ("stationarity of P under shifts", c2_stationarity),
        ("L^t(1) = 1 and dual invariance", c3_normalization_and_dual_invariance),
        ("pull-out and duality with alpha_t", c4_pull_out_and_duality),
        ("conditional expectation on future cylinders", c5_conditional_expectation),
        ("Perron triple residuals and normalizations", c6_perron),
        ("asymptotic limit at t = 20 for gap >= 0.5", c7_asymptotic_limit),
        ("eigenfunction f_V of the weighted operator", c8_eigenfunction),
        ("fixed point of the normalized operator's dual", c9_fixed_point),
        ("main identity and the pairing proposition", c10_main_identity),
        ("Kolmogorov defect probe", c11_kolmogorov_defect),
        ("Feynman-Kac Monte Carlo", c12_feynman_kac),
    ];
    let mut unexplained = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status}: {name}: {}", k + 1, o.detail);
        if !o.pass && !o.explained {
            unexplained += 1;
        }
    }
    if unexplained > 0 {
        eprintln!("{unexplained} criteria failed without a matching analysis");
        std::process::exit(1);
    }
}
