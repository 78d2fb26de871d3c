//! Closed forms and independent numerical routes checked against the library.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use ruelle_ctmc::ctmc::expm;
use ruelle_ctmc::gibbs::NuMode;
use ruelle_ctmc::perron::{density_fv, power_iteration, spectral_gap};
use ruelle_ctmc::{
    perron_triple, semigroup, stationary_vector, CylinderFunction, CylinderSpec, Generator, GibbsModel, PathMeasure,
    Potential, TimePoint,
};

fn k2() -> Generator {
    Generator::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
}

fn tp(s: &str) -> TimePoint {
    s.parse().unwrap()
}

fn spec(c: &[(&str, usize)]) -> CylinderSpec {
    CylinderSpec::new(c.iter().map(|&(t, s)| (tp(t), s)).collect()).unwrap()
}

/// `e^{tM}` for symmetric `M` through its spectral decomposition.
fn spectral_exp(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| (t * x).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn golden_model() -> GibbsModel {
    GibbsModel::new(PathMeasure::new(k2()).unwrap(), Potential::new(vec![1.0, 0.0]).unwrap()).unwrap()
}

#[test]
fn two_state_semigroup_closed_form() {
    for t in [0.1, 0.5, 1.0, 3.0] {
        let p = semigroup(&k2(), t).unwrap();
        let e = (-2.0 * t).exp();
        assert!((p.prob(0, 0) - 0.5 * (1.0 + e)).abs() < 1e-14);
        assert!((p.prob(1, 0) - 0.5 * (1.0 - e)).abs() < 1e-14);
    }
    assert!((semigroup(&k2(), 0.5).unwrap().prob(1, 0) - 0.3160603).abs() < 1e-6);
}

#[test]
fn weighted_exponential_matches_the_spectral_route() {
    let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, -1.0]);
    let oracle = spectral_exp(&m, 1.0);
    assert!((expm(&m, 1.0) - &oracle).amax() < 1e-13);
    let s5 = 5f64.sqrt();
    let (a, b) = ((s5 - 1.0) / 2.0, -(s5 + 1.0) / 2.0);
    let closed = (a.exp() - b.exp()) / s5;
    assert!((oracle[(1, 0)] - closed).abs() < 1e-14);
    assert!((closed - 0.741028).abs() < 1e-6);
}

#[test]
fn golden_ratio_perron_triple() {
    let m = golden_model();
    let tr = m.triple();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    assert!((tr.lambda() - phi).abs() < 1e-12);
    // Left and right eigenvectors of the symmetric L + V coincide up to scale.
    let mu = DVector::from_vec(vec![phi, 1.0 - phi]);
    assert!((tr.mu() - &mu).amax() < 1e-12);
    let u = &mu / mu.norm_squared();
    assert!((tr.u() - &u).amax() < 1e-12);
    assert!((tr.f_v() - density_fv(tr.mu(), m.path().p0())).amax() < 1e-15);
    assert!((tr.f_v()[0] - 2.0 * phi).abs() < 1e-12);
    assert!((spectral_gap(m.path().generator(), m.potential()).unwrap() - 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn power_iteration_agrees_on_random_models() {
    for seed in 0..20 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let l = ruelle_ctmc::random::random_generator(&mut rng, 5);
        let v = ruelle_ctmc::random::random_potential(&mut rng, 5, 2.0);
        let tr = perron_triple(&l, &v, &stationary_vector(&l).unwrap()).unwrap();
        let (lambda, mu) = power_iteration(&l, &v).unwrap();
        assert!((lambda - tr.lambda()).abs() < 1e-10);
        assert!((&mu - tr.mu()).amax() < 1e-8);
    }
}

#[test]
fn literal_two_time_cylinder() {
    let m = golden_model();
    let tr = m.triple();
    let centered = DMatrix::from_row_slice(2, 2, &[-tr.lambda(), 1.0, 1.0, -1.0 - tr.lambda()]);
    let oracle = spectral_exp(&centered, 1.0)[(1, 0)] * tr.mu()[0];
    let got = m.eval_nu(NuMode::Literal, &spec(&[("0", 0), ("1", 1)])).unwrap();
    assert!((got - oracle).abs() < 1e-13);
    assert!((got - 0.246853).abs() < 1e-6);
}

#[test]
fn h_transform_one_time_marginal_is_u_mu() {
    let m = golden_model();
    let tr = m.triple();
    for s in 0..2 {
        let got = m.eval_nu(NuMode::HTransform, &spec(&[("0", s)])).unwrap();
        assert!((got - tr.u()[s] * tr.mu()[s]).abs() < 1e-14);
    }
}

#[test]
fn rho_masses() {
    let m = golden_model();
    let tr = m.triple();
    let lit: f64 = tr.f_v().iter().zip(tr.mu().iter()).map(|(f, mu)| f * mu).sum();
    let h: f64 = (0..2).map(|s| tr.f_v()[s] * tr.u()[s] * tr.mu()[s]).sum();
    assert!((m.rho_mass(NuMode::Literal).unwrap() - lit).abs() < 1e-13);
    assert!((m.rho_mass(NuMode::HTransform).unwrap() - h).abs() < 1e-13);
    assert!((lit - 1.0557281).abs() < 1e-7);
    assert!((h - 1.1055728).abs() < 1e-7);
}

#[test]
fn kolmogorov_defect_of_the_literal_functional() {
    // Summing out the last coordinate of the literal functional multiplies
    // by the column sums of e^{t(L+V-λ)}, which differ from 1.
    let m = golden_model();
    let tr = m.triple();
    for (t, s) in [(0.5, "0.5"), (1.0, "1"), (2.0, "2")] {
        let centered = DMatrix::from_row_slice(2, 2, &[-tr.lambda(), 1.0, 1.0, -1.0 - tr.lambda()]);
        let k = spectral_exp(&centered, t);
        let oracle = (0..2).map(|i| (k[(0, i)] + k[(1, i)] - 1.0).abs()).fold(0.0, f64::max);
        let d = m.kolmogorov_defect(tp(s));
        assert!((d.literal - oracle).abs() < 1e-12, "t={t}: {} vs {oracle}", d.literal);
        assert!(d.h_transform < 1e-14);
    }
    assert!((m.kolmogorov_defect(tp("1")).literal - 0.2469).abs() < 1e-4);
}

#[test]
fn main_identity_for_the_constant_function() {
    // For g = 1 the left side reduces to sum_i u_i (P^t μ)_i.
    let m = golden_model();
    let tr = m.triple();
    let pt = semigroup(m.path().generator(), 1.0).unwrap().into_matrix();
    let oracle = tr.u().dot(&(pt * tr.mu()));
    let a = m.theorem_a_residual(NuMode::HTransform, tp("1"), &CylinderFunction::one()).unwrap();
    assert!((a.lhs - oracle).abs() < 1e-13);
    assert!((a.lhs - 0.95436).abs() < 1e-5);
    assert!((a.rhs - 1.0).abs() < 1e-14);
}
