//! Identity verification suites and the report they produce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cylinder::CylinderFunction;
use crate::error::Result;
use crate::gibbs::NuMode;
use crate::model::Model;
use crate::random::{random_function, random_future_spec, CylinderShape};
use crate::time::TimePoint;
use crate::transfer::{compose_shift, conditional_expectation, transfer_apply};

pub const EXACT: f64 = 0.0;
pub const MEASURE_TOL: f64 = 1e-10;
pub const OPERATOR_TOL: f64 = 1e-10;
pub const PERRON_TOL: f64 = 1e-10;
pub const GIBBS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRecord {
    pub name: String,
    pub parameters: Value,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Informational quantities that have no pass/fail meaning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub name: String,
    pub parameters: Value,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectRecord {
    pub t: TimePoint,
    pub literal: f64,
    pub h_transform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub model_digest: String,
    pub records: Vec<IdentityRecord>,
    pub summary: Summary,
    pub kolmogorov_defect: Vec<DefectRecord>,
    pub probes: Vec<Probe>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    /// Names of identities with at least one failing record.
    pub fn failing_identities(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.records.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub times: Vec<TimePoint>,
    pub n_random: usize,
    pub seed: u64,
    pub shape: CylinderShape,
}

impl VerifyConfig {
    pub fn new(times: Vec<TimePoint>, n_random: usize, seed: u64) -> Self {
        VerifyConfig { times, n_random, seed, shape: CylinderShape::default() }
    }
}

struct Recorder {
    records: Vec<IdentityRecord>,
    probes: Vec<Probe>,
}

impl Recorder {
    fn push(&mut self, name: &str, parameters: Value, lhs: f64, rhs: f64, residual: f64, tolerance: f64) {
        self.records.push(IdentityRecord {
            name: name.to_string(),
            parameters,
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }

    fn probe(&mut self, name: &str, parameters: Value, value: f64) {
        self.probes.push(Probe { name: name.to_string(), parameters, value });
    }
}

fn merged(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut base, extra) {
        a.extend(b);
    }
    base
}

/// Whether every nonconstant term of `f` constrains some time at or after
/// `t`. The literal functional satisfies the fixed-point identity on such
/// `f`; a term living entirely in `[0, t)` picks up the column defect of
/// the literal kernels.
pub fn in_literal_domain(f: &CylinderFunction, t: TimePoint) -> bool {
    f.terms().all(|(s, _)| s.last_time().is_none_or(|last| last >= t))
}

pub fn run_verification(model: &Model, config: &VerifyConfig) -> Result<VerificationReport> {
    let gibbs = model.gibbs()?;
    let p = gibbs.path();
    let n = model.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shape = &config.shape;
    let mut rec = Recorder { records: Vec::new(), probes: Vec::new() };

    let residuals = gibbs.triple().residuals(model.generator(), &model.potential)?;
    rec.push(
        "perron_eigen_relations",
        json!({}),
        residuals.left.max(residuals.right),
        0.0,
        residuals.left.max(residuals.right),
        PERRON_TOL,
    );
    rec.push(
        "perron_normalization",
        json!({"sum_mu": gibbs.triple().mu().sum(), "sum_u_mu": gibbs.triple().u().dot(gibbs.triple().mu())}),
        residuals.mass.max(residuals.pairing),
        0.0,
        residuals.mass.max(residuals.pairing),
        1e-12,
    );

    let mut defects = Vec::new();
    for &t in &config.times {
        let at = |extra: Value| merged(json!({"t": t}), extra);

        let one = transfer_apply(p, t, &CylinderFunction::one())?;
        let d = one.max_abs_diff(&CylinderFunction::one());
        rec.push("normalization", at(json!({})), p.eval_fn(&one)?, 1.0, d, EXACT);
        let hat_one = gibbs.normalized_transfer_apply(t, &CylinderFunction::one())?;
        let d = hat_one.max_abs_diff(&CylinderFunction::one());
        rec.push("normalized_normalization", at(json!({})), 1.0 + d, 1.0, d, EXACT);

        let r = gibbs.eigenfunction_residual(t)?;
        let growth = (t.as_f64() * gibbs.triple().lambda()).exp();
        rec.push("eigenfunction", at(json!({})), growth + r, growth, r, OPERATOR_TOL);

        let defect = gibbs.kolmogorov_defect(t);
        defects.push(DefectRecord { t, literal: defect.literal, h_transform: defect.h_transform });

        let mut literal_outside = (0usize, 0.0f64);
        for k in 0..config.n_random {
            let f = random_function(&mut rng, n, 3, shape);
            let g = random_function(&mut rng, n, 3, shape);
            let params = |extra: Value| at(merged(json!({"index": k, "f": f, "g": g}), extra));

            let lf = transfer_apply(p, t, &f)?;
            let (lhs, rhs) = (p.eval_fn(&lf)?, p.eval_fn(&f)?);
            rec.push("dual_invariance", params(json!({})), lhs, rhs, (lhs - rhs).abs(), MEASURE_TOL);

            let gs = compose_shift(&g, t);
            let pulled = transfer_apply(p, t, &f.product(&gs))?;
            let factored = g.product(&lf);
            rec.push(
                "pull_out",
                params(json!({})),
                p.eval_fn(&pulled)?,
                p.eval_fn(&factored)?,
                pulled.max_abs_diff(&factored),
                OPERATOR_TOL,
            );

            let (lhs, rhs) = (p.eval_fn(&lf.product(&g))?, p.eval_fn(&f.product(&gs))?);
            rec.push("duality", params(json!({})), lhs, rhs, (lhs - rhs).abs(), MEASURE_TOL);

            let b = random_future_spec(&mut rng, n, t, shape);
            let ib = CylinderFunction::indicator(b.clone());
            let e = conditional_expectation(p, t, &f)?;
            let (lhs, rhs) = (p.eval_fn(&e.product(&ib))?, p.eval_fn(&f.product(&ib))?);
            rec.push("conditional_expectation", params(json!({"B": b})), lhs, rhs, (lhs - rhs).abs(), MEASURE_TOL);

            for mode in NuMode::ALL {
                let m = mode.name();
                let fp = gibbs.fixed_point_residual(mode, t, &g)?;
                if mode == NuMode::HTransform || in_literal_domain(&g, t) {
                    rec.push("fixed_point", params(json!({"mode": m})), fp.lhs, fp.rhs, fp.residual, GIBBS_TOL);
                } else {
                    literal_outside.0 += 1;
                    literal_outside.1 = literal_outside.1.max(fp.residual);
                }

                let composed = f.product(&gs);
                let pre = gibbs.pre_theorem_identity_residual(mode, t, &f, &g)?;
                if mode == NuMode::HTransform || in_literal_domain(&composed, t) {
                    rec.push(
                        "pre_theorem",
                        params(json!({"mode": m})),
                        pre.paired,
                        pre.composed,
                        pre.residual,
                        GIBBS_TOL,
                    );
                } else {
                    literal_outside.0 += 1;
                    literal_outside.1 = literal_outside.1.max(pre.residual);
                }

                let a = gibbs.theorem_a_residual(mode, t, &g)?;
                rec.push(
                    "theorem_a",
                    params(
                        json!({"mode": m, "lhs_proof_chain": a.lhs_proof_chain, "harmonic_defect": a.harmonic_defect}),
                    ),
                    a.lhs,
                    a.rhs,
                    a.residual,
                    GIBBS_TOL,
                );
            }
        }
        rec.probe("literal_fixed_point_past_only_cases", at(json!({})), literal_outside.0 as f64);
        rec.probe("literal_fixed_point_past_only_max_residual", at(json!({})), literal_outside.1);
        let harmonic = gibbs.theorem_a_residual(NuMode::HTransform, t, &CylinderFunction::one())?.harmonic_defect;
        rec.probe("harmonic_defect", at(json!({})), harmonic);
    }

    for mode in NuMode::ALL {
        rec.probe("rho_total_mass", json!({"mode": mode.name()}), gibbs.rho_mass(mode)?);
    }
    for c in &model.file.cylinders {
        rec.probe("P", json!({"cylinder": c.name}), p.eval_p(&c.spec)?);
        for mode in NuMode::ALL {
            if let Ok(v) = gibbs.eval_nu(mode, &c.spec) {
                rec.probe("nu", json!({"cylinder": c.name, "mode": mode.name()}), v);
            }
        }
    }

    let passed = rec.records.iter().filter(|r| r.pass).count();
    Ok(VerificationReport {
        model_digest: model.digest.clone(),
        summary: Summary { total: rec.records.len(), passed, failed: rec.records.len() - passed },
        records: rec.records,
        kolmogorov_defect: defects,
        probes: rec.probes,
    })
}

/// The residual maximum over all records of one identity.
pub fn worst(report: &VerificationReport, name: &str) -> f64 {
    report.records.iter().filter(|r| r.name == name).map(|r| r.residual).fold(0.0, f64::max)
}
