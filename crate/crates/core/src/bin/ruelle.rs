//! Command-line front end: reads a JSON model file and prints JSON reports.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 degenerate
//! spectrum, 4 identity failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ruelle_ctmc::feynman_kac::fk_estimate_with_workers;
use ruelle_ctmc::gibbs::NuMode;
use ruelle_ctmc::model::Model;
use ruelle_ctmc::perron::spectral_gap;
use ruelle_ctmc::verify::{run_verification, VerifyConfig};
use ruelle_ctmc::{fk_estimate, semigroup, transfer_apply, CylinderFunction, CylinderSpec, Error, TimePoint};

const EXIT_VALIDATION: u8 = 2;
const EXIT_SPECTRAL: u8 = 3;
const EXIT_IDENTITY: u8 = 4;

#[derive(Parser)]
#[command(name = "ruelle", version, about = "Ruelle operators, Gibbs states and Feynman-Kac checks for finite CTMCs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON model file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the generator hypotheses.
    Validate,
    /// Print e^{tL}.
    Semigroup {
        #[arg(long)]
        t: TimePoint,
    },
    /// Print (λ, u, μ, f_V) and eigen-residuals.
    Perron,
    /// Evaluate P, ν and ρ on the model's cylinders or on --cylinder.
    Measure {
        /// JSON spec such as '[["0",1],["0.5",2]]'.
        #[arg(long)]
        cylinder: Option<String>,
    },
    /// Apply a transfer operator to a cylinder function.
    Transfer {
        #[arg(long)]
        t: TimePoint,
        /// JSON list of {"coeff", "spec"}.
        #[arg(long)]
        f: String,
        #[arg(long, value_enum, default_value_t = Operator::Plain)]
        operator: Operator,
    },
    /// Kolmogorov defects, eigenfunction residuals and ρ masses.
    Gibbs,
    /// Run every identity suite.
    Verify {
        /// Times to test; defaults to the model's times.
        #[arg(long, num_args = 1..)]
        times: Vec<TimePoint>,
        #[arg(long, default_value_t = 50)]
        n_random: usize,
    },
    /// Monte Carlo estimate of e^{t(L+V)}_{j0,i0}.
    Simulate {
        #[arg(long)]
        i0: usize,
        #[arg(long)]
        j0: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        n_paths: usize,
        /// Worker threads; the estimate does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Plain,
    Weighted,
    Normalized,
}

enum Failure {
    Error(Error),
    Identity(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DegenerateSpectrum(_) => EXIT_SPECTRAL,
        _ => EXIT_VALIDATION,
    }
}

fn error_json(e: &Error) -> Value {
    json!({"ok": false, "errors": [{"kind": e.kind(), "message": e.to_string()}]})
}

fn state_arg(s: usize, n: usize) -> Result<usize, Error> {
    if s == 0 || s > n {
        return Err(Error::StateOutOfRange { state: s, n });
    }
    Ok(s - 1)
}

fn load(common: &Common) -> Result<Model, Error> {
    let path = common.model.as_ref().ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
    Model::load(path)
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    let model = load(&cli.common)?;
    let n = model.n();
    match &cli.command {
        Command::Validate => Ok(json!({
            "ok": true,
            "n": n,
            "model_digest": model.digest,
            "p0": model.path.p0().as_slice(),
        })),
        Command::Semigroup { t } => {
            let p = semigroup(model.generator(), t.as_f64())?;
            let rows: Vec<Vec<f64>> = p.matrix().row_iter().map(|r| r.iter().copied().collect()).collect();
            let sums: Vec<f64> = p.matrix().column_iter().map(|c| c.sum()).collect();
            Ok(json!({"t": t, "matrix": rows, "column_sums": sums}))
        }
        Command::Perron => {
            let gibbs = model.gibbs()?;
            let tr = gibbs.triple();
            Ok(json!({
                "lambda": tr.lambda(),
                "u": tr.u().as_slice(),
                "mu": tr.mu().as_slice(),
                "fV": tr.f_v().as_slice(),
                "p0": model.path.p0().as_slice(),
                "spectral_gap": spectral_gap(model.generator(), &model.potential)?,
                "residuals": tr.residuals(model.generator(), &model.potential)?,
            }))
        }
        Command::Measure { cylinder } => {
            let gibbs = model.gibbs()?;
            let specs: Vec<(String, CylinderSpec)> = match cylinder {
                Some(text) => {
                    let spec: CylinderSpec =
                        serde_json::from_str(text).map_err(|e| Error::InvalidCylinder(e.to_string()))?;
                    vec![("cylinder".into(), spec)]
                }
                None => model.file.cylinders.iter().map(|c| (c.name.clone(), c.spec.clone())).collect(),
            };
            let mut out = Vec::new();
            for (name, spec) in specs {
                let mut entry = json!({"name": name, "spec": spec, "P": model.path.eval_p(&spec)?});
                for mode in NuMode::ALL {
                    let field = |e: Result<f64, Error>| e.map_or_else(|e| json!({"error": e.kind()}), |v| json!(v));
                    entry[format!("nu_{}", mode.name())] = field(gibbs.eval_nu(mode, &spec));
                    entry[format!("rho_{}", mode.name())] = field(gibbs.eval_rho(mode, &spec));
                }
                out.push(entry);
            }
            Ok(json!({"cylinders": out}))
        }
        Command::Transfer { t, f, operator } => {
            let f: CylinderFunction = serde_json::from_str(f).map_err(|e| Error::InvalidCylinder(e.to_string()))?;
            let out = match operator {
                Operator::Plain => transfer_apply(&model.path, *t, &f)?,
                Operator::Weighted => model.gibbs()?.weighted_transfer_apply(*t, &f)?,
                Operator::Normalized => model.gibbs()?.normalized_transfer_apply(*t, &f)?,
            };
            Ok(json!({"t": t, "result": out}))
        }
        Command::Gibbs => {
            let gibbs = model.gibbs()?;
            let mut times = Vec::new();
            for &t in &model.file.times {
                times.push(json!({
                    "t": t,
                    "kolmogorov_defect": gibbs.kolmogorov_defect(t),
                    "eigenfunction_residual": gibbs.eigenfunction_residual(t)?,
                    "harmonic_defect": gibbs.theorem_a_residual(NuMode::HTransform, t, &CylinderFunction::one())?.harmonic_defect,
                }));
            }
            let mut mass = json!({});
            for mode in NuMode::ALL {
                mass[mode.name()] = json!(gibbs.rho_mass(mode)?);
            }
            Ok(json!({"lambda": gibbs.triple().lambda(), "times": times, "rho_total_mass": mass}))
        }
        Command::Verify { times, n_random } => {
            let times = if times.is_empty() { model.file.times.clone() } else { times.clone() };
            if times.is_empty() {
                return Err(Error::InvalidArgument("no times given and the model lists none".into()).into());
            }
            let report = run_verification(&model, &VerifyConfig::new(times, *n_random, cli.common.seed))?;
            let value = serde_json::to_value(&report).expect("report serializes");
            if report.all_pass() {
                Ok(value)
            } else {
                eprintln!("failing identities: {}", report.failing_identities().join(", "));
                Err(Failure::Identity(value))
            }
        }
        Command::Simulate { i0, j0, t, n_paths, workers } => {
            let (i, j) = (state_arg(*i0, n)?, state_arg(*j0, n)?);
            let est = match workers {
                Some(w) => fk_estimate_with_workers(
                    model.generator(),
                    &model.potential,
                    i,
                    j,
                    *t,
                    *n_paths,
                    cli.common.seed,
                    *w,
                )?,
                None => fk_estimate(model.generator(), &model.potential, i, j, *t, *n_paths, cli.common.seed)?,
            };
            let rate = model.potential.perturb(model.generator())?;
            let oracle = ruelle_ctmc::ctmc::expm(&rate, *t)[(j, i)];
            let z = if est.std_error > 0.0 { (est.value - oracle) / est.std_error } else { f64::NAN };
            Ok(json!({
                "value": est.value,
                "std_error": est.std_error,
                "n_paths": est.n_paths,
                "target": {"i0": i0, "j0": j0, "t": t},
                "oracle_value": oracle,
                "z_score": if z.is_finite() { json!(z) } else { Value::Null },
            }))
        }
    }
}

fn emit(out: &Option<PathBuf>, value: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    match out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => writeln!(std::io::stdout().lock(), "{text}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (value, code) = match run(&cli) {
        Ok(v) => (v, 0),
        Err(Failure::Identity(v)) => (v, EXIT_IDENTITY),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            (error_json(&e), exit_code(&e))
        }
    };
    if let Err(e) = emit(&cli.common.out, &value) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    ExitCode::from(code)
}
