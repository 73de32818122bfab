use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use danm_bench::{
    default_fit, noise_free_floor, run_mc_mse, run_runtime_sweep, write_mse_csv, write_runtime_csv, McOptions,
    RuntimeOptions, Spacing,
};
use danm_core::certificate::certify;
use danm_core::pipeline::{estimate, Fit, PipelineOptions};
use danm_core::{Method, Scenario, SolverSettings};
use serde_json::{json, Value};

use crate::canonical::{open, seal, Envelope};
use crate::error::CliError;
use crate::wire::{MatrixWire, ResultPayload, SnapshotPayload};

pub const SNAPSHOT_KIND: &str = "snapshot";
pub const RESULT_KIND: &str = "estimate";
pub const CERTIFICATE_KIND: &str = "certificate";

/// Grid used by certification when none is given.
pub fn default_cert_grid(n_x: usize, n_y: usize) -> usize {
    let n = n_x.max(n_y);
    if n <= 32 {
        1024
    } else {
        // keep roughly 32 samples per mainlobe width as arrays grow
        (32 * n).next_power_of_two()
    }
}

fn read_file(path: &Path, what: &str, missing_is_artifact: bool) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| {
        let msg = format!("{what} {}: {e}", path.display());
        if e.kind() == ErrorKind::NotFound && missing_is_artifact {
            CliError::MissingArtifact(msg)
        } else {
            CliError::Input(msg)
        }
    })
}

/// Writes `text` to `out`, or stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_payload<T: serde::de::DeserializeOwned>(env: &Envelope, what: &str) -> Result<T, CliError> {
    serde_json::from_value(env.payload.clone()).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn settings_meta(s: &SolverSettings) -> Value {
    json!({
        "max_iters": s.max_iters,
        "abs_tol": s.abs_tol,
        "rel_tol": s.rel_tol,
        "penalty_rho": s.penalty_rho,
        "vectorized_size_cap": s.vectorized_size_cap,
    })
}

pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub snr: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let text = read_file(&a.scenario, "scenario", false)?;
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(snr) = a.snr {
        scenario.snr_db = Some(snr);
    }
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let snap = scenario.snapshot()?;
    let payload = SnapshotPayload {
        y: MatrixWire::from_mat(&snap.y),
        noise_variance: snap.noise_variance,
        scenario: scenario.clone(),
    };
    let meta = json!({
        "seed": scenario.seed,
        "geometry": { "n_x": scenario.n_x, "n_y": scenario.n_y },
        "snr_db": scenario.snr_db,
        "frequency_convention": "normalized spatial frequency f in [0,1), f = sin(theta)/2 at half-wavelength spacing",
    });
    let (out, _) = seal(SNAPSHOT_KIND, meta, &payload)?;
    emit(a.out.as_deref(), &out)?;
    Ok(out)
}

fn load_snapshot(path: &Path) -> Result<(Envelope, SnapshotPayload), CliError> {
    let text = read_file(path, "snapshot", true)?;
    let env = open(&text, "snapshot", SNAPSHOT_KIND)?;
    let payload: SnapshotPayload = parse_payload(&env, "snapshot")?;
    payload.scenario.validate()?;
    Ok((env, payload))
}

pub struct EstimateArgs {
    pub snapshot: PathBuf,
    pub method: Method,
    pub lambda: Option<f64>,
    pub order: Option<usize>,
    pub settings: SolverSettings,
    pub certify: bool,
    pub grid: Option<usize>,
    pub cert_tol: f64,
    pub out: Option<PathBuf>,
}

/// Runs the pipeline and writes the result record. A non-converged solve
/// still writes its record (flagged) before reporting exit code 3.
pub fn estimate_cmd(a: &EstimateArgs) -> Result<String, CliError> {
    a.settings.validate()?;
    let (env, snap) = load_snapshot(&a.snapshot)?;
    let sc = &snap.scenario;
    let y = snap.y.to_mat("snapshot y")?;
    if y.shape() != (sc.n_x, sc.n_y) {
        return Err(CliError::Input(format!(
            "snapshot y is {}x{} but the scenario says {}x{}",
            y.nrows(),
            y.ncols(),
            sc.n_x,
            sc.n_y
        )));
    }
    let fit = match a.lambda {
        Some(lambda) => Fit::Regularized { lambda },
        None => default_fit(snap.noise_variance, sc.n_x, sc.n_y)?,
    };
    let opts = PipelineOptions {
        method: a.method,
        fit,
        order: a.order,
        settings: a.settings.clone(),
        ..Default::default()
    };
    let est = estimate(&y, &sc.observation()?, &opts).map_err(|e| match (&e, a.order) {
        (danm_core::Error::Capacity { .. }, None) if snap.noise_variance > 0.0 => CliError::Input(format!(
            "{e}; the order was estimated from the Toeplitz spectra, which noise inflates, so pass --order"
        )),
        _ => e.into(),
    })?;
    let report = match (a.certify, &est.dual_certificate) {
        (false, _) => None,
        (true, Some(q)) => {
            let g = a.grid.unwrap_or_else(|| default_cert_grid(sc.n_x, sc.n_y));
            Some(certify(q, &est.estimate.pairs, (g, g), a.cert_tol)?)
        }
        (true, None) => {
            log::warn!("no dual certificate available ({} method, converged = {})", est.method, est.converged);
            None
        }
    };
    let payload = ResultPayload::new(&est, fit, report);
    let meta = json!({
        "seed": sc.seed,
        "settings": settings_meta(&a.settings),
        "snapshot_digest": env.digest,
        "order_requested": a.order,
    });
    let (out, _) = seal(RESULT_KIND, meta, &payload)?;
    emit(a.out.as_deref(), &out)?;
    if !est.converged {
        return Err(CliError::NonConvergence(format!(
            "stopped after {} iterations (primal {:.3e}, dual {:.3e}); record written with converged = false",
            est.iterations, est.primal_residual, est.dual_residual
        )));
    }
    Ok(out)
}

pub struct CertifyArgs {
    pub snapshot: PathBuf,
    pub result: PathBuf,
    pub grid: Option<usize>,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

pub fn certify_cmd(a: &CertifyArgs) -> Result<String, CliError> {
    let (snap_env, snap) = load_snapshot(&a.snapshot)?;
    let text = read_file(&a.result, "result", true)?;
    let env = open(&text, "result", RESULT_KIND)?;
    if env.meta.get("snapshot_digest").and_then(Value::as_str) != Some(snap_env.digest.as_str()) {
        return Err(CliError::Input("result was not produced from this snapshot (digest mismatch)".into()));
    }
    let result: ResultPayload = parse_payload(&env, "result")?;
    if !result.converged {
        return Err(CliError::MissingArtifact(format!(
            "result comes from an unconverged solve ({} iterations); refusing to certify",
            result.iterations
        )));
    }
    let Some(q) = &result.dual_certificate else {
        return Err(CliError::MissingArtifact(format!(
            "result carries no dual certificate ({} method)",
            result.method
        )));
    };
    let q = q.to_mat("dual certificate")?;
    let (n_x, n_y) = (snap.scenario.n_x, snap.scenario.n_y);
    if q.shape() != (n_x, n_y) {
        return Err(CliError::Input(format!("certificate is {}x{}, expected {n_x}x{n_y}", q.nrows(), q.ncols())));
    }
    let g = a.grid.unwrap_or_else(|| default_cert_grid(n_x, n_y));
    let report = certify(&q, &result.support(), (g, g), a.tol)?;
    let meta = json!({
        "seed": snap.scenario.seed,
        "snapshot_digest": snap_env.digest,
        "result_digest": env.digest,
        "tol": a.tol,
    });
    let (out, _) = seal(CERTIFICATE_KIND, meta, &report)?;
    emit(a.out.as_deref(), &out)?;
    Ok(out)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub struct RuntimeArgs {
    pub sizes: Vec<usize>,
    pub k: usize,
    pub runs: usize,
    pub seed: u64,
    pub spacing: f64,
    pub methods: Vec<Method>,
    pub settings: SolverSettings,
    pub out: Option<PathBuf>,
}

pub fn bench_runtime(a: &RuntimeArgs) -> Result<String, CliError> {
    let opts = RuntimeOptions {
        runs: a.runs,
        settings: a.settings.clone(),
        spacing: Spacing::PerElement(a.spacing),
        methods: a.methods.clone(),
    };
    let recs = run_runtime_sweep(&a.sizes, a.k, a.seed, &opts)?;
    let mut buf = Vec::new();
    write_runtime_csv(&recs, &mut buf)?;
    let csv = String::from_utf8(buf).expect("csv is utf-8");
    emit(a.out.as_deref(), &csv)?;
    if let Some(out) = &a.out {
        let meta = json!({
            "seed": a.seed,
            "settings": settings_meta(&a.settings),
            "sizes": a.sizes,
            "k": a.k,
            "runs": a.runs,
            "spacing_per_element": a.spacing,
            "note": "wall_seconds covers the SDP solve only; capped rows were not run",
        });
        let (text, _) = seal("runtime-meta", meta, &json!({}))?;
        emit(Some(&sidecar(out)), &text)?;
    }
    Ok(csv)
}

pub struct MseArgs {
    pub template: PathBuf,
    pub snrs: Vec<f64>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub methods: Vec<Method>,
    pub settings: SolverSettings,
    pub out: Option<PathBuf>,
}

pub fn mc_mse(a: &MseArgs) -> Result<String, CliError> {
    let text = read_file(&a.template, "scenario", false)?;
    let mut template = Scenario::from_json(&text)?;
    if let Some(seed) = a.seed {
        template.seed = seed;
    }
    let opts = McOptions { methods: a.methods.clone(), settings: a.settings.clone() };
    let recs = run_mc_mse(&a.snrs, a.trials, &template, &opts)?;
    let mut buf = Vec::new();
    write_mse_csv(&recs, &mut buf)?;
    let csv = String::from_utf8(buf).expect("csv is utf-8");
    emit(a.out.as_deref(), &csv)?;
    if let Some(out) = &a.out {
        let floor = noise_free_floor(&template, a.methods.first().copied().unwrap_or_default(), &a.settings)?;
        let meta = json!({
            "seed": template.seed,
            "settings": settings_meta(&a.settings),
            "trials": a.trials,
            "snrs": a.snrs,
            "noise_floor_mse": if floor.is_finite() { json!(floor) } else { Value::Null },
            "units": "squared wrap error in normalized frequency; multiply by 4 for sin(theta) units",
        });
        let (text, _) = seal("mse-meta", meta, &json!({ "template": template }))?;
        emit(Some(&sidecar(out)), &text)?;
    }
    Ok(csv)
}

pub struct PlotArgs {
    pub csv: PathBuf,
    pub out: Option<PathBuf>,
}

pub fn plot(a: &PlotArgs) -> Result<String, CliError> {
    let text = read_file(&a.csv, "table", true)?;
    let header = text.lines().next().unwrap_or("");
    let svg = if header == danm_bench::RUNTIME_HEADER.join(",") {
        let recs = danm_bench::read_runtime_csv(text.as_bytes())?;
        crate::plot::runtime_svg(&recs)
    } else if header == danm_bench::MSE_HEADER.join(",") {
        let recs = danm_bench::read_mse_csv(text.as_bytes())?;
        let floor = fs::read_to_string(sidecar(&a.csv))
            .ok()
            .and_then(|t| open(&t, "sidecar", "mse-meta").ok())
            .and_then(|env| env.meta.get("noise_floor_mse").and_then(Value::as_f64));
        crate::plot::mse_svg(&recs, floor)
    } else {
        return Err(CliError::Input(format!("{}: unrecognized CSV header '{header}'", a.csv.display())));
    };
    emit(a.out.as_deref(), &svg)?;
    Ok(svg)
}
