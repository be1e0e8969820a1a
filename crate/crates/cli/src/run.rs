//! Executes a resolved configuration. The manifest is written first, marked
//! incomplete, and rewritten when the run ends; data rows are flushed in
//! replication order chunk by chunk, so an interrupted run leaves a valid
//! prefix of the output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use jamlab::engine::{pack_finite_input, saturate, SaturationOptions};
use jamlab::measures::TestFunction;
use jamlab::seed::{derive_seed, rng_from_seed, SimRng};
use jamlab::stabilization::{
    calibrate_t_star, cube_plus, estimate_radius_causal, estimate_radius_perturbation, fit_tail,
    local_saturation_time, tail_table, PerturbationOptions, RadiusMethod,
};
use jamlab::stats::{integrals, rate_fit, sweep_tag, CovarianceResult, MeasureKind, SweepPoint, SweepResult};
use jamlab::variability::{run_pipeline, EtaPreset, VariabilityOptions};
use jamlab::{Region, Solid, State};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_box, parse_lgrid, parse_solid, Method, Mode, Params, Subcommand};
use crate::manifest::{manifest_path, now_unix, sibling, Manifest, Replication, Sources, Status, SEED_RULE};

/// Subset budget of the local saturation search (moat subsets tried
/// exhaustively up to `2^budget`).
const SUBSET_BUDGET: usize = 12;
/// Calibration runs for `--tstar auto`.
const CALIBRATION_RUNS: u64 = 200;

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or arguments rejected by the library; exit code 2.
    Validation(String),
    /// Anything that went wrong while running; exit code 3.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<jamlab::Error> for Failure {
    fn from(e: jamlab::Error) -> Self {
        use jamlab::Error::*;
        match e {
            Contract(_) | Invalid(_) | Inadmissible { .. } | Unsupported(_) | Infeasible(_) => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid configuration: {m}"),
            Failure::Runtime(e) => write!(f, "run failed: {e:#}"),
        }
    }
}

type Out<T> = Result<T, Failure>;

/// Seed streams a run will draw, as `(tag, reps)`.
fn plan(cmd: Subcommand, cfg: &Params) -> Vec<(String, u64)> {
    let reps = cfg.reps.unwrap_or(0);
    match cmd {
        Subcommand::Sweep => {
            let n = cfg.lambdas.as_ref().map_or(0, |g| g.len());
            (0..n).map(|k| (sweep_tag(k), reps)).collect()
        }
        Subcommand::Stabilize if cfg.method == Some(Method::Causal) && cfg.tstar.as_deref() == Some("auto") => {
            vec![("stabilize/calibrate".into(), CALIBRATION_RUNS), ("stabilize".into(), reps)]
        }
        // the pipeline draws its own named streams from the master seed
        Subcommand::Variability => Vec::new(),
        _ => vec![(cmd.name().into(), reps)],
    }
}

fn outputs(cmd: Subcommand, out: &Path) -> Vec<PathBuf> {
    let mut v = vec![out.to_path_buf()];
    match cmd {
        Subcommand::Sweep | Subcommand::Covariance | Subcommand::Stabilize => {
            v.push(sibling(out, "detail.jsonl"));
            v.push(sibling(out, "summary.json"));
        }
        _ => {}
    }
    v
}

pub fn execute(cmd: Subcommand, cfg: Params, sources: Sources) -> Out<()> {
    let out = cfg.out.clone().expect("resolved config has an output path");
    let seed = cfg.seed.expect("resolved config has a seed");
    let replications = plan(cmd, &cfg)
        .into_iter()
        .flat_map(|(tag, reps)| (0..reps).map(move |rep| Replication { seed: derive_seed(seed, &tag, rep), tag: tag.clone(), rep }))
        .collect();
    let mpath = manifest_path(&out);
    let mut manifest = Manifest {
        status: Status::Incomplete,
        subcommand: cmd,
        engine_version: jamlab::ENGINE_VERSION.into(),
        master_seed: seed,
        config: cfg.clone(),
        sources,
        seed_rule: SEED_RULE.into(),
        outputs: outputs(cmd, &out),
        replications,
        started_unix_s: now_unix(),
        wall_clock_s: None,
        threads: rayon::current_num_threads(),
        summary: None,
        error: None,
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    manifest.write(&mpath)?;
    let clock = Instant::now();
    let result = match cmd {
        Subcommand::Pack => pack(&cfg, &out),
        Subcommand::Measure => measure(&cfg, &out),
        Subcommand::Sweep => sweep(&cfg, &out),
        Subcommand::Covariance => covariance(&cfg, &out),
        Subcommand::Stabilize => stabilize(&cfg, &out),
        Subcommand::Variability => variability(&cfg, &out),
    };
    manifest.wall_clock_s = Some(clock.elapsed().as_secs_f64());
    match result {
        Ok(summary) => {
            manifest.status = Status::Complete;
            manifest.summary = summary;
            manifest.write(&mpath)?;
            Ok(())
        }
        Err(e) => {
            manifest.status = Status::Failed;
            manifest.error = Some(e.to_string());
            manifest.write(&mpath)?;
            Err(e)
        }
    }
}

fn create(path: &Path) -> Out<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_summary(out: &Path, summary: &serde_json::Value) -> Out<()> {
    let path = sibling(out, "summary.json");
    let text = serde_json::to_string_pretty(summary).map_err(anyhow::Error::from)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Runs `job` for every replication of `tag` in parallel, handing results
/// to `sink` in replication order one chunk at a time.
fn replicate_into<O, F, S>(master: u64, tag: &str, reps: u64, job: F, mut sink: S) -> Out<()>
where
    O: Send,
    F: Fn(u64, u64, &mut SimRng) -> Out<O> + Sync,
    S: FnMut(u64, u64, O) -> Out<()>,
{
    let chunk = (4 * rayon::current_num_threads() as u64).max(16);
    let mut start = 0;
    while start < reps {
        let end = (start + chunk).min(reps);
        let results: Vec<(u64, u64, Out<O>)> = (start..end)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(master, tag, rep);
                (rep, seed, job(rep, seed, &mut rng_from_seed(seed)))
            })
            .collect();
        for (rep, seed, r) in results {
            sink(rep, seed, r?)?;
        }
        start = end;
    }
    Ok(())
}

fn solid_of(cfg: &Params) -> Solid {
    parse_solid(cfg.solid.as_deref().unwrap()).expect("validated solid")
}

fn saturation_opts(cfg: &Params) -> SaturationOptions {
    SaturationOptions::with_epsilon(cfg.eps.unwrap())
}

fn ms(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

#[derive(Serialize)]
struct PackRecord {
    rep: u64,
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    virtual_time: f64,
    vacancy_bound: Option<f64>,
    wall_ms: f64,
    guard_saturated: bool,
}

fn json_line<W: Write, T: Serialize>(w: &mut W, v: &T) -> Out<()> {
    serde_json::to_writer(&mut *w, v).map_err(anyhow::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn pack(cfg: &Params, out: &Path) -> Out<Option<serde_json::Value>> {
    let solid = solid_of(cfg);
    let lambda = cfg.lambda.unwrap();
    let region = Region::rsa_cube(solid.dim(), lambda)?;
    let opts = cfg.eps.map(SaturationOptions::with_epsilon);
    let tau = cfg.tau;
    let finite = cfg.mode == Some(Mode::Finite);
    let mut w = create(out)?;
    let mut total = 0usize;
    let mut guards = 0usize;
    let job = |rep: u64, seed: u64, rng: &mut SimRng| -> Out<PackRecord> {
        let t = Instant::now();
        if finite {
            let st = pack_finite_input(lambda, tau.unwrap(), &solid, rng)?;
            return Ok(PackRecord {
                rep,
                seed,
                n: st.len(),
                virtual_time: tau.unwrap(),
                vacancy_bound: None,
                wall_ms: ms(t),
                guard_saturated: false,
            });
        }
        let run = saturate(State::new(solid.clone(), region.clone())?, rng, opts.as_ref().unwrap())?;
        Ok(PackRecord {
            rep,
            seed,
            n: run.n(),
            virtual_time: run.virtual_time,
            vacancy_bound: Some(run.vacancy_bound + 0.0),
            wall_ms: ms(t),
            guard_saturated: run.guard_saturated,
        })
    };
    replicate_into(cfg.seed.unwrap(), "pack", cfg.reps.unwrap(), job, |_, _, rec| {
        total += rec.n;
        guards += usize::from(rec.guard_saturated);
        json_line(&mut w, &rec)?;
        Ok(w.flush()?)
    })?;
    Ok(Some(json!({ "mean_N": total as f64 / cfg.reps.unwrap() as f64, "guard_saturated_runs": guards })))
}

fn test_functions(cfg: &Params, d: usize) -> Vec<TestFunction<f64>> {
    cfg.boxes
        .as_ref()
        .unwrap()
        .iter()
        .map(|b| {
            let (lo, hi) = parse_box(b, d).expect("validated box");
            TestFunction::indicator(lo, hi).expect("validated box")
        })
        .collect()
}

/// Point and volume integrals of every test function for one saturation.
fn integrals_of(
    solid: &Solid,
    region: &Region,
    lambda: f64,
    fs: &[TestFunction<f64>],
    opts: &SaturationOptions,
    rng: &mut SimRng,
) -> Out<(usize, Vec<f64>, Vec<f64>)> {
    let run = saturate(State::new(solid.clone(), region.clone())?, rng, opts)?;
    let p = integrals(&run.state, lambda, fs, MeasureKind::Point, 1e-9)?;
    let v = integrals(&run.state, lambda, fs, MeasureKind::Volume, 1e-9)?;
    Ok((run.n(), p, v))
}

#[derive(Serialize)]
struct MeasureRow {
    rep: u64,
    f_id: usize,
    point_integral: f64,
    volume_integral: f64,
}

fn measure(cfg: &Params, out: &Path) -> Out<Option<serde_json::Value>> {
    let solid = solid_of(cfg);
    let lambda = cfg.lambda.unwrap();
    let region = Region::rsa_cube(solid.dim(), lambda)?;
    let fs = test_functions(cfg, solid.dim());
    let opts = saturation_opts(cfg);
    let mut w = csv::Writer::from_writer(create(out)?);
    replicate_into(
        cfg.seed.unwrap(),
        "measure",
        cfg.reps.unwrap(),
        |_, _, rng| integrals_of(&solid, &region, lambda, &fs, &opts, rng),
        |rep, _, (_, p, v)| {
            for (f_id, (point_integral, volume_integral)) in p.into_iter().zip(v).enumerate() {
                w.serialize(MeasureRow { rep, f_id, point_integral, volume_integral })?;
            }
            Ok(w.flush()?)
        },
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct SweepRow {
    lambda: f64,
    reps: usize,
    mean_ratio: f64,
    var_ratio: f64,
    se_mean: f64,
    se_var: f64,
    ks: Option<f64>,
}

#[derive(Serialize)]
struct SweepDetail {
    lambda: f64,
    rep: u64,
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    virtual_time: f64,
    vacancy_bound: f64,
    wall_ms: f64,
    guard_saturated: bool,
}

fn sweep(cfg: &Params, out: &Path) -> Out<Option<serde_json::Value>> {
    let solid = solid_of(cfg);
    let opts = saturation_opts(cfg);
    let mut table = csv::Writer::from_writer(create(out)?);
    let mut detail = create(&sibling(out, "detail.jsonl"))?;
    let mut points = Vec::new();
    for (k, &lambda) in cfg.lambdas.as_ref().unwrap().iter().enumerate() {
        let region = Region::rsa_cube(solid.dim(), lambda)?;
        let mut counts = Vec::new();
        let job = |rep: u64, seed: u64, rng: &mut SimRng| -> Out<SweepDetail> {
            let t = Instant::now();
            let run = saturate(State::new(solid.clone(), region.clone())?, rng, &opts)?;
            Ok(SweepDetail {
                lambda,
                rep,
                seed,
                n: run.n(),
                virtual_time: run.virtual_time,
                vacancy_bound: run.vacancy_bound + 0.0,
                wall_ms: ms(t),
                guard_saturated: run.guard_saturated,
            })
        };
        replicate_into(cfg.seed.unwrap(), &sweep_tag(k), cfg.reps.unwrap(), job, |_, _, rec| {
            counts.push(rec.n as f64);
            json_line(&mut detail, &rec)?;
            Ok(detail.flush()?)
        })?;
        let p = SweepPoint::from_counts(lambda, counts)?;
        table.serialize(SweepRow {
            lambda,
            reps: p.reps,
            mean_ratio: p.mean_ratio,
            var_ratio: p.var_ratio,
            se_mean: p.se_mean,
            se_var: p.se_var,
            ks: p.ks,
        })?;
        table.flush()?;
        points.push(p);
    }
    let summary = if points.len() >= 3 {
        let result = SweepResult { points };
        match rate_fit(&result, solid.dim()) {
            Ok(fit) => json!({ "rate_fit": fit }),
            Err(e) => json!({ "rate_fit": null, "rate_fit_error": e.to_string() }),
        }
    } else {
        json!({ "rate_fit": null, "rate_fit_error": "needs at least 3 intensities" })
    };
    write_summary(out, &summary)?;
    Ok(Some(summary))
}

#[derive(Serialize)]
struct CovarianceRow {
    measure: &'static str,
    i: usize,
    j: usize,
    cov_over_lambda: f64,
    se: f64,
}

fn covariance(cfg: &Params, out: &Path) -> Out<Option<serde_json::Value>> {
    let solid = solid_of(cfg);
    let lambda = cfg.lambda.unwrap();
    let region = Region::rsa_cube(solid.dim(), lambda)?;
    let fs = test_functions(cfg, solid.dim());
    let opts = saturation_opts(cfg);
    let mut detail = create(&sibling(out, "detail.jsonl"))?;
    let (mut point_rows, mut volume_rows) = (Vec::new(), Vec::new());
    replicate_into(
        cfg.seed.unwrap(),
        "covariance",
        cfg.reps.unwrap(),
        |_, _, rng| integrals_of(&solid, &region, lambda, &fs, &opts, rng),
        |rep, seed, (n, p, v)| {
            json_line(&mut detail, &json!({ "rep": rep, "seed": seed, "N": n, "point": p, "volume": v }))?;
            point_rows.push(p);
            volume_rows.push(v);
            Ok(detail.flush()?)
        },
    )?;
    let mut w = csv::Writer::from_writer(create(out)?);
    let mut summary = serde_json::Map::new();
    for (measure, rows) in [("point", point_rows), ("volume", volume_rows)] {
        let r = CovarianceResult::from_values(lambda, rows)?;
        for i in 0..fs.len() {
            for j in 0..fs.len() {
                w.serialize(CovarianceRow { measure, i, j, cov_over_lambda: r.matrix[i][j], se: r.se[i][j] })?;
            }
        }
        summary.insert(measure.into(), json!({ "matrix": r.matrix, "se": r.se }));
    }
    w.flush()?;
    let summary = json!({ "lambda": lambda, "reps": cfg.reps, "boxes": cfg.boxes, "covariance": summary });
    write_summary(out, &summary)?;
    Ok(Some(summary))
}

#[derive(Serialize)]
struct TailRow {
    #[serde(rename = "L")]
    l: f64,
    tau_hat: f64,
    n: usize,
    method: &'static str,
}

fn stabilize(cfg: &Params, out: &Path) -> Out<Option<serde_json::Value>> {
    let solid = solid_of(cfg);
    let lambda = cfg.lambda.unwrap();
    let center = cfg.center.clone().unwrap();
    let horizon = cfg.horizon.unwrap();
    let grid = parse_lgrid(cfg.lgrid.as_deref().unwrap()).expect("validated grid");
    let seed = cfg.seed.unwrap();
    let method = cfg.method.unwrap();

    let mut t_star = None;
    if method == Method::Causal {
        t_star = Some(match cfg.tstar.as_deref().unwrap() {
            "auto" => {
                let plus = cube_plus(&center);
                let mut times = Vec::new();
                replicate_into(
                    seed,
                    "stabilize/calibrate",
                    CALIBRATION_RUNS,
                    |_, _, rng| {
                        let input = jamlab::engine::poisson_spacetime(&plus, horizon, 1.0, rng)?;
                        Ok(local_saturation_time(&solid, &center, &input, SUBSET_BUDGET)?.time)
                    },
                    |_, _, t| {
                        times.push(t);
                        Ok(())
                    },
                )?;
                calibrate_t_star(&times)?
            }
            s => s.parse::<f64>().expect("validated t*"),
        });
    }

    let mut detail = create(&sibling(out, "detail.jsonl"))?;
    let mut radii = Vec::new();
    let popts = PerturbationOptions {
        l_grid: grid.clone(),
        resamples: cfg.resamples.unwrap_or(0),
        horizon,
        epsilon: cfg.eps.unwrap(),
    };
    let job = |_: u64, _: u64, rng: &mut SimRng| -> Out<_> {
        Ok(match method {
            Method::Perturbation => estimate_radius_perturbation(lambda, &solid, &center, &popts, rng)?,
            Method::Causal => {
                estimate_radius_causal(lambda, &solid, &center, horizon, t_star.unwrap(), SUBSET_BUDGET, rng)?
            }
        })
    };
    replicate_into(seed, "stabilize", cfg.reps.unwrap(), job, |rep, seed, s| {
        radii.push(s.radius);
        json_line(&mut detail, &json!({ "rep": rep, "seed": seed, "sample": s }))?;
        Ok(detail.flush()?)
    })?;

    let name = match method {
        Method::Perturbation => method_name(RadiusMethod::Perturbation),
        Method::Causal => method_name(RadiusMethod::CausalDiameter),
    };
    let table = tail_table(&radii, &grid);
    let mut w = csv::Writer::from_writer(create(out)?);
    for &(l, tau_hat) in &table {
        w.serialize(TailRow { l, tau_hat, n: radii.len(), method: name })?;
    }
    w.flush()?;
    let fit = match fit_tail(&table) {
        Ok(f) => json!({ "fit": f }),
        Err(e) => json!({ "fit": null, "fit_error": e.to_string() }),
    };
    let infinite = radii.iter().filter(|r| !r.is_finite()).count();
    let summary = json!({
        "method": name,
        "lambda": lambda,
        "center": center,
        "samples": radii.len(),
        "beyond_grid": infinite,
        "t_star": t_star,
        "tail": fit,
        "note": "Monte Carlo radii are lower bounds on the worst-case radius of stabilization",
    });
    write_summary(out, &summary)?;
    Ok(Some(summary))
}

fn method_name(m: RadiusMethod) -> &'static str {
    match m {
        RadiusMethod::Perturbation => "perturbation",
        RadiusMethod::CausalDiameter => "causal_diameter",
    }
}

fn variability(cfg: &Params, out: &Path) -> Out<Option<serde_json::Value>> {
    let solid = solid_of(cfg);
    let designs = cfg
        .designs
        .as_ref()
        .unwrap()
        .iter()
        .map(|s| s.parse::<EtaPreset>())
        .collect::<jamlab::Result<Vec<_>>>()?;
    let opts = VariabilityOptions {
        delta: match cfg.delta.as_deref().unwrap() {
            "auto" => None,
            s => Some(s.parse().expect("validated delta")),
        },
        l_max: cfg.lmax.unwrap(),
        reps: cfg.reps.unwrap() as usize,
        designs,
        epsilon: cfg.eps.unwrap(),
        ..VariabilityOptions::default()
    };
    let report = run_pipeline(&solid, &opts, cfg.seed.unwrap())?;
    let mut w = create(out)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(anyhow::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(Some(json!({
        "beta": report.beta,
        "delta": report.delta,
        "L0": report.l0,
        "event1_positive": report.event1.positive(),
        "event2_positive": report.event2.positive(),
        "min_var": report.min_var,
        "min_lower_95": report.min_lower_95,
    })))
}
