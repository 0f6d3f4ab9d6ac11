use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use periodica::design::{default_augment_grid, default_jitter_grid};
use periodica::periodogram::find_peak_indices;
use periodica::simulation::{coverage_experiment, peak_modes, peak_sampling_distribution, simulate};
use periodica::{
    build_log_grid, compute_periodogram, confidence_set, np_test, optimal_design, parse_timeseries, DesignOptions,
    InferenceConfig, ObservationDesign, PeriodGrid, RngKey, SigmaSource, StreamContext, TimeSeries,
};
use serde::Serialize;

use crate::args::{
    Command, ConfsetArgs, CoverageArgs, DesignArgs, DesignMode, GridArgs, InferenceArgs, NptestArgs, PeakdistArgs,
    PeriodogramArgs, SimulateArgs,
};
use crate::failure::Failure;

/// Output files in the order they are written.
pub type Outputs = Vec<(String, Vec<u8>)>;

pub fn read_input(path: &Path) -> Result<(TimeSeries<f64>, Vec<u8>), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Failure::input(format!("{}: not UTF-8 text: {e}", path.display())))?;
    let ts = parse_timeseries(text).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            message: format!("{}: {}", path.display(), f.message),
            ..f
        }
    })?;
    Ok((ts, bytes))
}

fn grid(g: &GridArgs) -> Result<PeriodGrid<f64>, Failure> {
    let missing = || Failure::internal("grid options were not resolved");
    Ok(build_log_grid(
        g.theta_min.ok_or_else(missing)?,
        g.theta_max.ok_or_else(missing)?,
        g.points.ok_or_else(missing)?,
    )?)
}

fn inference_config(a: &InferenceArgs) -> Result<InferenceConfig, Failure> {
    Ok(InferenceConfig::new(a.alpha, a.replicates)?
        .with_gamma(a.gamma)
        .with_estimator(a.estimator.into())
        .validated()?)
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn file(name: &str, bytes: Vec<u8>) -> (String, Vec<u8>) {
    (name.to_string(), bytes)
}

/// Execute a resolved command. `input` replaces the recorded input path
/// (used when re-running from a manifest in another directory).
pub fn execute(command: &Command, input: Option<&Path>) -> Result<Outputs, Failure> {
    let load = || -> Result<TimeSeries<f64>, Failure> {
        let path = input
            .or(command.input().map(|p| p.as_path()))
            .ok_or_else(|| Failure::internal("command has no input"))?;
        Ok(read_input(path)?.0)
    };
    match command {
        Command::Periodogram(a) => periodogram(a, &load()?),
        Command::Confset(a) => confset(a, &load()?),
        Command::Nptest(a) => nptest(a, &load()?),
        Command::Design(a) => design(a, &load()?),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Coverage(a) => coverage(a),
        Command::Peakdist(a) => peakdist(a),
        Command::Rerun(_) => Err(Failure::internal("rerun cannot be nested")),
    }
}

fn periodogram(a: &PeriodogramArgs, ts: &TimeSeries<f64>) -> Result<Outputs, Failure> {
    let grid = grid(&a.grid)?;
    let pg = compute_periodogram(ts, &grid)?;
    if pg.singular_count() > 0 {
        eprintln!(
            "warning: {} trial periods have a singular design; their power is reported as 0",
            pg.singular_count()
        );
    }
    let mut peaks = String::from("theta,power\n");
    for k in find_peak_indices(&pg.power, a.gamma) {
        let _ = writeln!(peaks, "{},{}", pg.grid.periods()[k], pg.power[k]);
    }
    println!("peak period {} (power {})", grid.periods()[pg.argmax()], pg.max_power());
    Ok(vec![
        file("periodogram.csv", pg.to_csv().into_bytes()),
        file("peaks.csv", peaks.into_bytes()),
        file("periodogram.json", json(&pg)?),
    ])
}

fn confset(a: &ConfsetArgs, ts: &TimeSeries<f64>) -> Result<Outputs, Failure> {
    let grid = grid(&a.grid)?;
    let cfg = inference_config(&a.inference)?;
    let key = RngKey::new(a.seed, StreamContext::SignFlip);
    let cs = confidence_set(ts, &grid, &cfg, &key, &a.inference.candidates.into())?;
    for e in cs.untestable() {
        eprintln!(
            "warning: period {} not testable: {}",
            e.theta0,
            e.untestable.as_deref().unwrap_or("unknown reason")
        );
    }
    println!(
        "{} of {} tested periods accepted at alpha = {} ({} grid points not tested)",
        cs.accepted.len(),
        cs.entries.len(),
        cs.alpha,
        cs.not_tested
    );
    Ok(vec![
        file("confset.csv", cs.to_table_csv().into_bytes()),
        file("confset.json", json(&cs)?),
    ])
}

fn nptest(a: &NptestArgs, ts: &TimeSeries<f64>) -> Result<Outputs, Failure> {
    let grid = grid(&a.grid)?;
    let cfg = InferenceConfig::new(0.05, a.replicates)?.with_estimator(a.estimator.into());
    let key = RngKey::new(a.seed, StreamContext::Permutation);
    eprintln!(
        "note: times are congruent modulo {} when their phases round to the same multiple of {} days",
        a.theta0, a.quantum
    );
    let out = np_test(ts, &grid, a.theta0, a.quantum, &cfg, &key)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let o = &out.outcome;
    let csv = format!(
        "theta0,pvalue,s_obs,exceedances,replicates,mode,quantum,classes\n{},{},{},{},{},nonparametric,{},{}\n",
        o.theta0, o.p_value, o.s_obs, o.exceedances, o.replicates, a.quantum, out.partition.classes
    );
    println!("p = {} for period {}", o.p_value, o.theta0);
    Ok(vec![file("nptest.csv", csv.into_bytes()), file("nptest.json", json(&out)?)])
}

fn design(a: &DesignArgs, ts: &TimeSeries<f64>) -> Result<Outputs, Failure> {
    let mut space = Vec::new();
    let with_window = |mut d: ObservationDesign| {
        d.window_days = a.window_days;
        d.micro_jitter = a.micro_jitter;
        d
    };
    if matches!(a.mode, DesignMode::Jitter | DesignMode::Both) {
        match &a.deltas {
            Some(ds) => space.extend(ds.iter().map(|&d| ObservationDesign::jitter(d))),
            None => space.extend(default_jitter_grid()),
        }
    }
    if matches!(a.mode, DesignMode::Augment | DesignMode::Both) {
        match &a.extra {
            Some(xs) => space.extend(xs.iter().map(|&x| with_window(ObservationDesign::augment(x)))),
            None => space.extend(default_augment_grid().into_iter().map(with_window)),
        }
    }
    let mut opts = DesignOptions::new(grid(&a.grid)?, inference_config(&a.inference)?);
    opts.candidates = a.inference.candidates.into();
    opts.r_design = a.r_design;
    opts.tol_eps = a.eps;
    opts.nuisance = a.nuisance;
    opts.sigma_source = if a.noiseless {
        SigmaSource::Noiseless
    } else {
        SigmaSource::Observed
    };
    let key = RngKey::new(a.seed, StreamContext::DesignSynth);
    let report = optimal_design(ts, a.theta_hat, &space, &opts, &key)?;
    for row in &report.rows {
        for e in &row.errors {
            eprintln!("warning: design {:?} {}: {e}", row.design.kind, row.design.complexity());
        }
    }
    println!(
        "best jitter: {}; best augmentation: {}",
        report.best_jitter.map_or("none".into(), |d| format!("delta = {}", d.delta)),
        report.best_augment.map_or("none".into(), |d| format!("{} extra observations", d.extra_n)),
    );
    Ok(vec![
        file("design_rows.csv", report.rows_csv().into_bytes()),
        file("design_summary.csv", report.summary_csv().into_bytes()),
        file("design.json", json(&report)?),
    ])
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Outputs, Failure> {
    let spec = a.sim.spec();
    let ts: TimeSeries<f64> = simulate(&spec, &RngKey::new(a.seed, StreamContext::SimTimes))?;
    Ok(vec![file("simulated.csv", ts.to_csv().into_bytes())])
}

fn coverage(a: &CoverageArgs) -> Result<Outputs, Failure> {
    let spec = a.sim.spec();
    let cfg = inference_config(&a.inference)?;
    let key = RngKey::new(a.seed, StreamContext::Coverage);
    let report = coverage_experiment(&spec, a.reps, &grid(&a.grid)?, &cfg, a.rule.into(), &key)?;
    let csv = format!(
        "n,reps,alpha,target,covered,untestable,coverage,ci_low,ci_high\n{},{},{},{},{},{},{},{},{}\n",
        spec.n,
        report.reps,
        report.alpha,
        report.target,
        report.covered,
        report.untestable,
        report.coverage,
        report.ci95.0,
        report.ci95.1
    );
    println!(
        "coverage {} ({} of {}), 95% interval [{}, {}]",
        report.coverage, report.covered, report.reps, report.ci95.0, report.ci95.1
    );
    Ok(vec![file("coverage.csv", csv.into_bytes()), file("coverage.json", json(&report)?)])
}

fn peakdist(a: &PeakdistArgs) -> Result<Outputs, Failure> {
    let spec = a.sim.spec();
    let key = RngKey::new(a.seed, StreamContext::PeakDistribution);
    let peaks = peak_sampling_distribution(&spec, a.reps, &grid(&a.grid)?, &key)?;
    let mut samples = String::from("replicate,theta\n");
    for (r, p) in peaks.iter().enumerate() {
        let _ = writeln!(samples, "{r},{p}");
    }
    let mut modes = String::from("location,low,high,count,mass\n");
    for m in peak_modes(&peaks, a.merge_width) {
        let _ = writeln!(modes, "{},{},{},{},{}", m.location, m.low, m.high, m.count, m.mass);
    }
    Ok(vec![
        file("peakdist.csv", samples.into_bytes()),
        file("modes.csv", modes.into_bytes()),
    ])
}
