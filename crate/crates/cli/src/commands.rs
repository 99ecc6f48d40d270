//! The four pipelines. Each returns its tables; [`run`] writes them.

use std::path::{Path, PathBuf};

use g4v_core::fit::{fit_exponential, DecayCurve};
use g4v_core::link::sweep_length;
use g4v_core::qstate::{CMatrix, DensityOperator, SystemShape, C64};
use g4v_core::scan::{decoherence_scan, Observable};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{float, sibling, Table};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub input: PathBuf,
    pub time_col: String,
    pub value_col: String,
    pub group_col: Option<String>,
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    SingleSpin,
    BellPair,
    LinkSweep,
    Fit(FitOptions),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SingleSpin => "single-spin",
            Command::BellPair => "bell-pair",
            Command::LinkSweep => "link-sweep",
            Command::Fit(_) => "fit",
        }
    }
}

/// `(|1> + |2>)/sqrt2` on one spin, built with exact `1/2` entries.
pub fn superposition() -> DensityOperator {
    let half = C64::new(0.5, 0.0);
    let m = CMatrix::from_fn(4, 4, |i, j| if i < 2 && j < 2 { half } else { C64::new(0.0, 0.0) });
    DensityOperator::new(SystemShape::single(4), m).expect("valid state")
}

/// `(|1,2> + |2,1>)/sqrt2` on two spins, built with exact `1/2` entries.
pub fn bell_pair() -> DensityOperator {
    let shape = SystemShape::repeated(4, 2);
    let support = [shape.join_index(&[0, 1]), shape.join_index(&[1, 0])];
    let m = CMatrix::from_fn(16, 16, |i, j| {
        if support.contains(&i) && support.contains(&j) {
            C64::new(0.5, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    DensityOperator::new(shape, m).expect("valid state")
}

/// `<psi|rho|psi>` for the single-spin superposition.
fn superposition_fidelity(rho: &DensityOperator) -> f64 {
    0.5 * (rho.element(0, 0).re + rho.element(1, 1).re) + rho.element(0, 1).re
}

/// Coherence `rho_12` of the superposition state over time, and `tau_C,1`
/// per temperature.
pub fn single_spin(cfg: &RunConfig) -> Result<(Table, Table), CliError> {
    let (horizon, n) = cfg.sampling("single-spin")?;
    let points = decoherence_scan(
        &cfg.constants()?,
        &superposition(),
        Observable::Coherence { bra: 1, ket: 2 },
        horizon,
        n,
        Some(0.5),
    )?;
    let mut series = Table::new(&["T", "t", "re_rho12", "im_rho12", "abs_rho12", "fidelity"]);
    let mut summary = Table::new(&["T", "tau_c1", "residual_rms"]);
    for p in &points {
        let temp = float(p.constants.temperature);
        for (&t, rho) in p.curve.times().iter().zip(&p.states) {
            let r = rho.element(0, 1);
            series.push(vec![
                temp.clone(),
                float(t),
                float(r.re),
                float(r.im),
                float(r.norm()),
                float(superposition_fidelity(rho)),
            ]);
        }
        summary.push(vec![temp, float(p.fit.tau), float(p.fit.residual_rms)]);
    }
    Ok((series, summary))
}

/// Hashing bound of the Bell pair over time, and `tau_C,2` per temperature.
pub fn bell_pair_decay(cfg: &RunConfig) -> Result<(Table, Table), CliError> {
    let (horizon, n) = cfg.sampling("bell-pair")?;
    let points = decoherence_scan(
        &cfg.constants()?,
        &bell_pair(),
        Observable::HashingBound,
        horizon,
        n,
        Some(1.0),
    )?;
    let mut series = Table::new(&["T", "t", "hashing_bound"]);
    let mut summary = Table::new(&["T", "tau_c2"]);
    for p in &points {
        let temp = float(p.constants.temperature);
        for (&t, &v) in p.curve.times().iter().zip(p.curve.values()) {
            series.push(vec![temp.clone(), float(t), float(v)]);
        }
        summary.push(vec![temp, float(p.fit.tau)]);
    }
    Ok((series, summary))
}

/// Hashing bound at swap and at herald along the length grid, plus the
/// two-spin density matrices at the marked lengths.
pub fn link_sweep(cfg: &RunConfig) -> Result<(Table, Table), CliError> {
    let link = cfg.link()?;
    let constants = cfg.constants()?;
    let mut table = Table::new(&["encoding", "T", "L_km", "I_at_swap", "I_at_herald", "success_prob"]);
    let mut matrices = Table::new(&["encoding", "T", "L_km", "stage", "index", "row", "col", "re", "im"]);
    for &encoding in &link.encodings {
        let template = link.template(encoding);
        for consts in &constants {
            let temp = float(consts.temperature);
            for row in sweep_length(&template, consts, &link.lengths_km)? {
                let head = vec![encoding.name().to_string(), temp.clone(), float(row.length_km)];
                let mut rec = head.clone();
                rec.extend([float(row.i_at_swap), float(row.i_at_herald), float(row.success_prob)]);
                table.push(rec);
                if !link.marked_lengths_km.contains(&row.length_km) {
                    continue;
                }
                for (stage, state) in [("swap", &row.at_swap), ("herald", &row.at_herald)] {
                    let m = state.rho.matrix();
                    for i in 0..16 {
                        for j in 0..16 {
                            let mut rec = head.clone();
                            rec.push(stage.to_string());
                            rec.extend([(i * 16 + j).to_string(), i.to_string(), j.to_string()]);
                            rec.extend([float(m[(i, j)].re), float(m[(i, j)].im)]);
                            matrices.push(rec);
                        }
                    }
                }
            }
        }
    }
    Ok((table, matrices))
}

/// Fits `A exp(-t/tau)` to columns of an existing CSV, one row per group in
/// order of first appearance.
pub fn fit_csv(opts: &FitOptions) -> Result<Table, CliError> {
    let input = &opts.input;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: malformed header: {e}", input.display())))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column named {name:?}", input.display())))
    };
    let t_idx = column(&opts.time_col)?;
    let v_idx = column(&opts.value_col)?;
    let g_idx = opts.group_col.as_deref().map(column).transpose()?;

    let mut groups: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Config(format!("{}:{line}: malformed CSV: {e}", input.display()))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize, name: &str| -> Result<f64, CliError> {
            let raw = record.get(idx).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!(
                    "{}:{line}: column {name:?} has non-numeric value {raw:?}",
                    input.display()
                ))
            })
        };
        let t = field(t_idx, &opts.time_col)?;
        let v = field(v_idx, &opts.value_col)?;
        let key = g_idx
            .map(|g| record.get(g).unwrap_or("").to_string())
            .unwrap_or_else(|| "all".into());
        match groups.iter_mut().find(|(k, _, _)| *k == key) {
            Some((_, ts, vs)) => {
                ts.push(t);
                vs.push(v);
            }
            None => groups.push((key, vec![t], vec![v])),
        }
    }
    if groups.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", input.display())));
    }

    let group_name = opts.group_col.clone().unwrap_or_else(|| "group".into());
    let mut out = Table::new(&[&group_name, "tau", "amplitude", "residual_rms", "n_used"]);
    for (key, ts, vs) in groups {
        let curve = DecayCurve::new(ts, vs).map_err(|e| CliError::Config(format!("group {key:?}: {e}")))?;
        let fit = fit_exponential(&curve, opts.amplitude).map_err(|e| CliError::Numerical(format!("group {key:?}: {e}")))?;
        out.push(vec![
            key,
            float(fit.tau),
            float(fit.amplitude),
            float(fit.residual_rms),
            fit.n_used.to_string(),
        ]);
    }
    Ok(out)
}

fn output_path(cfg: Option<&RunConfig>, out: Option<&Path>) -> Result<PathBuf, CliError> {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output_path.clone()))
        .ok_or_else(|| CliError::Config("output_path: missing (set it in the config or pass --out)".into()))
}

fn load(config: Option<&Path>, command: &str) -> Result<RunConfig, CliError> {
    let path = config.ok_or_else(|| CliError::Config(format!("--config is required for {command}")))?;
    RunConfig::from_path(path)
}

/// Runs `command` and returns the files written, main table first.
pub fn run(command: &Command, config: Option<&Path>, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let name = command.name();
    match command {
        Command::Fit(opts) => {
            let cfg = config.map(RunConfig::from_path).transpose()?;
            let path = output_path(cfg.as_ref(), out)?;
            let table = fit_csv(opts)?;
            let meta: Value = json!({
                "command": name,
                "input": opts.input.display().to_string(),
                "time_col": opts.time_col,
                "value_col": opts.value_col,
                "group_col": opts.group_col,
                "amplitude": opts.amplitude,
            });
            table.write(&path, &meta)?;
            Ok(vec![path])
        }
        _ => {
            let cfg = load(config, name)?;
            let path = output_path(Some(&cfg), out)?;
            let (main, extra, suffix) = match command {
                Command::SingleSpin => {
                    let (a, b) = single_spin(&cfg)?;
                    (a, b, "summary")
                }
                Command::BellPair => {
                    let (a, b) = bell_pair_decay(&cfg)?;
                    (a, b, "summary")
                }
                Command::LinkSweep => {
                    let (a, b) = link_sweep(&cfg)?;
                    (a, b, "matrices")
                }
                Command::Fit(_) => unreachable!(),
            };
            let meta = cfg.resolved(name)?;
            let second = sibling(&path, suffix);
            main.write(&path, &meta)?;
            extra.write(&second, &meta)?;
            Ok(vec![path, second])
        }
    }
}
