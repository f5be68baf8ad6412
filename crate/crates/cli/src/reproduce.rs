use crate::error::{CliError, CliResult};
use crate::Context;
use clap::{Args, ValueEnum};
use nv_thermo::constants::*;
use nv_thermo::fit::*;
use nv_thermo::io::{format_points_csv, read_points, read_time_series, FitReport};
use nv_thermo::noise::{
    detect_step, detrend_cubic, poisson_normality_check, stream_rng, synthesize_spectrum_stream, NvSpectrumShape,
    StepDetection, StepSeriesSpec, SyntheticSource, TimeSeries, MIN_EXPECTED_COUNTS,
};
use nv_thermo::noise::synthesize_step_series;
use nv_thermo::spectrum::linspace;
use nv_thermo::thermo::{epsilon_es_of_t, shift_expansion, thermal_pressure, DwfModel, QuadraticShift};
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    #[value(name = "2b")]
    F2b,
    #[value(name = "2c")]
    F2c,
    #[value(name = "3a")]
    F3a,
    #[value(name = "3b")]
    F3b,
    #[value(name = "4b")]
    F4b,
    #[value(name = "4c")]
    F4c,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::F2b => "2b",
            Figure::F2c => "2c",
            Figure::F3a => "3a",
            Figure::F3b => "3b",
            Figure::F4b => "4b",
            Figure::F4c => "4c",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Figure::F2b => 1,
            Figure::F2c => 2,
            Figure::F3a => 3,
            Figure::F3b => 4,
            Figure::F4b => 5,
            Figure::F4c => 6,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub figure: Figure,
}

/// One fitted quantity against its reference value.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub std: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub within: bool,
}

fn check(name: &str, value: f64, std: f64, reference: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        value,
        std,
        reference,
        tolerance,
        within: (value - reference).abs() <= tolerance,
    }
}

#[derive(Debug, Serialize)]
pub struct Analysis {
    pub report: FitReport,
    pub checks: Vec<Check>,
    #[serde(skip)]
    points: Vec<(f64, f64)>,
    #[serde(skip)]
    points_columns: [&'static str; 2],
    #[serde(skip)]
    curve: Vec<(f64, f64)>,
    #[serde(skip)]
    curve_columns: [&'static str; 2],
}

#[derive(Debug, Serialize)]
pub struct Digitized {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Analysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct FigureOutput {
    pub figure: String,
    pub seed: u64,
    pub synthetic: Analysis,
    pub digitized: Digitized,
}

/// Raw data of one figure: (x, y) points or a time series.
enum Input {
    Points(Vec<(f64, f64)>),
    Series(TimeSeries),
}

fn span(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo, hi, n)
}

fn gaussian(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("finite positive std")
}

fn synthetic(ctx: &Context, fig: Figure) -> CliResult<Input> {
    let mut rng = stream_rng(ctx.seed, fig.stream());
    let cfg = &ctx.cfg;
    Ok(match fig {
        Figure::F2b => {
            let m = DwfModel::new(DWF_S_OVEN, DWF_DEBYE_OVEN_K)?;
            let n = gaussian(0.01);
            let pts = span(80.0, 600.0, 12)
                .into_iter()
                .map(|t| Ok((t, m.dwf(t)? * (1.0 + n.sample(&mut rng)))))
                .collect::<nv_thermo::Result<Vec<_>>>()?;
            Input::Points(pts)
        }
        Figure::F2c => {
            let n = gaussian(0.01);
            let m = DwfModel::new(DWF_S_LASER, cfg.dwf.t_debye_k)?;
            let pts = span(0.0, 150.0, 10)
                .into_iter()
                .map(|p| Ok((p, m.dwf(cfg.dwf.laser_t0_k + LASER_HEATING_K_PER_MW * p)? * (1.0 + n.sample(&mut rng)))))
                .collect::<nv_thermo::Result<Vec<_>>>()?;
            Input::Points(pts)
        }
        Figure::F3a => {
            let q = QuadraticShift::reference();
            let n = gaussian(0.3);
            Input::Points(span(100.0, 600.0, 11).into_iter().map(|t| (t, q.eval(t) + n.sample(&mut rng))).collect())
        }
        Figure::F3b => {
            let spec = StepSeriesSpec {
                n_points: 40,
                cadence: 1.0,
                baseline: ROOM_TEMPERATURE_K,
                step_at: 20,
                step_size: 17.0,
                noise_std: 4.0,
            };
            Input::Series(synthesize_step_series(&spec, ctx.seed, fig.stream())?)
        }
        Figure::F4b => {
            let em = cfg.expansion_model()?;
            let n = gaussian(1.0);
            let pts = span(300.0, 600.0, 7)
                .into_iter()
                .map(|t| Ok((t, shift_expansion(t, GAMMA_ES_MHZ_PER_GPA, &em)? + n.sample(&mut rng))))
                .collect::<nv_thermo::Result<Vec<_>>>()?;
            Input::Points(pts)
        }
        Figure::F4c => {
            let osm = nv_thermo::thermo::OrbitalStrainModel::new(cfg.excited_state.d_perp_mhz, STRAIN_ENERGY_MEV)?;
            let n = gaussian(2.0);
            let pts = span(294.0, 600.0, 8)
                .into_iter()
                .map(|t| Ok((t, epsilon_es_of_t(t, &osm, cfg.excited_state.a_par_mhz)? + n.sample(&mut rng))))
                .collect::<nv_thermo::Result<Vec<_>>>()?;
            Input::Points(pts)
        }
    })
}

fn x_range(points: &[(f64, f64)]) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
}

fn curve_over(points: &[(f64, f64)], f: impl Fn(f64) -> nv_thermo::Result<f64>) -> nv_thermo::Result<Vec<(f64, f64)>> {
    let (lo, hi) = x_range(points);
    linspace(lo, hi, 201).into_iter().map(|x| Ok((x, f(x)?))).collect()
}

fn analyse(ctx: &Context, fig: Figure, input: Input) -> CliResult<Analysis> {
    let cfg = &ctx.cfg;
    let pts = match &input {
        Input::Points(p) => p.clone(),
        Input::Series(ts) => ts.times.iter().cloned().zip(ts.values.iter().cloned()).collect(),
    };
    let a = match fig {
        Figure::F2b => {
            let c = fit_dwf_calibration(&pts)?;
            let (s, td) = (c.model.s, c.model.t_debye);
            let report = FitReport::new("dwf-cal", &["s", "t_debye_k"], &[s, td], &c.covariance, c.residual_norm);
            let lin: Vec<(f64, f64)> = pts.iter().map(|&(t, d)| (t * t, d.ln())).collect();
            let curve = curve_over(&lin, |t2| Ok(-s * (1.0 + 2.0 / 3.0 * std::f64::consts::PI.powi(2) * t2 / (td * td))))?;
            Analysis {
                report,
                checks: vec![check("s", s, c.s_std, 4.57, 0.07), check("t_debye_k", td, c.t_debye_std, 1614.0, 23.0)],
                points: lin,
                points_columns: ["t_squared_k2", "ln_dwf"],
                curve,
                curve_columns: ["t_squared_k2", "ln_dwf"],
            }
        }
        Figure::F2c => {
            let c = fit_laser_calibration(&pts, cfg.dwf.laser_t0_k, cfg.dwf.t_debye_k)?;
            let m = DwfModel::new(c.s, c.t_debye)?;
            let curve = curve_over(&pts, |p| m.dwf(c.t0 + c.b * p))?;
            Analysis {
                report: FitReport::from_fit("laser-cal", &["s", "b_k_per_mw"], &c.fit).with("t0_k", c.t0).with("t_debye_k", c.t_debye),
                checks: vec![check("s", c.s, c.s_std, 4.79, 0.06), check("b_k_per_mw", c.b, c.b_std, 0.51, 0.03)],
                points: pts,
                points_columns: ["laser_power_mw", "dwf"],
                curve,
                curve_columns: ["laser_power_mw", "dwf"],
            }
        }
        Figure::F3a => {
            let f = fit_quadratic_shift(&pts)?;
            let q = f.shift;
            let curve = curve_over(&pts, |t| Ok(q.eval(t)))?;
            Analysis {
                report: FitReport::new("quad-shift", &["a_mhz", "b_mhz_per_k", "c_mhz_per_k2"], &[q.a, q.b, q.c], &f.covariance, f.residual_norm),
                checks: vec![
                    check("a_mhz", q.a, f.std[0], 2870.0, 3.0),
                    check("b_mhz_per_k", q.b, f.std[1], 0.06, 0.01),
                    check("c_mhz_per_k2", q.c, f.std[2], -2.3e-4, 0.2e-4),
                ],
                points: pts,
                points_columns: ["temperature_k", "d_mhz"],
                curve,
                curve_columns: ["temperature_k", "d_mhz"],
            }
        }
        Figure::F3b => {
            let ts = match input {
                Input::Series(ts) => ts,
                Input::Points(_) => unreachable!("time-series figure"),
            };
            let mut report = FitReport::new("step", &[], &[], &[], 0.0);
            let mut checks = Vec::new();
            let mut curve = Vec::new();
            match detect_step(&ts)? {
                StepDetection::Step { index, size, uncertainty, before, after } => {
                    report = FitReport::new("step", &["before", "after"], &[before, after], &[vec![0.0; 2], vec![0.0; 2]], 0.0)
                        .with("index", index as f64)
                        .with("time_s", ts.times[index])
                        .with("size", size)
                        .with("size_std", uncertainty);
                    checks.push(check("step_size", size, uncertainty, 17.0, 2.0));
                    curve = ts.times.iter().enumerate().map(|(i, &t)| (t, if i < index { before } else { after })).collect();
                }
                StepDetection::NoStep => {
                    report = report.note("no step found");
                    checks.push(check("step_size", 0.0, 0.0, 17.0, 2.0));
                }
            }
            let trend = detrend_cubic(&ts)?;
            for (k, c) in trend.coeffs.iter().enumerate() {
                report = report.with(&format!("cubic_c{k}"), *c);
            }
            Analysis {
                report,
                checks,
                points: pts,
                points_columns: ["time_s", "temperature_k"],
                curve,
                curve_columns: ["time_s", "plateau_k"],
            }
        }
        Figure::F4b => {
            let em = cfg.expansion_model()?;
            let f = fit_expansion_shift(&pts, &em)?;
            let curve = curve_over(&pts, |t| Ok(f.gamma * thermal_pressure(t, &em)?))?;
            Analysis {
                report: FitReport::new("gamma", &["gamma_mhz_per_gpa"], &[f.gamma], &[vec![f.gamma_std.powi(2)]], f.residual_norm),
                checks: vec![check("gamma_mhz_per_gpa", f.gamma, f.gamma_std, 11.0, 1.0)],
                points: pts,
                points_columns: ["temperature_k", "delta_d_mhz"],
                curve,
                curve_columns: ["temperature_k", "delta_d_mhz"],
            }
        }
        Figure::F4c => {
            let x = &cfg.excited_state;
            let f = fit_strain_energy(&pts, x.d_perp_mhz, x.a_par_mhz)?;
            let osm = nv_thermo::thermo::OrbitalStrainModel::new(x.d_perp_mhz, f.strain_energy)?;
            let curve = curve_over(&pts, |t| epsilon_es_of_t(t, &osm, x.a_par_mhz))?;
            Analysis {
                report: FitReport::from_fit("strain-energy", &["strain_energy_mev"], &f.fit),
                checks: vec![check("strain_energy_mev", f.strain_energy, f.strain_energy_std, 4.7, 0.3)],
                points: pts,
                points_columns: ["temperature_k", "epsilon_mhz"],
                curve,
                curve_columns: ["temperature_k", "epsilon_mhz"],
            }
        }
    };
    Ok(a)
}

fn write(path: &Path, text: &str, written: &mut Vec<std::path::PathBuf>) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    written.push(path.to_path_buf());
    Ok(())
}

fn write_analysis(dir: &Path, prefix: &str, a: &Analysis, written: &mut Vec<std::path::PathBuf>) -> CliResult<()> {
    write(&dir.join(format!("{prefix}_points.csv")), &format_points_csv(a.points_columns, &a.points, &[])?, written)?;
    if !a.curve.is_empty() {
        write(&dir.join(format!("{prefix}_curve.csv")), &format_points_csv(a.curve_columns, &a.curve, &[])?, written)?;
    }
    Ok(())
}

const HIST_BINS: usize = 40;
const HIST_RANGE: f64 = 5.0;

/// Normalised shot-noise residuals of seeded PL spectra, histogrammed.
fn residual_histogram(ctx: &Context) -> CliResult<(Vec<(f64, f64)>, f64, usize)> {
    let src = SyntheticSource::nv_minus(42000.0, ROOM_TEMPERATURE_K, 0.0, &ctx.cfg.dwf_model()?, &NvSpectrumShape::default(), ctx.seed)?;
    let reference = src.expected(1.0)?;
    let spectra = (0..4)
        .map(|k| synthesize_spectrum_stream(&src, 1.0, 100 + k))
        .collect::<nv_thermo::Result<Vec<_>>>()?;
    let std = poisson_normality_check(&spectra, &reference)?;
    let width = 2.0 * HIST_RANGE / HIST_BINS as f64;
    let mut counts = vec![0.0; HIST_BINS];
    let mut n = 0;
    for s in &spectra {
        for (&c, &m) in s.counts.iter().zip(&reference.counts) {
            if m > MIN_EXPECTED_COUNTS {
                n += 1;
                let z = (c - m) / m.sqrt();
                let k = ((z + HIST_RANGE) / width).floor();
                if k >= 0.0 && (k as usize) < HIST_BINS {
                    counts[k as usize] += 1.0;
                }
            }
        }
    }
    let hist = counts.iter().enumerate().map(|(k, &c)| (-HIST_RANGE + (k as f64 + 0.5) * width, c)).collect();
    Ok((hist, std, n))
}

fn load_digitized(fig: Figure, path: &Path) -> CliResult<Input> {
    Ok(match fig {
        Figure::F3b => Input::Series(read_time_series(path)?),
        _ => Input::Points(read_points(path)?.points),
    })
}

pub fn run(ctx: &Context, a: ReproduceArgs) -> CliResult<()> {
    let dir = ctx.require_out()?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
    let fig = a.figure;
    let name = fig.name();
    let mut manifest = ctx.manifest();
    manifest.figure = Some(name.to_string());
    let mut written = Vec::new();

    let mut synthetic = analyse(ctx, fig, synthetic(ctx, fig)?)?;
    write_analysis(&dir, name, &synthetic, &mut written)?;
    if fig == Figure::F3a {
        let (hist, std, n) = residual_histogram(ctx)?;
        let text = format_points_csv(["normalized_residual", "count"], &hist, &[])?;
        write(&dir.join("3a_residual_hist.csv"), &text, &mut written)?;
        synthetic.report = synthetic.report.with("normalized_residual_std", std).with("normalized_residual_bins", n as f64);
    }

    let source = ctx.cfg.paths.digitized_dir.join(format!("{name}.csv"));
    let mut failure = None;
    let digitized = if source.exists() {
        manifest.input(&source)?;
        let input = load_digitized(fig, &source)?;
        match analyse(ctx, fig, input) {
            Ok(d) => {
                write_analysis(&dir, &format!("{name}_digitized"), &d, &mut written)?;
                Digitized { status: "ok".into(), source: Some(source.display().to_string()), analysis: Some(d), error: None }
            }
            Err(CliError::Numerical(msg)) => {
                failure = Some(msg.clone());
                Digitized { status: "failed".into(), source: Some(source.display().to_string()), analysis: None, error: Some(msg) }
            }
            Err(e) => return Err(e),
        }
    } else {
        eprintln!("nvthermo: no digitized data at {}; reference comparison skipped", source.display());
        manifest.status = "digitized-skipped".into();
        Digitized { status: "skipped".into(), source: None, analysis: None, error: None }
    };

    let out = FigureOutput { figure: name.into(), seed: ctx.seed, synthetic, digitized };
    let json = serde_json::to_string_pretty(&out).expect("figure output serializes") + "\n";
    write(&dir.join("fit.json"), &json, &mut written)?;
    for c in &out.synthetic.checks {
        println!("synthetic {:<20} {:>12.6} ± {:<10.3e} reference {} ± {} {}", c.name, c.value, c.std, c.reference, c.tolerance, if c.within { "ok" } else { "outside" });
    }
    match &out.digitized.analysis {
        Some(d) => {
            for c in &d.checks {
                println!("digitized {:<20} {:>12.6} ± {:<10.3e} reference {} ± {} {}", c.name, c.value, c.std, c.reference, c.tolerance, if c.within { "ok" } else { "outside" });
            }
        }
        None => println!("digitized: {}", out.digitized.status),
    }
    for p in &written {
        manifest.output(p)?;
    }
    if failure.is_some() {
        manifest.status = "numerical-failure".into();
    }
    manifest.write(&dir.join("manifest.json"))?;
    match failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}
