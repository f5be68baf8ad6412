use crate::error::{CliError, CliResult};
use crate::manifest::manifest_path;
use crate::Context;
use clap::{Args, ValueEnum};
use nv_thermo::fit::*;
use nv_thermo::io::{parse_spectrum_csv, read_points, read_time_series, FitReport};
use nv_thermo::noise::{detect_step, StepDetection};
use nv_thermo::spectrum::Spectrum;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Recipe {
    Zpl,
    Odmr,
    DwfCal,
    LaserCal,
    QuadShift,
    Gamma,
    StrainEnergy,
    Step,
}

impl Recipe {
    fn name(self) -> &'static str {
        match self {
            Recipe::Zpl => "zpl",
            Recipe::Odmr => "odmr",
            Recipe::DwfCal => "dwf-cal",
            Recipe::LaserCal => "laser-cal",
            Recipe::QuadShift => "quad-shift",
            Recipe::Gamma => "gamma",
            Recipe::StrainEnergy => "strain-energy",
            Recipe::Step => "step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Counts,
    Model,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub recipe: Recipe,
    /// Input spectrum (zpl, odmr), time series (step) or two-column point table.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// ZPL fit window, nm.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    /// DWF normalisation band, nm.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub band: Option<Vec<f64>>,
    /// ZPL fit weights.
    #[arg(long, value_enum, default_value = "counts")]
    pub weighting: WeightingArg,
    /// Number of ODMR lines.
    #[arg(long, default_value_t = 2)]
    pub lines: usize,
    /// Laser calibration base temperature, K.
    #[arg(long)]
    pub t0: Option<f64>,
}

fn pair(v: &Option<Vec<f64>>, default: (f64, f64)) -> (f64, f64) {
    v.as_ref().map_or(default, |v| (v[0], v[1]))
}

/// Spectrum from CSV (with header comments or sidecar) or from JSON.
pub fn load_spectrum(path: &Path) -> CliResult<Spectrum> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let s: Spectrum = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        return Ok(Spectrum::new(s.axis, s.counts, s.exposure, s.unit)?);
    }
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    let side = PathBuf::from(side);
    let sidecar = if side.exists() { Some(std::fs::read_to_string(&side)?) } else { None };
    Ok(parse_spectrum_csv(&text, sidecar.as_deref())?)
}

fn zpl(ctx: &Context, a: &FitArgs, s: &Spectrum) -> CliResult<FitReport> {
    let window = pair(&a.window, ctx.cfg.window());
    let band = pair(&a.band, ctx.cfg.band());
    let weighting = match a.weighting {
        WeightingArg::Counts => Weighting::Counts,
        WeightingArg::Model => Weighting::Model,
    };
    let z = fit_zpl_weighted(s, window, weighting)?;
    let c = &z.components;
    let params = [c[0].center, c[0].fwhm, c[0].area, c[1].center, c[1].fwhm, c[1].area, z.slope, z.intercept];
    let names = ["center1_nm", "fwhm1_nm", "area1", "center2_nm", "fwhm2_nm", "area2", "slope", "intercept"];
    let mut r = FitReport::new("zpl", &names, &params, &z.covariance, z.fit.residual_norm)
        .with("zpl_area", z.total_area())
        .with("zpl_area_std", z.total_area_std())
        .with("baseline_x_ref_nm", z.x_ref);
    r.n_iterations = z.fit.n_iterations;
    r.converged = z.converged();
    if z.degenerate {
        r = r.note("two-component fit was rank-deficient; a reduced model was used");
    }
    let d = compute_dwf(s, &z, band)?;
    let ds = compute_dwf_star(s, &z)?;
    r = r.with("dwf", d.value).with("dwf_std", d.uncertainty).with("dwf_star", ds.value).with("dwf_star_std", ds.uncertainty);
    let m = ctx.cfg.dwf_model()?;
    match m.temperature_from_dwf(d.value) {
        Ok(t) => {
            let slope = m.dwf_derivative(t)?.abs();
            r = r.with("temperature_k", t).with("temperature_std_k", d.uncertainty / slope);
        }
        Err(e) => r = r.note(format!("no temperature: {e}")),
    }
    Ok(r)
}

fn odmr(a: &FitArgs, s: &Spectrum) -> CliResult<FitReport> {
    let init = seed_odmr_lines(s, a.lines)?;
    let f = fit_odmr(s, a.lines, &init)?;
    let mut names = vec!["baseline".to_string()];
    for k in 1..=a.lines {
        names.extend([format!("center{k}_mhz"), format!("width{k}_mhz"), format!("contrast{k}")]);
    }
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut r = FitReport::from_fit("odmr", &names, &f.fit).with("d_mhz", f.d).with("d_std_mhz", f.d_std);
    if let (Some(v), Some(s)) = (f.splitting, f.splitting_std) {
        r = r.with("splitting_mhz", v).with("splitting_std_mhz", s);
    }
    r = r.note("line widths fitted independently");
    for w in f.warnings {
        r = r.note(w);
    }
    Ok(r)
}

fn step(a: &FitArgs) -> CliResult<FitReport> {
    let ts = read_time_series(&a.input)?;
    Ok(match detect_step(&ts)? {
        StepDetection::Step { index, size, uncertainty, before, after } => {
            FitReport::new("step", &["before", "after"], &[before, after], &[vec![0.0; 2], vec![0.0; 2]], 0.0)
                .with("index", index as f64)
                .with("time_s", ts.times[index])
                .with("size", size)
                .with("size_std", uncertainty)
        }
        StepDetection::NoStep => FitReport::new("step", &[], &[], &[], 0.0).note("no step found"),
    })
}

fn points_recipe(ctx: &Context, a: &FitArgs) -> CliResult<FitReport> {
    let pts = read_points(&a.input)?.points;
    Ok(match a.recipe {
        Recipe::DwfCal => {
            let c = fit_dwf_calibration(&pts)?;
            FitReport::new("dwf-cal", &["s", "t_debye_k"], &[c.model.s, c.model.t_debye], &c.covariance, c.residual_norm)
        }
        Recipe::LaserCal => {
            let t0 = a.t0.unwrap_or(ctx.cfg.dwf.laser_t0_k);
            let c = fit_laser_calibration(&pts, t0, ctx.cfg.dwf.t_debye_k)?;
            FitReport::from_fit("laser-cal", &["s", "b_k_per_mw"], &c.fit)
                .with("t0_k", t0)
                .with("t_debye_k", c.t_debye)
        }
        Recipe::QuadShift => {
            let f = fit_quadratic_shift(&pts)?;
            FitReport::new("quad-shift", &["a_mhz", "b_mhz_per_k", "c_mhz_per_k2"], &[f.shift.a, f.shift.b, f.shift.c], &f.covariance, f.residual_norm)
        }
        Recipe::Gamma => {
            let f = fit_expansion_shift(&pts, &ctx.cfg.expansion_model()?)?;
            FitReport::new("gamma", &["gamma_mhz_per_gpa"], &[f.gamma], &[vec![f.gamma_std * f.gamma_std]], f.residual_norm)
                .note("pressures from the configured expansion table")
        }
        Recipe::StrainEnergy => {
            let x = &ctx.cfg.excited_state;
            let f = fit_strain_energy(&pts, x.d_perp_mhz, x.a_par_mhz)?;
            FitReport::from_fit("strain-energy", &["strain_energy_mev"], &f.fit)
                .with("d_perp_mhz", x.d_perp_mhz)
                .with("a_par_mhz", x.a_par_mhz)
        }
        _ => unreachable!("spectrum recipes handled elsewhere"),
    })
}

fn write_report(out: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    std::fs::write(out, text).map_err(|e| CliError::Validation(format!("{}: {e}", out.display())))
}

pub fn run(ctx: &Context, a: FitArgs) -> CliResult<()> {
    let out = ctx.require_out()?;
    let mut manifest = ctx.manifest();
    manifest.input(&a.input)?;
    let result = match a.recipe {
        Recipe::Zpl => load_spectrum(&a.input).and_then(|s| zpl(ctx, &a, &s)),
        Recipe::Odmr => load_spectrum(&a.input).and_then(|s| odmr(&a, &s)),
        Recipe::Step => step(&a),
        _ => points_recipe(ctx, &a),
    };
    let report = match result {
        Ok(r) => r,
        Err(CliError::Numerical(msg)) => {
            let diag = serde_json::json!({ "recipe": a.recipe.name(), "converged": false, "error": msg });
            write_report(&out, &diag)?;
            manifest.status = "numerical-failure".into();
            manifest.output(&out)?;
            manifest.write(&manifest_path(&out))?;
            return Err(CliError::Numerical(msg));
        }
        Err(e) => return Err(e),
    };
    write_report(&out, &report)?;
    print!("{}", report.summary());
    if !report.converged {
        manifest.status = "not-converged".into();
    }
    manifest.output(&out)?;
    manifest.write(&manifest_path(&out))?;
    if report.converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} fit did not converge; report written to {}", a.recipe.name(), out.display())))
    }
}
