use crate::error::{CliError, CliResult};
use crate::manifest::manifest_path;
use crate::{Context, Format};
use clap::{Args, ValueEnum};
use nv_thermo::io::{format_spectrum_csv, format_time_series_csv};
use nv_thermo::noise::{
    poisson_sample, stream_rng, synthesize_spectrum, synthesize_step_series, NvSpectrumShape, StepSeriesSpec,
    SyntheticSource,
};
use nv_thermo::spectrum::{linspace, Spectrum};
use nv_thermo::spin::{synthesize_odmr, transition_frequencies, OdmrLineModel, SpinParams};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Odmr,
    Pl,
    Timeseries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Gs,
    Es,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub kind: Kind,
    /// Spin level for ODMR.
    #[arg(long, value_enum, default_value = "gs")]
    pub level: Level,
    /// Zero-field splitting, MHz.
    #[arg(long)]
    pub d: Option<f64>,
    /// Strain splitting, MHz.
    #[arg(long)]
    pub e: Option<f64>,
    /// Axial hyperfine, MHz.
    #[arg(long)]
    pub a_par: Option<f64>,
    /// Transverse hyperfine, MHz.
    #[arg(long)]
    pub a_perp: Option<f64>,
    /// ODMR line width (FWHM), MHz.
    #[arg(long)]
    pub width: Option<f64>,
    /// ODMR dip contrast.
    #[arg(long)]
    pub contrast: Option<f64>,
    /// ODMR off-resonant counts per bin.
    #[arg(long, default_value_t = 1e5)]
    pub baseline: f64,
    /// Frequency or wavelength grid: first sample.
    #[arg(long)]
    pub start: Option<f64>,
    /// Frequency or wavelength grid: last sample.
    #[arg(long)]
    pub stop: Option<f64>,
    /// Number of grid samples or series points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Temperature, K.
    #[arg(long, default_value_t = 294.0)]
    pub temp: f64,
    /// Detected ZPL rate, photons/s.
    #[arg(long, default_value_t = 42000.0)]
    pub c_zpl: f64,
    /// Background-to-ZPL-peak ratio.
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Exposure, s.
    #[arg(long, default_value_t = 1.0)]
    pub exposure: f64,
    /// Time-series cadence, s.
    #[arg(long, default_value_t = 1.0)]
    pub cadence: f64,
    /// Index of the first stepped sample.
    #[arg(long)]
    pub step_at: Option<usize>,
    /// Step size, K.
    #[arg(long, default_value_t = 0.0)]
    pub step_size: f64,
    /// Gaussian noise of the series, K.
    #[arg(long, default_value_t = 4.0)]
    pub noise: f64,
    /// Emit expected values without shot noise.
    #[arg(long)]
    pub noiseless: bool,
}

fn write_output<T: Serialize>(ctx: &Context, out: &Path, csv: String, value: &T) -> CliResult<()> {
    let text = match ctx.format {
        Format::Csv => csv,
        Format::Json => serde_json::to_string_pretty(value).expect("serializable") + "\n",
    };
    std::fs::write(out, text).map_err(|e| CliError::Validation(format!("{}: {e}", out.display())))
}

fn odmr(ctx: &Context, a: &SimulateArgs) -> CliResult<Spectrum> {
    let (base, width, contrast) = match a.level {
        Level::Gs => (ctx.cfg.ground_params()?, ctx.cfg.ground_state.odmr_width_mhz, ctx.cfg.ground_state.odmr_contrast),
        Level::Es => (ctx.cfg.excited_params()?, ctx.cfg.excited_state.odmr_width_mhz, ctx.cfg.excited_state.odmr_contrast),
    };
    let p = SpinParams::new(
        a.d.unwrap_or(base.d),
        a.e.unwrap_or(base.e),
        a.a_par.unwrap_or(base.a_par),
        a.a_perp.unwrap_or(base.a_perp),
    )?;
    let width = a.width.unwrap_or(width);
    let contrast = a.contrast.unwrap_or(contrast);
    let lines = OdmrLineModel::from_transitions(&transition_frequencies(&p)?, width, contrast, a.baseline);
    let reach = lines.centers.iter().map(|c| (c - p.d).abs()).fold(0.0, f64::max) + 10.0 * width;
    let grid = linspace(
        a.start.unwrap_or(p.d - reach),
        a.stop.unwrap_or(p.d + reach),
        a.points.unwrap_or(1001),
    );
    let clean = synthesize_odmr(&lines, &grid)?;
    if a.noiseless {
        return Ok(clean);
    }
    let mut rng = stream_rng(ctx.seed, 0);
    let counts = clean.counts.iter().map(|&m| poisson_sample(m, &mut rng)).collect();
    Ok(Spectrum::new(clean.axis, counts, clean.exposure, clean.unit)?)
}

fn pl(ctx: &Context, a: &SimulateArgs) -> CliResult<Spectrum> {
    let mut shape = NvSpectrumShape::default();
    if let (Some(lo), Some(hi)) = (a.start, a.stop) {
        shape.axis_range = (lo, hi);
    }
    if let Some(n) = a.points {
        shape.n_bins = n;
    }
    let src = SyntheticSource::nv_minus(a.c_zpl, a.temp, a.r, &ctx.cfg.dwf_model()?, &shape, ctx.seed)?;
    Ok(if a.noiseless { src.expected(a.exposure)? } else { synthesize_spectrum(&src, a.exposure)? })
}

pub fn run(ctx: &Context, a: SimulateArgs) -> CliResult<()> {
    let out = ctx.require_out()?;
    let mut manifest = ctx.manifest();
    match a.kind {
        Kind::Odmr | Kind::Pl => {
            let s = if a.kind == Kind::Odmr { odmr(ctx, &a)? } else { pl(ctx, &a)? };
            write_output(ctx, &out, format_spectrum_csv(&s)?, &s)?;
        }
        Kind::Timeseries => {
            let n = a.points.unwrap_or(40);
            let spec = StepSeriesSpec {
                n_points: n,
                cadence: a.cadence,
                baseline: a.temp,
                step_at: a.step_at.unwrap_or(n),
                step_size: a.step_size,
                noise_std: if a.noiseless { 0.0 } else { a.noise },
            };
            let ts = synthesize_step_series(&spec, ctx.seed, 0)?;
            write_output(ctx, &out, format_time_series_csv(&ts)?, &ts)?;
        }
    }
    manifest.output(&out)?;
    manifest.write(&manifest_path(&out))
}
