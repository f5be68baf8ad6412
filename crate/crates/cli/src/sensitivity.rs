use crate::error::{CliError, CliResult};
use crate::manifest::manifest_path;
use crate::{Context, Format};
use clap::Args;
use nv_thermo::thermo::{noise_floor_with_phi, SensitivityInput};
use serde::Serialize;

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Numbers of centres.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 500.0])]
    pub n: Vec<f64>,
    /// Background ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0])]
    pub r: Vec<f64>,
    /// ZPL photon rates, photons/s; replaces the grid over `--n` when given.
    #[arg(long, value_delimiter = ',')]
    pub c_zpl: Vec<f64>,
    /// Φ, K; defaults to the configured value.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Evaluate Φ from the DWF model at this temperature, K.
    #[arg(long, conflicts_with = "phi")]
    pub temp: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Row {
    pub n_centers: f64,
    pub background_ratio: f64,
    pub c_zpl_hz: f64,
    pub phi_k: f64,
    pub eta_k_per_rt_hz: f64,
}

pub fn table(ctx: &Context, a: &SensitivityArgs) -> CliResult<Vec<Row>> {
    let base = ctx.cfg.sensitivity_input();
    let phi = match (a.phi, a.temp) {
        (Some(p), _) => p,
        (None, Some(t)) => ctx.cfg.dwf_model()?.phi(t)?,
        (None, None) => ctx.cfg.sensitivity.phi_k,
    };
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(CliError::Validation(format!("Φ must be positive, got {phi}")));
    }
    let per_centre = base.c_zpl();
    let ns: Vec<f64> = if a.c_zpl.is_empty() { a.n.clone() } else { a.c_zpl.iter().map(|c| c / per_centre).collect() };
    let mut rows = Vec::new();
    for &n in &ns {
        for &r in &a.r {
            let inp = SensitivityInput { n_centers: n, background_ratio: r, ..base };
            rows.push(Row {
                n_centers: n,
                background_ratio: r,
                c_zpl_hz: inp.c_zpl(),
                phi_k: phi,
                eta_k_per_rt_hz: noise_floor_with_phi(&inp, phi)?,
            });
        }
    }
    Ok(rows)
}

fn render(rows: &[Row], format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rows).expect("rows serialize") + "\n",
        Format::Csv => {
            let mut s = String::from("n_centers,background_ratio,c_zpl_hz,phi_k,eta_k_per_rt_hz\n");
            for r in rows {
                s += &format!("{},{},{},{},{}\n", r.n_centers, r.background_ratio, r.c_zpl_hz, r.phi_k, r.eta_k_per_rt_hz);
            }
            s
        }
    }
}

pub fn run(ctx: &Context, a: SensitivityArgs) -> CliResult<()> {
    let text = render(&table(ctx, &a)?, ctx.format);
    match &ctx.out {
        None => print!("{text}"),
        Some(out) => {
            std::fs::write(out, &text).map_err(|e| CliError::Validation(format!("{}: {e}", out.display())))?;
            let mut m = ctx.manifest();
            m.output(out)?;
            m.write(&manifest_path(out))?;
        }
    }
    Ok(())
}
