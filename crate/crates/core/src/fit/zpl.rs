//! Zero-phonon-line fitting and Debye–Waller-factor extraction.

use super::lm::{fit_least_squares, poisson_weights, Data, FitResult, LmConfig, Model};
use super::models::{area_lorentzian, PeaksOnLine};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use serde::{Deserialize, Serialize};

/// Default ZPL fit window, nm.
pub const ZPL_WINDOW_NM: (f64, f64) = (630.0, 645.0);
/// Default normalisation band, nm.
pub const EMISSION_BAND_NM: (f64, f64) = (600.0, 800.0);
/// Offset of the two centre seeds from the window maximum, in axis units.
pub const CENTER_SEED_OFFSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianComponent {
    pub center: f64,
    pub fwhm: f64,
    /// Integrated area, counts·(axis unit).
    pub area: f64,
}

/// Two-Lorentzian ZPL on a linear baseline `intercept + slope·(x − x_ref)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZplFit {
    pub components: [LorentzianComponent; 2],
    pub slope: f64,
    pub intercept: f64,
    pub x_ref: f64,
    /// Order: c₁, w₁, a₁, c₂, w₂, a₂, slope, intercept.
    pub covariance: Vec<Vec<f64>>,
    pub window: (f64, f64),
    /// The two-component fit was rank-deficient and a reduced model was used;
    /// unused components carry zero area.
    pub degenerate: bool,
    pub fit: FitResult,
}

impl ZplFit {
    pub fn converged(&self) -> bool {
        self.fit.converged
    }

    pub fn total_area(&self) -> f64 {
        self.components.iter().map(|c| c.area).sum()
    }

    pub fn total_area_std(&self) -> f64 {
        let v = self.covariance[2][2] + self.covariance[5][5] + 2.0 * self.covariance[2][5];
        v.max(0.0).sqrt()
    }

    /// Fitted ZPL (without baseline) at `x`.
    pub fn zpl_at(&self, x: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.area != 0.0)
            .map(|c| area_lorentzian(x, c.center, c.fwhm, c.area).0)
            .sum()
    }

    pub fn baseline_at(&self, x: f64) -> f64 {
        self.intercept + self.slope * (x - self.x_ref)
    }
}

struct Seed {
    baseline: (f64, f64),
    peak_x: f64,
    fwhm: f64,
    area: f64,
}

fn seed_zpl(s: &Spectrum, x_ref: f64) -> Seed {
    let n = s.len();
    let k = 5.min(n / 2).max(1);
    let mean = |r: std::ops::Range<usize>| {
        let len = r.len() as f64;
        let (sx, sy) = r.fold((0.0, 0.0), |(a, b), i| (a + s.axis[i], b + s.counts[i]));
        (sx / len, sy / len)
    };
    let (x1, y1) = mean(0..k);
    let (x2, y2) = mean(n - k..n);
    let slope = if x2 > x1 { (y2 - y1) / (x2 - x1) } else { 0.0 };
    let intercept = y1 + slope * (x_ref - x1);
    let excess: Vec<f64> = (0..n)
        .map(|i| s.counts[i] - (intercept + slope * (s.axis[i] - x_ref)))
        .collect();
    let mut peak = 0;
    for i in 1..n {
        if excess[i] > excess[peak] {
            peak = i;
        }
    }
    let h = excess[peak];
    let span = s.axis[n - 1] - s.axis[0];
    let fwhm = if h > 0.0 {
        let half = 0.5 * h;
        let mut l = peak;
        while l > 0 && excess[l] >= half {
            l -= 1;
        }
        let xl = if excess[l] < half {
            let (xa, xb, ya, yb) = (s.axis[l], s.axis[l + 1], excess[l], excess[l + 1]);
            xa + (half - ya) / (yb - ya) * (xb - xa)
        } else {
            s.axis[0]
        };
        let mut r = peak;
        while r + 1 < n && excess[r] >= half {
            r += 1;
        }
        let xr = if excess[r] < half {
            let (xa, xb, ya, yb) = (s.axis[r - 1], s.axis[r], excess[r - 1], excess[r]);
            xa + (ya - half) / (ya - yb) * (xb - xa)
        } else {
            s.axis[n - 1]
        };
        (xr - xl).max(f64::MIN_POSITIVE)
    } else {
        span / 10.0
    };
    let widths = s.bin_widths();
    let area: f64 = excess.iter().zip(&widths).map(|(e, w)| e * w).sum();
    Seed {
        baseline: (slope, intercept),
        peak_x: s.axis[peak],
        fwhm,
        area,
    }
}

/// Full width at half maximum of the strongest feature in `window`, measured
/// on the whole spectrum against the lowest level within one window width of it.
fn estimate_fwhm(s: &Spectrum, window: (f64, f64)) -> Option<f64> {
    let (lo, hi) = window;
    let inner = s.indices_in(lo, hi);
    let peak = inner.clone().fold(inner.start, |best, i| if s.counts[i] > s.counts[best] { i } else { best });
    let outer = s.indices_in(lo - (hi - lo), hi + (hi - lo));
    let floor = outer.clone().map(|i| s.counts[i]).fold(f64::INFINITY, f64::min);
    let height = s.counts[peak] - floor;
    if !(height > 0.0) {
        return None;
    }
    let half = floor + 0.5 * height;
    let crossing = |a: usize, b: usize| {
        let (ya, yb) = (s.counts[a], s.counts[b]);
        s.axis[a] + (half - ya) / (yb - ya) * (s.axis[b] - s.axis[a])
    };
    let mut l = peak;
    while l > outer.start && s.counts[l] >= half {
        l -= 1;
    }
    let xl = if s.counts[l] < half { crossing(l, l + 1) } else { s.axis[l] };
    let mut r = peak;
    while r + 1 < outer.end && s.counts[r] >= half {
        r += 1;
    }
    let xr = if s.counts[r] < half { crossing(r - 1, r) } else { s.axis[r] };
    Some(xr - xl)
}

/// Source of the per-bin Poisson variance used as inverse weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// 1/max(counts, 1).
    #[default]
    Counts,
    /// 1/max(model, 1), re-evaluated at the previous solution for a fixed
    /// number of passes after an initial count-weighted fit.
    Model,
}

/// Reweighting passes used by [`Weighting::Model`].
pub const MODEL_WEIGHT_PASSES: usize = 2;

/// Fits two Lorentzians plus a linear baseline inside `window` with Poisson weights.
///
/// A rank-deficient two-component fit (coincident lines) falls back to one
/// component, and then to the bare baseline.
pub fn fit_zpl(s: &Spectrum, window: (f64, f64)) -> Result<ZplFit> {
    fit_zpl_weighted(s, window, Weighting::Counts)
}

pub fn fit_zpl_weighted(s: &Spectrum, window: (f64, f64), weighting: Weighting) -> Result<ZplFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidWindow(format!("window [{lo}, {hi}] is empty")));
    }
    if lo < s.axis[0] || hi > s.axis[s.len() - 1] {
        return Err(Error::InvalidWindow(format!(
            "window [{lo}, {hi}] exceeds the spectrum range [{}, {}]",
            s.axis[0],
            s.axis[s.len() - 1]
        )));
    }
    let sub = s.window(lo, hi)?;
    if sub.len() < 10 {
        return Err(Error::InvalidWindow(format!("window holds only {} samples", sub.len())));
    }
    let x_ref = 0.5 * (lo + hi);
    let seed = seed_zpl(&sub, x_ref);
    if let Some(fwhm) = estimate_fwhm(s, window) {
        if hi - lo < 3.0 * fwhm {
            return Err(Error::InvalidWindow(format!(
                "window width {} is below three times the estimated line width {fwhm}",
                hi - lo
            )));
        }
    }
    let spacing = (sub.axis[sub.len() - 1] - sub.axis[0]) / (sub.len() - 1) as f64;
    let w0 = (0.5 * seed.fwhm).max(2.0 * spacing);
    let weights = poisson_weights(&sub.counts);
    let data = Data::new(&sub.axis, &sub.counts, &weights)?;
    let cfg = LmConfig::default();
    let refine = |model: &PeaksOnLine, mut fit: FitResult| -> Result<FitResult> {
        if weighting == Weighting::Model {
            for _ in 0..MODEL_WEIGHT_PASSES {
                let w: Vec<f64> = sub.axis.iter().map(|&x| 1.0 / model.eval(x, &fit.params).max(1.0)).collect();
                let d = Data::new(&sub.axis, &sub.counts, &w)?;
                fit = fit_least_squares(model, &d, &fit.params, &cfg)?;
            }
        }
        Ok(fit)
    };

    let two = PeaksOnLine { n_peaks: 2, x_ref };
    let init2 = [
        seed.peak_x - CENTER_SEED_OFFSET,
        w0,
        0.5 * seed.area,
        seed.peak_x + CENTER_SEED_OFFSET,
        w0,
        0.5 * seed.area,
        seed.baseline.0,
        seed.baseline.1,
    ];
    match fit_least_squares(&two, &data, &init2, &cfg) {
        Ok(fit) => return Ok(assemble(refine(&two, fit)?, 2, x_ref, window)),
        Err(Error::RankDeficient(msg)) => log::debug!("two-component ZPL fit degenerate: {msg}"),
        Err(e) => return Err(e),
    }
    let one = PeaksOnLine { n_peaks: 1, x_ref };
    let init1 = [seed.peak_x, seed.fwhm.max(2.0 * spacing), seed.area, seed.baseline.0, seed.baseline.1];
    match fit_least_squares(&one, &data, &init1, &cfg) {
        Ok(fit) => return Ok(assemble(refine(&one, fit)?, 1, x_ref, window)),
        Err(Error::RankDeficient(msg)) => log::debug!("one-component ZPL fit degenerate: {msg}"),
        Err(e) => return Err(e),
    }
    let none = PeaksOnLine { n_peaks: 0, x_ref };
    let fit = refine(&none, fit_least_squares(&none, &data, &[seed.baseline.0, seed.baseline.1], &cfg)?)?;
    let mut out = assemble(fit, 0, x_ref, window);
    out.components[0].center = seed.peak_x;
    out.components[1].center = seed.peak_x;
    Ok(out)
}

fn assemble(fit: FitResult, n_peaks: usize, x_ref: f64, window: (f64, f64)) -> ZplFit {
    let p = &fit.params;
    let m = 3 * n_peaks;
    // map fitted parameter indices onto the 8-slot layout
    let mut slots: Vec<Option<usize>> = vec![None; 8];
    for k in 0..n_peaks {
        for j in 0..3 {
            slots[3 * k + j] = Some(3 * k + j);
        }
    }
    slots[6] = Some(m);
    slots[7] = Some(m + 1);
    if n_peaks == 2 && p[3] < p[0] {
        slots.swap(0, 3);
        slots.swap(1, 4);
        slots.swap(2, 5);
    }
    let value = |slot: usize| slots[slot].map_or(0.0, |i| p[i]);
    let covariance = (0..8)
        .map(|a| {
            (0..8)
                .map(|b| match (slots[a], slots[b]) {
                    (Some(i), Some(j)) => fit.covariance[i][j],
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let comp = |k: usize| LorentzianComponent {
        center: value(3 * k),
        fwhm: if slots[3 * k + 1].is_some() { value(3 * k + 1) } else { 0.0 },
        area: value(3 * k + 2),
    };
    let mut components = [comp(0), comp(1)];
    if n_peaks == 1 {
        components[1].center = components[0].center;
        components[1].fwhm = components[0].fwhm;
    }
    ZplFit {
        components,
        slope: value(6),
        intercept: value(7),
        x_ref,
        covariance,
        window,
        degenerate: n_peaks < 2,
        fit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DwfKind {
    /// Normalised to the NV⁻ emission band.
    Dwf,
    /// Normalised to the whole recorded spectrum, background included.
    DwfStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwfMeasurement {
    pub value: f64,
    pub uncertainty: f64,
    pub kind: DwfKind,
    /// ZPL photons.
    pub n_zpl: f64,
    /// Photons in the normalisation band.
    pub n_band: f64,
}

fn dwf_over(s: &Spectrum, zpl: &ZplFit, lo: f64, hi: f64, kind: DwfKind) -> Result<DwfMeasurement> {
    let idx = s.indices_in(lo, hi);
    if idx.is_empty() {
        return Err(Error::InvalidInput(format!("band [{lo}, {hi}] holds no samples")));
    }
    let band_counts: f64 = s.counts[idx.clone()].iter().sum();
    if band_counts <= 0.0 {
        return Err(Error::InvalidInput("no counts in the normalisation band".into()));
    }
    let widths = s.bin_widths();
    let area = zpl.total_area();
    // band integral with the fitted ZPL lines removed, so the sideband under
    // the ZPL stays in the denominator and the lines enter through their analytic area
    let rest: f64 = idx.clone().map(|i| (s.counts[i] - zpl.zpl_at(s.axis[i])) * widths[i]).sum();
    let denom = rest + area;
    if !(denom > 0.0) {
        return Err(Error::InvalidInput("normalisation band integral is not positive".into()));
    }
    let mean_width = idx.clone().map(|i| widths[i]).sum::<f64>() / idx.len() as f64;
    let n_zpl = area / mean_width;
    let n_band = denom / mean_width;
    let value = area / denom;
    let uncertainty = (n_zpl.max(1.0) / (n_band * n_band) + n_zpl * n_zpl / n_band.powi(3)).sqrt();
    Ok(DwfMeasurement {
        value,
        uncertainty,
        kind,
        n_zpl,
        n_band,
    })
}

/// ZPL area over the emission band `band`.
pub fn compute_dwf(s: &Spectrum, zpl: &ZplFit, band: (f64, f64)) -> Result<DwfMeasurement> {
    let (lo, hi) = band;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("band [{lo}, {hi}] is empty")));
    }
    if lo > zpl.window.0 || hi < zpl.window.1 {
        return Err(Error::InvalidInput(format!(
            "band [{lo}, {hi}] does not contain the ZPL window [{}, {}]",
            zpl.window.0, zpl.window.1
        )));
    }
    dwf_over(s, zpl, lo, hi, DwfKind::Dwf)
}

/// ZPL area over the whole recorded spectrum.
pub fn compute_dwf_star(s: &Spectrum, zpl: &ZplFit) -> Result<DwfMeasurement> {
    dwf_over(s, zpl, s.axis[0], s.axis[s.len() - 1], DwfKind::DwfStar)
}
