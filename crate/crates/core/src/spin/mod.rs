//! Zero-field spin Hamiltonian of the NV- centre coupled to its 14N nucleus.
//!
//! The electron and nuclear spins are both spin-1. States are ordered in the
//! product basis |m_s⟩⊗|m_I⟩ with m = +1, 0, −1 for each factor, so the basis
//! index is `3 * ms_index + mi_index`.

pub mod jacobi;
pub mod matrix;

use crate::error::{ensure_finite, Error, Result};
use crate::spectrum::{check_strictly_increasing, AxisUnit, Spectrum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use jacobi::{eigh, Eigen};
pub use matrix::CMatrix;

/// Projection quantum numbers in basis order.
pub const M_VALUES: [i8; 3] = [1, 0, -1];

/// Spin-Hamiltonian coefficients for one electronic level, all in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    /// Zero-field splitting.
    pub d: f64,
    /// Strain splitting parameter.
    pub e: f64,
    /// Axial hyperfine.
    pub a_par: f64,
    /// Transverse hyperfine.
    pub a_perp: f64,
}

impl SpinParams {
    pub fn new(d: f64, e: f64, a_par: f64, a_perp: f64) -> Result<Self> {
        let p = SpinParams { d, e, a_par, a_perp };
        p.validate()?;
        Ok(p)
    }

    /// Room-temperature ground-state (³A₂) values with the given strain splitting.
    pub fn ground_state(e: f64) -> Self {
        use crate::constants::*;
        SpinParams {
            d: D_GS_MHZ,
            e,
            a_par: A_PAR_GS_MHZ,
            a_perp: A_PERP_GS_MHZ,
        }
    }

    /// Room-temperature excited-state (³E) values with isotropic hyperfine.
    pub fn excited_state(e: f64) -> Self {
        use crate::constants::*;
        SpinParams {
            d: D_ES_MHZ,
            e,
            a_par: A_ES_MHZ,
            a_perp: A_ES_MHZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("d", self.d)?;
        ensure_finite("e", self.e)?;
        ensure_finite("a_par", self.a_par)?;
        ensure_finite("a_perp", self.a_perp)
    }
}

/// Spin-1 operators S_x, S_y, S_z in the |+1⟩, |0⟩, |−1⟩ basis.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

pub fn build_spin_operators() -> SpinOperators {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    let re = |v: f64| Complex64::new(v, 0.0);
    let im = |v: f64| Complex64::new(0.0, v);
    SpinOperators {
        x: CMatrix::from_rows(&[
            vec![zero, re(r), zero],
            vec![re(r), zero, re(r)],
            vec![zero, re(r), zero],
        ]),
        y: CMatrix::from_rows(&[
            vec![zero, im(-r), zero],
            vec![im(r), zero, im(-r)],
            vec![zero, im(r), zero],
        ]),
        z: CMatrix::from_real_diagonal(&[1.0, 0.0, -1.0]),
    }
}

/// 9×9 Hermitian Hamiltonian in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix(pub CMatrix);

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues(&self.0)
    }
}

/// H = D(S_z² − 2/3) + E(S_y² − S_x²) + A∥ S_z I_z + A⊥ (S_x I_x + S_y I_y).
pub fn build_hamiltonian(p: &SpinParams) -> Result<HamiltonianMatrix> {
    p.validate()?;
    let s = build_spin_operators();
    let id = CMatrix::identity(3);
    let sz2 = &s.z * &s.z;
    let sx2 = &s.x * &s.x;
    let sy2 = &s.y * &s.y;

    let zfs = (&sz2 - &id.scale(2.0 / 3.0)).scale(p.d);
    let strain = (&sy2 - &sx2).scale(p.e);
    let electron = (&zfs + &strain).kron(&id);
    let axial = s.z.kron(&s.z).scale(p.a_par);
    let transverse = (&s.x.kron(&s.x) + &s.y.kron(&s.y)).scale(p.a_perp);

    let mut h = &(&electron + &axial) + &transverse;
    // Products of the exact operators leave round-off in the Hermitian pairs;
    // copy the upper triangle so H equals its adjoint exactly.
    for i in 0..9 {
        h[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
        for j in (i + 1)..9 {
            h[(j, i)] = h[(i, j)].conj();
        }
    }
    Ok(HamiltonianMatrix(h))
}

/// Sorted real eigenvalues of a Hermitian matrix.
pub fn eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    Ok(eigh(h)?.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

/// One m_s = 0 ↔ m_s = ±1 resonance inside a nuclear manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// MHz.
    pub frequency: f64,
    pub m_i: i8,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    pub lines: Vec<Transition>,
}

impl TransitionSet {
    pub fn frequency(&self, m_i: i8, branch: Branch) -> Option<f64> {
        self.lines
            .iter()
            .find(|t| t.m_i == m_i && t.branch == branch)
            .map(|t| t.frequency)
    }

    /// Upper minus lower frequency within one nuclear manifold.
    pub fn splitting(&self, m_i: i8) -> Option<f64> {
        Some(self.frequency(m_i, Branch::Upper)? - self.frequency(m_i, Branch::Lower)?)
    }

    /// Hyperfine-weighted half-splitting: one third from m_I = 0, two thirds from m_I = ±1.
    pub fn weighted_half_splitting(&self) -> Option<f64> {
        let s0 = self.splitting(0)?;
        let s_pm = 0.5 * (self.splitting(1)? + self.splitting(-1)?);
        Some(s0 / 6.0 + s_pm / 3.0)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.lines.iter().map(|t| t.frequency).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Labeled {
    energy: f64,
    /// True when the |m_s| = 1 weight dominates.
    bright: bool,
    /// |m_I|.
    abs_m_i: u8,
    /// Signed m_I when one projection dominates.
    m_i: Option<i8>,
}

/// Smallest summed manifold weight accepted as a label.
pub const LABEL_MIN_WEIGHT: f64 = 2.0 / 3.0;

/// Resonance frequencies of the m_s = 0 ↔ ±1 transitions with ΔmI = 0.
///
/// Every eigenvector is assigned to an electron manifold (m_s = 0 or |m_s| = 1)
/// and a nuclear manifold (|m_I| = 0 or 1) by summed weight; both must reach
/// [`LABEL_MIN_WEIGHT`]. The Hamiltonian is symmetric under (m_s, m_I) → (−m_s, −m_I), so with
/// A⊥ ≠ 0 the m_I = ±1 levels come in exact degenerate pairs that the
/// transverse term mixes freely. Such pairs are split between m_I = +1 and
/// −1 in energy order; their frequencies coincide, so the choice is immaterial.
pub fn transition_frequencies(p: &SpinParams) -> Result<TransitionSet> {
    if !(p.d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "zero-field splitting must be positive for transition labeling, got {}",
            p.d
        )));
    }
    let h = build_hamiltonian(p)?;
    let eig = eigh(h.matrix())?;
    let ambiguous = |overlap: f64| Error::AmbiguousLabeling {
        eigenvalues: eig.values.clone(),
        max_overlap: overlap,
    };

    let mut labeled = Vec::with_capacity(9);
    for (col, &energy) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(col);
        let weight = |ms: usize, mi: usize| v[3 * ms + mi].norm_sqr();
        let w_ms0: f64 = (0..3).map(|mi| weight(1, mi)).sum();
        let w_mi: Vec<f64> = (0..3).map(|mi| (0..3).map(|ms| weight(ms, mi)).sum()).collect();
        let w_outer = w_mi[0] + w_mi[2];
        let electron_overlap = w_ms0.max(1.0 - w_ms0);
        let nuclear_overlap = w_mi[1].max(w_outer);
        let overlap = electron_overlap.min(nuclear_overlap);
        if overlap < LABEL_MIN_WEIGHT {
            return Err(ambiguous(overlap));
        }
        let abs_m_i = if w_outer > 0.5 { 1 } else { 0 };
        let m_i = if abs_m_i == 0 {
            Some(0)
        } else if w_mi[0] > 0.5 {
            Some(M_VALUES[0])
        } else if w_mi[2] > 0.5 {
            Some(M_VALUES[2])
        } else {
            None
        };
        labeled.push(Labeled {
            energy,
            bright: w_ms0 < 0.5,
            abs_m_i,
            m_i,
        });
    }

    let select = |abs: u8, bright: bool| -> Vec<Labeled> {
        let mut v: Vec<Labeled> = labeled.iter().filter(|l| l.abs_m_i == abs && l.bright == bright).cloned().collect();
        v.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        v
    };

    let mut lines = Vec::with_capacity(6);
    let mut push = |m_i: i8, dark: &Labeled, lo: &Labeled, hi: &Labeled| {
        lines.push(Transition {
            frequency: lo.energy - dark.energy,
            m_i,
            branch: Branch::Lower,
        });
        lines.push(Transition {
            frequency: hi.energy - dark.energy,
            m_i,
            branch: Branch::Upper,
        });
    };

    let (dark0, bright0) = (select(0, false), select(0, true));
    if dark0.len() != 1 || bright0.len() != 2 {
        return Err(ambiguous(0.5));
    }
    let (dark1, bright1) = (select(1, false), select(1, true));
    if dark1.len() != 2 || bright1.len() != 4 {
        return Err(ambiguous(0.5));
    }
    let clean = dark1.iter().chain(&bright1).all(|l| l.m_i.is_some());
    for (k, m_i) in [-1i8, 1].into_iter().enumerate() {
        if clean {
            let pick = |set: &[Labeled]| -> Vec<Labeled> { set.iter().filter(|l| l.m_i == Some(m_i)).cloned().collect() };
            let (d, b) = (pick(&dark1), pick(&bright1));
            if d.len() != 1 || b.len() != 2 {
                return Err(ambiguous(0.5));
            }
            push(m_i, &d[0], &b[0], &b[1]);
        } else {
            // lower pair holds bright1[0..2], upper pair bright1[2..4]
            push(m_i, &dark1[k], &bright1[k], &bright1[2 + k]);
        }
        if m_i == -1 {
            push(0, &dark0[0], &bright0[0], &bright0[1]);
        }
    }
    Ok(TransitionSet { lines })
}

/// Hyperfine-weighted average half-splitting ε = E/3 + (2/3)√(A∥² + E²), MHz.
pub fn average_splitting(e_es: f64, a_par: f64) -> f64 {
    e_es / 3.0 + 2.0 / 3.0 * a_par.hypot(e_es)
}

/// Lorentzian dips on a flat baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrLineModel {
    /// MHz.
    pub centers: Vec<f64>,
    /// Full widths at half maximum, MHz.
    pub widths: Vec<f64>,
    pub contrasts: Vec<f64>,
    /// Off-resonant signal, counts/s.
    pub baseline: f64,
}

impl OdmrLineModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.centers.len();
        if self.widths.len() != n || self.contrasts.len() != n {
            return Err(Error::InvalidInput(
                "centers, widths and contrasts must have equal lengths".into(),
            ));
        }
        for &c in &self.centers {
            ensure_finite("center", c)?;
        }
        if let Some(w) = self.widths.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("line width must be positive, got {w}")));
        }
        if let Some(c) = self.contrasts.iter().find(|c| !(**c >= 0.0 && **c < 1.0)) {
            return Err(Error::InvalidParameter(format!("contrast must lie in [0, 1), got {c}")));
        }
        if !(self.baseline >= 0.0 && self.baseline.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "baseline must be non-negative, got {}",
                self.baseline
            )));
        }
        Ok(())
    }

    /// One dip per transition, all with the same width and contrast.
    pub fn from_transitions(t: &TransitionSet, width: f64, contrast: f64, baseline: f64) -> Self {
        let n = t.lines.len();
        OdmrLineModel {
            centers: t.frequencies(),
            widths: vec![width; n],
            contrasts: vec![contrast; n],
            baseline,
        }
    }

    pub fn intensity(&self, f: f64) -> f64 {
        let dip: f64 = self
            .centers
            .iter()
            .zip(&self.widths)
            .zip(&self.contrasts)
            .map(|((&c, &w), &k)| k * unit_lorentzian(f, c, w))
            .sum();
        self.baseline * (1.0 - dip)
    }
}

/// Lorentzian with unit peak height at `center` and full width `fwhm`.
pub fn unit_lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let hw = 0.5 * fwhm;
    let d = x - center;
    hw * hw / (d * d + hw * hw)
}

/// Noise-free ODMR spectrum on a frequency grid (1 s exposure).
pub fn synthesize_odmr(lines: &OdmrLineModel, grid: &[f64]) -> Result<Spectrum> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("frequency grid is empty".into()));
    }
    check_strictly_increasing(grid)?;
    lines.validate()?;
    let counts = grid.iter().map(|&f| lines.intensity(f).max(0.0)).collect();
    Spectrum::new(grid.to_vec(), counts, 1.0, AxisUnit::Mhz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn spin_one_algebra() {
        let s = build_spin_operators();
        let casimir = &(&(&s.x * &s.x) + &(&s.y * &s.y)) + &(&s.z * &s.z);
        assert!((&casimir - &CMatrix::identity(3).scale(2.0)).frobenius_norm() < 1e-14);

        let comm = &(&s.x * &s.y) - &(&s.y * &s.x);
        let i_sz = CMatrix::from_rows(&[
            vec![Complex64::new(0.0, 1.0), Complex64::default(), Complex64::default()],
            vec![Complex64::default(); 3],
            vec![Complex64::default(), Complex64::default(), Complex64::new(0.0, -1.0)],
        ]);
        assert!((&comm - &i_sz).frobenius_norm() < 1e-14);

        let ev = eigenvalues(&s.x).unwrap();
        for (a, b) in ev.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        // S_z |m_s = 0> = 0
        assert!(s.z.column(1).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn diagonal_hamiltonian() {
        let h = build_hamiltonian(&SpinParams::new(2870.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        let ev = h.eigenvalues().unwrap();
        for v in &ev[..3] {
            assert_relative_eq!(*v, -2.0 * 2870.0 / 3.0, max_relative = 1e-14);
        }
        for v in &ev[3..] {
            assert_relative_eq!(*v, 2870.0 / 3.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_parameters_give_zero_matrix() {
        let h = build_hamiltonian(&SpinParams::new(0.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(h.matrix().frobenius_norm(), 0.0);
    }

    #[test]
    fn strain_splits_bright_manifold_by_two_e() {
        let h = build_hamiltonian(&SpinParams::new(2870.0, 10.0, 0.0, 0.0).unwrap()).unwrap();
        let ev = h.eigenvalues().unwrap();
        assert_relative_eq!(ev[8] - ev[3], 20.0, max_relative = 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(SpinParams::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
        let p = SpinParams { d: 1.0, e: f64::INFINITY, a_par: 0.0, a_perp: 0.0 };
        assert!(matches!(build_hamiltonian(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hamiltonian_is_exactly_hermitian_and_traceless() {
        let h = build_hamiltonian(&SpinParams::new(1420.0, 71.7, 40.0, 40.0).unwrap()).unwrap();
        assert_eq!(h.matrix(), &h.matrix().adjoint());
        assert!(h.matrix().trace().norm() < 1e-9);
    }

    #[test]
    fn strain_only_transitions() {
        let t = transition_frequencies(&SpinParams::new(2870.0, 10.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(t.lines.len(), 6);
        for l in &t.lines {
            let want = if l.branch == Branch::Lower { 2860.0 } else { 2880.0 };
            assert!(close(l.frequency, want, 1e-12), "{l:?}");
        }
        let t = transition_frequencies(&SpinParams::new(2870.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(t.lines.iter().all(|l| close(l.frequency, 2870.0, 1e-12)));
    }

    #[test]
    fn strong_transverse_mixing_is_ambiguous() {
        let err = transition_frequencies(&SpinParams::new(1.0, 0.0, 0.0, 50.0).unwrap()).unwrap_err();
        match err {
            Error::AmbiguousLabeling { eigenvalues, .. } => assert_eq!(eigenvalues.len(), 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn average_splitting_limits() {
        assert_relative_eq!(average_splitting(0.0, 40.0), 80.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(average_splitting(12.5, 0.0), 12.5, max_relative = 1e-15);
    }

    #[test]
    fn odmr_synthesis() {
        let one = OdmrLineModel {
            centers: vec![2870.0],
            widths: vec![10.0],
            contrasts: vec![0.1],
            baseline: 1000.0,
        };
        let s = synthesize_odmr(&one, &[2870.0, 2875.0]).unwrap();
        assert_relative_eq!(s.counts[0], 900.0, max_relative = 1e-14);
        // half the on-peak dip at half width
        assert_relative_eq!(1000.0 - s.counts[1], 50.0, max_relative = 1e-12);

        let flat = OdmrLineModel { contrasts: vec![0.0], ..one.clone() };
        let s = synthesize_odmr(&flat, &[2800.0, 2870.0, 2900.0]).unwrap();
        assert!(s.counts.iter().all(|&c| c == 1000.0));

        assert!(synthesize_odmr(&one, &[]).is_err());
        assert!(synthesize_odmr(&one, &[2.0, 1.0]).is_err());
        let bad = OdmrLineModel { contrasts: vec![1.0], ..one };
        assert!(synthesize_odmr(&bad, &[1.0]).is_err());
    }
}
