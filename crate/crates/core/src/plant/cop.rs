//! Quadratic chiller COP surface over cooling-water temperature, chilled-water
//! temperature and part-load ratio.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PlantError;

/// Declared operating envelope of the surface.
pub const T_CW_RANGE: (f64, f64) = (20.0, 40.0);
pub const T_CHW_RANGE: (f64, f64) = (4.0, 15.0);

/// `COP = c0 + c1·x + c2·y + c3·z + c4·x² + c5·y² + c6·z² + c7·xy + c8·xz + c9·yz`
/// with `x` the cooling-water temperature (°C), `y` the chilled-water supply
/// temperature (°C) and `z` the part-load ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CopCoefficients(pub [f64; 10]);

impl Default for CopCoefficients {
    /// 5.5 at 32 °C / 7 °C / full load, part-load optimum at 0.75 and about
    /// -2 %/°C against cooling-water temperature.
    fn default() -> Self {
        CopCoefficients([5.97, -0.11, 0.15, 6.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0])
    }
}

pub(crate) fn basis(t_cw: f64, t_chw: f64, plr: f64) -> [f64; 10] {
    let (x, y, z) = (t_cw, t_chw, plr);
    [1.0, x, y, z, x * x, y * y, z * z, x * y, x * z, y * z]
}

impl CopCoefficients {
    /// Raw polynomial value, no envelope checks.
    pub fn eval(&self, t_cw: f64, t_chw: f64, plr: f64) -> f64 {
        basis(t_cw, t_chw, plr).iter().zip(&self.0).map(|(b, c)| b * c).sum()
    }

    /// Checks COP > 0 on a grid covering the envelope.
    pub fn validate(&self) -> Result<(), PlantError> {
        if self.0.iter().any(|c| !c.is_finite()) {
            return Err(PlantError::Config("COP coefficients must be finite".into()));
        }
        for i in 0..=20 {
            let x = T_CW_RANGE.0 + (T_CW_RANGE.1 - T_CW_RANGE.0) * i as f64 / 20.0;
            for j in 0..=11 {
                let y = T_CHW_RANGE.0 + (T_CHW_RANGE.1 - T_CHW_RANGE.0) * j as f64 / 11.0;
                for k in 1..=20 {
                    let z = k as f64 / 20.0;
                    let cop = self.eval(x, y, z);
                    if !(cop > 0.0) {
                        return Err(PlantError::Config(format!(
                            "COP surface is {cop:.4} at t_cw={x}, t_chw={y}, plr={z}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Ordinary least-squares fit to `(t_cw, t_chw, plr, cop)` samples.
    pub fn fit(samples: &[(f64, f64, f64, f64)]) -> Result<Self, PlantError> {
        if samples.len() < 10 {
            return Err(PlantError::Underdetermined {
                observations: samples.len(),
                parameters: 10,
            });
        }
        let a = DMatrix::from_fn(samples.len(), 10, |r, c| {
            let (x, y, z, _) = samples[r];
            basis(x, y, z)[c]
        });
        let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.3));
        let svd = a.svd(true, true);
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|e| PlantError::Calibration(format!("least squares failed: {e}")))?;
        let mut c = [0.0; 10];
        c.copy_from_slice(sol.as_slice());
        Ok(CopCoefficients(c))
    }
}

/// COP at an operating point inside the envelope.
pub fn chiller_cop(coeffs: &CopCoefficients, t_cw: f64, t_chw: f64, plr: f64) -> Result<f64, PlantError> {
    if !(plr > 0.0 && plr <= 1.0) {
        return Err(PlantError::Envelope(format!("part-load ratio {plr} outside (0, 1]")));
    }
    if !(T_CW_RANGE.0..=T_CW_RANGE.1).contains(&t_cw) {
        return Err(PlantError::Envelope(format!(
            "cooling water {t_cw} °C outside {T_CW_RANGE:?}"
        )));
    }
    if !(T_CHW_RANGE.0..=T_CHW_RANGE.1).contains(&t_chw) {
        return Err(PlantError::Envelope(format!(
            "chilled water {t_chw} °C outside {T_CHW_RANGE:?}"
        )));
    }
    let cop = coeffs.eval(t_cw, t_chw, plr);
    if !(cop.is_finite() && cop > 0.0) {
        return Err(PlantError::Envelope(format!(
            "COP {cop} is not positive at t_cw={t_cw}, t_chw={t_chw}, plr={plr}"
        )));
    }
    Ok(cop)
}
