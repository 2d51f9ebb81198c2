//! Spectral pre-treatment: standard normal variate, min-max scaling and
//! Savitzky-Golay smoothing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spread below which a spectrum counts as constant.
pub const DEGENERATE_STD: f64 = 1e-15;

/// Savitzky-Golay window: `2·half_width + 1` points, polynomial `degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SgWindow {
    pub half_width: usize,
    pub degree: usize,
}

impl Default for SgWindow {
    fn default() -> Self {
        Self {
            half_width: 5,
            degree: 3,
        }
    }
}

impl SgWindow {
    pub fn new(half_width: usize, degree: usize) -> Result<Self> {
        let w = Self { half_width, degree };
        w.validate()?;
        Ok(w)
    }

    pub fn width(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width < 1 {
            return Err(Error::domain("Savitzky-Golay half width must be at least 1"));
        }
        if self.degree >= self.width() {
            return Err(Error::domain(format!(
                "polynomial degree {} needs a window longer than {}",
                self.degree,
                self.width()
            )));
        }
        Ok(())
    }
}

fn check_len(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::domain("spectrum needs at least two points"));
    }
    Ok(())
}

/// Standard normal variate with the (N − 1) standard deviation.
pub fn snv(x: &[f64]) -> Result<Vec<f64>> {
    check_len(x)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if !(std >= DEGENERATE_STD) {
        return Err(Error::Degenerate("spectrum has zero variance".into()));
    }
    Ok(x.iter().map(|v| (v - mean) / std).collect())
}

/// Rescales to [0, 1].
pub fn minmax(x: &[f64]) -> Result<Vec<f64>> {
    check_len(x)?;
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::Degenerate("spectrum is constant".into()));
    }
    Ok(x.iter().map(|v| (v - lo) / range).collect())
}

/// Precomputed Savitzky-Golay smoothing weights.
///
/// Interior points use the centered window. The first and last `half_width`
/// points use the full-length window flush with the edge and evaluate the
/// fitted polynomial at the point's own offset.
#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    window: SgWindow,
    /// `rows[k]` weights evaluating the fit at window offset `k` (0..len).
    rows: Vec<Vec<f64>>,
}

impl SavitzkyGolay {
    pub fn new(window: SgWindow) -> Result<Self> {
        window.validate()?;
        let len = window.width();
        let m = window.half_width as f64;
        let cols = window.degree + 1;
        // positions scaled to [-1, 1] for conditioning
        let design = DMatrix::from_fn(len, cols, |i, k| ((i as f64 - m) / m).powi(k as i32));
        let qr = design.qr();
        let pinv = qr
            .r()
            .solve_upper_triangular(&qr.q().transpose())
            .ok_or_else(|| Error::Numerical("Savitzky-Golay design is rank deficient".into()))?;
        let rows = (0..len)
            .map(|offset| {
                let z = (offset as f64 - m) / m;
                let basis = DVector::from_fn(cols, |k, _| z.powi(k as i32));
                (pinv.transpose() * basis).iter().copied().collect()
            })
            .collect();
        Ok(Self { window, rows })
    }

    pub fn window(&self) -> SgWindow {
        self.window
    }

    /// Convolution weights used for interior points.
    pub fn interior_weights(&self) -> &[f64] {
        &self.rows[self.window.half_width]
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let len = self.window.width();
        let n = x.len();
        if n < len {
            return Err(Error::WindowTooLarge { window: len, len: n });
        }
        let m = self.window.half_width;
        let dot = |w: &[f64], start: usize| w.iter().zip(&x[start..start + len]).map(|(a, b)| a * b).sum();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let v = if i < m {
                dot(&self.rows[i], 0)
            } else if i + m >= n {
                dot(&self.rows[len - (n - i)], n - len)
            } else {
                dot(&self.rows[m], i - m)
            };
            out.push(v);
        }
        Ok(out)
    }
}

/// Savitzky-Golay smoothing of one spectrum.
pub fn savitzky_golay(x: &[f64], window: SgWindow) -> Result<Vec<f64>> {
    SavitzkyGolay::new(window)?.apply(x)
}

/// One pre-treatment step, applied per spectrum (matrix row).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Preprocessing {
    Snv,
    Minmax,
    #[serde(rename = "sg")]
    SavitzkyGolay {
        #[serde(default = "default_half_width")]
        half_width: usize,
        #[serde(default = "default_degree")]
        degree: usize,
    },
}

fn default_half_width() -> usize {
    SgWindow::default().half_width
}
fn default_degree() -> usize {
    SgWindow::default().degree
}

impl Preprocessing {
    pub fn name(&self) -> &'static str {
        match self {
            Preprocessing::Snv => "snv",
            Preprocessing::Minmax => "minmax",
            Preprocessing::SavitzkyGolay { .. } => "sg",
        }
    }
}

/// Applies `steps` in order to every row of `x`.
pub fn apply_rows(x: &DMatrix<f64>, steps: &[Preprocessing]) -> Result<DMatrix<f64>> {
    let mut out = x.clone();
    for step in steps {
        let sg = match step {
            Preprocessing::SavitzkyGolay { half_width, degree } => {
                Some(SavitzkyGolay::new(SgWindow::new(*half_width, *degree)?)?)
            }
            _ => None,
        };
        for r in 0..out.nrows() {
            let row: Vec<f64> = out.row(r).iter().copied().collect();
            let new = match (step, &sg) {
                (Preprocessing::Snv, _) => snv(&row)?,
                (Preprocessing::Minmax, _) => minmax(&row)?,
                (_, Some(f)) => f.apply(&row)?,
                _ => unreachable!(),
            };
            for (c, v) in new.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
    }
    Ok(out)
}
