use std::cell::RefCell;
use std::rc::Rc;

use num_complex::Complex64;

use super::fft::Fft2;
use crate::error::{Error, Result};
use crate::fieldcore::ComplexField;

/// Band-limited angular-spectrum propagator.
///
/// The field is embedded in a zero grid `padding` times larger in each axis,
/// transformed, multiplied by `exp(-i 2π z sqrt(1/λ² - fx² - fy²))` and
/// cropped back. Evanescent components are dropped and each axis is limited to
/// `|f| < 1 / (λ sqrt((2 Δf z)² + 1))` to avoid aliasing of the transfer
/// function. `padding = 1` gives periodic (circular) propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularSpectrum {
    padding: usize,
}

impl Default for AngularSpectrum {
    fn default() -> Self {
        Self { padding: 2 }
    }
}

/// Propagated field plus the fraction of input spectral energy the transfer
/// function discarded.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub field: ComplexField,
    pub clipped_fraction: f64,
}

fn freqs(n: usize, pitch: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            k / (n as f64 * pitch)
        })
        .collect()
}

type TransferKey = (usize, usize, u64, u64, u64);

thread_local! {
    static TRANSFERS: RefCell<Vec<(TransferKey, Rc<Vec<Complex64>>)>> = const { RefCell::new(Vec::new()) };
}

const TRANSFER_CACHE: usize = 16;

// Band-limited transfer function including the 1/(mw·mh) inverse-FFT scale;
// clipped and evanescent entries are exactly zero.
fn transfer(mw: usize, mh: usize, pitch: f64, wavelength: f64, d: f64) -> Rc<Vec<Complex64>> {
    let key = (mw, mh, pitch.to_bits(), wavelength.to_bits(), d.to_bits());
    if let Some(h) = TRANSFERS.with(|t| t.borrow().iter().find(|(k, _)| *k == key).map(|(_, h)| h.clone())) {
        return h;
    }
    let fx = freqs(mw, pitch);
    let fy = freqs(mh, pitch);
    let inv_lam2 = 1.0 / (wavelength * wavelength);
    let two_pi = 2.0 * std::f64::consts::PI;
    let scale = 1.0 / (mw * mh) as f64;
    let z = d.abs();
    let lim_x = 1.0 / (wavelength * ((2.0 * z / (mw as f64 * pitch)).powi(2) + 1.0).sqrt());
    let lim_y = 1.0 / (wavelength * ((2.0 * z / (mh as f64 * pitch)).powi(2) + 1.0).sqrt());
    let mut h = vec![Complex64::new(0.0, 0.0); mw * mh];
    for (v, &fyv) in fy.iter().enumerate() {
        if fyv.abs() >= lim_y {
            continue;
        }
        for (u, &fxv) in fx.iter().enumerate() {
            let arg = inv_lam2 - fxv * fxv - fyv * fyv;
            if fxv.abs() < lim_x && arg > 0.0 {
                h[v * mw + u] = Complex64::from_polar(scale, -two_pi * d * arg.sqrt());
            }
        }
    }
    let h = Rc::new(h);
    TRANSFERS.with(|t| {
        let mut t = t.borrow_mut();
        if t.len() == TRANSFER_CACHE {
            t.remove(0);
        }
        t.push((key, h.clone()));
    });
    h
}

impl AngularSpectrum {
    pub fn new(padding: usize) -> Result<Self> {
        if padding == 0 {
            return Err(Error::Argument("padding factor must be at least 1".into()));
        }
        Ok(Self { padding })
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn propagate(&self, field: &ComplexField, distance: f64) -> Result<ComplexField> {
        Ok(self.run(field, &[distance])?.pop().unwrap().field)
    }

    pub fn propagate_reported(&self, field: &ComplexField, distance: f64) -> Result<Propagation> {
        Ok(self.run(field, &[distance])?.pop().unwrap())
    }

    /// Propagates one field to several distances, sharing the forward transform.
    pub fn propagate_many(&self, field: &ComplexField, distances: &[f64]) -> Result<Vec<ComplexField>> {
        Ok(self.run(field, distances)?.into_iter().map(|p| p.field).collect())
    }

    /// Undoes [`propagate`](Self::propagate) with the conjugate transfer function.
    pub fn back_propagate(&self, field: &ComplexField, distance: f64) -> Result<ComplexField> {
        check_distance(distance)?;
        Ok(self.run_signed(field, &[-distance])?.pop().unwrap().field)
    }

    fn run(&self, field: &ComplexField, distances: &[f64]) -> Result<Vec<Propagation>> {
        for &d in distances {
            check_distance(d)?;
        }
        self.run_signed(field, distances)
    }

    fn run_signed(&self, field: &ComplexField, distances: &[f64]) -> Result<Vec<Propagation>> {
        let g = *field.grid();
        if g.pitch < g.wavelength {
            return Err(Error::Argument(format!(
                "pitch {} is finer than the wavelength {}; sub-wavelength sampling is not supported",
                g.pitch, g.wavelength
            )));
        }
        if !field.is_finite() {
            return Err(Error::Numeric("field contains non-finite amplitudes".into()));
        }
        if distances.iter().all(|&d| d == 0.0) {
            return Ok(distances
                .iter()
                .map(|_| Propagation {
                    field: field.clone(),
                    clipped_fraction: 0.0,
                })
                .collect());
        }

        let (mw, mh) = (g.width * self.padding, g.height * self.padding);
        let (ox, oy) = ((mw - g.width) / 2, (mh - g.height) / 2);
        let plan = Fft2::get(mw, mh);
        let mut spectrum = field.embed_center(mw, mh)?.into_amplitude();
        plan.forward(&mut spectrum, oy..oy + g.height);
        let total: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();

        let mut out = Vec::with_capacity(distances.len());
        for &d in distances {
            if d == 0.0 {
                out.push(Propagation {
                    field: field.clone(),
                    clipped_fraction: 0.0,
                });
                continue;
            }
            let h = transfer(mw, mh, g.pitch, g.wavelength, d);
            let mut buf = spectrum.clone();
            let mut clipped = 0.0;
            for (b, t) in buf.iter_mut().zip(h.iter()) {
                if t.re == 0.0 && t.im == 0.0 {
                    clipped += b.norm_sqr();
                }
                *b *= t;
            }
            plan.inverse(&mut buf, oy..oy + g.height);
            let mut amplitude = Vec::with_capacity(g.len());
            for j in 0..g.height {
                let row = (oy + j) * mw + ox;
                amplitude.extend_from_slice(&buf[row..row + g.width]);
            }
            out.push(Propagation {
                field: ComplexField::new(g, amplitude)?,
                clipped_fraction: if total > 0.0 { clipped / total } else { 0.0 },
            });
        }
        Ok(out)
    }
}

fn check_distance(d: f64) -> Result<()> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Argument(format!("distance must be finite and nonnegative, got {d}")));
    }
    Ok(())
}

/// Angular-spectrum propagation with the default ×2 zero padding.
pub fn propagate_as(field: &ComplexField, distance: f64) -> Result<ComplexField> {
    AngularSpectrum::default().propagate(field, distance)
}
