use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Row/column plans for a `width × height` row-major complex buffer.
pub(crate) struct Fft2 {
    pub width: usize,
    pub height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, usize), Arc<Fft2>>> = RefCell::new(HashMap::new());
}

impl Fft2 {
    /// Per-thread cached plan.
    pub fn get(width: usize, height: usize) -> Arc<Fft2> {
        PLANS.with(|p| {
            p.borrow_mut()
                .entry((width, height))
                .or_insert_with(|| {
                    let mut planner = FftPlanner::new();
                    Arc::new(Fft2 {
                        width,
                        height,
                        row_fwd: planner.plan_fft_forward(width),
                        row_inv: planner.plan_fft_inverse(width),
                        col_fwd: planner.plan_fft_forward(height),
                        col_inv: planner.plan_fft_inverse(height),
                    })
                })
                .clone()
        })
    }

    fn rows(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], rows: std::ops::Range<usize>) {
        if rows.is_empty() {
            return;
        }
        let w = self.width;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut data[rows.start * w..rows.end * w], &mut scratch);
    }

    fn cols(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let (w, h) = (self.width, self.height);
        let mut t = vec![Complex64::new(0.0, 0.0); w * h];
        transpose(data, &mut t, w, h);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, data, h, w);
    }

    /// Unnormalized forward transform. Rows outside `nonzero_rows` must be zero.
    pub fn forward(&self, data: &mut [Complex64], nonzero_rows: std::ops::Range<usize>) {
        self.rows(&self.row_fwd, data, nonzero_rows);
        self.cols(&self.col_fwd, data);
    }

    /// Unnormalized inverse transform; only rows in `wanted_rows` are valid afterwards.
    pub fn inverse(&self, data: &mut [Complex64], wanted_rows: std::ops::Range<usize>) {
        self.cols(&self.col_inv, data);
        self.rows(&self.row_inv, data, wanted_rows);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], w: usize, h: usize) {
    const B: usize = 16;
    for by in (0..h).step_by(B) {
        for bx in (0..w).step_by(B) {
            for y in by..(by + B).min(h) {
                for x in bx..(bx + B).min(w) {
                    dst[x * h + y] = src[y * w + x];
                }
            }
        }
    }
}

/// Windowed linear convolution of a real image with a kernel given as a
/// function of pixel offsets.
///
/// Returns `out[v][u] = Σ a[y][x] · kernel(ox + u - x, oy + v - y)` for
/// `u < ow`, `v < oh`, i.e. the convolution sampled on a window whose origin
/// sits at offset `(ox, oy)` from the image origin.
#[allow(clippy::too_many_arguments)]
pub(crate) fn convolve_window(
    a: &[f64],
    aw: usize,
    ah: usize,
    kernel: impl Fn(i64, i64) -> f64,
    ox: i64,
    oy: i64,
    ow: usize,
    oh: usize,
) -> Vec<f64> {
    let (lx, ly) = (ow + aw - 1, oh + ah - 1);
    let (kx0, ky0) = (ox - (aw as i64 - 1), oy - (ah as i64 - 1));
    let (pw, ph) = (lx.next_power_of_two(), ly.next_power_of_two());
    let plan = Fft2::get(pw, ph);
    let mut kb = vec![Complex64::new(0.0, 0.0); pw * ph];
    for j in 0..ly {
        for i in 0..lx {
            kb[j * pw + i] = Complex64::new(kernel(kx0 + i as i64, ky0 + j as i64), 0.0);
        }
    }
    plan.forward(&mut kb, 0..ly);
    let mut ab = vec![Complex64::new(0.0, 0.0); pw * ph];
    for y in 0..ah {
        for x in 0..aw {
            ab[y * pw + x] = Complex64::new(a[y * aw + x], 0.0);
        }
    }
    plan.forward(&mut ab, 0..ah);
    for (b, k) in ab.iter_mut().zip(&kb) {
        *b *= k;
    }
    let (sx, sy) = (aw - 1, ah - 1);
    plan.inverse(&mut ab, sy..sy + oh);
    let scale = 1.0 / (pw * ph) as f64;
    let mut out = Vec::with_capacity(ow * oh);
    for v in 0..oh {
        let row = (sy + v) * pw + sx;
        out.extend(ab[row..row + ow].iter().map(|c| c.re * scale));
    }
    out
}
