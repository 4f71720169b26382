//! Real-to-complex transforms on periodic grids.
//!
//! States are stored as the non-negative half of the spectrum (`n/2 + 1`
//! coefficients). Conjugate symmetry of the full spectrum is implied by the
//! storage, so inverse transforms are real by construction. Forward
//! transforms are unnormalized; inverse transforms divide by `n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

pub struct RealSpectral {
    n: usize,
    length: f64,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    real_buf: Vec<f64>,
    complex_buf: Vec<Complex64>,
    forward_scratch: Vec<Complex64>,
    inverse_scratch: Vec<Complex64>,
}

impl fmt::Debug for RealSpectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealSpectral")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl Clone for RealSpectral {
    fn clone(&self) -> Self {
        Self::new(self.n, self.length)
    }
}

impl RealSpectral {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let forward_scratch = forward.make_scratch_vec();
        let inverse_scratch = inverse.make_scratch_vec();
        Self {
            n,
            length,
            real_buf: vec![0.0; n],
            complex_buf: vec![Complex64::new(0.0, 0.0); n / 2 + 1],
            forward,
            inverse,
            forward_scratch,
            inverse_scratch,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn n_modes(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Physical wavenumbers `2 pi m / L` for `m = 0..=n/2`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_modes())
            .map(|m| 2.0 * PI * m as f64 / self.length)
            .collect()
    }

    /// Wavenumbers for odd-order derivatives: the Nyquist entry (even `n`)
    /// is zeroed so the result stays real.
    pub fn odd_wavenumbers(&self) -> Vec<f64> {
        let mut q = self.wavenumbers();
        if self.n % 2 == 0 {
            if let Some(last) = q.last_mut() {
                *last = 0.0;
            }
        }
        q
    }

    /// Index of the Nyquist coefficient, present only for even `n`.
    pub fn nyquist(&self) -> Option<usize> {
        (self.n % 2 == 0).then_some(self.n / 2)
    }

    pub fn forward(&mut self, input: &[f64], output: &mut [Complex64]) {
        self.real_buf.copy_from_slice(input);
        self.forward
            .process_with_scratch(&mut self.real_buf, output, &mut self.forward_scratch)
            .expect("forward transform buffer sizes are fixed at construction");
    }

    pub fn inverse(&mut self, input: &[Complex64], output: &mut [f64]) {
        self.complex_buf.copy_from_slice(input);
        self.complex_buf[0].im = 0.0;
        if let Some(ny) = self.nyquist() {
            self.complex_buf[ny].im = 0.0;
        }
        self.inverse
            .process_with_scratch(&mut self.complex_buf, output, &mut self.inverse_scratch)
            .expect("inverse transform buffer sizes are fixed at construction");
        let scale = 1.0 / self.n as f64;
        output.iter_mut().for_each(|v| *v *= scale);
    }

    pub fn forward_vec(&mut self, input: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_modes()];
        self.forward(input, &mut out);
        out
    }

    pub fn inverse_vec(&mut self, input: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.inverse(input, &mut out);
        out
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&mut self, values: &[f64], order: u32) -> Vec<f64> {
        let mut hat = self.forward_vec(values);
        let q = if order % 2 == 1 {
            self.odd_wavenumbers()
        } else {
            self.wavenumbers()
        };
        let factor = Complex64::new(0.0, 1.0).powu(order);
        for (c, &k) in hat.iter_mut().zip(&q) {
            *c *= factor * k.powi(order as i32);
        }
        self.inverse_vec(&hat)
    }
}

/// Expand a half spectrum into the full conjugate-symmetric spectrum of
/// length `n`.
pub fn full_spectrum(half: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    for (m, c) in half.iter().enumerate().take(n / 2 + 1) {
        full[m] = *c;
        if m > 0 && m < n - m {
            full[n - m] = c.conj();
        }
    }
    full
}
