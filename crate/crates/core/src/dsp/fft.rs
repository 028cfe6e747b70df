//! Iterative radix-2 FFT. Lengths must be powers of two.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::DspError;
use crate::Complex;

/// Precomputed twiddle table for one transform length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    twiddles: Vec<Complex>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if n == 0 || !n.is_power_of_two() {
            return Err(DspError::FftLength(n));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                let (s, c) = (-2.0 * PI * k as f64 / n as f64).sin_cos();
                Complex::new(c, s)
            })
            .collect();
        Ok(Self { n, twiddles })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform, X[k] = Σ x[n]·e^{−j2πkn/N}, in place.
    pub fn forward(&self, buf: &mut [Complex]) -> Result<(), DspError> {
        self.transform(buf, false)
    }

    /// Inverse transform including the 1/N scale, in place.
    pub fn inverse(&self, buf: &mut [Complex]) -> Result<(), DspError> {
        self.transform(buf, true)?;
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        Ok(())
    }

    fn transform(&self, buf: &mut [Complex], inverse: bool) -> Result<(), DspError> {
        let n = self.n;
        if buf.len() != n {
            return Err(DspError::LengthMismatch { left: buf.len(), right: n });
        }
        if n == 1 {
            return Ok(());
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
        Ok(())
    }
}

/// Forward transform in place; builds a throwaway plan.
pub fn fft(buf: &mut [Complex]) -> Result<(), DspError> {
    FftPlan::new(buf.len())?.forward(buf)
}

/// Inverse transform (with 1/N) in place; builds a throwaway plan.
pub fn ifft(buf: &mut [Complex]) -> Result<(), DspError> {
    FftPlan::new(buf.len())?.inverse(buf)
}

/// Forward transform of a real sequence zero-padded to `n`.
pub fn rfft_padded(x: &[f64], n: usize) -> Result<Vec<Complex>, DspError> {
    if x.len() > n {
        return Err(DspError::FftTooShort { n_fft: n, len: x.len() });
    }
    let mut buf = alloc::vec![Complex::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    fft(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft(x: &[Complex]) -> Vec<Complex> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (i, &v)| {
                    let ang = -2.0 * PI * (k * i % n) as f64 / n as f64;
                    acc + v * Complex::new(ang.cos(), ang.sin())
                })
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                Complex::new((0.3 * t).sin() + 0.1 * t.cos(), (0.07 * t * t).cos())
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        for n in [1usize, 2, 4, 8, 64, 256] {
            let x = signal(n);
            let mut y = x.clone();
            fft(&mut y).unwrap();
            for (a, b) in y.iter().zip(dft(&x)) {
                assert!((a - b).norm() < 1e-9 * n as f64, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let x = signal(1024);
        let mut y = x.clone();
        fft(&mut y).unwrap();
        ifft(&mut y).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut x = signal(12);
        assert_eq!(fft(&mut x), Err(DspError::FftLength(12)));
        assert!(fft(&mut []).is_err());
    }
}
