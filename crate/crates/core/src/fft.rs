//! Iterative radix-2 complex FFT for power-of-two sizes.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub(crate) struct Fft {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    /// Panics if `len` is not a power of two; callers validate sizes first.
    pub(crate) fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "FFT size must be a power of two");
        let twiddles = (0..len / 2)
            .map(|k| {
                let phi = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(phi), libm::sin(phi))
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Fft {
            len,
            twiddles,
            bitrev,
        }
    }

    /// Unscaled forward transform, `X[k] = sum x[n] exp(-2 pi i k n / N)`.
    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform scaled by `1/N`.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for j in 0..half {
                    let mut w = self.twiddles[j * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + j];
                    let b = buf[start + j + half] * w;
                    buf[start + j] = a + b;
                    buf[start + j + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}
