//! Radix-2 FFTs for power-of-two sizes.
//!
//! All transforms in this crate use power-of-two sizes, so a compact iterative
//! Cooley-Tukey kernel covers every need without pulling in a std-only FFT
//! library. [`RealFft`] packs a real signal of length `n` into a complex
//! transform of length `n/2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// In-place complex FFT plan of a fixed power-of-two size.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    // twiddles[k] = exp(-2*pi*i*k/n) for k in 0..n/2
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Fft {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT size must be a power of two, got {n}");
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        Self { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Inverse transform, scaled by `1/n`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n, "FFT buffer length mismatch");
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if j > i {
                data.swap(i, j);
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
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Real-input FFT of a power-of-two size `n >= 2`, producing `n/2 + 1` bins.
#[derive(Debug, Clone)]
pub struct RealFft {
    n: usize,
    half: Fft,
    // exp(-2*pi*i*k/n) for k in 0..=n/2
    post: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_power_of_two(), "real FFT size must be a power of two >= 2, got {n}");
        let post = (0..=n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Self { n, half: Fft::new(n / 2), post }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// Forward transform of `input` (length `n`) into `output` (length `n/2 + 1`).
    pub fn forward(&self, input: &[f64], output: &mut [Complex64]) {
        let m = self.n / 2;
        assert_eq!(input.len(), self.n);
        assert_eq!(output.len(), m + 1);
        let mut z: Vec<Complex64> = (0..m).map(|i| Complex64::new(input[2 * i], input[2 * i + 1])).collect();
        self.half.forward(&mut z);
        for k in 0..=m {
            let zk = z[k % m];
            let zc = z[(m - k) % m].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            output[k] = even + self.post[k] * odd;
        }
    }

    /// Inverse of [`RealFft::forward`]; `input` holds `n/2 + 1` bins.
    ///
    /// The imaginary parts of the DC and Nyquist bins are ignored, which is the
    /// usual convention for Hermitian spectra.
    pub fn inverse(&self, input: &[Complex64], output: &mut [f64]) {
        let m = self.n / 2;
        assert_eq!(input.len(), m + 1);
        assert_eq!(output.len(), self.n);
        let mut spec = input.to_vec();
        spec[0].im = 0.0;
        spec[m].im = 0.0;
        let mut z = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let xk = spec[k];
            let xc = spec[m - k].conj();
            let even = (xk + xc) * 0.5;
            let odd = (xk - xc) * 0.5 * self.post[k].conj();
            z[k] = even + Complex64::new(0.0, 1.0) * odd;
        }
        self.half.inverse(&mut z);
        for (i, v) in z.iter().enumerate() {
            output[2 * i] = v.re;
            output[2 * i + 1] = v.im;
        }
    }
}
