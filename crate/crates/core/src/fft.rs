//! Radix-2 complex FFT and its application along one axis of a
//! row-major hypercubic array.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal permutation for one length.
#[derive(Clone, Debug)]
pub struct FftPlan {
    len: usize,
    twiddles: Vec<Complex64>,
    inverse_twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let bits = len.trailing_zeros();
        let twiddles: Vec<Complex64> = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let inverse_twiddles = twiddles.iter().map(|w| w.conj()).collect();
        let bitrev = (0..len)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        Ok(Self {
            len,
            twiddles,
            inverse_twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, `X_k = sum_j x_j exp(-2 pi i jk/n)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
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
        let twiddles = if inverse {
            &self.inverse_twiddles
        } else {
            &self.twiddles
        };
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for chunk in buf.chunks_exact_mut(size) {
                let (lo, hi) = chunk.split_at_mut(half);
                for ((u, v), w) in lo
                    .iter_mut()
                    .zip(hi.iter_mut())
                    .zip(twiddles.iter().step_by(stride))
                {
                    let t = w * *v;
                    *v = *u - t;
                    *u += t;
                }
            }
            size *= 2;
        }
    }

    /// Transforms every line of `values` along `axis`. `values` is a
    /// row-major array with `axes` axes of `self.len()` points each.
    pub fn transform_axis(
        &self,
        values: &mut [Complex64],
        axes: usize,
        axis: usize,
        inverse: bool,
    ) {
        let m = self.len;
        let stride = m.pow((axes - 1 - axis) as u32);
        if stride == 1 {
            for line in values.chunks_exact_mut(m) {
                if inverse {
                    self.inverse(line);
                } else {
                    self.forward(line);
                }
            }
            return;
        }
        for block in values.chunks_exact_mut(m * stride) {
            self.transform_rows(block, stride, inverse);
        }
    }

    /// Transforms a block of `len` rows of `width` contiguous values along
    /// the row index, applying each butterfly to whole rows.
    fn transform_rows(&self, block: &mut [Complex64], width: usize, inverse: bool) {
        let n = self.len;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                let (a, b) = block.split_at_mut(j * width);
                a[i * width..(i + 1) * width].swap_with_slice(&mut b[..width]);
            }
        }
        let twiddles = if inverse {
            &self.inverse_twiddles
        } else {
            &self.twiddles
        };
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for chunk in block.chunks_exact_mut(size * width) {
                let (lo, hi) = chunk.split_at_mut(half * width);
                for (j, (lrow, hrow)) in lo
                    .chunks_exact_mut(width)
                    .zip(hi.chunks_exact_mut(width))
                    .enumerate()
                {
                    let w = twiddles[j * stride];
                    for (u, v) in lrow.iter_mut().zip(hrow.iter_mut()) {
                        let t = w * *v;
                        *v = *u - t;
                        *u += t;
                    }
                }
            }
            size *= 2;
        }
        if inverse {
            let scale = 1.0 / n as f64;
            for v in block.iter_mut() {
                *v *= scale;
            }
        }
    }

    /// Full multidimensional transform over all axes.
    pub fn transform_all(&self, values: &mut [Complex64], axes: usize, inverse: bool) {
        for axis in 0..axes {
            self.transform_axis(values, axes, axis, inverse);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let a = -2.0 * PI * (j * k) as f64 / n as f64;
                        x * Complex64::new(a.cos(), a.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let input: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let plan = FftPlan::new(32).unwrap();
        let mut fast = input.clone();
        plan.forward(&mut fast);
        for (a, b) in fast.iter().zip(naive_dft(&input)) {
            assert!((a - b).norm() < 1e-12);
        }
        plan.inverse(&mut fast);
        for (a, b) in fast.iter().zip(&input) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(FftPlan::new(12).unwrap_err(), Error::NotPowerOfTwo(12));
    }

    #[test]
    fn axis_transform_is_separable() {
        let m = 8;
        let plan = FftPlan::new(m).unwrap();
        let mut values: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new(i as f64, (i * i % 7) as f64))
            .collect();
        let original = values.clone();
        plan.transform_all(&mut values, 2, false);
        // Row 0 of the 2D transform equals the DFT of the column sums.
        let col_sums: Vec<Complex64> = (0..m)
            .map(|j| (0..m).map(|i| original[i * m + j]).sum())
            .collect();
        for (a, b) in values[..m].iter().zip(naive_dft(&col_sums)) {
            assert!((a - b).norm() < 1e-10);
        }
        plan.transform_all(&mut values, 2, true);
        for (a, b) in values.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
