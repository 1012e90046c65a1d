//! Spatially correlated shadowing by Gaussian smoothing of white noise.

use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;

/// Discrete Gaussian taps with standard deviation `sigma` (in cells), truncated at 3σ.
fn taps(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let half = (3.0 * sigma).ceil() as isize;
    (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Convolves along one axis of a row-major 3D array, keeping the "valid" part.
fn convolve_axis(data: &[f64], dims: [usize; 3], axis: usize, taps: &[f64]) -> (Vec<f64>, [usize; 3]) {
    let w = taps.len();
    let mut out_dims = dims;
    out_dims[axis] = dims[axis] + 1 - w;
    let strides = [dims[1] * dims[2], dims[2], 1];
    let mut out = Vec::with_capacity(out_dims.iter().product());
    for i in 0..out_dims[0] {
        for j in 0..out_dims[1] {
            for k in 0..out_dims[2] {
                let base = i * strides[0] + j * strides[1] + k * strides[2];
                let s: f64 = taps
                    .iter()
                    .enumerate()
                    .map(|(t, c)| c * data[base + t * strides[axis]])
                    .sum();
                out.push(s);
            }
        }
    }
    (out, out_dims)
}

/// White noise on a padded grid convolved with a Gaussian of standard
/// deviation `corr_len` meters, then cropped back to `dims`. The covariance
/// between cells at distance `d` is proportional to `exp(−d² / (4 corr_len²))`.
/// Output is row-major `(ix, iy, iz)` and not normalized.
pub(crate) fn smoothed_noise(dims: [usize; 3], spacing: [f64; 3], corr_len: f64, rng: &mut Rng) -> Vec<f64> {
    let kernels: Vec<Vec<f64>> = spacing.iter().map(|&h| taps(corr_len / h)).collect();
    let padded: [usize; 3] = std::array::from_fn(|a| dims[a] + kernels[a].len() - 1);
    let mut data: Vec<f64> = (0..padded.iter().product::<usize>())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let mut cur = padded;
    for axis in 0..3 {
        let (next, d) = convolve_axis(&data, cur, axis, &kernels[axis]);
        data = next;
        cur = d;
    }
    debug_assert_eq!(cur, dims);
    data
}
