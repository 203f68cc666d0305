//! Deterministic low-discrepancy sample points.

use crate::witt::{FrameModel, Point};

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

pub const DEFAULT_SAMPLES: usize = 32;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// The Halton points with indices `1..=count`, mapped to the cube `center + radius * [-1, 1]^d`.
///
/// # Panics
/// When `center.len()` exceeds the number of tabulated prime bases.
pub fn halton_points(center: &Point, radius: f64, count: usize) -> Vec<Point> {
    let d = center.len();
    assert!(d <= PRIMES.len(), "Halton sampling supports up to {} dimensions", PRIMES.len());
    (1..=count as u64)
        .map(|i| Point::from_fn(d, |k, _| center[k] + radius * (2.0 * radical_inverse(i, PRIMES[k] as u64) - 1.0)))
        .collect()
}

/// Sample points for pointwise residual suites: the origin for left-invariant
/// models, otherwise `count` Halton points in `[-0.5, 0.5]^d`.
pub fn sample_points(model: &FrameModel, count: usize) -> Vec<Point> {
    let origin = Point::zeros(model.dim());
    if model.is_lie() {
        vec![origin]
    } else {
        halton_points(&origin, 0.5, count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_in_base_two_and_three() {
        let p = halton_points(&Point::zeros(2), 0.5, 3);
        assert_eq!(p[0].as_slice(), &[0.0, 1.0 / 3.0 - 0.5]);
        assert_eq!(p[1].as_slice(), &[-0.25, 2.0 / 3.0 - 0.5]);
        assert!((p[2][0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn points_stay_in_the_cube() {
        let c = Point::from_vec(vec![1.0, -2.0, 3.0]);
        for p in halton_points(&c, 0.1, 100) {
            assert!((p - &c).amax() <= 0.1);
        }
    }
}
