//! Seeded random streams and the random objects used across experiments.
//!
//! Every random draw in the crate comes from a [`StreamRng`] derived from a master
//! seed and a tuple of coordinates, so the order in which work items are scheduled
//! never changes what they draw.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, CVector, C64};

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a coordinate tuple into a single stream id.
pub fn stream_id(coords: &[u64]) -> u64 {
    coords.iter().fold(0x5151_F00D_u64, |acc, &x| mix64(acc ^ mix64(x)))
}

/// Independent ChaCha stream for `(seed, coords)`.
pub fn stream_rng(seed: u64, coords: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(coords));
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(standard_normal(rng), standard_normal(rng))
}

/// Haar-random pure state as a normalized complex Gaussian vector.
pub fn haar_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| complex_normal(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal
/// pulled back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g: CMatrix = DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Point drawn uniformly from the probability simplex with `k` vertices, using the
/// gaps between sorted uniforms.
pub fn uniform_simplex<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..k.saturating_sub(1)).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(k);
    let mut prev = 0.0;
    for &x in &cuts {
        out.push(x - prev);
        prev = x;
    }
    out.push(1.0 - prev);
    out
}

/// Uniform point on the unit sphere from a normalized Gaussian 3-vector.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [standard_normal(rng), standard_normal(rng), standard_normal(rng)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_error;

    #[test]
    fn streams_depend_only_on_seed_and_coordinates() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, &[1, 2]).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream_rng(7, &[1, 2]).random()).collect();
        assert_eq!(a, b);
        let x: u64 = stream_rng(7, &[1, 2]).random();
        let y: u64 = stream_rng(7, &[2, 1]).random();
        assert_ne!(x, y);
    }

    #[test]
    fn haar_objects_are_normalized() {
        let mut rng = stream_rng(1, &[0]);
        assert!((haar_ket(4, &mut rng).norm() - 1.0).abs() < 1e-12);
        assert!(unitarity_error(&haar_unitary(4, &mut rng)) < 1e-12);
    }

    #[test]
    fn simplex_and_sphere_draws_are_valid() {
        let mut rng = stream_rng(3, &[]);
        for _ in 0..100 {
            let p = uniform_simplex(3, &mut rng);
            assert!(p.iter().all(|&x| x >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let n = uniform_sphere(&mut rng);
            assert!((n.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
