//! Independent reference computations used to cross-check the engines.
//!
//! Nothing here shares code with the PDE or tree engines: the quadrature
//! rule integrates against the exact Gaussian density, and the RNG is a
//! self-contained SplitMix64 so that randomized checks are reproducible
//! byte-for-byte on every platform and toolchain.

/// Gauss-Hermite nodes and weights for `integral of exp(-x^2) f(x) dx`.
///
/// Newton iteration on the orthonormal Hermite recurrence with the classical
/// starting guesses; accurate to close to machine precision for the node
/// counts used here (<= 128).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "need at least two quadrature nodes");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..(n + 1) / 2 {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// `E[f(mean + sqrt(variance) Z)]` for standard normal `Z`, by 64-node
/// Gauss-Hermite quadrature. Exact for polynomials up to degree 127.
pub fn gaussian_expectation(mut f: impl FnMut(f64) -> f64, mean: f64, variance: f64) -> f64 {
    assert!(variance >= 0.0);
    if variance == 0.0 {
        return f(mean);
    }
    let (nodes, weights) = gauss_hermite(64);
    let scale = (2.0 * variance).sqrt();
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        sum += w * f(mean + scale * x);
    }
    sum / std::f64::consts::PI.sqrt()
}

/// SplitMix64: tiny, stable, seedable generator for randomized checks.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform01() * n as f64) as usize % n
    }
}
