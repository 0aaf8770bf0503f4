#![allow(dead_code)]

use std::f64::consts::PI;

use dislocation_core::GridField;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> GridField {
    GridField::from_fn(n, |_, _| rng.gen_range(-amp..amp))
}

/// Sum of a few random low modes `cos`/`sin(2π(k₁x₁ + k₂x₂))`, `|k_i| ≤ 1`.
pub fn random_trig(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> GridField {
    let mut terms = Vec::new();
    for k1 in -1i64..=1 {
        for k2 in -1i64..=1 {
            terms.push((k1, k2, rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)));
        }
    }
    GridField::sample(n, |x1, x2| {
        terms
            .iter()
            .map(|&(k1, k2, a, b)| {
                let arg = 2.0 * PI * (k1 as f64 * x1 + k2 as f64 * x2);
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    })
}

/// `N⁻² Σ v e^{−2πi m·n/N}` by direct quadruple loop, indexed `m1 * N + m2`.
pub fn brute_dft(v: &GridField) -> Vec<Complex64> {
    let n = v.n();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for m1 in 0..n {
        for m2 in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let ph = -2.0 * PI * ((m1 * i + m2 * j) % n) as f64 / n as f64;
                    acc += v.get(i, j) * Complex64::from_polar(1.0, ph);
                }
            }
            out[m1 * n + m2] = acc / (n * n) as f64;
        }
    }
    out
}

/// `Σ_m c_m e^{2πi m·n/N}` by direct loop.
pub fn brute_idft(c: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for m1 in 0..n {
                for m2 in 0..n {
                    let ph = 2.0 * PI * ((m1 * i + m2 * j) % n) as f64 / n as f64;
                    acc += c[m1 * n + m2] * Complex64::from_polar(1.0, ph);
                }
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// `Σ_{ℓ,r} (Δx)² v[ℓ,r] w[i−ℓ, j−r]`.
pub fn brute_conv(v: &GridField, w: &GridField) -> GridField {
    let n = v.n();
    let dx2 = 1.0 / (n * n) as f64;
    GridField::from_fn(n, |i, j| {
        let mut acc = 0.0;
        for l in 0..n {
            for r in 0..n {
                acc += v.get(l, r) * w.get((i + n - l) % n, (j + n - r) % n);
            }
        }
        acc * dx2
    })
}

pub fn max_abs(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `m` mapped into `(−N/2, N/2]`, written out independently of the library.
pub fn signed(m: usize, n: usize) -> i64 {
    if 2 * m > n {
        m as i64 - n as i64
    } else {
        m as i64
    }
}

pub fn kernel(m1: i64, m2: i64) -> f64 {
    if m1 == 0 || m2 == 0 {
        return 0.0;
    }
    let (a, b) = ((m1 * m1) as f64, (m2 * m2) as f64);
    a * b / ((a + b) * (a + b))
}

pub fn weight(p: i64, order: usize) -> f64 {
    (1.0 - p.abs() as f64 / order as f64).max(0.0)
}

/// `σ_M(x)` as a real cosine sum over `|p_i| < M`.
pub fn sigma_point(order: usize, x1: f64, x2: f64) -> f64 {
    let mm = order as i64;
    let mut acc = 0.0;
    for p1 in -mm + 1..mm {
        for p2 in -mm + 1..mm {
            let c = weight(p1, order) * weight(p2, order) * kernel(p1, p2);
            acc += c * (2.0 * PI * (p1 as f64 * x1 + p2 as f64 * x2)).cos();
        }
    }
    acc
}

/// `ρ^{n+1} = ρⁿ + Δt[(−a)₊(θ_{i+1/2}+L) − (−a)₋(θ_{i−1/2}+L)]` for `ρ⁺`, mirrored for `ρ⁻`.
pub fn scalar_upwind(rho: &[f64], n: usize, dt: f64, l: f64, lam: f64) -> Vec<f64> {
    let dx = 1.0 / n as f64;
    let (lp, lm) = (lam.max(0.0), (-lam).max(0.0));
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let at = |ii: usize| rho[(ii % n) * n + j];
            let fwd = (at(i + 1) - at(i)) / dx + l;
            let bwd = (at(i) - at(i + n - 1)) / dx + l;
            out[i * n + j] = at(i) + dt * (lp * fwd - lm * bwd);
        }
    }
    out
}
