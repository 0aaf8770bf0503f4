//! Kernel Fourier coefficients, Fejér weights, the regularized kernel field and
//! the normalized two-dimensional DFT.
//!
//! The DFT convention is `c_m(v) = N⁻² Σ_n v_n e^{-2πi m·n/N}` with `m` stored in
//! `{0, …, N-1}²`. Signed frequencies are only produced on demand by
//! [`signed_frequency`].

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::GridField;

/// Tolerance on the imaginary residue of a synthesized real field.
pub const IMAG_TOL: f64 = 1e-10;
/// Slack below zero tolerated for kernel DFT coefficients.
pub const NONNEG_SLACK: f64 = 1e-12;

/// Fourier coefficient `m₁²m₂²/|m|⁴` of the singular kernel, zero at the origin.
pub fn kernel_coeff(m1: i64, m2: i64) -> f64 {
    if m1 == 0 || m2 == 0 {
        return 0.0;
    }
    let a = (m1 * m1) as f64;
    let b = (m2 * m2) as f64;
    a * b / ((a + b) * (a + b))
}

/// Triangular Fejér multiplier `(1 - |p|/M)₊`.
pub fn fejer_weight(p: i64, order: usize) -> f64 {
    let m = order as i64;
    if p.abs() < m {
        1.0 - p.abs() as f64 / order as f64
    } else {
        0.0
    }
}

/// Fourier coefficient of the Fejér-regularized kernel.
pub fn sigma_coeff(m1: i64, m2: i64, order: usize) -> f64 {
    fejer_weight(m1, order) * fejer_weight(m2, order) * kernel_coeff(m1, m2)
}

/// Maps a stored DFT index to `(-N/2, N/2]`; the Nyquist index of an even grid
/// maps to `+N/2`.
pub fn signed_frequency(m: usize, n: usize) -> i64 {
    if 2 * m > n {
        m as i64 - n as i64
    } else {
        m as i64
    }
}

/// Nodal values of the regularized kernel `σ_M` on an `N × N` grid.
#[derive(Debug, Clone)]
pub struct SigmaField {
    order: usize,
    values: GridField,
}

impl SigmaField {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &GridField {
        &self.values
    }
}

fn check_order(order: usize, n: usize) -> Result<()> {
    if order == 0 || order > n {
        return Err(Error::InvalidParams(format!(
            "kernel order must satisfy 1 <= M <= N (got M={order}, N={n})"
        )));
    }
    Ok(())
}

/// Synthesizes `σ_M(x_i, x_j) = Σ_{|m₁|,|m₂|<M} c_m(σ_M) e^{2πi(m₁x_i + m₂x_j)}`
/// by direct summation over the surviving frequencies.
///
/// The double sum is separated into a pass over `m₂` followed by a pass over `m₁`,
/// which keeps the cost at `O(M²N + MN²)`.
pub fn build_sigma_field(order: usize, n: usize) -> Result<SigmaField> {
    check_order(order, n)?;
    let k = order as i64 - 1;
    let width = (2 * k + 1) as usize;
    // phase[p + k][i] = e^{2πi p i / N}
    let phase: Vec<Vec<Complex64>> = (-k..=k)
        .map(|p| {
            (0..n)
                .map(|i| {
                    let arg = 2.0 * std::f64::consts::PI * (p * i as i64).rem_euclid(n as i64) as f64
                        / n as f64;
                    Complex64::from_polar(1.0, arg)
                })
                .collect()
        })
        .collect();

    // partial[p1][j] = Σ_{p2} c(p1,p2) e^{2πi p2 x_j}
    let mut partial = vec![vec![Complex64::new(0.0, 0.0); n]; width];
    for (a, p1) in (-k..=k).enumerate() {
        for (b, p2) in (-k..=k).enumerate() {
            let c = sigma_coeff(p1, p2, order);
            if c == 0.0 {
                continue;
            }
            for (acc, ph) in partial[a].iter_mut().zip(&phase[b]) {
                *acc += ph * c;
            }
        }
    }

    let mut values = Vec::with_capacity(n * n);
    let mut residue = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let mut z = Complex64::new(0.0, 0.0);
            for a in 0..width {
                z += phase[a][i] * partial[a][j];
            }
            residue = residue.max(z.im.abs());
            values.push(z.re);
        }
    }
    if residue > IMAG_TOL {
        return Err(Error::ImagResidue { residue });
    }
    Ok(SigmaField { order, values: GridField::from_vec(n, values)? })
}

/// Complex coefficients over `m ∈ {0,…,N-1}²`, row-major in `m₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectrumField {
    pub fn from_vec(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != n * n {
            return Err(Error::SizeMismatch { left: n * n, right: coeffs.len() });
        }
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn get(&self, m1: usize, m2: usize) -> Complex64 {
        self.coeffs[m1 * self.n + m2]
    }

    /// Coefficient at a signed (or any integer) frequency, reduced modulo `N`.
    pub fn at(&self, m1: i64, m2: i64) -> Complex64 {
        let n = self.n as i64;
        self.get(m1.rem_euclid(n) as usize, m2.rem_euclid(n) as usize)
    }

    /// Iterates `(m₁, m₂, c_m)` over stored indices.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let n = self.n;
        self.coeffs.iter().enumerate().map(move |(k, &c)| (k / n, k % n, c))
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { left: self.n, right: other.n });
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).collect();
        Ok(Self { n: self.n, coeffs })
    }

    pub fn map_indexed(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let coeffs = self.iter().map(|(a, b, c)| f(a, b, c)).collect();
        Self { n: self.n, coeffs }
    }
}

/// Planned forward/inverse 2-D transforms for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "grid size must be positive");
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        plan.process(buf);
        transpose(buf, self.n);
        plan.process(buf);
        transpose(buf, self.n);
    }

    /// `c_m = N⁻² Σ_n v_n e^{-2πi m·n/N}`.
    pub fn forward(&self, v: &GridField) -> Result<SpectrumField> {
        self.check(v.n())?;
        let mut buf: Vec<Complex64> = v.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.run(&self.forward, &mut buf);
        let scale = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Ok(SpectrumField { n: self.n, coeffs: buf })
    }

    /// `v_n = Σ_m c_m e^{2πi m·n/N}` as complex values.
    pub fn inverse_complex(&self, c: &SpectrumField) -> Result<Vec<Complex64>> {
        self.check(c.n())?;
        let mut buf = c.coeffs.clone();
        self.run(&self.inverse, &mut buf);
        Ok(buf)
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, c: &SpectrumField) -> Result<GridField> {
        let buf = self.inverse_complex(c)?;
        GridField::from_vec(self.n, buf.into_iter().map(|z| z.re).collect())
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::SizeMismatch { left: self.n, right: n });
        }
        Ok(())
    }
}

pub fn dft2(v: &GridField) -> SpectrumField {
    Fft2::new(v.n()).forward(v).expect("plan matches field size")
}

pub fn idft2(c: &SpectrumField) -> GridField {
    Fft2::new(c.n()).inverse(c).expect("plan matches spectrum size")
}

/// `out[i,j] = Σ_{ℓ,r} (Δx)² v[ℓ,r] w[i-ℓ, j-r]`, computed spectrally.
pub fn convolve_scaled(v: &GridField, w: &GridField) -> Result<GridField> {
    v.check_same(w)?;
    let fft = Fft2::new(v.n());
    let c = fft.forward(v)?.product(&fft.forward(w)?)?;
    fft.inverse(&c)
}

/// DFT of the sampled kernel field, checked to be real and nonnegative.
pub fn sigma_dft_coeffs(order: usize, n: usize) -> Result<SpectrumField> {
    let sigma = build_sigma_field(order, n)?;
    sigma_spectrum(&sigma)
}

/// Same as [`sigma_dft_coeffs`] for an already synthesized kernel field.
pub fn sigma_spectrum(sigma: &SigmaField) -> Result<SpectrumField> {
    let spec = dft2(sigma.values());
    for (m1, m2, c) in spec.iter() {
        if c.im.abs() > IMAG_TOL {
            return Err(Error::ImagResidue { residue: c.im.abs() });
        }
        if c.re < -NONNEG_SLACK {
            return Err(Error::NegativeCoeff { m1, m2, value: c.re });
        }
    }
    Ok(spec)
}
