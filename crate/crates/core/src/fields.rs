//! Periodic grid fields on the unit torus and the discrete operators acting on them.
//!
//! A [`GridField`] stores `N × N` nodal values `v[i][j]` at `(x_i, x_j) = (i/N, j/N)`,
//! row-major with `i` (the `x₁` index) as the slow axis. All index arithmetic is
//! cyclic modulo `N`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        assert!(n >= 1, "grid size must be positive");
        Self { n, values: vec![c; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "grid size must be positive");
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Self { n, values }
    }

    /// Samples `f(x₁, x₂)` at the grid nodes.
    pub fn sample(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let nf = n as f64;
        Self::from_fn(n, |i, j| f(i as f64 / nf, j as f64 / nf))
    }

    pub fn from_vec(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::SizeMismatch { left: n * n, right: values.len() });
        }
        Ok(Self { n, values })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Cyclic access with signed indices.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        self.get(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { n: self.n, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { n: self.n, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Forward difference in `x₁`: `(v[i+1,j] - v[i,j]) / Δx`, cyclic.
pub fn theta_x1(v: &GridField) -> GridField {
    let n = v.n() as isize;
    let inv_dx = v.n() as f64;
    GridField::from_fn(v.n(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        (v.at((i + 1) % n, j) - v.at(i, j)) * inv_dx
    })
}

/// Forward difference in `x₂`: `(v[i,j+1] - v[i,j]) / Δx`, cyclic.
pub fn theta_x2(v: &GridField) -> GridField {
    let n = v.n() as isize;
    let inv_dx = v.n() as f64;
    GridField::from_fn(v.n(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        (v.at(i, (j + 1) % n) - v.at(i, j)) * inv_dx
    })
}

/// `⟨v⟩_j = Σ_i Δx v[i,j]` for every `j`.
pub fn mean_x1(v: &GridField) -> Vec<f64> {
    let n = v.n();
    let dx = v.dx();
    (0..n).map(|j| (0..n).map(|i| v.get(i, j)).sum::<f64>() * dx).collect()
}

/// `max_{i,j} |v[i,j] - ⟨v⟩_j|`.
pub fn deviation_from_x1_mean(v: &GridField) -> f64 {
    let means = mean_x1(v);
    let n = v.n();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for (j, m) in means.iter().enumerate() {
            dev = dev.max((v.get(i, j) - m).abs());
        }
    }
    dev
}

pub fn linf(v: &GridField) -> f64 {
    v.values().iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `sqrt(Σ (Δx)² v²)`, the discrete L² norm on the torus.
pub fn l2_scaled(v: &GridField) -> f64 {
    let dx2 = v.dx() * v.dx();
    (v.values().iter().map(|x| x * x).sum::<f64>() * dx2).sqrt()
}

/// Solution pair `(ρ⁺, ρ⁻)` at time index `n`, with cached difference stencils.
///
/// The caches are always derived from the densities at construction; there is no
/// way to mutate the densities in place.
#[derive(Debug, Clone)]
pub struct State {
    n: usize,
    t: f64,
    rho_plus: GridField,
    rho_minus: GridField,
    theta_plus_x1: GridField,
    theta_minus_x1: GridField,
    theta_plus_x2: GridField,
    theta_minus_x2: GridField,
}

impl State {
    pub fn new(n: usize, t: f64, rho_plus: GridField, rho_minus: GridField) -> Result<Self> {
        rho_plus.check_same(&rho_minus)?;
        Ok(Self {
            n,
            t,
            theta_plus_x1: theta_x1(&rho_plus),
            theta_minus_x1: theta_x1(&rho_minus),
            theta_plus_x2: theta_x2(&rho_plus),
            theta_minus_x2: theta_x2(&rho_minus),
            rho_plus,
            rho_minus,
        })
    }

    pub fn step(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid_size(&self) -> usize {
        self.rho_plus.n()
    }

    pub fn rho_plus(&self) -> &GridField {
        &self.rho_plus
    }

    pub fn rho_minus(&self) -> &GridField {
        &self.rho_minus
    }

    pub fn theta_plus_x1(&self) -> &GridField {
        &self.theta_plus_x1
    }

    pub fn theta_minus_x1(&self) -> &GridField {
        &self.theta_minus_x1
    }

    pub fn theta_plus_x2(&self) -> &GridField {
        &self.theta_plus_x2
    }

    pub fn theta_minus_x2(&self) -> &GridField {
        &self.theta_minus_x2
    }

    /// `ρ⁺ - ρ⁻`.
    pub fn rho_diff(&self) -> GridField {
        self.rho_plus.sub(&self.rho_minus).expect("species share a grid")
    }

    /// `min over both species of θ_{x₁} + L`.
    pub fn theta_min_plus(&self, l: f64) -> f64 {
        self.theta_plus_x1.min().min(self.theta_minus_x1.min()) + l
    }

    /// Non-periodic lift `ρ[i,j] + L·i·Δx` for output only.
    pub fn lifted(&self, l: f64) -> (GridField, GridField) {
        let lift = |v: &GridField| {
            let dx = v.dx();
            GridField::from_fn(v.n(), |i, j| v.get(i, j) + l * i as f64 * dx)
        };
        (lift(&self.rho_plus), lift(&self.rho_minus))
    }
}

fn bilinear(v: &GridField, i: usize, j: usize, s: f64, r: f64) -> f64 {
    let n = v.n();
    let (ip, jp) = ((i + 1) % n, (j + 1) % n);
    s * r * v.get(ip, jp)
        + (1.0 - s) * r * v.get(i, jp)
        + s * (1.0 - r) * v.get(ip, j)
        + (1.0 - s) * (1.0 - r) * v.get(i, j)
}

/// Q¹ space-time reconstruction between two consecutive states.
///
/// Bilinear in `(x₁, x₂)` on the cell containing the point, linear in `t` between
/// `prev` and `next`. When both states share the same time the reconstruction is
/// purely spatial.
pub fn q1_eval(prev: &State, next: &State, t: f64, x1: f64, x2: f64) -> Result<(f64, f64)> {
    prev.rho_plus.check_same(&next.rho_plus)?;
    let (t0, t1) = (prev.t, next.t);
    if !(t >= t0 && t <= t1) {
        return Err(Error::TimeOutOfBracket { t, t0, t1 });
    }
    let tau = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };

    let n = prev.grid_size();
    let nf = n as f64;
    let x1 = x1.rem_euclid(1.0);
    let x2 = x2.rem_euclid(1.0);
    let i = ((x1 * nf).floor() as usize).min(n - 1);
    let j = ((x2 * nf).floor() as usize).min(n - 1);
    let s = (x1 - i as f64 / nf) * nf;
    let r = (x2 - j as f64 / nf) * nf;

    let eval = |a: &GridField, b: &GridField| {
        tau * bilinear(b, i, j, s, r) + (1.0 - tau) * bilinear(a, i, j, s, r)
    };
    Ok((eval(&prev.rho_plus, &next.rho_plus), eval(&prev.rho_minus, &next.rho_minus)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_field(n: usize, seed: u64) -> GridField {
        let mut s = seed;
        GridField::from_fn(n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn theta_of_constant_vanishes() {
        let v = GridField::constant(6, 3.25);
        assert!(theta_x1(&v).values().iter().all(|&x| x == 0.0));
        assert!(theta_x2(&v).values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn theta_seam_of_sawtooth() {
        let n = 8;
        let v = GridField::from_fn(n, |i, _| i as f64 / n as f64);
        let th = theta_x1(&v);
        for j in 0..n {
            for i in 0..n - 1 {
                assert!((th.get(i, j) - 1.0).abs() < 1e-12);
            }
            assert!((th.get(n - 1, j) + (n as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_telescopes_on_cycles() {
        let v = lcg_field(8, 7);
        let t1 = theta_x1(&v);
        let t2 = theta_x2(&v);
        for k in 0..8 {
            let row: f64 = (0..8).map(|i| t1.get(i, k)).sum();
            let col: f64 = (0..8).map(|j| t2.get(k, j)).sum();
            assert!(row.abs() < 1e-12 && col.abs() < 1e-12);
        }
    }

    #[test]
    fn mean_x1_cases() {
        let c = GridField::constant(5, -1.5);
        assert!(mean_x1(&c).iter().all(|&m| (m + 1.5).abs() < 1e-15));

        let alt = GridField::from_fn(6, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        assert!(mean_x1(&alt).iter().all(|&m| m.abs() < 1e-15));

        let v = lcg_field(7, 3);
        let means = mean_x1(&v);
        for (j, m) in means.iter().enumerate() {
            let mut direct = 0.0;
            for i in 0..7 {
                direct += v.get(i, j) / 7.0;
            }
            assert!((m - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn deviation_ignores_x2_profiles() {
        assert_eq!(deviation_from_x1_mean(&GridField::constant(4, 2.0)), 0.0);
        let h = GridField::from_fn(6, |_, j| (j as f64).sin());
        assert!(deviation_from_x1_mean(&h) < 1e-15);

        let v = lcg_field(6, 11);
        let shifted = v.add(&h).unwrap();
        assert!((deviation_from_x1_mean(&v) - deviation_from_x1_mean(&shifted)).abs() < 1e-14);
    }

    #[test]
    fn norms() {
        let z = GridField::zeros(4);
        assert_eq!((linf(&z), l2_scaled(&z)), (0.0, 0.0));
        let one = GridField::constant(4, 1.0);
        assert!((linf(&one) - 1.0).abs() < 1e-15 && (l2_scaled(&one) - 1.0).abs() < 1e-15);
        let chk = GridField::from_fn(6, |i, j| if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
        assert!((linf(&chk) - 1.0).abs() < 1e-15 && (l2_scaled(&chk) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn state_caches_match_recomputation() {
        let p = lcg_field(5, 1);
        let m = lcg_field(5, 2);
        let s = State::new(0, 0.0, p.clone(), m.clone()).unwrap();
        assert_eq!(s.theta_plus_x1(), &theta_x1(&p));
        assert_eq!(s.theta_minus_x2(), &theta_x2(&m));
        assert!(State::new(0, 0.0, p, GridField::zeros(4)).is_err());
    }

    #[test]
    fn lift_adds_linear_ramp() {
        let s = State::new(0, 0.0, GridField::zeros(4), GridField::zeros(4)).unwrap();
        let (lp, _) = s.lifted(2.0);
        assert!((lp.get(3, 1) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn q1_reproduces_nodes_and_rejects_out_of_bracket() {
        let a = State::new(0, 0.0, lcg_field(6, 4), lcg_field(6, 5)).unwrap();
        let b = State::new(1, 0.1, lcg_field(6, 6), lcg_field(6, 8)).unwrap();
        let (p, m) = q1_eval(&a, &b, 0.0, 2.0 / 6.0, 5.0 / 6.0).unwrap();
        assert!((p - a.rho_plus().get(2, 5)).abs() < 1e-14);
        assert!((m - a.rho_minus().get(2, 5)).abs() < 1e-14);
        let (p, _) = q1_eval(&a, &b, 0.1, 1.0 / 6.0, 0.0).unwrap();
        assert!((p - b.rho_plus().get(1, 0)).abs() < 1e-14);
        assert!(matches!(q1_eval(&a, &b, 0.2, 0.0, 0.0), Err(Error::TimeOutOfBracket { .. })));
    }

    #[test]
    fn q1_midpoint_on_linear_x2_profile() {
        // Linear in x2 away from the seam: v = j/N for j < N.
        let n = 8;
        let v = GridField::from_fn(n, |_, j| j as f64 / n as f64);
        let s = State::new(0, 0.0, v.clone(), v).unwrap();
        let (p, _) = q1_eval(&s, &s, 0.0, 0.3, 2.5 / 8.0).unwrap();
        assert!((p - 0.5 * (2.0 / 8.0 + 3.0 / 8.0)).abs() < 1e-14);
    }
}
