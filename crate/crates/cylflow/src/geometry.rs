//! The hyperbolic collar family.
//!
//! A collar of central geodesic length `ell` is the cylinder
//! `[-Y^-, Y^+] x S^1` with conformal factor
//! `rho(s) = (ell/2pi) / cos((ell/2pi) s)` and half-lengths
//! `Y^± = (2pi/ell)(pi/2 - arctan(c^± ell))`.

use crate::error::{Error, Result};
use crate::quad::{simpson, trapezoid_periodic};
use crate::scalar::Real;

/// Collar domain descriptor with its discretization.
///
/// The grid is uniform in the normalized coordinate `sigma in [-1, 1]`
/// (affine in `s`, so also uniform in `s`) and periodic uniform in `theta`.
#[derive(Debug, Clone)]
pub struct HyperbolicCylinder<T: Real> {
    ell: T,
    c_minus: T,
    c_plus: T,
    y_minus: T,
    y_plus: T,
    n_s: usize,
    n_theta: usize,
}

impl<T: Real> HyperbolicCylinder<T> {
    /// Build from `(ell, c^-, c^+)`; half-lengths are derived.
    pub fn new(ell: T, c_minus: T, c_plus: T, n_s: usize, n_theta: usize) -> Result<Self> {
        if !(ell > T::zero()) || !(c_minus > T::zero()) || !(c_plus > T::zero()) {
            return Err(Error::Validation(
                "ell and end constants must be positive".into(),
            ));
        }
        Self::check_grid(n_s, n_theta)?;
        let y_minus = collar_half_length(ell, c_minus);
        let y_plus = collar_half_length(ell, c_plus);
        Ok(Self {
            ell,
            c_minus,
            c_plus,
            y_minus,
            y_plus,
            n_s,
            n_theta,
        })
    }

    /// Build from explicit half-lengths; the end constants are recovered
    /// from the defining relation `Y = (2pi/ell)(pi/2 - arctan(c ell))`.
    pub fn with_half_lengths(
        ell: T,
        y_minus: T,
        y_plus: T,
        n_s: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if !(ell > T::zero()) || !(y_minus > T::zero()) || !(y_plus > T::zero()) {
            return Err(Error::Validation("ell and half-lengths must be positive".into()));
        }
        Self::check_grid(n_s, n_theta)?;
        let a = ell / T::TAU();
        for &y in &[y_minus, y_plus] {
            if !(a * y < T::FRAC_PI_2()) {
                return Err(Error::Validation(
                    "half-length reaches the pole of the conformal factor".into(),
                ));
            }
        }
        let c_of = |y: T| (T::FRAC_PI_2() - a * y).tan() / ell;
        Ok(Self {
            ell,
            c_minus: c_of(y_minus),
            c_plus: c_of(y_plus),
            y_minus,
            y_plus,
            n_s,
            n_theta,
        })
    }

    fn check_grid(n_s: usize, n_theta: usize) -> Result<()> {
        if n_s < 17 || n_s % 2 == 0 {
            return Err(Error::Validation("n_s must be odd and >= 17".into()));
        }
        if n_theta < 16 || n_theta % 2 == 1 {
            return Err(Error::Validation("n_theta must be even and >= 16".into()));
        }
        Ok(())
    }

    pub fn ell(&self) -> T {
        self.ell
    }

    pub fn c_minus(&self) -> T {
        self.c_minus
    }

    pub fn c_plus(&self) -> T {
        self.c_plus
    }

    pub fn y_minus(&self) -> T {
        self.y_minus
    }

    pub fn y_plus(&self) -> T {
        self.y_plus
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Total coordinate length `Y^- + Y^+`.
    pub fn length(&self) -> T {
        self.y_minus + self.y_plus
    }

    pub fn h_s(&self) -> T {
        self.length() / T::of((self.n_s - 1) as f64)
    }

    pub fn h_theta(&self) -> T {
        T::TAU() / T::of(self.n_theta as f64)
    }

    pub fn s_at(&self, i: usize) -> T {
        -self.y_minus + self.h_s() * T::of(i as f64)
    }

    pub fn theta_at(&self, j: usize) -> T {
        self.h_theta() * T::of(j as f64)
    }

    pub fn s_grid(&self) -> Vec<T> {
        (0..self.n_s).map(|i| self.s_at(i)).collect()
    }

    pub fn theta_grid(&self) -> Vec<T> {
        (0..self.n_theta).map(|j| self.theta_at(j)).collect()
    }

    /// Conformal factor at axial coordinate `s`.
    pub fn profile(&self, s: T) -> Result<T> {
        collar_profile(self, s)
    }

    /// Returns a new descriptor with updated `ell` and re-derived half
    /// lengths (end constants kept fixed). Used by the metric step.
    pub fn with_ell(&self, ell: T) -> Result<Self> {
        Self::new(ell, self.c_minus, self.c_plus, self.n_s, self.n_theta)
    }

    /// Returns a new descriptor with a different s-resolution.
    pub fn with_n_s(&self, n_s: usize) -> Result<Self> {
        Self::new(self.ell, self.c_minus, self.c_plus, n_s, self.n_theta)
    }
}

/// `Y = (2pi/ell)(pi/2 - arctan(c ell))`.
pub fn collar_half_length<T: Real>(ell: T, c: T) -> T {
    T::TAU() / ell * (T::FRAC_PI_2() - (c * ell).atan())
}

/// `rho(s) = (ell/2pi) sec((ell/2pi) s)`, positive on the collar band.
pub fn collar_profile<T: Real>(cyl: &HyperbolicCylinder<T>, s: T) -> Result<T> {
    let slack = T::of(1e-12) * (T::one() + cyl.length());
    if s < -cyl.y_minus() - slack || s > cyl.y_plus() + slack {
        return Err(Error::Domain(format!(
            "s = {s} outside the collar band [{}, {}]",
            -cyl.y_minus().to_f64_lossy(),
            cyl.y_plus().to_f64_lossy()
        )));
    }
    let a = cyl.ell() / T::TAU();
    let c = (a * s).cos();
    if !(c > T::zero()) {
        return Err(Error::Domain("conformal factor pole reached".into()));
    }
    Ok(a / c)
}

/// `|| Re(dz^2) ||_{L^2(C,g)} = sqrt( int int 2 rho^{-2} dtheta ds )`,
/// evaluated in closed form via the antiderivative of `cos^2`.
pub fn quad_norm_re_dz2<T: Real>(cyl: &HyperbolicCylinder<T>) -> T {
    let a = cyl.ell() / T::TAU();
    let half = T::of(0.5);
    let anti = |s: T| half * s + (T::of(2.0) * a * s).sin() / (T::of(4.0) * a);
    let int_cos2 = anti(cyl.y_plus()) - anti(-cyl.y_minus());
    let norm_sq = T::of(2.0) * T::TAU() * (T::TAU() / cyl.ell()).powi(2) * int_cos2;
    norm_sq.sqrt()
}

/// Same norm by grid quadrature (trapezoid in theta, Simpson in s); the
/// independent route used to validate the closed form.
pub fn quad_norm_re_dz2_quadrature<T: Real>(cyl: &HyperbolicCylinder<T>) -> Result<T> {
    let rows: Result<Vec<T>> = cyl
        .s_grid()
        .iter()
        .map(|&s| {
            let rho = cyl.profile(s)?;
            let row: Vec<T> = (0..cyl.n_theta())
                .map(|_| T::of(2.0) / (rho * rho))
                .collect();
            Ok(trapezoid_periodic(&row))
        })
        .collect();
    Ok(simpson(&rows?, -cyl.y_minus(), cyl.y_plus()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        num / den
    }

    #[test]
    fn profile_at_center_is_ell_over_2pi() {
        let cyl =
            HyperbolicCylinder::new(std::f64::consts::TAU, 1.0, 1.0, 33, 32).unwrap();
        assert!((cyl.profile(0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profile_is_even() {
        let cyl = HyperbolicCylinder::new(0.3f64, 1.0, 1.0, 33, 32).unwrap();
        for &s in &[0.1, 1.0, 5.0] {
            let p = cyl.profile(s).unwrap();
            let m = cyl.profile(-s).unwrap();
            assert!((p - m).abs() < 1e-15 * p);
        }
    }

    #[test]
    fn profile_at_end_matches_trig_identity() {
        // cos(arctan(x)) = 1/sqrt(1+x^2), so rho(Y) = (ell/2pi) sqrt(1 + (c ell)^-2) * ...
        // evaluated directly: rho(Y) = (ell/2pi) / sin(arctan(c ell)) with
        // sin(arctan(x)) = x / sqrt(1+x^2).
        let (ell, c) = (0.1f64, 1.0f64);
        let cyl = HyperbolicCylinder::new(ell, c, c, 33, 32).unwrap();
        let a = ell / std::f64::consts::TAU;
        let x = c * ell;
        // cos(a Y) = cos(pi/2 - arctan(x)) = sin(arctan(x)) = x/sqrt(1+x^2)
        let expected = a * (1.0 + x * x).sqrt() / x;
        let got = cyl.profile(cyl.y_plus()).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn profile_outside_band_is_domain_error() {
        let cyl = HyperbolicCylinder::new(0.5, 1.0, 1.0, 33, 32).unwrap();
        assert!(cyl.profile(cyl.y_plus() * 1.5).is_err());
    }

    #[test]
    fn half_length_limits_and_value() {
        // c -> 0 gives pi^2/ell
        let ell = 0.7f64;
        let y = collar_half_length(ell, 1e-14);
        assert!((y - std::f64::consts::PI.powi(2) / ell).abs() < 1e-9);
        // ell = 1, c = 1 gives pi^2/2
        let y11 = collar_half_length(1.0f64, 1.0);
        assert!((y11 - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
        // strictly decreasing in c
        let mut prev = collar_half_length(1.0f64, 0.1);
        for &c in &[0.5, 1.0, 2.0, 5.0] {
            let cur = collar_half_length(1.0f64, c);
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn quad_norm_closed_form_matches_quadrature() {
        let cyl = HyperbolicCylinder::new(0.05f64, 1.0, 1.0, 2001, 16).unwrap();
        let closed = quad_norm_re_dz2(&cyl);
        let quad = quad_norm_re_dz2_quadrature(&cyl).unwrap();
        assert!(((closed - quad) / closed).abs() < 1e-8);
    }

    #[test]
    fn quad_norm_scales_like_ell_to_minus_three_halves() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..9 {
            let ell = 1e-3 * 10f64.powf(k as f64 / 4.0);
            let cyl = HyperbolicCylinder::new(ell, 1.0, 1.0, 33, 16).unwrap();
            xs.push(ell.ln());
            ys.push(quad_norm_re_dz2(&cyl).ln());
        }
        let m = slope(&xs, &ys);
        assert!((m + 1.5).abs() < 0.02, "slope {m}");
    }

    #[test]
    fn quad_norm_decreases_with_larger_end_constants() {
        let lo = HyperbolicCylinder::new(0.3f64, 0.5, 0.5, 33, 16).unwrap();
        let hi = HyperbolicCylinder::new(0.3f64, 2.0, 2.0, 33, 16).unwrap();
        assert!(quad_norm_re_dz2(&hi) < quad_norm_re_dz2(&lo));
    }

    #[test]
    fn integral_of_rho_squared_identity() {
        // int_0^s rho^2 dt = (ell/2pi) tan((ell/2pi) s) <= rho(s)
        let cyl = HyperbolicCylinder::new(0.8f64, 1.0, 1.0, 33, 16).unwrap();
        let a = cyl.ell() / std::f64::consts::TAU;
        for &s in &[0.5, 2.0, cyl.y_plus() * 0.95] {
            let n = 4001;
            let vals: Vec<f64> = (0..n)
                .map(|k| {
                    let t = s * k as f64 / (n - 1) as f64;
                    cyl.profile(t).unwrap().powi(2)
                })
                .collect();
            let quad = crate::quad::simpson(&vals, 0.0, s);
            let closed = a * (a * s).tan();
            assert!((quad - closed).abs() < 1e-8 * closed.max(1.0));
            assert!(closed <= cyl.profile(s).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fitted_scaling_constants_stable() {
        // quad norm * ell^{3/2} stays within 10% across the ell range
        let mut ratios = Vec::new();
        for k in 0..9 {
            let ell = 1e-3 * 10f64.powf(k as f64 / 4.0);
            let cyl = HyperbolicCylinder::new(ell, 1.0, 1.0, 33, 16).unwrap();
            ratios.push(quad_norm_re_dz2(&cyl) * ell.powf(1.5));
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.10, "ratio spread {}", max / min);
    }

    #[test]
    fn grid_validation() {
        assert!(HyperbolicCylinder::new(1.0f64, 1.0, 1.0, 16, 32).is_err());
        assert!(HyperbolicCylinder::new(1.0f64, 1.0, 1.0, 33, 15).is_err());
        assert!(HyperbolicCylinder::new(-1.0f64, 1.0, 1.0, 33, 32).is_err());
    }
}
