//! Grid-sampled maps from the cylinder into R^n and the scalar
//! functionals driving the flow: Dirichlet energy, tension field,
//! mean-value profile, angular energy.

use std::sync::Arc;

use ndarray::{Array2, Array3};
use rustfft::{Fft, FftPlanner};

use crate::curves::BoundaryParamField;
use crate::error::{Error, Result};
use crate::geometry::HyperbolicCylinder;
use crate::quad::{simpson, simpson_weight, trapezoid_periodic};
use crate::scalar::{Cx, Real};

/// A map u: cylinder -> R^n sampled on the (s, theta) grid, with optional
/// boundary curve-parameter fields on the constrained ends.
#[derive(Debug, Clone)]
pub struct SurfaceMap<T: Real> {
    /// n_s x n_theta x dim.
    pub values: Array3<T>,
    pub cyl: HyperbolicCylinder<T>,
    pub boundary_minus: Option<BoundaryParamField<T>>,
    pub boundary_plus: Option<BoundaryParamField<T>>,
}

impl<T: Real> SurfaceMap<T> {
    pub fn from_fn(
        cyl: HyperbolicCylinder<T>,
        dim: usize,
        f: impl Fn(T, T) -> Vec<T>,
    ) -> Self {
        let mut values = Array3::zeros((cyl.n_s(), cyl.n_theta(), dim));
        for i in 0..cyl.n_s() {
            let s = cyl.s_at(i);
            for j in 0..cyl.n_theta() {
                let v = f(s, cyl.theta_at(j));
                debug_assert_eq!(v.len(), dim);
                for d in 0..dim {
                    values[[i, j, d]] = v[d];
                }
            }
        }
        Self {
            values,
            cyl,
            boundary_minus: None,
            boundary_plus: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("map contains non-finite values".into()));
        }
        Ok(())
    }

    /// Second-order s-derivative (central interior, one-sided ends).
    pub fn d_s(&self) -> Array3<T> {
        let (n_s, n_t, dim) = self.values.dim();
        let h = self.cyl.h_s();
        let two_h = T::of(2.0) * h;
        let mut out = Array3::zeros((n_s, n_t, dim));
        for j in 0..n_t {
            for d in 0..dim {
                for i in 1..n_s - 1 {
                    out[[i, j, d]] =
                        (self.values[[i + 1, j, d]] - self.values[[i - 1, j, d]]) / two_h;
                }
                out[[0, j, d]] = (-T::of(3.0) * self.values[[0, j, d]]
                    + T::of(4.0) * self.values[[1, j, d]]
                    - self.values[[2, j, d]])
                    / two_h;
                out[[n_s - 1, j, d]] = (T::of(3.0) * self.values[[n_s - 1, j, d]]
                    - T::of(4.0) * self.values[[n_s - 2, j, d]]
                    + self.values[[n_s - 3, j, d]])
                    / two_h;
            }
        }
        out
    }

    /// Spectral theta-derivative of the given order (1 or 2).
    pub fn d_theta(&self, order: u32) -> Array3<T> {
        spectral_theta_derivative(&self.values, order)
    }

    /// Flat Laplacian u_ss + u_thetatheta (s part central; boundary rows
    /// filled with one-sided second differences for diagnostics only).
    pub fn laplacian_flat(&self) -> Array3<T> {
        let (n_s, n_t, dim) = self.values.dim();
        let h2 = self.cyl.h_s() * self.cyl.h_s();
        let mut out = self.d_theta(2);
        for j in 0..n_t {
            for d in 0..dim {
                for i in 1..n_s - 1 {
                    out[[i, j, d]] += (self.values[[i + 1, j, d]]
                        - T::of(2.0) * self.values[[i, j, d]]
                        + self.values[[i - 1, j, d]])
                        / h2;
                }
                // one-sided second difference at the boundary rows
                out[[0, j, d]] += (T::of(2.0) * self.values[[0, j, d]]
                    - T::of(5.0) * self.values[[1, j, d]]
                    + T::of(4.0) * self.values[[2, j, d]]
                    - self.values[[3, j, d]])
                    / h2;
                out[[n_s - 1, j, d]] += (T::of(2.0) * self.values[[n_s - 1, j, d]]
                    - T::of(5.0) * self.values[[n_s - 2, j, d]]
                    + T::of(4.0) * self.values[[n_s - 3, j, d]]
                    - self.values[[n_s - 4, j, d]])
                    / h2;
            }
        }
        out
    }
}

/// Spectral differentiation along the periodic axis (axis 1).
pub fn spectral_theta_derivative<T: Real>(values: &Array3<T>, order: u32) -> Array3<T> {
    let (n_s, n_t, dim) = values.dim();
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<T>> = planner.plan_fft_forward(n_t);
    let inv: Arc<dyn Fft<T>> = planner.plan_fft_inverse(n_t);
    let mut out = Array3::zeros((n_s, n_t, dim));
    let mut buf: Vec<Cx<T>> = vec![Cx::new(T::zero(), T::zero()); n_t];
    let scale = T::one() / T::of(n_t as f64);
    for i in 0..n_s {
        for d in 0..dim {
            for j in 0..n_t {
                buf[j] = Cx::new(values[[i, j, d]], T::zero());
            }
            fwd.process(&mut buf);
            for (k, c) in buf.iter_mut().enumerate() {
                let ks = signed_mode(k, n_t);
                let kf = T::of(ks as f64);
                *c = match order {
                    1 => {
                        // Nyquist mode has no well-defined odd derivative
                        if n_t % 2 == 0 && k == n_t / 2 {
                            Cx::new(T::zero(), T::zero())
                        } else {
                            Cx::new(T::zero(), kf) * *c
                        }
                    }
                    2 => Cx::new(-kf * kf, T::zero()) * *c,
                    _ => panic!("derivative order must be 1 or 2"),
                };
            }
            inv.process(&mut buf);
            for j in 0..n_t {
                out[[i, j, d]] = buf[j].re * scale;
            }
        }
    }
    out
}

fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Dirichlet energy in the flat-metric form
/// `E = 1/2 int int (|u_s|^2 + |u_theta|^2) dtheta ds`
/// (exact for any conformal factor by conformal invariance).
pub fn energy<T: Real>(map: &SurfaceMap<T>) -> T {
    let us = map.d_s();
    let ut = map.d_theta(1);
    let (n_s, n_t, dim) = map.values.dim();
    let rows: Vec<T> = (0..n_s)
        .map(|i| {
            let row: Vec<T> = (0..n_t)
                .map(|j| {
                    (0..dim).fold(T::zero(), |acc, d| {
                        acc + us[[i, j, d]] * us[[i, j, d]] + ut[[i, j, d]] * ut[[i, j, d]]
                    })
                })
                .collect();
            trapezoid_periodic(&row)
        })
        .collect();
    T::of(0.5) * simpson(&rows, -map.cyl.y_minus(), map.cyl.y_plus())
}

/// Tension field `rho^{-2} (u_ss + u_thetatheta)` and its L^2(C, g) norm
/// over the interior rows (the metric weights collapse to a single
/// rho^{-2} inside the norm integral).
pub fn tension<T: Real>(map: &SurfaceMap<T>) -> (Array3<T>, T) {
    let lap = map.laplacian_flat();
    let (n_s, n_t, dim) = map.values.dim();
    let mut field = Array3::zeros((n_s, n_t, dim));
    for i in 0..n_s {
        let rho = map.cyl.profile(map.cyl.s_at(i)).expect("grid s in band");
        let w = T::one() / (rho * rho);
        for j in 0..n_t {
            for d in 0..dim {
                field[[i, j, d]] = w * lap[[i, j, d]];
            }
        }
    }
    // norm over interior rows only (odd count since n_s is odd)
    let rows: Vec<T> = (1..n_s - 1)
        .map(|i| {
            let rho = map.cyl.profile(map.cyl.s_at(i)).expect("grid s in band");
            let w = T::one() / (rho * rho);
            let row: Vec<T> = (0..n_t)
                .map(|j| {
                    w * (0..dim).fold(T::zero(), |acc, d| acc + lap[[i, j, d]] * lap[[i, j, d]])
                })
                .collect();
            trapezoid_periodic(&row)
        })
        .collect();
    let norm = simpson(&rows, map.cyl.s_at(1), map.cyl.s_at(n_s - 2)).sqrt();
    (field, norm)
}

/// Per-row circle mean `M_u(s)` and its s-derivative.
pub fn mean_value_profile<T: Real>(map: &SurfaceMap<T>) -> (Array2<T>, Array2<T>) {
    let (n_s, n_t, dim) = map.values.dim();
    let mut mu = Array2::zeros((n_s, dim));
    for i in 0..n_s {
        for d in 0..dim {
            let mut acc = T::zero();
            for j in 0..n_t {
                acc += map.values[[i, j, d]];
            }
            mu[[i, d]] = acc / T::of(n_t as f64);
        }
    }
    let h = map.cyl.h_s();
    let two_h = T::of(2.0) * h;
    let mut dmu = Array2::zeros((n_s, dim));
    for d in 0..dim {
        for i in 1..n_s - 1 {
            dmu[[i, d]] = (mu[[i + 1, d]] - mu[[i - 1, d]]) / two_h;
        }
        dmu[[0, d]] =
            (-T::of(3.0) * mu[[0, d]] + T::of(4.0) * mu[[1, d]] - mu[[2, d]]) / two_h;
        dmu[[n_s - 1, d]] = (T::of(3.0) * mu[[n_s - 1, d]] - T::of(4.0) * mu[[n_s - 2, d]]
            + mu[[n_s - 3, d]])
            / two_h;
    }
    (mu, dmu)
}

/// Angular energy `vartheta(s) = int |u_theta|^2 dtheta` per grid row.
pub fn angular_energy_profile<T: Real>(map: &SurfaceMap<T>) -> Vec<T> {
    let ut = map.d_theta(1);
    let (n_s, n_t, dim) = map.values.dim();
    (0..n_s)
        .map(|i| {
            let row: Vec<T> = (0..n_t)
                .map(|j| (0..dim).fold(T::zero(), |acc, d| acc + ut[[i, j, d]] * ut[[i, j, d]]))
                .collect();
            trapezoid_periodic(&row)
        })
        .collect()
}

/// Simpson weight in s for grid row `i` (full band), exposed for modules
/// integrating row-wise quantities.
pub fn s_weight<T: Real>(cyl: &HyperbolicCylinder<T>, i: usize) -> T {
    simpson_weight(i, cyl.n_s(), cyl.h_s())
}
