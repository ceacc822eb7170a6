//! Möbius transforms of the unit disc, the induced boundary angle action,
//! three-point spacing diagnostics, and the interior extension of the
//! boundary diffeomorphism used by the metric flow.

use crate::error::{Error, Result};
use crate::geometry::HyperbolicCylinder;
use crate::scalar::{Cx, Real};

/// Which end of the cylinder a boundary object lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Disc automorphism `M_{b,phi}(z) = e^{i phi} (z + b) / (1 + conj(b) z)`.
#[derive(Debug, Clone, Copy)]
pub struct MoebiusParams<T: Real> {
    b: Cx<T>,
    phi: T,
}

impl<T: Real> MoebiusParams<T> {
    pub fn new(b: Cx<T>, phi: T) -> Result<Self> {
        if !(b.norm() < T::one() - T::of(1e-12)) {
            return Err(Error::Validation("|b| must be < 1 - 1e-12".into()));
        }
        Ok(Self { b, phi })
    }

    pub fn identity() -> Self {
        Self {
            b: Cx::new(T::zero(), T::zero()),
            phi: T::zero(),
        }
    }

    /// Construct from the chart coordinates `(|b|, Arg b, phi)`.
    pub fn from_chart(b_abs: T, b_arg: T, phi: T) -> Result<Self> {
        Self::new(Cx::from_polar(b_abs, b_arg), phi)
    }

    pub fn b(&self) -> Cx<T> {
        self.b
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn chart(&self) -> (T, T, T) {
        (self.b.norm(), self.b.arg(), self.phi)
    }

    pub fn inverse(&self) -> Self {
        // Solve w = M_{b,phi}(z) for z.
        Self {
            b: -self.b * Cx::from_polar(T::one(), self.phi),
            phi: -self.phi,
        }
    }
}

pub fn moebius_apply<T: Real>(m: &MoebiusParams<T>, z: Cx<T>) -> Cx<T> {
    let num = z + m.b;
    let den = Cx::new(T::one(), T::zero()) + m.b.conj() * z;
    Cx::from_polar(T::one(), m.phi) * num / den
}

/// `|M'(z)| = (1 - |b|^2) / |1 + conj(b) z|^2`.
pub fn moebius_derivative_modulus<T: Real>(m: &MoebiusParams<T>, z: Cx<T>) -> T {
    let den = Cx::new(T::one(), T::zero()) + m.b.conj() * z;
    (T::one() - m.b.norm_sqr()) / den.norm_sqr()
}

/// Boundary angle action: the continuous lift `beta(theta)` with
/// `M(e^{i theta}) = e^{i beta(theta)}`, written as
/// `beta = phi + theta + 2 Arg(1 + b e^{-i theta})` (the Arg stays in
/// (-pi/2, pi/2) since |b| < 1, so the lift is globally smooth).
pub fn boundary_angle<T: Real>(m: &MoebiusParams<T>, theta: T) -> T {
    let c = Cx::new(T::one(), T::zero()) + m.b * Cx::from_polar(T::one(), -theta);
    m.phi + theta + T::of(2.0) * c.arg()
}

/// Derivative of the boundary angle action; equals `|M'|` on the circle.
pub fn boundary_angle_derivative<T: Real>(m: &MoebiusParams<T>, theta: T) -> T {
    moebius_derivative_modulus(m, Cx::from_polar(T::one(), theta))
}

/// The three anchor angles in the ordered normal form
/// `theta1 = theta2 - eps1 < theta2 < theta3 = theta2 + eps2` with
/// `0 < eps1 <= eps2 <= 2 pi - (theta3 - theta1)`.
///
/// The normal form is not always reachable by relabeling alone; when the
/// cyclic arrangement has the wrong orientation the labels are read in the
/// reversed sense and `reflected` is set.
#[derive(Debug, Clone, Copy)]
pub struct ThreePointSpacing<T: Real> {
    /// Angles in normal-form order (theta2 kept in (-pi, pi], neighbors
    /// unwrapped around it).
    pub theta: [T; 3],
    pub eps1: T,
    pub eps2: T,
    /// `perm[k]` is the original anchor index (0,1,2 for the reference
    /// points e^{2 pi i (j+1)/3}) sitting in normal-form slot `k`.
    pub perm: [usize; 3],
    pub reflected: bool,
}

impl<T: Real> ThreePointSpacing<T> {
    pub fn min_spacing(&self) -> T {
        self.eps1
    }
}

fn wrap_2pi<T: Real>(mut x: T) -> T {
    let tau = T::TAU();
    x = x % tau;
    if x < T::zero() {
        x += tau;
    }
    x
}

/// Images of the reference anchors `e^{2 pi i j / 3}`, j = 1, 2, 3.
pub fn anchor_angles<T: Real>(m: &MoebiusParams<T>) -> [T; 3] {
    let third = T::TAU() / T::of(3.0);
    [
        boundary_angle(m, third),
        boundary_angle(m, third * T::of(2.0)),
        boundary_angle(m, third * T::of(3.0)),
    ]
}

pub fn three_point_angles<T: Real>(m: &MoebiusParams<T>) -> ThreePointSpacing<T> {
    let raw = anchor_angles(m);
    let w: Vec<T> = raw.iter().map(|&a| wrap_2pi(a)).collect();

    // Sort the three angles cyclically and look at the gaps.
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    let a = [w[idx[0]], w[idx[1]], w[idx[2]]];
    let gaps = [a[1] - a[0], a[2] - a[1], T::TAU() - a[2] + a[0]];
    // gaps[k] follows sorted point k (cyclically).

    // Candidate centers: slot k has preceding gap gaps[(k+2)%3] and
    // following gap gaps[k]; reflection swaps the roles.
    let mut best: Option<(T, T, usize, bool)> = None;
    for k in 0..3 {
        let prev = gaps[(k + 2) % 3];
        let next = gaps[k];
        for &(e1, e2, refl) in &[(prev, next, false), (next, prev, true)] {
            let third = T::TAU() - e1 - e2;
            if e1 <= e2 && e2 <= third + T::of(1e-14) {
                let better = match best {
                    None => true,
                    // prefer unreflected when both orientations qualify
                    Some((_, _, _, brefl)) => brefl && !refl,
                };
                if better {
                    best = Some((e1, e2, k, refl));
                }
            }
        }
    }
    let (eps1, eps2, k, reflected) =
        best.expect("three distinct angles always admit the normal form");

    let center = a[k];
    let perm = [
        idx[if reflected { (k + 1) % 3 } else { (k + 2) % 3 }],
        idx[k],
        idx[if reflected { (k + 2) % 3 } else { (k + 1) % 3 }],
    ];
    let mut c2 = center;
    if c2 > T::PI() {
        c2 -= T::TAU();
    }
    ThreePointSpacing {
        theta: [c2 - eps1, c2, c2 + eps2],
        eps1,
        eps2,
        perm,
        reflected,
    }
}

/// Quintic C^2 ramp: 0 on x <= 0, 1 on x >= 1, monotone in between.
pub fn ramp_c2<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        x * x * x * (T::of(10.0) - T::of(15.0) * x + T::of(6.0) * x * x)
    }
}

fn ramp_c2_derivative<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        T::zero()
    } else {
        T::of(30.0) * x * x * (T::one() - x) * (T::one() - x)
    }
}

/// Blend weight for one side as a function of the normalized coordinate
/// `sigma in [-1, 1]`: zero on the inner half of the cylinder, one at the
/// side's end.
pub fn blend_weight<T: Real>(side: Side, sigma: T) -> T {
    match side {
        Side::Plus => ramp_c2(T::of(2.0) * sigma - T::one()),
        Side::Minus => ramp_c2(-T::of(2.0) * sigma - T::one()),
    }
}

fn blend_weight_dsigma<T: Real>(side: Side, sigma: T) -> T {
    match side {
        Side::Plus => T::of(2.0) * ramp_c2_derivative(T::of(2.0) * sigma - T::one()),
        Side::Minus => -T::of(2.0) * ramp_c2_derivative(-T::of(2.0) * sigma - T::one()),
    }
}

/// Interior extension of the boundary action for one side:
/// `Theta(s, theta) = theta + w(sigma) * delta(theta)` where `delta` is the
/// periodic part of the boundary angle action and `w` ramps from 0 on the
/// inner half to 1 at the end.
pub fn interior_theta_map<T: Real>(
    m: &MoebiusParams<T>,
    side: Side,
    sigma: T,
    theta: T,
) -> T {
    let delta = boundary_angle(m, theta) - theta;
    theta + blend_weight(side, sigma) * delta
}

/// Components `(g_ss, g_stheta, g_thetatheta)` of the pullback of the
/// collar metric under the interior extension, at grid point `(i, j)`
/// indices into the cylinder's `(s, theta)` grid. With
/// `F(s,theta) = (s, Theta(s,theta))` and `g = rho^2 (ds^2 + dtheta^2)`:
/// `F*g = rho^2 ((1 + Theta_s^2) ds^2 + 2 Theta_s Theta_theta ds dtheta
///               + Theta_theta^2 dtheta^2)`.
pub fn pullback_metric_at<T: Real>(
    cyl: &HyperbolicCylinder<T>,
    m: &MoebiusParams<T>,
    side: Side,
    i: usize,
    j: usize,
) -> Result<(T, T, T)> {
    let s = cyl.s_at(i);
    let theta = cyl.theta_at(j);
    let half_len = cyl.length() * T::of(0.5);
    let sigma = (s + cyl.y_minus()) / half_len - T::one();
    let rho = cyl.profile(s)?;
    let rho2 = rho * rho;

    let delta = boundary_angle(m, theta) - theta;
    let ddelta = boundary_angle_derivative(m, theta) - T::one();
    let w = blend_weight(side, sigma);
    let dw_ds = blend_weight_dsigma(side, sigma) / half_len;

    let theta_s = dw_ds * delta;
    let theta_t = T::one() + w * ddelta;
    Ok((
        rho2 * (T::one() + theta_s * theta_s),
        rho2 * theta_s * theta_t,
        rho2 * theta_t * theta_t,
    ))
}
