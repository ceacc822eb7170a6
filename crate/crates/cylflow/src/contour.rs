//! Contour integration helpers over complex closures: circle integrals and
//! averages, rectangle boundary integrals, and 2-D area quadrature. These
//! back the residue computation, the mollifier, and the Cauchy-formula
//! oracle.

use crate::scalar::{Cx, Real};

/// `∮ f dz` over the circle of radius `r` around `center`, periodic
/// trapezoid with `n` nodes (spectrally accurate for fields smooth on the
/// contour).
pub fn circle_integral<T: Real>(
    f: impl Fn(Cx<T>) -> Cx<T>,
    center: Cx<T>,
    r: T,
    n: usize,
) -> Cx<T> {
    let mut acc = Cx::new(T::zero(), T::zero());
    for k in 0..n {
        let t = T::TAU() * T::of(k as f64 / n as f64);
        let e = Cx::from_polar(T::one(), t);
        let z = center + e * r;
        // dz = i r e^{it} dt
        acc += f(z) * Cx::new(T::zero(), r) * e;
    }
    acc * T::TAU() / T::of(n as f64)
}

/// Mean of `f` over the circle of radius `r` around `center`.
pub fn circle_average<T: Real>(
    f: impl Fn(Cx<T>) -> Cx<T>,
    center: Cx<T>,
    r: T,
    n: usize,
) -> Cx<T> {
    let mut acc = Cx::new(T::zero(), T::zero());
    for k in 0..n {
        let t = T::TAU() * T::of(k as f64 / n as f64);
        acc += f(center + Cx::from_polar(r, t));
    }
    acc / T::of(n as f64)
}

/// `(1 / 2 pi i) ∮ f dz` around `pole`.
pub fn residue<T: Real>(f: impl Fn(Cx<T>) -> Cx<T>, pole: Cx<T>, r: T, n: usize) -> Cx<T> {
    circle_integral(f, pole, r, n) / Cx::new(T::zero(), T::TAU())
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in the z = x + i y plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect<T: Real> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn area(&self) -> T {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, z: Cx<T>) -> bool {
        z.re > self.x0 && z.re < self.x1 && z.im > self.y0 && z.im < self.y1
    }
}

/// `∮_{∂R} f dz` counterclockwise; composite Simpson with `n` samples per
/// edge (`n` odd).
pub fn rect_boundary_integral<T: Real>(
    f: impl Fn(Cx<T>) -> Cx<T>,
    rect: Rect<T>,
    n: usize,
) -> Cx<T> {
    assert!(n >= 3 && n % 2 == 1);
    let simpson_edge = |a: Cx<T>, b: Cx<T>| -> Cx<T> {
        let dz = (b - a) / T::of((n - 1) as f64);
        let mut acc = Cx::new(T::zero(), T::zero());
        for k in 0..n {
            let w = if k == 0 || k == n - 1 {
                T::one()
            } else if k % 2 == 1 {
                T::of(4.0)
            } else {
                T::of(2.0)
            };
            acc += f(a + dz * T::of(k as f64)) * w;
        }
        acc * dz / T::of(3.0)
    };
    let (x0, x1, y0, y1) = (rect.x0, rect.x1, rect.y0, rect.y1);
    let c = |x: T, y: T| Cx::new(x, y);
    simpson_edge(c(x0, y0), c(x1, y0))
        + simpson_edge(c(x1, y0), c(x1, y1))
        + simpson_edge(c(x1, y1), c(x0, y1))
        + simpson_edge(c(x0, y1), c(x0, y0))
}

/// `∬_R f dA` with tensor-product composite Simpson (`n` odd per axis).
pub fn rect_area_integral<T: Real>(
    f: impl Fn(Cx<T>) -> Cx<T>,
    rect: Rect<T>,
    n: usize,
) -> Cx<T> {
    assert!(n >= 3 && n % 2 == 1);
    let hx = (rect.x1 - rect.x0) / T::of((n - 1) as f64);
    let hy = (rect.y1 - rect.y0) / T::of((n - 1) as f64);
    let w1 = |k: usize| {
        if k == 0 || k == n - 1 {
            T::one()
        } else if k % 2 == 1 {
            T::of(4.0)
        } else {
            T::of(2.0)
        }
    };
    let mut acc = Cx::new(T::zero(), T::zero());
    for i in 0..n {
        let x = rect.x0 + hx * T::of(i as f64);
        for j in 0..n {
            let y = rect.y0 + hy * T::of(j as f64);
            acc += f(Cx::new(x, y)) * (w1(i) * w1(j));
        }
    }
    acc * hx * hy / T::of(9.0)
}

/// Residual of the inhomogeneous Cauchy formula
/// `∮_{∂R} f dz = 2i ∬_R dbar f dA + 2 pi i Σ res`
/// for a field with the given analytic `dbar` and simple poles (only poles
/// strictly inside `rect` enter the sum).
pub fn cauchy_residual<T: Real>(
    f: impl Fn(Cx<T>) -> Cx<T>,
    dbar: impl Fn(Cx<T>) -> Cx<T>,
    rect: Rect<T>,
    poles: &[(Cx<T>, Cx<T>)],
    n: usize,
) -> T {
    let lhs = rect_boundary_integral(&f, rect, n);
    let area = rect_area_integral(&dbar, rect, n);
    let res_sum = poles
        .iter()
        .filter(|(p, _)| rect.contains(*p))
        .fold(Cx::new(T::zero(), T::zero()), |acc, &(_, r)| acc + r);
    let rhs = Cx::new(T::zero(), T::of(2.0)) * area + Cx::new(T::zero(), T::TAU()) * res_sum;
    (lhs - rhs).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Cx<f64>;

    #[test]
    fn circle_integral_of_inverse_z() {
        let val = circle_integral(|z: C| C::new(1.0, 0.0) / z, C::new(0.0, 0.0), 0.7, 128);
        assert!((val - C::new(0.0, std::f64::consts::TAU)).norm() < 1e-12);
    }

    #[test]
    fn residue_of_shifted_pole() {
        let p = C::new(0.3, -0.2);
        let r = residue(|z: C| C::new(2.0, 1.0) / (z - p), p, 0.15, 128);
        assert!((r - C::new(2.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn circle_average_mean_value_property() {
        // exp(z) is holomorphic: average over circle = value at center
        let c = C::new(0.4, 1.1);
        let avg = circle_average(|z: C| z.exp(), c, 0.5, 64);
        assert!((avg - c.exp()).norm() < 1e-13);
    }

    #[test]
    fn rect_boundary_of_zbar_equals_2i_area() {
        let rect = Rect {
            x0: -1.0,
            x1: 2.0,
            y0: 0.5,
            y1: 1.5,
        };
        let val = rect_boundary_integral(|z: C| z.conj(), rect, 101);
        let want = C::new(0.0, 2.0 * rect.area());
        assert!((val - want).norm() < 1e-10);
    }

    #[test]
    fn cauchy_residual_on_simple_cases() {
        let rect = Rect {
            x0: -0.5,
            x1: 0.5,
            y0: -0.5,
            y1: 0.5,
        };
        // 1/z around 0
        let r1 = cauchy_residual(
            |z: C| C::new(1.0, 0.0) / z,
            |_| C::new(0.0, 0.0),
            rect,
            &[(C::new(0.0, 0.0), C::new(1.0, 0.0))],
            801,
        );
        assert!(r1 < 1e-6, "residual {r1}");
        // zbar with no poles
        let r2 = cauchy_residual(|z: C| z.conj(), |_| C::new(1.0, 0.0), rect, &[], 101);
        assert!(r2 < 1e-10, "residual {r2}");
    }
}
