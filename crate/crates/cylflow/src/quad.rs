//! Quadrature helpers: periodic trapezoid in the angular direction,
//! composite Simpson along the cylinder axis.

use crate::scalar::Real;

/// Periodic trapezoid rule over [0, 2pi) for `n` uniformly spaced samples.
/// Spectrally accurate for smooth periodic data.
pub fn trapezoid_periodic<T: Real>(values: &[T]) -> T {
    let n = values.len();
    let h = T::TAU() / T::of(n as f64);
    values.iter().fold(T::zero(), |acc, &v| acc + v) * h
}

/// Composite Simpson over `n` uniformly spaced samples spanning `[a, b]`.
/// Requires an odd sample count (even number of intervals).
pub fn simpson<T: Real>(values: &[T], a: T, b: T) -> T {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd sample count >= 3");
    let h = (b - a) / T::of((n - 1) as f64);
    let mut sum = values[0] + values[n - 1];
    for (k, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        let w = if k % 2 == 1 { T::of(4.0) } else { T::of(2.0) };
        sum += w * v;
    }
    sum * h / T::of(3.0)
}

/// Simpson weights for direct accumulation over an odd-length grid.
pub fn simpson_weight<T: Real>(k: usize, n: usize, h: T) -> T {
    let w = if k == 0 || k == n - 1 {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    };
    T::of(w) * h / T::of(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_cos_squared() {
        let n = 64;
        let vals: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos().powi(2))
            .collect();
        let got = trapezoid_periodic(&vals);
        assert!((got - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let n = 17;
        let (a, b) = (-1.0, 2.0);
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let x = a + (b - a) * k as f64 / (n - 1) as f64;
                x * x * x - x
            })
            .collect();
        // exact: x^4/4 - x^2/2 on [-1,2] = (4 - 2) - (1/4 - 1/2)
        let exact = (16.0 / 4.0 - 4.0 / 2.0) - (1.0 / 4.0 - 1.0 / 2.0);
        assert!((simpson(&vals, a, b) - exact).abs() < 1e-12);
    }
}
