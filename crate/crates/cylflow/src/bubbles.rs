//! Concentration detection at the boundary, conformal rescaling of a
//! half-cylinder end to the unit disc, and Hopf-loss / conformality
//! diagnostics for the extracted bubbles.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::field::SurfaceMap;
use crate::hopf::{hopf_from_map, HopfField};
use crate::moebius::{moebius_apply, MoebiusParams, Side};
use crate::scalar::{Cx, Real};

/// Total angular width of the excluded sector around the concentration
/// point on the disc boundary, as a multiple of 1 - |b|.
pub const HALO_WIDTH_FACTOR: f64 = 4.0;

/// A map sampled on a polar grid over the unit disc, obtained by pulling
/// back one end of the cylinder through the exponential chart and the
/// side's Möbius transform.
#[derive(Debug, Clone)]
pub struct BubbleExtract<T: Real> {
    /// n_r x n_alpha x dim samples; ring k sits at `radii[k]`.
    pub disc_map: Array3<T>,
    /// Strictly increasing, last entry 1 (the disc boundary).
    pub radii: Vec<T>,
    /// Uniform angles, 2 pi / n_alpha spaced.
    pub alphas: Vec<T>,
    /// True where the sample is inside the excluded sector.
    pub halo_mask: Array2<bool>,
    pub source_side: Side,
    /// Boundary angle on the cylinder toward which the parametrization
    /// concentrates (the common limit of the anchor images).
    pub concentration_theta: T,
    /// -b/|b| when |b| is away from zero; the disc-boundary point the
    /// grid avoids.
    pub hat_p_star: Option<Cx<T>>,
    pub anchor_images: [Cx<T>; 3],
}

fn cyc_dist<T: Real>(a: T, b: T) -> T {
    let mut d = (a - b) % T::TAU();
    if d < T::zero() {
        d += T::TAU();
    }
    d.min(T::TAU() - d)
}

fn boundary_row<T: Real>(map: &SurfaceMap<T>, side: Side) -> usize {
    match side {
        Side::Minus => 0,
        Side::Plus => map.cyl.n_s() - 1,
    }
}

fn trace_diameter<T: Real>(map: &SurfaceMap<T>, row: usize, keep: &[bool]) -> T {
    let (_, n_t, dim) = map.values.dim();
    let mut best = T::zero();
    for j in 0..n_t {
        if !keep[j] {
            continue;
        }
        for k in j + 1..n_t {
            if !keep[k] {
                continue;
            }
            let mut d = T::zero();
            for c in 0..dim {
                let v = map.values[[row, j, c]] - map.values[[row, k, c]];
                d += v * v;
            }
            best = best.max(d);
        }
    }
    best.sqrt()
}

/// Courant-Lebesgue style concentration scan of one boundary trace:
/// returns the angle whose delta-window carries oscillation at least
/// `eps` while the complement oscillates less than `eps`; `None` when
/// the trace is eps-equicontinuous at scale delta.
pub fn detect_concentration<T: Real>(
    map: &SurfaceMap<T>,
    side: Side,
    delta: T,
    eps: T,
) -> Option<T> {
    let row = boundary_row(map, side);
    let n_t = map.cyl.n_theta();
    let mut best: Option<(T, T)> = None;
    for j in 0..n_t {
        let center = map.cyl.theta_at(j);
        let inside: Vec<bool> = (0..n_t)
            .map(|k| cyc_dist(map.cyl.theta_at(k), center) <= delta)
            .collect();
        let outside: Vec<bool> = inside.iter().map(|&b| !b).collect();
        let osc_in = trace_diameter(map, row, &inside);
        let osc_out = trace_diameter(map, row, &outside);
        if osc_in >= eps && osc_out < eps {
            match best {
                Some((o, _)) if o >= osc_in => {}
                _ => best = Some((osc_in, center)),
            }
        }
    }
    best.map(|(_, theta)| theta)
}

/// Bilinear sample of the map at an off-grid point; s is clamped to the
/// cylinder, theta is periodic.
fn sample_map<T: Real>(map: &SurfaceMap<T>, s: T, theta: T, out: &mut [T]) {
    let cyl = &map.cyl;
    let (n_s, n_t, dim) = map.values.dim();
    let x = ((s + cyl.y_minus()) / cyl.h_s())
        .max(T::zero())
        .min(T::of((n_s - 1) as f64));
    let i0 = x.floor().to_f64_lossy() as usize;
    let i0 = i0.min(n_s - 2);
    let fx = x - T::of(i0 as f64);
    let mut t = theta % T::TAU();
    if t < T::zero() {
        t += T::TAU();
    }
    let y = t / cyl.h_theta();
    let j0 = (y.floor().to_f64_lossy() as usize).min(n_t - 1);
    let fy = y - T::of(j0 as f64);
    let j1 = (j0 + 1) % n_t;
    for d in 0..dim {
        let a = map.values[[i0, j0, d]] * (T::one() - fy) + map.values[[i0, j1, d]] * fy;
        let b = map.values[[i0 + 1, j0, d]] * (T::one() - fy) + map.values[[i0 + 1, j1, d]] * fy;
        out[d] = a * (T::one() - fx) + b * fx;
    }
}

/// Pull back the side's end through `r e^{i alpha} -> M_{b, phi} ->
/// (s' = -log r, theta)` onto a polar disc grid with radial clustering at
/// the boundary, excluding the halo sector around -b/|b|.
pub fn extract_bubble<T: Real>(
    map: &SurfaceMap<T>,
    m: &MoebiusParams<T>,
    side: Side,
    n_r: usize,
) -> Result<BubbleExtract<T>> {
    let cyl = &map.cyl;
    let depth = match side {
        Side::Minus => cyl.y_minus(),
        Side::Plus => cyl.y_plus(),
    };
    if depth < T::of(3.0) {
        return Err(Error::ExtractionRefused(format!(
            "half-cylinder depth {} below 3; extraction not meaningful",
            depth.to_f64_lossy()
        )));
    }
    if n_r < 8 {
        return Err(Error::Validation("need at least 8 radial rings".into()));
    }
    let b = m.b();
    let b_abs = b.norm();
    let (hat_p_star, halo_half) = if b_abs >= T::of(crate::flow::B_CHART_MIN) {
        let width = T::of(HALO_WIDTH_FACTOR) * (T::one() - b_abs);
        if width > T::of(0.25) * T::TAU() {
            return Err(Error::ExtractionRefused(format!(
                "halo width {} covers more than a quarter of the disc boundary",
                width.to_f64_lossy()
            )));
        }
        (Some(-b / b_abs), width * T::of(0.5))
    } else {
        (None, T::zero())
    };

    let n_alpha = cyl.n_theta();
    let dim = map.dim();
    let radii: Vec<T> = (0..n_r)
        .map(|k| {
            let x = T::one() - T::of(k as f64 / (n_r - 1) as f64);
            (-depth * x * x).exp()
        })
        .collect();
    let alphas: Vec<T> = (0..n_alpha)
        .map(|l| T::TAU() * T::of(l as f64 / n_alpha as f64))
        .collect();

    let mut disc_map = Array3::zeros((n_r, n_alpha, dim));
    let mut halo_mask = Array2::from_elem((n_r, n_alpha), false);
    let mut buf = vec![T::zero(); dim];
    for (k, &r) in radii.iter().enumerate() {
        for (l, &alpha) in alphas.iter().enumerate() {
            let w = Cx::from_polar(r, alpha);
            if let Some(p) = hat_p_star {
                if cyc_dist(alpha, p.arg()) <= halo_half {
                    halo_mask[[k, l]] = true;
                }
            }
            let z = moebius_apply(m, w);
            let sp = -z.norm().min(T::one()).max(T::of(1e-300)).ln();
            let s = match side {
                Side::Plus => (cyl.y_plus() - sp).max(-cyl.y_minus()),
                Side::Minus => (-cyl.y_minus() + sp).min(cyl.y_plus()),
            };
            sample_map(map, s, z.arg(), &mut buf);
            for d in 0..dim {
                disc_map[[k, l, d]] = buf[d];
            }
        }
    }

    let concentration_theta = if b_abs >= T::of(crate::flow::B_CHART_MIN) {
        m.phi() + b.arg()
    } else {
        m.phi()
    };
    let anchor_images = [
        Cx::from_polar(T::one(), T::TAU() / T::of(3.0)),
        Cx::from_polar(T::one(), T::of(2.0) * T::TAU() / T::of(3.0)),
        Cx::from_polar(T::one(), T::TAU()),
    ];
    Ok(BubbleExtract {
        disc_map,
        radii,
        alphas,
        halo_mask,
        source_side: side,
        concentration_theta,
        hat_p_star,
        anchor_images,
    })
}

/// Radial derivative on the nonuniform ring grid (3-point formula inside,
/// one-sided at the ends) and the periodic central angular derivative.
fn polar_derivatives<T: Real>(b: &BubbleExtract<T>) -> (Array3<T>, Array3<T>) {
    let (n_r, n_a, dim) = b.disc_map.dim();
    let mut dr = Array3::zeros((n_r, n_a, dim));
    let mut da = Array3::zeros((n_r, n_a, dim));
    let h_a = T::TAU() / T::of(n_a as f64);
    for k in 0..n_r {
        for l in 0..n_a {
            let lp = (l + 1) % n_a;
            let lm = (l + n_a - 1) % n_a;
            for d in 0..dim {
                da[[k, l, d]] =
                    (b.disc_map[[k, lp, d]] - b.disc_map[[k, lm, d]]) / (T::of(2.0) * h_a);
                dr[[k, l, d]] = if k == 0 {
                    (b.disc_map[[1, l, d]] - b.disc_map[[0, l, d]]) / (b.radii[1] - b.radii[0])
                } else if k == n_r - 1 {
                    (b.disc_map[[k, l, d]] - b.disc_map[[k - 1, l, d]])
                        / (b.radii[k] - b.radii[k - 1])
                } else {
                    let hl = b.radii[k] - b.radii[k - 1];
                    let hr = b.radii[k + 1] - b.radii[k];
                    (b.disc_map[[k + 1, l, d]] * hl * hl
                        - b.disc_map[[k - 1, l, d]] * hr * hr
                        + b.disc_map[[k, l, d]] * (hr * hr - hl * hl))
                        / (hl * hr * (hl + hr))
                };
            }
        }
    }
    (dr, da)
}

/// Flat Dirichlet energy of the disc map over the sampled annulus.
pub fn disc_energy<T: Real>(b: &BubbleExtract<T>) -> T {
    let (n_r, n_a, dim) = b.disc_map.dim();
    let (dr, da) = polar_derivatives(b);
    let h_a = T::TAU() / T::of(n_a as f64);
    let mut acc = T::zero();
    for k in 0..n_r {
        let r = b.radii[k];
        let w_r = if k == 0 {
            (b.radii[1] - b.radii[0]) * T::of(0.5)
        } else if k == n_r - 1 {
            (b.radii[k] - b.radii[k - 1]) * T::of(0.5)
        } else {
            (b.radii[k + 1] - b.radii[k - 1]) * T::of(0.5)
        };
        for l in 0..n_a {
            let mut dens = T::zero();
            for d in 0..dim {
                dens += dr[[k, l, d]] * dr[[k, l, d]]
                    + da[[k, l, d]] * da[[k, l, d]] / (r * r);
            }
            acc += dens * r * w_r * h_a;
        }
    }
    acc * T::of(0.5)
}

/// Hopf differential of the disc map against the flat metric, sampled on
/// the polar grid: `phi = sum_d (2 dz u_d)^2` with
/// `2 dz = e^{-i alpha}(dr - (i/r) dalpha)`.
pub fn disc_hopf<T: Real>(b: &BubbleExtract<T>) -> Array2<Cx<T>> {
    let (n_r, n_a, dim) = b.disc_map.dim();
    let (dr, da) = polar_derivatives(b);
    let mut phi = Array2::from_elem((n_r, n_a), Cx::new(T::zero(), T::zero()));
    for k in 0..n_r {
        let r = b.radii[k];
        for l in 0..n_a {
            let e = Cx::from_polar(T::one(), -b.alphas[l]);
            let mut acc = Cx::new(T::zero(), T::zero());
            for d in 0..dim {
                let f = e * Cx::new(dr[[k, l, d]], -da[[k, l, d]] / r);
                acc += f * f;
            }
            phi[[k, l]] = acc;
        }
    }
    phi
}

/// `L^1` norm of the flat Hopf differential of the bubble over the
/// annulus `r_in <= r <= r_out`, halo excluded; a small value certifies
/// the bubble is numerically conformal.
pub fn conformality_defect<T: Real>(b: &BubbleExtract<T>, r_in: T, r_out: T) -> T {
    let (n_r, n_a, _) = b.disc_map.dim();
    let phi = disc_hopf(b);
    let h_a = T::TAU() / T::of(n_a as f64);
    let mut acc = T::zero();
    for k in 0..n_r {
        let r = b.radii[k];
        if r < r_in || r > r_out {
            continue;
        }
        let w_r = if k == 0 {
            (b.radii[1] - b.radii[0]) * T::of(0.5)
        } else if k == n_r - 1 {
            (b.radii[k] - b.radii[k - 1]) * T::of(0.5)
        } else {
            (b.radii[k + 1] - b.radii[k - 1]) * T::of(0.5)
        };
        for l in 0..n_a {
            if b.halo_mask[[k, l]] {
                continue;
            }
            acc += phi[[k, l]].norm() * r * w_r * h_a;
        }
    }
    acc
}

/// `∫∫ rho^{-2} |phi| dtheta ds` over the metric chunk of length
/// `lambda` at the side's end, pole halos excluded.
pub fn hopf_loss_on_chunk<T: Real>(
    map: &SurfaceMap<T>,
    side: Side,
    lambda: T,
) -> Result<T> {
    let cyl = &map.cyl;
    let depth = match side {
        Side::Minus => cyl.y_minus(),
        Side::Plus => cyl.y_plus(),
    };
    if lambda > depth {
        return Err(Error::Validation(format!(
            "chunk length {} exceeds half-cylinder depth {}",
            lambda.to_f64_lossy(),
            depth.to_f64_lossy()
        )));
    }
    let h = hopf_from_map(map);
    Ok(chunk_integral(&h, side, lambda))
}

/// The same chunk integral for an already-assembled Hopf field.
pub fn chunk_integral<T: Real>(h: &HopfField<T>, side: Side, lambda: T) -> T {
    let cyl = &h.cyl;
    let (n_s, n_t) = h.phi.dim();
    let in_chunk = |s: T| match side {
        Side::Plus => s >= cyl.y_plus() - lambda,
        Side::Minus => s <= -cyl.y_minus() + lambda,
    };
    let rows: Vec<usize> = (0..n_s).filter(|&i| in_chunk(cyl.s_at(i))).collect();
    // the chunk edge generally falls between rows: extend the innermost
    // row's weight by the partial cell so the quadrature covers exactly
    // the metric chunk
    let edge = match side {
        Side::Plus => cyl.y_plus() - lambda,
        Side::Minus => -cyl.y_minus() + lambda,
    };
    let inner = match side {
        Side::Plus => *rows.first().unwrap(),
        Side::Minus => *rows.last().unwrap(),
    };
    let partial = (cyl.s_at(inner) - edge).abs();
    let mut acc = T::zero();
    for (pos, &i) in rows.iter().enumerate() {
        let mut w_s = if pos == 0 || pos == rows.len() - 1 {
            cyl.h_s() * T::of(0.5)
        } else {
            cyl.h_s()
        };
        if i == inner {
            w_s += partial;
        }
        let rho = match cyl.profile(cyl.s_at(i)) {
            Ok(r) => r,
            Err(_) => continue,
        };
        for j in 0..n_t {
            if h.in_pole_halo(i, j) {
                continue;
            }
            acc += h.phi[[i, j]].norm() / (rho * rho) * w_s * cyl.h_theta();
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HyperbolicCylinder;

    type C = Cx<f64>;

    fn deep_cylinder() -> HyperbolicCylinder<f64> {
        // ell = 1, c = 1 gives Y about 4.93 on both sides
        HyperbolicCylinder::new(1.0f64, 1.0, 1.0, 65, 48).unwrap()
    }

    #[test]
    fn uniform_circle_trace_has_no_concentration() {
        let cyl = deep_cylinder();
        let map = SurfaceMap::from_fn(cyl, 3, |_, t| vec![t.cos(), t.sin(), 0.0]);
        assert!(detect_concentration(&map, Side::Plus, 0.3, 1.0).is_none());
    }

    #[test]
    fn moebius_compressed_trace_concentrates_at_attractor() {
        let cyl = deep_cylinder();
        // the tau field varies like the inverse boundary reparametrization,
        // which compresses the curve into the anchor-cluster angle arg b
        let m = MoebiusParams::new(C::from_polar(0.98, 1.0), 0.0).unwrap();
        let map = SurfaceMap::from_fn(cyl, 3, |_, t| {
            let beta = crate::moebius::boundary_angle(&m.inverse(), t);
            vec![beta.cos(), beta.sin(), 0.0]
        });
        let theta = detect_concentration(&map, Side::Plus, 0.4, 1.0).unwrap();
        let d = cyc_dist(theta, 1.0);
        assert!(d < 0.45, "found {theta}, distance {d}");
    }

    #[test]
    fn extraction_refused_when_b_is_small_but_nonzero() {
        let cyl = deep_cylinder();
        let map = SurfaceMap::from_fn(cyl, 3, |_, t| vec![t.cos(), t.sin(), 0.0]);
        let m = MoebiusParams::new(C::new(0.5, 0.0), 0.0).unwrap();
        let err = extract_bubble(&map, &m, Side::Plus, 48).unwrap_err();
        assert!(matches!(err, Error::ExtractionRefused(_)));
    }

    #[test]
    fn extraction_rejected_for_shallow_cylinder() {
        let cyl = HyperbolicCylinder::new(4.0f64, 1.0, 1.0, 33, 24).unwrap();
        let map = SurfaceMap::from_fn(cyl, 2, |_, t| vec![t.cos(), t.sin()]);
        let m = MoebiusParams::identity();
        assert!(extract_bubble(&map, &m, Side::Plus, 48).is_err());
    }

    #[test]
    fn identity_pullback_is_radial_harmonic_extension() {
        // u = e^{-k s'} cos(k theta) near the plus end pulls back to the
        // harmonic extension r^k cos(k alpha)
        let cyl = deep_cylinder();
        let y_p = cyl.y_plus();
        let k = 2.0;
        let map = SurfaceMap::from_fn(cyl, 1, |s, t| {
            vec![(-k * (y_p - s)).exp() * (k * t).cos()]
        });
        let b = extract_bubble(&map, &MoebiusParams::identity(), Side::Plus, 64).unwrap();
        let kr = b.radii.len() * 3 / 4;
        let r = b.radii[kr];
        for l in (0..b.alphas.len()).step_by(5) {
            let want = r.powf(k) * (k * b.alphas[l]).cos();
            let got = b.disc_map[[kr, l, 0]];
            assert!(
                (got - want).abs() < 2e-2 * r.powf(k).max(0.05),
                "r {r} alpha {} got {got} want {want}",
                b.alphas[l]
            );
        }
    }

    #[test]
    fn disc_energy_matches_half_cylinder_energy() {
        let cyl = deep_cylinder();
        let y_p = cyl.y_plus();
        let k = 2.0;
        let map = SurfaceMap::from_fn(cyl.clone(), 1, |s, t| {
            vec![(-k * (y_p - s)).exp() * (k * t).cos()]
        });
        let b = extract_bubble(&map, &MoebiusParams::identity(), Side::Plus, 96).unwrap();
        let e_disc = disc_energy(&b);
        // closed form over the full end: pi k / 2 (tail beyond depth is
        // exponentially negligible)
        let want = std::f64::consts::PI * k / 2.0;
        assert!(
            (e_disc - want).abs() < 0.05 * want,
            "disc {e_disc} want {want}"
        );
    }

    #[test]
    fn conformality_defect_of_stretched_plane_is_three_times_area() {
        // u = (x, 2y, 0): flat Hopf differential is identically -3
        let cyl = deep_cylinder();
        let map = SurfaceMap::from_fn(cyl, 3, |_, t| vec![t.cos(), t.sin(), 0.0]);
        let mut b = extract_bubble(&map, &MoebiusParams::identity(), Side::Plus, 96).unwrap();
        for k in 0..b.radii.len() {
            let r = b.radii[k];
            for l in 0..b.alphas.len() {
                let a = b.alphas[l];
                b.disc_map[[k, l, 0]] = r * a.cos();
                b.disc_map[[k, l, 1]] = 2.0 * r * a.sin();
                b.disc_map[[k, l, 2]] = 0.0;
            }
        }
        let (r_in, r_out) = (0.2, 0.8);
        let d = conformality_defect(&b, r_in, r_out);
        let want = 3.0 * std::f64::consts::PI * (r_out * r_out - r_in * r_in);
        assert!((d - want).abs() < 0.05 * want, "defect {d} want {want}");
        // the conformal companion (x, y, 0) has zero defect
        for k in 0..b.radii.len() {
            let r = b.radii[k];
            for l in 0..b.alphas.len() {
                b.disc_map[[k, l, 1]] = r * b.alphas[l].sin();
            }
        }
        // bounded by the angular finite-difference truncation, far below
        // the non-conformal value above
        assert!(conformality_defect(&b, r_in, r_out) < 0.05);
    }

    #[test]
    fn chunk_loss_constant_hopf_matches_quadrature_and_is_monotone() {
        // u = (2s, theta-circle): phi = 4 rho_factor... direct build keeps
        // the check independent of the map: use a constant phi field
        let cyl = deep_cylinder();
        let h = HopfField {
            phi: ndarray::Array2::from_elem((cyl.n_s(), cyl.n_theta()), C::new(3.0, 0.0)),
            poles: vec![],
            cyl: cyl.clone(),
        };
        let l1 = chunk_integral(&h, Side::Plus, 1.0);
        let l2 = chunk_integral(&h, Side::Plus, 2.0);
        assert!(l1 > 0.0 && l2 > l1);
        // direct quadrature of 3 * 2 pi * int rho^{-2} ds over the chunk
        let mut want = 0.0;
        let n = 4001;
        let a = cyl.y_plus() - 1.0;
        let hq = 1.0 / (n as f64 - 1.0);
        for i in 0..n {
            let s = a + i as f64 * hq;
            let rho = cyl.profile(s.min(cyl.y_plus())).unwrap();
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            want += 3.0 * std::f64::consts::TAU / (rho * rho) * w * hq;
        }
        assert!((l1 - want).abs() < 0.02 * want, "loss {l1} want {want}");
    }

    #[test]
    fn catenoid_end_chunk_loses_no_hopf() {
        // phi vanishes identically; the discrete loss is pure finite
        // difference truncation and shrinks under refinement
        let loss_at = |n_s: usize| {
            let cyl = HyperbolicCylinder::new(2.0f64, 1.0, 1.0, n_s, 32).unwrap();
            let map = SurfaceMap::from_fn(cyl, 3, |s, t| {
                vec![s.cosh() * t.cos(), s.cosh() * t.sin(), s]
            });
            hopf_loss_on_chunk(&map, Side::Plus, 0.5).unwrap()
        };
        let coarse = loss_at(65);
        let fine = loss_at(257);
        assert!(coarse < 0.1, "coarse loss {coarse}");
        assert!(fine < coarse / 4.0, "no refinement gain: {coarse} -> {fine}");
    }

    #[test]
    fn anchor_images_are_cube_roots() {
        let cyl = deep_cylinder();
        let map = SurfaceMap::from_fn(cyl, 2, |_, t| vec![t.cos(), t.sin()]);
        let b = extract_bubble(&map, &MoebiusParams::identity(), Side::Plus, 32).unwrap();
        for (j, a) in b.anchor_images.iter().enumerate() {
            let want = C::from_polar(1.0, std::f64::consts::TAU * (j as f64 + 1.0) / 3.0);
            assert!((a - want).norm() < 1e-12);
        }
    }
}
