//! The Hopf differential `Phi = phi dz^2`, `z = s + i theta`, and its
//! complex-analytic toolkit: dbar defect, horizontal and vertical
//! projections, boundary residues, modification kernels, and the mollifier.

use ndarray::Array2;

use crate::contour::{circle_average, residue as contour_residue};
use crate::curves::BoundaryParamField;
use crate::error::{Error, Result};
use crate::field::{spectral_theta_derivative, SurfaceMap};
use crate::geometry::{quad_norm_re_dz2, HyperbolicCylinder};
use crate::moebius::{MoebiusParams, Side};
use crate::quad::simpson_weight;
use crate::scalar::{Cx, Real};

/// Grid cells excluded around each boundary pole in area integrals.
pub const POLE_HALO_CELLS: f64 = 2.0;

/// A marked simple pole on one of the constrained boundaries.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPole<T: Real> {
    pub side: Side,
    pub theta: T,
}

#[derive(Debug, Clone)]
pub struct HopfField<T: Real> {
    /// n_s x n_theta samples of phi.
    pub phi: Array2<Cx<T>>,
    pub poles: Vec<BoundaryPole<T>>,
    pub cyl: HyperbolicCylinder<T>,
}

impl<T: Real> HopfField<T> {
    /// Complex position of a marked pole, `z = s + i theta`.
    pub fn pole_position(&self, k: usize) -> Cx<T> {
        let p = self.poles[k];
        let s = match p.side {
            Side::Minus => -self.cyl.y_minus(),
            Side::Plus => self.cyl.y_plus(),
        };
        Cx::new(s, p.theta)
    }

    /// Bilinear interpolation at `z = s + i theta`, theta-periodic, with
    /// conjugate reflection across the s-boundaries (the extension used to
    /// run contours around boundary poles).
    pub fn interp(&self, z: Cx<T>) -> Cx<T> {
        let mut s = z.re;
        let y_m = -self.cyl.y_minus();
        let y_p = self.cyl.y_plus();
        let mut conjugate = false;
        // reflect (at most a few times; contours stay near one end)
        for _ in 0..8 {
            if s < y_m {
                s = y_m + (y_m - s);
                conjugate = !conjugate;
            } else if s > y_p {
                s = y_p - (s - y_p);
                conjugate = !conjugate;
            } else {
                break;
            }
        }
        let h_s = self.cyl.h_s();
        let h_t = self.cyl.h_theta();
        let n_s = self.cyl.n_s();
        let n_t = self.cyl.n_theta();
        let fi = ((s - y_m) / h_s)
            .max(T::zero())
            .min(T::of((n_s - 1) as f64));
        let mut ft = z.im / h_t;
        let n_tf = T::of(n_t as f64);
        ft = ft % n_tf;
        if ft < T::zero() {
            ft += n_tf;
        }
        let i0 = fi.floor().to_f64_lossy() as usize;
        let i1 = (i0 + 1).min(n_s - 1);
        let j0 = ft.floor().to_f64_lossy() as usize % n_t;
        let j1 = (j0 + 1) % n_t;
        let wi = fi - T::of(i0 as f64);
        let wj = ft - T::of(j0 as f64);
        let one = T::one();
        let v = self.phi[[i0, j0]] * ((one - wi) * (one - wj))
            + self.phi[[i1, j0]] * (wi * (one - wj))
            + self.phi[[i0, j1]] * ((one - wi) * wj)
            + self.phi[[i1, j1]] * (wi * wj);
        if conjugate {
            v.conj()
        } else {
            v
        }
    }

    /// True if grid point (i, j) lies within the exclusion halo of any
    /// marked pole (Chebyshev distance in grid cells).
    pub fn in_pole_halo(&self, i: usize, j: usize) -> bool {
        let halo = T::of(POLE_HALO_CELLS + 1e-9);
        let s = self.cyl.s_at(i);
        let t = self.cyl.theta_at(j);
        for k in 0..self.poles.len() {
            let p = self.pole_position(k);
            let ds = ((s - p.re) / self.cyl.h_s()).abs();
            let dt = cyc_dist(t, p.im) / self.cyl.h_theta();
            if ds.max(dt) <= halo {
                return true;
            }
        }
        false
    }
}

fn cyc_dist<T: Real>(a: T, b: T) -> T {
    let tau = T::TAU();
    let mut d = (a - b) % tau;
    if d < T::zero() {
        d += tau;
    }
    d.min(tau - d)
}

/// `phi = |u_s|^2 - |u_theta|^2 - 2 i <u_s, u_theta>`, with poles marked at
/// the anchors of each constrained boundary.
pub fn hopf_from_map<T: Real>(map: &SurfaceMap<T>) -> HopfField<T> {
    let us = map.d_s();
    let ut = map.d_theta(1);
    let (n_s, n_t, dim) = map.values.dim();
    let mut phi = Array2::from_elem((n_s, n_t), Cx::new(T::zero(), T::zero()));
    for i in 0..n_s {
        for j in 0..n_t {
            let mut ss = T::zero();
            let mut tt = T::zero();
            let mut st = T::zero();
            for d in 0..dim {
                ss += us[[i, j, d]] * us[[i, j, d]];
                tt += ut[[i, j, d]] * ut[[i, j, d]];
                st += us[[i, j, d]] * ut[[i, j, d]];
            }
            phi[[i, j]] = Cx::new(ss - tt, -T::of(2.0) * st);
        }
    }
    let mut poles = Vec::new();
    let mark = |field: &BoundaryParamField<T>, side: Side, poles: &mut Vec<BoundaryPole<T>>| {
        for &idx in field.anchor_indices.iter() {
            poles.push(BoundaryPole {
                side,
                theta: map.cyl.theta_at(idx),
            });
        }
    };
    if let Some(f) = &map.boundary_minus {
        mark(f, Side::Minus, &mut poles);
    }
    if let Some(f) = &map.boundary_plus {
        mark(f, Side::Plus, &mut poles);
    }
    HopfField {
        phi,
        poles,
        cyl: map.cyl.clone(),
    }
}

/// `dbar phi = 1/2 (d_s + i d_theta) phi` on the grid (central s stencils,
/// spectral theta).
pub fn dbar_field<T: Real>(h: &HopfField<T>) -> Array2<Cx<T>> {
    let (n_s, n_t) = h.phi.dim();
    // pack re/im as two channels for the spectral helper
    let mut packed = ndarray::Array3::zeros((n_s, n_t, 2));
    for i in 0..n_s {
        for j in 0..n_t {
            packed[[i, j, 0]] = h.phi[[i, j]].re;
            packed[[i, j, 1]] = h.phi[[i, j]].im;
        }
    }
    let dth = spectral_theta_derivative(&packed, 1);
    let hs = h.cyl.h_s();
    let two_h = T::of(2.0) * hs;
    let mut out = Array2::from_elem((n_s, n_t), Cx::new(T::zero(), T::zero()));
    for j in 0..n_t {
        for i in 0..n_s {
            let ds = if i == 0 {
                (-h.phi[[0, j]] * T::of(3.0) + h.phi[[1, j]] * T::of(4.0) - h.phi[[2, j]])
                    / two_h
            } else if i == n_s - 1 {
                (h.phi[[n_s - 1, j]] * T::of(3.0) - h.phi[[n_s - 2, j]] * T::of(4.0)
                    + h.phi[[n_s - 3, j]])
                    / two_h
            } else {
                (h.phi[[i + 1, j]] - h.phi[[i - 1, j]]) / two_h
            };
            let dt = Cx::new(dth[[i, j, 0]], dth[[i, j, 1]]);
            out[[i, j]] = (ds + Cx::new(T::zero(), T::one()) * dt) * T::of(0.5);
        }
    }
    out
}

/// Flat L^1 norm of dbar phi away from the pole halos.
pub fn dbar_defect<T: Real>(h: &HopfField<T>) -> T {
    let db = dbar_field(h);
    let (n_s, n_t) = h.phi.dim();
    let h_t = h.cyl.h_theta();
    let mut acc = T::zero();
    for i in 0..n_s {
        let ws = simpson_weight(i, n_s, h.cyl.h_s());
        for j in 0..n_t {
            if !h.in_pole_halo(i, j) {
                acc += ws * h_t * db[[i, j]].norm();
            }
        }
    }
    acc
}

/// Horizontal projection: coefficient
/// `[int int 2 rho^{-2} Re phi dtheta ds] / ||Re dz^2||^2` (pole halos
/// excluded symmetrically in theta) and the norm |coefficient| ||Re dz^2||.
pub fn horizontal_projection<T: Real>(h: &HopfField<T>) -> (T, T) {
    let (n_s, n_t) = h.phi.dim();
    let h_t = h.cyl.h_theta();
    let mut num = T::zero();
    for i in 0..n_s {
        let rho = h.cyl.profile(h.cyl.s_at(i)).expect("grid s in band");
        let w = simpson_weight(i, n_s, h.cyl.h_s()) * h_t * T::of(2.0) / (rho * rho);
        for j in 0..n_t {
            if !h.in_pole_halo(i, j) {
                num += w * h.phi[[i, j]].re;
            }
        }
    }
    let norm_re_dz2 = quad_norm_re_dz2(&h.cyl);
    let coeff = num / (norm_re_dz2 * norm_re_dz2);
    (coeff, coeff.abs() * norm_re_dz2)
}

/// Symmetric 2-tensor field on the grid, components (ss, s-theta,
/// theta-theta).
pub type TensorGrid<T> = (Array2<T>, Array2<T>, Array2<T>);

/// `Re Phi` as a symmetric 2-tensor: `Re(phi dz^2)` has components
/// `(Re phi, -Im phi, -Re phi)`.
pub fn re_phi_tensor<T: Real>(h: &HopfField<T>) -> TensorGrid<T> {
    let (n_s, n_t) = h.phi.dim();
    let mut ss = Array2::zeros((n_s, n_t));
    let mut st = Array2::zeros((n_s, n_t));
    let mut tt = Array2::zeros((n_s, n_t));
    for i in 0..n_s {
        for j in 0..n_t {
            ss[[i, j]] = h.phi[[i, j]].re;
            st[[i, j]] = -h.phi[[i, j]].im;
            tt[[i, j]] = -h.phi[[i, j]].re;
        }
    }
    (ss, st, tt)
}

/// L^2(C, g) inner product of symmetric 2-tensors with respect to the
/// collar metric: `int rho^{-2} (A_ss B_ss + 2 A_st B_st + A_tt B_tt)`.
pub fn tensor_inner<T: Real>(
    cyl: &HyperbolicCylinder<T>,
    a: &TensorGrid<T>,
    b: &TensorGrid<T>,
) -> T {
    let (n_s, n_t) = a.0.dim();
    let h_t = cyl.h_theta();
    let mut acc = T::zero();
    for i in 0..n_s {
        let rho = cyl.profile(cyl.s_at(i)).expect("grid s in band");
        let w = simpson_weight(i, n_s, cyl.h_s()) * h_t / (rho * rho);
        for j in 0..n_t {
            acc += w
                * (a.0[[i, j]] * b.0[[i, j]]
                    + T::of(2.0) * a.1[[i, j]] * b.1[[i, j]]
                    + a.2[[i, j]] * b.2[[i, j]]);
        }
    }
    acc
}

/// Finite-difference step in the Möbius chart for generator tensors.
pub const CHART_FD_STEP: f64 = 1e-5;

/// The three generator tensors `L_{Y_p} g`, p in {|b|, Arg b, phi}, by
/// central finite differences of the pulled-back metric in chart space.
pub fn vertical_generators<T: Real>(
    cyl: &HyperbolicCylinder<T>,
    m: &MoebiusParams<T>,
    side: Side,
) -> Result<[TensorGrid<T>; 3]> {
    let (b_abs, b_arg, phi) = m.chart();
    let step = T::of(CHART_FD_STEP);
    let eval = |chart: (T, T, T)| -> Result<TensorGrid<T>> {
        let mm = MoebiusParams::from_chart(chart.0, chart.1, chart.2)?;
        let (n_s, n_t) = (cyl.n_s(), cyl.n_theta());
        let mut ss = Array2::zeros((n_s, n_t));
        let mut st = Array2::zeros((n_s, n_t));
        let mut tt = Array2::zeros((n_s, n_t));
        for i in 0..n_s {
            for j in 0..n_t {
                let (a, b, c) = crate::moebius::pullback_metric_at(cyl, &mm, side, i, j)?;
                ss[[i, j]] = a;
                st[[i, j]] = b;
                tt[[i, j]] = c;
            }
        }
        Ok((ss, st, tt))
    };
    let diff = |plus: TensorGrid<T>, minus: TensorGrid<T>, width: T| -> TensorGrid<T> {
        (
            (plus.0 - minus.0).mapv(|v| v / width),
            (plus.1 - minus.1).mapv(|v| v / width),
            (plus.2 - minus.2).mapv(|v| v / width),
        )
    };
    let mut out: Vec<TensorGrid<T>> = Vec::with_capacity(3);
    for p in 0..3 {
        let perturb = |sign: T| -> (T, T, T) {
            match p {
                0 => (b_abs + sign * step, b_arg, phi),
                1 => (b_abs, b_arg + sign * step, phi),
                _ => (b_abs, b_arg, phi + sign * step),
            }
        };
        // back off to a one-sided stencil if |b| + step hits the disc edge
        let g = if p == 0 && b_abs + step >= T::one() - T::of(1e-12) {
            diff(eval(perturb(T::zero()))?, eval(perturb(-T::one()))?, step)
        } else {
            diff(
                eval(perturb(T::one()))?,
                eval(perturb(-T::one()))?,
                T::of(2.0) * step,
            )
        };
        out.push(g);
    }
    let mut it = out.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

/// Projection of an arbitrary symmetric tensor onto the span of the three
/// vertical generators: solves the Gram system and returns the chart
/// coefficients and the norm of the projected tensor.
pub fn project_onto_generators<T: Real>(
    cyl: &HyperbolicCylinder<T>,
    gens: &[TensorGrid<T>; 3],
    target: &TensorGrid<T>,
) -> Result<([T; 3], T)> {
    let mut gram = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for p in 0..3 {
        rhs[p] = tensor_inner(cyl, target, &gens[p]);
        for q in p..3 {
            let v = tensor_inner(cyl, &gens[p], &gens[q]);
            gram[p][q] = v;
            gram[q][p] = v;
        }
    }
    let x = solve3(&gram, &rhs)?;
    let mut norm_sq = T::zero();
    for p in 0..3 {
        for q in 0..3 {
            norm_sq += x[p] * gram[p][q] * x[q];
        }
    }
    Ok((x, norm_sq.max(T::zero()).sqrt()))
}

/// Vertical projection of `Re Phi` for one side at the current Möbius
/// parameters.
pub fn vertical_projection<T: Real>(
    h: &HopfField<T>,
    side: Side,
    m: &MoebiusParams<T>,
) -> Result<([T; 3], T)> {
    let gens = vertical_generators(&h.cyl, m, side)?;
    let target = re_phi_tensor(h);
    project_onto_generators(&h.cyl, &gens, &target)
}

/// Solve a symmetric 3x3 system; degenerate charts (1-norm condition
/// number above 1e12) are reported as errors.
fn solve3<T: Real>(a: &[[T; 3]; 3], b: &[T; 3]) -> Result<[T; 3]> {
    // adjugate inverse
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let norm_a = one_norm3(a);
    if det.abs() <= T::zero() {
        return Err(Error::DegenerateChart("singular Gram matrix".into()));
    }
    let mut inv = [[T::zero(); 3]; 3];
    let cof = |r1: usize, c1: usize, r2: usize, c2: usize| a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1];
    inv[0][0] = cof(1, 1, 2, 2) / det;
    inv[0][1] = -cof(0, 1, 2, 2) / det;
    inv[0][2] = cof(0, 1, 1, 2) / det;
    inv[1][0] = -cof(1, 0, 2, 2) / det;
    inv[1][1] = cof(0, 0, 2, 2) / det;
    inv[1][2] = -cof(0, 0, 1, 2) / det;
    inv[2][0] = cof(1, 0, 2, 1) / det;
    inv[2][1] = -cof(0, 0, 2, 1) / det;
    inv[2][2] = cof(0, 0, 1, 1) / det;
    let cond = norm_a * one_norm3(&inv);
    if cond > T::of(1e12) {
        return Err(Error::DegenerateChart(format!(
            "Gram condition number {:.3e} exceeds 1e12 (b near 0?)",
            cond.to_f64_lossy()
        )));
    }
    let mut x = [T::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            x[i] += inv[i][j] * b[j];
        }
    }
    Ok(x)
}

fn one_norm3<T: Real>(a: &[[T; 3]; 3]) -> T {
    (0..3)
        .map(|j| (0..3).fold(T::zero(), |acc, i| acc + a[i][j].abs()))
        .fold(T::zero(), |acc, v| acc.max(v))
}

/// The cylinder-periodic simple-pole kernel
/// `h_p(z) = i / (2 tanh((z - p)/2))`, residue `i` at `p`.
pub fn h_p_kernel<T: Real>(z: Cx<T>, p: Cx<T>) -> Cx<T> {
    let w = (z - p) * T::of(0.5);
    let t = w.tanh();
    if t.norm() == T::zero() {
        // at the pole (or a period image); caller masks these points
        return Cx::new(T::zero(), T::zero());
    }
    if !t.re.is_finite() || !t.im.is_finite() {
        // tanh pole at w = i pi/2 (theta antipode): h = i/(2t) -> 0
        return Cx::new(T::zero(), T::zero());
    }
    Cx::new(T::zero(), T::of(0.5)) / t
}

#[derive(Debug, Clone, Copy)]
pub struct ResidueEstimate<T: Real> {
    pub value: Cx<T>,
    /// Max pairwise deviation over an internal radius sweep.
    pub spread: T,
}

/// Residue via an explicit field evaluator (exact closures for synthetic
/// oracles, `|z| h.interp(z)` for grid fields).
pub fn residue_at_with<T: Real>(
    h: &HopfField<T>,
    pole_index: usize,
    radius: T,
    f: impl Fn(Cx<T>) -> Cx<T>,
) -> Result<ResidueEstimate<T>> {
    let p = h.pole_position(pole_index);
    let min_r = T::of(3.0) * h.cyl.h_s().max(h.cyl.h_theta());
    if radius < min_r {
        return Err(Error::Contour(format!(
            "radius {} below 3 grid cells ({})",
            radius.to_f64_lossy(),
            min_r.to_f64_lossy()
        )));
    }
    let mut nearest = T::infinity();
    for k in 0..h.poles.len() {
        if k != pole_index {
            let q = h.pole_position(k);
            let d_theta = cyc_dist(p.im, q.im);
            let d = Cx::new(p.re - q.re, d_theta).norm();
            nearest = nearest.min(d);
        }
    }
    if radius > nearest * T::of(0.5) {
        return Err(Error::Contour(format!(
            "radius {} exceeds half the distance {} to the nearest pole",
            radius.to_f64_lossy(),
            (nearest * T::of(0.5)).to_f64_lossy()
        )));
    }
    let n = 256;
    let vals: Vec<Cx<T>> = [0.85, 1.0, 1.15]
        .iter()
        .map(|&fac| contour_residue(&f, p, radius * T::of(fac), n))
        .collect();
    let mut spread = T::zero();
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            spread = spread.max((vals[i] - vals[j]).norm());
        }
    }
    Ok(ResidueEstimate {
        value: vals[1],
        spread,
    })
}

/// Residue of the grid field at a marked pole (boundary-reflected bilinear
/// interpolation on the contour).
pub fn residue_at<T: Real>(
    h: &HopfField<T>,
    pole_index: usize,
    radius: T,
) -> Result<ResidueEstimate<T>> {
    residue_at_with(h, pole_index, radius, |z| h.interp(z))
}

/// Default contour radius: `max(3 max(h_s, h_theta), eps1 / 4)` with
/// `eps1` the smallest pairwise pole spacing on the side.
pub fn default_contour_radius<T: Real>(h: &HopfField<T>, side: Side) -> T {
    let cells = T::of(3.0) * h.cyl.h_s().max(h.cyl.h_theta());
    let mut eps1 = T::infinity();
    let idx: Vec<usize> = (0..h.poles.len())
        .filter(|&k| h.poles[k].side == side)
        .collect();
    for (a, &i) in idx.iter().enumerate() {
        for &j in idx.iter().skip(a + 1) {
            eps1 = eps1.min(cyc_dist(h.poles[i].theta, h.poles[j].theta));
        }
    }
    if eps1.is_finite() {
        cells.max(eps1 / T::of(4.0))
    } else {
        cells
    }
}

/// Modification data for one side: clustered poles, their residues, the
/// real coefficients `a^j`, and the assembled kernel combination.
#[derive(Debug, Clone)]
pub struct ModificationSet<T: Real> {
    pub side: Side,
    /// theta positions of the side's poles.
    pub thetas: Vec<T>,
    pub residues: Vec<Cx<T>>,
    /// Real coefficients a^j, summing to zero exactly within each cluster.
    pub coefficients: Vec<T>,
    /// Index groups sharing a cluster.
    pub clusters: Vec<Vec<usize>>,
    /// `m = sum_j a^j h_{p^j}` sampled on the grid (zero at pole nodes).
    pub m_field: Array2<Cx<T>>,
    /// Max |Re residue| observed — residues of stationary boundaries are
    /// purely imaginary; this measures the defect.
    pub residue_realness_defect: T,
}

/// Cluster the side's poles by cyclic theta proximity and build the
/// modification coefficients: `a^j = 0` for singletons and
/// `a^j = (res_j - cluster mean)/i` (made exactly real, summing to zero)
/// for clusters.
pub fn build_modification_from_residues<T: Real>(
    cyl: &HyperbolicCylinder<T>,
    side: Side,
    thetas: &[T],
    residues: &[Cx<T>],
    cluster_tol: T,
) -> ModificationSet<T> {
    let n = thetas.len();
    assert_eq!(residues.len(), n);
    // union-find style clustering by pairwise distance < tol
    let mut cluster_of: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if cyc_dist(thetas[i], thetas[j]) < cluster_tol {
                let (a, b) = (cluster_of[i], cluster_of[j]);
                let target = a.min(b);
                for c in cluster_of.iter_mut() {
                    if *c == a || *c == b {
                        *c = target;
                    }
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        let root = cluster_of[i];
        if let Some(pos) = seen.iter().position(|&r| r == root) {
            clusters[pos].push(i);
        } else {
            seen.push(root);
            clusters.push(vec![i]);
        }
    }

    let mut coefficients = vec![T::zero(); n];
    let mut realness = T::zero();
    for members in &clusters {
        if members.len() < 2 {
            continue;
        }
        let k = T::of(members.len() as f64);
        let mean_im =
            members.iter().fold(T::zero(), |acc, &j| acc + residues[j].im) / k;
        let mut partial = T::zero();
        for (pos, &j) in members.iter().enumerate() {
            realness = realness.max(residues[j].re.abs());
            if pos + 1 == members.len() {
                coefficients[j] = -partial; // exact zero sum
            } else {
                coefficients[j] = residues[j].im - mean_im;
                partial += coefficients[j];
            }
        }
    }

    let s_b = match side {
        Side::Minus => -cyl.y_minus(),
        Side::Plus => cyl.y_plus(),
    };
    let (n_s, n_t) = (cyl.n_s(), cyl.n_theta());
    let mut m_field = Array2::from_elem((n_s, n_t), Cx::new(T::zero(), T::zero()));
    for i in 0..n_s {
        for j in 0..n_t {
            let z = Cx::new(cyl.s_at(i), cyl.theta_at(j));
            let mut acc = Cx::new(T::zero(), T::zero());
            for (pj, &a) in coefficients.iter().enumerate() {
                if a != T::zero() {
                    acc += h_p_kernel(z, Cx::new(s_b, thetas[pj])) * a;
                }
            }
            m_field[[i, j]] = acc;
        }
    }

    ModificationSet {
        side,
        thetas: thetas.to_vec(),
        residues: residues.to_vec(),
        coefficients,
        clusters,
        m_field,
        residue_realness_defect: realness,
    }
}

/// Full pipeline: residues at the side's marked poles (default radius),
/// then the clustered modification.
pub fn build_modification<T: Real>(
    h: &HopfField<T>,
    side: Side,
    cluster_tol: T,
) -> Result<ModificationSet<T>> {
    let idx: Vec<usize> = (0..h.poles.len())
        .filter(|&k| h.poles[k].side == side)
        .collect();
    let radius = default_contour_radius(h, side);
    let mut thetas = Vec::new();
    let mut residues = Vec::new();
    for &k in &idx {
        thetas.push(h.poles[k].theta);
        residues.push(residue_at(h, k, radius)?.value);
    }
    Ok(build_modification_from_residues(
        &h.cyl,
        side,
        &thetas,
        &residues,
        cluster_tol,
    ))
}

/// Pointwise mollification
/// `phi^(r)(z) = circle-average(phi; z, r) - sum_j res_j sigma^j(z)/(p^j - z)`
/// with `sigma^j = 1` when the pole lies inside the circle.
pub fn mollify_at<T: Real>(
    f: impl Fn(Cx<T>) -> Cx<T>,
    poles: &[(Cx<T>, Cx<T>)],
    r: T,
    z: Cx<T>,
    n: usize,
) -> Cx<T> {
    let mut out = circle_average(&f, z, r, n);
    for &(p, res) in poles {
        if (p - z).norm() < r {
            out -= res / (p - z);
        }
    }
    out
}

/// Normalized stationarity defect on one boundary: max of |Im phi| outside
/// the pole halos, divided by the mean of |phi| there.
pub fn stationarity_defect<T: Real>(h: &HopfField<T>, side: Side) -> T {
    let i = match side {
        Side::Minus => 0,
        Side::Plus => h.cyl.n_s() - 1,
    };
    let n_t = h.cyl.n_theta();
    let mut max_im = T::zero();
    let mut mean_abs = T::zero();
    let mut count = 0usize;
    for j in 0..n_t {
        if !h.in_pole_halo(i, j) {
            max_im = max_im.max(h.phi[[i, j]].im.abs());
            mean_abs += h.phi[[i, j]].norm();
            count += 1;
        }
    }
    if count == 0 {
        return T::zero();
    }
    mean_abs /= T::of(count as f64);
    if mean_abs < T::of(1e-14) {
        T::zero()
    } else {
        max_im / mean_abs
    }
}
