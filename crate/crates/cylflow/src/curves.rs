//! Closed boundary curves in R^n: spline evaluation by arclength, anchor
//! bookkeeping, and the monotone (Plateau) reparametrization projection.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Subsamples per spline segment used for the arclength tables.
const ARC_SUBSAMPLES: usize = 64;

/// A closed Jordan curve sampled as a polyline and smoothed by a periodic
/// centripetal Catmull-Rom spline, parametrized by arclength.
#[derive(Debug, Clone)]
pub struct BoundaryCurve<T: Real> {
    points: Array2<T>, // N x dim
    /// Cumulative arclength at each sample; `cum[N] = total_length`.
    cum: Vec<T>,
    /// Per segment: fine table of (local knot parameter, arclength within
    /// the segment), both of length ARC_SUBSAMPLES + 1.
    seg_tables: Vec<(Vec<T>, Vec<T>)>,
    /// Centripetal knot increments per segment.
    knots: Vec<T>,
    total_length: T,
    /// Arclength parameters of the three anchors, strictly increasing in
    /// [0, total_length).
    anchor_tau: [T; 3],
}

impl<T: Real> BoundaryCurve<T> {
    /// Build from a closed list of samples (no repeated endpoint) and three
    /// anchor arclength parameters.
    pub fn new(points: Array2<T>, anchor_tau: [T; 3]) -> Result<Self> {
        let mut curve = Self::without_anchors(points)?;
        curve.set_anchors(anchor_tau)?;
        Ok(curve)
    }

    /// Build with default anchors at 1/3-spaced arclengths.
    pub fn with_default_anchors(points: Array2<T>) -> Result<Self> {
        let curve = Self::without_anchors(points)?;
        let l = curve.total_length;
        let third = l / T::of(3.0);
        Self::new(curve.points, [T::zero(), third, third + third])
    }

    fn without_anchors(points: Array2<T>) -> Result<Self> {
        let n = points.nrows();
        if n < 4 {
            return Err(Error::Validation("curve needs at least 4 samples".into()));
        }
        if points.ncols() < 2 {
            return Err(Error::Validation("curve dimension must be >= 2".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("curve samples must be finite".into()));
        }

        // Centripetal knots: dt_i = |P_{i+1} - P_i|^(1/2).
        let mut knots = Vec::with_capacity(n);
        for i in 0..n {
            let d = row_dist(points.row(i), points.row((i + 1) % n));
            if !(d > T::zero()) {
                return Err(Error::Validation(format!(
                    "repeated consecutive curve samples at index {i}"
                )));
            }
            knots.push(d.sqrt());
        }

        let mut curve = Self {
            points,
            cum: vec![T::zero(); n + 1],
            seg_tables: Vec::with_capacity(n),
            knots,
            total_length: T::zero(),
            anchor_tau: [T::zero(); 3],
        };
        curve.build_arclength_tables();
        curve.check_simple()?;
        Ok(curve)
    }

    fn build_arclength_tables(&mut self) {
        let n = self.points.nrows();
        let mut total = T::zero();
        self.seg_tables.clear();
        for i in 0..n {
            let dt = self.knots[i];
            let m = ARC_SUBSAMPLES;
            let mut ts = Vec::with_capacity(m + 1);
            let mut arcs = Vec::with_capacity(m + 1);
            let mut prev = self.spline_point(i, T::zero());
            let mut acc = T::zero();
            ts.push(T::zero());
            arcs.push(T::zero());
            for k in 1..=m {
                let t = dt * T::of(k as f64 / m as f64);
                let p = self.spline_point(i, t);
                acc += vec_dist(&prev, &p);
                ts.push(t);
                arcs.push(acc);
                prev = p;
            }
            self.cum[i] = total;
            total += acc;
            self.seg_tables.push((ts, arcs));
        }
        self.cum[n] = total;
        self.total_length = total;
    }

    /// Reject curves whose non-adjacent polyline segments come closer than
    /// a small fraction of the total length.
    fn check_simple(&self) -> Result<()> {
        let n = self.points.nrows();
        let tol = self.total_length * T::of(1e-9);
        for i in 0..n {
            for j in i + 1..n {
                // skip adjacent segments (sharing a sample), cyclically
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let d = segment_distance(
                    self.points.row(i),
                    self.points.row((i + 1) % n),
                    self.points.row(j),
                    self.points.row((j + 1) % n),
                );
                if d <= tol {
                    return Err(Error::Validation(format!(
                        "curve self-intersects near segments {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn set_anchors(&mut self, anchor_tau: [T; 3]) -> Result<()> {
        let l = self.total_length;
        let a: Vec<T> = anchor_tau.iter().map(|&t| wrap_len(t, l)).collect();
        if !(a[0] < a[1] && a[1] < a[2]) {
            return Err(Error::Validation(
                "anchors must be strictly ordered along the curve".into(),
            ));
        }
        self.anchor_tau = [a[0], a[1], a[2]];
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.points.nrows()
    }

    pub fn total_length(&self) -> T {
        self.total_length
    }

    pub fn anchor_tau(&self) -> [T; 3] {
        self.anchor_tau
    }

    /// Anchor target points Q^j on the curve.
    pub fn anchor_points(&self) -> [Array1<T>; 3] {
        [
            self.eval(self.anchor_tau[0]),
            self.eval(self.anchor_tau[1]),
            self.eval(self.anchor_tau[2]),
        ]
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, T> {
        self.points.row(i)
    }

    /// Arclength of sample `i` from sample 0.
    pub fn sample_arclength(&self, i: usize) -> T {
        self.cum[i]
    }

    /// Evaluate the spline at arclength `tau` (taken mod total length).
    pub fn eval(&self, tau: T) -> Array1<T> {
        let n = self.points.nrows();
        let tau = wrap_len(tau, self.total_length);
        // locate the segment
        let mut lo = 0usize;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cum[mid] <= tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let seg = lo;
        let local = tau - self.cum[seg];
        let t = self.invert_segment_arclength(seg, local);
        Array1::from(self.spline_point(seg, t))
    }

    /// Minimal-distance representative of `tau` relative to `base` on the
    /// universal cover.
    pub fn unwrap_near(&self, tau: T, base: T) -> T {
        let l = self.total_length;
        let mut t = base + wrap_len(tau - base + l / T::of(2.0), l) - l / T::of(2.0);
        // guard rounding at the cut
        if t - base > l / T::of(2.0) {
            t -= l;
        }
        t
    }

    fn invert_segment_arclength(&self, seg: usize, local: T) -> T {
        let (ts, arcs) = &self.seg_tables[seg];
        let m = arcs.len() - 1;
        if local <= T::zero() {
            return T::zero();
        }
        if local >= arcs[m] {
            return ts[m];
        }
        let mut lo = 0usize;
        let mut hi = m;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if arcs[mid] <= local {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let frac = (local - arcs[lo]) / (arcs[lo + 1] - arcs[lo]);
        ts[lo] + (ts[lo + 1] - ts[lo]) * frac
    }

    /// Barry-Goldman evaluation of the centripetal Catmull-Rom segment from
    /// sample `seg` to `seg + 1`, at local knot parameter `t` in
    /// `[0, knots[seg]]`.
    fn spline_point(&self, seg: usize, t: T) -> Vec<T> {
        let n = self.points.nrows();
        let p0 = self.points.row((seg + n - 1) % n);
        let p1 = self.points.row(seg);
        let p2 = self.points.row((seg + 1) % n);
        let p3 = self.points.row((seg + 2) % n);
        let dt0 = self.knots[(seg + n - 1) % n];
        let dt1 = self.knots[seg];
        let dt2 = self.knots[(seg + 1) % n];

        let t0 = -dt0;
        let t1 = T::zero();
        let t2 = dt1;
        let t3 = dt1 + dt2;

        let dim = self.points.ncols();
        let mut out = vec![T::zero(); dim];
        for d in 0..dim {
            let lerp = |ta: T, tb: T, fa: T, fb: T| {
                if tb == ta {
                    fa
                } else {
                    fa * ((tb - t) / (tb - ta)) + fb * ((t - ta) / (tb - ta))
                }
            };
            let a1 = lerp(t0, t1, p0[d], p1[d]);
            let a2 = lerp(t1, t2, p1[d], p2[d]);
            let a3 = lerp(t2, t3, p2[d], p3[d]);
            let b1 = lerp(t0, t2, a1, a2);
            let b2 = lerp(t1, t3, a2, a3);
            out[d] = lerp(t1, t2, b1, b2);
        }
        out
    }
}

fn wrap_len<T: Real>(mut x: T, l: T) -> T {
    x = x % l;
    if x < T::zero() {
        x += l;
    }
    x
}

fn row_dist<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

fn vec_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Minimal Euclidean distance between segments [a0,a1] and [b0,b1] in R^n,
/// by minimizing the quadratic over the unit square (interior critical
/// point if nondegenerate, else edge scan).
fn segment_distance<T: Real>(
    a0: ArrayView1<'_, T>,
    a1: ArrayView1<'_, T>,
    b0: ArrayView1<'_, T>,
    b1: ArrayView1<'_, T>,
) -> T {
    let dim = a0.len();
    let mut u = vec![T::zero(); dim]; // a1 - a0
    let mut v = vec![T::zero(); dim]; // b1 - b0
    let mut w = vec![T::zero(); dim]; // a0 - b0
    for d in 0..dim {
        u[d] = a1[d] - a0[d];
        v[d] = b1[d] - b0[d];
        w[d] = a0[d] - b0[d];
    }
    let dot = |x: &[T], y: &[T]| {
        x.iter()
            .zip(y.iter())
            .fold(T::zero(), |acc, (&p, &q)| acc + p * q)
    };
    let (uu, vv, uv, uw, vw) = (dot(&u, &u), dot(&v, &v), dot(&u, &v), dot(&u, &w), dot(&v, &w));
    let dist_at = |s: T, t: T| {
        let mut acc = T::zero();
        for d in 0..dim {
            let diff = w[d] + u[d] * s - v[d] * t;
            acc += diff * diff;
        }
        acc.sqrt()
    };
    let clamp01 = |x: T| x.max(T::zero()).min(T::one());
    let det = uu * vv - uv * uv;
    let mut best = T::infinity();
    if det > T::of(1e-30) {
        let s = clamp01((uv * vw - vv * uw) / det);
        let t = clamp01((uu * vw - uv * uw) / det);
        best = best.min(dist_at(s, t));
    }
    // edges of the parameter square
    for &s in &[T::zero(), T::one()] {
        let t = clamp01(if vv > T::zero() { (vw + uv * s) / vv } else { T::zero() });
        best = best.min(dist_at(s, t));
    }
    for &t in &[T::zero(), T::one()] {
        let s = clamp01(if uu > T::zero() { (uv * t - uw) / uu } else { T::zero() });
        best = best.min(dist_at(s, t));
    }
    best
}

/// Per-boundary-gridpoint curve parameters, lifted to the universal cover
/// so weak monotonicity is a plain inequality, with three pinned anchors.
#[derive(Debug, Clone)]
pub struct BoundaryParamField<T: Real> {
    /// Lifted parameters, one per theta gridpoint; winding is one period:
    /// conceptually tau[k + n] = tau[k] + total_length.
    pub tau: Vec<T>,
    /// Grid indices pinned to the anchor parameters, strictly increasing.
    pub anchor_indices: [usize; 3],
    /// Lifted anchor parameter values: tau[anchor_indices[j]] equals these
    /// exactly at all times.
    pub anchor_tau: [T; 3],
    pub total_length: T,
}

impl<T: Real> BoundaryParamField<T> {
    pub fn new(
        tau: Vec<T>,
        anchor_indices: [usize; 3],
        anchor_tau: [T; 3],
        total_length: T,
    ) -> Result<Self> {
        if !(anchor_indices[0] < anchor_indices[1] && anchor_indices[1] < anchor_indices[2])
            || anchor_indices[2] >= tau.len()
        {
            return Err(Error::Validation("anchor indices must be strictly increasing and in range".into()));
        }
        let mut field = Self {
            tau,
            anchor_indices,
            anchor_tau,
            total_length,
        };
        field.pin_anchors();
        Ok(field)
    }

    fn pin_anchors(&mut self) {
        for j in 0..3 {
            self.tau[self.anchor_indices[j]] = self.anchor_tau[j];
        }
    }

    pub fn n(&self) -> usize {
        self.tau.len()
    }

    /// True if tau is weakly monotone within each anchor-delimited arc
    /// (cyclically, with one-period winding).
    pub fn is_monotone(&self) -> bool {
        let n = self.n();
        for k in 0..n {
            let next = if k + 1 == n {
                self.tau[0] + self.total_length
            } else {
                self.tau[k + 1]
            };
            if next < self.tau[k] {
                return false;
            }
        }
        true
    }
}

/// Project `proposed` onto the monotone cone with pinned anchors: within
/// each of the three anchor-delimited arcs, pool-adjacent-violators
/// followed by clipping to the arc's pinned endpoint values (the exact
/// Euclidean projection onto the order-and-bounds polytope).
pub fn monotone_project<T: Real>(
    field: &BoundaryParamField<T>,
    proposed: &[T],
) -> Result<BoundaryParamField<T>> {
    let n = field.n();
    if proposed.len() != n {
        return Err(Error::Validation("proposed length mismatch".into()));
    }
    let mut out = field.clone();
    out.tau.copy_from_slice(proposed);
    out.pin_anchors();

    for j in 0..3 {
        let start = field.anchor_indices[j];
        let (end, wrap) = if j < 2 {
            (field.anchor_indices[j + 1], T::zero())
        } else {
            (field.anchor_indices[0], field.total_length)
        };
        let lo = field.anchor_tau[j];
        let hi = if j < 2 {
            field.anchor_tau[j + 1]
        } else {
            field.anchor_tau[0] + field.total_length
        };

        // gather strict interior of the arc (cyclic)
        let mut interior: Vec<usize> = Vec::new();
        let mut k = (start + 1) % n;
        while k != end {
            interior.push(k);
            k = (k + 1) % n;
        }
        if interior.is_empty() {
            continue;
        }
        let mut vals: Vec<T> = interior
            .iter()
            .map(|&k| {
                // lift past the wrap point for the last arc
                if j == 2 && k < start {
                    proposed[k] + wrap
                } else {
                    proposed[k]
                }
            })
            .collect();
        pav(&mut vals);
        for v in vals.iter_mut() {
            *v = (*v).max(lo).min(hi);
        }
        for (pos, &k) in interior.iter().enumerate() {
            out.tau[k] = if j == 2 && k < start {
                vals[pos] - wrap
            } else {
                vals[pos]
            };
        }
    }
    out.pin_anchors();
    Ok(out)
}

/// In-place pool-adjacent-violators: nondecreasing least-squares fit.
fn pav<T: Real>(x: &mut [T]) {
    let n = x.len();
    // blocks of (mean, weight)
    let mut means: Vec<T> = Vec::with_capacity(n);
    let mut weights: Vec<T> = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::with_capacity(n);
    for &v in x.iter() {
        means.push(v);
        weights.push(T::one());
        sizes.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, w2, s2) = (means.pop().unwrap(), weights.pop().unwrap(), sizes.pop().unwrap());
            let last = means.len() - 1;
            let w = weights[last] + w2;
            means[last] = (means[last] * weights[last] + m2 * w2) / w;
            weights[last] = w;
            sizes[last] += s2;
        }
    }
    let mut pos = 0;
    for (m, s) in means.iter().zip(sizes.iter()) {
        for _ in 0..*s {
            x[pos] = *m;
            pos += 1;
        }
    }
}

/// Diameter in R^n of the boundary trace over a cyclic index window.
pub fn curve_oscillation<T: Real>(
    field: &BoundaryParamField<T>,
    curve: &BoundaryCurve<T>,
    window: std::ops::Range<usize>,
) -> T {
    let n = field.n();
    let pts: Vec<Array1<T>> = window.map(|k| curve.eval(field.tau[k % n])).collect();
    let mut diam = T::zero();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = vec_dist(pts[i].as_slice().unwrap(), pts[j].as_slice().unwrap());
            diam = diam.max(d);
        }
    }
    diam
}

/// Read a curve CSV: lines of comma-separated coordinates, optional header
/// `# n=<dim> closed=1`.
pub fn read_curve_csv<T: Real>(path: &std::path::Path) -> Result<Array2<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_curve_csv(&text, &path.display().to_string())
}

pub fn parse_curve_csv<T: Real>(text: &str, origin: &str) -> Result<Array2<T>> {
    let mut dim: Option<usize> = None;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("n=") {
                    dim = v.parse::<usize>().ok();
                }
            }
            continue;
        }
        let vals: std::result::Result<Vec<T>, _> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map(T::of))
            .collect();
        let vals = vals.map_err(|e| Error::Parse {
            path: origin.to_string(),
            msg: format!("line {}: {e}", lineno + 1),
        })?;
        if let Some(prev) = rows.first() {
            if vals.len() != prev.len() {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    msg: format!("line {}: inconsistent column count", lineno + 1),
                });
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: origin.to_string(),
            msg: "no data rows".into(),
        });
    }
    let ncols = rows[0].len();
    if let Some(d) = dim {
        if d != ncols {
            return Err(Error::Parse {
                path: origin.to_string(),
                msg: format!("header declares n={d} but rows have {ncols} columns"),
            });
        }
    }
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::Parse {
            path: origin.to_string(),
            msg: e.to_string(),
        })
}

pub fn write_curve_csv<T: Real>(path: &std::path::Path, points: &Array2<T>) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# n={} closed=1", points.ncols())?;
    for row in points.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{:.17e}", v.to_f64_lossy())).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Uniformly sampled circle of radius `r` in the plane `span(e1, e2)`
/// shifted by `center`, as curve samples (helper used by scenarios/tests).
pub fn circle_samples<T: Real>(r: T, height: T, n: usize) -> Array2<T> {
    let mut pts = Array2::zeros((n, 3));
    for k in 0..n {
        let t = T::TAU() * T::of(k as f64 / n as f64);
        pts[[k, 0]] = r * t.cos();
        pts[[k, 1]] = r * t.sin();
        pts[[k, 2]] = height;
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circle(n: usize) -> BoundaryCurve<f64> {
        BoundaryCurve::with_default_anchors(circle_samples(1.0, 0.0, n)).unwrap()
    }

    #[test]
    fn circle_total_length_is_2pi() {
        let c = unit_circle(256);
        assert!((c.total_length() - std::f64::consts::TAU).abs() < 1e-6);
    }

    #[test]
    fn circle_quarter_arclength_point() {
        let c = unit_circle(256);
        let p = c.eval(c.total_length() / 4.0);
        assert!((p[0] - 0.0).abs() < 1e-6);
        assert!((p[1] - 1.0).abs() < 1e-6);
        assert!(p[2].abs() < 1e-12);
    }

    #[test]
    fn eval_is_periodic() {
        let c = unit_circle(128);
        let p = c.eval(1.234);
        let q = c.eval(1.234 + c.total_length());
        for d in 0..3 {
            assert!((p[d] - q[d]).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_at_sample_arclength_recovers_sample() {
        let c = unit_circle(64);
        for &i in &[0usize, 5, 31, 63] {
            let p = c.eval(c.sample_arclength(i));
            for d in 0..3 {
                assert!((p[d] - c.sample(i)[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_intersecting_curve_rejected() {
        // figure-eight in the plane
        let n = 64;
        let mut pts = Array2::zeros((n, 2));
        for k in 0..n {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            pts[[k, 0]] = t.sin();
            pts[[k, 1]] = (2.0 * t).sin() / 2.0;
        }
        assert!(BoundaryCurve::with_default_anchors(pts).is_err());
    }

    #[test]
    fn repeated_samples_rejected() {
        let mut pts = circle_samples(1.0f64, 0.0, 16);
        pts[[5, 0]] = pts[[4, 0]];
        pts[[5, 1]] = pts[[4, 1]];
        pts[[5, 2]] = pts[[4, 2]];
        assert!(BoundaryCurve::with_default_anchors(pts).is_err());
    }

    fn simple_field(n: usize, l: f64) -> BoundaryParamField<f64> {
        let tau: Vec<f64> = (0..n).map(|k| l * k as f64 / n as f64).collect();
        let a = [0usize, n / 3, 2 * n / 3];
        let at = [tau[a[0]], tau[a[1]], tau[a[2]]];
        BoundaryParamField::new(tau, a, at, l).unwrap()
    }

    #[test]
    fn monotone_input_unchanged() {
        let f = simple_field(12, 6.0);
        let proposed = f.tau.clone();
        let out = monotone_project(&f, &proposed).unwrap();
        for (a, b) in out.tau.iter().zip(proposed.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(out.is_monotone());
    }

    #[test]
    fn pav_pools_violating_pair() {
        // arc values [0, 2, 1, 3] -> [0, 1.5, 1.5, 3]
        let mut v = vec![0.0, 2.0, 1.0, 3.0];
        pav(&mut v);
        assert_eq!(v, vec![0.0, 1.5, 1.5, 3.0]);
    }

    #[test]
    fn projection_matches_brute_force_on_small_arcs() {
        // exhaustive check against a fine grid search on a 3-point arc
        let f = {
            let tau = vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
            let a = [0usize, 4, 8];
            let at = [0.0, 2.0, 4.0];
            BoundaryParamField::new(tau, a, at, 4.5).unwrap()
        };
        let mut proposed = f.tau.clone();
        proposed[1] = 1.8;
        proposed[2] = 0.4;
        proposed[3] = 1.1;
        let out = monotone_project(&f, &proposed).unwrap();
        assert!(out.is_monotone());
        // brute force over monotone triples on a fine grid in [0, 2]
        let mut best = f64::INFINITY;
        let mut best_triple = [0.0; 3];
        let m = 81;
        for i in 0..=m {
            for j in i..=m {
                for k in j..=m {
                    let x = [
                        2.0 * i as f64 / m as f64,
                        2.0 * j as f64 / m as f64,
                        2.0 * k as f64 / m as f64,
                    ];
                    let cost: f64 = (0..3)
                        .map(|d| (x[d] - proposed[d + 1]).powi(2))
                        .sum();
                    if cost < best {
                        best = cost;
                        best_triple = x;
                    }
                }
            }
        }
        for d in 0..3 {
            assert!(
                (out.tau[d + 1] - best_triple[d]).abs() < 0.03,
                "PAV {:?} vs brute {:?}",
                &out.tau[1..4],
                best_triple
            );
        }
    }

    #[test]
    fn anchors_restored_exactly() {
        let f = simple_field(12, 6.0);
        let mut proposed = f.tau.clone();
        proposed[0] += 0.3;
        proposed[4] -= 0.2;
        proposed[8] += 0.1;
        let out = monotone_project(&f, &proposed).unwrap();
        for j in 0..3 {
            assert_eq!(out.tau[f.anchor_indices[j]], f.anchor_tau[j]);
        }
    }

    #[test]
    fn wraparound_arc_projects_correctly() {
        let f = simple_field(12, 6.0);
        let mut proposed = f.tau.clone();
        // perturb the last arc (indices 9..11), introducing a violation
        proposed[9] = 5.4;
        proposed[10] = 4.9;
        proposed[11] = 5.6;
        let out = monotone_project(&f, &proposed).unwrap();
        assert!(out.is_monotone());
        assert!((out.tau[9] - 5.15).abs() < 1e-12);
        assert!((out.tau[10] - 5.15).abs() < 1e-12);
    }

    #[test]
    fn oscillation_on_circle() {
        let c = unit_circle(128);
        let n = 32;
        let l = c.total_length();
        let tau: Vec<f64> = (0..n).map(|k| l * k as f64 / n as f64).collect();
        let a = [0usize, n / 3, 2 * n / 3];
        let at = [tau[a[0]], tau[a[1]], tau[a[2]]];
        let f = BoundaryParamField::new(tau, a, at, l).unwrap();
        // full window sees the whole circle: diameter 2
        let full = curve_oscillation(&f, &c, 0..n);
        assert!((full - 2.0).abs() < 1e-3);
        // constant field has zero oscillation
        let fc = BoundaryParamField::new(vec![1.0; n], a, [1.0, 1.0, 1.0], l).unwrap();
        let osc = curve_oscillation(&fc, &c, 0..n);
        assert!(osc < 1e-12);
        // shrinking window: nonincreasing
        let half = curve_oscillation(&f, &c, 0..n / 2);
        assert!(half <= full + 1e-12);
    }

    #[test]
    fn csv_roundtrip() {
        let pts = circle_samples(1.0f64, 0.25, 32);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&path, &pts).unwrap();
        let back: Array2<f64> = read_curve_csv(&path).unwrap();
        assert_eq!(back.shape(), pts.shape());
        for (a, b) in back.iter().zip(pts.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_header_mismatch_rejected() {
        let text = "# n=4 closed=1\n0,0,0\n1,0,0\n1,1,0\n0,1,0\n";
        assert!(parse_curve_csv::<f64>(text, "mem").is_err());
    }

    #[test]
    fn unwrap_near_picks_closest_lift() {
        let c = unit_circle(64);
        let l = c.total_length();
        assert!((c.unwrap_near(0.1, l - 0.1) - (l + 0.1)).abs() < 1e-12);
        assert!((c.unwrap_near(l - 0.1, 0.1) - (-0.1)).abs() < 1e-12);
    }
}
