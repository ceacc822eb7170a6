//! The coupled evolution: heat-flow step for the map with the monotone
//! Plateau boundary constraint, projection-driven steps for the collar
//! length and the Möbius parameters, and the energy ledger.

use ndarray::Array1;

use crate::curves::{monotone_project, BoundaryCurve, BoundaryParamField};
use crate::error::{Error, Result};
use crate::field::{energy, tension, SurfaceMap};
use crate::geometry::HyperbolicCylinder;
use crate::hopf::{horizontal_projection, hopf_from_map, vertical_projection, HopfField};
use crate::moebius::{anchor_angles, three_point_angles, MoebiusParams, Side};
use crate::scalar::{Cx, Real};

/// `gamma` must exceed `1/(1 - 1/sqrt 2)`.
pub fn coupling_gamma_threshold<T: Real>() -> T {
    T::one() / (T::one() - T::one() / T::of(2.0).sqrt())
}

/// Coupling function `eta(xi) = C_eta (1 - xi)^gamma` damping the Möbius
/// motion as |b| approaches 1.
#[derive(Debug, Clone, Copy)]
pub struct CouplingConfig<T: Real> {
    pub gamma: T,
    pub c_eta: T,
}

impl<T: Real> CouplingConfig<T> {
    pub fn new(gamma: T, c_eta: T) -> Result<Self> {
        if !(gamma > coupling_gamma_threshold::<T>()) {
            return Err(Error::Validation(format!(
                "gamma = {} must exceed {}",
                gamma.to_f64_lossy(),
                coupling_gamma_threshold::<T>().to_f64_lossy()
            )));
        }
        if !(c_eta > T::zero()) {
            return Err(Error::Validation("C_eta must be positive".into()));
        }
        Ok(Self { gamma, c_eta })
    }

    pub fn eta(&self, xi: T) -> T {
        self.c_eta * (T::one() - xi).max(T::zero()).powf(self.gamma)
    }
}

impl<T: Real> Default for CouplingConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::of(4.0),
            c_eta: T::one(),
        }
    }
}

/// One ledger row (fixed CSV column order).
#[derive(Debug, Clone, Copy)]
pub struct LedgerRecord<T: Real> {
    pub t: T,
    pub e: T,
    pub tension_norm: T,
    pub ph_norm: T,
    pub pvp_norm: T,
    pub pvm_norm: T,
    pub ell: T,
    pub abs_bp: T,
    pub abs_bm: T,
    pub eps1p: T,
    pub eps2p: T,
    pub eps1m: T,
    pub eps2m: T,
}

pub const LEDGER_COLUMNS: &str =
    "t,E,tension_norm,PH_norm,PVp_norm,PVm_norm,ell,abs_bp,abs_bm,eps1p,eps2p,eps1m,eps2m";

/// Minimum |b| below which the (|b|, Arg b) chart is considered
/// degenerate and the vertical step is skipped.
pub const B_CHART_MIN: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct FlowState<T: Real> {
    pub map: SurfaceMap<T>,
    pub curve_minus: BoundaryCurve<T>,
    pub curve_plus: BoundaryCurve<T>,
    pub moebius_minus: MoebiusParams<T>,
    pub moebius_plus: MoebiusParams<T>,
    pub coupling: CouplingConfig<T>,
    pub t: T,
    pub dt: T,
    pub ledger: Vec<LedgerRecord<T>>,
}

impl<T: Real> FlowState<T> {
    pub fn ell(&self) -> T {
        self.map.cyl.ell()
    }

    pub fn cyl(&self) -> &HyperbolicCylinder<T> {
        &self.map.cyl
    }
}

/// Nearest grid nodes to the images of the three reference anchors, with
/// collisions resolved by shifting to the next free node.
pub fn snapped_anchor_indices<T: Real>(m: &MoebiusParams<T>, n_theta: usize) -> [usize; 3] {
    let h = T::TAU() / T::of(n_theta as f64);
    let raw = anchor_angles(m);
    let mut idx = [0usize; 3];
    for (j, &a) in raw.iter().enumerate() {
        let mut w = a % T::TAU();
        if w < T::zero() {
            w += T::TAU();
        }
        idx[j] = (w / h).round().to_f64_lossy() as usize % n_theta;
    }
    // resolve collisions preserving cyclic order
    for _ in 0..3 {
        if idx[0] == idx[1] {
            idx[1] = (idx[1] + 1) % n_theta;
        }
        if idx[1] == idx[2] {
            idx[2] = (idx[2] + 1) % n_theta;
        }
        if idx[2] == idx[0] {
            idx[0] = (idx[0] + 1) % n_theta;
        }
    }
    idx
}

/// Build the boundary parameter field pinned to the curve's anchors at the
/// node-snapped anchor angles, with per-arc arclength-proportional
/// initialization.
pub fn init_boundary_field<T: Real>(
    curve: &BoundaryCurve<T>,
    m: &MoebiusParams<T>,
    n_theta: usize,
) -> Result<BoundaryParamField<T>> {
    let snapped = snapped_anchor_indices(m, n_theta);
    let curve_tau = curve.anchor_tau();
    let l = curve.total_length();

    // sort anchor slots by node index; the Möbius action preserves cyclic
    // order, so the sorted slots are a cyclic rotation of (0, 1, 2)
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&j| snapped[j]);
    let indices = [snapped[order[0]], snapped[order[1]], snapped[order[2]]];
    let mut taus = [T::zero(); 3];
    taus[0] = curve_tau[order[0]];
    for k in 1..3 {
        let mut v = curve_tau[order[k]];
        while v < taus[k - 1] {
            v += l;
        }
        taus[k] = v;
    }

    // per-arc linear init in the node index
    let mut tau = vec![T::zero(); n_theta];
    for a in 0..3 {
        let (i0, t0) = (indices[a], taus[a]);
        let (i1, t1) = if a < 2 {
            (indices[a + 1], taus[a + 1])
        } else {
            (indices[0] + n_theta, taus[0] + l)
        };
        let span = (i1 - i0) as f64;
        for k in i0..i1 {
            let w = T::of((k - i0) as f64 / span);
            let v = t0 + (t1 - t0) * w;
            let kk = k % n_theta;
            tau[kk] = if k >= n_theta { v - l } else { v };
        }
    }
    BoundaryParamField::new(tau, indices, taus, l)
}

/// Linear-in-sigma interpolation between the two boundary traces: the
/// default initial map.
pub fn annulus_interpolation<T: Real>(
    cyl: HyperbolicCylinder<T>,
    curve_minus: &BoundaryCurve<T>,
    curve_plus: &BoundaryCurve<T>,
    m_minus: &MoebiusParams<T>,
    m_plus: &MoebiusParams<T>,
) -> Result<SurfaceMap<T>> {
    if curve_minus.dim() != curve_plus.dim() {
        return Err(Error::Validation("curve dimensions differ".into()));
    }
    let dim = curve_minus.dim();
    let n_t = cyl.n_theta();
    let bm = init_boundary_field(curve_minus, m_minus, n_t)?;
    let bp = init_boundary_field(curve_plus, m_plus, n_t)?;
    let lower: Vec<Array1<T>> = (0..n_t).map(|k| curve_minus.eval(bm.tau[k])).collect();
    let upper: Vec<Array1<T>> = (0..n_t).map(|k| curve_plus.eval(bp.tau[k])).collect();
    let len = cyl.length();
    let y_m = cyl.y_minus();
    let mut map = SurfaceMap::from_fn(cyl, dim, |_, _| vec![T::zero(); dim]);
    for i in 0..map.cyl.n_s() {
        let w = (map.cyl.s_at(i) + y_m) / len;
        for j in 0..n_t {
            for d in 0..dim {
                map.values[[i, j, d]] =
                    lower[j][d] * (T::one() - w) + upper[j][d] * w;
            }
        }
    }
    map.boundary_minus = Some(bm);
    map.boundary_plus = Some(bp);
    Ok(map)
}

/// Explicit-s stability bound `min(rho)^2 h_s^2 / 4`.
pub fn dt_stability_bound<T: Real>(cyl: &HyperbolicCylinder<T>) -> T {
    let rho0 = cyl.ell() / T::TAU(); // minimum of the profile
    rho0 * rho0 * cyl.h_s() * cyl.h_s() / T::of(4.0)
}

/// Outward-normal inner derivative dotted with the curve tangent at each
/// boundary node: the boundary energy gradient driving the tau update.
fn boundary_gradient<T: Real>(
    map: &SurfaceMap<T>,
    curve: &BoundaryCurve<T>,
    field: &BoundaryParamField<T>,
    side: Side,
) -> Vec<T> {
    let us = map.d_s();
    let (n_s, n_t, dim) = map.values.dim();
    let i = match side {
        Side::Minus => 0,
        Side::Plus => n_s - 1,
    };
    let sign = match side {
        Side::Minus => -T::one(),
        Side::Plus => T::one(),
    };
    let l = curve.total_length();
    let h_tau = l * T::of(1e-6);
    (0..n_t)
        .map(|k| {
            let p1 = curve.eval(field.tau[k] + h_tau);
            let p0 = curve.eval(field.tau[k] - h_tau);
            let mut tangent = vec![T::zero(); dim];
            let mut norm = T::zero();
            for d in 0..dim {
                tangent[d] = (p1[d] - p0[d]) / (T::of(2.0) * h_tau);
                norm += tangent[d] * tangent[d];
            }
            let norm = norm.sqrt().max(T::of(1e-14));
            let mut g = T::zero();
            for d in 0..dim {
                g += sign * us[[i, k, d]] * tangent[d] / norm;
            }
            g
        })
        .collect()
}

/// One map step: IMEX interior update (explicit s-Laplacian, exact
/// per-mode damping of the theta-Laplacian) plus the constrained boundary
/// parameter descent with monotone projection and anchor re-pinning.
pub fn step_map<T: Real>(
    state: &FlowState<T>,
    dt: T,
) -> Result<SurfaceMap<T>> {
    let map = &state.map;
    let cyl = &map.cyl;
    let (n_s, n_t, dim) = map.values.dim();
    let mut out = map.clone();

    // s-part, explicit
    let h2 = cyl.h_s() * cyl.h_s();
    for i in 1..n_s - 1 {
        let rho = cyl.profile(cyl.s_at(i))?;
        let c = dt / (rho * rho);
        for j in 0..n_t {
            for d in 0..dim {
                let lap_s = (map.values[[i + 1, j, d]]
                    - T::of(2.0) * map.values[[i, j, d]]
                    + map.values[[i - 1, j, d]])
                    / h2;
                out.values[[i, j, d]] = map.values[[i, j, d]] + c * lap_s;
            }
        }
    }

    // theta-part: exact diagonal damping of modes, interior rows
    use rustfft::FftPlanner;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n_t);
    let inv = planner.plan_fft_inverse(n_t);
    let mut buf: Vec<Cx<T>> = vec![Cx::new(T::zero(), T::zero()); n_t];
    let scale = T::one() / T::of(n_t as f64);
    for i in 1..n_s - 1 {
        let rho = cyl.profile(cyl.s_at(i))?;
        let c = dt / (rho * rho);
        for d in 0..dim {
            for j in 0..n_t {
                buf[j] = Cx::new(out.values[[i, j, d]], T::zero());
            }
            fwd.process(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                let ks = if k <= n_t / 2 { k as i64 } else { k as i64 - n_t as i64 };
                let damp = (-c * T::of((ks * ks) as f64)).exp();
                *v = *v * damp;
            }
            inv.process(&mut buf);
            for j in 0..n_t {
                out.values[[i, j, d]] = buf[j].re * scale;
            }
        }
    }

    // boundary steps
    for (side, curve) in [
        (Side::Minus, &state.curve_minus),
        (Side::Plus, &state.curve_plus),
    ] {
        let field = match side {
            Side::Minus => out.boundary_minus.clone(),
            Side::Plus => out.boundary_plus.clone(),
        };
        let Some(field) = field else { continue };
        let grad = boundary_gradient(map, curve, &field, side);
        let proposed: Vec<T> = field
            .tau
            .iter()
            .zip(grad.iter())
            .map(|(&t, &g)| t - dt * g)
            .collect();
        let projected = monotone_project(&field, &proposed)?;
        let i = match side {
            Side::Minus => 0,
            Side::Plus => n_s - 1,
        };
        for k in 0..n_t {
            let p = curve.eval(projected.tau[k]);
            for d in 0..dim {
                out.values[[i, k, d]] = p[d];
            }
        }
        match side {
            Side::Minus => out.boundary_minus = Some(projected),
            Side::Plus => out.boundary_plus = Some(projected),
        }
    }
    Ok(out)
}

/// `d g_hat / d ell` on the normalized-(sigma, theta) grid by central
/// finite differences in ell (end constants fixed), plus the Re dz^2
/// tensor in the same chart, and their L^2(g_hat) pairing.
///
/// Returns `(pairing <Re dz^2, dg/dl>, norm^2 of dg/dl)`.
pub fn ell_chart_coefficients<T: Real>(cyl: &HyperbolicCylinder<T>) -> Result<(T, T)> {
    let step = cyl.ell() * T::of(1e-6);
    let plus = cyl.with_ell(cyl.ell() + step)?;
    let minus = cyl.with_ell(cyl.ell() - step)?;

    let n_s = cyl.n_s();
    let comp = |c: &HyperbolicCylinder<T>, i: usize| -> Result<(T, T)> {
        // metric components in (sigma, theta): (rho^2 J^2, rho^2)
        let jac = c.length() * T::of(0.5);
        let rho = c.profile(c.s_at(i))?;
        Ok((rho * rho * jac * jac, rho * rho))
    };

    let mut pairing = T::zero();
    let mut norm_sq = T::zero();
    let h_sigma = T::of(2.0 / (n_s - 1) as f64);
    for i in 0..n_s {
        let w = crate::quad::simpson_weight(i, n_s, h_sigma) * T::TAU();
        let (g1, g2) = comp(cyl, i)?;
        let (p1, p2) = comp(&plus, i)?;
        let (m1, m2) = comp(&minus, i)?;
        let d1 = (p1 - m1) / (T::of(2.0) * step);
        let d2 = (p2 - m2) / (T::of(2.0) * step);
        // Re dz^2 in (sigma, theta): diag(J^2, -1)
        let jac = cyl.length() * T::of(0.5);
        let r1 = jac * jac;
        let r2 = -T::one();
        let vol = (g1 * g2).sqrt();
        pairing += w * vol * (r1 * d1 / (g1 * g1) + r2 * d2 / (g2 * g2));
        norm_sq += w * vol * (d1 * d1 / (g1 * g1) + d2 * d2 / (g2 * g2));
    }
    Ok((pairing, norm_sq))
}

/// Result of one metric step.
#[derive(Debug, Clone, Copy)]
pub struct MetricStep<T: Real> {
    pub ell: T,
    pub moebius_minus: MoebiusParams<T>,
    pub moebius_plus: MoebiusParams<T>,
    pub ph_coeff: T,
    pub ph_norm: T,
    pub pv_norm_minus: T,
    pub pv_norm_plus: T,
}

/// Metric evolution: the collar length moves along the projection of the
/// horizontal part of Re Phi through the ell-chart; the Möbius parameters
/// move along the coupled vertical projections.
pub fn step_metric<T: Real>(state: &FlowState<T>, h: &HopfField<T>, dt: T) -> Result<MetricStep<T>> {
    let cyl = state.cyl();
    let (ph_coeff, ph_norm) = horizontal_projection(h);
    let (pairing, norm_sq) = ell_chart_coefficients(cyl)?;
    let dell = T::of(0.25) * ph_coeff * pairing / norm_sq.max(T::of(1e-300));
    let mut ell = cyl.ell() + dt * dell;
    // keep the collar nondegenerate at desk scale
    ell = ell.max(T::of(1e-4)).min(T::of(50.0));

    let mut new_m = [state.moebius_minus, state.moebius_plus];
    let mut pv_norms = [T::zero(), T::zero()];
    for (which, side) in [(0usize, Side::Minus), (1, Side::Plus)] {
        let m = new_m[which];
        let b_abs = m.b().norm();
        if b_abs < T::of(B_CHART_MIN) {
            continue; // chart degenerate at b ~ 0; Möbius parameters rest
        }
        let (coeffs, norm) = vertical_projection(h, side, &m)?;
        pv_norms[which] = norm;
        let eta = state.coupling.eta(b_abs);
        let fac = dt * T::of(0.25) * eta * eta;
        let (mut ba, mut arg, mut phi) = m.chart();
        ba += fac * coeffs[0];
        arg += fac * coeffs[1];
        phi += fac * coeffs[2];
        ba = ba.max(T::zero()).min(T::one() - T::of(1e-11));
        new_m[which] = MoebiusParams::from_chart(ba, arg, phi)?;
    }

    Ok(MetricStep {
        ell,
        moebius_minus: new_m[0],
        moebius_plus: new_m[1],
        ph_coeff,
        ph_norm,
        pv_norm_minus: pv_norms[0],
        pv_norm_plus: pv_norms[1],
    })
}

/// Re-pin the boundary anchors after the Möbius parameters moved: anchor
/// node indices are re-snapped and the tau field re-projected.
fn repin_boundaries<T: Real>(state: &mut FlowState<T>) -> Result<()> {
    let n_t = state.map.cyl.n_theta();
    let n_s = state.map.cyl.n_s();
    let dim = state.map.dim();
    for (side, m) in [
        (Side::Minus, state.moebius_minus),
        (Side::Plus, state.moebius_plus),
    ] {
        let (curve, field_slot) = match side {
            Side::Minus => (&state.curve_minus, &mut state.map.boundary_minus),
            Side::Plus => (&state.curve_plus, &mut state.map.boundary_plus),
        };
        let Some(old) = field_slot.clone() else { continue };
        let template = init_boundary_field(curve, &m, n_t)?;
        if template.anchor_indices == old.anchor_indices {
            continue;
        }
        // keep the old tau values, re-pin at the new anchors
        let refreshed = BoundaryParamField::new(
            old.tau.clone(),
            template.anchor_indices,
            template.anchor_tau,
            old.total_length,
        )?;
        let projected = monotone_project(&refreshed, &refreshed.tau.clone())?;
        // refresh boundary row values
        let i = match side {
            Side::Minus => 0,
            Side::Plus => n_s - 1,
        };
        for k in 0..n_t {
            let p = curve.eval(projected.tau[k]);
            for d in 0..dim {
                state.map.values[[i, k, d]] = p[d];
            }
        }
        *field_slot = Some(projected);
    }
    Ok(())
}

fn record<T: Real>(state: &FlowState<T>, ms: Option<&MetricStep<T>>) -> LedgerRecord<T> {
    let e = energy(&state.map);
    let (_, tn) = tension(&state.map);
    let spm = three_point_angles(&state.moebius_minus);
    let spp = three_point_angles(&state.moebius_plus);
    LedgerRecord {
        t: state.t,
        e,
        tension_norm: tn,
        ph_norm: ms.map(|m| m.ph_norm).unwrap_or(T::zero()),
        pvp_norm: ms.map(|m| m.pv_norm_plus).unwrap_or(T::zero()),
        pvm_norm: ms.map(|m| m.pv_norm_minus).unwrap_or(T::zero()),
        ell: state.ell(),
        abs_bp: state.moebius_plus.b().norm(),
        abs_bm: state.moebius_minus.b().norm(),
        eps1p: spp.eps1,
        eps2p: spp.eps2,
        eps1m: spm.eps1,
        eps2m: spm.eps2,
    }
}

/// Run controls for the flow loop.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig<T: Real> {
    pub t_max: T,
    pub dt0: T,
    /// Stop early when tension norm + P^H norm falls below this.
    pub stationary_threshold: T,
    /// Ledger record cadence in accepted steps.
    pub record_every: usize,
    pub max_steps: usize,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            t_max: T::of(0.05),
            dt0: T::of(1e-4),
            stationary_threshold: T::of(1e-6),
            record_every: 1,
            max_steps: 100_000,
        }
    }
}

/// Advance the coupled flow; `on_snapshot` is invoked at each recorded
/// ledger row (step index, state).
pub fn run_flow<T: Real>(
    mut state: FlowState<T>,
    config: &RunConfig<T>,
    mut on_snapshot: impl FnMut(usize, &FlowState<T>) -> Result<()>,
) -> Result<FlowState<T>> {
    let e0 = energy(&state.map);
    let slack = T::of(1e-10) * e0.max(T::one());
    let mut dt = config.dt0.min(dt_stability_bound(state.cyl()));
    let mut accepted_streak = 0usize;
    let mut step_index = 0usize;

    let h0 = hopf_from_map(&state.map);
    let ms0 = step_metric(&state, &h0, T::zero())?;
    state.ledger.push(record(&state, Some(&ms0)));
    on_snapshot(step_index, &state)?;

    while state.t < config.t_max && step_index < config.max_steps {
        let last = state.ledger.last().unwrap();
        if last.tension_norm + last.ph_norm < config.stationary_threshold {
            break;
        }
        dt = dt.min(dt_stability_bound(state.cyl()));
        let e_before = energy(&state.map);

        // trial full step
        let new_map = step_map(&state, dt)?;
        let h = hopf_from_map(&new_map);
        let trial = {
            let mut s = state.clone();
            s.map = new_map;
            s
        };
        let ms = step_metric(&trial, &h, dt)?;
        let mut next = trial;
        next.map.cyl = next.map.cyl.with_ell(ms.ell)?;
        next.moebius_minus = ms.moebius_minus;
        next.moebius_plus = ms.moebius_plus;
        repin_boundaries(&mut next)?;

        let e_after = energy(&next.map);
        if e_after > e_before + slack {
            // reject and halve
            dt = dt * T::of(0.5);
            accepted_streak = 0;
            if dt < T::of(1e-12) {
                return Err(Error::DtCollapse {
                    t: state.t.to_f64_lossy(),
                    dt_min: 1e-12,
                });
            }
            continue;
        }

        state = next;
        state.t += dt;
        state.dt = dt;
        step_index += 1;
        accepted_streak += 1;
        if accepted_streak >= 50 {
            dt = dt * T::of(1.2);
            accepted_streak = 0;
        }
        if step_index % config.record_every == 0 {
            state.ledger.push(record(&state, Some(&ms)));
            on_snapshot(step_index, &state)?;
        }
    }
    // final record
    let h = hopf_from_map(&state.map);
    let ms = step_metric(&state, &h, T::zero())?;
    state.ledger.push(record(&state, Some(&ms)));
    on_snapshot(step_index, &state)?;
    Ok(state)
}

/// Report from the post-run ledger checks.
#[derive(Debug, Clone)]
pub struct LedgerReport<T: Real> {
    pub energy_violations: usize,
    /// Fitted log-log exponent of 1 - |b(t)| against t, per side, when the
    /// motion is large enough to fit.
    pub b_decay_exponent_plus: Option<T>,
    pub b_decay_exponent_minus: Option<T>,
    /// max over good times of ell / (PH^2 + tension^2).
    pub ell_ratio_good_times: Option<T>,
}

/// Good-time selection: `delta = tension + PH^4 <= t^{-1/2}`.
pub fn is_good_time<T: Real>(rec: &LedgerRecord<T>) -> bool {
    if rec.t <= T::zero() {
        return true;
    }
    rec.tension_norm + rec.ph_norm.powi(4) <= rec.t.powf(-T::of(0.5))
}

pub fn ledger_checks<T: Real>(ledger: &[LedgerRecord<T>], e0: T) -> LedgerReport<T> {
    let slack = T::of(1e-10) * e0.max(T::one());
    let mut violations = 0;
    for w in ledger.windows(2) {
        if w[1].e > w[0].e + slack {
            violations += 1;
        }
    }
    let fit = |get: &dyn Fn(&LedgerRecord<T>) -> T| -> Option<T> {
        let pts: Vec<(T, T)> = ledger
            .iter()
            .filter(|r| r.t > T::zero())
            .map(|r| (r.t, T::one() - get(r)))
            .filter(|&(_, v)| v > T::of(1e-12))
            .map(|(t, v)| (t.ln(), v.ln()))
            .collect();
        if pts.len() < 4 {
            return None;
        }
        let first = ledger.iter().map(|r| get(r)).next().unwrap();
        let last = ledger.iter().map(|r| get(r)).last().unwrap();
        if (last - first).abs() < T::of(0.05) {
            return None; // not enough motion to fit
        }
        let n = T::of(pts.len() as f64);
        let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
        let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
        let num = pts
            .iter()
            .fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
        let den = pts.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
        Some(num / den)
    };
    let ratio = ledger
        .iter()
        .filter(|r| is_good_time(r))
        .map(|r| {
            r.ell / (r.ph_norm * r.ph_norm + r.tension_norm * r.tension_norm).max(T::of(1e-300))
        })
        .fold(None, |acc: Option<T>, v| {
            Some(acc.map_or(v, |a: T| a.max(v)))
        });
    LedgerReport {
        energy_violations: violations,
        b_decay_exponent_plus: fit(&|r| r.abs_bp),
        b_decay_exponent_minus: fit(&|r| r.abs_bm),
        ell_ratio_good_times: ratio,
    }
}
