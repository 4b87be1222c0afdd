//! Descent methods driven by hypodifferentials: the method of
//! hypodifferential descent with constant step, exact step and exact line
//! search, the proximal variant, and its accelerated version with the
//! O(1/k²) envelope.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::hypo::HypoFunction;
use crate::linalg::{axpy, norm, sub};
use crate::subproblems::{min_norm_hypo_counted, proximal_step, BoxConstraint};

/// Stopping thresholds; at least `max_iters` always applies.
#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub eps_value: Option<f64>,
    pub eps_dist: Option<f64>,
    pub max_iters: usize,
}

impl StopRule {
    pub fn new(eps_value: Option<f64>, eps_dist: Option<f64>, max_iters: usize) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::InvalidParameter(
                "stop rule needs max_iters ≥ 1".into(),
            ));
        }
        for (name, v) in [("eps_value", eps_value), ("eps_dist", eps_dist)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be > 0, got {v}"
                    )));
                }
            }
        }
        Ok(StopRule {
            eps_value,
            eps_dist,
            max_iters,
        })
    }

    pub fn max_iters(max_iters: usize) -> Self {
        StopRule {
            eps_value: None,
            eps_dist: None,
            max_iters,
        }
    }

    /// Certification stays honest only when subproblems are solved two
    /// orders tighter than the stopping thresholds.
    fn validate_tol_sub(&self, tol_sub: f64) -> Result<()> {
        if !(tol_sub > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_sub must be > 0, got {tol_sub}"
            )));
        }
        for (name, v) in [("eps_value", self.eps_value), ("eps_dist", self.eps_dist)] {
            if let Some(v) = v {
                if tol_sub > v / 100.0 {
                    return Err(Error::InvalidParameter(format!(
                        "tol_sub = {tol_sub:.3e} must be ≤ {name}/100 = {:.3e}",
                        v / 100.0
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StopReason {
    /// dist(0, d̲f(x_k)) (or ‖z_k − x_k‖ for proximal methods) fell below eps_dist.
    DistBelow,
    /// |f(x_{k+1}) − f(x_k)| fell below eps_value.
    ValueDeltaBelow,
    MaxIters,
}

/// One trace row: the iterate, its value, the distance measure
/// dist(0, d̲f(x_k)) (or ‖z_k − x_k‖), the step taken from it, and the
/// subproblem iterations spent at it. Terminal rows carry step 0.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub dist0: f64,
    pub alpha: f64,
    pub sub_iters: usize,
    pub wall_seconds: f64,
}

/// Per-iteration record of a solver run.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub stop_reason: StopReason,
}

impl SolverTrace {
    pub fn final_x(&self) -> &[f64] {
        &self.records.last().expect("nonempty trace").x
    }

    pub fn final_f(&self) -> f64 {
        self.records.last().expect("nonempty trace").f
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Objective increases beyond `DIVERGENCE_GUARD_FACTOR·tol_sub` in an
/// accepted step abort the run: the declared constants are wrong.
const DIVERGENCE_GUARD_FACTOR: f64 = 1000.0;

fn ensure_finite(f: f64) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFinite("objective value"))
    }
}

struct DescentLoop<'a> {
    stop: &'a StopRule,
    tol_sub: f64,
    records: Vec<TraceRecord>,
    started: Instant,
    prev_f: Option<f64>,
}

impl<'a> DescentLoop<'a> {
    fn new(stop: &'a StopRule, tol_sub: f64) -> Self {
        DescentLoop {
            stop,
            tol_sub,
            records: Vec::new(),
            started: Instant::now(),
            prev_f: None,
        }
    }

    fn push(&mut self, k: usize, x: &[f64], f: f64, dist0: f64, alpha: f64, sub_iters: usize) {
        self.records.push(TraceRecord {
            k,
            x: x.to_vec(),
            f,
            dist0,
            alpha,
            sub_iters,
            wall_seconds: self.started.elapsed().as_secs_f64(),
        });
    }

    /// Terminal checks shared by all methods; records the final row itself.
    fn should_stop(
        &mut self,
        k: usize,
        x: &[f64],
        f_k: f64,
        dist0: f64,
        sub_iters: usize,
    ) -> Option<StopReason> {
        if let Some(eps) = self.stop.eps_dist {
            if dist0 <= eps {
                self.push(k, x, f_k, dist0, 0.0, sub_iters);
                return Some(StopReason::DistBelow);
            }
        }
        if let Some(eps) = self.stop.eps_value {
            if let Some(prev) = self.prev_f {
                if (prev - f_k).abs() <= eps {
                    self.push(k, x, f_k, dist0, 0.0, sub_iters);
                    return Some(StopReason::ValueDeltaBelow);
                }
            }
        }
        if k >= self.stop.max_iters {
            self.push(k, x, f_k, dist0, 0.0, sub_iters);
            return Some(StopReason::MaxIters);
        }
        None
    }

    fn guard_descent(&self, f_k: f64, f_next: f64) -> Result<()> {
        let slack = DIVERGENCE_GUARD_FACTOR * self.tol_sub * (1.0 + f_k.abs());
        if f_next > f_k + slack {
            return Err(Error::MetadataInconsistency {
                increase: f_next - f_k,
            });
        }
        Ok(())
    }

    fn finish(self, reason: StopReason) -> SolverTrace {
        SolverTrace {
            records: self.records,
            stop_reason: reason,
        }
    }
}

fn require_consistent(f: &HypoFunction) -> Result<()> {
    if !f.meta().consistent {
        return Err(Error::InvalidParameter(
            "solver requires a hypodifferential map flagged consistent".into(),
        ));
    }
    Ok(())
}

/// Method of hypodifferential descent with constant step α:
/// x_{k+1} = x_k − α·v_k where (a_k, v_k) is the minimum-norm element of
/// d̲f(x_k).
///
/// Requires a consistent map with a declared Lipschitzian-approximation
/// constant L; the step must satisfy α < 2/L, and additionally
/// α < min{1, ε}/C when the element bound C is declared (ε is the
/// sublevel-set inflation radius, 1 when omitted).
pub fn mhd_constant(
    f: &HypoFunction,
    x0: &[f64],
    alpha: f64,
    epsilon: Option<f64>,
    stop: &StopRule,
    tol_sub: f64,
) -> Result<SolverTrace> {
    require_consistent(f)?;
    stop.validate_tol_sub(tol_sub)?;
    let l = f.meta().lip_approx_l.ok_or_else(|| {
        Error::InvalidParameter("constant-step method requires lip_approx_l".into())
    })?;
    let mut cap = if l > 0.0 { 2.0 / l } else { f64::INFINITY };
    if let Some(c) = f.meta().bound_c {
        let eps = epsilon.unwrap_or(1.0);
        if c > 0.0 {
            cap = cap.min(eps.min(1.0) / c);
        }
    }
    if !(alpha > 0.0) || alpha >= cap {
        return Err(Error::InvalidParameter(format!(
            "step alpha = {alpha} violates 0 < alpha < {cap:.6} = min{{2/L, min{{1, eps}}/C}}"
        )));
    }

    let mut state = DescentLoop::new(stop, tol_sub);
    let mut x = x0.to_vec();
    let mut k = 0usize;
    loop {
        let f_k = ensure_finite(f.value(&x))?;
        let (e, sub_iters) = min_norm_hypo_counted(&f.hypodifferential(&x), tol_sub)?;
        let dist0 = e.norm();
        if let Some(reason) = state.should_stop(k, &x, f_k, dist0, sub_iters) {
            return Ok(state.finish(reason));
        }
        let mut x_next = x.clone();
        axpy(-alpha, &e.v, &mut x_next);
        let f_next = ensure_finite(f.value(&x_next))?;
        state.guard_descent(f_k, f_next)?;
        state.push(k, &x, f_k, dist0, alpha, sub_iters);
        state.prev_f = Some(f_k);
        x = x_next;
        k += 1;
    }
}

/// Numerically-zero threshold for the offset in the exact-step rule.
const EXACT_A_EPS: f64 = 1e-12;

/// Method of hypodifferential descent with the exact-hypodifferential
/// step α_k = 1/|a_k| (α_k = 1 when a_k is numerically zero). Converges
/// linearly, finitely on polyhedral functions.
pub fn mhd_exact_step(
    f: &HypoFunction,
    x0: &[f64],
    stop: &StopRule,
    tol_sub: f64,
) -> Result<SolverTrace> {
    require_consistent(f)?;
    stop.validate_tol_sub(tol_sub)?;
    if !f.meta().exact {
        return Err(Error::InvalidParameter(
            "exact-step method requires a hypodifferential map flagged exact".into(),
        ));
    }
    let mut state = DescentLoop::new(stop, tol_sub);
    let mut x = x0.to_vec();
    let mut k = 0usize;
    loop {
        let f_k = ensure_finite(f.value(&x))?;
        let (e, sub_iters) = min_norm_hypo_counted(&f.hypodifferential(&x), tol_sub)?;
        let dist0 = e.norm();
        if let Some(reason) = state.should_stop(k, &x, f_k, dist0, sub_iters) {
            return Ok(state.finish(reason));
        }
        let v_norm = norm(&e.v);
        let alpha = if e.a < -EXACT_A_EPS {
            1.0 / e.a.abs()
        } else {
            // an exact map cannot pair a zero offset with a nonzero slope
            // away from the optimum (the descent ray would be unbounded)
            if v_norm > 100.0 * tol_sub {
                return Err(Error::ExactnessViolation { a: e.a, v_norm });
            }
            1.0
        };
        let mut x_next = x.clone();
        axpy(-alpha, &e.v, &mut x_next);
        let f_next = ensure_finite(f.value(&x_next))?;
        state.guard_descent(f_k, f_next)?;
        state.push(k, &x, f_k, dist0, alpha, sub_iters);
        state.prev_f = Some(f_k);
        x = x_next;
        k += 1;
    }
}

/// Method of hypodifferential descent with exact line search along −v_k
/// (golden-section after bracket expansion).
pub fn mhd_line_search(
    f: &HypoFunction,
    x0: &[f64],
    stop: &StopRule,
    tol_sub: f64,
    tol_ls: f64,
) -> Result<SolverTrace> {
    require_consistent(f)?;
    stop.validate_tol_sub(tol_sub)?;
    if !(tol_ls > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "line-search tolerance must be > 0, got {tol_ls}"
        )));
    }
    let mut state = DescentLoop::new(stop, tol_sub);
    let mut x = x0.to_vec();
    let mut k = 0usize;
    loop {
        let f_k = ensure_finite(f.value(&x))?;
        let (e, sub_iters) = min_norm_hypo_counted(&f.hypodifferential(&x), tol_sub)?;
        let dist0 = e.norm();
        if let Some(reason) = state.should_stop(k, &x, f_k, dist0, sub_iters) {
            return Ok(state.finish(reason));
        }
        let phi = |t: f64| {
            let mut y = x.clone();
            axpy(-t, &e.v, &mut y);
            f.value(&y)
        };
        let alpha = golden_section_step(&phi, f_k, tol_ls)?;
        let mut x_next = x.clone();
        axpy(-alpha, &e.v, &mut x_next);
        let f_next = ensure_finite(f.value(&x_next))?;
        state.guard_descent(f_k, f_next)?;
        state.push(k, &x, f_k, dist0, alpha, sub_iters);
        state.prev_f = Some(f_k);
        x = x_next;
        k += 1;
    }
}

/// Bracket expansion cap; beyond it the ray is treated as unbounded below.
const BRACKET_CAP: f64 = 1e12;

fn golden_section_step(phi: &dyn Fn(f64) -> f64, phi0: f64, tol: f64) -> Result<f64> {
    // expand until the endpoint stops improving
    let mut hi = 1.0;
    let mut phi_hi = phi(hi);
    if phi_hi < phi0 {
        loop {
            let next = hi * 2.0;
            if next > BRACKET_CAP {
                return Err(Error::Divergence(BRACKET_CAP));
            }
            let phi_next = phi(next);
            if phi_next >= phi_hi {
                hi = next;
                break;
            }
            hi = next;
            phi_hi = phi_next;
        }
    }
    // golden-section on [0, hi]
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, hi);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut phi_c = phi(c);
    let mut phi_d = phi(d);
    while hi - lo > tol {
        if phi_c < phi_d {
            hi = d;
            d = c;
            phi_d = phi_c;
            c = hi - inv_phi * (hi - lo);
            phi_c = phi(c);
        } else {
            lo = c;
            c = d;
            phi_c = phi_d;
            d = lo + inv_phi * (hi - lo);
            phi_d = phi(d);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-iteration relaxation for the proximal method.
#[derive(Clone)]
pub enum StepSchedule {
    Constant(f64),
    Custom(std::sync::Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl StepSchedule {
    fn at(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Constant(a) => *a,
            StepSchedule::Custom(f) => f(k),
        }
    }
}

impl std::fmt::Debug for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSchedule::Constant(a) => write!(f, "Constant({a})"),
            StepSchedule::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Proximal hypodifferential descent: z_k solves the proximal step
/// problem at x_k, then x_{k+1} = x_k + α_k(z_k − x_k) with α_k ∈ (0, 1].
/// The distance measure recorded (and tested by eps_dist) is ‖z_k − x_k‖.
pub fn phd(
    f: &HypoFunction,
    x0: &[f64],
    gamma: f64,
    steps: &StepSchedule,
    q: &BoxConstraint,
    stop: &StopRule,
    tol_sub: f64,
) -> Result<SolverTrace> {
    require_consistent(f)?;
    stop.validate_tol_sub(tol_sub)?;
    if !q.contains(x0) {
        return Err(Error::OutsideBox { coord: 0 });
    }
    // monotone descent is guaranteed only for γ ≥ L
    let guard_active = f.meta().lip_approx_l.is_some_and(|l| gamma >= l);
    let mut state = DescentLoop::new(stop, tol_sub);
    let mut x = x0.to_vec();
    let mut warm: Option<Vec<f64>> = None;
    let mut k = 0usize;
    loop {
        let f_k = ensure_finite(f.value(&x))?;
        let sol = proximal_step(f, &x, gamma, q, tol_sub, warm.as_deref())?;
        let dist0 = norm(&sub(&sol.z, &x));
        if let Some(reason) = state.should_stop(k, &x, f_k, dist0, sol.iterations) {
            return Ok(state.finish(reason));
        }
        let alpha = steps.at(k);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "proximal step size must lie in (0, 1], got {alpha} at iteration {k}"
            )));
        }
        let mut x_next = x.clone();
        for (xi, zi) in x_next.iter_mut().zip(&sol.z) {
            *xi += alpha * (zi - *xi);
        }
        let f_next = ensure_finite(f.value(&x_next))?;
        if guard_active {
            state.guard_descent(f_k, f_next)?;
        }
        state.push(k, &x, f_k, dist0, alpha, sol.iterations);
        state.prev_f = Some(f_k);
        warm = Some(sol.lambda.as_slice().to_vec());
        x = x_next;
        k += 1;
    }
}

/// Internal accelerated-method state, exposed for certification: the
/// recurrences α_{k+1}² = (1 − α_{k+1})α_k², γ_{k+1} = (1 − α_k)γ_k
/// (k ≥ 1) and L·α_k² = γ_{k+1} hold along the run.
#[derive(Debug, Clone)]
pub struct APHDState {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    /// Minimizer of the estimating quadratic φ_k.
    pub v: Vec<f64>,
    /// Minimal value φ_k* of the estimating quadratic.
    pub phi_star: f64,
}

/// Trace plus the estimating-sequence state of an accelerated run.
#[derive(Debug, Clone)]
pub struct AphdRun {
    pub trace: SolverTrace,
    pub states: Vec<APHDState>,
}

/// Unique root in (0, 1) of t² = (1 − t)·α², by bisection to 1e-14.
pub fn alpha_recurrence(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(positive_root(alpha * alpha))
}

/// Root of t² + c·t − c = 0 in (0, 1] for c ∈ (0, 1]; bisection to 1e-14.
pub(crate) fn positive_root(c: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid * mid + c * mid - c > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Accelerated proximal hypodifferential descent.
///
/// Each iteration takes a proximal step at the extrapolated point y_k
/// with γ = L, advances the α-recurrence and recombines
/// y_{k+1} = x_{k+1} + (α_{k+1}(1 − α_k)/α_k)(x_{k+1} − x_k). Requires a
/// consistent map with a Lipschitzian-approximation constant valid on all
/// of ℝ^d. The recorded distance measure is ‖x_{k+1} − y_k‖.
pub fn aphd(
    f: &HypoFunction,
    x0: &[f64],
    alpha0: f64,
    q: &BoxConstraint,
    stop: &StopRule,
    tol_sub: f64,
) -> Result<AphdRun> {
    require_consistent(f)?;
    stop.validate_tol_sub(tol_sub)?;
    let l = f.meta().lip_approx_l.ok_or_else(|| {
        Error::InvalidParameter("accelerated method requires lip_approx_l".into())
    })?;
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "accelerated method requires L > 0, got {l}"
        )));
    }
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha0 must lie in (0, 1), got {alpha0}"
        )));
    }
    if !q.contains(x0) {
        return Err(Error::OutsideBox { coord: 0 });
    }

    let gamma0 = l * alpha0 * alpha0;
    let mut state = DescentLoop::new(stop, tol_sub);
    let mut states: Vec<APHDState> = Vec::new();
    let mut x = x0.to_vec();
    let mut y = x0.to_vec();
    let mut alpha = alpha0;
    let mut gamma = gamma0;
    let mut v_est = x0.to_vec();
    let mut phi_star = ensure_finite(f.value(x0))?;
    let mut warm: Option<Vec<f64>> = None;
    let mut k = 0usize;
    loop {
        let f_k = ensure_finite(f.value(&x))?;
        // the estimating quadratic must dominate the iterate values;
        // a violation means the declared L is not a valid constant
        let slack = 100.0 * tol_sub * (1.0 + f_k.abs());
        if phi_star < f_k - slack {
            return Err(Error::MetadataInconsistency {
                increase: f_k - phi_star,
            });
        }
        states.push(APHDState {
            k,
            x: x.clone(),
            y: y.clone(),
            alpha,
            gamma,
            v: v_est.clone(),
            phi_star,
        });

        let sol = proximal_step(f, &y, l, q, tol_sub, warm.as_deref())?;
        let x_next = sol.z.clone();
        let dist0 = norm(&sub(&x_next, &y));
        if let Some(reason) = state.should_stop(k, &x, f_k, dist0, sol.iterations) {
            return Ok(AphdRun {
                trace: state.finish(reason),
                states,
            });
        }
        state.push(k, &x, f_k, dist0, alpha, sol.iterations);
        state.prev_f = Some(f_k);

        // estimating-sequence bookkeeping; γ_{k+1} = L·α_k² keeps the
        // α- and γ-recurrences exactly consistent along the run
        let gamma_next = l * alpha * alpha;
        let y_minus_z = sub(&y, &x_next);
        let f_z = ensure_finite(f.value(&x_next))?;
        let dist2 = crate::linalg::dot(&y_minus_z, &y_minus_z);
        let v_minus_y = sub(&v_est, &y);
        phi_star = (1.0 - alpha) * phi_star + alpha * (f_z + 0.5 * l * dist2)
            - (alpha * alpha * l * l / (2.0 * gamma_next)) * dist2
            + alpha * l * crate::linalg::dot(&y_minus_z, &v_minus_y);
        let mut v_next = v_est.clone();
        axpy(-alpha * l / gamma_next, &y_minus_z, &mut v_next);
        let alpha_next = positive_root(alpha * alpha);
        let momentum = alpha_next * (1.0 - alpha) / alpha;
        let mut y_next = x_next.clone();
        for (yi, (xn, xo)) in y_next.iter_mut().zip(x_next.iter().zip(&x)) {
            *yi += momentum * (xn - xo);
        }

        warm = Some(sol.lambda.as_slice().to_vec());
        x = x_next;
        y = y_next;
        v_est = v_next;
        alpha = alpha_next;
        gamma = gamma_next;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{atom_abs, atom_polyhedral, atom_quadratic, PolyhedralSpec};

    fn stop_dist(eps: f64, max_iters: usize) -> StopRule {
        StopRule::new(None, Some(eps), max_iters).unwrap()
    }

    #[test]
    fn constant_step_two_hand_iterations() {
        let f = atom_abs().with_bound_c(2.0);
        let trace = mhd_constant(&f, &[1.0], 0.4, Some(1.0), &stop_dist(1e-8, 10), 1e-12).unwrap();
        assert!((trace.records[1].x[0] - 0.8).abs() < 1e-12);
        assert!((trace.records[2].x[0] - 0.6439024).abs() < 1e-6);
    }

    #[test]
    fn constant_step_stops_at_optimum() {
        let f = atom_abs();
        let trace = mhd_constant(&f, &[0.0], 0.4, None, &stop_dist(1e-8, 10), 1e-12).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.stop_reason, StopReason::DistBelow);
        assert!(trace.records[0].dist0 < 1e-9);
    }

    #[test]
    fn constant_step_quadratic_one_shot() {
        let f = atom_quadratic(&[vec![2.0]], &[0.0], 0.0).unwrap();
        let trace = mhd_constant(&f, &[1.0], 0.5, None, &stop_dist(1e-8, 10), 1e-12).unwrap();
        assert!((trace.records[1].x[0]).abs() < 1e-12);
    }

    #[test]
    fn constant_step_rejects_large_alpha() {
        let f = atom_abs();
        // L = 1 so the cap is 2/L = 2
        assert!(mhd_constant(&f, &[1.0], 2.0, None, &stop_dist(1e-8, 10), 1e-12).is_err());
        // with C = 2 and eps = 1 the cap tightens to 0.5
        let f = atom_abs().with_bound_c(2.0);
        assert!(mhd_constant(&f, &[1.0], 0.6, Some(1.0), &stop_dist(1e-8, 10), 1e-12).is_err());
    }

    #[test]
    fn constant_step_monotone_decrease() {
        let f = atom_abs();
        let trace = mhd_constant(&f, &[1.0], 0.4, None, &stop_dist(1e-6, 200), 1e-12).unwrap();
        for w in trace.records.windows(2) {
            assert!(w[1].f < w[0].f + 1e-15);
        }
        // per-step decrement at least (α − Lα²/2)·dist0²
        let eta = 0.4 - 0.5 * 1.0 * 0.16;
        for w in trace.records.windows(2) {
            assert!(w[1].f <= w[0].f - eta * w[0].dist0 * w[0].dist0 + 1e-9);
        }
        // summability: Σ dist0² ≤ (f(x₀) − f_*)/η + slack
        let sum: f64 = trace
            .records
            .iter()
            .filter(|r| r.alpha > 0.0)
            .map(|r| r.dist0 * r.dist0)
            .sum();
        assert!(sum <= 1.0 / eta + 1e-8);
    }

    #[test]
    fn terminal_dist_certifies_value_gap() {
        // a trace stopping at dist0 ≤ ε has f(x_k) − f_* ≤ ε(1 + R)
        let eps = 1e-3;
        let stop = StopRule::new(None, Some(eps), 100_000).unwrap();
        let trace = mhd_constant(&atom_abs(), &[1.0], 0.4, None, &stop, 1e-9).unwrap();
        assert_eq!(trace.stop_reason, StopReason::DistBelow);
        let r = 1.0;
        assert!(trace.final_f() <= eps * (1.0 + r) + 1e-12);
    }

    #[test]
    fn solvers_reject_inconsistent_maps() {
        let f = atom_abs().with_meta(crate::hypo::HypoMeta {
            consistent: false,
            exact: true,
            lip_approx_l: Some(1.0),
            lip_map_k: Some(2.0),
            bound_c: None,
        });
        assert!(mhd_constant(&f, &[1.0], 0.4, None, &stop_dist(1e-8, 10), 1e-12).is_err());
        assert!(mhd_exact_step(&f, &[1.0], &stop_dist(1e-8, 10), 1e-12).is_err());
        assert!(phd(
            &f,
            &[1.0],
            1.0,
            &StepSchedule::Constant(1.0),
            &BoxConstraint::free(1),
            &stop_dist(1e-8, 10),
            1e-12
        )
        .is_err());
    }

    #[test]
    fn exact_step_abs_terminates_in_one_step() {
        let trace = mhd_exact_step(&atom_abs(), &[1.0], &stop_dist(1e-10, 50), 1e-12).unwrap();
        assert_eq!(trace.len(), 2);
        assert!(trace.records[1].x[0].abs() <= 1e-12);
        assert_eq!(trace.stop_reason, StopReason::DistBelow);
        // first step used alpha = 1/|a_0| = 2
        assert!((trace.records[0].alpha - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exact_step_two_piece_polyhedral() {
        let spec = PolyhedralSpec::new(vec![0.0, 0.0], vec![vec![1.0], vec![-2.0]]).unwrap();
        let f = atom_polyhedral(&spec);
        let trace = mhd_exact_step(&f, &[1.0], &stop_dist(1e-10, 50), 1e-12).unwrap();
        assert_eq!(trace.len(), 2);
        assert!(trace.records[1].x[0].abs() <= 1e-12);
    }

    #[test]
    fn exact_step_requires_exact_flag() {
        let f = atom_quadratic(&[vec![2.0]], &[0.0], 0.0).unwrap();
        assert!(mhd_exact_step(&f, &[1.0], &stop_dist(1e-8, 10), 1e-12).is_err());
    }

    #[test]
    fn exact_step_at_minimizer_stops_immediately() {
        let trace = mhd_exact_step(&atom_abs(), &[0.0], &stop_dist(1e-10, 50), 1e-12).unwrap();
        assert_eq!(trace.len(), 1);
        assert!(trace.records[0].dist0 < 1e-10);
    }

    #[test]
    fn line_search_abs_reaches_minimum() {
        let trace =
            mhd_line_search(&atom_abs(), &[1.0], &stop_dist(1e-6, 50), 1e-12, 1e-10).unwrap();
        let last = trace.records.last().unwrap();
        assert!(last.f < 1e-6);
    }

    #[test]
    fn line_search_quadratic_one_shot() {
        let f = atom_quadratic(&[vec![2.0]], &[0.0], 0.0).unwrap();
        let trace = mhd_line_search(&f, &[1.0], &stop_dist(1e-6, 50), 1e-12, 1e-12).unwrap();
        assert!(trace.records[1].x[0].abs() < 1e-6);
    }

    #[test]
    fn line_search_constant_function_stops() {
        let f = atom_quadratic(&[vec![0.0]], &[0.0], 3.0).unwrap();
        let trace = mhd_line_search(&f, &[1.0], &stop_dist(1e-9, 50), 1e-12, 1e-10).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.stop_reason, StopReason::DistBelow);
    }

    #[test]
    fn line_search_detects_unbounded_ray() {
        // f(x) = −x is concave-free (affine), decreasing along the descent ray
        let spec = PolyhedralSpec::new(vec![0.0], vec![vec![-1.0]]).unwrap();
        let f = atom_polyhedral(&spec);
        let err = mhd_line_search(&f, &[0.0], &stop_dist(1e-9, 50), 1e-12, 1e-10);
        assert!(matches!(err, Err(Error::Divergence(_))));
    }

    #[test]
    fn line_search_matches_exact_step_decrease() {
        // for exact maps the line-search decrease is at least the 1/|a_k| step's
        let f = atom_abs();
        let ls = mhd_line_search(&f, &[1.7], &stop_dist(1e-9, 1), 1e-12, 1e-12).unwrap();
        let ex = mhd_exact_step(&f, &[1.7], &stop_dist(1e-9, 1), 1e-12).unwrap();
        assert!(ls.final_f() <= ex.final_f() + 1e-10);
    }

    #[test]
    fn phd_abs_free_box() {
        let trace = phd(
            &atom_abs(),
            &[1.0],
            1.0,
            &StepSchedule::Constant(1.0),
            &BoxConstraint::free(1),
            &stop_dist(1e-8, 20),
            1e-12,
        )
        .unwrap();
        assert_eq!(trace.len(), 2);
        assert!(trace.records[1].x[0].abs() < 1e-9);
        assert!(trace.records[1].dist0 < 1e-8);
    }

    #[test]
    fn phd_constrained_box() {
        let q = BoxConstraint::new(vec![0.5], vec![2.0]).unwrap();
        let trace = phd(
            &atom_abs(),
            &[1.0],
            1.0,
            &StepSchedule::Constant(1.0),
            &q,
            &stop_dist(1e-8, 30),
            1e-12,
        )
        .unwrap();
        let last = trace.records.last().unwrap();
        assert!((last.x[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn phd_half_steps_decrease_monotonically() {
        let trace = phd(
            &atom_abs(),
            &[1.0],
            1.0,
            &StepSchedule::Constant(0.5),
            &BoxConstraint::free(1),
            &stop_dist(1e-6, 40),
            1e-12,
        )
        .unwrap();
        assert!((trace.records[1].x[0] - 0.5).abs() < 1e-9);
        for w in trace.records.windows(2) {
            assert!(w[1].f <= w[0].f + 1e-12);
        }
    }

    #[test]
    fn value_delta_stopping_rule() {
        // |f(x_{k+1}) − f(x_k)| ≤ eps_value fires for both method families
        let stop = StopRule::new(Some(1e-4), None, 100_000).unwrap();
        let trace = mhd_constant(&atom_abs(), &[1.0], 0.4, None, &stop, 1e-9).unwrap();
        assert_eq!(trace.stop_reason, StopReason::ValueDeltaBelow);
        let w = &trace.records[trace.records.len() - 2..];
        assert!((w[0].f - w[1].f).abs() <= 1e-4);

        let trace = phd(
            &atom_abs(),
            &[1.0],
            1.0,
            &StepSchedule::Constant(0.5),
            &BoxConstraint::free(1),
            &stop,
            1e-9,
        )
        .unwrap();
        assert_eq!(trace.stop_reason, StopReason::ValueDeltaBelow);
    }

    #[test]
    fn phd_rejects_bad_step() {
        let err = phd(
            &atom_abs(),
            &[1.0],
            1.0,
            &StepSchedule::Constant(1.5),
            &BoxConstraint::free(1),
            &stop_dist(1e-8, 10),
            1e-12,
        );
        assert!(err.is_err());
    }

    #[test]
    fn alpha_recurrence_values() {
        assert!((alpha_recurrence(0.5).unwrap() - 0.3903882032022076).abs() < 1e-12);
        assert!((alpha_recurrence(0.9).unwrap() - 0.5819270489757589).abs() < 1e-12);
        // hypothetical alpha = 1 solves the golden-ratio equation
        assert!((positive_root(1.0) - 0.6180339887498949).abs() < 1e-12);
        assert!(alpha_recurrence(1.0).is_err());
        assert!(alpha_recurrence(0.0).is_err());
    }

    #[test]
    fn alpha_recurrence_is_decreasing() {
        for &a in &[0.05, 0.3, 0.5, 0.77, 0.99] {
            let next = alpha_recurrence(a).unwrap();
            assert!(next < a && next > 0.0);
            let resid = next * next - (1.0 - next) * a * a;
            assert!(resid.abs() <= 1e-12);
        }
    }

    #[test]
    fn aphd_abs_one_proximal_step() {
        let f = atom_abs();
        let run = aphd(
            &f,
            &[1.0],
            0.5,
            &BoxConstraint::free(1),
            &stop_dist(1e-8, 20),
            1e-12,
        )
        .unwrap();
        assert!((run.trace.records[1].x[0]).abs() < 1e-9);
        // α advanced by the recurrence
        assert!(
            (run.trace.records[1].alpha - 0.3903882032022076).abs() < 1e-9
                || run.trace.records[1].alpha == 0.0
        );
    }

    #[test]
    fn aphd_state_recurrences_hold() {
        let f = atom_quadratic(&[vec![2.0, 0.0], vec![0.0, 0.5]], &[0.3, -0.2], 0.0).unwrap();
        let run = aphd(
            &f,
            &[3.0, -2.0],
            0.5,
            &BoxConstraint::free(2),
            &StopRule::max_iters(30),
            1e-12,
        )
        .unwrap();
        let l = 2.0;
        for w in run.states.windows(2) {
            let (s0, s1) = (&w[0], &w[1]);
            let resid = s1.alpha * s1.alpha - (1.0 - s1.alpha) * s0.alpha * s0.alpha;
            assert!(resid.abs() <= 1e-12);
            assert!((l * s0.alpha * s0.alpha - s1.gamma).abs() <= 1e-10);
            if s0.k >= 1 {
                assert!((s1.gamma - (1.0 - s0.alpha) * s0.gamma).abs() <= 1e-10);
            }
            // y_k = α_k v_k + (1 − α_k) x_k
            for i in 0..2 {
                let y_expect = s1.alpha * s1.v[i] + (1.0 - s1.alpha) * s1.x[i];
                assert!((s1.y[i] - y_expect).abs() <= 1e-9);
            }
            // estimating property φ_k* ≥ f(x_k)
            assert!(s1.phi_star >= f.value(&s1.x) - 1e-9);
        }
    }

    #[test]
    fn aphd_requires_lipschitz_constant() {
        let f = atom_abs().with_meta(crate::hypo::HypoMeta {
            consistent: true,
            exact: true,
            lip_approx_l: None,
            lip_map_k: None,
            bound_c: None,
        });
        assert!(aphd(
            &f,
            &[1.0],
            0.5,
            &BoxConstraint::free(1),
            &stop_dist(1e-8, 5),
            1e-12
        )
        .is_err());
    }

    #[test]
    fn tol_sub_must_sit_below_thresholds() {
        let f = atom_abs();
        let stop = StopRule::new(None, Some(1e-10), 10).unwrap();
        assert!(mhd_exact_step(&f, &[1.0], &stop, 1e-10).is_err());
    }

    #[test]
    fn divergence_guard_fires_on_wrong_lipschitz_constant() {
        // declare L far too small for f = 8x², making 0.2 an "admissible"
        // but actually divergent step (true 2/L would forbid it)
        let f = atom_quadratic(&[vec![16.0]], &[0.0], 0.0)
            .unwrap()
            .with_meta(crate::hypo::HypoMeta {
                consistent: true,
                exact: false,
                lip_approx_l: Some(1.0),
                lip_map_k: None,
                bound_c: None,
            });
        let err = mhd_constant(&f, &[1.0], 0.3, None, &stop_dist(1e-8, 50), 1e-12);
        assert!(matches!(err, Err(Error::MetadataInconsistency { .. })));
    }
}
