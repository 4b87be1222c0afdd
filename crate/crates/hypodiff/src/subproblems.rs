//! Per-iteration subproblems of the descent methods: the minimum-norm
//! element of a hypodifferential and the proximal step z_γ(x), each for
//! both set representations, with certified accuracy.

use crate::error::{Error, Result};
use crate::geometry::{min_norm_point, simplex_project, Polytope, SimplexWeights};
use crate::hypo::{HypoElement, HypoFunction, HypoRep, Hypodifferential};
use crate::linalg::{dot, sub};

/// Vertex budget for the cutting-plane outer loop on oracle sets.
pub const CUTTING_PLANE_BUDGET: usize = 512;

/// Iteration cap for the dual ascent in the proximal step.
pub const DUAL_ASCENT_CAP: usize = 100_000;

/// Axis-aligned box lower ≤ x ≤ upper, componentwise; ±∞ entries are
/// allowed and the all-infinite box denotes ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraint {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxConstraint {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::NonFinite("box bound"));
            }
            if l > u {
                return Err(Error::EmptyBox { coord: i });
            }
        }
        Ok(BoxConstraint { lower, upper })
    }

    /// The unconstrained box Q = ℝ^d.
    pub fn free(dim: usize) -> Self {
        BoxConstraint {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_free(&self) -> bool {
        self.lower.iter().all(|l| *l == f64::NEG_INFINITY)
            && self.upper.iter().all(|u| *u == f64::INFINITY)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(xi, (l, u))| xi.max(*l).min(*u))
            .collect()
    }
}

/// Solution of the proximal step problem: the point z_γ(x), the dual
/// simplex weights over the polytope vertices used, and the certified
/// duality gap.
#[derive(Debug, Clone)]
pub struct ProximalSolution {
    pub z: Vec<f64>,
    pub lambda: SimplexWeights,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// Inner iterations spent (dual ascent plus cutting-plane rounds).
    pub iterations: usize,
}

/// Minimum-norm element (a_k, v_k) of a hypodifferential, with optimality
/// gap at most `tol`.
///
/// Polytope sets go through the certified simplex QP; oracle sets run a
/// fully corrective Frank-Wolfe loop that queries the support at the
/// negated current point and stops when ‖p‖² − ⟨p, s⟩ ≤ tol.
pub fn min_norm_hypo(h: &Hypodifferential, tol: f64) -> Result<HypoElement> {
    min_norm_hypo_counted(h, tol).map(|(e, _)| e)
}

/// Same as [`min_norm_hypo`], also reporting the subproblem effort: one
/// QP solve for polytopes, the number of support-loop rounds for oracles.
pub fn min_norm_hypo_counted(h: &Hypodifferential, tol: f64) -> Result<(HypoElement, usize)> {
    let report = h.validate();
    if !report.valid {
        return Err(Error::InvalidHypodifferential(report.violations.join("; ")));
    }
    match h.rep() {
        HypoRep::Polytope(verts) => {
            let poly = Polytope::new(verts.iter().map(HypoElement::to_point).collect())?;
            let (p, _) = min_norm_point(&poly, tol)?;
            Ok((HypoElement::from_point(&p), 1))
        }
        HypoRep::Oracle(oracle) => {
            let mut points = vec![oracle.seed().to_point(), {
                h.support(1.0, &vec![0.0; h.dim()])?.to_point()
            }];
            let mut best_gap = f64::INFINITY;
            let mut current = points[0].clone();
            for round in 0..CUTTING_PLANE_BUDGET {
                let poly = Polytope::new(points.clone())?;
                let (p, _) = min_norm_point(&poly, tol * 0.1)?;
                let w: Vec<f64> = p.iter().map(|c| -c).collect();
                let s = h.support(w[0].max(0.0), &w[1..])?.to_point();
                let gap = dot(&p, &p) - dot(&p, &s);
                current = p;
                best_gap = best_gap.min(gap);
                if gap <= tol {
                    return Ok((HypoElement::from_point(&current), round + 1));
                }
                points.push(s);
            }
            Err(Error::NoConvergence {
                what: "minimum-norm support loop",
                gap: best_gap,
                iters: CUTTING_PLANE_BUDGET,
                last: current,
            })
        }
    }
}

/// State of one dual-ascent solve over a fixed vertex list.
struct DualProblem<'a> {
    offsets: Vec<f64>,
    slopes: Vec<&'a [f64]>,
    x: &'a [f64],
    gamma: f64,
    q: &'a BoxConstraint,
}

impl<'a> DualProblem<'a> {
    fn new(
        verts: &'a [HypoElement],
        x: &'a [f64],
        gamma: f64,
        q: &'a BoxConstraint,
    ) -> DualProblem<'a> {
        DualProblem {
            offsets: verts.iter().map(|e| e.a).collect(),
            slopes: verts.iter().map(|e| e.v.as_slice()).collect(),
            x,
            gamma,
            q,
        }
    }

    fn m(&self) -> usize {
        self.offsets.len()
    }

    fn averaged_slope(&self, lambda: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.x.len()];
        for (w, s) in lambda.iter().zip(&self.slopes) {
            crate::linalg::axpy(*w, s, &mut v);
        }
        v
    }

    /// Inner minimizer z(λ) = clamp(x − v̄(λ)/γ).
    fn z_of(&self, lambda: &[f64]) -> Vec<f64> {
        let vbar = self.averaged_slope(lambda);
        let trial: Vec<f64> = self
            .x
            .iter()
            .zip(&vbar)
            .map(|(xi, vi)| xi - vi / self.gamma)
            .collect();
        self.q.clamp(&trial)
    }

    /// Dual value at λ with the inner minimum in closed form.
    fn dual_value(&self, lambda: &[f64], z: &[f64]) -> f64 {
        let vbar = self.averaged_slope(lambda);
        let dz = sub(z, self.x);
        dot(&self.offsets, lambda) + dot(&vbar, &dz) + 0.5 * self.gamma * dot(&dz, &dz)
    }

    /// Primal value of the restricted model at z.
    fn primal_value(&self, z: &[f64]) -> f64 {
        let dz = sub(z, self.x);
        let model = self
            .offsets
            .iter()
            .zip(&self.slopes)
            .map(|(a, v)| a + dot(v, &dz))
            .fold(f64::NEG_INFINITY, f64::max);
        model + 0.5 * self.gamma * dot(&dz, &dz)
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let dz = sub(z, self.x);
        self.offsets
            .iter()
            .zip(&self.slopes)
            .map(|(a, v)| a + dot(v, &dz))
            .collect()
    }

    /// Maximize the dual over the simplex by projected gradient ascent
    /// with backtracking, accelerated by reduced quadratic solves on the
    /// current clamp pattern. Returns (λ, z, primal, dual, iterations).
    fn solve(
        &self,
        tol: f64,
        warm: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Vec<f64>, f64, f64, usize)> {
        let m = self.m();
        let mut lambda = match warm {
            Some(w) if w.len() == m => simplex_project(w)?.as_slice().to_vec(),
            _ => {
                // best single vertex beats the uniform start often enough
                let mut best = (vec![1.0 / m as f64; m], {
                    let l = vec![1.0 / m as f64; m];
                    let z = self.z_of(&l);
                    self.dual_value(&l, &z)
                });
                for i in 0..m {
                    let mut l = vec![0.0; m];
                    l[i] = 1.0;
                    let z = self.z_of(&l);
                    let d = self.dual_value(&l, &z);
                    if d > best.1 {
                        best = (l, d);
                    }
                }
                best.0
            }
        };

        // step-size scale from the slope Gram row sums
        let gram_inf = self
            .slopes
            .iter()
            .map(|si| self.slopes.iter().map(|sj| dot(si, sj).abs()).sum::<f64>())
            .fold(0.0_f64, f64::max);
        let max_a = self.offsets.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let step0 = 1.0 / (gram_inf / self.gamma + max_a + 1.0);

        let mut z = self.z_of(&lambda);
        let mut dual = self.dual_value(&lambda, &z);
        let mut iters = 0usize;
        let mut polished = false;
        loop {
            let gap = self.primal_value(&z) - dual;
            if gap <= tol {
                return Ok((lambda, z, dual + gap, dual, iters));
            }
            if iters >= DUAL_ASCENT_CAP {
                return Err(Error::NoConvergence {
                    what: "proximal dual ascent",
                    gap,
                    iters,
                    last: lambda,
                });
            }

            // reduced quadratic accelerator on the current clamp pattern
            if iters % 25 == 0 {
                if let Some((l_acc, z_acc, d_acc)) = self.pattern_qp(&z, tol) {
                    if d_acc > dual {
                        lambda = l_acc;
                        z = z_acc;
                        dual = d_acc;
                        iters += 1;
                        continue;
                    }
                }
            }
            // near the optimum, land exactly on the active face: the gap
            // is linear in the dual error at model kinks, so plain ascent
            // cannot certify tight tolerances on its own
            if gap <= 1e-3 * (1.0 + dual.abs()) && !polished {
                polished = true;
                if let Some((l_p, z_p, d_p)) = self.active_set_newton(&z) {
                    let gap_p = self.primal_value(&z_p) - d_p;
                    if gap_p < gap && gap_p >= -1e-12 {
                        lambda = l_p;
                        z = z_p;
                        dual = d_p;
                        iters += 1;
                        continue;
                    }
                }
            }

            let grad = self.gradient(&z);
            let mut step = step0;
            let mut advanced = false;
            for _ in 0..60 {
                let trial: Vec<f64> = lambda
                    .iter()
                    .zip(&grad)
                    .map(|(l, g)| l + step * g)
                    .collect();
                let l_new = simplex_project(&trial)?.as_slice().to_vec();
                let z_new = self.z_of(&l_new);
                let d_new = self.dual_value(&l_new, &z_new);
                if d_new > dual {
                    lambda = l_new;
                    z = z_new;
                    dual = d_new;
                    advanced = true;
                    polished = false;
                    break;
                }
                step *= 0.5;
            }
            iters += 1;
            if !advanced {
                // ascent stalled at numerical precision; one last polish
                if let Some((l_p, z_p, d_p)) = self.active_set_newton(&z) {
                    let gap_p = self.primal_value(&z_p) - d_p;
                    let gap_old = self.primal_value(&z) - dual;
                    if gap_p < gap_old && gap_p >= -1e-12 {
                        lambda = l_p;
                        z = z_p;
                        dual = d_p;
                    }
                }
                let gap = self.primal_value(&z) - dual;
                if gap <= tol.max(1e-14) {
                    return Ok((lambda, z, dual + gap, dual, iters));
                }
                return Err(Error::NoConvergence {
                    what: "proximal dual ascent",
                    gap,
                    iters,
                    last: lambda,
                });
            }
        }
    }

    /// Equality-constrained KKT solve on the current clamp pattern and the
    /// pieces active at z: all active model pieces share a multiplier ν,
    /// Σλ = 1. Negative weights are dropped and the system re-solved. This
    /// lands exactly on kink optima that first-order ascent only
    /// approaches.
    fn active_set_newton(&self, z: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let m = self.m();
        let d = self.x.len();
        let clamped: Vec<Option<f64>> = (0..d)
            .map(|j| {
                if z[j] <= self.q.lower()[j] {
                    Some(self.q.lower()[j] - self.x[j])
                } else if z[j] >= self.q.upper()[j] {
                    Some(self.q.upper()[j] - self.x[j])
                } else {
                    None
                }
            })
            .collect();
        // model piece values at z select the active set
        let scores = self.gradient(z);
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let act_tol = 1e-6 * (1.0 + top.abs());
        let mut active: Vec<usize> = (0..m).filter(|&i| scores[i] >= top - act_tol).collect();
        if active.is_empty() {
            return None;
        }
        // linear part h_i = a_i + Σ_clamped v_ij b_j
        let mut h = self.offsets.clone();
        for (i, s) in self.slopes.iter().enumerate() {
            for (j, c) in clamped.iter().enumerate() {
                if let Some(b) = c {
                    h[i] += s[j] * b;
                }
            }
        }
        for _ in 0..m {
            let k = active.len();
            let mut kkt = crate::linalg::Matrix::zeros(k + 1, k + 1);
            let mut rhs = vec![0.0; k + 1];
            for (p, &i) in active.iter().enumerate() {
                for (q, &j) in active.iter().enumerate() {
                    let mut gg = 0.0;
                    for (jj, c) in clamped.iter().enumerate() {
                        if c.is_none() {
                            gg += self.slopes[i][jj] * self.slopes[j][jj];
                        }
                    }
                    kkt.set(p, q, gg / self.gamma);
                }
                kkt.set(p, k, 1.0);
                kkt.set(k, p, 1.0);
                rhs[p] = h[i];
            }
            rhs[k] = 1.0;
            let sol = crate::linalg::solve_linear(&kkt, &rhs)?;
            let weights = &sol[..k];
            let (mut worst, mut worst_pos) = (0.0_f64, usize::MAX);
            for (p, &w) in weights.iter().enumerate() {
                if w < worst {
                    worst = w;
                    worst_pos = p;
                }
            }
            if worst >= -1e-12 {
                let mut full = vec![0.0; m];
                for (p, &i) in active.iter().enumerate() {
                    full[i] = weights[p].max(0.0);
                }
                let sum: f64 = full.iter().sum();
                if sum <= 0.0 {
                    return None;
                }
                for v in full.iter_mut() {
                    *v /= sum;
                }
                let z_new = self.z_of(&full);
                let d_new = self.dual_value(&full, &z_new);
                return Some((full, z_new, d_new));
            }
            if active.len() == 1 {
                return None;
            }
            active.remove(worst_pos);
        }
        None
    }

    /// With the clamp pattern of z frozen, the dual is a concave quadratic
    /// in λ; solve it with the certified simplex QP and accept the result
    /// only if it genuinely improves the dual.
    fn pattern_qp(&self, z: &[f64], tol: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let d = self.x.len();
        let m = self.m();
        let clamped: Vec<Option<f64>> = (0..d)
            .map(|j| {
                if z[j] <= self.q.lower()[j] {
                    Some(self.q.lower()[j] - self.x[j])
                } else if z[j] >= self.q.upper()[j] {
                    Some(self.q.upper()[j] - self.x[j])
                } else {
                    None
                }
            })
            .collect();
        // linear term: a_i + Σ_clamped v_ij b_j ; quadratic: Gram over free coords / γ
        let mut lin = self.offsets.clone();
        for (i, s) in self.slopes.iter().enumerate() {
            for (j, c) in clamped.iter().enumerate() {
                if let Some(b) = c {
                    lin[i] += s[j] * b;
                }
            }
        }
        let mut g = crate::linalg::Matrix::zeros(m, m);
        for i in 0..m {
            for k in i..m {
                let mut s = 0.0;
                for j in 0..d {
                    if clamped[j].is_none() {
                        s += self.slopes[i][j] * self.slopes[k][j];
                    }
                }
                g.set(i, k, s / self.gamma);
                g.set(k, i, s / self.gamma);
            }
        }
        let neg_lin: Vec<f64> = lin.iter().map(|v| -v).collect();
        let lambda = crate::geometry::simplex_qp(&g, &neg_lin, (tol * 0.1).max(1e-14)).ok()?;
        let l = lambda.as_slice().to_vec();
        let z_new = self.z_of(&l);
        let d_new = self.dual_value(&l, &z_new);
        Some((l, z_new, d_new))
    }
}

/// Solve min over z ∈ Q of max over the hypodifferential of
/// (a + ⟨v, z − x⟩) + (γ/2)‖z − x‖², through the simplex dual.
///
/// Oracle representations are handled by a cutting-plane outer loop:
/// solve on the current vertex set, query the support at the inner
/// solution, add the returned element when the model is still off by more
/// than tol/2. `warm` optionally seeds the dual weights from a previous
/// solve over the same vertex count.
pub fn proximal_step(
    f: &HypoFunction,
    x: &[f64],
    gamma: f64,
    q: &BoxConstraint,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<ProximalSolution> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "proximal parameter must be > 0, got {gamma}"
        )));
    }
    if q.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: q.dim(),
        });
    }
    if !q.contains(x) {
        let coord = x
            .iter()
            .enumerate()
            .find(|(i, xi)| **xi < q.lower()[*i] || **xi > q.upper()[*i])
            .map(|(i, _)| i)
            .unwrap_or(0);
        return Err(Error::OutsideBox { coord });
    }
    let h = f.hypodifferential(x);
    match h.rep() {
        HypoRep::Polytope(verts) => {
            let problem = DualProblem::new(verts, x, gamma, q);
            let (lambda, z, primal, dual, iters) = problem.solve(tol, warm)?;
            Ok(ProximalSolution {
                z,
                lambda: SimplexWeights::new(lambda)?,
                primal_value: primal,
                dual_value: dual,
                gap: primal - dual,
                iterations: iters,
            })
        }
        HypoRep::Oracle(oracle) => {
            let mut verts: Vec<HypoElement> =
                vec![oracle.seed().clone(), h.support(1.0, &vec![0.0; h.dim()])?];
            dedup_elements(&mut verts);
            let mut total_iters = 0usize;
            loop {
                let problem = DualProblem::new(&verts, x, gamma, q);
                let (lambda, z, _primal_sub, dual, iters) = problem.solve(tol * 0.5, None)?;
                total_iters += iters + 1;
                // true model value at z via one support query
                let dz = sub(&z, x);
                let cut = h.support(1.0, &dz)?;
                let model_true = cut.a + dot(&cut.v, &dz);
                let primal_true = model_true + 0.5 * gamma * dot(&dz, &dz);
                let gap = primal_true - dual;
                if gap <= tol {
                    return Ok(ProximalSolution {
                        z,
                        lambda: SimplexWeights::new(lambda)?,
                        primal_value: primal_true,
                        dual_value: dual,
                        gap,
                        iterations: total_iters,
                    });
                }
                if verts.len() >= CUTTING_PLANE_BUDGET {
                    return Err(Error::NoConvergence {
                        what: "proximal cutting-plane loop",
                        gap,
                        iters: total_iters,
                        last: z,
                    });
                }
                let before = verts.len();
                verts.push(cut);
                dedup_elements(&mut verts);
                if verts.len() == before {
                    // support returned a known vertex; accept at the
                    // stalled accuracy only if within tolerance slack
                    return Err(Error::NoConvergence {
                        what: "proximal cutting-plane loop",
                        gap,
                        iters: total_iters,
                        last: z,
                    });
                }
            }
        }
    }
}

fn dedup_elements(verts: &mut Vec<HypoElement>) {
    let mut kept: Vec<HypoElement> = Vec::with_capacity(verts.len());
    for e in verts.drain(..) {
        let dup = kept.iter().any(|u| {
            let da = u.a - e.a;
            let dv: f64 = u.v.iter().zip(&e.v).map(|(a, b)| (a - b) * (a - b)).sum();
            (da * da + dv).sqrt() < 1e-13
        });
        if !dup {
            kept.push(e);
        }
    }
    *verts = kept;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{atom_abs, atom_norm_affine, atom_quadratic};
    use crate::linalg::Matrix;

    #[test]
    fn min_norm_abs_at_one() {
        let h = atom_abs().hypodifferential(&[1.0]);
        let e = min_norm_hypo(&h, 1e-12).unwrap();
        assert!((e.a + 0.5).abs() < 1e-9);
        assert!((e.v[0] - 0.5).abs() < 1e-9);
        assert!((e.norm() - 0.5_f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn min_norm_abs_at_zero_is_origin() {
        let h = atom_abs().hypodifferential(&[0.0]);
        let e = min_norm_hypo(&h, 1e-12).unwrap();
        assert!(e.norm() < 1e-9);
    }

    #[test]
    fn min_norm_oracle_matches_polytope() {
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let f = atom_norm_affine(&a, &[0.0]).unwrap();
        let h = f.hypodifferential(&[1.0]);
        assert!(!h.is_polytope());
        let e = min_norm_hypo(&h, 1e-12).unwrap();
        assert!((e.a + 0.5).abs() < 1e-6);
        assert!((e.v[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn min_norm_rejects_invalid_set() {
        let h = Hypodifferential::polytope(vec![HypoElement::new(0.5, vec![1.0])]).unwrap();
        assert!(matches!(
            min_norm_hypo(&h, 1e-10),
            Err(Error::InvalidHypodifferential(_))
        ));
    }

    #[test]
    fn proximal_abs_free() {
        let sol = proximal_step(
            &atom_abs(),
            &[1.0],
            1.0,
            &BoxConstraint::free(1),
            1e-12,
            None,
        )
        .unwrap();
        assert!((sol.z[0]).abs() < 1e-9);
        assert!((sol.primal_value + 0.5).abs() < 1e-9);
        assert!((sol.dual_value + 0.5).abs() < 1e-9);
        assert!(sol.gap <= 1e-12 && sol.gap >= -1e-12);
        assert!((sol.lambda.as_slice()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn proximal_abs_box() {
        let q = BoxConstraint::new(vec![0.5], vec![2.0]).unwrap();
        let sol = proximal_step(&atom_abs(), &[1.0], 1.0, &q, 1e-12, None).unwrap();
        assert!((sol.z[0] - 0.5).abs() < 1e-9);
        assert!((sol.primal_value + 0.375).abs() < 1e-9);
    }

    #[test]
    fn proximal_large_gamma_pins_to_x() {
        let sol = proximal_step(
            &atom_abs(),
            &[1.0],
            1e6,
            &BoxConstraint::free(1),
            1e-12,
            None,
        )
        .unwrap();
        assert!((sol.z[0] - 1.0).abs() <= 1.01e-6);
        assert!(sol.primal_value <= 0.0 + 1e-12);
    }

    #[test]
    fn proximal_rejects_outside_box() {
        let q = BoxConstraint::new(vec![2.0], vec![3.0]).unwrap();
        assert!(matches!(
            proximal_step(&atom_abs(), &[1.0], 1.0, &q, 1e-10, None),
            Err(Error::OutsideBox { .. })
        ));
    }

    #[test]
    fn empty_box_rejected_on_construction() {
        assert!(matches!(
            BoxConstraint::new(vec![1.0], vec![0.0]),
            Err(Error::EmptyBox { .. })
        ));
    }

    #[test]
    fn proximal_oracle_matches_polytope_route() {
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let oracle_f = atom_norm_affine(&a, &[0.0]).unwrap();
        let tol = 1e-11;
        for (x, gamma) in [(1.0, 1.0), (0.3, 2.0), (-1.7, 0.5)] {
            let s1 =
                proximal_step(&oracle_f, &[x], gamma, &BoxConstraint::free(1), tol, None).unwrap();
            let s2 = proximal_step(&atom_abs(), &[x], gamma, &BoxConstraint::free(1), tol, None)
                .unwrap();
            assert!(
                (s1.z[0] - s2.z[0]).abs() <= 10.0 * tol.max(1e-9),
                "oracle and polytope proximal disagree at x={x}"
            );
            assert!(s1.gap <= tol && s1.gap >= -1e-12);
        }
    }

    #[test]
    fn proximal_quadratic_is_gradient_step() {
        // f = x², γ = 2: z = x − ∇f(x)/γ = x − x = 0 from any x
        let f = atom_quadratic(&[vec![2.0]], &[0.0], 0.0).unwrap();
        let sol = proximal_step(&f, &[3.0], 2.0, &BoxConstraint::free(1), 1e-12, None).unwrap();
        assert!((sol.z[0]).abs() < 1e-9);
        assert_eq!(sol.lambda.as_slice(), &[1.0]);
    }

    #[test]
    fn proximal_lower_estimate() {
        // for consistent f with LipApprox constant L and γ ≥ L:
        // f(x) ≥ f(z_γ(y)) + γ⟨y − z, x − y⟩ + (γ/2)‖y − z‖²
        let f = atom_abs();
        let gamma = 1.0;
        let q = BoxConstraint::free(1);
        for y in [-2.0, -0.4, 0.0, 0.9, 3.0] {
            let sol = proximal_step(&f, &[y], gamma, &q, 1e-12, None).unwrap();
            let z = sol.z[0];
            for x in [-3.0, -1.0, 0.0, 0.5, 2.0] {
                let lhs = f.value(&[x]);
                let rhs =
                    f.value(&[z]) + gamma * (y - z) * (x - y) + 0.5 * gamma * (y - z) * (y - z);
                assert!(lhs >= rhs - 1e-9, "lower estimate violated at y={y}, x={x}");
            }
        }
    }

    #[test]
    fn proximal_descent_primal_nonpositive() {
        let q = BoxConstraint::new(vec![-0.5], vec![4.0]).unwrap();
        for x in [-0.5, 0.0, 1.0, 4.0] {
            let sol = proximal_step(&atom_abs(), &[x], 0.7, &q, 1e-11, None).unwrap();
            assert!(sol.primal_value <= 1e-12);
            assert!(sol.gap >= -1e-12);
        }
    }

    #[test]
    fn proximal_warm_start_agrees() {
        let cold = proximal_step(
            &atom_abs(),
            &[1.0],
            1.0,
            &BoxConstraint::free(1),
            1e-12,
            None,
        )
        .unwrap();
        let warm = proximal_step(
            &atom_abs(),
            &[1.0],
            1.0,
            &BoxConstraint::free(1),
            1e-12,
            Some(cold.lambda.as_slice()),
        )
        .unwrap();
        assert!((cold.z[0] - warm.z[0]).abs() < 1e-9);
    }
}
