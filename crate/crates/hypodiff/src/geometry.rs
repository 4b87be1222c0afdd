//! Finite-dimensional geometric kernel: simplex projection, a
//! simplex-constrained QP solver, minimum-norm point in a polytope,
//! point-to-polytope distance and the Pompeiu-Hausdorff distance
//! between polytopes.
//!
//! Everything here works on the Euclidean norm √(a² + ‖v‖²) of ℝ^{d+1};
//! all types are immutable after construction and all operations are pure.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, axpy, dot, norm, Matrix};

/// Default tolerance for geometry subproblems.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Vertices closer than this are merged on polytope construction.
pub const DEDUP_EPS: f64 = 1e-14;

/// Convex hull of a nonempty vertex list. Redundant vertices are kept;
/// duplicates (pairwise distance < 1e-14) are merged on construction.
#[derive(Debug, Clone)]
pub struct Polytope {
    vertices: Vec<Vec<f64>>,
    dim: usize,
}

impl Polytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Empty("polytope vertex list"));
        }
        let dim = vertices[0].len();
        for v in &vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if !all_finite(v) {
                return Err(Error::NonFinite("polytope vertex"));
            }
        }
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(vertices.len());
        for v in vertices {
            let dup = kept.iter().any(|u| {
                u.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    < DEDUP_EPS
            });
            if !dup {
                kept.push(v);
            }
        }
        Ok(Polytope {
            vertices: kept,
            dim,
        })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Always false: the vertex list is nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Gram matrix of the vertices.
    fn gram(&self) -> Matrix {
        let m = self.vertices.len();
        let mut g = Matrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let s = dot(&self.vertices[i], &self.vertices[j]);
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    /// Copy with vertices closer than `eps` merged (first-seen wins).
    /// Useful after oracle discretizations that produce near-duplicate
    /// support points, which slow down and ill-condition the QP kernel.
    pub fn deduplicated(&self, eps: f64) -> Polytope {
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let dup = kept.iter().any(|u| {
                u.iter()
                    .zip(v)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    < eps
            });
            if !dup {
                kept.push(v.clone());
            }
        }
        Polytope {
            vertices: kept,
            dim: self.dim,
        }
    }

    /// Point represented by convex weights λ.
    pub fn combine(&self, lambda: &SimplexWeights) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        for (w, v) in lambda.as_slice().iter().zip(&self.vertices) {
            axpy(*w, v, &mut p);
        }
        p
    }
}

/// Convex-combination coefficients: λ ≥ 0 componentwise, Σλ = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Wraps a weight vector, clipping negative round-off and renormalizing
    /// so the invariants hold exactly.
    pub fn new(mut lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Empty("simplex weights"));
        }
        if !all_finite(&lambda) {
            return Err(Error::NonFinite("simplex weights"));
        }
        let mut sum = 0.0;
        for l in lambda.iter_mut() {
            if *l < 0.0 {
                if *l < -1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "negative simplex weight {l:.3e}"
                    )));
                }
                *l = 0.0;
            }
            sum += *l;
        }
        if sum <= 0.0 {
            return Err(Error::InvalidParameter("zero-sum simplex weights".into()));
        }
        for l in lambda.iter_mut() {
            *l /= sum;
        }
        Ok(SimplexWeights(lambda))
    }

    pub fn uniform(m: usize) -> Self {
        SimplexWeights(vec![1.0 / m as f64; m])
    }

    pub fn vertex(m: usize, i: usize) -> Self {
        let mut l = vec![0.0; m];
        l[i] = 1.0;
        SimplexWeights(l)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Euclidean projection onto the unit simplex (sort-based).
pub fn simplex_project(y: &[f64]) -> Result<SimplexWeights> {
    if y.is_empty() {
        return Err(Error::Empty("projection input"));
    }
    if !all_finite(y) {
        return Err(Error::NonFinite("projection input"));
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    SimplexWeights::new(y.iter().map(|&v| (v - tau).max(0.0)).collect())
}

/// Minimize ½ λᵀGλ + cᵀλ over the unit simplex.
///
/// Frank-Wolfe with away steps and exact line search; optimality is
/// certified by the Frank-Wolfe gap max_i(−(Gλ+c)_i) + λᵀ(Gλ+c) ≤ tol.
/// Ties are broken toward the lowest index. Falls back to projected
/// gradient steps if the main loop stalls.
pub fn simplex_qp(g: &Matrix, c: &[f64], tol: f64) -> Result<SimplexWeights> {
    let m = c.len();
    if m == 0 {
        return Err(Error::Empty("qp cost vector"));
    }
    if g.rows() != m || g.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: g.rows().max(g.cols()),
        });
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    check_psd(g)?;
    if m == 1 {
        return SimplexWeights::new(vec![1.0]);
    }

    // start from the best single vertex, lowest index winning ties
    let mut best = (0, 0.5 * g.get(0, 0) + c[0]);
    for i in 1..m {
        let f = 0.5 * g.get(i, i) + c[i];
        if f < best.1 {
            best = (i, f);
        }
    }
    let mut lambda = vec![0.0; m];
    lambda[best.0] = 1.0;

    let cap = 10 * m * m + 10_000;
    let mut grad = vec![0.0; m];
    let mut gap = f64::INFINITY;
    for iter in 0..cap {
        for i in 0..m {
            grad[i] = dot(g.row(i), &lambda) + c[i];
        }
        let lg = dot(&lambda, &grad);
        let s = argmin(&grad);
        gap = lg - grad[s];
        if gap <= tol || iter % 64 == 63 {
            // land exactly on the optimal face before certifying
            if let Some(polished) = kkt_polish(g, c, &lambda) {
                let pgrad: Vec<f64> = (0..m).map(|i| dot(g.row(i), &polished) + c[i]).collect();
                let pgap = dot(&polished, &pgrad) - pgrad[argmin(&pgrad)];
                if pgap <= gap {
                    lambda = polished;
                    gap = pgap;
                }
            }
            if gap <= tol {
                return SimplexWeights::new(lambda);
            }
        }
        // away vertex: worst gradient among active coordinates
        let mut a = usize::MAX;
        for i in 0..m {
            if lambda[i] > 0.0 && (a == usize::MAX || grad[i] > grad[a]) {
                a = i;
            }
        }
        let gap_away = grad[a] - lg;
        let away = gap_away > gap && lambda[a] < 1.0;

        // direction d and maximal step
        let (dir_from, dir_to, gamma_max, dgap) = if away {
            (a, usize::MAX, lambda[a] / (1.0 - lambda[a]), gap_away)
        } else {
            (usize::MAX, s, 1.0, gap)
        };
        // dᵀGd for d = e_to − λ (FW) or λ − e_from (away)
        let glambda: Vec<f64> = (0..m).map(|i| grad[i] - c[i]).collect();
        let lgl = dot(&lambda, &glambda);
        let quad = if away {
            lgl - 2.0 * glambda[dir_from] + g.get(dir_from, dir_from)
        } else {
            g.get(dir_to, dir_to) - 2.0 * glambda[dir_to] + lgl
        };
        let step = if quad > 0.0 {
            (dgap / quad).min(gamma_max)
        } else {
            gamma_max
        };
        if !step.is_finite() || step <= 0.0 {
            break;
        }
        if away {
            for (i, l) in lambda.iter_mut().enumerate() {
                *l *= 1.0 + step;
                if i == dir_from {
                    *l -= step;
                }
            }
        } else {
            for (i, l) in lambda.iter_mut().enumerate() {
                *l *= 1.0 - step;
                if i == dir_to {
                    *l += step;
                }
            }
        }
        renormalize(&mut lambda);
    }

    // projected-gradient fallback
    let lip = (0..m)
        .map(|i| g.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        .max(1e-30);
    for _ in 0..10_000 {
        for i in 0..m {
            grad[i] = dot(g.row(i), &lambda) + c[i];
        }
        let lg = dot(&lambda, &grad);
        gap = lg - grad[argmin(&grad)];
        if gap <= tol {
            if let Some(polished) = kkt_polish(g, c, &lambda) {
                let pgrad: Vec<f64> = (0..m).map(|i| dot(g.row(i), &polished) + c[i]).collect();
                let pgap = dot(&polished, &pgrad) - pgrad[argmin(&pgrad)];
                if pgap <= gap {
                    lambda = polished;
                }
            }
            return SimplexWeights::new(lambda);
        }
        let trial: Vec<f64> = lambda
            .iter()
            .zip(&grad)
            .map(|(l, gr)| l - gr / lip)
            .collect();
        lambda = simplex_project(&trial)?.0;
    }
    Err(Error::NoConvergence {
        what: "simplex qp",
        gap,
        iters: cap + 10_000,
        last: lambda,
    })
}

/// Solve the QP restricted to the affine hull of the active vertices:
/// the bordered KKT system [G_AA 1; 1ᵀ 0](λ_A, ν) = (−c_A, 1). Indices
/// with negative solution weights are dropped and the system re-solved.
/// Returns a feasible candidate or None when every reduced system is
/// singular or infeasible.
fn kkt_polish(g: &Matrix, c: &[f64], lambda: &[f64]) -> Option<Vec<f64>> {
    let m = lambda.len();
    let mut active: Vec<usize> = (0..m).filter(|&i| lambda[i] > 1e-12).collect();
    if active.is_empty() {
        return None;
    }
    for _ in 0..m {
        let k = active.len();
        let mut kkt = Matrix::zeros(k + 1, k + 1);
        let mut rhs = vec![0.0; k + 1];
        for (p, &i) in active.iter().enumerate() {
            for (q, &j) in active.iter().enumerate() {
                kkt.set(p, q, g.get(i, j));
            }
            kkt.set(p, k, 1.0);
            kkt.set(k, p, 1.0);
            rhs[p] = -c[i];
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
            return Some(full);
        }
        if active.len() == 1 {
            return None;
        }
        active.remove(worst_pos);
    }
    None
}

fn argmin(x: &[f64]) -> usize {
    let mut idx = 0;
    for i in 1..x.len() {
        if x[i] < x[idx] {
            idx = i;
        }
    }
    idx
}

fn renormalize(lambda: &mut [f64]) {
    let mut sum = 0.0;
    for l in lambda.iter_mut() {
        if *l < 0.0 {
            *l = 0.0;
        }
        sum += *l;
    }
    for l in lambda.iter_mut() {
        *l /= sum;
    }
}

fn check_psd(g: &Matrix) -> Result<()> {
    let scale = 1.0 + (0..g.rows()).map(|i| g.get(i, i).abs()).fold(0.0, f64::max);
    for i in 0..g.rows() {
        for j in (i + 1)..g.cols() {
            let asym = (g.get(i, j) - g.get(j, i)).abs();
            if asym > 1e-10 * scale {
                return Err(Error::NotPsd { violation: asym });
            }
        }
    }
    let (eig, _) = crate::linalg::jacobi_eigh(g)?;
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { violation: -min });
    }
    Ok(())
}

/// Minimum-norm point of co(P) together with its convex weights.
///
/// The returned point satisfies ⟨p*, q − p*⟩ ≥ −tol·(1 + ‖q‖) at every
/// vertex q, which is the variational characterization of the projection
/// of the origin onto the hull.
pub fn min_norm_point(p: &Polytope, tol: f64) -> Result<(Vec<f64>, SimplexWeights)> {
    let lambda = simplex_qp(&p.gram(), &vec![0.0; p.len()], tol)?;
    let point = p.combine(&lambda);
    Ok((point, lambda))
}

/// Euclidean distance from a point to co(P), via the minimum-norm point
/// of the translated polytope {vertex − q}.
pub fn point_polytope_distance(q: &[f64], p: &Polytope, tol: f64) -> Result<f64> {
    if q.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.len(),
        });
    }
    let translated = Polytope::new(
        p.vertices()
            .iter()
            .map(|v| v.iter().zip(q).map(|(a, b)| a - b).collect())
            .collect(),
    )?;
    let (point, _) = min_norm_point(&translated, tol)?;
    Ok(norm(&point))
}

/// Pompeiu-Hausdorff distance between co(A) and co(B).
///
/// dist(·, convex set) is convex, so its maximum over a polytope is
/// attained at a vertex; sweeping the vertices of each hull against the
/// other hull is exact.
pub fn hausdorff_polytope(a: &Polytope, b: &Polytope, tol: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut worst = 0.0_f64;
    for v in a.vertices() {
        worst = worst.max(point_polytope_distance(v, b, tol)?);
    }
    for v in b.vertices() {
        worst = worst.max(point_polytope_distance(v, a, tol)?);
    }
    Ok(worst)
}
