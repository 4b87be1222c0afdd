//! Builtin hypodifferentiable functions: absolute value, polyhedral and
//! sublinear functions, the norm of an affine map, the maximal eigenvalue
//! of a symmetric matrix, the distance to the nonnegative orthant, smooth
//! quadratics, and the constructive bundle hypodifferential.
//!
//! All builtins are consistent on ℝ^d; all except the quadratic carry an
//! exact (global) hypodifferential map.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hypo::{HypoElement, HypoFunction, HypoMeta, Hypodifferential};
use crate::linalg::{
    all_finite, dot, max_eigenpair, norm, spectral_norm, sym_to_vec, sym_vec_dim, vec_to_sym,
    Matrix,
};

/// |x| on ℝ with d̲f(x) = co{(x − |x|, 1), (−x − |x|, −1)}; the map is
/// exact and Lipschitz with constant 2.
pub fn atom_abs() -> HypoFunction {
    HypoFunction::new(
        1,
        Arc::new(|x: &[f64]| x[0].abs()),
        Arc::new(|x: &[f64]| {
            let x = x[0];
            Hypodifferential::polytope(vec![
                HypoElement::new(x - x.abs(), vec![1.0]),
                HypoElement::new(-x - x.abs(), vec![-1.0]),
            ])
            .expect("two finite vertices")
        }),
        HypoMeta::exact_consistent(1.0, 2.0),
    )
}

/// Offsets and slopes of a finite max of affine pieces
/// f(x) = maxᵢ (aᵢ + ⟨vᵢ, x⟩).
#[derive(Debug, Clone)]
pub struct PolyhedralSpec {
    offsets: Vec<f64>,
    slopes: Vec<Vec<f64>>,
    dim: usize,
}

impl PolyhedralSpec {
    pub fn new(offsets: Vec<f64>, slopes: Vec<Vec<f64>>) -> Result<Self> {
        if offsets.is_empty() || slopes.is_empty() {
            return Err(Error::Empty("polyhedral piece list"));
        }
        if offsets.len() != slopes.len() {
            return Err(Error::DimensionMismatch {
                expected: offsets.len(),
                got: slopes.len(),
            });
        }
        let dim = slopes[0].len();
        for s in &slopes {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if !all_finite(s) {
                return Err(Error::NonFinite("polyhedral slope"));
            }
        }
        if !all_finite(&offsets) {
            return Err(Error::NonFinite("polyhedral offset"));
        }
        Ok(PolyhedralSpec {
            offsets,
            slopes,
            dim,
        })
    }

    pub fn pieces(&self) -> usize {
        self.offsets.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_slope_norm(&self) -> f64 {
        self.slopes.iter().map(|s| norm(s)).fold(0.0, f64::max)
    }
}

/// Polyhedral function with hypodifferential vertices
/// (aᵢ + ⟨vᵢ, x⟩ − f(x), vᵢ); exact, consistent, map constant
/// 2·maxᵢ‖vᵢ‖.
pub fn atom_polyhedral(spec: &PolyhedralSpec) -> HypoFunction {
    let spec_v = spec.clone();
    let spec_h = spec.clone();
    let k = 2.0 * spec.max_slope_norm();
    HypoFunction::new(
        spec.dim(),
        Arc::new(move |x: &[f64]| {
            spec_v
                .offsets
                .iter()
                .zip(&spec_v.slopes)
                .map(|(a, v)| a + dot(v, x))
                .fold(f64::NEG_INFINITY, f64::max)
        }),
        Arc::new(move |x: &[f64]| {
            let values: Vec<f64> = spec_h
                .offsets
                .iter()
                .zip(&spec_h.slopes)
                .map(|(a, v)| a + dot(v, x))
                .collect();
            let fx = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Hypodifferential::polytope(
                values
                    .iter()
                    .zip(&spec_h.slopes)
                    .map(|(val, v)| HypoElement::new(val - fx, v.clone()))
                    .collect(),
            )
            .expect("nonempty piece list")
        }),
        HypoMeta::exact_consistent(1.0, k),
    )
}

/// Sublinear function f(x) = max over slope vertices of ⟨x*, x⟩, with
/// hypodifferential vertices (⟨x*ⱼ, x⟩ − f(x), x*ⱼ).
pub fn atom_sublinear(slopes: Vec<Vec<f64>>) -> Result<HypoFunction> {
    let spec = PolyhedralSpec::new(vec![0.0; slopes.len()], slopes)?;
    Ok(atom_polyhedral(&spec))
}

/// f(x) = ‖Ax + b‖ (Euclidean), as a support oracle over
/// {(⟨y*, Ax+b⟩ − ‖Ax+b‖, Aᵀy*) : ‖y*‖ ≤ 1}.
///
/// The support maximizer for weight (w_a, w_v) is y* = u/‖u‖ with
/// u = w_a(Ax+b) + A w_v; the zero-slope element (−‖Ax+b‖, 0) is returned
/// when u = 0.
pub fn atom_norm_affine(a: &Matrix, b: &[f64]) -> Result<HypoFunction> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    if !all_finite(b) {
        return Err(Error::NonFinite("affine shift"));
    }
    let dim = a.cols();
    let k = 2.0 * spectral_norm(a);
    let a_val = a.clone();
    let a_hypo = a.clone();
    let b_val = b.to_vec();
    let b_hypo = b.to_vec();
    let residual = move |a: &Matrix, b: &[f64], x: &[f64]| -> Vec<f64> {
        let mut r = a.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri += bi;
        }
        r
    };
    let res_val = residual;
    Ok(HypoFunction::new(
        dim,
        Arc::new(move |x: &[f64]| norm(&res_val(&a_val, &b_val, x))),
        Arc::new(move |x: &[f64]| {
            let r = residual(&a_hypo, &b_hypo, x);
            let r_norm = norm(&r);
            let a_inner = a_hypo.clone();
            let seed = if r_norm > 0.0 {
                let y: Vec<f64> = r.iter().map(|ri| ri / r_norm).collect();
                HypoElement::new(0.0, a_inner.mul_transpose_vec(&y))
            } else {
                HypoElement::new(0.0, vec![0.0; x.len()])
            };
            let a_query = a_hypo.clone();
            Hypodifferential::oracle(
                x.len(),
                seed,
                Arc::new(move |w_a: f64, w_v: &[f64]| {
                    let mut u = a_query.mul_vec(w_v);
                    for (ui, ri) in u.iter_mut().zip(&r) {
                        *ui += w_a * ri;
                    }
                    let u_norm = norm(&u);
                    if u_norm > 0.0 {
                        let y: Vec<f64> = u.iter().map(|ui| ui / u_norm).collect();
                        HypoElement::new(dot(&y, &r) - r_norm, a_query.mul_transpose_vec(&y))
                    } else {
                        HypoElement::new(-r_norm, vec![0.0; w_v.len()])
                    }
                }),
            )
        }),
        HypoMeta::exact_consistent(1.0, k),
    ))
}

/// λ_max on l×l symmetric matrices, vectorized in scaled upper-triangular
/// form (off-diagonals ×√2) so the Euclidean inner product of coordinates
/// equals trace(AB). Support queries diagonalize w_a·A + mat(W_v) and
/// return the top eigenvector direction.
///
/// The represented set is the graph over the trace-one density matrices
/// co{uuᵀ : ‖u‖ = 1} = ∂λ_max(0); the unit sphere, not the unit ball,
/// parametrizes it — a ball cutoff at nonpositive eigenvalues would
/// misreport the support of negative-definite query matrices and break
/// consistency.
///
/// # Panics
///
/// The oracles panic if the Jacobi eigensolver fails to converge, which
/// cannot happen for finite symmetric input at supported sizes.
pub fn atom_max_eigenvalue(l: usize) -> Result<HypoFunction> {
    if l == 0 {
        return Err(Error::Empty("matrix order"));
    }
    let dim = sym_vec_dim(l);
    Ok(HypoFunction::new(
        dim,
        Arc::new(move |x: &[f64]| {
            let a = vec_to_sym(x, l);
            max_eigenpair(&a).expect("jacobi eigensolver convergence").0
        }),
        Arc::new(move |x: &[f64]| {
            let a = vec_to_sym(x, l);
            let (lambda_max, top) = max_eigenpair(&a).expect("jacobi eigensolver convergence");
            let seed = {
                let vv = rank_one(&top);
                HypoElement::new(0.0, sym_to_vec(&vv))
            };
            let a_inner = a.clone();
            Hypodifferential::oracle(
                sym_vec_dim(l),
                seed,
                Arc::new(move |w_a: f64, w_v: &[f64]| {
                    let wm = vec_to_sym(w_v, l);
                    let mut m = Matrix::zeros(l, l);
                    for i in 0..l {
                        for j in 0..l {
                            m.set(i, j, w_a * a_inner.get(i, j) + wm.get(i, j));
                        }
                    }
                    let (_, u) = max_eigenpair(&m).expect("jacobi eigensolver convergence");
                    let au = a_inner.mul_vec(&u);
                    HypoElement::new(dot(&u, &au) - lambda_max, sym_to_vec(&rank_one(&u)))
                }),
            )
        }),
        HypoMeta::exact_consistent(1.0, 2.0),
    ))
}

fn rank_one(u: &[f64]) -> Matrix {
    let l = u.len();
    let mut m = Matrix::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            m.set(i, j, u[i] * u[j]);
        }
    }
    m
}

/// Distance to the nonnegative orthant, dist(x, ℝ^d₊) = ‖min(x, 0)‖, as a
/// support oracle over {(⟨x*, x⟩ − dist, x*) : x* ≤ 0, ‖x*‖ ≤ 1}.
pub fn atom_dist_orthant(d: usize) -> Result<HypoFunction> {
    if d == 0 {
        return Err(Error::Empty("orthant dimension"));
    }
    let dist = |x: &[f64]| -> f64 { x.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt() };
    Ok(HypoFunction::new(
        d,
        Arc::new(move |x: &[f64]| dist(x)),
        Arc::new(move |x: &[f64]| {
            let dist_x = dist(x);
            let x_cap = x.to_vec();
            let seed = if dist_x > 0.0 {
                let xs: Vec<f64> = x.iter().map(|v| v.min(0.0) / dist_x).collect();
                HypoElement::new(0.0, xs)
            } else {
                HypoElement::new(0.0, vec![0.0; x.len()])
            };
            Hypodifferential::oracle(
                x_cap.len(),
                seed,
                Arc::new(move |w_a: f64, w_v: &[f64]| {
                    // maximize ⟨x*, c⟩ over {x* ≤ 0, ‖x*‖ ≤ 1} with c = w_a x + w_v
                    let c: Vec<f64> = x_cap
                        .iter()
                        .zip(w_v)
                        .map(|(xi, wi)| w_a * xi + wi)
                        .collect();
                    let c_minus: Vec<f64> = c.iter().map(|v| v.min(0.0)).collect();
                    let n = norm(&c_minus);
                    if n > 0.0 {
                        let xs: Vec<f64> = c_minus.iter().map(|v| v / n).collect();
                        HypoElement::new(dot(&xs, &x_cap) - dist_x, xs)
                    } else {
                        HypoElement::new(-dist_x, vec![0.0; x_cap.len()])
                    }
                }),
            )
        }),
        HypoMeta::exact_consistent(1.0, 2.0),
    ))
}

/// Smooth quadratic ½ xᵀQx + cᵀx + r with Q symmetric PSD; the singleton
/// hypodifferential {(0, Qx + c)} is consistent (not exact) with
/// Lipschitzian-approximation constant ‖Q‖.
pub fn atom_quadratic(q: &[Vec<f64>], c: &[f64], r: f64) -> Result<HypoFunction> {
    let qm = Matrix::from_rows(q)?;
    let d = qm.rows();
    if qm.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: qm.cols(),
        });
    }
    if c.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: c.len(),
        });
    }
    let scale = 1.0 + (0..d).map(|i| qm.get(i, i).abs()).fold(0.0, f64::max);
    if !qm.is_symmetric(1e-10 * scale) {
        return Err(Error::NotPsd {
            violation: f64::NAN,
        });
    }
    let (eig, _) = crate::linalg::jacobi_eigh(&qm)?;
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * scale {
        return Err(Error::NotPsd {
            violation: -min_eig,
        });
    }
    let lip = eig.iter().cloned().fold(0.0_f64, f64::max).max(0.0);

    let q_val = qm.clone();
    let q_hypo = qm;
    let c_val = c.to_vec();
    let c_hypo = c.to_vec();
    Ok(HypoFunction::new(
        d,
        Arc::new(move |x: &[f64]| 0.5 * dot(x, &q_val.mul_vec(x)) + dot(&c_val, x) + r),
        Arc::new(move |x: &[f64]| {
            let mut g = q_hypo.mul_vec(x);
            for (gi, ci) in g.iter_mut().zip(&c_hypo) {
                *gi += ci;
            }
            Hypodifferential::polytope(vec![HypoElement::new(0.0, g)])
                .expect("singleton gradient element")
        }),
        HypoMeta {
            consistent: true,
            exact: false,
            lip_approx_l: Some(lip),
            lip_map_k: Some(lip),
            bound_c: None,
        },
    ))
}

/// A finite pool of points with function values and subgradients, used by
/// the constructive bundle hypodifferential. Growing a bundle produces a
/// new value.
#[derive(Debug, Clone)]
pub struct Bundle {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    subgradients: Vec<Vec<f64>>,
    dim: usize,
}

impl Bundle {
    /// Validates the subgradient inequality
    /// f(x_k) − f(x_j) ≥ ⟨g_j, x_k − x_j⟩ − 1e-9 on all stored pairs.
    pub fn new(
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        subgradients: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("bundle"));
        }
        if points.len() != values.len() || points.len() != subgradients.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: values.len().min(subgradients.len()),
            });
        }
        let dim = points[0].len();
        for (p, g) in points.iter().zip(&subgradients) {
            if p.len() != dim || g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len().max(g.len()),
                });
            }
        }
        let bundle = Bundle {
            points,
            values,
            subgradients,
            dim,
        };
        for j in 0..bundle.len() {
            for k in 0..bundle.len() {
                let lhs = bundle.values[k] - bundle.values[j];
                let rhs = dot(
                    &bundle.subgradients[j],
                    &crate::linalg::sub(&bundle.points[k], &bundle.points[j]),
                );
                if lhs < rhs - 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "bundle entry {j} violates the subgradient inequality against entry {k} \
                         by {:.3e}",
                        rhs - lhs
                    )));
                }
            }
        }
        Ok(bundle)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// New bundle with one more point.
    pub fn with_entry(&self, point: Vec<f64>, value: f64, subgradient: Vec<f64>) -> Result<Self> {
        let mut points = self.points.clone();
        let mut values = self.values.clone();
        let mut subgradients = self.subgradients.clone();
        points.push(point);
        values.push(value);
        subgradients.push(subgradient);
        Bundle::new(points, values, subgradients)
    }

    fn contains_point(&self, y: &[f64]) -> bool {
        self.points
            .iter()
            .any(|p| p.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-14))
    }

    /// Hypodifferential at y restricted to the stored bundle:
    /// co{(f(x_j) − f(y) + ⟨g_j, y − x_j⟩, g_j)}. The bundle must contain
    /// y itself, which guarantees an element with offset zero.
    pub fn hypodiff_at(&self, f_y: f64, y: &[f64]) -> Result<Hypodifferential> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        if !self.contains_point(y) {
            return Err(Error::Normalization(
                "bundle has no entry at the query point, so no element attains offset zero; \
                 append the query point with its own subgradient first"
                    .into(),
            ));
        }
        let verts = self
            .points
            .iter()
            .zip(&self.values)
            .zip(&self.subgradients)
            .map(|((xj, fj), gj)| {
                let shift = fj - f_y + dot(gj, &crate::linalg::sub(y, xj));
                HypoElement::new(shift, gj.clone())
            })
            .collect();
        Hypodifferential::polytope_clamped(verts)
    }
}

/// Constructive bundle hypodifferential: consistent by the subgradient
/// inequality, exact only in the limit of a dense bundle (flagged not
/// exact). The query point is appended automatically using the supplied
/// value and subgradient oracles.
pub fn bundle_hypodiff(
    bundle: Bundle,
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    subgradient: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
) -> HypoFunction {
    let dim = bundle.dim();
    let value_hypo = Arc::clone(&value);
    HypoFunction::new(
        dim,
        Arc::clone(&value),
        Arc::new(move |y: &[f64]| {
            let f_y = value_hypo(y);
            let local = if bundle.contains_point(y) {
                bundle.clone()
            } else {
                bundle
                    .with_entry(y.to_vec(), f_y, subgradient(y))
                    .unwrap_or_else(|e| panic!("bundle extension at the query point: {e}"))
            };
            local
                .hypodiff_at(f_y, y)
                .expect("query point present by construction")
        }),
        HypoMeta {
            consistent: true,
            exact: false,
            lip_approx_l: None,
            lip_map_k: None,
            bound_c: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_vertex(h: &Hypodifferential, a: f64, v: &[f64]) {
        let verts = h.vertices().expect("polytope representation");
        assert!(
            verts.iter().any(|e| (e.a - a).abs() < 1e-12
                && e.v.iter().zip(v).all(|(x, y)| (x - y).abs() < 1e-12)),
            "vertex ({a}, {v:?}) not found in {verts:?}"
        );
    }

    #[test]
    fn abs_vertices() {
        let f = atom_abs();
        let h = f.hypodifferential(&[1.0]);
        assert_vertex(&h, 0.0, &[1.0]);
        assert_vertex(&h, -2.0, &[-1.0]);
        let h0 = f.hypodifferential(&[0.0]);
        assert_vertex(&h0, 0.0, &[1.0]);
        assert_vertex(&h0, 0.0, &[-1.0]);
        let hm = f.hypodifferential(&[-2.0]);
        assert_vertex(&hm, -4.0, &[1.0]);
        assert_vertex(&hm, 0.0, &[-1.0]);
    }

    #[test]
    fn polyhedral_two_pieces() {
        let spec = PolyhedralSpec::new(vec![0.0, 0.0], vec![vec![1.0], vec![-2.0]]).unwrap();
        let f = atom_polyhedral(&spec);
        assert!((f.value(&[1.0]) - 1.0).abs() < 1e-15);
        let h = f.hypodifferential(&[1.0]);
        assert_vertex(&h, 0.0, &[1.0]);
        assert_vertex(&h, -3.0, &[-2.0]);
        assert!((f.meta().lip_map_k.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn polyhedral_matches_abs() {
        let spec = PolyhedralSpec::new(vec![0.0, 0.0], vec![vec![1.0], vec![-1.0]]).unwrap();
        let f = atom_polyhedral(&spec);
        let g = atom_abs();
        for x in [-2.0, -0.3, 0.0, 0.7, 1.0] {
            let hf = f.hypodifferential(&[x]);
            for e in g.hypodifferential(&[x]).vertices().unwrap() {
                assert_vertex(&hf, e.a, &e.v);
            }
        }
    }

    #[test]
    fn polyhedral_single_affine_piece() {
        let spec = PolyhedralSpec::new(vec![0.0], vec![vec![1.0, -2.0]]).unwrap();
        let f = atom_polyhedral(&spec);
        let h = f.hypodifferential(&[3.0, 1.0]);
        assert_eq!(h.vertices().unwrap().len(), 1);
        assert_vertex(&h, 0.0, &[1.0, -2.0]);
        assert!(f.meta().exact);
    }

    #[test]
    fn sublinear_square_corners() {
        let f = atom_sublinear(vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        assert!((f.value(&[1.0, 0.0]) - 1.0).abs() < 1e-15);
        let h = f.hypodifferential(&[1.0, 0.0]);
        let mut offsets: Vec<f64> = h.vertices().unwrap().iter().map(|e| e.a).collect();
        offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(offsets, vec![-2.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn norm_affine_matches_abs_in_one_dim() {
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let f = atom_norm_affine(&a, &[0.0]).unwrap();
        let h = f.hypodifferential(&[1.0]);
        let e1 = h.support(1.0, &[0.0]).unwrap();
        assert!((e1.a - 0.0).abs() < 1e-14 && (e1.v[0] - 1.0).abs() < 1e-14);
        let e2 = h.support(0.0, &[-1.0]).unwrap();
        assert!((e2.a + 2.0).abs() < 1e-14 && (e2.v[0] + 1.0).abs() < 1e-14);
        for d in [-1.0, 0.0, 0.5, 2.0] {
            let expected = atom_abs()
                .hypodifferential(&[1.0])
                .model_value(&[d])
                .unwrap();
            assert!((h.model_value(&[d]).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_affine_at_kink() {
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let f = atom_norm_affine(&a, &[0.0]).unwrap();
        let h = f.hypodifferential(&[0.0]);
        let e = h.support(1.0, &[0.0]).unwrap();
        assert_eq!(e.a, 0.0);
        // model toward d equals ‖A d‖ at the kink
        for d in [-2.0, 0.3, 1.0] {
            assert!((h.model_value(&[d]).unwrap() - d.abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn norm_affine_two_dim_support() {
        let a = Matrix::identity(2);
        let f = atom_norm_affine(&a, &[0.0, 0.0]).unwrap();
        let h = f.hypodifferential(&[1.0, 0.0]);
        let e = h.support(0.0, &[0.0, 1.0]).unwrap();
        assert!((e.a + 1.0).abs() < 1e-14);
        assert!((e.v[0]).abs() < 1e-14 && (e.v[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn max_eigenvalue_examples() {
        let f = atom_max_eigenvalue(2).unwrap();
        let a = sym_to_vec(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        assert!((f.value(&a) - 1.0).abs() < 1e-12);
        let h = f.hypodifferential(&a);
        let e = h.support(0.0, &a).unwrap();
        assert!(e.a.abs() < 1e-12);
        let e1e1 = sym_to_vec(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        for (x, y) in e.v.iter().zip(&e1e1) {
            assert!((x - y).abs() < 1e-10);
        }

        let zero = sym_to_vec(&Matrix::zeros(2, 2));
        assert_eq!(f.value(&zero), 0.0);
        let hz = f.hypodifferential(&zero);
        let ez = hz.support(1.0, &zero).unwrap();
        assert!(ez.a.abs() < 1e-14);

        // exactness toward Δ = diag(0, −4) from A = diag(1, 3)
        let a13 = sym_to_vec(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap());
        let delta = sym_to_vec(&Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, -4.0]]).unwrap());
        let model = f.hypodifferential(&a13).model_value(&delta).unwrap();
        assert!((model + 2.0).abs() < 1e-10);

        // exactness must survive negative-definite displacements: from
        // A = diag(−2, −3) toward A + Δ = diag(−3, −3) the model is −1
        let neg = sym_to_vec(&Matrix::from_rows(&[vec![-2.0, 0.0], vec![0.0, -3.0]]).unwrap());
        let delta_neg = sym_to_vec(&Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        let model_neg = f.hypodifferential(&neg).model_value(&delta_neg).unwrap();
        assert!((model_neg + 1.0).abs() < 1e-10);
    }

    #[test]
    fn dist_orthant_examples() {
        let f = atom_dist_orthant(2).unwrap();
        assert!((f.value(&[-1.0, 1.0]) - 1.0).abs() < 1e-15);
        let h = f.hypodifferential(&[-1.0, 1.0]);
        let e = h.support(0.0, &[-1.0, 0.0]).unwrap();
        assert!(e.a.abs() < 1e-14);
        assert!((e.v[0] + 1.0).abs() < 1e-14 && e.v[1].abs() < 1e-14);

        // inside the cone the zero element certifies global optimality
        let h_in = f.hypodifferential(&[0.5, 2.0]);
        let e_in = h_in.support(1.0, &[0.0, 0.0]).unwrap();
        assert_eq!(e_in.a, 0.0);
        assert!(norm(&e_in.v) < 1e-14);

        let h2 = f.hypodifferential(&[-3.0, -4.0]);
        assert!((f.value(&[-3.0, -4.0]) - 5.0).abs() < 1e-15);
        let e2 = h2.support(0.0, &[-0.6, -0.8]).unwrap();
        assert!(e2.a.abs() < 1e-12);
    }

    #[test]
    fn quadratic_gradient_singleton() {
        let f = atom_quadratic(&[vec![2.0]], &[0.0], 0.0).unwrap();
        let h = f.hypodifferential(&[1.0]);
        assert_vertex(&h, 0.0, &[2.0]);
        assert!((f.meta().lip_approx_l.unwrap() - 2.0).abs() < 1e-12);
        // LipApprox residual is exactly (L/2)(y−x)² for f = x²
        for y in [-1.0, 0.0, 3.0] {
            let model = h.model_value(&[y - 1.0]).unwrap();
            let resid = (f.value(&[y]) - f.value(&[1.0]) - model).abs();
            assert!((resid - (y - 1.0) * (y - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_constant_and_linear() {
        let c = atom_quadratic(&[vec![0.0]], &[0.0], 5.0).unwrap();
        let h = c.hypodifferential(&[7.0]);
        assert_vertex(&h, 0.0, &[0.0]);
        let lin = atom_quadratic(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[1.0, -1.0], 0.0).unwrap();
        // affine functions are reproduced exactly by the gradient model
        for (x, y) in [([0.0, 0.0], [2.0, 1.0]), ([1.0, 1.0], [-1.0, 3.0])] {
            let model = lin
                .hypodifferential(&x)
                .model_value(&[y[0] - x[0], y[1] - x[1]])
                .unwrap();
            assert!((lin.value(&y) - lin.value(&x) - model).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_rejects_indefinite() {
        assert!(matches!(
            atom_quadratic(&[vec![1.0, 0.0], vec![0.0, -1.0]], &[0.0, 0.0], 0.0),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn bundle_reconstructs_abs_hypodiff() {
        let bundle = Bundle::new(
            vec![vec![1.0], vec![-0.5]],
            vec![1.0, 0.5],
            vec![vec![1.0], vec![-1.0]],
        )
        .unwrap();
        let h = bundle.hypodiff_at(1.0, &[1.0]).unwrap();
        assert_vertex(&h, 0.0, &[1.0]);
        assert_vertex(&h, -2.0, &[-1.0]);
    }

    #[test]
    fn bundle_single_point_is_subgradient_model() {
        let bundle = Bundle::new(vec![vec![1.0]], vec![1.0], vec![vec![1.0]]).unwrap();
        let h = bundle.hypodiff_at(1.0, &[1.0]).unwrap();
        assert_eq!(h.vertices().unwrap().len(), 1);
        assert_vertex(&h, 0.0, &[1.0]);
    }

    #[test]
    fn bundle_quadratic_example() {
        // x² with bundle points {0, 1} queried at 1
        let bundle = Bundle::new(
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 1.0],
            vec![vec![0.0], vec![2.0]],
        )
        .unwrap();
        let h = bundle.hypodiff_at(1.0, &[1.0]).unwrap();
        assert_vertex(&h, 0.0, &[2.0]);
        assert_vertex(&h, -1.0, &[0.0]);
    }

    #[test]
    fn bundle_missing_query_point_errors() {
        let bundle = Bundle::new(vec![vec![0.0]], vec![0.0], vec![vec![0.0]]).unwrap();
        assert!(matches!(
            bundle.hypodiff_at(1.0, &[1.0]),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn bundle_rejects_invalid_subgradient() {
        // slope 5 at x = 0 is not a subgradient of x² against x = 1
        assert!(Bundle::new(
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 1.0],
            vec![vec![5.0], vec![2.0]],
        )
        .is_err());
    }

    #[test]
    fn bundle_function_auto_appends() {
        let f = bundle_hypodiff(
            Bundle::new(vec![vec![-0.5]], vec![0.5], vec![vec![-1.0]]).unwrap(),
            Arc::new(|x: &[f64]| x[0].abs()),
            Arc::new(|x: &[f64]| vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]),
        );
        let h = f.hypodifferential(&[1.0]);
        assert_vertex(&h, 0.0, &[1.0]);
        assert_vertex(&h, -2.0, &[-1.0]);
        assert!(h.validate().valid);
    }
}
