//! Combinators producing new hypodifferentiable functions from old ones:
//! conic combinations, finite maxima, affine precomposition, outer
//! composition with a smooth nondecreasing convex function, and positive
//! powers. Each combinator propagates consistency, exactness and the
//! Lipschitz constants of its inputs where they are derivable; absent
//! metadata stays absent.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hypo::{HypoElement, HypoFunction, HypoMeta, HypoRep, Hypodifferential};
use crate::linalg::{dot, spectral_norm, Matrix};

/// Hard cap on explicit vertex counts produced by Minkowski sums.
pub const VERTEX_CAP: usize = 4096;

/// Contribution of a function to a Lipschitzian-approximation constant:
/// exact maps have zero model error, so they contribute nothing.
fn lip_contribution(f: &HypoFunction) -> Option<f64> {
    if f.meta().exact {
        Some(0.0)
    } else {
        f.meta().lip_approx_l
    }
}

/// A stored constant for results that end up exact: any positive constant
/// is valid, one is the conventional choice.
const EXACT_LIP: f64 = 1.0;

fn sum_options(parts: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Some(total)
}

/// Minkowski sum of scaled element lists; errors out beyond the vertex cap.
fn minkowski_scaled(parts: &[(f64, Vec<HypoElement>)], dim: usize) -> Result<Vec<HypoElement>> {
    let mut needed: usize = 1;
    for (_, verts) in parts {
        needed = needed.saturating_mul(verts.len());
        if needed > VERTEX_CAP {
            return Err(Error::VertexCapExceeded {
                cap: VERTEX_CAP,
                needed,
            });
        }
    }
    let mut acc = vec![HypoElement::new(0.0, vec![0.0; dim])];
    for (scale, verts) in parts {
        let mut next = Vec::with_capacity(acc.len() * verts.len());
        for base in &acc {
            for e in verts {
                let mut v = base.v.clone();
                for (vi, ei) in v.iter_mut().zip(&e.v) {
                    *vi += scale * ei;
                }
                next.push(HypoElement::new(base.a + scale * e.a, v));
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Scaled-sum hypodifferential at one point: Σ cᵢ · d̲fᵢ(x) with cᵢ ≥ 0.
/// Polytope inputs combine by Minkowski sums; if any input is an oracle,
/// the result is an oracle whose support query sums the scaled part
/// queries.
fn scaled_sum_hypodiff(
    parts: Vec<(f64, Hypodifferential)>,
    dim: usize,
) -> Result<Hypodifferential> {
    let all_polytopes = parts.iter().all(|(_, h)| h.is_polytope());
    if all_polytopes {
        let lists: Vec<(f64, Vec<HypoElement>)> = parts
            .into_iter()
            .map(|(c, h)| match h.rep() {
                HypoRep::Polytope(v) => (c, v.clone()),
                HypoRep::Oracle(_) => unreachable!(),
            })
            .collect();
        Hypodifferential::polytope(minkowski_scaled(&lists, dim)?)
    } else {
        let parts = Arc::new(parts);
        let seed = {
            let mut a = 0.0;
            let mut v = vec![0.0; dim];
            for (c, h) in parts.iter() {
                let e = match h.rep() {
                    HypoRep::Oracle(o) => o.seed().clone(),
                    HypoRep::Polytope(verts) => verts[0].clone(),
                };
                a += c * e.a;
                for (vi, ei) in v.iter_mut().zip(&e.v) {
                    *vi += c * ei;
                }
            }
            HypoElement::new(a, v)
        };
        let query_parts = Arc::clone(&parts);
        Ok(Hypodifferential::oracle(
            dim,
            seed,
            Arc::new(move |w_a: f64, w_v: &[f64]| {
                let mut a = 0.0;
                let mut v = vec![0.0; w_v.len()];
                for (c, h) in query_parts.iter() {
                    let e = h
                        .support(w_a, w_v)
                        .expect("dimension checked on construction");
                    a += c * e.a;
                    for (vi, ei) in v.iter_mut().zip(&e.v) {
                        *vi += c * ei;
                    }
                }
                HypoElement::new(a, v)
            }),
        ))
    }
}

fn check_equal_dims(fs: &[HypoFunction]) -> Result<usize> {
    let dim = fs.first().ok_or(Error::Empty("function list"))?.dim();
    for f in fs {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
    }
    Ok(dim)
}

/// f = Σ λᵢ fᵢ with λᵢ ≥ 0; the hypodifferential is the Minkowski sum of
/// the scaled part hypodifferentials.
pub fn conic_combination(fs: &[HypoFunction], lambdas: &[f64]) -> Result<HypoFunction> {
    let dim = check_equal_dims(fs)?;
    if fs.len() != lambdas.len() {
        return Err(Error::DimensionMismatch {
            expected: fs.len(),
            got: lambdas.len(),
        });
    }
    for &l in lambdas {
        if !(l >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "conic coefficient must be ≥ 0, got {l}"
            )));
        }
    }
    // zero-weight terms contribute the singleton {0} and are dropped
    let active: Vec<(f64, HypoFunction)> = fs
        .iter()
        .zip(lambdas)
        .filter(|(_, &l)| l > 0.0)
        .map(|(f, &l)| (l, f.clone()))
        .collect();
    if active.is_empty() {
        return Ok(constant_zero(dim));
    }

    let consistent = active.iter().all(|(_, f)| f.meta().consistent);
    let exact = active.iter().all(|(_, f)| f.meta().exact);
    let lip_approx_l = if exact {
        Some(EXACT_LIP)
    } else {
        sum_options(
            active
                .iter()
                .map(|(l, f)| lip_contribution(f).map(|c| l * c)),
        )
    };
    let lip_map_k = sum_options(
        active
            .iter()
            .map(|(l, f)| f.meta().lip_map_k.map(|k| l * k)),
    );
    let bound_c = sum_options(active.iter().map(|(l, f)| f.meta().bound_c.map(|c| l * c)));

    let value_parts: Vec<(f64, HypoFunction)> = active.clone();
    let hypo_parts = active;
    let value =
        Arc::new(move |x: &[f64]| value_parts.iter().map(|(l, f)| l * f.value(x)).sum::<f64>());
    let hypo = Arc::new(move |x: &[f64]| {
        let parts: Vec<(f64, Hypodifferential)> = hypo_parts
            .iter()
            .map(|(l, f)| (*l, f.hypodifferential(x)))
            .collect();
        scaled_sum_hypodiff(parts, x.len()).unwrap_or_else(|e| panic!("conic combination: {e}"))
    });
    Ok(HypoFunction::new(
        dim,
        value,
        hypo,
        HypoMeta {
            consistent,
            exact,
            lip_approx_l,
            lip_map_k,
            bound_c,
        },
    ))
}

fn constant_zero(dim: usize) -> HypoFunction {
    HypoFunction::new(
        dim,
        Arc::new(|_| 0.0),
        Arc::new(move |x: &[f64]| {
            Hypodifferential::polytope(vec![HypoElement::new(0.0, vec![0.0; x.len()])])
                .expect("singleton zero element")
        }),
        HypoMeta {
            consistent: true,
            exact: true,
            lip_approx_l: Some(EXACT_LIP),
            lip_map_k: Some(0.0),
            bound_c: Some(0.0),
        },
    )
}

/// f = maxᵢ fᵢ; the hypodifferential at x is the convex hull of the part
/// hypodifferentials translated by (fᵢ(x) − f(x), 0).
pub fn finite_max(fs: &[HypoFunction]) -> Result<HypoFunction> {
    let dim = check_equal_dims(fs)?;
    let parts: Vec<HypoFunction> = fs.to_vec();

    let consistent = parts.iter().all(|f| f.meta().consistent);
    let exact = parts.iter().all(|f| f.meta().exact);
    let lip_approx_l = if exact {
        Some(EXACT_LIP)
    } else {
        parts
            .iter()
            .map(lip_contribution)
            .try_fold(0.0_f64, |acc, l| l.map(|l| acc.max(l)))
    };
    // map constant 2·max(function Lipschitz) + max Kᵢ; the element bound C
    // dominates the slope norms and hence the function Lipschitz constant
    let lip_map_k = {
        let func_lip = parts
            .iter()
            .map(|f| f.meta().bound_c)
            .try_fold(0.0_f64, |acc, c| c.map(|c| acc.max(c)));
        let max_k = parts
            .iter()
            .map(|f| f.meta().lip_map_k)
            .try_fold(0.0_f64, |acc, k| k.map(|k| acc.max(k)));
        match (func_lip, max_k) {
            (Some(l), Some(k)) => Some(2.0 * l + k),
            _ => None,
        }
    };

    let value_parts = parts.clone();
    let hypo_parts = parts;
    let value = Arc::new(move |x: &[f64]| {
        value_parts
            .iter()
            .map(|f| f.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let hypo = Arc::new(move |x: &[f64]| {
        let values: Vec<f64> = hypo_parts.iter().map(|f| f.value(x)).collect();
        let fmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hypos: Vec<Hypodifferential> =
            hypo_parts.iter().map(|f| f.hypodifferential(x)).collect();
        if hypos.iter().all(Hypodifferential::is_polytope) {
            let mut verts = Vec::new();
            for (fi, h) in values.iter().zip(&hypos) {
                let shift = fi - fmax;
                for e in h.vertices().expect("polytope") {
                    verts.push(HypoElement::new(e.a + shift, e.v.clone()));
                }
            }
            Hypodifferential::polytope(verts).expect("nonempty vertex union")
        } else {
            let dim = x.len();
            let shifts: Vec<f64> = values.iter().map(|fi| fi - fmax).collect();
            let seed = {
                let e = match hypos[0].rep() {
                    HypoRep::Oracle(o) => o.seed().clone(),
                    HypoRep::Polytope(v) => v[0].clone(),
                };
                HypoElement::new(e.a + shifts[0], e.v)
            };
            let pairs: Arc<Vec<(f64, Hypodifferential)>> =
                Arc::new(shifts.into_iter().zip(hypos).collect());
            Hypodifferential::oracle(
                dim,
                seed,
                Arc::new(move |w_a: f64, w_v: &[f64]| {
                    let mut best: Option<(f64, HypoElement)> = None;
                    for (shift, h) in pairs.iter() {
                        let e = h.support(w_a, w_v).expect("dimension checked");
                        let shifted = HypoElement::new(e.a + shift, e.v);
                        let score = w_a * shifted.a + dot(w_v, &shifted.v);
                        if best.as_ref().is_none_or(|(s, _)| score > *s) {
                            best = Some((score, shifted));
                        }
                    }
                    best.expect("nonempty part list").1
                }),
            )
        }
    });
    Ok(HypoFunction::new(
        dim,
        value,
        hypo,
        HypoMeta {
            consistent,
            exact,
            lip_approx_l,
            lip_map_k,
            bound_c: None,
        },
    ))
}

/// g(y) = f(Ay + b) for a d×m matrix A and shift b ∈ ℝ^d; each element
/// (a, v) maps to (a, Aᵀv).
pub fn affine_precompose(f: &HypoFunction, a: &Matrix, b: &[f64]) -> Result<HypoFunction> {
    if a.rows() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: a.rows(),
        });
    }
    if b.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: b.len(),
        });
    }
    let new_dim = a.cols();
    let op_norm = spectral_norm(a);
    let meta = HypoMeta {
        consistent: f.meta().consistent,
        exact: f.meta().exact,
        // the quadratic remainder transforms with ‖A‖²
        lip_approx_l: if f.meta().exact {
            Some(EXACT_LIP)
        } else {
            f.meta().lip_approx_l.map(|l| l * op_norm * op_norm)
        },
        lip_map_k: f.meta().lip_map_k.map(|k| k * op_norm),
        bound_c: f.meta().bound_c.map(|c| c * op_norm.max(1.0)),
    };

    let inner_value = f.clone();
    let inner_hypo = f.clone();
    let a_val = a.clone();
    let a_hypo = a.clone();
    let b_val = b.to_vec();
    let b_hypo = b.to_vec();
    let value = Arc::new(move |y: &[f64]| {
        let mut x = a_val.mul_vec(y);
        for (xi, bi) in x.iter_mut().zip(&b_val) {
            *xi += bi;
        }
        inner_value.value(&x)
    });
    let hypo = Arc::new(move |y: &[f64]| {
        let mut x = a_hypo.mul_vec(y);
        for (xi, bi) in x.iter_mut().zip(&b_hypo) {
            *xi += bi;
        }
        let h = inner_hypo.hypodifferential(&x);
        match h.rep() {
            HypoRep::Polytope(verts) => Hypodifferential::polytope(
                verts
                    .iter()
                    .map(|e| HypoElement::new(e.a, a_hypo.mul_transpose_vec(&e.v)))
                    .collect(),
            )
            .expect("nonempty vertex list"),
            HypoRep::Oracle(oracle) => {
                let seed = {
                    let s = oracle.seed();
                    HypoElement::new(s.a, a_hypo.mul_transpose_vec(&s.v))
                };
                let a_inner = a_hypo.clone();
                let h_inner = h.clone();
                Hypodifferential::oracle(
                    y.len(),
                    seed,
                    Arc::new(move |w_a: f64, w_v: &[f64]| {
                        // ⟨w_v, Aᵀv⟩ = ⟨A w_v, v⟩
                        let lifted = a_inner.mul_vec(w_v);
                        let e = h_inner.support(w_a, &lifted).expect("dimension checked");
                        HypoElement::new(e.a, a_inner.mul_transpose_vec(&e.v))
                    }),
                )
            }
        }
    });
    Ok(HypoFunction::new(new_dim, value, hypo, meta))
}

/// A smooth nondecreasing convex outer function g: ℝⁿ → ℝ with its
/// gradient; `lip_grad` bounds the Lipschitz constant of ∇g and
/// `grad_bound` bounds ‖∇g(f(x))‖ on the working set, both optional.
#[derive(Clone)]
pub struct SmoothOuter {
    pub arity: usize,
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    pub lip_grad: Option<f64>,
    pub grad_bound: Option<f64>,
}

impl SmoothOuter {
    pub fn new(
        arity: usize,
        value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        lip_grad: Option<f64>,
        grad_bound: Option<f64>,
    ) -> Self {
        SmoothOuter {
            arity,
            value,
            grad,
            lip_grad,
            grad_bound,
        }
    }

    /// g(y) = y₁ + … + yₙ.
    pub fn sum(arity: usize) -> Self {
        SmoothOuter {
            arity,
            value: Arc::new(|y: &[f64]| y.iter().sum()),
            grad: Arc::new(|y: &[f64]| vec![1.0; y.len()]),
            lip_grad: Some(0.0),
            grad_bound: Some((arity as f64).sqrt()),
        }
    }

    /// g(y) = exp(y). No global gradient bound; supply one through
    /// `grad_bound` when the composed function is confined to a known box.
    pub fn exp() -> Self {
        SmoothOuter {
            arity: 1,
            value: Arc::new(|y: &[f64]| y[0].exp()),
            grad: Arc::new(|y: &[f64]| vec![y[0].exp()]),
            lip_grad: None,
            grad_bound: None,
        }
    }

    pub fn with_bounds(mut self, lip_grad: Option<f64>, grad_bound: Option<f64>) -> Self {
        self.lip_grad = lip_grad;
        self.grad_bound = grad_bound;
        self
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        (self.value)(y)
    }

    pub fn grad(&self, y: &[f64]) -> Vec<f64> {
        (self.grad)(y)
    }
}

/// h = g(f₁, …, fₙ) for nondecreasing convex differentiable g; the
/// hypodifferential is the Minkowski sum Σ ∂g/∂yᵢ · d̲fᵢ.
///
/// # Panics
///
/// The returned function's hypodifferential oracle panics if a negative
/// partial derivative of g is ever encountered (monotonicity violation).
pub fn outer_compose(g: SmoothOuter, fs: &[HypoFunction]) -> Result<HypoFunction> {
    let dim = check_equal_dims(fs)?;
    if g.arity != fs.len() {
        return Err(Error::DimensionMismatch {
            expected: g.arity,
            got: fs.len(),
        });
    }
    let parts: Vec<HypoFunction> = fs.to_vec();
    let consistent = parts.iter().all(|f| f.meta().consistent);
    // L = C·ΣLᵢ + 2·L_g·(Σ function-Lipschitz)², with bound_c dominating
    // the function Lipschitz constants
    let lip_approx_l = match (g.grad_bound, g.lip_grad) {
        (Some(c), Some(lg)) => {
            let sum_l = sum_options(parts.iter().map(lip_contribution));
            let quad = if lg == 0.0 {
                Some(0.0)
            } else {
                sum_options(parts.iter().map(|f| f.meta().bound_c)).map(|s| 2.0 * lg * s * s)
            };
            match (sum_l, quad) {
                (Some(sl), Some(q)) => Some(c * sl + q),
                _ => None,
            }
        }
        _ => None,
    };
    let lip_map_k = match (g.grad_bound, g.lip_grad) {
        (Some(c), Some(lg)) => {
            let sum_k = sum_options(parts.iter().map(|f| f.meta().lip_map_k));
            let sum_c = if lg == 0.0 {
                Some(0.0)
            } else {
                sum_options(parts.iter().map(|f| f.meta().bound_c))
            };
            match (sum_k, sum_c) {
                (Some(sk), Some(sc)) => Some(c * sk + lg * sc),
                _ => None,
            }
        }
        _ => None,
    };
    let bound_c = match g.grad_bound {
        Some(c) => sum_options(parts.iter().map(|f| f.meta().bound_c)).map(|s| c * s),
        None => None,
    };

    let g_value = g.clone();
    let g_hypo = g;
    let value_parts = parts.clone();
    let hypo_parts = parts;
    let value = Arc::new(move |x: &[f64]| {
        let y: Vec<f64> = value_parts.iter().map(|f| f.value(x)).collect();
        g_value.value(&y)
    });
    let hypo = Arc::new(move |x: &[f64]| {
        let y: Vec<f64> = hypo_parts.iter().map(|f| f.value(x)).collect();
        let grad = g_hypo.grad(&y);
        for (i, &gi) in grad.iter().enumerate() {
            assert!(
                gi >= 0.0,
                "outer composition requires a nondecreasing outer function; \
                 ∂g/∂y_{i} = {gi:.3e} < 0"
            );
        }
        let scaled: Vec<(f64, Hypodifferential)> = hypo_parts
            .iter()
            .zip(&grad)
            .map(|(f, &gi)| (gi, f.hypodifferential(x)))
            .collect();
        scaled_sum_hypodiff(scaled, x.len()).unwrap_or_else(|e| panic!("outer composition: {e}"))
    });
    Ok(HypoFunction::new(
        dim,
        value,
        hypo,
        HypoMeta {
            consistent,
            exact: false,
            lip_approx_l,
            lip_map_k,
            bound_c,
        },
    ))
}

/// h = max{0, f}^p for p > 1, with hypodifferential
/// p · max{0, f(x)}^{p−1} · d̲f(x); on {f ≤ 0} the hypodifferential is
/// the singleton {(0, 0)}. The chain-rule factor p is included.
pub fn positive_power(f: &HypoFunction, p: f64) -> Result<HypoFunction> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "power must be > 1, got {p}"
        )));
    }
    let dim = f.dim();
    let consistent = f.meta().consistent;
    let inner_value = f.clone();
    let inner_hypo = f.clone();
    let value = Arc::new(move |x: &[f64]| inner_value.value(x).max(0.0).powf(p));
    let hypo = Arc::new(move |x: &[f64]| {
        let fx = inner_hypo.value(x);
        if fx <= 0.0 {
            return Hypodifferential::polytope(vec![HypoElement::new(0.0, vec![0.0; x.len()])])
                .expect("singleton zero element");
        }
        let scale = p * fx.powf(p - 1.0);
        let h = inner_hypo.hypodifferential(x);
        scaled_sum_hypodiff(vec![(scale, h)], x.len()).expect("single scaled part")
    });
    Ok(HypoFunction::new(
        dim,
        value,
        hypo,
        HypoMeta {
            consistent,
            exact: false,
            lip_approx_l: None,
            lip_map_k: None,
            bound_c: None,
        },
    ))
}
