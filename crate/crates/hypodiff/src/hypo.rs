//! Core hypodifferential representations and the max-affine model.
//!
//! A hypodifferential is a convex compact family of affine minorants of a
//! convex function, stored either as an explicit polytope of (offset, slope)
//! pairs or through a support oracle giving finite access to an infinite
//! family. Offsets are normalized so that the maximal offset over the
//! family is zero; that normalization is validated, never silently
//! repaired, because shifting offsets would destroy consistency.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::{all_finite, dot};

/// Offsets in [0, NORMALIZATION_EPS] may be clamped to zero by
/// [`Hypodifferential::polytope_clamped`]; anything larger is a math error.
pub const NORMALIZATION_EPS: f64 = 1e-9;

/// One affine minorant: offset `a` and slope `v`, so the minorant reads
/// y ↦ a + ⟨v, y − x⟩ at the base point x.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoElement {
    pub a: f64,
    pub v: Vec<f64>,
}

impl HypoElement {
    pub fn new(a: f64, v: Vec<f64>) -> Self {
        HypoElement { a, v }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Euclidean norm √(a² + ‖v‖²).
    pub fn norm(&self) -> f64 {
        (self.a * self.a + dot(&self.v, &self.v)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && all_finite(&self.v)
    }

    /// Flat coordinates (a, v₁, …, v_d).
    pub fn to_point(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(1 + self.v.len());
        p.push(self.a);
        p.extend_from_slice(&self.v);
        p
    }

    pub fn from_point(p: &[f64]) -> Self {
        HypoElement {
            a: p[0],
            v: p[1..].to_vec(),
        }
    }
}

type SupportFn = dyn Fn(f64, &[f64]) -> HypoElement + Send + Sync;

/// Finite access to a weak* compact family: `query(w_a, w_v)` with
/// w_a ≥ 0 returns an element maximizing w_a·a + ⟨w_v, v⟩ over the
/// represented set. Queries must be pure.
#[derive(Clone)]
pub struct SupportOracle {
    query: Arc<SupportFn>,
    seed: HypoElement,
}

impl SupportOracle {
    pub fn new(seed: HypoElement, query: Arc<SupportFn>) -> Self {
        SupportOracle { query, seed }
    }

    pub fn query(&self, w_a: f64, w_v: &[f64]) -> HypoElement {
        debug_assert!(w_a >= 0.0, "support query weight w_a must be nonnegative");
        (self.query)(w_a, w_v)
    }

    /// An element the set is known to contain even before any query.
    pub fn seed(&self) -> &HypoElement {
        &self.seed
    }
}

impl std::fmt::Debug for SupportOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SupportOracle")
            .field("seed", &self.seed)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum HypoRep {
    Polytope(Vec<HypoElement>),
    Oracle(SupportOracle),
}

/// A hypodifferential at a fixed point: a convex compact subset of
/// ℝ × ℝ^d with max a = 0 over the set.
#[derive(Debug, Clone)]
pub struct Hypodifferential {
    dim: usize,
    rep: HypoRep,
}

/// Outcome of [`Hypodifferential::validate`]: violations of the
/// normalization invariants with their magnitudes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// max over the set of the offset component (should be 0).
    pub max_a: f64,
}

impl Hypodifferential {
    /// Explicit polytope representation. Duplicate vertices (distance
    /// < 1e-14) are merged; offsets are checked for finiteness only —
    /// run [`validate`](Self::validate) for the normalization invariants.
    pub fn polytope(vertices: Vec<HypoElement>) -> Result<Self> {
        Self::polytope_impl(vertices, false)
    }

    /// Same as [`polytope`](Self::polytope), but offsets in
    /// [0, 1e-9] are clamped to exactly zero first.
    pub fn polytope_clamped(vertices: Vec<HypoElement>) -> Result<Self> {
        Self::polytope_impl(vertices, true)
    }

    fn polytope_impl(mut vertices: Vec<HypoElement>, clamp: bool) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Empty("hypodifferential vertex list"));
        }
        let dim = vertices[0].dim();
        for e in vertices.iter_mut() {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.dim(),
                });
            }
            if !e.is_finite() {
                return Err(Error::NonFinite("hypodifferential element"));
            }
            if clamp && e.a > 0.0 && e.a <= NORMALIZATION_EPS {
                e.a = 0.0;
            }
        }
        let mut kept: Vec<HypoElement> = Vec::with_capacity(vertices.len());
        for e in vertices {
            let dup = kept.iter().any(|u| {
                let da = u.a - e.a;
                let dv: f64 = u.v.iter().zip(&e.v).map(|(a, b)| (a - b) * (a - b)).sum();
                (da * da + dv).sqrt() < crate::geometry::DEDUP_EPS
            });
            if !dup {
                kept.push(e);
            }
        }
        Ok(Hypodifferential {
            dim,
            rep: HypoRep::Polytope(kept),
        })
    }

    /// Support-oracle representation of a set in ℝ × ℝ^d.
    pub fn oracle(dim: usize, seed: HypoElement, query: Arc<SupportFn>) -> Self {
        Hypodifferential {
            dim,
            rep: HypoRep::Oracle(SupportOracle::new(seed, query)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rep(&self) -> &HypoRep {
        &self.rep
    }

    pub fn is_polytope(&self) -> bool {
        matches!(self.rep, HypoRep::Polytope(_))
    }

    /// Vertices of the polytope representation, if this is one.
    pub fn vertices(&self) -> Option<&[HypoElement]> {
        match &self.rep {
            HypoRep::Polytope(v) => Some(v),
            HypoRep::Oracle(_) => None,
        }
    }

    /// Element maximizing w_a·a + ⟨w_v, v⟩ over the set; ties broken
    /// toward the lowest vertex index for the polytope representation.
    pub fn support(&self, w_a: f64, w_v: &[f64]) -> Result<HypoElement> {
        if w_v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: w_v.len(),
            });
        }
        match &self.rep {
            HypoRep::Polytope(verts) => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (i, e) in verts.iter().enumerate() {
                    let score = w_a * e.a + dot(w_v, &e.v);
                    if score > best_score {
                        best_score = score;
                        best = i;
                    }
                }
                Ok(verts[best].clone())
            }
            HypoRep::Oracle(oracle) => Ok(oracle.query(w_a.max(0.0), w_v)),
        }
    }

    /// Value of the max-affine model Φ(d) = max over the set of a + ⟨v, d⟩.
    pub fn model_value(&self, d: &[f64]) -> Result<f64> {
        if d.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: d.len(),
            });
        }
        match &self.rep {
            HypoRep::Polytope(verts) => Ok(verts
                .iter()
                .map(|e| e.a + dot(&e.v, d))
                .fold(f64::NEG_INFINITY, f64::max)),
            HypoRep::Oracle(oracle) => {
                let e = oracle.query(1.0, d);
                Ok(e.a + dot(&e.v, d))
            }
        }
    }

    /// Checks the two defining invariants: every offset is ≤ 1e-9 and the
    /// maximal offset equals zero within 1e-9. For the oracle
    /// representation the maximum is probed through the weight (1, 0).
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let max_a = match &self.rep {
            HypoRep::Polytope(verts) => {
                let mut max_a = f64::NEG_INFINITY;
                for (i, e) in verts.iter().enumerate() {
                    if e.a > NORMALIZATION_EPS {
                        violations.push(format!(
                            "vertex {i}: a = {:.6e} > 0 (affine piece exceeds the function)",
                            e.a
                        ));
                    }
                    max_a = max_a.max(e.a);
                }
                max_a
            }
            HypoRep::Oracle(oracle) => {
                let top = oracle.query(1.0, &vec![0.0; self.dim]);
                if top.a > NORMALIZATION_EPS {
                    violations.push(format!(
                        "support at (1, 0): a = {:.6e} > 0 (affine piece exceeds the function)",
                        top.a
                    ));
                }
                top.a
            }
        };
        if max_a.abs() > NORMALIZATION_EPS {
            violations.push(format!("max a = {max_a:.6e} ≠ 0"));
        }
        ValidationReport {
            valid: violations.is_empty(),
            violations,
            max_a,
        }
    }

    /// Inner polytope approximation from support points at the given
    /// weights. For the polytope representation this returns the vertices
    /// unchanged; for the oracle representation the result is always an
    /// inner approximation of the represented set.
    pub fn to_polytope(&self, directions: &[(f64, Vec<f64>)]) -> Result<Polytope> {
        match &self.rep {
            HypoRep::Polytope(verts) => {
                Polytope::new(verts.iter().map(HypoElement::to_point).collect())
            }
            HypoRep::Oracle(oracle) => {
                if directions.is_empty() {
                    return Err(Error::Empty("support direction list"));
                }
                let mut points = vec![oracle.seed().to_point()];
                for (w_a, w_v) in directions {
                    if w_v.len() != self.dim {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim,
                            got: w_v.len(),
                        });
                    }
                    points.push(oracle.query(w_a.max(0.0), w_v).to_point());
                }
                Polytope::new(points)
            }
        }
    }
}

/// Declared analytical properties of a hypodifferential map.
///
/// `lip_approx_l` is the constant of the quadratic model-error bound
/// (L/2)‖x − y‖², `lip_map_k` the Pompeiu-Hausdorff Lipschitz constant of
/// the map itself, and `bound_c` a bound on |a| and ‖v‖ over the working
/// set. Fields absent in an input propagate as absent through the
/// calculus; they are never guessed.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HypoMeta {
    pub consistent: bool,
    pub exact: bool,
    pub lip_approx_l: Option<f64>,
    pub lip_map_k: Option<f64>,
    pub bound_c: Option<f64>,
}

impl HypoMeta {
    pub fn exact_consistent(lip_approx_l: f64, lip_map_k: f64) -> Self {
        HypoMeta {
            consistent: true,
            exact: true,
            lip_approx_l: Some(lip_approx_l),
            lip_map_k: Some(lip_map_k),
            bound_c: None,
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type HypoFn = dyn Fn(&[f64]) -> Hypodifferential + Send + Sync;

/// A convex function bundled with its hypodifferential map and metadata.
///
/// The value and hypodifferential oracles must be pure and defined at
/// every finite point of ℝ^d; all state is immutable, so values can be
/// shared freely across threads.
#[derive(Clone)]
pub struct HypoFunction {
    dim: usize,
    value: Arc<ValueFn>,
    hypo: Arc<HypoFn>,
    meta: HypoMeta,
}

impl HypoFunction {
    pub fn new(dim: usize, value: Arc<ValueFn>, hypo: Arc<HypoFn>, meta: HypoMeta) -> Self {
        HypoFunction {
            dim,
            value,
            hypo,
            meta,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "evaluation point has wrong dimension");
        (self.value)(x)
    }

    pub fn hypodifferential(&self, x: &[f64]) -> Hypodifferential {
        assert_eq!(x.len(), self.dim, "evaluation point has wrong dimension");
        (self.hypo)(x)
    }

    pub fn meta(&self) -> &HypoMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: HypoMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Overrides the element bound C (|a| ≤ C, ‖v‖ ≤ C on the working set).
    pub fn with_bound_c(mut self, c: f64) -> Self {
        self.meta.bound_c = Some(c);
        self
    }

    pub fn value_fn(&self) -> Arc<ValueFn> {
        Arc::clone(&self.value)
    }

    pub fn hypo_fn(&self) -> Arc<HypoFn> {
        Arc::clone(&self.hypo)
    }
}

impl std::fmt::Debug for HypoFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HypoFunction")
            .field("dim", &self.dim)
            .field("meta", &self.meta)
            .finish()
    }
}
