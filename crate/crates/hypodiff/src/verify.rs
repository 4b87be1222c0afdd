//! Property checkers that test, by sampling and finite differencing, the
//! definitional properties of hypodifferential maps, plus rate-bound
//! certification of solver traces. Checks are pure given a seed: a fixed
//! seed reproduces the same witnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::hausdorff_polytope;
use crate::hypo::HypoFunction;
use crate::linalg::norm;
use crate::solvers::SolverTrace;
use crate::subproblems::min_norm_hypo;

/// Default sample count for box-sampling checks.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Outcome of one property check. `passed` holds exactly when
/// `worst_violation ≤ tolerance`; the witness is the flattened input at
/// which the worst violation occurred.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Vec<f64>,
    pub samples: usize,
    /// Certification caveats, e.g. inner-approximation slack for oracle sets.
    pub notes: Vec<String>,
}

impl CheckReport {
    fn from_worst(
        name: impl Into<String>,
        worst: f64,
        tolerance: f64,
        witness: Vec<f64>,
        samples: usize,
    ) -> Self {
        CheckReport {
            name: name.into(),
            passed: worst <= tolerance,
            worst_violation: worst,
            tolerance,
            witness,
            samples,
            notes: Vec::new(),
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.notes.push(note);
        self
    }
}

/// Finite sampling box with equal-length bounds.
#[derive(Debug, Clone)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite("sampling box bound"));
            }
            if l > u {
                return Err(Error::EmptyBox { coord: i });
            }
        }
        Ok(DomainBox { lower, upper })
    }

    /// The symmetric box [−r, r]^d.
    pub fn symmetric(dim: usize, r: f64) -> Self {
        DomainBox {
            lower: vec![-r; dim],
            upper: vec![r; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if l == u { *l } else { rng.gen_range(*l..*u) })
            .collect()
    }
}

/// Finite-difference check of the defining limit: the scaled model error
/// e(α) = |f(x+αd) − f(x) − Φ_x(αd)|/α must vanish linearly as α → 0.
///
/// Exact maps pass outright when every e(α) ≤ 1e-12·scale. When the
/// function declares a Lipschitzian-approximation constant L, the grid is
/// checked against the implied rate e(α) ≤ (L/2)‖d‖²·α; otherwise a slope
/// is fitted through the origin on the coarse half of the grid and the
/// whole grid must stay below it up to 1e-9·scale.
pub fn fd_check(f: &HypoFunction, x: &[f64], d: &[f64], alphas: &[f64]) -> CheckReport {
    let name = "finite-difference model error";
    let fx = f.value(x);
    let scale = 1.0 + fx.abs();
    let h = f.hypodifferential(x);
    let mut errors: Vec<(f64, f64)> = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(alpha > 0.0) {
            continue;
        }
        let y: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let step: Vec<f64> = d.iter().map(|di| alpha * di).collect();
        let model = h.model_value(&step).expect("dimension checked by caller");
        let e = (f.value(&y) - fx - model).abs() / alpha;
        errors.push((alpha, e));
    }
    let exact_tol = 1e-12 * scale;
    let worst_raw = errors.iter().map(|(_, e)| *e).fold(0.0_f64, f64::max);
    if worst_raw <= exact_tol {
        return CheckReport::from_worst(name, worst_raw, exact_tol, x.to_vec(), errors.len());
    }
    let tol = 1e-9 * scale;
    let (slope, note) = match f.meta().lip_approx_l {
        Some(l) => {
            let dd = norm(d);
            (
                0.5 * l * dd * dd,
                format!("rate bound slope (L/2)‖d‖² = {:.6e}", 0.5 * l * dd * dd),
            )
        }
        None => {
            // least-squares slope through the origin on the coarser half
            let mid = (errors.len() / 2).max(1);
            let (mut num, mut den) = (0.0, 0.0);
            for (a, e) in &errors[..mid] {
                num += a * e;
                den += a * a;
            }
            let c = if den > 0.0 { num / den } else { 0.0 };
            (c, format!("fitted slope c = {c:.6e}"))
        }
    };
    let mut worst = f64::NEG_INFINITY;
    let mut witness_alpha = 0.0;
    for (a, e) in &errors {
        let viol = e - slope * a;
        if viol > worst {
            worst = viol;
            witness_alpha = *a;
        }
    }
    let mut witness = x.to_vec();
    witness.push(witness_alpha);
    CheckReport::from_worst(name, worst, tol, witness, errors.len()).with_note(note)
}

/// Samples the global minorant inequality
/// f(y) − f(x) ≥ Φ_x(y − x) − tol over pairs in the box.
pub fn consistency_check(
    f: &HypoFunction,
    domain: &DomainBox,
    n_samples: usize,
    seed: u64,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut scale = 1.0_f64;
    for _ in 0..n_samples {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let fx = f.value(&x);
        let fy = f.value(&y);
        scale = scale.max(fx.abs()).max(fy.abs());
        let model = f
            .hypodifferential(&x)
            .model_value(&d)
            .expect("dimensions match by construction");
        let violation = model - (fy - fx);
        if violation > worst {
            worst = violation;
            witness = [x.as_slice(), y.as_slice()].concat();
        }
    }
    CheckReport::from_worst(
        "consistency (global affine minorants)",
        worst,
        1e-10 * scale,
        witness,
        n_samples,
    )
}

/// Samples the Lipschitzian-approximation inequality
/// |f(y) − f(x) − Φ_x(y − x)| ≤ (L/2)‖y − x‖².
pub fn lip_approx_check(
    f: &HypoFunction,
    domain: &DomainBox,
    l: f64,
    n_samples: usize,
    seed: u64,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut scale = 1.0_f64;
    for _ in 0..n_samples {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let fx = f.value(&x);
        let fy = f.value(&y);
        scale = scale.max(fx.abs()).max(fy.abs());
        let model = f
            .hypodifferential(&x)
            .model_value(&d)
            .expect("dimensions match by construction");
        let residual = (fy - fx - model).abs();
        let bound = 0.5 * l * norm(&d) * norm(&d);
        let violation = residual - bound;
        if violation > worst {
            worst = violation;
            witness = [x.as_slice(), y.as_slice()].concat();
        }
    }
    CheckReport::from_worst(
        format!("lipschitzian approximation (L = {l})"),
        worst,
        1e-9 * scale,
        witness,
        n_samples,
    )
}

/// Samples d_PH(d̲f(x), d̲f(y)) ≤ K‖x − y‖ over pairs in the box.
///
/// Polytope maps are measured exactly; oracle maps are discretized at the
/// given support directions, which certifies violations but only suggests
/// satisfaction up to the reported inner-approximation slack.
pub fn lip_map_check(
    f: &HypoFunction,
    domain: &DomainBox,
    k: f64,
    n_samples: usize,
    mesh: &[(f64, Vec<f64>)],
    mesh_slack: f64,
    seed: u64,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut used_oracle = false;
    let mut scale = 1.0_f64;
    for _ in 0..n_samples {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let hx = f.hypodifferential(&x);
        let hy = f.hypodifferential(&y);
        if !hx.is_polytope() || !hy.is_polytope() {
            used_oracle = true;
        }
        let px = hx
            .to_polytope(mesh)
            .expect("mesh directions fit the dimension")
            .deduplicated(1e-9);
        let py = hy
            .to_polytope(mesh)
            .expect("mesh directions fit the dimension")
            .deduplicated(1e-9);
        let dist_xy = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        // distance accuracy only needs to resolve the bound under test
        let htol = (1e-6 * k * dist_xy).max(1e-13);
        let d = hausdorff_polytope(&px, &py, htol).expect("equal dimensions");
        scale = scale.max(d);
        let violation = d - k * dist_xy;
        if violation > worst {
            worst = violation;
            witness = [x.as_slice(), y.as_slice()].concat();
        }
    }
    let tol = if used_oracle {
        mesh_slack * scale.max(1.0)
    } else {
        1e-9 * scale
    };
    let report = CheckReport::from_worst(
        format!("hausdorff lipschitz map (K = {k})"),
        worst,
        tol,
        witness,
        n_samples,
    );
    if used_oracle {
        report.with_note(format!(
            "inner-approximation certificate: oracle sets discretized at {} directions, \
             slack {:.1e}·scale",
            mesh.len(),
            mesh_slack
        ))
    } else {
        report
    }
}

/// One-sided consequence of a K-Lipschitz consistent map: the model error
/// satisfies 0 ≤ f(y) − f(x) − Φ_x(y − x) ≤ K‖y − x‖(1 + ‖y − x‖).
/// Samples pairs and reports the worse side.
pub fn model_error_majorant_check(
    f: &HypoFunction,
    domain: &DomainBox,
    k: f64,
    n_samples: usize,
    seed: u64,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    let mut scale = 1.0_f64;
    for _ in 0..n_samples {
        let x = domain.sample(&mut rng);
        let y = domain.sample(&mut rng);
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let err = f.value(&y)
            - f.value(&x)
            - f.hypodifferential(&x)
                .model_value(&d)
                .expect("dimensions match by construction");
        scale = scale.max(f.value(&x).abs()).max(f.value(&y).abs());
        let dist = norm(&d);
        let violation = (-err).max(err - k * dist * (1.0 + dist));
        if violation > worst {
            worst = violation;
            witness = [x.as_slice(), y.as_slice()].concat();
        }
    }
    CheckReport::from_worst(
        format!("model-error majorant (K = {k})"),
        worst,
        1e-9 * scale,
        witness,
        n_samples,
    )
}

/// Which theoretical envelope applies to a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMethod {
    /// O(1/k) envelope of the constant-step method (needs α, L, R, Δ₀).
    MhdConstant { alpha: f64 },
    /// Linear envelope of the exact-step method (needs R, Δ₀); also
    /// certifies dist(0, d̲f(x_k)) ≤ Δ₀(1 − q)q^k.
    MhdExact,
    /// O(1/k²) envelope of the accelerated proximal method
    /// (needs L, γ₀, Δ₀ and the initial distance to a minimizer).
    Aphd,
}

/// Analysis constants entering the rate envelopes; `f_star` is required,
/// the others per method.
#[derive(Debug, Clone, Default)]
pub struct RateConstants {
    pub f_star: f64,
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub delta0: Option<f64>,
    pub gamma0: Option<f64>,
    /// ‖x₀ − x_*‖ when a minimizer is known; the sublevel radius R is a
    /// valid stand-in.
    pub x_star_dist: Option<f64>,
}

fn need(c: Option<f64>, name: &str) -> Result<f64> {
    c.ok_or_else(|| Error::InvalidParameter(format!("rate certification requires {name}")))
}

/// Evaluates the method's theoretical envelope at every recorded k and
/// reports the maximal excess Δ_k − bound_k (never negative counts as a
/// pass). Tolerance: 1e-8·(1 + Δ₀).
pub fn rate_certify(
    trace: &SolverTrace,
    method: RateMethod,
    constants: &RateConstants,
) -> Result<CheckReport> {
    let delta0 = match constants.delta0 {
        Some(d) => d,
        None => trace
            .records
            .first()
            .map(|r| r.f - constants.f_star)
            .ok_or(Error::InvalidParameter(
                "rate certification needs a nonempty trace".into(),
            ))?,
    };
    let tol = 1e-8 * (1.0 + delta0.abs());
    let mut worst = f64::NEG_INFINITY;
    let mut note: Option<String> = None;
    let mut witness_k = 0usize;
    let mut check = |k: usize, value: f64, bound: f64, worst: &mut f64| {
        let viol = value - bound;
        if viol > *worst {
            *worst = viol;
            witness_k = k;
        }
    };

    match method {
        RateMethod::MhdConstant { alpha } => {
            let l = need(constants.l, "L")?;
            let r = need(constants.r, "R")?;
            let eta = alpha - 0.5 * l * alpha * alpha;
            if eta <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "step alpha = {alpha} gives a nonpositive decrease coefficient"
                )));
            }
            let one_r2 = (1.0 + r) * (1.0 + r);
            for rec in &trace.records {
                let delta = rec.f - constants.f_star;
                let bound = delta0 * one_r2 / (one_r2 + delta0 * eta * rec.k as f64);
                check(rec.k, delta, bound, &mut worst);
            }
        }
        RateMethod::MhdExact => {
            let r = need(constants.r, "R")?;
            let q = 1.0 - 1.0 / (1.0 + r);
            let mut worst_value = f64::NEG_INFINITY;
            let mut worst_dist = f64::NEG_INFINITY;
            for rec in &trace.records {
                let qk = q.powi(rec.k as i32);
                let delta = rec.f - constants.f_star;
                worst_value = worst_value.max(delta - delta0 * qk);
                worst_dist = worst_dist.max(rec.dist0 - delta0 * (1.0 - q) * qk);
                check(rec.k, delta, delta0 * qk, &mut worst);
                check(rec.k, rec.dist0, delta0 * (1.0 - q) * qk, &mut worst);
            }
            note = Some(format!(
                "value envelope worst {worst_value:.3e}; dist envelope worst {worst_dist:.3e}"
            ));
        }
        RateMethod::Aphd => {
            let l = need(constants.l, "L")?;
            let gamma0 = need(constants.gamma0, "gamma0")?;
            let dist = constants.x_star_dist.or(constants.r);
            let dist = need(dist, "x_star_dist or R")?;
            let constant = delta0 + 0.5 * gamma0 * dist * dist;
            for rec in &trace.records {
                let denom = 2.0 * l.sqrt() + rec.k as f64 * gamma0.sqrt();
                let bound = 4.0 * l / (denom * denom) * constant;
                let delta = rec.f - constants.f_star;
                check(rec.k, delta, bound, &mut worst);
            }
        }
    }
    let report = CheckReport::from_worst(
        format!("rate envelope ({method:?})"),
        worst,
        tol,
        vec![witness_k as f64],
        trace.records.len(),
    );
    Ok(match note {
        Some(n) => report.with_note(n),
        None => report,
    })
}

/// Global-optimality certificate: passes iff dist(0, d̲f(x)) ≤ tol.
pub fn optimality_check(f: &HypoFunction, x: &[f64], tol: f64) -> CheckReport {
    let e = min_norm_hypo(&f.hypodifferential(x), (tol * 0.01).max(1e-14))
        .map(|e| e.norm())
        .unwrap_or(f64::INFINITY);
    CheckReport::from_worst("optimality (0 ∈ d̲f)", e, tol, x.to_vec(), 1)
}

/// Deterministic support-direction mesh for discretizing oracle sets in
/// ℝ × ℝ^d: seeded unit directions in slope space crossed with offset
/// weights {0, 1}, plus the pure offset direction.
pub fn direction_mesh(dim: usize, n_directions: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = vec![(1.0, vec![0.0; dim])];
    for _ in 0..n_directions {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n < 1e-12 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= n;
        }
        mesh.push((0.0, v.clone()));
        mesh.push((1.0, v));
    }
    mesh
}

/// Convenience bundle: run the definitional checks an atom should satisfy.
pub fn standard_suite(
    f: &HypoFunction,
    domain: &DomainBox,
    n_samples: usize,
    seed: u64,
) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut reports = Vec::new();
    // finite differencing at a few sampled base points and directions
    let alphas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    for _ in 0..8 {
        let x = domain.sample(&mut rng);
        let d: Vec<f64> = (0..domain.dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        reports.push(fd_check(f, &x, &d, &alphas));
    }
    if f.meta().consistent {
        reports.push(consistency_check(f, domain, n_samples, seed));
    }
    if let Some(l) = f.meta().lip_approx_l {
        reports.push(lip_approx_check(
            f,
            domain,
            l,
            n_samples,
            seed.wrapping_add(1),
        ));
    }
    reports
}
