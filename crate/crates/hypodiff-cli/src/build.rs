//! Expression-tree builder: turns config nodes into HypoFunctions.

use hypodiff::atoms::{
    atom_abs, atom_dist_orthant, atom_max_eigenvalue, atom_norm_affine, atom_polyhedral,
    atom_quadratic, atom_sublinear, PolyhedralSpec,
};
use hypodiff::calculus::{
    affine_precompose, conic_combination, finite_max, outer_compose, positive_power, SmoothOuter,
};
use hypodiff::hypo::HypoFunction;
use hypodiff::linalg::Matrix;

use crate::config::ExprNode;
use crate::CliError;

/// Atom and combinator names accepted in the "op" field, with their
/// parameters.
pub const KNOWN_OPS: [(&str, &str); 13] = [
    ("abs", "|x| on ℝ (exact, consistent, K = 2)"),
    (
        "polyhedral",
        "max of affine pieces; params {offsets, slopes}",
    ),
    ("sublinear", "max of linear pieces; params {slopes}"),
    ("norm_affine", "‖Ax + b‖ as a support oracle; params {a, b}"),
    (
        "max_eigenvalue",
        "λ_max over vectorized symmetric matrices; params {l}",
    ),
    (
        "dist_orthant",
        "distance to the nonnegative orthant; params {dim}",
    ),
    ("quadratic", "½xᵀQx + cᵀx + r; params {q, c, r}"),
    ("conic", "Σ λᵢ·argᵢ; params {lambdas}"),
    ("max", "pointwise maximum of the args"),
    ("affine", "arg(Ay + b); params {a, b}"),
    (
        "outer_sum",
        "sum of the args through the outer-composition rule",
    ),
    ("outer_exp", "exp(arg); params {lip_grad?, grad_bound?}"),
    ("power", "max{0, arg}^p; params {p}"),
];

fn field<'v>(
    params: &'v serde_json::Value,
    name: &str,
    at: &str,
) -> Result<&'v serde_json::Value, CliError> {
    params
        .get(name)
        .ok_or_else(|| CliError::Schema(vec![format!("{at}: missing parameter {name:?}")]))
}

fn as_f64(v: &serde_json::Value, at: &str) -> Result<f64, CliError> {
    v.as_f64()
        .ok_or_else(|| CliError::Schema(vec![format!("{at}: expected a number")]))
}

fn as_usize(v: &serde_json::Value, at: &str) -> Result<usize, CliError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| CliError::Schema(vec![format!("{at}: expected a nonnegative integer")]))
}

fn as_vec(v: &serde_json::Value, at: &str) -> Result<Vec<f64>, CliError> {
    v.as_array()
        .ok_or_else(|| CliError::Schema(vec![format!("{at}: expected an array of numbers")]))?
        .iter()
        .map(|x| as_f64(x, at))
        .collect()
}

fn as_matrix(v: &serde_json::Value, at: &str) -> Result<Vec<Vec<f64>>, CliError> {
    v.as_array()
        .ok_or_else(|| CliError::Schema(vec![format!("{at}: expected an array of rows")]))?
        .iter()
        .map(|row| as_vec(row, at))
        .collect()
}

fn lib_err(at: &str, e: hypodiff::Error) -> CliError {
    CliError::Schema(vec![format!("{at}: {e}")])
}

/// Recursively build the tree, checking arities and dimensions.
pub fn build(node: &ExprNode, path: &str) -> Result<HypoFunction, CliError> {
    let at = format!("{path}/{}", node.op);
    let expect_args = |n: usize| -> Result<(), CliError> {
        if node.args.len() != n {
            Err(CliError::Schema(vec![format!(
                "{at}: expected {n} argument(s), got {}",
                node.args.len()
            )]))
        } else {
            Ok(())
        }
    };
    let build_args = || -> Result<Vec<HypoFunction>, CliError> {
        node.args
            .iter()
            .enumerate()
            .map(|(i, a)| build(a, &format!("{at}[{i}]")))
            .collect()
    };
    match node.op.as_str() {
        "abs" => {
            expect_args(0)?;
            Ok(atom_abs())
        }
        "polyhedral" => {
            expect_args(0)?;
            let offsets = as_vec(field(&node.params, "offsets", &at)?, &at)?;
            let slopes = as_matrix(field(&node.params, "slopes", &at)?, &at)?;
            let spec = PolyhedralSpec::new(offsets, slopes).map_err(|e| lib_err(&at, e))?;
            Ok(atom_polyhedral(&spec))
        }
        "sublinear" => {
            expect_args(0)?;
            let slopes = as_matrix(field(&node.params, "slopes", &at)?, &at)?;
            atom_sublinear(slopes).map_err(|e| lib_err(&at, e))
        }
        "norm_affine" => {
            expect_args(0)?;
            let a = as_matrix(field(&node.params, "a", &at)?, &at)?;
            let b = as_vec(field(&node.params, "b", &at)?, &at)?;
            let a = Matrix::from_rows(&a).map_err(|e| lib_err(&at, e))?;
            atom_norm_affine(&a, &b).map_err(|e| lib_err(&at, e))
        }
        "max_eigenvalue" => {
            expect_args(0)?;
            let l = as_usize(field(&node.params, "l", &at)?, &at)?;
            atom_max_eigenvalue(l).map_err(|e| lib_err(&at, e))
        }
        "dist_orthant" => {
            expect_args(0)?;
            let dim = as_usize(field(&node.params, "dim", &at)?, &at)?;
            atom_dist_orthant(dim).map_err(|e| lib_err(&at, e))
        }
        "quadratic" => {
            expect_args(0)?;
            let q = as_matrix(field(&node.params, "q", &at)?, &at)?;
            let c = as_vec(field(&node.params, "c", &at)?, &at)?;
            let r = as_f64(field(&node.params, "r", &at)?, &at)?;
            atom_quadratic(&q, &c, r).map_err(|e| lib_err(&at, e))
        }
        "conic" => {
            let lambdas = as_vec(field(&node.params, "lambdas", &at)?, &at)?;
            expect_args(lambdas.len())?;
            let parts = build_args()?;
            conic_combination(&parts, &lambdas).map_err(|e| lib_err(&at, e))
        }
        "max" => {
            if node.args.is_empty() {
                return Err(CliError::Schema(vec![format!("{at}: needs arguments")]));
            }
            let parts = build_args()?;
            finite_max(&parts).map_err(|e| lib_err(&at, e))
        }
        "affine" => {
            expect_args(1)?;
            let a = as_matrix(field(&node.params, "a", &at)?, &at)?;
            let b = as_vec(field(&node.params, "b", &at)?, &at)?;
            let a = Matrix::from_rows(&a).map_err(|e| lib_err(&at, e))?;
            let inner = build(&node.args[0], &format!("{at}[0]"))?;
            affine_precompose(&inner, &a, &b).map_err(|e| lib_err(&at, e))
        }
        "outer_sum" => {
            if node.args.is_empty() {
                return Err(CliError::Schema(vec![format!("{at}: needs arguments")]));
            }
            let parts = build_args()?;
            outer_compose(SmoothOuter::sum(parts.len()), &parts).map_err(|e| lib_err(&at, e))
        }
        "outer_exp" => {
            expect_args(1)?;
            let lip_grad = node
                .params
                .get("lip_grad")
                .map(|v| as_f64(v, &at))
                .transpose()?;
            let grad_bound = node
                .params
                .get("grad_bound")
                .map(|v| as_f64(v, &at))
                .transpose()?;
            let inner = build(&node.args[0], &format!("{at}[0]"))?;
            let g = SmoothOuter::exp().with_bounds(lip_grad, grad_bound);
            outer_compose(g, &[inner]).map_err(|e| lib_err(&at, e))
        }
        "power" => {
            expect_args(1)?;
            let p = as_f64(field(&node.params, "p", &at)?, &at)?;
            let inner = build(&node.args[0], &format!("{at}[0]"))?;
            positive_power(&inner, p).map_err(|e| lib_err(&at, e))
        }
        other => Err(CliError::Schema(vec![format!(
            "{at}: unknown op {other:?} (known ops: {})",
            KNOWN_OPS
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", ")
        )])),
    }
}
