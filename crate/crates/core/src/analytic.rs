//! Exact solutions of single-mode 1D periodic problems and estimates of the
//! discretisation error the explicit scheme makes on them.

use std::f64::consts::PI;

use thiserror::Error;

use crate::numerics::{stencil_coeffs, StencilError};
use crate::snapshot::{FieldSnapshot, Snapshot};
use crate::Problem;

/// Which closed-form solution to generate for an initial profile
/// `sin(2πx/L)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticKind {
    /// `dt(u) = D * lapla(u)`: `sin(kx) exp(-D k² t)`.
    Heat { diffusivity: f64 },
    /// `dt(u) = -c * derx(u)`: `sin(k (x - c t))`.
    Advection { velocity: f64 },
}

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("analytic solutions need a 1D mesh, got {0}D")]
    Dims(usize),
    #[error("unknown field `{0}`")]
    Field(String),
    #[error("field `{0}` must be scalar")]
    Vector(String),
    #[error(transparent)]
    Stencil(#[from] StencilError),
}

/// Exact solution after `steps` steps, and the estimated error of the
/// numerical solution.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticSolution {
    pub snapshot: Snapshot,
    pub time: f64,
    /// Spatial plus temporal truncation estimate of the max abs error.
    pub estimate: f64,
}

/// Discrete symbol of the derivative stencil on mode `k`:
/// `Σ w_j cos(j k h)` for even orders, `Σ w_j sin(j k h)` for odd ones.
fn symbol(weights: &[f64], k: f64, h: f64, odd: bool) -> f64 {
    let r = (weights.len() / 2) as isize;
    let mut s = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let j = i as isize - r;
        let a = j as f64 * k * h;
        s += w * if odd { a.sin() } else { a.cos() };
    }
    s
}

/// Builds the exact solution for `field` and the error estimate.
///
/// The spatial part is the gap between the exact and the discrete symbol of
/// the stencil; the temporal part is the leading forward-Euler term
/// `t λ² dt / 2` with `λ` the discrete rate.
pub fn analytic_solution(
    problem: &Problem,
    field: &str,
    kind: AnalyticKind,
    steps: usize,
) -> Result<AnalyticSolution, AnalyticError> {
    let mesh = &problem.mesh;
    if mesh.dims != 1 {
        return Err(AnalyticError::Dims(mesh.dims));
    }
    let decl = problem
        .field(field)
        .ok_or_else(|| AnalyticError::Field(field.to_string()))?;
    if decl.components() != 1 {
        return Err(AnalyticError::Vector(field.to_string()));
    }
    let n = mesh.points[0];
    let h = mesh.spacing(0);
    let l = mesh.lengths[0];
    let k = 2.0 * PI / l;
    let dt = problem.time.dt;
    let t = dt * steps as f64;
    let acc = problem.numerics.acc;
    let (values, estimate): (Vec<f64>, f64) = match kind {
        AnalyticKind::Heat { diffusivity: d } => {
            let w = stencil_coeffs(2, acc, h)?.weights;
            let lambda = -d * symbol(&w, k, h, false);
            let spatial = t * (d * k * k - lambda).abs();
            let temporal = t * lambda * lambda * dt / 2.0;
            let decay = (-d * k * k * t).exp();
            (
                (0..n).map(|i| (k * i as f64 * h).sin() * decay).collect(),
                spatial + temporal,
            )
        }
        AnalyticKind::Advection { velocity: c } => {
            let w = stencil_coeffs(1, acc, h)?.weights;
            let kstar = symbol(&w, k, h, true);
            let spatial = t * (c * (k - kstar)).abs();
            let temporal = t * (c * kstar).powi(2) * dt / 2.0;
            (
                (0..n).map(|i| (k * (i as f64 * h - c * t)).sin()).collect(),
                spatial + temporal,
            )
        }
    };
    Ok(AnalyticSolution {
        snapshot: Snapshot {
            step: steps,
            dt,
            fields: vec![FieldSnapshot {
                name: field.to_string(),
                comps: 1,
                extents: [n, 1, 1],
                data: values,
            }],
        },
        time: t,
        estimate,
    })
}
