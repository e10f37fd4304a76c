//! Time-stepping engines for the star model.
//!
//! Two complementary strategies, both classic fixed-step RK4:
//!
//! - probe engine (static networks): the covariance never materializes.
//!   For an observable a^T Sigma(t) b with Sigma(t) = Phi Sigma0 Phi^T, the
//!   vectors w_a(t) = Phi(t)^T a solve the adjoint equation dw/dt = A^T w
//!   when A is constant, so a handful of probe vectors is all that is
//!   propagated.
//!
//! - column engine (driven networks): the adjoint trick dies with time
//!   dependence, so instead a square factor Y(t) = Phi(t) L0 of
//!   Sigma(t) = Y Y^T is propagated column by column. The transient is
//!   skipped by applying powers of the one-period propagator (binary
//!   powering), and observables are sampled over whole periods at the end.
//!   Y is stored transposed (rows = propagated states) so each state is
//!   contiguous and the period map composes with plain row-major matmul.

use ndarray::Array2;
use rayon::prelude::*;

use super::star::StarModel;

/// Scratch buffers for one RK4 integration lane.
pub(super) struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

fn axpy_into(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for i in 0..out.len() {
        out[i] = y[i] + a * x[i];
    }
}

/// One RK4 step of y' = f(t, y) where f is the forward star-model field
/// (x' = M^-1 p, p' = -K(t) x) or its adjoint.
pub(super) fn rk4_step(
    star: &StarModel,
    adjoint: bool,
    t: f64,
    dt: f64,
    y: &mut [f64],
    s: &mut Rk4Scratch,
) {
    let field = |tt: f64, input: &[f64], out: &mut [f64]| {
        if adjoint {
            star.adjoint_field(tt, input, out);
        } else {
            star.forward_field(tt, input, out);
        }
    };
    field(t, y, &mut s.k1);
    axpy_into(&mut s.tmp, y, 0.5 * dt, &s.k1);
    field(t + 0.5 * dt, &s.tmp, &mut s.k2);
    axpy_into(&mut s.tmp, y, 0.5 * dt, &s.k2);
    field(t + 0.5 * dt, &s.tmp, &mut s.k3);
    axpy_into(&mut s.tmp, y, dt, &s.k3);
    field(t + dt, &s.tmp, &mut s.k4);
    let w = dt / 6.0;
    for i in 0..y.len() {
        y[i] += w * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

/// Advance a set of independent state vectors by `steps` RK4 steps starting
/// at time `t0`. States are rows of `states`.
pub(super) fn advance_states(
    star: &StarModel,
    adjoint: bool,
    t0: f64,
    dt: f64,
    steps: usize,
    states: &mut [Vec<f64>],
) {
    states.par_iter_mut().for_each_init(
        || Rk4Scratch::new(2 * star.n_q()),
        |scratch, state| {
            let mut t = t0;
            for _ in 0..steps {
                rk4_step(star, adjoint, t, dt, state, scratch);
                t += dt;
            }
        },
    );
}

/// Advance every row of the transposed factor `yt` (each row is one state
/// vector of the closed system) by `steps` RK4 steps.
pub(super) fn advance_rows(
    star: &StarModel,
    t0: f64,
    dt: f64,
    steps: usize,
    yt: &mut Array2<f64>,
) {
    let dim = 2 * star.n_q();
    yt.outer_iter_mut()
        .into_par_iter()
        .for_each_init(
            || Rk4Scratch::new(dim),
            |scratch, mut row| {
                let state = row.as_slice_mut().expect("row-major layout");
                let mut t = t0;
                for _ in 0..steps {
                    rk4_step(star, false, t, dt, state, scratch);
                    t += dt;
                }
            },
        );
}

/// One-period propagator, transposed (row j = Phi(tau) e_j).
pub(super) fn monodromy_transposed(star: &StarModel, dt: f64, steps: usize) -> Array2<f64> {
    let dim = 2 * star.n_q();
    let mut mt = Array2::<f64>::zeros((dim, dim));
    for j in 0..dim {
        mt[(j, j)] = 1.0;
    }
    advance_rows(star, 0.0, dt, steps, &mut mt);
    mt
}

/// Replace `yt` by the transpose of M^power Y, given the transposed period
/// map `mt` (binary powering; both operands stay transposed throughout).
pub(super) fn apply_monodromy_power(yt: Array2<f64>, mt: Array2<f64>, power: usize) -> Array2<f64> {
    let mut result = yt;
    let mut base = mt;
    let mut p = power;
    while p > 0 {
        if p & 1 == 1 {
            // Y <- M Y  <=>  Yt <- Yt Mt
            result = result.dot(&base);
        }
        p >>= 1;
        if p > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// diag(Y Y^T) for the transposed factor: per-coordinate variances
/// <z_i^2> accumulated in one row-major pass.
pub(super) fn diagonal_variances(yt: &Array2<f64>, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for row in yt.outer_iter() {
        let r = row.as_slice().expect("row-major layout");
        for (i, &v) in r.iter().enumerate() {
            out[i] += v * v;
        }
    }
}
