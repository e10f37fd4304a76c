//! Rectification coefficients, quasi-currents, parameter maps and
//! transistor amplification factors.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::floquet_solver::{self, driven_pair};
use crate::model::{Model, NetworkSpec};
use crate::report::CurrentsReport;
use crate::static_solver::{self, SolverError};

/// Inputs below this floor count as "no transport" for the rectification
/// coefficient.
pub const TRANSPORT_FLOOR: f64 = 1e-14;

/// Rectification coefficient R = |q_fwd + q_rev| / max(|q_fwd|, |q_rev|),
/// bounded by [0, 2]; symmetric under argument swap.
pub fn rectification(q_fwd: f64, q_rev: f64) -> Result<f64, SolverError> {
    let scale = q_fwd.abs().max(q_rev.abs());
    if scale < TRANSPORT_FLOOR {
        return Err(SolverError::NoTransport);
    }
    Ok((q_fwd + q_rev).abs() / scale)
}

/// Static quasi-currents QQ_a = W_a + Q_a; they satisfy the static first law
/// QQ_1 + QQ_2 = 0 within the report's residual.
pub fn quasi_currents(report: &CurrentsReport) -> Vec<f64> {
    report.baths.iter().map(|b| b.quasi).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Unstable,
    NoTransport,
    SolverFailed,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Unstable => "unstable",
            PointStatus::NoTransport => "no_transport",
            PointStatus::SolverFailed => "solver_failed",
        }
    }
}

/// One grid point of a rectification map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RectificationPoint {
    pub omega_d: f64,
    pub c0: f64,
    /// Heat current into the system from bath 1 (index 0), forward config.
    pub q_fwd: f64,
    /// Same for the temperature-swapped configuration.
    pub q_rev: f64,
    pub r_full: f64,
    /// Quasi-currents of bath 1 in both configurations.
    pub qq_fwd: f64,
    pub qq_rev: f64,
    pub r_quasi: f64,
    pub stable: bool,
    pub status: PointStatus,
}

impl RectificationPoint {
    fn sentinel(omega_d: f64, c0: f64, status: PointStatus) -> Self {
        Self {
            omega_d,
            c0,
            q_fwd: f64::NAN,
            q_rev: f64::NAN,
            r_full: f64::NAN,
            qq_fwd: f64::NAN,
            qq_rev: f64::NAN,
            r_quasi: f64::NAN,
            stable: false,
            status,
        }
    }
}

/// Template for two-oscillator maps: the coupling axis adds
/// `c0 * coupling_pattern` to the base potential, with the Fig.-1-style
/// default pattern [[1, -1], [-1, 1]].
#[derive(Debug, Clone)]
pub struct MapTemplate {
    pub base: Model,
    pub coupling_pattern: DMatrix<f64>,
}

impl MapTemplate {
    pub fn new(base: Model) -> Result<Self, SolverError> {
        if base.n_baths() != 2 {
            return Err(SolverError::TooFewBaths { needed: 2, got: base.n_baths() });
        }
        let n = base.n_nodes();
        let mut pattern = DMatrix::zeros(n, n);
        pattern[(0, 0)] = 1.0;
        if n > 1 {
            pattern[(1, 1)] = 1.0;
            pattern[(0, 1)] = -1.0;
            pattern[(1, 0)] = -1.0;
        }
        Ok(Self { base, coupling_pattern: pattern })
    }

    /// Instantiate the model at one grid point.
    pub fn at(&self, c0: f64, omega_d: f64) -> Result<Model, SolverError> {
        let net = self.base.network();
        let v0 = net.v0() + c0 * &self.coupling_pattern;
        let rebuilt = NetworkSpec::new(
            net.masses().clone(),
            v0,
            net.harmonics().to_vec(),
            Some(omega_d),
        )?;
        Ok(Model::with_units(rebuilt, self.base.baths().to_vec(), self.base.units())?)
    }

    /// Normal-mode frequencies at a given coupling, for ridge prediction.
    pub fn mode_frequencies(&self, c0: f64) -> Result<Vec<f64>, SolverError> {
        let m = self.at(c0, 1.0)?;
        Ok(static_solver::normal_modes(&m)?.frequencies.iter().copied().collect())
    }
}

/// Inclusive linear grid with `count` points.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Evaluate the rectification map over an (omega_d, c0) grid. Rows are
/// produced in row-major order (omega_d outer, c0 inner) regardless of the
/// parallel schedule; unstable points become sentinel rows.
pub fn rectification_map(
    template: &MapTemplate,
    omega_d_range: (f64, f64),
    c0_range: (f64, f64),
    resolution: (usize, usize),
    k_order: Option<i32>,
    rel_tol: f64,
) -> Vec<RectificationPoint> {
    let omegas = linspace(omega_d_range.0, omega_d_range.1, resolution.0);
    let c0s = linspace(c0_range.0, c0_range.1, resolution.1);
    let grid: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&wd| c0s.iter().map(move |&c0| (wd, c0)))
        .collect();

    grid.into_par_iter()
        .map(|(wd, c0)| rectification_point(template, wd, c0, k_order, rel_tol))
        .collect()
}

pub fn rectification_point(
    template: &MapTemplate,
    omega_d: f64,
    c0: f64,
    k_order: Option<i32>,
    rel_tol: f64,
) -> RectificationPoint {
    let model = match template.at(c0, omega_d) {
        Ok(m) => m,
        Err(_) => return RectificationPoint::sentinel(omega_d, c0, PointStatus::SolverFailed),
    };
    match floquet_solver::stability_check(&model) {
        Ok(rep) if !rep.is_stable() => {
            return RectificationPoint::sentinel(omega_d, c0, PointStatus::Unstable)
        }
        Err(_) => return RectificationPoint::sentinel(omega_d, c0, PointStatus::SolverFailed),
        _ => {}
    }
    let pair = match driven_pair(&model, k_order, rel_tol) {
        Ok(p) => p,
        Err(SolverError::Unstable(_)) => {
            return RectificationPoint::sentinel(omega_d, c0, PointStatus::Unstable)
        }
        Err(_) => return RectificationPoint::sentinel(omega_d, c0, PointStatus::SolverFailed),
    };
    let q_fwd = pair.forward.heat(0);
    let q_rev = pair.reversed.heat(0);
    let qq_fwd = pair.forward.quasi(0);
    let qq_rev = pair.reversed.quasi(0);
    let (r_full, r_quasi, status) =
        match (rectification(q_fwd, q_rev), rectification(qq_fwd, qq_rev)) {
            (Ok(rf), Ok(rq)) => (rf, rq, PointStatus::Ok),
            (Ok(rf), Err(_)) => (rf, f64::NAN, PointStatus::Ok),
            _ => (f64::NAN, f64::NAN, PointStatus::NoTransport),
        };
    RectificationPoint {
        omega_d,
        c0,
        q_fwd,
        q_rev,
        r_full,
        qq_fwd,
        qq_rev,
        r_quasi,
        stable: true,
        status,
    }
}

/// One transistor operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplificationPoint {
    /// Control parameter: omega_d for the driven transistor, T3 for the
    /// static one.
    pub control: f64,
    /// Energy source rate at the operating point (average work rate or Q3).
    pub e_dot: f64,
    pub a1: f64,
    pub a2: f64,
    /// Final finite-difference step after Richardson refinement.
    pub derivative_step: f64,
    /// |a1 + a2 + 1| actually achieved.
    pub residual: f64,
}

const AMP_RESIDUAL_TOL: f64 = 1e-4;

fn first_law_amplifications(dq1: f64, dq2: f64, de: f64) -> Result<(f64, f64, f64), SolverError> {
    let num_scale = dq1.abs().max(dq2.abs());
    if de.abs() <= 1e-6 * num_scale || de == 0.0 {
        return Err(SolverError::TransistorUndefined);
    }
    let a1 = dq1 / de;
    let a2 = dq2 / de;
    Ok((a1, a2, (a1 + a2 + 1.0).abs()))
}

/// Dynamical amplification factors A_a = dQ_a / dW at fixed everything else,
/// by central differences in omega_d with Richardson step-halving until the
/// first-law residual |A1 + A2 + 1| drops below 1e-4 (or the step
/// underflows).
pub fn amplification_dynamic(
    model: &Model,
    omega_d: f64,
    step: f64,
    k_order: Option<i32>,
    rel_tol: f64,
) -> Result<AmplificationPoint, SolverError> {
    let net = model.network();
    let at = |wd: f64| -> Result<CurrentsReport, SolverError> {
        let rebuilt = NetworkSpec::new(
            net.masses().clone(),
            net.v0().clone(),
            net.harmonics().to_vec(),
            Some(wd),
        )?;
        let m = Model::with_units(rebuilt, model.baths().to_vec(), model.units())?;
        floquet_solver::averaged_currents_with_tol(&m, k_order, rel_tol)
    };
    let center = at(omega_d)?;

    let mut h = step;
    let mut best: Option<AmplificationPoint> = None;
    loop {
        let plus = at(omega_d + h)?;
        let minus = at(omega_d - h)?;
        let dq1 = plus.heat(0) - minus.heat(0);
        let dq2 = plus.heat(1) - minus.heat(1);
        let de = plus.work_total - minus.work_total;
        let (a1, a2, residual) = first_law_amplifications(dq1, dq2, de)?;
        let point = AmplificationPoint {
            control: omega_d,
            e_dot: center.work_total,
            a1,
            a2,
            derivative_step: h,
            residual,
        };
        if residual < AMP_RESIDUAL_TOL {
            return Ok(point);
        }
        if best.as_ref().map_or(true, |b| residual < b.residual) {
            best = Some(point);
        }
        h *= 0.5;
        if h < 1e-12 * omega_d.abs().max(1.0) {
            return Ok(best.unwrap());
        }
    }
}

/// Static amplification factors with the third bath's temperature as the
/// control: A_a = (dQ_a/dT3) / (dQ3/dT3). The static bound |A_a| <= 1 is
/// checked and reported as an invariant violation if exceeded.
pub fn amplification_static(
    model3: &Model,
    t3: f64,
    step: f64,
    rel_tol: f64,
) -> Result<AmplificationPoint, SolverError> {
    if model3.n_baths() != 3 {
        return Err(SolverError::TooFewBaths { needed: 3, got: model3.n_baths() });
    }
    let at = |t: f64| -> Result<CurrentsReport, SolverError> {
        let mut baths = model3.baths().to_vec();
        baths[2].temperature = t;
        let m = Model::with_units(model3.network().clone(), baths, model3.units())?;
        static_solver::static_currents_with_tol(&m, rel_tol)
    };
    let center = at(t3)?;

    let mut h = step;
    let mut best: Option<AmplificationPoint> = None;
    loop {
        let plus = at(t3 + h)?;
        let minus = at(t3 - h)?;
        let dq1 = plus.heat(0) - minus.heat(0);
        let dq2 = plus.heat(1) - minus.heat(1);
        let de = plus.heat(2) - minus.heat(2);
        let (a1, a2, residual) = first_law_amplifications(dq1, dq2, de)?;
        let point = AmplificationPoint {
            control: t3,
            e_dot: center.heat(2),
            a1,
            a2,
            derivative_step: h,
            residual,
        };
        if residual < AMP_RESIDUAL_TOL {
            check_static_bound(&point)?;
            return Ok(point);
        }
        if best.as_ref().map_or(true, |b| residual < b.residual) {
            best = Some(point);
        }
        h *= 0.5;
        if h < 1e-12 * t3.abs().max(1.0) {
            let point = best.unwrap();
            check_static_bound(&point)?;
            return Ok(point);
        }
    }
}

fn check_static_bound(point: &AmplificationPoint) -> Result<(), SolverError> {
    let bound = 1.0 + 1e-6;
    if point.a1.abs() > bound || point.a2.abs() > bound {
        return Err(SolverError::Unstable(format!(
            "static amplification bound violated: a1 = {}, a2 = {}",
            point.a1, point.a2
        )));
    }
    Ok(())
}

/// Analytic route for the static transistor: differentiate the current
/// integrals under the integral sign, I_a3 = integral T0_a3 dn3/dT3, and
/// A_a = -I_a3 / (I_13 + I_23). Used as the oracle for the finite-difference
/// route.
pub fn amplification_static_analytic(model3: &Model, rel_tol: f64) -> Result<(f64, f64), SolverError> {
    if model3.n_baths() != 3 {
        return Err(SolverError::TooFewBaths { needed: 3, got: model3.n_baths() });
    }
    let modes = static_solver::normal_modes(model3)?;
    let omega_max = crate::static_solver::static_omega_max(model3);
    let mut res = Vec::new();
    for &nu in modes.frequencies.iter() {
        res.push(nu);
        res.push(-nu);
    }
    let bp = crate::quad::breakpoints(&res, omega_max, 1e-9);
    let spec = crate::quad::QuadSpec { rel_tol, ..static_solver::quad_spec(model3, rel_tol) };
    let t3 = model3.bath(2).temperature;
    let out = crate::quad::integrate_vec(
        |omega, out| {
            let t = match static_solver::transfer_static(model3, omega) {
                Ok(t) => t,
                Err(_) => {
                    out.iter_mut().for_each(|x| *x = f64::NAN);
                    return;
                }
            };
            let dn3 = crate::model::occupation_dt(t3, omega);
            out[0] = t[(0, 2)] * dn3;
            out[1] = t[(1, 2)] * dn3;
        },
        2,
        &bp,
        &spec,
    )?;
    let (i13, i23) = (out.value[0], out.value[1]);
    let de = i13 + i23;
    if de.abs() <= TRANSPORT_FLOOR {
        return Err(SolverError::TransistorUndefined);
    }
    Ok((-i13 / de, -i23 / de))
}
