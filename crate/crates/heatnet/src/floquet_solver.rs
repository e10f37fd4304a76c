//! Floquet solver for the periodically driven network: truncated amplitude
//! system, dynamical heat-transfer matrices, period-averaged currents and
//! work rates, and stability heuristics.
//!
//! The driven Green's function P(t, omega) = sum_k A_k(omega) e^{i k w_d t}
//! satisfies a block-banded linear system in the harmonic index; everything
//! downstream (process rates, transfer matrices, currents) is assembled from
//! the A_k blocks frequency by frequency.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{BlockBanded, LinalgError};
use crate::model::{self, Model};
use crate::quad::{self, QuadSpec};
use crate::report::{BathCurrents, CurrentsReport, StabilityReport};
use crate::static_solver::{self, green_inverse_matrix, normal_modes, SolverError};

/// Fourier blocks A_k(omega) of the driven Green's function, k in [-K, K].
#[derive(Debug, Clone)]
pub struct FloquetAmplitudes {
    pub omega: f64,
    pub k_order: i32,
    /// Blocks indexed by k + K.
    blocks: Vec<DMatrix<Complex64>>,
    /// Worst block-row defect of the amplitude equations, normalized by the
    /// amplitude scale.
    pub residual: f64,
    /// Worst pivot-block condition number met during the solve.
    pub condition: f64,
}

impl FloquetAmplitudes {
    pub fn a(&self, k: i32) -> &DMatrix<Complex64> {
        &self.blocks[(k + self.k_order) as usize]
    }

    pub fn k_range(&self) -> impl Iterator<Item = i32> {
        -self.k_order..=self.k_order
    }
}

/// Dynamical transfer data sampled over a frequency grid.
#[derive(Debug, Clone)]
pub struct DynamicTransferSet {
    pub grid: Vec<f64>,
    /// Full transfer matrix T_ab(omega) per grid point, diagonal completed
    /// through Ttilde.
    pub t: Vec<DMatrix<f64>>,
    /// Ttilde_a(omega) per grid point.
    pub t_tilde: Vec<Vec<f64>>,
    /// Process rates r^k_ab(omega): per grid point, (k, rate matrix) sorted
    /// by k.
    pub rates: Vec<Vec<(i32, DMatrix<f64>)>>,
    /// Per-grid-point solver condition numbers.
    pub conditions: Vec<f64>,
}

fn require_driven(model: &Model) -> Result<f64, SolverError> {
    model.network().omega_d().ok_or(SolverError::NotDriven)
}

fn default_k(model: &Model) -> i32 {
    model.network().max_harmonic() + 3
}

/// Solve the truncated amplitude system
/// G0^{-1}(omega - k w_d) A_k + sum_{j != 0} V_j A_{k-j} = delta_{k,0} 1.
pub fn solve_amplitudes(
    model: &Model,
    omega: f64,
    k_order: i32,
) -> Result<FloquetAmplitudes, SolverError> {
    let wd = require_driven(model)?;
    let max_h = model.network().max_harmonic();
    if k_order < max_h {
        return Err(SolverError::TruncationTooSmall { requested: k_order, max_harmonic: max_h });
    }
    let n = model.n_nodes();
    let nb = (2 * k_order + 1) as usize;
    let bw = max_h as usize;

    let mut sys = BlockBanded::zeros(nb, n, bw);
    for ki in 0..nb {
        let k = ki as i32 - k_order;
        *sys.block_mut(ki, ki).unwrap() += green_inverse_matrix(model, omega - k as f64 * wd);
        for (j, vj) in model.network().harmonics() {
            let col = ki as i32 - j;
            if col >= 0 && (col as usize) < nb {
                if let Some(b) = sys.block_mut(ki, col as usize) {
                    *b += vj;
                }
            }
        }
    }
    let mut rhs = DMatrix::<Complex64>::zeros(nb * n, n);
    let mid = k_order as usize;
    for i in 0..n {
        rhs[(mid * n + i, i)] = Complex64::new(1.0, 0.0);
    }

    let condition = match sys.solve(&mut rhs) {
        Ok(c) => c,
        Err(LinalgError::Singular(c)) => {
            return Err(SolverError::Singular { omega, condition: c })
        }
    };

    let blocks: Vec<DMatrix<Complex64>> =
        (0..nb).map(|ki| rhs.rows(ki * n, n).clone_owned()).collect();

    let amps = FloquetAmplitudes { omega, k_order, blocks, residual: 0.0, condition };
    let residual = amplitude_defect(model, &amps);
    Ok(FloquetAmplitudes { residual, ..amps })
}

/// Worst block-row defect of the amplitude equations, normalized by the
/// overall amplitude scale (out-of-range blocks treated as zero).
pub fn amplitude_defect(model: &Model, amps: &FloquetAmplitudes) -> f64 {
    let wd = model.network().omega_d().unwrap_or(0.0);
    let n = model.n_nodes();
    let k_order = amps.k_order;
    let scale = amps.blocks.iter().map(|b| b.norm()).fold(1.0f64, f64::max);
    let mut worst = 0.0f64;
    for k in -k_order..=k_order {
        let mut defect = green_inverse_matrix(model, amps.omega - k as f64 * wd) * amps.a(k);
        for (j, vj) in model.network().harmonics() {
            let kj = k - j;
            if kj.abs() <= k_order {
                defect += vj * amps.a(kj);
            }
        }
        if k == 0 {
            for i in 0..n {
                defect[(i, i)] -= Complex64::new(1.0, 0.0);
            }
        }
        worst = worst.max(defect.norm());
    }
    worst / scale
}

/// First/second-order perturbative amplitudes for the single-pair drive
/// {+1, -1}; used as an oracle for the full solver, not in production paths.
pub fn perturbative_amplitudes(
    model: &Model,
    omega: f64,
) -> Result<FloquetAmplitudes, SolverError> {
    let wd = require_driven(model)?;
    let harmonics = model.network().harmonics();
    if harmonics.len() != 2 || model.network().max_harmonic() != 1 {
        return Err(SolverError::UnsupportedHarmonics);
    }
    let g = |w: f64| -> Result<DMatrix<Complex64>, SolverError> {
        Ok(static_solver::green_static(model, w)?.g)
    };
    let g0 = g(omega)?;
    let n = model.n_nodes();
    let k_order = 1;
    let mut blocks = vec![DMatrix::zeros(n, n); 3];

    // A_0 = G0 + sum_j G0 V_j G0(w + j wd) V_{-j} G0
    let mut a0 = g0.clone();
    for (j, vj) in harmonics {
        let vmj = &harmonics.iter().find(|(k, _)| k == &-j).unwrap().1;
        a0 += &g0 * vj * g(omega + *j as f64 * wd)? * vmj * &g0;
    }
    blocks[1] = a0;
    // A_{+-1} = -G0(w -+ wd) V_{+-1} G0
    for (j, vj) in harmonics {
        let ak = -(g(omega - *j as f64 * wd)? * vj * &g0);
        blocks[(j + 1) as usize] = ak;
    }

    let amps = FloquetAmplitudes { omega, k_order, blocks, residual: 0.0, condition: 1.0 };
    let residual = amplitude_defect(model, &amps);
    Ok(FloquetAmplitudes { residual, ..amps })
}

/// Scalar process rate r^k_ab(omega) for baths coupled to single nodes:
/// r^k_ab = pi Jtilde_a(omega - k wd) |A_k[n_a, n_b]|^2 Jtilde_b(omega).
fn rate_matrix(model: &Model, amps: &FloquetAmplitudes, k: i32, omega: f64) -> DMatrix<f64> {
    let wd = model.network().omega_d().unwrap();
    let nb = model.n_baths();
    let ak = amps.a(k);
    let mut r = DMatrix::zeros(nb, nb);
    let j_at: Vec<f64> = model.baths().iter().map(|b| model::ohmic_density(b, omega)).collect();
    let j_shift: Vec<f64> = model
        .baths()
        .iter()
        .map(|b| model::ohmic_density(b, omega - k as f64 * wd))
        .collect();
    for a in 0..nb {
        for b in 0..nb {
            let amp = ak[(model.bath(a).node, model.bath(b).node)];
            r[(a, b)] = std::f64::consts::PI * j_shift[a] * amp.norm_sqr() * j_at[b];
        }
    }
    r
}

/// Off-diagonal dynamical transfer T_ab and the work kernel Ttilde_a at one
/// frequency, from a solved amplitude set.
fn transfer_parts(model: &Model, amps: &FloquetAmplitudes, omega: f64) -> (DMatrix<f64>, Vec<f64>) {
    let wd = model.network().omega_d().unwrap();
    let nb = model.n_baths();
    let mut t = DMatrix::zeros(nb, nb);
    let mut t_tilde = vec![0.0; nb];
    for k in amps.k_range() {
        let r = rate_matrix(model, amps, k, omega);
        let shift = omega - k as f64 * wd;
        for a in 0..nb {
            for b in 0..nb {
                if a != b {
                    t[(a, b)] += shift * r[(a, b)];
                }
                t_tilde[b] += -(k as f64) * wd * r[(a, b)];
            }
        }
    }
    (t, t_tilde)
}

/// Dynamical transfer matrices, work kernels and process rates over a grid.
pub fn dynamic_transfer(
    model: &Model,
    grid: &[f64],
    k_order: Option<i32>,
) -> Result<DynamicTransferSet, SolverError> {
    require_driven(model)?;
    let k_order = k_order.unwrap_or_else(|| default_k(model));
    let nb = model.n_baths();
    let mut set = DynamicTransferSet {
        grid: grid.to_vec(),
        t: Vec::with_capacity(grid.len()),
        t_tilde: Vec::with_capacity(grid.len()),
        rates: Vec::with_capacity(grid.len()),
        conditions: Vec::with_capacity(grid.len()),
    };
    for &omega in grid {
        let amps = solve_amplitudes(model, omega, k_order)?;
        let (mut t, t_tilde) = transfer_parts(model, &amps, omega);
        for a in 0..nb {
            t[(a, a)] = t_tilde[a] - (0..nb).filter(|&b| b != a).map(|b| t[(b, a)]).sum::<f64>();
        }
        set.rates
            .push(amps.k_range().map(|k| (k, rate_matrix(model, &amps, k, omega))).collect());
        set.conditions.push(amps.condition);
        set.t.push(t);
        set.t_tilde.push(t_tilde);
    }
    Ok(set)
}

/// Integration half-range for driven current integrals.
pub(crate) fn driven_omega_max(model: &Model, k_order: i32) -> f64 {
    let wd = model.network().omega_d().unwrap_or(0.0);
    let nu_max = normal_modes(model).map(|m| m.frequencies.max()).unwrap_or(1.0);
    let cutoff = model.baths().iter().map(|b| b.cutoff).fold(0.0, f64::max);
    (5.0 * nu_max).max(3.0 * cutoff).max(nu_max + (k_order + 1) as f64 * wd)
}

fn driven_breakpoints(model: &Model, k_order: i32, omega_max: f64) -> Vec<f64> {
    let wd = model.network().omega_d().unwrap();
    let nus = normal_modes(model).map(|m| m.frequencies).unwrap_or_else(|_| DVector::zeros(0));
    let mut res = Vec::new();
    for k in -k_order..=k_order {
        for &nu in nus.iter() {
            res.push(nu + k as f64 * wd);
            res.push(-nu + k as f64 * wd);
        }
    }
    quad::breakpoints(&res, omega_max, 1e-9)
}

/// Layout of the shared vector integrand: per temperature set, the work
/// kernels and the ordered cross terms; for two-bath models one asymmetry
/// diagnostic column per set plus the integrated |T21 - T12|.
struct Components {
    nb: usize,
    sets: usize,
}

impl Components {
    fn dim(&self) -> usize {
        self.sets * self.per_set() + usize::from(self.nb == 2)
    }
    fn per_set(&self) -> usize {
        self.nb + self.nb * (self.nb - 1) + usize::from(self.nb == 2)
    }
    /// Ttilde_a (n_a + 1/2).
    fn c1(&self, set: usize, alpha: usize) -> usize {
        set * self.per_set() + alpha
    }
    /// T_ab (n_b + 1/2) for ordered pair (a, b), a != b.
    fn c2(&self, set: usize, a: usize, b: usize) -> usize {
        let pair = a * (self.nb - 1) + if b > a { b - 1 } else { b };
        set * self.per_set() + self.nb + pair
    }
    /// (T_10 - T_01)(n_0 + n_1 + 1), the quasi-current numerator kernel.
    fn c3(&self, set: usize) -> usize {
        debug_assert_eq!(self.nb, 2);
        set * self.per_set() + self.nb + self.nb * (self.nb - 1)
    }
    fn abs_asym(&self) -> usize {
        self.dim() - 1
    }
}

struct AveragedOutcome {
    reports: Vec<CurrentsReport>,
    /// Integral of (T_10 - T_01)(n_0 + n_1 + 1) per temperature set
    /// (two-bath models only).
    quasi_numerator: Vec<f64>,
    /// Integral of |T_10 - T_01| (two-bath models only).
    integrated_asymmetry: Option<f64>,
}

fn averaged_currents_multi(
    model: &Model,
    k_order: i32,
    rel_tol: f64,
    temp_sets: &[Vec<f64>],
) -> Result<AveragedOutcome, SolverError> {
    require_driven(model)?;
    let nb = model.n_baths();
    if nb < 2 {
        return Err(SolverError::TooFewBaths { needed: 2, got: nb });
    }
    let comps = Components { nb, sets: temp_sets.len() };
    let omega_max = driven_omega_max(model, k_order);
    let bp = driven_breakpoints(model, k_order, omega_max);
    let spec = QuadSpec { rel_tol, ..static_solver::quad_spec(model, rel_tol) };

    let mut failed_at: Option<(f64, f64)> = None;
    let mut eval = |omega: f64, out: &mut [f64]| {
        let amps = match solve_amplitudes(model, omega, k_order) {
            Ok(a) => a,
            Err(SolverError::Singular { omega, condition }) => {
                failed_at.get_or_insert((omega, condition));
                out.iter_mut().for_each(|x| *x = f64::NAN);
                return;
            }
            Err(_) => unreachable!("validated driven model"),
        };
        let (t, t_tilde) = transfer_parts(model, &amps, omega);
        for (s, temps) in temp_sets.iter().enumerate() {
            let occ: Vec<f64> =
                temps.iter().map(|&tt| model::occupation_plus_half(tt, omega)).collect();
            for a in 0..nb {
                out[comps.c1(s, a)] = t_tilde[a] * occ[a];
            }
            for a in 0..nb {
                for b in 0..nb {
                    if a != b {
                        out[comps.c2(s, a, b)] = t[(a, b)] * occ[b];
                    }
                }
            }
            if nb == 2 {
                out[comps.c3(s)] = (t[(1, 0)] - t[(0, 1)]) * (occ[0] + occ[1]);
            }
        }
        if nb == 2 {
            out[comps.abs_asym()] = (t[(1, 0)] - t[(0, 1)]).abs();
        }
    };

    // tail bound from the decay at the integration edges, assuming at least
    // omega^-5 falloff past the last resonance
    let mut edge = vec![0.0; comps.dim()];
    let mut tail = 0.0f64;
    eval(omega_max, &mut edge);
    tail += edge.iter().map(|x| x.abs()).fold(0.0, f64::max);
    eval(-omega_max, &mut edge);
    tail += edge.iter().map(|x| x.abs()).fold(0.0, f64::max);
    tail *= omega_max / 4.0;

    let out = quad::integrate_vec(&mut eval, comps.dim(), &bp, &spec)?;
    if let Some((omega, condition)) = failed_at {
        return Err(SolverError::Unstable(format!(
            "amplitude system singular at omega = {omega} (condition {condition:.3e})"
        )));
    }

    let mut reports = Vec::with_capacity(temp_sets.len());
    let mut quasi_numerator = Vec::with_capacity(temp_sets.len());
    for (s, temps) in temp_sets.iter().enumerate() {
        let mut heat = vec![0.0; nb];
        let mut work_local = vec![0.0; nb];
        for a in 0..nb {
            work_local[a] = out.value[comps.c1(s, a)];
            heat[a] = -out.value[comps.c1(s, a)];
            for b in 0..nb {
                if b != a {
                    heat[a] += out.value[comps.c2(s, b, a)] - out.value[comps.c2(s, a, b)];
                }
            }
        }
        let work_total: f64 = work_local.iter().sum();
        let residual = heat.iter().sum::<f64>() + work_total;
        reports.push(CurrentsReport {
            baths: model
                .baths()
                .iter()
                .enumerate()
                .map(|(i, b)| BathCurrents {
                    bath: i,
                    node: b.node,
                    temperature: temps[i],
                    heat: heat[i],
                    work_local: work_local[i],
                    quasi: heat[i] + work_local[i],
                })
                .collect(),
            work_total,
            first_law_residual: residual,
            quad_error: out.worst_relative,
            tail_bound: tail,
            omega_max,
            k_order: Some(k_order),
            driven: true,
        });
        if nb == 2 {
            quasi_numerator.push(out.value[comps.c3(s)]);
        }
    }
    Ok(AveragedOutcome {
        reports,
        quasi_numerator,
        integrated_asymmetry: (nb == 2).then(|| out.value[comps.abs_asym()]),
    })
}

const K_ESCALATION_TOL: f64 = 1e-6;
const K_MAX: i32 = 12;

fn reports_close(a: &[CurrentsReport], b: &[CurrentsReport], tol: f64) -> bool {
    let scale = a.iter().map(|r| r.current_scale()).fold(1e-300, f64::max);
    a.iter().zip(b).all(|(ra, rb)| {
        let dw = (ra.work_total - rb.work_total).abs();
        dw <= tol * scale
            && ra
                .baths
                .iter()
                .zip(&rb.baths)
                .all(|(x, y)| (x.heat - y.heat).abs() <= tol * scale)
    })
}

fn solve_with_auto_k(
    model: &Model,
    k_order: Option<i32>,
    rel_tol: f64,
    temp_sets: &[Vec<f64>],
) -> Result<AveragedOutcome, SolverError> {
    if let Some(k) = k_order {
        return averaged_currents_multi(model, k, rel_tol, temp_sets);
    }
    let mut k = default_k(model).min(K_MAX);
    let mut current = averaged_currents_multi(model, k, rel_tol, temp_sets)?;
    while k < K_MAX {
        let next_k = (k + 2).min(K_MAX);
        let next = averaged_currents_multi(model, next_k, rel_tol, temp_sets)?;
        let converged = reports_close(&current.reports, &next.reports, K_ESCALATION_TOL);
        current = next;
        k = next_k;
        if converged {
            break;
        }
    }
    Ok(current)
}

/// Period-averaged heat currents, local work rates and total work rate.
/// `k_order = None` applies the default truncation (max harmonic + 3) with
/// auto-escalation until the currents are K-converged or K reaches 12.
pub fn averaged_currents(model: &Model, k_order: Option<i32>) -> Result<CurrentsReport, SolverError> {
    averaged_currents_with_tol(model, k_order, 1e-7)
}

pub fn averaged_currents_with_tol(
    model: &Model,
    k_order: Option<i32>,
    rel_tol: f64,
) -> Result<CurrentsReport, SolverError> {
    let temps = model.temperatures();
    let out = solve_with_auto_k(model, k_order, rel_tol, &[temps])?;
    Ok(out.reports.into_iter().next().unwrap())
}

/// Forward and temperature-swapped reports from a single quadrature pass:
/// the amplitudes are temperature-independent, so both configurations share
/// every frequency evaluation.
pub fn averaged_currents_forward_reversed(
    model: &Model,
    k_order: Option<i32>,
    rel_tol: f64,
) -> Result<(CurrentsReport, CurrentsReport), SolverError> {
    let fwd = model.temperatures();
    let mut rev = fwd.clone();
    rev.swap(0, 1);
    let out = solve_with_auto_k(model, k_order, rel_tol, &[fwd, rev])?;
    let mut it = out.reports.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

/// Two-bath diagnostics for rectification studies: forward and reversed
/// reports plus the quasi-current numerator integral of
/// (T21 - T12)(n1 + n2 + 1) and the integrated absolute transfer asymmetry.
pub struct DrivenPair {
    pub forward: CurrentsReport,
    pub reversed: CurrentsReport,
    pub quasi_numerator_forward: f64,
    pub integrated_asymmetry: f64,
}

pub fn driven_pair(
    model: &Model,
    k_order: Option<i32>,
    rel_tol: f64,
) -> Result<DrivenPair, SolverError> {
    if model.n_baths() != 2 {
        return Err(SolverError::TooFewBaths { needed: 2, got: model.n_baths() });
    }
    let fwd = model.temperatures();
    let mut rev = fwd.clone();
    rev.swap(0, 1);
    let out = solve_with_auto_k(model, k_order, rel_tol, &[fwd, rev])?;
    let mut it = out.reports.into_iter();
    Ok(DrivenPair {
        forward: it.next().unwrap(),
        reversed: it.next().unwrap(),
        quasi_numerator_forward: out.quasi_numerator[0],
        integrated_asymmetry: out.integrated_asymmetry.unwrap(),
    })
}

/// Stability heuristic for the driven network.
///
/// Tier (a), Markovian proxy: the monodromy matrix of
/// M xdd + 2 Gamma xd + V(t) x = 0 over one period; any Floquet multiplier
/// with modulus beyond 1 + 1e-9 flags parametric instability.
/// Tier (b), spectral probe: the amplitude block system must stay
/// well-conditioned at a set of probe frequencies.
pub fn stability_check(model: &Model) -> Result<StabilityReport, SolverError> {
    let wd = require_driven(model)?;
    let tau = 2.0 * std::f64::consts::PI / wd;
    let n = model.n_nodes();
    let dim = 2 * n;

    let mut gamma = vec![0.0; n];
    for b in model.baths() {
        gamma[b.node] = b.gamma;
    }
    let masses = model.network().masses();

    let nu_max = normal_modes(model).map(|m| m.frequencies.max()).unwrap_or(1.0);
    let freq_scale = nu_max.max(wd).max(1.0);
    let steps = ((tau * freq_scale / 0.02).ceil() as usize).max(64);
    let dt = tau / steps as f64;

    let rhs = |t: f64, y: &DMatrix<f64>| -> DMatrix<f64> {
        let v = model.network().potential_at(t);
        let mut dy = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            for i in 0..n {
                let vx: f64 = (0..n).map(|j| v[(i, j)] * y[(j, c)]).sum();
                dy[(i, c)] = y[(n + i, c)] / masses[i];
                dy[(n + i, c)] = -vx - 2.0 * gamma[i] * y[(n + i, c)];
            }
        }
        dy
    };

    let mut phi = DMatrix::<f64>::identity(dim, dim);
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = rhs(t, &phi);
        let k2 = rhs(t + 0.5 * dt, &(&phi + 0.5 * dt * &k1));
        let k3 = rhs(t + 0.5 * dt, &(&phi + 0.5 * dt * &k2));
        let k4 = rhs(t + dt, &(&phi + dt * &k3));
        phi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += dt;
    }

    let multipliers = phi.complex_eigenvalues();
    let worst_multiplier = multipliers.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let markov_stable = worst_multiplier <= 1.0 + 1e-9;

    let nus = normal_modes(model).map(|m| m.frequencies).unwrap_or_else(|_| DVector::zeros(0));
    let mut probes: Vec<f64> = nus.iter().copied().collect();
    probes.extend(nus.iter().map(|&x| 0.5 * x));
    probes.push(0.5 * wd);
    probes.push(wd);
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.dedup();

    let k_order = default_k(model);
    let mut worst_condition = 1.0f64;
    for &w in &probes {
        match solve_amplitudes(model, w, k_order) {
            Ok(a) => worst_condition = worst_condition.max(a.condition),
            Err(_) => worst_condition = f64::INFINITY,
        }
    }
    let spectral_ok = worst_condition < 1e10;

    Ok(StabilityReport {
        markov_stable,
        worst_multiplier,
        spectral_ok,
        worst_condition,
        probe_frequencies: probes,
    })
}
