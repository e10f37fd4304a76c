//! Static Green's function, heat-transfer matrix, steady-state currents and
//! normal modes of the undriven network.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{self, BathSpec, Model};
use crate::quad::{self, QuadError, QuadSpec};
use crate::report::{BathCurrents, CurrentsReport, TransferSet};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Green's function is numerically singular at omega = {omega}: condition {condition:.3e} (undamped resonance?)")]
    Singular { omega: f64, condition: f64 },
    #[error("static potential has a negative eigenvalue {0:.6e} (unstable network)")]
    UnstablePotential(f64),
    #[error("operation needs at least {needed} baths, model has {got}")]
    TooFewBaths { needed: usize, got: usize },
    #[error("quadrature did not converge")]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error("K = {requested} is smaller than the largest stored harmonic {max_harmonic}")]
    TruncationTooSmall { requested: i32, max_harmonic: i32 },
    #[error("model is not driven (no harmonics / omega_d)")]
    NotDriven,
    #[error("operation supports only the k = +-1 harmonic pair, model has others")]
    UnsupportedHarmonics,
    #[error("driven model is parametrically unstable: {0}")]
    Unstable(String),
    #[error("transistor response undefined: the control derivative of the energy source vanishes")]
    TransistorUndefined,
    #[error("no transport: both currents below the degeneracy floor")]
    NoTransport,
}

/// Green's function sample at one frequency.
#[derive(Debug, Clone)]
pub struct GreenSample {
    pub omega: f64,
    pub g: DMatrix<Complex64>,
    /// 1-norm condition estimate of the inverted matrix.
    pub condition: f64,
}

/// Normal modes of the whitened static potential.
#[derive(Debug, Clone)]
pub struct NormalModes {
    /// Mode frequencies nu_i, ascending.
    pub frequencies: DVector<f64>,
    /// Orthonormal eigenvectors as columns, matching `frequencies`.
    pub vectors: DMatrix<f64>,
    /// Mixing angle, defined for N = 2 only: tan(2 theta) = -2 c0 / Delta.
    pub theta: Option<f64>,
}

const CONDITION_LIMIT: f64 = 1e12;

/// G0(omega) = (-omega^2 M + V0 - i pi J(omega))^{-1}, with Re chi dropped
/// (v0 is the renormalized potential).
pub fn green_static(model: &Model, omega: f64) -> Result<GreenSample, SolverError> {
    invert_checked(green_inverse_matrix(model, omega), omega)
}

/// The matrix being inverted in [`green_static`]; also the diagonal block of
/// the Floquet amplitude system.
pub(crate) fn green_inverse_matrix(model: &Model, omega: f64) -> DMatrix<Complex64> {
    let n = model.n_nodes();
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let v0 = model.network().v0();
    let masses = model.network().masses();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = Complex64::new(v0[(i, j)], 0.0);
        }
        a[(i, i)] -= Complex64::new(omega * omega * masses[i], 0.0);
    }
    for b in model.baths() {
        a[(b.node, b.node)] -=
            Complex64::new(0.0, std::f64::consts::PI * model::ohmic_density(b, omega));
    }
    a
}

fn invert_checked(a: DMatrix<Complex64>, omega: f64) -> Result<GreenSample, SolverError> {
    let condition = crate::linalg::condition_1(&a);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(SolverError::Singular { omega, condition });
    }
    let g = a.try_inverse().ok_or(SolverError::Singular { omega, condition: f64::INFINITY })?;
    Ok(GreenSample { omega, g, condition })
}

/// Normal-mode data for the two-oscillator reference network
/// v0 = [[w1^2 + c0, -c0], [-c0, w2^2 + c0]].
pub fn two_osc_modes(omega1: f64, omega2: f64, c0: f64) -> (f64, f64, f64) {
    let delta = omega2 * omega2 - omega1 * omega1;
    let r = (c0 * c0 + 0.25 * delta * delta).sqrt();
    let mean = omega1 * omega1 + c0 + 0.5 * delta;
    let nu1_sq = mean - r;
    let nu2_sq = mean + r;
    // branch chosen so that u1 = (sin t, cos t) is the nu1 eigenvector
    let theta = 0.5 * (2.0 * c0).atan2(-delta);
    (nu1_sq, nu2_sq, theta)
}

/// Closed-form static Green's function for two unit-mass oscillators coupled
/// to identical Ohmic reservoirs: G0 = sum_i u_i u_i^T / L_i(omega) with
/// L_i = nu_i^2 - omega^2 - i pi Jtilde(omega).
pub fn analytic_green_two_osc(
    omega1: f64,
    omega2: f64,
    c0: f64,
    gamma: f64,
    cutoff: f64,
    omega: f64,
) -> Matrix2<Complex64> {
    let (nu1_sq, nu2_sq, theta) = two_osc_modes(omega1, omega2, c0);
    let bath = BathSpec { node: 0, temperature: 1.0, gamma, cutoff };
    let damping = Complex64::new(0.0, std::f64::consts::PI * model::ohmic_density(&bath, omega));
    let l1 = Complex64::new(nu1_sq - omega * omega, 0.0) - damping;
    let l2 = Complex64::new(nu2_sq - omega * omega, 0.0) - damping;
    let (s, c) = theta.sin_cos();
    let inv1 = l1.inv();
    let inv2 = l2.inv();
    Matrix2::new(
        s * s * inv1 + c * c * inv2,
        s * c * (inv1 - inv2),
        s * c * (inv1 - inv2),
        c * c * inv1 + s * s * inv2,
    )
}

/// Static heat-transfer matrix over bath pairs:
/// T0_ab(omega) = pi omega Jtilde_a Jtilde_b |G0[n_a, n_b]|^2 for a != b,
/// diagonal fixed by the row-sum-zero conservation rule.
pub fn transfer_static(model: &Model, omega: f64) -> Result<DMatrix<f64>, SolverError> {
    let nb = model.n_baths();
    if nb < 2 {
        return Err(SolverError::TooFewBaths { needed: 2, got: nb });
    }
    let g = green_static(model, omega)?;
    Ok(transfer_from_green(model, omega, &g.g))
}

pub(crate) fn transfer_from_green(model: &Model, omega: f64, g: &DMatrix<Complex64>) -> DMatrix<f64> {
    let nb = model.n_baths();
    let mut t = DMatrix::zeros(nb, nb);
    let j: Vec<f64> = model.baths().iter().map(|b| model::ohmic_density(b, omega)).collect();
    for a in 0..nb {
        for b in 0..nb {
            if a != b {
                let gab = g[(model.bath(a).node, model.bath(b).node)];
                t[(a, b)] = std::f64::consts::PI * omega * j[a] * j[b] * gab.norm_sqr();
            }
        }
    }
    for a in 0..nb {
        t[(a, a)] = -(0..nb).filter(|&b| b != a).map(|b| t[(a, b)]).sum::<f64>();
    }
    t
}

/// The alpha = beta trace-formula diagonal, exposed for comparison with the
/// canonical row-sum completion: it differs by the renormalized Re chi part.
pub fn transfer_static_trace_diagonal(model: &Model, omega: f64) -> Result<Vec<f64>, SolverError> {
    let g = green_static(model, omega)?;
    Ok((0..model.n_baths())
        .map(|a| {
            let ja = model::ohmic_density(model.bath(a), omega);
            let gaa = g.g[(model.bath(a).node, model.bath(a).node)];
            std::f64::consts::PI * omega * ja * ja * gaa.norm_sqr()
        })
        .collect())
}

/// Integration half-range for static current integrals.
pub(crate) fn static_omega_max(model: &Model) -> f64 {
    let nu_max = normal_modes(model).map(|m| m.frequencies.max()).unwrap_or(1.0);
    let cutoff = model.baths().iter().map(|b| b.cutoff).fold(0.0, f64::max);
    (5.0 * nu_max).max(3.0 * cutoff)
}

pub(crate) fn min_gamma(model: &Model) -> f64 {
    model.baths().iter().map(|b| b.gamma).fold(f64::INFINITY, f64::min)
}

/// Quadrature spec honoring the resonance-width floor gamma/10.
pub(crate) fn quad_spec(model: &Model, rel_tol: f64) -> QuadSpec {
    QuadSpec {
        rel_tol,
        min_width: (min_gamma(model) / 10.0).min(1e-3),
        max_depth: 48,
    }
}

/// Steady-state currents of the static network, Eq.-(9)-style:
/// Qdot_a = sum_{b != a} integral T0_ab (n_a - n_b).
pub fn static_currents(model: &Model) -> Result<CurrentsReport, SolverError> {
    static_currents_with_tol(model, 1e-7)
}

pub fn static_currents_with_tol(model: &Model, rel_tol: f64) -> Result<CurrentsReport, SolverError> {
    let nb = model.n_baths();
    if nb < 2 {
        return Err(SolverError::TooFewBaths { needed: 2, got: nb });
    }
    let modes = normal_modes(model)?;
    let omega_max = static_omega_max(model);
    let mut resonances = Vec::new();
    for &nu in modes.frequencies.iter() {
        resonances.push(nu);
        resonances.push(-nu);
    }
    let bp = quad::breakpoints(&resonances, omega_max, 1e-9);
    let spec = quad_spec(model, rel_tol);

    let temps = model.temperatures();
    let pairs: Vec<(usize, usize)> = (0..nb)
        .flat_map(|a| (a + 1..nb).map(move |b| (a, b)))
        .collect();
    let dim = pairs.len();

    // components: integral of T0_ab (n_a - n_b) per unordered pair
    let mut tail = 0.0f64;
    {
        let mut probe = vec![0.0; dim];
        let mut eval = integrand(model, &pairs, &temps);
        eval(omega_max, &mut probe);
        let t1: f64 = probe.iter().map(|x| x.abs()).sum();
        eval(-omega_max, &mut probe);
        let t2: f64 = probe.iter().map(|x| x.abs()).sum();
        // |integrand| decays at least like omega^-5 past the resonances
        tail = tail.max((t1 + t2) * omega_max / 4.0);
    }

    let out = quad::integrate_vec(integrand(model, &pairs, &temps), dim, &bp, &spec)?;

    let mut heat = vec![0.0; nb];
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        heat[a] += out.value[idx];
        heat[b] -= out.value[idx];
    }
    let residual = heat.iter().sum::<f64>();
    Ok(CurrentsReport {
        baths: model
            .baths()
            .iter()
            .enumerate()
            .map(|(i, b)| BathCurrents {
                bath: i,
                node: b.node,
                temperature: b.temperature,
                heat: heat[i],
                work_local: 0.0,
                quasi: heat[i],
            })
            .collect(),
        work_total: 0.0,
        first_law_residual: residual,
        quad_error: out.worst_relative,
        tail_bound: tail,
        omega_max,
        k_order: None,
        driven: false,
    })
}

fn integrand<'m>(
    model: &'m Model,
    pairs: &'m [(usize, usize)],
    temps: &'m [f64],
) -> impl FnMut(f64, &mut [f64]) + 'm {
    move |omega, out| {
        let g = match green_static(model, omega) {
            Ok(g) => g.g,
            Err(_) => {
                out.iter_mut().for_each(|x| *x = f64::NAN);
                return;
            }
        };
        let t = transfer_from_green(model, omega, &g);
        for (idx, &(a, b)) in pairs.iter().enumerate() {
            let occ = model::occupation_diff(temps[a], temps[b], omega);
            out[idx] = t[(a, b)] * occ;
        }
    }
}

/// Sample the static transfer matrix over an explicit grid, for export.
pub fn transfer_set(model: &Model, grid: &[f64]) -> Result<TransferSet, SolverError> {
    let nb = model.n_baths();
    let mut transfer = Vec::with_capacity(grid.len());
    for &w in grid {
        let t = transfer_static(model, w)?;
        transfer.push(t.iter().copied().collect());
    }
    Ok(TransferSet { grid: grid.to_vec(), transfer, n_baths: nb })
}

/// Normal modes of M^{-1/2} V0 M^{-1/2}, ascending; errors out on a negative
/// eigenvalue (imaginary mode frequency).
pub fn normal_modes(model: &Model) -> Result<NormalModes, SolverError> {
    let n = model.n_nodes();
    let v0 = model.network().v0();
    let masses = model.network().masses();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = v0[(i, j)] / (masses[i] * masses[j]).sqrt();
        }
    }
    let eig = SymmetricEigen::new(w);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut freqs = DVector::zeros(n);
    let mut vecs = DMatrix::zeros(n, n);
    for (pos, &idx) in order.iter().enumerate() {
        let lam = eig.eigenvalues[idx];
        if lam < 0.0 {
            return Err(SolverError::UnstablePotential(lam));
        }
        freqs[pos] = lam.sqrt();
        vecs.set_column(pos, &eig.eigenvectors.column(idx));
    }

    let theta = if n == 2 {
        let delta = v0[(1, 1)] - v0[(0, 0)];
        let c0 = -v0[(0, 1)];
        Some(0.5 * (2.0 * c0).atan2(-delta))
    } else {
        None
    };
    Ok(NormalModes { frequencies: freqs, vectors: vecs, theta })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{BathSpec, NetworkSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn paper_static_model() -> Model {
        two_osc_model(2.0, 1.0, 0.2, 0.01, 10.0, 1.2, 1.0)
    }

    pub(crate) fn two_osc_model(
        w1: f64,
        w2: f64,
        c0: f64,
        gamma: f64,
        cutoff: f64,
        t1: f64,
        t2: f64,
    ) -> Model {
        let v0 = DMatrix::from_row_slice(
            2,
            2,
            &[w1 * w1 + c0, -c0, -c0, w2 * w2 + c0],
        );
        let net = NetworkSpec::new_static(DVector::from_element(2, 1.0), v0).unwrap();
        Model::new(
            net,
            vec![
                BathSpec::new(0, t1, gamma, cutoff).unwrap(),
                BathSpec::new(1, t2, gamma, cutoff).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_oscillator_zero_frequency_green() {
        let w1: f64 = 1.7;
        let net = NetworkSpec::new_static(
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, w1 * w1),
        )
        .unwrap();
        let m = Model::new(net, vec![BathSpec::new(0, 1.0, 0.01, 10.0).unwrap()]).unwrap();
        let g = green_static(&m, 0.0).unwrap();
        assert_relative_eq!(g.g[(0, 0)].re, 1.0 / (w1 * w1), max_relative = 1e-14);
        assert_abs_diff_eq!(g.g[(0, 0)].im, 0.0);
    }

    #[test]
    fn undamped_resonance_is_singular() {
        // no baths: exactly singular at the mode frequency
        let net = NetworkSpec::new_static(
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, 4.0),
        )
        .unwrap();
        let m = Model::new(net, vec![]).unwrap();
        assert!(matches!(
            green_static(&m, 2.0),
            Err(SolverError::Singular { .. })
        ));
    }

    #[test]
    fn two_osc_mode_frequencies_against_eigensolver() {
        // independent oracle: generic symmetric eigensolver on V0
        let (nu1_sq, nu2_sq, theta) = two_osc_modes(2.0, 1.0, 0.2);
        let m = paper_static_model();
        let modes = normal_modes(&m).unwrap();
        assert_relative_eq!(nu1_sq, modes.frequencies[0].powi(2), max_relative = 1e-12);
        assert_relative_eq!(nu2_sq, modes.frequencies[1].powi(2), max_relative = 1e-12);
        // closed forms quoted to ~6 figures
        assert_abs_diff_eq!(nu1_sq, 2.7 - 2.29f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(nu2_sq, 2.7 + 2.29f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(modes.frequencies[0], 1.08937, epsilon = 1e-5);
        assert_abs_diff_eq!(modes.frequencies[1], 2.05263, epsilon = 1e-5);
        // theta from the arctangent of the closed form
        assert_relative_eq!((2.0 * theta).tan(), 2.0 / 15.0, max_relative = 1e-12);
        assert_abs_diff_eq!(theta, 0.5 * (2.0f64 / 15.0).atan(), epsilon = 1e-15);
        // and u1 = (sin t, cos t) really is the nu1 eigenvector
        let v0 = m.network().v0();
        let u1 = DVector::from_vec(vec![theta.sin(), theta.cos()]);
        let resid = (v0 * &u1 - nu1_sq * &u1).norm();
        assert!(resid < 1e-12);
    }

    #[test]
    fn analytic_green_matches_generic_inverse() {
        let m = paper_static_model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let w = rng.gen_range(-8.0..8.0);
            let ga = analytic_green_two_osc(2.0, 1.0, 0.2, 0.01, 10.0, w);
            let gn = green_static(&m, w).unwrap().g;
            for i in 0..2 {
                for j in 0..2 {
                    let d = (ga[(i, j)] - gn[(i, j)]).norm();
                    assert!(d < 1e-10, "entry ({i},{j}) differs by {d:.2e} at w={w}");
                }
            }
        }
    }

    #[test]
    fn analytic_green_at_zero_is_v0_inverse() {
        let g = analytic_green_two_osc(2.0, 1.0, 0.2, 0.01, 10.0, 0.0);
        // V0^{-1} for the paper parameters: det = 5, [[1.2, .2],[.2, 4.2]]/5
        assert_relative_eq!(g[(0, 0)].re, 0.24, max_relative = 1e-12);
        assert_relative_eq!(g[(0, 1)].re, 0.04, max_relative = 1e-12);
        assert_relative_eq!(g[(1, 1)].re, 0.84, max_relative = 1e-12);
        assert!(g[(0, 0)].im.abs() < 1e-15);
    }

    #[test]
    fn decoupled_network_has_zero_off_diagonal() {
        let m = two_osc_model(2.0, 1.0, 0.0, 0.01, 10.0, 1.2, 1.0);
        let g = green_static(&m, 1.3).unwrap().g;
        assert_eq!(g[(0, 1)], Complex64::new(0.0, 0.0));
        // and the transfer between the baths vanishes identically
        let t = transfer_static(&m, 1.3).unwrap();
        assert_eq!(t[(0, 1)], 0.0);
    }

    #[test]
    fn green_symmetry_and_reality_properties() {
        let m = paper_static_model();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let w = rng.gen_range(0.01..12.0);
            let g = green_static(&m, w).unwrap().g;
            // complex-symmetric
            assert!((g[(0, 1)] - g[(1, 0)]).norm() < 1e-12);
            // G0(-w) = conj(G0(w))
            let gm = green_static(&m, -w).unwrap().g;
            for i in 0..2 {
                for j in 0..2 {
                    assert!((gm[(i, j)] - g[(i, j)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn green_poles_in_lower_half_plane() {
        // L_i(w) = nu_i^2 - w^2 - i pi J(w): its root near +nu_i must have a
        // strictly negative imaginary part (causal damping)
        let (nu1_sq, _, _) = two_osc_modes(2.0, 1.0, 0.2);
        let bath = BathSpec::new(0, 1.0, 0.01, 10.0).unwrap();
        let li = |z: Complex64| {
            let l2 = bath.cutoff * bath.cutoff;
            let jz = 2.0 * bath.gamma * z * l2
                / (std::f64::consts::PI * (z * z + Complex64::new(l2, 0.0)));
            Complex64::new(nu1_sq, 0.0) - z * z - Complex64::new(0.0, std::f64::consts::PI) * jz
        };
        // Newton from nu1
        let mut z = Complex64::new(nu1_sq.sqrt(), 0.0);
        for _ in 0..60 {
            let h = Complex64::new(1e-7, 0.0);
            let d = (li(z + h) - li(z - h)) / (2.0 * h);
            z -= li(z) / d;
        }
        assert!(li(z).norm() < 1e-12);
        assert!(z.im < 0.0, "pole at {z} not in the lower half plane");
    }

    #[test]
    fn transfer_matrix_is_symmetric_with_zero_row_sums() {
        let m = paper_static_model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w = rng.gen_range(-10.0..10.0);
            let t = transfer_static(&m, w).unwrap();
            assert!((t[(0, 1)] - t[(1, 0)]).abs() < 1e-12);
            assert!((t[(0, 0)] + t[(0, 1)]).abs() < 1e-15);
        }
    }

    #[test]
    fn trace_diagonal_differs_from_row_sum_completion() {
        // the renormalized Re chi contribution makes the alpha = beta trace
        // value distinct from the conservation completion
        let m = paper_static_model();
        let w = 1.5;
        let t = transfer_static(&m, w).unwrap();
        let tr = transfer_static_trace_diagonal(&m, w).unwrap();
        assert!((t[(0, 0)] - tr[0]).abs() > 1e-12);
    }

    #[test]
    fn equal_temperatures_carry_no_current() {
        let m = two_osc_model(2.0, 1.0, 0.2, 0.01, 10.0, 1.0, 1.0);
        let r = static_currents(&m).unwrap();
        assert!(r.heat(0).abs() < 1e-12);
        assert!(r.heat(1).abs() < 1e-12);
    }

    #[test]
    fn paper_parameters_current_value_and_antisymmetry() {
        let m = paper_static_model();
        let r = static_currents(&m).unwrap();
        assert!(r.heat(0) > 0.0, "heat must flow out of the hot bath");
        // regression value, cross-checked against the discrete-bath oracle
        // (acceptance suite) and an independent quadrature
        assert_relative_eq!(r.heat(0), 2.851099212e-5, max_relative = 1e-6);
        assert!(r.first_law_residual.abs() < 1e-8 * r.current_scale() + 1e-14);

        let rev = static_currents(&m.with_swapped_temperatures()).unwrap();
        let rect = (r.heat(0) + rev.heat(0)).abs() / r.heat(0).abs().max(rev.heat(0).abs());
        assert!(rect < 1e-6, "static rectification {rect:.2e} should vanish");
    }

    #[test]
    fn transfer_regression_at_nu1() {
        // regression fixture for T0_12 at the lower resonance
        let m = paper_static_model();
        let modes = normal_modes(&m).unwrap();
        let t = transfer_static(&m, modes.frequencies[0]).unwrap();
        assert_relative_eq!(t[(0, 1)], 1.514146106e-3, max_relative = 1e-6);
    }

    #[test]
    fn normal_modes_diagonal_and_error_cases() {
        let net = NetworkSpec::new_static(
            DVector::from_element(2, 1.0),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]),
        )
        .unwrap();
        let m = Model::new(net, vec![]).unwrap();
        let modes = normal_modes(&m).unwrap();
        assert_relative_eq!(modes.frequencies[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(modes.frequencies[1], 2.0, max_relative = 1e-12);
        // decoupled: tan(2 theta) = 0; with the softer oscillator on node 0
        // the branch that keeps u1 = (sin t, cos t) on the nu1 mode is pi/2
        let theta = modes.theta.unwrap();
        assert!((2.0 * theta).tan().abs() < 1e-14);
        let u1 = DVector::from_vec(vec![theta.sin(), theta.cos()]);
        let v0 = m.network().v0();
        assert!((v0 * &u1 - modes.frequencies[0].powi(2) * &u1).norm() < 1e-12);

        let net = NetworkSpec::new_static(
            DVector::from_element(2, 1.0),
            DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]),
        )
        .unwrap();
        let m = Model::new(net, vec![]).unwrap();
        assert!(matches!(normal_modes(&m), Err(SolverError::UnstablePotential(_))));
    }

    #[test]
    fn normal_modes_residual_and_orthonormality() {
        let m = paper_static_model();
        let modes = normal_modes(&m).unwrap();
        let v0 = m.network().v0();
        for i in 0..2 {
            let u = modes.vectors.column(i);
            let resid = (v0 * u - modes.frequencies[i].powi(2) * u).norm();
            assert!(resid < 1e-10);
        }
        let gram = modes.vectors.transpose() * &modes.vectors;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
        // N = 2 mixing-angle identity
        let theta = modes.theta.unwrap();
        assert_relative_eq!((2.0 * theta).tan(), 2.0 / 15.0, max_relative = 1e-10);
    }

    #[test]
    fn random_static_ensemble_zero_rectification() {
        // compact version of the acceptance criterion: random stable
        // networks never rectify
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..10 {
            let n = rng.gen_range(2..=4);
            let m = random_static_model(&mut rng, n);
            let fwd = static_currents(&m).unwrap();
            let rev = static_currents(&m.with_swapped_temperatures()).unwrap();
            let scale = fwd.heat(0).abs().max(rev.heat(0).abs());
            if scale < 1e-14 {
                continue;
            }
            let r = (fwd.heat(0) + rev.heat(0)).abs() / scale;
            assert!(r < 1e-6, "case {case}: R = {r:.3e}");
        }
    }

    pub(crate) fn random_static_model(rng: &mut ChaCha8Rng, n: usize) -> Model {
        // random symmetric v0 with a comfortably positive spectrum
        loop {
            let mut v0 = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let x = rng.gen_range(-0.5..0.5);
                    v0[(i, j)] = x;
                    v0[(j, i)] = x;
                }
                v0[(i, i)] = rng.gen_range(1.0..6.0);
            }
            let net = NetworkSpec::new_static(DVector::from_element(n, 1.0), v0).unwrap();
            let probe = Model::new(net.clone(), vec![]).unwrap();
            if let Ok(modes) = normal_modes(&probe) {
                if modes.frequencies[0] > 0.3 {
                    // two baths on distinct random nodes
                    let a = rng.gen_range(0..n);
                    let b = (a + rng.gen_range(1..n)) % n;
                    let t1 = rng.gen_range(0.5..2.0);
                    let t2 = rng.gen_range(0.5..2.0);
                    let g1 = rng.gen_range(0.005..0.05);
                    let g2 = rng.gen_range(0.005..0.05);
                    return Model::new(
                        net,
                        vec![
                            BathSpec::new(a, t1, g1, 10.0).unwrap(),
                            BathSpec::new(b, t2, g2, 10.0).unwrap(),
                        ],
                    )
                    .unwrap();
                }
            }
        }
    }
}
