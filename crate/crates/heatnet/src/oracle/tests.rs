use approx::{assert_abs_diff_eq, assert_relative_eq};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::*;
use crate::model::{BathSpec, NetworkSpec};
use crate::oracle::star::BathModes;

fn mini_static_model(gamma: f64, t1: f64, t2: f64) -> Model {
    let v0 = DMatrix::from_row_slice(2, 2, &[4.2, -0.2, -0.2, 1.2]);
    let net = NetworkSpec::new_static(DVector::from_element(2, 1.0), v0).unwrap();
    Model::new(
        net,
        vec![
            BathSpec::new(0, t1, gamma, 4.0).unwrap(),
            BathSpec::new(1, t2, gamma, 4.0).unwrap(),
        ],
    )
    .unwrap()
}

/// Same network but routed through the factor engine by attaching a
/// zero-strength drive.
fn mini_driven_model(gamma: f64, v1: f64, omega_d: f64, t1: f64, t2: f64) -> Model {
    let v0 = DMatrix::from_row_slice(2, 2, &[4.2, -0.2, -0.2, 1.2]);
    let mut h = DMatrix::zeros(2, 2);
    h[(0, 0)] = Complex64::new(v1, 0.0);
    let net = NetworkSpec::new_driven(
        DVector::from_element(2, 1.0),
        v0,
        vec![(1, h.clone()), (-1, h)],
        omega_d,
    )
    .unwrap();
    Model::new(
        net,
        vec![
            BathSpec::new(0, t1, gamma, 4.0).unwrap(),
            BathSpec::new(1, t2, gamma, 4.0).unwrap(),
        ],
    )
    .unwrap()
}

#[test]
fn thermal_covariance_limits() {
    // classical equipartition: <xx> -> T / w^2 for T >> w
    let w = 2.0;
    let big_t = 500.0;
    let xx = coth_half(w, big_t) / (2.0 * w);
    assert_relative_eq!(xx, big_t / (w * w), max_relative = 1e-3);
    // zero temperature: minimum uncertainty <xx><pp> = 1/4
    let xx0 = coth_half(w, 0.0) / (2.0 * w);
    let pp0 = 0.5 * w * coth_half(w, 0.0);
    assert_abs_diff_eq!(xx0 * pp0, 0.25, epsilon = 1e-15);
}

#[test]
fn initial_covariance_is_positive() {
    let model = mini_static_model(0.05, 1.2, 1.0);
    let star = StarModel::assemble(&model, 64, 8.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
    // system blocks PD (factorization succeeds) and the ground state is
    // minimum-uncertainty: defect of the Heisenberg form is ~0
    let defect = heisenberg_defect(&init.sys_xx, &DMatrix::zeros(2, 2), &init.sys_pp);
    assert!(defect < 1e-12, "ground-state defect {defect:.3e}");
    // bath occupations positive
    assert!(init.mode_xx.iter().all(|&x| x > 0.0));
    assert!(init.mode_pp.iter().all(|&x| x > 0.0));
}

#[test]
fn ground_state_covariance_matches_half_inverse_sqrt() {
    // for unit masses: <XX> = V0^{-1/2}/2, <PP> = V0^{1/2}/2
    let model = mini_static_model(0.05, 1.0, 1.0);
    let star = StarModel::assemble(&model, 64, 8.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
    let prod = &init.sys_xx * &init.sys_pp;
    // <XX><PP> = 1/4 identity for a pure Gaussian ground state
    assert!((prod - DMatrix::identity(2, 2) * 0.25).norm() < 1e-12);
}

#[test]
fn zero_coupling_bath_keeps_energy_and_currents_zero() {
    let net = NetworkSpec::new_static(
        DVector::from_element(1, 1.0),
        DMatrix::from_element(1, 1, 4.0),
    )
    .unwrap();
    let m_modes = 64;
    let dw = 8.0 / m_modes as f64;
    let omegas: Vec<f64> = (0..m_modes).map(|mu| (mu as f64 + 0.5) * dw).collect();
    let modes = BathModes::from_parts(0, 1.0, omegas, vec![0.0; m_modes], dw);
    let star = StarModel::from_bath_modes(net, vec![modes]).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::Thermal(2.0)).unwrap();
    let settings = OracleSettings {
        m_modes,
        omega_max: 8.0,
        dt: 2e-3,
        transient: 2.0,
        window: 20.0,
        sample_dt: 0.1,
        system_init: SystemInit::Thermal(2.0),
    };
    let traj = propagate(&star, &init, &settings).unwrap();
    for a in 0..1 {
        assert!(traj.currents_commutator[a].iter().all(|q| q.abs() < 1e-14));
        assert!(traj.currents_bath_energy[a].iter().all(|q| q.abs() < 1e-14));
        let e0 = traj.h_bath[a][0];
        assert!(traj.h_bath[a].iter().all(|&e| (e - e0).abs() < 1e-10 * e0));
    }
    // the decoupled system keeps oscillating: <xx> is not constant in
    // a thermal-but-squeezed-free case; here it IS stationary (thermal),
    // so just check it stays near its initial value
    let x0 = traj.sigma_xx[0][(0, 0)];
    assert!(traj.sigma_xx.iter().all(|s| (s[(0, 0)] - x0).abs() < 1e-8 * x0.abs()));
}

#[test]
fn probe_and_factor_engines_agree() {
    // the same physical network routed through both engines: static probe
    // run vs zero-strength-drive factor run
    let gamma = 0.05;
    let m_static = mini_static_model(gamma, 1.3, 0.9);
    let m_driven = mini_driven_model(gamma, 0.0, 2.0, 1.3, 0.9);

    let m_modes = 128;
    let omega_max = 8.0;
    let star_s = StarModel::assemble(&m_static, m_modes, omega_max).unwrap();
    let star_d = StarModel::assemble(&m_driven, m_modes, omega_max).unwrap();
    let init_s = thermal_initial_covariance(&star_s, SystemInit::GroundState).unwrap();
    let init_d = thermal_initial_covariance(&star_d, SystemInit::GroundState).unwrap();

    // the factor engine samples 64 times per period; give the probe engine
    // the same grid so samples align exactly and no interpolation enters
    let tau = std::f64::consts::PI; // 2 pi / 2.0
    let sample_dt = tau / 64.0;
    let settings_d = OracleSettings {
        m_modes,
        omega_max,
        dt: 2e-3,
        transient: 4.0 * tau,
        window: 2.0 * tau,
        sample_dt,
        system_init: SystemInit::GroundState,
    };
    let traj_d = propagate(&star_d, &init_d, &settings_d).unwrap();

    let settings_s = OracleSettings { transient: 4.0 * tau, ..settings_d.clone() };
    let traj_s = propagate(&star_s, &init_s, &settings_s).unwrap();

    for k in [3usize, 40, 90] {
        let t = traj_d.times[k];
        let ks = (t / sample_dt).round() as usize;
        assert!((traj_s.times[ks] - t).abs() < 1e-9, "sample grids misaligned");
        for a in 0..2 {
            let qd = traj_d.currents_commutator[a][k];
            let qs = traj_s.currents_commutator[a][ks];
            assert!(
                (qd - qs).abs() < 1e-7,
                "engines disagree at t={t}, bath {a}: factor {qd} vs probe {qs}"
            );
        }
        let xd = traj_d.sigma_xx[k][(0, 0)];
        let xs = traj_s.sigma_xx[ks][(0, 0)];
        assert!((xd - xs).abs() < 1e-7 * xs.abs().max(1.0), "sigma_xx mismatch at t={t}");
    }
}

#[test]
fn static_total_energy_is_conserved() {
    // factor engine on a zero-drive network measures all energy pieces
    // directly; total must be flat to integrator tolerance
    let model = mini_driven_model(0.05, 0.0, 2.0, 1.3, 0.9);
    let star = StarModel::assemble(&model, 128, 8.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
    let settings = OracleSettings {
        m_modes: 128,
        omega_max: 8.0,
        dt: 1e-3,
        transient: 0.0,
        window: 40.0,
        sample_dt: 0.5,
        system_init: SystemInit::GroundState,
    };
    let traj = propagate(&star, &init, &settings).unwrap();
    let total: Vec<f64> = (0..traj.times.len())
        .map(|k| {
            traj.h_system[k]
                + traj.h_bath.iter().map(|hb| hb[k]).sum::<f64>()
                + traj.h_interaction.iter().map(|hi| hi[k]).sum::<f64>()
        })
        .collect();
    let e0 = total[0];
    for (k, &e) in total.iter().enumerate() {
        assert!(
            ((e - e0) / e0).abs() < 1e-7,
            "energy drift {:.3e} at sample {k}",
            (e - e0) / e0
        );
    }
}

#[test]
fn driven_first_law_holds_pointwise() {
    // d<H_S>/dt - sum_a Q_a(t) - W(t) = 0 at every sample, with the
    // derivative taken by central differences of the sampled H_S series
    let model = mini_driven_model(0.05, 0.3, 2.0, 1.3, 0.9);
    let star = StarModel::assemble(&model, 128, 8.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
    let settings = OracleSettings {
        m_modes: 128,
        omega_max: 8.0,
        dt: std::f64::consts::PI / 2048.0,
        transient: 2.0 * std::f64::consts::PI,
        window: 2.0 * std::f64::consts::PI,
        sample_dt: std::f64::consts::PI / 32.0,
        system_init: SystemInit::GroundState,
    };
    let traj = propagate(&star, &init, &settings).unwrap();
    let n = traj.times.len();
    let dt = traj.times[1] - traj.times[0];
    let scale = traj
        .work_rate
        .iter()
        .map(|w| w.abs())
        .fold(1e-300, f64::max)
        .max(traj.currents_commutator[0].iter().map(|q| q.abs()).fold(0.0, f64::max));
    for k in 1..n - 1 {
        let dhs = (traj.h_system[k + 1] - traj.h_system[k - 1]) / (2.0 * dt);
        let rhs: f64 = traj.currents_commutator.iter().map(|q| q[k]).sum::<f64>()
            + traj.work_rate[k];
        // the FD truncation error dominates: O(dt^2 * |H_S'''|)
        assert!(
            (dhs - rhs).abs() < 2e-2 * scale + 1e-4 * dhs.abs(),
            "first law violated at t={}: dH_S = {dhs}, sum Q + W = {rhs}",
            traj.times[k]
        );
    }
}

#[test]
fn bath_energy_fd_matches_exact_derivative() {
    // finite differences of the directly measured bath energies reproduce
    // the exact-derivative current series (driven/factor path)
    let model = mini_driven_model(0.05, 0.2, 2.0, 1.3, 0.9);
    let star = StarModel::assemble(&model, 128, 8.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
    let settings = OracleSettings {
        m_modes: 128,
        omega_max: 8.0,
        dt: std::f64::consts::PI / 2048.0,
        transient: std::f64::consts::PI * 2.0,
        window: 2.0 * std::f64::consts::PI,
        sample_dt: std::f64::consts::PI / 64.0,
        system_init: SystemInit::GroundState,
    };
    let traj = propagate(&star, &init, &settings).unwrap();
    let dt = traj.times[1] - traj.times[0];
    let scale = traj.currents_bath_energy[0]
        .iter()
        .map(|q| q.abs())
        .fold(1e-300, f64::max);
    for a in 0..2 {
        for k in 1..traj.times.len() - 1 {
            let fd = -(traj.h_bath[a][k + 1] - traj.h_bath[a][k - 1]) / (2.0 * dt);
            let exact = traj.currents_bath_energy[a][k];
            assert!(
                (fd - exact).abs() < 5e-3 * scale,
                "bath {a}, sample {k}: fd {fd} vs exact {exact}"
            );
        }
    }
}

#[test]
fn mini_static_oracle_matches_spectral_currents() {
    // compressed version of the acceptance fixture: stronger damping means a
    // short transient, so a small bath suffices
    let gamma = 0.08;
    let model = mini_static_model(gamma, 1.2, 0.8);
    let spectral = crate::static_solver::static_currents(&model).unwrap();

    let settings = OracleSettings {
        m_modes: 448,
        omega_max: 10.0,
        dt: 2.5e-3,
        transient: 5.0 / gamma,
        window: 150.0,
        sample_dt: 0.25,
        system_init: SystemInit::GroundState,
    };
    let cmp = oracle_compare(&model, &spectral, &settings).unwrap();
    assert!(!cmp.inconclusive, "window variation {:.3e}", cmp.window_variation);
    assert!(
        cmp.dev_spectral < 0.08,
        "oracle vs spectral deviation {:.3} (oracle {:?} vs spectral {:?})",
        cmp.dev_spectral,
        cmp.oracle.q_commutator,
        cmp.spectral_heat
    );
    assert!(cmp.dev_definitions < 0.03, "definition deviation {:.3e}", cmp.dev_definitions);
}

#[test]
fn equal_temperatures_mean_equilibrium() {
    let gamma = 0.08;
    let model = mini_static_model(gamma, 1.0, 1.0);
    let star = StarModel::assemble(&model, 448, 10.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::Thermal(1.0)).unwrap();
    let settings = OracleSettings {
        m_modes: 448,
        omega_max: 10.0,
        dt: 2.5e-3,
        transient: 5.0 / gamma,
        window: 120.0,
        sample_dt: 0.25,
        system_init: SystemInit::Thermal(1.0),
    };
    let traj = propagate(&star, &init, &settings).unwrap();
    let floor = 1e-3 * gamma * 1.0;
    for a in 0..2 {
        assert!(
            traj.averages.q_commutator[a].abs() < floor,
            "equilibrium current {:.3e} above the floor {floor:.1e}",
            traj.averages.q_commutator[a]
        );
    }
}

#[test]
fn doubling_modes_changes_little() {
    let gamma = 0.08;
    let model = mini_static_model(gamma, 1.2, 0.8);
    let run = |m_modes: usize| {
        let star = StarModel::assemble(&model, m_modes, 10.0).unwrap();
        let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
        let settings = OracleSettings {
            m_modes,
            omega_max: 10.0,
            dt: 2.5e-3,
            transient: 5.0 / gamma,
            window: 60.0,
            sample_dt: 0.25,
            system_init: SystemInit::GroundState,
        };
        propagate(&star, &init, &settings).unwrap().averages.q_commutator
    };
    let coarse = run(320);
    let fine = run(640);
    let scale = fine.iter().map(|q| q.abs()).fold(1e-300, f64::max);
    for a in 0..2 {
        assert!(
            (coarse[a] - fine[a]).abs() / scale < 0.01,
            "bath {a}: m-convergence {:.3e} vs {:.3e}",
            coarse[a],
            fine[a]
        );
    }
}

#[test]
fn initial_state_does_not_move_steady_averages() {
    let gamma = 0.08;
    let model = mini_static_model(gamma, 1.2, 0.8);
    let run = |sys: SystemInit| {
        let star = StarModel::assemble(&model, 448, 10.0).unwrap();
        let init = thermal_initial_covariance(&star, sys).unwrap();
        let settings = OracleSettings {
            m_modes: 448,
            omega_max: 10.0,
            dt: 2.5e-3,
            transient: 5.0 / gamma,
            window: 100.0,
            sample_dt: 0.25,
            system_init: sys,
        };
        propagate(&star, &init, &settings).unwrap().averages.q_commutator
    };
    let ground = run(SystemInit::GroundState);
    let thermal = run(SystemInit::Thermal(1.0));
    let scale = ground.iter().map(|q| q.abs()).fold(1e-300, f64::max);
    for a in 0..2 {
        assert!(
            (ground[a] - thermal[a]).abs() / scale < 0.02,
            "init dependence: {:.3e} vs {:.3e}",
            ground[a],
            thermal[a]
        );
    }
}

#[test]
fn horizon_and_step_validation() {
    let model = mini_static_model(0.05, 1.2, 1.0);
    let star = StarModel::assemble(&model, 64, 8.0).unwrap();
    let init = thermal_initial_covariance(&star, SystemInit::GroundState).unwrap();
    // recurrence = 2 pi * 64 / 8 = 50.3; a 100-long horizon must be refused
    let settings = OracleSettings {
        m_modes: 64,
        omega_max: 8.0,
        dt: 2e-3,
        transient: 50.0,
        window: 50.0,
        sample_dt: 0.5,
        system_init: SystemInit::GroundState,
    };
    assert!(matches!(
        propagate(&star, &init, &settings),
        Err(OracleError::HorizonExceedsRecurrence { .. })
    ));
    let settings = OracleSettings { transient: 5.0, window: 10.0, dt: 0.5, ..settings };
    assert!(matches!(
        propagate(&star, &init, &settings),
        Err(OracleError::StepTooLarge { .. })
    ));
}

#[test]
fn default_settings_respect_recurrence_budget() {
    let model = mini_static_model(0.05, 1.2, 1.0);
    let s = OracleSettings::defaults_for(&model);
    let star = StarModel::assemble(&model, s.m_modes, s.omega_max).unwrap();
    assert!(s.t_end() <= RECURRENCE_MARGIN * star.recurrence_time() + 1e-9);
    assert!(s.m_modes >= MIN_MODES);
}
