//! Star-model assembly: explicit bath modes, couplings and the closed-system
//! stiffness operator.

use nalgebra::DMatrix;

use crate::model::{self, BathSpec, Model, NetworkSpec};

use super::OracleError;

/// One reservoir discretized into explicit modes on a linear midpoint grid.
#[derive(Debug, Clone)]
pub struct BathModes {
    pub node: usize,
    pub temperature: f64,
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub delta_omega: f64,
}

impl BathModes {
    /// Echo time of the discretized bath correlation function.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.delta_omega
    }

    /// Static frequency shift sum_mu c_mu^2 / omega_mu^2 induced on the
    /// attachment node (the discrete Re chi(0)).
    pub fn counterterm(&self) -> f64 {
        self.omegas
            .iter()
            .zip(&self.couplings)
            .map(|(&w, &c)| c * c / (w * w))
            .sum()
    }

    /// Direct constructor for tests (e.g. the zero-coupling bath).
    pub fn from_parts(
        node: usize,
        temperature: f64,
        omegas: Vec<f64>,
        couplings: Vec<f64>,
        delta_omega: f64,
    ) -> Self {
        Self { node, temperature, omegas, couplings, delta_omega }
    }
}

pub const MIN_MODES: usize = 50;

/// Discretize an Ohmic bath: omega_mu = (mu - 1/2) d_omega on
/// [0, omega_max], couplings from the density-matching rule
/// c_mu^2 = 2 m omega_mu Jtilde(omega_mu) d_omega (unit bath masses).
pub fn discretize_bath(
    bath: &BathSpec,
    m_modes: usize,
    omega_max: f64,
) -> Result<BathModes, OracleError> {
    if m_modes < MIN_MODES {
        return Err(OracleError::TooFewModes { m_modes, minimum: MIN_MODES });
    }
    if !(omega_max > 0.0) {
        return Err(OracleError::BadParameter("omega_max must be positive".into()));
    }
    let dw = omega_max / m_modes as f64;
    let mut omegas = Vec::with_capacity(m_modes);
    let mut couplings = Vec::with_capacity(m_modes);
    for mu in 0..m_modes {
        let w = (mu as f64 + 0.5) * dw;
        omegas.push(w);
        couplings.push((2.0 * w * model::ohmic_density(bath, w) * dw).sqrt());
    }
    Ok(BathModes {
        node: bath.node,
        temperature: bath.temperature,
        omegas,
        couplings,
        delta_omega: dw,
    })
}

/// The closed system: network plus explicit bath modes.
///
/// Coordinate layout: system oscillators first, then the modes of each bath
/// in order. The system block of the stiffness carries the counterterm
/// sum_mu c^2/w^2 per damped node, so that the renormalized potential seen
/// by the slow dynamics is exactly the network's v0 (which the spectral
/// solvers use with Re chi dropped).
#[derive(Debug, Clone)]
pub struct StarModel {
    network: NetworkSpec,
    baths: Vec<BathModes>,
    /// v0 + counterterm diagonal.
    v_ct: DMatrix<f64>,
    /// Drive harmonics split into real/imaginary parts with their k omega_d.
    drive: Vec<(f64, DMatrix<f64>, DMatrix<f64>)>,
    inv_mass: Vec<f64>,
    offsets: Vec<usize>,
    n_sys: usize,
    n_q: usize,
}

impl StarModel {
    pub fn assemble(model: &Model, m_modes: usize, omega_max: f64) -> Result<Self, OracleError> {
        let baths: Vec<BathModes> = model
            .baths()
            .iter()
            .map(|b| discretize_bath(b, m_modes, omega_max))
            .collect::<Result<_, _>>()?;
        Self::from_bath_modes(model.network().clone(), baths)
    }

    /// Assemble from explicit bath modes (tests use this to build special
    /// cases like decoupled baths).
    pub fn from_bath_modes(
        network: NetworkSpec,
        baths: Vec<BathModes>,
    ) -> Result<Self, OracleError> {
        let n_sys = network.n();
        let mut v_ct = network.v0().clone();
        for b in &baths {
            if b.node >= n_sys {
                return Err(OracleError::BadParameter(format!(
                    "bath node {} out of range",
                    b.node
                )));
            }
            v_ct[(b.node, b.node)] += b.counterterm();
            if b.omegas.iter().any(|&w| !(w > 0.0)) {
                return Err(OracleError::BadParameter(
                    "bath mode frequencies must be strictly positive".into(),
                ));
            }
        }
        let mut offsets = Vec::with_capacity(baths.len());
        let mut n_q = n_sys;
        for b in &baths {
            offsets.push(n_q);
            n_q += b.omegas.len();
        }
        let mut inv_mass = vec![1.0; n_q];
        for i in 0..n_sys {
            inv_mass[i] = 1.0 / network.masses()[i];
        }
        let drive = network
            .harmonics()
            .iter()
            .filter(|(k, _)| *k > 0)
            .map(|(k, vk)| {
                let kw = *k as f64 * network.omega_d().unwrap_or(0.0);
                let re = vk.map(|z| z.re);
                let im = vk.map(|z| z.im);
                (kw, re, im)
            })
            .collect();
        Ok(Self { network, baths, v_ct, drive, inv_mass, offsets, n_sys, n_q })
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn baths(&self) -> &[BathModes] {
        &self.baths
    }

    pub fn network(&self) -> &NetworkSpec {
        &self.network
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Total static frequency shift absorbed by the counterterm.
    pub fn counter_term_total(&self) -> f64 {
        self.baths.iter().map(BathModes::counterterm).sum()
    }

    /// Shortest bath recurrence time (the simulation horizon budget).
    pub fn recurrence_time(&self) -> f64 {
        self.baths
            .iter()
            .map(BathModes::recurrence_time)
            .fold(f64::INFINITY, f64::min)
    }

    /// System potential at time t including the counterterm.
    pub fn system_potential(&self, t: f64) -> DMatrix<f64> {
        let mut v = self.v_ct.clone();
        for (kw, re, im) in &self.drive {
            let (s, c) = (kw * t).sin_cos();
            // V(t) += 2 Re[V_k e^{i k wd t}] = 2 (Re V_k cos - Im V_k sin)
            for i in 0..self.n_sys {
                for j in 0..self.n_sys {
                    v[(i, j)] += 2.0 * (re[(i, j)] * c - im[(i, j)] * s);
                }
            }
        }
        v
    }

    /// out = K(t) x for the full closed system (unit bath masses).
    pub fn stiffness_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let ns = self.n_sys;
        // system block
        for i in 0..ns {
            let mut acc = 0.0;
            for j in 0..ns {
                acc += self.v_ct[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        if !self.drive.is_empty() {
            for (kw, re, im) in &self.drive {
                let (s, c) = (kw * t).sin_cos();
                for i in 0..ns {
                    let mut acc = 0.0;
                    for j in 0..ns {
                        acc += 2.0 * (re[(i, j)] * c - im[(i, j)] * s) * x[j];
                    }
                    out[i] += acc;
                }
            }
        }
        // bath blocks and borders
        for (b, &off) in self.baths.iter().zip(&self.offsets) {
            let node = b.node;
            let xs = x[node];
            let mut border = 0.0;
            let m = b.omegas.len();
            let xm = &x[off..off + m];
            let om = &b.omegas;
            let cm = &b.couplings;
            for mu in 0..m {
                out[off + mu] = om[mu] * om[mu] * xm[mu] - cm[mu] * xs;
                border += cm[mu] * xm[mu];
            }
            out[node] -= border;
        }
    }

    /// Forward field: (x, p) -> (M^-1 p, -K(t) x).
    pub fn forward_field(&self, t: f64, y: &[f64], out: &mut [f64]) {
        let nq = self.n_q;
        let (x, p) = y.split_at(nq);
        let (ox, op) = out.split_at_mut(nq);
        for i in 0..nq {
            ox[i] = self.inv_mass[i] * p[i];
        }
        self.stiffness_into(t, x, op);
        for v in op.iter_mut() {
            *v = -*v;
        }
    }

    /// Adjoint field A^T: (wx, wp) -> (-K(t) wp, M^-1 wx).
    pub fn adjoint_field(&self, t: f64, w: &[f64], out: &mut [f64]) {
        let nq = self.n_q;
        let (wx, wp) = w.split_at(nq);
        let (ox, op) = out.split_at_mut(nq);
        self.stiffness_into(t, wp, ox);
        for v in ox.iter_mut() {
            *v = -*v;
        }
        for i in 0..nq {
            op[i] = self.inv_mass[i] * wx[i];
        }
    }

    /// Coupling vector of bath `alpha` in position coordinates
    /// (c_mu on the bath-mode slots, zero elsewhere).
    pub fn coupling_vector(&self, alpha: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.n_q];
        let off = self.offsets[alpha];
        for (mu, &c) in self.baths[alpha].couplings.iter().enumerate() {
            g[off + mu] = c;
        }
        g
    }
}
