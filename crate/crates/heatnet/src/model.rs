//! Harmonic network, reservoirs, spectral densities and thermal occupations.
//!
//! Units fix `hbar = k_B = 1` and quote every frequency in a reference
//! `omega0`; temperatures are in units of `hbar omega0 / k_B`. The potential
//! stored in [`NetworkSpec`] is the renormalized one: the real part of the
//! bath susceptibility is absorbed into it, so solvers only ever see the
//! `i pi J(omega)` damping term.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Tolerance used when checking that input matrices are symmetric/Hermitian.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("occupation number has a pole at omega = 0")]
    OccupationPole,
    #[error("temperature must be nonnegative, got {0}")]
    NegativeTemperature(f64),
    #[error("all masses must be strictly positive")]
    NonPositiveMass,
    #[error("v0 must be a square N x N matrix matching the mass vector")]
    ShapeMismatch,
    #[error("v0 must be symmetric (max asymmetry {0:.3e})")]
    AsymmetricPotential(f64),
    #[error("drive harmonic k = 0 is not allowed; fold it into v0")]
    ZeroHarmonicIndex,
    #[error("duplicate drive harmonic k = {0}")]
    DuplicateHarmonic(i32),
    #[error("harmonics violate V(-k) = V(k)^dagger at k = {0} (defect {1:.3e})")]
    NonHermitianDrive(i32, f64),
    #[error("driven networks need omega_d > 0; static ones must omit it")]
    DriveFrequencyMismatch,
    #[error("bath node {node} out of range for {n} oscillators")]
    BathNodeOutOfRange { node: usize, n: usize },
    #[error("more than one bath attached to node {0}")]
    DuplicateBathNode(usize),
    #[error("bath gamma must be strictly positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("bath cutoff must be strictly positive, got {0}")]
    NonPositiveCutoff(f64),
}

/// One Ohmic reservoir with a Lorentz-Drude cutoff, attached to a single node.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub node: usize,
    /// Temperature in units of hbar omega0 / k_B.
    pub temperature: f64,
    /// Dissipation strength gamma (frequency units).
    pub gamma: f64,
    /// High-frequency cutoff Lambda (frequency units).
    pub cutoff: f64,
}

impl BathSpec {
    pub fn new(node: usize, temperature: f64, gamma: f64, cutoff: f64) -> Result<Self, ModelError> {
        if temperature < 0.0 || !temperature.is_finite() {
            return Err(ModelError::NegativeTemperature(temperature));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(ModelError::NonPositiveGamma(gamma));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(ModelError::NonPositiveCutoff(cutoff));
        }
        Ok(Self { node, temperature, gamma, cutoff })
    }
}

/// The harmonic network: masses, renormalized static potential and an
/// optional set of periodic drive harmonics `V(t) = sum_k V_k e^{i k w_d t}`.
///
/// Harmonics are stored sparsely by integer index `k`; both members of every
/// `(k, -k)` pair are kept so `V(t)` can be reconstructed directly, and the
/// constructor enforces `V_{-k} = V_k^dagger` so the reconstruction is
/// real-symmetric.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    masses: DVector<f64>,
    v0: DMatrix<f64>,
    harmonics: Vec<(i32, DMatrix<Complex64>)>,
    omega_d: Option<f64>,
}

impl NetworkSpec {
    pub fn new_static(masses: DVector<f64>, v0: DMatrix<f64>) -> Result<Self, ModelError> {
        Self::new(masses, v0, Vec::new(), None)
    }

    pub fn new_driven(
        masses: DVector<f64>,
        v0: DMatrix<f64>,
        harmonics: Vec<(i32, DMatrix<Complex64>)>,
        omega_d: f64,
    ) -> Result<Self, ModelError> {
        Self::new(masses, v0, harmonics, Some(omega_d))
    }

    pub fn new(
        masses: DVector<f64>,
        v0: DMatrix<f64>,
        mut harmonics: Vec<(i32, DMatrix<Complex64>)>,
        omega_d: Option<f64>,
    ) -> Result<Self, ModelError> {
        let n = masses.len();
        if n == 0 || masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(ModelError::NonPositiveMass);
        }
        if v0.nrows() != n || v0.ncols() != n {
            return Err(ModelError::ShapeMismatch);
        }
        let scale = v0.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .fold(0.0f64, |a, (i, j)| a.max((v0[(i, j)] - v0[(j, i)]).abs()));
        if asym > SYMMETRY_TOL * scale {
            return Err(ModelError::AsymmetricPotential(asym));
        }

        harmonics.sort_by_key(|&(k, _)| k);
        for w in harmonics.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ModelError::DuplicateHarmonic(w[0].0));
            }
        }
        for (k, vk) in &harmonics {
            if *k == 0 {
                return Err(ModelError::ZeroHarmonicIndex);
            }
            if vk.nrows() != n || vk.ncols() != n {
                return Err(ModelError::ShapeMismatch);
            }
            let conj = harmonics
                .iter()
                .find(|(kk, _)| *kk == -k)
                .map(|(_, v)| v)
                .ok_or(ModelError::NonHermitianDrive(*k, f64::INFINITY))?;
            let defect = (vk.adjoint() - conj).norm();
            if defect > SYMMETRY_TOL * (1.0 + vk.norm()) {
                return Err(ModelError::NonHermitianDrive(*k, defect));
            }
        }
        match omega_d {
            Some(w) if !(w > 0.0) || !w.is_finite() => return Err(ModelError::DriveFrequencyMismatch),
            Some(_) if harmonics.is_empty() => return Err(ModelError::DriveFrequencyMismatch),
            None if !harmonics.is_empty() => return Err(ModelError::DriveFrequencyMismatch),
            _ => {}
        }

        Ok(Self { masses, v0, harmonics, omega_d })
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &DVector<f64> {
        &self.masses
    }

    pub fn v0(&self) -> &DMatrix<f64> {
        &self.v0
    }

    pub fn harmonics(&self) -> &[(i32, DMatrix<Complex64>)] {
        &self.harmonics
    }

    pub fn omega_d(&self) -> Option<f64> {
        self.omega_d
    }

    pub fn is_driven(&self) -> bool {
        self.omega_d.is_some()
    }

    /// Largest |k| among the stored harmonics (0 for a static network).
    pub fn max_harmonic(&self) -> i32 {
        self.harmonics.iter().map(|(k, _)| k.abs()).max().unwrap_or(0)
    }

    /// Reconstruct the (real symmetric) potential V(t).
    pub fn potential_at(&self, t: f64) -> DMatrix<f64> {
        let mut v = self.v0.clone();
        if let Some(wd) = self.omega_d {
            for (k, vk) in &self.harmonics {
                let phase = Complex64::from_polar(1.0, *k as f64 * wd * t);
                for i in 0..self.n() {
                    for j in 0..self.n() {
                        v[(i, j)] += (vk[(i, j)] * phase).re;
                    }
                }
            }
        }
        v
    }

    /// d V(t) / dt, nonzero only for driven networks.
    pub fn potential_rate_at(&self, t: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut v = DMatrix::zeros(n, n);
        if let Some(wd) = self.omega_d {
            for (k, vk) in &self.harmonics {
                let kw = *k as f64 * wd;
                let phase = Complex64::new(0.0, kw) * Complex64::from_polar(1.0, kw * t);
                for i in 0..n {
                    for j in 0..n {
                        v[(i, j)] += (vk[(i, j)] * phase).re;
                    }
                }
            }
        }
        v
    }
}

/// Unit bookkeeping: everything is expressed relative to `omega0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub omega0: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { omega0: 1.0 }
    }
}

/// A network together with its reservoirs. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Model {
    network: NetworkSpec,
    baths: Vec<BathSpec>,
    units: Units,
}

impl Model {
    pub fn new(network: NetworkSpec, baths: Vec<BathSpec>) -> Result<Self, ModelError> {
        Self::with_units(network, baths, Units::default())
    }

    pub fn with_units(
        network: NetworkSpec,
        baths: Vec<BathSpec>,
        units: Units,
    ) -> Result<Self, ModelError> {
        let n = network.n();
        let mut seen = vec![false; n];
        for b in &baths {
            if b.node >= n {
                return Err(ModelError::BathNodeOutOfRange { node: b.node, n });
            }
            if seen[b.node] {
                return Err(ModelError::DuplicateBathNode(b.node));
            }
            seen[b.node] = true;
        }
        Ok(Self { network, baths, units })
    }

    pub fn network(&self) -> &NetworkSpec {
        &self.network
    }

    pub fn baths(&self) -> &[BathSpec] {
        &self.baths
    }

    pub fn bath(&self, alpha: usize) -> &BathSpec {
        &self.baths[alpha]
    }

    pub fn n_nodes(&self) -> usize {
        self.network.n()
    }

    pub fn n_baths(&self) -> usize {
        self.baths.len()
    }

    pub fn units(&self) -> Units {
        self.units
    }

    /// Bath temperatures in bath order.
    pub fn temperatures(&self) -> Vec<f64> {
        self.baths.iter().map(|b| b.temperature).collect()
    }

    /// Same model with the temperatures of baths 0 and 1 exchanged
    /// (the reversed configuration; geometry and drive are untouched).
    pub fn with_swapped_temperatures(&self) -> Model {
        assert!(self.n_baths() >= 2, "temperature swap needs two baths");
        let mut baths = self.baths.clone();
        let t0 = baths[0].temperature;
        baths[0].temperature = baths[1].temperature;
        baths[1].temperature = t0;
        Model { network: self.network.clone(), baths, units: self.units }
    }

    /// J(omega) = sum_alpha Pi_alpha Jtilde_alpha(omega): diagonal, rank at
    /// most the number of baths, odd in omega.
    pub fn spectral_matrix(&self, omega: f64) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut j = DMatrix::zeros(n, n);
        for b in &self.baths {
            j[(b.node, b.node)] += ohmic_density(b, omega);
        }
        j
    }
}

/// Bose-Einstein occupation n(omega) = 1 / (e^{omega/T} - 1).
///
/// Overflow-safe through `exp_m1`; for T = 0 the zero-temperature limit is
/// 0 for positive and -1 for negative frequencies.
pub fn occupation(temperature: f64, omega: f64) -> Result<f64, ModelError> {
    if omega == 0.0 {
        return Err(ModelError::OccupationPole);
    }
    if temperature < 0.0 {
        return Err(ModelError::NegativeTemperature(temperature));
    }
    Ok(occupation_unchecked(temperature, omega))
}

pub(crate) fn occupation_unchecked(temperature: f64, omega: f64) -> f64 {
    if temperature == 0.0 {
        return if omega > 0.0 { 0.0 } else { -1.0 };
    }
    1.0 / (omega / temperature).exp_m1()
}

/// n(omega) + 1/2, the combination entering every driven-current integral.
pub(crate) fn occupation_plus_half(temperature: f64, omega: f64) -> f64 {
    occupation_unchecked(temperature, omega) + 0.5
}

/// n_a(omega) - n_b(omega), evaluated stably near omega = 0 where the two
/// poles cancel: n_a - n_b = (T_a - T_b)/omega + omega/12 (1/T_a - 1/T_b) + ...
pub(crate) fn occupation_diff(t_a: f64, t_b: f64, omega: f64) -> f64 {
    let tmin = t_a.min(t_b);
    if tmin > 0.0 && omega.abs() < 1e-5 * tmin {
        return (t_a - t_b) / omega + omega / 12.0 * (1.0 / t_a - 1.0 / t_b);
    }
    occupation_unchecked(t_a, omega) - occupation_unchecked(t_b, omega)
}

/// d n(omega) / d T = (omega / T^2) / (4 sinh^2(omega / 2T)); odd in omega.
pub(crate) fn occupation_dt(temperature: f64, omega: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let s = (0.5 * omega / temperature).sinh();
    let denom = 4.0 * s * s;
    if !denom.is_finite() {
        return 0.0;
    }
    (omega / (temperature * temperature)) / denom
}

/// Ohmic spectral density with Lorentz-Drude cutoff,
/// Jtilde(omega) = (1/pi) 2 gamma omega Lambda^2 / (omega^2 + Lambda^2).
/// Odd in omega by construction, implementing J(-omega) := -J(omega).
pub fn ohmic_density(bath: &BathSpec, omega: f64) -> f64 {
    let l2 = bath.cutoff * bath.cutoff;
    2.0 * bath.gamma * omega * l2 / (std::f64::consts::PI * (omega * omega + l2))
}

/// Bath susceptibility chi(omega) = 2 gamma Lambda^2 / (Lambda - i omega).
/// Its imaginary part equals pi * Jtilde(omega) (fluctuation-dissipation).
pub fn susceptibility(bath: &BathSpec, omega: f64) -> Complex64 {
    let l2 = bath.cutoff * bath.cutoff;
    2.0 * bath.gamma * l2 / Complex64::new(bath.cutoff, -omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_bath() -> BathSpec {
        BathSpec::new(0, 1.0, 0.01, 10.0).unwrap()
    }

    #[test]
    fn occupation_reference_values() {
        // direct high-precision evaluation of the Bose function at T=1, w=1
        let expected = 1.0 / (std::f64::consts::E - 1.0);
        assert_relative_eq!(occupation(1.0, 1.0).unwrap(), expected, max_relative = 1e-15);
        assert_abs_diff_eq!(occupation(1.0, 1.0).unwrap(), 0.581977, epsilon = 1e-6);
        // zero-temperature limits
        assert_eq!(occupation(0.0, 2.5).unwrap(), 0.0);
        assert_eq!(occupation(0.0, -2.5).unwrap(), -1.0);
        // reflection identity n(-w) = -(n(w) + 1)
        assert_abs_diff_eq!(
            occupation(1.0, -1.0).unwrap(),
            -(expected + 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn occupation_rejects_pole_and_negative_temperature() {
        assert!(matches!(occupation(1.0, 0.0), Err(ModelError::OccupationPole)));
        assert!(matches!(
            occupation(-0.5, 1.0),
            Err(ModelError::NegativeTemperature(_))
        ));
    }

    #[test]
    fn occupation_is_overflow_safe() {
        assert_eq!(occupation(1.0, 1e6).unwrap(), 0.0);
        assert_eq!(occupation(1e-300, 5.0).unwrap(), 0.0);
        assert_abs_diff_eq!(occupation(1.0, -1e6).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn occupation_reflection_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let t = rng.gen_range(0.05..5.0);
            let w = rng.gen_range(0.01..50.0);
            let r = occupation_unchecked(t, -w) + occupation_unchecked(t, w) + 1.0;
            assert!(r.abs() < 1e-12, "reflection residual {r} at T={t}, w={w}");
        }
    }

    #[test]
    fn occupation_diff_is_stable_near_zero() {
        let (ta, tb): (f64, f64) = (1.2, 1.0);
        // tiny frequencies: compare to the Laurent series (direct evaluation
        // would lose ~10 digits to cancellation)
        for &w in &[1e-9f64, 1e-7, -1e-9, 1e-6] {
            let series = (ta - tb) / w + w / 12.0 * (1.0 / ta - 1.0 / tb);
            assert_relative_eq!(occupation_diff(ta, tb, w), series, max_relative = 1e-9);
        }
        // moderate frequencies: direct difference of the Bose functions
        for &w in &[1e-3f64, 0.5, -2.0] {
            let direct = occupation_unchecked(ta, w) - occupation_unchecked(tb, w);
            assert_relative_eq!(occupation_diff(ta, tb, w), direct, max_relative = 1e-12);
        }
        // both branches agree near the switchover frequency
        for &w in &[0.9e-5 * tb, 1.1e-5 * tb] {
            let series = (ta - tb) / w + w / 12.0 * (1.0 / ta - 1.0 / tb);
            assert_relative_eq!(occupation_diff(ta, tb, w), series, max_relative = 1e-8);
        }
    }

    #[test]
    fn occupation_dt_matches_finite_difference() {
        let (t, w, h) = (1.3, 0.7, 1e-6);
        let fd = (occupation_unchecked(t + h, w) - occupation_unchecked(t - h, w)) / (2.0 * h);
        assert_relative_eq!(occupation_dt(t, w), fd, max_relative = 1e-8);
        // odd in omega
        assert_relative_eq!(occupation_dt(t, -w), -occupation_dt(t, w), max_relative = 1e-14);
    }

    #[test]
    fn ohmic_density_values_and_oddness() {
        let b = test_bath();
        assert_eq!(ohmic_density(&b, 0.0), 0.0);
        // at omega = Lambda: (1/pi) 2 gamma Lambda^3 / (2 Lambda^2) = gamma Lambda / pi
        assert_relative_eq!(
            ohmic_density(&b, 10.0),
            2.0 * 0.01 * 10.0 * 100.0 / (200.0 * std::f64::consts::PI),
            max_relative = 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let w = rng.gen_range(-50.0..50.0);
            assert_eq!(ohmic_density(&b, -w), -ohmic_density(&b, w));
        }
    }

    #[test]
    fn susceptibility_limits_and_fdt() {
        let b = test_bath();
        let chi0 = susceptibility(&b, 0.0);
        assert_relative_eq!(chi0.re, 2.0 * b.gamma * b.cutoff, max_relative = 1e-15);
        assert_abs_diff_eq!(chi0.im, 0.0);
        // fluctuation-dissipation: Im chi = pi * J over a wide band
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let w = rng.gen_range(-10.0 * b.cutoff..10.0 * b.cutoff);
            let lhs = susceptibility(&b, w).im;
            let rhs = std::f64::consts::PI * ohmic_density(&b, w);
            assert!((lhs - rhs).abs() < 1e-12, "FDT defect at w={w}");
        }
        // asymptotic decay like 2 gamma Lambda^2 / |omega|
        let w = 1e7;
        assert_relative_eq!(
            susceptibility(&b, w).norm(),
            2.0 * b.gamma * b.cutoff * b.cutoff / w,
            max_relative = 1e-6
        );
    }

    fn two_node_model(baths: Vec<BathSpec>) -> Model {
        let v0 = DMatrix::from_row_slice(2, 2, &[4.2, -0.2, -0.2, 1.2]);
        let net = NetworkSpec::new_static(DVector::from_element(2, 1.0), v0).unwrap();
        Model::new(net, baths).unwrap()
    }

    #[test]
    fn spectral_matrix_shapes() {
        let b0 = BathSpec::new(0, 1.2, 0.01, 10.0).unwrap();
        let b1 = BathSpec::new(1, 1.0, 0.01, 10.0).unwrap();
        let m = two_node_model(vec![b0.clone(), b1]);
        // identical reservoirs on all nodes: J(w) = Jtilde(w) * Identity
        let j = m.spectral_matrix(3.7);
        let jt = ohmic_density(&b0, 3.7);
        assert_relative_eq!(j[(0, 0)], jt, max_relative = 1e-15);
        assert_relative_eq!(j[(1, 1)], jt, max_relative = 1e-15);
        assert_eq!(j[(0, 1)], 0.0);

        // no baths: zero matrix
        let m0 = two_node_model(vec![]);
        assert_eq!(m0.spectral_matrix(1.0).norm(), 0.0);

        // single bath on node 1 of N=3: only (1,1) nonzero
        let v0 = DMatrix::identity(3, 3);
        let net = NetworkSpec::new_static(DVector::from_element(3, 1.0), v0).unwrap();
        let m1 = Model::new(net, vec![BathSpec::new(1, 0.5, 0.02, 5.0).unwrap()]).unwrap();
        let j = m1.spectral_matrix(2.0);
        for i in 0..3 {
            for k in 0..3 {
                if (i, k) == (1, 1) {
                    assert!(j[(i, k)] != 0.0);
                } else {
                    assert_eq!(j[(i, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn spectral_matrix_odd_extension_exact() {
        let m = two_node_model(vec![
            BathSpec::new(0, 1.2, 0.013, 10.0).unwrap(),
            BathSpec::new(1, 1.0, 0.008, 7.0).unwrap(),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = rng.gen_range(-30.0..30.0);
            let jp = m.spectral_matrix(w);
            let jm = m.spectral_matrix(-w);
            for i in 0..2 {
                assert_eq!(jm[(i, i)], -jp[(i, i)]);
            }
        }
    }

    #[test]
    fn drive_reconstruction_is_real_symmetric() {
        let v0 = DMatrix::from_row_slice(2, 2, &[4.2, -0.2, -0.2, 1.2]);
        let v1 = 0.1;
        let h1 = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(v1, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let net = NetworkSpec::new_driven(
            DVector::from_element(2, 1.0),
            v0.clone(),
            vec![(1, h1.clone()), (-1, h1.adjoint())],
            2.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..100.0);
            let v = net.potential_at(t);
            assert!((v[(0, 1)] - v[(1, 0)]).abs() < 1e-12);
            let expect = v0[(0, 0)] + 2.0 * v1 * (2.0 * t).cos();
            assert_relative_eq!(v[(0, 0)], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn constructor_validation() {
        let id2 = DMatrix::identity(2, 2);
        let ones = DVector::from_element(2, 1.0);

        assert!(NetworkSpec::new_static(DVector::from_vec(vec![1.0, -1.0]), id2.clone()).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.3, 1.0]);
        assert!(matches!(
            NetworkSpec::new_static(ones.clone(), asym),
            Err(ModelError::AsymmetricPotential(_))
        ));

        // harmonics without omega_d, and omega_d without harmonics
        let h = DMatrix::from_element(2, 2, Complex64::new(0.1, 0.0));
        assert!(NetworkSpec::new(ones.clone(), id2.clone(), vec![(1, h.clone()), (-1, h.clone())], None).is_err());
        assert!(NetworkSpec::new(ones.clone(), id2.clone(), vec![], Some(1.0)).is_err());

        // missing conjugate partner
        assert!(matches!(
            NetworkSpec::new(ones.clone(), id2.clone(), vec![(1, h.clone())], Some(1.0)),
            Err(ModelError::NonHermitianDrive(..))
        ));
        // mismatched conjugate partner
        let bad = DMatrix::from_element(2, 2, Complex64::new(0.2, 0.0));
        assert!(matches!(
            NetworkSpec::new(ones.clone(), id2.clone(), vec![(1, h.clone()), (-1, bad)], Some(1.0)),
            Err(ModelError::NonHermitianDrive(..))
        ));

        // bath node range / duplicates
        let net = NetworkSpec::new_static(ones, id2).unwrap();
        assert!(matches!(
            Model::new(net.clone(), vec![BathSpec::new(5, 1.0, 0.1, 1.0).unwrap()]),
            Err(ModelError::BathNodeOutOfRange { .. })
        ));
        assert!(matches!(
            Model::new(
                net,
                vec![
                    BathSpec::new(0, 1.0, 0.1, 1.0).unwrap(),
                    BathSpec::new(0, 2.0, 0.1, 1.0).unwrap()
                ]
            ),
            Err(ModelError::DuplicateBathNode(0))
        ));

        assert!(BathSpec::new(0, 1.0, 0.0, 1.0).is_err());
        assert!(BathSpec::new(0, 1.0, 0.1, -1.0).is_err());
        assert!(BathSpec::new(0, -1.0, 0.1, 1.0).is_err());
    }
}
