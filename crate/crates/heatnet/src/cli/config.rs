//! Run configuration: a single JSON document with strict schema validation,
//! environment-variable overrides and sweep-axis paths.
//!
//! All frequencies are in units of the reference omega0, temperatures in
//! hbar omega0 / k_B; matrices are flat row-major arrays.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{BathSpec, Model, NetworkSpec};
use crate::oracle::{OracleSettings, SystemInit};

use super::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub baths: Vec<BathSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub masses: Vec<f64>,
    /// Static potential, flat row-major N x N (before the c0 contribution).
    pub v0: Vec<f64>,
    /// Coupling strength added as c0 * coupling_pattern.
    #[serde(default)]
    pub c0: Option<f64>,
    /// Flat row-major pattern; defaults to the two-oscillator
    /// [[1, -1], [-1, 1]] when c0 is set.
    #[serde(default)]
    pub coupling_pattern: Option<Vec<f64>>,
    /// Single-harmonic drive shortcut: V(t) += 2 v1 cos(w_d t) on one node.
    #[serde(default)]
    pub drive: Option<DriveSection>,
    /// General harmonics; mutually exclusive with `drive`.
    #[serde(default)]
    pub drive_harmonics: Vec<HarmonicSection>,
    #[serde(default)]
    pub omega_d: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub v1: f64,
    #[serde(default)]
    pub node: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSection {
    pub k: i32,
    /// Flat row-major real part.
    pub re: Vec<f64>,
    /// Flat row-major imaginary part (defaults to zero).
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub node: usize,
    pub temperature: f64,
    pub gamma: f64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// Floquet truncation; null selects the default with auto-escalation.
    pub k_order: Option<i32>,
    pub quad_rel_tol: f64,
    pub instability_policy: InstabilityPolicy,
    /// Worker threads for sweeps; null uses the runtime default.
    pub workers: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            k_order: None,
            quad_rel_tol: 1e-7,
            instability_policy: InstabilityPolicy::Sentinel,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstabilityPolicy {
    /// Unstable grid points become sentinel rows with a reason code.
    Sentinel,
    /// Abort the run on the first unstable point.
    Error,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<AxisSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    /// Config path such as "model.omega_d", "model.c0" or
    /// "baths.2.temperature".
    pub path: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
    /// Significant digits in CSV floats.
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: ".".into(), formats: vec!["csv".into(), "json".into()], precision: 12 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub m_modes: Option<usize>,
    pub omega_max: Option<f64>,
    pub dt: Option<f64>,
    pub transient: Option<f64>,
    pub window: Option<f64>,
    pub sample_dt: Option<f64>,
    pub system_init: Option<SystemInitSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemInitSection {
    Ground,
    ThermalMean,
}

/// Environment-variable override prefix: `HEATNET_a__b__c=json` sets config
/// path a.b.c (double underscores separate segments; numeric segments index
/// arrays).
pub const ENV_PREFIX: &str = "HEATNET_";

pub fn parse_config(
    text: &str,
    env: impl Iterator<Item = (String, String)>,
) -> Result<RunConfig, CliError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))?;
    for (key, val) in env {
        if let Some(path) = key.strip_prefix(ENV_PREFIX) {
            let segments: Vec<&str> = path.split("__").collect();
            let parsed: Value =
                serde_json::from_str(&val).unwrap_or_else(|_| Value::String(val.clone()));
            set_path(&mut value, &segments, parsed)?;
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::ConfigParse(e.to_string()))
}

/// Set a dotted path inside a JSON tree (used by env overrides and sweeps).
pub fn set_path(value: &mut Value, segments: &[&str], new: Value) -> Result<(), CliError> {
    let mut cur = value;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if let Ok(idx) = seg.parse::<usize>() {
            let arr = cur
                .as_array_mut()
                .ok_or_else(|| CliError::ConfigParse(format!("path segment {seg} expects an array")))?;
            if idx >= arr.len() {
                return Err(CliError::ConfigParse(format!("array index {idx} out of bounds")));
            }
            if last {
                arr[idx] = new;
                return Ok(());
            }
            cur = &mut arr[idx];
        } else {
            let obj = cur
                .as_object_mut()
                .ok_or_else(|| CliError::ConfigParse(format!("path segment {seg} expects an object")))?;
            if last {
                obj.insert((*seg).to_string(), new);
                return Ok(());
            }
            // create missing intermediate sections (they may be defaulted)
            cur = obj.entry((*seg).to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

fn unflatten(n: usize, flat: &[f64], what: &str) -> Result<DMatrix<f64>, CliError> {
    if flat.len() != n * n {
        return Err(CliError::Validation(format!(
            "{what} must have {} entries (row-major {n} x {n}), got {}",
            n * n,
            flat.len()
        )));
    }
    Ok(DMatrix::from_row_slice(n, n, flat))
}

impl RunConfig {
    /// Build the validated model. `overrides` lets sweep axes adjust
    /// (omega_d, c0) without touching the JSON tree.
    pub fn build_model(&self) -> Result<Model, CliError> {
        self.build_model_at(None, None)
    }

    pub fn build_model_at(
        &self,
        c0_override: Option<f64>,
        omega_d_override: Option<f64>,
    ) -> Result<Model, CliError> {
        let n = self.model.masses.len();
        let masses = DVector::from_vec(self.model.masses.clone());
        let mut v0 = unflatten(n, &self.model.v0, "model.v0")?;

        let c0 = c0_override.or(self.model.c0);
        if let Some(c0) = c0 {
            let pattern = match &self.model.coupling_pattern {
                Some(p) => unflatten(n, p, "model.coupling_pattern")?,
                None => {
                    if n != 2 {
                        return Err(CliError::Validation(
                            "model.c0 without coupling_pattern needs a two-node network".into(),
                        ));
                    }
                    DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
                }
            };
            v0 += c0 * pattern;
        }

        let mut harmonics: Vec<(i32, DMatrix<Complex64>)> = Vec::new();
        if self.model.drive.is_some() && !self.model.drive_harmonics.is_empty() {
            return Err(CliError::Validation(
                "model.drive and model.drive_harmonics are mutually exclusive".into(),
            ));
        }
        if let Some(drive) = &self.model.drive {
            if drive.node >= n {
                return Err(CliError::Validation(format!(
                    "drive node {} out of range",
                    drive.node
                )));
            }
            let mut h = DMatrix::zeros(n, n);
            h[(drive.node, drive.node)] = Complex64::new(drive.v1, 0.0);
            harmonics.push((1, h.clone()));
            harmonics.push((-1, h));
        }
        for h in &self.model.drive_harmonics {
            let re = unflatten(n, &h.re, "drive_harmonics.re")?;
            let im = match &h.im {
                Some(im) => unflatten(n, im, "drive_harmonics.im")?,
                None => DMatrix::zeros(n, n),
            };
            let vk = DMatrix::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
            harmonics.push((h.k, vk));
        }
        // synthesize missing conjugate partners
        let ks: Vec<i32> = harmonics.iter().map(|(k, _)| *k).collect();
        for k in ks {
            if !harmonics.iter().any(|(kk, _)| *kk == -k) {
                let vk = harmonics.iter().find(|(kk, _)| *kk == k).unwrap().1.clone();
                harmonics.push((-k, vk.adjoint()));
            }
        }

        let omega_d = omega_d_override.or(self.model.omega_d);
        let network = NetworkSpec::new(masses, v0, harmonics, omega_d)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let baths = self
            .baths
            .iter()
            .map(|b| BathSpec::new(b.node, b.temperature, b.gamma, b.cutoff))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Model::new(network, baths).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// Oracle settings with config overrides applied on top of the derived
    /// defaults.
    pub fn oracle_settings(&self, model: &Model) -> OracleSettings {
        let mut s = OracleSettings::defaults_for(model);
        if let Some(v) = self.oracle.omega_max {
            s.omega_max = v;
        }
        if let Some(v) = self.oracle.dt {
            s.dt = v;
        }
        if let Some(v) = self.oracle.transient {
            s.transient = v;
        }
        if let Some(v) = self.oracle.window {
            s.window = v;
        }
        if let Some(v) = self.oracle.sample_dt {
            s.sample_dt = v;
        }
        if let Some(init) = self.oracle.system_init {
            s.system_init = match init {
                SystemInitSection::Ground => SystemInit::GroundState,
                SystemInitSection::ThermalMean => {
                    let mean = model.temperatures().iter().sum::<f64>()
                        / model.n_baths().max(1) as f64;
                    SystemInit::Thermal(mean)
                }
            };
        }
        match self.oracle.m_modes {
            Some(v) => s.m_modes = v,
            None => s.m_modes = s.required_modes(),
        }
        s
    }

    /// Canonical SHA-256 of the config (sorted keys, compact separators).
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let value = serde_json::to_value(self).expect("config serializes");
        let canon = serde_json::to_string(&value).expect("canonical json");
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG3_CONFIG: &str = r#"{
        "model": {
            "masses": [1.0, 1.0],
            "v0": [4.0, 0.0, 0.0, 1.0],
            "c0": 0.2,
            "drive": { "v1": 0.1, "node": 0 },
            "omega_d": 2.0
        },
        "baths": [
            { "node": 0, "temperature": 1.2, "gamma": 0.01, "cutoff": 10.0 },
            { "node": 1, "temperature": 1.0, "gamma": 0.01, "cutoff": 10.0 }
        ],
        "sweep": {
            "axes": [
                { "path": "model.omega_d", "start": 0.2, "stop": 4.5, "count": 100 },
                { "path": "model.c0", "start": 0.0, "stop": 0.8, "count": 60 }
            ]
        },
        "output": { "dir": "out", "formats": ["csv", "json"], "precision": 12 }
    }"#;

    #[test]
    fn parses_and_builds_the_reference_model() {
        let cfg = parse_config(FIG3_CONFIG, std::iter::empty()).unwrap();
        let m = cfg.build_model().unwrap();
        assert_eq!(m.n_nodes(), 2);
        assert_eq!(m.n_baths(), 2);
        assert_eq!(m.network().omega_d(), Some(2.0));
        let v0 = m.network().v0();
        assert_eq!(v0[(0, 0)], 4.2);
        assert_eq!(v0[(0, 1)], -0.2);
        // both harmonic partners synthesized from the drive shortcut
        assert_eq!(m.network().harmonics().len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = FIG3_CONFIG.replace("\"precision\": 12", "\"precision\": 12, \"typo\": 1");
        assert!(matches!(
            parse_config(&bad, std::iter::empty()),
            Err(CliError::ConfigParse(_))
        ));
    }

    #[test]
    fn env_overrides_apply() {
        let env = vec![
            ("HEATNET_solver__quad_rel_tol".to_string(), "1e-9".to_string()),
            ("HEATNET_baths__0__temperature".to_string(), "1.5".to_string()),
            ("UNRELATED".to_string(), "x".to_string()),
        ];
        let cfg = parse_config(FIG3_CONFIG, env.into_iter()).unwrap();
        assert_eq!(cfg.solver.quad_rel_tol, 1e-9);
        assert_eq!(cfg.baths[0].temperature, 1.5);
    }

    #[test]
    fn schema_round_trip_is_identity() {
        let cfg = parse_config(FIG3_CONFIG, std::iter::empty()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let cfg2 = parse_config(&text, std::iter::empty()).unwrap();
        assert_eq!(serde_json::to_value(&cfg).unwrap(), serde_json::to_value(&cfg2).unwrap());
        assert_eq!(cfg.hash(), cfg2.hash());
    }

    #[test]
    fn sweep_overrides_rebuild_the_potential() {
        let cfg = parse_config(FIG3_CONFIG, std::iter::empty()).unwrap();
        let m = cfg.build_model_at(Some(0.5), Some(1.1)).unwrap();
        assert_eq!(m.network().v0()[(0, 1)], -0.5);
        assert_eq!(m.network().omega_d(), Some(1.1));
    }

    #[test]
    fn general_harmonics_accepted_and_completed() {
        let cfg_text = r#"{
            "model": {
                "masses": [1.0, 1.0],
                "v0": [4.2, -0.2, -0.2, 1.2],
                "drive_harmonics": [ { "k": 2, "re": [0.05, 0, 0, 0] } ],
                "omega_d": 1.5
            },
            "baths": [
                { "node": 0, "temperature": 1.0, "gamma": 0.01, "cutoff": 10.0 }
            ]
        }"#;
        let cfg = parse_config(cfg_text, std::iter::empty()).unwrap();
        let m = cfg.build_model().unwrap();
        assert_eq!(m.network().max_harmonic(), 2);
        assert_eq!(m.network().harmonics().len(), 2);
    }
}
