//! Parameter schema for the two-oscillator system.
//!
//! Every frequency and rate is measured in units of the left mechanical
//! frequency, so `left.omega_m` is 1.0 in all shipped presets and time is
//! measured in units of its inverse.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// One optomechanical cell: a cavity mode coupled to a mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Mechanical frequency.
    pub omega_m: f64,
    /// Mechanical damping rate.
    pub gamma: f64,
    /// Optical damping rate.
    pub kappa: f64,
    /// Single-photon optomechanical coupling.
    pub g: f64,
    /// Input optical detuning (laser minus cavity) in the laser frame.
    pub delta0: f64,
}

impl OscillatorParams {
    /// Blue-detuned cell with `delta0 = omega_m`.
    pub fn self_oscillating(omega_m: f64, gamma: f64, kappa: f64, g: f64) -> Self {
        Self {
            omega_m,
            gamma,
            kappa,
            g,
            delta0: omega_m,
        }
    }
}

/// How light travels between the two cavities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    /// Reversible photon hopping with strength `lambda`; both cavities driven.
    Bidirectional { lambda: f64 },
    /// Cascaded link: the left output feeds the right input with efficiency
    /// `eta`. Only the left cavity is driven.
    Unidirectional {
        eta: f64,
        /// Add the independent vacuum port that restores the right cavity's
        /// total input noise to `2 kappa_R` when `eta < 1`.
        #[serde(default)]
        vacuum_topup: bool,
    },
}

impl Topology {
    pub fn is_bidirectional(&self) -> bool {
        matches!(self, Topology::Bidirectional { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Bidirectional { .. } => "bidirectional",
            Topology::Unidirectional { .. } => "unidirectional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Laser drive amplitude `E_l`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Mean thermal phonon number, shared by both mechanical baths.
    pub n_th: f64,
}

/// Integration and post-processing knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericsParams {
    /// Fixed RK4 step.
    pub dt: f64,
    /// Time discarded before averaging.
    pub t_transient: f64,
    /// Length of the averaging window.
    pub t_average: f64,
    /// Amplitude modulus below which a phase is held at its previous value.
    pub phase_epsilon: f64,
    /// Relative tolerance of the stroboscopic limit-cycle test.
    pub convergence_tol: f64,
    /// Covariance samples are kept every `sample_stride` steps.
    #[serde(default = "default_sample_stride")]
    pub sample_stride: usize,
}

fn default_sample_stride() -> usize {
    NumericsParams::default().sample_stride
}

impl Default for NumericsParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_transient: 1000.0,
            t_average: 300.0,
            phase_epsilon: 1e-9,
            convergence_tol: 1e-6,
            sample_stride: 20,
        }
    }
}

/// Which mechanical mode is measured in the discord optimisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscordSide {
    /// Measure the left oscillator.
    Left,
    /// Measure the right oscillator.
    #[default]
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasureOptions {
    #[serde(default)]
    pub discord_side: DiscordSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub left: OscillatorParams,
    pub right: OscillatorParams,
    pub topology: Topology,
    pub drive: DriveParams,
    pub bath: BathParams,
    pub numerics: NumericsParams,
    #[serde(default)]
    pub measures: MeasureOptions,
}

/// Names accepted by [`standard_config`].
pub const PRESETS: [&str; 3] = ["fig2_bidirectional", "fig2_unidirectional", "fig5_thermal"];

/// Reference parameter sets.
///
/// `fig5_thermal` is the bidirectional set with `n_th = 10`; the thermal
/// unidirectional variant is obtained by overriding the topology.
pub fn standard_config(preset: &str) -> Result<SystemConfig, ConfigError> {
    let left = OscillatorParams::self_oscillating(1.0, 0.005, 0.15, 0.005);
    let right = OscillatorParams::self_oscillating(1.005, 0.005, 0.15, 0.005);
    let mut config = SystemConfig {
        left,
        right,
        topology: Topology::Bidirectional {
            lambda: left.kappa / 2.0,
        },
        drive: DriveParams { amplitude: 52.0 },
        bath: BathParams { n_th: 0.0 },
        numerics: NumericsParams::default(),
        measures: MeasureOptions::default(),
    };
    match preset {
        "fig2_bidirectional" => {}
        "fig2_unidirectional" => {
            config.topology = Topology::Unidirectional {
                eta: 1.0,
                vacuum_topup: false,
            }
        }
        "fig5_thermal" => config.bath.n_th = 10.0,
        other => {
            return Err(ConfigError::UnknownPreset {
                name: other.to_string(),
                valid: PRESETS.join(", "),
            })
        }
    }
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    /// `right.omega_m - left.omega_m`.
    pub delta: f64,
    pub lambda_over_kappa: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Present only when there are no violations.
    pub derived: Option<Derived>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Converts a failed report into an error carrying every violation.
    pub fn into_result(self) -> Result<Derived, ConfigError> {
        match self.derived {
            Some(d) if self.violations.is_empty() => Ok(d),
            _ => Err(ConfigError::Invalid(
                self.violations
                    .iter()
                    .map(|v| format!("{}: {}", v.path, v.message))
                    .collect::<Vec<_>>()
                    .join("; "),
            )),
        }
    }
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, path: &str, message: String) {
        self.violations.push(Violation {
            path: path.to_string(),
            message,
        });
    }

    fn positive(&mut self, path: &str, name: &str, value: f64) {
        if !(value.is_finite() && value > 0.0) {
            self.fail(path, format!("{name} must be > 0"));
        }
    }

    fn non_negative(&mut self, path: &str, name: &str, value: f64) {
        if !(value.is_finite() && value >= 0.0) {
            self.fail(path, format!("{name} must be >= 0"));
        }
    }

    fn oscillator(&mut self, prefix: &str, p: &OscillatorParams) {
        self.positive(&format!("{prefix}.omega_m"), "omega_m", p.omega_m);
        self.positive(&format!("{prefix}.gamma"), "gamma", p.gamma);
        self.positive(&format!("{prefix}.kappa"), "kappa", p.kappa);
        self.positive(&format!("{prefix}.g"), "g", p.g);
        if !p.delta0.is_finite() {
            self.fail(&format!("{prefix}.delta0"), "delta0 must be finite".into());
        }
    }
}

/// Checks every invariant of `config`; failures are reported, never raised.
pub fn validate(config: &SystemConfig) -> ValidationReport {
    let mut c = Checker {
        violations: Vec::new(),
    };
    c.oscillator("left", &config.left);
    c.oscillator("right", &config.right);
    match config.topology {
        Topology::Bidirectional { lambda } => {
            c.non_negative("topology.lambda", "lambda", lambda);
        }
        Topology::Unidirectional { eta, .. } => {
            if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
                c.fail("topology.eta", "eta must lie in (0,1]".into());
            }
        }
    }
    c.non_negative("drive.amplitude", "amplitude", config.drive.amplitude);
    c.non_negative("bath.n_th", "n_th", config.bath.n_th);
    let n = &config.numerics;
    c.positive("numerics.dt", "dt", n.dt);
    c.non_negative("numerics.t_transient", "t_transient", n.t_transient);
    c.positive("numerics.t_average", "t_average", n.t_average);
    c.positive("numerics.phase_epsilon", "phase_epsilon", n.phase_epsilon);
    c.positive(
        "numerics.convergence_tol",
        "convergence_tol",
        n.convergence_tol,
    );
    if n.sample_stride == 0 {
        c.fail(
            "numerics.sample_stride",
            "sample_stride must be >= 1".into(),
        );
    }

    let delta = config.right.omega_m - config.left.omega_m;
    if !delta.is_finite() {
        c.fail("right.omega_m", "detuning must be finite".into());
    }

    let derived = c.violations.is_empty().then(|| {
        let (lambda_over_kappa, eta) = match config.topology {
            Topology::Bidirectional { lambda } => (Some(lambda / config.left.kappa), None),
            Topology::Unidirectional { eta, .. } => (None, Some(eta)),
        };
        Derived {
            delta,
            lambda_over_kappa,
            eta,
        }
    });
    ValidationReport {
        violations: c.violations,
        derived,
    }
}

impl SystemConfig {
    /// Frequency detuning `right.omega_m - left.omega_m`.
    pub fn detuning(&self) -> f64 {
        self.right.omega_m - self.left.omega_m
    }

    /// Time at which the averaging window closes.
    pub fn t_end(&self) -> f64 {
        self.numerics.t_transient + self.numerics.t_average
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses `text`, applies dotted-path `overrides` (`key=value`), then
    /// deserializes. Values are read as JSON, falling back to plain strings.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: serde_json::Value = serde_json::from_str(text)?;
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        Ok(serde_json::from_value(doc)?)
    }
}

/// Applies one `a.b.c=value` assignment to a JSON document.
pub fn apply_override(doc: &mut serde_json::Value, item: &str) -> Result<(), ConfigError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(format!("expected key=value, got `{item}`")))?;
    let value = serde_json::from_str(raw.trim())
        .unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.trim().split('.').collect();
    for (depth, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::Override(format!("`{path}`: not an object at `{key}`")))?;
        if depth + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*key)
            .ok_or_else(|| ConfigError::Override(format!("`{path}`: unknown key `{key}`")))?;
    }
    unreachable!("split always yields at least one key")
}
