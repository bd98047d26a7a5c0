//! Experiment configuration. Angles are given in degrees and converted to
//! radians here; multiplicative and chip parameters keep their native units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tomocal_core::calibration::{CostKind, PollDirections, Refinement};
use tomocal_core::measurement::{ModelVariant, CHIP_INITIAL_COEFFS, CHIP_TRUE_COEFFS};
use tomocal_core::{OptimizerConfig, ProbeKind};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AdditiveStudy,
    Multiplicative,
    Waveplate,
    ReversedWaveplate,
    Polarimeter,
    Chip,
    Landscape,
}

impl Scenario {
    /// Error model calibrated (or scanned) by the scenario.
    pub fn variant(self) -> Option<ModelVariant> {
        match self {
            Scenario::AdditiveStudy => Some(ModelVariant::AdditiveAngles),
            Scenario::Multiplicative | Scenario::Landscape => Some(ModelVariant::Multiplicative),
            Scenario::Waveplate | Scenario::ReversedWaveplate => Some(ModelVariant::WaveplateRetardance),
            Scenario::Chip => Some(ModelVariant::ChipPolynomial),
            Scenario::Polarimeter => None,
        }
    }
}

/// Random truth drawn independently for every parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum TruthDistribution {
    Normal {
        #[serde(rename = "sigmaDeg")]
        sigma_deg: f64,
    },
}

/// Global-search settings; bounds are in the model's config units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub lower_bound: Vec<f64>,
    pub upper_bound: Vec<f64>,
    pub lh_samples: usize,
    pub max_evaluations: usize,
    pub poll_directions: PollDirections,
    pub local_starts: usize,
    pub mesh_initial: f64,
    pub mesh_min: f64,
    pub refinement: Refinement,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            lower_bound: d.lower_bound,
            upper_bound: d.upper_bound,
            lh_samples: d.lh_samples,
            max_evaluations: d.max_evaluations,
            poll_directions: d.poll_directions,
            local_starts: d.local_starts,
            mesh_initial: d.mesh_initial,
            mesh_min: d.mesh_min,
            refinement: d.refinement,
        }
    }
}

impl OptimizerSection {
    pub fn to_core(&self, variant: ModelVariant, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            lower_bound: to_internal(variant, &self.lower_bound),
            upper_bound: to_internal(variant, &self.upper_bound),
            lh_samples: self.lh_samples,
            max_evaluations: self.max_evaluations,
            poll_directions: self.poll_directions,
            seed,
            local_starts: self.local_starts,
            mesh_initial: self.mesh_initial,
            mesh_min: self.mesh_min,
            refinement: self.refinement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AxisSection {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct LandscapeSection {
    pub probes: Vec<ProbeKind>,
    pub axes: Vec<AxisSection>,
    pub cost: CostKind,
    /// Grid nodes within twice the minimum that make a valley a rift.
    pub rift_nodes: usize,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        Self {
            probes: vec![
                ProbeKind::Cube8,
                ProbeKind::Icosahedron12,
                ProbeKind::Latlon { n: 14 },
                ProbeKind::Latlon { n: 22 },
                ProbeKind::Fibonacci { n: 108 },
            ],
            axes: default_axes(),
            cost: CostKind::PurityModulation,
            rift_nodes: 5,
        }
    }
}

fn default_axes() -> Vec<AxisSection> {
    ["delta", "epsilon"]
        .iter()
        .map(|p| AxisSection {
            param: p.to_string(),
            min: -0.15,
            max: 0.15,
            n: 41,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct PolarimeterSection {
    pub true_deviation_deg: f64,
    pub assumed_deviation_deg: f64,
    pub scan_min_deg: f64,
    pub scan_max_deg: f64,
    pub scan_step_deg: f64,
    pub samples: usize,
}

impl Default for PolarimeterSection {
    fn default() -> Self {
        Self {
            true_deviation_deg: 5.0,
            assumed_deviation_deg: 0.0,
            scan_min_deg: 0.0,
            scan_max_deg: 10.0,
            scan_step_deg: 0.25,
            samples: tomocal_core::reconstruction::DEFAULT_TRACE_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct WaveplateSection {
    /// Quarter-wave plate between preparation and measurement; `null` removes it.
    pub central_qwp_deg: Option<f64>,
    /// True preparation-plate deviations of the forward scenario.
    pub preparation_truth_deg: [f64; 2],
    /// True projection-plate deviations of the reversed scenario.
    pub projection_truth_deg: [f64; 2],
}

impl Default for WaveplateSection {
    fn default() -> Self {
        Self {
            central_qwp_deg: Some(-12.5),
            preparation_truth_deg: [4.5, -3.6],
            projection_truth_deg: [5.5, -1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ChipSection {
    /// Coefficients assumed before calibration; drives are planned from them.
    pub initial_coeffs: [f64; 6],
    /// Search box half-widths around the initial coefficients.
    pub half_widths: [f64; 6],
    /// Points per one-dimensional `P_min` section.
    pub section_points: usize,
}

impl Default for ChipSection {
    fn default() -> Self {
        Self {
            initial_coeffs: CHIP_INITIAL_COEFFS,
            half_widths: [0.5, 0.05, 0.005, 0.5, 0.05, 0.005],
            section_points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: String,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeKind>,
    /// Purity of every probe state (1 = pure).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_purity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_probe: Option<ProbeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_distribution: Option<TruthDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Probe indices used to fix the gauge; defaults to the probes nearest
    /// two equator points 60° apart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_reference: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarimeter: Option<PolarimeterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveplate: Option<WaveplateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip: Option<ChipSection>,
}

/// Whether parameter values of `variant` are angles (degrees in configs).
pub fn is_angular(variant: ModelVariant) -> bool {
    matches!(variant, ModelVariant::AdditiveAngles | ModelVariant::WaveplateRetardance)
}

pub fn to_internal(variant: ModelVariant, v: &[f64]) -> Vec<f64> {
    if is_angular(variant) {
        v.iter().map(|x| x.to_radians()).collect()
    } else {
        v.to_vec()
    }
}

pub fn to_config_units(variant: ModelVariant, v: &[f64]) -> Vec<f64> {
    if is_angular(variant) {
        v.iter().map(|x| x.to_degrees()).collect()
    } else {
        v.to_vec()
    }
}

/// Column names with a unit suffix for angular parameters.
pub fn unit_names(variant: ModelVariant) -> Vec<String> {
    let suffix = if is_angular(variant) { "_deg" } else { "" };
    variant.param_names().into_iter().map(|n| format!("{n}{suffix}")).collect()
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Built-in configuration of the additive-error simulation study.
    pub fn demo_additive() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            scenario: Scenario::AdditiveStudy,
            probe: Some(ProbeKind::Fibonacci { n: 30 }),
            probe_purity: None,
            test_probe: Some(ProbeKind::Fibonacci { n: 108 }),
            truth_params: None,
            truth_distribution: Some(TruthDistribution::Normal { sigma_deg: 10.0 }),
            nominal_params: None,
            optimizer: None,
            trials: Some(25),
            shots: None,
            output_dir: None,
            seed: Some(1),
            gauge_reference: None,
            landscape: None,
            polarimeter: None,
            waveplate: None,
            chip: None,
        }
    }

    /// A minimal configuration for `scenario` with every default applied.
    pub fn minimal(scenario: Scenario) -> Self {
        Self {
            scenario,
            trials: None,
            truth_distribution: None,
            ..Self::demo_additive()
        }
        .without_study_fields()
    }

    fn without_study_fields(mut self) -> Self {
        if self.scenario != Scenario::AdditiveStudy {
            self.probe = None;
            self.test_probe = None;
        }
        self
    }

    pub fn probe_kind(&self) -> ProbeKind {
        self.probe.unwrap_or(match self.scenario {
            Scenario::AdditiveStudy => ProbeKind::Fibonacci { n: 30 },
            Scenario::Chip => ProbeKind::Latlon { n: 22 },
            Scenario::Polarimeter => ProbeKind::Latlon { n: 8 },
            _ => ProbeKind::Cube8,
        })
    }

    pub fn test_kind(&self) -> ProbeKind {
        self.test_probe.unwrap_or(ProbeKind::Fibonacci { n: 108 })
    }

    pub fn trial_count(&self) -> usize {
        self.trials.unwrap_or(1)
    }

    pub fn optimizer_section(&self) -> OptimizerSection {
        self.optimizer.clone().unwrap_or_else(|| match self.scenario {
            Scenario::Chip => {
                let chip = self.chip.clone().unwrap_or_default();
                OptimizerSection {
                    lower_bound: (0..6).map(|i| chip.initial_coeffs[i] - chip.half_widths[i]).collect(),
                    upper_bound: (0..6).map(|i| chip.initial_coeffs[i] + chip.half_widths[i]).collect(),
                    refinement: Refinement::Covariance,
                    ..Default::default()
                }
            }
            _ => OptimizerSection::default(),
        })
    }

    /// Truth in config units, when it is fixed rather than drawn.
    pub fn fixed_truth(&self) -> Option<Vec<f64>> {
        if let Some(t) = &self.truth_params {
            return Some(t.clone());
        }
        if self.truth_distribution.is_some() {
            return None;
        }
        Some(match self.scenario {
            Scenario::AdditiveStudy => vec![0.0; 12],
            Scenario::Multiplicative | Scenario::Landscape => vec![0.02, -0.04],
            Scenario::Waveplate => vec![5.5, -1.5],
            Scenario::ReversedWaveplate => vec![4.5, -3.6],
            Scenario::Chip => CHIP_TRUE_COEFFS.to_vec(),
            Scenario::Polarimeter => vec![],
        })
    }

    /// Nominal (initially assumed) parameters in config units.
    pub fn nominal(&self) -> Vec<f64> {
        if let Some(n) = &self.nominal_params {
            return n.clone();
        }
        match self.scenario {
            Scenario::Chip => self.chip.clone().unwrap_or_default().initial_coeffs.to_vec(),
            s => vec![0.0; s.variant().map_or(0, |v| v.param_count())],
        }
    }

    fn needs_seed(&self) -> bool {
        self.truth_distribution.is_some() || self.shots.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schemaVersion {:?}, expected {SCHEMA_VERSION:?}",
                self.schema_version
            )));
        }
        if self.needs_seed() && self.seed.is_none() {
            return Err(config_err("seed is required for randomized truth or finite shots"));
        }
        if self.scenario != Scenario::AdditiveStudy && self.trial_count() != 1 {
            return Err(config_err("trials only applies to additive_study"));
        }
        if self.trial_count() == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if self.truth_params.is_some() && self.truth_distribution.is_some() {
            return Err(config_err("give truthParams or truthDistribution, not both"));
        }
        if let Some(TruthDistribution::Normal { sigma_deg }) = self.truth_distribution {
            if self.scenario != Scenario::AdditiveStudy {
                return Err(config_err("truthDistribution only applies to additive_study"));
            }
            if !(sigma_deg >= 0.0 && sigma_deg.is_finite()) {
                return Err(config_err("sigmaDeg must be finite and non-negative"));
            }
        }
        if let Some(p) = self.probe_purity {
            if !(0.5..=1.0).contains(&p) {
                return Err(config_err("probePurity must lie in [0.5, 1]"));
            }
        }
        if self.shots == Some(0) {
            return Err(config_err("shots must be positive"));
        }
        if let Some(variant) = self.scenario.variant() {
            let n = variant.param_count();
            if self.scenario != Scenario::Landscape {
                for (name, v) in [("truthParams", self.fixed_truth()), ("nominalParams", Some(self.nominal()))] {
                    if let Some(v) = v {
                        if v.len() != n {
                            return Err(config_err(format!("{name} needs {n} values, got {}", v.len())));
                        }
                        if v.iter().any(|x| !x.is_finite()) {
                            return Err(config_err(format!("{name} must be finite")));
                        }
                    }
                }
            }
            let opt = self.optimizer_section();
            opt.to_core(variant, 0)
                .validate(n)
                .map_err(|e| config_err(format!("optimizer: {e}")))?;
        }
        tomocal_core::probe_set(self.probe_kind()).map_err(|e| config_err(format!("probe: {e}")))?;
        tomocal_core::probe_set(self.test_kind()).map_err(|e| config_err(format!("testProbe: {e}")))?;
        if let Some([a, b]) = self.gauge_reference {
            let n = self.probe_kind().len();
            if a >= n || b >= n || a == b {
                return Err(config_err(format!("gaugeReference needs two distinct indices below {n}")));
            }
        }
        match self.scenario {
            Scenario::Landscape => self.validate_landscape()?,
            Scenario::Polarimeter => self.validate_polarimeter()?,
            Scenario::Chip => {
                let c = self.chip.clone().unwrap_or_default();
                if c.half_widths.iter().any(|w| !(*w > 0.0)) || c.section_points < 2 {
                    return Err(config_err("chip halfWidths must be positive and sectionPoints at least 2"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn validate_landscape(&self) -> Result<()> {
        let l = self.landscape.clone().unwrap_or_default();
        let names = ModelVariant::Multiplicative.param_names();
        if l.probes.is_empty() {
            return Err(config_err("landscape needs at least one probe set"));
        }
        for p in &l.probes {
            tomocal_core::probe_set(*p).map_err(|e| config_err(format!("landscape probe: {e}")))?;
        }
        if l.axes.is_empty() || l.axes.len() > 2 {
            return Err(config_err("landscape takes one or two axes"));
        }
        for a in &l.axes {
            if !names.contains(&a.param) {
                return Err(config_err(format!("unknown landscape parameter {:?}; use one of {names:?}", a.param)));
            }
            if a.n < 2 || !(a.min < a.max) {
                return Err(config_err(format!("axis {} needs min < max and n ≥ 2", a.param)));
            }
        }
        if let Some(t) = &self.truth_params {
            if t.len() != 2 {
                return Err(config_err("landscape truthParams needs 2 values"));
            }
        }
        Ok(())
    }

    fn validate_polarimeter(&self) -> Result<()> {
        let p = self.polarimeter.clone().unwrap_or_default();
        if !(p.scan_step_deg > 0.0 && p.scan_min_deg <= p.scan_max_deg) {
            return Err(config_err("polarimeter scan needs scanStepDeg > 0 and scanMinDeg ≤ scanMaxDeg"));
        }
        if p.samples < 8 {
            return Err(config_err("polarimeter samples must be at least 8"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"schemaVersion":"1","scenario":"chip","colour":"red"}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(ExperimentConfig::from_json(r#"{"schemaVersion":"1","scenario":"chip"}"#).is_ok());
    }

    #[test]
    fn schema_version_is_checked() {
        assert!(ExperimentConfig::from_json(r#"{"schemaVersion":"2","scenario":"chip"}"#).is_err());
    }

    #[test]
    fn stochastic_runs_need_a_seed() {
        let text = r#"{"schemaVersion":"1","scenario":"additive_study","truthDistribution":{"kind":"normal","sigmaDeg":10}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let seeded = text.replace("}}", "},\"seed\":3}");
        assert!(ExperimentConfig::from_json(&seeded).is_ok());
    }

    #[test]
    fn truth_arity_is_checked() {
        let text = r#"{"schemaVersion":"1","scenario":"waveplate","truthParams":[1,2,3]}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn degrees_convert_at_the_boundary() {
        let v = to_internal(ModelVariant::WaveplateRetardance, &[180.0, -90.0]);
        assert!((v[0] - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(to_internal(ModelVariant::Multiplicative, &[0.02]), vec![0.02]);
        assert_eq!(unit_names(ModelVariant::WaveplateRetardance), vec!["delta_deg", "epsilon_deg"]);
    }

    #[test]
    fn demo_round_trips() {
        let d = ExperimentConfig::demo_additive();
        d.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn minimal_configs_validate() {
        for s in [
            Scenario::Multiplicative,
            Scenario::Waveplate,
            Scenario::ReversedWaveplate,
            Scenario::Polarimeter,
            Scenario::Chip,
            Scenario::Landscape,
        ] {
            ExperimentConfig::minimal(s).validate().unwrap();
        }
    }
}
