//! Pipeline configuration: one TOML file with a versioned schema.

use std::path::{Path, PathBuf};

use adlreq::chain::{SegmentGeometry, StackOptions, DEFAULT_FRACTIONS, DEFAULT_MASSES};
use adlreq::dynamics::{default_objects, ObjectDefinition};
use adlreq::regression::{BodyKind, ComboKey, PERCENTILES};
use adlreq::trajectory::{Task, VelocityCaps, DEFAULT_VELOCITY_PERCENTILES};
use adlreq::wrist::DriveKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub stack: StackConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub screening: ScreeningConfig,
    #[serde(default)]
    pub slow_down: SlowDownConfig,
    #[serde(default)]
    pub objects: ObjectsConfig,
    #[serde(default)]
    pub inputs: InputsConfig,
    #[serde(default)]
    pub wrist: WristConfig,
    #[serde(default)]
    pub predict: PredictConfig,
    #[serde(default)]
    pub summarize: SummarizeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            geometry: GeometryConfig::default(),
            stack: StackConfig::default(),
            filter: FilterConfig::default(),
            screening: ScreeningConfig::default(),
            slow_down: SlowDownConfig::default(),
            objects: ObjectsConfig::default(),
            inputs: InputsConfig::default(),
            wrist: WristConfig::default(),
            predict: PredictConfig::default(),
            summarize: SummarizeConfig::default(),
        }
    }
}

/// Segment lengths, m. Several subjects average into the regression
/// geometry; the first subject (or the mean) drives the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub humerus_length: f64,
    pub ulna_length: f64,
    pub hand_length: f64,
    #[serde(default)]
    pub shoulder_offset: [f64; 3],
    /// Per-subject geometries; the mean replaces the lengths above.
    #[serde(default)]
    pub subjects: Vec<SubjectGeometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectGeometry {
    pub subject: String,
    pub humerus_length: f64,
    pub ulna_length: f64,
    pub hand_length: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = SegmentGeometry::default();
        GeometryConfig {
            humerus_length: g.humerus_length,
            ulna_length: g.ulna_length,
            hand_length: g.hand_length,
            shoulder_offset: g.shoulder_offset,
            subjects: Vec::new(),
        }
    }
}

impl GeometryConfig {
    /// Geometry of one subject, falling back to the shared lengths.
    pub fn for_subject(&self, subject: Option<&str>) -> Result<SegmentGeometry, CliError> {
        let found = subject.and_then(|s| self.subjects.iter().find(|g| g.subject == s));
        let mut g = match found {
            Some(s) => SegmentGeometry::new(s.humerus_length, s.ulna_length, s.hand_length),
            None => SegmentGeometry::new(self.humerus_length, self.ulna_length, self.hand_length),
        }
        .map_err(CliError::validation)?;
        g.shoulder_offset = self.shoulder_offset;
        Ok(g)
    }

    /// Mean over subjects, or the shared lengths when none are listed.
    pub fn mean(&self) -> Result<SegmentGeometry, CliError> {
        if self.subjects.is_empty() {
            return self.for_subject(None);
        }
        let all = self
            .subjects
            .iter()
            .map(|s| self.for_subject(Some(&s.subject)))
            .collect::<Result<Vec<_>, _>>()?;
        SegmentGeometry::mean(&all).map_err(CliError::validation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackConfig {
    pub masses: Vec<f64>,
    pub fractions: Vec<f64>,
    pub cylinder_diameter: f64,
    pub include_humerus: bool,
    pub include_ulna: bool,
    pub include_hand: bool,
}

impl Default for StackConfig {
    fn default() -> Self {
        let o = StackOptions::default();
        StackConfig {
            masses: DEFAULT_MASSES.to_vec(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            cylinder_diameter: o.cylinder_diameter,
            include_humerus: o.include_humerus,
            include_ulna: o.include_ulna,
            include_hand: o.include_hand,
        }
    }
}

impl StackConfig {
    pub fn options(&self) -> StackOptions {
        StackOptions {
            cylinder_diameter: self.cylinder_diameter,
            include_humerus: self.include_humerus,
            include_ulna: self.include_ulna,
            include_hand: self.include_hand,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub enabled: bool,
    pub order: usize,
    pub cutoff_hz: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            enabled: true,
            order: 3,
            cutoff_hz: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    pub velocity: bool,
    pub torque: bool,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            velocity: true,
            torque: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct SlowDownConfig {
    pub enabled: bool,
    pub caps: VelocityCaps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectsConfig {
    pub enabled: bool,
    pub definitions: Vec<ObjectDefinition>,
}

impl Default for ObjectsConfig {
    fn default() -> Self {
        ObjectsConfig {
            enabled: true,
            definitions: default_objects(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct InputsConfig {
    /// Trajectory CSV files, relative to the config file.
    pub trajectories: Vec<PathBuf>,
    /// Record store read by `fit` and `optimize-wrist`; defaults to
    /// `<out>/records`.
    pub records: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
}

/// Random minimum-jerk trials generated when no trajectory files are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub trials: usize,
    /// Tasks assigned round-robin. III and VII carry no objects.
    pub tasks: Vec<Task>,
    pub keyposes: usize,
    /// Peak joint speed of every segment, °/s.
    pub peak_speed: f64,
    pub sample_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            trials: 0,
            tasks: vec![Task::III, Task::VII],
            keyposes: 4,
            peak_speed: 60.0,
            sample_rate: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WristConfig {
    /// Records whose source label matches are optimized.
    pub source: String,
    pub kinds: Vec<DriveKind>,
    pub grid_step: f64,
    pub refine: bool,
    /// Optional CSV `q_WF,q_WD,tau_WF,tau_WD,nu_WF,nu_WD` used instead of
    /// the record store.
    pub samples: Option<PathBuf>,
}

impl Default for WristConfig {
    fn default() -> Self {
        WristConfig {
            source: "hand:m=0.5".into(),
            kinds: DriveKind::ALL.to_vec(),
            grid_step: 1.0,
            refine: true,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    /// Coefficient table; defaults to `<out>/coefficients.csv`.
    pub table: Option<PathBuf>,
    pub percentiles: Vec<u8>,
    pub components: Vec<Component>,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            table: None,
            percentiles: vec![0, 100],
            components: Vec::new(),
        }
    }
}

/// One term `K·scalar` of a composite prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub joint: adlreq::chain::ReportJoint,
    pub task: Task,
    /// `Humerus`, `Ulna`, `Hand` or `object:<name>`.
    pub body: String,
    /// Mass × CoM distance (kg·m), mass (kg) or static torque (N·m).
    pub scalar: f64,
}

impl Component {
    pub fn combo(&self) -> Result<ComboKey, CliError> {
        Ok(ComboKey {
            joint: self.joint,
            task: self.task,
            body: self.body.parse::<BodyKind>().map_err(CliError::validation)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarizeConfig {
    pub percentiles: Vec<f64>,
    pub slow_down: bool,
}

impl Default for SummarizeConfig {
    fn default() -> Self {
        SummarizeConfig {
            percentiles: DEFAULT_VELOCITY_PERCENTILES.to_vec(),
            slow_down: false,
        }
    }
}

impl PipelineConfig {
    /// Parses and validates; relative input paths are resolved against
    /// `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.trajectories.iter_mut().for_each(join);
        self.inputs.records.iter_mut().for_each(join);
        self.wrist.samples.iter_mut().for_each(join);
        self.predict.table.iter_mut().for_each(join);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.geometry.mean()?;
        for s in &self.geometry.subjects {
            self.geometry.for_subject(Some(&s.subject))?;
        }
        let st = &self.stack;
        if st.masses.is_empty() {
            return fail("stack.masses must not be empty".into());
        }
        if st.masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return fail("stack.masses must be positive".into());
        }
        if (st.include_humerus || st.include_ulna) && st.fractions.is_empty() {
            return fail("stack.fractions must not be empty".into());
        }
        if !(st.cylinder_diameter > 0.0) {
            return fail("stack.cylinder_diameter must be positive".into());
        }
        // builds every cylinder, which checks fraction feasibility
        adlreq::chain::generate_model_stack_with(&self.geometry.mean()?, &st.masses, &st.fractions, &st.options())
            .map_err(CliError::validation)?;
        if self.filter.enabled && (self.filter.order == 0 || !(self.filter.cutoff_hz > 0.0)) {
            return fail("filter.order and filter.cutoff_hz must be positive".into());
        }
        self.slow_down.caps.validate().map_err(CliError::validation)?;
        for o in &self.objects.definitions {
            o.validate().map_err(CliError::validation)?;
        }
        let syn = &self.inputs.synthetic;
        if syn.trials > 0 {
            if syn.tasks.is_empty() {
                return fail("inputs.synthetic.tasks must not be empty".into());
            }
            if syn.keyposes < 2 {
                return fail("inputs.synthetic.keyposes must be at least 2".into());
            }
            if !(syn.peak_speed > 0.0 && syn.sample_rate > 0.0) {
                return fail("inputs.synthetic.peak_speed and sample_rate must be positive".into());
            }
        }
        if !(self.wrist.grid_step > 0.0 && self.wrist.grid_step <= 90.0) {
            return fail("wrist.grid_step must lie in (0, 90]".into());
        }
        self.wrist
            .source
            .parse::<adlreq::dynamics::TorqueSource>()
            .map_err(CliError::validation)?;
        for p in &self.predict.percentiles {
            if !PERCENTILES.contains(p) {
                return fail(format!("predict percentile {p} is not one of {PERCENTILES:?}"));
            }
        }
        for c in &self.predict.components {
            c.combo()?;
        }
        if self.summarize.percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return fail("summarize.percentiles must lie in [0, 100]".into());
        }
        Ok(())
    }
}
