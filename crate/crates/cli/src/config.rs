//! Scenario files: TOML documents describing one closed-loop experiment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cerg_core::governor::penetration_for_force;
use cerg_core::{
    AffineLimit, ConstraintSet, ContactParams, ControlMode, DoubleIntegrator, GainConfig, GovernorParams, Halfspace,
    HardConstraint, RrArm, Scenario, SoftConstraint, State, TaskHalfspace,
};
use nalgebra::{Matrix2, Vector2};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::expr::Scalar;
use crate::plant::Plant;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CERG_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "cerg-out";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: PlantSection,
    pub gains: GainsSection,
    pub constraints: ConstraintsSection,
    pub contact: ContactSection,
    #[serde(default)]
    pub governor: GovernorSection,
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSection {
    DoubleIntegrator {},
    RrArm {
        /// Link lengths (m).
        l1: f64,
        l2: f64,
        /// Tip masses (kg).
        m1: f64,
        m2: f64,
        /// Gravity along -y (m/s²).
        #[serde(default = "default_gravity")]
        g0: f64,
    },
}

fn default_gravity() -> f64 {
    RrArm::DEFAULT_GRAVITY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Joint,
    Task,
}

/// A scalar gain `k·I` or a full 2x2 matrix.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Scalar(f64),
    Matrix([[f64; 2]; 2]),
}

impl Gain {
    fn matrix(&self) -> Matrix2<f64> {
        match self {
            Gain::Scalar(k) => Matrix2::identity() * *k,
            Gain::Matrix(m) => Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub mode: ModeName,
    /// Joint-space stiffness and damping.
    pub kp: Option<Gain>,
    pub kd: Option<Gain>,
    /// End-effector stiffness (N/m) and joint damping.
    pub task_kp: Option<f64>,
    pub task_kd: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSection {
    /// Energy bound for contact (J).
    pub e_max: f64,
    pub soft: SoftSection,
    #[serde(default)]
    pub hard: Vec<HardSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceName {
    Joint,
    Task,
}

/// Halfspace `normalᵀp ≤ offset` in joint or end-effector coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftSection {
    pub space: SpaceName,
    pub normal: [f64; 2],
    pub offset: f64,
}

/// Joint indices are zero-based.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HardSection {
    JointPosition { index: usize, limit: Scalar },
    JointVelocity { index: usize, limit: f64 },
    Input { index: usize, limit: f64 },
    TaskHalfspace { normal: [f64; 2], offset: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSection {
    /// Wall stiffness (N/m).
    pub k: f64,
    /// Wall damping (N·s/m).
    pub b: f64,
}

/// Unset tuning values fall back to [`GovernorParams::default`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernorSection {
    pub enabled: Option<bool>,
    /// Maximum reference penetration (m); exclusive with `f_ss`.
    pub delta_s: Option<f64>,
    /// Desired steady contact force (N), mapped to `delta_s = f_ss / Kp`.
    pub f_ss: Option<f64>,
    pub eta: Option<f64>,
    pub zeta: Option<f64>,
    pub delta_h: Option<f64>,
    pub kappa_h: Option<f64>,
    pub kappa_s: Option<f64>,
    pub kappa_e: Option<f64>,
    pub t_pred: Option<f64>,
    pub dt_pred: Option<f64>,
    pub dt_gov: Option<f64>,
    pub delta_max: Option<f64>,
    pub settle_eps_q: Option<f64>,
    pub settle_eps_v: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub q0: [Scalar; 2],
    pub qd0: Option<[Scalar; 2]>,
    pub reference: [Scalar; 2],
    /// Simulated time (s).
    pub duration: f64,
    /// Integration step (s).
    pub dt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths are taken from the scenario file's directory.
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plots: bool,
    /// Trailing window for steady-state averages (s).
    #[serde(default = "default_window")]
    pub steady_window: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, plots: false, steady_window: default_window() }
    }
}

fn default_window() -> f64 {
    2.0
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// File stem, used to name output files.
    pub name: String,
    pub scenario: Scenario<Plant, 2>,
    /// Governed run with the other controller, when both gain sets are given.
    pub alternate: Option<Scenario<Plant, 2>>,
    pub output: OutputSection,
    pub base_dir: PathBuf,
    /// One line per hard constraint, in file order.
    pub hard_descriptions: Vec<String>,
}

impl ScenarioConfig {
    /// Output directory: `flag`, then `[output] dir`, then `$CERG_OUT_DIR`,
    /// then `./cerg-out`.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(dir) = flag {
            return dir.to_path_buf();
        }
        if let Some(dir) = &self.output.dir {
            return self.base_dir.join(dir);
        }
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    /// Steady contact energy `½ Kp δ_s²`, with the largest eigenvalue of
    /// `Kp` standing in for a non-scalar stiffness.
    pub fn steady_contact_energy(&self) -> f64 {
        let gains = &self.scenario.gains;
        let k = gains.scalar_stiffness().unwrap_or_else(|| gains.kp.symmetric_eigenvalues().max());
        let d = self.scenario.governor.delta_s;
        0.5 * k * d * d
    }

    /// Human-readable dump of every resolved value.
    pub fn describe(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let _ = writeln!(out, "scenario      {}", self.name);
        match s.plant {
            Plant::DoubleIntegrator(_) => {
                let _ = writeln!(out, "plant         double_integrator");
            }
            Plant::RrArm(a) => {
                let _ =
                    writeln!(out, "plant         rr_arm l1={} l2={} m1={} m2={} g0={}", a.l1, a.l2, a.m1, a.m2, a.g0);
            }
        }
        describe_gains(&mut out, "gains", &s.gains);
        if let Some(alt) = &self.alternate {
            describe_gains(&mut out, "alt gains", &alt.gains);
        }
        let set = &s.constraints;
        let _ = writeln!(out, "e_max         {}", set.e_max);
        let _ = writeln!(out, "soft          {}", describe_soft(&set.soft));
        for h in &self.hard_descriptions {
            let _ = writeln!(out, "hard          {h}");
        }
        let _ = writeln!(out, "contact       k={} b={}", s.contact.stiffness, s.contact.damping);
        let g = &s.governor;
        let _ = writeln!(out, "governor      {}", if s.governor_enabled { "enabled" } else { "disabled" });
        let _ = writeln!(out, "  eta={} zeta={} delta_h={} delta_s={}", g.eta, g.zeta, g.delta_h, g.delta_s);
        let _ = writeln!(out, "  kappa_h={} kappa_s={} kappa_e={}", g.kappa_h, g.kappa_s, g.kappa_e);
        let _ =
            writeln!(out, "  t_pred={} dt_pred={} dt_gov={} delta_max={}", g.t_pred, g.dt_pred, g.dt_gov, g.delta_max);
        let _ = writeln!(out, "  settle_eps_q={} settle_eps_v={}", g.settle_eps_q, g.settle_eps_v);
        let _ = writeln!(out, "  E_ss={}", crate::output::format_sig(self.steady_contact_energy()));
        let x = &s.initial_state;
        let _ = writeln!(out, "q0            [{}, {}]", x.q[0], x.q[1]);
        let _ = writeln!(out, "qd0           [{}, {}]", x.qd[0], x.qd[1]);
        let _ = writeln!(out, "reference     [{}, {}]", s.reference[0], s.reference[1]);
        let _ = writeln!(out, "duration      {}", s.duration);
        let _ = writeln!(out, "dt            {}", s.dt);
        let _ = writeln!(out, "steady_window {}", self.output.steady_window);
        out
    }
}

fn describe_gains(out: &mut String, label: &str, gains: &GainConfig<2>) {
    let _ = match gains.mode {
        ControlMode::Joint => writeln!(
            out,
            "{label:<14}joint kp=[[{}, {}], [{}, {}]] kd=[[{}, {}], [{}, {}]]",
            gains.kp[(0, 0)],
            gains.kp[(0, 1)],
            gains.kp[(1, 0)],
            gains.kp[(1, 1)],
            gains.kd[(0, 0)],
            gains.kd[(0, 1)],
            gains.kd[(1, 0)],
            gains.kd[(1, 1)],
        ),
        ControlMode::Task => writeln!(out, "{label:<14}task kp={} kd={}", gains.task_kp, gains.task_kd),
    };
}

fn describe_soft(soft: &SoftConstraint<2>) -> String {
    let (space, h) = match soft {
        SoftConstraint::Joint(s) => ("joint", s.as_halfspace()),
        SoftConstraint::Task(s) => ("task", s.as_halfspace()),
    };
    match h {
        Some(h) => format!("{space} [{}, {}]·p <= {}", h.normal()[0], h.normal()[1], h.offset()),
        None => format!("{space} surface"),
    }
}

pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, &name, &base_dir).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses and validates scenario text.
pub fn parse(text: &str, name: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    resolve(file, name, base_dir)
}

fn config_err(section: &str) -> impl Fn(cerg_core::CergError) -> CliError + '_ {
    move |e| CliError::Config(format!("[{section}] {e}"))
}

fn scalar(section: &str, key: &str, value: &Scalar) -> Result<f64> {
    value.value().map_err(|e| CliError::Config(format!("[{section}] {key}: {e}")))
}

fn pair(section: &str, key: &str, values: &[Scalar; 2]) -> Result<Vector2<f64>> {
    Ok(Vector2::new(scalar(section, key, &values[0])?, scalar(section, key, &values[1])?))
}

fn resolve(file: ScenarioFile, name: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    let plant = match file.plant {
        PlantSection::DoubleIntegrator {} => Plant::DoubleIntegrator(DoubleIntegrator),
        PlantSection::RrArm { l1, l2, m1, m2, g0 } => {
            Plant::RrArm(RrArm::new(l1, l2, m1, m2, g0).map_err(config_err("plant"))?)
        }
    };

    let g = &file.gains;
    let joint = match (&g.kp, &g.kd) {
        (Some(kp), Some(kd)) => Some(GainConfig::joint(kp.matrix(), kd.matrix()).map_err(config_err("gains"))?),
        (None, None) => None,
        _ => return Err(CliError::Config("[gains] kp and kd must be given together".into())),
    };
    let task = match (g.task_kp, g.task_kd) {
        (Some(kp), Some(kd)) => Some(GainConfig::task(kp, kd).map_err(config_err("gains"))?),
        (None, None) => None,
        _ => return Err(CliError::Config("[gains] task_kp and task_kd must be given together".into())),
    };
    let (primary, alternate) = match g.mode {
        ModeName::Joint => (joint.ok_or_else(|| missing("gains", "kp", "mode = \"joint\""))?, task),
        ModeName::Task => (task.ok_or_else(|| missing("gains", "task_kp", "mode = \"task\""))?, joint),
    };

    let c = &file.constraints;
    let normal = Vector2::from(c.soft.normal);
    let soft = match c.soft.space {
        SpaceName::Joint => SoftConstraint::joint_halfspace(normal, c.soft.offset),
        SpaceName::Task => SoftConstraint::task_halfspace(normal, c.soft.offset),
    }
    .map_err(config_err("constraints.soft"))?;
    let mut hard: Vec<Arc<dyn HardConstraint<2>>> = Vec::with_capacity(c.hard.len());
    let mut hard_descriptions = Vec::with_capacity(c.hard.len());
    for h in &c.hard {
        let (limit, text): (Arc<dyn HardConstraint<2>>, String) = match h {
            HardSection::JointPosition { index, limit } => {
                let limit = scalar("constraints.hard", "limit", limit)?;
                let c = AffineLimit::joint_position(*index, limit).map_err(config_err("constraints.hard"))?;
                (Arc::new(c), format!("|q[{index}]| <= {limit}"))
            }
            HardSection::JointVelocity { index, limit } => {
                let c = AffineLimit::joint_velocity(*index, *limit).map_err(config_err("constraints.hard"))?;
                (Arc::new(c), format!("|qd[{index}]| <= {limit}"))
            }
            HardSection::Input { index, limit } => {
                let c = AffineLimit::input(*index, *limit).map_err(config_err("constraints.hard"))?;
                (Arc::new(c), format!("|u[{index}]| <= {limit}"))
            }
            HardSection::TaskHalfspace { normal, offset } => {
                let c = Halfspace::new(Vector2::from(*normal), *offset).map_err(config_err("constraints.hard"))?;
                (Arc::new(TaskHalfspace(c)), format!("task [{}, {}]·p <= {offset}", normal[0], normal[1]))
            }
        };
        hard.push(limit);
        hard_descriptions.push(text);
    }
    let constraints = ConstraintSet::new(hard, soft, c.e_max).map_err(config_err("constraints"))?;
    let contact = ContactParams::new(file.contact.k, file.contact.b).map_err(config_err("contact"))?;

    let gov = &file.governor;
    let delta_s_for = |gains: &GainConfig<2>| -> Result<f64> {
        match (gov.delta_s, gov.f_ss) {
            (Some(d), None) => Ok(d),
            (None, Some(f)) => {
                let k = gains.scalar_stiffness().ok_or_else(|| {
                    CliError::Config("[governor] f_ss needs a scalar stiffness; give delta_s instead".into())
                })?;
                Ok(penetration_for_force(f, k).map_err(config_err("governor"))?.delta_s)
            }
            (Some(_), Some(_)) => Err(CliError::Config("[governor] give either delta_s or f_ss, not both".into())),
            (None, None) => Err(CliError::Config("[governor] missing field `delta_s` (or `f_ss`)".into())),
        }
    };
    let base = GovernorParams::default();
    let params = GovernorParams {
        eta: gov.eta.unwrap_or(base.eta),
        zeta: gov.zeta.unwrap_or(base.zeta),
        delta_h: gov.delta_h.unwrap_or(base.delta_h),
        delta_s: delta_s_for(&primary)?,
        kappa_h: gov.kappa_h.unwrap_or(base.kappa_h),
        kappa_s: gov.kappa_s.unwrap_or(base.kappa_s),
        kappa_e: gov.kappa_e.unwrap_or(base.kappa_e),
        t_pred: gov.t_pred.unwrap_or(base.t_pred),
        dt_pred: gov.dt_pred.unwrap_or(base.dt_pred),
        dt_gov: gov.dt_gov.unwrap_or(base.dt_gov),
        delta_max: gov.delta_max.unwrap_or(base.delta_max),
        settle_eps_q: gov.settle_eps_q.unwrap_or(base.settle_eps_q),
        settle_eps_v: gov.settle_eps_v.unwrap_or(base.settle_eps_v),
    };

    let sim = &file.sim;
    let q0 = pair("sim", "q0", &sim.q0)?;
    let qd0 = match &sim.qd0 {
        Some(v) => pair("sim", "qd0", v)?,
        None => Vector2::zeros(),
    };
    let scenario = Scenario {
        plant,
        gains: primary,
        constraints,
        contact,
        governor: params,
        governor_enabled: gov.enabled.unwrap_or(true),
        initial_state: State::new(q0, qd0),
        reference: pair("sim", "reference", &sim.reference)?,
        duration: sim.duration,
        dt: sim.dt,
    };
    scenario.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let alternate = match alternate {
        Some(gains) => {
            let governor = GovernorParams { delta_s: delta_s_for(&gains)?, ..params };
            Some(Scenario { gains, governor, governor_enabled: true, ..scenario.clone() })
        }
        None => None,
    };

    let output = file.output;
    if !(output.steady_window.is_finite() && output.steady_window > 0.0) {
        return Err(CliError::Config(format!("[output] steady_window must be positive, got {}", output.steady_window)));
    }
    Ok(ScenarioConfig {
        name: name.to_string(),
        scenario,
        alternate,
        output,
        base_dir: base_dir.to_path_buf(),
        hard_descriptions,
    })
}

fn missing(section: &str, key: &str, context: &str) -> CliError {
    CliError::Config(format!("[{section}] missing field `{key}` required by {context}"))
}
