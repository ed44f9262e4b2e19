//! Scenario configuration: a TOML file with one section per pipeline stage.
//!
//! Every field has a default, so an empty file describes the reference
//! scenario: a single emitter at 2.3 eV, 2.9 nm above a Drude metal with the
//! surrogate d_perp response.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use plasmon_qse::dynamics::Stepper;
use plasmon_qse::green::{Geometry, QuadratureSpec};
use plasmon_qse::interface::{InterfaceModel, Substrate};
use plasmon_qse::materials::{load_dparam_table, DParamSource, DrudeParams, SurrogateDPerp};
use plasmon_qse::spectral::{EmitterParams, GridSpec, DEFAULT_ALPHA};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// The commented default configuration printed by `--print-default-config`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("default_config.toml");

/// Full scenario description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub material: MaterialConfig,
    pub geometry: GeometryConfig,
    pub emitter: EmitterConfig,
    pub grid: GridConfig,
    pub tolerance: ToleranceConfig,
    pub output: OutputConfig,
}

/// Which surface response the metal carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    /// Local response, no surface correction.
    Lra,
    /// Single-pole d_perp model.
    #[default]
    Surrogate,
    /// d-parameters read from a CSV table.
    Table,
    /// No interface: the emitters sit in a homogeneous dielectric.
    FreeSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub response: ResponseKind,
    pub omega_p_ev: f64,
    pub gamma_p_ev: f64,
    /// d-parameter CSV, required when `response = "table"`.
    pub dparam_table: Option<PathBuf>,
    pub surrogate: SurrogateConfig,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let drude = DrudeParams::default();
        Self {
            response: ResponseKind::default(),
            omega_p_ev: drude.omega_p,
            gamma_p_ev: drude.gamma_p,
            dparam_table: None,
            surrogate: SurrogateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub d_inf_re_nm: f64,
    pub d_inf_im_nm: f64,
    pub amplitude_ev2_nm: f64,
    pub pole_ev: f64,
    pub width_ev: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        let s = SurrogateDPerp::default();
        Self {
            d_inf_re_nm: s.d_inf.re,
            d_inf_im_nm: s.d_inf.im,
            amplitude_ev2_nm: s.amplitude.re,
            pole_ev: s.pole_omega,
            width_ev: s.pole_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub eps_d: f64,
    pub z0_nm: f64,
    pub n: usize,
    pub r_nm: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            eps_d: 1.0,
            z0_nm: 2.9,
            n: 1,
            r_nm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitterConfig {
    pub omega0_ev: f64,
    pub alpha_ev_nm3: f64,
    /// Initial amplitudes as `[re, im]`; `None` excites the first emitter.
    pub initial: Option<Vec<[f64; 2]>>,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        Self {
            omega0_ev: 2.3,
            alpha_ev_nm3: DEFAULT_ALPHA,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperKind {
    #[default]
    ImplicitTrapezoid,
    PredictorCorrector,
}

impl From<StepperKind> for Stepper {
    fn from(k: StepperKind) -> Self {
        match k {
            StepperKind::ImplicitTrapezoid => Stepper::ImplicitTrapezoid,
            StepperKind::PredictorCorrector => Stepper::PredictorCorrector,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub omega_min_ev: f64,
    pub omega_max_ev: f64,
    pub n_background: usize,
    pub n_resonance: usize,
    /// Centre of the refined block; `None` uses the surface plasmon energy.
    pub resonance_center_ev: Option<f64>,
    pub resonance_halfwidth_ev: f64,
    pub t_max: f64,
    pub dt: f64,
    pub stepper: StepperKind,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            omega_min_ev: 0.02,
            omega_max_ev: 10.0,
            n_background: 1000,
            n_resonance: 1000,
            resonance_center_ev: None,
            resonance_halfwidth_ev: 0.5,
            t_max: 1000.0,
            dt: 0.01,
            stepper: StepperKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub tail_cut_tol: f64,
    pub max_panels: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            tail_cut_tol: q.tail_cut_tol,
            max_panels: q.max_panels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    /// Parses TOML text. A relative `dparam_table` path is resolved against
    /// `base`; the output directory stays relative to the working directory.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(base) = base {
            if let Some(p) = cfg.material.dparam_table.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::from_toml_str(&text, Some(base))
    }

    /// Checks the constraints not enforced by the library constructors.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.geometry.n == 0 {
            return Err(CliError::Config("geometry.n must be at least 1".into()));
        }
        if self.material.response == ResponseKind::Table && self.material.dparam_table.is_none() {
            return Err(CliError::Config(
                "response = \"table\" needs material.dparam_table".into(),
            ));
        }
        if let Some(init) = &self.emitter.initial {
            if init.len() != self.geometry.n {
                return Err(CliError::Config(format!(
                    "emitter.initial has {} entries for n = {}",
                    init.len(),
                    self.geometry.n
                )));
            }
            if init.iter().flatten().any(|x| !x.is_finite()) {
                return Err(CliError::Config("emitter.initial must be finite".into()));
            }
        }
        if !(self.grid.t_max > 0.0 && self.grid.t_max.is_finite()) {
            return Err(CliError::Config(format!(
                "grid.t_max must be positive, got {}",
                self.grid.t_max
            )));
        }
        if !(self.grid.dt > 0.0 && self.grid.dt <= self.grid.t_max) {
            return Err(CliError::Config(format!(
                "grid.dt must lie in (0, t_max], got {}",
                self.grid.dt
            )));
        }
        Ok(())
    }

    pub fn drude(&self) -> Result<DrudeParams, CliError> {
        Ok(DrudeParams::new(self.material.omega_p_ev, self.material.gamma_p_ev)?)
    }

    /// Builds the interface model, loading the d-parameter table if needed.
    pub fn model(&self) -> Result<InterfaceModel, CliError> {
        let eps_d = self.geometry.eps_d;
        let m = match self.material.response {
            ResponseKind::FreeSpace => InterfaceModel::free_space(eps_d)?,
            ResponseKind::Lra => InterfaceModel::lra(eps_d, self.drude()?)?,
            ResponseKind::Surrogate => {
                let s = &self.material.surrogate;
                let surrogate = SurrogateDPerp::new(
                    Complex64::new(s.d_inf_re_nm, s.d_inf_im_nm),
                    Complex64::new(s.amplitude_ev2_nm, 0.0),
                    s.pole_ev,
                    s.width_ev,
                )?;
                InterfaceModel::with_surrogate(eps_d, self.drude()?, surrogate)?
            }
            ResponseKind::Table => {
                let path = self
                    .material
                    .dparam_table
                    .as_ref()
                    .ok_or_else(|| CliError::Config("response = \"table\" needs material.dparam_table".into()))?;
                let file = File::open(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                let table = load_dparam_table(BufReader::new(file))?;
                InterfaceModel::new(
                    eps_d,
                    Substrate::Drude(self.drude()?),
                    DParamSource::Table(Arc::new(table)),
                )?
            }
        };
        Ok(m)
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        let g = &self.geometry;
        Ok(Geometry::linear(g.n, g.r_nm, g.z0_nm)?)
    }

    pub fn emitter(&self) -> Result<EmitterParams, CliError> {
        Ok(EmitterParams::new(self.emitter.omega0_ev, self.emitter.alpha_ev_nm3)?)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        let t = &self.tolerance;
        QuadratureSpec {
            rel_tol: t.rel_tol,
            abs_tol: t.abs_tol,
            tail_cut_tol: t.tail_cut_tol,
            max_panels: t.max_panels,
        }
    }

    /// Frequency grid; the refined block defaults to the surface plasmon
    /// energy of the configured metal.
    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = &self.grid;
        let center = match g.resonance_center_ev {
            Some(c) => c,
            None => self.drude()?.surface_plasmon_energy(self.geometry.eps_d),
        };
        Ok(GridSpec {
            omega_min: g.omega_min_ev,
            omega_max: g.omega_max_ev,
            n_background: g.n_background,
            n_resonance: g.n_resonance,
            resonance_center: center,
            resonance_halfwidth: g.resonance_halfwidth_ev,
        })
    }

    /// Initial amplitudes, defaulting to (1, 0, ..., 0).
    pub fn initial_state(&self) -> Vec<Complex64> {
        match &self.emitter.initial {
            Some(v) => v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            None => {
                let mut a = vec![Complex64::new(0.0, 0.0); self.geometry.n];
                a[0] = Complex64::new(1.0, 0.0);
                a
            }
        }
    }
}
