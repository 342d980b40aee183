//! Run configuration: TOML with flat `key = value` sections. Unknown keys are
//! rejected; every section may be omitted and falls back to the shipped
//! defaults.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use tidal_dunes::cell_solver::{CellProblem, ThetaScheme, DEFAULT_MAX_PERIODS, DEFAULT_THETA_STEPS};
use tidal_dunes::coeffs::{FluxLaw, ForcingParams, ModelConstants, Regime, SpatialModulation, TidalForcing};
use tidal_dunes::eps_solver::EpsProblem;
use tidal_dunes::grid::{read_field_csv, BoundaryData, BoundaryKind, BoundarySource, Grid, ScalarField};
use tidal_dunes::presets::{gaussian, DEFAULT_CELL_MU, DEFAULT_CELL_NU};
use tidal_dunes::schedule::CellCoefficientKind;
use tidal_dunes::twoscale::{InitialState, TwoScaleProblem};
use tidal_dunes::Vec2;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_regime")]
    pub regime: RegimeName,
    /// Seed for randomized fixtures; recorded in every summary.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub flux: FluxSection,
    #[serde(default)]
    pub forcing: ForcingSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub boundary_data: BoundaryDataSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub cell: CellSection,
    #[serde(default)]
    pub twoscale: TwoScaleSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    Short,
    Mean,
    Long,
}

fn default_regime() -> RegimeName {
    RegimeName::Short
}

impl From<RegimeName> for Regime {
    fn from(r: RegimeName) -> Self {
        match r {
            RegimeName::Short => Regime::Short,
            RegimeName::Mean => Regime::Mean,
            RegimeName::Long => Regime::Long,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    Robin,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub boundary: BoundaryName,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            lx: 1.0,
            ly: 1.0,
            boundary: BoundaryName::Robin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub mu: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            epsilon: 0.0625,
            nu: 0.0,
            mu: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluxSection {
    pub d: f64,
    pub u_thr: f64,
    pub g_thr: f64,
    pub ramp_width: f64,
}

impl Default for FluxSection {
    fn default() -> Self {
        Self {
            d: 4.0,
            u_thr: 1.0,
            g_thr: 2.0,
            ramp_width: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationName {
    Uniform,
    CosineX,
    Bump,
}

/// Tide parameters. Absent keys take the regime's default tide.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_peak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_peak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_flow: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slow_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u1_peak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u2_peak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2_peak: Option<f64>,
    /// `false` leaves the raw sinusoid unmollified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    Gaussian,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: InitialKind,
    /// Relative to the domain: `[0.5, 0.5]` is the centre.
    pub center: [f64; 2],
    /// Relative to `min(lx, ly)`.
    pub width: f64,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: InitialKind::Gaussian,
            center: [0.5, 0.5],
            width: 0.15,
            amplitude: 1.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDataKind {
    Zero,
    Constant,
    Trace,
}

/// Manufactured solutions whose Robin trace can serve as boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manufactured {
    /// `exp(-t) (1 + x / lx)`.
    LinearDecay,
    /// `1 + x y / (lx ly)`, constant in time.
    Bilinear,
}

impl Manufactured {
    fn eval(self, t: f64, p: Vec2<f64>, lx: f64, ly: f64) -> (f64, Vec2<f64>) {
        match self {
            Manufactured::LinearDecay => {
                let e = (-t).exp();
                (e * (1.0 + p.x / lx), Vec2::new(e / lx, 0.0))
            }
            Manufactured::Bilinear => (
                1.0 + p.x * p.y / (lx * ly),
                Vec2::new(p.y / (lx * ly), p.x / (lx * ly)),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryDataSection {
    pub kind: BoundaryDataKind,
    pub value: f64,
    pub manufactured: Manufactured,
}

impl Default for BoundaryDataSection {
    fn default() -> Self {
        Self {
            kind: BoundaryDataKind::Zero,
            value: 0.0,
            manufactured: Manufactured::LinearDecay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_final: f64,
    /// Defaults to the solver's stable step for the regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub snapshot_stride: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: None,
            snapshot_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKindName {
    Regularized,
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    BackwardEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSection {
    pub kind: CellKindName,
    /// Frozen slow times.
    pub t: f64,
    pub tau: f64,
    pub mu: f64,
    pub nu: f64,
    /// Continuation ladders; when present the ladder replaces the single solve.
    pub mu_ladder: Vec<f64>,
    pub nu_ladder: Vec<f64>,
    pub theta_steps: usize,
    pub scheme: SchemeName,
    pub tol_periodic: f64,
    pub max_periods: usize,
}

impl Default for CellSection {
    fn default() -> Self {
        Self {
            kind: CellKindName::Regularized,
            t: 0.0,
            tau: 0.0,
            mu: DEFAULT_CELL_MU,
            nu: DEFAULT_CELL_NU,
            mu_ladder: Vec::new(),
            nu_ladder: Vec::new(),
            theta_steps: DEFAULT_THETA_STEPS,
            scheme: SchemeName::BackwardEuler,
            tol_periodic: 1e-9,
            max_periods: DEFAULT_MAX_PERIODS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoScaleInitial {
    /// Use `[initial]`.
    Config,
    /// Start on the homogenized profile.
    WellPrepared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoScaleSection {
    pub ladder: Vec<f64>,
    pub theta_steps: usize,
    pub limit_samples: usize,
    pub initial: TwoScaleInitial,
    /// Corrector on the analytic `U + eps V` fixture instead of the model.
    pub synthetic: bool,
}

impl Default for TwoScaleSection {
    fn default() -> Self {
        Self {
            ladder: vec![0.125, 0.0625, 0.03125, 0.015625],
            theta_steps: DEFAULT_THETA_STEPS,
            limit_samples: 1,
            initial: TwoScaleInitial::Config,
            synthetic: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn regime(&self) -> Regime {
        self.regime.into()
    }

    pub fn grid(&self) -> Result<Grid<f64>, CliError> {
        let g = &self.grid;
        let kind = match g.boundary {
            BoundaryName::Robin => BoundaryKind::Robin,
            BoundaryName::Dirichlet => BoundaryKind::Dirichlet,
        };
        Grid::new(g.nx, g.ny, g.lx, g.ly, kind).map_err(config("grid"))
    }

    pub fn constants(&self) -> Result<ModelConstants<f64>, CliError> {
        let m = &self.model;
        ModelConstants::new(m.a, m.b, m.c, m.epsilon, m.nu, m.mu).map_err(config("model"))
    }

    pub fn law(&self) -> Result<FluxLaw<f64>, CliError> {
        let f = &self.flux;
        FluxLaw::new(f.d, f.u_thr, f.g_thr, f.ramp_width).map_err(config("flux"))
    }

    pub fn forcing_params(&self) -> ForcingParams<f64> {
        let f = &self.forcing;
        let mut p = ForcingParams::default_for(self.regime());
        let v = |a: [f64; 2]| Vec2::new(a[0], a[1]);
        p.u_peak = f.u_peak.unwrap_or(p.u_peak);
        p.m_peak = f.m_peak.unwrap_or(p.m_peak);
        p.mean_flow = f.mean_flow.map(v).unwrap_or(p.mean_flow);
        p.direction = f.direction.map(v).unwrap_or(p.direction);
        p.theta_alpha = f.theta_alpha.unwrap_or(p.theta_alpha);
        p.theta_omega = f.theta_omega.unwrap_or(p.theta_omega);
        p.theta_frequency = f.theta_frequency.unwrap_or(p.theta_frequency);
        p.tau_amplitude = f.tau_amplitude.unwrap_or(p.tau_amplitude);
        p.slow_amplitude = f.slow_amplitude.unwrap_or(p.slow_amplitude);
        p.u1_peak = f.u1_peak.unwrap_or(p.u1_peak);
        p.u2_peak = f.u2_peak.unwrap_or(p.u2_peak);
        p.m2_peak = f.m2_peak.unwrap_or(p.m2_peak);
        let default_amp = match p.modulation {
            SpatialModulation::Uniform => 0.0,
            SpatialModulation::CosineX { amplitude } | SpatialModulation::Bump { amplitude } => amplitude,
        };
        let amplitude = f.modulation_amplitude.unwrap_or(default_amp);
        p.modulation = match f.modulation {
            None if f.modulation_amplitude.is_none() => p.modulation,
            None => match p.modulation {
                SpatialModulation::Bump { .. } => SpatialModulation::Bump { amplitude },
                _ => SpatialModulation::CosineX { amplitude },
            },
            Some(ModulationName::Uniform) => SpatialModulation::Uniform,
            Some(ModulationName::CosineX) => SpatialModulation::CosineX { amplitude },
            Some(ModulationName::Bump) => SpatialModulation::Bump { amplitude },
        };
        let width = f.freeze_width.or(p.freeze_width);
        p.freeze_width = if f.freeze == Some(false) { None } else { width };
        p
    }

    pub fn forcing(&self) -> Result<TidalForcing<f64>, CliError> {
        let grid = self.grid()?;
        TidalForcing::new(self.forcing_params(), self.flux.u_thr, grid.lx(), grid.ly()).map_err(config("forcing"))
    }

    /// Grid, constants, flux law and tide, checked together.
    pub fn model(&self) -> Result<Model, CliError> {
        let m = Model {
            grid: self.grid()?,
            consts: self.constants()?,
            law: self.law()?,
            forcing: self.forcing()?,
        };
        m.consts.check_forcing(&m.forcing).map_err(config("forcing"))?;
        Ok(m)
    }

    pub fn initial_field(&self, grid: Grid<f64>) -> Result<ScalarField<f64>, CliError> {
        let s = &self.initial;
        match s.kind {
            InitialKind::Zero => Ok(ScalarField::zeros(grid)),
            InitialKind::Gaussian => {
                if !(s.width > 0.0 && s.width.is_finite()) {
                    return Err(CliError::Config("initial.width: must be positive".into()));
                }
                let c = Vec2::new(s.center[0] * grid.lx(), s.center[1] * grid.ly());
                Ok(gaussian(grid, c, s.width * grid.lx().min(grid.ly()), s.amplitude))
            }
            InitialKind::File => {
                let path = s
                    .path
                    .as_ref()
                    .ok_or_else(|| CliError::Config("initial.path: required when kind = \"file\"".into()))?;
                let file = std::fs::File::open(path)
                    .map_err(|e| CliError::Config(format!("initial.path {}: {e}", path.display())))?;
                let z: ScalarField<f64> = read_field_csv(std::io::BufReader::new(file), grid.boundary())
                    .map_err(|e| CliError::Config(format!("initial.path {}: {e}", path.display())))?;
                if !z.grid().same_shape(&grid) {
                    return Err(CliError::Config(format!(
                        "initial.path {}: field grid does not match [grid]",
                        path.display()
                    )));
                }
                ScalarField::from_values(grid, z.into_values()).map_err(config("initial.path"))
            }
        }
    }

    fn trace(&self) -> impl Fn(f64, tidal_dunes::grid::Side, Vec2<f64>) -> f64 + Send + Sync + 'static {
        let (lx, ly, which) = (self.grid.lx, self.grid.ly, self.boundary_data.manufactured);
        move |t, side, p| {
            let (z, grad) = which.eval(t, p, lx, ly);
            grad.dot(Grid::<f64>::normal(side)) + z
        }
    }

    /// Time-dependent Robin data for the evolution problem.
    pub fn boundary_source(&self) -> BoundarySource<f64> {
        match self.boundary_data.kind {
            BoundaryDataKind::Zero => BoundarySource::zero(),
            BoundaryDataKind::Constant => BoundarySource::constant(self.boundary_data.value),
            BoundaryDataKind::Trace => BoundarySource::from_fn(self.trace()),
        }
    }

    /// Robin data frozen at time `t`, for the periodic problems.
    pub fn boundary_at(&self, grid: &Grid<f64>, t: f64) -> BoundaryData<f64> {
        self.boundary_source().at(grid, t)
    }

    pub fn eps_problem(&self) -> Result<EpsProblem<f64>, CliError> {
        let m = self.model()?;
        let z0 = self.initial_field(m.grid)?;
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Config("time.dt: must be positive".into()));
            }
        }
        let mut p = EpsProblem::from_model(
            m.grid,
            m.consts,
            m.law,
            m.forcing,
            z0,
            self.boundary_source(),
            self.time.t_final,
            self.time.dt,
        )
        .map_err(config("time"))?;
        if self.time.snapshot_stride == 0 {
            return Err(CliError::Config("time.snapshot_stride: must be at least 1".into()));
        }
        p.snapshot_stride = self.time.snapshot_stride;
        Ok(p)
    }

    fn cell_i(&self) -> u32 {
        match self.regime() {
            Regime::Long => 1,
            Regime::Short | Regime::Mean => 0,
        }
    }

    pub fn cell_problem(&self) -> Result<CellProblem<f64>, CliError> {
        let m = self.model()?;
        let s = &self.cell;
        let kind = match s.kind {
            CellKindName::Regularized => CellCoefficientKind::Regularized,
            CellKindName::Limit => CellCoefficientKind::Limit,
        };
        let mut p = CellProblem::from_model(m.grid, m.consts, m.law, m.forcing, s.t, s.tau, kind, self.cell_i())
            .map_err(config("cell"))?;
        p.mu = s.mu;
        p.nu = s.nu;
        p.g = self.boundary_at(&m.grid, s.t);
        p.theta_steps = s.theta_steps;
        p.scheme = match s.scheme {
            SchemeName::BackwardEuler => ThetaScheme::BackwardEuler,
            SchemeName::CrankNicolson => ThetaScheme::CrankNicolson,
        };
        p.tol_periodic = s.tol_periodic;
        p.max_periods = s.max_periods;
        p.validate().map_err(config("cell"))?;
        Ok(p)
    }

    /// Limit problem at the configured slow time: `mu = nu = 0`, limit
    /// coefficients.
    pub fn homogenized_problem(&self) -> Result<CellProblem<f64>, CliError> {
        let m = self.model()?;
        let mut p = CellProblem::from_model(
            m.grid,
            m.consts,
            m.law,
            m.forcing,
            self.cell.t,
            self.cell.tau,
            CellCoefficientKind::Limit,
            self.cell_i(),
        )
        .map_err(config("cell"))?;
        p.mu = 0.0;
        p.nu = 0.0;
        p.g = self.boundary_at(&m.grid, self.cell.t);
        p.theta_steps = self.cell.theta_steps;
        p.tol_periodic = self.cell.tol_periodic;
        p.max_periods = self.cell.max_periods;
        Ok(p)
    }

    pub fn two_scale_problem(&self) -> Result<TwoScaleProblem<f64>, CliError> {
        let m = self.model()?;
        let initial = match self.twoscale.initial {
            TwoScaleInitial::Config => InitialState::Field(self.initial_field(m.grid)?),
            TwoScaleInitial::WellPrepared => InitialState::WellPrepared,
        };
        if self.boundary_data.kind == BoundaryDataKind::Trace
            && self.boundary_data.manufactured == Manufactured::LinearDecay
        {
            return Err(CliError::Config(
                "boundary_data: two-scale studies need time-independent data".into(),
            ));
        }
        let p = TwoScaleProblem {
            grid: m.grid,
            consts: m.consts,
            law: m.law,
            forcing: m.forcing,
            g: self.boundary_at(&m.grid, 0.0),
            initial,
            t_final: self.time.t_final,
            theta_steps: self.twoscale.theta_steps,
            limit_samples: self.twoscale.limit_samples,
        };
        p.validate().map_err(config("twoscale"))?;
        Ok(p)
    }
}

/// Model ingredients shared by every command.
pub struct Model {
    pub grid: Grid<f64>,
    pub consts: ModelConstants<f64>,
    pub law: FluxLaw<f64>,
    pub forcing: TidalForcing<f64>,
}

fn config(section: &'static str) -> impl Fn(tidal_dunes::Error) -> CliError {
    move |e| CliError::Config(format!("[{section}] {e}"))
}


#[cfg(test)]
mod tests {
    use super::*;

    const SHIPPED: &str = include_str!("../../../configs/default.toml");

    #[test]
    fn round_trip_is_idempotent() {
        for text in [SHIPPED, "", "regime = \"long\"\n[forcing]\nfreeze = false\n[cell]\nmu_ladder = [0.1, 0.01]\n"] {
            let a = RunConfig::parse(text).unwrap();
            let b = RunConfig::parse(&a.to_toml()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.to_toml(), b.to_toml());
        }
    }

    #[test]
    fn shipped_file_matches_builtin_defaults() {
        let shipped = RunConfig::parse(SHIPPED).unwrap();
        let builtin = RunConfig::parse("").unwrap();
        assert_eq!(shipped.forcing_params(), builtin.forcing_params());
        assert_eq!(shipped.grid, builtin.grid);
        assert_eq!(shipped.model, builtin.model);
        assert_eq!(shipped.flux, builtin.flux);
        assert_eq!(shipped.cell, builtin.cell);
    }

    #[test]
    fn malformed_input_is_a_config_error() {
        for text in ["regime = \"tidal\"", "[grid]\nnx = -3", "[model\n", "[flux]\nd = \"four\""] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
        let zero = RunConfig::parse("[grid]\nnx = 0").unwrap();
        assert!(matches!(zero.grid(), Err(CliError::Config(_))));
    }
}
