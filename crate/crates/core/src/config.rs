//! Project configuration.
//!
//! A project is one TOML file with the sections `[structure]`, `[material]`,
//! `[patch]`, `[ppf]` and `[analysis]`. Files named in it are resolved
//! relative to the directory holding the config. Everything is validated on
//! load; semantic errors carry the line of the offending key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::frf::SweepGrid;
use crate::modal::{
    analytic_cantilever_modes, fe_beam_modes, load_measured_modes, BeamProperties, MeasuredOptions,
    ModalModel, DEFAULT_STRUCTURAL_DAMPING,
};
use crate::piezo::{PatchGeometry, PiezoMaterial};
use crate::placement::PlacementProblem;
use crate::ppf::PpfConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureSource {
    Analytic,
    Fe,
    Measured,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSection {
    pub source: StructureSource,
    pub length: Option<f64>,
    pub bending_stiffness: Option<f64>,
    pub mass_per_length: Option<f64>,
    pub structural_damping: Option<f64>,
    pub n_modes: Option<usize>,
    /// Sample count of analytic shapes.
    pub n_grid: Option<usize>,
    /// Element count of the finite-element model.
    pub n_elements: Option<usize>,
    /// Mode-shape CSV of a measured structure.
    pub shapes: Option<PathBuf>,
    pub frequencies_hz: Option<Vec<f64>>,
    pub damping: Option<Vec<f64>>,
    #[serde(default)]
    pub smooth_slopes: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub d31: f64,
    pub s11e: f64,
    pub eps_t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSection {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    /// Mid-plane offset z_m; give this or `host_thickness`.
    pub offset: Option<f64>,
    pub host_thickness: Option<f64>,
    pub x_start: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainScale {
    /// Gains are used as given.
    #[default]
    Absolute,
    /// Gains are fractions of the critical gain.
    Critical,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpfSection {
    pub f_hz: f64,
    pub zeta_f: f64,
    #[serde(default)]
    pub gains: Vec<f64>,
    #[serde(default)]
    pub gain_scale: GainScale,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Frequency band (Hz) searched for peaks by `analyze`.
    pub band_hz: Option<[f64; 2]>,
    /// Fixed sweep grid (Hz); by default each gain gets a window around the
    /// target resonance.
    pub sweep_band_hz: Option<[f64; 2]>,
    pub grid_points: Option<usize>,
    pub half_width: Option<f64>,
    pub min_prominence_db: Option<f64>,
    /// Placement weight per mode, keyed by mode number.
    pub mode_weights: Option<BTreeMap<String, f64>>,
    pub target_mode: Option<usize>,
    /// Modes kept in the control plant; all model modes by default.
    pub plant_modes: Option<Vec<usize>>,
    pub step: Option<f64>,
    pub n_patches: Option<usize>,
    pub min_gap: Option<f64>,
    /// Measured FRF analysed by `analyze`.
    pub frf: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub structure: StructureSection,
    pub material: Option<MaterialSection>,
    pub patch: Option<PatchSection>,
    pub ppf: Option<PpfSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    source_text: String,
}

pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const DEFAULT_HALF_WIDTH: f64 = 0.2;
pub const DEFAULT_PROMINENCE_DB: f64 = 3.0;

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut cfg: ProjectConfig = toml::from_str(text).map_err(|e| {
            let row = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::parse(row, "config", e.message().to_string())
        })?;
        cfg.base_dir = base_dir;
        cfg.source_text = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Line of `key` inside `[section]`, 0 when absent.
    fn line_of(&self, section: &str, key: &str) -> usize {
        let header = format!("[{section}]");
        let mut inside = false;
        for (k, line) in self.source_text.lines().enumerate() {
            let t = line.trim();
            if t.starts_with('[') {
                inside = t == header;
                if inside && key.is_empty() {
                    return k + 1;
                }
                continue;
            }
            if inside {
                if let Some((lhs, _)) = t.split_once('=') {
                    if lhs.trim() == key {
                        return k + 1;
                    }
                }
            }
        }
        0
    }

    fn bad(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        let column = if key.is_empty() { section.to_string() } else { format!("{section}.{key}") };
        Error::parse(self.line_of(section, key), column, message)
    }

    /// Re-labels an error from a module validator with the config key it
    /// came from.
    fn at(&self, section: &str, key: &str) -> impl Fn(Error) -> Error + '_ {
        let section = section.to_string();
        let key = key.to_string();
        move |e| match e {
            Error::Io { .. } => e,
            other => self.bad(&section, &key, other.to_string()),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        let s = &self.structure;
        let beam_keys = [
            ("length", s.length.is_some()),
            ("bending_stiffness", s.bending_stiffness.is_some()),
            ("mass_per_length", s.mass_per_length.is_some()),
        ];
        let measured_keys = [
            ("shapes", s.shapes.is_some()),
            ("frequencies_hz", s.frequencies_hz.is_some()),
        ];
        match s.source {
            StructureSource::Analytic | StructureSource::Fe => {
                for (k, present) in beam_keys {
                    if !present {
                        return Err(self.bad("structure", "source", format!("a beam source needs `{k}`")));
                    }
                }
                for (k, present) in measured_keys {
                    if present {
                        return Err(self.bad("structure", k, "only valid with source = \"measured\""));
                    }
                }
                if s.source == StructureSource::Analytic && s.n_elements.is_some() {
                    return Err(self.bad("structure", "n_elements", "only valid with source = \"fe\""));
                }
                if s.source == StructureSource::Fe && s.n_grid.is_some() {
                    return Err(self.bad("structure", "n_grid", "only valid with source = \"analytic\""));
                }
                self.beam_properties()?;
            }
            StructureSource::Measured => {
                for (k, present) in measured_keys {
                    if !present {
                        return Err(self.bad("structure", "source", format!("a measured source needs `{k}`")));
                    }
                }
                for (k, present) in beam_keys {
                    if present {
                        return Err(self.bad("structure", k, "not used with source = \"measured\""));
                    }
                }
                let path = self.resolve(s.shapes.as_ref().unwrap());
                if !path.is_file() {
                    return Err(Error::io(
                        &path,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "mode-shape file not found"),
                    ));
                }
            }
        }
        if let Some(m) = &self.material {
            PiezoMaterial::new(m.d31, m.s11e, m.eps_t).map_err(self.at("material", "d31"))?;
        }
        if self.patch.is_some() {
            self.patch_geometry()?;
        }
        if let Some(p) = &self.ppf {
            PpfConfig::from_hz(p.f_hz, p.zeta_f, 0.0).map_err(self.at("ppf", "f_hz"))?;
            if let Some(g) = p.gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                return Err(self.bad("ppf", "gains", format!("gain {g} must be finite and >= 0")));
            }
            if p.gains.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(self.bad("ppf", "gains", "gains must be strictly ascending"));
            }
        }
        let a = &self.analysis;
        for (key, band) in [("band_hz", a.band_hz), ("sweep_band_hz", a.sweep_band_hz)] {
            if let Some([lo, hi]) = band {
                if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                    return Err(self.bad("analysis", key, format!("band [{lo}, {hi}] must satisfy 0 < lo < hi")));
                }
            }
        }
        if let Some(n) = a.grid_points {
            if n < 3 {
                return Err(self.bad("analysis", "grid_points", "needs at least 3 points"));
            }
        }
        if let Some(h) = a.half_width {
            if !(h > 0.0 && h <= 0.9) {
                return Err(self.bad("analysis", "half_width", "must lie in (0, 0.9]"));
            }
        }
        if let Some(p) = a.min_prominence_db {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(self.bad("analysis", "min_prominence_db", "must be >= 0"));
            }
        }
        if a.mode_weights.is_some() {
            self.mode_weights()?;
        }
        if let Some(f) = &a.frf {
            let path = self.resolve(f);
            if !path.is_file() {
                return Err(Error::io(
                    &path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "FRF file not found"),
                ));
            }
        }
        Ok(())
    }

    fn beam_properties(&self) -> Result<BeamProperties> {
        let s = &self.structure;
        BeamProperties::new(
            s.length.unwrap_or_default(),
            s.bending_stiffness.unwrap_or_default(),
            s.mass_per_length.unwrap_or_default(),
            s.structural_damping.unwrap_or(DEFAULT_STRUCTURAL_DAMPING),
        )
        .map_err(self.at("structure", "length"))
    }

    /// Builds the modal model named by `[structure]`.
    pub fn modal_model(&self) -> Result<ModalModel> {
        let s = &self.structure;
        match s.source {
            StructureSource::Analytic => analytic_cantilever_modes(
                &self.beam_properties()?,
                s.n_modes.unwrap_or(4),
                s.n_grid.unwrap_or(201),
            )
            .map_err(self.at("structure", "n_modes")),
            StructureSource::Fe => fe_beam_modes(
                &self.beam_properties()?,
                s.n_elements.unwrap_or(100),
                s.n_modes.unwrap_or(4),
            )
            .map_err(self.at("structure", "n_modes")),
            StructureSource::Measured => {
                let path = self.resolve(s.shapes.as_ref().expect("checked on load"));
                load_measured_modes(
                    &path,
                    s.frequencies_hz.as_deref().unwrap_or_default(),
                    s.damping.as_deref().unwrap_or_default(),
                    MeasuredOptions {
                        smooth_slopes: s.smooth_slopes,
                    },
                )
            }
        }
    }

    pub fn material(&self) -> Result<PiezoMaterial> {
        let m = self
            .material
            .as_ref()
            .ok_or_else(|| self.bad("material", "", "this command needs a [material] section"))?;
        PiezoMaterial::new(m.d31, m.s11e, m.eps_t).map_err(self.at("material", "d31"))
    }

    /// Patch geometry; `x_start` defaults to 0 when not given.
    pub fn patch_geometry(&self) -> Result<PatchGeometry> {
        let p = self
            .patch
            .as_ref()
            .ok_or_else(|| self.bad("patch", "", "this command needs a [patch] section"))?;
        let x = p.x_start.unwrap_or(0.0);
        match (p.offset, p.host_thickness) {
            (Some(z), None) => PatchGeometry::new(p.length, p.width, p.thickness, z, x),
            (None, Some(h)) => PatchGeometry::on_host_surface(p.length, p.width, p.thickness, h, x),
            _ => return Err(self.bad("patch", "offset", "give exactly one of `offset` or `host_thickness`")),
        }
        .map_err(self.at("patch", "length"))
    }

    /// Patch geometry at the configured `x_start`, which must be present.
    pub fn placed_patch(&self) -> Result<PatchGeometry> {
        let patch = self.patch_geometry()?;
        match self.patch.as_ref().and_then(|p| p.x_start) {
            Some(_) => Ok(patch),
            None => Err(self.bad("patch", "", "this command needs `x_start` in [patch]")),
        }
    }

    pub fn ppf(&self) -> Result<&PpfSection> {
        self.ppf
            .as_ref()
            .ok_or_else(|| self.bad("ppf", "", "this command needs a [ppf] section"))
    }

    pub fn mode_weights(&self) -> Result<BTreeMap<usize, f64>> {
        let raw = self
            .analysis
            .mode_weights
            .as_ref()
            .ok_or_else(|| self.bad("analysis", "mode_weights", "placement needs `mode_weights`"))?;
        let mut out = BTreeMap::new();
        for (k, &w) in raw {
            let i: usize = k
                .trim()
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| self.bad("analysis", "mode_weights", format!("`{k}` is not a mode number")))?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(self.bad("analysis", "mode_weights", format!("weight of mode {i} must be >= 0")));
            }
            out.insert(i, w);
        }
        if !out.values().any(|&w| w > 0.0) {
            return Err(self.bad("analysis", "mode_weights", "at least one weight must be positive"));
        }
        Ok(out)
    }

    pub fn placement_problem(&self, model: ModalModel) -> Result<PlacementProblem> {
        let a = &self.analysis;
        let problem = PlacementProblem {
            step: a.step.unwrap_or(model.extent() / 100.0),
            model,
            patch: self.patch_geometry()?,
            material: self.material()?,
            mode_weights: self.mode_weights()?,
            n_patches: a.n_patches.unwrap_or(1),
            min_gap: a.min_gap.unwrap_or(0.0),
        };
        problem.validate().map_err(self.at("analysis", "mode_weights"))?;
        Ok(problem)
    }

    /// Plant modes: `plant_modes` when given, otherwise every model mode.
    pub fn plant_modes(&self, model: &ModalModel) -> Vec<usize> {
        match &self.analysis.plant_modes {
            Some(m) => m.clone(),
            None => model.modes().iter().map(|m| m.index).collect(),
        }
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        let a = &self.analysis;
        let points = a.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        match a.sweep_band_hz {
            Some([lo, hi]) => SweepGrid::Fixed(crate::frf::linspace(lo, hi, points)),
            None => SweepGrid::AroundResonance {
                points,
                half_width: a.half_width.unwrap_or(DEFAULT_HALF_WIDTH),
            },
        }
    }
}
