//! Declarative experiment configuration: named model presets, grid
//! expansion, and JSON (de)serialization with golden files under configs/.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::NoiseLaw;
use crate::spectra::SpikeSpec;

/// Which estimators a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Eigenvalue-gap threshold estimator.
    Gap,
    /// Sequential Tracy-Widom test estimator.
    Tw,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Gap => "gap",
            EstimatorKind::Tw => "tw",
        })
    }
}

/// Whether the estimators receive the true noise variance or estimate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma2Mode {
    #[default]
    Known,
    Estimated,
}

impl std::fmt::Display for Sigma2Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sigma2Mode::Known => "known",
            Sigma2Mode::Estimated => "estimated",
        })
    }
}

/// Model under simulation: a named preset or explicit spikes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Preset(String),
    Custom {
        /// (strength, multiplicity) pairs; empty for a white model.
        spikes: Vec<(f64, usize)>,
    },
}

/// Grid of experiment cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    /// Explicit (p, n) pairs.
    Points { points: Vec<(usize, usize)> },
    /// Sample sizes with a fixed aspect ratio; p = round(c * n).
    NGrid { n_values: Vec<usize>, c: f64 },
    /// Factor-strength sweep at a fixed shape.
    AlphaSweep { alpha_sweep: AlphaSweepSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSweepSpec {
    pub p: usize,
    pub n: usize,
    pub alphas: Vec<f64>,
}

/// Threshold constant: a fixed value or "auto" for per-shape calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CChoice {
    Fixed(f64),
    Keyword(String),
}

impl CChoice {
    fn resolve(&self) -> Result<Option<f64>> {
        match self {
            CChoice::Fixed(v) if *v > 0.0 && v.is_finite() => Ok(Some(*v)),
            CChoice::Fixed(v) => Err(Error::Config(format!(
                "threshold constant must be positive, got {v}"
            ))),
            CChoice::Keyword(s) if s == "auto" => Ok(None),
            CChoice::Keyword(s) => Err(Error::Config(format!(
                "threshold constant must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

fn default_gamma() -> f64 {
    0.005
}

fn default_sigma2() -> f64 {
    1.0
}

/// One Monte Carlo experiment: model x grid x estimators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub estimators: Vec<EstimatorKind>,
    /// Gap-threshold constant; omitted means the preset default.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub threshold_const: Option<CChoice>,
    /// Significance level of the sequential test.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub sigma2_mode: Sigma2Mode,
    /// Population noise variance used for generation.
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub noise_law: NoiseLaw,
    /// Worker threads for replication-level parallelism; 0 picks the
    /// library default. Results are identical for any value.
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Built-in model presets: spikes, the (aspect ratio, default C) rows they
/// were tuned at, and the alpha-sweep template strength if the preset is a
/// sweep family.
#[derive(Debug, Clone, Copy)]
pub struct PresetDef {
    pub name: &'static str,
    pub spikes: &'static [(f64, usize)],
    /// Valid (c, default C) combinations.
    pub tunings: &'static [(f64, f64)],
    /// Fixed extra factor appended to the two swept ones (sweep presets).
    pub sweep_extra: Option<f64>,
}

pub const PRESETS: &[PresetDef] = &[
    PresetDef { name: "A", spikes: &[(6.0, 1), (5.0, 1)], tunings: &[(10.0, 11.0)], sweep_extra: None },
    PresetDef { name: "B", spikes: &[(10.0, 1), (5.0, 1)], tunings: &[(10.0, 11.0)], sweep_extra: None },
    PresetDef { name: "C", spikes: &[(1.5, 1)], tunings: &[(1.0, 5.0)], sweep_extra: None },
    PresetDef { name: "D", spikes: &[(2.5, 1), (1.5, 1)], tunings: &[(1.0, 5.0)], sweep_extra: None },
    PresetDef { name: "E", spikes: &[], tunings: &[(0.25, 6.0)], sweep_extra: Some(5.0) },
    PresetDef { name: "F", spikes: &[], tunings: &[(4.0, 9.9)], sweep_extra: Some(15.0) },
    PresetDef { name: "G", spikes: &[(6.0, 1), (5.0, 2)], tunings: &[(10.0, 9.9)], sweep_extra: None },
    PresetDef { name: "H", spikes: &[(10.0, 1), (5.0, 2)], tunings: &[(10.0, 9.9)], sweep_extra: None },
    PresetDef { name: "I", spikes: &[(1.5, 2)], tunings: &[(1.0, 5.0)], sweep_extra: None },
    PresetDef { name: "J", spikes: &[(2.5, 1), (1.5, 2)], tunings: &[(1.0, 5.0)], sweep_extra: None },
    PresetDef { name: "K", spikes: &[], tunings: &[(1.0, 8.0), (10.0, 15.0)], sweep_extra: None },
];

pub fn preset(name: &str) -> Option<&'static PresetDef> {
    let upper = name.to_ascii_uppercase();
    PRESETS.iter().find(|p| p.name == upper)
}

/// One expanded grid point, ready to run.
#[derive(Debug, Clone)]
pub struct Cell {
    /// Model column value in reports; sweeps embed alpha here.
    pub label: String,
    pub spec: SpikeSpec,
    pub p: usize,
    pub n: usize,
    /// Seed stream: index of the cell in the expanded grid.
    pub stream: u64,
    /// Gap-threshold constant, None meaning calibrate at (p, n).
    pub threshold_const: Option<f64>,
}

impl Cell {
    pub fn q0(&self) -> usize {
        self.spec.q0()
    }
}

fn ratio_matches(p: usize, n: usize, c: f64) -> bool {
    let realized = p as f64 / n as f64;
    (realized - c).abs() <= 0.05 * c
}

/// Validates a config and expands its grid into runnable cells.
pub fn expand(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    if config.reps < 1 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::Config("at least one estimator is required".into()));
    }
    let mut seen = Vec::new();
    for e in &config.estimators {
        if seen.contains(e) {
            return Err(Error::Config(format!("duplicate estimator {e}")));
        }
        seen.push(*e);
    }
    if !(config.gamma > 0.0 && config.gamma < 0.5) {
        return Err(Error::Config(format!(
            "gamma must lie in (0, 0.5), got {}",
            config.gamma
        )));
    }
    if !(config.sigma2 > 0.0 && config.sigma2.is_finite()) {
        return Err(Error::Config(format!(
            "sigma2 must be positive, got {}",
            config.sigma2
        )));
    }

    let preset_def = match &config.model {
        ModelSpec::Preset(name) => Some(
            preset(name)
                .ok_or_else(|| Error::Config(format!("unknown model preset {name:?}")))?,
        ),
        ModelSpec::Custom { .. } => None,
    };

    let explicit_c = match &config.threshold_const {
        Some(choice) => Some(choice.resolve()?), // Some(None) means auto
        None => None,
    };

    let needs_c = config.estimators.contains(&EstimatorKind::Gap);

    // threshold constant for a cell with realized aspect ratio c
    let cell_c_const = |c_realized: f64| -> Result<Option<f64>> {
        match explicit_c {
            Some(resolved) => Ok(resolved),
            None => match preset_def {
                Some(def) => {
                    let tuning = def
                        .tunings
                        .iter()
                        .find(|(c, _)| (c_realized - c).abs() <= 0.05 * c);
                    match tuning {
                        Some(&(_, c_const)) => Ok(Some(c_const)),
                        None => Err(Error::Config(format!(
                            "model {} has no default threshold constant at c = {c_realized}; \
                             pass C explicitly",
                            def.name
                        ))),
                    }
                }
                None if needs_c => Err(Error::Config(
                    "custom models need an explicit C (or \"auto\") for the gap estimator".into(),
                )),
                None => Ok(None),
            },
        }
    };

    // aspect-ratio consistency for presets with pinned tunings
    let check_ratio = |p: usize, n: usize| -> Result<()> {
        if let Some(def) = preset_def {
            if !def.tunings.iter().any(|&(c, _)| ratio_matches(p, n, c)) {
                return Err(Error::Config(format!(
                    "grid point ({p}, {n}) has aspect ratio {} but model {} is defined at c in \
                     {:?}",
                    p as f64 / n as f64,
                    def.name,
                    def.tunings.iter().map(|t| t.0).collect::<Vec<_>>()
                )));
            }
        }
        Ok(())
    };

    let fixed_spikes: Vec<(f64, usize)> = match &config.model {
        ModelSpec::Preset(_) => preset_def.unwrap().spikes.to_vec(),
        ModelSpec::Custom { spikes } => spikes.clone(),
    };

    let base_label = match &config.model {
        ModelSpec::Preset(name) => name.to_ascii_uppercase(),
        ModelSpec::Custom { spikes } if spikes.is_empty() => "white".to_string(),
        ModelSpec::Custom { .. } => "custom".to_string(),
    };

    let mut cells = Vec::new();
    match &config.grid {
        GridSpec::Points { points } => {
            if points.is_empty() {
                return Err(Error::Config("grid has no points".into()));
            }
            if preset_def.is_some_and(|d| d.sweep_extra.is_some()) {
                return Err(Error::Config(format!(
                    "model {base_label} is an alpha-sweep template; use an alpha_sweep grid"
                )));
            }
            for &(p, n) in points {
                check_ratio(p, n)?;
                let spec = SpikeSpec::new(&fixed_spikes, config.sigma2, p)?;
                cells.push(Cell {
                    label: base_label.clone(),
                    spec,
                    p,
                    n,
                    stream: cells.len() as u64,
                    threshold_const: cell_c_const(p as f64 / n as f64)?,
                });
            }
        }
        GridSpec::NGrid { n_values, c } => {
            if n_values.is_empty() {
                return Err(Error::Config("grid has no points".into()));
            }
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::Config(format!("aspect ratio must be positive, got {c}")));
            }
            if preset_def.is_some_and(|d| d.sweep_extra.is_some()) {
                return Err(Error::Config(format!(
                    "model {base_label} is an alpha-sweep template; use an alpha_sweep grid"
                )));
            }
            for &n in n_values {
                let p = (c * n as f64).round() as usize;
                if p < 2 || n < 2 {
                    return Err(Error::Config(format!(
                        "grid point ({p}, {n}) from c = {c} is too small"
                    )));
                }
                check_ratio(p, n)?;
                let spec = SpikeSpec::new(&fixed_spikes, config.sigma2, p)?;
                cells.push(Cell {
                    label: base_label.clone(),
                    spec,
                    p,
                    n,
                    stream: cells.len() as u64,
                    threshold_const: cell_c_const(p as f64 / n as f64)?,
                });
            }
        }
        GridSpec::AlphaSweep { alpha_sweep } => {
            let AlphaSweepSpec { p, n, alphas } = alpha_sweep;
            if alphas.is_empty() {
                return Err(Error::Config("alpha sweep has no values".into()));
            }
            check_ratio(*p, *n)?;
            let template: Box<dyn Fn(f64) -> Vec<f64>> = match (&config.model, preset_def) {
                (_, Some(def)) if def.sweep_extra.is_some() => {
                    let extra = def.sweep_extra.unwrap();
                    Box::new(move |alpha| vec![alpha, alpha, extra])
                }
                (_, Some(_)) => {
                    return Err(Error::Config(format!(
                        "model {base_label} has fixed factors; alpha sweeps need a sweep \
                         template (E, F) or a single-spike custom model"
                    )));
                }
                (ModelSpec::Custom { spikes }, None) => {
                    if spikes.len() != 1 {
                        return Err(Error::Config(
                            "custom alpha-sweep models must have exactly one spike entry \
                             (its strength is replaced by each sweep value)"
                                .into(),
                        ));
                    }
                    let mult = spikes[0].1;
                    Box::new(move |alpha| vec![alpha; mult])
                }
                (ModelSpec::Preset(_), None) => unreachable!("preset resolved above"),
            };
            for &alpha in alphas {
                if !alpha.is_finite() || alpha < 0.0 {
                    return Err(Error::Config(format!(
                        "sweep strengths must be non-negative, got {alpha}"
                    )));
                }
                let strengths = template(alpha);
                let spec = SpikeSpec::from_strengths(&strengths, config.sigma2, *p)?;
                cells.push(Cell {
                    label: format!("{base_label}[alpha={alpha}]"),
                    spec,
                    p: *p,
                    n: *n,
                    stream: cells.len() as u64,
                    threshold_const: cell_c_const(*p as f64 / *n as f64)?,
                });
            }
        }
    }
    Ok(cells)
}
