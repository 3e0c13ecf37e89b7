//! Declarative experiment configuration.
//!
//! Experiments are described by a JSON document (see `experiments/` in the
//! repository for runnable samples and `experiments/config.schema.json` for
//! the schema). The same structs drive the `ivflow` binary and the library
//! runner.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::adiabatic::InvariantSpec;
use crate::error::{Error, Result};
use crate::flow::GridSpec;
use crate::maps::{iterate_power, Domain, FroeschleParams, MapFamily};
use crate::rkf78::IntegratorSettings;
use crate::section::SectionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Iterate,
    FlowError,
    DhScan,
    RestoreField,
    Section,
    InvariantSeries,
    SeedLevelset,
    CoeffDump,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Iterate => "iterate",
            ExperimentKind::FlowError => "flow-error",
            ExperimentKind::DhScan => "dh-scan",
            ExperimentKind::RestoreField => "restore-field",
            ExperimentKind::Section => "section",
            ExperimentKind::InvariantSeries => "invariant-series",
            ExperimentKind::SeedLevelset => "seed-levelset",
            ExperimentKind::CoeffDump => "coeff-dump",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapName {
    Standard,
    Froeschle,
    Flow,
}

/// Extra parameters of a map family; which fields apply depends on the kind.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    pub eta: Option<f64>,
    /// Built-in vector field of a flow family: "pendulum" or "linear".
    pub field: Option<String>,
    /// Coefficient of the linear field `x' = a x`.
    pub a: Option<f64>,
    /// Local tolerance for the flow-family integration.
    pub integ_tol: Option<f64>,
    /// Half-width of the action-domain box (default 50).
    pub action_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub map: MapName,
    pub epsilon: f64,
    #[serde(default)]
    pub params: Option<MapParams>,
    /// Iterate power q >= 1; the experiment then runs on `F^q`.
    #[serde(default)]
    pub power: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvfConfig {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub h_init: Option<f64>,
    #[serde(default)]
    pub h_min: Option<f64>,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

impl IntegratorConfig {
    pub fn build(&self) -> IntegratorSettings {
        let mut s = IntegratorSettings::default();
        if let Some(v) = self.abs_tol {
            s.abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            s.rel_tol = v;
        }
        s.h_init = self.h_init.or(s.h_init);
        if let Some(v) = self.h_min {
            s.h_min = v;
        }
        s.h_max = self.h_max.or(s.h_max);
        if let Some(v) = self.max_steps {
            s.max_steps = v;
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    /// Defaults to the family's canonical base point.
    #[serde(default)]
    pub base_point: Option<Vec<f64>>,
    #[serde(default)]
    pub quad_tol: Option<f64>,
    #[serde(default)]
    pub max_romberg_levels: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SectionConfig {
    /// `{x_i = x_j}` for two angle coordinates (wrapped difference).
    AngleDifference {
        i: usize,
        j: usize,
        #[serde(default)]
        newton_tol: Option<f64>,
        #[serde(default)]
        transversality_floor: Option<f64>,
    },
    /// `{x_i = value}` on a non-angle coordinate.
    Coordinate {
        i: usize,
        #[serde(default)]
        value: f64,
        #[serde(default)]
        newton_tol: Option<f64>,
        #[serde(default)]
        transversality_floor: Option<f64>,
    },
}

impl SectionConfig {
    pub fn build(&self) -> SectionSpec {
        let (mut spec, tol, floor) = match self {
            SectionConfig::AngleDifference {
                i,
                j,
                newton_tol,
                transversality_floor,
            } => (
                SectionSpec::angle_difference(*i, *j),
                *newton_tol,
                *transversality_floor,
            ),
            SectionConfig::Coordinate {
                i,
                value,
                newton_tol,
                transversality_floor,
            } => (
                SectionSpec::coordinate(*i, *value),
                *newton_tol,
                *transversality_floor,
            ),
        };
        if let Some(t) = tol {
            spec = spec.with_newton_tol(t);
        }
        if let Some(f) = floor {
            spec = spec.with_transversality_floor(f);
        }
        spec
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::new(self.lo.clone(), self.hi.clone(), self.counts.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedsConfig {
    List {
        points: Vec<Vec<f64>>,
    },
    Line {
        from: Vec<f64>,
        to: Vec<f64>,
        count: usize,
    },
    Random {
        lo: Vec<f64>,
        hi: Vec<f64>,
        count: usize,
    },
    /// Seeds on `Sigma \cap {h_n = energy}` (four-dimensional families).
    Levelset {
        energy: f64,
        psi_values: Vec<f64>,
        count_per_psi: usize,
        #[serde(default)]
        j2_max: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub seeds: SeedsConfig,
    /// Map iterates per seed.
    #[serde(default)]
    pub iterates: Option<u64>,
    /// Sampling stride for invariant series (iterates, or crossings when a
    /// section block is present).
    #[serde(default)]
    pub sample_every: Option<u64>,
    /// Iterate the time-eps map of the interpolating field instead of the map.
    #[serde(default)]
    pub use_ivf_flow: bool,
    #[serde(default)]
    pub crossings_per_seed: Option<usize>,
    #[serde(default)]
    pub max_iterates: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetConfig {
    pub energy: f64,
    pub psi_values: Vec<f64>,
    pub count_per_psi: usize,
    #[serde(default)]
    pub j2_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffConfig {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub n_list: Vec<usize>,
    pub epsilon_list: Vec<f64>,
}

/// A complete experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub ivf: Option<IvfConfig>,
    #[serde(default)]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default)]
    pub invariant: Option<InvariantConfig>,
    #[serde(default)]
    pub section: Option<SectionConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub orbit: Option<OrbitConfig>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub levelset: Option<LevelsetConfig>,
    #[serde(default)]
    pub coeffs: Option<CoeffConfig>,
    pub output: String,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Build the configured map family (including an iterate power).
pub fn build_map(cfg: &MapConfig) -> Result<Arc<MapFamily>> {
    let p = cfg.params.clone().unwrap_or_default();
    let base = match cfg.map {
        MapName::Standard => MapFamily::standard_map(cfg.epsilon),
        MapName::Froeschle => {
            let params = FroeschleParams {
                a1: p.a1.unwrap_or(1.0),
                a2: p.a2.unwrap_or(0.5),
                a3: p.a3.unwrap_or(1.25),
                eta: p.eta.unwrap_or(0.5),
            };
            MapFamily::froeschle_map(cfg.epsilon, params)
        }
        MapName::Flow => {
            let tol = p.integ_tol.unwrap_or(1e-12);
            match p.field.as_deref() {
                Some("pendulum") | None => MapFamily::flow_map(
                    |x, out| {
                        out[0] = x[1];
                        out[1] = -x[0].sin();
                    },
                    2,
                    cfg.epsilon,
                    tol,
                )
                .with_symplectic(true),
                Some("linear") => {
                    let a = p.a.unwrap_or(1.0);
                    MapFamily::flow_map(move |x, out| out[0] = a * x[0], 1, cfg.epsilon, tol)
                }
                Some(other) => {
                    return Err(Error::Config(format!(
                        "unknown flow field '{other}' (expected pendulum or linear)"
                    )))
                }
            }
        }
    };
    let base = if let Some(bound) = p.action_bound {
        let dim = base.dim();
        let mask = base.angle_mask().to_vec();
        let mut dom = Domain::unbounded(dim);
        for (j, is_angle) in mask.iter().enumerate() {
            if !is_angle {
                dom = dom.with_bound(j, -bound, bound);
            }
        }
        base.with_domain(dom)
    } else {
        base
    };
    Ok(match cfg.power {
        Some(q) if q > 1 => Arc::new(iterate_power(Arc::new(base), q)),
        _ => Arc::new(base),
    })
}

/// Build the invariant spec, defaulting the base point per family.
pub fn build_invariant(cfg: Option<&InvariantConfig>, map: &MapFamily) -> Result<InvariantSpec> {
    let mut spec = match cfg.and_then(|c| c.base_point.clone()) {
        Some(bp) => InvariantSpec::new(bp),
        None => InvariantSpec::for_map(map)?,
    };
    if let Some(c) = cfg {
        if let Some(t) = c.quad_tol {
            spec.quad_tol = t;
        }
        if let Some(l) = c.max_romberg_levels {
            spec.max_romberg_levels = l;
        }
    }
    Ok(spec)
}

/// Rough upfront cost of an experiment in map applications:
/// `steps x 13 field evaluations x 2n map applications` per integrated point,
/// with experiment-specific point counts.
#[derive(Debug, Clone, Copy)]
pub struct CostEstimate {
    pub points: u64,
    pub map_applications: u64,
}

const STEPS_PER_ADVANCE: u64 = 2;
const QUAD_EVALS: u64 = 130;
const NEWTON_EVALS: u64 = 5;

pub fn cost_estimate(cfg: &ExperimentConfig) -> Option<CostEstimate> {
    let n = cfg.ivf.as_ref().map(|i| i.n as u64).unwrap_or(1);
    let grid_points = cfg
        .grid
        .as_ref()
        .map(|g| g.counts.iter().product::<usize>() as u64);
    let seeds = cfg.orbit.as_ref().map(|o| match &o.seeds {
        SeedsConfig::List { points } => points.len() as u64,
        SeedsConfig::Line { count, .. } | SeedsConfig::Random { count, .. } => *count as u64,
        SeedsConfig::Levelset {
            psi_values,
            count_per_psi,
            ..
        } => (psi_values.len() * count_per_psi) as u64,
    });
    match cfg.kind {
        ExperimentKind::FlowError => grid_points.map(|p| CostEstimate {
            points: p,
            map_applications: p * STEPS_PER_ADVANCE * 13 * 2 * n + p,
        }),
        ExperimentKind::RestoreField => grid_points.map(|p| CostEstimate {
            points: p,
            map_applications: p * 2 * n,
        }),
        ExperimentKind::DhScan => {
            let p = grid_points?;
            let scan = cfg.scan.as_ref()?;
            let n_sum: u64 = scan.n_list.iter().map(|&v| v as u64).sum();
            let combos = scan.epsilon_list.len() as u64;
            Some(CostEstimate {
                points: p * combos * scan.n_list.len() as u64,
                map_applications: p * combos * 2 * QUAD_EVALS * 2 * n_sum,
            })
        }
        ExperimentKind::Iterate => {
            let s = seeds?;
            let iterates = cfg.orbit.as_ref()?.iterates?;
            let per_step = if cfg.orbit.as_ref()?.use_ivf_flow {
                STEPS_PER_ADVANCE * 13 * 2 * n
            } else {
                1
            };
            Some(CostEstimate {
                points: s * iterates,
                map_applications: s * iterates * per_step,
            })
        }
        ExperimentKind::Section => {
            let s = seeds?;
            let crossings = cfg.orbit.as_ref()?.crossings_per_seed? as u64;
            Some(CostEstimate {
                points: s * crossings,
                map_applications: s * crossings * (NEWTON_EVALS * 13 * 2 * n + 25),
            })
        }
        ExperimentKind::InvariantSeries => {
            let iterates = cfg.orbit.as_ref()?.iterates?;
            let stride = cfg.orbit.as_ref()?.sample_every.unwrap_or(1);
            let samples = iterates / stride.max(1) + 1;
            Some(CostEstimate {
                points: samples,
                map_applications: iterates + samples * QUAD_EVALS * 2 * n,
            })
        }
        ExperimentKind::SeedLevelset => {
            let l = cfg.levelset.as_ref()?;
            let p = (l.psi_values.len() * l.count_per_psi) as u64;
            Some(CostEstimate {
                points: p,
                map_applications: p * 10 * QUAD_EVALS * 2 * n,
            })
        }
        ExperimentKind::CoeffDump => Some(CostEstimate {
            points: cfg.coeffs.as_ref().map(|c| c.n as u64).unwrap_or(0),
            map_applications: 0,
        }),
    }
}

/// Schema and cross-field validation report.
#[derive(Debug, Default)]
pub struct ValidationReport {
    pub problems: Vec<String>,
    pub cost: Option<CostEstimate>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.problems.is_empty()
    }
}

pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut problems = Vec::new();
    let kind = cfg.kind;
    let need = |present: bool, block: &str, problems: &mut Vec<String>| {
        if !present {
            problems.push(format!(
                "{} requires a `{block}` block",
                kind.name()
            ));
        }
    };

    match kind {
        ExperimentKind::Iterate => {
            need(cfg.map.is_some(), "map", &mut problems);
            need(cfg.orbit.is_some(), "orbit", &mut problems);
            if let Some(o) = &cfg.orbit {
                if o.iterates.is_none() {
                    problems.push("iterate requires `orbit.iterates`".into());
                }
                if o.use_ivf_flow && cfg.ivf.is_none() {
                    problems.push("orbit.use_ivf_flow requires an `ivf` block".into());
                }
            }
        }
        ExperimentKind::FlowError | ExperimentKind::RestoreField => {
            need(cfg.map.is_some(), "map", &mut problems);
            need(cfg.ivf.is_some(), "ivf", &mut problems);
            need(cfg.grid.is_some(), "grid", &mut problems);
        }
        ExperimentKind::DhScan => {
            need(cfg.map.is_some(), "map", &mut problems);
            need(cfg.grid.is_some(), "grid", &mut problems);
            need(cfg.scan.is_some(), "scan", &mut problems);
        }
        ExperimentKind::Section => {
            need(cfg.map.is_some(), "map", &mut problems);
            need(cfg.ivf.is_some(), "ivf", &mut problems);
            need(cfg.section.is_some(), "section", &mut problems);
            need(cfg.orbit.is_some(), "orbit", &mut problems);
            if let Some(o) = &cfg.orbit {
                if o.crossings_per_seed.is_none() {
                    problems.push("section requires `orbit.crossings_per_seed`".into());
                }
            }
        }
        ExperimentKind::InvariantSeries => {
            need(cfg.map.is_some(), "map", &mut problems);
            need(cfg.ivf.is_some(), "ivf", &mut problems);
            need(cfg.orbit.is_some(), "orbit", &mut problems);
            if let Some(o) = &cfg.orbit {
                if o.iterates.is_none() {
                    problems.push("invariant-series requires `orbit.iterates`".into());
                }
            }
        }
        ExperimentKind::SeedLevelset => {
            need(cfg.map.is_some(), "map", &mut problems);
            need(cfg.ivf.is_some(), "ivf", &mut problems);
            need(cfg.levelset.is_some(), "levelset", &mut problems);
        }
        ExperimentKind::CoeffDump => {
            need(cfg.coeffs.is_some(), "coeffs", &mut problems);
        }
    }

    if let Some(ivf) = &cfg.ivf {
        if ivf.n < 1 || ivf.n > crate::coeffs::MAX_ORDER {
            problems.push(format!(
                "ivf.n must lie in 1..={}, got {}",
                crate::coeffs::MAX_ORDER,
                ivf.n
            ));
        }
    }
    if let Some(c) = &cfg.coeffs {
        if c.n < 1 || c.n > crate::coeffs::MAX_ORDER {
            problems.push(format!(
                "coeffs.n must lie in 1..={}, got {}",
                crate::coeffs::MAX_ORDER,
                c.n
            ));
        }
    }
    if let Some(g) = &cfg.grid {
        if let Err(e) = g.build() {
            problems.push(e.to_string());
        }
    }
    if let Some(i) = &cfg.integrator {
        if let Err(e) = i.build().validate() {
            problems.push(e.to_string());
        }
    }
    if let Some(inv) = &cfg.invariant {
        if inv.quad_tol.is_some_and(|t| t <= 0.0) {
            problems.push("invariant.quad_tol must be positive".into());
        }
    }
    if let Some(s) = &cfg.scan {
        if s.n_list.is_empty() || s.epsilon_list.is_empty() {
            problems.push("scan lists must be non-empty".into());
        }
        if s.n_list
            .iter()
            .any(|&n| n < 1 || n > crate::coeffs::MAX_ORDER)
        {
            problems.push("scan.n_list entries must lie in 1..=64".into());
        }
    }
    if let Some(map_cfg) = &cfg.map {
        if map_cfg.power == Some(0) {
            problems.push("map.power must be at least 1".into());
        }
        if let Err(e) = build_map(map_cfg) {
            problems.push(e.to_string());
        }
    }

    ValidationReport {
        problems,
        cost: cost_estimate(cfg),
    }
}

/// FNV-1a hash of the canonical JSON encoding; identifies a config in the run
/// manifest.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = serde_json::to_string(cfg).unwrap_or_default();
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            description: None,
            map: None,
            ivf: None,
            integrator: None,
            invariant: None,
            section: None,
            grid: None,
            orbit: None,
            scan: None,
            levelset: None,
            coeffs: None,
            output: "out.csv".into(),
            workers: None,
            rng_seed: None,
        }
    }

    #[test]
    fn missing_blocks_are_reported_by_name() {
        let report = validate(&minimal(ExperimentKind::FlowError));
        assert!(!report.is_ok());
        assert!(report.problems.iter().any(|p| p.contains("`ivf`")));
        assert!(report.problems.iter().any(|p| p.contains("`map`")));
        assert!(report.problems.iter().any(|p| p.contains("`grid`")));
    }

    #[test]
    fn zero_order_is_rejected() {
        let mut cfg = minimal(ExperimentKind::FlowError);
        cfg.map = Some(MapConfig {
            map: MapName::Standard,
            epsilon: 0.1,
            params: None,
            power: None,
        });
        cfg.ivf = Some(IvfConfig { n: 0 });
        cfg.grid = Some(GridConfig {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            counts: vec![4, 4],
        });
        let report = validate(&cfg);
        assert!(report.problems.iter().any(|p| p.contains("ivf.n")));
    }

    #[test]
    fn parse_rejects_unknown_fields() {
        let text = r#"{ "kind": "coeff-dump", "coeffs": {"n": 2}, "output": "x.csv", "bogus": 1 }"#;
        let parsed: std::result::Result<ExperimentConfig, _> = serde_json::from_str(text);
        assert!(parsed.is_err());
    }

    #[test]
    fn map_config_round_trip() {
        let text = r#"{
            "map": "froeschle",
            "epsilon": 0.2,
            "params": {"a1": 1.0, "a2": 0.5, "a3": 1.25, "eta": 0.5},
            "power": 2
        }"#;
        let cfg: MapConfig = serde_json::from_str(text).unwrap();
        let map = build_map(&cfg).unwrap();
        assert_eq!(map.dim(), 4);
        assert!((map.step() - 0.4).abs() < 1e-15);
        assert!((map.epsilon() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = minimal(ExperimentKind::CoeffDump);
        let mut b = minimal(ExperimentKind::CoeffDump);
        assert_eq!(config_hash(&a), config_hash(&a));
        b.output = "other.csv".into();
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
