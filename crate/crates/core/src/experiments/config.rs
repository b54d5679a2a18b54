//! Experiment configuration: INI-style sections of `key = value` lines.
//!
//! ```text
//! [experiment]
//! kind = convergence          # convergence | divergence | energy | hartmann
//!
//! [mesh]
//! families = triangular, perturbed_quad, voronoi
//! levels = 4, 8, 16
//! seed = 1
//!
//! [scheme]
//! variants = E, LS, GI
//! theta = 0.5
//! dt = 0.05*h^2               # or a fixed step such as 0.001
//! final_time = 0.25
//!
//! [problem]
//! name = manufactured
//! ```
//!
//! Unset keys take per-experiment defaults (see [`ExperimentConfig::defaults`]).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ini::{Ini, ParseOption};

use crate::local_ops::{ProjectorVariant, Stabilization};
use crate::mesh::MeshFamily;
use crate::timestepper::{DtRule, SchemeConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Convergence,
    Divergence,
    Energy,
    Hartmann,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Divergence => "divergence",
            ExperimentKind::Energy => "energy",
            ExperimentKind::Hartmann => "hartmann",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "convergence" => Ok(ExperimentKind::Convergence),
            "divergence" => Ok(ExperimentKind::Divergence),
            "energy" => Ok(ExperimentKind::Energy),
            "hartmann" => Ok(ExperimentKind::Hartmann),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub families: Vec<MeshFamily>,
    /// Strictly increasing refinement levels.
    pub levels: Vec<usize>,
    pub seed: u64,
    pub variants: Vec<ProjectorVariant>,
    pub theta: f64,
    pub dt: DtRule,
    pub final_time: f64,
    pub stab: Stabilization,
    /// Problem name as accepted by `ProblemDefinition::from_name`.
    pub problem: String,
    /// Number of points of the Q sweep (energy only).
    pub q_points: usize,
    /// Upper end of the Q sweep, `1/θ` when unset.
    pub q_upper: Option<f64>,
    /// Q values whose full per-step ledger is written (energy only).
    pub q_series: Vec<f64>,
    /// Write the field dump at the finest level (hartmann only).
    pub dump_fields: bool,
    pub output_dir: PathBuf,
}

const KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["kind"]),
    ("mesh", &["families", "family", "levels", "seed"]),
    (
        "scheme",
        &[
            "variants",
            "variant",
            "theta",
            "dt",
            "final_time",
            "stab_nodal",
            "stab_edge",
        ],
    ),
    ("problem", &["name", "c"]),
    ("energy", &["q_points", "q_upper", "q_series"]),
    ("hartmann", &["dump_fields"]),
    ("output", &["dir"]),
];

impl ExperimentConfig {
    /// Defaults that reproduce each benchmark at desk scale.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            families: MeshFamily::ALL.to_vec(),
            levels: vec![4, 8, 16, 32],
            seed: 1,
            variants: ProjectorVariant::ALL.to_vec(),
            theta: 0.5,
            dt: DtRule::HSquared(0.05),
            final_time: 0.25,
            stab: Stabilization::default(),
            problem: "manufactured".into(),
            q_points: 50,
            q_upper: None,
            q_series: vec![0.5, 1.0, 1.5, 1.9],
            dump_fields: true,
            output_dir: PathBuf::from("out"),
        };
        match kind {
            ExperimentKind::Convergence | ExperimentKind::Divergence => base,
            ExperimentKind::Energy => ExperimentConfig {
                families: vec![MeshFamily::Voronoi],
                // h ≈ 0.07
                levels: vec![52],
                variants: vec![ProjectorVariant::Elliptic],
                dt: DtRule::Fixed(0.001),
                final_time: 0.5,
                problem: "energy_family(C=0.1)".into(),
                ..base
            },
            ExperimentKind::Hartmann => ExperimentConfig {
                families: vec![MeshFamily::Voronoi],
                // h ≈ 0.2, 0.1, 0.05
                levels: vec![18, 36, 72],
                variants: vec![ProjectorVariant::Elliptic],
                dt: DtRule::Fixed(0.005),
                final_time: 2.0,
                problem: "hartmann".into(),
                ..base
            },
        }
    }

    fn parse_text(text: &str) -> Result<Self> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        // values never contain comment characters, so inline comments go too
        let stripped: String = text
            .lines()
            .map(|l| l.split(['#', ';']).next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join("\n");
        let ini =
            Ini::load_from_str_opt(&stripped, opt).map_err(|e| Error::Config(format!("line {}: {}", e.line, e.msg)))?;
        for (section, props) in ini.iter() {
            let allowed = match section {
                None if props.is_empty() => continue,
                None => return Err(Error::Config("keys must appear inside a [section]".into())),
                Some(s) => KEYS
                    .iter()
                    .find(|(name, _)| *name == s)
                    .map(|(_, keys)| *keys)
                    .ok_or_else(|| Error::Config(format!("unknown section [{s}]")))?,
            };
            for (key, _) in props.iter() {
                if !allowed.contains(&key) {
                    return Err(Error::Config(format!(
                        "unknown key '{key}' in [{}]",
                        section.unwrap_or("")
                    )));
                }
            }
        }
        let get = |section: &str, key: &str| ini.section(Some(section)).and_then(|p| p.get(key)).map(str::trim);

        let kind: ExperimentKind = get("experiment", "kind")
            .ok_or_else(|| Error::Config("missing [experiment] kind".into()))?
            .parse()?;
        let mut cfg = Self::defaults(kind);

        if let Some(v) = get("mesh", "families").or(get("mesh", "family")) {
            cfg.families = parse_list(v, |s| s.parse::<MeshFamily>())?;
        }
        if let Some(v) = get("mesh", "levels") {
            cfg.levels = parse_list(v, |s| parse_num::<usize>("levels", s))?;
        }
        if let Some(v) = get("mesh", "seed") {
            cfg.seed = parse_num("seed", v)?;
        }
        if let Some(v) = get("scheme", "variants").or(get("scheme", "variant")) {
            cfg.variants = parse_list(v, |s| s.parse::<ProjectorVariant>())?;
        }
        if let Some(v) = get("scheme", "theta") {
            cfg.theta = parse_num("theta", v)?;
        }
        if let Some(v) = get("scheme", "dt") {
            cfg.dt = parse_dt(v)?;
        }
        if let Some(v) = get("scheme", "final_time") {
            cfg.final_time = parse_num("final_time", v)?;
        }
        if let Some(v) = get("scheme", "stab_nodal") {
            cfg.stab.nodal = parse_num("stab_nodal", v)?;
        }
        if let Some(v) = get("scheme", "stab_edge") {
            cfg.stab.edge = parse_num("stab_edge", v)?;
        }
        if let Some(v) = get("problem", "name") {
            cfg.problem = v.to_string();
        }
        if let Some(v) = get("problem", "c") {
            let c: f64 = parse_num("c", v)?;
            cfg.problem = format!("energy_family(C={c:?})");
        }
        if let Some(v) = get("energy", "q_points") {
            cfg.q_points = parse_num("q_points", v)?;
        }
        if let Some(v) = get("energy", "q_upper") {
            cfg.q_upper = Some(parse_num("q_upper", v)?);
        }
        if let Some(v) = get("energy", "q_series") {
            cfg.q_series = if v.is_empty() {
                Vec::new()
            } else {
                parse_list(v, |s| parse_num::<f64>("q_series", s))?
            };
        }
        if let Some(v) = get("hartmann", "dump_fields") {
            cfg.dump_fields = match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                _ => return Err(Error::Config(format!("dump_fields must be true or false, got '{v}'"))),
            };
        }
        if let Some(v) = get("output", "dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Config("no mesh families given".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no projector variants given".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::Config("no refinement levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "levels must be strictly increasing: {:?}",
                self.levels
            )));
        }
        if matches!(self.kind, ExperimentKind::Convergence | ExperimentKind::Hartmann) && self.levels.len() < 2 {
            return Err(Error::Config("rates need at least two refinement levels".into()));
        }
        if self.kind == ExperimentKind::Energy {
            if !(0.5..=1.0).contains(&self.theta) {
                return Err(Error::Config(format!(
                    "the energy estimate needs theta in [1/2, 1], got {}",
                    self.theta
                )));
            }
            if self.q_points == 0 {
                return Err(Error::Config("empty Q grid".into()));
            }
            if let Some(u) = self.q_upper {
                if !(u > 0.0 && u.is_finite()) {
                    return Err(Error::Config(format!("q_upper must be positive, got {u}")));
                }
            }
        }
        self.scheme(self.variants[0])
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn scheme(&self, variant: ProjectorVariant) -> SchemeConfig {
        SchemeConfig {
            theta: self.theta,
            dt_rule: self.dt,
            final_time: self.final_time,
            variant,
            stab: self.stab,
        }
    }

    /// `q_upper`, or `1/θ`.
    pub fn q_upper(&self) -> f64 {
        self.q_upper.unwrap_or(1.0 / self.theta)
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_text(s)
    }
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{s}' for {key}")))
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| f(x).map_err(|e| Error::Config(e.to_string())))
        .collect()
}

/// `0.001` is a fixed step; `0.05*h^2` (or `0.05 h^2`) scales with the mesh.
pub fn parse_dt(s: &str) -> Result<DtRule> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(c) = compact.strip_suffix("h^2") {
        let c = c.strip_suffix('*').unwrap_or(c);
        let c = if c.is_empty() { 1.0 } else { parse_num("dt", c)? };
        return Ok(DtRule::HSquared(c));
    }
    Ok(DtRule::Fixed(parse_num("dt", &compact)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_str("[experiment]\nkind = convergence\n").unwrap();
        assert_eq!(c, ExperimentConfig::defaults(ExperimentKind::Convergence));
        assert_eq!(c.levels, vec![4, 8, 16, 32]);
    }

    #[test]
    fn full_config_round_trip() {
        let text = "\
# energy sweep
[experiment]
kind = energy   ; inline comment
[mesh]
family = voronoi
levels = 20
seed = 7
[scheme]
variant = LS
theta = 0.75
dt = 0.002
final_time = 0.1
stab_edge = 0.5
[problem]
c = 0.2
[energy]
q_points = 10
q_upper = 1.2
q_series = 0.3, 0.6
[output]
dir = results/energy
";
        let c = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(c.kind, ExperimentKind::Energy);
        assert_eq!(c.families, vec![MeshFamily::Voronoi]);
        assert_eq!(c.levels, vec![20]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.variants, vec![ProjectorVariant::LeastSquares]);
        assert_eq!(c.theta, 0.75);
        assert_eq!(c.dt, DtRule::Fixed(0.002));
        assert_eq!(c.stab.edge, 0.5);
        assert_eq!(c.stab.nodal, 1.0);
        assert_eq!(c.problem, "energy_family(C=0.2)");
        assert_eq!(c.q_points, 10);
        assert_eq!(c.q_upper(), 1.2);
        assert_eq!(c.q_series, vec![0.3, 0.6]);
        assert_eq!(c.output_dir, PathBuf::from("results/energy"));
    }

    #[test]
    fn dt_rules() {
        assert_eq!(parse_dt("0.05*h^2").unwrap(), DtRule::HSquared(0.05));
        assert_eq!(parse_dt("0.05 h^2").unwrap(), DtRule::HSquared(0.05));
        assert_eq!(parse_dt("h^2").unwrap(), DtRule::HSquared(1.0));
        assert_eq!(parse_dt("1e-3").unwrap(), DtRule::Fixed(1e-3));
        assert!(parse_dt("fast").is_err());
    }

    #[test]
    fn rejected_configs() {
        let bad = [
            "kind = convergence\n",
            "[experiment]\nkind = sweep\n",
            "[experiment]\nkind = convergence\n[mesh]\nlevels = 8, 4\n",
            "[experiment]\nkind = convergence\n[mesh]\nlevels = 4, 4\n",
            "[experiment]\nkind = convergence\n[mesh]\nlevels = 4\n",
            "[experiment]\nkind = convergence\n[mesh]\nfamilies = hexagons\n",
            "[experiment]\nkind = convergence\n[scheme]\nvariant = XY\n",
            "[experiment]\nkind = convergence\n[scheme]\ntheta = 2\n",
            "[experiment]\nkind = convergence\n[scheme]\nthetta = 0.5\n",
            "[experiment]\nkind = convergence\n[colors]\nx = 1\n",
            "[experiment]\nkind = energy\n[energy]\nq_points = 0\n",
            "[experiment]\nkind = energy\n[scheme]\ntheta = 0.25\n",
            "[experiment]\nkind = hartmann\n[hartmann]\ndump_fields = maybe\n",
        ];
        for text in bad {
            let err = ExperimentConfig::from_str(text).unwrap_err();
            assert!(err.is_config_error(), "{text:?} gave {err}");
        }
    }
}
