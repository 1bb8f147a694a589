//! Flat key = value configuration files. `#` starts a comment; keys are
//! case-sensitive; list values are whitespace-separated.
//!
//! ```text
//! domain = l_shape
//! n_list = 8 16 32
//! eps = 0.375
//! s = 0.375 0.625 0.375 0.625
//! source = sine
//! poincare = auto
//! grad_norm = euclidean
//! out = results
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use hypercircle::geometry::Rect;
use hypercircle::weight::GradNormConvention;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    UnitSquare,
    LShape,
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// f = 2π² sin(πx) sin(πy).
    Sine,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletData {
    Zero,
    /// g_D = x + y (exact solution u = x + y when the source is zero).
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySetup {
    Dirichlet,
    PureNeumann,
    /// Dirichlet everywhere except the listed rectangle sides.
    Mixed { left: bool, right: bool, bottom: bool, top: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareChoice {
    Auto,
    Exact,
    CrBound,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: Domain,
    pub n_list: Vec<u32>,
    pub eps_list: Vec<f64>,
    pub s: Rect,
    pub source: Source,
    pub dirichlet_data: DirichletData,
    pub boundary: BoundarySetup,
    pub poincare: PoincareChoice,
    pub grad_norm: GradNormConvention,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: Domain::UnitSquare,
            n_list: vec![8],
            eps_list: vec![0.3],
            s: Rect::new(0.375, 0.625, 0.375, 0.625),
            source: Source::Sine,
            dirichlet_data: DirichletData::Zero,
            boundary: BoundarySetup::Dirichlet,
            poincare: PoincareChoice::Auto,
            grad_norm: GradNormConvention::Euclidean,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_floats(v: &str, expect: usize, key: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = v
        .split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("{key}: bad number '{t}'")))
        .collect::<Result<_>>()?;
    if expect > 0 && vals.len() != expect {
        bail!("{key}: expected {expect} numbers, got {}", vals.len());
    }
    Ok(vals)
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{raw}'", lineno + 1))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }

    let mut cfg = RunConfig::default();
    let mut n_set = false;
    let mut eps_set = false;
    for (k, v) in &kv {
        match k.as_str() {
            "domain" => {
                let mut it = v.split_whitespace();
                match it.next() {
                    Some("unit_square") => cfg.domain = Domain::UnitSquare,
                    Some("l_shape") => cfg.domain = Domain::LShape,
                    Some("rect") => {
                        let rest: String = it.collect::<Vec<_>>().join(" ");
                        let f = parse_floats(&rest, 4, "domain rect")?;
                        cfg.domain = Domain::Rect { x0: f[0], x1: f[1], y0: f[2], y1: f[3] };
                    }
                    other => bail!("domain: expected unit_square | l_shape | rect, got {other:?}"),
                }
            }
            "n" | "n_list" => {
                cfg.n_list = v
                    .split_whitespace()
                    .map(|t| t.parse::<u32>().with_context(|| format!("n: bad value '{t}'")))
                    .collect::<Result<_>>()?;
                if k == "n" && cfg.n_list.len() != 1 {
                    bail!("n: expected a single value, use n_list for sweeps");
                }
                n_set = true;
            }
            "eps" | "eps_list" => {
                cfg.eps_list = parse_floats(v, 0, "eps")?;
                if k == "eps" && cfg.eps_list.len() != 1 {
                    bail!("eps: expected a single value, use eps_list for sweeps");
                }
                eps_set = true;
            }
            "s" => {
                let f = parse_floats(v, 4, "s")?;
                cfg.s = Rect::new(f[0], f[1], f[2], f[3]);
            }
            "source" => {
                cfg.source = match v.as_str() {
                    "sine" => Source::Sine,
                    "zero" => Source::Zero,
                    other => bail!("source: expected sine | zero, got '{other}'"),
                }
            }
            "dirichlet_data" => {
                cfg.dirichlet_data = match v.as_str() {
                    "zero" => DirichletData::Zero,
                    "linear" => DirichletData::Linear,
                    other => bail!("dirichlet_data: expected zero | linear, got '{other}'"),
                }
            }
            "boundary" => {
                cfg.boundary = match v.as_str() {
                    "dirichlet" => BoundarySetup::Dirichlet,
                    "pure_neumann" => BoundarySetup::PureNeumann,
                    other => bail!("boundary: expected dirichlet | pure_neumann, got '{other}'"),
                }
            }
            "neumann_sides" => {
                let mut sides = (false, false, false, false);
                for side in v.split_whitespace() {
                    match side {
                        "left" => sides.0 = true,
                        "right" => sides.1 = true,
                        "bottom" => sides.2 = true,
                        "top" => sides.3 = true,
                        other => bail!("neumann_sides: unknown side '{other}'"),
                    }
                }
                cfg.boundary = BoundarySetup::Mixed {
                    left: sides.0,
                    right: sides.1,
                    bottom: sides.2,
                    top: sides.3,
                };
            }
            "poincare" => {
                cfg.poincare = match v.as_str() {
                    "auto" => PoincareChoice::Auto,
                    "exact" => PoincareChoice::Exact,
                    "cr_bound" => PoincareChoice::CrBound,
                    other => bail!("poincare: expected auto | exact | cr_bound, got '{other}'"),
                }
            }
            "grad_norm" => cfg.grad_norm = parse_convention(v)?,
            "out" => cfg.out = PathBuf::from(v),
            other => bail!("unknown config key '{other}'"),
        }
    }
    if !n_set {
        bail!("config must set n or n_list");
    }
    let _ = eps_set;
    if !cfg.n_list.windows(2).all(|w| w[0] < w[1]) {
        bail!("n_list must be sorted ascending without repeats");
    }
    if cfg.domain == Domain::LShape {
        if let Some(odd) = cfg.n_list.iter().find(|&&n| n % 2 != 0) {
            bail!("l_shape needs even n, got {odd}");
        }
    }
    Ok(cfg)
}

pub fn parse_convention(v: &str) -> Result<GradNormConvention> {
    match v {
        "euclidean" => Ok(GradNormConvention::Euclidean),
        "axis" => Ok(GradNormConvention::Axis),
        other => bail!("grad norm convention: expected euclidean | axis, got '{other}'"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = parse(
            "# experiment\n\
             domain = l_shape\n\
             n_list = 8 16 32\n\
             eps = 0.375\n\
             s = 0.375 0.625 0.375 0.625\n\
             source = sine\n\
             poincare = cr_bound\n\
             grad_norm = axis\n\
             out = results\n",
        )
        .unwrap();
        assert_eq!(cfg.domain, Domain::LShape);
        assert_eq!(cfg.n_list, vec![8, 16, 32]);
        assert_eq!(cfg.eps_list, vec![0.375]);
        assert_eq!(cfg.grad_norm, GradNormConvention::Axis);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(parse("n = 8\ndomain = hexagon\n").is_err());
        assert!(parse("eps = 0.3\n").is_err(), "missing n");
        assert!(parse("n_list = 16 8\n").is_err(), "unsorted");
        assert!(parse("domain = l_shape\nn = 9\n").is_err(), "odd n on l_shape");
        assert!(parse("n = 8\nfrobnicate = 1\n").is_err(), "unknown key");
    }

    #[test]
    fn empty_n_list_is_allowed() {
        let cfg = parse("n_list =\n").unwrap();
        assert!(cfg.n_list.is_empty());
    }
}
