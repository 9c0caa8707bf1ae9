//! Scenario files.
//!
//! A flat `key = value` format, one entry per line, `#` starts a comment.
//! Each `branch` line opens a new branch; the `term = i j c` lines that
//! follow add `c · x₁ⁱ x₂ʲ` to it. A `branch` with no terms is the zero
//! polynomial.
//!
//! ```text
//! name = parabola
//! domain = -1 1 -1 2        # xmin xmax ymin ymax
//! seed = 0 0                # repeatable; omit to scan for seeds
//! step = 0.001
//! branch
//! term = 0 1 1
//! term = 2 0 -1
//! branch
//! ```
//!
//! Optional keys: `step`, `max_len`, `tol_active`, `delta_min`, `turn_tol`,
//! `grid_h`.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::{Branch, Domain, SemiconcaveFn, DEFAULT_TOL_ACTIVE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioOptions {
    pub step: f64,
    pub max_len: f64,
    pub tol_active: f64,
    pub delta_min: f64,
    pub turn_tol: f64,
    /// Oracle scan cell size; defaults to a fortieth of the shorter side.
    pub grid_h: Option<f64>,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            step: 1e-2,
            max_len: 10.0,
            tol_active: DEFAULT_TOL_ACTIVE,
            delta_min: 1e-6,
            turn_tol: 1e-3,
            grid_h: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub branches: Vec<Vec<(u32, u32, f64)>>,
    pub domain: [f64; 4],
    pub seeds: Vec<Vec2>,
    pub options: ScenarioOptions,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn numbers<const N: usize>(line: usize, key: &str, value: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != N {
        return Err(err(line, format!("`{key}` expects {N} numbers, got {}", parts.len())));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(line, format!("`{key}`: `{p}` is not a finite number")))?;
    }
    Ok(out)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut name: Option<String> = None;
        let mut domain: Option<[f64; 4]> = None;
        let mut branches: Vec<Vec<(u32, u32, f64)>> = Vec::new();
        let mut seeds = Vec::new();
        let mut options = ScenarioOptions::default();
        let mut seen: Vec<&str> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content == "branch" {
                branches.push(Vec::new());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            match key {
                "term" => {
                    let current = branches.last_mut().ok_or_else(|| err(line, "`term` before any `branch`"))?;
                    let [i, j, c] = numbers::<3>(line, key, value)?;
                    let exp = |v: f64| {
                        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                            Ok(v as u32)
                        } else {
                            Err(err(line, format!("exponent `{v}` is not a non-negative integer")))
                        }
                    };
                    current.push((exp(i)?, exp(j)?, c));
                    continue;
                }
                "seed" => {
                    let [x, y] = numbers::<2>(line, key, value)?;
                    seeds.push(Vec2::new(x, y));
                    continue;
                }
                _ => {}
            }
            let canonical = match key {
                "name" | "domain" | "step" | "max_len" | "tol_active" | "delta_min" | "turn_tol" | "grid_h" => key,
                _ => return Err(err(line, format!("unknown key `{key}`"))),
            };
            if seen.contains(&canonical) {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
            seen.push(canonical);
            match canonical {
                "name" => {
                    let ok =
                        !value.is_empty() && value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
                    if !ok {
                        return Err(err(line, "`name` must be nonempty and use only [A-Za-z0-9_-]"));
                    }
                    name = Some(value.to_string());
                }
                "domain" => domain = Some(numbers::<4>(line, key, value)?),
                other => {
                    let [v] = numbers::<1>(line, key, value)?;
                    if !(v > 0.0) {
                        return Err(err(line, format!("`{other}` must be positive")));
                    }
                    match other {
                        "step" => options.step = v,
                        "max_len" => options.max_len = v,
                        "tol_active" => options.tol_active = v,
                        "delta_min" => options.delta_min = v,
                        "turn_tol" => options.turn_tol = v,
                        _ => options.grid_h = Some(v),
                    }
                }
            }
        }
        let name = name.ok_or_else(|| err(0, "missing `name`"))?;
        let domain = domain.ok_or_else(|| err(0, "missing `domain`"))?;
        if branches.is_empty() {
            return Err(err(0, "no `branch` blocks"));
        }
        let sc = Scenario { name, branches, domain, seeds, options };
        sc.function().map_err(|e| match e {
            Error::Parse { .. } => e,
            other => err(0, other.to_string()),
        })?;
        Ok(sc)
    }

    pub fn function(&self) -> Result<SemiconcaveFn> {
        let [a, b, c, d] = self.domain;
        let branches = self.branches.iter().map(|t| Branch::new(t.iter().copied())).collect::<Result<Vec<_>>>()?;
        SemiconcaveFn::new(branches, Domain::new(a, b, c, d)?)
    }

    pub fn grid_h(&self) -> f64 {
        let [a, b, c, d] = self.domain;
        self.options.grid_h.unwrap_or(((b - a).min(d - c)) / 40.0)
    }
}
