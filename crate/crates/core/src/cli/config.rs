//! Run configuration: flat `key = value` files merged with flags.

use crate::closure::ClosureKind;
use crate::expr::CollectMode;
use crate::verify::{DerivativeMethod, Grid2d};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub equation: Option<PathBuf>,
    /// Closure cases to run; empty means all three.
    pub cases: Vec<ClosureKind>,
    pub mode: CollectMode,
    pub sigma: Option<i8>,
    pub order: Option<usize>,
    pub unknowns: Option<Vec<String>>,
    pub grid: Grid2d,
    pub bindings: BTreeMap<String, f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub catalog: Option<PathBuf>,
    pub branches: Option<PathBuf>,
    pub branch: Option<String>,
    pub entry: Option<String>,
    pub method: DerivativeMethod,
    pub max_branches: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            equation: None,
            cases: Vec::new(),
            mode: CollectMode::Paper,
            sigma: None,
            order: None,
            unknowns: None,
            grid: Grid2d::default(),
            bindings: BTreeMap::new(),
            seed: 7,
            out: PathBuf::from("out"),
            catalog: None,
            branches: None,
            branch: None,
            entry: None,
            method: DerivativeMethod::Jets,
            max_branches: 512,
        }
    }
}

pub fn parse_sigma(s: &str) -> Result<i8, String> {
    match s.trim() {
        "+1" | "1" | "+" => Ok(1),
        "-1" | "-" => Ok(-1),
        other => Err(format!("sigma must be +1 or -1, got `{other}`")),
    }
}

pub fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("binding `{s}` is not NAME=VALUE"))?;
    let k = k.trim();
    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("bad binding name `{k}`"));
    }
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("binding `{k}` has a non-numeric value `{}`", v.trim()))?;
    Ok((k.to_string(), v))
}

fn parse_cases(s: &str) -> Result<Vec<ClosureKind>, String> {
    if s.trim() == "all" {
        return Ok(Vec::new());
    }
    s.split(',').map(|c| c.trim().parse()).collect()
}

fn list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl RunConfig {
    /// Apply one `key = value` setting. Relative paths are taken against
    /// `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let value = value.trim();
        let path = |v: &str| base.join(v);
        match key.trim().replace('-', "_").as_str() {
            "equation" => self.equation = Some(path(value)),
            "case" => self.cases = parse_cases(value)?,
            "mode" => self.mode = value.parse()?,
            "sigma" => self.sigma = Some(parse_sigma(value)?),
            "order" => self.order = Some(value.parse().map_err(|_| format!("bad order `{value}`"))?),
            "unknowns" => self.unknowns = Some(list(value)),
            "grid" => self.grid = value.parse().map_err(|e: crate::verify::VerifyError| e.to_string())?,
            "bind" => {
                let (k, v) = parse_binding(value)?;
                self.bindings.insert(k, v);
            }
            "seed" => self.seed = value.parse().map_err(|_| format!("bad seed `{value}`"))?,
            "out" => self.out = path(value),
            "catalog" => self.catalog = Some(path(value)),
            "branches" => self.branches = Some(path(value)),
            "branch" => self.branch = Some(value.to_string()),
            "entry" => self.entry = Some(value.to_string()),
            "fd_step" => {
                let h: f64 = value.parse().map_err(|_| format!("bad fd-step `{value}`"))?;
                if !(h > 0.0) {
                    return Err(format!("fd-step must be positive, got {h}"));
                }
                self.method = DerivativeMethod::FiniteDifference(h);
            }
            "max_branches" => {
                self.max_branches = value.parse().map_err(|_| format!("bad max-branches `{value}`"))?
            }
            other => return Err(format!("unknown configuration key `{other}`")),
        }
        Ok(())
    }

    /// Read a flat config file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), i + 1))?;
            cfg.set(k, v, base)
                .map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?;
        }
        Ok(cfg)
    }

    pub fn branches_path(&self) -> PathBuf {
        self.branches.clone().unwrap_or_else(|| self.out.join("branches.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().to_path_buf();
        let f = dir.join("run.cfg");
        std::fs::write(
            &f,
            "# comment\nequation = kg.eq\ncase = constant, trig\nmode = strict\nsigma = +1\nbind = c=0.5\ngrid = 0:1:8,0:1:8\n",
        )
        .unwrap();
        let mut cfg = RunConfig::from_file(&f).unwrap();
        assert_eq!(cfg.equation, Some(dir.join("kg.eq")));
        assert_eq!(cfg.cases, vec![ClosureKind::Constant, ClosureKind::Trig]);
        assert_eq!(cfg.mode, CollectMode::Strict);
        assert_eq!(cfg.sigma, Some(1));
        assert_eq!(cfg.bindings["c"], 0.5);
        cfg.set("bind", "c=0.25", Path::new("")).unwrap();
        assert_eq!(cfg.bindings["c"], 0.25);
        assert!(cfg.set("colour", "red", Path::new("")).is_err());
        assert!(cfg.set("sigma", "2", Path::new("")).is_err());
    }
}
