//! Run configuration: TOML file keys and command-line flags share one
//! schema. Flags win over the file; `resolve` fills every default in so the
//! manifest never relies on an implicit value.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use jamlab::Solid;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Pack,
    Measure,
    Sweep,
    Covariance,
    Stabilize,
    Variability,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Pack => "pack",
            Subcommand::Measure => "measure",
            Subcommand::Sweep => "sweep",
            Subcommand::Covariance => "covariance",
            Subcommand::Stabilize => "stabilize",
            Subcommand::Variability => "variability",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Finite,
    Saturate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Perturbation,
    Causal,
}

/// Every experiment key. All optional here; which ones apply depends on
/// the subcommand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Read keys from this TOML file first; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Dimension; must agree with the solid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,

    /// `ball d=<int> r=<float>`, `box d=<int> h=<float,...>` or
    /// `poly2 v=<x,y;x,y;...>`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solid: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,

    /// Ascending intensity grid (sweep), comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,

    /// Input duration for `--mode finite`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,

    /// Relative vacancy tolerance; 0 (exact) only in one dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,

    /// Data file; the manifest goes next to it as `<out>.manifest.json`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Box indicator in rescaled coordinates, `lo:hi` per axis joined by
    /// commas, e.g. `0:0.5,0:1`. Repeat for several functions.
    #[arg(long = "box")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<String>>,

    /// Integer cube index `i`, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<i64>>,

    /// Radius grid `a:b:step`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lgrid: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,

    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,

    /// Local saturation threshold for the causal method: `auto` or a number.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tstar: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,

    /// `auto` or a number in the feasible interval.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,

    #[arg(long, alias = "Lmax")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lmax: Option<f64>,

    /// Boundary designs: empty, lattice-ring, greedy-ring.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub designs: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

pub fn read_file(path: &Path) -> Result<Params, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

/// File keys overlaid with flags.
pub fn merge(file: &Params, flags: &Params) -> Params {
    let mut p = file.clone();
    overlay!(p, flags; dim, solid, lambda, lambdas, mode, tau, eps, seed, reps, out, boxes, center,
        lgrid, resamples, method, tstar, horizon, delta, lmax, designs);
    p.config = None;
    p
}

fn need<T: Clone>(v: &Option<T>, key: &str, what: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| bad(format!("missing required key `{key}` ({what})")))
}

fn forbid<T>(v: &Option<T>, key: &str, cmd: Subcommand) -> Result<(), ConfigError> {
    match v {
        Some(_) => Err(bad(format!("key `{key}` does not apply to `{}`", cmd.name()))),
        None => Ok(()),
    }
}

pub fn parse_solid(spec: &str) -> Result<Solid, ConfigError> {
    spec.parse::<Solid>().map_err(|e| {
        bad(format!(
            "key `solid`: {e}; accepted: `ball d=<int> r=<float>`, `box d=<int> h=<float,...>`, `poly2 v=<x,y;...>`"
        ))
    })
}

/// `a:b:step` to the inclusive grid `a, a + step, ..`.
pub fn parse_lgrid(s: &str) -> Result<Vec<f64>, ConfigError> {
    let err = || bad(format!("key `lgrid`: `{s}` is not `a:b:step` with 0 <= a <= b and step > 0"));
    let parts: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err())?;
    let [a, b, step] = parts[..] else { return Err(err()) };
    if !(a >= 0.0 && b >= a && step > 0.0) {
        return Err(err());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

/// `lo:hi,lo:hi,...` to a box indicator of dimension `d`.
pub fn parse_box(s: &str, d: usize) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    let err = || bad(format!("key `box`: `{s}` is not `lo:hi` per axis for {d} axes"));
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in s.split(',') {
        let (a, b) = axis.split_once(':').ok_or_else(err)?;
        lo.push(a.trim().parse::<f64>().map_err(|_| err())?);
        hi.push(b.trim().parse::<f64>().map_err(|_| err())?);
    }
    if lo.len() != d || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return Err(err());
    }
    Ok((lo, hi))
}

fn auto_or_number(v: &str, key: &str) -> Result<(), ConfigError> {
    if v == "auto" || v.parse::<f64>().is_ok_and(|x| x.is_finite() && x > 0.0) {
        Ok(())
    } else {
        Err(bad(format!("key `{key}`: `{v}` is neither `auto` nor a positive number")))
    }
}

fn positive(v: f64, key: &str) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("key `{key}` must be a positive number, got {v}")))
    }
}

/// Validates `p` for `cmd` and returns it with every default spelled out.
/// Resolving a resolved config returns it unchanged.
pub fn resolve(cmd: Subcommand, p: &Params) -> Result<Params, ConfigError> {
    use Subcommand::*;
    let mut r = p.clone();
    r.config = None;

    let solid = parse_solid(&need(&p.solid, "solid", "solid spec")?)?;
    let d = solid.dim();
    if let Some(dim) = p.dim {
        if dim != d {
            return Err(bad(format!("key `dim` is {dim} but the solid has dimension {d}")));
        }
    }
    r.dim = Some(d);
    r.solid = Some(solid.spec());
    r.seed = Some(need(&p.seed, "seed", "master seed, an unsigned integer")?);
    let out = need(&p.out, "out", "output path")?;
    r.out = Some(out);

    let default_reps = match cmd {
        Pack | Measure => 1,
        Sweep | Covariance => 100,
        Stabilize => 50,
        Variability => 10,
    };
    let reps = p.reps.unwrap_or(default_reps);
    let min_reps = match cmd {
        Sweep => 2,
        Covariance => 30,
        _ => 1,
    };
    if reps < min_reps {
        return Err(bad(format!("key `reps` must be at least {min_reps} for `{}`", cmd.name())));
    }
    r.reps = Some(reps);

    // the engine's epsilon, shared by every subcommand that saturates
    let default_eps = if d == 1 { 0.0 } else { jamlab::engine::DEFAULT_EPSILON };
    let eps = p.eps.unwrap_or(default_eps);
    if !(eps >= 0.0 && eps < 1.0) {
        return Err(bad(format!("key `eps` must lie in [0, 1), got {eps}")));
    }
    if eps == 0.0 && d >= 2 {
        return Err(bad(format!(
            "key `eps`: 0 (exact saturation) is only supported in dimension 1, this solid has dimension {d}"
        )));
    }

    if cmd != Sweep {
        forbid(&p.lambdas, "lambdas", cmd)?;
    }
    if cmd != Pack {
        forbid(&p.mode, "mode", cmd)?;
        forbid(&p.tau, "tau", cmd)?;
    }
    if !matches!(cmd, Measure | Covariance) {
        forbid(&p.boxes, "box", cmd)?;
    }
    if cmd != Stabilize {
        for (v, k) in [(p.lgrid.is_some(), "lgrid"), (p.resamples.is_some(), "resamples"), (p.tstar.is_some(), "tstar"),
            (p.horizon.is_some(), "horizon"), (p.center.is_some(), "center"), (p.method.is_some(), "method")]
        {
            if v {
                return Err(bad(format!("key `{k}` does not apply to `{}`", cmd.name())));
            }
        }
    }
    if cmd != Variability {
        forbid(&p.delta, "delta", cmd)?;
        forbid(&p.lmax, "lmax", cmd)?;
        forbid(&p.designs, "designs", cmd)?;
    }

    match cmd {
        Sweep => {
            forbid(&p.lambda, "lambda", cmd)?;
            let grid = need(&p.lambdas, "lambdas", "ascending comma-separated intensities")?;
            if grid.is_empty() || grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("key `lambdas` must be a nonempty strictly ascending list of positive numbers"));
            }
        }
        Variability => {
            forbid(&p.lambda, "lambda", cmd)?;
        }
        _ => positive(need(&p.lambda, "lambda", "intensity, a positive number")?, "lambda")?,
    }

    match cmd {
        Pack => {
            let mode = p.mode.unwrap_or(Mode::Saturate);
            r.mode = Some(mode);
            match mode {
                Mode::Finite => {
                    positive(need(&p.tau, "tau", "input duration for finite mode")?, "tau")?;
                    if p.eps.is_some() {
                        return Err(bad("key `eps` does not apply to `--mode finite`"));
                    }
                }
                Mode::Saturate => {
                    forbid(&p.tau, "tau", cmd)?;
                    r.eps = Some(eps);
                }
            }
        }
        Measure | Covariance => {
            r.eps = Some(eps);
            let boxes = p.boxes.clone().unwrap_or_else(|| vec![vec!["0:1"; d].join(",")]);
            if boxes.is_empty() {
                return Err(bad("key `box` needs at least one box"));
            }
            for b in &boxes {
                parse_box(b, d)?;
            }
            r.boxes = Some(boxes);
        }
        Sweep => r.eps = Some(eps),
        Stabilize => {
            r.eps = Some(eps);
            let method = p.method.unwrap_or(Method::Perturbation);
            r.method = Some(method);
            let center = p.center.clone().unwrap_or_else(|| vec![0; d]);
            if center.len() != d {
                return Err(bad(format!("key `center` needs {d} integers")));
            }
            r.center = Some(center);
            let horizon = p.horizon.unwrap_or(match method {
                Method::Perturbation => 1e5,
                Method::Causal => 20.0,
            });
            positive(horizon, "horizon")?;
            r.horizon = Some(horizon);
            match method {
                Method::Perturbation => {
                    let lgrid = p.lgrid.clone().unwrap_or_else(|| "0:20:1".into());
                    parse_lgrid(&lgrid)?;
                    r.lgrid = Some(lgrid);
                    let k = p.resamples.unwrap_or(20);
                    if k == 0 {
                        return Err(bad("key `resamples` must be at least 1"));
                    }
                    r.resamples = Some(k);
                    forbid(&p.tstar, "tstar", cmd)?;
                }
                Method::Causal => {
                    let lgrid = p.lgrid.clone().unwrap_or_else(|| "0:20:1".into());
                    parse_lgrid(&lgrid)?;
                    r.lgrid = Some(lgrid);
                    forbid(&p.resamples, "resamples", cmd)?;
                    let tstar = p.tstar.clone().unwrap_or_else(|| "auto".into());
                    auto_or_number(&tstar, "tstar")?;
                    r.tstar = Some(tstar);
                }
            }
        }
        Variability => {
            let delta = p.delta.clone().unwrap_or_else(|| "auto".into());
            auto_or_number(&delta, "delta")?;
            r.delta = Some(delta);
            let lmax = p.lmax.unwrap_or(2000.0);
            positive(lmax, "lmax")?;
            r.lmax = Some(lmax);
            let designs = p.designs.clone().unwrap_or_else(|| {
                vec!["empty".into(), "lattice-ring".into(), "greedy-ring".into()]
            });
            for s in &designs {
                s.parse::<jamlab::variability::EtaPreset>().map_err(|e| bad(format!("key `designs`: {e}")))?;
            }
            r.designs = Some(designs);
            r.eps = Some(eps);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Params {
        Params {
            dim: Some(1),
            solid: Some("ball d=1 r=0.5".into()),
            lambda: Some(100.0),
            seed: Some(7),
            out: Some("o.jsonl".into()),
            ..Default::default()
        }
    }

    #[test]
    fn minimal_pack_gets_explicit_defaults() {
        let r = resolve(Subcommand::Pack, &minimal()).unwrap();
        assert_eq!(r.mode, Some(Mode::Saturate));
        assert_eq!(r.eps, Some(0.0));
        assert_eq!(r.reps, Some(1));
        assert_eq!(r.solid.as_deref(), Some("ball d=1 r=0.5"));
    }

    #[test]
    fn resolving_twice_changes_nothing() {
        for cmd in [Subcommand::Pack, Subcommand::Measure, Subcommand::Covariance, Subcommand::Stabilize] {
            let mut p = minimal();
            if cmd == Subcommand::Covariance {
                p.reps = Some(30);
            }
            let r = resolve(cmd, &p).unwrap();
            let text = toml::to_string(&r).unwrap();
            let back: Params = toml::from_str(&text).unwrap();
            assert_eq!(resolve(cmd, &back).unwrap(), r);
        }
    }

    #[test]
    fn exact_saturation_needs_one_dimension() {
        let p = Params { dim: Some(2), solid: Some("ball d=2 r=0.1".into()), eps: Some(0.0), ..minimal() };
        let e = resolve(Subcommand::Pack, &p).unwrap_err();
        assert!(e.0.contains("`eps`"), "{e}");
    }

    #[test]
    fn unknown_file_key_is_named() {
        let e = toml::from_str::<Params>("solid = \"ball d=1 r=0.5\"\nlamda = 3.0\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("lamda") && msg.contains("lambda"), "{msg}");
    }

    #[test]
    fn flags_override_file() {
        let file = Params { lambda: Some(10.0), seed: Some(1), ..Default::default() };
        let flags = Params { lambda: Some(20.0), ..Default::default() };
        let m = merge(&file, &flags);
        assert_eq!(m.lambda, Some(20.0));
        assert_eq!(m.seed, Some(1));
    }

    #[test]
    fn lgrid_is_inclusive() {
        assert_eq!(parse_lgrid("0:2:0.5").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(parse_lgrid("3:1:1").is_err());
    }
}
