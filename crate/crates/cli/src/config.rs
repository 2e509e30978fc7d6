//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Convexity,
    Doubling,
    Sandwich,
    Growth,
    Chain,
    Df,
    Nodal,
    Lemma54,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Convexity,
        Suite::Doubling,
        Suite::Sandwich,
        Suite::Growth,
        Suite::Chain,
        Suite::Df,
        Suite::Nodal,
        Suite::Lemma54,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Convexity => "convexity",
            Suite::Doubling => "doubling",
            Suite::Sandwich => "sandwich",
            Suite::Growth => "growth",
            Suite::Chain => "chain",
            Suite::Df => "df",
            Suite::Nodal => "nodal",
            Suite::Lemma54 => "lemma54",
        }
    }

    /// Keys a config for this suite may set besides `suite`, `seed`,
    /// `tolerance` and `out`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Suite::Convexity => &["n", "curvatures", "degrees", "radii", "samples"],
            Suite::Doubling => &["n", "curvatures", "degrees", "samples"],
            Suite::Sandwich => &["degrees", "radii", "factor", "alpha", "eps"],
            Suite::Growth => &["degrees", "factor"],
            Suite::Chain => &["degrees", "radii"],
            Suite::Df => &["degrees", "radii", "factor"],
            Suite::Nodal => &["degrees", "samples"],
            Suite::Lemma54 => &["samples"],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown suite `{s}`")))
    }
}

/// Radius grid: explicit values or `log:min:max:count` / `lin:min:max:count`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusGrid {
    List(Vec<f64>),
    Log { min: f64, max: f64, count: usize },
    Lin { min: f64, max: f64, count: usize },
}

impl RadiusGrid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            RadiusGrid::List(ref v) => v.clone(),
            RadiusGrid::Log { min, max, count } => curvelab_core::harmonic_spectral::log_grid(min, max, count),
            RadiusGrid::Lin { min, max, count } => {
                if count == 1 {
                    return vec![min];
                }
                (0..count)
                    .map(|i| if i + 1 == count { max } else { min + (max - min) * i as f64 / (count - 1) as f64 })
                    .collect()
            }
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("bad radius grid `{s}`"));
        if let Some((kind, rest)) = s.split_once(':') {
            let parts: Vec<&str> = rest.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let min: f64 = parts[0].parse().map_err(|_| bad())?;
            let max: f64 = parts[1].parse().map_err(|_| bad())?;
            let count: usize = parts[2].parse().map_err(|_| bad())?;
            if !(min > 0.0 && max >= min && max.is_finite()) || count == 0 || (count > 1 && max == min) {
                return Err(bad());
            }
            match kind.trim() {
                "log" => Ok(RadiusGrid::Log { min, max, count }),
                "lin" => Ok(RadiusGrid::Lin { min, max, count }),
                _ => Err(bad()),
            }
        } else {
            let v = parse_list::<f64>("radii", s)?;
            if v.windows(2).any(|w| w[1] <= w[0]) || v.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                return Err(CliError::Config("radii must be positive and strictly increasing".into()));
            }
            Ok(RadiusGrid::List(v))
        }
    }
}

/// Parsed configuration. Unset optional keys take suite defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub seed: u64,
    pub dims: Option<Vec<usize>>,
    pub curvatures: Option<Vec<f64>>,
    pub degrees: Option<Vec<usize>>,
    pub radii: Option<RadiusGrid>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub factor: Option<f64>,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    /// Raw entries in key order, echoed into reports.
    pub raw: BTreeMap<String, String>,
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| CliError::Config(format!("bad value `{}` for `{key}`", x.trim()))))
        .collect::<Result<Vec<T>, _>>()?;
    if v.is_empty() {
        return Err(CliError::Config(format!("`{key}` is empty")));
    }
    Ok(v)
}

/// `a..b` (inclusive) or a comma list.
fn parse_degrees(s: &str) -> Result<Vec<usize>, CliError> {
    if let Some((a, b)) = s.split_once("..") {
        let bad = || CliError::Config(format!("bad degree range `{s}`"));
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        parse_list("degrees", s)
    }
}

fn positive(key: &str, s: &str) -> Result<f64, CliError> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(CliError::Config(format!("`{key}` must be a positive number, got `{s}`"))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if v.is_empty() {
                return Err(CliError::Config(format!("line {}: `{k}` has no value", i + 1)));
            }
            if raw.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("`{k}` is set twice")));
            }
        }
        let suite: Suite = raw.get("suite").ok_or_else(|| CliError::Config("`suite` is required".into()))?.parse()?;
        let seed = raw
            .get("seed")
            .ok_or_else(|| CliError::Config("`seed` is required".into()))?
            .parse::<u64>()
            .map_err(|_| CliError::Config("`seed` must be a nonnegative integer".into()))?;
        for k in raw.keys() {
            let common = ["suite", "seed", "tolerance", "out"].contains(&k.as_str());
            if !common && !suite.keys().contains(&k.as_str()) {
                return Err(CliError::Config(format!("key `{k}` is not used by suite `{suite}`")));
            }
        }
        let get = |k: &str| raw.get(k).map(String::as_str);
        let dims = get("n").map(|s| parse_list::<usize>("n", s)).transpose()?;
        if let Some(d) = &dims {
            if d.iter().any(|&n| !(2..=4).contains(&n)) {
                return Err(CliError::Config("`n` must lie in 2..=4".into()));
            }
        }
        let curvatures = get("curvatures").map(|s| parse_list::<f64>("curvatures", s)).transpose()?;
        if curvatures.iter().flatten().any(|k| !k.is_finite()) {
            return Err(CliError::Config("curvatures must be finite".into()));
        }
        let samples = get("samples")
            .map(|s| match s.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(CliError::Config(format!("`samples` must be a positive integer, got `{s}`"))),
            })
            .transpose()?;
        let alpha = get("alpha").map(|s| positive("alpha", s)).transpose()?;
        if alpha.is_some_and(|a| a >= 1.0) {
            return Err(CliError::Config("`alpha` must lie in (0, 1)".into()));
        }
        Ok(Self {
            suite,
            seed,
            dims,
            curvatures,
            degrees: get("degrees").map(parse_degrees).transpose()?,
            radii: get("radii").map(RadiusGrid::parse).transpose()?,
            samples,
            tolerance: get("tolerance").map(|s| positive("tolerance", s)).transpose()?,
            factor: get("factor").map(|s| positive("factor", s)).transpose()?,
            alpha,
            eps: get("eps").map(|s| positive("eps", s)).transpose()?,
            out: get("out").map(PathBuf::from),
            raw,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_ranges_and_grids() {
        let c = ExperimentConfig::parse(
            "# flat\nsuite = convexity\nseed = 7\nn = 2, 3\ncurvatures = 0,-1\ndegrees = 1..4\nradii = log:0.1:1:5\n",
        )
        .unwrap();
        assert_eq!(c.suite, Suite::Convexity);
        assert_eq!(c.dims, Some(vec![2, 3]));
        assert_eq!(c.curvatures, Some(vec![0.0, -1.0]));
        assert_eq!(c.degrees, Some(vec![1, 2, 3, 4]));
        let r = c.radii.unwrap().values();
        assert_eq!(r.len(), 5);
        assert_eq!((r[0], r[4]), (0.1, 1.0));
        let lin = RadiusGrid::parse("lin:0.1:0.5:5").unwrap().values();
        assert!((lin[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "suite = convexity",
            "seed = 1",
            "suite = nope\nseed = 1",
            "suite = convexity\nseed = 1\ntolerance = -1",
            "suite = convexity\nseed = 1\ntolerance = 0",
            "suite = convexity\nseed = x",
            "suite = growth\nseed = 1\nradii = 0.1",
            "suite = convexity\nseed = 1\nseed = 2",
            "suite = convexity\nseed = 1\nradii = 0.2,0.1",
            "suite = convexity\nseed = 1\nn = 7",
            "suite = convexity\nseed = 1\nbogus",
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
