use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Monte Carlo driver a grid feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Z2Phase,
    SbmPhase,
    SbmMiscl,
    SbmLinearization,
    NmcRatios,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Z2Phase,
        ExperimentKind::SbmPhase,
        ExperimentKind::SbmMiscl,
        ExperimentKind::SbmLinearization,
        ExperimentKind::NmcRatios,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Z2Phase => "z2-phase",
            ExperimentKind::SbmPhase => "sbm-phase",
            ExperimentKind::SbmMiscl => "sbm-miscl",
            ExperimentKind::SbmLinearization => "sbm-linearization",
            ExperimentKind::NmcRatios => "nmc-ratios",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Z2Phase => &["n", "sigma"],
            ExperimentKind::SbmPhase
            | ExperimentKind::SbmMiscl
            | ExperimentKind::SbmLinearization => &["n", "a", "b"],
            ExperimentKind::NmcRatios => &["n", "rank", "noise", "p_factor"],
        }
    }
}

/// One grid axis. Values are `start + k·step` or `start·ratio^k` for
/// `k = 0..count`, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Axis {
    Values {
        values: Vec<f64>,
    },
    Arithmetic {
        start: f64,
        step: f64,
        count: usize,
    },
    Geometric {
        start: f64,
        ratio: f64,
        count: usize,
    },
}

/// Arithmetic grids are snapped to 1e-9 so that `0.3·3` prints as `0.9`.
fn snap(x: f64) -> f64 {
    let y = (x * 1e9).round() / 1e9;
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

impl Axis {
    pub fn single(v: f64) -> Self {
        Axis::Values { values: vec![v] }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values { values } => values.clone(),
            Axis::Arithmetic { start, step, count } => {
                (0..*count).map(|k| snap(start + k as f64 * step)).collect()
            }
            Axis::Geometric {
                start,
                ratio,
                count,
            } => (0..*count).map(|k| start * ratio.powi(k as i32)).collect(),
        }
    }

    /// Values rounded to the nearest integer, as used for sizes.
    pub fn sizes(&self) -> Result<Vec<usize>> {
        self.values()
            .into_iter()
            .map(|v| {
                let r = v.round();
                if r >= 1.0 && r.is_finite() {
                    Ok(r as usize)
                } else {
                    Err(Error::Config(format!(
                        "size {v} does not round to a positive integer"
                    )))
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::Config(format!("axis `{name}` is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!(
                "axis `{name}` has non-finite values"
            )));
        }
        Ok(())
    }
}

/// A Monte Carlo grid: axes, trials per cell and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub n: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Axis>,
    /// Completion rank.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Completion noise level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Completion sampling rate is `p_factor · log n / n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_factor: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 20_180_911;

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let g: GridSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.n.validate("n")?;
        self.n.sizes()?;
        let present = |k: &str| match k {
            "n" => true,
            "sigma" => self.sigma.is_some(),
            "a" => self.a.is_some(),
            "b" => self.b.is_some(),
            "rank" => self.rank.is_some(),
            "noise" => self.noise.is_some(),
            "p_factor" => self.p_factor.is_some(),
            _ => false,
        };
        for k in self.kind.required() {
            if !present(k) {
                return Err(Error::Config(format!(
                    "`{k}` is required for {} grids",
                    self.kind.name()
                )));
            }
        }
        for (name, axis) in [("sigma", &self.sigma), ("a", &self.a), ("b", &self.b)] {
            if let Some(ax) = axis {
                if !self.kind.required().contains(&name) {
                    return Err(Error::Config(format!(
                        "`{name}` is not used by {} grids",
                        self.kind.name()
                    )));
                }
                ax.validate(name)?;
            }
        }
        if self.kind == ExperimentKind::SbmLinearization
            && [&self.n, self.a.as_ref().unwrap(), self.b.as_ref().unwrap()]
                .iter()
                .any(|ax| ax.values().len() != 1)
        {
            return Err(Error::Config(
                "sbm-linearization takes a single (n, a, b) point".into(),
            ));
        }
        if self.kind == ExperimentKind::NmcRatios {
            if self.rank == Some(0) {
                return Err(Error::Config("rank must be at least 1".into()));
            }
            if !(self.noise.unwrap() >= 0.0) {
                return Err(Error::Config("noise must be nonnegative".into()));
            }
            if !(self.p_factor.unwrap() > 0.0) {
                return Err(Error::Config("p_factor must be positive".into()));
            }
        }
        Ok(())
    }

    fn base(kind: ExperimentKind, trials: usize, n: Axis) -> Self {
        GridSpec {
            kind,
            trials,
            master_seed: DEFAULT_SEED,
            output: None,
            n,
            sigma: None,
            a: None,
            b: None,
            rank: None,
            noise: None,
            p_factor: None,
        }
    }

    /// Full-size grids.
    pub fn full(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Z2Phase => GridSpec {
                sigma: Some(Axis::Geometric {
                    start: 2f64.powf(-3.2),
                    ratio: 2f64.powf(0.1),
                    count: 83,
                }),
                ..Self::base(
                    kind,
                    100,
                    Axis::Geometric {
                        start: 2.0,
                        ratio: 500f64.powf(1.0 / 50.0),
                        count: 51,
                    },
                )
            },
            ExperimentKind::SbmPhase => GridSpec {
                a: Some(Axis::Arithmetic {
                    start: 0.0,
                    step: 0.3,
                    count: 101,
                }),
                b: Some(Axis::Arithmetic {
                    start: 0.0,
                    step: 0.1,
                    count: 101,
                }),
                ..Self::base(kind, 100, Axis::single(300.0))
            },
            ExperimentKind::SbmMiscl => GridSpec {
                a: Some(Axis::Arithmetic {
                    start: 2.0,
                    step: 0.2,
                    count: 31,
                }),
                b: Some(Axis::single(2.0)),
                ..Self::base(
                    kind,
                    100,
                    Axis::Values {
                        values: vec![100.0, 500.0, 5000.0],
                    },
                )
            },
            ExperimentKind::SbmLinearization => GridSpec {
                a: Some(Axis::single(4.5)),
                b: Some(Axis::single(0.25)),
                ..Self::base(kind, 100, Axis::single(5000.0))
            },
            ExperimentKind::NmcRatios => GridSpec {
                rank: Some(5),
                noise: Some(1.0),
                p_factor: Some(10.0),
                ..Self::base(
                    kind,
                    100,
                    Axis::Arithmetic {
                        start: 500.0,
                        step: 500.0,
                        count: 10,
                    },
                )
            },
        }
    }

    /// Coarser grids with fewer trials that finish in minutes.
    pub fn desk(kind: ExperimentKind) -> Self {
        let full = Self::full(kind);
        match kind {
            ExperimentKind::Z2Phase => GridSpec {
                trials: 20,
                n: Axis::Geometric {
                    start: 2.0,
                    ratio: 500f64.powf(0.1),
                    count: 11,
                },
                sigma: Some(Axis::Geometric {
                    start: 2f64.powf(-3.2),
                    ratio: 2f64.powf(0.4),
                    count: 21,
                }),
                ..full
            },
            ExperimentKind::SbmPhase => GridSpec {
                trials: 20,
                a: Some(Axis::Arithmetic {
                    start: 0.0,
                    step: 1.5,
                    count: 21,
                }),
                b: Some(Axis::Arithmetic {
                    start: 0.0,
                    step: 0.5,
                    count: 21,
                }),
                ..full
            },
            ExperimentKind::SbmMiscl => GridSpec {
                trials: 20,
                n: Axis::Values {
                    values: vec![100.0, 500.0, 2000.0],
                },
                a: Some(Axis::Arithmetic {
                    start: 2.0,
                    step: 0.5,
                    count: 13,
                }),
                ..full
            },
            ExperimentKind::SbmLinearization => GridSpec {
                trials: 20,
                n: Axis::single(1000.0),
                ..full
            },
            ExperimentKind::NmcRatios => GridSpec {
                trials: 20,
                n: Axis::Arithmetic {
                    start: 500.0,
                    step: 500.0,
                    count: 5,
                },
                ..full
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for kind in ExperimentKind::ALL {
            for g in [GridSpec::full(kind), GridSpec::desk(kind)] {
                g.validate().unwrap();
                assert_eq!(GridSpec::from_toml(&g.to_toml()).unwrap(), g);
            }
        }
    }

    #[test]
    fn full_axes() {
        let z = GridSpec::full(ExperimentKind::Z2Phase);
        let n = z.n.sizes().unwrap();
        assert_eq!((n[0], *n.last().unwrap(), n.len()), (2, 1000, 51));
        let s = z.sigma.unwrap().values();
        assert_eq!(s.len(), 83);
        assert!((s[0] - 2f64.powf(-3.2)).abs() < 1e-15);
        assert!((s[82] - 32.0).abs() < 1e-12);
        let a = GridSpec::full(ExperimentKind::SbmPhase)
            .a
            .unwrap()
            .values();
        assert_eq!((a[3], a[100]), (0.9, 30.0));
    }

    #[test]
    fn rejects_unknown_and_missing() {
        let ok = "kind = \"z2-phase\"\ntrials = 3\nmaster_seed = 1\nn = { values = [10] }\nsigma = { start = 0.5, ratio = 2.0, count = 3 }\n";
        GridSpec::from_toml(ok).unwrap();
        assert!(GridSpec::from_toml(&format!("{ok}bogus = 1\n")).is_err());
        assert!(GridSpec::from_toml(&ok.replace("trials = 3", "trials = 0")).is_err());
        let missing = ok.replace("sigma = { start = 0.5, ratio = 2.0, count = 3 }\n", "");
        assert!(GridSpec::from_toml(&missing).is_err());
        assert!(GridSpec::from_toml(&ok.replace("count = 3", "count = 3, extra = 1")).is_err());
    }
}
