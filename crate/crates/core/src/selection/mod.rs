//! Choosing which candidate points get measured.
//!
//! Three strategies share one output type, [`SelectionPlan`]:
//!
//! * [`select_random`]: uniform without replacement
//! * [`select_online_map`]: sequentially pick the candidate with the largest
//!   GP posterior variance given the points picked so far
//! * [`select_offline_kmeans`]: cluster the candidates and take the member
//!   nearest each centroid
//!
//! All ties are broken towards the lowest candidate index.

mod kmeans;
mod online;
mod random;

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kmeans::{kmeans_cluster, select_offline_kmeans, KMeansState, KMEANS_MAX_ITERS, KMEANS_TOL};
pub use online::{run_online_map, select_online_map, OnlineMapConfig, OnlineMapRun};
pub use random::select_random;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Random,
    OnlineMap,
    OfflineKmeans,
}

impl SelectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMethod::Random => "random",
            SelectionMethod::OnlineMap => "online_map",
            SelectionMethod::OfflineKmeans => "offline_kmeans",
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SelectionMethod::Random),
            "online_map" | "map" | "online" => Ok(SelectionMethod::OnlineMap),
            "offline_kmeans" | "kmeans" | "offline" => Ok(SelectionMethod::OfflineKmeans),
            other => Err(Error::InvalidParameter(format!("unknown selection method `{other}`"))),
        }
    }
}

/// When the online selector re-optimizes kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperRefit {
    /// Hyperparameters stay at the supplied values; no labels are used.
    Never,
    /// The first `after` points are drawn uniformly at random, the
    /// hyperparameters are fitted once on their labels, then frozen.
    Once { after: usize },
    /// Refit on all labels collected so far whenever `t` is a multiple of the period.
    Every(usize),
}

impl HyperRefit {
    /// Size of the random initial batch used by [`HyperRefit::Once`]: `max(5, ⌈M/10⌉)`.
    pub fn initial_batch(m: usize) -> HyperRefit {
        HyperRefit::Once {
            after: 5usize.max(m.div_ceil(10)).min(m),
        }
    }

    pub fn needs_labels(self) -> bool {
        !matches!(self, HyperRefit::Never)
    }
}

impl fmt::Display for HyperRefit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperRefit::Never => f.write_str("never"),
            HyperRefit::Once { after } => write!(f, "once:{after}"),
            HyperRefit::Every(p) => write!(f, "every:{p}"),
        }
    }
}

impl std::str::FromStr for HyperRefit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad refit spec `{s}`"));
        if s == "never" {
            return Ok(HyperRefit::Never);
        }
        let (kind, n) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        match kind {
            "once" => Ok(HyperRefit::Once { after: n }),
            "every" if n > 0 => Ok(HyperRefit::Every(n)),
            _ => Err(bad()),
        }
    }
}

/// Ordered training indices into the candidate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionPlan {
    pub method: SelectionMethod,
    pub ordered_indices: Vec<usize>,
    pub seed: u64,
    pub hyper_refit: HyperRefit,
    /// Kernel text in force at the end of selection (online method only).
    pub kernel: Option<String>,
}

impl SelectionPlan {
    pub fn len(&self) -> usize {
        self.ordered_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_indices.is_empty()
    }

    /// Checks distinctness, range and length.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.ordered_indices.len() != m {
            return Err(Error::Selection(format!(
                "plan has {} indices, expected {m}",
                self.ordered_indices.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &self.ordered_indices {
            if i >= n {
                return Err(Error::Selection(format!("index {i} out of range for {n} candidates")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Selection(format!("index {i} selected twice")));
            }
        }
        Ok(())
    }

    /// Boolean membership mask over `n` candidates.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.ordered_indices {
            mask[i] = true;
        }
        mask
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# method={}", self.method);
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# m={}", self.ordered_indices.len());
        let _ = writeln!(out, "# refit={}", self.hyper_refit);
        let _ = writeln!(out, "# kernel={}", self.kernel.as_deref().unwrap_or(""));
        out.push_str("rank,candidate_index\n");
        for (rank, i) in self.ordered_indices.iter().enumerate() {
            let _ = writeln!(out, "{rank},{i}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut method = None;
        let mut seed = None;
        let mut m = None;
        let mut refit = HyperRefit::Never;
        let mut kernel = None;
        let mut indices = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let perr = |msg: String| Error::Parse { line: lineno, msg };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((k, v)) = meta.trim().split_once('=') else {
                    continue;
                };
                let v = v.trim();
                match k.trim() {
                    "method" => method = Some(v.parse()?),
                    "seed" => seed = Some(v.parse().map_err(|_| perr(format!("bad seed `{v}`")))?),
                    "m" => m = Some(v.parse::<usize>().map_err(|_| perr(format!("bad m `{v}`")))?),
                    "refit" => refit = v.parse()?,
                    "kernel" if !v.is_empty() => kernel = Some(v.to_string()),
                    _ => {}
                }
                continue;
            }
            if !header_seen {
                if line != "rank,candidate_index" {
                    return Err(perr(format!("expected header `rank,candidate_index`, found `{line}`")));
                }
                header_seen = true;
                continue;
            }
            let (rank, idx) = line.split_once(',').ok_or_else(|| perr("expected two fields".into()))?;
            let rank: usize = rank.trim().parse().map_err(|_| perr(format!("bad rank `{rank}`")))?;
            if rank != indices.len() {
                return Err(perr(format!("rank {rank} out of order")));
            }
            indices.push(idx.trim().parse().map_err(|_| perr(format!("bad index `{idx}`")))?);
        }
        let method = method.ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing `# method=` header".into(),
        })?;
        if let Some(m) = m {
            if m != indices.len() {
                return Err(Error::Selection(format!(
                    "header says m={m} but {} rows present",
                    indices.len()
                )));
            }
        }
        Ok(Self {
            method,
            ordered_indices: indices,
            seed: seed.unwrap_or(0),
            hyper_refit: refit,
            kernel,
        })
    }
}

pub(crate) fn check_budget(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Selection("M must be at least 1".into()));
    }
    if m > n {
        return Err(Error::Selection(format!("M = {m} exceeds the {n} candidates")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_csv_round_trip() {
        let plan = SelectionPlan {
            method: SelectionMethod::OnlineMap,
            ordered_indices: vec![4, 0, 9, 2],
            seed: 77,
            hyper_refit: HyperRefit::Once { after: 2 },
            kernel: Some("const(2) * matern(l=0.5,nu=1.5) + white(0.1)".into()),
        };
        let text = plan.to_csv();
        assert!(text.starts_with("# method=online_map\n# seed=77\n# m=4\n"));
        assert_eq!(SelectionPlan::from_csv(&text).unwrap(), plan);
        plan.validate(10, 4).unwrap();
        assert!(plan.validate(5, 4).is_err());
        assert!(plan.validate(10, 3).is_err());
    }

    #[test]
    fn plan_csv_errors() {
        assert!(SelectionPlan::from_csv("rank,candidate_index\n0,1\n").is_err());
        assert!(SelectionPlan::from_csv("# method=random\nrank,idx\n").is_err());
        assert!(SelectionPlan::from_csv("# method=random\n# m=2\nrank,candidate_index\n0,1\n").is_err());
        assert!(SelectionPlan::from_csv("# method=random\nrank,candidate_index\n1,1\n").is_err());
    }

    #[test]
    fn refit_text() {
        for r in [HyperRefit::Never, HyperRefit::Once { after: 5 }, HyperRefit::Every(3)] {
            assert_eq!(r.to_string().parse::<HyperRefit>().unwrap(), r);
        }
        assert!("every:0".parse::<HyperRefit>().is_err());
        assert_eq!(HyperRefit::initial_batch(30), HyperRefit::Once { after: 5 });
        assert_eq!(HyperRefit::initial_batch(840), HyperRefit::Once { after: 84 });
        assert_eq!(HyperRefit::initial_batch(3), HyperRefit::Once { after: 3 });
    }
}
