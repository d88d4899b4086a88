use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::derive_rng;
use crate::profile::{DayProfile, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

pub const SPLIT_RATIOS: (f64, f64) = (0.8, 0.1);

/// Flattened hourly signals of the whole archive, prelude first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    pub t_set: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub t_indoor: Vec<f64>,
    pub t_out: Vec<f64>,
    pub t_adj: Vec<f64>,
    pub t_evap: Vec<f64>,
    pub q_internal: Vec<f64>,
}

impl Timeline {
    pub fn from_days<'a>(days: impl IntoIterator<Item = &'a DayProfile>) -> Self {
        let mut tl = Timeline::default();
        for d in days {
            tl.push_day(d);
        }
        tl
    }

    pub fn push_day(&mut self, d: &DayProfile) {
        for h in 0..HOURS {
            self.t_set.push(d.t_set[h]);
            self.p.push(d.p[h]);
            self.q.push(d.q[h]);
            self.t_indoor.push(d.t_indoor[h]);
            self.t_out.push(d.env[h].t_out);
            self.t_adj.push(d.env[h].t_adj);
            self.t_evap.push(d.env[h].t_evap);
            self.q_internal.push(d.env[h].q_internal);
        }
    }

    pub fn len(&self) -> usize {
        self.t_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_set.is_empty()
    }
}

/// Growing archive of simulated days with a shuffled train/val/test split per
/// hourly row. A prelude day supplies lag history and is not a row itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DataStore {
    prelude: DayProfile,
    episodes: Vec<DayProfile>,
    splits: Vec<Split>,
    timeline: Timeline,
    split_seed: u64,
}

impl DataStore {
    pub fn new(prelude: DayProfile, episodes: Vec<DayProfile>, split_seed: u64) -> Self {
        let mut timeline = Timeline::default();
        timeline.push_day(&prelude);
        for d in &episodes {
            timeline.push_day(d);
        }
        let mut store = Self {
            prelude,
            episodes,
            splits: Vec::new(),
            timeline,
            split_seed,
        };
        store.reshuffle(split_seed);
        store
    }

    pub fn prelude(&self) -> &DayProfile {
        &self.prelude
    }

    pub fn episodes(&self) -> &[DayProfile] {
        &self.episodes
    }

    pub fn n_rows(&self) -> usize {
        self.episodes.len() * HOURS
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
    }

    /// Signals of prelude and episodes back to back. Row `r` sits at index
    /// `HOURS + r`.
    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn last_day(&self) -> &DayProfile {
        self.episodes.last().unwrap_or(&self.prelude)
    }

    /// Appends a day. Its rows join the test split until the next reshuffle.
    pub fn push(&mut self, day: DayProfile) {
        self.timeline.push_day(&day);
        self.episodes.push(day);
        self.splits.extend(std::iter::repeat(Split::Test).take(HOURS));
    }

    /// Reassigns every row to a split with a fresh permutation.
    pub fn reshuffle(&mut self, seed: u64) {
        self.split_seed = seed;
        let n = self.n_rows();
        let n_train = (SPLIT_RATIOS.0 * n as f64).round() as usize;
        let n_val = ((SPLIT_RATIOS.1 * n as f64).round() as usize).min(n - n_train);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut derive_rng(seed, n as u64, 0x5711));
        self.splits = vec![Split::Test; n];
        for (rank, &row) in order.iter().enumerate() {
            self.splits[row] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }

    pub fn split_of(&self, row: usize) -> Split {
        self.splits[row]
    }

    pub fn rows(&self, split: Split) -> Vec<usize> {
        (0..self.n_rows()).filter(|&r| self.splits[r] == split).collect()
    }
}
