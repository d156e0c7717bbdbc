//! Risk-set sweep over distinct event times.
//!
//! The at-risk mass at `t` is the weight of pieces with `time >= t` minus the
//! weight of pieces with `entry >= t`. Scanning times in decreasing order
//! lets both sums grow monotonically, and several independently sorted
//! parts can be merged on the fly without re-sorting the union.

use super::SurvSample;

#[derive(Debug, Clone, Default)]
pub(crate) struct SortedSamples {
    /// Sorted by exit time ascending.
    exits: Vec<SurvSample>,
    /// Delayed entries only, sorted by entry ascending: (entry, group, weight).
    entries: Vec<(f64, usize, f64)>,
}

impl SortedSamples {
    pub(crate) fn new(mut samples: Vec<SurvSample>) -> Self {
        samples.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut entries: Vec<_> = samples
            .iter()
            .filter(|s| s.entry > 0.0)
            .map(|s| (s.entry, s.group, s.weight))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        SortedSamples {
            exits: samples,
            entries,
        }
    }
}

/// Aggregates at one distinct event time.
pub(crate) struct EventRow<'a> {
    pub time: f64,
    /// Unweighted counts, used for the hypergeometric tie correction.
    pub n_raw: usize,
    pub d_raw: usize,
    pub at_risk: &'a [f64],
    pub events: &'a [f64],
}

impl EventRow<'_> {
    pub fn total_at_risk(&self) -> f64 {
        self.at_risk.iter().sum()
    }

    pub fn total_events(&self) -> f64 {
        self.events.iter().sum()
    }
}

/// Calls `f` for every distinct event time, in decreasing time order.
pub(crate) fn for_each_event_time(
    parts: &[&SortedSamples],
    n_groups: usize,
    mut f: impl FnMut(&EventRow<'_>),
) {
    let mut exit_ptr: Vec<usize> = parts.iter().map(|p| p.exits.len()).collect();
    let mut entry_ptr: Vec<usize> = parts.iter().map(|p| p.entries.len()).collect();
    let mut added = vec![0.0; n_groups];
    let mut removed = vec![0.0; n_groups];
    let mut n_added = 0usize;
    let mut n_removed = 0usize;
    let mut at_risk = vec![0.0; n_groups];
    let mut events = vec![0.0; n_groups];

    loop {
        let mut t = f64::NEG_INFINITY;
        for (p, &i) in parts.iter().zip(&exit_ptr) {
            if i > 0 {
                t = t.max(p.exits[i - 1].time);
            }
        }
        if t == f64::NEG_INFINITY {
            break;
        }

        events.iter_mut().for_each(|e| *e = 0.0);
        let mut d_raw = 0usize;
        for (p, i) in parts.iter().zip(exit_ptr.iter_mut()) {
            while *i > 0 && p.exits[*i - 1].time == t {
                let s = &p.exits[*i - 1];
                added[s.group] += s.weight;
                n_added += 1;
                if s.event {
                    events[s.group] += s.weight;
                    d_raw += 1;
                }
                *i -= 1;
            }
        }
        for (p, j) in parts.iter().zip(entry_ptr.iter_mut()) {
            while *j > 0 && p.entries[*j - 1].0 >= t {
                let (_, g, w) = p.entries[*j - 1];
                removed[g] += w;
                n_removed += 1;
                *j -= 1;
            }
        }
        if d_raw == 0 {
            continue;
        }
        for g in 0..n_groups {
            at_risk[g] = (added[g] - removed[g]).max(0.0);
        }
        f(&EventRow {
            time: t,
            n_raw: n_added - n_removed,
            d_raw,
            at_risk: &at_risk,
            events: &events,
        });
    }
}
