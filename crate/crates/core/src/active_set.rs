use serde::{Deserialize, Serialize};

use crate::interval::ConfidenceInterval;

/// Arms whose intervals chain by overlap to the one with the highest upper bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    /// Sorted ascending.
    pub members: Vec<usize>,
    pub anchor: usize,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.members.binary_search(&arm).is_ok()
    }

    /// Membership mask over `num_arms` arms.
    pub fn mask(&self, num_arms: usize) -> Vec<bool> {
        let mut mask = vec![false; num_arms];
        for &m in &self.members {
            mask[m] = true;
        }
        mask
    }
}

/// Lowest index among the arms with the largest upper bound.
pub fn anchor_arm(intervals: &[ConfidenceInterval]) -> usize {
    let mut best = 0;
    for (i, iv) in intervals.iter().enumerate().skip(1) {
        if iv.upper > intervals[best].upper {
            best = i;
        }
    }
    best
}

/// Smallest set containing the anchor and closed under "`b_j >= a_i` for
/// some member `i` implies `j` is a member".
///
/// The closure is an upper set in the order of decreasing upper bound, so a
/// single sweep in that order suffices: an arm joins while its upper bound
/// reaches the lowest lower bound seen so far, and the first arm that fails
/// ends the set. Overlap is compared exactly on the computed bounds.
///
/// Panics if `intervals` is empty.
pub fn build_active_set(intervals: &[ConfidenceInterval]) -> ActiveSet {
    assert!(!intervals.is_empty(), "active set needs at least one arm");
    let anchor = anchor_arm(intervals);

    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&i, &j| intervals[j].upper.total_cmp(&intervals[i].upper).then(i.cmp(&j)));

    let mut floor = intervals[anchor].lower;
    let mut members = vec![anchor];
    for &j in order.iter().filter(|&&j| j != anchor) {
        if intervals[j].upper >= floor {
            floor = floor.min(intervals[j].lower);
            members.push(j);
        } else {
            break;
        }
    }
    members.sort_unstable();
    ActiveSet { members, anchor }
}
