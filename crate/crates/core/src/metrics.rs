//! Per-user metric kernel: congressional weight, devotedness, and
//! per-candidate devotedness-score contributions.
//!
//! All functions are pure. Contributions are evaluated as
//! `party_weight * (1.0 / n_followed)` and accumulated in ascending-user
//! order with plain double-precision addition; an independent implementation
//! following the same evaluation order reproduces every sum bit-for-bit.

use std::collections::HashMap;

use thiserror::Error;

use crate::idset::UserId;
use crate::registry::{EntityKind, Party, Registry};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("congressional weight is undefined when no senators are followed")]
    UndefinedWeight,
    #[error("devotedness is undefined when no tracked candidate is followed")]
    NoCandidatesFollowed,
    #[error("unknown candidate {handle:?}")]
    UnknownCandidate { handle: String },
    #[error("duplicate candidate {handle:?}")]
    DuplicateCandidate { handle: String },
    #[error("at most 64 candidates are supported, got {count}")]
    TooManyCandidates { count: usize },
    #[error("user {user} contributed twice; the accumulation sums each user once")]
    DuplicateUser { user: u64 },
    #[error("users must arrive in ascending id order: {previous} then {current}")]
    NonAscendingUsers { previous: u64, current: u64 },
    #[error("contribution row has {found} entries, roster has {expected}")]
    ContributionLength { expected: usize, found: usize },
}

/// Per-user counts of Democrat-caucus and Republican senators followed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartyFollowCounts {
    pub democrat: u32,
    pub republican: u32,
}

impl PartyFollowCounts {
    pub fn total(&self) -> u64 {
        self.democrat as u64 + self.republican as u64
    }
}

/// Normalized two-party weight pair. Only constructible for users following
/// at least one senator, so `democrat() + republican() == 1` always holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongressionalWeight {
    w_dem: f64,
    w_rep: f64,
}

impl CongressionalWeight {
    pub fn democrat(&self) -> f64 {
        self.w_dem
    }

    pub fn republican(&self) -> f64 {
        self.w_rep
    }

    pub fn for_party(&self, party: Party) -> f64 {
        match party {
            Party::Democrat => self.w_dem,
            Party::Republican => self.w_rep,
        }
    }
}

/// `(α/(α+β), β/(α+β))`; undefined when both counts are zero.
pub fn congressional_weight(
    counts: PartyFollowCounts,
) -> Result<CongressionalWeight, MetricsError> {
    let total = counts.total();
    if total == 0 {
        return Err(MetricsError::UndefinedWeight);
    }
    let total = total as f64;
    Ok(CongressionalWeight {
        w_dem: counts.democrat as f64 / total,
        w_rep: counts.republican as f64 / total,
    })
}

/// Ordered candidate universe: fixes both the indicator-bit layout and the
/// column order of every downstream table.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRoster {
    handles: Vec<String>,
    parties: Vec<Party>,
    index: HashMap<String, usize>,
}

impl CandidateRoster {
    pub fn new(candidates: Vec<(String, Party)>) -> Result<CandidateRoster, MetricsError> {
        if candidates.len() > 64 {
            return Err(MetricsError::TooManyCandidates {
                count: candidates.len(),
            });
        }
        let mut roster = CandidateRoster {
            handles: Vec::with_capacity(candidates.len()),
            parties: Vec::with_capacity(candidates.len()),
            index: HashMap::with_capacity(candidates.len()),
        };
        for (handle, party) in candidates {
            if roster.index.contains_key(&handle) {
                return Err(MetricsError::DuplicateCandidate { handle });
            }
            roster.index.insert(handle.clone(), roster.handles.len());
            roster.handles.push(handle);
            roster.parties.push(party);
        }
        Ok(roster)
    }

    /// Candidates in manifest order.
    pub fn from_registry(registry: &Registry) -> Result<CandidateRoster, MetricsError> {
        CandidateRoster::new(
            registry
                .candidates()
                .map(|e| match e.kind {
                    EntityKind::Candidate { party } => (e.handle.clone(), party),
                    _ => unreachable!("candidates() yields candidates"),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.handles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handles.is_empty()
    }

    pub fn handles(&self) -> &[String] {
        &self.handles
    }

    pub fn handle(&self, idx: usize) -> &str {
        &self.handles[idx]
    }

    pub fn party(&self, idx: usize) -> Party {
        self.parties[idx]
    }

    pub fn index_of(&self, handle: &str) -> Option<usize> {
        self.index.get(handle).copied()
    }
}

/// Per-user indicator vector over the roster's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateFollowVector {
    mask: u64,
    n_followed: u32,
}

impl CandidateFollowVector {
    pub fn from_handles<'a, I>(
        roster: &CandidateRoster,
        followed: I,
    ) -> Result<CandidateFollowVector, MetricsError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut mask = 0u64;
        for handle in followed {
            let idx = roster
                .index_of(handle)
                .ok_or_else(|| MetricsError::UnknownCandidate {
                    handle: handle.to_string(),
                })?;
            mask |= 1 << idx;
        }
        Ok(Self::from_mask(mask))
    }

    /// Bit `i` set means the user follows roster candidate `i`.
    pub fn from_mask(mask: u64) -> CandidateFollowVector {
        CandidateFollowVector {
            mask,
            n_followed: mask.count_ones(),
        }
    }

    pub fn follows(&self, idx: usize) -> bool {
        self.mask & (1 << idx) != 0
    }

    pub fn n_followed(&self) -> u32 {
        self.n_followed
    }
}

/// Per-candidate devotedness: `1/n` for each of the user's `n` followed
/// candidates, `0` elsewhere.
pub fn devotedness(
    roster: &CandidateRoster,
    vec: &CandidateFollowVector,
) -> Result<Vec<f64>, MetricsError> {
    if vec.n_followed == 0 {
        return Err(MetricsError::NoCandidatesFollowed);
    }
    let share = 1.0 / vec.n_followed as f64;
    Ok((0..roster.len())
        .map(|i| if vec.follows(i) { share } else { 0.0 })
        .collect())
}

/// One user's contribution row: the weight of each followed candidate's
/// party times the devotedness share.
pub fn cds_contribution(
    weight: &CongressionalWeight,
    vec: &CandidateFollowVector,
    roster: &CandidateRoster,
) -> Result<Vec<f64>, MetricsError> {
    if vec.n_followed == 0 {
        return Err(MetricsError::NoCandidatesFollowed);
    }
    let share = 1.0 / vec.n_followed as f64;
    Ok((0..roster.len())
        .map(|i| {
            if vec.follows(i) {
                weight.for_party(roster.party(i)) * share
            } else {
                0.0
            }
        })
        .collect())
}

/// Per-candidate sums over a cohort, plus the contributing-user count.
#[derive(Debug, Clone, PartialEq)]
pub struct DevotednessScores {
    pub per_candidate: Vec<f64>,
    pub contributing_users: u64,
}

impl DevotednessScores {
    pub fn zeros(n_candidates: usize) -> DevotednessScores {
        DevotednessScores {
            per_candidate: vec![0.0; n_candidates],
            contributing_users: 0,
        }
    }
}

/// Sums contribution rows over users. Rows must arrive in strictly ascending
/// user-id order (which also rejects duplicates), fixing the summation order
/// for bit-reproducibility.
pub fn accumulate_cds<I>(
    n_candidates: usize,
    rows: I,
) -> Result<DevotednessScores, MetricsError>
where
    I: IntoIterator<Item = (UserId, Vec<f64>)>,
{
    let mut scores = DevotednessScores::zeros(n_candidates);
    let mut prev: Option<UserId> = None;
    for (user, row) in rows {
        check_order(&mut prev, user)?;
        if row.len() != n_candidates {
            return Err(MetricsError::ContributionLength {
                expected: n_candidates,
                found: row.len(),
            });
        }
        for (acc, v) in scores.per_candidate.iter_mut().zip(&row) {
            *acc += v;
        }
        scores.contributing_users += 1;
    }
    Ok(scores)
}

/// Neumaier-compensated variant of [`accumulate_cds`] for very large cohorts
/// where plain summation drift matters. Same contract, different rounding.
pub fn accumulate_cds_compensated<I>(
    n_candidates: usize,
    rows: I,
) -> Result<DevotednessScores, MetricsError>
where
    I: IntoIterator<Item = (UserId, Vec<f64>)>,
{
    let mut sums = vec![0.0f64; n_candidates];
    let mut comps = vec![0.0f64; n_candidates];
    let mut users = 0u64;
    let mut prev: Option<UserId> = None;
    for (user, row) in rows {
        check_order(&mut prev, user)?;
        if row.len() != n_candidates {
            return Err(MetricsError::ContributionLength {
                expected: n_candidates,
                found: row.len(),
            });
        }
        for i in 0..n_candidates {
            let v = row[i];
            let t = sums[i] + v;
            if sums[i].abs() >= v.abs() {
                comps[i] += (sums[i] - t) + v;
            } else {
                comps[i] += (v - t) + sums[i];
            }
            sums[i] = t;
        }
        users += 1;
    }
    for i in 0..n_candidates {
        sums[i] += comps[i];
    }
    Ok(DevotednessScores {
        per_candidate: sums,
        contributing_users: users,
    })
}

fn check_order(prev: &mut Option<UserId>, user: UserId) -> Result<(), MetricsError> {
    if let Some(p) = *prev {
        if p == user {
            return Err(MetricsError::DuplicateUser { user: user.0 });
        }
        if p > user {
            return Err(MetricsError::NonAscendingUsers {
                previous: p.0,
                current: user.0,
            });
        }
    }
    *prev = Some(user);
    Ok(())
}
