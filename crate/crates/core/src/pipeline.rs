//! End-to-end orchestration: the exclusivity and political-interest filters,
//! raw following ratios, the senator-follow breakdown, and devotedness-score
//! aggregation at sport, state, and team level.
//!
//! Summation contract, fixed for bit-reproducibility: a team cohort sums
//! per-user contribution rows in ascending user-id order; a state row sums
//! its team totals in ascending team-handle order; a sport row sums its
//! state totals in ascending state-code order; a row's score total sums
//! candidates in roster order. Parallelism never reorders any of these.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::idset::IdSet;
use crate::ingest::Snapshot;
use crate::metrics::{
    accumulate_cds, cds_contribution, congressional_weight, CandidateFollowVector,
    CandidateRoster, DevotednessScores, MetricsError, PartyFollowCounts,
};
use crate::registry::{EntityKind, League, Party, RegistryError};

/// Aggregation granularity of a devotedness-ratio table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingLevel {
    Sport,
    State,
    Team,
}

impl GroupingLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupingLevel::Sport => "sport",
            GroupingLevel::State => "state",
            GroupingLevel::Team => "team",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("league {league} has no teams in the registry")]
    NoTeamsInLeague { league: League },
    #[error("rate is undefined over an empty fan set")]
    EmptyFans,
    #[error("ratio row is undefined: no fan overlaps any candidate")]
    UndefinedRatioRow,
    #[error("senator breakdown is undefined: no fan follows any senator")]
    UndefinedBreakdown,
}

/// Candidate-overlap counts and their shares for one fan grouping.
/// Entries follow roster order; shares over non-empty overlaps sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub overlaps: Vec<u64>,
    pub ratios: Vec<f64>,
}

/// How a grouping's senator-following fans split between the parties.
#[derive(Debug, Clone, PartialEq)]
pub struct SenatorBreakdown {
    pub only_democrat: f64,
    pub only_republican: f64,
    pub both: f64,
    /// Fans following at least one senator.
    pub population: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdrRow {
    pub league: League,
    pub state: Option<String>,
    pub team: Option<String>,
    pub cohort_size: u64,
    /// Per-candidate devotedness scores, roster order.
    pub cds: Vec<f64>,
    /// Per-candidate ratios; `None` marks an undefined row (zero score mass).
    pub cdr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdrTable {
    pub level: GroupingLevel,
    pub candidates: Vec<String>,
    pub rows: Vec<CdrRow>,
}

/// For each team of the league, the users following exactly that one team
/// within the league. Exclusivity is per-league, so a user may survive in
/// one NBA team and one NFL team at once.
pub fn exclusive_fans(
    snapshot: &Snapshot,
    league: League,
) -> Result<BTreeMap<String, IdSet>, PipelineError> {
    let teams = snapshot.registry().teams_by(league, None)?;
    if teams.is_empty() {
        return Err(PipelineError::NoTeamsInLeague { league });
    }
    let sets: Vec<&IdSet> = teams
        .iter()
        .map(|t| snapshot.expect_set(&t.handle))
        .collect();
    let multi = IdSet::in_at_least(&sets, 2);
    Ok(teams
        .iter()
        .zip(&sets)
        .map(|(team, set)| (team.handle.clone(), set.difference(&multi)))
        .collect())
}

/// Union of every senator's followers, caucus resolution irrelevant.
pub fn senator_union(snapshot: &Snapshot) -> IdSet {
    let sets: Vec<&IdSet> = snapshot
        .registry()
        .senators()
        .map(|e| snapshot.expect_set(&e.handle))
        .collect();
    IdSet::union_many(&sets)
}

/// Restricts fans to those following at least one senator.
pub fn politically_interested(fans: &IdSet, snapshot: &Snapshot) -> IdSet {
    fans.intersect(&senator_union(snapshot))
}

/// Fraction of fans following at least one of the given candidates.
pub fn engagement_rate(fans: &IdSet, candidates: &[&IdSet]) -> Result<f64, PipelineError> {
    if fans.is_empty() {
        return Err(PipelineError::EmptyFans);
    }
    let engaged = fans.intersect(&IdSet::union_many(candidates));
    Ok(engaged.len() as f64 / fans.len() as f64)
}

/// Share of candidate overlaps within a fan set. A fan following several
/// candidates counts once per candidate followed, so the denominator is the
/// overlap total, not the fan count.
pub fn following_ratios(
    fans: &IdSet,
    candidate_sets: &[&IdSet],
) -> Result<RatioRow, PipelineError> {
    let overlaps: Vec<u64> = candidate_sets
        .iter()
        .map(|set| fans.intersect(set).len())
        .collect();
    let total: u64 = overlaps.iter().sum();
    if total == 0 {
        return Err(PipelineError::UndefinedRatioRow);
    }
    let ratios = overlaps.iter().map(|&o| o as f64 / total as f64).collect();
    Ok(RatioRow { overlaps, ratios })
}

/// Partitions the senator-following fans into only-Democrat,
/// only-Republican, and both, with independents caucus-resolved.
pub fn senator_breakdown(
    fans: &IdSet,
    snapshot: &Snapshot,
) -> Result<SenatorBreakdown, PipelineError> {
    let registry = snapshot.registry();
    let party_union = |party: Party| {
        let sets: Vec<&IdSet> = registry
            .senators_caucusing(party)
            .iter()
            .map(|e| snapshot.expect_set(&e.handle))
            .collect();
        IdSet::union_many(&sets)
    };
    let in_dem = fans.intersect(&party_union(Party::Democrat));
    let in_rep = fans.intersect(&party_union(Party::Republican));
    let both = in_dem.intersect(&in_rep).len();
    let population = in_dem.len() + in_rep.len() - both;
    if population == 0 {
        return Err(PipelineError::UndefinedBreakdown);
    }
    let n = population as f64;
    Ok(SenatorBreakdown {
        only_democrat: (in_dem.len() - both) as f64 / n,
        only_republican: (in_rep.len() - both) as f64 / n,
        both: both as f64 / n,
        population,
    })
}

/// Cohorts larger than this use the inverted counting orientation (iterate
/// senator sets, increment per-user counters). Both orientations agree
/// exactly; the inverted one is mandatory at scale.
const INVERTED_ORIENTATION_THRESHOLD: u64 = 4096;

/// Per-user party follow counts by testing each user against each senator
/// set. Reference orientation; quadratic-ish, fine for small cohorts.
pub fn party_follow_counts_direct(
    cohort: &IdSet,
    senator_sets: &[(Party, &IdSet)],
) -> Vec<PartyFollowCounts> {
    cohort
        .iter()
        .map(|user| {
            let mut counts = PartyFollowCounts::default();
            for (party, set) in senator_sets {
                if set.contains(user) {
                    match party {
                        Party::Democrat => counts.democrat += 1,
                        Party::Republican => counts.republican += 1,
                    }
                }
            }
            counts
        })
        .collect()
}

/// Same result as [`party_follow_counts_direct`] via merge scans per senator
/// set; linear in the set sizes.
pub fn party_follow_counts_inverted(
    cohort: &IdSet,
    senator_sets: &[(Party, &IdSet)],
) -> Vec<PartyFollowCounts> {
    let mut counts = vec![PartyFollowCounts::default(); cohort.len() as usize];
    for (party, set) in senator_sets {
        match party {
            Party::Democrat => {
                cohort.for_each_common_position(set, |pos| counts[pos].democrat += 1)
            }
            Party::Republican => {
                cohort.for_each_common_position(set, |pos| counts[pos].republican += 1)
            }
        }
    }
    counts
}

fn candidate_follow_masks(cohort: &IdSet, candidate_sets: &[&IdSet]) -> Vec<u64> {
    let mut masks = vec![0u64; cohort.len() as usize];
    for (idx, set) in candidate_sets.iter().enumerate() {
        cohort.for_each_common_position(set, |pos| masks[pos] |= 1 << idx);
    }
    masks
}

/// Devotedness scores of one eligible cohort. Every member must follow at
/// least one senator and one tracked candidate.
fn cohort_scores(
    cohort: &IdSet,
    senator_sets: &[(Party, &IdSet)],
    candidate_sets: &[&IdSet],
    roster: &CandidateRoster,
) -> Result<DevotednessScores, PipelineError> {
    let counts = if cohort.len() > INVERTED_ORIENTATION_THRESHOLD {
        party_follow_counts_inverted(cohort, senator_sets)
    } else {
        party_follow_counts_direct(cohort, senator_sets)
    };
    let masks = candidate_follow_masks(cohort, candidate_sets);
    let mut rows = Vec::with_capacity(cohort.len() as usize);
    for (pos, user) in cohort.iter().enumerate() {
        let weight = congressional_weight(counts[pos])?;
        let vector = CandidateFollowVector::from_mask(masks[pos]);
        rows.push((user, cds_contribution(&weight, &vector, roster)?));
    }
    Ok(accumulate_cds(roster.len(), rows)?)
}

/// Runs the full devotedness pipeline at the requested level.
///
/// Eligible members of a team grouping are its exclusive fans who follow at
/// least one senator and at least one tracked candidate. State and sport
/// rows sum the team rows, so scores are additive across levels by
/// construction. Undefined ratios (zero score mass) are marked, not NaN.
pub fn run_cdr(snapshot: &Snapshot, level: GroupingLevel) -> Result<CdrTable, PipelineError> {
    let registry = snapshot.registry();
    let roster = CandidateRoster::from_registry(registry)?;
    let candidate_sets: Vec<&IdSet> = roster
        .handles()
        .iter()
        .map(|h| snapshot.expect_set(h))
        .collect();
    let candidate_union = IdSet::union_many(&candidate_sets);
    let senator_sets: Vec<(Party, &IdSet)> = registry
        .senators()
        .map(|e| {
            let party = registry
                .senator_party(&e.handle)
                .expect("registry senators resolve");
            (party, snapshot.expect_set(&e.handle))
        })
        .collect();
    let senator_union = {
        let sets: Vec<&IdSet> = senator_sets.iter().map(|(_, s)| *s).collect();
        IdSet::union_many(&sets)
    };

    let mut team_rows: Vec<CdrRow> = Vec::new();
    for league in League::ALL {
        let teams = registry.teams_by(league, None)?;
        if teams.is_empty() {
            continue;
        }
        let exclusive = exclusive_fans(snapshot, league)?;
        let league_rows: Vec<CdrRow> = teams
            .par_iter()
            .map(|team| {
                let state = match &team.kind {
                    EntityKind::Team { state, .. } => state.clone(),
                    _ => unreachable!("teams_by yields teams"),
                };
                let eligible = exclusive[&team.handle]
                    .intersect(&senator_union)
                    .intersect(&candidate_union);
                let scores = cohort_scores(&eligible, &senator_sets, &candidate_sets, &roster)?;
                Ok(CdrRow {
                    league,
                    state: Some(state),
                    team: Some(team.handle.clone()),
                    cohort_size: eligible.len(),
                    cds: scores.per_candidate,
                    cdr: None,
                })
            })
            .collect::<Result<_, PipelineError>>()?;
        team_rows.extend(league_rows);
    }

    let n = roster.len();
    let rows = match level {
        GroupingLevel::Team => team_rows,
        GroupingLevel::State => roll_up_states(&team_rows, n),
        GroupingLevel::Sport => roll_up_sports(&roll_up_states(&team_rows, n), n),
    };
    Ok(CdrTable {
        level,
        candidates: roster.handles().to_vec(),
        rows: rows.into_iter().map(finalize_row).collect(),
    })
}

/// Sums team rows into one row per (league, state). Teams arrive sorted by
/// handle, so each group accumulates in handle order.
fn roll_up_states(team_rows: &[CdrRow], n_candidates: usize) -> Vec<CdrRow> {
    let mut acc: BTreeMap<(League, String), (u64, Vec<f64>)> = BTreeMap::new();
    for row in team_rows {
        let key = (row.league, row.state.clone().expect("team rows carry a state"));
        let entry = acc
            .entry(key)
            .or_insert_with(|| (0, vec![0.0; n_candidates]));
        entry.0 += row.cohort_size;
        for (a, v) in entry.1.iter_mut().zip(&row.cds) {
            *a += v;
        }
    }
    acc.into_iter()
        .map(|((league, state), (cohort_size, cds))| CdrRow {
            league,
            state: Some(state),
            team: None,
            cohort_size,
            cds,
            cdr: None,
        })
        .collect()
}

/// Sums state rows into one row per league, accumulating in ascending
/// state-code order.
fn roll_up_sports(state_rows: &[CdrRow], n_candidates: usize) -> Vec<CdrRow> {
    let mut acc: BTreeMap<League, (u64, Vec<f64>)> = BTreeMap::new();
    for row in state_rows {
        let entry = acc
            .entry(row.league)
            .or_insert_with(|| (0, vec![0.0; n_candidates]));
        entry.0 += row.cohort_size;
        for (a, v) in entry.1.iter_mut().zip(&row.cds) {
            *a += v;
        }
    }
    acc.into_iter()
        .map(|(league, (cohort_size, cds))| CdrRow {
            league,
            state: None,
            team: None,
            cohort_size,
            cds,
            cdr: None,
        })
        .collect()
}

fn finalize_row(mut row: CdrRow) -> CdrRow {
    let total: f64 = row.cds.iter().sum();
    row.cdr = if total > 0.0 {
        Some(row.cds.iter().map(|&v| v / total).collect())
    } else {
        None
    };
    row
}
