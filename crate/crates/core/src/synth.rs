//! Seeded synthetic-cohort generator. Emits follower files plus a manifest
//! with known per-user ground truth, so pipelines can be verified end to end
//! and metric recovery can be measured against a planted signal.
//!
//! Every per-user draw comes from that user's own counter-derived stream, so
//! datasets are a pure function of `(seed, config)` no matter how or in what
//! order users are generated.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collector::mix64;
use crate::idset::UserId;
use crate::ingest::sha256_tag;
use crate::registry::MANIFEST_SCHEMA;

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Fraction of users whose behavior ignores their state's lean.
    #[serde(default)]
    pub noise_rate: f64,
    /// Mean number of senators a user follows (Poisson).
    #[serde(default = "default_intensity")]
    pub senator_follow_intensity: f64,
    /// How latent Democrats split between the first two Democrat candidates.
    #[serde(default = "default_half")]
    pub democrat_candidate_mix: f64,
    /// Probability scale for following candidates outside the preference.
    #[serde(default = "default_cross_rate")]
    pub cross_follow_rate: f64,
    /// Probability that a user's team pick stays in their home state.
    #[serde(default = "default_affinity")]
    pub home_team_affinity: f64,
    pub senate: SenateSpec,
    pub candidates: Vec<CandidateSpec>,
    pub states: Vec<StateSpec>,
    pub teams: Vec<TeamSpec>,
}

fn default_intensity() -> f64 {
    3.0
}

fn default_half() -> f64 {
    0.5
}

fn default_cross_rate() -> f64 {
    0.2
}

fn default_affinity() -> f64 {
    0.9
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SenateSpec {
    pub democrats: u32,
    pub republicans: u32,
    /// Independents caucus with Democrats in the emitted manifest.
    #[serde(default)]
    pub independents: u32,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CandidateSpec {
    pub handle: String,
    pub party: String,
    pub base_follow_probability: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct StateSpec {
    pub code: String,
    pub n_users: u64,
    /// -1 fully Democrat, +1 fully Republican.
    pub lean: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct TeamSpec {
    pub handle: String,
    pub league: String,
    pub state: String,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read {path}: {source}")]
    ReadIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    WriteIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config field {field}: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("no {league} team for configured state {state:?}")]
    RosterEmptyForState { state: String, league: String },
}

/// Latent political behavior planted for one synthetic user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Latent {
    Democrat,
    Republican,
    Noise,
}

impl Latent {
    pub fn as_str(&self) -> &'static str {
        match self {
            Latent::Democrat => "democrat",
            Latent::Republican => "republican",
            Latent::Noise => "noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTruth {
    pub id: UserId,
    pub state: String,
    pub latent: Latent,
}

/// The planted signal: per-state leans and per-user latent assignments.
/// Regenerating from the same `(seed, config)` reproduces it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub states: Vec<(String, f64)>,
    /// Sorted by user id.
    pub users: Vec<UserTruth>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSummary {
    pub code: String,
    pub democrats: u64,
    pub republicans: u64,
    pub noise: u64,
}

/// Per-state counts of latent assignments, in config state order.
pub fn describe(truth: &GroundTruth) -> Vec<StateSummary> {
    truth
        .states
        .iter()
        .map(|(code, _)| {
            let mut summary = StateSummary {
                code: code.clone(),
                democrats: 0,
                republicans: 0,
                noise: 0,
            };
            for user in truth.users.iter().filter(|u| &u.state == code) {
                match user.latent {
                    Latent::Democrat => summary.democrats += 1,
                    Latent::Republican => summary.republicans += 1,
                    Latent::Noise => summary.noise += 1,
                }
            }
            summary
        })
        .collect()
}

pub fn load_config(path: &Path) -> Result<SynthConfig, SynthError> {
    let text = std::fs::read_to_string(path).map_err(|source| SynthError::ReadIo {
        path: path.to_path_buf(),
        source,
    })?;
    let config: SynthConfig = toml::from_str(&text)?;
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &SynthConfig) -> Result<(), SynthError> {
    let field = |field: &str, reason: String| SynthError::InvalidField {
        field: field.to_string(),
        reason,
    };
    let unit = |name: &str, value: f64| {
        if (0.0..=1.0).contains(&value) {
            Ok(())
        } else {
            Err(field(name, format!("{value} is outside [0, 1]")))
        }
    };
    unit("noise_rate", config.noise_rate)?;
    unit("democrat_candidate_mix", config.democrat_candidate_mix)?;
    unit("cross_follow_rate", config.cross_follow_rate)?;
    unit("home_team_affinity", config.home_team_affinity)?;
    if !(config.senator_follow_intensity >= 0.0 && config.senator_follow_intensity.is_finite()) {
        return Err(field(
            "senator_follow_intensity",
            "must be a finite value >= 0".to_string(),
        ));
    }
    if config.senate.democrats + config.senate.republicans + config.senate.independents == 0 {
        return Err(field("senate", "needs at least one senator".to_string()));
    }
    if config.candidates.is_empty() {
        return Err(field("candidates", "needs at least one candidate".to_string()));
    }
    let mut handles = HashSet::new();
    for (i, c) in config.candidates.iter().enumerate() {
        if !matches!(c.party.as_str(), "Democrat" | "Republican") {
            return Err(field(
                &format!("candidates[{i}].party"),
                format!("{:?} is not Democrat or Republican", c.party),
            ));
        }
        unit(
            &format!("candidates[{i}].base_follow_probability"),
            c.base_follow_probability,
        )?;
        if !handles.insert(c.handle.clone()) {
            return Err(field(
                &format!("candidates[{i}].handle"),
                format!("duplicate handle {:?}", c.handle),
            ));
        }
    }
    if config.states.is_empty() {
        return Err(field("states", "needs at least one state".to_string()));
    }
    let mut codes = HashSet::new();
    for (i, s) in config.states.iter().enumerate() {
        if s.code.len() != 2 || !s.code.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(field(
                &format!("states[{i}].code"),
                format!("{:?} is not a two-letter uppercase code", s.code),
            ));
        }
        if !codes.insert(s.code.clone()) {
            return Err(field(
                &format!("states[{i}].code"),
                format!("duplicate state {:?}", s.code),
            ));
        }
        if s.n_users == 0 {
            return Err(field(
                &format!("states[{i}].n_users"),
                "must be at least 1".to_string(),
            ));
        }
        if !(-1.0..=1.0).contains(&s.lean) {
            return Err(field(
                &format!("states[{i}].lean"),
                format!("{} is outside [-1, 1]", s.lean),
            ));
        }
    }
    if config.teams.is_empty() {
        return Err(field("teams", "needs at least one team".to_string()));
    }
    let mut leagues = HashSet::new();
    for (i, t) in config.teams.iter().enumerate() {
        if !matches!(t.league.as_str(), "NBA" | "NFL") {
            return Err(field(
                &format!("teams[{i}].league"),
                format!("{:?} is not NBA or NFL", t.league),
            ));
        }
        if !codes.contains(&t.state) {
            return Err(field(
                &format!("teams[{i}].state"),
                format!("{:?} is not a configured state", t.state),
            ));
        }
        if !handles.insert(t.handle.clone()) {
            return Err(field(
                &format!("teams[{i}].handle"),
                format!("duplicate handle {:?}", t.handle),
            ));
        }
        leagues.insert(t.league.clone());
    }
    // home-biased team choice needs a home team per (state, active league)
    for state in &config.states {
        for league in ["NBA", "NFL"] {
            if leagues.contains(league)
                && !config
                    .teams
                    .iter()
                    .any(|t| t.league == league && t.state == state.code)
            {
                return Err(SynthError::RosterEmptyForState {
                    state: state.code.clone(),
                    league: league.to_string(),
                });
            }
        }
    }
    Ok(())
}

struct EntityLists {
    /// Follower ids per entity, indexed as candidates ++ senators ++ teams.
    follows: Vec<Vec<u64>>,
    senator_offset: usize,
    team_offset: usize,
}

/// Generates the dataset under `out_dir`: `manifest.toml`,
/// `followers/*.txt`, and `ground_truth.csv` (the planted truth; not a
/// pipeline input). Deterministic in `(seed, config)`, byte for byte.
pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<GroundTruth, SynthError> {
    validate(config)?;

    let senator_handles = senator_handles(&config.senate);
    let n_candidates = config.candidates.len();
    let n_senators = senator_handles.len();
    let democrat_pool: Vec<usize> = (0..config.senate.democrats as usize)
        .chain(
            // independents caucus Democrat, so latent Democrats draw them too
            (config.senate.democrats + config.senate.republicans) as usize..n_senators,
        )
        .collect();
    let republican_pool: Vec<usize> = (config.senate.democrats as usize
        ..(config.senate.democrats + config.senate.republicans) as usize)
        .collect();

    let nba_teams = team_indices(config, "NBA");
    let nfl_teams = team_indices(config, "NFL");
    let dem_candidates = candidate_indices(config, "Democrat");
    let rep_candidates = candidate_indices(config, "Republican");

    let mut lists = EntityLists {
        follows: vec![Vec::new(); n_candidates + n_senators + config.teams.len()],
        senator_offset: n_candidates,
        team_offset: n_candidates + n_senators,
    };

    let poisson = if config.senator_follow_intensity > 0.0 {
        Some(Poisson::new(config.senator_follow_intensity).expect("validated positive and finite"))
    } else {
        None
    };

    let mut users: Vec<UserTruth> = Vec::new();
    let mut index = 0u64;
    for state_spec in &config.states {
        for _ in 0..state_spec.n_users {
            let id = mix64(index ^ mix64(config.seed));
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(config.seed ^ mix64(!index)));
            index += 1;

            let latent = if rng.random::<f64>() < config.noise_rate {
                Latent::Noise
            } else if rng.random::<f64>() < (1.0 + state_spec.lean) / 2.0 {
                Latent::Republican
            } else {
                Latent::Democrat
            };
            users.push(UserTruth {
                id: UserId(id),
                state: state_spec.code.clone(),
                latent,
            });

            // exactly one team per league, biased toward the home state
            for league_teams in [&nba_teams, &nfl_teams] {
                if league_teams.is_empty() {
                    continue;
                }
                let home: Vec<usize> = league_teams
                    .iter()
                    .copied()
                    .filter(|&t| config.teams[t].state == state_spec.code)
                    .collect();
                let pick = if rng.random::<f64>() < config.home_team_affinity {
                    home[rng.random_range(0..home.len())]
                } else {
                    league_teams[rng.random_range(0..league_teams.len())]
                };
                lists.follows[lists.team_offset + pick].push(id);
            }

            // senator follows come from the latent party's caucus pool;
            // noise users draw from the whole senate
            let pool: Option<&[usize]> = match latent {
                Latent::Democrat => Some(&democrat_pool),
                Latent::Republican => Some(&republican_pool),
                Latent::Noise => None,
            };
            let pool_len = pool.map_or(n_senators, |p| p.len());
            let k = match &poisson {
                Some(p) => (p.sample(&mut rng) as usize).min(pool_len),
                None => 0,
            };
            for slot in sample_distinct(&mut rng, pool_len, k) {
                let senator = pool.map_or(slot, |p| p[slot]);
                lists.follows[lists.senator_offset + senator].push(id);
            }

            // candidate follows: one preferred own-party candidate at base
            // probability, everything else damped by the cross rate
            let preferred = match latent {
                Latent::Noise => None,
                Latent::Democrat => pick_preferred(
                    &mut rng,
                    &dem_candidates,
                    Some(config.democrat_candidate_mix),
                ),
                Latent::Republican => pick_preferred(&mut rng, &rep_candidates, None),
            };
            for (c, spec) in config.candidates.iter().enumerate() {
                let p = match latent {
                    Latent::Noise => spec.base_follow_probability,
                    _ if preferred == Some(c) => spec.base_follow_probability,
                    _ => spec.base_follow_probability * config.cross_follow_rate,
                };
                if rng.random::<f64>() < p {
                    lists.follows[c].push(id);
                }
            }
        }
    }
    users.sort_by_key(|u| u.id);

    write_dataset(config, &senator_handles, &mut lists, &users, out_dir)?;

    Ok(GroundTruth {
        states: config
            .states
            .iter()
            .map(|s| (s.code.clone(), s.lean))
            .collect(),
        users,
    })
}

fn senator_handles(senate: &SenateSpec) -> Vec<String> {
    let mut handles = Vec::new();
    for i in 0..senate.democrats {
        handles.push(format!("sen_d_{i:03}"));
    }
    for i in 0..senate.republicans {
        handles.push(format!("sen_r_{i:03}"));
    }
    for i in 0..senate.independents {
        handles.push(format!("sen_i_{i:03}"));
    }
    handles
}

fn team_indices(config: &SynthConfig, league: &str) -> Vec<usize> {
    config
        .teams
        .iter()
        .enumerate()
        .filter(|(_, t)| t.league == league)
        .map(|(i, _)| i)
        .collect()
}

fn candidate_indices(config: &SynthConfig, party: &str) -> Vec<usize> {
    config
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.party == party)
        .map(|(i, _)| i)
        .collect()
}

fn pick_preferred(rng: &mut ChaCha8Rng, own: &[usize], mix: Option<f64>) -> Option<usize> {
    match (own.len(), mix) {
        (0, _) => None,
        (2, Some(mix)) => Some(if rng.random::<f64>() < mix { own[0] } else { own[1] }),
        (n, _) => Some(own[rng.random_range(0..n)]),
    }
}

fn sample_distinct(rng: &mut ChaCha8Rng, pool_len: usize, k: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..pool_len).collect();
    for i in 0..k {
        let j = rng.random_range(i..pool_len);
        indices.swap(i, j);
    }
    indices.truncate(k);
    indices
}

fn write_dataset(
    config: &SynthConfig,
    senator_handles: &[String],
    lists: &mut EntityLists,
    users: &[UserTruth],
    out_dir: &Path,
) -> Result<(), SynthError> {
    let write_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::WriteIo {
            path: path.clone(),
            source,
        }
    };
    let followers_dir = out_dir.join("followers");
    std::fs::create_dir_all(&followers_dir).map_err(write_err(&followers_dir))?;

    // entity emission order: candidates, senators, teams
    let handles: Vec<String> = config
        .candidates
        .iter()
        .map(|c| c.handle.clone())
        .chain(senator_handles.iter().cloned())
        .chain(config.teams.iter().map(|t| t.handle.clone()))
        .collect();
    let mut digests: Vec<(String, String)> = Vec::with_capacity(handles.len());
    for (entity_index, handle) in handles.iter().enumerate() {
        let ids = &mut lists.follows[entity_index];
        ids.sort_unstable();
        let mut body = String::with_capacity(ids.len() * 12);
        for id in ids.iter() {
            writeln!(body, "{id}").unwrap();
        }
        let path = followers_dir.join(format!("{handle}.txt"));
        std::fs::write(&path, body.as_bytes()).map_err(write_err(&path))?;
        digests.push((handle.clone(), sha256_tag(body.as_bytes())));
    }

    let manifest = render_manifest(config, senator_handles, &digests);
    let manifest_path = out_dir.join("manifest.toml");
    std::fs::write(&manifest_path, manifest).map_err(write_err(&manifest_path))?;

    let mut truth_csv = String::from("user_id,state,latent\n");
    for user in users {
        writeln!(
            truth_csv,
            "{},{},{}",
            user.id,
            user.state,
            user.latent.as_str()
        )
        .unwrap();
    }
    let truth_path = out_dir.join("ground_truth.csv");
    std::fs::write(&truth_path, truth_csv).map_err(write_err(&truth_path))?;
    Ok(())
}

fn render_manifest(
    config: &SynthConfig,
    senator_handles: &[String],
    digests: &[(String, String)],
) -> String {
    let digest_of = |handle: &str| -> &str {
        &digests
            .iter()
            .find(|(h, _)| h == handle)
            .expect("every entity was emitted")
            .1
    };
    let mut out = String::new();
    writeln!(out, "schema = \"{MANIFEST_SCHEMA}\"").unwrap();
    writeln!(out, "collected_at = \"synthetic-seed-{:016x}\"", config.seed).unwrap();
    out.push_str("states = [");
    for (i, s) in config.states.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "\"{}\"", s.code).unwrap();
    }
    out.push_str("]\n");

    if config.senate.independents > 0 {
        out.push_str("\n[caucus_rule]\n");
        for i in 0..config.senate.independents {
            writeln!(out, "sen_i_{i:03} = \"Democrat\"").unwrap();
        }
    }

    let entity = |out: &mut String, handle: &str, kind: &str, extra: &[(&str, &str)]| {
        out.push_str("\n[[entities]]\n");
        writeln!(out, "handle = \"{handle}\"").unwrap();
        writeln!(out, "kind = \"{kind}\"").unwrap();
        for (key, value) in extra {
            writeln!(out, "{key} = \"{value}\"").unwrap();
        }
        writeln!(out, "follower_file = \"followers/{handle}.txt\"").unwrap();
        writeln!(out, "digest = \"{}\"", digest_of(handle)).unwrap();
    };

    for c in &config.candidates {
        entity(&mut out, &c.handle, "candidate", &[("party", c.party.as_str())]);
    }
    for (i, handle) in senator_handles.iter().enumerate() {
        let party = if i < config.senate.democrats as usize {
            "Democrat"
        } else if i < (config.senate.democrats + config.senate.republicans) as usize {
            "Republican"
        } else {
            "Independent"
        };
        entity(&mut out, handle, "senator", &[("party", party)]);
    }
    for t in &config.teams {
        let name = t.name.clone().unwrap_or_else(|| t.handle.clone());
        entity(
            &mut out,
            &t.handle,
            "team",
            &[
                ("league", t.league.as_str()),
                ("state", t.state.as_str()),
                ("name", name.as_str()),
            ],
        );
    }
    out
}
