//! The entity universe: candidates, senators, and teams, plus the grouping
//! dimensions (party, league, state) every aggregation keys on.
//!
//! Registries are data-driven. The manifest is a TOML document declaring the
//! state list, the caucus rule for independent senators, and one record per
//! entity; see the repository README for the schema reference.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two-party label used by all metric code. Independents are resolved to one
/// of these via the caucus rule before any counting happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Republican,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Democrat => f.write_str("Democrat"),
            Party::Republican => f.write_str("Republican"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum League {
    Nba,
    Nfl,
}

impl League {
    pub const ALL: [League; 2] = [League::Nba, League::Nfl];

    pub fn as_str(&self) -> &'static str {
        match self {
            League::Nba => "NBA",
            League::Nfl => "NFL",
        }
    }
}

impl fmt::Display for League {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Senator party as declared in the manifest, before caucus resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenatorParty {
    Declared(Party),
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntityKind {
    Candidate {
        party: Party,
    },
    Senator {
        party: SenatorParty,
    },
    Team {
        league: League,
        state: String,
        name: String,
    },
}

/// A followed account: unique handle, role, and where its follower ids live.
#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub handle: String,
    pub kind: EntityKind,
    pub follower_file: PathBuf,
    /// Optional content digest of the follower file, `sha256:<hex>`.
    pub digest: Option<String>,
}

impl Entity {
    pub fn is_candidate(&self) -> bool {
        matches!(self.kind, EntityKind::Candidate { .. })
    }

    pub fn is_senator(&self) -> bool {
        matches!(self.kind, EntityKind::Senator { .. })
    }

    pub fn is_team(&self) -> bool {
        matches!(self.kind, EntityKind::Team { .. })
    }
}

/// Maps independent senators onto one of the two parties.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaucusRule {
    pub mapping: BTreeMap<String, Party>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("manifest parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("duplicate handle {handle:?}")]
    DuplicateHandle { handle: String },
    #[error("handle {handle:?} is listed both as a senator and as a candidate")]
    SenatorListedAsCandidate { handle: String },
    #[error("entity {handle:?} has unknown kind {kind:?}")]
    UnknownKind { handle: String, kind: String },
    #[error("entity {handle:?} has unknown league {league:?}")]
    UnknownLeague { handle: String, league: String },
    #[error("entity {handle:?} has unknown party {party:?}")]
    UnknownParty { handle: String, party: String },
    #[error("candidate {handle:?} must be Democrat or Republican")]
    InvalidCandidateParty { handle: String },
    #[error("entity {handle:?} is missing required field {field:?}")]
    MissingField {
        handle: String,
        field: &'static str,
    },
    #[error("team {handle:?} references state {state:?} which is not in the state list")]
    UnknownStateCode { handle: String, state: String },
    #[error("state code {code:?} must be two ASCII uppercase letters")]
    InvalidStateCode { code: String },
    #[error("duplicate state code {code:?}")]
    DuplicateState { code: String },
    #[error("independent senator {handle:?} has no caucus mapping")]
    MissingCaucusMapping { handle: String },
    #[error("entity {handle:?} digest {digest:?} is not of the form sha256:<64 hex digits>")]
    UnsupportedDigest { handle: String, digest: String },
    #[error("registry declares no {kind}")]
    EmptyRoster { kind: &'static str },
    #[error("state {state:?} is not in the registry state list")]
    UnknownState { state: String },
    #[error("handle {handle:?} is not a senator")]
    NotASenator { handle: String },
    #[error("handle {handle:?} is not in the registry")]
    UnknownHandle { handle: String },
}

impl RegistryError {
    /// Stable short code for machine-readable violation lists.
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::Parse(_) => "manifest_parse",
            RegistryError::Io { .. } => "manifest_io",
            RegistryError::DuplicateHandle { .. } => "duplicate_handle",
            RegistryError::SenatorListedAsCandidate { .. } => "senator_listed_as_candidate",
            RegistryError::UnknownKind { .. } => "unknown_kind",
            RegistryError::UnknownLeague { .. } => "unknown_league",
            RegistryError::UnknownParty { .. } => "unknown_party",
            RegistryError::InvalidCandidateParty { .. } => "invalid_candidate_party",
            RegistryError::MissingField { .. } => "missing_field",
            RegistryError::UnknownStateCode { .. } => "unknown_state_code",
            RegistryError::InvalidStateCode { .. } => "invalid_state_code",
            RegistryError::DuplicateState { .. } => "duplicate_state",
            RegistryError::MissingCaucusMapping { .. } => "missing_caucus_mapping",
            RegistryError::UnsupportedDigest { .. } => "unsupported_digest",
            RegistryError::EmptyRoster { .. } => "empty_roster",
            RegistryError::UnknownState { .. } => "unknown_state",
            RegistryError::NotASenator { .. } => "not_a_senator",
            RegistryError::UnknownHandle { .. } => "unknown_handle",
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct RawManifest {
    #[serde(skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    collected_at: Option<String>,
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    caucus_rule: BTreeMap<String, String>,
    #[serde(default)]
    entities: Vec<RawEntity>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawEntity {
    handle: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    party: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    league: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    follower_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digest: Option<String>,
}

/// Validated, immutable entity universe. Entity order follows the manifest,
/// which also fixes candidate column order in every report.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    states: Vec<String>,
    caucus_rule: CaucusRule,
    entities: Vec<Entity>,
    by_handle: HashMap<String, usize>,
    collected_at: Option<String>,
}

impl Registry {
    /// Parses and validates a manifest document, stopping at the first
    /// violation. Use [`Registry::check_toml_str`] to collect all of them.
    pub fn from_toml_str(text: &str) -> Result<Registry, RegistryError> {
        let (registry, mut errors) = Self::build(text, true);
        match errors.pop() {
            Some(err) => Err(err),
            None => Ok(registry.expect("no errors implies a registry")),
        }
    }

    /// Parses a manifest and returns every validation violation found.
    pub fn check_toml_str(text: &str) -> Vec<RegistryError> {
        Self::build(text, false).1
    }

    pub fn load(path: &Path) -> Result<Registry, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn build(text: &str, stop_at_first: bool) -> (Option<Registry>, Vec<RegistryError>) {
        let raw: RawManifest = match toml::from_str(text) {
            Ok(raw) => raw,
            Err(err) => return (None, vec![RegistryError::Parse(err)]),
        };

        let mut errors = Vec::new();
        macro_rules! violation {
            ($err:expr) => {{
                errors.push($err);
                if stop_at_first {
                    return (None, errors);
                }
            }};
        }

        let mut states = Vec::new();
        for code in &raw.states {
            if code.len() != 2 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
                violation!(RegistryError::InvalidStateCode { code: code.clone() });
                continue;
            }
            if states.contains(code) {
                violation!(RegistryError::DuplicateState { code: code.clone() });
                continue;
            }
            states.push(code.clone());
        }

        let mut caucus_rule = CaucusRule::default();
        for (handle, party) in &raw.caucus_rule {
            match parse_party(party) {
                Some(p) => {
                    caucus_rule.mapping.insert(handle.clone(), p);
                }
                None => violation!(RegistryError::UnknownParty {
                    handle: handle.clone(),
                    party: party.clone(),
                }),
            }
        }

        let mut entities: Vec<Entity> = Vec::with_capacity(raw.entities.len());
        let mut by_handle: HashMap<String, usize> = HashMap::new();
        let mut kinds_seen: HashMap<String, &'static str> = HashMap::new();
        for raw_entity in &raw.entities {
            let handle = raw_entity.handle.clone();
            let kind_name = raw_entity.kind.as_str();
            if let Some(&prev_kind) = kinds_seen.get(&handle) {
                let pair = (prev_kind, kind_name);
                if pair == ("senator", "candidate") || pair == ("candidate", "senator") {
                    violation!(RegistryError::SenatorListedAsCandidate { handle });
                } else {
                    violation!(RegistryError::DuplicateHandle { handle });
                }
                continue;
            }

            let kind = match kind_name {
                "candidate" => match raw_entity.party.as_deref() {
                    None => {
                        violation!(RegistryError::MissingField {
                            handle,
                            field: "party",
                        });
                        continue;
                    }
                    Some(p) => match parse_party(p) {
                        Some(party) => EntityKind::Candidate { party },
                        None if p == "Independent" => {
                            violation!(RegistryError::InvalidCandidateParty { handle });
                            continue;
                        }
                        None => {
                            violation!(RegistryError::UnknownParty {
                                handle,
                                party: p.to_string(),
                            });
                            continue;
                        }
                    },
                },
                "senator" => match raw_entity.party.as_deref() {
                    None => {
                        violation!(RegistryError::MissingField {
                            handle,
                            field: "party",
                        });
                        continue;
                    }
                    Some("Independent") => {
                        if !caucus_rule.mapping.contains_key(&handle) {
                            violation!(RegistryError::MissingCaucusMapping { handle });
                            continue;
                        }
                        EntityKind::Senator {
                            party: SenatorParty::Independent,
                        }
                    }
                    Some(p) => match parse_party(p) {
                        Some(party) => EntityKind::Senator {
                            party: SenatorParty::Declared(party),
                        },
                        None => {
                            violation!(RegistryError::UnknownParty {
                                handle,
                                party: p.to_string(),
                            });
                            continue;
                        }
                    },
                },
                "team" => {
                    let league = match raw_entity.league.as_deref() {
                        None => {
                            violation!(RegistryError::MissingField {
                                handle,
                                field: "league",
                            });
                            continue;
                        }
                        Some("NBA") => League::Nba,
                        Some("NFL") => League::Nfl,
                        Some(other) => {
                            violation!(RegistryError::UnknownLeague {
                                handle,
                                league: other.to_string(),
                            });
                            continue;
                        }
                    };
                    let state = match raw_entity.state.as_deref() {
                        None => {
                            violation!(RegistryError::MissingField {
                                handle,
                                field: "state",
                            });
                            continue;
                        }
                        Some(s) => s.to_string(),
                    };
                    if !states.contains(&state) {
                        violation!(RegistryError::UnknownStateCode { handle, state });
                        continue;
                    }
                    let name = raw_entity.name.clone().unwrap_or_else(|| handle.clone());
                    EntityKind::Team {
                        league,
                        state,
                        name,
                    }
                }
                other => {
                    violation!(RegistryError::UnknownKind {
                        handle,
                        kind: other.to_string(),
                    });
                    continue;
                }
            };

            let follower_file = match &raw_entity.follower_file {
                Some(p) => PathBuf::from(p),
                None => {
                    violation!(RegistryError::MissingField {
                        handle,
                        field: "follower_file",
                    });
                    continue;
                }
            };
            if let Some(digest) = &raw_entity.digest {
                if !valid_digest(digest) {
                    violation!(RegistryError::UnsupportedDigest {
                        handle,
                        digest: digest.clone(),
                    });
                    continue;
                }
            }

            kinds_seen.insert(handle.clone(), kind_static_name(&kind));
            by_handle.insert(handle.clone(), entities.len());
            entities.push(Entity {
                handle,
                kind,
                follower_file,
                digest: raw_entity.digest.clone(),
            });
        }

        for (kind, present) in [
            ("candidate", entities.iter().any(Entity::is_candidate)),
            ("senator", entities.iter().any(Entity::is_senator)),
            ("team", entities.iter().any(Entity::is_team)),
        ] {
            if !present {
                violation!(RegistryError::EmptyRoster { kind });
            }
        }

        if errors.is_empty() {
            (
                Some(Registry {
                    states,
                    caucus_rule,
                    entities,
                    by_handle,
                    collected_at: raw.collected_at,
                }),
                errors,
            )
        } else {
            (None, errors)
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn collected_at(&self) -> Option<&str> {
        self.collected_at.as_deref()
    }

    pub fn caucus_rule(&self) -> &CaucusRule {
        &self.caucus_rule
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, handle: &str) -> Option<&Entity> {
        self.by_handle.get(handle).map(|&i| &self.entities[i])
    }

    /// Candidates in manifest order; this order fixes report columns.
    pub fn candidates(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_candidate())
    }

    pub fn senators(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_senator())
    }

    pub fn teams(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_team())
    }

    /// Teams of a league, optionally restricted to one state, sorted by
    /// handle. A state filter not present in the state list is an error.
    pub fn teams_by(
        &self,
        league: League,
        state: Option<&str>,
    ) -> Result<Vec<&Entity>, RegistryError> {
        if let Some(code) = state {
            if !self.states.iter().any(|s| s == code) {
                return Err(RegistryError::UnknownState {
                    state: code.to_string(),
                });
            }
        }
        let mut teams: Vec<&Entity> = self
            .entities
            .iter()
            .filter(|e| match &e.kind {
                EntityKind::Team {
                    league: l, state: s, ..
                } => *l == league && state.is_none_or(|code| s == code),
                _ => false,
            })
            .collect();
        teams.sort_by(|a, b| a.handle.cmp(&b.handle));
        Ok(teams)
    }

    /// Declared party with independents resolved through the caucus rule.
    pub fn senator_party(&self, handle: &str) -> Result<Party, RegistryError> {
        let entity = self.entity(handle).ok_or_else(|| RegistryError::UnknownHandle {
            handle: handle.to_string(),
        })?;
        match &entity.kind {
            EntityKind::Senator { party } => Ok(match party {
                SenatorParty::Declared(p) => *p,
                SenatorParty::Independent => *self
                    .caucus_rule
                    .mapping
                    .get(handle)
                    .expect("validated at load: every independent has a mapping"),
            }),
            _ => Err(RegistryError::NotASenator {
                handle: handle.to_string(),
            }),
        }
    }

    /// Senators whose caucus-resolved party is `party`, in manifest order.
    pub fn senators_caucusing(&self, party: Party) -> Vec<&Entity> {
        self.senators()
            .filter(|e| matches!(self.senator_party(&e.handle), Ok(p) if p == party))
            .collect()
    }

    /// Serializes back to manifest TOML. Reloading the output yields an
    /// identical registry.
    pub fn to_toml_string(&self) -> String {
        let raw = RawManifest {
            schema: Some(MANIFEST_SCHEMA.to_string()),
            collected_at: self.collected_at.clone(),
            states: self.states.clone(),
            caucus_rule: self
                .caucus_rule
                .mapping
                .iter()
                .map(|(h, p)| (h.clone(), p.to_string()))
                .collect(),
            entities: self
                .entities
                .iter()
                .map(|e| {
                    let (kind, party, league, state, name) = match &e.kind {
                        EntityKind::Candidate { party } => {
                            ("candidate", Some(party.to_string()), None, None, None)
                        }
                        EntityKind::Senator { party } => (
                            "senator",
                            Some(match party {
                                SenatorParty::Declared(p) => p.to_string(),
                                SenatorParty::Independent => "Independent".to_string(),
                            }),
                            None,
                            None,
                            None,
                        ),
                        EntityKind::Team {
                            league,
                            state,
                            name,
                        } => (
                            "team",
                            None,
                            Some(league.to_string()),
                            Some(state.clone()),
                            Some(name.clone()),
                        ),
                    };
                    RawEntity {
                        handle: e.handle.clone(),
                        kind: kind.to_string(),
                        party,
                        league,
                        state,
                        name,
                        follower_file: Some(e.follower_file.to_string_lossy().into_owned()),
                        digest: e.digest.clone(),
                    }
                })
                .collect(),
        };
        toml::to_string(&raw).expect("manifest serialization cannot fail")
    }
}

pub const MANIFEST_SCHEMA: &str = "affinity-manifest-v1";

fn parse_party(s: &str) -> Option<Party> {
    match s {
        "Democrat" => Some(Party::Democrat),
        "Republican" => Some(Party::Republican),
        _ => None,
    }
}

fn kind_static_name(kind: &EntityKind) -> &'static str {
    match kind {
        EntityKind::Candidate { .. } => "candidate",
        EntityKind::Senator { .. } => "senator",
        EntityKind::Team { .. } => "team",
    }
}

fn valid_digest(digest: &str) -> bool {
    digest
        .strip_prefix("sha256:")
        .is_some_and(|hex| hex.len() == 64 && hex.bytes().all(|b| b.is_ascii_hexdigit()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{paper_roster_manifest, small_manifest};

    #[test]
    fn paper_shaped_roster_loads_with_expected_counts() {
        let registry = Registry::from_toml_str(&paper_roster_manifest(27)).unwrap();
        assert_eq!(registry.entities().len(), 130);
        assert_eq!(registry.candidates().count(), 3);
        assert_eq!(registry.senators().count(), 100);
        assert_eq!(registry.teams().count(), 27);
    }

    #[test]
    fn duplicate_handles_are_rejected() {
        let text = r#"
states = ["TX"]
[[entities]]
handle = "x"
kind = "candidate"
party = "Democrat"
follower_file = "a.txt"
[[entities]]
handle = "x"
kind = "candidate"
party = "Republican"
follower_file = "b.txt"
"#;
        assert!(matches!(
            Registry::from_toml_str(text),
            Err(RegistryError::DuplicateHandle { .. })
        ));
    }

    #[test]
    fn senator_cannot_double_as_candidate() {
        let text = r#"
states = ["TX"]
[[entities]]
handle = "x"
kind = "senator"
party = "Democrat"
follower_file = "a.txt"
[[entities]]
handle = "x"
kind = "candidate"
party = "Democrat"
follower_file = "b.txt"
"#;
        assert!(matches!(
            Registry::from_toml_str(text),
            Err(RegistryError::SenatorListedAsCandidate { .. })
        ));
    }

    #[test]
    fn independent_without_mapping_is_rejected() {
        let text = r#"
states = ["TX"]
[[entities]]
handle = "ind"
kind = "senator"
party = "Independent"
follower_file = "a.txt"
"#;
        assert!(matches!(
            Registry::from_toml_str(text),
            Err(RegistryError::MissingCaucusMapping { .. })
        ));
    }

    #[test]
    fn independent_resolves_through_caucus_rule() {
        let registry = Registry::from_toml_str(&small_manifest()).unwrap();
        assert_eq!(
            registry.senator_party("sen_i_00").unwrap(),
            Party::Democrat
        );
        assert_eq!(
            registry.senator_party("sen_r_00").unwrap(),
            Party::Republican
        );
        assert!(matches!(
            registry.senator_party("cand_d"),
            Err(RegistryError::NotASenator { .. })
        ));
    }

    #[test]
    fn caucus_resolution_preserves_total_senator_count() {
        let registry = Registry::from_toml_str(&paper_roster_manifest(27)).unwrap();
        let d = registry.senators_caucusing(Party::Democrat).len();
        let r = registry.senators_caucusing(Party::Republican).len();
        assert_eq!(d + r, registry.senators().count());
        // 45 declared Democrats plus 2 independents caucusing with them.
        assert_eq!(d, 47);
        assert_eq!(r, 53);
    }

    #[test]
    fn teams_by_state_filters_match_roster() {
        let registry = Registry::from_toml_str(&paper_roster_manifest(28)).unwrap();
        let tx_nba: Vec<&str> = registry
            .teams_by(League::Nba, Some("TX"))
            .unwrap()
            .iter()
            .map(|e| e.handle.as_str())
            .collect();
        assert_eq!(tx_nba, vec!["mavericks", "rockets", "spurs"]);

        let ga_nfl: Vec<&str> = registry
            .teams_by(League::Nfl, Some("GA"))
            .unwrap()
            .iter()
            .map(|e| e.handle.as_str())
            .collect();
        assert_eq!(ga_nfl, vec!["falcons"]);

        assert!(matches!(
            registry.teams_by(League::Nba, Some("WA")),
            Err(RegistryError::UnknownState { .. })
        ));
    }

    #[test]
    fn teams_by_without_state_is_union_of_per_state_results() {
        let registry = Registry::from_toml_str(&paper_roster_manifest(28)).unwrap();
        for league in League::ALL {
            let all: Vec<&str> = registry
                .teams_by(league, None)
                .unwrap()
                .iter()
                .map(|e| e.handle.as_str())
                .collect();
            let mut from_states: Vec<&str> = registry
                .states()
                .to_vec()
                .iter()
                .flat_map(|s| {
                    registry
                        .teams_by(league, Some(s))
                        .unwrap()
                        .into_iter()
                        .map(|e| {
                            let handle: &str = &registry.entity(&e.handle).unwrap().handle;
                            handle
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            from_states.sort_unstable();
            let mut sorted_all = all.clone();
            sorted_all.sort_unstable();
            assert_eq!(sorted_all, from_states);
        }
    }

    #[test]
    fn manifest_roundtrip_is_identical() {
        let registry = Registry::from_toml_str(&paper_roster_manifest(28)).unwrap();
        let saved = registry.to_toml_string();
        let reloaded = Registry::from_toml_str(&saved).unwrap();
        assert_eq!(registry, reloaded);
    }

    #[test]
    fn check_collects_multiple_violations() {
        let text = r#"
states = ["TX", "TX", "texas"]
[[entities]]
handle = "a"
kind = "team"
league = "XFL"
state = "TX"
follower_file = "a.txt"
"#;
        let errors = Registry::check_toml_str(text);
        let codes: Vec<&str> = errors.iter().map(RegistryError::code).collect();
        assert!(codes.contains(&"duplicate_state"));
        assert!(codes.contains(&"invalid_state_code"));
        assert!(codes.contains(&"unknown_league"));
        assert!(codes.contains(&"empty_roster"));
    }

    #[test]
    fn empty_roster_names_the_missing_kind() {
        let text = r#"
states = ["TX"]
[[entities]]
handle = "a"
kind = "candidate"
party = "Democrat"
follower_file = "a.txt"
[[entities]]
handle = "b"
kind = "senator"
party = "Democrat"
follower_file = "b.txt"
"#;
        match Registry::from_toml_str(text) {
            Err(RegistryError::EmptyRoster { kind }) => assert_eq!(kind, "team"),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
