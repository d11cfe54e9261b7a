//! Fixture builders shared by unit, integration, and acceptance tests.

use std::fmt::Write as _;

/// The six-state NBA/NFL roster used by the shipped sample configs:
/// `(handle, league, state, name)`.
pub const SIX_STATE_TEAMS: [(&str, &str, &str, &str); 28] = [
    ("nets", "NBA", "NY", "Nets"),
    ("knicks", "NBA", "NY", "Knicks"),
    ("bills", "NFL", "NY", "Bills"),
    ("jets", "NFL", "NY", "Jets"),
    ("giants", "NFL", "NY", "Giants"),
    ("warriors", "NBA", "CA", "Warriors"),
    ("clippers", "NBA", "CA", "Clippers"),
    ("lakers", "NBA", "CA", "Lakers"),
    ("kings", "NBA", "CA", "Kings"),
    ("rams", "NFL", "CA", "Rams"),
    ("chargers", "NFL", "CA", "Chargers"),
    ("raiders", "NFL", "CA", "Raiders"),
    ("niners", "NFL", "CA", "49ers"),
    ("cavaliers", "NBA", "OH", "Cavaliers"),
    ("browns", "NFL", "OH", "Browns"),
    ("bengals", "NFL", "OH", "Bengals"),
    ("heat", "NBA", "FL", "Heat"),
    ("magic", "NBA", "FL", "Magic"),
    ("jaguars", "NFL", "FL", "Jaguars"),
    ("dolphins", "NFL", "FL", "Dolphins"),
    ("buccaneers", "NFL", "FL", "Buccaneers"),
    ("mavericks", "NBA", "TX", "Mavericks"),
    ("rockets", "NBA", "TX", "Rockets"),
    ("spurs", "NBA", "TX", "Spurs"),
    ("cowboys", "NFL", "TX", "Cowboys"),
    ("texans", "NFL", "TX", "Texans"),
    ("hawks", "NBA", "GA", "Hawks"),
    ("falcons", "NFL", "GA", "Falcons"),
];

/// Manifest with 3 candidates, a 100-seat senate (45 D, 53 R, 2 independents
/// caucusing Democrat), and the first `n_teams` entries of the six-state
/// roster.
pub fn paper_roster_manifest(n_teams: usize) -> String {
    assert!(n_teams <= SIX_STATE_TEAMS.len());
    let mut out = String::new();
    out.push_str("states = [\"NY\", \"CA\", \"OH\", \"FL\", \"TX\", \"GA\"]\n\n");
    out.push_str("[caucus_rule]\nsen_i_00 = \"Democrat\"\nsen_i_01 = \"Democrat\"\n");

    for (handle, party) in [
        ("trump", "Republican"),
        ("biden", "Democrat"),
        ("sanders", "Democrat"),
    ] {
        push_entity(&mut out, handle, "candidate", Some(party), None, None, None);
    }
    for i in 0..45 {
        let handle = format!("sen_d_{i:02}");
        push_entity(&mut out, &handle, "senator", Some("Democrat"), None, None, None);
    }
    for i in 0..53 {
        let handle = format!("sen_r_{i:02}");
        push_entity(&mut out, &handle, "senator", Some("Republican"), None, None, None);
    }
    for i in 0..2 {
        let handle = format!("sen_i_{i:02}");
        push_entity(&mut out, &handle, "senator", Some("Independent"), None, None, None);
    }
    for (handle, league, state, name) in SIX_STATE_TEAMS.iter().take(n_teams) {
        push_entity(
            &mut out,
            handle,
            "team",
            None,
            Some(league),
            Some(state),
            Some(name),
        );
    }
    out
}

/// Minimal valid universe: two candidates, three senators (one independent),
/// one team per league, a single state.
pub fn small_manifest() -> String {
    let mut out = String::new();
    out.push_str("states = [\"TX\"]\n\n[caucus_rule]\nsen_i_00 = \"Democrat\"\n");
    push_entity(&mut out, "cand_d", "candidate", Some("Democrat"), None, None, None);
    push_entity(&mut out, "cand_r", "candidate", Some("Republican"), None, None, None);
    push_entity(&mut out, "sen_d_00", "senator", Some("Democrat"), None, None, None);
    push_entity(&mut out, "sen_r_00", "senator", Some("Republican"), None, None, None);
    push_entity(&mut out, "sen_i_00", "senator", Some("Independent"), None, None, None);
    push_entity(&mut out, "team_a", "team", None, Some("NBA"), Some("TX"), Some("Team A"));
    push_entity(&mut out, "team_b", "team", None, Some("NFL"), Some("TX"), Some("Team B"));
    out
}

/// Free-form manifest builder for oracle and property tests.
/// `senators` pairs are `(handle, party)`; an `"Independent"` party entry
/// needs a matching `(handle, party)` pair in `caucus`.
pub fn manifest_with(
    states: &[&str],
    caucus: &[(&str, &str)],
    candidates: &[(&str, &str)],
    senators: &[(&str, &str)],
    teams: &[(&str, &str, &str)],
) -> String {
    let mut out = String::new();
    out.push_str("states = [");
    for (i, s) in states.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "\"{s}\"").unwrap();
    }
    out.push_str("]\n");
    if !caucus.is_empty() {
        out.push_str("\n[caucus_rule]\n");
        for (handle, party) in caucus {
            writeln!(out, "{handle} = \"{party}\"").unwrap();
        }
    }
    for (handle, party) in candidates {
        push_entity(&mut out, handle, "candidate", Some(party), None, None, None);
    }
    for (handle, party) in senators {
        push_entity(&mut out, handle, "senator", Some(party), None, None, None);
    }
    for (handle, league, state) in teams {
        push_entity(&mut out, handle, "team", None, Some(league), Some(state), None);
    }
    out
}

fn push_entity(
    out: &mut String,
    handle: &str,
    kind: &str,
    party: Option<&str>,
    league: Option<&str>,
    state: Option<&str>,
    name: Option<&str>,
) {
    writeln!(out, "\n[[entities]]").unwrap();
    writeln!(out, "handle = \"{handle}\"").unwrap();
    writeln!(out, "kind = \"{kind}\"").unwrap();
    if let Some(p) = party {
        writeln!(out, "party = \"{p}\"").unwrap();
    }
    if let Some(l) = league {
        writeln!(out, "league = \"{l}\"").unwrap();
    }
    if let Some(s) = state {
        writeln!(out, "state = \"{s}\"").unwrap();
    }
    if let Some(n) = name {
        writeln!(out, "name = \"{n}\"").unwrap();
    }
    writeln!(out, "follower_file = \"followers/{handle}.txt\"").unwrap();
}
