//! Table emission: following ratios, senator breakdowns, and devotedness
//! ratios as CSV (full precision) or aligned text (three decimals).
//!
//! Output bytes depend only on the snapshot and options — never on thread
//! count or scheduling. Undefined rows are emitted with an `NA` marker and
//! collected into a warnings list instead of propagating NaN.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::idset::IdSet;
use crate::ingest::Snapshot;
use crate::metrics::CandidateRoster;
use crate::pipeline::{
    self, exclusive_fans, CdrTable, GroupingLevel, PipelineError, RatioRow, SenatorBreakdown,
};
use crate::registry::{EntityKind, League};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub level: GroupingLevel,
    pub format: ReportFormat,
    /// Size of the worker pool; `None` uses the global default.
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct ReportOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Per-league share of fans following at least one candidate.
    pub engagement: Vec<(League, f64)>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("cannot build a {threads}-thread pool: {source}")]
    ThreadPool {
        threads: usize,
        source: rayon::ThreadPoolBuildError,
    },
}

struct Computed {
    candidates: Vec<String>,
    /// (league, state, row-or-undefined)
    ratios: Vec<(League, String, Option<RatioRow>)>,
    breakdowns: Vec<(League, Option<SenatorBreakdown>)>,
    cdr: CdrTable,
    engagement: Vec<(League, f64)>,
    warnings: Vec<String>,
}

/// Runs the pipeline and writes `ratios`, `senator_breakdown`, and
/// `cdr_<level>` tables under `out_dir`, plus `warnings.txt` when any row
/// came out undefined.
pub fn write_reports(
    snapshot: &Snapshot,
    out_dir: &Path,
    opts: &ReportOptions,
) -> Result<ReportOutput, ReportError> {
    let computed = match opts.threads {
        None => compute(snapshot, opts.level)?,
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|source| ReportError::ThreadPool { threads, source })?
            .install(|| compute(snapshot, opts.level))?,
    };

    std::fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    let ext = match opts.format {
        ReportFormat::Csv => "csv",
        ReportFormat::Text => "txt",
    };

    let tables = [
        ("ratios", ratio_table(&computed)),
        ("senator_breakdown", breakdown_table(&computed)),
        (
            match opts.level {
                GroupingLevel::Sport => "cdr_sport",
                GroupingLevel::State => "cdr_state",
                GroupingLevel::Team => "cdr_team",
            },
            cdr_table_cells(&computed),
        ),
    ];
    for (name, (headers, rows)) in tables {
        let path = out_dir.join(format!("{name}.{ext}"));
        match opts.format {
            ReportFormat::Csv => write_csv(&path, &headers, &rows)?,
            ReportFormat::Text => {
                let body = render_aligned(&headers, &rows, &computed.warnings);
                std::fs::write(&path, body).map_err(|source| ReportError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
        }
        files.push(path);
    }

    if !computed.warnings.is_empty() {
        let path = out_dir.join("warnings.txt");
        let mut body = String::new();
        for warning in &computed.warnings {
            writeln!(body, "{warning}").unwrap();
        }
        std::fs::write(&path, body).map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        files.push(path);
    }

    Ok(ReportOutput {
        files,
        warnings: computed.warnings,
        engagement: computed.engagement,
    })
}

fn compute(snapshot: &Snapshot, level: GroupingLevel) -> Result<Computed, ReportError> {
    let registry = snapshot.registry();
    let roster = CandidateRoster::from_registry(registry).map_err(PipelineError::from)?;
    let candidate_sets: Vec<&IdSet> = roster
        .handles()
        .iter()
        .map(|h| snapshot.expect_set(h))
        .collect();

    let mut ratios = Vec::new();
    let mut breakdowns = Vec::new();
    let mut engagement = Vec::new();
    let mut warnings = Vec::new();

    for league in League::ALL {
        let teams = registry
            .teams_by(league, None)
            .map_err(PipelineError::from)?;
        if teams.is_empty() {
            continue;
        }
        let exclusive = exclusive_fans(snapshot, league)?;

        let mut state_fans: std::collections::BTreeMap<String, IdSet> = Default::default();
        for team in &teams {
            let state = match &team.kind {
                EntityKind::Team { state, .. } => state.clone(),
                _ => unreachable!("teams_by yields teams"),
            };
            let fans = &exclusive[&team.handle];
            state_fans
                .entry(state)
                .and_modify(|acc| *acc = acc.union(fans))
                .or_insert_with(|| fans.clone());
        }
        let league_sets: Vec<&IdSet> = state_fans.values().collect();
        let league_fans = IdSet::union_many(&league_sets);

        for (state, fans) in &state_fans {
            match pipeline::following_ratios(fans, &candidate_sets) {
                Ok(row) => ratios.push((league, state.clone(), Some(row))),
                Err(PipelineError::UndefinedRatioRow) => {
                    warnings.push(format!(
                        "ratios: {league}/{state} has no candidate overlap; row marked NA"
                    ));
                    ratios.push((league, state.clone(), None));
                }
                Err(err) => return Err(err.into()),
            }
        }

        match pipeline::senator_breakdown(&league_fans, snapshot) {
            Ok(row) => breakdowns.push((league, Some(row))),
            Err(PipelineError::UndefinedBreakdown) => {
                warnings.push(format!(
                    "senator_breakdown: no {league} fan follows a senator; row marked NA"
                ));
                breakdowns.push((league, None));
            }
            Err(err) => return Err(err.into()),
        }

        if !league_fans.is_empty() {
            engagement.push((
                league,
                pipeline::engagement_rate(&league_fans, &candidate_sets)?,
            ));
        } else {
            warnings.push(format!("engagement: {league} has no fans"));
        }
    }

    let cdr = pipeline::run_cdr(snapshot, level)?;
    for row in &cdr.rows {
        if row.cdr.is_none() {
            warnings.push(format!(
                "cdr_{}: {} has no score mass (cohort {}); ratios marked NA",
                level.as_str(),
                row_key(row),
                row.cohort_size
            ));
        }
    }

    Ok(Computed {
        candidates: roster.handles().to_vec(),
        ratios,
        breakdowns,
        cdr,
        engagement,
        warnings,
    })
}

fn row_key(row: &crate::pipeline::CdrRow) -> String {
    let mut key = row.league.to_string();
    if let Some(state) = &row.state {
        key.push('/');
        key.push_str(state);
    }
    if let Some(team) = &row.team {
        key.push('/');
        key.push_str(team);
    }
    key
}

#[derive(Debug, Clone)]
enum CellValue {
    Str(String),
    Int(u64),
    /// `None` renders as the `NA` marker.
    Num(Option<f64>),
}

impl CellValue {
    /// CSV form: numbers at full round-trip precision.
    fn csv(&self) -> String {
        match self {
            CellValue::Str(s) => s.clone(),
            CellValue::Int(v) => v.to_string(),
            CellValue::Num(Some(v)) => format!("{v}"),
            CellValue::Num(None) => "NA".to_string(),
        }
    }

    /// Text form: three decimals.
    fn text(&self) -> String {
        match self {
            CellValue::Str(s) => s.clone(),
            CellValue::Int(v) => v.to_string(),
            CellValue::Num(Some(v)) => format!("{v:.3}"),
            CellValue::Num(None) => "NA".to_string(),
        }
    }
}

fn na_cells(n: usize) -> impl Iterator<Item = CellValue> {
    (0..n).map(|_| CellValue::Num(None))
}

fn ratio_table(computed: &Computed) -> (Vec<String>, Vec<Vec<CellValue>>) {
    let mut headers = vec!["league".to_string(), "state".to_string()];
    headers.extend(computed.candidates.iter().cloned());
    let rows = computed
        .ratios
        .iter()
        .map(|(league, state, row)| {
            let mut cells = vec![
                CellValue::Str(league.to_string()),
                CellValue::Str(state.clone()),
            ];
            match row {
                Some(r) => cells.extend(r.ratios.iter().map(|&v| CellValue::Num(Some(v)))),
                None => cells.extend(na_cells(computed.candidates.len())),
            }
            cells
        })
        .collect();
    (headers, rows)
}

fn breakdown_table(computed: &Computed) -> (Vec<String>, Vec<Vec<CellValue>>) {
    let headers = vec![
        "league".to_string(),
        "only_democrat".to_string(),
        "only_republican".to_string(),
        "both".to_string(),
        "population".to_string(),
    ];
    let rows = computed
        .breakdowns
        .iter()
        .map(|(league, row)| match row {
            Some(b) => vec![
                CellValue::Str(league.to_string()),
                CellValue::Num(Some(b.only_democrat)),
                CellValue::Num(Some(b.only_republican)),
                CellValue::Num(Some(b.both)),
                CellValue::Int(b.population),
            ],
            None => vec![
                CellValue::Str(league.to_string()),
                CellValue::Num(None),
                CellValue::Num(None),
                CellValue::Num(None),
                CellValue::Int(0),
            ],
        })
        .collect();
    (headers, rows)
}

fn cdr_table_cells(computed: &Computed) -> (Vec<String>, Vec<Vec<CellValue>>) {
    let level = computed.cdr.level;
    let mut headers = vec!["league".to_string()];
    if matches!(level, GroupingLevel::State | GroupingLevel::Team) {
        headers.push("state".to_string());
    }
    if matches!(level, GroupingLevel::Team) {
        headers.push("team".to_string());
    }
    headers.push("cohort_size".to_string());
    for c in &computed.candidates {
        headers.push(format!("cds_{c}"));
    }
    for c in &computed.candidates {
        headers.push(format!("cdr_{c}"));
    }

    let rows = computed
        .cdr
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![CellValue::Str(row.league.to_string())];
            if let Some(state) = &row.state {
                cells.push(CellValue::Str(state.clone()));
            }
            if let Some(team) = &row.team {
                cells.push(CellValue::Str(team.clone()));
            }
            cells.push(CellValue::Int(row.cohort_size));
            cells.extend(row.cds.iter().map(|&v| CellValue::Num(Some(v))));
            match &row.cdr {
                Some(cdr) => cells.extend(cdr.iter().map(|&v| CellValue::Num(Some(v)))),
                None => cells.extend(na_cells(computed.candidates.len())),
            }
            cells
        })
        .collect();
    (headers, rows)
}

fn write_csv(path: &Path, headers: &[String], rows: &[Vec<CellValue>]) -> Result<(), ReportError> {
    let file = std::fs::File::create(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(row.iter().map(|c| c.csv()))?;
    }
    writer.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn render_aligned(headers: &[String], rows: &[Vec<CellValue>], warnings: &[String]) -> String {
    let mut grid: Vec<Vec<String>> = vec![headers.to_vec()];
    grid.extend(rows.iter().map(|r| r.iter().map(|c| c.text()).collect()));
    let widths: Vec<usize> = (0..headers.len())
        .map(|col| grid.iter().map(|r| r[col].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        for (col, cell) in row.iter().enumerate() {
            if col > 0 {
                out.push_str("  ");
            }
            write!(out, "{cell:<width$}", width = widths[col]).unwrap();
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    if !warnings.is_empty() {
        out.push_str("\nWarnings:\n");
        for warning in warnings {
            writeln!(out, "- {warning}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idset::UserId;
    use crate::registry::Registry;
    use crate::testutil::manifest_with;
    use std::collections::HashMap;

    fn snapshot() -> Snapshot {
        let manifest = manifest_with(
            &["AA", "BB"],
            &[],
            &[("cand_r", "Republican"), ("cand_d", "Democrat")],
            &[("sen_d", "Democrat"), ("sen_r", "Republican")],
            &[
                ("alpha", "NBA", "AA"),
                ("beta", "NBA", "BB"),
                ("gamma", "NFL", "AA"),
                ("delta", "NFL", "BB"),
            ],
        );
        let registry = Registry::from_toml_str(&manifest).unwrap();
        let data: &[(&str, &[u64])] = &[
            ("alpha", &[1, 2, 3]),
            ("beta", &[4, 5]),
            ("gamma", &[1, 6]),
            ("delta", &[7]),
            ("sen_d", &[1, 2, 4, 6]),
            ("sen_r", &[2, 5, 7]),
            ("cand_r", &[2, 5, 7]),
            ("cand_d", &[1, 4, 6]),
        ];
        let mut sets: HashMap<String, IdSet> = registry
            .entities()
            .iter()
            .map(|e| (e.handle.clone(), IdSet::new()))
            .collect();
        for (handle, ids) in data {
            sets.insert(
                handle.to_string(),
                IdSet::build(ids.iter().map(|&v| UserId(v))),
            );
        }
        Snapshot::from_parts(registry, sets, "test").unwrap()
    }

    #[test]
    fn csv_reports_are_parseable_and_column_complete() {
        let dir = tempfile::tempdir().unwrap();
        let out = write_reports(
            &snapshot(),
            dir.path(),
            &ReportOptions {
                level: GroupingLevel::State,
                format: ReportFormat::Csv,
                threads: None,
            },
        )
        .unwrap();
        assert_eq!(out.files.len(), 3, "no warnings expected: {:?}", out.warnings);
        for path in &out.files {
            let mut reader = csv::Reader::from_path(path).unwrap();
            let width = reader.headers().unwrap().len();
            let mut records = 0;
            for record in reader.records() {
                assert_eq!(record.unwrap().len(), width);
                records += 1;
            }
            assert!(records > 0, "{path:?} has no rows");
        }
    }

    #[test]
    fn state_cdr_csv_has_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        write_reports(
            &snapshot(),
            dir.path(),
            &ReportOptions {
                level: GroupingLevel::State,
                format: ReportFormat::Csv,
                threads: None,
            },
        )
        .unwrap();
        let mut reader = csv::Reader::from_path(dir.path().join("cdr_state.csv")).unwrap();
        let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(
            headers,
            vec![
                "league",
                "state",
                "cohort_size",
                "cds_cand_r",
                "cds_cand_d",
                "cdr_cand_r",
                "cdr_cand_d"
            ]
        );
        // 2 leagues x 2 states
        assert_eq!(reader.records().count(), 4);
    }

    #[test]
    fn text_mode_rounds_to_three_decimals() {
        let dir = tempfile::tempdir().unwrap();
        write_reports(
            &snapshot(),
            dir.path(),
            &ReportOptions {
                level: GroupingLevel::Sport,
                format: ReportFormat::Text,
                threads: None,
            },
        )
        .unwrap();
        let body = std::fs::read_to_string(dir.path().join("cdr_sport.txt")).unwrap();
        // 1/3 appears in this fixture's NBA row and must print as 0.333
        assert!(body.contains("0.333"), "{body}");
        assert!(!body.contains("0.33333"), "{body}");
    }

    #[test]
    fn undefined_rows_carry_na_and_warnings() {
        // nobody follows any candidate: ratio rows and cdr rows all undefined
        let manifest = manifest_with(
            &["AA"],
            &[],
            &[("cand_r", "Republican")],
            &[("sen_d", "Democrat")],
            &[("alpha", "NBA", "AA")],
        );
        let registry = Registry::from_toml_str(&manifest).unwrap();
        let mut sets: HashMap<String, IdSet> = registry
            .entities()
            .iter()
            .map(|e| (e.handle.clone(), IdSet::new()))
            .collect();
        sets.insert("alpha".into(), IdSet::build([1, 2].map(UserId)));
        sets.insert("sen_d".into(), IdSet::build([1].map(UserId)));
        let snapshot = Snapshot::from_parts(registry, sets, "test").unwrap();

        let dir = tempfile::tempdir().unwrap();
        let out = write_reports(
            &snapshot,
            dir.path(),
            &ReportOptions {
                level: GroupingLevel::Team,
                format: ReportFormat::Csv,
                threads: None,
            },
        )
        .unwrap();
        assert!(!out.warnings.is_empty());
        assert!(out
            .files
            .iter()
            .any(|p| p.file_name().unwrap() == "warnings.txt"));
        let ratios = std::fs::read_to_string(dir.path().join("ratios.csv")).unwrap();
        assert!(ratios.lines().nth(1).unwrap().ends_with("NA"));
        let cdr = std::fs::read_to_string(dir.path().join("cdr_team.csv")).unwrap();
        assert!(cdr.lines().nth(1).unwrap().contains("NA"));
    }

    #[test]
    fn output_bytes_are_thread_count_independent() {
        let snapshot = snapshot();
        let mut blobs: Vec<Vec<u8>> = Vec::new();
        for threads in [1usize, 4] {
            let dir = tempfile::tempdir().unwrap();
            let out = write_reports(
                &snapshot,
                dir.path(),
                &ReportOptions {
                    level: GroupingLevel::Team,
                    format: ReportFormat::Csv,
                    threads: Some(threads),
                },
            )
            .unwrap();
            let mut all = Vec::new();
            for path in &out.files {
                all.extend(std::fs::read(path).unwrap());
            }
            blobs.push(all);
        }
        assert_eq!(blobs[0], blobs[1]);
    }
}
