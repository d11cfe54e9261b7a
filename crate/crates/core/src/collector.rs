//! Cursor-paginated follower-ID collection with a pluggable transport.
//!
//! The transport and clock are injected so every behavior here — pagination,
//! retry backoff, rate-limit waits, cursor-loop detection — runs against an
//! in-process script in tests, with no real time and no network. A live HTTP
//! transport is deliberately out of scope; [`StubHttpTransport`] marks the
//! seam where one would plug in.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::{Component, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::idset::{IdSet, UserId};
use crate::ingest::sha256_tag;
use crate::registry::Registry;

/// Follower-ID endpoints commonly cap pages at this size.
pub const MAX_PAGE_SIZE: u32 = 5000;
pub const DEFAULT_PAGE_SIZE: u32 = 5000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRequest {
    pub handle: String,
    /// `None` requests the first page.
    pub cursor: Option<String>,
    pub page_size: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateLimit {
    pub remaining: u32,
    /// Clock tick at which the window refills.
    pub reset_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageResponse {
    pub ids: Vec<UserId>,
    /// `None` is the terminal marker ending pagination.
    pub next_cursor: Option<String>,
    pub rate_limit: RateLimit,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("transient transport failure: {0}")]
    Transient(String),
    #[error("permanent transport failure: {0}")]
    Permanent(String),
}

/// Wire-neutral page exchange. Implementations must be shareable across
/// collection workers.
pub trait Transport: Sync {
    fn fetch(&self, request: &PageRequest) -> Result<PageResponse, TransportError>;
}

/// Injectable time source. `sleep_until` must return once the clock reaches
/// the target without polling the transport.
pub trait Clock: Sync {
    fn now(&self) -> u64;
    fn sleep_until(&self, target: u64);
}

/// Wall clock in whole seconds since the Unix epoch.
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    fn sleep_until(&self, target: u64) {
        let now = self.now();
        if target > now {
            std::thread::sleep(std::time::Duration::from_secs(target - now));
        }
    }
}

/// Test clock: jumps instantly and records every wait.
#[derive(Default)]
pub struct ManualClock {
    now: Mutex<u64>,
    waits: Mutex<Vec<(u64, u64)>>,
}

impl ManualClock {
    pub fn starting_at(now: u64) -> Self {
        ManualClock {
            now: Mutex::new(now),
            waits: Mutex::new(Vec::new()),
        }
    }

    /// `(from, to)` pairs, one per sleep.
    pub fn waits(&self) -> Vec<(u64, u64)> {
        self.waits.lock().unwrap().clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        *self.now.lock().unwrap()
    }

    fn sleep_until(&self, target: u64) {
        let mut now = self.now.lock().unwrap();
        let from = *now;
        if target > from {
            *now = target;
        }
        self.waits.lock().unwrap().push((from, target));
    }
}

/// Retry budget for transient failures, with a backoff schedule in clock
/// ticks. The last schedule entry repeats once exhausted.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff: vec![1, 2, 4],
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> u64 {
        match self.backoff.get(attempt as usize) {
            Some(&d) => d,
            None => self.backoff.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    Running,
    RateLimited { until: u64 },
    Done,
}

/// Progress record of one entity's collection; counters only grow and the
/// state only moves forward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionJob {
    pub handle: String,
    pub pages_fetched: u64,
    /// Raw ids accumulated across pages, before dedup.
    pub ids_accumulated: u64,
    pub rate_limit_waits: u64,
    pub state: JobState,
}

#[derive(Debug)]
pub struct CollectOutcome {
    pub ids: IdSet,
    pub job: CollectionJob,
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("{handle}: permanent failure after {attempts} attempt(s): {message}")]
    PermanentFailure {
        handle: String,
        attempts: u32,
        message: String,
    },
    #[error("{handle}: retries exhausted after {attempts} attempt(s): {message}")]
    RetriesExhausted {
        handle: String,
        attempts: u32,
        message: String,
    },
    #[error("{handle}: cursor {cursor:?} repeated without terminating; aborting")]
    CursorLoop { handle: String, cursor: String },
    #[error("follower file for {handle:?} escapes the output root: {path}")]
    PathEscapesRoot { handle: String, path: PathBuf },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Drains one entity's cursor chain: unions all pages (deduplicated),
/// retries transient failures per policy, and waits out exhausted rate
/// limits via the injected clock.
pub fn collect<T, C>(
    transport: &T,
    clock: &C,
    handle: &str,
    policy: &RetryPolicy,
    page_size: u32,
) -> Result<CollectOutcome, CollectError>
where
    T: Transport + ?Sized,
    C: Clock + ?Sized,
{
    let page_size = page_size.clamp(1, MAX_PAGE_SIZE);
    let mut job = CollectionJob {
        handle: handle.to_string(),
        pages_fetched: 0,
        ids_accumulated: 0,
        rate_limit_waits: 0,
        state: JobState::Running,
    };
    let mut seen_cursors: HashSet<String> = HashSet::new();
    let mut cursor: Option<String> = None;
    let mut raw: Vec<u64> = Vec::new();

    loop {
        let request = PageRequest {
            handle: handle.to_string(),
            cursor: cursor.clone(),
            page_size,
        };
        let response = fetch_with_retries(transport, clock, &request, policy, handle)?;
        job.pages_fetched += 1;
        job.ids_accumulated += response.ids.len() as u64;
        raw.extend(response.ids.iter().map(|u| u.0));

        match response.next_cursor {
            None => break,
            Some(next) => {
                if !seen_cursors.insert(next.clone()) {
                    return Err(CollectError::CursorLoop {
                        handle: handle.to_string(),
                        cursor: next,
                    });
                }
                if response.rate_limit.remaining == 0 {
                    job.state = JobState::RateLimited {
                        until: response.rate_limit.reset_at,
                    };
                    job.rate_limit_waits += 1;
                    clock.sleep_until(response.rate_limit.reset_at);
                    job.state = JobState::Running;
                }
                cursor = Some(next);
            }
        }
    }
    job.state = JobState::Done;
    let ids = IdSet::build(raw.into_iter().map(UserId));
    Ok(CollectOutcome { ids, job })
}

fn fetch_with_retries<T, C>(
    transport: &T,
    clock: &C,
    request: &PageRequest,
    policy: &RetryPolicy,
    handle: &str,
) -> Result<PageResponse, CollectError>
where
    T: Transport + ?Sized,
    C: Clock + ?Sized,
{
    let mut attempt = 0u32;
    loop {
        match transport.fetch(request) {
            Ok(response) => return Ok(response),
            Err(TransportError::Permanent(message)) => {
                return Err(CollectError::PermanentFailure {
                    handle: handle.to_string(),
                    attempts: attempt + 1,
                    message,
                })
            }
            Err(TransportError::Transient(message)) => {
                if attempt >= policy.max_retries {
                    return Err(CollectError::RetriesExhausted {
                        handle: handle.to_string(),
                        attempts: attempt + 1,
                        message,
                    });
                }
                let delay = policy.delay(attempt);
                if delay > 0 {
                    clock.sleep_until(clock.now() + delay);
                }
                attempt += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectedEntry {
    pub handle: String,
    pub path: PathBuf,
    pub digest: String,
    pub pages_fetched: u64,
    pub raw_ids: u64,
    pub distinct_ids: u64,
}

#[derive(Debug, Clone, Default)]
pub struct CollectAllReport {
    /// One entry per entity, in registry order.
    pub entries: Vec<CollectedEntry>,
}

impl CollectAllReport {
    /// Manifest fragment mapping each handle to its follower-file digest.
    pub fn digest_fragment_toml(&self) -> String {
        let map: BTreeMap<&str, &str> = self
            .entries
            .iter()
            .map(|e| (e.handle.as_str(), e.digest.as_str()))
            .collect();
        let mut out = String::from("[digests]\n");
        for (handle, digest) in map {
            out.push_str(&format!("{handle} = \"{digest}\"\n"));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum CollectAllError {
    #[error("collection failed for {handle:?} ({completed} of {total} entities done): {source}")]
    JobFailed {
        handle: String,
        completed: usize,
        total: usize,
        /// Handles that finished before the abort.
        completed_handles: Vec<String>,
        source: CollectError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Collects every registry entity into binary follower files under
/// `out_dir`, running at most `concurrency_limit` jobs at once. Output bytes
/// are identical for any concurrency level. A fatal job error aborts the run
/// with a partial-progress report; files already written stay on disk.
pub fn collect_all<T, C>(
    transport: &T,
    clock: &C,
    registry: &Registry,
    policy: &RetryPolicy,
    page_size: u32,
    concurrency_limit: usize,
    out_dir: &std::path::Path,
) -> Result<CollectAllReport, CollectAllError>
where
    T: Transport + ?Sized,
    C: Clock + ?Sized,
{
    let entities = registry.entities();
    let total = entities.len();
    let next: AtomicUsize = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Mutex<Vec<Option<CollectedEntry>>> = Mutex::new(vec![None; total]);
    let failures: Mutex<Vec<(usize, CollectError)>> = Mutex::new(Vec::new());

    let workers = concurrency_limit.max(1).min(total.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if abort.load(Ordering::Relaxed) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= total {
                    break;
                }
                match collect_one(transport, clock, registry, index, policy, page_size, out_dir) {
                    Ok(entry) => {
                        log::info!("collected {}", entry.handle);
                        results.lock().unwrap()[index] = Some(entry);
                    }
                    Err(err) => {
                        failures.lock().unwrap().push((index, err));
                        abort.store(true, Ordering::Relaxed);
                    }
                }
            });
        }
    });

    let results = results.into_inner().unwrap();
    let mut failures = failures.into_inner().unwrap();
    failures.sort_by_key(|(index, _)| *index);
    if let Some((index, source)) = failures.into_iter().next() {
        let completed_handles: Vec<String> = results
            .iter()
            .flatten()
            .map(|e| e.handle.clone())
            .collect();
        return Err(CollectAllError::JobFailed {
            handle: entities[index].handle.clone(),
            completed: completed_handles.len(),
            total,
            completed_handles,
            source,
        });
    }

    let report = CollectAllReport {
        entries: results
            .into_iter()
            .map(|e| e.expect("no failure recorded"))
            .collect(),
    };
    std::fs::write(out_dir.join("digests.toml"), report.digest_fragment_toml())?;
    Ok(report)
}

fn collect_one<T, C>(
    transport: &T,
    clock: &C,
    registry: &Registry,
    index: usize,
    policy: &RetryPolicy,
    page_size: u32,
    out_dir: &std::path::Path,
) -> Result<CollectedEntry, CollectError>
where
    T: Transport + ?Sized,
    C: Clock + ?Sized,
{
    let entity = &registry.entities()[index];
    let rel = &entity.follower_file;
    if rel.is_absolute() || rel.components().any(|c| matches!(c, Component::ParentDir)) {
        return Err(CollectError::PathEscapesRoot {
            handle: entity.handle.clone(),
            path: rel.clone(),
        });
    }
    let outcome = collect(transport, clock, &entity.handle, policy, page_size)?;
    let path = out_dir.join(rel);
    let io_err = |source| CollectError::Io {
        path: path.clone(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let bytes = outcome.ids.to_bytes();
    std::fs::write(&path, &bytes).map_err(io_err)?;
    Ok(CollectedEntry {
        handle: entity.handle.clone(),
        path: rel.clone(),
        digest: sha256_tag(&bytes),
        pages_fetched: outcome.job.pages_fetched,
        raw_ids: outcome.job.ids_accumulated,
        distinct_ids: outcome.ids.len(),
    })
}

/// Scripted in-process transport: each handle gets a queue of events served
/// in order. Every request is recorded for assertions.
#[derive(Default)]
pub struct ScriptedTransport {
    scripts: Mutex<HashMap<String, VecDeque<ScriptedEvent>>>,
    requests: Mutex<Vec<PageRequest>>,
}

#[derive(Debug, Clone)]
pub enum ScriptedEvent {
    Page(PageResponse),
    Transient(String),
    Permanent(String),
}

impl ScriptedEvent {
    /// Page with a healthy rate limit.
    pub fn page(ids: &[u64], next_cursor: Option<&str>) -> ScriptedEvent {
        ScriptedEvent::page_with_limit(ids, next_cursor, 100, 0)
    }

    pub fn page_with_limit(
        ids: &[u64],
        next_cursor: Option<&str>,
        remaining: u32,
        reset_at: u64,
    ) -> ScriptedEvent {
        ScriptedEvent::Page(PageResponse {
            ids: ids.iter().map(|&v| UserId(v)).collect(),
            next_cursor: next_cursor.map(str::to_string),
            rate_limit: RateLimit { remaining, reset_at },
        })
    }
}

impl ScriptedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn script(&self, handle: &str, events: Vec<ScriptedEvent>) {
        self.scripts
            .lock()
            .unwrap()
            .insert(handle.to_string(), events.into());
    }

    pub fn requests(&self) -> Vec<PageRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn fetch_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    /// Scripts deterministic single-page responses for every registry
    /// entity; the demo mode behind the CLI `collect` subcommand.
    pub fn demo(registry: &Registry, seed: u64, ids_per_entity: u64) -> ScriptedTransport {
        let transport = ScriptedTransport::new();
        for (k, entity) in registry.entities().iter().enumerate() {
            let ids: Vec<u64> = (0..ids_per_entity)
                .map(|i| mix64(seed ^ mix64(((k as u64) << 32) | i)))
                .collect();
            transport.script(&entity.handle, vec![ScriptedEvent::page(&ids, None)]);
        }
        transport
    }
}

impl Transport for ScriptedTransport {
    fn fetch(&self, request: &PageRequest) -> Result<PageResponse, TransportError> {
        self.requests.lock().unwrap().push(request.clone());
        let mut scripts = self.scripts.lock().unwrap();
        let queue = scripts
            .get_mut(&request.handle)
            .ok_or_else(|| TransportError::Permanent(format!("no script for {}", request.handle)))?;
        match queue.pop_front() {
            Some(ScriptedEvent::Page(response)) => Ok(response),
            Some(ScriptedEvent::Transient(message)) => Err(TransportError::Transient(message)),
            Some(ScriptedEvent::Permanent(message)) => Err(TransportError::Permanent(message)),
            None => Err(TransportError::Permanent("script exhausted".to_string())),
        }
    }
}

/// Placeholder for a live HTTP transport; always fails. Keeping it here pins
/// the integration seam without pulling network code into the engine.
pub struct StubHttpTransport;

impl Transport for StubHttpTransport {
    fn fetch(&self, _request: &PageRequest) -> Result<PageResponse, TransportError> {
        Err(TransportError::Permanent(
            "no live transport is configured in this build".to_string(),
        ))
    }
}

/// Bijective 64-bit mixer (splitmix-style finalizer).
pub(crate) fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::manifest_with;

    fn elements(s: &IdSet) -> Vec<u64> {
        s.iter().map(|u| u.0).collect()
    }

    #[test]
    fn pagination_unions_pages() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![
                ScriptedEvent::page(&[1, 2], Some("c1")),
                ScriptedEvent::page(&[3], None),
            ],
        );
        let clock = ManualClock::starting_at(0);
        let outcome = collect(&transport, &clock, "acct", &RetryPolicy::default(), 5000).unwrap();
        assert_eq!(elements(&outcome.ids), vec![1, 2, 3]);
        assert_eq!(outcome.job.pages_fetched, 2);
        assert_eq!(outcome.job.ids_accumulated, 3);
        assert_eq!(outcome.job.state, JobState::Done);
        assert!(clock.waits().is_empty());
    }

    #[test]
    fn page_size_is_clamped_to_the_bound() {
        let transport = ScriptedTransport::new();
        transport.script("acct", vec![ScriptedEvent::page(&[1], None)]);
        let clock = ManualClock::starting_at(0);
        collect(&transport, &clock, "acct", &RetryPolicy::default(), 99_999).unwrap();
        assert_eq!(transport.requests()[0].page_size, MAX_PAGE_SIZE);
    }

    #[test]
    fn cross_page_duplicates_dedup_but_count_raw() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![
                ScriptedEvent::page(&[1, 2], Some("c1")),
                ScriptedEvent::page(&[2, 3], None),
            ],
        );
        let clock = ManualClock::starting_at(0);
        let outcome = collect(&transport, &clock, "acct", &RetryPolicy::default(), 5000).unwrap();
        assert_eq!(outcome.job.ids_accumulated, 4);
        assert_eq!(elements(&outcome.ids), vec![1, 2, 3]);
    }

    #[test]
    fn repeated_cursor_is_a_loop_error() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![
                ScriptedEvent::page(&[1], Some("A")),
                ScriptedEvent::page(&[2], Some("A")),
            ],
        );
        let clock = ManualClock::starting_at(0);
        let err = collect(&transport, &clock, "acct", &RetryPolicy::default(), 5000).unwrap_err();
        match err {
            CollectError::CursorLoop { cursor, .. } => assert_eq!(cursor, "A"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn rate_limit_wait_is_exact_with_no_busy_spin() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![
                ScriptedEvent::page_with_limit(&[1], Some("c1"), 0, 50),
                ScriptedEvent::page(&[2], None),
            ],
        );
        let clock = ManualClock::starting_at(10);
        let outcome = collect(&transport, &clock, "acct", &RetryPolicy::default(), 5000).unwrap();
        assert_eq!(elements(&outcome.ids), vec![1, 2]);
        assert_eq!(outcome.job.rate_limit_waits, 1);
        // one recorded sleep straight to the reset tick, and exactly one
        // fetch per page: the wait never polls the transport
        assert_eq!(clock.waits(), vec![(10, 50)]);
        assert_eq!(transport.fetch_count(), 2);
        assert_eq!(clock.now(), 50);
    }

    #[test]
    fn terminal_page_with_exhausted_limit_does_not_wait() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![ScriptedEvent::page_with_limit(&[1], None, 0, 99)],
        );
        let clock = ManualClock::starting_at(0);
        let outcome = collect(&transport, &clock, "acct", &RetryPolicy::default(), 5000).unwrap();
        assert_eq!(outcome.job.rate_limit_waits, 0);
        assert!(clock.waits().is_empty());
    }

    #[test]
    fn transient_failures_retry_on_schedule_then_succeed() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![
                ScriptedEvent::Transient("503".into()),
                ScriptedEvent::Transient("503".into()),
                ScriptedEvent::page(&[7], None),
            ],
        );
        let clock = ManualClock::starting_at(100);
        let policy = RetryPolicy {
            max_retries: 3,
            backoff: vec![1, 2, 4],
        };
        let outcome = collect(&transport, &clock, "acct", &policy, 5000).unwrap();
        assert_eq!(elements(&outcome.ids), vec![7]);
        assert_eq!(transport.fetch_count(), 3);
        assert_eq!(clock.waits(), vec![(100, 101), (101, 103)]);
    }

    #[test]
    fn retries_exhaust_into_failure() {
        let transport = ScriptedTransport::new();
        transport.script(
            "acct",
            vec![
                ScriptedEvent::Transient("x".into()),
                ScriptedEvent::Transient("x".into()),
            ],
        );
        let clock = ManualClock::starting_at(0);
        let policy = RetryPolicy {
            max_retries: 1,
            backoff: vec![1],
        };
        let err = collect(&transport, &clock, "acct", &policy, 5000).unwrap_err();
        match err {
            CollectError::RetriesExhausted { attempts, .. } => assert_eq!(attempts, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn permanent_failure_skips_retries() {
        let transport = ScriptedTransport::new();
        transport.script("acct", vec![ScriptedEvent::Permanent("gone".into())]);
        let clock = ManualClock::starting_at(0);
        let err = collect(&transport, &clock, "acct", &RetryPolicy::default(), 5000).unwrap_err();
        assert!(matches!(
            err,
            CollectError::PermanentFailure { attempts: 1, .. }
        ));
        assert_eq!(transport.fetch_count(), 1);
        assert!(clock.waits().is_empty());
    }

    #[test]
    fn collect_is_pure_given_the_same_script() {
        let make = || {
            let t = ScriptedTransport::new();
            t.script(
                "acct",
                vec![
                    ScriptedEvent::page(&[5, 1], Some("c")),
                    ScriptedEvent::page(&[5, 9], None),
                ],
            );
            t
        };
        let clock = ManualClock::starting_at(0);
        let a = collect(&make(), &clock, "acct", &RetryPolicy::default(), 5000).unwrap();
        let b = collect(&make(), &clock, "acct", &RetryPolicy::default(), 5000).unwrap();
        assert_eq!(a.ids, b.ids);
        assert_eq!(a.job, b.job);
    }

    fn three_entity_registry() -> Registry {
        let manifest = manifest_with(
            &["AA"],
            &[],
            &[("cand", "Republican")],
            &[("sen", "Democrat")],
            &[("team", "NBA", "AA")],
        );
        Registry::from_toml_str(&manifest).unwrap()
    }

    fn scripted_for_registry() -> ScriptedTransport {
        let transport = ScriptedTransport::new();
        transport.script(
            "cand",
            vec![
                ScriptedEvent::page(&[10, 11], Some("c1")),
                ScriptedEvent::page(&[12], None),
            ],
        );
        transport.script("sen", vec![ScriptedEvent::page(&[20], None)]);
        transport.script("team", vec![ScriptedEvent::page(&[30, 31], None)]);
        transport
    }

    #[test]
    fn collect_all_writes_files_and_digests() {
        let registry = three_entity_registry();
        let dir = tempfile::tempdir().unwrap();
        let clock = ManualClock::starting_at(0);
        let report = collect_all(
            &scripted_for_registry(),
            &clock,
            &registry,
            &RetryPolicy::default(),
            5000,
            2,
            dir.path(),
        )
        .unwrap();
        assert_eq!(report.entries.len(), 3);
        for entry in &report.entries {
            let bytes = std::fs::read(dir.path().join(&entry.path)).unwrap();
            assert_eq!(sha256_tag(&bytes), entry.digest);
        }
        let fragment = std::fs::read_to_string(dir.path().join("digests.toml")).unwrap();
        assert!(fragment.contains("cand = \"sha256:"));
    }

    #[test]
    fn collect_all_output_is_concurrency_independent() {
        let registry = three_entity_registry();
        let clock = ManualClock::starting_at(0);
        let mut blobs: Vec<Vec<u8>> = Vec::new();
        for limit in [1usize, 4] {
            let dir = tempfile::tempdir().unwrap();
            collect_all(
                &scripted_for_registry(),
                &clock,
                &registry,
                &RetryPolicy::default(),
                5000,
                limit,
                dir.path(),
            )
            .unwrap();
            let mut all = Vec::new();
            for entity in registry.entities() {
                all.extend(std::fs::read(dir.path().join(&entity.follower_file)).unwrap());
            }
            all.extend(std::fs::read(dir.path().join("digests.toml")).unwrap());
            blobs.push(all);
        }
        assert_eq!(blobs[0], blobs[1]);
    }

    #[test]
    fn collect_all_reports_partial_progress_on_failure() {
        let registry = three_entity_registry();
        let transport = ScriptedTransport::new();
        transport.script("cand", vec![ScriptedEvent::page(&[1], None)]);
        transport.script("sen", vec![ScriptedEvent::Permanent("suspended".into())]);
        transport.script("team", vec![ScriptedEvent::page(&[2], None)]);
        let dir = tempfile::tempdir().unwrap();
        let clock = ManualClock::starting_at(0);
        let err = collect_all(
            &transport,
            &clock,
            &registry,
            &RetryPolicy::default(),
            5000,
            1,
            dir.path(),
        )
        .unwrap_err();
        match err {
            CollectAllError::JobFailed {
                handle,
                completed_handles,
                total,
                ..
            } => {
                assert_eq!(handle, "sen");
                assert_eq!(total, 3);
                assert_eq!(completed_handles, vec!["cand".to_string()]);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn stub_http_transport_always_fails() {
        let err = StubHttpTransport
            .fetch(&PageRequest {
                handle: "x".into(),
                cursor: None,
                page_size: 1,
            })
            .unwrap_err();
        assert!(matches!(err, TransportError::Permanent(_)));
    }
}
