//! Sorted, deduplicated 64-bit ID sets with merge-based algebra.
//!
//! Ids are split into a 32-bit prefix and a 32-bit suffix. Suffixes are
//! concatenated per prefix chunk, so dense snapshots cost close to four bytes
//! per id and every operation is a linear merge over chunk pairs. Sets are
//! immutable once built and safe to share across threads.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

/// Opaque 64-bit account identifier. Any value is legal, including 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Magic bytes that open the flat binary id-set format.
pub const MAGIC: [u8; 4] = *b"IDS1";

#[derive(Debug, Error)]
pub enum IdSetError {
    #[error("bad magic bytes: expected \"IDS1\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("ids not strictly ascending at index {position}: {previous} then {current}")]
    OutOfOrder {
        position: u64,
        previous: u64,
        current: u64,
    },
    #[error("truncated stream: header declared {expected} ids, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing data after the declared {expected} ids")]
    TrailingData { expected: u64 },
    #[error("membership counting needs at least one set")]
    EmptySetSequence,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Immutable sorted set of [`UserId`]s.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdSet {
    /// Strictly ascending 32-bit prefixes, one per chunk.
    his: Vec<u32>,
    /// Exclusive end offset of each chunk within `lows`.
    ends: Vec<u32>,
    /// Concatenated 32-bit suffixes, strictly ascending within each chunk.
    lows: Vec<u32>,
}

#[inline]
fn split(id: u64) -> (u32, u32) {
    ((id >> 32) as u32, id as u32)
}

#[inline]
fn join(hi: u32, lo: u32) -> u64 {
    ((hi as u64) << 32) | lo as u64
}

impl IdSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from an arbitrary sequence; duplicates collapse silently.
    pub fn build<I: IntoIterator<Item = UserId>>(ids: I) -> Self {
        let mut raw: Vec<u64> = ids.into_iter().map(|id| id.0).collect();
        raw.sort_unstable();
        raw.dedup();
        let mut b = Builder::with_capacity(raw.len());
        for id in raw {
            b.push_ascending(id);
        }
        b.finish()
    }

    pub fn len(&self) -> u64 {
        self.lows.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.lows.is_empty()
    }

    pub fn contains(&self, id: UserId) -> bool {
        let (hi, lo) = split(id.0);
        match self.his.binary_search(&hi) {
            Ok(c) => self.chunk_lows(c).binary_search(&lo).is_ok(),
            Err(_) => false,
        }
    }

    /// Ids in ascending order.
    pub fn iter(&self) -> Iter<'_> {
        Iter {
            set: self,
            chunk: 0,
            pos: 0,
        }
    }

    #[inline]
    fn chunk_start(&self, c: usize) -> usize {
        if c == 0 {
            0
        } else {
            self.ends[c - 1] as usize
        }
    }

    #[inline]
    fn chunk_lows(&self, c: usize) -> &[u32] {
        &self.lows[self.chunk_start(c)..self.ends[c] as usize]
    }

    pub fn intersect(&self, other: &IdSet) -> IdSet {
        let mut out = Builder::default();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.his.len() && j < other.his.len() {
            match self.his[i].cmp(&other.his[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let before = out.lows.len();
                    intersect_lows(self.chunk_lows(i), other.chunk_lows(j), &mut out.lows);
                    out.seal_chunk(self.his[i], before);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.finish()
    }

    pub fn union(&self, other: &IdSet) -> IdSet {
        let mut out = Builder::default();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.his.len() || j < other.his.len() {
            let take_left = match (self.his.get(i), other.his.get(j)) {
                (Some(a), Some(b)) => match a.cmp(b) {
                    Ordering::Less => Some(true),
                    Ordering::Greater => Some(false),
                    Ordering::Equal => None,
                },
                (Some(_), None) => Some(true),
                (None, Some(_)) => Some(false),
                (None, None) => unreachable!(),
            };
            let before = out.lows.len();
            match take_left {
                Some(true) => {
                    out.lows.extend_from_slice(self.chunk_lows(i));
                    out.seal_chunk(self.his[i], before);
                    i += 1;
                }
                Some(false) => {
                    out.lows.extend_from_slice(other.chunk_lows(j));
                    out.seal_chunk(other.his[j], before);
                    j += 1;
                }
                None => {
                    union_lows(self.chunk_lows(i), other.chunk_lows(j), &mut out.lows);
                    out.seal_chunk(self.his[i], before);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.finish()
    }

    pub fn difference(&self, other: &IdSet) -> IdSet {
        let mut out = Builder::default();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.his.len() {
            match other.his.get(j) {
                Some(&bh) if bh < self.his[i] => j += 1,
                Some(&bh) if bh == self.his[i] => {
                    let before = out.lows.len();
                    difference_lows(self.chunk_lows(i), other.chunk_lows(j), &mut out.lows);
                    out.seal_chunk(self.his[i], before);
                    i += 1;
                    j += 1;
                }
                _ => {
                    let before = out.lows.len();
                    out.lows.extend_from_slice(self.chunk_lows(i));
                    out.seal_chunk(self.his[i], before);
                    i += 1;
                }
            }
        }
        out.finish()
    }

    /// Union of any number of sets. Empty input yields the empty set.
    pub fn union_many(sets: &[&IdSet]) -> IdSet {
        Self::in_at_least(sets, 1)
    }

    /// Ids present in at least `k` of the given sets (`k >= 1`).
    pub fn in_at_least(sets: &[&IdSet], k: usize) -> IdSet {
        assert!(k >= 1, "membership threshold must be at least 1");
        let mut cursors = vec![0usize; sets.len()];
        let mut out = Builder::default();
        let mut scratch: Vec<u32> = Vec::new();
        let mut hit: Vec<usize> = Vec::new();
        loop {
            let mut min_hi: Option<u32> = None;
            for (s, set) in sets.iter().enumerate() {
                if let Some(&hi) = set.his.get(cursors[s]) {
                    if min_hi.is_none_or(|m| hi < m) {
                        min_hi = Some(hi);
                    }
                }
            }
            let Some(hi) = min_hi else { break };
            hit.clear();
            for (s, set) in sets.iter().enumerate() {
                if set.his.get(cursors[s]) == Some(&hi) {
                    hit.push(s);
                }
            }
            let before = out.lows.len();
            if hit.len() == 1 {
                if k == 1 {
                    let s = hit[0];
                    out.lows.extend_from_slice(sets[s].chunk_lows(cursors[s]));
                }
            } else {
                scratch.clear();
                for &s in &hit {
                    scratch.extend_from_slice(sets[s].chunk_lows(cursors[s]));
                }
                scratch.sort_unstable();
                let mut a = 0;
                while a < scratch.len() {
                    let mut b = a;
                    while b < scratch.len() && scratch[b] == scratch[a] {
                        b += 1;
                    }
                    if b - a >= k {
                        out.lows.push(scratch[a]);
                    }
                    a = b;
                }
            }
            out.seal_chunk(hi, before);
            for &s in &hit {
                cursors[s] += 1;
            }
        }
        out.finish()
    }

    /// For every id appearing in at least one set, how many sets contain it.
    pub fn membership_counts(sets: &[&IdSet]) -> Result<HashMap<UserId, u32>, IdSetError> {
        if sets.is_empty() {
            return Err(IdSetError::EmptySetSequence);
        }
        let mut counts = HashMap::new();
        for set in sets {
            for id in set.iter() {
                *counts.entry(id).or_insert(0u32) += 1;
            }
        }
        Ok(counts)
    }

    /// Calls `f` with the position (rank within `self`) of every id shared
    /// with `other`, in ascending order.
    pub fn for_each_common_position<F: FnMut(usize)>(&self, other: &IdSet, mut f: F) {
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.his.len() && j < other.his.len() {
            match self.his[i].cmp(&other.his[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let base = self.chunk_start(i);
                    let a = self.chunk_lows(i);
                    let b = other.chunk_lows(j);
                    let (mut x, mut y) = (0usize, 0usize);
                    while x < a.len() && y < b.len() {
                        match a[x].cmp(&b[y]) {
                            Ordering::Less => x += 1,
                            Ordering::Greater => y += 1,
                            Ordering::Equal => {
                                f(base + x);
                                x += 1;
                                y += 1;
                            }
                        }
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }

    /// Writes the flat binary format: `IDS1`, little-endian u64 count, then
    /// the ids as little-endian u64 in strictly ascending order.
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&self.len().to_le_bytes())?;
        const FLUSH: usize = 8 * 8192;
        let mut buf = Vec::with_capacity(FLUSH);
        for id in self.iter() {
            buf.extend_from_slice(&id.0.to_le_bytes());
            if buf.len() >= FLUSH {
                w.write_all(&buf)?;
                buf.clear();
            }
        }
        if !buf.is_empty() {
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.lows.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Reads the flat binary format, rejecting unordered or malformed input.
    pub fn read_from<R: Read>(r: &mut R) -> Result<IdSet, IdSetError> {
        let mut parser = IdStreamParser::new();
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = r.read(&mut buf)?;
            if n == 0 {
                break;
            }
            parser.feed(&buf[..n])?;
        }
        parser.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<IdSet, IdSetError> {
        let mut parser = IdStreamParser::new();
        parser.feed(bytes)?;
        parser.finish()
    }

    #[cfg(test)]
    pub(crate) fn assert_invariants(&self) {
        assert_eq!(self.his.len(), self.ends.len());
        assert!(self.his.windows(2).all(|w| w[0] < w[1]), "prefixes ascend");
        assert!(self.ends.windows(2).all(|w| w[0] < w[1]), "chunks non-empty");
        assert_eq!(
            self.ends.last().copied().unwrap_or(0) as usize,
            self.lows.len()
        );
        for c in 0..self.his.len() {
            assert!(
                self.chunk_lows(c).windows(2).all(|w| w[0] < w[1]),
                "suffixes ascend within chunk"
            );
        }
    }
}

impl FromIterator<UserId> for IdSet {
    fn from_iter<I: IntoIterator<Item = UserId>>(iter: I) -> Self {
        IdSet::build(iter)
    }
}

impl<'a> IntoIterator for &'a IdSet {
    type Item = UserId;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

#[derive(Clone)]
pub struct Iter<'a> {
    set: &'a IdSet,
    chunk: usize,
    pos: usize,
}

impl<'a> Iterator for Iter<'a> {
    type Item = UserId;

    fn next(&mut self) -> Option<UserId> {
        if self.pos >= self.set.lows.len() {
            return None;
        }
        while self.pos >= self.set.ends[self.chunk] as usize {
            self.chunk += 1;
        }
        let id = join(self.set.his[self.chunk], self.set.lows[self.pos]);
        self.pos += 1;
        Some(UserId(id))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.set.lows.len() - self.pos;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Iter<'_> {}

/// Incremental parser for the flat binary format. Feed arbitrary byte blocks,
/// then call [`IdStreamParser::finish`]; useful when the caller also hashes
/// the stream.
pub struct IdStreamParser {
    phase: Phase,
    header: [u8; 8],
    header_len: usize,
    expected: u64,
    seen: u64,
    prev: Option<u64>,
    carry: [u8; 8],
    carry_len: usize,
    builder: Builder,
}

enum Phase {
    Magic,
    Count,
    Ids,
}

impl IdStreamParser {
    pub fn new() -> Self {
        IdStreamParser {
            phase: Phase::Magic,
            header: [0; 8],
            header_len: 0,
            expected: 0,
            seen: 0,
            prev: None,
            carry: [0; 8],
            carry_len: 0,
            builder: Builder::default(),
        }
    }

    pub fn feed(&mut self, mut bytes: &[u8]) -> Result<(), IdSetError> {
        loop {
            match self.phase {
                Phase::Magic => {
                    let take = (4 - self.header_len).min(bytes.len());
                    self.header[self.header_len..self.header_len + take]
                        .copy_from_slice(&bytes[..take]);
                    self.header_len += take;
                    bytes = &bytes[take..];
                    if self.header_len < 4 {
                        return Ok(());
                    }
                    let found = [self.header[0], self.header[1], self.header[2], self.header[3]];
                    if found != MAGIC {
                        return Err(IdSetError::BadMagic { found });
                    }
                    self.phase = Phase::Count;
                    self.header_len = 0;
                }
                Phase::Count => {
                    let take = (8 - self.header_len).min(bytes.len());
                    self.header[self.header_len..self.header_len + take]
                        .copy_from_slice(&bytes[..take]);
                    self.header_len += take;
                    bytes = &bytes[take..];
                    if self.header_len < 8 {
                        return Ok(());
                    }
                    self.expected = u64::from_le_bytes(self.header);
                    self.builder = Builder::with_capacity(self.expected.min(1 << 28) as usize);
                    self.phase = Phase::Ids;
                }
                Phase::Ids => {
                    if self.carry_len > 0 {
                        let take = (8 - self.carry_len).min(bytes.len());
                        self.carry[self.carry_len..self.carry_len + take]
                            .copy_from_slice(&bytes[..take]);
                        self.carry_len += take;
                        bytes = &bytes[take..];
                        if self.carry_len < 8 {
                            return Ok(());
                        }
                        self.carry_len = 0;
                        let id = u64::from_le_bytes(self.carry);
                        self.accept(id)?;
                    }
                    let whole = bytes.len() / 8;
                    for k in 0..whole {
                        let id = u64::from_le_bytes(bytes[k * 8..k * 8 + 8].try_into().unwrap());
                        self.accept(id)?;
                    }
                    let rest = &bytes[whole * 8..];
                    self.carry[..rest.len()].copy_from_slice(rest);
                    self.carry_len = rest.len();
                    return Ok(());
                }
            }
        }
    }

    fn accept(&mut self, id: u64) -> Result<(), IdSetError> {
        if self.seen == self.expected {
            return Err(IdSetError::TrailingData {
                expected: self.expected,
            });
        }
        if let Some(prev) = self.prev {
            if prev >= id {
                return Err(IdSetError::OutOfOrder {
                    position: self.seen,
                    previous: prev,
                    current: id,
                });
            }
        }
        self.prev = Some(id);
        self.builder.push_ascending(id);
        self.seen += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<IdSet, IdSetError> {
        match self.phase {
            Phase::Ids if self.carry_len == 0 && self.seen == self.expected => {
                Ok(self.builder.finish())
            }
            Phase::Ids if self.carry_len == 0 => Err(IdSetError::Truncated {
                expected: self.expected,
                found: self.seen,
            }),
            Phase::Ids => {
                if self.seen == self.expected {
                    Err(IdSetError::TrailingData {
                        expected: self.expected,
                    })
                } else {
                    Err(IdSetError::Truncated {
                        expected: self.expected,
                        found: self.seen,
                    })
                }
            }
            _ => Err(IdSetError::Truncated {
                expected: 0,
                found: 0,
            }),
        }
    }
}

impl Default for IdStreamParser {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Default)]
struct Builder {
    his: Vec<u32>,
    ends: Vec<u32>,
    lows: Vec<u32>,
}

impl Builder {
    fn with_capacity(n: usize) -> Self {
        Builder {
            his: Vec::new(),
            ends: Vec::new(),
            lows: Vec::with_capacity(n),
        }
    }

    /// Caller guarantees ids arrive strictly ascending.
    #[inline]
    fn push_ascending(&mut self, id: u64) {
        let (hi, lo) = split(id);
        match self.his.last() {
            Some(&last) if last == hi => {
                *self.ends.last_mut().unwrap() += 1;
            }
            _ => {
                self.his.push(hi);
                self.ends.push(self.lows.len() as u32 + 1);
            }
        }
        self.lows.push(lo);
    }

    /// Records a chunk for suffixes appended to `lows` since `start`, if any.
    #[inline]
    fn seal_chunk(&mut self, hi: u32, start: usize) {
        if self.lows.len() > start {
            self.his.push(hi);
            self.ends.push(self.lows.len() as u32);
        }
    }

    fn finish(self) -> IdSet {
        assert!(
            self.lows.len() < u32::MAX as usize,
            "id sets above 2^32 - 1 elements are not supported"
        );
        IdSet {
            his: self.his,
            ends: self.ends,
            lows: self.lows,
        }
    }
}

fn intersect_lows(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    let (mut x, mut y) = (0usize, 0usize);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            Ordering::Less => x += 1,
            Ordering::Greater => y += 1,
            Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
}

fn union_lows(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    let (mut x, mut y) = (0usize, 0usize);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            Ordering::Equal => {
                out.push(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
}

fn difference_lows(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    let (mut x, mut y) = (0usize, 0usize);
    while x < a.len() {
        match b.get(y) {
            Some(&bv) if bv < a[x] => y += 1,
            Some(&bv) if bv == a[x] => {
                x += 1;
                y += 1;
            }
            _ => {
                out.push(a[x]);
                x += 1;
            }
        }
    }
}
