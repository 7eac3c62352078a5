//! Click-log ingestion.
//!
//! Line grammar: space-separated tokens. The first three are the timestamp
//! (decimal integer seconds), the displayed article id (any non-`|` token),
//! and the click (0 or 1). The rest of the line is a sequence of blocks,
//! each introduced by a `|`-prefixed head token: the block headed `user`
//! holds the user's sparse features, every other block head is an article id
//! in the candidate pool. Features are `index:value` tokens with a decimal
//! integer index and a decimal real value.
//!
//! The parser is total: every line yields either a [`LogEvent`] or a
//! [`ParseError`] carrying the byte offset and reason.

use std::collections::BTreeMap;
use std::fmt;

use esr_core::data::{BinaryAction, Context, Dataset, LabeledExample};
use esr_core::SeededRng;

/// Context dimension of filtered datasets: user feature indices 1..=6
/// densified in ascending order, missing entries 0.
pub const USER_FEATURE_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct LogEvent {
    pub timestamp: u64,
    pub displayed: String,
    pub click: u8,
    /// Sparse user features; unknown indices are preserved as-is.
    pub user_features: BTreeMap<u32, f64>,
    /// Candidate articles in file order, with their own sparse features.
    pub pool: Vec<(String, BTreeMap<u32, f64>)>,
}

impl LogEvent {
    /// Whether the constant-feature convention (index 1 present with value
    /// 1.0) holds. A violation is a condition to warn about, not an error.
    pub fn constant_feature_ok(&self) -> bool {
        self.user_features.get(&1) == Some(&1.0)
    }

    /// Dense context over user feature indices `1..=USER_FEATURE_DIM`.
    pub fn dense_context(&self) -> Context {
        let mut features = vec![0.0; USER_FEATURE_DIM];
        for (&idx, &value) in &self.user_features {
            if (1..=USER_FEATURE_DIM as u32).contains(&idx) {
                features[idx as usize - 1] = value;
            }
        }
        Context::new(features)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the line where the problem starts.
    pub offset: usize,
    pub reason: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "byte {}: {}", self.offset, self.reason)
    }
}

impl std::error::Error for ParseError {}

fn err(offset: usize, reason: impl Into<String>) -> ParseError {
    ParseError {
        offset,
        reason: reason.into(),
    }
}

/// Tokens with their byte offsets; runs of spaces act as one separator.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, b) in line.bytes().enumerate() {
        match (b == b' ', start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                toks.push((s, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        toks.push((s, &line[s..]));
    }
    toks
}

fn parse_feature(offset: usize, tok: &str) -> Result<(u32, f64), ParseError> {
    let (idx, val) = tok
        .split_once(':')
        .ok_or_else(|| err(offset, format!("expected index:value, got `{tok}`")))?;
    let idx: u32 = idx
        .parse()
        .map_err(|_| err(offset, format!("bad feature index `{idx}`")))?;
    let val: f64 = val
        .parse()
        .map_err(|_| err(offset, format!("bad feature value `{val}`")))?;
    Ok((idx, val))
}

pub fn parse_line(line: &str) -> Result<LogEvent, ParseError> {
    let toks = tokenize(line);
    if toks.len() < 3 {
        return Err(err(line.len(), "expected timestamp, article id, and click"));
    }
    let (ts_off, ts_tok) = toks[0];
    let timestamp: u64 = ts_tok
        .parse()
        .map_err(|_| err(ts_off, format!("bad timestamp `{ts_tok}`")))?;
    let (id_off, id_tok) = toks[1];
    if id_tok.starts_with('|') {
        return Err(err(id_off, "expected displayed article id before blocks"));
    }
    let (click_off, click_tok) = toks[2];
    let click: u8 = match click_tok {
        "0" => 0,
        "1" => 1,
        other => return Err(err(click_off, format!("click must be 0 or 1, got `{other}`"))),
    };

    let mut user_features: Option<BTreeMap<u32, f64>> = None;
    let mut pool: Vec<(String, BTreeMap<u32, f64>)> = Vec::new();
    // index into `pool` of the block currently receiving features; None
    // while filling the user block
    let mut in_user = false;
    let mut started = false;
    for &(offset, tok) in &toks[3..] {
        if let Some(head) = tok.strip_prefix('|') {
            if head.is_empty() {
                return Err(err(offset, "empty block head"));
            }
            if head == "user" {
                if user_features.is_some() {
                    return Err(err(offset, "duplicate user block"));
                }
                user_features = Some(BTreeMap::new());
                in_user = true;
            } else {
                pool.push((head.to_string(), BTreeMap::new()));
                in_user = false;
            }
            started = true;
        } else {
            if !started {
                return Err(err(offset, format!("feature `{tok}` outside any block")));
            }
            let (idx, val) = parse_feature(offset, tok)?;
            if in_user {
                user_features.as_mut().unwrap().insert(idx, val);
            } else {
                pool.last_mut().unwrap().1.insert(idx, val);
            }
        }
    }
    let user_features = user_features.ok_or_else(|| err(line.len(), "no user block"))?;
    if !pool.iter().any(|(id, _)| id == id_tok) {
        return Err(err(id_off, format!("displayed article `{id_tok}` not in pool")));
    }
    Ok(LogEvent {
        timestamp,
        displayed: id_tok.to_string(),
        click,
        user_features,
        pool,
    })
}

/// Render an event back into the line grammar (features in ascending index
/// order). `parse_line(serialize_event(e)) == e` for any valid event.
pub fn serialize_event(event: &LogEvent) -> String {
    use std::fmt::Write;
    let mut out = format!("{} {} {} |user", event.timestamp, event.displayed, event.click);
    for (idx, val) in &event.user_features {
        let _ = write!(out, " {idx}:{val}");
    }
    for (id, features) in &event.pool {
        let _ = write!(out, " |{id}");
        for (idx, val) in features {
            let _ = write!(out, " {idx}:{val}");
        }
    }
    out
}

/// Which two displayed articles define the binary action set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSpec {
    /// Use these two article ids.
    Explicit(String, String),
    /// Draw two distinct ids uniformly from the displayed articles.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterError {
    /// An explicitly requested article id never appears as displayed.
    ArticleNotDisplayed(String),
    /// Random selection needs at least two distinct displayed ids.
    TooFewArticles(usize),
    IdenticalArticles,
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterError::ArticleNotDisplayed(id) => {
                write!(f, "article `{id}` never appears as displayed")
            }
            FilterError::TooFewArticles(n) => {
                write!(f, "need at least 2 distinct displayed articles, found {n}")
            }
            FilterError::IdenticalArticles => write!(f, "the two article ids must differ"),
        }
    }
}

impl std::error::Error for FilterError {}

/// Resolve a pair spec against the displayed ids, returning the pair in
/// lexicographic order: index 0 is action 0, index 1 is action 1.
pub fn resolve_pair(
    events: &[LogEvent],
    spec: &PairSpec,
    rng: &mut SeededRng,
) -> Result<[String; 2], FilterError> {
    resolve_pair_from_ids(events.iter().map(|e| e.displayed.as_str()), spec, rng)
}

/// [`resolve_pair`] over bare displayed ids (duplicates allowed), for
/// streaming callers that do not keep events in memory.
pub fn resolve_pair_from_ids<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    spec: &PairSpec,
    rng: &mut SeededRng,
) -> Result<[String; 2], FilterError> {
    let mut shown: Vec<&str> = ids.into_iter().collect();
    shown.sort_unstable();
    shown.dedup();
    let (a, b) = match spec {
        PairSpec::Explicit(a, b) => {
            if a == b {
                return Err(FilterError::IdenticalArticles);
            }
            for id in [a, b] {
                if shown.binary_search(&id.as_str()).is_err() {
                    return Err(FilterError::ArticleNotDisplayed(id.clone()));
                }
            }
            (a.clone(), b.clone())
        }
        PairSpec::Random => {
            if shown.len() < 2 {
                return Err(FilterError::TooFewArticles(shown.len()));
            }
            let i = rng.below(shown.len());
            let mut j = rng.below(shown.len() - 1);
            if j >= i {
                j += 1;
            }
            (shown[i].to_string(), shown[j].to_string())
        }
    };
    Ok(if a < b { [a, b] } else { [b, a] })
}

/// The filtered row for one event, or None when its displayed article is
/// outside the pair. `pair` must be lexicographically ordered.
pub fn event_to_example(event: &LogEvent, pair: &[String; 2]) -> Option<LabeledExample> {
    let action = if event.displayed == pair[0] {
        BinaryAction::Zero
    } else if event.displayed == pair[1] {
        BinaryAction::One
    } else {
        return None;
    };
    Some(LabeledExample {
        context: event.dense_context(),
        action,
        outcome: event.click as f64,
    })
}

/// Keep events displayed one of two articles; the lexicographically smaller
/// id becomes action 0. Event order is preserved.
pub fn filter_binary(
    events: &[LogEvent],
    spec: &PairSpec,
    rng: &mut SeededRng,
) -> Result<(Dataset, [String; 2]), FilterError> {
    let pair = resolve_pair(events, spec, rng)?;
    let examples = events
        .iter()
        .filter_map(|e| event_to_example(e, &pair))
        .collect();
    Ok((Dataset::from_examples(USER_FEATURE_DIM, examples), pair))
}

/// All unordered index pairs with bitwise-equal contexts and differing
/// actions, found by exact hashing. Pairs are sorted.
pub fn find_perfect_matches(ds: &Dataset) -> Vec<(usize, usize)> {
    use std::collections::HashMap;
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (i, ex) in ds.iter().enumerate() {
        let key: Vec<u64> = ex.context.as_slice().iter().map(|w| w.to_bits()).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut matches = Vec::new();
    for indices in groups.values() {
        for (a, &i) in indices.iter().enumerate() {
            for &j in &indices[a + 1..] {
                if ds.examples[i].action != ds.examples[j].action {
                    matches.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    matches.sort_unstable();
    matches
}
