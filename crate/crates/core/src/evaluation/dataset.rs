//! JSONL dataset ingestion: one `{id, content, label, split}` object per line.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{Label, Language, NewsItem, Split};
use crate::error::DatasetError;

/// Per-split `(real, fake)` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub train: (usize, usize),
    pub val: (usize, usize),
    pub test: (usize, usize),
}

impl SplitStats {
    pub fn get(&self, split: Split) -> (usize, usize) {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

/// Published split sizes of the English ARG corpus.
pub const ARG_EN_STATS: SplitStats = SplitStats {
    train: (2878, 1006),
    val: (1030, 244),
    test: (1024, 234),
};

/// Published split sizes of the Chinese ARG corpus.
pub const ARG_CN_STATS: SplitStats = SplitStats {
    train: (2331, 2873),
    val: (1172, 779),
    test: (1137, 814),
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub items: Vec<NewsItem>,
    pub language: Language,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Fail on any malformed line instead of skipping it.
    pub strict: bool,
    pub language: Language,
    /// Split assigned to lines that carry none. Without it such lines are
    /// malformed.
    pub default_split: Option<Split>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &NewsItem> {
        self.items.iter().filter(move |i| i.split == Some(split))
    }

    /// `(real, fake)` tally per split present.
    pub fn split_counts(&self) -> BTreeMap<Split, (usize, usize)> {
        let mut out = BTreeMap::new();
        for item in &self.items {
            if let (Some(s), Some(l)) = (item.split, item.label) {
                let e: &mut (usize, usize) = out.entry(s).or_default();
                match l {
                    Label::Real => e.0 += 1,
                    Label::Fake => e.1 += 1,
                }
            }
        }
        out
    }

    /// Splits whose tally differs from `stats`, as `(split, found, declared)`.
    pub fn mismatches(&self, stats: &SplitStats) -> Vec<(Split, (usize, usize), (usize, usize))> {
        let counts = self.split_counts();
        [Split::Train, Split::Val, Split::Test]
            .into_iter()
            .filter_map(|s| {
                let found = counts.get(&s).copied().unwrap_or((0, 0));
                (found != stats.get(s)).then_some((s, found, stats.get(s)))
            })
            .collect()
    }
}

pub fn parse_label(v: &Value) -> Result<Label, String> {
    match v {
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "real" | "0" => Ok(Label::Real),
            "fake" | "1" => Ok(Label::Fake),
            other => Err(format!("unknown label {other:?}")),
        },
        Value::Number(n) => match n.as_u64() {
            Some(0) => Ok(Label::Real),
            Some(1) => Ok(Label::Fake),
            _ => Err(format!("unknown label {n}")),
        },
        other => Err(format!("label must be a string or 0/1, got {other}")),
    }
}

fn parse_split(v: &Value) -> Result<Split, String> {
    match v.as_str().map(|s| s.trim().to_ascii_lowercase()) {
        Some(s) if s == "train" => Ok(Split::Train),
        Some(s) if s == "val" || s == "valid" || s == "validation" || s == "dev" => Ok(Split::Val),
        Some(s) if s == "test" => Ok(Split::Test),
        _ => Err(format!("unknown split {v}")),
    }
}

fn parse_line(line: &str, opts: &LoadOptions) -> Result<NewsItem, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = v.as_object().ok_or("line is not a JSON object")?;
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err("missing id".into()),
    };
    let content = obj
        .get("content")
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .ok_or("missing or empty content")?;
    let label = parse_label(obj.get("label").ok_or("missing label")?)?;
    let split = match obj.get("split") {
        Some(Value::Null) | None => opts.default_split.ok_or("missing split")?,
        Some(s) => parse_split(s)?,
    };
    Ok(NewsItem {
        id,
        content: content.to_string(),
        label: Some(label),
        split: Some(split),
    })
}

/// Parses JSONL text. Blank lines are ignored; in lenient mode malformed lines
/// and repeated ids are skipped with a warning.
pub fn parse_dataset(text: &str, opts: &LoadOptions) -> Result<Dataset, DatasetError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    let mut bad: Vec<(usize, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, opts) {
            Ok(item) => {
                if !seen.insert(item.id.clone()) {
                    if opts.strict {
                        return Err(DatasetError::DuplicateId(item.id));
                    }
                    log::warn!("line {line_no}: duplicate id {:?} skipped", item.id);
                    continue;
                }
                items.push(item);
            }
            Err(msg) => {
                log::warn!("line {line_no}: {msg}");
                bad.push((line_no, msg));
            }
        }
    }
    if opts.strict && !bad.is_empty() {
        let (first_line, message) = bad[0].clone();
        return Err(DatasetError::Malformed {
            count: bad.len(),
            first_line,
            message,
        });
    }
    if items.is_empty() {
        return Err(DatasetError::NoItems);
    }
    Ok(Dataset {
        items,
        language: opts.language,
    })
}

pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, opts)
}

/// Writes items as JSONL in the loader's schema.
pub fn write_dataset(path: &Path, items: &[NewsItem]) -> std::io::Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("item serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)
}
