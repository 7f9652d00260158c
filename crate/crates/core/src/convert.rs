//! Converts a raw delimited concept–project annotation file into the
//! JSON-lines pair format read by [`crate::corpus::load_dataset`].
//!
//! The raw file has a header row. Concept label, concept description,
//! project label and the match label are located by column name; the project
//! text is always the last column (`CONTENT`).

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::corpus::PairRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RawLayout {
    pub delimiter: u8,
    pub concept_label: String,
    pub concept_description: String,
    pub project_label: String,
    pub label: String,
}

impl Default for RawLayout {
    fn default() -> Self {
        RawLayout {
            delimiter: b',',
            concept_label: "concept_label".into(),
            concept_description: "concept_description".into(),
            project_label: "project_label".into(),
            label: "label".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConvertStats {
    pub rows_read: usize,
    pub written: usize,
    pub duplicates_removed: usize,
    pub rejected: Vec<(usize, String)>,
}

/// Strips markup and collapses whitespace.
pub fn clean_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for ch in text.chars() {
        match ch {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(ch),
            _ => {}
        }
    }
    let out = out
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
        .replace("&quot;", "\"")
        .replace("&#39;", "'");
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_label(s: &str) -> Option<u8> {
    match s.trim() {
        "1" | "1.0" | "true" | "True" => Some(1),
        "0" | "0.0" | "false" | "False" => Some(0),
        _ => None,
    }
}

pub fn convert<R: Read, W: Write>(
    input: R,
    output: &mut W,
    layout: &RawLayout,
) -> Result<ConvertStats> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(layout.delimiter)
        .has_headers(true)
        .from_reader(input);
    let csv_err = |row: usize, e: csv::Error| Error::Row {
        row,
        msg: e.to_string(),
    };
    let headers = reader.headers().map_err(|e| csv_err(1, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Row {
                row: 1,
                msg: format!("missing column `{name}`"),
            })
    };
    let c_label = column(&layout.concept_label)?;
    let c_desc = column(&layout.concept_description)?;
    let p_label = column(&layout.project_label)?;
    let label_col = column(&layout.label)?;
    let content = headers.len() - 1;

    let mut stats = ConvertStats::default();
    let mut seen: HashMap<(String, String), u8> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_err(row, e))?;
        stats.rows_read += 1;
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let label = parse_label(field(label_col)).ok_or_else(|| Error::Row {
            row,
            msg: format!("label must be 0 or 1, got `{}`", field(label_col)),
        })?;
        let concept_label = clean_text(field(c_label));
        let project_label = clean_text(field(p_label));
        let body = clean_text(field(content));
        if body.is_empty() {
            log::warn!("row {row}: empty project text, skipped");
            stats.rejected.push((row, "empty project text".into()));
            continue;
        }
        let key = (concept_label.clone(), project_label.clone());
        match seen.get(&key) {
            Some(&prev) if prev == label => {
                stats.duplicates_removed += 1;
                continue;
            }
            Some(_) => {
                return Err(Error::Row {
                    row,
                    msg: format!(
                        "conflicting labels for concept `{}` / project `{}`",
                        key.0, key.1
                    ),
                })
            }
            None => {}
        }
        seen.insert(key, label);
        let rec = PairRecord {
            concept_id: concept_label.clone(),
            concept_label,
            concept_description: clean_text(field(c_desc)),
            project_id: project_label.clone(),
            project_text: format!("{project_label} {body}").trim().to_string(),
            label,
        };
        serde_json::to_writer(&mut *output, &rec)?;
        output
            .write_all(b"\n")
            .map_err(|e| Error::io("<output>", e))?;
        stats.written += 1;
    }
    Ok(stats)
}
