//! Line codecs for the five corpus files.
//!
//! ```text
//! papers.tsv   paper_id  venue  pub_date(YYYY|YYYY-MM-DD)  kind  author;author;...
//! reads.tsv    timestamp(RFC 3339 UTC)  reader_token  paper_id  access_kind
//! cites.tsv    citing_id  cited_id
//! authors.tsv  author_id  phd_year|-  org_id|-
//! orgs.tsv     org_id  display_name
//! ```
//!
//! UTF-8, no header row, `#` comment lines and blank lines ignored.

use chrono::{DateTime, SecondsFormat, Utc};

use super::{AuthorProfile, CitationEdge, PaperRecord, ReadEvent};
use crate::dates::parse_pub_date;

pub const PAPERS_FILE: &str = "papers.tsv";
pub const READS_FILE: &str = "reads.tsv";
pub const CITES_FILE: &str = "cites.tsv";
pub const AUTHORS_FILE: &str = "authors.tsv";
pub const ORGS_FILE: &str = "orgs.tsv";

const ABSENT: &str = "-";

/// Non-comment, non-blank lines with their 1-based line numbers.
pub fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn fields<const N: usize>(line: &str) -> Result<[&str; N], String> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != N {
        return Err(format!("expected {N} tab-separated fields, found {}", parts.len()));
    }
    let mut out = [""; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.trim();
    }
    Ok(out)
}

fn optional(field: &str) -> Option<String> {
    if field.is_empty() || field == ABSENT {
        None
    } else {
        Some(field.to_string())
    }
}

pub fn parse_paper(line: &str) -> Result<PaperRecord, String> {
    let [id, venue, date, kind, authors] = fields::<5>(line)?;
    if id.is_empty() {
        return Err("empty paper_id".into());
    }
    Ok(PaperRecord {
        paper_id: id.to_string(),
        venue: venue.to_string(),
        pub_date: parse_pub_date(date).map_err(|e| e.to_string())?,
        kind: kind.parse()?,
        author_ids: if authors.is_empty() {
            Vec::new()
        } else {
            authors.split(';').map(|a| a.trim().to_string()).collect()
        },
    })
}

pub fn format_paper(p: &PaperRecord) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}",
        p.paper_id,
        p.venue,
        p.pub_date.format("%Y-%m-%d"),
        p.kind,
        p.author_ids.join(";")
    )
}

pub fn parse_read(line: &str) -> Result<ReadEvent, String> {
    let [ts, token, paper, kind] = fields::<4>(line)?;
    let timestamp = DateTime::parse_from_rfc3339(ts)
        .map_err(|e| format!("bad timestamp {ts:?}: {e}"))?
        .with_timezone(&Utc);
    Ok(ReadEvent {
        timestamp,
        reader_token: optional(token),
        paper_id: paper.to_string(),
        access_kind: kind.parse()?,
    })
}

pub fn format_read(r: &ReadEvent) -> String {
    format!(
        "{}\t{}\t{}\t{}",
        r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
        r.reader_token.as_deref().unwrap_or(ABSENT),
        r.paper_id,
        r.access_kind
    )
}

pub fn parse_cite(line: &str) -> Result<CitationEdge, String> {
    let [citing, cited] = fields::<2>(line)?;
    Ok(CitationEdge { citing_id: citing.to_string(), cited_id: cited.to_string() })
}

pub fn format_cite(e: &CitationEdge) -> String {
    format!("{}\t{}", e.citing_id, e.cited_id)
}

pub fn parse_author(line: &str) -> Result<AuthorProfile, String> {
    let [id, phd, org] = fields::<3>(line)?;
    let phd_year = match optional(phd) {
        None => None,
        Some(y) => Some(y.parse::<i32>().map_err(|_| format!("bad phd_year {y:?}"))?),
    };
    Ok(AuthorProfile { author_id: id.to_string(), phd_year, org_id: optional(org) })
}

pub fn format_author(a: &AuthorProfile) -> String {
    format!(
        "{}\t{}\t{}",
        a.author_id,
        a.phd_year.map_or_else(|| ABSENT.to_string(), |y| y.to_string()),
        a.org_id.as_deref().unwrap_or(ABSENT)
    )
}

pub fn parse_org(line: &str) -> Result<(String, String), String> {
    let [id, name] = fields::<2>(line)?;
    Ok((id.to_string(), name.to_string()))
}

pub fn format_org(org_id: &str, display_name: &str) -> String {
    format!("{org_id}\t{display_name}")
}
