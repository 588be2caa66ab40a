//! Bibliographic data model: papers, read events, citation edges, authors
//! and organizations, indexed for by-paper and by-author lookups.
//!
//! A [`Corpus`] is immutable once built. All derived statistics borrow it, so
//! it can be shared freely across threads.

mod builder;
mod ingest;
mod summary;
pub mod tsv;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};

use crate::dates::{fractional_year, fractional_year_at};

pub use builder::{CorpusBuilder, Origin};
pub use ingest::{ingest, FileSet, IngestError, IngestOptions, IngestReport};
pub use summary::{corpus_summary, reads_per_paper_by_year, yearly_rate, SummaryStats, YearRatio, YearlyReadRate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PaperKind {
    RefereedArticle,
    Abstract,
    Other,
}

impl PaperKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RefereedArticle => "refereed_article",
            Self::Abstract => "abstract",
            Self::Other => "other",
        }
    }
}

impl FromStr for PaperKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "refereed_article" => Ok(Self::RefereedArticle),
            "abstract" => Ok(Self::Abstract),
            "other" => Ok(Self::Other),
            _ => Err(format!("unknown paper kind {s:?}")),
        }
    }
}

impl fmt::Display for PaperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What part of an article's record a read opened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessKind {
    Abstract,
    Fulltext,
    Citations,
    Other,
}

impl AccessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Abstract => "abstract",
            Self::Fulltext => "fulltext",
            Self::Citations => "citations",
            Self::Other => "other",
        }
    }
}

impl FromStr for AccessKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abstract" => Ok(Self::Abstract),
            "fulltext" => Ok(Self::Fulltext),
            "citations" => Ok(Self::Citations),
            "other" => Ok(Self::Other),
            _ => Err(format!("unknown access kind {s:?}")),
        }
    }
}

impl fmt::Display for AccessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PaperRecord {
    pub paper_id: String,
    pub venue: String,
    pub pub_date: NaiveDate,
    pub kind: PaperKind,
    pub author_ids: Vec<String>,
}

impl PaperRecord {
    pub fn n_authors(&self) -> usize {
        self.author_ids.len()
    }

    pub fn pub_year_fraction(&self) -> f64 {
        fractional_year(self.pub_date)
    }
}

/// One anonymized access. A missing reader token is kept as `None`; such
/// events still count as reads but cannot take part in session analysis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReadEvent {
    pub timestamp: DateTime<Utc>,
    pub reader_token: Option<String>,
    pub paper_id: String,
    pub access_kind: AccessKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CitationEdge {
    pub citing_id: String,
    pub cited_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AuthorProfile {
    pub author_id: String,
    pub phd_year: Option<i32>,
    pub org_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Organization {
    pub org_id: String,
    pub display_name: String,
    /// Member author ids, sorted.
    pub members: Vec<String>,
}

/// Selects papers by venue, kind and publication year. Empty criteria match
/// everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PaperFilter {
    pub venues: BTreeSet<String>,
    pub kinds: BTreeSet<PaperKind>,
    /// Inclusive publication-year range.
    pub pub_years: Option<(i32, i32)>,
}

impl PaperFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn venues<I, S>(venues: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { venues: venues.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn with_years(mut self, first: i32, last: i32) -> Self {
        self.pub_years = Some((first, last));
        self
    }

    pub fn matches(&self, paper: &PaperRecord) -> bool {
        use chrono::Datelike;
        if !self.venues.is_empty() && !self.venues.contains(&paper.venue) {
            return false;
        }
        if !self.kinds.is_empty() && !self.kinds.contains(&paper.kind) {
            return false;
        }
        match self.pub_years {
            Some((a, b)) => (a..=b).contains(&paper.pub_date.year()),
            None => true,
        }
    }
}

impl fmt::Display for PaperFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.venues.is_empty() {
            parts.push(format!("venue in {{{}}}", self.venues.iter().cloned().collect::<Vec<_>>().join(",")));
        }
        if !self.kinds.is_empty() {
            parts.push(format!(
                "kind in {{{}}}",
                self.kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",")
            ));
        }
        if let Some((a, b)) = self.pub_years {
            parts.push(format!("published {a}-{b}"));
        }
        if parts.is_empty() {
            f.write_str("all papers")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

/// The ingested, validated, indexed database.
///
/// Papers, authors and organizations are stored sorted by key; read events
/// in canonical `(timestamp, token, paper, kind)` order; citation edges as
/// sorted, de-duplicated `(citing, cited)` paper-index pairs. Two corpora
/// built from the same records in any order compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    paper_index: HashMap<String, usize>,
    reads: Vec<ReadEvent>,
    read_paper: Vec<usize>,
    citations: Vec<(usize, usize)>,
    authors: Vec<AuthorProfile>,
    author_index: HashMap<String, usize>,
    organizations: Vec<Organization>,
    org_index: HashMap<String, usize>,
    papers_by_author: Vec<Vec<usize>>,
    reads_by_paper: Vec<Vec<usize>>,
    cited_by: Vec<Vec<usize>>,
}

impl Corpus {
    pub fn empty() -> Self {
        CorpusBuilder::new().build(&IngestOptions::default()).expect("empty corpus is valid").0
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, idx: usize) -> &PaperRecord {
        &self.papers[idx]
    }

    pub fn paper_idx(&self, paper_id: &str) -> Option<usize> {
        self.paper_index.get(paper_id).copied()
    }

    pub fn reads(&self) -> &[ReadEvent] {
        &self.reads
    }

    /// Paper index of read event `read_idx`.
    pub fn read_paper(&self, read_idx: usize) -> usize {
        self.read_paper[read_idx]
    }

    /// `(citing, cited)` paper-index pairs.
    pub fn citations(&self) -> &[(usize, usize)] {
        &self.citations
    }

    pub fn authors(&self) -> &[AuthorProfile] {
        &self.authors
    }

    pub fn author_idx(&self, author_id: &str) -> Option<usize> {
        self.author_index.get(author_id).copied()
    }

    pub fn author(&self, idx: usize) -> &AuthorProfile {
        &self.authors[idx]
    }

    pub fn organizations(&self) -> &[Organization] {
        &self.organizations
    }

    pub fn organization(&self, org_id: &str) -> Option<&Organization> {
        self.org_index.get(org_id).map(|&i| &self.organizations[i])
    }

    pub fn papers_of_author(&self, author_idx: usize) -> &[usize] {
        &self.papers_by_author[author_idx]
    }

    pub fn reads_of_paper(&self, paper_idx: usize) -> &[usize] {
        &self.reads_by_paper[paper_idx]
    }

    /// Indices of papers citing `paper_idx`.
    pub fn citing_papers(&self, paper_idx: usize) -> &[usize] {
        &self.cited_by[paper_idx]
    }

    /// Reads of `paper_idx` whose timestamp falls inside `window`.
    pub fn reads_in_window(&self, paper_idx: usize, window: &crate::DateWindow) -> usize {
        self.reads_by_paper[paper_idx]
            .iter()
            .filter(|&&r| window.contains_instant(self.reads[r].timestamp))
            .count()
    }

    /// Citations to `paper_idx` from papers published inside `window`.
    pub fn cites_in_window(&self, paper_idx: usize, window: &crate::DateWindow) -> usize {
        self.cited_by[paper_idx].iter().filter(|&&c| window.contains(self.papers[c].pub_date)).count()
    }

    /// Citations to `paper_idx` from papers dated on or before `cutoff`.
    pub fn cites_until(&self, paper_idx: usize, cutoff: NaiveDate) -> usize {
        self.cited_by[paper_idx].iter().filter(|&&c| self.papers[c].pub_date <= cutoff).count()
    }

    /// Citing minus cited publication date, in fractional years. Negative for
    /// citations that precede the cited paper's nominal date.
    pub fn citation_age(&self, citing: usize, cited: usize) -> f64 {
        self.papers[citing].pub_year_fraction() - self.papers[cited].pub_year_fraction()
    }

    /// Age in years of the read paper at the moment of the read.
    pub fn read_age(&self, read_idx: usize) -> f64 {
        let paper = &self.papers[self.read_paper[read_idx]];
        fractional_year_at(self.reads[read_idx].timestamp) - paper.pub_year_fraction()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_round_trip() {
        for k in [PaperKind::RefereedArticle, PaperKind::Abstract, PaperKind::Other] {
            assert_eq!(k.as_str().parse::<PaperKind>().unwrap(), k);
        }
        for k in [AccessKind::Abstract, AccessKind::Fulltext, AccessKind::Citations, AccessKind::Other] {
            assert_eq!(k.as_str().parse::<AccessKind>().unwrap(), k);
        }
        assert!("book".parse::<PaperKind>().is_err());
    }

    #[test]
    fn filter_describes_itself() {
        let f = PaperFilter::venues(["ApJ"]).with_years(1990, 1997);
        assert_eq!(f.to_string(), "venue in {ApJ}, published 1990-1997");
        assert_eq!(PaperFilter::all().to_string(), "all papers");
    }
}
