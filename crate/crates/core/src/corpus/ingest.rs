use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{NaiveDate, Utc};
use rayon::prelude::*;
use thiserror::Error;

use super::builder::{CorpusBuilder, Origin};
use super::tsv;
use super::{AuthorProfile, CitationEdge, Corpus, PaperRecord, ReadEvent};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no papers file in the input set")]
    NoPaperFiles,
    #[error("{origin}: {message}")]
    Malformed { origin: Origin, message: String },
    #[error("{second}: {what} {key:?} conflicts with the record at {first}")]
    Conflict { what: &'static str, key: String, first: Origin, second: Origin },
}

/// Input files, grouped by schema. Each group may hold several files; a path
/// listed twice is read once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileSet {
    pub papers: Vec<PathBuf>,
    pub reads: Vec<PathBuf>,
    pub cites: Vec<PathBuf>,
    pub authors: Vec<PathBuf>,
    pub orgs: Vec<PathBuf>,
}

impl FileSet {
    /// The standard file names inside `dir`, keeping only those that exist.
    pub fn from_dir(dir: &Path) -> Self {
        let pick = |name: &str| {
            let p = dir.join(name);
            if p.is_file() {
                vec![p]
            } else {
                Vec::new()
            }
        };
        Self {
            papers: pick(tsv::PAPERS_FILE),
            reads: pick(tsv::READS_FILE),
            cites: pick(tsv::CITES_FILE),
            authors: pick(tsv::AUTHORS_FILE),
            orgs: pick(tsv::ORGS_FILE),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
            && self.reads.is_empty()
            && self.cites.is_empty()
            && self.authors.is_empty()
            && self.orgs.is_empty()
    }

    /// All files, in schema order.
    pub fn all_files(&self) -> Vec<&Path> {
        [&self.papers, &self.reads, &self.cites, &self.authors, &self.orgs]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOptions {
    /// Latest admissible publication date and PhD year.
    pub ingestion_date: NaiveDate,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { ingestion_date: Utc::now().date_naive() }
    }
}

/// What ingestion kept, merged and set aside.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub papers: usize,
    pub reads: usize,
    pub citations: usize,
    pub authors: usize,
    pub organizations: usize,
    pub duplicate_papers: usize,
    pub duplicate_citations: usize,
    pub duplicate_authors: usize,
    pub duplicate_organizations: usize,
    pub quarantined_reads: usize,
    pub quarantined_citations: usize,
    pub self_citations: usize,
    pub unresolved_org_refs: usize,
    pub negative_age_citations: usize,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("papers", self.papers),
            ("reads", self.reads),
            ("citations", self.citations),
            ("authors", self.authors),
            ("organizations", self.organizations),
            ("duplicate_papers", self.duplicate_papers),
            ("duplicate_citations", self.duplicate_citations),
            ("duplicate_authors", self.duplicate_authors),
            ("duplicate_organizations", self.duplicate_organizations),
            ("quarantined_reads", self.quarantined_reads),
            ("quarantined_citations", self.quarantined_citations),
            ("self_citations", self.self_citations),
            ("unresolved_org_refs", self.unresolved_org_refs),
            ("negative_age_citations", self.negative_age_citations),
        ];
        for (k, v) in rows {
            writeln!(f, "{k}\t{v}")?;
        }
        Ok(())
    }
}

enum Parsed {
    Papers(Vec<(PaperRecord, Origin)>),
    Reads(Vec<(ReadEvent, Origin)>),
    Cites(Vec<(CitationEdge, Origin)>),
    Authors(Vec<(AuthorProfile, Origin)>),
    Orgs(Vec<(String, String, Origin)>),
}

#[derive(Clone, Copy)]
enum Schema {
    Papers,
    Reads,
    Cites,
    Authors,
    Orgs,
}

fn parse_lines<T>(
    text: &str,
    file: &Arc<str>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Vec<(T, Origin)>, IngestError> {
    tsv::data_lines(text)
        .map(|(line, content)| {
            let origin = Origin::new(file.clone(), line);
            match parse(content) {
                Ok(v) => Ok((v, origin)),
                Err(message) => Err(IngestError::Malformed { origin, message }),
            }
        })
        .collect()
}

fn parse_file(path: &Path, schema: Schema) -> Result<Parsed, IngestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    let file: Arc<str> = Arc::from(path.display().to_string());
    Ok(match schema {
        Schema::Papers => Parsed::Papers(parse_lines(&text, &file, tsv::parse_paper)?),
        Schema::Reads => Parsed::Reads(parse_lines(&text, &file, tsv::parse_read)?),
        Schema::Cites => Parsed::Cites(parse_lines(&text, &file, tsv::parse_cite)?),
        Schema::Authors => Parsed::Authors(parse_lines(&text, &file, tsv::parse_author)?),
        Schema::Orgs => Parsed::Orgs(
            parse_lines(&text, &file, tsv::parse_org)?.into_iter().map(|((a, b), o)| (a, b, o)).collect(),
        ),
    })
}

fn dedup_paths(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for p in paths {
        let key = std::fs::canonicalize(p).unwrap_or_else(|_| p.clone());
        if !seen.contains(&key) {
            seen.push(key);
            out.push(p.clone());
        }
    }
    out
}

/// Parse, validate and index a file set. Files are parsed concurrently; the
/// result does not depend on scheduling or on the order of lines.
pub fn ingest(files: &FileSet, options: &IngestOptions) -> Result<(Corpus, IngestReport), IngestError> {
    if files.papers.is_empty() {
        return Err(IngestError::NoPaperFiles);
    }
    let mut jobs: Vec<(PathBuf, Schema)> = Vec::new();
    for (paths, schema) in [
        (&files.papers, Schema::Papers),
        (&files.reads, Schema::Reads),
        (&files.cites, Schema::Cites),
        (&files.authors, Schema::Authors),
        (&files.orgs, Schema::Orgs),
    ] {
        jobs.extend(dedup_paths(paths).into_iter().map(|p| (p, schema)));
    }

    let parsed: Vec<Parsed> =
        jobs.par_iter().map(|(path, schema)| parse_file(path, *schema)).collect::<Result<_, _>>()?;

    let mut builder = CorpusBuilder::new();
    for chunk in parsed {
        match chunk {
            Parsed::Papers(v) => v.into_iter().for_each(|(r, o)| {
                builder.add_paper_at(r, o);
            }),
            Parsed::Reads(v) => v.into_iter().for_each(|(r, o)| {
                builder.add_read_at(r, o);
            }),
            Parsed::Cites(v) => v.into_iter().for_each(|(r, o)| {
                builder.add_citation_at(r, o);
            }),
            Parsed::Authors(v) => v.into_iter().for_each(|(r, o)| {
                builder.add_author_at(r, o);
            }),
            Parsed::Orgs(v) => v.into_iter().for_each(|(id, name, o)| {
                builder.add_organization_at(id, name, o);
            }),
        }
    }
    builder.build(options)
}
