use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};

use super::{
    AuthorProfile, CitationEdge, Corpus, IngestError, IngestOptions, IngestReport, Organization, PaperRecord,
    ReadEvent,
};

/// Where a record came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub file: Arc<str>,
    pub line: usize,
}

impl Origin {
    pub fn new(file: Arc<str>, line: usize) -> Self {
        Self { file, line }
    }

    fn memory(line: usize) -> Self {
        Self { file: Arc::from("<memory>"), line }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

const EARLIEST_PUB_DATE: (i32, u32, u32) = (1800, 1, 1);
const EARLIEST_PHD_YEAR: i32 = 1850;

/// Accumulates raw records, then validates, de-duplicates and indexes them
/// into a [`Corpus`].
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    papers: Vec<(PaperRecord, Origin)>,
    reads: Vec<(ReadEvent, Origin)>,
    cites: Vec<(CitationEdge, Origin)>,
    authors: Vec<(AuthorProfile, Origin)>,
    orgs: Vec<(String, String, Origin)>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_paper(&mut self, paper: PaperRecord) -> &mut Self {
        let origin = Origin::memory(self.papers.len() + 1);
        self.add_paper_at(paper, origin)
    }

    pub fn add_paper_at(&mut self, paper: PaperRecord, origin: Origin) -> &mut Self {
        self.papers.push((paper, origin));
        self
    }

    pub fn add_read(&mut self, read: ReadEvent) -> &mut Self {
        let origin = Origin::memory(self.reads.len() + 1);
        self.add_read_at(read, origin)
    }

    pub fn add_read_at(&mut self, read: ReadEvent, origin: Origin) -> &mut Self {
        self.reads.push((read, origin));
        self
    }

    pub fn add_citation(&mut self, edge: CitationEdge) -> &mut Self {
        let origin = Origin::memory(self.cites.len() + 1);
        self.add_citation_at(edge, origin)
    }

    pub fn add_citation_at(&mut self, edge: CitationEdge, origin: Origin) -> &mut Self {
        self.cites.push((edge, origin));
        self
    }

    pub fn add_author(&mut self, author: AuthorProfile) -> &mut Self {
        let origin = Origin::memory(self.authors.len() + 1);
        self.add_author_at(author, origin)
    }

    pub fn add_author_at(&mut self, author: AuthorProfile, origin: Origin) -> &mut Self {
        self.authors.push((author, origin));
        self
    }

    pub fn add_organization(&mut self, org_id: impl Into<String>, display_name: impl Into<String>) -> &mut Self {
        let origin = Origin::memory(self.orgs.len() + 1);
        self.add_organization_at(org_id.into(), display_name.into(), origin)
    }

    pub fn add_organization_at(&mut self, org_id: String, display_name: String, origin: Origin) -> &mut Self {
        self.orgs.push((org_id, display_name, origin));
        self
    }

    pub fn build(self, options: &IngestOptions) -> Result<(Corpus, IngestReport), IngestError> {
        let mut report = IngestReport::default();
        let earliest =
            NaiveDate::from_ymd_opt(EARLIEST_PUB_DATE.0, EARLIEST_PUB_DATE.1, EARLIEST_PUB_DATE.2).unwrap();

        // papers
        let mut papers: BTreeMap<String, (PaperRecord, Origin)> = BTreeMap::new();
        for (paper, origin) in self.papers {
            validate_paper(&paper, &origin, earliest, options.ingestion_date)?;
            match papers.get(&paper.paper_id) {
                Some((existing, _)) if *existing == paper => report.duplicate_papers += 1,
                Some((_, first)) => {
                    return Err(IngestError::Conflict {
                        what: "paper",
                        key: paper.paper_id.clone(),
                        first: first.clone(),
                        second: origin,
                    })
                }
                None => {
                    papers.insert(paper.paper_id.clone(), (paper, origin));
                }
            }
        }

        // organizations
        let mut orgs: BTreeMap<String, (String, Origin)> = BTreeMap::new();
        for (org_id, name, origin) in self.orgs {
            if org_id.is_empty() {
                return Err(IngestError::Malformed { origin, message: "empty org_id".into() });
            }
            match orgs.get(&org_id) {
                Some((existing, _)) if *existing == name => report.duplicate_organizations += 1,
                Some((_, first)) => {
                    return Err(IngestError::Conflict { what: "organization", key: org_id, first: first.clone(), second: origin })
                }
                None => {
                    orgs.insert(org_id, (name, origin));
                }
            }
        }

        // author profiles
        let current_year = options.ingestion_date.year();
        let mut profiles: BTreeMap<String, (AuthorProfile, Origin)> = BTreeMap::new();
        for (author, origin) in self.authors {
            if author.author_id.is_empty() {
                return Err(IngestError::Malformed { origin, message: "empty author_id".into() });
            }
            if let Some(y) = author.phd_year {
                if !(EARLIEST_PHD_YEAR..=current_year).contains(&y) {
                    return Err(IngestError::Malformed {
                        origin,
                        message: format!("phd_year {y} outside [{EARLIEST_PHD_YEAR}, {current_year}]"),
                    });
                }
            }
            match profiles.get(&author.author_id) {
                Some((existing, _)) if *existing == author => report.duplicate_authors += 1,
                Some((_, first)) => {
                    return Err(IngestError::Conflict {
                        what: "author",
                        key: author.author_id.clone(),
                        first: first.clone(),
                        second: origin,
                    })
                }
                None => {
                    profiles.insert(author.author_id.clone(), (author, origin));
                }
            }
        }
        let mut authors: BTreeMap<String, AuthorProfile> =
            profiles.into_iter().map(|(k, (p, _))| (k, p)).collect();
        for (paper, _) in papers.values() {
            for a in &paper.author_ids {
                authors.entry(a.clone()).or_insert_with(|| AuthorProfile {
                    author_id: a.clone(),
                    phd_year: None,
                    org_id: None,
                });
            }
        }
        let mut members: BTreeMap<&str, Vec<String>> = orgs.keys().map(|k| (k.as_str(), Vec::new())).collect();
        for profile in authors.values_mut() {
            if let Some(org) = &profile.org_id {
                match members.get_mut(org.as_str()) {
                    Some(list) => list.push(profile.author_id.clone()),
                    None => {
                        report.unresolved_org_refs += 1;
                        profile.org_id = None;
                    }
                }
            }
        }
        let organizations: Vec<Organization> = orgs
            .iter()
            .map(|(id, (name, _))| Organization {
                org_id: id.clone(),
                display_name: name.clone(),
                members: members.remove(id.as_str()).unwrap_or_default(),
            })
            .collect();

        let papers: Vec<PaperRecord> = papers.into_values().map(|(p, _)| p).collect();
        let paper_index: HashMap<String, usize> =
            papers.iter().enumerate().map(|(i, p)| (p.paper_id.clone(), i)).collect();
        let authors: Vec<AuthorProfile> = authors.into_values().collect();
        let author_index: HashMap<String, usize> =
            authors.iter().enumerate().map(|(i, a)| (a.author_id.clone(), i)).collect();
        let org_index: HashMap<String, usize> =
            organizations.iter().enumerate().map(|(i, o)| (o.org_id.clone(), i)).collect();

        // reads
        let mut reads: Vec<ReadEvent> = Vec::with_capacity(self.reads.len());
        for (read, origin) in self.reads {
            if read.paper_id.is_empty() {
                return Err(IngestError::Malformed { origin, message: "empty paper_id".into() });
            }
            if paper_index.contains_key(&read.paper_id) {
                reads.push(read);
            } else {
                report.quarantined_reads += 1;
            }
        }
        reads.sort_unstable();
        let read_paper: Vec<usize> = reads.iter().map(|r| paper_index[&r.paper_id]).collect();

        // citations
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (edge, origin) in self.cites {
            if edge.citing_id.is_empty() || edge.cited_id.is_empty() {
                return Err(IngestError::Malformed { origin, message: "empty paper id in citation".into() });
            }
            if edge.citing_id == edge.cited_id {
                report.self_citations += 1;
                continue;
            }
            match (paper_index.get(&edge.citing_id), paper_index.get(&edge.cited_id)) {
                (Some(&a), Some(&b)) => {
                    if !edges.insert((a, b)) {
                        report.duplicate_citations += 1;
                    }
                }
                _ => report.quarantined_citations += 1,
            }
        }
        let citations: Vec<(usize, usize)> = edges.into_iter().collect();

        let mut papers_by_author = vec![Vec::new(); authors.len()];
        for (i, p) in papers.iter().enumerate() {
            for a in &p.author_ids {
                papers_by_author[author_index[a]].push(i);
            }
        }
        let mut reads_by_paper = vec![Vec::new(); papers.len()];
        for (r, &p) in read_paper.iter().enumerate() {
            reads_by_paper[p].push(r);
        }
        let mut cited_by = vec![Vec::new(); papers.len()];
        for &(citing, cited) in &citations {
            cited_by[cited].push(citing);
            if papers[citing].pub_date < papers[cited].pub_date {
                report.negative_age_citations += 1;
            }
        }

        report.papers = papers.len();
        report.reads = reads.len();
        report.citations = citations.len();
        report.authors = authors.len();
        report.organizations = organizations.len();

        let corpus = Corpus {
            papers,
            paper_index,
            reads,
            read_paper,
            citations,
            authors,
            author_index,
            organizations,
            org_index,
            papers_by_author,
            reads_by_paper,
            cited_by,
        };
        Ok((corpus, report))
    }
}

fn validate_paper(
    paper: &PaperRecord,
    origin: &Origin,
    earliest: NaiveDate,
    latest: NaiveDate,
) -> Result<(), IngestError> {
    let fail = |message: String| Err(IngestError::Malformed { origin: origin.clone(), message });
    if paper.paper_id.is_empty() {
        return fail("empty paper_id".into());
    }
    if paper.pub_date < earliest || paper.pub_date > latest {
        return fail(format!("pub_date {} outside [{earliest}, {latest}]", paper.pub_date));
    }
    if paper.author_ids.is_empty() {
        return fail(format!("paper {:?} has no authors", paper.paper_id));
    }
    let mut seen = BTreeSet::new();
    for a in &paper.author_ids {
        if a.is_empty() {
            return fail(format!("paper {:?} has an empty author key", paper.paper_id));
        }
        if !seen.insert(a.as_str()) {
            return fail(format!("paper {:?} lists author {a:?} twice", paper.paper_id));
        }
    }
    Ok(())
}
