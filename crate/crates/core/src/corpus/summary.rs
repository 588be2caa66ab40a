use std::collections::BTreeMap;

use chrono::Datelike;
use rayon::prelude::*;

use super::{Corpus, PaperFilter};
use crate::dates::DateWindow;

/// Whole-corpus read/cite coverage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryStats {
    pub total_papers: usize,
    pub read_and_cited: usize,
    pub read_only: usize,
    pub cited_only: usize,
    pub neither: usize,
    /// Reads-to-cites ratio per publication year.
    pub by_year: Vec<YearRatio>,
    /// Set when the corpus held no papers; every count is then zero.
    pub empty_corpus: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearRatio {
    pub pub_year: i32,
    pub papers: usize,
    pub reads: usize,
    pub cites: usize,
    /// `None` when the year received no citations.
    pub reads_per_cite: Option<f64>,
}

impl SummaryStats {
    pub fn from_partition(read_and_cited: usize, read_only: usize, cited_only: usize, neither: usize) -> Self {
        let total_papers = read_and_cited + read_only + cited_only + neither;
        Self {
            total_papers,
            read_and_cited,
            read_only,
            cited_only,
            neither,
            by_year: Vec::new(),
            empty_corpus: total_papers == 0,
        }
    }

    pub fn distinct_read(&self) -> usize {
        self.read_and_cited + self.read_only
    }

    pub fn distinct_cited(&self) -> usize {
        self.read_and_cited + self.cited_only
    }

    fn fraction(&self, n: usize) -> f64 {
        if self.total_papers == 0 {
            0.0
        } else {
            n as f64 / self.total_papers as f64
        }
    }

    pub fn fraction_neither(&self) -> f64 {
        self.fraction(self.neither)
    }

    pub fn fraction_read(&self) -> f64 {
        self.fraction(self.distinct_read())
    }

    pub fn fraction_cited(&self) -> f64 {
        self.fraction(self.distinct_cited())
    }
}

/// Reads counted in `read_window`; a paper is cited when a paper published in
/// `cite_window` cites it. Any access kind counts as a read.
pub fn corpus_summary(corpus: &Corpus, read_window: &DateWindow, cite_window: &DateWindow) -> SummaryStats {
    if corpus.is_empty() {
        return SummaryStats::from_partition(0, 0, 0, 0);
    }
    let per_paper: Vec<(i32, usize, usize)> = (0..corpus.papers().len())
        .into_par_iter()
        .map(|i| {
            (
                corpus.paper(i).pub_date.year(),
                corpus.reads_in_window(i, read_window),
                corpus.cites_in_window(i, cite_window),
            )
        })
        .collect();

    let (mut both, mut read_only, mut cited_only, mut neither) = (0, 0, 0, 0);
    let mut years: BTreeMap<i32, (usize, usize, usize)> = BTreeMap::new();
    for &(year, reads, cites) in &per_paper {
        match (reads > 0, cites > 0) {
            (true, true) => both += 1,
            (true, false) => read_only += 1,
            (false, true) => cited_only += 1,
            (false, false) => neither += 1,
        }
        let e = years.entry(year).or_default();
        e.0 += 1;
        e.1 += reads;
        e.2 += cites;
    }
    let mut stats = SummaryStats::from_partition(both, read_only, cited_only, neither);
    stats.by_year = years
        .into_iter()
        .map(|(pub_year, (papers, reads, cites))| YearRatio {
            pub_year,
            papers,
            reads,
            cites,
            reads_per_cite: (cites > 0).then(|| reads as f64 / cites as f64),
        })
        .collect();
    stats
}

/// One publication-year cohort of the readership-by-age curve.
#[derive(Debug, Clone, PartialEq)]
pub struct YearlyReadRate {
    pub pub_year: i32,
    pub papers: usize,
    pub reads: usize,
    /// Mean reads per article per year over the window.
    pub rate: f64,
    /// Mean age of the cohort's papers at the window midpoint, in years.
    pub mean_age: f64,
}

/// Reads per article per year.
pub fn yearly_rate(reads: usize, papers: usize, window_years: f64) -> f64 {
    reads as f64 / papers as f64 / window_years
}

/// Mean reads per article per year, grouped by publication year, over the
/// papers matching `filter`. Years with no matching paper are absent.
pub fn reads_per_paper_by_year(corpus: &Corpus, filter: &PaperFilter, window: &DateWindow) -> Vec<YearlyReadRate> {
    let mid = window.midpoint_year();
    let mut years: BTreeMap<i32, (usize, usize, f64)> = BTreeMap::new();
    for (i, paper) in corpus.papers().iter().enumerate() {
        if !filter.matches(paper) {
            continue;
        }
        let e = years.entry(paper.pub_date.year()).or_default();
        e.0 += 1;
        e.1 += corpus.reads_in_window(i, window);
        e.2 += mid - paper.pub_year_fraction();
    }
    let span = window.years();
    years
        .into_iter()
        .map(|(pub_year, (papers, reads, age_sum))| YearlyReadRate {
            pub_year,
            papers,
            reads,
            rate: yearly_rate(reads, papers, span),
            mean_age: age_sum / papers as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use chrono::{NaiveDate, TimeZone, Utc};

    use super::*;
    use crate::corpus::{AccessKind, CitationEdge, CorpusBuilder, IngestOptions, PaperKind, PaperRecord, ReadEvent};

    fn paper(id: &str, date: (i32, u32, u32)) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            venue: "ApJ".into(),
            pub_date: NaiveDate::from_ymd_opt(date.0, date.1, date.2).unwrap(),
            kind: PaperKind::RefereedArticle,
            author_ids: vec!["a".into()],
        }
    }

    fn read_at(id: &str, y: i32, m: u32) -> ReadEvent {
        ReadEvent {
            timestamp: Utc.with_ymd_and_hms(y, m, 10, 12, 0, 0).unwrap(),
            reader_token: None,
            paper_id: id.into(),
            access_kind: AccessKind::Fulltext,
        }
    }

    #[test]
    fn paper_shaped_partition() {
        // Column and row totals of the all-database read/cite table: 2,205,950
        // papers; 1,714,338 unread; 2,133,024 uncited. The uncited-but-read
        // margin comes from the first column's log2 cells.
        let total = 2_205_950usize;
        let unread = 1_714_338usize;
        let uncited = 2_133_024usize;
        let cited_unread: usize = [12.03f64, 9.32, 5.81, 2.32, 0.0].iter().map(|v| 2f64.powf(*v).round() as usize).sum();
        let neither = unread - cited_unread;
        let cited = total - uncited;
        let read = total - unread;
        let both = cited - cited_unread;
        let s = SummaryStats::from_partition(both, read - both, cited_unread, neither);
        assert_eq!(s.total_papers, total);
        assert_eq!(s.distinct_read(), 491_612);
        assert_eq!(s.distinct_cited(), 72_926);
        assert!((s.fraction_neither() - 0.775).abs() < 5e-4, "{}", s.fraction_neither());
    }

    #[test]
    fn every_paper_read_and_cited() {
        let mut b = CorpusBuilder::new();
        b.add_paper(paper("p1", (2000, 3, 1)));
        b.add_paper(paper("p2", (2000, 4, 1)));
        b.add_read(read_at("p1", 2000, 6));
        b.add_read(read_at("p2", 2000, 6));
        b.add_citation(CitationEdge { citing_id: "p2".into(), cited_id: "p1".into() });
        b.add_citation(CitationEdge { citing_id: "p1".into(), cited_id: "p2".into() });
        let (c, _) = b.build(&IngestOptions::default()).unwrap();
        let w = DateWindow::calendar_years(2000, 2000).unwrap();
        let s = corpus_summary(&c, &w, &w);
        assert_eq!(s.fraction_neither(), 0.0);
        assert_eq!(s.read_and_cited, 2);
        assert_eq!(s.by_year[0].reads_per_cite, Some(1.0));
    }

    #[test]
    fn empty_corpus_flags_warning() {
        let w = DateWindow::calendar_years(2000, 2000).unwrap();
        let s = corpus_summary(&Corpus::empty(), &w, &w);
        assert!(s.empty_corpus);
        assert_eq!(s.total_papers, 0);
        assert_eq!(s.fraction_neither(), 0.0);
    }

    #[test]
    fn yearly_rate_arithmetic() {
        assert_eq!(yearly_rate(30, 2, 0.75), 20.0);
    }

    #[test]
    fn reads_per_paper_over_a_whole_year_window() {
        let mut b = CorpusBuilder::new();
        b.add_paper(paper("p1", (1990, 7, 1)));
        b.add_paper(paper("p2", (1990, 2, 1)));
        b.add_paper(paper("q", (1995, 7, 1)));
        for i in 0..30 {
            b.add_read(read_at(if i % 3 == 0 { "p1" } else { "p2" }, 2001, 1 + (i % 12) as u32));
        }
        b.add_read(read_at("p1", 2002, 2));
        let (c, _) = b.build(&IngestOptions::default()).unwrap();
        let w = DateWindow::calendar_years(2001, 2001).unwrap();
        let series = reads_per_paper_by_year(&c, &PaperFilter::all(), &w);
        assert_eq!(series.len(), 2);
        assert_eq!((series[0].pub_year, series[0].rate), (1990, 15.0));
        assert_eq!((series[1].pub_year, series[1].rate), (1995, 0.0));

        let none = reads_per_paper_by_year(&c, &PaperFilter::venues(["AJ"]), &w);
        assert!(none.is_empty());
        let quiet = DateWindow::calendar_years(1980, 1980).unwrap();
        assert!(reads_per_paper_by_year(&c, &PaperFilter::all(), &quiet).iter().all(|y| y.rate == 0.0));
    }
}
