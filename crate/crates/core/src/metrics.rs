//! Per-author productivity measures.
//!
//! Each paper's reads and cites are shared equally among its authors. Reads
//! are counted inside a window and expressed per year; citations are lifetime
//! totals up to a cutoff date. SumProd combines the two with a sample-wide
//! weight `f` chosen so that reads and cites carry equal total weight.

use std::fmt::Write as _;

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

use crate::agemodel::{AgeModelError, CareerModel, Expectation};
use crate::config::KeyValues;
use crate::corpus::Corpus;
use crate::dates::{fractional_year, DateWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("sample has no reads; cannot calibrate the read weight")]
    ZeroReads,
    #[error("read weight f must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("model expects nothing at career age {0}")]
    ZeroExpectation(f64),
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error(transparent)]
    Model(#[from] AgeModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Divide each paper's counts by its number of authors.
    PerAuthorShare,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub read_window: DateWindow,
    /// Citations from papers dated on or before this day count.
    pub cite_cutoff: NaiveDate,
    pub read10_horizon_years: f64,
    pub normalization: Normalization,
}

impl MetricConfig {
    pub fn new(read_window: DateWindow, cite_cutoff: NaiveDate) -> Self {
        Self { read_window, cite_cutoff, read10_horizon_years: 10.0, normalization: Normalization::PerAuthorShare }
    }

    /// The day the recent-paper horizon and career ages are measured from:
    /// the end of the read window.
    pub fn as_of(&self) -> NaiveDate {
        self.read_window.end()
    }

    fn share(&self, n_authors: usize) -> f64 {
        match self.normalization {
            Normalization::PerAuthorShare => 1.0 / n_authors.max(1) as f64,
            Normalization::Raw => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuthorCounts {
    pub norm_cites: f64,
    /// Reads per year.
    pub norm_reads: f64,
    pub papers: usize,
}

impl AuthorCounts {
    /// Set for authors with no papers; every count is then zero.
    pub fn no_papers(&self) -> bool {
        self.papers == 0
    }
}

/// Author-share-weighted lifetime cites and yearly reads of one author.
pub fn normalized_counts(corpus: &Corpus, author_idx: usize, config: &MetricConfig) -> AuthorCounts {
    counts_where(corpus, author_idx, config, |_| true)
}

fn counts_where(
    corpus: &Corpus,
    author_idx: usize,
    config: &MetricConfig,
    keep: impl Fn(usize) -> bool,
) -> AuthorCounts {
    let years = config.read_window.years();
    let mut out = AuthorCounts::default();
    for &p in corpus.papers_of_author(author_idx) {
        if !keep(p) {
            continue;
        }
        let share = config.share(corpus.paper(p).n_authors());
        out.papers += 1;
        out.norm_cites += corpus.cites_until(p, config.cite_cutoff) as f64 * share;
        out.norm_reads += corpus.reads_in_window(p, &config.read_window) as f64 * share / years;
    }
    out
}

/// Read weight making `f · Σ reads = Σ cites` over the sample.
pub fn calibrate_f<'a>(sample: impl IntoIterator<Item = &'a AuthorCounts>) -> Result<f64, MetricsError> {
    let (reads, cites) = sample.into_iter().fold((0.0, 0.0), |(r, c), a| (r + a.norm_reads, c + a.norm_cites));
    if reads <= 0.0 {
        return Err(MetricsError::ZeroReads);
    }
    Ok(cites / reads)
}

/// `(f · reads + cites) / 2`.
pub fn sumprod(norm_reads: f64, norm_cites: f64, f: f64) -> Result<f64, MetricsError> {
    if !(f > 0.0) {
        return Err(MetricsError::NonPositiveWeight(f));
    }
    Ok((f * norm_reads + norm_cites) / 2.0)
}

/// Yearly reads of the author's papers younger than the horizon at `as_of`.
pub fn read10(corpus: &Corpus, author_idx: usize, config: &MetricConfig, as_of: NaiveDate) -> Result<f64, MetricsError> {
    let horizon = config.read10_horizon_years;
    if !(horizon > 0.0) {
        return Err(MetricsError::BadHorizon(horizon));
    }
    let now = fractional_year(as_of);
    Ok(counts_where(corpus, author_idx, config, |p| {
        let age = now - corpus.paper(p).pub_year_fraction();
        (0.0..horizon).contains(&age)
    })
    .norm_reads)
}

/// Years since the PhD on `as_of`, counting the PhD as granted mid-year.
pub fn career_age(phd_year: i32, as_of: NaiveDate) -> f64 {
    fractional_year(as_of) - (f64::from(phd_year) + 0.5)
}

/// `score` relative to the model expectation at the author's career age.
pub fn age_normalize(
    score: f64,
    phd_year: i32,
    as_of: NaiveDate,
    model: &CareerModel,
    which: Expectation,
) -> Result<f64, MetricsError> {
    let age = career_age(phd_year, as_of);
    if age < 0.0 {
        return Err(MetricsError::ZeroExpectation(age));
    }
    let expected = model.expectation(which, age)?;
    if !(expected > 0.0) {
        return Err(MetricsError::ZeroExpectation(age));
    }
    Ok(score / expected)
}

/// Which papers a read-cite point summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperGroup {
    All,
    Before(i32),
    From(i32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadCitePoint {
    pub author_id: String,
    pub group: PaperGroup,
    pub norm_reads: f64,
    pub norm_cites: f64,
}

/// One point per author, or two when `split_year` divides the papers into
/// those published before it and the rest.
pub fn readcite_points(
    corpus: &Corpus,
    authors: &[usize],
    config: &MetricConfig,
    split_year: Option<i32>,
) -> Vec<ReadCitePoint> {
    use chrono::Datelike;
    let mut out = Vec::new();
    for &a in authors {
        let id = &corpus.author(a).author_id;
        let groups = match split_year {
            None => vec![PaperGroup::All],
            Some(y) => vec![PaperGroup::Before(y), PaperGroup::From(y)],
        };
        for group in groups {
            let c = counts_where(corpus, a, config, |p| {
                let year = corpus.paper(p).pub_date.year();
                match group {
                    PaperGroup::All => true,
                    PaperGroup::Before(y) => year < y,
                    PaperGroup::From(y) => year >= y,
                }
            });
            out.push(ReadCitePoint { author_id: id.clone(), group, norm_reads: c.norm_reads, norm_cites: c.norm_cites });
        }
    }
    out
}

/// Midpoint percentiles `100 (r − ½) / n`; tied scores share their mean rank.
pub fn rank_percentiles(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = 100.0 * (rank - 0.5) / n as f64;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthorMetrics {
    pub author_id: String,
    pub phd_year: Option<i32>,
    pub org_id: Option<String>,
    pub papers: usize,
    pub norm_cites: f64,
    pub norm_reads: f64,
    pub sumprod: f64,
    pub read10: f64,
    /// `None` without a PhD year or where the model expects nothing.
    pub age_norm_sumprod: Option<f64>,
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBatch {
    pub f: f64,
    pub config: MetricConfig,
    pub authors: Vec<AuthorMetrics>,
}

pub const METRICS_HEADER: &str =
    "author_id\tphd_year\torg_id\tnorm_cites\tnorm_reads\tsumprod\tread10\tage_norm_sumprod\tpercentile";

/// Metrics for every author in the corpus. `f` is calibrated on the whole
/// sample unless given; percentiles rank SumProd.
pub fn compute_batch(
    corpus: &Corpus,
    config: &MetricConfig,
    model: &CareerModel,
    f: Option<f64>,
) -> Result<MetricsBatch, MetricsError> {
    let as_of = config.as_of();
    let rows: Vec<(AuthorCounts, f64)> = (0..corpus.authors().len())
        .into_par_iter()
        .map(|a| Ok((normalized_counts(corpus, a, config), read10(corpus, a, config, as_of)?)))
        .collect::<Result<_, MetricsError>>()?;
    let f = match f {
        Some(f) => f,
        None => calibrate_f(rows.iter().map(|r| &r.0))?,
    };
    let scores: Vec<f64> = rows.iter().map(|(c, _)| sumprod(c.norm_reads, c.norm_cites, f)).collect::<Result<_, _>>()?;
    let percentiles = rank_percentiles(&scores);
    let authors = rows
        .into_iter()
        .enumerate()
        .map(|(i, (c, r10))| {
            let profile = corpus.author(i);
            let age_norm = profile
                .phd_year
                .and_then(|y| age_normalize(scores[i], y, as_of, model, Expectation::SumProd(f)).ok());
            AuthorMetrics {
                author_id: profile.author_id.clone(),
                phd_year: profile.phd_year,
                org_id: profile.org_id.clone(),
                papers: c.papers,
                norm_cites: c.norm_cites,
                norm_reads: c.norm_reads,
                sumprod: scores[i],
                read10: r10,
                age_norm_sumprod: age_norm,
                percentile: percentiles[i],
            }
        })
        .collect();
    Ok(MetricsBatch { f, config: config.clone(), authors })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl MetricsBatch {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for a in &self.authors {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                a.author_id,
                opt(a.phd_year),
                opt(a.org_id.as_deref()),
                a.norm_cites,
                a.norm_reads,
                a.sumprod,
                a.read10,
                opt(a.age_norm_sumprod),
                a.percentile
            );
        }
        out
    }

    /// The key=value record of `f`, windows and cutoffs.
    pub fn sidecar(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("f", self.f);
        kv.insert("read_window", self.config.read_window);
        kv.insert("window_years", self.config.read_window.years());
        kv.insert("cite_cutoff", self.config.cite_cutoff);
        kv.insert("read10_horizon_years", self.config.read10_horizon_years);
        kv.insert("as_of", self.config.as_of());
        kv.insert(
            "normalization",
            match self.config.normalization {
                Normalization::PerAuthorShare => "per_author_share",
                Normalization::Raw => "raw",
            },
        );
        kv.insert("authors", self.authors.len());
        kv.insert("authors_without_papers", self.authors.iter().filter(|a| a.papers == 0).count());
        kv
    }
}

/// One parsed row of a metrics TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub author_id: String,
    pub org_id: Option<String>,
    pub norm_cites: f64,
    pub sumprod: f64,
    pub read10: f64,
}

/// Parse the columns of [`MetricsBatch::to_tsv`] that ranking needs.
pub fn parse_metrics_tsv(text: &str) -> Result<Vec<MetricsRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') || line == METRICS_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(format!("line {}: expected 9 fields, found {}", i + 1, f.len()));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| format!("line {}: bad number {:?}", i + 1, f[k]));
        rows.push(MetricsRow {
            author_id: f[0].to_string(),
            org_id: (f[2] != "-").then(|| f[2].to_string()),
            norm_cites: num(3)?,
            sumprod: num(5)?,
            read10: num(6)?,
        });
    }
    Ok(rows)
}
