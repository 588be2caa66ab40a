//! Seeded synthetic corpora with known generating parameters.
//!
//! Every author, paper and cited paper draws from its own ChaCha stream,
//! keyed by the master seed, a per-stage tag and the item index, so the
//! output does not depend on thread scheduling.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, Utc};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::{CareerModel, CareerPath};
use crate::citemodel::CitationLinkModel;
use crate::config::{ConfigError, KeyValues};
use crate::corpus::{
    tsv, AccessKind, AuthorProfile, CitationEdge, Corpus, CorpusBuilder, IngestError, IngestOptions, PaperKind,
    PaperRecord, ReadEvent,
};
use crate::crosstab::AgeBuckets;
use crate::dates::{fractional_year, fractional_year_at, instant_from_fractional_year, DateWindow};
use crate::obsolescence::{Mode, ModeSet, ObsolescenceModel, PARAM_KEYS};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.tsv";
pub const SYNTH_CONFIG_FILE: &str = "synth_config.txt";

const STAGE_AUTHORS: u64 = 0x61;
const STAGE_READS: u64 = 0x72;
const STAGE_CITES: u64 = 0x63;

/// Access-kind mix of generated reads.
const KIND_WEIGHTS: [(AccessKind, f64); 4] = [
    (AccessKind::Abstract, 0.50),
    (AccessKind::Fulltext, 0.38),
    (AccessKind::Citations, 0.08),
    (AccessKind::Other, 0.04),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub authors: usize,
    /// Latent productivity is log-uniform over a range this many times wide,
    /// centred on 1.
    pub latent_spread: f64,
    pub phd_first: i32,
    pub phd_last: i32,
    /// Share of authors who stop research early.
    pub stop_fraction: f64,
    pub stop_age_min: f64,
    pub stop_age_max: f64,
    /// Co-authors per paper are Poisson with this mean.
    pub coauthors_mean: f64,
    /// Cap on authors per paper.
    pub authors_max: usize,
    /// Reads are observed inside this window; no paper is dated after it.
    pub window: DateWindow,
    pub organizations: usize,
    pub token_pool: usize,
    /// Multiplier on every read rate.
    pub read_scale: f64,
    /// Age buckets for planted reference-link follows.
    pub follow_buckets: AgeBuckets,
    /// Probability, per bucket, that a read is preceded by a citation-list
    /// view of another paper. Empty means none are planted.
    pub follow_fractions: Vec<f64>,
    pub career: CareerModel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            authors: 100,
            latent_spread: 10.0,
            phd_first: 1960,
            phd_last: 1995,
            stop_fraction: 0.2,
            stop_age_min: 5.0,
            stop_age_max: 20.0,
            coauthors_mean: 2.0,
            authors_max: 50,
            window: DateWindow::calendar_years(2000, 2001).expect("valid window"),
            organizations: 10,
            token_pool: 20_000,
            read_scale: 0.25,
            follow_buckets: AgeBuckets::default(),
            follow_fractions: Vec::new(),
            career: CareerModel::default(),
        }
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list(kv: &KeyValues, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    let Some(text) = kv.get_str(key) else { return Ok(None) };
    if text.trim().is_empty() {
        return Ok(Some(Vec::new()));
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| ConfigError::BadValue { key: key.into(), value: text.into() }))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

pub const SYNTH_KEYS: [&str; 18] = [
    "seed",
    "authors",
    "latent_spread",
    "phd_first",
    "phd_last",
    "stop_fraction",
    "stop_age_min",
    "stop_age_max",
    "coauthors_mean",
    "authors_max",
    "window",
    "organizations",
    "token_pool",
    "read_scale",
    "follow_ages",
    "follow_fractions",
    "c",
    "kD",
];

impl SynthConfig {
    /// Every key a config file may set.
    pub fn known_keys() -> Vec<&'static str> {
        let mut keys: Vec<&str> = SYNTH_KEYS.to_vec();
        keys.extend(PARAM_KEYS);
        keys.extend(super::AGE_MODEL_KEYS);
        keys
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        kv.check_known(&Self::known_keys())?;
        let mut c = Self::default();
        kv.update("seed", &mut c.seed)?;
        kv.update("authors", &mut c.authors)?;
        kv.update("latent_spread", &mut c.latent_spread)?;
        kv.update("phd_first", &mut c.phd_first)?;
        kv.update("phd_last", &mut c.phd_last)?;
        kv.update("stop_fraction", &mut c.stop_fraction)?;
        kv.update("stop_age_min", &mut c.stop_age_min)?;
        kv.update("stop_age_max", &mut c.stop_age_max)?;
        kv.update("coauthors_mean", &mut c.coauthors_mean)?;
        kv.update("authors_max", &mut c.authors_max)?;
        kv.update("window", &mut c.window)?;
        kv.update("organizations", &mut c.organizations)?;
        kv.update("token_pool", &mut c.token_pool)?;
        kv.update("read_scale", &mut c.read_scale)?;
        if let Some(edges) = parse_list(kv, "follow_ages")? {
            c.follow_buckets = AgeBuckets::new(edges).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(f) = parse_list(kv, "follow_fractions")? {
            c.follow_fractions = f;
        }
        c.career = CareerModel::from_key_values(kv)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("seed", self.seed);
        kv.insert("authors", self.authors);
        kv.insert("latent_spread", self.latent_spread);
        kv.insert("phd_first", self.phd_first);
        kv.insert("phd_last", self.phd_last);
        kv.insert("stop_fraction", self.stop_fraction);
        kv.insert("stop_age_min", self.stop_age_min);
        kv.insert("stop_age_max", self.stop_age_max);
        kv.insert("coauthors_mean", self.coauthors_mean);
        kv.insert("authors_max", self.authors_max);
        kv.insert("window", self.window);
        kv.insert("organizations", self.organizations);
        kv.insert("token_pool", self.token_pool);
        kv.insert("read_scale", self.read_scale);
        let edges: Vec<f64> = (0..self.follow_buckets.len()).map(|i| self.follow_buckets.bounds(i).0).collect();
        kv.insert("follow_ages", join(&edges));
        kv.insert("follow_fractions", join(&self.follow_fractions));
        for (k, v) in PARAM_KEYS.iter().zip(self.career.reads.params()) {
            kv.insert(*k, v);
        }
        kv.insert("c", self.career.link.cites_per_read());
        kv.insert("kD", self.career.link.ramp());
        self.career.productivity.write_key_values(&mut kv);
        kv
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.authors == 0 {
            return bad("authors must be at least 1");
        }
        if !(self.latent_spread.is_finite() && self.latent_spread >= 1.0) {
            return bad("latent_spread must be at least 1");
        }
        if self.phd_first > self.phd_last || self.phd_first < 1850 {
            return bad("phd_first must be >= 1850 and <= phd_last");
        }
        if f64::from(self.phd_last) + 0.5 >= self.window.end_year() {
            return bad("every PhD must precede the window end");
        }
        if !(0.0..=1.0).contains(&self.stop_fraction) {
            return bad("stop_fraction must lie in [0, 1]");
        }
        if !(self.stop_age_min > 0.0 && self.stop_age_min <= self.stop_age_max && self.stop_age_max.is_finite()) {
            return bad("need 0 < stop_age_min <= stop_age_max");
        }
        if !(self.coauthors_mean.is_finite() && self.coauthors_mean >= 0.0) || self.authors_max == 0 {
            return bad("coauthors_mean must be >= 0 and authors_max >= 1");
        }
        if self.token_pool == 0 {
            return bad("token_pool must be at least 1");
        }
        if !(self.read_scale.is_finite() && self.read_scale >= 0.0) {
            return bad("read_scale must be finite and non-negative");
        }
        if !self.follow_fractions.is_empty() && self.follow_fractions.len() != self.follow_buckets.len() {
            return bad("follow_fractions needs one value per follow age bucket");
        }
        if self.follow_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("follow fractions must lie in [0, 1]");
        }
        self.career.productivity.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

/// Generating parameters of one author.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub author_id: String,
    pub latent: f64,
    pub stop_age: f64,
    pub phd_year: i32,
}

impl GroundTruth {
    pub fn path(&self) -> CareerPath {
        CareerPath::stopping(self.latent, self.stop_age)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub config: SynthConfig,
    pub papers: Vec<PaperRecord>,
    pub reads: Vec<ReadEvent>,
    pub cites: Vec<CitationEdge>,
    pub authors: Vec<AuthorProfile>,
    pub organizations: Vec<(String, String)>,
    pub truth: Vec<GroundTruth>,
}

fn stream(seed: u64, stage: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stage.rotate_left(56));
    rng.set_stream(index as u64);
    rng
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as u64)
}

fn author_id(i: usize) -> String {
    format!("A{i:05}")
}

fn org_id(i: usize) -> String {
    format!("O{i:03}")
}

struct DraftPaper {
    when: f64,
    authors: Vec<usize>,
}

/// Sample a corpus from `config`.
pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus, ConfigError> {
    config.validate()?;
    let end = config.window.end_year();
    let model = &config.career.productivity;
    let n_authors = config.authors;

    let drawn: Vec<(GroundTruth, AuthorProfile, ChaCha8Rng)> = (0..n_authors)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, STAGE_AUTHORS, i);
            let latent = config.latent_spread.powf(rng.random::<f64>() - 0.5);
            let phd_year = rng.random_range(config.phd_first..=config.phd_last);
            let stop_age = if rng.random_bool(config.stop_fraction) {
                rng.random_range(config.stop_age_min..=config.stop_age_max)
            } else {
                f64::INFINITY
            };
            let org = (config.organizations > 0).then(|| rng.random_range(0..config.organizations));
            let truth = GroundTruth { author_id: author_id(i), latent, stop_age, phd_year };
            let profile = AuthorProfile { author_id: author_id(i), phd_year: Some(phd_year), org_id: org.map(org_id) };
            (truth, profile, rng)
        })
        .collect();

    // co-authors are drawn from authors whose career has started
    let career_start = |t: &GroundTruth| f64::from(t.phd_year) + 0.5;
    let mut by_start: Vec<usize> = (0..n_authors).collect();
    by_start.sort_by(|&a, &b| career_start(&drawn[a].0).total_cmp(&career_start(&drawn[b].0)).then(a.cmp(&b)));
    let starts: Vec<f64> = by_start.iter().map(|&a| career_start(&drawn[a].0)).collect();

    let per_author: Vec<(GroundTruth, AuthorProfile, Vec<DraftPaper>)> = drawn
        .into_par_iter()
        .enumerate()
        .map(|(i, (truth, profile, mut rng))| {
            let path = truth.path();
            let start = career_start(&truth);
            let own = by_start.iter().position(|&a| a == i).expect("every author is listed");
            let now_age = end - start;
            let last = start + now_age.min(truth.stop_age).min(model.retire_age);
            let peak = 2.0 * model.p0 * truth.latent;
            let mut papers = Vec::new();
            let mut t = start;
            loop {
                t += -(1.0 - rng.random::<f64>()).ln() / peak;
                if t >= last {
                    break;
                }
                let accept = model.historical_output(&path, t - start, now_age) / peak;
                if rng.random::<f64>() >= accept {
                    continue;
                }
                let active = starts.partition_point(|&s| s <= t);
                let extra = (poisson(&mut rng, config.coauthors_mean) as usize)
                    .min(config.authors_max - 1)
                    .min(active - 1);
                let mut authors = vec![i];
                for k in sample(&mut rng, active - 1, extra) {
                    authors.push(by_start[if k >= own { k + 1 } else { k }]);
                }
                papers.push(DraftPaper { when: t, authors });
            }
            (truth, profile, papers)
        })
        .collect();

    let mut papers = Vec::new();
    let mut truth = Vec::with_capacity(n_authors);
    let mut authors = Vec::with_capacity(n_authors);
    for (t, a, drafts) in per_author {
        truth.push(t);
        authors.push(a);
        for d in drafts {
            let pub_date = crate::dates::date_from_fractional_year(d.when);
            papers.push(PaperRecord {
                paper_id: format!("P{:07}", papers.len()),
                venue: "SYN".into(),
                pub_date,
                kind: PaperKind::RefereedArticle,
                author_ids: d.authors.into_iter().map(author_id).collect(),
            });
        }
    }
    let pub_frac: Vec<f64> = papers.iter().map(|p| fractional_year(p.pub_date)).collect();

    let reads = generate_reads(config, &papers, &pub_frac);
    let cites = generate_cites(config, &papers, &pub_frac);

    let organizations = (0..config.organizations).map(|i| (org_id(i), format!("Organization {i}"))).collect();
    Ok(SyntheticCorpus { config: config.clone(), papers, reads, cites, authors, organizations, truth })
}

/// Age in `[a, b]` from the density `∝ e^{-k t}`.
fn truncated_exponential<R: Rng>(rng: &mut R, k: f64, a: f64, b: f64) -> f64 {
    let u: f64 = rng.random();
    if k * (b - a) < 1e-12 {
        return a + u * (b - a);
    }
    a - (-u * (-(-k * (b - a)).exp_m1())).ln_1p() / k
}

fn pick_kind<R: Rng>(rng: &mut R) -> AccessKind {
    let mut u: f64 = rng.random();
    for (kind, w) in KIND_WEIGHTS {
        if u < w {
            return kind;
        }
        u -= w;
    }
    AccessKind::Other
}

fn generate_reads(config: &SynthConfig, papers: &[PaperRecord], pub_frac: &[f64]) -> Vec<ReadEvent> {
    let reads_model = &config.career.reads;
    let window = &config.window;
    let (ws, we) = (window.start_year(), window.end_year());
    let (first, last) = (window.start_instant(), window.end_instant() - Duration::seconds(1));
    let modes: Vec<Mode> = ModeSet::ALL.iter().collect();

    let per_paper: Vec<Vec<ReadEvent>> = (0..papers.len())
        .into_par_iter()
        .map(|i| {
            let a1 = we - pub_frac[i];
            if a1 <= 0.0 {
                return Vec::new();
            }
            let a0 = (ws - pub_frac[i]).max(0.0);
            let weights: Vec<f64> =
                modes.iter().map(|&m| config.read_scale * reads_model.mode_integral_between(m, a0, a1)).collect();
            let total: f64 = weights.iter().sum();
            let mut rng = stream(config.seed, STAGE_READS, i);
            let n = poisson(&mut rng, total);
            let mut out = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let mut u = rng.random::<f64>() * total;
                let mut mode = modes[modes.len() - 1];
                for (&m, &w) in modes.iter().zip(&weights) {
                    if u < w {
                        mode = m;
                        break;
                    }
                    u -= w;
                }
                let age = truncated_exponential(&mut rng, reads_model.component(mode).decay, a0, a1);
                let ts = instant_from_fractional_year(pub_frac[i] + age).clamp(first, last);
                let token = format!("T{:06}", rng.random_range(0..config.token_pool));
                let kind = pick_kind(&mut rng);
                if !config.follow_fractions.is_empty() {
                    let f = config.follow_fractions[config.follow_buckets.index(age)];
                    if f > 0.0 && rng.random_bool(f) {
                        if let Some(ev) = planted_view(&mut rng, papers, pub_frac, i, ts, &token) {
                            out.push(ev);
                        }
                    }
                }
                out.push(ReadEvent { timestamp: ts, reader_token: Some(token), paper_id: papers[i].paper_id.clone(), access_kind: kind });
            }
            out
        })
        .collect();
    let mut reads: Vec<ReadEvent> = per_paper.into_iter().flatten().collect();
    reads.sort();
    reads
}

/// A citation-list view of some other, already published paper shortly
/// before `ts` by the same reader.
fn planted_view<R: Rng>(
    rng: &mut R,
    papers: &[PaperRecord],
    pub_frac: &[f64],
    target: usize,
    ts: DateTime<Utc>,
    token: &str,
) -> Option<ReadEvent> {
    if papers.len() < 2 {
        return None;
    }
    let when = ts - Duration::seconds(rng.random_range(1..=100));
    let now = fractional_year_at(when);
    for _ in 0..20 {
        let j = rng.random_range(0..papers.len());
        if j != target && pub_frac[j] <= now {
            return Some(ReadEvent {
                timestamp: when,
                reader_token: Some(token.to_string()),
                paper_id: papers[j].paper_id.clone(),
                access_kind: AccessKind::Citations,
            });
        }
    }
    None
}

fn generate_cites(config: &SynthConfig, papers: &[PaperRecord], pub_frac: &[f64]) -> Vec<CitationEdge> {
    let reads_model: &ObsolescenceModel = &config.career.reads;
    let link: &CitationLinkModel = &config.career.link;
    let end = config.window.end_year();
    let Some(first_year) = papers.iter().map(|p| p.pub_date.year()).min() else { return Vec::new() };
    let last_year = config.window.end().pred_opt().map_or(first_year, |d| d.year());
    let mut by_year: Vec<Vec<usize>> = vec![Vec::new(); (last_year - first_year + 1).max(0) as usize];
    for (i, p) in papers.iter().enumerate() {
        if let Some(slot) = by_year.get_mut((p.pub_date.year() - first_year) as usize) {
            slot.push(i);
        }
    }

    let per_paper: Vec<Vec<CitationEdge>> = (0..papers.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, STAGE_CITES, i);
            let mut out = Vec::new();
            for year in papers[i].pub_date.year()..=last_year {
                let y0 = f64::from(year);
                let y1 = (y0 + 1.0).min(end);
                let (a, b) = ((y0 - pub_frac[i]).max(0.0), y1 - pub_frac[i]);
                if b <= a {
                    continue;
                }
                let n = poisson(&mut rng, link.cites_between(reads_model, a, b)) as usize;
                if n == 0 {
                    continue;
                }
                let pool: Vec<usize> =
                    by_year[(year - first_year) as usize].iter().copied().filter(|&j| j != i).collect();
                let take = n.min(pool.len());
                for k in sample(&mut rng, pool.len(), take) {
                    out.push(CitationEdge {
                        citing_id: papers[pool[k]].paper_id.clone(),
                        cited_id: papers[i].paper_id.clone(),
                    });
                }
            }
            out
        })
        .collect();
    let mut cites: Vec<CitationEdge> = per_paper.into_iter().flatten().collect();
    cites.sort();
    cites
}

impl SyntheticCorpus {
    /// Index the sample in memory.
    pub fn corpus(&self) -> Result<Corpus, IngestError> {
        let mut b = CorpusBuilder::new();
        self.papers.iter().cloned().for_each(|p| {
            b.add_paper(p);
        });
        self.reads.iter().cloned().for_each(|r| {
            b.add_read(r);
        });
        self.cites.iter().cloned().for_each(|c| {
            b.add_citation(c);
        });
        self.authors.iter().cloned().for_each(|a| {
            b.add_author(a);
        });
        for (id, name) in &self.organizations {
            b.add_organization(id.clone(), name.clone());
        }
        let options = IngestOptions { ingestion_date: self.config.window.end() };
        b.build(&options).map(|(c, _)| c)
    }

    pub fn ground_truth_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.truth {
            let stop = if t.stop_age.is_finite() { t.stop_age.to_string() } else { "inf".to_string() };
            let _ = writeln!(out, "{}\t{}\t{}\t{}", t.author_id, t.latent, stop, t.phd_year);
        }
        out
    }

    /// Write the five corpus files, the ground truth and the config used.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let lines = |items: Vec<String>| {
            let mut s = items.join("\n");
            if !s.is_empty() {
                s.push('\n');
            }
            s
        };
        std::fs::write(dir.join(tsv::PAPERS_FILE), lines(self.papers.iter().map(tsv::format_paper).collect()))?;
        std::fs::write(dir.join(tsv::READS_FILE), lines(self.reads.iter().map(tsv::format_read).collect()))?;
        std::fs::write(dir.join(tsv::CITES_FILE), lines(self.cites.iter().map(tsv::format_cite).collect()))?;
        std::fs::write(dir.join(tsv::AUTHORS_FILE), lines(self.authors.iter().map(tsv::format_author).collect()))?;
        std::fs::write(
            dir.join(tsv::ORGS_FILE),
            lines(self.organizations.iter().map(|(id, name)| tsv::format_org(id, name)).collect()),
        )?;
        std::fs::write(dir.join(GROUND_TRUTH_FILE), self.ground_truth_tsv())?;
        std::fs::write(dir.join(SYNTH_CONFIG_FILE), self.config.to_key_values().to_string())
    }
}
