use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, Utc};
use readcite_core::agemodel::{self, curves_tsv, CareerModel, SynthConfig, AGE_MODEL_KEYS};
use readcite_core::citemodel::CitationLinkModel;
use readcite_core::config::{ConfigError, KeyValues};
use readcite_core::corpus::{
    corpus_summary, ingest, reads_per_paper_by_year, Corpus, FileSet, IngestError, IngestOptions, PaperFilter,
    PaperKind,
};
use readcite_core::crosstab::{
    build_crosstab, link_follow_stats, predictor_profile, AgeBuckets, CellFormat, CiteSource, CrossTab, Direction,
};
use readcite_core::dates::{DateError, DateWindow};
use readcite_core::metrics::{self, compute_batch, readcite_points, MetricConfig, Normalization, PaperGroup};
use readcite_core::obsolescence::{
    fit, half_life, BinnedReadCurve, FitConfig, Mode, ModeSet, ObsolescenceModel, FIT_CONFIG_KEYS, PARAM_KEYS,
};
use readcite_core::rank::{self, OrgScores, ReferenceDistribution, Third};
use thiserror::Error;

use crate::manifest::RunManifest;
use crate::{Cli, CiteCount, Command, CrosstabArgs, CurvesArgs, DataArgs, FitArgs, IngestArgs, MetricsArgs, RankArgs, RankMetric, SelectArgs};

const DEFAULT_OUT: &str = "readcite-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Module(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Module(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DateError> for CliError {
    fn from(e: DateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn module(e: impl std::fmt::Display) -> CliError {
    CliError::Module(e.to_string())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Every key any command reads, so one file can drive a whole pipeline.
fn known_keys() -> Vec<&'static str> {
    let mut keys = SynthConfig::known_keys();
    keys.extend(FIT_CONFIG_KEYS);
    keys.extend(PARAM_KEYS);
    keys.extend(AGE_MODEL_KEYS);
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Collects outputs of one command and writes them with a manifest.
struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn new(cli: &Cli, command: &str, config: &KeyValues) -> Result<Self, CliError> {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut manifest = RunManifest::new(command, std::env::args().skip(1).collect());
        manifest.config = config.to_string();
        if let Some(path) = &cli.config {
            manifest.add_input(path).map_err(io_err(path))?;
        }
        Ok(Self { dir, manifest })
    }

    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.manifest.add_input(path).map_err(io_err(path))
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        self.manifest.write(&self.dir).map_err(io_err(&self.dir))
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => KeyValues::read(path)?,
        None => KeyValues::default(),
    };
    config.check_known(&known_keys())?;
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(cli, &config, a),
        Command::Fit(a) => cmd_fit(cli, &config, a),
        Command::Curves(a) => cmd_curves(cli, &config, a),
        Command::Crosstab(a) => cmd_crosstab(cli, &config, a),
        Command::Metrics(a) => cmd_metrics(cli, &config, a),
        Command::Rank(a) => cmd_rank(cli, &config, a),
        Command::Simulate => cmd_simulate(cli, &config),
    }
}

fn file_set(data: &DataArgs) -> FileSet {
    let mut set = data.data.as_deref().map(FileSet::from_dir).unwrap_or_default();
    set.papers.extend(data.papers.iter().cloned());
    set.reads.extend(data.reads.iter().cloned());
    set.cites.extend(data.cites.iter().cloned());
    set.authors.extend(data.authors.iter().cloned());
    set.orgs.extend(data.orgs.iter().cloned());
    set
}

fn load(data: &DataArgs, run: Option<&mut Run>) -> Result<(Corpus, readcite_core::IngestReport), CliError> {
    let files = file_set(data);
    if files.is_empty() {
        return Err(CliError::Validation("no input files; pass --data DIR or --papers FILE".into()));
    }
    let options = IngestOptions { ingestion_date: data.as_of.unwrap_or_else(|| Utc::now().date_naive()) };
    let loaded = ingest(&files, &options)?;
    if let Some(run) = run {
        for path in files.all_files() {
            run.input(path)?;
        }
    }
    Ok(loaded)
}

/// Whole calendar years spanned by the corpus's reads.
fn read_span(corpus: &Corpus) -> Result<DateWindow, CliError> {
    let reads = corpus.reads();
    let (Some(first), Some(last)) = (reads.iter().map(|r| r.timestamp).min(), reads.iter().map(|r| r.timestamp).max())
    else {
        return Err(CliError::Validation("corpus has no reads; pass --read-window".into()));
    };
    Ok(DateWindow::calendar_years(first.year(), last.year())?)
}

fn filter(select: &SelectArgs) -> PaperFilter {
    let mut f = PaperFilter::venues(select.venue.iter().cloned());
    if select.refereed {
        f.kinds = BTreeSet::from([PaperKind::RefereedArticle]);
    }
    f
}

fn summary_text(corpus: &Corpus, read_window: &DateWindow, cite_window: &DateWindow) -> String {
    let s = corpus_summary(corpus, read_window, cite_window);
    let mut out = String::new();
    let _ = writeln!(out, "read_window\t{read_window}");
    let _ = writeln!(out, "cite_window\t{cite_window}");
    let _ = writeln!(out, "total_papers\t{}", s.total_papers);
    let _ = writeln!(out, "read_and_cited\t{}", s.read_and_cited);
    let _ = writeln!(out, "read_only\t{}", s.read_only);
    let _ = writeln!(out, "cited_only\t{}", s.cited_only);
    let _ = writeln!(out, "neither\t{}", s.neither);
    if s.empty_corpus {
        let _ = writeln!(out, "warning\tempty corpus");
    }
    out
}

fn by_year_tsv(corpus: &Corpus, read_window: &DateWindow, cite_window: &DateWindow) -> String {
    let s = corpus_summary(corpus, read_window, cite_window);
    let mut out = String::from("pub_year\tpapers\treads\tcites\treads_per_cite\n");
    for y in &s.by_year {
        let ratio = y.reads_per_cite.map_or_else(|| "-".to_string(), |r| r.to_string());
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", y.pub_year, y.papers, y.reads, y.cites, ratio);
    }
    out
}

fn read_curve(corpus: &Corpus, select: &SelectArgs, window: &DateWindow) -> Result<BinnedReadCurve, CliError> {
    let yearly = reads_per_paper_by_year(corpus, &filter(select), window);
    BinnedReadCurve::from_yearly(&yearly, window).map_err(module)
}

fn cmd_ingest(cli: &Cli, config: &KeyValues, a: &IngestArgs) -> Result<(), CliError> {
    let mut run = match cli.out {
        Some(_) => Some(Run::new(cli, "ingest", config)?),
        None => None,
    };
    let (corpus, report) = load(&a.data, run.as_mut())?;
    let read_window = match a.read_window {
        Some(w) => w,
        None if corpus.reads().is_empty() => DateWindow::calendar_years(2000, 2000)?,
        None => read_span(&corpus)?,
    };
    let cite_window = a.cite_window.unwrap_or(read_window);
    let summary = summary_text(&corpus, &read_window, &cite_window);
    print!("{report}{summary}");
    if let Some(mut run) = run {
        run.write("ingest_report.tsv", report.to_string())?;
        run.write("summary.tsv", &summary)?;
        run.write("reads_by_year.tsv", by_year_tsv(&corpus, &read_window, &cite_window))?;
        if let Ok(curve) = read_curve(&corpus, &a.select, &read_window) {
            run.write("read_curve.tsv", curve.to_tsv())?;
        }
        run.finish()?;
    }
    Ok(())
}

fn cmd_fit(cli: &Cli, config: &KeyValues, a: &FitArgs) -> Result<(), CliError> {
    let fit_config = FitConfig::from_key_values(config)?;
    let mut run = Run::new(cli, "fit", &fit_config.to_key_values())?;
    let curve = match &a.curve {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            run.input(path)?;
            BinnedReadCurve::from_tsv(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => {
            let (corpus, _) = load(&a.data, Some(&mut run))?;
            let window = match a.read_window {
                Some(w) => w,
                None => read_span(&corpus)?,
            };
            read_curve(&corpus, &a.select, &window)?
        }
    };
    let result = fit(&curve, &fit_config).map_err(module)?;
    print!("{result}");
    let mut fitted = String::from("age_years\tobserved\tmodel\tarticles\n");
    for p in curve.points() {
        let m = result.model.eval(p.age, ModeSet::ALL).map_err(module)?;
        let _ = writeln!(fitted, "{}\t{}\t{}\t{}", p.age, p.rate, m, p.articles);
    }
    run.write("read_curve.tsv", curve.to_tsv())?;
    run.write("fit.tsv", result.to_tsv())?;
    run.write("fit_curve.tsv", fitted)?;
    run.finish()
}

fn ages(max_age: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && max_age > 0.0 && max_age / step <= 1e6) {
        return Err(CliError::Usage("need 0 < --step and 0 < --max-age with at most 1e6 points".into()));
    }
    Ok((0..).map(|i| i as f64 * step).take_while(|&t| t <= max_age + 1e-9).collect())
}

fn cmd_curves(cli: &Cli, config: &KeyValues, a: &CurvesArgs) -> Result<(), CliError> {
    let model = CareerModel::from_key_values(config)?;
    let mut snapshot = KeyValues::default();
    for (k, v) in PARAM_KEYS.iter().zip(model.reads.params()) {
        snapshot.insert(*k, v);
    }
    snapshot.insert("c", model.link.cites_per_read());
    snapshot.insert("kD", model.link.ramp());
    model.productivity.write_key_values(&mut snapshot);
    let mut run = Run::new(cli, "curves", &snapshot)?;
    let reads: &ObsolescenceModel = &model.reads;
    let link: &CitationLinkModel = &model.link;
    let grid = ages(a.max_age, a.step)?;

    let mut modes = String::from("mode\tamplitude\tdecay_per_year\thalf_life_years\tintegral\n");
    for mode in Mode::ALL {
        let p = reads.component(mode);
        let hl = half_life(p.decay).map_err(module)?.map_or_else(|| "inf".to_string(), |h| h.to_string());
        let integral = reads.mode_integral(mode, 0.0).map_err(module)?;
        let _ = writeln!(modes, "{}\t{}\t{}\t{hl}\t{integral}", mode.symbol(), p.amplitude, p.decay);
    }
    run.write("modes.tsv", modes)?;

    let mut obs = String::from("age_years\tH\tI\tC\tN\ttotal\n");
    let mut sync = String::from("age_years\treads\tcites_restricted\tcites_all\treads_per_cite\n");
    for &t in &grid {
        let per: Vec<f64> =
            Mode::ALL.iter().map(|&m| reads.eval(t, ModeSet::single(m))).collect::<Result<_, _>>().map_err(module)?;
        let total = reads.eval(t, ModeSet::ALL).map_err(module)?;
        let _ = writeln!(obs, "{t}\t{}\t{}\t{}\t{}\t{total}", per[0], per[1], per[2], per[3]);
        let restricted = link.cites_synchronous(reads, t, true).map_err(module)?;
        let all = link.cites_synchronous(reads, t, false).map_err(module)?;
        let ratio = link.implied_read_cite_ratio(reads, t).map_or_else(|_| "-".to_string(), |r| r.to_string());
        let _ = writeln!(sync, "{t}\t{total}\t{restricted}\t{all}\t{ratio}");
    }
    run.write("obsolescence.tsv", obs)?;
    run.write("cites_synchronous.tsv", sync)?;

    let dia = link
        .cites_diachronous_curve(reads, a.pub_year, a.horizon, model.productivity.growth, a.horizon >= 5)
        .map_err(module)?;
    let mut d = String::from("age_years\tyear\tcites_relative\n");
    for p in &dia {
        let _ = writeln!(d, "{}\t{}\t{}", p.age, p.year, p.value);
    }
    run.write("cites_diachronous.tsv", d)?;

    let career_ages: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0).collect();
    let curves = model.model_curves(&career_ages).map_err(module)?;
    run.write("career_curves.tsv", curves_tsv(&curves))?;
    run.finish()
}

fn parse_years(text: &str) -> Result<(i32, i32), CliError> {
    let bad = || CliError::Usage(format!("--pub-years expects FIRST..LAST, got {text:?}"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let (a, b) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn profile_tsv(tab: &CrossTab, direction: Direction) -> Result<String, CliError> {
    let entries = predictor_profile(tab, direction).map_err(module)?;
    let mut out = String::from("given_bin\tpapers\tmost_likely_bin\tspread_bins\n");
    for e in entries {
        let mode = e.mode_bin.map_or_else(|| "-".to_string(), |m| m.to_string());
        let spread = e.spread.map_or_else(|| "-".to_string(), |s| format!("{s:.4}"));
        let _ = writeln!(out, "{}\t{}\t{mode}\t{spread}", e.conditioning_bin, e.papers);
    }
    Ok(out)
}

fn cmd_crosstab(cli: &Cli, config: &KeyValues, a: &CrosstabArgs) -> Result<(), CliError> {
    let mut run = Run::new(cli, "crosstab", config)?;
    let (corpus, _) = load(&a.data, Some(&mut run))?;
    let window = match a.read_window {
        Some(w) => w,
        None => read_span(&corpus)?,
    };
    let mut f = filter(&a.select);
    if let Some(text) = &a.pub_years {
        let (first, last) = parse_years(text)?;
        f = f.with_years(first, last);
    }
    let source = match a.cite_count {
        CiteCount::Window => CiteSource::WindowRate,
        CiteCount::Lifetime => CiteSource::LifetimeTotal,
    };
    let tab = build_crosstab(&corpus, &f, &window, source).map_err(module)?;
    run.write("crosstab_raw.tsv", tab.to_tsv(CellFormat::Raw))?;
    run.write("crosstab_log2.tsv", tab.to_tsv(CellFormat::Log2))?;
    run.write("profile_reads_given_cites.tsv", profile_tsv(&tab, Direction::ReadsGivenCites)?)?;
    run.write("profile_cites_given_reads.tsv", profile_tsv(&tab, Direction::CitesGivenReads)?)?;
    let buckets = match &a.follow_ages {
        Some(edges) => AgeBuckets::new(edges.clone()).map_err(|e| CliError::Usage(e.to_string()))?,
        None => AgeBuckets::default(),
    };
    if a.lag < 0 {
        return Err(CliError::Usage("--lag must be non-negative".into()));
    }
    run.write("link_follow.tsv", link_follow_stats(&corpus, a.lag, &buckets).to_tsv())?;
    print!("{}", tab.to_tsv(CellFormat::Log2));
    run.finish()
}

fn cmd_metrics(cli: &Cli, config: &KeyValues, a: &MetricsArgs) -> Result<(), CliError> {
    let model = CareerModel::from_key_values(config)?;
    let mut run = Run::new(cli, "metrics", config)?;
    let (corpus, _) = load(&a.data, Some(&mut run))?;
    let window = match a.read_window {
        Some(w) => w,
        None => read_span(&corpus)?,
    };
    let cutoff = a.cite_cutoff.unwrap_or(window.end() - Duration::days(1));
    let mut mc = MetricConfig::new(window, cutoff);
    mc.read10_horizon_years = a.read10_years;
    if a.raw {
        mc.normalization = Normalization::Raw;
    }
    let batch = compute_batch(&corpus, &mc, &model, a.f).map_err(module)?;
    run.write("metrics.tsv", batch.to_tsv())?;
    run.write("metrics_sidecar.txt", batch.sidecar().to_string())?;

    let all: Vec<usize> = (0..corpus.authors().len()).collect();
    let mut points = String::from("author_id\tpapers\tnorm_reads\tnorm_cites\n");
    for p in readcite_points(&corpus, &all, &mc, a.split_year) {
        let group = match p.group {
            PaperGroup::All => "all".to_string(),
            PaperGroup::Before(y) => format!("before_{y}"),
            PaperGroup::From(y) => format!("from_{y}"),
        };
        let _ = writeln!(points, "{}\t{group}\t{}\t{}", p.author_id, p.norm_reads, p.norm_cites);
    }
    run.write("readcite_points.tsv", points)?;
    println!("authors\t{}\nf\t{}", batch.authors.len(), batch.f);
    run.finish()
}

fn cmd_rank(cli: &Cli, config: &KeyValues, a: &RankArgs) -> Result<(), CliError> {
    let mut run = Run::new(cli, "rank", config)?;
    let text = fs::read_to_string(&a.metrics).map_err(io_err(&a.metrics))?;
    run.input(&a.metrics)?;
    let rows = metrics::parse_metrics_tsv(&text).map_err(|e| CliError::Validation(format!("{}: {e}", a.metrics.display())))?;

    let in_reference: Box<dyn Fn(&metrics::MetricsRow) -> bool> = match (&a.reference_org, &a.reference_authors) {
        (Some(org), _) => {
            let org = org.clone();
            Box::new(move |r| r.org_id.as_deref() == Some(org.as_str()))
        }
        (None, Some(path)) => {
            let ids: BTreeSet<String> = fs::read_to_string(path)
                .map_err(io_err(path))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect();
            run.input(path)?;
            Box::new(move |r| ids.contains(&r.author_id))
        }
        (None, None) => Box::new(|_| true),
    };
    let (label, score): (&str, fn(&metrics::MetricsRow) -> f64) = match a.metric {
        RankMetric::Sumprod => ("sumprod", |r| r.sumprod),
        RankMetric::Cites => ("norm_cites", |r| r.norm_cites),
        RankMetric::Read10 => ("read10", |r| r.read10),
    };
    let reference: Vec<&metrics::MetricsRow> = rows.iter().filter(|r| in_reference(r)).collect();
    let pick = |f: fn(&metrics::MetricsRow) -> f64| reference.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let ref_dist = ReferenceDistribution::build(label, &pick(score)).map_err(module)?;
    let (activity_ref, prestige_ref) = rank::thirds_references(&pick(|r| r.read10), &pick(|r| r.norm_cites)).map_err(module)?;

    let mut orgs: BTreeMap<&str, OrgScores> = BTreeMap::new();
    for r in &rows {
        let Some(org) = r.org_id.as_deref() else { continue };
        let e = orgs.entry(org).or_insert_with(|| OrgScores {
            org_id: org.to_string(),
            scores: Vec::new(),
            activity: Vec::new(),
            prestige: Vec::new(),
        });
        e.scores.push(score(r));
        e.activity.push(r.read10);
        e.prestige.push(r.norm_cites);
    }
    let orgs: Vec<OrgScores> = orgs.into_values().collect();
    let (ranked, skipped) =
        rank::rank_organizations(&ref_dist, &activity_ref, &prestige_ref, &orgs, a.cut).map_err(module)?;
    run.write("rank.tsv", rank::rank_tsv(&ranked))?;
    let mut skipped_tsv = String::from("org_id\treason\n");
    for (id, e) in &skipped {
        let _ = writeln!(skipped_tsv, "{id}\t{e}");
    }
    run.write("rank_skipped.tsv", skipped_tsv)?;
    run.write("reference_curve.tsv", rank::percentile_curve_tsv(&ref_dist))?;

    let activity: Vec<f64> = rows.iter().map(|r| r.read10).collect();
    let prestige: Vec<f64> = rows.iter().map(|r| r.norm_cites).collect();
    let cells = rank::thirds_split(&activity, &prestige, &activity_ref, &prestige_ref);
    let mut thirds = String::from("author_id\torg_id\tactivity\tprestige\n");
    let mut grid: BTreeMap<(Third, Third), usize> = BTreeMap::new();
    for (r, cell) in rows.iter().zip(&cells) {
        let _ = writeln!(thirds, "{}\t{}\t{}\t{}", r.author_id, r.org_id.as_deref().unwrap_or("-"), cell.0, cell.1);
        *grid.entry(*cell).or_default() += 1;
    }
    run.write("thirds.tsv", thirds)?;
    let mut grid_tsv = String::from("activity\tprestige\tauthors\n");
    for ((act, pre), n) in grid {
        let _ = writeln!(grid_tsv, "{act}\t{pre}\t{n}");
    }
    run.write("thirds_summary.tsv", grid_tsv)?;
    print!("{}", rank::rank_tsv(&ranked));
    run.finish()
}

fn cmd_simulate(cli: &Cli, config: &KeyValues) -> Result<(), CliError> {
    let mut synth = SynthConfig::from_key_values(config)?;
    if let Some(seed) = cli.seed {
        synth.seed = seed;
    }
    let sample = agemodel::generate(&synth).map_err(module)?;
    let mut run = Run::new(cli, "simulate", &synth.to_key_values())?;
    sample.write(&run.dir).map_err(io_err(&run.dir))?;
    run.manifest.outputs.extend(
        ["papers.tsv", "reads.tsv", "cites.tsv", "authors.tsv", "orgs.tsv", agemodel::GROUND_TRUTH_FILE, agemodel::SYNTH_CONFIG_FILE]
            .map(String::from),
    );
    println!(
        "papers\t{}\nreads\t{}\ncites\t{}\nauthors\t{}",
        sample.papers.len(),
        sample.reads.len(),
        sample.cites.len(),
        sample.authors.len()
    );
    run.finish()
}
