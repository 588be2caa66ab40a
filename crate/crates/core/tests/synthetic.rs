//! Estimators run on generated corpora and compared with the generating model.

use chrono::{Datelike, NaiveDate};
use readcite_core::agemodel::{generate, CareerModel, SynthConfig, SyntheticCorpus};
use readcite_core::corpus::{reads_per_paper_by_year, Corpus, PaperFilter};
use readcite_core::metrics::{compute_batch, read10, normalized_counts, MetricConfig};
use readcite_core::obsolescence::{fit, BinnedReadCurve, FitConfig};
use readcite_core::rank::{thirds_references, thirds_split, Third};
use readcite_core::ModeSet;

fn sample(authors: usize, seed: u64) -> (SyntheticCorpus, Corpus) {
    let cfg = SynthConfig { authors, seed, ..SynthConfig::default() };
    let s = generate(&cfg).unwrap();
    let c = s.corpus().unwrap();
    (s, c)
}

fn metric_config(s: &SyntheticCorpus) -> MetricConfig {
    let w = s.config.window;
    MetricConfig::new(w, w.end().pred_opt().unwrap())
}

#[test]
fn cohort_reads_match_the_model_within_three_sigma() {
    let (s, c) = sample(200, 11);
    let w = s.config.window;
    let (ws, we) = (w.start_year(), w.end_year());
    let model = &s.config.career.reads;
    let mut checked = 0;
    for year in [1965, 1975, 1985, 1990, 1995, 1998] {
        let (mut expected, mut observed) = (0.0, 0usize);
        for (i, p) in c.papers().iter().enumerate() {
            if p.pub_date.year() != year {
                continue;
            }
            let t = p.pub_year_fraction();
            expected += s.config.read_scale * model.integral_between((ws - t).max(0.0), we - t, ModeSet::ALL);
            observed += c.reads_of_paper(i).len();
        }
        if expected < 25.0 {
            continue;
        }
        checked += 1;
        let z = (observed as f64 - expected) / expected.sqrt();
        assert!(z.abs() < 3.0, "cohort {year}: observed {observed}, expected {expected:.1}");
    }
    assert!(checked >= 4);
}

#[test]
fn reads_per_cite_at_fifteen_years_is_about_twenty() {
    let (s, c) = sample(300, 3);
    let w = s.config.window;
    let (mut reads, mut cites) = (0.0, 0.0);
    for (i, p) in c.papers().iter().enumerate() {
        if (1984..=1986).contains(&p.pub_date.year()) {
            reads += c.reads_in_window(i, &w) as f64 / s.config.read_scale;
            cites += c.cites_in_window(i, &w) as f64;
        }
    }
    let ratio = reads / cites;
    assert!((ratio / 20.0 - 1.0).abs() < 0.2, "reads per cite {ratio}");
}

#[test]
fn read10_equals_norm_reads_for_young_authors() {
    let (s, c) = sample(150, 5);
    let mc = metric_config(&s);
    let now = mc.as_of();
    let mut young = 0;
    for a in 0..c.authors().len() {
        let papers = c.papers_of_author(a);
        let all_young = papers.iter().all(|&p| {
            let age = readcite_core::dates::fractional_year(now) - c.paper(p).pub_year_fraction();
            age < 10.0
        });
        if papers.is_empty() || !all_young {
            continue;
        }
        young += 1;
        assert_eq!(read10(&c, a, &mc, now).unwrap(), normalized_counts(&c, a, &mc).norm_reads);
    }
    assert!(young > 0);
}

#[test]
fn fit_on_a_generated_reads_curve_converges() {
    let (s, c) = sample(300, 8);
    let w = s.config.window;
    let curve = BinnedReadCurve::from_yearly(&reads_per_paper_by_year(&c, &PaperFilter::all(), &w), &w).unwrap();
    let r = fit(&curve, &FitConfig::default()).unwrap();
    assert!(r.converged);
    // the interesting mode carries most of the readership at these ages
    let truth = s.config.career.reads.component(readcite_core::Mode::Interesting);
    let got = r.model.component(readcite_core::Mode::Interesting);
    assert!((got.decay / truth.decay - 1.0).abs() < 0.3, "kI {} vs {}", got.decay, truth.decay);
}

#[test]
fn productive_authors_concentrate_in_the_top_thirds() {
    let cfg = SynthConfig { authors: 400, seed: 21, stop_fraction: 0.0, phd_first: 1965, phd_last: 1985, ..SynthConfig::default() };
    let s = generate(&cfg).unwrap();
    let c = s.corpus().unwrap();
    let batch = compute_batch(&c, &metric_config(&s), &CareerModel::default(), None).unwrap();
    let activity: Vec<f64> = batch.authors.iter().map(|a| a.read10).collect();
    let prestige: Vec<f64> = batch.authors.iter().map(|a| a.norm_cites).collect();
    let (ra, rp) = thirds_references(&activity, &prestige).unwrap();
    let cells = thirds_split(&activity, &prestige, &ra, &rp);
    let mut latents: Vec<f64> = s.truth.iter().map(|t| t.latent).collect();
    latents.sort_by(f64::total_cmp);
    let elite_cut = latents[latents.len() * 2 / 3];
    let (mut elite, mut elite_hh, mut rest, mut rest_hh) = (0, 0, 0, 0);
    for (t, cell) in s.truth.iter().zip(&cells) {
        let hh = *cell == (Third::High, Third::High);
        if t.latent >= elite_cut {
            elite += 1;
            elite_hh += usize::from(hh);
        } else {
            rest += 1;
            rest_hh += usize::from(hh);
        }
    }
    let (fe, fr) = (elite_hh as f64 / elite as f64, rest_hh as f64 / rest as f64);
    assert!(fe > 2.0 * fr, "elite {fe:.2} vs rest {fr:.2}");
}

#[test]
fn generated_files_reingest_to_the_same_corpus() {
    let (s, c) = sample(30, 2);
    let dir = tempfile::tempdir().unwrap();
    s.write(dir.path()).unwrap();
    let files = readcite_core::corpus::FileSet::from_dir(dir.path());
    let options = readcite_core::corpus::IngestOptions { ingestion_date: NaiveDate::from_ymd_opt(2002, 1, 1).unwrap() };
    let (again, _) = readcite_core::corpus::ingest(&files, &options).unwrap();
    assert_eq!(again.papers(), c.papers());
    assert_eq!(again.reads(), c.reads());
    assert_eq!(again.citations(), c.citations());
}
