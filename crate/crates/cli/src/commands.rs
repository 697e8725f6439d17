use std::path::Path;

use mgdtm::corpus::{self, build_vocabulary, load_corpus, preprocess_all, ProcessedDocument};
use mgdtm::evaluation::{cv_coherence, pooled_t_test, select_topic_count, SampleStats, SweepRow, TTestResult};
use mgdtm::gaussian::GmmFile;
use mgdtm::lda::{fit_lda, LdaConfig, LdaFile, LdaModel};
use mgdtm::topics::{fit_topics, KeywordReport, MgdTopicModel};
use mgdtm::vectorizer::{tfidf, DocTermMatrix, LogBase, TfidfConfig};
use mgdtm::{Error, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::files::{self, LdaModelFile, MgdModelFile, Workspace};

pub fn preprocess(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let pipeline = cfg.pipeline_config()?;
    let raw = match (&cfg.input.source, cfg.input.bundled) {
        (Some(_), true) => {
            return Err(Error::Config("give either an input path or --bundled, not both".into()));
        }
        (Some(path), false) => load_corpus(path, cfg.corpus_format()?, pipeline.allow_empty)?,
        (None, true) => corpus::bundled::synthetic_corpus(),
        (None, false) => return Err(Error::Config("no input corpus (--input or --bundled)".into())),
    };
    if raw.is_empty() {
        let from = cfg.input.source.as_deref().map_or("input".into(), |p| p.display().to_string());
        return Err(Error::EmptyCorpus(format!("no documents found in {from}")));
    }
    let docs = preprocess_all(&raw, &pipeline);
    let vocab = build_vocabulary(&docs, &pipeline)?;

    files::ensure_dir(&out)?;
    files::write(&out.join(files::CORPUS), files::corpus_text(&docs)?)?;
    files::write(&out.join(files::VOCAB), vocab.to_text())?;
    println!("documents: {}", docs.len());
    println!("vocabulary: {}", vocab.len());
    Ok(())
}

fn matrix(ws: &Workspace, cfg: &RunConfig, log_base: LogBase) -> Result<DocTermMatrix> {
    let tcfg = TfidfConfig {
        log_base,
        allow_empty: cfg.pipeline.allow_empty,
    };
    tfidf(&ws.docs, &ws.vocab, &tcfg)
}

fn mgd_report(model: &MgdTopicModel, n: usize) -> Result<KeywordReport> {
    Ok(KeywordReport {
        topics: model.all_keywords(n.min(model.vocab.len()))?,
    })
}

fn lda_keywords(model: &LdaModel, n: usize) -> Result<Vec<Vec<(String, f64)>>> {
    (0..model.k).map(|t| model.top_words(t, n.min(model.vocab.len()))).collect()
}

fn write_lda_keywords(path: &Path, words: &[Vec<(String, f64)>]) -> Result<()> {
    let err = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["topic", "rank", "term", "probability"]).map_err(err)?;
    for (topic, list) in words.iter().enumerate() {
        for (rank, (term, p)) in list.iter().enumerate() {
            w.write_record([topic.to_string(), (rank + 1).to_string(), term.clone(), p.to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn print_lists(name: &str, lists: &[Vec<String>]) {
    for (t, words) in lists.iter().enumerate() {
        println!("{name} topic {t}: {}", words.join(" "));
    }
}

pub fn fit(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let ws = Workspace::load(&out)?;
    if cfg.model.mgd() {
        let dtm = matrix(&ws, cfg, cfg.pipeline.log_base)?;
        let model = fit_topics(&dtm, &cfg.em)?;
        let file = MgdModelFile {
            corpus_sha256: ws.fingerprint.clone(),
            log_base: cfg.pipeline.log_base,
            gmm: GmmFile::from_model(&model.gmm),
        };
        files::write_json(&out.join(files::MODEL_MGD), &file)?;
        let report = mgd_report(&model, cfg.top_n)?;
        let path = out.join(files::KEYWORDS_MGD);
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        report.write_csv(std::io::BufWriter::new(f))?;
        let lists: Vec<Vec<String>> = report.topics.iter().map(|t| t.terms()).collect();
        print_lists("mgd", &lists);
    }
    if cfg.model.lda() {
        let model = fit_lda(&ws.docs, &ws.vocab, &cfg.lda)?;
        let file = LdaModelFile {
            corpus_sha256: ws.fingerprint.clone(),
            lda: LdaFile::from_model(&model),
        };
        files::write_json(&out.join(files::MODEL_LDA), &file)?;
        let words = lda_keywords(&model, cfg.top_n)?;
        write_lda_keywords(&out.join(files::KEYWORDS_LDA), &words)?;
        let lists: Vec<Vec<String>> = words.iter().map(|l| l.iter().map(|(w, _)| w.clone()).collect()).collect();
        print_lists("lda", &lists);
    }
    Ok(())
}

fn load_mgd(ws: &Workspace, cfg: &RunConfig, dir: &Path) -> Result<MgdTopicModel> {
    let path = dir.join(files::MODEL_MGD);
    let file: MgdModelFile = files::read_json(&path)?;
    files::check_fingerprint(&file.corpus_sha256, ws, &path)?;
    let dtm = matrix(ws, cfg, file.log_base)?;
    MgdTopicModel::from_stored(file.gmm.into_model()?, &dtm)
}

fn load_lda(ws: &Workspace, dir: &Path) -> Result<LdaModel> {
    let path = dir.join(files::MODEL_LDA);
    let file: LdaModelFile = files::read_json(&path)?;
    files::check_fingerprint(&file.corpus_sha256, ws, &path)?;
    file.lda.into_model(ws.vocab.clone(), ws.doc_ids())
}

fn mgd_lists(model: &MgdTopicModel, n: usize) -> Result<Vec<Vec<String>>> {
    Ok(mgd_report(model, n)?.topics.iter().map(|t| t.terms()).collect())
}

fn lda_lists(model: &LdaModel, n: usize) -> Result<Vec<Vec<String>>> {
    Ok(lda_keywords(model, n)?
        .into_iter()
        .map(|l| l.into_iter().map(|(w, _)| w).collect())
        .collect())
}

pub fn keywords(cfg: &RunConfig, json: bool) -> Result<()> {
    let out = cfg.out_dir()?;
    let ws = Workspace::load(&out)?;
    if cfg.model.mgd() {
        let model = load_mgd(&ws, cfg, &out)?;
        let report = mgd_report(&model, cfg.top_n)?;
        if json {
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Data(e.to_string()))?);
        } else {
            print_lists("mgd", &report.topics.iter().map(|t| t.terms()).collect::<Vec<_>>());
        }
    }
    if cfg.model.lda() {
        let model = load_lda(&ws, &out)?;
        let words = lda_keywords(&model, cfg.top_n)?;
        if json {
            #[derive(Serialize)]
            struct Entry<'a> {
                topic: usize,
                words: Vec<(&'a str, f64)>,
            }
            let topics: Vec<Entry> = words
                .iter()
                .enumerate()
                .map(|(topic, l)| Entry {
                    topic,
                    words: l.iter().map(|(w, p)| (w.as_str(), *p)).collect(),
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&topics).map_err(|e| Error::Data(e.to_string()))?);
        } else {
            print_lists("lda", &lda_lists(&model, cfg.top_n)?);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ModelStats {
    per_topic_cv: Vec<f64>,
    #[serde(flatten)]
    stats: SampleStats,
}

#[derive(Serialize)]
struct TTestReport {
    hypothesis: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    mgd: Option<ModelStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lda: Option<ModelStats>,
    first: SampleStats,
    second: SampleStats,
    result: TTestResult,
}

const HYPOTHESIS: &str = "H0: mean1 = mean2, H1: mean1 > mean2 (pooled variance, one-tailed)";

fn print_test(r: &TTestResult) {
    match r.t_estimated {
        Some(t) => println!("t = {t:.4}, df = {}, t-critical = {:.4}", r.df, r.t_critical),
        None => println!("t undefined, df = {}, t-critical = {:.4}", r.df, r.t_critical),
    }
    if let Some(p) = r.p_value {
        println!("p = {p:.4}");
    }
    if let Some(note) = &r.note {
        println!("note: {note}");
    }
    println!("reject H0 at alpha = {}: {}", r.alpha, if r.reject_null { "yes" } else { "no" });
}

/// Parses `m1,s1,n1,m2,s2,n2`.
pub fn parse_stats(text: &str) -> Result<(SampleStats, SampleStats)> {
    let bad = || Error::Config(format!("--stats-only expects mean1,sd1,n1,mean2,sd2,n2, got {text:?}"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(bad());
    }
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let n = |s: &str| s.parse::<usize>().map_err(|_| bad());
    Ok((
        SampleStats {
            mean: f(parts[0])?,
            sd: f(parts[1])?,
            n: n(parts[2])?,
        },
        SampleStats {
            mean: f(parts[3])?,
            sd: f(parts[4])?,
            n: n(parts[5])?,
        },
    ))
}

pub fn compare(cfg: &RunConfig, stats_only: Option<&str>) -> Result<()> {
    if let Some(text) = stats_only {
        let (first, second) = parse_stats(text)?;
        let result = pooled_t_test(first, second, cfg.alpha)?;
        print_test(&result);
        if let Some(out) = &cfg.out {
            files::ensure_dir(out)?;
            let report = TTestReport {
                hypothesis: HYPOTHESIS,
                mgd: None,
                lda: None,
                first,
                second,
                result,
            };
            files::write_json(&out.join(files::TTEST), &report)?;
        }
        return Ok(());
    }

    let out = cfg.out_dir()?;
    let ws = Workspace::load(&out)?;
    let mgd = load_mgd(&ws, cfg, &out)?;
    let lda = load_lda(&ws, &out)?;
    let n = cfg.coherence.top_n;
    let mgd_cv = cv_coherence(&mgd_lists(&mgd, n)?, &ws.docs, &cfg.coherence)?;
    let lda_cv = cv_coherence(&lda_lists(&lda, n)?, &ws.docs, &cfg.coherence)?;

    let path = out.join(files::COHERENCE);
    let mut table = String::from("model,topic,cv\n");
    for (name, report) in [("mgd", &mgd_cv), ("lda", &lda_cv)] {
        for (t, cv) in report.per_topic.iter().enumerate() {
            table.push_str(&format!("{name},{t},{cv}\n"));
        }
    }
    files::write(&path, table)?;
    for w in mgd_cv.missing_words.iter().chain(&lda_cv.missing_words) {
        eprintln!("warning: topic word {w:?} occurs in no coherence window");
    }

    let first = SampleStats::from_values(&mgd_cv.per_topic);
    let second = SampleStats::from_values(&lda_cv.per_topic);
    println!("mgd mean Cv = {:.4} (sd {:.4}, {} topics)", first.mean, first.sd, first.n);
    println!("lda mean Cv = {:.4} (sd {:.4}, {} topics)", second.mean, second.sd, second.n);
    if first.n < 2 || second.n < 2 {
        return Err(Error::Config(format!(
            "t-test refused: it needs at least two topics per model, got {} (mgd) and {} (lda); coherence.csv was written",
            first.n, second.n
        )));
    }
    let result = pooled_t_test(first, second, cfg.alpha)?;
    print_test(&result);
    let report = TTestReport {
        hypothesis: HYPOTHESIS,
        mgd: Some(ModelStats {
            per_topic_cv: mgd_cv.per_topic,
            stats: first,
        }),
        lda: Some(ModelStats {
            per_topic_cv: lda_cv.per_topic,
            stats: second,
        }),
        first,
        second,
        result,
    };
    files::write_json(&out.join(files::TTEST), &report)
}

fn mgd_point(ws: &Workspace, dtm: &DocTermMatrix, cfg: &RunConfig, k: usize) -> Result<(f64, f64)> {
    let em = mgdtm::gaussian::EmConfig { k, ..cfg.em.clone() };
    let model = fit_topics(dtm, &em)?;
    let cv = cv_coherence(&mgd_lists(&model, cfg.coherence.top_n)?, &ws.docs, &cfg.coherence)?;
    Ok((cv.mean, -model.gmm.final_loglik() / dtm.n_docs() as f64))
}

fn lda_point(docs: &[ProcessedDocument], ws: &Workspace, cfg: &RunConfig, k: usize) -> Result<(f64, f64)> {
    let lcfg = LdaConfig { k, ..cfg.lda.clone() };
    let model = fit_lda(docs, &ws.vocab, &lcfg)?;
    let cv = cv_coherence(&lda_lists(&model, cfg.coherence.top_n)?, docs, &cfg.coherence)?;
    Ok((cv.mean, model.log_perplexity(docs)?))
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn sweep_line(model: &str, row: &SweepRow, selected: usize) -> String {
    let (lp, nll) = match model {
        "mgd" => (String::new(), opt(row.log_perplexity)),
        _ => (opt(row.log_perplexity), String::new()),
    };
    let error = row.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
    format!(
        "{model},{},{},{lp},{nll},{},{},{},{error}\n",
        row.k,
        opt(row.mean_cv),
        opt(row.normalized_perplexity),
        opt(row.difference),
        row.k == selected && row.error.is_none(),
    )
}

pub fn select_k(cfg: &RunConfig, fail_at: Option<usize>) -> Result<()> {
    let out = cfg.out_dir()?;
    let ws = Workspace::load(&out)?;
    let [lo, hi] = cfg
        .k_range
        .ok_or_else(|| Error::Config("no K range (--k-min/--k-max or `k-range` in the config)".into()))?;
    let inject = |k: usize| -> Result<()> {
        if fail_at == Some(k) {
            Err(Error::Numerical(format!("injected failure at K={k}")))
        } else {
            Ok(())
        }
    };
    let norm = cfg.selection.normalization;
    let mut table = String::from(
        "model,k,mean_cv,log_perplexity,mgd_neg_loglik_per_doc,normalized,difference,selected,error\n",
    );
    if cfg.model.mgd() {
        let dtm = matrix(&ws, cfg, cfg.pipeline.log_base)?;
        let sweep = select_topic_count(lo..=hi, ws.docs.len(), norm, |k| {
            inject(k)?;
            mgd_point(&ws, &dtm, cfg, k)
        })?;
        for row in &sweep.rows {
            table.push_str(&sweep_line("mgd", row, sweep.selected));
        }
        println!("mgd selected K = {}", sweep.selected);
    }
    if cfg.model.lda() {
        let sweep = select_topic_count(lo..=hi, ws.docs.len(), norm, |k| {
            inject(k)?;
            lda_point(&ws.docs, &ws, cfg, k)
        })?;
        for row in &sweep.rows {
            table.push_str(&sweep_line("lda", row, sweep.selected));
        }
        println!("lda selected K = {}", sweep.selected);
    }
    files::write(&out.join(files::KSWEEP), table)
}
