#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Duration;

use common::*;
use mgdtm::corpus::{self, bundled, PipelineConfig, ProcessedDocument, Vocabulary};
use mgdtm::evaluation::{cv_coherence, pooled_t_test, window_counts, CoherenceConfig, SampleStats};
use mgdtm::gaussian::{
    fit_em, log_density, m_step, CovarianceMode, CovarianceRep, EmConfig, GaussianComponent, Responsibilities,
};
use mgdtm::lda::{fit_lda, GibbsSampler, LdaConfig};
use mgdtm::topics::{fit_topics, smcc_scores};
use mgdtm::vectorizer::{tfidf, TfidfConfig};
use mgdtm_validation::Report;
use ndarray::Array2;
use rand::Rng;

fn main() -> ExitCode {
    let mut report = Report::new();
    report.check("1", "t-test reproduction", Some(Duration::from_secs(1)), t_test);
    report.check("2", "EM monotonicity", Some(Duration::from_secs(60)), em_monotone);
    report.check("3", "GMM recovery", Some(Duration::from_secs(60)), gmm_recovery);
    report.check("4", "K=1 closed form", None, closed_form);
    report.check("5", "oracle equivalence", None, oracles);
    report.check("6", "MGD vs LDA coherence", Some(Duration::from_secs(120)), coherence_direction);
    report.check("7", "planted keywords", None, planted_keywords);
    report.check("8", "CLI determinism", None, cli_determinism);
    report.skip(
        "9",
        "industrial dataset results",
        "the source data is proprietary; no check attaches to it",
    );
    report.finish()
}

fn t_test() -> (bool, String) {
    let first = SampleStats { mean: 0.436, sd: 0.073, n: 5 };
    let second = SampleStats { mean: 0.294, sd: 0.096, n: 5 };
    let r = pooled_t_test(first, second, 0.05).unwrap();
    let t = r.t_estimated.unwrap();
    let p = r.p_value.unwrap();
    let ok = (t - 2.62).abs() <= 0.02
        && r.df == 8
        && (r.t_critical - 1.859).abs() <= 0.001
        && (p - 0.015).abs() <= 0.002
        && r.reject_null;
    (
        ok,
        format!(
            "t={t:.4} df={} t_crit={:.4} p={p:.4} reject={}",
            r.df, r.t_critical, r.reject_null
        ),
    )
}

fn em_monotone() -> (bool, String) {
    let mut pairs = 0usize;
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let n = r.random_range(10..=200);
        let v = r.random_range(2..=20);
        let k = r.random_range(1..=5);
        let data = random_matrix(n, v, &mut r);
        for mode in [CovarianceMode::Diagonal, CovarianceMode::FullShrinkage] {
            let cfg = EmConfig {
                k,
                seed,
                covariance: mode,
                ..EmConfig::default()
            };
            match fit_em(data.view(), &cfg) {
                Ok((model, _)) => {
                    for w in model.loglik_trace.windows(2) {
                        pairs += 1;
                        let drop = w[0] - w[1];
                        worst = worst.max(drop);
                        if w[1] < w[0] - 1e-8 {
                            violations += 1;
                        }
                    }
                }
                Err(e) => errors.push(format!("seed {seed} {mode:?}: {e}")),
            }
        }
    }
    (
        violations == 0 && errors.is_empty(),
        format!(
            "200 fits, {pairs} consecutive pairs, {violations} violations, largest decrease {worst:.2e}{}",
            if errors.is_empty() { String::new() } else { format!(", errors: {}", errors.join("; ")) }
        ),
    )
}

fn gmm_recovery() -> (bool, String) {
    // σ ≤ 0.6 and means 5 apart, so separation ≥ 8σ
    let truth = DiagonalGmm {
        weights: vec![0.4, 0.35, 0.25],
        means: vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![0.0, 5.0]],
        sds: vec![vec![0.5, 0.4], vec![0.6, 0.5], vec![0.4, 0.6]],
    };
    let mut good = 0;
    let mut worst_mean = 0.0f64;
    let mut worst_weight = 0.0f64;
    for seed in 0..100u64 {
        let (data, _) = truth.sample(1000, &mut rng(10_000 + seed));
        let cfg = EmConfig { seed, ..EmConfig::with_k(3) };
        let Ok((model, _)) = fit_em(data.view(), &cfg) else { continue };
        let cost = Array2::from_shape_fn((3, 3), |(i, j)| {
            euclid_sq(&truth.means[i], model.mixture.components[j].mean.as_slice().unwrap())
        });
        let perm = best_permutation(&cost);
        let mut ok = true;
        for i in 0..3 {
            let c = &model.mixture.components[perm[i]];
            for d in 0..2 {
                let e = (c.mean[d] - truth.means[i][d]).abs();
                worst_mean = worst_mean.max(e);
                ok &= e <= 0.1;
            }
            let e = (model.mixture.weights[perm[i]] - truth.weights[i]).abs();
            worst_weight = worst_weight.max(e);
            ok &= e <= 0.05;
        }
        good += ok as usize;
    }
    (
        good >= 95,
        format!("{good}/100 seeds within tolerance (largest mean error {worst_mean:.3}, largest weight error {worst_weight:.3})"),
    )
}

fn closed_form() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut max_iter = 0;
    for seed in 0..10u64 {
        let mut r = rng(seed);
        let data = random_matrix(80, 4, &mut r) * 3.0 + 2.0;
        let (mean, cov) = weighted_moments_oracle(&data, &[1.0; 80]);
        for mode in [CovarianceMode::Diagonal, CovarianceMode::FullShrinkage] {
            let cfg = EmConfig {
                k: 1,
                seed,
                covariance: mode,
                shrinkage: 0.0,
                ridge: Some(1e-14),
                ..EmConfig::default()
            };
            let (model, _) = fit_em(data.view(), &cfg).unwrap();
            max_iter = max_iter.max(model.iterations);
            let c = &model.mixture.components[0];
            for i in 0..4 {
                worst = worst.max((c.mean[i] - mean[i]).abs());
            }
            let dense = c.cov.to_dense();
            for i in 0..4 {
                for j in 0..4 {
                    let want = match mode {
                        CovarianceMode::Diagonal if i != j => 0.0,
                        _ => cov[[i, j]],
                    };
                    worst = worst.max((dense[[i, j]] - want).abs());
                }
            }
        }
    }
    (
        worst <= 1e-10 && max_iter <= 2,
        format!("20 fits, largest deviation {worst:.2e}, at most {max_iter} iterations"),
    )
}

fn oracles() -> (bool, String) {
    let mut r = rng(99);
    let mut parts = Vec::new();
    let mut ok = true;

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let v = r.random_range(1..=8);
        let cov = random_spd(v, &mut r);
        let mean = random_matrix(1, v, &mut r).row(0).to_owned();
        let x = random_matrix(1, v, &mut r).row(0).to_owned();
        let c = GaussianComponent {
            mean: mean.clone(),
            cov: CovarianceRep::from_matrix(cov.clone(), 0.0, 1e-300).unwrap(),
        };
        let got = log_density(x.view(), &c).unwrap();
        let want = naive_log_density(x.as_slice().unwrap(), mean.as_slice().unwrap(), &cov);
        worst = worst.max((got - want).abs());
    }
    ok &= worst <= 1e-9;
    parts.push(format!("log_density {worst:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (n, v, k) = (r.random_range(5..60), r.random_range(1..8), r.random_range(1..5));
        let data = random_matrix(n, v, &mut r);
        let mut matrix = Array2::from_shape_fn((n, k), |_| r.random_range(0.01..1.0));
        for mut row in matrix.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        let resp = Responsibilities { matrix };
        let ridge = 1e-9;
        let cfg = EmConfig {
            k,
            covariance: CovarianceMode::FullShrinkage,
            shrinkage: 0.0,
            ridge: Some(ridge),
            ..EmConfig::default()
        };
        let mix = m_step(data.view(), &resp, &cfg).unwrap();
        let total = neumaier_sum(resp.matrix.iter().copied());
        for j in 0..k {
            let w = resp.matrix.column(j).to_vec();
            let (mean, cov) = weighted_moments_oracle(&data, &w);
            worst = worst.max((mix.weights[j] - neumaier_sum(w.iter().copied()) / total).abs());
            let c = &mix.components[j];
            let dense = c.cov.to_dense();
            for a in 0..v {
                worst = worst.max((c.mean[a] - mean[a]).abs());
                for b in 0..v {
                    let want = cov[[a, b]] + if a == b { ridge } else { 0.0 };
                    worst = worst.max((dense[[a, b]] - want).abs());
                }
            }
        }
    }
    ok &= worst <= 1e-10;
    parts.push(format!("m_step {worst:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let v = r.random_range(1..30);
        let rows = Array2::from_shape_fn((r.random_range(2..20), v), |_| r.random_range(0.0..0.5));
        let (mean, cov) = weighted_moments_oracle(&rows, &vec![1.0; rows.nrows()]);
        let mean = ndarray::Array1::from(mean);
        let got = smcc_scores(mean.view(), &cov);
        let want = double_loop_smcc(mean.as_slice().unwrap(), &cov);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    ok &= worst <= 1e-12;
    parts.push(format!("smcc {worst:.1e}"));

    let names: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    let mut count_mismatches = 0;
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let n_docs = r.random_range(1..6);
        let mut docs = Vec::new();
        for d in 0..n_docs {
            let len = r.random_range(0..200 / n_docs);
            let tokens = (0..len).map(|_| names[r.random_range(0..names.len())].clone()).collect();
            docs.push(ProcessedDocument::new(format!("d{d}"), tokens));
        }
        if docs.iter().all(|d| d.tokens.is_empty()) {
            continue;
        }
        let window = r.random_range(1..30);
        let counts = window_counts(&docs, &names, window);
        let windows = enumerate_windows(&docs, window);
        if counts.windows != windows.len() as u64 {
            count_mismatches += 1;
        }
        for (i, a) in names.iter().enumerate() {
            for (j, b) in names.iter().enumerate() {
                let want = windows.iter().filter(|s| s.contains(a) && s.contains(b)).count() as u64;
                count_mismatches += (counts.joint[[i, j]] != want) as usize;
            }
        }
        let topics = vec![names[0..4].to_vec(), names[3..9].to_vec(), names[7..10].to_vec()];
        let cfg = CoherenceConfig {
            window_size: window,
            ..CoherenceConfig::default()
        };
        let got = cv_coherence(&topics, &docs, &cfg).unwrap();
        let want = reference_cv(&topics, &docs, window, cfg.npmi_epsilon);
        for (g, w) in got.per_topic.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    ok &= count_mismatches == 0 && worst <= 1e-9;
    parts.push(format!("window counts {count_mismatches} mismatches, Cv {worst:.1e}"));

    let docs = [
        ProcessedDocument::new("d0", vec!["a".into()]),
        ProcessedDocument::new("d1", vec!["b".into()]),
    ];
    let voc = Vocabulary::from_terms(vec!["a".into(), "b".into()]).unwrap();
    let cfg = LdaConfig {
        k: 2,
        doc_topic_prior: Some(0.5),
        topic_word_prior: 0.3,
        seed: 4,
        ..LdaConfig::default()
    };
    let exact = exact_state_probabilities(&[vec![0], vec![1]], 2, 2, cfg.eta(), cfg.topic_word_prior);
    let mut sampler = GibbsSampler::new(&docs, &voc, &cfg);
    let sweeps = 100_000;
    let mut freq = vec![0usize; exact.len()];
    for _ in 0..sweeps {
        sampler.sweep();
        freq[encode_state(sampler.assignments(), 2)] += 1;
    }
    let gap = freq
        .iter()
        .zip(&exact)
        .map(|(&f, &p)| (f as f64 / sweeps as f64 - p).abs())
        .fold(0.0, f64::max);
    ok &= gap <= 0.05;
    parts.push(format!("Gibbs stationary gap {gap:.4}"));

    (ok, parts.join(", "))
}

fn bundled_docs() -> (Vec<ProcessedDocument>, Vocabulary) {
    let cfg = PipelineConfig::default();
    let docs = corpus::preprocess_all(&bundled::synthetic_corpus(), &cfg);
    let vocab = corpus::build_vocabulary(&docs, &cfg).unwrap();
    (docs, vocab)
}

fn coherence_direction() -> (bool, String) {
    let (docs, vocab) = bundled_docs();
    let dtm = tfidf(&docs, &vocab, &TfidfConfig::default()).unwrap();
    let ccfg = CoherenceConfig::default();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10u64 {
        let mgd = fit_topics(&dtm, &EmConfig { seed, ..EmConfig::with_k(3) }).unwrap();
        let mgd_lists: Vec<Vec<String>> = mgd.all_keywords(10).unwrap().iter().map(|t| t.terms()).collect();
        let lda = fit_lda(&docs, &vocab, &LdaConfig { seed, ..LdaConfig::with_k(3) }).unwrap();
        let lda_lists: Vec<Vec<String>> = (0..3)
            .map(|t| lda.top_words(t, 10).unwrap().into_iter().map(|(w, _)| w).collect())
            .collect();
        let a = cv_coherence(&mgd_lists, &docs, &ccfg).unwrap().mean;
        let b = cv_coherence(&lda_lists, &docs, &ccfg).unwrap().mean;
        wins += (a > b) as usize;
        pairs.push(format!("{a:.3}/{b:.3}"));
    }
    (
        wins >= 7,
        format!("MGD higher in {wins}/10 seed pairs (MGD/LDA mean Cv: {})", pairs.join(" ")),
    )
}

fn planted_keywords() -> (bool, String) {
    let mut good = 0;
    for seed in 0..10u64 {
        let (docs, labels) = planted_corpus(3, 10, 6, 15, &mut rng(500 + seed));
        let dtm = tfidf(&docs, &vocabulary_of(&docs), &TfidfConfig::default()).unwrap();
        let model = fit_topics(&dtm, &EmConfig { seed, ..EmConfig::with_k(3) }).unwrap();
        let mut ok = true;
        for t in 0..3 {
            let members: Vec<usize> = (0..docs.len()).filter(|&d| model.assignments[d] == t).collect();
            if members.is_empty() {
                ok = false;
                continue;
            }
            let mut votes = [0usize; 3];
            for &d in &members {
                votes[labels[d]] += 1;
            }
            let label = (0..3).max_by_key(|&l| votes[l]).unwrap();
            let planted: Vec<String> = (0..10).map(|w| planted_word(label, w)).collect();
            ok &= model.top_keywords(t, 5).unwrap().terms().iter().all(|w| planted.contains(w));
        }
        good += ok as usize;
    }
    (good >= 9, format!("{good}/10 seeds with every topic's top-5 inside its planted vocabulary"))
}

fn mgdtm_binary() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let bin = profile_dir.join(format!("mgdtm{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let mut cmd = Command::new(env!("CARGO"));
        cmd.args(["build", "--quiet", "-p", "mgdtm-cli", "--bin", "mgdtm"])
            .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../.."));
        if profile_dir.ends_with("release") {
            cmd.arg("--release");
        }
        assert!(cmd.status().unwrap().success(), "could not build the mgdtm binary");
    }
    bin
}

/// Runs every command in a fresh directory and returns each output file's
/// bytes plus the keyword listing printed by `keywords`.
fn cli_run(bin: &Path, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let out = dir.to_str().unwrap();
    let run = |args: &[&str]| {
        let o = Command::new(bin).args(args).args(["--out", out]).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    run(&["preprocess", "--bundled"]);
    run(&["fit", "--model", "both", "--k", "3", "--seed", "7"]);
    let listing = run(&["keywords"]);
    run(&["compare"]);
    run(&["select-k", "--k-min", "2", "--k-max", "4", "--seed", "7", "--iterations", "300", "--burn-in", "100"]);
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files.push(("<keywords stdout>".into(), listing));
    files
}

fn cli_determinism() -> (bool, String) {
    let bin = mgdtm_binary();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = cli_run(&bin, a.path());
    let second = cli_run(&bin, b.path());
    let expected = [
        "coherence.csv",
        "corpus.jsonl",
        "keywords-lda.csv",
        "keywords-mgd.csv",
        "ksweep.csv",
        "model-lda.json",
        "model-mgd.json",
        "ttest.json",
        "vocab.txt",
    ];
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).filter(|n| !n.starts_with('<')).collect();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    (
        names == expected && differing.is_empty() && first.len() == second.len(),
        format!(
            "{} outputs compared across two runs, {} differ{}",
            first.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        ),
    )
}
