//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's numerical paths.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Neumaier compensated summation.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Gauss-Jordan inverse with partial pivoting, plus the determinant.
pub fn naive_inverse(a: &Array2<f64>) -> (Array2<f64>, f64) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().partial_cmp(&m[[j, col]].abs()).unwrap())
            .unwrap();
        if pivot != col {
            for c in 0..n {
                m.swap([col, c], [pivot, c]);
                inv.swap([col, c], [pivot, c]);
            }
            det = -det;
        }
        let p = m[[col, col]];
        det *= p;
        for c in 0..n {
            m[[col, c]] /= p;
            inv[[col, c]] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[[r, col]];
                for c in 0..n {
                    m[[r, c]] -= f * m[[col, c]];
                    inv[[r, c]] -= f * inv[[col, c]];
                }
            }
        }
    }
    (inv, det)
}

/// `ln N(x | μ, Σ)` through an explicit inverse and determinant.
pub fn naive_log_density(x: &[f64], mean: &[f64], cov: &Array2<f64>) -> f64 {
    let v = x.len();
    let (inv, det) = naive_inverse(cov);
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..v {
        for j in 0..v {
            q += d[i] * inv[[i, j]] * d[j];
        }
    }
    -0.5 * (v as f64 * (2.0 * std::f64::consts::PI).ln() + det.ln() + q)
}

/// A random symmetric positive-definite matrix `A Aᵀ + I`.
pub fn random_spd(v: usize, rng: &mut impl Rng) -> Array2<f64> {
    let a = Array2::from_shape_fn((v, v), |_| rng.random_range(-1.0..1.0));
    a.dot(&a.t()) + Array2::<f64>::eye(v)
}

pub fn random_matrix(n: usize, v: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, v), |_| StandardNormal.sample(rng))
}

/// Weighted mean and covariance (about that mean) with compensated sums.
pub fn weighted_moments_oracle(data: &Array2<f64>, w: &[f64]) -> (Vec<f64>, Array2<f64>) {
    let (n, v) = data.dim();
    let mass = neumaier_sum(w.iter().copied());
    let mean: Vec<f64> = (0..v)
        .map(|c| neumaier_sum((0..n).map(|r| w[r] * data[[r, c]])) / mass)
        .collect();
    let mut cov = Array2::zeros((v, v));
    for a in 0..v {
        for b in 0..v {
            cov[[a, b]] = neumaier_sum(
                (0..n).map(|r| w[r] * (data[[r, a]] - mean[a]) * (data[[r, b]] - mean[b])),
            ) / mass;
        }
    }
    (mean, cov)
}

/// A diagonal Gaussian mixture to sample from.
pub struct DiagonalGmm {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub sds: Vec<Vec<f64>>,
}

impl DiagonalGmm {
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> (Array2<f64>, Vec<usize>) {
        let v = self.means[0].len();
        let mut data = Array2::zeros((n, v));
        let mut labels = Vec::with_capacity(n);
        for r in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut j = self.weights.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    j = i;
                    break;
                }
            }
            labels.push(j);
            for c in 0..v {
                let z: f64 = StandardNormal.sample(rng);
                data[[r, c]] = self.means[j][c] + self.sds[j][c] * z;
            }
        }
        (data, labels)
    }
}

/// Minimum-cost assignment by exhaustive permutation search.
pub fn best_permutation(cost: &Array2<f64>) -> Vec<usize> {
    let k = cost.nrows();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let c: f64 = p.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
        if c < best.0 {
            best = (c, p.to_vec());
        }
    });
    best.1
}

fn permute(p: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        f(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, f);
        p.swap(start, i);
    }
}

pub fn euclid_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn to_vec(a: &Array1<f64>) -> Vec<f64> {
    a.to_vec()
}

/// Documents built from disjoint per-topic word lists. Every document of topic
/// `t` contains each of that topic's words between 1 and 4 times, plus a few
/// words from a shared background pool. Returns documents and their labels.
pub fn planted_corpus(
    topics: usize,
    words_per_topic: usize,
    docs_per_topic: usize,
    background: usize,
    rng: &mut impl Rng,
) -> (Vec<mgdtm::corpus::ProcessedDocument>, Vec<usize>) {
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for t in 0..topics {
        for d in 0..docs_per_topic {
            let mut tokens = Vec::new();
            for w in 0..words_per_topic {
                for _ in 0..rng.random_range(1..=4) {
                    tokens.push(planted_word(t, w));
                }
            }
            if background > 0 {
                for _ in 0..3 {
                    tokens.push(format!("bg{:02}", rng.random_range(0..background)));
                }
            }
            docs.push(mgdtm::corpus::ProcessedDocument::new(format!("t{t}-d{d}"), tokens));
            labels.push(t);
        }
    }
    (docs, labels)
}

pub fn planted_word(topic: usize, word: usize) -> String {
    format!("t{topic}w{word:02}")
}

/// Sorted distinct tokens.
pub fn vocabulary_of(docs: &[mgdtm::corpus::ProcessedDocument]) -> mgdtm::corpus::Vocabulary {
    let set: std::collections::BTreeSet<&String> = docs.iter().flat_map(|d| &d.tokens).collect();
    mgdtm::corpus::Vocabulary::from_terms(set.into_iter().cloned().collect()).unwrap()
}

/// Fraction of items whose cluster's majority label equals their own label.
pub fn purity(assignments: &[usize], labels: &[usize]) -> f64 {
    let mut counts = std::collections::BTreeMap::<usize, std::collections::BTreeMap<usize, usize>>::new();
    for (&a, &l) in assignments.iter().zip(labels) {
        *counts.entry(a).or_default().entry(l).or_default() += 1;
    }
    let agree: usize = counts.values().map(|m| m.values().max().copied().unwrap_or(0)).sum();
    agree as f64 / labels.len() as f64
}

/// x (x+1) ... (x+n-1)
pub fn rising(x: f64, n: usize) -> f64 {
    (0..n).map(|i| x + i as f64).product()
}

/// Unnormalized collapsed joint p(z | w) with θ and φ integrated out.
pub fn collapsed_joint(words: &[Vec<usize>], z: &[Vec<usize>], k: usize, v: usize, eta: f64, rho: f64) -> f64 {
    let mut p = 1.0;
    let mut topic_word = vec![vec![0usize; v]; k];
    for (ws, zs) in words.iter().zip(z) {
        let mut n_dj = vec![0usize; k];
        for (&w, &j) in ws.iter().zip(zs) {
            n_dj[j] += 1;
            topic_word[j][w] += 1;
        }
        for &c in &n_dj {
            p *= rising(eta, c);
        }
        p /= rising(k as f64 * eta, ws.len());
    }
    for row in &topic_word {
        for &c in row {
            p *= rising(rho, c);
        }
        p /= rising(v as f64 * rho, row.iter().sum());
    }
    p
}

/// Exact posterior over every joint topic assignment of the tokens. State `s`
/// encodes token `i` (in document order) as the base-`k` digit `i` of `s`.
pub fn exact_state_probabilities(words: &[Vec<usize>], k: usize, v: usize, eta: f64, rho: f64) -> Vec<f64> {
    let tokens: usize = words.iter().map(Vec::len).sum();
    let states = k.pow(tokens as u32);
    let decode = |mut s: usize| -> Vec<Vec<usize>> {
        words
            .iter()
            .map(|ws| {
                ws.iter()
                    .map(|_| {
                        let j = s % k;
                        s /= k;
                        j
                    })
                    .collect()
            })
            .collect()
    };
    let weights: Vec<f64> = (0..states).map(|s| collapsed_joint(words, &decode(s), k, v, eta, rho)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Encodes assignments the same way as [`exact_state_probabilities`].
pub fn encode_state(z: &[Vec<usize>], k: usize) -> usize {
    let mut code = 0;
    let mut place = 1;
    for zs in z {
        for &j in zs {
            code += j * place;
            place *= k;
        }
    }
    code
}

/// Every window as an explicit set of tokens.
pub fn enumerate_windows(docs: &[mgdtm::corpus::ProcessedDocument], window: usize) -> Vec<std::collections::BTreeSet<String>> {
    let mut out = Vec::new();
    for d in docs {
        if d.tokens.is_empty() {
            continue;
        }
        if d.tokens.len() <= window {
            out.push(d.tokens.iter().cloned().collect());
            continue;
        }
        for start in 0..=(d.tokens.len() - window) {
            out.push(d.tokens[start..start + window].iter().cloned().collect());
        }
    }
    out
}

/// Cv computed directly from explicit windows.
pub fn reference_cv(topics: &[Vec<String>], docs: &[mgdtm::corpus::ProcessedDocument], window: usize, eps: f64) -> Vec<f64> {
    let windows = enumerate_windows(docs, window);
    let total = windows.len() as f64;
    let p1 = |w: &String| windows.iter().filter(|s| s.contains(w)).count() as f64 / total;
    let p2 = |a: &String, b: &String| {
        windows.iter().filter(|s| s.contains(a) && s.contains(b)).count() as f64 / total
    };
    let npmi_ref = |a: &String, b: &String| {
        let (pa, pb, pab) = (p1(a), p1(b), p2(a, b));
        if pa == 0.0 || pb == 0.0 {
            0.0
        } else if pab == 1.0 {
            1.0
        } else {
            ((pab + eps) / (pa * pb)).ln() / -(pab + eps).ln()
        }
    };
    topics
        .iter()
        .map(|topic| {
            let vecs: Vec<Vec<f64>> = topic
                .iter()
                .map(|a| topic.iter().map(|b| npmi_ref(a, b)).collect())
                .collect();
            let sum: Vec<f64> = (0..topic.len()).map(|j| vecs.iter().map(|v| v[j]).sum()).collect();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scores: Vec<f64> = vecs
                .iter()
                .map(|v| {
                    let (na, nb) = (norm(v), norm(&sum));
                    if na == 0.0 || nb == 0.0 {
                        0.0
                    } else {
                        v.iter().zip(&sum).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
                    }
                })
                .collect();
            scores.iter().sum::<f64>() / scores.len() as f64
        })
        .collect()
}

/// SMCC by explicit loops: `μ_i Σ_j σ_ij²`.
pub fn double_loop_smcc(mean: &[f64], cov: &Array2<f64>) -> Vec<f64> {
    let v = mean.len();
    let mut out = vec![0.0; v];
    for i in 0..v {
        let mut s = 0.0;
        for j in 0..v {
            s += cov[[i, j]] * cov[[i, j]];
        }
        out[i] = mean[i] * s;
    }
    out
}
