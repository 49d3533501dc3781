//! Lossless codes for a single source letter: the optimal one-to-one
//! (non-prefix) code and the Huffman prefix code.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::infotheory::LOG2_E;
use crate::model::{validate_probability, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosslessCode {
    /// Codeword length per letter; `None` for zero-probability letters that
    /// the code does not cover.
    pub lengths: Vec<Option<u32>>,
    pub codewords: Vec<Option<String>>,
    /// Expected codeword length in bits.
    pub expected_length: f64,
    pub prefix_free: bool,
}

impl LosslessCode {
    pub fn kraft_sum(&self) -> f64 {
        self.lengths
            .iter()
            .flatten()
            .map(|&l| 0.5f64.powi(l as i32))
            .sum()
    }
}

/// The `k`-th binary string (1-based) in shortlex order: `"", "0", "1",
/// "00", ...`. Its length is `floor(log2 k)`.
pub fn kth_binary_string(k: u64) -> String {
    assert!(k >= 1);
    // k in binary without its leading one
    let bits = format!("{k:b}");
    bits[1..].to_string()
}

fn order_by_probability(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        p[b].partial_cmp(&p[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Optimal injective code `X -> {0,1}*`: the `k`-th most probable letter gets
/// the `k`-th shortest string.
pub fn one_to_one_optimal(p: &[f64]) -> Result<LosslessCode, ModelError> {
    let p = validate_probability(p)?;
    let mut lengths = vec![None; p.len()];
    let mut codewords = vec![None; p.len()];
    let mut expected_length = 0.0;
    for (rank, &x) in order_by_probability(&p).iter().enumerate() {
        let word = kth_binary_string(rank as u64 + 1);
        let len = word.len() as u32;
        expected_length += p[x] * len as f64;
        lengths[x] = Some(len);
        codewords[x] = Some(word);
    }
    Ok(LosslessCode {
        lengths,
        codewords,
        expected_length,
        prefix_free: p.len() <= 1,
    })
}

#[derive(Debug, PartialEq)]
struct Node {
    p: f64,
    /// Smallest original index in the subtree.
    key: usize,
    id: usize,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.p.total_cmp(&other.p).then(self.key.cmp(&other.key))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Huffman code over the support of `p`; ties are broken by probability,
/// then by smallest original letter index. Codewords follow the canonical
/// assignment for the resulting lengths.
pub fn huffman(p: &[f64]) -> Result<LosslessCode, ModelError> {
    let p = validate_probability(p)?;
    let support: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 0.0).collect();
    let mut parent: Vec<usize> = vec![usize::MAX; support.len()];
    let mut heap: BinaryHeap<Reverse<Node>> = support
        .iter()
        .enumerate()
        .map(|(id, &x)| {
            Reverse(Node {
                p: p[x],
                key: x,
                id,
            })
        })
        .collect();
    while heap.len() > 1 {
        let Reverse(a) = heap.pop().expect("two nodes");
        let Reverse(b) = heap.pop().expect("two nodes");
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a.id] = id;
        parent[b.id] = id;
        heap.push(Reverse(Node {
            p: a.p + b.p,
            key: a.key.min(b.key),
            id,
        }));
    }
    let depth = |mut v: usize| {
        let mut len = 0u32;
        while parent[v] != usize::MAX {
            v = parent[v];
            len += 1;
        }
        len
    };
    let mut lengths = vec![None; p.len()];
    for (id, &x) in support.iter().enumerate() {
        lengths[x] = Some(depth(id));
    }
    let codewords = canonical_codewords(&lengths);
    let expected_length = lengths
        .iter()
        .zip(&p)
        .map(|(l, &q)| l.map_or(0.0, |l| q * l as f64))
        .sum();
    Ok(LosslessCode {
        lengths,
        codewords,
        expected_length,
        prefix_free: true,
    })
}

/// Canonical prefix codewords for lengths satisfying Kraft's inequality.
fn canonical_codewords(lengths: &[Option<u32>]) -> Vec<Option<String>> {
    let mut order: Vec<usize> = (0..lengths.len())
        .filter(|&x| lengths[x].is_some())
        .collect();
    order.sort_by_key(|&x| (lengths[x], x));
    let mut out = vec![None; lengths.len()];
    let mut code: u128 = 0;
    let mut prev = 0u32;
    for (i, &x) in order.iter().enumerate() {
        let len = lengths[x].expect("filtered");
        if i > 0 {
            code = (code + 1) << (len - prev);
        }
        prev = len;
        out[x] = Some(if len == 0 {
            String::new()
        } else {
            format!("{code:0width$b}", width = len as usize)
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LosslessVerdict {
    pub entropy: f64,
    pub one_to_one: f64,
    pub huffman: f64,
    /// `L* - (H - log2(H + 1) - log2 e)`.
    pub one_to_one_lower_slack: f64,
    /// `H - L*`.
    pub one_to_one_upper_slack: f64,
    /// `L_huffman - H`.
    pub prefix_lower_slack: f64,
    /// `H + 1 - L_huffman`.
    pub prefix_upper_slack: f64,
    pub passed: bool,
}

/// Checks `H - log2(H + 1) - log2 e <= L* <= H` and
/// `H <= L_huffman <= H + 1`, all in bits.
pub fn lossless_sandwich_check(p: &[f64]) -> Result<LosslessVerdict, ModelError> {
    const TOL: f64 = 1e-9;
    let q = validate_probability(p)?;
    let h: f64 = q.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum();
    let l_star = one_to_one_optimal(&q)?.expected_length;
    let l_huff = huffman(&q)?.expected_length;
    let slacks = [
        l_star - (h - (h + 1.0).log2() - LOG2_E),
        h - l_star,
        l_huff - h,
        h + 1.0 - l_huff,
    ];
    Ok(LosslessVerdict {
        entropy: h,
        one_to_one: l_star,
        huffman: l_huff,
        one_to_one_lower_slack: slacks[0],
        one_to_one_upper_slack: slacks[1],
        prefix_lower_slack: slacks[2],
        prefix_upper_slack: slacks[3],
        passed: slacks.iter().all(|&s| s >= -TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::entropy_nats;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn normalize(w: Vec<f64>) -> Vec<f64> {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    fn is_prefix_free(words: &[String]) -> bool {
        words.iter().enumerate().all(|(i, a)| {
            words
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !b.starts_with(a.as_str()))
        })
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for i in 0..=perm.len() {
                let mut p = perm.clone();
                p.insert(i, n - 1);
                out.push(p);
            }
        }
        out
    }

    /// Minimum expected length over all length vectors with Kraft sum <= 1
    /// and every length below `m`.
    fn best_prefix_length(p: &[f64]) -> f64 {
        let m = p.len();
        if m == 1 {
            return 0.0;
        }
        let mut lens = vec![1u32; m];
        let mut best = f64::INFINITY;
        loop {
            let kraft: f64 = lens.iter().map(|&l| 0.5f64.powi(l as i32)).sum();
            if kraft <= 1.0 + 1e-12 {
                let e: f64 = lens.iter().zip(p).map(|(&l, &q)| q * l as f64).sum();
                best = best.min(e);
            }
            let mut i = 0;
            loop {
                if i == m {
                    return best;
                }
                lens[i] += 1;
                if lens[i] < m as u32 {
                    break;
                }
                lens[i] = 1;
                i += 1;
            }
        }
    }

    #[test]
    fn string_enumeration() {
        let words: Vec<String> = (1..=7).map(kth_binary_string).collect();
        assert_eq!(words, ["", "0", "1", "00", "01", "10", "11"]);
    }

    #[test]
    fn one_to_one_examples() {
        assert_eq!(one_to_one_optimal(&[1.0]).unwrap().expected_length, 0.0);
        let u4 = one_to_one_optimal(&[0.25; 4]).unwrap();
        assert_eq!(u4.lengths, vec![Some(0), Some(1), Some(1), Some(2)]);
        assert_eq!(u4.expected_length, 1.0);
        assert_eq!(
            one_to_one_optimal(&[0.5, 0.5]).unwrap().expected_length,
            0.5
        );
        let c = one_to_one_optimal(&[0.1, 0.6, 0.3]).unwrap();
        assert_eq!(c.codewords[1].as_deref(), Some(""));
        assert_eq!(c.codewords[2].as_deref(), Some("0"));
        assert_eq!(c.codewords[0].as_deref(), Some("1"));
    }

    #[test]
    fn huffman_examples() {
        let u4 = huffman(&[0.25; 4]).unwrap();
        assert_eq!(u4.expected_length, 2.0);
        let d = huffman(&[0.5, 0.25, 0.25]).unwrap();
        assert_abs_diff_eq!(d.expected_length, 1.5, epsilon = 1e-15);
        let h = huffman(&[0.4, 0.3, 0.3]).unwrap();
        assert_abs_diff_eq!(h.expected_length, 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(
            entropy_nats(&[0.4, 0.3, 0.3]) * LOG2_E,
            1.571,
            epsilon = 1e-3
        );
        let point = huffman(&[0.0, 1.0]).unwrap();
        assert_eq!(point.lengths, vec![None, Some(0)]);
        assert_eq!(point.expected_length, 0.0);
    }

    #[test]
    fn huffman_ties_are_deterministic() {
        let a = huffman(&[0.25; 4]).unwrap();
        let b = huffman(&[0.25; 4]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.codewords[0].as_deref(), Some("00"));
    }

    #[test]
    fn sandwich_examples() {
        let v = lossless_sandwich_check(&[0.25; 4]).unwrap();
        assert_eq!((v.entropy, v.one_to_one, v.huffman), (2.0, 1.0, 2.0));
        assert!(v.passed);
        let v = lossless_sandwich_check(&[1.0]).unwrap();
        assert_eq!((v.entropy, v.one_to_one, v.huffman), (0.0, 0.0, 0.0));
        assert!(v.passed);
    }

    proptest! {
        #[test]
        fn one_to_one_beats_every_assignment(w in prop::collection::vec(0.01f64..1.0, 1..=7)) {
            let p = normalize(w);
            let code = one_to_one_optimal(&p).unwrap();
            let lens: Vec<f64> = (1..=p.len() as u64).map(|k| kth_binary_string(k).len() as f64).collect();
            for perm in permutations(p.len()) {
                let e: f64 = perm.iter().zip(&p).map(|(&k, &q)| q * lens[k]).sum();
                prop_assert!(code.expected_length <= e + 1e-12);
            }
            let words: Vec<&String> = code.codewords.iter().flatten().collect();
            let mut uniq = words.clone();
            uniq.sort();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), words.len());
        }

        #[test]
        fn huffman_matches_exhaustive_search(w in prop::collection::vec(0.01f64..1.0, 1..=6)) {
            let p = normalize(w);
            let code = huffman(&p).unwrap();
            prop_assert!((code.expected_length - best_prefix_length(&p)).abs() < 1e-12);
            prop_assert!(code.kraft_sum() <= 1.0 + 1e-12);
            let words: Vec<String> = code.codewords.iter().flatten().cloned().collect();
            prop_assert!(is_prefix_free(&words));
        }

        #[test]
        fn sandwiches_hold(w in prop::collection::vec(0.0f64..1.0, 2..=64)) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let v = lossless_sandwich_check(&normalize(w)).unwrap();
            prop_assert!(v.passed, "{:?}", v);
        }
    }
}
