//! Linear-chain CRF scoring, normalization, gradients, and decoding.
//!
//! Emissions `P` are `n x L`; the transition matrix covers `(L+2)^2` states
//! with virtual START/STOP at indices `L` and `L+1`. Every path score
//! includes the `START -> y_1` and `y_n -> STOP` transitions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::DenseMatrix;
use crate::numeric::log_sum_exp;
use crate::tagger::tagset::{build_transition_mask, TagSet, TransitionMask, MASKED_SCORE};

/// Trainable CRF parameters: transition scores and the emission projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrfParams {
    pub tagset: TagSet,
    /// `(L+2)^2` transition scores; masked entries pinned to [`MASKED_SCORE`].
    pub transitions: DenseMatrix,
    /// `d_h x L` emission projection.
    pub emit_weight: DenseMatrix,
    /// `L` emission biases.
    pub emit_bias: Vec<f64>,
}

impl CrfParams {
    pub fn new(tagset: TagSet, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let states = tagset.state_count();
        let labels = tagset.label_count();
        let mask = build_transition_mask(&tagset);
        let mut transitions = DenseMatrix::zeros(states, states);
        for from in 0..states {
            for to in 0..states {
                if !mask.allowed(from, to) {
                    transitions.set(from, to, MASKED_SCORE);
                }
            }
        }
        let bound = (6.0 / (hidden_dim + labels) as f64).sqrt();
        let mut emit_weight = DenseMatrix::zeros(hidden_dim, labels);
        for v in emit_weight.as_mut_slice() {
            *v = rng.random_range(-bound..bound);
        }
        CrfParams {
            tagset,
            transitions,
            emit_weight,
            emit_bias: vec![0.0; labels],
        }
    }

    pub fn mask(&self) -> TransitionMask {
        build_transition_mask(&self.tagset)
    }

    /// Emission scores for one sentence: `P = H_tokens * W + b`.
    pub fn emissions(&self, hidden: &DenseMatrix) -> Result<DenseMatrix> {
        let n = hidden.rows();
        let labels = self.tagset.label_count();
        let mut p = DenseMatrix::zeros(n, labels);
        for i in 0..n {
            let scores = self.emit_weight.vec_mul(hidden.row(i))?;
            let row = p.row_mut(i);
            for (r, (s, b)) in row.iter_mut().zip(scores.iter().zip(self.emit_bias.iter())) {
                *r = s + b;
            }
        }
        Ok(p)
    }
}

fn check_shapes(emissions: &DenseMatrix, transitions: &DenseMatrix) -> Result<(usize, usize)> {
    let n = emissions.rows();
    let labels = emissions.cols();
    if n == 0 {
        return Err(Error::invalid("empty emission matrix"));
    }
    if transitions.rows() != labels + 2 || transitions.cols() != labels + 2 {
        return Err(Error::shape(
            format!("{0}x{0} transitions", labels + 2),
            format!("{}x{}", transitions.rows(), transitions.cols()),
        ));
    }
    Ok((n, labels))
}

/// Composite path score: transition chain (with START/STOP) plus emissions.
pub fn path_score(emissions: &DenseMatrix, transitions: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let (n, l) = check_shapes(emissions, transitions)?;
    if labels.len() != n {
        return Err(Error::shape(format!("{n} labels"), format!("{}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= l) {
        return Err(Error::invalid(format!("label {bad} out of range (L={l})")));
    }
    let (start, stop) = (l, l + 1);
    let mut score = transitions.get(start, labels[0]);
    for i in 0..n {
        score += emissions.get(i, labels[i]);
        if i + 1 < n {
            score += transitions.get(labels[i], labels[i + 1]);
        }
    }
    score += transitions.get(labels[n - 1], stop);
    Ok(score)
}

/// `log Σ_paths exp(score)` via the forward recursion.
pub fn log_partition(emissions: &DenseMatrix, transitions: &DenseMatrix) -> Result<f64> {
    let (n, l) = check_shapes(emissions, transitions)?;
    let (start, stop) = (l, l + 1);
    let mut alpha: Vec<f64> = (0..l)
        .map(|j| transitions.get(start, j) + emissions.get(0, j))
        .collect();
    let mut scratch = vec![0.0; l];
    for i in 1..n {
        let mut next = vec![0.0; l];
        for (k, nk) in next.iter_mut().enumerate() {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = alpha[j] + transitions.get(j, k);
            }
            *nk = log_sum_exp(&scratch) + emissions.get(i, k);
        }
        alpha = next;
    }
    for (j, s) in scratch.iter_mut().enumerate() {
        *s = alpha[j] + transitions.get(j, stop);
    }
    Ok(log_sum_exp(&scratch))
}

/// Gradients of the negative log-likelihood.
#[derive(Debug)]
pub struct NllGrads {
    /// `dL/dP`, same shape as the emissions.
    pub d_emissions: DenseMatrix,
    /// `dL/dA` over all `(L+2)^2` entries; masked entries are zeroed so the
    /// pinned scores never move.
    pub d_transitions: DenseMatrix,
}

/// Negative log-likelihood of the gold path plus exact analytic gradients
/// from forward-backward marginals.
///
/// Errors when the gold path uses a masked transition: such data cannot
/// come from the schema.
pub fn nll(
    emissions: &DenseMatrix,
    transitions: &DenseMatrix,
    mask: &TransitionMask,
    labels: &[usize],
) -> Result<(f64, NllGrads)> {
    let (n, l) = check_shapes(emissions, transitions)?;
    if labels.len() != n {
        return Err(Error::shape(format!("{n} labels"), format!("{}", labels.len())));
    }
    let (start, stop) = (l, l + 1);
    // Gold path must be legal.
    let mut prev = start;
    for (i, &y) in labels.iter().enumerate() {
        if y >= l {
            return Err(Error::invalid(format!("label {y} out of range (L={l})")));
        }
        if !mask.allowed(prev, y) {
            return Err(Error::Schema(format!(
                "gold path uses masked transition {prev} -> {y} at position {i}"
            )));
        }
        prev = y;
    }
    if !mask.allowed(prev, stop) {
        return Err(Error::Schema(format!("gold path ends in state {prev} that cannot reach STOP")));
    }

    // Forward.
    let mut alphas = DenseMatrix::zeros(n, l);
    for j in 0..l {
        alphas.set(0, j, transitions.get(start, j) + emissions.get(0, j));
    }
    let mut scratch = vec![0.0; l];
    for i in 1..n {
        for k in 0..l {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = alphas.get(i - 1, j) + transitions.get(j, k);
            }
            alphas.set(i, k, log_sum_exp(&scratch) + emissions.get(i, k));
        }
    }
    for (j, s) in scratch.iter_mut().enumerate() {
        *s = alphas.get(n - 1, j) + transitions.get(j, stop);
    }
    let log_z = log_sum_exp(&scratch);

    // Backward.
    let mut betas = DenseMatrix::zeros(n, l);
    for j in 0..l {
        betas.set(n - 1, j, transitions.get(j, stop));
    }
    for i in (0..n - 1).rev() {
        for j in 0..l {
            for (k, s) in scratch.iter_mut().enumerate() {
                *s = transitions.get(j, k) + emissions.get(i + 1, k) + betas.get(i + 1, k);
            }
            betas.set(i, j, log_sum_exp(&scratch));
        }
    }

    // Marginals minus gold indicators.
    let mut d_emissions = DenseMatrix::zeros(n, l);
    for i in 0..n {
        for j in 0..l {
            let m = (alphas.get(i, j) + betas.get(i, j) - log_z).exp();
            d_emissions.set(i, j, m);
        }
        let y = labels[i];
        d_emissions.set(i, y, d_emissions.get(i, y) - 1.0);
    }

    let states = l + 2;
    let mut d_transitions = DenseMatrix::zeros(states, states);
    for j in 0..l {
        let m = (transitions.get(start, j) + emissions.get(0, j) + betas.get(0, j) - log_z).exp();
        d_transitions.set(start, j, m);
        let e = (alphas.get(n - 1, j) + transitions.get(j, stop) - log_z).exp();
        d_transitions.set(j, stop, e);
    }
    for i in 0..n - 1 {
        for j in 0..l {
            for k in 0..l {
                let q = (alphas.get(i, j)
                    + transitions.get(j, k)
                    + emissions.get(i + 1, k)
                    + betas.get(i + 1, k)
                    - log_z)
                    .exp();
                d_transitions.set(j, k, d_transitions.get(j, k) + q);
            }
        }
    }
    // Subtract gold transition counts.
    d_transitions.set(start, labels[0], d_transitions.get(start, labels[0]) - 1.0);
    for w in labels.windows(2) {
        d_transitions.set(w[0], w[1], d_transitions.get(w[0], w[1]) - 1.0);
    }
    let last = labels[n - 1];
    d_transitions.set(last, stop, d_transitions.get(last, stop) - 1.0);
    // Pinned entries never move.
    for from in 0..states {
        for to in 0..states {
            if !mask.allowed(from, to) {
                d_transitions.set(from, to, 0.0);
            }
        }
    }

    let gold = path_score(emissions, transitions, labels)?;
    Ok((
        log_z - gold,
        NllGrads {
            d_emissions,
            d_transitions,
        },
    ))
}

/// Maximum-score label sequence and its score.
///
/// Ties are broken toward the lowest label index at the latest position
/// where candidate paths differ (the backward-lexicographically smallest
/// optimal path).
pub fn viterbi(emissions: &DenseMatrix, transitions: &DenseMatrix) -> Result<(Vec<usize>, f64)> {
    let (n, l) = check_shapes(emissions, transitions)?;
    let (start, stop) = (l, l + 1);
    let mut delta: Vec<f64> = (0..l)
        .map(|j| transitions.get(start, j) + emissions.get(0, j))
        .collect();
    let mut back = DenseMatrix::zeros(n, l);
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; l];
        for k in 0..l {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for (j, &dj) in delta.iter().enumerate() {
                let cand = dj + transitions.get(j, k);
                if cand > best {
                    best = cand;
                    arg = j;
                }
            }
            next[k] = best + emissions.get(i, k);
            back.set(i, k, arg as f64);
        }
        delta = next;
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (k, &dk) in delta.iter().enumerate() {
        let cand = dk + transitions.get(k, stop);
        if cand > best {
            best = cand;
            arg = k;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = arg;
    for i in (1..n).rev() {
        path[i - 1] = back.get(i, path[i]) as usize;
    }
    Ok((path, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff_grad, max_relative_error};
    use rand::SeedableRng;

    /// Exhaustive-path oracle: max-score path (backward-lex tie-break) and
    /// log-sum over all paths. Independent of the DP implementations.
    pub fn enumerate_paths(
        emissions: &DenseMatrix,
        transitions: &DenseMatrix,
    ) -> (Vec<usize>, f64, f64) {
        let n = emissions.rows();
        let l = emissions.cols();
        let (start, stop) = (l, l + 1);
        let mut best_path = vec![0usize; n];
        let mut best_score = f64::NEG_INFINITY;
        let mut all_scores = Vec::new();
        let mut path = vec![0usize; n];
        loop {
            let mut score = transitions.get(start, path[0]);
            for i in 0..n {
                score += emissions.get(i, path[i]);
                if i + 1 < n {
                    score += transitions.get(path[i], path[i + 1]);
                }
            }
            score += transitions.get(path[n - 1], stop);
            all_scores.push(score);
            let better = score > best_score || {
                // On exact ties prefer the path with the lower label at the
                // latest differing position.
                score == best_score
                    && path
                        .iter()
                        .rev()
                        .zip(best_path.iter().rev())
                        .find(|(a, b)| a != b)
                        .is_some_and(|(a, b)| a < b)
            };
            if better {
                best_score = score;
                best_path.copy_from_slice(&path);
            }
            // Odometer increment.
            let mut i = 0;
            while i < n {
                path[i] += 1;
                if path[i] < l {
                    break;
                }
                path[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        (best_path, best_score, log_sum_exp(&all_scores))
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, l: usize) -> (DenseMatrix, DenseMatrix) {
        let gauss = |rng: &mut ChaCha8Rng| {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let mut p = DenseMatrix::zeros(n, l);
        for v in p.as_mut_slice() {
            *v = gauss(rng);
        }
        let mut a = DenseMatrix::zeros(l + 2, l + 2);
        for v in a.as_mut_slice() {
            *v = gauss(rng);
        }
        (p, a)
    }

    #[test]
    fn single_token_zero_transitions() {
        let p = DenseMatrix::from_vec(1, 3, vec![0.5, 1.5, -0.2]).unwrap();
        let a = DenseMatrix::zeros(5, 5);
        assert_eq!(path_score(&p, &a, &[1]).unwrap(), 1.5);
        let lz = log_partition(&p, &a).unwrap();
        assert!((lz - log_sum_exp(&[0.5, 1.5, -0.2])).abs() < 1e-12);
    }

    #[test]
    fn two_token_hand_case() {
        // P=[[1,0],[0,1]], A(start->0)=0, A(0->1)=2, A(1->stop)=0, Y=(0,1) -> 4.
        let p = DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut a = DenseMatrix::zeros(4, 4);
        a.set(0, 1, 2.0);
        assert_eq!(path_score(&p, &a, &[0, 1]).unwrap(), 4.0);
    }

    #[test]
    fn all_zero_scores_zero() {
        let p = DenseMatrix::zeros(3, 2);
        let a = DenseMatrix::zeros(4, 4);
        for y in [[0, 0, 0], [1, 0, 1], [1, 1, 1]] {
            assert_eq!(path_score(&p, &a, &y).unwrap(), 0.0);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let p = DenseMatrix::zeros(3, 2);
        let a = DenseMatrix::zeros(4, 4);
        assert!(path_score(&p, &a, &[0, 1]).is_err());
    }

    #[test]
    fn partition_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let l = rng.random_range(1..=4);
            let (p, a) = random_instance(&mut rng, n, l);
            let (_, _, oracle) = enumerate_paths(&p, &a);
            let lz = log_partition(&p, &a).unwrap();
            assert!(
                ((lz - oracle) / oracle.abs().max(1.0)).abs() < 1e-10,
                "n={n} l={l}: {lz} vs {oracle}"
            );
        }
    }

    #[test]
    fn viterbi_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(1..=5);
            let l = rng.random_range(1..=4);
            let (p, a) = random_instance(&mut rng, n, l);
            let (oracle_path, oracle_score, _) = enumerate_paths(&p, &a);
            let (path, score) = viterbi(&p, &a).unwrap();
            assert_eq!(path, oracle_path);
            assert!((score - oracle_score).abs() < 1e-10);
            let rescore = path_score(&p, &a, &path).unwrap();
            assert!((score - rescore).abs() < 1e-10);
        }
    }

    #[test]
    fn viterbi_tie_break_prefers_low_label_late() {
        // All-zero scores: every path ties; expect the all-zero path.
        let p = DenseMatrix::zeros(3, 3);
        let a = DenseMatrix::zeros(5, 5);
        let (path, score) = viterbi(&p, &a).unwrap();
        assert_eq!(path, vec![0, 0, 0]);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn masked_transitions_contribute_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (p, mut a) = random_instance(&mut rng, 3, 3);
        // Forbid label 1 -> label 2 entirely.
        a.set(1, 2, MASKED_SCORE);
        let lz = log_partition(&p, &a).unwrap();
        // Recompute the enumeration oracle while skipping masked paths.
        let (_, _, full) = enumerate_paths(&p, &a);
        assert!((lz - full).abs() < 1e-9);
        // Any path through the masked edge scores ~ -10000 below the rest.
        let bad = path_score(&p, &a, &[1, 2, 0]).unwrap();
        assert!(bad < lz - 9000.0);
    }

    #[test]
    fn nll_uniform_zero_scores() {
        let ts = TagSet::new(vec!["X".into()]).unwrap();
        let l = ts.label_count();
        // Unmasked uniform case: use a permissive mask by zero transitions
        // over legal edges only; here compare against the enumeration oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut crf = CrfParams::new(ts.clone(), 4, &mut rng);
        crf.transitions = DenseMatrix::zeros(l + 2, l + 2);
        // Re-pin the masked entries.
        let mask = crf.mask();
        for from in 0..l + 2 {
            for to in 0..l + 2 {
                if !mask.allowed(from, to) {
                    crf.transitions.set(from, to, MASKED_SCORE);
                }
            }
        }
        let n = 4;
        let p = DenseMatrix::zeros(n, l);
        let labels = vec![0usize; n];
        let (value, _) = nll(&p, &crf.transitions, &mask, &labels).unwrap();
        let (_, _, oracle_lz) = enumerate_paths(&p, &crf.transitions);
        let gold = path_score(&p, &crf.transitions, &labels).unwrap();
        assert!((value - (oracle_lz - gold)).abs() < 1e-9);
    }

    #[test]
    fn nll_rejects_masked_gold_path() {
        let ts = TagSet::new(vec!["MV".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let crf = CrfParams::new(ts.clone(), 4, &mut rng);
        let mask = crf.mask();
        let p = DenseMatrix::zeros(2, ts.label_count());
        // O -> I-MV is illegal.
        let err = nll(&p, &crf.transitions, &mask, &[0, 2]).unwrap_err();
        assert!(err.to_string().contains("masked transition"), "{err}");
    }

    #[test]
    fn nll_approaches_zero_when_single_path_dominates() {
        // With strongly negative alternatives the unique surviving path
        // takes all probability mass, so logZ - gold -> 0.
        let p = DenseMatrix::from_vec(2, 2, vec![50.0, -50.0, 50.0, -50.0]).unwrap();
        let a = DenseMatrix::zeros(4, 4);
        let gold = path_score(&p, &a, &[0, 0]).unwrap();
        let lz = log_partition(&p, &a).unwrap();
        assert!((lz - gold) < 1e-9, "nll -> 0, got {}", lz - gold);
    }

    #[test]
    fn nll_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ts = TagSet::new(vec!["MV".into(), "NP".into()]).unwrap();
        let l = ts.label_count();
        let mask = build_transition_mask(&ts);
        for _ in 0..3 {
            let (p, mut a) = random_instance(&mut rng, 3, l);
            for from in 0..l + 2 {
                for to in 0..l + 2 {
                    if !mask.allowed(from, to) {
                        a.set(from, to, MASKED_SCORE);
                    }
                }
            }
            let labels = vec![ts.begin_label(0), ts.inside_label(0), 0];
            let (_, grads) = nll(&p, &a, &mask, &labels).unwrap();

            let fd_p = finite_diff_grad(
                |pf: &[f64]| {
                    let pm = DenseMatrix::from_vec(3, l, pf.to_vec()).unwrap();
                    let (v, _) = nll(&pm, &a, &mask, &labels).unwrap();
                    v
                },
                p.as_slice(),
                1e-6,
            )
            .unwrap();
            assert!(
                max_relative_error(grads.d_emissions.as_slice(), &fd_p) < 1e-6,
                "emission grads"
            );

            // Only free transition entries participate.
            let fd_a = finite_diff_grad(
                |af: &[f64]| {
                    let am = DenseMatrix::from_vec(l + 2, l + 2, af.to_vec()).unwrap();
                    let (v, _) = nll(&p, &am, &mask, &labels).unwrap();
                    v
                },
                a.as_slice(),
                1e-6,
            )
            .unwrap();
            for from in 0..l + 2 {
                for to in 0..l + 2 {
                    if !mask.allowed(from, to) {
                        continue;
                    }
                    let an = grads.d_transitions.get(from, to);
                    let fd = fd_a[from * (l + 2) + to];
                    let rel = (an - fd).abs() / 1.0_f64.max(an.abs()).max(fd.abs());
                    assert!(rel < 1e-5, "A[{from}][{to}]: {an} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn probability_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(1..=4);
            let l = rng.random_range(2..=4);
            let (p, a) = random_instance(&mut rng, n, l);
            let lz = log_partition(&p, &a).unwrap();
            // Sum of exp(path - lz) over all paths == 1.
            let mut total = 0.0;
            let mut path = vec![0usize; n];
            loop {
                total += (path_score(&p, &a, &path).unwrap() - lz).exp();
                let mut i = 0;
                while i < n {
                    path[i] += 1;
                    if path[i] < l {
                        break;
                    }
                    path[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            assert!((total - 1.0).abs() < 1e-8, "sum = {total}");
        }
    }

    #[test]
    fn decoded_sequences_respect_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let ts = TagSet::new(vec!["MV".into(), "NP".into()]).unwrap();
        let mask = build_transition_mask(&ts);
        let l = ts.label_count();
        for _ in 0..10_000 {
            let n = rng.random_range(1..=6);
            let (p, mut a) = random_instance(&mut rng, n, l);
            for from in 0..l + 2 {
                for to in 0..l + 2 {
                    if !mask.allowed(from, to) {
                        a.set(from, to, MASKED_SCORE);
                    }
                }
            }
            let (path, _) = viterbi(&p, &a).unwrap();
            let mut prev = ts.start();
            for &y in &path {
                assert!(mask.allowed(prev, y), "mask violated");
                prev = y;
            }
            assert!(mask.allowed(prev, ts.stop()));
        }
    }
}
