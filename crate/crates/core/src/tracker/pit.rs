use super::seq::{EmbeddingFrameSeq, OracleEmbeddingSeq};
use super::profiles::{ProfileMode, SpeakerProfileSeq};
use crate::error::{Error, Result};

/// Largest slot count searched exhaustively.
pub const MAX_PIT_SLOTS: usize = 4;

/// Vector distance used by matching, the triplet loss and clustering.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// All permutations of `0..n` in lexicographic order; the identity is first.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// `perm[j]` is the item assigned to target `j`; returns the permutation of
/// least total cost (first in lexicographic order on ties) and that cost.
pub fn best_assignment(perms: &[Vec<usize>], cost: impl Fn(usize, usize) -> f64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, p) in perms.iter().enumerate() {
        let c: f64 = p.iter().enumerate().map(|(j, &i)| cost(i, j)).sum();
        if c < best.1 {
            best = (k, c);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitMatch {
    pub loss: f64,
    /// Per frame, `perm[j]` is the estimated slot matched to oracle speaker `j`.
    pub permutations: Vec<Vec<usize>>,
    pub profiles: SpeakerProfileSeq,
}

/// Frame-level permutation-invariant matching of estimates to oracle
/// embeddings.
pub fn frame_pit_match(est: &EmbeddingFrameSeq, oracle: &OracleEmbeddingSeq) -> Result<PitMatch> {
    if est.slots() != oracle.slots() || est.dim() != oracle.dim() || est.frames() != oracle.frames() {
        return Err(Error::shape(format!(
            "estimate {}×{}×{} vs oracle {}×{}×{}",
            est.slots(),
            est.frames(),
            est.dim(),
            oracle.slots(),
            oracle.frames(),
            oracle.dim()
        )));
    }
    if est.slots() > MAX_PIT_SLOTS {
        return Err(Error::invalid(format!("at most {MAX_PIT_SLOTS} slots are supported")));
    }
    let perms = permutations(est.slots());
    let mut loss = 0.0;
    let mut chosen = Vec::with_capacity(est.frames());
    for t in 0..est.frames() {
        let (k, c) = best_assignment(&perms, |i, j| distance(est.get(i, t), oracle.get(j, t)));
        loss += c;
        chosen.push(perms[k].clone());
    }
    let reordered = est.permuted(&chosen)?;
    Ok(PitMatch {
        loss,
        permutations: chosen,
        profiles: SpeakerProfileSeq::new(ProfileMode::Oracle, reordered),
    })
}
