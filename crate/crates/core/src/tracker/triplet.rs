use super::pit::distance;
use super::seq::OracleEmbeddingSeq;
use crate::error::{Error, Result};

pub const DEFAULT_MARGIN: f64 = 1.0;

/// Hinge triplet loss over every ordered speaker pair `i ≠ j` and every frame
/// pair `(p, q)`: `max(|e(i,p) − e(i,q)| − |e(i,p) − e(j,p)| + margin, 0)`.
pub fn triplet_loss(oracle: &OracleEmbeddingSeq, pairs: &[(usize, usize)], margin: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("triplet loss needs at least one frame pair"));
    }
    if oracle.slots() < 2 {
        return Err(Error::invalid("triplet loss needs at least two speakers"));
    }
    let t = oracle.frames();
    if let Some((p, q)) = pairs.iter().find(|(p, q)| *p >= t || *q >= t) {
        return Err(Error::invalid(format!("frame pair ({p}, {q}) outside {t} frames")));
    }
    let mut total = 0.0;
    for i in 0..oracle.slots() {
        for j in (0..oracle.slots()).filter(|j| *j != i) {
            for &(p, q) in pairs {
                let anchor = oracle.get(i, p);
                let intra = distance(anchor, oracle.get(i, q));
                let inter = distance(anchor, oracle.get(j, p));
                total += (intra - inter + margin).max(0.0);
            }
        }
    }
    Ok(total)
}
