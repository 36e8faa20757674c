use rand::Rng;

use super::weights::Weights;
use crate::{Error, Result};

/// One self-attention head over the entries of a feature vector: each entry
/// attends to every other entry with weights `softmax_j(b_i c_j / sqrt(d))`,
/// where `b = W_b s` and `c = W_c s`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionHead {
    pub w_b: Weights,
    pub w_c: Weights,
}

impl AttentionHead {
    pub fn new<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Self {
        Self { w_b: Weights::uniform(dim, dim, scale, rng), w_c: Weights::uniform(dim, dim, scale, rng) }
    }

    pub fn dim(&self) -> usize {
        self.w_b.rows()
    }
}

/// Weighted sum of several heads; the weights `mix` are learned.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiAttention {
    pub heads: Vec<AttentionHead>,
    pub mix: Weights,
}

impl MultiAttention {
    pub fn new<R: Rng + ?Sized>(dim: usize, heads: usize, scale: f64, rng: &mut R) -> Self {
        let heads: Vec<_> = (0..heads).map(|_| AttentionHead::new(dim, scale, rng)).collect();
        let mix = Weights::uniform(1, heads.len(), scale, rng);
        Self { heads, mix }
    }

    pub fn dim(&self) -> usize {
        self.heads.first().map_or(0, AttentionHead::dim)
    }
}

/// Row-stochastic attention matrix, row `i` holding the weights of entry `i`.
pub fn attention_weights(s: &[f64], head: &AttentionHead) -> Result<Vec<Vec<f64>>> {
    let d = head.dim();
    if s.len() != d {
        return Err(Error::Shape(format!("attention input has {} entries, head expects {d}", s.len())));
    }
    let b = head.w_b.matvec(s);
    let c = head.w_c.matvec(s);
    let scale = 1.0 / (d as f64).sqrt();
    Ok(b.iter()
        .map(|bi| {
            let logits: Vec<f64> = c.iter().map(|cj| bi * cj * scale).collect();
            let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = logits.iter().map(|l| (l - peak).exp()).collect();
            let total: f64 = e.iter().sum();
            e.into_iter().map(|v| v / total).collect()
        })
        .collect())
}

pub fn attention_head(s: &[f64], head: &AttentionHead) -> Result<Vec<f64>> {
    let alpha = attention_weights(s, head)?;
    Ok(alpha.iter().map(|row| row.iter().zip(s).map(|(a, v)| a * v).sum()).collect())
}

pub fn multi_attention(s: &[f64], attn: &MultiAttention) -> Result<Vec<f64>> {
    let mut out = vec![0.0; s.len()];
    for (m, head) in attn.heads.iter().enumerate() {
        let w = attn.mix.get(0, m);
        for (o, v) in out.iter_mut().zip(attention_head(s, head)?) {
            *o += w * v;
        }
    }
    Ok(out)
}
