use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::activations::{relu, sigmoid};
use super::attention::{multi_attention, MultiAttention};
use super::weights::{Parametric, Weights};
use super::INIT_SCALE;
use crate::gecsr::{DampingPolicy, PolicyFeatures, Side};
use crate::{Error, Result};

/// Static two-layer hypernetwork producing a whole damping vector:
/// `beta = sigmoid(W2 relu(W1 s'))`, with `s'` optionally re-represented by
/// multi-head self-attention.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperNetParams {
    pub w1: Weights,
    pub w2: Weights,
    pub b1: Option<Weights>,
    pub b2: Option<Weights>,
    pub attention: Option<MultiAttention>,
}

impl HyperNetParams {
    /// Uniform initialization in `[-INIT_SCALE, INIT_SCALE]`; `heads = 0`
    /// disables attention.
    pub fn new(n: usize, hidden: usize, layers: usize, heads: usize, bias: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = Weights::uniform(hidden, n + 1, INIT_SCALE, &mut rng);
        let w2 = Weights::uniform(layers, hidden, INIT_SCALE, &mut rng);
        let (b1, b2) = if bias {
            (Some(Weights::zeros(hidden, 1)), Some(Weights::zeros(layers, 1)))
        } else {
            (None, None)
        };
        let attention = (heads > 0).then(|| MultiAttention::new(n + 1, heads, INIT_SCALE, &mut rng));
        Self { w1, w2, b1, b2, attention }
    }

    pub fn zeros(n: usize, hidden: usize, layers: usize) -> Self {
        Self { w1: Weights::zeros(hidden, n + 1), w2: Weights::zeros(layers, hidden), b1: None, b2: None, attention: None }
    }

    pub fn n(&self) -> usize {
        self.w1.cols() - 1
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    pub fn layers(&self) -> usize {
        self.w2.rows()
    }

    pub fn heads(&self) -> usize {
        self.attention.as_ref().map_or(0, |a| a.heads.len())
    }

    pub fn validate(&self) -> Result<()> {
        let (d, ds) = (self.hidden(), self.w1.cols());
        let mut ok = self.w2.cols() == d;
        ok &= self.b1.as_ref().is_none_or(|b| b.rows() == d && b.cols() == 1);
        ok &= self.b2.as_ref().is_none_or(|b| b.rows() == self.layers() && b.cols() == 1);
        if let Some(a) = &self.attention {
            ok &= !a.heads.is_empty() && a.mix.rows() == 1 && a.mix.cols() == a.heads.len();
            ok &= a.heads.iter().all(|h| [&h.w_b, &h.w_c].iter().all(|w| w.rows() == ds && w.cols() == ds));
        }
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("inconsistent hypernetwork array shapes".into()))
        }
    }
}

impl Parametric for HyperNetParams {
    fn arrays(&self) -> Vec<(String, &Weights)> {
        let mut out = vec![("w1".to_string(), &self.w1), ("w2".to_string(), &self.w2)];
        if let Some(b) = &self.b1 {
            out.push(("b1".into(), b));
        }
        if let Some(b) = &self.b2 {
            out.push(("b2".into(), b));
        }
        if let Some(a) = &self.attention {
            for (i, h) in a.heads.iter().enumerate() {
                out.push((format!("attn{i}.w_b"), &h.w_b));
                out.push((format!("attn{i}.w_c"), &h.w_c));
            }
            out.push(("attn.mix".into(), &a.mix));
        }
        out
    }

    fn arrays_mut(&mut self) -> Vec<&mut Weights> {
        let mut out = vec![&mut self.w1, &mut self.w2];
        if let Some(b) = &mut self.b1 {
            out.push(b);
        }
        if let Some(b) = &mut self.b2 {
            out.push(b);
        }
        if let Some(a) = &mut self.attention {
            for h in &mut a.heads {
                out.push(&mut h.w_b);
                out.push(&mut h.w_c);
            }
            out.push(&mut a.mix);
        }
        out
    }
}

/// Input `s = [sigma_tilde; sqrt(SNR)]` of length `N + 1`.
pub fn hypernet_forward(s: &[f64], params: &HyperNetParams) -> Result<Vec<f64>> {
    let h = hypernet_hidden(s, params)?;
    let mut a = params.w2.matvec(&h);
    if let Some(b) = &params.b2 {
        a.iter_mut().zip(b.data()).for_each(|(v, b)| *v += b);
    }
    Ok(a.into_iter().map(sigmoid).collect())
}

/// Hidden activations that the output layer reads.
pub fn hypernet_hidden(s: &[f64], params: &HyperNetParams) -> Result<Vec<f64>> {
    if s.len() != params.w1.cols() {
        return Err(Error::Shape(format!("hypernet input has {} entries, expected {}", s.len(), params.w1.cols())));
    }
    let attended;
    let s = match &params.attention {
        Some(a) => {
            attended = multi_attention(s, a)?;
            &attended[..]
        }
        None => s,
    };
    let mut h = params.w1.matvec(s);
    if let Some(b) = &params.b1 {
        h.iter_mut().zip(b.data()).for_each(|(v, b)| *v += b);
    }
    Ok(h.into_iter().map(relu).collect())
}

/// What a static policy returns past its trained depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Overflow {
    Error,
    Constant(f64),
}

/// Serves the hypernetwork's damping vector to the solver, one value per
/// layer, tied across both sides.
pub struct StaticPolicy<'a> {
    params: &'a HyperNetParams,
    overflow: Overflow,
    cache: Option<Vec<f64>>,
}

impl<'a> StaticPolicy<'a> {
    pub fn new(params: &'a HyperNetParams, overflow: Overflow) -> Self {
        Self { params, overflow, cache: None }
    }

    /// The cached damping vector, once the first layer has been served.
    pub fn betas(&self) -> Option<&[f64]> {
        self.cache.as_deref()
    }
}

impl DampingPolicy for StaticPolicy<'_> {
    fn beta(&mut self, _side: Side, t: usize, f: &PolicyFeatures) -> Result<f64> {
        if self.cache.is_none() {
            let mut s = f.sigma_tilde.to_vec();
            s.push(f.sqrt_snr);
            self.cache = Some(hypernet_forward(&s, self.params)?);
        }
        let betas = self.cache.as_ref().expect("cached above");
        match betas.get(t.wrapping_sub(1)) {
            Some(b) => Ok(*b),
            None => match self.overflow {
                Overflow::Constant(b) => Ok(b),
                Overflow::Error => Err(Error::LayerOverflow { t, layers: betas.len() }),
            },
        }
    }
}
