use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::activations::{sigmoid, tanh};
use super::attention::{attention_head, AttentionHead};
use super::weights::{Parametric, Weights};
use super::INIT_SCALE;
use crate::gecsr::{DampingPolicy, PolicyFeatures, Side};
use crate::{Error, Result};

/// Recurrent damping generator. The gate matrices act on `[h; s]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperGruParams {
    pub w_z: Weights,
    pub w_r: Weights,
    pub w_h: Weights,
    pub w_o: Weights,
    pub b_z: Option<Weights>,
    pub b_r: Option<Weights>,
    pub b_h: Option<Weights>,
    pub b_o: Option<Weights>,
    pub attention: Option<AttentionHead>,
}

impl HyperGruParams {
    pub fn new(n: usize, hidden: usize, attention: bool, bias: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = hidden + n + 4;
        let w_z = Weights::uniform(hidden, cols, INIT_SCALE, &mut rng);
        let w_r = Weights::uniform(hidden, cols, INIT_SCALE, &mut rng);
        let w_h = Weights::uniform(hidden, cols, INIT_SCALE, &mut rng);
        let w_o = Weights::uniform(1, hidden, INIT_SCALE, &mut rng);
        let bias_of = |rows| bias.then(|| Weights::zeros(rows, 1));
        let attention = attention.then(|| AttentionHead::new(hidden, INIT_SCALE, &mut rng));
        Self { w_z, w_r, w_h, w_o, b_z: bias_of(hidden), b_r: bias_of(hidden), b_h: bias_of(hidden), b_o: bias_of(1), attention }
    }

    pub fn zeros(n: usize, hidden: usize) -> Self {
        let cols = hidden + n + 4;
        Self {
            w_z: Weights::zeros(hidden, cols),
            w_r: Weights::zeros(hidden, cols),
            w_h: Weights::zeros(hidden, cols),
            w_o: Weights::zeros(1, hidden),
            b_z: None,
            b_r: None,
            b_h: None,
            b_o: None,
            attention: None,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_z.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols() - self.hidden()
    }

    pub fn n(&self) -> usize {
        self.input_dim() - 4
    }

    pub fn validate(&self) -> Result<()> {
        let (h, cols) = (self.hidden(), self.w_z.cols());
        let mut ok = cols >= h + 4;
        ok &= [&self.w_r, &self.w_h].iter().all(|w| w.rows() == h && w.cols() == cols);
        ok &= self.w_o.rows() == 1 && self.w_o.cols() == h;
        ok &= [&self.b_z, &self.b_r, &self.b_h].iter().all(|b| b.as_ref().is_none_or(|b| b.rows() == h && b.cols() == 1));
        ok &= self.b_o.as_ref().is_none_or(|b| b.rows() == 1 && b.cols() == 1);
        ok &= self.attention.as_ref().is_none_or(|a| a.dim() == h && a.w_c.rows() == h && a.w_c.cols() == h);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("inconsistent GRU array shapes".into()))
        }
    }
}

impl Parametric for HyperGruParams {
    fn arrays(&self) -> Vec<(String, &Weights)> {
        let mut out = vec![
            ("w_z".to_string(), &self.w_z),
            ("w_r".to_string(), &self.w_r),
            ("w_h".to_string(), &self.w_h),
            ("w_o".to_string(), &self.w_o),
        ];
        for (name, b) in [("b_z", &self.b_z), ("b_r", &self.b_r), ("b_h", &self.b_h), ("b_o", &self.b_o)] {
            if let Some(b) = b {
                out.push((name.to_string(), b));
            }
        }
        if let Some(a) = &self.attention {
            out.push(("attn.w_b".into(), &a.w_b));
            out.push(("attn.w_c".into(), &a.w_c));
        }
        out
    }

    fn arrays_mut(&mut self) -> Vec<&mut Weights> {
        let mut out = vec![&mut self.w_z, &mut self.w_r, &mut self.w_h, &mut self.w_o];
        for b in [&mut self.b_z, &mut self.b_r, &mut self.b_h, &mut self.b_o].into_iter().flatten() {
            out.push(b);
        }
        if let Some(a) = &mut self.attention {
            out.push(&mut a.w_b);
            out.push(&mut a.w_c);
        }
        out
    }
}

fn add_bias(v: &mut [f64], b: &Option<Weights>) {
    if let Some(b) = b {
        v.iter_mut().zip(b.data()).for_each(|(x, b)| *x += b);
    }
}

/// One recurrence step; returns the new state and the damping factor.
pub fn gru_step(h: &[f64], s: &[f64], p: &HyperGruParams) -> Result<(Vec<f64>, f64)> {
    let (next, read) = gru_readout(h, s, p)?;
    let mut o = p.w_o.matvec(&read)[0];
    if let Some(b) = &p.b_o {
        o += b.data()[0];
    }
    Ok((next, sigmoid(o)))
}

/// One recurrence step; returns the new state and the vector the output
/// layer reads (the state, or its attention readout).
pub fn gru_readout(h: &[f64], s: &[f64], p: &HyperGruParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if h.len() != p.hidden() || s.len() != p.input_dim() {
        return Err(Error::Shape(format!(
            "GRU step got state {} / input {}, expected {} / {}",
            h.len(),
            s.len(),
            p.hidden(),
            p.input_dim()
        )));
    }
    let mut z = p.w_z.matvec_concat(h, s);
    add_bias(&mut z, &p.b_z);
    let mut r = p.w_r.matvec_concat(h, s);
    add_bias(&mut r, &p.b_r);
    let gated: Vec<f64> = r.iter().zip(h).map(|(r, h)| sigmoid(*r) * h).collect();
    let mut cand = p.w_h.matvec_concat(&gated, s);
    add_bias(&mut cand, &p.b_h);
    let next: Vec<f64> = z
        .iter()
        .zip(&cand)
        .zip(h)
        .map(|((z, c), h)| {
            let z = sigmoid(*z);
            (1.0 - z) * h + z * tanh(*c)
        })
        .collect();
    let read = match &p.attention {
        Some(a) => attention_head(&next, a)?,
        None => next.clone(),
    };
    Ok((next, read))
}

/// GRU input `[sigma_tilde; sqrt(SNR); beta(t-1); beta(t-2); log10 v]`.
pub fn gru_input(f: &PolicyFeatures, out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(f.sigma_tilde);
    out.extend([f.sqrt_snr, f.beta_prev, f.beta_prev2, variance_feature(f.v_ext)]);
}

/// `log10(v)` clipped to `[-11, 11]`.
pub fn variance_feature(v: f64) -> f64 {
    if v.is_nan() {
        return 11.0;
    }
    v.max(f64::MIN_POSITIVE).log10().clamp(-11.0, 11.0)
}

/// Per-run GRU state; one hidden state runs through the z and x steps of
/// every layer.
pub struct GruPolicy<'a> {
    params: &'a HyperGruParams,
    state: Vec<f64>,
    input: Vec<f64>,
}

impl<'a> GruPolicy<'a> {
    pub fn new(params: &'a HyperGruParams) -> Self {
        Self { params, state: vec![0.0; params.hidden()], input: Vec::with_capacity(params.input_dim()) }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }
}

impl DampingPolicy for GruPolicy<'_> {
    fn beta(&mut self, _side: Side, _t: usize, f: &PolicyFeatures) -> Result<f64> {
        if f.sigma_tilde.len() != self.params.n() {
            return Err(Error::Shape(format!(
                "GRU controller built for N = {}, got {} spectral features",
                self.params.n(),
                f.sigma_tilde.len()
            )));
        }
        gru_input(f, &mut self.input);
        let (next, beta) = gru_step(&self.state, &self.input, self.params)?;
        self.state = next;
        Ok(beta)
    }
}
