#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(v),
            Activation::Relu => relu(v),
            Activation::Tanh => tanh(v),
        }
    }

    pub fn apply_all(self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| self.apply(*x)).collect()
    }
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

pub fn relu(a: f64) -> f64 {
    a.max(0.0)
}

pub fn tanh(a: f64) -> f64 {
    a.tanh()
}
