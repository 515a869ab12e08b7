use rand::Rng;

/// One-hidden-layer perceptron: tanh hidden units, single linear output.
///
/// Parameters are flattened as `[w1 (row-major, hidden x inputs), b1, w2, b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            inputs,
            hidden,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Uniform weights in `[-scale, scale]`.
    pub fn random<R: Rng>(inputs: usize, hidden: usize, scale: f64, rng: &mut R) -> Self {
        let mut m = Self::zeros(inputs, hidden);
        let mut draw = || scale * (2.0 * rng.random::<f64>() - 1.0);
        m.w1.iter_mut().for_each(|w| *w = draw());
        m.b1.iter_mut().for_each(|w| *w = draw());
        m.w2.iter_mut().for_each(|w| *w = draw());
        m.b2 = draw();
        m
    }

    pub fn n_params(&self) -> usize {
        self.hidden * self.inputs + 2 * self.hidden + 1
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.inputs);
        let mut out = self.b2;
        for j in 0..self.hidden {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            let z = self.b1[j] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            out += self.w2[j] * z.tanh();
        }
        out
    }

    /// Output and its gradient with respect to the flattened parameters, written into `grad`.
    pub fn forward_with_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(grad.len(), self.n_params());
        let n_w1 = self.hidden * self.inputs;
        let (g_w1, rest) = grad.split_at_mut(n_w1);
        let (g_b1, rest) = rest.split_at_mut(self.hidden);
        let (g_w2, g_b2) = rest.split_at_mut(self.hidden);
        let mut out = self.b2;
        for j in 0..self.hidden {
            let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
            let z = self.b1[j] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            let a = z.tanh();
            out += self.w2[j] * a;
            g_w2[j] = a;
            let dz = self.w2[j] * (1.0 - a * a);
            g_b1[j] = dz;
            for (gi, xi) in g_w1[j * self.inputs..(j + 1) * self.inputs]
                .iter_mut()
                .zip(x)
            {
                *gi = dz * xi;
            }
        }
        g_b2[0] = 1.0;
        out
    }
}
