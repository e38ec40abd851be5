//! Gated recurrent unit.
//!
//! Gate convention: `h = (1 − z)⊙h_prev + z⊙h̃`, so `z → 0` keeps the
//! previous state and `z → 1` takes the candidate.

use rand::Rng;

use super::array::{Scalar, Tensor};
use super::graph::{Graph, NodeId, ParamId, ParamSet};
use super::init::uniform;
use super::TensorError;

/// Recurrent and bias init range.
pub const RECURRENT_INIT: f64 = 0.1;

/// Parameter handles for one GRU direction. Input matrices are
/// hidden×input, recurrent matrices hidden×hidden.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub w_z: ParamId,
    pub w_r: ParamId,
    pub w_h: ParamId,
    pub u_z: ParamId,
    pub u_r: ParamId,
    pub u_h: ParamId,
    pub b_z: ParamId,
    pub b_r: ParamId,
    pub b_h: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl GruParams {
    pub fn init<T: Scalar, R: Rng + ?Sized>(
        params: &mut ParamSet<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut add =
            |name: &str, shape: &[usize]| params.add(format!("{prefix}.{name}"), uniform(shape, RECURRENT_INIT, rng));
        let w_z = add("w_z", &[hidden_dim, input_dim]);
        let w_r = add("w_r", &[hidden_dim, input_dim]);
        let w_h = add("w_h", &[hidden_dim, input_dim]);
        let u_z = add("u_z", &[hidden_dim, hidden_dim]);
        let u_r = add("u_r", &[hidden_dim, hidden_dim]);
        let u_h = add("u_h", &[hidden_dim, hidden_dim]);
        let b_z = add("b_z", &[hidden_dim]);
        let b_r = add("b_r", &[hidden_dim]);
        let b_h = add("b_h", &[hidden_dim]);
        GruParams {
            w_z,
            w_r,
            w_h,
            u_z,
            u_r,
            u_h,
            b_z,
            b_r,
            b_h,
            input_dim,
            hidden_dim,
        }
    }

    /// Re-attaches handles by name, e.g. after loading a checkpoint.
    pub fn lookup<T: Scalar>(params: &ParamSet<T>, prefix: &str) -> Option<Self> {
        let id = |name: &str| params.id(&format!("{prefix}.{name}"));
        let w_z = id("w_z")?;
        let u_z = id("u_z")?;
        let shape = params.get(w_z).shape();
        let (hidden_dim, input_dim) = (shape[0], shape[1]);
        Some(GruParams {
            w_z,
            w_r: id("w_r")?,
            w_h: id("w_h")?,
            u_z,
            u_r: id("u_r")?,
            u_h: id("u_h")?,
            b_z: id("b_z")?,
            b_r: id("b_r")?,
            b_h: id("b_h")?,
            input_dim,
            hidden_dim,
        })
    }

    fn gate<T: Scalar>(
        g: &mut Graph<'_, T>,
        w: ParamId,
        u: ParamId,
        b: ParamId,
        x: NodeId,
        h: NodeId,
    ) -> Result<NodeId, TensorError> {
        let (w, u, b) = (g.param(w), g.param(u), g.param(b));
        let wx = g.matvec(w, x)?;
        let uh = g.matvec(u, h)?;
        let s = g.add(wx, uh)?;
        g.add(s, b)
    }

    /// One recurrence step on graph nodes.
    pub fn step<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId, h_prev: NodeId) -> Result<NodeId, TensorError> {
        let z_pre = Self::gate(g, self.w_z, self.u_z, self.b_z, x, h_prev)?;
        let z = g.sigmoid(z_pre);
        let r_pre = Self::gate(g, self.w_r, self.u_r, self.b_r, x, h_prev)?;
        let r = g.sigmoid(r_pre);
        let rh = g.mul(r, h_prev)?;
        let cand_pre = Self::gate(g, self.w_h, self.u_h, self.b_h, x, rh)?;
        let cand = g.tanh(cand_pre);
        let keep = g.one_minus(z);
        let old = g.mul(keep, h_prev)?;
        let new = g.mul(z, cand)?;
        g.add(old, new)
    }

    /// Runs the cell over a sequence from a zero state. Outputs are aligned
    /// with input positions in both directions.
    pub fn run<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        xs: &[NodeId],
        reverse: bool,
    ) -> Result<Vec<NodeId>, TensorError> {
        let mut h = g.input(Tensor::zeros(&[self.hidden_dim]));
        let mut out = vec![h; xs.len()];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..xs.len()).rev())
        } else {
            Box::new(0..xs.len())
        };
        for t in order {
            h = self.step(g, xs[t], h)?;
            out[t] = h;
        }
        Ok(out)
    }
}

/// Evaluates one GRU step outside of any training graph.
pub fn gru_step<T: Scalar>(
    x: &Tensor<T>,
    h_prev: &Tensor<T>,
    params: &ParamSet<T>,
    gru: &GruParams,
) -> Result<Tensor<T>, TensorError> {
    if x.shape() != [gru.input_dim] {
        return Err(TensorError::Shape {
            op: "gru_step",
            left: x.shape().to_vec(),
            right: vec![gru.input_dim],
        });
    }
    if h_prev.shape() != [gru.hidden_dim] {
        return Err(TensorError::Shape {
            op: "gru_step",
            left: h_prev.shape().to_vec(),
            right: vec![gru.hidden_dim],
        });
    }
    let mut g = Graph::new(params);
    let xn = g.input(x.clone());
    let hn = g.input(h_prev.clone());
    let out = gru.step(&mut g, xn, hn)?;
    Ok(g.value(out).clone())
}
