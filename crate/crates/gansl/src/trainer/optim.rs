//! Adam with decoupled weight decay over an explicit parameter list.
//!
//! Hand-rolled instead of the backend optimizer so moment tensors are
//! plain named state that checkpoints serialize and restore bit-exactly.

use tch::Tensor;

use crate::error::{Error, Result};

pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: i64,
    params: Vec<(String, Tensor)>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamW {
    /// `named` must be name-sorted; state keys derive from those names.
    pub fn new(named: Vec<(String, Tensor)>, lr: f64, betas: (f64, f64), weight_decay: f64) -> Self {
        let m = named.iter().map(|(_, p)| Tensor::zeros_like(p)).collect();
        let v = named.iter().map(|(_, p)| Tensor::zeros_like(p)).collect();
        AdamW {
            lr,
            beta1: betas.0,
            beta2: betas.1,
            eps: 1e-8,
            weight_decay,
            t: 0,
            params: named,
            m,
            v,
        }
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in &mut self.params {
            p.zero_grad();
        }
    }

    /// One update over every parameter that has a gradient. Parameters
    /// without gradients keep their value and moments untouched.
    pub fn step(&mut self) {
        let _ng = tch::no_grad_guard();
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((_, p), m), v) in self.params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grad = p.grad();
            if !grad.defined() {
                continue;
            }
            let _ = m.g_mul_scalar_(self.beta1).g_add_(&(&grad * (1.0 - self.beta1)));
            let _ = v.g_mul_scalar_(self.beta2).g_add_(&(&grad * &grad * (1.0 - self.beta2)));
            let m_hat = &*m / bc1;
            let v_hat = &*v / bc2;
            let update = &m_hat / (v_hat.sqrt() + self.eps) + &*p * self.weight_decay;
            let _ = p.g_add_(&(update * -self.lr));
        }
    }

    pub fn step_count(&self) -> i64 {
        self.t
    }

    pub fn set_step_count(&mut self, t: i64) {
        self.t = t;
    }

    /// Moment tensors keyed `m.<param>` / `v.<param>`.
    pub fn state_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::with_capacity(2 * self.params.len());
        for (((name, _), m), v) in self.params.iter().zip(&self.m).zip(&self.v) {
            out.push((format!("m.{name}"), m.shallow_clone()));
            out.push((format!("v.{name}"), v.shallow_clone()));
        }
        out
    }

    pub fn load_state_tensors(&mut self, map: &std::collections::HashMap<String, Tensor>) -> Result<()> {
        let _ng = tch::no_grad_guard();
        for (((name, _), m), v) in self.params.iter().zip(&mut self.m).zip(&mut self.v) {
            let ms = map
                .get(&format!("m.{name}"))
                .ok_or_else(|| Error::Data(format!("optimizer state missing m.{name}")))?;
            let vs = map
                .get(&format!("v.{name}"))
                .ok_or_else(|| Error::Data(format!("optimizer state missing v.{name}")))?;
            m.copy_(ms);
            v.copy_(vs);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tch::{Device, Kind};

    fn quadratic_step(opt: &mut AdamW, p: &Tensor) -> f64 {
        opt.zero_grad();
        let loss = (p * p).sum(None);
        loss.backward();
        opt.step();
        loss.double_value(&[])
    }

    #[test]
    fn adamw_descends_a_quadratic() {
        let p = Tensor::from_slice(&[2.0f32, -3.0]).set_requires_grad(true);
        let mut opt = AdamW::new(vec![("p".into(), p.shallow_clone())], 0.1, (0.9, 0.999), 0.0);
        let first = quadratic_step(&mut opt, &p);
        let mut last = first;
        for _ in 0..50 {
            last = quadratic_step(&mut opt, &p);
        }
        assert!(last < first * 0.05, "loss {first} -> {last}");
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let p = Tensor::from_slice(&[1.0f32, 2.0]).set_requires_grad(true);
        let before: Vec<f32> = Vec::try_from(p.copy()).unwrap();
        let mut opt = AdamW::new(vec![("p".into(), p.shallow_clone())], 0.0, (0.5, 0.999), 1e-4);
        quadratic_step(&mut opt, &p);
        let after: Vec<f32> = Vec::try_from(p.copy()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn params_without_grads_are_untouched() {
        let p = Tensor::from_slice(&[1.0f32]).set_requires_grad(true);
        let q = Tensor::from_slice(&[5.0f32]).set_requires_grad(true);
        let mut opt = AdamW::new(
            vec![("p".into(), p.shallow_clone()), ("q".into(), q.shallow_clone())],
            0.1,
            (0.9, 0.999),
            0.0,
        );
        opt.zero_grad();
        let loss = (&p * &p).sum(None);
        loss.backward();
        opt.step();
        assert_eq!(f64::try_from(&q).unwrap(), 5.0);
    }

    #[test]
    fn state_roundtrip_is_exact() {
        let p = Tensor::from_slice(&[1.0f32, -1.0]).set_requires_grad(true);
        let mut opt = AdamW::new(vec![("p".into(), p.shallow_clone())], 0.05, (0.9, 0.999), 1e-2);
        for _ in 0..3 {
            quadratic_step(&mut opt, &p);
        }
        let state: std::collections::HashMap<String, Tensor> =
            opt.state_tensors().into_iter().collect();
        let q = p.detach().copy().set_requires_grad(true);
        let mut opt2 = AdamW::new(vec![("p".into(), q.shallow_clone())], 0.05, (0.9, 0.999), 1e-2);
        opt2.load_state_tensors(&state).unwrap();
        opt2.set_step_count(opt.step_count());
        quadratic_step(&mut opt, &p);
        quadratic_step(&mut opt2, &q);
        let a: Vec<f32> = Vec::try_from(p.copy()).unwrap();
        let b: Vec<f32> = Vec::try_from(q.copy()).unwrap();
        assert_eq!(a, b);
    }
}
