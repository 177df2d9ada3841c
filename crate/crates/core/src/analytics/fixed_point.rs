//! Fixed-point solvers for the extinction profile `pi(t)` and the Laplace
//! transform `L_theta(t) = E exp(-theta Y(t))` on a uniform grid.
//!
//! Extinction, for the root protected until `t`:
//!
//! ```text
//! pi(t) = e^t * int_t^inf exp(-(lambda + 1) s + lambda int_0^s pi) ds
//! ```
//!
//! Laplace transform, for the root dying at `t`:
//!
//! ```text
//! L(t) = e^-theta * exp(lambda int_0^t e^x int_x^inf (L(s) - 1) e^-s ds dx)
//! ```
//!
//! Both operators are monotone. Iterates are taken on the grid and the
//! integrals beyond the horizon are closed-form under the stated tail
//! continuations.

use serde::{Deserialize, Serialize};

use super::spectral::spectral;
use crate::error::{domain, Error, Result};

/// A function sampled on `t_j = j * step`, `j = 0..=n`, continued by
/// `tail_value` past the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_value: f64,
    /// Iterations the solver used.
    pub iterations: usize,
}

impl GridFunction {
    pub fn step(&self) -> f64 {
        if self.grid.len() > 1 {
            self.grid[1] - self.grid[0]
        } else {
            0.0
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap_or(&0.0)
    }

    /// Linear interpolation inside the grid, `tail_value` beyond it.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.horizon() {
            return self.tail_value;
        }
        let h = self.step();
        let pos = t / h;
        let j = (pos.floor() as usize).min(self.values.len() - 2);
        let w = pos - j as f64;
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub horizon: f64,
    pub step: f64,
    /// Stop when the sup-norm change between iterates is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            horizon: 40.0,
            step: 0.01,
            tol: 1e-10,
            max_iter: 200_000,
        }
    }
}

impl FixedPointOptions {
    pub fn with_grid(horizon: f64, step: f64) -> Self {
        Self {
            horizon,
            step,
            ..Self::default()
        }
    }

    fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return domain(format!("grid step must be positive, got {}", self.step));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return domain("tolerance and iteration cap must be positive");
        }
        let n = (self.horizon / self.step - 1e-9).ceil().max(1.0) as usize;
        if n > 50_000_000 {
            return domain("grid too fine");
        }
        Ok((0..=n).map(|j| j as f64 * self.step).collect())
    }
}

/// `(e^x - 1) / x`, continuous at 0.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One application of the extinction operator to `pi`, written into `next`.
fn extinction_step(lambda: f64, t: &[f64], h: f64, pi: &[f64], next: &mut [f64], expo: &mut [f64]) {
    let n = t.len() - 1;
    let decay = (-h).exp();
    // exponent -(lambda+1) s + lambda int_0^s pi, shifted by +s so the
    // e^t factor is folded in
    let mut integral = 0.0;
    expo[0] = 0.0;
    for j in 1..=n {
        integral += 0.5 * h * (pi[j - 1] + pi[j]);
        expo[j] = -lambda * t[j] + lambda * integral;
    }
    let rate = lambda + 1.0 - lambda * pi[n];
    next[n] = expo[n].exp() / rate;
    for j in (0..n).rev() {
        // slope of the un-shifted exponent on the cell
        let slope = (expo[j + 1] - expo[j]) / h - 1.0;
        let cell = expo[j].exp() * h * expm1_ratio(slope * h);
        next[j] = cell + decay * next[j + 1];
    }
}

/// Extinction probability `pi(t)` given the root cannot die before `t`;
/// `pi(0)` is the overall extinction probability.
///
/// Iterates from `pi = 0`, so the limit is the least fixed point. The inner
/// integral is trapezoidal; the outer integrand is `exp` of a piecewise
/// linear exponent, integrated exactly per cell, and past the horizon the
/// inner integral continues linearly with slope `pi(T)`.
pub fn extinction_profile(lambda: f64, opts: &FixedPointOptions) -> Result<GridFunction> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    let t = opts.nodes()?;
    let n = t.len() - 1;
    let h = opts.step;

    let mut pi = vec![0.0; n + 1];
    let mut next = vec![0.0; n + 1];
    let mut expo = vec![0.0; n + 1];
    let mut residual = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        extinction_step(lambda, &t, h, &pi, &mut next, &mut expo);
        residual = sup_diff(&next, &pi);
        std::mem::swap(&mut pi, &mut next);
        if residual < opts.tol {
            for v in pi.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            let tail_value = pi[n];
            return Ok(GridFunction {
                grid: t,
                values: pi,
                tail_value,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// `L_theta(t) = E exp(-theta Y(t))` for `0 < lambda <= 1/4`, `theta >= 0`.
///
/// Iterates from the constant `e^-theta`; `L` is linear between nodes for the
/// inner integral and frozen at `L(T)` past the horizon.
pub fn laplace_profile(lambda: f64, theta: f64, opts: &FixedPointOptions) -> Result<GridFunction> {
    spectral(lambda)?;
    if !(theta >= 0.0 && theta.is_finite()) {
        return domain(format!("theta must be finite and >= 0, got {theta}"));
    }
    let t = opts.nodes()?;
    let n = t.len() - 1;
    let h = opts.step;
    let decay = (-h).exp();
    // int_0^h e^-s ds and int_0^h (s / h) e^-s ds
    let w0 = -(-h).exp_m1();
    let w1 = (w0 - h * decay) / h;
    let base = (-theta).exp();

    let mut l = vec![base; n + 1];
    let mut next = vec![0.0; n + 1];
    let mut inner = vec![0.0; n + 1];
    let mut residual = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        // inner_j = e^{t_j} int_{t_j}^inf (L(s) - 1) e^-s ds
        inner[n] = l[n] - 1.0;
        for j in (0..n).rev() {
            let a = l[j] - 1.0;
            let b = l[j + 1] - 1.0;
            inner[j] = a * w0 + (b - a) * w1 + decay * inner[j + 1];
        }
        let mut outer = 0.0;
        next[0] = base;
        for j in 1..=n {
            outer += 0.5 * h * (inner[j - 1] + inner[j]);
            next[j] = base * (lambda * outer).exp();
        }
        residual = sup_diff(&next, &l);
        std::mem::swap(&mut l, &mut next);
        if residual < opts.tol {
            let tail_value = l[n];
            return Ok(GridFunction {
                grid: t,
                values: l,
                tail_value,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
