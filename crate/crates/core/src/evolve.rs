//! State-vector propagation: Lanczos/Krylov exponential action and dense
//! eigendecomposition for static Hamiltonians, fixed-step RK4 with mandatory
//! step-halving verification for time-dependent ones.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonians::TimeDependentHamiltonian;
use crate::hilbert::{SparseOperator, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    StaticKrylov,
    StaticEigen,
    TimedepRk4,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Fixed step for the time-dependent integrator; derived from the fastest
    /// phase when absent.
    pub time_step: Option<f64>,
    pub krylov_dim: usize,
    pub tolerance: f64,
    /// Dense eigendecomposition is refused above this dimension.
    pub max_dense_dim: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            method: Method::StaticKrylov,
            time_step: None,
            krylov_dim: 30,
            tolerance: 1e-12,
            max_dense_dim: 2048,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.time_step {
            if !(h > 0.0) {
                return Err(Error::Config(format!("time step must be positive, got {h}")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.krylov_dim < 2 {
            return Err(Error::Config("krylov dimension must be at least 2".into()));
        }
        Ok(())
    }
}

/// psi(t) = exp(-i H t) psi for Hermitian H.
pub fn propagate_static(
    h: &SparseOperator,
    psi: &StateVector,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if t < 0.0 {
        return Err(Error::Config(format!("negative duration {t}")));
    }
    if h.dim() != psi.amplitudes().len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: psi.amplitudes().len() });
    }
    if t == 0.0 {
        return Ok(psi.clone());
    }
    match cfg.method {
        Method::StaticEigen => propagate_eigen(h, psi, t, cfg),
        _ => propagate_krylov(h, psi, t, cfg),
    }
}

fn infinity_norm(h: &SparseOperator) -> f64 {
    let mut rows = vec![0.0f64; h.dim()];
    for (r, _, v) in h.triplets() {
        rows[r] += v.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}

fn propagate_krylov(
    h: &SparseOperator,
    psi: &StateVector,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    let mut amps = psi.amplitudes().to_vec();
    let hnorm = infinity_norm(h).max(1e-300);
    let mut remaining = t;
    let mut dt = remaining.min(2.0 * cfg.krylov_dim as f64 / hnorm);
    let mut halvings = 0u32;
    while remaining > 0.0 {
        dt = dt.min(remaining);
        let (next, err) = lanczos_step(h, &amps, dt, cfg.krylov_dim, hnorm);
        if err <= cfg.tolerance {
            amps = next;
            remaining -= dt;
            if err < cfg.tolerance * 1e-2 {
                dt *= 1.5;
            }
        } else {
            dt *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::Numerical(format!(
                    "Krylov propagation stalled, residual {err:e} at step {dt:e}"
                )));
            }
        }
    }
    StateVector::from_amplitudes(psi.basis(), amps)
}

/// One Lanczos approximation of exp(-i H dt) v; returns the new vector and an
/// a-posteriori residual estimate.
fn lanczos_step(h: &SparseOperator, v: &[C64], dt: f64, m: usize, hnorm: f64) -> (Vec<C64>, f64) {
    let dim = v.len();
    let vnorm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return (v.to_vec(), 0.0);
    }
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    basis.push(v.iter().map(|a| a / vnorm).collect());
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);
    let mut happy = false;

    for j in 0..m {
        let mut w = h.apply_slice(&basis[j]);
        let alpha: C64 = basis[j]
            .iter()
            .zip(&w)
            .map(|(b, wi)| b.conj() * wi)
            .sum();
        alphas.push(alpha.re);
        for (wi, bi) in w.iter_mut().zip(&basis[j]) {
            *wi -= alpha * bi;
        }
        if j > 0 {
            let beta_prev = C64::new(betas[j - 1], 0.0);
            for (wi, bi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= beta_prev * bi;
            }
        }
        // full reorthogonalization keeps the basis clean over long steps
        for b in &basis {
            let c: C64 = b.iter().zip(&w).map(|(bi, wi)| bi.conj() * wi).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        let beta = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        betas.push(beta);
        if beta < 1e-14 * hnorm {
            happy = true;
            break;
        }
        if j + 1 == m {
            break;
        }
        basis.push(w.into_iter().map(|a| a / beta).collect());
    }

    let k = alphas.len();
    let mut tri = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        tri[(i, i)] = alphas[i];
        if i + 1 < k {
            tri[(i + 1, i)] = betas[i];
            tri[(i, i + 1)] = betas[i];
        }
    }
    let se = tri.symmetric_eigen();
    // exp(-i T dt) e1 = Q exp(-i L dt) Q^T e1
    let q_row: Vec<f64> = (0..k).map(|c| se.eigenvectors[(0, c)]).collect();
    let mut small = vec![C64::ZERO; k];
    for r in 0..k {
        let mut acc = C64::ZERO;
        for c in 0..k {
            let phase = C64::new(0.0, -se.eigenvalues[c] * dt).exp();
            acc += C64::new(se.eigenvectors[(r, c)] * q_row[c], 0.0) * phase;
        }
        small[r] = acc;
    }
    let mut out = vec![C64::ZERO; dim];
    for (j, b) in basis.iter().enumerate() {
        let c = small[j] * vnorm;
        for (o, bi) in out.iter_mut().zip(b) {
            *o += c * bi;
        }
    }
    let err = if happy { 0.0 } else { (betas[k - 1] * small[k - 1].norm() * dt).abs() };
    (out, err)
}

fn propagate_eigen(
    h: &SparseOperator,
    psi: &StateVector,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    let dim = h.dim();
    let dense = h.to_dense(cfg.max_dense_dim)?;
    let m = DMatrix::from_fn(dim, dim, |r, c| dense[r * dim + c]);
    let defect = (&m - m.adjoint())
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::Numerical(format!(
            "operator is not Hermitian (defect {defect:e})"
        )));
    }
    let se = m.symmetric_eigen();
    let v = DVector::from_column_slice(psi.amplitudes());
    let mut coeffs = se.eigenvectors.adjoint() * v;
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= C64::new(0.0, -se.eigenvalues[k] * t).exp();
    }
    let out = &se.eigenvectors * coeffs;
    StateVector::from_amplitudes(psi.basis(), out.iter().copied().collect())
}

/// Fixed-step classic RK4 for i d/dt psi = H(t) psi over [t0, t1].
pub fn propagate_timedep_fixed(
    h: &TimeDependentHamiltonian,
    psi: &StateVector,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<StateVector> {
    if t1 < t0 {
        return Err(Error::Config("end time precedes start time".into()));
    }
    if h.dim() != psi.amplitudes().len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: psi.amplitudes().len() });
    }
    if t1 == t0 {
        return Ok(psi.clone());
    }
    let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / n as f64;
    let minus_i = C64::new(0.0, -1.0);
    let mut y = psi.amplitudes().to_vec();
    let mut t = t0;
    let mut scratch = vec![C64::ZERO; y.len()];
    for _ in 0..n {
        let k1: Vec<C64> = h.apply(t, &y).into_iter().map(|v| minus_i * v).collect();
        stage(&y, &k1, 0.5 * dt, &mut scratch);
        let k2: Vec<C64> = h
            .apply(t + 0.5 * dt, &scratch)
            .into_iter()
            .map(|v| minus_i * v)
            .collect();
        stage(&y, &k2, 0.5 * dt, &mut scratch);
        let k3: Vec<C64> = h
            .apply(t + 0.5 * dt, &scratch)
            .into_iter()
            .map(|v| minus_i * v)
            .collect();
        stage(&y, &k3, dt, &mut scratch);
        let k4: Vec<C64> = h
            .apply(t + dt, &scratch)
            .into_iter()
            .map(|v| minus_i * v)
            .collect();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        t += dt;
    }
    StateVector::from_amplitudes(psi.basis(), y)
}

fn stage(y: &[C64], k: &[C64], h: f64, out: &mut [C64]) {
    for i in 0..y.len() {
        out[i] = y[i] + k[i] * h;
    }
}

/// Time-dependent propagation with an embedded step-halving error estimate;
/// the step is refined until the Richardson estimate meets the tolerance.
pub fn propagate_timedep(
    h: &TimeDependentHamiltonian,
    psi: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &PropagatorConfig,
) -> Result<(StateVector, f64)> {
    cfg.validate()?;
    if t1 < t0 {
        return Err(Error::Config("end time precedes start time".into()));
    }
    if t1 == t0 {
        return Ok((psi.clone(), 0.0));
    }
    let fastest = h.max_frequency();
    let cap = match fastest {
        Some(f) if f > 0.0 => (std::f64::consts::TAU / f) / 20.0,
        _ => t1 - t0,
    };
    let mut step = match cfg.time_step {
        Some(s) => {
            if s > cap {
                return Err(Error::Config(format!(
                    "step {s} too coarse for fastest frequency (need <= {cap})"
                )));
            }
            s
        }
        None => cap,
    };
    if fastest.is_none() && cfg.time_step.is_none() {
        return Err(Error::Config(
            "cannot infer a step for custom coefficients; set time_step".into(),
        ));
    }
    for _ in 0..16 {
        let coarse = propagate_timedep_fixed(h, psi, t0, t1, step)?;
        let fine = propagate_timedep_fixed(h, psi, t0, t1, 0.5 * step)?;
        let mut diff = 0.0f64;
        for (a, b) in coarse.amplitudes().iter().zip(fine.amplitudes()) {
            diff += (a - b).norm_sqr();
        }
        let est = diff.sqrt() / 15.0;
        if est <= cfg.tolerance {
            return Ok((fine, est));
        }
        step *= 0.5;
    }
    Err(Error::Numerical(
        "time-dependent integrator failed to meet tolerance after refinement".into(),
    ))
}
