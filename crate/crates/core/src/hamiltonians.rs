//! Interaction-picture Hamiltonians for the driven qubit-cavity system: the
//! resonant pulse and Jaynes-Cummings couplings, the full off-resonant Raman
//! coupling with its exact static rotating-frame form, and the effective
//! reductions used for calibration and cross-checks.
//!
//! All energies are angular frequencies with hbar = 1; the qubit-1 coupling
//! `g` sets the natural scale.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{embed, CompositeBasis, LocalOp, SparseOperator};

/// Three-level qubit coupled resonantly to the cavity on its (1,2)
/// transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitOneParams {
    pub omega_10: f64,
    pub omega_21: f64,
    /// Cavity coupling on the (1,2) transition.
    pub g: f64,
    pub gamma_1r: f64,
    pub gamma_1p: f64,
    pub gamma_2r: f64,
    pub gamma_2p: f64,
}

/// Four-level qubit whose (1,3) transition couples off-resonantly to the
/// cavity and whose (2,3) transition is pulse-driven.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectatorParams {
    pub omega_10: f64,
    pub omega_21: f64,
    pub omega_32: f64,
    /// Cavity coupling on the (1,3) transition.
    pub g: f64,
    pub gamma_1r: f64,
    pub gamma_1p: f64,
}

impl SpectatorParams {
    pub fn omega_31(&self) -> f64 {
        self.omega_32 + self.omega_21
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_c: f64,
    pub quality_factor: f64,
    /// Photon truncation; the protocol needs at most one photon, the extra
    /// level exposes leakage.
    pub n_max: usize,
}

/// Device ensemble: qubit 1, the four-level qubits 2..n (stored 0-based as
/// "spectators", spectator s living on basis site s + 1), and the cavity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceModel {
    pub qubit_one: QubitOneParams,
    pub spectators: Vec<SpectatorParams>,
    pub cavity: CavityParams,
}

impl DeviceModel {
    pub fn n_qubits(&self) -> usize {
        1 + self.spectators.len()
    }

    /// Detuning of spectator s's (1,3) transition from the cavity.
    pub fn delta_c(&self, s: usize) -> f64 {
        self.spectators[s].omega_31() - self.cavity.omega_c
    }

    /// Cavity decay rate 2π ν_c / Q = ω_c / Q.
    pub fn kappa(&self) -> f64 {
        self.cavity.omega_c / self.cavity.quality_factor
    }

    pub fn basis(&self) -> Result<CompositeBasis> {
        CompositeBasis::new(self.n_qubits(), self.cavity.n_max)
    }

    pub fn validate(&self) -> Result<()> {
        let q = &self.qubit_one;
        let positives = [
            ("qubit 1 omega_10", q.omega_10),
            ("qubit 1 omega_21", q.omega_21),
            ("qubit 1 g", q.g),
            ("cavity omega_c", self.cavity.omega_c),
            ("cavity quality factor", self.cavity.quality_factor),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.spectators.is_empty() {
            return Err(Error::Config("need at least one four-level qubit".into()));
        }
        for (s, sp) in self.spectators.iter().enumerate() {
            for (name, v) in [
                ("omega_10", sp.omega_10),
                ("omega_21", sp.omega_21),
                ("omega_32", sp.omega_32),
                ("g", sp.g),
            ] {
                if !(v > 0.0) {
                    return Err(Error::Config(format!(
                        "qubit {} {name} must be positive, got {v}",
                        s + 2
                    )));
                }
            }
            if !(self.delta_c(s) > 0.0) {
                return Err(Error::Config(format!(
                    "qubit {} sits below the cavity: delta_c = {}",
                    s + 2,
                    self.delta_c(s)
                )));
            }
        }
        Ok(())
    }
}

/// A classical square drive on one transition of one site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PulseSpec {
    pub site: usize,
    pub transition: (usize, usize),
    pub rabi: f64,
    pub carrier: f64,
    pub phase: f64,
    pub window: (f64, f64),
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rabi < 0.0 {
            return Err(Error::Config(format!("negative Rabi rate {}", self.rabi)));
        }
        if self.window.1 <= self.window.0 {
            return Err(Error::Config("empty pulse window".into()));
        }
        let ok = match self.site {
            0 => matches!(self.transition, (1, 2) | (0, 1)),
            _ => self.transition == (2, 3),
        };
        if !ok {
            return Err(Error::InvalidTransition(
                self.transition.0,
                self.transition.1,
                self.site,
            ));
        }
        Ok(())
    }
}

/// Effective Raman flip-flop strength chi = (Omega g / 2)(1/Delta + 1/Delta_c).
pub fn raman_chi(g: f64, rabi: f64, delta: f64, delta_c: f64) -> f64 {
    0.5 * rabi * g * (1.0 / delta + 1.0 / delta_c)
}

/// Photon-conditioned phase rate lambda = g^2/Delta_c + chi^2/delta.
pub fn effective_lambda(g: f64, delta_c: f64, chi: f64, delta: f64) -> f64 {
    g * g / delta_c + chi * chi / delta
}

/// Coefficient of one Hamiltonian term; `Oscillating` means
/// amplitude * exp(-i * frequency * t).
#[derive(Clone)]
pub enum Coefficient {
    Constant(C64),
    Oscillating { amplitude: C64, frequency: f64 },
    Custom(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> C64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Oscillating { amplitude, frequency } => {
                *amplitude * C64::new(0.0, -frequency * t).exp()
            }
            Coefficient::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Oscillating { amplitude, frequency } => {
                write!(f, "Oscillating({amplitude} * exp(-i {frequency} t))")
            }
            Coefficient::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
struct HamiltonianTerm {
    op: SparseOperator,
    op_adjoint: SparseOperator,
    coeff: Coefficient,
    /// Pair the term with its Hermitian conjugate.
    with_adjoint: bool,
}

/// Sum of operator terms with pure time-dependent coefficients. When built by
/// [`h_raman_full`] or [`h_eff_raman`] it carries the diagonal frame that
/// makes it static.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    dim: usize,
    terms: Vec<HamiltonianTerm>,
    frame_diag: Option<Vec<f64>>,
}

impl TimeDependentHamiltonian {
    pub fn new(dim: usize) -> Self {
        Self { dim, terms: Vec::new(), frame_diag: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, op: SparseOperator, coeff: Coefficient, with_adjoint: bool) {
        let op_adjoint = op.adjoint();
        self.terms.push(HamiltonianTerm { op, op_adjoint, coeff, with_adjoint });
    }

    /// Add a static Hermitian operator.
    pub fn push_static(&mut self, op: SparseOperator) {
        self.push(op, Coefficient::Constant(C64::ONE), false);
    }

    pub fn set_frame_diag(&mut self, diag: Vec<f64>) {
        self.frame_diag = Some(diag);
    }

    pub fn frame_diag(&self) -> Option<&[f64]> {
        self.frame_diag.as_deref()
    }

    /// Largest |frequency| over all coefficients; `None` when a custom
    /// coefficient hides its spectrum.
    pub fn max_frequency(&self) -> Option<f64> {
        let mut max = 0.0f64;
        for term in &self.terms {
            match &term.coeff {
                Coefficient::Constant(_) => {}
                Coefficient::Oscillating { frequency, .. } => max = max.max(frequency.abs()),
                Coefficient::Custom(_) => return None,
            }
        }
        Some(max)
    }

    /// Assemble the full matrix at time `t`.
    pub fn assemble(&self, t: f64) -> SparseOperator {
        let mut acc = SparseOperator::from_triplets(self.dim, Vec::new());
        for term in &self.terms {
            let c = term.coeff.eval(t);
            acc = acc.add(&term.op.scaled(c)).expect("term dims agree");
            if term.with_adjoint {
                acc = acc.add(&term.op_adjoint.scaled(c.conj())).expect("term dims agree");
            }
        }
        acc
    }

    /// y = H(t) x without assembling the sum.
    pub fn apply(&self, t: f64, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::ZERO; self.dim];
        for term in &self.terms {
            let c = term.coeff.eval(t);
            let ax = term.op.apply_slice(x);
            for (yi, v) in y.iter_mut().zip(&ax) {
                *yi += c * v;
            }
            if term.with_adjoint {
                let cc = c.conj();
                let adx = term.op_adjoint.apply_slice(x);
                for (yi, v) in y.iter_mut().zip(&adx) {
                    *yi += cc * v;
                }
            }
        }
        y
    }
}

/// Diagonal frame generator D; the frame transform is exp(+i D t).
#[derive(Debug, Clone)]
pub struct FrameShift {
    diag: Vec<f64>,
}

impl FrameShift {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Multiply amplitudes by exp(i * sign * D * t).
    pub fn apply(&self, amps: &mut [C64], t: f64, sign: f64) {
        for (a, &d) in amps.iter_mut().zip(&self.diag) {
            if d != 0.0 {
                *a *= C64::new(0.0, sign * d * t).exp();
            }
        }
    }
}

/// Qubit-1 pulse Hamiltonian Omega (e^{i phi} |lo><hi| + h.c.), Eq.-style
/// static in the interaction picture.
pub fn h_pulse_resonant(
    rabi: f64,
    phase: f64,
    transition: (usize, usize),
    site: usize,
    basis: &CompositeBasis,
) -> Result<SparseOperator> {
    let spec = PulseSpec {
        site,
        transition,
        rabi,
        carrier: 1.0,
        phase,
        window: (0.0, 1.0),
    };
    spec.validate()?;
    let (lo, hi) = transition;
    let d = basis.local_dim(site);
    let lower = embed(&LocalOp::transition(d, lo, hi), site, basis)?;
    let amp = C64::from_polar(rabi, phase);
    let h = lower
        .scaled(amp)
        .add(&lower.adjoint().scaled(amp.conj()))?;
    Ok(h.mark_hermitian())
}

/// Resonant Jaynes-Cummings coupling g (a† |1><2|_1 + h.c.) on qubit 1.
pub fn h_jc_resonant(g: f64, basis: &CompositeBasis) -> Result<SparseOperator> {
    let cav = basis.cavity_site();
    let sigma = embed(&LocalOp::transition(3, 1, 2), 0, basis)?;
    let adag = embed(&LocalOp::creation(basis.cavity_dim()), cav, basis)?;
    let term = sigma.then(&adag)?.scaled(C64::new(g, 0.0));
    let h = term.add(&term.adjoint())?;
    Ok(h.mark_hermitian())
}

fn spectator_pulse<'a>(pulses: &'a [PulseSpec], site: usize) -> Result<&'a PulseSpec> {
    pulses
        .iter()
        .find(|p| p.site == site && p.transition == (2, 3))
        .ok_or_else(|| Error::Config(format!("missing (2,3) pulse for site {site}")))
}

/// Full off-resonant Raman Hamiltonian: for every spectator the cavity term
/// g_j (e^{-i Delta_c,j t} a† sigma13 + h.c.) plus, when the pulse Rabi rate
/// is nonzero, Omega_j (e^{-i Delta_j t} sigma23 + h.c.). Optionally includes
/// qubit 1's resonant JC coupling so whole-protocol segments can be
/// integrated with every coupling on.
pub fn h_raman_full(
    model: &DeviceModel,
    pulses: &[PulseSpec],
    basis: &CompositeBasis,
    include_jc: bool,
) -> Result<TimeDependentHamiltonian> {
    model.validate()?;
    if basis.n_qubits() != model.n_qubits() {
        return Err(Error::Config("basis does not match device model".into()));
    }
    let cav = basis.cavity_site();
    let adag = embed(&LocalOp::creation(basis.cavity_dim()), cav, basis)?;

    let mut h = TimeDependentHamiltonian::new(basis.dim());
    let mut deltas = Vec::with_capacity(model.spectators.len());
    for (s, sp) in model.spectators.iter().enumerate() {
        let site = s + 1;
        let pulse = spectator_pulse(pulses, site)?;
        pulse.validate()?;
        let big_delta = sp.omega_32 - pulse.carrier;
        if !(big_delta > 0.0) {
            return Err(Error::Config(format!(
                "nonpositive pulse detuning {big_delta} on site {site}"
            )));
        }
        let delta_c = model.delta_c(s);
        deltas.push((delta_c, delta_c - big_delta));

        let sigma13 = embed(&LocalOp::transition(4, 1, 3), site, basis)?;
        let cavity_term = sigma13.then(&adag)?;
        h.push(
            cavity_term,
            Coefficient::Oscillating { amplitude: C64::new(sp.g, 0.0), frequency: delta_c },
            true,
        );
        if pulse.rabi > 0.0 {
            let sigma23 = embed(&LocalOp::transition(4, 2, 3), site, basis)?;
            h.push(
                sigma23,
                Coefficient::Oscillating {
                    amplitude: C64::from_polar(pulse.rabi, pulse.phase),
                    frequency: big_delta,
                },
                true,
            );
        }
    }
    if include_jc {
        h.push_static(h_jc_resonant(model.qubit_one.g, basis)?);
    }

    // Frame diagonal: -Delta_c,j on |3>_j, -delta_j on |2>_j, additive over
    // sites; cavity and the remaining levels are unshifted.
    let mut diag = vec![0.0f64; basis.dim()];
    for (i, d) in diag.iter_mut().enumerate() {
        for (s, &(delta_c, small_delta)) in deltas.iter().enumerate() {
            match basis.level_at(i, s + 1) {
                3 => *d -= delta_c,
                2 => *d -= small_delta,
                _ => {}
            }
        }
    }
    h.set_frame_diag(diag);
    Ok(h)
}

/// Exact static reformulation: returns (H_s, D) with
/// exp(i D t) U(t) psi = exp(-i H_s t) psi for evolutions starting at t = 0.
pub fn rotating_frame_static(
    h: &TimeDependentHamiltonian,
) -> Result<(SparseOperator, FrameShift)> {
    let dim = h.dim();
    let diag = h
        .frame_diag
        .clone()
        .unwrap_or_else(|| vec![0.0; dim]);
    let scale = h
        .max_frequency()
        .ok_or(Error::NonMonochromatic)?
        .max(diag.iter().fold(0.0f64, |m, d| m.max(d.abs())))
        .max(1.0);
    let tol = 1e-9 * scale;

    let mut h_s = SparseOperator::from_triplets(dim, Vec::new());
    for term in &h.terms {
        let (amp, freq) = match &term.coeff {
            Coefficient::Constant(c) => (*c, 0.0),
            Coefficient::Oscillating { amplitude, frequency } => (*amplitude, *frequency),
            Coefficient::Custom(_) => return Err(Error::NonMonochromatic),
        };
        for (r, c, _) in term.op.triplets() {
            if (diag[r] - diag[c] - freq).abs() > tol {
                return Err(Error::NonMonochromatic);
            }
        }
        h_s = h_s.add(&term.op.scaled(amp))?;
        if term.with_adjoint {
            h_s = h_s.add(&term.op_adjoint.scaled(amp.conj()))?;
        }
    }
    let minus_d = SparseOperator::diagonal(diag.iter().map(|&d| C64::new(-d, 0.0)).collect());
    let h_s = h_s.add(&minus_d)?.mark_hermitian();
    Ok((h_s, FrameShift::new(diag)))
}

fn common_delta(model: &DeviceModel, pulses: &[PulseSpec]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut big_deltas = Vec::new();
    let mut small_deltas = Vec::new();
    for (s, sp) in model.spectators.iter().enumerate() {
        let pulse = spectator_pulse(pulses, s + 1)?;
        let big = sp.omega_32 - pulse.carrier;
        if !(big > 0.0) {
            return Err(Error::Config(format!(
                "nonpositive pulse detuning {big} on site {}",
                s + 1
            )));
        }
        big_deltas.push(big);
        small_deltas.push(model.delta_c(s) - big);
    }
    let delta = small_deltas[0];
    let tol = 1e-9 * model.qubit_one.g;
    for (s, &d) in small_deltas.iter().enumerate() {
        if (d - delta).abs() > tol {
            return Err(Error::Config(format!(
                "detunings delta_j are not equalized: site {} differs by {:e}",
                s + 1,
                (d - delta).abs()
            )));
        }
    }
    Ok((big_deltas, small_deltas, delta))
}

/// Adiabatic-elimination effective Hamiltonian: Stark shifts plus the
/// photon-qubit flip-flop -chi_j (e^{-i delta_j t} a† sigma12 + h.c.).
/// Level |3> is inert by construction.
pub fn h_eff_raman(
    model: &DeviceModel,
    pulses: &[PulseSpec],
    basis: &CompositeBasis,
) -> Result<TimeDependentHamiltonian> {
    model.validate()?;
    let cav = basis.cavity_site();
    let adag = embed(&LocalOp::creation(basis.cavity_dim()), cav, basis)?;
    let mut h = TimeDependentHamiltonian::new(basis.dim());
    let mut stark = vec![0.0f64; basis.dim()];
    let mut frame = vec![0.0f64; basis.dim()];
    for (s, sp) in model.spectators.iter().enumerate() {
        let site = s + 1;
        let pulse = spectator_pulse(pulses, site)?;
        let big_delta = sp.omega_32 - pulse.carrier;
        if !(big_delta > 0.0) {
            return Err(Error::Config(format!(
                "nonpositive pulse detuning {big_delta} on site {site}"
            )));
        }
        let delta_c = model.delta_c(s);
        let small_delta = delta_c - big_delta;
        let chi = raman_chi(sp.g, pulse.rabi, big_delta, delta_c);
        for i in 0..basis.dim() {
            let photons = basis.level_at(i, cav) as f64;
            match basis.level_at(i, site) {
                1 => stark[i] -= sp.g * sp.g / delta_c * photons,
                2 => {
                    stark[i] -= pulse.rabi * pulse.rabi / big_delta;
                    frame[i] -= small_delta;
                }
                _ => {}
            }
        }
        if chi != 0.0 {
            let sigma12 = embed(&LocalOp::transition(4, 1, 2), site, basis)?;
            h.push(
                sigma12.then(&adag)?,
                Coefficient::Oscillating {
                    amplitude: C64::new(-chi, 0.0),
                    frequency: small_delta,
                },
                true,
            );
        }
    }
    h.push_static(
        SparseOperator::diagonal(stark.into_iter().map(|v| C64::new(v, 0.0)).collect())
            .mark_hermitian(),
    );
    h.set_frame_diag(frame);
    Ok(h)
}

/// Fully reduced diagonal Hamiltonian -sum_j lambda_j a†a |1>_j<1|, valid when
/// the common detuning is equalized and level |2> stays empty.
pub fn h_eff_reduced(
    model: &DeviceModel,
    pulses: &[PulseSpec],
    basis: &CompositeBasis,
) -> Result<SparseOperator> {
    model.validate()?;
    let (big_deltas, _, delta) = common_delta(model, pulses)?;
    let cav = basis.cavity_site();
    let mut diag = vec![0.0f64; basis.dim()];
    for (s, sp) in model.spectators.iter().enumerate() {
        let pulse = spectator_pulse(pulses, s + 1)?;
        let delta_c = model.delta_c(s);
        let chi = raman_chi(sp.g, pulse.rabi, big_deltas[s], delta_c);
        let lambda = effective_lambda(sp.g, delta_c, chi, delta);
        for (i, d) in diag.iter_mut().enumerate() {
            if basis.level_at(i, s + 1) == 1 {
                *d -= lambda * basis.level_at(i, cav) as f64;
            }
        }
    }
    Ok(SparseOperator::diagonal(diag.into_iter().map(|v| C64::new(v, 0.0)).collect())
        .mark_hermitian())
}

/// Dispersive form: Stark shifts plus the cavity-mediated cross-qubit
/// flip-flop (chi_j chi_j' / delta)(sigma12_j^+ sigma12_j'^- + h.c.).
pub fn h_eff_dispersive(
    model: &DeviceModel,
    pulses: &[PulseSpec],
    basis: &CompositeBasis,
) -> Result<SparseOperator> {
    model.validate()?;
    let (big_deltas, _, delta) = common_delta(model, pulses)?;
    let cav = basis.cavity_site();
    let n_spec = model.spectators.len();
    let mut chis = Vec::with_capacity(n_spec);
    let mut diag = vec![0.0f64; basis.dim()];
    for (s, sp) in model.spectators.iter().enumerate() {
        let pulse = spectator_pulse(pulses, s + 1)?;
        let delta_c = model.delta_c(s);
        let chi = raman_chi(sp.g, pulse.rabi, big_deltas[s], delta_c);
        chis.push(chi);
        for (i, d) in diag.iter_mut().enumerate() {
            let photons = basis.level_at(i, cav) as f64;
            match basis.level_at(i, s + 1) {
                1 => {
                    *d -= sp.g * sp.g / delta_c * photons;
                    *d -= chi * chi / delta * photons;
                }
                2 => {
                    *d -= pulse.rabi * pulse.rabi / big_deltas[s];
                    *d += chi * chi / delta * (photons + 1.0);
                }
                _ => {}
            }
        }
    }
    let mut h = SparseOperator::diagonal(diag.into_iter().map(|v| C64::new(v, 0.0)).collect());
    for j in 0..n_spec {
        for jp in 0..n_spec {
            if j == jp {
                continue;
            }
            let raise = embed(&LocalOp::transition(4, 2, 1), j + 1, basis)?;
            let lower = embed(&LocalOp::transition(4, 1, 2), jp + 1, basis)?;
            let coupling = lower
                .then(&raise)?
                .scaled(C64::new(chis[j] * chis[jp] / delta, 0.0));
            h = h.add(&coupling)?;
        }
    }
    Ok(h.mark_hermitian())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{population, StateVector};
    use approx::assert_abs_diff_eq;

    pub(crate) fn test_model(n: usize, ratio_c: f64, g_js: &[f64]) -> DeviceModel {
        assert_eq!(g_js.len(), n - 1);
        let omega_c = 100.0;
        DeviceModel {
            qubit_one: QubitOneParams {
                omega_10: 80.0,
                omega_21: 100.0,
                g: 1.0,
                gamma_1r: 0.0,
                gamma_1p: 0.0,
                gamma_2r: 0.0,
                gamma_2p: 0.0,
            },
            spectators: g_js
                .iter()
                .map(|&gj| SpectatorParams {
                    omega_10: 70.0,
                    omega_21: 30.0,
                    omega_32: omega_c + ratio_c * gj - 30.0,
                    g: gj,
                    gamma_1r: 0.0,
                    gamma_1p: 0.0,
                })
                .collect(),
            cavity: CavityParams { omega_c, quality_factor: 1e6, n_max: 2 },
        }
    }

    pub(crate) fn pulses_for(
        model: &DeviceModel,
        rabi: &[f64],
        delta: f64,
        window: (f64, f64),
    ) -> Vec<PulseSpec> {
        model
            .spectators
            .iter()
            .enumerate()
            .map(|(s, sp)| {
                let big_delta = model.delta_c(s) - delta;
                PulseSpec {
                    site: s + 1,
                    transition: (2, 3),
                    rabi: rabi[s],
                    carrier: sp.omega_32 - big_delta,
                    phase: 0.0,
                    window,
                }
            })
            .collect()
    }

    #[test]
    fn chi_matches_hand_arithmetic() {
        // Omega = 0.9, g = 1, Delta = 9, Delta_c = 10
        assert_abs_diff_eq!(raman_chi(1.0, 0.9, 9.0, 10.0), 0.095, epsilon = 1e-15);
    }

    #[test]
    fn lambda_at_zero_rabi_is_stark_floor() {
        assert_abs_diff_eq!(effective_lambda(0.2, 2.0, 0.0, 0.2), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn pulse_hamiltonian_is_hermitian_and_pins_transition() {
        let basis = CompositeBasis::new(2, 1).unwrap();
        let h = h_pulse_resonant(2.0, -0.7, (1, 2), 0, &basis).unwrap();
        assert!(h.hermiticity_defect() < 1e-12);
        assert!(h_pulse_resonant(1.0, 0.0, (0, 2), 0, &basis).is_err());
        assert!(h_pulse_resonant(1.0, 0.0, (0, 1), 1, &basis).is_err());
    }

    #[test]
    fn jc_vacuum_ground_is_dark() {
        let basis = CompositeBasis::new(2, 1).unwrap();
        let h = h_jc_resonant(1.0, &basis).unwrap();
        let psi = StateVector::basis_state(&basis, &[0, 0, 0]);
        let out = h.apply(&psi).unwrap();
        assert_abs_diff_eq!(out.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn raman_full_at_time_zero_has_unit_phases() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18], 0.2, (0.0, 1.0));
        let h = h_raman_full(&model, &pulses, &basis, false).unwrap();
        let at0 = h.assemble(0.0);
        assert!(at0.hermiticity_defect() < 1e-12);
        // matches the bare sum g(a† s13 + h.c.) + Omega(s23 + h.c.)
        let cav = basis.cavity_site();
        let adag = embed(&LocalOp::creation(basis.cavity_dim()), cav, &basis).unwrap();
        let s13 = embed(&LocalOp::transition(4, 1, 3), 1, &basis).unwrap();
        let s23 = embed(&LocalOp::transition(4, 2, 3), 1, &basis).unwrap();
        let t1 = s13.then(&adag).unwrap().scaled(C64::new(0.2, 0.0));
        let t2 = s23.scaled(C64::new(0.18, 0.0));
        let direct = t1
            .add(&t1.adjoint())
            .unwrap()
            .add(&t2.add(&t2.adjoint()).unwrap())
            .unwrap();
        let diff = at0.add(&direct.scaled(C64::new(-1.0, 0.0))).unwrap();
        let max = diff.triplets().map(|(_, _, v)| v.norm()).fold(0.0, f64::max);
        assert!(max < 1e-14);
    }

    #[test]
    fn raman_full_is_hermitian_at_sampled_times() {
        let model = test_model(3, 10.0, &[0.2, 0.21]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18, 0.17], 0.2, (0.0, 1.0));
        let h = h_raman_full(&model, &pulses, &basis, true).unwrap();
        for k in 0..100 {
            let t = 0.173 * k as f64;
            assert!(h.assemble(t).hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn raman_full_requires_every_pulse() {
        let model = test_model(3, 10.0, &[0.2, 0.21]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18, 0.17], 0.2, (0.0, 1.0));
        assert!(h_raman_full(&model, &pulses[..1], &basis, false).is_err());
    }

    #[test]
    fn frame_diag_vanishes_without_upper_levels() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18], 0.2, (0.0, 1.0));
        let h = h_raman_full(&model, &pulses, &basis, false).unwrap();
        let (_, frame) = rotating_frame_static(&h).unwrap();
        for i in 0..basis.dim() {
            let spect = basis.level_at(i, 1);
            if spect < 2 {
                assert_eq!(frame.diag()[i], 0.0);
            }
        }
    }

    #[test]
    fn custom_coefficient_is_rejected_by_frame_reduction() {
        let basis = CompositeBasis::new(2, 1).unwrap();
        let mut h = TimeDependentHamiltonian::new(basis.dim());
        let op = h_jc_resonant(1.0, &basis).unwrap();
        h.push(op, Coefficient::Custom(Arc::new(|t: f64| C64::new(t.cos(), 0.0))), false);
        assert!(matches!(
            rotating_frame_static(&h),
            Err(Error::NonMonochromatic)
        ));
    }

    #[test]
    fn zero_detuning_frame_is_trivial() {
        let basis = CompositeBasis::new(2, 1).unwrap();
        let mut h = TimeDependentHamiltonian::new(basis.dim());
        h.push_static(h_jc_resonant(0.7, &basis).unwrap());
        let (h_s, frame) = rotating_frame_static(&h).unwrap();
        assert!(frame.diag().iter().all(|&d| d == 0.0));
        let diff = h_s
            .add(&h.assemble(0.0).scaled(C64::new(-1.0, 0.0)))
            .unwrap();
        let max = diff.triplets().map(|(_, _, v)| v.norm()).fold(0.0, f64::max);
        assert!(max < 1e-14);
    }

    #[test]
    fn eff_raman_with_zero_rabi_keeps_only_cavity_stark() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.0], 0.2, (0.0, 1.0));
        let h = h_eff_raman(&model, &pulses, &basis).unwrap();
        let m = h.assemble(12.3);
        // only diagonal entries -g^2/Delta_c * n on |1>_j survive
        for (r, c, v) in m.triplets() {
            assert_eq!(r, c);
            let expect = if basis.level_at(r, 1) == 1 {
                -0.2 * 0.2 / 2.0 * basis.level_at(r, basis.cavity_site()) as f64
            } else {
                0.0
            };
            assert_abs_diff_eq!(v.re, expect, epsilon = 1e-14);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eff_raman_leaves_level_three_inert() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18], 0.2, (0.0, 1.0));
        let h = h_eff_raman(&model, &pulses, &basis).unwrap();
        let m = h.assemble(3.21);
        for (r, c, v) in m.triplets() {
            if basis.level_at(r, 1) == 3 || basis.level_at(c, 1) == 3 {
                assert!(r == c || v.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn eff_reduced_phases_match_eq_twelve_pattern() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18], 0.2, (0.0, 1.0));
        let h = h_eff_reduced(&model, &pulses, &basis).unwrap();
        let chi = raman_chi(0.2, 0.18, 1.8, 2.0);
        let lambda = effective_lambda(0.2, 2.0, chi, 0.2);
        assert_abs_diff_eq!(lambda, 0.021805, epsilon = 1e-12);
        // eigenvalue on |1>_j |1>_c is -lambda; the three protected states sit at 0
        let idx11 = basis.flatten(&[0, 1, 1]);
        let m = h.to_dense(256).unwrap();
        assert_abs_diff_eq!(m[idx11 * basis.dim() + idx11].re, -lambda, epsilon = 1e-14);
        for levels in [[0usize, 0, 0], [0, 1, 0], [0, 0, 1]] {
            let i = basis.flatten(&levels);
            assert_abs_diff_eq!(m[i * basis.dim() + i].norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn eff_reduced_rejects_unequal_detunings() {
        let model = test_model(3, 10.0, &[0.2, 0.21]);
        let basis = model.basis().unwrap();
        let mut pulses = pulses_for(&model, &[0.18, 0.18], 0.2, (0.0, 1.0));
        pulses[1].carrier += 0.01;
        assert!(h_eff_reduced(&model, &pulses, &basis).is_err());
    }

    #[test]
    fn dispersive_flip_flop_couples_two_spectators() {
        let model = test_model(3, 10.0, &[0.2, 0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18, 0.18], 0.2, (0.0, 1.0));
        let h = h_eff_dispersive(&model, &pulses, &basis).unwrap();
        assert!(h.hermiticity_defect() < 1e-12);
        let chi = raman_chi(0.2, 0.18, 1.8, 2.0);
        let from = basis.flatten(&[0, 2, 1, 0]);
        let to = basis.flatten(&[0, 1, 2, 0]);
        let m = h.to_dense(256).unwrap();
        assert_abs_diff_eq!(
            m[to * basis.dim() + from].re,
            chi * chi / 0.2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dispersive_matches_reduced_on_zero_two_sector() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let pulses = pulses_for(&model, &[0.18], 0.2, (0.0, 1.0));
        let disp = h_eff_dispersive(&model, &pulses, &basis).unwrap();
        let red = h_eff_reduced(&model, &pulses, &basis).unwrap();
        let md = disp.to_dense(256).unwrap();
        let mr = red.to_dense(256).unwrap();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                // skip anything touching |2>_j or the pulse Stark shift it carries
                if basis.level_at(i, 1) == 2 || basis.level_at(j, 1) == 2 {
                    continue;
                }
                assert_abs_diff_eq!(
                    (md[i * basis.dim() + j] - mr[i * basis.dim() + j]).norm(),
                    0.0,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn model_rejects_inverted_cavity_detuning() {
        let mut model = test_model(2, 10.0, &[0.2]);
        model.spectators[0].omega_32 = 10.0; // omega_31 far below the cavity
        assert!(model.validate().is_err());
    }

    #[test]
    fn population_helper_sees_initial_state() {
        let model = test_model(2, 10.0, &[0.2]);
        let basis = model.basis().unwrap();
        let psi = crate::hilbert::initial_product_state(&basis);
        assert_abs_diff_eq!(population(&psi, 0, 0).unwrap(), 0.5, epsilon = 1e-14);
    }
}
