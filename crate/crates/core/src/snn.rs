//! Fixed-timestep leaky integrate-and-fire engine.
//!
//! Potentials are normalized (rest 0, threshold 1 by default) and time is in
//! milliseconds. The membrane obeys
//! `dv/dt = (-(v - v_rest) + r_gain * I) / tau_m` and is advanced with the exact
//! exponential solution for a current held constant over the step, so any `dt`
//! is stable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Accumulator slack used by the regular encoder so that rates whose per-step
/// increment is not exactly representable (0.1, 0.3, ...) still fire on the
/// expected step.
const ENCODER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifParams {
    /// Membrane time constant (ms).
    pub tau_m: f64,
    pub v_rest: f64,
    pub v_threshold: f64,
    pub v_reset: f64,
    /// Absolute refractory period (ms).
    pub refractory: f64,
    /// Input-current-to-potential gain.
    pub r_gain: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_m: 20.0,
            v_rest: 0.0,
            v_threshold: 1.0,
            v_reset: 0.0,
            refractory: 2.0,
            r_gain: 1.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau_m > 0.0
            && self.refractory >= 0.0
            && self.v_reset < self.v_threshold
            && self.v_rest < self.v_threshold
            && [self.tau_m, self.v_rest, self.v_threshold, self.v_reset, self.refractory, self.r_gain]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "LIF parameters need tau_m > 0, refractory >= 0, v_reset < v_threshold, \
                 v_rest < v_threshold (got {self:?})"
            )))
        }
    }
}

/// Spikes emitted by one population in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeVector {
    pub fired: Vec<bool>,
    /// Time stamp of the step end (ms).
    pub t: f64,
}

impl SpikeVector {
    pub fn silent(size: usize, t: f64) -> Self {
        Self {
            fired: vec![false; size],
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.fired.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fired.is_empty()
    }

    pub fn count(&self) -> usize {
        self.fired.iter().filter(|&&f| f).count()
    }

    /// Indices of the neurons that fired.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.fired
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }
}

/// State of one layer of LIF neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronPopulation {
    params: LifParams,
    v: Vec<f64>,
    refr_remaining: Vec<f64>,
    last_spike_time: Vec<Option<f64>>,
    t: f64,
}

impl NeuronPopulation {
    /// All neurons at rest.
    pub fn new(size: usize, params: LifParams) -> Result<Self> {
        Self::with_potentials(vec![params.v_rest; size], params)
    }

    /// Starts each neuron at the given potential (each must lie below threshold).
    pub fn with_potentials(v: Vec<f64>, params: LifParams) -> Result<Self> {
        params.validate()?;
        if let Some(bad) = v.iter().find(|&&x| !(x < params.v_threshold) || !x.is_finite()) {
            return Err(Error::contract(format!(
                "initial potential {bad} is not below threshold {}",
                params.v_threshold
            )));
        }
        let n = v.len();
        Ok(Self {
            params,
            v,
            refr_remaining: vec![0.0; n],
            last_spike_time: vec![None; n],
            t: 0.0,
        })
    }

    pub fn size(&self) -> usize {
        self.v.len()
    }

    pub fn params(&self) -> &LifParams {
        &self.params
    }

    pub fn potentials(&self) -> &[f64] {
        &self.v
    }

    pub fn refractory_remaining(&self) -> &[f64] {
        &self.refr_remaining
    }

    pub fn last_spike_times(&self) -> &[Option<f64>] {
        &self.last_spike_time
    }

    /// Population clock (ms).
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Overwrites one neuron's potential; used by tests and initial-condition setup.
    pub fn set_potential(&mut self, i: usize, v: f64) {
        self.v[i] = v;
    }

    /// Advances every neuron by `dt` ms under a per-neuron input current.
    pub fn step(&mut self, input_current: &[f64], dt: f64) -> Result<SpikeVector> {
        check_len("lif_step input current", input_current.len(), self.size())?;
        if !(dt > 0.0) {
            return Err(Error::contract(format!("lif_step requires dt > 0, got {dt}")));
        }
        let p = self.params;
        let decay = (-dt / p.tau_m).exp();
        let gain = 1.0 - decay;
        self.t += dt;
        let t = self.t;

        let mut fired = vec![false; self.size()];
        for (i, &current) in input_current.iter().enumerate() {
            if self.refr_remaining[i] > 0.0 {
                self.v[i] = p.v_reset;
                self.refr_remaining[i] = (self.refr_remaining[i] - dt).max(0.0);
                continue;
            }
            let v = p.v_rest + (self.v[i] - p.v_rest) * decay + p.r_gain * current * gain;
            if v >= p.v_threshold {
                fired[i] = true;
                self.v[i] = p.v_reset;
                self.refr_remaining[i] = p.refractory;
                self.last_spike_time[i] = Some(t);
            } else {
                self.v[i] = v;
            }
        }
        Ok(SpikeVector { fired, t })
    }

    /// Advances the clock and records externally generated spikes (used for
    /// encoder-driven layers whose spikes come from a rate code rather than
    /// from membrane integration).
    pub fn relay(&mut self, fired: Vec<bool>, dt: f64) -> Result<SpikeVector> {
        check_len("relay spikes", fired.len(), self.size())?;
        self.t += dt;
        for (i, &f) in fired.iter().enumerate() {
            if f {
                self.last_spike_time[i] = Some(self.t);
            }
        }
        Ok(SpikeVector { fired, t: self.t })
    }
}

/// Free-function form of [`NeuronPopulation::step`].
pub fn lif_step(pop: &mut NeuronPopulation, input_current: &[f64], dt: f64) -> Result<SpikeVector> {
    pop.step(input_current, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynapseSign {
    Excitatory,
    Inhibitory,
}

impl SynapseSign {
    pub fn factor(self) -> f64 {
        match self {
            SynapseSign::Excitatory => 1.0,
            SynapseSign::Inhibitory => -1.0,
        }
    }
}

/// Dense pre × post weight array with a connectivity mask.
///
/// Weights are stored pre-major, so the outgoing fan of one presynaptic neuron
/// is a contiguous row.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseMatrix {
    n_pre: usize,
    n_post: usize,
    w: Vec<f64>,
    mask: Vec<bool>,
    sign: SynapseSign,
    w_min: f64,
    w_max: f64,
    plastic: bool,
}

impl SynapseMatrix {
    /// Matrix with no edges.
    pub fn new(n_pre: usize, n_post: usize, sign: SynapseSign, w_min: f64, w_max: f64) -> Result<Self> {
        if !(w_min <= w_max) {
            return Err(Error::config(format!("weight bounds [{w_min}, {w_max}] are empty")));
        }
        Ok(Self {
            n_pre,
            n_post,
            w: vec![0.0; n_pre * n_post],
            mask: vec![false; n_pre * n_post],
            sign,
            w_min,
            w_max,
            plastic: false,
        })
    }

    /// Connects every (pre, post) pair for which `connected` holds, at weight `w0`.
    pub fn from_fn(
        n_pre: usize,
        n_post: usize,
        sign: SynapseSign,
        (w_min, w_max): (f64, f64),
        w0: f64,
        mut connected: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut m = Self::new(n_pre, n_post, sign, w_min, w_max)?;
        for i in 0..n_pre {
            for j in 0..n_post {
                if connected(i, j) {
                    m.connect(i, j, w0)?;
                }
            }
        }
        Ok(m)
    }

    pub fn connect(&mut self, pre: usize, post: usize, w: f64) -> Result<()> {
        if pre >= self.n_pre || post >= self.n_post {
            return Err(Error::contract(format!(
                "edge ({pre}, {post}) outside {}x{} matrix",
                self.n_pre, self.n_post
            )));
        }
        if !(self.w_min..=self.w_max).contains(&w) {
            return Err(Error::config(format!(
                "weight {w} outside [{}, {}]",
                self.w_min, self.w_max
            )));
        }
        let k = pre * self.n_post + post;
        self.mask[k] = true;
        self.w[k] = w;
        Ok(())
    }

    pub fn with_plastic(mut self, plastic: bool) -> Self {
        self.plastic = plastic;
        self
    }

    pub fn n_pre(&self) -> usize {
        self.n_pre
    }

    pub fn n_post(&self) -> usize {
        self.n_post
    }

    pub fn sign(&self) -> SynapseSign {
        self.sign
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.w_min, self.w_max)
    }

    pub fn is_plastic(&self) -> bool {
        self.plastic
    }

    pub fn weight(&self, pre: usize, post: usize) -> f64 {
        self.w[pre * self.n_post + post]
    }

    pub fn is_connected(&self, pre: usize, post: usize) -> bool {
        self.mask[pre * self.n_post + post]
    }

    /// Flat pre-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Outgoing weights of one presynaptic neuron.
    pub fn row(&self, pre: usize) -> &[f64] {
        &self.w[pre * self.n_post..(pre + 1) * self.n_post]
    }

    /// Adds `delta` to a connected edge and clamps to the bounds. Unconnected
    /// edges are left at zero.
    pub fn add_clamped(&mut self, pre: usize, post: usize, delta: f64) {
        let k = pre * self.n_post + post;
        if self.mask[k] {
            self.w[k] = (self.w[k] + delta).clamp(self.w_min, self.w_max);
        }
    }

    /// Adds `delta` to every connected edge leaving `pre`, clamped.
    pub fn add_row_clamped(&mut self, pre: usize, delta: f64) {
        let (lo, hi) = (self.w_min, self.w_max);
        let range = pre * self.n_post..(pre + 1) * self.n_post;
        for (w, &m) in self.w[range.clone()].iter_mut().zip(&self.mask[range]) {
            if m {
                *w = (*w + delta).clamp(lo, hi);
            }
        }
    }

    /// Delta-current propagation: `current[j] = sign * sum_i fired[i] * w[i][j]`.
    pub fn propagate(&self, spikes: &SpikeVector) -> Result<Vec<f64>> {
        let mut current = vec![0.0; self.n_post];
        self.propagate_into(spikes, &mut current)?;
        Ok(current)
    }

    /// Accumulates this matrix's contribution into an existing current buffer.
    pub fn propagate_into(&self, spikes: &SpikeVector, current: &mut [f64]) -> Result<()> {
        check_len("propagate spikes", spikes.len(), self.n_pre)?;
        check_len("propagate current", current.len(), self.n_post)?;
        let s = self.sign.factor();
        for i in spikes.indices() {
            for (c, &w) in current.iter_mut().zip(self.row(i)) {
                *c += s * w;
            }
        }
        Ok(())
    }
}

/// Free-function form of [`SynapseMatrix::propagate`].
pub fn propagate(spikes: &SpikeVector, syn: &SynapseMatrix) -> Result<Vec<f64>> {
    syn.propagate(spikes)
}

/// Deterministic rate coding: accumulate `rate * dt`, fire and subtract one on
/// overflow. At most one spike per step.
pub fn regular_spike_encode(rate: f64, accumulator: &mut f64, dt: f64) -> Result<bool> {
    if !(rate >= 0.0) {
        return Err(Error::contract(format!("encoder rate must be >= 0 Hz, got {rate}")));
    }
    if !(dt > 0.0) {
        return Err(Error::contract(format!("encoder requires dt > 0, got {dt}")));
    }
    *accumulator += rate * dt / 1000.0;
    if *accumulator >= 1.0 - ENCODER_SLACK {
        *accumulator = (*accumulator - 1.0).min(1.0);
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Exponential-window rate estimate (Hz): `r * exp(-dt/tau) + fired * 1000/tau`.
pub fn exp_rate_decode(rate: f64, fired: bool, tau_out: f64, dt: f64) -> f64 {
    let kick = if fired { 1000.0 / tau_out } else { 0.0 };
    rate * (-dt / tau_out).exp() + kick
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    #[default]
    Regular,
    /// Seeded Bernoulli approximation of a Poisson train.
    Poisson,
}

/// A bank of rate encoders, one per neuron.
#[derive(Debug, Clone)]
pub struct RateEncoder {
    accumulators: Vec<f64>,
    rng: Option<ChaCha8Rng>,
}

impl RateEncoder {
    /// Regular encoders whose accumulators start at the given phases.
    pub fn regular(phases: Vec<f64>) -> Self {
        Self {
            accumulators: phases,
            rng: None,
        }
    }

    pub fn poisson(size: usize, seed: u64) -> Self {
        Self {
            accumulators: vec![0.0; size],
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn len(&self) -> usize {
        self.accumulators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accumulators.is_empty()
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accumulators
    }

    pub fn encode(&mut self, rates: &[f64], dt: f64) -> Result<Vec<bool>> {
        check_len("encoder rates", rates.len(), self.len())?;
        match &mut self.rng {
            None => rates
                .iter()
                .zip(self.accumulators.iter_mut())
                .map(|(&r, acc)| regular_spike_encode(r, acc, dt))
                .collect(),
            Some(rng) => rates
                .iter()
                .map(|&r| {
                    if !(r >= 0.0) {
                        return Err(Error::contract(format!("encoder rate must be >= 0 Hz, got {r}")));
                    }
                    let p = (r * dt / 1000.0).min(1.0);
                    Ok(rng.gen::<f64>() < p)
                })
                .collect(),
        }
    }
}
