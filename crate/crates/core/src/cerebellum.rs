//! The cerebellar network: mossy fibers (MF), granule cells (GR), Purkinje
//! cells (PK), inferior olive (IO) and deep cerebellar nuclei (DCN).
//!
//! Wiring:
//!
//! ```text
//!   MF ──(+, fixed, block-hierarchical)──▶ GR ──(+, plastic)──▶ PK ──(−, 1:1)──▶ DCN
//!   MF ──(+, fixed, uniform)──────────────────────────────────────────────────▶ DCN
//!   IO ──(teaching, 1:1)──▶ PK   (gates depression only, injects no current)
//! ```
//!
//! PK, IO and DCN are split into an agonist half (indices `0..n/2`) and an
//! antagonist half (`n/2..n`). MF carries the desired angle (first half of the
//! fibers) and the desired velocity (second half) through Gaussian receptive
//! fields; IO carries the signed tracking error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::plasticity::{ltd_update, ltp_update, GrSpikeHistory, StdpParams};
use crate::snn::{
    exp_rate_decode, EncodingMode, LifParams, NeuronPopulation, RateEncoder, SpikeVector,
    SynapseMatrix, SynapseSign,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CerebellarConfig {
    pub n_mf: usize,
    pub n_gr: usize,
    pub n_pk: usize,
    pub n_io: usize,
    pub n_dcn: usize,
    /// Number of MF blocks; each GR draws all of its inputs from one block.
    pub mf_groups: usize,
    /// MF inputs per GR.
    pub gr_fan_in: usize,
    /// Angle receptive-field centers span `[-mf_angle_range, mf_angle_range]` (rad).
    pub mf_angle_range: f64,
    /// Velocity receptive-field centers span `[-mf_velocity_range, mf_velocity_range]` (rad/s).
    pub mf_velocity_range: f64,
    /// Receptive-field width in units of center spacing.
    pub mf_sigma: f64,
    pub mf_peak_rate: f64,
    pub io_max_rate: f64,
    /// Error magnitude (rad) at which the olive saturates.
    pub io_error_saturation: f64,
    /// Command units per Hz of agonist–antagonist DCN rate difference.
    pub dcn_gain: f64,
    /// Output rate-filter window (ms).
    pub tau_out: f64,
    #[serde(skip)]
    pub rng_seed: u64,
    pub encoding: EncodingMode,
    pub gr_lif: LifParams,
    pub pk_lif: LifParams,
    pub dcn_lif: LifParams,
    pub w_mf_gr: f64,
    pub w_gr_pk_init: f64,
    pub w_gr_pk_min: f64,
    pub w_gr_pk_max: f64,
    /// Half-width of the seeded uniform spread around `w_gr_pk_init`.
    pub w_gr_pk_jitter: f64,
    pub w_pk_dcn: f64,
    pub w_mf_dcn: f64,
    /// Relative half-width of a seeded per-DCN scale on its MF drive.
    pub w_mf_dcn_jitter: f64,
    pub stdp: StdpParams,
}

impl Default for CerebellarConfig {
    fn default() -> Self {
        Self {
            n_mf: 80,
            n_gr: 100,
            n_pk: 160,
            n_io: 160,
            n_dcn: 160,
            mf_groups: 4,
            gr_fan_in: 4,
            mf_angle_range: 0.6,
            mf_velocity_range: 1.5,
            mf_sigma: 1.0,
            mf_peak_rate: 100.0,
            io_max_rate: 10.0,
            io_error_saturation: 0.2,
            dcn_gain: 2.0,
            tau_out: 20.0,
            rng_seed: 42,
            encoding: EncodingMode::Regular,
            gr_lif: LifParams {
                tau_m: 10.0,
                r_gain: 10.0,
                ..LifParams::default()
            },
            pk_lif: LifParams::default(),
            dcn_lif: LifParams::default(),
            w_mf_gr: 1.1,
            w_gr_pk_init: 0.3,
            w_gr_pk_min: 0.0,
            w_gr_pk_max: 1.0,
            w_gr_pk_jitter: 0.1,
            w_pk_dcn: 25.0,
            w_mf_dcn: 6.0,
            w_mf_dcn_jitter: 0.2,
            stdp: StdpParams::default(),
        }
    }
}

impl CerebellarConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_mf", self.n_mf),
            ("n_gr", self.n_gr),
            ("n_pk", self.n_pk),
            ("n_io", self.n_io),
            ("n_dcn", self.n_dcn),
            ("mf_groups", self.mf_groups),
            ("gr_fan_in", self.gr_fan_in),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(Error::config(format!("{name} must be positive")));
        }
        if self.n_pk != self.n_io || self.n_pk != self.n_dcn {
            return Err(Error::config(format!(
                "n_pk, n_io and n_dcn must be equal (got {}, {}, {})",
                self.n_pk, self.n_io, self.n_dcn
            )));
        }
        if !self.n_pk.is_multiple_of(2) {
            return Err(Error::config(format!("n_pk must be even, got {}", self.n_pk)));
        }
        if !self.n_mf.is_multiple_of(2) || !self.mf_groups.is_multiple_of(2) {
            return Err(Error::config(
                "n_mf and mf_groups must be even (angle and velocity channels get equal halves)",
            ));
        }
        if !self.n_mf.is_multiple_of(self.mf_groups) || !self.n_gr.is_multiple_of(self.mf_groups) {
            return Err(Error::config(format!(
                "n_mf ({}) and n_gr ({}) must both divide into {} groups",
                self.n_mf, self.n_gr, self.mf_groups
            )));
        }
        if self.gr_fan_in > self.n_mf / self.mf_groups {
            return Err(Error::config(format!(
                "gr_fan_in {} exceeds MF group size {}",
                self.gr_fan_in,
                self.n_mf / self.mf_groups
            )));
        }
        if self.n_mf / 2 < 2 {
            return Err(Error::config("each MF channel needs at least two fibers"));
        }
        let positive = [
            ("mf_angle_range", self.mf_angle_range),
            ("mf_velocity_range", self.mf_velocity_range),
            ("mf_sigma", self.mf_sigma),
            ("io_error_saturation", self.io_error_saturation),
            ("tau_out", self.tau_out),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::config(format!("{name} must be > 0, got {v}")));
        }
        let non_negative = [
            ("mf_peak_rate", self.mf_peak_rate),
            ("io_max_rate", self.io_max_rate),
            ("dcn_gain", self.dcn_gain),
            ("w_mf_gr", self.w_mf_gr),
            ("w_pk_dcn", self.w_pk_dcn),
            ("w_mf_dcn", self.w_mf_dcn),
        ];
        if let Some((name, v)) = non_negative.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(Error::config(format!("{name} must be >= 0, got {v}")));
        }
        if !(self.w_gr_pk_jitter >= 0.0
            && self.w_gr_pk_min <= self.w_gr_pk_init - self.w_gr_pk_jitter
            && self.w_gr_pk_init + self.w_gr_pk_jitter <= self.w_gr_pk_max)
        {
            return Err(Error::config(format!(
                "w_gr_pk_init {} ± w_gr_pk_jitter {} must lie within [{}, {}]",
                self.w_gr_pk_init, self.w_gr_pk_jitter, self.w_gr_pk_min, self.w_gr_pk_max
            )));
        }
        if !(0.0..1.0).contains(&self.w_mf_dcn_jitter) {
            return Err(Error::config(format!(
                "w_mf_dcn_jitter must lie in [0, 1), got {}",
                self.w_mf_dcn_jitter
            )));
        }
        if !(self.w_gr_pk_min <= self.w_gr_pk_init && self.w_gr_pk_init <= self.w_gr_pk_max) {
            return Err(Error::config(format!(
                "GR→PK initial weight {} outside [{}, {}]",
                self.w_gr_pk_init, self.w_gr_pk_min, self.w_gr_pk_max
            )));
        }
        self.gr_lif.validate()?;
        self.pk_lif.validate()?;
        self.dcn_lif.validate()?;
        self.stdp.validate()
    }

    /// Size of one antagonistic half of PK/IO/DCN.
    pub fn half(&self) -> usize {
        self.n_pk / 2
    }

    /// Fibers per MF channel (angle or velocity).
    pub fn channel_size(&self) -> usize {
        self.n_mf / 2
    }

    pub fn mf_group_size(&self) -> usize {
        self.n_mf / self.mf_groups
    }

    pub fn gr_group_size(&self) -> usize {
        self.n_gr / self.mf_groups
    }
}

/// Potentials spread evenly below threshold so neurons of one layer do not
/// start in lock-step. Neuron `k` of each antagonistic half gets the same value.
fn staggered_potentials(n: usize, period: usize, p: &LifParams) -> Vec<f64> {
    (0..n)
        .map(|k| p.v_rest + (p.v_threshold - p.v_rest) * (k % period) as f64 / period as f64)
        .collect()
}

#[derive(Debug, Clone)]
pub struct CerebellarNetwork {
    cfg: CerebellarConfig,
    pub mf: NeuronPopulation,
    pub gr: NeuronPopulation,
    pub pk: NeuronPopulation,
    pub io: NeuronPopulation,
    pub dcn: NeuronPopulation,
    mf_gr: SynapseMatrix,
    gr_pk: SynapseMatrix,
    pk_dcn: SynapseMatrix,
    mf_dcn: SynapseMatrix,
    history: GrSpikeHistory,
    io_to_pk: Vec<usize>,
    plasticity: bool,
}

/// Spikes of every layer for one network step.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpikes {
    pub mf: SpikeVector,
    pub gr: SpikeVector,
    pub pk: SpikeVector,
    pub io: SpikeVector,
    pub dcn: SpikeVector,
}

impl LayerSpikes {
    /// Spike counts in (MF, GR, PK, IO, DCN) order.
    pub fn counts(&self) -> [usize; 5] {
        [
            self.mf.count(),
            self.gr.count(),
            self.pk.count(),
            self.io.count(),
            self.dcn.count(),
        ]
    }
}

/// Builds the network. Construction is a pure function of `cfg`; the seed picks
/// which MFs of a block each GR samples and the initial weight spread.
///
/// Identical weights would lock each half into synchronous volleys, so GR→PK
/// weights and per-DCN MF drive carry a seeded spread. The spread is drawn for
/// the agonist half and copied to the antagonist half to keep the network
/// mirror-symmetric.
pub fn build_network(cfg: &CerebellarConfig) -> Result<CerebellarNetwork> {
    cfg.validate()?;
    let half = cfg.half();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut mf_gr = SynapseMatrix::new(cfg.n_mf, cfg.n_gr, SynapseSign::Excitatory, 0.0, cfg.w_mf_gr)?;
    let (mf_block, gr_block) = (cfg.mf_group_size(), cfg.gr_group_size());
    for g in 0..cfg.mf_groups {
        for gr in g * gr_block..(g + 1) * gr_block {
            for k in rand::seq::index::sample(&mut rng, mf_block, cfg.gr_fan_in) {
                mf_gr.connect(g * mf_block + k, gr, cfg.w_mf_gr)?;
            }
        }
    }

    let mut spread = |width: f64| {
        if width > 0.0 {
            rng.gen_range(-width..=width)
        } else {
            0.0
        }
    };
    let mut gr_pk = SynapseMatrix::new(
        cfg.n_gr,
        cfg.n_pk,
        SynapseSign::Excitatory,
        cfg.w_gr_pk_min,
        cfg.w_gr_pk_max,
    )?
    .with_plastic(true);
    for i in 0..cfg.n_gr {
        for j in 0..half {
            let w = cfg.w_gr_pk_init + spread(cfg.w_gr_pk_jitter);
            gr_pk.connect(i, j, w)?;
            gr_pk.connect(i, j + half, w)?;
        }
    }
    let pk_dcn = SynapseMatrix::from_fn(
        cfg.n_pk,
        cfg.n_dcn,
        SynapseSign::Inhibitory,
        (0.0, cfg.w_pk_dcn),
        cfg.w_pk_dcn,
        |i, j| i == j,
    )?;
    let w_mf_dcn_max = cfg.w_mf_dcn * (1.0 + cfg.w_mf_dcn_jitter);
    let mut mf_dcn = SynapseMatrix::new(cfg.n_mf, cfg.n_dcn, SynapseSign::Excitatory, 0.0, w_mf_dcn_max)?;
    for j in 0..half {
        let w = cfg.w_mf_dcn * (1.0 + spread(cfg.w_mf_dcn_jitter));
        for i in 0..cfg.n_mf {
            mf_dcn.connect(i, j, w)?;
            mf_dcn.connect(i, j + half, w)?;
        }
    }

    Ok(CerebellarNetwork {
        mf: NeuronPopulation::new(cfg.n_mf, LifParams::default())?,
        gr: NeuronPopulation::with_potentials(
            staggered_potentials(cfg.n_gr, cfg.n_gr, &cfg.gr_lif),
            cfg.gr_lif,
        )?,
        pk: NeuronPopulation::with_potentials(
            staggered_potentials(cfg.n_pk, half, &cfg.pk_lif),
            cfg.pk_lif,
        )?,
        io: NeuronPopulation::new(cfg.n_io, LifParams::default())?,
        dcn: NeuronPopulation::with_potentials(
            staggered_potentials(cfg.n_dcn, half, &cfg.dcn_lif),
            cfg.dcn_lif,
        )?,
        mf_gr,
        gr_pk,
        pk_dcn,
        mf_dcn,
        history: GrSpikeHistory::new(cfg.stdp.window),
        io_to_pk: (0..cfg.n_io).collect(),
        plasticity: true,
        cfg: cfg.clone(),
    })
}

impl CerebellarNetwork {
    pub fn config(&self) -> &CerebellarConfig {
        &self.cfg
    }

    pub fn mf_gr(&self) -> &SynapseMatrix {
        &self.mf_gr
    }

    pub fn gr_pk(&self) -> &SynapseMatrix {
        &self.gr_pk
    }

    pub fn pk_dcn(&self) -> &SynapseMatrix {
        &self.pk_dcn
    }

    pub fn mf_dcn(&self) -> &SynapseMatrix {
        &self.mf_dcn
    }

    pub fn history(&self) -> &GrSpikeHistory {
        &self.history
    }

    /// Olive neuron `k` teaches Purkinje column `io_to_pk()[k]`.
    pub fn io_to_pk(&self) -> &[usize] {
        &self.io_to_pk
    }

    pub fn agonist(&self) -> std::ops::Range<usize> {
        0..self.cfg.half()
    }

    pub fn antagonist(&self) -> std::ops::Range<usize> {
        self.cfg.half()..self.cfg.n_pk
    }

    /// Network clock (ms).
    pub fn time(&self) -> f64 {
        self.gr.time()
    }

    /// Enables or freezes GR→PK learning.
    pub fn set_plasticity(&mut self, enabled: bool) {
        self.plasticity = enabled;
    }

    pub fn plasticity_enabled(&self) -> bool {
        self.plasticity
    }

    /// Mean GR→PK weight onto a range of Purkinje columns.
    pub fn mean_column_weight(&self, cols: std::ops::Range<usize>) -> f64 {
        let n = self.gr_pk.n_post();
        let width = cols.len();
        let total: f64 = self
            .gr_pk
            .weights()
            .chunks(n)
            .map(|row| row[cols.clone()].iter().sum::<f64>())
            .sum();
        total / (width * self.gr_pk.n_pre()) as f64
    }

    /// One synchronous sweep MF → GR → PK → DCN followed by plasticity.
    pub fn step(&mut self, mf_spikes: &SpikeVector, io_spikes: &SpikeVector, dt: f64) -> Result<LayerSpikes> {
        check_len("MF spikes", mf_spikes.len(), self.cfg.n_mf)?;
        check_len("IO spikes", io_spikes.len(), self.cfg.n_io)?;

        let mf = self.mf.relay(mf_spikes.fired.clone(), dt)?;
        let io = self.io.relay(io_spikes.fired.clone(), dt)?;

        let gr_in = self.mf_gr.propagate(&mf)?;
        let gr = self.gr.step(&gr_in, dt)?;
        let t = gr.t;
        self.history.record(&gr, t)?;

        let pk_in = self.gr_pk.propagate(&gr)?;
        let pk = self.pk.step(&pk_in, dt)?;

        let mut dcn_in = self.mf_dcn.propagate(&mf)?;
        self.pk_dcn.propagate_into(&pk, &mut dcn_in)?;
        let dcn = self.dcn.step(&dcn_in, dt)?;

        if self.plasticity {
            ltp_update(&mut self.gr_pk, &gr, &self.cfg.stdp)?;
            ltd_update(&mut self.gr_pk, &self.history, &io, t, &self.cfg.stdp, &self.io_to_pk)?;
        }

        Ok(LayerSpikes { mf, gr, pk, io, dcn })
    }
}

/// Free-function form of [`CerebellarNetwork::step`].
pub fn network_step(
    net: &mut CerebellarNetwork,
    mf_spikes: &SpikeVector,
    io_spikes: &SpikeVector,
    dt: f64,
) -> Result<LayerSpikes> {
    net.step(mf_spikes, io_spikes, dt)
}

/// Gaussian tuning curves of one MF channel over `[-range, range]`, input
/// clamped to the outermost centers.
fn channel_rates(value: f64, range: f64, n: usize, cfg: &CerebellarConfig, out: &mut Vec<f64>) {
    let spacing = 2.0 * range / (n - 1) as f64;
    let sigma = cfg.mf_sigma * spacing;
    let s = value.clamp(-range, range);
    out.extend((0..n).map(|i| {
        let c = -range + spacing * i as f64;
        cfg.mf_peak_rate * (-(s - c).powi(2) / (2.0 * sigma * sigma)).exp()
    }));
}

/// Firing rates (Hz) of the MF layer: angle channel then velocity channel.
pub fn mossy_rates(theta_des: f64, omega_des: f64, cfg: &CerebellarConfig) -> Vec<f64> {
    let n = cfg.channel_size();
    let mut rates = Vec::with_capacity(cfg.n_mf);
    channel_rates(theta_des, cfg.mf_angle_range, n, cfg, &mut rates);
    channel_rates(omega_des, cfg.mf_velocity_range, n, cfg, &mut rates);
    rates
}

/// Firing rates (Hz) of the IO layer for a signed tracking error.
pub fn olive_rates(error: f64, cfg: &CerebellarConfig) -> Vec<f64> {
    let half = cfg.half();
    let rate = cfg.io_max_rate * (error.abs() / cfg.io_error_saturation).min(1.0);
    let mut rates = vec![0.0; cfg.n_io];
    let target = if error > 0.0 {
        0..half
    } else if error < 0.0 {
        half..cfg.n_io
    } else {
        0..0
    };
    rates[target].fill(rate);
    rates
}

/// Clocked bank of rate encoders feeding one input layer.
#[derive(Debug, Clone)]
pub struct SpikeSource {
    bank: RateEncoder,
    t: f64,
}

impl SpikeSource {
    fn new(bank: RateEncoder) -> Self {
        Self { bank, t: 0.0 }
    }

    /// MF encoders with low-discrepancy initial phases.
    pub fn mossy(cfg: &CerebellarConfig) -> Self {
        match cfg.encoding {
            EncodingMode::Regular => {
                let golden = 0.5 * (5f64.sqrt() - 1.0);
                Self::new(RateEncoder::regular(
                    (0..cfg.n_mf).map(|k| (k as f64 * golden).fract()).collect(),
                ))
            }
            EncodingMode::Poisson => Self::new(RateEncoder::poisson(cfg.n_mf, cfg.rng_seed ^ 0x4d46)),
        }
    }

    /// IO encoders; neuron `k` of each half shares the phase `k / half`.
    pub fn olive(cfg: &CerebellarConfig) -> Self {
        let half = cfg.half();
        match cfg.encoding {
            EncodingMode::Regular => Self::new(RateEncoder::regular(
                (0..cfg.n_io).map(|k| (k % half) as f64 / half as f64).collect(),
            )),
            EncodingMode::Poisson => Self::new(RateEncoder::poisson(cfg.n_io, cfg.rng_seed ^ 0x494f)),
        }
    }

    pub fn encode(&mut self, rates: &[f64], dt: f64) -> Result<SpikeVector> {
        let fired = self.bank.encode(rates, dt)?;
        self.t += dt;
        Ok(SpikeVector { fired, t: self.t })
    }
}

pub fn encode_mossy(
    theta_des: f64,
    omega_des: f64,
    cfg: &CerebellarConfig,
    encoders: &mut SpikeSource,
    dt: f64,
) -> Result<SpikeVector> {
    if !theta_des.is_finite() || !omega_des.is_finite() {
        return Err(Error::contract(format!(
            "non-finite MF input ({theta_des}, {omega_des})"
        )));
    }
    encoders.encode(&mossy_rates(theta_des, omega_des, cfg), dt)
}

pub fn encode_io_error(
    error: f64,
    cfg: &CerebellarConfig,
    encoders: &mut SpikeSource,
    dt: f64,
) -> Result<SpikeVector> {
    if !error.is_finite() {
        return Err(Error::contract(format!("non-finite IO error {error}")));
    }
    encoders.encode(&olive_rates(error, cfg), dt)
}

/// Per-neuron exponential rate filters over the DCN layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DcnDecoder {
    rates: Vec<f64>,
}

impl DcnDecoder {
    pub fn new(n_dcn: usize) -> Self {
        Self {
            rates: vec![0.0; n_dcn],
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Mean filtered rate of the agonist and antagonist halves (Hz).
    pub fn half_means(&self) -> (f64, f64) {
        let half = self.rates.len() / 2;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        (mean(&self.rates[..half]), mean(&self.rates[half..]))
    }
}

/// Updates the DCN rate filters and returns the feed-forward command
/// `dcn_gain * (mean agonist rate - mean antagonist rate)`.
pub fn decode_dcn(
    dcn_spikes: &SpikeVector,
    decoder: &mut DcnDecoder,
    cfg: &CerebellarConfig,
    dt: f64,
) -> Result<f64> {
    check_len("DCN spikes", dcn_spikes.len(), decoder.rates.len())?;
    for (r, &f) in decoder.rates.iter_mut().zip(&dcn_spikes.fired) {
        *r = exp_rate_decode(*r, f, cfg.tau_out, dt);
    }
    let (ag, ant) = decoder.half_means();
    Ok(cfg.dcn_gain * (ag - ant))
}
