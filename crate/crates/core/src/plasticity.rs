//! Plasticity of the granule→Purkinje synapses.
//!
//! Potentiation is unconditional: every granule spike adds `nu_ltp` to each of
//! its outgoing weights. Depression is gated by the inferior olive: when an
//! olive neuron fires at `t_io`, every granule spike at `t_s` still in the
//! history depresses the synapse onto the paired Purkinje column by
//! `nu_ltd * K((t_s - t_io) / tau_kernel)` with `K(x) = e^x - e^{4x}`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::snn::{SpikeVector, SynapseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StdpParams {
    /// Weight increment per granule spike.
    pub nu_ltp: f64,
    /// Scale of the kernel-weighted decrement per olive spike.
    pub nu_ltd: f64,
    /// Time (ms) mapping spike-time differences onto the kernel argument.
    pub tau_kernel: f64,
    /// Granule history retained for depression (ms).
    pub window: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        Self {
            nu_ltp: 0.002,
            nu_ltd: 0.02,
            tau_kernel: 50.0,
            window: 200.0,
        }
    }
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        if self.nu_ltp >= 0.0 && self.nu_ltd >= 0.0 && self.tau_kernel > 0.0 && self.window > 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "STDP parameters need nu_ltp >= 0, nu_ltd >= 0, tau_kernel > 0, window > 0 (got {self:?})"
            )))
        }
    }
}

/// Depression kernel `K(x) = e^x - e^{4x}`, defined for `x <= 0`.
///
/// Zero at `x = 0`, non-negative on the domain, with a single peak at
/// `x = -ln(4)/3`.
pub fn kernel_k(x: f64) -> Result<f64> {
    if x > 0.0 || x.is_nan() {
        return Err(Error::contract(format!(
            "kernel evaluated at x = {x}; only past spikes (x <= 0) are allowed"
        )));
    }
    Ok(x.exp() - (4.0 * x).exp())
}

/// Recent granule spikes, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GrSpikeHistory {
    spikes: VecDeque<(usize, f64)>,
    cursor: f64,
    window: f64,
}

impl GrSpikeHistory {
    pub fn new(window: f64) -> Self {
        Self {
            spikes: VecDeque::new(),
            cursor: 0.0,
            window,
        }
    }

    pub fn cursor(&self) -> f64 {
        self.cursor
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    /// `(granule index, spike time)` pairs in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &(usize, f64)> {
        self.spikes.iter()
    }

    /// Appends the spikes fired at `t`, evicts entries older than the window and
    /// moves the cursor to `t`.
    pub fn record(&mut self, gr_spikes: &SpikeVector, t: f64) -> Result<()> {
        if t < self.cursor {
            return Err(Error::contract(format!(
                "history time moved backwards: {t} < cursor {}",
                self.cursor
            )));
        }
        self.cursor = t;
        self.spikes.extend(gr_spikes.indices().map(|i| (i, t)));
        while self
            .spikes
            .front()
            .is_some_and(|&(_, ts)| t - ts > self.window)
        {
            self.spikes.pop_front();
        }
        Ok(())
    }
}

/// Free-function form of [`GrSpikeHistory::record`].
pub fn record_gr_spikes(hist: &mut GrSpikeHistory, gr_spikes: &SpikeVector, t: f64) -> Result<()> {
    hist.record(gr_spikes, t)
}

/// Potentiates every outgoing synapse of each granule cell that fired.
pub fn ltp_update(syn: &mut SynapseMatrix, gr_spikes: &SpikeVector, params: &StdpParams) -> Result<()> {
    check_len("ltp_update granule spikes", gr_spikes.len(), syn.n_pre())?;
    if params.nu_ltp == 0.0 {
        return Ok(());
    }
    for i in gr_spikes.indices() {
        syn.add_row_clamped(i, params.nu_ltp);
    }
    Ok(())
}

/// Olive-gated depression over the granule history.
///
/// `io_to_pk[k]` names the Purkinje column taught by olive neuron `k`.
pub fn ltd_update(
    syn: &mut SynapseMatrix,
    hist: &GrSpikeHistory,
    io_spikes: &SpikeVector,
    t_now: f64,
    params: &StdpParams,
    io_to_pk: &[usize],
) -> Result<()> {
    if io_to_pk.len() < io_spikes.len() {
        return Err(Error::config(format!(
            "{} olive neurons but only {} olive→Purkinje pairings",
            io_spikes.len(),
            io_to_pk.len()
        )));
    }
    if let Some(&bad) = io_to_pk.iter().find(|&&j| j >= syn.n_post()) {
        return Err(Error::config(format!(
            "olive neuron mapped to Purkinje column {bad}, but only {} exist",
            syn.n_post()
        )));
    }
    if hist.cursor() != t_now {
        return Err(Error::contract(format!(
            "history cursor {} is not at t_now {t_now}",
            hist.cursor()
        )));
    }
    if io_spikes.count() == 0 || hist.is_empty() {
        return Ok(());
    }

    // Kernel weight of every stored granule spike, computed once per call.
    let weighted: Vec<(usize, f64)> = hist
        .iter()
        .map(|&(i, ts)| Ok((i, params.nu_ltd * kernel_k((ts - t_now) / params.tau_kernel)?)))
        .collect::<Result<_>>()?;

    for k in io_spikes.indices() {
        let j = io_to_pk[k];
        for &(i, dw) in &weighted {
            if i >= syn.n_pre() {
                return Err(Error::contract(format!(
                    "history holds granule index {i} beyond {} rows",
                    syn.n_pre()
                )));
            }
            syn.add_clamped(i, j, -dw);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::SynapseSign;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spikes(fired: &[usize], n: usize) -> SpikeVector {
        let mut s = SpikeVector::silent(n, 0.0);
        for &i in fired {
            s.fired[i] = true;
        }
        s
    }

    fn full(n_pre: usize, n_post: usize, w0: f64) -> SynapseMatrix {
        SynapseMatrix::from_fn(n_pre, n_post, SynapseSign::Excitatory, (0.0, 1.0), w0, |_, _| true)
            .unwrap()
            .with_plastic(true)
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_k(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(kernel_k(-1.0).unwrap(), 0.349564, epsilon = 1e-6);
        let x_peak = -(4.0f64).ln() / 3.0;
        assert_abs_diff_eq!(x_peak, -0.46210, epsilon = 1e-5);
        assert_abs_diff_eq!(kernel_k(x_peak).unwrap(), 0.472470, epsilon = 1e-6);
        assert!(matches!(kernel_k(0.1), Err(Error::Contract(_))));
    }

    #[test]
    fn kernel_unimodal_on_grid() {
        let xs: Vec<f64> = (0..=4000).map(|k| -8.0 + 8.0 * k as f64 / 4000.0).collect();
        let ks: Vec<f64> = xs.iter().map(|&x| kernel_k(x).unwrap()).collect();
        assert!(ks.iter().all(|&k| k >= 0.0));
        let peak = ks
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(ks[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(ks[peak..].windows(2).all(|w| w[1] <= w[0]));
        assert!((xs[peak] + (4.0f64).ln() / 3.0).abs() <= 8.0 / 4000.0);
    }

    #[test]
    fn ltp_examples() {
        let p = StdpParams {
            nu_ltp: 0.01,
            ..StdpParams::default()
        };
        let mut syn = full(3, 2, 0.5);
        let before = syn.clone();
        ltp_update(&mut syn, &spikes(&[], 3), &p).unwrap();
        assert_eq!(syn, before);

        ltp_update(&mut syn, &spikes(&[1], 3), &p).unwrap();
        assert_abs_diff_eq!(syn.weight(1, 0), 0.51, epsilon = 1e-15);
        assert_abs_diff_eq!(syn.weight(1, 1), 0.51, epsilon = 1e-15);
        assert_eq!(syn.row(0), before.row(0));
        assert_eq!(syn.row(2), before.row(2));

        let mut top = full(1, 1, 1.0);
        ltp_update(&mut top, &spikes(&[0], 1), &p).unwrap();
        assert_eq!(top.weight(0, 0), 1.0);

        assert!(ltp_update(&mut top, &spikes(&[], 2), &p).is_err());
    }

    #[test]
    fn history_window() {
        let mut h = GrSpikeHistory::new(100.0);
        h.record(&spikes(&[], 4), 5.0).unwrap();
        assert!(h.is_empty());
        assert_eq!(h.cursor(), 5.0);

        h.record(&spikes(&[0], 4), 10.0).unwrap();
        h.record(&spikes(&[1], 4), 30.0).unwrap();
        h.record(&spikes(&[2], 4), 60.0).unwrap();
        assert_eq!(h.len(), 3);

        h.record(&spikes(&[], 4), 111.0).unwrap();
        assert_eq!(
            h.iter().copied().collect::<Vec<_>>(),
            vec![(1, 30.0), (2, 60.0)]
        );
        assert!(matches!(h.record(&spikes(&[], 4), 100.0), Err(Error::Contract(_))));
    }

    #[test]
    fn ltd_examples() {
        let p = StdpParams {
            nu_ltd: 0.1,
            ..StdpParams::default()
        };
        let map = [0usize, 1];

        // no olive spike: nothing changes
        let mut hist = GrSpikeHistory::new(p.window);
        hist.record(&spikes(&[0], 1), 100.0).unwrap();
        let mut syn = full(1, 2, 0.5);
        ltd_update(&mut syn, &hist, &spikes(&[], 2), 100.0, &p, &map).unwrap();
        assert_eq!(syn.weights(), &[0.5, 0.5]);

        // simultaneous granule spike contributes K(0) = 0
        ltd_update(&mut syn, &hist, &spikes(&[0], 2), 100.0, &p, &map).unwrap();
        assert_eq!(syn.weights(), &[0.5, 0.5]);

        // one granule spike one kernel constant before the olive spike
        let mut hist = GrSpikeHistory::new(p.window);
        hist.record(&spikes(&[0], 1), 100.0 - p.tau_kernel).unwrap();
        hist.record(&spikes(&[], 1), 100.0).unwrap();
        let mut syn = full(1, 2, 0.5);
        ltd_update(&mut syn, &hist, &spikes(&[1], 2), 100.0, &p, &map).unwrap();
        assert_abs_diff_eq!(syn.weight(0, 1) - 0.5, -0.0349564, epsilon = 1e-6);
        assert_eq!(syn.weight(0, 0), 0.5);
    }

    #[test]
    fn ltd_rejects_bad_mapping() {
        let p = StdpParams::default();
        let hist = GrSpikeHistory::new(p.window);
        let mut syn = full(1, 2, 0.5);
        assert!(matches!(
            ltd_update(&mut syn, &hist, &spikes(&[0], 3), 0.0, &p, &[0, 1]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ltd_update(&mut syn, &hist, &spikes(&[0], 2), 0.0, &p, &[0, 5]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn truncation_error_is_bounded_by_window_kernel() {
        // Identical spike trains seen through 200 ms and 400 ms windows differ
        // only by spikes older than 200 ms, each worth at most K(-window/tau).
        let base = StdpParams::default();
        let long = StdpParams {
            window: 400.0,
            ..base
        };
        let mut h200 = GrSpikeHistory::new(base.window);
        let mut h400 = GrSpikeHistory::new(long.window);
        let mut t = 0.0;
        while t <= 400.0 {
            let s = spikes(if (t as usize).is_multiple_of(7) { &[0] } else { &[] }, 1);
            h200.record(&s, t).unwrap();
            h400.record(&s, t).unwrap();
            t += 1.0;
        }
        let t_now = 400.0;
        let mut a = full(1, 1, 1.0);
        let mut b = full(1, 1, 1.0);
        ltd_update(&mut a, &h200, &spikes(&[0], 1), t_now, &base, &[0]).unwrap();
        ltd_update(&mut b, &h400, &spikes(&[0], 1), t_now, &long, &[0]).unwrap();
        let dropped = h400.len() - h200.len();
        let bound = dropped as f64 * base.nu_ltd * kernel_k(-base.window / base.tau_kernel).unwrap();
        let diff = a.weight(0, 0) - b.weight(0, 0);
        assert!(diff >= 0.0 && diff <= bound + 1e-15, "diff {diff} bound {bound}");
        assert!(kernel_k(-4.0).unwrap() <= (-4.0f64).exp());
    }

    proptest! {
        #[test]
        fn ltp_never_decreases_and_ltd_never_increases(
            w0 in 0.0f64..=1.0,
            gr in proptest::collection::vec(any::<bool>(), 6),
            io in proptest::collection::vec(any::<bool>(), 4),
            history in proptest::collection::vec((0usize..6, 0.0f64..200.0), 0..40),
        ) {
            let p = StdpParams::default();
            let mut syn = full(6, 4, w0);
            let before = syn.clone();
            ltp_update(&mut syn, &SpikeVector { fired: gr, t: 0.0 }, &p).unwrap();
            for (a, b) in syn.weights().iter().zip(before.weights()) {
                prop_assert!(a >= b && (0.0..=1.0).contains(a));
            }

            let mut sorted = history.clone();
            sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut hist = GrSpikeHistory::new(p.window);
            for (i, ts) in sorted {
                hist.record(&spikes(&[i], 6), ts).unwrap();
            }
            hist.record(&spikes(&[], 6), 200.0).unwrap();
            let before = syn.clone();
            let io = SpikeVector { fired: io, t: 200.0 };
            ltd_update(&mut syn, &hist, &io, 200.0, &p, &[0, 1, 2, 3]).unwrap();
            for i in 0..6 {
                for j in 0..4 {
                    prop_assert!(syn.weight(i, j) <= before.weight(i, j));
                    prop_assert!((0.0..=1.0).contains(&syn.weight(i, j)));
                    if !io.fired[j] {
                        prop_assert_eq!(syn.weight(i, j).to_bits(), before.weight(i, j).to_bits());
                    }
                }
            }
        }
    }
}
