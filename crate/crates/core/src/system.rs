//! Physical model of the satellite-terrestrial offloading system.
//!
//! Every source terminal (ST) sends one task per frame to its access
//! satellite over the 1st hop. The satellite either computes the task itself
//! (SatEC, `x_n = 1`) or forwards it over the 2nd hop to the terrestrial
//! cloud (TC, `x_n = 0`). Bandwidth shares `alpha` are fractions of the
//! satellite's total bandwidth: entries `0..N` are 1st-hop shares, entries
//! `N..2N` are the forwarding shares of the matching ST.
//!
//! All quantities are linear (W, Hz, bit, s, J). Decibels only appear in
//! configuration and reports.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the bandwidth budget `sum(alpha) <= 1`.
pub const BUDGET_TOL: f64 = 1e-9;

/// Offloading location per ST: `true` executes on the satellite edge server,
/// `false` forwards to the terrestrial cloud.
pub type Placement = Vec<bool>;

/// System and task constants. Defaults reproduce the reference simulation
/// setup with `n_st = 5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystemParams")]
pub struct SystemParams {
    pub n_st: usize,
    /// Total satellite bandwidth in Hz.
    pub bandwidth_total: f64,
    /// Transmit power of each ST in W.
    pub p_st: Vec<f64>,
    /// Transmit power of the satellite on the 2nd hop in W.
    pub p_sat: f64,
    /// Receiver noise power in W.
    pub noise: f64,
    /// Task size in bits. 100 MB is taken as 8e8 bits (decimal megabytes).
    pub task_bits: f64,
    /// Computational intensity in cycles/bit.
    pub intensity: f64,
    /// CPU frequency of the satellite edge server in cycles/s.
    pub f_sat: f64,
    /// CPU frequency of the terrestrial cloud in cycles/s.
    pub f_tc: f64,
    /// Computing power draw of the satellite edge server in W.
    pub p_compute_sat: f64,
    /// Latency weight; energy gets `1 - lambda`.
    pub lambda: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::with_n_st(5)
    }
}

impl SystemParams {
    pub fn with_n_st(n_st: usize) -> Self {
        Self {
            n_st,
            bandwidth_total: 800e6,
            p_st: vec![1.0; n_st],
            p_sat: 3.0,
            noise: 1e-9,
            task_bits: 8e8,
            intensity: 10.0,
            f_sat: 0.4e9,
            f_tc: 3e9,
            p_compute_sat: 0.5,
            lambda: 0.5,
        }
    }

    /// Changes the number of STs. Uniform transmit powers are kept uniform;
    /// heterogeneous ones must be reset explicitly.
    pub fn resized(&self, n_st: usize) -> Result<Self> {
        let p = self.p_st[0];
        if self.p_st.iter().any(|&v| v != p) {
            return Err(Error::Config(
                "cannot resize heterogeneous p_st; supply one power per ST".into(),
            ));
        }
        let mut out = self.clone();
        out.n_st = n_st;
        out.p_st = vec![p; n_st];
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_st == 0 {
            return Err(Error::Config("n_st must be at least 1".into()));
        }
        if self.p_st.len() != self.n_st {
            return Err(Error::Config(format!(
                "p_st has {} entries, expected n_st = {}",
                self.p_st.len(),
                self.n_st
            )));
        }
        let scalars = [
            ("bandwidth_total", self.bandwidth_total),
            ("p_sat", self.p_sat),
            ("noise", self.noise),
            ("task_bits", self.task_bits),
            ("intensity", self.intensity),
            ("f_sat", self.f_sat),
            ("f_tc", self.f_tc),
            ("p_compute_sat", self.p_compute_sat),
        ];
        for (name, v) in scalars
            .into_iter()
            .chain(self.p_st.iter().map(|&p| ("p_st", p)))
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }

    /// Seconds the satellite server needs to compute one task (`kL/f1`).
    pub fn sat_compute_latency(&self) -> f64 {
        self.intensity * self.task_bits / self.f_sat
    }

    /// Seconds the cloud needs to compute one task (`kL/f0`).
    pub fn tc_compute_latency(&self) -> f64 {
        self.intensity * self.task_bits / self.f_tc
    }

    pub fn sat_compute_energy(&self) -> f64 {
        self.p_compute_sat * self.sat_compute_latency()
    }

    fn weighted(&self, cost: PathCost) -> f64 {
        self.lambda * cost.latency + (1.0 - self.lambda) * cost.energy
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PowerSpec {
    Uniform(f64),
    PerSt(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSystemParams {
    n_st: usize,
    bandwidth_total: f64,
    p_st: Option<PowerSpec>,
    p_sat: f64,
    noise: f64,
    task_bits: f64,
    intensity: f64,
    f_sat: f64,
    f_tc: f64,
    p_compute_sat: f64,
    lambda: f64,
}

impl Default for RawSystemParams {
    fn default() -> Self {
        let d = SystemParams::default();
        Self {
            n_st: d.n_st,
            bandwidth_total: d.bandwidth_total,
            p_st: None,
            p_sat: d.p_sat,
            noise: d.noise,
            task_bits: d.task_bits,
            intensity: d.intensity,
            f_sat: d.f_sat,
            f_tc: d.f_tc,
            p_compute_sat: d.p_compute_sat,
            lambda: d.lambda,
        }
    }
}

impl TryFrom<RawSystemParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawSystemParams) -> Result<Self> {
        let p_st = match raw.p_st {
            None => vec![1.0; raw.n_st],
            Some(PowerSpec::Uniform(p)) => vec![p; raw.n_st],
            Some(PowerSpec::PerSt(v)) => v,
        };
        let params = SystemParams {
            n_st: raw.n_st,
            bandwidth_total: raw.bandwidth_total,
            p_st,
            p_sat: raw.p_sat,
            noise: raw.noise,
            task_bits: raw.task_bits,
            intensity: raw.intensity,
            f_sat: raw.f_sat,
            f_tc: raw.f_tc,
            p_compute_sat: raw.p_compute_sat,
            lambda: raw.lambda,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Channel power gains observed in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// 1st-hop gain of each ST.
    pub h_st: Vec<f64>,
    /// 2nd-hop gain between satellite and cloud.
    pub h_tc: f64,
    pub frame: u64,
}

impl ChannelState {
    pub fn new(h_st: Vec<f64>, h_tc: f64, frame: u64) -> Result<Self> {
        let state = Self { h_st, h_tc, frame };
        state.validate()?;
        Ok(state)
    }

    pub fn n_st(&self) -> usize {
        self.h_st.len()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self
            .h_st
            .iter()
            .chain(std::iter::once(&self.h_tc))
            .find(|h| !(h.is_finite() && **h > 0.0))
        {
            return Err(Error::Domain(format!(
                "channel gains must be positive and finite, got {h} at frame {}",
                self.frame
            )));
        }
        Ok(())
    }

    fn check_against(&self, params: &SystemParams) -> Result<()> {
        if self.h_st.len() != params.n_st {
            return Err(Error::Argument(format!(
                "channel has {} STs, system has {}",
                self.h_st.len(),
                params.n_st
            )));
        }
        Ok(())
    }
}

/// A complete per-frame decision: placement, bandwidth split and its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadDecision {
    pub x: Placement,
    /// Length `2N`; forwarding shares of satellite-executed STs are zero.
    pub alpha: Vec<f64>,
    pub cost: f64,
}

/// Latency (s) and energy (J) of one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCost {
    pub latency: f64,
    pub energy: f64,
}

/// `log2(1 + p_n h_n / N0)`, bits/s/Hz on the 1st hop of `st`.
pub fn first_hop_efficiency(params: &SystemParams, channel: &ChannelState, st: usize) -> f64 {
    (params.p_st[st] * channel.h_st[st] / params.noise).ln_1p() / std::f64::consts::LN_2
}

/// `log2(1 + p_SAT h_TC / N0)`, bits/s/Hz on the 2nd hop.
pub fn second_hop_efficiency(params: &SystemParams, channel: &ChannelState) -> f64 {
    (params.p_sat * channel.h_tc / params.noise).ln_1p() / std::f64::consts::LN_2
}

fn check_share(share: f64, what: &str) -> Result<()> {
    if !(share > 0.0 && share <= 1.0 + BUDGET_TOL) {
        return Err(Error::Domain(format!(
            "{what} bandwidth share must lie in (0, 1], got {share}"
        )));
    }
    Ok(())
}

fn check_st(params: &SystemParams, channel: &ChannelState, st: usize) -> Result<()> {
    channel.check_against(params)?;
    if st >= params.n_st {
        return Err(Error::Argument(format!("ST index {st} out of range 0..{}", params.n_st)));
    }
    Ok(())
}

/// 1st-hop rate of `st` in bit/s for bandwidth share `share`.
pub fn rate_first_hop(
    params: &SystemParams,
    channel: &ChannelState,
    st: usize,
    share: f64,
) -> Result<f64> {
    check_st(params, channel, st)?;
    check_share(share, "1st-hop")?;
    Ok(share * params.bandwidth_total * first_hop_efficiency(params, channel, st))
}

/// 2nd-hop forwarding rate in bit/s for bandwidth share `share`.
pub fn rate_second_hop(params: &SystemParams, channel: &ChannelState, share: f64) -> Result<f64> {
    check_share(share, "2nd-hop")?;
    Ok(share * params.bandwidth_total * second_hop_efficiency(params, channel))
}

/// Latency and energy of executing `st`'s task on the satellite.
pub fn cost_sat_path(
    params: &SystemParams,
    channel: &ChannelState,
    st: usize,
    share: f64,
) -> Result<PathCost> {
    let upload = params.task_bits / rate_first_hop(params, channel, st, share)?;
    let compute = params.sat_compute_latency();
    Ok(PathCost {
        latency: upload + compute,
        energy: params.p_st[st] * upload + params.p_compute_sat * compute,
    })
}

/// Latency and energy of forwarding `st`'s task to the cloud. Cloud compute
/// energy is not accounted.
pub fn cost_tc_path(
    params: &SystemParams,
    channel: &ChannelState,
    st: usize,
    share: f64,
    fwd_share: f64,
) -> Result<PathCost> {
    let upload = params.task_bits / rate_first_hop(params, channel, st, share)?;
    let forward = params.task_bits / rate_second_hop(params, channel, fwd_share)?;
    Ok(PathCost {
        latency: upload + forward + params.tc_compute_latency(),
        energy: params.p_st[st] * upload + params.p_sat * forward,
    })
}

/// Total latency and total energy of a decision, summed over STs.
pub fn cost_totals(
    params: &SystemParams,
    channel: &ChannelState,
    x: &[bool],
    alpha: &[f64],
) -> Result<PathCost> {
    channel.check_against(params)?;
    let n = params.n_st;
    if x.len() != n || alpha.len() != 2 * n {
        return Err(Error::Argument(format!(
            "expected x of length {n} and alpha of length {}, got {} and {}",
            2 * n,
            x.len(),
            alpha.len()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::Domain(format!("bandwidth shares must be nonnegative, got {a}")));
    }
    let budget: f64 = alpha.iter().sum();
    if budget > 1.0 + BUDGET_TOL {
        return Err(Error::Domain(format!("bandwidth shares sum to {budget} > 1")));
    }
    let mut total = PathCost { latency: 0.0, energy: 0.0 };
    for (st, &on_sat) in x.iter().enumerate() {
        let c = if on_sat {
            cost_sat_path(params, channel, st, alpha[st])?
        } else {
            cost_tc_path(params, channel, st, alpha[st], alpha[n + st])?
        };
        total.latency += c.latency;
        total.energy += c.energy;
    }
    Ok(total)
}

/// Weighted offloading cost `F(x, alpha)`.
pub fn eval_cost(
    params: &SystemParams,
    channel: &ChannelState,
    x: &[bool],
    alpha: &[f64],
) -> Result<f64> {
    Ok(params.weighted(cost_totals(params, channel, x, alpha)?))
}
