//! Per-frame channel gains: a mean gain per link times i.i.d. fading.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::system::{ChannelState, SystemParams};
use crate::{Error, Result};

pub const LIGHTSPEED: f64 = 2.998e8;

/// Gain multiplier applied during an injected deep fade.
pub const DEEP_FADE_FACTOR: f64 = 0.01;

/// Floor on a fading draw.
const MIN_FADE: f64 = 1e-12;

fn default_antenna_gain() -> f64 {
    4.11
}
fn default_path_loss_exponent() -> f64 {
    2.8
}
fn default_carrier_hz() -> f64 {
    30e9
}

/// Free-space path loss parameters of one link. The distance has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    #[serde(default = "default_antenna_gain")]
    pub antenna_gain: f64,
    #[serde(default = "default_path_loss_exponent")]
    pub path_loss_exponent: f64,
    #[serde(default = "default_carrier_hz")]
    pub carrier_hz: f64,
    pub distance_m: f64,
}

impl PathLossParams {
    pub fn at_distance(distance_m: f64) -> Self {
        Self {
            antenna_gain: default_antenna_gain(),
            path_loss_exponent: default_path_loss_exponent(),
            carrier_hz: default_carrier_hz(),
            distance_m,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("antenna_gain", self.antenna_gain),
            ("path_loss_exponent", self.path_loss_exponent),
            ("carrier_hz", self.carrier_hz),
            ("distance_m", self.distance_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("path loss {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `A_d * (c / (4 pi f_c d))^d_e`.
pub fn mean_gain(p: &PathLossParams) -> f64 {
    p.antenna_gain * (LIGHTSPEED / (4.0 * std::f64::consts::PI * p.carrier_hz * p.distance_m)).powf(p.path_loss_exponent)
}

/// One value for every ST or one per ST.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSt<T> {
    Uniform(T),
    Each(Vec<T>),
}

impl<T: Clone> PerSt<T> {
    fn expand(&self, n_st: usize) -> Result<Vec<T>> {
        match self {
            PerSt::Uniform(v) => Ok(vec![v.clone(); n_st]),
            PerSt::Each(v) if v.len() == n_st => Ok(v.clone()),
            PerSt::Each(v) => Err(Error::Config(format!("{} per-ST channel entries for {n_st} STs", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    PathLoss { st: PerSt<PathLossParams>, tc: PathLossParams },
    /// Mean received SNR in dB; gains follow from `snr * N0 / p`.
    DirectSnr { st_snr_db: PerSt<f64>, tc_snr_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    None,
    /// Unit-mean exponential power fading, independent per link and frame.
    IidExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub mode: ChannelMode,
    pub fading: Fading,
    /// Per-frame probability that every link drops by [`DEEP_FADE_FACTOR`],
    /// emulating an inter-satellite handover.
    pub deep_fade_prob: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            mode: ChannelMode::DirectSnr {
                st_snr_db: PerSt::Uniform(10.0),
                tc_snr_db: 20.0,
            },
            fading: Fading::IidExponential,
            deep_fade_prob: 0.0,
        }
    }
}

/// Mean gain of every link; dividing by it yields the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanGains {
    pub st: Vec<f64>,
    pub tc: f64,
}

impl MeanGains {
    /// `[h_1 / mean_1, .., h_N / mean_N, h_TC / mean_TC]`.
    pub fn normalize(&self, channel: &ChannelState) -> Vec<f64> {
        let mut v: Vec<f64> = channel.h_st.iter().zip(&self.st).map(|(h, m)| h / m).collect();
        v.push(channel.h_tc / self.tc);
        v
    }

    pub fn as_state(&self, frame: u64) -> ChannelState {
        ChannelState {
            h_st: self.st.clone(),
            h_tc: self.tc,
            frame,
        }
    }
}

impl ChannelConfig {
    pub fn mean_gains(&self, params: &SystemParams) -> Result<MeanGains> {
        if !(0.0..=1.0).contains(&self.deep_fade_prob) {
            return Err(Error::Config(format!("deep_fade_prob must lie in [0, 1], got {}", self.deep_fade_prob)));
        }
        let gains = match &self.mode {
            ChannelMode::PathLoss { st, tc } => {
                let st = st.expand(params.n_st)?;
                for p in st.iter().chain(std::iter::once(tc)) {
                    p.validate()?;
                }
                MeanGains {
                    st: st.iter().map(mean_gain).collect(),
                    tc: mean_gain(tc),
                }
            }
            ChannelMode::DirectSnr { st_snr_db, tc_snr_db } => {
                let st_db = st_snr_db.expand(params.n_st)?;
                if let Some(db) = st_db.iter().chain(std::iter::once(tc_snr_db)).find(|v| !v.is_finite()) {
                    return Err(Error::Config(format!("SNR {db} dB is not finite")));
                }
                MeanGains {
                    st: st_db
                        .iter()
                        .zip(&params.p_st)
                        .map(|(db, p)| db_to_linear(*db) * params.noise / p)
                        .collect(),
                    tc: db_to_linear(*tc_snr_db) * params.noise / params.p_sat,
                }
            }
        };
        if gains.st.iter().chain(std::iter::once(&gains.tc)).any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Config(format!("mean gains out of range: {gains:?}")));
        }
        Ok(gains)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seeded per-frame channel generator.
#[derive(Debug, Clone)]
pub struct ChannelSim {
    means: MeanGains,
    fading: Fading,
    deep_fade_prob: f64,
    rng: ChaCha8Rng,
}

impl ChannelSim {
    pub fn new(cfg: &ChannelConfig, params: &SystemParams, seed: u64) -> Result<Self> {
        Ok(Self {
            means: cfg.mean_gains(params)?,
            fading: cfg.fading,
            deep_fade_prob: cfg.deep_fade_prob,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn means(&self) -> &MeanGains {
        &self.means
    }

    pub fn sample_frame(&mut self, frame: u64) -> ChannelState {
        let mut state = self.means.as_state(frame);
        if self.fading == Fading::IidExponential {
            for h in state.h_st.iter_mut().chain(std::iter::once(&mut state.h_tc)) {
                let gamma: f64 = Exp1.sample(&mut self.rng);
                // Gains must stay positive; Exp1 can return exactly 0.0.
                *h *= gamma.max(MIN_FADE);
            }
        }
        if self.deep_fade_prob > 0.0 && self.rng.random_bool(self.deep_fade_prob) {
            for h in state.h_st.iter_mut().chain(std::iter::once(&mut state.h_tc)) {
                *h *= DEEP_FADE_FACTOR;
            }
        }
        state
    }

    /// Frames `1..=frames`.
    pub fn trace(&mut self, frames: u64) -> ChannelTrace {
        ChannelTrace {
            frames: (1..=frames).map(|t| self.sample_frame(t)).collect(),
        }
    }
}

/// A recorded channel sequence, shared by every algorithm in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub frames: Vec<ChannelState>,
}

impl ChannelTrace {
    pub fn n_st(&self) -> Option<usize> {
        self.frames.first().map(|f| f.n_st())
    }

    /// CSV with header `frame,h_1,..,h_N,h_TC`. Gains are written in
    /// shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.n_st().unwrap_or(0);
        let mut header = vec!["frame".to_string()];
        header.extend((1..=n).map(|i| format!("h_{i}")));
        header.push("h_TC".into());
        w.write_record(&header)?;
        for f in &self.frames {
            let mut rec = vec![f.frame.to_string()];
            rec.extend(f.h_st.iter().map(|h| format!("{h:e}")));
            rec.push(format!("{:e}", f.h_tc));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 3 || &header[0] != "frame" || &header[cols - 1] != "h_TC" {
            return Err(Error::Config(format!("unexpected trace header {header:?}")));
        }
        let mut frames = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("trace row {}: column {i}: {e}", line + 1)))
            };
            let frame = rec[0]
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("trace row {}: frame: {e}", line + 1)))?;
            let h_st = (1..cols - 1).map(parse).collect::<Result<Vec<_>>>()?;
            frames.push(ChannelState::new(h_st, parse(cols - 1)?, frame)?);
        }
        Ok(Self { frames })
    }
}
