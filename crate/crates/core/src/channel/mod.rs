//! Link-level numerics: path loss, Rician fading power distribution, the
//! outage-constrained transmission rate and fading sampling.

mod marcum;

pub use marcum::{marcum_q1, marcum_q1_pair};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scenario::{ChannelParams, Point, Scenario};

/// Tolerance certified by [`FadingModel::inv_cdf`] on `|F(z) − ε|`.
pub const INV_CDF_TOL: f64 = 1e-10;

/// Distribution of the small-scale fading power `|ρ|²` (unit mean).
pub trait FadingModel {
    fn cdf(&self, z: f64) -> Result<f64>;

    /// Draws one `|ρ|²` sample.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    /// Quantile function by bracketing on `[0, 1]`, doubling the upper end
    /// until the CDF exceeds `eps`, then bisecting.
    fn inv_cdf(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!(
                "inverse CDF needs a probability in (0, 1), got {eps}"
            )));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.cdf(hi)? < eps {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 {
                return Err(Error::NonConvergence(format!("bracketing quantile {eps}")));
            }
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid)? < eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (f_lo, f_hi) = (self.cdf(lo)?, self.cdf(hi)?);
        let (z, f) = if (f_lo - eps).abs() <= (f_hi - eps).abs() {
            (lo, f_lo)
        } else {
            (hi, f_hi)
        };
        if (f - eps).abs() > INV_CDF_TOL {
            return Err(Error::NonConvergence(format!(
                "quantile {eps}: |F(z) - eps| = {:e}",
                (f - eps).abs()
            )));
        }
        Ok(z)
    }
}

/// Rician fading with factor `K_c`: line-of-sight power `K_c/(K_c+1)` plus
/// circularly symmetric scatter of power `1/(K_c+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadingDist {
    rician_k: f64,
}

impl FadingDist {
    pub fn new(rician_k: f64) -> Result<Self> {
        if !(rician_k >= 0.0 && rician_k.is_finite()) {
            return Err(Error::Domain(format!(
                "Rician factor must be finite and >= 0, got {rician_k}"
            )));
        }
        Ok(Self { rician_k })
    }

    pub fn rician_k(&self) -> f64 {
        self.rician_k
    }

    /// `P(|ρ|² > z)`, evaluated without cancellation in the upper tail.
    pub fn ccdf(&self, z: f64) -> Result<f64> {
        self.marcum_args(z)
            .and_then(|(a, b)| marcum_q1_pair(a, b))
            .map(|(q, _)| q)
    }

    /// Variance of `|ρ|²`, `(1 + 2K_c) / (K_c + 1)²`.
    pub fn variance(&self) -> f64 {
        let k = self.rician_k;
        (1.0 + 2.0 * k) / ((k + 1.0) * (k + 1.0))
    }

    fn marcum_args(&self, z: f64) -> Result<(f64, f64)> {
        if !(z >= 0.0) {
            return Err(Error::Domain(format!("CDF argument must be >= 0, got {z}")));
        }
        let k = self.rician_k;
        Ok(((2.0 * k).sqrt(), (2.0 * (k + 1.0) * z).sqrt()))
    }
}

impl FadingModel for FadingDist {
    /// `F(z) = 1 − Q₁(√(2K_c), √(2(K_c+1)z))`.
    fn cdf(&self, z: f64) -> Result<f64> {
        if z.is_infinite() && z > 0.0 {
            return Ok(1.0);
        }
        let (a, b) = self.marcum_args(z)?;
        marcum_q1_pair(a, b).map(|(_, c)| c)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = self.rician_k;
        let los = (k / (k + 1.0)).sqrt();
        let scatter = (0.5 / (k + 1.0)).sqrt();
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        let re = los + scatter * n1;
        let im = scatter * n2;
        re * re + im * im
    }
}

/// Seeded source of `|ρ|²` samples. One per worker; streams are split by
/// `stream` so every `(sensor, slot)` pair can own an independent sequence.
#[derive(Clone, Debug)]
pub struct FadingSampler {
    dist: FadingDist,
    rng: ChaCha8Rng,
}

impl FadingSampler {
    pub fn new(dist: FadingDist, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { dist, rng }
    }

    pub fn next_sample(&mut self) -> f64 {
        self.dist.sample(&mut self.rng)
    }
}

impl Iterator for FadingSampler {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_sample())
    }
}

/// `n` i.i.d. samples of `|ρ|²`, deterministic in `seed`.
pub fn sample_fading(dist: &FadingDist, seed: u64, n: usize) -> Vec<f64> {
    FadingSampler::new(*dist, seed, 0).take(n).collect()
}

/// Large-scale power gain `β₀ / (H² + ‖q − w‖²)^{α/2}`.
pub fn large_scale_gain(q: &Point, w: &Point, p: &ChannelParams, altitude: f64) -> f64 {
    gain_at(altitude * altitude + (q - w).norm_squared(), p)
}

/// Gain as a function of the squared 3-D distance.
pub(crate) fn gain_at(dist_sq: f64, p: &ChannelParams) -> f64 {
    p.beta0() / dist_sq.powf(0.5 * p.alpha())
}

/// Outage-constrained rate at squared 3-D distance `dist_sq`, bps/Hz.
pub fn rate_at(dist_sq: f64, tx_power: f64, p: &ChannelParams) -> f64 {
    let snr =
        p.outage_quantile() * tx_power * gain_at(dist_sq, p) / (p.noise_power() * p.snr_gap());
    snr.ln_1p() / std::f64::consts::LN_2
}

/// Largest rate whose per-block outage probability equals ε, bps/Hz.
pub fn outage_rate(q: &Point, w: &Point, tx_power: f64, p: &ChannelParams, altitude: f64) -> f64 {
    rate_at(altitude * altitude + (q - w).norm_squared(), tx_power, p)
}

/// Per-block outage probability when transmitting at `rate` bps/Hz.
pub fn outage_prob(
    rate: f64,
    q: &Point,
    w: &Point,
    tx_power: f64,
    p: &ChannelParams,
    altitude: f64,
) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate must be >= 0, got {rate}")));
    }
    let beta = large_scale_gain(q, w, p, altitude);
    let threshold = p.noise_power() * p.snr_gap() * (rate * std::f64::consts::LN_2).exp_m1()
        / (beta * tx_power);
    p.fading().cdf(threshold)
}

/// Instantaneous achievable rate of one fading block, bps/Hz.
pub fn block_rate(rho_sq: f64, beta: f64, tx_power: f64, p: &ChannelParams) -> f64 {
    let snr = rho_sq * beta * tx_power / (p.noise_power() * p.snr_gap());
    snr.ln_1p() / std::f64::consts::LN_2
}

/// `R_k[m]` for every sensor `k` and trajectory point `m` (row-major K×M).
pub fn rate_table(s: &Scenario, points: &[Point]) -> Vec<Vec<f64>> {
    let h = s.mission.altitude;
    s.sensors
        .iter()
        .map(|sn| {
            points
                .iter()
                .map(|q| outage_rate(q, &sn.position, sn.tx_power, &s.channel, h))
                .collect()
        })
        .collect()
}
