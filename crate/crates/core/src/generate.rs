//! Deterministic synthetic relations.
//!
//! Keys and payloads come from two independent ChaCha8 streams, so the key
//! sequence of a [`GenSpec`] does not depend on its payload width:
//!
//! * key stream: `ChaCha8Rng::seed_from_u64(seed)`
//! * payload stream: `ChaCha8Rng::seed_from_u64(seed ^ PAYLOAD_STREAM)`
//!
//! Uniform keys are `(next_u64() * key_domain) >> 64` (128-bit multiply).
//! Zipf keys use rejection-inversion sampling (Hörmann and Derflinger), with
//! the same helper functions and constants as Apache Commons
//! `RejectionInversionZipfSampler`; uniforms are `(next_u64() >> 11) * 2^-53`.
//! A sampled rank `k` in `[1, key_domain]` becomes the key `k - 1`, so key 0
//! is the most frequent.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relation::{AttrType, Attribute, Column, Relation, Schema};

/// XOR-ed into the seed to derive the payload stream.
pub const PAYLOAD_STREAM: u64 = 0x5041_594C_4F41_4421;
/// XOR-ed into the seed (together with the column ordinal) for extra key columns.
pub const EXTRA_KEY_STREAM: u64 = 0x4558_5452_414B_4559;

/// Payload width of the calibration tuple: with the 8-byte key, 100 bytes
/// per row.
pub const CALIBRATION_PAYLOAD_WIDTH: usize = 92;

pub const KEY_ATTR: &str = "key";
pub const PAYLOAD_ATTR: &str = "payload";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeyDistribution {
    Uniform,
    /// Zipf with exponent `s > 0`.
    Zipf(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub key_domain: u64,
    pub distribution: KeyDistribution,
    pub payload_width: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn uniform(n: usize, key_domain: u64, payload_width: usize, seed: u64) -> Self {
        Self {
            n,
            key_domain,
            distribution: KeyDistribution::Uniform,
            payload_width,
            seed,
        }
    }

    /// Calibration tuple: `n` uniform keys over a domain of `n`, 100-byte rows.
    pub fn calibration(n: usize, seed: u64) -> Self {
        Self::uniform(n, n.max(1) as u64, CALIBRATION_PAYLOAD_WIDTH, seed)
    }

    pub fn zipf(n: usize, key_domain: u64, s: f64, payload_width: usize, seed: u64) -> Self {
        Self {
            n,
            key_domain,
            distribution: KeyDistribution::Zipf(s),
            payload_width,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.key_domain == 0 {
            return Err(Error::InvalidGenSpec("key_domain must be >= 1".into()));
        }
        if let KeyDistribution::Zipf(s) = self.distribution {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidGenSpec(format!("zipf exponent {s} must be > 0")));
            }
        }
        if self.key_domain > i64::MAX as u64 {
            return Err(Error::InvalidGenSpec("key_domain exceeds Int64 range".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        Schema::new(vec![
            Attribute::new(KEY_ATTR, AttrType::Int64),
            Attribute::new(PAYLOAD_ATTR, AttrType::Bytes(self.payload_width)),
        ])
        .expect("static schema")
    }
}

/// Uniform double in `[0, 1)` from the top 53 bits of one `u64`.
#[inline]
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn uniform_key(rng: &mut impl RngCore, domain: u64) -> i64 {
    ((rng.next_u64() as u128 * domain as u128) >> 64) as i64
}

/// Rejection-inversion Zipf sampler over ranks `1..=n`.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    n: f64,
    exponent: f64,
    h_integral_x1: f64,
    h_integral_n: f64,
    s: f64,
}

impl ZipfSampler {
    pub fn new(n: u64, exponent: f64) -> Self {
        let mut z = Self {
            n: n as f64,
            exponent,
            h_integral_x1: 0.0,
            h_integral_n: 0.0,
            s: 0.0,
        };
        z.h_integral_x1 = z.h_integral(1.5) - 1.0;
        z.h_integral_n = z.h_integral(z.n + 0.5);
        z.s = 2.0 - z.h_integral_inverse(z.h_integral(2.5) - z.h(2.0));
        z
    }

    /// Rank in `1..=n`.
    pub fn sample(&self, rng: &mut impl RngCore) -> u64 {
        loop {
            let u = self.h_integral_n + unit_f64(rng) * (self.h_integral_x1 - self.h_integral_n);
            let x = self.h_integral_inverse(u);
            let mut k = (x + 0.5) as u64;
            if k < 1 {
                k = 1;
            } else if k as f64 > self.n {
                k = self.n as u64;
            }
            let kf = k as f64;
            if kf - x <= self.s || u >= self.h_integral(kf + 0.5) - self.h(kf) {
                return k;
            }
        }
    }

    fn h(&self, x: f64) -> f64 {
        (-self.exponent * x.ln()).exp()
    }

    fn h_integral(&self, x: f64) -> f64 {
        let log_x = x.ln();
        helper2((1.0 - self.exponent) * log_x) * log_x
    }

    fn h_integral_inverse(&self, x: f64) -> f64 {
        let mut t = x * (1.0 - self.exponent);
        if t < -1.0 {
            t = -1.0;
        }
        (helper1(t) * x).exp()
    }
}

/// `ln(1 + x) / x`, with a series near zero.
fn helper1(x: f64) -> f64 {
    if x.abs() > 1e-8 {
        x.ln_1p() / x
    } else {
        1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x))
    }
}

/// `(exp(x) - 1) / x`, with a series near zero.
fn helper2(x: f64) -> f64 {
    if x.abs() > 1e-8 {
        x.exp_m1() / x
    } else {
        1.0 + x * 0.5 * (1.0 + x * (1.0 / 3.0) * (1.0 + 0.25 * x))
    }
}

/// Generates the key sequence of `spec` alone.
pub fn generate_keys(spec: &GenSpec) -> Result<Vec<i64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let keys = match spec.distribution {
        KeyDistribution::Uniform => (0..spec.n)
            .map(|_| uniform_key(&mut rng, spec.key_domain))
            .collect(),
        KeyDistribution::Zipf(s) => {
            let z = ZipfSampler::new(spec.key_domain, s);
            (0..spec.n).map(|_| z.sample(&mut rng) as i64 - 1).collect()
        }
    };
    Ok(keys)
}

/// Relation `(key: Int64, payload: Bytes(payload_width))` described by `spec`.
pub fn generate_relation(spec: &GenSpec) -> Result<Relation> {
    let keys = generate_keys(spec)?;
    let mut payload = vec![0u8; spec.n * spec.payload_width];
    ChaCha8Rng::seed_from_u64(spec.seed ^ PAYLOAD_STREAM).fill_bytes(&mut payload);
    Relation::new(
        spec.schema(),
        vec![
            Column::Int64(keys),
            Column::Bytes {
                width: spec.payload_width,
                data: payload,
            },
        ],
        spec.n,
    )
}

/// [`generate_relation`] plus one uniform `Int64` column per name in
/// `extra`, each drawn over `[0, key_domain)` from its own stream. Names that
/// already exist in the base schema are skipped. Used for multi-key sorts.
pub fn generate_wide_relation(spec: &GenSpec, extra: &[&str]) -> Result<Relation> {
    let mut rel = generate_relation(spec)?;
    for (ordinal, name) in extra.iter().enumerate() {
        if rel.schema().index_of(name).is_some() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(
            spec.seed ^ EXTRA_KEY_STREAM ^ (ordinal as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let col: Vec<i64> = (0..spec.n)
            .map(|_| uniform_key(&mut rng, spec.key_domain))
            .collect();
        rel = rel.with_column(Attribute::new(*name, AttrType::Int64), Column::Int64(col))?;
    }
    Ok(rel)
}
