//! Synthetic activation sets with known structure.
//!
//! Samples are generated independently, each from its own ChaCha8 stream
//! (`seed`, stream = sample index), so output is reproducible and does not
//! depend on thread scheduling.
//!
//! In blob mode sample `i` belongs to blob `i % K`. Its channel `u` holds
//! the blob's standardized spatial profile: `location[u] + scale[u] * z_s`
//! where `z_s` are the normal quantiles at `(s + 0.5) / Q`, plus independent
//! Gaussian noise of standard deviation `noise_scale`. The spatial mean of a
//! noiseless sample is therefore exactly the blob location.
//!
//! In manifold mode the latent value of sample `i` is spaced evenly over
//! `latent_range`, and every spatial value is Gaussian with mean zero and
//! standard deviation `16^(-t)`, `t` being the latent rescaled to `[0, 1]`.
//! Spread shrinks smoothly as the latent grows, the way noise power shrinks
//! with SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ActivationSet, IngestError, MetadataTable};
use crate::normal;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Blobs,
    Manifold,
}

/// Per-channel location and scale of one blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobCenter {
    pub location: Vec<f64>,
    pub scale: Vec<f64>,
}

impl BlobCenter {
    /// Same location and scale on all `n_channels` channels.
    pub fn uniform(n_channels: usize, location: f64, scale: f64) -> Self {
        Self {
            location: vec![location; n_channels],
            scale: vec![scale; n_channels],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub mode: SynthMode,
    pub n_samples: usize,
    pub n_channels: usize,
    pub spatial_elems: usize,
    #[serde(default)]
    pub blob_centers: Vec<BlobCenter>,
    #[serde(default = "default_latent_range")]
    pub latent_range: [f64; 2],
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_layer")]
    pub layer_name: String,
}

fn default_latent_range() -> [f64; 2] {
    [-10.0, 25.0]
}

fn default_layer() -> String {
    "synthetic".into()
}

impl SynthSpec {
    pub fn blobs(
        n_samples: usize,
        n_channels: usize,
        spatial_elems: usize,
        blob_centers: Vec<BlobCenter>,
        noise_scale: f64,
        seed: u64,
    ) -> Self {
        Self {
            mode: SynthMode::Blobs,
            n_samples,
            n_channels,
            spatial_elems,
            blob_centers,
            latent_range: default_latent_range(),
            noise_scale,
            seed,
            layer_name: default_layer(),
        }
    }

    pub fn manifold(
        n_samples: usize,
        n_channels: usize,
        spatial_elems: usize,
        latent_range: [f64; 2],
        noise_scale: f64,
        seed: u64,
    ) -> Self {
        Self {
            mode: SynthMode::Manifold,
            n_samples,
            n_channels,
            spatial_elems,
            blob_centers: Vec::new(),
            latent_range,
            noise_scale,
            seed,
            layer_name: default_layer(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.n_samples == 0 || self.n_channels == 0 || self.spatial_elems == 0 {
            return bad(format!(
                "dimensions must be positive, got {}x{}x{}",
                self.n_samples, self.n_channels, self.spatial_elems
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad(format!("noise_scale must be finite and nonnegative, got {}", self.noise_scale));
        }
        match self.mode {
            SynthMode::Blobs => {
                if self.blob_centers.is_empty() {
                    return bad("blobs mode needs at least one center".into());
                }
                for (k, c) in self.blob_centers.iter().enumerate() {
                    if c.location.len() != self.n_channels || c.scale.len() != self.n_channels {
                        return bad(format!(
                            "center {k} has {} locations and {} scales for {} channels",
                            c.location.len(),
                            c.scale.len(),
                            self.n_channels
                        ));
                    }
                    if c.location.iter().any(|v| !v.is_finite())
                        || c.scale.iter().any(|v| !(v.is_finite() && *v >= 0.0))
                    {
                        return bad(format!("center {k} has a non-finite location or a negative scale"));
                    }
                }
            }
            SynthMode::Manifold => {
                if !self.blob_centers.is_empty() {
                    return bad("manifold mode takes no blob centers".into());
                }
                let [lo, hi] = self.latent_range;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("latent range needs lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }

    fn latent(&self, i: usize) -> f64 {
        let [lo, hi] = self.latent_range;
        if self.n_samples == 1 {
            return lo;
        }
        let t = i as f64 / (self.n_samples - 1) as f64;
        if i + 1 == self.n_samples {
            hi
        } else {
            lo + t * (hi - lo)
        }
    }
}

/// Ground-truth blob index of each sample in blob mode.
pub fn blob_assignment(n_samples: usize, n_blobs: usize) -> Vec<usize> {
    (0..n_samples).map(|i| i % n_blobs).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<(ActivationSet, MetadataTable), SynthError> {
    spec.validate()?;
    let (n, u, q) = (spec.n_samples, spec.n_channels, spec.spatial_elems);
    let profile: Vec<f64> = (0..q)
        .map(|s| normal::quantile((s as f64 + 0.5) / q as f64).expect("inside (0, 1)"))
        .collect();

    let samples: Vec<Vec<f32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let mut out = Vec::with_capacity(u * q);
            match spec.mode {
                SynthMode::Blobs => {
                    let center = &spec.blob_centers[i % spec.blob_centers.len()];
                    for c in 0..u {
                        for &z in &profile {
                            let eps: f64 = StandardNormal.sample(&mut rng);
                            let v = center.location[c] + center.scale[c] * z + spec.noise_scale * eps;
                            out.push(v as f32);
                        }
                    }
                }
                SynthMode::Manifold => {
                    let [lo, hi] = spec.latent_range;
                    let t = (spec.latent(i) - lo) / (hi - lo);
                    let spread = 16f64.powf(-t);
                    for _ in 0..u * q {
                        let xi: f64 = StandardNormal.sample(&mut rng);
                        let eps: f64 = StandardNormal.sample(&mut rng);
                        out.push((spread * xi + spec.noise_scale * eps) as f32);
                    }
                }
            }
            out
        })
        .collect();

    let set = ActivationSet::new(&spec.layer_name, n, u, q, samples.concat())?;
    let mut meta = MetadataTable::new(n);
    match spec.mode {
        SynthMode::Blobs => {
            let k = spec.blob_centers.len();
            let labels = (0..k).map(|b| format!("blob_{b}")).collect();
            meta.push_categorical("blob_id", labels, blob_assignment(n, k))?;
        }
        SynthMode::Manifold => {
            meta.push_numeric("latent", (0..n).map(|i| spec.latent(i)).collect())?;
        }
    }
    Ok((set, meta))
}
