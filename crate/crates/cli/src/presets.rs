//! The three imaging modalities and their admissible sampling setups.

use cs_certify_core::bases::BasisKind;
use cs_certify_core::masks::MaskKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    CiCamera,
    RapidMri,
    CodedAperture,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::CiCamera, Modality::RapidMri, Modality::CodedAperture];

    pub fn name(self) -> &'static str {
        match self {
            Modality::CiCamera => "ci_camera",
            Modality::RapidMri => "rapid_mri",
            Modality::CodedAperture => "coded_aperture",
        }
    }

    pub fn parse(s: &str) -> Option<Modality> {
        Modality::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn preset(self) -> ModalityPreset {
        match self {
            Modality::CiCamera => ModalityPreset {
                modality: self,
                sampling: &[BasisKind::WalshHadamard, BasisKind::Bernoulli, BasisKind::Gaussian],
                masks: &[MaskKind::UniformRandom],
                sparsifier: BasisKind::DaubechiesWavelet,
                default_size: 32,
            },
            Modality::RapidMri => ModalityPreset {
                modality: self,
                sampling: &[BasisKind::Fourier],
                masks: &[MaskKind::Radial, MaskKind::UniformRandom, MaskKind::DensityVaried],
                sparsifier: BasisKind::DaubechiesWavelet,
                default_size: 32,
            },
            // The 4-tap wavelet needs an even side while MURA needs a prime
            // one, so coded aperture images are sparse in the pixel basis.
            Modality::CodedAperture => ModalityPreset {
                modality: self,
                sampling: &[BasisKind::MuraCirculant],
                masks: &[MaskKind::DownSample, MaskKind::UniformRandom],
                sparsifier: BasisKind::Identity,
                default_size: 31,
            },
        }
    }
}

/// Sampling bases, masks and sparsifier of one modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModalityPreset {
    pub modality: Modality,
    pub sampling: &'static [BasisKind],
    pub masks: &'static [MaskKind],
    pub sparsifier: BasisKind,
    pub default_size: usize,
}

impl ModalityPreset {
    pub fn allows_sampling(&self, kind: BasisKind) -> bool {
        self.sampling.contains(&kind)
    }

    pub fn allows_mask(&self, kind: MaskKind) -> bool {
        self.masks.contains(&kind)
    }
}
