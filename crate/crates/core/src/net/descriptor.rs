//! Architecture descriptor stored at the head of every weight container.
//!
//! Field by field:
//!
//! | field               | meaning                                              | default |
//! |---------------------|------------------------------------------------------|---------|
//! | `version`           | descriptor schema version                            | 1       |
//! | `sample_rate`       | audio rate in Hz                                     | 16000   |
//! | `enc_filters`       | linear encoder/decoder filters                       | 64      |
//! | `enc_kernel`        | encoder filter length and hop, samples (4 ms)        | 64      |
//! | `bottleneck`        | residual-path width of every conv block              | 64      |
//! | `hidden`            | inner width of every conv block                      | 128     |
//! | `kernel`            | depthwise kernel size                                | 3       |
//! | `blocks_per_stack`  | blocks per repeated stack, dilations 1, 2, …, 2^(b−1) | 7       |
//! | `speaker_stacks`    | repeated stacks in the speaker-profile network       | 5       |
//! | `fusion_stacks`     | repeated stacks in the fusion network                | 2       |
//! | `extraction_stacks` | repeated stacks in the extraction network            | 3       |
//! | `embed_dim`         | speaker embedding dimension D                        | 64      |
//! | `doa_classes`       | azimuth classes K                                    | 37      |
//! | `lstm_layers`       | localizer LSTM layers                                | 2       |
//! | `lstm_hidden`       | localizer LSTM width                                 | 128     |
//! | `num_speakers`      | speaker slots N                                      | 2       |
//! | `stft_window`       | IPD/ILD analysis window, samples (hop = `enc_kernel`) | 256     |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SAMPLE_RATE;

pub const DESCRIPTOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureDescriptor {
    pub version: u32,
    pub sample_rate: u32,
    pub enc_filters: usize,
    pub enc_kernel: usize,
    pub bottleneck: usize,
    pub hidden: usize,
    pub kernel: usize,
    pub blocks_per_stack: usize,
    pub speaker_stacks: usize,
    pub fusion_stacks: usize,
    pub extraction_stacks: usize,
    pub embed_dim: usize,
    pub doa_classes: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub num_speakers: usize,
    pub stft_window: usize,
}

impl Default for ArchitectureDescriptor {
    fn default() -> Self {
        Self {
            version: DESCRIPTOR_VERSION,
            sample_rate: SAMPLE_RATE,
            enc_filters: 64,
            enc_kernel: 64,
            bottleneck: 64,
            hidden: 128,
            kernel: 3,
            blocks_per_stack: 7,
            speaker_stacks: 5,
            fusion_stacks: 2,
            extraction_stacks: 3,
            embed_dim: 64,
            doa_classes: 37,
            lstm_layers: 2,
            lstm_hidden: 128,
            num_speakers: 2,
            stft_window: 256,
        }
    }
}

impl ArchitectureDescriptor {
    /// A reduced network for fast tests; same topology, narrower layers.
    pub fn tiny() -> Self {
        Self {
            enc_filters: 16,
            enc_kernel: 16,
            bottleneck: 8,
            hidden: 12,
            blocks_per_stack: 3,
            speaker_stacks: 2,
            fusion_stacks: 1,
            extraction_stacks: 1,
            embed_dim: 6,
            doa_classes: 37,
            lstm_layers: 2,
            lstm_hidden: 5,
            stft_window: 32,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != DESCRIPTOR_VERSION {
            return Err(Error::Container(format!(
                "unsupported descriptor version {}",
                self.version
            )));
        }
        let fields = [
            ("sample_rate", self.sample_rate as usize),
            ("enc_filters", self.enc_filters),
            ("enc_kernel", self.enc_kernel),
            ("bottleneck", self.bottleneck),
            ("hidden", self.hidden),
            ("kernel", self.kernel),
            ("blocks_per_stack", self.blocks_per_stack),
            ("speaker_stacks", self.speaker_stacks),
            ("fusion_stacks", self.fusion_stacks),
            ("extraction_stacks", self.extraction_stacks),
            ("embed_dim", self.embed_dim),
            ("doa_classes", self.doa_classes),
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("num_speakers", self.num_speakers),
            ("stft_window", self.stft_window),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Container(format!("descriptor field {name} must be positive")));
        }
        if self.stft_window < self.enc_kernel || self.stft_window % 2 != 0 {
            return Err(Error::Container(
                "stft_window must be even and at least enc_kernel".into(),
            ));
        }
        if self.kernel < 2 {
            return Err(Error::Container("kernel must be at least 2".into()));
        }
        if self.blocks_per_stack > 16 {
            return Err(Error::Container("blocks_per_stack above 16 is not supported".into()));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        self.enc_kernel
    }

    pub fn freq_bins(&self) -> usize {
        self.stft_window / 2 + 1
    }

    /// Width of the per-frame input feature vector: both encoded channels,
    /// then IPD and ILD.
    pub fn feature_dim(&self) -> usize {
        2 * self.enc_filters + 2 * self.freq_bins()
    }

    pub fn dilation(&self, block: usize) -> usize {
        1 << block
    }

    /// Frames of history one stack can see: Σ_b 2^b·(kernel − 1).
    pub fn stack_left_context(&self) -> usize {
        (0..self.blocks_per_stack)
            .map(|b| self.dilation(b) * (self.kernel - 1))
            .sum()
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let d: Self = toml::from_str(text)
            .map_err(|e| Error::Container(format!("bad architecture descriptor: {e}")))?;
        d.validate()?;
        Ok(d)
    }
}
