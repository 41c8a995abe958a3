//! Causal neural inference: tensors, the weight container, per-frame kernels
//! and the assembled networks. Every forward is frame-by-frame with explicit
//! recurrent state, so a stream can be fed in chunks of any size.

mod container;
mod descriptor;
mod features;
mod frontend;
mod lstm;
mod models;
mod ops;
mod state;
mod tcn;
mod tensor;

pub use container::{
    expected_shapes, gen_weights, gen_weights_to, load_weights, parameter_specs, Init, TensorFile, WeightContainer,
};
pub use descriptor::{ArchitectureDescriptor, DESCRIPTOR_VERSION};
pub use features::{compute_spatial_features, decode, encode, Decoder, Encoder, SpatialFeatures, StftAnalyzer, ILD_EPS};
pub use frontend::{FrameFeatures, Frontend, FrontendState};
pub use lstm::LstmLayer;
pub use models::{
    extraction_forward, fusion_forward, localization_forward, speaker_profile_forward, DoaFrameMatrix, Extractor,
    FusionNet, Localizer, Network, Scratch, SpeakerProfileNet, SpeakerState,
};
pub use ops::{film, Dense, Film};
pub use state::{RingBuffer, StreamState};
pub use tcn::{causal_tcn_block, TcnBlock, TcnStacks};
pub use tensor::Tensor;
