//! Forward models, sampling masks, phantoms, image metrics and the TV
//! baseline.

mod forward;
mod fourier;
mod mask;
mod metrics;
mod phantom;
mod tv;

pub use forward::{ForwardKind, ForwardModel};
pub use fourier::Fft2;
pub use mask::{make_mask, MaskKind, MaskSpec, SamplingMask};
pub use metrics::{add_noise, default_lambda_grid, logspace, mse, psnr, tune_lambda, TuneResult};
pub use phantom::{make_phantom, PhantomKind, MIN_PHANTOM_SIDE};
pub use tv::{tv_denoise, tv_reconstruct};
