//! Proximal maps, separable potentials and Parseval filterbanks.

pub mod frame;
pub mod potential;
pub mod prox;

pub use frame::{orthogonalize, ChannelStack, FrameSpec, TightFrame};
pub use potential::{
    huber_prox, huber_value, PotentialKind, PotentialSpec, ProxTable, SeparablePotential,
    DEFAULT_HUBER_MU,
};
pub use prox::{project_l1_ball, prox_linf, soft_threshold};
