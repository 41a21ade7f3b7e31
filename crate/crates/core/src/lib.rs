//! Symbol-extended interference alignment for K-user single-antenna
//! interference channels.
//!
//! The pipeline is: sample a [`ChannelSet`](channel::ChannelSet) and a
//! [`GainPlan`](channel::GainPlan), fold them into an
//! [`EffectiveChannel`](channel::EffectiveChannel) under one of the codings,
//! build alignment precoders from the cascade diagonals, then certify or
//! simulate the result.
//!
//! ```
//! use ia_core::{build_effective, build_precoders, generate_channels, generate_gains,
//!               make_config, ChannelModel, Coding, Layer};
//! use ia_core::verify::certify;
//!
//! let cfg = make_config(3, 2, Layer::Double)?; // D = 5, T = 10
//! let ch = generate_channels(3, 10, ChannelModel::Constant, 42)?;
//! let gains = generate_gains(3, 10, 43)?;
//! let eff = build_effective(&ch, Some(&gains), Coding::Double)?;
//! let pre = build_precoders(&eff, &cfg)?;
//! assert!(certify(&eff, &pre)?.pass);
//! # Ok::<(), ia_core::Error>(())
//! ```

pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod link;
pub mod precoder;
pub mod verify;

pub use channel::{
    build_effective, generate_channels, generate_gains, ChannelModel, ChannelSet, Coding,
    EffectiveChannel, GainPlan,
};
pub use error::{Error, Result};
pub use precoder::{
    build_cascades, build_precoders, closed_form_dof, enumerate_tuples, make_config, CascadeSet,
    Dof, ExponentTuple, Layer, PrecoderConfig, PrecoderSet,
};
