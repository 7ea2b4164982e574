//! Sidelobe nulling for paraboloidal reflectors with a reconfigurable rim.

pub mod config;
pub mod error;
pub mod po_field;
pub mod residual_net;
pub mod resnet_sa;
pub mod vector;
pub mod weights;

pub use error::{Error, Result};
