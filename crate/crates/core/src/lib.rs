//! Cross-situational learning of body-part categories from simulated touch
//! and heard body-part names.
//!
//! The pipeline runs [`skin`] → [`homunculus`] → [`gmm`] → [`mapping`] →
//! [`eval`], and [`sweep`] drives it over a grid of dataset sizes and label
//! noise levels. The guide in `book/` walks through each stage with runnable
//! examples.

pub mod config;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod homunculus;
pub mod label;
pub mod lexicon;
pub mod mapping;
pub mod render;
pub mod seed;
pub mod skin;
pub mod sweep;

pub use error::{Error, Result};
pub use label::BodyPartLabel;

// Book chapters compile and run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/skin.md")]
    mod skin {}
    #[doc = include_str!("../../../book/src/homunculus.md")]
    mod homunculus {}
    #[doc = include_str!("../../../book/src/mixture.md")]
    mod mixture {}
    #[doc = include_str!("../../../book/src/mapping.md")]
    mod mapping {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
