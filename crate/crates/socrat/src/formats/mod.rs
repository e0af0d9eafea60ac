//! File formats: pronunciation dictionaries, gold alignments, perturbation
//! replays and versioned JSON documents.

pub mod cmudict;
pub mod gold;
pub mod json;
pub mod lexicon;
pub mod perturbations;

pub use cmudict::{load_cmudict, parse_cmudict};
pub use gold::{load_gold, parse_gold};
pub use json::{from_versioned_json, to_versioned_json, Versioned, SCHEMA_VERSION};
pub use lexicon::{load_lexicon, parse_lexicon};
pub use perturbations::{load_perturbation_file, parse_perturbations, render_perturbations, save_perturbation_file};
