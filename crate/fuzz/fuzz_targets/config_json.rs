//! Config decoding must never panic; resolved configs must be self-consistent.
#![no_main]

use libfuzzer_sys::fuzz_target;
use speclab_core::experiments::{ConfigFile, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ConfigFile::from_json(text) else { return };
    if let Ok(config) = ExperimentConfig::resolve(file) {
        assert!(config.replicates >= 1);
        assert!(config.train.patience <= config.train.max_epochs);
    }
});
