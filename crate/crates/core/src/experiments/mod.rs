//! Experiment drivers. Each sweep point is an independent job run on the
//! rayon pool; results are merged in parameter order.

mod critical;
mod decoherence;
mod inflation;
mod lemma1;
mod profile;
mod report;

pub use critical::{
    expansion_terms, run_critical_decoherence, standing_wave_distance, CriticalConfig,
    PairMetrics,
};
pub use decoherence::{run_decoherence, DecoherenceConfig};
pub use inflation::{run_norm_inflation, InflationCase, InflationConfig};
pub use lemma1::{run_lemma1, Lemma1Config};
pub use profile::{ProfileSpec, Shape};
pub use report::{growth_exponent, loglog_slope, ExperimentReport, Series, Verdict};
