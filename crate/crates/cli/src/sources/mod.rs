//! Response sources: recorded replay files and live external processes.
//!
//! Both deliver labels only (binary `0`/`1` or a class index); turning
//! response text into labels happens upstream.

pub mod external;
pub mod replay;

pub use external::{ExternalError, ExternalRun, ExternalSource, ExternalSourceConfig, PromptFailure};
pub use replay::{
    counts_from_record, open_replay, read_replay, records_from_trial, write_replay, ReplayError, ReplayRecord,
};
