//! IO companion to `zebra-core`: on-disk store format, CSV ingestion,
//! synthetic annotated recordings, and the query benchmark harness behind
//! the `zebra` binary.

pub mod bench;
pub mod format;
pub mod ingest;
pub mod synth;

pub use format::StoreDir;
