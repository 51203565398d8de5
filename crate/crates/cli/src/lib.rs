//! File formats, CSV ingestion, export, experiment sweeps and plotting for the
//! `pdbclean` command-line tool.

pub mod experiment;
pub mod export;
pub mod formats;
pub mod ingest;
pub mod plot;
