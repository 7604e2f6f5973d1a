//! Secret-key extraction: multidimensional reverse reconciliation, LDPC
//! syndrome decoding and Toeplitz privacy amplification.

pub mod ldpc;
pub mod multidim;
pub mod peg;
pub mod pipeline;
pub mod privacy;

pub use ldpc::{bp_decode, ldpc_syndrome, DecodeResult, LdpcCode};
pub use multidim::{compute_llrs, multidim_map};
pub use pipeline::{key_pipeline, write_key_files, KeyResult, ReconConfig};
pub use privacy::privacy_amplify;
