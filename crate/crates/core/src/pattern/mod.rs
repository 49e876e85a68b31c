//! Programming by example over table cells: fill programs for column
//! autocomplete, variant clustering for entity resolution and repeated
//! deletion detection.

pub mod extraneous;
pub mod normalize;
pub mod program;
pub mod search;

pub use extraneous::{deleted_substring, detect_extraneous, RemovalProposal};
pub use normalize::{cluster_key, detect_normalization, CellChange, CellEditRecord, NormalizationProposal};
pub use program::{CaseMode, Expr, FillProgram, InputRow, TokenClass, MAX_PROGRAM_SIZE};
pub use search::{infer_fill_program, Example, PatternError};
