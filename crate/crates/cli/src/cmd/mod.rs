pub mod checkpoint;
pub mod eval;
pub mod export;
pub mod fit;
pub mod metric;
pub mod prep;
pub mod report;
pub mod serve;
