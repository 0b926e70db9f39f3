//! Time-series similarity search under dynamic time warping, accelerated by
//! sketching, shingling and weighted minwise hashing.
//!
//! A series is reduced to a bit profile by a sliding random filter, the bit
//! profile is cut into `n`-bit shingles, and the weighted shingle set is
//! hashed into `d` tables. Queries rerank the union of their buckets with a
//! banded DTW protected by the LB_Kim and LB_Keogh lower bounds.

pub mod dtw;
pub mod error;
pub mod index;
pub mod io;
pub mod series;
pub mod shingle;
pub mod sketch;
pub mod wmh;

pub use dtw::{
    build_envelope, dtw_distance, exact_search, lb_keogh, lb_kim, Envelope, Neighbor, PruneStats,
    ScanOrder, SearchOutcome, Searcher, WarpingParams, DEFAULT_BAND,
};
pub use error::{Error, Result};
pub use index::{
    build_index, load_index, query_index, query_with, save_index, QueryOptions, QueryResult,
    QueryStatus, SshIndex, SshParams,
};
pub use io::{load_series_file, write_series_file, Format};
pub use series::{
    extract_subsequences, generate_random_walk, random_walk_dataset, z_normalize, Dataset, Source,
    TimeSeries,
};
pub use shingle::{shingle_sketch, weighted_jaccard, WeightedShingleSet};
pub use sketch::{make_filter, sketch_series, BitSketch, RandomFilter};
pub use wmh::{signature, wmh_one, MinHashSignature};
